/*!
Canonical serialization of value term graphs.

A value is serialized as a list of items `[u_{n-1}, ..., u_0]`, one per
vertex of the *compressed* (maximally shared) graph.  The item at list
position `i` has address `n-1-i`; every address occurring inside an item
refers to an item with a strictly smaller address, so the list order is a
reverse topological sort.  The root is the first item.  Ties are broken by
first visit of a deterministic left-to-right depth-first traversal, and
compression is canonical, so two values serialize to byte-identical lists
iff they are bisimilar.

Items carry the canonical fully mu-expanded rendering of their vertex's
normal type; `deserialize` validates addresses, labels, and type strings
against the expected type, reconstructing the encoded sharing exactly.
`deserialize_or_default` is the total variant, falling back to the canonical
default inhabitant of the target type.
*/

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::eval::{Env, Evaluator, Semantics};
use crate::heap::{Heap, Label, ValueRef, VertexId};
use crate::term::TTerm;
use crate::types::{GroundType, Ty};

/// One serialized vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VtgItem {
    Unit,
    Inj { j: u8, ty: String, addr: usize },
    Pair { ty: String, fst: usize, snd: usize },
    Mu { ty: String, addr: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepresentationError {
    #[error("RepresentationError: empty item list")]
    Empty,
    #[error("RepresentationError: item at address {item} references address {addr}, which is not strictly smaller")]
    DanglingAddress { item: usize, addr: usize },
    #[error("RepresentationError: address {addr} expected {expected}, found {found}")]
    TypeMismatch {
        addr: usize,
        expected: String,
        found: String,
    },
    #[error("RepresentationError: {count} items are unreachable from the root")]
    UnreachableItems { count: usize },
    #[error("RepresentationError: malformed JSON: {0}")]
    Json(String),
}

/// How to treat items not reachable from the root.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strictness {
    /// Reject dead items.
    Strict,
    /// Ignore them.
    Lenient,
}

/// Serialize a value: compress, then emit items in reverse topological
/// order (root first, addresses descending).
pub fn serialize(heap: &mut Heap, v: &ValueRef) -> Vec<VtgItem> {
    let w = heap.compress(v);
    let order = heap.postorder(w.root);
    let addr_of: HashMap<VertexId, usize> =
        order.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut items: Vec<VtgItem> = order
        .iter()
        .map(|&u| {
            let vx = heap.get(u);
            match vx.label {
                Label::Unit => VtgItem::Unit,
                Label::Inj(j) => VtgItem::Inj {
                    j,
                    ty: vx.tag.canonical(),
                    addr: addr_of[&vx.children[0]],
                },
                Label::Pair => VtgItem::Pair {
                    ty: vx.tag.canonical(),
                    fst: addr_of[&vx.children[0]],
                    snd: addr_of[&vx.children[1]],
                },
                Label::Con => VtgItem::Mu {
                    ty: vx.tag.canonical(),
                    addr: addr_of[&vx.children[0]],
                },
            }
        })
        .collect();
    items.reverse();
    items
}

/// Reconstruct a value of type `gamma` from an item list.
pub fn deserialize(
    heap: &mut Heap,
    gamma: &GroundType,
    items: &[VtgItem],
    strictness: Strictness,
) -> Result<ValueRef, RepresentationError> {
    let n = items.len();
    if n == 0 {
        return Err(RepresentationError::Empty);
    }
    let item_at = |addr: usize| &items[n - 1 - addr];

    // Address discipline: strictly decreasing references.
    for (i, it) in items.iter().enumerate() {
        let own = n - 1 - i;
        let refs: Vec<usize> = match it {
            VtgItem::Unit => vec![],
            VtgItem::Inj { addr, .. } | VtgItem::Mu { addr, .. } => vec![*addr],
            VtgItem::Pair { fst, snd, .. } => vec![*fst, *snd],
        };
        for r in refs {
            if r >= own {
                return Err(RepresentationError::DanglingAddress { item: own, addr: r });
            }
        }
    }

    // Assign types from the root down; each address gets exactly one type.
    let root_addr = n - 1;
    let norm = gamma.norm();
    let mut assigned: HashMap<usize, GroundType> = HashMap::new();
    let mut stack = vec![(root_addr, norm.clone())];
    while let Some((addr, expect)) = stack.pop() {
        if let Some(prev) = assigned.get(&addr) {
            if *prev != expect {
                return Err(RepresentationError::TypeMismatch {
                    addr,
                    expected: expect.canonical(),
                    found: prev.canonical(),
                });
            }
            continue;
        }
        let mismatch = |found: String| RepresentationError::TypeMismatch {
            addr,
            expected: expect.canonical(),
            found,
        };
        let check_ty = |ty: &str| {
            if ty != expect.canonical() {
                Err(mismatch(ty.to_string()))
            } else {
                Ok(())
            }
        };
        match (item_at(addr), &expect) {
            (VtgItem::Unit, GroundType::Unit) => {}
            (VtgItem::Inj { j, ty, addr: a }, GroundType::Sum(l, r)) => {
                check_ty(ty)?;
                let side = if *j == 1 { l } else { r };
                stack.push((*a, (**side).clone()));
            }
            (VtgItem::Pair { ty, fst, snd }, GroundType::Prod(l, r)) => {
                check_ty(ty)?;
                stack.push((*fst, (**l).clone()));
                stack.push((*snd, (**r).clone()));
            }
            (VtgItem::Mu { ty, addr: a }, GroundType::Mu(p)) => {
                check_ty(ty)?;
                stack.push((*a, p.apply(&expect)));
            }
            (it, _) => {
                let kind = match it {
                    VtgItem::Unit => "unit item",
                    VtgItem::Inj { .. } => "injection item",
                    VtgItem::Pair { .. } => "pair item",
                    VtgItem::Mu { .. } => "constructor item",
                };
                return Err(mismatch(kind.to_string()));
            }
        }
        assigned.insert(addr, expect);
    }

    if strictness == Strictness::Strict && assigned.len() != n {
        return Err(RepresentationError::UnreachableItems {
            count: n - assigned.len(),
        });
    }

    // Allocate bottom-up (addresses ascending ensures children exist).
    let mut vertex_of: HashMap<usize, VertexId> = HashMap::new();
    let mut addrs: Vec<usize> = assigned.keys().copied().collect();
    addrs.sort_unstable();
    for addr in addrs {
        let ty = assigned[&addr].clone();
        let id = match item_at(addr) {
            VtgItem::Unit => heap.alloc_unit(),
            VtgItem::Inj { j, addr: a, .. } => heap.alloc_inj(*j, ty, vertex_of[a]),
            VtgItem::Pair { fst, snd, .. } => heap.alloc_pair(ty, vertex_of[fst], vertex_of[snd]),
            VtgItem::Mu { addr: a, .. } => heap.alloc_con(ty, vertex_of[a]),
        };
        vertex_of.insert(addr, id);
    }
    Ok(heap.value(vertex_of[&root_addr], norm))
}

/// Total deserializer: any representation error yields the canonical
/// default inhabitant of `gamma`.
pub fn deserialize_or_default(
    heap: &mut Heap,
    gamma: &GroundType,
    items: &[VtgItem],
    strictness: Strictness,
) -> ValueRef {
    match deserialize(heap, gamma, items, strictness) {
        Ok(v) => v,
        Err(_) => heap
            .default_value(gamma)
            .expect("deserialization target type must be inhabited"),
    }
}

// --- JSON wire form ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireItem {
    kind: String,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    ty: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    addr: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    addr1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    addr2: Option<usize>,
}

pub fn to_json(items: &[VtgItem]) -> String {
    let wire: Vec<WireItem> = items
        .iter()
        .map(|it| match it {
            VtgItem::Unit => WireItem {
                kind: "unit".into(),
                ty: None,
                addr: None,
                addr1: None,
                addr2: None,
            },
            VtgItem::Inj { j, ty, addr } => WireItem {
                kind: format!("inj{}", j),
                ty: Some(ty.clone()),
                addr: Some(*addr),
                addr1: None,
                addr2: None,
            },
            VtgItem::Pair { ty, fst, snd } => WireItem {
                kind: "pair".into(),
                ty: Some(ty.clone()),
                addr: None,
                addr1: Some(*fst),
                addr2: Some(*snd),
            },
            VtgItem::Mu { ty, addr } => WireItem {
                kind: "mu".into(),
                ty: Some(ty.clone()),
                addr: Some(*addr),
                addr1: None,
                addr2: None,
            },
        })
        .collect();
    serde_json::to_string_pretty(&wire).expect("serialization cannot fail")
}

pub fn from_json(s: &str) -> Result<Vec<VtgItem>, RepresentationError> {
    let wire: Vec<WireItem> =
        serde_json::from_str(s).map_err(|e| RepresentationError::Json(e.to_string()))?;
    let bad = |msg: &str| RepresentationError::Json(msg.to_string());
    wire.into_iter()
        .map(|w| match w.kind.as_str() {
            "unit" => Ok(VtgItem::Unit),
            "inj1" | "inj2" => Ok(VtgItem::Inj {
                j: if w.kind == "inj1" { 1 } else { 2 },
                ty: w.ty.ok_or_else(|| bad("injection item without type"))?,
                addr: w.addr.ok_or_else(|| bad("injection item without addr"))?,
            }),
            "pair" => Ok(VtgItem::Pair {
                ty: w.ty.ok_or_else(|| bad("pair item without type"))?,
                fst: w.addr1.ok_or_else(|| bad("pair item without addr1"))?,
                snd: w.addr2.ok_or_else(|| bad("pair item without addr2"))?,
            }),
            "mu" => Ok(VtgItem::Mu {
                ty: w.ty.ok_or_else(|| bad("mu item without type"))?,
                addr: w.addr.ok_or_else(|| bad("mu item without addr"))?,
            }),
            other => Err(bad(&format!("unknown item kind {:?}", other))),
        })
        .collect()
}

// --- Factored evaluation pipeline ----------------------------------------

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Representation(#[from] RepresentationError),
    #[error("{0}")]
    Eval(#[from] crate::eval::EvalError),
    #[error("pipeline result is not bisimilar to direct evaluation")]
    Mismatch,
}

/// Run `f` through a serialize/deserialize boundary on both sides and check
/// the result against direct DP evaluation: `deserialize . eval . serialize`
/// agrees with `eval` up to bisimilarity.
pub fn factor_pipeline(
    heap: &mut Heap,
    f: &TTerm,
    v: &ValueRef,
) -> Result<ValueRef, PipelineError> {
    let Ty::Arrow(dom, cod) = &f.ty else {
        return Err(PipelineError::Eval(crate::eval::EvalError::Stuck(
            "pipeline function must be an arrow".into(),
        )));
    };
    let (dom, cod) = (dom.norm(), cod.norm());

    let wire_in = serialize(heap, v);
    let v2 = deserialize(heap, &dom, &wire_in, Strictness::Strict)?;

    let mut ev = Evaluator::new(heap, Semantics::Dp);
    let r = ev.apply(f, v2, &mut Env::new())?;
    let wire_out = serialize(heap, &r);
    let out = deserialize(heap, &cod, &wire_out, Strictness::Strict)?;

    let mut ev = Evaluator::new(heap, Semantics::Dp);
    let direct = ev.apply(f, v.clone(), &mut Env::new())?;
    if !heap.bisimilar(&out, &direct) {
        return Err(PipelineError::Mismatch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeral_roundtrip() {
        let mut h = Heap::new();
        let v = h.numeral(3);
        let items = serialize(&mut h, &v);
        // 3 = Succ^3 Zero: 4 con + 4 inj + 1 unit = 9 items.
        assert_eq!(items.len(), 9);
        assert!(matches!(items[0], VtgItem::Mu { .. }));
        assert!(matches!(items[items.len() - 1], VtgItem::Unit));
        let w = deserialize(&mut h, &GroundType::nat(), &items, Strictness::Strict).unwrap();
        assert!(h.bisimilar(&v, &w));
        assert_eq!(h.size(&w), h.compressed_size(&v));
    }

    #[test]
    fn canonical_across_sharing() {
        let mut h = Heap::new();
        // The same numeral built twice serializes identically.
        let a = h.numeral(5);
        let b = h.numeral(5);
        assert_eq!(serialize(&mut h, &a), serialize(&mut h, &b));
        let c = h.numeral(6);
        assert_ne!(serialize(&mut h, &a), serialize(&mut h, &c));
    }

    #[test]
    fn json_roundtrip() {
        let mut h = Heap::new();
        let v = h.numeral(2);
        let items = serialize(&mut h, &v);
        let json = to_json(&items);
        assert_eq!(from_json(&json).unwrap(), items);
    }

    #[test]
    fn rejects_malformed() {
        let mut h = Heap::new();
        let nat = GroundType::nat();
        // Wrong root type.
        let items = vec![VtgItem::Unit];
        assert!(matches!(
            deserialize(&mut h, &nat, &items, Strictness::Strict),
            Err(RepresentationError::TypeMismatch { .. })
        ));
        // Forward reference.
        let items = vec![
            VtgItem::Mu {
                ty: nat.canonical(),
                addr: 1,
            },
            VtgItem::Unit,
        ];
        assert!(matches!(
            deserialize(&mut h, &nat, &items, Strictness::Strict),
            Err(RepresentationError::DanglingAddress { .. })
        ));
        assert!(matches!(
            deserialize(&mut h, &nat, &[], Strictness::Strict),
            Err(RepresentationError::Empty)
        ));
        // The total wrapper falls back to the default inhabitant.
        let d = deserialize_or_default(&mut h, &nat, &[], Strictness::Strict);
        assert_eq!(h.read_numeral(&d), Some(0));
    }

    #[test]
    fn unreachable_items_strict_vs_lenient() {
        let mut h = Heap::new();
        let v = h.numeral(0);
        let mut items = serialize(&mut h, &v);
        // Append a dead unit item *below* everything: re-address by
        // prepending at the low end, i.e. push at the back and shift refs.
        for it in items.iter_mut() {
            match it {
                VtgItem::Inj { addr, .. } | VtgItem::Mu { addr, .. } => *addr += 1,
                VtgItem::Pair { fst, snd, .. } => {
                    *fst += 1;
                    *snd += 1;
                }
                VtgItem::Unit => {}
            }
        }
        items.push(VtgItem::Unit);
        assert!(matches!(
            deserialize(&mut h, &GroundType::nat(), &items, Strictness::Strict),
            Err(RepresentationError::UnreachableItems { count: 1 })
        ));
        let w = deserialize(&mut h, &GroundType::nat(), &items, Strictness::Lenient).unwrap();
        assert_eq!(h.read_numeral(&w), Some(0));
    }
}
