/*!
Normal and safe spans of values, and residual size.

The *normal span* of a value at a ramified type is the rooted subgraph that
the normal part of the type can "see": the whole reachable graph at a normal
type, nothing at a safe type, and for a mixed sum or product, the root vertex
plus recursively the spans of the live components, with the connecting edges
included whenever the component's span is nonempty.  The *safe span* is dual.

The *residual size* of a typed term under an environment is the size of the
normal span of its value, disjointly united with the part of the value lying
outside both the normal span and the safe spans of the term's free variables
— the part of the output the computation is entitled to have built itself.
For a bare variable the residual size collapses to the size of its normal
span: the whole value at a normal type, zero at a safe type.
*/

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::{eval, Env, EvalError, Meter, Semantics};
use crate::heap::{Heap, Label, ValueRef, VertexId};
use crate::term::TTerm;
use crate::types::GroundType;

/// A rooted span: a subset of vertices and (port-labeled) edges of a value
/// graph.  `root` is `None` exactly when the span is empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub root: Option<VertexId>,
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeSet<(VertexId, u8, VertexId)>,
}

impl Span {
    pub fn empty() -> Span {
        Span::default()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Constructor vertices in the span.
    pub fn size(&self, heap: &Heap) -> u64 {
        self.vertices
            .iter()
            .filter(|&&u| heap.get(u).label == Label::Con)
            .count() as u64
    }

    fn absorb(&mut self, other: Span) {
        self.vertices.extend(other.vertices);
        self.edges.extend(other.edges);
    }
}

/// The full reachable subgraph as a span.
fn full_span(heap: &Heap, root: VertexId) -> Span {
    let vertices: BTreeSet<VertexId> = heap.postorder(root).into_iter().collect();
    let mut edges = BTreeSet::new();
    for &u in &vertices {
        for (i, &c) in heap.get(u).children.iter().enumerate() {
            edges.insert((u, (i + 1) as u8, c));
        }
    }
    Span {
        root: Some(root),
        vertices,
        edges,
    }
}

/// Which half of the ramification a span tracks.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Normal,
    Safe,
}

fn span_at(heap: &Heap, gamma: &GroundType, root: VertexId, mode: Mode) -> Span {
    let keep_all = match mode {
        Mode::Normal => gamma.is_normal(),
        Mode::Safe => gamma.is_safe(),
    };
    let drop_all = match mode {
        Mode::Normal => gamma.is_safe(),
        Mode::Safe => gamma.is_normal(),
    };
    if keep_all {
        return full_span(heap, root);
    }
    if drop_all {
        return Span::empty();
    }
    // Mixed type: keep the root, recurse into components, connect to the
    // nonempty component spans.
    let vx = heap.get(root);
    let mut span = Span {
        root: Some(root),
        vertices: BTreeSet::from([root]),
        edges: BTreeSet::new(),
    };
    match (gamma, vx.label) {
        (GroundType::Sum(a, b), Label::Inj(j)) => {
            let side = if j == 1 { a } else { b };
            let child = vx.children[0];
            let sub = span_at(heap, side, child, mode);
            if !sub.is_empty() {
                span.edges.insert((root, 1, child));
            }
            span.absorb(sub);
        }
        (GroundType::Prod(a, b), Label::Pair) => {
            for (i, side) in [a, b].into_iter().enumerate() {
                let child = vx.children[i];
                let sub = span_at(heap, side, child, mode);
                if !sub.is_empty() {
                    span.edges.insert((root, (i + 1) as u8, child));
                }
                span.absorb(sub);
            }
        }
        _ => unreachable!("mixed types are sums/products of marked base types"),
    }
    span
}

/// Normal span of a value at a (possibly safe-marked) type.
pub fn normal_span(heap: &Heap, gamma: &GroundType, root: VertexId) -> Span {
    span_at(heap, gamma, root, Mode::Normal)
}

/// Safe span of a value at a (possibly safe-marked) type.
pub fn safe_span(heap: &Heap, gamma: &GroundType, root: VertexId) -> Span {
    span_at(heap, gamma, root, Mode::Safe)
}

/// A typing judgment paired with the data needed to evaluate it: the
/// ramified context and a checked term.
#[derive(Clone, Debug)]
pub struct Judgment {
    /// Context entries carry the ramified (safe-marked) types.
    pub ctx: Vec<(String, GroundType)>,
    pub term: TTerm,
}

impl Judgment {
    /// The ramified result type.
    pub fn result_ty(&self) -> &GroundType {
        self.term.ground_ty()
    }
}

/// Residual size of `judgment` under environment `theta` (which must bind
/// every context variable), evaluating top-down.  Also returns the meter.
pub fn residual_size(
    heap: &mut Heap,
    judgment: &Judgment,
    theta: &Env,
    semantics: Semantics,
) -> Result<(u64, Meter), EvalError> {
    let mut env = theta.clone();
    let (v, meter) = eval(heap, semantics, &judgment.term, &mut env)?;
    let ns = normal_span(heap, judgment.result_ty(), v.root);
    let reach: BTreeSet<VertexId> = heap.postorder(v.root).into_iter().collect();

    // Safe spans of the free variables' values, at their declared types.
    let fvs = free_vars_of(&judgment.term);
    let mut ss: BTreeSet<VertexId> = BTreeSet::new();
    for (x, gamma) in &judgment.ctx {
        if !fvs.contains(x) {
            continue;
        }
        let val = theta
            .lookup(x)
            .ok_or_else(|| EvalError::Stuck(format!("environment misses {}", x)))?;
        ss.extend(safe_span(heap, gamma, val.root).vertices);
    }

    let count = |set: &BTreeSet<VertexId>| {
        set.iter()
            .filter(|&&u| heap.get(u).label == Label::Con)
            .count() as u64
    };
    let nonnormal: BTreeSet<VertexId> = reach.difference(&ns.vertices).copied().collect();
    let residual: BTreeSet<VertexId> = nonnormal.difference(&ss).copied().collect();
    Ok((count(&ns.vertices) + count(&residual), meter))
}

/// Residual size of a bare variable: the size of its normal span.
pub fn residual_of_var(heap: &Heap, gamma: &GroundType, v: &ValueRef) -> u64 {
    normal_span(heap, gamma, v.root).size(heap)
}

fn free_vars_of(t: &TTerm) -> BTreeSet<String> {
    use crate::term::TNode;
    fn go(t: &TTerm, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match &t.node {
            TNode::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            TNode::Lam(x, _, b) => {
                bound.push(x.clone());
                go(b, bound, out);
                bound.pop();
            }
            TNode::App(a, b) | TNode::Pair(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            TNode::Unit => {}
            TNode::Proj(_, e)
            | TNode::Inj(_, e)
            | TNode::Con(_, e)
            | TNode::Des(_, e)
            | TNode::SafeCon(_, e)
            | TNode::SafeDes(_, e)
            | TNode::ToSafe(e)
            | TNode::ToNorm(e)
            | TNode::Cs(_, e) => go(e, bound, out),
            TNode::Case(s, x1, e1, x2, e2) => {
                go(s, bound, out);
                bound.push(x1.clone());
                go(e1, bound, out);
                bound.pop();
                bound.push(x2.clone());
                go(e2, bound, out);
                bound.pop();
            }
            TNode::Fold(_, f, e) => {
                go(f, bound, out);
                go(e, bound, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Build the assembly value `<v1, ..., vn, v>` (right-nested pairs) together
/// with its ramified type, for span comparisons across environments.
pub fn assemble(
    heap: &mut Heap,
    parts: &[(GroundType, ValueRef)],
) -> (GroundType, VertexId) {
    assert!(!parts.is_empty());
    let (last_ty, last_v) = parts.last().unwrap();
    let mut ty = last_ty.clone();
    let mut root = last_v.root;
    for (g, v) in parts.iter().rev().skip(1) {
        let pair_ty = GroundType::prod(g.clone(), ty.clone());
        root = heap.alloc_pair(pair_ty.norm(), v.root, root);
        ty = pair_ty;
    }
    (ty, root)
}

/// Deterministic isomorphism check between two rooted spans: a simultaneous
/// traversal that matches labels, tags, and port-labeled span edges, and
/// builds a bijection.
pub fn spans_isomorphic(heap: &Heap, a: &Span, b: &Span) -> bool {
    match (a.root, b.root) {
        (None, None) => return true,
        (Some(_), Some(_)) => {}
        _ => return false,
    }
    let edges_of = |s: &Span, u: VertexId| -> Vec<(u8, VertexId)> {
        s.edges
            .range((u, 0, VertexId(0))..=(u, u8::MAX, VertexId(u32::MAX)))
            .map(|&(_, p, d)| (p, d))
            .collect()
    };
    let mut fwd: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut bwd: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut stack = vec![(a.root.unwrap(), b.root.unwrap())];
    while let Some((x, y)) = stack.pop() {
        match (fwd.get(&x), bwd.get(&y)) {
            (Some(&y2), Some(&x2)) => {
                if y2 != y || x2 != x {
                    return false;
                }
                continue;
            }
            (None, None) => {}
            _ => return false,
        }
        let vx = heap.get(x);
        let vy = heap.get(y);
        if vx.label != vy.label || vx.tag != vy.tag {
            return false;
        }
        fwd.insert(x, y);
        bwd.insert(y, x);
        let ex = edges_of(a, x);
        let ey = edges_of(b, y);
        if ex.len() != ey.len() {
            return false;
        }
        for ((pa, da), (pb, db)) in ex.into_iter().zip(ey.into_iter()) {
            if pa != pb {
                return false;
            }
            stack.push((da, db));
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_of_pure_types() {
        let mut h = Heap::new();
        let v = h.numeral(3);
        let nat = GroundType::nat();
        let ns = normal_span(&h, &nat, v.root);
        assert_eq!(ns.size(&h), 4);
        assert!(safe_span(&h, &nat, v.root).is_empty());
        let snat = nat.safe();
        assert!(normal_span(&h, &snat, v.root).is_empty());
        assert_eq!(safe_span(&h, &snat, v.root).size(&h), 4);
    }

    #[test]
    fn mixed_pair_span() {
        let mut h = Heap::new();
        let a = h.numeral(2);
        let b = h.numeral(5);
        let nat = GroundType::nat();
        let mixed = GroundType::prod(nat.safe(), nat.clone());
        let root = h.alloc_pair(mixed.norm(), a.root, b.root);
        let ns = normal_span(&h, &mixed, root);
        // Root pair + the normal component.
        assert_eq!(ns.size(&h), 6);
        assert!(ns.vertices.contains(&root));
        assert!(!ns.vertices.contains(&a.root));
        let ss = safe_span(&h, &mixed, root);
        assert_eq!(ss.size(&h), 3);
        assert!(ss.vertices.contains(&a.root));
    }

    #[test]
    fn iso_detects_shape_differences() {
        let mut h = Heap::new();
        let nat = GroundType::nat();
        let x2 = h.numeral(2);
        let y2 = h.numeral(2);
        let z3 = h.numeral(3);
        let sx = normal_span(&h, &nat, x2.root);
        let sy = normal_span(&h, &nat, y2.root);
        let sz = normal_span(&h, &nat, z3.root);
        assert!(spans_isomorphic(&h, &sx, &sy));
        assert!(!spans_isomorphic(&h, &sx, &sz));
    }
}
