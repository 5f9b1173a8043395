/*!
Append-only vertex arena for value term graphs.

Values are labeled rooted dags: unit vertices (no out-edges), injection
vertices (one out-edge, tagged with the injection index), pair vertices (two
ordered out-edges), and constructor vertices (one out-edge, tagged with their
datatype).  Sharing is first-class: evaluation reuses vertices freely, and
all measures respect it.

Every vertex carries the canonical *normal* ground type it inhabits; the
ramified calculi erase to the unramified one at the level of values, so safe
marks never reach the heap.

Measures:

* `size`: constructor vertices reachable from the root, shared ones counted
  once;
* `total_vertices`: all reachable vertices (bounded by a type-dependent
  constant times `1 + size`);
* `tree_size`: constructor count of the full tree unfolding (big-integer —
  it is exponential in the dag size in general);
* `compressed_size`: the minimum of `size` over the bisimilarity class,
  realized by bottom-up hash-consing (`compress`).
*/

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use thiserror::Error;

use crate::types::{Functor, GroundType};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Label {
    Unit,
    /// Injection with index 1 or 2.
    Inj(u8),
    Pair,
    /// Datatype constructor.
    Con,
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub label: Label,
    /// Canonical normal type of the value rooted here.
    pub tag: GroundType,
    pub children: Vec<VertexId>,
}

static NEXT_HEAP_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
pub struct Heap {
    id: u64,
    vertices: Vec<Vertex>,
}

/// A value: a root vertex in a particular heap together with its type.
/// The heap id guards against accidentally dereferencing a root in the
/// wrong arena.
#[derive(Clone, Debug)]
pub struct ValueRef {
    pub heap: u64,
    pub root: VertexId,
    pub ty: GroundType,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeapError {
    #[error("Overflow: measure exceeds the platform natural range")]
    Overflow,
    #[error("value is malformed: {0}")]
    Malformed(String),
}

impl Default for Heap {
    fn default() -> Self {
        Self::new()
    }
}

impl Heap {
    pub fn new() -> Heap {
        Heap {
            id: NEXT_HEAP_ID.fetch_add(1, Ordering::Relaxed),
            vertices: Vec::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn get(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.0 as usize]
    }

    fn push(&mut self, vx: Vertex) -> VertexId {
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(vx);
        id
    }

    pub fn alloc_unit(&mut self) -> VertexId {
        self.push(Vertex {
            label: Label::Unit,
            tag: GroundType::Unit,
            children: vec![],
        })
    }

    pub fn alloc_inj(&mut self, j: u8, tag: GroundType, child: VertexId) -> VertexId {
        debug_assert!(j == 1 || j == 2);
        debug_assert!(matches!(tag, GroundType::Sum(..)));
        self.push(Vertex {
            label: Label::Inj(j),
            tag,
            children: vec![child],
        })
    }

    pub fn alloc_pair(&mut self, tag: GroundType, fst: VertexId, snd: VertexId) -> VertexId {
        debug_assert!(matches!(tag, GroundType::Prod(..)));
        self.push(Vertex {
            label: Label::Pair,
            tag,
            children: vec![fst, snd],
        })
    }

    pub fn alloc_con(&mut self, tag: GroundType, child: VertexId) -> VertexId {
        debug_assert!(matches!(tag, GroundType::Mu(_)));
        self.push(Vertex {
            label: Label::Con,
            tag,
            children: vec![child],
        })
    }

    pub fn value(&self, root: VertexId, ty: GroundType) -> ValueRef {
        ValueRef {
            heap: self.id,
            root,
            ty,
        }
    }

    pub fn check_owner(&self, v: &ValueRef) {
        assert_eq!(
            v.heap, self.id,
            "value belongs to heap {} but was used with heap {}",
            v.heap, self.id
        );
    }

    /// Reachable vertices in postorder: every child precedes its parents,
    /// each vertex listed once.  Deterministic (left-to-right depth-first).
    pub fn postorder(&self, root: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut seen = HashMap::new();
        // Explicit stack with expand/emit phases to avoid deep recursion.
        let mut stack = vec![(root, false)];
        while let Some((v, emit)) = stack.pop() {
            if emit {
                out.push(v);
                continue;
            }
            match seen.get(&v) {
                Some(_) => continue,
                None => {
                    seen.insert(v, ());
                    stack.push((v, true));
                    // Push children right-to-left so the left child is
                    // expanded (and emitted) first.
                    for &c in self.get(v).children.iter().rev() {
                        stack.push((c, false));
                    }
                }
            }
        }
        out
    }

    /// Number of constructor vertices reachable from `v`, sharing respected.
    pub fn size(&self, v: &ValueRef) -> u64 {
        self.check_owner(v);
        self.postorder(v.root)
            .iter()
            .filter(|&&u| self.get(u).label == Label::Con)
            .count() as u64
    }

    /// All reachable vertices.
    pub fn total_vertices(&self, v: &ValueRef) -> u64 {
        self.check_owner(v);
        self.postorder(v.root).len() as u64
    }

    /// Constructor count of the tree unfolding, as a big integer.
    pub fn tree_size_big(&self, v: &ValueRef) -> BigUint {
        self.check_owner(v);
        let mut memo: HashMap<VertexId, BigUint> = HashMap::new();
        for u in self.postorder(v.root) {
            let vx = self.get(u);
            let ts = match vx.label {
                Label::Unit => BigUint::from(0u32),
                Label::Inj(_) => memo[&vx.children[0]].clone(),
                Label::Pair => &memo[&vx.children[0]] + &memo[&vx.children[1]],
                Label::Con => &memo[&vx.children[0]] + 1u32,
            };
            memo.insert(u, ts);
        }
        memo.remove(&v.root).unwrap()
    }

    /// `tree_size` clamped to u64; `Overflow` if it does not fit.
    pub fn tree_size(&self, v: &ValueRef) -> Result<u64, HeapError> {
        u64::try_from(&self.tree_size_big(v)).map_err(|_| HeapError::Overflow)
    }

    /// Bisimilarity: equality of tree unfoldings, decided coinductively on
    /// the dags (memoized on vertex pairs; linear in the product of sizes).
    pub fn bisimilar(&self, a: &ValueRef, b: &ValueRef) -> bool {
        self.check_owner(a);
        self.check_owner(b);
        if a.ty != b.ty {
            return false;
        }
        let mut memo: HashMap<(VertexId, VertexId), bool> = HashMap::new();
        self.bisim(a.root, b.root, &mut memo)
    }

    fn bisim(
        &self,
        a: VertexId,
        b: VertexId,
        memo: &mut HashMap<(VertexId, VertexId), bool>,
    ) -> bool {
        if a == b {
            return true;
        }
        if let Some(&r) = memo.get(&(a, b)) {
            return r;
        }
        let va = self.get(a);
        let vb = self.get(b);
        // Acyclic graphs: seed optimistically, no cycles to justify it but
        // the entry is overwritten before anyone reads it.
        memo.insert((a, b), true);
        let r = va.label == vb.label
            && va.tag == vb.tag
            && va
                .children
                .iter()
                .zip(vb.children.iter())
                .all(|(&x, &y)| self.bisim(x, y, memo));
        memo.insert((a, b), r);
        r
    }

    /// Canonical class keys for hash-consing: assigns every reachable vertex
    /// a class index such that two vertices get the same index iff they are
    /// bisimilar.  Returns (class-of-vertex map, number of classes, labels).
    fn classes(&self, root: VertexId) -> (HashMap<VertexId, usize>, Vec<(Label, GroundType)>) {
        let mut class_of: HashMap<VertexId, usize> = HashMap::new();
        let mut interned: HashMap<(Label, GroundType, Vec<usize>), usize> = HashMap::new();
        let mut reps: Vec<(Label, GroundType)> = Vec::new();
        for u in self.postorder(root) {
            let vx = self.get(u);
            let key = (
                vx.label,
                vx.tag.clone(),
                vx.children.iter().map(|c| class_of[c]).collect::<Vec<_>>(),
            );
            let next = reps.len();
            let idx = *interned.entry(key).or_insert_with(|| {
                reps.push((vx.label, vx.tag.clone()));
                next
            });
            class_of.insert(u, idx);
        }
        (class_of, reps)
    }

    /// Size of the bisimilarity quotient: the minimum of `size` over the
    /// class of `v`.
    pub fn compressed_size(&self, v: &ValueRef) -> u64 {
        self.check_owner(v);
        let (_, reps) = self.classes(v.root);
        reps.iter().filter(|(l, _)| *l == Label::Con).count() as u64
    }

    /// Hash-cons the value bottom-up, returning a maximally shared value
    /// bisimilar to `v` (the canonical minimum-size representative).
    /// Allocates fresh vertices in this heap.
    pub fn compress(&mut self, v: &ValueRef) -> ValueRef {
        self.check_owner(v);
        let order = self.postorder(v.root);
        let mut new_of: HashMap<VertexId, VertexId> = HashMap::new();
        let mut interned: HashMap<(Label, GroundType, Vec<VertexId>), VertexId> = HashMap::new();
        for u in order {
            let vx = self.get(u).clone();
            let kids: Vec<VertexId> = vx.children.iter().map(|c| new_of[c]).collect();
            let key = (vx.label, vx.tag.clone(), kids.clone());
            let id = match interned.get(&key) {
                Some(&id) => id,
                None => {
                    let id = self.push(Vertex {
                        label: vx.label,
                        tag: vx.tag,
                        children: kids,
                    });
                    interned.insert(key, id);
                    id
                }
            };
            new_of.insert(u, id);
        }
        self.value(new_of[&v.root], v.ty.clone())
    }

    /// Deep-copy `v` from another heap into this one, preserving sharing.
    pub fn import(&mut self, src: &Heap, v: &ValueRef) -> ValueRef {
        src.check_owner(v);
        let mut new_of: HashMap<VertexId, VertexId> = HashMap::new();
        for u in src.postorder(v.root) {
            let vx = src.get(u);
            let kids = vx.children.iter().map(|c| new_of[c]).collect();
            let id = self.push(Vertex {
                label: vx.label,
                tag: vx.tag.clone(),
                children: kids,
            });
            new_of.insert(u, id);
        }
        self.value(new_of[&v.root], v.ty.clone())
    }

    /// Structure-preserving copy within this heap (fresh, isomorphic dag).
    pub fn clone_value(&mut self, v: &ValueRef) -> ValueRef {
        self.check_owner(v);
        let mut new_of: HashMap<VertexId, VertexId> = HashMap::new();
        for u in self.postorder(v.root) {
            let vx = self.get(u).clone();
            let kids = vx.children.iter().map(|c| new_of[c]).collect();
            let id = self.push(Vertex {
                label: vx.label,
                tag: vx.tag,
                children: kids,
            });
            new_of.insert(u, id);
        }
        self.value(new_of[&v.root], v.ty.clone())
    }

    /// Validate a value against its type: label arities and vertex tags must
    /// agree with the type structure, memoized on (vertex, type).
    pub fn validate(&self, v: &ValueRef) -> Result<(), HeapError> {
        self.check_owner(v);
        let mut seen: HashMap<(VertexId, GroundType), ()> = HashMap::new();
        self.validate_at(v.root, &v.ty.norm(), &mut seen)
    }

    fn validate_at(
        &self,
        u: VertexId,
        gamma: &GroundType,
        seen: &mut HashMap<(VertexId, GroundType), ()>,
    ) -> Result<(), HeapError> {
        if seen.contains_key(&(u, gamma.clone())) {
            return Ok(());
        }
        seen.insert((u, gamma.clone()), ());
        let vx = self.get(u);
        let fail = |msg: String| Err(HeapError::Malformed(msg));
        if &vx.tag != gamma {
            return fail(format!(
                "vertex {:?} tagged {} but typed {}",
                u, vx.tag, gamma
            ));
        }
        match (gamma, vx.label) {
            (GroundType::Unit, Label::Unit) => Ok(()),
            (GroundType::Sum(a, b), Label::Inj(j)) => {
                let side = if j == 1 { a } else { b };
                self.validate_at(vx.children[0], side, seen)
            }
            (GroundType::Prod(a, b), Label::Pair) => {
                self.validate_at(vx.children[0], a, seen)?;
                self.validate_at(vx.children[1], b, seen)
            }
            (GroundType::Mu(p), Label::Con) => {
                let unrolled = p.apply(gamma);
                self.validate_at(vx.children[0], &unrolled, seen)
            }
            _ => fail(format!(
                "vertex {:?} has label {:?} but type {}",
                u, vx.label, gamma
            )),
        }
    }

    /// Graphviz rendering of the value dag.
    pub fn to_dot(&self, v: &ValueRef) -> String {
        self.check_owner(v);
        let mut s = String::from("digraph value {\n  rankdir=TB;\n");
        for u in self.postorder(v.root) {
            let vx = self.get(u);
            let label = match vx.label {
                Label::Unit => "()".to_string(),
                Label::Inj(j) => format!("inj{}", j),
                Label::Pair => "pair".to_string(),
                Label::Con => format!("con {}", vx.tag),
            };
            let _ = writeln!(s, "  v{} [label=\"{}\"];", u.0, label);
            for (i, c) in vx.children.iter().enumerate() {
                let port = match vx.label {
                    Label::Pair => {
                        if i == 0 {
                            " [label=\"1\"]"
                        } else {
                            " [label=\"2\"]"
                        }
                    }
                    _ => "",
                };
                let _ = writeln!(s, "  v{} -> v{}{};", u.0, c.0, port);
            }
        }
        let _ = writeln!(s, "  root -> v{};", v.root.0);
        s.push_str("}\n");
        s
    }

    /// Build the numeral for `m` (a chain of `m` successors over zero).
    pub fn numeral(&mut self, m: u64) -> ValueRef {
        let nat = GroundType::nat();
        let body = nat.as_datatype().unwrap().clone();
        let unrolled = body.apply(&nat);
        let u = self.alloc_unit();
        let z = self.alloc_inj(1, unrolled.clone(), u);
        let mut cur = self.alloc_con(nat.clone(), z);
        for _ in 0..m {
            let i = self.alloc_inj(2, unrolled.clone(), cur);
            cur = self.alloc_con(nat.clone(), i);
        }
        self.value(cur, nat)
    }

    /// Read a numeral back; `None` if the value is not a numeral.
    pub fn read_numeral(&self, v: &ValueRef) -> Option<u64> {
        self.check_owner(v);
        let mut n = 0u64;
        let mut cur = v.root;
        loop {
            let con = self.get(cur);
            if con.label != Label::Con {
                return None;
            }
            let inj = self.get(con.children[0]);
            match inj.label {
                Label::Inj(1) => return Some(n),
                Label::Inj(2) => {
                    n += 1;
                    cur = inj.children[0];
                }
                _ => return None,
            }
        }
    }

    /// The canonical default inhabitant of a type (least constructors,
    /// leftmost inhabited branches first).
    pub fn default_value(&mut self, gamma: &GroundType) -> Result<ValueRef, HeapError> {
        let norm = gamma.norm();
        if !norm.is_inhabited() {
            return Err(HeapError::Malformed(format!("{} is uninhabited", norm)));
        }
        let root = self.default_vertex(&norm)?;
        Ok(self.value(root, norm))
    }

    fn default_vertex(&mut self, gamma: &GroundType) -> Result<VertexId, HeapError> {
        match gamma {
            GroundType::Unit => Ok(self.alloc_unit()),
            GroundType::Sum(a, b) => {
                if a.is_inhabited() {
                    let c = self.default_vertex(a)?;
                    Ok(self.alloc_inj(1, gamma.clone(), c))
                } else {
                    let c = self.default_vertex(b)?;
                    Ok(self.alloc_inj(2, gamma.clone(), c))
                }
            }
            GroundType::Prod(a, b) => {
                let x = self.default_vertex(a)?;
                let y = self.default_vertex(b)?;
                Ok(self.alloc_pair(gamma.clone(), x, y))
            }
            GroundType::Mu(p) => {
                let c = self.default_functor(p, gamma)?;
                Ok(self.alloc_con(gamma.clone(), c))
            }
            GroundType::SafeUnit | GroundType::SafeMu(_) => {
                unreachable!("default_value normalizes first")
            }
        }
    }

    /// Pick the grounding branch of the functor body: at sums prefer the
    /// side whose value needs no further recursion.
    fn default_functor(&mut self, f: &Functor, mu: &GroundType) -> Result<VertexId, HeapError> {
        match f {
            Functor::Id => self.default_vertex(mu),
            Functor::Const(a) => self.default_vertex(a),
            Functor::Sum(a, b) => {
                let ty = GroundType::sum(a.apply(mu), b.apply(mu));
                if a.apply(&GroundType::mu(Functor::Id)).is_inhabited() {
                    let c = self.default_functor(a, mu)?;
                    Ok(self.alloc_inj(1, ty, c))
                } else {
                    let c = self.default_functor(b, mu)?;
                    Ok(self.alloc_inj(2, ty, c))
                }
            }
            Functor::Prod(a, b) => {
                let ty = GroundType::prod(a.apply(mu), b.apply(mu));
                let x = self.default_functor(a, mu)?;
                let y = self.default_functor(b, mu)?;
                Ok(self.alloc_pair(ty, x, y))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeral_roundtrip() {
        let mut h = Heap::new();
        for m in [0u64, 1, 2, 17] {
            let v = h.numeral(m);
            assert_eq!(h.read_numeral(&v), Some(m));
            assert_eq!(h.size(&v), m + 1);
            assert_eq!(h.tree_size(&v).unwrap(), m + 1);
            assert_eq!(h.compressed_size(&v), m + 1);
            h.validate(&v).unwrap();
        }
    }

    /// A fully shared tree chain: t0 = Leaf, t_{i+1} = Branch(t_i, t_i).
    fn shared_tree(h: &mut Heap, m: u64) -> ValueRef {
        let tree = GroundType::tree();
        let body = tree.as_datatype().unwrap().clone();
        let unrolled = body.apply(&tree);
        let pair_ty = GroundType::prod(tree.clone(), tree.clone());
        let u = h.alloc_unit();
        let l = h.alloc_inj(1, unrolled.clone(), u);
        let mut cur = h.alloc_con(tree.clone(), l);
        for _ in 0..m {
            let p = h.alloc_pair(pair_ty.clone(), cur, cur);
            let i = h.alloc_inj(2, unrolled.clone(), p);
            cur = h.alloc_con(tree.clone(), i);
        }
        h.value(cur, tree)
    }

    #[test]
    fn shared_tree_measures() {
        let mut h = Heap::new();
        let v = shared_tree(&mut h, 1);
        // Branch(Leaf, Leaf) with sharing: con, inj2, pair, con, inj1, unit.
        assert_eq!(h.total_vertices(&v), 6);
        assert_eq!(h.size(&v), 2);
        assert_eq!(h.tree_size(&v).unwrap(), 3);
        h.validate(&v).unwrap();

        let v3 = shared_tree(&mut h, 3);
        assert_eq!(h.size(&v3), 4);
        assert_eq!(h.total_vertices(&v3), 12);
        assert_eq!(h.tree_size(&v3).unwrap(), 15);
    }

    #[test]
    fn tree_size_is_exponential_in_dag_size() {
        let mut h = Heap::new();
        let v = shared_tree(&mut h, 80);
        assert_eq!(h.size(&v), 81);
        assert!(h.tree_size(&v).is_err(), "2^81-1 overflows u64");
        assert_eq!(
            h.tree_size_big(&v),
            (BigUint::from(1u32) << 81) - 1u32
        );
    }

    #[test]
    fn compress_merges_bisimilar_subgraphs() {
        let mut h = Heap::new();
        // Build Branch(Leaf, Leaf) twice without sharing.
        let tree = GroundType::tree();
        let body = tree.as_datatype().unwrap().clone();
        let unrolled = body.apply(&tree);
        let pair_ty = GroundType::prod(tree.clone(), tree.clone());
        let leaf = |h: &mut Heap| {
            let u = h.alloc_unit();
            let l = h.alloc_inj(1, unrolled.clone(), u);
            h.alloc_con(tree.clone(), l)
        };
        let l1 = leaf(&mut h);
        let l2 = leaf(&mut h);
        let p = h.alloc_pair(pair_ty.clone(), l1, l2);
        let i = h.alloc_inj(2, unrolled.clone(), p);
        let root = h.alloc_con(tree.clone(), i);
        let v = h.value(root, tree.clone());
        assert_eq!(h.size(&v), 3);
        assert_eq!(h.compressed_size(&v), 2);
        let w = h.compress(&v);
        assert_eq!(h.size(&w), 2);
        assert!(h.bisimilar(&v, &w));
        assert_eq!(h.tree_size_big(&v), h.tree_size_big(&w));
        // Compression is idempotent.
        let w2 = h.compress(&w);
        assert_eq!(h.total_vertices(&w2), h.total_vertices(&w));
        h.validate(&w).unwrap();
    }

    #[test]
    fn bisimilarity_distinguishes_types_and_structure() {
        let mut h = Heap::new();
        let two = h.numeral(2);
        let two2 = h.numeral(2);
        let three = h.numeral(3);
        assert!(h.bisimilar(&two, &two2));
        assert!(!h.bisimilar(&two, &three));
        let t = shared_tree(&mut h, 0);
        assert!(!h.bisimilar(&two, &t), "different types are never bisimilar");
    }

    #[test]
    fn default_values() {
        let mut h = Heap::new();
        let n = h.default_value(&GroundType::nat()).unwrap();
        assert_eq!(h.read_numeral(&n), Some(0));
        let t = h
            .default_value(&GroundType::list(GroundType::tree()))
            .unwrap();
        h.validate(&t).unwrap();
        assert_eq!(h.size(&t), 1);
    }
}
