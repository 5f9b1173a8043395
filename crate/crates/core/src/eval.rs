/*!
Big-step evaluators over shared value graphs.

Two semantics share one traversal:

* **TD** (top-down): folds unroll by rewriting `fold f e` to `f (g (des e))`
  where `g` is the one-step functor reduction of `P` applied to the fold
  itself.  On branching data this re-folds shared subvalues and the cost is
  exponential in the worst case.
* **DP** (dynamic programming): folds first evaluate the recursion argument,
  then run one step-body application per constructor vertex of its datatype
  skeleton in topological order, memoizing per vertex, so shared subvalues
  are computed once.

Cost is metered in derivation-tree nodes: one node per rule instance, plus a
`size(P)` charge per fold unrolling for the off-stage functor reduction; DP
memo hits are metered as one node each.  The compression pass behind `cs` is
metered separately (`cs_nodes`) from the derivation count.
*/

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::heap::{Heap, Label, ValueRef, VertexId};
use crate::term::{TNode, TTerm};
use crate::types::{Functor, GroundType, Ty};

/// Which fold semantics to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Semantics {
    Td,
    Dp,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("StuckState: {0}")]
    Stuck(String),
    #[error("StepBudgetExceeded: more than {0} derivation nodes")]
    StepBudgetExceeded(u64),
}

/// Cost meter.  `nodes` counts evaluation-derivation nodes; `cs_nodes` the
/// separately-reported work of compression passes triggered by `cs`.
#[derive(Clone, Debug, Default)]
pub struct Meter {
    pub nodes: u64,
    pub fold_steps: u64,
    pub memo_hits: u64,
    pub cs_nodes: u64,
    pub limit: Option<u64>,
}

impl Meter {
    pub fn with_limit(limit: u64) -> Meter {
        Meter {
            limit: Some(limit),
            ..Meter::default()
        }
    }

    fn charge(&mut self, n: u64) -> Result<(), EvalError> {
        self.nodes += n;
        match self.limit {
            Some(l) if self.nodes > l => Err(EvalError::StepBudgetExceeded(l)),
            _ => Ok(()),
        }
    }
}

/// Evaluation environment: a stack of bindings, innermost last.
#[derive(Clone, Debug, Default)]
pub struct Env {
    stack: Vec<(String, ValueRef)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn push(&mut self, name: impl Into<String>, v: ValueRef) {
        self.stack.push((name.into(), v));
    }

    pub fn pop(&mut self) {
        self.stack.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<&ValueRef> {
        self.stack.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn bindings(&self) -> &[(String, ValueRef)] {
        &self.stack
    }
}

pub struct Evaluator<'h> {
    pub heap: &'h mut Heap,
    pub semantics: Semantics,
    pub meter: Meter,
}

/// Evaluate a ground-typed term in an environment.
pub fn eval(
    heap: &mut Heap,
    semantics: Semantics,
    t: &TTerm,
    env: &mut Env,
) -> Result<(ValueRef, Meter), EvalError> {
    let mut ev = Evaluator {
        heap,
        semantics,
        meter: Meter::default(),
    };
    let v = ev.eval(t, env)?;
    Ok((v, ev.meter))
}

impl<'h> Evaluator<'h> {
    pub fn new(heap: &'h mut Heap, semantics: Semantics) -> Self {
        Evaluator {
            heap,
            semantics,
            meter: Meter::default(),
        }
    }

    /// Apply a (lambda) function term to an already-evaluated argument.
    pub fn apply(&mut self, f: &TTerm, arg: ValueRef, env: &mut Env) -> Result<ValueRef, EvalError> {
        let TNode::Lam(x, _, body) = &f.node else {
            return Err(EvalError::Stuck("application of a non-lambda".into()));
        };
        env.push(x.clone(), arg);
        let r = self.eval(body, env);
        env.pop();
        r
    }

    pub fn eval(&mut self, t: &TTerm, env: &mut Env) -> Result<ValueRef, EvalError> {
        match &t.node {
            TNode::Var(x) => {
                self.meter.charge(1)?;
                env.lookup(x)
                    .cloned()
                    .ok_or_else(|| EvalError::Stuck(format!("unbound variable {}", x)))
            }

            TNode::Lam(..) => Err(EvalError::Stuck(
                "a lambda is not a ground value".to_string(),
            )),

            TNode::App(op, arg) => {
                self.meter.charge(1)?;
                let v1 = self.eval(arg, env)?;
                self.apply(op, v1, env)
            }

            TNode::Unit => {
                self.meter.charge(1)?;
                let u = self.heap.alloc_unit();
                Ok(self.heap.value(u, GroundType::Unit))
            }

            TNode::Pair(a, b) => {
                self.meter.charge(1)?;
                let va = self.eval(a, env)?;
                let vb = self.eval(b, env)?;
                let ty = self.norm_ty(t)?;
                let p = self.heap.alloc_pair(ty.clone(), va.root, vb.root);
                Ok(self.heap.value(p, ty))
            }

            TNode::Proj(j, e) => {
                self.meter.charge(1)?;
                let v = self.eval(e, env)?;
                let vx = self.heap.get(v.root);
                if vx.label != Label::Pair {
                    return Err(EvalError::Stuck("projection of a non-pair".into()));
                }
                let child = vx.children[(*j - 1) as usize];
                let ty = self.norm_ty(t)?;
                Ok(self.heap.value(child, ty))
            }

            TNode::Inj(j, e) => {
                self.meter.charge(1)?;
                let v = self.eval(e, env)?;
                let ty = self.norm_ty(t)?;
                let i = self.heap.alloc_inj(*j, ty.clone(), v.root);
                Ok(self.heap.value(i, ty))
            }

            TNode::Case(s, x1, e1, x2, e2) => {
                self.meter.charge(1)?;
                let vs = self.eval(s, env)?;
                let vx = self.heap.get(vs.root);
                let Label::Inj(j) = vx.label else {
                    return Err(EvalError::Stuck("case subject is not an injection".into()));
                };
                let child = vx.children[0];
                let GroundType::Sum(a, b) = vs.ty.clone() else {
                    return Err(EvalError::Stuck("case subject has a non-sum type".into()));
                };
                let (x, e, side) = if j == 1 {
                    (x1, e1, (*a).clone())
                } else {
                    (x2, e2, (*b).clone())
                };
                let bound = self.heap.value(child, side);
                env.push(x.clone(), bound);
                let r = self.eval(e, env);
                env.pop();
                r
            }

            TNode::Con(p, e) | TNode::SafeCon(p, e) => {
                self.meter.charge(1)?;
                let v = self.eval(e, env)?;
                let delta = GroundType::Mu(p.clone());
                let c = self.heap.alloc_con(delta.clone(), v.root);
                Ok(self.heap.value(c, delta))
            }

            TNode::Des(p, e) | TNode::SafeDes(p, e) => {
                self.meter.charge(1)?;
                let v = self.eval(e, env)?;
                let vx = self.heap.get(v.root);
                if vx.label != Label::Con {
                    return Err(EvalError::Stuck("destructor of a non-constructor".into()));
                }
                let child = vx.children[0];
                let ty = p.apply(&GroundType::Mu(p.clone()));
                Ok(self.heap.value(child, ty))
            }

            // Coercions return their argument unchanged: no new vertices.
            TNode::ToSafe(e) | TNode::ToNorm(e) => {
                self.meter.charge(1)?;
                self.eval(e, env)
            }

            TNode::Cs(_, e) => {
                self.meter.charge(1)?;
                let v = self.eval(e, env)?;
                // The compression pass is linear in the reachable graph and
                // metered separately from derivation nodes.
                self.meter.cs_nodes += self.heap.total_vertices(&v);
                let m = self.heap.compressed_size(&v);
                Ok(self.heap.numeral(m))
            }

            TNode::Fold(p, f, e) => match self.semantics {
                Semantics::Td => self.fold_td(t, p, f, e, env),
                Semantics::Dp => self.fold_dp(t, p, f, e, env),
            },
        }
    }

    fn norm_ty(&self, t: &TTerm) -> Result<GroundType, EvalError> {
        t.ty.ground()
            .map(GroundType::norm)
            .ok_or_else(|| EvalError::Stuck("ground-typed term expected".into()))
    }

    fn fold_td(
        &mut self,
        whole: &TTerm,
        p: &Rc<Functor>,
        f: &Rc<TTerm>,
        e: &Rc<TTerm>,
        env: &mut Env,
    ) -> Result<ValueRef, EvalError> {
        self.meter.charge(1 + p.size())?;
        self.meter.fold_steps += 1;
        let Ty::Arrow(_, sigma) = &f.ty else {
            return Err(EvalError::Stuck("fold step is not a function".into()));
        };
        let delta = GroundType::Mu(p.clone());
        let g = reduce_functor(p, p, f, &delta, sigma);
        let des = TTerm {
            node: TNode::Des(p.clone(), e.clone()),
            ty: Ty::Ground(p.apply(&delta)),
        };
        let Ty::Arrow(_, g_cod) = g.ty.clone() else {
            unreachable!()
        };
        let inner = TTerm {
            node: TNode::App(Rc::new(g), Rc::new(des)),
            ty: Ty::Ground(g_cod),
        };
        let expanded = TTerm {
            node: TNode::App(f.clone(), Rc::new(inner)),
            ty: whole.ty.clone(),
        };
        // The expansion replaces the fold node; its own App/Des nodes are
        // metered as they evaluate.
        let TNode::App(op, arg) = &expanded.node else {
            unreachable!()
        };
        let v1 = self.eval(arg, env)?;
        self.apply(op, v1, env)
    }

    fn fold_dp(
        &mut self,
        _whole: &TTerm,
        p: &Rc<Functor>,
        f: &Rc<TTerm>,
        e: &Rc<TTerm>,
        env: &mut Env,
    ) -> Result<ValueRef, EvalError> {
        self.meter.charge(1)?;
        let v1 = self.eval(e, env)?;
        let Ty::Arrow(_, sigma) = &f.ty else {
            return Err(EvalError::Stuck("fold step is not a function".into()));
        };
        let sigma_norm = sigma.norm();
        let skeleton = self.mu_skeleton(p, v1.root)?;
        let mut memo: HashMap<VertexId, ValueRef> = HashMap::new();
        for u in skeleton {
            // One application node plus the functor-reduction charge per step.
            self.meter.charge(1 + p.size())?;
            self.meter.fold_steps += 1;
            let child = self.heap.get(u).children[0];
            let view = self.build_view(p, child, &sigma_norm, &memo)?;
            let arg = self.heap.value(view, p.apply(&sigma_norm));
            let r = self.apply(f, arg, env)?;
            memo.insert(u, r);
        }
        memo.remove(&v1.root)
            .ok_or_else(|| EvalError::Stuck("fold argument has no constructor root".into()))
    }

    /// Constructor vertices of the `mu P` skeleton of the value rooted at
    /// `root`, in topological order (children before parents), following
    /// only the recursive positions of `P`.
    fn mu_skeleton(&self, p: &Functor, root: VertexId) -> Result<Vec<VertexId>, EvalError> {
        let mut out = Vec::new();
        let mut seen: HashMap<VertexId, ()> = HashMap::new();
        let mut stack = vec![(root, false)];
        while let Some((u, emit)) = stack.pop() {
            if emit {
                out.push(u);
                continue;
            }
            if seen.contains_key(&u) {
                continue;
            }
            seen.insert(u, ());
            if self.heap.get(u).label != Label::Con {
                return Err(EvalError::Stuck("datatype skeleton is malformed".into()));
            }
            stack.push((u, true));
            let child = self.heap.get(u).children[0];
            let mut recs = Vec::new();
            self.rec_positions(p, child, &mut recs)?;
            for r in recs.into_iter().rev() {
                stack.push((r, false));
            }
        }
        Ok(out)
    }

    fn rec_positions(
        &self,
        f: &Functor,
        u: VertexId,
        out: &mut Vec<VertexId>,
    ) -> Result<(), EvalError> {
        match f {
            Functor::Id => {
                out.push(u);
                Ok(())
            }
            Functor::Const(_) => Ok(()),
            Functor::Sum(a, b) => {
                let vx = self.heap.get(u);
                let Label::Inj(j) = vx.label else {
                    return Err(EvalError::Stuck("sum position is not an injection".into()));
                };
                let side = if j == 1 { a } else { b };
                self.rec_positions(side, vx.children[0], out)
            }
            Functor::Prod(a, b) => {
                let vx = self.heap.get(u);
                if vx.label != Label::Pair {
                    return Err(EvalError::Stuck("product position is not a pair".into()));
                }
                self.rec_positions(a, vx.children[0], out)?;
                self.rec_positions(b, vx.children[1], out)
            }
        }
    }

    /// Build the `P`-shaped view of a constructor's argument with recursive
    /// positions replaced by memoized results.  Constant positions are
    /// shared, not copied.
    fn build_view(
        &mut self,
        f: &Functor,
        u: VertexId,
        sigma_norm: &GroundType,
        memo: &HashMap<VertexId, ValueRef>,
    ) -> Result<VertexId, EvalError> {
        match f {
            Functor::Id => {
                // Memo hit: one metered node per lookup.
                self.meter.charge(1)?;
                self.meter.memo_hits += 1;
                memo.get(&u)
                    .map(|v| v.root)
                    .ok_or_else(|| EvalError::Stuck("missing memo entry".into()))
            }
            Functor::Const(_) => Ok(u),
            Functor::Sum(a, b) => {
                let vx = self.heap.get(u);
                let Label::Inj(j) = vx.label else {
                    return Err(EvalError::Stuck("sum position is not an injection".into()));
                };
                let child = vx.children[0];
                let side = if j == 1 { a } else { b };
                let c = self.build_view(side, child, sigma_norm, memo)?;
                let tag = f.apply(sigma_norm).norm();
                Ok(self.heap.alloc_inj(j, tag, c))
            }
            Functor::Prod(a, b) => {
                let vx = self.heap.get(u);
                if vx.label != Label::Pair {
                    return Err(EvalError::Stuck("product position is not a pair".into()));
                }
                let (c1, c2) = (vx.children[0], vx.children[1]);
                let x = self.build_view(a, c1, sigma_norm, memo)?;
                let y = self.build_view(b, c2, sigma_norm, memo)?;
                let tag = f.apply(sigma_norm).norm();
                Ok(self.heap.alloc_pair(tag, x, y))
            }
        }
    }
}

/// One-step functor reduction `(F f)`, for `f = fold_{mu P} step` of type
/// `mu P -> sigma`:
///
/// * `(Id f)` reduces to `f` (eta-expanded around a fresh fold node);
/// * `(C_A f)` reduces to the identity;
/// * `((F1*F2) f)` reduces to `\x. ((F1 f)(pi1 x), (F2 f)(pi2 x))`;
/// * `((F1+F2) f)` maps over whichever injection is present.
pub fn reduce_functor(
    f: &Functor,
    p_full: &Rc<Functor>,
    fold_step: &Rc<TTerm>,
    delta: &GroundType,
    sigma: &GroundType,
) -> TTerm {
    let dom = f.apply(delta);
    let cod = f.apply(sigma);
    match f {
        Functor::Id => {
            // \y. fold step y
            let y = "%y".to_string();
            let var = TTerm {
                node: TNode::Var(y.clone()),
                ty: Ty::Ground(delta.clone()),
            };
            let fold = TTerm {
                node: TNode::Fold(p_full.clone(), fold_step.clone(), Rc::new(var)),
                ty: Ty::Ground(sigma.clone()),
            };
            TTerm {
                node: TNode::Lam(y, delta.clone(), Rc::new(fold)),
                ty: Ty::Arrow(delta.clone(), sigma.clone()),
            }
        }
        Functor::Const(a) => {
            let y = "%y".to_string();
            let var = TTerm {
                node: TNode::Var(y.clone()),
                ty: Ty::Ground(a.clone()),
            };
            TTerm {
                node: TNode::Lam(y, a.clone(), Rc::new(var)),
                ty: Ty::Arrow(a.clone(), a.clone()),
            }
        }
        Functor::Sum(f1, f2) => {
            let g1 = reduce_functor(f1, p_full, fold_step, delta, sigma);
            let g2 = reduce_functor(f2, p_full, fold_step, delta, sigma);
            let x = "%x".to_string();
            let branch = |j: u8, g: TTerm, side_dom: GroundType| {
                let xi = format!("%x{}", j);
                let var = TTerm {
                    node: TNode::Var(xi.clone()),
                    ty: Ty::Ground(side_dom),
                };
                let Ty::Arrow(_, g_cod) = g.ty.clone() else {
                    unreachable!()
                };
                let app = TTerm {
                    node: TNode::App(Rc::new(g), Rc::new(var)),
                    ty: Ty::Ground(g_cod),
                };
                (
                    xi,
                    TTerm {
                        node: TNode::Inj(j, Rc::new(app)),
                        ty: Ty::Ground(cod.clone()),
                    },
                )
            };
            let (x1, b1) = branch(1, g1, f1.apply(delta));
            let (x2, b2) = branch(2, g2, f2.apply(delta));
            let subject = TTerm {
                node: TNode::Var(x.clone()),
                ty: Ty::Ground(dom.clone()),
            };
            let body = TTerm {
                node: TNode::Case(Rc::new(subject), x1, Rc::new(b1), x2, Rc::new(b2)),
                ty: Ty::Ground(cod.clone()),
            };
            TTerm {
                node: TNode::Lam(x, dom.clone(), Rc::new(body)),
                ty: Ty::Arrow(dom, cod),
            }
        }
        Functor::Prod(f1, f2) => {
            let g1 = reduce_functor(f1, p_full, fold_step, delta, sigma);
            let g2 = reduce_functor(f2, p_full, fold_step, delta, sigma);
            let x = "%x".to_string();
            let comp = |j: u8, g: TTerm, side_dom: GroundType| {
                let subject = TTerm {
                    node: TNode::Var(x.clone()),
                    ty: Ty::Ground(dom.clone()),
                };
                let proj = TTerm {
                    node: TNode::Proj(j, Rc::new(subject)),
                    ty: Ty::Ground(side_dom),
                };
                let Ty::Arrow(_, g_cod) = g.ty.clone() else {
                    unreachable!()
                };
                TTerm {
                    node: TNode::App(Rc::new(g), Rc::new(proj)),
                    ty: Ty::Ground(g_cod),
                }
            };
            let a = comp(1, g1, f1.apply(delta));
            let b = comp(2, g2, f2.apply(delta));
            let body = TTerm {
                node: TNode::Pair(Rc::new(a), Rc::new(b)),
                ty: Ty::Ground(cod.clone()),
            };
            TTerm {
                node: TNode::Lam(x, dom.clone(), Rc::new(body)),
                ty: Ty::Arrow(dom, cod),
            }
        }
    }
}
