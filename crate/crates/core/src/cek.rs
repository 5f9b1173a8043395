/*!
A CEK machine equivalent to the top-down big-step evaluator.

States are (control, environment, continuation) triples; the control is
either an expression or a value, the continuation a stack of records that
remember what to do with the next value.  Environments are stack-shaped:
application and case transitions push one binding (`R2b`, `R7b`) and the
matching epilogue transitions pop it (`R2c`, `R7c`), so the environment depth
always equals the number of `App2`/`Case2` records on the continuation.

The rule numbering intentionally has no `R3`: the immediate-value rule for
`unit` is `R4`, and the published numbering is kept so traces line up with
the reference presentation.  Coercions step transparently (rule `RC`), the
compressed-size operator gets its own record (`R11a`/`R11b`), and folds
expand by one functor reduction exactly as in the big-step machine (`R10`).

Every transition costs one step; the machine takes at most three steps per
big-step derivation node.
*/

use std::rc::Rc;

use crate::eval::{reduce_functor, EvalError};
use crate::heap::{Heap, Label, ValueRef};
use crate::term::{TNode, TTerm};
use crate::types::{Functor, GroundType, Ty};

#[derive(Clone, Debug)]
enum Ctrl {
    Expr(Rc<TTerm>),
    Val(ValueRef),
}

#[derive(Clone, Debug)]
enum Record {
    /// Waiting for the argument value; `op` is the lambda operator.
    App1 { op: Rc<TTerm> },
    /// Body evaluated under the pushed binding; pop it.
    App2,
    Pair1 { snd: Rc<TTerm>, ty: GroundType },
    Pair2 { fst: ValueRef, ty: GroundType },
    Proj { j: u8, ty: GroundType },
    Inj { j: u8, ty: GroundType },
    Case1 {
        x1: String,
        e1: Rc<TTerm>,
        x2: String,
        e2: Rc<TTerm>,
    },
    Case2,
    Constr { ty: GroundType },
    Destr { p: Rc<Functor> },
    Cs,
}

#[derive(Clone, Debug)]
pub struct CekResult {
    pub value: ValueRef,
    pub steps: u64,
    pub trace: Option<Vec<String>>,
}

struct Env {
    stack: Vec<(String, ValueRef)>,
}

pub struct Cek<'h> {
    pub heap: &'h mut Heap,
    pub max_steps: Option<u64>,
    pub trace: bool,
}

impl<'h> Cek<'h> {
    pub fn new(heap: &'h mut Heap) -> Self {
        Cek {
            heap,
            max_steps: None,
            trace: false,
        }
    }

    /// Run a closed ground-typed term to a value.
    pub fn run(&mut self, t: &TTerm) -> Result<CekResult, EvalError> {
        self.run_in(t, Vec::new())
    }

    /// Run with initial bindings (used by the analysis harnesses).
    pub fn run_in(
        &mut self,
        t: &TTerm,
        initial: Vec<(String, ValueRef)>,
    ) -> Result<CekResult, EvalError> {
        let mut env = Env { stack: initial };
        let mut kont: Vec<Record> = Vec::new();
        let mut ctrl = Ctrl::Expr(Rc::new(t.clone()));
        let mut steps: u64 = 0;
        let mut trace: Vec<String> = Vec::new();

        loop {
            if let Ctrl::Val(v) = &ctrl {
                if kont.is_empty() {
                    return Ok(CekResult {
                        value: v.clone(),
                        steps,
                        trace: if self.trace { Some(trace) } else { None },
                    });
                }
            }
            if let Some(max) = self.max_steps {
                if steps >= max {
                    return Err(EvalError::StepBudgetExceeded(max));
                }
            }
            let rule = self.step(&mut ctrl, &mut env, &mut kont)?;
            steps += 1;
            if self.trace {
                trace.push(format!(
                    "{:<4} | {} | depth {}",
                    rule,
                    Self::show_ctrl(&ctrl),
                    kont.len()
                ));
            }
        }
    }

    fn show_ctrl(c: &Ctrl) -> String {
        match c {
            Ctrl::Expr(e) => format!("expr {}", summarize(&e.node)),
            Ctrl::Val(v) => format!("val v{}", v.root.0),
        }
    }

    fn step(
        &mut self,
        ctrl: &mut Ctrl,
        env: &mut Env,
        kont: &mut Vec<Record>,
    ) -> Result<&'static str, EvalError> {
        let cur = std::mem::replace(ctrl, Ctrl::Val(self.dummy()));
        match cur {
            Ctrl::Expr(e) => self.step_expr(e, ctrl, env, kont),
            Ctrl::Val(v) => self.step_val(v, ctrl, env, kont),
        }
    }

    fn dummy(&mut self) -> ValueRef {
        // Placeholder immediately overwritten by every transition.
        ValueRef {
            heap: self.heap.id(),
            root: crate::heap::VertexId(u32::MAX),
            ty: GroundType::Unit,
        }
    }

    fn step_expr(
        &mut self,
        e: Rc<TTerm>,
        ctrl: &mut Ctrl,
        env: &mut Env,
        kont: &mut Vec<Record>,
    ) -> Result<&'static str, EvalError> {
        match &e.node {
            TNode::Var(x) => {
                let v = env
                    .stack
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| EvalError::Stuck(format!("unbound variable {}", x)))?;
                *ctrl = Ctrl::Val(v);
                Ok("R1")
            }
            TNode::Lam(..) => Err(EvalError::Stuck("a lambda is not a ground value".into())),
            TNode::App(op, arg) => {
                kont.push(Record::App1 { op: op.clone() });
                *ctrl = Ctrl::Expr(arg.clone());
                Ok("R2a")
            }
            TNode::Unit => {
                let u = self.heap.alloc_unit();
                *ctrl = Ctrl::Val(self.heap.value(u, GroundType::Unit));
                Ok("R4")
            }
            TNode::Pair(a, b) => {
                let ty = norm_ty(&e)?;
                kont.push(Record::Pair1 {
                    snd: b.clone(),
                    ty,
                });
                *ctrl = Ctrl::Expr(a.clone());
                Ok("R4a")
            }
            TNode::Proj(j, inner) => {
                kont.push(Record::Proj {
                    j: *j,
                    ty: norm_ty(&e)?,
                });
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("R5a")
            }
            TNode::Inj(j, inner) => {
                kont.push(Record::Inj {
                    j: *j,
                    ty: norm_ty(&e)?,
                });
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("R6a")
            }
            TNode::Case(s, x1, e1, x2, e2) => {
                kont.push(Record::Case1 {
                    x1: x1.clone(),
                    e1: e1.clone(),
                    x2: x2.clone(),
                    e2: e2.clone(),
                });
                *ctrl = Ctrl::Expr(s.clone());
                Ok("R7a")
            }
            TNode::Con(p, inner) | TNode::SafeCon(p, inner) => {
                kont.push(Record::Constr {
                    ty: GroundType::Mu(p.clone()),
                });
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("R8a")
            }
            TNode::Des(p, inner) | TNode::SafeDes(p, inner) => {
                kont.push(Record::Destr { p: p.clone() });
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("R9a")
            }
            TNode::ToSafe(inner) | TNode::ToNorm(inner) => {
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("RC")
            }
            TNode::Cs(_, inner) => {
                kont.push(Record::Cs);
                *ctrl = Ctrl::Expr(inner.clone());
                Ok("R11a")
            }
            TNode::Fold(p, f, arg) => {
                let Ty::Arrow(_, sigma) = &f.ty else {
                    return Err(EvalError::Stuck("fold step is not a function".into()));
                };
                let delta = GroundType::Mu(p.clone());
                let g = reduce_functor(p, p, f, &delta, sigma);
                let des = TTerm {
                    node: TNode::Des(p.clone(), arg.clone()),
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
                    ty: e.ty.clone(),
                };
                *ctrl = Ctrl::Expr(Rc::new(expanded));
                Ok("R10")
            }
        }
    }

    fn step_val(
        &mut self,
        v: ValueRef,
        ctrl: &mut Ctrl,
        env: &mut Env,
        kont: &mut Vec<Record>,
    ) -> Result<&'static str, EvalError> {
        match kont.pop() {
            None => unreachable!("final states are handled by the driver"),
            Some(Record::App1 { op }) => {
                let TNode::Lam(x, _, body) = &op.node else {
                    return Err(EvalError::Stuck("application of a non-lambda".into()));
                };
                env.stack.push((x.clone(), v));
                kont.push(Record::App2);
                *ctrl = Ctrl::Expr(body.clone());
                Ok("R2b")
            }
            Some(Record::App2) => {
                env.stack.pop();
                *ctrl = Ctrl::Val(v);
                Ok("R2c")
            }
            Some(Record::Pair1 { snd, ty }) => {
                kont.push(Record::Pair2 { fst: v, ty });
                *ctrl = Ctrl::Expr(snd);
                Ok("R4b")
            }
            Some(Record::Pair2 { fst, ty }) => {
                let p = self.heap.alloc_pair(ty.clone(), fst.root, v.root);
                *ctrl = Ctrl::Val(self.heap.value(p, ty));
                Ok("R4c")
            }
            Some(Record::Proj { j, ty }) => {
                let vx = self.heap.get(v.root);
                if vx.label != Label::Pair {
                    return Err(EvalError::Stuck("projection of a non-pair".into()));
                }
                let child = vx.children[(j - 1) as usize];
                *ctrl = Ctrl::Val(self.heap.value(child, ty));
                Ok("R5b")
            }
            Some(Record::Inj { j, ty }) => {
                let i = self.heap.alloc_inj(j, ty.clone(), v.root);
                *ctrl = Ctrl::Val(self.heap.value(i, ty));
                Ok("R6b")
            }
            Some(Record::Case1 { x1, e1, x2, e2 }) => {
                let vx = self.heap.get(v.root);
                let Label::Inj(j) = vx.label else {
                    return Err(EvalError::Stuck("case subject is not an injection".into()));
                };
                let child = vx.children[0];
                let GroundType::Sum(a, b) = v.ty.clone() else {
                    return Err(EvalError::Stuck("case subject has a non-sum type".into()));
                };
                let (x, e, side) = if j == 1 {
                    (x1, e1, (*a).clone())
                } else {
                    (x2, e2, (*b).clone())
                };
                let bound = self.heap.value(child, side);
                env.stack.push((x, bound));
                kont.push(Record::Case2);
                *ctrl = Ctrl::Expr(e);
                Ok("R7b")
            }
            Some(Record::Case2) => {
                env.stack.pop();
                *ctrl = Ctrl::Val(v);
                Ok("R7c")
            }
            Some(Record::Constr { ty }) => {
                let c = self.heap.alloc_con(ty.clone(), v.root);
                *ctrl = Ctrl::Val(self.heap.value(c, ty));
                Ok("R8b")
            }
            Some(Record::Destr { p }) => {
                let vx = self.heap.get(v.root);
                if vx.label != Label::Con {
                    return Err(EvalError::Stuck("destructor of a non-constructor".into()));
                }
                let child = vx.children[0];
                let ty = p.apply(&GroundType::Mu(p.clone()));
                *ctrl = Ctrl::Val(self.heap.value(child, ty));
                Ok("R9b")
            }
            Some(Record::Cs) => {
                let m = self.heap.compressed_size(&v);
                *ctrl = Ctrl::Val(self.heap.numeral(m));
                Ok("R11b")
            }
        }
    }
}

fn norm_ty(t: &TTerm) -> Result<GroundType, EvalError> {
    t.ty.ground()
        .map(GroundType::norm)
        .ok_or_else(|| EvalError::Stuck("ground-typed term expected".into()))
}

fn summarize(n: &TNode) -> &'static str {
    match n {
        TNode::Var(_) => "var",
        TNode::Lam(..) => "lam",
        TNode::App(..) => "app",
        TNode::Unit => "unit",
        TNode::Pair(..) => "pair",
        TNode::Proj(..) => "proj",
        TNode::Inj(..) => "inj",
        TNode::Case(..) => "case",
        TNode::Con(..) => "con",
        TNode::Des(..) => "des",
        TNode::Fold(..) => "fold",
        TNode::SafeCon(..) => "scon",
        TNode::SafeDes(..) => "sdes",
        TNode::ToSafe(_) => "toSafe",
        TNode::ToNorm(_) => "toNorm",
        TNode::Cs(..) => "cs",
    }
}
