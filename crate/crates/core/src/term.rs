/*!
Core terms for the three calculi.

The core language is first-order: lambdas only appear as application
operators and fold step functions, and contexts bind ground-typed variables
only.  Top-level definitions are inlined before checking, so every `App`
operator is syntactically a lambda.

`Term` is the raw (untyped) core syntax produced by the desugarer; `TTerm`
is the elaborated form produced by the type checker, with every node carrying
its type so the evaluators can tag the heap vertices they allocate.
*/

use std::collections::BTreeSet;
use std::rc::Rc;

use crate::types::{Functor, GroundType, Ty};

/// Which calculus a term is checked against.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum Calculus {
    /// Plain structural recursion, no ramification.
    S1,
    /// Ramified: safe/normal types, coercions, safe constructors.
    Rs1,
    /// Ramified plus the compressed-size operator `cs`.
    Rs1_1,
}

impl Calculus {
    pub fn name(self) -> &'static str {
        match self {
            Calculus::S1 => "s1",
            Calculus::Rs1 => "rs1",
            Calculus::Rs1_1 => "rs1.1",
        }
    }
}

/// Raw core term.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Term {
    Var(String),
    /// Binder annotations are required wherever the argument type cannot be
    /// inferred from the context (fold steps, unapplied lambdas).
    Lam(String, Option<GroundType>, Rc<Term>),
    App(Rc<Term>, Rc<Term>),
    Unit,
    Pair(Rc<Term>, Rc<Term>),
    Proj(u8, Rc<Term>),
    Inj(u8, Rc<Term>),
    Case(Rc<Term>, String, Rc<Term>, String, Rc<Term>),
    Con(Rc<Functor>, Rc<Term>),
    Des(Rc<Functor>, Rc<Term>),
    /// `Fold(P, step, arg)`; `step` must syntactically be a lambda.
    Fold(Rc<Functor>, Rc<Term>, Rc<Term>),
    SafeCon(Rc<Functor>, Rc<Term>),
    SafeDes(Rc<Functor>, Rc<Term>),
    ToSafe(Rc<Term>),
    ToNorm(Rc<Term>),
    Cs(Rc<Functor>, Rc<Term>),
}

impl Term {
    /// Free variables, in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_fv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_fv(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, _, b) => {
                bound.push(x.clone());
                b.collect_fv(bound, out);
                bound.pop();
            }
            Term::App(a, b) | Term::Pair(a, b) => {
                a.collect_fv(bound, out);
                b.collect_fv(bound, out);
            }
            Term::Unit => {}
            Term::Proj(_, e)
            | Term::Inj(_, e)
            | Term::Con(_, e)
            | Term::Des(_, e)
            | Term::SafeCon(_, e)
            | Term::SafeDes(_, e)
            | Term::ToSafe(e)
            | Term::ToNorm(e)
            | Term::Cs(_, e) => e.collect_fv(bound, out),
            Term::Case(s, x1, e1, x2, e2) => {
                s.collect_fv(bound, out);
                bound.push(x1.clone());
                e1.collect_fv(bound, out);
                bound.pop();
                bound.push(x2.clone());
                e2.collect_fv(bound, out);
                bound.pop();
            }
            Term::Fold(_, f, e) => {
                f.collect_fv(bound, out);
                e.collect_fv(bound, out);
            }
        }
    }

    /// Alpha-equivalence (binder names ignored, annotations compared).
    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn go(a: &Term, b: &Term, ea: &mut Vec<String>, eb: &mut Vec<String>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    let ia = ea.iter().rposition(|v| v == x);
                    let ib = eb.iter().rposition(|v| v == y);
                    match (ia, ib) {
                        (Some(i), Some(j)) => i == j,
                        (None, None) => x == y,
                        _ => false,
                    }
                }
                (Term::Lam(x, ta, ba), Term::Lam(y, tb, bb)) => {
                    if ta != tb {
                        return false;
                    }
                    ea.push(x.clone());
                    eb.push(y.clone());
                    let r = go(ba, bb, ea, eb);
                    ea.pop();
                    eb.pop();
                    r
                }
                (Term::App(f, x), Term::App(g, y)) | (Term::Pair(f, x), Term::Pair(g, y)) => {
                    go(f, g, ea, eb) && go(x, y, ea, eb)
                }
                (Term::Unit, Term::Unit) => true,
                (Term::Proj(i, x), Term::Proj(j, y)) | (Term::Inj(i, x), Term::Inj(j, y)) => {
                    i == j && go(x, y, ea, eb)
                }
                (Term::Case(s, x1, e1, x2, e2), Term::Case(t, y1, f1, y2, f2)) => {
                    if !go(s, t, ea, eb) {
                        return false;
                    }
                    ea.push(x1.clone());
                    eb.push(y1.clone());
                    let r1 = go(e1, f1, ea, eb);
                    ea.pop();
                    eb.pop();
                    if !r1 {
                        return false;
                    }
                    ea.push(x2.clone());
                    eb.push(y2.clone());
                    let r2 = go(e2, f2, ea, eb);
                    ea.pop();
                    eb.pop();
                    r2
                }
                (Term::Con(p, x), Term::Con(q, y))
                | (Term::Des(p, x), Term::Des(q, y))
                | (Term::SafeCon(p, x), Term::SafeCon(q, y))
                | (Term::SafeDes(p, x), Term::SafeDes(q, y))
                | (Term::Cs(p, x), Term::Cs(q, y)) => p == q && go(x, y, ea, eb),
                (Term::Fold(p, f, x), Term::Fold(q, g, y)) => {
                    p == q && go(f, g, ea, eb) && go(x, y, ea, eb)
                }
                (Term::ToSafe(x), Term::ToSafe(y)) | (Term::ToNorm(x), Term::ToNorm(y)) => {
                    go(x, y, ea, eb)
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

/// Type-annotated core term, as produced by the checker.
#[derive(Clone, Debug)]
pub struct TTerm {
    pub node: TNode,
    pub ty: Ty,
}

#[derive(Clone, Debug)]
pub enum TNode {
    Var(String),
    Lam(String, GroundType, Rc<TTerm>),
    App(Rc<TTerm>, Rc<TTerm>),
    Unit,
    Pair(Rc<TTerm>, Rc<TTerm>),
    Proj(u8, Rc<TTerm>),
    Inj(u8, Rc<TTerm>),
    Case(Rc<TTerm>, String, Rc<TTerm>, String, Rc<TTerm>),
    Con(Rc<Functor>, Rc<TTerm>),
    Des(Rc<Functor>, Rc<TTerm>),
    Fold(Rc<Functor>, Rc<TTerm>, Rc<TTerm>),
    SafeCon(Rc<Functor>, Rc<TTerm>),
    SafeDes(Rc<Functor>, Rc<TTerm>),
    ToSafe(Rc<TTerm>),
    ToNorm(Rc<TTerm>),
    Cs(Rc<Functor>, Rc<TTerm>),
}

impl TTerm {
    pub fn ground_ty(&self) -> &GroundType {
        self.ty
            .ground()
            .expect("ground-typed term expected; arrow found")
    }
}
