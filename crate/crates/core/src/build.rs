/*!
Ergonomic constructors for raw core terms, plus a handful of stock programs
(ramified addition and its coercion wrapper) used by generated code and
tests.
*/

use std::rc::Rc;

use crate::term::Term;
use crate::types::{Functor, GroundType};

pub fn var(x: &str) -> Term {
    Term::Var(x.to_string())
}

pub fn lam(x: &str, ty: GroundType, body: Term) -> Term {
    Term::Lam(x.to_string(), Some(ty), Rc::new(body))
}

pub fn app(f: Term, a: Term) -> Term {
    Term::App(Rc::new(f), Rc::new(a))
}

pub fn pair(a: Term, b: Term) -> Term {
    Term::Pair(Rc::new(a), Rc::new(b))
}

pub fn fst(e: Term) -> Term {
    Term::Proj(1, Rc::new(e))
}

pub fn snd(e: Term) -> Term {
    Term::Proj(2, Rc::new(e))
}

pub fn inl(e: Term) -> Term {
    Term::Inj(1, Rc::new(e))
}

pub fn inr(e: Term) -> Term {
    Term::Inj(2, Rc::new(e))
}

pub fn case(s: Term, x1: &str, e1: Term, x2: &str, e2: Term) -> Term {
    Term::Case(
        Rc::new(s),
        x1.to_string(),
        Rc::new(e1),
        x2.to_string(),
        Rc::new(e2),
    )
}

pub fn con(p: &Rc<Functor>, e: Term) -> Term {
    Term::Con(p.clone(), Rc::new(e))
}

pub fn scon(p: &Rc<Functor>, e: Term) -> Term {
    Term::SafeCon(p.clone(), Rc::new(e))
}

pub fn fold(p: &Rc<Functor>, step: Term, arg: Term) -> Term {
    Term::Fold(p.clone(), Rc::new(step), Rc::new(arg))
}

pub fn to_safe(e: Term) -> Term {
    Term::ToSafe(Rc::new(e))
}

pub fn to_norm(e: Term) -> Term {
    Term::ToNorm(Rc::new(e))
}

pub fn nat_body() -> Rc<Functor> {
    GroundType::nat().as_datatype().unwrap().clone()
}

/// The numeral `m` as a term.
pub fn numeral(m: u64) -> Term {
    let p = nat_body();
    let mut t = con(&p, inl(Term::Unit));
    for _ in 0..m {
        t = con(&p, inr(t));
    }
    t
}

/// Ramified addition `plus' : safe nat * nat -> safe nat`: recursion on the
/// second argument, accumulating safe successors on top of the first.
pub fn plus_prime() -> Term {
    let nat = GroundType::nat();
    let p = nat_body();
    let arg_ty = GroundType::prod(nat.safe(), nat.clone());
    let step_dom = GroundType::sum(GroundType::Unit, nat.safe());
    let step = lam(
        "w",
        step_dom,
        case(
            var("w"),
            "w1",
            fst(var("z")),
            "w2",
            scon(&p, inr(var("w2"))),
        ),
    );
    lam("z", arg_ty, fold(&p, step, snd(var("z"))))
}

/// `plus : nat * nat -> nat`, the coercion wrapper around `plus'`.
pub fn plus() -> Term {
    let nat = GroundType::nat();
    let arg_ty = GroundType::prod(nat.clone(), nat.clone());
    lam(
        "u",
        arg_ty,
        to_norm(app(
            plus_prime(),
            pair(to_safe(fst(var("u"))), snd(var("u"))),
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_def;
    use crate::eval::{eval, Env, Semantics};
    use crate::heap::Heap;
    use crate::term::Calculus;
    use crate::types::Ty;

    #[test]
    fn plus_prime_has_the_expected_type() {
        let tt = check_def(Calculus::Rs1, &plus_prime()).unwrap();
        let nat = GroundType::nat();
        assert_eq!(
            tt.ty,
            Ty::Arrow(GroundType::prod(nat.safe(), nat.clone()), nat.safe())
        );
    }

    #[test]
    fn plus_computes_addition() {
        let tt = check_def(Calculus::Rs1, &app(plus(), pair(numeral(2), numeral(3)))).unwrap();
        for sem in [Semantics::Td, Semantics::Dp] {
            let mut h = Heap::new();
            let (v, _) = eval(&mut h, sem, &tt, &mut Env::new()).unwrap();
            assert_eq!(h.read_numeral(&v), Some(5));
        }
    }
}
