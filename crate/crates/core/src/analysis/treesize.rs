/*!
Generated tree-size programs.

For every *normal, hereditarily sequential* ground type the ramified
calculus can compute the tree size (unfolded constructor count) of its
values: sums dispatch, products add, and a degree-at-most-one datatype folds
a tally that adds one per constructor, the constant components' sizes via
the generated sub-programs, and the single recursive component through the
safe argument of ramified addition.  Branching types are exactly the ones
where this fails — the tally would need to add two safe numbers.

`tree_size_term` emits the program as a closed core term of type
`gamma -> nat`; it typechecks in the ramified calculus by construction.
*/

use thiserror::Error;

use crate::build::{
    app, case, fold, fst, inr, lam, nat_body, numeral, pair, plus, plus_prime, scon, snd, to_norm,
    to_safe, var,
};
use crate::term::Term;
use crate::types::{Functor, GroundType, Shape};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeSizeError {
    #[error("tree size programs exist only for normal types; {0} is marked safe")]
    NotNormal(String),
    #[error("{0} is not hereditarily sequential; its tree size is not feasibly computable")]
    NotHereditarilySequential(String),
}

/// Emit a closed ramified program of type `gamma -> nat` computing the tree
/// size of its argument.
pub fn tree_size_term(gamma: &GroundType) -> Result<Term, TreeSizeError> {
    if !gamma.is_normal() {
        return Err(TreeSizeError::NotNormal(gamma.to_string()));
    }
    if gamma.shape() != Shape::HereditarilySequential {
        return Err(TreeSizeError::NotHereditarilySequential(gamma.to_string()));
    }
    let mut fresh = 0usize;
    Ok(emit(gamma, &mut fresh))
}

fn name(prefix: &str, fresh: &mut usize) -> String {
    *fresh += 1;
    format!("{}{}", prefix, fresh)
}

fn emit(gamma: &GroundType, fresh: &mut usize) -> Term {
    match gamma {
        GroundType::Unit => {
            let x = name("u", fresh);
            lam(&x, gamma.clone(), numeral(0))
        }
        GroundType::Sum(a, b) => {
            let x = name("s", fresh);
            let (x1, x2) = (name("l", fresh), name("r", fresh));
            let ta = emit(a, fresh);
            let tb = emit(b, fresh);
            lam(
                &x,
                gamma.clone(),
                case(
                    var(&x),
                    &x1,
                    app(ta, var(&x1)),
                    &x2,
                    app(tb, var(&x2)),
                ),
            )
        }
        GroundType::Prod(a, b) => {
            let x = name("p", fresh);
            let ta = emit(a, fresh);
            let tb = emit(b, fresh);
            lam(
                &x,
                gamma.clone(),
                app(
                    plus(),
                    pair(app(ta, fst(var(&x))), app(tb, snd(var(&x)))),
                ),
            )
        }
        GroundType::Mu(p) => {
            // toNorm (fold (\w. SafeSucc (tally P w)) x)
            let x = name("m", fresh);
            let w = name("w", fresh);
            let safe_nat = GroundType::nat().safe();
            let body = scon(&nat_body(), inr(tally(p, var(&w), fresh)));
            let step = lam(&w, p.apply(&safe_nat), body);
            lam(&x, gamma.clone(), to_norm(fold(p, step, var(&x))))
        }
        GroundType::SafeUnit | GroundType::SafeMu(_) => {
            unreachable!("normality checked at entry")
        }
    }
}

/// Sum the contributions of a functor-shaped view `w : F(safe nat)`, of
/// type `safe nat`.  Degree at most one guarantees that every product has
/// at most one recursive factor, so ramified addition (safe x normal) is
/// always enough.
fn tally(f: &Functor, w: Term, fresh: &mut usize) -> Term {
    match f {
        Functor::Id => w,
        Functor::Const(a) => to_safe(app(emit(a, fresh), w)),
        Functor::Sum(f1, f2) => {
            let (x1, x2) = (name("w", fresh), name("w", fresh));
            case(
                w,
                &x1,
                tally(f1, var(&x1), fresh),
                &x2,
                tally(f2, var(&x2), fresh),
            )
        }
        Functor::Prod(f1, f2) => {
            // apply(Fi, anything) for an Id-free functor is a fixed type.
            let const_ty = |g: &Functor| g.apply(&GroundType::Unit);
            if f1.mentions_id() {
                let rec = tally(f1, fst(w.clone()), fresh);
                let norm = app(emit(&const_ty(f2), fresh), snd(w));
                app(plus_prime(), pair(rec, norm))
            } else if f2.mentions_id() {
                let rec = tally(f2, snd(w.clone()), fresh);
                let norm = app(emit(&const_ty(f1), fresh), fst(w));
                app(plus_prime(), pair(rec, norm))
            } else {
                let a = app(emit(&const_ty(f1), fresh), fst(w.clone()));
                let b = app(emit(&const_ty(f2), fresh), snd(w));
                to_safe(app(plus(), pair(a, b)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_def;
    use crate::eval::{Env, Evaluator, Semantics};
    use crate::gen::{gen_value, GenConfig};
    use crate::heap::Heap;
    use crate::term::Calculus;
    use crate::types::Ty;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_against_oracle(gamma: &GroundType, seed: u64) {
        let term = tree_size_term(gamma).unwrap();
        let tt = check_def(Calculus::Rs1, &term).unwrap();
        assert_eq!(
            tt.ty,
            Ty::Arrow(gamma.clone(), GroundType::nat()),
            "generated program must have type {} -> nat",
            gamma
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heap = Heap::new();
        for _ in 0..30 {
            let v = gen_value(&mut heap, &mut rng, gamma, &GenConfig::default());
            let expected = heap.tree_size(&v).unwrap();
            for sem in [Semantics::Td, Semantics::Dp] {
                let mut ev = Evaluator::new(&mut heap, sem);
                let r = ev.apply(&tt, v.clone(), &mut Env::new()).unwrap();
                assert_eq!(heap.read_numeral(&r), Some(expected));
            }
        }
    }

    #[test]
    fn nat_and_lists() {
        check_against_oracle(&GroundType::nat(), 3);
        check_against_oracle(&GroundType::list(GroundType::nat()), 4);
    }

    #[test]
    fn sums_products_and_nesting() {
        check_against_oracle(&GroundType::prod(GroundType::nat(), GroundType::nat()), 5);
        check_against_oracle(
            &GroundType::sum(
                GroundType::Unit,
                GroundType::list(GroundType::list(GroundType::nat())),
            ),
            6,
        );
    }

    #[test]
    fn branching_types_are_rejected() {
        assert!(matches!(
            tree_size_term(&GroundType::tree()),
            Err(TreeSizeError::NotHereditarilySequential(_))
        ));
        assert!(matches!(
            tree_size_term(&GroundType::nat().safe()),
            Err(TreeSizeError::NotNormal(_))
        ));
    }
}
