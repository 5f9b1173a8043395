/*!
Syntax-directed synthesis of residual-size and cost bounds.

For a checked term with free variables `x1..xn`, `bounds` produces two
polynomials over indeterminates named after the variables: `q` bounds the
residual size of the result and `p` bounds the evaluation cost (in
derivation nodes, dynamic-programming fold semantics) when each indeterminate
is instantiated with the residual size of the corresponding environment
value.

The interesting cases:

* application `(\z.e0) e1` splits on the ramification of the argument type:
  a normal argument is substituted into the body bound outright; a safe
  argument contributes nothing through `z` but its residual may survive into
  the result; a mixed argument pays both ways;
* `case` substitutes the subject bound for either branch binder;
* `fold` runs at most `q1` step applications, each of which may stack its
  result on top of the previous one: `q = q1 * q0[z := q1] + q1^2`, and
  `p = 1 + p1 + q1 * (p0[z := q1] + c)` where the constant `c` dominates the
  per-unrolling functor-reduction bookkeeping.

Coefficients are naturals, so every bound is monotone; instantiating at
upper bounds of the inputs is therefore sound.
*/

use thiserror::Error;

use crate::analysis::poly::Poly;
use crate::term::{TNode, TTerm};
use crate::types::Ramification;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("bounds are defined for ground judgments; found a bare lambda in term position")]
    BareLambda,
}

/// Synthesized pair of bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Residual-size bound.
    pub size: Poly,
    /// Cost bound (derivation nodes, DP semantics).
    pub cost: Poly,
}

/// Per-unrolling cost constant for a fold over functor `p`: dominates the
/// functor-reduction charge, the eta-expansion of recursive positions, the
/// destructor/projection bookkeeping, and memo lookups.
fn fold_step_constant(p: &crate::types::Functor) -> u64 {
    4 * (p.size() + 1)
}

/// Bounds for a ground-typed term.
pub fn bounds(t: &TTerm) -> Result<Bounds, BoundError> {
    match &t.node {
        TNode::Var(x) => Ok(Bounds {
            size: Poly::var(x),
            cost: Poly::constant(1),
        }),

        TNode::Lam(..) => Err(BoundError::BareLambda),

        TNode::Unit => Ok(Bounds {
            size: Poly::zero(),
            cost: Poly::constant(1),
        }),

        TNode::App(op, arg) => {
            let TNode::Lam(z, _, body) = &op.node else {
                return Err(BoundError::BareLambda);
            };
            let a = bounds(arg)?;
            let b = bounds(body)?;
            let ram = arg
                .ty
                .ground()
                .map(|g| g.ramification())
                .unwrap_or(Ramification::Mixed);
            let size = match ram {
                Ramification::Normal => b.size.subst(z, &a.size),
                Ramification::Safe => b.size.subst(z, &Poly::zero()).add(&a.size),
                Ramification::Mixed => b.size.subst(z, &a.size).add(&a.size),
            };
            let cost = Poly::constant(1)
                .add(&b.cost.subst(z, &a.size))
                .add(&a.cost);
            Ok(Bounds { size, cost })
        }

        TNode::Pair(a, b) => {
            let ba = bounds(a)?;
            let bb = bounds(b)?;
            Ok(Bounds {
                size: ba.size.add(&bb.size),
                cost: Poly::constant(1).add(&ba.cost).add(&bb.cost),
            })
        }

        TNode::Proj(_, e)
        | TNode::Inj(_, e)
        | TNode::Des(_, e)
        | TNode::SafeDes(_, e)
        | TNode::ToSafe(e)
        | TNode::ToNorm(e) => {
            let b = bounds(e)?;
            Ok(Bounds {
                size: b.size,
                cost: Poly::constant(1).add(&b.cost),
            })
        }

        TNode::Con(_, e) | TNode::SafeCon(_, e) => {
            let b = bounds(e)?;
            Ok(Bounds {
                size: Poly::constant(1).add(&b.size),
                cost: Poly::constant(1).add(&b.cost),
            })
        }

        // The result numeral has one constructor per counted vertex plus a
        // zero; the compressed size never exceeds the residual of the
        // argument.  The compression pass itself is metered separately.
        TNode::Cs(_, e) => {
            let b = bounds(e)?;
            Ok(Bounds {
                size: Poly::constant(1).add(&b.size),
                cost: Poly::constant(1).add(&b.cost),
            })
        }

        TNode::Case(s, x1, e1, x2, e2) => {
            let bs = bounds(s)?;
            let b1 = bounds(e1)?;
            let b2 = bounds(e2)?;
            let size = b1
                .size
                .subst(x1, &bs.size)
                .add(&b2.size.subst(x2, &bs.size));
            let cost = Poly::constant(1)
                .add(&bs.cost)
                .add(&b1.cost.subst(x1, &bs.size))
                .add(&b2.cost.subst(x2, &bs.size));
            Ok(Bounds { size, cost })
        }

        TNode::Fold(p, f, e) => {
            let TNode::Lam(z, _, body) = &f.node else {
                return Err(BoundError::BareLambda);
            };
            let b1 = bounds(e)?;
            let b0 = bounds(body)?;
            let q1 = &b1.size;
            let size = q1.mul(&b0.size.subst(z, q1)).add(&q1.mul(q1));
            let c = Poly::constant(fold_step_constant(p));
            let cost = Poly::constant(1)
                .add(&b1.cost)
                .add(&q1.mul(&b0.cost.subst(z, q1).add(&c)));
            Ok(Bounds { size, cost })
        }
    }
}

/// Bounds for a top-level definition `\x. body`: the body's bounds in the
/// indeterminate named after the binder.
pub fn def_bounds(t: &TTerm) -> Result<(String, Bounds), BoundError> {
    match &t.node {
        TNode::Lam(x, _, body) => Ok((x.clone(), bounds(body)?)),
        _ => bounds(t).map(|b| (String::new(), b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;
    use crate::check::check_def;
    use crate::term::Calculus;

    #[test]
    fn plus_prime_bounds_are_linear_and_sound_in_shape() {
        let tt = check_def(Calculus::Rs1, &build::plus_prime()).unwrap();
        let (x, b) = def_bounds(&tt).unwrap();
        assert_eq!(x, "z");
        // Size: the fold contributes q1*q0[z<-q1] + q1^2 with the step body
        // residual independent of the recursion; degree two in z.
        assert_eq!(b.size.degree(), 2);
        assert!(b.cost.degree() >= 1);
        assert_eq!(b.size.vars(), vec!["z".to_string()]);
    }

    #[test]
    fn constant_programs_have_constant_bounds() {
        let tt = check_def(Calculus::S1, &build::numeral(4)).unwrap();
        let b = bounds(&tt).unwrap();
        assert_eq!(b.size, Poly::constant(5));
        assert!(b.size.vars().is_empty());
    }
}
