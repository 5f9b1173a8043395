/*!
Bidirectional type checker for the three calculi.

Checking is syntax-directed: most forms synthesize; injections (and anything
whose type mentions "the other side" of a sum) only check against an
expected type, which is always available in practice because injections occur
under constructors, case branches, or annotated lambdas.

The ramified side conditions are enforced here:

* case: the subject's sum type is normal, or the result type is safe;
* fold: the recursion argument has a normal datatype type and the step
  function maps `P(sigma)` to a *safe* `sigma`;
* toNorm: every free variable of the coerced term has a normal type.

Each violation carries a distinct error code so negative tests can pin the
reason a program is rejected.
*/

use std::rc::Rc;

use thiserror::Error;

use crate::term::{Calculus, TNode, TTerm, Term};
use crate::types::{Functor, GroundType, Ty};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("TypeMismatch: expected {expected}, found {found} in {context}")]
    TypeMismatch {
        expected: String,
        found: String,
        context: String,
    },
    #[error("SideConditionCase: case subject has non-normal type {subject} but result type {result} is not safe")]
    SideConditionCase { subject: String, result: String },
    #[error("SideConditionFoldNormal: {0}")]
    SideConditionFoldNormal(String),
    #[error("SideConditionToNorm: free variable {var} of a toNorm body has non-normal type {ty}")]
    SideConditionToNorm { var: String, ty: String },
    #[error("UninhabitedType: {0} has no values")]
    UninhabitedType(String),
    #[error("LevelViolation: {construct} is not available in {level}")]
    LevelViolation { construct: String, level: String },
    #[error("UnboundVariable: {0}")]
    UnboundVariable(String),
    #[error("AnnotationRequired: cannot infer the type of {0}")]
    AnnotationRequired(String),
}

impl TypeError {
    /// Stable machine-readable code, used by the CLI and negative tests.
    pub fn code(&self) -> &'static str {
        match self {
            TypeError::TypeMismatch { .. } => "TypeMismatch",
            TypeError::SideConditionCase { .. } => "SideConditionCase",
            TypeError::SideConditionFoldNormal(_) => "SideConditionFoldNormal",
            TypeError::SideConditionToNorm { .. } => "SideConditionToNorm",
            TypeError::UninhabitedType(_) => "UninhabitedType",
            TypeError::LevelViolation { .. } => "LevelViolation",
            TypeError::UnboundVariable(_) => "UnboundVariable",
            TypeError::AnnotationRequired(_) => "AnnotationRequired",
        }
    }
}

/// A typing context: a stack of ground-typed variable bindings, innermost
/// binding shadowing outer ones.
pub type Context = Vec<(String, GroundType)>;

pub struct Checker {
    pub level: Calculus,
    /// Test hook: skip the toNorm free-variable side condition.  Used by the
    /// noninterference harness to demonstrate that the condition is what
    /// guarantees the invariance property.
    pub disable_tonorm_side_condition: bool,
}

type Res = Result<TTerm, TypeError>;

impl Checker {
    pub fn new(level: Calculus) -> Self {
        Checker {
            level,
            disable_tonorm_side_condition: false,
        }
    }

    /// Synthesize a type for `t` in `ctx`.
    pub fn synth(&self, ctx: &mut Context, t: &Term) -> Res {
        self.infer(ctx, t, None)
    }

    /// Check `t` against an expected ground type.
    pub fn check(&self, ctx: &mut Context, t: &Term, expected: &GroundType) -> Res {
        self.infer(ctx, t, Some(expected))
    }

    fn require_level(&self, needed: Calculus, construct: &str) -> Result<(), TypeError> {
        if self.level < needed {
            Err(TypeError::LevelViolation {
                construct: construct.to_string(),
                level: self.level.name().to_string(),
            })
        } else {
            Ok(())
        }
    }

    fn require_s1_type(&self, gamma: &GroundType, what: &str) -> Result<(), TypeError> {
        if self.level == Calculus::S1 && !gamma.is_normal() {
            return Err(TypeError::LevelViolation {
                construct: format!("safe type {} in {}", gamma, what),
                level: self.level.name().to_string(),
            });
        }
        Ok(())
    }

    fn ground<'a>(t: &'a TTerm, context: &str) -> Result<&'a GroundType, TypeError> {
        t.ty.ground().ok_or_else(|| TypeError::TypeMismatch {
            expected: "a ground type".to_string(),
            found: t.ty.to_string(),
            context: context.to_string(),
        })
    }

    fn mismatch(expected: &GroundType, found: &GroundType, context: &str) -> TypeError {
        TypeError::TypeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
            context: context.to_string(),
        }
    }

    fn finish(&self, got: TTerm, expected: Option<&GroundType>, context: &str) -> Res {
        if let Some(exp) = expected {
            let found = Self::ground(&got, context)?;
            if found != exp {
                return Err(Self::mismatch(exp, found, context));
            }
        }
        Ok(got)
    }

    fn infer(&self, ctx: &mut Context, t: &Term, expected: Option<&GroundType>) -> Res {
        match t {
            Term::Var(x) => {
                let gamma = ctx
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .map(|(_, g)| g.clone())
                    .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?;
                self.finish(
                    TTerm {
                        node: TNode::Var(x.clone()),
                        ty: Ty::Ground(gamma),
                    },
                    expected,
                    "variable",
                )
            }

            Term::Lam(x, ann, body) => {
                let dom = ann
                    .clone()
                    .ok_or_else(|| TypeError::AnnotationRequired(format!("lambda binder {}", x)))?;
                self.lam(ctx, x, dom, body, None)
            }

            Term::App(op, arg) => {
                let targ = self.synth(ctx, arg)?;
                let dom = Self::ground(&targ, "application argument")?.clone();
                let Term::Lam(x, ann, body) = op.as_ref() else {
                    return Err(TypeError::TypeMismatch {
                        expected: "a lambda operator".to_string(),
                        found: "a non-lambda application operator".to_string(),
                        context: "application (the calculus is first-order)".to_string(),
                    });
                };
                if let Some(a) = ann {
                    if *a != dom {
                        return Err(Self::mismatch(a, &dom, "application argument"));
                    }
                }
                let tlam = self.lam(ctx, x, dom, body, expected)?;
                let Ty::Arrow(_, cod) = tlam.ty.clone() else {
                    unreachable!()
                };
                Ok(TTerm {
                    node: TNode::App(Rc::new(tlam), Rc::new(targ)),
                    ty: Ty::Ground(cod),
                })
            }

            Term::Unit => self.finish(
                TTerm {
                    node: TNode::Unit,
                    ty: Ty::Ground(GroundType::Unit),
                },
                expected,
                "unit",
            ),

            Term::Pair(a, b) => {
                let (ea, eb) = match expected {
                    Some(GroundType::Prod(x, y)) => (Some(&**x), Some(&**y)),
                    Some(other) => {
                        return Err(TypeError::TypeMismatch {
                            expected: other.to_string(),
                            found: "a pair".to_string(),
                            context: "pair against non-product type".to_string(),
                        })
                    }
                    None => (None, None),
                };
                let ta = self.infer(ctx, a, ea)?;
                let tb = self.infer(ctx, b, eb)?;
                let ty = GroundType::prod(
                    Self::ground(&ta, "pair component")?.clone(),
                    Self::ground(&tb, "pair component")?.clone(),
                );
                Ok(TTerm {
                    node: TNode::Pair(Rc::new(ta), Rc::new(tb)),
                    ty: Ty::Ground(ty),
                })
            }

            Term::Proj(j, e) => {
                let te = self.synth(ctx, e)?;
                let GroundType::Prod(a, b) = Self::ground(&te, "projection subject")?.clone() else {
                    return Err(TypeError::TypeMismatch {
                        expected: "a product type".to_string(),
                        found: te.ty.to_string(),
                        context: "projection subject".to_string(),
                    });
                };
                let ty = if *j == 1 { (*a).clone() } else { (*b).clone() };
                self.finish(
                    TTerm {
                        node: TNode::Proj(*j, Rc::new(te)),
                        ty: Ty::Ground(ty),
                    },
                    expected,
                    "projection",
                )
            }

            Term::Inj(j, e) => {
                let Some(exp) = expected else {
                    return Err(TypeError::AnnotationRequired(
                        "injection outside a checking position".to_string(),
                    ));
                };
                let GroundType::Sum(a, b) = exp else {
                    return Err(TypeError::TypeMismatch {
                        expected: exp.to_string(),
                        found: "an injection".to_string(),
                        context: "injection against non-sum type".to_string(),
                    });
                };
                let side = if *j == 1 { &**a } else { &**b };
                let te = self.check(ctx, e, side)?;
                Ok(TTerm {
                    node: TNode::Inj(*j, Rc::new(te)),
                    ty: Ty::Ground(exp.clone()),
                })
            }

            Term::Case(s, x1, e1, x2, e2) => {
                let ts = self.synth(ctx, s)?;
                let subject = Self::ground(&ts, "case subject")?.clone();
                let GroundType::Sum(g1, g2) = &subject else {
                    return Err(TypeError::TypeMismatch {
                        expected: "a sum type".to_string(),
                        found: subject.to_string(),
                        context: "case subject".to_string(),
                    });
                };
                let (g1, g2) = ((**g1).clone(), (**g2).clone());
                ctx.push((x1.clone(), g1));
                let t1 = self.infer(ctx, e1, expected);
                ctx.pop();
                let t1 = t1?;
                let result = Self::ground(&t1, "case branch")?.clone();
                ctx.push((x2.clone(), g2));
                let t2 = self.infer(ctx, e2, Some(&result));
                ctx.pop();
                let t2 = t2?;
                if self.level >= Calculus::Rs1 && !subject.is_normal() && !result.is_safe() {
                    return Err(TypeError::SideConditionCase {
                        subject: subject.to_string(),
                        result: result.to_string(),
                    });
                }
                Ok(TTerm {
                    node: TNode::Case(Rc::new(ts), x1.clone(), Rc::new(t1), x2.clone(), Rc::new(t2)),
                    ty: Ty::Ground(result),
                })
            }

            Term::Con(p, e) => {
                let delta = GroundType::Mu(p.clone());
                self.require_inhabited(&delta)?;
                let arg_ty = p.apply(&delta);
                let te = self.check(ctx, e, &arg_ty)?;
                self.finish(
                    TTerm {
                        node: TNode::Con(p.clone(), Rc::new(te)),
                        ty: Ty::Ground(delta),
                    },
                    expected,
                    "constructor",
                )
            }

            Term::Des(p, e) => {
                let delta = GroundType::Mu(p.clone());
                let te = self.check(ctx, e, &delta)?;
                self.finish(
                    TTerm {
                        node: TNode::Des(p.clone(), Rc::new(te)),
                        ty: Ty::Ground(p.apply(&delta)),
                    },
                    expected,
                    "destructor",
                )
            }

            Term::Fold(p, step, arg) => {
                let delta = GroundType::Mu(p.clone());
                self.require_inhabited(&delta)?;
                // The recursion argument must have the *normal* datatype type.
                let targ = self.synth(ctx, arg)?;
                let found = Self::ground(&targ, "fold argument")?.clone();
                if found != delta {
                    if found.norm() == delta {
                        return Err(TypeError::SideConditionFoldNormal(format!(
                            "fold argument has safe type {}; the recursion argument must be normal",
                            found
                        )));
                    }
                    return Err(Self::mismatch(&delta, &found, "fold argument"));
                }
                let Term::Lam(z, ann, body) = step.as_ref() else {
                    return Err(TypeError::TypeMismatch {
                        expected: "a lambda step function".to_string(),
                        found: "a non-lambda fold step".to_string(),
                        context: "fold".to_string(),
                    });
                };
                let dom = ann.clone().ok_or_else(|| {
                    TypeError::AnnotationRequired(format!("fold step binder {}", z))
                })?;
                let tstep = self.lam(ctx, z, dom.clone(), body, None)?;
                let Ty::Arrow(_, sigma) = tstep.ty.clone() else {
                    unreachable!()
                };
                if self.level >= Calculus::Rs1 && !sigma.is_safe() {
                    return Err(TypeError::SideConditionFoldNormal(format!(
                        "fold step result type {} is not safe",
                        sigma
                    )));
                }
                let want_dom = p.apply(&sigma);
                if dom != want_dom {
                    return Err(Self::mismatch(&want_dom, &dom, "fold step domain"));
                }
                self.finish(
                    TTerm {
                        node: TNode::Fold(p.clone(), Rc::new(tstep), Rc::new(targ)),
                        ty: Ty::Ground(sigma),
                    },
                    expected,
                    "fold",
                )
            }

            Term::SafeCon(p, e) => {
                self.require_level(Calculus::Rs1, "safe constructor")?;
                let delta = GroundType::Mu(p.clone());
                self.require_inhabited(&delta)?;
                let arg_ty = p.apply(&delta).safe();
                let te = self.check(ctx, e, &arg_ty)?;
                self.finish(
                    TTerm {
                        node: TNode::SafeCon(p.clone(), Rc::new(te)),
                        ty: Ty::Ground(delta.safe()),
                    },
                    expected,
                    "safe constructor",
                )
            }

            Term::SafeDes(p, e) => {
                self.require_level(Calculus::Rs1, "safe destructor")?;
                let delta = GroundType::Mu(p.clone());
                let te = self.check(ctx, e, &delta.safe())?;
                self.finish(
                    TTerm {
                        node: TNode::SafeDes(p.clone(), Rc::new(te)),
                        ty: Ty::Ground(p.apply(&delta).safe()),
                    },
                    expected,
                    "safe destructor",
                )
            }

            Term::ToSafe(e) => {
                self.require_level(Calculus::Rs1, "toSafe")?;
                let te = self.synth(ctx, e)?;
                let ty = Self::ground(&te, "toSafe body")?.safe();
                self.finish(
                    TTerm {
                        node: TNode::ToSafe(Rc::new(te)),
                        ty: Ty::Ground(ty),
                    },
                    expected,
                    "toSafe",
                )
            }

            Term::ToNorm(e) => {
                self.require_level(Calculus::Rs1, "toNorm")?;
                if !self.disable_tonorm_side_condition {
                    for x in e.free_vars() {
                        if let Some((_, g)) = ctx.iter().rev().find(|(n, _)| *n == x) {
                            if !g.is_normal() {
                                return Err(TypeError::SideConditionToNorm {
                                    var: x.clone(),
                                    ty: g.to_string(),
                                });
                            }
                        }
                    }
                }
                let te = self.synth(ctx, e)?;
                let ty = Self::ground(&te, "toNorm body")?.norm();
                self.finish(
                    TTerm {
                        node: TNode::ToNorm(Rc::new(te)),
                        ty: Ty::Ground(ty),
                    },
                    expected,
                    "toNorm",
                )
            }

            Term::Cs(p, e) => {
                self.require_level(Calculus::Rs1_1, "cs")?;
                let delta = GroundType::Mu(p.clone());
                let te = self.check(ctx, e, &delta)?;
                self.finish(
                    TTerm {
                        node: TNode::Cs(p.clone(), Rc::new(te)),
                        ty: Ty::Ground(GroundType::nat()),
                    },
                    expected,
                    "cs",
                )
            }
        }
    }

    fn lam(
        &self,
        ctx: &mut Context,
        x: &str,
        dom: GroundType,
        body: &Term,
        expected_cod: Option<&GroundType>,
    ) -> Res {
        self.require_s1_type(&dom, "lambda binder annotation")?;
        self.require_inhabited(&dom)?;
        ctx.push((x.to_string(), dom.clone()));
        let tb = self.infer(ctx, body, expected_cod);
        ctx.pop();
        let tb = tb?;
        let cod = Self::ground(&tb, "lambda body")?.clone();
        Ok(TTerm {
            node: TNode::Lam(x.to_string(), dom.clone(), Rc::new(tb)),
            ty: Ty::Arrow(dom, cod),
        })
    }

    fn require_inhabited(&self, gamma: &GroundType) -> Result<(), TypeError> {
        if !gamma.is_inhabited() {
            return Err(TypeError::UninhabitedType(gamma.to_string()));
        }
        Ok(())
    }
}

/// Check a closed function definition `\x. body : gamma1 -> gamma0`.
pub fn check_def(level: Calculus, term: &Term) -> Result<TTerm, TypeError> {
    Checker::new(level).synth(&mut Vec::new(), term)
}

/// Convenience: declared functor for a datatype body, shared.
pub fn mu(p: &Rc<Functor>) -> GroundType {
    GroundType::Mu(p.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::rc::Rc;

    fn nat_body() -> Rc<Functor> {
        GroundType::nat().as_datatype().unwrap().clone()
    }

    fn rc(t: Term) -> Rc<Term> {
        Rc::new(t)
    }

    fn zero() -> Term {
        Term::Con(nat_body(), rc(Term::Inj(1, rc(Term::Unit))))
    }

    fn succ(e: Term) -> Term {
        Term::Con(nat_body(), rc(Term::Inj(2, rc(e))))
    }

    #[test]
    fn numerals_typecheck() {
        let two = succ(succ(zero()));
        let tt = check_def(Calculus::S1, &two).unwrap();
        assert_eq!(tt.ground_ty(), &GroundType::nat());
    }

    #[test]
    fn injection_needs_expected_type() {
        let e = Term::Inj(1, rc(Term::Unit));
        let err = check_def(Calculus::S1, &e).unwrap_err();
        assert_eq!(err.code(), "AnnotationRequired");
    }

    #[test]
    fn s1_rejects_ramified_constructs() {
        let e = Term::ToSafe(rc(zero()));
        let err = check_def(Calculus::S1, &e).unwrap_err();
        assert_eq!(err.code(), "LevelViolation");
        let e = Term::Cs(nat_body(), rc(zero()));
        let err = check_def(Calculus::Rs1, &e).unwrap_err();
        assert_eq!(err.code(), "LevelViolation");
    }

    #[test]
    fn fold_rejects_safe_argument() {
        // fold (\w. w') (toSafe 0) -- recursion over a safe value
        let step = Term::Lam(
            "w".into(),
            Some(GroundType::sum(GroundType::Unit, GroundType::nat().safe())),
            rc(Term::ToSafe(rc(zero()))),
        );
        let e = Term::Fold(nat_body(), rc(step), rc(Term::ToSafe(rc(zero()))));
        let err = check_def(Calculus::Rs1, &e).unwrap_err();
        assert_eq!(err.code(), "SideConditionFoldNormal");
    }

    #[test]
    fn tonorm_side_condition() {
        // \y : safe nat. toNorm y
        let e = Term::Lam(
            "y".into(),
            Some(GroundType::nat().safe()),
            rc(Term::ToNorm(rc(Term::Var("y".into())))),
        );
        let err = check_def(Calculus::Rs1, &e).unwrap_err();
        assert_eq!(err.code(), "SideConditionToNorm");
        let mut checker = Checker::new(Calculus::Rs1);
        checker.disable_tonorm_side_condition = true;
        assert!(checker.synth(&mut Vec::new(), &e).is_ok());
    }

    #[test]
    fn uninhabited_domain_rejected() {
        let empty = GroundType::mu(Functor::Id);
        let e = Term::Lam("x".into(), Some(empty), rc(Term::Unit));
        let err = check_def(Calculus::S1, &e).unwrap_err();
        assert_eq!(err.code(), "UninhabitedType");
    }
}
