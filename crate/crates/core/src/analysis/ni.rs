/*!
Noninterference of safe inputs with normal outputs.

For a judgment whose context carries ramified types, two environments that
agree on the normal spans of their values (up to isomorphism) must produce
results whose normal spans are isomorphic too — the safe parts of the inputs
cannot leak into the normal part of the output.  The checker samples
environment pairs that share the normal structure exactly while randomizing
safe components independently, evaluates the judgment under both, assembles
`<v1, ..., vn, result>` on each side, and compares normal spans by a
deterministic simultaneous traversal.

If a context offers no safe degrees of freedom the property holds trivially;
the report flags such runs as vacuous rather than counting them as evidence.
*/

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::span::{assemble, normal_span, spans_isomorphic, Judgment};
use crate::eval::{eval, Env, EvalError, Semantics};
use crate::gen::{GenConfig, ValueGen};
use crate::heap::{Heap, ValueRef};
use crate::types::{GroundType, Ramification};

#[derive(Clone, Debug)]
pub struct NiOptions {
    pub trials: u32,
    pub seed: u64,
    pub gen: GenConfig,
}

impl Default for NiOptions {
    fn default() -> Self {
        NiOptions {
            trials: 100,
            seed: 0,
            gen: GenConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NiReport {
    pub trials: u32,
    pub failures: u32,
    /// No safe degrees of freedom: the property holds trivially.
    pub vacuous: bool,
}

impl NiReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Generate a pair of values of `gamma` whose normal spans are isomorphic
/// while safe components are drawn independently.
fn gen_split<R: Rng>(
    heap: &mut Heap,
    gamma: &GroundType,
    shared: &mut R,
    left: &mut R,
    right: &mut R,
    cfg: &GenConfig,
) -> (ValueRef, ValueRef) {
    match gamma.ramification() {
        Ramification::Normal => {
            let v = ValueGen::new(heap, shared, cfg.clone()).value(gamma);
            let w = heap.clone_value(&v);
            (v, w)
        }
        Ramification::Safe => {
            let norm = gamma.norm();
            let v = ValueGen::new(heap, left, cfg.clone()).value(&norm);
            let w = ValueGen::new(heap, right, cfg.clone()).value(&norm);
            (v, w)
        }
        Ramification::Mixed => match gamma {
            GroundType::Sum(a, b) => {
                // The injection choice is part of the normal span: share it.
                let (ia, ib) = (a.is_inhabited(), b.is_inhabited());
                let j = match (ia, ib) {
                    (true, false) => 1,
                    (false, true) => 2,
                    _ => {
                        if shared.gen_bool(0.5) {
                            1
                        } else {
                            2
                        }
                    }
                };
                let side = if j == 1 { a } else { b };
                let (x, y) = gen_split(heap, side, shared, left, right, cfg);
                let tag = gamma.norm();
                let rx = heap.alloc_inj(j, tag.clone(), x.root);
                let ry = heap.alloc_inj(j, tag.clone(), y.root);
                (heap.value(rx, tag.clone()), heap.value(ry, tag))
            }
            GroundType::Prod(a, b) => {
                let (x1, y1) = gen_split(heap, a, shared, left, right, cfg);
                let (x2, y2) = gen_split(heap, b, shared, left, right, cfg);
                let tag = gamma.norm();
                let rx = heap.alloc_pair(tag.clone(), x1.root, x2.root);
                let ry = heap.alloc_pair(tag.clone(), y1.root, y2.root);
                (heap.value(rx, tag.clone()), heap.value(ry, tag))
            }
            _ => unreachable!("mixed types are sums or products"),
        },
    }
}

fn has_safe_freedom(gamma: &GroundType) -> bool {
    gamma.ramification() != Ramification::Normal
}

/// Run the noninterference check.
pub fn check_normal_invariance(
    judgment: &Judgment,
    opts: &NiOptions,
) -> Result<NiReport, EvalError> {
    let vacuous = !judgment.ctx.iter().any(|(_, g)| has_safe_freedom(g));
    let mut failures = 0;
    for trial in 0..opts.trials {
        let mut heap = Heap::new();
        // Independent streams per trial, derived from the seed.
        let base = opts
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(trial as u64);
        let mut shared = ChaCha8Rng::seed_from_u64(base);
        let mut left = ChaCha8Rng::seed_from_u64(base ^ 0x5151_5151_5151_5151);
        let mut right = ChaCha8Rng::seed_from_u64(base ^ 0xa2a2_a2a2_a2a2_a2a2);

        let mut env_a = Env::new();
        let mut env_b = Env::new();
        for (x, gamma) in &judgment.ctx {
            let (va, vb) = gen_split(
                &mut heap, gamma, &mut shared, &mut left, &mut right, &opts.gen,
            );
            env_a.push(x.clone(), va);
            env_b.push(x.clone(), vb);
        }

        let (ra, _) = eval(&mut heap, Semantics::Td, &judgment.term, &mut env_a)?;
        let (rb, _) = eval(&mut heap, Semantics::Td, &judgment.term, &mut env_b)?;

        let collect = |env: &Env, result: ValueRef, heap: &mut Heap| {
            let mut parts: Vec<(GroundType, ValueRef)> = judgment
                .ctx
                .iter()
                .map(|(x, g)| (g.clone(), env.lookup(x).unwrap().clone()))
                .collect();
            parts.push((judgment.result_ty().clone(), result));
            assemble(heap, &parts)
        };
        let (ty_a, asm_a) = collect(&env_a, ra, &mut heap);
        let (ty_b, asm_b) = collect(&env_b, rb, &mut heap);
        debug_assert_eq!(ty_a, ty_b);

        let sa = normal_span(&heap, &ty_a, asm_a);
        let sb = normal_span(&heap, &ty_b, asm_b);
        if !spans_isomorphic(&heap, &sa, &sb) {
            failures += 1;
        }
    }
    Ok(NiReport {
        trials: opts.trials,
        failures,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;
    use crate::check::{check_def, Checker};
    use crate::term::Calculus;

    fn judgment_of_def(term: &crate::term::Term, level: Calculus) -> Judgment {
        let tt = check_def(level, term).unwrap();
        let crate::term::TNode::Lam(x, dom, body) = &tt.node else {
            panic!("definition must be a lambda")
        };
        Judgment {
            ctx: vec![(x.clone(), dom.clone())],
            term: (**body).clone(),
        }
    }

    #[test]
    fn plus_prime_is_noninterfering() {
        let j = judgment_of_def(&build::plus_prime(), Calculus::Rs1);
        let report = check_normal_invariance(
            &j,
            &NiOptions {
                trials: 60,
                seed: 1,
                gen: GenConfig::default(),
            },
        )
        .unwrap();
        assert!(report.passed(), "failures: {}", report.failures);
        assert!(!report.vacuous);
    }

    #[test]
    fn tonorm_mutant_leaks() {
        // \y : safe nat. toNorm y, accepted only with the side condition off.
        let nat = GroundType::nat();
        let leak = build::lam("y", nat.safe(), build::to_norm(build::var("y")));
        let mut checker = Checker::new(Calculus::Rs1);
        checker.disable_tonorm_side_condition = true;
        let tt = checker.synth(&mut Vec::new(), &leak).unwrap();
        let crate::term::TNode::Lam(x, dom, body) = &tt.node else {
            panic!()
        };
        let j = Judgment {
            ctx: vec![(x.clone(), dom.clone())],
            term: (**body).clone(),
        };
        let report = check_normal_invariance(
            &j,
            &NiOptions {
                trials: 100,
                seed: 2,
                gen: GenConfig::default(),
            },
        )
        .unwrap();
        // Per-trial failure needs the two random safe inputs to differ; with
        // many trials the run as a whole fails with overwhelming probability.
        assert!(
            report.failures >= report.trials / 4,
            "mutant failed only {}/{} trials",
            report.failures,
            report.trials
        );
    }

    #[test]
    fn normal_only_context_is_vacuous() {
        let j = judgment_of_def(&build::plus(), Calculus::Rs1);
        let report = check_normal_invariance(&j, &NiOptions::default()).unwrap();
        assert!(report.vacuous);
        assert!(report.passed());
    }
}
