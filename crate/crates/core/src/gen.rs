/*!
Seeded random value generation with controllable sharing.

Generation walks the type structure, choosing inhabited branches at sums and
consuming a constructor budget at datatypes; when the budget is exhausted it
steers to a cheapest grounding branch.  A per-type pool of previously built
datatype values supplies sharing: with probability `share_prob` a new
recursive position reuses an existing vertex instead of building a fresh
subvalue, which is what produces genuinely dag-shaped test data.
*/

use std::collections::HashMap;

use rand::Rng;

use crate::heap::{Heap, ValueRef, VertexId};
use crate::types::{Functor, GroundType};

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Soft budget of constructor vertices per generated value.
    pub max_cons: u64,
    /// Probability of reusing a pooled subvalue at a recursive position.
    pub share_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_cons: 16,
            share_prob: 0.3,
        }
    }
}

pub struct ValueGen<'h, R: Rng> {
    pub heap: &'h mut Heap,
    pub rng: &'h mut R,
    pub cfg: GenConfig,
    pools: HashMap<GroundType, Vec<VertexId>>,
}

/// Generate a random value of (the normal form of) `gamma`.
pub fn gen_value<R: Rng>(
    heap: &mut Heap,
    rng: &mut R,
    gamma: &GroundType,
    cfg: &GenConfig,
) -> ValueRef {
    let mut g = ValueGen {
        heap,
        rng,
        cfg: cfg.clone(),
        pools: HashMap::new(),
    };
    g.value(gamma)
}

impl<'h, R: Rng> ValueGen<'h, R> {
    pub fn new(heap: &'h mut Heap, rng: &'h mut R, cfg: GenConfig) -> Self {
        ValueGen {
            heap,
            rng,
            cfg,
            pools: HashMap::new(),
        }
    }

    pub fn value(&mut self, gamma: &GroundType) -> ValueRef {
        let norm = gamma.norm();
        assert!(norm.is_inhabited(), "cannot generate {}: uninhabited", norm);
        let mut budget = self.cfg.max_cons;
        let root = self.vertex(&norm, &mut budget);
        self.heap.value(root, norm)
    }

    fn vertex(&mut self, gamma: &GroundType, budget: &mut u64) -> VertexId {
        match gamma {
            GroundType::Unit => self.heap.alloc_unit(),
            GroundType::Sum(a, b) => {
                let j = self.pick_side(a, b, *budget);
                let side = if j == 1 { a } else { b };
                let c = self.vertex(side, budget);
                self.heap.alloc_inj(j, gamma.clone(), c)
            }
            GroundType::Prod(a, b) => {
                let x = self.vertex(a, budget);
                let y = self.vertex(b, budget);
                self.heap.alloc_pair(gamma.clone(), x, y)
            }
            GroundType::Mu(p) => {
                // Share a pooled value of the same type sometimes.
                if self.rng.gen_bool(self.cfg.share_prob) {
                    if let Some(pool) = self.pools.get(gamma) {
                        if !pool.is_empty() {
                            let i = self.rng.gen_range(0..pool.len());
                            return pool[i];
                        }
                    }
                }
                *budget = budget.saturating_sub(1);
                let c = self.functor_vertex(p, gamma, budget);
                let v = self.heap.alloc_con(gamma.clone(), c);
                self.pools.entry(gamma.clone()).or_default().push(v);
                v
            }
            GroundType::SafeUnit | GroundType::SafeMu(_) => {
                unreachable!("generation normalizes types first")
            }
        }
    }

    fn functor_vertex(&mut self, f: &Functor, mu: &GroundType, budget: &mut u64) -> VertexId {
        match f {
            Functor::Id => self.vertex(mu, budget),
            Functor::Const(a) => self.vertex(a, budget),
            Functor::Sum(a, b) => {
                let ty = GroundType::sum(a.apply(mu), b.apply(mu));
                let (ia, ib) = (a.apply(mu).is_inhabited(), b.apply(mu).is_inhabited());
                let j = match (ia, ib) {
                    (true, false) => 1,
                    (false, true) => 2,
                    (true, true) => {
                        if *budget == 0 {
                            // Budget spent: steer to the cheapest grounding
                            // branch so generation terminates.
                            if grounding_cost(a) <= grounding_cost(b) {
                                1
                            } else {
                                2
                            }
                        } else if self.rng.gen_bool(0.5) {
                            1
                        } else {
                            2
                        }
                    }
                    (false, false) => unreachable!("inhabited datatype has a viable branch"),
                };
                let side = if j == 1 { a } else { b };
                let c = self.functor_vertex(side, mu, budget);
                self.heap.alloc_inj(j, ty, c)
            }
            Functor::Prod(a, b) => {
                let ty = GroundType::prod(a.apply(mu), b.apply(mu));
                let x = self.functor_vertex(a, mu, budget);
                let y = self.functor_vertex(b, mu, budget);
                self.heap.alloc_pair(ty, x, y)
            }
        }
    }

    fn pick_side(&mut self, a: &GroundType, b: &GroundType, budget: u64) -> u8 {
        match (a.is_inhabited(), b.is_inhabited()) {
            (true, false) => 1,
            (false, true) => 2,
            (true, true) => {
                if budget == 0 {
                    1
                } else if self.rng.gen_bool(0.5) {
                    1
                } else {
                    2
                }
            }
            (false, false) => unreachable!("sum of two empty types is empty"),
        }
    }
}

/// Rough cost (in vertices) of a grounding derivation; infinity-ish when
/// none exists.
fn grounding_cost(f: &Functor) -> u64 {
    const INF: u64 = u64::MAX / 4;
    match f {
        Functor::Id => INF,
        Functor::Const(a) => {
            if a.is_inhabited() {
                1
            } else {
                INF
            }
        }
        Functor::Sum(a, b) => grounding_cost(a).min(grounding_cost(b)).saturating_add(1),
        Functor::Prod(a, b) => grounding_cost(a).saturating_add(grounding_cost(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generates_valid_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut h = Heap::new();
        let types = [
            GroundType::nat(),
            GroundType::tree(),
            GroundType::list(GroundType::nat()),
            GroundType::prod(
                GroundType::sum(GroundType::Unit, GroundType::tree()),
                GroundType::list(GroundType::tree()),
            ),
        ];
        for ty in &types {
            for _ in 0..50 {
                let v = gen_value(&mut h, &mut rng, ty, &GenConfig::default());
                h.validate(&v).unwrap();
            }
        }
    }

    #[test]
    fn sharing_produces_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut h = Heap::new();
        let cfg = GenConfig {
            max_cons: 8,
            share_prob: 0.6,
        };
        let mut saw_sharing = false;
        for _ in 0..100 {
            let v = gen_value(&mut h, &mut rng, &GroundType::tree(), &cfg);
            let ts = h.tree_size_big(&v);
            if ts > h.size(&v).into() {
                saw_sharing = true;
            }
        }
        assert!(saw_sharing, "expected at least one properly shared dag");
    }

    #[test]
    fn deterministic_under_seed() {
        let gen_sizes = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut h = Heap::new();
            (0..20)
                .map(|_| {
                    let v = gen_value(&mut h, &mut rng, &GroundType::tree(), &GenConfig::default());
                    (h.size(&v), h.total_vertices(&v))
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(gen_sizes(42), gen_sizes(42));
        assert_ne!(gen_sizes(42), gen_sizes(43));
    }
}
