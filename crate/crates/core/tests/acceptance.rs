//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass/fail line (run with `--nocapture` to see the pass lines).

use std::collections::BTreeMap;
use std::panic::AssertUnwindSafe;
use std::rc::Rc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ramrec_core::analysis::bounds::def_bounds;
use ramrec_core::analysis::ni::{check_normal_invariance, NiOptions};
use ramrec_core::analysis::span::{residual_of_var, residual_size, Judgment};
use ramrec_core::build;
use ramrec_core::cek::Cek;
use ramrec_core::check::{check_def, Checker};
use ramrec_core::eval::{eval, Env, Semantics};
use ramrec_core::gen::{gen_value, GenConfig};
use ramrec_core::heap::{Heap, Label, ValueRef, VertexId};
use ramrec_core::serial::{self, Strictness, VtgItem};
use ramrec_core::syntax;
use ramrec_core::term::{Calculus, TNode, TTerm, Term};
use ramrec_core::types::{GroundType, Ty};

const GROW: &str = include_str!("../../../programs/grow.s1");
const TREE_SIZE: &str = include_str!("../../../programs/tree_size.s1");
const HEIGHT: &str = include_str!("../../../programs/height.s1");
const HEIGHT_GROW: &str = include_str!("../../../programs/height_grow.s1");
const PLUS_PRIME: &str = include_str!("../../../programs/plus_prime.s1");
const TIMES_PRIME: &str = include_str!("../../../programs/times_prime.s1");
const PLUS: &str = include_str!("../../../programs/plus.s1");
const TIMES: &str = include_str!("../../../programs/times.s1");
const SUM_LST: &str = include_str!("../../../programs/sum_lst.s1");
const CS_DEMO: &str = include_str!("../../../programs/cs_demo.s1");

const CORPUS: &[(&str, &str)] = &[
    ("grow", GROW),
    ("tree_size", TREE_SIZE),
    ("height", HEIGHT),
    ("height_grow", HEIGHT_GROW),
    ("plus_prime", PLUS_PRIME),
    ("times_prime", TIMES_PRIME),
    ("plus", PLUS),
    ("times", TIMES),
    ("sum_lst", SUM_LST),
    ("cs_demo", CS_DEMO),
];

fn report(n: u32, name: &str, f: impl FnOnce() + Send + 'static) {
    // The tree-walking evaluator recurses deeply in debug builds; give each
    // criterion a generous stack instead of the 2 MiB test-thread default.
    let handle = std::thread::Builder::new()
        .stack_size(64 << 20)
        .spawn(move || std::panic::catch_unwind(AssertUnwindSafe(f)))
        .unwrap();
    match handle.join().unwrap() {
        Ok(()) => println!("acceptance {:2} ({}): pass", n, name),
        Err(e) => {
            println!("acceptance {:2} ({}): FAIL", n, name);
            std::panic::resume_unwind(e);
        }
    }
}

/// Loads, desugars, and typechecks a corpus program.
struct Checked {
    program: syntax::Program,
    defs: BTreeMap<String, TTerm>,
    main: Option<TTerm>,
}

fn load(src: &str) -> Checked {
    let program = syntax::load(src).expect("corpus program parses");
    let mut defs = BTreeMap::new();
    for (name, term) in &program.defs {
        let tt = Checker::new(program.calculus)
            .synth(&mut Vec::new(), term)
            .unwrap_or_else(|e| panic!("def {} fails to check: {}", name, e));
        defs.insert(name.clone(), tt.clone());
    }
    let main = program.main.as_ref().map(|m| {
        Checker::new(program.calculus)
            .synth(&mut Vec::new(), m)
            .unwrap_or_else(|e| panic!("main fails to check: {}", e))
    });
    Checked {
        program,
        defs,
        main,
    }
}

fn def_term<'a>(p: &'a syntax::Program, name: &str) -> &'a Term {
    &p.defs.iter().find(|(n, _)| n == name).expect("def exists").1
}

/// `f m̄` as a checked core term.
fn applied(level: Calculus, f: &Term, m: u64) -> TTerm {
    let t = Term::App(Rc::new(f.clone()), Rc::new(build::numeral(m)));
    check_def(level, &t).expect("application checks")
}

fn value_types() -> Vec<GroundType> {
    vec![
        GroundType::nat(),
        GroundType::tree(),
        GroundType::list(GroundType::nat()),
        GroundType::prod(GroundType::nat(), GroundType::tree()),
        GroundType::sum(GroundType::Unit, GroundType::list(GroundType::tree())),
    ]
}

#[test]
fn criterion_01_sharing_blowup() {
    report(1, "grow sharing blow-up", || {
        let start = Instant::now();
        let p = syntax::load(GROW).unwrap();
        let grow = def_term(&p, "grow");
        for m in 1..=20u64 {
            let tt = applied(Calculus::S1, grow, m);
            let mut heap = Heap::new();
            let (v, _) = eval(&mut heap, Semantics::Td, &tt, &mut Env::new()).unwrap();
            assert_eq!(heap.size(&v), m + 1, "size(grow {})", m);
            let expected = (BigUint::from(1u8) << (m + 1)) - 1u8;
            assert_eq!(heap.tree_size_big(&v), expected, "ts(grow {})", m);
        }
        assert!(start.elapsed() < Duration::from_secs(1), "over 1 s");
    });
}

#[test]
fn criterion_02_height_dp_polynomial() {
    report(2, "height under dp is polynomial", || {
        let start = Instant::now();
        let p = syntax::load(HEIGHT_GROW).unwrap();
        let height = def_term(&p, "height");
        let grow = def_term(&p, "grow");
        let mut costs = BTreeMap::new();
        for m in 1..=60u64 {
            let t = Term::App(
                Rc::new(height.clone()),
                Rc::new(Term::App(Rc::new(grow.clone()), Rc::new(build::numeral(m)))),
            );
            let tt = check_def(Calculus::S1, &t).unwrap();
            let mut heap = Heap::new();
            let (v, meter) = eval(&mut heap, Semantics::Dp, &tt, &mut Env::new()).unwrap();
            assert_eq!(heap.read_numeral(&v), Some(m), "height(grow {})", m);
            costs.insert(m, meter.nodes);
        }
        let slope = ((costs[&60] as f64).ln() - (costs[&20] as f64).ln())
            / (60f64.ln() - 20f64.ln());
        assert!(
            slope <= 3.5,
            "log-log cost slope {:.2} exceeds 3.5 on m in [20,60]",
            slope
        );
        assert!(start.elapsed() < Duration::from_secs(5), "over 5 s");
    });
}

#[test]
fn criterion_03_height_td_exponential() {
    report(3, "height under td is exponential", || {
        let p = syntax::load(HEIGHT_GROW).unwrap();
        let height = def_term(&p, "height");
        let grow = def_term(&p, "grow");
        for m in 5..=14u64 {
            let t = Term::App(
                Rc::new(height.clone()),
                Rc::new(Term::App(Rc::new(grow.clone()), Rc::new(build::numeral(m)))),
            );
            let tt = check_def(Calculus::S1, &t).unwrap();
            let mut heap = Heap::new();
            let (v, meter) = eval(&mut heap, Semantics::Td, &tt, &mut Env::new()).unwrap();
            assert_eq!(heap.read_numeral(&v), Some(m));
            assert!(
                meter.nodes >= 1 << m,
                "cost_td {} below 2^{} for m={}",
                meter.nodes,
                m,
                m
            );
        }
    });
}

/// Independent oracle: the number of bisimilarity classes among reachable
/// constructor vertices, computed by pairwise recursive comparison.
fn brute_force_min(heap: &Heap, v: &ValueRef) -> u64 {
    let cons: Vec<VertexId> = heap
        .postorder(v.root)
        .into_iter()
        .filter(|&u| heap.get(u).label == Label::Con)
        .collect();
    let mut reps: Vec<ValueRef> = Vec::new();
    for u in cons {
        let val = heap.value(u, heap.get(u).tag.clone());
        if !reps.iter().any(|r| heap.bisimilar(r, &val)) {
            reps.push(val);
        }
    }
    reps.len() as u64
}

#[test]
fn criterion_04_compression_exactness() {
    report(4, "compression reaches the bisimilarity quotient", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x04);
        let cfg = GenConfig {
            max_cons: 8,
            share_prob: 0.6,
        };
        let types = value_types();
        for i in 0..1000 {
            let gamma = &types[i % types.len()];
            let mut heap = Heap::new();
            let v = gen_value(&mut heap, &mut rng, gamma, &cfg);
            let oracle = brute_force_min(&heap, &v);
            assert_eq!(
                heap.compressed_size(&v),
                oracle,
                "compressed size != quotient minimum (trial {})",
                i
            );
            let w = heap.compress(&v);
            assert_eq!(heap.size(&w), oracle);
            assert!(heap.bisimilar(&v, &w));
        }
        assert!(start.elapsed() < Duration::from_secs(30), "over 30 s");
    });
}

/// Rebuilds `v` with all sharing removed (valid only for small values).
fn unshare(heap: &mut Heap, root: VertexId) -> VertexId {
    let vx = heap.get(root).clone();
    match vx.label {
        Label::Unit => heap.alloc_unit(),
        Label::Inj(j) => {
            let c = unshare(heap, vx.children[0]);
            heap.alloc_inj(j, vx.tag, c)
        }
        Label::Pair => {
            let a = unshare(heap, vx.children[0]);
            let b = unshare(heap, vx.children[1]);
            heap.alloc_pair(vx.tag, a, b)
        }
        Label::Con => {
            let c = unshare(heap, vx.children[0]);
            heap.alloc_con(vx.tag, c)
        }
    }
}

#[test]
fn criterion_05_canonical_serialization() {
    report(5, "serialization is canonical and roundtrips", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x05);
        let cfg = GenConfig {
            max_cons: 8,
            share_prob: 0.5,
        };
        let types = value_types();
        for i in 0..500 {
            let gamma = &types[i % types.len()];
            let mut heap = Heap::new();
            let v = gen_value(&mut heap, &mut rng, gamma, &cfg);
            let w = if i % 2 == 0 {
                // Bisimilar by construction, with sharing destroyed.
                let root = unshare(&mut heap, v.root);
                heap.value(root, gamma.clone())
            } else {
                gen_value(&mut heap, &mut rng, gamma, &cfg)
            };
            let sv = serial::serialize(&mut heap, &v);
            let sw = serial::serialize(&mut heap, &w);
            assert_eq!(
                sv == sw,
                heap.bisimilar(&v, &w),
                "serialize equality must coincide with bisimilarity (trial {})",
                i
            );
            let back = serial::deserialize(&mut heap, gamma, &sv, Strictness::Strict).unwrap();
            assert!(heap.bisimilar(&back, &v), "roundtrip (trial {})", i);
            assert_eq!(heap.size(&back), heap.compressed_size(&v));
        }
    });
}

#[test]
fn criterion_06_leaf_literal() {
    report(6, "serialized Leaf matches the 3-item literal", || {
        let tree = GroundType::tree();
        let GroundType::Mu(p) = &tree else { unreachable!() };
        let leaf = Term::Con(p.clone(), Rc::new(Term::Inj(1, Rc::new(Term::Unit))));
        let tt = check_def(Calculus::S1, &leaf).unwrap();
        let mut heap = Heap::new();
        let (v, _) = eval(&mut heap, Semantics::Td, &tt, &mut Env::new()).unwrap();
        let items = serial::serialize(&mut heap, &v);
        let payload_ty = p.apply(&tree).to_string();
        let expected = vec![
            VtgItem::Mu {
                ty: tree.to_string(),
                addr: 1,
            },
            VtgItem::Inj {
                j: 1,
                ty: payload_ty,
                addr: 0,
            },
            VtgItem::Unit,
        ];
        assert_eq!(items, expected);
    });
}

#[test]
fn criterion_07_representation_size_bound() {
    report(7, "serialized size is quadratically bounded", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x07);
        let cfg = GenConfig {
            max_cons: 200,
            share_prob: 0.3,
        };
        let types = value_types();
        for i in 0..1000 {
            let gamma = &types[i % types.len()];
            let mut heap = Heap::new();
            let v = gen_value(&mut heap, &mut rng, gamma, &cfg);
            let size = heap.size(&v);
            assert!(size <= 200, "generator respects the size budget");
            let items = serial::serialize(&mut heap, &v);
            let bound = 16 * (size + 1) * (size + 1);
            assert!(
                (items.len() as u64) <= bound,
                "items {} exceed 16*(size+1)^2 = {} at size {}",
                items.len(),
                bound,
                size
            );
        }
    });
}

#[test]
fn criterion_08_ramified_typing() {
    report(8, "sample programs type at the expected types", || {
        let nat = GroundType::nat;
        let expect = |src: &str, name: &str, want: Ty| {
            let c = load(src);
            assert_eq!(c.defs[name].ty, want, "type of {}", name);
        };
        expect(
            PLUS_PRIME,
            "plus'",
            Ty::Arrow(
                GroundType::prod(nat().safe(), nat()),
                nat().safe(),
            ),
        );
        expect(
            TIMES_PRIME,
            "times'",
            Ty::Arrow(GroundType::prod(nat(), nat()), nat().safe()),
        );
        expect(
            PLUS,
            "plus",
            Ty::Arrow(GroundType::prod(nat(), nat()), nat()),
        );
        expect(
            TIMES,
            "times",
            Ty::Arrow(GroundType::prod(nat(), nat()), nat()),
        );
        expect(
            SUM_LST,
            "sum_lst",
            Ty::Arrow(GroundType::list(nat()), nat()),
        );
        expect(HEIGHT, "height", Ty::Arrow(GroundType::tree(), nat()));
        expect(GROW, "grow", Ty::Arrow(nat(), GroundType::tree()));

        // Negative tests: each violation is rejected with its own code.
        let reject = |src: &str, code: &str| {
            let program = syntax::load(src).unwrap();
            let (_, term) = &program.defs[0];
            let err = Checker::new(program.calculus)
                .synth(&mut Vec::new(), term)
                .expect_err("must be rejected");
            assert_eq!(err.code(), code, "for program: {}", src);
        };
        reject(
            "%calculus rs1\n\
             datatype nat = Zero | Succ of nat\n\
             def bad = fn (y : safe nat) =>\n\
               fold[nat] (fn (w : unit + safe nat) =>\n\
                 case w of inl u => safe Zero | inr n => n) y\n",
            "SideConditionFoldNormal",
        );
        reject(
            "%calculus rs1\n\
             datatype nat = Zero | Succ of nat\n\
             def bad = fn (y : safe nat) => toNorm y\n",
            "SideConditionToNorm",
        );
        reject(
            "%calculus rs1\n\
             datatype nat = Zero | Succ of nat\n\
             def bad = fn (y : safe nat) =>\n\
               case sdes[nat] y of inl u => Zero | inr n => Zero\n",
            "SideConditionCase",
        );
    });
}

#[test]
fn criterion_09_cek_fidelity() {
    report(9, "cek agrees with td within 3x steps", || {
        for (name, src) in CORPUS {
            let c = load(src);
            let Some(main) = &c.main else { continue };
            let mut heap = Heap::new();
            let (v_td, meter) = eval(&mut heap, Semantics::Td, main, &mut Env::new()).unwrap();
            let mut cek = Cek::new(&mut heap);
            let r = cek.run(main).unwrap();
            assert!(
                heap.bisimilar(&r.value, &v_td),
                "{}: cek value differs from td",
                name
            );
            assert!(
                r.steps <= 3 * meter.nodes,
                "{}: cek steps {} exceed 3 x {}",
                name,
                r.steps,
                meter.nodes
            );
        }
    });
}

/// All ramified judgments of the corpus: every lambda definition (binder in
/// context) and every `main` (empty context).
fn ramified_judgments() -> Vec<(String, Judgment, ramrec_core::analysis::bounds::Bounds)> {
    let mut out = Vec::new();
    for (name, src) in CORPUS {
        let c = load(src);
        if c.program.calculus < Calculus::Rs1 {
            continue;
        }
        for (dname, tt) in &c.defs {
            let TNode::Lam(x, ty, body) = &tt.node else {
                continue;
            };
            let (_, b) = def_bounds(tt).unwrap();
            out.push((
                format!("{}::{}", name, dname),
                Judgment {
                    ctx: vec![(x.clone(), ty.clone())],
                    term: body.as_ref().clone(),
                },
                b,
            ));
        }
        if let Some(main) = &c.main {
            let (_, b) = def_bounds(main).unwrap();
            out.push((
                format!("{}::main", name),
                Judgment {
                    ctx: Vec::new(),
                    term: main.clone(),
                },
                b,
            ));
        }
    }
    out
}

#[test]
fn criterion_10_bound_soundness() {
    report(10, "synthesized bounds are sound", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x10);
        let cfg = GenConfig {
            max_cons: 12,
            share_prob: 0.3,
        };
        for (name, judgment, b) in ramified_judgments() {
            for trial in 0..200 {
                let mut heap = Heap::new();
                let mut theta = Env::new();
                let mut point: BTreeMap<String, BigUint> = BTreeMap::new();
                for (x, gamma) in &judgment.ctx {
                    let v = gen_value(&mut heap, &mut rng, gamma, &cfg);
                    point.insert(
                        x.clone(),
                        BigUint::from(residual_of_var(&heap, gamma, &v)),
                    );
                    theta.push(x.clone(), v);
                }
                let (residual, meter) =
                    residual_size(&mut heap, &judgment, &theta, Semantics::Dp).unwrap();
                let qv = b.size.eval(&point);
                let pv = b.cost.eval(&point);
                assert!(
                    BigUint::from(residual) <= qv,
                    "{} trial {}: residual {} exceeds size bound {}",
                    name,
                    trial,
                    residual,
                    qv
                );
                assert!(
                    BigUint::from(meter.nodes) <= pv,
                    "{} trial {}: cost {} exceeds cost bound {}",
                    name,
                    trial,
                    meter.nodes,
                    pv
                );
            }
        }
        assert!(start.elapsed() < Duration::from_secs(60), "over 60 s");
    });
}

#[test]
fn criterion_11_noninterference() {
    report(11, "noninterference holds; the mutant leaks", || {
        for (name, judgment, _) in ramified_judgments() {
            if judgment.ctx.is_empty() {
                continue; // closed main: nothing to vary
            }
            let r = check_normal_invariance(
                &judgment,
                &NiOptions {
                    trials: 1000,
                    seed: 0x11,
                    ..NiOptions::default()
                },
            )
            .unwrap();
            assert!(r.passed(), "{}: {} failures", name, r.failures);
        }

        // Mutant: toNorm with its side condition disabled leaks a safe input.
        let leak = Term::Lam(
            "y".into(),
            Some(GroundType::nat().safe()),
            Rc::new(Term::ToNorm(Rc::new(Term::Var("y".into())))),
        );
        let mut checker = Checker::new(Calculus::Rs1);
        checker.disable_tonorm_side_condition = true;
        let tt = checker.synth(&mut Vec::new(), &leak).unwrap();
        let TNode::Lam(x, ty, body) = &tt.node else {
            unreachable!()
        };
        let j = Judgment {
            ctx: vec![(x.clone(), ty.clone())],
            term: body.as_ref().clone(),
        };
        let r = check_normal_invariance(
            &j,
            &NiOptions {
                trials: 1000,
                seed: 0x11,
                ..NiOptions::default()
            },
        )
        .unwrap();
        assert!(
            r.failures > 0,
            "the toNorm mutant must fail within 1000 trials"
        );
    });
}

#[test]
fn criterion_12_factorization_pipeline() {
    report(12, "serialize/deserialize factorization", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x12);
        let cfg = GenConfig {
            max_cons: 12,
            share_prob: 0.4,
        };
        let cases = [
            (HEIGHT, "height"),
            (SUM_LST, "sum_lst"),
            (PLUS, "plus"),
        ];
        for (src, name) in cases {
            let c = load(src);
            let f = &c.defs[name];
            let Ty::Arrow(dom, _) = &f.ty else {
                panic!("{} is not a function", name)
            };
            for trial in 0..100 {
                let mut heap = Heap::new();
                let v = gen_value(&mut heap, &mut rng, dom, &cfg);
                serial::factor_pipeline(&mut heap, f, &v)
                    .unwrap_or_else(|e| panic!("{} trial {}: {}", name, trial, e));
            }
        }
    });
}
