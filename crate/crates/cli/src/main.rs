//! `ramrec`: interpreter and analysis toolkit for ramified structural
//! recursion over shared term graphs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ramrec_core::analysis::bounds::def_bounds;
use ramrec_core::analysis::ni::{check_normal_invariance, NiOptions};
use ramrec_core::analysis::span::Judgment;
use ramrec_core::cek::Cek;
use ramrec_core::check::Checker;
use ramrec_core::eval::{eval, Env, Evaluator, Meter, Semantics};
use ramrec_core::heap::{Heap, ValueRef};
use ramrec_core::serial;
use ramrec_core::syntax::{self, pretty::render_value, DatatypeEnv, Program};
use ramrec_core::term::{Calculus, TNode, TTerm};

#[derive(Parser)]
#[command(
    name = "ramrec",
    about = "Interpreter and analysis toolkit for ramified structural recursion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Td,
    Dp,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Semantics {
        match s {
            SemanticsArg::Td => Semantics::Td,
            SemanticsArg::Dp => Semantics::Dp,
        }
    }
}

fn semantics_name(s: Semantics) -> &'static str {
    match s {
        Semantics::Td => "td",
        Semantics::Dp => "dp",
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a program and print the types of its definitions.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a program's `main` under the big-step semantics.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dp")]
        semantics: SemanticsArg,
        /// Print the cost meter.
        #[arg(long)]
        meter: bool,
        #[arg(long)]
        json: bool,
        /// Abort after this many derivation nodes.
        #[arg(long)]
        max_steps: Option<u64>,
        /// Write the result graph in DOT format to this path.
        #[arg(long)]
        dump_dot: Option<PathBuf>,
    },
    /// Evaluate a program's `main` on the CEK machine.
    Cek {
        file: PathBuf,
        /// Print the machine transition trace.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Evaluate `main` and report sizes before and after dag compression.
    Compress {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dp")]
        semantics: SemanticsArg,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        dump_dot: Option<PathBuf>,
    },
    /// Evaluate `main` and print its canonical serialized representation.
    Serialize {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dp")]
        semantics: SemanticsArg,
        /// Accepted for uniformity; the output is always JSON.
        #[arg(long)]
        json: bool,
    },
    /// Read a serialized value (file or `-` for stdin) and validate it.
    Deserialize {
        input: PathBuf,
        /// Expected value type (defaults to the root item's recorded type).
        #[arg(long = "type")]
        ty: Option<String>,
        /// Reject representations with unreachable items.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print synthesized size and cost bounds for each definition.
    Bounds {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Noninterference testing: safe inputs must not influence results.
    NiCheck {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: u32,
        /// Base seed (RAMREC_SEED overrides the default).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Run every program in a directory against its expected output.
    Corpus {
        #[arg(default_value = "programs")]
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// A loaded, desugared, and typechecked program.
struct Checked {
    program: Program,
    defs: Vec<(String, TTerm)>,
    main: Option<TTerm>,
}

fn load_checked(path: &Path) -> Result<Checked> {
    let source = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    check_source(&source).with_context(|| format!("in {}", path.display()))
}

fn check_source(source: &str) -> Result<Checked> {
    let program = syntax::load(source).map_err(|e| anyhow!("{}", e))?;
    let mut defs = Vec::new();
    for (name, term) in &program.defs {
        let tt = Checker::new(program.calculus)
            .synth(&mut Vec::new(), term)
            .map_err(|e| anyhow!("in definition `{}`: {} [{}]", name, e, e.code()))?;
        defs.push((name.clone(), tt));
    }
    let main = match &program.main {
        Some(m) => Some(
            Checker::new(program.calculus)
                .synth(&mut Vec::new(), m)
                .map_err(|e| anyhow!("in `main`: {} [{}]", e, e.code()))?,
        ),
        None => None,
    };
    Ok(Checked {
        program,
        defs,
        main,
    })
}

fn require_main(c: &Checked) -> Result<&TTerm> {
    c.main
        .as_ref()
        .ok_or_else(|| anyhow!("program has no `main`"))
}

const RENDER_LIMIT: u64 = 1 << 16;

fn value_report(heap: &Heap, v: &ValueRef, env: &DatatypeEnv) -> Value {
    let ts = heap.tree_size(v).ok();
    json!({
        "pretty": render_value(heap, v, env, RENDER_LIMIT),
        "type": v.ty.to_string(),
        "size": heap.size(v),
        "cs": heap.compressed_size(v),
        "ts": ts,
    })
}

fn meter_report(m: &Meter) -> Value {
    json!({
        "nodes": m.nodes,
        "fold_steps": m.fold_steps,
        "memo_hits": m.memo_hits,
        "cs_nodes": m.cs_nodes,
    })
}

fn program_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn seed_from_env() -> Option<u64> {
    std::env::var("RAMREC_SEED").ok().and_then(|s| s.parse().ok())
}

fn cmd_check(file: &Path, json: bool) -> Result<()> {
    let c = load_checked(file)?;
    if json {
        let defs: Vec<Value> = c
            .defs
            .iter()
            .map(|(n, t)| json!({"name": n, "type": t.ty.to_string()}))
            .collect();
        println!(
            "{}",
            json!({
                "program": program_id(file),
                "calculus": c.program.calculus.name(),
                "defs": defs,
                "main": c.main.as_ref().map(|t| t.ty.to_string()),
            })
        );
    } else {
        println!("calculus: {}", c.program.calculus.name());
        for (name, t) in &c.defs {
            println!("{} : {}", name, t.ty);
        }
        if let Some(m) = &c.main {
            println!("main : {}", m.ty);
        }
        println!("ok");
    }
    Ok(())
}

fn cmd_run(
    file: &Path,
    semantics: Semantics,
    meter: bool,
    json: bool,
    max_steps: Option<u64>,
    dump_dot: Option<&Path>,
) -> Result<()> {
    let c = load_checked(file)?;
    let main = require_main(&c)?;
    let mut heap = Heap::new();
    let mut ev = Evaluator::new(&mut heap, semantics);
    if let Some(l) = max_steps {
        ev.meter = Meter::with_limit(l);
    }
    let start = Instant::now();
    let v = ev
        .eval(main, &mut Env::new())
        .map_err(|e| anyhow!("evaluation failed: {}", e))?;
    let elapsed = start.elapsed().as_secs_f64() * 1000.0;
    let m = ev.meter.clone();
    if let Some(p) = dump_dot {
        std::fs::write(p, heap.to_dot(&v))?;
    }
    if json {
        println!(
            "{}",
            json!({
                "program": program_id(file),
                "calculus": c.program.calculus.name(),
                "semantics": semantics_name(semantics),
                "result": value_report(&heap, &v, &c.program.env),
                "meter": meter_report(&m),
                "time_ms": elapsed,
            })
        );
    } else {
        println!("{}", render_value(&heap, &v, &c.program.env, RENDER_LIMIT));
        if meter {
            println!(
                "nodes={} fold_steps={} memo_hits={} cs_nodes={} size={} cs={} time_ms={:.2}",
                m.nodes,
                m.fold_steps,
                m.memo_hits,
                m.cs_nodes,
                heap.size(&v),
                heap.compressed_size(&v),
                elapsed
            );
        }
    }
    Ok(())
}

fn cmd_cek(file: &Path, trace: bool, json: bool, max_steps: Option<u64>) -> Result<()> {
    let c = load_checked(file)?;
    let main = require_main(&c)?;
    let mut heap = Heap::new();
    let mut cek = Cek::new(&mut heap);
    cek.max_steps = max_steps;
    cek.trace = trace;
    let r = cek
        .run(main)
        .map_err(|e| anyhow!("machine run failed: {}", e))?;
    if json {
        println!(
            "{}",
            json!({
                "program": program_id(file),
                "steps": r.steps,
                "result": value_report(&heap, &r.value, &c.program.env),
                "trace": r.trace,
            })
        );
    } else {
        if let Some(lines) = &r.trace {
            for l in lines {
                println!("{}", l);
            }
        }
        println!(
            "{}",
            render_value(&heap, &r.value, &c.program.env, RENDER_LIMIT)
        );
        println!("steps={}", r.steps);
    }
    Ok(())
}

fn cmd_compress(
    file: &Path,
    semantics: Semantics,
    json: bool,
    dump_dot: Option<&Path>,
) -> Result<()> {
    let c = load_checked(file)?;
    let main = require_main(&c)?;
    let mut heap = Heap::new();
    let (v, _) = eval(&mut heap, semantics, main, &mut Env::new())
        .map_err(|e| anyhow!("evaluation failed: {}", e))?;
    let before_size = heap.size(&v);
    let before_total = heap.total_vertices(&v);
    let w = heap.compress(&v);
    let after_size = heap.size(&w);
    let after_total = heap.total_vertices(&w);
    if !heap.bisimilar(&v, &w) {
        bail!("internal: compression changed the value");
    }
    if let Some(p) = dump_dot {
        std::fs::write(p, heap.to_dot(&w))?;
    }
    if json {
        println!(
            "{}",
            json!({
                "program": program_id(file),
                "before": {"size": before_size, "total_vertices": before_total},
                "after": {"size": after_size, "total_vertices": after_total},
                "result": value_report(&heap, &w, &c.program.env),
            })
        );
    } else {
        println!(
            "size: {} -> {} (total vertices {} -> {})",
            before_size, after_size, before_total, after_total
        );
        println!("{}", render_value(&heap, &w, &c.program.env, RENDER_LIMIT));
    }
    Ok(())
}

fn cmd_serialize(file: &Path, semantics: Semantics) -> Result<()> {
    let c = load_checked(file)?;
    let main = require_main(&c)?;
    let mut heap = Heap::new();
    let (v, _) = eval(&mut heap, semantics, main, &mut Env::new())
        .map_err(|e| anyhow!("evaluation failed: {}", e))?;
    let items = serial::serialize(&mut heap, &v);
    println!("{}", serial::to_json(&items));
    Ok(())
}

fn parse_ground(text: &str) -> Result<ramrec_core::types::GroundType> {
    let sty = syntax::parse_type(text).map_err(|e| anyhow!("invalid type `{}`: {}", text, e))?;
    syntax::desugar::resolve_type(&sty, &DatatypeEnv::default())
        .map_err(|e| anyhow!("invalid type `{}`: {}", text, e))
}

fn root_type(items: &[serial::VtgItem]) -> Result<ramrec_core::types::GroundType> {
    match items.first() {
        None => bail!("invalid representation: empty item list"),
        Some(serial::VtgItem::Unit) => Ok(ramrec_core::types::GroundType::Unit),
        Some(serial::VtgItem::Inj { ty, .. })
        | Some(serial::VtgItem::Pair { ty, .. })
        | Some(serial::VtgItem::Mu { ty, .. }) => parse_ground(ty),
    }
}

fn cmd_deserialize(input: &Path, ty: Option<&str>, strict: bool, json: bool) -> Result<()> {
    let text = if input.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(input)
            .with_context(|| format!("cannot read {}", input.display()))?
    };
    let items = serial::from_json(&text).map_err(|e| anyhow!("invalid representation: {}", e))?;
    let strictness = if strict {
        serial::Strictness::Strict
    } else {
        serial::Strictness::Lenient
    };
    let gamma = match ty {
        Some(t) => parse_ground(t)?,
        None => root_type(&items)?,
    };
    let mut heap = Heap::new();
    let v = serial::deserialize(&mut heap, &gamma, &items, strictness)
        .map_err(|e| anyhow!("invalid representation: {}", e))?;
    let env = DatatypeEnv::default();
    if json {
        println!(
            "{}",
            json!({"items": items.len(), "result": value_report(&heap, &v, &env)})
        );
    } else {
        println!("{}", render_value(&heap, &v, &env, RENDER_LIMIT));
        println!(
            "type={} size={} cs={}",
            v.ty,
            heap.size(&v),
            heap.compressed_size(&v)
        );
    }
    Ok(())
}

fn cmd_bounds(file: &Path, json: bool) -> Result<()> {
    let c = load_checked(file)?;
    if c.program.calculus < Calculus::Rs1 {
        bail!("bound synthesis applies to ramified programs (rs1 or rs1.1)");
    }
    let mut rows = Vec::new();
    for (name, tt) in &c.defs {
        let (binder, b) =
            def_bounds(tt).map_err(|e| anyhow!("in definition `{}`: {}", name, e))?;
        rows.push((name.clone(), binder, b));
    }
    if let Some(m) = &c.main {
        let (_, b) = def_bounds(m).map_err(|e| anyhow!("in `main`: {}", e))?;
        rows.push(("main".to_string(), String::new(), b));
    }
    if json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|(n, x, b)| {
                json!({
                    "name": n,
                    "binder": x,
                    "size": b.size.to_string(),
                    "cost": b.cost.to_string(),
                })
            })
            .collect();
        println!(
            "{}",
            json!({"program": program_id(file), "bounds": rows})
        );
    } else {
        for (n, x, b) in &rows {
            let of = if x.is_empty() {
                String::new()
            } else {
                format!(" (in {})", x)
            };
            println!("{}{}: size <= {}, cost <= {}", n, of, b.size, b.cost);
        }
    }
    Ok(())
}

/// Splits a typed definition `\x. body` into a single-binder judgment.
fn judgment_of(tt: &TTerm) -> Option<Judgment> {
    match &tt.node {
        TNode::Lam(x, ty, body) => Some(Judgment {
            ctx: vec![(x.clone(), ty.clone())],
            term: body.as_ref().clone(),
        }),
        _ => None,
    }
}

fn cmd_ni_check(file: &Path, trials: u32, seed: Option<u64>, json: bool) -> Result<()> {
    let c = load_checked(file)?;
    if c.program.calculus < Calculus::Rs1 {
        bail!("noninterference applies to ramified programs (rs1 or rs1.1)");
    }
    let seed = seed.or_else(seed_from_env).unwrap_or(0);
    let mut rows = Vec::new();
    let mut all_ok = true;
    for (name, tt) in &c.defs {
        let Some(j) = judgment_of(tt) else {
            continue;
        };
        let report = check_normal_invariance(
            &j,
            &NiOptions {
                trials,
                seed,
                ..NiOptions::default()
            },
        )
        .map_err(|e| anyhow!("in definition `{}`: {}", name, e))?;
        all_ok &= report.passed();
        rows.push((name.clone(), report));
    }
    if json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|(n, r)| {
                json!({
                    "name": n,
                    "trials": r.trials,
                    "failures": r.failures,
                    "vacuous": r.vacuous,
                    "passed": r.passed(),
                })
            })
            .collect();
        println!(
            "{}",
            json!({"program": program_id(file), "seed": seed, "checks": rows})
        );
    } else {
        for (n, r) in &rows {
            let status = if r.passed() {
                if r.vacuous {
                    "pass (vacuous)"
                } else {
                    "pass"
                }
            } else {
                "FAIL"
            };
            println!("{}: {} ({} trials, {} failures)", n, status, r.trials, r.failures);
        }
    }
    if !all_ok {
        bail!("noninterference check failed");
    }
    Ok(())
}

struct CorpusRow {
    program: String,
    status: &'static str,
    detail: String,
}

fn corpus_one(path: &Path) -> CorpusRow {
    let id = program_id(path);
    let fail = |detail: String| CorpusRow {
        program: id.clone(),
        status: "FAIL",
        detail,
    };
    let c = match load_checked(path) {
        Ok(c) => c,
        Err(e) => return fail(format!("{:#}", e)),
    };
    let Some(main) = c.main.as_ref() else {
        return CorpusRow {
            program: id,
            status: "pass",
            detail: "typechecked (no main)".to_string(),
        };
    };

    // Evaluate under both semantics, then on the CEK machine, and check that
    // the three agree; when a sidecar exists, compare the rendered result.
    let mut heap = Heap::new();
    let td = eval(&mut heap, Semantics::Td, main, &mut Env::new());
    let (v_td, m_td) = match td {
        Ok(r) => r,
        Err(e) => return fail(format!("td evaluation: {}", e)),
    };
    let (v_dp, _) = match eval(&mut heap, Semantics::Dp, main, &mut Env::new()) {
        Ok(r) => r,
        Err(e) => return fail(format!("dp evaluation: {}", e)),
    };
    if !heap.bisimilar(&v_td, &v_dp) {
        return fail("td and dp results differ".to_string());
    }
    let mut cek = Cek::new(&mut heap);
    let r = match cek.run(main) {
        Ok(r) => r,
        Err(e) => return fail(format!("cek run: {}", e)),
    };
    if !heap.bisimilar(&r.value, &v_td) {
        return fail("cek result differs from td".to_string());
    }
    if r.steps > 3 * m_td.nodes {
        return fail(format!(
            "cek steps {} exceed 3 x td cost {}",
            r.steps, m_td.nodes
        ));
    }
    let rendered = render_value(&heap, &v_dp, &c.program.env, RENDER_LIMIT);
    let expected_path = path.with_extension("expected");
    if let Ok(expected) = std::fs::read_to_string(&expected_path) {
        if rendered.trim() != expected.trim() {
            return fail(format!(
                "expected `{}`, got `{}`",
                expected.trim(),
                rendered
            ));
        }
    }
    CorpusRow {
        program: id,
        status: "pass",
        detail: rendered,
    }
}

fn cmd_corpus(dir: &Path, json: bool) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "s1"))
        .collect();
    files.sort();
    if files.is_empty() {
        eprintln!("warning: no .s1 programs in {}", dir.display());
        return Ok(());
    }
    let rows: Vec<CorpusRow> = files.iter().map(|f| corpus_one(f)).collect();
    let failed = rows.iter().filter(|r| r.status == "FAIL").count();
    if json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|r| json!({"program": r.program, "status": r.status, "detail": r.detail}))
            .collect();
        println!(
            "{}",
            json!({"total": rows.len(), "failed": failed, "programs": rows})
        );
    } else {
        for r in &rows {
            println!("{:<16} {:<6} {}", r.program, r.status, r.detail);
        }
        println!("{} programs, {} failed", rows.len(), failed);
    }
    if failed > 0 {
        bail!("{} corpus program(s) failed", failed);
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Check { file, json } => cmd_check(&file, json),
        Cmd::Run {
            file,
            semantics,
            meter,
            json,
            max_steps,
            dump_dot,
        } => cmd_run(
            &file,
            semantics.into(),
            meter,
            json,
            max_steps,
            dump_dot.as_deref(),
        ),
        Cmd::Cek {
            file,
            trace,
            json,
            max_steps,
        } => cmd_cek(&file, trace, json, max_steps),
        Cmd::Compress {
            file,
            semantics,
            json,
            dump_dot,
        } => cmd_compress(&file, semantics.into(), json, dump_dot.as_deref()),
        Cmd::Serialize {
            file,
            semantics,
            json: _,
        } => cmd_serialize(&file, semantics.into()),
        Cmd::Deserialize {
            input,
            ty,
            strict,
            json,
        } => cmd_deserialize(&input, ty.as_deref(), strict, json),
        Cmd::Bounds { file, json } => cmd_bounds(&file, json),
        Cmd::NiCheck {
            file,
            trials,
            seed,
            json,
        } => cmd_ni_check(&file, trials, seed, json),
        Cmd::Corpus { dir, json } => cmd_corpus(&dir, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli.command))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {:#}", e);
            if format!("{:#}", e).starts_with("internal") {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => {
            eprintln!("error: internal invariant failure");
            ExitCode::from(2)
        }
    }
}
