//! Pretty-printing core terms back to surface syntax.
//!
//! `pretty` emits fully explicit core forms (`con[mu(...)] e`, `inl e`, ...)
//! and its output always parses back to an alpha-equivalent term.
//! `pretty_with_env` additionally resugars constructor chains to declared
//! constructor names.

use std::fmt::Write;

use super::desugar::DatatypeEnv;
use crate::heap::{Heap, Label, ValueRef};
use crate::term::Term;
use crate::types::{Functor, GroundType};

/// Canonical surface form of a ground type (parseable by `parse_type`).
pub fn pretty_type(g: &GroundType) -> String {
    g.to_string()
}

/// Renders a core term as parseable surface syntax.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    go(t, 0, None, &mut out);
    out
}

/// Like `pretty`, but resugars constructors of declared datatypes.
pub fn pretty_with_env(t: &Term, env: &DatatypeEnv) -> String {
    let mut out = String::new();
    go(t, 0, Some(env), &mut out);
    out
}

/// Reads back a heap value as a core term (constructor chains, pairs,
/// injections). Shared subgraphs become shared `Rc` subterms, so building is
/// linear in the dag size, but printing the result expands sharing.
pub fn value_term(heap: &Heap, v: &ValueRef) -> Term {
    fn go(
        heap: &Heap,
        id: crate::heap::VertexId,
        memo: &mut std::collections::HashMap<u32, std::rc::Rc<Term>>,
    ) -> std::rc::Rc<Term> {
        if let Some(t) = memo.get(&id.0) {
            return t.clone();
        }
        let vx = heap.get(id);
        let t = match (&vx.label, &vx.tag) {
            (Label::Unit, _) => std::rc::Rc::new(Term::Unit),
            (Label::Inj(j), _) => std::rc::Rc::new(Term::Inj(*j, go(heap, vx.children[0], memo))),
            (Label::Pair, _) => std::rc::Rc::new(Term::Pair(
                go(heap, vx.children[0], memo),
                go(heap, vx.children[1], memo),
            )),
            (Label::Con, GroundType::Mu(p)) => {
                std::rc::Rc::new(Term::Con(p.clone(), go(heap, vx.children[0], memo)))
            }
            (Label::Con, other) => unreachable!("con vertex tagged {}", other),
        };
        memo.insert(id.0, t.clone());
        t
    }
    let t = go(heap, v.root, &mut std::collections::HashMap::new());
    t.as_ref().clone()
}

/// Renders an evaluation result: the term text (resugared when small enough
/// to expand) or a placeholder for values whose tree expansion is huge.
pub fn render_value(heap: &Heap, v: &ValueRef, env: &DatatypeEnv, max_tree: u64) -> String {
    match heap.tree_size(v) {
        Ok(n) if n <= max_tree => {
            let mut t = value_term(heap, v);
            if v.ty.ramification() == crate::types::Ramification::Safe {
                t = Term::ToSafe(std::rc::Rc::new(t));
            }
            pretty_with_env(&t, env)
        }
        _ => format!(
            "<value: size {}, compressed size {}, tree size {}>",
            heap.size(v),
            heap.compressed_size(v),
            heap.tree_size_big(v)
        ),
    }
}

/// Recognizes `Succ^n(Zero)` chains built from declared constructors.
fn as_numeral(t: &Term, env: &DatatypeEnv) -> Option<u64> {
    let mut n = 0u64;
    let mut cur = t;
    loop {
        let Term::Con(p, body) = cur else {
            return None;
        };
        let dt = env.datatypes.iter().find(|d| *d.functor == **p)?;
        let (idx, payload) = unchain(body, dt.ctors.len())?;
        match dt.ctors[idx].name.as_str() {
            "Zero" if dt.ctors[idx].payload.is_none() => {
                if matches!(payload, Term::Unit) {
                    return Some(n);
                }
                return None;
            }
            "Succ" => {
                n = n.checked_add(1)?;
                cur = payload;
            }
            _ => return None,
        }
    }
}

fn bracket(p: &Functor) -> String {
    format!("mu({})", p)
}

/// Decomposes `inj`-chain `t` against a right-nested sum of `count` pieces,
/// returning the constructor index and the payload term.
fn unchain<'a>(mut t: &'a Term, count: usize) -> Option<(usize, &'a Term)> {
    if count <= 1 {
        return Some((0, t));
    }
    let mut idx = 0;
    loop {
        match t {
            Term::Inj(1, inner) if idx < count - 1 => return Some((idx, inner)),
            Term::Inj(2, inner) => {
                idx += 1;
                t = inner;
                if idx == count - 1 {
                    return Some((idx, t));
                }
            }
            _ => return None,
        }
    }
}

/// Tries to print `Con`/`SafeCon` as a declared constructor application.
fn try_ctor(
    p: &Functor,
    body: &Term,
    safe: bool,
    env: &DatatypeEnv,
    prec: u8,
    out: &mut String,
) -> bool {
    for dt in &env.datatypes {
        if *dt.functor != *p {
            continue;
        }
        let Some((idx, payload)) = unchain(body, dt.ctors.len()) else {
            return false;
        };
        let ctor = &dt.ctors[idx];
        match &ctor.payload {
            None => {
                let nullary_ok = match (safe, payload) {
                    (false, Term::Unit) => true,
                    (true, Term::ToSafe(u)) => matches!(u.as_ref(), Term::Unit),
                    _ => false,
                };
                if !nullary_ok {
                    return false;
                }
                let open = prec > 1 && safe;
                if open {
                    out.push('(');
                }
                if safe {
                    out.push_str("safe ");
                }
                out.push_str(&ctor.name);
                if open {
                    out.push(')');
                }
            }
            Some(_) => {
                let open = prec > 1 && safe;
                if open {
                    out.push('(');
                }
                if safe {
                    out.push_str("safe ");
                }
                out.push_str(&ctor.name);
                if matches!(payload, Term::Pair(..)) {
                    go(payload, 2, Some(env), out);
                } else {
                    out.push('(');
                    go(payload, 0, Some(env), out);
                    out.push(')');
                }
                if open {
                    out.push(')');
                }
            }
        }
        return true;
    }
    false
}

fn unary(op: &str, e: &Term, prec: u8, env: Option<&DatatypeEnv>, out: &mut String) {
    if prec > 1 {
        out.push('(');
    }
    out.push_str(op);
    out.push(' ');
    go(e, 2, env, out);
    if prec > 1 {
        out.push(')');
    }
}

fn go(t: &Term, prec: u8, env: Option<&DatatypeEnv>, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Unit => out.push_str("()"),
        Term::Pair(a, b) => {
            out.push('(');
            go(a, 0, env, out);
            out.push_str(", ");
            go(b, 0, env, out);
            out.push(')');
        }
        Term::Lam(x, ann, body) => {
            if prec > 0 {
                out.push('(');
            }
            match ann {
                Some(ty) => {
                    let _ = write!(out, "fn ({} : {}) => ", x, ty);
                }
                None => {
                    let _ = write!(out, "fn {} => ", x);
                }
            }
            go(body, 0, env, out);
            if prec > 0 {
                out.push(')');
            }
        }
        Term::App(f, a) => {
            if prec > 1 {
                out.push('(');
            }
            go(f, 1, env, out);
            out.push(' ');
            go(a, 2, env, out);
            if prec > 1 {
                out.push(')');
            }
        }
        Term::Proj(j, e) => unary(if *j == 1 { "fst" } else { "snd" }, e, prec, env, out),
        Term::Inj(j, e) => unary(if *j == 1 { "inl" } else { "inr" }, e, prec, env, out),
        Term::Case(s, x1, e1, x2, e2) => {
            if prec > 0 {
                out.push('(');
            }
            out.push_str("case ");
            go(s, 1, env, out);
            out.push_str(" of inl ");
            out.push_str(x1);
            out.push_str(" => (");
            go(e1, 0, env, out);
            out.push_str(") | inr ");
            out.push_str(x2);
            out.push_str(" => ");
            go(e2, 0, env, out);
            if prec > 0 {
                out.push(')');
            }
        }
        Term::Con(p, e) => {
            if let Some(env) = env {
                if let Some(n) = as_numeral(t, env) {
                    let _ = write!(out, "{}", n);
                    return;
                }
                if try_ctor(p, e, false, env, prec, out) {
                    return;
                }
            }
            unary(&format!("con[{}]", bracket(p)), e, prec, env, out);
        }
        Term::Des(p, e) => unary(&format!("des[{}]", bracket(p)), e, prec, env, out),
        Term::SafeCon(p, e) => {
            if let Some(env) = env {
                if try_ctor(p, e, true, env, prec, out) {
                    return;
                }
            }
            unary(&format!("scon[{}]", bracket(p)), e, prec, env, out);
        }
        Term::SafeDes(p, e) => unary(&format!("sdes[{}]", bracket(p)), e, prec, env, out),
        Term::ToSafe(e) => unary("toSafe", e, prec, env, out),
        Term::ToNorm(e) => unary("toNorm", e, prec, env, out),
        Term::Cs(p, e) => unary(&format!("cs[{}]", bracket(p)), e, prec, env, out),
        Term::Fold(p, f, e) => {
            if prec > 1 {
                out.push('(');
            }
            let _ = write!(out, "fold[{}] ", bracket(p));
            go(f, 2, env, out);
            out.push(' ');
            go(e, 2, env, out);
            if prec > 1 {
                out.push(')');
            }
        }
    }
}
