//! Desugaring from the surface AST to core terms.
//!
//! Datatype declarations become polynomial functors (the declared name maps
//! to `Id`, other datatype names to constants). Constructor applications
//! become `con`/`inj` chains, numerals become `Succ`/`Zero` chains, list
//! literals become `Cons`/`Empty` chains, `let` becomes an applied lambda,
//! and pattern bindings become projections. Top-level definitions are
//! non-recursive and inlined in order.

use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::parse::{CtorArm, Pat, Pos, STy, SurfaceProgram, ST};
use super::{SyntaxError, SyntaxErrorKind};
use crate::term::{Calculus, Term};
use crate::types::{Functor, GroundType};

/// One declared constructor: its payload type (None = no argument, i.e.
/// payload `unit`) and its injection path into the right-nested sum functor
/// (outermost injection first).
#[derive(Debug, Clone)]
pub struct Ctor {
    pub name: String,
    pub payload: Option<GroundType>,
    pub path: Vec<u8>,
}

/// A resolved datatype declaration.
#[derive(Debug, Clone)]
pub struct Datatype {
    pub name: String,
    pub functor: Rc<Functor>,
    pub ty: GroundType,
    pub ctors: Vec<Ctor>,
}

/// All datatypes of a program, with constructor lookup.
#[derive(Debug, Clone, Default)]
pub struct DatatypeEnv {
    pub datatypes: Vec<Datatype>,
    by_name: BTreeMap<String, usize>,
    by_ctor: BTreeMap<String, (usize, usize)>,
}

impl DatatypeEnv {
    pub fn datatype(&self, name: &str) -> Option<&Datatype> {
        self.by_name.get(name).map(|&i| &self.datatypes[i])
    }

    pub fn ctor(&self, name: &str) -> Option<(&Datatype, &Ctor)> {
        self.by_ctor
            .get(name)
            .map(|&(d, c)| (&self.datatypes[d], &self.datatypes[d].ctors[c]))
    }

    /// Map from datatype name to its ground type.
    pub fn type_map(&self) -> BTreeMap<String, GroundType> {
        self.datatypes
            .iter()
            .map(|d| (d.name.clone(), d.ty.clone()))
            .collect()
    }
}

/// A desugared program: fully inlined definitions plus optional `main`.
#[derive(Debug, Clone)]
pub struct Program {
    pub calculus: Calculus,
    pub env: DatatypeEnv,
    pub defs: Vec<(String, Term)>,
    pub main: Option<Term>,
}

static FRESH: AtomicUsize = AtomicUsize::new(0);

fn fresh(prefix: &str) -> String {
    format!("%{}{}", prefix, FRESH.fetch_add(1, Ordering::Relaxed))
}

fn err(kind: SyntaxErrorKind, pos: Pos, msg: impl Into<String>) -> SyntaxError {
    SyntaxError::new(kind, pos.0, pos.1, msg)
}

// ---- types ----

/// Resolves a surface type to a ground type. `#` is not allowed here.
pub fn resolve_type(t: &STy, env: &DatatypeEnv) -> Result<GroundType, SyntaxError> {
    match t {
        STy::Unit => Ok(GroundType::Unit),
        STy::Hash(p) => Err(err(
            SyntaxErrorKind::Parse,
            *p,
            "`#` may only appear inside `mu(...)` or a datatype declaration",
        )),
        STy::Safe(inner) => Ok(resolve_type(inner, env)?.safe()),
        STy::Mu(body) => Ok(GroundType::mu(resolve_functor(body, env, None)?)),
        STy::Name(n, p) => env.datatype(n).map(|d| d.ty.clone()).ok_or_else(|| {
            err(
                SyntaxErrorKind::UnknownDatatype,
                *p,
                format!("unknown datatype `{}`", n),
            )
        }),
        STy::Sum(a, b) => Ok(GroundType::sum(
            resolve_type(a, env)?,
            resolve_type(b, env)?,
        )),
        STy::Prod(a, b) => Ok(GroundType::prod(
            resolve_type(a, env)?,
            resolve_type(b, env)?,
        )),
    }
}

/// Resolves a surface type to a functor: `#` (and the datatype's own name,
/// when `self_name` is given) maps to `Id`; everything else becomes a
/// constant.
fn resolve_functor(
    t: &STy,
    env: &DatatypeEnv,
    self_name: Option<&str>,
) -> Result<Functor, SyntaxError> {
    match t {
        STy::Hash(_) => Ok(Functor::Id),
        STy::Name(n, _) if Some(n.as_str()) == self_name => Ok(Functor::Id),
        STy::Sum(a, b) => Ok(Functor::sum(
            resolve_functor(a, env, self_name)?,
            resolve_functor(b, env, self_name)?,
        )),
        STy::Prod(a, b) => Ok(Functor::prod(
            resolve_functor(a, env, self_name)?,
            resolve_functor(b, env, self_name)?,
        )),
        other => Ok(Functor::Const(resolve_type(other, env)?)),
    }
}

/// Resolves a bracket type (as in `con[...]`) to a datatype functor. Accepts
/// a datatype name, `mu(...)`, or `safe` of either.
fn resolve_mu(t: &STy, env: &DatatypeEnv, pos: Pos) -> Result<Rc<Functor>, SyntaxError> {
    let g = resolve_type(t, env)?;
    match g {
        GroundType::Mu(p) | GroundType::SafeMu(p) => Ok(p),
        other => Err(err(
            SyntaxErrorKind::UnknownDatatype,
            pos,
            format!("expected a datatype here, found `{}`", other),
        )),
    }
}

fn injection_path(index: usize, count: usize) -> Vec<u8> {
    if count <= 1 {
        return Vec::new();
    }
    if index == count - 1 {
        vec![2; count - 1]
    } else {
        let mut p = vec![2; index];
        p.push(1);
        p
    }
}

fn build_env(program: &SurfaceProgram) -> Result<DatatypeEnv, SyntaxError> {
    let mut env = DatatypeEnv::default();
    for decl in &program.datatypes {
        let mut pieces = Vec::new();
        for (_, arg) in &decl.ctors {
            let f = match arg {
                Some(t) => resolve_functor(t, &env, Some(&decl.name))?,
                None => Functor::Const(GroundType::Unit),
            };
            pieces.push(f);
        }
        let functor = pieces
            .clone()
            .into_iter()
            .rev()
            .reduce(|acc, f| Functor::sum(f, acc))
            .expect("declarations have at least one constructor");
        if !functor.constants_are_normal_base() {
            return Err(err(
                SyntaxErrorKind::Parse,
                decl.pos,
                format!(
                    "datatype `{}` has a non-normal constant field; \
                     datatype fields must be normal base types",
                    decl.name
                ),
            ));
        }
        let ty = GroundType::mu(functor.clone());
        if !ty.is_inhabited() {
            return Err(err(
                SyntaxErrorKind::Parse,
                decl.pos,
                format!("datatype `{}` has no values", decl.name),
            ));
        }
        let count = decl.ctors.len();
        let mut ctors = Vec::new();
        for (i, (cname, arg)) in decl.ctors.iter().enumerate() {
            let payload = match arg {
                Some(t) => Some(resolve_type_with_self(t, &env, &decl.name, &ty)?),
                None => None,
            };
            ctors.push(Ctor {
                name: cname.clone(),
                payload,
                path: injection_path(i, count),
            });
        }
        let idx = env.datatypes.len();
        for (ci, c) in ctors.iter().enumerate() {
            env.by_ctor.insert(c.name.clone(), (idx, ci));
        }
        env.by_name.insert(decl.name.clone(), idx);
        env.datatypes.push(Datatype {
            name: decl.name.clone(),
            functor: Rc::new(functor),
            ty,
            ctors,
        });
    }
    Ok(env)
}

/// Like `resolve_type` but with the datatype's own name mapping to its
/// (just computed) recursive type, for constructor payload types.
fn resolve_type_with_self(
    t: &STy,
    env: &DatatypeEnv,
    self_name: &str,
    self_ty: &GroundType,
) -> Result<GroundType, SyntaxError> {
    match t {
        STy::Name(n, _) if n == self_name => Ok(self_ty.clone()),
        STy::Hash(_) => Ok(self_ty.clone()),
        STy::Sum(a, b) => Ok(GroundType::sum(
            resolve_type_with_self(a, env, self_name, self_ty)?,
            resolve_type_with_self(b, env, self_name, self_ty)?,
        )),
        STy::Prod(a, b) => Ok(GroundType::prod(
            resolve_type_with_self(a, env, self_name, self_ty)?,
            resolve_type_with_self(b, env, self_name, self_ty)?,
        )),
        other => resolve_type(other, env),
    }
}

// ---- capture-avoiding substitution ----

/// Substitutes `s` for free occurrences of `x` in `t`, renaming binders as
/// needed to avoid capture.
pub fn subst(t: &Term, x: &str, s: &Term) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                s.clone()
            } else {
                t.clone()
            }
        }
        Term::Lam(y, ann, body) => {
            if y == x {
                t.clone()
            } else if s.free_vars().contains(y) {
                let y2 = fresh("r");
                let body2 = subst(body, y, &Term::Var(y2.clone()));
                Term::Lam(y2, ann.clone(), Rc::new(subst(&body2, x, s)))
            } else {
                Term::Lam(y.clone(), ann.clone(), Rc::new(subst(body, x, s)))
            }
        }
        Term::App(f, a) => Term::App(Rc::new(subst(f, x, s)), Rc::new(subst(a, x, s))),
        Term::Unit => Term::Unit,
        Term::Pair(a, b) => Term::Pair(Rc::new(subst(a, x, s)), Rc::new(subst(b, x, s))),
        Term::Proj(j, e) => Term::Proj(*j, Rc::new(subst(e, x, s))),
        Term::Inj(j, e) => Term::Inj(*j, Rc::new(subst(e, x, s))),
        Term::Case(e, x1, e1, x2, e2) => {
            let e = Rc::new(subst(e, x, s));
            let (x1, e1) = subst_branch(x1, e1, x, s);
            let (x2, e2) = subst_branch(x2, e2, x, s);
            Term::Case(e, x1, Rc::new(e1), x2, Rc::new(e2))
        }
        Term::Con(p, e) => Term::Con(p.clone(), Rc::new(subst(e, x, s))),
        Term::Des(p, e) => Term::Des(p.clone(), Rc::new(subst(e, x, s))),
        Term::Fold(p, f, e) => Term::Fold(
            p.clone(),
            Rc::new(subst(f, x, s)),
            Rc::new(subst(e, x, s)),
        ),
        Term::SafeCon(p, e) => Term::SafeCon(p.clone(), Rc::new(subst(e, x, s))),
        Term::SafeDes(p, e) => Term::SafeDes(p.clone(), Rc::new(subst(e, x, s))),
        Term::ToSafe(e) => Term::ToSafe(Rc::new(subst(e, x, s))),
        Term::ToNorm(e) => Term::ToNorm(Rc::new(subst(e, x, s))),
        Term::Cs(p, e) => Term::Cs(p.clone(), Rc::new(subst(e, x, s))),
    }
}

fn subst_branch(binder: &str, body: &Term, x: &str, s: &Term) -> (String, Term) {
    if binder == x {
        (binder.to_string(), body.clone())
    } else if s.free_vars().contains(binder) {
        let b2 = fresh("r");
        let body2 = subst(body, binder, &Term::Var(b2.clone()));
        (b2, subst(&body2, x, s))
    } else {
        (binder.to_string(), subst(body, x, s))
    }
}

// ---- patterns ----

fn pat_type(p: &Pat, env: &DatatypeEnv) -> Result<Option<GroundType>, SyntaxError> {
    match p {
        Pat::Name(_, Some(t)) | Pat::Pair(_, _, Some(t)) => Ok(Some(resolve_type(t, env)?)),
        Pat::Name(_, None) => Ok(None),
        Pat::Pair(a, b, None) => match (pat_type(a, env)?, pat_type(b, env)?) {
            (Some(ta), Some(tb)) => Ok(Some(GroundType::prod(ta, tb))),
            _ => Ok(None),
        },
    }
}

/// Replaces each name bound by `p` with the corresponding projection of
/// `path` inside `body`.
fn bind_pat(p: &Pat, path: &Term, body: Term) -> Term {
    match p {
        Pat::Name(n, _) => subst(&body, n, path),
        Pat::Pair(a, b, _) => {
            let left = Term::Proj(1, Rc::new(path.clone()));
            let right = Term::Proj(2, Rc::new(path.clone()));
            bind_pat(a, &left, bind_pat(b, &right, body))
        }
    }
}

/// Turns a pattern binding into a plain lambda binder: returns the binder
/// name, its annotation (when derivable), and the rewritten body.
fn lower_pat(p: &Pat, body: Term, env: &DatatypeEnv) -> Result<(String, Option<GroundType>, Term), SyntaxError> {
    let ann = pat_type(p, env)?;
    match p {
        Pat::Name(n, _) => Ok((n.clone(), ann, body)),
        Pat::Pair(..) => {
            let v = fresh("p");
            let body = bind_pat(p, &Term::Var(v.clone()), body);
            Ok((v, ann, body))
        }
    }
}

// ---- terms ----

struct Lower<'a> {
    env: &'a DatatypeEnv,
}

impl<'a> Lower<'a> {
    fn rc(&self, t: &ST) -> Result<Rc<Term>, SyntaxError> {
        Ok(Rc::new(self.term(t)?))
    }

    fn term(&self, t: &ST) -> Result<Term, SyntaxError> {
        match t {
            ST::Var(n, _) => Ok(Term::Var(n.clone())),
            ST::Lam(binders, body) => {
                let mut acc = self.term(body)?;
                for p in binders.iter().rev() {
                    let (name, ann, body) = lower_pat(p, acc, self.env)?;
                    acc = Term::Lam(name, ann, Rc::new(body));
                }
                Ok(acc)
            }
            ST::App(f, a) => Ok(Term::App(self.rc(f)?, self.rc(a)?)),
            ST::Unit => Ok(Term::Unit),
            ST::Pair(a, b) => Ok(Term::Pair(self.rc(a)?, self.rc(b)?)),
            ST::Proj(j, e) => Ok(Term::Proj(*j, self.rc(e)?)),
            ST::Inj(j, e) => Ok(Term::Inj(*j, self.rc(e)?)),
            ST::CoreCase(e, x1, e1, x2, e2) => Ok(Term::Case(
                self.rc(e)?,
                x1.clone(),
                self.rc(e1)?,
                x2.clone(),
                self.rc(e2)?,
            )),
            ST::CtorCase(subject, arms) => self.ctor_case(subject, arms),
            ST::Let(pat, bound, body) => {
                let body = self.term(body)?;
                let (name, ann, body) = lower_pat(pat, body, self.env)?;
                Ok(Term::App(
                    Rc::new(Term::Lam(name, ann, Rc::new(body))),
                    self.rc(bound)?,
                ))
            }
            ST::Con(t, e, pos) => Ok(Term::Con(
                resolve_mu(t, self.env, *pos)?,
                self.rc(e)?,
            )),
            ST::Des(t, e, pos) => Ok(Term::Des(
                resolve_mu(t, self.env, *pos)?,
                self.rc(e)?,
            )),
            ST::Fold(t, f, e, pos) => Ok(Term::Fold(
                resolve_mu(t, self.env, *pos)?,
                self.rc(f)?,
                self.rc(e)?,
            )),
            ST::SCon(t, e, pos) => Ok(Term::SafeCon(
                resolve_mu(t, self.env, *pos)?,
                self.rc(e)?,
            )),
            ST::SDes(t, e, pos) => Ok(Term::SafeDes(
                resolve_mu(t, self.env, *pos)?,
                self.rc(e)?,
            )),
            ST::ToSafe(e) => Ok(Term::ToSafe(self.rc(e)?)),
            ST::ToNorm(e) => Ok(Term::ToNorm(self.rc(e)?)),
            ST::Cs(t, e, pos) => Ok(Term::Cs(
                resolve_mu(t, self.env, *pos)?,
                self.rc(e)?,
            )),
            ST::Ctor(name, payload, pos) => self.ctor(name, payload.as_deref(), *pos, false),
            ST::SafeCtor(name, payload, pos) => self.ctor(name, payload.as_deref(), *pos, true),
            ST::Numeral(n, pos) => self.numeral(*n, *pos),
            ST::ListLit(items, pos) => self.list(items, *pos),
        }
    }

    fn lookup_ctor(&self, name: &str, pos: Pos) -> Result<(&Datatype, &Ctor), SyntaxError> {
        self.env.ctor(name).ok_or_else(|| {
            err(
                SyntaxErrorKind::UnknownConstructor,
                pos,
                format!("unknown constructor `{}`", name),
            )
        })
    }

    fn ctor(
        &self,
        name: &str,
        payload: Option<&ST>,
        pos: Pos,
        safe: bool,
    ) -> Result<Term, SyntaxError> {
        let (dt, ctor) = self.lookup_ctor(name, pos)?;
        let inner = match (&ctor.payload, payload) {
            (Some(_), Some(e)) => self.term(e)?,
            (None, None) => {
                if safe {
                    Term::ToSafe(Rc::new(Term::Unit))
                } else {
                    Term::Unit
                }
            }
            (Some(_), None) => {
                return Err(err(
                    SyntaxErrorKind::ConstructorArity,
                    pos,
                    format!("constructor `{}` requires an argument", name),
                ))
            }
            (None, Some(_)) => {
                return Err(err(
                    SyntaxErrorKind::ConstructorArity,
                    pos,
                    format!("constructor `{}` takes no argument", name),
                ))
            }
        };
        let mut t = inner;
        for j in ctor.path.iter().rev() {
            t = Term::Inj(*j, Rc::new(t));
        }
        Ok(if safe {
            Term::SafeCon(dt.functor.clone(), Rc::new(t))
        } else {
            Term::Con(dt.functor.clone(), Rc::new(t))
        })
    }

    fn numeral(&self, n: u64, pos: Pos) -> Result<Term, SyntaxError> {
        let (zero_dt, zero) = self.lookup_ctor("Zero", pos)?;
        let (_, succ) = self.lookup_ctor("Succ", pos)?;
        let functor = zero_dt.functor.clone();
        let mut t = {
            let mut z = Term::Unit;
            for j in zero.path.iter().rev() {
                z = Term::Inj(*j, Rc::new(z));
            }
            Term::Con(functor.clone(), Rc::new(z))
        };
        for _ in 0..n {
            let mut s = t;
            for j in succ.path.iter().rev() {
                s = Term::Inj(*j, Rc::new(s));
            }
            t = Term::Con(functor.clone(), Rc::new(s));
        }
        Ok(t)
    }

    fn list(&self, items: &[ST], pos: Pos) -> Result<Term, SyntaxError> {
        let (dt, empty) = self.lookup_ctor("Empty", pos)?;
        let (_, cons) = self.lookup_ctor("Cons", pos)?;
        let functor = dt.functor.clone();
        let mut t = {
            let mut z = Term::Unit;
            for j in empty.path.iter().rev() {
                z = Term::Inj(*j, Rc::new(z));
            }
            Term::Con(functor.clone(), Rc::new(z))
        };
        for item in items.iter().rev() {
            let head = self.term(item)?;
            let mut s = Term::Pair(Rc::new(head), Rc::new(t));
            for j in cons.path.iter().rev() {
                s = Term::Inj(*j, Rc::new(s));
            }
            t = Term::Con(functor.clone(), Rc::new(s));
        }
        Ok(t)
    }

    fn ctor_case(&self, subject: &ST, arms: &[CtorArm]) -> Result<Term, SyntaxError> {
        let first = &arms[0];
        let (dt, _) = self.lookup_ctor(&first.ctor, first.pos)?;
        let dt = dt.clone();
        // Reorder arms into declaration order and demand exhaustiveness.
        let mut ordered: Vec<Option<&CtorArm>> = vec![None; dt.ctors.len()];
        for arm in arms {
            let Some(i) = dt.ctors.iter().position(|c| c.name == arm.ctor) else {
                return Err(err(
                    SyntaxErrorKind::UnknownConstructor,
                    arm.pos,
                    format!(
                        "constructor `{}` does not belong to datatype `{}`",
                        arm.ctor, dt.name
                    ),
                ));
            };
            if ordered[i].is_some() {
                return Err(err(
                    SyntaxErrorKind::DuplicateName,
                    arm.pos,
                    format!("duplicate case arm for `{}`", arm.ctor),
                ));
            }
            ordered[i] = Some(arm);
        }
        let missing: Vec<&str> = dt
            .ctors
            .iter()
            .zip(&ordered)
            .filter(|(_, a)| a.is_none())
            .map(|(c, _)| c.name.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(err(
                SyntaxErrorKind::Parse,
                first.pos,
                format!("case does not cover constructor(s): {}", missing.join(", ")),
            ));
        }
        let arms: Vec<&CtorArm> = ordered.into_iter().map(|a| a.expect("checked")).collect();

        // Each arm body, with its payload pattern bound to `scrutinee`.
        let lower_arm = |arm: &CtorArm, scrut: Term| -> Result<Term, SyntaxError> {
            let i = dt
                .ctors
                .iter()
                .position(|c| c.name == arm.ctor)
                .expect("ordered");
            let has_payload = dt.ctors[i].payload.is_some();
            let body = self.term(&arm.body)?;
            match (&arm.pat, has_payload) {
                (Some(p), true) => Ok(bind_pat(p, &scrut, body)),
                (None, _) => Ok(body),
                (Some(_), false) => Err(err(
                    SyntaxErrorKind::ConstructorArity,
                    arm.pos,
                    format!("constructor `{}` takes no argument", arm.ctor),
                )),
            }
        };

        let subject = Term::Des(dt.functor.clone(), self.rc(subject)?);
        // Peel the right-nested sum constructor by constructor.
        fn build(
            arms: &[&CtorArm],
            idx: usize,
            scrut: Term,
            lower_arm: &dyn Fn(&CtorArm, Term) -> Result<Term, SyntaxError>,
        ) -> Result<Term, SyntaxError> {
            if idx == arms.len() - 1 {
                return lower_arm(arms[idx], scrut);
            }
            let xl = fresh("c");
            let xr = fresh("c");
            let left = lower_arm(arms[idx], Term::Var(xl.clone()))?;
            let right = build(arms, idx + 1, Term::Var(xr.clone()), lower_arm)?;
            Ok(Term::Case(
                Rc::new(scrut),
                xl,
                Rc::new(left),
                xr,
                Rc::new(right),
            ))
        }
        if arms.len() == 1 {
            // Single constructor: bind the destructed payload via a let.
            let v = fresh("c");
            let body = lower_arm(arms[0], Term::Var(v.clone()))?;
            Ok(Term::App(
                Rc::new(Term::Lam(v, None, Rc::new(body))),
                Rc::new(subject),
            ))
        } else {
            build(&arms, 0, subject, &lower_arm)
        }
    }
}

/// Desugars a single surface term against a datatype environment.
pub fn desugar_term(t: &ST, env: &DatatypeEnv) -> Result<Term, SyntaxError> {
    Lower { env }.term(t)
}

/// Desugars a parsed program: builds the datatype environment, lowers all
/// definitions and `main`, and inlines definitions in order (definitions are
/// non-recursive).
pub fn desugar(p: &SurfaceProgram) -> Result<Program, SyntaxError> {
    let env = build_env(p)?;
    let lower = Lower { env: &env };
    let mut defs: Vec<(String, Term)> = Vec::new();
    let inline = |t: Term, defs: &[(String, Term)]| -> Term {
        let mut t = t;
        // Later defs shadow earlier ones; substitute in reverse order.
        for (name, body) in defs.iter().rev() {
            if t.free_vars().contains(name) {
                t = subst(&t, name, body);
            }
        }
        t
    };
    for (name, body) in &p.defs {
        let t = inline(lower.term(body)?, &defs);
        if let Some(v) = t.free_vars().iter().next() {
            return Err(SyntaxError::new(
                SyntaxErrorKind::UnboundName,
                0,
                0,
                format!("unbound name `{}` in definition `{}`", v, name),
            ));
        }
        defs.push((name.clone(), t));
    }
    let main = match &p.main {
        Some(m) => {
            let t = inline(lower.term(m)?, &defs);
            if let Some(v) = t.free_vars().iter().next() {
                return Err(SyntaxError::new(
                    SyntaxErrorKind::UnboundName,
                    0,
                    0,
                    format!("unbound name `{}` in `main`", v),
                ));
            }
            Some(t)
        }
        None => None,
    };
    Ok(Program {
        calculus: p.calculus,
        env,
        defs,
        main,
    })
}
