//! Recursive-descent parser producing the surface AST.

use super::lex::{lex, split_pragma, Tok, Token};
use super::{SyntaxError, SyntaxErrorKind};
use crate::term::Calculus;

/// Source position, 1-based (line, column).
pub type Pos = (u32, u32);

/// Surface types. `#` (Hash) stands for the recursion position inside
/// `mu(...)` and datatype declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum STy {
    Unit,
    Hash(Pos),
    Safe(Box<STy>),
    Mu(Box<STy>),
    Name(String, Pos),
    Sum(Box<STy>, Box<STy>),
    Prod(Box<STy>, Box<STy>),
}

/// Lambda / let binding patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pat {
    Name(String, Option<STy>),
    Pair(Box<Pat>, Box<Pat>, Option<STy>),
}

/// Surface terms, before desugaring.
#[derive(Debug, Clone, PartialEq)]
pub enum ST {
    Var(String, Pos),
    Lam(Vec<Pat>, Box<ST>),
    App(Box<ST>, Box<ST>),
    Unit,
    Pair(Box<ST>, Box<ST>),
    Proj(u8, Box<ST>),
    Inj(u8, Box<ST>),
    /// `case e of inl x1 => e1 | inr x2 => e2`
    CoreCase(Box<ST>, String, Box<ST>, String, Box<ST>),
    /// `case e of Ctor(pat) => body | ...` (sugar over `des` + nested cases)
    CtorCase(Box<ST>, Vec<CtorArm>),
    Let(Pat, Box<ST>, Box<ST>),
    Con(STy, Box<ST>, Pos),
    Des(STy, Box<ST>, Pos),
    Fold(STy, Box<ST>, Box<ST>, Pos),
    SCon(STy, Box<ST>, Pos),
    SDes(STy, Box<ST>, Pos),
    ToSafe(Box<ST>),
    ToNorm(Box<ST>),
    Cs(STy, Box<ST>, Pos),
    /// Constructor sugar: `Zero`, `Succ(n)`, `Branch(l, r)`.
    Ctor(String, Option<Box<ST>>, Pos),
    /// Safe-constructor sugar: `safe Succ(n)`.
    SafeCtor(String, Option<Box<ST>>, Pos),
    Numeral(u64, Pos),
    ListLit(Vec<ST>, Pos),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorArm {
    pub ctor: String,
    pub pat: Option<Pat>,
    pub body: ST,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatatypeDecl {
    pub name: String,
    pub ctors: Vec<(String, Option<STy>)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProgram {
    pub calculus: Calculus,
    pub datatypes: Vec<DatatypeDecl>,
    pub defs: Vec<(String, ST)>,
    pub main: Option<ST>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> Pos {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        let (line, col) = self.here();
        SyntaxError::new(SyntaxErrorKind::Parse, line, col, msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", what, self.peek().describe())))
        }
    }

    fn lower(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Lower(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected {}, found {}", what, other.describe()))),
        }
    }

    // ---- types ----

    fn ty(&mut self) -> Result<STy, SyntaxError> {
        let mut left = self.ty_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let right = self.ty_prod()?;
            left = STy::Sum(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn ty_prod(&mut self) -> Result<STy, SyntaxError> {
        let mut left = self.ty_atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let right = self.ty_atom()?;
            left = STy::Prod(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn ty_atom(&mut self) -> Result<STy, SyntaxError> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::UnitTy => {
                self.bump();
                Ok(STy::Unit)
            }
            Tok::Hash => {
                self.bump();
                Ok(STy::Hash(pos))
            }
            Tok::Safe => {
                self.bump();
                Ok(STy::Safe(Box::new(self.ty_atom()?)))
            }
            Tok::Mu => {
                self.bump();
                self.expect(Tok::LParen, "`(` after `mu`")?;
                let body = self.ty()?;
                self.expect(Tok::RParen, "`)` closing `mu(`")?;
                Ok(STy::Mu(Box::new(body)))
            }
            Tok::Lower(name) => {
                self.bump();
                Ok(STy::Name(name, pos))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            other => Err(self.err(format!("expected a type, found {}", other.describe()))),
        }
    }

    // ---- patterns ----

    fn pat(&mut self) -> Result<Pat, SyntaxError> {
        let first = self.pat_ann()?;
        if *self.peek() != Tok::Comma {
            return Ok(first);
        }
        let mut items = vec![first];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.pat_ann()?);
        }
        let mut acc = items.pop().expect("nonempty");
        while let Some(prev) = items.pop() {
            acc = Pat::Pair(Box::new(prev), Box::new(acc), None);
        }
        Ok(acc)
    }

    fn pat_ann(&mut self) -> Result<Pat, SyntaxError> {
        let mut p = self.pat_atom()?;
        if *self.peek() == Tok::Colon {
            self.bump();
            let t = self.ty()?;
            match &mut p {
                Pat::Name(_, ann) | Pat::Pair(_, _, ann) => *ann = Some(t),
            }
        }
        Ok(p)
    }

    fn pat_atom(&mut self) -> Result<Pat, SyntaxError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                self.bump();
                Ok(Pat::Name(name, None))
            }
            Tok::LParen => {
                self.bump();
                let p = self.pat()?;
                self.expect(Tok::RParen, "`)` closing pattern")?;
                Ok(p)
            }
            other => Err(self.err(format!(
                "expected a binding pattern, found {}",
                other.describe()
            ))),
        }
    }

    /// A lambda binder: a bare name or a parenthesized (possibly annotated,
    /// possibly tuple) pattern.
    fn binder(&mut self) -> Result<Pat, SyntaxError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                self.bump();
                Ok(Pat::Name(name, None))
            }
            Tok::LParen => {
                self.bump();
                let p = self.pat()?;
                self.expect(Tok::RParen, "`)` closing binder")?;
                Ok(p)
            }
            other => Err(self.err(format!("expected a binder, found {}", other.describe()))),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> Result<ST, SyntaxError> {
        match self.peek().clone() {
            Tok::Fn => {
                self.bump();
                let mut binders = vec![self.binder()?];
                while *self.peek() != Tok::Arrow {
                    binders.push(self.binder()?);
                }
                self.expect(Tok::Arrow, "`=>`")?;
                let body = self.term()?;
                Ok(ST::Lam(binders, Box::new(body)))
            }
            Tok::Let => {
                self.bump();
                let pat = self.binder()?;
                self.expect(Tok::Eq, "`=` in let")?;
                let bound = self.term()?;
                self.expect(Tok::In, "`in`")?;
                let body = self.term()?;
                Ok(ST::Let(pat, Box::new(bound), Box::new(body)))
            }
            Tok::Case => {
                self.bump();
                let subject = self.term()?;
                self.expect(Tok::Of, "`of`")?;
                self.case_arms(subject)
            }
            _ => self.app(),
        }
    }

    fn case_arms(&mut self, subject: ST) -> Result<ST, SyntaxError> {
        if *self.peek() == Tok::Inl {
            self.bump();
            let x1 = self.lower("a variable after `inl`")?;
            self.expect(Tok::Arrow, "`=>`")?;
            let e1 = self.term()?;
            self.expect(Tok::Bar, "`|` between case arms")?;
            self.expect(Tok::Inr, "`inr` arm")?;
            let x2 = self.lower("a variable after `inr`")?;
            self.expect(Tok::Arrow, "`=>`")?;
            let e2 = self.term()?;
            return Ok(ST::CoreCase(
                Box::new(subject),
                x1,
                Box::new(e1),
                x2,
                Box::new(e2),
            ));
        }
        let mut arms = Vec::new();
        loop {
            let pos = self.here();
            let ctor = match self.peek().clone() {
                Tok::Upper(name) => {
                    self.bump();
                    name
                }
                other => {
                    return Err(self.err(format!(
                        "expected `inl` or a constructor name in case arm, found {}",
                        other.describe()
                    )))
                }
            };
            let pat = match self.peek().clone() {
                Tok::Lower(name) => {
                    self.bump();
                    Some(Pat::Name(name, None))
                }
                Tok::LParen => {
                    self.bump();
                    let p = self.pat()?;
                    self.expect(Tok::RParen, "`)` closing constructor pattern")?;
                    Some(p)
                }
                _ => None,
            };
            self.expect(Tok::Arrow, "`=>`")?;
            let body = self.term()?;
            arms.push(CtorArm {
                ctor,
                pat,
                body,
                pos,
            });
            if *self.peek() == Tok::Bar {
                self.bump();
            } else {
                break;
            }
        }
        Ok(ST::CtorCase(Box::new(subject), arms))
    }

    fn starts_unary(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::LParen
                | Tok::LBracket
                | Tok::Lower(_)
                | Tok::Upper(_)
                | Tok::Number(_)
                | Tok::Fst
                | Tok::Snd
                | Tok::Inl
                | Tok::Inr
                | Tok::Con
                | Tok::Des
                | Tok::Scon
                | Tok::Sdes
                | Tok::ToSafe
                | Tok::ToNorm
                | Tok::Cs
                | Tok::Fold
                | Tok::Safe
        )
    }

    fn app(&mut self) -> Result<ST, SyntaxError> {
        let mut acc = self.unary()?;
        while Self::starts_unary(self.peek()) {
            let arg = self.unary()?;
            acc = ST::App(Box::new(acc), Box::new(arg));
        }
        Ok(acc)
    }

    fn bracket_ty(&mut self, op: &str) -> Result<STy, SyntaxError> {
        self.expect(Tok::LBracket, &format!("`[` after `{}`", op))?;
        let t = self.ty()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(t)
    }

    fn unary(&mut self) -> Result<ST, SyntaxError> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Fst => {
                self.bump();
                Ok(ST::Proj(1, Box::new(self.unary()?)))
            }
            Tok::Snd => {
                self.bump();
                Ok(ST::Proj(2, Box::new(self.unary()?)))
            }
            Tok::Inl => {
                self.bump();
                Ok(ST::Inj(1, Box::new(self.unary()?)))
            }
            Tok::Inr => {
                self.bump();
                Ok(ST::Inj(2, Box::new(self.unary()?)))
            }
            Tok::ToSafe => {
                self.bump();
                Ok(ST::ToSafe(Box::new(self.unary()?)))
            }
            Tok::ToNorm => {
                self.bump();
                Ok(ST::ToNorm(Box::new(self.unary()?)))
            }
            Tok::Con => {
                self.bump();
                let t = self.bracket_ty("con")?;
                Ok(ST::Con(t, Box::new(self.unary()?), pos))
            }
            Tok::Des => {
                self.bump();
                let t = self.bracket_ty("des")?;
                Ok(ST::Des(t, Box::new(self.unary()?), pos))
            }
            Tok::Scon => {
                self.bump();
                let t = self.bracket_ty("scon")?;
                Ok(ST::SCon(t, Box::new(self.unary()?), pos))
            }
            Tok::Sdes => {
                self.bump();
                let t = self.bracket_ty("sdes")?;
                Ok(ST::SDes(t, Box::new(self.unary()?), pos))
            }
            Tok::Cs => {
                self.bump();
                let t = self.bracket_ty("cs")?;
                Ok(ST::Cs(t, Box::new(self.unary()?), pos))
            }
            Tok::Fold => {
                self.bump();
                let t = self.bracket_ty("fold")?;
                let step = self.unary()?;
                let arg = self.unary()?;
                Ok(ST::Fold(t, Box::new(step), Box::new(arg), pos))
            }
            Tok::Safe => {
                self.bump();
                let name = match self.peek().clone() {
                    Tok::Upper(name) => {
                        self.bump();
                        name
                    }
                    other => {
                        return Err(self.err(format!(
                            "expected a constructor name after `safe`, found {}",
                            other.describe()
                        )))
                    }
                };
                let payload = self.ctor_payload()?;
                Ok(ST::SafeCtor(name, payload, pos))
            }
            Tok::Upper(name) => {
                self.bump();
                let payload = self.ctor_payload()?;
                Ok(ST::Ctor(name, payload, pos))
            }
            _ => self.atom(),
        }
    }

    /// Constructor arguments require parentheses: `Succ(n)`, `Branch(l, r)`.
    fn ctor_payload(&mut self) -> Result<Option<Box<ST>>, SyntaxError> {
        if *self.peek() == Tok::LParen {
            Ok(Some(Box::new(self.atom()?)))
        } else {
            Ok(None)
        }
    }

    fn atom(&mut self) -> Result<ST, SyntaxError> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(ST::Unit);
                }
                let mut items = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    items.push(self.term()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                let mut acc = items.pop().expect("nonempty");
                while let Some(prev) = items.pop() {
                    acc = ST::Pair(Box::new(prev), Box::new(acc));
                }
                Ok(acc)
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    items.push(self.term()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        items.push(self.term()?);
                    }
                }
                self.expect(Tok::RBracket, "`]` closing list literal")?;
                Ok(ST::ListLit(items, pos))
            }
            Tok::Lower(name) => {
                self.bump();
                Ok(ST::Var(name, pos))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(ST::Numeral(n, pos))
            }
            other => Err(self.err(format!("expected a term, found {}", other.describe()))),
        }
    }

    // ---- items ----

    fn datatype(&mut self) -> Result<DatatypeDecl, SyntaxError> {
        let pos = self.here();
        self.expect(Tok::Datatype, "`datatype`")?;
        let name = self.lower("a datatype name")?;
        self.expect(Tok::Eq, "`=`")?;
        let mut ctors = Vec::new();
        loop {
            let cname = match self.peek().clone() {
                Tok::Upper(c) => {
                    self.bump();
                    c
                }
                other => {
                    return Err(self.err(format!(
                        "expected a constructor name, found {}",
                        other.describe()
                    )))
                }
            };
            let arg = if *self.peek() == Tok::Of {
                self.bump();
                Some(self.ty()?)
            } else {
                None
            };
            ctors.push((cname, arg));
            if *self.peek() == Tok::Bar {
                self.bump();
            } else {
                break;
            }
        }
        Ok(DatatypeDecl { name, ctors, pos })
    }

    fn program(&mut self, calculus: Calculus) -> Result<SurfaceProgram, SyntaxError> {
        let mut p = SurfaceProgram {
            calculus,
            datatypes: Vec::new(),
            defs: Vec::new(),
            main: None,
        };
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Datatype => {
                    let d = self.datatype()?;
                    self.check_datatype_names(&p, &d)?;
                    p.datatypes.push(d);
                }
                Tok::Def => {
                    let pos = self.here();
                    self.bump();
                    let name = self.lower("a definition name")?;
                    if p.defs.iter().any(|(n, _)| *n == name) {
                        return Err(SyntaxError::new(
                            SyntaxErrorKind::DuplicateName,
                            pos.0,
                            pos.1,
                            format!("duplicate definition `{}`", name),
                        ));
                    }
                    self.expect(Tok::Eq, "`=`")?;
                    let body = self.term()?;
                    p.defs.push((name, body));
                }
                Tok::Main => {
                    let pos = self.here();
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    if p.main.is_some() {
                        return Err(SyntaxError::new(
                            SyntaxErrorKind::DuplicateName,
                            pos.0,
                            pos.1,
                            "duplicate `main`",
                        ));
                    }
                    p.main = Some(self.term()?);
                }
                other => {
                    return Err(self.err(format!(
                        "expected `datatype`, `def`, or `main`, found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(p)
    }

    fn check_datatype_names(
        &self,
        p: &SurfaceProgram,
        d: &DatatypeDecl,
    ) -> Result<(), SyntaxError> {
        let dup = |msg: String| {
            SyntaxError::new(SyntaxErrorKind::DuplicateName, d.pos.0, d.pos.1, msg)
        };
        if p.datatypes.iter().any(|e| e.name == d.name) {
            return Err(dup(format!("duplicate datatype `{}`", d.name)));
        }
        for (c, _) in &d.ctors {
            let clash = d.ctors.iter().filter(|(o, _)| o == c).count() > 1
                || p.datatypes
                    .iter()
                    .any(|e| e.ctors.iter().any(|(o, _)| o == c));
            if clash {
                return Err(dup(format!("duplicate constructor `{}`", c)));
            }
        }
        Ok(())
    }
}

fn parse_calculus(arg: Option<&str>, line: u32) -> Result<Calculus, SyntaxError> {
    match arg {
        None => Ok(Calculus::S1),
        Some("s1") => Ok(Calculus::S1),
        Some("rs1") => Ok(Calculus::Rs1),
        Some("rs1.1") => Ok(Calculus::Rs1_1),
        Some(other) => Err(SyntaxError::new(
            SyntaxErrorKind::Parse,
            line.saturating_sub(1),
            1,
            format!(
                "unknown calculus `{}` (expected s1, rs1, or rs1.1)",
                other
            ),
        )),
    }
}

/// Parses a whole `.s1` source file.
pub fn parse(source: &str) -> Result<SurfaceProgram, SyntaxError> {
    let (pragma, rest, line) = split_pragma(source);
    let calculus = parse_calculus(pragma, line)?;
    let toks = lex(rest, line)?;
    let mut parser = Parser { toks, pos: 0 };
    parser.program(calculus)
}

/// Parses a single surface term (for `--expr` style inputs).
pub fn parse_term(source: &str) -> Result<ST, SyntaxError> {
    let toks = lex(source, 1)?;
    let mut parser = Parser { toks, pos: 0 };
    let t = parser.term()?;
    parser.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

/// Parses a single surface type (for `--type` style inputs).
pub fn parse_type(source: &str) -> Result<STy, SyntaxError> {
    let toks = lex(source, 1)?;
    let mut parser = Parser { toks, pos: 0 };
    let t = parser.ty()?;
    parser.expect(Tok::Eof, "end of input")?;
    Ok(t)
}
