/*!
Concrete surface syntax: lexer, parser, desugarer to core terms, and a
pretty-printer whose output parses back to an alpha-equivalent term.

Source files use the `.s1` extension and may start with a
`%calculus s1 | rs1 | rs1.1` pragma line selecting the calculus level.
*/

pub mod desugar;
pub mod lex;
pub mod parse;
pub mod pretty;

use std::fmt;

pub use desugar::{desugar, desugar_term, subst, DatatypeEnv, Program};
pub use parse::{parse, parse_term, parse_type, SurfaceProgram};
pub use pretty::{pretty, pretty_type, pretty_with_env};

/// Parses and desugars a `.s1` source file in one step.
pub fn load(source: &str) -> Result<Program, SyntaxError> {
    desugar(&parse(source)?)
}

/// What went wrong while reading a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    Parse,
    DuplicateName,
    UnknownConstructor,
    UnknownDatatype,
    UnboundName,
    ConstructorArity,
}

/// A syntax-phase error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub kind: SyntaxErrorKind,
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(kind: SyntaxErrorKind, line: u32, col: u32, msg: impl Into<String>) -> Self {
        SyntaxError {
            kind,
            line,
            col,
            msg: msg.into(),
        }
    }

    /// Stable machine-readable code for CLI reporting.
    pub fn code(&self) -> &'static str {
        match self.kind {
            SyntaxErrorKind::Parse => "ParseError",
            SyntaxErrorKind::DuplicateName => "DuplicateName",
            SyntaxErrorKind::UnknownConstructor => "UnknownConstructor",
            SyntaxErrorKind::UnknownDatatype => "UnknownDatatype",
            SyntaxErrorKind::UnboundName => "UnboundName",
            SyntaxErrorKind::ConstructorArity => "ConstructorArity",
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.code(), self.msg)
    }
}

impl std::error::Error for SyntaxError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Functor, GroundType};

    const NAT: &str = "datatype nat = Zero | Succ of nat\n";

    #[test]
    fn datatype_declarations_resolve_to_functors() {
        let p = load(&format!(
            "{}datatype tree = Leaf | Branch of tree * tree\n\
             datatype natlist = Empty | Cons of nat * natlist\n",
            NAT
        ))
        .unwrap();
        let nat = p.env.datatype("nat").unwrap();
        assert_eq!(
            *nat.functor,
            Functor::sum(Functor::Const(GroundType::Unit), Functor::Id)
        );
        assert_eq!(nat.ty, GroundType::nat());
        let tree = p.env.datatype("tree").unwrap();
        assert_eq!(tree.ty, GroundType::tree());
        let list = p.env.datatype("natlist").unwrap();
        assert_eq!(list.ty, GroundType::list(GroundType::nat()));
    }

    #[test]
    fn numerals_and_lists_desugar_to_constructor_chains() {
        let p = load(&format!(
            "{}datatype natlist = Empty | Cons of nat * natlist\n\
             main = [1, 0]\n",
            NAT
        ))
        .unwrap();
        let by_sugar = p.main.unwrap();
        let q = load(&format!(
            "{}datatype natlist = Empty | Cons of nat * natlist\n\
             main = Cons((Succ(Zero), Cons((Zero, Empty))))\n",
            NAT
        ))
        .unwrap();
        assert!(by_sugar.alpha_eq(&q.main.unwrap()));
    }

    #[test]
    fn let_and_patterns_desugar_to_lambdas() {
        let p = load(&format!(
            "{}main = fn (x : nat, y : nat) => let z = (y, x) in fst z\n",
            NAT
        ))
        .unwrap();
        let t = p.main.unwrap();
        // The binder is a single annotated variable of product type.
        let crate::term::Term::Lam(_, Some(ann), _) = &t else {
            panic!("expected a lambda, got {:?}", t);
        };
        assert_eq!(
            *ann,
            GroundType::prod(GroundType::nat(), GroundType::nat())
        );
    }

    #[test]
    fn constructor_case_desugars_and_roundtrips() {
        let src = format!(
            "%calculus rs1\n{}\
             def pred = fn (n : nat) => case n of Zero => Zero | Succ(m) => m\n\
             main = pred 3\n",
            NAT
        );
        let p = load(&src).unwrap();
        let main = p.main.clone().unwrap();
        let text = pretty(&main);
        let back = desugar_term(&parse_term(&text).unwrap(), &p.env).unwrap();
        assert!(back.alpha_eq(&main), "roundtrip failed for: {}", text);
        // Resugared output also roundtrips.
        let sugared = pretty_with_env(&main, &p.env);
        let back2 = desugar_term(&parse_term(&sugared).unwrap(), &p.env).unwrap();
        assert!(back2.alpha_eq(&main), "roundtrip failed for: {}", sugared);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse("datatype t = A of").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::Parse);
        assert_eq!(e.line, 1);

        let e = parse("datatype t = A | A").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::DuplicateName);

        let e = load("main = Succ(Zero)").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::UnknownConstructor);

        let e = load("main = con[nat] ()").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::UnknownDatatype);

        let e = load("main = x").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::UnboundName);

        assert!(parse("").unwrap().main.is_none());
    }

    #[test]
    fn canonical_type_strings_parse_back() {
        for ty in [
            GroundType::nat(),
            GroundType::tree().safe(),
            GroundType::prod(GroundType::Unit, GroundType::list(GroundType::nat())),
            GroundType::sum(GroundType::Unit.safe(), GroundType::nat()),
        ] {
            let text = pretty_type(&ty);
            let parsed = parse_type(&text).unwrap();
            let resolved = desugar::resolve_type(&parsed, &DatatypeEnv::default()).unwrap();
            assert_eq!(resolved, ty, "for {}", text);
        }
    }
}
