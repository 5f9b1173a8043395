//! Tokenizer for the `.s1` surface language.

use super::{SyntaxError, SyntaxErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    // identifiers and literals
    Lower(String),
    Upper(String),
    Number(u64),
    // keywords
    Datatype,
    Def,
    Main,
    Fn,
    Case,
    Of,
    Let,
    In,
    Fold,
    Fst,
    Snd,
    Inl,
    Inr,
    Con,
    Des,
    Scon,
    Sdes,
    ToSafe,
    ToNorm,
    Cs,
    Safe,
    UnitTy,
    Mu,
    // punctuation
    Eq,
    Bar,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Arrow, // =>
    Colon,
    Plus,
    Star,
    Hash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Lower(s) | Tok::Upper(s) => format!("identifier `{}`", s),
            Tok::Number(n) => format!("numeral `{}`", n),
            Tok::Eof => "end of input".to_string(),
            other => format!("{:?}", other).to_lowercase(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "datatype" => Tok::Datatype,
        "def" => Tok::Def,
        "main" => Tok::Main,
        "fn" => Tok::Fn,
        "case" => Tok::Case,
        "of" => Tok::Of,
        "let" => Tok::Let,
        "in" => Tok::In,
        "fold" => Tok::Fold,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        "inl" => Tok::Inl,
        "inr" => Tok::Inr,
        "con" => Tok::Con,
        "des" => Tok::Des,
        "scon" => Tok::Scon,
        "sdes" => Tok::Sdes,
        "toSafe" => Tok::ToSafe,
        "toNorm" => Tok::ToNorm,
        "cs" => Tok::Cs,
        "safe" => Tok::Safe,
        "unit" => Tok::UnitTy,
        "mu" => Tok::Mu,
        _ => return None,
    })
}

/// Splits the optional `%calculus` pragma off the front of a source file.
/// Returns the pragma argument (if any) and the remaining source together
/// with the line number it starts on.
pub fn split_pragma(src: &str) -> (Option<&str>, &str, u32) {
    let trimmed = src.trim_start_matches(['\u{feff}']);
    let mut rest = trimmed;
    let mut line = 1u32;
    loop {
        let next = rest.trim_start_matches([' ', '\t', '\r']);
        if let Some(stripped) = next.strip_prefix('\n') {
            rest = stripped;
            line += 1;
            continue;
        }
        rest = next;
        break;
    }
    if let Some(after) = rest.strip_prefix("%calculus") {
        let (arg, tail) = match after.find('\n') {
            Some(i) => (&after[..i], &after[i + 1..]),
            None => (after, ""),
        };
        (Some(arg.trim()), tail, line + 1)
    } else {
        (None, rest, line)
    }
}

/// Tokenizes source text. `--` starts a comment running to end of line.
pub fn lex(src: &str, start_line: u32) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut line = start_line;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();

    macro_rules! push {
        ($tok:expr, $c:expr) => {
            out.push(Token {
                tok: $tok,
                line,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let here = col;
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'-') {
                    while let Some(&d) = chars.peek() {
                        if d == '\n' {
                            break;
                        }
                        chars.next();
                    }
                    col += 2; // position is irrelevant inside a comment
                } else {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::Parse,
                        line,
                        here,
                        "unexpected character `-` (comments start with `--`)",
                    ));
                }
            }
            '=' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(Tok::Arrow, here);
                } else {
                    push!(Tok::Eq, here);
                }
            }
            '|' => {
                chars.next();
                col += 1;
                push!(Tok::Bar, here);
            }
            '(' => {
                chars.next();
                col += 1;
                push!(Tok::LParen, here);
            }
            ')' => {
                chars.next();
                col += 1;
                push!(Tok::RParen, here);
            }
            '[' => {
                chars.next();
                col += 1;
                push!(Tok::LBracket, here);
            }
            ']' => {
                chars.next();
                col += 1;
                push!(Tok::RBracket, here);
            }
            ',' => {
                chars.next();
                col += 1;
                push!(Tok::Comma, here);
            }
            ':' => {
                chars.next();
                col += 1;
                push!(Tok::Colon, here);
            }
            '+' => {
                chars.next();
                col += 1;
                push!(Tok::Plus, here);
            }
            '*' => {
                chars.next();
                col += 1;
                push!(Tok::Star, here);
            }
            '#' => {
                chars.next();
                col += 1;
                push!(Tok::Hash, here);
            }
            '0'..='9' => {
                let mut n: u64 = 0;
                while let Some(&d) = chars.peek() {
                    if let Some(v) = d.to_digit(10) {
                        n = n
                            .checked_mul(10)
                            .and_then(|m| m.checked_add(v as u64))
                            .ok_or_else(|| {
                                SyntaxError::new(
                                    SyntaxErrorKind::Parse,
                                    line,
                                    here,
                                    "numeral literal too large",
                                )
                            })?;
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Number(n), here);
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '%' => {
                let mut word = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' || d == '%' {
                        word.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if let Some(kw) = keyword(&word) {
                    push!(kw, here);
                } else if word.chars().next().is_some_and(|f| f.is_ascii_uppercase()) {
                    push!(Tok::Upper(word), here);
                } else {
                    push!(Tok::Lower(word), here);
                }
            }
            other => {
                return Err(SyntaxError::new(
                    SyntaxErrorKind::Parse,
                    line,
                    here,
                    format!("unexpected character `{}`", other),
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
