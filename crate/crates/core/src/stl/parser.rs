//! Recursive-descent parser for the textual STL syntax.
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?
//! or       := and ( "||" and )*
//! and      := until ( "&&" until )*
//! until    := unary ( "U" interval unary )*
//! unary    := "!" unary | "G" interval unary | "F" interval unary | primary
//! primary  := "true" | "false" | "(" formula ")" | expr cmp expr
//! cmp      := "<" | "<=" | ">" | ">="
//! interval := "[" number "," number "]"
//! ```
//!
//! Arithmetic expressions must be affine. `G`, `F` and `U` are keywords only
//! when directly followed by `[`, so they stay usable as variable names.

use std::path::Path;

use thiserror::Error;

use super::{Atom, Formula, Interval, Stl};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("invalid interval [{lo}, {hi}] at {position}: need 0 <= lo < hi")]
    Interval { position: usize, lo: f64, hi: f64 },
    #[error("cannot read spec file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Always,
    Eventually,
    Until,
    True,
    False,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| ParseError::Syntax {
        position: pos,
        message: msg.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let two = |s: &str| text[i..].starts_with(s);
        let tok = if two("&&") {
            i += 2;
            Tok::AndAnd
        } else if two("||") {
            i += 2;
            Tok::OrOr
        } else if two("->") {
            i += 2;
            Tok::Arrow
        } else if two("<=") {
            i += 2;
            Tok::Le
        } else if two(">=") {
            i += 2;
            Tok::Ge
        } else if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            Tok::Num(
                lit.parse()
                    .map_err(|_| err(start, &format!("bad number `{lit}`")))?,
            )
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let next_is_bracket = text[i..].trim_start().starts_with('[');
            match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "G" if next_is_bracket => Tok::Always,
                "F" if next_is_bracket => Tok::Eventually,
                "U" if next_is_bracket => Tok::Until,
                _ => Tok::Ident(word.to_string()),
            }
        } else {
            i += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '!' => Tok::Bang,
                _ => return Err(err(start, &format!("unexpected character `{c}`"))),
            }
        };
        out.push((tok, start));
    }
    Ok(out)
}

/// Affine expression under construction: variable coefficients plus constant.
#[derive(Debug, Clone, Default)]
struct Linear {
    terms: Vec<(String, f64)>,
    constant: f64,
}

impl Linear {
    fn constant(c: f64) -> Self {
        Linear {
            terms: vec![],
            constant: c,
        }
    }

    fn var(name: String) -> Self {
        Linear {
            terms: vec![(name, 1.0)],
            constant: 0.0,
        }
    }

    fn scale(mut self, k: f64) -> Self {
        self.terms.iter_mut().for_each(|(_, c)| *c *= k);
        self.constant *= k;
        self
    }

    fn add(mut self, other: Linear) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            return Ok(lhs.not().or(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::OrOr) {
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::AndAnd) {
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Until) {
            let interval = self.interval()?;
            let rhs = self.unary()?;
            lhs = Stl::until(interval, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Always) => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Stl::always(i, self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Stl::eventually(i, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Formula> {
        match self.peek() {
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Stl::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(Stl::False)
            }
            Some(Tok::LParen) => {
                // `(` opens either a sub-formula or an arithmetic group of an atom.
                let save = self.pos;
                if let Ok(atom) = self.atom() {
                    return Ok(Stl::Atom(atom));
                }
                self.pos = save + 1;
                let inner = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            None => self.error("unexpected end of input"),
            _ => Ok(Stl::Atom(self.atom()?)),
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Some(t @ (Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)) => t.clone(),
            _ => return self.error("expected comparison operator"),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        // normalise to `f > 0`
        let f = match op {
            Tok::Lt | Tok::Le => rhs.add(lhs.scale(-1.0)),
            _ => lhs.add(rhs.scale(-1.0)),
        };
        Ok(Atom::new(f.terms, f.constant))
    }

    fn expr(&mut self) -> PResult<Linear> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(self.term()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.add(self.term()?.scale(-1.0));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Linear> {
        let mut acc = self.factor()?;
        while self.eat(&Tok::Star) {
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant)
            } else if rhs.is_constant() {
                acc.scale(rhs.constant)
            } else {
                return self.error("only affine expressions are supported");
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Linear> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Linear::constant(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Linear::var(name))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.scale(-1.0))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.error("expected number, variable or `(`"),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let negative = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => self.error("expected number"),
        }
    }

    fn interval(&mut self) -> PResult<Interval> {
        let position = self.offset();
        self.expect(&Tok::LBracket, "`[`")?;
        let lo = self.number()?;
        self.expect(&Tok::Comma, "`,`")?;
        let hi = self.number()?;
        self.expect(&Tok::RBracket, "`]`")?;
        Interval::new(lo, hi).map_err(|_| ParseError::Interval { position, lo, hi })
    }
}

/// Parses one formula. `<`/`<=` and `>`/`>=` are normalised to `f > 0` atoms
/// and `a -> b` is rewritten to `!a || b`.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(f)
}

pub fn parse_spec_file(path: impl AsRef<Path>) -> Result<Formula, ParseError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ParseError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse(&text)
}
