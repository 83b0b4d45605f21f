//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('-' | '+') unary | atom
//! atom   := number ['i'] | 'i' | 'x' digits | 'x{' digits '}'
//!         | 'inv(' expr ')' | 'adj(' expr ')'
//!         | '(' [sign] number sign number 'i' ')'      complex literal
//!         | '(' expr ')'
//! ```

use super::{MatNcExpr, NcExpr};
use crate::error::{Error, Result};
use crate::linalg::C64;

pub fn parse_expr(text: &str, arity: usize) -> Result<NcExpr> {
    let mut p = Parser {
        s: text.chars().collect(),
        pos: 0,
    };
    p.skip_ws();
    if p.pos == p.s.len() {
        return Err(p.err("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err(format!("unexpected '{}'", p.s[p.pos])));
    }
    e.check_arity(arity)?;
    Ok(e)
}

/// Parses a JSON array of arrays of expression strings.
pub fn parse_mat_expr(json: &str, arity: usize) -> Result<MatNcExpr> {
    let rows: Vec<Vec<String>> = serde_json::from_str(json)?;
    let parsed = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|t| parse_expr(t, arity))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MatNcExpr::from_rows(parsed)
}

struct Parser {
    s: Vec<char>,
    pos: usize,
}

impl Parser {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<NcExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = NcExpr::add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = NcExpr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<NcExpr> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = NcExpr::mul(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<NcExpr> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                NcExpr::Const(z) => NcExpr::Const(-z),
                e => NcExpr::neg(e),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<NcExpr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                if let Some(z) = self.complex_literal() {
                    return Ok(NcExpr::Const(z));
                }
                self.pos = start + 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let x = self.number()?;
                if self.peek() == Some('i') && !self.ident_continues(self.pos + 1) {
                    self.pos += 1;
                    Ok(NcExpr::Const(C64::new(0.0, x)))
                } else {
                    Ok(NcExpr::real(x))
                }
            }
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
        }
    }

    fn ident_continues(&self, at: usize) -> bool {
        self.s
            .get(at)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '{')
    }

    fn identifier(&mut self) -> Result<NcExpr> {
        let start = self.pos;
        if self.peek() == Some('x') {
            self.pos += 1;
            let braced = self.peek() == Some('{');
            if braced {
                self.pos += 1;
            }
            let digits_at = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits_at {
                self.pos = start;
                return Err(self.err("expected a variable index after 'x'"));
            }
            let text: String = self.s[digits_at..self.pos].iter().collect();
            if braced && self.peek() != Some('}') {
                return Err(self.err("expected '}'"));
            }
            if braced {
                self.pos += 1;
            }
            let index: usize = text.parse().map_err(|_| Error::Syntax {
                position: digits_at,
                message: "variable index too large".into(),
            })?;
            if index == 0 {
                return Err(Error::Syntax {
                    position: digits_at,
                    message: "variables are numbered from 1".into(),
                });
            }
            return Ok(NcExpr::Var(index));
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let word: String = self.s[start..self.pos].iter().collect();
        match word.as_str() {
            "i" => Ok(NcExpr::Const(C64::new(0.0, 1.0))),
            "inv" | "adj" => {
                self.expect('(')?;
                self.skip_ws();
                if self.peek() == Some(')') {
                    return Err(self.err(format!("{word}() needs an argument")));
                }
                let e = self.expr()?;
                self.expect(')')?;
                Ok(if word == "inv" {
                    NcExpr::inv(e)
                } else {
                    NcExpr::adj(e)
                })
            }
            _ => {
                self.pos = start;
                Err(self.err(format!("unknown identifier '{word}'")))
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text: String = self.s[start..self.pos].iter().collect();
        text.parse::<f64>().map_err(|_| Error::Syntax {
            position: start,
            message: format!("malformed number '{text}'"),
        })
    }

    /// Tries `( [sign] a sign b i )` at the current '(' and leaves the cursor
    /// behind it on success. On failure the cursor position is unspecified.
    fn complex_literal(&mut self) -> Option<C64> {
        self.pos += 1;
        self.skip_ws();
        let mut re_sign = 1.0;
        if self.peek() == Some('-') {
            re_sign = -1.0;
            self.pos += 1;
        } else if self.peek() == Some('+') {
            self.pos += 1;
        }
        self.skip_ws();
        if !self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            return None;
        }
        let a = self.number().ok()?;
        self.skip_ws();
        let im_sign = match self.peek()? {
            '+' => 1.0,
            '-' => -1.0,
            _ => return None,
        };
        self.pos += 1;
        self.skip_ws();
        if !self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            return None;
        }
        let b = self.number().ok()?;
        if self.peek() != Some('i') {
            return None;
        }
        self.pos += 1;
        if !self.eat(')') {
            return None;
        }
        Some(C64::new(re_sign * a, im_sign * b))
    }
}
