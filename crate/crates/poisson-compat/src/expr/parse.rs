//! Infix parser for the expression surface syntax.
//!
//! Grammar (precedence low to high):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := atom ('^' exponent)?          -- integer exponents only
//! atom    := number | name | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```
//!
//! `name` must be one of the coordinate names the chart declares. Exponents
//! are (optionally parenthesised, optionally signed) integer literals.

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(input: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // Scientific notation: 1e-3, 2.5E+4.
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    line: 0,
                    msg: format!("bad number literal `{text}`"),
                })?;
                toks.push(Tok::Num(value));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Syntax {
                    line: 0,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::Syntax {
                line: 0,
                msg: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = lhs * self.factor()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = lhs / self.factor()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            let inner = self.factor()?;
            // Fold a negated literal into the constant so rendered
            // expressions reparse to the identical tree.
            if let crate::expr::Node::Const(c) = &*inner.0 {
                return Ok(ScalarExpr::constant(-c));
            }
            return Ok(-inner);
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let exponent = self.integer_exponent()?;
            return Ok(base.powi(exponent));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32> {
        let parenthesised = matches!(self.peek(), Some(Tok::LParen));
        if parenthesised {
            self.pos += 1;
        }
        let negative = matches!(self.peek(), Some(Tok::Minus));
        if negative {
            self.pos += 1;
        }
        let n = match self.next() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            other => {
                return Err(Error::Syntax {
                    line: 0,
                    msg: format!("exponent must be an integer literal, found {other:?}"),
                })
            }
        };
        if parenthesised {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<ScalarExpr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(ScalarExpr::constant(v)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)` closing function call")?;
                    match name.as_str() {
                        "sin" => Ok(arg.sin()),
                        "cos" => Ok(arg.cos()),
                        "exp" => Ok(arg.exp()),
                        "sqrt" => Ok(arg.sqrt()),
                        other => Err(Error::Syntax {
                            line: 0,
                            msg: format!("unknown function `{other}`"),
                        }),
                    }
                } else if let Some(idx) = self.names.iter().position(|n| *n == name) {
                    Ok(ScalarExpr::coord(idx))
                } else {
                    Err(Error::UnknownCoordinate { line: 0, name })
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(Error::Syntax {
                line: 0,
                msg: format!("expected a value, found {other:?}"),
            }),
        }
    }
}

/// Parses an infix expression against the chart's coordinate names.
pub fn parse_expr(input: &str, coord_names: &[String]) -> Result<ScalarExpr> {
    let toks = lex(input)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        names: coord_names,
    };
    let e = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(Error::Syntax {
            line: 0,
            msg: format!("trailing input after expression: {:?}", parser.toks[parser.pos..].to_vec()),
        });
    }
    Ok(e)
}
