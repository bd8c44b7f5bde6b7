//! Recursive-descent parser for the field DSL.
//!
//! ```text
//! program := stmt (sep stmt)* sep?        sep := ';' | newline
//! stmt    := ("f" | "g") '=' expr
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' ['-'|'+'] integer)*
//! atom    := number | x | y | mu | r2 | func '(' expr ')' | atan2 '(' expr ',' expr ')' | '(' expr ')'
//! ```
//!
//! All offsets in errors are byte offsets into the original source.

use crate::error::{Error, Result};
use crate::expr::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    Sep,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax { offset, message: message.into() }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '\n' | ';' => {
                out.push(Token { tok: Tok::Sep, offset: i });
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' | '=' => {
                out.push(Token { tok: Tok::Sym(c), offset: i });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut integral = true;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    if bytes[i] == b'.' {
                        integral = false;
                    }
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
                out.push(Token { tok: Tok::Num(value, integral), offset: start });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(src[start..i].to_string()), offset: start });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token { tok: Tok::End, offset: src.len() });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.at_sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.peek().offset, format!("expected `{c}`")))
        }
    }

    fn starts_operand(&self) -> bool {
        matches!(
            self.peek().tok,
            Tok::Num(..) | Tok::Ident(_) | Tok::Sym('(') | Tok::Sym('-') | Tok::Sym('+')
        )
    }

    /// Operand following a binary operator; a missing operand is reported
    /// at the operator itself.
    fn operand_after(&mut self, op: &Token, next: fn(&mut Self) -> Result<Expr>) -> Result<Expr> {
        if !self.starts_operand() {
            let c = match op.tok {
                Tok::Sym(c) => c,
                _ => '?',
            };
            return Err(syntax(op.offset, format!("missing operand after `{c}`")));
        }
        next(self)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while self.at_sym('+') || self.at_sym('-') {
            let op = self.bump();
            let rhs = self.operand_after(&op, Self::term)?;
            lhs = if op.tok == Tok::Sym('+') { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.at_sym('*') || self.at_sym('/') {
            let op = self.bump();
            let rhs = self.operand_after(&op, Self::unary)?;
            lhs = if op.tok == Tok::Sym('*') { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.at_sym('-') || self.at_sym('+') {
            let op = self.bump();
            let inner = self.operand_after(&op, Self::unary)?;
            return Ok(if op.tok == Tok::Sym('-') { -inner } else { inner });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while self.at_sym('^') {
            let caret = self.bump();
            let mut sign = 1i64;
            if (self.at_sym('-') || self.at_sym('+')) && self.bump().tok == Tok::Sym('-') {
                sign = -1;
            }
            let t = self.bump();
            match t.tok {
                Tok::Num(v, true) if v <= f64::from(i32::MAX) => {
                    base = base.pow((sign * v as i64) as i32);
                }
                Tok::Num(..) => return Err(syntax(t.offset, "exponent must be an integer literal")),
                _ => return Err(syntax(caret.offset, "missing integer exponent after `^`")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v, _) => Ok(Expr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "mu" => Ok(Expr::Var(Var::Mu)),
                "r2" => Ok(Expr::r2()),
                "sin" | "cos" | "exp" | "sqrt" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        _ => Func::Sqrt,
                    };
                    self.expect_sym('(')?;
                    let a = self.expr()?;
                    self.expect_sym(')')?;
                    Ok(Expr::call(f, a))
                }
                "atan2" => {
                    self.expect_sym('(')?;
                    let a = self.expr()?;
                    self.expect_sym(',')?;
                    let b = self.expr()?;
                    self.expect_sym(')')?;
                    Ok(Expr::Atan2(Box::new(a), Box::new(b)))
                }
                _ => Err(Error::UnknownIdentifier { name, offset: t.offset }),
            },
            Tok::End => Err(syntax(t.offset, "unexpected end of input")),
            Tok::Sep => Err(syntax(t.offset, "expected an expression")),
            Tok::Sym(c) => Err(syntax(t.offset, format!("unexpected `{c}`"))),
        }
    }

    fn skip_seps(&mut self) {
        while self.peek().tok == Tok::Sep {
            self.bump();
        }
    }
}

/// Parses a single expression (no `f =` prefix).
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.skip_seps();
    let e = p.expr()?;
    p.skip_seps();
    match p.peek().tok {
        Tok::End => Ok(e),
        _ => Err(syntax(p.peek().offset, "trailing input after expression")),
    }
}

/// Parses `f = ...; g = ...` into the two component expressions.
pub fn parse_components(src: &str) -> Result<(Expr, Expr)> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut f = None;
    let mut g = None;
    p.skip_seps();
    while p.peek().tok != Tok::End {
        let head = p.bump();
        let slot = match &head.tok {
            Tok::Ident(n) if n == "f" => &mut f,
            Tok::Ident(n) if n == "g" => &mut g,
            Tok::Ident(n) => {
                return Err(syntax(head.offset, format!("expected `f` or `g`, found `{n}`")))
            }
            _ => return Err(syntax(head.offset, "expected `f =` or `g =`")),
        };
        if slot.is_some() {
            return Err(syntax(head.offset, "component assigned twice"));
        }
        p.expect_sym('=')?;
        let e = p.expr()?;
        match p.peek().tok {
            Tok::Sep | Tok::End => {}
            _ => return Err(syntax(p.peek().offset, "expected `;` or end of line")),
        }
        *slot = Some(e);
        p.skip_seps();
    }
    match (f, g) {
        (Some(f), Some(g)) => Ok((f, g)),
        (None, _) => Err(syntax(src.len(), "missing component `f`")),
        (_, None) => Err(syntax(src.len(), "missing component `g`")),
    }
}
