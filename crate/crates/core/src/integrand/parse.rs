//! Recursive-descent parser for the integrand grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ['-'] atom
//! atom   := number | 't' | 'x' INT | 'z' INT
//!         | func '(' expr {',' expr} ')' | '(' expr ')'
//! func   := sin | cos | exp | sqrt | abs | pow | max | norm
//! ```
//!
//! `pow` takes an expression and an integer literal. A minus sign directly
//! in front of a number literal yields a negative constant.

use super::Expr;
use crate::error::{Error, Result};

/// Parses and validates an integrand over `n`-dimensional `x` and `z`.
pub fn parse_expr(text: &str, n: usize) -> Result<Expr> {
    let e = Parser::new(text).parse_all()?;
    e.validate(n)?;
    Ok(e)
}

/// Parses an expression in `t` only, as used for initial trajectories.
pub fn parse_time_expr(text: &str) -> Result<Expr> {
    let e = Parser::new(text).parse_all()?;
    if e.uses_state() {
        return Err(Error::InvalidProblem(format!(
            "initial trajectory `{text}` may only depend on t"
        )));
    }
    e.validate(0)?;
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos + 1,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        if !self.src.is_ascii() {
            return self.err("non-ASCII input");
        }
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
                return Ok(Expr::Const(-self.number()?));
            }
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err(format!("malformed number `{text}`"))
            }
        }
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect(b'(')?;
        let mut out = vec![self.expr()?];
        while self.eat(b',') {
            out.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(c) = self.peek() else {
            return self.err("unexpected end of input");
        };
        if c.is_ascii_digit() || c == b'.' {
            return Ok(Expr::Const(self.number()?));
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if !c.is_ascii_alphabetic() {
            return self.err(format!("unexpected character `{}`", c as char));
        }
        let start = self.pos;
        let name = self.ident();
        if name == "t" {
            return Ok(Expr::Time);
        }
        if let Some(var) = name.strip_prefix(['x', 'z']) {
            if !var.is_empty() && var.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = match var.parse() {
                    Ok(i) => i,
                    Err(_) => {
                        self.pos = start;
                        return self.err("variable index too large");
                    }
                };
                return Ok(if name.starts_with('x') {
                    Expr::VarX(index)
                } else {
                    Expr::VarZ(index)
                });
            }
        }
        let unary = |args: Vec<Expr>, p: &Self, f: fn(Box<Expr>) -> Expr| -> Result<Expr> {
            if args.len() != 1 {
                return p.err(format!("`{name}` takes exactly one argument"));
            }
            Ok(f(Box::new(args.into_iter().next().unwrap())))
        };
        match name {
            "sin" | "cos" | "exp" | "sqrt" | "abs" => {
                let args = self.args()?;
                let ctor: fn(Box<Expr>) -> Expr = match name {
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    "sqrt" => Expr::Sqrt,
                    _ => Expr::Abs,
                };
                unary(args, self, ctor)
            }
            "max" => Ok(Expr::Max(self.args()?)),
            "norm" => Ok(Expr::Norm(self.args()?)),
            "pow" => {
                self.expect(b'(')?;
                let base = self.expr()?;
                self.expect(b',')?;
                self.skip_ws();
                let k_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[k_start..self.pos]).unwrap_or("");
                let k: u32 = match digits.parse() {
                    Ok(k) if k >= 1 => k,
                    _ => {
                        self.pos = k_start;
                        return self.err("pow exponent must be an integer literal >= 1");
                    }
                };
                self.expect(b')')?;
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => {
                self.pos = start;
                self.err(format!("unknown identifier `{name}`"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn parses_example1() {
        assert_eq!(parse_expr("abs(x1)", 1).unwrap(), Expr::Abs(bx(Expr::VarX(1))));
    }

    #[test]
    fn parses_example3() {
        let e = parse_expr("max(pow(z1,2) - pow(x1,2) - 2*t*x1, x2)", 2).unwrap();
        let first = Expr::Sub(
            bx(Expr::Sub(
                bx(Expr::Pow(bx(Expr::VarZ(1)), 2)),
                bx(Expr::Pow(bx(Expr::VarX(1)), 2)),
            )),
            bx(Expr::Mul(
                bx(Expr::Mul(bx(Expr::Const(2.0)), bx(Expr::Time))),
                bx(Expr::VarX(1)),
            )),
        );
        assert_eq!(e, Expr::Max(vec![first, Expr::VarX(2)]));
    }

    #[test]
    fn rejects_nonsmooth_inside_sin() {
        assert!(matches!(
            parse_expr("sin(abs(x1))", 1),
            Err(Error::UnsupportedComposition(_))
        ));
    }

    #[test]
    fn index_range() {
        assert_eq!(
            parse_expr("x3 + 1", 2),
            Err(Error::IndexOutOfRange {
                name: 'x',
                index: 3,
                n: 2
            })
        );
        assert!(parse_expr("z0", 2).is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(
            parse_expr("x1 + * x2", 2),
            Err(Error::Syntax {
                pos: 6,
                msg: "unexpected character `*`".into()
            })
        );
        assert!(matches!(parse_expr("foo(x1)", 1), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(parse_expr("pow(x1, 1.5)", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("sin(x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1 x2", 2), Err(Error::Syntax { .. })));
    }

    #[test]
    fn whitespace_insensitive_and_scientific() {
        let a = parse_expr("  2.5e-3*x1+ t", 1).unwrap();
        let b = parse_expr("2.5e-3 * x1 + t", 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_expr("-3", 0).unwrap(), Expr::Const(-3.0));
        assert_eq!(
            parse_expr("-t", 0).unwrap(),
            Expr::Neg(bx(Expr::Time))
        );
    }

    #[test]
    fn time_expressions() {
        assert!(parse_time_expr("2*t - 1").is_ok());
        assert!(parse_time_expr("x1 + t").is_err());
    }
}
