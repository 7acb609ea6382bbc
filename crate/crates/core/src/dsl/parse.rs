use rug::{Integer, Rational};
use thiserror::Error;

use super::{Expr, Offset};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at {pos}: {msg}")]
pub struct ParseError {
    /// Character position in the input.
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(Integer),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn new(text: &str) -> Result<Lexer, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    return Err(ParseError {
                        pos: i,
                        msg: "decimal literals are not supported; write p/q".into(),
                    });
                }
                let s: String = chars[start..i].iter().collect();
                let n = Integer::from_str_radix(&s, 10).expect("digits only");
                toks.push((Tok::Int(n), start));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let mut s: String = chars[start..i].iter().collect();
                if s == "ε" {
                    s = "eps".into();
                }
                toks.push((Tok::Ident(s), start));
                continue;
            }
            let t = match c {
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                '*' | '·' | '×' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                _ => {
                    return Err(ParseError {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            toks.push((t, start));
            i += 1;
        }
        toks.push((Tok::End, chars.len()));
        Ok(Lexer { toks })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp_pos = self.pos();
            let exp = self.unary()?;
            if !exp.cells().is_empty() || exp.has_sqrt() {
                return Err(ParseError {
                    pos: exp_pos,
                    msg: "exponent must be an integer expression in symbols".into(),
                });
            }
            if let Ok(v) = exp.evaluate(&super::Binding::new()) {
                if *v.denom() != 1 {
                    return Err(ParseError {
                        pos: exp_pos,
                        msg: format!("non-integer exponent {v}"),
                    });
                }
            }
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let neg = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        match self.peek().clone() {
            Tok::Int(n) => {
                let v = match n.to_i64() {
                    Some(v) => v,
                    None => return self.err("cell offset out of range"),
                };
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.err("malformed cell reference: expected a signed integer offset"),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Num(Rational::from(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LBracket => {
                        self.bump();
                        let dn = self.signed_int()?;
                        self.expect(Tok::Comma, "`,` in cell reference")?;
                        let dt = self.signed_int()?;
                        self.expect(Tok::RBracket, "`]` closing cell reference")?;
                        Ok(Expr::Cell(Offset::new(dn, dt)))
                    }
                    Tok::LParen if name == "sqrt" => {
                        self.bump();
                        let inner = self.expr()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Expr::Sqrt(Box::new(inner)))
                    }
                    _ => Ok(Expr::Sym(name)),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::End => self.err("unexpected end of input"),
            t => self.err(format!("unexpected token {t:?}")),
        }
    }
}

pub(super) fn parse(text: &str) -> Result<Expr, ParseError> {
    let lexer = Lexer::new(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_cell_reference() {
        let err = parse("z[1,]").unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(err.msg.contains("malformed cell reference"));
        assert!(parse("z[1 0]").is_err());
        assert!(parse("z[a,0]").is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(parse("1 + ").unwrap_err().pos, 4);
        assert_eq!(parse("1 $ 2").unwrap_err().pos, 2);
        assert_eq!(parse("(1 + 2").unwrap_err().pos, 6);
        assert_eq!(parse("0.5").unwrap_err().pos, 1);
        assert!(parse("2^(1/2)").is_err());
        assert!(parse("2^z[0,0]").is_err());
        assert!(parse("1 2").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("1+2*3").unwrap().to_string(), "1 + 2*3");
        assert_eq!(parse("(1+2)*3").unwrap().to_string(), "(1 + 2)*3");
        assert_eq!(parse("a-(b-c)").unwrap().to_string(), "a - (b - c)");
        assert_eq!(parse("a/(b*c)").unwrap().to_string(), "a/(b*c)");
        assert_eq!(parse("(-a)^2").unwrap().to_string(), "(-a)^2");
        assert_eq!(parse("ε*u").unwrap(), Expr::mul(Expr::sym("eps"), Expr::sym("u")));
    }
}
