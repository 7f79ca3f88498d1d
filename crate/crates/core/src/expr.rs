//! Arithmetic expression parser for state profiles and potentials.
//!
//! Grammar: `+ - * / ^` with usual precedence (`^` binds tightest, right
//! associative), unary minus, parentheses, the functions `sin cos exp tanh`,
//! and the constants `pi` and `hbar`. Variables are declared at parse time so
//! the same parser serves `a(x)`, `S(x)`, `V(x)` and momentum-space cutoffs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Hbar,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Tanh(Box<Expr>),
}

impl Expr {
    /// Parse with the given variable names (e.g. `&["x"]`).
    pub fn parse(src: &str, vars: &[&str]) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, vars, src_len: src.chars().count() };
        let e = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(p.error_here("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, vars: &[f64], hbar: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => vars[*i],
            Expr::Hbar => hbar,
            Expr::Add(a, b) => a.eval(vars, hbar) + b.eval(vars, hbar),
            Expr::Sub(a, b) => a.eval(vars, hbar) - b.eval(vars, hbar),
            Expr::Mul(a, b) => a.eval(vars, hbar) * b.eval(vars, hbar),
            Expr::Div(a, b) => a.eval(vars, hbar) / b.eval(vars, hbar),
            Expr::Pow(a, b) => a.eval(vars, hbar).powf(b.eval(vars, hbar)),
            Expr::Neg(a) => -a.eval(vars, hbar),
            Expr::Sin(a) => a.eval(vars, hbar).sin(),
            Expr::Cos(a) => a.eval(vars, hbar).cos(),
            Expr::Exp(a) => a.eval(vars, hbar).exp(),
            Expr::Tanh(a) => a.eval(vars, hbar).tanh(),
        }
    }
}

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

/// Token plus the 1-based column where it starts.
type Spanned = (Tok, usize);

fn tokenize(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| Error::Parse {
                    column: col,
                    msg: format!("bad number literal '{text}'"),
                })?;
                out.push((Tok::Num(v), col));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            _ => {
                return Err(Error::Parse { column: col, msg: format!("unexpected character '{c}'") })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    vars: &'a [&'a str],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, c)| *c).unwrap_or(self.src_len + 1)
    }

    fn error_here(&self, msg: &str) -> Error {
        Error::Parse { column: self.column(), msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(&format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            // right associative; allow unary minus in the exponent
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "closing ')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "closing ')'")?;
                    let arg = Box::new(arg);
                    return match name.as_str() {
                        "sin" => Ok(Expr::Sin(arg)),
                        "cos" => Ok(Expr::Cos(arg)),
                        "exp" => Ok(Expr::Exp(arg)),
                        "tanh" => Ok(Expr::Tanh(arg)),
                        _ => Err(self.error_here(&format!("unknown function '{name}'"))),
                    };
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "hbar" => Ok(Expr::Hbar),
                    _ => {
                        if let Some(i) = self.vars.iter().position(|v| *v == name) {
                            Ok(Expr::Var(i))
                        } else {
                            Err(self.error_here(&format!("unknown identifier '{name}'")))
                        }
                    }
                }
            }
            _ => Err(self.error_here("expected a number, variable, function or '('")),
        }
    }
}
