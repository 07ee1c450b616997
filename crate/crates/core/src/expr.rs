//! Arithmetic expressions in chart coordinates.
//!
//! Expressions are parsed once into a small tree and evaluated over [`Jet`]s,
//! so every user-supplied density, potential, or metric coefficient comes with
//! exact partial derivatives.
//!
//! Grammar: numbers, variables, `+ - * / ^` (right-associative power), unary
//! minus, parentheses, the constants `pi` and `e`, and the functions `sin cos
//! tan exp ln log sqrt sinh cosh tanh abs`.

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "exp" => Self::Exp,
            "ln" | "log" => Self::Ln,
            "sqrt" => Self::Sqrt,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            "abs" => Self::Abs,
            _ => return None,
        })
    }
}

/// Standard coordinate names for a chart of dimension `dim`: `x0, x1, …`
/// plus the aliases `x, y, z` for the first three.
pub fn coordinate_names(dim: usize) -> Vec<(String, usize)> {
    let mut names: Vec<(String, usize)> = (0..dim).map(|k| (format!("x{k}"), k)).collect();
    for (k, alias) in ["x", "y", "z"].iter().enumerate().take(dim) {
        names.push((alias.to_string(), k));
    }
    names
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
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
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{text}' in '{src}'")))?;
            tokens.push(Token::Num(value));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}' in '{src}'")));
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [(String, usize)],
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} in '{}'", self.src))
    }

    fn expression(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = match self.next() {
            Some(Token::Num(v)) => Expr::Num(v),
            Some(Token::Op('(')) => {
                let e = self.expression(0)?;
                match self.next() {
                    Some(Token::Op(')')) => e,
                    _ => return Err(self.err("missing ')'")),
                }
            }
            Some(Token::Op('-')) => Expr::Neg(Box::new(self.expression(5)?)),
            Some(Token::Op('+')) => self.expression(5)?,
            Some(Token::Ident(name)) => self.identifier(&name)?,
            Some(t) => return Err(self.err(&format!("unexpected token {t:?}"))),
            None => return Err(self.err("unexpected end of expression")),
        };
        loop {
            let op = match self.peek() {
                Some(Token::Op(c)) if "+-*/^".contains(*c) => *c,
                Some(Token::Op(')')) | None => break,
                Some(t) => return Err(self.err(&format!("unexpected token {t:?}"))),
            };
            let (lbp, rbp) = match op {
                '+' | '-' => (1, 2),
                '*' | '/' => (3, 4),
                _ => (7, 6),
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = Box::new(self.expression(rbp)?);
            let l = Box::new(lhs);
            lhs = match op {
                '+' => Expr::Add(l, rhs),
                '-' => Expr::Sub(l, rhs),
                '*' => Expr::Mul(l, rhs),
                '/' => Expr::Div(l, rhs),
                _ => Expr::Pow(l, rhs),
            };
        }
        Ok(lhs)
    }

    fn identifier(&mut self, name: &str) -> Result<Expr> {
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(&Token::Op('(')) {
                return Err(self.err(&format!("function '{name}' needs parentheses")));
            }
            self.pos += 1;
            let arg = self.expression(0)?;
            if self.next() != Some(Token::Op(')')) {
                return Err(self.err("missing ')'"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some((_, k)) = self.names.iter().find(|(n, _)| n == name) {
            return Ok(Expr::Var(*k));
        }
        match name {
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "e" => Ok(Expr::Num(std::f64::consts::E)),
            _ => Err(self.err(&format!("unknown identifier '{name}'"))),
        }
    }
}

impl Expr {
    /// Parse `src`, resolving identifiers through `names` (name → variable index).
    pub fn parse(src: &str, names: &[(String, usize)]) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            names,
            src,
        };
        let e = p.expression(0)?;
        if p.pos != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    /// Parse with the standard coordinate names of a `dim`-dimensional chart.
    pub fn parse_coords(src: &str, dim: usize) -> Result<Expr> {
        Self::parse(src, &coordinate_names(dim))
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(k) => Some(*k),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.constant().map(|v| -v),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => x[*k],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match b.constant() {
                    Some(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Tanh => v.tanh(),
                    Func::Abs => v.abs(),
                }
            }
        }
    }

    /// Evaluate over jets: the result carries all partial derivatives up to
    /// the jets' order.
    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        match self {
            Expr::Num(v) => x[0].lift(*v),
            Expr::Var(k) => x[*k].clone(),
            Expr::Neg(a) => -a.eval_jet(x),
            Expr::Add(a, b) => a.eval_jet(x) + b.eval_jet(x),
            Expr::Sub(a, b) => a.eval_jet(x) - b.eval_jet(x),
            Expr::Mul(a, b) => {
                if let Some(c) = a.constant() {
                    return b.eval_jet(x) * c;
                }
                if let Some(c) = b.constant() {
                    return a.eval_jet(x) * c;
                }
                a.eval_jet(x) * b.eval_jet(x)
            }
            Expr::Div(a, b) => match b.constant() {
                Some(c) => a.eval_jet(x) / c,
                None => a.eval_jet(x) / b.eval_jet(x),
            },
            Expr::Pow(a, b) => {
                let base = a.eval_jet(x);
                match b.constant() {
                    Some(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                    Some(p) => base.powf(p),
                    None => (b.eval_jet(x) * base.ln()).exp(),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval_jet(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Tanh => v.tanh(),
                    Func::Abs => {
                        if v.value() < 0.0 {
                            -v
                        } else {
                            v
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Expr {
        Expr::parse_coords(src, 3).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("1 + 2 * 3").eval(&[]), 7.0);
        assert_eq!(p("2 ^ 3 ^ 2").eval(&[]), 512.0);
        assert_eq!(p("-2 ^ 2").eval(&[]), -4.0);
        assert_eq!(p("(1 - 2) - 3").eval(&[]), -4.0);
        assert_eq!(p("8 / 4 / 2").eval(&[]), 1.0);
        assert_eq!(p("1.5e-1 * 2").eval(&[]), 0.3);
    }

    #[test]
    fn variables_and_functions() {
        let e = p("x0^2 + sin(y) * exp(z) - pi");
        let v = e.eval(&[1.5, 0.3, -0.2]);
        let expected = 2.25 + 0.3f64.sin() * (-0.2f64).exp() - std::f64::consts::PI;
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn jet_evaluation_gives_derivatives() {
        let e = p("x^2 * y + ln(1 + z^2)");
        let vars = Jet::variables(&[0.5, 2.0, 1.0], 2);
        let j = e.eval_jet(&vars);
        assert!((j.value() - (0.5 + 2f64.ln())).abs() < 1e-14);
        let g = j.gradient();
        assert!((g[0] - 2.0).abs() < 1e-14);
        assert!((g[1] - 0.25).abs() < 1e-14);
        assert!((g[2] - 1.0).abs() < 1e-14);
        assert!((j.hessian()[2][2] - 0.0).abs() < 1e-14);
    }

    #[test]
    fn errors_name_the_problem() {
        let err = Expr::parse_coords("x + w", 2).unwrap_err().to_string();
        assert!(err.contains("'w'"));
        assert!(Expr::parse_coords("sin x", 1).is_err());
        assert!(Expr::parse_coords("(x", 1).is_err());
        assert!(Expr::parse_coords("x $ 2", 1).is_err());
        assert!(Expr::parse_coords("x 2", 1).is_err());
    }

    #[test]
    fn variable_exponent_uses_exp_ln() {
        let e = p("x ^ y");
        let vars = Jet::variables(&[2.0, 3.0], 1);
        let j = e.eval_jet(&vars);
        assert!((j.value() - 8.0).abs() < 1e-13);
        assert!((j.gradient()[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }
}
