//! Closed-form expressions in (t, x1, x2).
//!
//! Grammar:
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//! Identifiers: `t`, `x1`, `x2`, `pi`. Functions: sin, cos, tan, exp, log,
//! sqrt, tanh, sinh, cosh, atan and `chi` (the smooth cutoff of the lifting).

use crate::dual::Dual3;
use crate::geometry::chi_derivs;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sinh,
    Cosh,
    Atan,
    Chi,
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    src: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<(Tok, usize)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && (b[j] as char).is_ascii_digit() {
                    i = j;
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let txt = &s[start..i];
            let v: f64 = txt.parse().map_err(|_| Error::Expr(format!("bad number '{txt}' at column {}", start + 1)))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(s[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{c}' at column {}", i + 1)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1 + 1).unwrap_or(0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Bin('+', Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Bin('-', Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Bin('/', Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Expr(format!("expected ')' at column {}", self.col())));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "tan" => Func::Tan,
                        "exp" => Func::Exp,
                        "log" | "ln" => Func::Log,
                        "sqrt" => Func::Sqrt,
                        "tanh" => Func::Tanh,
                        "sinh" => Func::Sinh,
                        "cosh" => Func::Cosh,
                        "atan" => Func::Atan,
                        "chi" => Func::Chi,
                        _ => return Err(Error::Expr(format!("unknown function '{name}' at column {col}"))),
                    };
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Expr(format!("expected ')' at column {}", self.col())));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "t" => Ok(Node::Var(0)),
                    "x1" => Ok(Node::Var(1)),
                    "x2" => Ok(Node::Var(2)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    _ => Err(Error::Expr(format!("unknown identifier '{name}' at column {col}"))),
                }
            }
            Some(Tok::Op(c)) => Err(Error::Expr(format!("unexpected '{c}' at column {col}"))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}

fn eval_node(n: &Node, x: &[Dual3; 3]) -> Dual3 {
    match n {
        Node::Num(v) => Dual3::constant(*v),
        Node::Var(k) => x[*k],
        Node::Neg(a) => -eval_node(a, x),
        Node::Bin(op, a, b) => {
            let a = eval_node(a, x);
            let b = eval_node(b, x);
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.pow(b),
            }
        }
        Node::Call(f, a) => {
            let a = eval_node(a, x);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Tanh => a.tanh(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Atan => a.atan(),
                Func::Chi => {
                    let (c, dc, _) = chi_derivs(a.v);
                    a.chain(c, dc)
                }
            }
        }
    }
}

fn depends(n: &Node, k: usize) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var(j) => *j == k,
        Node::Neg(a) | Node::Call(_, a) => depends(a, k),
        Node::Bin(_, a, b) => depends(a, k) || depends(b, k),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Expr("empty expression".into()));
        }
        let mut p = Parser { toks: &toks, pos: 0 };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return Err(Error::Expr(format!("trailing input at column {}", p.col())));
        }
        Ok(Expr { src: src.to_string(), root })
    }

    pub fn constant(v: f64) -> Expr {
        Expr { src: format!("{v}"), root: Node::Num(v) }
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// Value and gradient in (t, x1, x2).
    pub fn eval_dual(&self, t: f64, x1: f64, x2: f64) -> Dual3 {
        let x = [Dual3::var(t, 0), Dual3::var(x1, 1), Dual3::var(x2, 2)];
        eval_node(&self.root, &x)
    }

    pub fn eval(&self, t: f64, x1: f64, x2: f64) -> f64 {
        self.eval_dual(t, x1, x2).v
    }

    /// Whether the expression mentions variable k (0 = t, 1 = x1, 2 = x2).
    pub fn depends_on(&self, k: usize) -> bool {
        depends(&self.root, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(Expr::parse("1+2*3").unwrap().eval(0., 0., 0.), 7.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0., 0., 0.), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0., 0., 0.), 512.0);
        assert_eq!(Expr::parse("(1+2)*3").unwrap().eval(0., 0., 0.), 9.0);
        assert_eq!(Expr::parse("8/4/2").unwrap().eval(0., 0., 0.), 1.0);
        assert_eq!(Expr::parse("1e-3*2").unwrap().eval(0., 0., 0.), 2e-3);
    }

    #[test]
    fn derivatives() {
        let e = Expr::parse("x1^2*sin(x2) + t*exp(-x1)").unwrap();
        let d = e.eval_dual(0.5, 1.5, 0.3);
        assert!((d.d[0] - (-1.5f64).exp()).abs() < 1e-14);
        assert!((d.d[1] - (3.0 * 0.3f64.sin() - 0.5 * (-1.5f64).exp())).abs() < 1e-14);
        assert!((d.d[2] - 2.25 * 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("1+").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("y").is_err());
        assert!(Expr::parse("(1").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn dependency() {
        let e = Expr::parse("1 + 0.1*sin(x2)").unwrap();
        assert!(!e.depends_on(0) && !e.depends_on(1) && e.depends_on(2));
    }
}
