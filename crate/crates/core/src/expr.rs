//! Closed-form scalar expressions.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' atom
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`; write `-(x^2)`
//! for the other reading.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sgn,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Atan,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sgn" => Func::Sgn,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Abs => v.abs(),
            Func::Sgn => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else if v == 0.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Atan => v.atan(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parse tree node. Variables refer to slots in the owning expression's
/// variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, args: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => args[*i],
            Node::Neg(a) => -a.eval(args),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(args), b.eval(args));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(args)),
        }
    }

    fn remap(&mut self, map: &[usize]) {
        match self {
            Node::Num(_) => {}
            Node::Var(i) => *i = map[*i],
            Node::Neg(a) | Node::Call(_, a) => a.remap(map),
            Node::Bin(_, a, b) => {
                a.remap(map);
                b.remap(map);
            }
        }
    }
}

/// A parsed expression together with its variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    text: String,
    root: Node,
    vars: Vec<String>,
}

impl Expression {
    /// Parses `text`; variables are recorded in order of first appearance.
    pub fn parse(text: &str) -> Result<Expression> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            vars: Vec::new(),
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.syntax("operator or end of input"));
        }
        Ok(Expression {
            text: text.to_string(),
            root,
            vars: p.vars,
        })
    }

    /// Parses an expression whose only variable (if any) is `var`.
    pub fn parse_in(text: &str, var: &str) -> Result<Expression> {
        Expression::parse(text)?.bind(&[var])
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Rebinds the expression so that argument `k` of [`Expression::eval`]
    /// is the variable `names[k]`. Fails on a variable not in `names`.
    pub fn bind(&self, names: &[&str]) -> Result<Expression> {
        self.bind_with(names.len(), |v| names.iter().position(|n| *n == v))
            .map(|mut e| {
                e.vars = names.iter().map(|s| s.to_string()).collect();
                e
            })
    }

    /// Like [`Expression::bind`] with a custom name resolver over `arity` slots.
    pub fn bind_with(
        &self,
        arity: usize,
        resolve: impl Fn(&str) -> Option<usize>,
    ) -> Result<Expression> {
        let mut map = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            match resolve(v) {
                Some(i) if i < arity => map.push(i),
                _ => return Err(Error::UnknownVariable { name: v.clone() }),
            }
        }
        let mut root = self.root.clone();
        root.remap(&map);
        Ok(Expression {
            text: self.text.clone(),
            root,
            vars: (0..arity).map(|i| format!("#{i}")).collect(),
        })
    }

    /// Evaluates with positional arguments. Undefined operations yield NaN or
    /// an infinity rather than an error.
    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert!(args.len() >= self.vars.len());
        self.root.eval(args)
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.root.eval(std::slice::from_ref(&x))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Vec<String>,
}

impl Parser<'_> {
    fn syntax(&self, expected: &str) -> Error {
        Error::SyntaxError {
            position: self.pos,
            expected: expected.to_string(),
        }
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

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.atom()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("number, identifier, '(' or '-'")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("digit"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something else: treat `e` as not part of the number
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Node::Num).map_err(|_| Error::SyntaxError {
            position: start,
            expected: "number".into(),
        })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii slice")
            .to_string();
        if self.peek() == Some(b'(') {
            let func = Func::lookup(&name).ok_or(Error::UnknownFunction { name })?;
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() == Some(b',') {
                return Err(self.syntax("')' (functions take one argument)"));
            }
            if !self.eat(b')') {
                return Err(self.syntax("')'"));
            }
            return Ok(Node::Call(func, Box::new(arg)));
        }
        let slot = match self.vars.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name);
                self.vars.len() - 1
            }
        };
        Ok(Node::Var(slot))
    }
}
