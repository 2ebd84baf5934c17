//! A small arithmetic expression language for coefficient fields and
//! potentials.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | constant | variable
//!         | function "(" expr { "," expr } ")"
//!         | "(" expr ")" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! constant = "pi" | "e" ;
//! variable = "x1" | "x2" | ... | "xn" | "x" (only when n = 1) ;
//! function = "sin" | "cos" | "exp" | "sqrt" | "abs" | "tanh"   (* one argument *)
//!          | "pow" | "min" | "max" ;                         (* two arguments *)
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2 = -4` and `2^3^2 = 512`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Tanh,
    Pow,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Pow,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Expression tree. Literals are always non-negative; a leading minus is a
/// [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at offset {offset}: expected {expected} near `{excerpt}`")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has dimension {got}, expression needs {need}")]
    Dimension { got: usize, need: usize },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: &'static str },
}

/// Parse `text` as an expression over coordinates `x1..xn`.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        n,
    };
    p.skip_ws();
    if p.pos >= p.bytes.len() {
        return Err(p.error("an expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, expected: &str) -> ParseError {
        let start = self.pos.saturating_sub(8);
        let end = (self.pos + 8).min(self.src.len());
        let excerpt = self
            .src
            .get(start..end)
            .unwrap_or(self.src)
            .to_string();
        ParseError {
            offset: self.pos,
            expected: expected.to_string(),
            excerpt,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("`)`"));
                }
                Ok(e)
            }
            _ => Err(self.error("a number, variable, function or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i < b.len() && b[i] == b'.' {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        match self.src[start..i].parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Expr::Num(v))
            }
            Err(_) => Err(self.error("a number")),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut i = self.pos;
        while i < self.bytes.len() && self.bytes[i].is_ascii_alphanumeric() {
            i += 1;
        }
        let name = &self.src[start..i];
        if let Some(func) = Func::from_name(name) {
            self.pos = i;
            if !self.eat(b'(') {
                return Err(self.error("`(` after function name"));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.error("`,` or `)`"));
            }
            if args.len() != func.arity() {
                self.pos = start;
                return Err(self.error(&format!(
                    "{} argument(s) for `{}`",
                    func.arity(),
                    func.name()
                )));
            }
            return Ok(Expr::Call(func, args));
        }
        let expr = match name {
            "pi" => Some(Expr::Const(Constant::Pi)),
            "e" => Some(Expr::Const(Constant::E)),
            "x" if self.n == 1 => Some(Expr::Var(0)),
            _ => name
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&k| k >= 1 && k <= self.n && !name[1..].starts_with('0'))
                .map(|k| Expr::Var(k - 1)),
        };
        match expr {
            Some(e) => {
                self.pos = i;
                Ok(e)
            }
            None => Err(self.error(&format!("a known identifier, found `{name}`"))),
        }
    }
}

impl Expr {
    /// Evaluate at point `x`. Any non-finite intermediate is reported as a
    /// domain error naming the offending subexpression.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let need = self.max_var().map_or(0, |v| v + 1);
        if x.len() < need {
            return Err(EvalError::Dimension { got: x.len(), need });
        }
        self.eval_unchecked(x)
    }

    fn eval_unchecked(&self, x: &[f64]) -> Result<f64, EvalError> {
        let domain = |e: &Expr, reason| EvalError::Domain {
            subexpr: e.to_string(),
            reason,
        };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => c.value(),
            Expr::Var(k) => x[*k],
            Expr::Neg(e) => -e.eval_unchecked(x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_unchecked(x)?;
                let b = b.eval_unchecked(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(a, b).map_err(|r| domain(self, r))?,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_unchecked(x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain(self, "square root of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Tanh => a.tanh(),
                    Func::Pow => {
                        let b = args[1].eval_unchecked(x)?;
                        checked_pow(a, b).map_err(|r| domain(self, r))?
                    }
                    Func::Min => a.min(args[1].eval_unchecked(x)?),
                    Func::Max => a.max(args[1].eval_unchecked(x)?),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(self, "non-finite result"))
        }
    }

    /// Largest zero-based coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Const(_) => None,
            Expr::Var(k) => Some(*k),
            Expr::Neg(e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().filter_map(Expr::max_var).max(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }
}

fn checked_pow(a: f64, b: f64) -> Result<f64, &'static str> {
    if a == 0.0 && b < 0.0 {
        return Err("zero raised to a negative power");
    }
    if a < 0.0 && b.fract() != 0.0 {
        return Err("negative base with non-integer exponent");
    }
    Ok(a.powf(b))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Var(k) => write!(f, "x{}", k + 1),
            Expr::Neg(e) => {
                // `-a^b` already parses as `-(a^b)`, so only looser children
                // need parentheses.
                if e.precedence() < 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let right_assoc = *op == BinOp::Pow;
                let wrap_left = if right_assoc {
                    a.precedence() <= p
                } else {
                    a.precedence() < p
                };
                let wrap_right = if right_assoc {
                    b.precedence() < 3
                } else {
                    b.precedence() <= p
                };
                if wrap_left {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if wrap_right {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
