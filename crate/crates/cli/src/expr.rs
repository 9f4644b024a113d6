//! Function expressions used in problem files.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary ("*" unary)*
//! unary   := "-" unary | primary
//! primary := number | "s" ["^" int] | atom ["@u" | "@v"] | "(" expr ")"
//! atom    := monomial(k) | sin | cos | exp_quad(c) | cauchy_sqrt
//!          | indicator(l, r) | geometric(r) | constant(c) | inv_shift(c)
//! ```
//!
//! `s` is the noise parameter. Function atoms act on the expression's own
//! variable unless suffixed with `@u` or `@v`; coefficient generators act on
//! the 1-based index `n`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// The variable of the surrounding context.
    Default,
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atom {
    /// `x^k`
    Monomial(u32),
    Sin,
    Cos,
    /// `exp(-c x²)`
    ExpQuad(f64),
    /// `(1 + x²)^{-1/2}`
    CauchySqrt,
    /// `1` on `[l, r]`, `0` elsewhere.
    Indicator(f64, f64),
    /// `r^n`
    Geometric(f64),
    /// `c` for every `n`.
    Constant(f64),
    /// `1 / (n + c)`
    InvShift(f64),
}

impl Atom {
    pub fn is_generator(&self) -> bool {
        matches!(self, Atom::Geometric(_) | Atom::Constant(_) | Atom::InvShift(_))
    }

    fn eval_at(&self, x: f64, n: usize) -> f64 {
        match *self {
            Atom::Monomial(k) => x.powi(k as i32),
            Atom::Sin => x.sin(),
            Atom::Cos => x.cos(),
            Atom::ExpQuad(c) => (-c * x * x).exp(),
            Atom::CauchySqrt => 1.0 / (1.0 + x * x).sqrt(),
            Atom::Indicator(l, r) => {
                if (l..=r).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Atom::Geometric(r) => r.powi(n as i32),
            Atom::Constant(c) => c,
            Atom::InvShift(c) => 1.0 / (n as f64 + c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Nonnegative literal; negation is [`Expr::Neg`].
    Num(f64),
    /// `s^k`
    Param(u32),
    Atom(Atom, Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

/// Evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Env {
    pub s: f64,
    pub u: f64,
    pub v: f64,
    pub n: usize,
    /// What [`Var::Default`] resolves to; must be `U` or `V`.
    pub default: Var,
}

impl Env {
    /// Function of one variable `x` (bound to both `u` and `v`).
    pub fn at(s: f64, x: f64) -> Self {
        Env {
            s,
            u: x,
            v: x,
            n: 0,
            default: Var::V,
        }
    }

    pub fn pair(u: f64, v: f64) -> Self {
        Env {
            s: 0.0,
            u,
            v,
            n: 0,
            default: Var::V,
        }
    }

    pub fn index(s: f64, n: usize) -> Self {
        Env {
            s,
            u: 0.0,
            v: 0.0,
            n,
            default: Var::V,
        }
    }
}

/// Where an expression is used; decides which atoms are legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Usage {
    /// Function of a single variable, bare atoms only.
    Function,
    /// Kernel `k(u, v)`; every function atom needs `@u` or `@v`.
    Kernel,
    /// Coefficient sequence; generators only.
    Coefficients,
}

impl Expr {
    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Param(k) => env.s.powi(*k as i32),
            Expr::Atom(a, var) => {
                let x = match (var, env.default) {
                    (Var::U, _) | (Var::Default, Var::U) => env.u,
                    _ => env.v,
                };
                a.eval_at(x, env.n)
            }
            Expr::Neg(e) => -e.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
        }
    }

    pub fn uses_param(&self) -> bool {
        match self {
            Expr::Param(_) => true,
            Expr::Num(_) | Expr::Atom(..) => false,
            Expr::Neg(e) => e.uses_param(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.uses_param() || b.uses_param(),
        }
    }

    /// Checks atoms against `usage`; `allow_s` permits `s^k` factors.
    pub fn validate(&self, usage: Usage, allow_s: bool) -> Result<(), String> {
        match self {
            Expr::Num(_) => Ok(()),
            Expr::Param(_) if allow_s => Ok(()),
            Expr::Param(_) => Err("the parameter s is not allowed here".into()),
            Expr::Atom(a, var) => match usage {
                Usage::Coefficients if !a.is_generator() => Err(format!(
                    "{} is a function atom; coefficient sequences take geometric, constant or inv_shift",
                    Expr::Atom(*a, *var)
                )),
                Usage::Coefficients if *var != Var::Default => {
                    Err("coefficient generators take no variable suffix".into())
                }
                Usage::Function | Usage::Kernel if a.is_generator() => Err(format!(
                    "{} is a coefficient generator, not a function",
                    Expr::Atom(*a, *var)
                )),
                Usage::Function if *var != Var::Default => {
                    Err("variable suffixes are only used in grid kernels".into())
                }
                Usage::Kernel if *var == Var::Default => Err(format!(
                    "{} needs @u or @v in a two-variable kernel",
                    Expr::Atom(*a, *var)
                )),
                _ => Ok(()),
            },
            Expr::Neg(e) => e.validate(usage, allow_s),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.validate(usage, allow_s)?;
                b.validate(usage, allow_s)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.write_prec(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(c) => f.write_str(&fmt_num(*c)),
            Expr::Param(1) => f.write_str("s"),
            Expr::Param(k) => write!(f, "s^{k}"),
            Expr::Atom(a, var) => {
                match *a {
                    Atom::Monomial(k) => write!(f, "monomial({k})")?,
                    Atom::Sin => f.write_str("sin")?,
                    Atom::Cos => f.write_str("cos")?,
                    Atom::ExpQuad(c) => write!(f, "exp_quad({})", fmt_num(c))?,
                    Atom::CauchySqrt => f.write_str("cauchy_sqrt")?,
                    Atom::Indicator(l, r) => write!(f, "indicator({}, {})", fmt_num(l), fmt_num(r))?,
                    Atom::Geometric(r) => write!(f, "geometric({})", fmt_num(r))?,
                    Atom::Constant(c) => write!(f, "constant({})", fmt_num(c))?,
                    Atom::InvShift(c) => write!(f, "inv_shift({})", fmt_num(c))?,
                }
                match var {
                    Var::Default => Ok(()),
                    Var::U => f.write_str("@u"),
                    Var::V => f.write_str("@v"),
                }
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_prec(f, 3)
            }
            Expr::Add(a, b) => {
                a.write_prec(f, 1)?;
                f.write_str(" + ")?;
                b.write_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_prec(f, 1)?;
                f.write_str(" - ")?;
                b.write_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_prec(f, 2)?;
                f.write_str(" * ")?;
                b.write_prec(f, 3)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// Shortest round-tripping decimal, in exponent form when that is clearly
/// shorter.
pub fn fmt_num(x: f64) -> String {
    let plain = format!("{x}");
    let exp = format!("{x:e}");
    if plain.len() > exp.len() + 3 {
        exp
    } else {
        plain
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("column {column}: unknown function `{name}`")]
    UnknownFunction { column: usize, name: String },
}

impl ExprError {
    pub fn column(&self) -> usize {
        match self {
            ExprError::Syntax { column, .. } | ExprError::UnknownFunction { column, .. } => *column,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Caret,
    At,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn syntax(column: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
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
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| syntax(col, format!("bad number `{s}`")))?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(syntax(col, format!("unexpected character `{c}`")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let (t, col) = self.next();
        if t == want {
            Ok(())
        } else {
            Err(syntax(col, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.next();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn signed_number(&mut self) -> Result<f64, ExprError> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            (Tok::Num(v), _) => Ok(if neg { -v } else { v }),
            (_, col) => Err(syntax(col, "expected a number")),
        }
    }

    fn exponent(&mut self) -> Result<u32, ExprError> {
        let col = self.col();
        let v = self.signed_number()?;
        if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
            return Err(syntax(col, "exponent must be an integer in 0..=64"));
        }
        Ok(v as u32)
    }

    fn args(&mut self, count: usize, name: &str) -> Result<Vec<f64>, ExprError> {
        self.expect(Tok::LParen, &format!("`(` after {name}"))?;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                self.expect(Tok::Comma, "`,`")?;
            }
            out.push(self.signed_number()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let (tok, col) = self.next();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "s" => {
                if *self.peek() == Tok::Caret {
                    self.next();
                    Ok(Expr::Param(self.exponent()?))
                } else {
                    Ok(Expr::Param(1))
                }
            }
            Tok::Ident(name) => {
                let atom = match name.as_str() {
                    "monomial" => {
                        self.expect(Tok::LParen, "`(` after monomial")?;
                        let k = self.exponent()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Atom::Monomial(k)
                    }
                    "sin" => Atom::Sin,
                    "cos" => Atom::Cos,
                    "cauchy_sqrt" => Atom::CauchySqrt,
                    "exp_quad" => Atom::ExpQuad(self.args(1, &name)?[0]),
                    "indicator" => {
                        let a = self.args(2, &name)?;
                        if a[0] > a[1] {
                            return Err(syntax(col, "indicator needs l <= r"));
                        }
                        Atom::Indicator(a[0], a[1])
                    }
                    "geometric" => Atom::Geometric(self.args(1, &name)?[0]),
                    "constant" => Atom::Constant(self.args(1, &name)?[0]),
                    "inv_shift" => Atom::InvShift(self.args(1, &name)?[0]),
                    _ => return Err(ExprError::UnknownFunction { column: col, name }),
                };
                let var = if *self.peek() == Tok::At {
                    self.next();
                    match self.next() {
                        (Tok::Ident(v), _) if v == "u" => Var::U,
                        (Tok::Ident(v), _) if v == "v" => Var::V,
                        (_, c) => return Err(syntax(c, "expected `u` or `v` after `@`")),
                    }
                } else {
                    Var::Default
                };
                Ok(Expr::Atom(atom, var))
            }
            Tok::End => Err(syntax(col, "unexpected end of expression")),
            _ => Err(syntax(col, "expected a number, `s`, a function or `(`")),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(text: &str) -> Result<Self, ExprError> {
        let mut lx = Lexer {
            toks: lex(text)?,
            pos: 0,
        };
        let e = lx.expr()?;
        match lx.next() {
            (Tok::End, _) => Ok(e),
            (_, col) => Err(syntax(col, "trailing input")),
        }
    }
}
