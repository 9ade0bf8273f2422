//! The expression language used for curve components and ruling
//! coefficients, and its jet evaluator.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' int)?
//! atom   := number | 'pi' | 's' | symbol | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `symbol` is one of the curve functions `kappa`, `tau`, `speed`, `sigma`;
//! they are supplied at evaluation time by a [`Resolver`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::jet::{Jet, JetError};

/// Half-width of the neighbourhood in which a quotient is re-expanded from
/// a nearby zero of its denominator instead of being divided directly.
pub const REMOVABLE_WINDOW: f64 = 0.25;

/// Extra Taylor orders carried when re-expanding from a removable zero.
pub const REMOVABLE_EXTRA_ORDERS: usize = 40;

const ROOT_GRID: f64 = (1u64 << 36) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Kappa,
    Tau,
    Speed,
    Sigma,
}

impl Symbol {
    pub fn name(self) -> &'static str {
        match self {
            Symbol::Kappa => "kappa",
            Symbol::Tau => "tau",
            Symbol::Speed => "speed",
            Symbol::Sigma => "sigma",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "kappa" => Symbol::Kappa,
            "tau" => Symbol::Tau,
            "speed" => Symbol::Speed,
            "sigma" => Symbol::Sigma,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Atan,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Sym(Symbol),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("exponent at offset {offset} is not an integer literal")]
    NonIntegerExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonIntegerExponent { offset } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("no value available for `{}`", .0.name())]
    UnresolvedSymbol(Symbol),
    #[error("evaluating `{}` at s = {s0}: {reason}", symbol.name())]
    Symbol {
        symbol: Symbol,
        s0: f64,
        reason: String,
    },
}

/// Supplies jets for the reserved curve symbols.
pub trait Resolver {
    fn resolve(&self, symbol: Symbol, s0: f64, order: usize) -> Result<Jet, EvalError>;
}

/// Resolver for expressions that must not mention curve symbols.
pub struct NoSymbols;

impl Resolver for NoSymbols {
    fn resolve(&self, symbol: Symbol, _s0: f64, _order: usize) -> Result<Jet, EvalError> {
        Err(EvalError::UnresolvedSymbol(symbol))
    }
}

// ---------------------------------------------------------------------------
// Lexing and parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            let mut integer = true;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                integer = false;
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    integer = false;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            self.pos = end;
            return Ok((Tok::Num { value, integer }, start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lex = Lexer { src, pos: 0 };
        let (tok, at) = lex.next()?;
        Ok(Parser { lex, tok, at })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match &self.tok {
            Tok::Num { .. } => "number".to_string(),
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        ParseError::Syntax {
            offset: self.at,
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump()?;
        let mut negative = false;
        if self.tok == Tok::Op('-') {
            negative = true;
            self.bump()?;
        }
        let at = self.at;
        match self.tok {
            Tok::Num { value, integer: true } if value <= i32::MAX as f64 => {
                self.bump()?;
                let n = value as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            Tok::Num { .. } | Tok::Ident(_) | Tok::Op('(') => {
                Err(ParseError::NonIntegerExponent { offset: at })
            }
            _ => Err(self.unexpected("integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.at;
        match self.tok.clone() {
            Tok::Num { value, .. } => {
                self.bump()?;
                Ok(Expr::Const(value))
            }
            Tok::Op('(') => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::Op(')') {
                    return Err(self.unexpected("`)`"));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if name == "pi" {
                    return Ok(Expr::Const(PI));
                }
                if name == "s" {
                    return Ok(Expr::Var);
                }
                if let Some(sym) = Symbol::from_name(&name) {
                    return Ok(Expr::Sym(sym));
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { offset: at, name });
                };
                if self.tok != Tok::Op('(') {
                    return Err(self.unexpected("`(` after function name"));
                }
                self.bump()?;
                let arg = self.expr()?;
                if self.tok != Tok::Op(')') {
                    return Err(self.unexpected("`)`"));
                }
                self.bump()?;
                Ok(Expr::Func(func, Box::new(arg)))
            }
            _ => Err(self.unexpected("a number, `s`, a function call or `(`")),
        }
    }
}

/// Parses an expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Printing

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) if *c == PI => write!(f, "pi"),
            Expr::Const(c) if *c < 0.0 => write!(f, "-{:?}", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => write!(f, "s"),
            Expr::Sym(sym) => write!(f, "{}", sym.name()),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                inner.write_prec(f, 3)
            }
            Expr::Func(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Pow(base, n) => {
                base.write_prec(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Bin(op, lhs, rhs) => {
                let (p, sym) = match op {
                    BinOp::Add => (1, " + "),
                    BinOp::Sub => (1, " - "),
                    BinOp::Mul => (2, "*"),
                    BinOp::Div => (2, "/"),
                };
                lhs.write_prec(f, p)?;
                write!(f, "{sym}")?;
                rhs.write_prec(f, p + 1)
            }
        }
    }

    pub fn mentions(&self, symbol: Symbol) -> bool {
        match self {
            Expr::Sym(s) => *s == symbol,
            Expr::Const(_) | Expr::Var => false,
            Expr::Neg(e) | Expr::Func(_, e) | Expr::Pow(e, _) => e.mentions(symbol),
            Expr::Bin(_, a, b) => a.mentions(symbol) || b.mentions(symbol),
        }
    }

    pub fn mentions_any_symbol(&self) -> bool {
        [Symbol::Kappa, Symbol::Tau, Symbol::Speed, Symbol::Sigma]
            .into_iter()
            .any(|s| self.mentions(s))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Evaluates `e` and its first `order` derivatives at `s0`.
///
/// Quotients whose denominator has a zero within [`REMOVABLE_WINDOW`] of
/// `s0` are expanded at that zero with leading-zero cancellation and then
/// re-expanded at `s0`, so removable singularities evaluate smoothly both at
/// and near the zero.
pub fn eval_jet(e: &Expr, s0: f64, order: usize, env: &dyn Resolver) -> Result<Jet, EvalError> {
    let j = eval_node(e, s0, order, env)?;
    Ok(j.truncate(order).check_finite()?)
}

/// Plain value of `e` at `s0`.
pub fn eval(e: &Expr, s0: f64, env: &dyn Resolver) -> Result<f64, EvalError> {
    Ok(eval_jet(e, s0, 0, env)?.value())
}

fn eval_node(e: &Expr, s0: f64, order: usize, env: &dyn Resolver) -> Result<Jet, EvalError> {
    Ok(match e {
        Expr::Const(c) => Jet::constant(s0, *c, order),
        Expr::Var => Jet::variable(s0, order),
        Expr::Sym(sym) => env.resolve(*sym, s0, order)?.truncate(order),
        Expr::Neg(a) => -eval_node(a, s0, order, env)?,
        Expr::Func(func, a) => {
            let a = eval_node(a, s0, order, env)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => a.sqrt()?,
                Func::Atan => a.atan(),
            }
        }
        Expr::Pow(a, n) => {
            if *n < 0 {
                return divide(&Expr::Const(1.0), a, s0, order, env, *n);
            }
            eval_node(a, s0, order, env)?.powi(*n)?
        }
        Expr::Bin(op, a, b) => match op {
            BinOp::Add => eval_node(a, s0, order, env)? + eval_node(b, s0, order, env)?,
            BinOp::Sub => eval_node(a, s0, order, env)? - eval_node(b, s0, order, env)?,
            BinOp::Mul => eval_node(a, s0, order, env)? * eval_node(b, s0, order, env)?,
            BinOp::Div => return divide(a, b, s0, order, env, 1),
        },
    }
    .check_finite()?)
}

/// `num / den^power` with removable-zero handling (`power` is 1 for plain
/// division, or the magnitude of a negative exponent).
fn divide(
    num: &Expr,
    den: &Expr,
    s0: f64,
    order: usize,
    env: &dyn Resolver,
    power: i32,
) -> Result<Jet, EvalError> {
    let power = power.unsigned_abs() as i32;
    let den_pow = |at: f64, k: usize| -> Result<Jet, EvalError> {
        Ok(eval_node(den, at, k, env)?.powi(power)?)
    };
    let base = eval_node(den, s0, order.max(2), env)?;
    let d = base.truncate(order).powi(power)?;
    let root = match nearby_root(den, &base, s0, env) {
        Some(r) => r,
        None => return Ok(eval_node(num, s0, order, env)?.checked_div(&d)?),
    };
    let wide = order + REMOVABLE_EXTRA_ORDERS;
    let n_r = eval_node(num, root, wide, env)?;
    let d_r = den_pow(root, wide)?;
    match n_r.checked_div(&d_r) {
        Ok(q) => {
            if root == s0 {
                Ok(q.truncate(order))
            } else {
                Ok(q.shift_to(s0, order))
            }
        }
        Err(JetError::Pole { .. }) if root != s0 => {
            Ok(eval_node(num, s0, order, env)?.checked_div(&d)?)
        }
        Err(err) => Err(err.into()),
    }
}

/// Locates a real zero of `den` within [`REMOVABLE_WINDOW`] of `s0`, if one
/// plausibly exists, using Newton's method on `f / f'` (quadratically
/// convergent for zeros of any multiplicity).
fn nearby_root(den: &Expr, d: &Jet, s0: f64, env: &dyn Resolver) -> Option<f64> {
    if d.zero_order() > 0 {
        return Some(s0);
    }
    let f0 = d.value().abs();
    let mut fact = 1.0;
    let mut h_est = f64::INFINITY;
    for k in 1..=d.order().min(3) {
        fact *= k as f64;
        let ck = d.deriv(k).abs() / fact;
        if ck > 0.0 {
            h_est = h_est.min((f0 / ck).powf(1.0 / k as f64));
        }
    }
    if !(h_est < REMOVABLE_WINDOW) {
        return None;
    }
    let mut s = s0;
    for _ in 0..100 {
        let j = eval_node(den, s, 2, env).ok()?;
        if j.zero_order() > 0 {
            return settle(den, s, env);
        }
        let (f, f1, f2) = (j.value(), j.deriv(1), j.deriv(2));
        let denom = f1 * f1 - f * f2;
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        let step = f * f1 / denom;
        let next = s - step;
        if !next.is_finite() || (next - s0).abs() > REMOVABLE_WINDOW {
            return None;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
            return settle(den, next, env);
        }
        s = next;
    }
    None
}

/// Prefers a root on a coarse dyadic grid so repeated evaluations near the
/// same zero expand at the same point.
fn settle(den: &Expr, r: f64, env: &dyn Resolver) -> Option<f64> {
    let snapped = (r * ROOT_GRID).round() / ROOT_GRID;
    [snapped, r]
        .into_iter()
        .find(|&x| eval_node(den, x, 2, env).is_ok_and(|j| j.zero_order() > 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn c(x: f64) -> Box<Expr> {
        Box::new(Expr::Const(x))
    }

    #[test]
    fn parses_function_of_product() {
        assert_eq!(
            p("sin(2*s)"),
            Expr::Func(Func::Sin, Box::new(Expr::Bin(BinOp::Mul, c(2.0), Box::new(Expr::Var))))
        );
    }

    #[test]
    fn parses_left_associative_product() {
        let sqrt2 = Box::new(Expr::Func(Func::Sqrt, c(2.0)));
        assert_eq!(
            p("1/sqrt(2)*sin(s)"),
            Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Bin(BinOp::Div, c(1.0), sqrt2)),
                Box::new(Expr::Func(Func::Sin, Box::new(Expr::Var)))
            )
        );
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        assert_eq!(p("-s^2"), Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var), 2))));
        assert_eq!(p("2^-1"), Expr::Pow(c(2.0), -1));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse("2*^s").unwrap_err().offset(), Some(2));
        assert_eq!(parse("sin(s").unwrap_err().offset(), Some(5));
        assert!(matches!(parse("  "), Err(ParseError::Empty)));
        assert!(matches!(
            parse("s + foo"),
            Err(ParseError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            parse("s^2.5"),
            Err(ParseError::NonIntegerExponent { offset: 2 })
        ));
        assert!(matches!(parse("s $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn pi_is_full_precision() {
        assert_eq!(p("pi"), Expr::Const(PI));
    }

    #[test]
    fn display_reparses_to_same_value() {
        for src in [
            "-s^2 + 3*(s - 1)/(2 - s)",
            "(-s)^3",
            "1/sqrt(2)*sin(s)",
            "a",
            "2 - (3 - s)",
            "s/(2*s)",
            "-(-s)",
            "kappa*tau - speed/sigma",
            "0.4*s + 1e-10",
        ] {
            let Ok(e) = parse(src) else { continue };
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn removable_quotient_near_zero_is_smooth() {
        let e = p("sin(s)/s");
        let at0 = eval_jet(&e, 0.0, 4, &NoSymbols).unwrap();
        let near = eval_jet(&e, 1e-7, 4, &NoSymbols).unwrap();
        assert!((at0.value() - 1.0).abs() < 1e-15);
        assert!((at0.deriv(2) + 1.0 / 3.0).abs() < 1e-13);
        assert_eq!(at0.order(), 4);
        assert!((near.deriv(3) - at0.deriv(3)).abs() < 1e-6);
        assert!((near.deriv(4) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn genuine_pole_is_an_error_only_at_the_pole() {
        let e = p("1/s");
        assert!(eval_jet(&e, 0.0, 2, &NoSymbols).is_err());
        let j = eval_jet(&e, 0.1, 2, &NoSymbols).unwrap();
        assert!((j.value() - 10.0).abs() < 1e-12);
        assert!((j.deriv(1) + 100.0).abs() < 1e-9);
    }

    #[test]
    fn unresolved_symbol() {
        assert_eq!(
            eval(&p("kappa"), 0.0, &NoSymbols),
            Err(EvalError::UnresolvedSymbol(Symbol::Kappa))
        );
    }
}
