//! Curve expression language.
//!
//! A curve is written as a bracketed list of coordinate expressions in the
//! single variable `t`:
//!
//! ```text
//! curve   := "[" expr ("," expr)+ "]"
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?          (right-associative, constant exponent)
//! atom    := number | "t" | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "exp" | "log" | "sqrt"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! Whitespace is insignificant. There is no implicit multiplication, so
//! `2t` is rejected and must be written `2*t`.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::jet::{Elementary, Jet, JetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }

    fn elementary(self) -> Elementary {
        match self {
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Exp => Elementary::Exp,
            Func::Log => Elementary::Log,
            Func::Sqrt => Elementary::Sqrt,
        }
    }
}

/// Expression tree for one coordinate function.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant (already folded) exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates the expression with `t` bound to `input`. Passing
    /// `Jet::variable(t0, K)` yields the order-`K` expansion at `t0`; any
    /// other jet evaluates the composition with that series.
    pub fn eval_jet(&self, input: &Jet) -> Result<Jet, JetError> {
        match self {
            Expr::Num(v) => Ok(Jet::constant(*v, input.order())),
            Expr::Var => Ok(input.clone()),
            Expr::Neg(inner) => Ok(inner.eval_jet(input)?.neg()),
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_jet(input)?;
                let b = rhs.eval_jet(input)?;
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b),
                }
            }
            Expr::Pow(base, e) => base.eval_jet(input)?.powf(*e),
            Expr::Call(f, arg) => arg.eval_jet(input)?.apply(f.elementary()),
        }
    }

    /// Plain floating-point evaluation at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Neg(inner) => -inner.eval(t),
            Expr::Binary(op, lhs, rhs) => {
                let (a, b) = (lhs.eval(t), rhs.eval(t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(base, e) => {
                let b = base.eval(t);
                if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                    b.powi(*e as i32)
                } else {
                    b.powf(*e)
                }
            }
            Expr::Call(f, arg) => f.eval(arg.eval(t)),
        }
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(inner) | Expr::Pow(inner, _) | Expr::Call(_, inner) => inner.contains_var(),
            Expr::Binary(_, lhs, rhs) => lhs.contains_var() || rhs.contains_var(),
        }
    }

    /// Replaces every occurrence of `t` with `replacement`.
    pub fn substitute(&self, replacement: &Expr) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var => replacement.clone(),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.substitute(replacement))),
            Expr::Binary(op, lhs, rhs) => Expr::Binary(
                *op,
                Box::new(lhs.substitute(replacement)),
                Box::new(rhs.substitute(replacement)),
            ),
            Expr::Pow(base, e) => Expr::Pow(Box::new(base.substitute(replacement)), *e),
            Expr::Call(f, arg) => Expr::Call(*f, Box::new(arg.substitute(replacement))),
        }
    }

    // 1: + -, 2: * /, 3: unary minus, 4: ^, 5: atoms
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(_, _) => 4,
            Expr::Num(_) | Expr::Var | Expr::Call(_, _) => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => f.write_str("t"),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.write_child(f, inner.precedence() < 3)
            }
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                lhs.write_child(f, lhs.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                rhs.write_child(f, rhs.precedence() <= p)
            }
            Expr::Pow(base, e) => {
                base.write_child(f, base.precedence() < 5)?;
                if *e < 0.0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// One parsed coordinate function together with its location in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveExpr {
    pub ast: Expr,
    pub span: Range<usize>,
}

/// A parsed curve `t -> (x_1(t), ..., x_n(t))` plus its evaluation domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    components: Vec<CurveExpr>,
    t_min: f64,
    t_max: f64,
    pub label: Option<String>,
}

impl CurveSpec {
    /// Builds a spec from already-constructed expressions over the whole real line.
    pub fn from_exprs(exprs: Vec<Expr>) -> Result<Self, DslError> {
        if exprs.len() < 2 {
            return Err(DslError::Arity {
                components: exprs.len(),
            });
        }
        Ok(CurveSpec {
            components: exprs
                .into_iter()
                .map(|ast| CurveExpr { ast, span: 0..0 })
                .collect(),
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
            label: None,
        })
    }

    /// Restricts the evaluation domain to `[t_min, t_max]`.
    pub fn with_domain(mut self, t_min: f64, t_max: f64) -> Result<Self, DslError> {
        if t_min.is_nan() || t_max.is_nan() || t_min >= t_max {
            return Err(DslError::InvalidDomain { t_min, t_max });
        }
        self.t_min = t_min;
        self.t_max = t_max;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[CurveExpr] {
        &self.components
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    /// Point on the curve at `t`.
    pub fn point(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.ast.eval(t)).collect()
    }

    /// Composes every component with `reparam` (an expression in `t`).
    /// The domain is reset to the whole line.
    pub fn reparametrized(&self, reparam: &Expr) -> CurveSpec {
        CurveSpec {
            components: self
                .components
                .iter()
                .map(|c| CurveExpr {
                    ast: c.ast.substitute(reparam),
                    span: 0..0,
                })
                .collect(),
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
            label: self.label.clone(),
        }
    }
}

impl fmt::Display for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", c.ast)?;
        }
        f.write_str("]")
    }
}

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    /// Renders the error with the offending line and a caret under `position`.
    pub fn render(&self, input: &str) -> String {
        let pos = self.position.min(input.len());
        let line_start = input[..pos].rfind('\n').map_or(0, |i| i + 1);
        let line_end = input[pos..].find('\n').map_or(input.len(), |i| pos + i);
        let column = input[line_start..pos].chars().count();
        format!(
            "{self}\n  {}\n  {}^",
            &input[line_start..line_end],
            " ".repeat(column)
        )
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: expected ", self.position)?;
        match self.expected.as_slice() {
            [one] => f.write_str(one)?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("a curve needs at least 2 components, found {components}")]
    Arity { components: usize },
    #[error("invalid domain [{t_min}, {t_max}]")]
    InvalidDomain { t_min: f64, t_max: f64 },
}

/// Failure while expanding a component.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("t = {t} lies outside the domain [{t_min}, {t_max}]")]
    OutOfDomain { t: f64, t_min: f64, t_max: f64 },
    #[error("component {component} at t = {t}: {source}")]
    Component {
        component: usize,
        t: f64,
        source: JetError,
    },
}

/// Order-`order` Taylor expansions of every component at `t0`.
pub fn eval_components(spec: &CurveSpec, t0: f64, order: usize) -> Result<Vec<Jet>, EvalError> {
    if !spec.contains(t0) {
        return Err(EvalError::OutOfDomain {
            t: t0,
            t_min: spec.t_min,
            t_max: spec.t_max,
        });
    }
    eval_components_at(spec, &Jet::variable(t0, order))
}

/// Evaluates every component with `t` replaced by an arbitrary series.
/// No domain check is applied.
pub fn eval_components_at(spec: &CurveSpec, input: &Jet) -> Result<Vec<Jet>, EvalError> {
    spec.components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.ast
                .eval_jet(input)
                .map_err(|source| EvalError::Component {
                    component: i + 1,
                    t: input.value(),
                    source,
                })
        })
        .collect()
}

/// Parses a bracketed curve such as `"[cos(t), sin(t), 0.5*t]"`.
pub fn parse_curve(input: &str) -> Result<CurveSpec, DslError> {
    let tokens = lex(input)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        input_len: input.len(),
    };
    let components = parser.curve()?;
    if components.len() < 2 {
        return Err(DslError::Arity {
            components: components.len(),
        });
    }
    Ok(CurveSpec {
        components,
        t_min: f64::NEG_INFINITY,
        t_max: f64::INFINITY,
        label: None,
    })
}

/// Parses a single expression in `t` (no brackets).
pub fn parse_expr(input: &str) -> Result<Expr, ParseError> {
    let tokens = lex(input)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        input_len: input.len(),
    };
    let expr = parser.expr()?;
    parser.expect_end()?;
    Ok(expr)
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
    LBracket,
    RBracket,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    start: usize,
    end: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Spanned {
                tok,
                start,
                end: i + 1,
            });
            i += 1;
            continue;
        }
        if b.is_ascii_digit() || b == b'.' {
            i = scan_number(bytes, i).ok_or_else(|| ParseError {
                position: start,
                expected: vec!["number".into()],
                found: "`.`".into(),
            })?;
            let text = &input[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                position: start,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    position: start,
                    expected: vec!["finite number".into()],
                    found: format!("`{text}`"),
                });
            }
            tokens.push(Spanned {
                tok: Tok::Num(value),
                start,
                end: i,
            });
            continue;
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Spanned {
                tok: Tok::Ident(input[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        let ch = input[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            position: start,
            expected: vec!["token".into()],
            found: format!("character `{ch}`"),
        });
    }
    Ok(tokens)
}

/// Returns the end offset of the numeric literal starting at `i`, or `None`
/// for a lone `.`.
fn scan_number(bytes: &[u8], mut i: usize) -> Option<usize> {
    let digits = |bytes: &[u8], mut i: usize| {
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        (i, i - start)
    };
    let (next, int_digits) = digits(bytes, i);
    i = next;
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        let (next, n) = digits(bytes, i + 1);
        i = next;
        frac_digits = n;
    }
    if int_digits == 0 && frac_digits == 0 {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let (next, n) = digits(bytes, j);
        if n > 0 {
            i = next;
        }
    }
    Some(i)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    input_len: usize,
}

const EXPR_START: [&str; 5] = ["number", "`t`", "function name", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn position(&self) -> usize {
        self.peek().map_or(self.input_len, |t| t.start)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            position: self.position(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), |t| t.tok.describe()),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error(&["operator", "end of input"])),
        }
    }

    fn curve(&mut self) -> Result<Vec<CurveExpr>, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut components = Vec::new();
        loop {
            let start = self.position();
            let ast = self.expr()?;
            let end = self.tokens[self.pos - 1].end;
            components.push(CurveExpr {
                ast,
                span: start..end,
            });
            if self.eat(&Tok::Comma) {
                continue;
            }
            if self.eat(&Tok::RBracket) {
                break;
            }
            return Err(self.error(&["operator", "`,`", "`]`"]));
        }
        if self.peek().is_some() {
            return Err(self.error(&["end of input"]));
        }
        Ok(components)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
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
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let exp_pos = self.position();
        let exponent = self.unary()?;
        match fold_constant(&exponent) {
            Some(e) if e.is_finite() => Ok(Expr::Pow(Box::new(base), e)),
            _ => Err(ParseError {
                position: exp_pos,
                expected: vec!["constant exponent".into()],
                found: format!("`{exponent}`"),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().map(|t| t.tok.clone()) else {
            return Err(self.error(&EXPR_START));
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "t" => {
                self.pos += 1;
                Ok(Expr::Var)
            }
            Tok::Ident(name) => match Func::from_name(&name) {
                Some(func) => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "`(`")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
                None => Err(self.error(&EXPR_START)),
            },
            _ => Err(self.error(&EXPR_START)),
        }
    }
}

fn fold_constant(expr: &Expr) -> Option<f64> {
    if expr.contains_var() {
        None
    } else {
        Some(expr.eval(0.0))
    }
}
