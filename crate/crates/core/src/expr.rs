//! A small infix expression language for authoring models and possibility
//! predicates without code changes.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! or      := and ( "||" and )*
//! and     := cmp ( "&&" cmp )*
//! cmp     := sum ( ("<" | "<=" | ">" | ">=" | "==" | "!=") sum )?
//! sum     := product ( ("+" | "-") product )*
//! product := unary ( ("*" | "/") unary )*
//! unary   := ("-" | "!") unary | power
//! power   := atom ( "^" ["-"] integer )?
//! atom    := number | name | name "(" args ")" | "(" or ")"
//! ```
//!
//! Functions: `min`, `max` (two or more arguments) and `sqrt`. Comparisons
//! and logical operators evaluate to `1` or `0`; a predicate holds when its
//! value is nonzero.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    fn apply<T: Scalar>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    Var(String),
    Neg(Box<Expr<T>>),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Sub(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    Pow(Box<Expr<T>>, i32),
    Min(Box<Expr<T>>, Box<Expr<T>>),
    Max(Box<Expr<T>>, Box<Expr<T>>),
    Sqrt(Box<Expr<T>>),
    Cmp(CmpOp, Box<Expr<T>>, Box<Expr<T>>),
    And(Box<Expr<T>>, Box<Expr<T>>),
    Or(Box<Expr<T>>, Box<Expr<T>>),
    Not(Box<Expr<T>>),
}

/// Value and one directional derivative, propagated together.
#[derive(Debug, Clone, Copy)]
struct Dual<T> {
    v: T,
    d: T,
}

fn truth<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> Expr<T> {
    pub fn parse(source: &str) -> Result<Self> {
        Parser::new(source)?.parse_all()
    }

    /// Feature names in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Not(a) => a.collect_vars(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b)
            | Expr::Cmp(_, a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn eval<F>(&self, lookup: &F) -> Result<T>
    where
        F: Fn(&str) -> Result<T>,
    {
        Ok(self.eval_dual(lookup, None)?.v)
    }

    /// Exact partial derivative with respect to `var` by forward-mode propagation.
    pub fn partial<F>(&self, lookup: &F, var: &str) -> Result<T>
    where
        F: Fn(&str) -> Result<T>,
    {
        let d = self.eval_dual(lookup, Some(var))?.d;
        if !d.is_finite() {
            return Err(Error::Domain(format!("derivative with respect to `{var}` is not finite")));
        }
        Ok(d)
    }

    fn eval_dual<F>(&self, lookup: &F, var: Option<&str>) -> Result<Dual<T>>
    where
        F: Fn(&str) -> Result<T>,
    {
        let zero = T::zero();
        let two = T::lit(2.0);
        let flat = |b: bool| Dual { v: truth(b), d: zero };
        Ok(match self {
            Expr::Const(c) => Dual { v: *c, d: zero },
            Expr::Var(n) => Dual { v: lookup(n)?, d: truth(var == Some(n.as_str())) },
            Expr::Neg(a) => {
                let a = a.eval_dual(lookup, var)?;
                Dual { v: -a.v, d: -a.d }
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                Dual { v: a.v + b.v, d: a.d + b.d }
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                Dual { v: a.v - b.v, d: a.d - b.d }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                Dual { v: a.v * b.v, d: a.d * b.v + a.v * b.d }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                if b.v == zero {
                    return Err(Error::Domain(format!("division by zero in `{self}`")));
                }
                Dual { v: a.v / b.v, d: (a.d * b.v - a.v * b.d) / (b.v * b.v) }
            }
            Expr::Pow(a, n) => {
                let a = a.eval_dual(lookup, var)?;
                if *n < 0 && a.v == zero {
                    return Err(Error::Domain(format!("zero raised to negative power in `{self}`")));
                }
                let d = if *n == 0 { zero } else { T::lit(f64::from(*n)) * a.v.powi(n - 1) * a.d };
                Dual { v: a.v.powi(*n), d }
            }
            Expr::Min(a, b) | Expr::Max(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                let take_a = if matches!(self, Expr::Min(..)) { a.v < b.v } else { a.v > b.v };
                if a.v == b.v {
                    // kink: symmetric one-sided average
                    Dual { v: a.v, d: (a.d + b.d) / two }
                } else if take_a {
                    a
                } else {
                    b
                }
            }
            Expr::Sqrt(a) => {
                let a = a.eval_dual(lookup, var)?;
                if a.v < zero {
                    return Err(Error::Domain(format!("sqrt of negative value {} in `{self}`", a.v)));
                }
                let r = a.v.sqrt();
                let d = if a.d == zero { zero } else { a.d / (two * r) };
                Dual { v: r, d }
            }
            Expr::Cmp(op, a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                flat(op.apply(a.v, b.v))
            }
            Expr::And(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                flat(a.v != zero && b.v != zero)
            }
            Expr::Or(a, b) => {
                let (a, b) = (a.eval_dual(lookup, var)?, b.eval_dual(lookup, var)?);
                flat(a.v != zero || b.v != zero)
            }
            Expr::Not(a) => flat(a.eval_dual(lookup, var)?.v == zero),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Cmp(..) => 3,
            Expr::Add(..) | Expr::Sub(..) => 4,
            Expr::Mul(..) | Expr::Div(..) => 5,
            Expr::Neg(..) | Expr::Not(..) => 6,
            Expr::Pow(..) => 7,
            Expr::Const(c) if *c < T::zero() => 6,
            _ => 8,
        }
    }
}

impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr<T>, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let binary = |f: &mut fmt::Formatter<'_>, a: &Expr<T>, op: &str, b: &Expr<T>| -> fmt::Result {
            child(f, a, p)?;
            write!(f, " {op} ")?;
            child(f, b, p + 1)
        };
        match self {
            Expr::Const(c) => write!(f, "{}", c.as_f64()),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, 7)
            }
            Expr::Not(a) => {
                f.write_str("!")?;
                child(f, a, 7)
            }
            Expr::Add(a, b) => binary(f, a, "+", b),
            Expr::Sub(a, b) => binary(f, a, "-", b),
            Expr::Mul(a, b) => binary(f, a, "*", b),
            Expr::Div(a, b) => binary(f, a, "/", b),
            Expr::Cmp(op, a, b) => binary(f, a, op.symbol(), b),
            Expr::And(a, b) => binary(f, a, "&&", b),
            Expr::Or(a, b) => binary(f, a, "||", b),
            Expr::Pow(a, n) => {
                child(f, a, 8)?;
                write!(f, "^{n}")
            }
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

const OPERATORS: [&str; 18] =
    ["<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "^", "(", ")", ",", "<", ">", "!", "="];

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Parse { position: start, message: format!("bad number `{text}`") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let op = OPERATORS
                .iter()
                .find(|op| src[i..].starts_with(**op))
                .ok_or_else(|| Error::Parse { position: i, message: format!("unexpected character `{c}`") })?;
            if *op == "=" {
                return Err(Error::Parse { position: i, message: "use `==` for equality".into() });
            }
            out.push((i, Tok::Op(op)));
            i += op.len();
        }
    }
    Ok(out)
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Self { toks: tokenize(src)?, pos: 0, end: src.len() })
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn error<R>(&self, message: impl Into<String>) -> Result<R> {
        Err(Error::Parse { position: self.position(), message: message.into() })
    }

    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Op(o))) => Some(o),
            _ => None,
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            self.error(format!("expected `{op}`"))
        }
    }

    fn parse_all<T: Scalar>(mut self) -> Result<Expr<T>> {
        if self.toks.is_empty() {
            return self.error("empty expression");
        }
        let e = self.or()?;
        if self.pos != self.toks.len() {
            return self.error("unexpected trailing input");
        }
        Ok(e)
    }

    fn or<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut e = self.and()?;
        while self.eat("||") {
            e = Expr::Or(Box::new(e), Box::new(self.and()?));
        }
        Ok(e)
    }

    fn and<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut e = self.cmp()?;
        while self.eat("&&") {
            e = Expr::And(Box::new(e), Box::new(self.cmp()?));
        }
        Ok(e)
    }

    fn cmp<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let e = self.sum()?;
        let op = match self.peek_op() {
            Some("<") => CmpOp::Lt,
            Some("<=") => CmpOp::Le,
            Some(">") => CmpOp::Gt,
            Some(">=") => CmpOp::Ge,
            Some("==") => CmpOp::Eq,
            Some("!=") => CmpOp::Ne,
            _ => return Ok(e),
        };
        self.pos += 1;
        Ok(Expr::Cmp(op, Box::new(e), Box::new(self.sum()?)))
    }

    fn sum<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut e = self.product()?;
        loop {
            if self.eat("+") {
                e = Expr::Add(Box::new(e), Box::new(self.product()?));
            } else if self.eat("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.product()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn product<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut e = self.unary()?;
        loop {
            if self.eat("*") {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat("/") {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary<T: Scalar>(&mut self) -> Result<Expr<T>> {
        if self.eat("-") {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat("!") {
            Ok(Expr::Not(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let base = self.atom()?;
        if !self.eat("^") {
            return Ok(base);
        }
        let negative = self.eat("-");
        match self.toks.get(self.pos) {
            Some((_, Tok::Num(n))) if n.fract() == 0.0 && n.abs() <= f64::from(i32::MAX) => {
                let n = *n as i32;
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            _ => self.error("exponent must be an integer literal"),
        }
    }

    fn atom<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return self.error("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(T::lit(v)))
            }
            Tok::Op("(") => {
                self.pos += 1;
                let e = self.or()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if !self.eat("(") {
                    return Ok(Expr::Var(name));
                }
                let mut args = vec![self.or()?];
                while self.eat(",") {
                    args.push(self.or()?);
                }
                self.expect(")")?;
                self.call(&name, args)
            }
            Tok::Op(o) => self.error(format!("unexpected `{o}`")),
        }
    }

    fn call<T: Scalar>(&self, name: &str, args: Vec<Expr<T>>) -> Result<Expr<T>> {
        match name {
            "sqrt" if args.len() == 1 => Ok(Expr::Sqrt(Box::new(args.into_iter().next().unwrap()))),
            "min" | "max" if args.len() >= 2 => {
                let mut it = args.into_iter();
                let first = it.next().unwrap();
                Ok(it.fold(first, |acc, e| {
                    if name == "min" {
                        Expr::Min(Box::new(acc), Box::new(e))
                    } else {
                        Expr::Max(Box::new(acc), Box::new(e))
                    }
                }))
            }
            "sqrt" | "min" | "max" => self.error(format!("wrong number of arguments to `{name}`")),
            _ => self.error(format!("unknown function `{name}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at<'a>(vals: &'a [(&'a str, f64)]) -> impl Fn(&str) -> Result<f64> + 'a {
        move |n: &str| {
            vals.iter().find(|(k, _)| *k == n).map(|(_, v)| *v).ok_or_else(|| Error::MissingFeature(n.into()))
        }
    }

    fn eval(src: &str, vals: &[(&str, f64)]) -> Result<f64> {
        Expr::<f64>::parse(src)?.eval(&at(vals))
    }

    #[test]
    fn paper_functions_evaluate() {
        assert_eq!(eval("min(x1, x2)", &[("x1", 5.0), ("x2", 1.0)]).unwrap(), 1.0);
        assert_eq!(eval("(x1 + x2)^3", &[("x1", 5.0), ("x2", 1.0)]).unwrap(), 216.0);
        assert_eq!(eval("100*x + y", &[("x", 1.0), ("y", 1.0)]).unwrap(), 101.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2 + 3 * 4", &[]).unwrap(), 14.0);
        assert_eq!(eval("-2^2", &[]).unwrap(), -4.0);
        assert_eq!(eval("2^-1", &[]).unwrap(), 0.5);
        assert_eq!(eval("8 / 4 / 2", &[]).unwrap(), 1.0);
        assert_eq!(eval("10 - 3 - 2", &[]).unwrap(), 5.0);
        assert_eq!(eval("1 < 2 && !(3 == 4) || 0", &[]).unwrap(), 1.0);
        assert_eq!(eval("min(3, 1, 2) + max(1, 5, 2)", &[]).unwrap(), 6.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(eval("1 / (x - x)", &[("x", 2.0)]), Err(Error::Domain(_))));
        assert!(matches!(eval("sqrt(x)", &[("x", -1.0)]), Err(Error::Domain(_))));
        assert!(matches!(eval("y", &[]), Err(Error::MissingFeature(n)) if n == "y"));
    }

    #[test]
    fn parse_errors_report_position() {
        assert!(matches!(Expr::<f64>::parse("x ^ 1.5"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::<f64>::parse("x +"), Err(Error::Parse { position: 3, .. })));
        assert!(Expr::<f64>::parse("foo(x)").is_err());
        assert!(Expr::<f64>::parse("x = 1").is_err());
        assert!(Expr::<f64>::parse("").is_err());
        assert!(Expr::<f64>::parse("(x").is_err());
    }

    #[test]
    fn analytic_partials() {
        let cube = Expr::<f64>::parse("(x1 + x2)^3").unwrap();
        let p = at(&[("x1", 5.0), ("x2", 1.0)]);
        assert_eq!(cube.partial(&p, "x1").unwrap(), 108.0);
        let min = Expr::<f64>::parse("min(x1, x2)").unwrap();
        assert_eq!(min.partial(&p, "x1").unwrap(), 0.0);
        assert_eq!(min.partial(&p, "x2").unwrap(), 1.0);
        let q = Expr::<f64>::parse("x1 / x2 + sqrt(x1)").unwrap();
        let got = q.partial(&at(&[("x1", 4.0), ("x2", 2.0)]), "x1").unwrap();
        assert!((got - (0.5 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "(x1 + x2)^3",
            "-x^2 + min(a, b) * (c - d)",
            "x1 - (x2 - x3)",
            "a / (b * c)",
            "!(x1 == 0 && x2 == 1)",
            "-2 * x",
            "(-2)^2",
        ] {
            let e = Expr::<f64>::parse(src).unwrap();
            let again = Expr::<f64>::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn variables_in_first_appearance_order() {
        let e = Expr::<f64>::parse("z * a + z - b").unwrap();
        assert_eq!(e.variables(), vec!["z", "a", "b"]);
    }
}
