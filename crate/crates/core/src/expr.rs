//! Scalar expressions over chart coordinates, parsed by recursive descent
//! and evaluated on jets so that derivatives are exact.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer)*
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt
//! ```

use std::fmt;

use thiserror::Error;

use crate::chart_core::{Chart, Field, FieldKind, Jet};
use crate::error::{GeometryError, Result};

pub const MAX_DEPTH: usize = 64;

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
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { message: String, offset: usize },
    #[error("expression nested deeper than {MAX_DEPTH} at byte {offset}")]
    DepthOverflow { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Syntax { offset, .. }
            | ParseError::DepthOverflow { offset } => *offset,
        }
    }
}

type Parsed = std::result::Result<(Expr, usize), ParseError>;

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    nesting: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn syntax(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            message: message.into(),
            offset,
        }
    }

    fn unexpected(&mut self, wanted: &str) -> ParseError {
        let offset = {
            self.skip_ws();
            self.pos
        };
        match self.src[offset..].chars().next() {
            Some(c) => self.syntax(offset, format!("expected {wanted}, found `{c}`")),
            None => self.syntax(offset, format!("expected {wanted}, found end of input")),
        }
    }

    fn node(&self, e: Expr, depth: usize, offset: usize) -> Parsed {
        if depth > MAX_DEPTH {
            return Err(ParseError::DepthOverflow { offset });
        }
        Ok((e, depth))
    }

    fn expr(&mut self) -> Parsed {
        let (mut lhs, mut depth) = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let (rhs, rd) = self.term()?;
            let e = if op == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
            (lhs, depth) = self.node(e, 1 + depth.max(rd), at)?;
        }
        Ok((lhs, depth))
    }

    fn term(&mut self) -> Parsed {
        let (mut lhs, mut depth) = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let (rhs, rd) = self.unary()?;
            let e = if op == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
            (lhs, depth) = self.node(e, 1 + depth.max(rd), at)?;
        }
        Ok((lhs, depth))
    }

    fn unary(&mut self) -> Parsed {
        if self.peek() == Some(b'-') {
            let at = self.pos;
            self.pos += 1;
            // recursion on a run of minus signs is bounded by the depth check
            let (inner, d) = self.unary()?;
            return self.node(Expr::Neg(Box::new(inner)), d + 1, at);
        }
        self.power()
    }

    fn power(&mut self) -> Parsed {
        let (mut base, mut depth) = self.atom()?;
        while self.peek() == Some(b'^') {
            let at = self.pos;
            self.pos += 1;
            let exponent = self.integer()?;
            (base, depth) = self.node(Expr::Pow(Box::new(base), exponent), depth + 1, at)?;
        }
        Ok((base, depth))
    }

    fn integer(&mut self) -> std::result::Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = digits;
            return Err(self.unexpected("an integer exponent"));
        }
        if matches!(self.bytes.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return Err(self.syntax(self.pos, "exponents must be integers"));
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.syntax(start, "exponent out of range"))
    }

    fn number(&mut self) -> Parsed {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(self.syntax(start, "malformed number"));
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.syntax(mark, "malformed exponent in number"));
            }
        }
        let value: f64 = self.src[start..self.pos]
            .parse()
            .map_err(|_| self.syntax(start, "malformed number"))?;
        if !value.is_finite() {
            return Err(self.syntax(start, "number out of range"));
        }
        Ok((Expr::Num(value), 1))
    }

    fn atom(&mut self) -> Parsed {
        match self.peek() {
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                // parentheses add no node but bound the recursion
                self.nesting += 1;
                if self.nesting > MAX_DEPTH {
                    return Err(ParseError::DepthOverflow { offset: open });
                }
                let (inner, d) = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.unexpected("`)`"));
                }
                self.pos += 1;
                self.nesting -= 1;
                Ok((inner, d))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if let Some(func) = Func::from_name(name) {
                    if self.peek() == Some(b'(') {
                        self.pos += 1;
                        let (arg, d) = self.expr()?;
                        if self.peek() != Some(b')') {
                            return Err(self.unexpected("`)`"));
                        }
                        self.pos += 1;
                        return self.node(Expr::Call(func, Box::new(arg)), d + 1, start);
                    }
                }
                if self.names.iter().any(|n| n == name) {
                    Ok((Expr::Var(name.to_string()), 1))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    })
                }
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }
}

/// Parses `text` with the given coordinate names in scope.
pub fn parse(text: &str, names: &[String]) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        nesting: 0,
        names,
    };
    if p.peek().is_none() {
        return Err(p.syntax(p.pos, "empty expression"));
    }
    let (e, _) = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}")?,
            Expr::Var(n) => f.write_str(n)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_at(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                })?;
                b.write_at(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) {
                    "*"
                } else {
                    "/"
                })?;
                b.write_at(f, 3)?;
            }
            Expr::Pow(a, k) => {
                a.write_at(f, 4)?;
                write!(f, "^{k}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    /// Identifiers used, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(n) = e {
                if !out.contains(&n.as_str()) {
                    out.push(n.as_str());
                }
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Evaluates on coordinate jets; `index` maps identifiers to coordinates.
    fn eval(&self, x: &[Jet], index: &dyn Fn(&str) -> usize) -> Result<Jet> {
        let domain = |function: &'static str, argument: f64| GeometryError::Domain {
            function,
            argument,
            point: x.iter().map(Jet::value).collect(),
        };
        Ok(match self {
            Expr::Num(v) => x[0].lift(*v),
            Expr::Var(n) => x[index(n)].clone(),
            Expr::Neg(a) => -a.eval(x, index)?,
            Expr::Add(a, b) => a.eval(x, index)? + b.eval(x, index)?,
            Expr::Sub(a, b) => a.eval(x, index)? - b.eval(x, index)?,
            Expr::Mul(a, b) => a.eval(x, index)? * b.eval(x, index)?,
            Expr::Div(a, b) => {
                let d = b.eval(x, index)?;
                if d.value() == 0.0 {
                    return Err(domain("division", 0.0));
                }
                a.eval(x, index)? / d
            }
            Expr::Pow(a, k) => {
                let base = a.eval(x, index)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(domain("negative power", 0.0));
                }
                base.powi(*k)
            }
            Expr::Call(func, a) => {
                let v = a.eval(x, index)?;
                let arg = v.value();
                match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log if arg > 0.0 => v.ln(),
                    Func::Sqrt if arg > 0.0 || (arg == 0.0 && v.order() == 0) => v.sqrt(),
                    Func::Log | Func::Sqrt => return Err(domain(func.name(), arg)),
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

/// Scalar field of `e` on `chart`; every identifier must be a chart coordinate.
pub fn to_field(e: &Expr, chart: &Chart) -> Result<Field> {
    let names = chart.names().to_vec();
    for id in e.identifiers() {
        if !names.iter().any(|n| n == id) {
            return Err(GeometryError::InvalidParameter(format!(
                "identifier `{id}` is not a coordinate of the chart ({})",
                names.join(", ")
            )));
        }
    }
    let e = e.clone();
    Ok(Field::new(
        FieldKind::Scalar,
        chart.dim(),
        move |x: &[Jet]| {
            let index = |n: &str| {
                names
                    .iter()
                    .position(|m| m == n)
                    .expect("validated identifier")
            };
            Ok(vec![e.eval(x, &index)?])
        },
    ))
}

/// Parses `text` against the chart's coordinate names and builds the field.
pub fn parse_field(text: &str, chart: &Chart) -> std::result::Result<Field, String> {
    let e = parse(text, chart.names()).map_err(|err| err.to_string())?;
    to_field(&e, chart).map_err(|err| err.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_core::Point;
    use proptest::prelude::*;

    fn names() -> Vec<String> {
        ["x1", "y1", "z1"].iter().map(|s| s.to_string()).collect()
    }

    fn chart() -> Chart {
        Chart::new(vec![(-5.0, 5.0); 3], vec![false; 3], names()).unwrap()
    }

    #[test]
    fn grammar_examples() {
        assert!(parse("0.1*sin(x1)", &names()).is_ok());
        assert_eq!(
            parse("sin(q)", &names()),
            Err(ParseError::UnknownIdentifier {
                name: "q".into(),
                offset: 4
            })
        );
        let err = parse("1+*2", &names()).unwrap_err();
        assert!(
            matches!(err, ParseError::Syntax { offset: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3 * x1 ^ 2", &names()).unwrap();
        assert_eq!(e.to_string(), "1.0 - 2.0 - 3.0*x1^2");
        let v = parse("-x1^2", &names()).unwrap();
        assert_eq!(
            v,
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var("x1".into())), 2)))
        );
        let q = parse("8/4/2", &names()).unwrap();
        assert_eq!(q.to_string(), "8.0/4.0/2.0");
        let r = parse("8/(4/2)", &names()).unwrap();
        assert_eq!(r.to_string(), "8.0/(4.0/2.0)");
    }

    #[test]
    fn error_offsets() {
        let n = names();
        assert_eq!(parse("", &n).unwrap_err().offset(), 0);
        assert_eq!(parse("x1 +", &n).unwrap_err().offset(), 4);
        assert_eq!(parse("(x1", &n).unwrap_err().offset(), 3);
        assert_eq!(parse("x1^2.5", &n).unwrap_err().offset(), 4);
        assert_eq!(parse("x1 x1", &n).unwrap_err().offset(), 3);
        assert_eq!(parse("sin x1", &n).unwrap_err().offset(), 0);
    }

    #[test]
    fn depth_limit() {
        let n = names();
        let deep = format!("{}x1{}", "(".repeat(70), ")".repeat(70));
        assert!(matches!(
            parse(&deep, &n),
            Err(ParseError::DepthOverflow { offset: 64 })
        ));
        let shallow = format!("{}x1{}", "(".repeat(60), ")".repeat(60));
        assert_eq!(parse(&shallow, &n).unwrap(), Expr::Var("x1".into()));
        let nested = format!("{}x1{}", "sin(".repeat(70), ")".repeat(70));
        assert!(matches!(
            parse(&nested, &n),
            Err(ParseError::DepthOverflow { .. })
        ));
        let chain = vec!["x1"; 80].join("+");
        assert!(matches!(
            parse(&chain, &n),
            Err(ParseError::DepthOverflow { .. })
        ));
        let ok = vec!["x1"; 60].join("+");
        assert!(parse(&ok, &n).is_ok());
    }

    #[test]
    fn power_jets_exact() {
        let chart = Chart::cube(3, -5.0, 5.0).unwrap();
        let f = to_field(&parse("x1^2", chart.names()).unwrap(), &chart).unwrap();
        let j = f
            .jet(&Point::new(vec![3.0, 0.0, 0.0]), 3)
            .unwrap()
            .remove(0);
        assert_eq!(j.value(), 9.0);
        assert_eq!(j.derivative(&[0]), 6.0);
        assert_eq!(j.derivative(&[0, 0]), 2.0);
        assert_eq!(j.derivative(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn domain_violation_echoes_point() {
        let chart = chart();
        let f = to_field(&parse("log(x1)", chart.names()).unwrap(), &chart).unwrap();
        match f.eval(&Point::new(vec![-1.0, 0.5, 0.0])) {
            Err(GeometryError::Domain {
                function, point, ..
            }) => {
                assert_eq!(function, "log");
                assert_eq!(point, vec![-1.0, 0.5, 0.0]);
            }
            other => panic!("expected a domain error, got {other:?}"),
        }
        let g = to_field(&parse("sqrt(y1)/x1", chart.names()).unwrap(), &chart).unwrap();
        assert!(g.eval(&Point::new(vec![0.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn identifiers_must_belong_to_chart() {
        let e = parse("x1 + z1", &names()).unwrap();
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        assert!(to_field(&e, &chart).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            prop::sample::select(names()).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), -4i32..5).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
                (inner, prop::sample::select(Func::ALL.to_vec()))
                    .prop_map(|(a, f)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed, &names()).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn sum_jets_are_sums(a in arb_expr(), b in arb_expr(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
            let chart = chart();
            let pt = Point::new(vec![x, y, 0.3]);
            let (fa, fb) = (to_field(&a, &chart).unwrap(), to_field(&b, &chart).unwrap());
            let sum = Expr::Add(Box::new(a), Box::new(b));
            let fs = to_field(&sum, &chart).unwrap();
            if let (Ok(ja), Ok(jb), Ok(js)) = (fa.jet(&pt, 3), fb.jet(&pt, 3), fs.jet(&pt, 3)) {
                let direct = &ja[0] + &jb[0];
                let bits = |c: &[f64]| c.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(direct.coeffs()), bits(js[0].coeffs()));
            }
        }
    }
}
