//! Scalar-field expressions over chart coordinates.
//!
//! Every field used elsewhere in the crate (metric entries, tensor entries,
//! eigenvalue functions, candidate potentials) is a [`ScalarExpr`]. Values,
//! gradients and Hessians come from [`ScalarExpr::eval_jet2`], which runs
//! truncated second-order forward-mode differentiation over the tree.
//!
//! # Grammar
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?        exponent must be constant
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | ln | sqrt
//! ```
//!
//! Whitespace is insignificant. `^` is right-associative and binds tighter
//! than unary minus, so `-x^2` is `-(x^2)`. The identifier `pi` is the
//! constant unless the chart declares a coordinate with that name. A minus
//! sign directly in front of a numeric literal (and not followed by `^`) is
//! folded into the literal.

mod jet;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use jet::Jet2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Func(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(op, _, _) => op.precedence(),
            Node::Neg(_) => 3,
            Node::Pow(_, _) => 4,
            Node::Const(c) if *c < 0.0 => 5,
            Node::Const(_) | Node::Var(_) | Node::Func(_, _) => 5,
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Node::Const(_) => true,
            Node::Var(_) => false,
            Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => a.is_constant(),
            Node::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }
}

/// An immutable expression tree together with the coordinate names of the
/// chart it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    node: Node,
    vars: Arc<[String]>,
}

impl ScalarExpr {
    pub fn parse<S: AsRef<str>>(text: &str, chart_vars: &[S]) -> Result<Self> {
        let vars: Arc<[String]> = chart_vars.iter().map(|s| s.as_ref().to_string()).collect();
        let node = parser::parse(text, &vars)?;
        Ok(Self { node, vars })
    }

    pub fn constant<S: AsRef<str>>(value: f64, chart_vars: &[S]) -> Self {
        Self {
            node: Node::Const(value),
            vars: chart_vars.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn var<S: AsRef<str>>(index: usize, chart_vars: &[S]) -> Self {
        assert!(index < chart_vars.len(), "variable index out of range");
        Self {
            node: Node::Var(index),
            vars: chart_vars.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn from_node(node: Node, vars: Arc<[String]>) -> Result<Self> {
        if let Some(i) = node.max_var() {
            if i >= vars.len() {
                return Err(Error::UnknownVariable(format!("#{i}")));
            }
        }
        Ok(Self { node, vars })
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn is_constant(&self) -> bool {
        self.node.is_constant()
    }

    /// Same tree reinterpreted over another chart signature, mapping
    /// variables by name.
    pub fn rebind<S: AsRef<str>>(&self, chart_vars: &[S]) -> Result<Self> {
        let vars: Arc<[String]> = chart_vars.iter().map(|s| s.as_ref().to_string()).collect();
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|name| {
                vars.iter()
                    .position(|v| v == name)
                    .ok_or_else(|| Error::UnknownVariable(name.clone()))
            })
            .collect::<Result<_>>()?;
        // variables that never occur need not exist in the target chart
        fn remap(node: &Node, map: &[usize]) -> Node {
            match node {
                Node::Const(c) => Node::Const(*c),
                Node::Var(i) => Node::Var(map[*i]),
                Node::Neg(a) => Node::Neg(Box::new(remap(a, map))),
                Node::Func(f, a) => Node::Func(*f, Box::new(remap(a, map))),
                Node::Binary(op, a, b) => {
                    Node::Binary(*op, Box::new(remap(a, map)), Box::new(remap(b, map)))
                }
                Node::Pow(a, e) => Node::Pow(Box::new(remap(a, map)), *e),
            }
        }
        Ok(Self {
            node: remap(&self.node, &map),
            vars,
        })
    }

    /// Substitutes `args[i]` for variable `i`. All arguments must share one
    /// chart signature, which becomes the signature of the result.
    pub fn compose(&self, args: &[ScalarExpr]) -> Result<Self> {
        if args.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "compose expects {} arguments, got {}",
                self.dim(),
                args.len()
            )));
        }
        let vars = match args.first() {
            Some(a) => a.vars.clone(),
            None => self.vars.clone(),
        };
        if args.iter().any(|a| a.vars != vars) {
            return Err(Error::Dimension("compose arguments use different charts".into()));
        }
        fn subst(node: &Node, args: &[ScalarExpr]) -> Node {
            match node {
                Node::Const(c) => Node::Const(*c),
                Node::Var(i) => args[*i].node.clone(),
                Node::Neg(a) => Node::Neg(Box::new(subst(a, args))),
                Node::Func(f, a) => Node::Func(*f, Box::new(subst(a, args))),
                Node::Binary(op, a, b) => {
                    Node::Binary(*op, Box::new(subst(a, args)), Box::new(subst(b, args)))
                }
                Node::Pow(a, e) => Node::Pow(Box::new(subst(a, args)), *e),
            }
        }
        Ok(Self {
            node: subst(&self.node, args),
            vars,
        })
    }

    fn binary(self, op: BinOp, rhs: ScalarExpr) -> Self {
        assert_eq!(self.vars, rhs.vars, "expressions belong to different charts");
        Self {
            node: Node::Binary(op, Box::new(self.node), Box::new(rhs.node)),
            vars: self.vars,
        }
    }

    pub fn apply(self, func: Func) -> Self {
        Self {
            node: Node::Func(func, Box::new(self.node)),
            vars: self.vars,
        }
    }

    pub fn powf(self, exponent: f64) -> Self {
        Self {
            node: Node::Pow(Box::new(self.node), exponent),
            vars: self.vars,
        }
    }

    /// Plain value at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        eval_value(&self.node, p, self)
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval_jet2(&self, p: &[f64]) -> Result<Jet2> {
        self.check_point(p)?;
        eval_jet(&self.node, p, self)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn domain_error(&self, node: &Node, p: &[f64]) -> Error {
        Error::Domain {
            point: p.to_vec(),
            subexpr: Printer { node, vars: &self.vars }.to_string(),
        }
    }
}

fn eval_value(node: &Node, p: &[f64], e: &ScalarExpr) -> Result<f64> {
    let v = match node {
        Node::Const(c) => *c,
        Node::Var(i) => p[*i],
        Node::Neg(a) => -eval_value(a, p, e)?,
        Node::Func(f, a) => {
            let u = eval_value(a, p, e)?;
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Ln if u > 0.0 => u.ln(),
                Func::Sqrt if u > 0.0 => u.sqrt(),
                Func::Ln | Func::Sqrt => return Err(e.domain_error(node, p)),
            }
        }
        Node::Binary(op, a, b) => {
            let (x, y) = (eval_value(a, p, e)?, eval_value(b, p, e)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y != 0.0 => x / y,
                BinOp::Div => return Err(e.domain_error(node, p)),
            }
        }
        Node::Pow(a, c) => {
            let u = eval_value(a, p, e)?;
            pow_parts(u, *c).ok_or_else(|| e.domain_error(node, p))?.0
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(e.domain_error(node, p))
    }
}

fn eval_jet(node: &Node, p: &[f64], e: &ScalarExpr) -> Result<Jet2> {
    let n = p.len();
    let jet = match node {
        Node::Const(c) => Jet2::constant(n, *c),
        Node::Var(i) => Jet2::variable(n, *i, p[*i]),
        Node::Neg(a) => -&eval_jet(a, p, e)?,
        Node::Func(f, a) => {
            let u = eval_jet(a, p, e)?;
            let x = u.value;
            match f {
                Func::Sin => u.chain(x.sin(), x.cos(), -x.sin()),
                Func::Cos => u.chain(x.cos(), -x.sin(), -x.cos()),
                Func::Exp => {
                    let ex = x.exp();
                    u.chain(ex, ex, ex)
                }
                Func::Ln if x > 0.0 => u.chain(x.ln(), 1.0 / x, -1.0 / (x * x)),
                Func::Sqrt if x > 0.0 => {
                    let s = x.sqrt();
                    u.chain(s, 0.5 / s, -0.25 / (s * x))
                }
                Func::Ln | Func::Sqrt => return Err(e.domain_error(node, p)),
            }
        }
        Node::Binary(op, a, b) => {
            let (x, y) = (eval_jet(a, p, e)?, eval_jet(b, p, e)?);
            match op {
                BinOp::Add => &x + &y,
                BinOp::Sub => &x - &y,
                BinOp::Mul => &x * &y,
                BinOp::Div if y.value != 0.0 => &x * &y.recip(),
                BinOp::Div => return Err(e.domain_error(node, p)),
            }
        }
        Node::Pow(a, c) => {
            let u = eval_jet(a, p, e)?;
            let (v, d1, d2) = pow_parts(u.value, *c).ok_or_else(|| e.domain_error(node, p))?;
            u.chain(v, d1, d2)
        }
    };
    if jet.is_finite() {
        Ok(jet)
    } else {
        Err(e.domain_error(node, p))
    }
}

/// `u^c` with its first two derivatives in `u`, or `None` outside the
/// natural domain.
fn pow_parts(u: f64, c: f64) -> Option<(f64, f64, f64)> {
    if c == 0.0 {
        return Some((1.0, 0.0, 0.0));
    }
    let integral = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
    if integral {
        let k = c as i32;
        if u == 0.0 && k < 0 {
            return None;
        }
        let v = u.powi(k);
        let d1 = if k == 1 { 1.0 } else { c * u.powi(k - 1) };
        let d2 = match k {
            1 => 0.0,
            2 => 2.0,
            _ => c * (c - 1.0) * u.powi(k - 2),
        };
        Some((v, d1, d2))
    } else {
        if u <= 0.0 {
            return None;
        }
        Some((u.powf(c), c * u.powf(c - 1.0), c * (c - 1.0) * u.powf(c - 2.0)))
    }
}

fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

struct Printer<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl Printer<'_> {
    fn child<'b>(&'b self, node: &'b Node) -> Printer<'b> {
        Printer { node, vars: self.vars }
    }

    fn write_wrapped(&self, f: &mut fmt::Formatter<'_>, node: &Node, wrap: bool) -> fmt::Result {
        if wrap {
            write!(f, "({})", self.child(node))
        } else {
            write!(f, "{}", self.child(node))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Const(c) if *c < 0.0 => write!(f, "({})", format_number(*c)),
            Node::Const(c) => write!(f, "{}", format_number(*c)),
            Node::Var(i) => write!(f, "{}", self.vars[*i]),
            Node::Neg(a) => {
                f.write_str("-")?;
                let wrap = a.precedence() < 3 || matches!(**a, Node::Const(_));
                self.write_wrapped(f, a, wrap)
            }
            Node::Func(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
            Node::Binary(op, a, b) => {
                let prec = op.precedence();
                self.write_wrapped(f, a, a.precedence() < prec)?;
                f.write_str(op.symbol())?;
                self.write_wrapped(f, b, b.precedence() <= prec)
            }
            Node::Pow(a, c) => {
                self.write_wrapped(f, a, a.precedence() <= 4)?;
                if *c < 0.0 {
                    write!(f, "^({})", format_number(*c))
                } else {
                    write!(f, "^{}", format_number(*c))
                }
            }
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.node,
            vars: &self.vars,
        }
        .fmt(f)
    }
}

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        self.binary(BinOp::Add, rhs)
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        self.binary(BinOp::Sub, rhs)
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        self.binary(BinOp::Mul, rhs)
    }
}

impl std::ops::Div for ScalarExpr {
    type Output = ScalarExpr;
    fn div(self, rhs: ScalarExpr) -> ScalarExpr {
        self.binary(BinOp::Div, rhs)
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        Self {
            node: Node::Neg(Box::new(self.node)),
            vars: self.vars,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TXY: [&str; 3] = ["t", "x", "y"];

    fn parse(s: &str) -> ScalarExpr {
        ScalarExpr::parse(s, &TXY).unwrap()
    }

    #[test]
    fn torus_mu_parses_as_product() {
        let e = parse("0.5*sin(x)*cos(y)");
        let expected = Node::Binary(
            BinOp::Mul,
            Box::new(Node::Binary(
                BinOp::Mul,
                Box::new(Node::Const(0.5)),
                Box::new(Node::Func(Func::Sin, Box::new(Node::Var(1)))),
            )),
            Box::new(Node::Func(Func::Cos, Box::new(Node::Var(2)))),
        );
        assert_eq!(e.node(), &expected);
    }

    #[test]
    fn zero_is_constant() {
        let e = parse("0");
        assert_eq!(e.node(), &Node::Const(0.0));
        let j = e.eval_jet2(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert!(j.grad.iter().all(|g| *g == 0.0));
        assert!(j.packed_hess().iter().all(|h| *h == 0.0));
    }

    #[test]
    fn inconsistent_warp_mu_tree() {
        let e = parse("1 + y/x^2");
        let expected = Node::Binary(
            BinOp::Add,
            Box::new(Node::Const(1.0)),
            Box::new(Node::Binary(
                BinOp::Div,
                Box::new(Node::Var(2)),
                Box::new(Node::Pow(Box::new(Node::Var(1)), 2.0)),
            )),
        );
        assert_eq!(e.node(), &expected);
    }

    #[test]
    fn unknown_identifier_rejected() {
        assert_eq!(
            ScalarExpr::parse("x + z", &TXY).unwrap_err(),
            Error::UnknownVariable("z".into())
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match ScalarExpr::parse("x + * y", &TXY).unwrap_err() {
            Error::Syntax { position, .. } => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ScalarExpr::parse("", &TXY),
            Err(Error::Syntax { position: 0, .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("sin(x", &TXY),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("x^y", &TXY),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn precedence_and_unary_minus() {
        let p = [0.0, 3.0, 2.0];
        assert_eq!(parse("-x^2").eval(&p).unwrap(), -9.0);
        assert_eq!(parse("2^3^2").eval(&p).unwrap(), 512.0);
        assert_eq!(parse("x - y - 1").eval(&p).unwrap(), 0.0);
        assert_eq!(parse("x / y / 2").eval(&p).unwrap(), 0.75);
        assert_eq!(parse("2*-x").eval(&p).unwrap(), -6.0);
        assert_eq!(parse("x^-1").eval(&p).unwrap(), 1.0 / 3.0);
        assert_eq!(parse("-2^2").eval(&p).unwrap(), -4.0);
        assert!((parse("2*pi").eval(&p).unwrap() - std::f64::consts::TAU).abs() < 1e-15);
        assert_eq!(parse("1.5e1 + x").eval(&p).unwrap(), 18.0);
    }

    #[test]
    fn xy_jet_at_012() {
        let j = parse("x*y").eval_jet2(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(j.value, 2.0);
        assert_eq!(j.grad, vec![0.0, 2.0, 1.0]);
        for i in 0..3 {
            for k in 0..3 {
                let expected = if (i, k) == (1, 2) || (i, k) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(j.hess(i, k), expected);
            }
        }
    }

    #[test]
    fn torus_mu_jet_at_origin() {
        let j = parse("0.5*sin(x)*cos(y)").eval_jet2(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let err = parse("1 + y/x^2").eval_jet2(&[0.0, 0.0, 1.0]).unwrap_err();
        match err {
            Error::Domain { point, subexpr } => {
                assert_eq!(point, vec![0.0, 0.0, 1.0]);
                assert_eq!(subexpr, "y/x^2");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("ln(x)").eval(&[0.0, -1.0, 0.0]).is_err());
        assert!(parse("sqrt(x)").eval_jet2(&[0.0, 0.0, 0.0]).is_err());
        assert!(parse("x^(-2)").eval_jet2(&[0.0, 0.0, 0.0]).is_err());
        assert!(parse("x^0.5").eval_jet2(&[0.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn integer_powers_are_total_at_zero() {
        let j = parse("x^1 + y^2 + t^3").eval_jet2(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![0.0, 1.0, 0.0]);
        assert_eq!(j.hess(2, 2), 2.0);
        assert_eq!(j.hess(1, 1), 0.0);
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "0.5*sin(x)*cos(y)",
            "1 + y/x^2",
            "-x^2",
            "(-x)^2",
            "x - (y - t)",
            "x/(y/t)",
            "(x^2)^3",
            "-(2)",
            "-2",
            "(-2)^2",
            "x^(-2)",
            "exp(-(t)) * ln(x + 3) - sqrt(y*y + 1)",
            "1e-30*x + 1e300",
            "--x",
        ] {
            let e = parse(s);
            let printed = e.to_string();
            let again = ScalarExpr::parse(&printed, &TXY).unwrap();
            assert_eq!(e, again, "{s} -> {printed}");
        }
    }

    #[test]
    fn compose_substitutes_arguments() {
        let g = ScalarExpr::parse("s^2 + 1", &["s"]).unwrap();
        let inner = parse("x - 2*y");
        let composed = g.compose(&[inner]).unwrap();
        assert_eq!(composed.eval(&[0.0, 3.0, 1.0]).unwrap(), 2.0);
        assert_eq!(composed.vars(), &TXY.map(String::from));
    }

    #[test]
    fn rebind_maps_by_name() {
        let e = ScalarExpr::parse("x*y", &["x", "y"]).unwrap();
        let r = e.rebind(&TXY).unwrap();
        assert_eq!(r.eval(&[9.0, 2.0, 3.0]).unwrap(), 6.0);
        assert!(r.rebind(&["a", "b"]).is_err());
    }
}
