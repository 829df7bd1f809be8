//! Closed-form scalar expressions over chart coordinates.
//!
//! `ScalarExpr` is the single source every tensor field is built from. It is
//! an immutable tree (shared via `Arc`, so clones are cheap) with coordinate
//! leaves, real constants, arithmetic, integer powers and the four analytic
//! functions `sin`, `cos`, `exp`, `sqrt`. There is deliberately no general
//! power or logarithm node; negative integer powers cover every field in the
//! built-in catalog.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

mod parse;
pub use parse::parse_expr;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Coord(usize),
    Const(f64),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Neg(ScalarExpr),
    Pow(ScalarExpr, i32),
    Sin(ScalarExpr),
    Cos(ScalarExpr),
    Exp(ScalarExpr),
    Sqrt(ScalarExpr),
}

/// An immutable scalar expression tree.
#[derive(Clone, PartialEq)]
pub struct ScalarExpr(pub(crate) Arc<Node>);

impl ScalarExpr {
    pub fn coord(index: usize) -> Self {
        ScalarExpr(Arc::new(Node::Coord(index)))
    }

    pub fn constant(value: f64) -> Self {
        ScalarExpr(Arc::new(Node::Const(value)))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn powi(&self, exponent: i32) -> Self {
        ScalarExpr(Arc::new(Node::Pow(self.clone(), exponent)))
    }

    pub fn sin(&self) -> Self {
        ScalarExpr(Arc::new(Node::Sin(self.clone())))
    }

    pub fn cos(&self) -> Self {
        ScalarExpr(Arc::new(Node::Cos(self.clone())))
    }

    pub fn exp(&self) -> Self {
        ScalarExpr(Arc::new(Node::Exp(self.clone())))
    }

    pub fn sqrt(&self) -> Self {
        ScalarExpr(Arc::new(Node::Sqrt(self.clone())))
    }

    /// True if the expression is the literal constant 0.
    pub fn is_zero_literal(&self) -> bool {
        matches!(*self.0, Node::Const(c) if c == 0.0)
    }

    /// Largest coordinate index appearing in the tree, if any.
    pub fn max_coord_index(&self) -> Option<usize> {
        match &*self.0 {
            Node::Coord(i) => Some(*i),
            Node::Const(_) => None,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_coord_index(), b.max_coord_index()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Sqrt(a) => {
                a.max_coord_index()
            }
            Node::Pow(a, _) => a.max_coord_index(),
        }
    }

    /// Checks that every coordinate index is below `dim`.
    pub fn bind_check(&self, dim: usize) -> Result<()> {
        match self.max_coord_index() {
            Some(i) if i >= dim => Err(Error::InvalidInput(format!(
                "expression `{self}` uses coordinate index {i} in a {dim}-dimensional chart"
            ))),
            _ => Ok(()),
        }
    }

    /// Plain pointwise evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let v = self.eval_raw(point);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                expr: self.to_string(),
                point: point.to_vec(),
            })
        }
    }

    fn eval_raw(&self, point: &[f64]) -> f64 {
        match &*self.0 {
            Node::Coord(i) => point.get(*i).copied().unwrap_or(f64::NAN),
            Node::Const(c) => *c,
            Node::Add(a, b) => a.eval_raw(point) + b.eval_raw(point),
            Node::Sub(a, b) => a.eval_raw(point) - b.eval_raw(point),
            Node::Mul(a, b) => a.eval_raw(point) * b.eval_raw(point),
            Node::Div(a, b) => a.eval_raw(point) / b.eval_raw(point),
            Node::Neg(a) => -a.eval_raw(point),
            Node::Pow(a, n) => a.eval_raw(point).powi(*n),
            Node::Sin(a) => a.eval_raw(point).sin(),
            Node::Cos(a) => a.eval_raw(point).cos(),
            Node::Exp(a) => a.eval_raw(point).exp(),
            Node::Sqrt(a) => a.eval_raw(point).sqrt(),
        }
    }

    /// Renders the tree with the given coordinate names (used by the chart
    /// file exporter). Falls back to `x0, x1, ...` when a name is missing.
    pub fn render(&self, names: &[String]) -> String {
        self.render_prec(names, 0)
    }

    // Precedence levels: 0 add/sub, 1 mul/div, 2 unary minus, 3 pow, 4 atom.
    fn render_prec(&self, names: &[String], parent: u8) -> String {
        let (s, prec) = match &*self.0 {
            Node::Coord(i) => (
                names
                    .get(*i)
                    .cloned()
                    .unwrap_or_else(|| format!("x{i}")),
                4,
            ),
            Node::Const(c) => {
                if *c < 0.0 {
                    (format!("{c}"), 2)
                } else {
                    (format!("{c}"), 4)
                }
            }
            Node::Add(a, b) => (
                format!(
                    "{} + {}",
                    a.render_prec(names, 0),
                    b.render_prec(names, 1)
                ),
                0,
            ),
            Node::Sub(a, b) => (
                format!(
                    "{} - {}",
                    a.render_prec(names, 0),
                    b.render_prec(names, 1)
                ),
                0,
            ),
            Node::Mul(a, b) => (
                format!(
                    "{}*{}",
                    a.render_prec(names, 1),
                    b.render_prec(names, 2)
                ),
                1,
            ),
            Node::Div(a, b) => (
                format!(
                    "{}/{}",
                    a.render_prec(names, 1),
                    b.render_prec(names, 2)
                ),
                1,
            ),
            Node::Neg(a) => (format!("-{}", a.render_prec(names, 2)), 2),
            Node::Pow(a, n) => {
                let base = a.render_prec(names, 4);
                if *n < 0 {
                    (format!("{base}^({n})"), 3)
                } else {
                    (format!("{base}^{n}"), 3)
                }
            }
            Node::Sin(a) => (format!("sin({})", a.render_prec(names, 0)), 4),
            Node::Cos(a) => (format!("cos({})", a.render_prec(names, 0)), 4),
            Node::Exp(a) => (format!("exp({})", a.render_prec(names, 0)), 4),
            Node::Sqrt(a) => (format!("sqrt({})", a.render_prec(names, 0)), 4),
        };
        if prec < parent {
            format!("({s})")
        } else {
            s
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&[]))
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({self})")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $node:ident) => {
        impl std::ops::$trait for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr(Arc::new(Node::$node(self, rhs)))
            }
        }
        impl std::ops::$trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr(Arc::new(Node::$node(self.clone(), rhs.clone())))
            }
        }
        impl std::ops::$trait<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr(Arc::new(Node::$node(self, ScalarExpr::constant(rhs))))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr(Arc::new(Node::Neg(self)))
    }
}
