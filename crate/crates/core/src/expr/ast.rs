use std::ops;
use std::sync::Arc;

use thiserror::Error;

use crate::ball::Ball;

use super::flat::flat_eval;

/// Immutable, reference-counted expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothExpr(Arc<Node>);

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Add(SmoothExpr, SmoothExpr),
    Sub(SmoothExpr, SmoothExpr),
    Mul(SmoothExpr, SmoothExpr),
    Div(SmoothExpr, SmoothExpr),
    Pow(SmoothExpr, u32),
    Exp(SmoothExpr),
    Sin(SmoothExpr),
    Cos(SmoothExpr),
    /// `order`-th derivative of the flat function, applied to `arg`.
    Flat { order: u32, arg: SmoothExpr },
    Proj(ProjEntry),
    /// Mixed partial `∂^counts` of `inner`.
    Partial { counts: Vec<u32>, inner: SmoothExpr },
}

/// Entry `(row, col)` of the orthogonal projection onto the span of
/// `columns`, defined on the open ball `support` and extended by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjEntry {
    pub row: usize,
    pub col: usize,
    pub support: Ball,
    pub columns: Arc<Vec<Vec<SmoothExpr>>>,
}

impl SmoothExpr {
    fn wrap(node: Node) -> Self {
        SmoothExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        debug_assert!(c.is_finite(), "constants must be finite");
        Self::wrap(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::wrap(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn fold(c: f64, otherwise: impl FnOnce() -> Node) -> Self {
        if c.is_finite() {
            Self::constant(c)
        } else {
            Self::wrap(otherwise())
        }
    }

    pub fn add(a: Self, b: Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::fold(x + y, || Node::Add(a, b)),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Self::wrap(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Self, b: Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::fold(x - y, || Node::Sub(a, b)),
            (_, Some(y)) if y == 0.0 => a,
            _ => Self::wrap(Node::Sub(a, b)),
        }
    }

    /// Products with a literal zero factor are zero whatever the other
    /// factor is (`0 · undefined = 0`).
    pub fn mul(a: Self, b: Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::fold(x * y, || Node::Mul(a, b)),
            _ if a.is_zero() || b.is_zero() => Self::zero(),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Self::wrap(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Self, b: Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Self::fold(x / y, || Node::Div(a, b)),
            _ if b.is_one() => a,
            _ => Self::wrap(Node::Div(a, b)),
        }
    }

    pub fn powi(base: Self, exponent: u32) -> Self {
        match exponent {
            0 => Self::one(),
            1 => base,
            _ => match base.as_const() {
                Some(c) => Self::fold(c.powi(exponent as i32), || Node::Pow(base, exponent)),
                None => Self::wrap(Node::Pow(base, exponent)),
            },
        }
    }

    pub fn exp(arg: Self) -> Self {
        match arg.as_const() {
            Some(c) => Self::fold(c.exp(), || Node::Exp(arg)),
            None => Self::wrap(Node::Exp(arg)),
        }
    }

    pub fn sin(arg: Self) -> Self {
        match arg.as_const() {
            Some(c) => Self::fold(c.sin(), || Node::Sin(arg)),
            None => Self::wrap(Node::Sin(arg)),
        }
    }

    pub fn cos(arg: Self) -> Self {
        match arg.as_const() {
            Some(c) => Self::fold(c.cos(), || Node::Cos(arg)),
            None => Self::wrap(Node::Cos(arg)),
        }
    }

    pub fn flat(arg: Self) -> Self {
        Self::flat_derivative(0, arg)
    }

    pub fn flat_derivative(order: u32, arg: Self) -> Self {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = flat_eval(c, order) {
                return Self::constant(v);
            }
        }
        Self::wrap(Node::Flat { order, arg })
    }

    pub fn proj(entry: ProjEntry) -> Self {
        Self::wrap(Node::Proj(entry))
    }

    pub fn partial(counts: Vec<u32>, inner: Self) -> Self {
        if counts.iter().all(|&c| c == 0) {
            return inner;
        }
        if inner.as_const().is_some() {
            return Self::zero();
        }
        Self::wrap(Node::Partial { counts, inner })
    }

    pub fn neg(a: Self) -> Self {
        Self::sub(Self::zero(), a)
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => a.max_var(),
            Node::Flat { arg, .. } => arg.max_var(),
            Node::Proj(p) => {
                let cols = p.columns.iter().flatten().filter_map(|e| e.max_var()).max();
                cols.max(Some(p.support.dim() - 1))
            }
            Node::Partial { counts, inner } => inner.max_var().max(Some(counts.len() - 1)),
        }
    }

    /// Number of tree nodes (shared subtrees counted each time they occur).
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.size() + b.size()
            }
            Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => a.size(),
            Node::Flat { arg, .. } => arg.size(),
            Node::Proj(p) => p.columns.iter().flatten().map(SmoothExpr::size).sum(),
            Node::Partial { inner, .. } => inner.size(),
        }
    }
}

impl SmoothExpr {
    /// Sum of an ordered list, folded left to right.
    pub fn sum(terms: impl IntoIterator<Item = SmoothExpr>) -> SmoothExpr {
        terms.into_iter().fold(SmoothExpr::zero(), SmoothExpr::add)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl ops::$tr for SmoothExpr {
            type Output = SmoothExpr;
            fn $m(self, rhs: SmoothExpr) -> SmoothExpr {
                SmoothExpr::$f(self, rhs)
            }
        }
        impl ops::$tr<&SmoothExpr> for &SmoothExpr {
            type Output = SmoothExpr;
            fn $m(self, rhs: &SmoothExpr) -> SmoothExpr {
                SmoothExpr::$f(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl From<f64> for SmoothExpr {
    fn from(c: f64) -> Self {
        SmoothExpr::constant(c)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("point coordinate {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

/// A point of `ℝⁿ` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, PointError> {
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(PointError::NonFinite { index, value });
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = PointError;
    fn try_from(v: Vec<f64>) -> Result<Self, PointError> {
        Point::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_fold_constants_and_units() {
        let x = SmoothExpr::var(0);
        assert_eq!(SmoothExpr::add(1.0.into(), 2.0.into()).as_const(), Some(3.0));
        assert_eq!(SmoothExpr::mul(x.clone(), SmoothExpr::one()), x);
        assert!(SmoothExpr::mul(SmoothExpr::zero(), SmoothExpr::exp(x.clone())).is_zero());
        assert_eq!(SmoothExpr::powi(x.clone(), 1), x);
        assert_eq!(SmoothExpr::powi(x, 0).as_const(), Some(1.0));
        assert_eq!(SmoothExpr::flat(SmoothExpr::constant(-3.0)).as_const(), Some(0.0));
        // 1/0 is kept symbolic so that evaluation reports it
        assert!(SmoothExpr::div(1.0.into(), 0.0.into()).as_const().is_none());
    }

    #[test]
    fn points_reject_non_finite() {
        assert!(Point::new(vec![0.0, f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert_eq!(Point::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }
}
