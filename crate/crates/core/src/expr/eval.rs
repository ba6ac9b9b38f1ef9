use thiserror::Error;

use crate::linalg::{projection_matrix, ProjectionError};

use super::ast::{Node, Point, SmoothExpr};
use super::flat::{flat_eval, flat_log_abs, FLAT_ORDER_CAP};
use super::jet::{Jet, JetSpace};
use super::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("flat derivative of order {order} exceeds the supported cap of {cap}", cap = FLAT_ORDER_CAP)]
    FlatOrderSaturated { order: u32 },
    #[error("expression uses x{needed} but the point has {got} coordinates", needed = .needed + 1)]
    DimensionMismatch { needed: usize, got: usize },
    #[error("projection columns are linearly dependent in `{subexpr}`")]
    DegenerateProjection { subexpr: String },
    #[error("partial derivative nodes cannot be expanded inside a Taylor evaluation")]
    NestedPartial,
}

impl SmoothExpr {
    pub fn evaluate(&self, p: &Point) -> Result<f64, EvalError> {
        self.eval_at(p.coords())
    }

    /// Evaluation at raw coordinates (assumed finite).
    pub fn eval_at(&self, coords: &[f64]) -> Result<f64, EvalError> {
        self.eval_generic(coords)
    }

    /// All partial derivatives up to `order` at `point`, as a jet.
    pub fn eval_jet(&self, point: &[f64], space: &std::sync::Arc<JetSpace>) -> Result<Jet, EvalError> {
        debug_assert_eq!(space.n(), point.len());
        let vars = Jet::seed(space, point);
        self.eval_generic(&vars)
    }

    /// Evaluation over any [`Scalar`]. A zero left factor short-circuits a
    /// product, so `0 · (undefined) = 0`.
    pub fn eval_generic<T: Scalar>(&self, vars: &[T]) -> Result<T, EvalError> {
        let proto = || vars.first().expect("at least one variable");
        Ok(match self.node() {
            Node::Const(c) => proto().constant_like(*c),
            Node::Var(i) => vars.get(*i).cloned().ok_or(EvalError::DimensionMismatch {
                needed: *i,
                got: vars.len(),
            })?,
            Node::Add(a, b) => a.eval_generic(vars)?.add(&b.eval_generic(vars)?),
            Node::Sub(a, b) => a.eval_generic(vars)?.sub(&b.eval_generic(vars)?),
            Node::Mul(a, b) => {
                let left = a.eval_generic(vars)?;
                if left.is_zero() {
                    return Ok(left);
                }
                left.mul(&b.eval_generic(vars)?)
            }
            Node::Div(a, b) => {
                let num = a.eval_generic(vars)?;
                let den = b.eval_generic(vars)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero {
                        subexpr: self.to_string(),
                    });
                }
                num.div(&den)
            }
            Node::Pow(a, k) => a.eval_generic(vars)?.powi(*k),
            Node::Exp(a) => a.eval_generic(vars)?.exp(),
            Node::Sin(a) => a.eval_generic(vars)?.sin(),
            Node::Cos(a) => a.eval_generic(vars)?.cos(),
            Node::Flat { order, arg } => {
                let u = arg.eval_generic(vars)?;
                let k = u.order();
                if k == 0 {
                    u.constant_like(flat_eval(u.value(), *order)?)
                } else {
                    let needed = *order + k as u32;
                    if needed > FLAT_ORDER_CAP {
                        return Err(EvalError::FlatOrderSaturated { order: needed });
                    }
                    let mut fact = 1.0;
                    let mut taylor = Vec::with_capacity(k + 1);
                    for l in 0..=k {
                        if l > 0 {
                            fact *= l as f64;
                        }
                        taylor.push(flat_eval(u.value(), order + l as u32)? / fact);
                    }
                    u.compose(&taylor)
                }
            }
            Node::Proj(entry) => {
                let at: Vec<f64> = vars.iter().map(Scalar::value).collect();
                if entry.support.dim() > at.len() {
                    return Err(EvalError::DimensionMismatch {
                        needed: entry.support.dim() - 1,
                        got: at.len(),
                    });
                }
                if !entry.support.contains(&at) {
                    return Ok(proto().constant_like(0.0));
                }
                let mut cols = Vec::with_capacity(entry.columns.len());
                for col in entry.columns.iter() {
                    let mut values = Vec::with_capacity(col.len());
                    for e in col {
                        values.push(e.eval_generic(vars)?);
                    }
                    cols.push(values);
                }
                let p = projection_matrix(&cols).map_err(|ProjectionError::Degenerate| {
                    EvalError::DegenerateProjection {
                        subexpr: self.to_string(),
                    }
                })?;
                p[entry.row][entry.col].clone()
            }
            Node::Partial { counts, inner } => {
                if proto().order() != 0 {
                    return Err(EvalError::NestedPartial);
                }
                let at: Vec<f64> = vars.iter().map(Scalar::value).collect();
                if counts.len() > at.len() {
                    return Err(EvalError::DimensionMismatch {
                        needed: counts.len() - 1,
                        got: at.len(),
                    });
                }
                let mut multi = counts.clone();
                multi.resize(at.len(), 0);
                let order: u32 = multi.iter().sum();
                let space = JetSpace::new(at.len(), order as usize);
                let jet = inner.eval_jet(&at, &space)?;
                let d = jet.derivative(&multi).expect("multi-index within jet order");
                proto().constant_like(d)
            }
        })
    }
}

/// `sign · e^{ln_abs}`, or exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogValue {
    Zero,
    NonZero { sign: f64, ln_abs: f64 },
}

impl LogValue {
    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            LogValue::Zero
        } else {
            LogValue::NonZero {
                sign: v.signum(),
                ln_abs: v.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            LogValue::Zero => 0.0,
            LogValue::NonZero { sign, ln_abs } => sign * ln_abs.exp(),
        }
    }

    fn combine(self, other: LogValue, other_sign: f64) -> LogValue {
        match (self, other) {
            (LogValue::Zero, LogValue::Zero) => LogValue::Zero,
            (a, LogValue::Zero) => a,
            (LogValue::Zero, LogValue::NonZero { sign, ln_abs }) => LogValue::NonZero {
                sign: sign * other_sign,
                ln_abs,
            },
            (LogValue::NonZero { sign: sa, ln_abs: la }, LogValue::NonZero { sign: sb, ln_abs: lb }) => {
                let top = la.max(lb);
                let s = sa * (la - top).exp() + other_sign * sb * (lb - top).exp();
                if s == 0.0 {
                    LogValue::Zero
                } else {
                    LogValue::NonZero {
                        sign: s.signum(),
                        ln_abs: top + s.abs().ln(),
                    }
                }
            }
        }
    }
}

impl SmoothExpr {
    /// Evaluation in sign/log-magnitude form, for values such as
    /// `e^{-1/x}` at small `x` that underflow in plain arithmetic.
    pub fn eval_log(&self, coords: &[f64]) -> Result<LogValue, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => LogValue::from_f64(*c),
            Node::Var(i) => LogValue::from_f64(*coords.get(*i).ok_or(EvalError::DimensionMismatch {
                needed: *i,
                got: coords.len(),
            })?),
            Node::Add(a, b) => a.eval_log(coords)?.combine(b.eval_log(coords)?, 1.0),
            Node::Sub(a, b) => a.eval_log(coords)?.combine(b.eval_log(coords)?, -1.0),
            Node::Mul(a, b) => match a.eval_log(coords)? {
                LogValue::Zero => LogValue::Zero,
                LogValue::NonZero { sign, ln_abs } => match b.eval_log(coords)? {
                    LogValue::Zero => LogValue::Zero,
                    LogValue::NonZero { sign: s2, ln_abs: l2 } => LogValue::NonZero {
                        sign: sign * s2,
                        ln_abs: ln_abs + l2,
                    },
                },
            },
            Node::Div(a, b) => {
                let num = a.eval_log(coords)?;
                match b.eval_log(coords)? {
                    LogValue::Zero => {
                        return Err(EvalError::DivisionByZero {
                            subexpr: self.to_string(),
                        })
                    }
                    LogValue::NonZero { sign: s2, ln_abs: l2 } => match num {
                        LogValue::Zero => LogValue::Zero,
                        LogValue::NonZero { sign, ln_abs } => LogValue::NonZero {
                            sign: sign * s2,
                            ln_abs: ln_abs - l2,
                        },
                    },
                }
            }
            Node::Pow(a, k) => match a.eval_log(coords)? {
                _ if *k == 0 => LogValue::NonZero { sign: 1.0, ln_abs: 0.0 },
                LogValue::Zero => LogValue::Zero,
                LogValue::NonZero { sign, ln_abs } => LogValue::NonZero {
                    sign: if k % 2 == 0 { 1.0 } else { sign },
                    ln_abs: ln_abs * f64::from(*k),
                },
            },
            Node::Exp(a) => {
                let u = a.eval_log(coords)?.to_f64();
                if u == f64::NEG_INFINITY {
                    LogValue::Zero
                } else {
                    LogValue::NonZero { sign: 1.0, ln_abs: u }
                }
            }
            Node::Sin(a) => LogValue::from_f64(a.eval_log(coords)?.to_f64().sin()),
            Node::Cos(a) => LogValue::from_f64(a.eval_log(coords)?.to_f64().cos()),
            Node::Flat { order, arg } => {
                let u = arg.eval_log(coords)?.to_f64();
                match flat_log_abs(u, *order)? {
                    None => LogValue::Zero,
                    Some((sign, ln_abs)) => LogValue::NonZero { sign, ln_abs },
                }
            }
            Node::Proj(_) | Node::Partial { .. } => LogValue::from_f64(self.eval_at(coords)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use approx::assert_relative_eq;

    fn p(s: &str, n: usize) -> SmoothExpr {
        parse(s, n).unwrap()
    }

    #[test]
    fn flat_values_follow_the_convention() {
        let e = p("flat(x1)", 1);
        assert_relative_eq!(e.eval_at(&[1.0]).unwrap(), 0.3678794, epsilon = 1e-7);
        assert_eq!(e.eval_at(&[-2.0]).unwrap(), 0.0);
        let d = p("flatd(1, x1)", 1);
        assert_relative_eq!(d.eval_at(&[0.5]).unwrap(), 0.5413411, epsilon = 1e-7);
    }

    #[test]
    fn zero_factor_hides_undefined_operand() {
        // at x1 = 0 the second factor divides by zero
        let e = p("flat(x1)*(1/x1)", 1);
        assert_eq!(e.eval_at(&[0.0]).unwrap(), 0.0);
        assert_eq!(e.eval_at(&[-1.0]).unwrap(), 0.0);
        let bad = p("(1/x1)*flat(x1)", 1);
        assert!(matches!(bad.eval_at(&[0.0]), Err(EvalError::DivisionByZero { .. })));
    }

    #[test]
    fn division_by_zero_names_the_subexpression() {
        let e = p("x2 + 1/(x1-1)", 2);
        match e.eval_at(&[1.0, 0.0]) {
            Err(EvalError::DivisionByZero { subexpr }) => assert_eq!(subexpr, "1/(x1-1)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = p("x2", 2);
        assert_eq!(
            e.eval_at(&[1.0]),
            Err(EvalError::DimensionMismatch { needed: 1, got: 1 })
        );
    }

    #[test]
    fn saturation_is_reported_not_guessed() {
        let e = p("flatd(17, x1)", 1);
        assert!(matches!(e.eval_at(&[0.5]), Err(EvalError::FlatOrderSaturated { order: 17 })));
    }

    #[test]
    fn jets_agree_with_symbolic_derivatives() {
        let e = p("flat(x1)*sin(x2)^2 + exp(x1*x2)/(2+cos(x1))", 2);
        let at = [0.4, -0.3];
        let space = JetSpace::new(2, 3);
        let jet = e.eval_jet(&at, &space).unwrap();
        for multi in space.monomials() {
            let mut sym = e.clone();
            for (i, &k) in multi.iter().enumerate() {
                for _ in 0..k {
                    sym = sym.differentiate(i);
                }
            }
            let want = sym.eval_at(&at).unwrap();
            let got = jet.derivative(multi).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_evaluation_survives_underflow() {
        let e = p("flat(x1)^2 + flat(x1)^4", 1);
        let x = 1e-3;
        match e.eval_log(&[x]).unwrap() {
            LogValue::NonZero { sign, ln_abs } => {
                assert_eq!(sign, 1.0);
                assert_relative_eq!(ln_abs, -2.0 / x, max_relative = 1e-14);
            }
            LogValue::Zero => panic!("lost the value"),
        }
        assert_eq!(e.eval_at(&[x]).unwrap(), 0.0);
        assert_eq!(e.eval_log(&[-1.0]).unwrap(), LogValue::Zero);
        let q = p("flat(x1)*(x1-0.5)^2", 1);
        assert_relative_eq!(
            q.eval_log(&[0.3]).unwrap().to_f64(),
            q.eval_at(&[0.3]).unwrap(),
            max_relative = 1e-13
        );
    }
}
