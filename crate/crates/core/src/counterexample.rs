//! The ideal `I(J)` of smooth functions on `J = (−a, a)` vanishing on
//! `(−a, 0]`, and certificates that a finite candidate generating set
//! fails to generate it.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{flat_eval, EvalError, LogValue, SmoothExpr};

#[derive(Debug, Error)]
pub enum CounterexampleError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("interval half-width must be positive, got {0}")]
    BadInterval(f64),
    #[error("expression must be in one variable")]
    NotUnivariate,
    #[error("`{expr}` is {value:e} at x = {x}, so it does not vanish on (-a, 0]")]
    NotInIdeal { expr: String, x: f64, value: f64 },
    #[error("`{expr}` is not positive at x = {x}")]
    NotPositive { expr: String, x: f64 },
    #[error("scan grid needs at least 100 points, got {0}")]
    GridTooCoarse(usize),
    #[error("the candidates share a zero at x = {x}")]
    PrecondFailed { x: f64 },
}

/// Number of sample points used for membership and positivity checks.
const MEMBERSHIP_SAMPLES: usize = 64;

/// An element of `I(J)`; membership is checked on 64 points of `(−a, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealElement {
    expr: SmoothExpr,
    a: f64,
}

impl IdealElement {
    pub fn new(expr: SmoothExpr, a: f64) -> Result<Self, CounterexampleError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CounterexampleError::BadInterval(a));
        }
        if expr.max_var().is_some_and(|v| v > 0) {
            return Err(CounterexampleError::NotUnivariate);
        }
        for k in 0..MEMBERSHIP_SAMPLES {
            let x = -a * k as f64 / MEMBERSHIP_SAMPLES as f64;
            let value = expr.eval_at(&[x])?;
            if value != 0.0 {
                return Err(CounterexampleError::NotInIdeal {
                    expr: expr.to_string(),
                    x,
                    value,
                });
            }
        }
        Ok(Self { expr, a })
    }

    pub fn expr(&self) -> &SmoothExpr {
        &self.expr
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// `x_k = 0.1 · 2⁻ᵏ`, `k = 0..7`.
pub fn default_x_sequence() -> Vec<f64> {
    (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

/// Whether the entries for positive `x` never increase and end below
/// `1e-6`.
fn decays(xs: &[f64], values: &[f64]) -> bool {
    let pos: Vec<f64> = xs.iter().zip(values).filter(|(x, _)| **x > 0.0).map(|(_, v)| *v).collect();
    !pos.is_empty() && pos.windows(2).all(|w| w[1] <= w[0]) && pos.last().is_some_and(|v| *v < 1e-6)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatLimitTable {
    pub x: Vec<f64>,
    /// `ratios[n][k] = ψ(x_k) / x_kⁿ`.
    pub ratios: Vec<Vec<f64>>,
    pub decays: Vec<bool>,
}

/// Tabulates `ψ(x)/xⁿ` for `n ≤ n_max`; nonpositive `x` give 0.
pub fn flat_limit_check(n_max: u32, xs: &[f64]) -> FlatLimitTable {
    let ratios: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| {
            xs.iter()
                .map(|&x| {
                    if x <= 0.0 {
                        0.0
                    } else {
                        flat_eval(x, 0).expect("order 0") / x.powi(n as i32)
                    }
                })
                .collect()
        })
        .collect();
    FlatLimitTable {
        x: xs.to_vec(),
        decays: ratios.iter().map(|r| decays(xs, r)).collect(),
        ratios,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqrtReport {
    pub x: Vec<f64>,
    pub sqrt_h: Vec<f64>,
    /// `ratios[n][k] = √h(x_k) / x_kⁿ`, `n ≤ 4`.
    pub ratios: Vec<Vec<f64>>,
    pub decays: Vec<bool>,
    pub pass: bool,
}

fn log_of(expr: &SmoothExpr, x: f64) -> Result<Option<(f64, f64)>, EvalError> {
    Ok(match expr.eval_log(&[x])? {
        LogValue::Zero => None,
        LogValue::NonZero { sign, ln_abs } => Some((sign, ln_abs)),
    })
}

/// Checks that `√h / xⁿ → 0` along `xs` for `n ≤ 4`, after confirming
/// `h > 0` on sampled points of `(0, a)` and on `xs`.
pub fn sqrt_ideal_check(h: &IdealElement, xs: &[f64]) -> Result<SqrtReport, CounterexampleError> {
    let a = h.a();
    let probes = (1..=MEMBERSHIP_SAMPLES)
        .map(|k| a * k as f64 / (MEMBERSHIP_SAMPLES + 1) as f64)
        .chain(xs.iter().copied().filter(|&x| x > 0.0 && x < a));
    for x in probes {
        if !matches!(log_of(h.expr(), x)?, Some((s, _)) if s > 0.0) {
            return Err(CounterexampleError::NotPositive {
                expr: h.expr().to_string(),
                x,
            });
        }
    }
    let half_logs: Vec<Option<f64>> = xs
        .iter()
        .map(|&x| Ok(if x <= 0.0 { None } else { log_of(h.expr(), x)?.map(|(_, l)| l / 2.0) }))
        .collect::<Result<_, EvalError>>()?;
    let sqrt_h = half_logs.iter().map(|l| l.map_or(0.0, f64::exp)).collect();
    let ratios: Vec<Vec<f64>> = (0..=4)
        .map(|n| {
            xs.iter()
                .zip(&half_logs)
                .map(|(&x, l)| l.map_or(0.0, |l| (l - f64::from(n) * x.ln()).exp()))
                .collect()
        })
        .collect();
    let decays: Vec<bool> = ratios.iter().map(|r| decays(xs, r)).collect();
    Ok(SqrtReport {
        x: xs.to_vec(),
        sqrt_h,
        pass: decays.iter().all(|&d| d),
        ratios,
        decays,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonZero {
    pub x: f64,
    /// `ψ(x)`, nonzero, so `ψ = Σ aᵢ gᵢ` fails at `x`.
    pub witness: f64,
}

fn sum_of_squares(g: &[IdealElement], x: f64) -> Result<f64, EvalError> {
    g.iter().map(|e| e.expr().eval_at(&[x]).map(|v| v * v)).sum()
}

/// Searches `(0, a)` for a common zero of `g`: interior grid minima of
/// `H = Σ gᵢ²` (entered by a strict descent) are refined by bisection on
/// the sign of `H′`, and accepted when every `|gᵢ| ≤ 1e-12`.
pub fn common_zero_scan(g: &[IdealElement], a: f64, grid: usize) -> Result<Option<CommonZero>, CounterexampleError> {
    if grid < 100 {
        return Err(CounterexampleError::GridTooCoarse(grid));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(CounterexampleError::BadInterval(a));
    }
    let witness = |x: f64| CommonZero {
        x,
        witness: flat_eval(x, 0).expect("order 0"),
    };
    if g.is_empty() {
        return Ok(Some(witness(a / 2.0)));
    }
    let derivs: Vec<SmoothExpr> = g.iter().map(|e| e.expr().differentiate(0)).collect();
    let h_prime = |x: f64| -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for (e, d) in g.iter().zip(&derivs) {
            let v = e.expr().eval_at(&[x])?;
            if v != 0.0 {
                acc += 2.0 * v * d.eval_at(&[x])?;
            }
        }
        Ok(acc)
    };
    let xs: Vec<f64> = (0..=grid).map(|k| a * k as f64 / grid as f64).collect();
    let hs: Vec<f64> = xs[1..grid].iter().map(|&x| sum_of_squares(g, x)).collect::<Result<_, _>>()?;
    for k in 1..hs.len().saturating_sub(1) {
        if !(hs[k - 1] > hs[k] && hs[k] <= hs[k + 1]) {
            continue;
        }
        let (mut lo, mut hi) = (xs[k], xs[k + 2]);
        let mut x = xs[k + 1];
        if hs[k] != 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let s = h_prime(mid)?;
                x = mid;
                if s == 0.0 {
                    break;
                } else if s < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let vanish = g
            .iter()
            .map(|e| e.expr().eval_at(&[x]).map(|v| v.abs() <= 1e-12))
            .collect::<Result<Vec<_>, _>>()?;
        if vanish.iter().all(|&v| v) {
            return Ok(Some(witness(x)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupCertificate {
    pub x_values: Vec<f64>,
    /// `−¼ log h(x)`.
    pub log_bounds: Vec<f64>,
    /// `h(x)^{−1/4}`, `None` where it overflows.
    pub bound_values: Vec<Option<f64>>,
    pub verdict: Verdict,
    pub inequality: String,
}

/// Lower bound on the coefficient norm needed to write `h^{1/4}` in terms
/// of `g`, with `h = Σ gᵢ²`, evaluated in log space along `xs`.
pub fn blowup_certificate(
    g: &[IdealElement],
    a: f64,
    xs: &[f64],
    grid: usize,
) -> Result<BlowupCertificate, CounterexampleError> {
    if let Some(z) = common_zero_scan(g, a, grid)? {
        return Err(CounterexampleError::PrecondFailed { x: z.x });
    }
    let mut log_bounds = Vec::with_capacity(xs.len());
    for &x in xs {
        if x <= 0.0 || x >= a {
            return Err(CounterexampleError::BadInterval(x));
        }
        let mut terms = Vec::with_capacity(g.len());
        for e in g {
            if let Some((_, l)) = log_of(e.expr(), x)? {
                terms.push(2.0 * l);
            }
        }
        let Some(top) = terms.iter().copied().reduce(f64::max) else {
            return Err(CounterexampleError::PrecondFailed { x });
        };
        let log_h = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
        log_bounds.push(-0.25 * log_h);
    }
    let bound_values = log_bounds
        .iter()
        .map(|l| Some(l.exp()).filter(|v| v.is_finite()))
        .collect();
    let per_decade = std::f64::consts::LN_10;
    let steep = log_bounds.len() >= 2
        && xs.windows(2).zip(log_bounds.windows(2)).all(|(x, l)| {
            let decades = (x[0] / x[1]).log10();
            decades > 0.0 && l[1] - l[0] >= per_decade * decades
        });
    let large = log_bounds.last().is_some_and(|l| *l > 1e6f64.ln());
    Ok(BlowupCertificate {
        x_values: xs.to_vec(),
        bound_values,
        verdict: if steep && large { Verdict::Diverges } else { Verdict::Inconclusive },
        log_bounds,
        inequality: "h^(1/4) = sum b_i g_i  =>  h^(1/4) <= (sum b_i^2)^(1/2) h^(1/2)  =>  (sum b_i^2)^(1/2) >= h^(-1/4)"
            .to_string(),
    })
}

impl BlowupCertificate {
    /// Two-column CSV `x,bound` (empty bound where it overflows).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,bound\n");
        for (x, b) in self.x_values.iter().zip(&self.bound_values) {
            match b {
                Some(b) => out.push_str(&format!("{x},{b:e}\n")),
                None => out.push_str(&format!("{x},\n")),
            }
        }
        out
    }
}
