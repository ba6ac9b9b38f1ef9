use serde::{Deserialize, Serialize};

use crate::expr::jet::JetSpace;
use crate::expr::SmoothExpr;
use crate::grid::GridSpec;
use crate::par::Exec;

use super::SynthesisError;

/// Highest derivative order the estimator will differentiate.
pub const SEMINORM_ORDER_BUDGET: usize = 6;

/// Grid estimate of `‖f‖_k = Σ_{j≤k} p_j(f)`, with `p_j` the largest sup
/// over `|α| = j` of `‖∂^α f‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub order: usize,
    pub value: f64,
    /// `p_0 … p_k`.
    pub by_order: Vec<f64>,
    pub grid: GridSpec,
}

/// Estimates the order-`k` seminorm of a vector-valued function (Euclidean
/// norm over components) from the values of all derivatives on `grid`.
pub fn seminorm(f: &[SmoothExpr], k: usize, grid: &GridSpec, exec: Exec) -> Result<SeminormEstimate, SynthesisError> {
    if k > SEMINORM_ORDER_BUDGET {
        return Err(SynthesisError::BudgetExceeded {
            order: k,
            budget: SEMINORM_ORDER_BUDGET,
        });
    }
    let space = JetSpace::new(grid.dim(), k);
    let per_point = exec.try_map(grid.len(), |i| {
        let p = grid.point(i);
        let jets = f
            .iter()
            .map(|e| e.eval_jet(&p, &space))
            .collect::<Result<Vec<_>, _>>()?;
        let mut sup = vec![0.0f64; k + 1];
        for multi in space.monomials() {
            let order = multi.iter().sum::<u32>() as usize;
            let sq: f64 = jets
                .iter()
                .map(|j| j.derivative(multi).expect("monomial in space").powi(2))
                .sum();
            sup[order] = sup[order].max(sq.sqrt());
        }
        Ok::<_, SynthesisError>(sup)
    })?;
    let mut by_order = vec![0.0f64; k + 1];
    for sup in per_point {
        for (acc, v) in by_order.iter_mut().zip(sup) {
            *acc = acc.max(v);
        }
    }
    Ok(SeminormEstimate {
        order: k,
        value: by_order.iter().sum(),
        by_order,
        grid: grid.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Finite,
    Countable,
}

/// Per-ball seminorm estimates feeding the weights (1-based ball index).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub mode: Mode,
    pub k_max: usize,
    pub safety: f64,
    pub weights: Vec<f64>,
    /// Seminorm order used for ball `i`, `min(i, k_max)`.
    pub orders: Vec<usize>,
    pub bump_norms: Vec<f64>,
    pub section_norms: Vec<f64>,
}

/// Weights from precomputed norms: all ones in finite mode; otherwise
/// `c_i = min(2⁻ⁱ/‖ψ_i‖, 2⁻ⁱ/max_α‖ψ_i P_i E_α‖) / safety`.
pub fn weights_from_norms(bump_norms: &[f64], section_norms: &[f64], mode: Mode, safety: f64) -> Vec<f64> {
    match mode {
        Mode::Finite => vec![1.0; bump_norms.len()],
        Mode::Countable => bump_norms
            .iter()
            .zip(section_norms)
            .enumerate()
            .map(|(i, (&b, &s))| {
                let target = 0.5f64.powi(i as i32 + 1);
                let bound = |norm: f64| if norm > 0.0 { target / norm } else { f64::INFINITY };
                let c = bound(b).min(bound(s));
                if c.is_finite() {
                    c / safety
                } else {
                    target
                }
            })
            .collect(),
    }
}

/// One cover ball's ingredients for a weight: the bump and the `m` fields
/// `ψ_i P_i E_α`, with the grid to estimate their seminorms on.
pub struct WeightItem {
    pub bump: SmoothExpr,
    pub sections: Vec<Vec<SmoothExpr>>,
    pub grid: GridSpec,
}

pub fn weights(items: &[WeightItem], mode: Mode, k_max: usize, safety: f64, exec: Exec) -> Result<WeightReport, SynthesisError> {
    let orders: Vec<usize> = (1..=items.len()).map(|i| i.min(k_max)).collect();
    let (mut bump_norms, mut section_norms) = (Vec::new(), Vec::new());
    if mode == Mode::Countable {
        for (item, &k) in items.iter().zip(&orders) {
            bump_norms.push(seminorm(std::slice::from_ref(&item.bump), k, &item.grid, exec)?.value);
            let mut worst = 0.0f64;
            for s in &item.sections {
                worst = worst.max(seminorm(s, k, &item.grid, exec)?.value);
            }
            section_norms.push(worst);
        }
    } else {
        bump_norms = vec![0.0; items.len()];
        section_norms = vec![0.0; items.len()];
    }
    Ok(WeightReport {
        mode,
        k_max,
        safety,
        weights: weights_from_norms(&bump_norms, &section_norms, mode, safety),
        orders,
        bump_norms,
        section_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{Ball, Rational};
    use crate::expr::parse;
    use crate::synthesis::bump::bump;

    #[test]
    fn zero_function_has_zero_seminorms() {
        let b = bump(&Ball::new(vec![Rational::from_integer(0)], Rational::from_integer(1)).unwrap());
        let f = SmoothExpr::mul(b.expr, SmoothExpr::zero());
        let grid = GridSpec::new(&[[-2.0, 2.0]], 101).unwrap();
        let est = seminorm(&[f], 3, &grid, Exec::Sequential).unwrap();
        assert_eq!(est.by_order, vec![0.0; 4]);
    }

    #[test]
    fn bump_sup_is_one() {
        let b = bump(&Ball::new(vec![Rational::from_integer(0)], Rational::from_integer(1)).unwrap());
        let grid = GridSpec::new(&[[-2.0, 2.0]], 401).unwrap();
        assert_eq!(seminorm(&[b.expr], 0, &grid, Exec::Sequential).unwrap().value, 1.0);
    }

    #[test]
    fn flat_first_derivative_peak() {
        let f = parse("flat(x1)", 1).unwrap();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 4001).unwrap();
        let est = seminorm(&[f], 1, &grid, Exec::default()).unwrap();
        // ψ'(x) = e^{-1/x}/x² peaks at x = 1/2
        let peak = 4.0 * (-2.0f64).exp();
        assert!((est.by_order[1] - peak).abs() < 1e-12);
        assert!((est.by_order[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(est.value >= est.by_order[0]);
    }

    #[test]
    fn budget_is_enforced() {
        let grid = GridSpec::new(&[[-1.0, 1.0]], 11).unwrap();
        assert!(matches!(
            seminorm(&[SmoothExpr::one()], 7, &grid, Exec::Sequential),
            Err(SynthesisError::BudgetExceeded { order: 7, .. })
        ));
    }

    #[test]
    fn weight_arithmetic() {
        assert_eq!(weights_from_norms(&[3.0, 5.0], &[1.0, 1.0], Mode::Finite, 2.0), vec![1.0, 1.0]);
        let w = weights_from_norms(&[1.0, 1.0, 10.0], &[0.5, 0.5, 4.0], Mode::Countable, 1.0);
        assert_eq!(w[2], 1.0 / 80.0);
        let w = weights_from_norms(&[1.0], &[4.0], Mode::Countable, 2.0);
        assert_eq!(w[0], 0.5 / 4.0 / 2.0);
    }
}
