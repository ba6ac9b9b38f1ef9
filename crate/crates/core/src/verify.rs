//! Independent checks of synthesized generators against the raw family:
//! ranks and projections are recomputed from the bundle, never taken from
//! synthesis internals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::ball::rational_to_f64;
use crate::bundle::{DualFamily, Subbundle};
use crate::expr::{EvalError, SmoothExpr};
use crate::grid::{GridError, GridSpec};
use crate::linalg::{largest_principal_angle, nullspace_of_rows, RankProfile};
use crate::par::Exec;
use crate::sampling::SampleStream;
use crate::synthesis::{seminorm, BumpSpec, GeneratorSet, Mode, ProjectionField, StratumMap, SynthesisError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

fn eval_matrix(sections: &[Vec<SmoothExpr>], m: usize, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
    let mut mat = DMatrix::zeros(m, sections.len());
    for (j, s) in sections.iter().enumerate() {
        for (r, e) in s.iter().enumerate() {
            mat[(r, j)] = e.eval_at(p)?;
        }
    }
    Ok(mat)
}

fn check_shapes(sections: &[Vec<SmoothExpr>], n: usize, m: usize, grid: &GridSpec) -> Result<(), VerifyError> {
    if grid.dim() != n {
        return Err(VerifyError::Shape(format!("grid dimension {} but base dimension {n}", grid.dim())));
    }
    for (i, s) in sections.iter().enumerate() {
        if s.len() != m {
            return Err(VerifyError::Shape(format!("generator {i} has {} components, expected {m}", s.len())));
        }
        if s.iter().filter_map(SmoothExpr::max_var).any(|v| v >= n) {
            return Err(VerifyError::Shape(format!("generator {i} uses a variable beyond x{n}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanPoint {
    pub coords: Vec<f64>,
    pub dim_g: usize,
    pub rank_gen: usize,
    pub residual: f64,
    pub ambiguous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanReport {
    pub grid: GridSpec,
    pub tol: f64,
    pub residual_tol: f64,
    pub generators: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
    pub ambiguous_points: Vec<Vec<f64>>,
    pub failures: Vec<SpanPoint>,
    pub pass: bool,
    #[serde(skip)]
    pub points: Vec<SpanPoint>,
}

impl SpanReport {
    /// CSV with header `x1,…,xn,dim_G,rank_gen,residual,ambiguous`.
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim();
        let mut out: String = (1..=n).map(|i| format!("x{i},")).collect();
        out.push_str("dim_G,rank_gen,residual,ambiguous\n");
        for p in &self.points {
            for c in &p.coords {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{},{:e},{}\n", p.dim_g, p.rank_gen, p.residual, p.ambiguous));
        }
        out
    }
}

/// Compares the rank of the generators with `dim G_p` and measures how far
/// each generator leaves `G_p`, at every grid point.
pub fn spanning_check(
    generators: &[Vec<SmoothExpr>],
    g: &Subbundle,
    grid: &GridSpec,
    tol: f64,
    residual_tol: f64,
    exec: Exec,
) -> Result<SpanReport, VerifyError> {
    let m = g.m();
    check_shapes(generators, g.n(), m, grid)?;
    let points = exec.try_map(grid.len(), |i| {
        let p = grid.point(i);
        let (_, fiber) = g.fiber_columns(&p)?;
        let fiber_prof = RankProfile::of_columns(&fiber);
        let q = fiber_prof.projector(tol);
        let values = eval_matrix(generators, m, &p)?;
        let gen_prof = RankProfile::of_columns(&values);
        let complement = DMatrix::identity(m, m) - q;
        let mut residual = 0.0f64;
        for col in values.column_iter() {
            let v: DVector<f64> = col.into_owned();
            residual = residual.max((&complement * &v).norm() / v.norm().max(1.0));
        }
        let dim_g = fiber_prof.rank(tol);
        let rank_gen = gen_prof.rank(tol);
        let ambiguous = fiber_prof.ambiguous(tol) || gen_prof.ambiguous(tol);
        Ok::<_, EvalError>(SpanPoint {
            pass: residual <= residual_tol && (ambiguous || dim_g == rank_gen),
            coords: p,
            dim_g,
            rank_gen,
            residual,
            ambiguous,
        })
    })?;
    let passed = points.iter().filter(|p| p.pass).count();
    Ok(SpanReport {
        grid: grid.clone(),
        tol,
        residual_tol,
        generators: generators.len(),
        passed,
        failed: points.len() - passed,
        worst_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        ambiguous_points: points.iter().filter(|p| p.ambiguous).map(|p| p.coords.clone()).collect(),
        failures: points.iter().filter(|p| !p.pass).cloned().collect(),
        pass: passed == points.len(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelPoint {
    pub coords: Vec<f64>,
    pub dim_kernel: usize,
    pub dim_ann: usize,
    pub residual: f64,
    pub angle: f64,
    pub ambiguous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub grid: GridSpec,
    pub tol: f64,
    pub covectors: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
    pub worst_angle: f64,
    pub failures: Vec<KernelPoint>,
    pub pass: bool,
    #[serde(skip)]
    pub points: Vec<KernelPoint>,
}

impl KernelReport {
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim();
        let mut out: String = (1..=n).map(|i| format!("x{i},")).collect();
        out.push_str("dim_ann,dim_kernel,residual,angle\n");
        for p in &self.points {
            for c in &p.coords {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{},{:e},{:e}\n", p.dim_ann, p.dim_kernel, p.residual, p.angle));
        }
        out
    }
}

/// Checks that the common kernel of `covectors` equals `ann(F)` pointwise:
/// every covector vanishes on `ann(F)_p` (relative residual) and the two
/// subspaces agree in dimension and angle.
pub fn kernel_check(
    covectors: &[Vec<SmoothExpr>],
    f: &DualFamily,
    grid: &GridSpec,
    tol: f64,
    exec: Exec,
) -> Result<KernelReport, VerifyError> {
    let m = f.m();
    check_shapes(covectors, f.as_subbundle().n(), m, grid)?;
    let points = exec.try_map(grid.len(), |i| {
        let p = grid.point(i);
        let (_, cols) = f.as_subbundle().fiber_columns(&p)?;
        let ann = nullspace_of_rows(&cols.transpose(), tol);
        let values = eval_matrix(covectors, m, &p)?;
        let kernel = nullspace_of_rows(&values.transpose(), tol);
        let mut residual = 0.0f64;
        for col in values.column_iter() {
            let v: DVector<f64> = col.into_owned();
            residual = residual.max((ann.transpose() * &v).norm() / v.norm().max(1.0));
        }
        let angle = largest_principal_angle(&kernel, &ann);
        let ambiguous = RankProfile::of_columns(&cols).ambiguous(tol) || RankProfile::of_columns(&values).ambiguous(tol);
        Ok::<_, EvalError>(KernelPoint {
            pass: residual <= tol && (ambiguous || (kernel.ncols() == ann.ncols() && angle <= tol)),
            coords: p,
            dim_kernel: kernel.ncols(),
            dim_ann: ann.ncols(),
            residual,
            angle,
            ambiguous,
        })
    })?;
    let passed = points.iter().filter(|p| p.pass).count();
    Ok(KernelReport {
        grid: grid.clone(),
        tol,
        covectors: covectors.len(),
        passed,
        failed: points.len() - passed,
        worst_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        worst_angle: points.iter().map(|p| p.angle).fold(0.0, f64::max),
        failures: points.iter().filter(|p| !p.pass).cloned().collect(),
        pass: passed == points.len(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The recorded dimension disagrees with a fresh computation.
    Fidelity { index: usize, coords: Vec<f64>, recorded: usize, fresh: usize },
    /// A refined neighbor has smaller dimension than the point.
    Drop { index: usize, coords: Vec<f64>, dim: usize, neighbor: Vec<f64>, neighbor_dim: usize },
}

/// One entry per offending grid point. Around each point the local grid is
/// refined 4×: offsets `(h/4)·k`, `k ∈ {−1,0,1}ⁿ`, are recomputed from `g`.
pub fn semicontinuity_check(strat: &StratumMap, g: &Subbundle, tol: f64, exec: Exec) -> Result<Vec<Violation>, VerifyError> {
    let grid = strat.grid();
    if grid.dim() != g.n() {
        return Err(VerifyError::Shape("stratum map does not match bundle dimension".into()));
    }
    let n = grid.dim();
    let steps: Vec<f64> = (0..n).map(|a| grid.step(a) / 4.0).collect();
    let found = exec.try_map(grid.len(), |i| {
        let p = grid.point(i);
        let recorded = strat.dim_at(i);
        let fresh = g.fiber_rank_at(&p, tol)?.dim;
        if fresh != recorded {
            return Ok(Some(Violation::Fidelity { index: i, coords: p, recorded, fresh }));
        }
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let q: Vec<f64> = p
                .iter()
                .zip(&steps)
                .map(|(x, h)| {
                    let off = (c % 3) as f64 - 1.0;
                    c /= 3;
                    x + off * h
                })
                .collect();
            if q == p {
                continue;
            }
            let d = g.fiber_rank_at(&q, tol)?.dim;
            if d < recorded {
                return Ok(Some(Violation::Drop {
                    index: i,
                    coords: p,
                    dim: recorded,
                    neighbor: q,
                    neighbor_dim: d,
                }));
            }
        }
        Ok::<_, EvalError>(None)
    })?;
    Ok(found.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularity {
    pub regular: Vec<usize>,
    /// Grid-resolution candidate singular set.
    pub singular: Vec<usize>,
}

/// Grid points whose whole grid neighborhood shares their dimension.
pub fn regular_points(strat: &StratumMap) -> Regularity {
    let grid = strat.grid();
    let (regular, singular) = (0..grid.len())
        .partition(|&i| grid.neighbors(i).iter().all(|&j| strat.dim_at(j) == strat.dim_at(i)));
    Regularity { regular, singular }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub samples: usize,
    pub idempotency: f64,
    pub symmetry: f64,
    pub rank_mismatches: usize,
    pub image_residual: f64,
    pub stratum_samples: usize,
    pub oracle_distance: f64,
}

/// Projection-field properties at `samples` random points of the closed
/// double ball: `‖P²−P‖`, `‖Pᵀ−P‖`, rank, `‖(I−Q)P‖`, and `‖P−Q‖` where
/// `dim G_q` equals the frame's stratum (Frobenius norms, maxima).
pub fn projection_check(field: &ProjectionField, g: &Subbundle, samples: usize, seed: u64, counter: u64, tol: f64) -> Result<ProjectionReport, VerifyError> {
    let frame = field.frame();
    let double = frame.ball.doubled();
    let c = double.center_f64();
    let r = double.radius_f64();
    let m = g.m();
    let mut stream = SampleStream::new(seed, "projection", counter);
    let mut report = ProjectionReport {
        samples,
        idempotency: 0.0,
        symmetry: 0.0,
        rank_mismatches: 0,
        image_residual: 0.0,
        stratum_samples: 0,
        oracle_distance: 0.0,
    };
    for _ in 0..samples {
        let q = stream.in_ball(&c, r);
        let p = field.eval(&q)?;
        let oracle = g.projection_at(&q, tol)?;
        report.idempotency = report.idempotency.max((&p * &p - &p).norm());
        report.symmetry = report.symmetry.max((p.transpose() - &p).norm());
        if RankProfile::of_columns(&p).rank(tol) != frame.stratum {
            report.rank_mismatches += 1;
        }
        report.image_residual = report.image_residual.max(((DMatrix::identity(m, m) - &oracle) * &p).norm());
        if g.fiber_rank_at(&q, tol)?.dim == frame.stratum {
            report.stratum_samples += 1;
            report.oracle_distance = report.oracle_distance.max((&p - &oracle).norm());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpReport {
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub inner_deviation: f64,
    pub inner_samples: usize,
    /// Samples with `t ≥ 4` whose value is not exactly zero.
    pub outer_nonzero: usize,
    pub outer_samples: usize,
}

/// Samples a bump uniformly on the cube of half-width `3r` around its
/// center.
pub fn bump_check(b: &BumpSpec, samples: usize, seed: u64) -> Result<BumpReport, VerifyError> {
    let c = b.ball.center_f64();
    let r = b.ball.radius_f64();
    let mut stream = SampleStream::new(seed, "bump", 0);
    let mut rep = BumpReport {
        samples,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        inner_deviation: 0.0,
        inner_samples: 0,
        outer_nonzero: 0,
        outer_samples: 0,
    };
    for _ in 0..samples {
        let q: Vec<f64> = c.iter().map(|x| stream.uniform_in(x - 3.0 * r, x + 3.0 * r)).collect();
        let v = b.expr.eval_at(&q)?;
        let t = b.ball.dist_sq(&q) / (r * r);
        rep.min = rep.min.min(v);
        rep.max = rep.max.max(v);
        if t < 1.0 {
            rep.inner_samples += 1;
            rep.inner_deviation = rep.inner_deviation.max((v - 1.0).abs());
        } else if t >= 4.0 {
            rep.outer_samples += 1;
            if v.to_bits() != 0 {
                rep.outer_nonzero += 1;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// `c_i ‖ψ_i‖_{min(i,k_max)}` against `2⁻ⁱ`, 1-based `i`.
    pub weighted_norms: Vec<f64>,
    pub weight_bounds_hold: bool,
    /// `(k, Σ_{i≥k} ‖φ_i‖_k, 2^{−k+1})` for `k = 1..=k_tail`.
    pub tails: Vec<(usize, f64, f64)>,
    pub tails_hold: bool,
}

/// Recomputes bump seminorms on the bounding box of each double ball and
/// checks the weight and tail inequalities of countable mode.
pub fn tail_bound_check(gen: &GeneratorSet, points: usize, k_tail: usize, exec: Exec) -> Result<TailReport, VerifyError> {
    if gen.mode != Mode::Countable {
        return Err(VerifyError::Shape("tail bounds apply to countable mode only".into()));
    }
    let entries: Vec<_> = gen.strata.iter().flat_map(|s| s.cover.iter()).collect();
    let mut weighted_norms = Vec::with_capacity(entries.len());
    let mut phi_norms: Vec<Vec<f64>> = Vec::with_capacity(entries.len());
    for (idx, e) in entries.iter().enumerate() {
        let i = idx + 1;
        let r = 2.0 * e.frame.ball.radius_f64();
        let window: Vec<[f64; 2]> = e.frame.ball.center().iter().map(rational_to_f64).map(|c| [c - r, c + r]).collect();
        let grid = GridSpec::new(&window, points)?;
        let order = i.min(gen.k_max).max(k_tail);
        let est = seminorm(std::slice::from_ref(&e.bump), order, &grid, exec)?;
        let partial: Vec<f64> = (0..=order).map(|k| est.by_order[..=k].iter().sum()).collect();
        weighted_norms.push(e.weight * partial[i.min(gen.k_max)]);
        phi_norms.push(partial.iter().map(|v| e.weight * v).collect());
    }
    let weight_bounds_hold = weighted_norms
        .iter()
        .enumerate()
        .all(|(idx, v)| *v <= 0.5f64.powi(idx as i32 + 1));
    let tails: Vec<(usize, f64, f64)> = (1..=k_tail)
        .map(|k| {
            let sum = phi_norms.iter().skip(k - 1).map(|norms| norms[k]).sum();
            (k, sum, 0.5f64.powi(k as i32 - 1))
        })
        .collect();
    Ok(TailReport {
        tails_hold: tails.iter().all(|(_, s, b)| s <= b),
        weighted_norms,
        weight_bounds_hold,
        tails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{stratify, synthesize, SynthesisConfig};

    fn flat_line() -> Subbundle {
        Subbundle::from_json(r#"{"n":1,"m":1,"sections":[{"domain":"whole","components":["flat(x1)"]}]}"#).unwrap()
    }

    #[test]
    fn family_spans_itself() {
        let g = Subbundle::from_json(
            r#"{"n":1,"m":2,"sections":[{"domain":"whole","components":["1","x1"]},{"domain":"whole","components":["0","flat(x1)"]}]}"#,
        )
        .unwrap();
        let gens: Vec<Vec<SmoothExpr>> = g.family().iter().map(|s| s.components.clone()).collect();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 41).unwrap();
        let rep = spanning_check(&gens, &g, &grid, 1e-8, 1e-8, Exec::default()).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn flat_line_pipeline_and_negative_control() {
        let g = flat_line();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
        let gen = synthesize(&g, &SynthesisConfig::new(vec![[-1.0, 1.0]], 201)).unwrap();
        let rep = spanning_check(&gen.sections(), &g, &grid, 1e-8, 1e-8, Exec::default()).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_residual <= 1e-10);
        let rep = spanning_check(&[], &g, &grid, 1e-8, 1e-8, Exec::default()).unwrap();
        assert_eq!(rep.failed, 100);
        assert!(rep.to_csv().lines().count() == 202);
    }

    #[test]
    fn semicontinuity_and_fault_injection() {
        let g = flat_line();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
        let strat = stratify(&g, &grid, 1e-8, Exec::default()).unwrap();
        assert!(semicontinuity_check(&strat, &g, 1e-8, Exec::default()).unwrap().is_empty());
        let broken = strat.with_dim(150, 0);
        let v = semicontinuity_check(&broken, &g, 1e-8, Exec::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Fidelity { index: 150, .. }));
    }

    #[test]
    fn regular_points_exclude_the_origin_band() {
        let g = flat_line();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
        let strat = stratify(&g, &grid, 1e-8, Exec::default()).unwrap();
        let reg = regular_points(&strat);
        assert_eq!(reg.singular, vec![100, 101]);
        assert_eq!(reg.regular.len(), 199);
        let flat = stratify(&Subbundle::zero(1, 1), &grid, 1e-8, Exec::default()).unwrap();
        assert!(regular_points(&flat).singular.is_empty());
    }

    #[test]
    fn kernel_of_constant_covector() {
        let f = DualFamily::from_json(r#"{"n":2,"m":2,"sections":[{"domain":"whole","components":["1","0"]}]}"#).unwrap();
        let grid = GridSpec::new(&[[-1.0, 1.0], [-1.0, 1.0]], 5).unwrap();
        let gens: Vec<Vec<SmoothExpr>> = vec![vec![SmoothExpr::constant(2.0), SmoothExpr::zero()]];
        assert!(kernel_check(&gens, &f, &grid, 1e-8, Exec::default()).unwrap().pass);
        let wrong: Vec<Vec<SmoothExpr>> = vec![vec![SmoothExpr::zero(), SmoothExpr::one()]];
        assert!(!kernel_check(&wrong, &f, &grid, 1e-8, Exec::default()).unwrap().pass);
    }
}
