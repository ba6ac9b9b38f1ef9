use nalgebra::DMatrix;

use crate::ball::{rational_to_f64, Ball, Rational};
use crate::bundle::Subbundle;
use crate::expr::{EvalError, ProjEntry, SmoothExpr};
use crate::linalg::{projection_matrix, to_dmatrix, unit_column, RankProfile};
use crate::sampling::{quasi_random_ball, SampleStream};

use super::SynthesisError;

/// Family members that stay linearly independent on the double of a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub ball: Ball,
    pub stratum: usize,
    pub members: Vec<usize>,
    /// Member components; `columns[j]` is member `j` as an `m`-vector.
    pub columns: Vec<Vec<SmoothExpr>>,
    /// Smallest sampled singular value of the column-normalized member
    /// matrix over the closed double ball.
    pub min_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions {
    pub tol: f64,
    pub theta: f64,
    pub samples: usize,
    pub seed: u64,
    /// Radius to start the search from (a power of two).
    pub max_radius: Rational,
}

/// Finest radius lattice step, `2⁻¹⁶`.
pub fn radius_quantum() -> Rational {
    Rational::new(1, 1 << 16)
}

/// Smallest power of two at least `x` (and at least 1/2¹⁶).
pub fn power_of_two_at_least(x: f64) -> Rational {
    let mut r = radius_quantum();
    while rational_to_f64(&r) < x {
        r *= 2;
    }
    r
}

/// Greedy pivoting on normalized columns: repeatedly takes the column with
/// the largest residual relative to its own norm and projects it out of
/// the rest. Returns column positions in selection order.
pub fn select_members(mat: &DMatrix<f64>, d: usize) -> Vec<usize> {
    let mut residual: Vec<Option<Vec<f64>>> = mat.column_iter().map(|c| unit_column(c.iter().copied())).collect();
    let mut chosen = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for (j, r) in residual.iter().enumerate() {
            if let Some(r) = r {
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if best.is_none_or(|(_, b)| norm > b) {
                    best = Some((j, norm));
                }
            }
        }
        let Some((j, norm)) = best else { break };
        if norm == 0.0 {
            break;
        }
        let q: Vec<f64> = residual[j].take().expect("selected").iter().map(|v| v / norm).collect();
        for r in residual.iter_mut().flatten() {
            let dot: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (a, b) in r.iter_mut().zip(&q) {
                *a -= dot * b;
            }
        }
        chosen.push(j);
    }
    chosen
}

/// Smallest singular value of the column-normalized matrix of `columns`
/// at `q`; `None` if a column vanishes or is too small to normalize.
fn normalized_sigma_min(columns: &[Vec<SmoothExpr>], q: &[f64]) -> Result<Option<f64>, EvalError> {
    let m = columns[0].len();
    let mut mat = DMatrix::zeros(m, columns.len());
    for (j, col) in columns.iter().enumerate() {
        for (r, e) in col.iter().enumerate() {
            mat[(r, j)] = e.eval_at(q)?;
        }
        let scale = mat.column(j).amax();
        if !(scale >= 1e-300) || !scale.is_finite() {
            return Ok(None);
        }
    }
    Ok(Some(RankProfile::of_columns(&mat).smallest()))
}

/// Sampled lower estimate of the normalized `σ_min` over the closed double
/// of `ball`, or `None` if the members leave their domains or degenerate.
fn certify(
    g: &Subbundle,
    members: &[usize],
    columns: &[Vec<SmoothExpr>],
    ball: &Ball,
    opts: &FrameOptions,
    counter: u64,
) -> Result<Option<f64>, EvalError> {
    let double = ball.doubled();
    if members.iter().any(|&i| !g.family()[i].domain.contains_closed(&double)) {
        return Ok(None);
    }
    let c = double.center_f64();
    let r = double.radius_f64();
    let mut points = vec![c.clone()];
    for axis in 0..c.len() {
        for sign in [-1.0, 1.0] {
            let mut p = c.clone();
            p[axis] += sign * r;
            points.push(p);
        }
    }
    let mut stream = SampleStream::new(opts.seed, "frame", counter);
    points.extend(quasi_random_ball(&mut stream, &c, r, opts.samples));
    let mut worst = f64::INFINITY;
    for p in &points {
        match normalized_sigma_min(columns, p)? {
            Some(s) if s >= opts.theta => worst = worst.min(s),
            _ => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// Frame at the rational point `center`, with the largest certified radius
/// found by halving from `max_radius` and bisecting on the `2⁻¹⁶` lattice.
pub fn local_frame(
    g: &Subbundle,
    center: &[Rational],
    opts: &FrameOptions,
    counter: u64,
) -> Result<Frame, SynthesisError> {
    let p: Vec<f64> = center.iter().map(rational_to_f64).collect();
    let (active, mat) = g.fiber_columns(&p)?;
    let prof = RankProfile::of_columns(&mat);
    let d = prof.rank(opts.tol);
    if d == 0 {
        return Err(SynthesisError::ZeroFiber { point: p });
    }
    let picked = select_members(&mat, d);
    if picked.len() < d {
        return Err(SynthesisError::CoverFailure { point: p, d });
    }
    let members: Vec<usize> = picked.iter().map(|&j| active[j]).collect();
    let columns: Vec<Vec<SmoothExpr>> = members.iter().map(|&i| g.family()[i].components.clone()).collect();
    let ball_of = |r: Rational| Ball::new(center.to_vec(), r).expect("positive radius");
    let try_radius = |r: Rational| certify(g, &members, &columns, &ball_of(r), opts, counter);

    let quantum = radius_quantum();
    let mut r = opts.max_radius;
    let (mut lo, mut sigma) = loop {
        if let Some(s) = try_radius(r)? {
            break (r, s);
        }
        if r <= quantum {
            return Err(SynthesisError::FrameNotFound { point: p });
        }
        r /= 2;
    };
    if lo < opts.max_radius {
        let mut hi = lo * 2;
        while hi - lo > quantum {
            let mid = (lo + hi) / 2;
            match try_radius(mid)? {
                Some(s) => {
                    lo = mid;
                    sigma = s;
                }
                None => hi = mid,
            }
        }
    }
    Ok(Frame {
        ball: ball_of(lo),
        stratum: d,
        members,
        columns,
        min_sigma: sigma,
    })
}

/// `q ↦ P(q)`, the orthogonal projection onto the span of a frame's members.
#[derive(Debug, Clone)]
pub struct ProjectionField {
    frame: Frame,
    theta: f64,
}

impl ProjectionField {
    pub fn new(frame: &Frame, theta: f64) -> Self {
        Self {
            frame: frame.clone(),
            theta,
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// `P(q)`; fails if the normalized member matrix has `σ_min < θ/10`.
    pub fn eval(&self, q: &[f64]) -> Result<DMatrix<f64>, SynthesisError> {
        let sigma = normalized_sigma_min(&self.frame.columns, q)?.unwrap_or(0.0);
        if sigma < self.theta / 10.0 {
            return Err(SynthesisError::IllConditioned {
                point: q.to_vec(),
                sigma,
            });
        }
        let values: Vec<Vec<f64>> = self
            .frame
            .columns
            .iter()
            .map(|col| col.iter().map(|e| e.eval_at(q)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let p = projection_matrix(&values).map_err(|_| SynthesisError::IllConditioned {
            point: q.to_vec(),
            sigma,
        })?;
        Ok(to_dmatrix(&p))
    }

    /// Entry `(row, col)` as an expression supported on the double ball.
    pub fn entry_expr(&self, row: usize, col: usize) -> SmoothExpr {
        SmoothExpr::proj(ProjEntry {
            row,
            col,
            support: self.frame.ball.doubled(),
            columns: std::sync::Arc::new(self.frame.columns.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> FrameOptions {
        FrameOptions {
            tol: 1e-8,
            theta: 1e-3,
            samples: 200,
            seed: 0,
            max_radius: Rational::from_integer(4),
        }
    }

    fn bundle(json: &str) -> Subbundle {
        Subbundle::from_json(json).unwrap()
    }

    #[test]
    fn flat_line_frame_avoids_the_flat_half_line() {
        let g = bundle(r#"{"n":1,"m":1,"sections":[{"domain":"whole","components":["flat(x1)"]}]}"#);
        let f = local_frame(&g, &[Rational::new(1, 2)], &opts(), 0).unwrap();
        assert_eq!(f.members, vec![0]);
        let r = f.ball.radius_f64();
        assert!(0.5 - 2.0 * r > 0.0 && 0.5 + 2.0 * r < 1.5);
        let field = ProjectionField::new(&f, 1e-3);
        assert_eq!(field.eval(&[0.5]).unwrap(), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn duplicates_are_discarded() {
        let g = bundle(
            r#"{"n":1,"m":2,"sections":[{"domain":"whole","components":["1","0"]},{"domain":"whole","components":["1","0"]}]}"#,
        );
        let f = local_frame(&g, &[Rational::from_integer(0)], &opts(), 0).unwrap();
        assert_eq!(f.members, vec![0]);
        assert_eq!(f.ball.radius(), Rational::from_integer(4));
        let field = ProjectionField::new(&f, 1e-3);
        assert_eq!(field.eval(&[3.0]).unwrap(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn planar_frame_radius_is_bounded_by_the_boundary() {
        let g = bundle(
            r#"{"n":2,"m":2,"sections":[{"domain":"whole","components":["1","0"]},
               {"domain":"whole","components":["0","flat(x1)"]}]}"#,
        );
        let f = local_frame(&g, &[Rational::new(1, 2), Rational::from_integer(0)], &opts(), 0).unwrap();
        assert_eq!(f.members, vec![0, 1]);
        assert!(f.ball.radius() <= Rational::new(1, 4));
        let field = ProjectionField::new(&f, 1e-3);
        let p = field.eval(&[0.5, 0.2]).unwrap();
        assert!((p - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn pivot_prefers_larger_relative_residual_and_lowest_index() {
        let mat = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(select_members(&mat, 2), vec![0, 2]);
        let zero_first = DMatrix::from_row_slice(1, 2, &[0.0, 3.0]);
        assert_eq!(select_members(&zero_first, 1), vec![1]);
    }

    #[test]
    fn ball_domains_bound_the_radius() {
        let g = bundle(r#"{"n":1,"m":1,"sections":[{"domain":{"center":["0"],"radius":"1"},"components":["1"]}]}"#);
        let f = local_frame(&g, &[Rational::from_integer(0)], &opts(), 0).unwrap();
        assert!(f.ball.radius() < Rational::new(1, 2));
        assert!(f.ball.radius() >= Rational::new(1, 2) - radius_quantum());
    }
}
