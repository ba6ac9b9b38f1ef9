//! Small dense linear algebra: column-equilibrated SVD ranks, orthogonal
//! projectors, nullspaces, principal angles, and a Gram–Schmidt projector
//! that also runs over Taylor jets.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::scalar::Scalar;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("columns are linearly dependent")]
    Degenerate,
}

/// Orthogonal projection onto the span of `columns` (each of length `m`),
/// by modified Gram–Schmidt with one reorthogonalization pass.
///
/// Each column is first divided by its largest-magnitude value, which
/// leaves the span unchanged and keeps flat-small columns away from
/// underflow.
pub fn projection_matrix<T: Scalar>(columns: &[Vec<T>]) -> Result<Vec<Vec<T>>, ProjectionError> {
    let m = columns.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(columns.len());
    for col in columns {
        let scale = col.iter().map(|v| v.value().abs()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return Err(ProjectionError::Degenerate);
        }
        // split the reciprocal when 1/scale alone would overflow
        let (s1, s2) = if (1.0 / scale).is_finite() {
            (1.0 / scale, 1.0)
        } else {
            (2f64.powi(600), 1.0 / (scale * 2f64.powi(600)))
        };
        let mut v: Vec<T> = col.iter().map(|x| x.scale(s1).scale(s2)).collect();
        for _ in 0..2 {
            for q in &basis {
                let dot = dot(q, &v);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk = vk.sub(&qk.mul(&dot));
                }
            }
        }
        let norm_sq = dot(&v, &v);
        // scaled columns have norm ≥ 1
        if norm_sq.value() <= 1e-26 {
            return Err(ProjectionError::Degenerate);
        }
        let norm = norm_sq.sqrt();
        basis.push(v.iter().map(|x| x.div(&norm)).collect());
    }
    let zero = columns
        .first()
        .and_then(|c| c.first())
        .map(|x| x.constant_like(0.0));
    let Some(zero) = zero else {
        return Ok(Vec::new());
    };
    let mut p = vec![vec![zero; m]; m];
    for (r, row) in p.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            for q in &basis {
                *entry = entry.add(&q[r].mul(&q[c]));
            }
        }
    }
    Ok(p)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = a[0].mul(&b[0]);
    for (x, y) in a.iter().zip(b).skip(1) {
        acc = acc.add(&x.mul(y));
    }
    acc
}

/// Singular structure of a matrix after scaling each nonzero column to unit
/// norm; exactly zero columns are dropped.
#[derive(Debug, Clone)]
pub struct RankProfile {
    /// Descending singular values of the equilibrated matrix.
    pub singular_values: Vec<f64>,
    /// Full `m × m` orthogonal matrix of left singular vectors, columns in
    /// the order of `singular_values` (padded with a completion basis).
    pub left: DMatrix<f64>,
}

impl RankProfile {
    pub fn of_columns(matrix: &DMatrix<f64>) -> Self {
        let m = matrix.nrows();
        let kept: Vec<Vec<f64>> = matrix
            .column_iter()
            .filter_map(|c| unit_column(c.iter().copied()))
            .collect();
        let width = kept.len().max(m);
        let mut eq = DMatrix::<f64>::zeros(m, width);
        for (j, col) in kept.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                eq[(i, j)] = *v;
            }
        }
        if m == 0 {
            return Self {
                singular_values: Vec::new(),
                left: DMatrix::zeros(0, 0),
            };
        }
        let svd = eq.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let singular_values: Vec<f64> = order
            .iter()
            .take(kept.len().min(m))
            .map(|&i| svd.singular_values[i])
            .collect();
        let mut left = DMatrix::<f64>::zeros(m, m);
        for (dst, &src) in order.iter().enumerate().take(m) {
            left.set_column(dst, &u.column(src));
        }
        Self { singular_values, left }
    }

    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol · σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = tol * self.largest();
        if self.largest() == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Some singular value ratio lies within a factor 10 of `tol`.
    pub fn ambiguous(&self, tol: f64) -> bool {
        let top = self.largest();
        top > 0.0
            && self
                .singular_values
                .iter()
                .any(|&s| s / top > tol / 10.0 && s / top < tol * 10.0)
    }

    /// Smallest equilibrated singular value (0 when there are no columns).
    pub fn smallest(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// `m × r` orthonormal basis of the column space at rank cut `tol`.
    pub fn range_basis(&self, tol: f64) -> DMatrix<f64> {
        let r = self.rank(tol);
        self.left.columns(0, r).into_owned()
    }

    /// `m × (m − r)` orthonormal basis of the orthogonal complement.
    pub fn complement_basis(&self, tol: f64) -> DMatrix<f64> {
        let r = self.rank(tol);
        let m = self.left.nrows();
        self.left.columns(r, m - r).into_owned()
    }

    pub fn projector(&self, tol: f64) -> DMatrix<f64> {
        let b = self.range_basis(tol);
        &b * b.transpose()
    }
}

/// `values / ‖values‖` with underflow-safe scaling; `None` for a zero vector.
pub fn unit_column(values: impl Iterator<Item = f64> + Clone) -> Option<Vec<f64>> {
    let scale = values.clone().map(f64::abs).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let scaled: Vec<f64> = values.map(|v| v / scale).collect();
    let norm = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(scaled.into_iter().map(|v| v / norm).collect())
}

/// Orthonormal basis (`m × (m − r)`) of the nullspace of a `k × m` matrix
/// whose rows are covectors, from the right singular vectors of the
/// row-equilibrated matrix.
pub fn nullspace_of_rows(rows: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let m = rows.ncols();
    let kept: Vec<Vec<f64>> = rows
        .row_iter()
        .filter_map(|r| unit_column(r.iter().copied()))
        .collect();
    if kept.is_empty() {
        return DMatrix::identity(m, m);
    }
    let height = kept.len().max(m);
    let mut eq = DMatrix::<f64>::zeros(height, m);
    for (i, row) in kept.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            eq[(i, j)] = *v;
        }
    }
    let svd = eq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.max();
    let cut = tol * top;
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(m, null.len());
    for (dst, &i) in null.iter().enumerate() {
        basis.set_column(dst, &vt.row(i).transpose());
    }
    basis
}

/// Largest principal angle between the column spaces of two matrices with
/// orthonormal columns, via `sin θ_max = ‖(I − B Bᵀ) A‖₂`. Subspaces of
/// different dimension are at angle `π/2`.
pub fn largest_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let residual = a - b * (b.transpose() * a);
    let s = residual.singular_values().max();
    s.min(1.0).asin()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn projector_onto_diagonal() {
        let p = projection_matrix(&[vec![1.0, 1.0]]).unwrap();
        for row in &p {
            for v in row {
                assert_relative_eq!(*v, 0.5, max_relative = 1e-15);
            }
        }
        assert_eq!(projection_matrix(&[vec![1.0, 0.0], vec![2.0, 0.0]]), Err(ProjectionError::Degenerate));
        assert_eq!(projection_matrix(&[vec![0.0, 0.0]]), Err(ProjectionError::Degenerate));
    }

    #[test]
    fn flat_small_columns_keep_full_rank() {
        let tiny = (-50.0f64).exp();
        let p = projection_matrix(&[vec![1.0, 0.0], vec![0.0, tiny]]).unwrap();
        assert_eq!(p, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, tiny]);
        let prof = RankProfile::of_columns(&m);
        assert_eq!(prof.rank(1e-8), 2);
        assert!(!prof.ambiguous(1e-8));
    }

    #[test]
    fn zero_and_empty_matrices() {
        let empty = DMatrix::<f64>::zeros(3, 0);
        let prof = RankProfile::of_columns(&empty);
        assert_eq!(prof.rank(1e-8), 0);
        assert_eq!(prof.projector(1e-8), DMatrix::zeros(3, 3));
        assert_eq!(prof.complement_basis(1e-8).ncols(), 3);
        let zero = DMatrix::<f64>::zeros(1, 1);
        assert_eq!(RankProfile::of_columns(&zero).rank(1e-8), 0);
    }

    #[test]
    fn nullspace_and_angles() {
        let rows = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let n = nullspace_of_rows(&rows, 1e-8);
        assert_eq!(n.ncols(), 1);
        assert_relative_eq!(n[(0, 0)].abs(), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-14);
        assert_relative_eq!(n[(0, 0)], n[(1, 0)], max_relative = 1e-14);
        let axis = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_relative_eq!(largest_principal_angle(&axis, &axis), 0.0);
        let other = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_relative_eq!(largest_principal_angle(&axis, &other), std::f64::consts::FRAC_PI_2);
    }
}
