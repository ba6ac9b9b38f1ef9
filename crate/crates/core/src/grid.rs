//! Regular grids over axis-aligned windows.
//!
//! Window bounds are held as rationals so grid points are exact rationals
//! (they seed frame balls); `f64` coordinates are derived from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{rational_from_f64, rational_to_f64, GeometryError, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("window must have at least one axis")]
    EmptyWindow,
    #[error("window axis {axis} is empty: [{lo}, {hi}]")]
    EmptyAxis { axis: usize, lo: f64, hi: f64 },
    #[error("grid needs at least 2 points per axis, got {0}")]
    TooCoarse(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `points` equally spaced samples per axis over `[lo, hi]`, endpoints
/// included. Indices are lexicographic with the first axis slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridJson", into = "GridJson")]
pub struct GridSpec {
    bounds: Vec<(Rational, Rational)>,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    window: Vec<[f64; 2]>,
    points: usize,
}

impl TryFrom<GridJson> for GridSpec {
    type Error = GridError;
    fn try_from(g: GridJson) -> Result<Self, GridError> {
        GridSpec::new(&g.window, g.points)
    }
}

impl From<GridSpec> for GridJson {
    fn from(g: GridSpec) -> Self {
        GridJson {
            window: g.window(),
            points: g.points,
        }
    }
}

impl GridSpec {
    pub fn new(window: &[[f64; 2]], points: usize) -> Result<Self, GridError> {
        if window.is_empty() {
            return Err(GridError::EmptyWindow);
        }
        if points < 2 {
            return Err(GridError::TooCoarse(points));
        }
        let mut bounds = Vec::with_capacity(window.len());
        for (axis, &[lo, hi]) in window.iter().enumerate() {
            if !(lo < hi) {
                return Err(GridError::EmptyAxis { axis, lo, hi });
            }
            bounds.push((rational_from_f64(lo)?, rational_from_f64(hi)?));
        }
        Ok(Self { bounds, points })
    }

    /// The same window at a different resolution.
    pub fn with_points(&self, points: usize) -> Result<Self, GridError> {
        if points < 2 {
            return Err(GridError::TooCoarse(points));
        }
        Ok(Self {
            bounds: self.bounds.clone(),
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn window(&self) -> Vec<[f64; 2]> {
        self.bounds
            .iter()
            .map(|(lo, hi)| [rational_to_f64(lo), rational_to_f64(hi)])
            .collect()
    }

    pub fn bounds(&self) -> &[(Rational, Rational)] {
        &self.bounds
    }

    pub fn step(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        rational_to_f64(&((hi - lo) / (self.points as i64 - 1)))
    }

    /// Largest distance between two window points.
    pub fn diameter(&self) -> f64 {
        self.window()
            .iter()
            .map(|[lo, hi]| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for slot in out.iter_mut().rev() {
            *slot = index % self.points;
            index /= self.points;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.points + k)
    }

    pub fn rational_point(&self, index: usize) -> Vec<Rational> {
        let last = self.points as i64 - 1;
        self.multi_index(index)
            .iter()
            .zip(&self.bounds)
            .map(|(&k, &(lo, hi))| lo + (hi - lo) * Rational::new(k as i64, last))
            .collect()
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.rational_point(index).iter().map(rational_to_f64).collect()
    }

    /// Indices of the grid points differing by at most one step on every
    /// axis, the point itself excluded.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let base = self.multi_index(index);
        let n = self.dim();
        let mut out = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut multi = Vec::with_capacity(n);
            let mut centre = true;
            let mut inside = true;
            for &b in &base {
                let off = (c % 3) as i64 - 1;
                c /= 3;
                centre &= off == 0;
                let k = b as i64 + off;
                inside &= k >= 0 && k < self.points as i64;
                multi.push(k.max(0) as usize);
            }
            if inside && !centre {
                out.push(self.flat_index(&multi));
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_exact_and_lexicographic() {
        let g = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.point(0), vec![-1.0]);
        assert_eq!(g.point(100), vec![0.0]);
        assert_eq!(g.point(200), vec![1.0]);
        assert_eq!(g.rational_point(101), vec![Rational::new(1, 100)]);
        let g2 = GridSpec::new(&[[-1.0, 1.0], [0.0, 2.0]], 3).unwrap();
        assert_eq!(g2.point(1), vec![-1.0, 1.0]);
        assert_eq!(g2.point(3), vec![0.0, 0.0]);
        assert_eq!(g2.flat_index(&g2.multi_index(7)), 7);
    }

    #[test]
    fn neighbors_are_clipped() {
        let g = GridSpec::new(&[[0.0, 1.0], [0.0, 1.0]], 3).unwrap();
        assert_eq!(g.neighbors(0), vec![1, 3, 4]);
        assert_eq!(g.neighbors(4).len(), 8);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(matches!(GridSpec::new(&[[1.0, 1.0]], 5), Err(GridError::EmptyAxis { .. })));
        assert!(matches!(GridSpec::new(&[[0.0, 1.0]], 1), Err(GridError::TooCoarse(1))));
        assert!(matches!(GridSpec::new(&[], 5), Err(GridError::EmptyWindow)));
    }

    #[test]
    fn json_round_trip() {
        let g = GridSpec::new(&[[-0.5, 0.25]], 11).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GridSpec>(&text).unwrap(), g);
    }
}
