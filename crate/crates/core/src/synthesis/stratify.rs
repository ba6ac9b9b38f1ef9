use serde::Serialize;

use crate::bundle::Subbundle;
use crate::grid::GridSpec;
use crate::par::Exec;

use super::SynthesisError;

/// Fiber dimension at every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumMap {
    grid: GridSpec,
    dims: Vec<usize>,
    ambiguous: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumInfo {
    pub d: usize,
    pub count: usize,
    pub representatives: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumSummary {
    pub grid: GridSpec,
    pub maxdim: usize,
    pub ambiguous_count: usize,
    pub strata: Vec<StratumInfo>,
}

const REPRESENTATIVES: usize = 5;

impl StratumMap {
    pub fn new(grid: GridSpec, dims: Vec<usize>, ambiguous: Vec<bool>) -> Self {
        assert_eq!(grid.len(), dims.len());
        assert_eq!(grid.len(), ambiguous.len());
        Self { grid, dims, ambiguous }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim_at(&self, index: usize) -> usize {
        self.dims[index]
    }

    pub fn is_ambiguous(&self, index: usize) -> bool {
        self.ambiguous[index]
    }

    pub fn maxdim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    /// Grid indices in stratum `d`, ascending.
    pub fn indices_of(&self, d: usize) -> Vec<usize> {
        (0..self.dims.len()).filter(|&i| self.dims[i] == d).collect()
    }

    /// Copy with one entry replaced.
    pub fn with_dim(&self, index: usize, d: usize) -> Self {
        let mut out = self.clone();
        out.dims[index] = d;
        out
    }

    pub fn summary(&self) -> StratumSummary {
        let maxdim = self.maxdim();
        let strata = (0..=maxdim)
            .filter_map(|d| {
                let idx = self.indices_of(d);
                (!idx.is_empty()).then(|| StratumInfo {
                    d,
                    count: idx.len(),
                    representatives: idx.iter().take(REPRESENTATIVES).map(|&i| self.grid.point(i)).collect(),
                })
            })
            .collect();
        StratumSummary {
            grid: self.grid.clone(),
            maxdim,
            ambiguous_count: self.ambiguous.iter().filter(|&&a| a).count(),
            strata,
        }
    }

    /// CSV with header `x1,…,xn,dim,ambiguous`.
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim();
        let mut out: String = (1..=n).map(|i| format!("x{i},")).collect();
        out.push_str("dim,ambiguous\n");
        for i in 0..self.dims.len() {
            for c in self.grid.point(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{}\n", self.dims[i], self.ambiguous[i]));
        }
        out
    }
}

pub fn stratify(g: &Subbundle, grid: &GridSpec, tol: f64, exec: Exec) -> Result<StratumMap, SynthesisError> {
    if grid.dim() != g.n() {
        return Err(SynthesisError::DimensionMismatch {
            expected: g.n(),
            got: grid.dim(),
        });
    }
    let ranks = exec.try_map(grid.len(), |i| g.fiber_rank_at(&grid.point(i), tol))?;
    Ok(StratumMap::new(
        grid.clone(),
        ranks.iter().map(|r| r.dim).collect(),
        ranks.iter().map(|r| r.ambiguous).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Subbundle;

    #[test]
    fn flat_line_strata_split_at_origin() {
        let g = Subbundle::from_json(r#"{"n":1,"m":1,"sections":[{"domain":"whole","components":["flat(x1)"]}]}"#).unwrap();
        let grid = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
        let map = stratify(&g, &grid, 1e-8, Exec::default()).unwrap();
        for i in 0..201 {
            let x = grid.point(i)[0];
            assert_eq!(map.dim_at(i), usize::from(x > 0.0), "x={x}");
        }
        let s = map.summary();
        assert_eq!(s.maxdim, 1);
        assert_eq!(s.strata.iter().map(|t| (t.d, t.count)).collect::<Vec<_>>(), vec![(0, 101), (1, 100)]);
        assert!(map.to_csv().starts_with("x1,dim,ambiguous\n-1,0,false\n"));
    }

    #[test]
    fn zero_bundle_is_all_zero() {
        let grid = GridSpec::new(&[[-1.0, 1.0], [-1.0, 1.0]], 5).unwrap();
        let map = stratify(&Subbundle::zero(2, 2), &grid, 1e-8, Exec::Sequential).unwrap();
        assert!(map.dims().iter().all(|&d| d == 0));
        assert!(stratify(&Subbundle::zero(1, 2), &grid, 1e-8, Exec::Sequential).is_err());
    }
}
