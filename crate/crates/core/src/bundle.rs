//! Generalized subbundles of the trivial bundle `ℝⁿ × ℝᵐ`, given as the
//! pointwise span of a finite family of local sections, and their dual
//! counterparts given by families of covector fields.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{format_rational, parse_rational, Ball, GeometryError};
use crate::expr::{parse, EvalError, ParseError, Point, SmoothExpr};
use crate::linalg::{largest_principal_angle, nullspace_of_rows, RankProfile};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("invalid bundle JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("section {section}, component {component}: {source}")]
    Expression {
        section: usize,
        component: usize,
        #[source]
        source: ParseError,
    },
    #[error("section {section}: {source}")]
    Domain {
        section: usize,
        #[source]
        source: GeometryError,
    },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("vector is not in the fiber (residual {residual:.3e})")]
    NotInFiber { residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Whole,
    Ball(Ball),
}

impl Domain {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Domain::Whole => true,
            Domain::Ball(b) => b.contains(p),
        }
    }

    /// Whether the closed ball `b` lies inside the domain.
    pub fn contains_closed(&self, b: &Ball) -> bool {
        match self {
            Domain::Whole => true,
            Domain::Ball(d) => d.contains_ball(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSection {
    pub domain: Domain,
    pub components: Vec<SmoothExpr>,
}

impl LocalSection {
    pub fn global(components: Vec<SmoothExpr>) -> Self {
        Self {
            domain: Domain::Whole,
            components,
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.eval_at(p)).collect()
    }
}

/// `G = span(family)` inside `ℝⁿ × ℝᵐ`. An empty family is the zero
/// subbundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbundle {
    n: usize,
    m: usize,
    family: Vec<LocalSection>,
}

/// Result of a rank computation on a fiber matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberRank {
    pub dim: usize,
    pub ambiguous: bool,
}

/// Coefficients over the family members active at the point.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionWitness {
    pub members: Vec<usize>,
    pub coefficients: Vec<f64>,
}

impl Subbundle {
    pub fn new(n: usize, m: usize, family: Vec<LocalSection>) -> Result<Self, BundleError> {
        if n == 0 || m == 0 {
            return Err(BundleError::Shape(format!("need n ≥ 1 and m ≥ 1, got n={n}, m={m}")));
        }
        for (i, s) in family.iter().enumerate() {
            if s.components.len() != m {
                return Err(BundleError::Shape(format!(
                    "section {i} has {} components, expected {m}",
                    s.components.len()
                )));
            }
            if let Some(v) = s.components.iter().filter_map(SmoothExpr::max_var).max() {
                if v >= n {
                    return Err(BundleError::Shape(format!("section {i} uses x{} but n={n}", v + 1)));
                }
            }
            if let Domain::Ball(b) = &s.domain {
                if b.dim() != n {
                    return Err(BundleError::Shape(format!("section {i} domain has dimension {}", b.dim())));
                }
            }
        }
        Ok(Self { n, m, family })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            family: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn family(&self) -> &[LocalSection] {
        &self.family
    }

    /// Family members whose (open) domain contains `p`, in family order.
    pub fn active(&self, p: &[f64]) -> Vec<usize> {
        (0..self.family.len())
            .filter(|&i| self.family[i].domain.contains(p))
            .collect()
    }

    /// `m × k` matrix of the active section values at `p`.
    pub fn fiber_matrix(&self, p: &Point) -> Result<DMatrix<f64>, BundleError> {
        self.dimension_check(p)?;
        Ok(self.fiber_columns(p.coords())?.1)
    }

    pub(crate) fn fiber_columns(&self, p: &[f64]) -> Result<(Vec<usize>, DMatrix<f64>), EvalError> {
        let active = self.active(p);
        let mut mat = DMatrix::zeros(self.m, active.len());
        for (j, &i) in active.iter().enumerate() {
            for (r, c) in self.family[i].components.iter().enumerate() {
                mat[(r, j)] = c.eval_at(p)?;
            }
        }
        Ok((active, mat))
    }

    fn dimension_check(&self, p: &Point) -> Result<(), BundleError> {
        if p.dim() != self.n {
            return Err(EvalError::DimensionMismatch {
                needed: self.n,
                got: p.dim(),
            }
            .into());
        }
        Ok(())
    }

    pub fn fiber_dim(&self, p: &Point, tol: f64) -> Result<usize, BundleError> {
        Ok(self.fiber_rank(p, tol)?.dim)
    }

    pub fn fiber_rank(&self, p: &Point, tol: f64) -> Result<FiberRank, BundleError> {
        self.dimension_check(p)?;
        Ok(self.fiber_rank_at(p.coords(), tol)?)
    }

    pub(crate) fn fiber_rank_at(&self, p: &[f64], tol: f64) -> Result<FiberRank, EvalError> {
        let (_, mat) = self.fiber_columns(p)?;
        let prof = RankProfile::of_columns(&mat);
        Ok(FiberRank {
            dim: prof.rank(tol),
            ambiguous: prof.ambiguous(tol),
        })
    }

    /// Orthogonal projection `Q_p` onto `G_p`.
    pub fn oracle_projection(&self, p: &Point, tol: f64) -> Result<DMatrix<f64>, BundleError> {
        self.dimension_check(p)?;
        Ok(self.projection_at(p.coords(), tol)?)
    }

    pub(crate) fn projection_at(&self, p: &[f64], tol: f64) -> Result<DMatrix<f64>, EvalError> {
        let (_, mat) = self.fiber_columns(p)?;
        Ok(RankProfile::of_columns(&mat).projector(tol))
    }

    /// Minimum-norm coefficients `c` (in column-equilibrated coordinates)
    /// with `Σ c_j s_j(p) = v`.
    pub fn section_through(&self, p: &Point, v: &[f64], tol: f64) -> Result<SectionWitness, BundleError> {
        self.dimension_check(p)?;
        if v.len() != self.m {
            return Err(BundleError::Shape(format!("vector has length {}, expected {}", v.len(), self.m)));
        }
        let (members, mat) = self.fiber_columns(p.coords())?;
        let target = DVector::from_column_slice(v);
        let k = members.len();
        let mut coefficients = vec![0.0; k];
        let norms: Vec<f64> = mat
            .column_iter()
            .map(|c| {
                let s = c.amax();
                if s == 0.0 {
                    0.0
                } else {
                    s * (c / s).norm()
                }
            })
            .collect();
        let nonzero: Vec<usize> = (0..k).filter(|&j| norms[j] > 0.0).collect();
        if !nonzero.is_empty() {
            let eq = DMatrix::from_fn(self.m, nonzero.len(), |r, c| mat[(r, nonzero[c])] / norms[nonzero[c]]);
            let svd = eq.svd(true, true);
            let top = svd.singular_values.max();
            let u = svd.u.as_ref().expect("U");
            let vt = svd.v_t.as_ref().expect("V^T");
            let mut y = DVector::zeros(nonzero.len());
            for (i, &s) in svd.singular_values.iter().enumerate() {
                if s > tol * top {
                    let w = u.column(i).dot(&target) / s;
                    y += vt.row(i).transpose() * w;
                }
            }
            for (c, &j) in nonzero.iter().enumerate() {
                coefficients[j] = y[c] / norms[j];
            }
        }
        let fitted = &mat * DVector::from_column_slice(&coefficients);
        let residual = (fitted - &target).norm();
        if residual > tol * target.norm().max(1.0) {
            return Err(BundleError::NotInFiber { residual });
        }
        Ok(SectionWitness { members, coefficients })
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, BundleError> {
        let raw: BundleJson = serde_json::from_value(value)?;
        let mut family = Vec::with_capacity(raw.sections.len());
        for (i, s) in raw.sections.into_iter().enumerate() {
            let domain = match s.domain {
                DomainJson::Whole(tag) if tag == "whole" => Domain::Whole,
                DomainJson::Whole(tag) => {
                    return Err(BundleError::Shape(format!("section {i}: unknown domain `{tag}`")));
                }
                DomainJson::Ball { center, radius } => {
                    let geom = |e| BundleError::Domain { section: i, source: e };
                    let center = center.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>, _>>().map_err(geom)?;
                    let radius = parse_rational(&radius).map_err(geom)?;
                    Domain::Ball(Ball::new(center, radius).map_err(geom)?)
                }
            };
            let components = s
                .components
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    parse(c, raw.n).map_err(|source| BundleError::Expression {
                        section: i,
                        component: j,
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            family.push(LocalSection { domain, components });
        }
        Self::new(raw.n, raw.m, family)
    }

    pub fn to_value(&self) -> serde_json::Value {
        let sections = self
            .family
            .iter()
            .map(|s| SectionJson {
                domain: match &s.domain {
                    Domain::Whole => DomainJson::Whole("whole".into()),
                    Domain::Ball(b) => DomainJson::Ball {
                        center: b.center().iter().map(format_rational).collect(),
                        radius: format_rational(&b.radius()),
                    },
                },
                components: s.components.iter().map(ToString::to_string).collect(),
            })
            .collect();
        serde_json::to_value(BundleJson {
            n: self.n,
            m: self.m,
            sections,
        })
        .expect("bundle JSON")
    }
}

#[derive(Serialize, Deserialize)]
struct BundleJson {
    n: usize,
    m: usize,
    sections: Vec<SectionJson>,
}

#[derive(Serialize, Deserialize)]
struct SectionJson {
    domain: DomainJson,
    components: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DomainJson {
    Whole(String),
    Ball { center: Vec<String>, radius: String },
}

/// A family of covector fields; component `j` is the coefficient of `dx_j`
/// in the fiber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFamily(Subbundle);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub dim_span: usize,
    pub dim_ann: usize,
    pub principal_angle: f64,
    pub pass: bool,
}

impl DualFamily {
    pub fn new(n: usize, m: usize, family: Vec<LocalSection>) -> Result<Self, BundleError> {
        Subbundle::new(n, m, family).map(Self)
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        Subbundle::from_json(text).map(Self)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, BundleError> {
        Subbundle::from_value(value).map(Self)
    }

    /// The same data read as sections of the dual trivial bundle.
    pub fn as_subbundle(&self) -> &Subbundle {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0.m
    }

    /// `k × m` matrix whose rows are the active covector values.
    fn covector_rows(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        Ok(self.0.fiber_columns(p)?.1.transpose())
    }

    /// Orthonormal basis (as columns) of `ann(F)_p`.
    pub fn annihilator_fiber(&self, p: &Point, tol: f64) -> Result<DMatrix<f64>, BundleError> {
        self.0.dimension_check(p)?;
        Ok(nullspace_of_rows(&self.covector_rows(p.coords())?, tol))
    }

    /// Compares `ann(F)_p` with the orthogonal complement of `span(F)_p`.
    pub fn duality_check(&self, p: &Point, tol: f64) -> Result<DualityReport, BundleError> {
        self.0.dimension_check(p)?;
        let rows = self.covector_rows(p.coords())?;
        let ann = nullspace_of_rows(&rows, tol);
        let prof = RankProfile::of_columns(&rows.transpose());
        let complement = prof.complement_basis(tol);
        let dim_span = prof.rank(tol);
        let dim_ann = ann.ncols();
        let principal_angle = largest_principal_angle(&ann, &complement);
        Ok(DualityReport {
            dim_span,
            dim_ann,
            principal_angle,
            pass: dim_span + dim_ann == self.m() && principal_angle <= tol,
        })
    }
}
