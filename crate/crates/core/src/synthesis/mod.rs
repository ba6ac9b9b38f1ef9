//! Stratification, local frames, projection fields, bumps, weights and the
//! assembly of finitely many global generators.

mod bump;
mod frame;
mod seminorm;
mod stratify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{format_rational, parse_rational, rational_to_f64, Ball, GeometryError};
use crate::bundle::{DualFamily, Subbundle};
use crate::expr::{parse, EvalError, ParseError, SmoothExpr};
use crate::grid::{GridError, GridSpec};
use crate::par::Exec;

pub use bump::{bump, BumpSpec};
pub use frame::{local_frame, power_of_two_at_least, radius_quantum, select_members, Frame, FrameOptions, ProjectionField};
pub use seminorm::{seminorm, weights, weights_from_norms, Mode, SeminormEstimate, WeightItem, WeightReport, SEMINORM_ORDER_BUDGET};
pub use stratify::{stratify, StratumInfo, StratumMap, StratumSummary};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("grid has dimension {got}, bundle base has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fiber is zero at {point:?}")]
    ZeroFiber { point: Vec<f64> },
    #[error("no certified frame radius at {point:?}")]
    FrameNotFound { point: Vec<f64> },
    #[error("cannot cover stratum {d} at {point:?}")]
    CoverFailure { point: Vec<f64>, d: usize },
    #[error("projection field is ill-conditioned at {point:?} (normalized sigma_min {sigma:.3e})")]
    IllConditioned { point: Vec<f64>, sigma: f64 },
    #[error("seminorm order {order} exceeds the derivative budget {budget}")]
    BudgetExceeded { order: usize, budget: usize },
    #[error("invalid generator JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("generator expression `{text}`: {source}")]
    Expression {
        text: String,
        #[source]
        source: ParseError,
    },
}

fn default_tol() -> f64 {
    1e-8
}
fn default_theta() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    200
}
fn default_k_max() -> usize {
    SEMINORM_ORDER_BUDGET
}
fn default_safety() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub window: Vec<[f64; 2]>,
    /// Points per axis.
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_theta")]
    pub theta_frame: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Points per axis for seminorm estimates; chosen by dimension if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorm_grid: Option<usize>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl SynthesisConfig {
    pub fn new(window: Vec<[f64; 2]>, grid: usize) -> Self {
        Self {
            window,
            grid,
            tol: default_tol(),
            theta_frame: default_theta(),
            mode: Mode::Finite,
            samples: default_samples(),
            seed: 0,
            k_max: default_k_max(),
            seminorm_grid: None,
            safety: default_safety(),
            exec: Exec::default(),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec, GridError> {
        GridSpec::new(&self.window, self.grid)
    }

    fn seminorm_points(&self, n: usize) -> usize {
        self.seminorm_grid.unwrap_or(match n {
            1 => 4001,
            2 => 201,
            3 => 41,
            _ => 21,
        })
    }
}

/// One cover ball: its frame, bump and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverEntry {
    pub frame: Frame,
    pub bump: SmoothExpr,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumGenerators {
    pub d: usize,
    /// `φ_d = Σ_i φ_i` over this stratum's balls.
    pub phi: SmoothExpr,
    /// `S_{d,α}`, `α = 1..m`, each an `m`-vector.
    pub generators: Vec<Vec<SmoothExpr>>,
    pub cover: Vec<CoverEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub n: usize,
    pub m: usize,
    pub mode: Mode,
    pub k_max: usize,
    pub strata: Vec<StratumGenerators>,
    /// Seminorm data behind the weights (countable mode only).
    pub weight_report: Option<WeightReport>,
}

impl GeneratorSet {
    /// All generators, strata in ascending order.
    pub fn sections(&self) -> Vec<Vec<SmoothExpr>> {
        self.strata.iter().flat_map(|s| s.generators.iter().cloned()).collect()
    }

    pub fn count(&self) -> usize {
        self.strata.iter().map(|s| s.generators.len()).sum()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.strata.iter().flat_map(|s| s.cover.iter().map(|c| &c.frame))
    }

    /// All generators except the one at `index` (a negative control).
    pub fn without_generator(&self, index: usize) -> Vec<Vec<SmoothExpr>> {
        let mut all = self.sections();
        all.remove(index);
        all
    }

    pub fn to_json(&self) -> String {
        let strata = self
            .strata
            .iter()
            .map(|s| StratumJson {
                d: s.d,
                phi: s.phi.to_string(),
                generators: s.generators.iter().map(|g| g.iter().map(ToString::to_string).collect()).collect(),
                cover: s
                    .cover
                    .iter()
                    .map(|c| CoverJson {
                        center: c.frame.ball.center().iter().map(format_rational).collect(),
                        radius: format_rational(&c.frame.ball.radius()),
                        members: c.frame.members.clone(),
                        min_sigma: c.frame.min_sigma,
                        weight: c.weight,
                        bump: c.bump.to_string(),
                        columns: c.frame.columns.iter().map(|g| g.iter().map(ToString::to_string).collect()).collect(),
                    })
                    .collect(),
            })
            .collect();
        let doc = GeneratorSetJson {
            n: self.n,
            m: self.m,
            mode: self.mode,
            k_max: self.k_max,
            count: self.count(),
            strata,
            weights: self.weight_report.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("generator JSON")
    }

    pub fn from_json(text: &str) -> Result<Self, SynthesisError> {
        let doc: GeneratorSetJson = serde_json::from_str(text)?;
        let n = doc.n;
        let expr = |t: &str| {
            parse(t, n).map_err(|source| SynthesisError::Expression {
                text: t.to_string(),
                source,
            })
        };
        let vector = |v: &[String]| v.iter().map(|t| expr(t)).collect::<Result<Vec<_>, _>>();
        let mut strata = Vec::with_capacity(doc.strata.len());
        for s in doc.strata {
            let mut cover = Vec::with_capacity(s.cover.len());
            for c in s.cover {
                let center = c.center.iter().map(|t| parse_rational(t)).collect::<Result<Vec<_>, _>>()?;
                let ball = Ball::new(center, parse_rational(&c.radius)?)?;
                cover.push(CoverEntry {
                    frame: Frame {
                        ball,
                        stratum: s.d,
                        members: c.members,
                        columns: c.columns.iter().map(|col| vector(col)).collect::<Result<_, _>>()?,
                        min_sigma: c.min_sigma,
                    },
                    bump: expr(&c.bump)?,
                    weight: c.weight,
                });
            }
            strata.push(StratumGenerators {
                d: s.d,
                phi: expr(&s.phi)?,
                generators: s.generators.iter().map(|g| vector(g)).collect::<Result<_, _>>()?,
                cover,
            });
        }
        Ok(Self {
            n,
            m: doc.m,
            mode: doc.mode,
            k_max: doc.k_max,
            strata,
            weight_report: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GeneratorSetJson {
    n: usize,
    m: usize,
    mode: Mode,
    k_max: usize,
    count: usize,
    strata: Vec<StratumJson>,
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    weights: Option<WeightReport>,
}

#[derive(Serialize, Deserialize)]
struct StratumJson {
    d: usize,
    phi: String,
    generators: Vec<Vec<String>>,
    cover: Vec<CoverJson>,
}

#[derive(Serialize, Deserialize)]
struct CoverJson {
    center: Vec<String>,
    radius: String,
    members: Vec<usize>,
    min_sigma: f64,
    weight: f64,
    bump: String,
    columns: Vec<Vec<String>>,
}

/// Greedy cover of the grid points of stratum `d` (lexicographic order) by
/// frame balls.
fn cover_stratum(
    g: &Subbundle,
    strat: &StratumMap,
    d: usize,
    opts: &FrameOptions,
) -> Result<Vec<Frame>, SynthesisError> {
    let grid = strat.grid();
    let mut frames: Vec<Frame> = Vec::new();
    for idx in strat.indices_of(d) {
        let p = grid.point(idx);
        if frames.iter().any(|f| f.ball.contains(&p)) {
            continue;
        }
        let frame = local_frame(g, &grid.rational_point(idx), opts, idx as u64)?;
        if frame.stratum != d || !frame.ball.contains(&p) {
            return Err(SynthesisError::CoverFailure { point: p, d });
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Grid over the bounding box of the double of `ball`.
fn support_grid(ball: &Ball, points: usize) -> Result<GridSpec, GridError> {
    let r = 2.0 * ball.radius_f64();
    let window: Vec<[f64; 2]> = ball.center().iter().map(rational_to_f64).map(|c| [c - r, c + r]).collect();
    GridSpec::new(&window, points)
}

/// Builds `S_{d,α} = Σ_i φ_i P_i E_α` and `φ_d` for every stratum met by
/// the grid.
pub fn synthesize(g: &Subbundle, config: &SynthesisConfig) -> Result<GeneratorSet, SynthesisError> {
    let grid = config.grid_spec()?;
    let strat = stratify(g, &grid, config.tol, config.exec)?;
    let opts = FrameOptions {
        tol: config.tol,
        theta: config.theta_frame,
        samples: config.samples,
        seed: config.seed,
        max_radius: power_of_two_at_least(grid.diameter()),
    };
    let mut covers: Vec<(usize, Vec<Frame>)> = Vec::new();
    for d in 1..=strat.maxdim() {
        if strat.indices_of(d).is_empty() {
            continue;
        }
        covers.push((d, cover_stratum(g, &strat, d, &opts)?));
    }

    let m = g.m();
    let fields: Vec<Vec<ProjectionField>> = covers
        .iter()
        .map(|(_, frames)| frames.iter().map(|f| ProjectionField::new(f, config.theta_frame)).collect())
        .collect();
    let bumps: Vec<Vec<BumpSpec>> = covers
        .iter()
        .map(|(_, frames)| frames.iter().map(|f| bump(&f.ball)).collect())
        .collect();

    let weight_report = if config.mode == Mode::Countable {
        let points = config.seminorm_points(g.n());
        let mut items = Vec::new();
        for (s, (_, frames)) in covers.iter().enumerate() {
            for (i, frame) in frames.iter().enumerate() {
                let b = &bumps[s][i].expr;
                let sections = (0..m)
                    .map(|alpha| {
                        (0..m)
                            .map(|r| SmoothExpr::mul(b.clone(), fields[s][i].entry_expr(r, alpha)))
                            .collect()
                    })
                    .collect();
                items.push(WeightItem {
                    bump: b.clone(),
                    sections,
                    grid: support_grid(&frame.ball, points)?,
                });
            }
        }
        Some(weights(&items, Mode::Countable, config.k_max, config.safety, config.exec)?)
    } else {
        None
    };

    let mut strata = Vec::with_capacity(covers.len());
    let mut global = 0usize;
    for (s, (d, frames)) in covers.iter().enumerate() {
        let mut cover = Vec::with_capacity(frames.len());
        let mut phis = Vec::with_capacity(frames.len());
        for (i, frame) in frames.iter().enumerate() {
            let weight = weight_report.as_ref().map_or(1.0, |w| w.weights[global]);
            global += 1;
            let phi = SmoothExpr::mul(SmoothExpr::constant(weight), bumps[s][i].expr.clone());
            phis.push(phi);
            cover.push(CoverEntry {
                frame: frame.clone(),
                bump: bumps[s][i].expr.clone(),
                weight,
            });
        }
        let generators = (0..m)
            .map(|alpha| {
                (0..m)
                    .map(|r| {
                        SmoothExpr::sum(
                            phis.iter()
                                .zip(&fields[s])
                                .map(|(phi, field)| SmoothExpr::mul(phi.clone(), field.entry_expr(r, alpha))),
                        )
                    })
                    .collect()
            })
            .collect();
        strata.push(StratumGenerators {
            d: *d,
            phi: SmoothExpr::sum(phis),
            generators,
            cover,
        });
    }
    Ok(GeneratorSet {
        n: g.n(),
        m,
        mode: config.mode,
        k_max: config.k_max,
        strata,
        weight_report,
    })
}

/// Covector generators whose common kernel is `ann(F)`.
pub fn cut_out_cosmooth(f: &DualFamily, config: &SynthesisConfig) -> Result<GeneratorSet, SynthesisError> {
    synthesize(f.as_subbundle(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_line() -> Subbundle {
        Subbundle::from_json(r#"{"n":1,"m":1,"sections":[{"domain":"whole","components":["flat(x1)"]}]}"#).unwrap()
    }

    #[test]
    fn flat_line_yields_one_generator() {
        let config = SynthesisConfig::new(vec![[-1.0, 1.0]], 201);
        let gen = synthesize(&flat_line(), &config).unwrap();
        assert_eq!(gen.count(), 1);
        let s = &gen.sections()[0][0];
        for x in [-1.0, -0.3, 0.0] {
            assert_eq!(s.eval_at(&[x]).unwrap(), 0.0);
        }
        for k in 1..=100 {
            let x = k as f64 / 100.0;
            assert!(s.eval_at(&[x]).unwrap() > 0.0, "x={x}");
        }
        for x in [0.01, 0.5, 1.0] {
            assert!(gen.strata[0].phi.eval_at(&[x]).unwrap() > 0.0);
        }
    }

    #[test]
    fn zero_bundle_has_no_generators() {
        let config = SynthesisConfig::new(vec![[-1.0, 1.0]], 11);
        let gen = synthesize(&Subbundle::zero(1, 2), &config).unwrap();
        assert_eq!(gen.count(), 0);
        assert!(gen.strata.is_empty());
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let config = SynthesisConfig::new(vec![[-1.0, 1.0]], 21);
        let gen = synthesize(&flat_line(), &config).unwrap();
        let text = gen.to_json();
        let back = GeneratorSet::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        for x in [-0.5, 0.05, 0.3, 0.77] {
            assert_eq!(
                back.sections()[0][0].eval_at(&[x]).unwrap(),
                gen.sections()[0][0].eval_at(&[x]).unwrap()
            );
        }
    }

    #[test]
    fn config_defaults() {
        let c: SynthesisConfig = serde_json::from_str(r#"{"window":[[-1,1]],"grid":201}"#).unwrap();
        assert_eq!(c, SynthesisConfig::new(vec![[-1.0, 1.0]], 201));
        let c: SynthesisConfig = serde_json::from_str(
            r#"{"window":[[-1,1]],"grid":5,"tol":1e-6,"theta_frame":0.01,"mode":"countable","samples":10}"#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Countable);
        assert_eq!(c.samples, 10);
    }
}
