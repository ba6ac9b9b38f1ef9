//! Constructive global generators for smooth generalized subbundles of the
//! trivial bundle `ℝⁿ × ℝᵐ`.
//!
//! The crate covers the whole pipeline: a small expression language for
//! smooth functions (including the flat function `e^{-1/x}` and its
//! derivatives), fiber-wise linear algebra for families of local sections,
//! the projection-field / bump-function synthesis of finitely many global
//! generators, an independent verification harness, and the certificate
//! machinery showing that the ideal of flat functions on an interval is not
//! finitely generated.

// Expression constructors are smart constructors, not operator impls, and
// `!(a < b)` comparisons are deliberate NaN rejections.
#![allow(clippy::should_implement_trait, clippy::redundant_guards, clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod bundle;
pub mod counterexample;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod par;
pub mod sampling;
pub mod synthesis;
pub mod verify;

pub use ball::{Ball, Rational};
pub use bundle::{Domain, DualFamily, LocalSection, Subbundle};
pub use expr::{parse, EvalError, ParseError, Point, SmoothExpr};
pub use grid::GridSpec;
pub use par::Exec;
pub use synthesis::{GeneratorSet, Mode, SynthesisConfig, SynthesisError};
