//! Smooth scalar expressions over `ℝⁿ`.
//!
//! Text grammar (whitespace-insensitive, left-associative):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' nonneg-int)?
//! base   := number | 'x'int | func '(' expr ')' | '(' expr ')'
//!         | 'flatd' '(' int ',' expr ')'
//!         | 'proj' '(' int ',' int ';' '[' rat (',' rat)* ']' ',' rat (';' '[' expr (',' expr)* ']')+ ')'
//!         | 'partial' '(' '[' int (',' int)* ']' ';' expr ')'
//! func   := exp | sin | cos | flat
//! ```
//!
//! Variables are `x1..xn` in text and zero-based in the Rust API.
//! `flat(u)` is `ψ(u)` with `ψ(x) = e^{-1/x}` for `x > 0` and `0` otherwise;
//! `flatd(j, u)` is its `j`-th derivative. `proj` is one entry of the
//! orthogonal projection onto the span of the listed columns, active on the
//! given open ball and zero outside it. `partial` is a mixed partial
//! derivative of its body, evaluated through truncated Taylor arithmetic.

mod ast;
mod diff;
mod eval;
pub mod flat;
pub mod jet;
mod parse;
mod print;
pub mod scalar;

pub use ast::{Node, Point, PointError, ProjEntry, SmoothExpr};
pub use eval::{EvalError, LogValue};
pub use flat::{flat_eval, FLAT_ORDER_CAP};
pub use parse::{parse, ParseError, ParseErrorKind};
