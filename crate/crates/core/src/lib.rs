//! Self-affine functions defined by a de Rham functional equation.
//!
//! A [`SelfAffineSystem`] fixes similitudes `S_1, …, S_m` of `R^d`, a partition
//! of `[0, 1]` into intervals `I_i` of lengths `c_i`, and orientation bits. The
//! associated function is the unique continuous `f` with `f(0) = 0`,
//! `f(1) = e_1` and `f(t) = S_i(f(φ_i⁻¹(t)))` on each `I_i`.
//!
//! Modules:
//! - [`system`], [`preset`]: construction and validation.
//! - [`coding`]: digit addresses of points.
//! - [`evaluator`]: values, curve samples, oscillations.
//! - [`spectrum`]: the analytic multifractal spectrum.
//! - [`holder`]: pointwise exponents, differentiability, time subordination.
//! - [`oracle`]: formula-free estimators for cross-checking.

pub mod coding;
pub mod evaluator;
pub mod holder;
pub mod numeric;
pub mod oracle;
pub mod preset;
pub mod spectrum;
pub mod system;

pub use coding::{BasicInterval, Coding, CodingError, DigitStats, StandardCoding};
pub use evaluator::{CurveSample, Evaluation, Evaluator};
pub use holder::{Classification, DifferentiabilityCase, HolderCase, HolderResult, HolderValue, Subordination};
pub use preset::MeasureSpec;
pub use spectrum::{ProbabilityVector, Spectrum, SpectrumProfile};
pub use system::{SelfAffineSystem, Similitude, SystemError, ValidationReport, Violation};
