//! Zero-order stochastic convex optimization.
//!
//! The crate implements stochastic mirror descent driven by two-point
//! function-difference gradient estimates, for both smooth objectives and
//! general Lipschitz (non-smooth) ones. Alongside the optimizer it ships the
//! smoothing distributions with their closed-form moments, a library of
//! benchmark problems with exact optima (including the lower-bound hard
//! instances), and Monte-Carlo diagnostics that check the estimator and
//! moment bounds the convergence guarantees rely on.
//!
//! Module map:
//!
//! * [`geometry`]: proximal functions, Bregman divergences, the mirror step.
//! * [`smoothing`]: perturbation laws, moment oracles, `s(d)` and `M`.
//! * [`estimators`]: two-point, m-point and double-smoothed estimators.
//! * [`problems`]: benchmark objectives and closed-form optima.
//! * [`optimizer`]: schedules, the mirror-descent driver, bound formulas.
//! * [`harness`]: sweeps, CSV, rate fitting, lower bounds, lemma checks.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod smoothing;
pub mod vector;

pub use error::{Result, ZoError};
pub use estimators::{EstimatorConfig, GradEstimate};
pub use geometry::{Ball, Domain, ProxGeometry};
pub use optimizer::{RunRecord, Schedule, ScheduleFamily};
pub use problems::{NormTag, Problem};
pub use smoothing::{GeometryConstants, SmoothingDistribution, SmoothingKind};
