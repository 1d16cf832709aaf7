//! Level-convex envelopes, existence verdicts and explicit piecewise-affine
//! minimizers for scalar supremal problems
//! `inf { ess sup f(grad u) : u = u0 on the boundary }` in one and two dimensions.

pub mod convexity;
pub mod envelope;
pub mod error;
pub mod existence;
pub mod fields;
pub mod geometry;
pub mod inclusion;
pub mod oracle;
pub mod tol;

pub use convexity::{
    check_level_convex, danao_consistency, strict_at_point, strict_in_one_direction, strict_via_perturbation,
    strictness_report, StrictnessReport,
};
pub use envelope::{
    envelope_1d, envelope_caratheodory, envelope_levelsweep, lsc_envelope_grid, Certificate, EnvelopeMethod,
    EnvelopeResult, GridEnvelope,
};
pub use error::{Error, Result};
pub use existence::{
    decide_affine, decide_general, flatness_necessary_check, relaxed_value_affine, sweep, uniqueness_probe, Branch,
    Decider, Decision, ExistenceVerdict, Uniqueness,
};
pub use fields::{builtin, sample, AffineDatum, BoundaryDatum, Coercivity, Domain, Expr, GridSpec, ScalarField};
pub use geometry::{hull, ConvexBody, PointLocation};
pub use inclusion::{
    pyramid_cell, solve_P, vitali_fill, zigzag_1d, InclusionTarget, PiecewiseAffineFunction, SolveOptions, SolveReport,
    VitaliOptions,
};
pub use oracle::{audit_solution, jensen_audit, relaxed_min_1d, relaxed_min_2d, DescentOptions, MinimaxResult};
pub use tol::ToleranceConfig;
