//! Weighted max-dispersion: place `n` points, point `i` in the ball of
//! radius `l(i)` about the origin, to maximize `sum_{i<j} w(i,j) |p_i - p_j|`.
//!
//! The crate evaluates the objective, its gradient and the companion dual
//! bound `sqrt(sum w^2/(x_i x_j)) sqrt(sum l^2 x) sqrt(sum x)`
//! ([`eval`]); builds weak- and strong-duality certificates ([`certify`]);
//! solves the primal through its Gram-matrix lifting and the dual in log
//! coordinates ([`solve`]); and rounds unit-ball solutions to graph cuts
//! ([`maxcut`]).
//!
//! ```
//! use dispersion_core::{certify, simplex_configuration, Instance, Verdict};
//!
//! let inst = Instance::uniform(4, 1.0, 1.0).unwrap();
//! let cert = certify(&inst, &simplex_configuration(4).unwrap(), None, 1e-8).unwrap();
//! assert_eq!(cert.verdict, Verdict::StrongCertificate);
//! assert!((cert.primal_value - 4.0 * 6f64.sqrt()).abs() < 1e-12);
//! ```

pub mod certify;
pub mod error;
pub mod eval;
pub mod maxcut;
pub mod solve;
pub mod types;

pub use certify::{
    affine_independence, certify, extract_dual, relative_gap, stationarity_residual,
    weak_duality_breakdown, weight_consistency_residual, AffineIndependence, Certificate,
    DualExtraction, Verdict, WeakDualityBreakdown,
};
pub use error::{Error, Result, ValidationErrors, Violation};
pub use eval::{dual_objective, feasibility, force_field, objective, FeasibilityReport};
pub use maxcut::{brute_force_maxcut, graph_to_instance, hyperplane_round, Cut, Graph, Rounding};
pub use solve::{
    ellipsoid_solve, factor_gram, feasible_project, local_ascent, minimize_dual, psd_project,
    sdp_value_and_supergradient, separation_oracle, simplex_configuration, solve_primal,
    DualSolution, Separation, SolveParams, SolveResult, SolveStatus, StepRule,
};
pub use types::{
    validate_instance, Configuration, DualVector, ForceField, GramMatrix, Instance, RawInstance,
};
