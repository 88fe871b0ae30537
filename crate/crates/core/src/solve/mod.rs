//! Solvers for the primal and dual problems.
//!
//! The primal is lifted to Gram-matrix space, where the objective is concave
//! and the feasible set is `{Y PSD, Y_ii <= l(i)^2}`. The default backend is
//! projected supergradient ascent there, followed by factorization and a
//! point-space polish; an ellipsoid-method backend driven by the separation
//! oracle is available for small instances.

mod ascent;
mod dual;
mod ellipsoid;
mod psd;
mod sdp;
mod simplex;

pub use ascent::{local_ascent, solve_primal};
pub use dual::{minimize_dual, DualSolution, UNATTAINED_SPREAD};
pub use ellipsoid::{ellipsoid_solve, ELLIPSOID_MAX_N};
pub use psd::{
    factor_gram, feasible_project, psd_project, separation_oracle, LinearCut, Separation,
    DYKSTRA_MAX_ITERS,
};
pub use sdp::{sdp_value, sdp_value_and_supergradient};
pub use simplex::simplex_configuration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certify::{certify, relative_gap, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::eval::objective;
use crate::types::{Configuration, DualVector, GramMatrix, Instance};

/// Diminishing step schedule for the lifted ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `c / sqrt(k)`
    #[default]
    InvSqrt,
    /// `c / k`
    Harmonic,
}

impl StepRule {
    pub(crate) fn step(self, c: f64, k: usize) -> f64 {
        let k = k.max(1) as f64;
        match self {
            StepRule::InvSqrt => c / k.sqrt(),
            StepRule::Harmonic => c / k,
        }
    }
}

impl std::str::FromStr for StepRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inv-sqrt" => Ok(StepRule::InvSqrt),
            "harmonic" => Ok(StepRule::Harmonic),
            other => Err(format!("unknown step rule {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    /// Relative duality-gap target.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub restarts: usize,
    pub step_rule: StepRule,
    /// Keep the factored dimension instead of padding points to dimension `n`.
    pub reduce_rank: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 2000,
            seed: 0,
            restarts: 1,
            step_rule: StepRule::InvSqrt,
            reduce_rank: false,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Parameter("restarts must be at least 1".into()));
        }
        Ok(())
    }

    /// Generator for restart `stream`, independent of every other stream.
    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Relative gap between primal value and dual bound is within `tol`.
    Certified,
    /// The configuration is stationary but not affinely independent (or a
    /// pinned point blocks multiplier extraction), so the gap cannot be
    /// closed by a certificate.
    HypothesesUnmet,
    /// Iteration caps reached before either of the above.
    NotConverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Certified => "certified",
            SolveStatus::HypothesesUnmet => "hypotheses-unmet",
            SolveStatus::NotConverged => "not-converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub gram: GramMatrix,
    pub config: Configuration,
    pub primal_value: f64,
    /// Smallest dual value found; an upper bound on the optimum.
    pub dual_bound: f64,
    /// Multipliers attaining `dual_bound`.
    pub dual_x: DualVector,
    pub certificate: Certificate,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Best-so-far lifted objective after each ascent iteration of the
    /// winning restart.
    pub trace: Vec<f64>,
}

impl SolveResult {
    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.primal_value, self.dual_bound)
    }
}

/// Certifies `config`, tightens the dual bound with [`minimize_dual`] when the
/// extracted multipliers do not close the gap, and classifies the outcome.
pub(crate) fn finish(
    inst: &Instance,
    params: &SolveParams,
    config: Configuration,
    iterations: usize,
    trace: Vec<f64>,
) -> Result<SolveResult> {
    let primal_value = objective(inst, &config)?;
    let certificate = certify(inst, &config, None, params.tol)?;
    let mut dual_bound = certificate.dual_value;
    let mut dual_x = certificate.x.clone();
    if certificate.verdict != Verdict::StrongCertificate {
        let d = minimize_dual(inst, params)?;
        if d.value < dual_bound {
            dual_bound = d.value;
            dual_x = d.x;
        }
    }
    let stationary = certificate.stationarity_residual <= params.tol * (1.0 + inst.total_weight());
    let status = if relative_gap(primal_value, dual_bound) <= params.tol {
        SolveStatus::Certified
    } else if stationary && (!certificate.affinely_independent || certificate.degenerate)
        || certificate
            .reasons
            .iter()
            .any(|r| r.starts_with("no multiplier"))
    {
        SolveStatus::HypothesesUnmet
    } else {
        SolveStatus::NotConverged
    };
    Ok(SolveResult {
        gram: config.gram(),
        config,
        primal_value,
        dual_bound,
        dual_x,
        certificate,
        iterations,
        converged: status != SolveStatus::NotConverged,
        status,
        trace,
    })
}
