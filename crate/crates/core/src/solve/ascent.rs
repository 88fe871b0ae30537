use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::psd::{dykstra, radial_rescale};
use super::sdp::{sdp_value, sdp_value_and_supergradient};
use super::{factor_gram, finish, SolveParams, SolveResult};
use crate::error::Result;
use crate::eval::{force_field, objective};
use crate::types::{dist, dot, norm, Configuration, GramMatrix, Instance};

// inner Dykstra sweeps per trial step; the radial rescale restores exact
// feasibility afterwards
const PROJECTION_SWEEPS: usize = 30;
const MAX_BACKTRACKS: usize = 12;
const MAX_STALLS: usize = 25;
const JITTER: f64 = 1e-9;

struct LiftedRun {
    best: DMatrix<f64>,
    iterations: usize,
    trace: Vec<f64>,
}

fn random_start(inst: &Instance, bounds: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = inst.n();
    let lmax2 = bounds.iter().fold(0.0f64, |m, &b| m.max(b));
    let v = DMatrix::from_fn(n, n, |i, _| {
        let z: f64 = rng.sample(StandardNormal);
        0.1 * z * inst.radius(i) / (n as f64).sqrt()
    });
    let mut y = &v * v.transpose();
    for i in 0..n {
        if inst.radius(i) > 0.0 {
            y[(i, i)] += 1e-3 * lmax2;
        }
    }
    radial_rescale(&y, bounds)
}

fn lifted_ascent(inst: &Instance, params: &SolveParams, rng: &mut ChaCha8Rng) -> LiftedRun {
    let bounds: Vec<f64> = inst.radii().iter().map(|l| l * l).collect();
    let scale = bounds.iter().fold(0.0f64, |m, &b| m.max(b));
    let mut y = random_start(inst, &bounds, rng);
    let mut value = sdp_value(inst, &GramMatrix::from_symmetric_unchecked(y.clone()));
    let mut trace = vec![value];
    let proj_tol = 1e-12 * (1.0 + scale);
    let mut stalls = 0;
    let mut iterations = 0;
    for k in 1..=params.max_iters {
        iterations = k;
        let (_, g) =
            sdp_value_and_supergradient(inst, &GramMatrix::from_symmetric_unchecked(y.clone()));
        let gnorm = g.norm();
        if gnorm == 0.0 {
            break;
        }
        let dir = g / gnorm;
        let mut alpha = params.step_rule.step(scale, k);
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let trial = &y + &dir * alpha;
            let projected = dykstra(&trial, &bounds, proj_tol, PROJECTION_SWEEPS).matrix;
            let candidate = radial_rescale(&projected, &bounds);
            let v = sdp_value(
                inst,
                &GramMatrix::from_symmetric_unchecked(candidate.clone()),
            );
            if v > value {
                y = candidate;
                value = v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        trace.push(value);
        if accepted {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls >= MAX_STALLS {
                break;
            }
        }
    }
    LiftedRun {
        best: y,
        iterations,
        trace,
    }
}

fn pull_into_balls(inst: &Instance, cfg: &Configuration) -> Configuration {
    cfg.map_points(|i, p| {
        let r = norm(p);
        let l = inst.radius(i);
        if r > l {
            let s = if r > 0.0 { l / r } else { 0.0 };
            p.iter_mut().for_each(|c| *c *= s);
        }
    })
}

/// Separates weighted coincident pairs by a seeded perturbation of size
/// `1e-9 * max radius`; points with zero radius stay at the origin.
fn jitter_coincident(inst: &Instance, cfg: &Configuration, rng: &mut ChaCha8Rng) -> Configuration {
    let mut needs = vec![false; inst.n()];
    for (i, j, _) in inst.pairs() {
        if dist(cfg.point(i), cfg.point(j)) == 0.0 {
            needs[i] = true;
            needs[j] = true;
        }
    }
    if !needs.iter().any(|&b| b) {
        return cfg.clone();
    }
    let mag = JITTER * inst.max_radius();
    let moved = cfg.map_points(|i, p| {
        if needs[i] && inst.radius(i) > 0.0 {
            for c in p.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *c += mag * z;
            }
        }
    });
    pull_into_balls(inst, &moved)
}

fn stationarity(
    inst: &Instance,
    cfg: &Configuration,
    forces: &crate::types::ForceField,
    tol: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..inst.n() {
        let p = cfg.point(i);
        let f = forces.force(i);
        let r = norm(p);
        let off = if r < inst.radius(i) - tol || r == 0.0 {
            norm(f)
        } else {
            let xi = (dot(f, p) / (r * r)).max(0.0);
            f.iter()
                .zip(p)
                .map(|(a, b)| (a - xi * b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        worst = worst.max(off);
    }
    worst
}

fn ascent_with_rng(
    inst: &Instance,
    cfg0: &Configuration,
    params: &SolveParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Configuration, usize)> {
    cfg0.check_against(inst)?;
    if !inst.has_positive_weight() {
        return Ok((cfg0.clone(), 0));
    }
    let target = params.tol * (1.0 + inst.total_weight());
    let mut cfg = jitter_coincident(inst, &pull_into_balls(inst, cfg0), rng);
    let mut value = objective(inst, &cfg)?;
    let mut forces = force_field(inst, &cfg)?;
    let fmax = forces.forces().map(norm).fold(0.0f64, f64::max);
    let mut alpha = inst.max_radius() / (1.0 + fmax);
    let min_alpha = alpha * 1e-14;
    let mut iterations = 0;
    while iterations < params.max_iters {
        if !forces.degenerate && stationarity(inst, &cfg, &forces, params.tol) <= target {
            break;
        }
        iterations += 1;
        let step = cfg.map_points(|i, p| {
            for (c, f) in p.iter_mut().zip(forces.force(i)) {
                *c += alpha * f;
            }
        });
        let mut candidate = pull_into_balls(inst, &step);
        let mut cand_forces = force_field(inst, &candidate)?;
        if cand_forces.degenerate {
            candidate = jitter_coincident(inst, &candidate, rng);
            cand_forces = force_field(inst, &candidate)?;
        }
        let v = objective(inst, &candidate)?;
        if v >= value {
            let moved = candidate != cfg;
            cfg = candidate;
            forces = cand_forces;
            value = v;
            alpha *= 2.0;
            if !moved {
                break;
            }
        } else {
            alpha *= 0.5;
            if alpha < min_alpha {
                break;
            }
        }
    }
    Ok((cfg, iterations))
}

/// Projected gradient ascent in point space: step along the force field,
/// pull each point radially back into its ball, and keep the step only if
/// the objective does not decrease. Stops once the stationarity residual is
/// at most `params.tol * (1 + sum w)` or after `params.max_iters` steps.
pub fn local_ascent(
    inst: &Instance,
    cfg0: &Configuration,
    params: &SolveParams,
) -> Result<Configuration> {
    let mut rng = params.rng(u64::MAX);
    Ok(ascent_with_rng(inst, cfg0, params, &mut rng)?.0)
}

struct Restart {
    config: Configuration,
    value: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn run_restart(inst: &Instance, params: &SolveParams, index: usize) -> Result<Restart> {
    let mut rng = params.rng(index as u64);
    let lifted = lifted_ascent(inst, params, &mut rng);
    let factored = factor_gram(&GramMatrix::from_symmetric_unchecked(lifted.best), 1e-10)?;
    let factored = pull_into_balls(inst, &factored);
    let start = if params.reduce_rank {
        factored
    } else {
        factored.padded(inst.n())
    };
    let polish = SolveParams {
        tol: params.tol * 1e-3,
        max_iters: params.max_iters.max(20_000),
        ..params.clone()
    };
    let (config, polish_iters) = ascent_with_rng(inst, &start, &polish, &mut rng)?;
    let value = objective(inst, &config)?;
    Ok(Restart {
        config,
        value,
        iterations: lifted.iterations + polish_iters,
        trace: lifted.trace,
    })
}

/// Maximizes the primal objective.
///
/// Each restart runs projected supergradient ascent on the lifted concave
/// objective from a seeded random PSD start, factors the best matrix into
/// points, and polishes them with [`local_ascent`]. Restarts run in parallel
/// on independent random streams; the best value wins, ties going to the
/// lowest restart index, so the result does not depend on scheduling.
pub fn solve_primal(inst: &Instance, params: &SolveParams) -> Result<SolveResult> {
    params.validate()?;
    let runs: Vec<Restart> = (0..params.restarts)
        .into_par_iter()
        .map(|r| run_restart(inst, params, r))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = k;
        }
    }
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let winner = runs.into_iter().nth(best).expect("at least one restart");
    finish(inst, params, winner.config, iterations, winner.trace)
}
