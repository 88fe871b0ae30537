//! Primal objective, its gradient, ball feasibility and the dual objective.

use crate::error::Result;
use crate::types::{axpy, dist, norm, Configuration, DualVector, ForceField, Instance};

/// Weighted sum of pairwise distances, `sum_{i<j} w(i,j) |p_i - p_j|`.
///
/// Defined for any configuration, feasible or not.
pub fn objective(inst: &Instance, cfg: &Configuration) -> Result<f64> {
    cfg.check_against(inst)?;
    Ok(inst
        .pairs()
        .map(|(i, j, w)| w * dist(cfg.point(i), cfg.point(j)))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `l(i) - |p_i|` per point; negative means outside the ball.
    pub slacks: Vec<f64>,
    /// Points with slack below `-tol`.
    pub violations: Vec<usize>,
}

/// Checks `|p_i| <= l(i) + tol` for every point.
pub fn feasibility(inst: &Instance, cfg: &Configuration, tol: f64) -> Result<FeasibilityReport> {
    cfg.check_against(inst)?;
    let slacks: Vec<f64> = cfg
        .points()
        .enumerate()
        .map(|(i, p)| inst.radius(i) - norm(p))
        .collect();
    let violations: Vec<usize> = slacks
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < -tol)
        .map(|(i, _)| i)
        .collect();
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        slacks,
        violations,
    })
}

/// Gradient of [`objective`] with respect to each point:
/// `f_i = sum_j w(i,j) (p_i - p_j) / |p_i - p_j|`.
///
/// A weighted pair of coincident points has no defined direction; it
/// contributes nothing and marks the field `degenerate`.
pub fn force_field(inst: &Instance, cfg: &Configuration) -> Result<ForceField> {
    cfg.check_against(inst)?;
    let dim = cfg.dim();
    let mut forces = vec![0.0; cfg.len() * dim];
    let mut degenerate = false;
    let mut unit = vec![0.0; dim];
    for (i, j, w) in inst.pairs() {
        let (pi, pj) = (cfg.point(i), cfg.point(j));
        let d = dist(pi, pj);
        if d == 0.0 {
            degenerate = true;
            continue;
        }
        for ((u, a), b) in unit.iter_mut().zip(pi).zip(pj) {
            *u = (a - b) / d;
        }
        axpy(w, &unit, &mut forces[i * dim..(i + 1) * dim]);
        axpy(-w, &unit, &mut forces[j * dim..(j + 1) * dim]);
    }
    Ok(ForceField {
        dim,
        forces,
        degenerate,
    })
}

/// The three square-rooted sums of the dual objective:
/// `sum_{i<j} w^2/(x_i x_j)`, `sum_i l(i)^2 x_i` and `sum_i x_i`.
///
/// The first is `+inf` when a positive weight meets a zero multiplier.
pub fn dual_factors(inst: &Instance, x: &DualVector) -> Result<(f64, f64, f64)> {
    x.check_against(inst)?;
    let xs = x.as_slice();
    let mut pair_sum = 0.0;
    for (i, j, w) in inst.pairs() {
        let denom = xs[i] * xs[j];
        if denom == 0.0 {
            pair_sum = f64::INFINITY;
            break;
        }
        pair_sum += w * w / denom;
    }
    let radius_sum = inst.radii().iter().zip(xs).map(|(l, v)| l * l * v).sum();
    Ok((pair_sum, radius_sum, x.sum()))
}

/// Dual objective `sqrt(sum w^2/(x_i x_j)) * sqrt(sum l^2 x_i) * sqrt(sum x_i)`.
///
/// Pairs with zero weight contribute nothing, even over zero multipliers.
/// Returns `f64::INFINITY` when a positive weight meets a zero multiplier.
pub fn dual_objective(inst: &Instance, x: &DualVector) -> Result<f64> {
    let (a, b, c) = dual_factors(inst, x)?;
    if a.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(a.sqrt() * b.sqrt() * c.sqrt())
}
