//! Weak- and strong-duality certificates.
//!
//! Any feasible configuration and nonnegative multiplier vector bound the
//! optimum from both sides. A configuration that is stationary (each force is
//! a nonnegative multiple of its point, zero for interior points) and
//! affinely independent closes the gap; the multipliers are then the force
//! magnitudes divided by the point norms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::eval::{dual_factors, dual_objective, feasibility, force_field, objective};
use crate::types::{dist, dot, norm, Configuration, DualVector, ForceField, Instance};

/// Tolerance used to decide whether a configuration lies in its balls before
/// the weak-duality chain is evaluated.
pub const CHAIN_FEASIBILITY_TOL: f64 = 1e-9;

/// Every intermediate quantity of the weak-duality argument for one
/// `(configuration, multipliers)` pair.
///
/// The chain is
/// `primal_value <= cauchy_schwarz_rhs <= dual_value` and
/// `quad_lhs <= quad_mid <= quad_rhs`, where
/// `quad_rhs - quad_mid` equals `residual_vector_norm^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakDualityBreakdown {
    pub primal_value: f64,
    /// `sqrt(sum w^2/(x_i x_j)) * sqrt(quad_lhs)`.
    pub cauchy_schwarz_rhs: f64,
    /// `sum_{i<j} x_i x_j d^2(p_i, p_j)`.
    pub quad_lhs: f64,
    /// `sum_{i,j} x_i x_j (l(i)^2 - p_i . p_j)`.
    pub quad_mid: f64,
    /// `(sum x_i) (sum l(i)^2 x_i)`.
    pub quad_rhs: f64,
    /// `|sum_i x_i p_i|`.
    pub residual_vector_norm: f64,
    pub dual_value: f64,
}

impl WeakDualityBreakdown {
    /// True when both chains are ordered up to `rel` relative slack.
    pub fn is_ordered(&self, rel: f64) -> bool {
        let le = |a: f64, b: f64| a <= b + rel * b.abs().max(a.abs()).max(1.0);
        le(self.primal_value, self.cauchy_schwarz_rhs)
            && le(self.cauchy_schwarz_rhs, self.dual_value)
            && le(self.quad_lhs, self.quad_mid)
            && le(self.quad_mid, self.quad_rhs)
    }
}

/// Evaluates the weak-duality inequality chain by direct summation.
///
/// Fails on configurations outside their balls (beyond
/// [`CHAIN_FEASIBILITY_TOL`]). An infinite dual value is reported as such.
pub fn weak_duality_breakdown(
    inst: &Instance,
    cfg: &Configuration,
    x: &DualVector,
) -> Result<WeakDualityBreakdown> {
    let feas = feasibility(inst, cfg, CHAIN_FEASIBILITY_TOL)?;
    if !feas.feasible {
        return Err(Error::Infeasible(feas.violations));
    }
    x.check_against(inst)?;
    let n = inst.n();
    let xs = x.as_slice();
    let primal_value = objective(inst, cfg)?;

    let mut quad_lhs = 0.0;
    let mut quad_mid = 0.0;
    for i in 0..n {
        let li2 = inst.radius(i).powi(2);
        for j in 0..n {
            let xx = xs[i] * xs[j];
            quad_mid += xx * (li2 - dot(cfg.point(i), cfg.point(j)));
            if i < j {
                quad_lhs += xx * dist(cfg.point(i), cfg.point(j)).powi(2);
            }
        }
    }
    let (pair_sum, radius_sum, x_sum) = dual_factors(inst, x)?;
    let quad_rhs = x_sum * radius_sum;

    let mut weighted = vec![0.0; cfg.dim()];
    for (p, &xi) in cfg.points().zip(xs) {
        for (acc, c) in weighted.iter_mut().zip(p) {
            *acc += xi * c;
        }
    }

    let cauchy_schwarz_rhs = if pair_sum.is_infinite() {
        f64::INFINITY
    } else {
        pair_sum.sqrt() * quad_lhs.max(0.0).sqrt()
    };
    Ok(WeakDualityBreakdown {
        primal_value,
        cauchy_schwarz_rhs,
        quad_lhs,
        quad_mid,
        quad_rhs,
        residual_vector_norm: norm(&weighted),
        dual_value: dual_objective(inst, x)?,
    })
}

/// Multipliers read off a configuration's force field.
#[derive(Debug, Clone, PartialEq)]
pub struct DualExtraction {
    pub x: DualVector,
    /// `max_i |f_i - x_i p_i|`.
    pub stationarity_residual: f64,
}

struct Extraction {
    x: Vec<f64>,
    residual: f64,
    unextractable: Vec<usize>,
}

fn extract_from_forces(
    inst: &Instance,
    cfg: &Configuration,
    forces: &ForceField,
    tol: f64,
) -> Extraction {
    let n = inst.n();
    let mut x = vec![0.0; n];
    let mut residual: f64 = 0.0;
    let mut unextractable = Vec::new();
    for i in 0..n {
        let p = cfg.point(i);
        let f = forces.force(i);
        let r = norm(p);
        if r < inst.radius(i) - tol {
            // inactive constraint: the force itself must vanish
            residual = residual.max(norm(f));
        } else if r > 0.0 {
            let xi = (dot(f, p) / (r * r)).max(0.0);
            x[i] = xi;
            let off: f64 = f
                .iter()
                .zip(p)
                .map(|(fc, pc)| (fc - xi * pc).powi(2))
                .sum::<f64>()
                .sqrt();
            residual = residual.max(off);
        } else {
            // pinned at the origin by a zero radius
            let fnorm = norm(f);
            if fnorm > tol {
                unextractable.push(i);
            }
            residual = residual.max(fnorm);
        }
    }
    Extraction {
        x,
        residual,
        unextractable,
    }
}

/// Recovers multipliers `x_i = (f_i . p_i) / |p_i|^2` from the force field,
/// with `x_i = 0` for points strictly inside their ball (by more than `tol`).
///
/// Negative projections are clamped to zero; the mismatch shows up in the
/// residual. Fails on degenerate configurations and on points pinned at the
/// origin that feel a nonzero force.
pub fn extract_dual(inst: &Instance, cfg: &Configuration, tol: f64) -> Result<DualExtraction> {
    let feas = feasibility(inst, cfg, tol)?;
    if !feas.feasible {
        return Err(Error::Infeasible(feas.violations));
    }
    let forces = force_field(inst, cfg)?;
    if forces.degenerate {
        return Err(Error::Degenerate);
    }
    let e = extract_from_forces(inst, cfg, &forces, tol);
    if !e.unextractable.is_empty() {
        return Err(Error::Unextractable(e.unextractable));
    }
    Ok(DualExtraction {
        x: DualVector::new(e.x)?,
        stationarity_residual: e.residual,
    })
}

/// Stationarity residual of `(cfg, x)`: the larger of `max_i |f_i - x_i p_i|`
/// and `max |f_i|` over points strictly inside their ball.
pub fn stationarity_residual(
    inst: &Instance,
    cfg: &Configuration,
    x: &DualVector,
    tol: f64,
) -> Result<f64> {
    x.check_against(inst)?;
    let forces = force_field(inst, cfg)?;
    Ok(residual_for(inst, cfg, &forces, x.as_slice(), tol))
}

fn residual_for(
    inst: &Instance,
    cfg: &Configuration,
    forces: &ForceField,
    xs: &[f64],
    tol: f64,
) -> f64 {
    let mut residual: f64 = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        let p = cfg.point(i);
        let f = forces.force(i);
        let off: f64 = f
            .iter()
            .zip(p)
            .map(|(fc, pc)| (fc - xi * pc).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(off);
        if norm(p) < inst.radius(i) - tol {
            residual = residual.max(norm(f));
        }
    }
    residual
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineIndependence {
    pub independent: bool,
    /// Numeric rank of the difference vectors `p_i - p_n`.
    pub rank: usize,
}

/// Affine independence via the singular values of the `n-1` difference
/// vectors to the last point; a singular value counts when it exceeds
/// `tol` times the largest one.
pub fn affine_independence(cfg: &Configuration, tol: f64) -> AffineIndependence {
    let n = cfg.len();
    if n <= 1 {
        return AffineIndependence {
            independent: true,
            rank: 0,
        };
    }
    let base = cfg.point(n - 1);
    let diffs = DMatrix::from_fn(n - 1, cfg.dim(), |i, k| cfg.point(i)[k] - base[k]);
    let sv = diffs.singular_values();
    let smax = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    let rank = if smax > 0.0 {
        sv.iter().filter(|&&s| s > tol * smax).count()
    } else {
        0
    };
    AffineIndependence {
        independent: rank == n - 1,
        rank,
    }
}

/// Largest deviation `|w(i,j) - x_i x_j d(p_i,p_j) / sum_k x_k|` over all
/// pairs, zero-weight pairs included.
pub fn weight_consistency_residual(
    inst: &Instance,
    cfg: &Configuration,
    x: &DualVector,
) -> Result<f64> {
    cfg.check_against(inst)?;
    x.check_against(inst)?;
    let total = x.sum();
    if total <= 0.0 {
        return Err(Error::ZeroDualSum);
    }
    let xs = x.as_slice();
    let n = inst.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let implied = xs[i] * xs[j] * dist(cfg.point(i), cfg.point(j)) / total;
            worst = worst.max((inst.weight(i, j) - implied).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Primal and dual values agree: the configuration is a global optimum.
    StrongCertificate,
    /// The dual value is an upper bound, but optimality is not established.
    WeakBoundOnly,
    /// The configuration violates its ball constraints.
    Invalid,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StrongCertificate => "strong-certificate",
            Verdict::WeakBoundOnly => "weak-bound-only",
            Verdict::Invalid => "invalid",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strong-certificate" => Ok(Verdict::StrongCertificate),
            "weak-bound-only" => Ok(Verdict::WeakBoundOnly),
            "invalid" => Ok(Verdict::Invalid),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub primal_value: f64,
    pub dual_value: f64,
    /// `dual_value - primal_value`.
    pub gap: f64,
    pub relative_gap: f64,
    pub stationarity_residual: f64,
    pub affinely_independent: bool,
    pub affine_rank: usize,
    /// Zero multipliers make the weight-recovery formula read `w = 0`, so with
    /// `sum x = 0` this is the largest weight.
    pub weight_consistency_residual: f64,
    pub degenerate: bool,
    pub verdict: Verdict,
    /// Multipliers the dual value was evaluated at.
    pub x: DualVector,
    /// Why the verdict is not a strong certificate, if it is not.
    pub reasons: Vec<String>,
}

/// `(dual - primal) / max(|dual|, |primal|)`, zero when both vanish.
pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    let gap = dual - primal;
    if gap == 0.0 {
        return 0.0;
    }
    let scale = dual.abs().max(primal.abs());
    if scale == 0.0 {
        0.0
    } else {
        gap / scale
    }
}

/// Assembles a duality certificate for `cfg`.
///
/// Without `x`, multipliers are extracted from the force field. The verdict
/// is strong only when the stationarity residual is at most
/// `tol * (1 + sum w)`, the points are affinely independent, and the
/// relative gap is at most `tol`.
pub fn certify(
    inst: &Instance,
    cfg: &Configuration,
    x: Option<&DualVector>,
    tol: f64,
) -> Result<Certificate> {
    cfg.check_against(inst)?;
    if let Some(x) = x {
        x.check_against(inst)?;
    }
    let mut reasons = Vec::new();
    let feas = feasibility(inst, cfg, tol)?;
    if !feas.feasible {
        reasons.push(format!(
            "points outside their balls: {:?}",
            feas.violations.iter().map(|i| i + 1).collect::<Vec<_>>()
        ));
    }
    let forces = force_field(inst, cfg)?;
    if forces.degenerate {
        reasons.push("coincident points with positive weight".to_string());
    }

    let (xs, stationarity) = match x {
        Some(x) => {
            let r = residual_for(inst, cfg, &forces, x.as_slice(), tol);
            (x.clone(), r)
        }
        None => {
            let e = extract_from_forces(inst, cfg, &forces, tol);
            if !e.unextractable.is_empty() {
                reasons.push(format!(
                    "no multiplier for pinned points {:?}",
                    e.unextractable.iter().map(|i| i + 1).collect::<Vec<_>>()
                ));
            }
            (DualVector::new(e.x)?, e.residual)
        }
    };

    let primal_value = objective(inst, cfg)?;
    let dual_value = dual_objective(inst, &xs)?;
    let gap = dual_value - primal_value;
    let rel = relative_gap(primal_value, dual_value);
    let affine = affine_independence(cfg, tol.max(1e-9));
    let weight_residual = match weight_consistency_residual(inst, cfg, &xs) {
        Ok(r) => r,
        Err(Error::ZeroDualSum) => inst.max_weight(),
        Err(e) => return Err(e),
    };

    let stationarity_tol = tol * (1.0 + inst.total_weight());
    if stationarity > stationarity_tol {
        reasons.push(format!(
            "stationarity residual {stationarity:e} exceeds {stationarity_tol:e}"
        ));
    }
    if !affine.independent {
        reasons.push(format!(
            "points are affinely dependent (rank {} < {})",
            affine.rank,
            inst.n().saturating_sub(1)
        ));
    }
    if !(rel <= tol) {
        reasons.push(format!("relative gap {rel:e} exceeds {tol:e}"));
    }

    let verdict = if !feas.feasible {
        Verdict::Invalid
    } else if reasons.is_empty() {
        Verdict::StrongCertificate
    } else {
        Verdict::WeakBoundOnly
    };
    Ok(Certificate {
        primal_value,
        dual_value,
        gap,
        relative_gap: rel,
        stationarity_residual: stationarity,
        affinely_independent: affine.independent,
        affine_rank: affine.rank,
        weight_consistency_residual: weight_residual,
        degenerate: forces.degenerate,
        verdict,
        x: xs,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::simplex_configuration;

    fn cfg(points: &[&[f64]]) -> Configuration {
        Configuration::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn dv(x: &[f64]) -> DualVector {
        DualVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn breakdown_for_antipodal_pair_is_tight() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let b = weak_duality_breakdown(&inst, &cfg(&[&[1.0, 0.0], &[-1.0, 0.0]]), &dv(&[1.0, 1.0]))
            .unwrap();
        assert_eq!(b.primal_value, 2.0);
        assert!((b.dual_value - 2.0).abs() < 1e-15);
        assert!((b.cauchy_schwarz_rhs - 2.0).abs() < 1e-15);
        // x1 x2 d^2 = 4; sum_{i,j} x_i x_j (1 - p_i.p_j) = 0 + 2 + 2 + 0; (2)(2)
        assert_eq!((b.quad_lhs, b.quad_mid, b.quad_rhs), (4.0, 4.0, 4.0));
        assert_eq!(b.residual_vector_norm, 0.0);
        assert!(b.is_ordered(1e-9));
    }

    #[test]
    fn breakdown_for_shrunken_pair() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let b = weak_duality_breakdown(&inst, &cfg(&[&[0.5, 0.0], &[-0.5, 0.0]]), &dv(&[1.0, 1.0]))
            .unwrap();
        assert_eq!(b.primal_value, 1.0);
        assert!((b.dual_value - 2.0).abs() < 1e-15);
        // quad_mid = (1-0.25) + (1+0.25) + (1+0.25) + (1-0.25) = 4
        assert_eq!((b.quad_lhs, b.quad_mid, b.quad_rhs), (1.0, 4.0, 4.0));
        assert!(b.is_ordered(1e-9));
    }

    #[test]
    fn breakdown_with_zero_multipliers() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let b = weak_duality_breakdown(&inst, &cfg(&[&[1.0, 0.0], &[-1.0, 0.0]]), &dv(&[0.0, 0.0]))
            .unwrap();
        assert_eq!(b.dual_value, f64::INFINITY);
        assert!(b.is_ordered(1e-9));
    }

    #[test]
    fn breakdown_rejects_infeasible() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let r = weak_duality_breakdown(&inst, &cfg(&[&[1.5, 0.0], &[0.0, 0.0]]), &dv(&[1.0, 1.0]));
        assert!(matches!(r, Err(Error::Infeasible(v)) if v == vec![0]));
    }

    #[test]
    fn extract_simplex_multipliers() {
        for n in 3..=8 {
            let inst = Instance::uniform(n, 1.0, 1.0).unwrap();
            let e = extract_dual(&inst, &simplex_configuration(n).unwrap(), 1e-9).unwrap();
            let expected = ((n * (n - 1)) as f64 / 2.0).sqrt();
            for &xi in e.x.as_slice() {
                assert!((xi - expected).abs() <= 1e-8 * expected, "n={n} x={xi}");
            }
            assert!(e.stationarity_residual <= 1e-10);
        }
        let inst = Instance::uniform(3, 1.0, 1.0).unwrap();
        let e = extract_dual(&inst, &simplex_configuration(3).unwrap(), 1e-9).unwrap();
        assert!((e.x.as_slice()[0] - 1.732051).abs() < 1e-6);
    }

    #[test]
    fn extract_antipodal_pair() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let e = extract_dual(&inst, &cfg(&[&[1.0, 0.0], &[-1.0, 0.0]]), 1e-9).unwrap();
        assert_eq!(e.x.as_slice(), &[1.0, 1.0]);
        assert_eq!(e.stationarity_residual, 0.0);
    }

    #[test]
    fn extract_without_forces() {
        let inst = Instance::uniform(2, 0.0, 1.0).unwrap();
        let e = extract_dual(&inst, &cfg(&[&[0.2, 0.0], &[0.0, 0.3]]), 1e-9).unwrap();
        assert_eq!(e.x.as_slice(), &[0.0, 0.0]);
        assert_eq!(e.stationarity_residual, 0.0);
    }

    #[test]
    fn extract_clamps_inward_force() {
        // both points on the same side: the force on point 1 points inward
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let e = extract_dual(&inst, &cfg(&[&[0.5, 0.0], &[1.0, 0.0]]), 1e-9).unwrap();
        assert_eq!(e.x.as_slice()[0], 0.0);
        assert!(e.stationarity_residual >= 1.0 - 1e-12);
    }

    #[test]
    fn extract_pinned_point_with_force_fails() {
        let inst = Instance::new(2, [(0, 1, 1.0)], vec![0.0, 1.0]).unwrap();
        let r = extract_dual(&inst, &cfg(&[&[0.0], &[1.0]]), 1e-9);
        assert!(matches!(r, Err(Error::Unextractable(v)) if v == vec![0]));
    }

    #[test]
    fn extract_degenerate_fails() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let r = extract_dual(&inst, &cfg(&[&[1.0], &[1.0]]), 1e-9);
        assert!(matches!(r, Err(Error::Degenerate)));
    }

    #[test]
    fn affine_independence_examples() {
        let tri = simplex_configuration(3).unwrap();
        assert_eq!(
            affine_independence(&tri, 1e-9),
            AffineIndependence {
                independent: true,
                rank: 2
            }
        );
        let line = cfg(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        assert_eq!(
            affine_independence(&line, 1e-9),
            AffineIndependence {
                independent: false,
                rank: 1
            }
        );
        let square = cfg(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let a = affine_independence(&square, 1e-9);
        assert!(!a.independent);
        assert!(a.rank <= 2);
        assert!(affine_independence(&cfg(&[&[3.0]]), 1e-9).independent);
    }

    #[test]
    fn weight_consistency_examples() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let r =
            weight_consistency_residual(&inst, &cfg(&[&[1.0], &[-1.0]]), &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(r, 0.0);

        let s3 = 3f64.sqrt();
        let tri = simplex_configuration(3).unwrap();
        let inst = Instance::uniform(3, 1.0, 1.0).unwrap();
        let r = weight_consistency_residual(&inst, &tri, &dv(&[s3, s3, s3])).unwrap();
        assert!(r < 1e-12);

        let bumped =
            Instance::new(3, [(0, 1, 1.1), (0, 2, 1.0), (1, 2, 1.0)], vec![1.0; 3]).unwrap();
        let r = weight_consistency_residual(&bumped, &tri, &dv(&[s3, s3, s3])).unwrap();
        assert!((r - 0.1).abs() < 1e-12);

        assert!(matches!(
            weight_consistency_residual(&inst, &tri, &dv(&[0.0; 3])),
            Err(Error::ZeroDualSum)
        ));
    }

    #[test]
    fn certify_simplex_five() {
        let inst = Instance::uniform(5, 1.0, 1.0).unwrap();
        let c = certify(&inst, &simplex_configuration(5).unwrap(), None, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::StrongCertificate, "{:?}", c.reasons);
        let expected = 5.0 * 10f64.sqrt();
        assert!((c.primal_value - expected).abs() < 1e-9);
        assert!((c.primal_value - 15.811388).abs() < 1e-6);
        assert!(c.gap.abs() <= 1e-8);
    }

    #[test]
    fn certify_collinear_is_weak() {
        let inst = Instance::new(3, [(0, 2, 1.0)], vec![1.0; 3]).unwrap();
        let c = certify(
            &inst,
            &cfg(&[&[1.0, 0.0], &[0.3, 0.0], &[-1.0, 0.0]]),
            None,
            1e-8,
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::WeakBoundOnly);
        assert!(!c.affinely_independent);
        assert!(c.gap >= -1e-9);
    }

    #[test]
    fn certify_infeasible_is_invalid() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let c = certify(&inst, &cfg(&[&[2.0], &[-1.0]]), None, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::Invalid);
        assert!(!c.reasons.is_empty());
    }

    #[test]
    fn certify_pinned_point_is_weak() {
        let inst = Instance::new(2, [(0, 1, 1.0)], vec![0.0, 1.0]).unwrap();
        let c = certify(&inst, &cfg(&[&[0.0], &[1.0]]), None, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::WeakBoundOnly);
    }

    #[test]
    fn verdict_round_trips_through_str() {
        for v in [
            Verdict::StrongCertificate,
            Verdict::WeakBoundOnly,
            Verdict::Invalid,
        ] {
            assert_eq!(v.as_str().parse::<Verdict>().unwrap(), v);
        }
    }
}
