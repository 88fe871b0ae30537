//! The feasible set of the lifted problem: symmetric PSD matrices with
//! `Y_ii <= l(i)^2`. Projection onto it, a separation oracle, and the
//! factorization back to points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{check_symmetric, Configuration, GramMatrix, Instance};

/// Iteration cap for the alternating projection in [`feasible_project`].
pub const DYKSTRA_MAX_ITERS: usize = 10_000;
/// Iteration cap for the dual Newton finish in [`feasible_project`].
const NEWTON_MAX_ITERS: usize = 200;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order and each
/// eigenvector signed so that its largest-magnitude entry is positive.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iamax();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(col, &(v * sign));
    }
    (values, vectors)
}

fn reassemble(values: &[f64], vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(lam);
    }
    let m = scaled * vectors.transpose();
    debug_assert_eq!(m.nrows(), n);
    (&m + m.transpose()) * 0.5
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues are
/// clamped to zero.
pub fn psd_project(s: &DMatrix<f64>) -> Result<GramMatrix> {
    check_symmetric(s)?;
    let sym = (s + s.transpose()) * 0.5;
    Ok(GramMatrix::from_symmetric_unchecked(psd_part(&sym)))
}

pub(crate) fn psd_part(sym: &DMatrix<f64>) -> DMatrix<f64> {
    let (mut values, vectors) = sorted_eigen(sym);
    if values.iter().all(|&v| v >= 0.0) {
        return sym.clone();
    }
    for v in &mut values {
        *v = v.max(0.0);
    }
    reassemble(&values, &vectors)
}

fn clamp_diagonal(m: &mut DMatrix<f64>, bounds: &[f64]) {
    for (i, &b) in bounds.iter().enumerate() {
        if m[(i, i)] > b {
            m[(i, i)] = b;
        }
    }
}

/// Rescales rows and columns so that every diagonal entry is within its
/// bound. This is the Gram-space image of pulling each point radially back
/// into its ball, and it preserves positive semidefiniteness.
pub(crate) fn radial_rescale(m: &DMatrix<f64>, bounds: &[f64]) -> DMatrix<f64> {
    let d: Vec<f64> = bounds
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let yii = m[(i, i)];
            if yii > b {
                (b / yii).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j])
}

pub(crate) struct DykstraOutcome {
    pub matrix: DMatrix<f64>,
    /// Diagonal of the accumulated box correction: the current estimate of
    /// the multipliers of `Y_ii <= bound_i`.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Dykstra's alternating projection between the PSD cone and the diagonal
/// box. Returns the last PSD iterate.
pub(crate) fn dykstra(
    s: &DMatrix<f64>,
    bounds: &[f64],
    tol: f64,
    max_iters: usize,
) -> DykstraOutcome {
    let n = s.nrows();
    let mut x = s.clone();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let mut y = x.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        y = psd_part(&(&x + &p));
        p = &x + &p - &y;
        let mut next = &y + &q;
        clamp_diagonal(&mut next, bounds);
        q = &y + &q - &next;
        let change = (&next - &x).norm();
        residual = (&next - &y).norm();
        x = next;
        if residual <= tol && change <= tol {
            return DykstraOutcome {
                matrix: y,
                multipliers: q.diagonal().iter().copied().collect(),
                iterations: it,
                residual,
                converged: true,
            };
        }
    }
    DykstraOutcome {
        matrix: y,
        multipliers: q.diagonal().iter().copied().collect(),
        iterations: max_iters,
        residual,
        converged: false,
    }
}

/// Projected semismooth Newton on the dual of the projection,
/// `min_{mu >= 0} 1/2 |(S - diag mu)_+|^2 + b . mu`, whose gradient is
/// `b - diag((S - diag mu)_+)`. Returns `(S - diag mu)_+` once the natural
/// residual `|min(mu, grad)|` is at most `tol`.
fn dual_newton(
    s: &DMatrix<f64>,
    bounds: &[f64],
    mu0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Option<DMatrix<f64>> {
    let n = s.nrows();
    let eval = |mu: &[f64]| {
        let mut x = s.clone();
        for (i, &m) in mu.iter().enumerate() {
            x[(i, i)] -= m;
        }
        let (values, vectors) = sorted_eigen(&x);
        let plus: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let p = reassemble(&plus, &vectors);
        let phi = 0.5 * plus.iter().map(|v| v * v).sum::<f64>()
            + mu.iter().zip(bounds).map(|(m, b)| m * b).sum::<f64>();
        let grad: Vec<f64> = (0..n).map(|i| bounds[i] - p[(i, i)]).collect();
        (phi, grad, p, values, vectors)
    };
    let natural_residual = |mu: &[f64], grad: &[f64]| {
        mu.iter()
            .zip(grad)
            .map(|(m, g)| m.min(*g).abs())
            .fold(0.0, f64::max)
    };
    let mut mu: Vec<f64> = mu0.iter().map(|m| m.max(0.0)).collect();
    let (mut phi, mut grad, mut p, mut values, mut vectors) = eval(&mu);
    for _ in 0..max_iters {
        let natural = natural_residual(&mu, &grad);
        if natural <= tol {
            return Some(p);
        }
        // generalized Hessian of the dual: d diag(X_+) / d X_jj
        let gamma = |k: usize, l: usize| {
            let (a, b) = (values[k], values[l]);
            match (a > 0.0, b > 0.0) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                _ => (a.max(0.0) - b.max(0.0)) / (a - b),
            }
        };
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut h = 0.0;
                for k in 0..n {
                    let ak = vectors[(i, k)] * vectors[(j, k)];
                    for l in 0..n {
                        h += gamma(k, l) * ak * vectors[(i, l)] * vectors[(j, l)];
                    }
                }
                hess[(i, j)] = h;
            }
        }
        // multipliers pinned at zero with a positive gradient stay put
        let eps = natural.min(1e-8);
        let free: Vec<usize> = (0..n)
            .filter(|&i| !(mu[i] <= eps && grad[i] > 0.0))
            .collect();
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !free.is_empty() {
            let reg = 1e-12 + natural.min(1.0) * 1e-3;
            let h = DMatrix::from_fn(free.len(), free.len(), |a, b| {
                hess[(free[a], free[b])] + if a == b { reg } else { 0.0 }
            });
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -grad[i]));
            if let Some(step) = h.cholesky().map(|c| c.solve(&rhs)) {
                for (a, &i) in free.iter().enumerate() {
                    dir[i] = step[a];
                }
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = mu
                .iter()
                .zip(&dir)
                .map(|(m, d)| (m + t * d).max(0.0))
                .collect();
            let next = eval(&trial);
            let decrease: f64 = grad
                .iter()
                .zip(trial.iter().zip(&mu))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            // near the solution the decrease drops below rounding in phi;
            // there a shrinking optimality residual decides instead
            let sufficient = if decrease.abs() > 1e-12 * phi.abs().max(1.0) {
                next.0 <= phi + 1e-4 * decrease.min(0.0)
            } else {
                natural_residual(&trial, &next.1) < 0.9 * natural
            };
            if sufficient {
                mu = trial;
                (phi, grad, p, values, vectors) = next;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

fn squared_radii(inst: &Instance) -> Vec<f64> {
    inst.radii().iter().map(|l| l * l).collect()
}

/// Projects a symmetric matrix onto `{PSD} ∩ {Y_ii <= l(i)^2}` by
/// Dykstra-corrected alternating projection, stopping once consecutive
/// iterates and the two half-steps agree to `tol` in Frobenius norm.
///
/// Dykstra's method can stall when the projection is rank-deficient and
/// sits on a diagonal bound. If it reaches its cap, its diagonal correction
/// warm-starts a projected Newton solve of the projection's dual, which
/// finishes once the multipliers satisfy the optimality conditions to `tol`.
///
/// The returned matrix is PSD and satisfies the diagonal bounds exactly
/// (a final radial rescale absorbs the last `tol` of diagonal excess).
pub fn feasible_project(s: &DMatrix<f64>, inst: &Instance, tol: f64) -> Result<GramMatrix> {
    check_symmetric(s)?;
    if s.nrows() != inst.n() {
        return Err(Error::PointCount {
            expected: inst.n(),
            found: s.nrows(),
        });
    }
    let sym = (s + s.transpose()) * 0.5;
    let bounds = squared_radii(inst);
    if is_feasible(&sym, &bounds) {
        return Ok(GramMatrix::from_symmetric_unchecked(sym));
    }
    let out = dykstra(&sym, &bounds, tol, DYKSTRA_MAX_ITERS);
    let fixed = GramMatrix::from_symmetric_unchecked(radial_rescale(&out.matrix, &bounds));
    if out.converged {
        Ok(fixed)
    } else if let Some(p) = dual_newton(&sym, &bounds, &out.multipliers, tol, NEWTON_MAX_ITERS) {
        Ok(GramMatrix::from_symmetric_unchecked(radial_rescale(
            &p, &bounds,
        )))
    } else {
        Err(Error::ProjectionNotConverged {
            iterations: out.iterations,
            residual: out.residual,
            best: Box::new(fixed),
        })
    }
}

fn is_feasible(m: &DMatrix<f64>, bounds: &[f64]) -> bool {
    bounds.iter().enumerate().all(|(i, &b)| m[(i, i)] <= b)
        && sorted_eigen(m).0.last().is_none_or(|&v| v >= 0.0)
}

/// A valid inequality `<a, Y> <= bound` for every feasible `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCut {
    pub a: DMatrix<f64>,
    pub bound: f64,
}

impl LinearCut {
    /// `<a, Y> - bound`; positive when `Y` violates the cut.
    pub fn violation(&self, y: &DMatrix<f64>) -> f64 {
        self.a.dot(y) - self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Feasible,
    /// `v^T Y v = value < -tol` for a unit eigenvector `v`.
    PsdCut {
        v: DVector<f64>,
        value: f64,
    },
    /// `Y_ii = value > bound + tol`, where `bound = l(i)^2`.
    DiagonalCut {
        index: usize,
        value: f64,
        bound: f64,
    },
}

impl Separation {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Separation::Feasible)
    }

    /// The violated inequality as `<a, Y> <= bound`.
    pub fn cut(&self, n: usize) -> Option<LinearCut> {
        match self {
            Separation::Feasible => None,
            Separation::PsdCut { v, .. } => Some(LinearCut {
                a: -(v * v.transpose()),
                bound: 0.0,
            }),
            Separation::DiagonalCut { index, bound, .. } => {
                let mut a = DMatrix::zeros(n, n);
                a[(*index, *index)] = 1.0;
                Some(LinearCut { a, bound: *bound })
            }
        }
    }
}

/// Separation oracle for the lifted feasible set.
///
/// The most negative eigenvalue is checked first; below `-tol` its
/// eigenvector gives the cut `v^T Y v >= 0`. Otherwise the most violated
/// diagonal bound beyond `tol` is returned.
pub fn separation_oracle(inst: &Instance, y: &GramMatrix, tol: f64) -> Result<Separation> {
    let m = y.matrix();
    if m.nrows() != inst.n() {
        return Err(Error::PointCount {
            expected: inst.n(),
            found: m.nrows(),
        });
    }
    let (values, vectors) = sorted_eigen(m);
    let last = values.len() - 1;
    if values[last] < -tol {
        let v = vectors.column(last).into_owned();
        let value = (v.transpose() * m * &v)[(0, 0)];
        return Ok(Separation::PsdCut { v, value });
    }
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..inst.n() {
        let excess = m[(i, i)] - inst.radius(i).powi(2);
        if excess > tol && worst.is_none_or(|(_, e)| excess > e) {
            worst = Some((i, excess));
        }
    }
    Ok(match worst {
        Some((index, _)) => Separation::DiagonalCut {
            index,
            value: m[(index, index)],
            bound: inst.radius(index).powi(2),
        },
        None => Separation::Feasible,
    })
}

/// Factors a PSD matrix into points with `p_i . p_j ~ Y_ij`.
///
/// The dimension is the numeric rank: eigenvalues at or below
/// `tol (1 + max|Y|) / n` are dropped. A zero matrix yields `n` points at the
/// origin of dimension 1.
pub fn factor_gram(y: &GramMatrix, tol: f64) -> Result<Configuration> {
    let m = y.matrix();
    let n = m.nrows();
    if n == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let scale = 1.0 + m.amax();
    let (values, vectors) = sorted_eigen(m);
    let min = values[n - 1];
    if min < -tol * scale {
        return Err(Error::NotPsd(min));
    }
    let threshold = tol * scale / n as f64;
    let rank = values.iter().filter(|&&v| v > threshold).count();
    if rank == 0 {
        return Configuration::zeros(n, 1);
    }
    let mut coords = vec![0.0; n * rank];
    for k in 0..rank {
        let s = values[k].sqrt();
        for i in 0..n {
            coords[i * rank + k] = s * vectors[(i, k)];
        }
    }
    Configuration::from_flat(rank, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::simplex_configuration;
    use crate::types::{dist, dot};

    fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn psd_input_unchanged() {
        let y = simplex_configuration(4).unwrap().gram();
        let p = psd_project(y.matrix()).unwrap();
        assert!((p.matrix() - y.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn clamps_negative_eigenvalue() {
        let p = psd_project(&mat(2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((p.matrix() - mat(2, &[1.0, 0.0, 0.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn psd_project_rejects_asymmetric() {
        assert!(psd_project(&mat(2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn feasible_project_examples() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let feasible = mat(2, &[1.0, -0.5, -0.5, 0.5]);
        let out = feasible_project(&feasible, &inst, 1e-10).unwrap();
        assert_eq!(out.matrix(), &feasible);

        let out = feasible_project(&mat(2, &[4.0, 0.0, 0.0, 4.0]), &inst, 1e-10).unwrap();
        assert!((out.matrix() - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn feasible_project_finishes_where_dykstra_stalls() {
        let s = mat(
            3,
            &[
                2.9962497612134618,
                2.7471655293650414,
                -1.5623624842088484,
                2.7471655293650414,
                1.327362450757833,
                -2.1254064069737035,
                -1.5623624842088484,
                -2.1254064069737035,
                1.8322599791909475,
            ],
        );
        let radii = vec![1.1579779768489704, 0.10553401777316776, 1.9435850122217533];
        let inst = Instance::new(3, [], radii.clone()).unwrap();
        let bounds: Vec<f64> = radii.iter().map(|l| l * l).collect();
        assert!(!dykstra(&s, &bounds, 1e-10, DYKSTRA_MAX_ITERS).converged);

        let p = feasible_project(&s, &inst, 1e-10).unwrap();
        assert!(separation_oracle(&inst, &p, 1e-12).unwrap().is_feasible());
        // optimality: <S - P, Z - P> <= 0 for feasible Z
        let p = p.into_matrix();
        for z in [
            DMatrix::zeros(3, 3),
            DMatrix::from_diagonal(&DVector::from_vec(bounds.clone())),
            Configuration::new(vec![
                vec![radii[0], 0.0],
                vec![0.0, radii[1]],
                vec![-radii[2], 0.0],
            ])
            .unwrap()
            .gram()
            .into_matrix(),
        ] {
            assert!((&s - &p).dot(&(z - &p)) <= 1e-9);
        }
    }

    #[test]
    fn feasible_project_converges_below_objective_rounding() {
        let s = mat(
            5,
            &[
                -0.4803136702894622,
                1.4312467403295628,
                -0.6118332367063609,
                2.0461834975083995,
                0.8726587545833682,
                1.4312467403295628,
                -0.43190217697070793,
                -1.706188003359454,
                -0.5002597020411466,
                2.1554246408265376,
                -0.6118332367063609,
                -1.706188003359454,
                2.323559929044371,
                -1.974679910083303,
                0.938624783654509,
                2.0461834975083995,
                -0.5002597020411466,
                -1.974679910083303,
                1.1294283809757644,
                -0.5986706854243524,
                0.8726587545833682,
                2.1554246408265376,
                0.938624783654509,
                -0.5986706854243524,
                -3.331714857974669,
            ],
        );
        let radii = vec![
            1.792183969998276,
            0.12466899787474084,
            2.1380590303726916,
            1.6924143977377273,
            0.9901232988358841,
        ];
        let inst = Instance::new(5, [], radii.clone()).unwrap();
        let bounds: Vec<f64> = radii.iter().map(|l| l * l).collect();
        let p = feasible_project(&s, &inst, 1e-10).unwrap();
        assert!(separation_oracle(&inst, &p, 1e-12).unwrap().is_feasible());
        let p = p.into_matrix();
        for z in [
            DMatrix::zeros(5, 5),
            DMatrix::from_diagonal(&DVector::from_vec(bounds)),
        ] {
            assert!((&s - &p).dot(&(z - &p)) <= 1e-9);
        }
    }

    #[test]
    fn separation_examples() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let ok = Configuration::new(vec![vec![1.0, 0.0], vec![0.0, 0.5]])
            .unwrap()
            .gram();
        assert_eq!(
            separation_oracle(&inst, &ok, 1e-9).unwrap(),
            Separation::Feasible
        );

        let y = GramMatrix::new(mat(2, &[1.0, 0.0, 0.0, -0.5])).unwrap();
        match separation_oracle(&inst, &y, 1e-9).unwrap() {
            Separation::PsdCut { v, value } => {
                assert!((v[0]).abs() < 1e-12 && (v[1].abs() - 1.0).abs() < 1e-12);
                assert!((value + 0.5).abs() < 1e-12);
            }
            other => panic!("expected PSD cut, got {other:?}"),
        }

        let y = GramMatrix::new(mat(2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        let sep = separation_oracle(&inst, &y, 1e-9).unwrap();
        assert_eq!(
            sep,
            Separation::DiagonalCut {
                index: 0,
                value: 2.0,
                bound: 1.0
            }
        );
        assert!((sep.cut(2).unwrap().violation(y.matrix()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn factor_identity() {
        let c = factor_gram(&GramMatrix::new(DMatrix::identity(2, 2)).unwrap(), 1e-9).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(dot(c.point(0), c.point(1)).abs() < 1e-15);
        assert!((dot(c.point(0), c.point(0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn factor_rank_one() {
        let c = factor_gram(
            &GramMatrix::new(mat(2, &[1.0, 1.0, 1.0, 1.0])).unwrap(),
            1e-9,
        )
        .unwrap();
        assert_eq!(c.dim(), 1);
        assert!((c.point(0)[0] - c.point(1)[0]).abs() < 1e-15);
        assert!((c.point(0)[0].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn factor_simplex_preserves_distances() {
        let s = simplex_configuration(4).unwrap();
        let c = factor_gram(&s.gram(), 1e-9).unwrap();
        assert_eq!(c.dim(), 3);
        for i in 0..4 {
            for j in 0..4 {
                let d0 = dist(s.point(i), s.point(j));
                assert!((dist(c.point(i), c.point(j)) - d0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_rejects_indefinite() {
        let y = GramMatrix::new(mat(2, &[1.0, 0.0, 0.0, -0.5])).unwrap();
        assert!(matches!(factor_gram(&y, 1e-9), Err(Error::NotPsd(_))));
    }

    #[test]
    fn factor_zero_matrix() {
        let c = factor_gram(&GramMatrix::new(DMatrix::zeros(3, 3)).unwrap(), 1e-9).unwrap();
        assert_eq!((c.len(), c.dim()), (3, 1));
    }
}
