//! Dual minimization in log coordinates.
//!
//! With `x_i = exp(y_i)` the log of the dual objective is
//! `(LSE_pairs(2 log w - y_i - y_j) + LSE_i(2 log l(i) + y_i) + LSE_i(y_i)) / 2`,
//! a sum of log-sum-exp terms of affine maps, hence convex in `y`.

use super::SolveParams;
use crate::error::Result;
use crate::eval::dual_objective;
use crate::types::{DualVector, Instance};

/// Log-spread `max y - min y` beyond which the minimizer is taken to be
/// running off to the boundary of the orthant.
pub const UNATTAINED_SPREAD: f64 = 20.0;

const GRAD_TOL: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Normalized to unit sum.
    pub x: DualVector,
    pub value: f64,
    /// The iterates drifted toward the boundary without a finite limit; the
    /// value is the best seen, and the infimum may not be attained.
    pub unattained: bool,
    pub iterations: usize,
}

struct LogDual {
    // (i, j, 2 log w) over the active variables
    pairs: Vec<(usize, usize, f64)>,
    // (i, 2 log l) for positive radii
    radii: Vec<(usize, f64)>,
    n: usize,
}

/// `log(sum exp(t))`, shifted by the max; `-inf` for no terms.
fn lse(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl LogDual {
    fn value(&self, y: &[f64]) -> f64 {
        let a = lse(self.pairs.iter().map(|&(i, j, c)| c - y[i] - y[j]));
        let b = lse(self.radii.iter().map(|&(i, c)| c + y[i]));
        let c = lse(y.iter().copied());
        0.5 * (a + b + c)
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        let a = lse(self.pairs.iter().map(|&(i, j, c)| c - y[i] - y[j]));
        for &(i, j, c) in &self.pairs {
            let p = (c - y[i] - y[j] - a).exp();
            g[i] -= 0.5 * p;
            g[j] -= 0.5 * p;
        }
        let b = lse(self.radii.iter().map(|&(i, c)| c + y[i]));
        for &(i, c) in &self.radii {
            g[i] += 0.5 * (c + y[i] - b).exp();
        }
        let s = lse(y.iter().copied());
        for (gi, yi) in g.iter_mut().zip(y) {
            *gi += 0.5 * (yi - s).exp();
        }
        g
    }
}

/// Minimizes the dual objective over `x >= 0` by gradient descent with
/// backtracking on `log D(exp(y))`.
///
/// Points without any positive weight get `x_i = 0`, where the dual is
/// attained on the boundary. If the remaining iterates spread by more than
/// [`UNATTAINED_SPREAD`] in log space and no boundary point does as well,
/// the result is flagged `unattained` and carries the best iterate.
/// Instances with no positive weight have dual value 0 at any `x`.
pub fn minimize_dual(inst: &Instance, params: &SolveParams) -> Result<DualSolution> {
    params.validate()?;
    let n = inst.n();
    let mut active = vec![false; n];
    for (i, j, _) in inst.pairs() {
        active[i] = true;
        active[j] = true;
    }
    let index: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let m = index.len();
    if m == 0 {
        let x = DualVector::new(vec![1.0 / n as f64; n])?;
        return Ok(DualSolution {
            value: dual_objective(inst, &x)?,
            x,
            unattained: false,
            iterations: 0,
        });
    }
    let mut local = vec![usize::MAX; n];
    for (k, &i) in index.iter().enumerate() {
        local[i] = k;
    }
    let problem = LogDual {
        pairs: inst
            .pairs()
            .map(|(i, j, w)| (local[i], local[j], 2.0 * w.ln()))
            .collect(),
        radii: index
            .iter()
            .enumerate()
            .filter(|(_, &i)| inst.radius(i) > 0.0)
            .map(|(k, &i)| (k, 2.0 * inst.radius(i).ln()))
            .collect(),
        n: m,
    };

    let expand = |y: &[f64]| -> Result<DualVector> {
        let top = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut x = vec![0.0; n];
        for (k, &i) in index.iter().enumerate() {
            x[i] = (y[k] - top).exp();
        }
        Ok(DualVector::new(x)?.normalized())
    };

    if problem.radii.is_empty() {
        // every active radius is zero: the dual is 0 at any interior x
        let x = expand(&vec![0.0; m])?;
        return Ok(DualSolution {
            value: dual_objective(inst, &x)?,
            x,
            unattained: false,
            iterations: 0,
        });
    }

    let mut y = vec![0.0; m];
    let mut f = problem.value(&y);
    let mut step = 1.0;
    let mut iterations = 0;
    let max_iters = params.max_iters.max(50_000);
    while iterations < max_iters {
        iterations += 1;
        let g = problem.gradient(&y);
        let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if gmax <= GRAD_TOL {
            break;
        }
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let mut improved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let ft = problem.value(&trial);
            if ft <= f - ARMIJO * step * g2 {
                y = trial;
                f = ft;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        step *= 2.0;
        let mean = y.iter().sum::<f64>() / m as f64;
        y.iter_mut().for_each(|v| *v -= mean);
    }

    let x = expand(&y)?;
    let value = dual_objective(inst, &x)?;
    let spread = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - y.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread <= UNATTAINED_SPREAD {
        return Ok(DualSolution {
            x,
            value,
            unattained: false,
            iterations,
        });
    }
    // try the boundary point the iterates are heading to
    let cutoff = (-UNATTAINED_SPREAD).exp();
    let xmax = x.as_slice().iter().fold(0.0f64, |a, &b| a.max(b));
    let boundary: Vec<f64> = x
        .as_slice()
        .iter()
        .map(|&v| if v < cutoff * xmax { 0.0 } else { v })
        .collect();
    let boundary = DualVector::new(boundary)?.normalized();
    let bvalue = dual_objective(inst, &boundary)?;
    if bvalue.is_finite() && bvalue <= value * (1.0 + 1e-12) {
        return Ok(DualSolution {
            x: boundary,
            value: bvalue,
            unattained: false,
            iterations,
        });
    }
    Ok(DualSolution {
        x,
        value,
        unattained: true,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let inst = Instance::uniform(2, 1.0, 1.0).unwrap();
        let d = minimize_dual(&inst, &SolveParams::default()).unwrap();
        assert!((d.x.as_slice()[0] - 0.5).abs() < 1e-9);
        assert!((d.x.as_slice()[1] - 0.5).abs() < 1e-9);
        assert!((d.value - 2.0).abs() < 1e-12);
        assert!(!d.unattained);
    }

    #[test]
    fn tetrahedron_value() {
        let inst = Instance::uniform(4, 1.0, 1.0).unwrap();
        let d = minimize_dual(&inst, &SolveParams::default()).unwrap();
        let expected = 4.0 * 6f64.sqrt();
        assert!((d.value - expected).abs() <= 1e-5 * expected);
    }

    #[test]
    fn pinned_point_infimum_unattained() {
        // sqrt((x1 + x2) / x1) -> 1 as x1 -> infinity
        let inst = Instance::new(2, [(0, 1, 1.0)], vec![0.0, 1.0]).unwrap();
        let d = minimize_dual(&inst, &SolveParams::default()).unwrap();
        assert!(d.unattained);
        assert!((d.value - 1.0).abs() < 1e-6, "{}", d.value);
    }

    #[test]
    fn isolated_point_gets_zero_multiplier() {
        let inst = Instance::new(3, [(0, 1, 1.0)], vec![1.0; 3]).unwrap();
        let d = minimize_dual(&inst, &SolveParams::default()).unwrap();
        assert_eq!(d.x.as_slice()[2], 0.0);
        assert!((d.value - 2.0).abs() < 1e-9);
        assert!(!d.unattained);
    }

    #[test]
    fn no_weights_gives_zero() {
        let inst = Instance::uniform(3, 0.0, 1.0).unwrap();
        let d = minimize_dual(&inst, &SolveParams::default()).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn log_gradient_matches_differences() {
        let inst = Instance::new(
            3,
            [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5)],
            vec![1.0, 0.3, 2.0],
        )
        .unwrap();
        let problem = LogDual {
            pairs: inst.pairs().map(|(i, j, w)| (i, j, 2.0 * w.ln())).collect(),
            radii: (0..3).map(|i| (i, 2.0 * inst.radius(i).ln())).collect(),
            n: 3,
        };
        let y = [0.3, -0.2, 0.7];
        let g = problem.gradient(&y);
        for k in 0..3 {
            let h = 1e-6;
            let mut a = y;
            let mut b = y;
            a[k] += h;
            b[k] -= h;
            let fd = (problem.value(&a) - problem.value(&b)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
        // consistency with the direct evaluation
        let x = DualVector::new(y.iter().map(|v: &f64| v.exp()).collect()).unwrap();
        let direct = dual_objective(&inst, &x).unwrap().ln();
        assert!((direct - problem.value(&y)).abs() < 1e-12);
    }
}
