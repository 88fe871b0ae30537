//! Test-only oracles and generators. Nothing here calls into the solver
//! paths it is used to check.

#![allow(dead_code)]

use dispersion_core::{Configuration, DualVector, GramMatrix, Instance};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance; `density` is the probability a pair gets a weight.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Instance {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                pairs.push((i, j, rng.random_range(0.05..3.0)));
            }
        }
    }
    let radii = (0..n).map(|_| rng.random_range(0.1..2.5)).collect();
    Instance::new(n, pairs, radii).unwrap()
}

/// All pairs weighted, all radii positive.
pub fn random_positive_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, rng.random_range(0.2..2.0)));
        }
    }
    let radii = (0..n).map(|_| rng.random_range(0.3..2.0)).collect();
    Instance::new(n, pairs, radii).unwrap()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Points uniformly spread in their balls, some pushed to the boundary.
pub fn random_feasible(rng: &mut ChaCha8Rng, inst: &Instance, dim: usize) -> Configuration {
    let points = (0..inst.n())
        .map(|i| {
            let mut v = gaussian_vec(rng, dim);
            let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            let frac = if rng.random::<f64>() < 0.4 {
                1.0
            } else {
                rng.random::<f64>()
            };
            // stay a hair inside to absorb rounding in the norm
            let target = inst.radius(i) * frac * (1.0 - 1e-12);
            v.iter_mut().for_each(|c| *c *= target / r);
            v
        })
        .collect();
    Configuration::new(points).unwrap()
}

pub fn random_config(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Configuration {
    Configuration::new(
        (0..n)
            .map(|_| {
                gaussian_vec(rng, dim)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_dual(rng: &mut ChaCha8Rng, n: usize, allow_zero: bool) -> DualVector {
    DualVector::new(
        (0..n)
            .map(|_| {
                if allow_zero && rng.random::<f64>() < 0.1 {
                    0.0
                } else {
                    rng.random_range(0.01..5.0)
                }
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    (&a + a.transpose()) * 0.5
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> GramMatrix {
    let v = DMatrix::from_fn(n, rank, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    GramMatrix::new(&v * v.transpose()).unwrap()
}

/// Direct pairwise summation of the objective.
pub fn objective_by_summation(inst: &Instance, cfg: &Configuration) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            let d: f64 = cfg
                .point(i)
                .iter()
                .zip(cfg.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            total += inst.weight(i, j) * d;
        }
    }
    total
}

/// Central differences of `objective_by_summation` with respect to every
/// coordinate, laid out like `Configuration::coords`.
pub fn fd_point_gradient(inst: &Instance, cfg: &Configuration, h: f64) -> Vec<f64> {
    let dim = cfg.dim();
    let base = cfg.coords().to_vec();
    (0..base.len())
        .map(|k| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += h;
            minus[k] -= h;
            let fp = objective_by_summation(inst, &Configuration::from_flat(dim, plus).unwrap());
            let fm = objective_by_summation(inst, &Configuration::from_flat(dim, minus).unwrap());
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Lifted objective by direct summation.
pub fn lifted_by_summation(inst: &Instance, y: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            let s = y[(i, i)] + y[(j, j)] - 2.0 * y[(i, j)];
            total += inst.weight(i, j) * s.max(0.0).sqrt();
        }
    }
    total
}

/// Central difference of the lifted objective along the symmetric direction
/// `E = e_i e_j^T + e_j e_i^T` for `i != j`, or `E = e_i e_i^T`.
pub fn fd_lifted_directional(inst: &Instance, y: &DMatrix<f64>, i: usize, j: usize, h: f64) -> f64 {
    let mut e = DMatrix::zeros(y.nrows(), y.ncols());
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    let fp = lifted_by_summation(inst, &(y + &e * h));
    let fm = lifted_by_summation(inst, &(y - &e * h));
    (fp - fm) / (2.0 * h)
}

/// Cyclic Jacobi eigenvalue iteration: eigenvalues (ascending) and
/// eigenvectors as columns.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * (1.0 + a.norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Frobenius-nearest PSD matrix via the Jacobi eigendecomposition.
pub fn jacobi_psd_projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = jacobi_eigen(m);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam > 0.0 {
            let col = vectors.column(k);
            out += col * col.transpose() * lam;
        }
    }
    out
}

/// Exact max-cut by scoring every one of the `2^n` partitions.
pub fn maxcut_by_enumeration(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let v: f64 = edges
            .iter()
            .filter(|&&(i, j, _)| (mask >> i & 1) != (mask >> j & 1))
            .map(|&(_, _, w)| w)
            .sum();
        best = best.max(v);
    }
    best
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let mut v = nalgebra::DVector::from_vec(gaussian_vec(rng, dim));
        for k in 0..c {
            let qk = q.column(k).into_owned();
            let proj = qk.dot(&v);
            v -= qk * proj;
        }
        let nv = v.norm();
        q.set_column(c, &(v / nv));
    }
    q
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}
