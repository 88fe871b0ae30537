//! Ellipsoid-method backend for the lifted problem.
//!
//! Symmetric matrices are coordinatized by their upper triangle with
//! off-diagonal entries scaled by `sqrt(2)`, which makes the Euclidean
//! norm of the coordinate vector equal the Frobenius norm. The optimum is
//! located by bisection on the objective level `t`; each level is decided by
//! an ellipsoid run that cuts with the separation oracle while infeasible and
//! with the supergradient inequality while the value is below `t`.

use nalgebra::{DMatrix, DVector};

use super::psd::radial_rescale;
use super::sdp::{sdp_value, sdp_value_and_supergradient};
use super::{factor_gram, finish, separation_oracle, SolveParams, SolveResult};
use crate::error::{Error, Result};
use crate::types::{norm, Configuration, GramMatrix, Instance};

/// Largest `n` accepted by [`ellipsoid_solve`]; the search space has
/// dimension `n(n+1)/2`.
pub const ELLIPSOID_MAX_N: usize = 12;

/// Bisection stops once the level interval is this small relative to the
/// upper end (or `params.tol`, whichever is larger).
const BISECTION_REL_TOL: f64 = 1e-6;
/// A level is declared infeasible once the ellipsoid's geometric-mean
/// semi-axis falls below this fraction of the initial radius.
const MIN_RADIUS_FRACTION: f64 = 1e-9;

struct Coords {
    n: usize,
    // (i, j) for each coordinate, i <= j
    entries: Vec<(usize, usize)>,
}

impl Coords {
    fn new(n: usize) -> Self {
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push((i, j));
            }
        }
        Coords { n, entries }
    }

    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn to_vec(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.entries.iter().map(|&(i, j)| {
                if i == j {
                    m[(i, i)]
                } else {
                    std::f64::consts::SQRT_2 * m[(i, j)]
                }
            }),
        )
    }

    fn to_matrix(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, &(i, j)) in self.entries.iter().enumerate() {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / std::f64::consts::SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }
}

struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    // log det of `shape`
    log_det: f64,
}

enum CutOutcome {
    Shrunk,
    Empty,
}

impl Ellipsoid {
    fn ball(center: DVector<f64>, radius: f64) -> Self {
        let m = center.len();
        Ellipsoid {
            center,
            shape: DMatrix::identity(m, m) * (radius * radius),
            log_det: m as f64 * 2.0 * radius.ln(),
        }
    }

    /// Keeps the part of the ellipsoid with `a . y <= b`.
    fn cut(&mut self, a: &DVector<f64>, b: f64) -> Result<CutOutcome> {
        let m = self.center.len() as f64;
        let pa = &self.shape * a;
        let apa = a.dot(&pa);
        if !(apa > 0.0) || !apa.is_finite() {
            return Err(Error::Ellipsoid(format!(
                "degenerate shape matrix (a'Pa = {apa:e})"
            )));
        }
        let root = apa.sqrt();
        let alpha = (a.dot(&self.center) - b) / root;
        if alpha >= 1.0 {
            return Ok(CutOutcome::Empty);
        }
        let alpha = alpha.max(-1.0 / m);
        let tau = (1.0 + m * alpha) / (m + 1.0);
        let sigma = 2.0 * (1.0 + m * alpha) / ((m + 1.0) * (1.0 + alpha));
        let delta = m * m * (1.0 - alpha * alpha) / (m * m - 1.0);
        let g = &pa / root;
        self.center -= &g * tau;
        let shape = (&self.shape - &g * g.transpose() * sigma) * delta;
        self.shape = (&shape + shape.transpose()) * 0.5;
        self.log_det += m * delta.ln() + (1.0 - sigma).ln();
        Ok(CutOutcome::Shrunk)
    }
}

/// Searches for a feasible `Y` with objective at least `level`.
fn find_level(
    inst: &Instance,
    coords: &Coords,
    start: &DVector<f64>,
    radius: f64,
    level: f64,
    max_steps: usize,
) -> Result<(Option<(DMatrix<f64>, f64)>, usize)> {
    let m = coords.dim() as f64;
    let mut e = Ellipsoid::ball(start.clone(), radius);
    let floor = (MIN_RADIUS_FRACTION * radius).ln();
    for step in 1..=max_steps {
        let y = coords.to_matrix(&e.center);
        let gram = GramMatrix::from_symmetric_unchecked(y.clone());
        let sep = separation_oracle(inst, &gram, 0.0)?;
        let (a, b) = match sep.cut(coords.n) {
            Some(cut) => {
                // <A, Y> = a . y in scaled coordinates
                (coords.to_vec(&cut.a), cut.bound)
            }
            None => {
                let (value, grad) = sdp_value_and_supergradient(inst, &gram);
                if value >= level {
                    return Ok((Some((y, value)), step));
                }
                if grad.norm() == 0.0 {
                    return Ok((None, step));
                }
                // value(Y') <= value(Y) + <G, Y' - Y>, so value(Y') >= level
                // requires <-G, Y'> <= value - level - <G, Y>
                let g = coords.to_vec(&grad);
                (-&g, value - level - g.dot(&e.center))
            }
        };
        if let CutOutcome::Empty = e.cut(&a, b)? {
            return Ok((None, step));
        }
        if e.log_det / (2.0 * m) < floor {
            return Ok((None, step));
        }
    }
    Ok((None, max_steps))
}

/// Solves the lifted problem with the ellipsoid method and bisection on the
/// objective level, then factors the result into points.
///
/// The initial ball is centered at `diag(l^2)/2` with radius `sum l^2`,
/// which contains every feasible matrix. Limited to
/// `n <= ELLIPSOID_MAX_N`.
pub fn ellipsoid_solve(inst: &Instance, params: &SolveParams) -> Result<SolveResult> {
    params.validate()?;
    let n = inst.n();
    if n > ELLIPSOID_MAX_N {
        return Err(Error::TooLarge {
            what: "ellipsoid backend",
            max: ELLIPSOID_MAX_N,
            found: n,
        });
    }
    let bounds: Vec<f64> = inst.radii().iter().map(|l| l * l).collect();
    let diag = DMatrix::from_diagonal(&DVector::from_vec(bounds.clone()));
    let radius: f64 = bounds.iter().sum();
    if n < 2 || !inst.has_positive_weight() || radius == 0.0 {
        let config = Configuration::zeros(n, n.max(1))?;
        return finish(inst, params, config, 0, vec![0.0]);
    }

    let coords = Coords::new(n);
    let start = coords.to_vec(&(&diag * 0.5));
    let radius = radius * (1.0 + 1e-9);
    // diag(l^2) is feasible
    let mut best = diag.clone();
    let mut lo = sdp_value(inst, &GramMatrix::from_symmetric_unchecked(diag));
    let mut hi: f64 = inst
        .pairs()
        .map(|(i, j, w)| w * (inst.radius(i) + inst.radius(j)))
        .sum();
    let rel = params.tol.max(BISECTION_REL_TOL);
    let dim = coords.dim() as f64;
    // enough steps to shrink the mean semi-axis to the floor, with margin
    let max_steps = (4.0 * dim * (dim + 1.0) * (1.0 / MIN_RADIUS_FRACTION).ln()) as usize + 1000;
    let mut trace = vec![lo];
    let mut iterations = 0;
    while hi - lo > rel * hi {
        let level = 0.5 * (lo + hi);
        let (found, steps) = find_level(inst, &coords, &start, radius, level, max_steps)?;
        iterations += steps;
        match found {
            Some((y, value)) => {
                best = y;
                lo = value.max(level);
                hi = hi.max(lo);
            }
            None => hi = level,
        }
        trace.push(lo);
    }

    let best = radial_rescale(&best, &bounds);
    let factored = factor_gram(&GramMatrix::from_symmetric_unchecked(best), 1e-10)?;
    let factored = factored.map_points(|i, p| {
        let r = norm(p);
        let l = inst.radius(i);
        if r > l {
            let s = if r > 0.0 { l / r } else { 0.0 };
            p.iter_mut().for_each(|c| *c *= s);
        }
    });
    let config = if params.reduce_rank {
        factored
    } else {
        factored.padded(n)
    };
    finish(inst, params, config, iterations, trace)
}
