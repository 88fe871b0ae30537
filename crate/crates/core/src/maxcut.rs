//! Max-cut through the unit-ball dispersion problem.
//!
//! A graph becomes an instance with edge weights as pair weights and unit
//! radii. A solved configuration is rounded to a cut by random hyperplanes
//! through the origin.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{dot, Configuration, Instance};

/// Largest graph [`brute_force_maxcut`] will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// An undirected weighted graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Edges are `(i, j, w)` with `i < j < n` and finite `w >= 0`; each pair
    /// may appear once.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n < 1 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j, w) in &edges {
            if !(i < j && j < n) {
                return Err(Error::Graph(format!(
                    "edge ({},{}) must satisfy 1 <= i < j <= {n}",
                    i + 1,
                    j + 1
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Graph(format!(
                    "edge ({},{}) has invalid weight {w}",
                    i + 1,
                    j + 1
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Graph(format!(
                    "duplicate edge ({},{})",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Graph { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Total weight of edges whose endpoints are on different sides.
    pub fn cut_value(&self, side: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| side[i] != side[j])
            .map(|&(_, _, w)| w)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub side: Vec<bool>,
    pub value: f64,
}

/// Instance with `w(i,j)` the edge weight (0 if absent) and every radius 1.
pub fn graph_to_instance(g: &Graph) -> Instance {
    Instance::new(g.n, g.edges.iter().copied(), vec![1.0; g.n])
        .expect("a valid graph is a valid instance")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub best: Cut,
    /// Cut value of every trial, in order.
    pub values: Vec<f64>,
}

impl Rounding {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Random-hyperplane rounding: each trial draws a direction uniformly on the
/// sphere and puts vertex `i` on side `direction . p_i >= 0`. Trials share a
/// single generator seeded by `seed`; the earliest best trial wins.
pub fn hyperplane_round(
    cfg: &Configuration,
    g: &Graph,
    trials: usize,
    seed: u64,
) -> Result<Rounding> {
    if trials < 1 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    if cfg.len() != g.n {
        return Err(Error::PointCount {
            expected: g.n,
            found: cfg.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direction = vec![0.0; cfg.dim()];
    let mut values = Vec::with_capacity(trials);
    let mut best: Option<Cut> = None;
    for _ in 0..trials {
        loop {
            for d in direction.iter_mut() {
                *d = rng.sample(StandardNormal);
            }
            if direction.iter().any(|&d| d != 0.0) {
                break;
            }
        }
        let side: Vec<bool> = cfg.points().map(|p| dot(&direction, p) >= 0.0).collect();
        let value = g.cut_value(&side);
        values.push(value);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(Cut { side, value });
        }
    }
    Ok(Rounding {
        best: best.expect("trials >= 1"),
        values,
    })
}

/// Exact maximum cut by enumeration. Vertex 1 is fixed to side `false`, so
/// `2^(n-1)` partitions are scored; ties go to the lexicographically
/// smallest side pattern.
pub fn brute_force_maxcut(g: &Graph) -> Result<Cut> {
    if g.n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            what: "brute-force max-cut",
            max: BRUTE_FORCE_MAX_N,
            found: g.n,
        });
    }
    let n = g.n;
    // bit k of the mask is side[n-1-k], so increasing masks are increasing
    // lexicographic patterns with side[0] = false
    let side_of =
        |mask: u32| -> Vec<bool> { (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect() };
    let mut best_mask = 0u32;
    let mut best_value = f64::NEG_INFINITY;
    for mask in 0..(1u32 << (n - 1)) {
        let value: f64 = g
            .edges
            .iter()
            .filter(|&&(i, j, _)| (mask >> (n - 1 - i) & 1) != (mask >> (n - 1 - j) & 1))
            .map(|&(_, _, w)| w)
            .sum();
        if value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    Ok(Cut {
        side: side_of(best_mask),
        value: best_value,
    })
}
