//! Problem data and candidate solutions.
//!
//! All types are immutable after construction. Indices are 0-based in the
//! API; the file formats used by the command line are 1-based.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result, ValidationErrors, Violation};

/// Unvalidated instance data, as read from a file or built by hand.
///
/// Weights may be given for either orientation of a pair; both orientations
/// are accepted as long as they agree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawInstance {
    pub n: usize,
    pub weights: Vec<(usize, usize, f64)>,
    pub radii: Vec<f64>,
}

/// A validated max-dispersion instance: `n` points, a symmetric nonnegative
/// pair weight `w(i,j)` with zero diagonal, and a ball radius `l(i)` per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    // keyed by (i, j) with i < j; zero weights are not stored
    weights: BTreeMap<(usize, usize), f64>,
    radii: Vec<f64>,
}

/// Checks raw instance data and returns a normalized [`Instance`], or every
/// violation found.
pub fn validate_instance(raw: &RawInstance) -> std::result::Result<Instance, ValidationErrors> {
    let mut errs = Vec::new();
    let n = raw.n;
    if n < 1 {
        errs.push(Violation::EmptyInstance);
    }
    if raw.radii.len() != n {
        errs.push(Violation::RadiiLength {
            expected: n,
            found: raw.radii.len(),
        });
    }
    for (i, &r) in raw.radii.iter().enumerate() {
        if !r.is_finite() {
            errs.push(Violation::NonFiniteRadius { i });
        } else if r < 0.0 {
            errs.push(Violation::NegativeRadius { i, radius: r });
        }
    }

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, w) in &raw.weights {
        if i >= n || j >= n {
            errs.push(Violation::IndexOutOfRange { i, j, n });
            continue;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if !w.is_finite() {
            errs.push(Violation::NonFiniteWeight { i: a, j: b });
            continue;
        }
        if i == j {
            if w != 0.0 {
                errs.push(Violation::DiagonalWeight { i, weight: w });
            }
            continue;
        }
        if w < 0.0 {
            errs.push(Violation::NegativeWeight {
                i: a,
                j: b,
                weight: w,
            });
            continue;
        }
        match weights.get(&(a, b)) {
            Some(&prev) if prev != w => errs.push(Violation::AsymmetricWeight {
                i: a,
                j: b,
                forward: prev,
                backward: w,
            }),
            _ => {
                weights.insert((a, b), w);
            }
        }
    }

    if !errs.is_empty() {
        return Err(ValidationErrors(errs));
    }
    weights.retain(|_, w| *w > 0.0);
    Ok(Instance {
        n,
        weights,
        radii: raw.radii.clone(),
    })
}

impl Instance {
    pub fn new(
        n: usize,
        weights: impl IntoIterator<Item = (usize, usize, f64)>,
        radii: Vec<f64>,
    ) -> Result<Self> {
        let raw = RawInstance {
            n,
            weights: weights.into_iter().collect(),
            radii,
        };
        Ok(validate_instance(&raw)?)
    }

    /// Every pair weighted by `w` and every radius equal to `radius`.
    pub fn uniform(n: usize, w: f64, radius: f64) -> Result<Self> {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j, w));
            }
        }
        Self::new(n, pairs, vec![radius; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Pairs `(i, j, w)` with `i < j` and `w > 0`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.values().fold(0.0, |m, &w| m.max(w))
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn has_positive_weight(&self) -> bool {
        !self.weights.is_empty()
    }

    /// Dense symmetric weight matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.pairs() {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        m
    }
}

/// `n` points in a shared Euclidean space of dimension `dim >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    // row-major, point i occupies coords[i*dim..(i+1)*dim]
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::EmptyConfiguration);
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Dimension {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::EmptyConfiguration);
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate(k / dim));
        }
        Ok(Self { dim, coords })
    }

    /// `n` points at the origin.
    pub fn zeros(n: usize, dim: usize) -> Result<Self> {
        Self::from_flat(dim, vec![0.0; n * dim])
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Gram matrix `Y_ij = p_i . p_j`.
    pub fn gram(&self) -> GramMatrix {
        let n = self.len();
        let m = DMatrix::from_fn(n, n, |i, j| dot(self.point(i), self.point(j)));
        GramMatrix::from_symmetric_unchecked(m)
    }

    /// Same points embedded in `dim >= self.dim()` by appending zero coordinates.
    pub fn padded(&self, dim: usize) -> Configuration {
        if dim <= self.dim {
            return self.clone();
        }
        let mut coords = Vec::with_capacity(self.len() * dim);
        for p in self.points() {
            coords.extend_from_slice(p);
            coords.extend(std::iter::repeat_n(0.0, dim - self.dim));
        }
        Configuration { dim, coords }
    }

    /// Applies `f` to every coordinate vector, keeping the dimension.
    pub(crate) fn map_points(&self, mut f: impl FnMut(usize, &mut [f64])) -> Configuration {
        let mut coords = self.coords.clone();
        for (i, p) in coords.chunks_exact_mut(self.dim).enumerate() {
            f(i, p);
        }
        Configuration {
            dim: self.dim,
            coords,
        }
    }

    pub(crate) fn check_against(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::PointCount {
                expected: inst.n(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// Nonnegative dual multipliers, one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeMultiplier { index, value });
        }
        Ok(Self(x))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Rescaled to unit sum; unchanged when the sum is zero.
    pub fn normalized(&self) -> DualVector {
        let s = self.sum();
        if s > 0.0 {
            DualVector(self.0.iter().map(|v| v / s).collect())
        } else {
            self.clone()
        }
    }

    pub(crate) fn check_against(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::DualLength {
                expected: inst.n(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// A symmetric `n x n` matrix of inner products. Positive semidefiniteness is
/// checked by the operations that need it, not here.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Accepts a square matrix that is symmetric up to `1e-12` relative
    /// asymmetry, and symmetrizes it exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(Self::from_symmetric_unchecked(m))
    }

    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        GramMatrix(sym)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSymmetric(f64::NAN));
    }
    let scale = 1.0 + m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Per-point gradient of the objective, the net repulsive force on each point.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pub(crate) dim: usize,
    pub(crate) forces: Vec<f64>,
    /// Some pair with positive weight had coincident points and was skipped.
    pub degenerate: bool,
}

impl ForceField {
    pub fn len(&self) -> usize {
        self.forces.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn force(&self, i: usize) -> &[f64] {
        &self.forces[i * self.dim..(i + 1) * self.dim]
    }

    pub fn forces(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.forces.chunks_exact(self.dim)
    }

    /// Sum of all forces; zero up to rounding.
    pub fn net(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.dim];
        for f in self.forces() {
            axpy(1.0, f, &mut total);
        }
        total
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
