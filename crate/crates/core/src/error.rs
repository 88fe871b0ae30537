use std::fmt;

use thiserror::Error;

use crate::types::GramMatrix;

/// A single problem found while validating raw instance data.
///
/// Indices are stored 0-based and displayed 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyInstance,
    RadiiLength {
        expected: usize,
        found: usize,
    },
    IndexOutOfRange {
        i: usize,
        j: usize,
        n: usize,
    },
    DiagonalWeight {
        i: usize,
        weight: f64,
    },
    NegativeWeight {
        i: usize,
        j: usize,
        weight: f64,
    },
    NonFiniteWeight {
        i: usize,
        j: usize,
    },
    AsymmetricWeight {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    NegativeRadius {
        i: usize,
        radius: f64,
    },
    NonFiniteRadius {
        i: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::EmptyInstance => write!(f, "instance must have at least one point"),
            Violation::RadiiLength { expected, found } => {
                write!(f, "expected {expected} radii, found {found}")
            }
            Violation::IndexOutOfRange { i, j, n } => {
                write!(f, "weight index ({},{}) out of range 1..={n}", i + 1, j + 1)
            }
            Violation::DiagonalWeight { i, weight } => {
                write!(
                    f,
                    "nonzero diagonal weight ({},{}) = {weight}",
                    i + 1,
                    i + 1
                )
            }
            Violation::NegativeWeight { i, j, .. } => {
                write!(f, "negative weight ({},{})", i + 1, j + 1)
            }
            Violation::NonFiniteWeight { i, j } => {
                write!(f, "non-finite weight ({},{})", i + 1, j + 1)
            }
            Violation::AsymmetricWeight {
                i,
                j,
                forward,
                backward,
            } => write!(
                f,
                "asymmetric weight ({},{}): {forward} vs {backward}",
                i + 1,
                j + 1
            ),
            Violation::NegativeRadius { i, .. } => write!(f, "negative radius {}", i + 1),
            Violation::NonFiniteRadius { i } => write!(f, "non-finite radius {}", i + 1),
        }
    }
}

/// Every violation found in one pass over the raw data.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Invalid(#[from] ValidationErrors),

    #[error("configuration has {found} points, instance has {expected}")]
    PointCount { expected: usize, found: usize },

    #[error("point {index} has dimension {found}, expected {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("configuration must have at least one point of dimension >= 1")]
    EmptyConfiguration,

    #[error("non-finite coordinate in point {0}")]
    NonFiniteCoordinate(usize),

    #[error("dual vector has {found} entries, expected {expected}")]
    DualLength { expected: usize, found: usize },

    #[error("dual multiplier x[{index}] = {value} is negative or not finite")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("configuration is infeasible at points {0:?}")]
    Infeasible(Vec<usize>),

    #[error("configuration is degenerate: coincident points with positive weight")]
    Degenerate,

    #[error("no nonnegative multiplier exists for pinned points {0:?}")]
    Unextractable(Vec<usize>),

    #[error("dual multipliers sum to zero")]
    ZeroDualSum,

    #[error("need at least {min} points, got {found}")]
    TooFewPoints { min: usize, found: usize },

    #[error("{what} limited to n <= {max}, got {found}")]
    TooLarge {
        what: &'static str,
        max: usize,
        found: usize,
    },

    #[error("alternating projection did not converge in {iterations} iterations (residual {residual:e})")]
    ProjectionNotConverged {
        iterations: usize,
        residual: f64,
        best: Box<GramMatrix>,
    },

    #[error("ellipsoid method failed: {0}")]
    Ellipsoid(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid graph: {0}")]
    Graph(String),
}

pub type Result<T> = std::result::Result<T, Error>;
