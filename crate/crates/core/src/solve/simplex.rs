use crate::error::{Error, Result};
use crate::types::Configuration;

/// Vertices of the regular simplex inscribed in the unit sphere of
/// dimension `n - 1`: unit vectors with `p_i . p_j = -1/(n-1)` and centroid
/// at the origin.
///
/// Coordinates come from the Helmert basis of the sum-zero hyperplane, so
/// the construction is closed form.
pub fn simplex_configuration(n: usize) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, found: n });
    }
    let dim = n - 1;
    // |e_i - centroid| = sqrt((n-1)/n)
    let scale = ((n - 1) as f64 / n as f64).sqrt();
    let mut coords = vec![0.0; n * dim];
    for k in 1..=dim {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..n {
            let h = if i < k {
                1.0 / norm
            } else if i == k {
                -(k as f64) / norm
            } else {
                0.0
            };
            coords[i * dim + (k - 1)] = h / scale;
        }
    }
    Configuration::from_flat(dim, coords)
}
