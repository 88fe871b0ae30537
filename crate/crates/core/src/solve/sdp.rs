use nalgebra::DMatrix;

use crate::types::{GramMatrix, Instance};

/// Lifted objective `sum_{i<j} w(i,j) sqrt(Y_ii + Y_jj - 2 Y_ij)` and a
/// supergradient with respect to the symmetric matrix entries.
///
/// Each pair at positive distance `s` contributes `w/(2s)` to both diagonal
/// entries and `-w/(2s)` to each of `(i,j)` and `(j,i)`, so that
/// `<G, E>` is the directional derivative along a symmetric `E`. Negative
/// squared distances from rounding are clamped to zero; pairs at zero
/// distance contribute the zero supergradient.
pub fn sdp_value_and_supergradient(inst: &Instance, y: &GramMatrix) -> (f64, DMatrix<f64>) {
    let m = y.matrix();
    let n = m.nrows();
    let mut grad = DMatrix::zeros(n, n);
    let mut value = 0.0;
    for (i, j, w) in inst.pairs() {
        let sq = (m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)]).max(0.0);
        if sq == 0.0 {
            continue;
        }
        let s = sq.sqrt();
        value += w * s;
        let h = w / (2.0 * s);
        grad[(i, i)] += h;
        grad[(j, j)] += h;
        grad[(i, j)] -= h;
        grad[(j, i)] -= h;
    }
    (value, grad)
}

/// Value only.
pub fn sdp_value(inst: &Instance, y: &GramMatrix) -> f64 {
    let m = y.matrix();
    inst.pairs()
        .map(|(i, j, w)| w * (m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)]).max(0.0).sqrt())
        .sum()
}
