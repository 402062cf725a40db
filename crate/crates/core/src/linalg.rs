//! Small dense complex linear algebra helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol * σ_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|v| **v > rel_tol * smax).count()
}

/// Orthonormal basis of `{v : m v = 0}` with cutoff `rel_tol * σ_max`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    // pad to at least square so that V is complete
    let rows = m.nrows().max(n);
    let mut a = CMatrix::zeros(rows, n);
    a.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.max();
    let cut = if smax == 0.0 {
        f64::INFINITY
    } else {
        rel_tol * smax
    };
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cut || smax == 0.0)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}

/// Smallest singular value and a unit vector `u` with `uᵀ m ≈ σ_min`
/// minimal, i.e. the best left-kernel candidate in the bilinear sense.
pub fn min_left_singular(m: &CMatrix) -> (f64, CVector) {
    // uᵀ M = (Mᵀ u)ᵀ, so work with Mᵀ
    let mt = m.transpose();
    let rows = mt.nrows().max(mt.ncols());
    let mut a = CMatrix::zeros(rows, mt.ncols());
    a.view_mut((0, 0), (mt.nrows(), mt.ncols())).copy_from(&mt);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, s)| (i, *s))
        .expect("nonempty matrix");
    (smin, v_t.row(imin).adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rank_and_null_space() {
        let m = CMatrix::from_row_slice(2, 3, &[c(1.0), c(2.0), c(3.0), c(2.0), c(4.0), c(6.0)]);
        assert_eq!(numerical_rank(&m, 1e-12), 1);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn left_kernel() {
        let m = CMatrix::from_row_slice(2, 3, &[c(1.0), c(2.0), c(3.0), c(2.0), c(4.0), c(6.0)]);
        let (s, u) = min_left_singular(&m);
        assert!(s < 1e-12);
        assert!((m.transpose() * u).norm() < 1e-12);
    }
}
