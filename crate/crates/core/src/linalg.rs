//! Dense complex linear algebra helpers shared by the Fock and qudit
//! backends.
//!
//! Everything here works on `Array2<C64>` in row-major layout. Matrices are
//! small enough (a few thousand rows at most) that dense LAPACK routines via
//! `ndarray-linalg` are the right tool.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO, SVD};

use crate::{C64, Result};

/// `n x n` complex identity.
pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

/// Trace.
pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Unitary `exp(i t H)` for Hermitian `H`, via eigendecomposition.
///
/// Exactly diagonal generators (number operators, discrete phase vectors)
/// short-circuit to elementwise phases so they stay diagonal to the last
/// bit. Otherwise only the lower triangle of `h` is referenced.
pub fn expi_hermitian(h: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    if h.indexed_iter().all(|((i, j), z)| i == j || (z.re == 0.0 && z.im == 0.0)) {
        return Ok(Array2::from_diag(
            &h.diag().mapv(|z| C64::new(0.0, t * z.re).exp()),
        ));
    }
    let (eigs, vecs): (Array1<f64>, Array2<C64>) = h.eigh(UPLO::Lower)?;
    // eigh on a row-major array hands back the eigenvectors of the
    // transpose (LAPACK reads the buffer column-major), so conjugate:
    // h = W diag(eigs) W^dag with W = conj(vecs).
    let vecs = vecs.mapv(|z| z.conj());
    // U = W diag(e^{i t lambda}) W^dag, scaling columns of W in place.
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let phase = C64::new(0.0, t * eigs[j]).exp();
        col.mapv_inplace(|x| x * phase);
    }
    Ok(scaled.dot(&dagger(&vecs)))
}

/// Largest singular value.
pub fn op_norm(a: &Array2<C64>) -> f64 {
    let (_, s, _) = a.svd(false, false).expect("svd of finite matrix");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Diagonal unitary `diag(e^{i phi_0}, ..., e^{i phi_{n-1}})`.
pub fn diag_unitary(phases: &[f64]) -> Array2<C64> {
    Array2::from_diag(&phases.iter().map(|&p| C64::new(0.0, p).exp()).collect::<Array1<_>>())
}

/// Distance `min_phi || u - e^{i phi} v ||_op`, with the minimizing phase
/// taken from `arg tr(v^dag u)`.
///
/// For unitaries that agree up to a global phase this is zero (to rounding);
/// when `tr(v^dag u)` vanishes the candidate phase is meaningless but the
/// returned distance is still an upper bound for the true minimum over the
/// reported phase only.
pub fn phase_aligned_distance(u: &Array2<C64>, v: &Array2<C64>) -> f64 {
    let t = trace(&dagger(v).dot(u));
    let phase = if t.norm() > 0.0 { t / t.norm() } else { C64::new(1.0, 0.0) };
    op_norm(&(u - &v.mapv(|x| x * phase)))
}

/// Hermitian part `(a + a^dag)/2`, used to clean up numerically symmetric
/// generators before an eigensolve.
pub fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    let ad = dagger(a);
    (a + &ad).mapv(|x| 0.5 * x)
}

/// Trace distance `(1/2)||a - b||_1` between two (numerically) Hermitian
/// matrices: half the absolute eigenvalue sum of the hermitized difference.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> Result<f64> {
    let diff = hermitize(&(a - b));
    let (eigs, _): (Array1<f64>, Array2<C64>) = diff.eigh(UPLO::Lower)?;
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expi_pauli_x_matches_closed_form() {
        let x = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let t = 0.7;
        let u = expi_hermitian(&x, t).unwrap();
        // e^{i t X} = cos t I + i sin t X
        assert_abs_diff_eq!(u[[0, 0]].re, t.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[[0, 1]].im, t.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[[1, 0]].im, t.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[[0, 0]].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expi_keeps_diagonal_generators_exactly_diagonal() {
        let h = Array2::from_diag(&ndarray::arr1(&[c(0.5, 0.0), c(1.5, 0.0), c(2.5, 0.0)]));
        let u = expi_hermitian(&h, 2.0).unwrap();
        for ((i, j), z) in u.indexed_iter() {
            if i != j {
                assert_eq!(*z, c(0.0, 0.0));
            } else {
                assert_abs_diff_eq!(z.re, (2.0 * (i as f64 + 0.5)).cos(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = ndarray::array![[c(1.0, 0.0), c(2.0, 0.0)]];
        let b = ndarray::array![[c(0.0, 1.0)], [c(3.0, 0.0)]];
        let k = kron(&a, &b);
        assert_eq!(k.shape(), &[2, 2]);
        assert_eq!(k[[0, 1]], c(0.0, 2.0));
        assert_eq!(k[[1, 1]], c(6.0, 0.0));
    }

    #[test]
    fn op_norm_of_diagonal() {
        let a = Array2::from_diag(&ndarray::arr1(&[c(3.0, 0.0), c(0.0, -4.0)]));
        assert_abs_diff_eq!(op_norm(&a), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_aligned_distance_ignores_global_phase() {
        let u = diag_unitary(&[0.3, 1.1, -0.4]);
        let v = u.mapv(|x| x * c(0.0, 1.0));
        assert!(phase_aligned_distance(&u, &v) < 1e-14);
        // and detects a genuine difference
        let w = diag_unitary(&[0.3, 1.1, 0.4]);
        assert!(phase_aligned_distance(&u, &w) > 0.1);
    }
}
