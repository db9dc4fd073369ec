//! Per-pixel 3x3 Hermitian coherency matrices and their eigendecomposition.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative slack for the positive-semidefinite check: eigenvalues are
/// allowed down to `-PSD_SLACK * trace` before the matrix is rejected.
pub const PSD_SLACK: f64 = 1e-9;

/// A 3x3 Hermitian coherency matrix stored as its upper triangle.
///
/// Diagonal entries are real powers; the three off-diagonal entries are
/// complex. Hermitian symmetry is implied by the storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyMatrix {
    pub t11: f64,
    pub t22: f64,
    pub t33: f64,
    pub t12: Complex64,
    pub t13: Complex64,
    pub t23: Complex64,
}

impl CoherencyMatrix {
    pub fn new(t11: f64, t22: f64, t33: f64, t12: Complex64, t13: Complex64, t23: Complex64) -> Self {
        Self {
            t11,
            t22,
            t33,
            t12,
            t13,
            t23,
        }
    }

    /// Diagonal matrix with the given powers.
    pub fn diagonal(t11: f64, t22: f64, t33: f64) -> Self {
        Self::new(t11, t22, t33, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO)
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::diagonal(0.0, 0.0, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.t11 + self.t22 + self.t33
    }

    pub fn is_finite(&self) -> bool {
        self.t11.is_finite()
            && self.t22.is_finite()
            && self.t33.is_finite()
            && self.t12.re.is_finite()
            && self.t12.im.is_finite()
            && self.t13.re.is_finite()
            && self.t13.im.is_finite()
            && self.t23.re.is_finite()
            && self.t23.im.is_finite()
    }

    /// Expands to a full dense matrix, rows of columns `m[row][col]`.
    pub fn full(&self) -> [[Complex64; 3]; 3] {
        [
            [Complex64::new(self.t11, 0.0), self.t12, self.t13],
            [self.t12.conj(), Complex64::new(self.t22, 0.0), self.t23],
            [self.t13.conj(), self.t23.conj(), Complex64::new(self.t33, 0.0)],
        ]
    }

    /// Rebuilds the triangular storage from a full Hermitian matrix,
    /// keeping the upper triangle.
    pub fn from_full(m: &[[Complex64; 3]; 3]) -> Self {
        Self::new(m[0][0].re, m[1][1].re, m[2][2].re, m[0][1], m[0][2], m[1][2])
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(
            self.t11 * k,
            self.t22 * k,
            self.t33 * k,
            self.t12 * k,
            self.t13 * k,
            self.t23 * k,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.t11 + other.t11,
            self.t22 + other.t22,
            self.t33 + other.t33,
            self.t12 + other.t12,
            self.t13 + other.t13,
            self.t23 + other.t23,
        )
    }

    /// The nine stored real scalars in CSV column order:
    /// `t11,t22,t33,re_t12,im_t12,re_t13,im_t13,re_t23,im_t23`.
    pub fn to_scalars(&self) -> [f64; 9] {
        [
            self.t11, self.t22, self.t33, self.t12.re, self.t12.im, self.t13.re, self.t13.im,
            self.t23.re, self.t23.im,
        ]
    }

    pub fn from_scalars(s: [f64; 9]) -> Self {
        Self::new(
            s[0],
            s[1],
            s[2],
            Complex64::new(s[3], s[4]),
            Complex64::new(s[5], s[6]),
            Complex64::new(s[7], s[8]),
        )
    }
}

/// Eigendecomposition of a coherency matrix.
///
/// Eigenvalues are sorted descending; `eigenvectors[k]` is the unit-norm
/// column vector paired with `eigenvalues[k]`.
#[derive(Debug, Clone, Copy)]
pub struct EigenSystem {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [[Complex64; 3]; 3],
}

impl EigenSystem {
    /// Sum over k of `lambda_k e_k e_k^H`.
    pub fn reconstruct(&self) -> [[Complex64; 3]; 3] {
        let mut m = [[Complex64::ZERO; 3]; 3];
        for k in 0..3 {
            let e = &self.eigenvectors[k];
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] += e[r] * e[c].conj() * self.eigenvalues[k];
                }
            }
        }
        m
    }
}

/// Eigendecomposition of a 3x3 Hermitian matrix by cyclic Jacobi rotations.
///
/// Rotations are applied in the fixed pair order (0,1), (0,2), (1,2), so the
/// result is deterministic for a given input, including degenerate spectra.
/// Eigenvalues below `-PSD_SLACK * trace` are rejected; small negatives
/// within the slack are clamped to zero.
pub fn eig3_hermitian(t: &CoherencyMatrix) -> Result<EigenSystem> {
    if !t.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let mut a = t.full();
    let mut v = [
        [Complex64::new(1.0, 0.0), Complex64::ZERO, Complex64::ZERO],
        [Complex64::ZERO, Complex64::new(1.0, 0.0), Complex64::ZERO],
        [Complex64::ZERO, Complex64::ZERO, Complex64::new(1.0, 0.0)],
    ];

    let scale = off_diagonal_norm_sq(&a).max(t.trace() * t.trace()).max(1.0);
    let stop = scale * 1e-32;
    for _sweep in 0..64 {
        if off_diagonal_norm_sq(&a) <= stop {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            jacobi_rotate(&mut a, &mut v, p, q);
        }
    }

    let mut order = [0usize, 1, 2];
    let diag = [a[0][0].re, a[1][1].re, a[2][2].re];
    // stable descending sort; ties keep the lower original index first
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let slack = PSD_SLACK * t.trace().abs();
    let mut eigenvalues = [0.0; 3];
    let mut eigenvectors = [[Complex64::ZERO; 3]; 3];
    for (k, &idx) in order.iter().enumerate() {
        let lam = diag[idx];
        if lam < -slack {
            return Err(Error::NotPsd {
                min_eig: lam,
                slack,
            });
        }
        eigenvalues[k] = lam.max(0.0);
        let mut col = [v[0][idx], v[1][idx], v[2][idx]];
        let norm = (col.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if norm > 0.0 {
            for z in &mut col {
                *z /= norm;
            }
        }
        eigenvectors[k] = col;
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm_sq(a: &[[Complex64; 3]; 3]) -> f64 {
    2.0 * (a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr())
}

/// One complex Jacobi rotation zeroing `a[p][q]` (and `a[q][p]`), with the
/// rotation accumulated into `v`.
fn jacobi_rotate(a: &mut [[Complex64; 3]; 3], v: &mut [[Complex64; 3]; 3], p: usize, q: usize) {
    let apq = a[p][q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p][p].re;
    let aqq = a[q][q].re;
    // phase of the off-diagonal entry; the rotation below uses a_pq = r*phi
    let phi = apq / r;

    // tangent of the rotation angle from t^2 + 2*theta*t - 1 = 0
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // columns p and q of A' = J^H A J for rows m != p,q, then the pair block
    let m = 3 - p - q; // the remaining index for a 3x3 matrix
    let amp = a[m][p];
    let amq = a[m][q];
    a[m][p] = amp * c - amq * (phi.conj() * s);
    a[m][q] = amp * (phi * s) + amq * c;
    a[p][m] = a[m][p].conj();
    a[q][m] = a[m][q].conj();

    let new_pp = app * c * c - 2.0 * r * c * s + aqq * s * s;
    let new_qq = app * s * s + 2.0 * r * c * s + aqq * c * c;
    a[p][p] = Complex64::new(new_pp, 0.0);
    a[q][q] = Complex64::new(new_qq, 0.0);
    a[p][q] = Complex64::ZERO;
    a[q][p] = Complex64::ZERO;

    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = vp * c - vq * (phi.conj() * s);
        row[q] = vp * (phi * s) + vq * c;
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::random_psd;
    use super::*;

    fn frobenius(m: &[[Complex64; 3]; 3]) -> f64 {
        m.iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn diff_norm(a: &[[Complex64; 3]; 3], b: &[[Complex64; 3]; 3]) -> f64 {
        let mut d = [[Complex64::ZERO; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                d[r][c] = a[r][c] - b[r][c];
            }
        }
        frobenius(&d)
    }

    #[test]
    fn identity_eigenvalues() {
        let es = eig3_hermitian(&CoherencyMatrix::identity()).unwrap();
        for &l in &es.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_eigensystem() {
        let es = eig3_hermitian(&CoherencyMatrix::diagonal(3.0, 2.0, 1.0)).unwrap();
        assert_eq!(es.eigenvalues, [3.0, 2.0, 1.0]);
        for k in 0..3 {
            for r in 0..3 {
                let expect = if r == k { 1.0 } else { 0.0 };
                assert!((es.eigenvectors[k][r].norm() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn random_psd_reconstruction() {
        let mut state = 0x1234_5678_9abc_def0u64;
        for _ in 0..1000 {
            let t = random_psd(&mut state);
            let es = eig3_hermitian(&t).unwrap();
            let full = t.full();
            let rel = diff_norm(&es.reconstruct(), &full) / frobenius(&full);
            assert!(rel <= 1e-8, "reconstruction error {rel}");
            assert!(es.eigenvalues[0] >= es.eigenvalues[1]);
            assert!(es.eigenvalues[1] >= es.eigenvalues[2]);
            assert!(es.eigenvalues[2] >= 0.0);
            for k in 0..3 {
                let n: f64 = es.eigenvectors[k].iter().map(|z| z.norm_sqr()).sum();
                assert!((n.sqrt() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut t = CoherencyMatrix::identity();
        t.t12 = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(eig3_hermitian(&t), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn rejects_indefinite() {
        let t = CoherencyMatrix::diagonal(2.0, 1.0, -0.5);
        assert!(matches!(eig3_hermitian(&t), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn clamps_tiny_negative_eigenvalue() {
        let trace = 2.0 + 1.0;
        let t = CoherencyMatrix::diagonal(2.0, 1.0, -0.4e-9 * trace);
        let es = eig3_hermitian(&t).unwrap();
        assert_eq!(es.eigenvalues[2], 0.0);
    }
}
