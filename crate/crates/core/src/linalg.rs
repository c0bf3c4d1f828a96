//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| random_complex(rng)).collect()
}

pub fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    let mut v = random_vector(rng, n);
    normalize(&mut v);
    v
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// diagonal of R absorbed into Q.
pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| random_complex(rng) / 2f64.sqrt());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| random_complex(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n);
    (&a + a.adjoint()).scale(0.5)
}

/// Random positive semidefinite matrix `B B†`.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> CMatrix {
    let b = random_matrix(rng, n);
    &b * b.adjoint()
}

/// Random positive semidefinite matrix `B B†` with `B` of size `n × rank`.
pub fn random_psd_rank(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let b = CMatrix::from_fn(n, rank, |_, _| random_complex(rng));
    &b * b.adjoint()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `true` iff every eigenvalue of the Hermitian part of `m` is above `−tol`,
/// decided by a Cholesky factorization of the shifted matrix.
pub fn is_positive_semidefinite(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    let mut a = (m + m.adjoint()).scale(0.5) + CMatrix::identity(n, n).scale(tol);
    // in-place Cholesky; a non-positive pivot means a negative direction
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= a[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)].conj();
            }
            a[(i, j)] = s / d;
        }
    }
    true
}

/// Split a Hermitian matrix into positive and negative spectral parts,
/// `m = plus − minus` with both positive semidefinite.
pub fn spectral_split(m: &CMatrix) -> (CMatrix, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut plus = CMatrix::zeros(n, n);
    let mut minus = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let proj = v * v.adjoint();
        if lambda >= 0.0 {
            plus += proj.scale(lambda);
        } else {
            minus += proj.scale(-lambda);
        }
    }
    (plus, minus)
}

/// Orthogonal projector onto the span of the given orthonormal vectors.
pub fn projector(vectors: &[Vec<Complex64>], n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for v in vectors {
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    p
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Gram–Schmidt: extend `basis` (assumed orthonormal) by the components of
/// `candidates` orthogonal to it. Vectors with residual norm below `tol` are
/// skipped.
pub fn extend_orthonormal(
    basis: &[Vec<Complex64>],
    candidates: &[Vec<Complex64>],
    tol: f64,
) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = basis.to_vec();
    let start = out.len();
    for c in candidates {
        let mut v = c.clone();
        // two passes for numerical stability
        for _ in 0..2 {
            for b in &out {
                let proj = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out.split_off(start)
}

/// Orthonormal basis of the span of `vectors`.
pub fn orthonormalize(vectors: &[Vec<Complex64>], tol: f64) -> Vec<Vec<Complex64>> {
    extend_orthonormal(&[], vectors, tol)
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}
