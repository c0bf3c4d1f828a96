//! Doubled spaces `D_Σ = H_Σ ⊗ H_Σ̄` and their operator picture.
//!
//! An element `ψ ⊗ η` acts on `H_Σ` by `ξ ↦ ψ ⟨I ι(η), ξ⟩`. Adjoints and
//! positivity refer to the Hilbertization of `H_Σ` (negative part with the
//! sign of its inner product flipped), so the matrix returned by
//! [`DoubledSpace::op_from_tensor`] is read in the Hilbertized basis.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{GbfError, Result};
use crate::graded::{parity_sign, Half, Layout, Slot, Tensor};
use crate::linalg::{self, CMatrix, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct DoubledSpace {
    base: Layout,
    layout: Layout,
    /// `⟨I ι(f_j), e_j⟩`, the only nonzero entry of the functional of `f_j`.
    pairing: Vec<Complex64>,
}

impl DoubledSpace {
    pub fn new(base: Layout) -> Result<Self> {
        if base.slots().iter().any(|s| s.half != Half::Primary) {
            return Err(GbfError::InvalidArgument(
                "doubled space needs a primary base layout".into(),
            ));
        }
        let mirror = base.relabel(|s| Slot::mirror(s.label.clone()))?;
        let layout = base.concat(&mirror)?;
        let n = base.dim();
        let mut pairing = Vec::with_capacity(n);
        for j in 0..n {
            let f = Tensor::basis(base.clone(), j);
            let functional = f.iota().signature_map();
            pairing.push(functional.inner(&Tensor::basis(base.clone(), j))?);
        }
        Ok(Self {
            base,
            layout,
            pairing,
        })
    }

    pub fn base(&self) -> &Layout {
        &self.base
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.base.dim() + col
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.base.dim(), idx % self.base.dim())
    }

    pub fn zeros(&self) -> Tensor {
        Tensor::zeros(self.layout.clone())
    }

    pub fn basis(&self, idx: usize) -> Tensor {
        Tensor::basis(self.layout.clone(), idx)
    }

    /// f-degree of basis element `e_m ⊗ f_n`.
    pub fn fdeg(&self, idx: usize) -> u8 {
        self.layout.fdeg(idx)
    }

    /// Signature of basis element `e_m ⊗ f_n` with respect to the
    /// Hilbert–Schmidt pairing: `[m] + [n] + |n|`.
    pub fn signature(&self, idx: usize) -> u8 {
        let (m, n) = self.split(idx);
        self.base.sig(m) ^ self.base.sig(n) ^ self.base.fdeg(n)
    }

    /// The bi-grading `(f-degree, signature)` of each tensor factor.
    pub fn bigrade(&self, idx: usize) -> ((u8, u8), (u8, u8)) {
        let (m, n) = self.split(idx);
        (
            (self.base.fdeg(m), self.base.fdeg(n)),
            (self.base.sig(m), self.base.sig(n)),
        )
    }

    fn check(&self, t: &Tensor) -> Result<()> {
        if t.layout().same_shape(&self.layout) {
            Ok(())
        } else {
            Err(GbfError::SpaceMismatch(
                "element does not belong to this doubled space".into(),
            ))
        }
    }

    /// Element from a `dim × dim` coefficient matrix (row = `H_Σ` index).
    pub fn from_coefficients(&self, c: &CMatrix) -> Result<Tensor> {
        let n = self.base.dim();
        if c.nrows() != n || c.ncols() != n {
            return Err(GbfError::SpaceMismatch("coefficient matrix shape".into()));
        }
        let coeffs = (0..n * n).map(|k| c[(k / n, k % n)]).collect();
        Tensor::from_coeffs(self.layout.clone(), coeffs)
    }

    pub fn coefficients(&self, t: &Tensor) -> Result<CMatrix> {
        self.check(t)?;
        let n = self.base.dim();
        Ok(CMatrix::from_fn(n, n, |i, j| t.coeffs()[i * n + j]))
    }

    /// Operator on `H_Σ` represented by `σ`.
    pub fn op_from_tensor(&self, sigma: &Tensor) -> Result<CMatrix> {
        self.check(sigma)?;
        let n = self.base.dim();
        Ok(CMatrix::from_fn(n, n, |i, j| {
            sigma.coeffs()[i * n + j] * self.pairing[j]
        }))
    }

    /// Inverse of [`op_from_tensor`](Self::op_from_tensor).
    pub fn tensor_from_op(&self, op: &CMatrix) -> Result<Tensor> {
        let n = self.base.dim();
        if op.nrows() != n || op.ncols() != n {
            return Err(GbfError::SpaceMismatch("operator shape".into()));
        }
        let coeffs = (0..n * n)
            .map(|k| op[(k / n, k % n)] / self.pairing[k % n])
            .collect();
        Tensor::from_coeffs(self.layout.clone(), coeffs)
    }

    /// `ι*: D_Σ → D_Σ̄`, the orientation reversal of the whole doubled
    /// hypersurface. Slot names are kept; the result is read on `Σ̄`.
    pub fn iota_star(&self, sigma: &Tensor) -> Result<Tensor> {
        self.check(sigma)?;
        Ok(sigma.iota())
    }

    /// Real structure `σ ↦ σ†`: `ψ ⊗ η ↦ ι(η) ⊗ ι(ψ)`.
    pub fn dagger(&self, sigma: &Tensor) -> Result<Tensor> {
        let reversed = self.iota_star(sigma)?;
        let swapped = reversed.relabel(|s| Slot {
            label: s.label.clone(),
            half: match s.half {
                Half::Primary => Half::Mirror,
                Half::Mirror => Half::Primary,
            },
        })?;
        swapped.reorder(self.layout.slots())
    }

    /// Graded Hilbert–Schmidt pairing
    /// `Σ_n (−1)^{|ζ_n|+[ζ_n]} ⟨σ′ζ_n, σζ_n⟩`.
    pub fn hs_inner(&self, left: &Tensor, right: &Tensor) -> Result<Complex64> {
        let a = self.op_from_tensor(left)?;
        let b = self.op_from_tensor(right)?;
        let n = self.base.dim();
        let mut acc = ZERO;
        for col in 0..n {
            let weight = parity_sign(self.base.fdeg(col) ^ self.base.sig(col));
            let mut column = ZERO;
            for row in 0..n {
                column += a[(row, col)].conj() * b[(row, col)] * self.base.space_metric(row);
            }
            acc += column * weight;
        }
        Ok(acc)
    }

    pub fn is_self_adjoint(&self, sigma: &Tensor, tol: f64) -> Result<bool> {
        let d = self.dagger(sigma)?;
        Ok(d.max_abs_diff(sigma)? <= tol)
    }

    /// Positive iff the Hilbertized operator is self-adjoint and has no
    /// eigenvalue below `−tol`.
    pub fn is_positive(&self, sigma: &Tensor, tol: f64) -> Result<bool> {
        let m = self.op_from_tensor(sigma)?;
        if linalg::hermiticity_deviation(&m) > tol {
            return Ok(false);
        }
        Ok(linalg::is_positive_semidefinite(&m, tol))
    }

    pub fn min_eigenvalue(&self, sigma: &Tensor) -> Result<f64> {
        let m = self.op_from_tensor(sigma)?;
        Ok(linalg::hermitian_eigenvalues(&m)
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    /// Mask of the product-basis indices with even f-degree on both factors.
    pub fn even_block_mask(&self) -> Vec<bool> {
        (0..self.base.dim())
            .map(|i| self.base.fdeg(i) == 0)
            .collect()
    }

    /// Keep only the entries in the combined grading `D_{Σ,0}` (total
    /// f-degree even), and optionally only signature `+`.
    pub fn project_even(&self, sigma: &Tensor, positive_signature: bool) -> Result<Tensor> {
        self.check(sigma)?;
        let mut out = sigma.clone();
        for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
            if self.fdeg(idx) != 0 || (positive_signature && self.signature(idx) != 0) {
                *c = ZERO;
            }
        }
        Ok(out)
    }

    /// Random positive element supported on `D_{Σ,0,+}`. Odd diagonal
    /// entries carry signature `−` there, so only the even block contributes.
    pub fn random_positive_even(&self, rng: &mut impl Rng) -> Result<Tensor> {
        let n = self.base.dim();
        let mut m = linalg::random_psd(rng, n);
        for i in 0..n {
            for j in 0..n {
                let even = self.base.fdeg(i) == 0 && self.base.fdeg(j) == 0;
                if !even || self.base.sig(i) != self.base.sig(j) {
                    m[(i, j)] = ZERO;
                }
            }
        }
        self.tensor_from_op(&m)
    }

    /// Random self-adjoint element supported on `D_{Σ,0}`.
    pub fn random_self_adjoint_even(&self, rng: &mut impl Rng) -> Result<Tensor> {
        let n = self.base.dim();
        let mut m = linalg::random_hermitian(rng, n);
        for i in 0..n {
            for j in 0..n {
                if self.fdeg(self.index(i, j)) != 0 {
                    m[(i, j)] = ZERO;
                }
            }
        }
        self.tensor_from_op(&m)
    }

    pub fn random_element(&self, rng: &mut impl Rng) -> Tensor {
        let coeffs = linalg::random_vector(rng, self.dim());
        Tensor::from_coeffs(self.layout.clone(), coeffs).expect("shape")
    }
}

trait Metric {
    fn space_metric(&self, idx: usize) -> f64;
}

impl Metric for Layout {
    fn space_metric(&self, idx: usize) -> f64 {
        parity_sign(self.sig(idx))
    }
}

/// `τ*`: assemble doubled elements of the parts into the doubled space of the
/// whole. Each part contributes its primary and mirror factors; the result is
/// the graded reordering into `[whole primary…, whole mirror…]`.
pub fn tau_star(parts: &[&Tensor], target: &DoubledSpace) -> Result<Tensor> {
    tau_star_with(parts, target, true)
}

pub fn tau_star_with(parts: &[&Tensor], target: &DoubledSpace, graded: bool) -> Result<Tensor> {
    let mut acc = Tensor::scalar(Complex64::new(1.0, 0.0));
    for p in parts {
        acc = acc.kron(p)?;
    }
    let r = crate::graded::Reordering::new(acc.layout(), target.layout().slots())?;
    let r = if graded { r } else { r.ungraded() };
    r.apply(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedKreinSpace;
    use crate::linalg::{max_abs, rng_from_seed, ONE};

    fn base(spaces: &[(&str, GradedKreinSpace)]) -> Layout {
        Layout::new(
            spaces
                .iter()
                .map(|(l, s)| (Slot::primary(*l), s.clone()))
                .collect(),
        )
        .unwrap()
    }

    fn qubit() -> DoubledSpace {
        DoubledSpace::new(base(&[("a", GradedKreinSpace::bosonic(2))])).unwrap()
    }

    fn fermionic_pair() -> DoubledSpace {
        let s = GradedKreinSpace::new(vec![0, 1], vec![0, 1]).unwrap();
        DoubledSpace::new(base(&[("a", s.clone()), ("b", s)])).unwrap()
    }

    #[test]
    fn rank_one_basis_is_matrix_unit() {
        let d = qubit();
        let m = d.op_from_tensor(&d.basis(d.index(0, 0))).unwrap();
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m.iter().filter(|c| c.norm() > 0.0).count(), 1);
    }

    #[test]
    fn identity_element() {
        let d = qubit();
        let id = d.basis(d.index(0, 0)).add(&d.basis(d.index(1, 1))).unwrap();
        let m = d.op_from_tensor(&id).unwrap();
        assert!(max_abs(&(m - CMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn negative_vector_rank_one_is_unsigned() {
        // the I factor cancels the negative metric: (e₁⊗f₁)ξ = e₁ ξ₁
        let s = GradedKreinSpace::new(vec![0, 0], vec![0, 1]).unwrap();
        let d = DoubledSpace::new(base(&[("a", s)])).unwrap();
        let m = d.op_from_tensor(&d.basis(d.index(1, 1))).unwrap();
        assert_eq!(m[(1, 1)], ONE);
    }

    #[test]
    fn dagger_matches_hilbert_adjoint() {
        let mut rng = rng_from_seed(5);
        for d in [qubit(), fermionic_pair()] {
            for _ in 0..10 {
                let s = d.random_element(&mut rng);
                let lhs = d.op_from_tensor(&d.dagger(&s).unwrap()).unwrap();
                let rhs = d.op_from_tensor(&s).unwrap().adjoint();
                assert!(max_abs(&(lhs - rhs)) < 1e-12);
                assert!(d.dagger(&d.dagger(&s).unwrap()).unwrap().max_abs_diff(&s).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn hs_on_matrix_units() {
        let d = qubit();
        let e00 = d.basis(d.index(0, 0));
        let e11 = d.basis(d.index(1, 1));
        assert_eq!(d.hs_inner(&e00, &e00).unwrap(), ONE);
        assert_eq!(d.hs_inner(&e00, &e11).unwrap(), ZERO);
    }

    #[test]
    fn positivity() {
        let d = qubit();
        let e00 = d.basis(d.index(0, 0));
        assert!(d.is_positive(&e00, 1e-10).unwrap());
        assert!(!d.is_positive(&e00.scale(-ONE), 1e-10).unwrap());
    }

    #[test]
    fn tensor_op_roundtrip() {
        let d = fermionic_pair();
        let mut rng = rng_from_seed(9);
        let s = d.random_element(&mut rng);
        let back = d.tensor_from_op(&d.op_from_tensor(&s).unwrap()).unwrap();
        assert!(back.max_abs_diff(&s).unwrap() < 1e-14);
    }

    #[test]
    fn random_positive_even_is_positive() {
        let d = fermionic_pair();
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let s = d.random_positive_even(&mut rng).unwrap();
            assert!(d.is_positive(&s, 1e-10).unwrap());
            assert_eq!(d.project_even(&s, true).unwrap(), s);
        }
    }
}
