//! Checks on the state spaces themselves: validity, the orientation map `ι`,
//! and the tensor maps `τ` of registered decompositions.

use num_complex::Complex64;

use crate::amplitude::SignConvention;
use crate::error::Result;
use crate::graded::{parity_sign, Layout, Tensor};
use crate::linalg::{self, rng_from_seed};
use crate::report::CheckReport;
use crate::theory::TheorySpec;

/// Every attached space is a valid graded Krein space.
pub fn check_t1(theory: &TheorySpec, tol: f64) -> Vec<CheckReport> {
    theory
        .spaces
        .iter()
        .map(|(label, s)| match s.validate() {
            Ok(()) => CheckReport::new("T1", label, 0.0, tol),
            Err(e) => CheckReport::new("T1", label, f64::INFINITY, tol).fail(&e.to_string()),
        })
        .collect()
}

fn random_tensor(layout: &Layout, seed: u64) -> Tensor {
    let mut rng = rng_from_seed(seed);
    Tensor::from_coeffs(layout.clone(), linalg::random_vector(&mut rng, layout.dim())).expect("shape")
}

/// `ι` is an involution with `⟨ιψ, ιφ⟩ = ⟨φ, ψ⟩`, on every hypersurface.
pub fn check_t1b(theory: &TheorySpec, hypersurface: &str, tol: f64, seed: u64) -> Result<CheckReport> {
    let layout = theory.layout(hypersurface)?;
    let mut dev: f64 = 0.0;
    for k in 0..4 {
        let psi = random_tensor(&layout, seed.wrapping_add(2 * k));
        let phi = random_tensor(&layout, seed.wrapping_add(2 * k + 1));
        let scale = 1.0 + psi.inner(&psi)?.norm() + phi.inner(&phi)?.norm();
        dev = dev.max(psi.iota().iota().max_abs_diff(&psi)?);
        dev = dev.max((psi.iota().inner(&phi.iota())? - phi.inner(&psi)?).norm() / scale);
    }
    Ok(CheckReport::new("T1b", hypersurface, dev, tol))
}

fn two_part(theory: &TheorySpec, index: usize) -> Option<(String, String, String)> {
    let d = &theory.system.decompositions[index];
    (d.parts.len() == 2).then(|| (d.whole.clone(), d.parts[0].clone(), d.parts[1].clone()))
}

/// `τ` is isometric and obeys the graded transposition law
/// `τ(ψ₂⊗ψ₁) = (−1)^{|ψ₁||ψ₂|} τ(ψ₁⊗ψ₂)` on homogeneous basis vectors.
pub fn check_t2(theory: &TheorySpec, index: usize, tol: f64, conv: SignConvention) -> Result<CheckReport> {
    let d = &theory.system.decompositions[index];
    let target = format!("decomposition#{index}({})", d.whole);
    let Some((whole, a, b)) = two_part(theory, index) else {
        return Ok(CheckReport::new("T2", &target, 0.0, tol));
    };
    let (la, lb) = (theory.layout(&a)?, theory.layout(&b)?);
    let tau = |x: &Tensor, y: &Tensor, swap: bool| {
        if swap {
            theory.tau_with(&[(&b, y), (&a, x)], &whole, conv.koszul)
        } else {
            theory.tau_with(&[(&a, x), (&b, y)], &whole, conv.koszul)
        }
    };
    let mut dev: f64 = 0.0;
    for i in 0..la.dim() {
        for j in 0..lb.dim() {
            let (x, y) = (Tensor::basis(la.clone(), i), Tensor::basis(lb.clone(), j));
            let sign = parity_sign(la.fdeg(i) & lb.fdeg(j));
            let fwd = tau(&x, &y, false)?;
            let rev = tau(&x, &y, true)?;
            dev = dev.max(rev.max_abs_diff(&fwd.scale(Complex64::new(sign, 0.0)))?);
        }
    }
    for k in 0..3 {
        let seed = 100 + 4 * k;
        let (x1, y1) = (random_tensor(&la, seed), random_tensor(&lb, seed + 1));
        let (x2, y2) = (random_tensor(&la, seed + 2), random_tensor(&lb, seed + 3));
        let lhs = tau(&x1, &y1, false)?.inner(&tau(&x2, &y2, false)?)?;
        let rhs = x1.inner(&x2)? * y1.inner(&y2)?;
        dev = dev.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    Ok(CheckReport::new("T2", &target, dev, tol))
}

/// `ι(τ(ψ₁⊗ψ₂)) = (−1)^{|ψ₁||ψ₂|} τ(ιψ₁⊗ιψ₂)` on homogeneous basis vectors.
pub fn check_t2b(theory: &TheorySpec, index: usize, tol: f64) -> Result<CheckReport> {
    let d = &theory.system.decompositions[index];
    let target = format!("decomposition#{index}({})", d.whole);
    let Some((whole, a, b)) = two_part(theory, index) else {
        return Ok(CheckReport::new("T2b", &target, 0.0, tol));
    };
    let (la, lb) = (theory.layout(&a)?, theory.layout(&b)?);
    let mut dev: f64 = 0.0;
    for i in 0..la.dim() {
        for j in 0..lb.dim() {
            let (x, y) = (Tensor::basis(la.clone(), i), Tensor::basis(lb.clone(), j));
            let lhs = theory.tau(&[(&a, &x), (&b, &y)], &whole)?.iota();
            let rhs = theory
                .tau(&[(&a, &x.iota()), (&b, &y.iota())], &whole)?
                .scale(Complex64::new(parity_sign(la.fdeg(i) & lb.fdeg(j)), 0.0));
            dev = dev.max(lhs.max_abs_diff(&rhs)?);
        }
    }
    Ok(CheckReport::new("T2b", &target, dev, tol))
}
