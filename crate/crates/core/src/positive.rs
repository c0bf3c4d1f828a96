//! Probability and expectation maps on doubled boundary spaces, and the
//! checks of the positive-formalism and expectation axioms.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use crate::amplitude::{
    anomaly, compose_observables_disjoint, disjoint_parts, glue_observable, product_functional, transfer,
    Functional, SelfGluing, SignConvention,
};
use crate::doubled::{tau_star_with, DoubledSpace};
use crate::error::{GbfError, Result};
use crate::graded::{parity_sign, reversal_sign, Layout, Reordering, Tensor};
use crate::linalg::{self, rng_from_seed, CMatrix, ZERO};
use crate::report::CheckReport;
use crate::theory::TheorySpec;

/// Linear functional on a doubled space `D_∂M`.
#[derive(Clone, Debug)]
pub struct DoubledFunctional {
    pub region: String,
    pub space: DoubledSpace,
    pub coeffs: Vec<Complex64>,
}

impl DoubledFunctional {
    pub fn evaluate(&self, sigma: &Tensor) -> Result<Complex64> {
        if !sigma.layout().same_shape(self.space.layout()) {
            return Err(GbfError::SpaceMismatch(format!(
                "element is not in the doubled boundary space of `{}`",
                self.region
            )));
        }
        Ok(self.coeffs.iter().zip(sigma.coeffs()).map(|(a, s)| a * s).sum())
    }

    /// Value on the element whose operator is `op`.
    pub fn evaluate_op(&self, op: &CMatrix) -> Result<Complex64> {
        let sigma = self.space.tensor_from_op(op)?;
        self.evaluate(&sigma)
    }

    pub fn max_abs_diff(&self, other: &[Complex64]) -> f64 {
        self.coeffs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `A^O_M(ψ⊗η) = ρ^O_M(ψ) ρ_M̄(η)`.
pub fn expectation_map(obs: &Functional, rho: &Functional) -> Result<DoubledFunctional> {
    if obs.region != rho.region || !obs.layout.same_shape(&rho.layout) {
        return Err(GbfError::InvalidArgument(format!(
            "observable on `{}` paired with amplitude on `{}`",
            obs.region, rho.region
        )));
    }
    let space = DoubledSpace::new(rho.layout.clone())?;
    let conj = rho.orientation_conjugate();
    let n = rho.layout.dim();
    let mut coeffs = vec![ZERO; n * n];
    for (i, o) in obs.coeffs.iter().enumerate() {
        if o.norm_sqr() == 0.0 {
            continue;
        }
        for (j, r) in conj.coeffs.iter().enumerate() {
            coeffs[i * n + j] = o * r;
        }
    }
    Ok(DoubledFunctional {
        region: rho.region.clone(),
        space,
        coeffs,
    })
}

/// `A_M(ψ⊗η) = ρ_M(ψ) ρ_M̄(η)`.
pub fn probability_map(rho: &Functional) -> Result<DoubledFunctional> {
    expectation_map(rho, rho)
}

/// Direct evaluation `Σ_n conj(ρ_M(ξ_n)) ρ^O_M(σ ξ_n)` for an operator `σ`.
pub fn operator_sum(obs: &Functional, rho: &Functional, op: &CMatrix) -> Complex64 {
    let n = rho.layout.dim();
    let mut acc = ZERO;
    for col in 0..n {
        let r = rho.coeffs[col];
        if r.norm_sqr() == 0.0 {
            continue;
        }
        let image: Complex64 = (0..n).map(|row| obs.coeffs[row] * op[(row, col)]).sum();
        acc += r.conj() * image;
    }
    acc
}

impl TheorySpec {
    pub fn probability_map(&self, region: &str) -> Result<DoubledFunctional> {
        probability_map(&self.amplitude(region)?)
    }

    pub fn expectation_map(&self, observable: &str) -> Result<DoubledFunctional> {
        let o = self.observable(observable)?;
        expectation_map(&o, &self.amplitude(&o.region)?)
    }
}

/// Random positive operator supported on the blocks of equal key; indices
/// without a key are left out.
fn random_block_psd(rng: &mut impl Rng, keys: &[Option<u8>], rank: usize) -> CMatrix {
    let n = keys.len();
    let mut m = linalg::random_psd_rank(rng, n, rank.min(n).max(1));
    for i in 0..n {
        for j in 0..n {
            if keys[i].is_none() || keys[i] != keys[j] {
                m[(i, j)] = ZERO;
            }
        }
    }
    m
}

/// Blocks of positive elements of `D_{Σ,0,+}`: a diagonal entry on an odd
/// vector has signature `+` only in the other half, so the odd block is empty
/// and the even block splits by signature.
fn even_positive_keys(base: &Layout) -> Vec<Option<u8>> {
    (0..base.dim()).map(|i| (base.fdeg(i) == 0).then(|| base.sig(i))).collect()
}

fn fdeg_keys(base: &Layout) -> Vec<Option<u8>> {
    (0..base.dim()).map(|i| Some(base.fdeg(i))).collect()
}

/// Cone and pairing properties on the doubled space of a hypersurface:
/// the graded pairing is nonnegative on `D⁺_{Σ,0,+}`, the cone is proper,
/// and self-adjoint even elements split into positive parts.
pub fn check_p1(theory: &TheorySpec, hypersurface: &str, tol: f64, samples: usize, seed: u64) -> Result<CheckReport> {
    let space = DoubledSpace::new(theory.layout(hypersurface)?)?;
    let base = space.base().clone();
    let mut rng = rng_from_seed(seed);
    let keys = even_positive_keys(&base);
    let mut dev: f64 = 0.0;
    let mut min_pairing = f64::INFINITY;
    for _ in 0..samples {
        let a = space.tensor_from_op(&random_block_psd(&mut rng, &keys, 3))?;
        let b = space.tensor_from_op(&random_block_psd(&mut rng, &keys, 3))?;
        let p = space.hs_inner(&a, &b)?;
        min_pairing = min_pairing.min(p.re);
        dev = dev.max((-p.re).max(0.0)).max(p.im.abs() / (1.0 + p.norm()));
        if !space.is_positive(&a, tol)? || space.is_positive(&a.scale(-linalg::ONE), tol)? {
            dev = dev.max(1.0);
        }
        let mut h = linalg::random_hermitian(&mut rng, base.dim());
        let fk = fdeg_keys(&base);
        for i in 0..base.dim() {
            for j in 0..base.dim() {
                if fk[i] != fk[j] {
                    h[(i, j)] = ZERO;
                }
            }
        }
        let sigma = space.tensor_from_op(&h)?;
        dev = dev.max(space.dagger(&sigma)?.max_abs_diff(&sigma)?);
        let (plus, minus) = block_spectral_split(&h, &fk);
        let (tp, tm) = (space.tensor_from_op(&plus)?, space.tensor_from_op(&minus)?);
        dev = dev.max(tp.add(&tm.scale(-linalg::ONE))?.max_abs_diff(&sigma)?);
        if !space.is_positive(&tp, tol)? || !space.is_positive(&tm, tol)? {
            dev = dev.max(1.0);
        }
    }
    let zero = space.zeros();
    if !space.is_positive(&zero, tol)? {
        dev = dev.max(1.0);
    }
    Ok(CheckReport::new("P1", hypersurface, dev, tol).with_details(json!({
        "min_pairing": if samples > 0 { min_pairing } else { 0.0 },
        "archimedean": "automatic in finite dimension",
    })))
}

/// Spectral split of a matrix that is block diagonal with respect to `keys`.
fn block_spectral_split(h: &CMatrix, keys: &[Option<u8>]) -> (CMatrix, CMatrix) {
    let n = h.nrows();
    let (mut plus, mut minus) = (CMatrix::zeros(n, n), CMatrix::zeros(n, n));
    let mut distinct: Vec<Option<u8>> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    for key in distinct {
        let idx: Vec<usize> = (0..n).filter(|&i| keys[i] == key).collect();
        let block = CMatrix::from_fn(idx.len(), idx.len(), |a, b| h[(idx[a], idx[b])]);
        let (p, m) = linalg::spectral_split(&block);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                plus[(i, j)] = p[(a, b)];
                minus[(i, j)] = m[(a, b)];
            }
        }
    }
    (plus, minus)
}

fn random_fdeg_homogeneous(rng: &mut impl Rng, space: &DoubledSpace, degree: u8) -> Tensor {
    let mut t = space.random_element(rng);
    for (k, c) in t.coeffs_mut().iter_mut().enumerate() {
        if space.fdeg(k) != degree {
            *c = ZERO;
        }
    }
    t
}

/// `τ*` on a two-part decomposition: graded transposition law, positivity
/// transport and `(σ₁⊗σ₂)† = (−1)^{|σ₁||σ₂|} σ₁†⊗σ₂†`.
pub fn check_p2(theory: &TheorySpec, index: usize, tol: f64, conv: SignConvention, seed: u64) -> Result<CheckReport> {
    let d = &theory.system.decompositions[index];
    let target = format!("decomposition#{index}({})", d.whole);
    if d.parts.len() != 2 {
        return Ok(CheckReport::new("P2", &target, 0.0, tol));
    }
    let whole = DoubledSpace::new(theory.layout(&d.whole)?)?;
    let a = DoubledSpace::new(theory.layout(&d.parts[0])?)?;
    let b = DoubledSpace::new(theory.layout(&d.parts[1])?)?;
    let mut rng = rng_from_seed(seed);
    let mut dev: f64 = 0.0;
    for da in 0..2u8 {
        for db in 0..2u8 {
            let x = random_fdeg_homogeneous(&mut rng, &a, da);
            let y = random_fdeg_homogeneous(&mut rng, &b, db);
            let sign = Complex64::new(parity_sign(da & db), 0.0);
            let fwd = tau_star_with(&[&x, &y], &whole, conv.koszul)?;
            let rev = tau_star_with(&[&y, &x], &whole, conv.koszul)?;
            let scale = 1.0 + fwd.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            dev = dev.max(rev.max_abs_diff(&fwd.scale(sign))? / scale);
            let lhs = whole.dagger(&fwd)?;
            let rhs = tau_star_with(&[&a.dagger(&x)?, &b.dagger(&y)?], &whole, conv.koszul)?.scale(sign);
            dev = dev.max(lhs.max_abs_diff(&rhs)? / scale);
        }
    }
    let (ka, kb) = (fdeg_keys(a.base()), fdeg_keys(b.base()));
    for _ in 0..2 {
        let x = a.tensor_from_op(&random_block_psd(&mut rng, &ka, 2))?;
        let y = b.tensor_from_op(&random_block_psd(&mut rng, &kb, 2))?;
        let z = tau_star_with(&[&x, &y], &whole, conv.koszul)?;
        let m = whole.op_from_tensor(&z)?;
        let scale = 1.0 + linalg::max_abs(&m);
        dev = dev.max(linalg::hermiticity_deviation(&m) / scale);
        let min = linalg::hermitian_eigenvalues(&m).first().copied().unwrap_or(0.0);
        dev = dev.max((-min / scale).max(0.0));
    }
    Ok(CheckReport::new("P2", &target, dev, tol))
}

/// `A_Σ̂(τ*(ι*(σ′)⊗σ)) = ⟨⟨σ′, σ⟩⟩_Σ` on the basis grid of `D_Σ`.
pub fn check_p3x(theory: &TheorySpec, sigma: &str, tol: f64) -> Result<CheckReport> {
    let slice = theory
        .system
        .slice_of(sigma)
        .ok_or_else(|| GbfError::InvalidArgument(format!("no slice region for `{sigma}`")))?;
    let a = theory.probability_map(&slice.id)?;
    let ds = DoubledSpace::new(theory.layout(sigma)?)?;
    let dc = DoubledSpace::new(theory.layout(&slice.copy)?)?;
    let labels: HashMap<String, String> = theory.system.copy_map(sigma, &slice.copy)?.into_iter().collect();
    let r = Reordering::new(&ds.layout().concat(dc.layout())?, a.space.layout().slots())?;
    let n = ds.dim();
    // image of each basis element of D_Σ in D_Σ′
    let mut copies = Vec::with_capacity(n);
    for k in 0..n {
        let t = transfer(&ds.basis(k), &labels, dc.layout())?;
        copies.push(t.nonzeros().next().expect("basis"));
    }
    let mut dev: f64 = 0.0;
    for p in 0..n {
        let iota_sign = reversal_sign(ds.layout().odd_count(p));
        let hs_diag = ds.hs_inner(&ds.basis(p), &ds.basis(p))?;
        for (q, &(qc, qs)) in copies.iter().enumerate() {
            let (k, sign) = r.map(p * dc.dim() + qc);
            let lhs = a.coeffs[k] * sign * iota_sign * qs;
            let expected = if p == q { hs_diag } else { ZERO };
            dev = dev.max((lhs - expected).norm());
        }
    }
    Ok(CheckReport::new("P3x", sigma, dev, tol))
}

/// Realness, positivity and degree of a probability map, and agreement of
/// the tensor form with the operator sum.
pub fn check_p4(theory: &TheorySpec, region: &str, tol: f64, samples: usize, seed: u64) -> Result<CheckReport> {
    let rho = theory.amplitude(region)?;
    let a = probability_map(&rho)?;
    let space = &a.space;
    let base = space.base().clone();
    let mut rng = rng_from_seed(seed);
    let keys = fdeg_keys(&base);
    let norm: f64 = rho.coeffs.iter().map(|c| c.norm_sqr()).sum();
    let scale = 1.0 + norm;
    let mut dev: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    for _ in 0..samples {
        let m = random_block_psd(&mut rng, &keys, 3);
        let v = a.evaluate_op(&m)?;
        let direct = operator_sum(&rho, &rho, &m);
        let mscale = scale * (1.0 + linalg::max_abs(&m));
        min_value = min_value.min(v.re / mscale);
        dev = dev.max((-v.re / mscale).max(0.0));
        dev = dev.max(v.im.abs() / mscale);
        dev = dev.max((v - direct).norm() / mscale);
        let mut h = linalg::random_hermitian(&mut rng, base.dim());
        for i in 0..base.dim() {
            for j in 0..base.dim() {
                if keys[i] != keys[j] {
                    h[(i, j)] = ZERO;
                }
            }
        }
        let hv = a.evaluate_op(&h)?;
        dev = dev.max(hv.im.abs() / (scale * (1.0 + linalg::max_abs(&h))));
        // σ† has the Hilbert adjoint as its operator
        let mut g = linalg::random_matrix(&mut rng, base.dim());
        for i in 0..base.dim() {
            for j in 0..base.dim() {
                if keys[i] != keys[j] {
                    g[(i, j)] = ZERO;
                }
            }
        }
        let lhs = a.evaluate_op(&g.adjoint())?;
        let rhs = a.evaluate_op(&g)?.conj();
        dev = dev.max((lhs - rhs).norm() / (scale * (1.0 + linalg::max_abs(&g))));
    }
    let odd = a
        .coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| space.fdeg(*k) == 1)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    let strict = a
        .coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let ((fm, fn_), (sm, sn)) = space.bigrade(*k);
            fm != 0 || fn_ != 0 || sm != sn
        })
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    dev = dev.max(odd);
    Ok(CheckReport::new("P4", region, dev, tol).with_details(json!({
        "samples": samples,
        "min_scaled_value": if samples > 0 { min_value } else { 0.0 },
        "max_outside_strict_grading": strict,
        "extension_to_unbounded": "trivial in finite dimension",
    })))
}

/// `A_M(τ*(σ₁⊗σ₂)) = A_{M₁}(σ₁) A_{M₂}(σ₂)` on the full basis.
pub fn check_p5a(theory: &TheorySpec, gluing: &str, tol: f64, conv: SignConvention) -> Result<CheckReport> {
    let (m1, m2, m) = disjoint_parts(theory, gluing)?;
    let (a1, a2, a) = (theory.probability_map(&m1)?, theory.probability_map(&m2)?, theory.probability_map(&m)?);
    let expected = product_functional(
        &a1.coeffs,
        a1.space.layout(),
        &a2.coeffs,
        a2.space.layout(),
        a.space.layout(),
        conv.koszul,
    )?;
    let dev = a.max_abs_diff(&expected) / (1.0 + a.scale());
    Ok(CheckReport::new("P5a", gluing, dev, tol))
}

/// Basis of `D_Σ` weighted by `(−1)^{[ξ_i]}`, optionally rotated by a random
/// unitary inside each signature block.
fn doubled_gluing_basis(space: &DoubledSpace, conv: SignConvention, rotate: Option<u64>) -> Result<Vec<(Tensor, f64)>> {
    let n = space.dim();
    let weight = |k: usize| {
        if conv.signature_factor {
            parity_sign(space.signature(k))
        } else {
            1.0
        }
    };
    let Some(seed) = rotate else {
        return Ok((0..n).map(|k| (space.basis(k), weight(k))).collect());
    };
    rotated_basis(space.layout(), |k| space.signature(k), seed, weight)
}

/// Orthonormal basis rotated by Haar unitaries within blocks of equal grade.
pub(crate) fn rotated_basis(
    layout: &Layout,
    grade: impl Fn(usize) -> u8,
    seed: u64,
    weight: impl Fn(usize) -> f64,
) -> Result<Vec<(Tensor, f64)>> {
    let mut rng = rng_from_seed(seed);
    let n = layout.dim();
    let mut out = Vec::with_capacity(n);
    for g in 0..2u8 {
        let idx: Vec<usize> = (0..n).filter(|&k| grade(k) == g).collect();
        if idx.is_empty() {
            continue;
        }
        let u = linalg::haar_unitary(&mut rng, idx.len());
        for col in 0..idx.len() {
            let mut coeffs = vec![ZERO; n];
            for (row, &k) in idx.iter().enumerate() {
                coeffs[k] = u[(row, col)];
            }
            out.push((Tensor::from_coeffs(layout.clone(), coeffs)?, weight(idx[0])));
        }
    }
    Ok(out)
}

/// Contraction `Σ_i (−1)^{[ξ_i]} F(τ*(σ⊗ξ_i⊗ι*(ξ_i)))` over the basis of `D_∂M₁`.
fn glue_doubled(
    g: &SelfGluing,
    f: &DoubledFunctional,
    conv: SignConvention,
    rotate: Option<u64>,
) -> Result<(Vec<Complex64>, DoubledSpace)> {
    let outer = DoubledSpace::new(g.outer.clone())?;
    let inner = DoubledSpace::new(g.sigma_layout.clone())?;
    let copy = DoubledSpace::new(g.copy_layout.clone())?;
    let basis = doubled_gluing_basis(&inner, conv, rotate)?;
    let v = SelfGluing::contract(
        outer.layout(),
        inner.layout(),
        copy.layout(),
        f.space.layout(),
        &g.labels,
        &basis,
        Tensor::iota,
        conv.koszul,
        |k| f.coeffs[k],
    )?;
    Ok((v, outer))
}

/// `A_{M₁}(σ) |c|² = Σ_i (−1)^{[ξ_i]} A_M(τ*(σ⊗ξ_i⊗ι*(ξ_i)))`, in the
/// canonical basis and in a rotated one.
pub fn check_p5b(theory: &TheorySpec, gluing: &str, tol: f64, conv: SignConvention) -> Result<CheckReport> {
    let g = SelfGluing::new(theory, gluing)?;
    let a = theory.probability_map(&g.region)?;
    let c = anomaly(theory, gluing)?;
    let a1 = match theory.amplitudes.get(&g.result) {
        Some(_) => theory.probability_map(&g.result)?,
        None => {
            let conv_t = SignConvention::default();
            let rhs = g.glue(&theory.amplitude(&g.region)?, &g.canonical_basis(conv_t), conv_t)?;
            probability_map(&Functional::new(&g.result, g.outer.clone(), rhs)?)?
        }
    };
    let (v, _) = glue_doubled(&g, &a, conv, None)?;
    let (w, _) = glue_doubled(&g, &a, conv, Some(0x5eed))?;
    let c2 = c.norm_sqr();
    let scale = 1.0 + a.scale();
    let expected: Vec<Complex64> = a1.coeffs.iter().map(|x| x * c2).collect();
    let diff = |u: &[Complex64]| u.iter().zip(&expected).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let dev_canonical = diff(&v) / scale;
    let dev_rotated = diff(&w) / scale;
    Ok(CheckReport::new("P5b", gluing, dev_canonical.max(dev_rotated), tol).with_details(json!({
        "c_abs_sq": c2,
        "canonical": dev_canonical,
        "rotated_basis": dev_rotated,
    })))
}

/// Observables on a region: its amplitude, declared observables, and
/// products of those on the parts when the region is a disjoint union.
pub fn observables_on(theory: &TheorySpec, region: &str) -> Result<Vec<Functional>> {
    let mut out = vec![theory.amplitude(region)?];
    for o in theory.observables.iter().filter(|o| o.region == region) {
        out.push(theory.observable(&o.id)?);
    }
    for g in theory.system.gluings.iter().filter(|g| g.result == region) {
        if let Ok((m1, m2, _)) = disjoint_parts(theory, &g.id) {
            let (left, right) = (declared_on(theory, &m1)?, declared_on(theory, &m2)?);
            for a in &left {
                for b in &right {
                    if a.fdeg.is_some() && b.fdeg.is_some() {
                        out.push(compose_observables_disjoint(theory, &g.id, a, b)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn declared_on(theory: &TheorySpec, region: &str) -> Result<Vec<Functional>> {
    let mut out = vec![theory.amplitude(region)?];
    for o in theory.observables.iter().filter(|o| o.region == region) {
        out.push(theory.observable(&o.id)?);
    }
    Ok(out)
}

/// Expectation maps of observables agree with the operator sum, and the
/// amplitude's expectation map is the probability map.
pub fn check_e1(theory: &TheorySpec, region: &str, tol: f64, seed: u64) -> Result<CheckReport> {
    let rho = theory.amplitude(region)?;
    let a = probability_map(&rho)?;
    let mut dev = a.max_abs_diff(&expectation_map(&rho, &rho)?.coeffs);
    let mut rng = rng_from_seed(seed);
    let n = rho.layout.dim();
    for obs in declared_on(theory, region)? {
        let e = expectation_map(&obs, &rho)?;
        let m = linalg::random_matrix(&mut rng, n);
        let scale = (1.0 + e.scale()) * (1.0 + linalg::max_abs(&m));
        dev = dev.max((e.evaluate_op(&m)? - operator_sum(&obs, &rho, &m)).norm() / scale);
    }
    Ok(CheckReport::new("E1", region, dev, tol))
}

/// `A^{O₁} ⋄ A^{O₂}(τ*(σ₁⊗σ₂)) = A^{O₁}(σ₁) A^{O₂}(σ₂)` and the order sign.
pub fn check_e2a(theory: &TheorySpec, gluing: &str, tol: f64) -> Result<CheckReport> {
    let (m1, m2, m) = disjoint_parts(theory, gluing)?;
    let rho = theory.amplitude(&m)?;
    let (r1, r2) = (theory.amplitude(&m1)?, theory.amplitude(&m2)?);
    let mut dev: f64 = 0.0;
    let mut count = 0;
    for o1 in declared_on(theory, &m1)? {
        for o2 in declared_on(theory, &m2)? {
            let (Some(d1), Some(d2)) = (o1.fdeg, o2.fdeg) else { continue };
            let composed = compose_observables_disjoint(theory, gluing, &o1, &o2)?;
            let e = expectation_map(&composed, &rho)?;
            let (e1, e2) = (expectation_map(&o1, &r1)?, expectation_map(&o2, &r2)?);
            let fwd = product_functional(&e1.coeffs, e1.space.layout(), &e2.coeffs, e2.space.layout(), e.space.layout(), true)?;
            let rev = product_functional(&e2.coeffs, e2.space.layout(), &e1.coeffs, e1.space.layout(), e.space.layout(), true)?;
            let scale = 1.0 + e.scale();
            dev = dev.max(e.max_abs_diff(&fwd) / scale);
            let sign = parity_sign(d1 & d2);
            let order = fwd.iter().zip(&rev).map(|(x, y)| (x - y * sign).norm()).fold(0.0, f64::max);
            dev = dev.max(order / scale);
            count += 1;
        }
    }
    Ok(CheckReport::new("E2a", gluing, dev, tol).with_details(json!({ "pairs": count })))
}

/// `A^{⋄_Σ O}_{M₁}(σ) |c|² = Σ_i (−1)^{[ξ_i]} A^O_M(τ*(σ⊗ξ_i⊗ι*(ξ_i)))`.
pub fn check_e2b(theory: &TheorySpec, gluing: &str, tol: f64, conv: SignConvention) -> Result<CheckReport> {
    let g = SelfGluing::new(theory, gluing)?;
    let c = anomaly(theory, gluing)?;
    let rho = theory.amplitude(&g.region)?;
    let rho1 = match theory.amplitudes.get(&g.result) {
        Some(_) => theory.amplitude(&g.result)?,
        None => glue_observable(theory, gluing, &rho, c)?,
    };
    let mut dev: f64 = 0.0;
    let mut count = 0;
    for obs in observables_on(theory, &g.region)? {
        let e = expectation_map(&obs, &rho)?;
        let glued = glue_observable(theory, gluing, &obs, c)?;
        let e1 = expectation_map(&glued, &rho1)?;
        let (v, _) = glue_doubled(&g, &e, conv, None)?;
        let c2 = c.norm_sqr();
        let d = v
            .iter()
            .zip(&e1.coeffs)
            .map(|(x, y)| (x - y * c2).norm())
            .fold(0.0, f64::max);
        dev = dev.max(d / (1.0 + e.scale()));
        count += 1;
    }
    Ok(CheckReport::new("E2b", gluing, dev, tol).with_details(json!({ "observables": count })))
}

/// `A^O_M̄(σ) = conj(A^O_M(ι*(σ)))` for every observable on the region.
pub fn check_expmor(theory: &TheorySpec, region: &str, tol: f64) -> Result<CheckReport> {
    let rho = theory.amplitude(region)?;
    let rho_bar = rho.orientation_conjugate();
    let mut dev: f64 = 0.0;
    for obs in declared_on(theory, region)? {
        let e = expectation_map(&obs, &rho)?;
        let e_bar = expectation_map(&obs.orientation_conjugate(), &rho_bar)?;
        let space = &e.space;
        let scale = 1.0 + e.scale();
        for k in 0..space.dim() {
            let iota_k = reversal_sign(space.layout().odd_count(k));
            let rhs = (e.coeffs[k] * iota_k).conj();
            dev = dev.max((e_bar.coeffs[k] - rhs).norm() / scale);
        }
    }
    Ok(CheckReport::new("Eor", region, dev, tol))
}
