//! Probabilities, ensembles and expectation values on boundary spaces, and
//! the mixed-state layer of the standard formulation.

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::Functional;
use crate::error::{GbfError, Result};
use crate::graded::{parity_sign, Layout, Slot, Tensor};
use crate::linalg::{self, CMatrix, ZERO};
use crate::positive::{expectation_map, probability_map};
use crate::theory::TheorySpec;

#[derive(Clone, Copy, Debug)]
pub struct MeasurementOptions {
    pub tol: f64,
    /// Require subspaces to be f-even and signature-decomposed.
    pub strict_superselection: bool,
}

impl Default for MeasurementOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            strict_superselection: true,
        }
    }
}

/// A measured quantity, or `None` when the preparation has zero probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome<T> {
    pub value: Option<T>,
    pub defined: bool,
    /// Distance to the same quantity computed from an adapted basis.
    pub cross_check_deviation: f64,
}

impl<T> Outcome<T> {
    fn defined(value: T, deviation: f64) -> Self {
        Self {
            value: Some(value),
            defined: true,
            cross_check_deviation: deviation,
        }
    }

    fn undefined() -> Self {
        Self {
            value: None,
            defined: false,
            cross_check_deviation: 0.0,
        }
    }
}

/// Closed subspace of a boundary space, held as an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    layout: Layout,
    basis: Vec<Vec<Complex64>>,
}

impl Subspace {
    /// Span of arbitrary vectors; dependent vectors are dropped.
    pub fn span(layout: Layout, vectors: &[Vec<Complex64>], tol: f64) -> Result<Self> {
        let n = layout.dim();
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(GbfError::SpaceMismatch(format!(
                "vector of length {} in a space of dimension {n}",
                v.len()
            )));
        }
        let basis = linalg::orthonormalize(vectors, tol.max(1e-14));
        Ok(Self { layout, basis })
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(layout: Layout, indices: &[usize]) -> Result<Self> {
        let n = layout.dim();
        let vectors: Vec<Vec<Complex64>> = indices
            .iter()
            .map(|&i| {
                if i >= n {
                    return Err(GbfError::InvalidArgument(format!("basis index {i} out of range")));
                }
                let mut v = vec![ZERO; n];
                v[i] = Complex64::new(1.0, 0.0);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Self::span(layout, &vectors, 1e-14)
    }

    pub fn full(layout: Layout) -> Self {
        let indices: Vec<usize> = (0..layout.dim()).collect();
        Self::coordinate(layout, &indices).expect("indices in range")
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn projector(&self) -> CMatrix {
        linalg::projector(&self.basis, self.layout.dim())
    }

    /// `‖P_S P_A − P_A‖`, zero iff `self ⊆ other`.
    pub fn containment_deviation(&self, other: &Subspace) -> Result<f64> {
        self.same_space(other)?;
        let pa = self.projector();
        Ok(linalg::max_abs(&(other.projector() * &pa - &pa)))
    }

    /// Largest violation of the superselection rules: weight on f-odd
    /// vectors, and failure to commute with the signature operator.
    pub fn superselection_deviation(&self) -> f64 {
        let p = self.projector();
        let n = self.layout.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.layout.fdeg(j) == 1 {
                    dev = dev.max(p[(i, j)].norm());
                }
                if self.layout.sig(i) != self.layout.sig(j) {
                    dev = dev.max(p[(i, j)].norm());
                }
            }
        }
        dev
    }

    fn same_space(&self, other: &Subspace) -> Result<()> {
        if self.layout.same_shape(&other.layout) {
            Ok(())
        } else {
            Err(GbfError::SpaceMismatch("subspaces live in different spaces".into()))
        }
    }
}

/// Real-weighted family of subspaces, `Q = Σ a_i P_{A_i}`.
#[derive(Clone, Debug)]
pub struct WeightedQuestion {
    pub components: Vec<(Subspace, f64)>,
    /// Weights must form a probability distribution.
    pub ensemble: bool,
}

impl WeightedQuestion {
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.ensemble {
            return Ok(());
        }
        if let Some((_, a)) = self.components.iter().find(|(_, a)| !(*a > 0.0 && *a <= 1.0 + tol)) {
            return Err(GbfError::Weights(format!("ensemble weight {a} outside (0, 1]")));
        }
        let total: f64 = self.components.iter().map(|(_, a)| a).sum();
        if (total - 1.0).abs() > tol {
            return Err(GbfError::Weights(format!("ensemble weights sum to {total}")));
        }
        Ok(())
    }

    pub fn operator(&self, n: usize) -> CMatrix {
        self.components
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (s, a)| acc + s.projector().scale(*a))
    }
}

fn check_region_space(rho: &Functional, s: &Subspace) -> Result<()> {
    if rho.layout.same_shape(s.layout()) {
        Ok(())
    } else {
        Err(GbfError::SpaceMismatch(format!(
            "subspace is not in the boundary space of `{}`",
            rho.region
        )))
    }
}

fn check_preparation(rho: &Functional, s: &Subspace, o: &MeasurementOptions) -> Result<()> {
    check_region_space(rho, s)?;
    if o.strict_superselection {
        let dev = s.superselection_deviation();
        if dev > o.tol {
            return Err(GbfError::Superselection(format!(
                "subspace leaves the even, signature-split sector by {dev:.3e}"
            )));
        }
    }
    Ok(())
}

fn check_question(rho: &Functional, a: &Subspace, s: &Subspace, o: &MeasurementOptions) -> Result<()> {
    check_preparation(rho, a, o)?;
    let dev = a.containment_deviation(s)?;
    if dev > o.tol {
        return Err(GbfError::Containment(dev));
    }
    Ok(())
}

fn amplitude_on(rho: &Functional, v: &[Complex64]) -> Complex64 {
    rho.coeffs.iter().zip(v).map(|(r, x)| r * x).sum()
}

/// `Σ |ρ_M(ξ)|²` over an orthonormal family.
fn weight(rho: &Functional, vectors: &[Vec<Complex64>]) -> f64 {
    vectors.iter().map(|v| amplitude_on(rho, v).norm_sqr()).sum()
}

/// `P(A|S) = A_M(P_A) / A_M(P_S)`.
pub fn probability(theory: &TheorySpec, region: &str, a: &Subspace, s: &Subspace, o: &MeasurementOptions) -> Result<Outcome<f64>> {
    let rho = theory.amplitude(region)?;
    check_preparation(&rho, s, o)?;
    check_question(&rho, a, s, o)?;
    let map = probability_map(&rho)?;
    let den = map.evaluate_op(&s.projector())?.re;
    if den <= o.tol {
        return Ok(Outcome::undefined());
    }
    let value = map.evaluate_op(&a.projector())?.re / den;

    // adapted basis: A first, then its completion in S
    let rest = linalg::extend_orthonormal(a.basis(), s.basis(), 1e-10);
    let wa = weight(&rho, a.basis());
    let direct = wa / (wa + weight(&rho, &rest));
    Ok(Outcome::defined(value, (value - direct).abs()))
}

/// `Σ a_i P(A_i|S) = A_M(Q) / A_M(P_S)`.
pub fn ensemble_expectation(
    theory: &TheorySpec,
    region: &str,
    q: &WeightedQuestion,
    s: &Subspace,
    o: &MeasurementOptions,
) -> Result<Outcome<f64>> {
    q.validate(o.tol)?;
    let rho = theory.amplitude(region)?;
    check_preparation(&rho, s, o)?;
    for (a, _) in &q.components {
        check_question(&rho, a, s, o)?;
    }
    let map = probability_map(&rho)?;
    let den = map.evaluate_op(&s.projector())?.re;
    if den <= o.tol {
        return Ok(Outcome::undefined());
    }
    let value = map.evaluate_op(&q.operator(rho.layout.dim()))?.re / den;
    let mut sum = 0.0;
    for (a, w) in &q.components {
        let p = probability(theory, region, a, s, o)?;
        sum += w * p.value.unwrap_or(0.0);
    }
    Ok(Outcome::defined(value, (value - sum).abs()))
}

/// `⟨O⟩_S = A^O_M(P_S) / A_M(P_S)`.
pub fn observable_expectation(
    theory: &TheorySpec,
    observable: &str,
    s: &Subspace,
    o: &MeasurementOptions,
) -> Result<Outcome<Complex64>> {
    let obs = theory.observable(observable)?;
    let rho = theory.amplitude(&obs.region)?;
    check_preparation(&rho, s, o)?;
    let ps = s.projector();
    let den = probability_map(&rho)?.evaluate_op(&ps)?.re;
    if den <= o.tol {
        return Ok(Outcome::undefined());
    }
    let value = expectation_map(&obs, &rho)?.evaluate_op(&ps)? / den;
    let direct: Complex64 = s
        .basis()
        .iter()
        .map(|v| amplitude_on(&rho, v).conj() * amplitude_on(&obs, v))
        .sum::<Complex64>()
        / weight(&rho, s.basis());
    Ok(Outcome::defined(value, (value - direct).norm()))
}

/// Density operator `σ = Σ p_i P_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedState {
    op: CMatrix,
}

impl MixedState {
    pub fn new(op: CMatrix, tol: f64) -> Result<Self> {
        if !op.is_square() {
            return Err(GbfError::InvalidArgument("density operator must be square".into()));
        }
        let trace = op.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(GbfError::Weights(format!("trace {trace} is not 1")));
        }
        if linalg::hermiticity_deviation(&op) > tol || !linalg::is_positive_semidefinite(&op, tol) {
            return Err(GbfError::InvalidArgument("density operator is not positive".into()));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &CMatrix {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }
}

pub fn mixed_state(states: &[(Vec<Complex64>, f64)], tol: f64) -> Result<MixedState> {
    let Some(n) = states.first().map(|(v, _)| v.len()) else {
        return Err(GbfError::Weights("empty ensemble".into()));
    };
    let mut op = CMatrix::zeros(n, n);
    let mut total = 0.0;
    for (v, p) in states {
        if !(-tol..=1.0 + tol).contains(p) {
            return Err(GbfError::Weights(format!("weight {p} outside [0, 1]")));
        }
        if v.len() != n {
            return Err(GbfError::SpaceMismatch("state vectors of different lengths".into()));
        }
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol {
            return Err(GbfError::InvalidArgument(format!("state has norm {norm}")));
        }
        op += linalg::projector(std::slice::from_ref(v), n).scale(*p);
        total += p;
    }
    if (total - 1.0).abs() > tol {
        return Err(GbfError::Weights(format!("weights sum to {total}")));
    }
    MixedState::new(op, tol)
}

/// Hilbert–Schmidt pairing `tr(σ₂† σ₁)`.
pub fn hs_transition(s2: &MixedState, s1: &MixedState) -> Result<f64> {
    if s2.dim() != s1.dim() {
        return Err(GbfError::SpaceMismatch("states on different spaces".into()));
    }
    Ok((s2.op.adjoint() * &s1.op).trace().re)
}

/// `Ũ(σ) = U σ U⁻¹`.
pub fn evolve_mixed(u: &CMatrix, sigma: &MixedState, tol: f64) -> Result<MixedState> {
    let dev = linalg::unitarity_deviation(u);
    if dev > tol {
        return Err(GbfError::NotUnitary(dev));
    }
    if u.nrows() != sigma.dim() {
        return Err(GbfError::SpaceMismatch("operator and state dimensions differ".into()));
    }
    Ok(MixedState {
        op: u * &sigma.op * u.adjoint(),
    })
}

/// Transition probability of the standard formulation, recovered on an
/// interval region with boundary `[in, out]`: prepare `ψ_in` on the initial
/// slice and ask for `φ_out` on the final one.
pub fn born_recovery(
    theory: &TheorySpec,
    region: &str,
    psi_in: &[Complex64],
    phi_out: &[Complex64],
    o: &MeasurementOptions,
) -> Result<Outcome<f64>> {
    let layout = theory.amplitude(region)?.layout;
    if layout.len() != 2 {
        return Err(GbfError::InvalidArgument(format!(
            "`{region}` is not an interval region with two boundary components"
        )));
    }
    let (s_in, s_out) = (&layout.spaces()[0], &layout.spaces()[1]);
    if psi_in.len() != s_in.dim || phi_out.len() != s_out.dim {
        return Err(GbfError::SpaceMismatch("state vectors do not match the boundary".into()));
    }
    let single = |slot: &Slot, space, v: &[Complex64]| {
        Tensor::from_coeffs(Layout::new(vec![(slot.clone(), space)])?, v.to_vec())
    };
    let slots = layout.slots();
    let psi = single(&slots[0], s_in.clone(), psi_in)?;
    let prepared: Vec<Vec<Complex64>> = (0..s_out.dim)
        .map(|j| {
            let f = Tensor::basis(Layout::new(vec![(slots[1].clone(), s_out.clone())])?, j);
            Ok(psi.kron(&f)?.into_coeffs())
        })
        .collect::<Result<_>>()?;
    let asked = psi.kron(&single(&slots[1], s_out.clone(), phi_out)?.iota())?;
    let s = Subspace::span(layout.clone(), &prepared, o.tol)?;
    let a = Subspace::span(layout, &[asked.into_coeffs()], o.tol)?;
    probability(theory, region, &a, &s, o)
}

/// `|⟨φ, Uψ⟩|²`, with the signature of the final space inserted.
pub fn born_probability(u: &CMatrix, sig: &[u8], psi: &[Complex64], phi: &[Complex64]) -> f64 {
    let image = linalg::mat_vec(u, psi);
    image
        .iter()
        .zip(phi)
        .zip(sig)
        .map(|((x, y), s)| y.conj() * x * parity_sign(*s))
        .sum::<Complex64>()
        .norm_sqr()
}
