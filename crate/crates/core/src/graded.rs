//! Graded Krein spaces and dense graded tensors.
//!
//! Every vector in the engine lives on an ordered list of tensor factors
//! ("slots"). A slot names one connected component of a hypersurface and
//! which half of a doubled space it sits in. Reordering slots applies the
//! Koszul sign: one factor of −1 for every transposition of two factors that
//! are both odd in the basis element being moved.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GbfError, Result};

/// Finite-dimensional f-graded Krein space with a fixed canonical basis.
///
/// Basis vector `n` has f-degree `fdeg[n]` and signature `sig[n]`
/// (0 for the positive part, 1 for the negative part).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedKreinSpace {
    pub dim: usize,
    pub fdeg: Vec<u8>,
    pub sig: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl GradedKreinSpace {
    pub fn new(fdeg: Vec<u8>, sig: Vec<u8>) -> Result<Self> {
        let space = Self {
            dim: fdeg.len(),
            fdeg,
            sig,
            labels: Vec::new(),
        };
        space.validate()?;
        Ok(space)
    }

    /// Purely bosonic Hilbert space of the given dimension.
    pub fn bosonic(dim: usize) -> Self {
        Self {
            dim,
            fdeg: vec![0; dim],
            sig: vec![0; dim],
            labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(GbfError::InvalidSpace("dimension must be positive".into()));
        }
        if self.fdeg.len() != self.dim || self.sig.len() != self.dim {
            return Err(GbfError::InvalidSpace(format!(
                "dim {} but {} f-degrees and {} signatures",
                self.dim,
                self.fdeg.len(),
                self.sig.len()
            )));
        }
        if !self.labels.is_empty() && self.labels.len() != self.dim {
            return Err(GbfError::InvalidSpace(format!(
                "dim {} but {} labels",
                self.dim,
                self.labels.len()
            )));
        }
        if self.fdeg.iter().chain(self.sig.iter()).any(|&g| g > 1) {
            return Err(GbfError::InvalidSpace("gradings must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn has_odd(&self) -> bool {
        self.fdeg.contains(&1)
    }

    pub fn has_negative(&self) -> bool {
        self.sig.contains(&1)
    }

    pub fn is_bosonic(&self) -> bool {
        !self.has_odd() && !self.has_negative()
    }

    /// Inner product sign of basis vector `n`.
    pub fn metric(&self, n: usize) -> f64 {
        parity_sign(self.sig[n])
    }
}

pub(crate) fn parity_sign(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign picked up when `odd` odd factors are brought into reversed order.
pub fn reversal_sign(odd: usize) -> f64 {
    if (odd * odd.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Half {
    /// The factor `H_Σ` of a doubled space, or a plain state space.
    Primary,
    /// The factor `H_Σ̄` of a doubled space `H_Σ ⊗ H_Σ̄`.
    Mirror,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub label: String,
    pub half: Half,
}

impl Slot {
    pub fn primary(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            half: Half::Primary,
        }
    }

    pub fn mirror(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            half: Half::Mirror,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.half {
            Half::Primary => write!(f, "{}", self.label),
            Half::Mirror => write!(f, "{}~", self.label),
        }
    }
}

/// Ordered list of tensor factors with their spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    slots: Vec<Slot>,
    spaces: Vec<GradedKreinSpace>,
    strides: Vec<usize>,
    dim: usize,
}

impl Layout {
    pub fn new(factors: Vec<(Slot, GradedKreinSpace)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (slot, _) in &factors {
            if !seen.insert(slot.clone()) {
                return Err(GbfError::ComponentMismatch(format!("slot {slot} repeated")));
            }
        }
        let (slots, spaces): (Vec<_>, Vec<_>) = factors.into_iter().unzip();
        let mut strides = vec![1usize; slots.len()];
        for k in (0..slots.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * spaces[k + 1].dim;
        }
        let dim = spaces.iter().map(|s| s.dim).product();
        Ok(Self {
            slots,
            spaces,
            strides,
            dim,
        })
    }

    /// The one-dimensional layout with no factors (empty hypersurface).
    pub fn empty() -> Self {
        Self {
            slots: Vec::new(),
            spaces: Vec::new(),
            strides: Vec::new(),
            dim: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn spaces(&self) -> &[GradedKreinSpace] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn position(&self, slot: &Slot) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.spaces)
            .map(|(stride, space)| (idx / stride) % space.dim)
            .collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Number of odd factors in basis element `idx`.
    pub fn odd_count(&self, idx: usize) -> usize {
        self.strides
            .iter()
            .zip(&self.spaces)
            .filter(|(stride, space)| space.fdeg[(idx / *stride) % space.dim] == 1)
            .count()
    }

    /// Total f-degree of basis element `idx`.
    pub fn fdeg(&self, idx: usize) -> u8 {
        (self.odd_count(idx) % 2) as u8
    }

    /// Total signature of basis element `idx`.
    pub fn sig(&self, idx: usize) -> u8 {
        self.strides
            .iter()
            .zip(&self.spaces)
            .map(|(stride, space)| space.sig[(idx / stride) % space.dim])
            .fold(0, |acc, s| acc ^ s)
    }

    /// Collapse the factors into one graded Krein space (the product basis).
    pub fn combined_space(&self) -> GradedKreinSpace {
        let fdeg = (0..self.dim).map(|i| self.fdeg(i)).collect();
        let sig = (0..self.dim).map(|i| self.sig(i)).collect();
        GradedKreinSpace {
            dim: self.dim,
            fdeg,
            sig,
            labels: Vec::new(),
        }
    }

    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        let factors = self
            .slots
            .iter()
            .cloned()
            .zip(self.spaces.iter().cloned())
            .chain(other.slots.iter().cloned().zip(other.spaces.iter().cloned()))
            .collect();
        Layout::new(factors)
    }

    /// Rename slots; spaces are carried along unchanged.
    pub fn relabel(&self, rename: impl Fn(&Slot) -> Slot) -> Result<Layout> {
        Layout::new(
            self.slots
                .iter()
                .map(&rename)
                .zip(self.spaces.iter().cloned())
                .collect(),
        )
    }

    pub fn same_shape(&self, other: &Layout) -> bool {
        self.slots == other.slots && self.spaces == other.spaces
    }
}

/// Precomputed graded reordering between two layouts with the same slot set.
#[derive(Clone, Debug)]
pub struct Reordering {
    source: Layout,
    target: Layout,
    source_of_target: Vec<usize>,
    /// when false the Koszul sign is dropped (negative controls only)
    graded: bool,
}

impl Reordering {
    pub fn new(source: &Layout, target_slots: &[Slot]) -> Result<Self> {
        if target_slots.len() != source.len() {
            return Err(GbfError::ComponentMismatch(format!(
                "cannot reorder {} factors into {}",
                source.len(),
                target_slots.len()
            )));
        }
        let mut source_of_target = Vec::with_capacity(target_slots.len());
        for slot in target_slots {
            let pos = source.position(slot).ok_or_else(|| {
                GbfError::ComponentMismatch(format!("slot {slot} missing from source layout"))
            })?;
            source_of_target.push(pos);
        }
        let target = Layout::new(
            source_of_target
                .iter()
                .map(|&p| (source.slots[p].clone(), source.spaces[p].clone()))
                .collect(),
        )?;
        Ok(Self {
            source: source.clone(),
            target,
            source_of_target,
            graded: true,
        })
    }

    pub fn ungraded(mut self) -> Self {
        self.graded = false;
        self
    }

    pub fn target(&self) -> &Layout {
        &self.target
    }

    /// Image of source basis element `idx`: target index and Koszul sign.
    pub fn map(&self, idx: usize) -> (usize, f64) {
        let digits = self.source.digits(idx);
        let new_digits: Vec<usize> = self.source_of_target.iter().map(|&p| digits[p]).collect();
        let target_idx = self.target.index_of(&new_digits);
        if !self.graded {
            return (target_idx, 1.0);
        }
        let odd: Vec<usize> = self
            .source_of_target
            .iter()
            .filter(|&&p| self.source.spaces[p].fdeg[digits[p]] == 1)
            .copied()
            .collect();
        let mut inversions = 0usize;
        for a in 0..odd.len() {
            for b in (a + 1)..odd.len() {
                if odd[a] > odd[b] {
                    inversions += 1;
                }
            }
        }
        (target_idx, if inversions.is_multiple_of(2) { 1.0 } else { -1.0 })
    }

    pub fn apply(&self, t: &Tensor) -> Result<Tensor> {
        if !t.layout.same_shape(&self.source) {
            return Err(GbfError::SpaceMismatch("reordering applied to wrong layout".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.target.dim()];
        for (idx, c) in t.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let (j, sign) = self.map(idx);
            out[j] += c * sign;
        }
        Ok(Tensor {
            layout: self.target.clone(),
            coeffs: out,
        })
    }
}

/// Dense element of a graded tensor product, in row-major product-basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    layout: Layout,
    coeffs: Vec<Complex64>,
}

impl Tensor {
    pub fn zeros(layout: Layout) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); layout.dim()];
        Self { layout, coeffs }
    }

    pub fn basis(layout: Layout, idx: usize) -> Self {
        let mut t = Self::zeros(layout);
        t.coeffs[idx] = Complex64::new(1.0, 0.0);
        t
    }

    pub fn from_coeffs(layout: Layout, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != layout.dim() {
            return Err(GbfError::SpaceMismatch(format!(
                "expected {} coefficients, got {}",
                layout.dim(),
                coeffs.len()
            )));
        }
        Ok(Self { layout, coeffs })
    }

    /// Scalar on the empty layout.
    pub fn scalar(value: Complex64) -> Self {
        Self {
            layout: Layout::empty(),
            coeffs: vec![value],
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(i, c)| (i, *c))
    }

    /// Plain (ungraded) Kronecker product, factors of `self` first.
    pub fn kron(&self, other: &Tensor) -> Result<Tensor> {
        let layout = self.layout.concat(&other.layout)?;
        let mut coeffs = Vec::with_capacity(layout.dim());
        for a in &self.coeffs {
            for b in &other.coeffs {
                coeffs.push(a * b);
            }
        }
        Ok(Tensor { layout, coeffs })
    }

    /// Graded reorder into the given slot order.
    pub fn reorder(&self, target_slots: &[Slot]) -> Result<Tensor> {
        Reordering::new(&self.layout, target_slots)?.apply(self)
    }

    /// Orientation reversal ι: componentwise conjugation on the mirrored basis
    /// together with the sign of reversing the order of the odd factors.
    /// Slot names are unchanged; the result is read relative to the reversed
    /// hypersurface.
    pub fn iota(&self) -> Tensor {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.conj() * reversal_sign(self.layout.odd_count(i)))
            .collect();
        Tensor {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    /// Signature map `I`: multiply by (−1)^{[ψ]} per basis element.
    pub fn signature_map(&self) -> Tensor {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * parity_sign(self.layout.sig(i)))
            .collect();
        Tensor {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    /// Indefinite inner product, conjugate-linear in the first argument.
    pub fn inner(&self, other: &Tensor) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * parity_sign(self.layout.sig(i)))
            .sum())
    }

    /// Positive-definite inner product of the Hilbertization.
    pub fn hilbert_inner(&self, other: &Tensor) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn relabel(&self, rename: impl Fn(&Slot) -> Slot) -> Result<Tensor> {
        Ok(Tensor {
            layout: self.layout.relabel(rename)?,
            coeffs: self.coeffs.clone(),
        })
    }

    pub fn relabel_map(&self, map: &HashMap<Slot, Slot>) -> Result<Tensor> {
        self.relabel(|s| map.get(s).cloned().unwrap_or_else(|| s.clone()))
    }

    /// f-degree if the support lies in a single degree.
    pub fn homogeneous_fdeg(&self, tol: f64) -> Option<u8> {
        self.homogeneous_by(tol, |l, i| l.fdeg(i))
    }

    /// Signature if the support lies in a single signature.
    pub fn homogeneous_sig(&self, tol: f64) -> Option<u8> {
        self.homogeneous_by(tol, |l, i| l.sig(i))
    }

    fn homogeneous_by(&self, tol: f64, grade: impl Fn(&Layout, usize) -> u8) -> Option<u8> {
        let mut found = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() > tol {
                let g = grade(&self.layout, i);
                match found {
                    None => found = Some(g),
                    Some(prev) if prev != g => return None,
                    _ => {}
                }
            }
        }
        Some(found.unwrap_or(0))
    }

    pub fn scale(&self, factor: Complex64) -> Tensor {
        Tensor {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same(other)?;
        Ok(Tensor {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn check_same(&self, other: &Tensor) -> Result<()> {
        if self.layout.same_shape(&other.layout) {
            Ok(())
        } else {
            Err(GbfError::SpaceMismatch(format!(
                "layouts [{}] and [{}] differ",
                slot_list(self.layout.slots()),
                slot_list(other.layout.slots())
            )))
        }
    }
}

fn slot_list(slots: &[Slot]) -> String {
    slots
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
