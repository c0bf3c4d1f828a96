//! Serializable theory bundle: a spacetime system with spaces, amplitudes,
//! observables and gluing anomalies attached.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GbfError, Result};
use crate::graded::{GradedKreinSpace, Layout, Reordering, Slot, Tensor};
use crate::spacetime::SpacetimeSystem;

pub const SPEC_VERSION: &str = "gbf-theory/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub id: String,
    pub region: String,
    pub coeffs: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdeg: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheorySpec {
    pub version: String,
    #[serde(flatten)]
    pub system: SpacetimeSystem,
    /// Space of each original component, keyed by component label. Copies
    /// inherit the space of the component they copy.
    pub spaces: BTreeMap<String, GradedKreinSpace>,
    /// Region id to dense coefficients over the boundary product basis.
    #[serde(default)]
    pub amplitudes: BTreeMap<String, Vec<Complex64>>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    /// Gluing record id to anomaly factor.
    #[serde(default)]
    pub anomalies: BTreeMap<String, Complex64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Default for TheorySpec {
    fn default() -> Self {
        Self {
            version: SPEC_VERSION.to_string(),
            system: SpacetimeSystem::default(),
            spaces: BTreeMap::new(),
            amplitudes: BTreeMap::new(),
            observables: Vec::new(),
            anomalies: BTreeMap::new(),
            metadata: BTreeMap::new(),
        }
    }
}

impl TheorySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GbfError::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("theory serializes")
    }

    pub fn space_of(&self, component: &str) -> Result<&GradedKreinSpace> {
        self.spaces
            .get(component)
            .or_else(|| self.spaces.get(&self.system.root(component)))
            .ok_or_else(|| GbfError::MissingSpace(component.to_string()))
    }

    /// Primary layout of a hypersurface: one slot per component, canonical order.
    pub fn layout(&self, hypersurface: &str) -> Result<Layout> {
        let comps = self.system.components(hypersurface)?;
        self.layout_of_components(comps)
    }

    pub fn layout_of_components(&self, comps: &[String]) -> Result<Layout> {
        let factors = comps
            .iter()
            .map(|c| Ok((Slot::primary(c.clone()), self.space_of(c)?.clone())))
            .collect::<Result<Vec<_>>>()?;
        Layout::new(factors)
    }

    pub fn boundary_layout(&self, region: &str) -> Result<Layout> {
        match &self.system.region(region)?.boundary {
            Some(b) => self.layout(b),
            None => Ok(Layout::empty()),
        }
    }

    /// True if any attached space has an odd f-degree or a negative direction.
    pub fn is_general(&self) -> bool {
        self.spaces.values().any(|s| !s.is_bosonic())
    }

    pub fn has_odd(&self) -> bool {
        self.spaces.values().any(|s| s.has_odd())
    }

    fn decomposition_registered(&self, whole: &str, parts: &[&str]) -> bool {
        if parts.len() == 1 && parts[0] == whole {
            return true;
        }
        let mut wanted: Vec<&str> = parts.to_vec();
        wanted.sort_unstable();
        self.system.decompositions.iter().any(|d| {
            let mut have: Vec<&str> = d.parts.iter().map(String::as_str).collect();
            have.sort_unstable();
            d.whole == whole && have == wanted
        })
    }

    /// `τ`: tensor product of vectors on the parts of a registered
    /// decomposition, as a vector on the whole.
    pub fn tau(&self, parts: &[(&str, &Tensor)], target: &str) -> Result<Tensor> {
        self.tau_with(parts, target, true)
    }

    /// [`tau`](Self::tau) with the transposition sign optionally dropped.
    pub fn tau_with(&self, parts: &[(&str, &Tensor)], target: &str, graded: bool) -> Result<Tensor> {
        let ids: Vec<&str> = parts.iter().map(|(id, _)| *id).collect();
        if !self.decomposition_registered(target, &ids) {
            return Err(GbfError::UnregisteredDecomposition {
                whole: target.to_string(),
                parts: ids.iter().map(|s| s.to_string()).collect(),
            });
        }
        let mut acc = Tensor::scalar(Complex64::new(1.0, 0.0));
        for (id, v) in parts {
            let expected = self.layout(id)?;
            if !v.layout().same_shape(&expected) {
                return Err(GbfError::SpaceMismatch(format!("vector is not on `{id}`")));
            }
            acc = acc.kron(v)?;
        }
        let target_layout = self.layout(target)?;
        let r = Reordering::new(acc.layout(), target_layout.slots())?;
        let r = if graded { r } else { r.ungraded() };
        r.apply(&acc)
    }

    /// Structural problems: spacetime violations, missing spaces, and
    /// coefficient arrays of the wrong length.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .system
            .validate()
            .into_iter()
            .map(|v| format!("{} [{}]: {}", v.record, v.rule, v.message))
            .collect();
        for (label, space) in &self.spaces {
            if let Err(e) = space.validate() {
                out.push(format!("space `{label}`: {e}"));
            }
        }
        for h in &self.system.hypersurfaces {
            for c in &h.components {
                if self.space_of(c).is_err() {
                    out.push(format!("component `{c}` of `{}` has no space", h.id));
                }
            }
        }
        let mut check_len = |what: String, region: &str, len: usize| match self.boundary_layout(region) {
            Ok(l) if l.dim() != len => {
                out.push(format!("{what}: {len} coefficients, boundary dimension {}", l.dim()))
            }
            Ok(_) => {}
            Err(e) => out.push(format!("{what}: {e}")),
        };
        for (region, coeffs) in &self.amplitudes {
            check_len(format!("amplitude `{region}`"), region, coeffs.len());
        }
        for o in &self.observables {
            check_len(format!("observable `{}`", o.id), &o.region, o.coeffs.len());
        }
        for (gluing, c) in &self.anomalies {
            if self.system.gluing(gluing).is_err() {
                out.push(format!("anomaly for unknown gluing `{gluing}`"));
            }
            if c.norm() == 0.0 {
                out.push(format!("anomaly for `{gluing}` is zero"));
            }
        }
        out
    }
}
