//! Combinatorial spacetime: hypersurfaces, regions, decompositions, gluings
//! and slice regions as labeled finite data.
//!
//! A hypersurface lists its connected components by label. Each component is
//! itself a registered hypersurface whose only component is its own label.
//! Component lists are kept in canonical (lexicographic) order; orientation
//! reversal flips a flag and leaves the list untouched, so every sign computed
//! from factor order is relative to that canonical order.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{GbfError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypersurface {
    pub id: String,
    pub components: Vec<String>,
    /// `true` for the orientation-reversed version.
    #[serde(default)]
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy_of: Option<String>,
}

impl Hypersurface {
    pub fn connected(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            components: vec![id.clone()],
            id,
            reversed: false,
            copy_of: None,
        }
    }

    pub fn composite(id: impl Into<String>, components: &[&str]) -> Self {
        let mut components: Vec<String> = components.iter().map(|s| s.to_string()).collect();
        components.sort();
        Self {
            id: id.into(),
            components,
            reversed: false,
            copy_of: None,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() == 1 && self.components[0] == self.id
    }
}

/// Orientation-reversed hypersurface: same components, flipped flag.
pub fn reverse(h: &Hypersurface) -> Hypersurface {
    Hypersurface {
        reversed: !h.reversed,
        ..h.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    /// `None` for a region without boundary.
    #[serde(default)]
    pub boundary: Option<String>,
    #[serde(default)]
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRegion {
    /// Region id under which the slice is registered.
    pub id: String,
    pub source: String,
    /// The fresh copy Σ′ of the source.
    pub copy: String,
    /// Boundary hypersurface Σ̄ ∪ Σ′.
    pub boundary: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub whole: String,
    pub parts: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GluingKind {
    DisjointUnion,
    SelfGluing,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingRecord {
    pub id: String,
    pub kind: GluingKind,
    pub inputs: Vec<String>,
    /// `(Σ, Σ′)` for self-gluing: `Σ` and the copy whose reversal is glued to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glued_pair: Option<(String, String)>,
    pub result: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacetimeSystem {
    #[serde(default)]
    pub hypersurfaces: Vec<Hypersurface>,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub decompositions: Vec<Decomposition>,
    #[serde(default)]
    pub gluings: Vec<GluingRecord>,
    #[serde(default)]
    pub slices: Vec<SliceRegion>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub record: String,
    pub rule: &'static str,
    pub message: String,
}

impl SpacetimeSystem {
    pub fn hypersurface(&self, id: &str) -> Result<&Hypersurface> {
        self.hypersurfaces
            .iter()
            .find(|h| h.id == id)
            .ok_or_else(|| GbfError::UnknownHypersurface(id.to_string()))
    }

    pub fn region(&self, id: &str) -> Result<&Region> {
        self.regions
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| GbfError::UnknownRegion(id.to_string()))
    }

    pub fn gluing(&self, id: &str) -> Result<&GluingRecord> {
        self.gluings
            .iter()
            .find(|g| g.id == id)
            .ok_or_else(|| GbfError::UnknownGluing(id.to_string()))
    }

    pub fn slice_of(&self, source: &str) -> Option<&SliceRegion> {
        self.slices.iter().find(|s| s.source == source)
    }

    pub fn add_hypersurface(&mut self, h: Hypersurface) {
        self.hypersurfaces.push(h);
    }

    pub fn add_region(&mut self, id: &str, boundary: Option<&str>) {
        self.regions.push(Region {
            id: id.to_string(),
            boundary: boundary.map(str::to_string),
            reversed: false,
        });
    }

    pub fn reverse(&self, id: &str) -> Result<Hypersurface> {
        Ok(reverse(self.hypersurface(id)?))
    }

    /// Components of a hypersurface in canonical order.
    pub fn components(&self, id: &str) -> Result<&[String]> {
        Ok(&self.hypersurface(id)?.components)
    }

    /// Components of a region's boundary; empty for a closed region.
    pub fn boundary_components(&self, region: &str) -> Result<Vec<String>> {
        match &self.region(region)?.boundary {
            Some(b) => Ok(self.components(b)?.to_vec()),
            None => Ok(Vec::new()),
        }
    }

    /// Follow `copy_of` links back to the original component.
    pub fn root(&self, component: &str) -> String {
        let mut current = component.to_string();
        let mut guard = 0;
        while let Some(orig) = self
            .hypersurfaces
            .iter()
            .find(|h| h.id == current)
            .and_then(|h| h.copy_of.clone())
        {
            current = orig;
            guard += 1;
            if guard > self.hypersurfaces.len() {
                break;
            }
        }
        current
    }

    fn is_copy_related(&self, a: &str, b: &str) -> bool {
        let copy_of = |x: &str| {
            self.hypersurfaces
                .iter()
                .find(|h| h.id == x)
                .and_then(|h| h.copy_of.clone())
        };
        copy_of(a).as_deref() == Some(b) || copy_of(b).as_deref() == Some(a)
    }

    /// Pair every component of `sigma` with its counterpart in the copy
    /// `sigma_copy`, in the canonical order of `sigma`.
    pub fn copy_map(&self, sigma: &str, sigma_copy: &str) -> Result<Vec<(String, String)>> {
        let a = self.components(sigma)?;
        let b = self.components(sigma_copy)?;
        if a.len() != b.len() {
            return Err(GbfError::ComponentMismatch(format!(
                "`{sigma}` has {} components but `{sigma_copy}` has {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() == 1 {
            if self.root(&a[0]) == self.root(&b[0]) {
                return Ok(vec![(a[0].clone(), b[0].clone())]);
            }
            return Err(GbfError::ComponentMismatch(format!(
                "`{}` is not a copy of `{}`",
                b[0], a[0]
            )));
        }
        let mut used = BTreeSet::new();
        let mut pairs = Vec::with_capacity(a.len());
        for x in a {
            let direct: Vec<&String> = b
                .iter()
                .filter(|y| !used.contains(*y) && self.is_copy_related(x, y))
                .collect();
            let candidates = if direct.is_empty() {
                b.iter()
                    .filter(|y| !used.contains(*y) && self.root(x) == self.root(y))
                    .collect()
            } else {
                direct
            };
            if candidates.len() != 1 {
                return Err(GbfError::ComponentMismatch(format!(
                    "component `{x}` of `{sigma}` has {} counterparts in `{sigma_copy}`",
                    candidates.len()
                )));
            }
            used.insert(candidates[0].clone());
            pairs.push((x.clone(), candidates[0].clone()));
        }
        Ok(pairs)
    }

    fn fresh_label(&self, base: &str) -> String {
        let mut label = format!("{base}'");
        while self.hypersurfaces.iter().any(|h| h.id == label)
            || self.regions.iter().any(|r| r.id == label)
        {
            label.push('\'');
        }
        label
    }

    /// Register a fresh copy Σ′ of `sigma` and the slice region with boundary
    /// Σ̄ ∪ Σ′.
    pub fn make_slice(&mut self, sigma: &str) -> Result<SliceRegion> {
        let source = self.hypersurface(sigma)?.clone();
        let mut copies = Vec::with_capacity(source.components.len());
        for atom in &source.components {
            let label = self.fresh_label(atom);
            self.hypersurfaces.push(Hypersurface {
                copy_of: Some(atom.clone()),
                ..Hypersurface::connected(label.clone())
            });
            copies.push(label);
        }
        let copy = if source.is_connected() {
            copies[0].clone()
        } else {
            let id = self.fresh_label(sigma);
            let mut components = copies.clone();
            components.sort();
            self.hypersurfaces.push(Hypersurface {
                id: id.clone(),
                components,
                reversed: false,
                copy_of: Some(sigma.to_string()),
            });
            id
        };
        let region_id = self.fresh_label(&format!("slice[{sigma}]"));
        let boundary = self.fresh_label(&format!("bd[{region_id}]"));
        let mut components: Vec<String> =
            source.components.iter().cloned().chain(copies).collect();
        components.sort();
        self.hypersurfaces.push(Hypersurface {
            id: boundary.clone(),
            components,
            reversed: false,
            copy_of: None,
        });
        self.decompositions.push(Decomposition {
            whole: boundary.clone(),
            parts: vec![sigma.to_string(), copy.clone()],
        });
        self.regions.push(Region {
            id: region_id.clone(),
            boundary: Some(boundary.clone()),
            reversed: false,
        });
        let slice = SliceRegion {
            id: region_id,
            source: sigma.to_string(),
            copy,
            boundary,
        };
        self.slices.push(slice.clone());
        Ok(slice)
    }

    /// Check every structural rule; an empty list means the system is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut v = |record: &str, rule: &'static str, message: String| {
            out.push(Violation {
                record: record.to_string(),
                rule,
                message,
            })
        };
        let hs: HashMap<&str, &Hypersurface> =
            self.hypersurfaces.iter().map(|h| (h.id.as_str(), h)).collect();
        let mut seen = BTreeSet::new();
        for h in &self.hypersurfaces {
            if !seen.insert(h.id.as_str()) {
                v(&h.id, "unique-id", "hypersurface id registered twice".into());
            }
            if h.components.is_empty() {
                v(&h.id, "nonempty-components", "hypersurface has no components".into());
            }
            if h.components.windows(2).any(|w| w[0] >= w[1]) {
                v(
                    &h.id,
                    "canonical-order",
                    "components must be unique and in lexicographic order".into(),
                );
            }
            for c in &h.components {
                match hs.get(c.as_str()) {
                    None => v(&h.id, "component-registered", format!("component `{c}` is not registered")),
                    Some(ch) if !ch.is_connected() => v(
                        &h.id,
                        "component-connected",
                        format!("component `{c}` is not a connected hypersurface"),
                    ),
                    _ => {}
                }
            }
            if let Some(orig) = &h.copy_of {
                match hs.get(orig.as_str()) {
                    None => v(&h.id, "copy-of-registered", format!("copy_of `{orig}` is not registered")),
                    Some(o) if o.components.len() != h.components.len() => v(
                        &h.id,
                        "copy-shape",
                        format!("copy of `{orig}` has a different number of components"),
                    ),
                    _ => {}
                }
            }
        }
        let mut region_ids = BTreeSet::new();
        for r in &self.regions {
            if !region_ids.insert(r.id.as_str()) {
                v(&r.id, "unique-id", "region id registered twice".into());
            }
            if let Some(b) = &r.boundary {
                if !hs.contains_key(b.as_str()) {
                    v(&r.id, "boundary-registered", format!("boundary `{b}` is not registered"));
                }
            }
        }
        let comps = |id: &str| -> Option<BTreeSet<String>> {
            hs.get(id).map(|h| h.components.iter().cloned().collect())
        };
        let region_comps = |id: &str| -> Option<BTreeSet<String>> {
            let r = self.regions.iter().find(|r| r.id == id)?;
            match &r.boundary {
                None => Some(BTreeSet::new()),
                Some(b) => comps(b),
            }
        };
        for (k, d) in self.decompositions.iter().enumerate() {
            let record = format!("decomposition#{k}({})", d.whole);
            let Some(whole) = comps(&d.whole) else {
                v(&record, "decomposition-registered", format!("`{}` is not registered", d.whole));
                continue;
            };
            let mut union = BTreeSet::new();
            let mut ok = true;
            for p in &d.parts {
                match comps(p) {
                    None => {
                        v(&record, "decomposition-registered", format!("part `{p}` is not registered"));
                        ok = false;
                    }
                    Some(pc) => {
                        for c in pc {
                            if !union.insert(c.clone()) {
                                v(&record, "decomposition-disjoint", format!("component `{c}` appears in two parts"));
                            }
                        }
                    }
                }
            }
            if ok && union != whole {
                v(&record, "decomposition-partition", "parts do not cover the whole exactly".into());
            }
        }
        for g in &self.gluings {
            let Some(result) = region_comps(&g.result) else {
                v(&g.id, "gluing-registered", format!("result `{}` is not registered", g.result));
                continue;
            };
            match g.kind {
                GluingKind::DisjointUnion => {
                    if g.inputs.len() != 2 {
                        v(&g.id, "disjoint-arity", "disjoint union needs exactly two inputs".into());
                        continue;
                    }
                    let (Some(a), Some(b)) = (region_comps(&g.inputs[0]), region_comps(&g.inputs[1])) else {
                        v(&g.id, "gluing-registered", "input region not registered".into());
                        continue;
                    };
                    if !a.is_disjoint(&b) {
                        v(&g.id, "disjoint-boundaries", "input boundaries overlap".into());
                    }
                    if a.union(&b).cloned().collect::<BTreeSet<_>>() != result {
                        v(&g.id, "disjoint-boundary-union", "result boundary is not the union of the input boundaries".into());
                    }
                }
                GluingKind::SelfGluing => {
                    if g.inputs.len() != 1 {
                        v(&g.id, "self-gluing-arity", "self-gluing needs exactly one input".into());
                        continue;
                    }
                    let Some((sigma, copy)) = &g.glued_pair else {
                        v(&g.id, "self-gluing-pair", "glued_pair missing".into());
                        continue;
                    };
                    let (Some(m), Some(s), Some(sc)) =
                        (region_comps(&g.inputs[0]), comps(sigma), comps(copy))
                    else {
                        v(&g.id, "gluing-registered", "input region or glued hypersurface not registered".into());
                        continue;
                    };
                    if let Err(e) = self.copy_map(sigma, copy) {
                        v(&g.id, "self-gluing-copy", e.to_string());
                    }
                    let parts = [&result, &s, &sc];
                    let total: usize = parts.iter().map(|p| p.len()).sum();
                    let union: BTreeSet<String> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
                    if union.len() != total || union != m {
                        v(
                            &g.id,
                            "self-gluing-boundary",
                            "input boundary must be the disjoint union of result boundary, Σ and Σ′".into(),
                        );
                    }
                }
            }
        }
        for s in &self.slices {
            let (Some(src), Some(cp)) = (comps(&s.source), comps(&s.copy)) else {
                v(&s.id, "slice-registered", "slice source or copy not registered".into());
                continue;
            };
            if let Err(e) = self.copy_map(&s.source, &s.copy) {
                v(&s.id, "slice-copy", e.to_string());
            }
            match region_comps(&s.id) {
                None => v(&s.id, "slice-registered", "slice region not registered".into()),
                Some(b) => {
                    if !src.is_disjoint(&cp) || src.union(&cp).cloned().collect::<BTreeSet<_>>() != b {
                        v(&s.id, "slice-boundary", "slice boundary must be Σ̄ ∪ Σ′".into());
                    }
                }
            }
        }
        out
    }
}
