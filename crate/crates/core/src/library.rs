//! Constructors for concrete theories: chains of evolution intervals on a
//! single graded Krein space, with slices, an optional circle closure, and
//! disjoint unions of two theories.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use crate::amplitude::{canonical_slice_amplitude, product_functional, SelfGluing, SignConvention};
use crate::error::{GbfError, Result};
use crate::graded::{parity_sign, GradedKreinSpace};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::spacetime::{Decomposition, GluingKind, GluingRecord, Hypersurface};
use crate::theory::{ObservableSpec, TheorySpec};

/// Configuration of an interval chain `I0, I1, …` with evolutions `U_k`.
#[derive(Clone, Debug)]
pub struct IntervalTheoryConfig {
    pub space: GradedKreinSpace,
    pub unitaries: Vec<CMatrix>,
    /// Close the first interval into a circle.
    pub circle: bool,
    /// Anomaly attached to every self-gluing (the glued amplitude is divided by it).
    pub anomaly: Complex64,
    /// Operators inserted at the outgoing end of `I0` to form observables.
    pub insertions: Vec<(String, CMatrix)>,
    /// Register slice regions for the point and for the boundary of `I0`.
    pub slices: bool,
}

impl IntervalTheoryConfig {
    pub fn bosonic(unitaries: Vec<CMatrix>) -> Self {
        let d = unitaries.first().map_or(1, |u| u.nrows());
        Self {
            space: GradedKreinSpace::bosonic(d),
            unitaries,
            circle: true,
            anomaly: ONE,
            insertions: Vec::new(),
            slices: true,
        }
    }
}

pub fn point_label(k: usize) -> String {
    format!("t{k:02}")
}

fn boundary_label(region: &str) -> String {
    format!("bd[{region}]")
}

/// Coefficients of `ρ(ψ⊗η) = ⟨ι⁻¹η, Uψ⟩` on `[incoming, outgoing]`.
pub fn evolution_coefficients(space: &GradedKreinSpace, u: &CMatrix) -> Vec<Complex64> {
    let d = space.dim;
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = u[(j, i)] * parity_sign(space.sig[j]);
        }
    }
    out
}

fn check_config(cfg: &IntervalTheoryConfig, tol: f64) -> Result<()> {
    cfg.space.validate()?;
    if cfg.unitaries.is_empty() {
        return Err(GbfError::InvalidArgument("at least one interval is required".into()));
    }
    let d = cfg.space.dim;
    for u in &cfg.unitaries {
        if u.nrows() != d || u.ncols() != d {
            return Err(GbfError::InvalidArgument(format!("evolution must be {d}×{d}")));
        }
        let dev = linalg::unitarity_deviation(u);
        if dev > tol {
            return Err(GbfError::NotUnitary(dev));
        }
        for i in 0..d {
            for j in 0..d {
                if cfg.space.fdeg[i] != cfg.space.fdeg[j] && u[(i, j)].norm() > tol {
                    return Err(GbfError::InvalidArgument(
                        "evolution must preserve the f-degree".into(),
                    ));
                }
            }
        }
    }
    if cfg.anomaly.norm() == 0.0 {
        return Err(GbfError::ZeroAnomaly);
    }
    for (id, q) in &cfg.insertions {
        if q.nrows() != d || q.ncols() != d {
            return Err(GbfError::InvalidArgument(format!("insertion `{id}` must be {d}×{d}")));
        }
    }
    Ok(())
}

fn add_composite(t: &mut TheorySpec, id: &str, parts: &[&str]) {
    t.system.add_hypersurface(Hypersurface::composite(id, parts));
    t.system.decompositions.push(Decomposition {
        whole: id.to_string(),
        parts: parts.iter().map(|s| s.to_string()).collect(),
    });
}

/// Interval chain with end-to-end gluings; see [`IntervalTheoryConfig`].
pub fn build_interval_theory(cfg: &IntervalTheoryConfig) -> Result<TheorySpec> {
    check_config(cfg, 1e-9)?;
    let n = cfg.unitaries.len();
    let mut t = TheorySpec::default();
    let origin = point_label(0);
    t.spaces.insert(origin.clone(), cfg.space.clone());
    for k in 0..2 * n {
        let p = point_label(k);
        let h = if k == 0 {
            Hypersurface::connected(p)
        } else {
            Hypersurface {
                copy_of: Some(origin.clone()),
                ..Hypersurface::connected(p)
            }
        };
        t.system.add_hypersurface(h);
    }
    for (k, u) in cfg.unitaries.iter().enumerate() {
        let region = format!("I{k}");
        let bd = boundary_label(&region);
        add_composite(&mut t, &bd, &[&point_label(2 * k), &point_label(2 * k + 1)]);
        t.system.add_region(&region, Some(&bd));
        t.amplitudes.insert(region, evolution_coefficients(&cfg.space, u));
    }
    for (id, q) in &cfg.insertions {
        let uq = &cfg.unitaries[0] * q;
        let fdeg = operator_degree(&cfg.space, q);
        t.observables.push(ObservableSpec {
            id: id.clone(),
            region: "I0".into(),
            coeffs: evolution_coefficients(&cfg.space, &uq),
            fdeg,
        });
    }
    let mut chain = "I0".to_string();
    for k in 1..n {
        let union = format!("U{k}");
        let union_bd = boundary_label(&union);
        let (first, last) = (point_label(2 * k - 1), point_label(2 * k));
        add_composite(
            &mut t,
            &union_bd,
            &[&origin, &first, &last, &point_label(2 * k + 1)],
        );
        let (chain_bd, next_bd) = (boundary_label(&chain), boundary_label(&format!("I{k}")));
        t.system.decompositions.push(Decomposition {
            whole: union_bd.clone(),
            parts: vec![chain_bd, next_bd],
        });
        t.system.add_region(&union, Some(&union_bd));
        t.system.gluings.push(GluingRecord {
            id: format!("union{k}"),
            kind: GluingKind::DisjointUnion,
            inputs: vec![chain.clone(), format!("I{k}")],
            glued_pair: None,
            result: union.clone(),
        });
        let (a, b) = (t.amplitude(&chain)?, t.amplitude(&format!("I{k}"))?);
        let layout = t.layout(&union_bd)?;
        let coeffs = product_functional(&a.coeffs, &a.layout, &b.coeffs, &b.layout, &layout, true)?;
        t.amplitudes.insert(union.clone(), coeffs);

        let glued = format!("C{k}");
        let glued_bd = boundary_label(&glued);
        add_composite(&mut t, &glued_bd, &[&origin, &point_label(2 * k + 1)]);
        t.system.add_region(&glued, Some(&glued_bd));
        let gid = format!("glue{k}");
        t.system.gluings.push(GluingRecord {
            id: gid.clone(),
            kind: GluingKind::SelfGluing,
            inputs: vec![union.clone()],
            glued_pair: Some((first, last)),
            result: glued.clone(),
        });
        declare_glued(&mut t, &gid, cfg.anomaly)?;
        chain = glued;
    }
    if cfg.circle {
        t.system.add_region("circle", None);
        let gid = "close0".to_string();
        t.system.gluings.push(GluingRecord {
            id: gid.clone(),
            kind: GluingKind::SelfGluing,
            inputs: vec!["I0".into()],
            glued_pair: Some((point_label(1), origin.clone())),
            result: "circle".into(),
        });
        declare_glued(&mut t, &gid, cfg.anomaly)?;
    }
    if cfg.slices {
        add_slice(&mut t, &origin)?;
        add_slice(&mut t, &boundary_label("I0"))?;
    }
    t.metadata.insert("kind".into(), json!("interval"));
    t.metadata.insert("intervals".into(), json!(n));
    Ok(t)
}

fn operator_degree(space: &GradedKreinSpace, q: &CMatrix) -> Option<u8> {
    let mut found = None;
    for i in 0..space.dim {
        for j in 0..space.dim {
            if q[(i, j)].norm() > 1e-14 {
                let deg = space.fdeg[i] ^ space.fdeg[j];
                match found {
                    None => found = Some(deg),
                    Some(prev) if prev != deg => return None,
                    _ => {}
                }
            }
        }
    }
    Some(found.unwrap_or(0))
}

/// Declare the glued amplitude of a self-gluing as the contraction divided by `c`.
fn declare_glued(t: &mut TheorySpec, gluing: &str, c: Complex64) -> Result<()> {
    let g = SelfGluing::new(t, gluing)?;
    let conv = SignConvention::default();
    let rhs = g.glue(&t.amplitude(&g.region)?, &g.canonical_basis(conv), conv)?;
    t.amplitudes
        .insert(g.result.clone(), rhs.into_iter().map(|x| x / c).collect());
    if c != ONE {
        t.anomalies.insert(gluing.to_string(), c);
    }
    Ok(())
}

/// Register the slice region of `sigma` with its canonical amplitude.
pub fn add_slice(t: &mut TheorySpec, sigma: &str) -> Result<String> {
    let slice = t.system.make_slice(sigma)?;
    let coeffs = canonical_slice_amplitude(t, sigma)?;
    t.amplitudes.insert(slice.id.clone(), coeffs);
    Ok(slice.id)
}

/// Configuration of a fermionic or Krein toy built on the interval chain.
#[derive(Clone, Debug)]
pub struct FermionicToyConfig {
    pub fdeg: Vec<u8>,
    pub sig: Vec<u8>,
    pub intervals: usize,
    pub anomaly: Complex64,
}

/// Haar unitary that is block diagonal with respect to the f-degree.
pub fn graded_haar_unitary(rng: &mut impl Rng, space: &GradedKreinSpace) -> CMatrix {
    let d = space.dim;
    let mut u = CMatrix::zeros(d, d);
    for deg in 0..2u8 {
        let idx: Vec<usize> = (0..d).filter(|&i| space.fdeg[i] == deg).collect();
        if idx.is_empty() {
            continue;
        }
        let block = linalg::haar_unitary(rng, idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                u[(i, j)] = block[(a, b)];
            }
        }
    }
    u
}

/// Random operator of a fixed f-degree.
pub fn random_graded_operator(rng: &mut impl Rng, space: &GradedKreinSpace, degree: u8) -> CMatrix {
    let d = space.dim;
    let mut q = linalg::random_matrix(rng, d);
    for i in 0..d {
        for j in 0..d {
            if space.fdeg[i] ^ space.fdeg[j] != degree {
                q[(i, j)] = ZERO;
            }
        }
    }
    q
}

/// Toy theory with odd f-degrees and optional negative directions. Carries
/// one even and one odd observable on `I0`.
pub fn build_fermionic_toy(cfg: &FermionicToyConfig, rng: &mut impl Rng) -> Result<TheorySpec> {
    let space = GradedKreinSpace::new(cfg.fdeg.clone(), cfg.sig.clone())?;
    if !space.has_odd() {
        return Err(GbfError::InvalidArgument("fermionic toy needs an odd basis vector".into()));
    }
    let unitaries = (0..cfg.intervals.max(1))
        .map(|_| graded_haar_unitary(rng, &space))
        .collect();
    let insertions = vec![
        ("even0".to_string(), random_graded_operator(rng, &space, 0)),
        ("odd0".to_string(), random_graded_operator(rng, &space, 1)),
    ];
    let mut t = build_interval_theory(&IntervalTheoryConfig {
        space,
        unitaries,
        circle: true,
        anomaly: cfg.anomaly,
        insertions,
        slices: true,
    })?;
    t.metadata.insert("kind".into(), json!("fermionic-toy"));
    Ok(t)
}

/// Random bosonic interval theory: dimension 1 to 3, one to three intervals,
/// a random anomaly and one Hermitian insertion.
pub fn random_bosonic_theory(rng: &mut impl Rng) -> Result<TheorySpec> {
    let d = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=3);
    let unitaries = (0..n).map(|_| linalg::haar_unitary(rng, d)).collect();
    let mut cfg = IntervalTheoryConfig::bosonic(unitaries);
    cfg.anomaly = random_anomaly(rng);
    cfg.insertions = vec![("obs0".into(), linalg::random_hermitian(rng, d))];
    build_interval_theory(&cfg)
}

/// Random fermionic toy on four basis vectors, two of them odd, with one
/// negative direction in each degree.
pub fn random_fermionic_theory(rng: &mut impl Rng) -> Result<TheorySpec> {
    let n = rng.gen_range(1..=2);
    let cfg = FermionicToyConfig {
        fdeg: vec![0, 0, 1, 1],
        sig: vec![0, 1, 0, 1],
        intervals: n,
        anomaly: random_anomaly(rng),
    };
    build_fermionic_toy(&cfg, rng)
}

fn random_anomaly(rng: &mut impl Rng) -> Complex64 {
    let r: f64 = rng.gen_range(0.5..2.0);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, phase)
}

fn prefixed(t: &TheorySpec, prefix: &str) -> TheorySpec {
    let p = |s: &String| format!("{prefix}{s}");
    let mut out = t.clone();
    for h in &mut out.system.hypersurfaces {
        h.id = p(&h.id);
        h.components = h.components.iter().map(p).collect();
        h.copy_of = h.copy_of.as_ref().map(p);
    }
    for r in &mut out.system.regions {
        r.id = p(&r.id);
        r.boundary = r.boundary.as_ref().map(p);
    }
    for d in &mut out.system.decompositions {
        d.whole = p(&d.whole);
        d.parts = d.parts.iter().map(p).collect();
    }
    for g in &mut out.system.gluings {
        g.id = p(&g.id);
        g.inputs = g.inputs.iter().map(p).collect();
        g.glued_pair = g.glued_pair.as_ref().map(|(a, b)| (p(a), p(b)));
        g.result = p(&g.result);
    }
    for s in &mut out.system.slices {
        s.id = p(&s.id);
        s.source = p(&s.source);
        s.copy = p(&s.copy);
        s.boundary = p(&s.boundary);
    }
    out.spaces = t.spaces.iter().map(|(k, v)| (p(k), v.clone())).collect();
    out.amplitudes = t.amplitudes.iter().map(|(k, v)| (p(k), v.clone())).collect();
    out.anomalies = t.anomalies.iter().map(|(k, v)| (p(k), *v)).collect();
    for o in &mut out.observables {
        o.id = p(&o.id);
        o.region = p(&o.region);
    }
    out
}

fn labels(t: &TheorySpec) -> Vec<&str> {
    let s = &t.system;
    s.hypersurfaces
        .iter()
        .map(|h| h.id.as_str())
        .chain(s.regions.iter().map(|r| r.id.as_str()))
        .chain(s.gluings.iter().map(|g| g.id.as_str()))
        .chain(t.observables.iter().map(|o| o.id.as_str()))
        .collect()
}

/// First region with a nonempty boundary and an amplitude.
fn main_region(t: &TheorySpec) -> Option<String> {
    t.system
        .regions
        .iter()
        .find(|r| r.boundary.is_some() && t.amplitudes.contains_key(&r.id))
        .map(|r| r.id.clone())
}

/// Union of two theories. Labels are prefixed when they collide; the first
/// regions with boundary of each side are joined into a product region.
pub fn disjoint_union(t1: &TheorySpec, t2: &TheorySpec) -> Result<TheorySpec> {
    let collide = {
        let a: std::collections::BTreeSet<&str> = labels(t1).into_iter().collect();
        labels(t2).iter().any(|l| a.contains(l))
    };
    let (a, b) = if collide {
        (prefixed(t1, "A."), prefixed(t2, "B."))
    } else {
        (t1.clone(), t2.clone())
    };
    let mut out = a.clone();
    out.system.hypersurfaces.extend(b.system.hypersurfaces.iter().cloned());
    out.system.regions.extend(b.system.regions.iter().cloned());
    out.system.decompositions.extend(b.system.decompositions.iter().cloned());
    out.system.gluings.extend(b.system.gluings.iter().cloned());
    out.system.slices.extend(b.system.slices.iter().cloned());
    out.spaces.extend(b.spaces.clone());
    out.amplitudes.extend(b.amplitudes.clone());
    out.anomalies.extend(b.anomalies.clone());
    out.observables.extend(b.observables.iter().cloned());
    let mut meta: BTreeMap<String, serde_json::Value> = b.metadata.clone();
    meta.extend(a.metadata.clone());
    out.metadata = meta;
    if let (Some(r1), Some(r2)) = (main_region(&a), main_region(&b)) {
        let region = format!("{r1}+{r2}");
        let bd = boundary_label(&region);
        let (b1, b2) = (
            a.system.region(&r1)?.boundary.clone().expect("boundary"),
            b.system.region(&r2)?.boundary.clone().expect("boundary"),
        );
        let comps: Vec<String> = a
            .system
            .components(&b1)?
            .iter()
            .chain(b.system.components(&b2)?)
            .cloned()
            .collect();
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        out.system.add_hypersurface(Hypersurface::composite(&bd, &refs));
        out.system.decompositions.push(Decomposition {
            whole: bd.clone(),
            parts: vec![b1, b2],
        });
        out.system.add_region(&region, Some(&bd));
        out.system.gluings.push(GluingRecord {
            id: format!("union[{region}]"),
            kind: GluingKind::DisjointUnion,
            inputs: vec![r1.clone(), r2.clone()],
            glued_pair: None,
            result: region.clone(),
        });
        let (f1, f2) = (out.amplitude(&r1)?, out.amplitude(&r2)?);
        let coeffs = product_functional(&f1.coeffs, &f1.layout, &f2.coeffs, &f2.layout, &out.layout(&bd)?, true)?;
        out.amplitudes.insert(region, coeffs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{check_t3x, check_t5a, check_t5b};
    use crate::linalg::rng_from_seed;

    fn identity(d: usize) -> CMatrix {
        CMatrix::identity(d, d)
    }

    #[test]
    fn trivial_interval_circle_is_one() {
        let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![identity(1)])).unwrap();
        assert!(t.problems().is_empty(), "{:?}", t.problems());
        assert_eq!(t.amplitudes["circle"], vec![ONE]);
    }

    #[test]
    fn qubit_identity_circle_is_two() {
        let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![identity(2)])).unwrap();
        assert_eq!(t.amplitudes["circle"], vec![ONE * 2.0]);
        let rho = &t.amplitudes["I0"];
        assert_eq!(rho, &vec![ONE, ZERO, ZERO, ONE]);
    }

    #[test]
    fn fermionic_circle_is_supertrace() {
        let mut rng = rng_from_seed(1);
        let cfg = FermionicToyConfig {
            fdeg: vec![0, 1],
            sig: vec![0, 1],
            intervals: 1,
            anomaly: ONE,
        };
        let t = build_fermionic_toy(&cfg, &mut rng).unwrap();
        let rho = &t.amplitudes["I0"];
        // U₀₀ = ρ(e₀⊗e₀); U₁₁ = −ρ(e₁⊗e₁) because of the negative signature
        let (u00, u11) = (rho[0], -rho[3]);
        assert!((t.amplitudes["circle"][0] - (u00 - u11)).norm() < 1e-14);
    }

    #[test]
    fn krein_circle_is_plain_trace() {
        // the signature sign of the gluing cancels the one in the coefficients
        let mut rng = rng_from_seed(2);
        let u = linalg::haar_unitary(&mut rng, 2);
        let mut cfg = IntervalTheoryConfig::bosonic(vec![u.clone()]);
        cfg.space = GradedKreinSpace::new(vec![0, 0], vec![0, 1]).unwrap();
        let t = build_interval_theory(&cfg).unwrap();
        assert!((t.amplitudes["circle"][0] - (u[(0, 0)] + u[(1, 1)])).norm() < 1e-14);
    }

    #[test]
    fn chain_composes_evolutions() {
        let mut rng = rng_from_seed(3);
        let u1 = linalg::haar_unitary(&mut rng, 3);
        let u2 = linalg::haar_unitary(&mut rng, 3);
        let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![u1.clone(), u2.clone()])).unwrap();
        assert!(t.problems().is_empty(), "{:?}", t.problems());
        let expected = evolution_coefficients(&GradedKreinSpace::bosonic(3), &(u2 * u1));
        let got = &t.amplitudes["C1"];
        let dev = got.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn generated_theories_pass_core_checks() {
        let mut rng = rng_from_seed(11);
        for t in [
            random_bosonic_theory(&mut rng).unwrap(),
            random_fermionic_theory(&mut rng).unwrap(),
        ] {
            assert!(t.problems().is_empty(), "{:?}", t.problems());
            for s in t.system.slices.clone() {
                assert!(check_t3x(&t, &s.source, 1e-12).unwrap().pass);
            }
            for g in &t.system.gluings {
                let r = match g.kind {
                    GluingKind::DisjointUnion => check_t5a(&t, &g.id, 1e-12).unwrap(),
                    GluingKind::SelfGluing => check_t5b(&t, &g.id, 1e-12).unwrap().report,
                };
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn union_with_empty_is_original() {
        let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![identity(2)])).unwrap();
        let empty = TheorySpec::default();
        assert_eq!(disjoint_union(&t, &empty).unwrap(), t);
    }

    #[test]
    fn union_of_two_passes() {
        let mut rng = rng_from_seed(5);
        let a = random_fermionic_theory(&mut rng).unwrap();
        let b = random_bosonic_theory(&mut rng).unwrap();
        let u = disjoint_union(&a, &b).unwrap();
        assert!(u.problems().is_empty(), "{:?}", u.problems());
        for g in u.system.gluings.iter().filter(|g| g.kind == GluingKind::DisjointUnion) {
            assert!(check_t5a(&u, &g.id, 1e-12).unwrap().pass);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let mut cfg = IntervalTheoryConfig::bosonic(vec![identity(2) * Complex64::new(2.0, 0.0)]);
        cfg.circle = false;
        assert!(matches!(build_interval_theory(&cfg), Err(GbfError::NotUnitary(_))));
    }
}
