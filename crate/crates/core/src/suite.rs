//! Runs groups of checks over a whole theory.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::amplitude::{self, SignConvention};
use crate::error::{GbfError, Result};
use crate::krein;
use crate::positive;
use crate::report::CheckReport;
use crate::spacetime::GluingKind;
use crate::theory::TheorySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    T,
    O,
    P,
    E,
    All,
}

impl FromStr for Suite {
    type Err = GbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(Suite::T),
            "O" | "o" => Ok(Suite::O),
            "P" | "p" => Ok(Suite::P),
            "E" | "e" => Ok(Suite::E),
            "all" | "ALL" => Ok(Suite::All),
            _ => Err(GbfError::InvalidArgument(format!("unknown suite `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub tol_eq: f64,
    pub tol_cone: f64,
    /// Random samples per cone or realness check.
    pub samples: usize,
    pub seed: u64,
    pub conv: SignConvention,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            tol_eq: 1e-9,
            tol_cone: 1e-10,
            samples: 20,
            seed: 0,
            conv: SignConvention::default(),
        }
    }
}

fn wrap(check: &str, target: &str, tol: f64, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::new(check, target, f64::INFINITY, tol).fail(&e.to_string()))
}

fn gluings(theory: &TheorySpec, kind: GluingKind) -> Vec<String> {
    theory
        .system
        .gluings
        .iter()
        .filter(|g| g.kind == kind)
        .map(|g| g.id.clone())
        .collect()
}

fn amplitude_regions(theory: &TheorySpec) -> Vec<String> {
    theory.amplitudes.keys().cloned().collect()
}

pub fn run_t(theory: &TheorySpec, o: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = krein::check_t1(theory, o.tol_eq);
    for (k, h) in theory.system.hypersurfaces.iter().enumerate() {
        out.push(wrap("T1b", &h.id, o.tol_eq, krein::check_t1b(theory, &h.id, o.tol_eq, o.seed + k as u64)));
    }
    for k in 0..theory.system.decompositions.len() {
        let target = format!("decomposition#{k}");
        out.push(wrap("T2", &target, o.tol_eq, krein::check_t2(theory, k, o.tol_eq, o.conv)));
        out.push(wrap("T2b", &target, o.tol_eq, krein::check_t2b(theory, k, o.tol_eq)));
    }
    for s in &theory.system.slices {
        out.push(wrap("T3x", &s.source, o.tol_eq, amplitude::check_t3x(theory, &s.source, o.tol_eq)));
    }
    for r in amplitude_regions(theory) {
        out.push(wrap("T4", &r, o.tol_eq, amplitude::check_t4(theory, &r, o.tol_eq)));
    }
    for g in gluings(theory, GluingKind::DisjointUnion) {
        out.push(wrap("T5a", &g, o.tol_eq, amplitude::check_t5a_with(theory, &g, o.tol_eq, o.conv)));
    }
    for g in gluings(theory, GluingKind::SelfGluing) {
        out.push(wrap(
            "T5b",
            &g,
            o.tol_eq,
            amplitude::check_t5b_with(theory, &g, o.tol_eq, o.conv).map(|s| s.report),
        ));
    }
    out
}

pub fn run_o(theory: &TheorySpec, o: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for obs in &theory.observables {
        out.push(wrap("O1", &obs.id, o.tol_eq, amplitude::check_o1(theory, &obs.id, o.tol_eq)));
    }
    for g in gluings(theory, GluingKind::DisjointUnion) {
        out.push(wrap("O2a", &g, o.tol_eq, amplitude::check_o2a(theory, &g, o.tol_eq)));
    }
    for g in gluings(theory, GluingKind::SelfGluing) {
        out.push(wrap("O2b", &g, o.tol_eq, amplitude::check_o2b(theory, &g, o.tol_eq)));
    }
    out
}

/// Cone samples shrink with the size of the doubled space.
fn p1_samples(base_dim: usize, samples: usize) -> usize {
    match base_dim {
        0..=16 => samples.min(5),
        17..=64 => samples.min(2),
        _ => samples.min(1),
    }
}

pub fn run_p(theory: &TheorySpec, o: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, h) in theory.system.hypersurfaces.iter().enumerate() {
        // identical space sequences give identical cones
        let layout = match theory.layout(&h.id) {
            Ok(l) => l,
            Err(e) => {
                out.push(CheckReport::new("P1", &h.id, f64::INFINITY, o.tol_cone).fail(&e.to_string()));
                continue;
            }
        };
        let key = format!("{:?}", layout.spaces());
        if !seen.insert(key) {
            continue;
        }
        out.push(wrap("P1", &h.id, o.tol_cone, positive::check_p1(theory, &h.id, o.tol_cone, p1_samples(layout.dim(), o.samples), o.seed + k as u64)));
    }
    for k in 0..theory.system.decompositions.len() {
        let target = format!("decomposition#{k}");
        out.push(wrap("P2", &target, o.tol_eq, positive::check_p2(theory, k, o.tol_eq, o.conv, o.seed + k as u64)));
    }
    for s in &theory.system.slices {
        out.push(wrap("P3x", &s.source, o.tol_eq, positive::check_p3x(theory, &s.source, o.tol_eq)));
    }
    for (k, r) in amplitude_regions(theory).iter().enumerate() {
        out.push(wrap("P4", r, o.tol_cone, positive::check_p4(theory, r, o.tol_cone, o.samples, o.seed + k as u64)));
    }
    for g in gluings(theory, GluingKind::DisjointUnion) {
        out.push(wrap("P5a", &g, o.tol_eq, positive::check_p5a(theory, &g, o.tol_eq, o.conv)));
    }
    for g in gluings(theory, GluingKind::SelfGluing) {
        out.push(wrap("P5b", &g, o.tol_eq, positive::check_p5b(theory, &g, o.tol_eq, o.conv)));
    }
    out
}

pub fn run_e(theory: &TheorySpec, o: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for (k, r) in amplitude_regions(theory).iter().enumerate() {
        out.push(wrap("E1", r, o.tol_eq, positive::check_e1(theory, r, o.tol_eq, o.seed + k as u64)));
        out.push(wrap("Eor", r, o.tol_eq, positive::check_expmor(theory, r, o.tol_eq)));
    }
    for g in gluings(theory, GluingKind::DisjointUnion) {
        out.push(wrap("E2a", &g, o.tol_eq, positive::check_e2a(theory, &g, o.tol_eq)));
    }
    for g in gluings(theory, GluingKind::SelfGluing) {
        out.push(wrap("E2b", &g, o.tol_eq, positive::check_e2b(theory, &g, o.tol_eq, o.conv)));
    }
    out
}

/// Run a suite; reports are sorted by check id, then target.
pub fn run_suite(theory: &TheorySpec, suite: Suite, o: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = match suite {
        Suite::T => run_t(theory, o),
        Suite::O => run_o(theory, o),
        Suite::P => run_p(theory, o),
        Suite::E => run_e(theory, o),
        Suite::All => {
            let mut v = run_t(theory, o);
            v.extend(run_o(theory, o));
            v.extend(run_p(theory, o));
            v.extend(run_e(theory, o));
            v
        }
    };
    out.sort_by_key(|r| r.sort_key());
    out
}
