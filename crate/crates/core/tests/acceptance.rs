//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use gbf_core::amplitude::{check_t5b_with, SignConvention};
use gbf_core::doubled::DoubledSpace;
use gbf_core::graded::{GradedKreinSpace, Layout};
use gbf_core::krein::check_t2;
use gbf_core::library::{
    build_fermionic_toy, build_interval_theory, random_bosonic_theory, random_fermionic_theory, FermionicToyConfig,
    IntervalTheoryConfig,
};
use gbf_core::linalg::{haar_unitary, random_complex, random_unit_vector, rng_from_seed, CMatrix, ONE, ZERO};
use gbf_core::measurement::{
    born_recovery, evolve_mixed, hs_transition, mixed_state, observable_expectation, probability, MeasurementOptions,
    Subspace,
};
use gbf_core::positive::{check_p1, check_p2, check_p5b};
use gbf_core::report::CheckReport;
use gbf_core::suite::{run_suite, Suite, SuiteOptions};
use gbf_core::theory::TheorySpec;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    summary: String,
}

fn verdict(pass: bool, summary: String) -> Verdict {
    Verdict { pass, summary }
}

fn theories(bosonic: usize, fermionic: usize, seed: u64) -> Vec<(String, TheorySpec)> {
    let mut out = Vec::new();
    for k in 0..bosonic {
        let mut rng = rng_from_seed(seed + k as u64);
        out.push((format!("bosonic#{k}"), random_bosonic_theory(&mut rng).expect("bosonic theory")));
    }
    for k in 0..fermionic {
        let mut rng = rng_from_seed(seed + 10_000 + k as u64);
        out.push((format!("fermionic#{k}"), random_fermionic_theory(&mut rng).expect("fermionic theory")));
    }
    out
}

fn worst(reports: &[CheckReport]) -> f64 {
    reports
        .iter()
        .map(|r| r.max_deviation)
        .fold(0.0, f64::max)
}

/// `|⟨φ, Uψ⟩|²` computed directly.
fn born_oracle(u: &CMatrix, psi: &[Complex64], phi: &[Complex64]) -> f64 {
    let n = u.nrows();
    let mut amp = ZERO;
    for i in 0..n {
        let image: Complex64 = (0..n).map(|j| u[(i, j)] * psi[j]).sum();
        amp += phi[i].conj() * image;
    }
    amp.norm_sqr()
}

fn born_rule() -> Verdict {
    let start = Instant::now();
    let opts = MeasurementOptions::default();
    let mut dev: f64 = 0.0;
    for k in 0..100u64 {
        let mut rng = rng_from_seed(k);
        let d = 2 + (k % 2) as usize;
        let u = haar_unitary(&mut rng, d);
        let psi = random_unit_vector(&mut rng, d);
        let phi = random_unit_vector(&mut rng, d);
        let mut cfg = IntervalTheoryConfig::bosonic(vec![u.clone()]);
        cfg.circle = false;
        cfg.slices = false;
        let t = build_interval_theory(&cfg).expect("interval theory");
        let p = born_recovery(&t, "I0", &psi, &phi, &opts).expect("born recovery");
        dev = dev.max(match p.value {
            Some(v) => (v - born_oracle(&u, &psi, &phi)).abs(),
            None => f64::INFINITY,
        });
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        dev <= 1e-9 && secs < 5.0,
        format!("100 Haar qubit/qutrit transitions, max deviation {dev:.2e} (tol 1e-9), {secs:.2}s (limit 5s)"),
    )
}

fn derivation_theorem() -> Verdict {
    let t_opts = SuiteOptions {
        tol_eq: 1e-12,
        tol_cone: 1e-12,
        ..SuiteOptions::default()
    };
    let pe_opts = SuiteOptions {
        tol_eq: 1e-9,
        tol_cone: 1e-9,
        ..SuiteOptions::default()
    };
    let all = theories(100, 50, 20_000);
    let (mut t_pass, mut pe_pass) = (0, 0);
    let (mut t_dev, mut pe_dev): (f64, f64) = (0.0, 0.0);
    let mut failures = Vec::new();
    for (name, t) in &all {
        let tr = run_suite(t, Suite::T, &t_opts);
        t_dev = t_dev.max(worst(&tr));
        if !tr.iter().all(|r| r.pass) {
            failures.push(format!("{name}: T"));
            continue;
        }
        t_pass += 1;
        let mut pe = run_suite(t, Suite::P, &pe_opts);
        pe.extend(run_suite(t, Suite::E, &pe_opts));
        pe_dev = pe_dev.max(worst(&pe));
        if pe.iter().all(|r| r.pass) {
            pe_pass += 1;
        } else {
            let bad: Vec<String> = pe.iter().filter(|r| !r.pass).map(|r| format!("{} {}", r.check, r.target)).collect();
            failures.push(format!("{name}: {}", bad.join(", ")));
        }
    }
    let mut summary = format!(
        "{t_pass}/{} theories pass T at 1e-12 (worst {t_dev:.2e}); {pe_pass}/{t_pass} of those pass P and E at 1e-9 (worst {pe_dev:.2e})",
        all.len()
    );
    if !failures.is_empty() {
        summary.push_str(&format!("; failures: {}", failures.join("; ")));
    }
    verdict(t_pass == all.len() && pe_pass == t_pass, summary)
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1..1u32 << n).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

fn oracle_equivalence() -> Verdict {
    let opts = MeasurementOptions::default();
    let mut dev: f64 = 0.0;
    let (mut pairs, mut undefined) = (0, 0);
    let mut cases: Vec<TheorySpec> = Vec::new();
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(500 + seed);
        for space in [GradedKreinSpace::bosonic(1), GradedKreinSpace::bosonic(2), GradedKreinSpace::new(vec![0, 0], vec![0, 1]).unwrap()] {
            let mut cfg = IntervalTheoryConfig::bosonic(vec![haar_unitary(&mut rng, space.dim)]);
            cfg.space = space;
            cases.push(build_interval_theory(&cfg).expect("interval theory"));
        }
    }
    for t in &cases {
        let rho = t.amplitude("I0").expect("amplitude");
        let layout = rho.layout.clone();
        for s_idx in subsets(layout.dim()) {
            let s = Subspace::coordinate(layout.clone(), &s_idx).unwrap();
            let den: f64 = s_idx.iter().map(|&i| rho.coeffs[i].norm_sqr()).sum();
            for a_idx in subsets(s_idx.len()) {
                let a_idx: Vec<usize> = a_idx.iter().map(|&k| s_idx[k]).collect();
                let a = Subspace::coordinate(layout.clone(), &a_idx).unwrap();
                let p = probability(t, "I0", &a, &s, &opts).expect("probability");
                pairs += 1;
                let num: f64 = a_idx.iter().map(|&i| rho.coeffs[i].norm_sqr()).sum();
                match p.value {
                    Some(v) => dev = dev.max((v - num / den).abs()).max(p.cross_check_deviation),
                    None => {
                        undefined += 1;
                        if den > opts.tol {
                            dev = f64::INFINITY;
                        }
                    }
                }
            }
        }
    }
    verdict(
        dev <= 1e-10,
        format!("{pairs} coordinate subspace pairs in dim 1, 4, 4 ({undefined} undefined), max deviation {dev:.2e} (tol 1e-10)"),
    )
}

fn sign_controls() -> Verdict {
    let mut rng = rng_from_seed(77);
    let cfg = FermionicToyConfig {
        fdeg: vec![0, 0, 1, 1],
        sig: vec![0, 1, 0, 1],
        intervals: 2,
        anomaly: Complex64::from_polar(1.3, 0.4),
    };
    let t = build_fermionic_toy(&cfg, &mut rng).expect("toy");
    let full = SignConvention::default();
    let no_sig = SignConvention {
        signature_factor: false,
        ..full
    };
    let no_koszul = SignConvention { koszul: false, ..full };
    let self_gluings: Vec<String> = t
        .system
        .gluings
        .iter()
        .filter(|g| g.glued_pair.is_some())
        .map(|g| g.id.clone())
        .collect();
    let gluing_dev = |conv: SignConvention| {
        let mut d: f64 = 0.0;
        for g in &self_gluings {
            d = d.max(check_t5b_with(&t, g, 1e-9, conv).map_or(f64::INFINITY, |s| s.report.max_deviation));
            d = d.max(check_p5b(&t, g, 1e-9, conv).map_or(f64::INFINITY, |r| r.max_deviation));
        }
        d
    };
    let transposition_dev = |conv: SignConvention| {
        let mut d: f64 = 0.0;
        for k in 0..t.system.decompositions.len() {
            d = d.max(check_t2(&t, k, 1e-9, conv).map_or(f64::INFINITY, |r| r.max_deviation));
            d = d.max(check_p2(&t, k, 1e-9, conv, k as u64).map_or(f64::INFINITY, |r| r.max_deviation));
        }
        d
    };
    let (base_g, base_t) = (gluing_dev(full), transposition_dev(full));
    let (sig_dev, koszul_dev) = (gluing_dev(no_sig), transposition_dev(no_koszul));
    verdict(
        base_g <= 1e-9 && base_t <= 1e-9 && sig_dev > 1e-3 && koszul_dev > 1e-3,
        format!(
            "with signs: gluing {base_g:.2e}, transposition {base_t:.2e}; without signature factor {sig_dev:.2e}, without transposition sign {koszul_dev:.2e} (must exceed 1e-3)"
        ),
    )
}

/// Random subspace of `H_{Σ,0}` spanned by vectors of a single signature.
fn superselected_subspace(layout: &Layout, rng: &mut ChaCha8Rng, rank: usize) -> Subspace {
    let n = layout.dim();
    let vectors: Vec<Vec<Complex64>> = (0..rank)
        .map(|k| {
            let sig = (k % 2) as u8;
            (0..n)
                .map(|i| {
                    if layout.fdeg(i) == 0 && layout.sig(i) == sig {
                        random_complex(rng)
                    } else {
                        ZERO
                    }
                })
                .collect()
        })
        .filter(|v: &Vec<Complex64>| v.iter().any(|c| c.norm() > 0.0))
        .collect();
    Subspace::span(layout.clone(), &vectors, 1e-12).unwrap()
}

/// Random subspace of `S` spanned by combinations within one signature.
fn random_subspace_of(s: &Subspace, rng: &mut ChaCha8Rng) -> Subspace {
    let layout = s.layout();
    let basis = s.basis();
    let pick = rng.gen_range(0..basis.len());
    let sig_of = |v: &Vec<Complex64>| (0..v.len()).find(|&i| v[i].norm() > 1e-12).map(|i| layout.sig(i));
    let target = sig_of(&basis[pick]);
    let same: Vec<&Vec<Complex64>> = basis.iter().filter(|v| sig_of(v) == target).collect();
    let weights: Vec<Complex64> = same.iter().map(|_| random_complex(rng)).collect();
    let v: Vec<Complex64> = (0..layout.dim())
        .map(|i| same.iter().zip(&weights).map(|(b, w)| b[i] * w).sum())
        .collect();
    Subspace::span(layout.clone(), &[v], 1e-12).unwrap()
}

fn phase_erasure() -> Verdict {
    let opts = MeasurementOptions::default();
    let (mut map_dev, mut prob_dev): (f64, f64) = (0.0, 0.0);
    let mut compared = 0;
    for (k, (_, t)) in theories(20, 10, 30_000).into_iter().enumerate() {
        let mut rng = rng_from_seed(40_000 + k as u64);
        let regions: Vec<String> = t.amplitudes.keys().cloned().collect();
        let region = &regions[rng.gen_range(0..regions.len())];
        let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let mut rotated = t.clone();
        rotated.amplitudes.get_mut(region).unwrap().iter_mut().for_each(|c| *c *= phase);
        let before = t.probability_map(region).unwrap();
        let after = rotated.probability_map(region).unwrap();
        map_dev = map_dev.max(before.max_abs_diff(&after.coeffs));

        let layout = t.amplitude("I0").unwrap().layout;
        let mut rotated = t.clone();
        rotated.amplitudes.get_mut("I0").unwrap().iter_mut().for_each(|c| *c *= phase);
        for _ in 0..5 {
            let s = superselected_subspace(&layout, &mut rng, 3);
            let a = random_subspace_of(&s, &mut rng);
            let p0 = probability(&t, "I0", &a, &s, &opts).unwrap();
            let p1 = probability(&rotated, "I0", &a, &s, &opts).unwrap();
            if let (Some(x), Some(y)) = (p0.value, p1.value) {
                prob_dev = prob_dev.max((x - y).abs());
                compared += 1;
            } else if p0.defined != p1.defined {
                prob_dev = f64::INFINITY;
            }
        }
    }
    verdict(
        map_dev <= 1e-12 && prob_dev <= 1e-10 && compared > 0,
        format!("30 theories: probability map {map_dev:.2e} (tol 1e-12), {compared} probabilities {prob_dev:.2e} (tol 1e-10)"),
    )
}

fn superselection() -> Verdict {
    let opts = MeasurementOptions::default();
    let mut dev: f64 = 0.0;
    let mut evaluated = 0;
    for (k, (_, t)) in theories(0, 50, 50_000).into_iter().enumerate() {
        let mut rng = rng_from_seed(60_000 + k as u64);
        for obs in &t.observables {
            let o = t.observable(&obs.id).unwrap();
            if o.fdeg != Some(1) {
                continue;
            }
            let layout = t.amplitude(&o.region).unwrap().layout;
            for rank in 1..=4 {
                let s = superselected_subspace(&layout, &mut rng, rank);
                let e = observable_expectation(&t, &obs.id, &s, &opts).unwrap();
                if let Some(v) = e.value {
                    dev = dev.max(v.norm());
                    evaluated += 1;
                }
            }
        }
    }
    verdict(
        dev <= 1e-12 && evaluated > 0,
        format!("{evaluated} odd-observable expectations, max |value| {dev:.2e} (tol 1e-12)"),
    )
}

fn mixed_layer() -> Verdict {
    let tol = 1e-12;
    let mut dev: f64 = 0.0;
    for k in 0..20u64 {
        let mut rng = rng_from_seed(70_000 + k);
        let d = 2 + (k % 3) as usize;
        let (u1, u2) = (haar_unitary(&mut rng, d), haar_unitary(&mut rng, d));
        let states: Vec<(Vec<Complex64>, f64)> = (0..3).map(|_| (random_unit_vector(&mut rng, d), 1.0 / 3.0)).collect();
        let s = mixed_state(&states, tol).unwrap();
        let step = evolve_mixed(&u2, &evolve_mixed(&u1, &s, tol).unwrap(), tol).unwrap();
        let direct = evolve_mixed(&(&u2 * &u1), &s, tol).unwrap();
        dev = dev.max((step.op() - direct.op()).iter().map(|c| c.norm()).fold(0.0, f64::max));
        dev = dev.max((step.op().trace() - ONE).norm());
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pure = |v: Vec<Complex64>| mixed_state(&[(v, 1.0)], tol).unwrap();
    let p0 = pure(vec![ONE, ZERO]);
    let p1 = pure(vec![ZERO, ONE]);
    let plus = pure(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]);
    let cases = [(&p0, &p0, 1.0), (&p0, &p1, 0.0), (&p0, &plus, 0.5), (&plus, &p0, 0.5)];
    for (a, b, expected) in cases {
        dev = dev.max((hs_transition(a, b).unwrap() - expected).abs());
    }
    verdict(dev <= 1e-12, format!("composition, trace and pure-state pairings, max deviation {dev:.2e} (tol 1e-12)"))
}

/// Positive element of `D_{Σ,0}`: block diagonal in f-degree, rank ≤ 4,
/// unit trace.
fn random_positive_even(space: &DoubledSpace, rng: &mut ChaCha8Rng) -> CMatrix {
    let base = space.base();
    let n = base.dim();
    let rank = rng.gen_range(1..=4);
    let mut m = CMatrix::zeros(n, n);
    for deg in 0..2u8 {
        let rows: Vec<usize> = (0..n).filter(|&i| base.fdeg(i) == deg).collect();
        for _ in 0..rank {
            let v: Vec<Complex64> = rows.iter().map(|_| random_complex(rng)).collect();
            for (a, &i) in rows.iter().enumerate() {
                for (b, &j) in rows.iter().enumerate() {
                    m[(i, j)] += v[a] * v[b].conj();
                }
            }
        }
    }
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

fn positivity() -> Verdict {
    let mut min_value = f64::INFINITY;
    let mut cone_dev: f64 = 0.0;
    let mut samples = 0;
    for (k, (_, t)) in theories(20, 10, 80_000).into_iter().enumerate() {
        let mut rng = rng_from_seed(90_000 + k as u64);
        let regions: Vec<String> = t.amplitudes.keys().cloned().collect();
        let maps: Vec<_> = regions.iter().map(|r| t.probability_map(r).unwrap()).collect();
        for s in 0..1000 {
            let map = &maps[s % maps.len()];
            let sigma = random_positive_even(&map.space, &mut rng);
            let v = map.evaluate_op(&sigma).unwrap();
            min_value = min_value.min(v.re);
            samples += 1;
        }
        for (j, h) in t.system.hypersurfaces.iter().enumerate() {
            let r = check_p1(&t, &h.id, 1e-10, 1, j as u64).unwrap();
            cone_dev = cone_dev.max(if r.pass { r.max_deviation } else { f64::INFINITY });
        }
    }
    verdict(
        min_value >= -1e-10 && cone_dev <= 1e-10,
        format!("{samples} positive even elements over 30 theories, min A_M {min_value:.2e} (floor -1e-10); cone checks {cone_dev:.2e}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("born rule recovery", born_rule),
        ("positive formalism derived from amplitudes", derivation_theorem),
        ("quotient and direct probability agree", oracle_equivalence),
        ("sign factors are load-bearing", sign_controls),
        ("global phases are erased", phase_erasure),
        ("odd observables vanish under superselection", superselection),
        ("mixed-state layer", mixed_layer),
        ("positivity and cones", positivity),
    ];
    let mut ok = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        ok &= v.pass;
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.summary,
            start.elapsed().as_secs_f64()
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
