mod query;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use gbf_core::library::{
    build_fermionic_toy, build_interval_theory, disjoint_union, FermionicToyConfig, IntervalTheoryConfig,
};
use gbf_core::linalg::{haar_unitary, random_hermitian, rng_from_seed};
use gbf_core::report::all_pass;
use gbf_core::suite::{run_suite, Suite, SuiteOptions};
use gbf_core::theory::TheorySpec;

#[derive(Parser)]
#[command(name = "gbf", version, about = "Amplitude and positive formalisms of finite-dimensional boundary theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Interval,
    FermionicToy,
    DisjointUnion,
}

#[derive(Subcommand)]
enum Command {
    /// Write an example theory file.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(short, long)]
        out: PathBuf,
        /// Dimension of the point space (interval).
        #[arg(short, long, default_value_t = 2)]
        d: usize,
        /// Number of composable intervals.
        #[arg(short, long, default_value_t = 2)]
        intervals: usize,
        #[arg(long, env = "GBF_SEED", default_value_t = 0)]
        seed: u64,
        /// f-degrees of the basis, comma separated (fermionic-toy).
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 0, 1, 1])]
        fdeg: Vec<u8>,
        /// Signatures of the basis, comma separated (fermionic-toy).
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1, 0, 1])]
        sig: Vec<u8>,
        /// Anomaly `[re, im]` of every self-gluing.
        #[arg(long, num_args = 2, default_values_t = [1.0, 0.0], allow_negative_numbers = true)]
        anomaly: Vec<f64>,
        /// Two theory files to combine (disjoint-union).
        #[arg(long, num_args = 2)]
        inputs: Vec<PathBuf>,
    },
    /// Run an axiom suite and write the report.
    Check {
        theory: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1e-9)]
        tol_eq: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_cone: f64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, env = "GBF_SEED", default_value_t = 0)]
        seed: u64,
        /// Report path; standard output when absent.
        #[arg(short, long)]
        report: Option<PathBuf>,
    },
    /// Evaluate probability and expectation queries.
    Query {
        theory: PathBuf,
        queries: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Summarize a theory file.
    Describe { theory: PathBuf },
}

fn load(path: &Path) -> anyhow::Result<TheorySpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let theory = TheorySpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let problems = theory.problems();
    if !problems.is_empty() {
        bail!("{} is not a valid theory:\n  {}", path.display(), problems.join("\n  "));
    }
    Ok(theory)
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: Kind,
    d: usize,
    intervals: usize,
    seed: u64,
    fdeg: Vec<u8>,
    sig: Vec<u8>,
    anomaly: &[f64],
    inputs: &[PathBuf],
) -> anyhow::Result<TheorySpec> {
    let mut rng = rng_from_seed(seed);
    let c = Complex64::new(anomaly[0], anomaly[1]);
    let mut theory = match kind {
        Kind::Interval => {
            if d == 0 || intervals == 0 {
                bail!("dimension and interval count must be positive");
            }
            let unitaries = (0..intervals).map(|_| haar_unitary(&mut rng, d)).collect();
            let mut cfg = IntervalTheoryConfig::bosonic(unitaries);
            cfg.anomaly = c;
            cfg.insertions = vec![("obs0".into(), random_hermitian(&mut rng, d))];
            build_interval_theory(&cfg)?
        }
        Kind::FermionicToy => {
            if intervals == 0 {
                bail!("interval count must be positive");
            }
            let cfg = FermionicToyConfig {
                fdeg,
                sig,
                intervals,
                anomaly: c,
            };
            build_fermionic_toy(&cfg, &mut rng)?
        }
        Kind::DisjointUnion => {
            let [a, b] = inputs else {
                bail!("disjoint-union needs --inputs FIRST SECOND");
            };
            disjoint_union(&load(a)?, &load(b)?)?
        }
    };
    theory.metadata.insert("seed".into(), json!(seed));
    Ok(theory)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            kind,
            out,
            d,
            intervals,
            seed,
            fdeg,
            sig,
            anomaly,
            inputs,
        } => {
            let theory = generate(kind, d, intervals, seed, fdeg, sig, &anomaly, &inputs)?;
            emit(&theory.to_json(), Some(&out))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            theory,
            suite,
            tol_eq,
            tol_cone,
            samples,
            seed,
            report,
        } => {
            let suite: Suite = suite.parse()?;
            let theory = load(&theory)?;
            let opts = SuiteOptions {
                tol_eq,
                tol_cone,
                samples,
                seed,
                ..SuiteOptions::default()
            };
            let reports = run_suite(&theory, suite, &opts);
            emit(&serde_json::to_string_pretty(&reports)?, report.as_deref())?;
            for r in reports.iter().filter(|r| !r.pass) {
                eprintln!("FAIL {} {} (deviation {:.3e}, tol {:.1e})", r.check, r.target, r.max_deviation, r.tol);
            }
            Ok(if all_pass(&reports) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Query { theory, queries, tol, out } => {
            let theory = load(&theory)?;
            let text = fs::read_to_string(&queries).with_context(|| format!("reading {}", queries.display()))?;
            let file: query::QueryFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", queries.display()))?;
            let results = query::run(&theory, &file, tol);
            emit(&serde_json::to_string_pretty(&results)?, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Describe { theory } => {
            let theory = load(&theory)?;
            describe(&theory);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn describe(t: &TheorySpec) {
    println!("version       {}", t.version);
    if let Some(kind) = t.metadata.get("kind") {
        println!("kind          {kind}");
    }
    println!("hypersurfaces {}", t.system.hypersurfaces.len());
    for (label, s) in &t.spaces {
        println!("  space {label}: dim {} fdeg {:?} sig {:?}", s.dim, s.fdeg, s.sig);
    }
    println!("regions       {}", t.system.regions.len());
    for r in &t.system.regions {
        let dim = t.boundary_layout(&r.id).map(|l| l.dim()).unwrap_or(0);
        let amp = if t.amplitudes.contains_key(&r.id) { "amplitude" } else { "-" };
        println!("  {} boundary dim {dim} {amp}", r.id);
    }
    println!("gluings       {}", t.system.gluings.len());
    for g in &t.system.gluings {
        println!("  {} {:?} {:?} -> {}", g.id, g.kind, g.inputs, g.result);
    }
    println!("observables   {}", t.observables.len());
    for o in &t.observables {
        println!("  {} on {}", o.id, o.region);
    }
    println!("slices        {}", t.system.slices.len());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
