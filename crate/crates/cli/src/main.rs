//! `subgen`: stratify, synthesize, verify and certify generalized
//! subbundles from a JSON problem spec.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error, 3 synthesis
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use subgen::counterexample::{
    blowup_certificate, common_zero_scan, default_x_sequence, BlowupCertificate, CommonZero, IdealElement,
};
use subgen::synthesis::{cut_out_cosmooth, stratify, synthesize, GeneratorSet, SynthesisConfig, SynthesisError};
use subgen::verify::{kernel_check, regular_points, semicontinuity_check, spanning_check};
use subgen::{parse, DualFamily, Point, Subbundle};

#[derive(Parser)]
#[command(version, about = "Global generators for smooth generalized subbundles")]
struct Cli {
    /// Problem spec: {"bundle": {...}, "config": {...}}
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for all sampled points
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative rank tolerance (overrides the config value)
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fiber dimension on the config grid
    Stratify,
    /// Build global generators
    Synthesize {
        /// Read the family as covectors and cut out its annihilator
        #[arg(long)]
        cosmooth: bool,
    },
    /// Check a generator file against the bundle
    Verify {
        #[arg(long)]
        generators: PathBuf,
        /// Generators are covectors; check their kernel against ann(F)
        #[arg(long)]
        cosmooth: bool,
        /// Leave out one generator (0-based) before checking
        #[arg(long)]
        drop: Option<usize>,
    },
    /// Non-generation certificate for candidate generators of the flat ideal
    Counterexample {
        /// Candidate generator in x1 (repeatable)
        #[arg(long = "gen")]
        generators: Vec<String>,
        /// Half-width of the interval J = (-a, a)
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Points in the common-zero scan of (0, a)
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Duality check and covector generators for a dual family
    Dual,
}

#[derive(Deserialize)]
struct ProblemSpec {
    bundle: serde_json::Value,
    config: SynthesisConfig,
}

enum Failure {
    Verify,
    Input(anyhow::Error),
    Synthesis(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn synthesis_failure(e: SynthesisError) -> Failure {
    match e {
        SynthesisError::Grid(_) | SynthesisError::DimensionMismatch { .. } | SynthesisError::Json(_) => {
            Failure::Input(e.into())
        }
        other => Failure::Synthesis(other.into()),
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Synthesis(e)) => {
            eprintln!("synthesis failed: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Stratify => cmd_stratify(cli),
        Command::Synthesize { cosmooth } => cmd_synthesize(cli, *cosmooth),
        Command::Verify {
            generators,
            cosmooth,
            drop,
        } => cmd_verify(cli, generators, *cosmooth, *drop),
        Command::Counterexample { generators, a, points } => cmd_counterexample(cli, generators, *a, *points),
        Command::Dual => cmd_dual(cli),
    }
}

fn load_spec(cli: &Cli) -> anyhow::Result<ProblemSpec> {
    let path = cli.spec.as_ref().ok_or_else(|| anyhow!("--spec is required for this command"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut spec: ProblemSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    spec.config.seed = cli.seed;
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(anyhow!("--tol must lie in (0, 1), got {tol}"));
        }
        spec.config.tol = tol;
    }
    Ok(spec)
}

fn write(out: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report JSON");
    text.push('\n');
    text
}

fn cmd_stratify(cli: &Cli) -> Outcome {
    let spec = load_spec(cli)?;
    let g = Subbundle::from_value(spec.bundle).map_err(anyhow::Error::from)?;
    let grid = spec.config.grid_spec().map_err(anyhow::Error::from)?;
    let strat = stratify(&g, &grid, spec.config.tol, spec.config.exec).map_err(synthesis_failure)?;
    let violations =
        semicontinuity_check(&strat, &g, spec.config.tol, spec.config.exec).map_err(anyhow::Error::from)?;
    let regular = regular_points(&strat);
    let summary = strat.summary();
    let dims: Vec<usize> = summary.strata.iter().map(|s| s.d).collect();
    let report = json!({
        "summary": summary,
        "semicontinuity_violations": violations,
        "regular_count": regular.regular.len(),
        "singular_candidates": regular.singular.iter().map(|&i| grid.point(i)).collect::<Vec<_>>(),
    });
    write(&cli.out, "strata.csv", &strat.to_csv())?;
    write(&cli.out, "strata.json", &pretty(&report))?;
    println!("strata d = {dims:?}, maxdim = {}", summary.maxdim);
    Ok(())
}

fn cmd_synthesize(cli: &Cli, cosmooth: bool) -> Outcome {
    let spec = load_spec(cli)?;
    let gen = if cosmooth {
        let f = DualFamily::from_value(spec.bundle).map_err(anyhow::Error::from)?;
        cut_out_cosmooth(&f, &spec.config)
    } else {
        let g = Subbundle::from_value(spec.bundle).map_err(anyhow::Error::from)?;
        synthesize(&g, &spec.config)
    }
    .map_err(synthesis_failure)?;
    let name = if cosmooth { "covectors.json" } else { "generators.json" };
    write(&cli.out, name, &(gen.to_json() + "\n"))?;
    println!("{} generators over {} cover balls", gen.count(), gen.frames().count());
    Ok(())
}

fn load_generators(path: &Path) -> anyhow::Result<GeneratorSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GeneratorSet::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_verify(cli: &Cli, generators: &Path, cosmooth: bool, drop: Option<usize>) -> Outcome {
    let spec = load_spec(cli)?;
    let gen = load_generators(generators)?;
    let mut sections = gen.sections();
    if let Some(i) = drop {
        if i >= sections.len() {
            return Err(anyhow!("--drop {i} but only {} generators", sections.len()).into());
        }
        sections.remove(i);
    }
    let grid = spec.config.grid_spec().map_err(anyhow::Error::from)?;
    let (n, m) = if cosmooth {
        let f = DualFamily::from_value(spec.bundle.clone()).map_err(anyhow::Error::from)?;
        (f.as_subbundle().n(), f.m())
    } else {
        let g = Subbundle::from_value(spec.bundle.clone()).map_err(anyhow::Error::from)?;
        (g.n(), g.m())
    };
    if (gen.n, gen.m) != (n, m) {
        return Err(anyhow!("generators are for n={}, m={} but the bundle has n={n}, m={m}", gen.n, gen.m).into());
    }
    let pass = if cosmooth {
        let f = DualFamily::from_value(spec.bundle).map_err(anyhow::Error::from)?;
        let rep = kernel_check(&sections, &f, &grid, spec.config.tol, spec.config.exec).map_err(anyhow::Error::from)?;
        write(&cli.out, "kernel_report.json", &pretty(&rep))?;
        write(&cli.out, "kernel_grid.csv", &rep.to_csv())?;
        println!("kernel check: {} passed, {} failed", rep.passed, rep.failed);
        rep.pass
    } else {
        let g = Subbundle::from_value(spec.bundle).map_err(anyhow::Error::from)?;
        let rep = spanning_check(&sections, &g, &grid, spec.config.tol, 1e-8, spec.config.exec)
            .map_err(anyhow::Error::from)?;
        write(&cli.out, "span_report.json", &pretty(&rep))?;
        write(&cli.out, "span_grid.csv", &rep.to_csv())?;
        println!(
            "spanning check: {} passed, {} failed, worst residual {:e}",
            rep.passed, rep.failed, rep.worst_residual
        );
        rep.pass
    };
    if pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

#[derive(Serialize)]
struct CounterexampleReport {
    generators: Vec<String>,
    a: f64,
    points: usize,
    verdict: &'static str,
    common_zero: Option<CommonZero>,
    certificate: Option<BlowupCertificate>,
}

fn cmd_counterexample(cli: &Cli, texts: &[String], a: f64, points: usize) -> Outcome {
    let elems = texts
        .iter()
        .map(|t| {
            let e = parse(t, 1).with_context(|| format!("parsing `{t}`"))?;
            IdealElement::new(e, a).map_err(anyhow::Error::from)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let zero = common_zero_scan(&elems, a, points).map_err(anyhow::Error::from)?;
    let xs: Vec<f64> = default_x_sequence().into_iter().filter(|&x| x < a).collect();
    let certificate = match zero {
        Some(_) => None,
        None => Some(blowup_certificate(&elems, a, &xs, points).map_err(anyhow::Error::from)?),
    };
    let verdict = match (&zero, &certificate) {
        (Some(_), _) => "common_zero",
        (None, Some(c)) if c.verdict == subgen::counterexample::Verdict::Diverges => "diverges",
        _ => "inconclusive",
    };
    let csv = certificate.as_ref().map_or_else(|| "x,bound\n".to_string(), BlowupCertificate::to_csv);
    let report = CounterexampleReport {
        generators: elems.iter().map(|e| e.expr().to_string()).collect(),
        a,
        points,
        verdict,
        common_zero: zero,
        certificate,
    };
    write(&cli.out, "certificate.json", &pretty(&report))?;
    write(&cli.out, "certificate.csv", &csv)?;
    println!("verdict: {verdict}");
    Ok(())
}

fn cmd_dual(cli: &Cli) -> Outcome {
    let spec = load_spec(cli)?;
    let f = DualFamily::from_value(spec.bundle).map_err(anyhow::Error::from)?;
    let grid = spec.config.grid_spec().map_err(anyhow::Error::from)?;
    if grid.dim() != f.as_subbundle().n() {
        return Err(anyhow!("window dimension {} differs from n = {}", grid.dim(), f.as_subbundle().n()).into());
    }
    let tol = spec.config.tol;
    let mut duality_failures = Vec::new();
    let mut worst_angle = 0.0f64;
    for i in 0..grid.len() {
        let p = Point::new(grid.point(i)).map_err(anyhow::Error::from)?;
        let r = f.duality_check(&p, tol).map_err(anyhow::Error::from)?;
        worst_angle = worst_angle.max(r.principal_angle);
        if !r.pass {
            duality_failures.push(json!({ "point": p.coords(), "report": r }));
        }
    }
    let covectors = cut_out_cosmooth(&f, &spec.config).map_err(synthesis_failure)?;
    let kernel = kernel_check(&covectors.sections(), &f, &grid, tol, spec.config.exec).map_err(anyhow::Error::from)?;
    let pass = duality_failures.is_empty() && kernel.pass;
    let report = json!({
        "duality": {
            "points": grid.len(),
            "worst_angle": worst_angle,
            "failures": duality_failures,
        },
        "covectors": covectors.count(),
        "kernel": kernel,
        "pass": pass,
    });
    write(&cli.out, "covectors.json", &(covectors.to_json() + "\n"))?;
    write(&cli.out, "dual_report.json", &pretty(&report))?;
    write(&cli.out, "dual_grid.csv", &kernel.to_csv())?;
    println!(
        "duality worst angle {worst_angle:e}; {} covectors, kernel residual {:e}",
        covectors.count(),
        kernel.worst_residual
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
