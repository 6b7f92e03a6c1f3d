//! `multibranch`: list eigenvalue groups, predict bifurcating branches, verify them on a grid.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use multibranch::pdeverify::{build_laplacian, continuation_run, diagram_data, VerificationReport};
use multibranch::report::{prediction_csv, run_prediction, PredictionReport};
use multibranch::spectrum::spectrum_groups;
use serde::{Deserialize, Serialize};

use config::{RunConfig, OUT_ENV};

#[derive(Parser)]
#[command(name = "multibranch", version, about = "Branches of -Δu = |u|^{p-1}u + λu bifurcating from multiple Dirichlet eigenvalues of boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// List eigenvalue groups with multiplicities and modes.
    Spectrum,
    /// Count and classify the predicted branch pairs.
    Predict,
    /// Solve along every predicted branch on a finite-difference grid.
    Verify,
    /// Summarize the reports already in the output directory.
    Report,
}

#[derive(Args)]
struct Overrides {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `square`, `cube`, or squared side lengths such as `pi^2,3*pi^2`.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// 1-based eigenvalue index.
    #[arg(long, global = true)]
    j: Option<usize>,
    /// Exact eigenvalue in domain units, e.g. `5` or `28/3`.
    #[arg(long, global = true, conflicts_with = "j")]
    eigenvalue: Option<String>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Groups listed by `spectrum`.
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Random seed of the multistart search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Intervals per axis, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Decreasing ε schedule, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Skip discrete Morse indices.
    #[arg(long, global = true)]
    no_morse: bool,
    /// Output directory (also taken from MULTIBRANCH_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.domain {
            c.domain = d.clone();
        }
        if let Some(j) = self.j {
            c.j = Some(j);
            c.eigenvalue = None;
        }
        if let Some(e) = &self.eigenvalue {
            c.eigenvalue = Some(e.clone());
            c.j = None;
        }
        if let Some(p) = self.p {
            c.p = p;
        }
        if let Some(n) = self.count {
            c.count = n;
        }
        if let Some(s) = self.seed {
            c.search.seed = s;
        }
        if let Some(g) = &self.grid {
            c.verify.grid = g.clone();
        }
        if let Some(e) = &self.eps {
            c.verify.epsilons = e.clone();
        }
        if self.no_morse {
            c.verify.morse = false;
        }
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            c.out_dir = dir.into();
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct Versions {
    multibranch: String,
    multibranch_cli: String,
}

/// Common wrapper of every JSON report.
#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    command: String,
    config_hash: String,
    versions: Versions,
    config: RunConfig,
    result: T,
}

fn envelope<T>(command: &str, cfg: &RunConfig, result: T) -> Envelope<T> {
    Envelope {
        command: command.into(),
        config_hash: cfg.hash(),
        versions: Versions {
            multibranch: multibranch::report::VERSION.into(),
            multibranch_cli: env!("CARGO_PKG_VERSION").into(),
        },
        config: cfg.clone(),
        result,
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text)
}

#[derive(Serialize, Deserialize)]
struct GroupRow {
    j: usize,
    k: usize,
    eigenvalue: String,
    lambda: f64,
    modes: Vec<Vec<u32>>,
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<u8> {
    let domain = cfg.domain_spec()?;
    let rows: Vec<GroupRow> = spectrum_groups(&domain, cfg.count)
        .iter()
        .map(|g| GroupRow {
            j: g.index_j,
            k: g.multiplicity,
            eigenvalue: g.eigenvalue_exact.to_string(),
            lambda: g.lambda,
            modes: g.modes.iter().map(|m| m.indices.clone()).collect(),
        })
        .collect();
    println!("{domain}");
    println!("{:>4} {:>3} {:>12} {:>14}  modes", "j", "k", "eigenvalue", "lambda");
    for r in &rows {
        let modes: Vec<String> = r.modes.iter().map(|m| format!("{m:?}")).collect();
        println!("{:>4} {:>3} {:>12} {:>14.8}  {}", r.j, r.k, r.eigenvalue, r.lambda, modes.join(" "));
    }
    write_json(&cfg.out_dir, "spectrum.json", &envelope("spectrum", cfg, &rows))?;
    Ok(0)
}

fn print_prediction(rep: &PredictionReport) {
    println!(
        "lambda_j = {} ({:.8}), j = {}, k = {}, p = {}: {} pair(s), {}",
        rep.eigenvalue,
        rep.lambda_j,
        rep.j,
        rep.k,
        rep.p,
        rep.pair_count,
        if rep.exact { "exact count" } else { "lower bound (degenerate point present)" }
    );
    println!("{:>4}  {:<40} {:>12} {:>3} {:>5}", "pair", "a", "J", "m", "m+j-1");
    for (i, r) in rep.pairs.iter().enumerate() {
        let a: Vec<String> = r.a.iter().map(|x| format!("{x:.6}")).collect();
        println!(
            "{:>4}  {:<40} {:>12.8} {:>3} {:>5}",
            i + 1,
            format!("({})", a.join(", ")),
            r.value,
            r.m,
            r.solution_morse_index
        );
    }
    if let Some(c) = &rep.coefficient_check {
        println!("note: {}", c.note);
    }
    if let Some(n) = &rep.morse_note {
        println!("note: {n}");
    }
}

fn predict(cfg: &RunConfig) -> Result<(PredictionReport, multibranch::report::PredictionOutcome)> {
    let domain = cfg.domain_spec()?;
    let out = run_prediction(&domain, &cfg.target()?, cfg.p, &cfg.search)?;
    Ok((PredictionReport::from(&out), out))
}

fn cmd_predict(cfg: &RunConfig) -> Result<u8> {
    let (rep, _) = predict(cfg)?;
    print_prediction(&rep);
    write_json(&cfg.out_dir, "prediction.json", &envelope("predict", cfg, &rep))?;
    write(&cfg.out_dir, "prediction.csv", &prediction_csv(&rep))?;
    Ok(if rep.exact { 0 } else { 2 })
}

#[derive(Serialize, Deserialize)]
struct VerifyResult {
    prediction: PredictionReport,
    verification: VerificationReport,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

fn print_verification(v: &VerificationReport) {
    println!(
        "grid {:?}, lambda_h = {:.8}, eps = {:?}",
        v.intervals, v.lambda_h, v.epsilons
    );
    println!(
        "{:>4} {:>5} {:>8} {:>8} {:>8} {:>10} {:>10} {:>7} {:>6}",
        "pair", "m+j-1", "morse", "a_err", "phi_ord", "a_ord", "transfer", "unique", "status"
    );
    for b in &v.branches {
        let morse = b.morse_indices.last().copied().flatten().map_or("-".into(), |m| m.to_string());
        let status = if b.passed {
            "PASS"
        } else if b.inconclusive {
            "INCONC"
        } else {
            "FAIL"
        };
        println!(
            "{:>4} {:>5} {:>8} {:>8} {:>8} {:>10} {:>10} {:>7} {:>6}",
            b.pair + 1,
            b.predicted_morse_index,
            morse,
            b.a_relative_error.map_or("-".into(), |e| format!("{e:.2e}")),
            fmt_opt(b.phi_order),
            fmt_opt(b.a_order),
            b.transfer_rel_error.map_or("-".into(), |e| format!("{e:.2e}")),
            b.unique,
            status
        );
        for f in &b.failures {
            println!("       eps = {}: {}", f.epsilon, f.error);
        }
    }
    println!(
        "{}/{} branches verified, {} distinct solutions: {}",
        v.branches.iter().filter(|b| b.passed).count(),
        v.branches.len(),
        v.distinct_solutions,
        if v.passed { "PASS" } else { "MISMATCH" }
    );
}

fn cmd_verify(cfg: &RunConfig) -> Result<u8> {
    let (rep, out) = predict(cfg)?;
    print_prediction(&rep);
    let domain = cfg.domain_spec()?;
    let group = multibranch::spectrum::locate_group(&domain, &cfg.target()?)?.group;
    let dp = build_laplacian(&domain, &group, &cfg.grid(domain.dimension())?)?;
    let vcfg = cfg.verify_config(out.gap);
    let ver = continuation_run(&dp, &out.prediction, &vcfg)?;
    print_verification(&ver);
    for b in &ver.branches {
        write(&cfg.out_dir, &format!("branch_{:02}.dat", b.pair + 1), &diagram_data(b, cfg.p))?;
    }
    let passed = ver.passed;
    write_json(
        &cfg.out_dir,
        "verify.json",
        &envelope(
            "verify",
            cfg,
            VerifyResult {
                prediction: rep,
                verification: ver,
            },
        ),
    )?;
    Ok(if passed { 0 } else { 2 })
}

fn cmd_report(cfg: &RunConfig) -> Result<u8> {
    let dir = &cfg.out_dir;
    let read = |name: &str| -> Result<Option<String>> {
        let path = dir.join(name);
        match std::fs::read_to_string(&path) {
            Ok(t) => Ok(Some(t)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
        }
    };
    let mut code = 0;
    let mut summary = String::from("source,config_hash,j,k,p,pairs,exact,verified,distinct,passed\n");
    let mut found = false;
    if let Some(t) = read("prediction.json")? {
        let env: Envelope<PredictionReport> = serde_json::from_str(&t).context("prediction.json")?;
        let r = &env.result;
        print_prediction(r);
        summary.push_str(&format!(
            "predict,{},{},{},{},{},{},,,{}\n",
            env.config_hash, r.j, r.k, r.p, r.pair_count, r.exact, r.exact
        ));
        if !r.exact {
            code = 2;
        }
        found = true;
    }
    if let Some(t) = read("verify.json")? {
        let env: Envelope<VerifyResult> = serde_json::from_str(&t).context("verify.json")?;
        let v = &env.result.verification;
        print_verification(v);
        summary.push_str(&format!(
            "verify,{},{},{},{},{},{},{},{},{}\n",
            env.config_hash,
            v.j,
            v.k,
            v.p,
            env.result.prediction.pair_count,
            env.result.prediction.exact,
            v.branches.iter().filter(|b| b.passed).count(),
            v.distinct_solutions,
            v.passed
        ));
        if !v.passed {
            code = 2;
        }
        found = true;
    }
    if !found {
        anyhow::bail!("no prediction.json or verify.json in {}", dir.display());
    }
    write(dir, "summary.csv", &summary)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let run = || -> Result<u8> {
        let cfg = cli.opts.resolve()?;
        match cli.command {
            Command::Spectrum => cmd_spectrum(&cfg),
            Command::Predict => cmd_predict(&cfg),
            Command::Verify => cmd_verify(&cfg),
            Command::Report => cmd_report(&cfg),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
