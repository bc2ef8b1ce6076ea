use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use quatlag::output::{metrics_json, write_csv};
use quatlag::scenario::PRESET_NAMES;
use quatlag::verify::{verify, VerifyOptions, MIN_VERIFY_SAMPLES};
use quatlag::{run, Error, Metrics, ScenarioConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "quatlag", version, about = "Quaternion Lagrangian attitude tracking simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; writes a CSV and a JSON metrics sidecar.
    Run {
        #[command(flatten)]
        source: Source,
        /// CSV path; the metrics go next to it as `<stem>.metrics.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the metrics JSON to stdout.
        #[arg(long)]
        json: bool,
    },
    /// Run the numeric property suites of the model.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        /// Flip the sign of C inside the suites (checks the checker).
        #[arg(long, hide = true)]
        corrupt_c_sign: bool,
    },
    /// Evaluate the sufficient gain condition of an adaptive controller.
    CheckGains {
        #[command(flatten)]
        source: Source,
        /// Samples for the bound-constant estimators.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        json: bool,
        /// Exit 1 when the condition fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run a scenario over a list of parameter values and seeds.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Scalar config key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated JSON scalars.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Runs per value; run i uses seed base + i.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Compiled-in scenario name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), _) => ScenarioConfig::preset(name).map_err(|e| {
                format!("{e} (known presets: {})", PRESET_NAMES.join(", "))
            })?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                ScenarioConfig::from_json(&text).map_err(|e| e.to_string())?
            }
            (None, None) => return Err("one of --preset or --config is required".into()),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.metrics.json"))
}

fn write_run(out: &quatlag::RunOutput, csv: &Path) -> std::io::Result<()> {
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(std::io::BufWriter::new(fs::File::create(csv)?), &out.records)?;
    fs::write(sidecar_path(csv), metrics_json(out))
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::NumericalDivergence { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn cmd_run(source: &Source, out: Option<&Path>, json: bool) -> ExitCode {
    let cfg = match source.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let result = match run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(error_code(&e), e),
    };
    if let Some(path) = out {
        if let Err(e) = write_run(&result, path) {
            return fail(EXIT_FAIL, format!("writing {}: {e}", path.display()));
        }
    }
    if json || out.is_none() {
        println!("{}", metrics_json(&result));
    } else {
        let m = &result.metrics;
        println!(
            "energy_final={:.6} convergence_time={} jump_count={} unwinding={}",
            m.energy_final,
            m.convergence_time.map_or("none".into(), |t| format!("{t:.3}")),
            m.jump_count,
            m.unwinding_flag
        );
    }
    ExitCode::SUCCESS
}

fn cmd_verify(samples: usize, seed: u64, json: bool, corrupt: bool) -> ExitCode {
    if samples < MIN_VERIFY_SAMPLES {
        return fail(EXIT_CONFIG, format!("--samples must be >= {MIN_VERIFY_SAMPLES}"));
    }
    let report = match verify(&VerifyOptions {
        samples,
        seed,
        corrupt_c_sign: corrupt,
        ..Default::default()
    }) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for r in &report.rows {
            println!(
                "{:<4} {:<36} n={:<6} max={:.3e} thr={:.1e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.samples,
                r.max_residual,
                r.threshold
            );
        }
        println!("{} in {:.2}s", if report.pass { "all passed" } else { "FAILED" }, report.seconds);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_check_gains(source: &Source, samples: usize, json: bool, strict: bool) -> ExitCode {
    let cfg = match source.load() {
        Ok(c) => c,
        // kv <= 0 is reported as a failed condition below, not a config error
        Err(e) if e.contains("kv must be positive") => {
            match source_unchecked(source) {
                Some(c) => c,
                None => return fail(EXIT_CONFIG, e),
            }
        }
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let report = match cfg.check_gains(samples, cfg.seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let b = &report.bounds;
        println!("controller: {}", report.controller);
        println!(
            "bounds: m_bar={:.4} m_lower={:.4} k_M={:.4} k_c1={:.4} k_c2={:.4} k_h1={:.4} k_h2={:.4} rho={:.4}",
            b.m_bar, b.m_lower, b.k_m, b.k_c1, b.k_c2, b.k_h1, b.k_h2, b.rho
        );
        for (k, v) in &report.check.constants {
            println!("{k} = {v:.6}");
        }
        let c = &report.check;
        println!(
            "{}: value={:.6} threshold={:.6} margin={:.6}",
            if c.pass { "PASS" } else { "FAIL" },
            c.value,
            c.threshold,
            c.margin
        );
    }
    if strict && !report.check.pass {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}

/// Loads a config without the run-time `kv > 0` check.
fn source_unchecked(source: &Source) -> Option<ScenarioConfig> {
    let mut cfg: ScenarioConfig = match (&source.preset, &source.config) {
        (Some(name), _) => ScenarioConfig::preset(name).ok()?,
        (None, Some(path)) => serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?,
        _ => return None,
    };
    if let Some(seed) = source.seed {
        cfg.seed = seed;
    }
    Some(cfg)
}

#[derive(Serialize)]
struct Aggregate {
    value: serde_json::Value,
    runs: usize,
    diverged: usize,
    energy_mean: f64,
    energy_std: f64,
    convergence_mean: Option<f64>,
    convergence_std: Option<f64>,
    converged: usize,
    jump_count_mean: f64,
    jump_count_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn aggregate(value: serde_json::Value, results: &[Option<Metrics>]) -> Aggregate {
    let ok: Vec<&Metrics> = results.iter().flatten().collect();
    let energy: Vec<f64> = ok.iter().map(|m| m.energy_final).collect();
    let conv: Vec<f64> = ok.iter().filter_map(|m| m.convergence_time).collect();
    let jumps: Vec<f64> = ok.iter().map(|m| m.jump_count as f64).collect();
    let (energy_mean, energy_std) = mean_std(&energy);
    let (jump_count_mean, jump_count_std) = mean_std(&jumps);
    let (cm, cs) = mean_std(&conv);
    Aggregate {
        value,
        runs: results.len(),
        diverged: results.len() - ok.len(),
        energy_mean,
        energy_std,
        convergence_mean: (!conv.is_empty()).then_some(cm),
        convergence_std: (!conv.is_empty()).then_some(cs),
        converged: conv.len(),
        jump_count_mean,
        jump_count_std,
    }
}

fn thread_pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("QUATLAG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

fn file_label(v: &serde_json::Value) -> String {
    v.to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn cmd_sweep(source: &Source, param: &str, values: &[String], seeds: u64, out: &Path, json: bool) -> ExitCode {
    let base = match source.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if seeds == 0 {
        return fail(EXIT_CONFIG, "--seeds must be >= 1");
    }
    let mut configs = Vec::new();
    for raw in values {
        let value: serde_json::Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().into()));
        let cfg = match base.with_param(param, &value) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_CONFIG, e),
        };
        configs.push((value, cfg));
    }
    if let Err(e) = fs::create_dir_all(out) {
        return fail(EXIT_FAIL, format!("creating {}: {e}", out.display()));
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|v| (0..seeds).map(move |i| (v, i)))
        .collect();
    let results: Vec<Result<Option<Metrics>, String>> = thread_pool().install(|| {
        jobs.par_iter()
            .map(|&(v, i)| {
                let (value, cfg) = &configs[v];
                let mut cfg = cfg.clone();
                cfg.seed = base.seed.wrapping_add(i);
                match run(&cfg) {
                    Ok(r) => {
                        let name = format!("{param}={}_seed{}.csv", file_label(value), cfg.seed);
                        write_run(&r, &out.join(name)).map_err(|e| e.to_string())?;
                        Ok(Some(r.metrics))
                    }
                    Err(Error::NumericalDivergence { .. }) => Ok(None),
                    Err(e) => Err(e.to_string()),
                }
            })
            .collect()
    });
    let mut per_value: Vec<Vec<Option<Metrics>>> = vec![Vec::new(); configs.len()];
    for (&(v, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(m) => per_value[v].push(m),
            Err(e) => return fail(EXIT_FAIL, e),
        }
    }
    let table: Vec<Aggregate> = configs
        .iter()
        .zip(&per_value)
        .map(|((value, _), ms)| aggregate(value.clone(), ms))
        .collect();

    let mut csv = String::from(
        "value,runs,diverged,energy_mean,energy_std,convergence_mean,convergence_std,converged,jump_count_mean,jump_count_std\n",
    );
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
    for a in &table {
        csv.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{},{},{},{:.16e},{:.16e}\n",
            a.value, a.runs, a.diverged, a.energy_mean, a.energy_std,
            opt(a.convergence_mean), opt(a.convergence_std), a.converged,
            a.jump_count_mean, a.jump_count_std
        ));
    }
    let table_json = serde_json::to_string_pretty(&table).expect("aggregate serializes");
    if let Err(e) = fs::write(out.join("aggregate.csv"), &csv)
        .and_then(|_| fs::write(out.join("aggregate.json"), &table_json))
    {
        return fail(EXIT_FAIL, e);
    }
    if json {
        println!("{table_json}");
    } else {
        print!("{csv}");
    }
    if table.iter().any(|a| a.diverged > 0) {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match &cli.cmd {
        Command::Run { source, out, json } => cmd_run(source, out.as_deref(), *json),
        Command::Verify {
            samples,
            seed,
            json,
            corrupt_c_sign,
        } => cmd_verify(*samples, *seed, *json, *corrupt_c_sign),
        Command::CheckGains {
            source,
            samples,
            json,
            strict,
        } => cmd_check_gains(source, *samples, *json, *strict),
        Command::Sweep {
            source,
            param,
            values,
            seeds,
            out,
            json,
        } => cmd_sweep(source, param, values, *seeds, out, *json),
    }
}
