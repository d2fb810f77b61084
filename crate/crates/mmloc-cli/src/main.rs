//! `mmloc`: experiment runner for the localization-aided access analyzer.
//!
//! Every configuration key can be overridden on the command line either as
//! `--set key=value` or directly as `--key=value` / `--key value`, e.g.
//! `--network.lambda_per_km 20`.

mod axis;
mod experiments;
mod output;

use clap::{Args, Parser, Subcommand};
use experiments::{Experiment, Sweeps};
use mmloc::dictionary::build_dictionary;
use mmloc::optimizer::{optimize_beamwidth, BetaOutcome, OptimizationSpec};
use mmloc::Config;
use output::{Manifest, Table};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "mmloc",
    version,
    about = "Localization-aided mmWave access and coverage experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Configuration override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment sweep.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        axes: AxisArgs,
    },
    /// Write the beam dictionary of one cell as CSV.
    DumpDictionary {
        /// Cell extent in meters; the mean cell of the configured density when omitted.
        #[arg(long)]
        cell_m: Option<f64>,
    },
    /// Search the localization split and dictionary size that maximize rate coverage.
    Optimize {
        /// Dictionary sizes to consider, `lo:hi` or a list.
        #[arg(long)]
        k: Option<String>,
    },
    /// Check the configuration and print it in full.
    Validate,
}

#[derive(Debug, Args)]
struct AxisArgs {
    /// BS densities per meter: list, `lin:a:b:n` or `log:a:b:n`.
    #[arg(long)]
    lambda: Option<String>,
    /// Dictionary sizes: `lo:hi` or a list.
    #[arg(long)]
    k: Option<String>,
    /// Localization/data splits: list, `lin:a:b:n` or `log:a:b:n`.
    #[arg(long)]
    beta: Option<String>,
    /// Localization noise powers in dBm.
    #[arg(long)]
    noise_dbm: Option<String>,
    /// Range-accuracy targets in m^2.
    #[arg(long)]
    delta_d: Option<String>,
}

impl AxisArgs {
    fn parse(&self) -> Result<Sweeps, Failure> {
        let real =
            |flag, v: &Option<String>| v.as_deref().map(|s| axis::parse_real(flag, s)).transpose();
        Ok(Sweeps {
            lambda_per_m: real("lambda", &self.lambda)?,
            k: self
                .k
                .as_deref()
                .map(|s| axis::parse_sizes("k", s))
                .transpose()?,
            beta: real("beta", &self.beta)?,
            noise_dbm: real("noise-dbm", &self.noise_dbm)?,
            delta_d_m2: real("delta-d", &self.delta_d)?,
        })
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<mmloc::ConfigError> for Failure {
    fn from(e: mmloc::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<axis::AxisError> for Failure {
    fn from(e: axis::AxisError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<mmloc::Error> for Failure {
    fn from(e: mmloc::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

/// Rewrites `--a.b=v` and `--a.b v` into `--set a.b=v`.
fn expand_dotted(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--" {
            out.push(a);
            out.extend(it.by_ref());
            break;
        }
        let dotted = a
            .strip_prefix("--")
            .filter(|rest| rest.split('=').next().is_some_and(|k| k.contains('.')));
        match dotted {
            Some(rest) if rest.contains('=') => {
                out.push("--set".into());
                out.push(rest.to_string());
            }
            Some(rest) => {
                let key = rest.to_string();
                out.push("--set".into());
                out.push(format!("{key}={}", it.next().unwrap_or_default()));
            }
            None => out.push(a),
        }
    }
    out
}

struct Loaded {
    config: Config,
    overrides: Vec<(String, String)>,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Config::from_text(&text)?
        }
        None => Config::default(),
    };
    let mut overrides = Vec::new();
    for o in &common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("override `{o}` is not `key=value`")))?;
        config.set(k.trim(), v.trim())?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = common.seed {
        config.set("run.seed", &seed.to_string())?;
    }
    if let Some(trials) = common.trials {
        config.set("montecarlo.trials", &trials.to_string())?;
    }
    config.validate()?;
    Ok(Loaded { config, overrides })
}

fn prepare_out(common: &Common) -> Result<PathBuf, Failure> {
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".mmloc-write-test");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| {
            Failure::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
    Ok(dir)
}

struct Run<'a> {
    loaded: &'a Loaded,
    command: &'static str,
    experiment: Option<&'a str>,
    sweeps: serde_json::Value,
    started: Instant,
}

impl Run<'_> {
    fn finish(self, dir: &Path, tables: &[Table]) -> Result<(), Failure> {
        let mut files = Vec::new();
        for t in tables {
            let p = t.write_csv(dir).map_err(io_failure(dir))?;
            files.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
        let config_path = dir.join("config.txt");
        std::fs::write(&config_path, self.loaded.config.to_text())
            .map_err(io_failure(&config_path))?;
        files.push("config.txt".into());
        let manifest = Manifest {
            tool: "mmloc",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            experiment: self.experiment,
            arguments: std::env::args().skip(1).collect(),
            overrides: &self.loaded.overrides,
            seed: self.loaded.config.run.seed,
            trials: self.loaded.config.run.trials,
            threads: rayon::current_num_threads(),
            sweeps: self.sweeps,
            config: self.loaded.config.to_text(),
            files,
            units: output::units(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        manifest.write(dir).map_err(io_failure(dir))?;
        Ok(())
    }
}

fn dictionary_table(config: &Config, cell_m: Option<f64>) -> Result<Table, Failure> {
    let net = &config.network;
    let d_a = cell_m.unwrap_or_else(|| net.mean_cell());
    let dict = build_dictionary(d_a, net.h_b, net.n_max)?;
    let mut table = Table::new("dictionary", &["k", "j", "theta_k", "d_left", "d_right"]);
    for b in dict.entries() {
        table.push(vec![
            b.k.to_string(),
            b.j.to_string(),
            b.theta_k.to_string(),
            b.d_left.to_string(),
            b.d_right.to_string(),
        ]);
    }
    Ok(table)
}

fn optimize_table(config: &Config, k: Option<Vec<usize>>) -> Result<(Table, String), Failure> {
    let spec = OptimizationSpec {
        k_candidates: k.or(config.optimizer.k_candidates.clone()),
        ..config.optimizer.clone()
    };
    let res = optimize_beamwidth(&spec, &config.access, &config.network)?;
    let mut table = Table::new(
        "optimize",
        &[
            "k",
            "theta_u_rad",
            "beta_star",
            "rate_coverage",
            "p_bs",
            "p_ma",
            "feasible_points",
        ],
    );
    for s in &res.per_k {
        let mut row = vec![s.k.to_string(), s.theta_u.to_string()];
        match s.outcome {
            BetaOutcome::Feasible {
                beta,
                objective,
                p_bs,
                p_ma,
            } => row.extend([
                beta.to_string(),
                objective.to_string(),
                p_bs.to_string(),
                p_ma.to_string(),
            ]),
            BetaOutcome::Infeasible => row.extend(["infeasible", "", "", ""].map(String::from)),
        }
        row.push(s.feasible_count().to_string());
        table.push(row);
    }
    let summary = match res.optimum {
        Some(o) => format!(
            "optimum: k={} theta_rad={} theta_u_rad={} beta={} rate_coverage={} feasible_points={}",
            o.k, o.theta, o.theta_u, o.beta, o.objective, res.feasible_set_size
        ),
        None => {
            "optimum: infeasible (no dictionary size and split meet both error caps)".to_string()
        }
    };
    Ok((table, summary))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::Config("`--threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("`--threads`: {e}")))?;
    }
    let common = &cli.common;
    let loaded = load(common)?;
    let started = Instant::now();
    match &cli.command {
        Command::Validate => {
            print!("{}", loaded.config.to_text());
            Ok(())
        }
        Command::DumpDictionary { cell_m } => {
            let table = dictionary_table(&loaded.config, *cell_m)?;
            if common.out.is_none() {
                return table
                    .write_to(std::io::stdout().lock())
                    .map_err(|e| Failure::Io(e.to_string()));
            }
            let dir = prepare_out(common)?;
            let run = Run {
                loaded: &loaded,
                command: "dump-dictionary",
                experiment: None,
                sweeps: serde_json::json!({ "cell_m": cell_m }),
                started,
            };
            run.finish(&dir, &[table])
        }
        Command::Optimize { k } => {
            let k = k
                .as_deref()
                .map(|s| axis::parse_sizes("k", s))
                .transpose()?;
            let dir = prepare_out(common)?;
            let (table, summary) = optimize_table(&loaded.config, k.clone())?;
            println!("{summary}");
            let run = Run {
                loaded: &loaded,
                command: "optimize",
                experiment: None,
                sweeps: serde_json::json!({ "k": k }),
                started,
            };
            run.finish(&dir, &[table])
        }
        Command::Run { experiment, axes } => {
            let sweeps = axes.parse()?.resolve(*experiment, &loaded.config);
            let dir = prepare_out(common)?;
            let tables = experiments::run(*experiment, &loaded.config, &sweeps)?;
            let run = Run {
                loaded: &loaded,
                command: "run",
                experiment: Some(experiment.name()),
                sweeps: serde_json::to_value(&sweeps).map_err(|e| Failure::Io(e.to_string()))?,
                started,
            };
            run.finish(&dir, &tables)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(expand_dotted(std::env::args().collect()));
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Numeric(m) => eprintln!("numeric error: {m}"),
                Failure::Io(m) => eprintln!("i/o error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
