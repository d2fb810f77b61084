//! The sweep families behind `run`, each producing one or more tables.

use clap::ValueEnum;
use mmloc::config::{dbm_to_watts, linear_to_db};
use mmloc::coverage::{overall_coverage, rate_coverage, rate_threshold, CoverageQuery, ErrorModel};
use mmloc::initial_access::{compare_delays, reference_user, run_initial_access, AccessMode};
use mmloc::localization::{avg_beam_selection_error, avg_misalignment_error};
use mmloc::montecarlo::{simulate_coverage, Scope};
use mmloc::optimizer::{optimize_beamwidth, theta_u_for, OptimizationSpec};
use mmloc::{Config, NetworkConfig, Result};
use rayon::prelude::*;

use crate::output::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    AccessDelay,
    AccessResolution,
    ErrorVsDictionary,
    RateVsBeta,
    RateVsPbs,
    OptimalBetaMap,
    OptimalKMap,
    ValidateAnalytical,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::AccessDelay => "access-delay",
            Experiment::AccessResolution => "access-resolution",
            Experiment::ErrorVsDictionary => "error-vs-dictionary",
            Experiment::RateVsBeta => "rate-vs-beta",
            Experiment::RateVsPbs => "rate-vs-pbs",
            Experiment::OptimalBetaMap => "optimal-beta-map",
            Experiment::OptimalKMap => "optimal-k-map",
            Experiment::ValidateAnalytical => "validate-analytical",
        }
    }
}

/// Axis values after defaults are filled in; `None` axes are unused.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct Sweeps {
    pub lambda_per_m: Option<Vec<f64>>,
    pub k: Option<Vec<usize>>,
    pub beta: Option<Vec<f64>>,
    pub noise_dbm: Option<Vec<f64>>,
    pub delta_d_m2: Option<Vec<f64>>,
}

fn lin(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn geom(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
        .collect()
}

impl Sweeps {
    /// Fills the axes an experiment reads with their defaults and drops the rest.
    pub fn resolve(self, exp: Experiment, cfg: &Config) -> Sweeps {
        let lambda = cfg.network.lambda;
        let here = |v: Option<Vec<f64>>, d: Vec<f64>| Some(v.unwrap_or(d));
        let sizes = |v: Option<Vec<usize>>, d: Vec<usize>| Some(v.unwrap_or(d));
        let rate_betas = lin(0.02, 0.98, 49);
        match exp {
            Experiment::AccessDelay => Sweeps {
                lambda_per_m: here(self.lambda_per_m, geom(0.005, 0.2, 12)),
                delta_d_m2: here(self.delta_d_m2, vec![cfg.access.delta_d]),
                ..Sweeps::default()
            },
            Experiment::AccessResolution => Sweeps {
                lambda_per_m: here(self.lambda_per_m, vec![0.005, 0.01, 0.05]),
                delta_d_m2: here(self.delta_d_m2, vec![cfg.access.delta_d]),
                ..Sweeps::default()
            },
            Experiment::ErrorVsDictionary => Sweeps {
                lambda_per_m: here(self.lambda_per_m, vec![lambda]),
                k: sizes(self.k, (1..=cfg.network.n_max).collect()),
                beta: here(self.beta, vec![0.5]),
                ..Sweeps::default()
            },
            Experiment::RateVsBeta | Experiment::RateVsPbs => Sweeps {
                lambda_per_m: here(self.lambda_per_m, vec![lambda]),
                k: sizes(self.k, vec![4, 16]),
                beta: here(self.beta, rate_betas),
                ..Sweeps::default()
            },
            Experiment::OptimalBetaMap | Experiment::OptimalKMap => Sweeps {
                lambda_per_m: here(self.lambda_per_m, vec![0.005, 0.02, 0.1]),
                noise_dbm: here(self.noise_dbm, vec![-20.0, 10.0]),
                k: self.k,
                ..Sweeps::default()
            },
            Experiment::ValidateAnalytical => Sweeps {
                lambda_per_m: here(self.lambda_per_m, vec![0.005, 0.02, 0.1]),
                k: sizes(self.k, vec![4, 16]),
                beta: here(self.beta, vec![0.5, 0.9]),
                ..Sweeps::default()
            },
        }
    }
}

fn with_lambda(cfg: &NetworkConfig, lambda: f64) -> NetworkConfig {
    NetworkConfig {
        lambda,
        ..cfg.clone()
    }
}

fn axis<T: Clone>(v: &Option<Vec<T>>) -> Vec<T> {
    v.clone().unwrap_or_default()
}

/// Runs `exp` on the resolved sweeps.
pub fn run(exp: Experiment, cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    match exp {
        Experiment::AccessDelay => access_delay(cfg, sweeps),
        Experiment::AccessResolution => access_resolution(cfg, sweeps),
        Experiment::ErrorVsDictionary => error_vs_dictionary(cfg, sweeps),
        Experiment::RateVsBeta | Experiment::RateVsPbs => rate_sweep(exp, cfg, sweeps),
        Experiment::OptimalBetaMap | Experiment::OptimalKMap => optimum_map(exp, cfg, sweeps),
        Experiment::ValidateAnalytical => validate_analytical(cfg, sweeps),
    }
}

fn access_delay(cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "access-delay",
        &[
            "delta_d_m2",
            "lambda_per_m",
            "symbols",
            "k",
            "theta_u_rad",
            "proposed_ms",
            "iterative_ms",
            "exhaustive_ms",
            "reduction",
        ],
    );
    for delta_d in axis(&sweeps.delta_d_m2) {
        let policy = mmloc::initial_access::AccessPolicy {
            delta_d,
            ..cfg.access.clone()
        };
        let rows = axis(&sweeps.lambda_per_m)
            .par_iter()
            .map(|&l| compare_delays(&policy, &with_lambda(&cfg.network, l)).map(|d| (l, d)))
            .collect::<Result<Vec<_>>>()?;
        for (l, d) in rows {
            table.push(vec![
                delta_d.to_string(),
                l.to_string(),
                d.steps.to_string(),
                d.k.to_string(),
                d.theta_u.to_string(),
                (d.proposed * 1e3).to_string(),
                (d.iterative * 1e3).to_string(),
                (d.exhaustive * 1e3).to_string(),
                d.reduction().to_string(),
            ]);
        }
    }
    Ok(vec![table])
}

fn access_resolution(cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "access-resolution",
        &[
            "delta_d_m2",
            "lambda_per_m",
            "step",
            "side",
            "k",
            "theta_u_rad",
            "sigma_d2_m2",
            "sigma_psi2_rad2",
            "symbols",
            "elapsed_ms",
        ],
    );
    for delta_d in axis(&sweeps.delta_d_m2) {
        let policy = mmloc::initial_access::AccessPolicy {
            delta_d,
            ..cfg.access.clone()
        };
        for l in axis(&sweeps.lambda_per_m) {
            let net = with_lambda(&cfg.network, l);
            let r = reference_user(&policy, &net);
            let trace =
                run_initial_access(r.d, r.psi, r.d_a, &policy, &net, AccessMode::BoundTracking)?;
            for (i, s) in trace.steps.iter().enumerate() {
                table.push(vec![
                    delta_d.to_string(),
                    l.to_string(),
                    (i + 1).to_string(),
                    s.side.label().to_string(),
                    s.k.to_string(),
                    s.theta_u.to_string(),
                    s.sigma_d2.to_string(),
                    s.sigma_psi2.to_string(),
                    s.cum_symbols.to_string(),
                    (s.cum_symbols as f64 * policy.symbol_duration * 1e3).to_string(),
                ]);
            }
        }
    }
    Ok(vec![table])
}

fn error_vs_dictionary(cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "error-vs-dictionary",
        &["lambda_per_m", "beta", "k", "theta_u_rad", "p_bs", "p_ma"],
    );
    for l in axis(&sweeps.lambda_per_m) {
        let net = with_lambda(&cfg.network, l);
        for beta in axis(&sweeps.beta) {
            let rows = axis(&sweeps.k)
                .par_iter()
                .map(|&k| {
                    let th = theta_u_for(k, &cfg.optimizer, &cfg.access, &net)?;
                    let p_bs = avg_beam_selection_error(k, beta, th, &net)?;
                    let p_ma = avg_misalignment_error(k, th, beta, &net)?;
                    Ok([k as f64, th, p_bs, p_ma])
                })
                .collect::<Result<Vec<_>>>()?;
            for [k, th, p_bs, p_ma] in rows {
                table.push(vec![
                    l.to_string(),
                    beta.to_string(),
                    k.to_string(),
                    th.to_string(),
                    p_bs.to_string(),
                    p_ma.to_string(),
                ]);
            }
        }
    }
    Ok(vec![table])
}

fn rate_sweep(exp: Experiment, cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let r0 = cfg.optimizer.rate;
    let with_errors = exp == Experiment::RateVsPbs;
    let header: &[&str] = if with_errors {
        &[
            "lambda_per_m",
            "rate_bps",
            "k",
            "theta_u_rad",
            "beta",
            "p_bs",
            "p_ma",
            "rate_coverage",
        ]
    } else {
        &[
            "lambda_per_m",
            "rate_bps",
            "k",
            "theta_u_rad",
            "beta",
            "sinr_threshold_db",
            "rate_coverage",
        ]
    };
    let mut table = Table::new(exp.name(), header);
    for l in axis(&sweeps.lambda_per_m) {
        let net = with_lambda(&cfg.network, l);
        for k in axis(&sweeps.k) {
            let th = theta_u_for(k, &cfg.optimizer, &cfg.access, &net)?;
            let rows = axis(&sweeps.beta)
                .par_iter()
                .map(|&beta| {
                    let rate = rate_coverage(r0, beta, k, th, &net)?;
                    let mut row = vec![
                        l.to_string(),
                        r0.to_string(),
                        k.to_string(),
                        th.to_string(),
                        beta.to_string(),
                    ];
                    if with_errors {
                        row.push(avg_beam_selection_error(k, beta, th, &net)?.to_string());
                        row.push(avg_misalignment_error(k, th, beta, &net)?.to_string());
                    } else {
                        let t = rate_threshold(r0, beta, &net).map_or(f64::INFINITY, linear_to_db);
                        row.push(t.to_string());
                    }
                    row.push(rate.to_string());
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            rows.into_iter().for_each(|r| table.push(r));
        }
    }
    Ok(vec![table])
}

fn optimum_map(exp: Experiment, cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let mut table = Table::new(
        exp.name(),
        &[
            "lambda_per_m",
            "noise_dbm",
            "noise_dbw",
            "k_star",
            "theta_u_rad",
            "beta_star",
            "rate_coverage",
            "feasible_points",
        ],
    );
    let spec = OptimizationSpec {
        k_candidates: sweeps.k.clone(),
        ..cfg.optimizer.clone()
    };
    for l in axis(&sweeps.lambda_per_m) {
        for noise in axis(&sweeps.noise_dbm) {
            let net = NetworkConfig {
                est_noise: dbm_to_watts(noise),
                ..with_lambda(&cfg.network, l)
            };
            let res = optimize_beamwidth(&spec, &cfg.access, &net)?;
            let mut row = vec![l.to_string(), noise.to_string(), (noise - 30.0).to_string()];
            match res.optimum {
                Some(o) => row.extend([
                    o.k.to_string(),
                    o.theta_u.to_string(),
                    o.beta.to_string(),
                    o.objective.to_string(),
                ]),
                None => row.extend(["infeasible", "", "", ""].map(String::from)),
            }
            row.push(res.feasible_set_size.to_string());
            table.push(row);
        }
    }
    Ok(vec![table])
}

fn validate_analytical(cfg: &Config, sweeps: &Sweeps) -> Result<Vec<Table>> {
    let threshold = cfg.run.threshold;
    let mut summary = Table::new(
        "validate-analytical",
        &["query", "analytical", "montecarlo", "stderr", "pass"],
    );
    let mut coverage = Table::new(
        "coverage",
        &[
            "lambda",
            "k",
            "j",
            "theta_u",
            "beta",
            "threshold",
            "probability",
            "method",
            "stderr",
        ],
    );
    let mut grid = Vec::new();
    for l in axis(&sweeps.lambda_per_m) {
        for k in axis(&sweeps.k) {
            for beta in axis(&sweeps.beta) {
                grid.push((l, k, beta));
            }
        }
    }
    for (l, k, beta) in grid {
        let net = with_lambda(&cfg.network, l);
        let th = theta_u_for(k, &cfg.optimizer, &cfg.access, &net)?;
        let a = overall_coverage(threshold, k, th, beta, &net)?;
        let q = CoverageQuery {
            threshold,
            j: 1,
            k,
            theta_u: th,
            beta,
        };
        let m = simulate_coverage(
            &q,
            Scope::Cell,
            ErrorModel::Localized,
            &net,
            cfg.run.trials as u64,
            cfg.run.seed,
        )?;
        let gap = (a.probability - m.probability).abs();
        let pass = gap <= f64::max(0.02, 3.0 * m.stderr);
        summary.push(vec![
            format!(
                "lambda={l};k={k};beta={beta};threshold_db={}",
                linear_to_db(threshold)
            ),
            a.probability.to_string(),
            m.probability.to_string(),
            m.stderr.to_string(),
            pass.to_string(),
        ]);
        for r in [a, m] {
            coverage.push(vec![
                l.to_string(),
                k.to_string(),
                "all".to_string(),
                th.to_string(),
                beta.to_string(),
                threshold.to_string(),
                r.probability.to_string(),
                r.method.label().to_string(),
                r.stderr.to_string(),
            ]);
        }
    }
    Ok(vec![summary, coverage])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_only_the_axes_in_use() {
        let cfg = Config::default();
        let s = Sweeps::default().resolve(Experiment::AccessDelay, &cfg);
        let l = s.lambda_per_m.unwrap();
        assert_eq!(l.len(), 12);
        assert!((l[0] - 0.005).abs() < 1e-15 && (l[11] - 0.2).abs() < 1e-15);
        assert!(s.k.is_none() && s.beta.is_none());
        let s = Sweeps {
            k: Some(vec![3]),
            ..Sweeps::default()
        }
        .resolve(Experiment::ErrorVsDictionary, &cfg);
        assert_eq!(s.k, Some(vec![3]));
        assert_eq!(s.beta, Some(vec![0.5]));
    }
}
