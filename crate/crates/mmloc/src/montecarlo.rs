//! Monte Carlo reference for the analytical coverage and error expressions.
//!
//! Every trial draws its own cell extent, user position, arrival angle,
//! estimation errors, fading and interferer field from an independent RNG
//! stream keyed by (seed, trial), so results do not depend on how trials are
//! spread over threads. Counts are integers and sum exactly.

use crate::antenna::main_gain;
use crate::config::NetworkConfig;
use crate::coverage::{branch_gains, Breakdown, CoverageQuery, CoverageResult, ErrorModel, Method};
use crate::dictionary::{full_width, interval_of, row_edges};
use crate::error::{domain, Result};
use crate::geometry::{link_state, UserGeometry};
use crate::localization::{
    aoa_variance, distance_variance, misalignment_threshold, observation_time,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

const CHUNK: u64 = 2048;

fn stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Half-width of the simulated road around the user.
pub fn window_half_width(cfg: &NetworkConfig) -> f64 {
    (10.0 / cfg.lambda).max(cfg.d_s + 500.0)
}

/// Sums `per_trial` over `trials` streams in fixed-size chunks.
fn run_trials<const D: usize, F>(trials: u64, seed: u64, per_trial: F) -> [u64; D]
where
    F: Fn(&mut ChaCha8Rng) -> [bool; D] + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = [0u64; D];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let hits = per_trial(&mut stream(seed, t));
                for (n, h) in counts.iter_mut().zip(hits) {
                    *n += u64::from(h);
                }
            }
            counts
        })
        .reduce(
            || [0u64; D],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

fn proportion(count: u64, trials: u64) -> (f64, f64) {
    let p = count as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

fn gamma(shape: u32) -> Gamma<f64> {
    let n = f64::from(shape);
    Gamma::new(n, 1.0 / n).expect("positive Nakagami shape")
}

/// Fading draws for the LOS and NLOS shapes.
struct Fading {
    los: Gamma<f64>,
    nlos: Gamma<f64>,
}

impl Fading {
    fn new(cfg: &NetworkConfig) -> Self {
        Self {
            los: gamma(cfg.n_los),
            nlos: gamma(cfg.n_nlos),
        }
    }

    fn draw(&self, d: f64, cfg: &NetworkConfig, rng: &mut ChaCha8Rng) -> f64 {
        if d <= cfg.d_s {
            self.los.sample(rng)
        } else {
            self.nlos.sample(rng)
        }
    }
}

/// Interference power (relative to P_t·K) from BSs farther than `x` on both
/// sides of the user, out to the window edge.
fn interference(x: f64, cfg: &NetworkConfig, fading: &Fading, rng: &mut ChaCha8Rng) -> f64 {
    let w = window_half_width(cfg);
    if x >= w {
        return 0.0;
    }
    let g2 = cfg.sidelobe_gain().powi(2);
    let mean = 2.0 * cfg.lambda * (w - x);
    let count = if mean > 0.0 {
        Poisson::new(mean).map_or(0.0, |p| p.sample(rng)) as u64
    } else {
        0
    };
    (0..count)
        .map(|_| {
            let y = rng.gen_range(x..w);
            g2 * fading.draw(y, cfg, rng) * cfg.attenuation(y)
        })
        .sum()
}

/// Which part of the cell the user is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Uniform over beam `j` of the query's row.
    Beam,
    /// Uniform over the whole cell.
    Cell,
}

#[derive(Debug, Clone, Copy)]
enum Branch {
    Aligned,
    Misaligned,
    WrongBeam,
}

/// Estimation outcome for a user at `x` with arrival angle `psi`.
#[allow(clippy::too_many_arguments)]
fn draw_branch(
    x: f64,
    psi: f64,
    edges: &[f64],
    gb: f64,
    gu: f64,
    nu: f64,
    t_obs: f64,
    cfg: &NetworkConfig,
    rng: &mut ChaCha8Rng,
) -> (bool, bool) {
    let k = edges.len() - 1;
    let wrong = if k >= 2 {
        let sd = distance_variance(x, gb, gu, t_obs, cfg).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        let d_hat = x + sd * z;
        interval_of(edges, d_hat) != interval_of(edges, x)
    } else {
        false
    };
    let sp = aoa_variance(x, psi, gb, cfg.ue_loc_elements, t_obs, cfg).sqrt();
    let z: f64 = StandardNormal.sample(rng);
    let err = sp * z;
    let misaligned = !(err.abs() <= nu);
    (wrong, misaligned)
}

/// Empirical coverage for `query`; with [`Scope::Cell`] the beam index is ignored.
pub fn simulate_coverage(
    query: &CoverageQuery,
    scope: Scope,
    errors: ErrorModel,
    cfg: &NetworkConfig,
    trials: u64,
    seed: u64,
) -> Result<CoverageResult> {
    query.validate()?;
    cfg.validate()
        .map_err(|e| domain("simulate_coverage", e.to_string()))?;
    if trials == 0 {
        return Err(domain("simulate_coverage", "at least one trial is needed"));
    }
    let cell_law =
        Exp::new(2.0 * cfg.lambda).map_err(|e| domain("simulate_coverage", e.to_string()))?;
    let fading = Fading::new(cfg);
    let t_obs = observation_time(query.beta, cfg);
    let nu = misalignment_threshold(query.theta_u, cfg);
    let noise = cfg.noise_power() / (cfg.p_t * cfg.k_pl);
    let counts = run_trials::<3, _>(trials, seed, |rng| {
        let d_a: f64 = cell_law.sample(rng);
        let edges = row_edges(d_a, cfg.h_b, query.k);
        let (lo, hi) = match scope {
            Scope::Beam => (edges[query.j - 1], edges[query.j]),
            Scope::Cell => (0.0, d_a),
        };
        let x = lo + (hi - lo) * rng.gen::<f64>();
        let psi = 2.0 * PI * rng.gen::<f64>();
        let theta_b = full_width(d_a, cfg.h_b) / query.k as f64;
        let gb = main_gain(theta_b, cfg);
        let gu = main_gain(query.theta_u, cfg);
        let branch = match errors {
            ErrorModel::ErrorFree => Branch::Aligned,
            ErrorModel::Localized => match draw_branch(x, psi, &edges, gb, gu, nu, t_obs, cfg, rng)
            {
                (true, _) => Branch::WrongBeam,
                (false, true) => Branch::Misaligned,
                (false, false) => Branch::Aligned,
            },
        };
        let gains = branch_gains(theta_b, query.theta_u, cfg);
        let gain = match branch {
            Branch::Aligned => gains[0],
            Branch::Misaligned => gains[1],
            Branch::WrongBeam => gains[2],
        };
        let signal = gain * fading.draw(x, cfg, rng) * cfg.attenuation(x);
        let covered = signal >= query.threshold * (interference(x, cfg, &fading, rng) + noise);
        [
            covered && matches!(branch, Branch::Aligned),
            covered && matches!(branch, Branch::Misaligned),
            covered && matches!(branch, Branch::WrongBeam),
        ]
    });
    let hits: u64 = counts.iter().sum();
    let (p, stderr) = proportion(hits, trials);
    let n = trials as f64;
    Ok(CoverageResult {
        probability: p,
        method: Method::MonteCarlo,
        breakdown: Breakdown {
            aligned: counts[0] as f64 / n,
            misaligned: counts[1] as f64 / n,
            wrong_beam: counts[2] as f64 / n,
        },
        stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimates {
    pub p_bs: f64,
    pub p_ma: f64,
    pub stderr_bs: f64,
    pub stderr_ma: f64,
}

/// Empirical beam-selection and misalignment frequencies over random cells,
/// positions and arrival angles.
pub fn simulate_error_probabilities(
    k: usize,
    beta: f64,
    theta_u: f64,
    cfg: &NetworkConfig,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimates> {
    if k == 0 || trials == 0 || !(0.0..=1.0).contains(&beta) {
        return Err(domain(
            "simulate_error_probabilities",
            format!("k = {k}, β = {beta}, trials = {trials}"),
        ));
    }
    let cell_law = Exp::new(2.0 * cfg.lambda)
        .map_err(|e| domain("simulate_error_probabilities", e.to_string()))?;
    let t_obs = observation_time(beta, cfg);
    let nu = misalignment_threshold(theta_u, cfg);
    let gu = main_gain(theta_u, cfg);
    let counts = run_trials::<2, _>(trials, seed, |rng| {
        let d_a: f64 = cell_law.sample(rng);
        let x = d_a * rng.gen::<f64>();
        let psi = 2.0 * PI * rng.gen::<f64>();
        let edges = row_edges(d_a, cfg.h_b, k);
        let gb = main_gain(full_width(d_a, cfg.h_b) / k as f64, cfg);
        let (wrong, misaligned) = draw_branch(x, psi, &edges, gb, gu, nu, t_obs, cfg, rng);
        [wrong, misaligned]
    });
    let (p_bs, stderr_bs) = proportion(counts[0], trials);
    let (p_ma, stderr_ma) = proportion(counts[1], trials);
    Ok(ErrorEstimates {
        p_bs,
        p_ma,
        stderr_bs,
        stderr_ma,
    })
}

/// Empirical E[exp(−s·I)] for interference beyond `serving_d`, with its
/// standard error; the reference for the analytical interference exponent.
pub fn simulate_interference_laplace(
    serving_d: f64,
    s: f64,
    cfg: &NetworkConfig,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(serving_d >= 0.0) || trials < 2 {
        return Err(domain(
            "simulate_interference_laplace",
            format!("d = {serving_d}, trials = {trials}"),
        ));
    }
    let fading = Fading::new(cfg);
    let chunks = trials.div_ceil(CHUNK);
    let (sum, sum2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = (0.0, 0.0);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = stream(seed, t);
                let v = (-s * interference(serving_d, cfg, &fading, &mut rng)).exp();
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// One draw of the network around a user at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub seed: u64,
    /// Sorted BS ground coordinates on [−W, W].
    pub bs_positions: Vec<f64>,
    pub serving_index: Option<usize>,
    pub user: Option<UserGeometry>,
    /// Power fading |f|² per BS.
    pub fading: Vec<f64>,
}

/// Draws a PPP deployment on [−W, W] and attaches the user to the nearest BS.
pub fn sample_realization(cfg: &NetworkConfig, seed: u64) -> Result<Realization> {
    let w = window_half_width(cfg);
    let mut rng = stream(seed, u64::MAX);
    let count = Poisson::new(2.0 * cfg.lambda * w)
        .map_err(|e| domain("sample_realization", e.to_string()))?
        .sample(&mut rng) as usize;
    let mut bs_positions: Vec<f64> = (0..count).map(|_| rng.gen_range(-w..w)).collect();
    bs_positions.sort_by(f64::total_cmp);
    let fading_law = Fading::new(cfg);
    let fading = bs_positions
        .iter()
        .map(|&y| fading_law.draw(y.abs(), cfg, &mut rng))
        .collect();
    let serving_index = bs_positions
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i);
    let user = match serving_index {
        Some(i) => {
            let o = 2.0 * PI * rng.gen::<f64>();
            Some(UserGeometry::new(bs_positions[i].abs(), o, cfg.h_b)?)
        }
        None => None,
    };
    Ok(Realization {
        seed,
        bs_positions,
        serving_index,
        user,
        fading,
    })
}

/// Link state of the serving BS of a realization.
pub fn serving_state(r: &Realization, cfg: &NetworkConfig) -> Option<crate::geometry::LinkState> {
    r.user.map(|u| link_state(u.d, cfg))
}
