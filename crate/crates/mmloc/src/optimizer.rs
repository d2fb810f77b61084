//! Joint choice of the dictionary size and the localization/data split.
//!
//! For each dictionary size k the split β is searched on a grid, keeping only
//! values whose cell-averaged beam-selection and misalignment errors stay
//! under their caps, and the best rate coverage wins; the outer stage then
//! picks the best k.

use crate::config::{ConfigError, NetworkConfig};
use crate::coverage::rate_coverage;
use crate::dictionary::full_width;
use crate::error::{domain, Result};
use crate::initial_access::{ue_beam_for_dictionary, AccessPolicy};
use crate::localization::{avg_beam_selection_error, avg_misalignment_error};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    /// Rate threshold r0, bit/s.
    pub rate: f64,
    pub eps_bs: f64,
    pub eps_ma: f64,
    pub beta_step: f64,
    /// Split at which the UE beam of each k is fixed, see [`ue_beam_for_dictionary`].
    pub theta_u_beta: f64,
    /// Dictionary sizes to try; all of 1..=n_max when `None`.
    pub k_candidates: Option<Vec<usize>>,
    /// Fixed UE beamwidth overriding the per-k rule.
    pub theta_u: Option<f64>,
}

impl Default for OptimizationSpec {
    fn default() -> Self {
        Self {
            rate: 100e6,
            eps_bs: 0.1,
            eps_ma: 0.1,
            beta_step: 0.02,
            theta_u_beta: 0.5,
            k_candidates: None,
            theta_u: None,
        }
    }
}

impl OptimizationSpec {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(ConfigError::invalid(
                "optimizer.rate_bps",
                "must be positive",
            ));
        }
        for (key, v) in [
            ("optimizer.eps_bs", self.eps_bs),
            ("optimizer.eps_ma", self.eps_ma),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ConfigError::invalid(key, format!("cap {v} outside (0, 1]")));
            }
        }
        if !(self.beta_step > 0.0 && self.beta_step <= 1.0) {
            return Err(ConfigError::invalid(
                "optimizer.beta_step",
                "must lie in (0, 1]",
            ));
        }
        if !(0.0..1.0).contains(&self.theta_u_beta) {
            return Err(ConfigError::invalid(
                "optimizer.theta_u_beta",
                "must lie in [0, 1)",
            ));
        }
        if matches!(&self.k_candidates, Some(ks) if ks.is_empty() || ks.contains(&0)) {
            return Err(ConfigError::invalid(
                "optimizer.k_candidates",
                "must be non-empty sizes ≥ 1",
            ));
        }
        Ok(())
    }

    /// β grid step, 2·step, … up to 1.
    pub fn beta_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.beta_step + 1e-9).floor() as usize;
        (1..=n)
            .map(|i| (i as f64 * self.beta_step).min(1.0))
            .collect()
    }

    fn candidates(&self, cfg: &NetworkConfig) -> Vec<usize> {
        self.k_candidates
            .clone()
            .unwrap_or_else(|| (1..=cfg.n_max).collect())
    }
}

/// One β of the inner search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPoint {
    pub beta: f64,
    pub p_bs: f64,
    pub p_ma: f64,
    pub feasible: bool,
    /// Rate coverage, evaluated only where feasible.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaOutcome {
    Feasible {
        beta: f64,
        objective: f64,
        p_bs: f64,
        p_ma: f64,
    },
    Infeasible,
}

impl BetaOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            BetaOutcome::Feasible { objective, .. } => Some(*objective),
            BetaOutcome::Infeasible => None,
        }
    }
}

/// Inner search for one k, with its full β scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSearch {
    pub k: usize,
    pub theta_u: f64,
    pub outcome: BetaOutcome,
    pub points: Vec<BetaPoint>,
}

impl BetaSearch {
    pub fn feasible_count(&self) -> usize {
        self.points.iter().filter(|p| p.feasible).count()
    }
}

/// UE beamwidth used for dictionary size `k`.
pub fn theta_u_for(
    k: usize,
    spec: &OptimizationSpec,
    policy: &AccessPolicy,
    cfg: &NetworkConfig,
) -> Result<f64> {
    match spec.theta_u {
        Some(t) => Ok(t),
        None => ue_beam_for_dictionary(k, spec.theta_u_beta, policy, cfg),
    }
}

/// Best β for dictionary size `k`; ties go to the larger β.
///
/// Both error caps tighten monotonically as β grows (less localization time),
/// so the feasible β form a prefix of the grid and the scan stops at the
/// first infeasible point.
pub fn optimize_beta(
    k: usize,
    spec: &OptimizationSpec,
    policy: &AccessPolicy,
    cfg: &NetworkConfig,
) -> Result<BetaSearch> {
    spec.validate()
        .map_err(|e| domain("optimize_beta", e.to_string()))?;
    if k == 0 || k > cfg.n_max {
        return Err(domain(
            "optimize_beta",
            format!("dictionary size {k} outside 1..={}", cfg.n_max),
        ));
    }
    let theta_u = theta_u_for(k, spec, policy, cfg)?;
    let mut points = Vec::new();
    let mut best: Option<BetaPoint> = None;
    for beta in spec.beta_grid() {
        let p_bs = avg_beam_selection_error(k, beta, theta_u, cfg)?;
        let p_ma = if p_bs <= spec.eps_bs {
            avg_misalignment_error(k, theta_u, beta, cfg)?
        } else {
            f64::NAN
        };
        let feasible = p_bs <= spec.eps_bs && p_ma <= spec.eps_ma;
        if !feasible {
            points.push(BetaPoint {
                beta,
                p_bs,
                p_ma,
                feasible,
                objective: None,
            });
            break;
        }
        let objective = rate_coverage(spec.rate, beta, k, theta_u, cfg)?;
        let point = BetaPoint {
            beta,
            p_bs,
            p_ma,
            feasible,
            objective: Some(objective),
        };
        if best.map_or(true, |b| {
            objective >= b.objective.unwrap_or(f64::NEG_INFINITY)
        }) {
            best = Some(point);
        }
        points.push(point);
    }
    let outcome = match best {
        Some(b) => BetaOutcome::Feasible {
            beta: b.beta,
            objective: b.objective.unwrap_or(0.0),
            p_bs: b.p_bs,
            p_ma: b.p_ma,
        },
        None => BetaOutcome::Infeasible,
    };
    Ok(BetaSearch {
        k,
        theta_u,
        outcome,
        points,
    })
}

/// Optimal operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub k: usize,
    /// BS beamwidth of row k in a mean-sized cell, rad.
    pub theta: f64,
    pub theta_u: f64,
    pub beta: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// `None` when no (k, β) satisfies the caps.
    pub optimum: Option<Optimum>,
    /// Number of feasible (k, β) grid points.
    pub feasible_set_size: usize,
    pub per_k: Vec<BetaSearch>,
}

/// Outer search over dictionary sizes; ties go to the smaller k.
pub fn optimize_beamwidth(
    spec: &OptimizationSpec,
    policy: &AccessPolicy,
    cfg: &NetworkConfig,
) -> Result<OptimizationResult> {
    spec.validate()
        .map_err(|e| domain("optimize_beamwidth", e.to_string()))?;
    let per_k = spec
        .candidates(cfg)
        .into_par_iter()
        .map(|k| optimize_beta(k, spec, policy, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut optimum: Option<Optimum> = None;
    for search in &per_k {
        if let BetaOutcome::Feasible {
            beta, objective, ..
        } = search.outcome
        {
            if optimum.map_or(true, |o| objective > o.objective) {
                optimum = Some(Optimum {
                    k: search.k,
                    theta: full_width(cfg.mean_cell(), cfg.h_b) / search.k as f64,
                    theta_u: search.theta_u,
                    beta,
                    objective,
                });
            }
        }
    }
    Ok(OptimizationResult {
        optimum,
        feasible_set_size: per_k.iter().map(BetaSearch::feasible_count).sum(),
        per_k,
    })
}
