//! Localization-driven initial access.
//!
//! The BS and the UE take turns. Each turn spends one pilot symbol under the
//! current beam pair, folds the resulting Fisher information into the running
//! estimate and re-picks its own beam: the BS the thinnest dictionary beam
//! whose selection error stays under a cap, the UE the thinnest receive beam
//! whose misalignment error stays under a cap. Access ends once both the
//! range and the angle variances meet their targets.

use crate::antenna::{beamwidth_to_elements, main_gain};
use crate::config::{ConfigError, NetworkConfig};
use crate::dictionary::{build_dictionary, full_width, BeamDictionary};
use crate::error::{domain, Result};
use crate::localization::{
    aoa_variance, distance_variance, interval_miss, misalignment_threshold, p_misalignment,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Number of UE beamwidth candidates π/2, π/4, …, π/2⁸.
pub const UE_CANDIDATES: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct AccessPolicy {
    /// Cap on the beam-selection error of each BS choice.
    pub delta_bs: f64,
    /// Cap on the misalignment error of each UE choice.
    pub delta_ma: f64,
    /// Target range variance, m².
    pub delta_d: f64,
    /// Target angle variance, rad².
    pub delta_psi: f64,
    pub max_iter: usize,
    /// Pilot symbol length, s.
    pub symbol_duration: f64,
    /// Range variance of the coarse estimate that seeds the loop, m².
    pub initial_sigma_d2: f64,
    pub initial_theta_u: f64,
    /// Reference user position as a fraction of the mean cell extent.
    pub ref_fraction: f64,
    /// Arrival angle of the reference user, rad.
    pub ref_psi: f64,
}

impl Default for AccessPolicy {
    fn default() -> Self {
        Self {
            delta_bs: 0.2,
            delta_ma: 0.1,
            delta_d: 0.1,
            delta_psi: 1.0,
            max_iter: 400,
            symbol_duration: 14.3e-6,
            initial_sigma_d2: 4.0,
            initial_theta_u: FRAC_PI_2,
            ref_fraction: 0.45,
            ref_psi: FRAC_PI_4,
        }
    }
}

impl AccessPolicy {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let positive = [
            ("access.delta_bs", self.delta_bs),
            ("access.delta_ma", self.delta_ma),
            ("access.delta_d_m2", self.delta_d),
            ("access.delta_psi_rad2", self.delta_psi),
            ("access.symbol_s", self.symbol_duration),
            ("access.initial_sigma_d2_m2", self.initial_sigma_d2),
            ("access.initial_theta_u_rad", self.initial_theta_u),
            ("access.ref_fraction", self.ref_fraction),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(
                    key,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if self.initial_theta_u > FRAC_PI_2 {
            return Err(ConfigError::invalid(
                "access.initial_theta_u_rad",
                "must not exceed π/2",
            ));
        }
        if self.ref_fraction > 1.0 {
            return Err(ConfigError::invalid(
                "access.ref_fraction",
                "must lie in (0, 1]",
            ));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::invalid(
                "access.max_iter",
                "must be at least 1",
            ));
        }
        if !self.ref_psi.is_finite() || self.ref_psi.cos() == 0.0 {
            return Err(ConfigError::invalid(
                "access.ref_psi_rad",
                "must not be endfire",
            ));
        }
        Ok(())
    }
}

/// Outcome of [`select_bs_beam`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsChoice {
    pub k: usize,
    pub j: usize,
    /// Set when the estimate fell outside the cell and the single beam was used.
    pub out_of_cell: bool,
}

/// Largest k whose beam around `d_hat` keeps the selection error within `delta_bs`.
pub fn select_bs_beam(dict: &BeamDictionary, d_hat: f64, sigma_d2: f64, delta_bs: f64) -> BsChoice {
    if !(d_hat >= 0.0 && d_hat <= dict.d_a) {
        return BsChoice {
            k: 1,
            j: 1,
            out_of_cell: true,
        };
    }
    for k in (2..=dict.n_max).rev() {
        if let Ok(beam) = dict.lookup(k, d_hat) {
            if interval_miss(d_hat, sigma_d2, beam.d_left, beam.d_right) <= delta_bs {
                return BsChoice {
                    k,
                    j: beam.j,
                    out_of_cell: false,
                };
            }
        }
    }
    BsChoice {
        k: 1,
        j: 1,
        out_of_cell: false,
    }
}

/// UE beamwidth candidates, widest first.
pub fn ue_candidates() -> impl Iterator<Item = f64> {
    (1..=UE_CANDIDATES).map(|i| PI / f64::from(1u32 << i))
}

/// Thinnest candidate whose misalignment error stays within `delta_ma`;
/// π/2 when none does. The BS width does not enter the threshold
/// ν = nu_factor·θ_U but is kept in the signature for callers that pair them.
pub fn select_ue_beam(_theta_k: f64, sigma_psi2: f64, delta_ma: f64, cfg: &NetworkConfig) -> f64 {
    ue_candidates()
        .filter(|&th| p_misalignment(sigma_psi2, misalignment_threshold(th, cfg)) <= delta_ma)
        .last()
        .unwrap_or(FRAC_PI_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bs,
    Ue,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Bs => "BS",
            Side::Ue => "UE",
        }
    }
}

/// One pilot symbol of the refinement loop and the choices made after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessStep {
    pub side: Side,
    pub k: usize,
    pub theta_u: f64,
    pub sigma_d2: f64,
    pub sigma_psi2: f64,
    pub symbols: usize,
    pub cum_symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    AccuracyMet,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessTrace {
    pub steps: Vec<AccessStep>,
    pub total_symbols: usize,
    pub total_delay: f64,
    pub terminated: Termination,
    /// Raised when a stochastic range estimate left the cell.
    pub out_of_cell: bool,
}

impl AccessTrace {
    pub fn final_k(&self) -> usize {
        self.steps.last().map_or(1, |s| s.k)
    }

    pub fn final_theta_u(&self) -> f64 {
        self.steps.last().map_or(FRAC_PI_2, |s| s.theta_u)
    }
}

/// How beam choices see the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessMode {
    /// Choices use the true position; only the variances evolve.
    BoundTracking,
    /// Choices use Gaussian estimates drawn at the current variances.
    Stochastic { seed: u64 },
}

/// Runs the refinement loop for a user at `d`, angle `psi`, in a cell of extent `d_a`.
pub fn run_initial_access(
    d: f64,
    psi: f64,
    d_a: f64,
    policy: &AccessPolicy,
    cfg: &NetworkConfig,
    mode: AccessMode,
) -> Result<AccessTrace> {
    if !(d >= 0.0 && d <= d_a) {
        return Err(domain(
            "run_initial_access",
            format!("user at {d} m outside cell of {d_a} m"),
        ));
    }
    policy
        .validate()
        .map_err(|e| domain("run_initial_access", e.to_string()))?;
    let dict = build_dictionary(d_a, cfg.h_b, cfg.n_max)?;
    let theta_1 = dict.theta_1();
    let t = policy.symbol_duration;
    let cos2 = psi.cos().powi(2);
    let mut rng = match mode {
        AccessMode::Stochastic { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        AccessMode::BoundTracking => None,
    };
    let mut out_of_cell = false;
    let mut pick_k = |sigma_d2: f64, rng: &mut Option<ChaCha8Rng>| {
        let d_hat = match rng {
            Some(r) => {
                let z: f64 = StandardNormal.sample(r);
                d + sigma_d2.sqrt() * z
            }
            None => d,
        };
        let choice = select_bs_beam(&dict, d_hat, sigma_d2, policy.delta_bs);
        out_of_cell |= choice.out_of_cell;
        choice.k
    };

    let mut info_d = 1.0 / policy.initial_sigma_d2;
    let mut info_psi = 0.0;
    let mut theta_u = policy.initial_theta_u;
    let mut k = pick_k(policy.initial_sigma_d2, &mut rng);
    let mut steps = Vec::new();
    let mut terminated = Termination::MaxIter;
    let done = |sd2: f64, sp2: f64| sd2 <= policy.delta_d && sp2 <= policy.delta_psi;

    while steps.len() < policy.max_iter {
        let gb = main_gain(theta_1 / k as f64, cfg);
        info_d += 1.0 / distance_variance(d, gb, main_gain(theta_u, cfg), t, cfg);
        let sigma_d2 = 1.0 / info_d;
        k = pick_k(sigma_d2, &mut rng);
        let sigma_psi2 = 1.0 / info_psi;
        steps.push(AccessStep {
            side: Side::Bs,
            k,
            theta_u,
            sigma_d2,
            sigma_psi2,
            symbols: 1,
            cum_symbols: steps.len() + 1,
        });
        if done(sigma_d2, sigma_psi2) {
            terminated = Termination::AccuracyMet;
            break;
        }
        if steps.len() >= policy.max_iter {
            break;
        }

        let gb = main_gain(theta_1 / k as f64, cfg);
        info_psi += cos2 / aoa_variance(d, 0.0, gb, cfg.ue_loc_elements, t, cfg);
        let sigma_psi2 = 1.0 / info_psi;
        theta_u = select_ue_beam(theta_1 / k as f64, sigma_psi2, policy.delta_ma, cfg);
        steps.push(AccessStep {
            side: Side::Ue,
            k,
            theta_u,
            sigma_d2,
            sigma_psi2,
            symbols: 1,
            cum_symbols: steps.len() + 1,
        });
        if done(sigma_d2, sigma_psi2) {
            terminated = Termination::AccuracyMet;
            break;
        }
    }
    let total_symbols = steps.len();
    Ok(AccessTrace {
        steps,
        total_symbols,
        total_delay: total_symbols as f64 * t,
        terminated,
        out_of_cell,
    })
}

/// Sweep over every BS × UE beam pair: ⌈2π/θ_B⌉·⌈2π/θ_U⌉ symbols.
pub fn delay_exhaustive(theta_b: f64, theta_u: f64, symbol_duration: f64) -> Result<f64> {
    let pairs = beamwidth_to_elements(theta_b)? * beamwidth_to_elements(theta_u)?;
    Ok(pairs as f64 * symbol_duration)
}

/// Symbols of the bisection search: two per halving, first down the BS
/// dictionary to `k`, then from π/2 down to `theta_u` at the UE.
pub fn iterative_symbols(k: usize, theta_u: f64) -> usize {
    let bs = (k.max(1) as f64).log2().ceil() as usize;
    let ue = (FRAC_PI_2 / theta_u).log2().round().max(0.0) as usize;
    2 * (bs + ue)
}

pub fn delay_iterative(k: usize, theta_u: f64, symbol_duration: f64) -> f64 {
    iterative_symbols(k, theta_u) as f64 * symbol_duration
}

/// Reference user of a network: a mean-sized cell with the user at
/// `ref_fraction` of its extent, kept inside the LOS ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceUser {
    pub d_a: f64,
    pub d: f64,
    pub psi: f64,
}

pub fn reference_user(policy: &AccessPolicy, cfg: &NetworkConfig) -> ReferenceUser {
    let d_a = cfg.mean_cell();
    ReferenceUser {
        d_a,
        d: (policy.ref_fraction * d_a).min(cfg.d_s),
        psi: policy.ref_psi,
    }
}

/// UE beam that access would settle on for dictionary size `k` when the
/// reference user has localized over a service-phase split `beta`.
pub fn ue_beam_for_dictionary(
    k: usize,
    beta: f64,
    policy: &AccessPolicy,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if k == 0 || !(0.0..1.0).contains(&beta) {
        return Err(domain(
            "ue_beam_for_dictionary",
            format!("k = {k}, β = {beta}"),
        ));
    }
    let r = reference_user(policy, cfg);
    let theta_k = full_width(r.d_a, cfg.h_b) / k as f64;
    let t_obs = (1.0 - beta) * cfg.t_frame;
    let s2 = aoa_variance(
        r.d,
        r.psi,
        main_gain(theta_k, cfg),
        cfg.ue_loc_elements,
        t_obs,
        cfg,
    );
    Ok(select_ue_beam(theta_k, s2, policy.delta_ma, cfg))
}

/// Delays of the three access schemes for the reference user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayComparison {
    pub steps: usize,
    pub k: usize,
    pub theta_u: f64,
    pub proposed: f64,
    pub iterative: f64,
    pub exhaustive: f64,
}

impl DelayComparison {
    /// Fractional delay saved against the exhaustive sweep.
    pub fn reduction(&self) -> f64 {
        1.0 - self.proposed / self.exhaustive
    }
}

pub fn compare_delays(policy: &AccessPolicy, cfg: &NetworkConfig) -> Result<DelayComparison> {
    let r = reference_user(policy, cfg);
    let trace = run_initial_access(r.d, r.psi, r.d_a, policy, cfg, AccessMode::BoundTracking)?;
    let k = trace.final_k();
    let theta_u = trace.final_theta_u();
    let theta_k = full_width(r.d_a, cfg.h_b) / k as f64;
    Ok(DelayComparison {
        steps: trace.total_symbols,
        k,
        theta_u,
        proposed: trace.total_delay,
        iterative: delay_iterative(k, theta_u, policy.symbol_duration),
        exhaustive: delay_exhaustive(theta_k, theta_u, policy.symbol_duration)?,
    })
}
