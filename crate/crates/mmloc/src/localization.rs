//! Range and angle-of-arrival error bounds and the beam-selection and
//! misalignment error probabilities they induce.
//!
//! Cell averages integrate first over the user position inside a cell of
//! extent d_a, then over d_a against its exponential law.

use crate::antenna::{angle_information_closed, main_gain, UlaArray};
use crate::config::{NetworkConfig, SPEED_OF_LIGHT};
use crate::dictionary::{full_width, row_edges, BeamEntry};
use crate::error::{domain, numeric, Error, Result};
use crate::geometry::UserGeometry;
use crate::quad::{integrate_pieces, legendre, Tolerance};
use crate::special::q;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationBounds {
    pub sigma_d2: f64,
    pub sigma_psi2: f64,
    pub zeta: f64,
}

/// Localization time within a frame, (1 − β)·T_F.
pub fn observation_time(beta: f64, cfg: &NetworkConfig) -> f64 {
    (1.0 - beta) * cfg.t_frame
}

/// ζ = 2·SNR·B·T_obs/(G_B·G_U): observation energy per unit of antenna gain.
pub fn zeta(d: f64, t_obs: f64, cfg: &NetworkConfig) -> f64 {
    2.0 * cfg.k_pl * cfg.p_t * cfg.attenuation(d) * cfg.bandwidth * t_obs / cfg.est_noise
}

/// Range-error variance for main-lobe gains `gain_b`, `gain_u`.
pub fn distance_variance(d: f64, gain_b: f64, gain_u: f64, t_obs: f64, cfg: &NetworkConfig) -> f64 {
    let b = cfg.bandwidth;
    3.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (zeta(d, t_obs, cfg) * gain_b * gain_u * b * b * PI * PI)
}

/// Angle-error variance with an `elements`-element half-wavelength UE array.
pub fn aoa_variance(
    d: f64,
    psi: f64,
    gain_b: f64,
    elements: usize,
    t_obs: f64,
    cfg: &NetworkConfig,
) -> f64 {
    1.0 / (zeta(d, t_obs, cfg) * gain_b * angle_information_closed(elements, psi))
}

fn check_beta(op: &'static str, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(domain(
            op,
            format!("β = {beta} leaves no localization time"),
        ));
    }
    Ok(())
}

pub fn crlb_distance(
    geom: &UserGeometry,
    theta_b: f64,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    check_beta("crlb_distance", beta)?;
    let gb = main_gain(theta_b, cfg);
    let gu = main_gain(theta_u, cfg);
    Ok(distance_variance(
        geom.d,
        gb,
        gu,
        observation_time(beta, cfg),
        cfg,
    ))
}

pub fn crlb_aoa(
    geom: &UserGeometry,
    theta_b: f64,
    array: &UlaArray,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    check_beta("crlb_aoa", beta)?;
    if array.m < 2 {
        return Err(Error::Unidentifiable { elements: array.m });
    }
    let info = crate::antenna::angle_information(array, geom.psi);
    let z = zeta(geom.d, observation_time(beta, cfg), cfg);
    Ok(1.0 / (z * main_gain(theta_b, cfg) * info))
}

/// Both bounds with the configured UE estimation array.
pub fn bounds(
    geom: &UserGeometry,
    theta_b: f64,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<LocalizationBounds> {
    let array = UlaArray::half_wavelength(cfg.ue_loc_elements, cfg.f_c);
    Ok(LocalizationBounds {
        sigma_d2: crlb_distance(geom, theta_b, theta_u, beta, cfg)?,
        sigma_psi2: crlb_aoa(geom, theta_b, &array, beta, cfg)?,
        zeta: zeta(geom.d, observation_time(beta, cfg), cfg),
    })
}

/// Probability that a Gaussian range estimate leaves the interval [left, right].
pub fn interval_miss(d: f64, sigma_d2: f64, left: f64, right: f64) -> f64 {
    let s = sigma_d2.sqrt();
    if s == 0.0 {
        return if d > left && d < right {
            0.0
        } else if d == left || d == right {
            0.5
        } else {
            1.0
        };
    }
    if !s.is_finite() {
        return 1.0;
    }
    // 1 − Q((L−d)/σ) + Q((R−d)/σ), written as two tails to keep precision
    (q((d - left) / s) + q((right - d) / s)).min(1.0)
}

/// Beam-selection error for a user at `d` served by `beam`.
pub fn p_beam_selection(d: f64, sigma_d2: f64, beam: &BeamEntry) -> f64 {
    interval_miss(d, sigma_d2, beam.d_left, beam.d_right)
}

/// Misalignment error 2·Q(ν/σ_ψ).
pub fn p_misalignment(sigma_psi2: f64, nu: f64) -> f64 {
    let s = sigma_psi2.sqrt();
    if nu == 0.0 {
        return 1.0;
    }
    if s == 0.0 {
        return 0.0;
    }
    (2.0 * q(nu / s)).min(1.0)
}

/// ν for a UE beam of width `theta_u`.
pub fn misalignment_threshold(theta_u: f64, cfg: &NetworkConfig) -> f64 {
    cfg.nu_factor * theta_u
}

/// Average of 2·Q(r·|cos ψ|) over ψ uniform on [0, 2π), where r is ν/σ_ψ at
/// broadside. The angle error grows as 1/|cos ψ| away from broadside.
pub fn mean_misalignment(r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    if !r.is_finite() {
        return 0.0;
    }
    // substitute t = π/2 − ψ so the mass sits near t = 0 for large r
    let f = |t: f64| 2.0 * q(r * t.sin());
    let split = (12.0 / r).min(FRAC_PI_2);
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-10,
        max_intervals: 200,
    };
    let v = integrate_pieces(f, &[0.0, split, FRAC_PI_2], tol).unwrap_or_else(|_| {
        crate::quad::fixed(f, 0.0, split, 64) + crate::quad::fixed(f, split, FRAC_PI_2, 64)
    });
    (v / FRAC_PI_2).clamp(0.0, 1.0)
}

/// Breakpoints for integrals over the cell-size law: the LOS radius, then
/// stretches of growing length out to 20/λ past it, where the remaining
/// mass e^{−40} is below double precision relative to the total.
fn cell_size_breaks(cfg: &NetworkConfig) -> Vec<f64> {
    let scale = 1.0 / cfg.lambda;
    let mut v = vec![SMALL_CELLS_END * cfg.d_s, cfg.d_s];
    for m in [0.5, 1.5, 4.0, 10.0, 20.0] {
        v.push(cfg.d_s + m * scale);
    }
    v
}

/// Small cells get geometrically graded panels 0, d_S·8⁻⁶/4, …, d_S/4:
/// per-cell error rates blow up like d_a^{−1/2} as the cell shrinks.
const SMALL_CELL_LEVELS: i32 = 6;
const SMALL_CELLS_END: f64 = 0.25;

fn small_cell_breaks(cfg: &NetworkConfig) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend(
        (0..=SMALL_CELL_LEVELS)
            .rev()
            .map(|n| SMALL_CELLS_END * cfg.d_s * 8f64.powi(-n)),
    );
    v
}

const SMALL_CELL_NODES: usize = 6;
const CELL_NODES: usize = 16;
const POSITION_NODES: usize = 12;
const LAYER_NODES: usize = 10;
/// Edge layers extend this many range deviations into a beam; Q(8) is below
/// double-precision resolution of the layer integrals.
const LAYER_SIGMAS: f64 = 8.0;

/// Gauss–Legendre sum of `f` over consecutive pieces of `breaks`.
pub(crate) fn gauss_pieces<const D: usize, F>(mut f: F, breaks: &[f64], nodes: usize) -> [f64; D]
where
    F: FnMut(f64) -> [f64; D],
{
    let rule = legendre(nodes);
    let mut total = [0.0; D];
    for w in breaks.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        if !(half > 0.0) {
            continue;
        }
        for &(t, wt) in rule {
            for (acc, v) in total.iter_mut().zip(f(mid + half * t)) {
                *acc += half * wt * v;
            }
        }
    }
    total
}

/// Inserts `cut` into the sorted `breaks` when it falls strictly inside.
fn with_cut(mut breaks: Vec<f64>, cut: f64) -> Vec<f64> {
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    if a < cut && cut < b && !breaks.contains(&cut) {
        breaks.push(cut);
        breaks.sort_by(f64::total_cmp);
    }
    breaks
}

/// Position breaks inside a cell: fixed points d_S/2 and d_S·2ⁿ clipped to
/// the cell, so the layout varies continuously with d_a.
pub(crate) fn position_breaks(d_a: f64, d_s: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut b = 0.5 * d_s;
    while b < d_a {
        edges.push(b);
        b = if b < d_s { d_s } else { 2.0 * b };
    }
    edges.push(d_a);
    edges
}

/// ∫ over the beam [left, right] of `f(x, miss(x))`, where `miss` is the
/// probability that a range estimate with deviation `sigma(x)` leaves the
/// beam. `sigma` must be non-decreasing; a jump at the LOS radius `d_s` is
/// kept off the quadrature nodes.
///
/// When the beam is wide against the deviation only two edge layers carry
/// any miss probability, and each is integrated on its own.
pub(crate) fn beam_miss_integral<const D: usize, S, F>(
    left: f64,
    right: f64,
    d_s: f64,
    sigma: S,
    mut f: F,
) -> [f64; D]
where
    S: Fn(f64) -> f64,
    F: FnMut(f64, f64) -> [f64; D],
{
    let width = right - left;
    if !(width > 0.0) {
        return [0.0; D];
    }
    let s_hi = sigma(right);
    let layer = LAYER_SIGMAS * s_hi;
    if layer < 0.5 * width {
        // σ over the left layer is bounded by its value at the layer's far end
        let s_left = sigma(left + layer);
        let cuts = |s: f64| [0.0, 2.0 * s, LAYER_SIGMAS * s];
        let left_breaks = with_cut(cuts(s_left).iter().map(|z| left + z).collect(), d_s);
        let right_breaks = with_cut(cuts(s_hi).iter().rev().map(|z| right - z).collect(), d_s);
        let a = gauss_pieces(
            |x| f(x, q((x - left) / sigma(x))),
            &left_breaks,
            LAYER_NODES,
        );
        let b = gauss_pieces(
            |x| f(x, q((right - x) / sigma(x))),
            &right_breaks,
            LAYER_NODES,
        );
        let mut out = a;
        for (o, v) in out.iter_mut().zip(b) {
            *o += v;
        }
        return out;
    }
    let n = (width / (4.0 * sigma(left))).ceil().clamp(1.0, 64.0) as usize;
    let breaks = (0..=n)
        .map(|i| left + width * i as f64 / n as f64)
        .collect();
    gauss_pieces(
        |x| {
            let s = sigma(x);
            f(x, interval_miss(x, s * s, left, right))
        },
        &with_cut(breaks, d_s),
        LAYER_NODES,
    )
}

/// E over d_a of a vector-valued `per_cell(d_a)`, d_a drawn from the
/// cell-size law, on a fixed Gauss–Legendre rule.
pub fn cell_average_vec<const D: usize, F>(per_cell: F, cfg: &NetworkConfig) -> Result<[f64; D]>
where
    F: Fn(f64) -> Result<[f64; D]>,
{
    let two_lambda = 2.0 * cfg.lambda;
    let mut failure = None;
    let mut weighted = |d_a: f64| {
        if failure.is_some() {
            return [0.0; D];
        }
        let weight = two_lambda * (-two_lambda * d_a).exp();
        match per_cell(d_a) {
            Ok(v) => v.map(|x| weight * x),
            Err(e) => {
                failure = Some(e);
                [0.0; D]
            }
        }
    };
    let mut total = gauss_pieces(&mut weighted, &small_cell_breaks(cfg), SMALL_CELL_NODES);
    for (t, v) in total.iter_mut().zip(gauss_pieces(
        &mut weighted,
        &cell_size_breaks(cfg),
        CELL_NODES,
    )) {
        *t += v;
    }
    match failure {
        Some(e) => Err(e),
        None if total.iter().all(|v| v.is_finite()) => Ok(total),
        None => Err(numeric(
            "cell_average",
            format!("non-finite average {total:?}"),
        )),
    }
}

/// E over d_a of `per_cell(d_a)`, with d_a drawn from the cell-size law.
pub fn cell_average<F>(per_cell: F, cfg: &NetworkConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    cell_average_vec(|d| per_cell(d).map(|v| [v]), cfg).map(|v| v[0])
}

/// Cell-average beam-selection error for a cell of extent `d_a`.
pub fn beam_selection_error_in_cell(
    d_a: f64,
    k: usize,
    beta: f64,
    theta_u: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if k <= 1 || d_a <= 0.0 {
        return Ok(0.0);
    }
    let t_obs = observation_time(beta, cfg);
    let gb = main_gain(full_width(d_a, cfg.h_b) / k as f64, cfg);
    let gu = main_gain(theta_u, cfg);
    let sigma = |x: f64| distance_variance(x, gb, gu, t_obs, cfg).sqrt();
    let edges = row_edges(d_a, cfg.h_b, k);
    let total: f64 = edges
        .windows(2)
        .map(|w| beam_miss_integral(w[0], w[1], cfg.d_s, sigma, |_, miss| [miss])[0])
        .sum();
    check_finite("avg_beam_selection_error", total / d_a).map(|p| p.clamp(0.0, 1.0))
}

/// Cell-average misalignment error for a cell of extent `d_a`.
pub fn misalignment_error_in_cell(
    d_a: f64,
    k: usize,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if d_a <= 0.0 {
        return Ok(0.0);
    }
    let t_obs = observation_time(beta, cfg);
    let gb = main_gain(full_width(d_a, cfg.h_b) / k as f64, cfg);
    let nu = misalignment_threshold(theta_u, cfg);
    let f = |x: f64| {
        let s2 = aoa_variance(x, 0.0, gb, cfg.ue_loc_elements, t_obs, cfg);
        [mean_misalignment(nu / s2.sqrt())]
    };
    let total = gauss_pieces(f, &position_breaks(d_a, cfg.d_s), POSITION_NODES)[0];
    check_finite("avg_misalignment_error", total / d_a).map(|p| p.clamp(0.0, 1.0))
}

fn check_finite(op: &'static str, v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(numeric(op, "NaN cell average"));
    }
    Ok(v)
}

/// Beam-selection error averaged over cell sizes and user positions.
pub fn avg_beam_selection_error(
    k: usize,
    beta: f64,
    theta_u: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if k == 0 {
        return Err(domain("avg_beam_selection_error", "dictionary size 0"));
    }
    if k == 1 {
        return Ok(0.0);
    }
    cell_average(
        |d_a| beam_selection_error_in_cell(d_a, k, beta, theta_u, cfg),
        cfg,
    )
    .map(|p| p.clamp(0.0, 1.0))
}

/// Misalignment error averaged over cell sizes, user positions and arrival angles.
pub fn avg_misalignment_error(
    k: usize,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if k == 0 {
        return Err(domain("avg_misalignment_error", "dictionary size 0"));
    }
    cell_average(
        |d_a| misalignment_error_in_cell(d_a, k, theta_u, beta, cfg),
        cfg,
    )
    .map(|p| p.clamp(0.0, 1.0))
}
