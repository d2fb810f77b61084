//! Downlink SINR and rate coverage.
//!
//! Interferers form a 1-D PPP of density λ on both sides of the user, each
//! outside the serving distance, with Nakagami-m power fading and
//! sidelobe-to-sidelobe gain g². For a serving power S and threshold T,
//!
//! ```text
//! P(SINR ≥ T) = E[ P(h ≥ T·(I + σ²)/S) ],   h ~ Gamma(N, 1/N)
//! ```
//!
//! which expands either exactly, as Σ_{m<N} (−s)^m/m!·L^{(m)}(s) with
//! s = N·T/S and L the Laplace transform of noise plus interference, or with
//! the binomial approximation 1 − (1 − e^{−ηu})^N of the Gamma CDF,
//! η = N·(N!)^{−1/N}. In both, the interference enters through the exponent
//!
//! ```text
//! A(s) = 2λ ∫_x^∞ 1 − (1 + s·g²·q(y)^{−α(y)}/N(y))^{−N(y)} dy,   q(y)² = y² + h_B²
//! ```
//!
//! Three gain branches are mixed per position: correct beam and aligned UE
//! (γ_B·γ_U), correct beam but misaligned UE (γ_B·g), wrong beam (g·g).

use crate::antenna::main_gain;
use crate::config::{CcdfForm, NetworkConfig, MAX_NAKAGAMI};
use crate::dictionary::{full_width, row_edges};
use crate::error::{domain, numeric, Result};
use crate::geometry::link_state;
use crate::localization::{
    aoa_variance, beam_miss_integral, cell_average_vec, distance_variance, gauss_pieces,
    mean_misalignment, misalignment_threshold, observation_time, position_breaks,
};
use crate::quad::legendre;
use crate::special::{binomial, factorial};
use std::sync::OnceLock;

const LOS_NODES: usize = 24;
const TAIL_NODES: usize = 16;
const PANEL_NODES: usize = 12;
const MAX_ORDER: usize = MAX_NAKAGAMI as usize;
/// Beyond this noise exponent every branch is numerically zero.
const NOISE_CUTOFF: f64 = 800.0;

/// Which branches of the coverage mixture are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorModel {
    /// Beam-selection and misalignment errors from the localization bounds.
    Localized,
    /// Perfect beams, as after an exhaustive search.
    ErrorFree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageQuery {
    /// SINR threshold, linear.
    pub threshold: f64,
    pub j: usize,
    pub k: usize,
    pub theta_u: f64,
    pub beta: f64,
}

impl CoverageQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(domain(
                "coverage",
                format!("threshold {} must be positive", self.threshold),
            ));
        }
        if self.k == 0 || self.j == 0 || self.j > self.k {
            return Err(domain("coverage", format!("beam {} of {}", self.j, self.k)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(domain(
                "coverage",
                format!("β = {} outside (0, 1]", self.beta),
            ));
        }
        if !(self.theta_u > 0.0 && self.theta_u <= 2.0 * std::f64::consts::PI) {
            return Err(domain("coverage", format!("UE beamwidth {}", self.theta_u)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytical,
    MonteCarlo,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Analytical => "analytical",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

/// Weighted branch contributions; they sum to the coverage probability.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Breakdown {
    pub aligned: f64,
    pub misaligned: f64,
    pub wrong_beam: f64,
}

impl Breakdown {
    fn from_array(v: [f64; 3]) -> Self {
        Self {
            aligned: v[0].clamp(0.0, 1.0),
            misaligned: v[1].clamp(0.0, 1.0),
            wrong_beam: v[2].clamp(0.0, 1.0),
        }
    }

    pub fn total(&self) -> f64 {
        self.aligned + self.misaligned + self.wrong_beam
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    pub probability: f64,
    pub method: Method,
    pub breakdown: Breakdown,
    pub stderr: f64,
}

impl CoverageResult {
    fn analytical(breakdown: Breakdown) -> Self {
        Self {
            probability: breakdown.total().clamp(0.0, 1.0),
            method: Method::Analytical,
            breakdown,
            stderr: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Interferer {
    /// Quadrature weight including 2λ and the change of variables.
    weight: f64,
    /// g²·q^{−α} at the node.
    gain: f64,
    shape: u32,
}

/// Quadrature nodes for interferers beyond the serving distance `x`: a
/// Gauss–Legendre rule over the LOS stretch [x, d_S] and the NLOS tail
/// [max(x, d_S), ∞) mapped to u = y₀/y ∈ (0, 1].
fn interferers(x: f64, cfg: &NetworkConfig) -> Vec<Interferer> {
    let g2 = cfg.sidelobe_gain().powi(2);
    let two_lambda = 2.0 * cfg.lambda;
    let h2 = cfg.h_b * cfg.h_b;
    let mut out = Vec::with_capacity(LOS_NODES + 2 * TAIL_NODES);
    if x < cfg.d_s {
        let (mid, half) = (0.5 * (cfg.d_s + x), 0.5 * (cfg.d_s - x));
        for &(t, w) in legendre(LOS_NODES) {
            let y = mid + half * t;
            out.push(Interferer {
                weight: two_lambda * half * w,
                gain: g2 * (y * y + h2).powf(-0.5 * cfg.alpha_los),
                shape: cfg.n_los,
            });
        }
    }
    let y0 = x.max(cfg.d_s);
    for (a, b) in [(0.0, 0.5), (0.5, 1.0)] {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for &(t, w) in legendre(TAIL_NODES) {
            let u: f64 = mid + half * t;
            let y = y0 / u;
            out.push(Interferer {
                weight: two_lambda * half * w * y0 / (u * u),
                gain: g2 * (y * y + h2).powf(-0.5 * cfg.alpha_nlos),
                shape: cfg.n_nlos,
            });
        }
    }
    out
}

fn exponent(s: f64, nodes: &[Interferer]) -> f64 {
    nodes
        .iter()
        .map(|n| {
            let shape = f64::from(n.shape);
            n.weight * (1.0 - (1.0 + s * n.gain / shape).powi(-(n.shape as i32)))
        })
        .sum()
}

/// Interference exponent A(s) for a user served from ground distance `serving_d`.
pub fn laplace_interference(serving_d: f64, s: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(serving_d >= 0.0) || !(s >= 0.0) {
        return Err(domain(
            "laplace_interference",
            format!("serving distance {serving_d}, s = {s}"),
        ));
    }
    let a = exponent(s, &interferers(serving_d, cfg));
    if !a.is_finite() {
        return Err(numeric(
            "laplace_interference",
            format!("exponent {a} at d = {serving_d}"),
        ));
    }
    Ok(a)
}

/// P(SINR ≥ T) for a serving link of normalized strength `t_over_s` = T/S
/// (S the serving gain times attenuation), Nakagami shape `shape`.
fn ccdf(t_over_s: f64, shape: u32, noise: f64, nodes: &[Interferer], form: CcdfForm) -> f64 {
    let n = shape as usize;
    let v = match form {
        CcdfForm::Exact => {
            let s = f64::from(shape) * t_over_s;
            if s * noise > NOISE_CUTOFF {
                return 0.0;
            }
            // scaled derivatives b_j = s^j·|B^{(j)}(s)| of B = s·σ² + A
            let mut b = [0.0; MAX_ORDER];
            for node in nodes {
                let shape_y = f64::from(node.shape);
                let v = s * node.gain / shape_y;
                let base = 1.0 / (1.0 + v);
                let mut term = base.powi(node.shape as i32);
                b[0] += node.weight * (1.0 - term);
                let mut rising = 1.0;
                for (j, bj) in b.iter_mut().enumerate().take(n).skip(1) {
                    rising *= shape_y + (j - 1) as f64;
                    term *= v * base;
                    *bj += node.weight * rising * term;
                }
            }
            if n > 1 {
                b[1] += s * noise;
            }
            let mut d = [0.0; MAX_ORDER];
            d[0] = (-s * noise - b[0]).exp();
            let mut total = d[0];
            for m in 1..n {
                let mut acc = 0.0;
                for i in 0..m {
                    acc += binomial((m - 1) as u32, i as u32) * b[i + 1] * d[m - 1 - i];
                }
                d[m] = acc;
                total += acc / factorial(m as u32);
            }
            total
        }
        CcdfForm::Alzer => {
            let eta = f64::from(shape) * factorial(shape).powf(-1.0 / f64::from(shape));
            (1..=shape)
                .map(|i| {
                    let s = f64::from(i) * eta * t_over_s;
                    if s * noise > NOISE_CUTOFF {
                        return 0.0;
                    }
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    sign * binomial(shape, i) * (-s * noise - exponent(s, nodes)).exp()
                })
                .sum()
        }
    };
    v.clamp(0.0, 1.0)
}

/// Noise power relative to transmit power and intercept.
fn normalized_noise(cfg: &NetworkConfig) -> f64 {
    cfg.noise_power() / (cfg.p_t * cfg.k_pl)
}

/// P(SINR ≥ `threshold`) for a user at ground distance `x` whose link has
/// total antenna gain `gain`, with the configured interference field.
pub fn link_coverage(x: f64, gain: f64, threshold: f64, cfg: &NetworkConfig) -> f64 {
    branch_coverages(x, [gain], threshold, cfg)[0]
}

fn branch_coverages<const B: usize>(
    x: f64,
    gains: [f64; B],
    threshold: f64,
    cfg: &NetworkConfig,
) -> [f64; B] {
    let shape = cfg.nakagami(link_state(x, cfg));
    let att = cfg.attenuation(x);
    let noise = normalized_noise(cfg);
    // skip the interference field when even the strongest branch is noise-dead
    let strongest = gains.iter().cloned().fold(0.0, f64::max);
    if f64::from(shape) * threshold / (strongest * att) * noise > NOISE_CUTOFF {
        return [0.0; B];
    }
    let nodes = interferers(x, cfg);
    gains.map(|g| ccdf(threshold / (g * att), shape, noise, &nodes, cfg.ccdf))
}

/// Branch coverages at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTerms {
    pub aligned: f64,
    pub misaligned: f64,
    pub wrong_beam: f64,
}

/// Branch gains (γ_B·γ_U, γ_B·g, g²) for BS width `theta_b` and UE width `theta_u`.
pub fn branch_gains(theta_b: f64, theta_u: f64, cfg: &NetworkConfig) -> [f64; 3] {
    let gb = main_gain(theta_b, cfg);
    let g = cfg.sidelobe_gain();
    [gb * main_gain(theta_u, cfg), gb * g, g * g]
}

pub fn branch_terms(
    x: f64,
    theta_b: f64,
    theta_u: f64,
    threshold: f64,
    cfg: &NetworkConfig,
) -> BranchTerms {
    let [a, m, w] = branch_coverages(x, branch_gains(theta_b, theta_u, cfg), threshold, cfg);
    BranchTerms {
        aligned: a,
        misaligned: m,
        wrong_beam: w,
    }
}

fn barycentric_weights() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        let nodes = legendre(PANEL_NODES);
        let raw: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(i, &(xi, _))| {
                1.0 / nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &(xj, _))| xi - xj)
                    .product::<f64>()
            })
            .collect();
        let scale = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        raw.into_iter().map(|v| v / scale).collect()
    })
}

/// Smooth per-position quantities of one cell sampled on Gauss–Legendre
/// panels: the three branch coverages and the misalignment probability.
struct Panel {
    a: f64,
    b: f64,
    values: [[f64; 4]; PANEL_NODES],
}

impl Panel {
    fn eval(&self, x: f64) -> [f64; 4] {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let weights = barycentric_weights();
        let mut num = [0.0; 4];
        let mut den = 0.0;
        for (i, &(node, _)) in legendre(PANEL_NODES).iter().enumerate() {
            let diff = t - node;
            if diff == 0.0 {
                return self.values[i];
            }
            let c = weights[i] / diff;
            den += c;
            for (n, v) in num.iter_mut().zip(self.values[i]) {
                *n += c * v;
            }
        }
        num.map(|n| n / den)
    }
}

/// Everything needed to integrate coverage over one cell.
struct CellModel<'a> {
    cfg: &'a NetworkConfig,
    d_a: f64,
    k: usize,
    gb: f64,
    gu: f64,
    t_obs: f64,
    errors: ErrorModel,
    panels: Vec<Panel>,
}

impl<'a> CellModel<'a> {
    fn new(
        d_a: f64,
        k: usize,
        theta_u: f64,
        beta: f64,
        threshold: f64,
        errors: ErrorModel,
        cfg: &'a NetworkConfig,
    ) -> Self {
        let theta_b = full_width(d_a, cfg.h_b) / k as f64;
        let gains = branch_gains(theta_b, theta_u, cfg);
        let gb = main_gain(theta_b, cfg);
        let gu = main_gain(theta_u, cfg);
        let t_obs = observation_time(beta, cfg);
        let nu = misalignment_threshold(theta_u, cfg);
        let edges = position_breaks(d_a, cfg.d_s);
        let panels = edges
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                let mut values = [[0.0; 4]; PANEL_NODES];
                for (v, &(t, _)) in values.iter_mut().zip(legendre(PANEL_NODES)) {
                    let x = mid + half * t;
                    let [t0, tma, tbs] = branch_coverages(x, gains, threshold, cfg);
                    let pma = match errors {
                        ErrorModel::ErrorFree => 0.0,
                        ErrorModel::Localized => {
                            let s2 = aoa_variance(x, 0.0, gb, cfg.ue_loc_elements, t_obs, cfg);
                            mean_misalignment(nu / s2.sqrt())
                        }
                    };
                    *v = [t0, tma, tbs, pma];
                }
                Panel { a, b, values }
            })
            .collect();
        Self {
            cfg,
            d_a,
            k,
            gb,
            gu,
            t_obs,
            errors,
            panels,
        }
    }

    fn sigma_d(&self, x: f64) -> f64 {
        distance_variance(x, self.gb, self.gu, self.t_obs, self.cfg).sqrt()
    }

    /// Sampled values at `x`, interpolated on the panel holding it.
    fn sample(&self, x: f64) -> [f64; 4] {
        let i = self
            .panels
            .partition_point(|p| p.b < x)
            .min(self.panels.len() - 1);
        self.panels[i].eval(x)
    }

    /// Error-free mixture (1 − P_MA)·T₀ + P_MA·T_MA over [left, right].
    /// Exact on the panel interpolants, whose products stay within the
    /// degree the panel rule integrates.
    fn smooth_range(&self, left: f64, right: f64) -> [f64; 3] {
        if left == 0.0 && right == self.d_a {
            return self.smooth_terms();
        }
        let mut out = [0.0; 3];
        for p in &self.panels {
            let (a, b) = (p.a.max(left), p.b.min(right));
            if b <= a {
                continue;
            }
            let v = gauss_pieces(
                |x| {
                    let [t0, tma, _, pma] = p.eval(x);
                    [(1.0 - pma) * t0, pma * tma, 0.0]
                },
                &[a, b],
                PANEL_NODES,
            );
            for c in 0..3 {
                out[c] += v[c];
            }
        }
        out
    }

    /// Change in the branch integrals over beam [left, right] caused by
    /// beam-selection errors: mass moves from the first two branches to the
    /// wrong-beam branch with weight P_BS(x).
    fn selection_correction(&self, left: f64, right: f64) -> [f64; 3] {
        if self.k == 1 || self.errors == ErrorModel::ErrorFree || right <= left {
            return [0.0; 3];
        }
        beam_miss_integral(
            left,
            right,
            self.cfg.d_s,
            |x| self.sigma_d(x),
            |x, pbs| {
                let [t0, tma, tbs, pma] = self.sample(x);
                [-pbs * (1.0 - pma) * t0, -pbs * pma * tma, pbs * tbs]
            },
        )
    }

    /// Branch contributions integrated over [left, right] (not normalized).
    fn beam_terms(&self, left: f64, right: f64) -> [f64; 3] {
        let smooth = self.smooth_range(left, right);
        let corr = self.selection_correction(left, right);
        [0, 1, 2].map(|c| smooth[c] + corr[c])
    }

    /// Whole-cell contributions without beam-selection errors, on the panel rule.
    fn smooth_terms(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for p in &self.panels {
            let half = 0.5 * (p.b - p.a);
            for (&(_, w), v) in legendre(PANEL_NODES).iter().zip(&p.values) {
                let [t0, tma, _, pma] = *v;
                out[0] += half * w * (1.0 - pma) * t0;
                out[1] += half * w * pma * tma;
            }
        }
        out
    }

    /// Branch contributions over the whole cell, divided by d_a.
    fn cell_terms(&self) -> [f64; 3] {
        let mut total = self.smooth_terms();
        if self.k > 1 && self.errors == ErrorModel::Localized {
            let edges = row_edges(self.d_a, self.cfg.h_b, self.k);
            for w in edges.windows(2) {
                let v = self.selection_correction(w[0], w[1]);
                for c in 0..3 {
                    total[c] += v[c];
                }
            }
        }
        total.map(|v| v / self.d_a)
    }
}

fn average_cells<F>(per_cell: F, cfg: &NetworkConfig) -> Result<[f64; 3]>
where
    F: Fn(f64) -> Result<[f64; 3]>,
{
    cell_average_vec(per_cell, cfg)
}

fn check_config(cfg: &NetworkConfig) -> Result<()> {
    cfg.validate()
        .map_err(|e| domain("coverage", e.to_string()))
}

/// Coverage of a user in beam `j` of row `k`, averaged over cell sizes.
pub fn coverage_probability(query: &CoverageQuery, cfg: &NetworkConfig) -> Result<CoverageResult> {
    beam_coverage(query, ErrorModel::Localized, cfg)
}

/// As [`coverage_probability`] with both estimation errors removed.
pub fn coverage_probability_exhaustive(
    query: &CoverageQuery,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    beam_coverage(query, ErrorModel::ErrorFree, cfg)
}

fn beam_coverage(
    query: &CoverageQuery,
    errors: ErrorModel,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    query.validate()?;
    check_config(cfg)?;
    let v = average_cells(
        |d_a| {
            let cell = CellModel::new(
                d_a,
                query.k,
                query.theta_u,
                query.beta,
                query.threshold,
                errors,
                cfg,
            );
            let edges = row_edges(d_a, cfg.h_b, query.k);
            let (l, r) = (edges[query.j - 1], edges[query.j]);
            if r <= l {
                return Ok([0.0; 3]);
            }
            Ok(cell.beam_terms(l, r).map(|v| v / (r - l)))
        },
        cfg,
    )?;
    Ok(CoverageResult::analytical(Breakdown::from_array(v)))
}

/// Coverage of a single cell of extent `d_a`, user uniform over it.
pub fn cell_coverage(
    d_a: f64,
    threshold: f64,
    k: usize,
    theta_u: f64,
    beta: f64,
    errors: ErrorModel,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    CoverageQuery {
        threshold,
        j: 1,
        k,
        theta_u,
        beta,
    }
    .validate()?;
    if !(d_a > 0.0) {
        return Err(domain("cell_coverage", format!("cell extent {d_a}")));
    }
    let cell = CellModel::new(d_a, k, theta_u, beta, threshold, errors, cfg);
    Ok(CoverageResult::analytical(Breakdown::from_array(
        cell.cell_terms(),
    )))
}

/// Coverage over all beams of row `k` and all cell sizes.
pub fn overall_coverage(
    threshold: f64,
    k: usize,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    overall_with(threshold, k, theta_u, beta, ErrorModel::Localized, cfg)
}

pub fn overall_coverage_exhaustive(
    threshold: f64,
    k: usize,
    theta_u: f64,
    beta: f64,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    overall_with(threshold, k, theta_u, beta, ErrorModel::ErrorFree, cfg)
}

fn overall_with(
    threshold: f64,
    k: usize,
    theta_u: f64,
    beta: f64,
    errors: ErrorModel,
    cfg: &NetworkConfig,
) -> Result<CoverageResult> {
    CoverageQuery {
        threshold,
        j: 1,
        k,
        theta_u,
        beta,
    }
    .validate()?;
    check_config(cfg)?;
    let v = average_cells(
        |d_a| Ok(CellModel::new(d_a, k, theta_u, beta, threshold, errors, cfg).cell_terms()),
        cfg,
    )?;
    Ok(CoverageResult::analytical(Breakdown::from_array(v)))
}

/// SINR threshold 2^{r0·(T_I + T_F)/(β·T_F·B)} − 1 that delivers rate `r0`;
/// `None` when it overflows.
pub fn rate_threshold(r0: f64, beta: f64, cfg: &NetworkConfig) -> Option<f64> {
    let exponent = r0 * (cfg.t_init + cfg.t_frame) / (beta * cfg.t_frame * cfg.bandwidth);
    let t = exponent.exp2() - 1.0;
    t.is_finite().then_some(t)
}

/// Probability that the effective rate reaches `r0`.
pub fn rate_coverage(
    r0: f64,
    beta: f64,
    k: usize,
    theta_u: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if !(r0 > 0.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(domain("rate_coverage", format!("r0 = {r0}, β = {beta}")));
    }
    match rate_threshold(r0, beta, cfg) {
        Some(t) => Ok(overall_coverage(t, k, theta_u, beta, cfg)?.probability),
        None => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::db_to_linear;
    use crate::localization::interval_miss;
    use crate::quad::{integrate, Tolerance};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    /// Direct adaptive evaluation of the interference exponent.
    fn exponent_oracle(x: f64, s: f64, c: &NetworkConfig) -> f64 {
        let g2 = c.sidelobe_gain().powi(2);
        let f = |y: f64| {
            let (alpha, n) = if y <= c.d_s {
                (c.alpha_los, c.n_los)
            } else {
                (c.alpha_nlos, c.n_nlos)
            };
            let n = f64::from(n);
            let gain = g2 * (y * y + c.h_b * c.h_b).powf(-0.5 * alpha);
            1.0 - (1.0 + s * gain / n).powf(-n)
        };
        let tol = Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        };
        let mut v = 0.0;
        if x < c.d_s {
            v += integrate(f, x, c.d_s, tol).unwrap();
        }
        let y0 = x.max(c.d_s);
        v += integrate(|u: f64| f(y0 / u) * y0 / (u * u), 0.0, 1.0, tol).unwrap();
        2.0 * c.lambda * v
    }

    #[test]
    fn exponent_matches_adaptive_quadrature() {
        let mut c = cfg();
        c.lambda = 0.05;
        let g2 = c.sidelobe_gain().powi(2);
        for x in [0.0, 5.0, 19.0, 40.0, 300.0] {
            // s spans thresholds from far below to far above a sidelobe-only serving link
            for ratio in [1e-3, 1.0, 30.0, 1e3] {
                let s = ratio / (g2 * c.attenuation(x));
                let a = laplace_interference(x, s, &c).unwrap();
                let o = exponent_oracle(x, s, &c);
                assert!(
                    (a - o).abs() <= 1e-6 * o.max(1e-9),
                    "x={x} s={s}: {a} vs {o}"
                );
            }
        }
    }

    #[test]
    fn exponent_limits() {
        let mut c = cfg();
        assert_eq!(laplace_interference(5.0, 0.0, &c).unwrap(), 0.0);
        c.lambda = 0.0;
        assert_eq!(laplace_interference(5.0, 1e12, &c).unwrap(), 0.0);
        assert!(laplace_interference(-1.0, 1.0, &c).is_err());
    }

    #[test]
    fn rayleigh_noise_limited_reduction() {
        let mut c = cfg();
        c.lambda = 1e-9;
        c.n_los = 1;
        c.n_nlos = 1;
        for form in [CcdfForm::Exact, CcdfForm::Alzer] {
            c.ccdf = form;
            let t = db_to_linear(5.0);
            for x in [3.0, 12.0, 30.0] {
                let gain = 2.5;
                let closed =
                    (-t * c.noise_power() / (c.p_t * c.k_pl * gain * c.attenuation(x))).exp();
                assert_relative_eq!(link_coverage(x, gain, t, &c), closed, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn exact_tail_matches_gamma_survival_without_interference() {
        // no interference: P(h ≥ a) for h ~ Gamma(N, 1/N) is the Poisson sum
        let mut c = cfg();
        c.lambda = 1e-12;
        let x = 8.0;
        let t = db_to_linear(5.0);
        let gain = 1e-3;
        let a =
            f64::from(c.n_los) * t * c.noise_power() / (c.p_t * c.k_pl * gain * c.attenuation(x));
        let poisson: f64 = (0..c.n_los)
            .map(|m| (-a).exp() * a.powi(m as i32) / factorial(m))
            .sum();
        assert_relative_eq!(link_coverage(x, gain, t, &c), poisson, max_relative = 1e-6);
    }

    #[test]
    fn threshold_limits() {
        let c = cfg();
        assert!(link_coverage(10.0, 1.0, 1e-12, &c) > 1.0 - 1e-6);
        let r = overall_coverage(1e-9, 4, FRAC_PI_4, 0.5, &c).unwrap();
        assert!(r.probability > 0.999, "{r:?}");
    }

    #[test]
    fn branches_are_ordered() {
        let c = cfg();
        for x in [1.0, 10.0, 19.9, 25.0, 80.0] {
            for t_db in [-10.0, 0.0, 5.0, 20.0] {
                let b = branch_terms(x, 0.2, PI / 8.0, db_to_linear(t_db), &c);
                assert!(
                    b.aligned >= b.misaligned && b.misaligned >= b.wrong_beam,
                    "{x} {t_db}: {b:?}"
                );
            }
        }
    }

    #[test]
    fn exhaustive_dominates_and_matches_error_free() {
        let c = cfg();
        let q = CoverageQuery {
            threshold: db_to_linear(5.0),
            j: 2,
            k: 4,
            theta_u: FRAC_PI_4,
            beta: 0.7,
        };
        let p = coverage_probability(&q, &c).unwrap();
        let e = coverage_probability_exhaustive(&q, &c).unwrap();
        assert!(e.probability >= p.probability);
        assert_eq!(e.breakdown.misaligned, 0.0);
        assert_eq!(e.breakdown.wrong_beam, 0.0);
        assert_relative_eq!(p.probability, p.breakdown.total(), max_relative = 1e-12);
    }

    #[test]
    fn single_cell_profile_matches_direct_integration() {
        let c = cfg();
        let t = db_to_linear(5.0);
        let (d_a, k, theta_u, beta) = (60.0, 4, FRAC_PI_4, 0.6);
        let r = cell_coverage(d_a, t, k, theta_u, beta, ErrorModel::Localized, &c).unwrap();
        // brute force: full evaluation at every quadrature point
        let theta_b = full_width(d_a, c.h_b) / k as f64;
        let gb = main_gain(theta_b, &c);
        let gu = main_gain(theta_u, &c);
        let t_obs = observation_time(beta, &c);
        let nu = misalignment_threshold(theta_u, &c);
        let edges = row_edges(d_a, c.h_b, k);
        let mut total = 0.0;
        for w in edges.windows(2) {
            let f = |x: f64| {
                let b = branch_terms(x, theta_b, theta_u, t, &c);
                let pbs = interval_miss(x, distance_variance(x, gb, gu, t_obs, &c), w[0], w[1]);
                let pma = mean_misalignment(
                    nu / aoa_variance(x, 0.0, gb, c.ue_loc_elements, t_obs, &c).sqrt(),
                );
                (1.0 - pbs) * ((1.0 - pma) * b.aligned + pma * b.misaligned) + pbs * b.wrong_beam
            };
            let mut pts = vec![w[0], w[1]];
            if w[0] < c.d_s && c.d_s < w[1] {
                pts.insert(1, c.d_s);
            }
            total += crate::quad::integrate_pieces(f, &pts, Tolerance::abs(1e-9)).unwrap();
        }
        assert!(
            (r.probability - total / d_a).abs() < 1e-5,
            "{} vs {}",
            r.probability,
            total / d_a
        );
    }

    #[test]
    fn fixed_cell_equals_sum_over_beams() {
        let c = cfg();
        let t = db_to_linear(5.0);
        let (d_a, k) = (45.0, 3);
        let cell = CellModel::new(d_a, k, FRAC_PI_4, 0.5, t, ErrorModel::Localized, &c);
        let whole = cell.cell_terms();
        let edges = row_edges(d_a, c.h_b, k);
        let mut sum = 0.0;
        for w in edges.windows(2) {
            sum += cell.beam_terms(w[0], w[1]).iter().sum::<f64>();
        }
        assert_relative_eq!(whole.iter().sum::<f64>(), sum / d_a, max_relative = 1e-12);
    }

    #[test]
    fn coverage_falls_with_threshold() {
        let c = cfg();
        let mut last = 1.0;
        for t_db in [-5.0, 0.0, 5.0, 10.0, 20.0] {
            let p = overall_coverage(db_to_linear(t_db), 8, FRAC_PI_4, 0.5, &c)
                .unwrap()
                .probability;
            assert!(p <= last + 1e-9, "{t_db}: {p} > {last}");
            last = p;
        }
    }

    #[test]
    fn rate_coverage_identity_and_limits() {
        let c = cfg();
        let (r0, beta) = (2e8, 0.6);
        let t = 2f64.powf(r0 * 1.1e-3 / (beta * 1e-3 * 1e9)) - 1.0;
        let direct = overall_coverage(t, 4, FRAC_PI_4, beta, &c)
            .unwrap()
            .probability;
        assert_relative_eq!(
            rate_coverage(r0, beta, 4, FRAC_PI_4, &c).unwrap(),
            direct,
            max_relative = 1e-12
        );
        assert!(rate_coverage(1.0, beta, 4, FRAC_PI_4, &c).unwrap() > 0.999);
        assert_eq!(rate_coverage(1e15, 0.01, 4, FRAC_PI_4, &c).unwrap(), 0.0);
        assert!(rate_coverage(1e8, 0.0, 4, FRAC_PI_4, &c).is_err());
    }
}
