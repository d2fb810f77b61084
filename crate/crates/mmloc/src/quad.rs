//! Numerical integration: adaptive Gauss–Kronrod (7/15) and cached
//! fixed-order Gauss–Legendre rules.

use crate::error::{numeric, Result};
use gauss_quad::GaussLegendre;
use std::sync::OnceLock;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-8,
            rel: 1e-8,
            max_intervals: 400,
        }
    }
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            ..Self::default()
        }
    }
}

struct Panel<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    error: f64,
}

fn kronrod<const D: usize, F: FnMut(f64) -> [f64; D]>(f: &mut F, a: f64, b: f64) -> Panel<D> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc.map(|v| v * WG[3]);
    let mut kron = fc.map(|v| v * WGK[7]);
    for (i, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let lo = f(center - dx);
        let hi = f(center + dx);
        for d in 0..D {
            let pair = lo[d] + hi[d];
            kron[d] += WGK[i] * pair;
            if i % 2 == 1 {
                gauss[d] += WG[i / 2] * pair;
            }
        }
    }
    let mut error = 0.0;
    for d in 0..D {
        error += ((kron[d] - gauss[d]) * half).abs();
    }
    Panel {
        a,
        b,
        value: kron.map(|v| v * half),
        error,
    }
}

/// Adaptive integration of a vector-valued `f` over `[a, b]`, bisecting the
/// panel with the largest error estimate until the summed estimate meets `tol`.
pub fn integrate_vec<const D: usize, F: FnMut(f64) -> [f64; D]>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<[f64; D]> {
    if a == b {
        return Ok([0.0; D]);
    }
    let mut panels = vec![kronrod(&mut f, a, b)];
    loop {
        let mut value = [0.0; D];
        let mut error = 0.0;
        for p in &panels {
            for d in 0..D {
                value[d] += p.value[d];
            }
            error += p.error;
        }
        let size: f64 = value.iter().map(|v| v.abs()).sum();
        if !size.is_finite() {
            return Err(numeric(
                "integrate",
                format!("non-finite integral on [{a}, {b}]"),
            ));
        }
        if error <= tol.abs.max(tol.rel * size) {
            return Ok(value);
        }
        if panels.len() >= tol.max_intervals {
            return Err(numeric(
                "integrate",
                format!("no convergence on [{a}, {b}]: estimate {size:e}, error {error:e}"),
            ));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_vec(|x| [f(x)], a, b, tol).map(|v| v[0])
}

/// [`integrate`] over consecutive sub-intervals given by sorted `points`.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let mut total = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            total += integrate(&mut f, w[0], w[1], tol)?;
        }
    }
    Ok(total)
}

const MAX_ORDER: usize = 64;

fn rules() -> &'static [Vec<(f64, f64)>] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    RULES.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|n| {
                if n < 2 {
                    Vec::new()
                } else {
                    GaussLegendre::new(n)
                        .map(|r| r.into_iter().collect())
                        .unwrap_or_default()
                }
            })
            .collect()
    })
}

/// Fixed `n`-point Gauss–Legendre rule on [-1, 1]; `n` is clamped to [2, 64].
pub fn legendre(n: usize) -> &'static [(f64, f64)] {
    &rules()[n.clamp(2, MAX_ORDER)]
}

/// Fixed-order Gauss–Legendre integral over `[a, b]`.
pub fn fixed<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    half * legendre(n)
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-14);
        assert_relative_eq!(
            fixed(|x| x.powi(7), 0.0, 1.0, 4),
            0.125,
            max_relative = 1e-13
        );
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-8);
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let v = integrate(|x: f64| (-x).exp(), 0.0, 30.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), max_relative = 1e-10);
        let v = integrate_pieces(
            |x: f64| x.sin(),
            &[0.0, 1.0, std::f64::consts::PI],
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn reports_failure() {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 0.0,
            max_intervals: 4,
        };
        assert!(integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, tol).is_err());
    }

    #[test]
    fn legendre_weights_sum_to_two() {
        for n in [2, 8, 33, 64] {
            let s: f64 = legendre(n).iter().map(|p| p.1).sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-13);
        }
    }
}
