//! Antenna models.
//!
//! Data-phase gains use the sectorized pattern; angle estimation uses a
//! half-wavelength uniform linear array.

use crate::config::{NetworkConfig, SPEED_OF_LIGHT};
use crate::error::{domain, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Ideal sectorized pattern: constant main lobe of width `theta`, constant sidelobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorizedPattern {
    pub theta: f64,
    pub g0: f64,
    pub eps: f64,
}

impl SectorizedPattern {
    pub fn new(theta: f64, cfg: &NetworkConfig) -> Result<Self> {
        if !(theta > 0.0 && theta <= TWO_PI) {
            return Err(domain(
                "SectorizedPattern::new",
                format!("beamwidth {theta} outside (0, 2π]"),
            ));
        }
        Ok(Self {
            theta,
            g0: cfg.g0,
            eps: cfg.eps_sidelobe,
        })
    }

    pub fn main_lobe(&self) -> f64 {
        self.g0 * (TWO_PI - (TWO_PI - self.theta) * self.eps) / self.theta
    }

    pub fn sidelobe(&self) -> f64 {
        self.g0 * self.eps
    }
}

/// Gain of a sectorized antenna of width `theta`.
pub fn sector_gain(theta: f64, in_main_lobe: bool, cfg: &NetworkConfig) -> Result<f64> {
    let p = SectorizedPattern::new(theta, cfg)?;
    Ok(if in_main_lobe {
        p.main_lobe()
    } else {
        p.sidelobe()
    })
}

/// Main-lobe gain, for widths already known to be valid.
pub(crate) fn main_gain(theta: f64, cfg: &NetworkConfig) -> f64 {
    cfg.g0 * (TWO_PI - (TWO_PI - theta) * cfg.eps_sidelobe) / theta
}

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaArray {
    pub m: usize,
    /// Element spacing, m.
    pub kappa: f64,
    pub f_c: f64,
}

impl UlaArray {
    /// Array with half-wavelength spacing at carrier `f_c`.
    pub fn half_wavelength(m: usize, f_c: f64) -> Self {
        Self {
            m: m.max(1),
            kappa: SPEED_OF_LIGHT / (2.0 * f_c),
            f_c,
        }
    }

    /// Phase advance per element per unit sin(angle).
    pub fn phase_step(&self) -> f64 {
        TWO_PI * self.kappa * self.f_c / SPEED_OF_LIGHT
    }
}

/// Unit-norm response a(angle), element n carrying phase n·step·sin(angle).
pub fn array_response(array: &UlaArray, angle: f64) -> Vec<Complex64> {
    let amp = 1.0 / (array.m as f64).sqrt();
    let step = array.phase_step() * angle.sin();
    (0..array.m)
        .map(|n| Complex64::from_polar(amp, n as f64 * step))
        .collect()
}

/// ∂a/∂angle.
pub fn array_response_derivative(array: &UlaArray, angle: f64) -> Vec<Complex64> {
    let slope = array.phase_step() * angle.cos();
    array_response(array, angle)
        .into_iter()
        .enumerate()
        .map(|(n, a)| a * Complex64::new(0.0, n as f64 * slope))
        .collect()
}

/// Elements needed for a beam of width `theta`: max(1, ⌈2π/θ⌉).
pub fn beamwidth_to_elements(theta: f64) -> Result<usize> {
    if !(theta > 0.0 && theta <= TWO_PI) {
        return Err(domain(
            "beamwidth_to_elements",
            format!("beamwidth {theta} outside (0, 2π]"),
        ));
    }
    // guard against 2π/θ landing a hair above an integer
    let ratio = TWO_PI / theta;
    let rounded = ratio.round();
    let m = if (ratio - rounded).abs() < 1e-9 * rounded {
        rounded
    } else {
        ratio.ceil()
    };
    Ok((m as usize).max(1))
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// |a(actual)ᴴ w|² with conjugate-steering weights w = √m·a(steer), so the
/// matched gain equals m.
pub fn beamforming_gain(array: &UlaArray, steer_angle: f64, actual_angle: f64) -> f64 {
    let a = array_response(array, actual_angle);
    let w = array_response(array, steer_angle);
    inner(&a, &w).norm_sqr() * array.m as f64
}

/// Angle information of the array for a full-rank beam sweep (W Wᴴ = I):
/// ‖ȧ‖² − |aᴴȧ|², the part of the response slope orthogonal to the response.
pub fn angle_information(array: &UlaArray, angle: f64) -> f64 {
    let a = array_response(array, angle);
    let da = array_response_derivative(array, angle);
    let slope: f64 = da.iter().map(|x| x.norm_sqr()).sum();
    (slope - inner(&a, &da).norm_sqr()).max(0.0)
}

/// Closed form of [`angle_information`] for half-wavelength spacing:
/// π²cos²(angle)(m² − 1)/12.
pub fn angle_information_closed(m: usize, angle: f64) -> f64 {
    let m = m as f64;
    PI * PI * angle.cos().powi(2) * (m * m - 1.0) / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    #[test]
    fn sector_gain_examples() {
        let c = cfg();
        assert_relative_eq!(
            sector_gain(TWO_PI, true, &c).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(sector_gain(1.0, false, &c).unwrap(), 0.01);
        assert_relative_eq!(
            sector_gain(PI, true, &c).unwrap(),
            1.99,
            max_relative = 1e-14
        );
        assert!(sector_gain(0.0, true, &c).is_err());
        assert!(sector_gain(7.0, true, &c).is_err());
    }

    #[test]
    fn element_counts() {
        assert_eq!(beamwidth_to_elements(TWO_PI).unwrap(), 1);
        assert_eq!(beamwidth_to_elements(PI / 8.0).unwrap(), 16);
        assert_eq!(beamwidth_to_elements(PI / 3.0).unwrap(), 6);
        assert_eq!(beamwidth_to_elements(1.0).unwrap(), 7);
    }

    #[test]
    fn responses() {
        let arr = UlaArray::half_wavelength(5, 28e9);
        assert_relative_eq!(arr.phase_step(), PI, max_relative = 1e-15);
        for a in array_response(&arr, 0.0) {
            assert_relative_eq!(a.re, 1.0 / 5f64.sqrt(), max_relative = 1e-15);
            assert_eq!(a.im, 0.0);
        }
        let two = array_response(&UlaArray::half_wavelength(2, 28e9), PI / 2.0);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(two[0].re, s);
        assert_relative_eq!(two[1].re, -s, max_relative = 1e-14);
        assert!(two[1].im.abs() < 1e-15);
    }

    #[test]
    fn derivative_at_endfire_vanishes() {
        let arr = UlaArray::half_wavelength(8, 28e9);
        for x in array_response_derivative(&arr, PI / 2.0) {
            assert!(x.norm() < 1e-15);
        }
        assert_eq!(
            array_response_derivative(&arr, 0.3)[0],
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn gains_by_direct_summation() {
        let arr = UlaArray::half_wavelength(8, 28e9);
        assert_relative_eq!(beamforming_gain(&arr, 0.4, 0.4), 8.0, max_relative = 1e-12);
        let one = UlaArray::half_wavelength(1, 28e9);
        assert_relative_eq!(beamforming_gain(&one, 0.1, 1.2), 1.0, max_relative = 1e-14);
        let arr4 = UlaArray::half_wavelength(4, 28e9);
        let delta = PI * (0f64.sin() - (PI / 6.0).sin());
        let (mut re, mut im) = (0.0, 0.0);
        for n in 0..4 {
            re += (n as f64 * delta).cos();
            im += (n as f64 * delta).sin();
        }
        assert_relative_eq!(
            beamforming_gain(&arr4, 0.0, PI / 6.0),
            (re * re + im * im) / 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn angle_information_matches_closed_form() {
        for m in [1, 2, 4, 16, 33] {
            let arr = UlaArray::half_wavelength(m, 28e9);
            for ang in [0.0, 0.3, 1.1, -0.7] {
                let v = angle_information(&arr, ang);
                let c = angle_information_closed(m, ang);
                assert!(
                    (v - c).abs() <= 1e-10 * c.max(1.0),
                    "m={m} ang={ang}: {v} vs {c}"
                );
            }
        }
        assert_eq!(angle_information_closed(1, 0.2), 0.0);
    }
}
