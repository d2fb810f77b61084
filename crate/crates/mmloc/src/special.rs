//! Gaussian tail helpers.

use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Standard normal tail probability Q(x) = P(N(0,1) > x).
pub fn q(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q`] on (0, 1).
pub fn q_inv(p: f64) -> f64 {
    let x = SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Newton step against the accurate tail
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if density > 0.0 {
        x + (q(x) - p) / density
    } else {
        x
    }
}

/// Binomial coefficient as a float, exact for the small arguments used here.
pub fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// n! as a float.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_reference_values() {
        assert_relative_eq!(q(0.0), 0.5, max_relative = 1e-14);
        // Q(1) = 0.158655253931457...
        assert_relative_eq!(q(1.0), 0.158_655_253_931_457_05, max_relative = 1e-12);
        assert_relative_eq!(
            q(-1.0),
            1.0 - 0.158_655_253_931_457_05,
            max_relative = 1e-12
        );
        // deep tail from the asymptotic series, x = 10
        assert_relative_eq!(q(10.0), 7.619_853_024_160_527e-24, max_relative = 1e-10);
    }

    #[test]
    fn q_inverse_roundtrip() {
        for p in [1e-9, 0.01, 0.05, 0.3, 0.5, 0.9] {
            assert_relative_eq!(q(q_inv(p)), p, max_relative = 1e-10);
        }
        assert_relative_eq!(q_inv(0.05), 1.644_853_626_951_472_2, max_relative = 1e-10);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(factorial(4), 24.0);
    }
}
