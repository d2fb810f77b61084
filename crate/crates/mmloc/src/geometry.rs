//! Deployment geometry: cell-size and user-position laws, the LOS ball,
//! and the distance/angle relations between a BS and its user.

use crate::config::{NetworkConfig, SPEED_OF_LIGHT};
use crate::error::{domain, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Los,
    Nlos,
}

/// Position of a user relative to its serving BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    /// Ground distance, m.
    pub d: f64,
    /// User orientation, rad.
    pub o: f64,
    /// Slant distance, m.
    pub z: f64,
    /// Propagation delay, s.
    pub tau: f64,
    /// Angle of departure, rad.
    pub phi: f64,
    /// Angle of arrival, rad.
    pub psi: f64,
}

impl UserGeometry {
    pub fn new(d: f64, o: f64, h_b: f64) -> Result<Self> {
        if !(d >= 0.0) || !(h_b > 0.0) {
            return Err(domain("UserGeometry::new", format!("d = {d}, h_B = {h_b}")));
        }
        let z = d.hypot(h_b);
        let phi = (d / z).acos();
        Ok(Self {
            d,
            o,
            z,
            tau: z / SPEED_OF_LIGHT,
            phi,
            psi: PI - phi - o,
        })
    }

    /// Geometry with the orientation chosen so that the angle of arrival is `psi`.
    pub fn with_psi(d: f64, psi: f64, h_b: f64) -> Result<Self> {
        let phi = UserGeometry::new(d, 0.0, h_b)?.phi;
        Self::new(d, PI - phi - psi, h_b)
    }
}

/// Density of the cell extent, 2λ·exp(−2λx).
pub fn cell_size_pdf(x: f64, lambda: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("cell_size_pdf", format!("negative extent {x}")));
    }
    Ok(2.0 * lambda * (-2.0 * lambda * x).exp())
}

/// Uniform density of the user position on [0, d_a].
pub fn user_position_pdf(y: f64, d_a: f64) -> Result<f64> {
    if !(d_a > 0.0) {
        return Err(domain("user_position_pdf", format!("cell extent {d_a}")));
    }
    Ok(if (0.0..=d_a).contains(&y) {
        1.0 / d_a
    } else {
        0.0
    })
}

/// LOS iff the ground distance lies in the closed ball of radius d_S.
pub fn link_state(d_ground: f64, cfg: &NetworkConfig) -> LinkState {
    if d_ground <= cfg.d_s {
        LinkState::Los
    } else {
        LinkState::Nlos
    }
}

impl NetworkConfig {
    pub fn exponent(&self, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.alpha_los,
            LinkState::Nlos => self.alpha_nlos,
        }
    }

    pub fn nakagami(&self, state: LinkState) -> u32 {
        match state {
            LinkState::Los => self.n_los,
            LinkState::Nlos => self.n_nlos,
        }
    }

    /// Distance attenuation (h_B² + d²)^(−α/2) without the intercept.
    pub fn attenuation(&self, d_ground: f64) -> f64 {
        let alpha = self.exponent(link_state(d_ground, self));
        (d_ground * d_ground + self.h_b * self.h_b).powf(-0.5 * alpha)
    }
}

/// Mean-fading SNR of the localization pilots for gains `gain_b`, `gain_u`.
pub fn snr_localization(geom: &UserGeometry, gain_b: f64, gain_u: f64, cfg: &NetworkConfig) -> f64 {
    cfg.k_pl * cfg.p_t * gain_b * gain_u * cfg.attenuation(geom.d) / cfg.est_noise
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};
    use approx::assert_relative_eq;

    #[test]
    fn cell_size_density_values() {
        assert_relative_eq!(cell_size_pdf(0.0, 0.01).unwrap(), 0.02);
        assert_relative_eq!(
            cell_size_pdf(50.0, 0.01).unwrap(),
            0.007_357_588_823_428_847,
            max_relative = 1e-12
        );
        assert!(cell_size_pdf(-1.0, 0.01).is_err());
    }

    #[test]
    fn cell_size_density_normalizes() {
        for lambda in [0.005, 0.01, 0.2] {
            let upper = 60.0 / lambda;
            let v = integrate(
                |x| cell_size_pdf(x, lambda).unwrap(),
                0.0,
                upper,
                Tolerance::default(),
            )
            .unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{lambda}: {v}");
        }
    }

    #[test]
    fn user_density() {
        assert_eq!(user_position_pdf(30.0, 100.0).unwrap(), 0.01);
        assert_eq!(user_position_pdf(150.0, 100.0).unwrap(), 0.0);
        assert!(user_position_pdf(1.0, 0.0).is_err());
        let v = integrate(
            |y| user_position_pdf(y, 37.0).unwrap(),
            0.0,
            37.0,
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn los_ball_is_closed() {
        let c = NetworkConfig::default();
        assert_eq!(link_state(10.0, &c), LinkState::Los);
        assert_eq!(link_state(20.0, &c), LinkState::Los);
        assert_eq!(link_state(25.0, &c), LinkState::Nlos);
    }

    #[test]
    fn angle_identities() {
        let g = UserGeometry::new(30.0, 0.4, 10.0).unwrap();
        assert_relative_eq!(g.psi + g.phi + g.o, PI, max_relative = 1e-15);
        assert_relative_eq!(g.z, 1000f64.sqrt());
        assert_relative_eq!(g.tau, g.z / SPEED_OF_LIGHT);
        assert_relative_eq!(g.phi, (30.0 / g.z).acos());
        let g = UserGeometry::with_psi(12.0, 0.7, 10.0).unwrap();
        assert_relative_eq!(g.psi, 0.7, max_relative = 1e-14);
    }

    #[test]
    fn localization_snr() {
        let c = NetworkConfig::default();
        let g = UserGeometry::new(15.0, 0.0, c.h_b).unwrap();
        let hand = c.k_pl * 1.0 / 325.0 / c.est_noise;
        assert_relative_eq!(
            snr_localization(&g, 1.0, 1.0, &c),
            hand,
            max_relative = 1e-12
        );
        let mut c2 = c.clone();
        c2.p_t *= 2.0;
        assert_relative_eq!(
            snr_localization(&g, 1.0, 1.0, &c2),
            2.0 * hand,
            max_relative = 1e-12
        );
        let top = UserGeometry::new(0.0, 0.0, c.h_b).unwrap();
        assert_relative_eq!(
            snr_localization(&top, 1.0, 1.0, &c),
            c.k_pl / 100.0 / c.est_noise,
            max_relative = 1e-12
        );
        let nlos = UserGeometry::new(30.0, 0.0, c.h_b).unwrap();
        assert_relative_eq!(
            snr_localization(&nlos, 1.0, 1.0, &c),
            c.k_pl / 1e6 / c.est_noise,
            max_relative = 1e-12
        );
    }
}
