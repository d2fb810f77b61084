use mmloc::antenna::{
    array_response, array_response_derivative, beamforming_gain, SectorizedPattern, UlaArray,
};
use mmloc::config::{db_to_linear, NetworkConfig};
use mmloc::coverage::{branch_terms, cell_coverage, CoverageQuery, ErrorModel};
use mmloc::dictionary::build_dictionary;
use mmloc::geometry::{snr_localization, UserGeometry};
use mmloc::initial_access::{run_initial_access, AccessMode, AccessPolicy};
use mmloc::localization::p_beam_selection;
use mmloc::montecarlo::{simulate_coverage, simulate_error_probabilities, Scope};
use mmloc::optimizer::{optimize_beamwidth, OptimizationSpec};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn cfg() -> NetworkConfig {
    NetworkConfig::default()
}

fn small_spec() -> OptimizationSpec {
    OptimizationSpec {
        beta_step: 0.25,
        k_candidates: Some(vec![1, 2, 4]),
        ..OptimizationSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dictionary_rows_tile_the_cell(d_a in 0.5f64..500.0, h_b in 1.0f64..30.0, n_max in 1usize..40) {
        let dict = build_dictionary(d_a, h_b, n_max).unwrap();
        let mut prev_max = f64::INFINITY;
        for k in 1..=n_max {
            let row = dict.row(k).unwrap();
            prop_assert_eq!(row.len(), k);
            prop_assert_eq!(row[0].d_left, 0.0);
            prop_assert_eq!(row[k - 1].d_right, d_a);
            for w in row.windows(2) {
                prop_assert_eq!(w[0].d_right, w[1].d_left);
                prop_assert!(w[1].coverage() > w[0].coverage());
            }
            let widest = row.iter().map(|b| b.coverage()).fold(0.0, f64::max);
            prop_assert!(widest < prev_max);
            prev_max = widest;
        }
    }

    #[test]
    fn sectorized_pattern_conserves_power(theta in 1e-4f64..(2.0 * PI), eps in 0.0f64..1.0, g0_db in -10.0f64..30.0) {
        let c = NetworkConfig { g0: db_to_linear(g0_db), eps_sidelobe: eps, ..cfg() };
        let p = SectorizedPattern::new(theta, &c).unwrap();
        let total = p.main_lobe() * theta + p.sidelobe() * (2.0 * PI - theta);
        prop_assert!((total - 2.0 * PI * c.g0).abs() <= 1e-12 * 2.0 * PI * c.g0);
        prop_assert!(p.main_lobe() >= p.sidelobe());
    }

    #[test]
    fn matched_beam_gain_is_array_size(m in 1usize..=64, angle in -PI..PI) {
        let arr = UlaArray::half_wavelength(m, 28e9);
        let g = beamforming_gain(&arr, angle, angle);
        prop_assert!((g - m as f64).abs() <= 1e-10 * m as f64);
    }

    #[test]
    fn response_derivative_matches_central_difference(m in 1usize..=64, angle in -1.5f64..1.5) {
        let arr = UlaArray::half_wavelength(m, 28e9);
        let h = 1e-5;
        let up = array_response(&arr, angle + h);
        let down = array_response(&arr, angle - h);
        let exact = array_response_derivative(&arr, angle);
        let err: f64 = exact
            .iter()
            .zip(up.iter().zip(&down))
            .map(|(d, (u, l))| ((u - l) / (2.0 * h) - d).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = exact.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * norm.max(1.0), "m={} angle={}: {} vs {}", m, angle, err, norm);
    }

    #[test]
    fn user_angles_close_the_triangle(d in 0.0f64..1000.0, o in -PI..PI, h_b in 1.0f64..30.0) {
        let g = UserGeometry::new(d, o, h_b).unwrap();
        let scale = g.psi.abs() + g.phi.abs() + g.o.abs() + PI;
        prop_assert!((g.psi + g.phi + g.o - PI).abs() <= 4.0 * f64::EPSILON * scale);
    }

    #[test]
    fn localization_snr_falls_with_distance(d in 0.0f64..400.0, step in 0.01f64..50.0) {
        let c = cfg();
        let near = UserGeometry::new(d, 0.0, c.h_b).unwrap();
        let far = UserGeometry::new(d + step, 0.0, c.h_b).unwrap();
        prop_assert!(snr_localization(&far, 10.0, 10.0, &c) < snr_localization(&near, 10.0, 10.0, &c));
    }

    #[test]
    fn beam_selection_error_is_a_probability(d_a in 1.0f64..200.0, k in 1usize..16, frac in 0.0f64..1.0, var in 0.0f64..50.0) {
        let c = cfg();
        let dict = build_dictionary(d_a, c.h_b, 16).unwrap();
        let d = frac * d_a;
        let beam = dict.lookup(k, d).unwrap();
        let p = p_beam_selection(d, var, beam);
        prop_assert!((0.0..=1.0).contains(&p));
        // the miss probability is smallest at the beam centre
        let mid = 0.5 * (beam.d_left + beam.d_right);
        prop_assert!(p_beam_selection(mid, var, beam) <= p + 1e-15);
    }

    #[test]
    fn branches_are_ordered(x in 0.0f64..600.0, t_db in -20.0f64..40.0, theta_b in 0.001f64..FRAC_PI_2, theta_u in 0.001f64..(2.0 * PI), lambda in 0.002f64..0.2) {
        let c = NetworkConfig { lambda, ..cfg() };
        let b = branch_terms(x, theta_b, theta_u, db_to_linear(t_db), &c);
        prop_assert!(b.aligned >= b.misaligned - 1e-12, "{:?}", b);
        prop_assert!(b.misaligned >= b.wrong_beam - 1e-12, "{:?}", b);
        for v in [b.aligned, b.misaligned, b.wrong_beam] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn range_variance_never_grows_during_access(d_frac in 0.0f64..1.0, psi in -1.4f64..1.4, d_a in 5.0f64..300.0) {
        let c = cfg();
        let trace = run_initial_access(d_frac * d_a, psi, d_a, &AccessPolicy::default(), &c, AccessMode::BoundTracking).unwrap();
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].sigma_d2 <= w[0].sigma_d2 * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cell_coverage_falls_with_threshold(d_a in 2.0f64..300.0, t_db in -10.0f64..20.0, gap in 0.5f64..10.0, k in 1usize..12) {
        let c = cfg();
        let lo = cell_coverage(d_a, db_to_linear(t_db), k, PI / 8.0, 0.5, ErrorModel::Localized, &c).unwrap();
        let hi = cell_coverage(d_a, db_to_linear(t_db + gap), k, PI / 8.0, 0.5, ErrorModel::Localized, &c).unwrap();
        prop_assert!(hi.probability <= lo.probability + 1e-12);
        prop_assert!((0.0..=1.0).contains(&lo.probability));
    }

    #[test]
    fn monte_carlo_ignores_thread_count(seed in any::<u64>(), threads in 2usize..6) {
        let c = cfg();
        let q = CoverageQuery { threshold: db_to_linear(5.0), j: 1, k: 4, theta_u: PI / 8.0, beta: 0.5 };
        let run = |n: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| {
                (
                    simulate_coverage(&q, Scope::Cell, ErrorModel::Localized, &c, 6000, seed).unwrap(),
                    simulate_error_probabilities(4, 0.5, PI / 8.0, &c, 6000, seed).unwrap(),
                )
            })
        };
        prop_assert_eq!(run(1), run(threads));
    }

    #[test]
    fn wider_caps_never_lower_the_optimum(e1 in 0.05f64..0.6, e2 in 0.05f64..0.6, widen in 0.0f64..0.4) {
        let (p, c) = (AccessPolicy::default(), cfg());
        let tight = OptimizationSpec { eps_bs: e1, eps_ma: e2, ..small_spec() };
        let loose = OptimizationSpec { eps_bs: (e1 + widen).min(1.0), eps_ma: (e2 + widen).min(1.0), ..small_spec() };
        let a = optimize_beamwidth(&tight, &p, &c).unwrap();
        let b = optimize_beamwidth(&loose, &p, &c).unwrap();
        prop_assert!(b.feasible_set_size >= a.feasible_set_size);
        if let Some(o) = a.optimum {
            prop_assert!(b.optimum.unwrap().objective >= o.objective);
        }
    }

    #[test]
    fn common_power_scaling_keeps_the_argmax(n in -30i32..30) {
        let (p, c) = (AccessPolicy::default(), cfg());
        let s = 2f64.powi(n);
        let scaled = NetworkConfig { p_t: c.p_t * s, noise_psd: c.noise_psd * s, est_noise: c.est_noise * s, ..c.clone() };
        let spec = OptimizationSpec { eps_bs: 0.5, eps_ma: 0.5, ..small_spec() };
        let a = optimize_beamwidth(&spec, &p, &c).unwrap().optimum.unwrap();
        let b = optimize_beamwidth(&spec, &p, &scaled).unwrap().optimum.unwrap();
        prop_assert_eq!((a.k, a.beta), (b.k, b.beta));
        prop_assert!((a.objective - b.objective).abs() < 1e-12);
    }
}

#[test]
fn reported_optimum_reevaluates_exactly() {
    let (p, c) = (AccessPolicy::default(), cfg());
    let spec = OptimizationSpec {
        eps_bs: 0.5,
        eps_ma: 0.5,
        ..small_spec()
    };
    let o = optimize_beamwidth(&spec, &p, &c).unwrap().optimum.unwrap();
    let again = mmloc::coverage::rate_coverage(spec.rate, o.beta, o.k, o.theta_u, &c).unwrap();
    assert_eq!(again, o.objective);
}

#[test]
fn power_scaling_by_a_decade_keeps_the_argmax() {
    let (p, c) = (AccessPolicy::default(), cfg());
    let spec = OptimizationSpec {
        eps_bs: 0.5,
        eps_ma: 0.5,
        ..small_spec()
    };
    let a = optimize_beamwidth(&spec, &p, &c).unwrap().optimum.unwrap();
    for s in [1e-3, 10.0, 1e4] {
        let scaled = NetworkConfig {
            p_t: c.p_t * s,
            noise_psd: c.noise_psd * s,
            est_noise: c.est_noise * s,
            ..c.clone()
        };
        let b = optimize_beamwidth(&spec, &p, &scaled)
            .unwrap()
            .optimum
            .unwrap();
        assert_eq!((a.k, a.beta), (b.k, b.beta), "scale {s}");
        assert!((a.objective - b.objective).abs() < 1e-9, "scale {s}");
    }
}
