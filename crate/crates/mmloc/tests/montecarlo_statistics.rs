use mmloc::config::NetworkConfig;
use mmloc::montecarlo::{sample_realization, window_half_width};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

fn cfg() -> NetworkConfig {
    NetworkConfig {
        lambda: 0.01,
        ..NetworkConfig::default()
    }
}

#[test]
fn nearest_bs_distance_follows_cell_size_law() {
    let c = cfg();
    let n = 100_000;
    let mut d: Vec<f64> = (0..n)
        .filter_map(|s| sample_realization(&c, s).unwrap().user.map(|u| u.d))
        .collect();
    assert!(d.len() > n as usize - 5);
    d.sort_by(f64::total_cmp);
    let m = d.len() as f64;
    let ks = d
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-2.0 * c.lambda * x).exp();
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");
}

#[test]
fn bs_count_is_poisson() {
    let c = cfg();
    let mean = 2.0 * c.lambda * window_half_width(&c);
    let law = Poisson::new(mean).unwrap();
    let n = 10_000u64;
    let counts: Vec<u64> = (0..n)
        .map(|s| sample_realization(&c, s).unwrap().bs_positions.len() as u64)
        .collect();
    // bins of unit width around the mean, tails pooled so each expects ≥ 5
    let lo = (mean - 3.5 * mean.sqrt()).floor() as u64;
    let hi = (mean + 3.5 * mean.sqrt()).ceil() as u64;
    let mut observed = vec![0u64; (hi - lo + 3) as usize];
    for &k in &counts {
        let bin = if k < lo {
            0
        } else if k > hi {
            observed.len() - 1
        } else {
            (k - lo + 1) as usize
        };
        observed[bin] += 1;
    }
    let mut expected: Vec<f64> = vec![law.cdf(lo.saturating_sub(1)) * n as f64];
    if lo == 0 {
        expected[0] = 0.0;
    }
    expected.extend((lo..=hi).map(|k| law.pmf(k) * n as f64));
    expected.push((1.0 - law.cdf(hi)) * n as f64);
    let (mut chi2, mut dof) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        pool_o += *o as f64;
        pool_e += e;
        if pool_e >= 5.0 {
            chi2 += (pool_o - pool_e).powi(2) / pool_e;
            dof += 1;
            pool_o = 0.0;
            pool_e = 0.0;
        }
    }
    if pool_e > 0.0 {
        chi2 += (pool_o - pool_e).powi(2) / pool_e;
        dof += 1;
    }
    let p = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi-square {chi2} on {} dof, p = {p}", dof - 1);
}

#[test]
fn fading_power_has_unit_mean() {
    let c = cfg();
    let draws: Vec<f64> = (0..2000)
        .flat_map(|s| sample_realization(&c, s).unwrap().fading)
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    assert!((mean - 1.0).abs() <= 3.0 * stderr, "mean {mean} ± {stderr}");
}
