//! Lower-triangular beam dictionary: row `k` splits the cell's angular span
//! into `k` equal beams and records the ground interval each one covers.

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEntry {
    pub k: usize,
    /// 1-based position within the row.
    pub j: usize,
    pub theta_k: f64,
    pub d_left: f64,
    pub d_right: f64,
}

impl BeamEntry {
    /// Ground coverage of the beam.
    pub fn coverage(&self) -> f64 {
        self.d_right - self.d_left
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamDictionary {
    pub rows: Vec<Vec<BeamEntry>>,
    pub d_a: f64,
    pub h_b: f64,
    pub n_max: usize,
}

/// Angular span θ₁ = arctan(d_a/h_B) of the single-beam row.
pub fn full_width(d_a: f64, h_b: f64) -> f64 {
    (d_a / h_b).atan()
}

/// Ground edges 0 = e₀ < e₁ < … < e_k = d_a of row `k`, built from the
/// cumulative angles j·θ_k so the last edge closes the cell exactly.
pub fn row_edges(d_a: f64, h_b: f64, k: usize) -> Vec<f64> {
    let step = full_width(d_a, h_b) / k as f64;
    let mut edges: Vec<f64> = (0..=k).map(|j| h_b * (j as f64 * step).tan()).collect();
    edges[0] = 0.0;
    edges[k] = d_a;
    edges
}

/// 1-based index of the interval of `edges` holding `x`; a point on a shared
/// edge belongs to the left interval. `None` outside [e₀, e_k].
pub fn interval_of(edges: &[f64], x: f64) -> Option<usize> {
    let k = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[k]) {
        return None;
    }
    Some(edges[1..].partition_point(|&e| e < x).min(k - 1) + 1)
}

pub fn build_dictionary(d_a: f64, h_b: f64, n_max: usize) -> Result<BeamDictionary> {
    if !(d_a > 0.0) || !(h_b > 0.0) || n_max == 0 {
        return Err(domain(
            "build_dictionary",
            format!("d_a = {d_a}, h_B = {h_b}, n_max = {n_max}"),
        ));
    }
    let theta_1 = full_width(d_a, h_b);
    let rows = (1..=n_max)
        .map(|k| {
            let edges = row_edges(d_a, h_b, k);
            (1..=k)
                .map(|j| BeamEntry {
                    k,
                    j,
                    theta_k: theta_1 / k as f64,
                    d_left: edges[j - 1],
                    d_right: edges[j],
                })
                .collect()
        })
        .collect();
    Ok(BeamDictionary {
        rows,
        d_a,
        h_b,
        n_max,
    })
}

impl BeamDictionary {
    pub fn theta_1(&self) -> f64 {
        full_width(self.d_a, self.h_b)
    }

    pub fn row(&self, k: usize) -> Result<&[BeamEntry]> {
        if k == 0 || k > self.n_max {
            return Err(domain(
                "BeamDictionary::row",
                format!("size {k} outside 1..={}", self.n_max),
            ));
        }
        Ok(&self.rows[k - 1])
    }

    /// Beam of row `k` whose interval holds `d_hat`.
    pub fn lookup(&self, k: usize, d_hat: f64) -> Result<&BeamEntry> {
        let row = self.row(k)?;
        if !(d_hat >= 0.0 && d_hat <= self.d_a) {
            return Err(Error::OutOfCell {
                value: d_hat,
                cell: self.d_a,
            });
        }
        let j = row.partition_point(|b| b.d_right < d_hat).min(k - 1);
        Ok(&row[j])
    }

    /// Rows flattened as (k, j, theta_k, d_left, d_right).
    pub fn entries(&self) -> impl Iterator<Item = &BeamEntry> {
        self.rows.iter().flatten()
    }
}
