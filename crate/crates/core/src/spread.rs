//! Diagnostics for how evenly the column span of a design spreads its mass over rows.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::power_iteration_max_eig;
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadMethod {
    ExactD1,
    RandomizedSearch,
}

/// Best violation found by [`spread_witness_search`].
///
/// `rho_lower_witnessed` is `||v_rest|| / ||v||` where `rest` is the complement of
/// `witness_set`; the true spread constant is at most this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub m: usize,
    pub rho_lower_witnessed: f64,
    #[serde(with = "crate::serde_vec")]
    pub witness_v: DVector<f64>,
    pub witness_set: Vec<usize>,
    pub method: SpreadMethod,
}

impl SpreadReport {
    /// Ratio recomputed from the witness vector and set.
    pub fn recompute_ratio(&self) -> f64 {
        complement_ratio(&self.witness_v, &self.witness_set)
    }
}

fn complement_ratio(v: &DVector<f64>, set: &[usize]) -> f64 {
    // Summing the complement directly avoids cancellation when the set holds most of the mass.
    let mut inside = vec![false; v.len()];
    for &i in set {
        inside[i] = true;
    }
    let rest: f64 = v.iter().zip(&inside).filter(|(_, &s)| !s).map(|(x, _)| x * x).sum();
    (rest / v.norm_squared()).sqrt()
}

/// Fraction of `||Xu||^2` carried by rows with `r^2 v_i^2 <= ||v||^2 / n`.
pub fn kappa_r(x: &DMatrix<f64>, u: &DVector<f64>, r: f64) -> Result<f64> {
    if u.len() != x.ncols() {
        return Err(Error::shape(format!(
            "u has length {}, design has {} columns",
            u.len(),
            x.ncols()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("r must be positive, got {r}")));
    }
    let v = x * u;
    let total = v.norm_squared();
    if total == 0.0 {
        return Err(Error::invalid("X u is zero"));
    }
    let cut = total / x.nrows() as f64;
    let kept: f64 = v.iter().map(|vi| vi * vi).filter(|&s| r * r * s <= cut).sum();
    Ok(kept / total)
}

/// Indices of the `m` largest magnitudes; ties go to the lower index.
pub fn top_m_indices(v: &DVector<f64>, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    if m == 0 {
        return Vec::new();
    }
    if m < idx.len() {
        idx.select_nth_unstable_by(m - 1, |&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
        idx.truncate(m);
    }
    idx.sort_unstable();
    idx
}

const SEARCH_ITERS: usize = 500;

/// Searches for a unit `u` whose image `Xu` concentrates on few rows.
pub fn spread_witness_search(x: &DMatrix<f64>, m: usize, restarts: usize, rng: &RandomSource) -> Result<SpreadReport> {
    let (n, d) = x.shape();
    if m == 0 || m >= n {
        return Err(Error::invalid(format!("m must satisfy 1 <= m < n = {n}, got {m}")));
    }
    if d == 1 {
        let v = x.column(0).into_owned();
        if v.norm_squared() == 0.0 {
            return Err(Error::invalid("design column is zero"));
        }
        let set = top_m_indices(&v, m);
        return Ok(SpreadReport {
            m,
            rho_lower_witnessed: complement_ratio(&v, &set),
            witness_v: v,
            witness_set: set,
            method: SpreadMethod::ExactD1,
        });
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let op_sq = power_iteration_max_eig(&x.tr_mul(x), 200, 1e-10);
    if op_sq == 0.0 {
        return Err(Error::invalid("design is zero"));
    }
    let step = 1.0 / op_sq;
    let best = (0..restarts)
        .into_par_iter()
        .map(|r| search_once(x, m, step, &rng.derive(r as u64)))
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one restart");
    let (ratio, v, set) = best;
    Ok(SpreadReport {
        m,
        rho_lower_witnessed: ratio,
        witness_v: v,
        witness_set: set,
        method: SpreadMethod::RandomizedSearch,
    })
}

/// Projected gradient on `1/2 ||D v||^2 - 1/2 g ||v||^2` where `D` masks the top-`m` rows and
/// `g` is the current squared ratio.
fn search_once(x: &DMatrix<f64>, m: usize, step: f64, rng: &RandomSource) -> (f64, DVector<f64>, Vec<usize>) {
    let mut u = DVector::from_vec(rng.stream().unit_vector(x.ncols()));
    let mut best: Option<(f64, DVector<f64>, Vec<usize>)> = None;
    for _ in 0..SEARCH_ITERS {
        let v = x * &u;
        if v.norm_squared() == 0.0 {
            break;
        }
        let set = top_m_indices(&v, m);
        let ratio = complement_ratio(&v, &set);
        if best.as_ref().is_none_or(|b| ratio < b.0) {
            best = Some((ratio, v.clone(), set.clone()));
        }
        let g = ratio * ratio;
        let mut masked = &v * (1.0 - g);
        for &i in &set {
            masked[i] = -g * v[i];
        }
        let next = &u - x.tr_mul(&masked) * step;
        let norm = next.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        u = next / norm;
    }
    best.unwrap_or_else(|| {
        let v = x * &u;
        let set = top_m_indices(&v, m);
        (f64::INFINITY, v, set)
    })
}

/// Checks `sum_{i not in A} |v_i| >= ((1 - g1^2 - g2^2) / g2) sqrt(m) ||v||` after verifying
/// that `A` carries at most `g1^2` and every `m`-set at most `g2^2` of `||v||^2`.
pub fn l1_vs_l2_check(v: &DVector<f64>, a: &[usize], m: usize, g1: f64, g2: f64) -> Result<bool> {
    let n = v.len();
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::invalid(format!(
            "gamma values must be positive, got {g1} and {g2}"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::invalid(format!("m must be in 1..={n}, got {m}")));
    }
    if let Some(&bad) = a.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("index {bad} out of range for length {n}")));
    }
    let mut in_a = vec![false; n];
    for &i in a {
        in_a[i] = true;
    }
    let total = v.norm_squared();
    let slack = 1e-12 * total;
    let a_mass: f64 = (0..n).filter(|&i| in_a[i]).map(|i| v[i] * v[i]).sum();
    if a_mass > g1 * g1 * total + slack {
        return Err(Error::Precondition(format!(
            "set carries {:.6e} of the squared norm, more than gamma1^2 = {:.6e}",
            a_mass / total,
            g1 * g1
        )));
    }
    let top_mass: f64 = top_m_indices(v, m).iter().map(|&i| v[i] * v[i]).sum();
    if top_mass > g2 * g2 * total + slack {
        return Err(Error::Precondition(format!(
            "top {m} entries carry {:.6e} of the squared norm, more than gamma2^2 = {:.6e}",
            top_mass / total,
            g2 * g2
        )));
    }
    let l1: f64 = (0..n).filter(|&i| !in_a[i]).map(|i| v[i].abs()).sum();
    let rhs = (1.0 - g1 * g1 - g2 * g2) / g2 * (m as f64).sqrt() * total.sqrt();
    Ok(l1 >= rhs - 1e-9 * (1.0 + rhs.abs()))
}

/// Lower bound on `max v^T X u` over unit `u` and unit `k`-sparse `v`, by alternating maximization.
pub fn sparse_operator_norm(x: &DMatrix<f64>, k: usize, trials: usize, rng: &RandomSource) -> Result<f64> {
    let (n, d) = x.shape();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let trials = trials.max(1);
    let best = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut u = DVector::from_vec(rng.derive(t as u64).stream().unit_vector(d));
            let mut value = 0.0f64;
            for _ in 0..2000 {
                let w = x * &u;
                let mut v = DVector::zeros(n);
                for i in top_m_indices(&w, k) {
                    v[i] = w[i];
                }
                let vn = v.norm();
                if vn == 0.0 {
                    break;
                }
                v /= vn;
                let z = x.tr_mul(&v);
                let next = z.norm();
                if next == 0.0 {
                    break;
                }
                u = z / next;
                let done = next - value <= 1e-15 * next;
                value = value.max(next);
                if done {
                    break;
                }
            }
            value
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
