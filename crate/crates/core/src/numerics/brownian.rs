//! Monte Carlo for F_{M,1}, the Brownian last-passage law.
//!
//! Paths live on the dyadic grid k/G. Values at level ℓ are midpoint bridge
//! refinements of level ℓ-1 and every Gaussian is keyed by
//! (seed, replica, path, level, index), so the path on G/2 points is the
//! restriction of the path on G points.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{hash4, unit_open};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub replicas: usize,
}

fn keyed_normal(seed: u64, replica: u64, stream: u64, index: u64) -> f64 {
    let u1 = unit_open(hash4(seed, replica, stream, index << 1));
    let u2 = unit_open(hash4(seed, replica, stream, (index << 1) | 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn check_grid(grid_steps: usize) -> Result<u32> {
    if grid_steps < 2 || !grid_steps.is_power_of_two() {
        return Err(Error::domain(format!(
            "grid steps must be a power of two and at least 2, got {grid_steps}"
        )));
    }
    Ok(grid_steps.trailing_zeros())
}

/// Brownian path B(k/G), k = 0..=G, for one (seed, replica, path).
pub fn brownian_path(seed: u64, replica: u64, path: u64, grid_steps: usize) -> Result<Vec<f64>> {
    let levels = check_grid(grid_steps)?;
    let mut b = vec![0.0; grid_steps + 1];
    let stream = |level: u32| (path << 8) | level as u64;
    b[grid_steps] = keyed_normal(seed, replica, stream(0), 0);
    for level in 1..=levels {
        let span = grid_steps >> (level - 1);
        let half = span / 2;
        // bridge midpoint variance: (span/G)/4
        let sd = (span as f64 / grid_steps as f64 / 4.0).sqrt();
        for j in 0..(1usize << (level - 1)) {
            let l = j * span;
            let mid = l + half;
            b[mid] = 0.5 * (b[l] + b[l + span]) + sd * keyed_normal(seed, replica, stream(level), j as u64);
        }
    }
    Ok(b)
}

/// sup over grid times of Σ_i [B_i(t_{i+1}) - B_i(t_i)] for one replica.
pub fn lpp_value(m: usize, grid_steps: usize, seed: u64, replica: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("M must be a positive integer"));
    }
    let mut v = brownian_path(seed, replica, 0, grid_steps)?;
    for i in 1..m {
        let b = brownian_path(seed, replica, i as u64, grid_steps)?;
        let mut best = f64::NEG_INFINITY;
        for k in 0..=grid_steps {
            best = best.max(v[k] - b[k]);
            v[k] = best + b[k];
        }
    }
    Ok(v[grid_steps])
}

/// Samples of the discretised last-passage value, one per replica.
pub fn lpp_samples(m: usize, grid_steps: usize, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    if replicas == 0 {
        return Err(Error::domain("replicas must be at least 1"));
    }
    check_grid(grid_steps)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| lpp_value(m, grid_steps, seed, r))
        .collect()
}

/// Empirical P(value ≤ s) from precomputed samples.
pub fn estimate_cdf(samples: &[f64], s: f64) -> McEstimate {
    let n = samples.len();
    let hits = samples.iter().filter(|&&v| v <= s).count();
    let value = hits as f64 / n as f64;
    McEstimate {
        value,
        std_err: (value * (1.0 - value) / n as f64).sqrt(),
        replicas: n,
    }
}

pub fn f_m1_mc(m: usize, s: f64, grid_steps: usize, replicas: usize, seed: u64) -> Result<McEstimate> {
    let samples = lpp_samples(m, grid_steps, replicas, seed)?;
    Ok(estimate_cdf(&samples, s))
}
