//! Blocking-measure marginals against an independent brute-force oracle.

use shockasep::blocking::{omega_index, sample_mu_z, BlockingMeasure, BlockingParams};
use shockasep::lattice::Species;
use shockasep::stats::mean_se;

/// Marginals of the product measure with P(η(i)=1)/P(η(i)=0) ∝ (p/q)^i,
/// conditioned on Ω_Z, by summing over every configuration of the 2k sites
/// [z-k, z+k-1]. Sites outside are frozen at the reversed step.
fn brute_force_marginals(p: f64, z: i64, k: i64) -> Vec<(i64, f64)> {
    let n = (2 * k) as u32;
    let lo = z - k;
    let log_ratio = (p / (1.0 - p)).ln();
    let mut total = 0.0;
    let mut occ = vec![0.0; n as usize];
    for mask in 0u32..(1 << n) {
        let left = (0..k).filter(|&j| mask >> j & 1 == 1).count();
        let right_holes = (k..2 * k).filter(|&j| mask >> j & 1 == 0).count();
        if left != right_holes {
            continue;
        }
        // log weight relative to the reversed step at z
        let mut lw = 0.0;
        for j in 0..2 * k {
            let x = (lo + j) as f64;
            let has = mask >> j & 1 == 1;
            let step = j >= k;
            if has && !step {
                lw += log_ratio * x;
            } else if !has && step {
                lw -= log_ratio * x;
            }
        }
        let w = lw.exp();
        total += w;
        for j in 0..n as usize {
            if mask >> j & 1 == 1 {
                occ[j] += w;
            }
        }
    }
    occ.iter().enumerate().map(|(j, o)| (lo + j as i64, o / total)).collect()
}

#[test]
fn marginals_match_brute_force_product_measure() {
    // window of 16 sites; neglected mass is of order (q/p)^9
    for (p, tol) in [(0.8, 2e-5), (0.9, 1e-8)] {
        let m = BlockingMeasure::new(BlockingParams::new(p).unwrap());
        for z in [-3, 0, 2] {
            for (i, want) in brute_force_marginals(p, z, 8) {
                let got = m.mu_z(z, i);
                assert!((got - want).abs() < tol, "p={p} z={z} i={i}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn shift_equivariance_and_v0() {
    let m = BlockingMeasure::new(BlockingParams::new(0.7).unwrap());
    for z in [-7, -1, 0, 4, 11] {
        for i in -15..15 {
            assert_eq!(m.mu_z(z, i + z), m.mu0(i));
        }
    }
    for i in -12..12 {
        let a = m.v0_pmf(i);
        assert!((a - (m.mu_z(-1, i) - m.mu_z(0, i))).abs() < 1e-15);
        assert!((a - (m.mu0(i + 1) - m.mu0(i))).abs() < 1e-15);
        assert!(a >= -1e-12);
    }
}

#[test]
fn marginals_are_monotone_between_the_asymptotes() {
    let m = BlockingMeasure::new(BlockingParams::new(0.65).unwrap());
    let w = m.params().window as i64;
    let values: Vec<f64> = (-w - 5..w + 5).map(|i| m.mu0(i)).collect();
    assert!(values.windows(2).all(|v| v[0] <= v[1] + 1e-15));
    assert!(values[0] < 1e-9 && values[values.len() - 1] > 1.0 - 1e-9);
}

#[test]
fn samples_have_the_right_marginals_and_index() {
    let bp = BlockingParams::new(0.7).unwrap();
    let m = BlockingMeasure::new(bp);
    let z = 3;
    let w = bp.window as i64;
    let (lo, hi) = (z - 2 * w - 20, z + 2 * w + 20);
    let samples: Vec<_> = (0..20_000u64)
        .map(|s| sample_mu_z(z, s, &bp, lo, hi).unwrap())
        .collect();
    for c in samples.iter().take(500) {
        assert_eq!(omega_index(c).unwrap(), z);
    }
    for i in z - 6..=z + 6 {
        let xs: Vec<f64> = samples.iter().map(|c| (c.get(i) == Species::First) as u8 as f64).collect();
        let (mean, se) = mean_se(&xs).unwrap();
        let target = m.mu_z(z, i);
        assert!((mean - target).abs() < 4.0 * se.max(1e-3), "site {i}: {mean} vs {target}");
    }
}
