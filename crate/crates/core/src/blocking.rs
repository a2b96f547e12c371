//! Blocking measures conditioned on a balance point.
//!
//! Under the product measure with marginals 1/(1+α^i), α = q/p, a
//! configuration in Ω_Z differs from the reversed step at Z by n particles
//! left of Z and n holes at or right of Z. Its weight relative to the step is
//! α^(Σ holes − Σ particles), so the excitation energies on the two sides are
//! independent sets of distinct non-negative integers tied only by their
//! common size. Marginals then follow from elementary symmetric polynomials
//! in 1, α, α², … truncated to W terms.

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Configuration, Species, DEFAULT_GUARD_WIDTH};
use crate::rng::CounterRng;

pub const DEFAULT_ENUM_TOL: f64 = 1e-10;
/// Largest window tried before giving up on the tail bound.
const MAX_WINDOW: usize = 20_000;
const SAMPLER_STREAM: u64 = 0xb10c;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockingParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub eps: f64,
    /// Excitation energies 0..W are kept on each side.
    pub window: usize,
}

impl BlockingParams {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_tolerance(p, DEFAULT_ENUM_TOL)
    }

    /// Smallest W ≥ ⌈46/|ln α|⌉ whose tail bound is below `eps`.
    pub fn with_tolerance(p: f64, eps: f64) -> Result<Self> {
        let (q, alpha) = Self::check(p, eps)?;
        let mut w = (46.0 / alpha.ln().abs()).ceil().max(1.0) as usize;
        while tail_bound(alpha, w) >= eps {
            w += 1;
            if w > MAX_WINDOW {
                return Err(Error::nonconvergence(format!(
                    "no window up to {MAX_WINDOW} certifies tolerance {eps} at p = {p}"
                )));
            }
        }
        Ok(Self { p, q, alpha, eps, window: w })
    }

    /// Explicit window; fails when it cannot certify `eps`.
    pub fn with_window(p: f64, eps: f64, window: usize) -> Result<Self> {
        let (q, alpha) = Self::check(p, eps)?;
        let bound = tail_bound(alpha, window);
        if !(bound < eps) {
            return Err(Error::nonconvergence(format!(
                "window {window} leaves tail mass bound {bound:.3e} ≥ {eps:.3e}"
            )));
        }
        Ok(Self { p, q, alpha, eps, window })
    }

    fn check(p: f64, eps: f64) -> Result<(f64, f64)> {
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::domain(format!("blocking measure needs p in (1/2, 1), got {p}")));
        }
        if !(eps > 0.0) {
            return Err(Error::domain(format!("tolerance must be positive, got {eps}")));
        }
        let q = 1.0 - p;
        Ok((q, q / p))
    }

    pub fn tail_bound(&self) -> f64 {
        tail_bound(self.alpha, self.window)
    }
}

/// Bound on the probability that some excitation has energy ≥ W.
///
/// Removing a hole excitation of energy m together with any particle
/// excitation of energy a multiplies the weight by α^-(m+a+1); summing over
/// the a that lead to the same image gives P(m occupied) ≤ α^(m+1)/(1-α),
/// and the two sides together give 2α^(W+1)/(1-α)².
fn tail_bound(alpha: f64, w: usize) -> f64 {
    2.0 * alpha.powi(w as i32 + 1) / (1.0 - alpha).powi(2)
}

/// Elementary symmetric polynomials e_0..e_len of `x`, skipping index `skip`.
fn esp(x: &[f64], skip: Option<usize>, len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len + 1];
    e[0] = 1.0;
    let mut used = 0;
    for (k, &xk) in x.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        used += 1;
        for n in (1..=used.min(len)).rev() {
            e[n] += xk * e[n - 1];
        }
    }
    e
}

/// Marginals of μ_0 on [-W, W-1]; sites outside are deterministic up to the tail bound.
#[derive(Debug, Clone)]
pub struct BlockingMeasure {
    params: BlockingParams,
    /// P(energy k is a hole excitation), k = 0..W; equals the particle side.
    excited: Vec<f64>,
    partition: f64,
}

impl BlockingMeasure {
    pub fn new(params: BlockingParams) -> Self {
        let w = params.window;
        let a = params.alpha;
        let x: Vec<f64> = (0..w).map(|k| a.powi(k as i32)).collect();
        let e = esp(&x, None, w);
        let pow_n: Vec<f64> = (0..=w).map(|n| a.powi(n as i32)).collect();
        let partition: f64 = (0..=w).map(|n| pow_n[n] * e[n] * e[n]).sum();
        let excited = (0..w)
            .map(|k| {
                let ek = esp(&x, Some(k), w);
                let s: f64 = (1..=w).map(|n| pow_n[n] * e[n] * x[k] * ek[n - 1]).sum();
                s / partition
            })
            .collect();
        Self { params, excited, partition }
    }

    pub fn params(&self) -> &BlockingParams {
        &self.params
    }

    /// Total weight of Ω_0 relative to the reversed step.
    pub fn partition(&self) -> f64 {
        self.partition
    }

    /// μ_0(i).
    pub fn mu0(&self, i: i64) -> f64 {
        let w = self.params.window as i64;
        if i >= 0 {
            if i >= w {
                1.0
            } else {
                1.0 - self.excited[i as usize]
            }
        } else {
            let k = -1 - i;
            if k >= w {
                0.0
            } else {
                self.excited[k as usize]
            }
        }
    }

    /// μ_Z(i) = μ_0(i - Z).
    pub fn mu_z(&self, z: i64, i: i64) -> f64 {
        self.mu0(i - z)
    }

    /// P(V_0 = i) = μ_0(i+1) - μ_0(i).
    pub fn v0_pmf(&self, i: i64) -> f64 {
        self.mu0(i + 1) - self.mu0(i)
    }

    /// (i, P(V_0 = i)) for |i| ≤ range.
    pub fn v0_table(&self, range: i64) -> Vec<(i64, f64)> {
        (-range..=range).map(|i| (i, self.v0_pmf(i))).collect()
    }

    /// max_i |μ_0(-1-i) + μ_0(i) - 1| over the window.
    pub fn reflection_defect(&self) -> f64 {
        let w = self.params.window as i64;
        (0..w).map(|i| (self.mu0(-1 - i) + self.mu0(i) - 1.0).abs()).fold(0.0, f64::max)
    }
}

pub fn mu0_marginal(i: i64, params: &BlockingParams) -> f64 {
    BlockingMeasure::new(*params).mu0(i)
}

pub fn v0_pmf(i: i64, params: &BlockingParams) -> f64 {
    BlockingMeasure::new(*params).v0_pmf(i)
}

/// A member of Ω_Z described by its excitations over the reversed step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationConfig {
    pub z: i64,
    /// Occupied sites left of Z, decreasing.
    pub particles: Vec<i64>,
    /// Empty sites at or right of Z, increasing.
    pub holes: Vec<i64>,
    /// α^(Σ holes − Σ particles); 1 for the reversed step.
    pub weight: f64,
}

impl ExcitationConfig {
    pub fn new(z: i64, mut particles: Vec<i64>, mut holes: Vec<i64>, alpha: f64) -> Result<Self> {
        particles.sort_unstable_by(|a, b| b.cmp(a));
        holes.sort_unstable();
        if particles.len() != holes.len() {
            return Err(Error::domain("particle and hole excitations must have equal counts"));
        }
        if particles.iter().any(|&a| a >= z) || holes.iter().any(|&b| b < z) {
            return Err(Error::domain("excitations on the wrong side of Z"));
        }
        if particles.windows(2).any(|w| w[0] == w[1]) || holes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("repeated excitation site"));
        }
        let energy: i64 = holes.iter().sum::<i64>() - particles.iter().sum::<i64>();
        Ok(Self { z, particles, holes, weight: alpha.powi(energy as i32) })
    }

    pub fn occupied(&self, i: i64) -> bool {
        if i < self.z {
            self.particles.contains(&i)
        } else {
            !self.holes.contains(&i)
        }
    }
}

/// Every member of Ω_Z with energy Σ holes − Σ particles at most `max_energy`.
pub fn enumerate_excitations(z: i64, max_energy: usize, alpha: f64) -> Vec<ExcitationConfig> {
    // distinct-part sets of non-negative integers with sum ≤ budget, grouped by size
    fn sets(budget: usize, min: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(acc.clone());
        let mut k = min;
        while k <= budget {
            acc.push(k);
            sets(budget - k, k + 1, acc, out);
            acc.pop();
            k += 1;
        }
    }
    let mut all = Vec::new();
    sets(max_energy, 0, &mut Vec::new(), &mut all);
    let mut out = Vec::new();
    for hs in &all {
        for ps in &all {
            let n = hs.len();
            if ps.len() != n {
                continue;
            }
            let energy = hs.iter().sum::<usize>() + ps.iter().sum::<usize>() + n;
            if energy > max_energy {
                continue;
            }
            let particles = ps.iter().map(|&a| z - 1 - a as i64).collect();
            let holes = hs.iter().map(|&b| z + b as i64).collect();
            out.push(ExcitationConfig::new(z, particles, holes, alpha).expect("valid by construction"));
        }
    }
    out
}

/// Z such that #particles left of Z equals #holes at or right of Z.
pub fn omega_index(c: &Configuration) -> Result<i64> {
    if c.left_boundary() != Boundary::Empty || c.right_boundary() != Boundary::Packed {
        return Err(Error::domain("balance point needs an empty left and a packed right boundary"));
    }
    if c.count(Species::Second) > 0 {
        return Err(Error::domain("balance point is defined for two-species configurations"));
    }
    // f(Z) = #particles < Z − #holes ≥ Z rises by one per site
    let holes = c.count(Species::Hole) as i64;
    Ok(c.lo() + holes)
}

/// A sample of μ_Z on [lo, hi]: independent sites, then shifted to balance at Z.
pub fn sample_mu_z(z: i64, seed: u64, params: &BlockingParams, lo: i64, hi: i64) -> Result<Configuration> {
    let w = params.window as i64;
    let g = DEFAULT_GUARD_WIDTH as i64;
    if lo + g > z - 2 * w || hi - g < z + 2 * w {
        return Err(Error::domain(format!(
            "window [{lo}, {hi}] must cover Z ± {} plus guards",
            2 * w
        )));
    }
    let mut rng = CounterRng::new(seed, SAMPLER_STREAM);
    let frame: Vec<bool> = (-w..w)
        .map(|i| rng.uniform() < 1.0 / (1.0 + params.alpha.powi(i as i32)))
        .collect();
    let zp = -w + frame.iter().filter(|&&o| !o).count() as i64;
    let shift = z - zp;
    Configuration::new(lo, hi, Boundary::Empty, Boundary::Packed, DEFAULT_GUARD_WIDTH, |x| {
        let i = x - shift;
        let occ = if i < -w {
            false
        } else if i >= w {
            true
        } else {
            frame[(i + w) as usize]
        };
        if occ {
            Species::First
        } else {
            Species::Hole
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shock::build_reversed_step;

    #[test]
    fn window_default() {
        let bp = BlockingParams::new(0.7).unwrap();
        assert!(bp.window >= 55);
        assert!(bp.tail_bound() < bp.eps);
        assert!(BlockingParams::with_window(0.7, 1e-10, 5).is_err());
        assert!(BlockingParams::new(0.5).is_err());
        assert!(BlockingParams::with_tolerance(0.7, 0.0).is_err());
    }

    #[test]
    fn marginals_reach_the_boundary_values() {
        let bp = BlockingParams::new(0.7).unwrap();
        let m = BlockingMeasure::new(bp);
        let w = bp.window as i64;
        assert!(m.mu0(w - 1) > 1.0 - 2.0 * bp.eps);
        assert!(m.mu0(-w) < 2.0 * bp.eps);
    }

    #[test]
    fn nearly_totally_asymmetric_is_the_step() {
        let bp = BlockingParams::new(1.0 - 1e-9).unwrap();
        let m = BlockingMeasure::new(bp);
        for i in -5..5 {
            let step = if i >= 0 { 1.0 } else { 0.0 };
            assert!((m.mu0(i) - step).abs() < 1e-8, "site {i}");
        }
    }

    #[test]
    fn pmf_is_nonnegative_and_sums_to_one() {
        for p in [0.6, 0.7, 0.9] {
            let bp = BlockingParams::new(p).unwrap();
            let m = BlockingMeasure::new(bp);
            let w = bp.window as i64;
            let total: f64 = (-w..=w).map(|i| m.v0_pmf(i)).sum();
            assert!((total - 1.0).abs() < 4.0 * bp.eps);
            assert!((-w..=w).all(|i| m.v0_pmf(i) >= -bp.eps));
        }
    }

    #[test]
    fn agrees_with_explicit_enumeration() {
        let alpha = 0.25;
        let bp = BlockingParams::with_tolerance(0.8, 1e-12).unwrap();
        let m = BlockingMeasure::new(bp);
        // energies above 40 carry weight below 0.25^40
        let confs = enumerate_excitations(0, 40, alpha);
        let total: f64 = confs.iter().map(|c| c.weight).sum();
        assert!((total - m.partition()).abs() < 1e-12 * total);
        for i in -6..6 {
            let occ: f64 = confs.iter().filter(|c| c.occupied(i)).map(|c| c.weight).sum();
            assert!((occ / total - m.mu0(i)).abs() < 1e-12, "site {i}");
        }
    }

    #[test]
    fn halving_the_tolerance_moves_marginals_by_less_than_it() {
        let a = BlockingParams::with_tolerance(0.6, 1e-6).unwrap();
        let b = BlockingParams::with_tolerance(0.6, 5e-7).unwrap();
        let (ma, mb) = (BlockingMeasure::new(a), BlockingMeasure::new(b));
        for i in -40..40 {
            assert!((ma.mu0(i) - mb.mu0(i)).abs() < a.eps);
        }
    }

    #[test]
    fn excitation_weights() {
        let c = ExcitationConfig::new(2, vec![0], vec![3], 0.5).unwrap();
        assert_eq!(c.weight, 0.125);
        assert!(c.occupied(0) && !c.occupied(1) && c.occupied(2) && !c.occupied(3));
        assert!(ExcitationConfig::new(0, vec![-1], vec![], 0.5).is_err());
        assert!(ExcitationConfig::new(0, vec![1], vec![2], 0.5).is_err());
        let step = ExcitationConfig::new(4, vec![], vec![], 0.5).unwrap();
        assert_eq!(step.weight, 1.0);
    }

    #[test]
    fn balance_point_of_samples() {
        let bp = BlockingParams::new(0.7).unwrap();
        for (z, seed) in [(0, 1), (3, 2), (-7, 3)] {
            let c = sample_mu_z(z, seed, &bp, -300, 300).unwrap();
            assert_eq!(omega_index(&c).unwrap(), z);
            let left = (c.lo()..z).filter(|&x| c.get(x) == Species::First).count();
            let right = (z..=c.hi()).filter(|&x| c.get(x) == Species::Hole).count();
            assert_eq!(left, right);
        }
        let r = build_reversed_step(4, -50, 50).unwrap();
        assert_eq!(omega_index(&r).unwrap(), 4);
        assert!(sample_mu_z(0, 1, &bp, -60, 60).is_err());
    }
}
