use super::params::ShockParams;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Configuration, Species, DEFAULT_GUARD_WIDTH};

/// Window `[lo, hi]` for a shock run: the block plus ⌈t + 8√t + 100⌉ on each side.
pub fn shock_window(params: &ShockParams) -> Result<(i64, i64)> {
    let c = params.c_value()?;
    let inner = (params.drift() * (params.t - c * params.t.sqrt())).ceil() as i64;
    let margin = (params.t + 8.0 * params.t.sqrt() + 100.0).ceil() as i64;
    Ok((-inner - margin, inner + margin))
}

/// Labels are ranks: particles never overtake particles and holes never
/// overtake holes, so the k-th particle from the right carries label
/// `particle_base + k` and the k-th hole from the left `hole_base + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledTracking {
    pub particle_base: i64,
    pub hole_base: i64,
}

impl LabeledTracking {
    /// (label, position) of every first-class particle in the window, labels increasing.
    pub fn particles(&self, c: &Configuration) -> Vec<(i64, i64)> {
        let mut pos: Vec<i64> = c.sites_of(Species::First).collect();
        pos.reverse();
        pos.into_iter()
            .enumerate()
            .map(|(k, x)| (self.particle_base + k as i64, x))
            .collect()
    }

    /// (label, position) of every hole in the window, labels increasing.
    pub fn holes(&self, c: &Configuration) -> Vec<(i64, i64)> {
        c.sites_of(Species::Hole)
            .enumerate()
            .map(|(k, x)| (self.hole_base + k as i64, x))
            .collect()
    }

    pub fn particle(&self, c: &Configuration, label: i64) -> Option<i64> {
        let k = usize::try_from(label - self.particle_base).ok()?;
        let mut it = c.cells().iter().enumerate().rev().filter(|(_, &s)| s == Species::First);
        it.nth(k).map(|(i, _)| c.lo() + i as i64)
    }

    pub fn hole(&self, c: &Configuration, label: i64) -> Option<i64> {
        let k = usize::try_from(label - self.hole_base).ok()?;
        c.sites_of(Species::Hole).nth(k)
    }
}

fn shock_config(params: &ShockParams, fill: impl Fn(i64) -> Species) -> Result<Configuration> {
    let (lo, hi) = shock_window(params)?;
    Configuration::new(lo, hi, Boundary::Packed, Boundary::Empty, DEFAULT_GUARD_WIDTH, fill)
}

/// Shock data: particles on {1..B} and on (-∞, -B-1], second-class at 0.
pub fn build_shock_ic(params: &ShockParams) -> Result<(Configuration, LabeledTracking)> {
    params.validate()?;
    let b = params.block()?;
    let c = shock_config(params, |x| {
        if x == 0 {
            Species::Second
        } else if (1..=b).contains(&x) || x <= -b - 1 {
            Species::First
        } else {
            Species::Hole
        }
    })?;
    // x_n = -n + 1 on the block, so the rightmost particle (at B) is label -B+1;
    // H_n = n - 1 on [-B, -1], so the leftmost hole (at -B) is label -B+1
    Ok((c, LabeledTracking { particle_base: -b + 1, hole_base: -b + 1 }))
}

#[derive(Debug, Clone)]
pub struct VariantIcs {
    /// Second-class replaced by a particle.
    pub eta1: Configuration,
    /// Second-class replaced by a hole.
    pub eta2: Configuration,
    /// Left block only: x_n = -n - B, n ≥ 1.
    pub eta_a: Configuration,
    /// Everything occupied except H_n = n + B, n ≥ 1.
    pub eta_b: Configuration,
    pub tracking1: LabeledTracking,
    pub tracking2: LabeledTracking,
    pub tracking_a: LabeledTracking,
    pub tracking_b: LabeledTracking,
}

pub fn build_variant_ics(params: &ShockParams) -> Result<VariantIcs> {
    let (shock, t) = build_shock_ic(params)?;
    let b = params.block()?;
    let eta1 = shock.map(|s| if s == Species::Second { Species::First } else { s });
    let eta2 = shock.map(|s| if s == Species::Second { Species::Hole } else { s });
    let eta_a = shock_config(params, |x| if x <= -b - 1 { Species::First } else { Species::Hole })?;
    let eta_b = shock_config(params, |x| if x >= b + 1 { Species::Hole } else { Species::First })?;
    Ok(VariantIcs {
        eta1,
        eta2,
        eta_a,
        eta_b,
        // x¹_n = -n on [-B, 0]: the particle at B is label -B
        tracking1: LabeledTracking { particle_base: -b, hole_base: t.hole_base },
        // H²_n = n on [-B, 0]: the hole at -B is label -B
        tracking2: LabeledTracking { particle_base: t.particle_base, hole_base: -b },
        tracking_a: LabeledTracking { particle_base: 1, hole_base: i64::MIN / 2 },
        tracking_b: LabeledTracking { particle_base: i64::MIN / 2, hole_base: 1 },
    })
}

/// Particles exactly on the sites < edge; edge 0 is the step x_n = -n.
pub fn build_step(edge: i64, lo: i64, hi: i64) -> Result<Configuration> {
    if !(lo < edge && edge < hi) {
        return Err(Error::domain(format!("edge {edge} must lie inside the window [{lo}, {hi}]")));
    }
    Configuration::new(lo, hi, Boundary::Packed, Boundary::Empty, DEFAULT_GUARD_WIDTH, |x| {
        if x < edge {
            Species::First
        } else {
            Species::Hole
        }
    })
}

/// Particles exactly on the sites ≥ z.
pub fn build_reversed_step(z: i64, lo: i64, hi: i64) -> Result<Configuration> {
    if !(lo < z && z < hi) {
        return Err(Error::domain(format!("Z = {z} must lie inside the window [{lo}, {hi}]")));
    }
    Configuration::new(lo, hi, Boundary::Empty, Boundary::Packed, DEFAULT_GUARD_WIDTH, |x| {
        if x >= z {
            Species::First
        } else {
            Species::Hole
        }
    })
}

/// Particles on {a..b} ∪ {N+1, N+2, …}; an element of Ω_{N-b+a}.
pub fn build_finite_omega(a: i64, b: i64, n: i64, lo: i64, hi: i64) -> Result<Configuration> {
    if !(a <= b && b <= n) {
        return Err(Error::domain(format!("need a <= b <= N, got ({a}, {b}, {n})")));
    }
    let g = DEFAULT_GUARD_WIDTH as i64;
    if !(lo + g < a && n + 1 < hi - g) {
        return Err(Error::domain("window does not contain the finite part"));
    }
    Configuration::new(lo, hi, Boundary::Empty, Boundary::Packed, DEFAULT_GUARD_WIDTH, |x| {
        if (a..=b).contains(&x) || x > n {
            Species::First
        } else {
            Species::Hole
        }
    })
}
