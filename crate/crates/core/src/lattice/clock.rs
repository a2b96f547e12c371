//! Per-bond Poisson ring processes with random access.
//!
//! Time on each (bond, direction) is cut into epochs of length 1/rate. The
//! number of rings in an epoch is Poisson(1) and their offsets are uniform,
//! all drawn from a hash of (seed, bond, direction, epoch). Any process can
//! therefore ask for "the first ring after τ" without replaying earlier
//! rings, and every process asking gets the same answer.

use crate::error::{Error, Result};
use crate::rng::{mix64, unit_open};

const BOND_MUL: u64 = 0x9e37_79b9_7f4a_7c15;
const EPOCH_MUL: u64 = 0xc2b2_ae3d_27d4_eb4f;
const SEQ_MUL: u64 = 0x1656_67b1_9e37_79f9;
/// Poisson(1) CDF values P(N ≤ n) scaled to u64; N is the number of thresholds below the hash.
const POISSON_CDF: [u64; 12] = poisson_table();

const fn poisson_table() -> [u64; 12] {
    let mut out = [u64::MAX; 12];
    let mut prob = 0.367_879_441_171_442_33;
    let mut cum = prob;
    let mut n = 0;
    while n < 11 {
        out[n] = (cum * 18_446_744_073_709_551_616.0) as u64;
        n += 1;
        prob /= n as f64;
        cum += prob;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Direction {
    /// Ring on (x, x+1) that moves the higher-priority species right; rate p.
    Right = 0,
    /// Ring on (x, x+1) that moves the higher-priority species left; rate q.
    Left = 1,
}

impl Direction {
    pub fn from_index(i: usize) -> Self {
        if i & 1 == 0 {
            Direction::Right
        } else {
            Direction::Left
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrowStream {
    seed: u64,
    p: f64,
    q: f64,
    inv: [f64; 2],
}

impl ArrowStream {
    pub fn new(seed: u64, p: f64) -> Result<Self> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(Error::domain(format!("p must lie in (1/2, 1], got {p}")));
        }
        let q = 1.0 - p;
        let inv = [1.0 / p, if q > 0.0 { 1.0 / q } else { f64::INFINITY }];
        Ok(Self { seed, p, q, inv })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn rate(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Right => self.p,
            Direction::Left => self.q,
        }
    }

    /// Key shared by both directions of the bond (site, site+1).
    #[inline]
    pub fn bond_key(&self, site: i64) -> u64 {
        mix64(self.seed ^ (site as u64).wrapping_mul(BOND_MUL))
    }

    /// First ring of (site, dir) strictly after `after` (≥ 0); infinite at rate 0.
    pub fn next_ring(&self, site: i64, dir: Direction, after: f64) -> f64 {
        self.next_ring_keyed(self.bond_key(site), dir, after)
    }

    #[inline]
    pub fn next_ring_keyed(&self, bond_key: u64, dir: Direction, after: f64) -> f64 {
        let rate = self.rate(dir);
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        let inv = self.inv[dir as usize];
        // after ≥ 0, so truncation is the floor
        let mut epoch = (after * rate) as u64;
        loop {
            let h = mix64(bond_key ^ ((epoch << 1) | dir as u64).wrapping_add(1).wrapping_mul(EPOCH_MUL));
            let count = poisson_unit(h);
            let mut best = f64::INFINITY;
            let base = epoch as f64;
            for j in 0..count {
                let u = unit_open(mix64(h.wrapping_add((j as u64 + 1).wrapping_mul(SEQ_MUL))));
                let t = (base + u) * inv;
                if t > after && t < best {
                    best = t;
                }
            }
            if best < f64::INFINITY {
                return best;
            }
            epoch += 1;
        }
    }

    /// All rings of (site, dir) in `(from, to]`, increasing.
    pub fn rings_between(&self, site: i64, dir: Direction, from: f64, to: f64) -> Vec<f64> {
        let key = self.bond_key(site);
        let mut out = Vec::new();
        let mut t = from;
        loop {
            t = self.next_ring_keyed(key, dir, t);
            if t > to {
                return out;
            }
            out.push(t);
        }
    }
}

/// Poisson(1) by inversion of the hash against the integer CDF table.
#[inline(always)]
fn poisson_unit(h: u64) -> u32 {
    let mut n = 0;
    while n < 11 && h >= POISSON_CDF[n] {
        n += 1;
    }
    n as u32
}
