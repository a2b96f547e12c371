//! Multi-species ASEP on a finite window.
//!
//! A [`Configuration`] stores one [`Species`] per site of `[lo, hi]`. The
//! outermost `guard_width` cells on each side copy the boundary convention
//! (packed = first-class, empty = hole) and must never change; a swap that
//! touches them means the window was too small.

mod clock;
mod engine;
mod observe;

pub use clock::{ArrowStream, Direction};
pub use engine::{couple_evolve, kmc_evolve, Event, Evolver, NoObserver, Observer, Trajectory};
pub use observe::{
    decode_rle, density_profile, discrepancy_position, encode_rle, partial_order_leq, snapshot_line,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GUARD_WIDTH: usize = 10;

/// Swap priority is the discriminant: first > second > hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Species {
    Hole = 0,
    Second = 1,
    First = 2,
}

impl Species {
    #[inline(always)]
    pub fn priority(self) -> u8 {
        self as u8
    }

    pub fn is_occupied(self) -> bool {
        self != Species::Hole
    }

    pub fn symbol(self) -> char {
        match self {
            Species::Hole => 'H',
            Species::Second => 'S',
            Species::First => 'F',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'H' => Some(Species::Hole),
            'S' => Some(Species::Second),
            'F' => Some(Species::First),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Packed,
    Empty,
}

impl Boundary {
    pub fn species(self) -> Species {
        match self {
            Boundary::Packed => Species::First,
            Boundary::Empty => Species::Hole,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    lo: i64,
    hi: i64,
    cells: Vec<Species>,
    left: Boundary,
    right: Boundary,
    guard_width: usize,
}

impl Configuration {
    /// Window `[lo, hi]` filled by `fill`; guard cells take the boundary species.
    pub fn new(
        lo: i64,
        hi: i64,
        left: Boundary,
        right: Boundary,
        guard_width: usize,
        fill: impl Fn(i64) -> Species,
    ) -> Result<Self> {
        if guard_width == 0 {
            return Err(Error::domain("guard width must be positive"));
        }
        if hi < lo || ((hi - lo + 1) as usize) < 2 * guard_width + 2 {
            return Err(Error::domain(format!(
                "window [{lo}, {hi}] too small for guard width {guard_width}"
            )));
        }
        let n = (hi - lo + 1) as usize;
        let cells = (0..n)
            .map(|i| {
                if i < guard_width {
                    left.species()
                } else if i >= n - guard_width {
                    right.species()
                } else {
                    fill(lo + i as i64)
                }
            })
            .collect();
        Ok(Self {
            lo,
            hi,
            cells,
            left,
            right,
            guard_width,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn left_boundary(&self) -> Boundary {
        self.left
    }

    pub fn right_boundary(&self) -> Boundary {
        self.right
    }

    pub fn guard_width(&self) -> usize {
        self.guard_width
    }

    pub fn cells(&self) -> &[Species] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [Species] {
        &mut self.cells
    }

    /// Species at `site`; outside the window the boundary species.
    pub fn get(&self, site: i64) -> Species {
        if site < self.lo {
            self.left.species()
        } else if site > self.hi {
            self.right.species()
        } else {
            self.cells[(site - self.lo) as usize]
        }
    }

    /// Overwrites an interior site.
    pub fn set(&mut self, site: i64, s: Species) -> Result<()> {
        let (a, b) = self.interior();
        if site < a || site > b {
            return Err(Error::domain(format!("site {site} is outside the interior [{a}, {b}]")));
        }
        self.cells[(site - self.lo) as usize] = s;
        Ok(())
    }

    /// First and last non-guard sites.
    pub fn interior(&self) -> (i64, i64) {
        (self.lo + self.guard_width as i64, self.hi - self.guard_width as i64)
    }

    pub fn same_window(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.guard_width == other.guard_width
    }

    pub fn count(&self, s: Species) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    /// Sites holding `s`, increasing.
    pub fn sites_of(&self, s: Species) -> impl Iterator<Item = i64> + '_ {
        let lo = self.lo;
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == s)
            .map(move |(i, _)| lo + i as i64)
    }

    /// Position of the unique second-class particle.
    pub fn second_class_site(&self) -> Option<i64> {
        let mut it = self.sites_of(Species::Second);
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Species-wise relabelling, e.g. second ↦ first.
    pub fn map(&self, f: impl Fn(Species) -> Species) -> Self {
        Self {
            cells: self.cells.iter().map(|&c| f(c)).collect(),
            ..self.clone()
        }
    }
}
