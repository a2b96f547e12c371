//! Limit laws of 𝒫, ℋ and of their scaled difference.

use serde::Serialize;

use super::quadrature::QuadratureGrid;
use super::tracy_widom::{f_gue_fast, ContourSpec, FmpEvaluator, MAX_SUPPORTED_M};
use crate::error::{Error, Result};
use crate::shock::c_of_m;

/// Truncation target for the pmf tail.
pub const PMF_TAIL_TOL: f64 = 1e-4;
/// Step of the central differences giving the GUE density.
pub const DENSITY_STEP: f64 = 1e-3;

/// pmf of the limit law of 𝒫 (equivalently ℋ) on {0, …, l_max}.
#[derive(Debug, Clone, Serialize)]
pub struct PmfTable {
    pub m: usize,
    pub p: f64,
    pub c: f64,
    /// F_{L,p}(C) for L = 1..=l_max+1.
    pub cdf_levels: Vec<f64>,
    pub pmf: Vec<f64>,
    /// Mass beyond l_max, i.e. F_{l_max+1,p}(C).
    pub tail: f64,
}

impl PmfTable {
    /// Table with a fixed `l_max`.
    pub fn with_l_max(m: usize, p: f64, l_max: usize) -> Result<Self> {
        let c = c_of_m(m, p)?;
        if l_max + 1 > MAX_SUPPORTED_M {
            return Err(Error::nonconvergence(format!(
                "pmf table needs F_(L,p) up to L = {} > {MAX_SUPPORTED_M}",
                l_max + 1
            )));
        }
        let mut ev = FmpEvaluator::with_default_order(p, c)?;
        let mut levels = Vec::with_capacity(l_max + 1);
        for l in 1..=l_max + 1 {
            levels.push(ev.contour(l, &ContourSpec::default_for(l, p))?);
        }
        Ok(Self::from_levels(m, p, c, levels))
    }

    /// Smallest table whose tail F_{l_max+1,p}(C) is below [`PMF_TAIL_TOL`].
    pub fn auto(m: usize, p: f64) -> Result<Self> {
        Self::auto_with_c(m, p, c_of_m(m, p)?)
    }

    /// As [`PmfTable::auto`] with an explicit C in place of C(M).
    pub fn auto_with_c(m: usize, p: f64, c: f64) -> Result<Self> {
        let mut ev = FmpEvaluator::with_default_order(p, c)?;
        let mut levels = Vec::new();
        for l in 1..=MAX_SUPPORTED_M {
            let v = ev.contour(l, &ContourSpec::default_for(l, p))?;
            levels.push(v);
            if v < PMF_TAIL_TOL {
                return Ok(Self::from_levels(m, p, c, levels));
            }
        }
        Err(Error::nonconvergence(format!(
            "pmf tail F_(L,p)(C) stays above {PMF_TAIL_TOL:.0e} up to L = {MAX_SUPPORTED_M} (M = {m}, p = {p})"
        )))
    }

    fn from_levels(m: usize, p: f64, c: f64, levels: Vec<f64>) -> Self {
        let mut pmf = Vec::with_capacity(levels.len());
        pmf.push(1.0 - levels[0]);
        for w in levels.windows(2) {
            pmf.push(w[0] - w[1]);
        }
        let tail = *levels.last().unwrap();
        Self {
            m,
            p,
            c,
            cdf_levels: levels,
            pmf,
            tail,
        }
    }

    pub fn l_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self, l: usize) -> f64 {
        self.pmf.get(l).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }
}

pub fn pmf_p(l: usize, m: usize, p: f64) -> Result<f64> {
    Ok(PmfTable::with_l_max(m, p, l)?.pmf(l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffMode {
    /// (ℋ - 𝒫)/M^{1/3} with independent pmf_P marginals.
    Finite { m: usize, p: f64 },
    /// Y' - Y for independent GUE Tracy-Widom variables.
    Limit,
}

/// CDF of a difference law, prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub enum DiffLaw {
    Finite {
        /// Sorted support points with their masses.
        atoms: Vec<(f64, f64)>,
        /// Mass lost to pmf truncation (bounds the CDF error).
        truncated: f64,
    },
    Limit {
        nodes: Vec<f64>,
        /// Quadrature weight times GUE density at each node.
        weighted_density: Vec<f64>,
    },
}

impl DiffLaw {
    pub fn new(mode: DiffMode) -> Result<Self> {
        match mode {
            DiffMode::Finite { m, p } => Ok(Self::from_table(&PmfTable::auto(m, p)?)),
            DiffMode::Limit => {
                let grid = QuadratureGrid::gauss_legendre(-9.0, 7.0, 128)?;
                let h = DENSITY_STEP;
                let weighted_density = grid
                    .nodes
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&y, &w)| w * (f_gue_fast(y + h) - f_gue_fast(y - h)) / (2.0 * h))
                    .collect();
                Ok(DiffLaw::Limit {
                    nodes: grid.nodes,
                    weighted_density,
                })
            }
        }
    }

    pub fn from_table(table: &PmfTable) -> Self {
        let scale = (table.m as f64).cbrt();
        let n = table.pmf.len();
        // D = (ℋ - 𝒫) takes integer values in [-(n-1), n-1]
        let mut mass = vec![0.0; 2 * n - 1];
        for (h, ph) in table.pmf.iter().enumerate() {
            for (p, pp) in table.pmf.iter().enumerate() {
                mass[h + n - 1 - p] += ph * pp;
            }
        }
        let atoms = mass
            .iter()
            .enumerate()
            .map(|(i, &w)| ((i as f64 - (n - 1) as f64) / scale, w))
            .collect();
        let total: f64 = table.total();
        DiffLaw::Finite {
            atoms,
            truncated: 1.0 - total * total,
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        match self {
            DiffLaw::Finite { atoms, .. } => atoms.iter().take_while(|a| a.0 <= s).map(|a| a.1).sum(),
            DiffLaw::Limit { nodes, weighted_density } => nodes
                .iter()
                .zip(weighted_density)
                .map(|(&y, &wd)| wd * f_gue_fast(y + s))
                .sum(),
        }
    }

    /// Support points of a finite law (empty in limit mode).
    pub fn atoms(&self) -> &[(f64, f64)] {
        match self {
            DiffLaw::Finite { atoms, .. } => atoms,
            DiffLaw::Limit { .. } => &[],
        }
    }
}

pub fn diff_law_cdf(s: f64, mode: DiffMode) -> Result<f64> {
    if matches!(mode, DiffMode::Limit) && !(-10.0..=10.0).contains(&s) {
        return Err(Error::domain(format!("limit difference law needs s in [-10, 10], got {s}")));
    }
    Ok(DiffLaw::new(mode)?.cdf(s))
}
