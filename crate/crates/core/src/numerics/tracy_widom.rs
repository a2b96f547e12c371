//! F_GUE and the ASEP step-data laws F_{M,p}.
//!
//! F_{M,p}(s) = (1/2πi) ∮ dλ/λ · det(I - λK) / ∏_{k<M} (1 - λ(q/p)^k),
//! with K the Gaussian ASEP kernel on (-s, ∞). Two independent routes
//! are provided: trapezoidal quadrature on a circle enclosing all poles,
//! and the explicit residue sum.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::fredholm::{KernelSpec, NystromOperator};
use super::quadrature::QuadratureGrid;
use crate::error::{Error, Result};

pub const DEFAULT_GAUSS_ORDER: usize = 120;
pub const DEFAULT_ANGLES: usize = 512;
/// Largest M evaluated in double precision at p = 0.7.
pub const MAX_SUPPORTED_M: usize = 24;
/// Largest acceptable estimated rounding error in an F_{M,p} value.
pub const PRECISION_BUDGET: f64 = 1e-6;

const F_GUE_TOL: f64 = 1e-9;

/// Gauss-Legendre order for the Airy kernel on an interval of this length.
pub fn airy_order(len: f64) -> usize {
    40 + (4.0 * len).ceil() as usize
}

/// F_GUE(s) with a node-doubling convergence check.
pub fn f_gue(s: f64) -> Result<f64> {
    check_gue_arg(s)?;
    let (a, b) = KernelSpec::Airy.truncated_interval(s).expect("airy window");
    let order = airy_order(b - a);
    let coarse = f_gue_with_order(s, order)?;
    let fine = f_gue_with_order(s, 2 * order)?;
    if (fine - coarse).abs() > F_GUE_TOL {
        return Err(Error::nonconvergence(format!(
            "F_GUE({s}) moved by {:.3e} under node doubling",
            (fine - coarse).abs()
        )));
    }
    Ok(fine)
}

/// F_GUE(s) on a fixed grid, without the doubling check.
pub fn f_gue_with_order(s: f64, order: usize) -> Result<f64> {
    check_gue_arg(s)?;
    let (a, b) = KernelSpec::Airy.truncated_interval(s).expect("airy window");
    let grid = QuadratureGrid::gauss_legendre(a, b, order)?;
    let op = NystromOperator::new(&KernelSpec::Airy, &grid)?;
    Ok(op.det_real(1.0))
}

/// F_GUE(s) at the default order, unchecked; used inside quadratures.
pub(crate) fn f_gue_fast(s: f64) -> f64 {
    if s < -10.0 {
        return 0.0;
    }
    if s > 10.0 {
        return 1.0;
    }
    let (a, b) = KernelSpec::Airy.truncated_interval(s).expect("airy window");
    f_gue_with_order(s, airy_order(b - a)).expect("argument checked")
}

fn check_gue_arg(s: f64) -> Result<()> {
    if !(-10.0..=10.0).contains(&s) {
        return Err(Error::domain(format!("F_GUE argument must lie in [-10, 10], got {s}")));
    }
    Ok(())
}

/// Circle |λ| = radius sampled at `angles` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub radius: f64,
    pub angles: usize,
}

impl ContourSpec {
    /// r = 2 (p/q)^{M-1}, 512 angles.
    pub fn default_for(m: usize, p: f64) -> Self {
        let ratio = p / (1.0 - p);
        Self {
            radius: 2.0 * ratio.powi(m as i32 - 1),
            angles: DEFAULT_ANGLES,
        }
    }

    fn validate(&self, m: usize, p: f64) -> Result<()> {
        let ratio = p / (1.0 - p);
        let outer = ratio.powi(m as i32 - 1).max(1.0);
        if !(self.radius > outer) {
            return Err(Error::domain(format!(
                "contour radius {} must exceed max(1, (p/q)^(M-1)) = {outer}",
                self.radius
            )));
        }
        if self.angles < 8 {
            return Err(Error::domain("contour needs at least 8 angular nodes"));
        }
        for k in 0..m {
            let pole = ratio.powi(k as i32);
            if ((self.radius - pole) / pole).abs() < 1e-12 {
                return Err(Error::nonconvergence(format!("pole (p/q)^{k} lies on the contour")));
            }
        }
        Ok(())
    }
}

fn check_mp_args(m: usize, p: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("M must be a positive integer"));
    }
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::domain(format!("F_(M,p) needs p in (1/2, 1), got {p}")));
    }
    if m > MAX_SUPPORTED_M {
        return Err(Error::nonconvergence(format!(
            "F_(M,p) is not supported for M = {m} > {MAX_SUPPORTED_M} in double precision"
        )));
    }
    Ok(())
}

/// Discretised kernel for one (p, s); reused across M and across methods.
#[derive(Debug, Clone)]
pub struct FmpEvaluator {
    p: f64,
    s: f64,
    op: Option<NystromOperator>,
}

impl FmpEvaluator {
    pub fn new(p: f64, s: f64, order: usize) -> Result<Self> {
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::domain(format!("F_(M,p) needs p in (1/2, 1), got {p}")));
        }
        if !s.is_finite() {
            return Err(Error::domain("F_(M,p) argument must be finite"));
        }
        let kernel = KernelSpec::GaussianAsep { p };
        let op = match kernel.truncated_interval(-s) {
            Some((a, b)) => {
                let grid = QuadratureGrid::gauss_legendre(a, b, order)?;
                Some(NystromOperator::new(&kernel, &grid)?)
            }
            None => None,
        };
        Ok(Self { p, s, op })
    }

    pub fn with_default_order(p: f64, s: f64) -> Result<Self> {
        Self::new(p, s, DEFAULT_GAUSS_ORDER)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Contour route. Returns the raw real part (no clipping to [0, 1]).
    pub fn contour(&mut self, m: usize, contour: &ContourSpec) -> Result<f64> {
        check_mp_args(m, self.p)?;
        contour.validate(m, self.p)?;
        let ratio = (1.0 - self.p) / self.p;
        let Some(op) = self.op.as_mut() else {
            // kernel negligible on (-s, ∞): det ≡ 1 and the integrand decays like λ^{-M-1}
            return Ok(0.0);
        };
        let mu: Vec<f64> = op.eigenvalues().to_vec();
        let (v1, max_g, err_log) = contour_average(&mu, ratio, m, contour.radius, contour.angles);
        let (v2, _, _) = contour_average(&mu, ratio, m, contour.radius, 2 * contour.angles);
        if v1.im.abs() > 1e-9 || v2.im.abs() > 1e-9 {
            return Err(Error::nonconvergence(format!(
                "contour integral has imaginary part {:.3e}",
                v2.im
            )));
        }
        if (v1.re - v2.re).abs() > 1e-10 {
            return Err(Error::nonconvergence(format!(
                "contour value moved by {:.3e} when doubling the angular nodes",
                (v1.re - v2.re).abs()
            )));
        }
        let rounding = max_g * err_log;
        if rounding > PRECISION_BUDGET {
            return Err(Error::nonconvergence(format!(
                "estimated rounding error {rounding:.3e} exceeds {PRECISION_BUDGET:.0e} (M = {m}, p = {})",
                self.p
            )));
        }
        Ok(v2.re)
    }

    /// Residue route: 1 + Σ_k det(I - (p/q)^k K) · Res_{λ=(p/q)^k}.
    pub fn residue(&mut self, m: usize) -> Result<f64> {
        check_mp_args(m, self.p)?;
        let r = (1.0 - self.p) / self.p;
        let Some(op) = self.op.as_ref() else {
            return Ok(0.0);
        };
        let mut total = 1.0;
        let mut magnitude = 1.0;
        for k in 0..m {
            let lambda = r.powi(-(k as i32));
            let mut denom = 1.0;
            for j in 0..m {
                if j != k {
                    denom *= 1.0 - r.powi(j as i32 - k as i32);
                }
            }
            let term = -op.det_real(lambda) / denom;
            total += term;
            magnitude += term.abs();
        }
        // LU determinants carry a relative error of a few hundred ulps at this size
        let rounding = magnitude * 1e-13;
        if rounding > PRECISION_BUDGET {
            return Err(Error::nonconvergence(format!(
                "residue sum cancels beyond precision: {rounding:.3e} (M = {m})"
            )));
        }
        Ok(total)
    }
}

/// Mean of the integrand over the circle, the largest |integrand| seen, and
/// a bound on the relative rounding error of the integrand.
fn contour_average(mu: &[f64], ratio: f64, m: usize, radius: f64, angles: usize) -> (Complex64, f64, f64) {
    let one = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut max_g: f64 = 0.0;
    let mut err: f64 = 0.0;
    let eig_abs_err = 4.0 * f64::EPSILON * mu.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let poles: Vec<f64> = (0..m).map(|k| ratio.powi(k as i32)).collect();
    for j in 0..angles {
        let theta = TAU * j as f64 / angles as f64;
        let lambda = Complex64::from_polar(radius, theta);
        let mut log_g = Complex64::new(0.0, 0.0);
        let mut sens = 0.0;
        for &u in mu {
            let f = one - lambda * u;
            log_g += f.ln();
            sens += radius / f.norm();
        }
        for &c in &poles {
            log_g -= (one - lambda * c).ln();
        }
        let g = log_g.exp();
        max_g = max_g.max(g.norm());
        err = err.max(sens * eig_abs_err + 1e-15);
        sum += g;
    }
    (sum / angles as f64, max_g, err)
}

/// F_{M,p}(s) by the contour route at default settings.
pub fn f_mp(m: usize, p: f64, s: f64) -> Result<f64> {
    check_mp_args(m, p)?;
    let mut ev = FmpEvaluator::with_default_order(p, s)?;
    ev.contour(m, &ContourSpec::default_for(m, p))
}

pub fn f_mp_contour(m: usize, p: f64, s: f64, contour: &ContourSpec, order: usize) -> Result<f64> {
    check_mp_args(m, p)?;
    FmpEvaluator::new(p, s, order)?.contour(m, contour)
}

pub fn f_mp_residue(m: usize, p: f64, s: f64, order: usize) -> Result<f64> {
    check_mp_args(m, p)?;
    FmpEvaluator::new(p, s, order)?.residue(m)
}
