//! Nyström discretisation of Fredholm determinants det(I - λK).
//!
//! The operator K restricted to an interval is replaced by the symmetric
//! matrix A_ij = √w_i K(x_i, x_j) √w_j built on a Gauss-Legendre grid.
//! For the smooth kernels used here the error of det(I - λA) decays
//! exponentially in the number of nodes.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::airy::airy_unchecked;
use super::quadrature::QuadratureGrid;
use crate::error::{Error, Result};

/// Exponent at which the Gaussian kernel's diagonal is treated as zero:
/// exp(-(p-q)² z²/2) < 1e-30 beyond |z| = GAUSS_CUTOFF / (p-q).
pub const GAUSS_CUTOFF: f64 = 11.75;
/// Upper end of the Airy-kernel window beyond max(s, 0).
pub const AIRY_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// K₂(x,y) = (Ai(x)Ai'(y) - Ai(y)Ai'(x)) / (x - y).
    Airy,
    /// K̂(z,z') = p/√(2π) exp(-(p²+q²)(z²+z'²)/4 + pq z z').
    GaussianAsep { p: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Airy => Ok(()),
            KernelSpec::GaussianAsep { p } => {
                if p > 0.5 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("gaussian-asep kernel needs p in (1/2, 1], got {p}")))
                }
            }
        }
    }

    /// Point evaluation. The Airy branch recomputes Ai at both arguments;
    /// matrix assembly goes through [`NystromOperator`] instead.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            KernelSpec::Airy => {
                let (ax, dax) = airy_unchecked(x);
                let (ay, day) = airy_unchecked(y);
                airy_kernel_entry(x, ax, dax, y, ay, day)
            }
            KernelSpec::GaussianAsep { p } => gaussian_entry(p, x, y),
        }
    }

    /// Finite window standing in for `(lower, ∞)`. `None` when the window is
    /// empty because the kernel is negligible on the whole half-line.
    pub fn truncated_interval(&self, lower: f64) -> Option<(f64, f64)> {
        match *self {
            KernelSpec::Airy => Some((lower, lower.max(0.0) + AIRY_CUTOFF)),
            KernelSpec::GaussianAsep { p } => {
                let reach = GAUSS_CUTOFF / (2.0 * p - 1.0);
                let lo = lower.max(-reach);
                (lo < reach).then_some((lo, reach))
            }
        }
    }
}

#[inline]
fn gaussian_entry(p: f64, x: f64, y: f64) -> f64 {
    let q = 1.0 - p;
    let norm = p / (2.0 * std::f64::consts::PI).sqrt();
    norm * (-(p * p + q * q) * (x * x + y * y) / 4.0 + p * q * x * y).exp()
}

#[inline]
fn airy_kernel_entry(x: f64, ax: f64, dax: f64, y: f64, ay: f64, day: f64) -> f64 {
    if x == y {
        dax * dax - x * ax * ax
    } else {
        (ax * day - ay * dax) / (x - y)
    }
}

/// The weighted kernel matrix on a fixed grid, with cached spectrum.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    matrix: DMatrix<f64>,
    eigenvalues: Option<Vec<f64>>,
}

impl NystromOperator {
    pub fn new(kernel: &KernelSpec, grid: &QuadratureGrid) -> Result<Self> {
        kernel.validate()?;
        let n = grid.order();
        let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        let x = &grid.nodes;
        let matrix = match *kernel {
            KernelSpec::Airy => {
                if x.iter().any(|v| v.abs() > super::airy::MAX_ABS_ARG) {
                    return Err(Error::domain("airy kernel grid leaves |x| <= 40"));
                }
                let ai: Vec<(f64, f64)> = x.iter().map(|&v| airy_unchecked(v)).collect();
                DMatrix::from_fn(n, n, |i, j| {
                    sw[i] * airy_kernel_entry(x[i], ai[i].0, ai[i].1, x[j], ai[j].0, ai[j].1) * sw[j]
                })
            }
            KernelSpec::GaussianAsep { p } => {
                DMatrix::from_fn(n, n, |i, j| sw[i] * gaussian_entry(p, x[i], x[j]) * sw[j])
            }
        };
        Ok(Self {
            matrix,
            eigenvalues: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// det(I - λA) for real λ by LU.
    pub fn det_real(&self, lambda: f64) -> f64 {
        let n = self.dim();
        let m = DMatrix::<f64>::identity(n, n) - &self.matrix * lambda;
        m.lu().determinant()
    }

    /// det(I - λA) for complex λ by LU.
    pub fn det(&self, lambda: Complex64) -> Complex64 {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            id - lambda * self.matrix[(i, j)]
        });
        m.lu().determinant()
    }

    /// Eigenvalues of the symmetric matrix A (computed once).
    pub fn eigenvalues(&mut self) -> &[f64] {
        if self.eigenvalues.is_none() {
            let eig = SymmetricEigen::new(self.matrix.clone());
            let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            self.eigenvalues = Some(v);
        }
        self.eigenvalues.as_deref().unwrap()
    }
}

/// det(I - λK) on the grid, no convergence control.
pub fn fredholm_det(kernel: &KernelSpec, grid: &QuadratureGrid, lambda: Complex64) -> Result<Complex64> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(NystromOperator::new(kernel, grid)?.det(lambda))
}

/// det(I - λK) on `interval`, accepted only if doubling `order` moves the
/// value by at most `tol`.
pub fn fredholm_det_converged(
    kernel: &KernelSpec,
    interval: (f64, f64),
    lambda: Complex64,
    order: usize,
    tol: f64,
) -> Result<Complex64> {
    let grid = QuadratureGrid::gauss_legendre(interval.0, interval.1, order)?;
    let coarse = fredholm_det(kernel, &grid, lambda)?;
    let fine = fredholm_det(kernel, &grid.doubled(), lambda)?;
    let diff = (fine - coarse).norm();
    if diff > tol {
        return Err(Error::nonconvergence(format!(
            "fredholm determinant moved by {diff:.3e} under node doubling (order {order}, tol {tol:.1e})"
        )));
    }
    Ok(fine)
}
