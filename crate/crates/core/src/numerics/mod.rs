//! Special functions, quadrature and distribution evaluators.

pub mod airy;
pub mod quadrature;
pub mod fredholm;
pub mod tracy_widom;
pub mod brownian;
pub mod laws;
