//! Potential theory on convex domains: conformal maps, Bergman orthogonal
//! polynomials, their zeros, and discrepancy of the zero distribution.

pub mod bergman;
pub mod classical;
pub mod conformal;
pub mod eigen;
pub mod experiment;
pub mod geometry;
pub mod measures;
pub mod quadrature;
pub mod zeros;

pub use num_complex::Complex64 as C64;
