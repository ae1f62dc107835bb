//! Zeros of Q_n from the comrade matrix and their location relative to Ḡ.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bergman::OrthoSequence;
use crate::eigen::hessenberg_eigenvalues;
use crate::geometry::{ConvexDomain, Location};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("QR iteration did not converge for degree {0}")]
    EigenFailure(usize),
    #[error("degree {0} is outside the computed sequence")]
    DegreeOutOfRange(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSet {
    pub degree: usize,
    pub zeros: Vec<C64>,
    pub flags: Vec<Location>,
    /// Schur backward error of the balanced comrade matrix, relative to its norm.
    pub backward_error: f64,
    /// `max_j |h_{n,n-1} Q_n(z_j)| / ‖(Q_0(z_j), …, Q_{n-1}(z_j))‖`.
    pub residual: f64,
}

/// Relative tolerance (times diam L) of the boundary band.
pub const BOUNDARY_BAND: f64 = 1e-8;

pub fn zeros_of(seq: &OrthoSequence, domain: &ConvexDomain, n: usize) -> Result<ZeroSet, ZeroError> {
    if n == 0 || n > seq.n_max {
        return Err(ZeroError::DegreeOutOfRange(n));
    }
    let schur = hessenberg_eigenvalues(&seq.comrade(n)).ok_or(ZeroError::EigenFailure(n))?;
    let tol = BOUNDARY_BAND * domain.diameter();
    let zeros = schur.eigenvalues;
    let flags = zeros.iter().map(|z| domain.classify(*z, tol)).collect();
    let pivot = seq.hessenberg[n - 1][n].re;
    let residual = zeros
        .iter()
        .map(|z| {
            let q = seq.eval_all(n, *z);
            let scale = q[..n].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            pivot * q[n].norm() / scale
        })
        .fold(0.0, f64::max);
    Ok(ZeroSet {
        degree: n,
        zeros,
        flags,
        backward_error: schur.backward_error,
        residual,
    })
}

impl ZeroSet {
    pub fn count(&self, loc: Location) -> usize {
        self.flags.iter().filter(|f| **f == loc).count()
    }

    /// Zeros grouped for reporting when within `tol` of a cluster representative.
    pub fn clusters(&self, tol: f64) -> Vec<(C64, usize)> {
        let mut out: Vec<(C64, usize)> = Vec::new();
        for z in &self.zeros {
            match out.iter_mut().find(|(c, _)| (c - z).norm() <= tol) {
                Some(entry) => entry.1 += 1,
                None => out.push((*z, 1)),
            }
        }
        out
    }
}

/// Atoms of ν_{Q_n}: mass 1/n per listed zero, merged only at identical coordinates.
pub fn zero_counting_measure(zs: &ZeroSet) -> Vec<(C64, f64)> {
    let mass = 1.0 / zs.zeros.len() as f64;
    let mut atoms: Vec<(C64, f64)> = Vec::new();
    for z in &zs.zeros {
        match atoms.iter_mut().find(|(c, _)| c == z) {
            Some(a) => a.1 += mass,
            None => atoms.push((*z, mass)),
        }
    }
    atoms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{build_engine, orthonormalize, Weight};
    use crate::geometry::DomainSpec;

    fn zeros_for(spec: DomainSpec, n: usize) -> (ConvexDomain, ZeroSet) {
        let d = ConvexDomain::new(spec).unwrap();
        let s = orthonormalize(&build_engine(&d, Weight::Unit, n).unwrap(), n).unwrap();
        let z = zeros_of(&s, &d, n).unwrap();
        (d, z)
    }

    #[test]
    fn disk_zeros_at_origin() {
        for n in [1, 7, 30] {
            let (_, z) = zeros_for(DomainSpec::disk(C64::new(0.0, 0.0), 1.0), n);
            assert_eq!(z.zeros.len(), n);
            assert!(z.zeros.iter().all(|x| x.norm() < 1e-7));
            let nu = zero_counting_measure(&z);
            assert_eq!(nu.len(), 1);
            assert!((nu[0].1 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn square_zero_set_rotation_invariant() {
        let (_, z) = zeros_for(DomainSpec::regular(4, 1.0, 0.0), 21);
        for x in &z.zeros {
            let r = x * C64::i();
            let best = z.zeros.iter().map(|y| (y - r).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7, "{x}");
        }
    }

    #[test]
    fn containment_and_conjugate_symmetry() {
        for n in [5, 12, 25] {
            let (_, z) = zeros_for(DomainSpec::regular(5, 1.0, 0.0), n);
            assert_eq!(z.count(Location::Exterior), 0);
            assert!(z.backward_error < 1e-10);
            for x in &z.zeros {
                let best = z
                    .zeros
                    .iter()
                    .map(|y| (y - x.conj()).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8);
            }
        }
    }

    #[test]
    fn counting_measure_masses() {
        let zs = ZeroSet {
            degree: 2,
            zeros: vec![C64::new(0.1, 0.0), C64::new(-0.1, 0.0)],
            flags: vec![Location::Interior; 2],
            backward_error: 0.0,
            residual: 0.0,
        };
        let nu = zero_counting_measure(&zs);
        assert_eq!(nu.len(), 2);
        assert!(nu.iter().all(|a| a.1 == 0.5));
    }
}
