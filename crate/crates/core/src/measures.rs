//! Boundary measures (equilibrium, balayage), arc discrepancy, and the
//! potential gap ε.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bergman::OrthoSequence;
use crate::conformal::{disk_harmonic_measure, ExteriorMap, InteriorMap, MapError};
use crate::geometry::{ConvexDomain, Location};
use crate::quadrature::GaussRule;
use crate::zeros::ZeroSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("zero {0} lies outside the closed domain")]
    ExteriorZero(C64),
    #[error("measures live on different grids")]
    GridMismatch,
    #[error("potential evaluated on the support at {0}")]
    SingularEvaluation(C64),
    #[error("interior map required for this measure")]
    MissingInteriorMap,
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Arc-length grid on L with the boundary correspondences of both maps.
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub perimeter: f64,
    /// `s[0] = 0 < … < s[last] = |L|`
    pub s: Vec<f64>,
    /// unwrapped arg Φ at each s; `theta_ext[last] = theta_ext[0] + 2π`
    pub theta_ext: Vec<f64>,
    pub theta_int: Option<Vec<f64>>,
}

fn close(a: f64, b: f64, per: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * per
}

impl BoundaryGrid {
    /// Union of the boundary tables of both maps.
    pub fn from_maps(emap: &ExteriorMap, imap: Option<&InteriorMap>) -> Self {
        let per = emap.domain().perimeter();
        let mut extra: Vec<f64> = imap.map(|m| m.table().s.clone()).unwrap_or_default();
        extra.retain(|&s| s > 0.0 && s < per);
        let base = BoundaryGrid {
            perimeter: per,
            s: emap.table().s.clone(),
            theta_ext: emap.table().theta.clone(),
            theta_int: imap.map(|m| {
                emap.table()
                    .s
                    .iter()
                    .map(|&s| if s >= per { m.theta_at(0.0) + TAU } else { m.theta_at(s) })
                    .collect()
            }),
        };
        base.refined(emap, imap, &extra)
    }

    /// Uniform grid on a circle of circumference 2π (exterior map = identity).
    pub fn circle(count: usize, extra: &[f64]) -> Self {
        let mut s: Vec<f64> = (0..=count).map(|j| TAU * j as f64 / count as f64).collect();
        s.extend(extra.iter().map(|x| x.rem_euclid(TAU)));
        s.sort_by(f64::total_cmp);
        s.dedup_by(|a, b| close(*a, *b, TAU));
        *s.last_mut().expect("grid") = TAU;
        BoundaryGrid {
            perimeter: TAU,
            theta_ext: s.clone(),
            theta_int: Some(s.clone()),
            s,
        }
    }

    /// Insert extra parameters, evaluating both correspondences there.
    pub fn refined(&self, emap: &ExteriorMap, imap: Option<&InteriorMap>, extra: &[f64]) -> Self {
        let per = self.perimeter;
        let mut new: Vec<f64> = extra
            .iter()
            .map(|x| x.rem_euclid(per))
            .filter(|x| *x > 0.0 && *x < per)
            .collect();
        new.sort_by(f64::total_cmp);
        new.dedup();
        let mut s = Vec::with_capacity(self.s.len() + new.len());
        let mut te = Vec::with_capacity(s.capacity());
        let mut ti = self.theta_int.as_ref().map(|_| Vec::with_capacity(s.capacity()));
        let (mut i, mut j) = (0, 0);
        while i < self.s.len() || j < new.len() {
            let take_old = j >= new.len() || (i < self.s.len() && self.s[i] <= new[j]);
            if take_old {
                if !s.last().is_some_and(|l: &f64| close(*l, self.s[i], per)) {
                    s.push(self.s[i]);
                    te.push(self.theta_ext[i]);
                    if let (Some(t), Some(old)) = (ti.as_mut(), self.theta_int.as_ref()) {
                        t.push(old[i]);
                    }
                }
                i += 1;
            } else {
                let x = new[j];
                let dup = s.last().is_some_and(|l: &f64| close(*l, x, per))
                    || (i < self.s.len() && close(self.s[i], x, per));
                if !dup {
                    s.push(x);
                    te.push(emap.theta_at(x));
                    if let (Some(t), Some(m)) = (ti.as_mut(), imap) {
                        t.push(m.theta_at(x));
                    }
                }
                j += 1;
            }
        }
        BoundaryGrid {
            perimeter: per,
            s,
            theta_ext: te,
            theta_int: ti,
        }
    }

    /// Grid for a zero set: atom sites of boundary zeros and 32 Poisson
    /// quantile points around the image of each interior zero.
    pub fn for_zeros(
        &self,
        emap: &ExteriorMap,
        imap: &InteriorMap,
        zs: &ZeroSet,
    ) -> Result<Self, MeasureError> {
        let mut extra = Vec::new();
        for (z, flag) in zs.zeros.iter().zip(&zs.flags) {
            match flag {
                Location::Exterior => return Err(MeasureError::ExteriorZero(*z)),
                Location::Boundary => extra.push(imap.domain().nearest_param(*z).map_err(MapError::from)?),
                Location::Interior => {
                    let w = imap.eval(*z)?;
                    let rho = w.norm();
                    let alpha = w.arg();
                    let k = (1.0 - rho) / (1.0 + rho);
                    for q in 0..32 {
                        let u = (q as f64 + 0.5) / 32.0;
                        let t = alpha + 2.0 * (k * (PI * (u - 0.5)).tan()).atan();
                        extra.push(imap.s_of_theta(t));
                    }
                }
            }
        }
        Ok(self.refined(emap, Some(imap), &extra))
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    fn index_of(&self, s: f64) -> usize {
        let i = self.s.partition_point(|&x| x < s);
        if i < self.s.len() && close(self.s[i], s, self.perimeter) {
            return i;
        }
        if i > 0 && close(self.s[i - 1], s, self.perimeter) {
            return i - 1;
        }
        i.min(self.s.len() - 1)
    }
}

/// Finite measure on L: continuous cumulative on the grid plus atoms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub perimeter: f64,
    pub grid: Vec<f64>,
    /// continuous mass of `[0, grid[i]]`
    pub cumulative: Vec<f64>,
    /// (s, mass), sorted by s
    pub atoms: Vec<(f64, f64)>,
    pub total: f64,
}

impl BoundaryMeasure {
    pub fn new(perimeter: f64, grid: Vec<f64>, cumulative: Vec<f64>, mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = cumulative.last().copied().unwrap_or(0.0) + atoms.iter().map(|a| a.1).sum::<f64>();
        BoundaryMeasure {
            perimeter,
            grid,
            cumulative,
            atoms,
            total,
        }
    }

    /// Continuous cumulative at any s (monotone cubic interpolation).
    pub fn cumulative_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.perimeter);
        let i = self.grid.partition_point(|&x| x <= s);
        if i == 0 {
            return self.cumulative[0];
        }
        if i >= self.grid.len() {
            return *self.cumulative.last().expect("grid");
        }
        let j = i - 1;
        let d = pchip_slopes_at(&self.grid, &self.cumulative, j);
        hermite(&self.grid, &self.cumulative, j, d, s)
    }

    /// Mass of the closed arc from `start` running `len` forward (len < |L|).
    pub fn arc_mass(&self, start: f64, len: f64) -> f64 {
        let per = self.perimeter;
        let a = start.rem_euclid(per);
        let b = a + len;
        let atoms_in = |lo: f64, hi: f64| -> f64 {
            self.atoms
                .iter()
                .filter(|(s, _)| *s >= lo && *s <= hi)
                .map(|a| a.1)
                .sum()
        };
        if b <= per {
            self.cumulative_at(b) - self.cumulative_at(a) + atoms_in(a, b)
        } else {
            let b = b - per;
            let cont_total = *self.cumulative.last().expect("grid");
            cont_total - self.cumulative_at(a) + self.cumulative_at(b) + atoms_in(a, per) + atoms_in(0.0, b)
        }
    }
}

/// Fritsch–Carlson slopes at nodes j and j + 1.
fn pchip_slopes_at(x: &[f64], y: &[f64], j: usize) -> (f64, f64) {
    let n = x.len();
    let delta = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    let slope = |i: usize| -> f64 {
        if n == 2 {
            return delta(0);
        }
        if i == 0 {
            return end_slope(x[1] - x[0], x[2] - x[1], delta(0), delta(1));
        }
        if i == n - 1 {
            return end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta(n - 2), delta(n - 3));
        }
        let (d0, d1) = (delta(i - 1), delta(i));
        if d0 * d1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let w1 = 2.0 * h1 + h0;
        let w2 = h1 + 2.0 * h0;
        (w1 + w2) / (w1 / d0 + w2 / d1)
    };
    (slope(j), slope(j + 1))
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

fn hermite(x: &[f64], y: &[f64], j: usize, d: (f64, f64), s: f64) -> f64 {
    let h = x[j + 1] - x[j];
    let t = (s - x[j]) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y[j]
        + (t3 - 2.0 * t2 + t) * h * d.0
        + (-2.0 * t3 + 3.0 * t2) * y[j + 1]
        + (t3 - t2) * h * d.1
}

fn hermite_slope(x: &[f64], y: &[f64], j: usize, d: (f64, f64), s: f64) -> f64 {
    let h = x[j + 1] - x[j];
    let t = (s - x[j]) / h;
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y[j] + (3.0 * t2 - 4.0 * t + 1.0) * h * d.0 + (-6.0 * t2 + 6.0 * t) * y[j + 1]
        + (3.0 * t2 - 2.0 * t) * h * d.1)
        / h
}

/// μ: `C(s) = (θ(s) - θ(0)) / 2π`.
pub fn equilibrium_boundary_measure(grid: &BoundaryGrid) -> BoundaryMeasure {
    let t0 = grid.theta_ext[0];
    let cum = grid.theta_ext.iter().map(|t| (t - t0) / TAU).collect();
    BoundaryMeasure::new(grid.perimeter, grid.s.clone(), cum, vec![])
}

/// τ_n: `(1/n) Σ ω(z_j, ·, G)` with boundary zeros as atoms.
pub fn balayage_measure(
    imap: &InteriorMap,
    zs: &ZeroSet,
    grid: &BoundaryGrid,
) -> Result<BoundaryMeasure, MeasureError> {
    let ti = grid.theta_int.as_ref().ok_or(MeasureError::MissingInteriorMap)?;
    let n = zs.zeros.len() as f64;
    let mut ws = Vec::new();
    let mut atoms = Vec::new();
    for (z, flag) in zs.zeros.iter().zip(&zs.flags) {
        match flag {
            Location::Exterior => return Err(MeasureError::ExteriorZero(*z)),
            Location::Boundary => {
                let s = imap.domain().nearest_param(*z).map_err(MapError::from)?;
                atoms.push((grid.s[grid.index_of(s)], 1.0 / n));
            }
            Location::Interior => ws.push(imap.eval(*z)?),
        }
    }
    let t0 = ti[0];
    let last = grid.len() - 1;
    let cum = ti
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i == 0 {
                return 0.0;
            }
            let frac = if i == last {
                ws.len() as f64
            } else {
                ws.iter().map(|w| disk_harmonic_measure(*w, t0, t - t0)).sum::<f64>()
            };
            frac / n
        })
        .collect();
    Ok(BoundaryMeasure::new(grid.perimeter, grid.s.clone(), cum, atoms))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub d: f64,
    /// arc (start, end) in arc length, running forward; may wrap
    pub arc: (f64, f64),
    pub grid_size: usize,
    pub atoms: usize,
}

/// `D[a - b] = sup over subarcs |(a - b)(J)|`.
pub fn discrepancy(a: &BoundaryMeasure, b: &BoundaryMeasure) -> Result<DiscrepancyReport, MeasureError> {
    if a.grid.len() != b.grid.len() || a.grid.iter().zip(&b.grid).any(|(x, y)| x != y) {
        return Err(MeasureError::GridMismatch);
    }
    let mut atoms: Vec<(f64, f64)> = a
        .atoms
        .iter()
        .copied()
        .chain(b.atoms.iter().map(|&(s, m)| (s, -m)))
        .collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    // coincident atoms jump together; cancelling pairs leave no trace
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (s, m) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += m,
            _ => merged.push((s, m)),
        }
    }
    merged.retain(|a| a.1 != 0.0);
    let atoms = merged;
    // signed cumulative at every grid point, both one-sided values at atoms
    let mut vals: Vec<(f64, f64)> = Vec::with_capacity(a.grid.len() + 2 * atoms.len());
    vals.push((0.0, 0.0));
    let mut jump = 0.0;
    let mut k = 0;
    for (i, &s) in a.grid.iter().enumerate() {
        // atoms strictly between grid points use the interpolated cumulative
        while k < atoms.len() && atoms[k].0 < s {
            let (site, mass) = atoms[k];
            let cont = a.cumulative_at(site) - b.cumulative_at(site);
            vals.push((site, cont + jump));
            jump += mass;
            vals.push((site, cont + jump));
            k += 1;
        }
        let cont = a.cumulative[i] - b.cumulative[i];
        vals.push((s, cont + jump));
        let mut here = 0.0;
        while k < atoms.len() && atoms[k].0 == s {
            here += atoms[k].1;
            k += 1;
        }
        if here != 0.0 {
            jump += here;
            vals.push((s, cont + jump));
        }
    }
    let total = a.total - b.total;
    let (mut imax, mut imin) = (0, 0);
    for (i, v) in vals.iter().enumerate() {
        if v.1 > vals[imax].1 {
            imax = i;
        }
        if v.1 < vals[imin].1 {
            imin = i;
        }
    }
    let spread = vals[imax].1 - vals[imin].1;
    let wrap = (total - spread).abs().max((total + spread).abs());
    let (lo, hi) = if imin <= imax { (imin, imax) } else { (imax, imin) };
    let (d, arc) = if spread >= wrap {
        (spread, (vals[lo].0, vals[hi].0))
    } else {
        (wrap, (vals[hi].0, vals[lo].0 + a.perimeter))
    };
    Ok(DiscrepancyReport {
        d,
        arc,
        grid_size: a.grid.len(),
        atoms: atoms.len(),
    })
}

/// Points on the level curve `|Φ| = 1 + 1e-6` at `count` uniform angles.
#[derive(Clone, Debug)]
pub struct OffsetCurve {
    pub radius: f64,
    pub theta: Vec<f64>,
    pub z: Vec<C64>,
}

pub const OFFSET: f64 = 1e-6;

pub fn offset_curve(emap: &ExteriorMap, count: usize) -> Result<OffsetCurve, MeasureError> {
    let radius = 1.0 + OFFSET;
    let theta: Vec<f64> = (0..count).map(|j| TAU * j as f64 / count as f64).collect();
    let z = theta
        .iter()
        .map(|t| emap.eval_inverse(C64::from_polar(radius, *t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OffsetCurve { radius, theta, z })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialGapReport {
    pub epsilon: f64,
    pub theta: f64,
    pub z: C64,
    pub grid_size: usize,
    pub log_phi: f64,
    pub log_q: f64,
    pub log_lambda: f64,
    pub n_log_cap: f64,
}

/// `U(μ - τ_n, z) = (1/n) log(|Q_n(z)| / (λ_n cap^n |Φ(z)|^n))` on the offset curve.
fn gap_at(seq: &OrthoSequence, n: usize, log_cap: f64, z: C64, log_phi: f64) -> f64 {
    let q = seq.eval(n, z).norm().ln();
    (q - seq.log_lambda[n] - n as f64 * log_cap - n as f64 * log_phi) / n as f64
}

pub fn potential_gap(
    seq: &OrthoSequence,
    n: usize,
    emap: &ExteriorMap,
    curve: &OffsetCurve,
) -> Result<PotentialGapReport, MeasureError> {
    let log_cap = emap.capacity().ln();
    let log_phi = curve.radius.ln();
    let vals: Vec<f64> = curve.z.iter().map(|z| gap_at(seq, n, log_cap, *z, log_phi)).collect();
    let m = vals.len();
    let mut best = 0;
    for i in 1..m {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    // golden-section refinement around the best sample
    let h = TAU / m as f64;
    let f = |t: f64| -> Result<f64, MeasureError> {
        let z = emap.eval_inverse(C64::from_polar(curve.radius, t))?;
        Ok(gap_at(seq, n, log_cap, z, log_phi))
    };
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (curve.theta[best] - h, curve.theta[best] + h);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..30 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (mut t, mut v) = (curve.theta[best], vals[best]);
    if f1 > v {
        t = x1;
        v = f1;
    }
    if f2 > v {
        t = x2;
        v = f2;
    }
    let z = emap.eval_inverse(C64::from_polar(curve.radius, t))?;
    Ok(PotentialGapReport {
        epsilon: v.max(0.0),
        theta: t,
        z,
        grid_size: m,
        log_phi,
        log_q: seq.eval(n, z).norm().ln(),
        log_lambda: seq.log_lambda[n],
        n_log_cap: n as f64 * log_cap,
    })
}

/// `U(m, z) = -∫ log|z - ζ| dm(ζ)` by Gauss quadrature of the interpolated
/// density on every grid cell plus the atom terms.
pub fn potential_of_measure(
    m: &BoundaryMeasure,
    domain: &ConvexDomain,
    z: C64,
) -> Result<f64, MeasureError> {
    let tol = 1e-12 * domain.diameter();
    if domain.classify(z, tol) == Location::Boundary {
        return Err(MeasureError::SingularEvaluation(z));
    }
    let g = GaussRule::legendre(8);
    let mut acc = 0.0;
    let (x, y) = (&m.grid, &m.cumulative);
    for j in 0..x.len() - 1 {
        let d = pchip_slopes_at(x, y, j);
        acc += g.integrate(x[j], x[j + 1], |s| {
            let dens = hermite_slope(x, y, j, d, s);
            -dens * (z - domain.boundary_point(s).z).norm().ln()
        });
    }
    for (s, mass) in &m.atoms {
        let r = (z - domain.boundary_point(*s).z).norm();
        if r <= tol {
            return Err(MeasureError::SingularEvaluation(z));
        }
        acc -= mass * r.ln();
    }
    Ok(acc)
}
