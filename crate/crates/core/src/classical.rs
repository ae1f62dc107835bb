//! Faber polynomials, Chebyshev polynomials (Lawson), and the sharpness
//! construction on the disk with an attached segment.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bergman::boundary_sup;
use crate::conformal::{ExteriorMap, MapError};
use crate::geometry::ConvexDomain;
use crate::measures::{discrepancy, BoundaryGrid, BoundaryMeasure, MeasureError};

#[derive(Debug, Error, Clone)]
pub enum ClassicalError {
    #[error("Lawson iteration stalled (spread {:.3e})", .0.spread)]
    LawsonStall(Box<ChebyshevResult>),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Faber polynomials from the Laurent coefficients of Ψ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaberSequence {
    pub n_max: usize,
    pub cap: f64,
    /// `b_0, …, b_{n_max}` with `Ψ(w) = cap·w + Σ b_k w^{-k}`
    pub laurent: Vec<C64>,
    /// monomial coefficients, lowest degree first (diagnostic for moderate n)
    pub coeffs: Vec<Vec<C64>>,
}

/// `F_0 = 1`, `F_1 = (z - b_0)/cap`, and for m ≥ 2
/// `cap·F_m = (z - b_0) F_{m-1} - Σ_{k=1}^{m-1} b_k F_{m-1-k} - (m-1) b_{m-1}`.
pub fn faber(emap: &ExteriorMap, n_max: usize) -> Result<FaberSequence, MapError> {
    let (cap, laurent) = emap.laurent_coefficients(n_max + 1)?;
    let mut coeffs: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
    for m in 1..=n_max {
        let mut v = vec![C64::new(0.0, 0.0); m + 1];
        for (i, c) in coeffs[m - 1].iter().enumerate() {
            v[i + 1] += c;
            v[i] -= laurent[0] * c;
        }
        for k in 1..m {
            for (i, c) in coeffs[m - 1 - k].iter().enumerate() {
                v[i] -= laurent[k] * c;
            }
        }
        if m >= 2 {
            v[0] -= laurent[m - 1] * (m - 1) as f64;
        }
        coeffs.push(v.into_iter().map(|x| x / cap).collect());
    }
    Ok(FaberSequence {
        n_max,
        cap,
        laurent,
        coeffs,
    })
}

impl FaberSequence {
    /// `F_0(z), …, F_n(z)` by the recurrence.
    pub fn eval_all(&self, n: usize, z: C64) -> Vec<C64> {
        let b = &self.laurent;
        let mut f = Vec::with_capacity(n + 1);
        f.push(C64::new(1.0, 0.0));
        for m in 1..=n {
            let mut v = (z - b[0]) * f[m - 1];
            for k in 1..m {
                v -= b[k] * f[m - 1 - k];
            }
            if m >= 2 {
                v -= b[m - 1] * (m - 1) as f64;
            }
            f.push(v / self.cap);
        }
        f
    }

    pub fn eval(&self, n: usize, z: C64) -> C64 {
        self.eval_all(n, z)[n]
    }

    /// `F'_0(z), …, F'_n(z)`.
    pub fn eval_derivatives(&self, n: usize, z: C64) -> Vec<C64> {
        let b = &self.laurent;
        let f = self.eval_all(n, z);
        let mut d = Vec::with_capacity(n + 1);
        d.push(C64::new(0.0, 0.0));
        for m in 1..=n {
            let mut v = f[m - 1] + (z - b[0]) * d[m - 1];
            for k in 1..m {
                v -= b[k] * d[m - 1 - k];
            }
            d.push(v / self.cap);
        }
        d
    }

    /// `‖F_n‖` on Ḡ.
    pub fn sup_norm(&self, domain: &ConvexDomain, n: usize) -> f64 {
        boundary_sup(domain, |z| self.eval(n, z).norm(), 4096)
    }
}

/// `‖F'_{n+1}‖` on Ḡ for n = 0..n_max-1.
pub fn faber_derivative_norms(fs: &FaberSequence, domain: &ConvexDomain) -> Vec<f64> {
    (0..fs.n_max)
        .map(|n| boundary_sup(domain, |z| fs.eval_derivatives(n + 1, z)[n + 1].norm(), 4096))
        .collect()
}

/// Polynomial part of Φ(z)^n, by the trapezoid rule on the circle
/// `|z - c| = ρ`; monomial coefficients, lowest degree first.
pub fn faber_contour_oracle(
    emap: &ExteriorMap,
    n: usize,
    center: C64,
    radius: f64,
    samples: usize,
) -> Result<Vec<C64>, MapError> {
    let pts: Vec<C64> = (0..samples)
        .map(|j| {
            let e = C64::from_polar(1.0, TAU * j as f64 / samples as f64);
            emap.eval(center + e * radius).map(|w| w.powu(n as u32))
        })
        .collect::<Result<_, _>>()?;
    // coefficients in powers of (z - c)
    let shifted: Vec<C64> = (0..=n)
        .map(|k| {
            let acc: C64 = pts
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -TAU * (k * j) as f64 / samples as f64))
                .sum();
            acc / samples as f64 / radius.powi(k as i32)
        })
        .collect();
    // expand (z - c)^k binomially
    let mut out = vec![C64::new(0.0, 0.0); n + 1];
    for (k, a) in shifted.iter().enumerate() {
        let mut binom = 1.0;
        for i in 0..=k {
            // term C(k, i) z^i (-c)^{k-i}
            out[i] += a * binom * (-center).powu((k - i) as u32);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebyshevResult {
    pub degree: usize,
    /// `T_n = cap^n F_n + Σ_{k<n} a_k F_k`
    pub faber_coeffs: Vec<C64>,
    /// max |T_n| on the Lawson grid
    pub grid_norm: f64,
    /// sup |T_n| on the boundary, refined
    pub norm: f64,
    /// weighted least-squares error: a lower bound for the grid minimax error
    pub lower_bound: f64,
    pub spread: f64,
    pub iterations: usize,
    /// grid max error per iteration
    pub history: Vec<f64>,
    /// weighted least-squares error per iteration
    pub lower_history: Vec<f64>,
}

const LAWSON_TOL: f64 = 1e-6;
const LAWSON_MAX_ITER: usize = 20_000;
/// iterations without a 1% reduction of the spread that count as a stall
const LAWSON_PATIENCE: usize = 2_000;
/// weights below this fraction of the largest are dropped from the grid
const LAWSON_PRUNE: f64 = 1e-18;

/// Monic best sup-norm approximation on L by Lawson's algorithm.
pub fn chebyshev(
    domain: &ConvexDomain,
    emap: &ExteriorMap,
    fs: &FaberSequence,
    n: usize,
) -> Result<ChebyshevResult, ClassicalError> {
    assert!(n >= 1 && n <= fs.n_max);
    let m = 512.max(32 * n);
    let mut pts: Vec<C64> = (0..m)
        .map(|j| emap.eval_inverse(C64::from_polar(1.0, TAU * j as f64 / m as f64)))
        .collect::<Result<_, _>>()?;
    if let Some(v) = domain.vertices() {
        pts.extend_from_slice(v);
    }
    let capn = fs.cap.powi(n as i32);
    let vals: Vec<Vec<C64>> = pts.iter().map(|z| fs.eval_all(n, *z)).collect();
    let mut active: Vec<usize> = (0..pts.len()).collect();
    let mut w = vec![1.0 / pts.len() as f64; pts.len()];
    let mut err = vec![0.0; pts.len()];
    let mut best: Option<ChebyshevResult> = None;
    let mut history = Vec::new();
    let mut lower_history = Vec::new();
    let (mut best_spread, mut since) = (f64::INFINITY, 0usize);
    let mut it = 0;
    loop {
        // weighted normal equations in the Faber basis
        let mut g = DMatrix::<C64>::zeros(n, n);
        let mut rhs = DVector::<C64>::zeros(n);
        for &i in &active {
            let v = &vals[i];
            let t = v[n] * capn;
            for k in 0..n {
                let wk = v[k].conj() * w[i];
                rhs[k] -= wk * t;
                for l in 0..n {
                    g[(k, l)] += wk * v[l];
                }
            }
        }
        let coef = match g.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => g.svd(true, true).solve(&rhs, 1e-15).expect("least squares"),
        };
        let mut emax: f64 = 0.0;
        let mut lower = 0.0;
        for i in 0..pts.len() {
            let v = &vals[i];
            let mut e = v[n] * capn;
            for k in 0..n {
                e += v[k] * coef[k];
            }
            err[i] = e.norm();
            emax = emax.max(err[i]);
            lower += w[i] * err[i] * err[i];
        }
        let lower = lower.sqrt();
        let spread = (emax - lower) / emax;
        history.push(emax);
        lower_history.push(lower);
        if best.as_ref().is_none_or(|b| emax <= b.grid_norm) {
            best = Some(ChebyshevResult {
                degree: n,
                faber_coeffs: coef.iter().copied().collect(),
                grid_norm: emax,
                norm: 0.0,
                lower_bound: lower,
                spread,
                iterations: it + 1,
                history: vec![],
                lower_history: vec![],
            });
        }
        if spread < 0.99 * best_spread {
            best_spread = spread;
            since = 0;
        } else {
            since += 1;
        }
        it += 1;
        let done = spread < LAWSON_TOL;
        if done || since > LAWSON_PATIENCE || it >= LAWSON_MAX_ITER {
            let mut r = best.expect("iterate");
            r.iterations = it;
            r.lower_bound = r.lower_bound.max(lower);
            r.spread = (r.grid_norm - r.lower_bound) / r.grid_norm;
            let coeffs = r.faber_coeffs.clone();
            r.norm = boundary_sup(
                domain,
                |z| {
                    let f = fs.eval_all(n, z);
                    let mut t = f[n] * capn;
                    for k in 0..n {
                        t += coeffs[k] * f[k];
                    }
                    t.norm()
                },
                4096,
            )
            .max(r.grid_norm);
            r.history = history;
            r.lower_history = lower_history;
            if r.spread < LAWSON_TOL {
                return Ok(r);
            }
            return Err(ClassicalError::LawsonStall(Box::new(r)));
        }
        let tot: f64 = active.iter().map(|&i| w[i] * err[i]).sum();
        let mut wmax: f64 = 0.0;
        for &i in &active {
            w[i] *= err[i] / tot;
            wmax = wmax.max(w[i]);
        }
        active.retain(|&i| {
            let keep = w[i] > LAWSON_PRUNE * wmax;
            if !keep {
                w[i] = 0.0;
            }
            keep
        });
    }
}

/// `V_δ = 𝔻̄ ∪ [1, 1+δ]` with its equilibrium data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessInstance {
    pub delta: f64,
    pub capacity: f64,
    /// `J(1+δ)` for the Joukowski map `J(z) = (z + 1/z)/2`
    pub b: f64,
    pub interval_mass: f64,
    /// radial projection of μ_δ onto the unit circle
    pub tau: BoundaryMeasure,
    /// normalized arclength on the circle
    pub mu: BoundaryMeasure,
}

pub fn sharpness_capacity(delta: f64) -> f64 {
    1.0 + delta * delta / (4.0 * (1.0 + delta))
}

pub fn sharpness_capacity_alt(delta: f64) -> f64 {
    0.25 * (3.0 + delta + 1.0 / (1.0 + delta))
}

/// The circle part of μ_δ pulls back the arcsine law of `[-1, b]` under J;
/// the segment carries the rest and projects onto an atom at z = 1.
pub fn sharpness_instance(delta: f64) -> SharpnessInstance {
    assert!(delta > 0.0 && delta <= 1.0);
    let b = 0.5 * (1.0 + delta + 1.0 / (1.0 + delta));
    let arcsine = |x: f64| 2.0 / PI * ((x + 1.0) / (b + 1.0)).clamp(0.0, 1.0).sqrt().asin();
    let f1 = arcsine(1.0);
    let interval_mass = 2.0 / PI * (delta / (2.0 + delta)).asin();
    let grid = BoundaryGrid::circle(65_536, &[]);
    let cum: Vec<f64> = grid
        .s
        .iter()
        .map(|&t| {
            if t <= PI {
                0.5 * (f1 - arcsine(t.cos()))
            } else {
                0.5 * f1 + 0.5 * arcsine(t.cos())
            }
        })
        .collect();
    let tau = BoundaryMeasure::new(TAU, grid.s.clone(), cum, vec![(0.0, interval_mass)]);
    let mu = BoundaryMeasure::new(TAU, grid.s.clone(), grid.s.iter().map(|t| t / TAU).collect(), vec![]);
    SharpnessInstance {
        delta,
        capacity: 0.5 * (b + 1.0),
        b,
        interval_mass,
        tau,
        mu,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessRecord {
    pub delta: f64,
    pub d: f64,
    /// the bound δ²/4 ≥ log cap V_δ ≥ sup U(μ - τ_δ)
    pub eps: f64,
    pub log_cap: f64,
    pub ratio: f64,
}

pub fn sharpness_check(inst: &SharpnessInstance) -> Result<SharpnessRecord, ClassicalError> {
    let d = discrepancy(&inst.mu, &inst.tau)?.d;
    let eps = 0.25 * inst.delta * inst.delta;
    Ok(SharpnessRecord {
        delta: inst.delta,
        d,
        eps,
        log_cap: inst.capacity.ln(),
        ratio: d / eps.sqrt(),
    })
}
