//! Bergman orthonormal polynomials by Arnoldi on a degree-exact area quadrature.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexDomain, DomainSpec};
use crate::quadrature::unit_rule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrthoError {
    #[error("normalization pivot vanished at degree {0}")]
    BreakdownAtDegree(usize),
    #[error("quadrature budget exceeded: {0} nodes")]
    QuadratureBudgetExceeded(usize),
    #[error("degree {requested} exceeds engine capacity {available}")]
    DegreeTooHigh { requested: usize, available: usize },
}

/// Area weight `h`: either 1 or `c·dist(z, L)^m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weight {
    #[default]
    Unit,
    DistPower {
        m: f64,
        #[serde(default = "unit_constant")]
        c: f64,
    },
}

fn unit_constant() -> f64 {
    1.0
}

impl Weight {
    fn exponent(&self) -> f64 {
        match self {
            Weight::Unit => 0.0,
            Weight::DistPower { m, .. } => *m,
        }
    }

    fn constant(&self) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::DistPower { c, .. } => *c,
        }
    }
}

const NODE_BUDGET: usize = 5_000_000;

/// Weighted quadrature on G: `∫_G f h dm ≈ Σ w_i f(z_i)`.
#[derive(Clone, Debug)]
pub struct InnerProductEngine {
    domain: ConvexDomain,
    weight: Weight,
    n_max: usize,
    degree: usize,
    nodes: Vec<C64>,
    weights: Vec<f64>,
}

pub fn build_engine(
    domain: &ConvexDomain,
    weight: Weight,
    n_max: usize,
) -> Result<InnerProductEngine, OrthoError> {
    InnerProductEngine::new(domain, weight, n_max)
}

impl InnerProductEngine {
    pub fn new(domain: &ConvexDomain, weight: Weight, n_max: usize) -> Result<Self, OrthoError> {
        let m = weight.exponent();
        assert!(m >= 0.0, "weight exponent must be nonnegative");
        let degree = 2 * n_max + 2;
        // Gauss points per direction; the extra points absorb a non-integer exponent
        let extra = if m == 0.0 { 0 } else { m.ceil() as usize + 4 };
        let npts = degree / 2 + 1 + extra;
        // every rule is at least one npts × npts product
        if npts * npts > NODE_BUDGET {
            return Err(OrthoError::QuadratureBudgetExceeded(npts * npts));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match domain.spec() {
            DomainSpec::Polygon { .. } => {
                let v = domain.vertices().expect("polygon");
                if m == 0.0 {
                    polygon_unit(v, domain.centroid(), npts, &mut nodes, &mut weights);
                } else {
                    polygon_dist(v, m, npts, &mut nodes, &mut weights);
                }
            }
            DomainSpec::Disk { center, radius } => {
                let c = C64::new(center[0], center[1]);
                polar(npts, degree + 2, m, &mut nodes, &mut weights, |p| c + p * *radius, radius * radius);
                if m > 0.0 {
                    let s = radius.powf(m);
                    weights.iter_mut().for_each(|w| *w *= s);
                }
            }
            DomainSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let c = C64::new(center[0], center[1]);
                let rot = C64::from_polar(1.0, *rotation);
                let map = |p: C64| c + rot * C64::new(a * p.re, b * p.im);
                polar(npts, degree + 2, 0.0, &mut nodes, &mut weights, map, a * b);
                if m > 0.0 {
                    // no exact product rule here: multiply by the true distance
                    for (z, w) in nodes.iter().zip(weights.iter_mut()) {
                        let d = domain.dist_to_boundary(*z).unwrap_or(0.0);
                        *w *= d.powf(m);
                    }
                }
            }
        }
        if nodes.len() > NODE_BUDGET {
            return Err(OrthoError::QuadratureBudgetExceeded(nodes.len()));
        }
        let c = weight.constant();
        if c != 1.0 {
            weights.iter_mut().for_each(|w| *w *= c);
        }
        Ok(InnerProductEngine {
            domain: domain.clone(),
            weight,
            n_max,
            degree,
            nodes,
            weights,
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨f, g⟩ = Σ w f conj(g)` on node values.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ((a, b), w) in f.iter().zip(g).zip(&self.weights) {
            acc += a * b.conj() * *w;
        }
        acc
    }

    pub fn norm_sqr(&self, f: &[C64]) -> f64 {
        let mut acc = 0.0;
        for (a, w) in f.iter().zip(&self.weights) {
            acc += a.norm_sqr() * w;
        }
        acc
    }

    /// `⟨p, q⟩` for two functions of z.
    pub fn inner_fn<F: Fn(C64) -> C64, G: Fn(C64) -> C64>(&self, f: F, g: G) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*z) * g(*z).conj() * *w;
        }
        acc
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Collapsed (Duffy) rule on the triangle with apex `p` and base `a → b`:
/// the point is `p + r·(a + t(b - a) - p)`, the weight in r is `r^ra (1-r)^rb`.
/// `tfac(t)` multiplies the weight along the base direction.
#[allow(clippy::too_many_arguments)]
fn collapsed<T: Fn(f64) -> f64>(
    p: C64,
    a: C64,
    b: C64,
    n: usize,
    ra: f64,
    rb: f64,
    scale: f64,
    tfac: T,
    nodes: &mut Vec<C64>,
    weights: &mut Vec<f64>,
) {
    let jac = ((a - p).conj() * (b - p)).im.abs();
    if jac == 0.0 {
        return;
    }
    let rr = unit_rule(n, ra, rb);
    let tr = unit_rule(n, 0.0, 0.0);
    for (r, wr) in rr.nodes.iter().zip(&rr.weights) {
        for (t, wt) in tr.nodes.iter().zip(&tr.weights) {
            let e = a + (b - a) * *t;
            nodes.push(p + (e - p) * *r);
            weights.push(jac * wr * wt * tfac(*t) * scale);
        }
    }
}

fn polygon_unit(v: &[C64], g: C64, n: usize, nodes: &mut Vec<C64>, weights: &mut Vec<f64>) {
    for k in 0..v.len() {
        collapsed(g, v[k], v[(k + 1) % v.len()], n, 1.0, 0.0, 1.0, |_| 1.0, nodes, weights);
    }
}

/// Signed distance to the line through edge k, positive inside (CCW polygon).
fn line_dist(v: &[C64], k: usize, z: C64) -> f64 {
    let a = v[k];
    let e = v[(k + 1) % v.len()] - a;
    (e.conj() * (z - a)).im / e.norm()
}

/// Sutherland–Hodgman clip of a convex polygon by `f(z) ≥ 0` with affine f.
fn clip<F: Fn(C64) -> f64>(poly: &[C64], f: F) -> Vec<C64> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Weight dist(z, L)^m: inside a convex polygon the distance equals the
/// distance to the nearest edge line, so on the cell of edge k it is the
/// affine function `line_dist(k, ·)`, and each fan triangle of the cell gets a
/// rule built around its zero set.
fn polygon_dist(v: &[C64], m: f64, n: usize, nodes: &mut Vec<C64>, weights: &mut Vec<f64>) {
    let nv = v.len();
    let scale = v
        .iter()
        .flat_map(|a| v.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let on_line = 1e-13 * scale;
    for k in 0..nv {
        let mut cell = v.to_vec();
        for j in (0..nv).filter(|&j| j != k) {
            cell = clip(&cell, |z| line_dist(v, j, z) - line_dist(v, k, z));
            if cell.len() < 3 {
                break;
            }
        }
        if cell.len() < 3 {
            continue;
        }
        let g = cell.iter().sum::<C64>() / cell.len() as f64;
        let dg = line_dist(v, k, g);
        for i in 0..cell.len() {
            let (p, q) = (cell[i], cell[(i + 1) % cell.len()]);
            let (dp, dq) = (line_dist(v, k, p).max(0.0), line_dist(v, k, q).max(0.0));
            match (dp <= on_line, dq <= on_line) {
                (true, true) => {
                    collapsed(g, p, q, n, 1.0, m, dg.powf(m), |_| 1.0, nodes, weights);
                }
                (true, false) => {
                    let f = |t: f64| ((1.0 - t) * dg + t * dq).powf(m);
                    collapsed(p, g, q, n, 1.0 + m, 0.0, 1.0, f, nodes, weights);
                }
                (false, true) => {
                    let f = |t: f64| ((1.0 - t) * dp + t * dg).powf(m);
                    collapsed(q, p, g, n, 1.0 + m, 0.0, 1.0, f, nodes, weights);
                }
                (false, false) => {
                    let start = nodes.len();
                    collapsed(g, p, q, n, 1.0, 0.0, 1.0, |_| 1.0, nodes, weights);
                    for i in start..nodes.len() {
                        weights[i] *= line_dist(v, k, nodes[i]).max(0.0).powf(m);
                    }
                }
            }
        }
    }
}

/// Polar product rule on the unit disk pushed through `map` (area Jacobian
/// `jac`); radial weight `ρ(1-ρ)^m`, trapezoid in angle.
fn polar<F: Fn(C64) -> C64>(
    n: usize,
    nt: usize,
    m: f64,
    nodes: &mut Vec<C64>,
    weights: &mut Vec<f64>,
    map: F,
    jac: f64,
) {
    let rr = unit_rule(n, 1.0, m);
    for j in 0..nt {
        let e = C64::from_polar(1.0, TAU * (j as f64 + 0.5) / nt as f64);
        for (r, w) in rr.nodes.iter().zip(&rr.weights) {
            nodes.push(map(e * *r));
            weights.push(w * TAU / nt as f64 * jac);
        }
    }
}

/// Recurrence data of the orthonormal sequence: `z Q_k = Σ_{j ≤ k+1} h[k][j] Q_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthoSequence {
    pub n_max: usize,
    pub q0: f64,
    /// Hessenberg columns; `hessenberg[k]` has k + 2 entries.
    pub hessenberg: Vec<Vec<C64>>,
    pub log_lambda: Vec<f64>,
    pub weight: Weight,
    pub quadrature_degree: usize,
    pub domain: DomainSpec,
}

/// Relative size below which a Hessenberg entry is set to zero.
const FLUSH: f64 = 1e-13;
/// Relative normalization pivot signalling breakdown.
const PIVOT: f64 = 1e-13;

pub fn orthonormalize(engine: &InnerProductEngine, n: usize) -> Result<OrthoSequence, OrthoError> {
    if n > engine.n_max {
        return Err(OrthoError::DegreeTooHigh {
            requested: n,
            available: engine.n_max,
        });
    }
    let nodes = &engine.nodes;
    let q0 = 1.0 / engine.total_mass().sqrt();
    let mut basis: Vec<Vec<C64>> = vec![vec![C64::new(q0, 0.0); nodes.len()]];
    let mut hessenberg = Vec::with_capacity(n);
    let mut log_lambda = vec![q0.ln()];
    for k in 0..n {
        let mut v: Vec<C64> = basis[k].iter().zip(nodes).map(|(q, z)| q * z).collect();
        let scale = engine.norm_sqr(&v).sqrt();
        let mut h = vec![C64::new(0.0, 0.0); k + 2];
        for _pass in 0..2 {
            for (j, qj) in basis.iter().enumerate() {
                let c = engine.inner(&v, qj);
                h[j] += c;
                for (x, q) in v.iter_mut().zip(qj) {
                    *x -= c * q;
                }
            }
        }
        let pivot = engine.norm_sqr(&v).sqrt();
        if !(pivot > PIVOT * scale) {
            return Err(OrthoError::BreakdownAtDegree(k + 1));
        }
        for x in h.iter_mut().take(k + 1) {
            if x.norm() < FLUSH * scale {
                *x = C64::new(0.0, 0.0);
            }
        }
        h[k + 1] = C64::new(pivot, 0.0);
        v.iter_mut().for_each(|x| *x /= pivot);
        basis.push(v);
        log_lambda.push(log_lambda[k] - pivot.ln());
        hessenberg.push(h);
    }
    Ok(OrthoSequence {
        n_max: n,
        q0,
        hessenberg,
        log_lambda,
        weight: engine.weight,
        quadrature_degree: engine.degree,
        domain: engine.domain.spec().clone(),
    })
}

impl OrthoSequence {
    pub fn lambda(&self, n: usize) -> f64 {
        self.log_lambda[n].exp()
    }

    /// `Q_0(z), …, Q_n(z)` by the recurrence.
    pub fn eval_all(&self, n: usize, z: C64) -> Vec<C64> {
        let mut q = Vec::with_capacity(n + 1);
        q.push(C64::new(self.q0, 0.0));
        for k in 0..n {
            let h = &self.hessenberg[k];
            let mut v = z * q[k];
            for j in 0..=k {
                v -= h[j] * q[j];
            }
            q.push(v / h[k + 1].re);
        }
        q
    }

    pub fn eval(&self, n: usize, z: C64) -> C64 {
        self.eval_all(n, z)[n]
    }

    /// Monomial coefficients of Q_0..Q_n, lowest degree first (diagnostic).
    pub fn monomial_coeffs(&self, n: usize) -> Vec<Vec<C64>> {
        let mut c = vec![vec![C64::new(self.q0, 0.0)]];
        for k in 0..n {
            let h = &self.hessenberg[k];
            let mut v = vec![C64::new(0.0, 0.0); k + 2];
            for (i, x) in c[k].iter().enumerate() {
                v[i + 1] += x;
            }
            for j in 0..=k {
                for (i, x) in c[j].iter().enumerate() {
                    v[i] -= h[j] * x;
                }
            }
            c.push(v.into_iter().map(|x| x / h[k + 1].re).collect());
        }
        c
    }

    /// The n×n comrade matrix (multiplication by z on span{Q_0..Q_{n-1}}).
    pub fn comrade(&self, n: usize) -> Vec<Vec<C64>> {
        let mut a = vec![vec![C64::new(0.0, 0.0); n]; n];
        for k in 0..n {
            for (j, h) in self.hessenberg[k].iter().enumerate().take(n) {
                a[j][k] = *h;
            }
        }
        a
    }

    /// Largest off-diagonal Gram error `max |⟨Q_j, Q_k⟩ - δ_jk|` for j, k ≤ n.
    pub fn gram_residual(&self, engine: &InnerProductEngine, n: usize) -> f64 {
        let vals: Vec<Vec<C64>> = engine.nodes.iter().map(|z| self.eval_all(n, *z)).collect();
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            for k in 0..=j {
                let mut acc = C64::new(0.0, 0.0);
                for (v, w) in vals.iter().zip(&engine.weights) {
                    acc += v[j] * v[k].conj() * *w;
                }
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Gram residual against an independent, finer quadrature.
    pub fn gram_residual_refined(&self, domain: &ConvexDomain, n: usize) -> Result<f64, OrthoError> {
        let fine = InnerProductEngine::new(domain, self.weight, n + 7)?;
        Ok(self.gram_residual(&fine, n))
    }
}

/// `λ_n cap^n` computed in log space.
pub fn leading_product(seq: &OrthoSequence, n: usize, cap: f64) -> f64 {
    (seq.log_lambda[n] + n as f64 * cap.ln()).exp()
}

/// Boundary sample points: `count` uniform in arc length plus all vertices.
pub fn boundary_samples(domain: &ConvexDomain, count: usize) -> Vec<f64> {
    let per = domain.perimeter();
    let mut s: Vec<f64> = (0..count).map(|j| per * j as f64 / count as f64).collect();
    if let Some(vp) = domain.vertex_params() {
        s.extend_from_slice(vp);
    }
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Sup of `|f|` over the boundary: dense sampling, then golden-section
/// refinement of the leading local maxima.
pub fn boundary_sup<F: Fn(C64) -> f64>(domain: &ConvexDomain, f: F, count: usize) -> f64 {
    let s = boundary_samples(domain, count);
    let per = domain.perimeter();
    let g = |t: f64| f(domain.boundary_point(t).z);
    let vals: Vec<f64> = s.iter().map(|&t| g(t)).collect();
    let mut best = vals.iter().copied().fold(0.0, f64::max);
    let ns = s.len();
    let mut peaks: Vec<usize> = (0..ns)
        .filter(|&i| vals[i] >= vals[(i + ns - 1) % ns] && vals[i] >= vals[(i + 1) % ns])
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for &i in peaks.iter().take(8) {
        let lo0 = if i == 0 { s[ns - 1] - per } else { s[i - 1] };
        let hi0 = if i + 1 == ns { s[0] + per } else { s[i + 1] };
        let (mut lo, mut hi) = (lo0, hi0);
        let mut x1 = hi - gr * (hi - lo);
        let mut x2 = lo + gr * (hi - lo);
        let (mut f1, mut f2) = (g(x1), g(x2));
        for _ in 0..40 {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = g(x2);
            }
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// `‖Q_n‖` on Ḡ (maximum principle: the boundary suffices).
pub fn sup_norm(seq: &OrthoSequence, domain: &ConvexDomain, n: usize) -> f64 {
    boundary_sup(domain, |z| seq.eval(n, z).norm(), 4096)
}

/// Orthonormal polynomials of the unit-radius disk, for reference.
pub fn disk_lambda(n: usize, radius: f64) -> f64 {
    ((n as f64 + 1.0) / PI).sqrt() / radius.powi(n as i32 + 1)
}
