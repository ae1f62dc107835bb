//! Schwarz–Christoffel maps for convex polygons.
//!
//! Exterior: `Ψ(w) = v_k + C ∫_{w_k}^{w} ∏_j (1 - w_j/ω)^{β_j} dω` maps `|w| > 1`
//! onto the polygon exterior with `Ψ(w) ≈ C w` at infinity (so `C = cap`).
//! Interior: `f(w) = z₀ + C ∫_0^w ∏_j (1 - ω/w_j)^{-β_j} dω` maps the unit disk
//! onto the polygon with `f(0) = z₀`, `f'(0) = C > 0`.
//! Here `β_j π` is the turning angle at vertex j and `w_j = e^{iθ_j}`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::MapError;
use crate::quadrature::{integrate_path, integrate_real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScKind {
    Exterior,
    Interior,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScMap {
    pub kind: ScKind,
    pub vertices: Vec<C64>,
    /// turning angle / π at each vertex
    pub betas: Vec<f64>,
    /// prevertex arguments, strictly increasing, `theta[0] ∈ [0, 2π)`
    pub theta: Vec<f64>,
    /// multiplicative constant, real and positive after normalization
    pub scale: f64,
    /// image of w = 0 (interior maps only)
    pub center: C64,
    /// unscaled boundary integral of |Ψ'| or |f'| over each side
    pub side_integrals: Vec<f64>,
    /// arc-length parameter of each vertex, with the perimeter appended
    pub cum: Vec<f64>,
    /// constant term of the Laurent expansion at infinity (exterior maps)
    pub laurent_b0: C64,
    /// residual norm of the parameter problem
    pub residual: f64,
}

impl ScMap {
    fn sign(&self) -> f64 {
        match self.kind {
            ScKind::Exterior => 1.0,
            ScKind::Interior => -1.0,
        }
    }

    pub fn sides(&self) -> usize {
        self.vertices.len()
    }

    pub fn prevertex(&self, k: usize) -> C64 {
        C64::from_polar(1.0, self.theta[k % self.sides()])
    }

    /// Unwrapped prevertex angle, `k` in `0..=n`.
    pub fn theta_k(&self, k: usize) -> f64 {
        let n = self.sides();
        self.theta[k % n] + TAU * (k / n) as f64
    }

    pub fn perimeter(&self) -> f64 {
        self.cum[self.sides()]
    }

    pub(crate) fn prevertices(&self) -> Vec<C64> {
        (0..self.sides()).map(|k| self.prevertex(k)).collect()
    }

    fn theta_singular(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(4 * self.sides());
        for m in -1..=2 {
            for t in &self.theta {
                s.push(t + TAU * m as f64);
            }
        }
        s
    }

    /// |Ψ'(e^{it})| / C (exterior) or |f'(e^{it})| / C (interior).
    pub fn boundary_density(&self, t: f64) -> f64 {
        density(&self.theta, &self.betas, self.sign(), t)
    }

    /// Integrand of Ψ or f with respect to ω, without the constant.
    pub fn integrand(&self, w: C64) -> C64 {
        integrand(self.kind, &self.theta, &self.betas, w)
    }

    /// Unscaled integral of the boundary density from θ_k to t (t inside side k).
    fn partial_side(&self, k: usize, t: f64) -> f64 {
        let a = self.theta_k(k);
        let b = self.theta_k(k + 1);
        let sing = self.theta_singular();
        let f = |x: f64| self.boundary_density(x);
        let sg = self.sign();
        let n = self.sides();
        if t <= a {
            0.0
        } else if t >= b {
            self.side_integrals[k]
        } else if t - a <= 0.5 * (b - a) {
            integrate_real(a, t, &f, &sing, sg * self.betas[k], 0.0)
        } else {
            self.side_integrals[k]
                - integrate_real(t, b, &f, &sing, 0.0, sg * self.betas[(k + 1) % n])
        }
    }

    /// Boundary arc-length parameter of the image of e^{it}.
    pub fn s_of_theta(&self, t: f64) -> f64 {
        let n = self.sides();
        let t0 = self.theta[0];
        let u = (t - t0).rem_euclid(TAU) + t0;
        let k = (1..=n).find(|&j| u < self.theta_k(j)).unwrap_or(n) - 1;
        let frac = self.partial_side(k, u) / self.side_integrals[k];
        self.cum[k] + frac * (self.cum[k + 1] - self.cum[k])
    }

    /// Prevertex-circle angle of the boundary parameter s, in `[θ_0, θ_0 + 2π)`.
    pub fn theta_of_s(&self, s: f64, guess: Option<f64>) -> f64 {
        let n = self.sides();
        let per = self.perimeter();
        let s = s.rem_euclid(per);
        let k = match self.cum.partition_point(|&c| c <= s) {
            0 => 0,
            i => (i - 1).min(n - 1),
        };
        let len = self.cum[k + 1] - self.cum[k];
        let q = (s - self.cum[k]) / len;
        let (a, b) = (self.theta_k(k), self.theta_k(k + 1));
        if q <= 0.0 {
            return a;
        }
        let ik = self.side_integrals[k];
        let (mut lo, mut hi) = (a, b);
        let mut t = match guess {
            Some(g) if g > a && g < b => g,
            _ => a + q * (b - a),
        };
        for _ in 0..200 {
            let f = self.partial_side(k, t) / ik - q;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.boundary_density(t) / ik;
            let mut next = t - f / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) || hi - lo < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        t
    }

    /// Boundary point of e^{it}.
    pub fn boundary_image(&self, t: f64) -> C64 {
        let s = self.s_of_theta(t);
        let n = self.sides();
        let k = match self.cum.partition_point(|&c| c <= s) {
            0 => 0,
            i => (i - 1).min(n - 1),
        };
        let (v0, v1) = (self.vertices[k], self.vertices[(k + 1) % n]);
        v0 + (v1 - v0) * ((s - self.cum[k]) / (self.cum[k + 1] - self.cum[k]))
    }

    // ---- exterior evaluation ----

    /// Ψ(w) for |w| ≥ 1.
    pub fn psi(&self, w: C64) -> C64 {
        debug_assert_eq!(self.kind, ScKind::Exterior);
        let r = w.norm();
        let phi = w.arg();
        let (k, d) = self.nearest_prevertex(phi);
        let th = self.theta[k];
        let pre = self.prevertices();
        let beta = self.betas[k];
        let c = self.scale;
        let mut acc = C64::new(0.0, 0.0);
        if r - 1.0 <= d.abs() {
            if d != 0.0 {
                acc += self.arc_integral(1.0, th, d, &pre, beta);
            }
            if r > 1.0 {
                acc += self.radial_integral(th + d, 1.0, r, &pre, 0.0);
            }
        } else {
            acc += self.radial_integral(th, 1.0, r, &pre, beta);
            if d != 0.0 {
                acc += self.arc_integral(r, th, d, &pre, 0.0);
            }
        }
        self.vertices[k] + acc * c
    }

    pub fn dpsi(&self, w: C64) -> C64 {
        self.integrand(w) * self.scale
    }

    fn nearest_prevertex(&self, phi: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, t) in self.theta.iter().enumerate() {
            let mut d = (phi - t).rem_euclid(TAU);
            if d > PI {
                d -= TAU;
            }
            if d.abs() < best.1.abs() {
                best = (k, d);
            }
        }
        best
    }

    fn arc_integral(&self, rho: f64, alpha: f64, d: f64, pre: &[C64], start_exp: f64) -> C64 {
        let point = |t: f64| C64::from_polar(rho, alpha + t * d);
        let f = |t: f64| {
            let z = point(t);
            self.integrand(z) * C64::i() * z * d
        };
        integrate_path(&point, &f, rho * d.abs(), pre, start_exp, 0.0)
    }

    fn radial_integral(&self, alpha: f64, r0: f64, r1: f64, pre: &[C64], start_exp: f64) -> C64 {
        let dir = C64::from_polar(1.0, alpha);
        let point = |t: f64| dir * (r0 + t * (r1 - r0));
        let f = |t: f64| self.integrand(point(t)) * dir * (r1 - r0);
        integrate_path(&point, &f, (r1 - r0).abs(), pre, start_exp, 0.0)
    }

    /// Φ(z) for z outside the closed polygon, by continuation along the ray
    /// from a far point on the same ray through the centroid.
    pub fn psi_inverse(&self, z: C64, diam: f64) -> Result<C64, MapError> {
        let c = crate::geometry::polygon_centroid(&self.vertices);
        let rel = z - c;
        let dist = rel.norm();
        let far = (4.0 * diam).max(dist);
        let z_far = c + rel / dist * far;
        let tol = 1e-13 * diam;
        let mut w = (z_far - self.laurent_b0) / self.scale;
        if w.norm() < 1.5 {
            w *= 1.5 / w.norm();
        }
        w = self
            .newton_ext(w, z_far, tol, 40)
            .ok_or(MapError::OutsideDomainOfDefinition(z))?;
        continuation(z_far, z, w, |w0, target| self.newton_ext(w0, target, tol, 12), |w| {
            self.dpsi(w)
        })
        .ok_or(MapError::OutsideDomainOfDefinition(z))
    }

    fn newton_ext(&self, mut w: C64, target: C64, tol: f64, iters: usize) -> Option<C64> {
        for _ in 0..iters {
            let r = self.psi(w) - target;
            if r.norm() <= tol {
                return Some(w);
            }
            let step = r / self.dpsi(w);
            let mut lam = 1.0;
            let mut next = w - step * lam;
            while next.norm() <= 1.0 && lam > 1e-8 {
                lam *= 0.5;
                next = w - step * lam;
            }
            if next.norm() <= 1.0 || !next.re.is_finite() {
                return None;
            }
            w = next;
        }
        let r = self.psi(w) - target;
        (r.norm() <= tol).then_some(w)
    }

    // ---- interior evaluation ----

    /// f(w) for |w| < 1.
    pub fn f(&self, w: C64) -> C64 {
        debug_assert_eq!(self.kind, ScKind::Interior);
        if w.norm() == 0.0 {
            return self.center;
        }
        self.center + self.radial_from_zero(w, 0.0) * self.scale
    }

    pub fn df(&self, w: C64) -> C64 {
        self.integrand(w) * self.scale
    }

    fn radial_from_zero(&self, w: C64, end_exp: f64) -> C64 {
        let pre = self.prevertices();
        let point = |t: f64| w * t;
        let f = |t: f64| self.integrand(w * t) * w;
        integrate_path(&point, &f, w.norm(), &pre, 0.0, end_exp)
    }

    /// φ(z) = f⁻¹(z) for z in the open polygon, by continuation from z₀.
    pub fn f_inverse(&self, z: C64, diam: f64) -> Result<C64, MapError> {
        let tol = 1e-13 * diam;
        continuation(
            self.center,
            z,
            C64::new(0.0, 0.0),
            |w0, target| self.newton_int(w0, target, tol, 12),
            |w| self.df(w),
        )
        .ok_or(MapError::OutsideDomainOfDefinition(z))
    }

    fn newton_int(&self, mut w: C64, target: C64, tol: f64, iters: usize) -> Option<C64> {
        for _ in 0..iters {
            let r = self.f(w) - target;
            if r.norm() <= tol {
                return Some(w);
            }
            let step = r / self.df(w);
            let mut lam = 1.0;
            let mut next = w - step * lam;
            while next.norm() >= 1.0 && lam > 1e-8 {
                lam *= 0.5;
                next = w - step * lam;
            }
            if next.norm() >= 1.0 || !next.re.is_finite() {
                return None;
            }
            w = next;
        }
        let r = self.f(w) - target;
        (r.norm() <= tol).then_some(w)
    }
}

/// Track the preimage of the segment `from → to` starting at the known
/// preimage `w` of `from`.
fn continuation<N, D>(from: C64, to: C64, mut w: C64, newton: N, deriv: D) -> Option<C64>
where
    N: Fn(C64, C64) -> Option<C64>,
    D: Fn(C64) -> C64,
{
    let mut t = 0.0;
    let mut h: f64 = 0.25;
    let seg = to - from;
    let mut steps = 0;
    while t < 1.0 {
        steps += 1;
        if steps > 2000 || h < 1e-9 {
            return None;
        }
        let h_eff = h.min(1.0 - t);
        let target = from + seg * (t + h_eff);
        let pred = w + seg * h_eff / deriv(w);
        let attempt = newton(pred, target).or_else(|| newton(w, target));
        match attempt {
            Some(next) => {
                w = next;
                t += h_eff;
                h = (h * 1.5).min(1.0);
            }
            None => h *= 0.5,
        }
    }
    Some(w)
}

fn density(theta: &[f64], betas: &[f64], sign: f64, t: f64) -> f64 {
    let mut log = 0.0;
    for (th, b) in theta.iter().zip(betas) {
        log += sign * b * (2.0 * (0.5 * (t - th)).sin()).abs().ln();
    }
    log.exp()
}

fn integrand(kind: ScKind, theta: &[f64], betas: &[f64], w: C64) -> C64 {
    let mut log = C64::new(0.0, 0.0);
    match kind {
        ScKind::Exterior => {
            let inv = w.inv();
            for (th, b) in theta.iter().zip(betas) {
                log += (C64::new(1.0, 0.0) - C64::from_polar(1.0, *th) * inv).ln() * *b;
            }
        }
        ScKind::Interior => {
            for (th, b) in theta.iter().zip(betas) {
                log -= (C64::new(1.0, 0.0) - w * C64::from_polar(1.0, -*th)).ln() * *b;
            }
        }
    }
    log.exp()
}

fn side_integrals(kind: ScKind, theta: &[f64], betas: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let sign = if kind == ScKind::Exterior { 1.0 } else { -1.0 };
    let mut sing = Vec::with_capacity(4 * n);
    for m in -1..=2 {
        for t in theta {
            sing.push(t + TAU * m as f64);
        }
    }
    let f = |x: f64| density(theta, betas, sign, x);
    (0..n)
        .map(|k| {
            let a = theta[k];
            let b = if k + 1 < n { theta[k + 1] } else { theta[0] + TAU };
            integrate_real(a, b, &f, &sing, sign * betas[k], sign * betas[(k + 1) % n])
        })
        .collect()
}

/// Unscaled ∫_0^{w_k} of the interior integrand along the radius.
fn radial_to_prevertex(theta: &[f64], betas: &[f64], k: usize) -> C64 {
    let wk = C64::from_polar(1.0, theta[k]);
    let pre: Vec<C64> = theta.iter().map(|t| C64::from_polar(1.0, *t)).collect();
    let point = |t: f64| wk * t;
    let f = |t: f64| integrand(ScKind::Interior, theta, betas, wk * t) * wk;
    integrate_path(&point, &f, 1.0, &pre, 0.0, -betas[k])
}

fn angles_from(y: &[f64]) -> Vec<f64> {
    let n = y.len() + 1;
    let m = y.iter().cloned().fold(0.0, f64::max);
    let ex: Vec<f64> = y.iter().map(|v| (v - m).exp()).chain([(-m).exp()]).collect();
    let tot: f64 = ex.iter().sum();
    let mut th = Vec::with_capacity(n);
    let mut acc = 0.0;
    for e in ex.iter().take(n) {
        th.push(acc);
        acc += TAU * e / tot;
    }
    th
}

fn gaps_to_y(gaps: &[f64]) -> Vec<f64> {
    let n = gaps.len();
    (0..n - 1).map(|k| (gaps[k] / gaps[n - 1]).ln()).collect()
}

fn wrap_pi(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Regular polygon test: equal radii and equally spaced arguments about the centroid.
fn regular_prevertices(v: &[C64]) -> Option<Vec<f64>> {
    let n = v.len();
    let c = crate::geometry::polygon_centroid(v);
    let r0 = (v[0] - c).norm();
    let a0 = (v[0] - c).arg();
    let mut th = Vec::with_capacity(n);
    for (k, z) in v.iter().enumerate() {
        let rel = z - c;
        if (rel.norm() - r0).abs() > 1e-12 * r0 {
            return None;
        }
        let expect = a0 + TAU * k as f64 / n as f64;
        if wrap_pi(rel.arg() - expect).abs() > 1e-12 {
            return None;
        }
        th.push(expect);
    }
    Some(th)
}

fn side_lengths(v: &[C64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|k| (v[(k + 1) % n] - v[k]).norm()).collect()
}

fn residuals(kind: ScKind, v: &[C64], betas: &[f64], center: C64, y: &[f64]) -> Vec<f64> {
    let theta = angles_from(y);
    let n = v.len();
    let ints = side_integrals(kind, &theta, betas);
    let lens = side_lengths(v);
    let mut r: Vec<f64> = (1..n)
        .map(|k| (ints[k] / ints[0]).ln() - (lens[k] / lens[0]).ln())
        .collect();
    match kind {
        ScKind::Exterior => {
            let s: C64 = theta
                .iter()
                .zip(betas)
                .map(|(t, b)| C64::from_polar(*b, *t))
                .sum();
            r.push(s.re);
            r.push(s.im);
        }
        ScKind::Interior => {
            let f0 = radial_to_prevertex(&theta, betas, 0);
            let f1 = radial_to_prevertex(&theta, betas, 1);
            let got = (f0 / f1).ln();
            let want = ((v[0] - center) / (v[1] - center)).ln();
            r.push(got.re - want.re);
            r.push(wrap_pi(got.im - want.im));
        }
    }
    r
}

fn levenberg_marquardt<F>(res: F, mut x: Vec<f64>, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = res(&x);
    let mut rn = norm(&r);
    let mut mu = 1e-3;
    let n = x.len();
    for _ in 0..200 {
        if rn < tol {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let rp = res(&xp);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_vec(r.clone());
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rnew = res(&xn);
            let nn = norm(&rnew);
            if nn.is_finite() && nn < rn {
                x = xn;
                r = rnew;
                rn = nn;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, rn)
}

/// Solve the parameter problem and assemble a normalized map.
pub fn build(kind: ScKind, vertices: &[C64], cum: &[f64]) -> Result<ScMap, MapError> {
    let n = vertices.len();
    let betas = crate::geometry::turning_exponents(vertices);
    let center = crate::geometry::polygon_centroid(vertices);
    let (theta, residual) = match regular_prevertices(vertices) {
        Some(th) => (th, 0.0),
        None => {
            let gaps: Vec<f64> = match kind {
                ScKind::Exterior => (0..n)
                    .map(|k| 0.5 * (betas[k] + betas[(k + 1) % n]) * PI)
                    .collect(),
                ScKind::Interior => (0..n)
                    .map(|k| {
                        ((vertices[(k + 1) % n] - center) / (vertices[k] - center))
                            .arg()
                            .rem_euclid(TAU)
                    })
                    .collect(),
            };
            let y0 = gaps_to_y(&gaps);
            let (y, rn) = levenberg_marquardt(
                |y| residuals(kind, vertices, &betas, center, y),
                y0,
                1e-13,
            );
            if rn > 1e-10 {
                return Err(MapError::ParameterSolveFailed { residual: rn });
            }
            (angles_from(&y), rn)
        }
    };
    let ints = side_integrals(kind, &theta, &betas);
    let perimeter = cum[n];
    let (rotation, scale) = match kind {
        ScKind::Exterior => {
            let scale = perimeter / ints.iter().sum::<f64>();
            let tm = 0.5 * (theta[0] + theta[1]);
            let wm = C64::from_polar(1.0, tm);
            let dir = integrand(kind, &theta, &betas, wm) * C64::i() * wm;
            ((vertices[1] - vertices[0]).arg() - dir.arg(), scale)
        }
        ScKind::Interior => {
            let c0 = (vertices[0] - center) / radial_to_prevertex(&theta, &betas, 0);
            (c0.arg(), c0.norm())
        }
    };
    let mut theta: Vec<f64> = theta.iter().map(|t| t + rotation).collect();
    let shift = theta[0].rem_euclid(TAU) - theta[0];
    for t in theta.iter_mut() {
        *t += shift;
    }
    let mut map = ScMap {
        kind,
        vertices: vertices.to_vec(),
        betas,
        theta,
        scale,
        center,
        side_integrals: ints,
        cum: cum.to_vec(),
        laurent_b0: C64::new(0.0, 0.0),
        residual,
    };
    if kind == ScKind::Exterior {
        let m = 64;
        let b0: C64 = (0..m)
            .map(|j| map.psi(C64::from_polar(2.0, TAU * j as f64 / m as f64)))
            .sum::<C64>()
            / m as f64;
        map.laurent_b0 = b0;
    }
    Ok(map)
}
