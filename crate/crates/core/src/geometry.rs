//! Bounded convex domains: validation, arc-length parameterization of the
//! boundary, distances and point classification.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::GaussRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("vertex chain is not strictly convex: {0}")]
    NonConvex(String),
    #[error("degenerate domain: {0}")]
    Degenerate(String),
    #[error("ellipse foot-point iteration did not converge for z = {0}")]
    NoConvergence(C64),
}

/// Domain literal as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
}

impl DomainSpec {
    pub fn polygon(vertices: &[C64]) -> Self {
        DomainSpec::Polygon {
            vertices: vertices.iter().map(|v| [v.re, v.im]).collect(),
        }
    }

    /// Polygon with vertices `center + radius * exp(i(rotation + 2πk/n))`.
    pub fn regular(n: usize, radius: f64, rotation: f64) -> Self {
        let verts: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(radius, rotation + TAU * k as f64 / n as f64))
            .collect();
        Self::polygon(&verts)
    }

    pub fn disk(center: C64, radius: f64) -> Self {
        DomainSpec::Disk {
            center: [center.re, center.im],
            radius,
        }
    }

    pub fn ellipse(center: C64, a: f64, b: f64, rotation: f64) -> Self {
        DomainSpec::Ellipse {
            center: [center.re, center.im],
            a,
            b,
            rotation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub s: f64,
    pub z: C64,
}

/// Counter-clockwise boundary arc `[start, start + length]` in arc-length
/// coordinates, reduced modulo the perimeter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    start: f64,
    length: f64,
    rest: f64,
    perimeter: f64,
}

/// Lengths are kept as integer multiples of ulp(perimeter), so that a length
/// and its complement are both exact and sum to the perimeter.
fn quantize(per: f64, len: f64) -> f64 {
    let u = per.next_up() - per;
    (len / u).round() * u
}

impl BoundaryArc {
    pub fn new(start: f64, length: f64, perimeter: f64) -> Self {
        assert!(perimeter > 0.0);
        assert!(
            (0.0..=perimeter).contains(&length),
            "arc length {length} outside [0, {perimeter}]"
        );
        BoundaryArc {
            start: start.rem_euclid(perimeter),
            length: quantize(perimeter, length),
            rest: perimeter - quantize(perimeter, length),
            perimeter,
        }
    }

    /// Arc from `start` counter-clockwise to `end`.
    pub fn between(start: f64, end: f64, perimeter: f64) -> Self {
        let start = start.rem_euclid(perimeter);
        let length = (end - start).rem_euclid(perimeter);
        Self::new(start, length, perimeter)
    }

    pub fn full(perimeter: f64) -> Self {
        Self::new(0.0, perimeter, perimeter)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// End parameter, unreduced: `start + length` may exceed the perimeter.
    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn arclength(&self) -> f64 {
        self.length
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn wraps(&self) -> bool {
        self.end() > self.perimeter
    }

    pub fn complement(&self) -> Self {
        BoundaryArc {
            start: (self.start + self.length).rem_euclid(self.perimeter),
            length: self.rest,
            rest: self.length,
            perimeter: self.perimeter,
        }
    }

    /// Closed-arc membership of a boundary parameter.
    pub fn contains(&self, s: f64) -> bool {
        let off = (s - self.start).rem_euclid(self.perimeter);
        off <= self.length || self.length >= self.perimeter
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Polygon(PolygonData),
    Ellipse(EllipseData),
    Disk { center: C64, radius: f64 },
}

#[derive(Clone, Debug)]
struct PolygonData {
    vertices: Vec<C64>,
    /// cumulative arc length at each vertex, `cum[n] = perimeter`
    cum: Vec<f64>,
}

#[derive(Clone, Debug)]
struct EllipseData {
    center: C64,
    a: f64,
    b: f64,
    rotation: f64,
    /// parameter of the arc-length anchor
    t0: f64,
    /// cumulative arc length from t0 at panel breakpoints t0 + k·2π/P
    panel_cum: Vec<f64>,
    rule: GaussRule,
}

const ELLIPSE_PANELS: usize = 64;

impl EllipseData {
    fn rot(&self) -> C64 {
        C64::from_polar(1.0, self.rotation)
    }

    fn point_at_t(&self, t: f64) -> C64 {
        self.center + self.rot() * C64::new(self.a * t.cos(), self.b * t.sin())
    }

    fn speed(&self, t: f64) -> f64 {
        (self.a * self.a * t.sin().powi(2) + self.b * self.b * t.cos().powi(2)).sqrt()
    }

    fn perimeter(&self) -> f64 {
        self.panel_cum[ELLIPSE_PANELS]
    }

    fn panel_integral(&self, lo: f64, hi: f64) -> f64 {
        self.rule.integrate(lo, hi, |t| self.speed(t))
    }

    /// arc length from the anchor to parameter t0 + u, u in [0, 2π]
    fn s_of_u(&self, u: f64) -> f64 {
        let h = TAU / ELLIPSE_PANELS as f64;
        let k = ((u / h).floor() as usize).min(ELLIPSE_PANELS - 1);
        let lo = self.t0 + k as f64 * h;
        self.panel_cum[k] + self.panel_integral(lo, self.t0 + u)
    }

    /// Inverse of `s_of_u` by safeguarded Newton.
    fn u_of_s(&self, s: f64) -> f64 {
        let per = self.perimeter();
        let s = s.rem_euclid(per);
        let (mut lo, mut hi) = (0.0, TAU);
        let mut u = s / per * TAU;
        for _ in 0..100 {
            let f = self.s_of_u(u) - s;
            if f.abs() <= 1e-15 * per {
                break;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let mut next = u - f / self.speed(self.t0 + u);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() < 1e-16 {
                u = next;
                break;
            }
            u = next;
        }
        u
    }

    fn local(&self, z: C64) -> (f64, f64) {
        let p = (z - self.center) * self.rot().conj();
        (p.re, p.im)
    }

    /// Nearest boundary parameter t (foot point) by Newton on the
    /// orthogonality condition, seeded by a coarse scan.
    fn foot_point(&self, z: C64) -> Result<f64, GeometryError> {
        let (x, y) = self.local(z);
        let (a, b) = (self.a, self.b);
        let dist2 = |t: f64| (x - a * t.cos()).powi(2) + (y - b * t.sin()).powi(2);
        let scan = 128;
        let mut best = 0.0;
        let mut best_d = f64::INFINITY;
        for k in 0..scan {
            let t = TAU * k as f64 / scan as f64;
            let d = dist2(t);
            if d < best_d {
                best_d = d;
                best = t;
            }
        }
        // g(t) = d/dt (dist²)/2
        let g = |t: f64| (a * a - b * b) * t.sin() * t.cos() - x * a * t.sin() + y * b * t.cos();
        let dg = |t: f64| {
            (a * a - b * b) * (t.cos().powi(2) - t.sin().powi(2)) - x * a * t.cos()
                - y * b * t.sin()
        };
        let h = TAU / scan as f64;
        let (mut lo, mut hi) = (best - h, best + h);
        let mut t = best;
        for _ in 0..60 {
            let gv = g(t);
            let scale = a * a + (x.abs() + y.abs()) * a;
            if gv.abs() <= 1e-15 * scale {
                return Ok(t);
            }
            let d = dg(t);
            let mut next = if d > 0.0 { t - gv / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                // bisect on the sign of g inside the bracket
                let glo = g(lo);
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == (glo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                next = 0.5 * (lo + hi);
            } else if gv > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if (next - t).abs() < 1e-16 {
                return Ok(next);
            }
            t = next;
        }
        Err(GeometryError::NoConvergence(z))
    }
}

/// A validated bounded convex domain. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    spec: DomainSpec,
    shape: Shape,
    perimeter: f64,
    diameter: f64,
}

pub fn validate(spec: &DomainSpec) -> Result<(), GeometryError> {
    ConvexDomain::new(spec.clone()).map(|_| ())
}

impl ConvexDomain {
    pub fn new(spec: DomainSpec) -> Result<Self, GeometryError> {
        let shape = match &spec {
            DomainSpec::Polygon { vertices } => {
                let verts: Vec<C64> = vertices.iter().map(|v| C64::new(v[0], v[1])).collect();
                Shape::Polygon(validate_polygon(&verts)?)
            }
            DomainSpec::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::Degenerate(format!("radius {radius}")));
                }
                Shape::Disk {
                    center: C64::new(center[0], center[1]),
                    radius: *radius,
                }
            }
            DomainSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                if !(b.is_finite() && *b > 0.0 && a.is_finite()) {
                    return Err(GeometryError::Degenerate(format!("semi-axes a={a}, b={b}")));
                }
                if a < b {
                    return Err(GeometryError::Degenerate(format!(
                        "semi-axes must satisfy a >= b, got a={a}, b={b}"
                    )));
                }
                Shape::Ellipse(build_ellipse(C64::new(center[0], center[1]), *a, *b, *rotation))
            }
        };
        let (perimeter, diameter) = match &shape {
            Shape::Polygon(p) => {
                let mut d: f64 = 0.0;
                for u in &p.vertices {
                    for v in &p.vertices {
                        d = d.max((u - v).norm());
                    }
                }
                (p.cum[p.vertices.len()], d)
            }
            Shape::Disk { radius, .. } => (TAU * radius, 2.0 * radius),
            Shape::Ellipse(e) => (e.perimeter(), 2.0 * e.a),
        };
        Ok(ConvexDomain {
            spec,
            shape,
            perimeter,
            diameter,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self.shape, Shape::Polygon(_))
    }

    pub fn vertices(&self) -> Option<&[C64]> {
        match &self.shape {
            Shape::Polygon(p) => Some(&p.vertices),
            _ => None,
        }
    }

    /// Arc-length parameter of each vertex (polygons only).
    pub fn vertex_params(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Polygon(p) => Some(&p.cum[..p.vertices.len()]),
            _ => None,
        }
    }

    /// Area centroid of the domain.
    pub fn centroid(&self) -> C64 {
        match &self.shape {
            Shape::Polygon(p) => polygon_centroid(&p.vertices),
            Shape::Disk { center, .. } => *center,
            Shape::Ellipse(e) => e.center,
        }
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Polygon(p) => polygon_area(&p.vertices),
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse(e) => PI * e.a * e.b,
        }
    }

    /// Radius of the smallest disk centered at the centroid containing the domain.
    pub fn outer_radius(&self) -> f64 {
        let c = self.centroid();
        match &self.shape {
            Shape::Polygon(p) => p.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max),
            Shape::Disk { radius, .. } => *radius,
            Shape::Ellipse(e) => e.a,
        }
    }

    pub fn boundary_point(&self, s: f64) -> BoundaryPoint {
        let s = s.rem_euclid(self.perimeter);
        let z = match &self.shape {
            Shape::Polygon(p) => {
                let n = p.vertices.len();
                let k = match p.cum.partition_point(|&c| c <= s) {
                    0 => 0,
                    i => (i - 1).min(n - 1),
                };
                let v0 = p.vertices[k];
                let v1 = p.vertices[(k + 1) % n];
                let len = p.cum[k + 1] - p.cum[k];
                v0 + (v1 - v0) * ((s - p.cum[k]) / len)
            }
            Shape::Disk { center, radius } => center + C64::from_polar(*radius, s / radius),
            Shape::Ellipse(e) => e.point_at_t(e.t0 + e.u_of_s(s)),
        };
        BoundaryPoint { s, z }
    }

    /// Unit tangent (counter-clockwise) at the boundary parameter s.
    pub fn tangent(&self, s: f64) -> C64 {
        let s = s.rem_euclid(self.perimeter);
        match &self.shape {
            Shape::Polygon(p) => {
                let n = p.vertices.len();
                let k = (p.cum.partition_point(|&c| c <= s).max(1) - 1).min(n - 1);
                let d = p.vertices[(k + 1) % n] - p.vertices[k];
                d / d.norm()
            }
            Shape::Disk { radius, .. } => C64::i() * C64::from_polar(1.0, s / radius),
            Shape::Ellipse(e) => {
                let t = e.t0 + e.u_of_s(s);
                let d = e.rot() * C64::new(-e.a * t.sin(), e.b * t.cos());
                d / d.norm()
            }
        }
    }

    pub fn dist_to_boundary(&self, z: C64) -> Result<f64, GeometryError> {
        match &self.shape {
            Shape::Polygon(p) => {
                let n = p.vertices.len();
                Ok((0..n)
                    .map(|k| segment_distance(z, p.vertices[k], p.vertices[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min))
            }
            Shape::Disk { center, radius } => Ok((radius - (z - center).norm()).abs()),
            Shape::Ellipse(e) => {
                let t = e.foot_point(z)?;
                Ok((z - e.point_at_t(t)).norm())
            }
        }
    }

    /// Arc-length parameter of the boundary point nearest to z.
    pub fn nearest_param(&self, z: C64) -> Result<f64, GeometryError> {
        match &self.shape {
            Shape::Polygon(p) => {
                let n = p.vertices.len();
                let mut best = (f64::INFINITY, 0.0);
                for k in 0..n {
                    let a = p.vertices[k];
                    let b = p.vertices[(k + 1) % n];
                    let d = b - a;
                    let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                    let dist = (z - (a + d * t)).norm();
                    if dist < best.0 {
                        best = (dist, p.cum[k] + t * (p.cum[k + 1] - p.cum[k]));
                    }
                }
                Ok(best.1.rem_euclid(self.perimeter))
            }
            Shape::Disk { center, radius } => {
                Ok(((z - center).arg() * radius).rem_euclid(self.perimeter))
            }
            Shape::Ellipse(e) => {
                let t = e.foot_point(z)?;
                let u = (t - e.t0).rem_euclid(TAU);
                Ok(e.s_of_u(u).rem_euclid(self.perimeter))
            }
        }
    }

    /// Classification with the default boundary band `1e-10 · diam`.
    pub fn contains(&self, z: C64) -> Location {
        self.classify(z, 1e-10 * self.diameter)
    }

    /// Classification with an explicit boundary band width.
    pub fn classify(&self, z: C64, tol: f64) -> Location {
        let inside = match &self.shape {
            Shape::Polygon(p) => {
                let n = p.vertices.len();
                (0..n).all(|k| {
                    let a = p.vertices[k];
                    let b = p.vertices[(k + 1) % n];
                    cross(b - a, z - a) > 0.0
                })
            }
            Shape::Disk { center, radius } => (z - center).norm() < *radius,
            Shape::Ellipse(e) => {
                let (x, y) = e.local(z);
                (x / e.a).powi(2) + (y / e.b).powi(2) < 1.0
            }
        };
        let dist = match self.dist_to_boundary(z) {
            Ok(d) => d,
            Err(_) => match &self.shape {
                // first-order distance estimate from the implicit equation
                Shape::Ellipse(e) => {
                    let (x, y) = e.local(z);
                    let q = (x / e.a).powi(2) + (y / e.b).powi(2) - 1.0;
                    let grad = 2.0 * ((x / (e.a * e.a)).powi(2) + (y / (e.b * e.b)).powi(2)).sqrt();
                    q.abs() / grad
                }
                _ => unreachable!(),
            },
        };
        if dist <= tol {
            Location::Boundary
        } else if inside {
            Location::Interior
        } else {
            Location::Exterior
        }
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

pub(crate) fn polygon_area(v: &[C64]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| cross(v[k], v[(k + 1) % n])).sum::<f64>()
}

pub(crate) fn polygon_centroid(v: &[C64]) -> C64 {
    let n = v.len();
    let mut c = C64::new(0.0, 0.0);
    let mut a2 = 0.0;
    for k in 0..n {
        let w = cross(v[k], v[(k + 1) % n]);
        a2 += w;
        c += (v[k] + v[(k + 1) % n]) * w;
    }
    c / (3.0 * a2)
}

fn validate_polygon(v: &[C64]) -> Result<PolygonData, GeometryError> {
    let n = v.len();
    if n < 3 {
        return Err(GeometryError::Degenerate(format!("{n} vertices; need at least 3")));
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(GeometryError::Degenerate("non-finite vertex".into()));
    }
    let diam = v
        .iter()
        .flat_map(|a| v.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    for k in 0..n {
        if (v[(k + 1) % n] - v[k]).norm() <= 1e-12 * diam {
            return Err(GeometryError::Degenerate(format!("repeated vertex at index {k}")));
        }
    }
    let mut turning = 0.0;
    for k in 0..n {
        let e0 = v[k] - v[(k + n - 1) % n];
        let e1 = v[(k + 1) % n] - v[k];
        let c = cross(e0, e1);
        if c.abs() <= 1e-12 * e0.norm() * e1.norm() {
            return Err(GeometryError::Degenerate(format!(
                "collinear vertices around index {k}"
            )));
        }
        if c < 0.0 {
            return Err(GeometryError::NonConvex(format!(
                "reflex or clockwise turn at vertex {k}"
            )));
        }
        turning += (e1 / e0).arg();
    }
    if (turning - TAU).abs() > 1e-9 {
        return Err(GeometryError::NonConvex(format!(
            "total turning {turning:.6} rad; vertex chain winds more than once"
        )));
    }
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for k in 0..n {
        let last = cum[k];
        cum.push(last + (v[(k + 1) % n] - v[k]).norm());
    }
    Ok(PolygonData {
        vertices: v.to_vec(),
        cum,
    })
}

fn build_ellipse(center: C64, a: f64, b: f64, rotation: f64) -> EllipseData {
    // anchor: boundary point on the ray center + R·(1, 0)
    let beta = -rotation;
    let t0 = (a * beta.sin()).atan2(b * beta.cos());
    let mut e = EllipseData {
        center,
        a,
        b,
        rotation,
        t0,
        panel_cum: vec![0.0; ELLIPSE_PANELS + 1],
        rule: GaussRule::legendre(24),
    };
    let h = TAU / ELLIPSE_PANELS as f64;
    for k in 0..ELLIPSE_PANELS {
        let lo = t0 + k as f64 * h;
        e.panel_cum[k + 1] = e.panel_cum[k] + e.panel_integral(lo, lo + h);
    }
    e
}

/// Exterior turning angle at each vertex divided by π (in (0, 1), summing to 2).
pub(crate) fn turning_exponents(v: &[C64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let e0 = v[k] - v[(k + n - 1) % n];
            let e1 = v[(k + 1) % n] - v[k];
            (e1 / e0).arg() / PI
        })
        .collect()
}

/// Ellipse parameter angle (the `t` in `a cos t + i b sin t`) of a boundary
/// parameter s.
pub(crate) fn ellipse_param(domain: &ConvexDomain, s: f64) -> Option<f64> {
    match &domain.shape {
        Shape::Ellipse(e) => Some(e.t0 + e.u_of_s(s)),
        _ => None,
    }
}

/// Inverse of [`ellipse_param`]: boundary parameter of ellipse angle t.
pub(crate) fn ellipse_s_of_t(domain: &ConvexDomain, t: f64) -> Option<f64> {
    match &domain.shape {
        Shape::Ellipse(e) => Some(e.s_of_u((t - e.t0).rem_euclid(TAU))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn square2() -> ConvexDomain {
        ConvexDomain::new(DomainSpec::polygon(&[c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0)]))
            .unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate(&DomainSpec::polygon(&[c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)])).is_ok());
        assert!(matches!(
            validate(&DomainSpec::polygon(&[c(0., 0.), c(1., 0.), c(2., 0.), c(0., 1.)])),
            Err(GeometryError::Degenerate(_))
        ));
        assert!(matches!(
            validate(&DomainSpec::polygon(&[c(0., 0.), c(1., 0.), c(1., 1.), c(0.9, 0.5), c(0., 1.)])),
            Err(GeometryError::NonConvex(_))
        ));
        // clockwise
        assert!(matches!(
            validate(&DomainSpec::polygon(&[c(1., 0.), c(0., -1.), c(-1., 0.), c(0., 1.)])),
            Err(GeometryError::NonConvex(_))
        ));
        assert!(matches!(
            validate(&DomainSpec::disk(c(0., 0.), 0.0)),
            Err(GeometryError::Degenerate(_))
        ));
        assert!(matches!(
            validate(&DomainSpec::ellipse(c(0., 0.), 1.0, 2.0, 0.0)),
            Err(GeometryError::Degenerate(_))
        ));
        // pentagram: all left turns but winds twice
        let star: Vec<C64> = (0..5).map(|k| C64::from_polar(1.0, TAU * 2.0 * k as f64 / 5.0)).collect();
        assert!(matches!(
            validate(&DomainSpec::polygon(&star)),
            Err(GeometryError::NonConvex(_))
        ));
    }

    #[test]
    fn boundary_point_examples() {
        let disk = ConvexDomain::new(DomainSpec::disk(c(0., 0.), 1.0)).unwrap();
        assert!((disk.boundary_point(0.0).z - c(1.0, 0.0)).norm() < 1e-15);
        let sq = square2();
        assert!((sq.boundary_point(1.0).z - c(1.0, 0.0)).norm() < 1e-15);
        assert!((sq.perimeter() - 8.0).abs() < 1e-15);

        let el = ConvexDomain::new(DomainSpec::ellipse(c(0., 0.), 2.0, 1.0, 0.0)).unwrap();
        let q = el.boundary_point(el.perimeter() / 4.0).z;
        // by symmetry the quarter point is the top of the minor axis
        assert!((q - c(0.0, 1.0)).norm() < 1e-12, "{q}");
        assert!((q.re / 2.0).powi(2) + q.im.powi(2) - 1.0 < 1e-12);
        // Ramanujan II approximation of the perimeter, accurate to ~1e-10 here
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert!((el.perimeter() - ram).abs() < 1e-6);
    }

    #[test]
    fn rotated_ellipse_anchor_on_positive_axis() {
        let el = ConvexDomain::new(DomainSpec::ellipse(c(1., 2.), 2.0, 1.0, 0.7)).unwrap();
        let z = el.boundary_point(0.0).z - c(1.0, 2.0);
        assert!(z.im.abs() < 1e-12 && z.re > 0.0);
        assert!(el.dist_to_boundary(z + c(1., 2.)).unwrap() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let disk = ConvexDomain::new(DomainSpec::disk(c(0., 0.), 1.0)).unwrap();
        assert_eq!(disk.dist_to_boundary(c(0., 0.)).unwrap(), 1.0);
        assert_eq!(square2().dist_to_boundary(c(0., 0.)).unwrap(), 1.0);
        let el = ConvexDomain::new(DomainSpec::ellipse(c(0., 0.), 2.0, 1.0, 0.0)).unwrap();
        assert!((el.dist_to_boundary(c(0., 0.)).unwrap() - 1.0).abs() < 1e-14);
        assert!((el.dist_to_boundary(c(3., 0.)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contains_examples() {
        let sq = square2();
        assert_eq!(sq.contains(c(0., 0.)), Location::Interior);
        assert_eq!(sq.contains(c(1., 0.)), Location::Boundary);
        assert_eq!(sq.contains(c(2., 0.)), Location::Exterior);
    }

    #[test]
    fn arc_complement() {
        let a = BoundaryArc::between(7.0, 1.0, 8.0);
        assert!(a.wraps());
        assert_eq!(a.arclength(), 2.0);
        assert_eq!(a.complement().arclength(), 6.0);
        assert!(a.contains(0.5) && !a.contains(3.0));
        assert!(a.complement().contains(3.0));
    }
}
