//! Exterior map Φ: Ω → {|w| > 1} with inverse Ψ, interior map φ: G → 𝔻,
//! boundary correspondences, capacity, equilibrium and harmonic measure.

pub mod sc;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, BoundaryArc, ConvexDomain, DomainSpec, GeometryError, Location};
use sc::{ScKind, ScMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("Schwarz–Christoffel parameter problem did not converge (residual {residual:.3e})")]
    ParameterSolveFailed { residual: f64 },
    #[error("point {0} is outside the domain of definition of the map")]
    OutsideDomainOfDefinition(C64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Resolution of the boundary correspondence tables.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MapOptions {
    /// largest allowed step of the circle angle between table nodes
    pub max_dtheta: f64,
    /// nodes uniformly spaced in arc length per polygon side
    pub per_side: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            max_dtheta: TAU * 1e-4,
            per_side: 64,
        }
    }
}

impl MapOptions {
    pub fn coarse() -> Self {
        MapOptions {
            max_dtheta: TAU * 2e-3,
            per_side: 64,
        }
    }
}

/// Monotone table `s ↦ θ(s)` over one period: `s[0] = 0`, `s[last] = |L|`,
/// `theta[last] = theta[0] + 2π`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
}

impl BoundaryTable {
    fn from_pairs(mut pairs: Vec<(f64, f64)>, perimeter: f64) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        let t0 = pairs[0].1;
        pairs.retain(|p| p.0 < perimeter);
        pairs.push((perimeter, t0 + TAU));
        BoundaryTable {
            s: pairs.iter().map(|p| p.0).collect(),
            theta: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Exact table hit.
    pub fn lookup(&self, s: f64) -> Option<f64> {
        let i = self.s.partition_point(|&x| x < s);
        (i < self.s.len() && self.s[i] == s).then(|| self.theta[i])
    }

    /// Linear interpolation, used only to seed Newton.
    pub fn guess(&self, s: f64) -> f64 {
        let i = self.s.partition_point(|&x| x <= s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[i - 1], self.s[i]);
        let (t0, t1) = (self.theta[i - 1], self.theta[i]);
        t0 + (t1 - t0) * (s - s0) / (s1 - s0)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.s.windows(2).all(|w| w[1] > w[0]) && self.theta.windows(2).all(|w| w[1] > w[0])
    }
}

fn sc_table(map: &ScMap, opts: &MapOptions) -> BoundaryTable {
    let n = map.sides();
    let mut pairs = Vec::new();
    for k in 0..n {
        let (a, b) = (map.theta_k(k), map.theta_k(k + 1));
        let m = ((b - a) / opts.max_dtheta).ceil().max(1.0) as usize;
        for j in 0..m {
            let t = a + (b - a) * j as f64 / m as f64;
            let s = if j == 0 { map.cum[k] } else { map.s_of_theta(t) };
            pairs.push((s, t));
        }
        let (s0, s1) = (map.cum[k], map.cum[k + 1]);
        for j in 1..opts.per_side {
            let s = s0 + (s1 - s0) * j as f64 / opts.per_side as f64;
            pairs.push((s, map.theta_of_s(s, None)));
        }
    }
    BoundaryTable::from_pairs(pairs, map.perimeter())
}

/// Harmonic measure at `w ∈ 𝔻` of the arc `{e^{it} : alpha ≤ t ≤ alpha + len}`.
///
/// Closed form `(1/π)·∠(e^{iα} - w, e^{i(α+len)} - w) - len/2π`; the subtended
/// angle always lies in `[len/2, π + len/2]`, which fixes the branch.
pub fn disk_harmonic_measure(w: C64, alpha: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    if len >= TAU {
        return 1.0;
    }
    let a = C64::from_polar(1.0, alpha) - w;
    let b = C64::from_polar(1.0, alpha + len) - w;
    let lo = 0.5 * len - 0.5 * PI;
    let ang = (b / a).arg();
    let ang = lo + (ang - lo).rem_euclid(TAU);
    (ang / PI - len / TAU).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ExteriorKind {
    Disk {
        center: C64,
        radius: f64,
    },
    Ellipse {
        center: C64,
        a: f64,
        b: f64,
        rotation: f64,
    },
    Polygon(ScMap),
}

/// Normalized exterior conformal map: Φ(∞) = ∞, Φ'(∞) = 1/cap > 0.
#[derive(Clone, Debug)]
pub struct ExteriorMap {
    domain: ConvexDomain,
    kind: ExteriorKind,
    table: BoundaryTable,
}

#[derive(Serialize, Deserialize)]
struct MapData<K> {
    domain: DomainSpec,
    map: K,
    table: BoundaryTable,
}

pub fn exterior_map(domain: &ConvexDomain) -> Result<ExteriorMap, MapError> {
    ExteriorMap::new(domain, &MapOptions::default())
}

pub fn capacity(domain: &ConvexDomain) -> Result<f64, MapError> {
    Ok(exterior_map(domain)?.capacity())
}

impl ExteriorMap {
    pub fn new(domain: &ConvexDomain, opts: &MapOptions) -> Result<Self, MapError> {
        let (kind, table) = match domain.spec() {
            DomainSpec::Disk { center, radius } => {
                let m = (TAU / opts.max_dtheta).ceil() as usize;
                let pairs = (0..m)
                    .map(|j| {
                        let t = TAU * j as f64 / m as f64;
                        (t * radius, t)
                    })
                    .collect();
                (
                    ExteriorKind::Disk {
                        center: C64::new(center[0], center[1]),
                        radius: *radius,
                    },
                    BoundaryTable::from_pairs(pairs, domain.perimeter()),
                )
            }
            DomainSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let m = (TAU / opts.max_dtheta).ceil() as usize;
                let t0 = geometry::ellipse_param(domain, 0.0).expect("ellipse");
                let pairs = (0..m)
                    .map(|j| {
                        let t = t0 + TAU * j as f64 / m as f64;
                        let s = if j == 0 {
                            0.0
                        } else {
                            geometry::ellipse_s_of_t(domain, t).expect("ellipse")
                        };
                        (s, t + rotation)
                    })
                    .collect();
                (
                    ExteriorKind::Ellipse {
                        center: C64::new(center[0], center[1]),
                        a: *a,
                        b: *b,
                        rotation: *rotation,
                    },
                    BoundaryTable::from_pairs(pairs, domain.perimeter()),
                )
            }
            DomainSpec::Polygon { .. } => {
                let verts = domain.vertices().expect("polygon").to_vec();
                let mut cum = domain.vertex_params().expect("polygon").to_vec();
                cum.push(domain.perimeter());
                let map = sc::build(ScKind::Exterior, &verts, &cum)?;
                let table = sc_table(&map, opts);
                (ExteriorKind::Polygon(map), table)
            }
        };
        Ok(ExteriorMap {
            domain: domain.clone(),
            kind,
            table,
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn kind(&self) -> &ExteriorKind {
        &self.kind
    }

    pub fn table(&self) -> &BoundaryTable {
        &self.table
    }

    pub fn capacity(&self) -> f64 {
        match &self.kind {
            ExteriorKind::Disk { radius, .. } => *radius,
            ExteriorKind::Ellipse { a, b, .. } => 0.5 * (a + b),
            ExteriorKind::Polygon(m) => m.scale,
        }
    }

    /// Ψ(w) for |w| ≥ 1.
    pub fn eval_inverse(&self, w: C64) -> Result<C64, MapError> {
        if w.norm() < 1.0 - 1e-14 {
            return Err(MapError::OutsideDomainOfDefinition(w));
        }
        Ok(match &self.kind {
            ExteriorKind::Disk { center, radius } => center + w * *radius,
            ExteriorKind::Ellipse {
                center,
                a,
                b,
                rotation,
            } => center + w * (0.5 * (a + b)) + C64::from_polar(0.5 * (a - b), 2.0 * rotation) / w,
            ExteriorKind::Polygon(m) => m.psi(w),
        })
    }

    /// Ψ'(w).
    pub fn derivative_inverse(&self, w: C64) -> C64 {
        match &self.kind {
            ExteriorKind::Disk { radius, .. } => C64::new(*radius, 0.0),
            ExteriorKind::Ellipse { a, b, rotation, .. } => {
                0.5 * (a + b) - C64::from_polar(0.5 * (a - b), 2.0 * rotation) / (w * w)
            }
            ExteriorKind::Polygon(m) => m.dpsi(w),
        }
    }

    /// Φ(z) for z ∈ Ω̄.
    pub fn eval(&self, z: C64) -> Result<C64, MapError> {
        match self.domain.contains(z) {
            Location::Interior => return Err(MapError::OutsideDomainOfDefinition(z)),
            Location::Boundary => {
                let s = self.domain.nearest_param(z)?;
                return Ok(C64::from_polar(1.0, self.theta_at(s)));
            }
            Location::Exterior => {}
        }
        Ok(match &self.kind {
            ExteriorKind::Disk { center, radius } => (z - center) / *radius,
            ExteriorKind::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let zeta = (z - center) * C64::from_polar(1.0, -*rotation);
                let disc = (zeta * zeta - (a * a - b * b)).sqrt();
                let w1 = (zeta + disc) / (a + b);
                let w2 = (zeta - disc) / (a + b);
                let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
                w * C64::from_polar(1.0, *rotation)
            }
            ExteriorKind::Polygon(m) => m.psi_inverse(z, self.domain.diameter())?,
        })
    }

    /// arg Φ of the boundary point with parameter s, in `[θ(0), θ(0) + 2π)`.
    pub fn theta_at(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.domain.perimeter());
        if let Some(t) = self.table.lookup(s) {
            return t;
        }
        match &self.kind {
            ExteriorKind::Disk { radius, .. } => s / radius,
            ExteriorKind::Ellipse { rotation, .. } => {
                geometry::ellipse_param(&self.domain, s).expect("ellipse") + rotation
            }
            ExteriorKind::Polygon(m) => m.theta_of_s(s, Some(self.table.guess(s))),
        }
    }

    /// θ(s) extended to all real s with θ(s + |L|) = θ(s) + 2π.
    pub fn theta_unwrapped(&self, s: f64) -> f64 {
        let per = self.domain.perimeter();
        let k = (s / per).floor();
        self.theta_at(s - k * per) + TAU * k
    }

    /// Boundary parameter of Ψ(e^{iθ}).
    pub fn s_of_theta(&self, theta: f64) -> f64 {
        let per = self.domain.perimeter();
        match &self.kind {
            ExteriorKind::Disk { radius, .. } => (theta * radius).rem_euclid(per),
            ExteriorKind::Ellipse { rotation, .. } => geometry::ellipse_s_of_t(&self.domain, theta - rotation)
                .expect("ellipse")
                .rem_euclid(per),
            ExteriorKind::Polygon(m) => m.s_of_theta(theta).rem_euclid(per),
        }
    }

    /// Equilibrium measure of a boundary arc: angular length of Φ(arc) / 2π.
    pub fn equilibrium_measure(&self, arc: &BoundaryArc) -> f64 {
        if arc.arclength() >= self.domain.perimeter() {
            return 1.0;
        }
        let a = self.theta_unwrapped(arc.start());
        let b = self.theta_unwrapped(arc.end());
        ((b - a) / TAU).clamp(0.0, 1.0)
    }

    /// Laurent coefficients of Ψ at infinity: `Ψ(w) = cap·w + Σ_k b_k w^{-k}`.
    /// Returns `(cap, [b_0, …, b_{count-1}])`, by the trapezoid rule on |w| = 1.5.
    pub fn laurent_coefficients(&self, count: usize) -> Result<(f64, Vec<C64>), MapError> {
        let radius: f64 = 1.5;
        let m = 256.max(4 * count);
        let samples: Vec<C64> = (0..m)
            .map(|j| self.eval_inverse(C64::from_polar(radius, TAU * j as f64 / m as f64)))
            .collect::<Result<_, _>>()?;
        let coef = |k: i64| -> C64 {
            // coefficient of e^{-ikθ} in Ψ(R e^{iθ})
            let acc: C64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, TAU * (k * j as i64) as f64 / m as f64))
                .sum();
            acc / m as f64
        };
        let cap = (coef(-1) / radius).re;
        let b = (0..count as i64)
            .map(|k| coef(k) * radius.powi(k as i32))
            .collect();
        Ok((cap, b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MapData {
            domain: self.domain.spec().clone(),
            map: &self.kind,
            table: self.table.clone(),
        })
        .expect("map serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, MapError> {
        let d: MapData<ExteriorKind> =
            serde_json::from_str(s).map_err(|e| MapError::Unsupported(e.to_string()))?;
        Ok(ExteriorMap {
            domain: ConvexDomain::new(d.domain)?,
            kind: d.map,
            table: d.table,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InteriorKind {
    Disk { center: C64, radius: f64 },
    Polygon(ScMap),
}

/// Interior map φ: G → 𝔻 with φ(z₀) = 0, φ'(z₀) > 0, z₀ the centroid.
#[derive(Clone, Debug)]
pub struct InteriorMap {
    domain: ConvexDomain,
    kind: InteriorKind,
    table: BoundaryTable,
}

pub fn interior_map(domain: &ConvexDomain) -> Result<InteriorMap, MapError> {
    InteriorMap::new(domain, &MapOptions::default())
}

impl InteriorMap {
    pub fn new(domain: &ConvexDomain, opts: &MapOptions) -> Result<Self, MapError> {
        let (kind, table) = match domain.spec() {
            DomainSpec::Disk { center, radius } => {
                let m = (TAU / opts.max_dtheta).ceil() as usize;
                let pairs = (0..m)
                    .map(|j| {
                        let t = TAU * j as f64 / m as f64;
                        (t * radius, t)
                    })
                    .collect();
                (
                    InteriorKind::Disk {
                        center: C64::new(center[0], center[1]),
                        radius: *radius,
                    },
                    BoundaryTable::from_pairs(pairs, domain.perimeter()),
                )
            }
            DomainSpec::Ellipse { .. } => {
                return Err(MapError::Unsupported(
                    "interior conformal map of an ellipse".into(),
                ))
            }
            DomainSpec::Polygon { .. } => {
                let verts = domain.vertices().expect("polygon").to_vec();
                let mut cum = domain.vertex_params().expect("polygon").to_vec();
                cum.push(domain.perimeter());
                let map = sc::build(ScKind::Interior, &verts, &cum)?;
                let table = sc_table(&map, opts);
                (InteriorKind::Polygon(map), table)
            }
        };
        Ok(InteriorMap {
            domain: domain.clone(),
            kind,
            table,
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn kind(&self) -> &InteriorKind {
        &self.kind
    }

    pub fn table(&self) -> &BoundaryTable {
        &self.table
    }

    pub fn anchor(&self) -> C64 {
        match &self.kind {
            InteriorKind::Disk { center, .. } => *center,
            InteriorKind::Polygon(m) => m.center,
        }
    }

    /// φ(z) for z in the open domain.
    pub fn eval(&self, z: C64) -> Result<C64, MapError> {
        match &self.kind {
            InteriorKind::Disk { center, radius } => {
                let w = (z - center) / *radius;
                if w.norm() >= 1.0 {
                    return Err(MapError::OutsideDomainOfDefinition(z));
                }
                Ok(w)
            }
            InteriorKind::Polygon(m) => {
                if self.domain.classify(z, 0.0) != Location::Interior {
                    return Err(MapError::OutsideDomainOfDefinition(z));
                }
                m.f_inverse(z, self.domain.diameter())
            }
        }
    }

    /// φ⁻¹(w) for |w| < 1.
    pub fn eval_inverse(&self, w: C64) -> Result<C64, MapError> {
        if w.norm() >= 1.0 {
            return Err(MapError::OutsideDomainOfDefinition(w));
        }
        Ok(match &self.kind {
            InteriorKind::Disk { center, radius } => center + w * *radius,
            InteriorKind::Polygon(m) => m.f(w),
        })
    }

    /// arg φ of the boundary point with parameter s, in `[θ(0), θ(0) + 2π)`.
    pub fn theta_at(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.domain.perimeter());
        if let Some(t) = self.table.lookup(s) {
            return t;
        }
        match &self.kind {
            InteriorKind::Disk { radius, .. } => s / radius,
            InteriorKind::Polygon(m) => m.theta_of_s(s, Some(self.table.guess(s))),
        }
    }

    pub fn theta_unwrapped(&self, s: f64) -> f64 {
        let per = self.domain.perimeter();
        let k = (s / per).floor();
        self.theta_at(s - k * per) + TAU * k
    }

    /// Boundary parameter of φ⁻¹(e^{iθ}).
    pub fn s_of_theta(&self, theta: f64) -> f64 {
        let per = self.domain.perimeter();
        match &self.kind {
            InteriorKind::Disk { radius, .. } => (theta * radius).rem_euclid(per),
            InteriorKind::Polygon(m) => m.s_of_theta(theta).rem_euclid(per),
        }
    }

    /// Harmonic measure of `arc` seen from the disk point `w = φ(z)`.
    pub fn harmonic_measure_at_preimage(&self, w: C64, arc: &BoundaryArc) -> f64 {
        if arc.arclength() >= self.domain.perimeter() {
            return 1.0;
        }
        let a = self.theta_unwrapped(arc.start());
        let b = self.theta_unwrapped(arc.end());
        disk_harmonic_measure(w, a, b - a)
    }

    /// ω(z, arc, G) for z ∈ Ḡ, with the indicator convention on the boundary.
    pub fn harmonic_measure(&self, z: C64, arc: &BoundaryArc) -> Result<f64, MapError> {
        match self.domain.contains(z) {
            Location::Exterior => Err(MapError::OutsideDomainOfDefinition(z)),
            Location::Boundary => {
                let s = self.domain.nearest_param(z)?;
                Ok(if arc.contains(s) { 1.0 } else { 0.0 })
            }
            Location::Interior => Ok(self.harmonic_measure_at_preimage(self.eval(z)?, arc)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MapData {
            domain: self.domain.spec().clone(),
            map: &self.kind,
            table: self.table.clone(),
        })
        .expect("map serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, MapError> {
        let d: MapData<InteriorKind> =
            serde_json::from_str(s).map_err(|e| MapError::Unsupported(e.to_string()))?;
        Ok(InteriorMap {
            domain: ConvexDomain::new(d.domain)?,
            kind: d.map,
            table: d.table,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexDomain {
        ConvexDomain::new(DomainSpec::polygon(&[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 1.0),
        ]))
        .unwrap()
    }

    fn triangle() -> ConvexDomain {
        ConvexDomain::new(DomainSpec::polygon(&[
            C64::new(0.0, 0.0),
            C64::new(2.0, 0.1),
            C64::new(0.6, 1.3),
        ]))
        .unwrap()
    }

    #[test]
    fn square_capacity() {
        // cap of a square with side h is Γ(1/4)² h / (4 π^{3/2})
        let g = libm::tgamma(0.25);
        let exact = g * g / (4.0 * PI.powf(1.5));
        let cap = capacity(&square()).unwrap();
        assert!((cap - exact).abs() < 1e-12, "{cap} vs {exact}");
    }

    #[test]
    fn regular_capacity_increases_with_sides() {
        let mut last = 0.0;
        for n in 3..=10 {
            let d = ConvexDomain::new(DomainSpec::regular(n, 1.0, 0.0)).unwrap();
            let c = capacity(&d).unwrap();
            assert!(c > last && c < 1.0, "n={n}: {c}");
            last = c;
        }
    }

    #[test]
    fn exterior_round_trip_irregular() {
        let d = triangle();
        let m = exterior_map(&d).unwrap();
        for k in 0..40 {
            let t = 0.37 + k as f64 * 0.157;
            for r in [1.0001, 1.05, 1.5, 4.0] {
                let w = C64::from_polar(r, t);
                let z = m.eval_inverse(w).unwrap();
                let back = m.eval(z).unwrap();
                assert!((back - w).norm() < 1e-9, "w={w} back={back}");
            }
        }
    }

    #[test]
    fn exterior_boundary_correspondence() {
        let d = triangle();
        let m = exterior_map(&d).unwrap();
        for k in 0..50 {
            let s = d.perimeter() * (k as f64 + 0.3) / 50.0;
            let t = m.theta_at(s);
            let z = m.eval_inverse(C64::from_polar(1.0, t)).unwrap();
            assert!((z - d.boundary_point(s).z).norm() < 1e-10);
            assert!((m.s_of_theta(t) - s).abs() < 1e-10);
        }
        assert!(m.table().is_strictly_increasing());
    }

    #[test]
    fn interior_round_trip() {
        let d = triangle();
        let m = interior_map(&d).unwrap();
        assert!(m.eval(d.centroid()).unwrap().norm() < 1e-12);
        for k in 0..30 {
            let w = C64::from_polar(0.05 + 0.9 * (k as f64 / 30.0), 1.3 * k as f64);
            let z = m.eval_inverse(w).unwrap();
            assert!((m.eval(z).unwrap() - w).norm() < 1e-9);
        }
        // side midpoints: near an acute corner the radial limit converges slowly
        let cum = d.vertex_params().unwrap().to_vec();
        for k in 0..3 {
            let end = if k == 2 { d.perimeter() } else { cum[k + 1] };
            let s = 0.5 * (cum[k] + end);
            let t = m.theta_at(s);
            let z = m.eval_inverse(C64::from_polar(1.0 - 1e-12, t)).unwrap();
            assert!((z - d.boundary_point(s).z).norm() < 1e-8, "s={s} t={t} z={z} want={}", d.boundary_point(s).z);
        }
    }

    #[test]
    fn ellipse_matches_joukowski() {
        let d = ConvexDomain::new(DomainSpec::ellipse(C64::new(0.3, -0.2), 2.0, 1.0, 0.4)).unwrap();
        let m = exterior_map(&d).unwrap();
        assert!((m.capacity() - 1.5).abs() < 1e-15);
        let z = C64::new(4.0, 1.0);
        let w = m.eval(z).unwrap();
        assert!(w.norm() > 1.0);
        assert!((m.eval_inverse(w).unwrap() - z).norm() < 1e-12);
        let (cap, b) = m.laurent_coefficients(3).unwrap();
        assert!((cap - 1.5).abs() < 1e-12, "{cap} {b:?}");
        assert!((b[0] - C64::new(0.3, -0.2)).norm() < 1e-12);
        assert!((b[1] - C64::from_polar(0.5, 0.8)).norm() < 1e-12);
    }

    #[test]
    fn disk_harmonic_measure_matches_poisson() {
        let poisson = |w: C64, a: f64, len: f64| {
            let g = crate::quadrature::GaussRule::legendre(40);
            let m = 200;
            (0..m)
                .map(|k| {
                    let lo = a + len * k as f64 / m as f64;
                    let hi = a + len * (k + 1) as f64 / m as f64;
                    g.integrate(lo, hi, |t| {
                        (1.0 - w.norm_sqr()) / (C64::from_polar(1.0, t) - w).norm_sqr()
                    })
                })
                .sum::<f64>()
                / TAU
        };
        for (w, a, len) in [
            (C64::new(0.0, 0.0), 0.3, 1.0),
            (C64::new(0.5, -0.3), 2.0, 4.0),
            (C64::new(-0.7, 0.1), -1.0, 0.2),
            (C64::new(0.2, 0.9 * 0.95), 5.0, 6.0),
        ] {
            let got = disk_harmonic_measure(w, a, len);
            let exact = poisson(w, a, len);
            assert!((got - exact).abs() < 1e-10, "{got} vs {exact}");
        }
    }

    #[test]
    fn harmonic_measure_of_complementary_arcs_sums_to_one() {
        let d = square();
        let m = interior_map(&d).unwrap();
        let arc = BoundaryArc::new(0.7, 1.6, d.perimeter());
        let z = C64::new(0.3, 0.6);
        let a = m.harmonic_measure(z, &arc).unwrap();
        let b = m.harmonic_measure(z, &arc.complement()).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
        // by symmetry, the center sees each side with measure 1/4
        let side = BoundaryArc::new(0.0, 1.0, d.perimeter());
        let c = m.harmonic_measure(C64::new(0.5, 0.5), &side).unwrap();
        assert!((c - 0.25).abs() < 1e-12, "{c}");
    }

    #[test]
    fn rigid_motion_invariance() {
        let base = triangle();
        let rot = C64::from_polar(1.0, 0.9);
        let shift = C64::new(-3.0, 2.0);
        let moved = ConvexDomain::new(DomainSpec::polygon(
            &base.vertices().unwrap().iter().map(|v| rot * v + shift).collect::<Vec<_>>(),
        ))
        .unwrap();
        let (m1, m2) = (exterior_map(&base).unwrap(), exterior_map(&moved).unwrap());
        assert!((m1.capacity() - m2.capacity()).abs() < 1e-12);
        let arc = BoundaryArc::new(0.4, 1.1, base.perimeter());
        assert!((m1.equilibrium_measure(&arc) - m2.equilibrium_measure(&arc)).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let m = exterior_map(&triangle()).unwrap();
        let m2 = ExteriorMap::from_json(&m.to_json()).unwrap();
        let w = C64::new(1.3, -0.4);
        assert_eq!(m.eval_inverse(w).unwrap(), m2.eval_inverse(w).unwrap());
        let i = interior_map(&square()).unwrap();
        let i2 = InteriorMap::from_json(&i.to_json()).unwrap();
        assert_eq!(i.eval_inverse(w * 0.5).unwrap(), i2.eval_inverse(w * 0.5).unwrap());
    }
}
