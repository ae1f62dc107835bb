//! Gauss rules (Golub–Welsch) and an adaptive panel integrator for contour
//! integrals whose integrands carry algebraic endpoint singularities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

/// Gauss rule on [-1, 1] for the Jacobi weight `(1-x)^alpha (1+x)^beta`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Self {
        Self::jacobi(n, 0.0, 0.0)
    }

    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Self {
        assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
        let ab = alpha + beta;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for (k, d) in diag.iter_mut().enumerate() {
            let kf = k as f64;
            let den = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
            *d = if den.abs() < 1e-300 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / den
            };
        }
        for (k, o) in off.iter_mut().enumerate() {
            let kf = (k + 1) as f64;
            let num = 4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab);
            let t = 2.0 * kf + ab;
            let den = t * t * (t + 1.0) * (t - 1.0);
            *o = (num / den).sqrt();
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = diag[k];
            if k + 1 < n {
                m[(k, k + 1)] = off[k];
                m[(k + 1, k)] = off[k];
            }
        }
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + libm::lgamma(alpha + 1.0)
            + libm::lgamma(beta + 1.0)
            - libm::lgamma(ab + 2.0))
        .exp();
        let eig = SymmetricEigen::new(m);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Integrate a smooth function over [lo, hi] (Legendre rules only).
    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let h = 0.5 * (hi - lo);
        let m = 0.5 * (hi + lo);
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
    }
}

/// Gauss rule on [0, 1] for the weight `x^a (1-x)^b`.
#[derive(Debug)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type RuleKey = (usize, u64, u64);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<UnitRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<UnitRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached `n`-point rule on [0, 1] for the weight `x^a (1-x)^b`.
pub fn unit_rule(n: usize, a: f64, b: f64) -> Arc<UnitRule> {
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = rule_cache().lock().expect("rule cache poisoned").get(&key) {
        return r.clone();
    }
    let g = GaussRule::jacobi(n, b, a);
    let scale = 2f64.powf(a + b + 1.0);
    let rule = Arc::new(UnitRule {
        nodes: g.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: g.weights.iter().map(|w| w / scale).collect(),
    });
    rule_cache()
        .lock()
        .expect("rule cache poisoned")
        .insert(key, rule.clone());
    rule
}

const PANEL_NODES: usize = 20;
const MAX_DEPTH: usize = 60;

/// Adaptive integral over a parameterized path `t ∈ [0, 1] ↦ point(t)`.
///
/// `f(t)` is the integrand including the path Jacobian. Panels are bisected
/// until every point in `singular` lies at least one panel length from the
/// panel midpoint. An algebraic endpoint singularity `|t - t_end|^p` is
/// absorbed by a Gauss–Jacobi rule when `start_exp` / `end_exp` is nonzero;
/// the singular point itself must then sit at the corresponding path end.
pub(crate) fn integrate_path<P, F>(
    point: &P,
    f: &F,
    length: f64,
    singular: &[C64],
    start_exp: f64,
    end_exp: f64,
) -> C64
where
    P: Fn(f64) -> C64,
    F: Fn(f64) -> C64,
{
    let ctx = PathCtx {
        point,
        f,
        length,
        singular,
        touch: 1e-12 * length.max(1e-300),
    };
    if start_exp != 0.0 && end_exp != 0.0 {
        ctx.panel(0.0, 0.5, start_exp, 0.0, 0) + ctx.panel(0.5, 1.0, 0.0, end_exp, 0)
    } else {
        ctx.panel(0.0, 1.0, start_exp, end_exp, 0)
    }
}

struct PathCtx<'a, P, F> {
    point: &'a P,
    f: &'a F,
    length: f64,
    singular: &'a [C64],
    touch: f64,
}

impl<P, F> PathCtx<'_, P, F>
where
    P: Fn(f64) -> C64,
    F: Fn(f64) -> C64,
{
    fn panel(&self, ta: f64, tb: f64, sa: f64, sb: f64, depth: usize) -> C64 {
        let mid = (self.point)(0.5 * (ta + tb));
        let len = self.length * (tb - ta);
        let pa = (self.point)(ta);
        let pb = (self.point)(tb);
        let resolved = self.singular.iter().all(|s| {
            if sa != 0.0 && (s - pa).norm() <= self.touch {
                return true;
            }
            if sb != 0.0 && (s - pb).norm() <= self.touch {
                return true;
            }
            (s - mid).norm() >= len
        });
        if resolved || depth >= MAX_DEPTH {
            return self.apply(ta, tb, sa, sb);
        }
        let tm = 0.5 * (ta + tb);
        if sa != 0.0 && sb != 0.0 {
            return self.panel(ta, tm, sa, 0.0, depth + 1) + self.panel(tm, tb, 0.0, sb, depth + 1);
        }
        self.panel(ta, tm, sa, 0.0, depth + 1) + self.panel(tm, tb, 0.0, sb, depth + 1)
    }

    fn apply(&self, ta: f64, tb: f64, sa: f64, sb: f64) -> C64 {
        let h = tb - ta;
        let rule = unit_rule(PANEL_NODES, sa, sb);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = ta + h * x;
            let mut v = (self.f)(t);
            if sa != 0.0 {
                v /= x.powf(sa);
            }
            if sb != 0.0 {
                v /= (1.0 - x).powf(sb);
            }
            acc += v * *w;
        }
        acc * h
    }
}

/// Real integral over `[a, b]` with singular abscissae on the real line.
pub(crate) fn integrate_real<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    f: &F,
    singular: &[f64],
    start_exp: f64,
    end_exp: f64,
) -> f64 {
    let pts: Vec<C64> = singular.iter().map(|&x| C64::new(x, 0.0)).collect();
    let point = |t: f64| C64::new(a + (b - a) * t, 0.0);
    let g = |t: f64| C64::new(f(a + (b - a) * t) * (b - a), 0.0);
    integrate_path(&point, &g, (b - a).abs(), &pts, start_exp, end_exp).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exactness() {
        let g = GaussRule::legendre(10);
        for p in 0..20 {
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            let got: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(p)).sum();
            assert!((got - exact).abs() < 1e-14, "p={p}: {got} vs {exact}");
        }
    }

    #[test]
    fn unit_jacobi_moments() {
        // ∫_0^1 x^a (1-x)^b x^k dx = B(a+k+1, b+1)
        let (a, b) = (0.37, -0.5);
        let r = unit_rule(12, a, b);
        for k in 0..20 {
            let kf = k as f64;
            let exact = (libm::lgamma(a + kf + 1.0) + libm::lgamma(b + 1.0)
                - libm::lgamma(a + b + kf + 2.0))
            .exp();
            let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
            assert!((got - exact).abs() < 1e-13 * exact.max(1.0), "k={k}");
        }
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^2 x^0.3 (2.5 - x)^-1 dx, singular endpoint at 0 plus a nearby pole at 2.5
        let f = |x: f64| x.powf(0.3) / (2.5 - x);
        let got = integrate_real(0.0, 2.0, &f, &[0.0, 2.5], 0.3, 0.0);
        // reference by substitution x = u^(1/0.3) and heavy composite Gauss
        let g = GaussRule::legendre(30);
        let top = 2f64.powf(1.3);
        let mut refv = 0.0;
        let m = 4000;
        for k in 0..m {
            let lo = top * k as f64 / m as f64;
            let hi = top * (k + 1) as f64 / m as f64;
            // x^0.3 dx = d(x^1.3)/1.3
            refv += g.integrate(lo, hi, |u| {
                let x = u.powf(1.0 / 1.3);
                1.0 / (1.3 * (2.5 - x))
            });
        }
        assert!((got - refv).abs() < 1e-12, "{got} vs {refv}");
    }
}
