//! Complex upper-Hessenberg eigenvalues: balancing plus single-shift QR.

use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Schur {
    pub eigenvalues: Vec<C64>,
    /// `‖BU - UT‖_F / ‖B‖_F` for the balanced matrix B.
    pub backward_error: f64,
}

type Mat = Vec<Vec<C64>>;

fn frob(a: &Mat) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Diagonal similarity by powers of two that equalizes row and column norms.
fn balance(a: &mut Mat) {
    let n = a.len();
    let radix = 2.0f64;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].norm();
                    r += a[i][j].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Rotation `[c s; -conj(s) c]` with real c sending (x, y) to (ρ, 0).
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let rho = ax.hypot(ay);
    (ax / rho, (x / ax) * y.conj() / rho)
}

fn rotate_rows(a: &mut Mat, i: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (a[i][j], a[i + 1][j]);
        a[i][j] = x * c + s * y;
        a[i + 1][j] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(a: &mut Mat, i: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for row in &mut a[rows] {
        let (p, q) = (row[i], row[i + 1]);
        row[i] = p * c + q * s.conj();
        row[i + 1] = -p * s + q * c;
    }
}

/// Eigenvalues of an upper-Hessenberg matrix (entries below the first
/// subdiagonal are ignored). Returns `None` if the iteration stalls.
pub fn hessenberg_eigenvalues(h: &[Vec<C64>]) -> Option<Schur> {
    let n = h.len();
    if n == 0 {
        return Some(Schur {
            eigenvalues: vec![],
            backward_error: 0.0,
        });
    }
    let mut a: Mat = h.to_vec();
    for (i, row) in a.iter_mut().enumerate() {
        for x in row.iter_mut().take(i.saturating_sub(1)) {
            *x = C64::new(0.0, 0.0);
        }
    }
    balance(&mut a);
    let b = a.clone();
    let mut u: Mat = (0..n)
        .map(|i| (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut since = 0usize;
    while hi > 0 {
        // find the start of the trailing unreduced block
        let mut l = hi;
        while l > 0 {
            let s = a[l - 1][l - 1].norm() + a[l][l].norm();
            let s = if s == 0.0 { frob(&b) } else { s };
            if a[l][l - 1].norm() <= eps * s {
                a[l][l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since = 0;
            continue;
        }
        iter += 1;
        since += 1;
        if iter > 100 * n {
            return None;
        }
        // Wilkinson shift from the trailing 2×2, exceptional shifts on stagnation
        let (p, q, r, t) = (a[hi - 1][hi - 1], a[hi - 1][hi], a[hi][hi - 1], a[hi][hi]);
        let mu = if since % 11 == 10 {
            t + C64::new(0.75 * a[hi][hi - 1].norm(), 0.0)
        } else {
            let tr = 0.5 * (p + t);
            let det = p * t - q * r;
            let d = (tr * tr - det).sqrt();
            let (e1, e2) = (tr + d, tr - d);
            if (e1 - t).norm() <= (e2 - t).norm() {
                e1
            } else {
                e2
            }
        };
        // implicit single-shift sweep over l..=hi
        let (c, s) = givens(a[l][l] - mu, a[l + 1][l]);
        rotate_rows(&mut a, l, c, s, l..n);
        rotate_cols(&mut a, l, c, s, 0..(l + 3).min(hi + 1));
        rotate_cols(&mut u, l, c, s, 0..n);
        for k in l + 1..hi {
            let (c, s) = givens(a[k][k - 1], a[k + 1][k - 1]);
            rotate_rows(&mut a, k, c, s, k - 1..n);
            a[k + 1][k - 1] = C64::new(0.0, 0.0);
            rotate_cols(&mut a, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut u, k, c, s, 0..n);
        }
    }
    // ‖BU - UT‖ with T the computed upper-triangular factor
    let mut t = a.clone();
    for (i, row) in t.iter_mut().enumerate() {
        for x in row.iter_mut().take(i) {
            *x = C64::new(0.0, 0.0);
        }
    }
    let mut res = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut x = C64::new(0.0, 0.0);
            for k in 0..n {
                x += b[i][k] * u[k][j] - u[i][k] * t[k][j];
            }
            res += x.norm_sqr();
        }
    }
    let nb = frob(&b);
    Some(Schur {
        eigenvalues: (0..n).map(|i| a[i][i]).collect(),
        backward_error: if nb == 0.0 { 0.0 } else { res.sqrt() / nb },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_eval(roots: &[C64], z: C64) -> C64 {
        roots.iter().map(|r| z - r).product()
    }

    #[test]
    fn companion_roots() {
        // companion matrix of (z-1)(z-2i)(z+0.5)(z-3)
        let roots = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(-0.5, 0.0),
            C64::new(3.0, 0.0),
        ];
        let mut coef = vec![C64::new(1.0, 0.0)];
        for r in &roots {
            let mut next = vec![C64::new(0.0, 0.0); coef.len() + 1];
            for (i, c) in coef.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            coef = next;
        }
        let n = roots.len();
        let mut h = vec![vec![C64::new(0.0, 0.0); n]; n];
        for j in 0..n {
            h[0][j] = -coef[j + 1];
        }
        for i in 1..n {
            h[i][i - 1] = C64::new(1.0, 0.0);
        }
        let s = hessenberg_eigenvalues(&h).unwrap();
        for e in &s.eigenvalues {
            assert!(poly_eval(&roots, *e).norm() < 1e-10, "{e}");
        }
        assert!(s.backward_error < 1e-14);
    }

    #[test]
    fn nilpotent_shift_has_exact_zero_spectrum() {
        let n = 30;
        let mut h = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 1..n {
            h[i][i - 1] = C64::new(0.5 + i as f64, 0.0);
        }
        let s = hessenberg_eigenvalues(&h).unwrap();
        assert!(s.eigenvalues.iter().all(|e| e.norm() < 1e-12));
    }

    #[test]
    fn triangular_input() {
        let h = vec![
            vec![C64::new(2.0, 1.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ];
        let mut e = hessenberg_eigenvalues(&h).unwrap().eigenvalues;
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(e, vec![C64::new(-1.0, 0.0), C64::new(2.0, 1.0)]);
    }
}
