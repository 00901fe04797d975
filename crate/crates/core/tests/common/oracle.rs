//! Reference implementations that share no code with the library: explicit
//! normal equations, a Gauss-Jordan inverse and a Student-t tail obtained by
//! numerical quadrature of the density.

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        assert!(d.abs() > 1e-300, "singular matrix in oracle");
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != c {
                let f = m[r][c];
                let pivot_row = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// Gamma function at positive integers and half-integers.
fn gamma_half(two_x: u64) -> f64 {
    if two_x % 2 == 0 {
        (1..two_x / 2).map(|i| i as f64).product()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        let n = two_x / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for i in 0..n {
            g *= i as f64 + 0.5;
        }
        g
    }
}

pub fn t_density(x: f64, dof: u64) -> f64 {
    let v = dof as f64;
    let c = gamma_half(dof + 1) / ((v * std::f64::consts::PI).sqrt() * gamma_half(dof));
    c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature on [a, b].
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `P(|T| > |t|)` as one minus the integrated density over `[-|t|, |t|]`.
pub fn t_two_sided_p(t: f64, dof: u64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 1.0;
    }
    // split so each piece has moderate curvature
    let pieces = 64;
    let h = a / pieces as f64;
    let f = |x: f64| t_density(x, dof);
    let inner: f64 = (0..pieces)
        .map(|i| integrate(&f, i as f64 * h, (i + 1) as f64 * h, 1e-16))
        .sum();
    (1.0 - 2.0 * inner).max(0.0)
}

pub struct OlsOracle {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r2: f64,
}

/// OLS with an intercept via `(X'X)^-1 X'y`.
pub fn ols(y: &[f64], cols: &[&[f64]]) -> OlsOracle {
    let n = y.len();
    let mut x: Vec<Vec<f64>> = vec![vec![1.0; n]];
    x.extend(cols.iter().map(|c| c.to_vec()));
    let k = x.len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| (0..n).map(|r| x[i][r] * x[j][r]).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|i| (0..n).map(|r| x[i][r] * y[r]).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let resid: Vec<f64> = (0..n)
        .map(|r| y[r] - (0..k).map(|i| beta[i] * x[i][r]).sum::<f64>())
        .collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let dof = n - k;
    let s2 = rss / dof as f64;
    let se: Vec<f64> = (0..k).map(|i| (s2 * inv[i][i]).sqrt()).collect();
    let t: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let p = t.iter().map(|t| t_two_sided_p(*t, dof as u64)).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    OlsOracle {
        beta,
        se,
        t,
        p,
        r2: 1.0 - rss / tss,
    }
}

/// Column-standardized copy (mean 0, n-1 std 1).
pub fn standardize(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|c| {
            let n = c.len() as f64;
            let m = c.iter().sum::<f64>() / n;
            let s = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect()
}

/// PLS1 weight `Z'(y - ybar) / |Z'(y - ybar)|`.
pub fn pls_weights(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let z = standardize(cols);
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let w: Vec<f64> = z
        .iter()
        .map(|c| c.iter().zip(y).map(|(a, b)| a * (b - ybar)).sum())
        .collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter().map(|v| v / norm).collect()
}

pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

pub fn corr(a: &[f64], b: &[f64]) -> f64 {
    covariance(a, b) / (covariance(a, a) * covariance(b, b)).sqrt()
}
