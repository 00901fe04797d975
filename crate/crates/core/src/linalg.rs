//! Column-pivoted Householder QR for tall least-squares problems.

/// Relative pivot tolerance below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Factorization `X P = Q R` of an `n x k` matrix held as `k` columns.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Householder-reduced columns; the upper triangle holds `R`.
    cols: Vec<Vec<f64>>,
    /// Householder vectors (unit norm), one per reflected column.
    reflectors: Vec<Vec<f64>>,
    /// `perm[j]` is the original index of the column at position `j`.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(columns: &[&[f64]]) -> Self {
        let k = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        let mut cols: Vec<Vec<f64>> = columns.iter().map(|c| c.to_vec()).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut reflectors = Vec::with_capacity(k);
        let mut first_pivot = 0.0_f64;
        let mut rank = 0;

        for j in 0..k.min(n) {
            let tail_norm = |c: &Vec<f64>| c[j..].iter().map(|v| v * v).sum::<f64>();
            let (p, best) = (j..k)
                .map(|p| (p, tail_norm(&cols[p])))
                .fold((j, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            cols.swap(j, p);
            perm.swap(j, p);

            let norm = best.sqrt();
            if j == 0 {
                first_pivot = norm;
            }
            if norm == 0.0 || norm <= RANK_TOLERANCE * first_pivot {
                break;
            }
            rank += 1;

            let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
            let mut v = vec![0.0; n];
            v[j..].copy_from_slice(&cols[j][j..]);
            v[j] -= alpha;
            let vnorm = v[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                v[j..].iter_mut().for_each(|x| *x /= vnorm);
            }
            cols[j][j] = alpha;
            cols[j][j + 1..].iter_mut().for_each(|x| *x = 0.0);
            for c in cols.iter_mut().skip(j + 1) {
                reflect(&v, j, c);
            }
            reflectors.push(v);
        }

        Self {
            cols,
            reflectors,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_cols(&self) -> usize {
        self.perm.len()
    }

    /// Original indices of columns that fell below the pivot tolerance.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut out = self.perm[self.rank..].to_vec();
        out.sort_unstable();
        out
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    /// Least-squares coefficients in original column order. Requires full rank.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let k = self.n_cols();
        debug_assert_eq!(self.rank, k);
        let mut qty = y.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            reflect(v, j, &mut qty);
        }
        let mut z = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| self.r(i, j) * z[j]).sum();
            z[i] = (qty[i] - s) / self.r(i, i);
        }
        let mut beta = vec![0.0; k];
        for (pos, &orig) in self.perm.iter().enumerate() {
            beta[orig] = z[pos];
        }
        beta
    }

    /// Diagonal of `(X'X)^-1` in original column order. Requires full rank.
    pub fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let k = self.n_cols();
        // R^-1 is upper triangular; (X'X)^-1 = P R^-1 R^-T P'.
        let mut rinv = vec![vec![0.0; k]; k];
        for col in 0..k {
            for i in (0..=col).rev() {
                let rhs = if i == col { 1.0 } else { 0.0 };
                let s: f64 = (i + 1..=col).map(|j| self.r(i, j) * rinv[j][col]).sum();
                rinv[i][col] = (rhs - s) / self.r(i, i);
            }
        }
        let mut diag = vec![0.0; k];
        for (pos, &orig) in self.perm.iter().enumerate() {
            diag[orig] = rinv[pos].iter().map(|v| v * v).sum();
        }
        diag
    }
}

fn reflect(v: &[f64], start: usize, x: &mut [f64]) {
    let dot: f64 = v[start..].iter().zip(&x[start..]).map(|(a, b)| a * b).sum();
    for (xi, vi) in x[start..].iter_mut().zip(&v[start..]) {
        *xi -= 2.0 * dot * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [[2, 1], [1, 3]] b = [3, 5] -> b = [0.8, 1.4]
        let c0 = [2.0, 1.0];
        let c1 = [1.0, 3.0];
        let qr = PivotedQr::new(&[&c0, &c1]);
        assert_eq!(qr.rank(), 2);
        let b = qr.solve(&[3.0, 5.0]);
        assert!((b[0] - 0.8).abs() < 1e-14);
        assert!((b[1] - 1.4).abs() < 1e-14);
        // inverse of [[5, 5], [5, 10]] has diagonal [0.4, 0.2]
        let d = qr.inverse_gram_diagonal();
        assert!((d[0] - 0.4).abs() < 1e-14);
        assert!((d[1] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn detects_dependent_column() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 0.0, 1.0, 0.0];
        let c = [3.0, 4.0, 7.0, 8.0]; // a + 2b
        let qr = PivotedQr::new(&[&a, &b, &c]);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.dependent_columns().len(), 1);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let a = [0.0, 0.0, 0.0];
        let qr = PivotedQr::new(&[&a]);
        assert_eq!(qr.rank(), 0);
        assert_eq!(qr.dependent_columns(), vec![0]);
    }
}
