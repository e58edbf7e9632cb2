// Small dense/banded kernels used by the oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::num::sqrt;

/// Square matrix stored by diagonals `j - i ∈ [-band, band]`.
pub(crate) struct BandedMatrix {
    n: usize,
    band: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub(crate) fn new(n: usize, band: usize) -> Self {
        Self {
            n,
            band,
            data: vec![0.0; n * (2 * band + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.band + 1) + (j + self.band - i)
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.band);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// Stationary vector of the stochastic matrix by GTH state reduction.
    /// Diagonal entries are ignored. `None` if a state cannot be eliminated
    /// (reducible chain).
    pub(crate) fn gth_stationary(mut self) -> Option<Vec<f64>> {
        let (n, b) = (self.n, self.band);
        let mut exit = vec![0.0; n];
        for m in (1..n).rev() {
            let lo = m.saturating_sub(b);
            let s: f64 = (lo..m).map(|j| self.get(m, j)).sum();
            if !(s > 0.0) {
                return None;
            }
            exit[m] = s;
            for i in lo..m {
                let a = self.get(i, m);
                if a == 0.0 {
                    continue;
                }
                let f = a / s;
                let w = 2 * b + 1;
                // row m and row i over columns lo..m
                let rm = m * w + b;
                let ri = i * w + b - i;
                for j in lo..m {
                    let v = self.data[rm + j - m];
                    if v != 0.0 {
                        self.data[ri + j] += f * v;
                    }
                }
            }
        }
        let mut pi = vec![0.0; n];
        pi[0] = 1.0;
        for m in 1..n {
            let lo = m.saturating_sub(b);
            let mut acc = 0.0;
            for i in lo..m {
                acc += pi[i] * self.get(i, m);
            }
            pi[m] = acc / exit[m];
        }
        let total: f64 = pi.iter().sum();
        for v in &mut pi {
            *v /= total;
        }
        Some(pi)
    }
}

/// Least squares `min ‖Xβ - y‖` by modified Gram-Schmidt with one
/// reorthogonalization pass and one step of iterative refinement. `None` if
/// the design is rank deficient.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = columns.len();
    let mut q: Vec<Vec<f64>> = columns.to_vec();
    let scale: Vec<f64> = q
        .iter()
        .map(|c| sqrt(c.iter().map(|v| v * v).sum()))
        .collect();
    for (c, &s) in q.iter_mut().zip(&scale) {
        if !(s > 0.0) {
            return None;
        }
        for v in c.iter_mut() {
            *v /= s;
        }
    }
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                r[i][j] += d;
                let qi = q[i].clone();
                for (x, a) in q[j].iter_mut().zip(&qi) {
                    *x -= d * a;
                }
            }
        }
        let norm = sqrt(q[j].iter().map(|v| v * v).sum());
        if !(norm > 1e-10) {
            return None;
        }
        r[j][j] = norm;
        for v in q[j].iter_mut() {
            *v /= norm;
        }
    }
    let solve = |rhs_vec: &[f64]| -> Vec<f64> {
        let mut rhs: Vec<f64> = (0..k)
            .map(|i| q[i].iter().zip(rhs_vec).map(|(a, b)| a * b).sum())
            .collect();
        for i in (0..k).rev() {
            for j in i + 1..k {
                rhs[i] -= r[i][j] * rhs[j];
            }
            rhs[i] /= r[i][i];
        }
        rhs
    };
    let mut b = solve(y);
    let n = y.len();
    let resid: Vec<f64> = (0..n)
        .map(|t| {
            let fit: f64 = (0..k).map(|c| columns[c][t] / scale[c] * b[c]).sum();
            y[t] - fit
        })
        .collect();
    for (bi, d) in b.iter_mut().zip(solve(&resid)) {
        *bi += d;
    }
    Some(b.iter().zip(&scale).map(|(b, s)| b / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gth_two_state() {
        let mut m = BandedMatrix::new(2, 1);
        m.add(0, 1, 0.3);
        m.add(0, 0, 0.7);
        m.add(1, 0, 0.1);
        m.add(1, 1, 0.9);
        let pi = m.gth_stationary().unwrap();
        assert!((pi[0] - 0.25).abs() < 1e-15 && (pi[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gth_birth_death() {
        // reflecting walk with up 0.2, down 0.3: geometric ratio 2/3
        let n = 30;
        let mut m = BandedMatrix::new(n, 1);
        for i in 0..n {
            if i + 1 < n {
                m.add(i, i + 1, 0.2);
            }
            if i > 0 {
                m.add(i, i - 1, 0.3);
            }
        }
        let pi = m.gth_stationary().unwrap();
        for i in 0..n - 1 {
            assert!((pi[i + 1] / pi[i] - 2.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn least_squares_exact_fit() {
        let x: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let ones = vec![1.0; x.len()];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v + 3.0 * v.ln()).collect();
        let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let b = least_squares(&[ones.clone(), x.clone(), logs], &y).unwrap();
        assert!(
            (b[0] - 2.0).abs() < 1e-10 && (b[1] + 0.5).abs() < 1e-12 && (b[2] - 3.0).abs() < 1e-10
        );
        assert!(least_squares(&[ones.clone(), ones], &y).is_none());
    }
}
