//! Banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals. Storage reserves
/// `kl` extra super-diagonals for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds to entry `(i, j)`; it must lie inside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={}, ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn clear_row(&mut self, i: usize) {
        let start = i * self.width;
        self.data[start..start + self.width].fill(0.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + self.kl).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(&self) -> Result<BandLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let reach = a.ku + a.kl;
        let mut piv = vec![0usize; n];
        let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..=last {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinearSolve {
                    step: k,
                    reason: "zero or non-finite pivot".into(),
                    pivot_ratio: 0.0,
                });
            }
            pmin = pmin.min(best);
            pmax = pmax.max(best);
            let cend = (k + reach).min(n - 1);
            if p != k {
                for j in k..=cend {
                    let (sk, sp) = (a.slot(k, j), a.slot(p, j));
                    a.data.swap(sk, sp);
                }
            }
            let d = a.get(k, k);
            for i in k + 1..=last {
                let si = a.slot(i, k);
                let l = a.data[si] / d;
                a.data[si] = l;
                if l != 0.0 {
                    for j in k + 1..=cend {
                        let v = a.data[a.slot(k, j)];
                        let s = a.slot(i, j);
                        a.data[s] -= l * v;
                    }
                }
            }
        }
        Ok(BandLu {
            lu: a,
            piv,
            pivot_ratio: if pmax > 0.0 { pmin / pmax } else { 0.0 },
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    piv: Vec<usize>,
    /// Smallest over largest pivot magnitude, a cheap conditioning hint.
    pub pivot_ratio: f64,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.lu;
        let n = a.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    x[i] -= a.get(i, k) * xk;
                }
            }
        }
        let reach = a.ku + a.kl;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= a.get(k, j) * x[j];
            }
            x[k] = s / a.get(k, k);
        }
        x
    }
}

/// Solves `A x = b` with `refinements` rounds of iterative refinement and
/// returns the solution, the final max-norm residual and the pivot ratio.
pub fn solve_refined(a: &BandMatrix, b: &[f64], refinements: usize) -> Result<(Vec<f64>, f64, f64)> {
    let lu = a.factor()?;
    let mut x = lu.solve(b);
    let residual = |x: &[f64]| -> Vec<f64> {
        a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
    };
    let mut r = residual(&x);
    for _ in 0..refinements {
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = residual(&x);
    }
    let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::LinearSolve {
            step: 0,
            reason: "non-finite solution".into(),
            pivot_ratio: lu.pivot_ratio,
        });
    }
    Ok((x, rmax, lu.pivot_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        // Gaussian elimination with partial pivoting as an independent reference
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut r = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            r.swap(k, p);
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                r[i] -= l * r[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
            x[k] = (r[k] - s) / m[k][k];
        }
        x
    }

    #[test]
    fn tridiagonal() {
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let b = vec![1.0; n];
        let (x, r, _) = solve_refined(&a, &b, 1).unwrap();
        assert!(r < 1e-14);
        // exact solution of the discrete Poisson problem: x_i = (i+1)(n-i)/2
        for (i, xi) in x.iter().enumerate() {
            let e = ((i + 1) * (n - i)) as f64 / 2.0;
            assert!((xi - e).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(a.factor(), Err(Error::LinearSolve { .. })));
    }

    proptest! {
        #[test]
        fn matches_dense_reference(
            vals in proptest::collection::vec(-1.0f64..1.0, 12 * 7),
            rhs in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let (n, kl, ku) = (12, 2, 3);
            let mut a = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            let mut it = vals.iter();
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v = *it.next().unwrap() + if i == j { 0.05 } else { 0.0 };
                    a.add(i, j, v);
                    dense[i][j] = v;
                }
            }
            let reference = dense_solve(&dense, &rhs);
            prop_assume!(reference.iter().all(|v| v.is_finite() && v.abs() < 1e6));
            let lu = a.factor().unwrap();
            let x = lu.solve(&rhs);
            let r: f64 = a.matvec(&x).iter().zip(&rhs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(r < 1e-8, "residual {r}");
        }
    }
}
