//! Banded matrices and LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` convention: column-major band storage
//! with `kl` extra rows on top to hold the fill-in produced by row
//! interchanges. A dense `n x n` matrix is the special case `kl = ku = n - 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn dense(n: usize) -> Self {
        let w = n.saturating_sub(1);
        Self::zeros(n, w, w)
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // row offset kv + i - j with kv = kl + ku
        j * self.ldab + self.kl + self.ku + i - j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                s += self.data[self.idx(i, j)] * xj;
            }
            *yi = s;
        }
    }

    /// Factorizes in place; `self` is consumed into the LU factors.
    pub fn factor(self) -> Result<BandedLu> {
        BandedLu::new(self)
    }
}

/// LU factors `P A = L U` of a band matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn new(mut a: BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let kv = a.kl + a.ku;
        let mut pivots = vec![0; n];
        // ju: last column touched by U so far
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = abs(a.data[a.idx(j, j)]);
            for r in 1..=km {
                let v = abs(a.data[a.idx(j + r, j)]);
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[j] = j + p;
            if best == 0.0 {
                return Err(Error::SingularMatrix { column: j });
            }
            ju = ju.max((j + a.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let i1 = a.idx(j, c);
                    let i2 = a.idx(j + p, c);
                    a.data.swap(i1, i2);
                }
            }
            let piv = a.data[a.idx(j, j)];
            for r in 1..=km {
                let k = a.idx(j + r, j);
                a.data[k] /= piv;
            }
            for c in (j + 1)..=ju {
                let ujc = a.data[a.idx(j, c)];
                if ujc != 0.0 {
                    for r in 1..=km {
                        // (j + r, c) is inside the extended band since c - (j + r) <= kv
                        let l = a.data[a.idx(j + r, j)];
                        let k = a.idx(j + r, c);
                        a.data[k] -= l * ujc;
                    }
                }
            }
        }
        debug_assert!(kv == a.kl + a.ku);
        Ok(Self { a, pivots })
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        let kl = a.kl;
        let kv = a.kl + a.ku;
        for j in 0..n {
            let l = self.pivots[j];
            if l != j {
                b.swap(l, j);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=km {
                    b[j + r] -= a.data[a.idx(j + r, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= a.data[a.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= a.data[a.idx(i, j)] * bj;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_from_band(m: &BandMatrix) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
    }

    #[test]
    fn needs_pivoting() {
        // zero leading entry forces a row swap
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 2.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 3.0);
        m.set(2, 2, 4.0);
        let dense = dense_from_band(&m);
        let lu = m.factor().unwrap();
        let mut b = vec![1.0, 2.0, 3.0];
        lu.solve(&mut b);
        let r = &dense * nalgebra::DVector::from_vec(b.clone()) - nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(r.amax() < 1e-14, "{r}");
    }

    #[test]
    fn singular_reported() {
        let m = BandMatrix::zeros(4, 1, 1);
        assert!(matches!(m.factor(), Err(Error::SingularMatrix { column: 0 })));
    }

    proptest! {
        #[test]
        fn banded_solve_matches_dense(
            n in 1usize..25,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in proptest::collection::vec(-1.0f64..1.0, 25 * 25 + 25),
        ) {
            let mut m = BandMatrix::zeros(n, kl, ku);
            let mut it = seed.iter();
            for i in 0..n {
                for j in 0..n {
                    if m.in_band(i, j) {
                        let mut v = *it.next().unwrap();
                        if i == j { v += 4.0 * v.signum().max(0.5); }
                        m.set(i, j, v);
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|i| seed[seed.len() - 1 - i]).collect();
            let dense = dense_from_band(&m);
            let mut ax = vec![0.0; n];
            let x_expected = dense.clone().lu().solve(&nalgebra::DVector::from_vec(rhs.clone()));
            prop_assume!(x_expected.is_some());
            let lu = m.clone().factor().unwrap();
            let mut x = rhs.clone();
            lu.solve(&mut x);
            m.matvec(&x, &mut ax);
            for i in 0..n {
                prop_assert!((ax[i] - rhs[i]).abs() < 1e-9 * (1.0 + rhs[i].abs()));
            }
        }
    }
}
