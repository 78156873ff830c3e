//! LU with partial pivoting for band matrices, enough for shifted inverse
//! iteration on the folded ring.

use num_complex::Complex;

use super::{abs1, Real};

pub struct BandedLu<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<Complex<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    /// Factors the `n x n` matrix whose entries `entry(i, j)` vanish outside
    /// `i - kl <= j <= i + ku`. Exactly singular pivots are nudged to
    /// `tiny` so that inverse iteration at an exact eigenvalue still works.
    pub fn factor(n: usize, kl: usize, ku: usize, tiny: T, entry: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let width = 2 * kl + ku + 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut lu = BandedLu { n, kl, ku, width, band: vec![zero; n * width], piv: vec![0; n] };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                *lu.at(i, j) = entry(i, j);
            }
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = abs1(*lu.at(k, k));
            for r in k + 1..=last {
                let v = abs1(*lu.at(r, k));
                if v > best {
                    best = v;
                    p = r;
                }
            }
            lu.piv[k] = p;
            let reach = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=reach {
                    let a = *lu.at(k, j);
                    let b = *lu.at(p, j);
                    *lu.at(k, j) = b;
                    *lu.at(p, j) = a;
                }
            }
            if best == T::zero() {
                *lu.at(k, k) = Complex::new(tiny, T::zero());
            }
            let pivot = *lu.at(k, k);
            for r in k + 1..=last {
                let l = *lu.at(r, k) / pivot;
                *lu.at(r, k) = l;
                if l.re == T::zero() && l.im == T::zero() {
                    continue;
                }
                for j in k + 1..=reach {
                    let u = *lu.at(k, j);
                    *lu.at(r, j) -= l * u;
                }
            }
        }
        lu
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut Complex<T> {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        &mut self.band[i * self.width + j + self.kl - i]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.band[i * self.width + j + self.kl - i]
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve(&self, b: &mut [Complex<T>]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for r in k + 1..=(k + self.kl).min(n - 1) {
                b[r] -= self.get(r, k) * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + self.kl + self.ku).min(n - 1) {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
    }
}
