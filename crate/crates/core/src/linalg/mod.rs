//! Dense complex linear algebra over a generic real scalar.
//!
//! The skin effect makes the domain-wall Hamiltonian violently non-normal
//! (eigenvector condition numbers grow like `rho^-N`), so the eigensolver is
//! written once over [`Real`] and instantiated for both `f64` and the
//! double-double [`Dd`].

mod banded;
mod dd;
mod eig;

use std::fmt::Debug;
use std::ops::{Index, IndexMut, Neg};

use num_complex::Complex;
use num_traits::NumAssign;

pub use banded::BandedLu;
pub use dd::Dd;
pub use eig::{eig, EigFailure, Eigen};

pub type C64 = Complex<f64>;

/// Scalar field the eigensolver can run over.
pub trait Real:
    NumAssign + Copy + Send + Sync + PartialOrd + Debug + Neg<Output = Self> + 'static
{
    /// Half the machine epsilon.
    const UNIT_ROUNDOFF: f64;

    fn of(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON * 0.5;
    fn of(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Real for Dd {
    const UNIT_ROUNDOFF: f64 = Dd::EPSILON;
    fn of(x: f64) -> Dd {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
    fn abs(self) -> Dd {
        Dd::abs(self)
    }
}

/// `|re| + |im|`, the cheap norm LAPACK uses for convergence tests.
#[inline]
pub fn abs1<T: Real>(z: Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

/// Euclidean modulus without intermediate overflow.
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    let m = z.re.abs().max(z.im.abs());
    if m == T::zero() {
        return m;
    }
    let (x, y) = (z.re / m, z.im / m);
    m * (x * x + y * y).sqrt()
}

/// Principal square root.
pub fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::of(0.5);
    let r = modulus(z);
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let re = ((r + z.re.abs()) * half).sqrt();
    if z.re >= T::zero() {
        Complex::new(re, z.im / (re + re))
    } else {
        let im = if z.im < T::zero() { -re } else { re };
        Complex::new(z.im.abs() / (re + re), im)
    }
}

pub fn lift<T: Real>(z: C64) -> Complex<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

pub fn lower<T: Real>(z: Complex<T>) -> C64 {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real = f64> {
    n: usize,
    data: Vec<Complex<T>>,
}

pub type ComplexMatrix = CMatrix<f64>;

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds from row-major entries; panics if the length is not a square.
    pub fn from_rows(n: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data must hold n*n entries");
        CMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn map<U: Real>(&self, f: impl Fn(Complex<T>) -> Complex<U>) -> CMatrix<U> {
        CMatrix { n: self.n, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other[(k, j)];
                    out.data[i * n + j] += a * b;
                }
            }
        }
        out
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&z| modulus(z).to_f64()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.to_f64().is_finite() && z.im.to_f64().is_finite())
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}
