//! Complex Schur decomposition by Householder reduction to Hessenberg form
//! followed by single-shift implicit QR, after LAPACK's `zgehrd`/`zlahqr`.
//! Eigenvectors come from back substitution on the triangular factor
//! (`ztrevc`) mapped through the accumulated unitary.

use num_complex::Complex;

use super::{abs1, modulus, CMatrix, Real};

/// Eigenvalues and, on request, right eigenvectors stored as unit columns.
#[derive(Clone, Debug)]
pub struct Eigen<T: Real> {
    pub values: Vec<Complex<T>>,
    pub vectors: Option<CMatrix<T>>,
}

/// QR iteration hit its cap before every eigenvalue deflated.
#[derive(Clone, Debug, PartialEq)]
pub struct EigFailure {
    pub dim: usize,
    pub iterations: usize,
    /// Largest undeflated subdiagonal relative to the matrix norm.
    pub residual: f64,
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn scale<T: Real>(z: Complex<T>, s: T) -> Complex<T> {
    Complex::new(z.re * s, z.im * s)
}

pub fn eig<T: Real>(a: &CMatrix<T>, want_vectors: bool) -> Result<Eigen<T>, EigFailure> {
    let n = a.dim();
    let mut h = a.clone();
    let mut z = if want_vectors { Some(CMatrix::identity(n)) } else { None };
    hessenberg(&mut h, z.as_mut());
    schur(&mut h, z.as_mut())?;
    let values: Vec<_> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = z.map(|z| triangular_eigenvectors(&h, &z));
    Ok(Eigen { values, vectors })
}

/// Reduces `a` to upper Hessenberg form in place, accumulating the
/// reflectors into `q` when given.
fn hessenberg<T: Real>(a: &mut CMatrix<T>, mut q: Option<&mut CMatrix<T>>) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let two = T::of(2.0);
    let mut v = vec![zero::<T>(); n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut tail = T::zero();
        for i in 1..m {
            tail = tail.max(abs1(a[(k + 1 + i, k)]));
        }
        if tail == T::zero() {
            continue;
        }
        let mut alpha2 = T::zero();
        for i in 0..m {
            v[i] = a[(k + 1 + i, k)];
            alpha2 += v[i].norm_sqr();
        }
        let alpha = alpha2.sqrt();
        let x0 = v[0];
        let r0 = modulus(x0);
        let phase = if r0 == T::zero() {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(x0.re / r0, x0.im / r0)
        };
        v[0] = x0 + scale(phase, alpha);
        let vn2: T = v[..m].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if vn2 == T::zero() {
            continue;
        }
        let f = two / vn2;

        // rows k+1.. from the left
        for j in k..n {
            let mut s = zero::<T>();
            for i in 0..m {
                s += v[i].conj() * a[(k + 1 + i, j)];
            }
            let s = scale(s, f);
            for i in 0..m {
                let t = v[i] * s;
                a[(k + 1 + i, j)] -= t;
            }
        }
        // columns k+1.. from the right
        let right = |mat: &mut CMatrix<T>, rows: usize| {
            for r in 0..rows {
                let mut s = zero::<T>();
                for i in 0..m {
                    s += mat[(r, k + 1 + i)] * v[i];
                }
                let s = scale(s, f);
                for i in 0..m {
                    let t = s * v[i].conj();
                    mat[(r, k + 1 + i)] -= t;
                }
            }
        };
        right(a, n);
        if let Some(q) = q.as_deref_mut() {
            right(q, n);
        }
        a[(k + 1, k)] = -scale(phase, alpha);
        for i in 1..m {
            a[(k + 1 + i, k)] = zero();
        }
    }
}

/// Plane rotation `[c s; -conj(s) c]` with real `c` that zeroes `g` in `(f, g)`.
fn givens<T: Real>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>, Complex<T>) {
    if g.re == T::zero() && g.im == T::zero() {
        return (T::one(), zero(), f);
    }
    let gm = modulus(g);
    if f.re == T::zero() && f.im == T::zero() {
        return (T::zero(), Complex::new(g.re / gm, -g.im / gm), Complex::new(gm, T::zero()));
    }
    let fm = modulus(f);
    let big = fm.max(gm);
    let (fs, gs) = (fm / big, gm / big);
    let norm = big * (fs * fs + gs * gs).sqrt();
    let phase = Complex::new(f.re / fm, f.im / fm);
    let c = fm / norm;
    let s = phase * g.conj();
    let s = Complex::new(s.re / norm, s.im / norm);
    (c, s, scale(phase, norm))
}

/// Drives an upper Hessenberg matrix to upper triangular Schur form.
fn schur<T: Real>(h: &mut CMatrix<T>, mut z: Option<&mut CMatrix<T>>) -> Result<(), EigFailure> {
    let n = h.dim();
    if n == 0 {
        return Ok(());
    }
    let full = z.is_some();
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = zero();
        }
    }
    let ulp = T::of(2.0 * T::UNIT_ROUNDOFF);
    let safmin = T::of(f64::MIN_POSITIVE);
    let smlnum = safmin * (T::of(n as f64) / ulp);
    let half = T::of(0.5);
    let dat1 = T::of(0.75);
    let itmax = 30 * n.max(10);
    let mut total_iters = 0usize;

    let mut i = n - 1;
    loop {
        let mut l = 0usize;
        let mut converged = false;
        let mut kdefl = 0usize;
        for _ in 0..=itmax {
            total_iters += 1;
            // find a negligible subdiagonal
            let mut k = i;
            while k > l {
                let sub = h[(k, k - 1)];
                if abs1(sub) <= smlnum {
                    break;
                }
                let mut tst = abs1(h[(k - 1, k - 1)]) + abs1(h[(k, k)]);
                if tst == T::zero() {
                    if k >= l + 2 {
                        tst += h[(k - 1, k - 2)].re.abs();
                    }
                    if k < i {
                        tst += h[(k + 1, k)].re.abs();
                    }
                }
                if sub.re.abs() <= ulp * tst {
                    // Ahues & Tisseur conservative test
                    let ab = abs1(sub).max(abs1(h[(k - 1, k)]));
                    let ba = abs1(sub).min(abs1(h[(k - 1, k)]));
                    let d = h[(k - 1, k - 1)] - h[(k, k)];
                    let aa = abs1(h[(k, k)]).max(abs1(d));
                    let bb = abs1(h[(k, k)]).min(abs1(d));
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = zero();
            }
            if l >= i {
                converged = true;
                break;
            }
            kdefl += 1;

            let shift = if kdefl.is_multiple_of(20) {
                h[(i, i)] + Complex::new(dat1 * h[(i, i - 1)].re.abs(), T::zero())
            } else if kdefl.is_multiple_of(10) {
                h[(l, l)] + Complex::new(dat1 * h[(l + 1, l)].re.abs(), T::zero())
            } else {
                wilkinson(h[(i - 1, i - 1)], h[(i - 1, i)], h[(i, i - 1)], h[(i, i)], half)
            };

            // single-shift sweep over the active block l..=i
            let mut v0 = h[(l, l)] - shift;
            let mut v1 = h[(l + 1, l)];
            for k in l..i {
                if k > l {
                    v0 = h[(k, k - 1)];
                    v1 = h[(k + 1, k - 1)];
                }
                let (c, s, r) = givens(v0, v1);
                if k > l {
                    h[(k, k - 1)] = r;
                    h[(k + 1, k - 1)] = zero();
                }
                let sc = s.conj();
                // without Schur vectors only the active block matters
                let jend = if full { n } else { i + 1 };
                for j in k..jend {
                    let a = h[(k, j)];
                    let b = h[(k + 1, j)];
                    h[(k, j)] = scale(a, c) + s * b;
                    h[(k + 1, j)] = scale(b, c) - sc * a;
                }
                let rows = (k + 2).min(i) + 1;
                let rstart = if full { 0 } else { l };
                for r in rstart..rows {
                    let a = h[(r, k)];
                    let b = h[(r, k + 1)];
                    h[(r, k)] = scale(a, c) + sc * b;
                    h[(r, k + 1)] = scale(b, c) - s * a;
                }
                if let Some(z) = z.as_deref_mut() {
                    for r in 0..n {
                        let a = z[(r, k)];
                        let b = z[(r, k + 1)];
                        z[(r, k)] = scale(a, c) + sc * b;
                        z[(r, k + 1)] = scale(b, c) - s * a;
                    }
                }
            }
        }
        if !converged {
            let norm = h.norm_inf().max(f64::MIN_POSITIVE);
            let worst = (l + 1..=i).map(|k| modulus(h[(k, k - 1)]).to_f64()).fold(0.0, f64::max);
            return Err(EigFailure { dim: n, iterations: total_iters, residual: worst / norm });
        }
        if i == 0 {
            return Ok(());
        }
        i -= 1;
    }
}

/// Eigenvalue of the trailing 2x2 block closer to its last diagonal entry.
fn wilkinson<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
    half: T,
) -> Complex<T> {
    let u = super::csqrt(b) * super::csqrt(c);
    let s = abs1(u);
    if s == T::zero() {
        return d;
    }
    let x = scale(a - d, half);
    let sx = abs1(x);
    let s = s.max(sx);
    let (xs, us) = (scale(x, T::one() / s), scale(u, T::one() / s));
    let mut y = scale(super::csqrt(xs * xs + us * us), s);
    if sx > T::zero() {
        let xn = scale(x, T::one() / sx);
        if xn.re * y.re + xn.im * y.im < T::zero() {
            y = -y;
        }
    }
    d - u * (u / (x + y))
}

/// Right eigenvectors of `Z T Z^H` from the Schur factor `t` and unitary `z`.
fn triangular_eigenvectors<T: Real>(t: &CMatrix<T>, z: &CMatrix<T>) -> CMatrix<T> {
    let n = t.dim();
    let ulp = T::of(2.0 * T::UNIT_ROUNDOFF);
    let smlnum = T::of(f64::MIN_POSITIVE) * (T::of(n as f64) / ulp);
    let big = T::of(1e150);
    let mut out = CMatrix::zeros(n);
    let mut x = vec![zero::<T>(); n];
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (ulp * abs1(lambda)).max(smlnum);
        for v in x.iter_mut() {
            *v = zero();
        }
        x[k] = Complex::new(T::one(), T::zero());
        for i in (0..k).rev() {
            let mut s = zero::<T>();
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lambda;
            if abs1(d) < smin {
                d = Complex::new(smin, T::zero());
            }
            x[i] = -(s / d);
            let m = abs1(x[i]);
            if m > big {
                let f = T::one() / m;
                for v in x[..=k].iter_mut() {
                    *v = scale(*v, f);
                }
            }
        }
        let mut norm2 = T::zero();
        let mut col = vec![zero::<T>(); n];
        for (r, c) in col.iter_mut().enumerate() {
            let mut s = zero::<T>();
            for j in 0..=k {
                s += z[(r, j)] * x[j];
            }
            *c = s;
            norm2 += s.norm_sqr();
        }
        let inv = T::one() / norm2.sqrt();
        for (r, c) in col.into_iter().enumerate() {
            out[(r, k)] = scale(c, inv);
        }
    }
    out
}
