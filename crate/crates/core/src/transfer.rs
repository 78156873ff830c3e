//! Characteristic function of a cyclic tridiagonal matrix through 2x2
//! transfer matrices, and simultaneous root polishing on top of it.
//!
//! For the ring the hoppings enter the transfer matrices only through the
//! bond products `u_i l_i`, which are insensitive to the non-reciprocity.
//! The winding terms `prod u` and `prod l` are constants. Evaluating
//! `det(H - E)` this way therefore does not inherit the exponential
//! conditioning of the eigenvalue problem that dense solvers face.

use num_complex::Complex;

use crate::linalg::{lift, lower, ComplexMatrix, Real, C64};
use crate::{Error, Result};

/// Coefficients of a cyclic tridiagonal matrix: `diag[i] = H[i][i]`,
/// `upper[i] = H[i][i+1]`, `lower[i] = H[i+1][i]`, indices mod `m`.
#[derive(Clone, Debug)]
pub struct CyclicTridiagonal {
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
}

/// A complex number times `2^exp`, kept apart so long products cannot overflow.
#[derive(Clone, Copy, Debug)]
struct Scaled<T: Real> {
    mant: Complex<T>,
    exp: i64,
}

/// Power of two close to `x > 0`. Dividing by it is exact in any binary format.
fn binade(x: f64) -> i32 {
    x.log2().floor() as i32
}

fn pow2<T: Real>(k: i64) -> T {
    T::of(2f64.powi(k.clamp(-1000, 1000) as i32))
}

fn scaled_product<T: Real>(zs: &[C64]) -> Scaled<T> {
    let mut acc = Scaled { mant: Complex::new(T::one(), T::zero()), exp: 0 };
    for &z in zs {
        acc.mant = acc.mant * lift::<T>(z);
        let s = lower(acc.mant).norm();
        if s == 0.0 {
            return Scaled { mant: acc.mant, exp: 0 };
        }
        let k = binade(s);
        let f = pow2::<T>(-(k as i64));
        acc.mant = Complex::new(acc.mant.re * f, acc.mant.im * f);
        acc.exp += k as i64;
    }
    acc
}

impl CyclicTridiagonal {
    /// Reads the cyclic band out of `h`; errors if anything else is non-zero.
    pub fn from_matrix(h: &ComplexMatrix) -> Result<Self> {
        let m = h.dim();
        if m < 3 {
            return Err(Error::InvalidParams(format!("cyclic tridiagonal needs dimension >= 3, got {m}")));
        }
        for i in 0..m {
            for j in 0..m {
                let d = (i + m - j) % m;
                if d > 1 && d < m - 1 && h[(i, j)] != C64::new(0.0, 0.0) {
                    return Err(Error::InvalidParams(format!("entry ({i}, {j}) lies outside the cyclic band")));
                }
            }
        }
        Ok(Self {
            diag: (0..m).map(|i| h[(i, i)]).collect(),
            upper: (0..m).map(|i| h[(i, (i + 1) % m)]).collect(),
            lower: (0..m).map(|i| h[((i + 1) % m, i)]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn scale(&self) -> f64 {
        self.diag.iter().chain(&self.upper).chain(&self.lower).map(|z| z.norm()).fold(0.0, f64::max).max(1.0)
    }

    /// `det(H - E)` and its derivative, both divided by `2^exp`; returns
    /// `(value, derivative, exp)`.
    pub fn det_scaled<T: Real>(&self, e: Complex<T>) -> (Complex<T>, Complex<T>, i64) {
        let m = self.dim();
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        // P = T_i ... T_1 and its derivative, T_i = [[d_i - E, -u_{i-1} l_{i-1}], [1, 0]]
        let mut p = [[one, zero], [zero, one]];
        let mut dp = [[zero; 2]; 2];
        let mut exp = 0i64;
        for i in 0..m {
            let a = lift::<T>(self.diag[i]) - e;
            let prev = (i + m - 1) % m;
            let bc = -(lift::<T>(self.upper[prev]) * lift::<T>(self.lower[prev]));
            let mut np = [[zero; 2]; 2];
            let mut ndp = [[zero; 2]; 2];
            for col in 0..2 {
                np[0][col] = a * p[0][col] + bc * p[1][col];
                np[1][col] = p[0][col];
                ndp[0][col] = a * dp[0][col] + bc * dp[1][col] - p[0][col];
                ndp[1][col] = dp[0][col];
            }
            let s = np.iter().flatten().map(|z| lower(*z).norm()).fold(0.0, f64::max);
            if s > 0.0 && s.is_finite() {
                let k = binade(s);
                let f = pow2::<T>(-(k as i64));
                for r in 0..2 {
                    for c in 0..2 {
                        np[r][c] = Complex::new(np[r][c].re * f, np[r][c].im * f);
                        ndp[r][c] = Complex::new(ndp[r][c].re * f, ndp[r][c].im * f);
                    }
                }
                exp += k as i64;
            }
            p = np;
            dp = ndp;
        }
        let mut value = p[0][0] + p[1][1];
        let sign = if m % 2 == 1 { T::one() } else { -T::one() };
        for prod in [&self.upper, &self.lower] {
            let w = scaled_product::<T>(prod);
            let f = sign * pow2::<T>(w.exp - exp);
            value += Complex::new(w.mant.re * f, w.mant.im * f);
        }
        (value, dp[0][0] + dp[1][1], exp)
    }

    /// Newton correction `det / det'` at `e`.
    pub fn newton_step<T: Real>(&self, e: Complex<T>) -> Complex<T> {
        let (v, d, _) = self.det_scaled(e);
        v / d
    }
}

/// Outcome of [`polish_roots`].
#[derive(Clone, Debug)]
pub struct Polished {
    pub roots: Vec<C64>,
    pub iterations: usize,
    /// Largest last correction, relative to the matrix scale.
    pub last_step: f64,
    /// Every root either settled or belongs to a stalled cluster that was
    /// replaced by its mean.
    pub converged: bool,
}

/// Refines approximations of all `dim()` eigenvalues at once by Aberth
/// iteration on `det(H - E)`, evaluated in `T`. The mutual repulsion term
/// keeps two guesses from settling on the same simple root.
pub fn polish_roots<T: Real>(band: &CyclicTridiagonal, guesses: &[C64], max_iter: usize) -> Result<Polished> {
    let m = band.dim();
    if guesses.len() != m {
        return Err(Error::InvalidParams(format!("{} guesses for a dimension-{m} band", guesses.len())));
    }
    let scale = band.scale();
    // roots are returned in f64, so finer corrections are moot
    let rel_tol = (1e3 * T::UNIT_ROUNDOFF).max(0.1 * f64::EPSILON);
    let tol = rel_tol * scale;
    let mut z: Vec<Complex<T>> = guesses.iter().map(|&g| lift(g)).collect();
    // coinciding guesses make the repulsion singular
    for i in 0..m {
        for j in 0..i {
            if lower(z[i] - z[j]).norm() < 1e-12 * scale {
                z[i] += lift::<T>(C64::new(1e-7 * scale, 1e-7 * scale) * (1.0 + i as f64 / m as f64));
            }
        }
    }
    let one = Complex::new(T::one(), T::zero());
    let mut active = vec![true; m];
    let mut last_step = f64::INFINITY;
    let mut iterations = max_iter;
    for it in 1..=max_iter {
        last_step = 0.0;
        for k in 0..m {
            if !active[k] {
                continue;
            }
            let w = band.newton_step(z[k]);
            let repulsion: C64 = (0..m).filter(|&j| j != k).map(|j| lower(z[k] - z[j]).inv()).sum();
            let step = w / (one - w * lift::<T>(repulsion));
            let size = lower(step).norm();
            if !size.is_finite() {
                continue;
            }
            z[k] -= step;
            last_step = last_step.max(size / scale);
            if size < tol {
                active[k] = false;
            }
        }
        if active.iter().all(|a| !a) || last_step * scale < tol {
            iterations = it;
            break;
        }
    }
    // Roots still moving are near-multiple: each member is resolved only to
    // about sqrt(eps), but the mean of the cluster is well conditioned.
    let radius = rel_tol.sqrt() * scale;
    let mut converged = true;
    let mut seen = vec![false; m];
    for k in 0..m {
        if !active[k] || seen[k] {
            continue;
        }
        let mut members = vec![k];
        seen[k] = true;
        let mut i = 0;
        while i < members.len() {
            let c = members[i];
            for j in 0..m {
                if !seen[j] && lower(z[j] - z[c]).norm() < radius {
                    seen[j] = true;
                    members.push(j);
                }
            }
            i += 1;
        }
        if members.len() < 2 {
            converged = false;
            continue;
        }
        let mut mean = Complex::new(T::zero(), T::zero());
        for &j in &members {
            mean += z[j];
        }
        let mean = mean / T::of(members.len() as f64);
        for &j in &members {
            z[j] = mean;
        }
    }
    Ok(Polished { roots: z.into_iter().map(lower).collect(), iterations, last_step, converged })
}
