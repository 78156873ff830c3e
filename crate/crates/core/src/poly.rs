//! Roots of complex polynomials via companion-matrix eigenvalues, each
//! polished with a few Newton steps.

use crate::linalg::{eig, CMatrix, C64};
use crate::{Error, Result};

/// Evaluates `sum coeffs[i] z^i` and its derivative by Horner's rule.
pub fn eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |p, &c| p * z + c)
}

/// All roots of the polynomial with ascending coefficients `coeffs`,
/// counted with multiplicity. Exactly-zero leading coefficients are dropped.
pub fn roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::DegeneratePolynomial("non-finite coefficient".into()));
    }
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == C64::new(0.0, 0.0) {
        hi -= 1;
    }
    if hi == 0 {
        return Err(Error::DegeneratePolynomial("identically zero polynomial".into()));
    }
    let mut lo = 0;
    while coeffs[lo] == C64::new(0.0, 0.0) {
        lo += 1;
    }
    let mut out = vec![C64::new(0.0, 0.0); lo];
    let p = &coeffs[lo..hi];
    let deg = p.len() - 1;
    match deg {
        0 => {}
        1 => out.push(-p[0] / p[1]),
        _ => {
            let lead = p[deg];
            let mut m = CMatrix::<f64>::zeros(deg);
            for j in 0..deg {
                m[(0, j)] = -p[deg - 1 - j] / lead;
            }
            for i in 1..deg {
                m[(i, i - 1)] = C64::new(1.0, 0.0);
            }
            let e = eig(&m, false).map_err(|f| {
                Error::NoConvergence { dim: f.dim, iterations: f.iterations, residual: f.residual }
            })?;
            out.extend(e.values.into_iter().map(|z| polish(p, z)));
        }
    }
    Ok(out)
}

/// Newton steps that are kept only while they shrink `|p|`.
fn polish(p: &[C64], mut z: C64) -> C64 {
    let (mut val, _) = eval_with_derivative(p, z);
    for _ in 0..8 {
        let (_, d) = eval_with_derivative(p, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - val / d;
        let (v2, _) = eval_with_derivative(p, cand);
        if !(v2.norm() < val.norm()) {
            break;
        }
        z = cand;
        val = v2;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn from_roots(rs: &[C64]) -> Vec<C64> {
        let mut p = vec![c(1.0, 0.0)];
        for &r in rs {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (i, &a) in p.iter().enumerate() {
                q[i + 1] += a;
                q[i] -= a * r;
            }
            p = q;
        }
        p
    }

    fn matches(got: &[C64], want: &[C64], tol: f64) -> bool {
        let mut used = vec![false; want.len()];
        got.len() == want.len()
            && got.iter().all(|g| {
                let hit = want
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !used[*i])
                    .min_by(|a, b| (a.1 - g).norm().total_cmp(&(b.1 - g).norm()));
                match hit {
                    Some((i, w)) if (w - g).norm() < tol => {
                        used[i] = true;
                        true
                    }
                    _ => false,
                }
            })
    }

    #[test]
    fn quartic_with_complex_roots() {
        let rs = [c(1.0, 2.0), c(-0.5, 0.1), c(3.0, -1.0), c(0.2, 0.0)];
        let got = roots(&from_roots(&rs)).unwrap();
        assert!(matches(&got, &rs, 1e-12), "{got:?}");
    }

    #[test]
    fn zero_roots_and_leading_zeros() {
        // z^2 (z - 2) with a padded zero leading coefficient
        let got = roots(&[c(0., 0.), c(0., 0.), c(-2., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        assert!(matches(&got, &[c(0., 0.), c(0., 0.), c(2., 0.)], 1e-14));
    }

    #[test]
    fn linear_and_constant() {
        assert!(matches(&roots(&[c(3., 0.), c(-1.5, 0.)]).unwrap(), &[c(2., 0.)], 1e-15));
        assert!(roots(&[c(2., 0.)]).unwrap().is_empty());
        assert!(roots(&[c(0., 0.)]).is_err());
    }

    #[test]
    fn polishing_reaches_machine_precision() {
        let rs: Vec<C64> = (0..10).map(|k| C64::from_polar(1.0 + 0.1 * k as f64, 0.7 * k as f64)).collect();
        let p = from_roots(&rs);
        for z in roots(&p).unwrap() {
            let (v, d) = eval_with_derivative(&p, z);
            assert!((v / d).norm() < 1e-12);
        }
    }
}
