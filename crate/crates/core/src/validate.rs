//! Self-check suites against independent oracles: the Bloch formula, the
//! finite-size boundary determinant, the spectral symmetries, and the
//! Brillouin-zone limit of the analytic construction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gbz::{boundary_determinant_residual, boundary_difference, boundary_matrix, gbz_curve};
use crate::linalg::{Dd, C64};
use crate::model::{bloch_reference, hamiltonian_in, ModelParams};
use crate::spectral::{diagonalize, eigenvalues_in, model_energies, Precision};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Bloch,
    Determinant,
    Symmetry,
    BzLimit,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Bloch, Suite::Determinant, Suite::Symmetry, Suite::BzLimit];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bloch => "bloch",
            Suite::Determinant => "determinant",
            Suite::Symmetry => "symmetry",
            Suite::BzLimit => "bz-limit",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value <= limit, detail: format!("{value:.3e} <= {limit:.0e}") }
    }

    fn floor(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value >= limit, detail: format!("{value:.3e} >= {limit:.0e}") }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check { name: name.into(), passed: false, detail: err.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// `max_{p in a} min_{q in b} |p - q|`.
pub fn directed_hausdorff(a: &[C64], b: &[C64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    a.iter().map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Bloch => bloch_suite(),
        Suite::Determinant => determinant_suite(seed),
        Suite::Symmetry => symmetry_suite(seed),
        Suite::BzLimit => bz_limit_suite(),
    };
    SuiteReport { suite, checks }
}

fn bloch_suite() -> Vec<Check> {
    [(1.7, 1.6), (2.0, 0.0), (0.4, 0.9)]
        .into_iter()
        .map(|(t1, gamma)| {
            let p = ModelParams::ring(t1, 1.0, gamma, 0.0, 30);
            let name = format!("ring t1={t1} gamma={gamma} vs Bloch grid");
            match model_energies(&p, Precision::Auto).and_then(|e| Ok((e, bloch_reference(&p)?))) {
                Ok((num, bloch)) => Check::bound(name, hausdorff(&num, &bloch), 1e-8),
                Err(e) => Check::failed(name, &e),
            }
        })
        .collect()
}

fn det4(m: &[[C64; 4]; 4]) -> C64 {
    // Gaussian elimination with partial pivoting on a copy
    let mut a = *m;
    let mut det = C64::new(1.0, 0.0);
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).expect("nonempty");
        if a[p][k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..4 {
            let l = a[i][k] / a[k][k];
            for j in k..4 {
                let v = a[k][j];
                a[i][j] -= l * v;
            }
        }
    }
    det
}

fn determinant_suite(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let p = ModelParams::ring(1.7, 1.0, 1.6, 1.0, 8);
    let energies = match model_energies(&p, Precision::DoubleDouble) {
        Ok(e) => e,
        Err(e) => return vec![Check::failed("n_cells = 8 spectrum", &e)],
    };
    let mut worst: f64 = 0.0;
    for &e in &energies {
        match boundary_determinant_residual(e, &p) {
            Ok(r) => worst = worst.max(r),
            Err(err) => return vec![Check::failed(format!("boundary residual at {e}"), &err)],
        }
    }
    checks.push(Check::bound("n_cells = 8 eigenvalues satisfy the boundary condition", worst, 1e-6));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = energies.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let mut lowest = f64::INFINITY;
    let mut probes = 0;
    while probes < 20 {
        let z = C64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius));
        let gap = energies.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
        if gap < 0.1 {
            continue;
        }
        if let Ok(r) = boundary_determinant_residual(z, &p) {
            lowest = lowest.min(r);
            probes += 1;
        }
    }
    checks.push(Check::floor("20 off-spectrum probes are rejected", lowest, 1e-2));

    let small = ModelParams::ring(1.7, 0.8, 1.6, 1.0, 2);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..20 {
        let z = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        match (boundary_matrix(z, &small), boundary_difference(z, &small)) {
            (Ok(m), Ok(d)) => {
                let det = det4(&m) / small.t2.powi(4);
                worst_rel = worst_rel.max((det - d).norm() / det.norm().max(d.norm()).max(1e-300));
            }
            (Err(e), _) | (_, Err(e)) => return [checks, vec![Check::failed("n_cells = 2 determinant", &e)]].concat(),
        }
    }
    checks.push(Check::bound("n_cells = 2 closed form equals the 4x4 determinant", worst_rel, 1e-10));
    checks
}

/// Random parameter sets away from the degenerate lines.
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    loop {
        let t2 = rng.gen_range(0.5..1.5);
        let p = ModelParams {
            t1: rng.gen_range(0.2..2.0),
            t2,
            gamma: rng.gen_range(-1.5..1.5),
            epsilon: rng.gen_range(0.0..2.5),
            t_boundary: if rng.gen_bool(0.5) { t2 } else { rng.gen_range(0.0..t2) },
            n_cells: rng.gen_range(4..=12),
        };
        if (p.t1.abs() - p.gamma.abs()).abs() > 0.05 {
            return p;
        }
    }
}

fn symmetry_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .flat_map(|k| {
            let p = random_params(&mut rng);
            let tag = format!(
                "set {k} (t1={:.3} t2={:.3} gamma={:.3} eps={:.3} t={:.3} N={})",
                p.t1, p.t2, p.gamma, p.epsilon, p.t_boundary, p.n_cells
            );
            // the general solver on the full matrix, so that the symmetry is
            // tested rather than built in
            let spectrum = hamiltonian_in::<Dd>(&p).and_then(|h| eigenvalues_in(&h));
            let mut out = Vec::new();
            match spectrum {
                Ok(e) => {
                    let neg: Vec<C64> = e.iter().map(|z| -z).collect();
                    let conj: Vec<C64> = e.iter().map(|z| z.conj()).collect();
                    out.push(Check::bound(format!("{tag}: E -> -E"), hausdorff(&e, &neg), 1e-8));
                    out.push(Check::bound(format!("{tag}: E -> conj E"), hausdorff(&e, &conj), 1e-8));
                }
                Err(err) => out.push(Check::failed(format!("{tag}: spectrum"), &err)),
            }
            out.push(match diagonalize(&p, Precision::Auto) {
                Ok(pairs) => Check { name: format!("{tag}: residuals"), passed: pairs.len() == p.dim(), detail: format!("{} pairs", pairs.len()) },
                Err(err) => Check::failed(format!("{tag}: residuals"), &err),
            });
            out
        })
        .collect()
}

fn bz_limit_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    for (t1, gamma) in [(1.7, 1.6), (0.7, 2.0 / 3.0)] {
        let p = ModelParams::ring(t1, 1.0, gamma, 0.0, 512);
        let name = format!("eps = 0, t1={t1} gamma={gamma:.4}");
        match gbz_curve(&p, 512) {
            Ok(curve) if curve.points.is_empty() => checks.push(Check {
                name: format!("{name}: accepted points"),
                passed: false,
                detail: "no accepted points".into(),
            }),
            Ok(curve) => {
                let dev = curve.betas().iter().map(|(b, _)| (b.norm() - 1.0).abs()).fold(0.0, f64::max);
                checks.push(Check::bound(format!("{name}: ||beta| - 1|"), dev, 1e-8));
                // 2 * 512 momenta of the 512-cell ring sample the Bloch curve
                // at the same spacing as the theta grid
                match bloch_reference(&p) {
                    Ok(bloch) => checks.push(Check::bound(
                        format!("{name}: analytic spectrum vs Bloch curve"),
                        hausdorff(&curve.energies(), &bloch),
                        1e-6,
                    )),
                    Err(e) => checks.push(Check::failed(name.clone(), &e)),
                }
            }
            Err(e) => checks.push(Check::failed(name, &e)),
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn hausdorff_basics() {
        let a = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let b = [C64::new(0.0, 0.0)];
        assert_eq!(hausdorff(&a, &b), 1.0);
        assert_eq!(directed_hausdorff(&b, &a), 0.0);
        assert_eq!(directed_hausdorff(&a, &[]), f64::INFINITY);
    }

    #[test]
    fn det4_matches_cofactor() {
        let m = [
            [C64::new(2.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 0.0), C64::new(3.0, 0.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, -1.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(4.0, 0.0), C64::new(0.0, 0.0)],
        ];
        // expansion along row 2 by hand: entries (1,0)=i and (1,2)=1
        let minor = |r: usize, c: usize| {
            let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
            let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
            let e = |i: usize, j: usize| m[rows[i]][cols[j]];
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        };
        let want = -m[1][0] * minor(1, 0) - m[1][2] * minor(1, 2);
        assert!((det4(&m) - want).norm() < 1e-12);
    }
}
