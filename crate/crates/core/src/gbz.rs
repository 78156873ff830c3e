//! Analytic generalized Brillouin zone of the domain-wall ring.
//!
//! Each chain has the characteristic polynomial `f(beta) = c + a/beta + b*beta`
//! with shifted energies `E^I = E - i eps` and `E^II = E + i eps`. A point of
//! the thermodynamic-limit spectrum is an energy whose four roots
//! `beta^I_{1,2}, beta^II_{1,2}` (sorted by modulus) satisfy one of four
//! continuity conditions on the pairwise products `g1..g4`:
//!
//! | branch        | equality              | ordering                 |
//! |---------------|-----------------------|--------------------------|
//! | `EqmodI`      | `|b^I_1| = |b^I_2|`   | g1 >= g3 >= 1 >= g2 >= g4 |
//! | `EqmodII`     | `|b^II_1| = |b^II_2|` | g1 >= g2 >= 1 >= g3 >= g4 |
//! | `ProdOuter`   | `g1 = 1`              | g2, g3, g4 <= 1          |
//! | `ProdInner`   | `g4 = 1`              | g1, g2, g3 >= 1          |
//!
//! Every branch is parametrized by a phase `theta`: the equality is imposed
//! as `beta' = beta e^{i theta}` (equal modulus) or `beta' = e^{i theta}/beta`
//! (unit product) and solved in closed form or through a quartic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::model::{Chain, ModelParams};
use crate::{par, poly, Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CharacteristicCoeffs {
    pub fn new(p: &ModelParams) -> Self {
        CharacteristicCoeffs {
            a: p.t2 * (p.t1 - p.gamma),
            b: p.t2 * (p.t1 + p.gamma),
            c: p.t1 * p.t1 - p.gamma * p.gamma + p.t2 * p.t2,
        }
    }

    /// `f(beta) = c + a/beta + b beta`, the squared shifted energy.
    pub fn f(&self, beta: C64) -> C64 {
        self.c + self.a / beta + self.b * beta
    }

    /// Scaled residual of `b beta^2 + (c - E_s^2) beta + a` at a root.
    pub fn residual(&self, e_shifted: C64, beta: C64) -> f64 {
        let mid = self.c - e_shifted * e_shifted;
        let val = self.b * beta * beta + mid * beta + self.a;
        let scale = self.b.abs() * beta.norm_sqr() + mid.norm() * beta.norm() + self.a.abs();
        val.norm() / scale.max(f64::MIN_POSITIVE)
    }
}

/// Roots of `b beta^2 + (c - E_s^2) beta + a = 0`, smaller modulus first;
/// equal moduli are ordered by principal argument.
pub fn characteristic_roots(e_shifted: C64, coeffs: &CharacteristicCoeffs) -> Result<(C64, C64)> {
    let CharacteristicCoeffs { a, b, c } = *coeffs;
    if b == 0.0 {
        return Err(Error::DegeneratePolynomial("beta^2 coefficient b = t2 (t1 + gamma) vanishes".into()));
    }
    let m = c - e_shifted * e_shifted;
    let (r1, r2) = if a == 0.0 {
        (C64::new(0.0, 0.0), -m / b)
    } else {
        let mut s = (m * m - 4.0 * a * b).sqrt();
        // pick the sign that avoids cancellation in -(m + s)/2
        if (m.conj() * s).re < 0.0 {
            s = -s;
        }
        // q != 0 because a != 0 forces s != 0 whenever m = 0
        let q = -(m + s) / 2.0;
        (q / b, a / q)
    };
    Ok(order_pair(r1, r2))
}

fn order_pair(x: C64, y: C64) -> (C64, C64) {
    let (mx, my) = (x.norm(), y.norm());
    let tie = (mx - my).abs() <= 1e-14 * mx.max(my);
    if (!tie && mx > my) || (tie && x.arg() > y.arg()) {
        (y, x)
    } else {
        (x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    EqmodI,
    EqmodII,
    ProdOuter,
    ProdInner,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::EqmodI, Branch::EqmodII, Branch::ProdOuter, Branch::ProdInner];

    pub fn name(self) -> &'static str {
        match self {
            Branch::EqmodI => "eqmod_I",
            Branch::EqmodII => "eqmod_II",
            Branch::ProdOuter => "prod_outer",
            Branch::ProdInner => "prod_inner",
        }
    }

    pub fn from_name(s: &str) -> Option<Branch> {
        Branch::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// Which pair of roots the unit-product condition binds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductPair {
    /// `(beta^I_2, beta^II_2)`
    Outer,
    /// `(beta^I_1, beta^II_1)`
    Inner,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbzPoint {
    pub branch: Branch,
    pub theta: f64,
    pub energy: C64,
    /// `[beta^I_1, beta^I_2, beta^II_1, beta^II_2]`, each chain sorted by modulus.
    pub betas: [C64; 4],
    pub g: [f64; 4],
}

impl GbzPoint {
    fn assemble(branch: Branch, theta: f64, energy: C64, chain_i: (C64, C64), chain_ii: (C64, C64)) -> Self {
        let (b1, b2) = order_pair(chain_i.0, chain_i.1);
        let (c1, c2) = order_pair(chain_ii.0, chain_ii.1);
        let g = [(b2 * c2).norm(), (b2 * c1).norm(), (b1 * c2).norm(), (b1 * c1).norm()];
        GbzPoint { branch, theta, energy, betas: [b1, b2, c1, c2], g }
    }

    /// The two roots the branch condition constrains; these trace `C_beta`.
    pub fn active_betas(&self) -> [C64; 2] {
        let [b1, b2, c1, c2] = self.betas;
        match self.branch {
            Branch::EqmodI => [b1, b2],
            Branch::EqmodII => [c1, c2],
            Branch::ProdOuter => [b2, c2],
            Branch::ProdInner => [b1, c1],
        }
    }

    /// Largest characteristic-equation residual over the four roots.
    pub fn characteristic_residual(&self, params: &ModelParams) -> f64 {
        let k = CharacteristicCoeffs::new(params);
        let e1 = self.energy - I * params.epsilon;
        let e2 = self.energy + I * params.epsilon;
        let [b1, b2, c1, c2] = self.betas;
        [k.residual(e1, b1), k.residual(e1, b2), k.residual(e2, c1), k.residual(e2, c2)]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.energy.is_finite() && self.betas.iter().all(|b| b.is_finite())
    }
}

/// Tolerance ladder for the analytic solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbzTolerances {
    pub characteristic: f64,
    pub unsquared: f64,
    pub screening: f64,
    pub dedup: f64,
    /// Below this `|a e^{-i theta} - b|^2` the quartic loses its leading term.
    pub leading: f64,
}

impl Default for GbzTolerances {
    fn default() -> Self {
        GbzTolerances { characteristic: 1e-9, unsquared: 1e-8, screening: 1e-9, dedup: 1e-9, leading: 1e-14 }
    }
}

fn check_nondegenerate(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.on_degenerate_line() {
        return Err(Error::Degenerate(format!(
            "|t1| = |gamma| = {}: root modulus collapses to 0 or infinity",
            p.gamma.abs()
        )));
    }
    Ok(())
}

fn chain_shift(chain: Chain, eps: f64) -> C64 {
    I * (chain.gain_sign() * eps)
}

/// Candidates with `|beta^X_1| = |beta^X_2|` on one chain, unscreened.
pub fn solve_equal_modulus_branch(params: &ModelParams, chain: Chain, theta: f64) -> Result<Vec<GbzPoint>> {
    check_nondegenerate(params)?;
    let k = CharacteristicCoeffs::new(params);
    let rot = C64::from_polar(1.0, theta);
    let root = (C64::new(k.a / k.b, 0.0) / rot).sqrt();
    let (branch, other) = match chain {
        Chain::I => (Branch::EqmodI, Chain::II),
        Chain::II => (Branch::EqmodII, Chain::I),
    };
    let mut out = Vec::with_capacity(4);
    for beta in [root, -root] {
        let partner = beta * rot;
        let u = k.f(beta).sqrt();
        for s in [1.0, -1.0] {
            let energy = chain_shift(chain, params.epsilon) + u * s;
            let e_other = energy - chain_shift(other, params.epsilon);
            let other_roots = characteristic_roots(e_other, &k)?;
            let p = match chain {
                Chain::I => GbzPoint::assemble(branch, theta, energy, (beta, partner), other_roots),
                Chain::II => GbzPoint::assemble(branch, theta, energy, other_roots, (beta, partner)),
            };
            out.push(p);
        }
    }
    Ok(out)
}

/// Roots `beta` (on chain I) of the unit-product quartic, paired with their
/// chain-II partner `e^{i theta}/beta` and every energy that satisfies the
/// unsquared two-chain equality.
fn product_solutions(params: &ModelParams, theta: f64, tol: &GbzTolerances) -> Result<Vec<(C64, C64, C64)>> {
    let k = CharacteristicCoeffs::new(params);
    let eps = params.epsilon;
    let rot = C64::from_polar(1.0, theta);
    let q2 = k.a / rot - k.b;
    let q1 = C64::new(4.0 * eps * eps, 0.0);
    let q0 = k.b * rot - k.a;
    let leading_small = q2.norm_sqr() < tol.leading;
    let betas = if eps == 0.0 {
        // the quartic is Q^2 here; solve Q directly to avoid double roots
        let q = if leading_small { vec![q0] } else { vec![q0, C64::new(0.0, 0.0), q2] };
        if q.iter().all(|c| c.norm() == 0.0) {
            return Ok(Vec::new());
        }
        poly::roots(&q)?
    } else {
        let e2 = 16.0 * eps * eps;
        let mut p = vec![
            q0 * q0,
            2.0 * q0 * q1 + e2 * k.a,
            q1 * q1 + 2.0 * q0 * q2 + e2 * k.c,
            2.0 * q1 * q2 + e2 * k.b,
            q2 * q2,
        ];
        if leading_small {
            p.pop();
        }
        poly::roots(&p)?
    };
    let mut out = Vec::new();
    for beta in betas {
        if beta.norm() == 0.0 || !beta.is_finite() {
            continue;
        }
        let partner = rot / beta;
        let u = k.f(beta).sqrt();
        let v = k.f(partner).sqrt();
        let scale = 1.0 + u.norm() + v.norm();
        let mut kept: Vec<C64> = Vec::new();
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let lhs = I * eps + u * s1;
                let rhs = -I * eps + v * s2;
                if (lhs - rhs).norm() / scale < tol.unsquared && !kept.iter().any(|e| (e - lhs).norm() < tol.dedup) {
                    kept.push(lhs);
                }
            }
        }
        for e in kept {
            out.push((beta, partner, e));
        }
    }
    Ok(out)
}

/// Candidates on the unit-product branch selected by `pair`, unscreened.
pub fn solve_product_one_branch(
    params: &ModelParams,
    pair: ProductPair,
    theta: f64,
    tol: &GbzTolerances,
) -> Result<Vec<GbzPoint>> {
    check_nondegenerate(params)?;
    let sols = product_solutions(params, theta, tol)?;
    Ok(product_points(params, pair, theta, &sols))
}

fn product_points(params: &ModelParams, pair: ProductPair, theta: f64, sols: &[(C64, C64, C64)]) -> Vec<GbzPoint> {
    let k = CharacteristicCoeffs::new(params);
    let branch = match pair {
        ProductPair::Outer => Branch::ProdOuter,
        ProductPair::Inner => Branch::ProdInner,
    };
    sols.iter()
        .map(|&(beta, partner, energy)| {
            // Vieta: the second root on each chain multiplies to a/b
            let ratio = k.a / k.b;
            GbzPoint::assemble(branch, theta, energy, (beta, ratio / beta), (partner, ratio / partner))
        })
        .collect()
}

fn ge(x: f64, bound: f64, tol: f64) -> bool {
    x - bound >= -tol
}

/// Whether a candidate satisfies its branch's continuity condition.
pub fn accepts(p: &GbzPoint, tol: f64) -> bool {
    let [g1, g2, g3, g4] = p.g;
    let [b1, b2, c1, c2] = p.betas;
    match p.branch {
        Branch::EqmodII => {
            (c1.norm() - c2.norm()).abs() <= tol * (1.0 + c2.norm())
                && ge(g1, g2, tol)
                && ge(g2, 1.0, tol)
                && ge(1.0, g3, tol)
                && ge(g3, g4, tol)
        }
        Branch::EqmodI => {
            (b1.norm() - b2.norm()).abs() <= tol * (1.0 + b2.norm())
                && ge(g1, g3, tol)
                && ge(g3, 1.0, tol)
                && ge(1.0, g2, tol)
                && ge(g2, g4, tol)
        }
        Branch::ProdOuter => (g1 - 1.0).abs() <= tol && ge(1.0, g2, tol) && ge(1.0, g3, tol) && ge(1.0, g4, tol),
        Branch::ProdInner => (g4 - 1.0).abs() <= tol && ge(g1, 1.0, tol) && ge(g2, 1.0, tol) && ge(g3, 1.0, tol),
    }
}

pub fn screen_candidates(candidates: &[GbzPoint], tol: f64) -> Vec<GbzPoint> {
    candidates.iter().filter(|p| accepts(p, tol)).copied().collect()
}

/// All unscreened candidates of every branch at one `theta`, in branch order.
pub fn candidates_at(params: &ModelParams, theta: f64, tol: &GbzTolerances) -> Result<Vec<GbzPoint>> {
    check_nondegenerate(params)?;
    let mut out = solve_equal_modulus_branch(params, Chain::I, theta)?;
    out.extend(solve_equal_modulus_branch(params, Chain::II, theta)?);
    let sols = product_solutions(params, theta, tol)?;
    out.extend(product_points(params, ProductPair::Outer, theta, &sols));
    out.extend(product_points(params, ProductPair::Inner, theta, &sols));
    Ok(out)
}

/// Screened, characteristic-consistent points at one `theta`.
pub fn accepted_at(params: &ModelParams, theta: f64, tol: &GbzTolerances) -> Result<Vec<GbzPoint>> {
    let cands = candidates_at(params, theta, tol)?;
    Ok(cands
        .into_iter()
        .filter(|p| p.is_finite() && accepts(p, tol.screening))
        .filter(|p| p.characteristic_residual(params) < tol.characteristic)
        .collect())
}

fn same_point(p: &GbzPoint, q: &GbzPoint, tol: f64) -> bool {
    (p.energy - q.energy).norm() < tol && p.betas.iter().zip(&q.betas).all(|(x, y)| (x - y).norm() < tol)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GbzCurve {
    /// Accepted points ordered by branch, then `theta` index.
    pub points: Vec<GbzPoint>,
    /// Set when every branch came back empty at nonzero dissipation.
    pub anomalous: bool,
}

impl GbzCurve {
    pub fn energies(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    /// The `C_beta` cloud: both constrained roots of every point.
    pub fn betas(&self) -> Vec<(C64, Branch)> {
        self.points.iter().flat_map(|p| p.active_betas().map(|b| (b, p.branch))).collect()
    }

    /// Index pairs of points that continue each other from one `theta` step
    /// to the next on the same branch, for a curve sampled on
    /// [`theta_grid`]`(theta_steps)`.
    ///
    /// A point at step `j + 1` continues `p` when it lies within one step
    /// length of the linear extrapolation through `p` and its own
    /// continuation at step `j - 1`, and each pair of consecutive points
    /// are mutual nearest neighbours. Sparse stretches of the curve (fast
    /// parametrization near the tips of torn loops) stay connected this way
    /// while arcs that merely end close to each other do not.
    pub fn continuation_links(&self, theta_steps: usize) -> Vec<(usize, usize)> {
        let mut groups: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
        for (i, p) in self.points.iter().enumerate() {
            let j = (p.theta * theta_steps as f64 / (2.0 * PI)).round() as usize % theta_steps;
            let b = Branch::ALL.iter().position(|&x| x == p.branch).unwrap_or(0);
            groups.entry((b, j)).or_default().push(i);
        }
        let nearest = |group: &[usize], z: C64| -> Option<(usize, f64)> {
            group
                .iter()
                .map(|&k| (k, (self.points[k].energy - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        let mut links = Vec::new();
        for (&(b, j), group) in &groups {
            let (Some(prev), Some(next)) = (
                groups.get(&(b, (j + theta_steps - 1) % theta_steps)),
                groups.get(&(b, (j + 1) % theta_steps)),
            ) else {
                continue;
            };
            for &i in group {
                let e = self.points[i].energy;
                let Some((k, _)) = nearest(prev, e) else { continue };
                // at the end of an arc the nearest earlier point belongs to another arc
                if nearest(group, self.points[k].energy).map(|x| x.0) != Some(i) {
                    continue;
                }
                let step = (e - self.points[k].energy).norm();
                let predicted = 2.0 * e - self.points[k].energy;
                if let Some((n, miss)) = nearest(next, predicted) {
                    if miss <= step && nearest(group, self.points[n].energy).map(|x| x.0) == Some(i) {
                        links.push((i, n));
                    }
                }
            }
        }
        links
    }
}

pub const DEFAULT_THETA_STEPS: usize = 512;

pub fn theta_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|j| 2.0 * PI * j as f64 / steps as f64).collect()
}

pub fn gbz_curve(params: &ModelParams, theta_steps: usize) -> Result<GbzCurve> {
    gbz_curve_with(params, theta_steps, &GbzTolerances::default())
}

pub fn gbz_curve_with(params: &ModelParams, theta_steps: usize, tol: &GbzTolerances) -> Result<GbzCurve> {
    if theta_steps < 64 {
        return Err(Error::InvalidParams(format!("theta_steps = {theta_steps} but at least 64 are required")));
    }
    check_nondegenerate(params)?;
    let grid = theta_grid(theta_steps);
    let per_theta: Vec<Result<Vec<GbzPoint>>> = par::map_slice(&grid, |&theta| {
        if params.t_boundary == 0.0 {
            // decoupled chains: each is an open chain with its own GBZ
            let mut v = solve_equal_modulus_branch(params, Chain::I, theta)?;
            v.extend(solve_equal_modulus_branch(params, Chain::II, theta)?);
            return Ok(v);
        }
        let mut kept: Vec<GbzPoint> = Vec::new();
        for p in accepted_at(params, theta, tol)? {
            if !kept.iter().any(|q| same_point(&p, q, tol.dedup)) {
                kept.push(p);
            }
        }
        Ok(kept)
    });
    let mut by_theta = Vec::with_capacity(per_theta.len());
    for r in per_theta {
        by_theta.push(r?);
    }
    let mut points = Vec::new();
    for branch in Branch::ALL {
        for pts in &by_theta {
            points.extend(pts.iter().filter(|p| p.branch == branch).copied());
        }
    }
    let anomalous = points.is_empty() && params.epsilon != 0.0;
    Ok(GbzCurve { points, anomalous })
}

/// `sqrt(|t1 - gamma| / |t1 + gamma|)`, the open-chain root modulus.
pub fn obc_reference_modulus(params: &ModelParams) -> Result<f64> {
    if params.on_degenerate_line() {
        return Err(Error::Degenerate(format!("|t1| = |gamma| = {}", params.gamma.abs())));
    }
    Ok(params.skin_ratio())
}

/// `(log |z^N - 1|, phase)` without forming `z^N` when it would overflow.
fn pow_minus_one(z: C64, n: usize) -> Option<(f64, C64)> {
    let nf = n as f64;
    let lz = z.norm().ln();
    let arg = z.arg();
    let w = if lz >= 0.0 {
        // z^N (1 - z^-N)
        let inv = C64::from_polar((-nf * lz).exp(), -nf * arg);
        let rest = C64::new(1.0, 0.0) - inv;
        if rest.norm() == 0.0 {
            return None;
        }
        (nf * lz + rest.norm().ln(), C64::from_polar(1.0, nf * arg) * (rest / rest.norm()))
    } else {
        let v = C64::from_polar((nf * lz).exp(), nf * arg) - 1.0;
        if v.norm() == 0.0 {
            return None;
        }
        (v.norm().ln(), v / v.norm())
    };
    Some(w)
}

/// Both sides of the finite-`N` boundary condition at energy `E`, each as
/// `(log magnitude, phase)`; `None` marks an exactly vanishing side.
pub type BoundarySides = (Option<(f64, C64)>, Option<(f64, C64)>);

pub fn boundary_sides(energy: C64, params: &ModelParams) -> Result<BoundarySides> {
    let d = boundary_data(energy, params)?;
    let [(b1, x1), (b2, x2)] = d.chain_i;
    let [(c1, y1), (c2, y2)] = d.chain_ii;
    let n = params.n_cells;
    let side = |p: C64, q: C64, d1: C64, d2: C64| -> Option<(f64, C64)> {
        let (lp, pp) = pow_minus_one(p, n)?;
        let (lq, pq) = pow_minus_one(q, n)?;
        let m = d1 * d2;
        if m.norm() == 0.0 {
            return None;
        }
        Some((lp + lq + m.norm().ln(), pp * pq * (m / m.norm())))
    };
    let lhs = side(b1 * c1, b2 * c2, x1 - y2, x2 - y1);
    let rhs = side(b2 * c1, b1 * c2, x1 - y1, x2 - y2);
    Ok((lhs, rhs))
}

/// Roots and scaled amplitude ratios `eta * beta` entering the boundary
/// condition, per chain, in the `|beta_1| <= |beta_2|` order.
struct BoundaryData {
    chain_i: [(C64, C64); 2],
    chain_ii: [(C64, C64); 2],
}

fn boundary_data(energy: C64, params: &ModelParams) -> Result<BoundaryData> {
    params.validate()?;
    if params.t_boundary != params.t2 {
        return Err(Error::InvalidParams("the boundary determinant assumes t_boundary = t2".into()));
    }
    let k = CharacteristicCoeffs::new(params);
    let ei = energy - I * params.epsilon;
    let eii = energy + I * params.epsilon;
    let scale = 1e-12 * (1.0 + energy.norm());
    for (name, e) in [("E - i eps", ei), ("E + i eps", eii)] {
        if e.norm() < scale {
            return Err(Error::BranchPoint(energy, format!("{name} vanishes so the amplitude ratios are undefined")));
        }
    }
    let (b1, b2) = characteristic_roots(ei, &k)?;
    let (c1, c2) = characteristic_roots(eii, &k)?;
    let tp = params.t1 + params.gamma;
    let eta_beta = |beta: C64, e: C64| (tp + params.t2 / beta) / e * beta;
    Ok(BoundaryData {
        chain_i: [(b1, eta_beta(b1, ei)), (b2, eta_beta(b2, ei))],
        chain_ii: [(c1, eta_beta(c1, eii)), (c2, eta_beta(c2, eii))],
    })
}

/// The 4x4 coefficient matrix acting on the B-sublattice amplitudes
/// `[phi_B1, phi_B2, varphi_B1, varphi_B2]`. Only sensible for small
/// `n_cells`, where `beta^N` cannot overflow.
pub fn boundary_matrix(energy: C64, params: &ModelParams) -> Result<[[C64; 4]; 4]> {
    let d = boundary_data(energy, params)?;
    let n = params.n_cells as i32;
    let t = C64::new(params.t2, 0.0);
    let [(b1, x1), (b2, x2)] = d.chain_i;
    let [(c1, y1), (c2, y2)] = d.chain_ii;
    Ok([
        [-t, -t, t * c1.powi(n), t * c2.powi(n)],
        [-t * x1 * b1.powi(n), -t * x2 * b2.powi(n), t * y1, t * y2],
        [t * b1.powi(n), t * b2.powi(n), -t, -t],
        [t * x1, t * x2, -t * y1 * c1.powi(n), -t * y2 * c2.powi(n)],
    ])
}

/// `LHS - RHS` of the boundary condition without any rescaling; equals
/// `det(boundary_matrix) / t2^4`.
pub fn boundary_difference(energy: C64, params: &ModelParams) -> Result<C64> {
    let d = boundary_data(energy, params)?;
    let n = params.n_cells as i32;
    let [(b1, x1), (b2, x2)] = d.chain_i;
    let [(c1, y1), (c2, y2)] = d.chain_ii;
    let one = C64::new(1.0, 0.0);
    let lhs = ((b1 * c1).powi(n) - one) * ((b2 * c2).powi(n) - one) * (x1 - y2) * (x2 - y1);
    let rhs = ((b2 * c1).powi(n) - one) * ((b1 * c2).powi(n) - one) * (x1 - y1) * (x2 - y2);
    Ok(lhs - rhs)
}

/// `|LHS - RHS| / max(|LHS|, |RHS|)` of the finite-`N` boundary condition.
/// Near zero when `E` is an eigenvalue of the ring with `n_cells` per chain.
pub fn boundary_determinant_residual(energy: C64, params: &ModelParams) -> Result<f64> {
    let (lhs, rhs) = boundary_sides(energy, params)?;
    Ok(match (lhs, rhs) {
        (None, None) => 0.0,
        (Some(_), None) | (None, Some(_)) => 1.0,
        (Some((ll, lp)), Some((rl, rp))) => {
            let m = ll.max(rl);
            let l = lp * (ll - m).exp();
            let r = rp * (rl - m).exp();
            (l - r).norm()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t1: f64, gamma: f64, eps: f64) -> ModelParams {
        ModelParams::ring(t1, 1.0, gamma, eps, 30)
    }

    #[test]
    fn vieta_product_at_zero_energy() {
        let k = CharacteristicCoeffs::new(&p(0.7, 2.0 / 3.0, 0.0));
        let (b1, b2) = characteristic_roots(C64::new(0.0, 0.0), &k).unwrap();
        assert!(((b1 * b2).norm() - 1.0 / 41.0).abs() < 1e-12);
        assert!(((b1 * b2).norm().sqrt() - 0.1562).abs() < 1e-4);
        assert!(b1.norm() <= b2.norm());
    }

    #[test]
    fn double_root_for_hermitian_dimer() {
        let k = CharacteristicCoeffs::new(&p(1.0, 0.0, 0.0));
        let (b1, b2) = characteristic_roots(C64::new(0.0, 0.0), &k).unwrap();
        assert!((b1 + 1.0).norm() < 1e-7 && (b2 + 1.0).norm() < 1e-7);
    }

    #[test]
    fn rejects_vanishing_b() {
        let k = CharacteristicCoeffs::new(&p(0.5, -0.5, 0.0));
        assert!(matches!(characteristic_roots(C64::new(1.0, 0.0), &k), Err(Error::DegeneratePolynomial(_))));
    }

    #[test]
    fn equal_modulus_roots_have_obc_modulus() {
        let prm = p(1.7, 1.6, 1.0);
        let want = obc_reference_modulus(&prm).unwrap();
        for theta in theta_grid(64) {
            for c in solve_equal_modulus_branch(&prm, Chain::II, theta).unwrap() {
                assert!((c.betas[2].norm() - want).abs() < 1e-12);
                assert!((c.betas[3].norm() - want).abs() < 1e-12);
                assert!(c.characteristic_residual(&prm) < 1e-9);
            }
        }
    }

    #[test]
    fn screening_examples() {
        let mk = |branch, g: [f64; 4], betas| GbzPoint { branch, theta: 0.0, energy: C64::new(0.0, 0.0), betas, g };
        let z = C64::new(0.0, 0.0);
        assert!(accepts(&mk(Branch::ProdOuter, [1.0, 0.8, 0.9, 0.7], [z; 4]), 1e-9));
        let betas = [C64::new(0.9, 0.0), C64::new(1.0, 0.0), C64::new(1.1, 0.0), C64::new(0.0, 1.1)];
        assert!(accepts(&mk(Branch::EqmodII, [1.2, 1.1, 0.9, 0.8], betas), 1e-9));
        assert!(!accepts(&mk(Branch::ProdInner, [1.2, 1.1, 0.9, 1.0], [z; 4]), 1e-9));
    }

    #[test]
    fn product_branch_solutions_satisfy_unsquared_equation() {
        let prm = p(0.7, 2.0 / 3.0, 0.61);
        let tol = GbzTolerances::default();
        for theta in theta_grid(64) {
            for c in solve_product_one_branch(&prm, ProductPair::Outer, theta, &tol).unwrap() {
                assert!(c.characteristic_residual(&prm) < 1e-9, "{c:?}");
            }
        }
    }

    #[test]
    fn no_product_solutions_in_strong_dissipation() {
        let prm = p(0.7, 2.0 / 3.0, 2.5);
        let tol = GbzTolerances::default();
        for theta in theta_grid(128) {
            let c = solve_product_one_branch(&prm, ProductPair::Outer, theta, &tol).unwrap();
            assert!(screen_candidates(&c, 1e-9).is_empty());
            let c = solve_product_one_branch(&prm, ProductPair::Inner, theta, &tol).unwrap();
            assert!(screen_candidates(&c, 1e-9).is_empty());
        }
    }

    #[test]
    fn degenerate_line_is_flagged() {
        let prm = p(0.8, 0.8, 1.0);
        assert!(matches!(solve_equal_modulus_branch(&prm, Chain::I, 0.3), Err(Error::Degenerate(_))));
        assert!(obc_reference_modulus(&prm).is_err());
        assert!(gbz_curve(&prm, 64).is_err());
    }

    #[test]
    fn obc_modulus_examples() {
        assert!((obc_reference_modulus(&p(0.7, 2.0 / 3.0, 0.0)).unwrap() - 0.1562).abs() < 1e-4);
        assert_eq!(obc_reference_modulus(&p(1.3, 0.0, 0.0)).unwrap(), 1.0);
        assert!((obc_reference_modulus(&p(1.7, 1.6, 0.0)).unwrap() - (0.1f64 / 3.3).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pow_minus_one_matches_direct() {
        for (z, n) in [(C64::new(1.3, 0.4), 7), (C64::new(0.2, -0.5), 9), (C64::new(-1.01, 0.0), 30)] {
            let (l, ph) = pow_minus_one(z, n).unwrap();
            let direct = z.powu(n as u32) - 1.0;
            assert!((ph * l.exp() - direct).norm() < 1e-12 * direct.norm());
        }
    }

    fn det4(m: [[C64; 4]; 4]) -> C64 {
        // cofactor expansion along the first row
        let minor = |skip: usize| -> C64 {
            let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
            let r = |i: usize, j: usize| m[i][cols[j]];
            r(1, 0) * (r(2, 1) * r(3, 2) - r(2, 2) * r(3, 1)) - r(1, 1) * (r(2, 0) * r(3, 2) - r(2, 2) * r(3, 0))
                + r(1, 2) * (r(2, 0) * r(3, 1) - r(2, 1) * r(3, 0))
        };
        (0..4).map(|j| m[0][j] * minor(j) * if j % 2 == 0 { 1.0 } else { -1.0 }).sum()
    }

    #[test]
    fn closed_form_matches_brute_force_determinant() {
        let prm = ModelParams::ring(1.7, 0.9, 1.6, 1.0, 2);
        for e in [C64::new(0.3, 0.2), C64::new(-1.1, 0.7), C64::new(0.05, -2.0)] {
            let d = det4(boundary_matrix(e, &prm).unwrap()) / prm.t2.powi(4);
            let diff = boundary_difference(e, &prm).unwrap();
            assert!((d - diff).norm() < 1e-10 * (1.0 + d.norm()), "{d} vs {diff}");
        }
    }

    #[test]
    fn branch_point_is_reported() {
        let prm = ModelParams::ring(1.7, 1.0, 1.6, 1.0, 4);
        assert!(matches!(boundary_determinant_residual(C64::new(0.0, 1.0), &prm), Err(Error::BranchPoint(..))));
        assert!(boundary_determinant_residual(C64::new(0.3, 0.0), &prm.with_boundary(0.5)).is_err());
    }
}
