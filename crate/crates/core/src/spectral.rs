//! Eigendecomposition of the ring Hamiltonian and per-state analysis.
//!
//! Eigenvalues of a skin-effect Hamiltonian with `N` cells are perturbed by
//! roughly `u * rho^-N` in a precision with unit roundoff `u`, so plain
//! doubles lose every digit around `N = 30` deep in the skin regime. Model
//! spectra therefore go through double-double arithmetic whenever the
//! amplification is large, using the chiral sector of `H^2` to halve the
//! dimension, and eigenvectors come from shifted inverse iteration on the
//! banded (folded) ring.

use std::cmp::Ordering;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::gbz::{gbz_curve, DEFAULT_THETA_STEPS};
use crate::linalg::{csqrt, eig, lift, lower, modulus, BandedLu, CMatrix, ComplexMatrix, Dd, Real, C64};
use crate::model::{hamiltonian_in, ModelParams};
use crate::transfer::{polish_roots, CyclicTridiagonal};
use crate::{Error, Result};

/// Residual contract relative to the max-row-sum norm.
pub const RESIDUAL_BOUND: f64 = 1e-9;

const ITERATIONS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTag {
    Bulk,
    TopologicalEdge,
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub energy: C64,
    /// Unit Euclidean norm.
    pub vector: Vec<C64>,
    pub rho_i: f64,
    pub loc_modulus: Option<f64>,
    pub tag: StateTag,
}

impl EigenPair {
    /// Pairs a unit vector with its energy; `rho_i` is read off the vector.
    pub fn new(energy: C64, vector: Vec<C64>) -> Self {
        let half = vector.len() / 2;
        let rho_i = vector[..half].iter().map(|z| z.norm_sqr()).sum::<f64>().clamp(0.0, 1.0);
        EigenPair { energy, vector, rho_i, loc_modulus: None, tag: StateTag::Bulk }
    }

    pub fn rho_ii(&self) -> f64 {
        1.0 - self.rho_i
    }
}

/// Arithmetic used for model spectra.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    DoubleDouble,
    /// Double-double whenever the skin amplification exceeds
    /// [`AUTO_AMPLIFICATION_LIMIT`].
    #[default]
    Auto,
}

pub const AUTO_AMPLIFICATION_LIMIT: f64 = 1e3;

impl Precision {
    /// Resolves `Auto` for `params`; never returns `Auto`.
    pub fn resolve(self, params: &ModelParams) -> Precision {
        match self {
            Precision::Auto => {
                if params.is_translation_invariant() {
                    return Precision::Double;
                }
                let amp = params.amplification();
                if amp.is_finite() && amp <= AUTO_AMPLIFICATION_LIMIT {
                    Precision::Double
                } else {
                    Precision::DoubleDouble
                }
            }
            p => p,
        }
    }
}

fn by_im_re(a: &C64, b: &C64) -> Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

fn residual(h: &ComplexMatrix, e: C64, v: &[C64]) -> f64 {
    h.matvec(v).iter().zip(v).map(|(hv, x)| (hv - e * x).norm_sqr()).sum::<f64>().sqrt()
}

fn check_residual(h: &ComplexMatrix, e: C64, v: &[C64]) -> Result<()> {
    let bound = RESIDUAL_BOUND * h.norm_inf().max(f64::MIN_POSITIVE);
    let r = residual(h, e, v);
    if r <= bound {
        Ok(())
    } else {
        Err(Error::Residual { dim: h.dim(), residual: r, bound })
    }
}

/// All eigenpairs of a general complex matrix, sorted by `(Im, Re)`.
pub fn eigendecompose(matrix: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    eigendecompose_in(matrix)
}

/// As [`eigendecompose`], with the Schur iteration run in `T`.
pub fn eigendecompose_in<T: Real>(matrix: &CMatrix<T>) -> Result<Vec<EigenPair>> {
    if !matrix.is_finite() {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let e = eig(matrix, true).map_err(no_convergence)?;
    let vecs = e.vectors.expect("requested");
    let h64 = matrix.map(lower);
    let mut pairs = Vec::with_capacity(matrix.dim());
    for (j, &val) in e.values.iter().enumerate() {
        let mut v: Vec<C64> = vecs.column(j).into_iter().map(lower).collect();
        normalize(&mut v);
        let energy = lower(val);
        check_residual(&h64, energy, &v)?;
        pairs.push(EigenPair::new(energy, v));
    }
    pairs.sort_by(|a, b| by_im_re(&a.energy, &b.energy));
    Ok(pairs)
}

/// Eigenvalues only, full Schur iteration in `T`, sorted by `(Im, Re)`.
pub fn eigenvalues_in<T: Real>(matrix: &CMatrix<T>) -> Result<Vec<C64>> {
    let e = eig(matrix, false).map_err(no_convergence)?;
    let mut out: Vec<C64> = e.values.into_iter().map(lower).collect();
    out.sort_by(by_im_re);
    Ok(out)
}

fn no_convergence(f: crate::linalg::EigFailure) -> Error {
    Error::NoConvergence { dim: f.dim, iterations: f.iterations, residual: f.residual }
}

/// Sign of the chiral operator on a chain-I site: `+1` on A, `-1` on B.
fn sublattice_sign(site: usize) -> f64 {
    if site.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `H^2` restricted to the `+1` sector of the chiral operator (chain swap
/// times sublattice sign), which anticommutes with `H`. Every eigenvalue
/// `mu` of the sector block gives the pair `E = ±sqrt(mu)`.
fn chiral_sector<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    let m = h.dim() / 2;
    let h2 = h.matmul(h);
    let half = T::of(0.5);
    let mut k = CMatrix::<T>::zeros(m);
    for i in 0..m {
        let si = T::of(sublattice_sign(i));
        for j in 0..m {
            let sj = T::of(sublattice_sign(j));
            let z = h2[(i, j)] + h2[(i, j + m)] * sj + h2[(i + m, j)] * si + h2[(i + m, j + m)] * (si * sj);
            k[(i, j)] = Complex::new(z.re * half, z.im * half);
        }
    }
    k
}

fn sector_energies<T: Real>(params: &ModelParams) -> Result<Vec<C64>> {
    let h = hamiltonian_in::<T>(params)?;
    let k = chiral_sector(&h);
    let e = eig(&k, false).map_err(no_convergence)?;
    let mut out = Vec::with_capacity(2 * e.values.len());
    for mu in e.values {
        let r = lower(csqrt(mu));
        out.push(r);
        out.push(-r);
    }
    Ok(out)
}

/// Beyond this amplification double-double eigenvalues lose too many
/// digits; they are refined as roots of the ring determinant instead.
pub const POLISH_AMPLIFICATION_LIMIT: f64 = 1e16;

const POLISH_ITERATIONS: usize = 500;

fn polish(params: &ModelParams, guesses: Vec<C64>) -> Result<Vec<C64>> {
    let band = CyclicTridiagonal::from_matrix(&hamiltonian_in::<f64>(params)?)?;
    let out = polish_roots::<Dd>(&band, &guesses, POLISH_ITERATIONS)?;
    if out.converged {
        Ok(out.roots)
    } else {
        // multiple roots (exceptional points, decoupled chains) converge slowly; keep the estimates
        Ok(guesses)
    }
}

/// The `4 * n_cells` eigenvalues of the ring, sorted by `(Im, Re)`.
pub fn model_energies(params: &ModelParams, precision: Precision) -> Result<Vec<C64>> {
    params.validate()?;
    let mut out = match precision.resolve(params) {
        Precision::DoubleDouble => {
            let e = sector_energies::<Dd>(params)?;
            if params.amplification() > POLISH_AMPLIFICATION_LIMIT {
                polish(params, e)?
            } else {
                e
            }
        }
        _ => eigenvalues_in(&hamiltonian_in::<f64>(params)?)?,
    };
    out.sort_by(by_im_re);
    Ok(out)
}

/// Site order that turns the ring into a band of half-width 2.
fn folded_order(m: usize) -> Vec<usize> {
    (0..m).map(|p| if p % 2 == 0 { p / 2 } else { m - 1 - p / 2 }).collect()
}

fn start_vector(m: usize, seed: usize) -> Vec<Complex<Dd>> {
    (0..m)
        .map(|i| {
            let x = (i as f64 + 1.0) * (0.6180339887 + 0.137 * seed as f64);
            lift(C64::new(1.0 + 0.5 * (3.1 * x).sin(), 0.5 * (1.7 * x).cos()))
        })
        .collect()
}

fn dd_normalize(v: &mut [Complex<Dd>]) {
    let mut s = Dd::ZERO;
    for z in v.iter() {
        s += z.re * z.re + z.im * z.im;
    }
    let n = s.sqrt();
    if n > Dd::ZERO {
        for z in v.iter_mut() {
            z.re /= n;
            z.im /= n;
        }
    }
}

fn dd_project_out(v: &mut [Complex<Dd>], basis: &[Vec<Complex<Dd>>]) {
    for u in basis {
        let mut dot = Complex::new(Dd::ZERO, Dd::ZERO);
        for (a, b) in u.iter().zip(v.iter()) {
            dot += a.conj() * b;
        }
        for (a, b) in u.iter().zip(v.iter_mut()) {
            *b -= *a * dot;
        }
    }
}

/// Right eigenvector for `energy` by double-double inverse iteration,
/// kept orthogonal to `against` (vectors of a degenerate cluster).
fn inverse_iteration(
    h: &CMatrix<Dd>,
    order: &[usize],
    energy: C64,
    seed: usize,
    against: &[Vec<Complex<Dd>>],
) -> (Vec<Complex<Dd>>, C64) {
    let m = h.dim();
    let scale = h.map(lower).norm_inf().max(1.0);
    let tiny = Dd::from_f64(1e-30 * scale);
    let factor = |shift: Complex<Dd>| {
        BandedLu::factor(m, 2, 2, tiny, |i, j| {
            let z = h[(order[i], order[j])];
            if i == j {
                z - shift
            } else {
                z
            }
        })
    };
    let against: Vec<Vec<Complex<Dd>>> = against.iter().map(|u| order.iter().map(|&s| u[s]).collect()).collect();
    let mut shift: Complex<Dd> = lift(energy);
    let mut lu = factor(shift);
    let mut x = start_vector(m, seed);
    dd_project_out(&mut x, &against);
    dd_normalize(&mut x);
    for it in 0..ITERATIONS {
        let mut y = x.clone();
        lu.solve(&mut y);
        dd_project_out(&mut y, &against);
        // Wielandt update: once x is close to the eigenvector, y ~ x / (lambda - shift).
        // Far from the band centre the computed eigenvalues carry errors of
        // kappa * eps that the vector alone cannot absorb.
        if against.is_empty() && it + 1 < ITERATIONS {
            let k = (0..m).max_by(|&a, &b| lower(y[a]).norm().total_cmp(&lower(y[b]).norm())).unwrap_or(0);
            if modulus(y[k]) > Dd::ZERO {
                let step = x[k] / y[k];
                // capped so that a poor early iterate cannot hop to a neighbouring eigenvalue
                if it > 0 && (lower(shift + step) - energy).norm() < 1e-4 * scale {
                    shift += step;
                    lu = factor(shift);
                }
            }
        }
        dd_normalize(&mut y);
        x = y;
    }
    let mut v = vec![Complex::new(Dd::ZERO, Dd::ZERO); m];
    for (p, &site) in order.iter().enumerate() {
        v[site] = x[p];
    }
    (v, lower(shift))
}

/// Eigenvector of the model Hamiltonian at a known eigenvalue.
pub fn model_eigenvector(params: &ModelParams, energy: C64) -> Result<Vec<C64>> {
    let h = hamiltonian_in::<Dd>(params)?;
    let order = folded_order(h.dim());
    let (x, refined) = inverse_iteration(&h, &order, energy, 0, &[]);
    let mut v: Vec<C64> = x.into_iter().map(lower).collect();
    normalize(&mut v);
    check_residual(&hamiltonian_in::<f64>(params)?, refined, &v)?;
    Ok(v)
}

/// Full eigendecomposition of the model, sorted by `(Im, Re, rho_I)`.
pub fn diagonalize(params: &ModelParams, precision: Precision) -> Result<Vec<EigenPair>> {
    let energies = model_energies(params, precision)?;
    let hd = hamiltonian_in::<Dd>(params)?;
    let h64 = hamiltonian_in::<f64>(params)?;
    let order = folded_order(hd.dim());
    let cluster_tol = 1e-9 * h64.norm_inf().max(1.0);
    let mut dd_vectors: Vec<Vec<Complex<Dd>>> = Vec::with_capacity(energies.len());
    let mut pairs = Vec::with_capacity(energies.len());
    for (idx, &e) in energies.iter().enumerate() {
        let cluster: Vec<Vec<Complex<Dd>>> = (0..idx)
            .filter(|&j| (energies[j] - e).norm() < cluster_tol)
            .map(|j| dd_vectors[j].clone())
            .collect();
        let (mut x, mut refined) = inverse_iteration(&hd, &order, e, cluster.len(), &cluster);
        let mut v: Vec<C64> = x.iter().copied().map(lower).collect();
        normalize(&mut v);
        if !cluster.is_empty() && residual(&h64, e, &v) > RESIDUAL_BOUND * h64.norm_inf() {
            // a defective cluster has fewer eigenvectors than copies; repeat one
            (x, refined) = inverse_iteration(&hd, &order, e, cluster.len(), &[]);
            v = x.iter().copied().map(lower).collect();
            normalize(&mut v);
        }
        check_residual(&h64, refined, &v)?;
        dd_vectors.push(x);
        pairs.push(EigenPair::new(refined, v));
    }
    sort_pairs(&mut pairs);
    Ok(pairs)
}

pub fn sort_pairs(pairs: &mut [EigenPair]) {
    pairs.sort_by(|a, b| by_im_re(&a.energy, &b.energy).then(a.rho_i.total_cmp(&b.rho_i)));
}

/// `rho_I`: weight on the first `2 * n_cells` components.
pub fn chain_weight(pair: &EigenPair, n_cells: usize) -> Result<f64> {
    if pair.vector.len() != 4 * n_cells {
        return Err(Error::LengthMismatch { expected: 4 * n_cells, got: pair.vector.len() });
    }
    Ok(pair.vector[..2 * n_cells].iter().map(|z| z.norm_sqr()).sum::<f64>().clamp(0.0, 1.0))
}

/// Weight within `cells` cells of either domain wall, i.e. the first and
/// last `cells` cells of each chain.
pub fn domain_wall_weight(vector: &[C64], n_cells: usize, cells: usize) -> Result<f64> {
    if vector.len() != 4 * n_cells {
        return Err(Error::LengthMismatch { expected: 4 * n_cells, got: vector.len() });
    }
    let cells = cells.min(n_cells);
    let per_chain = 2 * n_cells;
    let mut w = 0.0;
    for base in [0, per_chain] {
        for (k, z) in vector[base..base + per_chain].iter().enumerate() {
            let cell = k / 2;
            if cell < cells || cell >= n_cells - cells {
                w += z.norm_sqr();
            }
        }
    }
    Ok(w)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Per-cell decay ratio `|beta|` of a state on its dominant chain.
///
/// Fits `ln|psi|` against the cell index separately on the A and B
/// sublattices over the middle third of the chain (never closer than 3 cells
/// to a domain wall) and returns `exp` of the mean slope, so a state with
/// `|psi_n| ~ r^n` gives `r`.
pub fn localization_modulus(pair: &EigenPair, params: &ModelParams) -> Result<f64> {
    let n = params.n_cells;
    if pair.vector.len() != 4 * n {
        return Err(Error::LengthMismatch { expected: 4 * n, got: pair.vector.len() });
    }
    let base = if pair.rho_i > 0.6 {
        0
    } else if pair.rho_i < 0.4 {
        2 * n
    } else {
        return Err(Error::Fit(format!("state is not dominated by one chain (rho_I = {:.3})", pair.rho_i)));
    };
    let lo = 3.max(n / 3);
    let hi = (n.saturating_sub(3)).min(2 * n / 3);
    if hi <= lo || 2 * (hi - lo) < 6 {
        return Err(Error::Fit(format!("fit window of cells {lo}..{hi} is shorter than 6 sites")));
    }
    let mut slope = 0.0;
    for sub in 0..2 {
        let mut xs = Vec::with_capacity(hi - lo);
        let mut ys = Vec::with_capacity(hi - lo);
        for cell in lo..hi {
            let a = pair.vector[base + 2 * cell + sub].norm();
            if !(a > 1e-300) {
                return Err(Error::Fit(format!("amplitude {a:e} at cell {cell} is too small to fit")));
            }
            xs.push(cell as f64);
            ys.push(a.ln());
        }
        slope += 0.5 * least_squares_slope(&xs, &ys);
    }
    Ok(slope.exp())
}

/// Knobs for [`detect_special_states_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialStateConfig {
    pub tol_re: f64,
    pub tol_im: f64,
    /// Isolation threshold in units of the median nearest-neighbour spacing.
    pub isolation_factor: f64,
    pub wall_cells: usize,
    pub wall_weight: f64,
    pub theta_steps: usize,
}

impl Default for SpecialStateConfig {
    fn default() -> Self {
        SpecialStateConfig {
            tol_re: 1e-3,
            tol_im: 0.05,
            isolation_factor: 5.0,
            wall_cells: 3,
            wall_weight: 0.5,
            theta_steps: DEFAULT_THETA_STEPS,
        }
    }
}

/// Median distance from each eigenvalue to its nearest distinct neighbour.
pub fn median_spacing(energies: &[C64]) -> f64 {
    let scale = energies.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let floor = 1e-9 * scale;
    let mut d: Vec<f64> = energies
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            energies
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| (a - b).norm())
                .filter(|&x| x > floor)
                .min_by(f64::total_cmp)
        })
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

fn distance_to_set(e: C64, set: &[C64]) -> f64 {
    set.iter().map(|b| (e - b).norm()).fold(f64::INFINITY, f64::min)
}

/// Whether `e` sits where a hybridized domain-wall zero mode can. A zero
/// mode of either chain sits at `±i eps`; the two ends meeting at a wall mix
/// through `t_boundary`, which keeps the pair on one of the axes (chiral
/// partners `E, -E` that are also conjugates) but moves it along the axis by
/// an amount set by the non-reciprocal end amplitudes. Without dissipation
/// only true zero modes count.
pub fn topological_energy(e: C64, params: &ModelParams, tol_re: f64, tol_im: f64) -> bool {
    let near_zero_mode = e.re.abs() < tol_re && (e.im.abs() - params.epsilon).abs() < tol_im;
    let on_axis = e.re.abs() < tol_re || e.im.abs() < tol_re;
    near_zero_mode || (params.epsilon != 0.0 && on_axis)
}

/// Tags for `energies` given the analytic bulk spectrum. Eigenvectors are
/// requested through `vector_of` only for isolated states.
pub fn tag_states(
    energies: &[C64],
    params: &ModelParams,
    bulk: &[C64],
    config: &SpecialStateConfig,
    mut vector_of: impl FnMut(usize) -> Result<Vec<C64>>,
) -> Result<Vec<StateTag>> {
    let mut tags = vec![StateTag::Bulk; energies.len()];
    if bulk.is_empty() {
        return Ok(tags);
    }
    let threshold = config.isolation_factor * median_spacing(energies);
    let floor = 1e-6 * energies.iter().map(|e| e.norm()).fold(1.0, f64::max);
    for (i, &e) in energies.iter().enumerate() {
        if distance_to_set(e, bulk) <= threshold.max(floor) {
            continue;
        }
        let v = vector_of(i)?;
        if domain_wall_weight(&v, params.n_cells, config.wall_cells)? <= config.wall_weight {
            continue;
        }
        tags[i] = if topological_energy(e, params, config.tol_re, config.tol_im) {
            StateTag::TopologicalEdge
        } else {
            StateTag::Bound
        };
    }
    Ok(tags)
}

/// Analytic bulk spectrum used as the isolation reference; empty when the
/// parameters sit on a degenerate line.
pub fn analytic_bulk(params: &ModelParams, theta_steps: usize) -> Vec<C64> {
    gbz_curve(params, theta_steps).map(|c| c.energies()).unwrap_or_default()
}

pub fn detect_special_states(
    pairs: &[EigenPair],
    params: &ModelParams,
    tol_re: f64,
    tol_im: f64,
) -> Result<Vec<EigenPair>> {
    let config = SpecialStateConfig { tol_re, tol_im, ..Default::default() };
    let bulk = analytic_bulk(params, config.theta_steps);
    detect_special_states_with(pairs, params, &bulk, &config)
}

pub fn detect_special_states_with(
    pairs: &[EigenPair],
    params: &ModelParams,
    bulk: &[C64],
    config: &SpecialStateConfig,
) -> Result<Vec<EigenPair>> {
    let energies: Vec<C64> = pairs.iter().map(|p| p.energy).collect();
    let tags = tag_states(&energies, params, bulk, config, |i| Ok(pairs[i].vector.clone()))?;
    Ok(pairs.iter().zip(tags).map(|(p, tag)| EigenPair { tag, ..p.clone() }).collect())
}

/// Fills `loc_modulus` for bulk states dominated by one chain.
pub fn annotate_localization(pairs: &mut [EigenPair], params: &ModelParams) {
    for p in pairs.iter_mut() {
        if p.tag == StateTag::Bulk {
            p.loc_modulus = localization_modulus(p, params).ok();
        }
    }
}
