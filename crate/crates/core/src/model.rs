//! The two-chain ring: chain I carries gain `+i eps`, chain II loss `-i eps`,
//! and the two junctions between them carry `t_boundary`.
//!
//! State vectors are ordered `I_1A, I_1B, ..., I_NB, II_1A, ..., II_NB`, so
//! chain I is the first `2 * n_cells` entries.

use serde::{Deserialize, Serialize};

use crate::linalg::{lift, CMatrix, ComplexMatrix, Real, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chain {
    I,
    II,
}

impl Chain {
    /// Sign of the on-site imaginary potential.
    pub fn gain_sign(self) -> f64 {
        match self {
            Chain::I => 1.0,
            Chain::II => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub t1: f64,
    pub t2: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub t_boundary: f64,
    pub n_cells: usize,
}

impl ModelParams {
    /// Full ring on the dissipation-tuning path (`t_boundary = t2`).
    pub fn ring(t1: f64, t2: f64, gamma: f64, epsilon: f64, n_cells: usize) -> Self {
        ModelParams { t1, t2, gamma, epsilon, t_boundary: t2, n_cells }
    }

    pub fn with_boundary(mut self, t_boundary: f64) -> Self {
        self.t_boundary = t_boundary;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("t1", self.t1),
            ("t2", self.t2),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("t_boundary", self.t_boundary),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if self.t2 == 0.0 {
            return Err(Error::InvalidParams("t2 must be nonzero".into()));
        }
        if self.n_cells < 2 {
            return Err(Error::InvalidParams(format!("n_cells = {} but at least 2 are required", self.n_cells)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        4 * self.n_cells
    }

    /// Uniform ring: no gain/loss and junctions identical to the bulk bond.
    pub fn is_translation_invariant(&self) -> bool {
        self.epsilon == 0.0 && self.t_boundary == self.t2
    }

    /// `|t1| = |gamma|` collapses one of the characteristic coefficients.
    pub fn on_degenerate_line(&self) -> bool {
        (self.t1.abs() - self.gamma.abs()).abs() <= 1e-12 * (1.0 + self.t1.abs())
    }

    /// `sqrt(|t1 - gamma| / |t1 + gamma|)`, the per-cell decay ratio of the
    /// open-chain skin modes. Infinite or zero on the degenerate lines.
    pub fn skin_ratio(&self) -> f64 {
        ((self.t1 - self.gamma).abs() / (self.t1 + self.gamma).abs()).sqrt()
    }

    /// `max(rho, 1/rho)^n_cells` for the skin ratio `rho`: how far the skin
    /// modes grow across one chain, and roughly the eigenvalue condition number.
    pub fn amplification(&self) -> f64 {
        let rho = self.skin_ratio();
        rho.max(1.0 / rho).powf(self.n_cells as f64)
    }
}

pub fn site_index(n_cells: usize, chain: Chain, cell: usize, sub: Sublattice) -> usize {
    let base = match chain {
        Chain::I => 0,
        Chain::II => 2 * n_cells,
    };
    base + 2 * cell
        + match sub {
            Sublattice::A => 0,
            Sublattice::B => 1,
        }
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<ComplexMatrix> {
    hamiltonian_in(params)
}

/// The Hamiltonian with entries lifted into the scalar `T`.
pub fn hamiltonian_in<T: Real>(params: &ModelParams) -> Result<CMatrix<T>> {
    params.validate()?;
    let n = params.n_cells;
    let mut h = CMatrix::<T>::zeros(params.dim());
    let real = |x: f64| lift::<T>(C64::new(x, 0.0));
    let (ab, ba) = (params.t1 + params.gamma, params.t1 - params.gamma);
    for chain in [Chain::I, Chain::II] {
        let onsite = lift::<T>(C64::new(0.0, chain.gain_sign() * params.epsilon));
        for cell in 0..n {
            let a = site_index(n, chain, cell, Sublattice::A);
            let b = site_index(n, chain, cell, Sublattice::B);
            h[(a, a)] = onsite;
            h[(b, b)] = onsite;
            h[(a, b)] = real(ab);
            h[(b, a)] = real(ba);
            if cell + 1 < n {
                let next = site_index(n, chain, cell + 1, Sublattice::A);
                h[(b, next)] = real(params.t2);
                h[(next, b)] = real(params.t2);
            }
        }
    }
    let junction = real(params.t_boundary);
    for (from, to) in [(Chain::I, Chain::II), (Chain::II, Chain::I)] {
        let b = site_index(n, from, n - 1, Sublattice::B);
        let a = site_index(n, to, 0, Sublattice::A);
        h[(b, a)] = junction;
        h[(a, b)] = junction;
    }
    Ok(h)
}

/// Both branches `±sqrt((t1 + t2 cos k)^2 + (t2 sin k + i gamma)^2)` of the
/// uncoupled-chain Bloch band. `epsilon` and `t_boundary` are ignored.
pub fn bloch_spectrum(params: &ModelParams, k: f64) -> Result<[C64; 2]> {
    if ![params.t1, params.t2, params.gamma, k].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParams("non-finite Bloch input".into()));
    }
    let x = C64::new(params.t1 + params.t2 * k.cos(), 0.0);
    let y = C64::new(params.t2 * k.sin(), params.gamma);
    let e = (x * x + y * y).sqrt();
    Ok([e, -e])
}

/// Bloch energies on the `2 * n_cells` momenta of the full ring.
pub fn bloch_reference(params: &ModelParams) -> Result<Vec<C64>> {
    let m = 2 * params.n_cells;
    let mut out = Vec::with_capacity(2 * m);
    for j in 0..m {
        let k = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        out.extend(bloch_spectrum(params, k)?);
    }
    Ok(out)
}
