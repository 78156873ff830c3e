//! The end-to-end closure gap of the analytic spectrum and the critical
//! dissipation at which the ring tears into two open chains.
//!
//! `Delta` compares the first-quadrant arcs just after `theta = 0` and just
//! before `theta = 2 pi`. Each side is carried to its `theta -> 0` limit by
//! snapping it to the nearest unscreened `theta = 0` solution of the same
//! branch, so a continuous curve gives exactly zero instead of an `O(dtheta)`
//! remainder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::gbz::{accepted_at, candidates_at, GbzPoint, GbzTolerances, DEFAULT_THETA_STEPS};
use crate::linalg::C64;
use crate::model::ModelParams;
use crate::{par, Error, Result};

pub const ZERO_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaGap {
    Value(f64),
    /// No accepted points in the first quadrant on one side of `theta = 0`.
    NotApplicable(String),
}

impl DeltaGap {
    pub fn value(&self) -> Option<f64> {
        match self {
            DeltaGap::Value(v) => Some(*v),
            DeltaGap::NotApplicable(_) => None,
        }
    }
}

fn first_quadrant(points: Vec<GbzPoint>) -> Vec<GbzPoint> {
    points.into_iter().filter(|p| p.energy.re > 0.0 && p.energy.im > 0.0).collect()
}

fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one = |x: &[C64], y: &[C64]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

pub fn delta_gap(params: &ModelParams) -> Result<DeltaGap> {
    delta_gap_with(params, 2.0 * PI / DEFAULT_THETA_STEPS as f64, &GbzTolerances::default())
}

pub fn delta_gap_with(params: &ModelParams, delta_theta: f64, tol: &GbzTolerances) -> Result<DeltaGap> {
    if !(delta_theta > 0.0 && delta_theta < PI) {
        return Err(Error::InvalidParams(format!("delta_theta = {delta_theta} must lie in (0, pi)")));
    }
    let plus = first_quadrant(accepted_at(params, delta_theta, tol)?);
    let minus = first_quadrant(accepted_at(params, 2.0 * PI - delta_theta, tol)?);
    if plus.is_empty() || minus.is_empty() {
        return Ok(DeltaGap::NotApplicable(format!(
            "first quadrant empty at {} (eps = {})",
            if plus.is_empty() { "theta = 0+" } else { "theta = 2pi-" },
            params.epsilon
        )));
    }
    let anchors = candidates_at(params, 0.0, tol)?;
    let limit = |p: &GbzPoint| -> C64 {
        anchors
            .iter()
            .filter(|a| a.branch == p.branch)
            .map(|a| a.energy)
            .min_by(|x, y| (x - p.energy).norm().total_cmp(&(y - p.energy).norm()))
            .unwrap_or(p.energy)
    };
    let lp: Vec<C64> = plus.iter().map(limit).collect();
    let lm: Vec<C64> = minus.iter().map(limit).collect();
    let d = hausdorff(&lp, &lm);
    Ok(DeltaGap::Value(if d < ZERO_THRESHOLD { 0.0 } else { d }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TearingScan {
    pub params_base: ModelParams,
    pub epsilon_grid: Vec<f64>,
    /// `None` where the first quadrant was empty.
    pub delta_values: Vec<Option<f64>>,
    pub epsilon_star: Option<f64>,
}

/// `min, min + step, ...` up to `max` inclusive (to a hundredth of a step).
pub fn epsilon_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParams(format!("bad epsilon range {min}..{max} step {step}")));
    }
    let n = ((max - min) / step + 0.01).floor() as usize;
    Ok((0..=n).map(|k| min + k as f64 * step).collect())
}

pub fn critical_epsilon(params_base: &ModelParams, epsilon_grid: &[f64]) -> Result<TearingScan> {
    if epsilon_grid.is_empty() || epsilon_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("epsilon grid must be nonempty and strictly increasing".into()));
    }
    params_base.validate()?;
    let results = par::map_slice(epsilon_grid, |&eps| delta_gap(&params_base.with_epsilon(eps)));
    let mut delta_values = Vec::with_capacity(results.len());
    for r in results {
        delta_values.push(r?.value());
    }
    // smallest grid value from which Delta stays at zero
    let mut epsilon_star = None;
    for (k, &eps) in epsilon_grid.iter().enumerate().rev() {
        match delta_values[k] {
            Some(v) if v < ZERO_THRESHOLD => epsilon_star = Some(eps),
            _ => break,
        }
    }
    Ok(TearingScan { params_base: *params_base, epsilon_grid: epsilon_grid.to_vec(), delta_values, epsilon_star })
}
