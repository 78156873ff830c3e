//! Phase-diagram sweeps over a plane of two model parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_region, detect_gaps_linked, detect_gaps_with, Classification, GapReport, RegionLabel, TagSummary, DEFAULT_LINK_FACTOR,
    DEFAULT_REL_TOL,
};
use crate::gbz::gbz_curve;
use crate::linalg::C64;
use crate::model::ModelParams;
use crate::spectral::{model_eigenvector, model_energies, tag_states, Precision, SpecialStateConfig, StateTag};
use crate::{par, Error, Result};

pub const MAX_CELLS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    T1,
    T2,
    Gamma,
    Epsilon,
    TBoundary,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::T1 => "t1",
            AxisName::T2 => "t2",
            AxisName::Gamma => "gamma",
            AxisName::Epsilon => "epsilon",
            AxisName::TBoundary => "t_boundary",
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            AxisName::T1 => p.t1 = v,
            AxisName::T2 => p.t2 = v,
            AxisName::Gamma => p.gamma = v,
            AxisName::Epsilon => p.epsilon = v,
            AxisName::TBoundary => p.t_boundary = v,
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "t1" => AxisName::T1,
            "t2" => AxisName::T2,
            "gamma" => AxisName::Gamma,
            "epsilon" | "eps" => AxisName::Epsilon,
            "t_boundary" | "t-boundary" | "t" => AxisName::TBoundary,
            _ => return Err(Error::Parse(format!("unknown axis name {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: AxisName, min: f64, max: f64, steps: usize) -> Self {
        Axis { name, min, max, steps }
    }

    /// Grid value `i` of `steps`, endpoints included.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

impl FromStr for Axis {
    type Err = Error;
    /// `name:min:max:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("axis {s:?} is not name:min:max:steps")));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("axis {s:?}: {e}")));
        let steps = parts[3].trim().parse::<usize>().map_err(|e| Error::Parse(format!("axis {s:?}: {e}")))?;
        Ok(Axis { name: parts[0].trim().parse()?, min: num(parts[1])?, max: num(parts[2])?, steps })
    }
}

/// Tolerances of the per-point classification pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub rel_tol: f64,
    pub link_factor: f64,
    pub precision: Precision,
    pub special: SpecialStateConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            rel_tol: DEFAULT_REL_TOL,
            link_factor: DEFAULT_LINK_FACTOR,
            precision: Precision::Auto,
            special: SpecialStateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis_x: Axis,
    pub axis_y: Axis,
    pub base: ModelParams,
    pub classifier_config: ClassifierConfig,
}

impl SweepSpec {
    pub fn new(axis_x: Axis, axis_y: Axis, base: ModelParams) -> Self {
        SweepSpec { axis_x, axis_y, base, classifier_config: ClassifierConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for a in [&self.axis_x, &self.axis_y] {
            if a.steps < 2 {
                return Err(Error::InvalidParams(format!("axis {} needs at least 2 steps", a.name)));
            }
            if !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidParams(format!("axis {} needs finite min < max", a.name)));
            }
        }
        if self.axis_x.name == self.axis_y.name {
            return Err(Error::InvalidParams(format!("both axes sweep {}", self.axis_x.name)));
        }
        if self.cell_count() > MAX_CELLS {
            return Err(Error::InvalidParams(format!("{} cells exceed the {MAX_CELLS} limit", self.cell_count())));
        }
        if self.base.n_cells < 2 {
            return Err(Error::InvalidParams("base n_cells must be at least 2".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.axis_x.steps.saturating_mul(self.axis_y.steps)
    }

    /// Parameters of cell `index` (x varies fastest).
    pub fn params_at(&self, index: usize) -> ModelParams {
        let (ix, iy) = (index % self.axis_x.steps, index / self.axis_x.steps);
        let mut p = self.base;
        self.axis_x.name.set(&mut p, self.axis_x.value(ix));
        self.axis_y.name.set(&mut p, self.axis_y.value(iy));
        p
    }

    /// Some cell has both dissipation and a modified junction, which is
    /// neither of the two tuning paths.
    pub fn is_mixed_path(&self) -> bool {
        let touches = |n: AxisName| self.axis_x.name == n || self.axis_y.name == n;
        let eps = touches(AxisName::Epsilon) || self.base.epsilon != 0.0;
        let tb = touches(AxisName::TBoundary) || self.base.t_boundary != self.base.t2 || touches(AxisName::T2);
        eps && tb
    }
}

/// Everything the pipeline learned about one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub classification: Classification,
    pub gaps: Option<GapReport>,
    pub tags: TagSummary,
    pub energies: Vec<C64>,
    pub state_tags: Vec<StateTag>,
}

impl PointResult {
    fn degenerate() -> Self {
        PointResult {
            classification: Classification { label: RegionLabel::Degenerate, anomaly: None },
            gaps: None,
            tags: TagSummary::default(),
            energies: Vec::new(),
            state_tags: Vec::new(),
        }
    }
}

/// Diagonalize, tag special states, measure gaps and classify.
///
/// Gaps are read off the analytic bulk spectrum whenever it describes the
/// ring (junction equal to `t2`, or zero); finite-size tails of the numerical
/// spectrum would otherwise close gaps that are open in the bulk. Other
/// junction values fall back to the numerical spectrum without special
/// states.
pub fn classify_point(params: &ModelParams, config: &ClassifierConfig) -> Result<PointResult> {
    params.validate()?;
    if params.on_degenerate_line() {
        return Ok(PointResult::degenerate());
    }
    let energies = model_energies(params, config.precision)?;
    let curve = gbz_curve(params, config.special.theta_steps)?;
    let bulk = curve.energies();
    let state_tags = tag_states(&energies, params, &bulk, &config.special, |i| model_eigenvector(params, energies[i]))?;
    let tags = TagSummary::from_tags(&state_tags);
    let analytic_applies = params.t_boundary == params.t2 || params.t_boundary == 0.0;
    let gaps = if analytic_applies && !bulk.is_empty() {
        let links = curve.continuation_links(config.special.theta_steps);
        detect_gaps_linked(&bulk, config.rel_tol, config.link_factor, &links)?
    } else {
        let numeric: Vec<C64> =
            energies.iter().zip(&state_tags).filter(|(_, t)| **t == StateTag::Bulk).map(|(e, _)| *e).collect();
        detect_gaps_with(&numeric, config.rel_tol, config.link_factor)?
    };
    let classification = classify_region(params, &gaps, &tags);
    Ok(PointResult { classification, gaps: Some(gaps), tags, energies, state_tags })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramGrid {
    pub spec: SweepSpec,
    /// Row-major, x fastest.
    pub labels: Vec<RegionLabel>,
    /// Per-cell diagnostic: solver failures and classification anomalies.
    pub provenance: Vec<Option<String>>,
}

impl PhaseDiagramGrid {
    pub fn label_at(&self, ix: usize, iy: usize) -> RegionLabel {
        self.labels[iy * self.spec.axis_x.steps + ix]
    }
}

/// Classifies every cell independently; the result does not depend on the
/// thread count or scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<PhaseDiagramGrid> {
    spec.validate()?;
    let cells = par::map_indexed(spec.cell_count(), |i| {
        let p = spec.params_at(i);
        match classify_point(&p, &spec.classifier_config) {
            Ok(r) => (r.classification.label, r.classification.anomaly),
            Err(e) => (RegionLabel::Degenerate, Some(e.to_string())),
        }
    });
    let (labels, provenance) = cells.into_iter().unzip();
    Ok(PhaseDiagramGrid { spec: spec.clone(), labels, provenance })
}
