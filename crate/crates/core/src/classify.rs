//! Spectral gaps, phase regions, and the closed-form region boundaries.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::C64;
use crate::model::ModelParams;
use crate::spectral::StateTag;
use crate::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-3;
pub const DEFAULT_LINK_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub real_gap_open: bool,
    pub real_gap_width: f64,
    pub imag_gap_open: bool,
    pub imag_gap_width: f64,
    pub component_count: usize,
}

/// Phase region; serialized as 1-7, with 0 for a degenerate cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    Degenerate,
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 8] = [
        RegionLabel::Degenerate,
        RegionLabel::I,
        RegionLabel::II,
        RegionLabel::III,
        RegionLabel::IV,
        RegionLabel::V,
        RegionLabel::VI,
        RegionLabel::VII,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<RegionLabel> {
        RegionLabel::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionLabel::Degenerate => "degenerate",
            RegionLabel::I => "I",
            RegionLabel::II => "II",
            RegionLabel::III => "III",
            RegionLabel::IV => "IV",
            RegionLabel::V => "V",
            RegionLabel::VI => "VI",
            RegionLabel::VII => "VII",
        };
        f.write_str(s)
    }
}

impl Serialize for RegionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for RegionLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        RegionLabel::from_code(code).ok_or_else(|| serde::de::Error::custom(format!("unknown region code {code}")))
    }
}

/// Counts of special states in one spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSummary {
    pub topological: usize,
    pub bound: usize,
}

impl TagSummary {
    pub fn from_tags<'a>(tags: impl IntoIterator<Item = &'a StateTag>) -> Self {
        let mut s = TagSummary::default();
        for t in tags {
            match t {
                StateTag::TopologicalEdge => s.topological += 1,
                StateTag::Bound => s.bound += 1,
                StateTag::Bulk => {}
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: RegionLabel,
    /// Set when the gaps and tags contradict each other.
    pub anomaly: Option<String>,
}

/// Nearest-neighbour distance of every point: scan outwards in both
/// directions of the real-part order until `|dRe|` exceeds the best so far.
fn nearest_distances(pts: &[C64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].re.total_cmp(&pts[b].re));
    let mut best = vec![f64::INFINITY; pts.len()];
    for (k, &i) in idx.iter().enumerate() {
        let p = pts[i];
        let mut b = f64::INFINITY;
        for &j in &idx[k + 1..] {
            if pts[j].re - p.re >= b {
                break;
            }
            b = b.min((pts[j] - p).norm());
        }
        for &j in idx[..k].iter().rev() {
            if p.re - pts[j].re >= b {
                break;
            }
            b = b.min((pts[j] - p).norm());
        }
        best[i] = b;
    }
    best
}

/// Median nearest-neighbour distance, ignoring coincident points.
pub fn median_nn_spacing(pts: &[C64]) -> f64 {
    let scale = pts.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let distinct = dedup_points(pts, 1e-12 * scale);
    if distinct.len() < 2 {
        return 0.0;
    }
    let mut d = nearest_distances(&distinct);
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

fn dedup_points(pts: &[C64], tol: f64) -> Vec<C64> {
    let mut sorted = pts.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<C64> = Vec::with_capacity(sorted.len());
    for p in sorted {
        let dup = out.iter().rev().take_while(|q| p.re - q.re <= tol).any(|q| (p - q).norm() <= tol);
        if !dup {
            out.push(p);
        }
    }
    out
}

fn join(parent: &mut [usize], i: usize, j: usize) {
    let (a, b) = (find(parent, i), find(parent, j));
    if a != b {
        parent[a.max(b)] = a.min(b);
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage cluster id per point (ids are arbitrary but stable).
pub fn single_linkage(pts: &[C64], link: f64) -> Vec<usize> {
    linked_clusters(pts, link, &[])
}

/// Single linkage plus explicit `links` between point indices.
pub fn linked_clusters(pts: &[C64], link: f64, links: &[(usize, usize)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].re.total_cmp(&pts[b].re));
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    for (k, &i) in idx.iter().enumerate() {
        for &j in &idx[k + 1..] {
            if pts[j].re - pts[i].re > link {
                break;
            }
            if (pts[j] - pts[i]).norm() <= link {
                join(&mut parent, i, j);
            }
        }
    }
    for &(i, j) in links {
        join(&mut parent, i, j);
    }
    (0..pts.len()).map(|i| find(&mut parent, i)).collect()
}

/// Gap around `axis_coord = 0`, where `axis_coord` picks Re or Im.
fn gap(pts: &[C64], clusters: &[usize], coord: impl Fn(C64) -> f64, tol: f64) -> (bool, f64) {
    let min_abs = pts.iter().map(|&p| coord(p).abs()).fold(f64::INFINITY, f64::min);
    if min_abs <= tol {
        return (false, 0.0);
    }
    // a connected component with points on both sides crosses the axis
    // between samples
    let mut sides: std::collections::BTreeMap<usize, (bool, bool)> = Default::default();
    for (&p, &c) in pts.iter().zip(clusters) {
        let e = sides.entry(c).or_default();
        if coord(p) < 0.0 {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    if sides.values().any(|&(neg, pos)| neg && pos) {
        return (false, 0.0);
    }
    (true, 2.0 * min_abs)
}

pub fn detect_gaps(energies: &[C64], rel_tol: f64) -> Result<GapReport> {
    detect_gaps_with(energies, rel_tol, DEFAULT_LINK_FACTOR)
}

/// Real gap open iff no energy has `|Re E| <= rel_tol * R` (with `R` the
/// spectral radius) and no single-linkage cluster reaches across `Re = 0`;
/// the width is `2 min |Re E|`. The imaginary gap is the same on `Im`.
pub fn detect_gaps_with(energies: &[C64], rel_tol: f64, link_factor: f64) -> Result<GapReport> {
    detect_gaps_linked(energies, rel_tol, link_factor, &[])
}

/// [`detect_gaps_with`] with extra connectivity, e.g. the parametrization
/// links of a sampled analytic curve.
pub fn detect_gaps_linked(
    energies: &[C64],
    rel_tol: f64,
    link_factor: f64,
    links: &[(usize, usize)],
) -> Result<GapReport> {
    if energies.is_empty() {
        return Err(Error::Empty("no energies to analyse for gaps".into()));
    }
    if let Some(&(i, j)) = links.iter().find(|&&(i, j)| i.max(j) >= energies.len()) {
        return Err(Error::InvalidParams(format!("link ({i}, {j}) outside {} energies", energies.len())));
    }
    let radius = energies.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let tol = rel_tol * radius;
    let link = link_factor * median_nn_spacing(energies);
    let clusters = linked_clusters(energies, link, links);
    let component_count = clusters.iter().collect::<std::collections::BTreeSet<_>>().len();
    let (real_gap_open, real_gap_width) = gap(energies, &clusters, |z| z.re, tol);
    let (imag_gap_open, imag_gap_width) = gap(energies, &clusters, |z| z.im, tol);
    Ok(GapReport { real_gap_open, real_gap_width, imag_gap_open, imag_gap_width, component_count })
}

/// Region from gaps and special-state counts.
pub fn classify_region(params: &ModelParams, report: &GapReport, tags: &TagSummary) -> Classification {
    use RegionLabel::*;
    if params.validate().is_err() || params.on_degenerate_line() {
        return Classification { label: Degenerate, anomaly: None };
    }
    let topo = tags.topological > 0;
    let (label, anomaly) = match (report.real_gap_open, report.imag_gap_open) {
        (false, false) if topo => (I, Some("topological edge states with both gaps closed".to_string())),
        (false, false) => (I, None),
        (true, false) if topo => (VII, None),
        (true, false) if tags.bound > 0 => (VI, None),
        (true, false) => (II, None),
        (false, true) if topo => (III, Some("topological edge states with only an imaginary gap".to_string())),
        (false, true) => (III, None),
        (true, true) if topo => (V, None),
        (true, true) => (IV, None),
    };
    Classification { label, anomaly }
}

/// Signed margins of the closed-form region boundaries; positive margins
/// mean the inequality in the field name holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    /// `sqrt(t2^2 + gamma^2) - |t1|`.
    pub obc_margin: f64,
    pub inside_obc_topological: bool,
    /// `|t1| - |t2 - gamma|`.
    pub pbc_margin_minus: f64,
    /// `|t1| - |t2 + gamma|`.
    pub pbc_margin_plus: f64,
    /// `|t1|` lies between the two periodic-side lines.
    pub between_pbc_lines: bool,
    /// `|eps| - |gamma|`.
    pub tearing_margin: f64,
    pub torn: bool,
}

pub fn analytic_phase_boundaries(params: &ModelParams) -> PhaseBoundaries {
    let t1 = params.t1.abs();
    let obc_margin = params.t2.hypot(params.gamma) - t1;
    let lo = (params.t2 - params.gamma).abs();
    let hi = (params.t2 + params.gamma).abs();
    let tearing_margin = params.epsilon.abs() - params.gamma.abs();
    PhaseBoundaries {
        obc_margin,
        inside_obc_topological: obc_margin > 0.0,
        pbc_margin_minus: t1 - lo,
        pbc_margin_plus: t1 - hi,
        between_pbc_lines: t1 > lo.min(hi) && t1 < lo.max(hi),
        tearing_margin,
        torn: tearing_margin > 0.0,
    }
}
