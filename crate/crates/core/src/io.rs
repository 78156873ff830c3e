//! File formats: phase grids as CSV or JSON, spectra, tearing scans, and
//! binary PPM heatmaps.
//!
//! JSON floats are written in the shortest form that parses back to the
//! same `f64`, so every JSON file round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::RegionLabel;
use crate::gbz::{Branch, GbzPoint};
use crate::spectral::{EigenPair, StateTag};
use crate::sweep::{PhaseDiagramGrid, SweepSpec};
use crate::tearing::TearingScan;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    version: u32,
    spec: SweepSpec,
    labels: Vec<RegionLabel>,
    provenance: Vec<Option<String>>,
}

pub fn export_grid(grid: &PhaseDiagramGrid, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let file = GridFile {
                version: FORMAT_VERSION,
                spec: grid.spec.clone(),
                labels: grid.labels.clone(),
                provenance: grid.provenance.clone(),
            };
            let mut s = serde_json::to_string(&file).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut s = String::from("x,y,label\n");
            let (ax, ay) = (&grid.spec.axis_x, &grid.spec.axis_y);
            for (i, label) in grid.labels.iter().enumerate() {
                let (ix, iy) = (i % ax.steps, i / ax.steps);
                let _ = writeln!(s, "{},{},{}", fmt_sig9(ax.value(ix)), fmt_sig9(ay.value(iy)), label.code());
            }
            Ok(s.into_bytes())
        }
    }
}

pub fn parse_grid_json(text: &str) -> Result<PhaseDiagramGrid> {
    let file: GridFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported grid file version {}", file.version)));
    }
    let n = file.spec.cell_count();
    if file.labels.len() != n || file.provenance.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: file.labels.len() });
    }
    Ok(PhaseDiagramGrid { spec: file.spec, labels: file.labels, provenance: file.provenance })
}

/// One row of a grid CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub label: RegionLabel,
}

pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut lines = text.lines();
    if lines.next() != Some("x,y,label") {
        return Err(Error::Parse("grid CSV must start with the header x,y,label".into()));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let bad = |why: &str| Error::Parse(format!("grid CSV line {}: {why}", k + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            let x = f[0].parse().map_err(|_| bad("bad x"))?;
            let y = f[1].parse().map_err(|_| bad("bad y"))?;
            let code: u8 = f[2].parse().map_err(|_| bad("bad label"))?;
            let label = RegionLabel::from_code(code).ok_or_else(|| bad("unknown label code"))?;
            Ok(GridRow { x, y, label })
        })
        .collect()
}

/// Colour of each region in heatmaps.
pub fn region_color(label: RegionLabel) -> [u8; 3] {
    match label {
        RegionLabel::I => [0, 0, 96],
        RegionLabel::II => [120, 180, 255],
        RegionLabel::III => [0, 160, 0],
        RegionLabel::IV => [255, 210, 0],
        RegionLabel::V => [200, 0, 0],
        RegionLabel::VI => [40, 90, 200],
        RegionLabel::VII => [255, 140, 0],
        RegionLabel::Degenerate => [0, 0, 0],
    }
}

/// Binary PPM with one pixel per cell. The top image row is the largest
/// `y`, so the picture reads like a plot.
pub fn render_heatmap(grid: &PhaseDiagramGrid) -> Vec<u8> {
    let (w, h) = (grid.spec.axis_x.steps, grid.spec.axis_y.steps);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for iy in (0..h).rev() {
        for ix in 0..w {
            out.extend_from_slice(&region_color(grid.label_at(ix, iy)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericalRecord {
    pub re_e: f64,
    pub im_e: f64,
    pub rho_i: f64,
    pub loc_modulus: Option<f64>,
    pub tag: StateTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalRecord {
    pub re_e: f64,
    pub im_e: f64,
    pub re_beta: f64,
    pub im_beta: f64,
    pub branch: Branch,
    pub theta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub version: u32,
    pub numerical: Vec<NumericalRecord>,
    pub analytical: Vec<AnalyticalRecord>,
}

impl SpectrumFile {
    /// One numerical record per pair and one analytical record per active
    /// `beta` of each GBZ point.
    pub fn new(pairs: &[EigenPair], gbz: &[GbzPoint]) -> Result<Self> {
        if let Some(first) = pairs.first() {
            if let Some(p) = pairs.iter().find(|p| p.vector.len() != first.vector.len()) {
                return Err(Error::LengthMismatch { expected: first.vector.len(), got: p.vector.len() });
            }
        }
        let numerical = pairs
            .iter()
            .map(|p| NumericalRecord {
                re_e: p.energy.re,
                im_e: p.energy.im,
                rho_i: p.rho_i,
                loc_modulus: p.loc_modulus,
                tag: p.tag,
            })
            .collect();
        let analytical = gbz
            .iter()
            .flat_map(|g| {
                g.active_betas().map(|b| AnalyticalRecord {
                    re_e: g.energy.re,
                    im_e: g.energy.im,
                    re_beta: b.re,
                    im_beta: b.im,
                    branch: g.branch,
                    theta: g.theta,
                })
            })
            .collect();
        Ok(SpectrumFile { version: FORMAT_VERSION, numerical, analytical })
    }
}

const SPECTRUM_HEADER: &str = "kind,re_e,im_e,rho_i,loc_modulus,tag,re_beta,im_beta,branch,theta";

fn tag_name(t: StateTag) -> &'static str {
    match t {
        StateTag::Bulk => "bulk",
        StateTag::TopologicalEdge => "topological_edge",
        StateTag::Bound => "bound",
    }
}

fn tag_from_name(s: &str) -> Option<StateTag> {
    Some(match s {
        "bulk" => StateTag::Bulk,
        "topological_edge" => StateTag::TopologicalEdge,
        "bound" => StateTag::Bound,
        _ => return None,
    })
}

pub fn export_spectrum(pairs: &[EigenPair], gbz: &[GbzPoint], format: Format) -> Result<Vec<u8>> {
    let file = SpectrumFile::new(pairs, gbz)?;
    match format {
        Format::Json => {
            let mut s = serde_json::to_string(&file).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut s = format!("# version {FORMAT_VERSION}\n{SPECTRUM_HEADER}\n");
            for r in &file.numerical {
                let loc = r.loc_modulus.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(s, "numerical,{},{},{},{loc},{},,,,", r.re_e, r.im_e, r.rho_i, tag_name(r.tag));
            }
            for r in &file.analytical {
                let _ = writeln!(
                    s,
                    "analytical,{},{},,,,{},{},{},{}",
                    r.re_e,
                    r.im_e,
                    r.re_beta,
                    r.im_beta,
                    r.branch.name(),
                    r.theta
                );
            }
            Ok(s.into_bytes())
        }
    }
}

pub fn parse_spectrum(text: &str, format: Format) -> Result<SpectrumFile> {
    match format {
        Format::Json => {
            let f: SpectrumFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            if f.version != FORMAT_VERSION {
                return Err(Error::Parse(format!("unsupported spectrum file version {}", f.version)));
            }
            Ok(f)
        }
        Format::Csv => parse_spectrum_csv(text),
    }
}

fn parse_spectrum_csv(text: &str) -> Result<SpectrumFile> {
    let mut lines = text.lines();
    let version = lines
        .next()
        .and_then(|l| l.strip_prefix("# version "))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::Parse("spectrum CSV must start with '# version N'".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported spectrum file version {version}")));
    }
    if lines.next() != Some(SPECTRUM_HEADER) {
        return Err(Error::Parse("unexpected spectrum CSV header".into()));
    }
    let mut out = SpectrumFile { version, ..Default::default() };
    for (k, line) in lines.enumerate() {
        let bad = |why: &str| Error::Parse(format!("spectrum CSV line {}: {why}", k + 3));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad("expected 10 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
        match f[0] {
            "numerical" => out.numerical.push(NumericalRecord {
                re_e: num(1)?,
                im_e: num(2)?,
                rho_i: num(3)?,
                loc_modulus: if f[4].is_empty() { None } else { Some(num(4)?) },
                tag: tag_from_name(f[5]).ok_or_else(|| bad("unknown tag"))?,
            }),
            "analytical" => out.analytical.push(AnalyticalRecord {
                re_e: num(1)?,
                im_e: num(2)?,
                re_beta: num(6)?,
                im_beta: num(7)?,
                branch: Branch::from_name(f[8]).ok_or_else(|| bad("unknown branch"))?,
                theta: num(9)?,
            }),
            _ => return Err(bad("unknown record kind")),
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct TearingFile {
    version: u32,
    scan: TearingScan,
}

pub fn export_tearing(scan: &TearingScan) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string(&TearingFile { version: FORMAT_VERSION, scan: scan.clone() })
        .map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn parse_tearing(text: &str) -> Result<TearingScan> {
    let f: TearingFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if f.version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported tearing file version {}", f.version)));
    }
    Ok(f.scan)
}
