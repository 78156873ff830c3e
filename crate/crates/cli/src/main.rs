use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gbzlab::gbz::{gbz_curve, DEFAULT_THETA_STEPS};
use gbzlab::io::{self, Format};
use gbzlab::model::ModelParams;
use gbzlab::spectral::{annotate_localization, detect_special_states_with, diagonalize, analytic_bulk, Precision, SpecialStateConfig};
use gbzlab::sweep::{run_sweep, Axis, AxisName, SweepSpec};
use gbzlab::tearing::{critical_epsilon, epsilon_grid};
use gbzlab::validate::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "gbzlab", version, about = "Spectra, GBZ curves and phase diagrams of the dissipative SSH ring")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Accepted for compatibility; every pipeline is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Numerical spectrum with chain weights, localization and state tags.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Also write the analytic GBZ records.
        #[arg(long)]
        analytic: bool,
        #[arg(long, default_value_t = DEFAULT_THETA_STEPS)]
        theta_steps: usize,
    },
    /// Analytic GBZ cloud and spectrum.
    Gbz {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = DEFAULT_THETA_STEPS)]
        theta_steps: usize,
    },
    /// Phase diagram over two parameters.
    Sweep {
        /// name:min:max:steps, name one of t1, t2, gamma, epsilon, t_boundary.
        #[arg(long)]
        axis_x: String,
        #[arg(long)]
        axis_y: String,
        /// Fixed parameters, e.g. `t1=1.7,gamma=1.6,epsilon=2.5,cells=30`.
        #[arg(long, default_value = "")]
        base: String,
        #[arg(long, default_value_t = DEFAULT_THETA_STEPS)]
        theta_steps: usize,
        #[command(flatten)]
        out: OutArgs,
        /// Also write a PPM heatmap here.
        #[arg(long)]
        render: Option<PathBuf>,
    },
    /// Closure gap scan and critical dissipation.
    Tearing {
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t2: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long)]
        eps_min: f64,
        #[arg(long)]
        eps_max: f64,
        #[arg(long, default_value_t = 0.01)]
        eps_step: f64,
        #[arg(long, default_value_t = 30)]
        cells: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-state localization modulus table.
    Localize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an oracle suite; exits with status 1 if any check fails.
    Validate {
        #[arg(long, value_enum)]
        suite: Vec<SuiteArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bloch,
    Determinant,
    Symmetry,
    BzLimit,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Bloch => Suite::Bloch,
            SuiteArg::Determinant => Suite::Determinant,
            SuiteArg::Symmetry => Suite::Symmetry,
            SuiteArg::BzLimit => Suite::BzLimit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Auto,
    Double,
    DoubleDouble,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    epsilon: f64,
    /// Junction hopping; defaults to t2 (the full ring).
    #[arg(long, allow_hyphen_values = true)]
    t_boundary: Option<f64>,
    #[arg(long, default_value_t = 30)]
    cells: usize,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Auto)]
    precision: PrecisionArg,
}

impl ModelArgs {
    fn params(&self) -> ModelParams {
        ModelParams::ring(self.t1, self.t2, self.gamma, self.epsilon, self.cells)
            .with_boundary(self.t_boundary.unwrap_or(self.t2))
    }

    fn precision(&self) -> Precision {
        match self.precision {
            PrecisionArg::Auto => Precision::Auto,
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::DoubleDouble => Precision::DoubleDouble,
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, else csv.
    #[arg(long)]
    format: Option<String>,
}

impl OutArgs {
    fn format(&self) -> gbzlab::Result<Format> {
        match (&self.format, &self.out) {
            (Some(f), _) => f.parse(),
            (None, Some(p)) if p.extension().is_some_and(|e| e == "json") => Ok(Format::Json),
            _ => Ok(Format::Csv),
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => io::write_file(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes).context("writing to standard output")?,
    }
    Ok(())
}

fn parse_base(s: &str) -> anyhow::Result<ModelParams> {
    let mut p = ModelParams::ring(1.0, 1.0, 0.0, 0.0, 30);
    let mut t_boundary = None;
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let Some((k, v)) = item.split_once('=') else { bail!("base entry {item:?} is not key=value") };
        let (k, v) = (k.trim(), v.trim());
        if k == "cells" || k == "n_cells" {
            p.n_cells = v.parse().with_context(|| format!("base {k}"))?;
            continue;
        }
        let x: f64 = v.parse().with_context(|| format!("base {k}"))?;
        match k.parse::<AxisName>()? {
            AxisName::TBoundary => t_boundary = Some(x),
            name => name.set(&mut p, x),
        }
    }
    p.t_boundary = t_boundary.unwrap_or(p.t2);
    Ok(p)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let quiet = cli.quiet;
    let note = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::Spectrum { model, out, analytic, theta_steps } => {
            let p = model.params();
            let pairs = diagonalize(&p, model.precision())?;
            let config = SpecialStateConfig { theta_steps, ..Default::default() };
            let bulk = analytic_bulk(&p, theta_steps);
            let mut pairs = detect_special_states_with(&pairs, &p, &bulk, &config)?;
            annotate_localization(&mut pairs, &p);
            let gbz = if analytic { gbz_curve(&p, theta_steps)?.points } else { Vec::new() };
            emit(out.out.as_deref(), &io::export_spectrum(&pairs, &gbz, out.format()?)?)?;
            let special = pairs.iter().filter(|q| q.tag != gbzlab::spectral::StateTag::Bulk).count();
            note(format!("{} states, {special} special", pairs.len()));
        }
        Command::Gbz { model, out, theta_steps } => {
            let curve = gbz_curve(&model.params(), theta_steps)?;
            if curve.anomalous {
                note("warning: no branch produced accepted points".into());
            }
            emit(out.out.as_deref(), &io::export_spectrum(&[], &curve.points, out.format()?)?)?;
            note(format!("{} accepted points", curve.points.len()));
        }
        Command::Sweep { axis_x, axis_y, base, theta_steps, out, render } => {
            let mut spec = SweepSpec::new(axis_x.parse::<Axis>()?, axis_y.parse::<Axis>()?, parse_base(&base)?);
            spec.classifier_config.special.theta_steps = theta_steps;
            spec.validate()?;
            if spec.is_mixed_path() {
                note("note: sweep mixes dissipation with a modified junction".into());
            }
            let grid = run_sweep(&spec)?;
            emit(out.out.as_deref(), &io::export_grid(&grid, out.format()?)?)?;
            if let Some(path) = render {
                io::write_file(&path, &io::render_heatmap(&grid))?;
            }
            let flagged = grid.provenance.iter().filter(|d| d.is_some()).count();
            note(format!("{} cells, {flagged} with diagnostics", grid.labels.len()));
        }
        Command::Tearing { t1, t2, gamma, eps_min, eps_max, eps_step, cells, out } => {
            let base = ModelParams::ring(t1, t2, gamma, 0.0, cells);
            let scan = critical_epsilon(&base, &epsilon_grid(eps_min, eps_max, eps_step)?)?;
            emit(out.as_deref(), &io::export_tearing(&scan)?)?;
            match scan.epsilon_star {
                Some(e) => note(format!("eps* = {e:.4} +- {eps_step}")),
                None => note("no complete tearing inside the scanned range".into()),
            }
        }
        Command::Localize { model, out } => {
            let p = model.params();
            let mut pairs = diagonalize(&p, model.precision())?;
            annotate_localization(&mut pairs, &p);
            let mut s = String::from("re_e,im_e,rho_i,loc_modulus\n");
            for q in &pairs {
                let loc = q.loc_modulus.map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!("{},{},{},{loc}\n", q.energy.re, q.energy.im, q.rho_i));
            }
            emit(out.as_deref(), s.as_bytes())?;
        }
        Command::Validate { suite } => {
            let suites: Vec<Suite> =
                if suite.is_empty() { Suite::ALL.to_vec() } else { suite.into_iter().map(Suite::from).collect() };
            let mut all = true;
            for s in suites {
                let report = run_suite(s, cli.seed.unwrap_or(0));
                for c in &report.checks {
                    if !quiet || !c.passed {
                        println!("{} {s}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                }
                all &= report.passed();
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(
                e.downcast_ref::<gbzlab::Error>(),
                Some(gbzlab::Error::InvalidParams(_) | gbzlab::Error::Parse(_))
            ) || e.downcast_ref::<std::num::ParseFloatError>().is_some()
                || e.downcast_ref::<std::num::ParseIntError>().is_some();
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
