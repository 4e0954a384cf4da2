//! `hal-loss` command line: `curves`, `verify`, `gradcheck`, `train`, `sweep`.
//!
//! Every option can also come from a `--config` file of `key = value` lines
//! (`#` starts a comment); keys are the long flag names without the leading
//! dashes. Flags override the file. Exit codes: 0 success, 1 failed check or
//! runtime error, 2 usage error.

use crate::error::Error;
use crate::experiments::{
    flip_ordering_holds, flip_rate_sweep, par_map, sigma_sweep, threads_from_env, DataConfig,
};
use crate::gradcheck::{gradient_check, LossId, GRADCHECK_TOL};
use crate::likelihood::{check_normalization, tail_mass_closed_form, QuadConfig};
use crate::losses::{
    bayesian_focal, bayesian_smooth_l1, focal, smooth_l1, ClassProb, ErrorNorm, LossParams,
    Reduction,
};
use crate::plot::{LineChart, Series};
use crate::scalar_math::{LogVariance, ThresholdParam};
use crate::trainer::{train, Optimizer, TrainConfig, TrainError, TrainReport};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default mass-residual tolerance for `verify`.
pub const MASS_TOL: f64 = 1e-6;
/// Default relative tolerance between solved and closed-form Laplace rates.
pub const ALPHA_TOL: f64 = 1e-8;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("io: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Comma-separated list of reals, e.g. `0.5,2.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("`{t}` is not a finite number"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OptimizerKind {
    Gd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "adam" => Ok(OptimizerKind::Adam),
            o => Err(format!("unknown optimizer `{o}` (expected gd or adam)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CurveLoss {
    BSmoothL1,
    BFocal,
}

impl FromStr for CurveLoss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bsmooth_l1" => Ok(CurveLoss::BSmoothL1),
            "bfocal" => Ok(CurveLoss::BFocal),
            o => Err(format!(
                "unknown curve loss `{o}` (expected bsmooth_l1 or bfocal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepKind {
    Flip,
    Sigma,
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flip" => Ok(SweepKind::Flip),
            "sigma" => Ok(SweepKind::Sigma),
            o => Err(format!("unknown sweep kind `{o}` (expected flip or sigma)")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hal-loss",
    version,
    about = "Uncertainty-aware loss laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip SVG output.
    #[arg(long)]
    no_plot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate loss curves for several σ (CSV, optional SVG).
    Curves {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        loss: Option<CurveLoss>,
        #[arg(long)]
        sigma: Option<FloatList>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "eps-max")]
        eps_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Check the likelihood normalization on a (σ, β) grid.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "sigma-grid")]
        sigma_grid: Option<FloatList>,
        #[arg(long = "beta-grid")]
        beta_grid: Option<FloatList>,
        /// Maximum allowed |mass − 1|.
        #[arg(long)]
        tol: Option<f64>,
        /// Maximum relative gap between solved and closed-form rates.
        #[arg(long = "alpha-tol")]
        alpha_tol: Option<f64>,
        #[arg(long = "abs-tol")]
        abs_tol: Option<f64>,
        #[arg(long = "rel-tol")]
        rel_tol: Option<f64>,
        #[arg(long = "tail-cut")]
        tail_cut: Option<f64>,
    },
    /// Compare analytic loss gradients with central differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// One of bsmooth_l1, bfocal, bl2, boltzmann, or all.
        #[arg(long)]
        loss: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Train the two-head toy model and write a report.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Flip-rate or regression-noise sweeps over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TrainOpts,
        #[arg(long)]
        kind: Option<SweepKind>,
        #[arg(long = "flip-rates")]
        flip_rates: Option<FloatList>,
        #[arg(long = "sigma-trues")]
        sigma_trues: Option<FloatList>,
        /// Number of seeds, run as 0..seeds.
        #[arg(long)]
        seeds: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct TrainOpts {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long = "s1-init")]
    s1_init: Option<f64>,
    #[arg(long = "s2-init")]
    s2_init: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "class-weight")]
    class_weight: Option<f64>,
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    reduction: Option<Reduction>,
    #[arg(long = "lr-scale-s")]
    lr_scale_s: Option<f64>,
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    #[arg(long = "n-reg")]
    n_reg: Option<usize>,
    #[arg(long = "n-cls")]
    n_cls: Option<usize>,
    #[arg(long = "sigma-true")]
    sigma_true: Option<f64>,
    #[arg(long = "flip-rate")]
    flip_rate: Option<f64>,
    #[arg(long = "data-seed")]
    data_seed: Option<u64>,
}

/// Key/value settings from a config file; tracks which keys were read so
/// unknown keys can be reported.
#[derive(Debug, Default)]
struct Settings {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            values,
            used: RefCell::default(),
        })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get_opt(flag, key)?.unwrap_or(default))
    }

    fn get_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get(None::<bool>, key, false)?)
    }

    fn reject_unknown(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.values.keys().filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("unknown config keys: {unknown:?}")))
        }
    }
}

struct Output {
    dir: PathBuf,
    plot: bool,
}

impl Output {
    fn resolve(common: &Common, settings: &Settings) -> CliResult<Self> {
        let dir: PathBuf = settings.get(common.out.clone(), "out", PathBuf::from("out"))?;
        let plot = !settings.flag(common.no_plot, "no-plot")?;
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, plot })
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }
}

/// Formats a real for CSV: shortest decimal that round-trips.
fn num(v: f64) -> String {
    v.to_string()
}

fn csv_line(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run `hal-loss --help` for usage");
            EXIT_USAGE
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            EXIT_CHECK_FAILED
        }
    }
}

fn dispatch(command: Command) -> CliResult<i32> {
    match command {
        Command::Curves {
            common,
            loss,
            sigma,
            beta,
            gamma,
            eps_max,
            step,
        } => {
            let s = Settings::load(common.config.as_deref())?;
            let args = CurvesArgs {
                loss: s.get(loss, "loss", CurveLoss::BSmoothL1)?,
                sigmas: s.get_opt(sigma, "sigma")?,
                beta: s.get(beta, "beta", 1.0)?,
                gamma: s.get(gamma, "gamma", 2.0)?,
                eps_max: s.get(eps_max, "eps-max", 4.0)?,
                step: s.get(step, "step", 0.01)?,
            };
            let _ = s.get_opt(common.seed, "seed")?;
            let out = Output::resolve(&common, &s)?;
            s.reject_unknown()?;
            curves(&args, &out)
        }
        Command::Verify {
            common,
            sigma_grid,
            beta_grid,
            tol,
            alpha_tol,
            abs_tol,
            rel_tol,
            tail_cut,
        } => {
            let s = Settings::load(common.config.as_deref())?;
            let d = QuadConfig::default();
            let args = VerifyArgs {
                sigmas: s
                    .get(
                        sigma_grid,
                        "sigma-grid",
                        FloatList(vec![0.25, 0.5, 1.0, 2.0, 4.0]),
                    )?
                    .0,
                betas: s
                    .get(beta_grid, "beta-grid", FloatList(vec![0.5, 1.0, 2.0]))?
                    .0,
                tol: s.get(tol, "tol", MASS_TOL)?,
                alpha_tol: s.get(alpha_tol, "alpha-tol", ALPHA_TOL)?,
                quad: QuadConfig {
                    abs_tol: s.get(abs_tol, "abs-tol", d.abs_tol)?,
                    rel_tol: s.get(rel_tol, "rel-tol", d.rel_tol)?,
                    tail_cut: s.get(tail_cut, "tail-cut", d.tail_cut)?,
                    ..d
                },
            };
            let _ = s.get_opt(common.seed, "seed")?;
            let out = Output::resolve(&common, &s)?;
            s.reject_unknown()?;
            verify(&args, &out)
        }
        Command::Gradcheck {
            common,
            loss,
            points,
        } => {
            let s = Settings::load(common.config.as_deref())?;
            let which = s.get(loss, "loss", "all".to_string())?;
            let losses = if which == "all" {
                LossId::ALL.to_vec()
            } else {
                vec![which.parse::<LossId>()?]
            };
            let points = s.get(points, "points", 100)?;
            let seed = s.get(common.seed, "seed", 0)?;
            let out = Output::resolve(&common, &s)?;
            s.reject_unknown()?;
            gradcheck(&losses, points, seed, &out)
        }
        Command::Train { common, opts } => {
            let s = Settings::load(common.config.as_deref())?;
            let (cfg, data) = resolve_train(&opts, &common, &s, 2000)?;
            let out = Output::resolve(&common, &s)?;
            s.reject_unknown()?;
            train_cmd(&cfg, &data, &out)
        }
        Command::Sweep {
            common,
            opts,
            kind,
            flip_rates,
            sigma_trues,
            seeds,
        } => {
            let s = Settings::load(common.config.as_deref())?;
            let (cfg, data) = resolve_train(&opts, &common, &s, 1000)?;
            let kind = s.get(kind, "kind", SweepKind::Flip)?;
            let flip_rates = s
                .get(flip_rates, "flip-rates", FloatList(vec![0.0, 0.1, 0.3]))?
                .0;
            let sigma_trues = s
                .get(
                    sigma_trues,
                    "sigma-trues",
                    FloatList(vec![0.1, 0.2, 0.3, 0.5]),
                )?
                .0;
            let n_seeds = s.get(seeds, "seeds", 5)?;
            let out = Output::resolve(&common, &s)?;
            s.reject_unknown()?;
            let seeds: Vec<u64> = (0..n_seeds).collect();
            match kind {
                SweepKind::Flip => sweep_flip(&cfg, &data, &flip_rates, &seeds, &out),
                SweepKind::Sigma => sweep_sigma(&cfg, &data, &sigma_trues, &seeds, &out),
            }
        }
    }
}

struct CurvesArgs {
    loss: CurveLoss,
    sigmas: Option<FloatList>,
    beta: f64,
    gamma: f64,
    eps_max: f64,
    step: f64,
}

fn curves(args: &CurvesArgs, out: &Output) -> CliResult<i32> {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(CliError::Usage("step must be > 0".into()));
    }
    let (default_sigmas, name) = match args.loss {
        CurveLoss::BSmoothL1 => (vec![0.5, 2.0], "bsmooth_l1"),
        CurveLoss::BFocal => (vec![0.7, 1.0, 2.0], "bfocal"),
    };
    let sigmas = args.sigmas.clone().map_or(default_sigmas, |l| l.0);
    let log_vars = sigmas
        .iter()
        .map(|&s| LogVariance::from_sigma(s))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let params =
        LossParams::new(args.beta, args.gamma, 0.0).map_err(|e| CliError::Usage(e.to_string()))?;

    let (x_name, base_name, xs): (&str, &str, Vec<f64>) = match args.loss {
        CurveLoss::BSmoothL1 => {
            if !(args.eps_max >= 0.0 && args.eps_max.is_finite()) {
                return Err(CliError::Usage("eps-max must be >= 0".into()));
            }
            let n = (args.eps_max / args.step).round() as usize;
            (
                "eps",
                "smooth_l1",
                (0..=n).map(|k| k as f64 * args.step).collect(),
            )
        }
        CurveLoss::BFocal => {
            let n = (1.0 / args.step).round() as usize;
            if n < 2 {
                return Err(CliError::Usage("step must be below 0.5 for bfocal".into()));
            }
            (
                "p_t",
                "focal",
                (1..n).map(|k| k as f64 / n as f64).collect(),
            )
        }
    };

    let mut header = vec![x_name.to_string(), base_name.to_string()];
    header.extend(sigmas.iter().map(|s| format!("{name}_sigma_{}", num(*s))));
    let mut csv = csv_line(&header);
    let mut series: Vec<Series> = header[1..]
        .iter()
        .map(|h| Series {
            name: h.clone(),
            points: Vec::with_capacity(xs.len()),
        })
        .collect();
    for &x in &xs {
        let mut row = Vec::with_capacity(sigmas.len() + 1);
        match args.loss {
            CurveLoss::BSmoothL1 => {
                let e = ErrorNorm::new(x)?;
                row.push(smooth_l1(e, params.beta));
                for &s in &log_vars {
                    row.push(bayesian_smooth_l1(e, &params.with_s(s)).value);
                }
            }
            CurveLoss::BFocal => {
                let p = ClassProb::new(x)?;
                row.push(focal(p, params.gamma));
                for &s in &log_vars {
                    row.push(bayesian_focal(p, &params.with_s(s)).value);
                }
            }
        }
        for (series, v) in series.iter_mut().zip(&row) {
            series.points.push((x, *v));
        }
        let mut cells = vec![num(x)];
        cells.extend(row.iter().map(|v| num(*v)));
        csv.push_str(&csv_line(&cells));
    }
    let path = out.write(&format!("curves_{name}.csv"), &csv)?;
    println!("wrote {}", path.display());
    if out.plot {
        let chart = LineChart {
            title: format!("{name} for several sigma"),
            x_label: x_name.into(),
            y_label: "loss".into(),
            series,
            y_range: None,
        };
        let path = out.write(&format!("curves_{name}.svg"), &chart.render())?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

struct VerifyArgs {
    sigmas: Vec<f64>,
    betas: Vec<f64>,
    tol: f64,
    alpha_tol: f64,
    quad: QuadConfig,
}

fn verify(args: &VerifyArgs, out: &Output) -> CliResult<i32> {
    args.quad.validate()?;
    let grid: Vec<(f64, f64)> = args
        .sigmas
        .iter()
        .flat_map(|&s| args.betas.iter().map(move |&b| (s, b)))
        .collect();
    let checks = par_map(&grid, threads_from_env()?, |&(s, b)| {
        check_normalization(s, b, &args.quad)
    })?
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let mut csv = csv_line(
        &[
            "sigma",
            "beta",
            "tau",
            "alpha_closed_form",
            "alpha_solved",
            "alpha_rel_diff",
            "core_mass_closed_form",
            "core_mass_quadrature",
            "tail_mass_quadrature",
            "mass_closed_form",
            "mass_quadrature",
            "mass_residual",
            "pass",
        ]
        .map(String::from),
    );
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:>8} {:>6} {:>14} {:>14} {:>11} {:>11}  status",
        "sigma", "beta", "alpha", "alpha_solved", "alpha_rel", "|mass-1|"
    );
    let mut all_pass = true;
    for c in &checks {
        let pass = c.mass.residual() < args.tol && c.alpha_rel_diff < args.alpha_tol;
        all_pass &= pass;
        let tau = tail_mass_closed_form(c.sigma, ThresholdParam::new(c.beta)?)?;
        csv.push_str(&csv_line(&[
            num(c.sigma),
            num(c.beta),
            num(tau),
            num(c.alpha_closed_form),
            num(c.alpha_solved),
            num(c.alpha_rel_diff),
            num(c.mass.core_closed_form),
            num(c.mass.core_quadrature),
            num(c.mass.tail_quadrature),
            num(c.mass.closed_form),
            num(c.mass.quadrature),
            num(c.mass.residual()),
            pass.to_string(),
        ]));
        let _ = writeln!(
            table,
            "{:>8} {:>6} {:>14.9} {:>14.9} {:>11.3e} {:>11.3e}  {}",
            c.sigma,
            c.beta,
            c.alpha_closed_form,
            c.alpha_solved,
            c.alpha_rel_diff,
            c.mass.residual(),
            if pass { "ok" } else { "FAIL" }
        );
    }
    print!("{table}");
    let path = out.write("verify.csv", &csv)?;
    println!("wrote {}", path.display());
    if all_pass {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "normalization check failed (tol {} on mass, {} on alpha)",
            args.tol, args.alpha_tol
        );
        Ok(EXIT_CHECK_FAILED)
    }
}

fn gradcheck(losses: &[LossId], points: usize, seed: u64, out: &Output) -> CliResult<i32> {
    let mut detail = csv_line(
        &[
            "loss",
            "point",
            "partial",
            "analytic",
            "numeric",
            "rel_error",
        ]
        .map(String::from),
    );
    let mut summary = csv_line(&["loss", "points", "max_rel_error", "pass"].map(String::from));
    let mut ok = true;
    for &loss in losses {
        let r = gradient_check(loss, points, seed)?;
        for s in &r.samples {
            detail.push_str(&csv_line(&[
                loss.name().into(),
                format!("\"{}\"", s.point),
                s.partial.clone(),
                num(s.analytic),
                num(s.numeric),
                num(s.rel_error),
            ]));
        }
        summary.push_str(&csv_line(&[
            loss.name().into(),
            points.to_string(),
            num(r.max_rel_error),
            r.passed().to_string(),
        ]));
        println!(
            "{:<12} points={points:<5} max_rel_error={:.3e}  {}",
            loss.name(),
            r.max_rel_error,
            if r.passed() { "ok" } else { "FAIL" }
        );
        ok &= r.passed();
    }
    out.write("gradcheck.csv", &detail)?;
    let path = out.write("gradcheck_summary.csv", &summary)?;
    println!("wrote {}", path.display());
    if ok {
        Ok(EXIT_OK)
    } else {
        eprintln!("gradient check failed (tolerance {GRADCHECK_TOL})");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn resolve_train(
    o: &TrainOpts,
    common: &Common,
    s: &Settings,
    default_iterations: usize,
) -> CliResult<(TrainConfig, DataConfig)> {
    let d = TrainConfig::default();
    let optimizer = match s.get(o.optimizer, "optimizer", OptimizerKind::Gd)? {
        OptimizerKind::Gd => Optimizer::Gd,
        OptimizerKind::Adam => Optimizer::adam(),
    };
    let cfg = TrainConfig {
        learning_rate: s.get(o.lr, "lr", d.learning_rate)?,
        iterations: s.get(o.iterations, "iterations", default_iterations)?,
        s1_init: s.get(o.s1_init, "s1-init", d.s1_init)?,
        s2_init: s.get(o.s2_init, "s2-init", d.s2_init)?,
        beta: s.get(o.beta, "beta", d.beta)?,
        gamma: s.get(o.gamma, "gamma", d.gamma)?,
        class_weight: s.get(o.class_weight, "class-weight", d.class_weight)?,
        seed: s.get(common.seed, "seed", d.seed)?,
        reduction: s.get(o.reduction, "reduction", d.reduction)?,
        optimizer,
        log_variance_lr_scale: s.get(o.lr_scale_s, "lr-scale-s", d.log_variance_lr_scale)?,
        record_every: s.get(o.record_every, "record-every", d.record_every)?,
        ..d
    };
    cfg.validate()?;
    let dd = DataConfig::default();
    let data = DataConfig {
        n_reg: s.get(o.n_reg, "n-reg", dd.n_reg)?,
        n_cls: s.get(o.n_cls, "n-cls", dd.n_cls)?,
        sigma_true: s.get(o.sigma_true, "sigma-true", dd.sigma_true)?,
        flip_rate: s.get(o.flip_rate, "flip-rate", dd.flip_rate)?,
        data_seed: s.get(o.data_seed, "data-seed", dd.data_seed)?,
        ..dd
    };
    Ok((cfg, data))
}

#[derive(Serialize)]
struct TrainRun<'a> {
    config: &'a TrainConfig,
    data: &'a DataConfig,
    diverged_at: Option<usize>,
    report: &'a TrainReport,
}

fn train_cmd(cfg: &TrainConfig, data: &DataConfig, out: &Output) -> CliResult<i32> {
    let (reg, cls) = data.generate()?;
    let (report, diverged_at) = match train(cfg, &reg, &cls) {
        Ok(r) => (r, None),
        Err(TrainError::Diverged { iteration, report }) => (*report, Some(iteration)),
        Err(TrainError::Invalid(e)) => return Err(e.into()),
    };
    let run = TrainRun {
        config: cfg,
        data,
        diverged_at,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&run)
        .map_err(|e| CliError::Failed(format!("serializing report: {e}")))?;
    json.push('\n');
    let path = out.write("train_report.json", &json)?;
    println!("wrote {}", path.display());

    let mut csv = csv_line(&["iteration", "total", "reg", "cls"].map(String::from));
    for c in &report.loss_trajectory {
        csv.push_str(&csv_line(&[
            c.iteration.to_string(),
            num(c.total),
            num(c.reg),
            num(c.cls),
        ]));
    }
    out.write("trajectory.csv", &csv)?;
    if out.plot {
        let pick = |f: fn(&crate::trainer::Checkpoint) -> f64, name: &str| Series {
            name: name.into(),
            points: report
                .loss_trajectory
                .iter()
                .map(|c| (c.iteration as f64, f(c)))
                .collect(),
        };
        let chart = LineChart {
            title: "training loss".into(),
            x_label: "iteration".into(),
            y_label: "loss".into(),
            series: vec![
                pick(|c| c.total, "total"),
                pick(|c| c.reg, "reg"),
                pick(|c| c.cls, "cls"),
            ],
            y_range: None,
        };
        out.write("trajectory.svg", &chart.render())?;
    }
    println!(
        "sigma1_hat={} sigma2_hat={} residual_rms={} clean_accuracy={}",
        report.sigma1_hat, report.sigma2_hat, report.final_residual_rms, report.clean_accuracy
    );
    eprintln!("wall time {:.3}s", report.wall_time);
    match diverged_at {
        None => Ok(EXIT_OK),
        Some(it) => {
            eprintln!("training diverged at iteration {it}");
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

fn sweep_flip(
    cfg: &TrainConfig,
    data: &DataConfig,
    flip_rates: &[f64],
    seeds: &[u64],
    out: &Output,
) -> CliResult<i32> {
    let rows = flip_rate_sweep(cfg, data, flip_rates, seeds, threads_from_env()?)?;
    let mut csv = csv_line(
        &[
            "seed",
            "flip_rate",
            "sigma2_hat",
            "bfl_clean_accuracy",
            "focal_clean_accuracy",
        ]
        .map(String::from),
    );
    for r in &rows {
        csv.push_str(&csv_line(&[
            r.seed.to_string(),
            num(r.flip_rate),
            num(r.sigma2_hat),
            num(r.bfl_clean_accuracy),
            num(r.focal_clean_accuracy),
        ]));
        println!(
            "seed={} flip_rate={} sigma2_hat={:.6} acc_bfl={:.4} acc_focal={:.4}",
            r.seed, r.flip_rate, r.sigma2_hat, r.bfl_clean_accuracy, r.focal_clean_accuracy
        );
    }
    let path = out.write("sweep_flip.csv", &csv)?;
    println!("wrote {}", path.display());
    if flip_ordering_holds(&rows) {
        println!("sigma2_hat strictly increases with flip rate for every seed");
        Ok(EXIT_OK)
    } else {
        eprintln!("sigma2_hat is not strictly increasing in the flip rate for every seed");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn sweep_sigma(
    cfg: &TrainConfig,
    data: &DataConfig,
    sigma_trues: &[f64],
    seeds: &[u64],
    out: &Output,
) -> CliResult<i32> {
    let rows = sigma_sweep(cfg, data, sigma_trues, seeds, threads_from_env()?)?;
    let mut csv =
        csv_line(&["seed", "sigma_true", "sigma1_hat", "final_residual_rms"].map(String::from));
    for r in &rows {
        csv.push_str(&csv_line(&[
            r.seed.to_string(),
            num(r.sigma_true),
            num(r.sigma1_hat),
            num(r.final_residual_rms),
        ]));
        println!(
            "seed={} sigma_true={} sigma1_hat={:.6} residual_rms={:.6}",
            r.seed, r.sigma_true, r.sigma1_hat, r.final_residual_rms
        );
    }
    let path = out.write("sweep_sigma.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}
