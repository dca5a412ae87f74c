//! Command-line front end: configuration merging, seeding and the
//! subcommands that tie simulation, estimation and the presets together.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, PreclinicalIntensity};
use crate::error::{Error, Result};
use crate::estimation::{estimate, ridge_scan, write_ridge_csv, EstimateOptions, EstimationResult, ModelConstants, RidgeMode};
use crate::experiments::{self, PresetOptions, ReplicationConfig, Scale};
use crate::model::{cohort_probabilities, write_model_dump, ModelParams};
use crate::natural_history::{simulate_population, write_case_dump};
use crate::screening::{screen_population, CountsTable, ScreeningDesign, Tabulation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

pub const DEFAULT_SEED: u64 = 1;
pub const SEED_ENV: &str = "SCREENLAB_SEED";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::NonConvergence(_) => EXIT_NON_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

/// Every configurable key. Config files use these names in camelCase;
/// command-line flags override them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub scale: Option<Scale>,
    pub generator: Option<Family>,
    /// Full generating model; overrides `generator`.
    pub truth: Option<ModelParams>,
    pub t_min: Option<u32>,
    pub t_max: Option<u32>,
    pub screens: Option<usize>,
    pub interval: Option<f64>,
    pub cohort_size: Option<usize>,
    pub tabulation: Option<Tabulation>,
    pub case_dump: Option<bool>,
    pub counts: Option<PathBuf>,
    pub family: Option<Family>,
    pub fix_b1: Option<bool>,
    pub restarts: Option<usize>,
    pub risk: Option<f64>,
    pub tbar: Option<f64>,
    pub fit: Option<PathBuf>,
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
    pub d_alpha: Option<f64>,
    pub d_beta: Option<f64>,
    pub ridge_points: Option<usize>,
    pub ridge_mode: Option<RidgeMode>,
    pub t0: Option<u32>,
    pub participants: Option<usize>,
    pub fit_sensitivity: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),* $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, seed, out, scale, generator, truth, t_min, t_max, screens, interval, cohort_size, tabulation,
            case_dump, counts, family, fix_b1, restarts, risk, tbar, fit, alpha0, beta0, d_alpha, d_beta,
            ridge_points, ridge_mode, t0, participants, fit_sensitivity,
        )
    }

    /// Seed from the config, else `SCREENLAB_SEED`, else the default.
    pub fn resolve_seed(&mut self) -> Result<u64> {
        if self.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(vec![format!("{SEED_ENV}='{v}' is not an unsigned integer")]))?;
                self.seed = Some(seed);
            }
        }
        Ok(*self.seed.get_or_insert(DEFAULT_SEED))
    }

    fn scale(&self) -> Scale {
        self.scale.unwrap_or_default()
    }

    fn constants(&self) -> ModelConstants {
        let d = ModelConstants::default();
        ModelConstants {
            risk: self.risk.unwrap_or(d.risk),
            tbar: self.tbar.unwrap_or(d.tbar),
        }
    }

    fn truth(&self) -> ModelParams {
        let mut p = self
            .truth
            .unwrap_or_else(|| experiments::truth_params(self.generator.unwrap_or(Family::Exponential)));
        if let (Some(r), PreclinicalIntensity::LogNormal { risk, .. }) = (self.risk, &mut p.intensity) {
            *risk = r;
        }
        if let Some(t) = self.tbar {
            p.sensitivity.tbar = t;
        }
        p
    }

    fn design(&self) -> ScreeningDesign {
        ScreeningDesign {
            t_min: self.t_min.unwrap_or(experiments::T_MIN),
            t_max: self.t_max.unwrap_or(experiments::T_MAX),
            screens: self.screens.unwrap_or(10),
            interval: self.interval.unwrap_or(1.0),
            cohort_size: self.cohort_size.unwrap_or(self.scale().cohort_size()),
            attendance: 1.0,
        }
    }

    fn restarts(&self) -> usize {
        self.restarts.unwrap_or(20)
    }

    fn out_dir(&self, seed: u64) -> PathBuf {
        experiments::seed_dir(self.out.as_deref().unwrap_or(Path::new("screenlab-out")), seed)
    }

    /// All problems at once, so a bad config is reported in one go.
    fn validate(&self, needs_design: bool) -> Result<()> {
        let mut problems = Vec::new();
        if needs_design {
            match self.design().validate() {
                Ok(()) => {}
                Err(Error::Config(p)) => problems.extend(p),
                Err(e) => problems.push(e.to_string()),
            }
            if let Err(e) = self.truth().validate() {
                problems.push(e.to_string());
            }
        }
        if self.restarts == Some(0) {
            problems.push("restarts must be at least 1".into());
        }
        if let Some(r) = self.risk {
            if !(0.0..=1.0).contains(&r) {
                problems.push(format!("risk must lie in [0, 1], got {r}"));
            }
        }
        if let Some(phi) = self.fit_sensitivity {
            if !(phi > 0.0 && phi <= 1.0) {
                problems.push(format!("fitSensitivity must lie in (0, 1], got {phi}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "screenlab", version, about = "Simulate screening programs and estimate sojourn-time models")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a screening program and write its counts table.
    Simulate {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        design: DesignFlags,
        /// Also write the case-level dump.
        #[arg(long)]
        case_dump: bool,
    },
    /// Fit a sojourn family to a counts table.
    Estimate {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        design: DesignFlags,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Four-scenario grid for one generating family.
    Scenario {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        generator: Option<Family>,
        #[arg(long)]
        cohort_size: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Every family fitted to data from every family.
    Misspec {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        cohort_size: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Single-cohort interval-cancer study with sojourn-only fitting.
    Replicate {
        #[command(flatten)]
        common: CommonFlags,
        /// Fitted family (default exponential).
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        t0: Option<u32>,
        #[arg(long)]
        participants: Option<usize>,
        /// Sensitivity assumed by the fit.
        #[arg(long)]
        fit_sensitivity: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Negative log-likelihood along a gamma (alpha, beta) path.
    Ridge {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        design: DesignFlags,
        #[command(flatten)]
        fit: FitFlags,
        /// Fitted gamma result JSON; fitted here when absent.
        #[arg(long)]
        fit_json: Option<PathBuf>,
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long)]
        d_alpha: Option<f64>,
        #[arg(long)]
        d_beta: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        mode: Option<RidgeMode>,
    },
    /// Write D and I for every (t0, k) of a design.
    ModelDump {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        design: DesignFlags,
    },
}

#[derive(Debug, Args)]
pub struct CommonFlags {
    /// JSON config; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output root; files go to <out>/seed-<seed>/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (fallback: SCREENLAB_SEED, then 1).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scale: Option<Scale>,
}

#[derive(Debug, Args)]
pub struct DesignFlags {
    /// Generating sojourn family.
    #[arg(long)]
    pub generator: Option<Family>,
    #[arg(long)]
    pub t_min: Option<u32>,
    #[arg(long)]
    pub t_max: Option<u32>,
    /// Number of screens K.
    #[arg(long = "screens", short = 'k')]
    pub screens: Option<usize>,
    /// Years between screens.
    #[arg(long)]
    pub interval: Option<f64>,
    /// Entrants per age.
    #[arg(long, short = 'n')]
    pub cohort_size: Option<usize>,
    #[arg(long)]
    pub tabulation: Option<Tabulation>,
    /// Lifetime risk.
    #[arg(long)]
    pub risk: Option<f64>,
    /// Counts CSV to read.
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    /// Fitted sojourn family.
    #[arg(long)]
    pub family: Option<Family>,
    /// Force b1 = 0 (constant sensitivity).
    #[arg(long)]
    pub fix_b1: bool,
    #[arg(long)]
    pub restarts: Option<usize>,
}

impl std::str::FromStr for Tabulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at-risk" => Ok(Tabulation::AtRisk),
            "fixed" => Ok(Tabulation::Fixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown tabulation '{other}' (expected at-risk or fixed)"
            ))),
        }
    }
}

impl std::str::FromStr for RidgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "held" => Ok(RidgeMode::Held),
            "reoptimize" => Ok(RidgeMode::Reoptimize),
            other => Err(Error::InvalidParameter(format!(
                "unknown ridge mode '{other}' (expected held or reoptimize)"
            ))),
        }
    }
}

impl CommonFlags {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            out: self.out.clone(),
            scale: self.scale,
            ..RunConfig::default()
        }
    }
}

impl DesignFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.generator, self.generator);
        set(&mut c.t_min, self.t_min);
        set(&mut c.t_max, self.t_max);
        set(&mut c.screens, self.screens);
        set(&mut c.interval, self.interval);
        set(&mut c.cohort_size, self.cohort_size);
        set(&mut c.tabulation, self.tabulation);
        set(&mut c.risk, self.risk);
        set(&mut c.counts, self.counts.clone());
    }
}

impl FitFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.family, self.family);
        set(&mut c.fix_b1, self.fix_b1.then_some(true));
        set(&mut c.restarts, self.restarts);
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn merged(common: &CommonFlags, flags: RunConfig) -> Result<RunConfig> {
    let base = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Ok(base.overlay(common.to_config()).overlay(flags))
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate { common, design, case_dump } => {
            let mut flags = RunConfig::default();
            design.apply(&mut flags);
            set(&mut flags.case_dump, case_dump.then_some(true));
            cmd_simulate(merged(&common, flags)?)
        }
        Command::Estimate { common, design, fit } => {
            let mut flags = RunConfig::default();
            design.apply(&mut flags);
            fit.apply(&mut flags);
            cmd_estimate(merged(&common, flags)?)
        }
        Command::Scenario { common, generator, cohort_size, restarts } => {
            let flags = RunConfig {
                generator,
                cohort_size,
                restarts,
                ..RunConfig::default()
            };
            cmd_scenario(merged(&common, flags)?)
        }
        Command::Misspec { common, cohort_size, restarts } => {
            let flags = RunConfig {
                cohort_size,
                restarts,
                ..RunConfig::default()
            };
            cmd_misspec(merged(&common, flags)?)
        }
        Command::Replicate { common, family, t0, participants, fit_sensitivity, restarts } => {
            let flags = RunConfig {
                family,
                t0,
                participants,
                fit_sensitivity,
                restarts,
                ..RunConfig::default()
            };
            cmd_replicate(merged(&common, flags)?)
        }
        Command::Ridge { common, design, fit, fit_json, alpha0, beta0, d_alpha, d_beta, points, mode } => {
            let mut flags = RunConfig {
                fit: fit_json,
                alpha0,
                beta0,
                d_alpha,
                d_beta,
                ridge_points: points,
                ridge_mode: mode,
                ..RunConfig::default()
            };
            design.apply(&mut flags);
            fit.apply(&mut flags);
            cmd_ridge(merged(&common, flags)?)
        }
        Command::ModelDump { common, design } => {
            let mut flags = RunConfig::default();
            design.apply(&mut flags);
            cmd_model_dump(merged(&common, flags)?)
        }
    }
}

/// Creates the seed directory and echoes the effective config into it.
fn prepare_output(cfg: &RunConfig, seed: u64) -> Result<PathBuf> {
    let dir = cfg.out_dir(seed);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut effective = cfg.clone();
    let constants = cfg.constants();
    effective.scale = Some(cfg.scale());
    effective.restarts = Some(cfg.restarts());
    effective.risk = Some(constants.risk);
    effective.tbar = Some(constants.tbar);
    let mut value = serde_json::to_value(&effective)?;
    if let serde_json::Value::Object(map) = &mut value {
        map.retain(|_, v| !v.is_null());
    }
    experiments::write_json(&dir.join("config.json"), &value)?;
    Ok(dir)
}

pub fn cmd_simulate(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(true)?;
    let design = cfg.design();
    let truth = cfg.truth();
    let dir = prepare_output(&cfg, seed)?;
    let histories = simulate_population(
        design.ages(),
        design.cohort_size,
        design.program_years(),
        &truth.intensity,
        &truth.sojourn,
        seed,
    )?;
    let outcomes = screen_population(&histories, &design, &truth.sensitivity, seed, experiments::program_tag(&design));
    let counts = CountsTable::from_outcomes(&outcomes, &design, cfg.tabulation.unwrap_or_default())?;
    counts.write_csv(&dir.join("counts.csv"))?;
    if cfg.case_dump == Some(true) {
        write_case_dump(&dir.join("cases.csv"), &histories)?;
    }
    let cases: usize = histories.iter().map(|h| h.cases.len()).sum();
    println!(
        "cohorts={} cases={} screen_detected={} interval={} out={}",
        histories.len(),
        cases,
        counts.total_screen_detected(),
        counts.total_interval(),
        dir.display()
    );
    Ok(EXIT_OK)
}

fn read_counts(cfg: &RunConfig) -> Result<CountsTable> {
    let path = cfg
        .counts
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["a counts CSV is required (--counts)".into()]))?;
    CountsTable::read_csv(path)
}

/// Design matching a counts table: ages and `K` from the table unless
/// configured.
fn design_for(cfg: &RunConfig, counts: &CountsTable) -> Result<ScreeningDesign> {
    let ages = counts.by_cohort();
    let mut d = cfg.design();
    d.t_min = cfg.t_min.or(ages.keys().next().copied()).unwrap_or(d.t_min);
    d.t_max = cfg.t_max.or(ages.keys().last().copied()).unwrap_or(d.t_max);
    d.screens = cfg.screens.unwrap_or(counts.max_screen().max(1));
    d.validate()?;
    Ok(d)
}

fn fit_summary(r: &EstimationResult) -> String {
    let mst = r.mst.map_or("undefined".into(), |m| format!("{m:.4}"));
    let sd = r.standard_error("mst").map_or("unavailable".into(), |s| format!("{s:.4}"));
    format!(
        "family={} mst={} sd={} negloglik={:.4} converged={} positive_definite={} near_zero={}",
        r.family, mst, sd, r.neg_log_lik, r.converged, r.positive_definite, r.near_zero_eigenvalues
    )
}

pub fn cmd_estimate(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(false)?;
    let counts = read_counts(&cfg)?;
    let design = design_for(&cfg, &counts)?;
    let options = EstimateOptions {
        restarts: cfg.restarts(),
        fix_b1: cfg.fix_b1.unwrap_or(false),
        seed,
        constants: cfg.constants(),
        information: true,
    };
    let dir = prepare_output(&cfg, seed)?;
    let result = estimate(&counts, &design, cfg.family.unwrap_or(Family::Exponential), &options)?;
    result.write_json(&dir.join("result.json"))?;
    println!("{}", fit_summary(&result));
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: no restart converged ({:?})", result.termination);
        Ok(EXIT_NON_CONVERGENCE)
    }
}

fn preset_options(cfg: &RunConfig, seed: u64) -> PresetOptions {
    PresetOptions {
        scale: cfg.scale(),
        seed,
        restarts: cfg.restarts(),
        cohort_size: cfg.cohort_size,
    }
}

fn any_unconverged(rows: &[experiments::ReportRow]) -> i32 {
    if rows.iter().all(|r| r.fit.converged) {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    }
}

pub fn cmd_scenario(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(false)?;
    let generator = cfg.generator.unwrap_or(Family::Exponential);
    let dir = prepare_output(&cfg, seed)?;
    let report = experiments::run_scenarios(generator, &preset_options(&cfg, seed))?;
    report.write(&dir)?;
    for row in &report.rows {
        println!("{} {}", row.label, fit_summary(&row.fit));
    }
    for d in &report.diagnostics {
        println!("diagnostic: {d}");
    }
    Ok(any_unconverged(&report.rows))
}

pub fn cmd_misspec(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(false)?;
    let dir = prepare_output(&cfg, seed)?;
    let report = experiments::run_misspecification(&preset_options(&cfg, seed))?;
    report.write(&dir)?;
    for row in &report.rows {
        println!("{} {}", row.label, fit_summary(&row.fit));
    }
    Ok(any_unconverged(&report.rows))
}

pub fn cmd_replicate(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(false)?;
    let mut rc = ReplicationConfig::new(cfg.scale(), seed);
    rc.t0 = cfg.t0.unwrap_or(rc.t0);
    rc.participants = cfg.participants.unwrap_or(rc.participants);
    rc.fit_family = cfg.family.unwrap_or(rc.fit_family);
    rc.fit_sensitivity = cfg.fit_sensitivity.unwrap_or(rc.fit_sensitivity);
    rc.restarts = cfg.restarts.unwrap_or(rc.restarts);
    let dir = prepare_output(&cfg, seed)?;
    let report = experiments::replicate_interval_cancer_study(&rc)?;
    report.write(&dir)?;
    let mst = report.mst_estimate.map_or("undefined".into(), |m| format!("{m:.4}"));
    println!(
        "family={} mst={} negloglik={:.4} converged={}",
        report.fit.family, mst, report.fit.neg_log_lik, report.fit.converged
    );
    Ok(if report.fit.converged { EXIT_OK } else { EXIT_NON_CONVERGENCE })
}

pub fn cmd_ridge(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(cfg.counts.is_none())?;
    let dir = prepare_output(&cfg, seed)?;
    let (counts, design) = match &cfg.counts {
        Some(_) => {
            let counts = read_counts(&cfg)?;
            let design = design_for(&cfg, &counts)?;
            (counts, design)
        }
        None => {
            if cfg.truth.is_none() && cfg.generator.is_none() {
                cfg.generator = Some(Family::Gamma);
            }
            let design = cfg.design();
            let mut sim = experiments::simulate_programs(&cfg.truth(), &[design], seed)?;
            let (design, counts) = sim.programs.remove(0);
            counts.write_csv(&dir.join("counts.csv"))?;
            (counts, design)
        }
    };
    let constants = cfg.constants();
    let theta_hat = match &cfg.fit {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let fit: EstimationResult =
                serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
            fit.theta_hat
        }
        None => {
            let options = EstimateOptions {
                restarts: cfg.restarts(),
                fix_b1: cfg.fix_b1.unwrap_or(false),
                seed,
                constants,
                information: false,
            };
            let fit = estimate(&counts, &design, Family::Gamma, &options)?;
            fit.write_json(&dir.join("fit.json"))?;
            if !fit.converged {
                eprintln!("error: gamma fit did not converge");
                return Ok(EXIT_NON_CONVERGENCE);
            }
            fit.theta_hat
        }
    };
    let points = ridge_scan(
        &counts,
        &design,
        &theta_hat,
        &constants,
        (cfg.alpha0.unwrap_or(1.0), cfg.beta0.unwrap_or(0.4)),
        (cfg.d_alpha.unwrap_or(1.0), cfg.d_beta.unwrap_or(0.4)),
        cfg.ridge_points.unwrap_or(4000),
        cfg.ridge_mode.unwrap_or_default(),
    )?;
    write_ridge_csv(&dir.join("ridge.csv"), &points)?;
    println!("points={} out={}", points.len(), dir.display());
    Ok(EXIT_OK)
}

pub fn cmd_model_dump(mut cfg: RunConfig) -> Result<i32> {
    let seed = cfg.resolve_seed()?;
    cfg.validate(true)?;
    let design = cfg.design();
    let truth = cfg.truth();
    let dir = prepare_output(&cfg, seed)?;
    let ages: Vec<u32> = design.ages().collect();
    let probs = cohort_probabilities(&truth, &design, &ages);
    write_model_dump(&dir.join("model.csv"), &probs)?;
    println!("rows={} out={}", probs.len() * design.screens, dir.display());
    Ok(EXIT_OK)
}
