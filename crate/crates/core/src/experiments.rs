//! Preset pipelines: the four-scenario grid, the sojourn-family
//! misspecification matrix and the interval-cancer replication.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, PreclinicalIntensity, SensitivityModel, SojournDistribution};
use crate::error::{Error, Result};
use crate::estimation::{estimate, estimate_sojourn_only, EstimateOptions, EstimationResult, ModelConstants, SojournFit};
use crate::model::ModelParams;
use crate::natural_history::{simulate_population, CohortHistory};
use crate::screening::{screen_population, CountsTable, ScreeningDesign, Tabulation};

pub const T_MIN: u32 = 40;
pub const T_MAX: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// 2,000 entrants per age (20,000 for the replication).
    #[default]
    Desk,
    /// 10,000 entrants per age (200,000 for the replication).
    Paper,
}

impl Scale {
    pub fn cohort_size(self) -> usize {
        match self {
            Scale::Desk => 2_000,
            Scale::Paper => 10_000,
        }
    }

    pub fn replication_size(self) -> usize {
        match self {
            Scale::Desk => 20_000,
            Scale::Paper => 200_000,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::InvalidParameter(format!(
                "unknown scale '{other}' (expected desk or paper)"
            ))),
        }
    }
}

/// Generating sojourn distribution of each family.
pub fn truth_sojourn(family: Family) -> SojournDistribution {
    match family {
        Family::Exponential => SojournDistribution::Exponential { lambda: 1.0 / 2.5 },
        Family::Gamma => SojournDistribution::Gamma { alpha: 6.25, beta: 2.5 },
        Family::LogLogistic => SojournDistribution::LogLogistic { kappa: 2.2, rho: 4.7 },
    }
}

/// Generating model: b0 = 1.4, b1 = 0.05 around age 52, log-normal
/// intensity (3.971, 0.268) with lifetime risk 0.15.
pub fn truth_params(family: Family) -> ModelParams {
    ModelParams {
        sensitivity: SensitivityModel {
            b0: 1.4,
            b1: 0.05,
            tbar: 52.0,
        },
        intensity: PreclinicalIntensity::LogNormal {
            mu: 3.971,
            s: 0.268,
            risk: 0.15,
        },
        sojourn: truth_sojourn(family),
    }
}

/// Stream tag of a screening program, so the same program always sees the
/// same screening draws whatever else is simulated alongside it.
pub fn program_tag(design: &ScreeningDesign) -> u64 {
    design.screens as u64 * 1000 + (design.interval * 10.0).round() as u64
}

/// Disease progression shared by several programs, and their counts.
#[derive(Debug, Clone)]
pub struct SimulatedPrograms {
    pub histories: Vec<CohortHistory>,
    pub programs: Vec<(ScreeningDesign, CountsTable)>,
}

/// Simulates one progression realization long enough for every design and
/// screens it once per design. All designs must share the age range and
/// cohort size.
pub fn simulate_programs(truth: &ModelParams, designs: &[ScreeningDesign], seed: u64) -> Result<SimulatedPrograms> {
    let first = designs
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one screening design is required".into()))?;
    if designs
        .iter()
        .any(|d| d.t_min != first.t_min || d.t_max != first.t_max || d.cohort_size != first.cohort_size)
    {
        return Err(Error::InvalidParameter(
            "programs on shared progression data need equal age ranges and cohort sizes".into(),
        ));
    }
    truth.validate()?;
    let years = designs.iter().map(|d| d.program_years()).fold(0.0, f64::max);
    let histories = simulate_population(first.ages(), first.cohort_size, years, &truth.intensity, &truth.sojourn, seed)?;
    let programs = designs
        .iter()
        .map(|d| {
            let outcomes = screen_population(&histories, d, &truth.sensitivity, seed, program_tag(d));
            CountsTable::from_outcomes(&outcomes, d, Tabulation::AtRisk).map(|c| (*d, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedPrograms { histories, programs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioSpec {
    pub id: u8,
    pub generator: Family,
    pub screens: usize,
    pub interval: f64,
    pub fix_b1: bool,
    pub cohort_size: usize,
    pub seed: u64,
}

/// S1: K=5, Δ=2, free b1; S2: K=10, Δ=1, free b1; S3: K=5, Δ=2, b1=0;
/// S4: K=10, Δ=1, b1=0.
pub fn scenario_specs(generator: Family, cohort_size: usize, seed: u64) -> [ScenarioSpec; 4] {
    let spec = |id, screens, interval, fix_b1| ScenarioSpec {
        id,
        generator,
        screens,
        interval,
        fix_b1,
        cohort_size,
        seed,
    };
    [
        spec(1, 5, 2.0, false),
        spec(2, 10, 1.0, false),
        spec(3, 5, 2.0, true),
        spec(4, 10, 1.0, true),
    ]
}

impl ScenarioSpec {
    pub fn design(&self) -> Result<ScreeningDesign> {
        ScreeningDesign::new(T_MIN, T_MAX, self.screens, self.interval, self.cohort_size)
    }
}

/// Options shared by the presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PresetOptions {
    pub scale: Scale,
    pub seed: u64,
    pub restarts: usize,
    /// Overrides the scale's cohort size.
    pub cohort_size: Option<usize>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Desk,
            seed: 1,
            restarts: 20,
            cohort_size: None,
        }
    }
}

impl PresetOptions {
    fn cohort_size(&self) -> usize {
        self.cohort_size.unwrap_or(self.scale.cohort_size())
    }

    fn estimate_options(&self, fix_b1: bool) -> EstimateOptions {
        EstimateOptions {
            restarts: self.restarts,
            fix_b1,
            seed: self.seed,
            constants: ModelConstants::default(),
            information: true,
        }
    }
}

/// One fitted row of a report table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRow {
    pub label: String,
    pub generator: Family,
    pub screens: usize,
    pub interval: f64,
    pub fit: EstimationResult,
}

const PARAMS: [&str; 9] = ["b0", "b1", "mu", "s", "lambda", "alpha", "beta", "kappa", "rho"];

fn row_value(fit: &EstimationResult, name: &str) -> Option<f64> {
    let t = &fit.theta_hat;
    match name {
        "b0" => Some(t.b0),
        "b1" => Some(t.b1),
        "mu" => Some(t.mu),
        "s" => Some(t.s),
        _ => t
            .family()
            .param_names()
            .iter()
            .position(|n| *n == name)
            .map(|i| t.sojourn.params()[i]),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(crate::fmt17).unwrap_or_default()
}

/// Report CSV: one row per fit, estimates with their standard deviations
/// (empty when unavailable or not applicable).
pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        let mut header = vec![
            "label".to_string(),
            "generator".into(),
            "fitted".into(),
            "screens".into(),
            "interval".into(),
            "fix_b1".into(),
            "neg_log_lik".into(),
        ];
        for p in PARAMS.iter().chain(&["mst"]) {
            header.push(p.to_string());
            header.push(format!("{p}_sd"));
        }
        header.extend(["converged", "at_boundary", "positive_definite", "near_zero_eigenvalues"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for r in rows {
            let f = &r.fit;
            let mut fields = vec![
                r.label.clone(),
                r.generator.to_string(),
                f.family.to_string(),
                r.screens.to_string(),
                r.interval.to_string(),
                f.theta_hat.fix_b1.to_string(),
                crate::fmt17(f.neg_log_lik),
            ];
            for p in PARAMS {
                fields.push(opt(row_value(f, p)));
                let sd = if p == "b1" && f.theta_hat.fix_b1 { None } else { f.standard_error(p) };
                fields.push(opt(sd));
            }
            fields.push(opt(f.mst));
            fields.push(opt(f.standard_error("mst")));
            fields.push(f.converged.to_string());
            fields.push(f.at_boundary.to_string());
            fields.push(f.positive_definite.to_string());
            fields.push(f.near_zero_eigenvalues.to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioReport {
    pub generator: Family,
    pub options: PresetOptions,
    pub truth: ModelParams,
    pub rows: Vec<ReportRow>,
    /// Soft checks that are reported rather than enforced.
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub counts: Vec<(ScreeningDesign, CountsTable)>,
}

/// Simulates both programs on one progression realization and runs the
/// four scenario fits with the generating family.
pub fn run_scenarios(generator: Family, options: &PresetOptions) -> Result<ScenarioReport> {
    let specs = scenario_specs(generator, options.cohort_size(), options.seed);
    let designs = [specs[0].design()?, specs[1].design()?];
    let truth = truth_params(generator);
    let sim = simulate_programs(&truth, &designs, options.seed)?;
    let rows = specs
        .par_iter()
        .map(|spec| {
            let (design, counts) = &sim.programs[if spec.screens == 5 { 0 } else { 1 }];
            let fit = estimate(counts, design, generator, &options.estimate_options(spec.fix_b1))?;
            Ok(ReportRow {
                label: format!("S{}", spec.id),
                generator,
                screens: spec.screens,
                interval: spec.interval,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = (0..2)
        .map(|i| averaging_diagnostic(&rows[i].fit, &rows[i + 2].fit, &rows[i + 2].label))
        .collect();
    Ok(ScenarioReport {
        generator,
        options: *options,
        truth,
        rows,
        diagnostics,
        counts: sim.programs,
    })
}

/// Whether the constant sensitivity of a `b1 = 0` fit lies inside the
/// range of the unconstrained fit's sensitivity over the entry ages.
fn averaging_diagnostic(free: &EstimationResult, fixed: &EstimationResult, label: &str) -> String {
    let m = free.theta_hat.model(&free.constants).sensitivity;
    let (lo, hi) = (T_MIN..=T_MAX)
        .map(|t| m.at(t as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let constant = fixed.theta_hat.model(&fixed.constants).sensitivity.at(0.0);
    let verdict = if (lo..=hi).contains(&constant) { "inside" } else { "outside" };
    format!("{label}: constant sensitivity {constant:.4} {verdict} unconstrained range [{lo:.4}, {hi:.4}]")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MisspecificationReport {
    pub options: PresetOptions,
    /// Row-major: generator family × fitted family.
    pub rows: Vec<ReportRow>,
    #[serde(skip)]
    pub counts: Vec<(Family, ScreeningDesign, CountsTable)>,
}

/// Fits every family to data from every family on the K=10, Δ=1 program.
pub fn run_misspecification(options: &PresetOptions) -> Result<MisspecificationReport> {
    let design = ScreeningDesign::new(T_MIN, T_MAX, 10, 1.0, options.cohort_size())?;
    let counts = Family::ALL
        .iter()
        .map(|&g| {
            let mut sim = simulate_programs(&truth_params(g), &[design], options.seed)?;
            let (d, c) = sim.programs.remove(0);
            Ok((g, d, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, Family)> = (0..3).flat_map(|g| Family::ALL.map(move |f| (g, f))).collect();
    let rows = cells
        .par_iter()
        .map(|&(g, fitted)| {
            let (generator, design, table) = &counts[g];
            let fit = estimate(table, design, fitted, &options.estimate_options(false))?;
            Ok(ReportRow {
                label: format!("{generator}->{fitted}"),
                generator: *generator,
                screens: design.screens,
                interval: design.interval,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MisspecificationReport {
        options: *options,
        rows,
        counts,
    })
}

/// Inputs of the interval-cancer replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicationConfig {
    pub participants: usize,
    /// Entry age of the single cohort.
    pub t0: u32,
    /// Preclinical onsets per person-year.
    pub rate: f64,
    pub sojourn: SojournDistribution,
    /// Sensitivity used to simulate the screens.
    pub sensitivity: f64,
    /// Sensitivity assumed by the fit; 1 means perfect detection.
    pub fit_sensitivity: f64,
    pub screens: usize,
    pub interval: f64,
    pub fit_family: Family,
    pub restarts: usize,
    pub seed: u64,
}

impl ReplicationConfig {
    pub fn new(scale: Scale, seed: u64) -> Self {
        Self {
            participants: scale.replication_size(),
            t0: 55,
            rate: 200.0 / 100_000.0,
            sojourn: SojournDistribution::Gamma { alpha: 6.25, beta: 2.55 },
            sensitivity: 0.58,
            fit_sensitivity: 0.58,
            screens: 5,
            interval: 2.0,
            fit_family: Family::Exponential,
            restarts: 5,
            seed,
        }
    }
}

fn constant_sensitivity(phi: f64) -> Result<SensitivityModel> {
    if phi >= 1.0 {
        // logistic saturates to exactly 1 in double precision
        SensitivityModel::new(40.0, 0.0, 52.0)
    } else {
        SensitivityModel::constant(phi, 52.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicationReport {
    pub config: ReplicationConfig,
    pub mst_estimate: Option<f64>,
    pub fit: SojournFit,
    #[serde(skip)]
    pub counts: Option<(ScreeningDesign, CountsTable)>,
}

/// Simulates the single-cohort program with constant intensity and fits
/// the sojourn parameters alone, sensitivity and intensity held fixed.
pub fn replicate_interval_cancer_study(config: &ReplicationConfig) -> Result<ReplicationReport> {
    let design = ScreeningDesign::new(config.t0, config.t0, config.screens, config.interval, config.participants)?;
    let intensity = PreclinicalIntensity::constant(config.rate)?;
    let truth = ModelParams {
        sensitivity: constant_sensitivity(config.sensitivity)?,
        intensity,
        sojourn: config.sojourn.validated()?,
    };
    let mut sim = simulate_programs(&truth, &[design], config.seed)?;
    let (design, counts) = sim.programs.remove(0);
    let fit = estimate_sojourn_only(
        &counts,
        &design,
        constant_sensitivity(config.fit_sensitivity)?,
        intensity,
        config.fit_family,
        config.restarts,
        config.seed,
    )?;
    Ok(ReplicationReport {
        config: *config,
        mst_estimate: fit.mst,
        fit,
        counts: Some((design, counts)),
    })
}

/// `<root>/seed-<seed>`; reruns with the same seed overwrite the same files.
pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn counts_name(design: &ScreeningDesign) -> String {
    format!("counts_K{}_D{}.csv", design.screens, design.interval)
}

impl ScenarioReport {
    /// Writes counts per program, one JSON per fit and `report.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (design, counts) in &self.counts {
            counts.write_csv(&dir.join(counts_name(design)))?;
        }
        for row in &self.rows {
            row.fit.write_json(&dir.join(format!("fit_{}.json", row.label)))?;
        }
        write_report_csv(&dir.join("report.csv"), &self.rows)?;
        write_json(&dir.join("report.json"), self)
    }
}

impl MisspecificationReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (family, design, counts) in &self.counts {
            counts.write_csv(&dir.join(format!("counts_{family}_K{}_D{}.csv", design.screens, design.interval)))?;
        }
        for row in &self.rows {
            row.fit
                .write_json(&dir.join(format!("fit_{}_{}.json", row.generator, row.fit.family)))?;
        }
        write_report_csv(&dir.join("report.csv"), &self.rows)?;
        write_json(&dir.join("report.json"), self)
    }
}

impl ReplicationReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some((design, counts)) = &self.counts {
            counts.write_csv(&dir.join(counts_name(design)))?;
        }
        write_json(&dir.join("replication.json"), self)
    }
}
