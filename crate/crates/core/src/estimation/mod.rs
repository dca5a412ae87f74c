//! Maximum-likelihood estimation from screening counts: the multinomial
//! negative log-likelihood, multistart quasi-Newton minimization, observed
//! information and the gamma likelihood-ridge scan.

mod hessian;
mod optimize;
mod ridge;
mod transform;

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, PreclinicalIntensity, SensitivityModel, SojournDistribution};
use crate::error::{Error, Result};
use crate::model::{cohort_probabilities, ModelParams};
use crate::rng::{self, Stage};
use crate::screening::{CountsCell, CountsTable, ScreeningDesign};

pub use hessian::{finite_difference_hessian, hessian_steps, summarize, InformationSummary, NEAR_ZERO_RELATIVE};
pub use optimize::{gradient, minimize, BfgsOptions, Minimum, Termination};
pub use ridge::{ridge_scan, write_ridge_csv, RidgeMode, RidgePoint};
pub use transform::{transform, untransform, MU_HI, MU_LO};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Bound on log-scale coordinates; beyond it the objective is infinite.
const LOG_CAP: f64 = 15.0;
const LOGIT_CAP: f64 = 35.0;
const LINEAR_CAP: f64 = 50.0;

/// Model inputs that are never estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Lifetime risk scaling the log-normal intensity.
    pub risk: f64,
    /// Centering age of the sensitivity logistic.
    pub tbar: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self { risk: 0.15, tbar: 52.0 }
    }
}

/// Estimated parameters: sensitivity `b0, b1`, log-normal intensity
/// `mu, s` and the sojourn distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterVector {
    pub b0: f64,
    pub b1: f64,
    pub mu: f64,
    pub s: f64,
    pub sojourn: SojournDistribution,
    pub fix_b1: bool,
}

impl ParameterVector {
    pub fn family(&self) -> Family {
        self.sojourn.family()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.b0.is_finite() && self.b1.is_finite()) {
            problems.push(format!("b0, b1 must be finite: {} {}", self.b0, self.b1));
        }
        if !(MU_LO..=MU_HI).contains(&self.mu) {
            problems.push(format!("mu must lie in [{MU_LO}, {MU_HI}], got {}", self.mu));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            problems.push(format!("s must lie in (0, 1], got {}", self.s));
        }
        if self.fix_b1 && self.b1 != 0.0 {
            problems.push(format!("b1 must be 0 when fixed, got {}", self.b1));
        }
        if let Err(e) = self.sojourn.validated() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    pub fn model(&self, constants: &ModelConstants) -> ModelParams {
        ModelParams {
            sensitivity: SensitivityModel {
                b0: self.b0,
                b1: self.b1,
                tbar: constants.tbar,
            },
            intensity: PreclinicalIntensity::LogNormal {
                mu: self.mu,
                s: self.s,
                risk: constants.risk,
            },
            sojourn: self.sojourn,
        }
    }

    /// Names of the free natural parameters, in Hessian order.
    pub fn free_names(&self) -> Vec<&'static str> {
        let mut names = vec!["b0"];
        if !self.fix_b1 {
            names.push("b1");
        }
        names.extend(["mu", "s"]);
        names.extend(self.family().param_names());
        names
    }

    /// Free natural parameters, in [`Self::free_names`] order.
    pub fn free_values(&self) -> Vec<f64> {
        let mut v = vec![self.b0];
        if !self.fix_b1 {
            v.push(self.b1);
        }
        v.extend([self.mu, self.s]);
        v.extend(self.sojourn.params());
        v
    }

    fn with_free_values(&self, v: &[f64]) -> Option<Self> {
        let mut it = v.iter().copied();
        let b0 = it.next()?;
        let b1 = if self.fix_b1 { 0.0 } else { it.next()? };
        let mu = it.next()?;
        let s = it.next()?;
        let params: Vec<f64> = it.collect();
        let sojourn = SojournDistribution::from_params(self.family(), &params).ok()?;
        Some(Self { b0, b1, mu, s, sojourn, fix_b1: self.fix_b1 })
    }
}

/// Value of the negative log-likelihood and the number of probabilities
/// that had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Likelihood {
    pub value: f64,
    pub clamp_events: u64,
}

/// Counts reduced to the cells that carry information, in canonical
/// `(t0, k)` order so the summation order never depends on the input order.
#[derive(Debug, Clone)]
pub(crate) struct PreparedCounts {
    ages: Vec<u32>,
    cells: Vec<CountsCell>,
}

impl PreparedCounts {
    pub(crate) fn new(counts: &CountsTable, design: &ScreeningDesign) -> Result<Self> {
        if counts.max_screen() > design.screens {
            return Err(Error::ScreenIndex {
                k: counts.max_screen(),
                screens: design.screens,
            });
        }
        let mut cells: Vec<CountsCell> = counts.cells().iter().copied().filter(|c| c.n > 0).collect();
        cells.sort_by_key(|c| (c.t0, c.k));
        let mut ages: Vec<u32> = cells.iter().map(|c| c.t0).collect();
        ages.dedup();
        Ok(Self { ages, cells })
    }

    pub(crate) fn neg_log_likelihood(&self, p: &ModelParams, design: &ScreeningDesign) -> Likelihood {
        let probs = cohort_probabilities(p, design, &self.ages);
        let mut value = 0.0;
        let mut clamp_events = 0;
        let mut cohort = 0;
        for c in &self.cells {
            while probs[cohort].t0 != c.t0 {
                cohort += 1;
            }
            let pr = &probs[cohort];
            value += cell_neg_log_lik(c, pr.detect[c.k - 1], pr.interval[c.k - 1], &mut clamp_events);
        }
        Likelihood { value, clamp_events }
    }
}

fn clamp_probability(x: f64, events: &mut u64) -> f64 {
    if x.is_nan() || x < PROB_FLOOR {
        *events += 1;
        PROB_FLOOR
    } else if x > 1.0 - PROB_FLOOR {
        *events += 1;
        1.0 - PROB_FLOOR
    } else {
        x
    }
}

/// `-(r ln I + s ln D + (n - s - r) ln(1 - D - I))`; zero counts contribute
/// nothing.
fn cell_neg_log_lik(c: &CountsCell, d: f64, i: f64, clamp_events: &mut u64) -> f64 {
    let rest = c.n - c.s - c.r;
    let mut v = 0.0;
    if c.s > 0 {
        v -= c.s as f64 * clamp_probability(d, clamp_events).ln();
    }
    if c.r > 0 {
        v -= c.r as f64 * clamp_probability(i, clamp_events).ln();
    }
    if rest > 0 {
        v -= rest as f64 * clamp_probability(1.0 - d - i, clamp_events).ln();
    }
    v
}

/// Negative log-likelihood of the multinomial screening counts under `p`.
pub fn neg_log_likelihood_model(p: &ModelParams, counts: &CountsTable, design: &ScreeningDesign) -> Result<Likelihood> {
    p.validate()?;
    Ok(PreparedCounts::new(counts, design)?.neg_log_likelihood(p, design))
}

pub fn neg_log_likelihood(
    theta: &ParameterVector,
    counts: &CountsTable,
    design: &ScreeningDesign,
    constants: &ModelConstants,
) -> Result<Likelihood> {
    theta.validate()?;
    neg_log_likelihood_model(&theta.model(constants), counts, design)
}

/// Which blocks of the model are free during a minimization. Fixed parts
/// are taken from `base`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub family: Family,
    pub fix_b1: bool,
    pub free_nuisance: bool,
    pub free_sojourn: bool,
    pub base: ModelParams,
    pub constants: ModelConstants,
}

impl Layout {
    fn full(family: Family, fix_b1: bool, constants: ModelConstants) -> Self {
        Self {
            family,
            fix_b1,
            free_nuisance: true,
            free_sojourn: true,
            base: ParameterVector {
                b0: 0.0,
                b1: 0.0,
                mu: 4.0,
                s: 0.5,
                sojourn: default_member(family),
                fix_b1,
            }
            .model(&constants),
            constants,
        }
    }

    fn model(&self, x: &[f64]) -> Option<ModelParams> {
        let mut p = self.base;
        let mut it = x.iter().copied();
        if self.free_nuisance {
            let b0 = it.next()?;
            let b1 = if self.fix_b1 { 0.0 } else { it.next()? };
            let xm = it.next()?;
            let xs = it.next()?;
            if b0.abs() > LINEAR_CAP || b1.abs() > LINEAR_CAP || xm.abs() > LOGIT_CAP || xs.abs() > LOGIT_CAP {
                return None;
            }
            p.sensitivity = SensitivityModel {
                b0,
                b1,
                tbar: self.constants.tbar,
            };
            p.intensity = PreclinicalIntensity::LogNormal {
                mu: transform::x_to_mu(xm),
                s: transform::x_to_s(xs),
                risk: self.constants.risk,
            };
        }
        if self.free_sojourn {
            let logs: Vec<f64> = it.collect();
            if logs.iter().any(|v| v.is_nan() || v.abs() > LOG_CAP) {
                return None;
            }
            let params: Vec<f64> = logs.iter().map(|v| v.exp()).collect();
            p.sojourn = SojournDistribution::from_params(self.family, &params).ok()?;
        }
        Some(p)
    }

    fn encode_theta(&self, theta: &ParameterVector) -> Vec<f64> {
        let full = transform(theta);
        let split = full.len() - self.family.arity();
        let mut x = Vec::new();
        if self.free_nuisance {
            x.extend_from_slice(&full[..split]);
        }
        if self.free_sojourn {
            x.extend_from_slice(&full[split..]);
        }
        x
    }

    /// Random start drawn from the initial-value ranges: b0 ~ U[0,5],
    /// b1 ~ U[0,0.5], mu ~ U[3.5,4.5], s ~ U(0,1], 1/λ ~ U(0,15],
    /// α, β, κ, ρ ~ U(0,10].
    fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        // U(0, 1]
        let open = |rng: &mut R| 1.0 - rng.random::<f64>();
        let mut x = Vec::new();
        if self.free_nuisance {
            x.push(5.0 * rng.random::<f64>());
            if !self.fix_b1 {
                x.push(0.5 * rng.random::<f64>());
            }
            let mu = MU_LO + (MU_HI - MU_LO) * rng.random::<f64>();
            x.push(transform::mu_to_x(mu.clamp(MU_LO + 1e-9, MU_HI - 1e-9)));
            let s = open(rng);
            x.push(transform::s_to_x(s.max(1e-9)));
        }
        if self.free_sojourn {
            match self.family {
                Family::Exponential => x.push((1.0 / (15.0 * open(rng))).ln()),
                Family::Gamma | Family::LogLogistic => {
                    for _ in 0..2 {
                        x.push((10.0 * open(rng)).max(1e-6).ln());
                    }
                }
            }
        }
        x
    }

    /// Whether a minimizer sits at the edge of the admissible region.
    fn at_boundary(&self, x: &[f64]) -> bool {
        let mut i = 0;
        let mut edge = false;
        if self.free_nuisance {
            i += if self.fix_b1 { 1 } else { 2 };
            let mu = transform::x_to_mu(x[i]);
            let s = transform::x_to_s(x[i + 1]);
            edge |= mu - MU_LO < 1e-6 || MU_HI - mu < 1e-6 || !(1e-6..=1.0 - 1e-6).contains(&s);
            i += 2;
        }
        if self.free_sojourn {
            edge |= x[i..].iter().any(|v| v.abs() > LOG_CAP - 1.0);
        }
        edge
    }
}

fn default_member(family: Family) -> SojournDistribution {
    match family {
        Family::Exponential => SojournDistribution::Exponential { lambda: 0.4 },
        Family::Gamma => SojournDistribution::Gamma { alpha: 6.25, beta: 2.5 },
        Family::LogLogistic => SojournDistribution::LogLogistic { kappa: 2.2, rho: 4.7 },
    }
}

#[derive(Debug, Clone)]
struct RestartOutcome {
    index: usize,
    minimum: Minimum,
}

/// Runs `restarts` local minimizations from independent random starts and
/// returns them in restart order.
fn multistart(
    layout: &Layout,
    prepared: &PreparedCounts,
    design: &ScreeningDesign,
    restarts: usize,
    seed: u64,
    bfgs: &BfgsOptions,
) -> Vec<RestartOutcome> {
    (0..restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = rng::substream(seed, Stage::Restarts, index as u64);
            let x0 = layout.random_start(&mut rng);
            let f = |x: &[f64]| match layout.model(x) {
                Some(p) => prepared.neg_log_likelihood(&p, design).value,
                None => f64::INFINITY,
            };
            RestartOutcome {
                index,
                minimum: minimize(f, &x0, bfgs),
            }
        })
        .collect()
}

/// Best converged restart (ties broken by restart index), or the best
/// overall when none converged.
fn select_best(outcomes: &[RestartOutcome]) -> Option<&RestartOutcome> {
    let better = |a: &&RestartOutcome, b: &&RestartOutcome| {
        a.minimum.value.total_cmp(&b.minimum.value).then(a.index.cmp(&b.index))
    };
    outcomes
        .iter()
        .filter(|o| o.minimum.termination.converged() && o.minimum.value.is_finite())
        .min_by(better)
        .or_else(|| outcomes.iter().filter(|o| o.minimum.value.is_finite()).min_by(better))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateOptions {
    pub restarts: usize,
    pub fix_b1: bool,
    pub seed: u64,
    pub constants: ModelConstants,
    /// Compute the observed information at the optimum.
    pub information: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            fix_b1: false,
            seed: 1,
            constants: ModelConstants::default(),
            information: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimationResult {
    pub family: Family,
    pub theta_hat: ParameterVector,
    pub mst: Option<f64>,
    pub neg_log_lik: f64,
    /// Standard errors by parameter name (plus `mst`), present only when
    /// the Hessian is positive definite.
    pub standard_errors: Option<BTreeMap<String, f64>>,
    pub hessian_eigenvalues: Vec<f64>,
    pub positive_definite: bool,
    pub near_zero_eigenvalues: usize,
    pub converged: bool,
    pub termination: Termination,
    pub gradient_norm: f64,
    pub at_boundary: bool,
    pub clamp_events: u64,
    pub restarts_used: usize,
    pub restarts_converged: usize,
    /// Final objective of every restart, in restart order.
    pub restart_values: Vec<f64>,
    /// Final parameters of every restart, in restart order.
    #[serde(default)]
    pub restart_estimates: Vec<Option<ParameterVector>>,
    pub seed: u64,
    pub constants: ModelConstants,
}

impl EstimationResult {
    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.standard_errors.as_ref()?.get(name).copied()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Multistart maximum-likelihood fit of the full model (sensitivity,
/// intensity and sojourn parameters).
pub fn estimate(
    counts: &CountsTable,
    design: &ScreeningDesign,
    family: Family,
    options: &EstimateOptions,
) -> Result<EstimationResult> {
    estimate_with(counts, design, family, options, &BfgsOptions::default())
}

pub fn estimate_with(
    counts: &CountsTable,
    design: &ScreeningDesign,
    family: Family,
    options: &EstimateOptions,
    bfgs: &BfgsOptions,
) -> Result<EstimationResult> {
    if counts.is_empty() {
        return Err(Error::InvalidCounts("counts table is empty".into()));
    }
    if options.restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let prepared = PreparedCounts::new(counts, design)?;
    let layout = Layout::full(family, options.fix_b1, options.constants);
    let outcomes = multistart(&layout, &prepared, design, options.restarts, options.seed, bfgs);
    let restarts_converged = outcomes.iter().filter(|o| o.minimum.termination.converged()).count();
    let best = select_best(&outcomes)
        .ok_or_else(|| Error::NonConvergence("every restart produced a non-finite objective".into()))?;
    let theta_hat = untransform(&best.minimum.x, family, options.fix_b1)?;
    let lik = prepared.neg_log_likelihood(&theta_hat.model(&options.constants), design);
    let converged = best.minimum.termination.converged();

    let mut result = EstimationResult {
        family,
        theta_hat,
        mst: theta_hat.sojourn.mean_sojourn().ok(),
        neg_log_lik: lik.value,
        standard_errors: None,
        hessian_eigenvalues: Vec::new(),
        positive_definite: false,
        near_zero_eigenvalues: 0,
        converged,
        termination: best.minimum.termination,
        gradient_norm: best.minimum.grad_norm,
        // an optimum held up by clamped probabilities is a boundary solution
        at_boundary: layout.at_boundary(&best.minimum.x) || lik.clamp_events > 0,
        clamp_events: lik.clamp_events,
        restarts_used: outcomes.len(),
        restarts_converged,
        restart_values: outcomes.iter().map(|o| o.minimum.value).collect(),
        restart_estimates: outcomes
            .iter()
            .map(|o| untransform(&o.minimum.x, family, options.fix_b1).ok())
            .collect(),
        seed: options.seed,
        constants: options.constants,
    };
    if options.information && converged {
        let info = information_at(&theta_hat, &prepared, design, &options.constants);
        result.hessian_eigenvalues = info.summary.eigenvalues.clone();
        result.positive_definite = info.summary.positive_definite;
        result.near_zero_eigenvalues = info.summary.near_zero;
        result.standard_errors = info.standard_errors;
    }
    Ok(result)
}

/// Observed information at a fitted parameter vector.
#[derive(Debug, Clone)]
pub struct ObservedInformation {
    pub names: Vec<&'static str>,
    pub summary: InformationSummary,
    /// Square roots of the inverse-Hessian diagonal plus a delta-method
    /// `mst` entry; `None` unless positive definite.
    pub standard_errors: Option<BTreeMap<String, f64>>,
}

pub fn observed_information(
    theta_hat: &ParameterVector,
    counts: &CountsTable,
    design: &ScreeningDesign,
    constants: &ModelConstants,
) -> Result<ObservedInformation> {
    theta_hat.validate()?;
    let prepared = PreparedCounts::new(counts, design)?;
    Ok(information_at(theta_hat, &prepared, design, constants))
}

fn information_at(
    theta_hat: &ParameterVector,
    prepared: &PreparedCounts,
    design: &ScreeningDesign,
    constants: &ModelConstants,
) -> ObservedInformation {
    let names = theta_hat.free_names();
    let values = theta_hat.free_values();
    let mut f = |v: &[f64]| match theta_hat.with_free_values(v) {
        Some(t) => prepared.neg_log_likelihood(&t.model(constants), design).value,
        None => f64::NAN,
    };
    let (h, bad) = finite_difference_hessian(&mut f, &values, &hessian_steps(&values));
    let summary = summarize(h, bad);
    let standard_errors = summary.covariance.as_ref().map(|cov| {
        let mut out: BTreeMap<String, f64> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), cov[(i, i)].sqrt()))
            .collect();
        if let Some(grad) = mst_gradient(&theta_hat.sojourn) {
            let off = names.len() - grad.len();
            let mut var = 0.0;
            for (i, gi) in grad.iter().enumerate() {
                for (j, gj) in grad.iter().enumerate() {
                    var += gi * gj * cov[(off + i, off + j)];
                }
            }
            out.insert("mst".into(), var.sqrt());
        }
        out
    });
    ObservedInformation {
        names,
        summary,
        standard_errors,
    }
}

/// Gradient of the mean sojourn time with respect to the family parameters.
fn mst_gradient(d: &SojournDistribution) -> Option<Vec<f64>> {
    match *d {
        SojournDistribution::Exponential { lambda } => Some(vec![-1.0 / (lambda * lambda)]),
        SojournDistribution::Gamma { alpha, beta } => Some(vec![1.0 / beta, -alpha / (beta * beta)]),
        SojournDistribution::LogLogistic { kappa, rho } => {
            if rho <= 1.0 {
                return None;
            }
            let b = std::f64::consts::PI / rho;
            let g = b / b.sin();
            // d/drho of b/sin(b) with db/drho = -b/rho
            let dg_db = (b.sin() - b * b.cos()) / (b.sin() * b.sin());
            Some(vec![g, kappa * dg_db * (-b / rho)])
        }
    }
}

/// Fit of the sojourn parameters alone, with sensitivity and intensity held
/// at known values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SojournFit {
    pub family: Family,
    pub sojourn: SojournDistribution,
    pub mst: Option<f64>,
    pub neg_log_lik: f64,
    pub converged: bool,
    pub termination: Termination,
    pub restarts_converged: usize,
    pub clamp_events: u64,
}

pub fn estimate_sojourn_only(
    counts: &CountsTable,
    design: &ScreeningDesign,
    sensitivity: SensitivityModel,
    intensity: PreclinicalIntensity,
    family: Family,
    restarts: usize,
    seed: u64,
) -> Result<SojournFit> {
    if counts.is_empty() {
        return Err(Error::InvalidCounts("counts table is empty".into()));
    }
    let base = ModelParams {
        sensitivity,
        intensity,
        sojourn: default_member(family),
    };
    base.validate()?;
    let prepared = PreparedCounts::new(counts, design)?;
    let layout = Layout {
        family,
        fix_b1: true,
        free_nuisance: false,
        free_sojourn: true,
        base,
        constants: ModelConstants::default(),
    };
    let outcomes = multistart(&layout, &prepared, design, restarts.max(1), seed, &BfgsOptions::default());
    let best = select_best(&outcomes)
        .ok_or_else(|| Error::NonConvergence("every restart produced a non-finite objective".into()))?;
    let p = layout.model(&best.minimum.x).expect("selected minimum is admissible");
    let lik = prepared.neg_log_likelihood(&p, design);
    Ok(SojournFit {
        family,
        sojourn: p.sojourn,
        mst: p.sojourn.mean_sojourn().ok(),
        neg_log_lik: lik.value,
        converged: best.minimum.termination.converged(),
        termination: best.minimum.termination,
        restarts_converged: outcomes.iter().filter(|o| o.minimum.termination.converged()).count(),
        clamp_events: lik.clamp_events,
    })
}

#[cfg(test)]
mod tests;
