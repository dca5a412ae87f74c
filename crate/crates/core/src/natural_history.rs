//! Individual-level disease progression: onset into the preclinical state
//! on a discretised age grid, and assignment of a sojourn time to each
//! onset.
//!
//! Onset is a chain of independent `Bernoulli(p_i)` trials, one per grid
//! step, where `p_i` is the intensity mass of the step; only the first
//! success matters. The chain is sampled exactly by inverting the
//! distribution of the first-success index, which costs one uniform per
//! individual instead of one per step.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{PreclinicalIntensity, SojournDistribution};
use crate::error::{Error, Result};
use crate::rng::{self, Stage};

pub const DEFAULT_STEPS_PER_YEAR: u32 = 100;

/// Lookback covers all but `1e-4` of the sojourn distribution.
pub const LOOKBACK_QUANTILE: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    /// Entry age in whole years.
    pub t0: u32,
    pub size: usize,
    pub lookback_years: u32,
    pub steps_per_year: u32,
    /// Length of the screening program, `K × Δ`.
    pub program_years: f64,
}

impl CohortConfig {
    /// Default grid: 100 steps per year, lookback rounded up from the
    /// 99.99% sojourn quantile.
    pub fn new(t0: u32, size: usize, program_years: f64, dist: &SojournDistribution) -> Result<Self> {
        let cfg = Self {
            t0,
            size,
            lookback_years: default_lookback(dist)?,
            steps_per_year: DEFAULT_STEPS_PER_YEAR,
            program_years,
        };
        cfg.validate(dist)?;
        Ok(cfg)
    }

    pub fn validate(&self, dist: &SojournDistribution) -> Result<()> {
        let mut problems = Vec::new();
        if self.size == 0 {
            problems.push("cohort size must be at least 1".to_string());
        }
        if self.steps_per_year == 0 {
            problems.push("steps per year must be at least 1".to_string());
        }
        let needed = default_lookback(dist)?;
        if self.lookback_years < needed {
            problems.push(format!(
                "lookback {} years is shorter than the 99.99% sojourn quantile ({needed} years)",
                self.lookback_years
            ));
        }
        if self.lookback_years > self.t0 {
            problems.push(format!(
                "lookback {} years reaches below age 0 for entry age {}",
                self.lookback_years, self.t0
            ));
        }
        if !(self.program_years >= 0.0 && self.program_years.is_finite()) {
            problems.push(format!("program length must be >= 0, got {}", self.program_years));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn step_width(&self) -> f64 {
        1.0 / self.steps_per_year as f64
    }
}

pub fn default_lookback(dist: &SojournDistribution) -> Result<u32> {
    Ok(dist.quantile(LOOKBACK_QUANTILE)?.ceil() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreclinicalAtEntry,
    OnsetDuringProgram,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::PreclinicalAtEntry => "preclinical-at-entry",
            Phase::OnsetDuringProgram => "onset-during-program",
        }
    }
}

/// One simulated individual who entered the preclinical state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub t0: u32,
    pub onset_age: f64,
    pub sojourn: f64,
    pub phase: Phase,
}

impl CaseRecord {
    pub fn clinical_age(&self) -> f64 {
        self.onset_age + self.sojourn
    }
}

/// First-success distribution of a Bernoulli chain over a uniform age grid.
struct OnsetGrid {
    start: f64,
    width: f64,
    /// `cumulative[i]` = P(first success at step <= i).
    cumulative: Vec<f64>,
}

impl OnsetGrid {
    fn new(w: &PreclinicalIntensity, start: f64, steps: usize, width: f64) -> Self {
        let mut log_none = 0.0f64;
        let cumulative = (0..steps)
            .map(|i| {
                let lo = start + i as f64 * width;
                let p = w.step_mass(lo, lo + width).clamp(0.0, 1.0);
                log_none += (-p).ln_1p();
                -log_none.exp_m1()
            })
            .collect();
        Self {
            start,
            width,
            cumulative,
        }
    }

    /// Left endpoint of the first success step, if any.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let u: f64 = rng.random();
        let total = *self.cumulative.last()?;
        if u >= total {
            return None;
        }
        let i = self.cumulative.partition_point(|&f| f <= u);
        Some(self.start + i as f64 * self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialStates {
    pub healthy: usize,
    pub cases: Vec<CaseRecord>,
    /// Individuals who became clinical before entry and were replaced.
    pub discarded: usize,
}

/// Classifies exactly `cfg.size` entrants as healthy or preclinical at age
/// `t0`. Onset is simulated over `[t0 - b, t0)`; anyone clinical before
/// `t0` is discarded and replaced by a fresh individual.
pub fn simulate_initial_states<R: Rng + ?Sized>(
    cfg: &CohortConfig,
    w: &PreclinicalIntensity,
    dist: &SojournDistribution,
    rng: &mut R,
) -> Result<InitialStates> {
    cfg.validate(dist)?;
    let t0 = cfg.t0 as f64;
    let steps = (cfg.lookback_years * cfg.steps_per_year) as usize;
    let grid = OnsetGrid::new(w, t0 - cfg.lookback_years as f64, steps, cfg.step_width());

    let mut healthy = 0;
    let mut cases = Vec::new();
    let mut discarded = 0;
    while healthy + cases.len() < cfg.size {
        match grid.draw(rng) {
            None => healthy += 1,
            Some(onset_age) => {
                let sojourn = dist.sample(rng);
                if onset_age + sojourn <= t0 {
                    discarded += 1;
                } else {
                    cases.push(CaseRecord {
                        t0: cfg.t0,
                        onset_age,
                        sojourn,
                        phase: Phase::PreclinicalAtEntry,
                    });
                }
            }
        }
    }
    Ok(InitialStates {
        healthy,
        cases,
        discarded,
    })
}

/// Onsets among the `healthy` entrants during `[t0, t0 + program_years)`.
/// Every onset is kept.
pub fn simulate_onset_during_program<R: Rng + ?Sized>(
    cfg: &CohortConfig,
    healthy: usize,
    w: &PreclinicalIntensity,
    dist: &SojournDistribution,
    rng: &mut R,
) -> Vec<CaseRecord> {
    let steps = (cfg.program_years * cfg.steps_per_year as f64).round() as usize;
    if steps == 0 {
        return Vec::new();
    }
    let grid = OnsetGrid::new(w, cfg.t0 as f64, steps, cfg.step_width());
    (0..healthy)
        .filter_map(|_| {
            grid.draw(rng).map(|onset_age| CaseRecord {
                t0: cfg.t0,
                onset_age,
                sojourn: dist.sample(rng),
                phase: Phase::OnsetDuringProgram,
            })
        })
        .collect()
}

/// Disease histories of one entry-age cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortHistory {
    pub t0: u32,
    pub size: usize,
    pub healthy_at_entry: usize,
    pub discarded: usize,
    /// Preclinical-at-entry cases first, then onsets during the program.
    pub cases: Vec<CaseRecord>,
}

impl CohortHistory {
    pub fn prevalent(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases
            .iter()
            .filter(|c| c.phase == Phase::PreclinicalAtEntry)
    }

    pub fn prevalent_count(&self) -> usize {
        self.prevalent().count()
    }
}

pub fn simulate_cohort<R: Rng + ?Sized>(
    cfg: &CohortConfig,
    w: &PreclinicalIntensity,
    dist: &SojournDistribution,
    rng: &mut R,
) -> Result<CohortHistory> {
    let init = simulate_initial_states(cfg, w, dist, rng)?;
    let mut cases = init.cases;
    cases.extend(simulate_onset_during_program(cfg, init.healthy, w, dist, rng));
    Ok(CohortHistory {
        t0: cfg.t0,
        size: cfg.size,
        healthy_at_entry: init.healthy,
        discarded: init.discarded,
        cases,
    })
}

/// Simulates every entry age in `ages` on its own substream of `seed`.
pub fn simulate_population(
    ages: impl IntoIterator<Item = u32>,
    size: usize,
    program_years: f64,
    w: &PreclinicalIntensity,
    dist: &SojournDistribution,
    seed: u64,
) -> Result<Vec<CohortHistory>> {
    let configs = ages
        .into_iter()
        .map(|t0| CohortConfig::new(t0, size, program_years, dist))
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|cfg| {
            let mut rng = rng::substream(seed, Stage::Progression, cfg.t0 as u64);
            simulate_cohort(cfg, w, dist, &mut rng)
        })
        .collect()
}

/// Case-level dump with header `t0,tp,J,phase`.
pub fn write_case_dump(path: &Path, cohorts: &[CohortHistory]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "t0,tp,J,phase")?;
        for c in cohorts.iter().flat_map(|h| &h.cases) {
            writeln!(
                out,
                "{},{},{},{}",
                c.t0,
                crate::fmt17(c.onset_age),
                crate::fmt17(c.sojourn),
                c.phase.as_str()
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_w() -> PreclinicalIntensity {
        PreclinicalIntensity::log_normal(3.971, 0.268, 0.15).unwrap()
    }

    fn exp_dist() -> SojournDistribution {
        SojournDistribution::exponential(0.4).unwrap()
    }

    #[test]
    fn lookback_rule() {
        assert_eq!(default_lookback(&exp_dist()).unwrap(), 24);
        let cfg = CohortConfig::new(40, 10, 10.0, &exp_dist()).unwrap();
        assert_eq!(cfg.lookback_years, 24);
        assert_eq!(cfg.steps_per_year, 100);
        assert!(CohortConfig::new(20, 10, 10.0, &exp_dist()).is_err());
        let bad = CohortConfig { size: 0, ..cfg };
        assert!(bad.validate(&exp_dist()).is_err());
    }

    #[test]
    fn zero_risk_means_everyone_healthy() {
        let w = PreclinicalIntensity::log_normal(3.971, 0.268, 0.0).unwrap();
        let cfg = CohortConfig::new(50, 500, 10.0, &exp_dist()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = simulate_initial_states(&cfg, &w, &exp_dist(), &mut rng).unwrap();
        assert_eq!(s.healthy, 500);
        assert!(s.cases.is_empty());
        assert!(simulate_onset_during_program(&cfg, 500, &w, &exp_dist(), &mut rng).is_empty());
    }

    #[test]
    fn cohort_size_and_discard_rule() {
        let cfg = CohortConfig::new(55, 20_000, 10.0, &exp_dist()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = simulate_initial_states(&cfg, &paper_w(), &exp_dist(), &mut rng).unwrap();
        assert_eq!(s.healthy + s.cases.len(), 20_000);
        assert!(s.discarded > 0);
        for c in &s.cases {
            assert!(c.clinical_age() > 55.0);
            assert!(c.onset_age < 55.0 && c.onset_age >= 55.0 - 24.0);
            assert!(c.sojourn > 0.0);
        }
    }

    #[test]
    fn onset_during_program_window() {
        let cfg = CohortConfig::new(50, 1, 10.0, &exp_dist()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let healthy = 50_000;
        let cases = simulate_onset_during_program(&cfg, healthy, &paper_w(), &exp_dist(), &mut rng);
        assert!(cases.iter().all(|c| c.onset_age >= 50.0 && c.onset_age < 60.0));
        let p = paper_w().integral(50.0, 60.0).unwrap();
        let expected = healthy as f64 * p;
        let se = (healthy as f64 * p * (1.0 - p)).sqrt();
        assert!((cases.len() as f64 - expected).abs() < 3.0 * se, "{} vs {expected}", cases.len());

        let empty = CohortConfig { program_years: 0.0, ..cfg };
        assert!(simulate_onset_during_program(&empty, healthy, &paper_w(), &exp_dist(), &mut rng).is_empty());
    }

    #[test]
    fn inverted_chain_matches_explicit_bernoulli_chain() {
        // explicit per-step Bernoulli chain as in the textbook algorithm
        let w = PreclinicalIntensity::constant(0.05).unwrap();
        let grid = OnsetGrid::new(&w, 10.0, 200, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let mut fast_hits = 0usize;
        let mut fast_sum = 0.0;
        let mut slow_hits = 0usize;
        let mut slow_sum = 0.0;
        for _ in 0..n {
            if let Some(t) = grid.draw(&mut rng) {
                fast_hits += 1;
                fast_sum += t;
            }
            for i in 0..200 {
                if rng.random::<f64>() < w.step_mass(0.0, 0.01) {
                    slow_hits += 1;
                    slow_sum += 10.0 + i as f64 * 0.01;
                    break;
                }
            }
        }
        let p = 1.0 - (1.0f64 - 0.0005).powi(200);
        let se = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((fast_hits as f64 - slow_hits as f64).abs() < 4.0 * se * 2f64.sqrt());
        let (mf, ms) = (fast_sum / fast_hits as f64, slow_sum / slow_hits as f64);
        assert!((mf - ms).abs() < 0.02, "{mf} vs {ms}");
    }

    #[test]
    fn length_biased_entry() {
        let cohorts = simulate_population(40..=64, 4_000, 10.0, &paper_w(), &exp_dist(), 9).unwrap();
        let prevalent: Vec<f64> = cohorts
            .iter()
            .flat_map(|h| h.prevalent().map(|c| c.sojourn))
            .collect();
        let mean = prevalent.iter().sum::<f64>() / prevalent.len() as f64;
        assert!(mean > 2.5, "{mean}");
    }

    #[test]
    fn population_is_deterministic() {
        let a = simulate_population([40, 41], 300, 10.0, &paper_w(), &exp_dist(), 5).unwrap();
        let b = simulate_population([41, 40], 300, 10.0, &paper_w(), &exp_dist(), 5).unwrap();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[0]);
    }
}
