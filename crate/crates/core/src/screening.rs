//! Periodic screening of simulated cohorts and reduction of the individual
//! outcomes to the `(n, s, r)` counts consumed by the likelihood.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SensitivityModel;
use crate::error::{Error, Result};
use crate::natural_history::{CaseRecord, CohortHistory};
use crate::rng::{self, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningDesign {
    pub t_min: u32,
    pub t_max: u32,
    /// Number of screens `K`.
    pub screens: usize,
    /// Years between screens `Δ`.
    pub interval: f64,
    /// Entrants per entry age.
    pub cohort_size: usize,
    /// Probability of attending each screen; 1 means full attendance.
    #[serde(default = "full_attendance")]
    pub attendance: f64,
}

fn full_attendance() -> f64 {
    1.0
}

impl ScreeningDesign {
    pub fn new(t_min: u32, t_max: u32, screens: usize, interval: f64, cohort_size: usize) -> Result<Self> {
        let d = Self {
            t_min,
            t_max,
            screens,
            interval,
            cohort_size,
            attendance: 1.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.screens == 0 {
            problems.push("number of screens K must be at least 1".to_string());
        }
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            problems.push(format!("screening interval must be > 0, got {}", self.interval));
        }
        if self.t_min > self.t_max {
            problems.push(format!("t_min {} exceeds t_max {}", self.t_min, self.t_max));
        }
        if self.cohort_size == 0 {
            problems.push("cohort size must be at least 1".to_string());
        }
        if !(self.attendance > 0.0 && self.attendance <= 1.0) {
            problems.push(format!("attendance must lie in (0, 1], got {}", self.attendance));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn ages(&self) -> impl Iterator<Item = u32> + Clone {
        self.t_min..=self.t_max
    }

    /// Age at the 0-based screen `u`: `t0 + Δ·u`. `u = K` gives the end of
    /// the program.
    pub fn screen_age(&self, t0: u32, u: usize) -> f64 {
        t0 as f64 + self.interval * u as f64
    }

    pub fn program_years(&self) -> f64 {
        self.interval * self.screens as f64
    }
}

/// Fate of one preclinical case under the program. Indices are 1-based:
/// screen `k` happens at age `t_{k-1}`, interval `k` spans `[t_{k-1}, t_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseOutcome {
    ScreenDetected(usize),
    Interval(usize),
    /// Still preclinical when the program ends.
    Censored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortOutcomes {
    pub t0: u32,
    pub size: usize,
    pub outcomes: Vec<CaseOutcome>,
}

/// Screens one case. `detect[u]` and `attend[u]` are the uniforms for the
/// 0-based screen `u`, drawn up front so that the stream consumed per case
/// does not depend on the outcome.
fn screen_case(
    case: &CaseRecord,
    design: &ScreeningDesign,
    m: &SensitivityModel,
    detect: &[f64],
    attend: Option<&[f64]>,
) -> CaseOutcome {
    let k_total = design.screens;
    let clinical = case.clinical_age();
    let mut u = 0;
    while u < k_total && design.screen_age(case.t0, u) <= case.onset_age {
        u += 1;
    }
    if u > 0 && clinical < design.screen_age(case.t0, u) {
        // surfaced before the first screen it could attend
        return CaseOutcome::Interval(u);
    }
    while u < k_total {
        let age = design.screen_age(case.t0, u);
        let attended = attend.is_none_or(|a| a[u] < design.attendance);
        if attended && detect[u] < m.at(age) {
            return CaseOutcome::ScreenDetected(u + 1);
        }
        if clinical < age + design.interval {
            return CaseOutcome::Interval(u + 1);
        }
        u += 1;
    }
    CaseOutcome::Censored
}

/// Runs the `K` screening rounds over every preclinical case of a cohort.
pub fn run_screening<R: Rng + ?Sized>(
    history: &CohortHistory,
    design: &ScreeningDesign,
    m: &SensitivityModel,
    rng: &mut R,
) -> CohortOutcomes {
    let k = design.screens;
    let partial = design.attendance < 1.0;
    let mut detect = vec![0.0; k];
    let mut attend = vec![0.0; k];
    let outcomes = history
        .cases
        .iter()
        .map(|case| {
            detect.iter_mut().for_each(|x| *x = rng.random());
            if partial {
                attend.iter_mut().for_each(|x| *x = rng.random());
            }
            screen_case(case, design, m, &detect, partial.then_some(attend.as_slice()))
        })
        .collect();
    CohortOutcomes {
        t0: history.t0,
        size: history.size,
        outcomes,
    }
}

/// Screens every cohort on its own substream. `program` distinguishes
/// programs applied to the same progression data.
pub fn screen_population(
    histories: &[CohortHistory],
    design: &ScreeningDesign,
    m: &SensitivityModel,
    seed: u64,
    program: u64,
) -> Vec<CohortOutcomes> {
    let tag = ((Stage::Screening as u64) << 32) | program;
    histories
        .par_iter()
        .map(|h| {
            let mut rng = rng::substream_tagged(seed, tag, h.t0 as u64);
            run_screening(h, design, m, &mut rng)
        })
        .collect()
}

/// How `n` evolves across screens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tabulation {
    /// `n` decremented by the detected and interval cases of each round.
    #[default]
    AtRisk,
    /// `n = N` at every screen.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsCell {
    pub t0: u32,
    pub k: usize,
    pub n: u64,
    pub s: u64,
    pub r: u64,
}

/// Sufficient statistics of the likelihood, one cell per `(t0, k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountsTable {
    cells: Vec<CountsCell>,
}

pub fn tabulate(outcomes: &CohortOutcomes, design: &ScreeningDesign, mode: Tabulation) -> Result<Vec<CountsCell>> {
    let k_total = design.screens;
    if outcomes.outcomes.len() > outcomes.size {
        return Err(Error::InconsistentOutcomes(format!(
            "cohort t0={} has {} case outcomes for only {} individuals",
            outcomes.t0,
            outcomes.outcomes.len(),
            outcomes.size
        )));
    }
    let mut s = vec![0u64; k_total];
    let mut r = vec![0u64; k_total];
    for o in &outcomes.outcomes {
        let (slot, k) = match *o {
            CaseOutcome::ScreenDetected(k) => (&mut s, k),
            CaseOutcome::Interval(k) => (&mut r, k),
            CaseOutcome::Censored => continue,
        };
        if k == 0 || k > k_total {
            return Err(Error::InconsistentOutcomes(format!(
                "cohort t0={}: outcome index {k} outside 1..={k_total}",
                outcomes.t0
            )));
        }
        slot[k - 1] += 1;
    }
    let mut n = outcomes.size as u64;
    let mut cells = Vec::with_capacity(k_total);
    for k in 0..k_total {
        cells.push(CountsCell {
            t0: outcomes.t0,
            k: k + 1,
            n,
            s: s[k],
            r: r[k],
        });
        if mode == Tabulation::AtRisk {
            n -= s[k] + r[k];
        }
    }
    Ok(cells)
}

impl CountsTable {
    pub fn new(cells: Vec<CountsCell>) -> Result<Self> {
        let t = Self { cells };
        t.validate()?;
        Ok(t)
    }

    pub fn from_outcomes(outcomes: &[CohortOutcomes], design: &ScreeningDesign, mode: Tabulation) -> Result<Self> {
        let mut cells = Vec::new();
        for o in outcomes {
            cells.extend(tabulate(o, design, mode)?);
        }
        Self::new(cells)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, c) in self.cells.iter().enumerate() {
            if c.k == 0 {
                return Err(Error::InvalidCounts(format!("cell {i}: screen index k must be >= 1")));
            }
            if c.s + c.r > c.n {
                return Err(Error::InvalidCounts(format!(
                    "cell {i} (t0={}, k={}): s + r = {} exceeds n = {}",
                    c.t0,
                    c.k,
                    c.s + c.r,
                    c.n
                )));
            }
            if !seen.insert((c.t0, c.k)) {
                return Err(Error::InvalidCounts(format!(
                    "cell {i}: duplicate (t0={}, k={})",
                    c.t0, c.k
                )));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> &[CountsCell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_screen(&self) -> usize {
        self.cells.iter().map(|c| c.k).max().unwrap_or(0)
    }

    /// Cells grouped by entry age, each group sorted by `k`.
    pub fn by_cohort(&self) -> BTreeMap<u32, Vec<CountsCell>> {
        let mut map: BTreeMap<u32, Vec<CountsCell>> = BTreeMap::new();
        for c in &self.cells {
            map.entry(c.t0).or_default().push(*c);
        }
        for v in map.values_mut() {
            v.sort_by_key(|c| c.k);
        }
        map
    }

    pub fn total_screen_detected(&self) -> u64 {
        self.cells.iter().map(|c| c.s).sum()
    }

    pub fn total_interval(&self) -> u64 {
        self.cells.iter().map(|c| c.r).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t0,k,n,s,r")?;
        for c in &self.cells {
            writeln!(out, "{},{},{},{},{}", c.t0, c.k, c.n, c.s, c.r)?;
        }
        out.flush()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file, path)
    }

    pub fn read_from<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["t0", "k", "n", "s", "r"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 1,
                message: format!("expected header t0,k,n,s,r, found {}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut cells = Vec::new();
        for (i, rec) in rdr.deserialize::<CountsCell>().enumerate() {
            let row = i as u64 + 2;
            let cell = rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: e.position().map_or(row, |p| p.line()),
                message: describe_csv_error(&e, &expected),
            })?;
            if cell.s + cell.r > cell.n || cell.k == 0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    message: format!(
                        "cell (t0={}, k={}) violates k >= 1 and s + r <= n (n={}, s={}, r={})",
                        cell.t0, cell.k, cell.n, cell.s, cell.r
                    ),
                });
            }
            cells.push(cell);
        }
        Self::new(cells).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })
    }
}

fn describe_csv_error(e: &csv::Error, columns: &[&str]) -> String {
    if let csv::ErrorKind::Deserialize { err, .. } = e.kind() {
        if let Some(field) = err.field() {
            let name = columns.get(field as usize).copied().unwrap_or("?");
            return format!("column {} ({name}): {}", field + 1, err.kind());
        }
    }
    e.to_string()
}
