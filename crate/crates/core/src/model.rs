//! Analytic screen-detection and interval-case probabilities.
//!
//! With screen ages `t_i = t0 + Δ·i` and `t_{-1} = 0`, every probability is
//! assembled from the kernel integrals
//!
//! ```text
//! A(i, T)  = ∫_{t_{i-1}}^{t_i} w(x) Q(T - x) dx
//! A'(i, T) = ∫_{t_{i-1}}^{t_i} w(x) (1 - Q(T - x)) dx
//! ```
//!
//! and the false-negative products `Π (1 - Φ(t_j))`. Screen `k` happens at
//! `t_{k-1}`; interval `k` spans `[t_{k-1}, t_k)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{PreclinicalIntensity, SensitivityModel, SojournDistribution};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::screening::ScreeningDesign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sensitivity: SensitivityModel,
    pub intensity: PreclinicalIntensity,
    pub sojourn: SojournDistribution,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        SensitivityModel::new(self.sensitivity.b0, self.sensitivity.b1, self.sensitivity.tbar)?;
        self.intensity.validated()?;
        self.sojourn.validated()?;
        Ok(())
    }
}

/// `∫_a^b w(x) Q(T - x) dx` by 64-point Gauss–Legendre on panels of at
/// most one year.
pub fn integrate_wq(
    a: f64,
    b: f64,
    horizon: f64,
    w: &PreclinicalIntensity,
    q: &SojournDistribution,
) -> Result<f64> {
    check_bounds(a, b, horizon)?;
    Ok(quadrature::integrate_unit_panels(a, b, |x| w.density(x) * q.sf(horizon - x)))
}

/// `∫_a^b w(x) (1 - Q(T - x)) dx`, the mass that has surfaced by `T`.
pub fn integrate_wf(
    a: f64,
    b: f64,
    horizon: f64,
    w: &PreclinicalIntensity,
    q: &SojournDistribution,
) -> Result<f64> {
    check_bounds(a, b, horizon)?;
    Ok(quadrature::integrate_unit_panels(a, b, |x| w.density(x) * q.cdf(horizon - x)))
}

fn check_bounds(a: f64, b: f64, horizon: f64) -> Result<()> {
    if !(a >= 0.0 && a <= b && b <= horizon) {
        return Err(Error::Domain(format!(
            "kernel integral requires 0 <= a <= b <= T, got a={a} b={b} T={horizon}"
        )));
    }
    Ok(())
}

/// `C(t0)`: probability of onset and clinical surfacing before entry.
pub fn prob_pre_entry_clinical(t0: f64, p: &ModelParams) -> f64 {
    if t0 <= 0.0 {
        return 0.0;
    }
    quadrature::integrate_unit_panels(0.0, t0, |x| p.intensity.density(x) * p.sojourn.cdf(t0 - x))
}

/// Probability of being preclinical at age `t0`: `∫_0^{t0} w(x) Q(t0 - x) dx`.
pub fn prob_preclinical(t0: f64, p: &ModelParams) -> f64 {
    if t0 <= 0.0 {
        return 0.0;
    }
    quadrature::integrate_unit_panels(0.0, t0, |x| p.intensity.density(x) * p.sojourn.sf(t0 - x))
}

fn check_screen(k: usize, design: &ScreeningDesign) -> Result<()> {
    if k == 0 || k > design.screens {
        return Err(Error::ScreenIndex {
            k,
            screens: design.screens,
        });
    }
    Ok(())
}

/// Screen-detection probability `D_{k,t0}`.
pub fn prob_screen_detect(k: usize, t0: f64, p: &ModelParams, design: &ScreeningDesign) -> Result<f64> {
    check_screen(k, design)?;
    let grid = ScreenGrid::new(t0, design.interval, k);
    let phi = grid.sensitivities(&p.sensitivity);
    let a = |i: usize, m: usize| {
        let (lo, hi) = grid.bounds(i);
        quadrature::integrate_unit_panels(lo, hi, |x| p.intensity.density(x) * p.sojourn.sf(grid.age(m) - x))
    };
    Ok(detect_from_kernels(k, &phi, a))
}

/// Interval-case probability `I_{k,t0}`.
pub fn prob_interval(k: usize, t0: f64, p: &ModelParams, design: &ScreeningDesign) -> Result<f64> {
    check_screen(k, design)?;
    let grid = ScreenGrid::new(t0, design.interval, k);
    let phi = grid.sensitivities(&p.sensitivity);
    let a = |i: usize, m: usize| {
        let (lo, hi) = grid.bounds(i);
        quadrature::integrate_unit_panels(lo, hi, |x| p.intensity.density(x) * p.sojourn.sf(grid.age(m) - x))
    };
    let (lo, hi) = grid.bounds(k);
    let surfaced = quadrature::integrate_unit_panels(lo, hi, |x| {
        p.intensity.density(x) * p.sojourn.cdf(grid.age(k) - x)
    });
    Ok(interval_from_kernels(k, &phi, a, surfaced))
}

/// Screen ages of one cohort.
#[derive(Debug, Clone, Copy)]
struct ScreenGrid {
    t0: f64,
    delta: f64,
    screens: usize,
}

impl ScreenGrid {
    fn new(t0: f64, delta: f64, screens: usize) -> Self {
        Self { t0, delta, screens }
    }

    /// `t_i`
    fn age(&self, i: usize) -> f64 {
        self.t0 + self.delta * i as f64
    }

    /// `[t_{i-1}, t_i]` with `t_{-1} = 0`.
    fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.age(i - 1) };
        (lo, self.age(i))
    }

    fn sensitivities(&self, m: &SensitivityModel) -> Vec<f64> {
        (0..self.screens).map(|i| m.at(self.age(i))).collect()
    }
}

/// `D_k` from the kernel `a(i, m) = A(i, t_m)`.
fn detect_from_kernels(k: usize, phi: &[f64], a: impl Fn(usize, usize) -> f64) -> f64 {
    let last = k - 1;
    let mut history = 0.0;
    let mut missed = 1.0;
    for i in (0..last).rev() {
        missed *= 1.0 - phi[i];
        history += missed * a(i, last);
    }
    phi[last] * (history + a(last, last))
}

/// `I_k`: cases missed at every screen they attended and surfacing in
/// `(t_{k-1}, t_k)`, plus onsets inside interval `k` that surface before
/// `t_k` (`surfaced = A'(k, t_k)`).
fn interval_from_kernels(k: usize, phi: &[f64], a: impl Fn(usize, usize) -> f64, surfaced: f64) -> f64 {
    let mut history = 0.0;
    let mut missed = 1.0;
    for i in (0..k).rev() {
        missed *= 1.0 - phi[i];
        history += missed * (a(i, k - 1) - a(i, k)).max(0.0);
    }
    history + surfaced
}

/// `D` and `I` for every screen of one cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortProbabilities {
    pub t0: u32,
    pub detect: Vec<f64>,
    pub interval: Vec<f64>,
}

/// Unit-panel kernel table shared by all cohorts of an integer-aligned
/// design. Panel `j` covers `[j, j+1]`; entry `(j, d)` holds the panel's
/// integral of `w(x)·Q(j + d - x)` (and of `w(x)·(1 - Q)`), so that
/// `A(i, T)` is a sum of entries with `d = T - j`.
struct KernelTable {
    max_age: usize,
    wq: Vec<f64>,
    wf: Vec<f64>,
}

impl KernelTable {
    fn new(p: &ModelParams, max_age: usize) -> Self {
        let (nodes, weights) = quadrature::unit_rule();
        let order = nodes.len();
        let stride = max_age + 1;
        // weighted intensity at panel nodes, and survivor / cdf at lags d - u
        let mut gw = vec![0.0; max_age * order];
        for j in 0..max_age {
            for n in 0..order {
                gw[j * order + n] = weights[n] * p.intensity.density(j as f64 + nodes[n]);
            }
        }
        let mut sf = vec![0.0; stride * order];
        let mut cdf = vec![0.0; stride * order];
        for d in 1..=max_age {
            for n in 0..order {
                let (q, f) = p.sojourn.sf_cdf(d as f64 - nodes[n]);
                sf[d * order + n] = q;
                cdf[d * order + n] = f;
            }
        }
        let mut wq = vec![0.0; max_age * stride];
        let mut wf = vec![0.0; max_age * stride];
        for j in 0..max_age {
            let g = &gw[j * order..(j + 1) * order];
            for d in 1..=(max_age - j) {
                let q = &sf[d * order..(d + 1) * order];
                let f = &cdf[d * order..(d + 1) * order];
                let mut sq = 0.0;
                let mut sfv = 0.0;
                for n in 0..order {
                    sq += g[n] * q[n];
                    sfv += g[n] * f[n];
                }
                wq[j * stride + d] = sq;
                wf[j * stride + d] = sfv;
            }
        }
        Self { max_age, wq, wf }
    }

    /// `∫_lo^hi w(x) Q(T - x) dx` for integer `lo <= hi <= T`.
    fn wq(&self, lo: usize, hi: usize, horizon: usize) -> f64 {
        let stride = self.max_age + 1;
        (lo..hi).map(|j| self.wq[j * stride + horizon - j]).sum()
    }

    fn wf(&self, lo: usize, hi: usize, horizon: usize) -> f64 {
        let stride = self.max_age + 1;
        (lo..hi).map(|j| self.wf[j * stride + horizon - j]).sum()
    }
}

fn integer_aligned(design: &ScreeningDesign) -> bool {
    design.interval.fract() == 0.0 && design.interval >= 1.0
}

/// `D_k` and `I_k` for `k = 1..=K` and every entry age in `ages`.
///
/// Integer-aligned designs go through a shared unit-panel kernel table;
/// other designs integrate each cohort directly. Both use the same
/// 64-point rule on the same one-year panels.
pub fn cohort_probabilities(
    p: &ModelParams,
    design: &ScreeningDesign,
    ages: &[u32],
) -> Vec<CohortProbabilities> {
    let k_total = design.screens;
    if ages.is_empty() {
        return Vec::new();
    }
    if integer_aligned(design) {
        let delta = design.interval as usize;
        let max_age = *ages.iter().max().unwrap() as usize + delta * k_total;
        let table = KernelTable::new(p, max_age);
        ages.iter()
            .map(|&t0| {
                let grid = ScreenGrid::new(t0 as f64, design.interval, k_total);
                let phi = grid.sensitivities(&p.sensitivity);
                let age = |i: usize| t0 as usize + delta * i;
                let lo = |i: usize| if i == 0 { 0 } else { age(i - 1) };
                let a = |i: usize, m: usize| table.wq(lo(i), age(i), age(m));
                let detect = (1..=k_total).map(|k| detect_from_kernels(k, &phi, a)).collect();
                let interval = (1..=k_total)
                    .map(|k| interval_from_kernels(k, &phi, a, table.wf(lo(k), age(k), age(k))))
                    .collect();
                CohortProbabilities { t0, detect, interval }
            })
            .collect()
    } else {
        ages.par_iter()
            .map(|&t0| {
                let t = t0 as f64;
                let detect = (1..=k_total)
                    .map(|k| prob_screen_detect(k, t, p, design).expect("k in range"))
                    .collect();
                let interval = (1..=k_total)
                    .map(|k| prob_interval(k, t, p, design).expect("k in range"))
                    .collect();
                CohortProbabilities { t0, detect, interval }
            })
            .collect()
    }
}

/// Diagnostic dump with header `t0,k,D,I`.
pub fn write_model_dump(path: &Path, probs: &[CohortProbabilities]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "t0,k,D,I")?;
        for c in probs {
            for (k, (d, i)) in c.detect.iter().zip(&c.interval).enumerate() {
                writeln!(out, "{},{},{},{}", c.t0, k + 1, crate::fmt17(*d), crate::fmt17(*i))?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
