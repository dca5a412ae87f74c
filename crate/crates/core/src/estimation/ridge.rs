//! Negative log-likelihood along a straight path in the gamma `(α, β)`
//! plane.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, SojournDistribution};
use crate::error::{Error, Result};
use crate::screening::{CountsTable, ScreeningDesign};

use super::{minimize, BfgsOptions, Layout, ModelConstants, ParameterVector, PreparedCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RidgeMode {
    /// Non-sojourn parameters stay at the fitted values.
    #[default]
    Held,
    /// Non-sojourn parameters are re-optimized at every point.
    Reoptimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub neg_log_lik: f64,
}

/// Evaluates the objective at `(α₀ + i·dα, β₀ + i·dβ)` for `i < count`.
#[allow(clippy::too_many_arguments)]
pub fn ridge_scan(
    counts: &CountsTable,
    design: &ScreeningDesign,
    theta_hat: &ParameterVector,
    constants: &ModelConstants,
    start: (f64, f64),
    step: (f64, f64),
    count: usize,
    mode: RidgeMode,
) -> Result<Vec<RidgePoint>> {
    if theta_hat.family() != Family::Gamma {
        return Err(Error::InvalidParameter(format!(
            "ridge scan needs a gamma fit, got {}",
            theta_hat.family()
        )));
    }
    let prepared = PreparedCounts::new(counts, design)?;
    let path = (0..count)
        .map(|i| {
            let (alpha, beta) = (start.0 + i as f64 * step.0, start.1 + i as f64 * step.1);
            SojournDistribution::gamma(alpha, beta).map(|d| (i, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(path
        .par_iter()
        .map(|&(index, sojourn)| {
            let theta = ParameterVector { sojourn, ..*theta_hat };
            let value = match mode {
                RidgeMode::Held => prepared.neg_log_likelihood(&theta.model(constants), design).value,
                RidgeMode::Reoptimize => {
                    let layout = Layout {
                        family: Family::Gamma,
                        fix_b1: theta.fix_b1,
                        free_nuisance: true,
                        free_sojourn: false,
                        base: theta.model(constants),
                        constants: *constants,
                    };
                    let f = |x: &[f64]| match layout.model(x) {
                        Some(p) => prepared.neg_log_likelihood(&p, design).value,
                        None => f64::INFINITY,
                    };
                    minimize(f, &layout.encode_theta(&theta), &BfgsOptions::default()).value
                }
            };
            let params = sojourn.params();
            RidgePoint {
                index,
                alpha: params[0],
                beta: params[1],
                neg_log_lik: value,
            }
        })
        .collect())
}

/// CSV with header `index,alpha,beta,negloglik`.
pub fn write_ridge_csv(path: &Path, points: &[RidgePoint]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "index,alpha,beta,negloglik")?;
        for p in points {
            writeln!(
                out,
                "{},{},{},{}",
                p.index,
                crate::fmt17(p.alpha),
                crate::fmt17(p.beta),
                crate::fmt17(p.neg_log_lik)
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
