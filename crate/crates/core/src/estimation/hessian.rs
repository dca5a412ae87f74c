//! Observed information by central finite differences and its eigen
//! diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};

/// Relative eigenvalue threshold below which an eigenvalue counts as zero.
pub const NEAR_ZERO_RELATIVE: f64 = 1e-8;

/// Per-parameter step `max(1e-4·|θ|, 1e-5)`.
pub fn hessian_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| (1e-4 * t.abs()).max(1e-5)).collect()
}

/// Central finite-difference Hessian. Entries whose stencil produced a
/// non-finite value are reported in the second return value.
pub fn finite_difference_hessian(
    f: &mut impl FnMut(&[f64]) -> f64,
    theta: &[f64],
    steps: &[f64],
) -> (DMatrix<f64>, Vec<(usize, usize)>) {
    let n = theta.len();
    let mut h = DMatrix::zeros(n, n);
    let mut bad = Vec::new();
    let mut x = theta.to_vec();
    let f0 = f(&x);
    for i in 0..n {
        let hi = steps[i];
        x[i] = theta[i] + hi;
        let up = f(&x);
        x[i] = theta[i] - hi;
        let down = f(&x);
        x[i] = theta[i];
        let v = (up - 2.0 * f0 + down) / (hi * hi);
        if !v.is_finite() {
            bad.push((i, i));
        }
        h[(i, i)] = v;
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                x[i] = theta[i] + si * hi;
                x[j] = theta[j] + sj * hj;
                let v = f(&x);
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * hi * hj);
            if !v.is_finite() {
                bad.push((i, j));
            }
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (h, bad)
}

#[derive(Debug, Clone)]
pub struct InformationSummary {
    pub hessian: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub positive_definite: bool,
    pub near_zero: usize,
    /// Inverse Hessian, only when positive definite.
    pub covariance: Option<DMatrix<f64>>,
    pub non_finite_entries: Vec<(usize, usize)>,
}

/// Eigen-decomposes a symmetric Hessian. An eigenvalue is near zero when
/// it does not exceed `NEAR_ZERO_RELATIVE` times the largest one (negative
/// eigenvalues included).
pub fn summarize(hessian: DMatrix<f64>, non_finite_entries: Vec<(usize, usize)>) -> InformationSummary {
    if !non_finite_entries.is_empty() {
        let n = hessian.nrows();
        return InformationSummary {
            hessian,
            eigenvalues: vec![f64::NAN; n],
            positive_definite: false,
            near_zero: 0,
            covariance: None,
            non_finite_entries,
        };
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(hessian.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = NEAR_ZERO_RELATIVE * max.max(0.0);
    let near_zero = eigenvalues.iter().filter(|&&e| e <= threshold).count();
    let positive_definite = max > 0.0 && near_zero == 0;
    let covariance = if positive_definite {
        hessian.clone().cholesky().map(|c| c.inverse())
    } else {
        None
    };
    InformationSummary {
        positive_definite: covariance.is_some(),
        hessian,
        eigenvalues,
        near_zero,
        covariance,
        non_finite_entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_form() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let mut f = |x: &[f64]| {
            let v = DMatrix::from_column_slice(3, 1, x);
            0.5 * (v.transpose() * &a * &v)[(0, 0)]
        };
        let theta = [0.3, -1.2, 2.0];
        let (h, bad) = finite_difference_hessian(&mut f, &theta, &hessian_steps(&theta));
        assert!(bad.is_empty());
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - a[(i, j)]).abs() <= 1e-6 * a[(i, j)].abs().max(1.0), "{i}{j}");
            }
        }
        let s = summarize(h, bad);
        assert!(s.positive_definite);
        let cov = s.covariance.unwrap();
        let id = &cov * &a;
        for i in 0..3 {
            assert!((id[(i, i)] - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn flat_direction_is_flagged() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = summarize(h, Vec::new());
        assert!(!s.positive_definite);
        assert_eq!(s.near_zero, 1);
        assert!(s.covariance.is_none());
    }

    #[test]
    fn non_finite_entries_reported() {
        let mut f = |x: &[f64]| if x[1] > 1.0 { f64::INFINITY } else { x[0] * x[0] };
        let (h, bad) = finite_difference_hessian(&mut f, &[0.0, 1.0], &[1e-3, 1e-3]);
        assert!(bad.contains(&(1, 1)));
        assert!(!summarize(h, bad).positive_definite);
    }
}
