//! Smooth reparameterization of the bounded parameter space.
//!
//! `mu` maps by a scaled logit onto `(3.5, 4.5)`, `s` by a logit onto
//! `(0, 1)` (with `s = 1` clamped just inside), positive sojourn parameters
//! by log, and `b0`, `b1` by identity.

use crate::distributions::{Family, SojournDistribution};
use crate::error::{Error, Result};

use super::ParameterVector;

pub const MU_LO: f64 = 3.5;
pub const MU_HI: f64 = 4.5;

/// Largest `s` representable after the logit map.
pub(crate) const S_MAX_INTERIOR: f64 = 1.0 - 1e-13;

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn mu_to_x(mu: f64) -> f64 {
    logit((mu - MU_LO) / (MU_HI - MU_LO))
}

pub(crate) fn x_to_mu(x: f64) -> f64 {
    MU_LO + (MU_HI - MU_LO) * expit(x)
}

pub(crate) fn s_to_x(s: f64) -> f64 {
    logit(s.min(S_MAX_INTERIOR))
}

pub(crate) fn x_to_s(x: f64) -> f64 {
    expit(x)
}

/// Unconstrained coordinates `[b0, b1?, x_mu, x_s, ln θ_sojourn...]`;
/// `b1` is omitted under `fix_b1`.
pub fn transform(theta: &ParameterVector) -> Vec<f64> {
    let mut x = vec![theta.b0];
    if !theta.fix_b1 {
        x.push(theta.b1);
    }
    x.push(mu_to_x(theta.mu));
    x.push(s_to_x(theta.s));
    x.extend(theta.sojourn.params().iter().map(|p| p.ln()));
    x
}

pub fn untransform(x: &[f64], family: Family, fix_b1: bool) -> Result<ParameterVector> {
    let expected = 3 + usize::from(!fix_b1) + family.arity();
    if x.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "expected {expected} unconstrained coordinates, got {}",
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cannot untransform non-finite coordinate {bad}"
        )));
    }
    let mut it = x.iter().copied();
    let b0 = it.next().unwrap();
    let b1 = if fix_b1 { 0.0 } else { it.next().unwrap() };
    let mu = x_to_mu(it.next().unwrap());
    let s = x_to_s(it.next().unwrap());
    let params: Vec<f64> = it.map(f64::exp).collect();
    let sojourn = SojournDistribution::from_params(family, &params)?;
    Ok(ParameterVector {
        b0,
        b1,
        mu,
        s,
        sojourn,
        fix_b1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn theta(mu: f64, s: f64, sojourn: SojournDistribution, fix_b1: bool) -> ParameterVector {
        ParameterVector {
            b0: 1.4,
            b1: if fix_b1 { 0.0 } else { 0.05 },
            mu,
            s,
            sojourn,
            fix_b1,
        }
    }

    #[test]
    fn midpoint_and_log_examples() {
        let t = theta(4.0, 0.5, SojournDistribution::exponential(0.4).unwrap(), false);
        let x = transform(&t);
        assert_eq!(x[2], 0.0);
        assert_eq!(x[3], 0.0);
        assert_eq!(x[4], 0.4f64.ln());
        let back = untransform(&x, Family::Exponential, false).unwrap();
        assert_eq!(back.mu, 4.0);
        assert!((back.sojourn.params()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn fixed_b1_drops_a_coordinate() {
        let t = theta(3.971, 0.268, SojournDistribution::gamma(6.25, 2.5).unwrap(), true);
        let x = transform(&t);
        assert_eq!(x.len(), 5);
        assert_eq!(untransform(&x, Family::Gamma, true).unwrap().b1, 0.0);
        assert!(untransform(&x, Family::Gamma, false).is_err());
    }

    #[test]
    fn closed_upper_bound_on_s() {
        let t = theta(4.2, 1.0, SojournDistribution::exponential(0.4).unwrap(), false);
        let back = untransform(&transform(&t), Family::Exponential, false).unwrap();
        assert!((back.s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(untransform(&[0.0, 0.0, f64::NAN, 0.0, 0.0], Family::Exponential, false).is_err());
        assert!(untransform(&[0.0, 0.0, 0.0, f64::INFINITY, 0.0], Family::Exponential, false).is_err());
    }

    fn family_strategy() -> impl Strategy<Value = (Family, Vec<f64>)> {
        prop_oneof![
            (0.01f64..20.0).prop_map(|l| (Family::Exponential, vec![l])),
            (0.05f64..5000.0, 0.05f64..2000.0).prop_map(|(a, b)| (Family::Gamma, vec![a, b])),
            (0.05f64..20.0, 0.2f64..20.0).prop_map(|(k, r)| (Family::LogLogistic, vec![k, r])),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip_within_1e12(
            b0 in -5.0f64..5.0,
            b1 in -0.5f64..0.5,
            mu in 3.5001f64..4.4999,
            s in 1e-3f64..=1.0,
            fix_b1 in any::<bool>(),
            (family, params) in family_strategy(),
        ) {
            let t = ParameterVector {
                b0,
                b1: if fix_b1 { 0.0 } else { b1 },
                mu,
                s,
                sojourn: SojournDistribution::from_params(family, &params).unwrap(),
                fix_b1,
            };
            let back = untransform(&transform(&t), family, fix_b1).unwrap();
            prop_assert!((back.b0 - t.b0).abs() < 1e-12);
            prop_assert!((back.b1 - t.b1).abs() < 1e-12);
            prop_assert!((back.mu - t.mu).abs() < 1e-12);
            prop_assert!((back.s - t.s).abs() < 1e-12);
            for (a, b) in back.sojourn.params().iter().zip(t.sojourn.params()) {
                prop_assert!((a - b).abs() < 1e-12 * b.max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
