//! Parametric ingredients of the three-state model: sojourn-time families,
//! the preclinical intensity sub-density, and the age-dependent screening
//! sensitivity.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// Sojourn-time family names, used to choose the fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Exponential,
    Gamma,
    #[serde(alias = "loglogistic")]
    LogLogistic,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Exponential, Family::Gamma, Family::LogLogistic];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::LogLogistic => "log-logistic",
        }
    }

    /// Number of free sojourn parameters.
    pub fn arity(self) -> usize {
        match self {
            Family::Exponential => 1,
            Family::Gamma | Family::LogLogistic => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Exponential => &["lambda"],
            Family::Gamma => &["alpha", "beta"],
            Family::LogLogistic => &["kappa", "rho"],
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(Family::Exponential),
            "gamma" => Ok(Family::Gamma),
            "log-logistic" | "loglogistic" | "ll" => Ok(Family::LogLogistic),
            other => Err(Error::InvalidParameter(format!(
                "unknown sojourn family '{other}' (expected exponential, gamma or log-logistic)"
            ))),
        }
    }
}

/// Distribution of the time spent in the preclinical state, in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SojournDistribution {
    Exponential {
        lambda: f64,
    },
    /// Shape `alpha`, rate `beta` (1/years).
    Gamma { alpha: f64, beta: f64 },
    /// Survivor `1 / (1 + (t/kappa)^rho)`; `kappa` is the scale in years.
    #[serde(alias = "loglogistic")]
    LogLogistic { kappa: f64, rho: f64 },
}

impl SojournDistribution {
    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::Exponential { lambda }.validated()
    }

    pub fn gamma(alpha: f64, beta: f64) -> Result<Self> {
        Self::Gamma { alpha, beta }.validated()
    }

    pub fn log_logistic(kappa: f64, rho: f64) -> Result<Self> {
        Self::LogLogistic { kappa, rho }.validated()
    }

    /// Builds a member of `family` from its parameter slice, in the order
    /// given by [`Family::param_names`].
    pub fn from_params(family: Family, params: &[f64]) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameter(s), got {}",
                family.arity(),
                params.len()
            )));
        }
        match family {
            Family::Exponential => Self::exponential(params[0]),
            Family::Gamma => Self::gamma(params[0], params[1]),
            Family::LogLogistic => Self::log_logistic(params[0], params[1]),
        }
    }

    pub fn validated(self) -> Result<Self> {
        let ok = self.params().iter().all(|p| p.is_finite() && *p > 0.0);
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!(
                "{} parameters must be finite and positive: {:?}",
                self.family(),
                self.params()
            )))
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Exponential { .. } => Family::Exponential,
            Self::Gamma { .. } => Family::Gamma,
            Self::LogLogistic { .. } => Family::LogLogistic,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Exponential { lambda } => vec![lambda],
            Self::Gamma { alpha, beta } => vec![alpha, beta],
            Self::LogLogistic { kappa, rho } => vec![kappa, rho],
        }
    }

    /// `Q(t)`, the probability that the sojourn exceeds `t`.
    pub fn survivor(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("survivor requires t >= 0, got {t}")));
        }
        Ok(self.sf(t))
    }

    /// Unchecked survivor; `t <= 0` yields 1.
    #[inline]
    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { lambda } => (-lambda * t).exp(),
            Self::Gamma { alpha, beta } => special::gamma_q(alpha, beta * t),
            Self::LogLogistic { kappa, rho } => 1.0 / (1.0 + (t / kappa).powf(rho)),
        }
    }

    /// `1 - Q(t)` computed without cancellation; `t <= 0` yields 0.
    #[inline]
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { lambda } => -(-lambda * t).exp_m1(),
            Self::Gamma { alpha, beta } => special::gamma_p(alpha, beta * t),
            Self::LogLogistic { kappa, rho } => {
                let r = (t / kappa).powf(rho);
                if r.is_infinite() {
                    1.0
                } else {
                    r / (1.0 + r)
                }
            }
        }
    }

    /// `(Q(t), 1 - Q(t))` with one incomplete-gamma evaluation.
    #[inline]
    pub fn sf_cdf(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Gamma { alpha, beta } if t > 0.0 => {
                let (p, q) = special::regularized_gamma(alpha, beta * t);
                (q, p)
            }
            _ => (self.sf(t), self.cdf(t)),
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { lambda } => lambda * (-lambda * t).exp(),
            Self::Gamma { alpha, beta } => {
                if t == 0.0 {
                    return match alpha.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => beta,
                        _ => 0.0,
                    };
                }
                (alpha * beta.ln() + (alpha - 1.0) * t.ln() - beta * t - special::ln_gamma_fn(alpha))
                    .exp()
            }
            Self::LogLogistic { kappa, rho } => {
                let z = t / kappa;
                let r = z.powf(rho);
                (rho / kappa) * z.powf(rho - 1.0) / ((1.0 + r) * (1.0 + r))
            }
        }
    }

    /// Mean sojourn time (MST) in years.
    pub fn mean_sojourn(&self) -> Result<f64> {
        match *self {
            Self::Exponential { lambda } => Ok(1.0 / lambda),
            Self::Gamma { alpha, beta } => Ok(alpha / beta),
            Self::LogLogistic { kappa, rho } => {
                if rho <= 1.0 {
                    Err(Error::MeanUndefined { rho })
                } else {
                    let b = PI / rho;
                    Ok(kappa * b / b.sin())
                }
            }
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match *self {
            Self::Exponential { lambda } => Some(1.0 / (lambda * lambda)),
            Self::Gamma { alpha, beta } => Some(alpha / (beta * beta)),
            Self::LogLogistic { kappa, rho } => {
                if rho <= 2.0 {
                    return None;
                }
                let b = PI / rho;
                Some(kappa * kappa * (2.0 * b / (2.0 * b).sin() - b * b / (b.sin() * b.sin())))
            }
        }
    }

    /// The `t` with `1 - Q(t) = p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile requires 0 < p < 1, got {p}")));
        }
        Ok(match *self {
            Self::Exponential { lambda } => -(-p).ln_1p() / lambda,
            Self::LogLogistic { kappa, rho } => kappa * (p / (1.0 - p)).powf(1.0 / rho),
            Self::Gamma { .. } => self.bisect_quantile(p),
        })
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        let target = 1.0 - p;
        let mut hi = self.mean_sojourn().unwrap_or(1.0).max(1e-8);
        while self.sf(hi) > target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if self.sf(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// One draw: inverse CDF for exponential and log-logistic,
    /// shape–rate gamma sampling otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { lambda } => -(1.0 - rng.random::<f64>()).ln() / lambda,
            Self::LogLogistic { kappa, rho } => {
                let u: f64 = rng.random();
                kappa * (u / (1.0 - u)).powf(1.0 / rho)
            }
            Self::Gamma { alpha, beta } => Gamma::new(alpha, 1.0 / beta)
                .expect("validated gamma parameters")
                .sample(rng),
        }
    }
}

/// Age density of the transition into the preclinical state. It integrates
/// to the lifetime risk rather than to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreclinicalIntensity {
    /// `risk × LogNormal(mu, s)` density in age.
    LogNormal { mu: f64, s: f64, risk: f64 },
    /// Constant rate per person-year.
    Constant { rate: f64 },
}

impl PreclinicalIntensity {
    pub fn log_normal(mu: f64, s: f64, risk: f64) -> Result<Self> {
        Self::LogNormal { mu, s, risk }.validated()
    }

    pub fn constant(rate: f64) -> Result<Self> {
        Self::Constant { rate }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::LogNormal { mu, s, risk } => {
                if !mu.is_finite() || !(s > 0.0 && s.is_finite()) || !(0.0..=1.0).contains(&risk) {
                    return Err(Error::InvalidParameter(format!(
                        "log-normal intensity needs finite mu, s > 0, risk in [0, 1]: mu={mu} s={s} risk={risk}"
                    )));
                }
            }
            Self::Constant { rate } => {
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "constant intensity rate must be finite and >= 0, got {rate}"
                    )));
                }
            }
        }
        Ok(self)
    }

    /// `w(t)` in 1/years.
    pub fn intensity(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Domain(format!("intensity requires t > 0, got {t}")));
        }
        Ok(self.density(t))
    }

    /// Unchecked `w(t)`; zero for `t <= 0`.
    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::LogNormal { mu, s, risk } => {
                let z = (t.ln() - mu) / s;
                risk / (t * s * (2.0 * PI).sqrt()) * (-0.5 * z * z).exp()
            }
            Self::Constant { rate } => rate,
        }
    }

    /// `∫_{t1}^{t2} w(x) dx` in closed form.
    pub fn integral(&self, t1: f64, t2: f64) -> Result<f64> {
        if t1.is_nan() || t2.is_nan() || t1 < 0.0 || t2 < t1 {
            return Err(Error::Domain(format!(
                "intensity integral requires 0 <= t1 <= t2, got ({t1}, {t2})"
            )));
        }
        Ok(self.cumulative(t2) - self.cumulative(t1))
    }

    /// `∫_0^t w(x) dx`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::LogNormal { mu, s, risk } => {
                if t.is_infinite() {
                    return risk;
                }
                risk * special::normal_cdf((t.ln() - mu) / s)
            }
            Self::Constant { rate } => rate * t,
        }
    }

    /// Probability mass of onset in `[t1, t2)` for a Bernoulli grid step.
    ///
    /// Upper-tail differences are taken on the complementary CDF so steps
    /// far above the median keep their precision.
    pub(crate) fn step_mass(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            Self::LogNormal { mu, s, risk } => {
                let lo = if t1 <= 0.0 { f64::NEG_INFINITY } else { (t1.ln() - mu) / s };
                let hi = (t2.ln() - mu) / s;
                if lo > 0.0 {
                    risk * (special::normal_cdf(-lo) - special::normal_cdf(-hi))
                } else {
                    risk * (special::normal_cdf(hi) - special::normal_cdf(lo))
                }
            }
            Self::Constant { rate } => rate * (t2 - t1),
        }
    }
}

/// Logistic screening sensitivity `1 / (1 + exp(-b0 - b1 (t - tbar)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityModel {
    pub b0: f64,
    pub b1: f64,
    pub tbar: f64,
}

impl SensitivityModel {
    pub fn new(b0: f64, b1: f64, tbar: f64) -> Result<Self> {
        if !(b0.is_finite() && b1.is_finite() && tbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sensitivity parameters must be finite: b0={b0} b1={b1} tbar={tbar}"
            )));
        }
        Ok(Self { b0, b1, tbar })
    }

    /// Age-independent sensitivity `phi`.
    pub fn constant(phi: f64, tbar: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "constant sensitivity must lie in (0, 1), got {phi}"
            )));
        }
        Self::new((phi / (1.0 - phi)).ln(), 0.0, tbar)
    }

    /// `Φ(t)`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        1.0 / (1.0 + (-self.b0 - self.b1 * (t - self.tbar)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<SojournDistribution> {
        vec![
            SojournDistribution::exponential(0.4).unwrap(),
            SojournDistribution::gamma(6.25, 2.5).unwrap(),
            SojournDistribution::log_logistic(2.2, 4.7).unwrap(),
            SojournDistribution::gamma(0.7, 0.3).unwrap(),
            SojournDistribution::log_logistic(1.3, 1.6).unwrap(),
        ]
    }

    fn paper_intensity() -> PreclinicalIntensity {
        PreclinicalIntensity::log_normal(3.971, 0.268, 0.15).unwrap()
    }

    #[test]
    fn survivor_reference_values() {
        for d in families() {
            assert_eq!(d.survivor(0.0).unwrap(), 1.0);
        }
        let e = SojournDistribution::exponential(0.4).unwrap();
        assert!((e.survivor(2.5).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let ll = SojournDistribution::log_logistic(2.2, 4.7).unwrap();
        assert!((ll.survivor(2.2).unwrap() - 0.5).abs() < 1e-15);
        assert!(e.survivor(-0.1).is_err());
    }

    #[test]
    fn survivor_is_monotone_and_vanishes() {
        for d in families() {
            let mut prev = 1.0;
            for i in 1..2000 {
                let q = d.sf(i as f64 * 0.05);
                assert!(q <= prev + 1e-15);
                prev = q;
            }
            assert!(d.sf(1e6) < 1e-6);
        }
    }

    #[test]
    fn density_is_negative_survivor_derivative() {
        for d in families() {
            for &t in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
                let h = 1e-5;
                let fd = -(d.sf(t + h) - d.sf(t - h)) / (2.0 * h);
                assert!((fd - d.density(t)).abs() < 1e-6, "{d:?} t={t} fd={fd} pdf={}", d.density(t));
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for d in families() {
            let upper = d.quantile(1.0 - 1e-10).unwrap();
            // the gamma(0.7) density is singular at zero: integrate a tiny
            // head panel on the sqrt scale
            let head = crate::quadrature::rule().integrate(0.0, 1e-3f64.sqrt(), |u| 2.0 * u * d.density(u * u));
            let body = crate::quadrature::integrate_unit_panels(1e-3, upper, |t| d.density(t));
            assert!((head + body - 1.0).abs() < 2e-6, "{d:?} {}", head + body);
        }
    }

    #[test]
    fn mean_sojourn_per_family() {
        assert_eq!(SojournDistribution::gamma(6.25, 2.5).unwrap().mean_sojourn().unwrap(), 2.5);
        assert_eq!(SojournDistribution::exponential(0.4).unwrap().mean_sojourn().unwrap(), 2.5);
        let ll = SojournDistribution::log_logistic(2.2, 4.7).unwrap().mean_sojourn().unwrap();
        assert!((ll - 2.372).abs() < 1e-3, "{ll}");
        // quadrature oracle: E[J] = ∫ Q
        let d = SojournDistribution::log_logistic(2.2, 4.7).unwrap();
        let oracle = crate::quadrature::integrate_unit_panels(0.0, 4000.0, |t| d.sf(t));
        assert!((oracle - ll).abs() < 1e-6, "{oracle} vs {ll}");
        assert!(matches!(
            SojournDistribution::log_logistic(2.0, 1.0).unwrap().mean_sojourn(),
            Err(Error::MeanUndefined { .. })
        ));
    }

    #[test]
    fn quantile_round_trips() {
        for d in families() {
            for &p in &[0.01, 0.5, 0.99, 0.9999] {
                let x = d.quantile(p).unwrap();
                assert!((d.sf(x) - (1.0 - p)).abs() < 1e-9, "{d:?} p={p}");
            }
        }
        let e = SojournDistribution::exponential(0.4).unwrap();
        assert!((e.quantile(0.9999).unwrap() - 23.025850929940457).abs() < 1e-9);
        assert!(e.quantile(0.0).is_err());
        assert!(e.quantile(1.0).is_err());
    }

    #[test]
    fn gamma_quantile_matches_bisection_oracle() {
        let d = SojournDistribution::gamma(6.25, 2.5).unwrap();
        // oracle: plain bisection on the reference lower incomplete gamma
        let (mut lo, mut hi) = (0.0f64, 50.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if statrs::function::gamma::gamma_lr(6.25, 2.5 * mid) < 0.9999 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = d.quantile(0.9999).unwrap();
        assert!((x - lo).abs() < 1e-9 * lo, "{x} vs {lo}");
    }

    #[test]
    fn gamma_unit_shape_nests_exponential() {
        let g = SojournDistribution::gamma(1.0, 0.4).unwrap();
        let e = SojournDistribution::exponential(0.4).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.13;
            assert!((g.sf(t) - e.sf(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_moments_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = SojournDistribution::gamma(6.25, 2.5).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| g.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 0.01, "{mean}");

        let ll = SojournDistribution::log_logistic(2.2, 4.7).unwrap();
        let above = (0..n).filter(|_| ll.sample(&mut rng) > 2.2).count() as f64 / n as f64;
        assert!((above - 0.5).abs() < 0.005, "{above}");

        for d in families() {
            assert!((0..10_000).all(|_| d.sample(&mut rng) >= 0.0));
        }
    }

    #[test]
    fn empirical_cdf_max_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in families() {
            let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let dmax = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = d.cdf(x);
                    (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max);
            assert!(dmax < 0.01, "{d:?} D={dmax}");
        }
    }

    #[test]
    fn intensity_normalisation_and_median() {
        let w = paper_intensity();
        let total = crate::quadrature::integrate_unit_panels(0.0, 200.0, |t| w.density(t));
        assert!((total - 0.15).abs() < 1e-3);
        let median = 3.971f64.exp();
        let expected = 0.15 / (median * 0.268 * (2.0 * PI).sqrt());
        assert!((w.intensity(median).unwrap() - expected).abs() < 1e-15);
        assert!(w.intensity(0.0).is_err());
        assert!(w.intensity(-1.0).is_err());
        assert!(w.density(1e-9) >= 0.0);
    }

    #[test]
    fn intensity_mode_by_grid_search() {
        let w = paper_intensity();
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 1..200_000 {
            let t = i as f64 * 5e-4;
            let v = w.density(t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        let mode = (3.971f64 - 0.268f64 * 0.268).exp();
        assert!((best_t - mode).abs() < 1e-3, "{best_t} vs {mode}");
    }

    #[test]
    fn intensity_integral_properties() {
        let w = paper_intensity();
        assert_eq!(w.integral(50.0, 50.0).unwrap(), 0.0);
        assert!((w.integral(0.0, f64::INFINITY).unwrap() - 0.15).abs() < 1e-15);
        let (a, b, c) = (31.5, 47.25, 70.0);
        let lhs = w.integral(a, b).unwrap() + w.integral(b, c).unwrap();
        assert!((lhs - w.integral(a, c).unwrap()).abs() < 1e-12);
        assert!(w.integral(5.0, 4.0).is_err());
        let mut prev = 0.0;
        for i in 0..300 {
            let v = w.integral(0.0, i as f64).unwrap();
            assert!(v >= prev && v <= 0.15);
            prev = v;
        }
        // against quadrature of the density
        let q = crate::quadrature::integrate_unit_panels(40.0, 64.0, |t| w.density(t));
        assert!((q - w.integral(40.0, 64.0).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn step_mass_matches_integral() {
        let w = paper_intensity();
        for &(a, b) in &[(0.0, 0.01), (40.0, 40.01), (90.0, 90.01), (120.0, 121.0)] {
            let exact = w.integral(a, b).unwrap();
            assert!((w.step_mass(a, b) - exact).abs() <= 1e-15 + 1e-9 * exact);
        }
        let c = PreclinicalIntensity::constant(0.002).unwrap();
        assert!((c.integral(12.5, 20.0).unwrap() - 0.015).abs() < 1e-15);
    }

    #[test]
    fn sensitivity_properties() {
        let m = SensitivityModel::new(1.4, 0.05, 52.0).unwrap();
        assert!((m.at(52.0) - 0.8021838885585817).abs() < 1e-12);
        let flat = SensitivityModel::new(1.4, 0.0, 52.0).unwrap();
        for t in [0.0, 40.0, 64.0, 100.0] {
            assert_eq!(flat.at(t), flat.at(52.0));
        }
        let mut prev = 0.0;
        for i in 0..100 {
            let v = m.at(20.0 + i as f64);
            assert!(v > prev && v < 1.0);
            prev = v;
        }
        let c = SensitivityModel::constant(0.58, 55.0).unwrap();
        assert!((c.at(12.0) - 0.58).abs() < 1e-15);
    }

    #[test]
    fn json_shapes() {
        let g: SojournDistribution =
            serde_json::from_str(r#"{"family":"gamma","alpha":6.25,"beta":2.5}"#).unwrap();
        assert_eq!(g, SojournDistribution::Gamma { alpha: 6.25, beta: 2.5 });
        let ll: SojournDistribution =
            serde_json::from_str(r#"{"family":"log-logistic","kappa":2.2,"rho":4.7}"#).unwrap();
        assert_eq!(ll.family(), Family::LogLogistic);
        let w: PreclinicalIntensity =
            serde_json::from_str(r#"{"mu":3.971,"s":0.268,"risk":0.15}"#).unwrap();
        assert_eq!(w, paper_intensity());
        let c: PreclinicalIntensity = serde_json::from_str(r#"{"rate":0.002}"#).unwrap();
        assert_eq!(c, PreclinicalIntensity::Constant { rate: 0.002 });
        let m: SensitivityModel = serde_json::from_str(r#"{"b0":1.4,"b1":0.05,"tbar":52}"#).unwrap();
        assert_eq!(m.tbar, 52.0);
        let back = serde_json::to_string(&g).unwrap();
        assert_eq!(back, r#"{"family":"gamma","alpha":6.25,"beta":2.5}"#);
    }
}
