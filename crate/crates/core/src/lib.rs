//! Simulation and maximum-likelihood estimation for three-state
//! (healthy → preclinical → clinical) disease screening programs.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod model;
pub mod natural_history;
pub mod quadrature;
pub mod rng;
pub mod screening;
pub mod special;

pub use distributions::{Family, PreclinicalIntensity, SensitivityModel, SojournDistribution};
pub use error::{Error, Result};
pub use model::ModelParams;
pub use screening::{CountsTable, ScreeningDesign};

/// Formats with 17 significant digits, which round-trips any `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt17;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5, 69485.81, 1e-7, 3.0e20, -0.000123, 52.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt17(0.0), "0");
    }
}
