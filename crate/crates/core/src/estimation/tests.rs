use super::*;
use crate::natural_history::simulate_population;
use crate::screening::{screen_population, Tabulation};

fn truth(sojourn: SojournDistribution) -> ParameterVector {
    ParameterVector {
        b0: 1.4,
        b1: 0.05,
        mu: 3.971,
        s: 0.268,
        sojourn,
        fix_b1: false,
    }
}

fn exp_truth() -> ParameterVector {
    truth(SojournDistribution::exponential(0.4).unwrap())
}

fn simulate_counts(theta: &ParameterVector, design: &ScreeningDesign, seed: u64) -> CountsTable {
    let p = theta.model(&ModelConstants::default());
    let hist = simulate_population(
        design.ages(),
        design.cohort_size,
        design.program_years(),
        &p.intensity,
        &p.sojourn,
        seed,
    )
    .unwrap();
    let out = screen_population(&hist, design, &p.sensitivity, seed, 0);
    CountsTable::from_outcomes(&out, design, Tabulation::AtRisk).unwrap()
}

fn small_design() -> ScreeningDesign {
    ScreeningDesign::new(40, 52, 4, 1.0, 3000).unwrap()
}

#[test]
fn hand_arithmetic_cell() {
    let c = CountsCell { t0: 50, k: 1, n: 10, s: 2, r: 1 };
    let mut clamps = 0;
    let v = cell_neg_log_lik(&c, 0.1, 0.05, &mut clamps);
    let expected = -(0.05f64.ln() + 2.0 * 0.1f64.ln() + 7.0 * 0.85f64.ln());
    assert!((v - expected).abs() < 1e-12);
    assert!((v - 8.739).abs() < 5e-4, "{v}");
    assert_eq!(clamps, 0);
}

#[test]
fn clamping_keeps_value_finite_and_counts_events() {
    let c = CountsCell { t0: 50, k: 1, n: 10, s: 2, r: 1 };
    let mut clamps = 0;
    let v = cell_neg_log_lik(&c, 0.0, 1.0, &mut clamps);
    assert!(v.is_finite());
    assert_eq!(clamps, 3);
}

#[test]
fn degenerate_multinomial() {
    let design = small_design();
    let theta = exp_truth();
    let cells: Vec<CountsCell> = design
        .ages()
        .flat_map(|t0| (1..=design.screens).map(move |k| CountsCell { t0, k, n: 100, s: 0, r: 0 }))
        .collect();
    let counts = CountsTable::new(cells).unwrap();
    let v = neg_log_likelihood(&theta, &counts, &design, &ModelConstants::default()).unwrap();
    let ages: Vec<u32> = design.ages().collect();
    let probs = cohort_probabilities(&theta.model(&ModelConstants::default()), &design, &ages);
    let expected: f64 = probs
        .iter()
        .flat_map(|c| c.detect.iter().zip(&c.interval).map(|(d, i)| -100.0 * (1.0 - d - i).ln()))
        .sum();
    assert!((v.value - expected).abs() < 1e-9 * expected);
}

#[test]
fn permutation_and_zero_cohort_invariance() {
    let design = small_design();
    let theta = exp_truth();
    let counts = simulate_counts(&theta, &design, 7);
    let c = ModelConstants::default();
    let base = neg_log_likelihood(&theta, &counts, &design, &c).unwrap();

    let mut reversed: Vec<CountsCell> = counts.cells().to_vec();
    reversed.reverse();
    reversed.swap(3, 11);
    let permuted = CountsTable::new(reversed).unwrap();
    assert_eq!(
        neg_log_likelihood(&theta, &permuted, &design, &c).unwrap().value.to_bits(),
        base.value.to_bits()
    );

    let mut padded: Vec<CountsCell> = counts.cells().to_vec();
    for k in 1..=design.screens {
        padded.push(CountsCell { t0: 60, k, n: 0, s: 0, r: 0 });
    }
    let padded = CountsTable::new(padded).unwrap();
    assert_eq!(
        neg_log_likelihood(&theta, &padded, &design, &c).unwrap().value.to_bits(),
        base.value.to_bits()
    );
}

#[test]
fn bound_violations_rejected() {
    let design = small_design();
    let counts = simulate_counts(&exp_truth(), &design, 3);
    let c = ModelConstants::default();
    for bad in [
        ParameterVector { mu: 4.6, ..exp_truth() },
        ParameterVector { s: 1.2, ..exp_truth() },
        ParameterVector { s: 0.0, ..exp_truth() },
        ParameterVector { fix_b1: true, ..exp_truth() },
    ] {
        assert!(neg_log_likelihood(&bad, &counts, &design, &c).is_err(), "{bad:?}");
    }
    let short = ScreeningDesign::new(40, 52, 2, 1.0, 3000).unwrap();
    assert!(matches!(
        neg_log_likelihood(&exp_truth(), &counts, &short, &c),
        Err(Error::ScreenIndex { .. })
    ));
}

#[test]
fn gradient_is_self_consistent() {
    use rand::SeedableRng;
    let design = small_design();
    let counts = simulate_counts(&exp_truth(), &design, 11);
    let prepared = PreparedCounts::new(&counts, &design).unwrap();
    let layout = Layout::full(Family::Gamma, false, ModelConstants::default());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 10 {
        // interior points near the data-generating region
        let mut x = layout.random_start(&mut rng);
        x[0] = 1.0 + rng.random::<f64>();
        x[1] = 0.1 * rng.random::<f64>();
        x[4] = (2.0 + 10.0 * rng.random::<f64>()).ln();
        x[5] = (1.0 + 4.0 * rng.random::<f64>()).ln();
        let p = layout.model(&x).unwrap();
        if prepared.neg_log_likelihood(&p, &design).clamp_events > 0 {
            continue;
        }
        let mut f = |y: &[f64]| prepared.neg_log_likelihood(&layout.model(y).unwrap(), &design).value;
        let g1 = gradient(&mut f, &x, 6e-6);
        let g2 = gradient(&mut f, &x, 2e-5);
        let scale = g1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-4 * scale, "{g1:?} vs {g2:?}");
        }
        checked += 1;
    }
}

#[test]
fn estimate_is_deterministic_across_thread_counts() {
    let design = ScreeningDesign::new(44, 50, 3, 1.0, 2000).unwrap();
    let counts = simulate_counts(&exp_truth(), &design, 21);
    let options = EstimateOptions {
        restarts: 3,
        seed: 99,
        ..EstimateOptions::default()
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| estimate(&counts, &design, Family::Exponential, &options).unwrap());
        serde_json::to_string(&r).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}

#[test]
fn fixed_b1_is_exactly_zero() {
    let design = ScreeningDesign::new(44, 50, 3, 1.0, 2000).unwrap();
    let counts = simulate_counts(&exp_truth(), &design, 4);
    let options = EstimateOptions {
        restarts: 2,
        fix_b1: true,
        information: false,
        ..EstimateOptions::default()
    };
    let r = estimate(&counts, &design, Family::Exponential, &options).unwrap();
    assert_eq!(r.theta_hat.b1, 0.0);
    assert!(r.theta_hat.fix_b1);
}

#[test]
fn no_preclinical_cases_is_not_a_clean_interior_optimum() {
    let design = ScreeningDesign::new(44, 48, 3, 1.0, 500).unwrap();
    let cells: Vec<CountsCell> = design
        .ages()
        .flat_map(|t0| (1..=3).map(move |k| CountsCell { t0, k, n: 500, s: 0, r: 0 }))
        .collect();
    let counts = CountsTable::new(cells).unwrap();
    let options = EstimateOptions {
        restarts: 2,
        information: false,
        ..EstimateOptions::default()
    };
    let r = estimate(&counts, &design, Family::Exponential, &options).unwrap();
    assert!(!r.converged || r.at_boundary, "{r:?}");
}

#[test]
fn empty_counts_rejected() {
    let design = small_design();
    let empty = CountsTable::new(Vec::new()).unwrap();
    assert!(estimate(&empty, &design, Family::Exponential, &EstimateOptions::default()).is_err());
}

#[test]
fn information_at_truth_is_positive_definite_for_exponential() {
    let design = ScreeningDesign::new(40, 64, 10, 1.0, 2000).unwrap();
    let counts = simulate_counts(&exp_truth(), &design, 8);
    let info = observed_information(&exp_truth(), &counts, &design, &ModelConstants::default()).unwrap();
    assert_eq!(info.names, ["b0", "b1", "mu", "s", "lambda"]);
    let h = &info.summary.hessian;
    assert_eq!(h, &h.transpose());
    assert!(info.summary.positive_definite, "{:?}", info.summary.eigenvalues);
    let se = info.standard_errors.unwrap();
    // delta method: se(1/λ) = se(λ)/λ²
    assert!((se["mst"] - se["lambda"] / 0.16).abs() < 1e-9 * se["mst"]);
}

#[test]
fn mst_gradient_matches_finite_differences() {
    for d in [
        SojournDistribution::gamma(6.25, 2.5).unwrap(),
        SojournDistribution::log_logistic(2.2, 4.7).unwrap(),
        SojournDistribution::exponential(0.4).unwrap(),
    ] {
        let g = mst_gradient(&d).unwrap();
        let p = d.params();
        for i in 0..p.len() {
            let h = 1e-6 * p[i];
            let mut up = p.clone();
            up[i] += h;
            let mut dn = p.clone();
            dn[i] -= h;
            let m = |q: &[f64]| SojournDistribution::from_params(d.family(), q).unwrap().mean_sojourn().unwrap();
            let fd = (m(&up) - m(&dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * fd.abs().max(1.0), "{d:?} {i}");
        }
    }
}

#[test]
fn ridge_path_has_constant_mean_and_shrinking_variance() {
    let design = small_design();
    let theta = truth(SojournDistribution::gamma(6.25, 2.5).unwrap());
    let counts = simulate_counts(&theta, &design, 2);
    let c = ModelConstants::default();
    let pts = ridge_scan(&counts, &design, &theta, &c, (1.0, 0.4), (1.0, 0.4), 12, RidgeMode::Held).unwrap();
    assert_eq!(pts.len(), 12);
    for w in pts.windows(2) {
        assert!((w[0].alpha / w[0].beta - 2.5).abs() < 1e-12);
        assert!(w[1].alpha / (w[1].beta * w[1].beta) < w[0].alpha / (w[0].beta * w[0].beta));
    }
    let direct = neg_log_likelihood(
        &ParameterVector { sojourn: SojournDistribution::gamma(5.0, 2.0).unwrap(), ..theta },
        &counts,
        &design,
        &c,
    )
    .unwrap();
    assert_eq!(pts[4].neg_log_lik, direct.value);

    let reopt = ridge_scan(&counts, &design, &theta, &c, (5.0, 2.0), (1.0, 0.4), 1, RidgeMode::Reoptimize).unwrap();
    assert!(reopt[0].neg_log_lik <= direct.value + 1e-9);

    let exp = exp_truth();
    assert!(ridge_scan(&counts, &design, &exp, &c, (1.0, 0.4), (1.0, 0.4), 3, RidgeMode::Held).is_err());
}
