//! Gauss–Legendre rules.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Order of the fixed rule used by every likelihood integral.
pub const ORDER: usize = 64;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Nodes on [-1, 1], ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of P_n, found by Newton iteration from the
    /// Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[0, 1]`.
    pub fn unit_interval(&self) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = self.weights.iter().map(|w| 0.5 * w).collect();
        (nodes, weights)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 64-point rule.
pub fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(ORDER))
}

/// The shared rule mapped to `[0, 1]`.
pub fn unit_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static UNIT: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    UNIT.get_or_init(|| rule().unit_interval())
}

/// Composite rule: `[a, b]` split into `ceil(b - a)` equal panels of at most
/// one unit each, 64 nodes per panel.
pub fn integrate_unit_panels<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) - 1e-12).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let r = rule();
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * width;
            r.integrate(lo, lo + width, &mut f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(5);
        // ∫_0^2 x^9 dx = 2^10 / 10
        let v = gl.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((v - 102.4).abs() < 1e-11);
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let gl = rule();
        assert_eq!(gl.nodes.len(), ORDER);
        for w in gl.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..ORDER {
            assert!((gl.nodes[i] + gl.nodes[ORDER - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn composite_rule_on_smooth_integrand() {
        let v = integrate_unit_panels(0.0, 7.5, |x| (-0.3 * x).exp());
        let exact = (1.0 - (-2.25f64).exp()) / 0.3;
        assert!((v - exact).abs() < 1e-13);
        assert_eq!(integrate_unit_panels(3.0, 3.0, |_| 1.0), 0.0);
    }
}
