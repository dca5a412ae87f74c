//! BFGS with Armijo backtracking and central-difference gradients.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Gradient max-norm fell below the tolerance.
    Gradient,
    /// No further decrease could be found along any descent direction.
    StepUnderflow,
    MaxIterations,
    /// The starting point has a non-finite objective.
    NonFiniteStart,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::Gradient | Termination::StepUnderflow)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Relative central-difference step.
    pub fd_step: f64,
    /// Cap on the max-norm of a single step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iter: 1000,
            fd_step: 6e-6,
            max_step: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.calls += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Central-difference gradient with steps `h·max(1, |x_i|)`.
pub fn gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xt = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            xt[i] = x[i] + step;
            let up = f(&xt);
            xt[i] = x[i] - step;
            let down = f(&xt);
            xt[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn minimize(f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> Minimum {
    let n = x0.len();
    let mut obj = Counted { f, calls: 0 };
    let mut x = x0.to_vec();
    let mut fx = obj.eval(&x);
    if !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            grad_norm: f64::INFINITY,
            iterations: 0,
            evaluations: obj.calls,
            termination: Termination::NonFiniteStart,
        };
    }
    let grad = |obj: &mut Counted<_>, x: &[f64]| {
        let mut g = |y: &[f64]| obj.eval(y);
        gradient(&mut g, x, opts.fd_step)
    };
    let mut g = grad(&mut obj, &x);
    // inverse Hessian approximation, row-major
    let identity = |scale: f64| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut hinv = identity(1.0);
    let mut fresh = true;
    let mut stalls = 0;
    let mut iter = 0;
    let termination = loop {
        let gnorm = max_norm(&g);
        if gnorm < opts.grad_tol {
            break Termination::Gradient;
        }
        if iter >= opts.max_iter {
            break Termination::MaxIterations;
        }
        iter += 1;

        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            hinv = identity(1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let dn = max_norm(&d);
        if dn > opts.max_step {
            let c = opts.max_step / dn;
            d.iter_mut().for_each(|v| *v *= c);
            slope *= c;
        }

        // Armijo backtracking
        let mut t = 1.0;
        let mut accepted = None;
        while t * max_norm(&d) > 1e-14 * max_norm(&x).max(1.0) {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = obj.eval(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                break Termination::StepUnderflow;
            }
            hinv = identity(1.0);
            fresh = true;
            continue;
        };

        let gn = grad(&mut obj, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;

        if decrease <= 1e-11 * fx.abs().max(1.0) {
            stalls += 1;
            if stalls >= 8 {
                break Termination::StepUnderflow;
            }
        } else {
            stalls = 0;
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                hinv = identity(sy / dot(&y, &y));
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh = false;
        }
    };
    Minimum {
        grad_norm: max_norm(&g),
        x,
        value: fx,
        iterations: iter,
        evaluations: obj.calls,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(m.termination.converged(), "{:?}", m.termination);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn quadratic_reaches_gradient_tolerance() {
        let f = |x: &[f64]| 3.0 * (x[0] - 2.0).powi(2) + 0.5 * (x[1] + 1.0).powi(2) + x[0] * x[1];
        let m = minimize(f, &[10.0, 10.0], &BfgsOptions::default());
        assert_eq!(m.termination, Termination::Gradient);
        // stationary point of the quadratic
        let (a, b) = (m.x[0], m.x[1]);
        assert!((6.0 * (a - 2.0) + b).abs() < 1e-5);
        assert!((b + 1.0 + a).abs() < 1e-5);
    }

    #[test]
    fn non_finite_start() {
        let m = minimize(|_| f64::NAN, &[0.0], &BfgsOptions::default());
        assert_eq!(m.termination, Termination::NonFiniteStart);
        assert!(!m.termination.converged());
    }

    #[test]
    fn barrier_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] > 3.0 { f64::INFINITY } else { (x[0] - 2.9).powi(2) };
        let m = minimize(f, &[0.0], &BfgsOptions::default());
        assert!(m.termination.converged());
        assert!((m.x[0] - 2.9).abs() < 1e-5);
    }
}
