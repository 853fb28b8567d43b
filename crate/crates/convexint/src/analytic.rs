//! Floating-point reproductions of two smooth integral functionals on
//! truncations of the sequence spaces: `f(n, x) = 2^n x_n²` with
//! `μ({n}) = 2^{-n}`, and `f(n, x) = |x_n|^{1 + 1/n}` with `μ({n}) = 1`.

use rand::Rng;
use serde::Serialize;

pub const L2_TOLERANCE: f64 = 1e-12;
pub const L1_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticKind {
    /// `2^n x_n²`, weights `2^{-n}`.
    Squares,
    /// `|x_n|^{1+1/n}`, unit weights.
    Powers,
}

/// A separable integrand on `R^dim`, atoms numbered from 1.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticIntegrand {
    pub kind: AnalyticKind,
    pub dim: usize,
}

impl AnalyticIntegrand {
    pub fn new(kind: AnalyticKind, dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        AnalyticIntegrand { kind, dim }
    }

    pub fn weight(&self, n: usize) -> f64 {
        match self.kind {
            AnalyticKind::Squares => 2f64.powi(-(n as i32)),
            AnalyticKind::Powers => 1.0,
        }
    }

    fn exponent(n: usize) -> f64 {
        1.0 + 1.0 / n as f64
    }

    /// `f(n, x)`.
    pub fn value(&self, n: usize, x: &[f64]) -> f64 {
        let t = x[n - 1];
        match self.kind {
            AnalyticKind::Squares => 2f64.powi(n as i32) * t * t,
            AnalyticKind::Powers => t.abs().powf(Self::exponent(n)),
        }
    }

    /// `∇f(n, x)`, supported on coordinate `n`.
    pub fn gradient(&self, n: usize, x: &[f64]) -> Vec<f64> {
        let t = x[n - 1];
        let mut g = vec![0.0; self.dim];
        g[n - 1] = match self.kind {
            AnalyticKind::Squares => 2f64.powi(n as i32 + 1) * t,
            AnalyticKind::Powers => Self::exponent(n) * t.abs().powf(1.0 / n as f64) * t.signum(),
        };
        g
    }

    /// `f*(n, s)`: finite only when `s` vanishes off coordinate `n`.
    pub fn conjugate(&self, n: usize, s: &[f64]) -> f64 {
        if s.iter().enumerate().any(|(i, v)| i != n - 1 && *v != 0.0) {
            return f64::INFINITY;
        }
        let sn = s[n - 1];
        match self.kind {
            AnalyticKind::Squares => sn * sn / 2f64.powi(n as i32 + 2),
            AnalyticKind::Powers => {
                let p = Self::exponent(n);
                (p - 1.0) * (sn.abs() / p).powf(p / (p - 1.0))
            }
        }
    }

    /// `I_f(x) = Σ_n μ_n f(n, x)`.
    pub fn integral(&self, x: &[f64]) -> f64 {
        (1..=self.dim).map(|n| self.weight(n) * self.value(n, x)).sum()
    }

    /// `Σ_n μ_n ∇f(n, x)`.
    pub fn integral_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for n in 1..=self.dim {
            let w = self.weight(n);
            for (a, g) in acc.iter_mut().zip(self.gradient(n, x)) {
                *a += w * g;
            }
        }
        acc
    }

    /// Midpoint convexity of `I_f` on random pairs, with absolute slack `tol`.
    pub fn midpoint_convex<R: Rng>(&self, rng: &mut R, trials: usize, tol: f64) -> bool {
        (0..trials).all(|_| {
            let a: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let m: Vec<f64> = a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect();
            self.integral(&m) <= 0.5 * (self.integral(&a) + self.integral(&b)) + tol
        })
    }
}

/// Named measurements with a verdict; values are binary floating point.
#[derive(Clone, Debug, Serialize)]
pub struct AnalyticReport {
    pub theorem: &'static str,
    pub status: &'static str,
    pub arithmetic: &'static str,
    pub measurements: Vec<(String, f64)>,
    pub notes: Vec<&'static str>,
}

impl AnalyticReport {
    fn new(theorem: &'static str, pass: bool, measurements: Vec<(String, f64)>, notes: Vec<&'static str>) -> Self {
        AnalyticReport {
            theorem,
            status: if pass { "pass" } else { "fail" },
            arithmetic: "float",
            measurements,
            notes,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn text(&self) -> String {
        let mut out = format!("{}: {}", self.theorem, self.status);
        for (k, v) in &self.measurements {
            out.push_str(&format!("\n  {k} = {v:e}"));
        }
        out
    }
}

/// `2 Σ_{n<=d} |x_n|` for `x_n = 1/n`, summed as `Σ μ_n ‖∇f(n, x)‖`.
pub fn l2_divergence_surrogate(d: usize) -> f64 {
    let f = AnalyticIntegrand::new(AnalyticKind::Squares, d);
    let x: Vec<f64> = (1..=d).map(|n| 1.0 / n as f64).collect();
    (1..=d)
        .map(|n| f.weight(n) * f.gradient(n, &x).iter().map(|g| g.abs()).sum::<f64>())
        .sum()
}

/// Maximum of the relative value error and the max-norm gradient error
/// `‖∇I_f(x) − 2x‖_∞` at `x`.
pub fn l2_errors(x: &[f64]) -> (f64, f64) {
    let f = AnalyticIntegrand::new(AnalyticKind::Squares, x.len());
    let norm2: f64 = x.iter().map(|t| t * t).sum();
    let value_err = (f.integral(x) - norm2).abs() / norm2.max(1.0);
    let grad_err = f
        .integral_gradient(x)
        .iter()
        .zip(x)
        .map(|(g, t)| (g - 2.0 * t).abs())
        .fold(0.0, f64::max);
    (value_err, grad_err)
}

/// `I_f(x) = ‖x‖²` and `∇I_f(x) = 2x` at `x`, and growth of the
/// integrated gradient norms for `x_n = 1/n` over `d ∈ {10, 100, 1000}`.
pub fn l2_example(d: usize, x: &[f64]) -> AnalyticReport {
    assert_eq!(x.len(), d, "point must have {d} coordinates");
    let (value_err, grad_err) = l2_errors(x);
    let dims = [10usize, 100, 1000];
    let surrogates: Vec<f64> = dims.iter().map(|&n| l2_divergence_surrogate(n)).collect();
    let growing = surrogates.windows(2).all(|w| w[1] > w[0]);
    let mut measurements = vec![
        ("value_relative_error".to_string(), value_err),
        ("gradient_max_error".to_string(), grad_err),
    ];
    for (n, s) in dims.iter().zip(&surrogates) {
        measurements.push((format!("gradient_norm_integral_d{n}"), *s));
        measurements.push((format!("two_log_d{n}"), 2.0 * (*n as f64).ln()));
    }
    AnalyticReport::new(
        "l2_gradient",
        value_err < L2_TOLERANCE && grad_err < L2_TOLERANCE && growing,
        measurements,
        vec!["divergence is shown as monotone growth over truncation levels, not as a limit"],
    )
}

/// `(I_f(e_n/n) − I_f(0) − ⟨∇I_f(0), e_n/n⟩) / (1/n)`.
pub fn l1_frechet_quotient(n: usize) -> f64 {
    let f = AnalyticIntegrand::new(AnalyticKind::Powers, n);
    let h = 1.0 / n as f64;
    let mut x = vec![0.0; n];
    x[n - 1] = h;
    let zero = vec![0.0; n];
    let grad0 = f.integral_gradient(&zero);
    (f.integral(&x) - f.integral(&zero) - h * grad0[n - 1]) / h
}

/// `(I_f(h e_n) − I_f(0)) / h`.
pub fn l1_gateaux_quotient(n: usize, h: f64) -> f64 {
    let f = AnalyticIntegrand::new(AnalyticKind::Powers, n);
    let mut x = vec![0.0; n];
    x[n - 1] = h;
    (f.integral(&x) - f.integral(&vec![0.0; n])) / h
}

/// Fréchet quotients `n^{-1/n}` tending to 1 while every Gâteaux quotient
/// along a fixed `e_n` decreases to 0 with the step.
pub fn l1_example(n_max: usize) -> AnalyticReport {
    assert!(n_max >= 1, "n_max must be positive");
    let quotients: Vec<f64> = (1..=n_max).map(l1_frechet_quotient).collect();
    let max_err = quotients
        .iter()
        .enumerate()
        .map(|(i, qn)| (qn - ((i + 1) as f64).powf(-1.0 / (i + 1) as f64)).abs())
        .fold(0.0, f64::max);
    let increasing = quotients.iter().skip(2).collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0]);
    let steps = [1e-3, 1e-6, 1e-9, 1e-12];
    let gateaux_decreasing = (1..=n_max).all(|n| {
        let qs: Vec<f64> = steps.iter().map(|&h| l1_gateaux_quotient(n, h)).collect();
        qs.windows(2).all(|w| w[1] < w[0])
    });
    let gradient_at_zero = AnalyticIntegrand::new(AnalyticKind::Powers, n_max)
        .integral_gradient(&vec![0.0; n_max])
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()));
    let mut measurements = vec![
        ("frechet_quotient_max_error".to_string(), max_err),
        (format!("frechet_quotient_n{n_max}"), quotients[n_max - 1]),
        ("gradient_at_zero_max_abs".to_string(), gradient_at_zero),
    ];
    for n in [1usize, 2, 3, 10, 1000].into_iter().filter(|&n| n <= n_max) {
        measurements.push((format!("gateaux_quotient_n{n}_h1e-9"), l1_gateaux_quotient(n, 1e-9)));
    }
    AnalyticReport::new(
        "l1_frechet",
        max_err < L1_TOLERANCE && increasing && gateaux_decreasing && gradient_at_zero == 0.0,
        measurements,
        vec!["the Gateaux quotient along e_n at step h equals h^(1/n), so a fixed step only separates small n"],
    )
}
