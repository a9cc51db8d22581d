//! Bratu trial function, residual and cost.
//!
//! The trial solution is `u(x) = u_pred(x) + s x (1 - x) u_q(x; theta)`. Its
//! second derivative comes from a central difference with a stencil step `h`
//! that is independent of the collocation grid `x_i = i / (N + 1)`, and the cost
//! is the mean of the squared residual `u'' + lambda e^u` over the grid.

use serde::{Deserialize, Serialize};

use crate::ansatz::{evaluate_uq, value_and_gradient_uq, CircuitWeights};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Trial values above this are treated as a diverged solve.
pub const DIVERGENCE_GUARD: f64 = 50.0;

/// Largest admissible stencil step.
pub const MAX_STENCIL_H: f64 = 0.01;

/// Interpolated predictor `u_pred(x)` built from samples of a previous solution.
///
/// Samples are joined by a cubic spline whose end second derivatives are
/// prescribed. A piecewise-linear interpolant cannot be used here: its kinks sit
/// on the collocation points, and a stencil of width `h` straddling a kink reads
/// the slope jump as a curvature of order `jump / h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorFunction {
    xs: Vec<f64>,
    us: Vec<f64>,
    curvature: Vec<f64>,
}

impl PredictorFunction {
    /// `u_pred = 0`.
    pub fn zero() -> Self {
        Self { xs: vec![0.0, 1.0], us: vec![0.0, 0.0], curvature: vec![0.0, 0.0] }
    }

    /// Spline through `(xs, us)` with `u''(0) = end_curvature[0]` and
    /// `u''(1) = end_curvature[1]`. The samples must span `[0, 1]` with
    /// strictly increasing abscissae; boundary values are clamped to zero.
    pub fn from_samples(xs: Vec<f64>, mut us: Vec<f64>, end_curvature: [f64; 2]) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidPredictor(msg.to_string()));
        if xs.len() != us.len() {
            return bad("sample abscissae and values differ in length");
        }
        if xs.len() < 2 {
            return bad("need at least two samples");
        }
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return bad("samples must start at 0 and end at 1");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample abscissae must be strictly increasing");
        }
        if us.iter().chain(&end_curvature).any(|u| !u.is_finite()) {
            return Err(Error::NonFinite("predictor samples"));
        }
        let last = us.len() - 1;
        us[0] = 0.0;
        us[last] = 0.0;

        let m = xs.len();
        let mut curvature = vec![0.0; m];
        curvature[0] = end_curvature[0];
        curvature[last] = end_curvature[1];
        if m > 2 {
            let k = m - 2;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                lower[j] = h0;
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((us[i + 1] - us[i]) / h1 - (us[i] - us[i - 1]) / h0);
            }
            rhs[0] -= lower[0] * curvature[0];
            rhs[k - 1] -= upper[k - 1] * curvature[last];
            let interior = Tridiagonal::new(lower, diag, upper)
                .solve(&rhs)
                .map_err(|_| Error::InvalidPredictor("spline system is singular".into()))?;
            curvature[1..=k].copy_from_slice(&interior);
        }
        Ok(Self { xs, us, curvature })
    }

    pub fn sample_xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn sample_us(&self) -> &[f64] {
        &self.us
    }

    pub fn is_zero(&self) -> bool {
        self.us.iter().all(|&u| u == 0.0) && self.curvature.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let i = self.xs.partition_point(|&xi| xi <= x) - 1;
        let i = i.min(self.xs.len() - 2);
        let width = self.xs[i + 1] - self.xs[i];
        let b = (x - self.xs[i]) / width;
        let a = 1.0 - b;
        a * self.us[i]
            + b * self.us[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * width * width
                / 6.0
    }
}

impl Default for PredictorFunction {
    fn default() -> Self {
        Self::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scale_s: f64,
    pub predictor: PredictorFunction,
    pub lambda: f64,
    pub stencil_h: f64,
    pub grid_n: usize,
}

impl TrialConfig {
    pub fn new(lambda: f64, scale_s: f64, stencil_h: f64, grid_n: usize) -> Result<Self> {
        let cfg = Self { scale_s, predictor: PredictorFunction::zero(), lambda, stencil_h, grid_n };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_predictor(mut self, predictor: PredictorFunction) -> Self {
        self.predictor = predictor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.scale_s.is_finite() && self.scale_s >= 0.0) {
            return bad(format!("scale s must be finite and non-negative, got {}", self.scale_s));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.grid_n < 3 {
            return bad(format!("need at least 3 collocation points, got {}", self.grid_n));
        }
        if !(self.stencil_h > 0.0 && self.stencil_h <= MAX_STENCIL_H) {
            return bad(format!("stencil step must lie in (0, {MAX_STENCIL_H}], got {}", self.stencil_h));
        }
        if self.stencil_h > 1.0 / (self.grid_n + 1) as f64 {
            return bad(format!(
                "stencil step {} reaches past the boundary from the outermost of {} collocation points",
                self.stencil_h, self.grid_n
            ));
        }
        Ok(())
    }

    /// Interior collocation points `i / (N + 1)` for `i = 1..=N`.
    pub fn grid(&self) -> Vec<f64> {
        collocation_grid(self.grid_n)
    }
}

pub fn collocation_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// `u_pred(x) + s x (1 - x) u_q(x; theta)`.
pub fn trial(x: f64, weights: &CircuitWeights, cfg: &TrialConfig) -> Result<f64> {
    let uq = evaluate_uq(x, weights)?;
    Ok(cfg.predictor.eval(x) + envelope(x, cfg.scale_s) * uq)
}

fn envelope(x: f64, s: f64) -> f64 {
    s * x * (1.0 - x)
}

fn check_stencil(x: f64, h: f64) -> Result<()> {
    if x - h < 0.0 || x + h > 1.0 || x.is_nan() {
        Err(Error::StencilOutsideDomain { x, h })
    } else {
        Ok(())
    }
}

fn check_divergence(u: f64) -> Result<()> {
    if u > DIVERGENCE_GUARD || u.is_nan() {
        Err(Error::Divergence(u))
    } else {
        Ok(())
    }
}

/// Central difference `(u(x+h) - 2u(x) + u(x-h)) / h^2` of the trial.
pub fn second_derivative(x: f64, weights: &CircuitWeights, cfg: &TrialConfig) -> Result<f64> {
    let h = cfg.stencil_h;
    check_stencil(x, h)?;
    let minus = trial(x - h, weights, cfg)?;
    let centre = trial(x, weights, cfg)?;
    let plus = trial(x + h, weights, cfg)?;
    Ok((plus - 2.0 * centre + minus) / (h * h))
}

pub fn residual(x: f64, weights: &CircuitWeights, cfg: &TrialConfig) -> Result<f64> {
    let h = cfg.stencil_h;
    check_stencil(x, h)?;
    let vals = [trial(x - h, weights, cfg)?, trial(x, weights, cfg)?, trial(x + h, weights, cfg)?];
    for &u in &vals {
        check_divergence(u)?;
    }
    Ok((vals[2] - 2.0 * vals[1] + vals[0]) / (h * h) + cfg.lambda * vals[1].exp())
}

/// Mean of `R(x_i)^2` over `grid`.
pub fn cost(weights: &CircuitWeights, cfg: &TrialConfig, grid: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &x in grid {
        sum += residual(x, weights, cfg)?.powi(2);
    }
    Ok(sum / grid.len() as f64)
}

/// Exact gradient of [`cost`] with respect to the circuit weights.
pub fn cost_gradient(weights: &CircuitWeights, cfg: &TrialConfig, grid: &[f64]) -> Result<Vec<f64>> {
    CostEvaluator::new(cfg, grid)?.cost_and_gradient(weights).map(|(_, g)| g)
}

/// Cost and gradient in one pass, reusing one circuit evaluation per stencil point.
pub fn cost_and_gradient(weights: &CircuitWeights, cfg: &TrialConfig, grid: &[f64]) -> Result<(f64, Vec<f64>)> {
    CostEvaluator::new(cfg, grid)?.cost_and_gradient(weights)
}

/// Per-point data that stays fixed while the weights change.
#[derive(Debug, Clone)]
struct StencilPoint {
    xs: [f64; 3],
    predictor: [f64; 3],
    envelope: [f64; 3],
}

/// Cost evaluation with the stencil geometry and predictor values cached, for
/// repeated evaluation at one configuration during training.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    points: Vec<StencilPoint>,
    lambda: f64,
    h: f64,
}

impl CostEvaluator {
    pub fn new(cfg: &TrialConfig, grid: &[f64]) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.stencil_h;
        let points = grid
            .iter()
            .map(|&x| {
                check_stencil(x, h)?;
                let xs = [x - h, x, x + h];
                Ok(StencilPoint {
                    xs,
                    predictor: xs.map(|y| cfg.predictor.eval(y)),
                    envelope: xs.map(|y| envelope(y, cfg.scale_s)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, lambda: cfg.lambda, h })
    }

    pub fn cost(&self, weights: &CircuitWeights) -> Result<f64> {
        let mut sum = 0.0;
        for p in &self.points {
            let mut u = [0.0; 3];
            for k in 0..3 {
                u[k] = p.predictor[k] + p.envelope[k] * evaluate_uq(p.xs[k], weights)?;
                check_divergence(u[k])?;
            }
            let r = (u[2] - 2.0 * u[1] + u[0]) / (self.h * self.h) + self.lambda * u[1].exp();
            sum += r * r;
        }
        Ok(sum / self.points.len() as f64)
    }

    pub fn cost_and_gradient(&self, weights: &CircuitWeights) -> Result<(f64, Vec<f64>)> {
        let n_params = weights.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut cost = 0.0;
        let mut grad = vec![0.0; n_params];
        let mut d_u = [vec![0.0; n_params], vec![0.0; n_params], vec![0.0; n_params]];
        for p in &self.points {
            let mut u = [0.0; 3];
            for k in 0..3 {
                let (uq, g) = value_and_gradient_uq(p.xs[k], weights)?;
                u[k] = p.predictor[k] + p.envelope[k] * uq;
                check_divergence(u[k])?;
                for (d, gi) in d_u[k].iter_mut().zip(&g) {
                    *d = p.envelope[k] * gi;
                }
            }
            let growth = self.lambda * u[1].exp();
            let r = (u[2] - 2.0 * u[1] + u[0]) * inv_h2 + growth;
            cost += r * r;
            for j in 0..n_params {
                let dr = (d_u[2][j] - 2.0 * d_u[1][j] + d_u[0][j]) * inv_h2 + growth * d_u[1][j];
                grad[j] += 2.0 * r * dr;
            }
        }
        let n = self.points.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((cost / n, grad))
    }
}
