//! Classical reference solvers.
//!
//! The interior unknowns `u_1..u_M` on `x_i = i h`, `h = 1 / (M + 1)`, satisfy
//!
//! ```text
//! F_i(u, lambda) = (u_{i+1} - 2 u_i + u_{i-1}) / h^2 + lambda e^{u_i} = 0,   u_0 = u_{M+1} = 0.
//! ```
//!
//! [`newton_solve`] solves this at fixed `lambda` with a tridiagonal Jacobian.
//! [`arc_length_continue`] follows the solution curve through the fold with
//! Keller's pseudo arc-length method, solving the bordered Jacobian by block
//! elimination. [`closed_form_solution`] gives the exact continuous solution
//! `u(x) = -2 ln[cosh((x - 1/2) theta / 2) / cosh(theta / 4)]` where
//! `theta = sqrt(2 lambda) cosh(theta / 4)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_bordered, SingularPivot, Tridiagonal};
use crate::optim::Branch;

pub const DEFAULT_M: usize = 999;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

/// `lambda(theta) = theta^2 / (2 cosh^2(theta / 4))`, the inverse of the
/// transcendental relation.
pub fn lambda_of_theta(theta: f64) -> f64 {
    theta * theta / (2.0 * (theta / 4.0).cosh().powi(2))
}

/// Location of the fold: `(theta_c, lambda_c)`, the maximum of
/// [`lambda_of_theta`] found by golden-section search.
pub fn critical_point() -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0_f64, 10.0_f64);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (lambda_of_theta(c), lambda_of_theta(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = lambda_of_theta(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = lambda_of_theta(d);
        }
    }
    let theta = 0.5 * (a + b);
    (theta, lambda_of_theta(theta))
}

pub fn critical_lambda() -> f64 {
    critical_point().1
}

/// Midpoint value `2 ln cosh(theta_c / 4)` of the solution at the fold.
pub fn fold_u_max() -> f64 {
    2.0 * (critical_point().0 / 4.0).cosh().ln()
}

/// Exact solution on one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub lambda: f64,
    pub branch: Branch,
    pub theta: f64,
}

impl ClosedForm {
    pub fn u(&self, x: f64) -> f64 {
        let t = self.theta;
        -2.0 * (((x - 0.5) * t / 2.0).cosh() / (t / 4.0).cosh()).ln()
    }

    /// `u(1/2) = 2 ln cosh(theta / 4)`.
    pub fn u_max(&self) -> f64 {
        2.0 * (self.theta / 4.0).cosh().ln()
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.u(x)).collect()
    }
}

/// Closed-form Bratu solution, the branch selecting the small or large root of
/// `theta = sqrt(2 lambda) cosh(theta / 4)`.
pub fn closed_form_solution(lambda: f64, branch: Branch) -> Result<ClosedForm> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let (theta_c, lambda_c) = critical_point();
    if lambda >= lambda_c {
        return Err(Error::BeyondFold { lambda, critical: lambda_c });
    }
    let root = (2.0 * lambda).sqrt();
    let g = |t: f64| t - root * (t / 4.0).cosh();
    let (mut lo, mut hi) = match branch {
        Branch::Lower => (0.0, theta_c),
        Branch::Upper => {
            let mut hi = 2.0 * theta_c;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            (theta_c, hi)
        }
    };
    // g changes sign on [lo, hi]; remember which end is negative
    let lo_negative = g(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 || hi - lo <= f64::EPSILON * hi.abs() {
            lo = mid;
            hi = mid;
            break;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    debug_assert!(g(theta).abs() < 1e-12);
    Ok(ClosedForm { lambda, branch, theta })
}

/// Midpoint value of the exact lower-branch solution, or `None` outside `(0, lambda_c)`.
pub fn lower_branch_u_max(lambda: f64) -> Option<f64> {
    closed_form_solution(lambda, Branch::Lower).ok().map(|c| c.u_max())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSolution {
    pub lambda: f64,
    pub h: f64,
    /// Interior values `u_1..u_M`.
    pub u: Vec<f64>,
    pub newton_iterations: usize,
    pub residual_norm: f64,
}

impl ClassicalSolution {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    /// Interior abscissae `x_i = i h`.
    pub fn xs(&self) -> Vec<f64> {
        interior_grid(self.u.len())
    }

    /// Piecewise-linear interpolation including the zero boundary values.
    pub fn value_at(&self, x: f64) -> f64 {
        interpolate(&self.u, x)
    }

    pub fn u_max(&self) -> f64 {
        self.value_at(0.5)
    }
}

pub fn interior_grid(m: usize) -> Vec<f64> {
    let h = 1.0 / (m + 1) as f64;
    (1..=m).map(|i| i as f64 * h).collect()
}

fn interpolate(u: &[f64], x: f64) -> f64 {
    let m = u.len();
    let pos = x * (m + 1) as f64;
    if !(pos > 0.0 && pos < (m + 1) as f64) {
        return 0.0;
    }
    let i = (pos.floor() as usize).min(m);
    let t = pos - i as f64;
    let at = |k: usize| if k == 0 || k == m + 1 { 0.0 } else { u[k - 1] };
    if t == 0.0 {
        at(i)
    } else {
        (1.0 - t) * at(i) + t * at(i + 1)
    }
}

/// `F(u, lambda)` of the discrete problem.
pub fn residual(u: &[f64], lambda: f64) -> Vec<f64> {
    let m = u.len();
    let inv_h2 = ((m + 1) as f64).powi(2);
    (0..m)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < m { u[i + 1] } else { 0.0 };
            (right - 2.0 * u[i] + left) * inv_h2 + lambda * u[i].exp()
        })
        .collect()
}

/// `dF/du`: `1/h^2` off the diagonal, `-2/h^2 + lambda e^{u_i}` on it.
pub fn jacobian(u: &[f64], lambda: f64) -> Tridiagonal {
    let m = u.len();
    let inv_h2 = ((m + 1) as f64).powi(2);
    let mut lower = vec![inv_h2; m];
    let mut upper = vec![inv_h2; m];
    lower[0] = 0.0;
    upper[m - 1] = 0.0;
    let diag = u.iter().map(|ui| -2.0 * inv_h2 + lambda * ui.exp()).collect();
    Tridiagonal::new(lower, diag, upper)
}

/// Size of `||F||_inf` that rounding alone produces for the iterate `u`.
/// The stencil amplifies relative errors in `u` by about `4 / h^2`, which at
/// fine grids exceeds any fixed absolute tolerance.
pub fn residual_roundoff(u: &[f64], lambda: f64) -> f64 {
    let h = 1.0 / (u.len() + 1) as f64;
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    8.0 * f64::EPSILON * (4.0 * max_norm(u) / (h * h) + lambda.abs() * top.exp())
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| if x.is_nan() { f64::NAN } else { acc.max(x.abs()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: NEWTON_TOL, max_iter: NEWTON_MAX_ITER }
    }
}

/// Newton iteration for `F(u, lambda) = 0` at fixed `lambda`, converged when
/// `||F||_inf` drops below `tol` or below the rounding level of
/// [`residual_roundoff`], whichever is larger. `newton_iterations` counts
/// residual evaluations, so an exact initial guess reports one.
pub fn newton_solve(lambda: f64, initial_u: &[f64], options: NewtonOptions) -> Result<ClassicalSolution> {
    newton_solve_traced(lambda, initial_u, options).map(|(s, _)| s)
}

/// [`newton_solve`] that also returns `||F||_inf` at every iteration.
pub fn newton_solve_traced(
    lambda: f64,
    initial_u: &[f64],
    options: NewtonOptions,
) -> Result<(ClassicalSolution, Vec<f64>)> {
    let m = initial_u.len();
    if m < 3 {
        return Err(Error::InvalidConfig(format!("need at least 3 interior points, got {m}")));
    }
    if initial_u.iter().any(|u| !u.is_finite()) || !lambda.is_finite() {
        return Err(Error::NonFinite("Newton initial guess"));
    }
    let mut u = initial_u.to_vec();
    let mut trace = Vec::new();
    for iteration in 1..=options.max_iter {
        let f = residual(&u, lambda);
        let norm = max_norm(&f);
        trace.push(norm);
        if !norm.is_finite() {
            return Err(Error::NewtonDiverged { lambda, iterations: iteration, residual: norm });
        }
        if norm < options.tol.max(residual_roundoff(&u, lambda)) {
            let solution = ClassicalSolution {
                lambda,
                h: 1.0 / (m + 1) as f64,
                u,
                newton_iterations: iteration,
                residual_norm: norm,
            };
            return Ok((solution, trace));
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = jacobian(&u, lambda)
            .solve(&rhs)
            .map_err(|SingularPivot { row, pivot }| Error::SingularJacobian { lambda, row, pivot })?;
        u.iter_mut().zip(&delta).for_each(|(ui, di)| *ui += di);
    }
    let residual = max_norm(&residual(&u, lambda));
    Err(Error::NewtonDiverged { lambda, iterations: options.max_iter, residual })
}

/// Newton from `u = 0`.
pub fn solve_from_zero(lambda: f64, m: usize) -> Result<ClassicalSolution> {
    newton_solve(lambda, &vec![0.0; m], NewtonOptions::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// Unit tangent `(u_dot, lambda_dot)` at this point.
    pub tangent_u: Vec<f64>,
    pub tangent_lambda: f64,
    /// Arc step that produced this point (zero for the starting point).
    pub delta_s: f64,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub constraint_residual: f64,
}

impl ContinuationStep {
    pub fn u_max(&self) -> f64 {
        interpolate(&self.u, 0.5)
    }

    pub fn tangent_norm(&self) -> f64 {
        (self.tangent_u.iter().map(|v| v * v).sum::<f64>() + self.tangent_lambda.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub delta_s: f64,
    pub max_steps: usize,
    pub newton: NewtonOptions,
    /// Halvings of the arc step allowed before a step is declared failed.
    pub max_retries: usize,
    /// Stop once the path has turned at the fold and `lambda` has fallen below this.
    pub stop_below_lambda: Option<f64>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            delta_s: 0.05,
            max_steps: 20_000,
            newton: NewtonOptions::default(),
            max_retries: 5,
            stop_below_lambda: None,
        }
    }
}

fn normalize(tu: &mut [f64], tl: &mut f64) {
    let norm = (tu.iter().map(|v| v * v).sum::<f64>() + *tl * *tl).sqrt();
    tu.iter_mut().for_each(|v| *v /= norm);
    *tl /= norm;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Keller pseudo arc-length continuation from a converged solution.
///
/// Each step predicts along the unit tangent, then corrects with Newton on
/// `[F(u, lambda); t0_u.(u - u0) + t0_l (lambda - lambda0) - ds] = 0`. A failed
/// corrector halves the step, up to `max_retries` times. The returned path
/// starts with `start` itself.
pub fn arc_length_continue(start: &ClassicalSolution, options: ContinuationOptions) -> Result<Vec<ContinuationStep>> {
    let m = start.u.len();
    let lambda0 = start.lambda;
    let j = jacobian(&start.u, lambda0);
    let f_lambda: Vec<f64> = start.u.iter().map(|v| -v.exp()).collect();
    let mut tu = j
        .solve(&f_lambda)
        .map_err(|SingularPivot { row, pivot }| Error::SingularJacobian { lambda: lambda0, row, pivot })?;
    let mut tl = 1.0;
    normalize(&mut tu, &mut tl);

    let mut path = vec![ContinuationStep {
        u: start.u.clone(),
        lambda: lambda0,
        tangent_u: tu,
        tangent_lambda: tl,
        delta_s: 0.0,
        newton_iterations: start.newton_iterations,
        residual_norm: start.residual_norm,
        constraint_residual: 0.0,
    }];
    let mut turned = false;

    for _ in 0..options.max_steps {
        let prev = path.last().unwrap();
        let mut ds = options.delta_s;
        let mut accepted = None;
        for _ in 0..=options.max_retries {
            match corrector(prev, ds, options.newton) {
                Ok(step) => {
                    accepted = Some(step);
                    break;
                }
                Err(_) => ds *= 0.5,
            }
        }
        let Some(step) = accepted else {
            return Err(Error::ContinuationFailed { retries: options.max_retries, delta_s: ds * 2.0 });
        };
        debug_assert_eq!(step.u.len(), m);
        if step.tangent_lambda < 0.0 {
            turned = true;
        }
        let done = matches!(options.stop_below_lambda, Some(min) if turned && step.lambda < min);
        path.push(step);
        if done {
            break;
        }
    }
    Ok(path)
}

fn corrector(prev: &ContinuationStep, ds: f64, newton: NewtonOptions) -> Result<ContinuationStep> {
    let t0u = &prev.tangent_u;
    let t0l = prev.tangent_lambda;
    let mut u: Vec<f64> = prev.u.iter().zip(t0u).map(|(a, b)| a + ds * b).collect();
    let mut lambda = prev.lambda + ds * t0l;

    let constraint = |u: &[f64], lambda: f64| {
        let du: f64 = u.iter().zip(&prev.u).zip(t0u).map(|((a, b), t)| (a - b) * t).sum();
        du + t0l * (lambda - prev.lambda) - ds
    };

    for iteration in 1..=newton.max_iter {
        let f = residual(&u, lambda);
        let phi = constraint(&u, lambda);
        let norm = max_norm(&f);
        if !norm.is_finite() {
            break;
        }
        let singular = |SingularPivot { row, pivot }| Error::SingularJacobian { lambda, row, pivot };
        let j = jacobian(&u, lambda);
        let f_lambda: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        if norm < newton.tol.max(residual_roundoff(&u, lambda)) && phi.abs() < newton.tol {
            // tangent at the new point: J_aug t = (0, ..., 0, 1)
            let (mut tu, mut tl) =
                solve_bordered(&j, &f_lambda, t0u, t0l, &vec![0.0; u.len()], 1.0).map_err(singular)?;
            normalize(&mut tu, &mut tl);
            if dot(&tu, t0u) + tl * t0l < 0.0 {
                tu.iter_mut().for_each(|v| *v = -*v);
                tl = -tl;
            }
            return Ok(ContinuationStep {
                u,
                lambda,
                tangent_u: tu,
                tangent_lambda: tl,
                delta_s: ds,
                newton_iterations: iteration,
                residual_norm: norm,
                constraint_residual: phi,
            });
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (du, dl) = solve_bordered(&j, &f_lambda, t0u, t0l, &rhs, -phi).map_err(singular)?;
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        lambda += dl;
    }
    Err(Error::NewtonDiverged { lambda, iterations: newton.max_iter, residual: max_norm(&residual(&u, lambda)) })
}

/// Classical reference at fixed `lambda` on `m` interior points.
///
/// The lower branch is Newton from zero. The upper branch is reached by
/// arc-length continuation from small `lambda` past the fold, then refined by
/// fixed-`lambda` Newton from the nearest path point.
pub fn reference_solution(lambda: f64, branch: Branch, m: usize) -> Result<ClassicalSolution> {
    let lambda_c = critical_lambda();
    if lambda >= lambda_c {
        return Err(Error::BeyondFold { lambda, critical: lambda_c });
    }
    match branch {
        Branch::Lower => solve_from_zero(lambda, m),
        Branch::Upper => {
            let start = solve_from_zero(0.05_f64.min(lambda), m)?;
            let path = arc_length_continue(
                &start,
                ContinuationOptions { stop_below_lambda: Some(lambda), ..Default::default() },
            )?;
            let fold = path
                .iter()
                .position(|s| s.tangent_lambda < 0.0)
                .ok_or(Error::ContinuationFailed { retries: 0, delta_s: 0.0 })?;
            let seed = path[fold..]
                .iter()
                .min_by(|a, b| (a.lambda - lambda).abs().total_cmp(&(b.lambda - lambda).abs()))
                .expect("non-empty path after fold");
            newton_solve(lambda, &seed.u, NewtonOptions::default())
        }
    }
}
