//! Adam training of the circuit weights against the Bratu residual cost.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitWeights;
use crate::error::{Error, Result};
use crate::pde::{trial, CostEvaluator, TrialConfig};
use crate::qsim::Rotation;

/// Name of the generator behind [`initialize_weights`], for run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = start index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Lower => "lower",
            Branch::Upper => "upper",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Branch::Lower),
            "upper" => Ok(Branch::Upper),
            other => Err(Error::InvalidConfig(format!("unknown branch `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { learning_rate: 0.005, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub params: AdamParams,
}

impl AdamState {
    pub fn new(n_params: usize, params: AdamParams) -> Self {
        Self { first_moment: vec![0.0; n_params], second_moment: vec![0.0; n_params], step_count: 0, params }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    mut state: AdamState,
    mut weights: CircuitWeights,
    gradient: &[f64],
) -> Result<(AdamState, CircuitWeights)> {
    let n = weights.len();
    if gradient.len() != n || state.first_moment.len() != n {
        return Err(Error::ShapeMismatch { expected: n, actual: gradient.len() });
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("cost gradient"));
    }
    let AdamParams { learning_rate, beta1, beta2, epsilon } = state.params;
    state.step_count += 1;
    let k = state.step_count as i32;
    let bias1 = 1.0 - beta1.powi(k);
    let bias2 = 1.0 - beta2.powi(k);
    for (((theta, m), v), &g) in weights
        .as_mut_slice()
        .iter_mut()
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
        .zip(gradient)
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok((state, weights))
}

/// Stop once the cost has changed by less than `rel_tol` (relative) on each of
/// `window` consecutive iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { window: 25, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub iterations: usize,
    pub adam: AdamParams,
    pub early_stop: Option<EarlyStop>,
    /// A run counts as converged when its final cost is below this.
    pub accept_cost: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { iterations: 500, adam: AdamParams::default(), early_stop: None, accept_cost: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub final_weights: CircuitWeights,
    /// `cost_history[k]` is the cost after the `k + 1`-th Adam step.
    pub cost_history: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub stopped_early: bool,
    /// Cost of `final_weights`; equals the last history entry when any step ran.
    pub final_cost: f64,
    /// Largest single-step change of any weight.
    pub max_step: f64,
}

impl TrainingReport {
    pub fn iterations(&self) -> usize {
        self.cost_history.len()
    }
}

/// Runs Adam on the residual cost of `cfg` starting from `initial`.
///
/// A diverging cost (non-finite, or a trial value past the divergence guard)
/// ends training; the report then holds the last finite state and is marked
/// diverged.
pub fn train(initial: &CircuitWeights, cfg: &TrialConfig, options: &TrainOptions) -> Result<TrainingReport> {
    let evaluator = CostEvaluator::new(cfg, &cfg.grid())?;
    let mut weights = initial.clone();
    let mut state = AdamState::new(weights.len(), options.adam);
    let mut history = Vec::with_capacity(options.iterations);
    let mut max_step: f64 = 0.0;
    let mut diverged = false;
    let mut stopped_early = false;
    let mut quiet_run = 0usize;

    let mut current = match evaluator.cost_and_gradient(&weights) {
        Ok((c, g)) if c.is_finite() => Some((c, g)),
        Ok(_) | Err(Error::Divergence(_)) => None,
        Err(e) => return Err(e),
    };
    let initial_cost = current.as_ref().map_or(f64::INFINITY, |(c, _)| *c);
    if current.is_none() {
        diverged = options.iterations > 0;
    }

    for k in 0..options.iterations {
        let Some((_, grad)) = current.take() else { break };
        let (next_state, next_weights) = match adam_step(state.clone(), weights.clone(), &grad) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let last = k + 1 == options.iterations;
        let evaluated = if last {
            evaluator.cost(&next_weights).map(|c| (c, Vec::new()))
        } else {
            evaluator.cost_and_gradient(&next_weights)
        };
        let (c, g) = match evaluated {
            Ok((c, g)) if c.is_finite() => (c, g),
            Ok(_) | Err(Error::Divergence(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        for (a, b) in next_weights.as_slice().iter().zip(weights.as_slice()) {
            max_step = max_step.max((a - b).abs());
        }
        state = next_state;
        weights = next_weights;

        if let (Some(stop), Some(&prev)) = (options.early_stop, history.last()) {
            let prev: f64 = prev;
            if (c - prev).abs() < stop.rel_tol * prev.abs() {
                quiet_run += 1;
            } else {
                quiet_run = 0;
            }
            history.push(c);
            if quiet_run >= stop.window {
                stopped_early = true;
                break;
            }
        } else {
            history.push(c);
        }
        current = Some((c, g));
    }

    let final_cost = history.last().copied().unwrap_or(initial_cost);
    Ok(TrainingReport {
        final_weights: weights,
        converged: !diverged && final_cost < options.accept_cost,
        diverged,
        stopped_early,
        final_cost,
        cost_history: history,
        max_step,
    })
}

/// Branch-biased starting weights.
///
/// Upper branch: `N(2.0, 0.1)` clamped to `[1, 3]`. Lower branch: `U[0, 0.1]`,
/// with `pi / 2` added to every RX angle of the last layer. Without the jitter
/// the circuit state before that layer is real, the last RX turns the measured
/// Z string into one with an odd number of Y factors, and `u_q` vanishes for
/// every `x`; the trial therefore starts out at the predictor. Plain small
/// angles instead leave `u_q` equal to the embedding output, which is of order
/// one and gives starting costs in the hundreds.
pub fn initialize_weights(branch: Branch, layers: usize, qubits: usize, seed: u64) -> Result<CircuitWeights> {
    initialize_weights_stream(branch, layers, qubits, seed, 0)
}

/// As [`initialize_weights`], drawing from an independent stream of the seeded
/// generator.
pub fn initialize_weights_stream(
    branch: Branch,
    layers: usize,
    qubits: usize,
    seed: u64,
    stream: u64,
) -> Result<CircuitWeights> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = layers * qubits * 3;
    let angles = match branch {
        Branch::Lower => {
            let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=0.1)).collect();
            if layers > 0 {
                for q in 0..qubits {
                    angles[(layers - 1) * qubits * 3 + q * 3 + Rotation::X.index()] += FRAC_PI_2;
                }
            }
            angles
        }
        Branch::Upper => {
            let normal = Normal::new(2.0, 0.1).expect("valid normal parameters");
            (0..n).map(|_| f64::clamp(normal.sample(&mut rng), 1.0, 3.0)).collect()
        }
    };
    CircuitWeights::from_vec(layers, qubits, angles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub report: TrainingReport,
    /// Index of the selected start (its RNG stream).
    pub start: usize,
    pub u_max: f64,
    /// Whether the selected run clears the lower-branch threshold.
    pub is_upper: bool,
    pub final_costs: Vec<f64>,
    pub u_maxes: Vec<f64>,
}

/// Trains from `n_starts` upper-branch initializations and keeps the lowest-cost
/// run whose midpoint value exceeds `lower_u_max`. Without such a run the
/// lowest-cost run overall is returned with `is_upper = false`.
pub fn multi_start(
    cfg: &TrialConfig,
    layers: usize,
    qubits: usize,
    n_starts: usize,
    options: &TrainOptions,
    seed: u64,
    lower_u_max: f64,
) -> Result<MultiStartReport> {
    let starts = (0..n_starts)
        .map(|k| Ok((cfg.clone(), initialize_weights_stream(Branch::Upper, layers, qubits, seed, k as u64)?)))
        .collect::<Result<Vec<_>>>()?;
    multi_start_with(&starts, options, lower_u_max)
}

/// [`multi_start`] over explicit `(trial config, initial weights)` pairs.
pub fn multi_start_with(
    starts: &[(TrialConfig, CircuitWeights)],
    options: &TrainOptions,
    lower_u_max: f64,
) -> Result<MultiStartReport> {
    if starts.is_empty() {
        return Err(Error::InvalidConfig("multi-start needs at least one start".into()));
    }
    let mut runs = Vec::with_capacity(starts.len());
    for (cfg, init) in starts {
        let report = train(init, cfg, options)?;
        let u_max = trial(0.5, &report.final_weights, cfg)?;
        runs.push((report, u_max));
    }
    let final_costs: Vec<f64> = runs.iter().map(|(r, _)| r.final_cost).collect();
    let u_maxes: Vec<f64> = runs.iter().map(|(_, u)| *u).collect();

    let by_cost = |a: &usize, b: &usize| final_costs[*a].total_cmp(&final_costs[*b]);
    let upper = (0..runs.len())
        .filter(|&i| !runs[i].0.diverged && u_maxes[i] > lower_u_max)
        .min_by(by_cost);
    let (start, is_upper) = match upper {
        Some(i) => (i, true),
        None => ((0..runs.len()).min_by(by_cost).expect("at least one start"), false),
    };
    let (report, u_max) = runs.swap_remove(start);
    Ok(MultiStartReport { report, start, u_max, is_upper, final_costs, u_maxes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(n: usize) -> AdamState {
        AdamState::new(n, AdamParams::default())
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let w = CircuitWeights::from_vec(1, 1, vec![0.1, 0.2, 0.3]).unwrap();
        let (s, w2) = adam_step(fresh(3), w.clone(), &[0.0; 3]).unwrap();
        assert_eq!(w2, w);
        assert_eq!(s.step_count, 1);
    }

    #[test]
    fn first_step_is_learning_rate_times_sign() {
        let w = CircuitWeights::zeros(1, 1).unwrap();
        let g = [0.5, -3.0, 1e-3];
        let (_, w2) = adam_step(fresh(3), w, &g).unwrap();
        for (theta, gi) in w2.as_slice().iter().zip(g) {
            let expected = -0.005 * gi.signum();
            assert!((theta - expected).abs() < 0.005 * 1e-4, "{theta} vs {expected}");
        }
    }

    #[test]
    fn repeated_steps_move_monotonically() {
        let mut w = CircuitWeights::zeros(1, 1).unwrap();
        let mut s = fresh(3);
        let g = [1.0, -2.0, 0.5];
        let mut prev = w.as_slice().to_vec();
        for _ in 0..2 {
            (s, w) = adam_step(s, w, &g).unwrap();
            for ((now, before), gi) in w.as_slice().iter().zip(&prev).zip(g) {
                assert!((now - before) * gi < 0.0);
            }
            prev = w.as_slice().to_vec();
        }
        assert_eq!(s.step_count, 2);
        assert!(s.second_moment.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn nan_gradient_is_rejected() {
        let w = CircuitWeights::zeros(1, 1).unwrap();
        assert!(matches!(adam_step(fresh(3), w, &[0.0, f64::NAN, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_iterations() {
        let w = initialize_weights(Branch::Lower, 2, 3, 1).unwrap();
        let cfg = TrialConfig::new(0.5, 4.0, 1e-3, 10).unwrap();
        let opts = TrainOptions { iterations: 0, ..Default::default() };
        let r = train(&w, &cfg, &opts).unwrap();
        assert!(r.cost_history.is_empty());
        assert_eq!(r.final_weights, w);
        assert!(r.final_cost > 0.0);
    }

    #[test]
    fn initialization_ranges_and_determinism() {
        for seed in 0..10 {
            let up = initialize_weights(Branch::Upper, 4, 3, seed).unwrap();
            assert_eq!(up.len(), 36);
            assert!(up.as_slice().iter().all(|&a| (1.0..=3.0).contains(&a)));
            assert_eq!(up, initialize_weights(Branch::Upper, 4, 3, seed).unwrap());
            let lo = initialize_weights(Branch::Lower, 4, 3, seed).unwrap();
            for (idx, l, _, r, a) in lo.enumerate() {
                let base = if l == 3 && r == Rotation::X { FRAC_PI_2 } else { 0.0 };
                assert!((0.0..=0.1).contains(&(a - base)), "angle {idx} = {a}");
            }
        }
        let a = initialize_weights_stream(Branch::Upper, 4, 3, 5, 0).unwrap();
        let b = initialize_weights_stream(Branch::Upper, 4, 3, 5, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn lower_initialization_without_jitter_gives_zero_output() {
        let mut w = CircuitWeights::zeros(4, 3).unwrap();
        for q in 0..3 {
            let i = w.flat_index(3, q, Rotation::X);
            w.as_mut_slice()[i] = FRAC_PI_2;
        }
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!(crate::ansatz::evaluate_uq(x, &w).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn upper_initialization_is_near_two() {
        let w = initialize_weights(Branch::Upper, 40, 3, 3).unwrap();
        let mean = w.as_slice().iter().sum::<f64>() / w.len() as f64;
        assert!((mean - 2.0).abs() < 0.02);
        assert!(w.as_slice().iter().all(|&a| (1.5..=2.5).contains(&a)));
    }

    #[test]
    fn branch_parsing() {
        assert_eq!("lower".parse::<Branch>().unwrap(), Branch::Lower);
        assert_eq!("upper".parse::<Branch>().unwrap(), Branch::Upper);
        assert!("middle".parse::<Branch>().is_err());
        assert_eq!(Branch::Upper.to_string(), "upper");
    }
}
