//! Predictor-corrector sweeps of the VQA solver along both solution branches.
//!
//! Each point is a fixed-`lambda` training run. The lower branch is traced
//! upward in `lambda` from small values, the upper branch downward from a
//! multi-start seed, with the previous trial solution as the predictor.

use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitWeights;
use crate::classical::lower_branch_u_max;
use crate::error::{Error, Result};
use crate::optim::{
    initialize_weights, initialize_weights_stream, multi_start_with, train, Branch, MultiStartReport, TrainOptions,
    TrainingReport,
};
use crate::pde::{trial, PredictorFunction, TrialConfig};

/// Final cost below which a point is accepted.
pub const ACCEPT_COST: f64 = 1e-2;

/// `0.1, 0.2, ..., 3.4`.
pub fn default_lower_schedule() -> Vec<f64> {
    (1..=34).map(|k| k as f64 / 10.0).collect()
}

/// `3.0, 2.75, ..., 0.5`.
pub fn default_upper_schedule() -> Vec<f64> {
    (0..=10).map(|k| 3.0 - k as f64 * 0.25).collect()
}

/// How the circuit weights of an upper-branch point are started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionStart {
    /// Reuse the previous point's final weights. Together with the previous
    /// trial as predictor this starts the trial at `2 u_prev - u_prev_pred`,
    /// a secant step along the branch.
    Previous,
    /// Fresh lower-branch weights, for which the correction starts near zero and
    /// the trial starts at the predictor.
    Neutral,
}

/// Settings shared by every point of a sweep. The `lambda` and predictor of
/// `template` are overwritten per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub template: TrialConfig,
    pub layers: usize,
    pub qubits: usize,
    pub train: TrainOptions,
    /// Use the previous lower-branch solution as predictor instead of zero.
    pub lower_predictor: bool,
    pub upper_start: CorrectionStart,
    /// Seed for the fresh weights drawn during a sweep.
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(template: TrialConfig, layers: usize, qubits: usize, train: TrainOptions, seed: u64) -> Self {
        Self {
            template,
            layers,
            qubits,
            train: TrainOptions { accept_cost: ACCEPT_COST, ..train },
            lower_predictor: false,
            upper_start: CorrectionStart::Previous,
            seed,
        }
    }

    fn at(&self, lambda: f64, predictor: PredictorFunction) -> Result<TrialConfig> {
        let cfg = TrialConfig { lambda, ..self.template.clone() }.with_predictor(predictor);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One converged (or failed) VQA solve on a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub branch: Branch,
    /// `0`, the collocation grid, `1`.
    pub grid_xs: Vec<f64>,
    pub u_values: Vec<f64>,
    /// Trial value at `x = 0.5`.
    pub u_max: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub weights: CircuitWeights,
    /// Trial configuration the weights belong to, including the predictor.
    pub config: TrialConfig,
    pub cost_history: Vec<f64>,
}

impl BranchPoint {
    pub fn from_report(branch: Branch, config: TrialConfig, report: TrainingReport) -> Result<Self> {
        let mut grid_xs = vec![0.0];
        grid_xs.extend(config.grid());
        grid_xs.push(1.0);
        let u_values = grid_xs
            .iter()
            .map(|&x| trial(x, &report.final_weights, &config))
            .collect::<Result<Vec<_>>>()?;
        let u_max = trial(0.5, &report.final_weights, &config)?;
        Ok(Self {
            lambda: config.lambda,
            branch,
            grid_xs,
            u_values,
            u_max,
            final_cost: report.final_cost,
            converged: report.converged,
            weights: report.final_weights,
            config,
            cost_history: report.cost_history,
        })
    }

    pub fn trial_at(&self, x: f64) -> Result<f64> {
        trial(x, &self.weights, &self.config)
    }

    /// The full trial solution as a predictor for the next point. The end
    /// curvature `-lambda` is what the equation forces where `u = 0`.
    pub fn as_predictor(&self) -> Result<PredictorFunction> {
        PredictorFunction::from_samples(self.grid_xs.clone(), self.u_values.clone(), [-self.lambda, -self.lambda])
    }
}

fn check_order(lambdas: &[f64], ascending: bool) -> Result<()> {
    for w in lambdas.windows(2) {
        let ok = if ascending { w[1] > w[0] } else { w[1] < w[0] };
        if !ok {
            let dir = if ascending { "ascending" } else { "descending" };
            return Err(Error::InvalidConfig(format!("lambda schedule must be strictly {dir}: {} then {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// Lower branch, one training run per `lambda` in ascending order.
///
/// The first point starts from lower-branch weights. Later points reuse the
/// previous point's weights, or with `lower_predictor` take its trial as
/// predictor and start the correction afresh. Points whose cost stays above
/// [`ACCEPT_COST`] are kept with `converged = false`.
pub fn sweep_lower(lambdas: &[f64], cfg: &SweepConfig) -> Result<Vec<BranchPoint>> {
    check_order(lambdas, true)?;
    let fresh = initialize_weights(Branch::Lower, cfg.layers, cfg.qubits, cfg.seed)?;
    let mut points: Vec<BranchPoint> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (predictor, start) = match points.last() {
            Some(p) if cfg.lower_predictor => (p.as_predictor()?, fresh.clone()),
            Some(p) => (PredictorFunction::zero(), p.weights.clone()),
            None => (PredictorFunction::zero(), fresh.clone()),
        };
        let trial_cfg = cfg.at(lambda, predictor)?;
        let report = train(&start, &trial_cfg, &cfg.train)?;
        points.push(BranchPoint::from_report(Branch::Lower, trial_cfg, report)?);
    }
    Ok(points)
}

/// Midpoint height of the initial guess for start `k` of [`seed_upper`]. The
/// ladder begins at the fold height, below which no upper-branch solution lies.
pub fn upper_guess_height(k: usize) -> f64 {
    crate::classical::fold_u_max() * (1.0 + 0.25 * k as f64)
}

/// First upper-branch point by multi-start at `lambda`.
///
/// Start `k` trains from fresh lower-branch weights (correction near zero, with
/// jitter from RNG stream `k`) against the predictor `a_k 4 x (1 - x)`, where
/// `a_k` is [`upper_guess_height`]. Runs that end with a midpoint at or below
/// the lower-branch value are discarded; the cheapest remaining run is kept.
pub fn seed_upper(lambda: f64, cfg: &SweepConfig, n_starts: usize) -> Result<(BranchPoint, MultiStartReport)> {
    let threshold = lower_branch_u_max(lambda).ok_or(Error::BeyondFold {
        lambda,
        critical: crate::classical::critical_lambda(),
    })?;
    let xs: Vec<f64> = (0..=cfg.template.grid_n + 1).map(|i| i as f64 / (cfg.template.grid_n + 1) as f64).collect();
    let starts = (0..n_starts)
        .map(|k| {
            let a = upper_guess_height(k);
            let us = xs.iter().map(|x| 4.0 * a * x * (1.0 - x)).collect();
            let guess = PredictorFunction::from_samples(xs.clone(), us, [-8.0 * a, -8.0 * a])?;
            let w = initialize_weights_stream(Branch::Lower, cfg.layers, cfg.qubits, cfg.seed, k as u64)?;
            Ok((cfg.at(lambda, guess)?, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let ms = multi_start_with(&starts, &cfg.train, threshold)?;
    let trial_cfg = starts[ms.start].0.clone();
    let mut point = BranchPoint::from_report(Branch::Upper, trial_cfg, ms.report.clone())?;
    point.converged &= ms.is_upper;
    Ok((point, ms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperSweep {
    pub points: Vec<BranchPoint>,
    /// `lambda` at which a converged point fell to the lower branch. The sweep
    /// stops there; the offending point is the last one in `points`.
    pub branch_lost: Option<f64>,
}

/// Upper branch, one training run per `lambda` in descending order, each with
/// the previous point's trial as predictor.
pub fn sweep_upper(lambdas: &[f64], first: &BranchPoint, cfg: &SweepConfig) -> Result<UpperSweep> {
    check_order(lambdas, false)?;
    let fresh = initialize_weights(Branch::Lower, cfg.layers, cfg.qubits, cfg.seed)?;
    let mut points: Vec<BranchPoint> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let prev = points.last().unwrap_or(first);
        let start = match cfg.upper_start {
            CorrectionStart::Previous => prev.weights.clone(),
            CorrectionStart::Neutral => fresh.clone(),
        };
        let trial_cfg = cfg.at(lambda, prev.as_predictor()?)?;
        let report = train(&start, &trial_cfg, &cfg.train)?;
        let point = BranchPoint::from_report(Branch::Upper, trial_cfg, report)?;
        let lost = point.converged && lower_branch_u_max(lambda).is_some_and(|lo| point.u_max <= lo);
        points.push(point);
        if lost {
            return Ok(UpperSweep { points, branch_lost: Some(lambda) });
        }
    }
    Ok(UpperSweep { points, branch_lost: None })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    points: Vec<BranchPoint>,
}

impl BifurcationDiagram {
    /// Ordered by branch (lower first), then by `lambda`.
    pub fn points(&self) -> &[BranchPoint] {
        &self.points
    }

    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &BranchPoint> {
        self.points.iter().filter(move |p| p.branch == branch)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Lower-branch `u_max` strictly increasing in `lambda`.
    pub fn lower_is_monotone(&self) -> bool {
        let u: Vec<f64> = self.branch(Branch::Lower).map(|p| p.u_max).collect();
        u.windows(2).all(|w| w[1] > w[0])
    }

    /// Upper-branch `u_max` strictly increasing as `lambda` decreases.
    pub fn upper_is_monotone(&self) -> bool {
        let u: Vec<f64> = self.branch(Branch::Upper).map(|p| p.u_max).collect();
        u.windows(2).all(|w| w[1] < w[0])
    }
}

/// Merges both sweeps, rejecting repeated `(branch, lambda)` pairs and shared
/// `lambda` values where the upper point does not lie above the lower one.
pub fn build_diagram(lower: &[BranchPoint], upper: &[BranchPoint]) -> Result<BifurcationDiagram> {
    let mut points: Vec<BranchPoint> = lower.iter().chain(upper).cloned().collect();
    points.sort_by(|a, b| a.branch.cmp(&b.branch).then(a.lambda.total_cmp(&b.lambda)));
    for w in points.windows(2) {
        if w[0].branch == w[1].branch && w[0].lambda == w[1].lambda {
            return Err(Error::DuplicatePoint { branch: w[0].branch.to_string(), lambda: w[0].lambda });
        }
    }
    for lo in points.iter().filter(|p| p.branch == Branch::Lower) {
        if let Some(up) = points.iter().find(|p| p.branch == Branch::Upper && p.lambda == lo.lambda) {
            if up.u_max <= lo.u_max {
                return Err(Error::BranchOrdering { lambda: lo.lambda, upper: up.u_max, lower: lo.u_max });
            }
        }
    }
    Ok(BifurcationDiagram { points })
}
