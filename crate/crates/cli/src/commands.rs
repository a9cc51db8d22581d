//! The four subcommands and the files they write.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use bratu_vqa::classical::{
    arc_length_continue, critical_lambda, reference_solution, solve_from_zero, ClassicalSolution, ContinuationStep,
};
use bratu_vqa::continuation::{
    build_diagram, seed_upper, sweep_lower, sweep_upper, BifurcationDiagram, BranchPoint, UpperSweep,
};
use bratu_vqa::optim::{initialize_weights, train, Branch, RNG_ALGORITHM};

use crate::config::RunConfig;
use crate::csv::{Cell, Table};
use crate::error::CliError;
use crate::svg::{figure, Panel, Series, Style};

/// Where the classical path starts.
const PATH_START_LAMBDA: f64 = 0.05;

/// Files written by a command and whether every solve converged.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { converged: true, ..Self::default() }
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// `Ok` when converged, otherwise the non-convergence error.
    pub fn into_result(self, what: &str) -> Result<Self, CliError> {
        if self.converged {
            Ok(self)
        } else {
            Err(CliError::NonConvergence(format!("{what}; outputs written to disk")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PointSummary {
    branch: Branch,
    lambda: f64,
    u_max: f64,
    final_cost: f64,
    converged: bool,
}

impl From<&BranchPoint> for PointSummary {
    fn from(p: &BranchPoint) -> Self {
        Self { branch: p.branch, lambda: p.lambda, u_max: p.u_max, final_cost: p.final_cost, converged: p.converged }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    lambda: Option<f64>,
    branch: Option<Branch>,
    seed: u64,
    rng: &'static str,
    config: &'a RunConfig,
    converged: bool,
    points: Vec<PointSummary>,
    warnings: &'a [String],
}

#[derive(Debug, Clone, Serialize)]
struct TrainingReportFile<'a> {
    lambda: f64,
    branch: Branch,
    seed: u64,
    iterations: usize,
    final_cost: f64,
    u_max: f64,
    converged: bool,
    multi_start: Option<MultiStartSummary>,
    weights: &'a [f64],
    cost_history: &'a [f64],
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiStartSummary {
    pub selected: usize,
    pub is_upper: bool,
    pub final_costs: Vec<f64>,
    pub u_maxes: Vec<f64>,
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_text(path: PathBuf, text: &str, outcome: &mut Outcome) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    outcome.files.push(path);
    Ok(())
}

fn write_table(path: PathBuf, table: &Table, outcome: &mut Outcome) -> Result<(), CliError> {
    table.write(&path)?;
    outcome.files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, outcome: &mut Outcome) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text, outcome)
}

fn write_manifest(
    cfg: &RunConfig,
    name: &str,
    command: &str,
    lambda: Option<f64>,
    branch: Option<Branch>,
    points: Vec<PointSummary>,
    outcome: &mut Outcome,
) -> Result<(), CliError> {
    let warnings = outcome.warnings.clone();
    let manifest = Manifest {
        tool: "bratu-vqa",
        version: env!("CARGO_PKG_VERSION"),
        command,
        lambda,
        branch,
        seed: cfg.seed,
        rng: RNG_ALGORITHM,
        config: cfg,
        converged: outcome.converged,
        points,
        warnings: &warnings,
    };
    write_json(cfg.out_dir.join(name), &manifest, outcome)
}

pub fn lambda_tag(lambda: f64) -> String {
    format!("{lambda:.4}")
}

fn classical_profile_table(sol: &ClassicalSolution) -> Table {
    let mut t = Table::new(&["x", "u"]);
    t.push(vec![Cell::Real(0.0), Cell::Real(0.0)]);
    for (x, u) in sol.xs().into_iter().zip(&sol.u) {
        t.push(vec![Cell::Real(x), Cell::Real(*u)]);
    }
    t.push(vec![Cell::Real(1.0), Cell::Real(0.0)]);
    t
}

fn path_table(path: &[ContinuationStep]) -> Table {
    let mut t = Table::new(&["step", "lambda", "u_max", "lambda_dot_sign"]);
    for (i, s) in path.iter().enumerate() {
        let sign = if s.tangent_lambda >= 0.0 { 1 } else { -1 };
        t.push(vec![Cell::Int(i as i64), Cell::Real(s.lambda), Cell::Real(s.u_max()), Cell::Int(sign)]);
    }
    t
}

/// Classical path from small `lambda` through the fold down to `stop_below`.
pub fn classical_path(cfg: &RunConfig, stop_below: f64) -> Result<Vec<ContinuationStep>, CliError> {
    let start = solve_from_zero(PATH_START_LAMBDA, cfg.classical_m).map_err(CliError::from_solver)?;
    arc_length_continue(&start, cfg.continuation_options(stop_below)).map_err(CliError::from_solver)
}

fn classical_reference(lambda: f64, branch: Branch, cfg: &RunConfig) -> Option<ClassicalSolution> {
    reference_solution(lambda, branch, cfg.classical_m).ok()
}

/// `(x, u_vqa, u_classical, abs_error)` on the point's sample grid.
pub fn profile_table(point: &BranchPoint, reference: Option<&ClassicalSolution>) -> Table {
    let mut t = Table::new(&["x", "u_vqa", "u_classical", "abs_error"]);
    for (&x, &u) in point.grid_xs.iter().zip(&point.u_values) {
        let c = reference.map_or(f64::NAN, |r| r.value_at(x));
        t.push(vec![Cell::Real(x), Cell::Real(u), Cell::Real(c), Cell::Real((u - c).abs())]);
    }
    t
}

fn diagram_table(points: &[BranchPoint]) -> Table {
    let mut t = Table::new(&["branch", "lambda", "u_max", "final_cost", "converged"]);
    for p in points {
        t.push(vec![
            Cell::Text(p.branch.to_string()),
            Cell::Real(p.lambda),
            Cell::Real(p.u_max),
            Cell::Real(p.final_cost),
            Cell::Int(p.converged as i64),
        ]);
    }
    t
}

fn weights_table(point: &BranchPoint) -> Table {
    let mut t = Table::new(&["index", "layer", "qubit", "rotation", "angle"]);
    for (i, l, q, r, a) in point.weights.enumerate() {
        t.push(vec![Cell::Int(i as i64), Cell::Int(l as i64), Cell::Int(q as i64), Cell::Text(r.label().into()), Cell::Real(a)]);
    }
    t
}

fn check_below_fold(lambda: f64) -> Result<(), CliError> {
    let lc = critical_lambda();
    if lambda >= lc {
        Err(CliError::Config(format!("lambda = {lambda} is at or beyond the fold lambda_c = {lc:.10}; no solution exists")))
    } else {
        Ok(())
    }
}

/// Classical continuation path and fixed-`lambda` profiles on both branches.
pub fn cmd_classical(cfg: &RunConfig) -> Result<Outcome, CliError> {
    prepare_dir(&cfg.out_dir)?;
    let mut outcome = Outcome::new();
    let lc = critical_lambda();
    let stop = cfg.profile_lambdas.iter().copied().filter(|l| *l > 0.0).fold(PATH_START_LAMBDA, f64::min);
    let path = classical_path(cfg, stop)?;
    write_table(cfg.out_dir.join("classical_path.csv"), &path_table(&path), &mut outcome)?;

    let mut series = vec![Series::new(
        "pseudo arc-length",
        path.iter().map(|s| (s.lambda, s.u_max())).collect(),
        Style::Line,
        0,
    )];
    let mut profile_panel =
        Panel { title: "Classical profiles".into(), x_label: "x".into(), y_label: "u(x)".into(), ..Panel::default() };
    for (i, &lambda) in cfg.profile_lambdas.iter().enumerate() {
        if lambda >= lc {
            outcome.warn(format!("skipping profile at lambda = {lambda}: beyond the fold lambda_c = {lc:.6}"));
            continue;
        }
        for branch in [Branch::Lower, Branch::Upper] {
            if branch == Branch::Upper && lambda <= 0.0 {
                continue;
            }
            match reference_solution(lambda, branch, cfg.classical_m) {
                Ok(sol) => {
                    let name = format!("classical_profile_{branch}_lambda_{}.csv", lambda_tag(lambda));
                    write_table(cfg.out_dir.join(name), &classical_profile_table(&sol), &mut outcome)?;
                    let mut pts = vec![(0.0, 0.0)];
                    pts.extend(sol.xs().into_iter().zip(sol.u.iter().copied()));
                    pts.push((1.0, 0.0));
                    profile_panel.series.push(Series::new(format!("{branch}, lambda = {lambda}"), pts, Style::Line, i));
                    series.push(Series::new(
                        format!("Newton {branch}, lambda = {lambda}"),
                        vec![(lambda, sol.u_max())],
                        Style::Markers,
                        1,
                    ));
                }
                Err(e) => {
                    outcome.converged = false;
                    outcome.warn(format!("{branch} profile at lambda = {lambda} failed: {e}"));
                }
            }
        }
    }
    let path_panel = Panel {
        title: format!("Bratu bifurcation diagram (lambda_c = {lc:.4})"),
        x_label: "lambda".into(),
        y_label: "u_max = u(0.5)".into(),
        series,
        note: None,
    };
    write_text(cfg.out_dir.join("classical.svg"), &figure(&[path_panel, profile_panel], 2), &mut outcome)?;
    write_manifest(cfg, "manifest_classical.json", "classical", None, None, Vec::new(), &mut outcome)?;
    outcome.into_result("classical solve failed")
}

/// Result of a single-point VQA solve.
pub struct Solve {
    pub point: BranchPoint,
    pub multi_start: Option<MultiStartSummary>,
}

pub fn solve_point(cfg: &RunConfig, lambda: f64, branch: Branch) -> Result<Solve, CliError> {
    check_below_fold(lambda)?;
    match branch {
        Branch::Lower => {
            let trial_cfg = cfg.trial_template(lambda)?;
            let init = initialize_weights(Branch::Lower, cfg.n_layers, cfg.n_qubits, cfg.seed)
                .map_err(CliError::from_config)?;
            let opts = cfg.sweep_config()?.train;
            let report = train(&init, &trial_cfg, &opts).map_err(CliError::from_solver)?;
            let point = BranchPoint::from_report(Branch::Lower, trial_cfg, report).map_err(CliError::from_solver)?;
            Ok(Solve { point, multi_start: None })
        }
        Branch::Upper => {
            if lambda <= 0.0 {
                return Err(CliError::Config("the upper branch needs lambda > 0".into()));
            }
            let (point, ms) = seed_upper(lambda, &cfg.sweep_config()?, cfg.n_starts).map_err(CliError::from_solver)?;
            let summary = MultiStartSummary {
                selected: ms.start,
                is_upper: ms.is_upper,
                final_costs: ms.final_costs,
                u_maxes: ms.u_maxes,
            };
            Ok(Solve { point, multi_start: Some(summary) })
        }
    }
}

/// Single VQA solve at `lambda`: training report, weight dump, profile.
pub fn cmd_solve(cfg: &RunConfig, lambda: f64, branch: Branch) -> Result<Outcome, CliError> {
    check_below_fold(lambda)?;
    prepare_dir(&cfg.out_dir)?;
    let mut outcome = Outcome::new();
    let solve = solve_point(cfg, lambda, branch)?;
    let p = &solve.point;
    outcome.converged = p.converged;
    let tag = format!("{branch}_lambda_{}", lambda_tag(lambda));
    let report = TrainingReportFile {
        lambda,
        branch,
        seed: cfg.seed,
        iterations: p.cost_history.len(),
        final_cost: p.final_cost,
        u_max: p.u_max,
        converged: p.converged,
        multi_start: solve.multi_start.clone(),
        weights: p.weights.as_slice(),
        cost_history: &p.cost_history,
    };
    write_json(cfg.out_dir.join(format!("report_{tag}.json")), &report, &mut outcome)?;
    write_table(cfg.out_dir.join(format!("weights_{tag}.csv")), &weights_table(p), &mut outcome)?;
    let reference = classical_reference(lambda, branch, cfg);
    if reference.is_none() {
        outcome.warn(format!("no classical {branch} reference at lambda = {lambda}"));
    }
    write_table(cfg.out_dir.join(format!("profile_{tag}.csv")), &profile_table(p, reference.as_ref()), &mut outcome)?;
    write_manifest(cfg, "manifest_solve.json", "solve", Some(lambda), Some(branch), vec![p.into()], &mut outcome)?;
    outcome.into_result(&format!("final cost {:e} at lambda = {lambda} is not below the acceptance threshold", p.final_cost))
}

/// Lower or upper sweep over the configured schedule.
pub fn run_sweep(cfg: &RunConfig, branch: Branch, lambdas: &[f64]) -> Result<UpperSweep, CliError> {
    let sweep = cfg.sweep_config()?;
    match branch {
        Branch::Lower => {
            let points = sweep_lower(lambdas, &sweep).map_err(CliError::from_solver)?;
            Ok(UpperSweep { points, branch_lost: None })
        }
        Branch::Upper => {
            let Some(&first_lambda) = lambdas.first() else {
                return Ok(UpperSweep { points: Vec::new(), branch_lost: None });
            };
            check_below_fold(first_lambda)?;
            let (first, _) = seed_upper(first_lambda, &sweep, cfg.n_starts).map_err(CliError::from_solver)?;
            sweep_upper(lambdas, &first, &sweep).map_err(CliError::from_solver)
        }
    }
}

fn diagram_panel(title: &str, diagram: &BifurcationDiagram, path: &[ContinuationStep]) -> Panel {
    let mut series =
        vec![Series::new("classical", path.iter().map(|s| (s.lambda, s.u_max())).collect(), Style::Line, 0)];
    for (branch, color) in [(Branch::Lower, 1), (Branch::Upper, 2)] {
        let pts: Vec<(f64, f64)> = diagram.branch(branch).map(|p| (p.lambda, p.u_max)).collect();
        if !pts.is_empty() {
            series.push(Series::new(format!("VQA {branch}"), pts, Style::Markers, color));
        }
    }
    Panel { title: title.into(), x_label: "lambda".into(), y_label: "u_max = u(0.5)".into(), series, note: None }
}

/// VQA predictor-corrector sweep along one branch.
pub fn cmd_continue(cfg: &RunConfig, branch: Branch) -> Result<Outcome, CliError> {
    prepare_dir(&cfg.out_dir)?;
    let mut outcome = Outcome::new();
    let lambdas = match branch {
        Branch::Lower => &cfg.lower_lambdas,
        Branch::Upper => &cfg.upper_lambdas,
    };
    let sweep = run_sweep(cfg, branch, lambdas)?;
    let profiles = cfg.out_dir.join("profiles");
    if !sweep.points.is_empty() {
        prepare_dir(&profiles)?;
    }
    for p in &sweep.points {
        outcome.converged &= p.converged;
        if !p.converged {
            outcome.warn(format!("{branch} point at lambda = {} not accepted (cost {:e})", p.lambda, p.final_cost));
        }
        let reference = classical_reference(p.lambda, branch, cfg);
        let name = format!("profile_{branch}_lambda_{}.csv", lambda_tag(p.lambda));
        write_table(profiles.join(name), &profile_table(p, reference.as_ref()), &mut outcome)?;
    }
    if let Some(lambda) = sweep.branch_lost {
        outcome.converged = false;
        outcome.warn(format!("upper branch lost at lambda = {lambda}"));
    }
    write_table(cfg.out_dir.join(format!("diagram_{branch}.csv")), &diagram_table(&sweep.points), &mut outcome)?;
    let diagram = match branch {
        Branch::Lower => build_diagram(&sweep.points, &[]),
        Branch::Upper => build_diagram(&[], &sweep.points),
    }
    .map_err(CliError::from_solver)?;
    let min_lambda = lambdas.iter().copied().filter(|l| *l > 0.0).fold(PATH_START_LAMBDA, f64::min);
    let path = classical_path(cfg, min_lambda)?;
    let panel = diagram_panel(&format!("VQA {branch} branch vs classical continuation"), &diagram, &path);
    write_text(cfg.out_dir.join(format!("bifurcation_{branch}.svg")), &figure(&[panel], 1), &mut outcome)?;
    let points = sweep.points.iter().map(PointSummary::from).collect();
    write_manifest(cfg, &format!("manifest_continue_{branch}.json"), "continue", None, Some(branch), points, &mut outcome)?;
    outcome.into_result(&format!("{branch} sweep has unaccepted points"))
}

/// Schedule for `compare`: the configured sweep points on the way to the
/// requested values, plus the requested values themselves.
fn merged_schedule(base: &[f64], wanted: &[f64], ascending: bool) -> Vec<f64> {
    let mut out: Vec<f64> = if ascending {
        let top = wanted.iter().copied().fold(f64::MIN, f64::max);
        base.iter().copied().filter(|l| *l <= top).collect()
    } else {
        let bottom = wanted.iter().copied().fold(f64::MAX, f64::min);
        base.iter().copied().filter(|l| *l >= bottom).collect()
    };
    out.extend(wanted.iter().copied());
    out.sort_by(f64::total_cmp);
    out.dedup();
    if !ascending {
        out.reverse();
    }
    out
}

/// Side-by-side VQA and classical profiles at the configured `lambda` values.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    prepare_dir(&cfg.out_dir)?;
    let mut outcome = Outcome::new();
    let lc = critical_lambda();
    let mut wanted = Vec::new();
    for &l in &cfg.compare_lambdas {
        if l >= lc {
            outcome.warn(format!("skipping lambda = {l}: beyond the fold lambda_c = {lc:.6}"));
        } else if !wanted.contains(&l) {
            wanted.push(l);
        }
    }

    let mut solved: Vec<BranchPoint> = Vec::new();
    if !wanted.is_empty() {
        let lower = run_sweep(cfg, Branch::Lower, &merged_schedule(&cfg.lower_lambdas, &wanted, true))?;
        solved.extend(lower.points);
        let positive: Vec<f64> = wanted.iter().copied().filter(|l| *l > 0.0).collect();
        if !positive.is_empty() {
            let upper = run_sweep(cfg, Branch::Upper, &merged_schedule(&cfg.upper_lambdas, &positive, false))?;
            if let Some(l) = upper.branch_lost {
                outcome.warn(format!("upper branch lost at lambda = {l}"));
            }
            solved.extend(upper.points);
        }
    }

    let mut panels = Vec::new();
    let mut summaries = Vec::new();
    for branch in [Branch::Lower, Branch::Upper] {
        for &lambda in &wanted {
            let title = format!("{branch} branch, lambda = {lambda}");
            let reference = classical_reference(lambda, branch, cfg);
            let point = solved.iter().find(|p| p.branch == branch && p.lambda == lambda);
            let mut panel = Panel { title, x_label: "x".into(), y_label: "u(x)".into(), ..Panel::default() };
            if let Some(r) = &reference {
                let mut pts = vec![(0.0, 0.0)];
                pts.extend(r.xs().into_iter().zip(r.u.iter().copied()));
                pts.push((1.0, 0.0));
                panel.series.push(Series::new("classical", pts, Style::Line, 0));
            }
            match point {
                Some(p) if p.converged => {
                    let name = format!("compare_profile_{branch}_lambda_{}.csv", lambda_tag(lambda));
                    write_table(cfg.out_dir.join(name), &profile_table(p, reference.as_ref()), &mut outcome)?;
                    let pts = p.grid_xs.iter().copied().zip(p.u_values.iter().copied()).collect();
                    panel.series.push(Series::new("quantum", pts, Style::Markers, 1));
                    summaries.push(PointSummary::from(p));
                }
                other => {
                    outcome.converged = false;
                    let why = match other {
                        Some(p) => format!("not converged (cost {:e})", p.final_cost),
                        None => "no solution".into(),
                    };
                    outcome.warn(format!("{branch} branch at lambda = {lambda}: {why}"));
                    if let Some(p) = other {
                        summaries.push(PointSummary::from(p));
                    }
                    panel.note = Some(format!("VQA solution missing: {why}"));
                }
            }
            panels.push(panel);
        }
    }
    if !panels.is_empty() {
        write_text(cfg.out_dir.join("compare.svg"), &figure(&panels, wanted.len()), &mut outcome)?;
    }
    write_manifest(cfg, "manifest_compare.json", "compare", None, None, summaries, &mut outcome)?;
    outcome.into_result("some branch solutions are missing")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_schedules() {
        let lower = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(merged_schedule(&lower, &[0.25, 0.1], true), vec![0.1, 0.2, 0.25]);
        let upper = [3.0, 2.0, 1.0];
        assert_eq!(merged_schedule(&upper, &[1.5, 0.5], false), vec![3.0, 2.0, 1.5, 1.0, 0.5]);
    }

    #[test]
    fn lambda_tags() {
        assert_eq!(lambda_tag(1.0), "1.0000");
        assert_eq!(lambda_tag(0.1), "0.1000");
    }

    #[test]
    fn beyond_fold_is_a_config_error() {
        assert!(matches!(check_below_fold(4.0), Err(CliError::Config(_))));
        assert!(check_below_fold(3.5).is_ok());
    }
}
