//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero when any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bratu_vqa::ansatz::{evaluate_uq, gradient_uq, CircuitWeights};
use bratu_vqa::classical::{
    arc_length_continue, closed_form_solution, critical_lambda, lower_branch_u_max, reference_solution,
    solve_from_zero, ContinuationOptions, DEFAULT_M,
};
use bratu_vqa::continuation::{build_diagram, BranchPoint, UpperSweep};
use bratu_vqa::optim::Branch;
use bratu_vqa::pde::{cost, cost_gradient, trial, PredictorFunction, TrialConfig};
use bratu_vqa::qsim::{Gate, Rotation, StateVector};
use bratu_vqa_cli::commands::run_sweep;
use bratu_vqa_cli::RunConfig;

type Verdict = (bool, String);

static LOWER: OnceLock<UpperSweep> = OnceLock::new();
static UPPER: OnceLock<UpperSweep> = OnceLock::new();

fn lower_sweep() -> &'static UpperSweep {
    LOWER.get_or_init(|| {
        let cfg = RunConfig::default();
        run_sweep(&cfg, Branch::Lower, &cfg.lower_lambdas).expect("lower sweep runs")
    })
}

fn upper_sweep() -> &'static UpperSweep {
    UPPER.get_or_init(|| {
        let cfg = RunConfig::default();
        run_sweep(&cfg, Branch::Upper, &cfg.upper_lambdas).expect("upper sweep runs")
    })
}

fn sup_vs_classical(p: &BranchPoint) -> f64 {
    let r = reference_solution(p.lambda, p.branch, DEFAULT_M).expect("classical reference");
    p.grid_xs.iter().zip(&p.u_values).map(|(x, u)| (u - r.value_at(*x)).abs()).fold(0.0, f64::max)
}

// --- criterion 1 --------------------------------------------------------------

type Matrix = Vec<Vec<Complex64>>;

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn eye() -> Matrix {
    vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]
}

fn dense(gate: &Gate, n: usize) -> Matrix {
    let mut factors_a: Vec<Matrix> = vec![eye(); n];
    let mut factors_b: Option<Vec<Matrix>> = None;
    match *gate {
        Gate::Rot { axis, angle, target } => {
            let (co, si) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            factors_a[target] = match axis {
                Rotation::X => vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]],
                Rotation::Y => vec![vec![c(co, 0.0), c(-si, 0.0)], vec![c(si, 0.0), c(co, 0.0)]],
                Rotation::Z => vec![vec![c(co, -si), c(0.0, 0.0)], vec![c(0.0, 0.0), c(co, si)]],
            };
        }
        Gate::Cnot { control, target } => {
            let zero = c(0.0, 0.0);
            factors_a[control] = vec![vec![c(1.0, 0.0), zero], vec![zero, zero]];
            let mut b = vec![eye(); n];
            b[control] = vec![vec![zero, zero], vec![zero, c(1.0, 0.0)]];
            b[target] = vec![vec![zero, c(1.0, 0.0)], vec![c(1.0, 0.0), zero]];
            factors_b = Some(b);
        }
    }
    let product = |fs: &[Matrix]| fs.iter().skip(1).fold(fs[0].clone(), |m, f| kron(&m, f));
    let a = product(&factors_a);
    match factors_b {
        None => a,
        Some(b) => {
            let b = product(&b);
            a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect()).collect()
        }
    }
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3usize);
        let len = rng.gen_range(1..=40usize);
        let mut state = StateVector::zero(n).unwrap();
        let mut reference = state.amplitudes().to_vec();
        for _ in 0..len {
            let gate = if n > 1 && rng.gen_bool(0.3) {
                let control = rng.gen_range(0..n);
                Gate::cnot(control, (control + rng.gen_range(1..n)) % n)
            } else {
                let axis = Rotation::ALL[rng.gen_range(0..3)];
                Gate::Rot { axis, angle: rng.gen_range(-7.0..7.0), target: rng.gen_range(0..n) }
            };
            state.apply_in_place(&gate).unwrap();
            let m = dense(&gate, n);
            reference = m.iter().map(|row| row.iter().zip(&reference).map(|(a, b)| a * b).sum()).collect();
        }
        for (a, b) in state.amplitudes().iter().zip(&reference) {
            worst = worst.max((a - b).norm());
        }
    }
    (worst <= 1e-12, format!("100 circuits, n <= 3, max amplitude deviation {worst:.2e} (tol 1e-12)"))
}

// --- criterion 2 --------------------------------------------------------------

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_uq: f64 = 0.0;
    let mut worst_cost: f64 = 0.0;
    let draws = 20;
    let bump = |w: &CircuitWeights, p: usize, d: f64| {
        let mut out = w.clone();
        out.as_mut_slice()[p] += d;
        out
    };
    for _ in 0..draws {
        let angles = (0..36).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let w = CircuitWeights::from_vec(4, 3, angles).unwrap();

        let x = rng.gen_range(0.0..=1.0);
        let g = gradient_uq(x, &w).unwrap();
        let h = 1e-6;
        for (p, gp) in g.iter().enumerate() {
            let fd =
                (evaluate_uq(x, &bump(&w, p, h)).unwrap() - evaluate_uq(x, &bump(&w, p, -h)).unwrap()) / (2.0 * h);
            worst_uq = worst_uq.max((gp - fd).abs());
        }

        let lambda = rng.gen_range(0.0..3.5);
        let cfg = TrialConfig::new(lambda, 4.0, 1e-3, 10).unwrap();
        let grid = cfg.grid();
        let g = cost_gradient(&w, &cfg, &grid).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..w.len())
            .map(|p| {
                (cost(&bump(&w, p, h), &cfg, &grid).unwrap() - cost(&bump(&w, p, -h), &cfg, &grid).unwrap()) / (2.0 * h)
            })
            .collect();
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_cost = worst_cost.max(diff / scale);
    }
    (
        worst_uq <= 1e-6 && worst_cost <= 1e-5,
        format!(
            "{draws} draws (n=3, L=4, N=10): gradient_uq max abs dev {worst_uq:.2e} (tol 1e-6), \
             cost_gradient max rel dev {worst_cost:.2e} (tol 1e-5)"
        ),
    )
}

// --- criterion 3 --------------------------------------------------------------

fn criterion_3() -> Verdict {
    let start = solve_from_zero(0.05, DEFAULT_M).unwrap();
    let opts = ContinuationOptions { delta_s: 0.05, stop_below_lambda: Some(0.5), ..Default::default() };
    let path = match arc_length_continue(&start, opts) {
        Ok(p) => p,
        Err(e) => return (false, format!("continuation failed: {e}")),
    };
    let peak = path.iter().map(|s| s.lambda).fold(f64::MIN, f64::max);
    let lc = critical_lambda();
    let dev = (peak - lc).abs();
    (dev <= 1e-3, format!("path max lambda {peak:.6}, lambda_c {lc:.10}, deviation {dev:.2e} (tol 1e-3)"))
}

// --- criterion 4 --------------------------------------------------------------

fn criterion_4() -> Verdict {
    let exact = closed_form_solution(1.0, Branch::Lower).unwrap();
    let sup = |m: usize| {
        let s = solve_from_zero(1.0, m).unwrap();
        s.xs().iter().zip(&s.u).map(|(x, u)| (u - exact.u(*x)).abs()).fold(0.0, f64::max)
    };
    let e999 = sup(999);
    let errs = [sup(99), sup(199), sup(399)];
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];
    let ok = e999 <= 1e-4 && (3.5..=4.5).contains(&r1) && (3.5..=4.5).contains(&r2);
    (ok, format!("M=999 sup error {e999:.2e} (tol 1e-4); ratios M 99->199 {r1:.3}, 199->399 {r2:.3} (band [3.5, 4.5])"))
}

// --- criterion 5 --------------------------------------------------------------

fn criterion_5() -> Verdict {
    let sweep = lower_sweep();
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.1, 1.0, 3.0] {
        match sweep.points.iter().find(|p| (p.lambda - lambda).abs() < 1e-12) {
            Some(p) => {
                let err = sup_vs_classical(p);
                let pass = err < 1e-2 && p.final_cost < 1e-3;
                ok &= pass;
                parts.push(format!("lambda={lambda}: sup {err:.2e}, cost {:.2e}", p.final_cost));
            }
            None => {
                ok = false;
                parts.push(format!("lambda={lambda}: missing"));
            }
        }
    }
    (ok, format!("{} (tol sup 1e-2, cost 1e-3)", parts.join("; ")))
}

// --- criterion 6 --------------------------------------------------------------

fn criterion_6() -> Verdict {
    let sweep = upper_sweep();
    let points: Vec<&BranchPoint> = sweep.points.iter().filter(|p| p.lambda >= 1.0 - 1e-12).collect();
    let accepted: Vec<&&BranchPoint> = points.iter().filter(|p| p.converged).collect();
    let mut worst: f64 = 0.0;
    let mut above = true;
    for p in &accepted {
        worst = worst.max(sup_vs_classical(p));
        above &= lower_branch_u_max(p.lambda).is_some_and(|lo| p.u_max > lo);
    }
    let seeded = points.first().is_some_and(|p| (p.lambda - 3.0).abs() < 1e-12);
    let ok = seeded && !accepted.is_empty() && worst < 5e-2 && above && sweep.branch_lost.is_none();
    let rejected: Vec<String> = points.iter().filter(|p| !p.converged).map(|p| format!("{}", p.lambda)).collect();
    (
        ok,
        format!(
            "{} of {} points in [1.0, 3.0] accepted, worst accepted sup {worst:.2e} (tol 5e-2), all above lower: {above}, \
             not accepted: [{}]",
            accepted.len(),
            points.len(),
            rejected.join(", ")
        ),
    )
}

// --- criterion 7 --------------------------------------------------------------

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let us: Vec<f64> = xs.iter().map(|x| 3.0 * x * (1.0 - x)).collect();
    let predictor = PredictorFunction::from_samples(xs, us, [-6.0, -6.0]).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let angles = (0..36).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let w = CircuitWeights::from_vec(4, 3, angles).unwrap();
        let mut cfg = TrialConfig::new(rng.gen_range(0.0..3.5), rng.gen_range(0.0..10.0), 1e-3, 100).unwrap();
        if k % 2 == 1 {
            cfg = cfg.with_predictor(predictor.clone());
        }
        worst = worst.max(trial(0.0, &w, &cfg).unwrap().abs()).max(trial(1.0, &w, &cfg).unwrap().abs());
    }
    (worst <= f64::EPSILON, format!("1000 draws, max |u(0)|, |u(1)| = {worst:.2e}"))
}

// --- criterion 8 --------------------------------------------------------------

fn solve_once(out: &PathBuf) -> Result<(Vec<u8>, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_bratu-vqa"))
        .args(["solve", "--lambda", "1.0", "--seed", "42", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !matches!(status.status.code(), Some(0) | Some(3)) {
        return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let manifest = std::fs::read(out.join("manifest_solve.json")).map_err(|e| e.to_string())?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report_lower_lambda_1.0000.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let history = serde_json::to_vec(&report["cost_history"]).map_err(|e| e.to_string())?;
    Ok((manifest, history))
}

fn criterion_8() -> Verdict {
    let out = std::env::temp_dir().join(format!("bratu-acceptance-{}", std::process::id()));
    let result = (|| {
        let a = solve_once(&out)?;
        let b = solve_once(&out)?;
        Ok::<_, String>((a, b))
    })();
    let _ = std::fs::remove_dir_all(&out);
    match result {
        Ok(((m1, h1), (m2, h2))) => {
            let ok = m1 == m2 && h1 == h2 && !h1.is_empty();
            (ok, format!("manifests identical: {}, cost histories identical: {}", m1 == m2, h1 == h2))
        }
        Err(e) => (false, format!("solve failed: {e}")),
    }
}

// --- criterion 9 --------------------------------------------------------------

fn criterion_9() -> Verdict {
    let lower = lower_sweep();
    let upper = upper_sweep();
    match build_diagram(&lower.points, &upper.points) {
        Ok(d) => {
            let shared = d
                .branch(Branch::Lower)
                .filter(|l| d.branch(Branch::Upper).any(|u| u.lambda == l.lambda))
                .count();
            let lo = d.lower_is_monotone();
            let up = d.upper_is_monotone();
            (
                lo && up && shared > 0,
                format!(
                    "{} lower + {} upper points; ordering holds at {shared} shared lambdas; lower monotone: {lo}; \
                     upper monotone: {up}",
                    lower.points.len(),
                    upper.points.len()
                ),
            )
        }
        Err(e) => (false, format!("diagram invariant violated: {e}")),
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("gate application matches dense unitaries", criterion_1),
        ("parameter-shift gradients match finite differences", criterion_2),
        ("classical fold location", criterion_3),
        ("classical accuracy and second-order convergence", criterion_4),
        ("lower-branch VQA at lambda 0.1, 1.0, 3.0", criterion_5),
        ("upper-branch VQA sweep 3.0 -> 1.0", criterion_6),
        ("boundary exactness", criterion_7),
        ("determinism of `solve --lambda 1.0 --seed 42`", criterion_8),
        ("bifurcation diagram invariants on default sweeps", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {detail} ({:.1} s)", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
