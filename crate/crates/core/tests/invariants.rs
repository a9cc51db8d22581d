use proptest::prelude::*;

use bratu_vqa::ansatz::{evaluate_uq, CircuitWeights};
use bratu_vqa::classical::{closed_form_solution, critical_lambda};
use bratu_vqa::optim::Branch;
use bratu_vqa::pde::{trial, PredictorFunction, TrialConfig};
use bratu_vqa::qsim::{Gate, StateVector};

fn weights(layers: usize, qubits: usize) -> impl Strategy<Value = CircuitWeights> {
    prop::collection::vec(-7.0..7.0f64, layers * qubits * 3)
        .prop_map(move |a| CircuitWeights::from_vec(layers, qubits, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trial_vanishes_at_both_ends(w in weights(4, 3), lambda in 0.0..3.5f64, s in 0.0..10.0f64, a in -3.0..3.0f64) {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let us = xs.iter().map(|x| 4.0 * a * x * (1.0 - x)).collect();
        let p = PredictorFunction::from_samples(xs, us, [-8.0 * a, -8.0 * a]).unwrap();
        let cfg = TrialConfig::new(lambda, s, 1e-3, 100).unwrap().with_predictor(p);
        prop_assert!(trial(0.0, &w, &cfg).unwrap().abs() <= f64::EPSILON);
        prop_assert!(trial(1.0, &w, &cfg).unwrap().abs() <= f64::EPSILON);
    }

    #[test]
    fn quantum_output_is_an_expectation(w in weights(3, 2), x in 0.0..1.0f64) {
        let u = evaluate_uq(x, &w).unwrap();
        prop_assert!(u.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn gates_preserve_norm_and_invert(angles in prop::collection::vec(-7.0..7.0f64, 9)) {
        let mut gates = Vec::new();
        for (k, a) in angles.iter().enumerate() {
            let q = k % 3;
            gates.push(match k % 3 { 0 => Gate::rx(q, *a), 1 => Gate::ry(q, *a), _ => Gate::rz(q, *a) });
            gates.push(Gate::cnot(q, (q + 1) % 3));
        }
        let mut psi = StateVector::zero(3).unwrap();
        psi.apply_all(&gates).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let inverse: Vec<Gate> = gates.iter().rev().map(Gate::inverse).collect();
        psi.apply_all(&inverse).unwrap();
        prop_assert!((psi.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_branches_are_ordered(lambda in 0.01..3.5f64, x in 0.01..0.99f64) {
        prop_assume!(lambda < critical_lambda());
        let lo = closed_form_solution(lambda, Branch::Lower).unwrap().u(x);
        let hi = closed_form_solution(lambda, Branch::Upper).unwrap().u(x);
        prop_assert!(hi > lo && lo > 0.0);
    }
}
