//! The quantum model `u_q(x; theta)`.
//!
//! An input `x` is mapped to three features, written onto the register with one
//! `RY` per qubit (qubit `i` takes feature `i mod 3`), then processed by `L`
//! entangling layers. Each layer applies `RX`, `RY`, `RZ` to every qubit followed
//! by a stride-1 CNOT ring. The model output is `<Z>` on the last qubit.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Gate, Rotation, StateVector};

/// The three encoded features of a collocation coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; 3]);

impl FeatureVector {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i % 3]
    }
}

/// `[sin(pi x), exp(-10 (x - 1/2)^2), sin(3 pi x)]`.
pub fn encode_features(x: f64) -> Result<FeatureVector> {
    check_domain(x)?;
    Ok(FeatureVector([
        (PI * x).sin(),
        (-10.0 * (x - 0.5).powi(2)).exp(),
        (3.0 * PI * x).sin(),
    ]))
}

fn check_domain(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutsideDomain(x))
    }
}

/// Trainable rotation angles, shape `layers x qubits x 3`, stored row-major so
/// the flat position of `(layer, qubit, rotation)` is
/// `layer * (qubits * 3) + qubit * 3 + rotation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitWeights {
    layers: usize,
    qubits: usize,
    angles: Vec<f64>,
}

impl CircuitWeights {
    pub fn zeros(layers: usize, qubits: usize) -> Result<Self> {
        Self::from_vec(layers, qubits, vec![0.0; layers * qubits * 3])
    }

    pub fn from_vec(layers: usize, qubits: usize, angles: Vec<f64>) -> Result<Self> {
        if qubits == 0 || qubits > crate::qsim::MAX_QUBITS {
            return Err(Error::InvalidQubitCount(qubits));
        }
        let expected = layers * qubits * 3;
        if angles.len() != expected {
            return Err(Error::ShapeMismatch { expected, actual: angles.len() });
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("circuit weights"));
        }
        Ok(Self { layers, qubits, angles })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn flat_index(&self, layer: usize, qubit: usize, rotation: Rotation) -> usize {
        layer * self.qubits * 3 + qubit * 3 + rotation.index()
    }

    pub fn get(&self, layer: usize, qubit: usize, rotation: Rotation) -> f64 {
        self.angles[self.flat_index(layer, qubit, rotation)]
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn unflatten(&self, index: usize) -> (usize, usize, Rotation) {
        let per_layer = self.qubits * 3;
        let layer = index / per_layer;
        let qubit = (index % per_layer) / 3;
        (layer, qubit, Rotation::ALL[index % 3])
    }

    /// `(flat index, layer, qubit, rotation, angle)` for every parameter.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, usize, Rotation, f64)> + '_ {
        self.angles.iter().enumerate().map(move |(i, &a)| {
            let (l, q, r) = self.unflatten(i);
            (i, l, q, r, a)
        })
    }
}

fn ring_len(qubits: usize) -> usize {
    if qubits > 1 {
        qubits
    } else {
        0
    }
}

/// Gate position of trainable parameter `param` inside the sequence produced by
/// [`build_circuit`].
fn gate_position(qubits: usize, param: usize) -> usize {
    let per_layer = 3 * qubits;
    let layer = param / per_layer;
    qubits + layer * (per_layer + ring_len(qubits)) + param % per_layer
}

/// Embedding rotations followed by the entangling layers.
pub fn build_circuit(x: f64, weights: &CircuitWeights) -> Result<Vec<Gate>> {
    let features = encode_features(x)?;
    let n = weights.qubits;
    let mut gates = Vec::with_capacity(n + weights.layers * (3 * n + ring_len(n)));
    gates.extend((0..n).map(|q| Gate::ry(q, features.get(q))));
    for layer in 0..weights.layers {
        for q in 0..n {
            for axis in Rotation::ALL {
                gates.push(Gate::Rot { axis, angle: weights.get(layer, q, axis), target: q });
            }
        }
        if n > 1 {
            gates.extend((0..n).map(|q| Gate::cnot(q, (q + 1) % n)));
        }
    }
    Ok(gates)
}

fn run(qubits: usize, gates: &[Gate]) -> StateVector {
    let mut state = StateVector::zero(qubits).expect("qubit count validated by CircuitWeights");
    for g in gates {
        state.apply_unchecked(g);
    }
    state
}

/// `<Z_{n-1}>` of the circuit applied to `|0...0>`.
pub fn evaluate_uq(x: f64, weights: &CircuitWeights) -> Result<f64> {
    let gates = build_circuit(x, weights)?;
    let n = weights.qubits;
    Ok(run(n, &gates).expectation_z_unchecked(n - 1))
}

/// Parameter-shift gradient of [`evaluate_uq`] with respect to every trainable
/// angle, in flat weight order. Embedding angles are inputs and are not
/// differentiated.
pub fn gradient_uq(x: f64, weights: &CircuitWeights) -> Result<Vec<f64>> {
    value_and_gradient_uq(x, weights).map(|(_, g)| g)
}

/// `u_q` together with its parameter-shift gradient.
///
/// States in front of each trainable gate are cached from one forward pass, so
/// each shifted evaluation only replays the suffix of the circuit.
pub fn value_and_gradient_uq(x: f64, weights: &CircuitWeights) -> Result<(f64, Vec<f64>)> {
    let gates = build_circuit(x, weights)?;
    let n = weights.qubits;
    let readout = n - 1;

    let mut prefixes = Vec::with_capacity(weights.len());
    let mut state = StateVector::zero(n)?;
    let mut next_param = 0;
    for (pos, g) in gates.iter().enumerate() {
        if next_param < weights.len() && gate_position(n, next_param) == pos {
            prefixes.push(state.clone());
            next_param += 1;
        }
        state.apply_unchecked(g);
    }
    let value = state.expectation_z_unchecked(readout);

    let grad = prefixes
        .into_iter()
        .enumerate()
        .map(|(param, prefix)| {
            let pos = gate_position(n, param);
            let shifted = |delta: f64| {
                let mut s = prefix.clone();
                s.apply_unchecked(&gates[pos].shifted(delta));
                for g in &gates[pos + 1..] {
                    s.apply_unchecked(g);
                }
                s.expectation_z_unchecked(readout)
            };
            (shifted(FRAC_PI_2) - shifted(-FRAC_PI_2)) / 2.0
        })
        .collect();
    Ok((value, grad))
}
