//! Exact statevector simulation of a small qubit register.
//!
//! Qubit 0 is the most significant bit of the basis-state index, so for three
//! qubits the amplitude of `|q0 q1 q2>` lives at index `4*q0 + 2*q1 + q2`.
//! Rotations use the half-angle convention `R_P(theta) = exp(-i theta P / 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on register size accepted by [`StateVector::zero`].
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    X,
    Y,
    Z,
}

impl Rotation {
    pub const ALL: [Rotation; 3] = [Rotation::X, Rotation::Y, Rotation::Z];

    /// Position of this axis in a per-qubit `[RX, RY, RZ]` triple.
    pub fn index(self) -> usize {
        match self {
            Rotation::X => 0,
            Rotation::Y => 1,
            Rotation::Z => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Rotation::X => "RX",
            Rotation::Y => "RY",
            Rotation::Z => "RZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rot {
        axis: Rotation,
        angle: f64,
        target: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    pub fn rx(target: usize, angle: f64) -> Self {
        Gate::Rot { axis: Rotation::X, angle, target }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Rot { axis: Rotation::Y, angle, target }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Gate::Rot { axis: Rotation::Z, angle, target }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// The gate that undoes this one.
    pub fn inverse(&self) -> Self {
        match *self {
            Gate::Rot { axis, angle, target } => Gate::Rot { axis, angle: -angle, target },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }

    /// Same gate with its rotation angle offset by `delta`; CNOT is returned unchanged.
    pub fn shifted(&self, delta: f64) -> Self {
        match *self {
            Gate::Rot { axis, angle, target } => Gate::Rot { axis, angle: angle + delta, target },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Rot { target, angle, .. } => {
                check_qubit(target, n_qubits)?;
                if !angle.is_finite() {
                    return Err(Error::NonFinite("rotation angle"));
                }
            }
            Gate::Cnot { control, target } => {
                check_qubit(control, n_qubits)?;
                check_qubit(target, n_qubits)?;
                if control == target {
                    return Err(Error::CnotSameQubit(control));
                }
            }
        }
        Ok(())
    }
}

fn check_qubit(qubit: usize, n_qubits: usize) -> Result<()> {
    if qubit >= n_qubits {
        Err(Error::QubitOutOfRange { qubit, n_qubits })
    } else {
        Ok(())
    }
}

/// The 2x2 matrix `[[a, b], [c, d]]` of a single-qubit rotation.
pub fn rotation_matrix(axis: Rotation, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Rotation::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Rotation::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Rotation::Z => [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, n_qubits })
    }

    /// Wraps raw amplitudes. The length must be a power of two; normalization is
    /// the caller's business.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidQubitCount(0));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(n_qubits));
        }
        Ok(Self { amplitudes, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit mask selecting `qubit` in a basis-state index.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Value-semantics gate application.
    pub fn apply(mut self, gate: &Gate) -> Result<Self> {
        self.apply_in_place(gate)?;
        Ok(self)
    }

    pub fn apply_in_place(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Applies a sequence of gates, validating each.
    pub fn apply_all<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for gate in gates {
            self.apply_in_place(gate)?;
        }
        Ok(())
    }

    /// Gate application without index validation. Callers must have validated
    /// the gate against this register already.
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::Rot { axis, angle, target } => self.apply_rotation(axis, angle, target),
            Gate::Cnot { control, target } => {
                let cm = self.mask(control);
                let tm = self.mask(target);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
        }
    }

    fn apply_rotation(&mut self, axis: Rotation, angle: f64, target: usize) {
        let tm = self.mask(target);
        let (s, c) = (angle / 2.0).sin_cos();
        let amps = &mut self.amplitudes;
        for i0 in 0..amps.len() {
            if i0 & tm != 0 {
                continue;
            }
            let i1 = i0 | tm;
            let (a0, a1) = (amps[i0], amps[i1]);
            match axis {
                Rotation::X => {
                    // -i s * a
                    let mis = |a: Complex64| Complex64::new(s * a.im, -s * a.re);
                    amps[i0] = a0 * c + mis(a1);
                    amps[i1] = mis(a0) + a1 * c;
                }
                Rotation::Y => {
                    amps[i0] = a0 * c - a1 * s;
                    amps[i1] = a0 * s + a1 * c;
                }
                Rotation::Z => {
                    amps[i0] = a0 * Complex64::new(c, -s);
                    amps[i1] = a1 * Complex64::new(c, s);
                }
            }
        }
    }

    /// Exact `<Z>` on `qubit`: `+|a|^2` where the qubit is 0, `-|a|^2` where it is 1.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.n_qubits)?;
        Ok(self.expectation_z_unchecked(qubit))
    }

    pub(crate) fn expectation_z_unchecked(&self, qubit: usize) -> f64 {
        let m = self.mask(qubit);
        let value: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        value.clamp(-1.0, 1.0)
    }
}
