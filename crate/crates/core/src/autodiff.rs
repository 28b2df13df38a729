//! Analytic gradients of circuit expectation values.
//!
//! Every parameterized gate in the simulator is `exp(-iθP/2)` with a Pauli
//! word `P`, so `∂E/∂θ = ½[E(θ + π/2) − E(θ − π/2)]` holds exactly per gate
//! angle. A slot that feeds several angles (re-uploaded inputs) gets the sum
//! over its occurrences, times the chain-rule factor of its input transform.

use std::f64::consts::FRAC_PI_2;

use crate::circuits::{Angle, Circuit};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::qsim::{simulate, Gate, Statevector};

/// Weighted sum of single-qubit `Z` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<(usize, f64)>,
}

impl Observable {
    pub fn z(qubit: usize) -> Self {
        Observable { terms: vec![(qubit, 1.0)] }
    }

    pub fn weighted(terms: Vec<(usize, f64)>) -> Self {
        Observable { terms }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        match self.terms.iter().find(|(q, _)| *q >= n_qubits) {
            Some((q, _)) => Err(invalid(format!("observable qubit {q} out of range"))),
            None => Ok(()),
        }
    }

    pub fn expectation(&self, state: &Statevector) -> f64 {
        let z = state.expectations_z();
        self.terms.iter().map(|&(q, w)| w * z[q]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    Trainable,
    Inputs,
}

#[derive(Clone, Copy, Debug)]
pub struct GradientRequest<'a> {
    pub circuit: &'a Circuit,
    pub params: &'a [f64],
    pub inputs: &'a [f64],
    pub observable: &'a Observable,
    pub wrt: Wrt,
}

impl GradientRequest<'_> {
    fn validate(&self) -> Result<()> {
        self.observable.validate(self.circuit.n_qubits())?;
        self.circuit.bind(self.params, self.inputs).map(|_| ())
    }
}

/// One differentiable gate angle and how it maps onto the differentiated variables.
struct ShiftSlot {
    op: usize,
    angle: usize,
    /// `(is_input, variable index, ∂angle/∂variable)`
    chain: Vec<(bool, usize, f64)>,
}

fn shift_slots(circuit: &Circuit, inputs: &[f64], params: bool, ins: bool) -> Result<Vec<ShiftSlot>> {
    let mut slots = Vec::new();
    for (i, op) in circuit.ops().iter().enumerate() {
        for (k, a) in op.angles.iter().enumerate() {
            let chain: Vec<(bool, usize, f64)> = match a {
                Angle::Trainable(p) if params => vec![(false, *p, 1.0)],
                Angle::Input { .. } if ins => a
                    .input_partials(inputs)
                    .into_iter()
                    .map(|(j, d)| (true, j, d))
                    .collect(),
                _ => continue,
            };
            if !op.kind.has_shift_rule() {
                return Err(Error::UnsupportedGate(op.kind.to_string()));
            }
            slots.push(ShiftSlot { op: i, angle: k, chain });
        }
    }
    Ok(slots)
}

/// `d readout / d angle` for every slot, each entry a vector over readout outputs.
fn shifted_derivatives<F>(
    n_qubits: usize,
    gates: &[Gate],
    slots: &[ShiftSlot],
    readout: &F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Statevector) -> Vec<f64> + Sync,
{
    par::try_map_range(slots.len(), |s| {
        let slot = &slots[s];
        let mut shifted = gates.to_vec();
        let base = gates[slot.op].angles()[slot.angle];
        shifted[slot.op].set_angle(slot.angle, base + FRAC_PI_2);
        let plus = readout(&simulate(n_qubits, &shifted)?);
        shifted[slot.op].set_angle(slot.angle, base - FRAC_PI_2);
        let minus = readout(&simulate(n_qubits, &shifted)?);
        Ok(plus.iter().zip(&minus).map(|(p, m)| 0.5 * (p - m)).collect())
    })
}

/// Parameter-shift gradient of `req.observable` with respect to `req.wrt`.
pub fn param_shift_grad(req: &GradientRequest<'_>) -> Result<Vec<f64>> {
    req.validate()?;
    let circuit = req.circuit;
    let gates = circuit.bind(req.params, req.inputs)?;
    let (dim, params, ins) = match req.wrt {
        Wrt::Trainable => (circuit.n_trainable(), true, false),
        Wrt::Inputs => (circuit.n_inputs(), false, true),
    };
    let slots = shift_slots(circuit, req.inputs, params, ins)?;
    let obs = req.observable;
    let readout = |s: &Statevector| vec![obs.expectation(s)];
    let derivs = shifted_derivatives(circuit.n_qubits(), &gates, &slots, &readout)?;
    let mut grad = vec![0.0; dim];
    for (slot, d) in slots.iter().zip(&derivs) {
        for &(_, j, factor) in &slot.chain {
            grad[j] += factor * d[0];
        }
    }
    Ok(grad)
}

/// Central finite differences `(E(v+h) − E(v−h)) / 2h` over the raw
/// parameter or input vector. Independent of the shift machinery; serves
/// as a test oracle.
pub fn finite_diff_grad(req: &GradientRequest<'_>, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    req.validate()?;
    let base: &[f64] = match req.wrt {
        Wrt::Trainable => req.params,
        Wrt::Inputs => req.inputs,
    };
    let eval = |v: &[f64]| -> Result<f64> {
        let state = match req.wrt {
            Wrt::Trainable => req.circuit.run(v, req.inputs)?,
            Wrt::Inputs => req.circuit.run(req.params, v)?,
        };
        Ok(req.observable.expectation(&state))
    };
    par::try_map_range(base.len(), |j| {
        let mut v = base.to_vec();
        v[j] = base[j] + h;
        let plus = eval(&v)?;
        v[j] = base[j] - h;
        let minus = eval(&v)?;
        Ok((plus - minus) / (2.0 * h))
    })
}

/// Per-qubit `⟨Z⟩` readouts together with their Jacobians.
#[derive(Clone, Debug, PartialEq)]
pub struct ZJacobian {
    /// `⟨Z_q⟩` for each qubit.
    pub values: Vec<f64>,
    /// `d_params[q][p] = ∂⟨Z_q⟩/∂θ_p`
    pub d_params: Vec<Vec<f64>>,
    /// `d_inputs[q][i] = ∂⟨Z_q⟩/∂x_i`
    pub d_inputs: Vec<Vec<f64>>,
}

/// Forward readout plus full parameter and input Jacobians of all `⟨Z_q⟩`,
/// sharing each shifted simulation across every qubit readout.
pub fn z_jacobian(circuit: &Circuit, params: &[f64], inputs: &[f64]) -> Result<ZJacobian> {
    let gates = circuit.bind(params, inputs)?;
    let n = circuit.n_qubits();
    let values = simulate(n, &gates)?.expectations_z();
    let slots = shift_slots(circuit, inputs, true, true)?;
    let readout = |s: &Statevector| s.expectations_z();
    let derivs = shifted_derivatives(n, &gates, &slots, &readout)?;
    let mut d_params = vec![vec![0.0; circuit.n_trainable()]; n];
    let mut d_inputs = vec![vec![0.0; circuit.n_inputs()]; n];
    for (slot, d) in slots.iter().zip(&derivs) {
        for &(is_input, j, factor) in &slot.chain {
            let target = if is_input { &mut d_inputs } else { &mut d_params };
            for q in 0..n {
                target[q][j] += factor * d[q];
            }
        }
    }
    Ok(ZJacobian { values, d_params, d_inputs })
}

/// Like [`z_jacobian`] but only differentiating trainable parameters.
pub fn z_param_jacobian(
    circuit: &Circuit,
    params: &[f64],
    inputs: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let gates = circuit.bind(params, inputs)?;
    let n = circuit.n_qubits();
    let values = simulate(n, &gates)?.expectations_z();
    let slots = shift_slots(circuit, inputs, true, false)?;
    let readout = |s: &Statevector| s.expectations_z();
    let derivs = shifted_derivatives(n, &gates, &slots, &readout)?;
    let mut jac = vec![vec![0.0; circuit.n_trainable()]; n];
    for (slot, d) in slots.iter().zip(&derivs) {
        for &(_, j, factor) in &slot.chain {
            for q in 0..n {
                jac[q][j] += factor * d[q];
            }
        }
    }
    Ok((values, jac))
}
