//! Parameterized circuits and the model templates built from them.
//!
//! A [`Circuit`] is a list of gate slots whose angles are either constants,
//! trainable parameters, or (transformed) input features. Binding a
//! parameter vector and an input vector produces concrete [`Gate`]s.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::{simulate, Gate, GateKind, Statevector};

/// Non-linearity applied to an input feature before it becomes an angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputTransform {
    Identity,
    Arctan,
    ArctanSquare,
    /// `(π − x_index)(π − x_other)`, the pairwise phase of the ZZ feature map.
    ZzProduct { other: usize },
}

/// Where a gate angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Trainable(usize),
    /// `scale · transform(x[index])`.
    Input { index: usize, transform: InputTransform, scale: f64 },
}

impl Angle {
    pub fn input(index: usize) -> Self {
        Angle::Input { index, transform: InputTransform::Identity, scale: 1.0 }
    }

    pub fn input_with(index: usize, transform: InputTransform, scale: f64) -> Self {
        Angle::Input { index, transform, scale }
    }

    pub fn value(&self, params: &[f64], inputs: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(v) => v,
            Angle::Trainable(k) => params[k],
            Angle::Input { index, transform, scale } => {
                let x = inputs[index];
                scale
                    * match transform {
                        InputTransform::Identity => x,
                        InputTransform::Arctan => x.atan(),
                        InputTransform::ArctanSquare => (x * x).atan(),
                        InputTransform::ZzProduct { other } => (PI - x) * (PI - inputs[other]),
                    }
            }
        }
    }

    /// Partial derivatives of the angle with respect to the input features it
    /// reads, as `(feature index, ∂angle/∂x)` pairs.
    pub fn input_partials(&self, inputs: &[f64]) -> Vec<(usize, f64)> {
        match *self {
            Angle::Input { index, transform, scale } => {
                let x = inputs[index];
                match transform {
                    InputTransform::Identity => vec![(index, scale)],
                    InputTransform::Arctan => vec![(index, scale / (1.0 + x * x))],
                    InputTransform::ArctanSquare => {
                        vec![(index, scale * 2.0 * x / (1.0 + x.powi(4)))]
                    }
                    InputTransform::ZzProduct { other } => {
                        let y = inputs[other];
                        vec![(index, -scale * (PI - y)), (other, -scale * (PI - x))]
                    }
                }
            }
            _ => Vec::new(),
        }
    }
}

/// One gate slot of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Op {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angles: Vec<Angle>,
}

/// Template name plus shape, e.g. `("reuploading_sel", [4, 4])`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub template: String,
    pub shape: Vec<usize>,
}

impl Layout {
    pub fn new(template: impl Into<String>, shape: Vec<usize>) -> Self {
        Layout { template: template.into(), shape }
    }
}

/// Trainable angles laid out for a particular template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ParamVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    n_inputs: usize,
    ops: Vec<Op>,
    layout: Layout,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_inputs: usize, layout: Layout) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::qsim::MAX_QUBITS {
            return Err(invalid(format!("unsupported register size {n_qubits}")));
        }
        Ok(Circuit { n_qubits, n_params: 0, n_inputs, ops: Vec::new(), layout })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Declared number of trainable parameters.
    pub fn n_trainable(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Number of gate slots.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Claim the next trainable slot index.
    pub fn new_param(&mut self) -> Angle {
        self.n_params += 1;
        Angle::Trainable(self.n_params - 1)
    }

    pub fn push(&mut self, kind: GateKind, targets: &[usize], angles: &[Angle]) -> Result<()> {
        if targets.len() != kind.n_targets() || angles.len() != kind.n_angles() {
            return Err(invalid(format!("bad arity for {kind}")));
        }
        if targets.iter().any(|&q| q >= self.n_qubits) {
            return Err(invalid(format!("{kind} target out of range")));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(invalid(format!("{kind} targets must be distinct")));
        }
        for a in angles {
            match *a {
                Angle::Trainable(k) if k >= self.n_params => {
                    return Err(invalid(format!("trainable slot {k} not declared")));
                }
                Angle::Input { index, transform, .. } => {
                    let other = match transform {
                        InputTransform::ZzProduct { other } => other,
                        _ => index,
                    };
                    if index >= self.n_inputs || other >= self.n_inputs {
                        return Err(invalid(format!("input slot {index} not declared")));
                    }
                }
                _ => {}
            }
        }
        self.ops.push(Op { kind, targets: targets.to_vec(), angles: angles.to_vec() });
        Ok(())
    }

    fn fixed(&mut self, gate: Gate) -> Result<()> {
        let angles: Vec<Angle> = gate.angles().iter().map(|&a| Angle::Fixed(a)).collect();
        self.push(gate.kind(), gate.targets(), &angles)
    }

    fn rot(&mut self, kind: GateKind, q: usize, a: Angle) -> Result<()> {
        self.push(kind, &[q], &[a])
    }

    /// Append `other` after `self`. Parameters of `other` are renumbered
    /// after those of `self`; both halves read the same input vector.
    pub fn then(&self, other: &Circuit, layout: Layout) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(invalid("composed circuits must share a register"));
        }
        let mut out = self.clone();
        out.n_inputs = self.n_inputs.max(other.n_inputs);
        out.layout = layout;
        for op in &other.ops {
            let angles = op
                .angles
                .iter()
                .map(|a| match *a {
                    Angle::Trainable(k) => Angle::Trainable(k + self.n_params),
                    a => a,
                })
                .collect();
            out.ops.push(Op { kind: op.kind, targets: op.targets.clone(), angles });
        }
        out.n_params += other.n_params;
        Ok(out)
    }

    fn check_lengths(&self, params: &[f64], inputs: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if inputs.len() != self.n_inputs {
            return Err(invalid(format!("expected {} inputs, got {}", self.n_inputs, inputs.len())));
        }
        Ok(())
    }

    /// Resolve every slot into a concrete gate.
    pub fn bind(&self, params: &[f64], inputs: &[f64]) -> Result<Vec<Gate>> {
        self.check_lengths(params, inputs)?;
        self.ops
            .iter()
            .map(|op| {
                let angles: Vec<f64> = op.angles.iter().map(|a| a.value(params, inputs)).collect();
                Gate::new(op.kind, &op.targets, &angles)
            })
            .collect()
    }

    /// Bind and simulate from `|0…0⟩`.
    pub fn run(&self, params: &[f64], inputs: &[f64]) -> Result<Statevector> {
        let gates = self.bind(params, inputs)?;
        simulate(self.n_qubits, &gates)
    }

    pub fn run_with(&self, params: &ParamVector, inputs: &[f64]) -> Result<Statevector> {
        if params.layout != self.layout {
            return Err(invalid(format!(
                "parameter layout {:?} does not match circuit {:?}",
                params.layout, self.layout
            )));
        }
        self.run(&params.values, inputs)
    }

    /// Distinct trainable slot indices referenced by the emitted gates.
    pub fn emitted_trainable_slots(&self) -> usize {
        let mut seen = vec![false; self.n_params];
        for op in &self.ops {
            for a in &op.angles {
                if let Angle::Trainable(k) = a {
                    seen[*k] = true;
                }
            }
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Number of gate angles that read input feature `i`.
    pub fn input_occurrences(&self, i: usize) -> usize {
        self.ops
            .iter()
            .flat_map(|op| op.angles.iter())
            .filter(|a| match a {
                Angle::Input { index, transform, .. } => {
                    *index == i
                        || matches!(transform, InputTransform::ZzProduct { other } if *other == i)
                }
                _ => false,
            })
            .count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.ops.iter().filter(|op| op.kind == kind).count()
    }

    /// Parameters drawn uniformly from `[-π/8, π/8]`.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let bound = PI / 8.0;
        ParamVector {
            values: (0..self.n_params).map(|_| rng.random_range(-bound..=bound)).collect(),
            layout: self.layout.clone(),
        }
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector { values: vec![0.0; self.n_params], layout: self.layout.clone() }
    }
}

/// Re-uploading QNN with Ising couplings.
///
/// Each layer encodes `RY(x_i)` on every qubit, applies trainable `RX`, `RZ`
/// per qubit and a ring of trainable `RZZ` couplings. A final encoding pass
/// is followed by one trainable `RY` per qubit.
pub fn reuploading_ising(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    if n_qubits < 3 || n_layers == 0 {
        return Err(invalid(format!(
            "ising template needs ≥3 qubits and ≥1 layer, got ({n_qubits}, {n_layers})"
        )));
    }
    let mut c = Circuit::new(
        n_qubits,
        n_qubits,
        Layout::new("reuploading_ising", vec![n_qubits, n_layers]),
    )?;
    for _ in 0..n_layers {
        for q in 0..n_qubits {
            c.rot(GateKind::Ry, q, Angle::input(q))?;
        }
        for q in 0..n_qubits {
            let a = c.new_param();
            c.rot(GateKind::Rx, q, a)?;
            let a = c.new_param();
            c.rot(GateKind::Rz, q, a)?;
        }
        for q in 0..n_qubits {
            let a = c.new_param();
            c.push(GateKind::Rzz, &[q, (q + 1) % n_qubits], &[a])?;
        }
    }
    for q in 0..n_qubits {
        c.rot(GateKind::Ry, q, Angle::input(q))?;
    }
    for q in 0..n_qubits {
        let a = c.new_param();
        c.rot(GateKind::Ry, q, a)?;
    }
    Ok(c)
}

/// CNOT range used by strongly entangling layer `layer` (1-based).
pub fn sel_range(n_qubits: usize, layer: usize) -> usize {
    (layer % (n_qubits - 1)) + 1
}

/// Re-uploading QNN with strongly entangling layers.
///
/// Layer `ℓ` encodes `RY(x_i)` per qubit, applies a trainable `R3` per qubit
/// and a CNOT ring `i → (i + r_ℓ) mod n` with `r_ℓ = (ℓ mod (n−1)) + 1`.
pub fn reuploading_sel(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    if n_qubits < 2 || n_layers == 0 {
        return Err(invalid(format!(
            "SEL template needs ≥2 qubits and ≥1 layer, got ({n_qubits}, {n_layers})"
        )));
    }
    let mut c = Circuit::new(
        n_qubits,
        n_qubits,
        Layout::new("reuploading_sel", vec![n_qubits, n_layers]),
    )?;
    for layer in 1..=n_layers {
        for q in 0..n_qubits {
            c.rot(GateKind::Ry, q, Angle::input(q))?;
        }
        for q in 0..n_qubits {
            let angles = [c.new_param(), c.new_param(), c.new_param()];
            c.push(GateKind::R3, &[q], &angles)?;
        }
        let r = sel_range(n_qubits, layer);
        for q in 0..n_qubits {
            c.fixed(Gate::cnot(q, (q + r) % n_qubits))?;
        }
    }
    Ok(c)
}

/// ZZ feature map with linear entanglement.
pub fn zz_feature_map(n_features: usize, reps: usize) -> Result<Circuit> {
    if n_features < 2 || reps == 0 {
        return Err(invalid(format!(
            "ZZ feature map needs ≥2 features and ≥1 rep, got ({n_features}, {reps})"
        )));
    }
    let mut c = Circuit::new(
        n_features,
        n_features,
        Layout::new("zz_feature_map", vec![n_features, reps]),
    )?;
    for _ in 0..reps {
        for q in 0..n_features {
            c.fixed(Gate::h(q))?;
        }
        for q in 0..n_features {
            c.rot(GateKind::Rz, q, Angle::input_with(q, InputTransform::Identity, 2.0))?;
        }
        for q in 0..n_features - 1 {
            c.fixed(Gate::cnot(q, q + 1))?;
            let phase = Angle::input_with(q, InputTransform::ZzProduct { other: q + 1 }, 2.0);
            c.rot(GateKind::Rz, q + 1, phase)?;
            c.fixed(Gate::cnot(q, q + 1))?;
        }
    }
    Ok(c)
}

/// Z feature map: `H` then `RZ(2x_i)` per qubit, no entanglement.
pub fn z_feature_map(n_features: usize, reps: usize) -> Result<Circuit> {
    if n_features == 0 || reps == 0 {
        return Err(invalid(format!(
            "Z feature map needs ≥1 feature and ≥1 rep, got ({n_features}, {reps})"
        )));
    }
    let mut c = Circuit::new(
        n_features,
        n_features,
        Layout::new("z_feature_map", vec![n_features, reps]),
    )?;
    for _ in 0..reps {
        for q in 0..n_features {
            c.fixed(Gate::h(q))?;
        }
        for q in 0..n_features {
            c.rot(GateKind::Rz, q, Angle::input_with(q, InputTransform::Identity, 2.0))?;
        }
    }
    Ok(c)
}

/// RealAmplitudes ansatz with linear entanglement and a final rotation layer.
pub fn real_amplitudes(n_qubits: usize, reps: usize) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(invalid(format!("RealAmplitudes needs ≥2 qubits, got {n_qubits}")));
    }
    let mut c = Circuit::new(n_qubits, 0, Layout::new("real_amplitudes", vec![n_qubits, reps]))?;
    for q in 0..n_qubits {
        let a = c.new_param();
        c.rot(GateKind::Ry, q, a)?;
    }
    for _ in 0..reps {
        for q in 0..n_qubits - 1 {
            c.fixed(Gate::cnot(q, q + 1))?;
        }
        for q in 0..n_qubits {
            let a = c.new_param();
            c.rot(GateKind::Ry, q, a)?;
        }
    }
    Ok(c)
}

/// Variational circuit used inside the quantum recurrent cells.
///
/// Encoding: `H`, `RY(arctan v_i)`, `RZ(arctan v_i²)` per qubit; then
/// `n_layers` of {CNOT ring `i → i+1 mod n`, trainable `R3` per qubit}.
pub fn qlstm_vqc(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    if n_qubits < 2 || n_layers == 0 {
        return Err(invalid(format!(
            "recurrent VQC needs ≥2 qubits and ≥1 layer, got ({n_qubits}, {n_layers})"
        )));
    }
    let mut c =
        Circuit::new(n_qubits, n_qubits, Layout::new("qlstm_vqc", vec![n_qubits, n_layers]))?;
    for q in 0..n_qubits {
        c.fixed(Gate::h(q))?;
    }
    for q in 0..n_qubits {
        c.rot(GateKind::Ry, q, Angle::input_with(q, InputTransform::Arctan, 1.0))?;
    }
    for q in 0..n_qubits {
        c.rot(GateKind::Rz, q, Angle::input_with(q, InputTransform::ArctanSquare, 1.0))?;
    }
    for _ in 0..n_layers {
        for q in 0..n_qubits {
            c.fixed(Gate::cnot(q, (q + 1) % n_qubits))?;
        }
        for q in 0..n_qubits {
            let angles = [c.new_param(), c.new_param(), c.new_param()];
            c.push(GateKind::R3, &[q], &angles)?;
        }
    }
    Ok(c)
}

/// Rebuild a template circuit from its layout descriptor.
pub fn from_layout(layout: &Layout) -> Result<Circuit> {
    let shape = |i: usize| {
        layout
            .shape
            .get(i)
            .copied()
            .ok_or_else(|| Error::Format(format!("layout {layout:?} is missing dimensions")))
    };
    match layout.template.as_str() {
        "reuploading_ising" => reuploading_ising(shape(0)?, shape(1)?),
        "reuploading_sel" => reuploading_sel(shape(0)?, shape(1)?),
        "zz_feature_map" => zz_feature_map(shape(0)?, shape(1)?),
        "z_feature_map" => z_feature_map(shape(0)?, shape(1)?),
        "real_amplitudes" => real_amplitudes(shape(0)?, shape(1)?),
        "qlstm_vqc" => qlstm_vqc(shape(0)?, shape(1)?),
        other => Err(Error::Format(format!("unknown circuit template `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_templates() -> Vec<Circuit> {
        vec![
            reuploading_ising(3, 2).unwrap(),
            reuploading_sel(4, 4).unwrap(),
            zz_feature_map(4, 1).unwrap(),
            z_feature_map(4, 1).unwrap(),
            real_amplitudes(4, 3).unwrap(),
            qlstm_vqc(4, 2).unwrap(),
        ]
    }

    #[test]
    fn ising_counts() {
        let c = reuploading_ising(3, 2).unwrap();
        assert_eq!(c.n_trainable(), 21);
        assert_eq!(reuploading_ising(3, 1).unwrap().n_trainable(), 12);
        assert_eq!(c.n_inputs(), 3);
        for i in 0..3 {
            assert_eq!(c.input_occurrences(i), 3);
        }
        assert!(reuploading_ising(2, 2).is_err());
        assert!(reuploading_ising(3, 0).is_err());
    }

    #[test]
    fn sel_counts_and_ranges() {
        let c = reuploading_sel(4, 4).unwrap();
        assert_eq!(c.n_trainable(), 48);
        assert_eq!(reuploading_sel(2, 1).unwrap().n_trainable(), 6);
        let ranges: Vec<usize> = (1..=4).map(|l| sel_range(4, l)).collect();
        assert_eq!(ranges, vec![2, 3, 1, 2]);
        // the emitted CNOTs follow those ranges
        let cnots: Vec<&Op> = c.ops().iter().filter(|o| o.kind == GateKind::Cnot).collect();
        assert_eq!(cnots.len(), 16);
        for (layer, chunk) in cnots.chunks(4).enumerate() {
            for op in chunk {
                assert_eq!((op.targets[1] + 4 - op.targets[0]) % 4, ranges[layer]);
            }
        }
        for i in 0..4 {
            assert_eq!(c.input_occurrences(i), 4);
        }
    }

    #[test]
    fn feature_map_counts() {
        let zz = zz_feature_map(4, 1).unwrap();
        assert_eq!(zz.len(), 17);
        assert_eq!(zz.n_trainable(), 0);
        assert_eq!(zz_feature_map(2, 2).unwrap().len(), 14);
        assert!(zz_feature_map(1, 1).is_err());
        let z = z_feature_map(4, 1).unwrap();
        assert_eq!((z.len(), z.n_trainable()), (8, 0));
    }

    #[test]
    fn real_amplitudes_counts() {
        assert_eq!(real_amplitudes(4, 3).unwrap().n_trainable(), 16);
        let c = real_amplitudes(2, 0).unwrap();
        assert_eq!((c.n_trainable(), c.count_kind(GateKind::Cnot)), (2, 0));
        let c = real_amplitudes(3, 1).unwrap();
        assert_eq!((c.n_trainable(), c.count_kind(GateKind::Cnot)), (6, 2));
    }

    #[test]
    fn qlstm_vqc_counts() {
        assert_eq!(qlstm_vqc(4, 2).unwrap().n_trainable(), 24);
        let c = qlstm_vqc(4, 1).unwrap();
        let encoding = c
            .ops()
            .iter()
            .take_while(|o| o.kind != GateKind::Cnot)
            .count();
        assert_eq!(encoding, 12);
        let gates = c.bind(&vec![0.0; 12], &[0.0; 4]).unwrap();
        assert!(gates[4..12].iter().all(|g| g.angles()[0] == 0.0));
    }

    #[test]
    fn emitted_slots_match_declared_counts() {
        for c in all_templates() {
            assert_eq!(c.emitted_trainable_slots(), c.n_trainable(), "{:?}", c.layout());
        }
    }

    #[test]
    fn bind_and_run_examples() {
        let empty = Circuit::new(2, 0, Layout::new("empty", vec![])).unwrap();
        assert_eq!(empty.run(&[], &[]).unwrap().probabilities(), vec![1.0, 0.0, 0.0, 0.0]);

        let z = z_feature_map(1, 1).unwrap();
        let p = z.run(&[], &[0.0]).unwrap().probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        let ra = real_amplitudes(2, 0).unwrap();
        let p = ra.run(&[PI, 0.0], &[]).unwrap().probabilities();
        let want = [0.0, 0.0, 1.0, 0.0];
        assert!(p.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));

        assert!(ra.run(&[PI], &[]).is_err());
        assert!(z.run(&[], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn layout_round_trip_rebuilds_template() {
        for c in all_templates() {
            assert_eq!(&from_layout(c.layout()).unwrap(), &c);
        }
    }

    #[test]
    fn composition_renumbers_parameters() {
        let fm = zz_feature_map(3, 1).unwrap();
        let ans = real_amplitudes(3, 2).unwrap();
        let vqc = fm.then(&ans, Layout::new("vqc", vec![3, 1, 2])).unwrap();
        assert_eq!(vqc.n_trainable(), 9);
        assert_eq!(vqc.n_inputs(), 3);
        assert_eq!(vqc.emitted_trainable_slots(), 9);
        assert_eq!(vqc.len(), fm.len() + ans.len());
    }

    #[test]
    fn zz_partials_cover_both_features() {
        let a = Angle::input_with(0, InputTransform::ZzProduct { other: 1 }, 2.0);
        let x = [0.2, 0.7];
        let p = a.input_partials(&x);
        assert_eq!(p.len(), 2);
        assert!((p[0].1 + 2.0 * (PI - 0.7)).abs() < 1e-15);
        assert!((p[1].1 + 2.0 * (PI - 0.2)).abs() < 1e-15);
    }
}
