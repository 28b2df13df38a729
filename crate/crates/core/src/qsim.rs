//! Dense statevector simulation.
//!
//! Basis convention: qubit 0 is the most significant bit of a basis index,
//! so for `n` qubits the index of a computational basis state is
//! `Σ_q bit_q · 2^(n-1-q)`.
//!
//! Rotations follow `R_P(θ) = exp(-iθP/2)` for every Pauli word `P`, and the
//! arbitrary rotation is `R3(α, β, γ) = RZ(γ)·RY(β)·RZ(α)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    R3,
    Cnot,
    Cz,
    Rxx,
    Ryy,
    Rzz,
}

impl GateKind {
    pub fn n_angles(self) -> usize {
        match self {
            GateKind::H | GateKind::Cnot | GateKind::Cz => 0,
            GateKind::R3 => 3,
            _ => 1,
        }
    }

    pub fn n_targets(self) -> usize {
        match self {
            GateKind::H | GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::R3 => 1,
            _ => 2,
        }
    }

    /// Every angle of these kinds enters through a single `exp(-iθP/2)`
    /// factor with a Pauli-word generator, so the two-term shift rule is exact.
    pub fn has_shift_rule(self) -> bool {
        self.n_angles() > 0
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::H => "H",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::R3 => "R3",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Rxx => "RXX",
            GateKind::Ryy => "RYY",
            GateKind::Rzz => "RZZ",
        };
        f.write_str(s)
    }
}

/// A concrete gate: kind, qubit targets and bound angles.
///
/// Only the first `kind.n_targets()` targets and `kind.n_angles()` angles
/// are meaningful. For `CNOT` the targets are `[control, target]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: [usize; 2],
    angles: [f64; 3],
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize], angles: &[f64]) -> Result<Self> {
        if targets.len() != kind.n_targets() {
            return Err(invalid(format!(
                "{kind} takes {} target(s), got {}",
                kind.n_targets(),
                targets.len()
            )));
        }
        if angles.len() != kind.n_angles() {
            return Err(invalid(format!(
                "{kind} takes {} angle(s), got {}",
                kind.n_angles(),
                angles.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(invalid(format!("{kind} targets must be distinct")));
        }
        let mut t = [0; 2];
        t[..targets.len()].copy_from_slice(targets);
        let mut a = [0.0; 3];
        a[..angles.len()].copy_from_slice(angles);
        Ok(Gate { kind, targets: t, angles: a })
    }

    fn one(kind: GateKind, q: usize, angles: [f64; 3]) -> Self {
        Gate { kind, targets: [q, 0], angles }
    }

    fn two(kind: GateKind, a: usize, b: usize, theta: f64) -> Self {
        Gate { kind, targets: [a, b], angles: [theta, 0.0, 0.0] }
    }

    pub fn h(q: usize) -> Self {
        Self::one(GateKind::H, q, [0.0; 3])
    }
    pub fn rx(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rx, q, [theta, 0.0, 0.0])
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Ry, q, [theta, 0.0, 0.0])
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rz, q, [theta, 0.0, 0.0])
    }
    pub fn r3(q: usize, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::one(GateKind::R3, q, [alpha, beta, gamma])
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cnot, control, target, 0.0)
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::two(GateKind::Cz, a, b, 0.0)
    }
    pub fn rxx(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Rxx, a, b, theta)
    }
    pub fn ryy(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Ryy, a, b, theta)
    }
    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Rzz, a, b, theta)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets[..self.kind.n_targets()]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles[..self.kind.n_angles()]
    }

    pub(crate) fn set_angle(&mut self, k: usize, value: f64) {
        debug_assert!(k < self.kind.n_angles());
        self.angles[k] = value;
    }

    /// The adjoint gate. `R3` reverses its Euler angles as well as negating them.
    pub fn inverse(&self) -> Self {
        let mut g = *self;
        match self.kind {
            GateKind::H | GateKind::Cnot | GateKind::Cz => {}
            GateKind::R3 => {
                let [a, b, c] = self.angles;
                g.angles = [-c, -b, -a];
            }
            _ => g.angles[0] = -self.angles[0],
        }
        g
    }
}

/// Pure state of an `n_qubits` register.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(invalid(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    /// Wrap raw amplitudes. The vector must have length `2^n_qubits`; it is
    /// not renormalized.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS || amps.len() != 1usize << n_qubits {
            return Err(invalid(format!(
                "{} amplitudes do not describe {n_qubits} qubits",
                amps.len()
            )));
        }
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(invalid(format!("qubit {q} out of range for {} qubits", self.n_qubits)))
        } else {
            Ok(())
        }
    }

    /// Apply `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let t = gate.targets();
        for &q in t {
            self.check_qubit(q)?;
        }
        if t.len() == 2 && t[0] == t[1] {
            return Err(invalid(format!("{} targets must be distinct", gate.kind)));
        }
        let a = gate.angles;
        match gate.kind {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let s = Complex64::new(s, 0.0);
                self.apply_1q(t[0], [[s, s], [s, -s]]);
            }
            GateKind::Rx => self.apply_1q(t[0], rx_matrix(a[0])),
            GateKind::Ry => self.apply_1q(t[0], ry_matrix(a[0])),
            GateKind::Rz => self.apply_rz(t[0], a[0]),
            GateKind::R3 => {
                self.apply_rz(t[0], a[0]);
                self.apply_1q(t[0], ry_matrix(a[1]));
                self.apply_rz(t[0], a[2]);
            }
            GateKind::Cnot => {
                let (mc, mt) = (self.mask(t[0]), self.mask(t[1]));
                for i in 0..self.amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
            GateKind::Cz => {
                let m = self.mask(t[0]) | self.mask(t[1]);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *amp = -*amp;
                    }
                }
            }
            GateKind::Rzz => {
                let (ma, mb) = (self.mask(t[0]), self.mask(t[1]));
                let (c, s) = ((a[0] / 2.0).cos(), (a[0] / 2.0).sin());
                let same = Complex64::new(c, -s);
                let diff = Complex64::new(c, s);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    let equal = (i & ma == 0) == (i & mb == 0);
                    *amp *= if equal { same } else { diff };
                }
            }
            GateKind::Rxx | GateKind::Ryy => {
                let (ma, mb) = (self.mask(t[0]), self.mask(t[1]));
                let (c, s) = ((a[0] / 2.0).cos(), (a[0] / 2.0).sin());
                let yy = gate.kind == GateKind::Ryy;
                for i in 0..self.amps.len() {
                    if i & ma != 0 {
                        continue;
                    }
                    let j = i ^ ma ^ mb;
                    // YY|b⟩ = -|b̄⟩ when both bits agree, +|b̄⟩ otherwise; XX has no sign.
                    let sign = if yy && ((i & mb == 0) == (i & ma == 0)) { -1.0 } else { 1.0 };
                    let k = Complex64::new(0.0, -s * sign);
                    let (x, y) = (self.amps[i], self.amps[j]);
                    self.amps[i] = x * c + k * y;
                    self.amps[j] = y * c + k * x;
                }
            }
        }
        Ok(())
    }

    /// Consuming form of [`Statevector::apply`].
    pub fn apply_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.mask(q);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (x, y) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * x + m[0][1] * y;
                self.amps[j] = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    fn apply_rz(&mut self, q: usize, theta: f64) {
        let mask = self.mask(q);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let p0 = Complex64::new(c, -s);
        let p1 = Complex64::new(c, s);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { p0 } else { p1 };
        }
    }

    /// `⟨ψ|Z_q|ψ⟩`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `⟨Z_q⟩` for every qubit, in qubit order, from one pass over the amplitudes.
    pub fn expectations_z(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut out = vec![0.0; n];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, o) in out.iter_mut().enumerate() {
                if i & (1 << (n - 1 - q)) == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        out
    }

    /// Basis-state probabilities `|amplitude_b|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(invalid(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        self.inner_product(other).map(|z| z.norm_sqr())
    }
}

fn rx_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    [[c, ms], [ms, c]]
}

fn ry_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// Run `gates` on `|0…0⟩`.
pub fn simulate(n_qubits: usize, gates: &[Gate]) -> Result<Statevector> {
    let mut s = Statevector::new(n_qubits)?;
    s.apply_all(gates)?;
    Ok(s)
}
