//! Dense statevector simulation of parametrized circuits.
//!
//! Rotation gates use the full-angle convention `U(θ) = exp(−iθG)` with `G`
//! a Pauli operator on the target wire. This differs from the common
//! half-angle `exp(−iθG/2)` convention: an `RX(θ)` here rotates the Bloch
//! vector by `2θ`, and the parameter-shift rule uses offsets of `±π/4` with
//! unit coefficient.
//!
//! Circuits have a line-oriented text form, one gate per line:
//!
//! ```text
//! # comment
//! qubits 2        # optional, otherwise inferred from the wires used
//! params 3        # optional, otherwise inferred from the parameters used
//! H q0
//! CNOT q0 q1
//! RX q1 p0
//! ```

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::state::{CMatrix, CVector, StateVector};

pub const MAX_UNITARY_QUBITS: usize = 10;
pub const MAX_STATE_QUBITS: usize = 16;

/// Shift applied to a parameter in the two-term parameter-shift rule.
pub const SHIFT: f64 = FRAC_PI_4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    CNOT,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    fn arity(self) -> usize {
        if self == GateKind::CNOT {
            2
        } else {
            1
        }
    }

    fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::CNOT => "CNOT",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "H" => GateKind::H,
            "CNOT" | "CX" => GateKind::CNOT,
            _ => return None,
        })
    }

    /// The Pauli generator of a rotation.
    pub fn generator(self) -> Option<Pauli> {
        match self {
            GateKind::RX => Some(Pauli::X),
            GateKind::RY => Some(Pauli::Y),
            GateKind::RZ => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    kind: GateKind,
    wires: Vec<usize>,
    param: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>, param: Option<usize>) -> Result<Self> {
        if wires.len() != kind.arity() {
            return Err(Error::invalid(format!(
                "{} acts on {} wire(s), got {}",
                kind.name(),
                kind.arity(),
                wires.len()
            )));
        }
        if kind.arity() == 2 && wires[0] == wires[1] {
            return Err(Error::invalid("CNOT control and target must differ"));
        }
        if kind.is_rotation() != param.is_some() {
            return Err(Error::invalid(format!(
                "{} {} a parameter",
                kind.name(),
                if kind.is_rotation() { "requires" } else { "takes no" }
            )));
        }
        Ok(Self { kind, wires, param })
    }

    pub fn rx(q: usize, p: usize) -> Self {
        Self { kind: GateKind::RX, wires: vec![q], param: Some(p) }
    }

    pub fn ry(q: usize, p: usize) -> Self {
        Self { kind: GateKind::RY, wires: vec![q], param: Some(p) }
    }

    pub fn rz(q: usize, p: usize) -> Self {
        Self { kind: GateKind::RZ, wires: vec![q], param: Some(p) }
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, wires: vec![q], param: None }
    }

    /// Panics if `control == target`.
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control and target must differ");
        Self { kind: GateKind::CNOT, wires: vec![control, target], param: None }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    pub fn param(&self) -> Option<usize> {
        self.param
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for w in &self.wires {
            write!(f, " q{w}")?;
        }
        if let Some(p) = self.param {
            write!(f, " p{p}")?;
        }
        Ok(())
    }
}

/// Ordered gate list `U(θ) = U_L(θ) ⋯ U_1(θ)`; gates apply first to last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<Gate>,
}

impl ParamCircuit {
    pub fn new(num_qubits: usize, num_params: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::invalid("circuit needs at least one qubit"));
        }
        if num_qubits > MAX_STATE_QUBITS {
            return Err(Error::Unsupported(format!(
                "{num_qubits} qubits exceeds the simulator cap of {MAX_STATE_QUBITS}"
            )));
        }
        Ok(Self { num_qubits, num_params, gates: Vec::new() })
    }

    pub fn with_gates(num_qubits: usize, num_params: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(num_qubits, num_params)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&w) = gate.wires.iter().find(|&&w| w >= self.num_qubits) {
            return Err(Error::invalid(format!("wire {w} out of range for {} qubits", self.num_qubits)));
        }
        if let Some(p) = gate.param {
            if p >= self.num_params {
                return Err(Error::invalid(format!("parameter {p} out of range for {} parameters", self.num_params)));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// `self` followed by `other`, with `other`'s parameters renumbered to
    /// come after `self`'s.
    pub fn then(&self, other: &ParamCircuit) -> Result<ParamCircuit> {
        check_dim(self.num_qubits, other.num_qubits)?;
        let offset = self.num_params;
        let mut out = self.clone();
        out.num_params += other.num_params;
        out.gates.extend(other.gates.iter().map(|g| Gate {
            param: g.param.map(|p| p + offset),
            ..g.clone()
        }));
        Ok(out)
    }

    fn check_inputs(&self, theta: &[f64], input: &StateVector) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.num_params,
                theta.len()
            )));
        }
        check_dim(self.num_qubits, input.num_qubits())
    }

    /// Runs the circuit on `input`.
    pub fn apply(&self, theta: &[f64], input: &StateVector) -> Result<StateVector> {
        self.check_inputs(theta, input)?;
        let mut amps = input.amplitudes().clone();
        self.run(theta, &mut amps, 0..self.gates.len(), None);
        Ok(StateVector::from_raw(self.num_qubits, amps))
    }

    /// Applies `gates[range]`, adding `shift.1` to the angle of gate
    /// `shift.0` if given.
    pub(crate) fn run(
        &self,
        theta: &[f64],
        amps: &mut CVector,
        range: std::ops::Range<usize>,
        shift: Option<(usize, f64)>,
    ) {
        for idx in range {
            let g = &self.gates[idx];
            let extra = match shift {
                Some((i, s)) if i == idx => s,
                _ => 0.0,
            };
            apply_gate(self.num_qubits, g, g.param.map(|p| theta[p] + extra), amps);
        }
    }

    /// Dense unitary, built column by column from the basis states.
    pub fn unitary_of(&self, theta: &[f64]) -> Result<CMatrix> {
        if self.num_qubits > MAX_UNITARY_QUBITS {
            return Err(Error::Unsupported(format!(
                "unitary extraction is capped at {MAX_UNITARY_QUBITS} qubits"
            )));
        }
        let dim = 1usize << self.num_qubits;
        let mut u = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let out = self.apply(theta, &StateVector::basis(self.num_qubits, col)?)?;
            u.set_column(col, out.amplitudes());
        }
        Ok(u)
    }

    /// Parses the line-oriented text form.
    pub fn parse(text: &str) -> Result<ParamCircuit> {
        let mut declared_qubits = None;
        let mut declared_params = None;
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let perr = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0].to_ascii_lowercase().as_str() {
                "qubits" | "params" => {
                    if tokens.len() != 2 {
                        return Err(perr(format!("expected `{} <count>`", tokens[0])));
                    }
                    let n: usize = tokens[1]
                        .parse()
                        .map_err(|_| perr(format!("invalid count `{}`", tokens[1])))?;
                    if tokens[0].eq_ignore_ascii_case("qubits") {
                        declared_qubits = Some(n);
                    } else {
                        declared_params = Some(n);
                    }
                    continue;
                }
                _ => {}
            }
            let kind = GateKind::parse(tokens[0]).ok_or_else(|| perr(format!("unknown gate `{}`", tokens[0])))?;
            let mut wires = Vec::new();
            let mut param = None;
            for tok in &tokens[1..] {
                let index = |prefix: char| -> Result<usize> {
                    tok[1..]
                        .parse::<usize>()
                        .map_err(|_| perr(format!("invalid {prefix}-index `{tok}`")))
                };
                match tok.chars().next() {
                    Some('q') | Some('Q') => wires.push(index('q')?),
                    Some('p') | Some('P') if param.is_none() => param = Some(index('p')?),
                    _ => return Err(perr(format!("unexpected token `{tok}`"))),
                }
            }
            let gate = Gate::new(kind, wires, param).map_err(|e| perr(e.to_string()))?;
            gates.push((line_no, gate));
        }
        let used_qubits = gates.iter().flat_map(|(_, g)| g.wires.iter().map(|w| w + 1)).max().unwrap_or(1);
        let used_params = gates.iter().filter_map(|(_, g)| g.param.map(|p| p + 1)).max().unwrap_or(0);
        let num_qubits = declared_qubits.unwrap_or(used_qubits);
        let num_params = declared_params.unwrap_or(used_params);
        let mut circuit = ParamCircuit::new(num_qubits, num_params).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        for (line, g) in gates {
            circuit.push(g).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        Ok(circuit)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\nparams {}\n", self.num_qubits, self.num_params);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

#[inline]
fn mask(num_qubits: usize, q: usize) -> usize {
    1usize << (num_qubits - 1 - q)
}

fn apply_1q(num_qubits: usize, q: usize, m: [[Complex64; 2]; 2], amps: &mut CVector) {
    let bit = mask(num_qubits, q);
    for block in amps.as_mut_slice().chunks_exact_mut(2 * bit) {
        let (lo, hi) = block.split_at_mut(bit);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let (a, b) = (*x, *y);
            *x = m[0][0] * a + m[0][1] * b;
            *y = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn apply_diag(num_qubits: usize, q: usize, d0: Complex64, d1: Complex64, amps: &mut CVector) {
    let bit = mask(num_qubits, q);
    for block in amps.as_mut_slice().chunks_exact_mut(2 * bit) {
        let (lo, hi) = block.split_at_mut(bit);
        lo.iter_mut().for_each(|x| *x *= d0);
        hi.iter_mut().for_each(|y| *y *= d1);
    }
}

/// 2×2 matrix of `exp(−iθG)`.
pub fn rotation_matrix(kind: GateKind, theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let zero = Complex64::new(0.0, 0.0);
    match kind {
        GateKind::RX => [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]],
        GateKind::RY => [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]],
        GateKind::RZ => [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]],
        _ => panic!("{kind:?} is not a rotation"),
    }
}

fn apply_gate(num_qubits: usize, g: &Gate, angle: Option<f64>, amps: &mut CVector) {
    match g.kind {
        GateKind::RZ => {
            let m = rotation_matrix(g.kind, angle.expect("rotation carries a parameter"));
            apply_diag(num_qubits, g.wires[0], m[0][0], m[1][1], amps);
        }
        GateKind::RX | GateKind::RY => {
            let m = rotation_matrix(g.kind, angle.expect("rotation carries a parameter"));
            apply_1q(num_qubits, g.wires[0], m, amps);
        }
        GateKind::H => {
            let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_1q(num_qubits, g.wires[0], [[r, r], [r, -r]], amps);
        }
        GateKind::CNOT => {
            let cbit = mask(num_qubits, g.wires[0]);
            let tbit = mask(num_qubits, g.wires[1]);
            let a = amps.as_mut_slice();
            for i in 0..a.len() {
                if i & cbit != 0 && i & tbit == 0 {
                    a.swap(i, i | tbit);
                }
            }
        }
    }
}

/// Applies the Pauli `p` on wire `q` in place.
pub(crate) fn apply_pauli(num_qubits: usize, q: usize, p: Pauli, amps: &mut CVector) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m = match p {
        Pauli::I => return,
        Pauli::X => [[zero, one], [one, zero]],
        Pauli::Y => [[zero, -i], [i, zero]],
        Pauli::Z => [[one, zero], [zero, -one]],
    };
    apply_1q(num_qubits, q, m, amps);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Real linear combination of Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliObservable {
    num_qubits: usize,
    terms: Vec<(f64, Vec<Pauli>)>,
}

impl PauliObservable {
    pub fn new(num_qubits: usize, terms: Vec<(f64, Vec<Pauli>)>) -> Result<Self> {
        for (c, s) in &terms {
            check_dim(num_qubits, s.len())?;
            if !c.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { num_qubits, terms })
    }

    /// Parses strings like `"ZZI"` (qubit 0 first) into a single term.
    pub fn from_string(coefficient: f64, paulis: &str) -> Result<Self> {
        let s = paulis
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::invalid(format!("unknown Pauli `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(s.len(), vec![(coefficient, s)])
    }

    /// `Z` on a single wire.
    pub fn z(num_qubits: usize, q: usize) -> Self {
        let mut s = vec![Pauli::I; num_qubits];
        s[q] = Pauli::Z;
        Self { num_qubits, terms: vec![(1.0, s)] }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, Vec<Pauli>)] {
        &self.terms
    }

    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }
}

/// `⟨ψ|O|ψ⟩`, exact.
pub fn expectation(state: &StateVector, obs: &PauliObservable) -> Result<f64> {
    check_dim(obs.num_qubits, state.num_qubits())?;
    let n = state.num_qubits();
    let mut total = 0.0;
    for (coef, string) in &obs.terms {
        let value = if string.iter().all(|p| matches!(p, Pauli::I | Pauli::Z)) {
            let zmask = string
                .iter()
                .enumerate()
                .filter(|(_, p)| **p == Pauli::Z)
                .fold(0usize, |m, (q, _)| m | mask(n, q));
            state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let sign = if (i & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * a.norm_sqr()
                })
                .sum()
        } else {
            let mut image = state.amplitudes().clone();
            for (q, p) in string.iter().enumerate() {
                apply_pauli(n, q, *p, &mut image);
            }
            state.amplitudes().dotc(&image).re
        };
        total += coef * value;
    }
    Ok(total)
}

/// Exact gradient of `f(θ) = F(U(θ)|in⟩)` for a scalar function `F` that is
/// a quadratic form in the state (an expectation value).
///
/// Each rotation occurrence contributes `F(θ_g + π/4) − F(θ_g − π/4)`;
/// occurrences sharing a parameter are summed.
pub fn parameter_shift_grad_with<F>(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
    objective: F,
) -> Result<Vec<f64>>
where
    F: Fn(&CVector) -> f64,
{
    circuit.check_inputs(theta, input)?;
    let mut grad = vec![0.0; circuit.num_params];
    let mut prefix = input.amplitudes().clone();
    for (idx, g) in circuit.gates.iter().enumerate() {
        if let Some(p) = g.param {
            let mut diff = 0.0;
            for sign in [1.0, -1.0] {
                let mut amps = prefix.clone();
                circuit.run(theta, &mut amps, idx..circuit.gates.len(), Some((idx, sign * SHIFT)));
                diff += sign * objective(&amps);
            }
            grad[p] += diff;
        }
        circuit.run(theta, &mut prefix, idx..idx + 1, None);
    }
    Ok(grad)
}

pub fn parameter_shift_grad(
    circuit: &ParamCircuit,
    theta: &[f64],
    obs: &PauliObservable,
    input: &StateVector,
) -> Result<Vec<f64>> {
    check_dim(obs.num_qubits, circuit.num_qubits)?;
    let n = circuit.num_qubits;
    parameter_shift_grad_with(circuit, theta, input, |amps| {
        expectation(&StateVector::from_raw(n, amps.clone()), obs).expect("dimensions checked")
    })
}
