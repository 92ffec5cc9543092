//! Circuit-to-program compilation.
//!
//! Every row `y` of the data register is the upper qubit of its cell at steps
//! of parity `y mod 2`, so in a window of [`WINDOW`] steps each logical qubit
//! gets exactly ten controlled opportunities: an optional pi/4-phase (p3 bit)
//! followed by a mandatory Hadamard. Ten-bit sequences realize I, H (up to a
//! global phase) and the phase gate. Two-qubit gates come from a small library
//! of windows found by search and checked against [`reference_simulate`].

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::gatekit::{
    apply_column_gates, column_unitary, phase_gate, u_of_p, CellProgram, ColumnGate, ProgramColumn,
    SmallUnitary,
};
use crate::lattice::cell_rows;
use crate::scalar::{basis, c, cis, inner, norm, one, zero, Real};

/// Steps per macro window.
pub const WINDOW: usize = 20;
/// Controlled opportunities per qubit per window.
pub const OPPORTUNITIES: usize = WINDOW / 2;

const ORACLE_TOL: f64 = 1e-10;

/// A logical gate. CZ and SWAP act on adjacent qubits; CNOT may span any distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "g")]
pub enum Gate {
    H {
        q: usize,
    },
    T {
        q: usize,
    },
    I {
        q: usize,
    },
    #[serde(rename = "CZ")]
    Cz {
        a: usize,
        b: usize,
    },
    #[serde(rename = "CNOT")]
    Cnot {
        c: usize,
        t: usize,
    },
    #[serde(rename = "SWAP")]
    Swap {
        a: usize,
        b: usize,
    },
}

/// A logical circuit over `rows = 2s` qubits; qubit `q` runs on row `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub rows: usize,
    pub gates: Vec<Gate>,
}

impl CircuitIR {
    pub fn new(rows: usize, gates: Vec<Gate>) -> Self {
        Self { rows, gates }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || !self.rows.is_multiple_of(2) {
            return Err(QcaError::Compile(format!(
                "circuit rows must be a positive even number, got {}",
                self.rows
            )));
        }
        let check = |q: usize| {
            if q >= self.rows {
                Err(QcaError::Compile(format!(
                    "qubit {q} out of range for {} rows",
                    self.rows
                )))
            } else {
                Ok(())
            }
        };
        for g in &self.gates {
            match *g {
                Gate::H { q } | Gate::T { q } | Gate::I { q } => check(q)?,
                Gate::Cz { a, b } | Gate::Swap { a, b } => {
                    check(a)?;
                    check(b)?;
                    if a.abs_diff(b) != 1 {
                        return Err(QcaError::Compile(format!("{g:?} needs adjacent qubits")));
                    }
                }
                Gate::Cnot { c, t } => {
                    check(c)?;
                    check(t)?;
                    if c == t {
                        return Err(QcaError::Compile(format!(
                            "{g:?} has equal control and target"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reference network simulator

/// Applies the logical gates directly to a `2^rows` state vector (qubit `q`
/// is bit `q` of the index). The phase gate is `T = exp(-i pi/8 Z)`.
pub fn reference_simulate<T: Real>(
    circuit: &CircuitIR,
    input: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if input.len() != 1 << circuit.rows {
        return Err(QcaError::DimensionMismatch {
            expected: 1 << circuit.rows,
            found: input.len(),
        });
    }
    let mut state = input.to_vec();
    for g in &circuit.gates {
        reference_gate(&mut state, g);
    }
    Ok(state)
}

fn reference_gate<T: Real>(state: &mut [Complex<T>], gate: &Gate) {
    let h = T::one() / T::lit(2.0).sqrt();
    let apply_2x2 = |state: &mut [Complex<T>], q: usize, m: [[Complex<T>; 2]; 2]| {
        let bit = 1 << q;
        for i in 0..state.len() {
            if i & bit == 0 {
                let (x, y) = (state[i], state[i | bit]);
                state[i] = m[0][0] * x + m[0][1] * y;
                state[i | bit] = m[1][0] * x + m[1][1] * y;
            }
        }
    };
    match *gate {
        Gate::I { .. } => {}
        Gate::H { q } => {
            let (p, n) = (Complex::new(h, T::zero()), Complex::new(-h, T::zero()));
            apply_2x2(state, q, [[p, p], [p, n]]);
        }
        Gate::T { q } => {
            let angle = T::lit(std::f64::consts::PI / 8.0);
            apply_2x2(state, q, [[cis(-angle), zero()], [zero(), cis(angle)]]);
        }
        Gate::Cz { a, b } => {
            let mask = (1 << a) | (1 << b);
            for (i, amp) in state.iter_mut().enumerate() {
                if i & mask == mask {
                    *amp = -*amp;
                }
            }
        }
        Gate::Cnot { c, t } => {
            for i in 0..state.len() {
                if (i >> c) & 1 == 1 && (i >> t) & 1 == 0 {
                    state.swap(i, i | (1 << t));
                }
            }
        }
        Gate::Swap { a, b } => {
            for i in 0..state.len() {
                if (i >> a) & 1 == 1 && (i >> b) & 1 == 0 {
                    state.swap(i, (i & !(1 << a)) | (1 << b));
                }
            }
        }
    }
}

/// Dense unitary of a logical circuit, built column by column.
pub fn reference_unitary(circuit: &CircuitIR) -> Result<SmallUnitary<f64>> {
    let dim = 1 << circuit.rows;
    let mut data = vec![zero(); dim * dim];
    for col in 0..dim {
        let out = reference_simulate(circuit, &basis::<f64>(dim, col))?;
        for (row, a) in out.into_iter().enumerate() {
            data[row * dim + col] = a;
        }
    }
    SmallUnitary::new(dim, data)
}

// ---------------------------------------------------------------------------
// Single-qubit sequences

/// Composes ten opportunities, leftmost bit first; each applies
/// `exp(-i pi/8 Z)` when its bit is set, then H.
///
/// Hadamards are multiplied unnormalized and the product rescaled by 2^-5 at
/// the end, so sequences built from Hadamards and one phase are exact.
pub fn sequence_unitary<T: Real>(bits: &[bool]) -> Result<SmallUnitary<T>> {
    if bits.len() != OPPORTUNITIES {
        return Err(QcaError::Contract(format!(
            "sequence has {} bits, expected {OPPORTUNITIES}",
            bits.len()
        )));
    }
    let h = SmallUnitary::from_raw(2, vec![one(), one(), one(), c(-1.0, 0.0)]);
    let p = phase_gate::<T>();
    let mut u = SmallUnitary::identity(2);
    for &b in bits {
        if b {
            u = p.mul(&u);
        }
        u = h.mul(&u);
    }
    Ok(u.scale(c(1.0 / 32.0, 0.0)))
}

/// The single-qubit operations available as one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OneQubitMacro {
    Identity,
    Hadamard,
    Phase,
}

impl OneQubitMacro {
    pub const ALL: [OneQubitMacro; 3] = [Self::Identity, Self::Hadamard, Self::Phase];

    /// p3 sequence, first opportunity first.
    pub fn bits(self) -> [bool; OPPORTUNITIES] {
        let text = match self {
            Self::Identity => "0000000000",
            Self::Hadamard => "0101101101",
            Self::Phase => "1000000000",
        };
        let mut out = [false; OPPORTUNITIES];
        for (o, ch) in out.iter_mut().zip(text.chars()) {
            *o = ch == '1';
        }
        out
    }

    fn logical(self, q: usize) -> Option<Gate> {
        match self {
            Self::Identity => None,
            Self::Hadamard => Some(Gate::H { q }),
            Self::Phase => Some(Gate::T { q }),
        }
    }
}

// ---------------------------------------------------------------------------
// Two-qubit window library

/// Two-qubit gates on rows `(low, low + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairGate {
    Cz,
    /// Control on the lower row.
    CnotUp,
    /// Control on the upper row.
    CnotDown,
}

impl PairGate {
    pub const ALL: [PairGate; 3] = [Self::Cz, Self::CnotUp, Self::CnotDown];

    fn logical(self, low: usize) -> Gate {
        match self {
            Self::Cz => Gate::Cz { a: low, b: low + 1 },
            Self::CnotUp => Gate::Cnot { c: low, t: low + 1 },
            Self::CnotDown => Gate::Cnot { c: low + 1, t: low },
        }
    }
}

/// One window's worth of bits on an adjacent pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowPart {
    /// Independent single-qubit sequences on the lower and upper row.
    Local {
        low: OneQubitMacro,
        high: OneQubitMacro,
    },
    /// All p3 bits zero and one p4 bit, at the lower row's `opportunity`.
    CzPulse { opportunity: usize },
}

impl WindowPart {
    fn alphabet() -> Vec<WindowPart> {
        let mut parts = Vec::new();
        for low in OneQubitMacro::ALL {
            for high in OneQubitMacro::ALL {
                parts.push(WindowPart::Local { low, high });
            }
        }
        parts.extend((0..OPPORTUNITIES).map(|opportunity| WindowPart::CzPulse { opportunity }));
        parts
    }

    /// Logical gates this part is meant to realize on rows `(low, low+1)`.
    ///
    /// A controlled-Z at the lower row's `m`-th opportunity comes after `m`
    /// Hadamards on the lower row and `m + parity` on the upper row.
    pub fn logical_gates(self, low: usize) -> Vec<Gate> {
        match self {
            WindowPart::Local { low: a, high: b } => a
                .logical(low)
                .into_iter()
                .chain(b.logical(low + 1))
                .collect(),
            WindowPart::CzPulse { opportunity: m } => {
                let parity = low % 2;
                let before_high = m + parity;
                let hs = |q: usize, n: usize| std::iter::repeat_n(Gate::H { q }, n);
                hs(low, m)
                    .chain(hs(low + 1, before_high))
                    .chain(std::iter::once(Gate::Cz { a: low, b: low + 1 }))
                    .chain(hs(low, OPPORTUNITIES - m))
                    .chain(hs(low + 1, OPPORTUNITIES - before_high))
                    .collect()
            }
        }
    }

    /// Sets this part's bits for pair `(low, low+1)` in a window of steps.
    fn write_bits(self, low: usize, window: &mut [Vec<CellProgram>]) {
        match self {
            WindowPart::Local { low: a, high: b } => {
                write_sequence(low, a.bits(), window);
                write_sequence(low + 1, b.bits(), window);
            }
            WindowPart::CzPulse { opportunity } => {
                let (step, j) = opportunity_slot(low, opportunity, window[0].len());
                window[step][j].p4 = true;
            }
        }
    }
}

/// Window-local step and cell-row at which row `y` has its `m`-th opportunity.
fn opportunity_slot(y: usize, m: usize, s: usize) -> (usize, usize) {
    let parity = y % 2;
    let step = 2 * m + parity;
    let j = ((y + 2 * s - parity) % (2 * s)) / 2;
    debug_assert_eq!(cell_rows(j, parity as u8, 2 * s).0, y);
    (step, j)
}

fn write_sequence(y: usize, bits: [bool; OPPORTUNITIES], window: &mut [Vec<CellProgram>]) {
    let s = window[0].len();
    for (m, b) in bits.into_iter().enumerate() {
        if b {
            let (step, j) = opportunity_slot(y, m, s);
            window[step][j].p3 = true;
        }
    }
}

/// Realized 4x4 action of one part on rows `(parity, parity+1)` of a
/// four-row column, other rows idle.
fn realized_part(part: WindowPart, parity: usize) -> Result<SmallUnitary<f64>> {
    let s = 2;
    let mut window = vec![vec![CellProgram::default(); s]; WINDOW];
    part.write_bits(parity, &mut window);
    let layers = LayerIR::new(s, window);
    let gates = layers.column_gates()?;
    let full = column_unitary::<f64>(&gates, 2 * s);

    let embed = |pair: usize| ((pair & 1) << parity) | ((pair >> 1) << (parity + 1));
    let mut data = vec![zero(); 16];
    for out in 0..4 {
        for inp in 0..4 {
            data[out * 4 + inp] = full.get(embed(out), embed(inp));
        }
    }
    let block = SmallUnitary::from_raw(4, data);
    // the idle rows must factor out exactly
    let others: Vec<usize> = (0..4).filter(|&y| y != parity && y != parity + 1).collect();
    let mut expect = vec![zero(); 256];
    for out in 0..16usize {
        for inp in 0..16usize {
            let same_idle = others.iter().all(|&y| (out >> y) & 1 == (inp >> y) & 1);
            if same_idle {
                let pair = |i: usize| ((i >> parity) & 1) | (((i >> (parity + 1)) & 1) << 1);
                expect[out * 16 + inp] = block.get(pair(out), pair(inp));
            }
        }
    }
    let leak = SmallUnitary::from_raw(16, expect).max_distance(&full);
    if leak > ORACLE_TOL {
        return Err(QcaError::Internal(format!(
            "window part {part:?} acts outside its pair (deviation {leak:e})"
        )));
    }
    Ok(block)
}

/// Parts realizing each two-qubit gate, keyed by the lower row's parity.
#[derive(Debug, Clone)]
pub struct WindowLibrary {
    entries: HashMap<(usize, PairGate), Vec<WindowPart>>,
}

impl WindowLibrary {
    pub fn get(&self, low_parity: usize, gate: PairGate) -> &[WindowPart] {
        &self.entries[&(low_parity % 2, gate)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, PairGate), &Vec<WindowPart>)> {
        self.entries.iter()
    }
}

fn pair_circuit(gates: Vec<Gate>, low: usize) -> CircuitIR {
    // rows (low, low+1) of a 4-row circuit, mapped to qubits (0, 1)
    let relabel = |q: usize| q - low;
    let gates = gates
        .into_iter()
        .map(|g| match g {
            Gate::H { q } => Gate::H { q: relabel(q) },
            Gate::T { q } => Gate::T { q: relabel(q) },
            Gate::I { q } => Gate::I { q: relabel(q) },
            Gate::Cz { a, b } => Gate::Cz {
                a: relabel(a),
                b: relabel(b),
            },
            Gate::Cnot { c, t } => Gate::Cnot {
                c: relabel(c),
                t: relabel(t),
            },
            Gate::Swap { a, b } => Gate::Swap {
                a: relabel(a),
                b: relabel(b),
            },
        })
        .collect();
    CircuitIR::new(2, gates)
}

/// Finds, for each two-qubit gate and lower-row parity, the shortest sequence
/// of at most three window parts whose realized product equals the gate up to
/// global phase.
pub fn derive_two_qubit_windows() -> Result<WindowLibrary> {
    let alphabet = WindowPart::alphabet();
    let mut entries = HashMap::new();
    for parity in 0..2 {
        let realized: Vec<SmallUnitary<f64>> = alphabet
            .iter()
            .map(|&p| realized_part(p, parity))
            .collect::<Result<_>>()?;
        for (part, u) in alphabet.iter().zip(&realized) {
            let logical = reference_unitary(&pair_circuit(part.logical_gates(parity), parity))?;
            let (_, dist) = u.distance_up_to_phase(&logical);
            if dist > ORACLE_TOL {
                return Err(QcaError::Internal(format!(
                    "window part {part:?} at parity {parity} deviates from its logical form by {dist:e}"
                )));
            }
        }
        for gate in PairGate::ALL {
            let target = reference_unitary(&pair_circuit(vec![gate.logical(parity)], parity))?;
            let found = search_sequence(&realized, &target, 3).ok_or_else(|| {
                QcaError::Internal(format!(
                    "no window sequence of length <= 3 realizes {gate:?} at parity {parity}"
                ))
            })?;
            entries.insert(
                (parity, gate),
                found.into_iter().map(|k| alphabet[k]).collect::<Vec<_>>(),
            );
        }
    }
    Ok(WindowLibrary { entries })
}

/// Shortest index sequence (first element acts first) whose product matches
/// `target` up to phase.
fn search_sequence(
    parts: &[SmallUnitary<f64>],
    target: &SmallUnitary<f64>,
    max_len: usize,
) -> Option<Vec<usize>> {
    for len in 1..=max_len {
        let mut idx = vec![0usize; len];
        loop {
            let product = idx
                .iter()
                .fold(SmallUnitary::identity(4), |acc, &k| parts[k].mul(&acc));
            if product.distance_up_to_phase(target).1 <= ORACLE_TOL {
                return Some(idx);
            }
            // odometer increment, last position fastest
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < parts.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    None
}

/// The library, derived once per process.
pub fn window_library() -> Result<&'static WindowLibrary> {
    static LIB: OnceLock<std::result::Result<WindowLibrary, QcaError>> = OnceLock::new();
    LIB.get_or_init(derive_two_qubit_windows)
        .as_ref()
        .map_err(Clone::clone)
}

// ---------------------------------------------------------------------------
// Layers and programs

/// Per-step, per-cell program bits. Step `k` (0-based here) has parity `k mod 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerIR {
    s: usize,
    steps: Vec<Vec<CellProgram>>,
}

impl LayerIR {
    pub fn new(s: usize, steps: Vec<Vec<CellProgram>>) -> Self {
        Self { s, steps }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn steps(&self) -> &[Vec<CellProgram>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn num_windows(&self) -> usize {
        self.steps.len() / WINDOW
    }

    pub fn window(&self, w: usize) -> LayerIR {
        LayerIR::new(self.s, self.steps[w * WINDOW..(w + 1) * WINDOW].to_vec())
    }

    /// Counts, for each window and row, the steps where that row is the upper
    /// qubit of its cell.
    pub fn opportunity_counts(&self) -> Vec<Vec<usize>> {
        let height = 2 * self.s;
        self.steps
            .chunks(WINDOW)
            .map(|win| {
                let mut counts = vec![0; height];
                for (k, step) in win.iter().enumerate() {
                    for j in 0..step.len() {
                        counts[cell_rows(j, (k % 2) as u8, height).0] += 1;
                    }
                }
                counts
            })
            .collect()
    }

    /// Column gates of all steps, in application order.
    pub fn column_gates(&self) -> Result<Vec<ColumnGate>> {
        let programs = layers_to_program(self)?;
        let mut gates = Vec::new();
        for (k, p) in programs.iter().enumerate() {
            gates.extend(u_of_p(p, (k % 2) as u8, self.s)?);
        }
        Ok(gates)
    }
}

/// Writes step `k`'s cell bits into program column `p_{k+1}`: p3 at row
/// `[2j + k]_{2s}`, p4 at the row below it.
pub fn layers_to_program(layers: &LayerIR) -> Result<Vec<ProgramColumn>> {
    let height = 2 * layers.s;
    layers
        .steps
        .iter()
        .enumerate()
        .map(|(k, cells)| {
            if cells.len() != layers.s {
                return Err(QcaError::DimensionMismatch {
                    expected: layers.s,
                    found: cells.len(),
                });
            }
            let mut col = ProgramColumn::zeros(height);
            for (j, cell) in cells.iter().enumerate() {
                let (a, b) = cell_rows(j, (k % 2) as u8, height);
                col.set(a, cell.p3);
                col.set(b, cell.p4);
            }
            Ok(col)
        })
        .collect()
}

pub fn program_to_layers(programs: &[ProgramColumn], s: usize) -> Result<LayerIR> {
    let height = 2 * s;
    let steps = programs
        .iter()
        .enumerate()
        .map(|(k, col)| {
            if col.len() != height {
                return Err(QcaError::DimensionMismatch {
                    expected: height,
                    found: col.len(),
                });
            }
            Ok((0..s)
                .map(|j| {
                    let (a, b) = cell_rows(j, (k % 2) as u8, height);
                    CellProgram::new(col.get(a), col.get(b))
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerIR::new(s, steps))
}

// ---------------------------------------------------------------------------
// Scheduling

/// What one qubit does during one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Idle,
    Single(OneQubitMacro),
    /// Lower row of a pair part; the upper row is `Reserved`.
    Pair(WindowPart),
    Reserved,
}

/// One parallel layer of macros, realized by [`WINDOW`] steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroWindow {
    pub slots: Vec<Slot>,
}

impl MacroWindow {
    fn idle(rows: usize) -> Self {
        Self {
            slots: vec![Slot::Idle; rows],
        }
    }

    /// Window steps realizing this layer.
    pub fn layer(&self) -> LayerIR {
        let s = self.slots.len() / 2;
        let mut steps = vec![vec![CellProgram::default(); s]; WINDOW];
        for (q, slot) in self.slots.iter().enumerate() {
            match *slot {
                Slot::Single(m) => write_sequence(q, m.bits(), &mut steps),
                Slot::Pair(part) => part.write_bits(q, &mut steps),
                Slot::Idle | Slot::Reserved => {}
            }
        }
        LayerIR::new(s, steps)
    }

    /// The logical circuit this window should equal, up to global phase.
    pub fn logical_circuit(&self) -> CircuitIR {
        let mut gates = Vec::new();
        for (q, slot) in self.slots.iter().enumerate() {
            match *slot {
                Slot::Single(m) => gates.extend(m.logical(q)),
                Slot::Pair(part) => gates.extend(part.logical_gates(q)),
                Slot::Idle | Slot::Reserved => {}
            }
        }
        CircuitIR::new(self.slots.len(), gates)
    }

    /// Compares the realized window with its logical circuit up to global phase.
    pub fn oracle_distance(&self) -> Result<f64> {
        let layer = self.layer();
        let gates = layer.column_gates()?;
        let rows = self.slots.len();
        let circuit = self.logical_circuit();
        if rows <= 10 {
            let realized = column_unitary::<f64>(&gates, rows);
            let target = reference_unitary(&circuit)?;
            return Ok(realized.distance_up_to_phase(&target).1);
        }
        // large columns: probe with a few fixed pseudo-random states
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let mut phase: Option<Complex<f64>> = None;
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let v: Vec<Complex<f64>> = (0..1usize << rows)
                .map(|_| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let n = norm(&v);
            let v: Vec<_> = v.into_iter().map(|a| a / n).collect();
            let mut realized = v.clone();
            apply_column_gates(&mut realized, &gates);
            let expected = reference_simulate(&circuit, &v)?;
            let ov = inner(&expected, &realized);
            let ph = *phase.get_or_insert(ov / ov.norm());
            let dist = realized
                .iter()
                .zip(&expected)
                .fold(0.0f64, |m, (a, b)| m.max((a - b * ph).norm()));
            worst = worst.max(dist);
        }
        Ok(worst)
    }
}

/// A compiled program: its layers, derived windows and program columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    pub layers: LayerIR,
    pub windows: Vec<MacroWindow>,
    pub r: usize,
}

impl CompiledProgram {
    pub fn s(&self) -> usize {
        self.layers.s()
    }

    pub fn programs(&self) -> Vec<ProgramColumn> {
        layers_to_program(&self.layers).expect("compiled layers are well formed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MacroOp {
    Single(usize, OneQubitMacro),
    Pair(usize, PairGate),
}

fn lower(circuit: &CircuitIR) -> Vec<MacroOp> {
    let mut ops = Vec::new();
    let cnot = |ops: &mut Vec<MacroOp>, c: usize, t: usize| {
        if c < t {
            ops.push(MacroOp::Pair(c, PairGate::CnotUp));
        } else {
            ops.push(MacroOp::Pair(t, PairGate::CnotDown));
        }
    };
    let swap = |ops: &mut Vec<MacroOp>, low: usize| {
        cnot(ops, low, low + 1);
        cnot(ops, low + 1, low);
        cnot(ops, low, low + 1);
    };
    for g in &circuit.gates {
        match *g {
            Gate::I { q } => ops.push(MacroOp::Single(q, OneQubitMacro::Identity)),
            Gate::H { q } => ops.push(MacroOp::Single(q, OneQubitMacro::Hadamard)),
            Gate::T { q } => ops.push(MacroOp::Single(q, OneQubitMacro::Phase)),
            Gate::Cz { a, b } => ops.push(MacroOp::Pair(a.min(b), PairGate::Cz)),
            Gate::Swap { a, b } => swap(&mut ops, a.min(b)),
            Gate::Cnot { c, t } if c.abs_diff(t) == 1 => cnot(&mut ops, c, t),
            Gate::Cnot { c, t } => {
                // walk the control next to the target, act, walk back
                let path: Vec<usize> = if c < t {
                    (c..t - 1).collect()
                } else {
                    (t + 1..c).rev().collect()
                };
                for &low in &path {
                    swap(&mut ops, low);
                }
                let near = if c < t { t - 1 } else { t + 1 };
                cnot(&mut ops, near, t);
                for &low in path.iter().rev() {
                    swap(&mut ops, low);
                }
            }
        }
    }
    ops
}

/// Compiles a circuit into program columns for a `2s`-row lattice.
pub fn compile(circuit: &CircuitIR) -> Result<CompiledProgram> {
    circuit.validate()?;
    let rows = circuit.rows;
    let lib = window_library()?;
    let mut windows: Vec<MacroWindow> = Vec::new();
    let mut free = vec![0usize; rows];
    let ensure = |windows: &mut Vec<MacroWindow>, n: usize| {
        while windows.len() < n {
            windows.push(MacroWindow::idle(rows));
        }
    };
    for op in lower(circuit) {
        match op {
            MacroOp::Single(q, m) => {
                let w = free[q];
                ensure(&mut windows, w + 1);
                windows[w].slots[q] = Slot::Single(m);
                free[q] = w + 1;
            }
            MacroOp::Pair(low, gate) => {
                let parts = lib.get(low % 2, gate);
                let w = free[low].max(free[low + 1]);
                ensure(&mut windows, w + parts.len());
                for (k, part) in parts.iter().enumerate() {
                    windows[w + k].slots[low] = Slot::Pair(*part);
                    windows[w + k].slots[low + 1] = Slot::Reserved;
                }
                free[low] = w + parts.len();
                free[low + 1] = w + parts.len();
            }
        }
    }
    ensure(&mut windows, 1);

    for (w, win) in windows.iter().enumerate() {
        let dist = win.oracle_distance()?;
        if dist > ORACLE_TOL {
            return Err(QcaError::Internal(format!(
                "window {w} deviates from its logical layer by {dist:e}"
            )));
        }
    }

    let s = rows / 2;
    let mut steps = Vec::with_capacity(windows.len() * WINDOW);
    for win in &windows {
        steps.extend(win.layer().steps);
    }
    let layers = LayerIR::new(s, steps);
    let r = layers.len();
    Ok(CompiledProgram { layers, windows, r })
}
