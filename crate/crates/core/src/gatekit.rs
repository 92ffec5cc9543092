//! Gate primitives, the 16x16 cell transition unitary, and the classically
//! controlled column action it induces.
//!
//! Cell-local basis states are written `|q1 q2 q3 q4>` with `q1` the most
//! significant bit of the local index. `q1, q2` are the upper and lower site
//! of the data column, `q3, q4` those of the program column.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::lattice::cell_rows;
use crate::scalar::{c, cis, one, zero, Real};

/// A dense unitary on `log2(dim)` qubits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallUnitary<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> SmallUnitary<T> {
    /// Checks shape and unitarity at `T::CONSTRUCTION_TOL`.
    pub fn new(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 {
            return Err(QcaError::Contract(format!("dimension {dim} is not 2^k")));
        }
        if data.len() != dim * dim {
            return Err(QcaError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let u = Self { dim, data };
        let dev = u.unitarity_deviation();
        if dev > T::CONSTRUCTION_TOL {
            return Err(QcaError::Contract(format!(
                "matrix is not unitary (max deviation {dev:e})"
            )));
        }
        Ok(u)
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = one();
        }
        Self { dim, data }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let dim = entries.len();
        let mut data = vec![zero(); dim * dim];
        for (i, e) in entries.iter().enumerate() {
            data[i * dim + i] = *e;
        }
        Self { dim, data }
    }

    /// Permutation matrix sending basis state `i` to `perm(i)`.
    pub fn permutation(dim: usize, perm: impl Fn(usize) -> usize) -> Self {
        let mut data = vec![zero(); dim * dim];
        for i in 0..dim {
            data[perm(i) * dim + i] = one();
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Matrix product `self * rhs`, i.e. `rhs` acts first.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut data = vec![zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == zero() {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] = data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        Self { dim: n, data }
    }

    /// Product of `factors` where the last element acts first.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a Self>) -> Option<Self> {
        factors.into_iter().fold(None, |acc: Option<Self>, f| {
            Some(match acc {
                None => f.clone(),
                Some(a) => a.mul(f),
            })
        })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data }
    }

    /// Kronecker product with `low` on the least significant index bits.
    pub fn kron(&self, low: &Self) -> Self {
        let (n, m) = (self.dim, low.dim);
        let dim = n * m;
        let mut data = vec![zero(); dim * dim];
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        data[(i * m + k) * dim + j * m + l] = a * low.data[k * m + l];
                    }
                }
            }
        }
        Self { dim, data }
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .fold(zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    /// `max |(U^dagger U - I)_{ij}|`
    pub fn unitarity_deviation(&self) -> T {
        self.adjoint()
            .mul(self)
            .max_distance(&Self::identity(self.dim))
    }

    pub fn max_distance(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Best global phase `e^{i theta}` with `e^{i theta} self ~ other`, and
    /// the max-norm distance remaining after applying it.
    pub fn distance_up_to_phase(&self, other: &Self) -> (Complex<T>, T) {
        assert_eq!(self.dim, other.dim);
        let overlap = self
            .data
            .iter()
            .zip(&other.data)
            .fold(zero::<T>(), |acc, (a, b)| acc + a.conj() * b);
        let phase = if overlap.norm() > T::zero() {
            overlap / overlap.norm()
        } else {
            one()
        };
        (phase, self.scale(phase).max_distance(other))
    }
}

/// Hadamard gate.
pub fn hadamard<T: Real>() -> SmallUnitary<T> {
    let h = T::FRAC_1_SQRT_2();
    let (p, m) = (Complex::new(h, T::zero()), Complex::new(-h, T::zero()));
    SmallUnitary::from_raw(2, vec![p, p, p, m])
}

/// The pi/4-phase gate `exp(-i pi/8 Z) = diag(e^{-i pi/8}, e^{i pi/8})`.
pub fn phase_gate<T: Real>() -> SmallUnitary<T> {
    let (minus, plus) = phase_pair::<T>();
    SmallUnitary::diagonal(&[minus, plus])
}

pub fn pauli_z<T: Real>() -> SmallUnitary<T> {
    SmallUnitary::diagonal(&[one(), c(-1.0, 0.0)])
}

/// `(e^{-i pi/8}, e^{i pi/8})`
pub(crate) fn phase_pair<T: Real>() -> (Complex<T>, Complex<T>) {
    let angle = T::PI() / T::lit(8.0);
    (cis(-angle), cis(angle))
}

/// Local index bit of cell qubit `k` in `1..=4`.
pub fn cell_bit(k: usize) -> usize {
    assert!((1..=4).contains(&k), "cell qubit label {k} not in 1..=4");
    4 - k
}

/// SWAP of cell qubits `a` and `b`.
pub fn cell_swap<T: Real>(a: usize, b: usize) -> SmallUnitary<T> {
    let (ba, bb) = (cell_bit(a), cell_bit(b));
    SmallUnitary::permutation(16, |i| {
        let (x, y) = ((i >> ba) & 1, (i >> bb) & 1);
        (i & !(1 << ba) & !(1 << bb)) | (y << ba) | (x << bb)
    })
}

/// A single-qubit gate on cell qubit `k`.
pub fn cell_single<T: Real>(gate: &SmallUnitary<T>, k: usize) -> SmallUnitary<T> {
    assert_eq!(gate.dim(), 2);
    let bit = cell_bit(k);
    let mut data = vec![zero(); 256];
    for col in 0..16 {
        let x = (col >> bit) & 1;
        for y in 0..2 {
            let row = (col & !(1 << bit)) | (y << bit);
            data[row * 16 + col] = gate.get(y, x);
        }
    }
    SmallUnitary::from_raw(16, data)
}

/// `exp(-i pi/8 ((1 - Z_control)/2) Z_target)`
pub fn cell_conditional_phase<T: Real>(control: usize, target: usize) -> SmallUnitary<T> {
    let (minus, plus) = phase_pair::<T>();
    let (bc, bt) = (cell_bit(control), cell_bit(target));
    let diag: Vec<_> = (0..16)
        .map(|i| match ((i >> bc) & 1, (i >> bt) & 1) {
            (0, _) => one(),
            (_, 0) => minus,
            _ => plus,
        })
        .collect();
    SmallUnitary::diagonal(&diag)
}

/// `exp(i pi (1-Z_a)/2 (1-Z_b)/2 (1-Z_c)/2)`: -1 iff all three are |1>.
pub fn cell_ccz<T: Real>(a: usize, b: usize, c_: usize) -> SmallUnitary<T> {
    let mask = (1 << cell_bit(a)) | (1 << cell_bit(b)) | (1 << cell_bit(c_));
    let diag: Vec<_> = (0..16)
        .map(|i| {
            if i & mask == mask {
                c(-1.0, 0.0)
            } else {
                one()
            }
        })
        .collect();
    SmallUnitary::diagonal(&diag)
}

/// The cell transition unitary
/// `S(1,3) S(2,4) H_1 exp(-i pi/8 (1-Z_3)/2 Z_1) exp(i pi (1-Z_4)/2 (1-Z_1)/2 (1-Z_2)/2)`.
pub fn build_tau<T: Real>() -> SmallUnitary<T> {
    let factors = [
        cell_swap(1, 3),
        cell_swap(2, 4),
        cell_single(&hadamard(), 1),
        cell_conditional_phase(3, 1),
        cell_ccz(4, 1, 2),
    ];
    SmallUnitary::product(&factors).expect("non-empty")
}

/// The two program bits seen by one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellProgram {
    /// Triggers the pi/4-phase gate on the upper data qubit.
    pub p3: bool,
    /// Triggers a controlled-Z on the two data qubits.
    pub p4: bool,
}

impl CellProgram {
    pub fn new(p3: bool, p4: bool) -> Self {
        Self { p3, p4 }
    }
}

/// One classical program column, indexed by row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramColumn {
    bits: Vec<bool>,
}

impl ProgramColumn {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(height: usize) -> Self {
        Self {
            bits: vec![false; height],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, row: usize) -> bool {
        self.bits[row]
    }

    pub fn set(&mut self, row: usize, value: bool) {
        self.bits[row] = value;
    }

    /// Computational basis index of the column state (row 0 least significant).
    pub fn basis_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (y, &b)| acc | ((b as usize) << y))
    }

    pub fn from_basis_index(index: usize, height: usize) -> Self {
        Self {
            bits: (0..height).map(|y| (index >> y) & 1 == 1).collect(),
        }
    }
}

impl fmt::Display for ProgramColumn {
    /// Row 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ProgramColumn {
    type Err = QcaError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(QcaError::Parse(format!(
                    "program bit {other:?} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

/// A gate acting on rows of one `2s`-qubit column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnGate {
    Cz(usize, usize),
    /// `exp(-i pi/8 Z)` on a row.
    Phase(usize),
    H(usize),
}

/// The column unitary `U(p)` at the given step parity, as gates in
/// application order.
pub fn u_of_p(p: &ProgramColumn, parity: u8, s: usize) -> Result<Vec<ColumnGate>> {
    let height = 2 * s;
    if p.len() != height {
        return Err(QcaError::Contract(format!(
            "program column has {} bits, expected {height}",
            p.len()
        )));
    }
    let mut gates = Vec::with_capacity(3 * s);
    for j in 0..s {
        let (a, b) = cell_rows(j, parity, height);
        if p.get(b) {
            gates.push(ColumnGate::Cz(a, b));
        }
        if p.get(a) {
            gates.push(ColumnGate::Phase(a));
        }
        gates.push(ColumnGate::H(a));
    }
    Ok(gates)
}

/// Applies column gates in order to a `2^(2s)` amplitude vector.
pub fn apply_column_gates<T: Real>(state: &mut [Complex<T>], gates: &[ColumnGate]) {
    let h = T::FRAC_1_SQRT_2();
    let (minus, plus) = phase_pair::<T>();
    for gate in gates {
        match *gate {
            ColumnGate::H(a) => {
                let bit = 1 << a;
                for i in 0..state.len() {
                    if i & bit == 0 {
                        let (x, y) = (state[i], state[i | bit]);
                        state[i] = (x + y) * h;
                        state[i | bit] = (x - y) * h;
                    }
                }
            }
            ColumnGate::Phase(a) => {
                let bit = 1 << a;
                for (i, amp) in state.iter_mut().enumerate() {
                    *amp = *amp * if i & bit == 0 { minus } else { plus };
                }
            }
            ColumnGate::Cz(a, b) => {
                let mask = (1 << a) | (1 << b);
                for (i, amp) in state.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
        }
    }
}

/// Dense matrix of a gate sequence on `height` rows.
pub fn column_unitary<T: Real>(gates: &[ColumnGate], height: usize) -> SmallUnitary<T> {
    let dim = 1usize << height;
    let mut data = vec![zero(); dim * dim];
    let mut v = vec![zero(); dim];
    for col in 0..dim {
        v.iter_mut().for_each(|a| *a = zero());
        v[col] = one();
        apply_column_gates(&mut v, gates);
        for (row, a) in v.iter().enumerate() {
            data[row * dim + col] = *a;
        }
    }
    SmallUnitary::from_raw(dim, data)
}

/// Result of checking the transition unitary against the controlled-column
/// semantics on all 16 classical-program basis inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub passed: bool,
    pub max_deviation: f64,
    /// First offending input as (data basis index, program).
    pub mismatch: Option<(usize, CellProgram)>,
}

/// Checks the built transition unitary.
pub fn tau_consistency_check() -> ConsistencyReport {
    check_tau(&build_tau::<f64>())
}

/// Checks `tau (|D>_{12} |p>_{34}) = |p>_{12} (U(p)|D>)_{34}` for every data
/// basis state and every cell program.
pub fn check_tau<T: Real>(tau: &SmallUnitary<T>) -> ConsistencyReport {
    let mut report = ConsistencyReport {
        passed: true,
        max_deviation: 0.0,
        mismatch: None,
    };
    let local = |q1: usize, q2: usize, q3: usize, q4: usize| {
        (q1 << cell_bit(1)) | (q2 << cell_bit(2)) | (q3 << cell_bit(3)) | (q4 << cell_bit(4))
    };
    for p3 in [false, true] {
        for p4 in [false, true] {
            let program = ProgramColumn::new(vec![p3, p4]);
            let gates = u_of_p(&program, 0, 1).expect("two-row column");
            let u = column_unitary::<T>(&gates, 2);
            // column index: row 0 (upper site) is bit 0
            for d in 0..4 {
                let input = local(d & 1, d >> 1, p3 as usize, p4 as usize);
                let mut expected = [zero::<T>(); 16];
                for out in 0..4 {
                    expected[local(p3 as usize, p4 as usize, out & 1, out >> 1)] = u.get(out, d);
                }
                let dev = (0..16)
                    .map(|row| (tau.get(row, input) - expected[row]).norm())
                    .fold(T::zero(), T::max)
                    .to_f64()
                    .unwrap_or(f64::INFINITY);
                report.max_deviation = report.max_deviation.max(dev);
                if dev > T::CONSTRUCTION_TOL.to_f64().unwrap() && report.passed {
                    report.passed = false;
                    report.mismatch = Some((d, CellProgram::new(p3, p4)));
                }
            }
        }
    }
    report
}
