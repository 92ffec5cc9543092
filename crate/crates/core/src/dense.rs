//! Full state-vector backend.
//!
//! Amplitude index bit `x * 2s + y` holds site `(x, y)` (see [`crate::lattice`]).
//! A step applies the cell transition unitary to every full cell of the
//! current partition, plus SWAP on planar boundary cells. Cells of one step
//! are disjoint, so each cell is an independent in-place block update.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SVD};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{QcaError, Result};
use crate::gatekit::{build_tau, ProgramColumn, SmallUnitary};
use crate::lattice::{cells_of_step, site_index, Cell, LatticeSpec, Site, Topology};
use crate::scalar::{basis, kron_vec, norm, zero, Real};

/// Largest lattice the dense backend will allocate (2^26 amplitudes).
pub const MAX_DENSE_QUBITS: usize = 26;

/// Name of the measurement sampler, recorded in run metadata.
pub const SAMPLER_NAME: &str = "chacha8-inverse-cdf";

const PARALLEL_MIN_QUBITS: usize = 14;

/// Initial contents of the lattice: data register `i` on column `2i`, program
/// `p_{i+1}` on column `2i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnAssignment<T> {
    pub data: Vec<Vec<Complex<T>>>,
    /// `programs[k]` is `p_{k+1}`.
    pub programs: Vec<ProgramColumn>,
}

impl<T: Real> ColumnAssignment<T> {
    /// All data registers `|0...0>` and the given programs.
    pub fn zero_data(spec: &LatticeSpec, programs: Vec<ProgramColumn>) -> Self {
        let dim = 1 << spec.height();
        Self {
            data: vec![basis(dim, 0); spec.r()],
            programs,
        }
    }

    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        let (r, height) = (spec.r(), spec.height());
        for len in [self.data.len(), self.programs.len()] {
            if len != r {
                return Err(QcaError::DimensionMismatch {
                    expected: r,
                    found: len,
                });
            }
        }
        for d in &self.data {
            if d.len() != 1 << height {
                return Err(QcaError::DimensionMismatch {
                    expected: 1 << height,
                    found: d.len(),
                });
            }
            let n = norm(d);
            if (n - T::one()).abs() > T::EVOLUTION_TOL {
                return Err(QcaError::NotNormalized(n.to_f64().unwrap_or(f64::NAN)));
            }
        }
        for p in &self.programs {
            if p.len() != height {
                return Err(QcaError::DimensionMismatch {
                    expected: height,
                    found: p.len(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_guard(spec: &LatticeSpec) -> Result<()> {
    if spec.num_qubits() > MAX_DENSE_QUBITS {
        return Err(QcaError::MemoryGuard {
            qubits: spec.num_qubits(),
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Singular values of `m`, unordered.
///
/// The QR sweeps of the complex SVD can underflow to `0/0` on nearly rank-one
/// matrices. A failed decomposition is retried on the adjoint, which takes a
/// different elimination path, and finally on the Gram matrix `m m^dagger`.
fn singular_values(m: DMatrix<Complex<f64>>) -> Vec<f64> {
    let attempt = |m: DMatrix<Complex<f64>>| {
        SVD::try_new_unordered(m, false, false, f64::EPSILON, 0)
            .map(|svd| svd.singular_values.as_slice().to_vec())
            .filter(|v| v.iter().all(|x| x.is_finite()))
    };
    attempt(m.clone())
        .or_else(|| attempt(m.adjoint()))
        .unwrap_or_else(|| {
            let gram = &m * m.adjoint();
            gram.symmetric_eigenvalues()
                .iter()
                .map(|&e| e.max(0.0).sqrt())
                .collect()
        })
}

/// Sparse rows of a small gate: for each output basis state, its nonzero
/// `(input, amplitude)` pairs.
#[derive(Debug, Clone)]
struct SparseGate<T> {
    rows: Vec<Vec<(usize, Complex<T>)>>,
}

impl<T: Real> SparseGate<T> {
    fn from_unitary(u: &SmallUnitary<T>) -> Self {
        let rows = (0..u.dim())
            .map(|i| {
                (0..u.dim())
                    .filter_map(|j| {
                        let a = u.get(i, j);
                        (a != zero()).then_some((j, a))
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

/// Spreads the bits of `k` around the zero bits at `sorted_positions`.
#[inline]
fn deposit(mut k: usize, sorted_positions: &[usize]) -> usize {
    for &p in sorted_positions {
        let low = k & ((1 << p) - 1);
        k = low | ((k >> p) << (p + 1));
    }
    k
}

#[derive(Clone, Copy)]
struct AmpPtr<T>(*mut Complex<T>);

// SAFETY: used only to write disjoint index sets from parallel workers.
unsafe impl<T: Send> Send for AmpPtr<T> {}
unsafe impl<T: Send> Sync for AmpPtr<T> {}

impl<T> AmpPtr<T> {
    fn get(self) -> *mut Complex<T> {
        self.0
    }
}

/// Applies `gate` with local index bit `l` mapped to amplitude bit `positions[l]`.
fn apply_gate<T: Real>(amps: &mut [Complex<T>], gate: &SparseGate<T>, positions: &[usize]) {
    let m = positions.len();
    let dim = 1 << m;
    debug_assert_eq!(gate.rows.len(), dim);
    let offsets: Vec<usize> = (0..dim)
        .map(|l| {
            (0..m)
                .filter(|b| (l >> b) & 1 == 1)
                .fold(0, |acc, b| acc | (1 << positions[b]))
        })
        .collect();
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    let n_bases = amps.len() >> m;

    let kernel = |base: usize, amps: *mut Complex<T>| {
        let mut local = [zero::<T>(); 16];
        for (l, off) in offsets.iter().enumerate() {
            // SAFETY: base | off < amps.len() and each base owns its offsets.
            local[l] = unsafe { *amps.add(base | off) };
        }
        for (l, off) in offsets.iter().enumerate() {
            let v = gate.rows[l]
                .iter()
                .fold(zero(), |acc, &(j, a)| acc + a * local[j]);
            unsafe { *amps.add(base | off) = v };
        }
    };

    let log_len = amps.len().trailing_zeros() as usize;
    let ptr = AmpPtr(amps.as_mut_ptr());
    if log_len >= PARALLEL_MIN_QUBITS {
        (0..n_bases)
            .into_par_iter()
            .with_min_len(1 << 10)
            .for_each(move |k| kernel(deposit(k, &sorted), ptr.get()));
    } else {
        for k in 0..n_bases {
            kernel(deposit(k, &sorted), ptr.get());
        }
    }
}

fn cell_positions(sites: &[Site; 4], spec: &LatticeSpec) -> [usize; 4] {
    // local bit 3 is q1, bit 0 is q4
    let idx = |s: &Site| site_index(s.x, s.y, spec).expect("partition site in range");
    [
        idx(&sites[3]),
        idx(&sites[2]),
        idx(&sites[1]),
        idx(&sites[0]),
    ]
}

/// Reduced density operator of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity<T> {
    pub dim: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> ReducedDensity<T> {
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `max |rho - rho^dagger|`
    pub fn hermiticity_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// `<v| rho |v>`
    pub fn expectation(&self, v: &[Complex<T>]) -> T {
        let mut acc = zero::<T>();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc = acc + v[i].conj() * self.get(i, j) * v[j];
            }
        }
        acc.re
    }

    /// Eigenvalues in ascending order (computed in f64).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let a = self.get(i, j);
            Complex::new(a.re.to_f64().unwrap(), a.im.to_f64().unwrap())
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// A state vector `v` with `rho ~ |v><v|`, taken from the column of
    /// `rho` with the largest diagonal entry, and `<v|rho|v>`.
    pub fn dominant_state(&self) -> (Vec<Complex<T>>, T) {
        let k = (0..self.dim)
            .max_by(|&a, &b| self.get(a, a).re.partial_cmp(&self.get(b, b).re).unwrap())
            .expect("non-empty");
        let scale = self.get(k, k).re.sqrt();
        let v: Vec<_> = (0..self.dim).map(|i| self.get(i, k) / scale).collect();
        let n = norm(&v);
        let v: Vec<_> = v.into_iter().map(|a| a / n).collect();
        let f = self.expectation(&v);
        (v, f)
    }
}

/// Schmidt coefficients of a bipartition, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtProfile {
    pub rank: usize,
    pub values: Vec<f64>,
}

impl SchmidtProfile {
    fn from_values(mut values: Vec<f64>, tol: f64) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let rank = values.iter().filter(|&&v| v > tol).count();
        Self { rank, values }
    }
}

/// Samples `n` outcomes from `probs` by inverse CDF on a ChaCha8 stream.
pub fn sample_distribution(probs: &[f64], seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = probs.iter().sum();
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            // rounding left u at the top edge: last outcome with weight
            probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        })
        .collect()
}

/// Bits of a column basis index, row 0 first.
pub fn index_bits(index: usize, height: usize) -> Vec<bool> {
    (0..height).map(|y| (index >> y) & 1 == 1).collect()
}

/// The full lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
    spec: LatticeSpec,
    t: usize,
}

impl<T: Real> StateVector<T> {
    /// Product state of the initial column assignment at `t = 0`.
    pub fn init(assign: &ColumnAssignment<T>, spec: LatticeSpec) -> Result<Self> {
        check_guard(&spec)?;
        assign.validate(&spec)?;
        let dim = 1 << spec.height();
        let mut columns = Vec::with_capacity(spec.width());
        for (d, p) in assign.data.iter().zip(&assign.programs) {
            columns.push(d.clone());
            columns.push(basis(dim, p.basis_index()));
        }
        Self::from_columns(spec, 0, &columns)
    }

    /// Tensor product of per-column states, `columns[x]` on column `x`.
    pub fn from_columns(spec: LatticeSpec, t: usize, columns: &[Vec<Complex<T>>]) -> Result<Self> {
        check_guard(&spec)?;
        if columns.len() != spec.width() {
            return Err(QcaError::DimensionMismatch {
                expected: spec.width(),
                found: columns.len(),
            });
        }
        let mut amps = vec![Complex::new(T::one(), T::zero())];
        for col in columns {
            if col.len() != 1 << spec.height() {
                return Err(QcaError::DimensionMismatch {
                    expected: 1 << spec.height(),
                    found: col.len(),
                });
            }
            amps = kron_vec(col, &amps);
        }
        Self::from_amplitudes(spec, t, amps)
    }

    pub fn from_amplitudes(spec: LatticeSpec, t: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        check_guard(&spec)?;
        if amps.len() != 1 << spec.num_qubits() {
            return Err(QcaError::DimensionMismatch {
                expected: 1 << spec.num_qubits(),
                found: amps.len(),
            });
        }
        let n = norm(&amps);
        if (n - T::one()).abs() > T::EVOLUTION_TOL {
            return Err(QcaError::NotNormalized(n.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { amps, spec, t })
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn norm(&self) -> T {
        norm(&self.amps)
    }

    /// Advances one time step.
    pub fn step(&mut self) {
        let tau = SparseGate::from_unitary(&build_tau::<T>());
        self.apply_partition(self.t, &tau);
        self.t += 1;
    }

    /// Undoes the most recent step.
    pub fn inverse_step(&mut self) -> Result<()> {
        if self.t == 0 {
            return Err(QcaError::Contract("cannot step back from t = 0".into()));
        }
        let tau_dag = SparseGate::from_unitary(&build_tau::<T>().adjoint());
        self.apply_partition(self.t - 1, &tau_dag);
        self.t -= 1;
        Ok(())
    }

    pub fn run(&mut self, steps: usize) {
        let tau = SparseGate::from_unitary(&build_tau::<T>());
        for _ in 0..steps {
            self.apply_partition(self.t, &tau);
            self.t += 1;
        }
    }

    fn apply_partition(&mut self, t: usize, cell_gate: &SparseGate<T>) {
        let swap =
            SparseGate::from_unitary(&SmallUnitary::permutation(4, |i| ((i & 1) << 1) | (i >> 1)));
        let partition = cells_of_step(t, &self.spec);
        for cell in &partition.cells {
            match cell {
                Cell::Full { sites, .. } => {
                    let pos = cell_positions(sites, &self.spec);
                    apply_gate(&mut self.amps, cell_gate, &pos);
                }
                Cell::Swap([a, b]) => {
                    let pos = [
                        site_index(a.x, a.y, &self.spec).expect("in range"),
                        site_index(b.x, b.y, &self.spec).expect("in range"),
                    ];
                    apply_gate(&mut self.amps, &swap, &pos);
                }
                Cell::Identity(_) => {}
            }
        }
    }

    /// Pauli X on one site. Used to inject faults into verification runs.
    pub fn flip_site(&mut self, x: usize, y: usize) -> Result<()> {
        let bit = 1 << site_index(x, y, &self.spec)?;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
        Ok(())
    }

    fn check_column(&self, x: usize) -> Result<()> {
        if x >= self.spec.width() {
            return Err(QcaError::OutOfRange {
                what: "column",
                value: x,
                bound: self.spec.width(),
            });
        }
        Ok(())
    }

    /// Partial trace over every column except `x`.
    pub fn column_marginal(&self, x: usize) -> Result<ReducedDensity<T>> {
        self.check_column(x)?;
        let h = self.spec.height();
        let dim = 1 << h;
        let low = 1 << (h * x);
        let high = self.amps.len() >> (h * (x + 1));
        let mut data = vec![zero::<T>(); dim * dim];
        for hi in 0..high {
            for lo in 0..low {
                let base = (hi << (h * (x + 1))) | lo;
                for a in 0..dim {
                    let va = self.amps[base | (a << (h * x))];
                    if va == zero() {
                        continue;
                    }
                    for b in 0..dim {
                        let vb = self.amps[base | (b << (h * x))];
                        data[a * dim + b] = data[a * dim + b] + va * vb.conj();
                    }
                }
            }
        }
        Ok(ReducedDensity { dim, data })
    }

    /// Samples one computational-basis outcome of column `x`, returning the
    /// bits (row 0 first) and their probability.
    pub fn measure_column(&self, x: usize, seed: u64) -> Result<(Vec<bool>, f64)> {
        let probs = self.column_probabilities(x)?;
        let outcome = sample_distribution(&probs, seed, 1)[0];
        Ok((index_bits(outcome, self.spec.height()), probs[outcome]))
    }

    pub fn column_probabilities(&self, x: usize) -> Result<Vec<f64>> {
        Ok(self
            .column_marginal(x)?
            .diagonal()
            .into_iter()
            .map(|p| p.to_f64().unwrap_or(0.0).max(0.0))
            .collect())
    }

    /// Schmidt coefficients between `left_columns` and the rest of the lattice.
    pub fn schmidt_bipartition(&self, left_columns: &[usize]) -> Result<SchmidtProfile> {
        let h = self.spec.height();
        let mut left_mask = 0usize;
        for &x in left_columns {
            self.check_column(x)?;
            left_mask |= ((1 << h) - 1) << (h * x);
        }
        let n = self.spec.num_qubits();
        let left_bits: Vec<usize> = (0..n).filter(|b| left_mask >> b & 1 == 1).collect();
        let right_bits: Vec<usize> = (0..n).filter(|b| left_mask >> b & 1 == 0).collect();
        let (rows, cols) = (1 << left_bits.len(), 1 << right_bits.len());
        let gather = |i: usize, bits: &[usize]| {
            bits.iter()
                .enumerate()
                .fold(0, |acc, (k, &b)| acc | (((i >> b) & 1) << k))
        };
        let mut m = DMatrix::<Complex<f64>>::zeros(rows.min(cols), rows.max(cols));
        let transpose = rows > cols;
        for (i, a) in self.amps.iter().enumerate() {
            let (l, r) = (gather(i, &left_bits), gather(i, &right_bits));
            let v = Complex::new(a.re.to_f64().unwrap(), a.im.to_f64().unwrap());
            if transpose {
                m[(r, l)] = v;
            } else {
                m[(l, r)] = v;
            }
        }
        let values = if m.nrows() == 1 {
            vec![m.row(0).norm()]
        } else {
            singular_values(m)
        };
        Ok(SchmidtProfile::from_values(values, T::RANK_TOL))
    }

    /// Bipartition between columns `0..=c` and `c+1..2r`. On the torus this
    /// bipartition has a second cut between columns `2r-1` and `0`.
    pub fn schmidt_rank_at_cut(&self, c: usize) -> Result<SchmidtProfile> {
        if c + 1 >= self.spec.width() {
            return Err(QcaError::OutOfRange {
                what: "cut",
                value: c,
                bound: self.spec.width() - 1,
            });
        }
        let left: Vec<usize> = (0..=c).collect();
        self.schmidt_bipartition(&left)
    }

    /// Bipartition of the torus into the cyclic column interval
    /// `start, start+1, ..., start+len-1` and its complement.
    pub fn schmidt_cyclic(&self, start: usize, len: usize) -> Result<SchmidtProfile> {
        let w = self.spec.width();
        if len == 0 || len >= w {
            return Err(QcaError::OutOfRange {
                what: "interval length",
                value: len,
                bound: w,
            });
        }
        let left: Vec<usize> = (0..len).map(|k| (start + k) % w).collect();
        self.schmidt_bipartition(&left)
    }

    /// Text dump: header `qca-state s r topology t`, then `index re im` for
    /// every amplitude with modulus above 1e-14.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "qca-state {} {} {} {}\n",
            self.spec.s(),
            self.spec.r(),
            self.spec.topology(),
            self.t
        );
        write_amplitudes(&mut out, &self.amps);
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| QcaError::Parse("empty state dump".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "qca-state" {
            return Err(QcaError::Parse(format!("bad state header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| QcaError::Parse(format!("{s:?}: {e}")))
        };
        let topology: Topology = fields[3].parse()?;
        let spec = LatticeSpec::new(num(fields[1])?, num(fields[2])?, topology)?;
        check_guard(&spec)?;
        let amps = parse_amplitudes(lines, 1 << spec.num_qubits())?;
        Self::from_amplitudes(spec, num(fields[4])?, amps)
    }
}

pub(crate) fn write_amplitudes<T: Real>(out: &mut String, amps: &[Complex<T>]) {
    for (i, a) in amps.iter().enumerate() {
        if a.norm().to_f64().unwrap_or(0.0) > 1e-14 {
            let _ = writeln!(
                out,
                "{i} {:.16e} {:.16e}",
                a.re.to_f64().unwrap(),
                a.im.to_f64().unwrap()
            );
        }
    }
}

pub(crate) fn parse_amplitudes<'a, T: Real>(
    lines: impl Iterator<Item = &'a str>,
    dim: usize,
) -> Result<Vec<Complex<T>>> {
    let mut amps = vec![zero(); dim];
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(QcaError::Parse(format!("bad amplitude line {line:?}")));
        }
        let idx: usize = parts[0]
            .parse()
            .map_err(|e| QcaError::Parse(format!("{line:?}: {e}")))?;
        if idx >= dim {
            return Err(QcaError::OutOfRange {
                what: "amplitude index",
                value: idx,
                bound: dim,
            });
        }
        let f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| QcaError::Parse(format!("{line:?}: {e}")))
        };
        amps[idx] = Complex::new(T::lit(f(parts[1])?), T::lit(f(parts[2])?));
    }
    Ok(amps)
}

/// Free-function form of [`StateVector::init`].
pub fn init_state<T: Real>(
    assign: &ColumnAssignment<T>,
    spec: LatticeSpec,
) -> Result<StateVector<T>> {
    StateVector::init(assign, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::inner;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    type C = Complex<f64>;

    fn random_state(n_qubits: usize, seed: u64) -> Vec<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C> = (0..1 << n_qubits)
            .map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let n = norm(&v);
        v.into_iter().map(|a| a / n).collect()
    }

    fn zeros_assign(spec: &LatticeSpec) -> ColumnAssignment<f64> {
        ColumnAssignment::zero_data(spec, vec![ProgramColumn::zeros(spec.height()); spec.r()])
    }

    #[test]
    fn deposit_skips_positions() {
        assert_eq!(deposit(0b11, &[0]), 0b110);
        assert_eq!(deposit(0b111, &[1, 3]), 0b10101);
    }

    #[test]
    fn init_all_zero_is_vacuum() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let st = StateVector::init(&zeros_assign(&spec), spec).unwrap();
        assert_eq!(st.amplitudes()[0], C::new(1.0, 0.0));
        assert!(st.amplitudes()[1..].iter().all(|a| *a == C::new(0.0, 0.0)));
        assert_eq!(st.t(), 0);
    }

    #[test]
    fn init_embeds_bell_register() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let mut assign = zeros_assign(&spec);
        assign.data[0] = vec![
            C::new(FRAC_1_SQRT_2, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(FRAC_1_SQRT_2, 0.0),
        ];
        let st = StateVector::init(&assign, spec).unwrap();
        let nonzero: Vec<_> = st
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .collect();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].0, 0);
        assert_eq!(nonzero[1].0, 0b11);
        assert!((st.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn init_rejects_bad_input() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let mut assign = zeros_assign(&spec);
        assign.data[1] = vec![
            C::new(1.0, 0.0),
            C::new(1.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ];
        assert!(matches!(
            StateVector::init(&assign, spec),
            Err(QcaError::NotNormalized(_))
        ));
        let mut assign = zeros_assign(&spec);
        assign.programs.pop();
        assert!(matches!(
            StateVector::init(&assign, spec),
            Err(QcaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn memory_guard() {
        let spec = LatticeSpec::torus(2, 4).unwrap();
        let assign = zeros_assign(&spec);
        assert!(matches!(
            StateVector::init(&assign, spec),
            Err(QcaError::MemoryGuard { qubits: 32, .. })
        ));
    }

    #[test]
    fn first_step_moves_hadamarded_data_right() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let mut st = StateVector::init(&zeros_assign(&spec), spec).unwrap();
        st.step();
        let rho = st.column_marginal(1).unwrap();
        let plus0 = vec![
            C::new(FRAC_1_SQRT_2, 0.0),
            C::new(FRAC_1_SQRT_2, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ];
        assert!((rho.expectation(&plus0) - 1.0).abs() < 1e-12);
        // program p1 moved to column 0
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!((st.column_marginal(0).unwrap().get(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_inverse_round_trip() {
        for topo in [Topology::Torus, Topology::Planar] {
            let spec = LatticeSpec::new(1, 3, topo).unwrap();
            let psi = random_state(12, 11);
            let orig = StateVector::from_amplitudes(spec, 0, psi.clone()).unwrap();
            let mut st = orig.clone();
            st.run(3);
            for _ in 0..3 {
                st.inverse_step().unwrap();
            }
            assert_eq!(st.t(), 0);
            assert!((inner(orig.amplitudes(), st.amplitudes()).norm() - 1.0).abs() < 1e-12);
            assert!(st.inverse_step().is_err());

            let mut st = StateVector::from_amplitudes(spec, 5, psi.clone()).unwrap();
            st.inverse_step().unwrap();
            st.step();
            assert!((inner(&psi, st.amplitudes()).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn run_zero_is_identity_and_norm_is_kept() {
        let spec = LatticeSpec::torus(2, 2).unwrap();
        let psi = random_state(16, 5);
        let mut st = StateVector::from_amplitudes(spec, 0, psi.clone()).unwrap();
        st.run(0);
        assert_eq!(st.amplitudes(), &psi[..]);
        st.run(9);
        assert!((st.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cell_order_within_step_is_irrelevant() {
        let spec = LatticeSpec::torus(2, 2).unwrap();
        let psi = random_state(16, 9);
        let tau = SparseGate::from_unitary(&build_tau::<f64>());
        for t in 0..2 {
            let p = cells_of_step(t, &spec);
            let mut fwd = psi.clone();
            for (_, s) in p.full_cells() {
                apply_gate(&mut fwd, &tau, &cell_positions(s, &spec));
            }
            let mut rev = psi.clone();
            for (_, s) in p.full_cells().collect::<Vec<_>>().into_iter().rev() {
                apply_gate(&mut rev, &tau, &cell_positions(s, &spec));
            }
            for (a, b) in fwd.iter().zip(&rev) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn parallel_and_serial_kernels_agree() {
        // 16 qubits crosses the parallel threshold; compare with a direct matrix action
        let spec = LatticeSpec::torus(2, 2).unwrap();
        let psi = random_state(16, 3);
        let tau = build_tau::<f64>();
        let sites = cells_of_step(1, &spec)
            .full_cells()
            .last()
            .map(|(_, s)| *s)
            .unwrap();
        let pos = cell_positions(&sites, &spec);
        let mut fast = psi.clone();
        apply_gate(&mut fast, &SparseGate::from_unitary(&tau), &pos);
        let mut slow = vec![C::new(0.0, 0.0); psi.len()];
        for (i, a) in psi.iter().enumerate() {
            let l = (0..4).fold(0, |acc, b| acc | (((i >> pos[b]) & 1) << b));
            let base = (0..4).fold(i, |acc, b| acc & !(1 << pos[b]));
            for out in 0..16 {
                let j = (0..4).fold(base, |acc, b| acc | (((out >> b) & 1) << pos[b]));
                slow[j] += tau.get(out, l) * a;
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn marginal_properties() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let st = StateVector::from_amplitudes(spec, 0, random_state(8, 1)).unwrap();
        for x in 0..4 {
            let rho = st.column_marginal(x).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(rho.hermiticity_deviation() < 1e-12);
            assert!(rho.eigenvalues().iter().all(|&e| e > -1e-10));
        }
        assert!(st.column_marginal(4).is_err());
    }

    #[test]
    fn program_column_measures_deterministically() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let programs = vec!["10".parse().unwrap(), "11".parse().unwrap()];
        let mut st =
            StateVector::<f64>::init(&ColumnAssignment::zero_data(&spec, programs), spec).unwrap();
        let (bits, p) = st.measure_column(1, 3).unwrap();
        assert_eq!(bits, vec![true, false]);
        assert!((p - 1.0).abs() < 1e-12);
        st.run(3);
        let a = st.measure_column(2, 42).unwrap();
        let b = st.measure_column(2, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schmidt_product_and_bell() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let st = StateVector::init(&zeros_assign(&spec), spec).unwrap();
        for c in 0..3 {
            assert_eq!(st.schmidt_rank_at_cut(c).unwrap().rank, 1);
        }
        // Bell pair between site (1,1) and (2,0)
        let mut amps = vec![C::new(0.0, 0.0); 256];
        amps[0] = C::new(FRAC_1_SQRT_2, 0.0);
        amps[(1 << 3) | (1 << 4)] = C::new(FRAC_1_SQRT_2, 0.0);
        let bell = StateVector::from_amplitudes(spec, 0, amps).unwrap();
        let prof = bell.schmidt_rank_at_cut(1).unwrap();
        assert_eq!(prof.rank, 2);
        assert!((prof.values[0] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((prof.values[1] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(bell.schmidt_rank_at_cut(0).unwrap().rank, 1);
        assert_eq!(bell.schmidt_cyclic(1, 1).unwrap().rank, 2);
        assert!(bell.schmidt_rank_at_cut(3).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let spec = LatticeSpec::planar(1, 2).unwrap();
        let mut st = StateVector::from_amplitudes(spec, 0, random_state(8, 2)).unwrap();
        st.run(2);
        let text = st.dump();
        assert!(text.starts_with("qca-state 1 2 planar 2\n"));
        let back = StateVector::<f64>::parse_dump(&text).unwrap();
        assert_eq!(back.t(), 2);
        for (a, b) in back.amplitudes().iter().zip(st.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn sampler_is_reproducible() {
        let probs = [0.25, 0.25, 0.5];
        let a = sample_distribution(&probs, 7, 100);
        assert_eq!(a, sample_distribution(&probs, 7, 100));
        assert_ne!(a, sample_distribution(&probs, 8, 100));
        assert_eq!(sample_distribution(&[0.0, 1.0], 1, 10), vec![1; 10]);
    }

    #[test]
    fn f32_backend_steps() {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let assign = ColumnAssignment::<f32>::zero_data(
            &spec,
            vec!["01".parse().unwrap(), "10".parse().unwrap()],
        );
        let mut st = StateVector::init(&assign, spec).unwrap();
        st.run(4);
        assert!((st.norm() - 1.0).abs() < 1e-5);
    }
}
