//! Column-product backend.
//!
//! On the torus with classical programs the lattice state stays a product of
//! column states. Data register `i` sits at column `[2i+t]_{2r}` and program
//! `p_{[i+t+1]_r}` at column `[2i+t+1]_{2r}`; each step applies
//! `U(p_{[i+t+1]_r})` at parity `t mod 2` to register `i`.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::dense::{write_amplitudes, ColumnAssignment, StateVector};
use crate::error::{QcaError, Result};
use crate::gatekit::{apply_column_gates, u_of_p, ColumnGate, ProgramColumn};
use crate::lattice::{LatticeSpec, Topology};
use crate::scalar::{basis, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredState<T> {
    data: Vec<Vec<Complex<T>>>,
    programs: Vec<ProgramColumn>,
    /// Gate lists of each program at parity 0 and 1.
    gates: Vec<[Vec<ColumnGate>; 2]>,
    t: usize,
    spec: LatticeSpec,
}

impl<T: Real> FactoredState<T> {
    pub fn init(assign: &ColumnAssignment<T>, spec: LatticeSpec) -> Result<Self> {
        if spec.topology() != Topology::Torus {
            return Err(QcaError::UnsupportedTopology(spec.topology()));
        }
        assign.validate(&spec)?;
        let gates = assign
            .programs
            .iter()
            .map(|p| Ok([u_of_p(p, 0, spec.s())?, u_of_p(p, 1, spec.s())?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            data: assign.data.clone(),
            programs: assign.programs.clone(),
            gates,
            t: 0,
            spec,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn programs(&self) -> &[ProgramColumn] {
        &self.programs
    }

    pub fn registers(&self) -> &[Vec<Complex<T>>] {
        &self.data
    }

    /// Index into `programs` of `p_{[k]_r}`, where `p_0` means `p_r`.
    fn program_slot(&self, k: usize) -> usize {
        let r = self.spec.r();
        (k % r + r - 1) % r
    }

    /// Column currently holding data register `i`.
    pub fn data_column(&self, i: usize) -> usize {
        (2 * i + self.t) % self.spec.width()
    }

    /// `(column, program index k)` pairs: program `p_k` (1-based) sits at `column`.
    pub fn program_positions(&self) -> Vec<(usize, usize)> {
        (0..self.spec.r())
            .map(|i| {
                let column = (2 * i + self.t + 1) % self.spec.width();
                (column, self.program_slot(i + self.t + 1) + 1)
            })
            .collect()
    }

    pub fn step(&mut self) {
        let parity = self.t % 2;
        let t = self.t;
        let slots: Vec<usize> = (0..self.spec.r())
            .map(|i| self.program_slot(i + t + 1))
            .collect();
        let gates = &self.gates;
        self.data
            .par_iter_mut()
            .zip(slots.par_iter())
            .for_each(|(reg, &slot)| apply_column_gates(reg, &gates[slot][parity]));
        self.t += 1;
    }

    pub fn run(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Data register 0, which must be read at `t = r` unless `allow_any_time`.
    pub fn output_register(&self, allow_any_time: bool) -> Result<&[Complex<T>]> {
        if !allow_any_time && self.t != self.spec.r() {
            return Err(QcaError::Contract(format!(
                "output register is read at t = r = {}, state is at t = {}",
                self.spec.r(),
                self.t
            )));
        }
        debug_assert!(allow_any_time || self.data_column(0) == self.spec.r());
        Ok(&self.data[0])
    }

    /// Per-column states implied by the position law, `columns[x]` on column `x`.
    pub fn columns(&self) -> Vec<Vec<Complex<T>>> {
        let dim = 1 << self.spec.height();
        let mut columns = vec![Vec::new(); self.spec.width()];
        for (i, reg) in self.data.iter().enumerate() {
            columns[self.data_column(i)] = reg.clone();
        }
        for (column, k) in self.program_positions() {
            columns[column] = basis(dim, self.programs[k - 1].basis_index());
        }
        columns
    }

    pub fn to_dense(&self) -> Result<StateVector<T>> {
        StateVector::from_columns(self.spec, self.t, &self.columns())
    }

    /// One block per register: `register i column c`, then `index re im` lines.
    pub fn dump_registers(&self) -> String {
        let mut out = String::new();
        for (i, reg) in self.data.iter().enumerate() {
            let _ = writeln!(out, "register {i} column {}", self.data_column(i));
            write_amplitudes(&mut out, reg);
        }
        out
    }
}

/// Free-function form of [`FactoredState::step`].
pub fn fstep<T: Real>(state: &mut FactoredState<T>) {
    state.step();
}
