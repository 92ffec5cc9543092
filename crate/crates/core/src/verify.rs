//! Cross-checks between backends, the register position law, and
//! entanglement structure.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dense::{ColumnAssignment, StateVector};
use crate::error::{QcaError, Result};
use crate::factored::FactoredState;
use crate::gatekit::{apply_column_gates, u_of_p, ColumnGate, ProgramColumn};
use crate::lattice::{LatticeSpec, Topology};
use crate::scalar::{inner, norm, Real};

/// Overlap of two states modulo global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `|<a|b>|`
    pub fidelity: f64,
    /// `<a|b> / |<a|b>|`, so `b ~ phase * a`.
    pub phase: Complex<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn fidelity_up_to_phase<T: Real>(
    a: &[Complex<T>],
    b: &[Complex<T>],
    tolerance: f64,
) -> Result<EquivalenceReport> {
    if a.len() != b.len() {
        return Err(QcaError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    for v in [a, b] {
        let n = norm(v);
        if (n - T::one()).abs() > T::EVOLUTION_TOL {
            return Err(QcaError::NotNormalized(n.to_f64().unwrap_or(f64::NAN)));
        }
    }
    let ov = inner(a, b);
    let ov = Complex::new(ov.re.to_f64().unwrap(), ov.im.to_f64().unwrap());
    let fidelity = ov.norm();
    let phase = if fidelity > 0.0 {
        ov / fidelity
    } else {
        Complex::new(1.0, 0.0)
    };
    Ok(EquivalenceReport {
        fidelity,
        phase,
        tolerance,
        pass: fidelity >= 1.0 - tolerance,
    })
}

/// Per-column findings of an occupancy check.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    pub pass: bool,
    /// Largest deviation of a program column marginal from `|p><p|`.
    pub program_deviation: f64,
    /// Largest second Schmidt coefficient of a data column.
    pub data_impurity: f64,
    pub failures: Vec<String>,
}

/// Checks the position law at time `t` on the torus: program `p_{[i+t+1]_r}`
/// is the exact basis state at column `[2i+t+1]_{2r}` and every data column
/// `[2i+t]_{2r}` is pure.
pub fn occupancy_report<T: Real>(
    state: &StateVector<T>,
    programs: &[ProgramColumn],
    t: usize,
) -> Result<OccupancyReport> {
    let spec = *state.spec();
    if spec.topology() != Topology::Torus {
        return Err(QcaError::UnsupportedTopology(spec.topology()));
    }
    if programs.len() != spec.r() {
        return Err(QcaError::DimensionMismatch {
            expected: spec.r(),
            found: programs.len(),
        });
    }
    let (r, w) = (spec.r(), spec.width());
    let tol = T::EVOLUTION_TOL.to_f64().unwrap();
    let mut report = OccupancyReport {
        pass: true,
        program_deviation: 0.0,
        data_impurity: 0.0,
        failures: Vec::new(),
    };
    for i in 0..r {
        let column = (2 * i + t + 1) % w;
        let k = (i + t + 1) % r;
        let p = &programs[(k + r - 1) % r];
        let rho = state.column_marginal(column)?;
        let target = p.basis_index();
        let mut dev = 0.0f64;
        for a in 0..rho.dim {
            for b in 0..rho.dim {
                let want = if a == target && b == target { 1.0 } else { 0.0 };
                let got = rho.get(a, b);
                let got = Complex::new(got.re.to_f64().unwrap(), got.im.to_f64().unwrap());
                dev = dev.max((got - want).norm());
            }
        }
        report.program_deviation = report.program_deviation.max(dev);
        if dev > tol {
            report.pass = false;
            report.failures.push(format!(
                "column {column}: program p{} deviates by {dev:e}",
                (k + r - 1) % r + 1
            ));
        }

        let data_column = (2 * i + t) % w;
        let prof = state.schmidt_bipartition(&[data_column])?;
        let second = prof.values.get(1).copied().unwrap_or(0.0);
        report.data_impurity = report.data_impurity.max(second);
        if second > T::RANK_TOL {
            report.pass = false;
            report.failures.push(format!(
                "column {data_column}: data register is entangled ({second:e})"
            ));
        }
    }
    Ok(report)
}

pub fn check_occupancy<T: Real>(
    state: &StateVector<T>,
    programs: &[ProgramColumn],
    t: usize,
) -> bool {
    occupancy_report(state, programs, t)
        .map(|r| r.pass)
        .unwrap_or(false)
}

/// Whether the full program basis states built from `a` and `b` are orthogonal.
pub fn program_orthogonality(a: &[ProgramColumn], b: &[ProgramColumn]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(QcaError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut overlap = 1.0f64;
    for (pa, pb) in a.iter().zip(b) {
        if pa.len() != pb.len() {
            return Err(QcaError::DimensionMismatch {
                expected: pa.len(),
                found: pb.len(),
            });
        }
        // <pa|pb> of two computational basis states
        overlap *= if pa.basis_index() == pb.basis_index() {
            1.0
        } else {
            0.0
        };
    }
    Ok(overlap == 0.0)
}

/// Schmidt rank at every vertical cut of a planar sheet, left to right.
pub fn wavefront_profile<T: Real>(state: &StateVector<T>) -> Result<Vec<usize>> {
    let spec = state.spec();
    if spec.topology() != Topology::Planar {
        return Err(QcaError::UnsupportedTopology(spec.topology()));
    }
    (0..spec.width() - 1)
        .map(|c| state.schmidt_rank_at_cut(c).map(|p| p.rank))
        .collect()
}

/// Column action on an open column: like `u_of_p`, but without the cell that
/// wraps from the last row to row 0. This is what a data register crossing
/// the interior of a planar sheet experiences.
pub fn open_column_gates(p: &ProgramColumn, parity: u8, s: usize) -> Result<Vec<ColumnGate>> {
    let height = 2 * s;
    let gates = u_of_p(p, parity, s)?;
    Ok(gates
        .into_iter()
        .filter(|g| match *g {
            ColumnGate::Cz(a, b) => b > a,
            ColumnGate::Phase(a) | ColumnGate::H(a) => parity == 0 || a + 1 < height,
        })
        .collect())
}

/// Register 0 after `steps` steps on a planar sheet, from the open-column law.
pub fn planar_register_law<T: Real>(
    input: &[Complex<T>],
    programs: &[ProgramColumn],
    steps: usize,
    s: usize,
) -> Result<Vec<Complex<T>>> {
    let mut v = input.to_vec();
    for k in 0..steps {
        let p = &programs[k % programs.len()];
        apply_column_gates(&mut v, &open_column_gates(p, (k % 2) as u8, s)?);
    }
    Ok(v)
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn at_most(check: &str, params: serde_json::Value, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            params,
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// A site to flip before checking, as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub column: usize,
    pub row: usize,
}

/// Runs every applicable check over a dense evolution of `assign`.
///
/// Torus: at each `0 <= t <= 2r`, position law, agreement with the factored
/// backend, and Schmidt rank 1 across every cyclic column interval.
/// Planar: at each `0 <= t <= r`, the wavefront bound and monotone cut
/// ranks; at `t = r`, purity of column `r` and agreement with the open-column
/// register law.
pub fn run_checks(
    assign: &ColumnAssignment<f64>,
    spec: LatticeSpec,
    fault: Option<Fault>,
) -> Result<Vec<CheckRecord>> {
    let mut dense = StateVector::init(assign, spec)?;
    if let Some(f) = fault {
        dense.flip_site(f.column, f.row)?;
    }
    match spec.topology() {
        Topology::Torus => torus_checks(assign, spec, dense),
        Topology::Planar => planar_checks(assign, spec, dense),
    }
}

fn torus_checks(
    assign: &ColumnAssignment<f64>,
    spec: LatticeSpec,
    mut dense: StateVector<f64>,
) -> Result<Vec<CheckRecord>> {
    let mut factored = FactoredState::init(assign, spec)?;
    let w = spec.width();
    let mut out = Vec::new();
    for t in 0..=2 * spec.r() {
        if t > 0 {
            dense.step();
            factored.step();
        }
        let occ = occupancy_report(&dense, &assign.programs, t)?;
        out.push(CheckRecord::at_most(
            "occupancy.program",
            json!({ "t": t }),
            occ.program_deviation,
            f64::EVOLUTION_TOL,
        ));
        out.push(CheckRecord::at_most(
            "occupancy.data_purity",
            json!({ "t": t }),
            occ.data_impurity,
            f64::RANK_TOL,
        ));

        let expected = factored.to_dense()?;
        let eq = fidelity_up_to_phase(
            expected.amplitudes(),
            dense.amplitudes(),
            f64::EVOLUTION_TOL,
        )?;
        out.push(CheckRecord::at_most(
            "cross_backend.infidelity",
            json!({ "t": t }),
            1.0 - eq.fidelity,
            f64::EVOLUTION_TOL,
        ));

        let mut worst = 0.0f64;
        for start in 0..w {
            for len in 1..w {
                let prof = dense.schmidt_cyclic(start, len)?;
                worst = worst.max(prof.values.get(1).copied().unwrap_or(0.0));
            }
        }
        out.push(CheckRecord::at_most(
            "schmidt.column_cuts",
            json!({ "t": t }),
            worst,
            f64::RANK_TOL,
        ));
    }
    Ok(out)
}

fn planar_checks(
    assign: &ColumnAssignment<f64>,
    spec: LatticeSpec,
    mut dense: StateVector<f64>,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let w = spec.width();
    for t in 0..=spec.r() {
        if t > 0 {
            dense.step();
        }
        let mut values = Vec::with_capacity(w - 1);
        let mut ranks = Vec::with_capacity(w - 1);
        for c in 0..w - 1 {
            let prof = dense.schmidt_rank_at_cut(c)?;
            values.push(prof.values.get(1).copied().unwrap_or(0.0));
            ranks.push(prof.rank);
        }
        // cut c lies between columns c and c+1; it is strictly left of
        // column 2r-1-t when c+1 <= 2r-1-t
        let bound = (w - 1).saturating_sub(t);
        let worst = values[..bound].iter().fold(0.0f64, |m, &v| m.max(v));
        out.push(CheckRecord::at_most(
            "wavefront.left_of_front",
            json!({ "t": t, "front_column": bound, "ranks": ranks }),
            worst,
            f64::RANK_TOL,
        ));
        let drops = ranks.windows(2).filter(|p| p[1] < p[0]).count();
        out.push(CheckRecord::at_most(
            "wavefront.monotone",
            json!({ "t": t, "ranks": ranks }),
            drops as f64,
            0.0,
        ));
    }

    let r = spec.r();
    let rho = dense.column_marginal(r)?;
    let (d0, purity) = rho.dominant_state();
    out.push(CheckRecord::at_most(
        "planar.d0_purity",
        json!({ "column": r }),
        1.0 - purity,
        f64::EVOLUTION_TOL,
    ));
    let law = planar_register_law(&assign.data[0], &assign.programs, r, spec.s())?;
    let eq = fidelity_up_to_phase(&law, &d0, 1e-9)?;
    out.push(CheckRecord::at_most(
        "planar.d0_register_law",
        json!({ "column": r }),
        1.0 - eq.fidelity,
        1e-9,
    ));
    Ok(out)
}
