//! On-disk formats: circuit, program, run output and the matrix dump.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use qca_core::compiler::CircuitIR;
use qca_core::gatekit::{ProgramColumn, SmallUnitary};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, CliResult};

/// `{"s": s, "r": r, "columns": ["0110", ...], "data": [[[re, im], ...], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    pub s: usize,
    pub r: usize,
    /// One bitstring per program column, row 0 first.
    pub columns: Vec<String>,
    /// Initial data registers; all `|0...0>` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<[f64; 2]>>>,
}

impl ProgramFile {
    pub fn from_programs(s: usize, programs: &[ProgramColumn]) -> Self {
        Self {
            s,
            r: programs.len(),
            columns: programs.iter().map(ToString::to_string).collect(),
            data: None,
        }
    }

    pub fn programs(&self) -> CliResult<Vec<ProgramColumn>> {
        if self.columns.len() != self.r {
            return Err(CliError::Input(format!(
                "program file declares r = {} but lists {} columns",
                self.r,
                self.columns.len()
            )));
        }
        self.columns
            .iter()
            .enumerate()
            .map(|(k, text)| {
                if text.len() != 2 * self.s {
                    return Err(CliError::Input(format!(
                        "column {k} has {} bits, expected 2s = {}",
                        text.len(),
                        2 * self.s
                    )));
                }
                text.parse::<ProgramColumn>().map_err(CliError::from)
            })
            .collect()
    }

    pub fn registers(&self) -> Option<Vec<Vec<Complex<f64>>>> {
        self.data.as_ref().map(|regs| {
            regs.iter()
                .map(|reg| reg.iter().map(|&[re, im]| Complex::new(re, im)).collect())
                .collect()
        })
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_circuit(path: &Path) -> CliResult<CircuitIR> {
    read_json(path)
}

/// Writes `text` to `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// `[re, im]` with 17 significant digits.
pub fn amplitude_json(a: Complex<f64>) -> Box<RawValue> {
    RawValue::from_string(format!("[{:.16e}, {:.16e}]", a.re, a.im))
        .expect("formatted floats are valid JSON")
}

/// The register that was read out, in run output.
#[derive(Debug, Serialize)]
pub struct RegisterOutput {
    /// Data register index (0 is the register that meets every program).
    pub index: usize,
    pub column: usize,
    /// `<v| rho |v>` of the reported vector against the column's reduced state.
    pub purity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Box<RawValue>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct RunOutput {
    pub backend: String,
    pub topology: String,
    pub s: usize,
    pub r: usize,
    pub t: usize,
    pub seed: u64,
    pub sampler: String,
    pub register: RegisterOutput,
}

/// One row per line, entries `re,im` separated by single spaces.
pub fn matrix_dump(u: &SmallUnitary<f64>) -> String {
    let mut out = String::new();
    for row in 0..u.dim() {
        let line: Vec<String> = (0..u.dim())
            .map(|col| {
                let a = u.get(row, col);
                format!("{:.16e},{:.16e}", a.re, a.im)
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
