//! Lattice geometry: sites, columns and the alternating Margolus partition.
//!
//! The lattice has `2r` columns of `2s` qubits each. Site `(x, y)` (column
//! `x`, row `y`) is stored at bit `x * 2s + y` of the amplitude index, so a
//! column is a contiguous group of `2s` bits with row 0 least significant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Planar,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Torus => "torus",
            Topology::Planar => "planar",
        })
    }
}

impl std::str::FromStr for Topology {
    type Err = QcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Topology::Torus),
            "planar" => Ok(Topology::Planar),
            other => Err(QcaError::Parse(format!("unknown topology {other:?}"))),
        }
    }
}

/// How the two-site remainder cells of an odd step on a planar sheet act.
///
/// Horizontal remainders lie on the top and bottom rows and pair two columns;
/// vertical remainders lie on the first and last column and pair two rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Remainders {
    /// Horizontal remainders swap, vertical remainders idle.
    #[default]
    SwapHorizontal,
    /// Vertical remainders swap, horizontal remainders idle.
    SwapVertical,
}

impl fmt::Display for Remainders {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Remainders::SwapHorizontal => "swap-horizontal",
            Remainders::SwapVertical => "swap-vertical",
        })
    }
}

/// Dimensions of a `2s x 2r` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    s: usize,
    r: usize,
    topology: Topology,
    #[serde(default)]
    remainders: Remainders,
}

impl LatticeSpec {
    /// Requires `s >= 1` and `r >= 2`.
    pub fn new(s: usize, r: usize, topology: Topology) -> Result<Self> {
        if s == 0 {
            return Err(QcaError::InvalidLattice("s must be at least 1".into()));
        }
        if r < 2 {
            return Err(QcaError::InvalidLattice(format!(
                "r must be at least 2, got {r}"
            )));
        }
        Ok(Self {
            s,
            r,
            topology,
            remainders: Remainders::default(),
        })
    }

    pub fn torus(s: usize, r: usize) -> Result<Self> {
        Self::new(s, r, Topology::Torus)
    }

    pub fn planar(s: usize, r: usize) -> Result<Self> {
        Self::new(s, r, Topology::Planar)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Qubits per column, `2s`.
    pub fn height(&self) -> usize {
        2 * self.s
    }

    /// Number of columns, `2r`.
    pub fn width(&self) -> usize {
        2 * self.r
    }

    pub fn num_qubits(&self) -> usize {
        4 * self.s * self.r
    }

    pub fn with_topology(self, topology: Topology) -> Self {
        Self { topology, ..self }
    }

    /// Remainder-cell rule; only affects odd steps on a planar sheet.
    pub fn remainders(&self) -> Remainders {
        self.remainders
    }

    pub fn with_remainders(self, remainders: Remainders) -> Self {
        Self { remainders, ..self }
    }
}

/// A lattice site, column `x` and row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Bit position of site `(x, y)` in the amplitude index.
pub fn site_index(x: usize, y: usize, spec: &LatticeSpec) -> Result<usize> {
    if x >= spec.width() {
        return Err(QcaError::OutOfRange {
            what: "column",
            value: x,
            bound: spec.width(),
        });
    }
    if y >= spec.height() {
        return Err(QcaError::OutOfRange {
            what: "row",
            value: y,
            bound: spec.height(),
        });
    }
    Ok(x * spec.height() + y)
}

/// A 2x2 cell: left column `column`, cell-row `row` (upper row `[2*row + parity] mod 2s`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellAddress {
    pub column: usize,
    pub row: usize,
    pub parity: u8,
}

impl CellAddress {
    pub fn new(column: usize, row: usize, parity: u8) -> Self {
        Self {
            column,
            row,
            parity: parity & 1,
        }
    }
}

/// Upper and lower row of cell-row `j` at the given parity, wrapping mod `2s`.
pub fn cell_rows(j: usize, parity: u8, height: usize) -> (usize, usize) {
    let a = (2 * j + parity as usize) % height;
    (a, (a + 1) % height)
}

/// Sites of a full cell as `[q1, q2, q3, q4]`: q1/q2 are the upper/lower
/// sites of the left (data) column, q3/q4 those of the right (program) column.
pub fn cell_sites(addr: CellAddress, spec: &LatticeSpec) -> Result<[Site; 4]> {
    let (w, h) = (spec.width(), spec.height());
    if addr.column >= w {
        return Err(QcaError::OutOfRange {
            what: "column",
            value: addr.column,
            bound: w,
        });
    }
    if addr.row >= spec.s() {
        return Err(QcaError::OutOfRange {
            what: "cell row",
            value: addr.row,
            bound: spec.s(),
        });
    }
    if addr.column % 2 != addr.parity as usize {
        return Err(QcaError::Contract(format!(
            "cell column {} does not match step parity {}",
            addr.column, addr.parity
        )));
    }
    let a = 2 * addr.row + addr.parity as usize;
    if spec.topology() == Topology::Planar && (a + 1 >= h || addr.column + 1 >= w) {
        return Err(QcaError::Contract(format!(
            "cell at column {} row {a} is not inside the planar sheet",
            addr.column
        )));
    }
    let (a, b) = cell_rows(addr.row, addr.parity, h);
    let (left, right) = (addr.column, (addr.column + 1) % w);
    Ok([
        Site::new(left, a),
        Site::new(left, b),
        Site::new(right, a),
        Site::new(right, b),
    ])
}

/// One block of a step's partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    /// A 2x2 cell acted on by the transition unitary.
    Full { addr: CellAddress, sites: [Site; 4] },
    /// A two-site boundary cell acted on by SWAP.
    Swap([Site; 2]),
    /// A boundary cell left unchanged.
    Identity(Vec<Site>),
}

impl Cell {
    pub fn sites(&self) -> &[Site] {
        match self {
            Cell::Full { sites, .. } => sites,
            Cell::Swap(sites) => sites,
            Cell::Identity(sites) => sites,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub parity: u8,
    pub cells: Vec<Cell>,
}

impl Partition {
    pub fn full_cells(&self) -> impl Iterator<Item = (&CellAddress, &[Site; 4])> {
        self.cells.iter().filter_map(|c| match c {
            Cell::Full { addr, sites } => Some((addr, sites)),
            _ => None,
        })
    }
}

/// The partition applied by the transition from time `t` to `t + 1`.
pub fn cells_of_step(t: usize, spec: &LatticeSpec) -> Partition {
    let parity = (t % 2) as u8;
    let cells = match (spec.topology(), parity) {
        (Topology::Torus, _) | (Topology::Planar, 0) => full_tiling(parity, spec),
        (Topology::Planar, _) => planar_odd(spec),
    };
    Partition { parity, cells }
}

fn full_cell(column: usize, row: usize, parity: u8, spec: &LatticeSpec) -> Cell {
    let addr = CellAddress::new(column, row, parity);
    let sites = cell_sites(addr, spec).expect("partition cell is valid by construction");
    Cell::Full { addr, sites }
}

fn full_tiling(parity: u8, spec: &LatticeSpec) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(spec.s() * spec.r());
    for i in (parity as usize..spec.width()).step_by(2) {
        for j in 0..spec.s() {
            cells.push(full_cell(i, j, parity, spec));
        }
    }
    cells
}

fn planar_odd(spec: &LatticeSpec) -> Vec<Cell> {
    let (w, h) = (spec.width(), spec.height());
    let (last_x, last_y) = (w - 1, h - 1);
    let mut cells = Vec::new();

    for i in (1..last_x).step_by(2) {
        for a in (1..last_y).step_by(2) {
            cells.push(full_cell(i, (a - 1) / 2, 1, spec));
        }
    }
    let swap_horizontal = spec.remainders() == Remainders::SwapHorizontal;
    let pair = |sites: [Site; 2], swap: bool| {
        if swap {
            Cell::Swap(sites)
        } else {
            Cell::Identity(sites.to_vec())
        }
    };
    for i in (1..last_x).step_by(2) {
        for y in [0, last_y] {
            cells.push(pair(
                [Site::new(i, y), Site::new(i + 1, y)],
                swap_horizontal,
            ));
        }
    }
    for x in [0, last_x] {
        for a in (1..last_y).step_by(2) {
            cells.push(pair(
                [Site::new(x, a), Site::new(x, a + 1)],
                !swap_horizontal,
            ));
        }
    }
    for x in [0, last_x] {
        for y in [0, last_y] {
            cells.push(Cell::Identity(vec![Site::new(x, y)]));
        }
    }
    cells
}
