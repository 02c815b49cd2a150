//! Pauli conjugation signs, pair/gate index maps and protocol sign matrices.
//!
//! Rows of every sign matrix are labelled by couplings `(i, j, μ, ν)` through
//! the global index `g = 9(b - 1) + f`, where `b` enumerates qubit pairs and
//! `f` enumerates Pauli pairs. Columns are labelled by gate selections: the
//! Pauli (or identity) applied to each qubit before and after an analog block.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{CouplingKey, PauliAxis};

/// Default cap on `n` for enumerating the full `4^n` selection pool.
pub const DEFAULT_POOL_QUBIT_CAP: usize = 8;

/// Single-qubit gate used in a Pauli sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::I, Gate::X, Gate::Y, Gate::Z];

    pub fn from_axis(axis: PauliAxis) -> Self {
        match axis {
            PauliAxis::X => Gate::X,
            PauliAxis::Y => Gate::Y,
            PauliAxis::Z => Gate::Z,
        }
    }

    pub fn axis(self) -> Option<PauliAxis> {
        match self {
            Gate::I => None,
            Gate::X => Some(PauliAxis::X),
            Gate::Y => Some(PauliAxis::Y),
            Gate::Z => Some(PauliAxis::Z),
        }
    }

    /// Position in the `I, X, Y, Z` order.
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Gate::I => 'I',
            Gate::X => 'X',
            Gate::Y => 'Y',
            Gate::Z => 'Z',
        }
    }
}

/// `+1` if `gate` is the identity or equals `axis`, `-1` otherwise.
pub fn conjugation_sign(gate: Gate, axis: PauliAxis) -> i8 {
    match gate.axis() {
        None => 1,
        Some(a) if a == axis => 1,
        Some(_) => -1,
    }
}

/// Per-qubit gate choice; index 0 is qubit 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateSelection {
    gates: Vec<Gate>,
}

impl GateSelection {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gates: vec![Gate::I; n],
        }
    }

    /// Selection with `a` on qubit `i` and `b` on qubit `j` (1-based).
    pub fn pair(n: usize, i: usize, j: usize, a: Gate, b: Gate) -> Self {
        let mut gates = vec![Gate::I; n];
        gates[i - 1] = a;
        gates[j - 1] = b;
        Self { gates }
    }

    /// Decodes a base-4 number with qubit 1 as the most significant digit.
    pub fn from_code(code: u64, n: usize) -> Self {
        let gates = (0..n)
            .map(|q| Gate::ALL[((code >> (2 * (n - 1 - q))) & 3) as usize])
            .collect();
        Self { gates }
    }

    pub fn code(&self) -> u64 {
        self.gates
            .iter()
            .fold(0u64, |acc, g| acc << 2 | g.code() as u64)
    }

    pub fn n(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate on 1-based qubit `q`.
    pub fn gate(&self, q: usize) -> Gate {
        self.gates[q - 1]
    }

    /// Number of non-identity gates.
    pub fn weight(&self) -> usize {
        self.gates.iter().filter(|g| **g != Gate::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Sign picked up by coupling `key` when the source is sandwiched by `self`.
    pub fn sign_for(&self, key: &CouplingKey) -> i8 {
        conjugation_sign(self.gate(key.i), key.mu) * conjugation_sign(self.gate(key.j), key.nu)
    }
}

impl fmt::Display for GateSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            write!(f, "{}", g.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for GateSelection {
    type Err = DaqcError;

    fn from_str(s: &str) -> Result<Self> {
        let gates = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Gate::I),
                'X' => Ok(Gate::X),
                'Y' => Ok(Gate::Y),
                'Z' => Ok(Gate::Z),
                other => Err(DaqcError::Parse(format!(
                    "invalid gate symbol {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gates })
    }
}

/// Number of qubit pairs, `n(n-1)/2`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Dimension of the general protocol matrix, `9n(n-1)/2`.
pub fn protocol_dimension(n: usize) -> usize {
    9 * pair_count(n)
}

/// `b(i, j, n) = n(i-1) - i(i+1)/2 + j` for `1 <= i < j <= n`.
pub fn pair_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i == 0 || i > n {
        return Err(DaqcError::QubitOutOfRange { index: i, n });
    }
    if j == 0 || j > n {
        return Err(DaqcError::QubitOutOfRange { index: j, n });
    }
    if i >= j {
        return Err(DaqcError::NonCanonicalPair { i, j });
    }
    Ok(n * (i - 1) + j - i * (i + 1) / 2)
}

/// Inverse of [`pair_index`].
pub fn pair_unindex(b: usize, n: usize) -> Result<(usize, usize)> {
    let max = pair_count(n);
    if b == 0 || b > max {
        return Err(DaqcError::PairIndexOutOfRange { b, max });
    }
    let disc = (n * (n - 1) + 2 - 2 * b) as f64;
    let mut i = n - (disc.sqrt() + 0.5).floor() as usize;
    // Guard the floating-point floor against off-by-one at large n.
    while i > 1 && n * (i - 1) - i * (i - 1) / 2 >= b {
        i -= 1;
    }
    while n * i - i * (i + 1) / 2 < b {
        i += 1;
    }
    let j = b + i * (i + 1) / 2 - n * (i - 1);
    Ok((i, j))
}

/// `f(μ, ν) = 3·rank(μ) + rank(ν) + 1`.
pub fn gate_pair_index(mu: PauliAxis, nu: PauliAxis) -> usize {
    3 * mu.rank() + nu.rank() + 1
}

/// Inverse of [`gate_pair_index`].
pub fn gate_pair_unindex(f: usize) -> (PauliAxis, PauliAxis) {
    assert!((1..=9).contains(&f), "gate pair index {f} out of range");
    let r = f - 1;
    (PauliAxis::ALL[r / 3], PauliAxis::ALL[r % 3])
}

/// `g = 9(b - 1) + f`.
pub fn global_index(i: usize, j: usize, mu: PauliAxis, nu: PauliAxis, n: usize) -> Result<usize> {
    Ok(9 * (pair_index(i, j, n)? - 1) + gate_pair_index(mu, nu))
}

/// Coupling labelling global row `g`.
pub fn coupling_for_global(g: usize, n: usize) -> Result<CouplingKey> {
    let max = protocol_dimension(n);
    if g == 0 || g > max {
        return Err(DaqcError::DimensionMismatch {
            expected: max,
            actual: g,
        });
    }
    let (i, j) = pair_unindex((g - 1) / 9 + 1, n)?;
    let (mu, nu) = gate_pair_unindex((g - 1) % 9 + 1);
    Ok(CouplingKey::new(i, j, mu, nu))
}

/// Sign column of `sel` over all `9n(n-1)/2` general-protocol rows.
pub fn column_for_selection(sel: &GateSelection) -> Vec<i8> {
    let n = sel.n();
    let mut col = Vec::with_capacity(protocol_dimension(n));
    for i in 1..=n {
        for j in i + 1..=n {
            let (a, b) = (sel.gate(i), sel.gate(j));
            for mu in PauliAxis::ALL {
                for nu in PauliAxis::ALL {
                    col.push(conjugation_sign(a, mu) * conjugation_sign(b, nu));
                }
            }
        }
    }
    col
}

/// The four 9x9 sub-block patterns of the general protocol matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubBlockKind {
    M2,
    M11,
    M12,
    M0,
}

impl SubBlockKind {
    pub fn label(self) -> &'static str {
        match self {
            SubBlockKind::M2 => "M2",
            SubBlockKind::M11 => "M1.1",
            SubBlockKind::M12 => "M1.2",
            SubBlockKind::M0 => "M0",
        }
    }
}

impl fmt::Display for SubBlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub type Block9 = [[i8; 9]; 9];

const M2: Block9 = [
    [1, -1, -1, -1, 1, 1, -1, 1, 1],
    [-1, 1, -1, 1, -1, 1, 1, -1, 1],
    [-1, -1, 1, 1, 1, -1, 1, 1, -1],
    [-1, 1, 1, 1, -1, -1, -1, 1, 1],
    [1, -1, 1, -1, 1, -1, 1, -1, 1],
    [1, 1, -1, -1, -1, 1, 1, 1, -1],
    [-1, 1, 1, -1, 1, 1, 1, -1, -1],
    [1, -1, 1, 1, -1, 1, -1, 1, -1],
    [1, 1, -1, 1, 1, -1, -1, -1, 1],
];

const M11: Block9 = [
    [1, 1, 1, -1, -1, -1, -1, -1, -1],
    [1, 1, 1, -1, -1, -1, -1, -1, -1],
    [1, 1, 1, -1, -1, -1, -1, -1, -1],
    [-1, -1, -1, 1, 1, 1, -1, -1, -1],
    [-1, -1, -1, 1, 1, 1, -1, -1, -1],
    [-1, -1, -1, 1, 1, 1, -1, -1, -1],
    [-1, -1, -1, -1, -1, -1, 1, 1, 1],
    [-1, -1, -1, -1, -1, -1, 1, 1, 1],
    [-1, -1, -1, -1, -1, -1, 1, 1, 1],
];

const M12: Block9 = [
    [1, -1, -1, 1, -1, -1, 1, -1, -1],
    [-1, 1, -1, -1, 1, -1, -1, 1, -1],
    [-1, -1, 1, -1, -1, 1, -1, -1, 1],
    [1, -1, -1, 1, -1, -1, 1, -1, -1],
    [-1, 1, -1, -1, 1, -1, -1, 1, -1],
    [-1, -1, 1, -1, -1, 1, -1, -1, 1],
    [1, -1, -1, 1, -1, -1, 1, -1, -1],
    [-1, 1, -1, -1, 1, -1, -1, 1, -1],
    [-1, -1, 1, -1, -1, 1, -1, -1, 1],
];

const M0: Block9 = [[1; 9]; 9];

/// The literal 9x9 sub-block for `kind`.
pub fn subblock(kind: SubBlockKind) -> Block9 {
    match kind {
        SubBlockKind::M2 => M2,
        SubBlockKind::M11 => M11,
        SubBlockKind::M12 => M12,
        SubBlockKind::M0 => M0,
    }
}

type Wide9 = [[i64; 9]; 9];

fn widen(a: &Block9) -> Wide9 {
    a.map(|row| row.map(i64::from))
}

fn product(a: &Wide9, b: &Wide9) -> Wide9 {
    let mut out = [[0i64; 9]; 9];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..9).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn scaled(a: &Wide9, s: i64) -> Wide9 {
    a.map(|row| row.map(|v| s * v))
}

/// The sub-block product identities, each checked in integer arithmetic:
/// pairwise commutation, `M11 M12 = M2 M0 = M0`, `M11 M0 = M12 M0 = -3 M0`,
/// `M0² = 9 M0`, `M11² = -3 M2 M11` and `M12² = -3 M2 M12`.
pub fn subblock_identities() -> [(&'static str, bool); 6] {
    let [m2, m11, m12, m0] = [M2, M11, M12, M0].map(|b| widen(&b));
    let all = [m2, m11, m12, m0];
    let commute = all
        .iter()
        .all(|a| all.iter().all(|b| product(a, b) == product(b, a)));
    [
        ("pairwise commutation", commute),
        (
            "M11 M12 = M2 M0 = M0",
            product(&m11, &m12) == m0 && product(&m2, &m0) == m0,
        ),
        (
            "M11 M0 = M12 M0 = -3 M0",
            product(&m11, &m0) == scaled(&m0, -3) && product(&m12, &m0) == scaled(&m0, -3),
        ),
        ("M0 M0 = 9 M0", product(&m0, &m0) == scaled(&m0, 9)),
        (
            "M11 M11 = -3 M2 M11",
            product(&m11, &m11) == scaled(&product(&m2, &m11), -3),
        ),
        (
            "M12 M12 = -3 M2 M12",
            product(&m12, &m12) == scaled(&product(&m2, &m12), -3),
        ),
    ]
}

/// Which qubit of the column pair carries the gate that touches the row pair.
///
/// `Aligned` means the shared qubit sits in the same slot of both pairs
/// (first/first or second/second); `Crossed` means it is first in one pair
/// and second in the other. A crossed block equals the literal sub-block with
/// its gate-pair columns transposed (`ab -> ba`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Aligned,
    Crossed,
}

/// Sub-block kind of block `(I, J)`: the coupling pair `I` against the gate pair `J`.
pub fn subblock_kind_for(big_i: usize, big_j: usize, n: usize) -> Result<SubBlockKind> {
    Ok(block_shape(big_i, big_j, n)?.0)
}

/// Kind and orientation of block `(I, J)`.
pub fn block_shape(big_i: usize, big_j: usize, n: usize) -> Result<(SubBlockKind, Orientation)> {
    let (ii, ji) = pair_unindex(big_i, n)?;
    let (ij, jj) = pair_unindex(big_j, n)?;
    Ok(if big_i == big_j {
        (SubBlockKind::M2, Orientation::Aligned)
    } else if ii == ij {
        (SubBlockKind::M11, Orientation::Aligned)
    } else if ii == jj {
        (SubBlockKind::M11, Orientation::Crossed)
    } else if ji == jj {
        (SubBlockKind::M12, Orientation::Aligned)
    } else if ji == ij {
        (SubBlockKind::M12, Orientation::Crossed)
    } else {
        (SubBlockKind::M0, Orientation::Aligned)
    })
}

/// Literal sub-block with the requested column orientation applied.
pub fn oriented_subblock(kind: SubBlockKind, orientation: Orientation) -> Block9 {
    let base = subblock(kind);
    match orientation {
        Orientation::Aligned => base,
        Orientation::Crossed => {
            let mut out = [[0i8; 9]; 9];
            for (r, row) in base.iter().enumerate() {
                for c in 0..9 {
                    let swapped = (c % 3) * 3 + c / 3;
                    out[r][c] = row[swapped];
                }
            }
            out
        }
    }
}

/// Sub-block kind layout of `M(n)`, indexed `[I-1][J-1]`.
pub fn block_layout(n: usize) -> Result<Vec<Vec<SubBlockKind>>> {
    let p = pair_count(n);
    (1..=p)
        .map(|bi| (1..=p).map(|bj| subblock_kind_for(bi, bj, n)).collect())
        .collect()
}

/// Sandwich protocol a sign matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Pauli pairs on every qubit pair; `9n(n-1)/2` columns.
    General,
    /// X pairs only, acting on ZZ couplings; `n(n-1)/2` columns.
    Zz,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::General => "general",
            Protocol::Zz => "zz",
        }
    }

    pub fn matrix(self, n: usize) -> Result<SignMatrix> {
        match self {
            Protocol::General => build_protocol_matrix(n),
            Protocol::Zz => zz_matrix(n),
        }
    }
}

impl FromStr for Protocol {
    type Err = DaqcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Protocol::General),
            "zz" => Ok(Protocol::Zz),
            other => Err(DaqcError::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

/// A `±1` matrix whose rows are couplings and whose columns are gate selections.
#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrix {
    pub n: usize,
    pub protocol: Protocol,
    pub entries: DMatrix<i8>,
    /// Global index `g` of each row.
    pub row_globals: Vec<usize>,
    pub column_gates: Vec<GateSelection>,
}

impl SignMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.map(f64::from)
    }

    /// Rows whose global index appears in `globals`, in the order given.
    pub fn restrict_rows(&self, globals: &[usize]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::<f64>::zeros(globals.len(), self.ncols());
        for (r, g) in globals.iter().enumerate() {
            let src = self
                .row_globals
                .iter()
                .position(|x| x == g)
                .ok_or_else(|| match coupling_for_global(*g, self.n) {
                    Ok(key) => DaqcError::ProtocolMismatch {
                        protocol: self.protocol.name(),
                        key,
                    },
                    Err(e) => e,
                })?;
            for c in 0..self.ncols() {
                out[(r, c)] = f64::from(self.entries[(src, c)]);
            }
        }
        Ok(out)
    }
}

/// General protocol matrix built column by column from gate selections.
///
/// Column `9(J-1) + f(a, b)` applies gate `a` to qubit `i(J)` and gate `b` to
/// qubit `j(J)`.
pub fn build_protocol_matrix(n: usize) -> Result<SignMatrix> {
    if n < 2 {
        return Err(DaqcError::TooFewQubits(n));
    }
    let dim = protocol_dimension(n);
    let column_gates = protocol_columns(n);
    let mut entries = DMatrix::<i8>::zeros(dim, dim);
    for (c, sel) in column_gates.iter().enumerate() {
        for (r, s) in column_for_selection(sel).into_iter().enumerate() {
            entries[(r, c)] = s;
        }
    }
    Ok(SignMatrix {
        n,
        protocol: Protocol::General,
        entries,
        row_globals: (1..=dim).collect(),
        column_gates,
    })
}

/// Gate selections of the general protocol, in column order.
pub fn protocol_columns(n: usize) -> Vec<GateSelection> {
    let mut cols = Vec::with_capacity(protocol_dimension(n));
    for i in 1..=n {
        for j in i + 1..=n {
            for a in PauliAxis::ALL {
                for b in PauliAxis::ALL {
                    cols.push(GateSelection::pair(
                        n,
                        i,
                        j,
                        Gate::from_axis(a),
                        Gate::from_axis(b),
                    ));
                }
            }
        }
    }
    cols
}

/// General protocol matrix assembled recursively from sub-blocks:
/// `M(n) = [[A(n), P(n)], [Q(n), M(n-1)]]`, with `M(n-1)` acting on qubits `2..n`.
pub fn build_protocol_matrix_recursive(n: usize) -> Result<DMatrix<i8>> {
    if n < 2 {
        return Err(DaqcError::TooFewQubits(n));
    }
    let mut m = DMatrix::<i8>::zeros(9, 9);
    write_block(&mut m, 0, 0, &M2);
    for k in 3..=n {
        m = grow_recursive(&m, k);
    }
    Ok(m)
}

fn write_block(m: &mut DMatrix<i8>, bi: usize, bj: usize, block: &Block9) {
    for (r, row) in block.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(9 * bi + r, 9 * bj + c)] = *v;
        }
    }
}

/// One recursion step: embeds `M(k-1)` (on qubits `2..k`) into `M(k)`.
fn grow_recursive(prev: &DMatrix<i8>, k: usize) -> DMatrix<i8> {
    let head = k - 1; // pairs (1, j), j = 2..k
    let p = pair_count(k);
    let mut m = DMatrix::<i8>::zeros(9 * p, 9 * p);
    m.view_mut((9 * head, 9 * head), (prev.nrows(), prev.ncols()))
        .copy_from(prev);

    // A(k): pairs sharing qubit 1 in the first slot.
    for r in 0..head {
        for c in 0..head {
            let kind = if r == c {
                SubBlockKind::M2
            } else {
                SubBlockKind::M11
            };
            write_block(&mut m, r, c, &subblock(kind));
        }
    }
    // Tail pairs (i, j) with 2 <= i < j <= k, in pair-index order.
    let tail: Vec<(usize, usize)> = (2..=k)
        .flat_map(|i| (i + 1..=k).map(move |j| (i, j)))
        .collect();
    // P(k): rows (1, j), columns (l, m) with l >= 2.
    for r in 0..head {
        let j = r + 2;
        for (c, &(l, mm)) in tail.iter().enumerate() {
            let block = if j == mm {
                oriented_subblock(SubBlockKind::M12, Orientation::Aligned)
            } else if j == l {
                oriented_subblock(SubBlockKind::M12, Orientation::Crossed)
            } else {
                M0
            };
            write_block(&mut m, r, head + c, &block);
        }
    }
    // Q(k): rows (i, j) with i >= 2, columns (1, l).
    for (r, &(i, j)) in tail.iter().enumerate() {
        for c in 0..head {
            let l = c + 2;
            let block = if i == l {
                oriented_subblock(SubBlockKind::M11, Orientation::Crossed)
            } else if j == l {
                oriented_subblock(SubBlockKind::M12, Orientation::Aligned)
            } else {
                M0
            };
            write_block(&mut m, head + r, c, &block);
        }
    }
    m
}

/// ZZ-protocol matrix: entry `(-1)^{δ_il + δ_im + δ_jl + δ_jm}` for coupling
/// `(i, j)` against an X sandwich on pair `(l, m)`.
pub fn zz_matrix(n: usize) -> Result<SignMatrix> {
    if n < 2 {
        return Err(DaqcError::TooFewQubits(n));
    }
    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .collect();
    let p = pairs.len();
    let entries = DMatrix::from_fn(p, p, |r, c| {
        let (i, j) = pairs[r];
        let (l, m) = pairs[c];
        let hits = [i == l, i == m, j == l, j == m]
            .iter()
            .filter(|h| **h)
            .count();
        if hits % 2 == 0 {
            1
        } else {
            -1
        }
    });
    let row_globals = pairs
        .iter()
        .map(|&(i, j)| global_index(i, j, PauliAxis::Z, PauliAxis::Z, n).expect("valid pair"))
        .collect();
    let column_gates = pairs
        .iter()
        .map(|&(l, m)| GateSelection::pair(n, l, m, Gate::X, Gate::X))
        .collect();
    Ok(SignMatrix {
        n,
        protocol: Protocol::Zz,
        entries,
        row_globals,
        column_gates,
    })
}

/// Smallest singular value of a square real matrix.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Singular-value threshold below which a square matrix is treated as singular.
pub fn singularity_threshold(dim: usize) -> f64 {
    1e-8 * dim as f64
}

/// True when the smallest singular value exceeds `1e-8 × dimension`.
pub fn is_nonsingular(m: &DMatrix<f64>) -> bool {
    m.is_square() && min_singular_value(m) > singularity_threshold(m.nrows())
}

/// Numerical rank with the same threshold as [`is_nonsingular`].
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let tol = singularity_threshold(m.nrows().max(m.ncols()));
    m.clone()
        .singular_values()
        .iter()
        .filter(|s| **s > tol)
        .count()
}

/// Rank of an integer matrix over the field `Z/pZ`, `p = 2^61 - 1`.
///
/// Every minor that vanishes over the integers vanishes mod `p`, so this is a
/// lower bound on the rational rank; full rank mod `p` certifies
/// non-singularity exactly.
pub fn rank_mod_p(m: &DMatrix<i8>) -> usize {
    const P: u64 = (1 << 61) - 1;
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % P as u128) as u64;
    let pow = |mut base: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        acc
    };
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<u64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let v = m[(r, c)] as i64;
                    v.rem_euclid(P as i64) as u64
                })
                .collect()
        })
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, pivot);
        let inv = pow(a[rank][c], P - 2);
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let factor = mul(a[r][c], inv);
                for k in c..cols {
                    let sub = mul(factor, a[rank][k]);
                    a[r][k] = (a[r][k] + P - sub) % P;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Number of selections in the full pool, `4^n`.
pub fn pool_size(n: usize) -> u64 {
    1u64 << (2 * n)
}

/// Lazily enumerates all `4^n` gate selections in solver order: the identity,
/// then the general-protocol columns, then every other selection in
/// lexicographic `I < X < Y < Z` order with qubit 1 most significant.
pub fn selection_pool(n: usize) -> impl Iterator<Item = GateSelection> {
    let identity = std::iter::once(GateSelection::identity(n));
    let protocol = protocol_columns(n).into_iter();
    let rest = (0..pool_size(n))
        .map(move |code| GateSelection::from_code(code, n))
        .filter(|s| !matches!(s.weight(), 0 | 2));
    identity.chain(protocol).chain(rest)
}

/// Entrywise sum of all `4^n` pool columns.
pub fn pool_column_sum(n: usize) -> Vec<i64> {
    let mut sum = vec![0i64; protocol_dimension(n)];
    for sel in selection_pool(n) {
        for (acc, v) in sum.iter_mut().zip(column_for_selection(&sel)) {
            *acc += i64::from(v);
        }
    }
    sum
}
