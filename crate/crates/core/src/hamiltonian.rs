//! Two-body Hamiltonians on `n` qubits.
//!
//! A [`TwoBodyHamiltonian`] stores the coupling tensor `h_{ij}^{μν}` as a
//! sparse map keyed by `(i, j, μ, ν)` with `1 <= i < j <= n`. Qubit indices
//! are 1-based everywhere in the public API and qubit 1 is the leftmost
//! tensor factor of every dense matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DaqcError, Result};
use crate::signmatrix;

/// Default cap on the qubit count for dense `2^n x 2^n` matrices.
pub const DEFAULT_DENSE_QUBIT_CAP: usize = 10;

/// Pauli axis label, ordered `x < y < z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// Position in the `x, y, z` order (0-based).
    pub fn rank(self) -> usize {
        match self {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
            PauliAxis::Z => 2,
        }
    }

    pub fn from_rank(rank: usize) -> Option<Self> {
        Self::ALL.get(rank).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }

    /// Action on a computational basis bit: `σ|b> = factor |b ^ flip>`.
    pub(crate) fn act_on_bit(self, bit: bool) -> (bool, Complex64) {
        match (self, bit) {
            (PauliAxis::X, _) => (true, Complex64::new(1.0, 0.0)),
            (PauliAxis::Y, false) => (true, Complex64::new(0.0, 1.0)),
            (PauliAxis::Y, true) => (true, Complex64::new(0.0, -1.0)),
            (PauliAxis::Z, false) => (false, Complex64::new(1.0, 0.0)),
            (PauliAxis::Z, true) => (false, Complex64::new(-1.0, 0.0)),
        }
    }

    /// The 2x2 Pauli matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliAxis::X => [[o, l], [l, o]],
            PauliAxis::Y => [[o, -i], [i, o]],
            PauliAxis::Z => [[l, o], [o, -l]],
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for PauliAxis {
    type Err = DaqcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(PauliAxis::X),
            "y" | "Y" => Ok(PauliAxis::Y),
            "z" | "Z" => Ok(PauliAxis::Z),
            other => Err(DaqcError::Parse(format!("unknown Pauli axis {other:?}"))),
        }
    }
}

/// Coupling label `(i, j, μ, ν)` with 1-based qubits and `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CouplingKey {
    pub i: usize,
    pub j: usize,
    pub mu: PauliAxis,
    pub nu: PauliAxis,
}

impl CouplingKey {
    pub fn new(i: usize, j: usize, mu: PauliAxis, nu: PauliAxis) -> Self {
        Self { i, j, mu, nu }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for index in [self.i, self.j] {
            if index == 0 || index > n {
                return Err(DaqcError::QubitOutOfRange { index, n });
            }
        }
        if self.i >= self.j {
            return Err(DaqcError::NonCanonicalPair {
                i: self.i,
                j: self.j,
            });
        }
        Ok(())
    }
}

impl fmt::Display for CouplingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.i, self.j, self.mu, self.nu)
    }
}

/// `H = Σ_{i<j} Σ_{μν} h_{ij}^{μν} σ^μ_i σ^ν_j`.
///
/// Absent keys are exactly zero; explicit zero strengths are dropped on
/// insertion so two Hamiltonians compare equal iff their nonzero couplings do.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyHamiltonian {
    n: usize,
    couplings: BTreeMap<CouplingKey, f64>,
}

impl TwoBodyHamiltonian {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(DaqcError::TooFewQubits(n));
        }
        Ok(Self {
            n,
            couplings: BTreeMap::new(),
        })
    }

    /// Builds from `(key, strength)` pairs, rejecting duplicates.
    pub fn from_couplings<I>(n: usize, couplings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CouplingKey, f64)>,
    {
        let mut h = Self::new(n)?;
        for (key, strength) in couplings {
            key.validate(n)?;
            if !strength.is_finite() {
                return Err(DaqcError::NonFiniteStrength(key));
            }
            if h.couplings.contains_key(&key) {
                return Err(DaqcError::DuplicateCoupling(key));
            }
            // Duplicate detection has to see zero entries too.
            h.couplings.insert(key, strength);
        }
        h.couplings.retain(|_, v| *v != 0.0);
        Ok(h)
    }

    /// Sets one coupling, overwriting any previous value.
    pub fn set(&mut self, key: CouplingKey, strength: f64) -> Result<()> {
        key.validate(self.n)?;
        if !strength.is_finite() {
            return Err(DaqcError::NonFiniteStrength(key));
        }
        if strength == 0.0 {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, strength);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, key: &CouplingKey) -> f64 {
        self.couplings.get(key).copied().unwrap_or(0.0)
    }

    /// Nonzero couplings in canonical `(i, j, μ, ν)` order.
    pub fn couplings(&self) -> impl Iterator<Item = (&CouplingKey, &f64)> {
        self.couplings.iter()
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let couplings = self
            .couplings
            .iter()
            .map(|(k, v)| (*k, v * factor))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        Self {
            n: self.n,
            couplings,
        }
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(DaqcError::QubitCountMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut out = self.scaled(a);
        for (k, v) in &other.couplings {
            let s = out.get(k) + b * v;
            out.set(*k, s)?;
        }
        Ok(out)
    }

    /// Returns a copy with every strength multiplied by `sign(key)`.
    pub(crate) fn map_strengths(&self, mut f: impl FnMut(&CouplingKey, f64) -> f64) -> Self {
        let couplings = self
            .couplings
            .iter()
            .map(|(k, v)| (*k, f(k, *v)))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        Self {
            n: self.n,
            couplings,
        }
    }

    /// Largest and smallest absolute strength.
    pub fn strength_range(&self) -> Option<(f64, f64)> {
        self.couplings
            .values()
            .map(|v| v.abs())
            .fold(None, |acc, a| match acc {
                None => Some((a, a)),
                Some((lo, hi)) => Some((lo.min(a), hi.max(a))),
            })
    }

    /// Restriction to the couplings acting on pair `(i, j)`.
    pub fn pair_terms(&self, i: usize, j: usize) -> impl Iterator<Item = (&CouplingKey, &f64)> {
        self.couplings
            .iter()
            .filter(move |(k, _)| k.i == i && k.j == j)
    }

    /// Qubit pairs that carry at least one nonzero coupling, ascending.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self.couplings.keys().map(|k| (k.i, k.j)).collect();
        pairs.dedup();
        pairs
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: HamiltonianFile =
            toml::from_str(text).map_err(|e| DaqcError::Parse(e.to_string()))?;
        let mut records = Vec::with_capacity(file.coupling.len());
        for r in file.coupling {
            let mu: PauliAxis = r.mu.parse()?;
            let nu: PauliAxis = r.nu.parse()?;
            records.push((CouplingKey::new(r.i, r.j, mu, nu), r.strength));
        }
        Self::from_couplings(file.n, records)
    }

    /// Canonical textual form; [`TwoBodyHamiltonian::parse`] inverts it exactly.
    pub fn to_toml_string(&self) -> String {
        let file = HamiltonianFile {
            n: self.n,
            coupling: self
                .couplings
                .iter()
                .map(|(k, v)| CouplingRecord {
                    i: k.i,
                    j: k.j,
                    mu: k.mu.to_string(),
                    nu: k.nu.to_string(),
                    strength: *v,
                })
                .collect(),
        };
        toml::to_string(&file).expect("Hamiltonian records always serialize")
    }

    /// Short content hash of the canonical form.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Dense `2^n x 2^n` matrix with the default qubit cap.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        self.dense_matrix_capped(DEFAULT_DENSE_QUBIT_CAP)
    }

    pub fn dense_matrix_capped(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        if self.n > cap {
            return Err(DaqcError::QubitCapExceeded { n: self.n, cap });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (key, &strength) in &self.couplings {
            let bi = self.n - key.i;
            let bj = self.n - key.j;
            for col in 0..dim {
                let (fi, ai) = key.mu.act_on_bit(col >> bi & 1 == 1);
                let (fj, aj) = key.nu.act_on_bit(col >> bj & 1 == 1);
                let row = col ^ ((fi as usize) << bi) ^ ((fj as usize) << bj);
                m[(row, col)] += ai * aj * strength;
            }
        }
        Ok(m)
    }

    /// Frobenius norm of the dense matrix, from the coupling strengths.
    ///
    /// Distinct two-body Pauli strings are trace-orthogonal, so
    /// `||H||_F^2 = 2^n Σ h^2`.
    pub fn frobenius_norm(&self) -> f64 {
        let sum_sq: f64 = self.couplings.values().map(|v| v * v).sum();
        ((1u64 << self.n) as f64 * sum_sq).sqrt()
    }
}

/// `sqrt(Σ |a_ij|^2)`.
pub fn frobenius_norm(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianFile {
    n: usize,
    #[serde(default)]
    coupling: Vec<CouplingRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingRecord {
    i: usize,
    j: usize,
    mu: String,
    nu: String,
    strength: f64,
}

/// Right-hand side `T·g/h` of the block-time system, on active rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    /// 1-based global row indices, ascending.
    pub active_rows: Vec<usize>,
    pub entries: Vec<f64>,
}

impl CouplingVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Builds `T·g/h` over the rows with nonzero source coupling.
///
/// Rows where both couplings vanish are dropped; a nonzero target coupling
/// without a source counterpart is unsimulable.
pub fn ratio_vector(
    target: &TwoBodyHamiltonian,
    source: &TwoBodyHamiltonian,
    total_time: f64,
) -> Result<CouplingVector> {
    if target.n() != source.n() {
        return Err(DaqcError::QubitCountMismatch {
            left: target.n(),
            right: source.n(),
        });
    }
    if let Some((key, _)) = target.couplings().find(|(k, _)| source.get(k) == 0.0) {
        return Err(DaqcError::Unsimulable(*key));
    }
    let n = source.n();
    let mut rows: Vec<(usize, f64)> = source
        .couplings()
        .map(|(k, h)| {
            let g = signmatrix::global_index(k.i, k.j, k.mu, k.nu, n)
                .expect("validated coupling keys index the sign matrix");
            (g, total_time * target.get(k) / h)
        })
        .collect();
    rows.sort_by_key(|(g, _)| *g);
    Ok(CouplingVector {
        active_rows: rows.iter().map(|(g, _)| *g).collect(),
        entries: rows.iter().map(|(_, v)| *v).collect(),
    })
}

/// `g Σ_i (σ^x_i σ^x_{i+1} + σ^y_i σ^y_{i+1})`, the nearest-neighbour XY chain.
pub fn xy_chain(n: usize, g: f64) -> Result<TwoBodyHamiltonian> {
    let mut terms = Vec::new();
    for i in 1..n {
        terms.push((CouplingKey::new(i, i + 1, PauliAxis::X, PauliAxis::X), g));
        terms.push((CouplingKey::new(i, i + 1, PauliAxis::Y, PauliAxis::Y), g));
    }
    TwoBodyHamiltonian::from_couplings(n, terms)
}

/// Nearest-neighbour `h^{xz} XZ + h^{zx} ZX + h^{zz} ZZ` chain.
///
/// `links[i]` holds `(h^{xz}, h^{zx}, h^{zz})` for the pair `(i+1, i+2)`.
pub fn cross_resonance_chain(n: usize, links: &[[f64; 3]]) -> Result<TwoBodyHamiltonian> {
    if links.len() + 1 != n {
        return Err(DaqcError::DimensionMismatch {
            expected: n.saturating_sub(1),
            actual: links.len(),
        });
    }
    let mut terms = Vec::new();
    for (idx, [xz, zx, zz]) in links.iter().enumerate() {
        let i = idx + 1;
        terms.push((CouplingKey::new(i, i + 1, PauliAxis::X, PauliAxis::Z), *xz));
        terms.push((CouplingKey::new(i, i + 1, PauliAxis::Z, PauliAxis::X), *zx));
        terms.push((CouplingKey::new(i, i + 1, PauliAxis::Z, PauliAxis::Z), *zz));
    }
    TwoBodyHamiltonian::from_couplings(n, terms)
}

/// Cross-resonance chain with every strength equal to `h`.
pub fn homogeneous_cross_resonance(n: usize, h: f64) -> Result<TwoBodyHamiltonian> {
    cross_resonance_chain(n, &vec![[h; 3]; n.saturating_sub(1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parse_empty_file() {
        let h = TwoBodyHamiltonian::parse("n = 2\n").unwrap();
        assert_eq!(h.n(), 2);
        assert!(h.is_empty());
    }

    #[test]
    fn parse_xy_chain() {
        let text = r#"
            n = 3
            [[coupling]]
            i = 1
            j = 2
            mu = "x"
            nu = "x"
            strength = 1.0
            [[coupling]]
            i = 1
            j = 2
            mu = "y"
            nu = "y"
            strength = 1.0
            [[coupling]]
            i = 2
            j = 3
            mu = "x"
            nu = "x"
            strength = 1.0
            [[coupling]]
            i = 2
            j = 3
            mu = "y"
            nu = "y"
            strength = 1.0
        "#;
        let h = TwoBodyHamiltonian::parse(text).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h, xy_chain(3, 1.0).unwrap());
        assert_eq!(
            h.get(&CouplingKey::new(2, 3, PauliAxis::Y, PauliAxis::Y)),
            1.0
        );
    }

    #[test]
    fn parse_rejects_reversed_pair() {
        let text = "n = 3\n[[coupling]]\ni = 3\nj = 1\nmu = \"x\"\nnu = \"x\"\nstrength = 1.0\n";
        assert!(matches!(
            TwoBodyHamiltonian::parse(text),
            Err(DaqcError::NonCanonicalPair { i: 3, j: 1 })
        ));
    }

    #[test]
    fn parse_rejects_bad_records() {
        let rec = |i: usize, j: usize, s: &str| {
            format!(
                "n = 3\n[[coupling]]\ni = {i}\nj = {j}\nmu = \"z\"\nnu = \"z\"\nstrength = {s}\n"
            )
        };
        assert!(matches!(
            TwoBodyHamiltonian::parse(&rec(1, 4, "1.0")),
            Err(DaqcError::QubitOutOfRange { index: 4, n: 3 })
        ));
        assert!(matches!(
            TwoBodyHamiltonian::parse(&rec(1, 2, "nan")),
            Err(DaqcError::NonFiniteStrength(_))
        ));
        let dup = format!(
            "{}{}",
            rec(1, 2, "1.0"),
            "[[coupling]]\ni = 1\nj = 2\nmu = \"z\"\nnu = \"z\"\nstrength = 0.0\n"
        );
        assert!(matches!(
            TwoBodyHamiltonian::parse(&dup),
            Err(DaqcError::DuplicateCoupling(_))
        ));
        let unknown = "n = 2\ncolor = 1\n";
        assert!(matches!(
            TwoBodyHamiltonian::parse(unknown),
            Err(DaqcError::Parse(_))
        ));
    }

    #[test]
    fn explicit_zero_strength_is_absent() {
        let text = "n = 2\n[[coupling]]\ni = 1\nj = 2\nmu = \"z\"\nnu = \"z\"\nstrength = 0.0\n";
        let h = TwoBodyHamiltonian::parse(text).unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn dense_zero_and_zz() {
        let h = TwoBodyHamiltonian::new(2).unwrap();
        assert!(h.dense_matrix().unwrap().iter().all(|z| *z == c(0.0, 0.0)));

        let zz = TwoBodyHamiltonian::from_couplings(
            2,
            [(CouplingKey::new(1, 2, PauliAxis::Z, PauliAxis::Z), 1.0)],
        )
        .unwrap();
        let m = zz.dense_matrix().unwrap();
        let diag: Vec<f64> = (0..4).map(|k| m[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    /// Explicit 4x4 Kronecker products, built independently of `act_on_bit`.
    fn kron2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
        DMatrix::from_fn(4, 4, |r, c| a[r / 2][c / 2] * b[r % 2][c % 2])
    }

    #[test]
    fn dense_xx_plus_yy_matches_kronecker_oracle() {
        let h = xy_chain(2, 1.0).unwrap();
        let m = h.dense_matrix().unwrap();
        let x = PauliAxis::X.matrix();
        let y = PauliAxis::Y.matrix();
        let oracle = kron2(x, x) + kron2(y, y);
        assert!((&m - &oracle).norm() < 1e-15);
        // Only the (01, 10) block is populated, with value 2.
        assert_eq!(m[(1, 2)], c(2.0, 0.0));
        assert_eq!(m[(2, 1)], c(2.0, 0.0));
        assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 2);
        assert!((frobenius_norm(&m) - 8f64.sqrt()).abs() < 1e-14);
        assert!((h.frobenius_norm() - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn frobenius_of_identity() {
        let id = DMatrix::<Complex64>::identity(64, 64);
        assert_eq!(frobenius_norm(&id), 8.0);
        assert_eq!(frobenius_norm(&DMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn dense_cap_enforced() {
        let h = TwoBodyHamiltonian::new(4).unwrap();
        assert!(matches!(
            h.dense_matrix_capped(3),
            Err(DaqcError::QubitCapExceeded { n: 4, cap: 3 })
        ));
    }

    #[test]
    fn ratio_vector_cases() {
        let xy = xy_chain(3, 1.0).unwrap();
        let b = ratio_vector(&xy, &xy, 1.0).unwrap();
        assert!(b.entries.iter().all(|v| *v == 1.0));
        assert_eq!(b.len(), 4);

        let src = homogeneous_cross_resonance(3, 1.0).unwrap();
        match ratio_vector(&xy, &src, 1.0) {
            Err(DaqcError::Unsimulable(k)) => {
                assert_eq!(k, CouplingKey::new(1, 2, PauliAxis::X, PauliAxis::X))
            }
            other => panic!("expected unsimulable, got {other:?}"),
        }

        let zz = |s: f64| {
            TwoBodyHamiltonian::from_couplings(
                2,
                [(CouplingKey::new(1, 2, PauliAxis::Z, PauliAxis::Z), s)],
            )
            .unwrap()
        };
        let b = ratio_vector(&zz(2.0), &zz(4.0), 3.0).unwrap();
        assert_eq!(b.entries, vec![1.5]);
        assert_eq!(b.active_rows, vec![9]);
    }

    #[test]
    fn toml_roundtrip_is_identity_on_canonical_text() {
        let h = homogeneous_cross_resonance(4, 0.3).unwrap();
        let text = h.to_toml_string();
        let back = TwoBodyHamiltonian::parse(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.to_toml_string(), text);
    }
}
