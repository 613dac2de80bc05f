//! Composite truncated Fock space for the dot plus the three cavity modes,
//! and a sparse operator type for assembling Hamiltonians on it.
//!
//! Basis states are `|dot, n0, n1, n2>` with hard photon-number cutoffs
//! `trunc = [t0, t1, t2]`: raising past a cutoff annihilates. Flat indices
//! order the dot slowest, then `n0`, `n1`, and `n2` fastest, so the ground
//! block occupies rows `0..dim/2` and the excited block the rest.

use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Electronic level of the quantum dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DotLevel {
    Ground,
    Excited,
}

impl DotLevel {
    pub fn index(self) -> usize {
        match self {
            DotLevel::Ground => 0,
            DotLevel::Excited => 1,
        }
    }
}

/// One basis vector `|dot, n0, n1, n2>` of the composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub dot: DotLevel,
    pub n0: u32,
    pub n1: u32,
    pub n2: u32,
}

impl BasisState {
    pub fn new(dot: DotLevel, n0: u32, n1: u32, n2: u32) -> Self {
        Self { dot, n0, n1, n2 }
    }

    pub fn ground(n0: u32, n1: u32, n2: u32) -> Self {
        Self::new(DotLevel::Ground, n0, n1, n2)
    }

    pub fn excited(n0: u32, n1: u32, n2: u32) -> Self {
        Self::new(DotLevel::Excited, n0, n1, n2)
    }

    /// Conserved charge `3 n0 + 3 (dot excitation) + n1 + 2 n2`.
    pub fn charge(&self) -> u32 {
        3 * self.n0 + 3 * self.dot.index() as u32 + self.n1 + 2 * self.n2
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = match self.dot {
            DotLevel::Ground => 'g',
            DotLevel::Excited => 'e',
        };
        write!(f, "|{},{},{},{}>", d, self.n0, self.n1, self.n2)
    }
}

/// Cavity mode selector: `Omega0` is the pumped mode, `Omega1 = omega0/3`
/// holds the prepared photons, `Omega2 = 2 omega0/3` is the intermediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Omega0,
    Omega1,
    Omega2,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Omega0 => 0,
            Mode::Omega1 => 1,
            Mode::Omega2 => 2,
        }
    }
}

/// Direction of a ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// Truncated composite Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    trunc: [u32; 3],
    dim: usize,
}

impl FockSpace {
    /// Largest allowed flat dimension; sized so a dense density matrix and the
    /// integrator workspace stay comfortably in memory.
    pub const MAX_DIM: usize = 4096;

    pub fn new(trunc0: u32, trunc1: u32, trunc2: u32) -> Result<Self> {
        let dims = [trunc0 as usize + 1, trunc1 as usize + 1, trunc2 as usize + 1];
        let dim = dims
            .iter()
            .try_fold(2usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Config("fock space dimension overflows usize".into()))?;
        if dim > Self::MAX_DIM {
            return Err(Error::Config(format!(
                "fock space dimension {dim} exceeds cap {} (truncations {trunc0},{trunc1},{trunc2})",
                Self::MAX_DIM
            )));
        }
        Ok(Self { trunc: [trunc0, trunc1, trunc2], dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> [u32; 3] {
        self.trunc
    }

    /// Number of levels kept for one mode (truncation + 1).
    pub fn levels(&self, mode: Mode) -> usize {
        self.trunc[mode.index()] as usize + 1
    }

    pub fn contains(&self, s: &BasisState) -> bool {
        s.n0 <= self.trunc[0] && s.n1 <= self.trunc[1] && s.n2 <= self.trunc[2]
    }

    /// Flat index of a basis state (dot slowest, then n0, n1, n2 fastest).
    pub fn flatten(&self, s: &BasisState) -> Result<usize> {
        self.flatten_opt(s).ok_or_else(|| {
            Error::Config(format!(
                "state {s} outside truncations {:?}",
                self.trunc
            ))
        })
    }

    /// Flat index, or `None` when the state lies outside the truncations.
    #[inline]
    pub fn flatten_opt(&self, s: &BasisState) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let [_, t1, t2] = self.trunc;
        let (d1, d2) = (t1 as usize + 1, t2 as usize + 1);
        let photon = (s.n0 as usize * d1 + s.n1 as usize) * d2 + s.n2 as usize;
        Some(s.dot.index() * self.dim / 2 + photon)
    }

    pub fn unflatten(&self, idx: usize) -> Result<BasisState> {
        if idx >= self.dim {
            return Err(Error::Config(format!(
                "flat index {idx} outside dimension {}",
                self.dim
            )));
        }
        let half = self.dim / 2;
        let dot = if idx < half { DotLevel::Ground } else { DotLevel::Excited };
        let mut rem = idx % half;
        let [_, t1, t2] = self.trunc;
        let (d1, d2) = (t1 as usize + 1, t2 as usize + 1);
        let n2 = rem % d2;
        rem /= d2;
        let n1 = rem % d1;
        let n0 = rem / d1;
        Ok(BasisState::new(dot, n0 as u32, n1 as u32, n2 as u32))
    }

    /// All basis states in flat-index order.
    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim).map(|i| self.unflatten(i).expect("states: index in range"))
    }
}

/// Sparse operator in CSR form. Operators of this model are real in the Fock
/// basis, so values are `f64`; the adjoint is the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)))
    }

    /// Build from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped. Panics if an index is out of range.
    pub fn from_triplets<I: IntoIterator<Item = (usize, usize, f64)>>(dim: usize, trips: I) -> Self {
        let mut t: Vec<(usize, usize, f64)> = trips.into_iter().collect();
        for &(r, c, _) in &t {
            assert!(r < dim && c < dim, "SparseOp::from_triplets: index ({r},{c}) out of range {dim}");
        }
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut i = 0;
        for r in 0..dim {
            while i < t.len() && t[i].0 == r {
                let c = t[i].1;
                let mut v = 0.0;
                while i < t.len() && t[i].0 == r && t[i].1 == c {
                    v += t[i].2;
                    i += 1;
                }
                if v != 0.0 {
                    cols.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros of one row as (col, value) pairs.
    #[inline]
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn element(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    /// Matrix element between two basis states.
    pub fn matrix_element(&self, space: &FockSpace, bra: &BasisState, ket: &BasisState) -> f64 {
        match (space.flatten_opt(bra), space.flatten_opt(ket)) {
            (Some(r), Some(c)) => self.element(r, c),
            _ => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    /// Adjoint; identical to the transpose for these real operators.
    pub fn adjoint(&self) -> Self {
        self.transpose()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "SparseOp::matmul: dimension mismatch");
        let mut trips = Vec::new();
        for r in 0..self.dim {
            for (k, v) in self.row(r) {
                for (c, w) in other.row(k) {
                    trips.push((r, c, v * w));
                }
            }
        }
        Self::from_triplets(self.dim, trips)
    }

    /// Sum of scaled operators.
    pub fn linear_combination(terms: &[(f64, &SparseOp)]) -> Self {
        assert!(!terms.is_empty(), "SparseOp::linear_combination: empty term list");
        let dim = terms[0].1.dim;
        let mut trips = Vec::new();
        for &(c, op) in terms {
            assert_eq!(op.dim, dim, "SparseOp::linear_combination: dimension mismatch");
            trips.extend(op.iter().map(|(r, cc, v)| (r, cc, c * v)));
        }
        Self::from_triplets(dim, trips)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.element(i, i)).collect()
    }

    /// Largest absolute row sum (a rigorous bound on the spectral radius for
    /// symmetric operators).
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn symmetry_deviation(&self) -> f64 {
        let t = self.transpose();
        let mut dev: f64 = 0.0;
        for (r, c, v) in self.iter() {
            dev = dev.max((v - t.element(r, c)).abs());
        }
        dev
    }

    /// `out = A . v` for a complex vector.
    pub fn apply_vec(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim, "SparseOp::apply_vec: length mismatch");
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for (c, w) in self.row(r) {
                acc += w * v[c];
            }
            out[r] = acc;
        }
    }

    /// `out = A . M` for a dense complex matrix in standard (row-major) layout.
    ///
    /// Each output row is a real-weighted sum of rows of `M`, streamed as
    /// `f64` pairs so the loop vectorizes.
    pub fn mul_dense(&self, m: &Array2<C64>, out: &mut Array2<C64>) {
        let n = self.dim;
        assert_eq!(m.dim(), (n, n), "SparseOp::mul_dense: shape mismatch");
        assert_eq!(out.dim(), (n, n), "SparseOp::mul_dense: shape mismatch");
        let msl = as_f64_slice(m.as_slice().expect("mul_dense: input not contiguous"));
        let osl = as_f64_slice_mut(out.as_slice_mut().expect("mul_dense: output not contiguous"));
        let w = 2 * n;
        for r in 0..n {
            let orow = &mut osl[r * w..(r + 1) * w];
            orow.fill(0.0);
            for (c, v) in self.row(r) {
                let mrow = &msl[c * w..(c + 1) * w];
                for (o, &x) in orow.iter_mut().zip(mrow) {
                    *o += v * x;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (r, c, v) in self.iter() {
            out[(r, c)] += v;
        }
        out
    }

    pub fn to_dense_complex(&self) -> Array2<C64> {
        self.to_dense().mapv(|v| C64::new(v, 0.0))
    }
}

/// View a complex slice as interleaved (re, im) f64 pairs.
#[inline]
pub fn as_f64_slice(s: &[C64]) -> &[f64] {
    // Complex<f64> is repr(C) with fields re, im.
    unsafe { std::slice::from_raw_parts(s.as_ptr() as *const f64, 2 * s.len()) }
}

/// Mutable view of a complex slice as interleaved (re, im) f64 pairs.
#[inline]
pub fn as_f64_slice_mut(s: &mut [C64]) -> &mut [f64] {
    unsafe { std::slice::from_raw_parts_mut(s.as_mut_ptr() as *mut f64, 2 * s.len()) }
}

/// Ladder operator for one cavity mode: `Lower` maps `|n> -> sqrt(n) |n-1>`,
/// `Raise` maps `|n> -> sqrt(n+1) |n+1>` and annihilates at the truncation.
pub fn ladder(space: &FockSpace, mode: Mode, kind: Ladder) -> SparseOp {
    let mut trips = Vec::new();
    for ket in space.states() {
        let c = space.flatten_opt(&ket).expect("ladder: state in space");
        let n = match mode {
            Mode::Omega0 => ket.n0,
            Mode::Omega1 => ket.n1,
            Mode::Omega2 => ket.n2,
        };
        let (target_n, coeff) = match kind {
            Ladder::Lower => {
                if n == 0 {
                    continue;
                }
                (n - 1, (n as f64).sqrt())
            }
            Ladder::Raise => (n + 1, (n as f64 + 1.0).sqrt()),
        };
        let mut bra = ket;
        match mode {
            Mode::Omega0 => bra.n0 = target_n,
            Mode::Omega1 => bra.n1 = target_n,
            Mode::Omega2 => bra.n2 = target_n,
        }
        if let Some(r) = space.flatten_opt(&bra) {
            trips.push((r, c, coeff));
        }
    }
    SparseOp::from_triplets(space.dim(), trips)
}

/// Dot lowering operator `s- = |g><e|` (tensored with identity on the modes).
pub fn dot_lowering(space: &FockSpace) -> SparseOp {
    let mut trips = Vec::new();
    for ket in space.states() {
        if ket.dot == DotLevel::Excited {
            let c = space.flatten_opt(&ket).expect("dot_lowering: state in space");
            let bra = BasisState { dot: DotLevel::Ground, ..ket };
            let r = space.flatten_opt(&bra).expect("dot_lowering: partner in space");
            trips.push((r, c, 1.0));
        }
    }
    SparseOp::from_triplets(space.dim(), trips)
}

/// Number operator for one mode.
pub fn number_op(space: &FockSpace, mode: Mode) -> SparseOp {
    let a = ladder(space, mode, Ladder::Lower);
    a.transpose().matmul(&a)
}
