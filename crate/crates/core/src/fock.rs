//! Truncated Fock-space linear algebra.
//!
//! Basis ordering is fixed throughout the crate: cavity L is the most
//! significant index, then cavity R, then the mechanical Fock number.
//! [`HilbertSpec::index`] is the only place that encodes this.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dimensions of the truncated tensor-product space `L ⊗ R ⊗ M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    pub dim_cavity_l: usize,
    pub dim_cavity_r: usize,
    pub dim_mech: usize,
}

impl HilbertSpec {
    pub fn new(dim_cavity_l: usize, dim_cavity_r: usize, dim_mech: usize) -> Result<Self> {
        if dim_cavity_l == 0 || dim_cavity_r == 0 || dim_mech == 0 {
            return Err(Error::InvalidDimension(format!(
                "all factor dimensions must be >= 1, got ({dim_cavity_l}, {dim_cavity_r}, {dim_mech})"
            )));
        }
        Ok(Self { dim_cavity_l, dim_cavity_r, dim_mech })
    }

    /// Two-level cavities, enough for every single-photon scenario.
    pub fn single_photon(dim_mech: usize) -> Result<Self> {
        Self::new(2, 2, dim_mech)
    }

    /// The mechanical factor on its own (cavity factors of dimension 1).
    pub fn mechanical(dim_mech: usize) -> Result<Self> {
        Self::new(1, 1, dim_mech)
    }

    pub fn total(&self) -> usize {
        self.dim_cavity_l * self.dim_cavity_r * self.dim_mech
    }

    pub fn is_mechanical(&self) -> bool {
        self.dim_cavity_l == 1 && self.dim_cavity_r == 1
    }

    /// Flat index of `|n_l⟩ ⊗ |n_r⟩ ⊗ |m⟩`.
    #[inline]
    pub fn index(&self, n_l: usize, n_r: usize, m: usize) -> usize {
        debug_assert!(n_l < self.dim_cavity_l && n_r < self.dim_cavity_r && m < self.dim_mech);
        (n_l * self.dim_cavity_r + n_r) * self.dim_mech + m
    }

    /// Inverse of [`HilbertSpec::index`].
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let m = index % self.dim_mech;
        let cav = index / self.dim_mech;
        (cav / self.dim_cavity_r, cav % self.dim_cavity_r, m)
    }

    fn check_cavity(&self, n_l: usize, n_r: usize) -> Result<()> {
        if n_l >= self.dim_cavity_l || n_r >= self.dim_cavity_r {
            return Err(Error::InvalidState(format!(
                "cavity occupation ({n_l}, {n_r}) outside truncation ({}, {})",
                self.dim_cavity_l, self.dim_cavity_r
            )));
        }
        Ok(())
    }

    /// Lifts single-factor operators to the full space as `L ⊗ R ⊗ M`.
    pub fn lift(&self, op_l: &Operator, op_r: &Operator, op_m: &Operator) -> Result<Operator> {
        for (op, d) in [(op_l, self.dim_cavity_l), (op_r, self.dim_cavity_r), (op_m, self.dim_mech)] {
            if op.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
            }
        }
        Ok(tensor_product(&tensor_product(op_l, op_r), op_m))
    }

    pub fn identity_l(&self) -> Operator {
        Operator::identity(self.dim_cavity_l)
    }

    pub fn identity_r(&self) -> Operator {
        Operator::identity(self.dim_cavity_r)
    }

    pub fn identity_m(&self) -> Operator {
        Operator::identity(self.dim_mech)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet ({i}, {j}) outside dimension {dim}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(i);
                cols.push(j);
                vals.push(v);
                last = Some((i, j));
            }
        }
        // drop exact zeros left behind by cancellation
        let mut k = 0;
        for idx in 0..vals.len() {
            if vals[idx] != ZERO {
                rows[k] = rows[idx];
                cols[k] = cols[idx];
                vals[k] = vals[idx];
                k += 1;
            }
        }
        rows.truncate(k);
        cols.truncate(k);
        vals.truncate(k);
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { row_ptr, cols, vals }
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.row_ptr.len() - 1)
            .flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Sparse(Csr),
    Dense(DMatrix<C64>),
}

/// Square complex operator on one Hilbert factor or on the full space.
///
/// Ladder, number and Hamiltonian operators are stored sparse (they are
/// banded in the Fock basis); generic results such as matrix exponentials
/// are stored dense. Arithmetic between the two falls back to dense.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    storage: Storage,
}

impl Operator {
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        Self { dim, storage: Storage::Sparse(Csr::from_triplets(dim, triplets)) }
    }

    pub fn from_dense(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operator matrix must be square");
        Self { dim: m.nrows(), storage: Storage::Dense(m) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![ONE; dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let t = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), t)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Stored nonzeros (all entries for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse(c) => c.vals.len(),
            Storage::Dense(_) => self.dim * self.dim,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Sparse(c) => c.row(i).find(|&(col, _)| col == j).map(|(_, v)| v).unwrap_or(ZERO),
            Storage::Dense(m) => m[(i, j)],
        }
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.storage {
            Storage::Sparse(c) => c.triplets().collect(),
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        if m[(i, j)] != ZERO {
                            out.push((i, j, m[(i, j)]));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(c) => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (i, j, v) in c.triplets() {
                    m[(i, j)] = v;
                }
                m
            }
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        match &self.storage {
            Storage::Sparse(c) => {
                Self::from_triplets(self.dim, c.triplets().map(|(i, j, v)| (j, i, v.conj())).collect())
            }
            Storage::Dense(m) => Self::from_dense(m.adjoint()),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        match &self.storage {
            Storage::Sparse(c) => Self::from_triplets(self.dim, c.triplets().map(|(i, j, v)| (i, j, v * s)).collect()),
            Storage::Dense(m) => Self::from_dense(m * s),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Operator) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut t: Vec<_> = a.triplets().collect();
                t.extend(b.triplets());
                Self::from_triplets(self.dim, t)
            }
            _ => Self::from_dense(self.to_dense() + other.to_dense()),
        }
    }

    pub fn sub(&self, other: &Operator) -> Self {
        self.add(&other.scale_real(-1.0))
    }

    /// Operator product `self · other`.
    pub fn matmul(&self, other: &Operator) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut t = Vec::new();
                for i in 0..self.dim {
                    for (k, va) in a.row(i) {
                        for (j, vb) in b.row(k) {
                            t.push((i, j, va * vb));
                        }
                    }
                }
                Self::from_triplets(self.dim, t)
            }
            _ => Self::from_dense(self.to_dense() * other.to_dense()),
        }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// `out = self · x`.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        match &self.storage {
            Storage::Sparse(c) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        acc += c.vals[k] * x[c.cols[k]];
                    }
                    *o = acc;
                }
            }
            Storage::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (j, &xj) in x.iter().enumerate() {
                        acc += m[(i, j)] * xj;
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `out += coeff · self · x`.
    pub fn apply_add(&self, coeff: C64, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        match &self.storage {
            Storage::Sparse(c) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        acc += c.vals[k] * x[c.cols[k]];
                    }
                    *o += coeff * acc;
                }
            }
            Storage::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (j, &xj) in x.iter().enumerate() {
                        acc += m[(i, j)] * xj;
                    }
                    *o += coeff * acc;
                }
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// `self · m` for a dense matrix `m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.nrows(), self.dim);
        match &self.storage {
            Storage::Dense(d) => d * m,
            Storage::Sparse(c) => {
                let mut out = DMatrix::zeros(self.dim, m.ncols());
                for j in 0..m.ncols() {
                    let col = m.column(j);
                    for i in 0..self.dim {
                        let mut acc = ZERO;
                        for (k, v) in c.row(i) {
                            acc += v * col[k];
                        }
                        out[(i, j)] = acc;
                    }
                }
                out
            }
        }
    }

    /// `m · self` for a dense matrix `m`.
    pub fn dense_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.ncols(), self.dim);
        match &self.storage {
            Storage::Dense(d) => m * d,
            Storage::Sparse(c) => {
                let mut out = DMatrix::zeros(m.nrows(), self.dim);
                for (k, j, v) in c.triplets() {
                    for i in 0..m.nrows() {
                        out[(i, j)] += m[(i, k)] * v;
                    }
                }
                out
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        (self.to_dense() - other.to_dense()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.triplets().iter().map(|t| t.2.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise `|A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

/// Kronecker product `a ⊗ b`, with `a` the more significant index.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let dim = da * db;
    if a.is_sparse() && b.is_sparse() {
        let tb = b.triplets();
        let mut t = Vec::with_capacity(a.nnz() * tb.len());
        for (i, j, va) in a.triplets() {
            for &(k, l, vb) in &tb {
                t.push((i * db + k, j * db + l, va * vb));
            }
        }
        Operator::from_triplets(dim, t)
    } else {
        let (ma, mb) = (a.to_dense(), b.to_dense());
        Operator::from_dense(ma.kronecker(&mb))
    }
}

/// Annihilation operator `b` (entries `√m` at `(m−1, m)`) and its adjoint.
pub fn ladder_operators(dim: usize) -> Result<(Operator, Operator)> {
    if dim == 0 {
        return Err(Error::InvalidDimension("ladder operators need dim >= 1".into()));
    }
    let t: Vec<_> = (1..dim).map(|m| (m - 1, m, C64::new((m as f64).sqrt(), 0.0))).collect();
    let annihilate = Operator::from_triplets(dim, t);
    let create = annihilate.adjoint();
    Ok((annihilate, create))
}

pub fn number_operator(dim: usize) -> Operator {
    let d: Vec<f64> = (0..dim).map(|m| m as f64).collect();
    Operator::from_real_diagonal(&d)
}

/// Diagonal `(−1)^m`.
pub fn parity_matrix(dim: usize) -> Operator {
    let d: Vec<f64> = (0..dim).map(|m| if m % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Operator::from_real_diagonal(&d)
}

/// `b² + b†²` on the truncated space.
pub fn two_phonon_operator(dim: usize) -> Operator {
    let mut t = Vec::new();
    for m in 0..dim.saturating_sub(2) {
        let v = C64::new(((m + 1) as f64 * (m + 2) as f64).sqrt(), 0.0);
        t.push((m, m + 2, v));
        t.push((m + 2, m, v));
    }
    Operator::from_triplets(dim, t)
}

/// Normal-ordered `(b + b†)² = b² + b†² + 2b†b + 1`, taken elementwise so
/// the top Fock level keeps its `2m + 1` diagonal.
pub fn position_squared_operator(dim: usize) -> Operator {
    let diag: Vec<f64> = (0..dim).map(|m| 2.0 * m as f64 + 1.0).collect();
    two_phonon_operator(dim).add(&Operator::from_real_diagonal(&diag))
}

/// Displacement `D(α) = exp(α b† − α* b)` on the truncated space.
#[derive(Clone, Debug)]
pub struct Displacement {
    pub operator: Operator,
    /// Largest population that `D(α)` pushes from any of the lower half of
    /// the Fock levels into the top quarter. Truncation of the generator
    /// keeps `D` exactly unitary, so this leakage is the observable measure
    /// of how far the truncated `D` departs from the true displacement.
    pub truncation_defect: f64,
}

pub fn displacement_matrix(alpha: C64, dim: usize) -> Result<Displacement> {
    let (b, bd) = ladder_operators(dim)?;
    let generator = bd.scale(alpha).sub(&b.scale(alpha.conj()));
    let d = generator.to_dense().exp();
    let truncation_defect = edge_leakage(&d);
    Ok(Displacement { operator: Operator::from_dense(d), truncation_defect })
}

fn edge_leakage(d: &DMatrix<C64>) -> f64 {
    let dim = d.nrows();
    if dim < 4 {
        return 0.0;
    }
    let top = dim - dim / 4;
    (0..dim / 2).map(|n| (top..dim).map(|m| d[(m, n)].norm_sqr()).sum::<f64>()).fold(0.0, f64::max)
}

/// Pure state over a [`HilbertSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    spec: HilbertSpec,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Normalizing constructor.
    pub fn new(spec: HilbertSpec, amplitudes: Vec<C64>) -> Result<Self> {
        let mut s = Self::unnormalized(spec, amplitudes)?;
        let n = s.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        s.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(s)
    }

    /// Wraps amplitudes without normalizing.
    pub fn unnormalized(spec: HilbertSpec, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != spec.total() {
            return Err(Error::DimensionMismatch { expected: spec.total(), found: amplitudes.len() });
        }
        Ok(Self { spec, amplitudes })
    }

    pub fn basis(spec: HilbertSpec, n_l: usize, n_r: usize, m: usize) -> Result<Self> {
        spec.check_cavity(n_l, n_r)?;
        if m >= spec.dim_mech {
            return Err(Error::InvalidState(format!("mechanical level {m} outside truncation {}", spec.dim_mech)));
        }
        let mut a = vec![ZERO; spec.total()];
        a[spec.index(n_l, n_r, m)] = ONE;
        Ok(Self { spec, amplitudes: a })
    }

    /// `cavity ⊗ mech`, normalized. `cavity` is indexed `n_l · dim_r + n_r`.
    /// A mechanical vector longer than the truncation is accepted only if
    /// the excess is exactly zero.
    pub fn product(spec: HilbertSpec, cavity: &[C64], mech: &[C64]) -> Result<Self> {
        let dc = spec.dim_cavity_l * spec.dim_cavity_r;
        if cavity.len() != dc {
            return Err(Error::DimensionMismatch { expected: dc, found: cavity.len() });
        }
        if mech.len() > spec.dim_mech && mech[spec.dim_mech..].iter().any(|a| *a != ZERO) {
            return Err(Error::InvalidState(format!(
                "mechanical state has support beyond the truncation {}",
                spec.dim_mech
            )));
        }
        let mut a = vec![ZERO; spec.total()];
        for (c, &ac) in cavity.iter().enumerate() {
            for (m, &am) in mech.iter().take(spec.dim_mech).enumerate() {
                a[c * spec.dim_mech + m] = ac * am;
            }
        }
        Self::new(spec, a)
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, n_l: usize, n_r: usize, m: usize) -> C64 {
        self.amplitudes[self.spec.index(n_l, n_r, m)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Mechanical amplitudes for a fixed cavity occupation.
    pub fn mechanical_branch(&self, n_l: usize, n_r: usize) -> Vec<C64> {
        let start = self.spec.index(n_l, n_r, 0);
        self.amplitudes[start..start + self.spec.dim_mech].to_vec()
    }

    pub fn apply(&self, op: &Operator) -> Result<Self> {
        if op.dim() != self.spec.total() {
            return Err(Error::DimensionMismatch { expected: self.spec.total(), found: op.dim() });
        }
        Ok(Self { spec: self.spec, amplitudes: op.apply(&self.amplitudes) })
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        let v = self.apply(op)?;
        inner_product(self, &v)
    }
}

/// `⟨ψ1|ψ2⟩`, conjugate-linear in the first argument.
pub fn inner_product(psi1: &QuantumState, psi2: &QuantumState) -> Result<C64> {
    if psi1.spec != psi2.spec {
        return Err(Error::DimensionMismatch { expected: psi1.spec.total(), found: psi2.spec.total() });
    }
    Ok(psi1.amplitudes.iter().zip(&psi2.amplitudes).map(|(a, b)| a.conj() * b).sum())
}

/// Density matrix over a [`HilbertSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    spec: HilbertSpec,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(spec: HilbertSpec, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != spec.total() || entries.ncols() != spec.total() {
            return Err(Error::DimensionMismatch { expected: spec.total(), found: entries.nrows() });
        }
        Ok(Self { spec, entries })
    }

    pub fn from_pure(psi: &QuantumState) -> Self {
        let v = DVector::from_column_slice(psi.amplitudes());
        Self { spec: psi.spec, entries: &v * v.adjoint() }
    }

    pub fn maximally_mixed(spec: HilbertSpec) -> Self {
        let d = spec.total();
        Self { spec, entries: DMatrix::identity(d, d) / C64::new(d as f64, 0.0) }
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.entries.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces the matrix by its Hermitian part.
    pub fn symmetrize(&mut self) {
        let adj = self.entries.adjoint();
        self.entries = (&self.entries + adj) * C64::new(0.5, 0.0);
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-8) and positivity (−1e-8).
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > 1e-10 {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (defect {h:.3e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(Error::InvalidState(format!("density matrix trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::InvalidState(format!("density matrix not positive (min eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.spec.total() {
            return Err(Error::DimensionMismatch { expected: self.spec.total(), found: op.dim() });
        }
        Ok(op.mul_dense(&self.entries).trace())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn overlap(&self, psi: &QuantumState) -> Result<f64> {
        if psi.spec != self.spec {
            return Err(Error::DimensionMismatch { expected: self.spec.total(), found: psi.spec.total() });
        }
        let v = DVector::from_column_slice(psi.amplitudes());
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)].re)
    }
}

/// Traces out both cavities, leaving a density matrix on the mechanical
/// factor (spec `(1, 1, dim_mech)`).
pub fn partial_trace_mechanical(rho: &DensityMatrix) -> DensityMatrix {
    let spec = rho.spec;
    let nm = spec.dim_mech;
    let ncav = spec.dim_cavity_l * spec.dim_cavity_r;
    let mut out = DMatrix::zeros(nm, nm);
    for c in 0..ncav {
        let off = c * nm;
        out += rho.entries.view((off, off), (nm, nm));
    }
    DensityMatrix { spec: HilbertSpec { dim_cavity_l: 1, dim_cavity_r: 1, dim_mech: nm }, entries: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ladder_entries() {
        let (a, ad) = ladder_operators(2).unwrap();
        assert_eq!(a.triplets(), vec![(0, 1, ONE)]);
        assert_eq!(ad, a.adjoint());
        let (a4, _) = ladder_operators(4).unwrap();
        assert!((a4.get(2, 3).re - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(ladder_operators(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn number_from_ladder() {
        let (a, ad) = ladder_operators(7).unwrap();
        let n = ad.matmul(&a);
        assert!(n.max_abs_diff(&number_operator(7)) < 1e-14);
    }

    #[test]
    fn tensor_identity_and_index() {
        let id = tensor_product(&Operator::identity(2), &Operator::identity(3));
        assert!(id.max_abs_diff(&Operator::identity(6)) < 1e-15);
        let op = tensor_product(&number_operator(2), &Operator::identity(2));
        let mut e2 = vec![ZERO; 4];
        e2[2] = ONE;
        let y = op.apply(&e2);
        assert_eq!(y[2], ONE);
        let spec = HilbertSpec::new(2, 3, 4).unwrap();
        for idx in 0..spec.total() {
            let (l, r, m) = spec.split(idx);
            assert_eq!(spec.index(l, r, m), idx);
        }
        assert_eq!(spec.index(1, 0, 0), 12);
    }

    fn dense_op(n: usize, seed: u64) -> Operator {
        // small LCG keeps this free of an rng dependency
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(n, n, |_, _| c(next(), next()));
        Operator::from_dense(m)
    }

    #[test]
    fn kron_mixed_product_matches_brute_force() {
        let a = dense_op(3, 1);
        let b = dense_op(2, 2);
        let x: Vec<C64> = (0..3).map(|k| c(k as f64 + 0.5, -0.3 * k as f64)).collect();
        let y: Vec<C64> = (0..2).map(|k| c(0.2 - k as f64, 1.0)).collect();
        let ab = tensor_product(&a, &b);
        let xy: Vec<C64> = x.iter().flat_map(|&xi| y.iter().map(move |&yj| xi * yj)).collect();
        let lhs = ab.apply(&xy);
        let ax = a.apply(&x);
        let by = b.apply(&y);
        let rhs: Vec<C64> = ax.iter().flat_map(|&u| by.iter().map(move |&v| u * v)).collect();
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).norm() < 1e-13);
        }
        // sparse path agrees with the dense path
        let (s1, _) = ladder_operators(3).unwrap();
        let s2 = number_operator(2);
        let sparse = tensor_product(&s1, &s2);
        let dense = tensor_product(&Operator::from_dense(s1.to_dense()), &s2);
        assert!(sparse.is_sparse() && !dense.is_sparse());
        assert!(sparse.max_abs_diff(&dense) < 1e-15);
    }

    #[test]
    fn displacement_basics() {
        let d0 = displacement_matrix(ZERO, 10).unwrap();
        assert!(d0.operator.max_abs_diff(&Operator::identity(10)) < 1e-14);

        let d = displacement_matrix(c(1.0, 0.0), 40).unwrap();
        let mut vac = vec![ZERO; 40];
        vac[0] = ONE;
        let coh = d.operator.apply(&vac);
        let mean_n: f64 = coh.iter().enumerate().map(|(m, a)| m as f64 * a.norm_sqr()).sum();
        // coherent-state oracle: Σ m e^{-|α|²}|α|^{2m}/m!
        let mut term = (-1.0f64).exp();
        let mut oracle = 0.0;
        for m in 0..40 {
            if m > 0 {
                term /= m as f64;
            }
            oracle += m as f64 * term;
        }
        assert!((mean_n - oracle).abs() < 1e-8 && (mean_n - 1.0).abs() < 1e-8);

        for alpha in [c(2.0, 0.0), c(0.0, 2.0), c(1.2, -1.1)] {
            let dp = displacement_matrix(alpha, 60).unwrap().operator;
            let dm = displacement_matrix(-alpha, 60).unwrap().operator;
            assert!(dp.matmul(&dm).max_abs_diff(&Operator::identity(60)) < 1e-8);
        }
    }

    #[test]
    fn displacement_truncation_defect_shrinks_with_dim() {
        let defects: Vec<f64> =
            [20, 40, 80].iter().map(|&n| displacement_matrix(c(1.0, 0.0), n).unwrap().truncation_defect).collect();
        assert!(defects[0] > defects[1] && defects[1] > defects[2], "{defects:?}");
        // unitarity itself is exact for the truncated generator
        let d = displacement_matrix(c(1.0, 0.0), 20).unwrap().operator;
        assert!(d.adjoint().matmul(&d).max_abs_diff(&Operator::identity(20)) < 1e-12);
    }

    #[test]
    fn parity_properties() {
        let p = parity_matrix(8);
        assert_eq!(p.get(0, 0), ONE);
        assert_eq!(p.get(3, 3), -ONE);
        let n = number_operator(8);
        assert!(p.commutator(&n).max_abs() == 0.0);
        let (a, _) = ladder_operators(8).unwrap();
        let anti = p.matmul(&a).add(&a.matmul(&p)).to_dense();
        for i in 0..7 {
            for j in 0..7 {
                assert!(anti[(i, j)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn inner_product_rules() {
        let spec = HilbertSpec::new(2, 2, 3).unwrap();
        let s1 = QuantumState::basis(spec, 1, 0, 2).unwrap();
        let s2 = QuantumState::basis(spec, 0, 1, 2).unwrap();
        assert_eq!(inner_product(&s1, &s1).unwrap(), ONE);
        assert_eq!(inner_product(&s1, &s2).unwrap(), ZERO);
        let other = QuantumState::basis(HilbertSpec::new(2, 2, 4).unwrap(), 0, 0, 0).unwrap();
        assert!(matches!(inner_product(&s1, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn product_rejects_support_outside_truncation() {
        let spec = HilbertSpec::single_photon(3).unwrap();
        let cav = [ZERO, ZERO, ONE, ZERO];
        assert!(QuantumState::product(spec, &cav, &[ONE, ZERO, ZERO, ZERO]).is_ok());
        assert!(matches!(QuantumState::product(spec, &cav, &[ONE, ZERO, ZERO, ONE]), Err(Error::InvalidState(_))));
        assert!(QuantumState::basis(spec, 2, 0, 0).is_err());
    }

    #[test]
    fn partial_trace_cases() {
        let spec = HilbertSpec::single_photon(4).unwrap();
        // product state
        let cav = [ZERO, c(0.6, 0.0), c(0.0, 0.8), ZERO];
        let mech = [c(0.5, 0.0), c(0.5, 0.5), ZERO, c(0.0, -0.5)];
        let psi = QuantumState::product(spec, &cav, &mech).unwrap();
        let red = partial_trace_mechanical(&DensityMatrix::from_pure(&psi));
        let m = QuantumState::new(HilbertSpec::mechanical(4).unwrap(), mech.to_vec()).unwrap();
        let expect = DensityMatrix::from_pure(&m);
        assert!((red.entries() - expect.entries()).iter().all(|v| v.norm() < 1e-14));

        // orthogonal branches
        let mut a = vec![ZERO; spec.total()];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        a[spec.index(1, 0, 0)] = c(h, 0.0);
        a[spec.index(0, 1, 2)] = c(h, 0.0);
        let psi = QuantumState::new(spec, a).unwrap();
        let red = partial_trace_mechanical(&DensityMatrix::from_pure(&psi));
        let e = red.entries();
        assert!((e[(0, 0)].re - 0.5).abs() < 1e-15 && (e[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!(e[(0, 2)].norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_validates() {
        let rho = DensityMatrix::maximally_mixed(HilbertSpec::new(2, 2, 3).unwrap());
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0 / 12.0).abs() < 1e-14);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn inner_product_conjugate_symmetry(x in arb_state(12), y in arb_state(12)) {
            let spec = HilbertSpec::new(2, 2, 3).unwrap();
            let a = QuantumState::new(spec, x).unwrap();
            let b = QuantumState::new(spec, y).unwrap();
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-14);
            prop_assert!((inner_product(&a, &a).unwrap() - ONE).norm() < 1e-12);
        }

        #[test]
        fn partial_trace_linear_and_trace_preserving(
            x in arb_state(12), y in arb_state(12), w in 0.0f64..1.0,
        ) {
            let spec = HilbertSpec::new(2, 2, 3).unwrap();
            let r1 = DensityMatrix::from_pure(&QuantumState::new(spec, x).unwrap());
            let r2 = DensityMatrix::from_pure(&QuantumState::new(spec, y).unwrap());
            let mix = DensityMatrix::new(
                spec,
                r1.entries() * C64::new(w, 0.0) + r2.entries() * C64::new(1.0 - w, 0.0),
            ).unwrap();
            let lhs = partial_trace_mechanical(&mix);
            let rhs = partial_trace_mechanical(&r1).entries() * C64::new(w, 0.0)
                + partial_trace_mechanical(&r2).entries() * C64::new(1.0 - w, 0.0);
            prop_assert!((lhs.entries() - rhs).iter().all(|v| v.norm() < 1e-13));
            prop_assert!((lhs.trace() - mix.trace()).norm() < 1e-13);
        }
    }
}
