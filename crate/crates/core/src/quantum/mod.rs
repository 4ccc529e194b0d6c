//! Dense states and operators, Pauli and qudit strings, entropies, Haar sampling.
//!
//! Basis ordering: for `num_sites` sites of local dimension `q`, site 0 is the
//! most significant digit of the flat index.

mod entropy;
mod haar;
mod norms;
mod pauli;
mod qudit;

pub use entropy::{
    entropy, entropy_of_state, mutual_information, partial_trace, partial_trace_operator,
    purity, EntropyOrder,
};
pub use haar::{
    haar_isometry, haar_unitary, haar_unitary_from_seed, random_state, seeded_rng, stream_rng,
};
pub use norms::{matrix_norms, MatrixNorms};
pub use pauli::{Pauli, PauliString};
pub use qudit::{clock_matrix, majorana, shift_matrix, QuditString};

use crate::error::{Error, Result};
use faer::Mat;

pub type C64 = faer::c64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest Hilbert-space dimension stored as a dense operator (2^14).
pub const MAX_OPERATOR_DIM: usize = 1 << 14;
/// Largest Hilbert-space dimension stored as a dense state vector (2^26).
pub const MAX_STATE_DIM: usize = 1 << 26;

pub(crate) fn hilbert_dim(local_dim: usize, num_sites: usize) -> Result<usize> {
    if local_dim < 2 {
        return Err(Error::InvalidInput(format!("local dimension {local_dim} < 2")));
    }
    let mut d: usize = 1;
    for _ in 0..num_sites {
        d = d
            .checked_mul(local_dim)
            .filter(|&d| d <= MAX_STATE_DIM)
            .ok_or_else(|| {
                Error::ResourceLimit(format!("{local_dim}^{num_sites} exceeds dense state cap"))
            })?;
    }
    Ok(d)
}

fn operator_dim(local_dim: usize, num_sites: usize) -> Result<usize> {
    let d = hilbert_dim(local_dim, num_sites)?;
    if d > MAX_OPERATOR_DIM {
        return Err(Error::ResourceLimit(format!(
            "dense operator of dimension {d} exceeds cap {MAX_OPERATOR_DIM}"
        )));
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    amps: Vec<C64>,
    local_dim: usize,
    num_sites: usize,
}

impl DenseState {
    pub fn new(amps: Vec<C64>, local_dim: usize, num_sites: usize) -> Result<Self> {
        let d = hilbert_dim(local_dim, num_sites)?;
        if amps.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dimension {d}",
                amps.len()
            )));
        }
        Ok(Self { amps, local_dim, num_sites })
    }

    /// Qubit state; the number of sites is inferred from the length.
    pub fn qubits(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::DimensionMismatch(format!("length {len} is not 2^N")));
        }
        Self::new(amps, 2, len.trailing_zeros() as usize)
    }

    pub fn basis(local_dim: usize, num_sites: usize, index: usize) -> Result<Self> {
        let d = hilbert_dim(local_dim, num_sites)?;
        if index >= d {
            return Err(Error::InvalidInput(format!("basis index {index} >= {d}")));
        }
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(Self { amps, local_dim, num_sites })
    }

    /// |0…0⟩ on `num_sites` qubits.
    pub fn zeros(num_sites: usize) -> Result<Self> {
        Self::basis(2, num_sites, 0)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Numerical("cannot normalize zero vector".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &DenseState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("inner product".into()));
        }
        Ok(inner_product(&self.amps, &other.amps))
    }

    /// self ⊗ other, with `self` on the leading sites.
    pub fn kron(&self, other: &DenseState) -> Result<DenseState> {
        if self.local_dim != other.local_dim {
            return Err(Error::DimensionMismatch("kron of different local dims".into()));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        DenseState::new(amps, self.local_dim, self.num_sites + other.num_sites)
    }
}

/// ⟨a|b⟩ for raw amplitude vectors.
pub fn inner_product(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    mat: Mat<C64>,
    local_dim: usize,
    num_sites: usize,
}

impl DenseOperator {
    pub fn new(mat: Mat<C64>, local_dim: usize, num_sites: usize) -> Result<Self> {
        let d = operator_dim(local_dim, num_sites)?;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dimension {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat, local_dim, num_sites })
    }

    /// Qubit operator; the number of sites is inferred from the size.
    pub fn qubits(mat: Mat<C64>) -> Result<Self> {
        let d = mat.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::DimensionMismatch(format!("size {d} is not 2^N")));
        }
        Self::new(mat, 2, d.trailing_zeros() as usize)
    }

    pub fn identity(local_dim: usize, num_sites: usize) -> Result<Self> {
        let d = operator_dim(local_dim, num_sites)?;
        Ok(Self { mat: Mat::identity(d, d), local_dim, num_sites })
    }

    pub fn zeros(local_dim: usize, num_sites: usize) -> Result<Self> {
        let d = operator_dim(local_dim, num_sites)?;
        Ok(Self { mat: Mat::zeros(d, d), local_dim, num_sites })
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || self.local_dim != other.local_dim {
            return Err(Error::DimensionMismatch("operator shapes differ".into()));
        }
        Ok(())
    }

    fn with(&self, mat: Mat<C64>) -> Self {
        Self { mat, local_dim: self.local_dim, num_sites: self.num_sites }
    }

    pub fn adjoint(&self) -> Self {
        self.with(self.mat.adjoint().to_owned())
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        self.with(self.mat.conjugate().to_owned())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with(&self.mat * &other.mat))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with(&self.mat + &other.mat))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.with(Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * c))
    }

    /// [self, other].
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with(&self.mat * &other.mat - &other.mat * &self.mat))
    }

    /// U · self · U†; with U = e^{iHt} this is the Heisenberg operator W(t).
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        self.same_shape(u)?;
        Ok(self.with(&(&u.mat * &self.mat) * u.mat.adjoint()))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// ‖O‖₂² / d, the normalized Frobenius norm squared.
    pub fn normalized_frobenius_sq(&self) -> f64 {
        self.mat.squared_norm_l2() / self.dim() as f64
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.mat.adjoint() * &self.mat;
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| {
            let target = if i == j { ONE } else { ZERO };
            (p[(i, j)] - target).norm() <= tol
        }))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..=i).all(|j| (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm() <= tol))
    }

    /// Matrix-vector product on raw amplitudes.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch("operator applied to wrong-size vector".into()));
        }
        let x = faer::MatRef::from_column_major_slice(v, v.len(), 1);
        let y = &self.mat * x;
        Ok(y.col_as_slice(0).to_vec())
    }
}

/// I ⊗ … ⊗ `local_op` ⊗ … ⊗ I with `local_op` on `site`.
pub fn tensor_embed(local_op: &Mat<C64>, site: usize, num_sites: usize) -> Result<DenseOperator> {
    let q = local_op.nrows();
    if local_op.ncols() != q {
        return Err(Error::DimensionMismatch("local operator is not square".into()));
    }
    if site >= num_sites {
        return Err(Error::InvalidInput(format!("site {site} out of range for N={num_sites}")));
    }
    let d = operator_dim(q, num_sites)?;
    let stride = q.pow((num_sites - 1 - site) as u32);
    let mut mat = Mat::zeros(d, d);
    for col in 0..d {
        let b = (col / stride) % q;
        let base = col - b * stride;
        for a in 0..q {
            let v = local_op[(a, b)];
            if v != ZERO {
                mat[(base + a * stride, col)] = v;
            }
        }
    }
    DenseOperator::new(mat, q, num_sites)
}

pub fn apply_unitary(state: &DenseState, u: &DenseOperator) -> Result<DenseState> {
    if u.local_dim != state.local_dim || u.dim() != state.dim() {
        return Err(Error::DimensionMismatch("unitary does not match state".into()));
    }
    DenseState::new(u.apply(&state.amps)?, state.local_dim, state.num_sites)
}

/// Ordered set of site indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subsystem {
    sites: Vec<usize>,
}

impl Subsystem {
    /// Sorted, duplicate-free set of sites, all `< total_sites`.
    pub fn new(sites: impl IntoIterator<Item = usize>, total_sites: usize) -> Result<Self> {
        let mut sites: Vec<usize> = sites.into_iter().collect();
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("repeated site in {sites:?}")));
        }
        if let Some(&s) = sites.last() {
            if s >= total_sites {
                return Err(Error::InvalidInput(format!("site {s} >= {total_sites}")));
            }
        }
        Ok(Self { sites })
    }

    pub fn range(range: std::ops::Range<usize>) -> Self {
        Self { sites: range.collect() }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn is_disjoint(&self, other: &Subsystem) -> bool {
        self.sites.iter().all(|&s| !other.contains(s))
    }

    pub fn union(&self, other: &Subsystem) -> Subsystem {
        let mut sites = self.sites.clone();
        sites.extend(other.sites.iter().filter(|&&s| !self.contains(s)));
        sites.sort_unstable();
        Subsystem { sites }
    }

    pub fn complement(&self, total_sites: usize) -> Subsystem {
        Subsystem { sites: (0..total_sites).filter(|&s| !self.contains(s)).collect() }
    }
}

/// Applies `u` in place to the contiguous qubit block `start..start+k` of a
/// 2^num_sites state vector, where 2^k is the size of `u`.
pub fn apply_to_block(amps: &mut [C64], num_sites: usize, start: usize, u: &Mat<C64>) -> Result<()> {
    let db = u.nrows();
    if db != u.ncols() || !db.is_power_of_two() {
        return Err(Error::DimensionMismatch("block unitary must be square of size 2^k".into()));
    }
    let k = db.trailing_zeros() as usize;
    if start + k > num_sites || amps.len() != 1usize << num_sites {
        return Err(Error::DimensionMismatch(format!("block {start}..{} outside {num_sites} qubits", start + k)));
    }
    let low = 1usize << (num_sites - start - k);
    let chunk = low * db;
    let ut = u.transpose();
    for block in amps.chunks_mut(chunk) {
        // column-major (low × db) view: entry (lo, mid) sits at mid·low + lo
        let x = faer::MatRef::from_column_major_slice(&*block, low, db);
        let y = x * ut;
        for mid in 0..db {
            for lo in 0..low {
                block[mid * low + lo] = y[(lo, mid)];
            }
        }
    }
    Ok(())
}

/// tr(A P A P) for a Pauli string P, in O(4^N) without forming P.
pub fn pauli_sandwich_trace(a: &Mat<C64>, p: &PauliString) -> Result<C64> {
    let d = a.nrows();
    if d != 1usize << p.len() || a.ncols() != d {
        return Err(Error::DimensionMismatch("operator does not match Pauli string".into()));
    }
    let (xm, zm) = p.index_masks()?;
    let yp = p.y_phase();
    // P|i> = ph_i |i^x>, so (PAP)_{ji} = ph_{j^x} ph_i A_{j^x, i^x}
    let ph: Vec<C64> = (0..d).map(|i| PauliString::act_on_basis(i, xm, zm, yp).0).collect();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * ph[j ^ xm] * ph[i] * a[(j ^ xm, i ^ xm)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn embed_sigma_x_single_site() {
        let x = Pauli::X.matrix();
        let op = tensor_embed(&x, 0, 1).unwrap();
        assert_eq!(op.matrix(), &x);
    }

    #[test]
    fn embed_identity_is_identity() {
        let op = tensor_embed(&Pauli::I.matrix(), 2, 3).unwrap();
        assert_eq!(op.matrix(), &Mat::<C64>::identity(8, 8));
    }

    #[test]
    fn embed_sigma_z_second_site() {
        let op = tensor_embed(&Pauli::Z.matrix(), 1, 2).unwrap();
        let diag = [1.0, -1.0, 1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { c(diag[i]) } else { ZERO };
                assert_eq!(op.matrix()[(i, j)], want);
            }
        }
    }

    #[test]
    fn embed_rejects_bad_input() {
        assert!(tensor_embed(&Mat::zeros(2, 3), 0, 2).is_err());
        assert!(tensor_embed(&Pauli::X.matrix(), 2, 2).is_err());
    }

    #[test]
    fn apply_identity_and_flip() {
        let psi = DenseState::zeros(3).unwrap();
        let id = DenseOperator::identity(2, 3).unwrap();
        assert_eq!(apply_unitary(&psi, &id).unwrap(), psi);
        let one = apply_unitary(
            &DenseState::zeros(1).unwrap(),
            &DenseOperator::qubits(Pauli::X.matrix()).unwrap(),
        )
        .unwrap();
        assert_eq!(one, DenseState::basis(2, 1, 1).unwrap());
    }

    #[test]
    fn apply_haar_preserves_norm() {
        for seed in 0..100 {
            let mut rng = seeded_rng(seed);
            let psi = random_state(2, 4, &mut rng).unwrap();
            let u = DenseOperator::qubits(haar_unitary(16, &mut rng)).unwrap();
            let out = apply_unitary(&psi, &u).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn apply_rejects_mismatch() {
        let psi = DenseState::zeros(2).unwrap();
        let u = DenseOperator::identity(2, 3).unwrap();
        assert!(apply_unitary(&psi, &u).is_err());
    }

    #[test]
    fn dense_caps_enforced() {
        assert!(matches!(DenseOperator::identity(2, 15), Err(Error::ResourceLimit(_))));
        assert!(matches!(DenseState::zeros(27), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn heisenberg_preserves_frobenius() {
        let mut rng = seeded_rng(7);
        let u = DenseOperator::qubits(haar_unitary(16, &mut rng)).unwrap();
        let w = PauliString::single(4, 1, Pauli::Y).to_dense().unwrap();
        let wt = w.conjugate_by(&u).unwrap();
        assert!((wt.normalized_frobenius_sq() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subsystem_validation() {
        assert!(Subsystem::new([0, 0], 3).is_err());
        assert!(Subsystem::new([3], 3).is_err());
        let a = Subsystem::new([2, 0], 4).unwrap();
        assert_eq!(a.sites(), &[0, 2]);
        assert_eq!(a.complement(4).sites(), &[1, 3]);
    }

    fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
        Mat::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |i, j| {
            a[(i / b.nrows(), j / b.ncols())] * b[(i % b.nrows(), j % b.ncols())]
        })
    }

    #[test]
    fn block_application_matches_dense_kron() {
        let mut rng = seeded_rng(4);
        let u = haar_unitary(4, &mut rng);
        let psi = random_state(2, 5, &mut rng).unwrap();
        let full = kron(&kron(&Mat::<C64>::identity(2, 2), &u), &Mat::<C64>::identity(4, 4));
        let want = DenseOperator::qubits(full).unwrap().apply(psi.amplitudes()).unwrap();
        let mut got = psi.amplitudes().to_vec();
        apply_to_block(&mut got, 5, 1, &u).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-13);
        }
        assert!(apply_to_block(&mut got, 5, 4, &u).is_err());
    }

    #[test]
    fn sandwich_trace_matches_dense_product() {
        let a = haar_unitary_from_seed(8, 2);
        for p in ["XYZ", "IYI", "ZZX", "III"] {
            let ps = PauliString::parse(p).unwrap();
            let pm = ps.to_dense().unwrap().into_matrix();
            let want = (&a * &pm * &a * &pm).diagonal().column_vector().iter().fold(ZERO, |s, x| s + x);
            let got = pauli_sandwich_trace(&a, &ps).unwrap();
            assert!((got - want).norm() < 1e-12, "{p}");
        }
    }
}
