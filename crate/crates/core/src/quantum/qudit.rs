use super::{DenseOperator, Pauli, PauliString, C64, ONE};
use crate::error::{Error, Result};
use faer::Mat;
use std::f64::consts::PI;

/// Shift X|j⟩ = |j+1 mod q⟩.
pub fn shift_matrix(q: usize) -> Mat<C64> {
    Mat::from_fn(q, q, |i, j| if i == (j + 1) % q { ONE } else { C64::new(0.0, 0.0) })
}

/// Clock Z|j⟩ = ω^j |j⟩, ω = e^{2πi/q}.
pub fn clock_matrix(q: usize) -> Mat<C64> {
    Mat::from_fn(q, q, |i, j| {
        if i == j {
            C64::from_polar(1.0, 2.0 * PI * i as f64 / q as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Qudit operator string: site `i` carries X^{m_i} Z^{n_i}.
///
/// The q² choices of (m, n) per site form an orthonormal operator basis under
/// tr(A†B)/q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuditString {
    q: usize,
    powers: Vec<(usize, usize)>,
}

impl QuditString {
    pub fn new(q: usize, powers: Vec<(usize, usize)>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidInput("local dimension must be >= 2".into()));
        }
        if powers.iter().any(|&(m, n)| m >= q || n >= q) {
            return Err(Error::InvalidInput(format!("powers must be < q = {q}")));
        }
        Ok(Self { q, powers })
    }

    pub fn weight(&self) -> usize {
        self.powers.iter().filter(|&&p| p != (0, 0)).count()
    }

    pub fn local_matrix(&self, site: usize) -> Mat<C64> {
        let (m, n) = self.powers[site];
        let x = shift_matrix(self.q);
        let z = clock_matrix(self.q);
        let mut out = Mat::<C64>::identity(self.q, self.q);
        for _ in 0..m {
            out = &out * &x;
        }
        for _ in 0..n {
            out = &out * &z;
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let n = self.powers.len();
        let locals: Vec<_> = (0..n).map(|s| self.local_matrix(s)).collect();
        let mut mat = Mat::<C64>::identity(1, 1);
        for l in &locals {
            mat = kron(&mat, l);
        }
        DenseOperator::new(mat, self.q, n)
    }
}

pub(crate) fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Jordan–Wigner Majorana operator χ_k on `n` qubits, k in 0..2n.
///
/// χ_{2j} = Z…Z X_j and χ_{2j+1} = Z…Z Y_j; they satisfy {χ_a, χ_b} = 2δ_ab.
pub fn majorana(n: usize, k: usize) -> Result<PauliString> {
    if k >= 2 * n {
        return Err(Error::InvalidInput(format!("Majorana index {k} >= {}", 2 * n)));
    }
    let j = k / 2;
    let mut s = PauliString::identity(n);
    for i in 0..j {
        s.set(i, Pauli::Z);
    }
    s.set(j, if k % 2 == 0 { Pauli::X } else { Pauli::Y });
    Ok(s)
}
