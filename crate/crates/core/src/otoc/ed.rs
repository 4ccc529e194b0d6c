//! Exact diagonalization: one eigendecomposition, reused for every time.

use super::hamiltonian::SpinChainHamiltonian;
use crate::error::{Error, Result};
use crate::quantum::{DenseOperator, PauliString, C64, ONE, ZERO};
use faer::{Mat, Side};

enum Basis {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

/// Operator in the energy eigenbasis, stored as `phase · matrix` so that real
/// Hamiltonians keep every Pauli string in real arithmetic.
enum EigenOp {
    Real { phase: C64, mat: Mat<f64> },
    Complex(Mat<C64>),
}

pub struct EdSolver {
    num_sites: usize,
    energies: Vec<f64>,
    basis: Basis,
}

fn eig_err(e: impl std::fmt::Debug) -> Error {
    Error::Numerical(format!("eigensolver: {e:?}"))
}

/// Largest chain handled by dense diagonalization.
pub const MAX_ED_SITES: usize = 14;

impl EdSolver {
    pub fn new(h: &SpinChainHamiltonian) -> Result<Self> {
        let n = h.num_sites();
        if n > MAX_ED_SITES {
            return Err(Error::ResourceLimit(format!("ED needs N <= {MAX_ED_SITES}, got {n}")));
        }
        if let Some(real) = h.to_dense_real()? {
            let eig = real.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
            let energies = eig.S().column_vector().iter().copied().collect();
            return Ok(Self { num_sites: n, energies, basis: Basis::Real(eig.U().to_owned()) });
        }
        let dense = h.to_dense()?;
        let eig = dense.matrix().self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
        let energies = eig.S().column_vector().iter().map(|e| e.re).collect();
        Ok(Self { num_sites: n, energies, basis: Basis::Complex(eig.U().to_owned()) })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.len() != self.num_sites {
            return Err(Error::DimensionMismatch(format!(
                "Pauli string on {} sites for a {}-site chain",
                p.len(),
                self.num_sites
            )));
        }
        Ok(())
    }

    /// Q† P Q. P maps |j⟩ to ph_j |j ⊕ x⟩, so P·Q is a signed row permutation.
    fn to_eigenbasis(&self, p: &PauliString) -> Result<EigenOp> {
        self.check(p)?;
        let (xm, zm) = p.index_masks()?;
        let yp = p.y_phase();
        let d = self.dim();
        // sign of row j of P·Q: P_{j, j⊕x} = ph(j⊕x)
        let sign = |row: usize| -> f64 {
            let (ph, _) = PauliString::act_on_basis(row ^ xm, xm, zm, ONE);
            ph.re
        };
        match &self.basis {
            Basis::Real(q) => {
                let pq = Mat::from_fn(d, d, |i, j| sign(i) * q[(i ^ xm, j)]);
                Ok(EigenOp::Real { phase: yp, mat: q.transpose() * &pq })
            }
            Basis::Complex(q) => {
                let pq = Mat::from_fn(d, d, |i, j| yp * q[(i ^ xm, j)] * sign(i));
                Ok(EigenOp::Complex(q.adjoint() * &pq))
            }
        }
    }

    /// F(t) = tr(W(t) V W(t) V)/d for Hermitian Pauli strings, at every time.
    pub fn otoc_series(&self, w: &PauliString, v: &PauliString, times: &[f64]) -> Result<Vec<C64>> {
        let we = self.to_eigenbasis(w)?;
        let ve = self.to_eigenbasis(v)?;
        let d = self.dim();
        let e = &self.energies;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let ph: Vec<C64> = e.iter().map(|&em| C64::from_polar(1.0, em * t)).collect();
            let f = match (&we, &ve) {
                (EigenOp::Real { phase: pw, mat: rw }, EigenOp::Real { phase: pv, mat: rv }) => {
                    let cos = Mat::from_fn(d, d, |m, n| rw[(m, n)] * (ph[m] * ph[n].conj()).re);
                    let pr = &cos * rv;
                    drop(cos);
                    let sin = Mat::from_fn(d, d, |m, n| rw[(m, n)] * (ph[m] * ph[n].conj()).im);
                    let pi = &sin * rv;
                    drop(sin);
                    let (mut re, mut im) = (0.0, 0.0);
                    for j in 0..d {
                        for i in 0..d {
                            re += pr[(i, j)] * pr[(j, i)] - pi[(i, j)] * pi[(j, i)];
                            im += 2.0 * pr[(i, j)] * pi[(j, i)];
                        }
                    }
                    C64::new(re, im) * (pw * pw * pv * pv) / d as f64
                }
                (EigenOp::Complex(cw), EigenOp::Complex(cv)) => {
                    let wt = Mat::from_fn(d, d, |m, n| cw[(m, n)] * ph[m] * ph[n].conj());
                    let p = &wt * cv;
                    let mut acc = ZERO;
                    for j in 0..d {
                        for i in 0..d {
                            acc += p[(i, j)] * p[(j, i)];
                        }
                    }
                    acc / d as f64
                }
                _ => unreachable!("both operators share the solver basis"),
            };
            out.push(f);
        }
        Ok(out)
    }

    /// e^{−iHt} in the computational basis.
    pub fn propagator(&self, t: f64) -> Mat<C64> {
        let d = self.dim();
        let q = self.complex_basis();
        let scaled = Mat::from_fn(d, d, |i, j| q[(i, j)] * C64::from_polar(1.0, -self.energies[j] * t));
        &scaled * q.adjoint()
    }

    fn complex_basis(&self) -> Mat<C64> {
        match &self.basis {
            Basis::Real(q) => Mat::from_fn(q.nrows(), q.ncols(), |i, j| C64::new(q[(i, j)], 0.0)),
            Basis::Complex(q) => q.clone(),
        }
    }

    /// Heisenberg operator W(t) = e^{iHt} W e^{−iHt} in the computational basis.
    pub fn heisenberg(&self, w: &DenseOperator, t: f64) -> Result<DenseOperator> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch("operator does not match Hamiltonian".into()));
        }
        let u = self.propagator(-t);
        let wt = &(&u * w.matrix()) * u.adjoint();
        DenseOperator::new(wt, 2, self.num_sites)
    }
}

#[cfg(test)]
mod tests {
    use super::super::hamiltonian::{Boundary, IsingCouplings};
    use super::*;
    use crate::quantum::Pauli;

    fn ising(n: usize) -> SpinChainHamiltonian {
        SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap()
    }

    /// F by brute-force dense products.
    fn dense_otoc(h: &SpinChainHamiltonian, w: &PauliString, v: &PauliString, t: f64) -> C64 {
        let solver = EdSolver::new(h).unwrap();
        let wt = solver.heisenberg(&w.to_dense().unwrap(), t).unwrap();
        let vd = v.to_dense().unwrap();
        let prod = wt.mul(&vd).unwrap().mul(&wt).unwrap().mul(&vd).unwrap();
        prod.trace() / prod.dim() as f64
    }

    #[test]
    fn static_values() {
        let h = ising(4);
        let s = EdSolver::new(&h).unwrap();
        let z0 = PauliString::single(4, 0, Pauli::Z);
        let z2 = PauliString::single(4, 2, Pauli::Z);
        let x0 = PauliString::single(4, 0, Pauli::X);
        let f = s.otoc_series(&z0, &z2, &[0.0]).unwrap()[0];
        assert!((f - ONE).norm() < 1e-12);
        let f = s.otoc_series(&x0, &PauliString::single(4, 0, Pauli::Z), &[0.0]).unwrap()[0];
        assert!((f + ONE).norm() < 1e-12);
    }

    #[test]
    fn eigenbasis_sum_matches_dense_products() {
        let h = ising(5);
        let s = EdSolver::new(&h).unwrap();
        let cases = [("ZIIII", "IIZII"), ("YIIII", "IIIXI"), ("XIIII", "IYIII")];
        for (w, v) in cases {
            let (w, v) = (PauliString::parse(w).unwrap(), PauliString::parse(v).unwrap());
            let times = [0.3, 1.7, 4.0];
            let f = s.otoc_series(&w, &v, &times).unwrap();
            for (k, &t) in times.iter().enumerate() {
                assert!((f[k] - dense_otoc(&h, &w, &v, t)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn complex_hamiltonian_path() {
        let n = 4;
        let mut terms = vec![(PauliString::parse("YZII").unwrap(), 0.7), (PauliString::parse("IXYI").unwrap(), 0.4)];
        for r in 0..n {
            terms.push((PauliString::single(n, r, Pauli::X), 0.9));
        }
        let h = SpinChainHamiltonian::from_terms(n, terms, Boundary::Open).unwrap();
        assert!(h.to_dense_real().unwrap().is_none());
        let s = EdSolver::new(&h).unwrap();
        let (w, v) = (PauliString::single(n, 0, Pauli::Z), PauliString::single(n, 3, Pauli::Y));
        let f = s.otoc_series(&w, &v, &[2.0]).unwrap()[0];
        assert!((f - dense_otoc(&h, &w, &v, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn heisenberg_norm_and_time_reversal() {
        let h = ising(4);
        let s = EdSolver::new(&h).unwrap();
        let w = PauliString::single(4, 1, Pauli::X).to_dense().unwrap();
        let wt = s.heisenberg(&w, 2.5).unwrap();
        assert!((wt.normalized_frobenius_sq() - 1.0).abs() < 1e-8);
        let back = s.heisenberg(&wt, -2.5).unwrap();
        assert!((back.matrix() - w.matrix()).norm_l2() < 1e-7);
    }

    #[test]
    fn resource_cap() {
        assert!(matches!(EdSolver::new(&ising(15)), Err(Error::ResourceLimit(_))));
    }
}
