//! Lanczos propagation e^{−iAt}|ψ⟩ for Hermitian A.

use super::hamiltonian::LinearOperator;
use crate::error::{Error, Result};
use crate::quantum::{inner_product, C64, ZERO};
use faer::{Mat, Side};

/// Tolerance on the next-basis-vector contribution accepted per substep.
pub const SUBSTEP_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
    /// an invariant subspace was hit; the result is exact within it
    pub breakdown: bool,
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// coupling to the first vector outside the basis
    beta_next: f64,
    breakdown: bool,
}

fn lanczos<A: LinearOperator + ?Sized>(op: &A, v0: Vec<C64>, m: usize, scale: f64) -> Lanczos {
    let d = v0.len();
    let mut basis = vec![v0];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![ZERO; d];
    let mut beta_next = 0.0;
    let mut breakdown = false;
    for j in 0..m {
        op.apply(&basis[j], &mut w);
        let a = inner_product(&basis[j], &w).re;
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        // no full reorthogonalization: the substep error check keeps the
        // Ritz values far from convergence, where orthogonality holds well
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if b <= 1e-12 * scale.max(1.0) {
            breakdown = true;
            break;
        }
        if j + 1 == m {
            beta_next = b;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Lanczos { basis, alpha, beta, beta_next, breakdown }
}

/// e^{−i·op·t}|ψ⟩ by adaptive Lanczos substeps.
///
/// Each substep builds one Krylov space and takes the largest step (halving
/// from the previous accepted step doubled) whose truncation estimate
/// β_m |⟨e_m| e^{−iTτ} e_1⟩| stays below [`SUBSTEP_TOLERANCE`].
pub fn krylov_evolve<A: LinearOperator + ?Sized>(
    op: &A,
    psi: &[C64],
    t: f64,
    krylov_dim: usize,
) -> Result<(Vec<C64>, KrylovStats)> {
    if psi.len() != op.dim() {
        return Err(Error::DimensionMismatch("state does not match operator".into()));
    }
    if krylov_dim < 2 {
        return Err(Error::InvalidInput("Krylov dimension must be >= 2".into()));
    }
    let mut stats = KrylovStats::default();
    let norm0 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if t == 0.0 || norm0 == 0.0 {
        return Ok((psi.to_vec(), stats));
    }
    let m = krylov_dim.min(op.dim());
    let scale = op.norm_bound();
    let sign = t.signum();
    let mut remaining = t.abs();
    let mut v: Vec<C64> = psi.iter().map(|x| x / norm0).collect();
    let mut step = remaining;
    while remaining > 0.0 {
        let lz = lanczos(op, v, m, scale);
        stats.matvecs += lz.alpha.len();
        stats.breakdown |= lz.breakdown;
        let k = lz.alpha.len();
        let t_mat = Mat::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                lz.alpha[i]
            } else if i + 1 == j {
                lz.beta[i]
            } else if j + 1 == i {
                lz.beta[j]
            } else {
                0.0
            }
        });
        let eig = t_mat
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("tridiagonal eigensolver: {e:?}")))?;
        let (u, theta) = (eig.U(), eig.S().column_vector());
        let coeffs = |tau: f64| -> Vec<C64> {
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| C64::from_polar(u[(0, j)], -sign * theta[j] * tau) * u[(i, j)])
                        .sum()
                })
                .collect()
        };
        let mut tau = step.min(remaining);
        let mut c = coeffs(tau);
        if !lz.breakdown {
            let mut halvings = 0;
            while lz.beta_next * c[k - 1].norm() > SUBSTEP_TOLERANCE {
                tau *= 0.5;
                halvings += 1;
                if halvings > 60 {
                    return Err(Error::Numerical("Krylov substep underflow".into()));
                }
                c = coeffs(tau);
            }
        } else {
            tau = remaining;
            c = coeffs(tau);
        }
        let d = lz.basis[0].len();
        let mut next = vec![ZERO; d];
        for (cj, bj) in c.iter().zip(&lz.basis) {
            for (ni, bi) in next.iter_mut().zip(bj) {
                *ni += cj * bi;
            }
        }
        let nrm = next.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        next.iter_mut().for_each(|x| *x /= nrm);
        v = next;
        remaining -= tau;
        if remaining < 1e-14 * t.abs() {
            remaining = 0.0;
        }
        step = 2.0 * tau;
        stats.substeps += 1;
    }
    v.iter_mut().for_each(|x| *x *= norm0);
    Ok((v, stats))
}

#[cfg(test)]
mod tests {
    use super::super::hamiltonian::{Boundary, DenseHermitian, IsingCouplings, SpinChainHamiltonian};
    use super::*;
    use crate::quantum::{random_state, seeded_rng, Pauli, I, ONE};

    /// e^{−iHt} via the eigendecomposition of a dense Hermitian H.
    fn dense_expm_apply(h: &Mat<C64>, psi: &[C64], t: f64) -> Vec<C64> {
        let eig = h.self_adjoint_eigen(Side::Lower).unwrap();
        let (u, e) = (eig.U(), eig.S().column_vector());
        let d = psi.len();
        let coeff: Vec<C64> = (0..d)
            .map(|j| (0..d).map(|i| u[(i, j)].conj() * psi[i]).sum::<C64>() * C64::from_polar(1.0, -e[j].re * t))
            .collect();
        (0..d).map(|i| (0..d).map(|j| u[(i, j)] * coeff[j]).sum()).collect()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = SpinChainHamiltonian::mixed_field_ising(4, IsingCouplings::default(), Boundary::Open).unwrap();
        let psi = random_state(2, 4, &mut seeded_rng(1)).unwrap();
        let (out, _) = krylov_evolve(&h, psi.amplitudes(), 0.0, 10).unwrap();
        assert_eq!(out, psi.amplitudes());
    }

    #[test]
    fn single_qubit_sigma_z() {
        let z = Pauli::Z.matrix();
        let h = 1.0 / 2f64.sqrt();
        let plus = vec![ONE * h, ONE * h];
        let (out, stats) = krylov_evolve(&DenseHermitian(&z), &plus, std::f64::consts::FRAC_PI_4, 4).unwrap();
        let want = [C64::from_polar(h, -std::f64::consts::FRAC_PI_4), C64::from_polar(h, std::f64::consts::FRAC_PI_4)];
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(stats.breakdown, "two-dimensional space is invariant");
        let _ = I;
    }

    #[test]
    fn matches_dense_exponential_n8() {
        let h = SpinChainHamiltonian::mixed_field_ising(8, IsingCouplings::default(), Boundary::Open).unwrap();
        let dense = h.to_dense().unwrap();
        let psi = random_state(2, 8, &mut seeded_rng(5)).unwrap();
        let (out, stats) = krylov_evolve(&h, psi.amplitudes(), 5.0, 30).unwrap();
        let want = dense_expm_apply(dense.matrix(), psi.amplitudes(), 5.0);
        let overlap = inner_product(&want, &out).norm();
        assert!(overlap >= 1.0 - 1e-7, "overlap {overlap}");
        let norm = out.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-8);
        assert!(stats.substeps > 1);
        let err = out.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-7, "error {err}");
    }

    #[test]
    fn backward_evolution_inverts_forward() {
        let h = SpinChainHamiltonian::mixed_field_ising(6, IsingCouplings::default(), Boundary::Periodic).unwrap();
        let psi = random_state(2, 6, &mut seeded_rng(8)).unwrap();
        let (fwd, _) = krylov_evolve(&h, psi.amplitudes(), 3.0, 20).unwrap();
        let (back, _) = krylov_evolve(&h, &fwd, -3.0, 20).unwrap();
        let err = back.iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8);
    }
}
