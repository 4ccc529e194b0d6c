//! Pauli-basis decomposition of dense operators and the operator-weight
//! diagnostics built on it.

use crate::error::{Error, Result};
use crate::quantum::{DenseOperator, C64, I};
use serde::Serialize;

/// Largest chain for a full 4^N Pauli decomposition.
pub const MAX_WEIGHT_SITES: usize = 10;

/// Coefficients α(S) = tr(S W)/2^N of W = Σ_S α(S) S.
///
/// The result is indexed by `(row_bits << N) | col_bits` after the transform,
/// where the pair (row bit, col bit) of each site now encodes the label
/// I=(0,0), X=(0,1), Y=(1,0), Z=(1,1). Cost O(N·4^N).
pub fn pauli_coefficients(w: &DenseOperator) -> Result<Vec<C64>> {
    let n = w.num_sites();
    if w.local_dim() != 2 {
        return Err(Error::InvalidInput("Pauli decomposition needs qubits".into()));
    }
    if n > MAX_WEIGHT_SITES {
        return Err(Error::ResourceLimit(format!("Pauli decomposition needs N <= {MAX_WEIGHT_SITES}")));
    }
    let d = 1usize << n;
    let m = w.matrix();
    let mut a: Vec<C64> = (0..d * d).map(|k| m[(k >> n, k & (d - 1))]).collect();
    for site in 0..n {
        let b = n - 1 - site;
        let rbit = 1usize << (b + n);
        let cbit = 1usize << b;
        for k in 0..d * d {
            if k & (rbit | cbit) != 0 {
                continue;
            }
            let (b00, b01, b10, b11) = (a[k], a[k | cbit], a[k | rbit], a[k | rbit | cbit]);
            a[k] = (b00 + b11) * 0.5;
            a[k | cbit] = (b01 + b10) * 0.5;
            a[k | rbit] = I * (b01 - b10) * 0.5;
            a[k | rbit | cbit] = (b00 - b11) * 0.5;
        }
    }
    Ok(a)
}

/// Label (0=I, 1=X, 2=Y, 3=Z) of `site` in a transformed index.
pub fn label_at(index: usize, site: usize, num_sites: usize) -> u8 {
    let b = num_sites - 1 - site;
    let r = (index >> (b + num_sites)) & 1;
    let c = (index >> b) & 1;
    (2 * r + c) as u8
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SiteWeight {
    pub site: usize,
    /// Σ_{S: S_r = I} |α(S)|²
    pub prob_identity: f64,
    /// average of F over the three Paulis on site r
    pub avg_f: f64,
    /// average of C over the three Paulis on site r
    pub avg_c: f64,
}

/// Weight diagnostics at every site, normalized by Σ|α|² (1 for unitary W).
pub fn pauli_weight_profile_all(w_t: &DenseOperator) -> Result<(Vec<SiteWeight>, f64)> {
    let n = w_t.num_sites();
    let a = pauli_coefficients(w_t)?;
    let total: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    let q2 = 4.0;
    let mut out = Vec::with_capacity(n);
    for site in 0..n {
        let p_id: f64 = a
            .iter()
            .enumerate()
            .filter(|(k, _)| label_at(*k, site, n) == 0)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            / total;
        out.push(SiteWeight {
            site,
            prob_identity: p_id,
            avg_f: q2 / (q2 - 1.0) * p_id - 1.0 / (q2 - 1.0),
            avg_c: 2.0 * q2 / (q2 - 1.0) * (1.0 - p_id),
        });
    }
    Ok((out, total))
}

pub fn pauli_weight_profile(w_t: &DenseOperator, site: usize) -> Result<SiteWeight> {
    if site >= w_t.num_sites() {
        return Err(Error::InvalidInput(format!("site {site} out of range")));
    }
    Ok(pauli_weight_profile_all(w_t)?.0[site])
}

#[cfg(test)]
mod tests {
    use super::super::ed::EdSolver;
    use super::super::hamiltonian::{Boundary, IsingCouplings, SpinChainHamiltonian};
    use super::*;
    use crate::quantum::{Pauli, PauliString};

    #[test]
    fn coefficients_of_a_pauli_string() {
        let s = PauliString::parse("XYZI").unwrap();
        let a = pauli_coefficients(&s.to_dense().unwrap()).unwrap();
        let labels = s.labels();
        for (k, c) in a.iter().enumerate() {
            let is_s = (0..4).all(|i| label_at(k, i, 4) == labels[i]);
            let want = if is_s { 1.0 } else { 0.0 };
            assert!((c - C64::new(want, 0.0)).norm() < 1e-14, "{k}");
        }
    }

    #[test]
    fn static_seed_profile() {
        let w = PauliString::single(5, 0, Pauli::Z).to_dense().unwrap();
        let (prof, total) = pauli_weight_profile_all(&w).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(prof[0].prob_identity.abs() < 1e-14);
        assert!((prof[0].avg_c - 8.0 / 3.0).abs() < 1e-12);
        for s in &prof[1..] {
            assert!((s.prob_identity - 1.0).abs() < 1e-14 && s.avg_c.abs() < 1e-12);
        }
    }

    #[test]
    fn average_f_matches_direct_traces() {
        let n = 6;
        let h = SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap();
        let solver = EdSolver::new(&h).unwrap();
        let w = PauliString::single(n, 0, Pauli::Z);
        let wt = solver.heisenberg(&w.to_dense().unwrap(), 1.3).unwrap();
        let (prof, total) = pauli_weight_profile_all(&wt).unwrap();
        assert!((total - 1.0).abs() < 1e-9);
        for r in 0..n {
            let mut direct = 0.0;
            for p in Pauli::NONTRIVIAL {
                direct += solver.otoc_series(&w, &PauliString::single(n, r, p), &[1.3]).unwrap()[0].re / 3.0;
            }
            assert!((prof[r].avg_f - direct).abs() < 1e-9, "site {r}: {} vs {direct}", prof[r].avg_f);
        }
    }
}
