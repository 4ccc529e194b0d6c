use super::{DenseOperator, DenseState, Subsystem, C64};
use crate::error::{Error, Result};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

/// Entropy order α ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyOrder {
    /// α = 1
    VonNeumann,
    /// α = 2
    Renyi2,
}

impl EntropyOrder {
    pub fn from_alpha(alpha: u32) -> Result<Self> {
        match alpha {
            1 => Ok(Self::VonNeumann),
            2 => Ok(Self::Renyi2),
            _ => Err(Error::InvalidInput(format!("entropy order {alpha} not in {{1, 2}}"))),
        }
    }
}

const CLAMP: f64 = 1e-9;

/// Reshapes |ψ⟩ into the (kept × traced) coefficient matrix.
fn split(state: &DenseState, keep: &Subsystem) -> Result<Mat<C64>> {
    let n = state.num_sites();
    let q = state.local_dim();
    if keep.is_empty() {
        return Err(Error::InvalidInput("empty subsystem".into()));
    }
    if keep.sites().iter().any(|&s| s >= n) {
        return Err(Error::InvalidInput(format!("subsystem {:?} outside {n} sites", keep.sites())));
    }
    let rest = keep.complement(n);
    let dk = q.pow(keep.len() as u32);
    let dr = q.pow(rest.len() as u32);
    // flat-index stride of every site
    let stride: Vec<usize> = (0..n).map(|s| q.pow((n - 1 - s) as u32)).collect();
    let offsets = |sites: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut k| {
                let mut off = 0;
                for &s in sites.iter().rev() {
                    off += (k % q) * stride[s];
                    k /= q;
                }
                off
            })
            .collect()
    };
    let ko = offsets(keep.sites(), dk);
    let ro = offsets(rest.sites(), dr);
    let amps = state.amplitudes();
    Ok(Mat::from_fn(dk, dr, |a, c| amps[ko[a] + ro[c]]))
}

/// ρ_keep = tr_rest |ψ⟩⟨ψ|.
pub fn partial_trace(state: &DenseState, keep: &Subsystem) -> Result<DenseOperator> {
    let m = split(state, keep)?;
    let rho = &m * m.adjoint();
    DenseOperator::new(rho, state.local_dim(), keep.len())
}

/// Partial trace of a density matrix.
pub fn partial_trace_operator(rho: &DenseOperator, keep: &Subsystem) -> Result<DenseOperator> {
    let n = rho.num_sites();
    let q = rho.local_dim();
    if keep.is_empty() {
        return Err(Error::InvalidInput("empty subsystem".into()));
    }
    let rest = keep.complement(n);
    let dk = q.pow(keep.len() as u32);
    let dr = q.pow(rest.len() as u32);
    let stride: Vec<usize> = (0..n).map(|s| q.pow((n - 1 - s) as u32)).collect();
    let offset = |sites: &[usize], mut k: usize| {
        let mut off = 0;
        for &s in sites.iter().rev() {
            off += (k % q) * stride[s];
            k /= q;
        }
        off
    };
    let ko: Vec<usize> = (0..dk).map(|k| offset(keep.sites(), k)).collect();
    let ro: Vec<usize> = (0..dr).map(|k| offset(rest.sites(), k)).collect();
    let m = rho.matrix();
    let out = Mat::from_fn(dk, dk, |a, b| ro.iter().map(|&c| m[(ko[a] + c, ko[b] + c)]).sum());
    DenseOperator::new(out, q, keep.len())
}

/// Gram matrix of the smaller side; its nonzero spectrum equals that of ρ_keep.
fn small_gram(state: &DenseState, keep: &Subsystem) -> Result<Mat<C64>> {
    let m = split(state, keep)?;
    Ok(if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m })
}

/// tr ρ_keep².
pub fn purity(state: &DenseState, keep: &Subsystem) -> Result<f64> {
    Ok(small_gram(state, keep)?.squared_norm_l2())
}

fn entropy_from_eigs(eigs: &[f64], order: EntropyOrder) -> Result<f64> {
    if let Some(&e) = eigs.iter().find(|&&e| e < -CLAMP) {
        return Err(Error::Numerical(format!("density matrix has eigenvalue {e:e}")));
    }
    let clean = eigs.iter().map(|&e| if e <= CLAMP { 0.0 } else { e });
    Ok(match order {
        EntropyOrder::VonNeumann => -clean.filter(|&e| e > 0.0).map(|e| e * e.log2()).sum::<f64>(),
        EntropyOrder::Renyi2 => -clean.map(|e| e * e).sum::<f64>().log2(),
    }
    .max(0.0))
}

/// Entropy in bits of a density matrix.
pub fn entropy(rho: &DenseOperator, order: EntropyOrder) -> Result<f64> {
    let eigs = rho
        .matrix()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    entropy_from_eigs(&eigs, order)
}

/// Entropy in bits of the reduced state of `keep`.
pub fn entropy_of_state(state: &DenseState, keep: &Subsystem, order: EntropyOrder) -> Result<f64> {
    if keep.len() == state.num_sites() {
        return Ok(0.0);
    }
    match order {
        EntropyOrder::Renyi2 => Ok((-purity(state, keep)?.log2()).max(0.0)),
        EntropyOrder::VonNeumann => {
            let g = small_gram(state, keep)?;
            let eigs = g
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
            entropy_from_eigs(&eigs, order)
        }
    }
}

/// I(A:B) = S(A) + S(B) − S(AB) in bits.
pub fn mutual_information(
    state: &DenseState,
    a: &Subsystem,
    b: &Subsystem,
    order: EntropyOrder,
) -> Result<f64> {
    if !a.is_disjoint(b) {
        return Err(Error::InvalidInput("mutual information of overlapping subsystems".into()));
    }
    let sa = entropy_of_state(state, a, order)?;
    let sb = entropy_of_state(state, b, order)?;
    let sab = entropy_of_state(state, &a.union(b), order)?;
    Ok(sa + sb - sab)
}

#[cfg(test)]
mod tests {
    use super::super::{random_state, seeded_rng, ZERO};
    use super::*;
    use proptest::prelude::*;

    fn st(amps: &[f64]) -> DenseState {
        DenseState::qubits(amps.iter().map(|&a| C64::new(a, 0.0)).collect()).unwrap()
    }

    fn bell() -> DenseState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        st(&[h, 0.0, 0.0, h])
    }

    fn ghz3() -> DenseState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        st(&[h, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, h])
    }

    fn close(a: &DenseOperator, want: &[&[f64]]) {
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!((a.matrix()[(i, j)] - C64::new(w, 0.0)).norm() < 1e-12);
            }
        }
    }

    fn sub(s: &[usize], n: usize) -> Subsystem {
        Subsystem::new(s.iter().copied(), n).unwrap()
    }

    #[test]
    fn partial_trace_examples() {
        close(&partial_trace(&st(&[0.0, 1.0, 0.0, 0.0]), &sub(&[0], 2)).unwrap(), &[&[1.0, 0.0], &[0.0, 0.0]]);
        close(&partial_trace(&bell(), &sub(&[0], 2)).unwrap(), &[&[0.5, 0.0], &[0.0, 0.5]]);
        let r = partial_trace(&ghz3(), &sub(&[0, 1], 3)).unwrap();
        close(&r, &[&[0.5, 0.0, 0.0, 0.0], &[0.0; 4], &[0.0; 4], &[0.0, 0.0, 0.0, 0.5]]);
        assert!(partial_trace(&bell(), &Subsystem::range(0..0)).is_err());
    }

    #[test]
    fn partial_trace_of_operator_agrees() {
        let psi = random_state(2, 4, &mut seeded_rng(3)).unwrap();
        let a = psi.amplitudes();
        let rho = DenseOperator::qubits(Mat::from_fn(16, 16, |i, j| a[i] * a[j].conj())).unwrap();
        let keep = sub(&[1, 3], 4);
        let x = partial_trace_operator(&rho, &keep).unwrap();
        let y = partial_trace(&psi, &keep).unwrap();
        assert!((x.matrix() - y.matrix()).norm_l2() < 1e-13);
    }

    #[test]
    fn entropy_examples() {
        let half = DenseOperator::qubits(Mat::from_fn(2, 2, |i, j| if i == j { C64::new(0.5, 0.0) } else { ZERO })).unwrap();
        assert!((entropy(&half, EntropyOrder::VonNeumann).unwrap() - 1.0).abs() < 1e-12);
        let pure = DenseOperator::qubits(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { C64::new(1.0, 0.0) } else { ZERO })).unwrap();
        assert!(entropy(&pure, EntropyOrder::Renyi2).unwrap().abs() < 1e-12);
        let d = DenseOperator::qubits(Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.75, 0.0),
            (1, 1) => C64::new(0.25, 0.0),
            _ => ZERO,
        }))
        .unwrap();
        let s2 = entropy(&d, EntropyOrder::Renyi2).unwrap();
        assert!((s2 + (10.0f64 / 16.0).log2()).abs() < 1e-12);
        assert!((s2 - 0.678).abs() < 1e-3);
    }

    #[test]
    fn entropy_rejects_negative_eigenvalue() {
        let bad = DenseOperator::qubits(Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(1.1, 0.0),
            (1, 1) => C64::new(-0.1, 0.0),
            _ => ZERO,
        }))
        .unwrap();
        assert!(matches!(entropy(&bad, EntropyOrder::VonNeumann), Err(Error::Numerical(_))));
        assert!(EntropyOrder::from_alpha(3).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let vn = EntropyOrder::VonNeumann;
        assert!((mutual_information(&bell(), &sub(&[0], 2), &sub(&[1], 2), vn).unwrap() - 2.0).abs() < 1e-12);
        let prod = DenseState::zeros(3).unwrap();
        assert!(mutual_information(&prod, &sub(&[0], 3), &sub(&[2], 3), vn).unwrap().abs() < 1e-12);
        assert!((mutual_information(&ghz3(), &sub(&[0], 3), &sub(&[1], 3), vn).unwrap() - 1.0).abs() < 1e-12);
        assert!(mutual_information(&ghz3(), &sub(&[0, 1], 3), &sub(&[1], 3), vn).is_err());
    }

    fn s(psi: &DenseState, sites: &[usize]) -> f64 {
        entropy_of_state(psi, &sub(sites, psi.num_sites()), EntropyOrder::VonNeumann).unwrap()
    }

    #[test]
    fn entropy_inequalities_on_random_states() {
        // subadditivity, triangle (Araki-Lieb), strong subadditivity
        let mut rng = seeded_rng(11);
        for k in 0..1000 {
            let n = 3 + k % 2;
            let psi = random_state(2, n, &mut rng).unwrap();
            let (a, b) = (&[0usize][..], &[1usize][..]);
            let (sa, sb) = (s(&psi, a), s(&psi, b));
            let (sab, sbc, sabc) = (s(&psi, &[0, 1]), s(&psi, &[1, 2]), s(&psi, &[0, 1, 2]));
            assert!(sab <= sa + sb + 1e-9);
            assert!(sab >= (sa - sb).abs() - 1e-9);
            assert!(sabc + sb <= sab + sbc + 1e-9);
            let s2 = entropy_of_state(&psi, &sub(&[0, 1], n), EntropyOrder::Renyi2).unwrap();
            assert!(s2 <= sab + 1e-9);
            // pure state: S(A) = S(complement)
            let comp: Vec<usize> = (1..n).collect();
            assert!((sa - s(&psi, &comp)).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn reduced_states_are_valid(seed in 0u64..10_000, mask in 1u32..15) {
            let psi = random_state(2, 4, &mut seeded_rng(seed)).unwrap();
            let keep = Subsystem::new((0..4).filter(|i| mask >> i & 1 == 1), 4).unwrap();
            let rho = partial_trace(&psi, &keep).unwrap();
            prop_assert!(rho.is_hermitian(1e-10));
            prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
            let eigs = rho.matrix().self_adjoint_eigenvalues(Side::Lower).unwrap();
            prop_assert!(eigs.iter().all(|&e| e > -1e-10));
            let vn = entropy(&rho, EntropyOrder::VonNeumann).unwrap();
            prop_assert!(vn <= keep.len() as f64 + 1e-9);
            prop_assert!(entropy(&rho, EntropyOrder::Renyi2).unwrap() <= vn + 1e-9);
            let mi = mutual_information(&psi, &Subsystem::new([0], 4).unwrap(), &Subsystem::new([3], 4).unwrap(), EntropyOrder::VonNeumann).unwrap();
            let bound = 2.0 * s(&psi, &[0]).min(s(&psi, &[3]));
            prop_assert!(mi >= -1e-9 && mi <= bound + 1e-9);
        }
    }
}
