//! Krylov-State: OTOCs from Haar-random states evolved by Lanczos.

use super::hamiltonian::SpinChainHamiltonian;
use super::krylov::krylov_evolve;
use crate::error::{Error, Result};
use crate::quantum::{inner_product, random_state, stream_rng, PauliString, C64};
use rayon::prelude::*;

/// Per-state estimates ⟨ψ|W(t)VW(t)V|ψ⟩, indexed [state][probe][time].
///
/// With ψ_t = e^{−iHt}ψ and φ_t = e^{−iHt}Vψ (both advanced incrementally),
/// W(t)Vψ = e^{iHt}Wφ_t and V W(t)ψ = V e^{iHt}Wψ_t, so
/// F = ⟨V e^{iHt}Wψ_t | e^{iHt}Wφ_t⟩ costs one back-evolution per probe
/// plus one shared by all probes.
pub fn typical_state_samples(
    h: &SpinChainHamiltonian,
    w: &PauliString,
    probes: &[PauliString],
    times: &[f64],
    krylov_dim: usize,
    num_states: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<C64>>>> {
    let n = h.num_sites();
    if w.len() != n || probes.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch("operators do not match the chain".into()));
    }
    if times.windows(2).any(|x| x[1] < x[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidInput("times must be non-negative and ascending".into()));
    }
    if num_states == 0 {
        return Err(Error::InvalidInput("need at least one typical state".into()));
    }
    (0..num_states as u64)
        .into_par_iter()
        .map(|k| -> Result<Vec<Vec<C64>>> {
            let psi = random_state(2, n, &mut stream_rng(seed, k))?.into_amplitudes();
            let mut psi_t = psi.clone();
            let mut phi_t: Vec<Vec<C64>> = probes.iter().map(|v| v.apply(&psi)).collect::<Result<_>>()?;
            let mut out = vec![Vec::with_capacity(times.len()); probes.len()];
            let mut now = 0.0;
            for &t in times {
                let dt = t - now;
                if dt > 0.0 {
                    psi_t = krylov_evolve(h, &psi_t, dt, krylov_dim)?.0;
                    for phi in phi_t.iter_mut() {
                        *phi = krylov_evolve(h, phi, dt, krylov_dim)?.0;
                    }
                    now = t;
                }
                let b = krylov_evolve(h, &w.apply(&psi_t)?, -t, krylov_dim)?.0;
                for (r, v) in probes.iter().enumerate() {
                    let a = krylov_evolve(h, &w.apply(&phi_t[r])?, -t, krylov_dim)?.0;
                    let vb = v.apply(&b)?;
                    out[r].push(inner_product(&vb, &a));
                }
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::ed::EdSolver;
    use super::super::hamiltonian::{Boundary, IsingCouplings};
    use super::*;
    use crate::quantum::Pauli;

    #[test]
    fn commuting_operators_at_zero_time() {
        let n = 6;
        let h = SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap();
        let w = PauliString::single(n, 0, Pauli::Z);
        let v = PauliString::single(n, 3, Pauli::Z);
        let s = typical_state_samples(&h, &w, &[v], &[0.0], 20, 3, 1).unwrap();
        for state in &s {
            assert!((state[0][0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_state_is_exact_expectation() {
        // compare one state's estimate against ⟨ψ|O|ψ⟩ from dense algebra
        let n = 5;
        let h = SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap();
        let w = PauliString::single(n, 0, Pauli::X);
        let v = PauliString::single(n, 2, Pauli::Z);
        let t = 1.1;
        let est = typical_state_samples(&h, &w, &[v.clone()], &[t], 25, 1, 9).unwrap()[0][0][0];
        let solver = EdSolver::new(&h).unwrap();
        let wt = solver.heisenberg(&w.to_dense().unwrap(), t).unwrap();
        let vd = v.to_dense().unwrap();
        let o = wt.mul(&vd).unwrap().mul(&wt).unwrap().mul(&vd).unwrap();
        let psi = random_state(2, n, &mut stream_rng(9, 0)).unwrap();
        let want = inner_product(psi.amplitudes(), &o.apply(psi.amplitudes()).unwrap());
        assert!((est - want).norm() < 1e-8);
    }
}
