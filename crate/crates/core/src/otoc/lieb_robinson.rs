//! Certifies exact commutator norms against the Lieb–Robinson bound
//! ‖[W(t), V]‖ ≤ 2‖V‖‖W‖·min(1, e^{4eJt − r}), J = max bond norm.

use super::ed::EdSolver;
use super::hamiltonian::SpinChainHamiltonian;
use crate::error::{Error, Result};
use crate::quantum::{matrix_norms, PauliString, I};
use faer::Side;
use serde::Serialize;

pub const MAX_LR_SITES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LrPoint {
    pub t: f64,
    pub distance: usize,
    pub exact: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LrCertificate {
    /// J = max_r ‖h_r‖∞
    pub coupling: f64,
    pub points: Vec<LrPoint>,
    /// points with r > 4eJt
    pub in_regime: usize,
    /// points where exact > bound (beyond 1e-12 round-off)
    pub violations: usize,
}

pub fn lr_bound(norm_w: f64, norm_v: f64, coupling: f64, t: f64, distance: usize) -> f64 {
    let e = std::f64::consts::E;
    2.0 * norm_v * norm_w * (4.0 * e * coupling * t - distance as f64).exp().min(1.0)
}

fn distance(a: &PauliString, b: &PauliString) -> usize {
    let (sa, sb) = (a.support(), b.support());
    let mut best = usize::MAX;
    for &i in &sa {
        for &j in &sb {
            best = best.min(i.abs_diff(j));
        }
    }
    best
}

pub fn lieb_robinson_certificate(
    h: &SpinChainHamiltonian,
    w: &PauliString,
    probes: &[PauliString],
    times: &[f64],
) -> Result<LrCertificate> {
    if !h.is_nearest_neighbor() {
        return Err(Error::InvalidInput("Lieb–Robinson certificate needs a nearest-neighbour chain".into()));
    }
    if h.num_sites() > MAX_LR_SITES {
        return Err(Error::ResourceLimit(format!("exact commutator norms need N <= {MAX_LR_SITES}")));
    }
    if w.weight() == 0 || probes.iter().any(|p| p.weight() == 0) {
        return Err(Error::InvalidInput("operators need non-empty support".into()));
    }
    let coupling = h
        .bond_terms()?
        .iter()
        .map(|b| matrix_norms(b).map(|n| n.operator_norm))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let solver = EdSolver::new(h)?;
    let wd = w.to_dense()?;
    let vds = probes.iter().map(|p| p.to_dense()).collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let e = std::f64::consts::E;
    for &t in times {
        let wt = solver.heisenberg(&wd, t)?;
        for (p, vd) in probes.iter().zip(&vds) {
            let comm = wt.commutator(vd)?;
            let herm = comm.scale(I).into_matrix();
            let eigs = herm
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
            let exact = eigs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            let r = distance(w, p);
            points.push(LrPoint { t, distance: r, exact, bound: lr_bound(1.0, 1.0, coupling, t, r) });
        }
    }
    let in_regime = points.iter().filter(|p| p.distance as f64 > 4.0 * e * coupling * p.t).count();
    let violations = points.iter().filter(|p| p.exact > p.bound + 1e-12).count();
    Ok(LrCertificate { coupling, points, in_regime, violations })
}
