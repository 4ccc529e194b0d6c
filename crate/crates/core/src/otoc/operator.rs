//! Krylov-Operator: Heisenberg evolution of W as a vector in operator space.

use super::hamiltonian::{LinearOperator, SpinChainHamiltonian};
use super::krylov::krylov_evolve;
use crate::error::{Error, Result};
use crate::quantum::{PauliString, C64, ZERO};

/// Largest chain for operator-space Krylov evolution.
pub const MAX_KRYLOV_OPERATOR_SITES: usize = 12;
/// Memory budget for the operator-space Krylov basis, in bytes.
pub const KRYLOV_OPERATOR_MEMORY: usize = 2 << 30;

/// X ↦ XH − HX on column-major d×d matrices, so that
/// e^{−i(this)t} X = e^{iHt} X e^{−iHt}.
struct Liouvillian<'a> {
    h: &'a SpinChainHamiltonian,
    d: usize,
}

impl LinearOperator for Liouvillian<'_> {
    fn dim(&self) -> usize {
        self.d * self.d
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let d = self.d;
        // HX column by column
        for j in 0..d {
            self.h.apply(&x[j * d..(j + 1) * d], &mut y[j * d..(j + 1) * d]);
            y[j * d..(j + 1) * d].iter_mut().for_each(|v| *v = -*v);
        }
        // XH = (H X†)† for Hermitian H
        let mut row = vec![ZERO; d];
        let mut out = vec![ZERO; d];
        for i in 0..d {
            for j in 0..d {
                row[j] = x[j * d + i].conj();
            }
            self.h.apply(&row, &mut out);
            for j in 0..d {
                y[j * d + i] += out[j].conj();
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        2.0 * self.h.norm_bound()
    }
}

/// F(t) for each time, evolving W once in operator space.
pub fn krylov_operator_series(
    h: &SpinChainHamiltonian,
    w: &PauliString,
    probes: &[PauliString],
    times: &[f64],
    krylov_dim: usize,
) -> Result<Vec<Vec<C64>>> {
    let n = h.num_sites();
    if n > MAX_KRYLOV_OPERATOR_SITES {
        return Err(Error::ResourceLimit(format!("Krylov-Operator needs N <= {MAX_KRYLOV_OPERATOR_SITES}")));
    }
    let d = 1usize << n;
    if (krylov_dim + 2) * d * d * std::mem::size_of::<C64>() > KRYLOV_OPERATOR_MEMORY {
        return Err(Error::ResourceLimit(format!(
            "Krylov-Operator basis of {krylov_dim} vectors of size 4^{n} exceeds memory budget"
        )));
    }
    if times.windows(2).any(|x| x[1] < x[0]) {
        return Err(Error::InvalidInput("times must be ascending".into()));
    }
    let lv = Liouvillian { h, d };
    let mut wt = w.to_dense()?.into_matrix();
    let mut vec_w: Vec<C64> = (0..d * d).map(|k| wt[(k % d, k / d)]).collect();
    let mut out = vec![Vec::with_capacity(times.len()); probes.len()];
    let mut now = 0.0;
    for &t in times {
        if t > now {
            vec_w = krylov_evolve(&lv, &vec_w, t - now, krylov_dim)?.0;
            now = t;
        }
        wt = faer::Mat::from_fn(d, d, |i, j| vec_w[j * d + i]);
        for (r, v) in probes.iter().enumerate() {
            let (xm, zm) = v.index_masks()?;
            let yp = v.y_phase();
            // (W V)_{ij} = W_{i, j⊕x} · phase(j⊕x)
            let wv = |i: usize, j: usize| {
                let (ph, _) = PauliString::act_on_basis(j ^ xm, xm, zm, yp);
                wt[(i, j ^ xm)] * ph
            };
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    acc += wv(i, j) * wv(j, i);
                }
            }
            out[r].push(acc / d as f64);
        }
    }
    Ok(out)
}
