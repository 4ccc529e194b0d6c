use crate::error::{Error, Result};
use crate::quantum::{DenseOperator, Pauli, PauliString, C64, ONE, ZERO};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Something that can multiply a vector: y = A x.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Cheap upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;
}

/// Qubit chain Hamiltonian as a real combination of Pauli strings.
#[derive(Clone, Debug)]
pub struct SpinChainHamiltonian {
    num_sites: usize,
    terms: Vec<(PauliString, f64)>,
    /// couplings of the mixed-field Ising point this was built from, if any
    pub couplings: Option<IsingCouplings>,
    pub boundary: Boundary,
    // precomputed masks: (xmask, zmask, i^{#Y}·coef)
    masks: Vec<(usize, usize, C64)>,
    // off-diagonal terms grouped by flip mask
    flips: Vec<(usize, Vec<(usize, C64)>)>,
    diagonal: OnceLock<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingCouplings {
    pub j: f64,
    pub hx: f64,
    pub hz: f64,
}

impl Default for IsingCouplings {
    /// Strongly chaotic point (J, H_x, H_z) = (1, 1.05, 0.5).
    fn default() -> Self {
        Self { j: 1.0, hx: 1.05, hz: 0.5 }
    }
}

impl SpinChainHamiltonian {
    pub fn from_terms(num_sites: usize, terms: Vec<(PauliString, f64)>, boundary: Boundary) -> Result<Self> {
        if num_sites == 0 {
            return Err(Error::InvalidInput("empty chain".into()));
        }
        if terms.iter().any(|(p, c)| p.len() != num_sites || !c.is_finite()) {
            return Err(Error::InvalidInput("term length differs from chain length".into()));
        }
        let masks = if num_sites <= 63 {
            terms
                .iter()
                .map(|(p, c)| {
                    let (xm, zm) = p.index_masks().expect("N <= 63");
                    (xm, zm, p.y_phase() * *c)
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut flips: Vec<(usize, Vec<(usize, C64)>)> = Vec::new();
        for &(xm, zm, c) in masks.iter().filter(|m| m.0 != 0) {
            match flips.iter_mut().find(|f| f.0 == xm) {
                Some(f) => f.1.push((zm, c)),
                None => flips.push((xm, vec![(zm, c)])),
            }
        }
        Ok(Self { num_sites, terms, couplings: None, boundary, masks, flips, diagonal: OnceLock::new() })
    }

    /// H = J Σ Z_r Z_{r+1} + Σ (H_x X_r + H_z Z_r).
    pub fn mixed_field_ising(num_sites: usize, c: IsingCouplings, boundary: Boundary) -> Result<Self> {
        let mut terms = Vec::new();
        let bonds = match boundary {
            Boundary::Open => num_sites.saturating_sub(1),
            Boundary::Periodic if num_sites > 2 => num_sites,
            Boundary::Periodic => num_sites.saturating_sub(1),
        };
        for r in 0..bonds {
            let mut p = PauliString::identity(num_sites);
            p.set(r, Pauli::Z);
            p.set((r + 1) % num_sites, Pauli::Z);
            terms.push((p, c.j));
        }
        for r in 0..num_sites {
            if c.hx != 0.0 {
                terms.push((PauliString::single(num_sites, r, Pauli::X), c.hx));
            }
            if c.hz != 0.0 {
                terms.push((PauliString::single(num_sites, r, Pauli::Z), c.hz));
            }
        }
        let mut h = Self::from_terms(num_sites, terms, boundary)?;
        h.couplings = Some(c);
        Ok(h)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Diagonal of H in the computational basis (built on first use).
    pub fn diagonal(&self) -> &[f64] {
        self.diagonal.get_or_init(|| {
            let d = 1usize << self.num_sites;
            let diag_terms: Vec<(usize, f64)> =
                self.masks.iter().filter(|m| m.0 == 0).map(|m| (m.1, m.2.re)).collect();
            (0..d)
                .map(|i| {
                    diag_terms
                        .iter()
                        .map(|&(zm, c)| if (i & zm).count_ones() % 2 == 1 { -c } else { c })
                        .sum()
                })
                .collect()
        })
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let d = 1usize << self.num_sites;
        let mut mat = Mat::<C64>::zeros(d, d);
        for &(xm, zm, c) in &self.masks {
            for i in 0..d {
                let (ph, j) = PauliString::act_on_basis(i, xm, zm, c);
                mat[(j, i)] += ph;
            }
        }
        DenseOperator::new(mat, 2, self.num_sites)
    }

    /// Real symmetric form, available when every term has an even number of Y factors.
    pub fn to_dense_real(&self) -> Result<Option<Mat<f64>>> {
        if self.masks.iter().any(|m| m.2.im != 0.0) {
            return Ok(None);
        }
        let dense = self.to_dense()?;
        let m = dense.matrix();
        Ok(Some(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)))
    }

    /// Terms supported on at most two neighbouring sites of an open chain.
    pub fn is_nearest_neighbor(&self) -> bool {
        self.terms.iter().all(|(p, _)| {
            let s = p.support();
            s.len() <= 1 || (s.len() == 2 && s[1] == s[0] + 1)
        })
    }

    /// Two-site bond Hamiltonians h_r on (r, r+1) with H = Σ_r h_r.
    ///
    /// Single-site terms are shared half/half between the two bonds touching
    /// the site; the first and last sites give their full weight to their
    /// only bond.
    pub fn bond_terms(&self) -> Result<Vec<Mat<C64>>> {
        if !self.is_nearest_neighbor() {
            return Err(Error::InvalidInput("Hamiltonian is not nearest-neighbour on an open chain".into()));
        }
        let n = self.num_sites;
        if n < 2 {
            return Err(Error::InvalidInput("bond decomposition needs N >= 2".into()));
        }
        let mut bonds = vec![Mat::<C64>::zeros(4, 4); n - 1];
        let id = Pauli::I.matrix();
        for (p, c) in &self.terms {
            let s = p.support();
            match s.len() {
                0 => {
                    // constant: spread evenly
                    let share = *c / (n - 1) as f64;
                    for b in bonds.iter_mut() {
                        for k in 0..4 {
                            b[(k, k)] += ONE * share;
                        }
                    }
                }
                1 => {
                    let r = s[0];
                    let local = p.get(r).matrix();
                    let mut add = |bond: usize, on_left: bool, w: f64| {
                        let m = if on_left { kron2(&local, &id) } else { kron2(&id, &local) };
                        for i in 0..4 {
                            for j in 0..4 {
                                bonds[bond][(i, j)] += m[(i, j)] * (*c * w);
                            }
                        }
                    };
                    if r == 0 {
                        add(0, true, 1.0);
                    } else if r == n - 1 {
                        add(n - 2, false, 1.0);
                    } else {
                        add(r - 1, false, 0.5);
                        add(r, true, 0.5);
                    }
                }
                _ => {
                    let r = s[0];
                    let m = kron2(&p.get(r).matrix(), &p.get(r + 1).matrix());
                    for i in 0..4 {
                        for j in 0..4 {
                            bonds[r][(i, j)] += m[(i, j)] * *c;
                        }
                    }
                }
            }
        }
        Ok(bonds)
    }
}

pub(crate) fn kron2(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(4, 4, |i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

impl LinearOperator for SpinChainHamiltonian {
    fn dim(&self) -> usize {
        1usize << self.num_sites
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let diag = self.diagonal();
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(diag) {
            *yi = xi * *d;
        }
        for (xm, group) in &self.flips {
            if let [(0, c)] = group.as_slice() {
                for (i, xi) in x.iter().enumerate() {
                    y[i ^ xm] += c * xi;
                }
                continue;
            }
            for (i, xi) in x.iter().enumerate() {
                let mut ph = ZERO;
                for &(zm, c) in group {
                    if (i & zm).count_ones() % 2 == 1 {
                        ph -= c;
                    } else {
                        ph += c;
                    }
                }
                y[i ^ xm] += ph * xi;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }
}

/// Dense Hermitian matrix as a [`LinearOperator`].
pub struct DenseHermitian<'a>(pub &'a Mat<C64>);

impl LinearOperator for DenseHermitian<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let xv = faer::MatRef::from_column_major_slice(x, x.len(), 1);
        let r = self.0 * xv;
        y.copy_from_slice(r.col_as_slice(0));
    }

    fn norm_bound(&self) -> f64 {
        self.0.norm_l2()
    }
}
