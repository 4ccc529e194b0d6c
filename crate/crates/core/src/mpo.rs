//! Operator tensor trains and TEBD in the Heisenberg picture.
//!
//! A Hermitian operator W = Σ c(s_0..s_{N-1}) σ_{s_0} ⊗ … ⊗ σ_{s_{N-1}} is
//! stored through its real Pauli coefficients, one rank-3 tensor per site
//! with shape (left bond, 4, right bond). In this basis the normalized
//! Frobenius norm tr(W†W)/2^N is the plain Euclidean norm of the train,
//! two-site gates act as real 16×16 Pauli transfer matrices, and the squared
//! commutator with a single-site probe only needs the label weights at the
//! orthogonality centre.

use crate::error::{invalid, Error, Result};
use crate::field::SpaceTimeField;
use crate::otoc::SpinChainHamiltonian;
use crate::quantum::{Pauli, PauliString, C64, ZERO};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

/// Largest chain handled by the MPO engine.
pub const MAX_MPO_SITES: usize = 256;
/// Singular values below this fraction of the largest are always dropped.
pub const DEFAULT_SV_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrotterOrder {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TebdConfig {
    pub dt: f64,
    pub order: TrotterOrder,
    pub chi_max: usize,
    pub sv_floor: f64,
}

impl Default for TebdConfig {
    fn default() -> Self {
        Self { dt: 0.005, order: TrotterOrder::Second, chi_max: 32, sv_floor: DEFAULT_SV_FLOOR }
    }
}

impl TebdConfig {
    pub fn with_chi(chi_max: usize) -> Self {
        Self { chi_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("Trotter step {} must be positive", self.dt));
        }
        if self.chi_max == 0 {
            return invalid("bond dimension must be positive");
        }
        if !(0.0..1.0).contains(&self.sv_floor) {
            return invalid("singular-value floor must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct SiteTensor {
    dl: usize,
    dr: usize,
    /// index (l·4 + s)·dr + r
    data: Vec<f64>,
}

impl SiteTensor {
    #[inline]
    fn at(&self, l: usize, s: usize, r: usize) -> f64 {
        self.data[(l * 4 + s) * self.dr + r]
    }

    /// (dl·4) × dr
    fn left_matrix(&self) -> Mat<f64> {
        Mat::from_fn(self.dl * 4, self.dr, |i, j| self.data[i * self.dr + j])
    }

    /// dl × (4·dr)
    fn right_matrix(&self) -> Mat<f64> {
        let w = 4 * self.dr;
        Mat::from_fn(self.dl, w, |i, j| self.data[i * w + j])
    }

    fn from_left_matrix(m: &Mat<f64>) -> Self {
        let (rows, dr) = (m.nrows(), m.ncols());
        let mut data = vec![0.0; rows * dr];
        for i in 0..rows {
            for j in 0..dr {
                data[i * dr + j] = m[(i, j)];
            }
        }
        Self { dl: rows / 4, dr, data }
    }

    fn from_right_matrix(m: &Mat<f64>) -> Self {
        let (dl, w) = (m.nrows(), m.ncols());
        let mut data = vec![0.0; dl * w];
        for i in 0..dl {
            for j in 0..w {
                data[i * w + j] = m[(i, j)];
            }
        }
        Self { dl, dr: w / 4, data }
    }
}

/// Operator tensor train in mixed canonical form around `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTrain {
    sites: Vec<SiteTensor>,
    center: usize,
    /// cumulative sum of discarded squared singular values
    pub discarded_weight: f64,
}

impl TensorTrain {
    /// Product operator given by a Pauli string.
    pub fn from_pauli_string(p: &PauliString) -> Result<Self> {
        if p.is_empty() {
            return invalid("empty operator");
        }
        if p.len() > MAX_MPO_SITES {
            return Err(Error::ResourceLimit(format!("MPO engine handles N <= {MAX_MPO_SITES}")));
        }
        let sites = p
            .labels()
            .into_iter()
            .map(|lab| {
                let mut data = vec![0.0; 4];
                data[lab as usize] = 1.0;
                SiteTensor { dl: 1, dr: 1, data }
            })
            .collect();
        Ok(Self { sites, center: 0, discarded_weight: 0.0 })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_pauli_string(&PauliString::identity(n))
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.dr).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.dr).max().unwrap_or(1)
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// tr(W†W)/2^N by full contraction (does not rely on the gauge).
    pub fn norm_sq(&self) -> f64 {
        let mut env = Mat::<f64>::identity(1, 1);
        for t in &self.sites {
            let mut next = Mat::<f64>::zeros(t.dr, t.dr);
            for s in 0..4 {
                let a = Mat::from_fn(t.dl, t.dr, |l, r| t.at(l, s, r));
                next += a.transpose() * &env * &a;
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// Identity coefficient tr(W)/2^N.
    pub fn normalized_trace(&self) -> f64 {
        let mut v = vec![1.0];
        for t in &self.sites {
            v = (0..t.dr).map(|r| (0..t.dl).map(|l| v[l] * t.at(l, 0, r)).sum()).collect();
        }
        v[0]
    }

    /// All 4^N Pauli coefficients, site 0 slowest. Small N only.
    pub fn pauli_coefficients(&self) -> Result<Vec<f64>> {
        let n = self.num_sites();
        if n > 10 {
            return Err(Error::ResourceLimit("dense coefficient expansion needs N <= 10".into()));
        }
        // rows: prefix labels, columns: current right bond
        let mut cur = vec![1.0];
        let mut width = 1;
        for t in &self.sites {
            let prefixes = cur.len() / width;
            let mut next = vec![0.0; prefixes * 4 * t.dr];
            for p in 0..prefixes {
                for s in 0..4 {
                    for r in 0..t.dr {
                        next[(p * 4 + s) * t.dr + r] = (0..t.dl).map(|l| cur[p * width + l] * t.at(l, s, r)).sum();
                    }
                }
            }
            cur = next;
            width = t.dr;
        }
        Ok(cur)
    }

    fn move_right(&mut self) {
        let c = self.center;
        let m = self.sites[c].left_matrix();
        let qr = m.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R();
        self.sites[c] = SiteTensor::from_left_matrix(&q);
        let next = self.sites[c + 1].right_matrix();
        self.sites[c + 1] = SiteTensor::from_right_matrix(&(r * next));
        self.center = c + 1;
    }

    fn move_left(&mut self) {
        let c = self.center;
        let m = self.sites[c].right_matrix();
        let mt = m.transpose().to_owned();
        let qr = mt.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R();
        self.sites[c] = SiteTensor::from_right_matrix(&q.transpose().to_owned());
        let prev = self.sites[c - 1].left_matrix();
        self.sites[c - 1] = SiteTensor::from_left_matrix(&(prev * r.transpose()));
        self.center = c - 1;
    }

    /// Moves the orthogonality centre to `site` by QR sweeps.
    pub fn move_center(&mut self, site: usize) {
        while self.center < site {
            self.move_right();
        }
        while self.center > site {
            self.move_left();
        }
    }

    /// Applies a 16×16 transfer matrix to sites (b, b+1), truncates, and
    /// leaves the centre at b+1 (`rightward`) or b.
    fn apply_bond(&mut self, b: usize, ptm: &[f64; 256], cfg: &TebdConfig, rightward: bool) -> Result<()> {
        self.move_center(if rightward { b } else { b + 1 });
        let (a, c) = (&self.sites[b], &self.sites[b + 1]);
        let (dl, dr) = (a.dl, c.dr);
        let theta = a.left_matrix() * c.right_matrix();
        // theta row = l·4 + s1, column = s2·dr + r
        let mut out = Mat::<f64>::zeros(dl * 4, 4 * dr);
        let mut v = [0.0; 16];
        for l in 0..dl {
            for r in 0..dr {
                for s1 in 0..4 {
                    for s2 in 0..4 {
                        v[s1 * 4 + s2] = theta[(l * 4 + s1, s2 * dr + r)];
                    }
                }
                for (k, row) in ptm.chunks_exact(16).enumerate() {
                    let x: f64 = row.iter().zip(&v).map(|(p, y)| p * y).sum();
                    out[(l * 4 + k / 4, (k % 4) * dr + r)] = x;
                }
            }
        }
        let svd = out.thin_svd().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
        let mut keep = 0;
        while keep < s.nrows() && keep < cfg.chi_max && s[keep] > cfg.sv_floor * smax && s[keep] > 0.0 {
            keep += 1;
        }
        let keep = keep.max(1);
        self.discarded_weight += (keep..s.nrows()).map(|i| s[i] * s[i]).sum::<f64>();
        let u = svd.U();
        let vm = svd.V();
        let left = Mat::from_fn(dl * 4, keep, |i, j| if rightward { u[(i, j)] } else { u[(i, j)] * s[j] });
        let right = Mat::from_fn(keep, 4 * dr, |i, j| if rightward { s[i] * vm[(j, i)] } else { vm[(j, i)] });
        self.sites[b] = SiteTensor::from_left_matrix(&left);
        self.sites[b + 1] = SiteTensor::from_right_matrix(&right);
        self.center = if rightward { b + 1 } else { b };
        Ok(())
    }

    /// Squared Pauli-label weights at every site, Σ_{strings with label a at r} c².
    ///
    /// Sweeps the centre across the chain, so the train is re-gauged in place.
    pub fn label_weights(&mut self) -> Vec<[f64; 4]> {
        let n = self.num_sites();
        let mut out = vec![[0.0; 4]; n];
        let sweep: Vec<usize> = if self.center <= n / 2 { (0..n).collect() } else { (0..n).rev().collect() };
        for &site in &sweep {
            self.move_center(site);
            let t = &self.sites[site];
            for l in 0..t.dl {
                for s in 0..4 {
                    for r in 0..t.dr {
                        out[site][s] += t.at(l, s, r).powi(2);
                    }
                }
            }
        }
        out
    }

    /// MPO of [W, V_site]/(2i) for a single-site Pauli V; bond dimensions are unchanged.
    pub fn commutator_mpo(&self, site: usize, probe: Pauli) -> Result<TensorTrain> {
        if site >= self.num_sites() {
            return invalid(format!("probe site {site} outside {} sites", self.num_sites()));
        }
        let m = commutator_matrix(probe);
        let mut out = self.clone();
        let t = &self.sites[site];
        let nt = &mut out.sites[site];
        for l in 0..t.dl {
            for r in 0..t.dr {
                for c in 0..4 {
                    nt.data[(l * 4 + c) * t.dr + r] = (0..4).map(|a| m[c][a] * t.at(l, a, r)).sum();
                }
            }
        }
        Ok(out)
    }
}

/// Real part of [σ_a, σ_v]/(2i) expanded on σ_c, scaled so that the squared
/// commutator comes out as 4 Σ c² over anticommuting labels.
fn commutator_matrix(v: Pauli) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    let vl = v.label() as usize;
    if vl == 0 {
        return m;
    }
    for a in (1..4).filter(|&a| a != vl) {
        let c = 6 - a - vl;
        // ε_{a v c}: +1 when (a, v, c) is cyclic
        let eps = if a % 3 + 1 == vl { 1.0 } else { -1.0 };
        m[c][a] = 2.0 * eps;
    }
    m
}

/// Squared commutator C_V = ‖[W, V_r]‖²/2^N from label weights.
pub fn squared_commutator_from_weights(w: &[f64; 4], probe: Option<Pauli>) -> f64 {
    match probe {
        None => 8.0 / 3.0 * (w[1] + w[2] + w[3]),
        Some(v) => {
            let vl = v.label() as usize;
            4.0 * (1..4).filter(|&a| a != vl).map(|a| w[a]).sum::<f64>()
        }
    }
}

fn pauli_matrices() -> [Mat<C64>; 4] {
    Pauli::ALL.map(|p| p.matrix())
}

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(4, 4, |i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

/// exp(−i h τ) for a Hermitian 4×4 bond term.
fn bond_exponential(h: &Mat<C64>, tau: f64) -> Result<Mat<C64>> {
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numerical(format!("bond eigensolver: {e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    Ok(Mat::from_fn(4, 4, |i, j| {
        (0..4).fold(ZERO, |acc, k| acc + u[(i, k)] * C64::from_polar(1.0, -s[k].re * tau) * u[(j, k)].conj())
    }))
}

/// Pauli transfer matrix of W ↦ g† W g.
fn transfer_matrix(g: &Mat<C64>) -> [f64; 256] {
    let p = pauli_matrices();
    let basis: Vec<Mat<C64>> = (0..16).map(|k| kron(&p[k / 4], &p[k % 4])).collect();
    let mut out = [0.0; 256];
    for (col, pb) in basis.iter().enumerate() {
        let img = g.adjoint() * pb * g;
        for (row, pa) in basis.iter().enumerate() {
            let tr = (pa * &img).diagonal().column_vector().iter().fold(ZERO, |acc, x| acc + x);
            out[row * 16 + col] = tr.re / 4.0;
        }
    }
    out
}

/// Brickwork Trotter evolution of operator tensor trains for a
/// nearest-neighbour open-chain Hamiltonian.
#[derive(Clone, Debug)]
pub struct TebdEvolver {
    bonds: Vec<Mat<C64>>,
    pub config: TebdConfig,
    /// true: W ↦ e^{iHt} W e^{−iHt}; false: the inverse direction
    pub heisenberg: bool,
}

impl TebdEvolver {
    pub fn new(h: &SpinChainHamiltonian, config: TebdConfig, heisenberg: bool) -> Result<Self> {
        config.validate()?;
        if h.num_sites() > MAX_MPO_SITES {
            return Err(Error::ResourceLimit(format!("MPO engine handles N <= {MAX_MPO_SITES}")));
        }
        Ok(Self { bonds: h.bond_terms()?, config, heisenberg })
    }

    fn layer_ptms(&self, tau: f64) -> Result<Vec<[f64; 256]>> {
        let sign = if self.heisenberg { 1.0 } else { -1.0 };
        self.bonds.iter().map(|h| Ok(transfer_matrix(&bond_exponential(h, sign * tau)?))).collect()
    }

    fn apply_layer(&self, tt: &mut TensorTrain, parity: usize, ptms: &[[f64; 256]]) -> Result<()> {
        let bonds: Vec<usize> = (parity..self.bonds.len()).step_by(2).collect();
        if bonds.is_empty() {
            return Ok(());
        }
        let rightward = tt.center <= (bonds[0] + bonds[bonds.len() - 1]) / 2;
        let order: Vec<usize> = if rightward { bonds } else { bonds.into_iter().rev().collect() };
        for b in order {
            tt.apply_bond(b, &ptms[b], &self.config, rightward)?;
        }
        Ok(())
    }

    /// Evolves by `duration` with round(duration/dt) equal steps; returns the step used.
    pub fn evolve(&self, tt: &mut TensorTrain, duration: f64) -> Result<f64> {
        if tt.num_sites() != self.bonds.len() + 1 {
            return Err(Error::DimensionMismatch("operator and Hamiltonian lengths differ".into()));
        }
        if duration < 0.0 || !duration.is_finite() {
            return invalid(format!("evolution time {duration} must be non-negative"));
        }
        if duration == 0.0 {
            return Ok(0.0);
        }
        let steps = (duration / self.config.dt).round().max(1.0) as usize;
        let tau = duration / steps as f64;
        match self.config.order {
            TrotterOrder::First => {
                let full = self.layer_ptms(tau)?;
                for _ in 0..steps {
                    self.apply_layer(tt, 0, &full)?;
                    self.apply_layer(tt, 1, &full)?;
                }
            }
            TrotterOrder::Second => {
                // even half-steps of consecutive steps are merged
                let full = self.layer_ptms(tau)?;
                let half = self.layer_ptms(tau / 2.0)?;
                self.apply_layer(tt, 0, &half)?;
                for k in 0..steps {
                    self.apply_layer(tt, 1, &full)?;
                    self.apply_layer(tt, 0, if k + 1 == steps { &half } else { &full })?;
                }
            }
        }
        Ok(tau)
    }
}

/// Heisenberg evolution W(t) = e^{iHt} W e^{−iHt} of `w` to time `t`.
pub fn tebd_evolve_mpo(w: &TensorTrain, h: &SpinChainHamiltonian, t: f64, config: TebdConfig) -> Result<TensorTrain> {
    let mut out = w.clone();
    TebdEvolver::new(h, config, true)?.evolve(&mut out, t)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct MpoField {
    /// C(r, t); the probe Pauli or the average over X, Y, Z
    pub field: SpaceTimeField,
    /// cumulative discarded weight at each recorded time
    pub discarded: Vec<f64>,
    pub max_bond: Vec<usize>,
    pub config: TebdConfig,
}

/// C(r,t) for every site r on an ascending time grid, from the squared
/// Frobenius norm of the commutator MPO. `probe = None` averages X, Y, Z.
pub fn squared_commutator_field(
    w0: &PauliString,
    h: &SpinChainHamiltonian,
    times: &[f64],
    config: TebdConfig,
    probe: Option<Pauli>,
) -> Result<MpoField> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return invalid("times must be non-empty, non-negative and ascending");
    }
    if probe == Some(Pauli::I) {
        return invalid("identity probe commutes with everything");
    }
    if w0.len() != h.num_sites() {
        return Err(Error::DimensionMismatch("operator and Hamiltonian lengths differ".into()));
    }
    let n = w0.len();
    let evolver = TebdEvolver::new(h, config, true)?;
    let mut tt = TensorTrain::from_pauli_string(w0)?;
    let mut field = SpaceTimeField::zeros((0..n).map(|r| r as f64).collect(), times.to_vec(), "tebd-mpo");
    let mut discarded = Vec::with_capacity(times.len());
    let mut max_bond = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for (ti, &t) in times.iter().enumerate() {
        evolver.evolve(&mut tt, t - now)?;
        now = t;
        for (r, w) in tt.label_weights().iter().enumerate() {
            field.set(r, ti, squared_commutator_from_weights(w, probe));
        }
        discarded.push(tt.discarded_weight);
        max_bond.push(tt.max_bond());
    }
    Ok(MpoField { field, discarded, max_bond, config })
}

/// σ_a σ_b = phase · σ_{label}: (phase, label) for labels 0..4.
fn product_table() -> [[(C64, usize); 4]; 4] {
    let mut t = [[(ZERO, 0usize); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let (ph, p) = Pauli::ALL[a].mul(Pauli::ALL[b]);
            t[a][b] = (ph, p.label() as usize);
        }
    }
    t
}

fn add_scaled(acc: &mut Mat<C64>, m: &Mat<C64>, c: C64) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc[(i, j)] += c * m[(i, j)];
        }
    }
}

/// Contracts ⟨X|Y⟩ where X, Y are the products A·B (`ba = false`) or B·A of
/// two trains, in the Pauli basis.
fn product_overlap(a: &TensorTrain, b: &TensorTrain, bra_ba: bool, ket_ba: bool) -> C64 {
    let table = product_table();
    // pairs (a_label, b_label) feeding output label c, with their phase
    let feed = |c: usize, swapped: bool| -> Vec<(usize, usize, C64)> {
        let mut v = Vec::new();
        for la in 0..4 {
            for lb in 0..4 {
                let (ph, lab) = if swapped { table[lb][la] } else { table[la][lb] };
                if lab == c {
                    v.push((la, lb, ph));
                }
            }
        }
        v
    };
    // env index [α, β, α', β'] (bra A, bra B, ket A, ket B), stored flat
    let mut env = vec![C64::new(1.0, 0.0)];
    let (mut da, mut db) = (1usize, 1usize);
    for (ta, tb) in a.sites.iter().zip(&b.sites) {
        let (ea, eb) = (ta.dr, tb.dr);
        let amat: Vec<Mat<C64>> = (0..4).map(|s| Mat::from_fn(ta.dl, ea, |l, r| C64::new(ta.at(l, s, r), 0.0))).collect();
        let bmat: Vec<Mat<C64>> = (0..4).map(|s| Mat::from_fn(tb.dl, eb, |l, r| C64::new(tb.at(l, s, r), 0.0))).collect();
        // ket side: K[c] over (α, β, γ', δ')
        // step 1: X[a'] = Σ_{α'} E[α,β,α',β'] A[α',a',γ'] -> layout rows (α,β,β'), cols γ'
        let e_ab_b_a = Mat::from_fn(da * db * db, da, |row, ap| {
            let (al, rest) = (row / (db * db), row % (db * db));
            let (be, bp) = (rest / db, rest % db);
            env[((al * db + be) * da + ap) * db + bp]
        });
        let x: Vec<Mat<C64>> = amat.iter().map(|am| &e_ab_b_a * am).collect();
        let mut ket = vec![Mat::<C64>::zeros(da * db * ea, eb); 4];
        for (c, kc) in ket.iter_mut().enumerate() {
            for (la, lb, ph) in feed(c, ket_ba) {
                // regroup X[la] rows (α,β,β') × γ' into (α,β,γ') × β'
                let xr = Mat::from_fn(da * db * ea, db, |row, bp| {
                    let (ab, gp) = (row / ea, row % ea);
                    x[la][(ab * db + bp, gp)]
                });
                add_scaled(kc, &(xr * &bmat[lb]), ph);
            }
        }
        // bra side: E'[γ,δ,γ',δ'] = Σ_c Σ conj(ph) A[α,a,γ] B[β,b,δ] K[c][α,β,γ',δ']
        let mut wa = vec![Mat::<C64>::zeros(eb, da * ea * eb); 4];
        for (c, kc) in ket.iter().enumerate() {
            // K[c] as β × (α, γ', δ')
            let kb = Mat::from_fn(db, da * ea * eb, |be, col| {
                let (al, rest) = (col / (ea * eb), col % (ea * eb));
                let (gp, dp) = (rest / eb, rest % eb);
                kc[((al * db + be) * ea + gp, dp)]
            });
            for (la, lb, ph) in feed(c, bra_ba) {
                add_scaled(&mut wa[la], &(bmat[lb].transpose() * &kb), ph.conj());
            }
        }
        let mut next = Mat::<C64>::zeros(ea, eb * ea * eb);
        for (la, w) in wa.iter().enumerate() {
            // W[a] as α × (δ, γ', δ')
            let wr = Mat::from_fn(da, eb * ea * eb, |al, col| {
                let (de, rest) = (col / (ea * eb), col % (ea * eb));
                w[(de, al * ea * eb + rest)]
            });
            next += amat[la].transpose() * wr;
        }
        env = (0..ea * eb * ea * eb)
            .map(|k| {
                let (g, rest) = (k / (eb * ea * eb), k % (eb * ea * eb));
                next[(g, rest)]
            })
            .collect();
        da = ea;
        db = eb;
    }
    env[0]
}

/// ‖[A, B]‖²/2^N for two Hermitian operator trains, from the exact commutator
/// network (bond dimension 2·χ_A·χ_B).
pub fn commutator_norm_sq(a: &TensorTrain, b: &TensorTrain) -> Result<f64> {
    if a.num_sites() != b.num_sites() {
        return Err(Error::DimensionMismatch("operator trains differ in length".into()));
    }
    let ab_ab = product_overlap(a, b, false, false);
    let ba_ba = product_overlap(a, b, true, true);
    let ab_ba = product_overlap(a, b, false, true);
    Ok((ab_ab + ba_ba - ab_ba * 2.0).re.max(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSplitResult {
    pub site: usize,
    pub value: f64,
    pub discarded_w: f64,
    pub discarded_v: f64,
}

/// C(r,t) = ‖[W(t/2), V_r(−t/2)]‖²/2^N at each probe site, with W evolved
/// forward and V backward by half the time each. `probe = None` averages X, Y, Z.
pub fn time_split_squared_commutator(
    w0: &PauliString,
    sites: &[usize],
    probe: Option<Pauli>,
    h: &SpinChainHamiltonian,
    t: f64,
    config: TebdConfig,
) -> Result<Vec<TimeSplitResult>> {
    let n = w0.len();
    if n != h.num_sites() {
        return Err(Error::DimensionMismatch("operator and Hamiltonian lengths differ".into()));
    }
    if let Some(&s) = sites.iter().find(|&&s| s >= n) {
        return invalid(format!("probe site {s} outside {n} sites"));
    }
    if probe == Some(Pauli::I) {
        return invalid("identity probe commutes with everything");
    }
    let mut w = TensorTrain::from_pauli_string(w0)?;
    TebdEvolver::new(h, config, true)?.evolve(&mut w, t / 2.0)?;
    let back = TebdEvolver::new(h, config, false)?;
    let paulis: Vec<Pauli> = match probe {
        Some(p) => vec![p],
        None => Pauli::NONTRIVIAL.to_vec(),
    };
    let mut out = Vec::with_capacity(sites.len());
    for &site in sites {
        let (mut total, mut dv) = (0.0, 0.0f64);
        for &p in &paulis {
            let mut v = TensorTrain::from_pauli_string(&PauliString::single(n, site, p))?;
            back.evolve(&mut v, t / 2.0)?;
            total += commutator_norm_sq(&w, &v)?;
            dv = dv.max(v.discarded_weight);
        }
        out.push(TimeSplitResult { site, value: total / paulis.len() as f64, discarded_w: w.discarded_weight, discarded_v: dv });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otoc::{Boundary, IsingCouplings};
    use crate::quantum::apply_to_block;

    fn ising(n: usize) -> SpinChainHamiltonian {
        SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap()
    }

    /// Dense Trotter circuit with the same gate sequence as the evolver, as a
    /// Schrödinger-picture unitary U (so W(t) = U† W U).
    fn dense_trotter(h: &SpinChainHamiltonian, t: f64, cfg: &TebdConfig) -> Mat<C64> {
        let n = h.num_sites();
        let d = 1usize << n;
        let bonds = h.bond_terms().unwrap();
        let steps = (t / cfg.dt).round().max(1.0) as usize;
        let tau = t / steps as f64;
        let mut layers: Vec<(usize, f64)> = Vec::new();
        match cfg.order {
            TrotterOrder::First => {
                for _ in 0..steps {
                    layers.push((0, tau));
                    layers.push((1, tau));
                }
            }
            TrotterOrder::Second => {
                for _ in 0..steps {
                    layers.push((0, tau / 2.0));
                    layers.push((1, tau));
                    layers.push((0, tau / 2.0));
                }
            }
        }
        let mut u = Mat::<C64>::identity(d, d);
        // Heisenberg layers act in the listed order on W; the Schrödinger
        // unitary applies them in reverse
        for &(parity, dt) in layers.iter().rev() {
            for b in (parity..n - 1).step_by(2) {
                let g = bond_exponential(&bonds[b], dt).unwrap();
                for col in 0..d {
                    let mut v: Vec<C64> = (0..d).map(|i| u[(i, col)]).collect();
                    apply_to_block(&mut v, n, b, &g).unwrap();
                    for i in 0..d {
                        u[(i, col)] = v[i];
                    }
                }
            }
        }
        u
    }

    fn dense_c(wt: &Mat<C64>, site: usize, p: Pauli, n: usize) -> f64 {
        let v = PauliString::single(n, site, p).to_dense().unwrap().into_matrix();
        let c = wt * &v - &v * wt;
        (c.adjoint() * &c).diagonal().column_vector().iter().fold(ZERO, |a, x| a + x).re / (1usize << n) as f64
    }

    #[test]
    fn zero_hamiltonian_leaves_operator_unchanged() {
        let h = SpinChainHamiltonian::from_terms(5, vec![], Boundary::Open).unwrap();
        let w = TensorTrain::from_pauli_string(&PauliString::parse("IXZYI").unwrap()).unwrap();
        let wt = tebd_evolve_mpo(&w, &h, 1.0, TebdConfig { dt: 0.1, ..TebdConfig::default() }).unwrap();
        let a = w.pauli_coefficients().unwrap();
        let b = wt.pauli_coefficients().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn commutator_examples() {
        let n = 4;
        let mut id = TensorTrain::identity(n).unwrap();
        assert!(id.commutator_mpo(2, Pauli::X).unwrap().norm_sq() < 1e-30);
        let z = TensorTrain::from_pauli_string(&PauliString::single(n, 1, Pauli::Z)).unwrap();
        let c = z.commutator_mpo(1, Pauli::X).unwrap();
        assert!((c.norm_sq() - 4.0).abs() < 1e-12);
        assert_eq!(c.bond_dims(), z.bond_dims());
        assert!(z.commutator_mpo(3, Pauli::X).unwrap().norm_sq() < 1e-30);
        assert!(z.commutator_mpo(1, Pauli::Z).unwrap().norm_sq() < 1e-30);
        assert!(z.commutator_mpo(4, Pauli::X).is_err());
        let w = id.label_weights();
        assert!(w.iter().all(|x| (x[0] - 1.0).abs() < 1e-14));
    }

    #[test]
    fn weights_match_commutator_norm_after_evolution() {
        let n = 6;
        let h = ising(n);
        let w0 = TensorTrain::from_pauli_string(&PauliString::single(n, 2, Pauli::Z)).unwrap();
        let mut wt = tebd_evolve_mpo(&w0, &h, 0.8, TebdConfig { dt: 0.05, ..TebdConfig::default() }).unwrap();
        let weights = wt.label_weights();
        for r in 0..n {
            for p in Pauli::NONTRIVIAL {
                let direct = wt.commutator_mpo(r, p).unwrap().norm_sq();
                let fast = squared_commutator_from_weights(&weights[r], Some(p));
                assert!((direct - fast).abs() < 1e-10, "r={r} {p:?}");
            }
        }
        assert!((wt.norm_sq() - 1.0).abs() < 1e-10);
        assert!(wt.normalized_trace().abs() < 1e-12);
    }

    #[test]
    fn untruncated_field_matches_dense_trotter_circuit() {
        let n = 7;
        let h = ising(n);
        let cfg = TebdConfig { dt: 0.05, chi_max: 1 << 10, ..TebdConfig::default() };
        let times = [0.0, 0.5, 1.5];
        let w0 = PauliString::single(n, 0, Pauli::Z);
        let f = squared_commutator_field(&w0, &h, &times, cfg, Some(Pauli::X)).unwrap();
        let avg = squared_commutator_field(&w0, &h, &times, cfg, None).unwrap();
        let wd = w0.to_dense().unwrap().into_matrix();
        for (ti, &t) in times.iter().enumerate() {
            let u = dense_trotter(&h, t, &cfg);
            let wt = u.adjoint() * &wd * &u;
            for r in 0..n {
                let want = dense_c(&wt, r, Pauli::X, n);
                assert!((f.field.get(r, ti) - want).abs() < 1e-7, "t={t} r={r}");
                let want_avg: f64 = Pauli::NONTRIVIAL.iter().map(|&p| dense_c(&wt, r, p, n)).sum::<f64>() / 3.0;
                assert!((avg.field.get(r, ti) - want_avg).abs() < 1e-7);
            }
        }
        assert!((avg.field.get(0, 0) - 8.0 / 3.0).abs() < 1e-14);
        assert!(avg.field.get(1, 0).abs() < 1e-14);
    }

    #[test]
    fn first_order_matches_its_dense_circuit() {
        let n = 5;
        let h = ising(n);
        let cfg = TebdConfig { dt: 0.1, order: TrotterOrder::First, chi_max: 256, ..TebdConfig::default() };
        let w0 = PauliString::single(n, 2, Pauli::Y);
        let mut tt = tebd_evolve_mpo(&TensorTrain::from_pauli_string(&w0).unwrap(), &h, 1.0, cfg).unwrap();
        let u = dense_trotter(&h, 1.0, &cfg);
        let wd = w0.to_dense().unwrap().into_matrix();
        let wt = u.adjoint() * &wd * &u;
        let weights = tt.label_weights();
        for r in 0..n {
            let want = dense_c(&wt, r, Pauli::Z, n);
            assert!((squared_commutator_from_weights(&weights[r], Some(Pauli::Z)) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn lightcone_is_exact() {
        let n = 16;
        let h = ising(n);
        let cfg = TebdConfig { dt: 0.1, ..TebdConfig::default() };
        let f = squared_commutator_field(&PauliString::single(n, 8, Pauli::Z), &h, &[0.1], cfg, None).unwrap();
        // site 8 sits on even bond (8, 9); odd layer reaches bonds (7, 8) and (9, 10);
        // the final even layer then reaches (6, 7) and (10, 11)
        for r in 0..n {
            let c = f.field.get(r, 0);
            if !(6..=11).contains(&r) {
                assert!(c < 1e-28, "r={r}: {c}");
            } else {
                // the cone edge is reached at third order in dt
                assert!(c > 1e-20, "r={r}: {c}");
            }
        }
    }

    #[test]
    fn truncation_is_reported() {
        let n = 10;
        let h = ising(n);
        let cfg = TebdConfig { dt: 0.05, chi_max: 4, ..TebdConfig::default() };
        let f = squared_commutator_field(&PauliString::single(n, 0, Pauli::Z), &h, &[1.0, 3.0], cfg, None).unwrap();
        assert!(f.max_bond.iter().all(|&b| b <= 4));
        assert!(f.discarded[1] > 0.0 && f.discarded[1] >= f.discarded[0]);
    }

    #[test]
    fn time_split_equals_plain_without_truncation() {
        let n = 6;
        let h = ising(n);
        let cfg = TebdConfig { dt: 0.05, chi_max: 1 << 10, ..TebdConfig::default() };
        let w0 = PauliString::single(n, 0, Pauli::Z);
        let t = 1.0;
        let plain = squared_commutator_field(&w0, &h, &[t], cfg, Some(Pauli::X)).unwrap();
        let sites: Vec<usize> = (0..n).collect();
        let split = time_split_squared_commutator(&w0, &sites, Some(Pauli::X), &h, t, cfg).unwrap();
        for r in 0..n {
            assert!((split[r].value - plain.field.get(r, 0)).abs() < 1e-9, "r={r}: {} vs {}", split[r].value, plain.field.get(r, 0));
        }
        // t = 0: static commutator
        let s0 = time_split_squared_commutator(&w0, &[0, 1], None, &h, 0.0, cfg).unwrap();
        assert!((s0[0].value - 8.0 / 3.0).abs() < 1e-12 && s0[1].value.abs() < 1e-14);
    }

    #[test]
    fn commutator_norm_of_pauli_strings() {
        let a = TensorTrain::from_pauli_string(&PauliString::parse("XZI").unwrap()).unwrap();
        let b = TensorTrain::from_pauli_string(&PauliString::parse("ZZY").unwrap()).unwrap();
        let c = TensorTrain::from_pauli_string(&PauliString::parse("XXY").unwrap()).unwrap();
        assert!((commutator_norm_sq(&a, &b).unwrap() - 4.0).abs() < 1e-12);
        // XZI and XXY anticommute on one site only
        assert!((commutator_norm_sq(&a, &c).unwrap() - 4.0).abs() < 1e-12);
        assert!(commutator_norm_sq(&b, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        let h = ising(4);
        let w0 = PauliString::single(4, 0, Pauli::Z);
        let cfg = TebdConfig::default();
        assert!(squared_commutator_field(&w0, &h, &[1.0, 0.5], cfg, None).is_err());
        assert!(squared_commutator_field(&w0, &h, &[1.0], cfg, Some(Pauli::I)).is_err());
        assert!(squared_commutator_field(&PauliString::single(5, 0, Pauli::Z), &h, &[1.0], cfg, None).is_err());
        assert!(TebdEvolver::new(&h, TebdConfig { dt: 0.0, ..cfg }, true).is_err());
        let periodic = SpinChainHamiltonian::mixed_field_ising(4, IsingCouplings::default(), Boundary::Periodic).unwrap();
        assert!(TebdEvolver::new(&periodic, cfg, true).is_err());
    }
}
