//! Exact OTOCs F(r,t) = tr(W(t) V_r W(t) V_r)/d and squared commutators
//! C = 2 − 2 Re F for Hermitian unitary W, V.
//!
//! Three methods share one request type: dense exact diagonalization,
//! Krylov evolution of the operator, and Krylov evolution of random states
//! (quantum typicality). Time convention: W(t) = e^{iHt} W e^{−iHt}.

mod ed;
mod hamiltonian;
mod krylov;
mod lieb_robinson;
mod operator;
mod typicality;
mod weights;

pub use ed::{EdSolver, MAX_ED_SITES};
pub use hamiltonian::{Boundary, DenseHermitian, IsingCouplings, LinearOperator, SpinChainHamiltonian};
pub use krylov::{krylov_evolve, KrylovStats, SUBSTEP_TOLERANCE};
pub use lieb_robinson::{lieb_robinson_certificate, lr_bound, LrCertificate, LrPoint, MAX_LR_SITES};
pub use operator::{krylov_operator_series, MAX_KRYLOV_OPERATOR_SITES};
pub use typicality::typical_state_samples;
pub use weights::{
    label_at, pauli_coefficients, pauli_weight_profile, pauli_weight_profile_all, SiteWeight,
    MAX_WEIGHT_SITES,
};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::quantum::{DenseState, PauliString, C64};
use crate::stats::mean_stderr;
use serde::{Deserialize, Serialize};

/// Largest chain for Krylov-State (dense state vectors).
pub const MAX_KRYLOV_STATE_SITES: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OtocMethod {
    Ed,
    KrylovOperator,
    KrylovState,
}

#[derive(Clone, Debug)]
pub struct OtocRequest {
    pub w: PauliString,
    /// one V per output row; the row is labelled by the first site of V
    pub probes: Vec<PauliString>,
    /// ascending, non-negative
    pub times: Vec<f64>,
    pub method: OtocMethod,
    pub krylov_dim: usize,
    pub num_states: usize,
    pub seed: u64,
}

impl OtocRequest {
    pub fn new(w: PauliString, probes: Vec<PauliString>, times: Vec<f64>, method: OtocMethod) -> Self {
        Self { w, probes, times, method, krylov_dim: 30, num_states: 1, seed: 0 }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.w.len() != n || self.probes.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch("operator length differs from chain".into()));
        }
        if self.probes.is_empty() || self.times.is_empty() {
            return Err(Error::InvalidInput("need at least one probe and one time".into()));
        }
        if self.times.windows(2).any(|t| t[1] <= t[0]) || self.times[0] < 0.0 {
            return Err(Error::InvalidInput("times must be ascending and non-negative".into()));
        }
        if self.krylov_dim < 2 {
            return Err(Error::InvalidInput("krylov_dim must be >= 2".into()));
        }
        if self.w.weight() == 0 || self.probes.iter().any(|p| p.weight() == 0) {
            return Err(Error::InvalidInput("W and V must be non-identity strings".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OtocResult {
    /// Re F(r,t)
    pub otoc: SpaceTimeField,
    /// C(r,t) = 2 − 2 Re F
    pub squared_commutator: SpaceTimeField,
    /// largest |Im F| seen (0 up to round-off for exact methods)
    pub max_imag: f64,
}

fn assemble(req: &OtocRequest, f: Vec<Vec<C64>>, stderr: Option<Vec<Vec<f64>>>, method: &str) -> OtocResult {
    let sites: Vec<f64> = req.probes.iter().map(|p| p.support()[0] as f64).collect();
    let mut otoc = SpaceTimeField::zeros(sites.clone(), req.times.clone(), method);
    let mut c = SpaceTimeField::zeros(sites, req.times.clone(), method);
    let mut max_imag = 0.0f64;
    for (r, row) in f.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            otoc.set(r, k, v.re);
            c.set(r, k, 2.0 - 2.0 * v.re);
            max_imag = max_imag.max(v.im.abs());
        }
    }
    if let Some(se) = stderr {
        let flat: Vec<f64> = se.into_iter().flatten().collect();
        c.stderr = Some(flat.iter().map(|s| 2.0 * s).collect());
        otoc.stderr = Some(flat);
    }
    if req.method == OtocMethod::KrylovState {
        otoc.seed = Some(req.seed);
        c.seed = Some(req.seed);
    }
    OtocResult { otoc, squared_commutator: c, max_imag }
}

pub fn otoc_ed(h: &SpinChainHamiltonian, req: &OtocRequest) -> Result<OtocResult> {
    req.validate(h.num_sites())?;
    let solver = EdSolver::new(h)?;
    let f = req.probes.iter().map(|v| solver.otoc_series(&req.w, v, &req.times)).collect::<Result<Vec<_>>>()?;
    Ok(assemble(req, f, None, "ed"))
}

pub fn otoc_krylov_operator(h: &SpinChainHamiltonian, req: &OtocRequest) -> Result<OtocResult> {
    req.validate(h.num_sites())?;
    let f = krylov_operator_series(h, &req.w, &req.probes, &req.times, req.krylov_dim)?;
    Ok(assemble(req, f, None, "krylov-operator"))
}

/// Typicality estimate with a standard error per point.
///
/// With several states the error is the sample standard error of the mean.
/// A single state has no sample spread, so the Haar-ensemble value
/// sqrt((1 − F²)/(d + 1)) for a Hermitian unitary O = W(t)VW(t)V stands in.
pub fn otoc_krylov_state(h: &SpinChainHamiltonian, req: &OtocRequest) -> Result<OtocResult> {
    req.validate(h.num_sites())?;
    let n = h.num_sites();
    if n > MAX_KRYLOV_STATE_SITES {
        return Err(Error::ResourceLimit(format!("Krylov-State needs N <= {MAX_KRYLOV_STATE_SITES}")));
    }
    DenseState::zeros(n)?;
    let samples = typical_state_samples(h, &req.w, &req.probes, &req.times, req.krylov_dim, req.num_states, req.seed)?;
    let d = (1u64 << n) as f64;
    let (nr, nt) = (req.probes.len(), req.times.len());
    let mut f = vec![vec![C64::new(0.0, 0.0); nt]; nr];
    let mut se = vec![vec![0.0; nt]; nr];
    for r in 0..nr {
        for k in 0..nt {
            let re: Vec<f64> = samples.iter().map(|s| s[r][k].re).collect();
            let im: Vec<f64> = samples.iter().map(|s| s[r][k].im).collect();
            let (m, e) = mean_stderr(&re);
            f[r][k] = C64::new(m, mean_stderr(&im).0);
            se[r][k] = if samples.len() >= 2 { e } else { ((1.0 - m * m).max(0.0) / (d + 1.0)).sqrt() };
        }
    }
    Ok(assemble(req, f, Some(se), "krylov-state"))
}

pub fn compute_otoc(h: &SpinChainHamiltonian, req: &OtocRequest) -> Result<OtocResult> {
    match req.method {
        OtocMethod::Ed => otoc_ed(h, req),
        OtocMethod::KrylovOperator => otoc_krylov_operator(h, req),
        OtocMethod::KrylovState => otoc_krylov_state(h, req),
    }
}
