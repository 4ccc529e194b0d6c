//! Reference-qubit experiments: how the information about one entangled
//! reference qubit spreads over the system under a unitary U.
//!
//! Register layout is always `R, q_0..q_{N-1}, MEM`. The reference R starts in
//! a Bell pair with q_0; memory qubit k purifies system qubit k+1.

use crate::error::{invalid, Error, Result};
use crate::quantum::{
    apply_to_block, entropy_of_state, haar_unitary, mutual_information, pauli_sandwich_trace,
    purity, stream_rng, DenseState, EntropyOrder, Pauli, PauliString, Subsystem, C64,
};
use crate::stats::{batch_means_stderr, mean_stderr};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cap on the simulated register (R + SYS + MEM).
pub const MAX_INFO_QUBITS: usize = 24;
/// Largest system for the OTOC-sum identities.
pub const MAX_OTOC_SUM_SITES: usize = 8;
/// Batches for the Monte Carlo standard error.
pub const MC_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    Pure,
    /// `s` maximally mixed system qubits (entropy s bits) besides q_0.
    Mixed(usize),
    MaximallyMixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSetup {
    pub num_system: usize,
    pub kind: StateKind,
}

impl ReferenceSetup {
    pub fn new(num_system: usize, kind: StateKind) -> Result<Self> {
        if num_system == 0 {
            return invalid("reference setup needs at least one system qubit");
        }
        if let StateKind::Mixed(s) = kind {
            if s > num_system - 1 {
                return invalid(format!("entropy {s} exceeds the {} purifiable qubits", num_system - 1));
            }
        }
        let setup = Self { num_system, kind };
        if setup.total_qubits() > MAX_INFO_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "{} qubits exceed the exact-simulation cap {MAX_INFO_QUBITS}",
                setup.total_qubits()
            )));
        }
        Ok(setup)
    }

    pub fn pure(num_system: usize) -> Result<Self> {
        Self::new(num_system, StateKind::Pure)
    }

    pub fn maximally_mixed(num_system: usize) -> Result<Self> {
        Self::new(num_system, StateKind::MaximallyMixed)
    }

    /// Number of mixed (memory-purified) system qubits.
    pub fn num_memory(&self) -> usize {
        match self.kind {
            StateKind::Pure => 0,
            StateKind::Mixed(s) => s,
            StateKind::MaximallyMixed => self.num_system - 1,
        }
    }

    pub fn total_qubits(&self) -> usize {
        1 + self.num_system + self.num_memory()
    }

    pub fn reference(&self) -> usize {
        0
    }

    pub fn system_qubit(&self, i: usize) -> usize {
        1 + i
    }

    /// Register index of the memory qubit paired with system qubit k+1.
    pub fn memory_qubit(&self, k: usize) -> usize {
        1 + self.num_system + k
    }

    pub fn reference_region(&self) -> Subsystem {
        Subsystem::range(0..1)
    }

    pub fn system(&self) -> Subsystem {
        Subsystem::range(1..1 + self.num_system)
    }

    pub fn memory(&self) -> Subsystem {
        Subsystem::range(1 + self.num_system..self.total_qubits())
    }

    /// System qubits q_0..q_{l-1}.
    pub fn first_system(&self, l: usize) -> Subsystem {
        Subsystem::range(1..1 + l.min(self.num_system))
    }

    /// Register region built from system indices.
    pub fn system_region(&self, sites: &[usize]) -> Result<Subsystem> {
        if let Some(&s) = sites.iter().find(|&&s| s >= self.num_system) {
            return invalid(format!("system site {s} >= {}", self.num_system));
        }
        Subsystem::new(sites.iter().map(|&s| 1 + s), self.total_qubits())
    }

    /// Initial state: Bell pair (R, q_0), Bell pairs (q_{k+1}, MEM_k), rest |0⟩.
    pub fn initial_state(&self) -> Result<DenseState> {
        let n = self.total_qubits();
        let m = self.num_memory();
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        let amp = 0.5f64.powf((1 + m) as f64 / 2.0);
        for r in 0..2usize {
            for k in 0..1usize << m {
                // q_0 = r, q_1..q_m = k, the rest of SYS = 0, MEM = k
                let sys = (r << (self.num_system - 1)) | (k << (self.num_system - 1 - m));
                let idx = (r << (n - 1)) | (sys << m) | k;
                amps[idx] = C64::new(amp, 0.0);
            }
        }
        DenseState::qubits(amps)
    }

    /// (I_R ⊗ U ⊗ I_MEM) applied to the initial state.
    pub fn evolve(&self, u: &Mat<C64>) -> Result<DenseState> {
        if u.nrows() != 1usize << self.num_system {
            return Err(Error::DimensionMismatch(format!(
                "unitary of size {} on {} system qubits",
                u.nrows(),
                self.num_system
            )));
        }
        let mut amps = self.initial_state()?.into_amplitudes();
        apply_to_block(&mut amps, self.total_qubits(), 1, u)?;
        DenseState::qubits(amps)
    }
}

/// I(R:region) for every region, with the state produced by U.
pub fn mutual_info_profile(
    setup: &ReferenceSetup,
    u: &Mat<C64>,
    regions: &[Subsystem],
    order: EntropyOrder,
) -> Result<Vec<f64>> {
    let state = setup.evolve(u)?;
    regions.iter().map(|reg| reference_mutual_info(setup, &state, reg, order)).collect()
}

fn reference_mutual_info(
    setup: &ReferenceSetup,
    state: &DenseState,
    region: &Subsystem,
    order: EntropyOrder,
) -> Result<f64> {
    if region.contains(setup.reference()) {
        return invalid("region overlaps the reference qubit");
    }
    if region.is_empty() {
        return Ok(0.0);
    }
    mutual_information(state, &setup.reference_region(), region, order)
}

/// Haar closed form of I²(R : first l system qubits).
///
/// The mixed form uses the factor (2^{-s} - 2^{1-N}), which makes it exact
/// for the maximally mixed case s = N-1 but only asymptotically equal to the
/// pure form at s = 0.
pub fn haar_renyi_mutual_closed_form(n: usize, l: usize, kind: StateKind) -> Result<f64> {
    if l > n {
        return invalid(format!("region size {l} > N = {n}"));
    }
    let (nf, lf) = (n as f64, l as f64);
    let x = 4f64.powf(lf - nf / 2.0);
    let head = 1.0 - 2f64.powf(2.0 * lf - 2.0 * nf);
    let weight = match kind {
        StateKind::Pure => 1.0,
        StateKind::Mixed(s) => 2f64.powi(-(s as i32)) - 2f64.powf(1.0 - nf),
        StateKind::MaximallyMixed => return Ok(maximally_mixed_mutual_info(n - l)),
    };
    Ok(1.0 + (2.0 - 3.0 * head / (2.0 + weight * x)).log2())
}

/// I²(R : SYS − E) for a fully scrambled maximally mixed system.
pub fn maximally_mixed_mutual_info(excluded: usize) -> f64 {
    (1.0 + 3.0 * 4f64.powi(-(excluded as i32))).log2()
}

/// Haar average of tr ρ_B² for |B| = l in the pure setup at finite N.
pub fn haar_region_purity(n: usize, l: usize) -> f64 {
    let d = 2f64.powi(n as i32);
    let db = 2f64.powi(l as i32);
    let dbar = d / db;
    0.5 * (d * db + 2.0 * d * dbar - 2.0 * db - dbar) / (d * d - 1.0)
}

/// Finite-N pure-setup I² built from averaged purities:
/// 1 - log2 E tr ρ_B² + log2 E tr ρ_{B̄}².
pub fn pure_mutual_info_finite(n: usize, l: usize) -> Result<f64> {
    if l > n {
        return invalid(format!("region size {l} > N = {n}"));
    }
    Ok(1.0 - haar_region_purity(n, l).log2() + haar_region_purity(n, n - l).log2())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloProfile {
    pub samples: usize,
    pub mean: Vec<f64>,
    /// batch-means standard error of each mean
    pub stderr: Vec<f64>,
}

/// Haar-averaged I(R:region); draw k uses `stream_rng(seed, k)`.
pub fn haar_mutual_info_mc(
    setup: &ReferenceSetup,
    regions: &[Subsystem],
    samples: usize,
    seed: u64,
    order: EntropyOrder,
) -> Result<MonteCarloProfile> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let dim = 1usize << setup.num_system;
    let draws: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let u = haar_unitary(dim, &mut stream_rng(seed, k as u64));
            mutual_info_profile(setup, &u, regions, order)
        })
        .collect::<Result<_>>()?;
    let mut mean = Vec::with_capacity(regions.len());
    let mut stderr = Vec::with_capacity(regions.len());
    for j in 0..regions.len() {
        let xs: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        mean.push(mean_stderr(&xs).0);
        stderr.push(batch_means_stderr(&xs, MC_BATCHES));
    }
    Ok(MonteCarloProfile { samples, mean, stderr })
}

/// I₃ = I(R:E) + I(R:SYS−E) − I(R:SYS), with E given as system indices.
pub fn tripartite_i3(setup: &ReferenceSetup, u: &Mat<C64>, e: &[usize], order: EntropyOrder) -> Result<f64> {
    if setup.kind != StateKind::MaximallyMixed {
        return invalid("tripartite information needs the maximally mixed setup");
    }
    let e_reg = setup.system_region(e)?;
    let rest = Subsystem::new(
        setup.system().sites().iter().copied().filter(|&s| !e_reg.contains(s)),
        setup.total_qubits(),
    )?;
    let state = setup.evolve(u)?;
    let i_e = reference_mutual_info(setup, &state, &e_reg, order)?;
    let i_rest = reference_mutual_info(setup, &state, &rest, order)?;
    let i_sys = reference_mutual_info(setup, &state, &setup.system(), order)?;
    Ok(i_e + i_rest - i_sys)
}

/// Haar-averaged I₃ with its batch-means error.
pub fn haar_tripartite_mc(
    setup: &ReferenceSetup,
    e: &[usize],
    samples: usize,
    seed: u64,
    order: EntropyOrder,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let dim = 1usize << setup.num_system;
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| tripartite_i3(setup, &haar_unitary(dim, &mut stream_rng(seed, k as u64)), e, order))
        .collect::<Result<_>>()?;
    Ok((mean_stderr(&xs).0, batch_means_stderr(&xs, MC_BATCHES)))
}

/// Sum over nontrivial Paulis W on q_0 and V on q_n of tr(W(-t) V W(-t) V)/2^N,
/// with W(-t) = U W U†.
pub fn otoc_pair_sum(u: &Mat<C64>, n: usize, site: usize) -> Result<f64> {
    if site >= n {
        return invalid(format!("site {site} >= N = {n}"));
    }
    let d = (1usize << n) as f64;
    let mut sum = 0.0;
    for w in Pauli::NONTRIVIAL {
        let wm = PauliString::single(n, 0, w).to_dense()?.into_matrix();
        let wt = u * &wm * u.adjoint();
        for v in Pauli::NONTRIVIAL {
            sum += pauli_sandwich_trace(&wt, &PauliString::single(n, site, v))?.re / d;
        }
    }
    Ok(sum)
}

fn check_otoc_sites(u: &Mat<C64>) -> Result<usize> {
    let d = u.nrows();
    if !d.is_power_of_two() || d != u.ncols() {
        return Err(Error::DimensionMismatch("unitary must be 2^N square".into()));
    }
    let n = d.trailing_zeros() as usize;
    if n > MAX_OTOC_SUM_SITES {
        return Err(Error::ResourceLimit(format!("OTOC sums need N <= {MAX_OTOC_SUM_SITES}")));
    }
    if n < 2 {
        return invalid("OTOC sums need at least two system qubits");
    }
    Ok(n)
}

fn memory_and_site(setup: &ReferenceSetup, site: usize) -> Result<Subsystem> {
    Ok(setup.memory().union(&setup.system_region(&[site])?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PurityOtocCheck {
    pub purity_direct: f64,
    pub purity_from_otocs: f64,
    pub otoc_sum: f64,
}

/// tr ρ²(MEM ∪ q_n) by partial trace and via (7 + Σ OTOC)/2^{N+2}.
pub fn purity_as_otoc_check(u: &Mat<C64>, site: usize) -> Result<PurityOtocCheck> {
    let n = check_otoc_sites(u)?;
    let setup = ReferenceSetup::maximally_mixed(n)?;
    if site == 0 {
        return invalid("q_n must differ from the reference partner q_0");
    }
    let state = setup.evolve(u)?;
    let purity_direct = purity(&state, &memory_and_site(&setup, site)?)?;
    let otoc_sum = otoc_pair_sum(u, n, site)?;
    Ok(PurityOtocCheck {
        purity_direct,
        purity_from_otocs: (7.0 + otoc_sum) / 2f64.powi(n as i32 + 2),
        otoc_sum,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OtocBoundCheck {
    /// von Neumann I(R : MEM ∪ q_n)
    pub lhs: f64,
    /// 4 − log2(7 + Σ OTOC)
    pub rhs: f64,
}

pub fn mutual_info_otoc_bound_check(u: &Mat<C64>, site: usize) -> Result<OtocBoundCheck> {
    let n = check_otoc_sites(u)?;
    let setup = ReferenceSetup::maximally_mixed(n)?;
    if site == 0 {
        return invalid("q_n must differ from the reference partner q_0");
    }
    let state = setup.evolve(u)?;
    let lhs = reference_mutual_info(&setup, &state, &memory_and_site(&setup, site)?, EntropyOrder::VonNeumann)?;
    let rhs = 4.0 - (7.0 + otoc_pair_sum(u, n, site)?).log2();
    Ok(OtocBoundCheck { lhs, rhs })
}

/// Entropy of the reference alone; 1 bit for every U.
pub fn reference_entropy(setup: &ReferenceSetup, u: &Mat<C64>, order: EntropyOrder) -> Result<f64> {
    entropy_of_state(&setup.evolve(u)?, &setup.reference_region(), order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{haar_unitary_from_seed, seeded_rng};
    use proptest::prelude::*;

    fn identity(n: usize) -> Mat<C64> {
        Mat::identity(1 << n, 1 << n)
    }

    fn brickwork(n: usize, depth: usize, seed: u64) -> Mat<C64> {
        crate::circuit::brickwork_unitary(n, depth, &mut seeded_rng(seed)).unwrap()
    }

    #[test]
    fn identity_examples() {
        let s = ReferenceSetup::pure(4).unwrap();
        let u = identity(4);
        let regs = [s.first_system(1), s.system_region(&[2, 3]).unwrap()];
        let i = mutual_info_profile(&s, &u, &regs, EntropyOrder::VonNeumann).unwrap();
        assert!((i[0] - 2.0).abs() < 1e-12 && i[1].abs() < 1e-12);
        assert!(mutual_info_profile(&s, &u, &[Subsystem::range(0..2)], EntropyOrder::Renyi2).is_err());
    }

    #[test]
    fn pure_complementarity_and_monotonicity() {
        let s = ReferenceSetup::pure(6).unwrap();
        let u = haar_unitary_from_seed(64, 11);
        for order in [EntropyOrder::VonNeumann, EntropyOrder::Renyi2] {
            let regs: Vec<Subsystem> = (0..=6).map(|l| s.first_system(l)).collect();
            let comps: Vec<Subsystem> = (0..=6).map(|l| Subsystem::range(1 + l..7)).collect();
            let i = mutual_info_profile(&s, &u, &regs, order).unwrap();
            let ic = mutual_info_profile(&s, &u, &comps, order).unwrap();
            for l in 0..=6 {
                assert!((i[l] + ic[l] - 2.0).abs() < 1e-9, "{order:?} l={l}");
                if l > 0 {
                    assert!(i[l] >= i[l - 1] - 1e-9);
                }
            }
        }
    }

    #[test]
    fn initial_state_invariants() {
        for kind in [StateKind::Pure, StateKind::Mixed(2), StateKind::MaximallyMixed] {
            let s = ReferenceSetup::new(5, kind).unwrap();
            let st = s.evolve(&identity(5)).unwrap();
            assert!((st.norm() - 1.0).abs() < 1e-12);
            let i = reference_mutual_info(&s, &st, &s.first_system(1), EntropyOrder::VonNeumann).unwrap();
            assert!((i - 2.0).abs() < 1e-12);
            let sys = entropy_of_state(&st, &s.system(), EntropyOrder::VonNeumann).unwrap();
            assert!((sys - (1 + s.num_memory()) as f64).abs() < 1e-9, "{kind:?}");
        }
        assert!(ReferenceSetup::new(4, StateKind::Mixed(4)).is_err());
        assert!(ReferenceSetup::maximally_mixed(13).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let v = haar_renyi_mutual_closed_form(10, 5, StateKind::Pure).unwrap();
        assert!((v - 1.0).abs() <= 2f64.powi(-10) / std::f64::consts::LN_2);
        assert!((haar_renyi_mutual_closed_form(8, 8, StateKind::MaximallyMixed).unwrap() - 2.0).abs() < 1e-15);
        let one = haar_renyi_mutual_closed_form(8, 7, StateKind::MaximallyMixed).unwrap();
        assert!((one - 1.75f64.log2()).abs() < 1e-15);
        assert!((one - 0.8074).abs() < 1e-4);
        assert!(haar_renyi_mutual_closed_form(4, 5, StateKind::Pure).is_err());
        for n in [4usize, 6, 8, 10] {
            for l in 0..=n {
                let mm = haar_renyi_mutual_closed_form(n, l, StateKind::Mixed(n - 1)).unwrap();
                let exact = haar_renyi_mutual_closed_form(n, l, StateKind::MaximallyMixed).unwrap();
                assert!((mm - exact).abs() < 1e-12);
                let m0 = haar_renyi_mutual_closed_form(n, l, StateKind::Mixed(0)).unwrap();
                let p = haar_renyi_mutual_closed_form(n, l, StateKind::Pure).unwrap();
                assert!((m0 - p).abs() < 2f64.powi(2 - n as i32), "n={n} l={l}");
            }
        }
    }

    #[test]
    fn finite_purity_limits() {
        for n in [2usize, 5, 9] {
            assert!((haar_region_purity(n, 0) - 1.0).abs() < 1e-14);
            assert!((haar_region_purity(n, n) - 0.5).abs() < 1e-14);
            assert!(pure_mutual_info_finite(n, 0).unwrap().abs() < 1e-12);
            assert!((pure_mutual_info_finite(n, n).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_average_matches_finite_form() {
        let s = ReferenceSetup::pure(6).unwrap();
        let regs: Vec<Subsystem> = (0..=6).map(|l| s.first_system(l)).collect();
        let mc = haar_mutual_info_mc(&s, &regs, 200, 1, EntropyOrder::Renyi2).unwrap();
        for l in 0..=6 {
            let want = pure_mutual_info_finite(6, l).unwrap();
            let tol = 3.0 * mc.stderr[l] + 1e-9;
            assert!((mc.mean[l] - want).abs() <= tol, "l={l}: {} vs {want} ± {}", mc.mean[l], mc.stderr[l]);
            let asym = haar_renyi_mutual_closed_form(6, l, StateKind::Pure).unwrap();
            assert!((mc.mean[l] - asym).abs() < 0.05 + 3.0 * mc.stderr[l], "l={l}");
        }
    }

    #[test]
    fn maximally_mixed_haar_average() {
        let s = ReferenceSetup::maximally_mixed(6).unwrap();
        let regs: Vec<Subsystem> = (0..=6).map(|l| s.first_system(l)).collect();
        let mc = haar_mutual_info_mc(&s, &regs, 100, 2, EntropyOrder::Renyi2).unwrap();
        for l in 0..=6 {
            let want = haar_renyi_mutual_closed_form(6, l, StateKind::MaximallyMixed).unwrap();
            assert!((mc.mean[l] - want).abs() < 0.05 + 3.0 * mc.stderr[l], "l={l}: {} vs {want}", mc.mean[l]);
        }
    }

    #[test]
    fn tripartite_examples() {
        let s = ReferenceSetup::maximally_mixed(5).unwrap();
        let i3 = tripartite_i3(&s, &identity(5), &[3, 4], EntropyOrder::VonNeumann).unwrap();
        assert!(i3.abs() < 1e-9);
        assert!(tripartite_i3(&ReferenceSetup::pure(5).unwrap(), &identity(5), &[3], EntropyOrder::Renyi2).is_err());
        let (m, _) = haar_tripartite_mc(&s, &[0, 1], 20, 3, EntropyOrder::VonNeumann).unwrap();
        assert!(m < -1.5, "{m}");
    }

    #[test]
    fn purity_identity_on_identity_swap_and_haar() {
        let n = 5;
        let c = purity_as_otoc_check(&identity(n), 2).unwrap();
        assert!((c.purity_direct - c.purity_from_otocs).abs() < 1e-12);
        assert!((c.purity_direct - 2f64.powi(2 - n as i32)).abs() < 1e-12);
        // SWAP(q_0, q_1) ⊗ I
        let d = 1usize << n;
        let swap = Mat::<C64>::from_fn(d, d, |i, j| {
            let b0 = (j >> (n - 1)) & 1;
            let b1 = (j >> (n - 2)) & 1;
            let img = (j & !(3 << (n - 2))) | (b1 << (n - 1)) | (b0 << (n - 2));
            C64::new(if i == img { 1.0 } else { 0.0 }, 0.0)
        });
        let c = purity_as_otoc_check(&swap, 1).unwrap();
        assert!((c.purity_direct - c.purity_from_otocs).abs() < 1e-9);
        let c = purity_as_otoc_check(&haar_unitary_from_seed(64, 5), 3).unwrap();
        assert!((c.purity_direct - c.purity_from_otocs).abs() < 1e-9);
        assert!(c.otoc_sum.abs() < 1.0);
        assert!(purity_as_otoc_check(&identity(9), 2).is_err());
    }

    #[test]
    fn bound_examples() {
        let b = mutual_info_otoc_bound_check(&identity(5), 3).unwrap();
        assert!(b.lhs.abs() < 1e-9 && b.rhs.abs() < 1e-12);
        let b = mutual_info_otoc_bound_check(&haar_unitary_from_seed(256, 9), 4).unwrap();
        assert!((b.rhs - (4.0 - 7f64.log2())).abs() < 0.1);
        assert!(b.lhs >= b.rhs - 1e-9);
    }

    #[test]
    fn bound_holds_for_brickwork_circuits() {
        for seed in 0..20u64 {
            let depth = (seed % 7) as usize;
            let u = brickwork(5, depth, seed);
            for site in 1..5 {
                let b = mutual_info_otoc_bound_check(&u, site).unwrap();
                assert!(b.lhs >= b.rhs - 1e-9, "seed {seed} site {site}: {b:?}");
                let c = purity_as_otoc_check(&u, site).unwrap();
                assert!((c.purity_direct - c.purity_from_otocs).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn i3_is_at_least_minus_two(seed in 0u64..1000, mask in 1usize..15) {
            let s = ReferenceSetup::maximally_mixed(4).unwrap();
            let e: Vec<usize> = (0..4).filter(|b| mask >> b & 1 == 1).collect();
            let u = brickwork(4, (seed % 5) as usize, seed);
            let i3 = tripartite_i3(&s, &u, &e, EntropyOrder::VonNeumann).unwrap();
            prop_assert!(i3 >= -2.0 - 1e-9);
        }
    }
}
