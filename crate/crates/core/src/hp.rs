//! Hayden–Preskill recovery with the probabilistic Yoshida–Kitaev decoder.
//!
//! Register layout (2N+2 qubits): `R, q_0..q_{N-1}, q_0', m_1..m_{N-1}, R'`.
//! Before decoding, R is Bell-paired with q_0, each q_k with m_k, and q_0'
//! with R'. U acts on the system; Bob applies U* to `q_0', m_1..m_{N-1}`,
//! which therefore plays the role of a mirrored system, and post-selects each
//! Bell pair (q_e, mirror of q_e) for e in E.

use crate::error::{invalid, Error, Result};
use crate::quantum::{
    apply_to_block, haar_unitary, pauli_sandwich_trace, purity, stream_rng, DenseState, Pauli,
    PauliString, Subsystem, C64, ZERO,
};
use crate::stats::{batch_means_stderr, mean_stderr};
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

/// 2N+2 ≤ 22.
pub const MAX_HP_SITES: usize = 10;
/// Largest system for the OTOC expression of F_EPR.
pub const MAX_HP_OTOC_SITES: usize = 8;
/// Below this the post-selected branch is treated as impossible.
pub const MIN_POSTSELECTION: f64 = 1e-14;
/// Cap on (number of OTOC terms) × 4^N for `f_epr_from_otocs`.
const OTOC_WORK_CAP: usize = 1 << 30;

#[derive(Clone, Debug, PartialEq)]
pub struct HpInstance {
    pub num_system: usize,
    /// Bob's system qubits (indices into q_0..q_{N-1})
    pub bob: Vec<usize>,
    pub unitary: Mat<C64>,
}

impl HpInstance {
    pub fn new(num_system: usize, bob: Vec<usize>, unitary: Mat<C64>) -> Result<Self> {
        if num_system == 0 {
            return invalid("need at least one system qubit");
        }
        if num_system > MAX_HP_SITES {
            return Err(Error::ResourceLimit(format!("Hayden-Preskill simulation needs N <= {MAX_HP_SITES}")));
        }
        let d = 1usize << num_system;
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::DimensionMismatch(format!("unitary is not {d} x {d}")));
        }
        let bob = Subsystem::new(bob, num_system)?.sites().to_vec();
        Ok(Self { num_system, bob, unitary })
    }

    /// Bob holds the last `count` system qubits.
    pub fn with_last(num_system: usize, count: usize, unitary: Mat<C64>) -> Result<Self> {
        if count > num_system {
            return invalid(format!("|E| = {count} > N = {num_system}"));
        }
        Self::new(num_system, (num_system - count..num_system).collect(), unitary)
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.num_system + 2
    }

    pub fn system_qubit(&self, i: usize) -> usize {
        1 + i
    }

    /// Register slot of the mirror of system qubit i (q_0' for i = 0, m_i otherwise).
    pub fn mirror_qubit(&self, i: usize) -> usize {
        1 + self.num_system + i
    }

    pub fn reference_out(&self) -> usize {
        2 * self.num_system + 1
    }

    /// Memory qubits m_1..m_{N-1}.
    pub fn memory(&self) -> Subsystem {
        Subsystem::range(self.num_system + 2..2 * self.num_system + 1)
    }

    pub fn bob_region(&self) -> Subsystem {
        let mut sites: Vec<usize> = self.bob.iter().map(|&e| self.system_qubit(e)).collect();
        sites.extend(self.memory().sites());
        Subsystem::new(sites, self.total_qubits()).expect("disjoint by construction")
    }
}

/// Index of the Bell-pair basis entry with both qubits of each listed pair set.
fn pair_mask(n: usize, pairs: &[(usize, usize)], on: &[bool]) -> usize {
    let mut idx = 0;
    for (&(a, b), &bit) in pairs.iter().zip(on) {
        if bit {
            idx |= (1 << (n - 1 - a)) | (1 << (n - 1 - b));
        }
    }
    idx
}

/// State before decoding, with q_0' and R' already in their Bell pair.
pub fn build_hp_state(inst: &HpInstance) -> Result<DenseState> {
    let n = inst.total_qubits();
    let ns = inst.num_system;
    let mut pairs = vec![(0, inst.system_qubit(0)), (inst.mirror_qubit(0), inst.reference_out())];
    pairs.extend((1..ns).map(|k| (inst.system_qubit(k), inst.mirror_qubit(k))));
    let amp = C64::new(0.5f64.powf(pairs.len() as f64 / 2.0), 0.0);
    let mut amps = vec![ZERO; 1usize << n];
    let mut on = vec![false; pairs.len()];
    for k in 0..1usize << pairs.len() {
        for (j, b) in on.iter_mut().enumerate() {
            *b = (k >> j) & 1 == 1;
        }
        amps[pair_mask(n, &pairs, &on)] = amp;
    }
    apply_to_block(&mut amps, n, 1, &inst.unitary)?;
    DenseState::qubits(amps)
}

/// Projects qubits (a, b) onto (|00⟩ + |11⟩)/√2 in place.
fn project_epr(amps: &mut [C64], n: usize, a: usize, b: usize) {
    let (ma, mb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    for i in 0..amps.len() {
        if i & (ma | mb) != 0 {
            continue;
        }
        let s = (amps[i] + amps[i | ma | mb]) * 0.5;
        amps[i] = s;
        amps[i | ma | mb] = s;
        amps[i | ma] = ZERO;
        amps[i | mb] = ZERO;
    }
}

/// ⟨ψ| EPR_{a,b} |ψ⟩.
fn epr_expectation(amps: &[C64], n: usize, a: usize, b: usize) -> f64 {
    let (ma, mb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    (0..amps.len())
        .filter(|i| i & (ma | mb) == 0)
        .map(|i| 0.5 * (amps[i] + amps[i | ma | mb]).norm_sqr())
        .sum()
}

/// Unnormalized post-selected branch after U* and the Bell projections on E.
#[derive(Clone, Debug)]
pub struct DecodedBranch {
    pub state: Vec<C64>,
    pub num_qubits: usize,
    /// post-selection probability Δ
    pub delta: f64,
}

pub fn decode_branch(inst: &HpInstance) -> Result<DecodedBranch> {
    let n = inst.total_qubits();
    let mut amps = build_hp_state(inst)?.into_amplitudes();
    let conj = Mat::from_fn(inst.unitary.nrows(), inst.unitary.ncols(), |i, j| inst.unitary[(i, j)].conj());
    apply_to_block(&mut amps, n, inst.mirror_qubit(0), &conj)?;
    for &e in &inst.bob {
        project_epr(&mut amps, n, inst.system_qubit(e), inst.mirror_qubit(e));
    }
    let delta: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if delta < MIN_POSTSELECTION {
        return Err(Error::PostSelection(delta));
    }
    Ok(DecodedBranch { state: amps, num_qubits: n, delta })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecodeOutcome {
    pub delta: f64,
    pub f_epr: f64,
}

/// Δ and F_EPR(R, R') of the probabilistic decoder, both exact for this U.
pub fn yk_decode_probabilistic(inst: &HpInstance) -> Result<DecodeOutcome> {
    let br = decode_branch(inst)?;
    let f = epr_expectation(&br.state, br.num_qubits, 0, inst.reference_out()) / br.delta;
    Ok(DecodeOutcome { delta: br.delta, f_epr: f })
}

/// Rényi-2 I(R : MEM ∪ E) on the undecoded state.
pub fn bob_renyi_mutual_info(inst: &HpInstance) -> Result<f64> {
    let st = build_hp_state(inst)?;
    let r = Subsystem::range(0..1);
    let bob = inst.bob_region();
    let s = |reg: &Subsystem| -> Result<f64> { Ok(-purity(&st, reg)?.log2()) };
    Ok(s(&r)? + s(&bob)? - s(&r.union(&bob))?)
}

/// 1 / ((1/(4^{|E|} 2^N)) Σ_{W on q_0, V on E} tr(W(−t) V W(−t) V)), W(−t) = U W U†,
/// both sums including the identity.
pub fn f_epr_from_otocs(inst: &HpInstance) -> Result<f64> {
    let ns = inst.num_system;
    if ns > MAX_HP_OTOC_SITES {
        return Err(Error::ResourceLimit(format!("OTOC sum needs N <= {MAX_HP_OTOC_SITES}")));
    }
    let k = inst.bob.len();
    let work = (4usize << (2 * k)).saturating_mul(1 << (2 * ns));
    if work > OTOC_WORK_CAP {
        return Err(Error::ResourceLimit(format!("4^(|E|+1) OTOC terms at N = {ns} exceed the work cap")));
    }
    let u = &inst.unitary;
    let d = (1usize << ns) as f64;
    let mut total = 0.0;
    for w in Pauli::ALL {
        let wm = PauliString::single(ns, 0, w).to_dense()?.into_matrix();
        let wt = u * &wm * u.adjoint();
        let terms: Vec<f64> = (0..1usize << (2 * k))
            .into_par_iter()
            .map(|code| {
                let mut v = PauliString::identity(ns);
                for (j, &e) in inst.bob.iter().enumerate() {
                    v.set(e, Pauli::from_label(((code >> (2 * j)) & 3) as u8)?);
                }
                Ok(pauli_sandwich_trace(&wt, &v)?.re)
            })
            .collect::<Result<_>>()?;
        total += terms.iter().sum::<f64>() / d;
    }
    Ok(4f64.powi(k as i32) / total)
}

/// Haar value 1/(1 + 3·4^{−|E|}).
pub fn f_epr_haar(bob_size: usize) -> f64 {
    1.0 / (1.0 + 3.0 * 4f64.powi(-(bob_size as i32)))
}

/// Six Pauli eigenstates (±x, ±y, ±z).
pub fn pauli_eigenstates() -> [[C64; 2]; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        [c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(-h, 0.0)],
        [c(h, 0.0), c(0.0, h)],
        [c(h, 0.0), c(0.0, -h)],
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Teleported {
    /// ⟨a| ρ_{R'} |a⟩ on the successful branch
    pub fidelity: f64,
    /// joint probability of injecting |a⟩ (via R) and successful post-selection
    pub probability: f64,
}

/// Fidelity of R' with |a⟩ when |a⟩ is injected into q_0.
///
/// Injection is realized by projecting R onto |a*⟩, which steers its Bell
/// partner q_0 into |a⟩.
pub fn teleportation_fidelity(inst: &HpInstance, a: [C64; 2]) -> Result<Teleported> {
    teleport_on_branch(&decode_branch(inst)?, a)
}

fn teleport_on_branch(br: &DecodedBranch, a: [C64; 2]) -> Result<Teleported> {
    let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    if norm < 1e-12 {
        return invalid("zero input state");
    }
    let a = [a[0] / norm, a[1] / norm];
    let n = br.num_qubits;
    let half = 1usize << (n - 1);
    // ⟨a*|_R ψ = a_0 ψ[0..] + a_1 ψ[half..]
    let phi: Vec<C64> = (0..half).map(|i| a[0] * br.state[i] + a[1] * br.state[half + i]).collect();
    let probability: f64 = phi.iter().map(|x| x.norm_sqr()).sum();
    // R' is the last qubit of the remaining 2N+1
    let mut overlap = 0.0;
    for i in (0..half).step_by(2) {
        overlap += (a[0].conj() * phi[i] + a[1].conj() * phi[i + 1]).norm_sqr();
    }
    if probability < MIN_POSTSELECTION {
        return Err(Error::PostSelection(probability));
    }
    Ok(Teleported { fidelity: overlap / probability, probability })
}

/// Success-probability-weighted fidelity over the six Pauli eigenstates; equals (1 + 2 F_EPR)/3.
pub fn average_teleportation_fidelity(inst: &HpInstance) -> Result<f64> {
    let br = decode_branch(inst)?;
    let (mut num, mut den) = (0.0, 0.0);
    for a in pauli_eigenstates() {
        let t = teleport_on_branch(&br, a)?;
        num += t.probability * t.fidelity;
        den += t.probability;
    }
    Ok(num / den)
}

/// Single-qubit teleportation over one Bell pair: fidelity of Bob's corrected
/// qubit with |a⟩ for each of the four Bell outcomes (I, X, Y, Z).
pub fn teleport_single_qubit(a: [C64; 2]) -> Result<[f64; 4]> {
    let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    if norm < 1e-12 {
        return invalid("zero input state");
    }
    let a = [a[0] / norm, a[1] / norm];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // |a⟩_0 ⊗ EPR_{12}, qubit 0 most significant
    let mut psi = [ZERO; 8];
    for (x, &ax) in a.iter().enumerate() {
        for y in 0..2 {
            psi[(x << 2) | (y << 1) | y] = ax * h;
        }
    }
    let mut out = [0.0; 4];
    for (k, p) in Pauli::ALL.into_iter().enumerate() {
        let s = p.matrix();
        // Bell state (I ⊗ σ)|Φ⟩ on qubits (0, 1): entries σ[j][i]/√2 at |i j⟩
        let mut bob = [ZERO; 2];
        for i in 0..2 {
            for j in 0..2 {
                let bell = s[(j, i)] * h;
                for b in 0..2 {
                    bob[b] += bell.conj() * psi[(i << 2) | (j << 1) | b];
                }
            }
        }
        let corrected = [s[(0, 0)] * bob[0] + s[(0, 1)] * bob[1], s[(1, 0)] * bob[0] + s[(1, 1)] * bob[1]];
        let prob = corrected[0].norm_sqr() + corrected[1].norm_sqr();
        let ov = a[0].conj() * corrected[0] + a[1].conj() * corrected[1];
        out[k] = ov.norm_sqr() / prob;
    }
    Ok(out)
}

/// One Haar draw of the decoder with the Rényi-2 mutual information it should match.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecodeDraw {
    pub delta: f64,
    pub f_epr: f64,
    /// I²(R : MEM ∪ E) on the undecoded state
    pub renyi_mutual_info: f64,
}

/// Per-draw decoder results; draw k uses `stream_rng(seed, k)`.
pub fn haar_decode_draws(num_system: usize, bob_size: usize, samples: usize, seed: u64) -> Result<Vec<DecodeDraw>> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    if num_system > MAX_HP_SITES {
        return Err(Error::ResourceLimit(format!("Hayden-Preskill simulation needs N <= {MAX_HP_SITES}")));
    }
    let d = 1usize << num_system;
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let u = haar_unitary(d, &mut stream_rng(seed, k as u64));
            let inst = HpInstance::with_last(num_system, bob_size, u)?;
            let out = yk_decode_probabilistic(&inst)?;
            Ok(DecodeDraw { delta: out.delta, f_epr: out.f_epr, renyi_mutual_info: bob_renyi_mutual_info(&inst)? })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarDecodeStats {
    pub bob_size: usize,
    pub samples: usize,
    pub delta_mean: f64,
    pub f_epr_mean: f64,
    pub f_epr_stderr: f64,
    pub f_epr_haar: f64,
    /// largest |4 Δ F_EPR − 1| over the draws
    pub max_identity_error: f64,
    /// largest |Δ − 2^{−I²(R : MEM ∪ E)}| over the draws
    pub max_renyi_error: f64,
}

impl HaarDecodeStats {
    pub fn from_draws(bob_size: usize, draws: &[DecodeDraw]) -> Self {
        let f: Vec<f64> = draws.iter().map(|o| o.f_epr).collect();
        let samples = draws.len();
        Self {
            bob_size,
            samples,
            delta_mean: draws.iter().map(|o| o.delta).sum::<f64>() / samples as f64,
            f_epr_mean: mean_stderr(&f).0,
            f_epr_stderr: batch_means_stderr(&f, crate::info::MC_BATCHES),
            f_epr_haar: f_epr_haar(bob_size),
            max_identity_error: draws.iter().map(|o| (4.0 * o.delta * o.f_epr - 1.0).abs()).fold(0.0, f64::max),
            max_renyi_error: draws
                .iter()
                .map(|o| (o.delta - 2f64.powf(-o.renyi_mutual_info)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Decoder statistics over Haar draws.
pub fn haar_decode_mc(num_system: usize, bob_size: usize, samples: usize, seed: u64) -> Result<HaarDecodeStats> {
    let draws = haar_decode_draws(num_system, bob_size, samples, seed)?;
    Ok(HaarDecodeStats::from_draws(bob_size, &draws))
}
