//! Haar brickwork circuits and the stochastic model of operator weights.
//!
//! After averaging each two-site Haar gate, a Pauli string only matters
//! through its pattern of identity (0) and non-identity (1) sites. The full
//! binary-string master equation is kept for small chains; large chains use
//! the right-endpoint random walk.
//!
//! Layer `l` acts on bonds `(b, b+1)` with `b ≡ l (mod 2)`.

use crate::error::{invalid, Error, Result};
use crate::field::SpaceTimeField;
use crate::otoc::pauli_weight_profile_all;
use crate::quantum::{haar_unitary, stream_rng, DenseOperator, PauliString, C64};
use crate::stats::{linear_fit, mean_stderr};
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

/// Largest chain for the 2^N binary-string master equation.
pub const MAX_MASTER_SITES: usize = 24;
/// Largest chain for the dense brickwork simulation.
pub const MAX_DIRECT_SITES: usize = 10;
/// Layers skipped before fitting drift and variance.
pub const FIT_TRANSIENT_LAYERS: usize = 20;

/// Probability over identity/non-identity patterns. Site 0 is the most
/// significant bit of the pattern index.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    num_sites: usize,
    probs: Vec<f64>,
}

impl WeightDistribution {
    /// Definite non-identity operator on `site`.
    pub fn seeded(num_sites: usize, site: usize) -> Result<Self> {
        if num_sites == 0 || num_sites > MAX_MASTER_SITES {
            return Err(Error::ResourceLimit(format!("master equation needs 1 <= N <= {MAX_MASTER_SITES}")));
        }
        if site >= num_sites {
            return invalid(format!("seed site {site} out of range"));
        }
        let mut probs = vec![0.0; 1 << num_sites];
        probs[1 << (num_sites - 1 - site)] = 1.0;
        Ok(Self { num_sites, probs })
    }

    pub fn from_probs(num_sites: usize, probs: Vec<f64>) -> Result<Self> {
        if num_sites > MAX_MASTER_SITES || probs.len() != 1 << num_sites {
            return invalid("probability vector must have length 2^N");
        }
        if probs.iter().any(|p| *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return invalid("probabilities must be non-negative and sum to 1");
        }
        Ok(Self { num_sites, probs })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that `site` carries a non-identity operator.
    pub fn occupation(&self, site: usize) -> f64 {
        let bit = 1 << (self.num_sites - 1 - site);
        self.probs.iter().enumerate().filter(|(s, _)| s & bit != 0).map(|(_, p)| p).sum()
    }

    /// P_end(r): probability that the rightmost non-identity site is r.
    /// The all-identity pattern has no endpoint and is left out.
    pub fn endpoint(&self) -> Vec<f64> {
        let n = self.num_sites;
        let mut out = vec![0.0; n];
        for (s, p) in self.probs.iter().enumerate().skip(1) {
            out[n - 1 - s.trailing_zeros() as usize] += p;
        }
        out
    }
}

fn check_bond(num_sites: usize, bond: usize) -> Result<()> {
    if bond + 1 >= num_sites {
        return invalid(format!("bond ({bond},{}) outside a chain of {num_sites}", bond + 1));
    }
    Ok(())
}

fn check_q(q: usize) -> Result<()> {
    if q < 2 {
        return invalid("local dimension must be >= 2");
    }
    Ok(())
}

/// Average one Haar gate on `(bond, bond+1)`: pattern 00 is fixed, the mass
/// of {01, 10, 11} is spread as 1 : 1 : q²−1 over q²+1.
pub fn master_step(dist: &mut WeightDistribution, bond: usize, q: usize) -> Result<()> {
    check_bond(dist.num_sites, bond)?;
    check_q(q)?;
    let q2 = (q * q) as f64;
    let hi = 1 << (dist.num_sites - 1 - bond);
    let lo = hi >> 1;
    for s in 0..dist.probs.len() {
        if s & (hi | lo) != 0 {
            continue;
        }
        let m = dist.probs[s | lo] + dist.probs[s | hi] + dist.probs[s | hi | lo];
        dist.probs[s | lo] = m / (q2 + 1.0);
        dist.probs[s | hi] = m / (q2 + 1.0);
        dist.probs[s | hi | lo] = m * (q2 - 1.0) / (q2 + 1.0);
    }
    Ok(())
}

/// Endpoint update for one gate: the mass on {r, r+1} is split 1 : q².
pub fn endpoint_walk_step(p_end: &mut [f64], bond: usize, q: usize) -> Result<()> {
    check_bond(p_end.len(), bond)?;
    check_q(q)?;
    let q2 = (q * q) as f64;
    let m = p_end[bond] + p_end[bond + 1];
    p_end[bond] = m / (q2 + 1.0);
    p_end[bond + 1] = m * q2 / (q2 + 1.0);
    Ok(())
}

fn layer_bonds(num_sites: usize, layer: usize) -> impl Iterator<Item = usize> {
    (layer % 2..num_sites.saturating_sub(1)).step_by(2)
}

/// Apply a full brickwork layer to the master distribution.
pub fn master_layer(dist: &mut WeightDistribution, layer: usize, q: usize) -> Result<()> {
    for b in layer_bonds(dist.num_sites, layer) {
        master_step(dist, b, q)?;
    }
    Ok(())
}

pub fn endpoint_layer(p_end: &mut [f64], layer: usize, q: usize) -> Result<()> {
    for b in layer_bonds(p_end.len(), layer) {
        endpoint_walk_step(p_end, b, q)?;
    }
    Ok(())
}

/// Closed forms for the endpoint walk.
pub fn butterfly_velocity(q: usize) -> f64 {
    let q2 = (q * q) as f64;
    (q2 - 1.0) / (q2 + 1.0)
}

pub fn front_diffusion(q: usize) -> f64 {
    let q2 = (q * q) as f64;
    2.0 * q2 / ((q2 + 1.0) * (q2 + 1.0))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FrontFit {
    pub v_b: f64,
    pub v_b_stderr: f64,
    pub diffusion: f64,
    pub diffusion_stderr: f64,
    /// 95% intervals from the fit standard errors
    pub v_b_ci: (f64, f64),
    pub diffusion_ci: (f64, f64),
    pub fit_from_layer: usize,
}

#[derive(Clone, Debug)]
pub struct FrontEvolution {
    pub q: usize,
    /// P_end(r, t) with t in layers
    pub endpoint: SpaceTimeField,
    /// C(r,t) = 2 Σ_{r' > r} P_end(r', t)
    pub squared_commutator: SpaceTimeField,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub fit: FrontFit,
    /// endpoint mass reached the last site
    pub truncated: bool,
}

pub fn evolve_front(num_sites: usize, q: usize, layers: usize) -> Result<FrontEvolution> {
    evolve_front_from(num_sites, q, layers, 0)
}

/// Endpoint walk from a definite endpoint at `seed_site`, with drift and
/// variance fits over layers after the transient.
pub fn evolve_front_from(num_sites: usize, q: usize, layers: usize, seed_site: usize) -> Result<FrontEvolution> {
    check_q(q)?;
    if num_sites < 2 || seed_site >= num_sites {
        return invalid("need N >= 2 and a seed site inside the chain");
    }
    if layers < FIT_TRANSIENT_LAYERS + 3 {
        return invalid(format!("need at least {} layers for the front fit", FIT_TRANSIENT_LAYERS + 3));
    }
    let sites: Vec<f64> = (0..num_sites).map(|r| r as f64).collect();
    let times: Vec<f64> = (0..=layers).map(|t| t as f64).collect();
    let mut endpoint = SpaceTimeField::zeros(sites.clone(), times.clone(), "endpoint-walk");
    let mut c = SpaceTimeField::zeros(sites, times, "endpoint-walk");
    let mut p = vec![0.0; num_sites];
    p[seed_site] = 1.0;
    let mut mean = Vec::with_capacity(layers + 1);
    let mut variance = Vec::with_capacity(layers + 1);
    let mut truncated = false;
    for t in 0..=layers {
        if t > 0 {
            endpoint_layer(&mut p, t - 1, q)?;
        }
        let mut tail = 0.0;
        for r in (0..num_sites).rev() {
            endpoint.set(r, t, p[r]);
            c.set(r, t, 2.0 * tail);
            tail += p[r];
        }
        let m: f64 = p.iter().enumerate().map(|(r, w)| r as f64 * w).sum();
        let m2: f64 = p.iter().enumerate().map(|(r, w)| (r as f64).powi(2) * w).sum();
        mean.push(m);
        variance.push(m2 - m * m);
        truncated |= p[num_sites - 1] > 1e-12;
    }
    let ts: Vec<f64> = (FIT_TRANSIENT_LAYERS..=layers).map(|t| t as f64).collect();
    let drift = linear_fit(&ts, &mean[FIT_TRANSIENT_LAYERS..])?;
    let spread = linear_fit(&ts, &variance[FIT_TRANSIENT_LAYERS..])?;
    let (v, dv) = (drift.slope, drift.slope_stderr);
    let (d, dd) = (spread.slope / 2.0, spread.slope_stderr / 2.0);
    let fit = FrontFit {
        v_b: v,
        v_b_stderr: dv,
        diffusion: d,
        diffusion_stderr: dd,
        v_b_ci: (v - 1.96 * dv, v + 1.96 * dv),
        diffusion_ci: (d - 1.96 * dd, d + 1.96 * dd),
        fit_from_layer: FIT_TRANSIENT_LAYERS,
    };
    Ok(FrontEvolution { q, endpoint, squared_commutator: c, mean, variance, fit, truncated })
}

/// Site-averaged C(r,t) predicted by the master equation for a qubit chain
/// seeded at `seed_site`: (8/3)·P(site r non-identity).
pub fn master_squared_commutator(num_sites: usize, depth: usize, seed_site: usize) -> Result<SpaceTimeField> {
    let mut dist = WeightDistribution::seeded(num_sites, seed_site)?;
    let sites: Vec<f64> = (0..num_sites).map(|r| r as f64).collect();
    let times: Vec<f64> = (0..=depth).map(|t| t as f64).collect();
    let mut field = SpaceTimeField::zeros(sites, times, "master-equation");
    for t in 0..=depth {
        if t > 0 {
            master_layer(&mut dist, t - 1, 2)?;
        }
        for r in 0..num_sites {
            field.set(r, t, 8.0 / 3.0 * dist.occupation(r));
        }
    }
    Ok(field)
}

/// Full 2^N × 2^N unitary of a Haar brickwork circuit with `depth` layers.
pub fn brickwork_unitary<R: rand::Rng + ?Sized>(num_sites: usize, depth: usize, rng: &mut R) -> Result<Mat<C64>> {
    if num_sites < 2 || num_sites > MAX_DIRECT_SITES {
        return Err(Error::ResourceLimit(format!("dense brickwork needs 2 <= N <= {MAX_DIRECT_SITES}")));
    }
    let d = 1usize << num_sites;
    let mut u = Mat::<C64>::identity(d, d);
    for layer in 0..depth {
        for b in layer_bonds(num_sites, layer) {
            let g = haar_unitary(4, rng);
            left_apply_gate(&mut u, &g, b, num_sites);
        }
    }
    Ok(u)
}

/// `m ← G m` with G a 4×4 gate on sites (site, site+1) of the row index.
fn left_apply_gate(m: &mut Mat<C64>, gate: &Mat<C64>, site: usize, num_sites: usize) {
    let shift = num_sites - 2 - site;
    let d = m.nrows();
    let mask = 3usize << shift;
    let mut buf = [C64::new(0.0, 0.0); 4];
    for base in (0..d).filter(|i| i & mask == 0) {
        let rows = [base, base | (1 << shift), base | (2 << shift), base | (3 << shift)];
        for j in 0..m.ncols() {
            for (a, slot) in buf.iter_mut().enumerate() {
                *slot = rows.iter().enumerate().map(|(b, &r)| gate[(a, b)] * m[(r, j)]).sum();
            }
            for (a, &r) in rows.iter().enumerate() {
                m[(r, j)] = buf[a];
            }
        }
    }
}

/// Seed-averaged site-averaged C(r,t) of an initial Pauli on `seed_site`
/// under Haar brickwork circuits, from the Pauli weights of the evolved
/// operator.
///
/// The operator is evolved as U W U† (layer by layer from the left), which
/// has the same Haar-ensemble statistics as U† W U. The field carries the
/// Monte Carlo standard error.
pub fn brickwork_otoc_direct(
    num_sites: usize,
    depth: usize,
    seed_site: usize,
    num_seeds: usize,
    seed: u64,
) -> Result<SpaceTimeField> {
    if num_sites < 2 || num_sites > MAX_DIRECT_SITES {
        return Err(Error::ResourceLimit(format!("direct brickwork needs 2 <= N <= {MAX_DIRECT_SITES}")));
    }
    if seed_site >= num_sites || num_seeds == 0 {
        return invalid("seed site out of range or no seeds");
    }
    let w0 = PauliString::single(num_sites, seed_site, crate::quantum::Pauli::Z).to_dense()?;
    let runs: Vec<Vec<Vec<f64>>> = (0..num_seeds as u64)
        .into_par_iter()
        .map(|k| -> Result<Vec<Vec<f64>>> {
            let mut rng = stream_rng(seed, k);
            let mut m = w0.matrix().clone();
            let mut per_time = Vec::with_capacity(depth + 1);
            for t in 0..=depth {
                if t > 0 {
                    for b in layer_bonds(num_sites, t - 1) {
                        let g = haar_unitary(4, &mut rng);
                        left_apply_gate(&mut m, &g, b, num_sites);
                        let mut ma = m.adjoint().to_owned();
                        left_apply_gate(&mut ma, &g, b, num_sites);
                        m = ma.adjoint().to_owned();
                    }
                }
                let op = DenseOperator::qubits(m.clone())?;
                let (weights, _) = pauli_weight_profile_all(&op)?;
                per_time.push(weights.iter().map(|w| w.avg_c).collect());
            }
            Ok(per_time)
        })
        .collect::<Result<_>>()?;
    let sites: Vec<f64> = (0..num_sites).map(|r| r as f64).collect();
    let times: Vec<f64> = (0..=depth).map(|t| t as f64).collect();
    let mut field = SpaceTimeField::zeros(sites, times, "brickwork-direct");
    let mut err = vec![0.0; field.values.len()];
    for r in 0..num_sites {
        for t in 0..=depth {
            let xs: Vec<f64> = runs.iter().map(|run| run[t][r]).collect();
            let (m, e) = mean_stderr(&xs);
            field.set(r, t, m);
            err[r * (depth + 1) + t] = e;
        }
    }
    field.stderr = Some(err);
    field.seed = Some(seed);
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn master_step_examples() {
        let mut d = WeightDistribution::from_probs(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        master_step(&mut d, 0, 2).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0, 0.0]);
        // pattern index: site 0 is the high bit, so "10" is index 2
        let mut d = WeightDistribution::from_probs(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        master_step(&mut d, 0, 2).unwrap();
        let p = d.probs();
        assert!((p[1] - 0.2).abs() < 1e-15 && (p[2] - 0.2).abs() < 1e-15 && (p[3] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn endpoint_examples() {
        let mut p = vec![1.0, 0.0];
        endpoint_walk_step(&mut p, 0, 2).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let mut p = vec![0.0, 1.0];
        endpoint_walk_step(&mut p, 0, 1000).unwrap();
        assert!(p[1] > 1.0 - 1e-5);
        let mut p = vec![0.5, 0.5];
        endpoint_walk_step(&mut p, 0, 3).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-15 && (p[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn endpoint_of_master_matches_walk() {
        // the endpoint marginal of the full master equation obeys the walk exactly
        let n = 8;
        let mut dist = WeightDistribution::seeded(n, 2).unwrap();
        let mut p = vec![0.0; n];
        p[2] = 1.0;
        for layer in 0..12 {
            master_layer(&mut dist, layer, 2).unwrap();
            endpoint_layer(&mut p, layer, 2).unwrap();
            let e = dist.endpoint();
            for r in 0..n {
                assert!((e[r] - p[r]).abs() < 1e-13, "layer {layer} site {r}");
            }
        }
    }

    #[test]
    fn stationary_state_gives_late_otoc() {
        let n = 4;
        let mut dist = WeightDistribution::seeded(n, 0).unwrap();
        for layer in 0..400 {
            master_layer(&mut dist, layer, 2).unwrap();
        }
        let d4 = 4f64.powi(n as i32);
        for r in 0..n {
            let avg_f = 4.0 / 3.0 * (1.0 - dist.occupation(r)) - 1.0 / 3.0;
            assert!((avg_f + 1.0 / (d4 - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn front_fit_q2() {
        let ev = evolve_front(400, 2, 300).unwrap();
        assert!((ev.fit.v_b - 0.6).abs() < 0.012, "{:?}", ev.fit);
        assert!((ev.fit.diffusion - 0.32).abs() < 0.016, "{:?}", ev.fit);
        assert!(!ev.truncated);
        assert!(ev.fit.v_b < 1.0);
        for t in 0..=300 {
            let s: f64 = ev.endpoint.profile(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn front_fit_other_q_and_initial_step() {
        for q in [3, 5] {
            let ev = evolve_front(300, q, 300).unwrap();
            assert!((ev.fit.v_b / butterfly_velocity(q) - 1.0).abs() < 0.02);
            assert!((ev.fit.diffusion / front_diffusion(q) - 1.0).abs() < 0.05);
        }
        let ev = evolve_front_from(20, 2, 30, 5).unwrap();
        for r in 0..20 {
            assert_eq!(ev.squared_commutator.get(r, 0), if r < 5 { 2.0 } else { 0.0 });
        }
        assert!(evolve_front(30, 2, 60).unwrap().truncated);
    }

    #[test]
    fn direct_depth_zero() {
        let f = brickwork_otoc_direct(4, 0, 0, 3, 1).unwrap();
        assert!((f.get(0, 0) - 8.0 / 3.0).abs() < 1e-12);
        for r in 1..4 {
            assert!(f.get(r, 0).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_simulation_matches_master_equation() {
        let (n, depth, seeds) = (8, 8, 200);
        let direct = brickwork_otoc_direct(n, depth, 0, seeds, 11).unwrap();
        let master = master_squared_commutator(n, depth, 0).unwrap();
        let se = direct.stderr.as_ref().unwrap();
        for (i, (a, b)) in direct.values.iter().zip(&master.values).enumerate() {
            assert!((a - b).abs() <= 3.0 * se[i] + 1e-10, "point {i}: {a} vs {b} ± {}", se[i]);
        }
    }

    proptest! {
        #[test]
        fn master_conserves_probability(raw in prop::collection::vec(0.0f64..1.0, 64), bonds in prop::collection::vec(0usize..5, 1..20), q in 2usize..5) {
            let s: f64 = raw.iter().sum::<f64>() + 1e-9;
            let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let mut probs = probs;
            let fix = 1.0 - probs.iter().sum::<f64>();
            probs[0] += fix;
            let p00 = probs[0];
            let mut d = WeightDistribution { num_sites: 6, probs };
            for b in bonds {
                master_step(&mut d, b, q).unwrap();
            }
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert_eq!(d.probs()[0], p00);
        }

        #[test]
        fn walk_conserves_probability(start in 0usize..30, layers in 1usize..80, q in 2usize..6) {
            let mut p = vec![0.0; 30];
            p[start] = 1.0;
            for l in 0..layers {
                endpoint_layer(&mut p, l, q).unwrap();
            }
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
