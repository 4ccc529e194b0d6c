//! Analytic front shapes and the FKPP front equation.
//!
//! The growth form C = exp(−λ (r/v_B − t)^{1+p} / t^p) interpolates between
//! a sharp exponential front (p = 0) and a diffusively broadened Gaussian
//! front (p = 1). The phenomenological profile convolves a Fermi–Dirac front
//! with a Gaussian; in scaled units it depends on a single ratio ξ.

use crate::error::{invalid, Error, Result};
use crate::field::SpaceTimeField;
use crate::stats::{least_squares, levenberg_marquardt, linear_fit, LinearFit};
use serde::{Deserialize, Serialize};

/// Saturation value of the squared commutator for Pauli operators.
pub const SATURATION: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthForm {
    pub lambda: f64,
    pub v_b: f64,
    pub p: f64,
}

impl GrowthForm {
    pub fn new(lambda: f64, v_b: f64, p: f64) -> Result<Self> {
        if !(lambda > 0.0 && v_b > 0.0 && p >= 0.0) || !(lambda.is_finite() && v_b.is_finite() && p.is_finite()) {
            return invalid(format!("growth form needs lambda > 0, v_B > 0, p >= 0 (got {lambda}, {v_b}, {p})"));
        }
        Ok(Self { lambda, v_b, p })
    }

    /// Gaussian front exp(−(r − v t)²/4Dt) written as p = 1 with λ = v²/4D.
    pub fn diffusive(v_b: f64, diffusion: f64) -> Result<Self> {
        Self::new(v_b * v_b / (4.0 * diffusion), v_b, 1.0)
    }
}

/// C(r,t) of the growth form, capped at saturation behind the front.
pub fn eval_growth_form(form: &GrowthForm, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return invalid(format!("growth form needs t > 0, got {t}"));
    }
    let u = r / form.v_b - t;
    let e = form.lambda * u.signum() * u.abs().powf(1.0 + form.p) / t.powf(form.p);
    Ok((-e).exp().min(SATURATION))
}

pub fn growth_form_field(form: &GrowthForm, sites: Vec<f64>, times: Vec<f64>) -> Result<SpaceTimeField> {
    if times.iter().any(|t| !(*t > 0.0)) {
        return invalid("growth form needs t > 0");
    }
    Ok(SpaceTimeField::from_fn(sites, times, "growth-form", |r, t| {
        eval_growth_form(form, r, t).unwrap_or(f64::NAN)
    }))
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut kron = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += KRONROD_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature over consecutive breakpoints.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64, max_intervals: usize) -> Result<f64> {
    let mut parts: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return Ok(total);
        }
        if parts.len() >= max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error {err:e} on integral {total:e}"
            )));
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.partial_cmp(&b.1 .3).unwrap())
            .expect("non-empty");
        let (a, b, _, _) = parts.swap_remove(k);
        let m = 0.5 * (a + b);
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = gk15(&f, lo, hi);
            parts.push((lo, hi, v, e));
        }
    }
}

/// Fermi–Dirac ⊗ Gaussian front in scaled units:
/// C(r,t) = 2 E_Δ[1/(exp(ξ(√t Δ + r − t)) + 1)], Δ standard normal.
///
/// Behind the front the complement 2 − C is integrated instead, so both
/// tails keep full relative accuracy. The Gaussian is integrated over ±12
/// standard deviations plus ±12 around the shifted tail peak at ∓ξ√t.
pub fn eval_phenom_profile(xi: f64, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !(xi > 0.0) || !r.is_finite() {
        return invalid(format!("profile needs t > 0 and xi > 0 (got xi={xi}, t={t})"));
    }
    let st = t.sqrt();
    let norm = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
    // ahead of the front: weight 1/(e^x + 1); behind: 1/(e^{-x} + 1)
    let sign = if r >= t { 1.0 } else { -1.0 };
    let f = |d: f64| {
        let x = sign * xi * (st * d + r - t);
        let fermi = if x > 0.0 { (-x).exp() / (1.0 + (-x).exp()) } else { 1.0 / (1.0 + x.exp()) };
        norm * (-0.5 * d * d).exp() * fermi
    };
    let peak = -sign * xi * st;
    let edge = (t - r) / st;
    let mut breaks: Vec<f64> = (-12..=12).map(f64::from).collect();
    breaks.extend((-12..=12).map(|k| peak + k as f64));
    breaks.push(edge);
    let (lo, hi) = ((-12.0f64).min(peak - 12.0), 12.0f64.max(peak + 12.0));
    breaks.retain(|d| *d >= lo && *d <= hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let part = integrate_adaptive(f, &breaks, 1e-10, 20_000)?;
    Ok(if sign > 0.0 { part } else { 2.0 - part })
}

/// Leading far-tail form 2 exp(ξ((1 + ξ/2) t − r)).
pub fn phenom_far_tail(xi: f64, r: f64, t: f64) -> f64 {
    2.0 * (xi * ((1.0 + xi / 2.0) * t - r)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialProfile {
    /// φ = 2 for r < width, 0 beyond
    Step { width: f64 },
    Uniform { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkppConfig {
    pub g: f64,
    pub dr: f64,
    pub dt: f64,
    pub length: f64,
    pub initial: InitialProfile,
    /// spacing of stored snapshots in time
    pub record_every: f64,
    /// store every k-th grid point in the output field
    pub record_stride: usize,
}

impl FkppConfig {
    /// Defaults for a run of duration `t_total`: dr = 0.05, dt at a fifth of
    /// the stability limit, and a domain 25% longer than the expected front.
    pub fn new(g: f64, t_total: f64) -> Self {
        let dr = 0.05;
        Self {
            g,
            dr,
            dt: 0.2 * dr * dr / (3.0 * g * g),
            length: 1.25 * fkpp_velocity(g) * t_total + 20.0,
            initial: InitialProfile::Step { width: 1.0 },
            record_every: 0.1,
            record_stride: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.dr > 0.0 && self.dt > 0.0 && self.length > 10.0 * self.dr) {
            return invalid("FKPP needs g, dr, dt > 0 and a domain of at least 10 cells");
        }
        let limit = self.dr * self.dr / (3.0 * self.g * self.g);
        if self.dt > limit {
            return invalid(format!("dt = {} exceeds the stability limit dr²/(3g²) = {limit}", self.dt));
        }
        if self.record_every < self.dt || self.record_stride == 0 {
            return invalid("record interval must be at least one step and stride at least 1");
        }
        Ok(())
    }
}

pub fn fkpp_velocity(g: f64) -> f64 {
    (18.0 * g * g * (1.0 + g * g)).sqrt()
}

pub fn fkpp_lyapunov(g: f64) -> f64 {
    6.0 * (1.0 + g * g)
}

/// Tail window for the fixed-position growth rate.
pub const TAIL_RATE_WINDOW: (f64, f64) = (1e-12, 1e-6);

#[derive(Clone, Debug)]
pub struct FkppResult {
    pub field: SpaceTimeField,
    /// (t, position of the φ = 1 crossing)
    pub front: Vec<(f64, f64)>,
    pub velocity: LinearFit,
    /// growth rate of ln φ at `tail_probe` while φ is in the tail window
    pub lambda_tail: f64,
    pub lambda_tail_stderr: f64,
    pub tail_probe: f64,
}

/// Explicit integration of ∂_t φ = (3/2)(2 − φ)((g²/2) ∂_r² φ + (1 + g²) φ)
/// with zero-flux ends.
///
/// The front speed is fitted over the second half of the run. The tail rate
/// is the slope of ln φ in time at the point the front reaches at 3/4 of the
/// run, using the samples where φ lies in `TAIL_RATE_WINDOW`.
pub fn fkpp_integrate(config: &FkppConfig, t_total: f64) -> Result<FkppResult> {
    let snapshots = fkpp_evolve(config, t_total)?;
    let dr = config.dr;
    let n = snapshots[0].1.len();
    let crossing = |row: &[f64]| -> Option<f64> {
        let i = (0..row.len()).rev().find(|&i| row[i] >= 1.0)?;
        if i + 1 >= row.len() {
            return None;
        }
        Some((i as f64 + (row[i] - 1.0) / (row[i] - row[i + 1])) * dr)
    };
    let front: Vec<(f64, f64)> = snapshots.iter().filter_map(|(t, row)| crossing(row).map(|x| (*t, x))).collect();
    if let Some(&(_, x)) = front.last() {
        if x > config.length - 10.0 {
            return invalid("front reached the end of the domain; increase length");
        }
    }
    let late: Vec<&(f64, f64)> = front.iter().filter(|(t, _)| *t > t_total / 2.0).collect();
    let velocity = linear_fit(
        &late.iter().map(|p| p.0).collect::<Vec<_>>(),
        &late.iter().map(|p| p.1).collect::<Vec<_>>(),
    )?;

    let probe_time = 0.75 * t_total;
    let tail_probe = front
        .iter()
        .min_by(|a, b| (a.0 - probe_time).abs().partial_cmp(&(b.0 - probe_time).abs()).unwrap())
        .map(|p| p.1)
        .ok_or_else(|| Error::FitFailure("no front crossing recorded".into()))?;
    let k = (tail_probe / dr).round() as usize;
    let (lo, hi) = TAIL_RATE_WINDOW;
    let (ts, ls): (Vec<f64>, Vec<f64>) =
        snapshots.iter().filter(|(_, row)| row[k] > lo && row[k] < hi).map(|(t, row)| (*t, row[k].ln())).unzip();
    if ts.len() < 4 {
        return Err(Error::FitFailure(format!("only {} samples in the tail window at r={tail_probe}", ts.len())));
    }
    let tail = linear_fit(&ts, &ls)?;

    let sites: Vec<f64> = (0..n).step_by(config.record_stride).map(|i| i as f64 * dr).collect();
    let times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    let mut field = SpaceTimeField::zeros(sites, times, "fkpp");
    for (ti, (_, row)) in snapshots.iter().enumerate() {
        for (si, i) in (0..n).step_by(config.record_stride).enumerate() {
            field.set(si, ti, row[i]);
        }
    }
    Ok(FkppResult {
        field,
        front,
        velocity,
        lambda_tail: tail.slope,
        lambda_tail_stderr: tail.slope_stderr,
        tail_probe,
    })
}

/// Snapshots (t, φ on the full grid) every `record_every`.
pub fn fkpp_evolve(config: &FkppConfig, t_total: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    config.validate()?;
    if !(t_total > 0.0) {
        return invalid("run time must be positive");
    }
    let (g, dr, dt) = (config.g, config.dr, config.dt);
    let n = (config.length / dr).round() as usize + 1;
    let mut phi: Vec<f64> = (0..n)
        .map(|i| match config.initial {
            InitialProfile::Step { width } => {
                if (i as f64) * dr < width {
                    2.0
                } else {
                    0.0
                }
            }
            InitialProfile::Uniform { value } => value,
        })
        .collect();
    let mut next = vec![0.0; n];
    let diff = 0.5 * g * g / (dr * dr);
    let growth = 1.0 + g * g;
    let steps = (t_total / dt).round() as usize;
    let rec = ((config.record_every / dt).round() as usize).max(1);
    let mut snapshots: Vec<(f64, Vec<f64>)> = Vec::new();
    let tol = 1e-9;
    for s in 0..=steps {
        if s % rec == 0 {
            snapshots.push((s as f64 * dt, phi.clone()));
        }
        if s == steps {
            break;
        }
        for i in 0..n {
            let left = if i == 0 { phi[1] } else { phi[i - 1] };
            let right = if i + 1 == n { phi[n - 2] } else { phi[i + 1] };
            let lap = (left - 2.0 * phi[i] + right) * diff;
            next[i] = phi[i] + dt * 1.5 * (2.0 - phi[i]) * (lap + growth * phi[i]);
        }
        std::mem::swap(&mut phi, &mut next);
        if s % rec == 0 && phi.iter().any(|v| !(-tol..=2.0 + tol).contains(v)) {
            return Err(Error::Numerical("FKPP solution left [0, 2]; reduce dt".into()));
        }
    }
    if phi.iter().any(|v| !(-tol..=2.0 + tol).contains(v)) {
        return Err(Error::Numerical("FKPP solution left [0, 2]; reduce dt".into()));
    }
    Ok(snapshots)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailWindow {
    pub c_min: f64,
    pub c_max: f64,
    pub t_min: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        Self { c_min: 1e-8, c_max: 1e-2, t_min: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub form: GrowthForm,
    /// nuisance prefactor: log C = a − λ(...)
    pub log_amplitude: f64,
    /// covariance of (a, λ, v_B, p)
    pub covariance: Vec<Vec<f64>>,
    pub stderr: [f64; 3],
    pub rms_residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
    pub num_points: usize,
}

/// Conditioning above which a fit is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Nonlinear least squares of log C = a − λ (r/v_B − t)^{1+p} / t^p over the
/// tail points of `field`.
///
/// The free log-amplitude `a` absorbs slowly varying prefactors of real
/// fronts (algebraic corrections in FKPP and circuit fronts) that would
/// otherwise bias p.
pub fn fit_growth_form(field: &SpaceTimeField, window: TailWindow) -> Result<GrowthFit> {
    let mut data = Vec::new();
    for si in 0..field.num_sites() {
        for ti in 0..field.num_times() {
            let (c, t) = (field.get(si, ti), field.times[ti]);
            if c >= window.c_min && c <= window.c_max && t >= window.t_min && t > 0.0 {
                data.push((field.sites[si], t, c.ln()));
            }
        }
    }
    if data.len() < 8 {
        return Err(Error::FitFailure(format!("only {} tail points", data.len())));
    }
    let t_lo = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let t_hi = data.iter().map(|d| d.1).fold(0.0, f64::max);
    if t_hi < 10.0 * t_lo {
        return Err(Error::FitFailure(format!("tail data span t in [{t_lo}, {t_hi}], less than a decade")));
    }
    // p = 0 start: log C = a − (λ/v) r + λ t is linear
    let ones = vec![1.0; data.len()];
    let rs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let ts: Vec<f64> = data.iter().map(|d| d.1).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.2).collect();
    let lin = least_squares(&[ones, rs.clone(), ts.clone()], &ys)?;
    let (lam0, v0) = if lin[2] > 0.0 && lin[1] < 0.0 {
        (lin[2], -lin[2] / lin[1])
    } else {
        let mut ratios: Vec<f64> = data.iter().map(|d| d.0 / d.1).collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (1.0, ratios[ratios.len() / 2].max(1e-3))
    };
    let residuals = |x: &[f64]| -> Vec<f64> {
        data.iter()
            .map(|&(r, t, y)| {
                let u = r / x[2] - t;
                x[0] - x[1] * u.signum() * u.abs().powf(1.0 + x[3]) / t.powf(x[3]) - y
            })
            .collect()
    };
    let lower = [-50.0, 1e-8, 1e-6, 0.0];
    let upper = [50.0, 1e8, 1e4, 5.0];
    let mut best: Option<crate::stats::NlsResult> = None;
    for p0 in [0.0, 0.5, 1.0, 2.0] {
        let x0 = [lin[0].clamp(-50.0, 50.0), lam0, v0, p0];
        if let Ok(fit) = levenberg_marquardt(&residuals, &x0, &lower, &upper, 400) {
            let better = match &best {
                None => true,
                Some(b) => fit.rms_residual < b.rms_residual,
            };
            if better && fit.params.iter().all(|v| v.is_finite()) {
                best = Some(fit);
            }
        }
    }
    let fit = best.ok_or_else(|| Error::FitFailure("growth-form fit failed from every start".into()))?;
    let form = GrowthForm::new(fit.params[1], fit.params[2], fit.params[3])?;
    Ok(GrowthFit {
        form,
        log_amplitude: fit.params[0],
        stderr: [fit.stderr(1), fit.stderr(2), fit.stderr(3)],
        covariance: fit.covariance.clone(),
        rms_residual: fit.rms_residual,
        condition: fit.condition,
        ill_conditioned: !(fit.condition < ILL_CONDITIONED),
        num_points: data.len(),
    })
}
