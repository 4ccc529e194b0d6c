//! Squared commutators of translation-invariant quadratic Majorana chains.
//!
//! With H = (1/2) Σ h_{rs} χ_r χ_s and h_{r,r+m} = −i a_m / 2, each Majorana
//! evolves linearly, χ_0(t) = Σ_r g(r,t) χ_r with
//! g(r,t) = (1/N) Σ_k e^{i ε_k t − i k r} and ε_k = Σ_m a_m sin(m k).
//! For nearest-neighbour hopping g(r,t) = J_r(t). The squared commutator
//! with a Majorana at distance r is C = 4 g².

use crate::analysis::{contour_analysis, contour_velocity, ContourAnalysis};
use crate::error::{invalid, Error, Result};
use crate::field::SpaceTimeField;
use crate::quantum::C64;
use faer::Mat;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Contour levels used for the broadening exponent.
pub const TAIL_LEVELS: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_RING: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticMajorana {
    ring_size: usize,
    /// a_m for hopping range m = 1, 2, ...
    couplings: Vec<f64>,
}

impl QuadraticMajorana {
    pub fn new(ring_size: usize, couplings: Vec<f64>) -> Result<Self> {
        if ring_size < 4 {
            return invalid("ring needs at least 4 sites");
        }
        if couplings.is_empty() || couplings.len() * 2 >= ring_size {
            return invalid("hopping range must be between 1 and N/2");
        }
        if couplings.iter().any(|a| !a.is_finite()) {
            return invalid("couplings must be finite");
        }
        Ok(Self { ring_size, couplings })
    }

    pub fn nearest_neighbor(ring_size: usize) -> Result<Self> {
        Self::new(ring_size, vec![1.0])
    }

    pub fn ring_size(&self) -> usize {
        self.ring_size
    }

    pub fn dispersion(&self, k: f64) -> f64 {
        self.couplings.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * k).sin()).sum()
    }

    pub fn group_velocity(&self, k: f64) -> f64 {
        self.couplings.iter().enumerate().map(|(m, a)| a * (m + 1) as f64 * ((m + 1) as f64 * k).cos()).sum()
    }

    /// max_k |ε'(k)| on a fine grid.
    pub fn max_group_velocity(&self) -> f64 {
        (0..20_000).map(|j| self.group_velocity(2.0 * PI * j as f64 / 20_000.0).abs()).fold(0.0, f64::max)
    }

    /// The imaginary antisymmetric coupling matrix h on the ring.
    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.ring_size;
        let mut h = Mat::zeros(n, n);
        for r in 0..n {
            for (m, a) in self.couplings.iter().enumerate() {
                let s = (r + m + 1) % n;
                h[(r, s)] += C64::new(0.0, -a / 2.0);
                h[(s, r)] += C64::new(0.0, a / 2.0);
            }
        }
        h
    }

    /// g(r,t) for r = 0..N in ring order (r > N/2 are negative distances).
    pub fn propagator_row(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.ring_size;
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        self.row_with(&*fft, t)
    }

    fn row_with(&self, fft: &dyn rustfft::Fft<f64>, t: f64) -> Result<Vec<f64>> {
        let n = self.ring_size;
        let mut buf: Vec<C64> = (0..n)
            .map(|j| {
                let e = self.dispersion(2.0 * PI * j as f64 / n as f64);
                C64::new(0.0, e * t).exp()
            })
            .collect();
        fft.process(&mut buf);
        let scale = 1.0 / n as f64;
        let max_imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max) * scale;
        if max_imag > 1e-10 {
            return Err(Error::Numerical(format!("propagator has imaginary part {max_imag:e}")));
        }
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }

    /// Largest distance whose propagator is free of wrap-around up to `t_max`.
    pub fn safe_distance(&self, t_max: f64) -> usize {
        let reach = self.max_group_velocity() * t_max + 10.0 * t_max.max(1.0).cbrt() + 20.0;
        (self.ring_size as f64 / 2.0 - reach).max(0.0) as usize
    }
}

pub fn propagator_g(model: &QuadraticMajorana, r: i64, t: f64) -> Result<f64> {
    let row = model.propagator_row(t)?;
    let n = model.ring_size as i64;
    Ok(row[r.rem_euclid(n) as usize])
}

/// C(r,t) = 4 g(r,t)² for r = 0..=max_distance over the given times.
pub fn freefermion_otoc(model: &QuadraticMajorana, max_distance: usize, times: &[f64]) -> Result<SpaceTimeField> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return invalid("times must be finite and non-negative");
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if max_distance > model.safe_distance(t_max) {
        return invalid(format!(
            "ring of {} sites wraps around before distance {max_distance} at t={t_max}; use a larger ring",
            model.ring_size
        ));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(model.ring_size);
    let rows: Vec<Vec<f64>> = times.par_iter().map(|&t| model.row_with(&*fft, t)).collect::<Result<_>>()?;
    let sites: Vec<f64> = (0..=max_distance).map(|r| r as f64).collect();
    let mut field = SpaceTimeField::zeros(sites, times.to_vec(), "free-fermion");
    for (ti, row) in rows.iter().enumerate() {
        for r in 0..=max_distance {
            field.set(r, ti, 4.0 * row[r] * row[r]);
        }
    }
    Ok(field)
}

#[derive(Clone, Debug, Serialize)]
pub struct AiryTailFit {
    /// from contour positions with the measured broadening power held fixed
    pub v_b: f64,
    /// p from the contour separation, s = p/(1+p)
    pub broadening_p: f64,
    pub gap_slope: f64,
    pub gap_slope_stderr: f64,
    pub analysis: ContourAnalysis,
}

/// Broadening exponent and butterfly velocity from the tail contours of a
/// free-fermion field, using times in [t_min, t_max].
pub fn airy_tail_fit(field: &SpaceTimeField, t_min: f64, t_max: f64) -> Result<AiryTailFit> {
    let analysis = contour_analysis(field, &TAIL_LEVELS, t_min, t_max)?;
    let v_b = contour_velocity(&analysis.contours, analysis.gap_slope, t_min, t_max)?;
    Ok(AiryTailFit {
        v_b,
        broadening_p: analysis.p_from_gap,
        gap_slope: analysis.gap_slope,
        gap_slope_stderr: analysis.gap_slope_stderr,
        analysis,
    })
}
