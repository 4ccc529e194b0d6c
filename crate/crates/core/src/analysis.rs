//! Contour extraction and broadening-exponent analysis shared by the
//! free-fermion, tensor-network and phenomenology layers.
//!
//! A growth form C = exp(−λ (r/v_B − t)^{1+p} / t^p) has level sets
//! r_θ(t) = v_B t + v_B (t^p ln(1/θ)/λ)^{1/(1+p)}, so the spacing between two
//! levels scales as t^{p/(1+p)}.

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::stats::{least_squares, levenberg_marquardt, linear_fit, LinearFit};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contour {
    pub theta: f64,
    /// (t, r_θ(t)) pairs, ascending in t
    pub points: Vec<(f64, f64)>,
}

/// Outermost crossing of level `theta` at each time, interpolated in log C.
/// Times where the level is not crossed inside the grid are skipped.
pub fn extract_contour(field: &SpaceTimeField, theta: f64) -> Contour {
    let mut points = Vec::new();
    let ns = field.num_sites();
    for ti in 0..field.num_times() {
        let Some(i) = (0..ns).rev().find(|&s| field.get(s, ti) >= theta) else {
            continue;
        };
        if i + 1 >= ns {
            continue;
        }
        let (v0, v1) = (field.get(i, ti), field.get(i + 1, ti));
        let (r0, r1) = (field.sites[i], field.sites[i + 1]);
        let frac = if v1 > 0.0 {
            (theta.ln() - v0.ln()) / (v1.ln() - v0.ln())
        } else {
            (v0 - theta) / (v0 - v1)
        };
        points.push((field.times[ti], r0 + frac.clamp(0.0, 1.0) * (r1 - r0)));
    }
    Contour { theta, points }
}

/// Log-log slope of the separation between two contours over t ∈ [t_min, t_max].
pub fn gap_slope(inner: &Contour, outer: &Contour, t_min: f64, t_max: f64) -> Result<LinearFit> {
    let mut lt = Vec::new();
    let mut lg = Vec::new();
    for &(t, r_in) in &inner.points {
        if t < t_min || t > t_max || t <= 0.0 {
            continue;
        }
        if let Some(&(_, r_out)) = outer.points.iter().find(|(to, _)| (to - t).abs() < 1e-12) {
            let gap = r_out - r_in;
            if gap > 0.0 {
                lt.push(t.ln());
                lg.push(gap.ln());
            }
        }
    }
    if lt.len() < 3 {
        return Err(Error::FitFailure(format!(
            "only {} usable contour-gap points in [{t_min}, {t_max}]",
            lt.len()
        )));
    }
    linear_fit(&lt, &lg)
}

/// p from a gap slope s = p/(1+p).
pub fn p_from_gap_slope(s: f64) -> f64 {
    s / (1.0 - s)
}

/// Butterfly velocity from level sets: each contour is fitted to
/// r = v t + a t^s + c with the broadening power `s` held fixed, and the
/// velocities are averaged over contours. For s near 0 the t^s column
/// duplicates the constant and is dropped.
pub fn contour_velocity(contours: &[Contour], s: f64, t_min: f64, t_max: f64) -> Result<f64> {
    let mut vs = Vec::new();
    for c in contours {
        let pts: Vec<_> = c.points.iter().filter(|p| p.0 >= t_min && p.0 <= t_max && p.0 > 0.0).collect();
        if pts.len() < 4 {
            continue;
        }
        let x1: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let x2: Vec<f64> = pts.iter().map(|p| p.0.powf(s)).collect();
        let x3 = vec![1.0; pts.len()];
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let cols = if s.abs() < 0.05 { vec![x1, x3] } else { vec![x1, x2, x3] };
        vs.push(least_squares(&cols, &y)?[0]);
    }
    if vs.is_empty() {
        return Err(Error::FitFailure("no contour has enough points for a velocity fit".into()));
    }
    Ok(vs.iter().sum::<f64>() / vs.len() as f64)
}

/// Level-set position of the growth form.
pub fn growth_contour(lambda: f64, v_b: f64, p: f64, theta: f64, t: f64) -> f64 {
    v_b * t + v_b * (t.powf(p) * (1.0 / theta).ln() / lambda).powf(1.0 / (1.0 + p))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourAnalysis {
    pub v_b: f64,
    pub p: f64,
    pub lambda: f64,
    /// standard errors of (λ, v_B, p) from the contour fit
    pub stderr: [f64; 3],
    pub rms_residual: f64,
    /// slope of log(gap) vs log t between the extreme levels
    pub gap_slope: f64,
    pub gap_slope_stderr: f64,
    /// p implied by the gap slope alone
    pub p_from_gap: f64,
    pub contours: Vec<Contour>,
}

/// Fits every level-set to the growth-form contour and measures the gap slope
/// between the highest and lowest levels, using times in [t_min, t_max].
pub fn contour_analysis(field: &SpaceTimeField, thetas: &[f64], t_min: f64, t_max: f64) -> Result<ContourAnalysis> {
    if thetas.len() < 2 {
        return Err(Error::InvalidInput("need at least two contour levels".into()));
    }
    let mut levels: Vec<f64> = thetas.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let contours: Vec<Contour> = levels.iter().map(|&th| extract_contour(field, th)).collect();
    for c in &contours {
        let pts: Vec<_> = c.points.iter().filter(|p| p.0 >= t_min && p.0 <= t_max).collect();
        let span = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
            - pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let tol = 1e-3 * span.max(1.0);
        if pts.windows(2).any(|w| w[1].1 < w[0].1 - tol) {
            return Err(Error::FitFailure(format!("contour θ={} is not monotone in t", c.theta)));
        }
    }
    let gap = gap_slope(&contours[0], &contours[contours.len() - 1], t_min, t_max)?;
    let p_gap = p_from_gap_slope(gap.slope).max(0.0);

    let mut data = Vec::new();
    for c in &contours {
        for &(t, r) in &c.points {
            if t >= t_min && t <= t_max && t > 0.0 {
                data.push((t, (1.0 / c.theta).ln(), r));
            }
        }
    }
    // starting point: with p fixed, r = v·t + v·λ^{-1/(1+p)}·(t^p L)^{1/(1+p)} is linear
    let e = 1.0 / (1.0 + p_gap);
    let x1: Vec<f64> = data.iter().map(|d| d.0).collect();
    let x2: Vec<f64> = data.iter().map(|d| (d.0.powf(p_gap) * d.1).powf(e)).collect();
    let y: Vec<f64> = data.iter().map(|d| d.2).collect();
    let lin = least_squares(&[x1, x2], &y)?;
    let v0 = lin[0].max(1e-3);
    let lam0 = if lin[1] > 0.0 { (v0 / lin[1]).powf(1.0 + p_gap) } else { 1.0 };
    let fit = levenberg_marquardt(
        |x| data.iter().map(|&(t, l, r)| growth_contour(x[0], x[1], x[2], (-l).exp(), t) - r).collect(),
        &[lam0, v0, p_gap],
        &[1e-8, 1e-6, 0.0],
        &[1e8, 1e3, 10.0],
        300,
    )?;
    Ok(ContourAnalysis {
        lambda: fit.params[0],
        v_b: fit.params[1],
        p: fit.params[2],
        stderr: [fit.stderr(0), fit.stderr(1), fit.stderr(2)],
        rms_residual: fit.rms_residual,
        gap_slope: gap.slope,
        gap_slope_stderr: gap.slope_stderr,
        p_from_gap: p_gap,
        contours,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(lambda: f64, v: f64, p: f64) -> SpaceTimeField {
        let sites: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        let times: Vec<f64> = (1..=60).map(|i| i as f64 * 2.0).collect();
        SpaceTimeField::from_fn(sites, times, "synthetic", |r, t| {
            let u = (r / v - t).max(0.0);
            (-lambda * u.powf(1.0 + p) / t.powf(p)).exp().min(2.0)
        })
    }

    #[test]
    fn contour_matches_closed_form() {
        let f = synthetic(0.8, 1.2, 0.5);
        let c = extract_contour(&f, 1e-4);
        for &(t, r) in &c.points {
            let want = growth_contour(0.8, 1.2, 0.5, 1e-4, t);
            assert!((r - want).abs() < 0.05, "t={t}: {r} vs {want}");
        }
    }

    #[test]
    fn gap_slopes_of_synthetic_fields() {
        for (p, want) in [(1.0, 0.5), (0.0, 0.0), (0.5, 1.0 / 3.0)] {
            let f = synthetic(0.8, 1.2, p);
            let a = contour_analysis(&f, &[1e-2, 1e-4, 1e-6], 10.0, 120.0).unwrap();
            assert!((a.gap_slope - want).abs() < 0.02, "p={p}: slope {}", a.gap_slope);
            assert!((a.p - p).abs() < 0.05, "p={p}: fitted {}", a.p);
            assert!((a.v_b - 1.2).abs() < 0.02);
        }
    }

    #[test]
    fn growth_contour_gap_scaling_exact() {
        // δr(t) ∝ t^{p/(1+p)} to 1e-6 relative
        let (l, v, p) = (0.7, 1.3, 0.8);
        let gap = |t: f64| growth_contour(l, v, p, 1e-6, t) - growth_contour(l, v, p, 1e-2, t);
        let s = p / (1.0 + p);
        for t in [1.0, 3.0, 10.0, 100.0] {
            let ratio = gap(2.0 * t) / gap(t);
            assert!((ratio / 2f64.powf(s) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn non_monotone_contour_is_rejected() {
        let mut f = synthetic(0.8, 1.2, 0.0);
        // wipe the front at a late time so the contour jumps backwards
        let ti = f.num_times() - 5;
        for s in 0..f.num_sites() {
            f.set(s, ti, if s < 3 { 1.0 } else { 1e-12 });
        }
        assert!(matches!(
            contour_analysis(&f, &[1e-2, 1e-6], 10.0, 120.0),
            Err(Error::FitFailure(_))
        ));
    }
}
