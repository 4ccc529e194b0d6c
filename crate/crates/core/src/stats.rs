//! Small statistics helpers: sample means, linear regression, Levenberg–Marquardt.

use crate::error::{Error, Result};
use faer::{Mat, Side};
use serde::Serialize;

/// Sample mean and its standard error (0 for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Standard error of the mean from `batches` batch means.
pub fn batch_means_stderr(xs: &[f64], batches: usize) -> f64 {
    let b = batches.min(xs.len()).max(1);
    let size = xs.len() / b;
    if size == 0 || b < 2 {
        return mean_stderr(xs).1;
    }
    let means: Vec<f64> = (0..b).map(|k| xs[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    mean_stderr(&means).1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = slope·x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::FitFailure(format!("linear fit needs >= 2 paired points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("degenerate abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let s2 = if x.len() > 2 { sse / (n - 2.0) } else { 0.0 };
    let slope_stderr = (s2 / sxx).sqrt();
    let intercept_stderr = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, intercept_stderr, r_squared })
}

/// Least squares y ≈ Σ_k coef_k · basis_k over a handful of regressors.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    let k = columns.len();
    if columns.iter().any(|c| c.len() != m) || m < k {
        return Err(Error::FitFailure("least squares: bad shapes".into()));
    }
    let a = Mat::from_fn(m, k, |i, j| columns[j][i]);
    let b = Mat::from_fn(m, 1, |i, _| y[i]);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let sol = solve_spd(&ata, &atb)?;
    Ok((0..k).map(|i| sol[(i, 0)]).collect())
}

fn solve_spd(a: &Mat<f64>, b: &Mat<f64>) -> Result<Mat<f64>> {
    use faer::linalg::solvers::Solve;
    let llt = a.llt(Side::Lower).map_err(|e| Error::FitFailure(format!("singular normal equations: {e:?}")))?;
    Ok(llt.solve(b))
}

#[derive(Clone, Debug, Serialize)]
pub struct NlsResult {
    pub params: Vec<f64>,
    /// covariance s²(JᵀJ)⁻¹ at the optimum
    pub covariance: Vec<Vec<f64>>,
    pub rms_residual: f64,
    /// condition number of JᵀJ at the optimum
    pub condition: f64,
    pub iterations: usize,
}

impl NlsResult {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }
}

/// Levenberg–Marquardt with a central-difference Jacobian and box bounds.
pub fn levenberg_marquardt(
    residuals: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
) -> Result<NlsResult> {
    let k = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..k {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let jacobian = |x: &[f64], r0: &[f64]| -> Mat<f64> {
        let mut jac = Mat::zeros(r0.len(), k);
        for j in 0..k {
            let h = 1e-6 * x[j].abs().max(1e-3);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] = (x[j] + h).min(upper[j]);
            xm[j] = (x[j] - h).max(lower[j]);
            let (rp, rm) = (residuals(&xp), residuals(&xm));
            let dx = xp[j] - xm[j];
            for i in 0..r0.len() {
                jac[(i, j)] = (rp[i] - rm[i]) / dx;
            }
        }
        jac
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut r = residuals(&x);
    if r.len() < k {
        return Err(Error::FitFailure(format!("{} residuals for {k} parameters", r.len())));
    }
    let mut c = cost(&r);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let jac = jacobian(&x, &r);
        let jtj = jac.transpose() * &jac;
        let rv = Mat::from_fn(r.len(), 1, |i, _| r[i]);
        let g = jac.transpose() * &rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let step = match solve_spd(&a, &g) {
                Ok(s) => s,
                Err(_) => {
                    mu *= 10.0;
                    continue;
                }
            };
            let mut xn: Vec<f64> = (0..k).map(|i| x[i] - step[(i, 0)]).collect();
            clamp(&mut xn);
            let rn = residuals(&xn);
            let cn = cost(&rn);
            if cn.is_finite() && cn < c {
                let rel = (c - cn) / c.max(1e-300);
                x = xn;
                r = rn;
                c = cn;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    mu = f64::INFINITY;
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved || !mu.is_finite() {
            break;
        }
    }
    let jac = jacobian(&x, &r);
    let jtj = jac.transpose() * &jac;
    let eig = jtj
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    let (emin, emax) = (eig[0].abs(), eig[k - 1].abs());
    let condition = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    let dof = (r.len() - k).max(1) as f64;
    let s2 = c / dof;
    let covariance = match solve_spd(&jtj, &Mat::identity(k, k)) {
        Ok(inv) => (0..k).map(|i| (0..k).map(|j| inv[(i, j)] * s2).collect()).collect(),
        Err(_) => vec![vec![f64::INFINITY; k]; k],
    };
    Ok(NlsResult {
        params: x,
        covariance,
        rms_residual: (c / r.len() as f64).sqrt(),
        condition,
        iterations,
    })
}
