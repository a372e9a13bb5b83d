//! Least-squares fits used across the analysis modules.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `a * x^b`, parameters `[a, b]`.
    PowerLaw,
    /// `c`, parameters `[c]`.
    Constant,
    /// `a * exp(-beta * t)`, parameters `[a, beta]`.
    ExpDecay,
    /// `a0 * exp(-((n - m) / sigma)^2)`, parameters `[a0, sigma, m]` with `m` held fixed.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub parameters: Vec<f64>,
    /// Root-mean-square deviation of the model from the data, in data units.
    pub residual: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.parameters;
        match self.model {
            FitModel::PowerLaw => p[0] * x.powf(p[1]),
            FitModel::Constant => p[0],
            FitModel::ExpDecay => p[0] * (-p[1] * x).exp(),
            FitModel::Gaussian => p[0] * (-((x - p[2]) / p[1]).powi(2)).exp(),
        }
    }

    fn with_residual(model: FitModel, parameters: Vec<f64>, xs: &[f64], ys: &[f64]) -> Self {
        let mut fit = Self { model, parameters, residual: 0.0, n_points: xs.len() };
        let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (fit.eval(*x) - y).powi(2)).sum();
        fit.residual = (ss / xs.len() as f64).sqrt();
        fit
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateProfile("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// `y = a x^b` by linear least squares on `(ln x, ln y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (c, b) = linear_regression(&lx, &ly)?;
    Ok(FitResult::with_residual(FitModel::PowerLaw, vec![c.exp(), b], xs, ys))
}

pub fn fit_constant(ys: &[f64]) -> Result<FitResult> {
    if ys.is_empty() {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let xs = vec![0.0; ys.len()];
    Ok(FitResult::with_residual(FitModel::Constant, vec![mean], &xs, ys))
}

/// `y = a exp(-beta t)` by linear least squares on `(t, ln y)`.
pub fn fit_exp_decay(ts: &[f64], ys: &[f64]) -> Result<FitResult> {
    if ys.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive);
    }
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (c, slope) = linear_regression(ts, &ly)?;
    Ok(FitResult::with_residual(FitModel::ExpDecay, vec![c.exp(), -slope], ts, ys))
}

/// Gaussian `a0 exp(-((n - center)/sigma)^2)` with the center held fixed.
///
/// Starts from a log-space quadratic fit over the points above 1e-3 of the
/// peak, then refines `(a0, sigma)` by Levenberg-Marquardt in linear space.
pub fn fit_gaussian(ns: &[f64], ys: &[f64], center: f64) -> Result<FitResult> {
    if ns.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: ns.len(), got: ys.len() });
    }
    let peak = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateProfile("no positive samples".into()));
    }
    // ln y = ln a0 - u / sigma^2 with u = (n - center)^2
    let (us, lys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 1e-3 * peak)
        .map(|(n, y)| ((n - center).powi(2), y.ln()))
        .unzip();
    let (mut a0, mut sigma) = match linear_regression(&us, &lys) {
        Ok((c, s)) if s < 0.0 => (c.exp(), (-1.0 / s).sqrt()),
        _ => (peak, 1.0),
    };

    let cost = |a0: f64, sigma: f64| -> f64 {
        ns.iter().zip(ys).map(|(n, y)| (a0 * (-((n - center) / sigma).powi(2)).exp() - y).powi(2)).sum()
    };
    let mut lambda = 1e-3;
    let mut current = cost(a0, sigma);
    for _ in 0..200 {
        // Normal equations of the 2-parameter Jacobian.
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (n, y) in ns.iter().zip(ys) {
            let z = (n - center) / sigma;
            let e = (-z * z).exp();
            let r = a0 * e - y;
            let g = [e, a0 * e * 2.0 * z * z / sigma];
            for i in 0..2 {
                jtr[i] += g[i] * r;
                for k in 0..2 {
                    jtj[i][k] += g[i] * g[k];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let a = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let da = -(a[1][1] * jtr[0] - a[0][1] * jtr[1]) / det;
            let ds = -(a[0][0] * jtr[1] - a[1][0] * jtr[0]) / det;
            let (na, ns_) = (a0 + da, sigma + ds);
            if ns_ > 0.0 {
                let c = cost(na, ns_);
                if c <= current {
                    let rel = (current - c) / current.max(f64::MIN_POSITIVE);
                    a0 = na;
                    sigma = ns_;
                    current = c;
                    lambda = (lambda * 0.1).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(a0.is_finite() && sigma.is_finite()) {
        return Err(Error::DegenerateProfile("gaussian fit diverged".into()));
    }
    Ok(FitResult::with_residual(FitModel::Gaussian, vec![a0, sigma, center], ns, ys))
}
