//! Observables derived from density traces.

use ndarray::Array2;
use serde::Serialize;

use super::{evolve_correlation_with, CorrelationTrace, EvolveOptions, InitialState};
use crate::error::{Error, Result};
use crate::fit::{fit_exp_decay, fit_power_law, linear_regression, FitResult};
use crate::lattice::{LatticeConfig, PotentialKind};

/// Densities below this are treated as underflowed.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRatio {
    pub times: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `R(t) ~ a exp(-beta t)` over the retained samples.
    pub fit: Option<FitResult>,
    /// True when the series was cut at an underflowed density.
    pub truncated: bool,
}

/// `R(t) = n_a(t) / n_b(t)` for 1-based sites `a`, `b`.
pub fn density_ratio(trace: &CorrelationTrace, site_a: usize, site_b: usize) -> Result<DensityRatio> {
    let na = trace.site_density(site_a)?;
    let nb = trace.site_density(site_b)?;
    let keep = na.iter().zip(&nb).take_while(|(a, b)| **a >= DENSITY_FLOOR && **b >= DENSITY_FLOOR).count();
    let times = trace.times[..keep].to_vec();
    let ratio: Vec<f64> = na[..keep].iter().zip(&nb[..keep]).map(|(a, b)| a / b).collect();
    let fit = if keep >= 2 { fit_exp_decay(&times, &ratio).ok() } else { None };
    Ok(DensityRatio { times, ratio, fit, truncated: keep < trace.times.len() })
}

/// `N_r(t) = exp(F(L+1)t) sum_j n_j(t)`, combined in log space.
pub fn rescaled_number(trace: &CorrelationTrace, cfg: &LatticeConfig) -> Vec<f64> {
    let rate = cfg.f * (cfg.l + 1) as f64;
    trace
        .total_number()
        .iter()
        .zip(&trace.times)
        .map(|(n, t)| if *n > 0.0 { (rate * t + n.ln()).exp() } else { 0.0 })
        .collect()
}

/// `(1/L) sinh(L tau) / sinh(tau)`, the localized-damping prediction for
/// `N_r` at `t = tau / F`.
pub fn sinh_closed_form(l: usize, tau: f64) -> f64 {
    let l = l as f64;
    if tau == 0.0 {
        return 1.0;
    }
    let a = tau.abs();
    // sinh(x) = e^x (1 - e^{-2x}) / 2
    let ln = |x: f64| x + (-(-2.0 * x).exp()).ln_1p();
    (ln(l * a) - ln(a)).exp() / l
}

/// `N_r` for the single-particle uniform state at times `t = tau / F`.
pub fn rescaled_number_at(cfg: &LatticeConfig, taus: &[f64], opts: &EvolveOptions) -> Result<Vec<f64>> {
    if !(cfg.f > 0.0) {
        return Err(Error::InvalidConfig("rescaled times need F > 0".into()));
    }
    let mut times: Vec<f64> = taus.iter().map(|tau| tau / cfg.f).collect();
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    let offset = times.len() - taus.len();
    let tr = evolve_correlation_with(cfg, &InitialState::Uniform.correlation(cfg.l)?, &times, opts)?;
    Ok(rescaled_number(&tr, cfg)[offset..].to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourFit {
    pub level: f64,
    /// `(site, crossing time)` pairs.
    pub points: Vec<(usize, f64)>,
    /// `t = a j^b`.
    pub fit: FitResult,
}

impl ContourFit {
    pub fn slope(&self) -> f64 {
        self.fit.parameters[1]
    }
}

/// First time `n_j` falls to `level`, interpolating `ln n` linearly in `t`.
pub fn crossing_time(times: &[f64], density: &[f64], level: f64) -> Option<f64> {
    if !(density.first()? > &level) {
        return None;
    }
    let k = density.iter().position(|n| *n <= level)?;
    let (t0, t1) = (times[k - 1], times[k]);
    let (l0, l1) = (density[k - 1].ln(), density[k].max(DENSITY_FLOOR).ln());
    Some(t0 + (t1 - t0) * (level.ln() - l0) / (l1 - l0))
}

/// Iso-density contours over 1-based sites `sites.0 ..= sites.1`, each fit
/// to `t ∝ j^b`.
pub fn contour_fit(trace: &CorrelationTrace, levels: &[f64], sites: (usize, usize)) -> Result<Vec<ContourFit>> {
    let (lo, hi) = sites;
    if lo == 0 || hi > trace.sites() || lo >= hi {
        return Err(Error::SiteOutOfRange { site: if lo == 0 { lo } else { hi }, len: trace.sites() });
    }
    levels
        .iter()
        .map(|&level| {
            let points = (lo..=hi)
                .map(|j| {
                    let n = trace.site_density(j)?;
                    crossing_time(&trace.times, &n, level).map(|t| (j, t)).ok_or(Error::LevelNotCrossed(level))
                })
                .collect::<Result<Vec<(usize, f64)>>>()?;
            let js: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
            let ts: Vec<f64> = points.iter().map(|p| p.1).collect();
            Ok(ContourFit { level, fit: fit_power_law(&js, &ts)?, points })
        })
        .collect()
}

/// Largest relative deviation of the contour points from the localized
/// damping form `n_j(t) = n0 exp(-2 F j t)`.
pub fn localized_damping_deviation(contours: &[ContourFit], f: f64, n0: f64) -> f64 {
    contours
        .iter()
        .flat_map(|c| c.points.iter().map(move |(j, t)| (n0 * (-2.0 * f * *j as f64 * t).exp() / c.level - 1.0).abs()))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryOscillation {
    /// Mean decay rate of `n_1`.
    pub lambda: f64,
    /// Angular frequency of the dominant spectral peak.
    pub frequency: f64,
    pub has_oscillation: bool,
    /// Peak power over the median power of the scanned band.
    pub prominence: f64,
    /// Peak amplitude relative to the mean rescaled density.
    pub relative_amplitude: f64,
}

pub const TRANSIENT_FRACTION: f64 = 0.1;
pub const PROMINENCE_THRESHOLD: f64 = 5.0;
/// Oscillations weaker than this fraction of the rescaled mean are treated as noise.
pub const AMPLITUDE_FLOOR: f64 = 1e-3;

/// Oscillation of the rescaled first-site density `e^{Λt} n_1(t)`.
///
/// The first 10% of samples are discarded; `Λ` is minus the regression
/// slope of `ln n_1`. The rescaled signal is detrended (mean and line),
/// Hann-windowed and scanned on a 16x oversampled frequency grid from two
/// cycles per window up to the Nyquist frequency of the mean spacing.
pub fn boundary_oscillation(trace: &CorrelationTrace) -> Result<BoundaryOscillation> {
    let n1 = trace.site_density(1)?;
    let start = (trace.times.len() as f64 * TRANSIENT_FRACTION).ceil() as usize;
    let end = start + n1[start..].iter().take_while(|n| **n >= DENSITY_FLOOR).count();
    if end < start + 32 {
        return Err(Error::WindowTooShort(format!("{} usable samples after the transient", end.saturating_sub(start))));
    }
    let ts = &trace.times[start..end];
    let ln: Vec<f64> = n1[start..end].iter().map(|n| n.ln()).collect();
    let (_, slope) = linear_regression(ts, &ln)?;
    let lambda = -slope;
    // Rescale relative to the window start to keep the exponent small.
    let s: Vec<f64> = ts.iter().zip(&ln).map(|(t, l)| (l + lambda * (t - ts[0]) - ln[0]).exp()).collect();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let (c, b) = linear_regression(ts, &s)?;
    let span = ts[ts.len() - 1] - ts[0];
    let n = s.len();
    let weights: Vec<f64> = ts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let dt = 0.5 * (ts[(k + 1).min(n - 1)] - ts[k.saturating_sub(1)]);
            let hann = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (t - ts[0]) / span).cos());
            hann * dt
        })
        .collect();
    let resid: Vec<f64> = ts.iter().zip(&s).map(|(t, v)| v - c - b * t).collect();
    let w_lo = 2.0 * 2.0 * std::f64::consts::PI / span;
    let w_hi = std::f64::consts::PI * (n - 1) as f64 / span;
    let dw = 2.0 * std::f64::consts::PI / (16.0 * span);
    let grid: Vec<f64> = (0..).map(|k| w_lo + k as f64 * dw).take_while(|w| *w <= w_hi).collect();
    if grid.len() < 3 {
        return Err(Error::WindowTooShort("frequency band is empty".into()));
    }
    let power: Vec<f64> = grid
        .iter()
        .map(|w| {
            let (mut re, mut im) = (0.0, 0.0);
            for ((t, r), wt) in ts.iter().zip(&resid).zip(&weights) {
                let ph = w * (t - ts[0]);
                re += wt * r * ph.cos();
                im -= wt * r * ph.sin();
            }
            re * re + im * im
        })
        .collect();
    let (kmax, pmax) = power.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, p)| if *p > a.1 { (k, *p) } else { a });
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let prominence = if median > 0.0 { pmax / median } else { f64::INFINITY };
    let interior = kmax > 0 && kmax + 1 < grid.len();
    let frequency = if interior {
        let (a, bb, cc) = (power[kmax - 1].sqrt(), pmax.sqrt(), power[kmax + 1].sqrt());
        let den = a - 2.0 * bb + cc;
        let shift = if den != 0.0 { 0.5 * (a - cc) / den } else { 0.0 };
        grid[kmax] + shift.clamp(-0.5, 0.5) * dw
    } else {
        grid[kmax]
    };
    // Hann-weighted sum of a unit cosine is about half the weight total.
    let amplitude = 2.0 * pmax.sqrt() / weights.iter().sum::<f64>();
    let relative_amplitude = amplitude / mean.abs().max(f64::MIN_POSITIVE);
    Ok(BoundaryOscillation {
        lambda,
        frequency,
        has_oscillation: interior && prominence >= PROMINENCE_THRESHOLD && relative_amplitude >= AMPLITUDE_FLOOR,
        prominence,
        relative_amplitude,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevivalReport {
    pub kind: PotentialKind,
    /// First return time of the normalized profile, if any.
    pub period: Option<f64>,
    /// Largest L1 distance from the initial normalized profile.
    pub max_departure: f64,
    /// L1 distance at the detected return.
    pub return_distance: Option<f64>,
    pub centroid: Vec<f64>,
    pub width: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochComparison {
    pub real: RevivalReport,
    pub imaginary: RevivalReport,
}

/// Departure must exceed this before a return is looked for.
pub const REVIVAL_DEPARTURE: f64 = 0.2;
/// A return is a local minimum of the distance below this fraction of the
/// largest departure.
pub const REVIVAL_RETURN: f64 = 0.1;

/// Column-normalized densities.
pub fn normalized_profiles(densities: &Array2<f64>) -> Array2<f64> {
    let mut p = densities.clone();
    for mut col in p.columns_mut() {
        let s = col.sum();
        if s > 0.0 {
            col.mapv_inplace(|v| v / s);
        }
    }
    p
}

/// Revival analysis of a density trace.
pub fn revival(kind: PotentialKind, times: &[f64], densities: &Array2<f64>) -> RevivalReport {
    let p = normalized_profiles(densities);
    let p0 = p.column(0);
    let dist: Vec<f64> = p.columns().into_iter().map(|c| c.iter().zip(p0.iter()).map(|(a, b)| (a - b).abs()).sum()).collect();
    let max_departure = dist.iter().cloned().fold(0.0, f64::max);
    let sites: Vec<f64> = (1..=p.nrows()).map(|j| j as f64).collect();
    let centroid: Vec<f64> = p.columns().into_iter().map(|c| c.iter().zip(&sites).map(|(w, j)| w * j).sum()).collect();
    let width: Vec<f64> = p
        .columns()
        .into_iter()
        .zip(&centroid)
        .map(|(c, m)| c.iter().zip(&sites).map(|(w, j)| w * (j - m).powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut period = None;
    let mut return_distance = None;
    if max_departure >= REVIVAL_DEPARTURE {
        let mut left = false;
        for k in 1..dist.len().saturating_sub(1) {
            if dist[k] >= 0.5 * max_departure {
                left = true;
            }
            if left && dist[k] <= REVIVAL_RETURN * max_departure && dist[k] <= dist[k - 1] && dist[k] <= dist[k + 1] {
                let (a, b, c) = (dist[k - 1], dist[k], dist[k + 1]);
                let den = a - 2.0 * b + c;
                let shift = if den > 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
                let dt = if shift >= 0.0 { times[k + 1] - times[k] } else { times[k] - times[k - 1] };
                period = Some(times[k] + shift * dt);
                return_distance = Some(b);
                break;
            }
        }
    }
    RevivalReport { kind, period, max_departure, return_distance, centroid, width }
}

/// Runs the real and imaginary ladders with the same `(L, J, F)` and initial
/// state and analyses both for revivals.
pub fn bloch_comparison(cfg: &LatticeConfig, init: InitialState, times: &[f64], opts: &EvolveOptions) -> Result<BlochComparison> {
    let d0 = init.correlation(cfg.l)?;
    let run = |kind: PotentialKind| -> Result<RevivalReport> {
        let tr = evolve_correlation_with(&cfg.with_kind(kind), &d0, times, opts)?;
        Ok(revival(kind, times, &tr.densities))
    };
    Ok(BlochComparison { real: run(PotentialKind::RealStark)?, imaginary: run(PotentialKind::ImaginaryStark)? })
}

#[cfg(test)]
mod tests {
    use super::super::{evolve_correlation, linear_times};
    use super::*;

    fn cfg(l: usize, f: f64) -> LatticeConfig {
        LatticeConfig::imaginary(l, 1.0, f).unwrap()
    }

    #[test]
    fn sinh_form_limits() {
        assert_eq!(sinh_closed_form(40, 0.0), 1.0);
        assert!((sinh_closed_form(40, 1e-6) - 1.0).abs() < 1e-8);
        let direct = (40.0f64 * 0.3).sinh() / 0.3f64.sinh() / 40.0;
        assert!((sinh_closed_form(40, 0.3) / direct - 1.0).abs() < 1e-13);
        let big = sinh_closed_form(40, 10.0);
        assert!((big.ln() - (390.0 - 40f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn crossing_of_exact_exponential() {
        let times = linear_times(5.0, 501).unwrap();
        let n: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let t = crossing_time(&times, &n, 0.01).unwrap();
        assert!((t - 0.01f64.ln() / -2.0).abs() < 1e-12);
        assert_eq!(crossing_time(&times, &n, 2.0), None);
        assert_eq!(crossing_time(&times, &n, 1e-9), None);
    }

    #[test]
    fn synthetic_contours_have_unit_slope() {
        let times = linear_times(2.0, 2001).unwrap();
        let f = 1.0;
        let dens = Array2::from_shape_fn((40, times.len()), |(j, k)| (-2.0 * f * (j + 1) as f64 * times[k]).exp());
        let tr = CorrelationTrace {
            times: times.clone(),
            delta: vec![],
            densities: dens,
            route: super::super::Route::Spectral,
            condition: None,
            warnings: vec![],
        };
        let fits = contour_fit(&tr, &[0.1, 0.01], (5, 30)).unwrap();
        for c in &fits {
            assert!((c.slope() + 1.0).abs() < 1e-10);
            let want = (-c.level.ln() / (2.0 * f)).ln();
            assert!((c.fit.parameters[0].ln() - want).abs() < 1e-10);
        }
        assert!(localized_damping_deviation(&fits, f, 1.0) < 1e-10);
        assert_eq!(contour_fit(&tr, &[1e-200], (5, 30)).unwrap_err(), Error::LevelNotCrossed(1e-200));
    }

    #[test]
    fn symmetric_start_has_unit_ratio() {
        let times = linear_times(1.0, 11).unwrap();
        let tr = evolve_correlation(&cfg(40, 0.01), InitialState::GaussianPacket { center: 20.0, beta: 0.05 }, &times).unwrap();
        let r = density_ratio(&tr, 25, 15).unwrap();
        assert!((r.ratio[0] - 1.0).abs() < 1e-8, "{}", r.ratio[0] - 1.0);
    }

    #[test]
    fn ratio_flat_when_unbroken_and_decaying_when_broken() {
        let init = InitialState::GaussianPacket { center: 20.0, beta: 0.05 };
        let times = linear_times(30.0, 301).unwrap();
        let tr = evolve_correlation(&cfg(40, 1e-5), init, &times).unwrap();
        let r = density_ratio(&tr, 25, 15).unwrap();
        assert!(r.ratio.iter().all(|v| (v - 1.0).abs() < 0.05), "{:?}", r.ratio);
        let tr = evolve_correlation(&cfg(40, 0.01), init, &times).unwrap();
        let r = density_ratio(&tr, 25, 15).unwrap();
        let fit = r.fit.unwrap();
        assert!(fit.parameters[1] > 0.0);
    }

    #[test]
    fn rescaled_number_starts_at_one() {
        let times = linear_times(2.0, 5).unwrap();
        let c = cfg(20, 0.3);
        let tr = evolve_correlation(&c, InitialState::Uniform, &times).unwrap();
        assert!((rescaled_number(&tr, &c)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_cosine_is_detected() {
        let times = linear_times(60.0, 1201).unwrap();
        let dens = Array2::from_shape_fn((2, times.len()), |(_, k)| {
            let t = times[k];
            (-0.3 * t).exp() * (1.0 + 0.2 * (1.7 * t).cos())
        });
        let tr = CorrelationTrace { times, delta: vec![], densities: dens, route: super::super::Route::Spectral, condition: None, warnings: vec![] };
        let osc = boundary_oscillation(&tr).unwrap();
        assert!(osc.has_oscillation);
        assert!((osc.frequency - 1.7).abs() < 0.01, "{osc:?}");
        assert!((osc.lambda - 0.3).abs() < 0.01, "{osc:?}");
    }

    #[test]
    fn pure_decay_is_not_oscillating() {
        let times = linear_times(60.0, 1201).unwrap();
        let dens = Array2::from_shape_fn((2, times.len()), |(_, k)| {
            let t = times[k];
            (-0.3 * t).exp() + 0.5 * (-0.9 * t).exp()
        });
        let tr = CorrelationTrace { times, delta: vec![], densities: dens, route: super::super::Route::Spectral, condition: None, warnings: vec![] };
        assert!(!boundary_oscillation(&tr).unwrap().has_oscillation);
    }

    #[test]
    fn short_window_is_rejected() {
        let times = linear_times(1.0, 10).unwrap();
        let tr = evolve_correlation(&cfg(4, 0.5), InitialState::Uniform, &times).unwrap();
        assert!(matches!(boundary_oscillation(&tr), Err(Error::WindowTooShort(_))));
    }
}
