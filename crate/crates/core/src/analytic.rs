//! Infinite-chain solution of the imaginary Stark ladder: modified Bessel
//! kernel, analytic eigenpairs and Gaussian localization lengths.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::eigen::{apply_phase_gauge, eigendecompose, order_by_imag_desc};
use crate::error::{Error, Result};
use crate::fit::{fit_gaussian, fit_power_law, FitResult};
use crate::lattice::{build_hamiltonian, LatticeConfig, PotentialKind};

pub const MAX_ORDER: i64 = 2000;
pub const MAX_ARG: f64 = 500.0;
/// Largest `gamma = J/F` for which analytic states are produced.
pub const MAX_GAMMA: f64 = 500.0;

fn check_range(n: i64, x: f64) -> Result<()> {
    if n.abs() > MAX_ORDER || !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::OutOfRange { n, x });
    }
    Ok(())
}

/// `I_0(x)` from its power series; every term is positive so there is no
/// cancellation.
fn bessel_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut sum) = (1.0, 1.0);
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// `I_0(x) ..= I_nmax(x)` by Miller's backward recurrence, normalized to
/// the series value of `I_0`.
pub fn bessel_i_sequence(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_range(n_max as i64, x)?;
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    // I_{k+1}/I_k ~ exp(-k^2/2x) for k << x; this start sits ~1e-17 below the peak.
    let start = n_max + 20 + (80.0 * x.max(1.0)).sqrt().ceil() as usize;
    let (mut above, mut cur) = (0.0f64, 1e-200f64);
    for k in (1..=start).rev() {
        let below = above + (2.0 * k as f64 / x) * cur;
        above = cur;
        cur = below;
        if k - 1 <= n_max {
            out[k - 1] = cur;
        }
        if cur > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let i0 = out[0];
    let series = bessel_i0_series(x);
    out.iter_mut().for_each(|v| *v = *v / i0 * series);
    Ok(out)
}

/// Modified Bessel function of the first kind `I_n(x)`, `I_{-n} = I_n`.
pub fn bessel_i(n: i64, x: f64) -> Result<f64> {
    check_range(n, x)?;
    Ok(bessel_i_sequence(n.unsigned_abs() as usize, x)?[n.unsigned_abs() as usize])
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticState {
    /// Localization center, 1-based site.
    pub m: usize,
    pub gamma: f64,
    pub amplitudes: Array1<C64>,
    pub norm_constant: f64,
}

fn check_analytic(m: usize, cfg: &LatticeConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.kind != PotentialKind::ImaginaryStark {
        return Err(Error::RequiresImaginaryStark);
    }
    if !(cfg.f > 0.0) {
        return Err(Error::InvalidConfig("analytic states need F > 0".into()));
    }
    if m == 0 || m > cfg.l {
        return Err(Error::SiteOutOfRange { site: m, len: cfg.l });
    }
    let gamma = cfg.j / cfg.f;
    if gamma > MAX_GAMMA {
        return Err(Error::OutOfRange { n: 0, x: gamma });
    }
    Ok(gamma)
}

/// `E_m = -i m F` with `psi_m(n) = c i^(m-n) I_(n-m)(J/F)` truncated to the
/// chain and renormalized, in the eigensolver's phase gauge.
pub fn analytic_eigenpair(m: usize, cfg: &LatticeConfig) -> Result<(C64, AnalyticState)> {
    let gamma = check_analytic(m, cfg)?;
    let l = cfg.l;
    let reach = (m - 1).max(l - m);
    let bessel = bessel_i_sequence(reach, gamma)?;
    let phases = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let mut amps: Vec<C64> = (1..=l)
        .map(|n| {
            let k = n as i64 - m as i64;
            phases[(-k).rem_euclid(4) as usize] * bessel[k.unsigned_abs() as usize]
        })
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    apply_phase_gauge(&mut amps);
    let state = AnalyticState { m, gamma, amplitudes: Array1::from(amps), norm_constant: 1.0 / norm };
    Ok((C64::new(0.0, -(m as f64) * cfg.f), state))
}

pub fn analytic_ipr(cfg: &LatticeConfig, m: usize) -> Result<f64> {
    let (_, s) = analytic_eigenpair(m, cfg)?;
    Ok(s.amplitudes.iter().map(|z| z.norm_sqr().powi(2)).sum())
}

/// Fits `|psi(n)|^2` to a Gaussian centered at the argmax site.
pub fn gaussian_fit(state: ArrayView1<'_, C64>) -> Result<FitResult> {
    let dens: Vec<f64> = state.iter().map(|z| z.norm_sqr()).collect();
    let n = dens.len();
    let (peak, max) = dens.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if *v > a.1 { (k, *v) } else { a });
    let min = dens.iter().cloned().fold(f64::INFINITY, f64::min);
    if n < 3 || max - min <= 1e-12 * max {
        return Err(Error::DegenerateProfile("flat profile".into()));
    }
    if peak == 0 || peak == n - 1 {
        return Err(Error::DegenerateProfile(format!("peak on boundary site {}", peak + 1)));
    }
    let sites: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    fit_gaussian(&sites, &dens, (peak + 1) as f64)
}

/// `l_s = sqrt(2) sigma` of a Gaussian fit.
pub fn localization_length(fit: &FitResult) -> f64 {
    std::f64::consts::SQRT_2 * fit.parameters[1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileSource {
    /// Middle eigenstate of the finite chain, by imaginary part.
    Numeric,
    /// Analytic state centered on the middle site.
    Analytic,
}

/// Localization length of the state centered at `L/2`.
pub fn middle_localization_length(cfg: &LatticeConfig, source: ProfileSource) -> Result<f64> {
    let m = (cfg.l / 2).max(1);
    let state = match source {
        ProfileSource::Analytic => analytic_eigenpair(m, cfg)?.1.amplitudes,
        ProfileSource::Numeric => {
            let spec = eigendecompose(&build_hamiltonian(cfg)?)?;
            spec.right_vector(order_by_imag_desc(&spec.values)[m - 1])
        }
    };
    Ok(localization_length(&gaussian_fit(state.view())?))
}

/// Power law `l_s = a F^b` over the given fields.
pub fn loc_length_powerlaw(template: &LatticeConfig, f_values: &[f64], source: ProfileSource) -> Result<FitResult> {
    let ls = f_values
        .iter()
        .map(|&f| middle_localization_length(&template.with_f(f), source))
        .collect::<Result<Vec<f64>>>()?;
    fit_power_law(f_values, &ls)
}

/// Argmax site of the eigenstates with the given labels (1-based, ordered
/// by decreasing imaginary part) at each field value.
pub fn argmax_trajectory(template: &LatticeConfig, f_values: &[f64], labels: &[usize]) -> Result<Vec<Vec<usize>>> {
    f_values
        .iter()
        .map(|&f| {
            let cfg = template.with_f(f);
            let spec = eigendecompose(&build_hamiltonian(&cfg)?)?;
            let order = order_by_imag_desc(&spec.values);
            labels
                .iter()
                .map(|&m| {
                    if m == 0 || m > cfg.l {
                        return Err(Error::SiteOutOfRange { site: m, len: cfg.l });
                    }
                    let col = spec.right.column(order[m - 1]);
                    let arg = col.iter().enumerate().fold((0, -1.0), |a, (k, z)| if z.norm() > a.1 { (k, z.norm()) } else { a });
                    Ok(arg.0 + 1)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_hamiltonian;
    use proptest::prelude::*;

    /// Power series `sum_k (x/2)^(2k+n) / (k! (k+n)!)` with the leading
    /// factor in log space.
    fn series_oracle(n: u32, x: f64) -> f64 {
        if x == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        let lead = (n as f64 * (0.5 * x).ln() - ln_fact).exp();
        let q = 0.25 * x * x;
        let (mut term, mut sum) = (1.0, 1.0);
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= q / (k * (k + n as f64));
            sum += term;
            k += 1.0;
        }
        lead * sum
    }

    #[test]
    fn small_values() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert!((bessel_i(0, 1.0).unwrap() - 1.2660658777520082).abs() < 1e-15);
        assert_eq!(bessel_i(-3, 2.5).unwrap(), bessel_i(3, 2.5).unwrap());
    }

    #[test]
    fn matches_series_oracle() {
        for &x in &[0.01, 0.3, 1.0, 2.5, 7.0, 20.0, 60.0, 150.0, 400.0, 500.0] {
            for n in [0u32, 1, 2, 5, 10, 30, 80, 200] {
                let want = series_oracle(n, x);
                if want < 1e-290 {
                    continue;
                }
                let got = bessel_i(n as i64, x).unwrap();
                assert!(((got - want) / want).abs() < 1e-12, "I_{n}({x}) = {got} vs {want}");
            }
        }
    }

    #[test]
    fn range_is_enforced() {
        assert_eq!(bessel_i(2001, 1.0), Err(Error::OutOfRange { n: 2001, x: 1.0 }));
        assert_eq!(bessel_i(0, 500.5), Err(Error::OutOfRange { n: 0, x: 500.5 }));
        assert!(bessel_i(0, -1.0).is_err());
    }

    #[test]
    fn generating_function_sums() {
        // sum_k I_k(x)^2 = I_0(2x) and sum_k (-1)^k I_k(x)^2 = 1
        for &x in &[0.5, 1.25, 3.0] {
            let s = bessel_i_sequence(80, x).unwrap();
            let plain = s[0] * s[0] + 2.0 * s[1..].iter().map(|v| v * v).sum::<f64>();
            let alt = s[0] * s[0] + 2.0 * s[1..].iter().enumerate().map(|(k, v)| if k % 2 == 0 { -v * v } else { v * v }).sum::<f64>();
            assert!((plain - bessel_i(0, 2.0 * x).unwrap()).abs() < 1e-12 * plain);
            assert!((alt - 1.0).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn three_term_recurrence(x in 0.1f64..100.0, n in -50i64..50) {
            let lo = bessel_i(n - 1, x).unwrap();
            let mid = bessel_i(n, x).unwrap();
            let hi = bessel_i(n + 1, x).unwrap();
            let rhs = 2.0 * n as f64 / x * mid;
            let scale = lo.abs().max(hi.abs()).max(rhs.abs());
            prop_assume!(scale > 1e-290);
            prop_assert!((lo - hi - rhs).abs() <= 1e-10 * scale);
        }
    }

    fn cfg(l: usize, f: f64) -> LatticeConfig {
        LatticeConfig::imaginary(l, 1.0, f).unwrap()
    }

    #[test]
    fn eigenpair_shape() {
        let c = cfg(40, 1.0);
        let (e, s) = analytic_eigenpair(18, &c).unwrap();
        assert_eq!(e, C64::new(0.0, -18.0));
        let norm: f64 = s.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        for k in 1..=17 {
            let d = (s.amplitudes[17 + k].norm() - s.amplitudes[17 - k].norm()).abs();
            assert!(d < 1e-15);
        }
        let arg = s.amplitudes.iter().enumerate().fold((0, 0.0), |a, (k, z)| if z.norm() > a.1 { (k, z.norm()) } else { a });
        assert_eq!(arg.0 + 1, 18);
        assert_eq!(s.amplitudes[17], C64::new(s.amplitudes[17].re, 0.0));
        assert!(s.amplitudes[17].re > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(analytic_eigenpair(3, &cfg(10, 0.0)).is_err());
        assert_eq!(analytic_eigenpair(0, &cfg(10, 1.0)).unwrap_err(), Error::SiteOutOfRange { site: 0, len: 10 });
        assert_eq!(analytic_eigenpair(1, &LatticeConfig::real(10, 1.0, 1.0).unwrap()).unwrap_err(), Error::RequiresImaginaryStark);
        assert!(matches!(analytic_eigenpair(1, &cfg(10, 1e-3)), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn residual_shrinks_away_from_edges() {
        let c = cfg(40, 0.5);
        let h = build_hamiltonian(&c).unwrap();
        let res = |m: usize| {
            let (e, s) = analytic_eigenpair(m, &c).unwrap();
            let r = h.matvec(&s.amplitudes) - s.amplitudes.mapv(|z| z * e);
            r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        };
        let r: Vec<f64> = (1..=20).map(res).collect();
        for w in r.windows(2) {
            assert!(w[1] <= w[0] || w[1] < 1e-14, "{r:?}");
        }
        assert!(r[19] < 1e-12);
    }

    #[test]
    fn ipr_limits_and_translation() {
        assert!((analytic_ipr(&cfg(20, 1e6), 10).unwrap() - 1.0).abs() < 1e-11);
        let a = analytic_ipr(&cfg(40, 1.0), 15).unwrap();
        let b = analytic_ipr(&cfg(40, 1.0), 25).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn gaussian_fit_on_exact_profile() {
        let state: Array1<C64> = (1..=40).map(|n| C64::new((0.5 * (-((n as f64 - 18.0) / 3.0).powi(2)).exp()).sqrt(), 0.0)).collect();
        let fit = gaussian_fit(state.view()).unwrap();
        assert!((fit.parameters[0] - 0.5).abs() < 1e-10);
        assert!((fit.parameters[1] - 3.0).abs() < 1e-10);
        assert!((localization_length(&fit) - 3.0 * 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn gaussian_fit_rejects_edges_and_flat() {
        let flat = Array1::from_elem(10, C64::new(10f64.sqrt().recip(), 0.0));
        assert!(matches!(gaussian_fit(flat.view()), Err(Error::DegenerateProfile(_))));
        let mut edge = Array1::zeros(10);
        edge[0] = C64::new(0.9, 0.0);
        edge[1] = C64::new(0.1, 0.0);
        assert!(matches!(gaussian_fit(edge.view()), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn amplitude_ratio_at_ls() {
        // l_s is about 1.25 sites here, so the amplitude is log-interpolated
        // between neighbouring sites instead of read at round(l_s).
        let (_, s) = analytic_eigenpair(20, &cfg(40, 0.8)).unwrap();
        let fit = gaussian_fit(s.amplitudes.view()).unwrap();
        let ls = localization_length(&fit);
        let k = ls.floor() as usize;
        let ln_at = |d: usize| (s.amplitudes[19 + d].norm() / s.amplitudes[19].norm()).ln();
        let ln_ratio = ln_at(k) + (ls - k as f64) * (ln_at(k + 1) - ln_at(k));
        assert!((ln_ratio.exp() / (-1.0f64).exp() - 1.0).abs() < 0.15, "l_s {ls}, ratio {}", ln_ratio.exp());
    }

    #[test]
    fn synthetic_power_law() {
        let fs = [0.5, 1.0, 2.0, 3.0];
        let ls: Vec<f64> = fs.iter().map(|f: &f64| 2.0 / f.sqrt()).collect();
        let fit = fit_power_law(&fs, &ls).unwrap();
        assert!((fit.parameters[0] - 2.0).abs() < 1e-12);
        assert!((fit.parameters[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn imaginary_ladder_localizes_more_than_real() {
        use crate::spectral::mean_ipr;
        let im = eigendecompose(&build_hamiltonian(&cfg(40, 1.0)).unwrap()).unwrap();
        let re = eigendecompose(&build_hamiltonian(&LatticeConfig::real(40, 1.0, 1.0).unwrap()).unwrap()).unwrap();
        assert!(mean_ipr(&im).unwrap().mean > mean_ipr(&re).unwrap().mean);
    }

    #[test]
    fn boundary_states_drift_to_the_edge() {
        let t = cfg(40, 0.1);
        let traj = argmax_trajectory(&t, &[0.1, 0.3, 0.8, 2.0], &[1, 20]).unwrap();
        let edge: Vec<usize> = traj.iter().map(|v| v[0]).collect();
        assert!(edge.windows(2).all(|w| w[1] <= w[0]), "{edge:?}");
        assert_eq!(*edge.last().unwrap(), 1);
        assert!(traj.iter().all(|v| (v[1] as i64 - 20).abs() <= 1), "{traj:?}");
    }
}
