//! Single-particle correlation dynamics `dΔ/dt = XΔ + ΔX†` under the
//! damping matrix `X = iH*`, plus the unnormalized pure-state evolution
//! `e^{-iHt}ψ` used as its oracle.

mod integrator;
mod observables;

pub use integrator::integrate_correlation;
pub use observables::*;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::eigendecompose;
use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, damping_matrix, LatticeConfig, PotentialKind};
use crate::matrix::ComplexMatrix;

/// Condition number above which `Method::Auto` switches to the integrator.
pub const MAX_SPECTRAL_CONDITION: f64 = 1e4;
/// Relative per-step tolerance of the step-doubled integrator.
pub const DEFAULT_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// One particle on a 1-based site.
    SingleSite(usize),
    /// `sum_j |j> / sqrt(L)`.
    Uniform,
    /// `c0 sum_j exp(-beta (j - center)^2) |j>`.
    GaussianPacket { center: f64, beta: f64 },
    /// One particle on every site, `Δ(0) = I`.
    FullyOccupied,
}

impl InitialState {
    /// Amplitudes of the single-particle state, `None` for `FullyOccupied`.
    pub fn pure_state(&self, l: usize) -> Result<Option<Array1<C64>>> {
        let amps: Array1<f64> = match *self {
            Self::FullyOccupied => return Ok(None),
            Self::SingleSite(m) => {
                if m == 0 || m > l {
                    return Err(Error::SiteOutOfRange { site: m, len: l });
                }
                Array1::from_shape_fn(l, |k| if k + 1 == m { 1.0 } else { 0.0 })
            }
            Self::Uniform => Array1::from_elem(l, 1.0),
            Self::GaussianPacket { center, beta } => {
                if !(beta > 0.0) || !center.is_finite() {
                    return Err(Error::InvalidConfig(format!("bad gaussian packet ({center}, {beta})")));
                }
                Array1::from_shape_fn(l, |k| (-beta * ((k + 1) as f64 - center).powi(2)).exp())
            }
        };
        let norm = amps.dot(&amps).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidConfig("initial state vanishes on the chain".into()));
        }
        Ok(Some(amps.mapv(|a| C64::new(a / norm, 0.0))))
    }

    /// `Δ(0)_{jk} = <c_j† c_k>`: `conj(ψ) ψ^T` for a pure state.
    pub fn correlation(&self, l: usize) -> Result<Array2<C64>> {
        Ok(match self.pure_state(l)? {
            None => Array2::eye(l),
            Some(psi) => pure_correlation(&psi),
        })
    }
}

pub fn pure_correlation(psi: &Array1<C64>) -> Array2<C64> {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(j, k)| psi[j].conj() * psi[k])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Spectral,
    Integrator,
    /// Stepwise matrix exponential (pure states only).
    Propagator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Spectral unless the eigenvectors of `X` are too ill-conditioned.
    Auto,
    Spectral,
    Integrator,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    pub max_condition: f64,
    pub rtol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, max_condition: MAX_SPECTRAL_CONDITION, rtol: DEFAULT_RTOL }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationTrace {
    pub times: Vec<f64>,
    pub delta: Vec<Array2<C64>>,
    /// `densities[[j, k]] = Δ_jj(t_k)` with 0-based site `j`.
    pub densities: Array2<f64>,
    pub route: Route,
    /// Largest eigenvalue condition number of `X`, when it was computed.
    pub condition: Option<f64>,
    pub warnings: Vec<String>,
}

impl CorrelationTrace {
    pub fn sites(&self) -> usize {
        self.densities.nrows()
    }

    /// Density time series of a 1-based site.
    pub fn site_density(&self, site: usize) -> Result<Vec<f64>> {
        if site == 0 || site > self.sites() {
            return Err(Error::SiteOutOfRange { site, len: self.sites() });
        }
        Ok(self.densities.row(site - 1).to_vec())
    }

    pub fn total_number(&self) -> Vec<f64> {
        self.densities.columns().into_iter().map(|c| c.sum()).collect()
    }

    /// Worst `max|Δ - Δ†|` over the trace.
    pub fn hermiticity_defect(&self) -> f64 {
        self.delta
            .iter()
            .map(|d| d.iter().zip(d.t().iter()).map(|(a, b)| (a - b.conj()).norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part of `Δ(t)` over the trace.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let per_sample = self
            .delta
            .par_iter()
            .map(|d| {
                let herm = (d + &d.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
                let vals = crate::eigen::eigenvalues(&ComplexMatrix::from_array(herm)?)?;
                Ok(vals.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_sample.into_iter().fold(f64::INFINITY, f64::min))
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::BadTimeGrid);
    }
    Ok(())
}

pub fn evolve_correlation(cfg: &LatticeConfig, init: InitialState, times: &[f64]) -> Result<CorrelationTrace> {
    evolve_correlation_with(cfg, &init.correlation(cfg.l)?, times, &EvolveOptions::default())
}

/// Evolves an arbitrary Hermitian `Δ(0)`.
///
/// The spectral route uses `Δ(t) = R (C ∘ E(t)) R†` with `C = W Δ(0) W†` and
/// `E_nm = exp((λ_n + λ_m*) t)`, where `X = R diag(λ) W`.
pub fn evolve_correlation_with(
    cfg: &LatticeConfig,
    delta0: &Array2<C64>,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<CorrelationTrace> {
    evolve_generator(&damping_matrix(cfg)?, delta0, times, opts)
}

/// Evolves `Δ(0)` under an explicit tridiagonal generator `X`, e.g. the
/// decoupled `J = 0` limit that [`LatticeConfig`] does not admit.
pub fn evolve_generator(x: &ComplexMatrix, delta0: &Array2<C64>, times: &[f64], opts: &EvolveOptions) -> Result<CorrelationTrace> {
    check_times(times)?;
    let l = x.dim();
    if delta0.nrows() != l || delta0.ncols() != l {
        return Err(Error::DimensionMismatch { expected: l, got: delta0.nrows() });
    }
    let mut warnings = Vec::new();
    let mut condition = None;
    let use_spectral = match opts.method {
        Method::Integrator => None,
        _ => {
            let spec = eigendecompose(&x)?;
            let kappa = spec.condition_numbers().into_iter().fold(0.0, f64::max);
            condition = Some(kappa);
            if opts.method == Method::Auto && !(kappa <= opts.max_condition) {
                warnings.push(format!("conditioning fallback: max eigenvector condition {kappa:.3e} exceeds {:.1e}", opts.max_condition));
                None
            } else {
                Some(spec)
            }
        }
    };
    let (delta, route) = match use_spectral {
        Some(spec) => {
            let r = &spec.right;
            let w = spec.bras();
            let rd = r.t().mapv(|z| z.conj());
            let c = w.dot(delta0).dot(&w.t().mapv(|z| z.conj()));
            let lam = &spec.values;
            let delta = times
                .iter()
                .map(|&t| {
                    let e: Vec<C64> = lam.iter().map(|l| (l * t).exp()).collect();
                    let m = Array2::from_shape_fn(c.dim(), |(n, k)| c[[n, k]] * e[n] * e[k].conj());
                    r.dot(&m).dot(&rd)
                })
                .collect();
            (delta, Route::Spectral)
        }
        None => (integrate_correlation(x.view(), delta0, times, opts.rtol)?, Route::Integrator),
    };
    let densities = Array2::from_shape_fn((l, times.len()), |(j, k)| delta[k][[j, j]].re);
    Ok(CorrelationTrace { times: times.to_vec(), delta, densities, route, condition, warnings })
}

#[derive(Clone, Debug)]
pub struct PureTrace {
    pub times: Vec<f64>,
    pub states: Vec<Array1<C64>>,
    /// `densities[[j, k]] = |ψ_j(t_k)|^2`.
    pub densities: Array2<f64>,
    pub route: Route,
}

/// Unnormalized `ψ(t) = e^{-iHt} ψ0` from the eigendecomposition of `H`,
/// or by stepping with the matrix exponential when the eigenvectors are too
/// ill-conditioned (same threshold as [`Method::Auto`]).
pub fn nh_evolve_pure(cfg: &LatticeConfig, psi0: &Array1<C64>, times: &[f64]) -> Result<PureTrace> {
    cfg.validate()?;
    if cfg.kind != PotentialKind::ImaginaryStark {
        return Err(Error::RequiresImaginaryStark);
    }
    check_times(times)?;
    if psi0.len() != cfg.l {
        return Err(Error::DimensionMismatch { expected: cfg.l, got: psi0.len() });
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let h = build_hamiltonian(cfg)?;
    let spec = eigendecompose(&h)?;
    let kappa = spec.condition_numbers().into_iter().fold(0.0, f64::max);
    let (states, route) = if kappa <= EvolveOptions::default().max_condition {
        let coeff = spec.bras().dot(psi0);
        let states = times
            .iter()
            .map(|&t| {
                let c = Array1::from_shape_fn(cfg.l, |m| coeff[m] * (C64::new(0.0, -t) * spec.values[m]).exp());
                spec.right.dot(&c)
            })
            .collect();
        (states, Route::Spectral)
    } else {
        (propagate_pure(&h, psi0, times)?, Route::Propagator)
    };
    let densities = Array2::from_shape_fn((cfg.l, times.len()), |(j, k)| states[k][j].norm_sqr());
    Ok(PureTrace { times: times.to_vec(), states, densities, route })
}

/// Steps `ψ` with `exp(-iHΔt)`, reusing the propagator for repeated gaps.
fn propagate_pure(h: &ComplexMatrix, psi0: &Array1<C64>, times: &[f64]) -> Result<Vec<Array1<C64>>> {
    let mut cache: Vec<(f64, ComplexMatrix)> = Vec::new();
    let mut states = vec![psi0.clone()];
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let hit = cache.iter().position(|(g, _)| (g - dt).abs() <= 1e-12 * dt);
        let k = match hit {
            Some(k) => k,
            None => {
                cache.push((dt, h.scale(C64::new(0.0, -dt)).expm()?));
                cache.len() - 1
            }
        };
        let next = cache[k].1.matvec(states.last().unwrap());
        states.push(next);
    }
    Ok(states)
}

/// `n` uniform samples on `[0, t_max]`, both ends included.
pub fn linear_times(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || n < 2 {
        return Err(Error::BadTimeGrid);
    }
    Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect())
}

/// Default grid: 400 samples over `[0, 10 / max(F, 0.01)]`, the first 40
/// geometric from `1e-3` of the span, the rest uniform.
pub fn default_times(f: f64) -> Vec<f64> {
    let t_max = 10.0 / f.max(0.01);
    let n_geo = 40;
    let n_lin = 360;
    let t_switch = 0.05 * t_max;
    let mut out = vec![0.0];
    let lo = 1e-3 * t_max;
    for k in 0..n_geo {
        out.push(lo * (t_switch / lo).powf(k as f64 / n_geo as f64));
    }
    for k in 0..n_lin {
        out.push(t_switch + (t_max - t_switch) * k as f64 / (n_lin - 1) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(l: usize, f: f64) -> LatticeConfig {
        LatticeConfig::imaginary(l, 1.0, f).unwrap()
    }

    #[test]
    fn initial_states_are_normalized() {
        for init in [
            InitialState::SingleSite(3),
            InitialState::Uniform,
            InitialState::GaussianPacket { center: 5.0, beta: 1.0 },
        ] {
            let d = init.correlation(10).unwrap();
            assert!((d.diag().sum().re - 1.0).abs() < 1e-14);
            assert!(d.iter().zip(d.t().iter()).all(|(a, b)| (a - b.conj()).norm() == 0.0));
        }
        assert_eq!(InitialState::FullyOccupied.correlation(4).unwrap().diag().sum().re, 4.0);
        assert!(InitialState::SingleSite(11).pure_state(10).is_err());
    }

    #[test]
    fn default_grid_is_increasing() {
        let t = default_times(0.5);
        assert_eq!(t.len(), 401);
        assert_eq!(t[0], 0.0);
        assert!((t[400] - 20.0).abs() < 1e-12);
        check_times(&t).unwrap();
        assert_eq!(check_times(&[0.1, 0.2]), Err(Error::BadTimeGrid));
        assert_eq!(check_times(&[0.0, 0.2, 0.2]), Err(Error::BadTimeGrid));
    }

    #[test]
    fn decoupled_sites_decay_exactly() {
        let x = ComplexMatrix::from_diag(&(1..=8).map(|j| C64::new(-0.3 * j as f64, 0.0)).collect::<Vec<_>>());
        let times = linear_times(5.0, 51).unwrap();
        let d0 = InitialState::Uniform.correlation(8).unwrap();
        for method in [Method::Spectral, Method::Integrator] {
        let tr = evolve_generator(&x, &d0, &times, &EvolveOptions { method, ..Default::default() }).unwrap();
        for j in 1..=8 {
            let n = tr.site_density(j).unwrap();
            for (k, t) in times.iter().enumerate() {
                let want = (-2.0 * j as f64 * 0.3 * t).exp() / 8.0;
                assert!((n[k] - want).abs() <= 1e-12, "site {j} t {t}");
            }
        }
        }
    }

    #[test]
    fn unitary_limit_conserves_number() {
        let times = linear_times(20.0, 41).unwrap();
        let tr = evolve_correlation(&cfg(20, 0.0), InitialState::SingleSite(7), &times).unwrap();
        assert!(tr.total_number().iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn single_site_pure_decay() {
        let times = linear_times(3.0, 7).unwrap();
        let psi = Array1::from_elem(1, C64::new(1.0, 0.0));
        let tr = nh_evolve_pure(&cfg(1, 0.7), &psi, &times).unwrap();
        for (k, t) in times.iter().enumerate() {
            assert!((tr.densities[[0, k]] - (-1.4 * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn routes_agree() {
        let times = linear_times(20.0, 21).unwrap();
        for f in [0.01, 0.5, 1.0] {
            let c = cfg(20, f);
            let d0 = InitialState::GaussianPacket { center: 10.0, beta: 0.3 }.correlation(20).unwrap();
            let a = evolve_correlation_with(&c, &d0, &times, &EvolveOptions { method: Method::Spectral, ..Default::default() }).unwrap();
            let b = evolve_correlation_with(&c, &d0, &times, &EvolveOptions { method: Method::Integrator, ..Default::default() }).unwrap();
            assert_eq!((a.route, b.route), (Route::Spectral, Route::Integrator));
            let diff = a.delta.iter().zip(&b.delta).map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
            assert!(diff < 1e-8, "F={f}: {diff}");
        }
    }

    #[test]
    fn ill_conditioned_spectrum_falls_back() {
        let times = linear_times(5.0, 11).unwrap();
        let tr = evolve_correlation(&cfg(40, 0.05), InitialState::Uniform, &times).unwrap();
        assert_eq!(tr.route, Route::Integrator);
        assert!(tr.warnings[0].contains("conditioning fallback"));
    }

    #[test]
    fn pure_oracle_propagates_when_ill_conditioned() {
        let times = linear_times(200.0, 50).unwrap();
        let c = cfg(40, 0.06);
        let psi = InitialState::Uniform.pure_state(40).unwrap().unwrap();
        let nh = nh_evolve_pure(&c, &psi, &times).unwrap();
        assert_eq!(nh.route, Route::Propagator);
        let tr = evolve_correlation(&c, InitialState::Uniform, &times).unwrap();
        assert_eq!(tr.route, Route::Integrator);
        let diff = (&tr.densities - &nh.densities).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
        let well = nh_evolve_pure(&cfg(40, 1.0), &psi, &times).unwrap();
        assert_eq!(well.route, Route::Spectral);
    }

    #[test]
    fn strong_field_stays_local() {
        let times = linear_times(3.0, 61).unwrap();
        let tr = evolve_correlation(&cfg(40, 1.0), InitialState::SingleSite(20), &times).unwrap();
        for k in 0..times.len() {
            let col = tr.densities.column(k);
            // Past ~1e-12 of the initial weight slower neighbouring modes take over.
            if col.sum() < 1e-12 {
                break;
            }
            let near: f64 = (17..=21).map(|j| col[j]).sum();
            assert!(near >= 0.9 * col.sum(), "t={}", times[k]);
        }
    }

    #[test]
    fn strong_field_locality_ratio() {
        // Window ends once n_m has fallen by 1e-6: beyond that the remainder is
        // carried by slower neighbouring modes and the ratio must grow.
        let times = linear_times(2.0, 201).unwrap();
        let tr = evolve_correlation(&cfg(40, 2.0), InitialState::SingleSite(20), &times).unwrap();
        for k in 0..times.len() {
            let col = tr.densities.column(k);
            if col[19] < 1e-6 {
                break;
            }
            assert!((col.sum() - col[19]) / col[19] < 0.05, "t={}", times[k]);
        }
    }

    #[test]
    fn small_field_factorizes() {
        // e^{F(L+1)t} Δ(t) tracks the F=0 evolution to first order in F L t.
        let times = linear_times(10.0, 21).unwrap();
        let f = 1e-9;
        let c = cfg(40, f);
        let a = evolve_correlation(&c, InitialState::GaussianPacket { center: 20.0, beta: 0.5 }, &times).unwrap();
        let b = evolve_correlation(&c.with_f(0.0), InitialState::GaussianPacket { center: 20.0, beta: 0.5 }, &times).unwrap();
        for (k, t) in times.iter().enumerate() {
            let s = (f * 41.0 * t).exp();
            let diff = (&a.delta[k].mapv(|z| z * s) - &b.delta[k]).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-6, "t={t}: {diff}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn trace_properties(l in 2usize..16, f in 0.0f64..2.0, site in 1usize..16) {
            prop_assume!(site <= l);
            let times = linear_times(4.0, 17).unwrap();
            let tr = evolve_correlation(&cfg(l, f), InitialState::SingleSite(site), &times).unwrap();
            prop_assert!(tr.hermiticity_defect() < 1e-10);
            prop_assert!(tr.min_eigenvalue().unwrap() > -1e-10);
            let n = tr.total_number();
            if f == 0.0 {
                prop_assert!(n.iter().all(|v| (v - 1.0).abs() < 1e-10));
            } else {
                prop_assert!(n.windows(2).all(|w| w[1] < w[0]));
            }
        }

        #[test]
        fn oracle_equivalence(l in 2usize..20, f in 0.0f64..2.0, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut psi = Array1::from_shape_fn(l, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi.mapv_inplace(|z| z / norm);
            let times = linear_times(5.0, 11).unwrap();
            let c = cfg(l, f);
            let a = evolve_correlation_with(&c, &pure_correlation(&psi), &times, &EvolveOptions::default()).unwrap();
            let b = nh_evolve_pure(&c, &psi, &times).unwrap();
            let diff = (&a.densities - &b.densities).iter().map(|v| v.abs()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-8, "{}", diff);
        }
    }
}
