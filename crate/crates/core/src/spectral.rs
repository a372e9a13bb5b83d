//! Spectral analysis: real/imaginary classification of the shifted
//! spectrum, IPR statistics, transition points, finite-size fits and the
//! K/PT eigenstate relations.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{eigendecompose, Spectrum};
use crate::error::{Error, Result};
use crate::fit::{fit_constant, fit_power_law, FitResult};
use crate::lattice::{build_hamiltonian, LatticeConfig};
use crate::matrix::ComplexMatrix;

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;
/// Relative distance within which `-conj(E)` counts as the K partner of `E`.
pub const PAIRING_TOL: f64 = 1e-8;
pub const OVERLAP_DEFICIT_TOL: f64 = 1e-6;
pub const PT_ASYMMETRY_TOL: f64 = 1e-10;
/// Largest relative eigenvalue uncertainty at which a classification is
/// still trusted; beyond it double precision cannot place eigenvalues.
pub const RESOLUTION_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub f: f64,
    pub l: usize,
    pub n_real: usize,
    pub n_imag: usize,
    pub frac_real: f64,
    pub frac_imag: f64,
    pub tol: f64,
    /// Worst eigenvalue uncertainty relative to the spectral scale
    /// (zero when no accuracy floor was applied).
    pub uncertainty: f64,
}

impl ClassificationReport {
    pub fn is_resolved(&self) -> bool {
        self.uncertainty <= RESOLUTION_LIMIT
    }
}

/// Where a shifted eigenvalue `E' = E - E0` sits relative to the axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueClass {
    Real,
    Imaginary,
    /// Within tolerance of both axes.
    Origin,
    Complex,
}

impl ValueClass {
    pub fn is_real(self) -> bool {
        matches!(self, Self::Real | Self::Origin)
    }

    pub fn is_imaginary(self) -> bool {
        matches!(self, Self::Imaginary | Self::Origin)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Imaginary => "imaginary",
            Self::Origin => "origin",
            Self::Complex => "complex",
        }
    }
}

/// Per-value classes of the shifted spectrum. The cut is `tol` times the
/// largest shifted modulus (at least 1).
pub fn classify_each(values: &[C64], cfg: &LatticeConfig, tol: f64) -> Result<Vec<ValueClass>> {
    classify_with_floor(values, None, cfg, tol)
}

/// First-order accuracy of each computed eigenvalue,
/// `eps * kappa_m * |M|_F` with `kappa_m` the eigenvalue condition number.
pub fn eigenvalue_uncertainty(spec: &Spectrum, m: &ComplexMatrix) -> Vec<f64> {
    let norm = m.frobenius();
    spec.condition_numbers().iter().map(|k| f64::EPSILON * k * norm).collect()
}

/// Like [`classify_each`], but each cut is raised to the eigenvalue's own
/// accuracy floor so that round-off on ill-conditioned eigenvalues does not
/// move them off an axis.
pub fn classify_spectrum_each(spec: &Spectrum, cfg: &LatticeConfig, tol: f64) -> Result<Vec<ValueClass>> {
    let floor = eigenvalue_uncertainty(spec, &build_hamiltonian(cfg)?);
    classify_with_floor(&spec.values, Some(&floor), cfg, tol)
}

fn relative_uncertainty(floor: &[f64], values: &[C64], cfg: &LatticeConfig) -> f64 {
    let e0 = cfg.energy_offset();
    let scale = values.iter().map(|e| (e - e0).norm()).fold(1.0, f64::max);
    floor.iter().fold(0.0, |a: f64, u| a.max(*u)) / scale
}

fn classify_with_floor(values: &[C64], floor: Option<&[f64]>, cfg: &LatticeConfig, tol: f64) -> Result<Vec<ValueClass>> {
    if values.len() != cfg.l {
        return Err(Error::DimensionMismatch { expected: cfg.l, got: values.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("classification tolerance must be positive, got {tol}")));
    }
    let e0 = cfg.energy_offset();
    let shifted: Vec<C64> = values.iter().map(|e| e - e0).collect();
    let scale = shifted.iter().map(|z| z.norm()).fold(1.0, f64::max);
    Ok(shifted
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let cut = floor.map_or(0.0, |f| f[k]).max(tol * scale);
            match (z.im.abs() <= cut, z.re.abs() <= cut) {
                (true, true) => ValueClass::Origin,
                (true, false) => ValueClass::Real,
                (false, true) => ValueClass::Imaginary,
                (false, false) => ValueClass::Complex,
            }
        })
        .collect())
}

fn report(classes: &[ValueClass], cfg: &LatticeConfig, tol: f64, uncertainty: f64) -> ClassificationReport {
    let n_real = classes.iter().filter(|c| c.is_real()).count();
    let n_imag = classes.iter().filter(|c| c.is_imaginary()).count();
    let l = cfg.l as f64;
    ClassificationReport {
        f: cfg.f,
        l: cfg.l,
        n_real,
        n_imag,
        frac_real: n_real as f64 / l,
        frac_imag: n_imag as f64 / l,
        tol,
        uncertainty,
    }
}

/// Classifies eigenvalues of `H` after removing the offset `E0`, using
/// the fixed relative cut only.
///
/// An eigenvalue near the origin can be counted in both tallies.
pub fn classify_values(values: &[C64], cfg: &LatticeConfig, tol: f64) -> Result<ClassificationReport> {
    Ok(report(&classify_each(values, cfg, tol)?, cfg, tol, 0.0))
}

/// Classifies a full spectrum of `H`; cuts include each eigenvalue's
/// accuracy floor (see [`classify_spectrum_each`]).
pub fn classify_eigenvalues(spec: &Spectrum, cfg: &LatticeConfig, tol: f64) -> Result<ClassificationReport> {
    let floor = eigenvalue_uncertainty(spec, &build_hamiltonian(cfg)?);
    let classes = classify_with_floor(&spec.values, Some(&floor), cfg, tol)?;
    Ok(report(&classes, cfg, tol, relative_uncertainty(&floor, &spec.values, cfg)))
}

/// Builds `H`, solves the eigenproblem and classifies the spectrum.
pub fn classify_config(cfg: &LatticeConfig, tol: f64) -> Result<ClassificationReport> {
    let spec = eigendecompose(&build_hamiltonian(cfg)?)?;
    classify_eigenvalues(&spec, cfg, tol)
}

/// `lo * (hi/lo)^(k/n)` with `per_decade` points per decade, both ends included.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(Error::InvalidConfig(format!("bad geometric grid [{lo}, {hi}] x {per_decade}")));
    }
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    let ratio = (hi / lo).ln() / n as f64;
    Ok((0..=n).map(|k| if k == n { hi } else { lo * (ratio * k as f64).exp() }).collect())
}

/// Classification at every F of `grid`, in grid order. Points run in parallel.
pub fn count_scan(template: &LatticeConfig, grid: &[f64], tol: f64) -> Result<Vec<ClassificationReport>> {
    grid.par_iter().map(|&f| classify_config(&template.with_f(f), tol)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Transition {
    /// Last F with every shifted eigenvalue real.
    Fc1,
    /// First F with every shifted eigenvalue pure imaginary.
    Fc2,
}

fn indicator(template: &LatticeConfig, which: Transition, f: f64, tol: f64) -> Result<bool> {
    let r = classify_config(&template.with_f(f), tol)?;
    Ok(match which {
        Transition::Fc1 => r.n_real == r.l,
        Transition::Fc2 => r.n_imag == r.l,
    })
}

/// Bisection on the boolean count indicator down to a bracket of width `tol_f`.
pub fn detect_transition(
    template: &LatticeConfig,
    which: Transition,
    bracket: (f64, f64),
    tol_f: f64,
    classify_tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo && tol_f > 0.0) {
        return Err(Error::InvalidConfig(format!("bad bracket [{lo}, {hi}] or width {tol_f}")));
    }
    let at_lo = indicator(template, which, lo, classify_tol)?;
    let at_hi = indicator(template, which, hi, classify_tol)?;
    if at_lo == at_hi {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol_f {
        let mid = 0.5 * (lo + hi);
        if indicator(template, which, mid, classify_tol)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteSizeFit {
    pub power_law: FitResult,
    pub constant: FitResult,
}

/// Power-law and constant fits of transition points against system size.
pub fn finite_size_fit(points: &[(usize, f64)]) -> Result<FiniteSizeFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(FiniteSizeFit { power_law: fit_power_law(&xs, &ys)?, constant: fit_constant(&ys)? })
}

fn check_normalized(state: ArrayView1<'_, C64>) -> Result<()> {
    let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// Inverse participation ratio of a unit-norm state.
pub fn ipr(state: ArrayView1<'_, C64>) -> Result<f64> {
    check_normalized(state)?;
    Ok(state.iter().map(|z| z.norm_sqr().powi(2)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IprStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, min and max IPR over the right eigenvectors of a spectrum.
pub fn mean_ipr(spec: &Spectrum) -> Result<IprStats> {
    let vals = spec.right.columns().into_iter().map(ipr).collect::<Result<Vec<f64>>>()?;
    Ok(IprStats {
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
        max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KPairingReport {
    /// Index of the `-conj(E)` partner of each eigenvalue (itself when on the axis).
    pub partner: Vec<usize>,
    /// `|<psi_partner | U conj(psi)>|` per state.
    pub overlap: Vec<f64>,
    pub ok: Vec<bool>,
    pub worst_deficit: f64,
}

impl KPairingReport {
    pub fn all_ok(&self) -> bool {
        self.ok.iter().all(|b| *b)
    }

    pub fn n_self_symmetric(&self) -> usize {
        self.partner.iter().enumerate().filter(|(k, p)| *k == **p).count()
    }
}

/// Checks `psi_partner = U conj(psi)` up to phase for every eigenpair of `H'`.
///
/// States with `|Re E| <= tol * scale` are their own partner. With `floor`
/// (see [`eigenvalue_uncertainty`]) both the axis test and the partner
/// distance are widened by the per-eigenvalue accuracy.
pub fn check_k_pairing(spec: &Spectrum, u: &ComplexMatrix, tol: f64, floor: Option<&[f64]>) -> Result<KPairingReport> {
    let n = spec.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.dim() });
    }
    if let Some(f) = floor {
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
    }
    let acc = |k: usize| floor.map_or(0.0, |f| f[k]);
    let scale = spec.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut report = KPairingReport { partner: vec![0; n], overlap: vec![0.0; n], ok: vec![false; n], worst_deficit: 0.0 };
    for m in 0..n {
        let e = spec.values[m];
        let partner = if e.re.abs() <= (tol * scale).max(acc(m)) {
            m
        } else {
            let target = -e.conj();
            let (k, dist) = (0..n)
                .filter(|k| *k != m)
                .map(|k| (k, (spec.values[k] - target).norm()))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            if k == usize::MAX || dist > (PAIRING_TOL * scale).max(acc(m) + acc(k)) {
                return Err(Error::UnpairedEigenvalue(m));
            }
            k
        };
        let mirrored: Array1<C64> = u.matvec(&spec.right.column(m).mapv(|z| z.conj()));
        let ov: C64 = spec.right.column(partner).iter().zip(mirrored.iter()).map(|(a, b)| a.conj() * b).sum();
        let deficit = 1.0 - ov.norm();
        report.partner[m] = partner;
        report.overlap[m] = ov.norm();
        report.ok[m] = deficit < OVERLAP_DEFICIT_TOL;
        report.worst_deficit = report.worst_deficit.max(deficit);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PtProfile {
    pub symmetric: bool,
    pub asymmetry: f64,
}

/// Mirror asymmetry `sum_n (|psi(n)| - |psi(L+1-n)|)^2`.
pub fn check_pt_profile(state: ArrayView1<'_, C64>) -> PtProfile {
    let n = state.len();
    let asymmetry = (0..n).map(|k| (state[k].norm() - state[n - 1 - k].norm()).powi(2)).sum::<f64>();
    PtProfile { symmetric: asymmetry < PT_ASYMMETRY_TOL, asymmetry }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenvalues;
    use crate::lattice::{build_shifted, build_u_transform};
    use proptest::prelude::*;

    fn cfg(l: usize, f: f64) -> LatticeConfig {
        LatticeConfig::imaginary(l, 1.0, f).unwrap()
    }

    #[test]
    fn two_site_classification() {
        let r = classify_config(&cfg(2, 0.5), DEFAULT_CLASSIFY_TOL).unwrap();
        assert_eq!((r.n_real, r.n_imag), (2, 0));
        let r = classify_config(&cfg(2, 2.0), DEFAULT_CLASSIFY_TOL).unwrap();
        assert_eq!((r.n_real, r.n_imag), (0, 2));
    }

    #[test]
    fn strong_field_is_all_imaginary() {
        let r = classify_config(&cfg(40, 1.0), DEFAULT_CLASSIFY_TOL).unwrap();
        assert_eq!(r.n_imag, 40);
        assert_eq!(r.frac_imag, 1.0);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let vals = vec![C64::new(0.0, 0.0); 3];
        assert!(matches!(classify_values(&vals, &cfg(4, 0.1), 1e-8), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_site_transitions_at_j() {
        let t = cfg(2, 0.0);
        let fc1 = detect_transition(&t, Transition::Fc1, (0.1, 3.0), 1e-9, DEFAULT_CLASSIFY_TOL).unwrap();
        let fc2 = detect_transition(&t, Transition::Fc2, (0.1, 3.0), 1e-9, DEFAULT_CLASSIFY_TOL).unwrap();
        // The square-root branch makes the indicator flip within sqrt(tol) of the EP.
        assert!((fc1 - 1.0).abs() < 1e-7, "{fc1}");
        assert!((fc2 - 1.0).abs() < 1e-7, "{fc2}");
    }

    #[test]
    fn constant_indicator_is_an_error() {
        let t = cfg(10, 0.0);
        assert_eq!(
            detect_transition(&t, Transition::Fc2, (2.0, 3.0), 1e-3, DEFAULT_CLASSIFY_TOL),
            Err(Error::NoSignChange { lo: 2.0, hi: 3.0 })
        );
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(1e-6, 1.0, 200).unwrap();
        assert_eq!(g.len(), 1201);
        assert_eq!(g[0], 1e-6);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scan_counts_are_monotone() {
        let grid = geometric_grid(1e-6, 2.0, 40).unwrap();
        let reports = count_scan(&cfg(24, 0.0), &grid, DEFAULT_CLASSIFY_TOL).unwrap();
        for w in reports.windows(2) {
            assert!(w[1].n_real <= w[0].n_real, "{:?}", w);
            assert!(w[1].n_imag >= w[0].n_imag, "{:?}", w);
        }
        assert_eq!(reports[0].n_real, 24);
        assert_eq!(reports.last().unwrap().n_imag, 24);
    }

    #[test]
    fn breaking_starts_at_spectral_edges() {
        let t = cfg(40, 0.0);
        let fc1 = detect_transition(&t, Transition::Fc1, (1e-6, 0.05), 1e-8, DEFAULT_CLASSIFY_TOL).unwrap();
        let c = t.with_f(fc1 * 1.05);
        let vals = eigenvalues(&build_shifted(&c).unwrap()).unwrap();
        let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let off: Vec<bool> = vals.iter().map(|z| z.im.abs() > DEFAULT_CLASSIFY_TOL * scale).collect();
        let n_off = off.iter().filter(|b| **b).count();
        assert!(n_off > 0 && n_off < 40);
        // Sorted by real part: the broken pairs sit at both ends.
        assert!(off[..n_off / 2].iter().all(|b| *b));
        assert!(off[40 - n_off / 2..].iter().all(|b| *b));
    }

    #[test]
    fn ipr_limits() {
        let mut e = Array1::zeros(40);
        e[3] = C64::new(0.0, 1.0);
        assert_eq!(ipr(e.view()).unwrap(), 1.0);
        let u = Array1::from_elem(40, C64::new((1.0f64 / 40.0).sqrt(), 0.0));
        assert!((ipr(u.view()).unwrap() - 0.025).abs() < 1e-15);
        let bad = Array1::from_elem(4, C64::new(1.0, 0.0));
        assert!(matches!(ipr(bad.view()), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn mean_ipr_grows_with_field() {
        let mut last = 0.0;
        for f in [1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0] {
            let s = eigendecompose(&build_hamiltonian(&cfg(40, f)).unwrap()).unwrap();
            let st = mean_ipr(&s).unwrap();
            assert!(st.min >= 1.0 / 40.0 - 1e-12 && st.max <= 1.0 + 1e-12);
            assert!(st.mean >= last - 1e-9, "F={f}: {} < {last}", st.mean);
            last = st.mean;
        }
    }

    #[test]
    fn breaking_precedes_localization() {
        let s = eigendecompose(&build_hamiltonian(&cfg(40, 0.01)).unwrap()).unwrap();
        let r = classify_eigenvalues(&s, &cfg(40, 0.01), DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(r.n_real < 40);
        assert!(mean_ipr(&s).unwrap().max < 0.2);
    }

    #[test]
    fn k_pairing_cases() {
        let u = build_u_transform(40);
        let s = eigendecompose(&build_shifted(&cfg(40, 1.0)).unwrap()).unwrap();
        let r = check_k_pairing(&s, &u, DEFAULT_CLASSIFY_TOL, None).unwrap();
        assert_eq!(r.n_self_symmetric(), 40);
        assert!(r.all_ok(), "{}", r.worst_deficit);

        let s = eigendecompose(&build_shifted(&cfg(40, 0.1)).unwrap()).unwrap();
        let r = check_k_pairing(&s, &u, DEFAULT_CLASSIFY_TOL, None).unwrap();
        assert!(r.n_self_symmetric() < 40);
        assert!(r.all_ok(), "{}", r.worst_deficit);

        let u2 = build_u_transform(2);
        let s = eigendecompose(&build_shifted(&cfg(2, 0.5)).unwrap()).unwrap();
        let r = check_k_pairing(&s, &u2, DEFAULT_CLASSIFY_TOL, None).unwrap();
        assert_eq!(r.partner, vec![1, 0]);
        assert!(r.all_ok());
    }

    #[test]
    fn unpaired_value_is_reported() {
        let mut s = eigendecompose(&build_shifted(&cfg(2, 0.5)).unwrap()).unwrap();
        s.values[1] += C64::new(0.1, 0.0);
        assert_eq!(check_k_pairing(&s, &build_u_transform(2), 1e-8, None), Err(Error::UnpairedEigenvalue(0)));
    }

    #[test]
    fn pt_profiles() {
        let s = eigendecompose(&build_hamiltonian(&cfg(40, 1e-5)).unwrap()).unwrap();
        assert!(check_pt_profile(s.right.column(0)).symmetric);
        let s = eigendecompose(&build_hamiltonian(&cfg(40, 0.01)).unwrap()).unwrap();
        assert!(!check_pt_profile(s.right.column(0)).symmetric);
        assert!(!check_pt_profile(s.right.column(1)).symmetric);
        // Only one pair per edge is broken just above Fc1; by F = 0.01 three are.
        let s = eigendecompose(&build_hamiltonian(&cfg(40, 2e-3)).unwrap()).unwrap();
        assert!(!check_pt_profile(s.right.column(0)).symmetric);
        assert!(!check_pt_profile(s.right.column(1)).symmetric);
        assert!(check_pt_profile(s.right.column(2)).symmetric);
        let u = Array1::from_elem(10, C64::new(10f64.sqrt().recip(), 0.0));
        assert_eq!(check_pt_profile(u.view()).asymmetry, 0.0);
    }

    #[test]
    fn per_value_classes() {
        let c = cfg(2, 0.5);
        let vals = eigenvalues(&build_hamiltonian(&c).unwrap()).unwrap();
        assert!(classify_each(&vals, &c, DEFAULT_CLASSIFY_TOL).unwrap().iter().all(|v| *v == ValueClass::Real));
        let c = cfg(3, 2.0);
        let vals = eigenvalues(&build_hamiltonian(&c).unwrap()).unwrap();
        let classes = classify_each(&vals, &c, DEFAULT_CLASSIFY_TOL).unwrap();
        // Odd chains keep one shifted eigenvalue at the origin.
        assert_eq!(classes.iter().filter(|v| **v == ValueClass::Origin).count(), 1);
        assert_eq!(classify_each(&vals[..2], &c, 1e-8), Err(Error::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn accuracy_floor_absorbs_ill_conditioned_roundoff() {
        // Near F = 0.06 the real-band eigenvalues have condition numbers of
        // order 1e8 and pick up spurious imaginary parts.
        let c = cfg(40, 0.06);
        let h = build_hamiltonian(&c).unwrap();
        let s = eigendecompose(&h).unwrap();
        let floor = eigenvalue_uncertainty(&s, &h);
        assert!(floor.iter().all(|u| *u >= 0.0 && u.is_finite()));
        let plain = classify_values(&s.values, &c, DEFAULT_CLASSIFY_TOL).unwrap();
        let aware = classify_eigenvalues(&s, &c, DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(aware.n_real >= plain.n_real);
        assert!(aware.is_resolved() && aware.uncertainty > 1e-9);

        // L = 80 in the same window is beyond double precision.
        let r = classify_config(&cfg(80, 0.03), DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(!r.is_resolved());

        let hs = build_shifted(&c).unwrap();
        let ss = eigendecompose(&hs).unwrap();
        let fs = eigenvalue_uncertainty(&ss, &hs);
        let r = check_k_pairing(&ss, &build_u_transform(40), DEFAULT_CLASSIFY_TOL, Some(&fs)).unwrap();
        assert_eq!(r.partner.len(), 40);
        assert_eq!(check_k_pairing(&ss, &build_u_transform(40), 1e-8, Some(&fs[..3])).unwrap_err(), Error::DimensionMismatch { expected: 40, got: 3 });
    }

    #[test]
    fn finite_size_needs_three_points() {
        assert_eq!(finite_size_fit(&[(10, 1.0), (20, 0.5)]), Err(Error::TooFewPoints { need: 3, got: 2 }));
        let fit = finite_size_fit(&[(20, 0.1), (40, 0.05), (80, 0.025)]).unwrap();
        assert!((fit.power_law.parameters[1] + 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn tallies_are_bounded(l in 2usize..30, f in 0.0f64..3.0) {
            let r = classify_config(&cfg(l, f), DEFAULT_CLASSIFY_TOL).unwrap();
            prop_assert!(r.n_real <= l && r.n_imag <= l);
            // Every eigenvalue of H' is real, imaginary or part of a K pair, so
            // off-axis ones come in pairs.
            prop_assert_eq!((l - r.n_imag) % 2, 0);
        }
    }
}
