//! Spectral experiments: eigenvalue panels, sweeps, transitions, states.

use imstark_core::analytic::{analytic_eigenpair, gaussian_fit, localization_length, middle_localization_length, ProfileSource};
use imstark_core::eigen::{eigendecompose, order_by_imag_desc, Spectrum};
use imstark_core::fit::fit_power_law;
use imstark_core::lattice::{build_hamiltonian, build_shifted, build_u_transform, k_symmetry_residual, pt_symmetry_residual};
use imstark_core::spectral::{
    check_k_pairing, check_pt_profile, classify_eigenvalues, classify_spectrum_each, count_scan, detect_transition, eigenvalue_uncertainty,
    finite_size_fit, geometric_grid, mean_ipr, Transition, PAIRING_TOL,
};
use imstark_core::LatticeConfig;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::json;

use super::{bisect_tol, classify_tol};
use crate::bundle::{Outcome, Table};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::plot::{PlotSpec, Style};

/// Residual bound for the eigensolver check, relative to `|H|_F`.
const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
/// Bound on the K and PT identities.
const SYMMETRY_TOL: f64 = 1e-12;

fn solve(cfg: &LatticeConfig) -> CliResult<Spectrum> {
    Ok(eigendecompose(&build_hamiltonian(cfg)?)?)
}

/// Symmetry identities, eigen residual and K pairing for one configuration.
fn spectral_checks(out: &mut Outcome, cfg: &LatticeConfig, spec: &Spectrum) -> CliResult<()> {
    out.invariant("k_symmetry", k_symmetry_residual(cfg)? < SYMMETRY_TOL);
    out.invariant("pt_symmetry", pt_symmetry_residual(cfg)? < SYMMETRY_TOL);
    out.invariant("eigen_residual", spec.residual(&build_hamiltonian(cfg)?) < EIGEN_RESIDUAL_TOL);
    let h_shifted = build_shifted(cfg)?;
    let shifted = eigendecompose(&h_shifted)?;
    let floor = eigenvalue_uncertainty(&shifted, &h_shifted);
    let paired = match check_k_pairing(&shifted, &build_u_transform(cfg.l), PAIRING_TOL, Some(&floor)) {
        Ok(r) => r.all_ok(),
        Err(imstark_core::Error::UnpairedEigenvalue(m)) => {
            out.warnings.push(format!("F={}: eigenvalue {m} has no K partner", cfg.f));
            false
        }
        Err(e) => return Err(e.into()),
    };
    out.invariant("k_pairing", paired);
    Ok(())
}

fn spectrum_table(name: &str, cfg: &LatticeConfig, spec: &Spectrum, tol: f64) -> CliResult<Table> {
    let e0 = cfg.energy_offset();
    let classes = classify_spectrum_each(spec, cfg, tol)?;
    Ok(Table::new(name)
        .int("m", (1..=spec.dim() as i64).collect())
        .complex("E", spec.values.clone())
        .complex("E_shifted", spec.values.iter().map(|e| e - e0).collect())
        .text("class", classes.iter().map(|c| c.as_str().to_string()).collect())
        .with_plot(PlotSpec::points(&format!("shifted spectrum, L={}, F={}", cfg.l, cfg.f), "re_E_shifted", "im_E_shifted")))
}

pub fn spectrum_panel(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let fields = cfg.list("grid.F", &[1e-5, 0.05, 0.1, 1.0])?;
    let tol = classify_tol(cfg)?;
    let spectra = fields.par_iter().map(|&f| solve(&template.with_f(f))).collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut panels = Vec::new();
    for (k, (f, spec)) in fields.iter().zip(&spectra).enumerate() {
        let c = template.with_f(*f);
        spectral_checks(&mut out, &c, spec)?;
        out.tables.push(spectrum_table(&format!("spectrum_{k}"), &c, spec, tol)?);
        panels.push(classify_eigenvalues(spec, &c, tol)?);
    }
    out.result("panels", panels);
    Ok(out)
}

fn field_grid(cfg: &Config, lo: f64, hi: f64, per_decade: usize) -> CliResult<Vec<f64>> {
    let lo = cfg.positive("grid.F_min", lo)?;
    let hi = cfg.positive("grid.F_max", hi)?;
    let n = cfg.get("grid.per_decade", per_decade)?;
    geometric_grid(lo, hi, n).map_err(|e| CliError::Config(e.to_string()))
}

pub fn ipr_sweep(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let grid = field_grid(cfg, 1e-6, 10.0, 200)?;
    let stats = grid
        .par_iter()
        .map(|&f| Ok(mean_ipr(&solve(&template.with_f(f))?)?))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let floor = 1.0 / template.l as f64 - 1e-12;
    out.invariant("ipr_bounds", stats.iter().all(|s| s.min >= floor && s.max <= 1.0 + 1e-12));
    out.tables.push(
        Table::new("ipr")
            .real("F", grid.clone())
            .real("mean", stats.iter().map(|s| s.mean).collect())
            .real("min", stats.iter().map(|s| s.min).collect())
            .real("max", stats.iter().map(|s| s.max).collect())
            .with_plot(PlotSpec::lines(&format!("IPR, L={}", template.l), "F", &["mean", "min", "max"]).log_x()),
    );
    out.result("points", grid.len());
    Ok(out)
}

pub fn count_sweep(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let grid = field_grid(cfg, 1e-6, 2.0, 200)?;
    let tol = classify_tol(cfg)?;
    let width = bisect_tol(cfg)?;
    let reports = count_scan(&template, &grid, tol)?;
    let mut out = Outcome::default();
    let l = template.l;
    out.invariant("tally_bounds", reports.iter().all(|r| r.n_real <= l && r.n_imag <= l));
    // Monotonicity is only asserted where double precision resolves the spectrum.
    let resolved: Vec<_> = reports.iter().filter(|r| r.is_resolved()).collect();
    let monotone = resolved.windows(2).all(|w| w[1].n_real <= w[0].n_real && w[1].n_imag >= w[0].n_imag);
    out.invariant("monotone_counts", monotone);
    let unresolved: Vec<f64> = reports.iter().filter(|r| !r.is_resolved()).map(|r| r.f).collect();
    if let (Some(a), Some(b)) = (unresolved.first(), unresolved.last()) {
        out.warnings.push(format!("{} scan points in F = [{a:.3e}, {b:.3e}] exceed the eigenvalue resolution limit", unresolved.len()));
    }
    out.result("unresolved_points", unresolved.len());
    let fc1 = detect_transition(&template, Transition::Fc1, (grid[0], grid[grid.len() - 1]), width, tol);
    let fc2 = detect_transition(&template, Transition::Fc2, (grid[0], grid[grid.len() - 1]), width, tol);
    out.result("Fc1", fc1.as_ref().ok());
    out.result("Fc2", fc2.as_ref().ok());
    for (name, r) in [("Fc1", &fc1), ("Fc2", &fc2)] {
        if let Err(e) = r {
            out.warnings.push(format!("{name} not bracketed by the scan: {e}"));
        }
    }
    out.tables.push(
        Table::new("counts")
            .real("F", grid)
            .int("n_real", reports.iter().map(|r| r.n_real as i64).collect())
            .int("n_imag", reports.iter().map(|r| r.n_imag as i64).collect())
            .real("frac_real", reports.iter().map(|r| r.frac_real).collect())
            .real("frac_imag", reports.iter().map(|r| r.frac_imag).collect())
            .real("uncertainty", reports.iter().map(|r| r.uncertainty).collect())
            .with_plot(PlotSpec::lines(&format!("eigenvalue fractions, L={l}"), "F", &["frac_real", "frac_imag"]).log_x()),
    );
    Ok(out)
}

pub fn finite_size(cfg: &Config) -> CliResult<Outcome> {
    let sizes = cfg.list("grid.L", &[20usize, 40, 80, 160])?;
    let j = cfg.get("lattice.J", 1.0)?;
    let kind = cfg.kind()?;
    let tol = classify_tol(cfg)?;
    let width = bisect_tol(cfg)?;
    let fc1_bracket = (cfg.positive("grid.Fc1_lo", 1e-9)?, cfg.positive("grid.Fc1_hi", 0.05)?);
    let fc2_bracket = (cfg.positive("grid.Fc2_lo", 0.1)?, cfg.positive("grid.Fc2_hi", 3.0)?);
    let points = sizes
        .par_iter()
        .map(|&l| {
            let t = LatticeConfig::new(l, j, 0.0, kind).map_err(|e| CliError::Config(e.to_string()))?;
            let fc1 = detect_transition(&t, Transition::Fc1, fc1_bracket, width, tol)?;
            let fc2 = detect_transition(&t, Transition::Fc2, fc2_bracket, width, tol)?;
            Ok((l, fc1, fc2))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.invariant("fc1_below_fc2", points.iter().all(|p| p.1 < p.2));
    if points.len() >= 3 {
        let fc1 = finite_size_fit(&points.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>())?;
        let fc2 = finite_size_fit(&points.iter().map(|p| (p.0, p.2)).collect::<Vec<_>>())?;
        out.result("Fc1_power_law", json!({ "prefactor": fc1.power_law.parameters[0], "exponent": fc1.power_law.parameters[1], "residual": fc1.power_law.residual }));
        out.result("Fc2_constant", json!({ "value": fc2.constant.parameters[0], "residual": fc2.constant.residual }));
    } else {
        out.warnings.push("fewer than three sizes: no fits".into());
    }
    out.tables.push(
        Table::new("transitions")
            .int("L", points.iter().map(|p| p.0 as i64).collect())
            .real("Fc1", points.iter().map(|p| p.1).collect())
            .real("Fc2", points.iter().map(|p| p.2).collect())
            .with_plot(PlotSpec::lines("transition fields", "L", &["Fc1", "Fc2"]).style(Style::LinesPoints).log_x().log_y()),
    );
    Ok(out)
}

pub fn pt_states(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let fields = cfg.list("grid.F", &[1e-5, 2e-3, 0.01])?;
    let n_states = cfg.get("grid.states", 3usize)?;
    if n_states == 0 || n_states > template.l {
        return Err(CliError::Config(format!("grid.states must be in 1..={}", template.l)));
    }
    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for (k, &f) in fields.iter().enumerate() {
        let c = template.with_f(f);
        let spec = solve(&c)?;
        out.invariant("pt_symmetry", pt_symmetry_residual(&c)? < SYMMETRY_TOL);
        let mut table = Table::new(format!("states_{k}")).int("j", (1..=c.l as i64).collect());
        let mut names = Vec::new();
        for m in 0..n_states {
            let col = spec.right.column(m);
            let profile = check_pt_profile(col);
            let name = format!("psi2_{}", m + 1);
            table = table.real(&name, col.iter().map(|z| z.norm_sqr()).collect());
            names.push(name);
            summary.push(json!({
                "F": f,
                "state": m + 1,
                "E_shifted": [(spec.values[m] - c.energy_offset()).re, (spec.values[m] - c.energy_offset()).im],
                "pt_symmetric": profile.symmetric,
                "asymmetry": profile.asymmetry,
            }));
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        out.tables.push(table.with_plot(PlotSpec::lines(&format!("|psi|^2, F={f}"), "j", &refs).style(Style::LinesPoints)));
    }
    out.result("states", summary);
    Ok(out)
}

pub fn size_spectra(cfg: &Config) -> CliResult<Outcome> {
    let sizes = cfg.list("grid.L", &[20usize, 40, 60])?;
    let f = cfg.get("lattice.F", 0.1)?;
    let j = cfg.get("lattice.J", 1.0)?;
    let kind = cfg.kind()?;
    let tol = classify_tol(cfg)?;
    let configs = sizes
        .iter()
        .map(|&l| LatticeConfig::new(l, j, f, kind).map_err(|e| CliError::Config(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let spectra = configs.par_iter().map(solve).collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for (c, spec) in configs.iter().zip(&spectra) {
        spectral_checks(&mut out, c, spec)?;
        out.tables.push(spectrum_table(&format!("spectrum_L{}", c.l), c, spec, tol)?);
        let classes = classify_spectrum_each(spec, c, tol)?;
        let e0 = c.energy_offset();
        let mut complex_re: Vec<f64> = spec
            .values
            .iter()
            .zip(&classes)
            .filter(|(_, cl)| !cl.is_real() && !cl.is_imaginary())
            .map(|(e, _)| (e - e0).re.abs())
            .collect();
        complex_re.sort_by(|a, b| b.total_cmp(a));
        complex_re.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        summary.push(json!({ "L": c.l, "report": classify_eigenvalues(spec, c, tol)?, "complex_abs_real_parts": complex_re }));
    }
    out.result("sizes", summary);
    Ok(out)
}

pub fn analytic_compare(cfg: &Config) -> CliResult<Outcome> {
    let c = cfg.lattice(40, 0.8)?;
    let labels = cfg.list("grid.m", &[1usize, 10, 20])?;
    let ls_fields = cfg.list("grid.F_ls", &[0.5, 0.6, 0.7, 0.8, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0])?;
    let spec = solve(&c)?;
    let order = order_by_imag_desc(&spec.values);
    let mut out = Outcome::default();
    out.invariant("eigen_residual", spec.residual(&build_hamiltonian(&c)?) < EIGEN_RESIDUAL_TOL);
    let mut comparisons = Vec::new();
    for &m in &labels {
        if m == 0 || m > c.l {
            return Err(CliError::Config(format!("grid.m entries must be in 1..={}", c.l)));
        }
        let (e, state) = analytic_eigenpair(m, &c)?;
        let k = (0..spec.dim()).min_by(|a, b| (spec.values[*a] - e).norm().total_cmp(&(spec.values[*b] - e).norm())).unwrap_or(0);
        let num = spec.right.column(k);
        let overlap: C64 = num.iter().zip(state.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum();
        let ls = gaussian_fit(num).ok().map(|fit| localization_length(&fit));
        comparisons.push(json!({
            "m": m,
            "E_analytic": [e.re, e.im],
            "E_numeric": [spec.values[k].re, spec.values[k].im],
            "overlap": overlap.norm(),
            "numeric_is_m_th_by_decay": order.get(m - 1) == Some(&k),
            "localization_length": ls,
        }));
        out.tables.push(
            Table::new(format!("state_m{m}"))
                .int("j", (1..=c.l as i64).collect())
                .real("numeric", num.iter().map(|z| z.norm()).collect())
                .real("analytic", state.amplitudes.iter().map(|z| z.norm()).collect())
                .with_plot(PlotSpec::lines(&format!("|psi_m|, m={m}, F={}", c.f), "j", &["numeric", "analytic"]).style(Style::LinesPoints)),
        );
    }
    out.result("states", comparisons);
    let lengths = ls_fields
        .par_iter()
        .map(|&f| {
            let cf = c.with_f(f);
            Ok((middle_localization_length(&cf, ProfileSource::Numeric)?, middle_localization_length(&cf, ProfileSource::Analytic)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let numeric: Vec<f64> = lengths.iter().map(|p| p.0).collect();
    let analytic: Vec<f64> = lengths.iter().map(|p| p.1).collect();
    for (name, ys) in [("numeric", &numeric), ("analytic", &analytic)] {
        let fit = fit_power_law(&ls_fields, ys)?;
        out.result(&format!("ls_power_law_{name}"), json!({ "prefactor": fit.parameters[0], "exponent": fit.parameters[1], "residual": fit.residual }));
    }
    out.tables.push(
        Table::new("localization_length")
            .real("F", ls_fields)
            .real("ls_numeric", numeric)
            .real("ls_analytic", analytic)
            .with_plot(PlotSpec::lines("localization length", "F", &["ls_numeric", "ls_analytic"]).style(Style::LinesPoints).log_x().log_y()),
    );
    Ok(out)
}
