//! Experiment registry and shared helpers.

mod dynamics;
mod spectra;

use imstark_core::dynamics::{default_times, linear_times, CorrelationTrace, EvolveOptions, InitialState, Method};
use imstark_core::{LatticeConfig, PotentialKind};

use crate::bundle::{Outcome, Table};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::plot::PlotSpec;

pub struct Experiment {
    pub name: &'static str,
    /// The figure layout the bundle reproduces.
    pub figure: &'static str,
    pub run: fn(&Config) -> CliResult<Outcome>,
}

pub const REGISTRY: [Experiment; 13] = [
    Experiment { name: "spectrum-panel", figure: "complex-plane eigenvalue panels at several field strengths", run: spectra::spectrum_panel },
    Experiment { name: "ipr-sweep", figure: "mean, min and max IPR versus field (log x)", run: spectra::ipr_sweep },
    Experiment { name: "count-sweep", figure: "real and imaginary eigenvalue fractions versus field", run: spectra::count_sweep },
    Experiment { name: "finite-size", figure: "transition fields Fc1, Fc2 versus chain length with fits", run: spectra::finite_size },
    Experiment { name: "pt-states", figure: "eigenstate profiles across the passive PT transition", run: spectra::pt_states },
    Experiment { name: "size-spectra", figure: "shifted spectra for several chain lengths", run: spectra::size_spectra },
    Experiment { name: "analytic-compare", figure: "numeric vs Bessel eigenstates and localization length versus field", run: spectra::analytic_compare },
    Experiment { name: "wavepacket", figure: "wavepacket density map and two-site density ratio", run: dynamics::wavepacket },
    Experiment { name: "uniform-decay", figure: "density map and rescaled number from the uniform state", run: dynamics::uniform_decay },
    Experiment { name: "contours", figure: "iso-density contours t(j) on log-log axes", run: dynamics::contours },
    Experiment { name: "nr-sweep", figure: "rescaled particle number versus field at fixed times", run: dynamics::nr_sweep },
    Experiment { name: "boundary-osc", figure: "rescaled first-site density and oscillation frequency versus field", run: dynamics::boundary_osc },
    Experiment { name: "bloch-compare", figure: "real vs imaginary ladder: breathing mode and Bloch oscillation", run: dynamics::bloch_compare },
];

pub fn find(name: &str) -> CliResult<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::Config(format!("unknown experiment '{name}' (see `imstark list`)")))
}

/// Relative tolerance for the Hermiticity and positivity checks on traces.
const TRACE_CHECK_TOL: f64 = 1e-10;

fn classify_tol(cfg: &Config) -> CliResult<f64> {
    cfg.positive("tol.classify", imstark_core::spectral::DEFAULT_CLASSIFY_TOL)
}

fn bisect_tol(cfg: &Config) -> CliResult<f64> {
    cfg.positive("tol.bisect", 1e-9)
}

/// `time.max` / `time.samples` give a uniform grid; without either the
/// default geometric-then-uniform grid for `F` is used.
fn time_grid(cfg: &Config, f: f64) -> CliResult<Vec<f64>> {
    let t_max: Option<f64> = cfg.get_opt("time.max")?;
    let n: Option<usize> = cfg.get_opt("time.samples")?;
    if t_max.is_none() && n.is_none() {
        return Ok(default_times(f));
    }
    linear_times(t_max.unwrap_or(10.0 / f.max(0.01)), n.unwrap_or(401)).map_err(|e| CliError::Config(e.to_string()))
}

fn evolve_options(cfg: &Config) -> CliResult<EvolveOptions> {
    let d = EvolveOptions::default();
    let method = match cfg.get("time.method", "auto".to_string())?.as_str() {
        "auto" => Method::Auto,
        "spectral" => Method::Spectral,
        "integrator" => Method::Integrator,
        other => return Err(CliError::Config(format!("time.method must be auto, spectral or integrator, got '{other}'"))),
    };
    Ok(EvolveOptions { method, max_condition: cfg.positive("time.max_condition", d.max_condition)?, rtol: cfg.positive("time.rtol", d.rtol)? })
}

/// `init.kind` in {site, uniform, gaussian, full} with `init.site`,
/// `init.center` and `init.beta`.
fn initial_state(cfg: &Config, l: usize, default_kind: &str) -> CliResult<InitialState> {
    let kind = cfg.get("init.kind", default_kind.to_string())?;
    let state = match kind.as_str() {
        "site" => InitialState::SingleSite(cfg.get("init.site", (l / 2).max(1))?),
        "uniform" => InitialState::Uniform,
        "gaussian" => InitialState::GaussianPacket { center: cfg.get("init.center", (l / 2) as f64)?, beta: cfg.positive("init.beta", 1.0)? },
        "full" => InitialState::FullyOccupied,
        other => return Err(CliError::Config(format!("init.kind must be site, uniform, gaussian or full, got '{other}'"))),
    };
    state.pure_state(l).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(state)
}

fn init_label(s: &InitialState) -> String {
    match s {
        InitialState::SingleSite(m) => format!("site-{m}"),
        InitialState::Uniform => "uniform".into(),
        InitialState::GaussianPacket { .. } => "gaussian".into(),
        InitialState::FullyOccupied => "full".into(),
    }
}

/// Hermiticity, positivity and particle-number checks on one trace.
fn check_trace(out: &mut Outcome, tr: &CorrelationTrace, lattice: &LatticeConfig) -> CliResult<()> {
    let total = tr.total_number();
    let scale = total[0].max(f64::MIN_POSITIVE);
    out.invariant("hermitian", tr.hermiticity_defect() / scale < TRACE_CHECK_TOL);
    out.invariant("positive_semidefinite", tr.min_eigenvalue()? / scale > -TRACE_CHECK_TOL);
    let conserving = lattice.f == 0.0 || lattice.kind == PotentialKind::RealStark;
    if conserving {
        out.invariant("number_conserved", total.iter().all(|n| (n - total[0]).abs() <= TRACE_CHECK_TOL * scale));
    } else {
        out.invariant("number_non_increasing", total.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
    out.warnings.extend(tr.warnings.iter().cloned());
    Ok(())
}

/// Long-format `(t, j, n)` density table.
fn density_table(name: &str, title: &str, tr: &CorrelationTrace) -> Table {
    let (l, nt) = tr.densities.dim();
    let mut t = Vec::with_capacity(l * nt);
    let mut j = Vec::with_capacity(l * nt);
    let mut n = Vec::with_capacity(l * nt);
    for k in 0..nt {
        for site in 0..l {
            t.push(tr.times[k]);
            j.push(site as i64 + 1);
            n.push(tr.densities[[site, k]]);
        }
    }
    Table::new(name).real("t", t).int("j", j).real("n", n).with_plot(PlotSpec::map(title, "t", "j", "n").log_z())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_findable() {
        for e in &REGISTRY {
            assert_eq!(find(e.name).unwrap().name, e.name);
            assert!(!e.figure.is_empty());
        }
        let mut names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        assert!(matches!(find("spectrum"), Err(CliError::Config(_))));
    }

    #[test]
    fn initial_state_parsing() {
        let c = Config::parse("init.kind = gaussian\ninit.beta = 0.5").unwrap();
        assert_eq!(initial_state(&c, 40, "site").unwrap(), InitialState::GaussianPacket { center: 20.0, beta: 0.5 });
        let c = Config::parse("init.site = 41").unwrap();
        assert!(matches!(initial_state(&c, 40, "site"), Err(CliError::Config(_))));
        let c = Config::parse("init.kind = bogus").unwrap();
        assert!(matches!(initial_state(&c, 40, "site"), Err(CliError::Config(_))));
    }

    #[test]
    fn time_grid_modes() {
        let c = Config::parse("").unwrap();
        assert_eq!(time_grid(&c, 1.0).unwrap().len(), 401);
        let c = Config::parse("time.max = 2\ntime.samples = 5").unwrap();
        assert_eq!(time_grid(&c, 1.0).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let c = Config::parse("time.samples = 1").unwrap();
        assert!(matches!(time_grid(&c, 1.0), Err(CliError::Config(_))));
    }
}
