//! Dynamical experiments on the single-particle correlation matrix.

use imstark_core::dynamics::{
    boundary_oscillation, contour_fit, density_ratio, evolve_correlation_with, linear_times, localized_damping_deviation,
    nh_evolve_pure, normalized_profiles, rescaled_number, revival, sinh_closed_form, CorrelationTrace, EvolveOptions,
    InitialState,
};
use imstark_core::spectral::geometric_grid;
use imstark_core::{LatticeConfig, PotentialKind};
use rayon::prelude::*;
use serde_json::json;

use super::{check_trace, density_table, evolve_options, init_label, initial_state, time_grid};
use crate::bundle::{Outcome, Table};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::plot::{PlotSpec, Style};

/// Bound on `max |Δ_jj - |ψ_j|^2|` between the correlation and pure-state routes.
const ORACLE_TOL: f64 = 1e-8;

fn evolve(c: &LatticeConfig, init: &InitialState, times: &[f64], opts: &EvolveOptions) -> CliResult<CorrelationTrace> {
    Ok(evolve_correlation_with(c, &init.correlation(c.l)?, times, opts)?)
}

/// Cross-checks a pure-state trace against direct non-Hermitian evolution.
fn oracle_check(out: &mut Outcome, c: &LatticeConfig, init: &InitialState, tr: &CorrelationTrace) -> CliResult<Option<f64>> {
    let Some(psi) = init.pure_state(c.l)? else { return Ok(None) };
    if c.kind != PotentialKind::ImaginaryStark {
        return Ok(None);
    }
    let nh = nh_evolve_pure(c, &psi, &tr.times)?;
    let diff = (&tr.densities - &nh.densities).iter().map(|v| v.abs()).fold(0.0, f64::max);
    out.invariant("lindblad_nh_equivalence", diff < ORACLE_TOL);
    Ok(Some(diff))
}

/// Uniform grid from `time.max`/`time.samples` with experiment defaults.
fn uniform_times(cfg: &Config, t_max: f64, n: usize) -> CliResult<Vec<f64>> {
    let t_max = cfg.positive("time.max", t_max)?;
    let n = cfg.get("time.samples", n)?;
    linear_times(t_max, n).map_err(|e| CliError::Config(e.to_string()))
}

fn trace_meta(f: f64, tr: &CorrelationTrace) -> serde_json::Value {
    json!({ "F": f, "route": tr.route, "condition": tr.condition, "samples": tr.times.len() })
}

pub fn wavepacket(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let fields = cfg.list("grid.F", &[1e-5, 0.01, 1.0])?;
    let sites = cfg.list("grid.ratio_sites", &[25usize, 15])?;
    if sites.len() != 2 {
        return Err(CliError::Config("grid.ratio_sites needs exactly two sites".into()));
    }
    let init = initial_state(cfg, template.l, "gaussian")?;
    let opts = evolve_options(cfg)?;
    let grids = fields.iter().map(|&f| time_grid(cfg, f)).collect::<CliResult<Vec<_>>>()?;
    let traces = fields
        .par_iter()
        .zip(&grids)
        .map(|(&f, times)| evolve(&template.with_f(f), &init, times, &opts))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut runs = Vec::new();
    for (k, (&f, tr)) in fields.iter().zip(&traces).enumerate() {
        let c = template.with_f(f);
        check_trace(&mut out, tr, &c)?;
        let oracle = oracle_check(&mut out, &c, &init, tr)?;
        let ratio = density_ratio(tr, sites[0], sites[1])?;
        let mut meta = trace_meta(f, tr);
        meta["oracle_max_diff"] = json!(oracle);
        meta["ratio_fit"] = json!(ratio.fit);
        meta["ratio_truncated"] = json!(ratio.truncated);
        runs.push(meta);
        out.tables.push(density_table(&format!("density_{k}"), &format!("n_j(t), F={f}"), tr));
        out.tables.push(
            Table::new(format!("ratio_{k}"))
                .real("t", ratio.times)
                .real("R", ratio.ratio)
                .with_plot(PlotSpec::lines(&format!("n_{}/n_{}, F={f}", sites[0], sites[1]), "t", &["R"]).log_y()),
        );
    }
    out.result("initial_state", init_label(&init));
    out.result("runs", runs);
    Ok(out)
}

pub fn uniform_decay(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let fields = cfg.list("grid.F", &[1e-5, 1.0])?;
    let init = initial_state(cfg, template.l, "uniform")?;
    let opts = evolve_options(cfg)?;
    let grids = fields.iter().map(|&f| time_grid(cfg, f)).collect::<CliResult<Vec<_>>>()?;
    let traces = fields
        .par_iter()
        .zip(&grids)
        .map(|(&f, times)| evolve(&template.with_f(f), &init, times, &opts))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut runs = Vec::new();
    for (k, (&f, tr)) in fields.iter().zip(&traces).enumerate() {
        let c = template.with_f(f);
        check_trace(&mut out, tr, &c)?;
        let oracle = oracle_check(&mut out, &c, &init, tr)?;
        let nr = rescaled_number(tr, &c);
        let mut meta = trace_meta(f, tr);
        meta["oracle_max_diff"] = json!(oracle);
        meta["max_abs_nr_minus_one"] = json!(nr.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        runs.push(meta);
        out.tables.push(density_table(&format!("density_{k}"), &format!("n_j(t), F={f}"), tr));
        out.tables.push(
            Table::new(format!("number_{k}"))
                .real("t", tr.times.clone())
                .real("total", tr.total_number())
                .real("N_r", nr)
                .with_plot(PlotSpec::lines(&format!("particle number, F={f}"), "t", &["total", "N_r"]).log_y()),
        );
    }
    out.result("initial_state", init_label(&init));
    out.result("runs", runs);
    Ok(out)
}

pub fn contours(cfg: &Config) -> CliResult<Outcome> {
    let c = cfg.lattice(40, 1.0)?;
    if !(c.f > 0.0) {
        return Err(CliError::Config("contours need lattice.F > 0".into()));
    }
    let init = initial_state(cfg, c.l, "full")?;
    let levels = cfg.list("grid.levels", &[0.1, 0.01, 1e-3])?;
    let lo = cfg.get("grid.site_lo", 10usize)?;
    let hi = cfg.get("grid.site_hi", 30usize.min(c.l))?;
    let times = uniform_times(cfg, 4.0 / c.f, 4001)?;
    let opts = evolve_options(cfg)?;
    let tr = evolve(&c, &init, &times, &opts)?;
    let mut out = Outcome::default();
    check_trace(&mut out, &tr, &c)?;
    let fits = contour_fit(&tr, &levels, (lo, hi))?;
    // Prefactor of the localized damping form: the initial density
    // averaged over the fitted window.
    let n0 = (lo..=hi).map(|j| tr.densities[[j - 1, 0]]).sum::<f64>() / (hi - lo + 1) as f64;
    out.result("trace", trace_meta(c.f, &tr));
    out.result("initial_state", init_label(&init));
    out.result("n0", n0);
    out.result("localized_damping_max_deviation", localized_damping_deviation(&fits, c.f, n0));
    out.result("fits", fits.iter().map(|f| json!({ "level": f.level, "prefactor": f.fit.parameters[0], "slope": f.slope(), "residual": f.fit.residual })).collect::<Vec<_>>());
    let mut level = Vec::new();
    let mut site = Vec::new();
    let mut time = Vec::new();
    let mut predicted = Vec::new();
    for f in &fits {
        for (j, t) in &f.points {
            level.push(f.level);
            site.push(*j as i64);
            time.push(*t);
            predicted.push((n0 / f.level).ln() / (2.0 * c.f * *j as f64));
        }
    }
    out.tables.push(
        Table::new("contours")
            .real("level", level)
            .int("j", site)
            .real("t", time)
            .real("t_localized", predicted)
            .with_plot(PlotSpec::points("iso-density contours", "j", "t").log_x().log_y()),
    );
    out.tables.push(density_table("density", &format!("n_j(t), F={}", c.f), &tr));
    Ok(out)
}

pub fn nr_sweep(cfg: &Config) -> CliResult<Outcome> {
    let template = cfg.lattice_template(40)?;
    let lo = cfg.positive("grid.F_min", 1e-6)?;
    let hi = cfg.positive("grid.F_max", 3.0)?;
    let per_decade = cfg.get("grid.per_decade", 5usize)?;
    let grid = geometric_grid(lo, hi, per_decade).map_err(|e| CliError::Config(e.to_string()))?;
    let axis = cfg.get("time.axis", "rescaled".to_string())?;
    let rescaled = match axis.as_str() {
        "rescaled" => true,
        "raw" => false,
        other => return Err(CliError::Config(format!("time.axis must be rescaled or raw, got '{other}'"))),
    };
    let marks = cfg.list("time.points", &[0.1, 0.5, 1.0])?;
    if marks.iter().any(|t| !(*t > 0.0)) || marks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("time.points must be positive and increasing".into()));
    }
    let init = initial_state(cfg, template.l, "uniform")?;
    let opts = evolve_options(cfg)?;
    let rows = grid
        .par_iter()
        .map(|&f| {
            let c = template.with_f(f);
            let mut times = vec![0.0];
            times.extend(marks.iter().map(|t| if rescaled { t / f } else { *t }));
            let tr = evolve(&c, &init, &times, &opts)?;
            Ok((rescaled_number(&tr, &c)[1..].to_vec(), tr))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    for ((_, tr), &f) in rows.iter().zip(&grid) {
        check_trace(&mut out, tr, &template.with_f(f))?;
    }
    out.invariant("nr_finite_positive", rows.iter().all(|(nr, _)| nr.iter().all(|v| v.is_finite() && *v > 0.0)));
    let prefix = if rescaled { "Nr_tau" } else { "Nr_t" };
    let mut table = Table::new("nr").real("F", grid.clone());
    let mut names = Vec::new();
    for (k, t) in marks.iter().enumerate() {
        let name = format!("{prefix}{t}");
        table = table.real(&name, rows.iter().map(|r| r.0[k]).collect());
        names.push(name);
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    out.tables.push(table.with_plot(PlotSpec::lines("rescaled particle number", "F", &refs).style(Style::LinesPoints).log_x().log_y()));
    out.result("time_axis", &axis);
    out.result("initial_state", init_label(&init));
    if rescaled {
        out.result("sinh_reference", marks.iter().map(|t| json!({ "tau": t, "N_r": sinh_closed_form(template.l, *t) })).collect::<Vec<_>>());
    }
    Ok(out)
}

pub fn boundary_osc(cfg: &Config) -> CliResult<Outcome> {
    let sizes = cfg.list("grid.L", &[40usize, 60])?;
    let fields = cfg.list("grid.F", &[0.1, 0.3, 0.5, 1.0])?;
    let j = cfg.get("lattice.J", 1.0)?;
    let kind = cfg.kind()?;
    let times = uniform_times(cfg, 50.0, 2001)?;
    let opts = evolve_options(cfg)?;
    let mut configs = Vec::new();
    for &l in &sizes {
        for &f in &fields {
            configs.push(LatticeConfig::new(l, j, f, kind).map_err(|e| CliError::Config(e.to_string()))?);
        }
    }
    let inits = configs.iter().map(|c| initial_state(cfg, c.l, "uniform")).collect::<CliResult<Vec<_>>>()?;
    let results = configs
        .par_iter()
        .zip(&inits)
        .map(|(c, init)| {
            let tr = evolve(c, init, &times, &opts)?;
            let osc = boundary_oscillation(&tr)?;
            Ok((tr, osc))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    for (c, (tr, osc)) in configs.iter().zip(&results) {
        check_trace(&mut out, tr, c)?;
        let n1 = tr.site_density(1)?;
        let t0 = tr.times[0];
        out.tables.push(
            Table::new(format!("boundary_L{}_F{}", c.l, c.f))
                .real("t", tr.times.clone())
                .real("n1", n1.clone())
                .real("rescaled", tr.times.iter().zip(&n1).map(|(t, n)| (osc.lambda * (t - t0) + n.max(f64::MIN_POSITIVE).ln()).exp()).collect())
                .with_plot(PlotSpec::lines(&format!("exp(Lambda t) n_1, L={}, F={}", c.l, c.f), "t", &["rescaled"])),
        );
    }
    out.tables.push(
        Table::new("frequencies")
            .int("L", configs.iter().map(|c| c.l as i64).collect())
            .real("F", configs.iter().map(|c| c.f).collect())
            .real("lambda", results.iter().map(|r| r.1.lambda).collect())
            .real("frequency", results.iter().map(|r| r.1.frequency).collect())
            .int("has_oscillation", results.iter().map(|r| r.1.has_oscillation as i64).collect())
            .real("prominence", results.iter().map(|r| r.1.prominence).collect())
            .real("relative_amplitude", results.iter().map(|r| r.1.relative_amplitude).collect())
            .with_plot(PlotSpec::points("oscillation frequency", "F", "frequency")),
    );
    out.result("oscillations", configs.iter().zip(&results).map(|(c, r)| json!({ "L": c.l, "F": c.f, "analysis": r.1 })).collect::<Vec<_>>());
    Ok(out)
}

pub fn bloch_compare(cfg: &Config) -> CliResult<Outcome> {
    let c = cfg.lattice(40, 1.0)?;
    if !(c.f > 0.0) {
        return Err(CliError::Config("bloch-compare needs lattice.F > 0".into()));
    }
    let site = cfg.get("init.site", (c.l / 2).max(1))?;
    let center = cfg.get("init.center", (c.l / 2) as f64)?;
    let beta = cfg.positive("init.beta", 1.0)?;
    let inits = [InitialState::SingleSite(site), InitialState::GaussianPacket { center, beta }];
    for i in &inits {
        i.pure_state(c.l).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let times = uniform_times(cfg, 4.0 * std::f64::consts::PI / c.f, 801)?;
    let opts = evolve_options(cfg)?;
    let mut runs = Vec::new();
    for kind in [PotentialKind::RealStark, PotentialKind::ImaginaryStark] {
        for init in &inits {
            runs.push((c.with_kind(kind), *init));
        }
    }
    let traces = runs.par_iter().map(|(rc, init)| evolve(rc, init, &times, &opts)).collect::<CliResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    for ((rc, init), tr) in runs.iter().zip(&traces) {
        check_trace(&mut out, tr, rc)?;
        let rep = revival(rc.kind, &tr.times, &tr.densities);
        let tag = format!("{}_{}", kind_label(rc.kind), init_label(init));
        out.tables.push(density_table(&format!("density_{tag}"), &format!("n_j(t), {tag}"), tr));
        out.tables.push(
            Table::new(format!("moments_{tag}"))
                .real("t", tr.times.clone())
                .real("centroid", rep.centroid.clone())
                .real("width", rep.width.clone())
                .with_plot(PlotSpec::lines(&format!("centroid and width, {tag}"), "t", &["centroid", "width"])),
        );
        reports.push(json!({
            "kind": rc.kind,
            "initial_state": init_label(init),
            "period": rep.period,
            "max_departure": rep.max_departure,
            "return_distance": rep.return_distance,
        }));
    }
    // Normalized-profile distance between the two initial states on the
    // imaginary ladder, after the first half Bloch period.
    let (a, b) = (normalized_profiles(&traces[2].densities), normalized_profiles(&traces[3].densities));
    let start = times.iter().position(|t| *t >= std::f64::consts::PI / c.f).unwrap_or(times.len());
    let distance = (start..times.len())
        .map(|k| a.column(k).iter().zip(b.column(k).iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    out.result("revivals", reports);
    out.result("bloch_period", 2.0 * std::f64::consts::PI / c.f);
    out.result("imaginary_profile_l1_distance", distance);
    Ok(out)
}

fn kind_label(kind: PotentialKind) -> &'static str {
    match kind {
        PotentialKind::RealStark => "real",
        PotentialKind::ImaginaryStark => "imaginary",
    }
}
