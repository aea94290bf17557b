//! Batch commands behind the `pem-plate` binary.
//!
//! Every command takes a validated [`RunConfig`] and an output directory,
//! writes its CSV files there and returns a human-readable report. Floats
//! are written with 17 significant digits (`{:.16e}`) and every CSV starts
//! with a header row, so repeated runs with the same config and thread
//! count produce identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::assembly::{assemble, patch_test, patch_test_with, pure_bending_material, AssembledSystem, BcKind, PatchReport};
use crate::config::{IcSpec, MeshSource, RunConfig, L_SHAPE_MESH};
use crate::dynamics::{
    impulse_ic, integrate, integrate_energies, optimize_resistance, DampingReport, InitialCondition, SearchOptions,
};
use crate::element::BendingVariant;
use crate::error::{Error, Result};
use crate::material::{build_material, NetworkParams};
use crate::mesh::{generate_structured_square, load_mesh, parse_mesh, Mesh};
use crate::modal::{coupling_table, reduce, tune_inductance, CouplingTable, Field, FieldModes, ModeSet, ReducedSystem, Tuning};

/// Rows kept in trajectory-like CSVs when no stride is configured.
const TARGET_ROWS: usize = 2000;

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(name));
    log::info!("{name}: {:.3} s", start.elapsed().as_secs_f64());
    out
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let io = |p: &Path, e: std::io::Error| Error::Io { path: p.to_path_buf(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    Ok(path)
}

/// The mesh and configuration shared by all stages.
pub struct Model<'a> {
    pub cfg: &'a RunConfig,
    pub mesh: Mesh,
}

impl<'a> Model<'a> {
    pub fn load(cfg: &'a RunConfig) -> Result<Model<'a>> {
        let mesh = stage("mesh", || match &cfg.mesh {
            MeshSource::Structured { n, side, pattern } => generate_structured_square(*n, *side, *pattern),
            MeshSource::File(p) => load_mesh(p),
            MeshSource::Builtin(_) => parse_mesh(L_SHAPE_MESH),
        })?;
        Ok(Model { cfg, mesh })
    }

    pub fn assemble(&self, net: &NetworkParams) -> Result<AssembledSystem> {
        assemble(&self.mesh, &build_material(&self.cfg.plate, net)?, &self.cfg.bcs)
    }

    fn modes(&self, net: &NetworkParams) -> Result<(AssembledSystem, FieldModes)> {
        let sys = stage("assembly", || self.assemble(net))?;
        let modes = stage("modes", || {
            let mut m = FieldModes::solve(&sys, self.cfg.n_mech, self.cfg.n_elec)?;
            m.mechanical.reclassify(self.cfg.classification_threshold);
            m.electric.reclassify(self.cfg.classification_threshold);
            Ok(m)
        })?;
        Ok((sys, modes))
    }

    fn tune(&self) -> Result<Option<Tuning>> {
        match self.cfg.tuning {
            None => Ok(None),
            Some((m, e)) => stage("tuning", || tune_inductance(&self.cfg.network, |n| self.assemble(n), m, e)).map(Some),
        }
    }

    /// Network after tuning, or the configured one when tuning is off.
    fn tuned_network(&self, tuning: &Option<Tuning>) -> NetworkParams {
        tuning.as_ref().map_or(self.cfg.network, |t| t.network)
    }
}

/// Normalized reference spectra `(plate, membrane)` when the configuration
/// is a simply supported, grounded square with an isotropic plate.
pub fn analytic_catalog(cfg: &RunConfig, n_mech: usize, n_elec: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if !matches!(cfg.mesh, MeshSource::Structured { .. }) || cfg.plate.rotary_inertia {
        return None;
    }
    let mut kinds: Vec<BcKind> = cfg.bcs.iter().filter(|b| b.group == "boundary").map(|b| b.kind).collect();
    kinds.sort_by_key(|k| k.name());
    if cfg.bcs.len() != 2 || kinds != [BcKind::Grounded, BcKind::SimplySupported] {
        return None;
    }
    let n = n_mech.max(n_elec);
    let side = (n as f64).sqrt().ceil() as usize + 2;
    let mut sums: Vec<f64> = (1..=side).flat_map(|m| (1..=side).map(move |k| (m * m + k * k) as f64)).collect();
    sums.sort_by(f64::total_cmp);
    let plate = sums[..n_mech].iter().map(|s| s / 2.0).collect();
    let membrane = sums[..n_elec].iter().map(|s| (s / 2.0).sqrt()).collect();
    Some((plate, membrane))
}

/// `modes.csv` body and the normalized-table text.
pub fn modes_report(cfg: &RunConfig, modes: &FieldModes) -> (String, String) {
    let catalog = analytic_catalog(cfg, modes.mechanical.len(), modes.electric.len());
    let mut csv = String::from("index,omega,omega_normalized,classification");
    if catalog.is_some() {
        csv.push_str(",analytic_normalized,error_percent");
    }
    csv.push('\n');
    let mut text = String::new();
    let mut index = 0;
    for (field, set) in [(Field::Mechanical, &modes.mechanical), (Field::Electric, &modes.electric)] {
        let reference = catalog.as_ref().map(|(p, m)| if field == Field::Mechanical { p } else { m });
        let _ = writeln!(text, "{} modes (omega_1 = {:.8e})", field.name(), set.omega[0]);
        let _ = writeln!(text, "{:>4} {:>16} {:>12}{}", "k", "omega", "normalized", if reference.is_some() { "     analytic   error %" } else { "" });
        for (k, w) in set.normalized().iter().enumerate() {
            index += 1;
            let _ = write!(csv, "{index},{},{},{}", num(set.omega[k]), num(*w), set.class[k].name());
            let _ = write!(text, "{:>4} {:>16.8e} {:>12.6}", k + 1, set.omega[k], w);
            if let Some(r) = reference {
                let err = 100.0 * (w - r[k]).abs() / r[k];
                let _ = write!(csv, ",{},{}", num(r[k]), num(err));
                let _ = write!(text, " {:>12.6} {:>9.4}", r[k], err);
            }
            csv.push('\n');
            text.push('\n');
        }
    }
    if catalog.is_none() {
        text.push_str("no analytic reference for this configuration; analytic columns omitted\n");
    }
    (csv, text)
}

/// `coupling.csv` body: rows electric modes, columns mechanical modes.
pub fn coupling_csv(table: &DMatrix<f64>) -> String {
    let mut s = String::from("electric_mode");
    for j in 0..table.ncols() {
        let _ = write!(s, ",m{}", j + 1);
    }
    s.push('\n');
    for i in 0..table.nrows() {
        let _ = write!(s, "e{}", i + 1);
        for j in 0..table.ncols() {
            let _ = write!(s, ",{}", num(table[(i, j)]));
        }
        s.push('\n');
    }
    s
}

fn coupling_text(t: &CouplingTable) -> String {
    let mut s = String::from("normalized coupling (rows electric, columns mechanical)\n");
    for i in 0..t.normalized.nrows() {
        for j in 0..t.normalized.ncols() {
            let _ = write!(s, "{:>7.3}", t.normalized[(i, j)]);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "max raw coupling {:.6e}", t.raw.max());
    s
}

fn stride_for(steps: usize, configured: Option<usize>) -> usize {
    configured.unwrap_or_else(|| steps.div_ceil(TARGET_ROWS).max(1))
}

fn realize_ic(model: &Model, sys: &AssembledSystem, rs: &ReducedSystem) -> Result<InitialCondition> {
    match &model.cfg.simulation.ic {
        IcSpec::Unimodal { field, mode, amplitude, excite } => {
            let k = if *field == Field::Mechanical { *mode } else { model.cfg.n_mech + mode };
            Ok(InitialCondition::Unimodal { mode: k, amplitude: *amplitude, on: *excite })
        }
        IcSpec::Impulse { x, y, magnitude } => impulse_ic(&model.mesh, sys, rs, (*x, *y), *magnitude),
    }
}

struct Simulation {
    csv: String,
    text: String,
}

fn simulate(model: &Model, sys: &AssembledSystem, basis: &ModeSet) -> Result<Simulation> {
    let cfg = &model.cfg.simulation;
    let rs = stage("reduction", || reduce(sys, basis))?;
    let ic = stage("simulation", || realize_ic(model, sys, &rs))?;
    let dt = cfg.dt.unwrap_or(rs.min_period() / 40.0);
    let traj = stage("simulation", || integrate(&rs, &ic, cfg.t_f, dt))?;
    let n = rs.dim();

    let mut csv = String::from("t");
    for k in 0..n {
        let _ = write!(csv, ",z_{}", k + 1);
    }
    csv.push_str(",E_mech,E_elec,E_total\n");
    let e = &traj.energies;
    let stride = stride_for(traj.len(), cfg.stride);
    for i in (0..traj.len()).step_by(stride) {
        csv.push_str(&num(traj.t[i]));
        for v in traj.z[i].iter() {
            let _ = write!(csv, ",{}", num(*v));
        }
        let _ = writeln!(csv, ",{},{},{}", num(e.mech[i]), num(e.elec[i]), num(e.total[i]));
    }

    let mut text = String::new();
    let _ = writeln!(text, "{} steps of dt = {:.6e} to t = {:.6e}, {} modes, every {} written", traj.len() - 1, traj.dt(), traj.t[traj.len() - 1], n, stride);
    let (m0, t0) = (e.mech[0], e.total[0]);
    if m0 > 0.0 {
        let min = e.mech.iter().cloned().fold(f64::INFINITY, f64::min);
        let _ = writeln!(text, "min E_mech / E_mech(0) = {:.6e}", min / m0);
    }
    if t0 > 0.0 {
        let _ = writeln!(text, "max |E_total - E_total(0)| / E_total(0) = {:.6e}", traj.energy_drift());
    }
    Ok(Simulation { csv, text })
}

struct Search {
    report: DampingReport,
    csv: String,
    regimes_csv: String,
    text: String,
}

fn search_resistance(model: &Model, network: &NetworkParams, basis: &ModeSet) -> Result<Search> {
    let rc = &model.cfg.resistance;
    let opts = SearchOptions { t_f: rc.t_f, grid_points: rc.grid, min_peaks: rc.min_peaks, ..SearchOptions::default() };
    let build = |r: f64| reduce(&model.assemble(&network.with_resistance(r))?, basis);
    stage("resistance-search", || {
        let report = optimize_resistance(&build, rc.mode, (rc.lo, rc.hi), &opts)?;
        let mut csv = String::from("R_N,zeta,settling_time\n");
        for s in &report.samples {
            let settle = s.settling_time.map(num).unwrap_or_default();
            let _ = writeln!(csv, "{},{},{settle}", num(s.resistance), num(s.zeta));
        }

        // mechanical energy histories of the three regimes on a common grid
        let t_f = report.regimes.iter().map(|s| s.t_f).fold(0.0, f64::max);
        let runs: Vec<(Vec<f64>, Vec<f64>)> = report
            .regimes
            .par_iter()
            .map(|s| {
                let rs = build(s.resistance)?;
                let dt = opts.dt.unwrap_or(rs.min_period() / 40.0);
                let (t, e) = integrate_energies(&rs, &InitialCondition::unimodal(rc.mode, 1.0), t_f, dt)?;
                Ok((t, e.mech))
            })
            .collect::<Result<_>>()?;
        let len = runs.iter().map(|r| r.0.len()).min().unwrap_or(0);
        let mut regimes_csv = String::from("t,E_mech_sub,E_mech_critical,E_mech_super\n");
        for i in (0..len).step_by(stride_for(len, None)) {
            let _ = writeln!(regimes_csv, "{},{},{},{}", num(runs[0].0[i]), num(runs[0].1[i]), num(runs[1].1[i]), num(runs[2].1[i]));
        }

        let mut text = String::new();
        let _ = writeln!(text, "{} evaluations, single-peaked grid: {}", report.samples.len(), report.unimodal);
        let _ = writeln!(text, "best R_N = {:.6e}, zeta = {:.6e}", report.best_resistance, report.best_zeta);
        for (name, s) in ["sub-critical", "critical", "super-critical"].iter().zip(&report.regimes) {
            let settle = s.settling_time.map_or("not reached".to_string(), |t| format!("{t:.6e}"));
            let _ = writeln!(text, "{name:>15}: R_N = {:.6e}, zeta = {:.6e}, settling time = {settle}", s.resistance, s.zeta);
        }
        Ok(Search { report, csv, regimes_csv, text })
    })
}

fn tuning_csv(t: &Tuning, omega_elec_after: f64, before: &NetworkParams, targets: (usize, usize)) -> String {
    let mut s = String::from("mechanical_mode,electric_mode,inductance_before,inductance_after,omega_mech,omega_elec_before,omega_elec_after,relative_mismatch\n");
    let mismatch = (omega_elec_after - t.omega_mech).abs() / t.omega_mech;
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{}",
        targets.0 + 1,
        targets.1 + 1,
        num(before.inductance),
        num(t.network.inductance),
        num(t.omega_mech),
        num(t.omega_elec_before),
        num(omega_elec_after),
        num(mismatch)
    );
    s
}

fn tuning_text(t: &Tuning, omega_elec_after: f64) -> String {
    format!(
        "L_N {:.10e} -> {:.10e} (factor {:.10e})\nomega_mech = {:.10e}, omega_elec {:.10e} -> {:.10e}, relative mismatch {:.3e}\n",
        t.network.inductance / t.factor,
        t.network.inductance,
        t.factor,
        t.omega_mech,
        t.omega_elec_before,
        omega_elec_after,
        (omega_elec_after - t.omega_mech).abs() / t.omega_mech
    )
}

/// Tuned system, its field modes and the tuning record.
fn tuned_modes(model: &Model) -> Result<(Option<(Tuning, f64)>, AssembledSystem, FieldModes)> {
    let tuning = model.tune()?;
    let (sys, modes) = model.modes(&model.tuned_network(&tuning))?;
    let record = match (tuning, model.cfg.tuning) {
        (Some(t), Some((_, e))) => {
            let after = *modes.electric.omega.get(e).ok_or_else(|| {
                Error::config("tuning.electric_mode", format!("only {} electric modes are retained", modes.electric.len()))
                    .in_stage("tuning")
            })?;
            Some((t, after))
        }
        _ => None,
    };
    Ok((record, sys, modes))
}

pub fn cmd_modes(cfg: &RunConfig, out: &Path) -> Result<String> {
    let model = Model::load(cfg)?;
    let (sys, modes) = model.modes(&cfg.network)?;
    let (csv, text) = modes_report(cfg, &modes);
    stage("output", || write_file(out, "modes.csv", &csv))?;
    Ok(format!("{} nodes, {} free DOFs\n{text}", model.mesh.n_nodes(), sys.n_free()))
}

pub fn cmd_tune(cfg: &RunConfig, out: &Path) -> Result<String> {
    let model = Model::load(cfg)?;
    let (record, _, _) = tuned_modes(&model)?;
    match (record, cfg.tuning) {
        (Some((t, after)), Some(targets)) => {
            stage("output", || write_file(out, "tuning.csv", &tuning_csv(&t, after, &cfg.network, targets)))?;
            Ok(tuning_text(&t, after))
        }
        _ => Err(Error::config("tuning.enabled", "tuning is disabled in this config")),
    }
}

pub fn cmd_coupling(cfg: &RunConfig, out: &Path) -> Result<String> {
    let model = Model::load(cfg)?;
    let (_, sys, modes) = tuned_modes(&model)?;
    let table = stage("coupling", || coupling_table(&modes.mechanical, &modes.electric, &sys))?;
    stage("output", || {
        write_file(out, "coupling.csv", &coupling_csv(&table.normalized))?;
        write_file(out, "coupling_raw.csv", &coupling_csv(&table.raw))
    })?;
    Ok(coupling_text(&table))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<String> {
    let model = Model::load(cfg)?;
    let (_, sys, modes) = tuned_modes(&model)?;
    let sim = simulate(&model, &sys, &modes.basis())?;
    stage("output", || write_file(out, "trajectory.csv", &sim.csv))?;
    Ok(sim.text)
}

pub fn cmd_optimize_r(cfg: &RunConfig, out: &Path) -> Result<String> {
    let model = Model::load(cfg)?;
    let tuning = model.tune()?;
    let network = model.tuned_network(&tuning);
    let (_, modes) = model.modes(&network)?;
    let search = search_resistance(&model, &network, &modes.basis())?;
    stage("output", || {
        write_file(out, "damping.csv", &search.csv)?;
        write_file(out, "damping_regimes.csv", &search.regimes_csv)
    })?;
    Ok(search.text)
}

/// Runs the patch test on the canonical irregular patch. `corrupt` flips
/// the sign convention of the element's edge parameters, which must fail.
pub fn cmd_patch_test(corrupt: bool) -> Result<(PatchReport, String)> {
    let mat = pure_bending_material();
    let report = stage("patch-test", || {
        if corrupt {
            patch_test_with(&mat, BendingVariant::ReversedMu)
        } else {
            patch_test(&mat)
        }
    })?;
    let mut text = String::new();
    for (name, err) in &report.states {
        let _ = writeln!(text, "{name:>24}: {err:.3e}");
    }
    let _ = writeln!(
        text,
        "constant-curvature error {:.3e}, rigid error {:.3e}: {}",
        report.max_error,
        report.rigid_error,
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok((report, text))
}

const PLOT_SCRIPT: &str = "\
# gnuplot script for the files of this directory: gnuplot plots.gp
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600

set output 'energies.png'
set xlabel 't'
plot 'trajectory.csv' using 1:(column('E_mech')) with lines title 'E_mech', \\
     '' using 1:(column('E_elec')) with lines title 'E_elec', \\
     '' using 1:(column('E_total')) with lines title 'E_total'

set output 'damping.png'
set logscale x
set xlabel 'R_N'
plot 'damping.csv' using 1:2 with linespoints title 'zeta'
unset logscale x

set output 'regimes.png'
set logscale y
set xlabel 't'
plot 'damping_regimes.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines
unset logscale y

set output 'coupling.png'
unset xlabel
plot 'coupling.csv' matrix rowheaders columnheaders with image notitle
";

/// Full run: modes, tuning, coupling, simulation and resistance search,
/// plus `summary.txt`, `manifest.txt` and a plotting script.
pub fn cmd_pipeline(cfg: &RunConfig, out: &Path) -> Result<String> {
    let start = Instant::now();
    let model = Model::load(cfg)?;
    let stats = model.mesh.statistics();
    let mut summary = String::new();
    let _ = writeln!(summary, "pem-plate {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(summary, "mesh: {} nodes, {} triangles, min angle {:.4} deg", stats.n_nodes, stats.n_triangles, stats.min_angle);

    let (sys0, modes0) = model.modes(&cfg.network)?;
    let _ = writeln!(summary, "free DOFs: {}\n", sys0.n_free());
    let (modes_csv, modes_text) = modes_report(cfg, &modes0);
    summary.push_str(&modes_text);

    let (record, sys, modes) = tuned_modes(&model)?;
    let mut files = vec![("modes.csv", modes_csv)];
    if let (Some((t, after)), Some(targets)) = (&record, cfg.tuning) {
        let _ = writeln!(summary, "\ntuning (mechanical {}, electric {})", targets.0 + 1, targets.1 + 1);
        summary.push_str(&tuning_text(t, *after));
        files.push(("tuning.csv", tuning_csv(t, *after, &cfg.network, targets)));
    }

    let table = stage("coupling", || coupling_table(&modes.mechanical, &modes.electric, &sys))?;
    summary.push('\n');
    summary.push_str(&coupling_text(&table));
    files.push(("coupling.csv", coupling_csv(&table.normalized)));
    files.push(("coupling_raw.csv", coupling_csv(&table.raw)));

    let basis = modes.basis();
    let sim = simulate(&model, &sys, &basis)?;
    let _ = writeln!(summary, "\nsimulation\n{}", sim.text.trim_end());
    files.push(("trajectory.csv", sim.csv));

    let network = record.as_ref().map_or(cfg.network, |(t, _)| t.network);
    let search = search_resistance(&model, &network, &basis)?;
    let _ = writeln!(summary, "\nresistance search\n{}", search.text.trim_end());
    files.push(("damping.csv", search.csv));
    files.push(("damping_regimes.csv", search.regimes_csv));
    log::debug!("best resistance {:.6e}", search.report.best_resistance);

    stage("output", || {
        let mut manifest = String::new();
        let _ = writeln!(manifest, "package = pem-plate {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(manifest, "config_sha256 = {:x}", Sha256::digest(cfg.source.as_bytes()));
        let _ = writeln!(manifest, "threads = {}", rayon::current_num_threads());
        let _ = writeln!(manifest, "float_format = {{:.16e}}");
        for (name, body) in &files {
            write_file(out, name, body)?;
            let _ = writeln!(manifest, "{name} = {:x}", Sha256::digest(body.as_bytes()));
        }
        write_file(out, "summary.txt", &summary)?;
        write_file(out, "plots.gp", PLOT_SCRIPT)?;
        write_file(out, "manifest.txt", &manifest)
    })?;
    Ok(format!("{summary}\nwrote {} ({:.2} s)\n", out.display(), start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_square_ratios() {
        let cfg = RunConfig::preset("paper-square").unwrap();
        let (plate, membrane) = analytic_catalog(&cfg, 8, 8).unwrap();
        assert_eq!(plate, vec![1.0, 2.5, 2.5, 4.0, 5.0, 5.0, 6.5, 6.5]);
        assert!((membrane[1] - 2.5f64.sqrt()).abs() < 1e-15);
        let demo = RunConfig::preset("clamped-demo").unwrap();
        assert!(analytic_catalog(&demo, 8, 8).is_none());
    }

    #[test]
    fn stride_caps_rows() {
        assert_eq!(stride_for(100, None), 1);
        assert_eq!(stride_for(4001, None), 3);
        assert_eq!(stride_for(4001, Some(7)), 7);
    }

    #[test]
    fn corrupted_patch_test_fails() {
        assert!(cmd_patch_test(false).unwrap().0.passed);
        assert!(!cmd_patch_test(true).unwrap().0.passed);
    }
}
