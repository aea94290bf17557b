//! Energy exchange between the first mechanical mode of the simply
//! supported square and the electric mode tuned onto it, with no
//! dissipation; then the same run started on the untuned second mode.
//!
//! cargo run --release --example beating -- [n]

use std::f64::consts::PI;

use pem_plate::assembly::{assemble, AssembledSystem, BoundaryCondition};
use pem_plate::dynamics::{integrate, InitialCondition};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, SquarePattern};
use pem_plate::modal::{reduce, tune_inductance, FieldModes};

fn main() -> pem_plate::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let mesh = generate_structured_square(n, 1.0, SquarePattern::Crossed)?;
    let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded")?;
    let build = |net: &NetworkParams| -> pem_plate::Result<AssembledSystem> {
        assemble(&mesh, &build_material(&PlateParams::benchmark(), net)?, &bcs)
    };
    let tuning = tune_inductance(&NetworkParams::benchmark(), build, 0, 0)?;
    println!("tuned L_N = {:.10} (factor {:.6})", tuning.network.inductance, tuning.factor);

    let sys = build(&tuning.network)?;
    let modes = FieldModes::solve(&sys, 8, 8)?;
    let rs = reduce(&sys, &modes.basis())?;
    // mechanical mode 0 is column 0, electric mode 0 is column 8
    let kappa = rs.k1[(8, 0)].abs();
    let t1 = 2.0 * PI / rs.omega[0];
    let beat = 2.0 * PI / kappa;
    println!("omega_1 = {:.6}, coupling = {:.6}, beat period = {:.4} ({:.1} T1)", rs.omega[0], kappa, beat, beat / t1);

    let ic = InitialCondition::unimodal(0, 1.0);
    let tf = 10.0 * beat;
    let coarse = integrate(&rs, &ic, tf, t1 / 100.0)?;
    let fine = integrate(&rs, &ic, tf, t1 / 200.0)?;
    let e = &coarse.energies;
    let min_ratio = e.mech.iter().fold(f64::INFINITY, |m, v| m.min(*v)) / e.mech[0];
    println!("tuned mode 1: min E_m/E_m(0) = {min_ratio:.5}");
    println!(
        "total energy drift: {:.3e} at T1/100, {:.3e} at T1/200 (ratio {:.1})",
        coarse.energy_drift(),
        fine.energy_drift(),
        coarse.energy_drift() / fine.energy_drift()
    );
    let cross = e.cross.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("largest cross-field energy term: {cross:.3e}");

    let second = integrate(&rs, &InitialCondition::unimodal(1, 1.0), tf, t1 / 100.0)?;
    let e2 = &second.energies;
    let min2 = e2.mech.iter().fold(f64::INFINITY, |m, v| m.min(*v)) / e2.mech[0];
    println!("untuned mode 2: min E_m/E_m(0) = {min2:.5}");

    println!("\n{:>10} {:>12} {:>12}", "t", "E_mech", "E_elec");
    let stride = coarse.len() / 40;
    for k in (0..coarse.len()).step_by(stride.max(1)) {
        println!("{:>10.4} {:>12.6} {:>12.6}", coarse.t[k], e.mech[k], e.elec[k]);
    }
    Ok(())
}
