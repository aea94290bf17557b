//! Clamped, grounded square with the first electric mode tuned onto the
//! first mechanical one, struck by a transverse impulse at the centre and
//! near a corner. Prints how the impulse spreads over the modes and how
//! much of the mechanical energy the network takes over.
//!
//! cargo run --release --example impulse -- [n]

use pem_plate::assembly::{assemble, AssembledSystem, BoundaryCondition};
use pem_plate::dynamics::{impulse_ic, integrate, recover_field, InitialCondition};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, SquarePattern};
use pem_plate::modal::{reduce, tune_inductance, FieldModes};

fn main() -> pem_plate::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let mesh = generate_structured_square(n, 1.0, SquarePattern::Crossed)?;
    let bcs = BoundaryCondition::parse_list("boundary", "clamped+grounded")?;
    let build = |net: &NetworkParams| -> pem_plate::Result<AssembledSystem> {
        assemble(&mesh, &build_material(&PlateParams::benchmark(), net)?, &bcs)
    };
    let tuned = tune_inductance(&NetworkParams::benchmark(), build, 0, 0)?.network;
    let sys = build(&tuned)?;
    let rs = reduce(&sys, &FieldModes::solve(&sys, 8, 8)?.basis())?;
    let t1 = 2.0 * std::f64::consts::PI / rs.omega[0];

    for (name, point) in [("centre", (0.5, 0.5)), ("corner", (0.2, 0.15))] {
        let ic = impulse_ic(&mesh, &sys, &rs, point, 1.0)?;
        let InitialCondition::State { zdot, .. } = &ic else { unreachable!() };
        let total: f64 = zdot.iter().map(|v| v * v).sum();
        let shares: Vec<String> = (0..8).map(|k| format!("{:.3}", zdot[k] * zdot[k] / total)).collect();
        println!("{name} impulse at {point:?}");
        println!("  mechanical modal energy shares: {}", shares.join(" "));

        let traj = integrate(&rs, &ic, 40.0 * t1, rs.min_period() / 50.0)?;
        let e = &traj.energies;
        let peak_elec = e.elec.iter().cloned().fold(0.0, f64::max);
        println!("  peak E_elec / E_total(0) = {:.4}, drift {:.2e}", peak_elec / e.total[0], traj.energy_drift());

        let snap = recover_field(&sys, &rs, &traj, 5.0 * t1)?;
        let w_max = snap.nodal.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
        let a_max = snap.nodal.iter().map(|v| v[3].abs()).fold(0.0, f64::max);
        println!("  at t = 5 T1: max |w| = {w_max:.4e}, max |alpha| = {a_max:.4e}");
    }
    Ok(())
}
