//! Searches the net resistance that maximizes the damping ratio of the
//! first mechanical mode of the tuned square plate and compares the
//! sub-critical, critical and super-critical regimes.
//!
//! cargo run --release --example resistance_search -- [n]

use pem_plate::assembly::{assemble, AssembledSystem, BoundaryCondition};
use pem_plate::dynamics::{optimize_resistance, SearchOptions};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, SquarePattern};
use pem_plate::modal::{reduce, tune_inductance, FieldModes};

fn main() -> pem_plate::Result<()> {
    env_logger::init();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let mesh = generate_structured_square(n, 1.0, SquarePattern::Crossed)?;
    let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded")?;
    let plate = PlateParams::benchmark();
    let build = |net: &NetworkParams| -> pem_plate::Result<AssembledSystem> {
        assemble(&mesh, &build_material(&plate, net)?, &bcs)
    };
    let tuned = tune_inductance(&NetworkParams::benchmark(), build, 0, 0)?.network;
    // the undamped modes do not depend on R_N, so one basis serves every run
    let basis = FieldModes::solve(&build(&tuned)?, 8, 8)?.basis();
    let reduced = |r: f64| reduce(&build(&tuned.with_resistance(r))?, &basis);

    let start = std::time::Instant::now();
    let report = optimize_resistance(reduced, 0, (1e-3, 10.0), &SearchOptions::default())?;
    println!("search took {:.2} s, {} evaluations", start.elapsed().as_secs_f64(), report.samples.len());
    println!("{:>14} {:>12} {:>14}", "R_N", "zeta", "settling");
    for s in &report.samples {
        println!("{:>14.6e} {:>12.6e} {:>14}", s.resistance, s.zeta, fmt_time(s.settling_time));
    }
    println!("\nbest R_N = {:.6e}, zeta = {:.6e}, single-peaked grid: {}", report.best_resistance, report.best_zeta, report.unimodal);
    for (name, s) in ["sub-critical", "critical", "super-critical"].iter().zip(&report.regimes) {
        println!("{name:>15}: R_N = {:.4e}, zeta = {:.4e}, settling = {}", s.resistance, s.zeta, fmt_time(s.settling_time));
    }
    Ok(())
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "n/a".to_string(), |t| format!("{t:.4}"))
}
