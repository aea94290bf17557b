//! Mechanical and electric spectra of the simply supported, grounded unit
//! square, normalized by the first frequency and compared with the Navier
//! plate and Dirichlet membrane values.
//!
//! cargo run --release --example square_modes -- [n]

use std::time::Instant;

use pem_plate::assembly::{assemble, BoundaryCondition};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, SquarePattern};
use pem_plate::modal::FieldModes;

fn main() -> pem_plate::Result<()> {
    env_logger::init();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let start = Instant::now();
    let mesh = generate_structured_square(n, 1.0, SquarePattern::Crossed)?;
    let mat = build_material(&PlateParams::benchmark(), &NetworkParams::benchmark())?;
    let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded")?;
    let sys = assemble(&mesh, &mat, &bcs)?;
    let modes = FieldModes::solve(&sys, 8, 8)?;

    let plate = [1.0, 2.5, 2.5, 4.0, 5.0, 5.0, 6.5, 6.5];
    let membrane: Vec<f64> = plate.iter().map(|r: &f64| r.sqrt()).collect();
    println!("{} nodes, {} free DOFs, {:.2} s", mesh.n_nodes(), sys.n_free(), start.elapsed().as_secs_f64());
    println!("{:>4} {:>12} {:>8} {:>8} | {:>12} {:>8} {:>8}", "k", "mech", "exact", "err %", "elec", "exact", "err %");
    let (m, e) = (modes.mechanical.normalized(), modes.electric.normalized());
    for k in 0..8 {
        println!(
            "{:>4} {:>12.6} {:>8.3} {:>8.4} | {:>12.6} {:>8.3} {:>8.4}",
            k + 1,
            m[k],
            plate[k],
            100.0 * (m[k] - plate[k]).abs() / plate[k],
            e[k],
            membrane[k],
            100.0 * (e[k] - membrane[k]).abs() / membrane[k]
        );
    }
    println!("omega_1 mech = {:.8}, elec = {:.8}", modes.mechanical.omega[0], modes.electric.omega[0]);
    Ok(())
}
