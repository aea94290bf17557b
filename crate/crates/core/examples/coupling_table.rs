//! Electric/mechanical modal coupling of the tuned square plate for the
//! isotropic coupling (g_me1 = g_me2) and for coupling in x only.
//!
//! cargo run --release --example coupling_table -- [n]

use pem_plate::assembly::{assemble, BoundaryCondition};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, SquarePattern};
use pem_plate::modal::{coupling_table, FieldModes};

fn main() -> pem_plate::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let mesh = generate_structured_square(n, 1.0, SquarePattern::Crossed)?;
    let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded")?;
    for coupling in [[0.1, 0.1, 0.0], [0.1, 0.0, 0.0]] {
        let plate = PlateParams::benchmark().with_coupling(coupling);
        let sys = assemble(&mesh, &build_material(&plate, &NetworkParams::benchmark())?, &bcs)?;
        let modes = FieldModes::solve(&sys, 8, 8)?;
        let table = coupling_table(&modes.mechanical, &modes.electric, &sys)?;
        println!("g_me = {coupling:?}, rows electric modes, columns mechanical modes");
        for i in 0..8 {
            let row: Vec<String> = (0..8).map(|j| format!("{:6.3}", table.normalized[(i, j)])).collect();
            println!("  e{} {}", i + 1, row.join(" "));
        }
        println!();
    }
    Ok(())
}
