//! Loads the bundled L-shaped demo mesh (or a mesh file given on the
//! command line), clamps and grounds its boundary and prints the lowest
//! frequencies of both fields. The L shape is an illustrative geometry.
//!
//! cargo run --release --example l_shape_demo -- [mesh file]

use pem_plate::assembly::{assemble, BoundaryCondition};
use pem_plate::config::L_SHAPE_MESH;
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{load_mesh, parse_mesh};
use pem_plate::modal::FieldModes;

fn main() -> pem_plate::Result<()> {
    let mesh = match std::env::args().nth(1) {
        Some(path) => load_mesh(path)?,
        None => parse_mesh(L_SHAPE_MESH)?,
    };
    let stats = mesh.statistics();
    println!(
        "{} nodes, {} triangles, area {:.4}, min angle {:.2} deg",
        stats.n_nodes, stats.n_triangles, stats.total_area, stats.min_angle
    );
    for g in &mesh.edge_groups {
        println!("  group {:<10} {} nodes", g.name, g.nodes.len());
    }
    let bcs = BoundaryCondition::parse_list("boundary", "clamped+grounded")?;
    let sys = assemble(&mesh, &build_material(&PlateParams::benchmark(), &NetworkParams::benchmark())?, &bcs)?;
    let modes = FieldModes::solve(&sys, 6, 6)?;
    println!("{:>3} {:>14} {:>10} {:>14} {:>10}", "k", "mech omega", "ratio", "elec omega", "ratio");
    let (m, e) = (modes.mechanical.normalized(), modes.electric.normalized());
    for k in 0..6 {
        println!(
            "{:>3} {:>14.6} {:>10.5} {:>14.6} {:>10.5}",
            k + 1,
            modes.mechanical.omega[k],
            m[k],
            modes.electric.omega[k],
            e[k]
        );
    }
    Ok(())
}
