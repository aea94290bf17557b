mod common;

use common::{bcs, build, square};
use pem_plate::config::L_SHAPE_MESH;
use pem_plate::material::{NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, load_mesh, parse_mesh, SquarePattern};
use pem_plate::modal::{solve_field_modes, Field};
use pem_plate::Error;

#[test]
fn text_round_trip_is_exact() {
    for pat in [SquarePattern::Crossed, SquarePattern::Diagonal] {
        let m = generate_structured_square(5, 0.7, pat).unwrap();
        assert_eq!(parse_mesh(&m.to_text()).unwrap(), m);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.mesh");
    let m = square(3);
    std::fs::write(&path, m.to_text()).unwrap();
    assert_eq!(load_mesh(&path).unwrap(), m);
}

#[test]
fn bundled_l_shape_loads_and_solves() {
    let m = parse_mesh(L_SHAPE_MESH).unwrap();
    let st = m.statistics();
    assert_eq!((st.n_nodes, st.n_triangles), (241, 432));
    assert!((st.total_area - 0.75).abs() < 1e-12);
    for g in ["boundary", "outer", "reentrant"] {
        assert!(m.group(g).is_some(), "missing group {g}");
    }
    let sys = build(&m, &PlateParams::benchmark(), &NetworkParams::benchmark(), &bcs("clamped+grounded"));
    let modes = solve_field_modes(&sys, Field::Mechanical, 3).unwrap();
    assert!(modes.omega.windows(2).all(|w| w[0] <= w[1]) && modes.omega[0] > 0.0);
}

#[test]
fn comments_and_orientation_are_handled() {
    let text = "# unit triangle, clockwise\nnodes 3 triangles 1 groups 1\n0 0\n0 1 # top\n1 0\n0 1 2\ngroup edge\n0 1 2\n";
    let m = parse_mesh(text).unwrap();
    assert_eq!(m.triangles[0].node_ids, [0, 2, 1]);
}

fn parse_err(text: &str) -> Error {
    parse_mesh(text).unwrap_err()
}

#[test]
fn malformed_files_are_rejected() {
    assert!(matches!(parse_err(""), Error::Parse { .. }));
    assert!(matches!(parse_err("nodes x triangles 1 groups 0"), Error::Parse { line: 1, .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 0\n0 0\n1 0\n"), Error::Parse { .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 0\n0 0\n1 0\n0 nan\n0 1 2\n"), Error::Parse { line: 4, .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 0\n0 0\n1 0\n0 1\n0 1 5\n"), Error::DanglingNode { node: 5, .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 0\n0 0\n1 0\n0 1\n0 1 1\n"), Error::RepeatedNode { .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 0\n0 0\n1 0\n2 0\n0 1 2\n"), Error::ZeroArea { element: 0 }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 1\n0 0\n1 0\n0 1\n0 1 2\n"), Error::Parse { .. }));
    assert!(matches!(parse_err("nodes 3 triangles 1 groups 1\n0 0\n1 0\n0 1\n0 1 2\n4\n"), Error::Parse { .. }));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_mesh("/nonexistent/plate.mesh").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 1);
}
