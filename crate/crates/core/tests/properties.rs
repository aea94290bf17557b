mod common;

use std::sync::OnceLock;

use common::{bcs, build, random_triangles, square, toy_system, TunedSquare};
use nalgebra::DMatrix;
use pem_plate::assembly::point_load_vector;
use pem_plate::dynamics::{integrate, InitialCondition};
use pem_plate::element::{specht_shape_functions, AreaCoords, TriangleGeometry};
use pem_plate::linalg::{csr_submatrix, csr_to_dense};
use pem_plate::material::{build_material, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, signed_area, SquarePattern};
use pem_plate::modal::{reduce, solve_field_modes, Field, ModeSet};
use proptest::prelude::*;

fn tuned() -> &'static (TunedSquare, ModeSet) {
    static T: OnceLock<(TunedSquare, ModeSet)> = OnceLock::new();
    T.get_or_init(|| {
        let t = TunedSquare::new(4, "simply_supported+grounded", 3);
        let b = t.modes.basis();
        (t, b)
    })
}

fn pattern() -> impl Strategy<Value = SquarePattern> {
    prop_oneof![Just(SquarePattern::Crossed), Just(SquarePattern::Diagonal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structured_meshes_are_valid(n in 1usize..10, side in 0.2f64..5.0, pat in pattern()) {
        let m = generate_structured_square(n, side, pat).unwrap();
        for t in &m.triangles {
            let [a, b, c] = t.node_ids;
            prop_assert!(signed_area(m.coords(a), m.coords(b), m.coords(c)) > 0.0);
        }
        let inc = m.edge_incidence();
        prop_assert!(inc.values().all(|v| v.len() == 1 || v.len() == 2));
        prop_assert_eq!(m.boundary_edges().len(), 4 * n);
        // refinement never changes the covered area
        let area = m.statistics().total_area;
        prop_assert!((area - side * side).abs() <= 1e-12 * side * side);
    }

    #[test]
    fn shape_functions_are_nodal(seed in any::<u64>()) {
        let v = random_triangles(seed, 1)[0];
        let geom = TriangleGeometry::new(v[0], v[1], v[2]);
        for j in 0..3 {
            let e = specht_shape_functions(&geom, &AreaCoords::vertex(j));
            for i in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((e.n[3 * i] - delta).abs() < 1e-12);
                prop_assert!((e.dx[3 * i + 1] - delta).abs() < 1e-12);
                prop_assert!((e.dy[3 * i + 2] - delta).abs() < 1e-12);
                prop_assert!(e.n[3 * i + 1].abs() < 1e-12 && e.n[3 * i + 2].abs() < 1e-12);
                prop_assert!(e.dx[3 * i].abs() < 1e-12 && e.dy[3 * i].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratics_are_reproduced(seed in any::<u64>(), c in prop::array::uniform6(-2.0f64..2.0), l in (0.05f64..0.9, 0.05f64..0.9)) {
        prop_assume!(l.0 + l.1 < 0.95);
        let v = random_triangles(seed, 1)[0];
        let geom = TriangleGeometry::new(v[0], v[1], v[2]);
        let w = |x: f64, y: f64| c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
        let wx = |x: f64, y: f64| c[1] + 2.0 * c[3] * x + c[4] * y;
        let wy = |x: f64, y: f64| c[2] + c[4] * x + 2.0 * c[5] * y;
        let mut q = [0.0; 9];
        for (i, p) in v.iter().enumerate() {
            q[3 * i] = w(p[0], p[1]);
            q[3 * i + 1] = wx(p[0], p[1]);
            q[3 * i + 2] = wy(p[0], p[1]);
        }
        let at = AreaCoords::from_two(l.0, l.1);
        let (x, y) = geom.point(&at);
        let e = specht_shape_functions(&geom, &at);
        let dot = |n: &[f64; 9]| n.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((dot(&e.n) - w(x, y)).abs() < 1e-11);
        prop_assert!((dot(&e.dxx) - 2.0 * c[3]).abs() < 1e-9);
        prop_assert!((dot(&e.dxy) - c[4]).abs() < 1e-9);
        prop_assert!((dot(&e.dyy) - 2.0 * c[5]).abs() < 1e-9);
    }

    #[test]
    fn material_rebuild_is_bit_identical(g in prop::array::uniform3(-0.5f64..0.5), l in 0.01f64..10.0, r in 0.0f64..5.0) {
        let plate = PlateParams::benchmark().with_coupling(g);
        let net = NetworkParams::benchmark().with_inductance(l).with_resistance(r);
        prop_assert_eq!(build_material(&plate, &net).unwrap(), build_material(&plate, &net).unwrap());
    }

    #[test]
    fn point_loads_are_linear(x in 0.01f64..0.99, y in 0.01f64..0.99, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let mesh = square(4);
        let sys = build(&mesh, &PlateParams::benchmark(), &NetworkParams::benchmark(), &bcs("simply_supported+grounded"));
        let pa = point_load_vector(&mesh, &sys.dof_map, x, y, a).unwrap();
        let pb = point_load_vector(&mesh, &sys.dof_map, x, y, b).unwrap();
        let pab = point_load_vector(&mesh, &sys.dof_map, x, y, a + b).unwrap();
        prop_assert!((pab - pa - pb).amax() <= 1e-14 * (a.abs() + b.abs()));
    }

    #[test]
    fn skew_coupling_for_any_coupling_row(g in prop::array::uniform3(-1.0f64..1.0)) {
        let mesh = square(2);
        let sys = build(&mesh, &PlateParams::benchmark().with_coupling(g), &NetworkParams::benchmark(), &bcs("free"));
        let (m, e) = (&sys.dof_map.mechanical, &sys.dof_map.electric);
        let me = csr_to_dense(&csr_submatrix(&sys.k1, m, e));
        let em = csr_to_dense(&csr_submatrix(&sys.k1, e, m));
        let scale = me.amax().max(1e-300);
        prop_assert!((&me + em.transpose()).amax() <= 1e-14 * scale);
        // lossless network: the whole first-order operator is skew
        let k1 = csr_to_dense(&sys.k1);
        prop_assert!((&k1 + k1.transpose()).amax() <= 1e-14 * scale);
    }

    #[test]
    fn trajectories_scale_linearly(s in 0.1f64..10.0, w in prop::array::uniform3(0.5f64..4.0), k in -1.0f64..1.0) {
        let k1 = DMatrix::from_row_slice(3, 3, &[0.2, k, 0.0, -k, 0.1, 0.3 * k, 0.0, -0.3 * k, 0.05]);
        let rs = toy_system(&w, k1, 2, 0.0);
        let ic = InitialCondition::State { z: nalgebra::dvector![1.0, -0.5, 0.2], zdot: nalgebra::dvector![0.0, 0.3, -1.0] };
        let a = integrate(&rs, &ic, 3.0, 0.01).unwrap();
        let b = integrate(&rs, &ic.scaled(s), 3.0, 0.01).unwrap();
        for (ea, eb) in a.energies.total.iter().zip(&b.energies.total) {
            prop_assert!((eb - s * s * ea).abs() <= 1e-12 * s * s * ea);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn normalized_spectrum_ignores_density(scale in 0.01f64..100.0) {
        let mesh = square(4);
        let kinds = bcs("clamped+grounded");
        let base = PlateParams::benchmark();
        let heavy = PlateParams { density: base.density * scale, ..base.clone() };
        let net = NetworkParams::benchmark();
        let a = solve_field_modes(&build(&mesh, &base, &net, &kinds), Field::Mechanical, 5).unwrap();
        let b = solve_field_modes(&build(&mesh, &heavy, &net, &kinds), Field::Mechanical, 5).unwrap();
        for (x, y) in a.normalized().iter().zip(b.normalized()) {
            prop_assert!((x - y).abs() <= 1e-10 * x);
        }
        prop_assert!((b.omega[0] * scale.sqrt() / a.omega[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dissipative_energy_never_grows(r in 1e-3f64..10.0) {
        let (t, basis) = tuned();
        let rs = reduce(&build(&t.mesh, &PlateParams::benchmark(), &t.network.with_resistance(r), &t.bcs), basis).unwrap();
        let traj = integrate(&rs, &InitialCondition::unimodal(0, 1.0), 10.0, rs.min_period() / 40.0).unwrap();
        let e = &traj.energies.total;
        prop_assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-9 * e[0]));
        prop_assert!(traj.energies.mech.iter().zip(e).all(|(m, tot)| *m <= tot * (1.0 + 1e-12)));
    }
}
