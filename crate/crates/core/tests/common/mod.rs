#![allow(dead_code)]

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use oracle::OracleParams;
use pem_plate::assembly::{assemble, local_matrices, AssembledSystem, BoundaryCondition};
use pem_plate::element::{triangle_quadrature, TriangleGeometry};
use pem_plate::material::{build_material, isotropic_rigidity, NetworkParams, PlateParams};
use pem_plate::mesh::{generate_structured_square, Mesh, SquarePattern};
use pem_plate::modal::{reduce, tune_inductance, FieldModes, ModeClass, ModeSet, ReducedSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn square(n: usize) -> Mesh {
    generate_structured_square(n, 1.0, SquarePattern::Crossed).unwrap()
}

pub fn bcs(kinds: &str) -> Vec<BoundaryCondition> {
    BoundaryCondition::parse_list("boundary", kinds).unwrap()
}

pub fn build(mesh: &Mesh, plate: &PlateParams, net: &NetworkParams, bcs: &[BoundaryCondition]) -> AssembledSystem {
    assemble(mesh, &build_material(plate, net).unwrap(), bcs).unwrap()
}

/// Simply supported, grounded benchmark square with the first electric mode
/// tuned onto the first mechanical one.
pub struct TunedSquare {
    pub mesh: Mesh,
    pub bcs: Vec<BoundaryCondition>,
    pub network: NetworkParams,
    pub sys: AssembledSystem,
    pub modes: FieldModes,
}

impl TunedSquare {
    pub fn new(n: usize, kinds: &str, n_modes: usize) -> Self {
        let mesh = square(n);
        let bcs = bcs(kinds);
        let plate = PlateParams::benchmark();
        let network = tune_inductance(&NetworkParams::benchmark(), |net| Ok(build(&mesh, &plate, net, &bcs)), 0, 0)
            .unwrap()
            .network;
        let sys = build(&mesh, &plate, &network, &bcs);
        let modes = FieldModes::solve(&sys, n_modes, n_modes).unwrap();
        TunedSquare { mesh, bcs, network, sys, modes }
    }

    pub fn reduced(&self, resistance: f64, basis: &ModeSet) -> ReducedSystem {
        let sys = build(&self.mesh, &PlateParams::benchmark(), &self.network.with_resistance(resistance), &self.bcs);
        reduce(&sys, basis).unwrap()
    }

    /// Mechanical mode 1 and electric mode 1 only.
    pub fn pair_basis(&self) -> ModeSet {
        let b = self.modes.basis();
        b.select(&[0, self.modes.mechanical.len()])
    }
}

/// A reduced model whose matrices are affine in `R_N`:
/// `K(R) = K(0) + R (K(1) − K(0))`.
pub struct AffineSurrogate {
    pub base: ReducedSystem,
    pub dk1: DMatrix<f64>,
    pub dk0: DMatrix<f64>,
    pub inductance: f64,
}

impl AffineSurrogate {
    pub fn new(t: &TunedSquare, basis: &ModeSet) -> Self {
        let base = t.reduced(0.0, basis);
        let one = t.reduced(1.0, basis);
        AffineSurrogate { dk1: &one.k1 - &base.k1, dk0: &one.k0 - &base.k0, base, inductance: t.network.inductance }
    }

    pub fn at(&self, r: f64) -> ReducedSystem {
        let mut rs = self.base.clone();
        rs.k1 += &self.dk1 * r;
        rs.k0 += &self.dk0 * r;
        rs.rate_shift = r / self.inductance;
        rs
    }
}

/// Hand-built modal system with unit modal masses: `K2 = I`,
/// `K0 = diag(ω²)`, the given `K1`, and the first `n_mech` coordinates
/// counted as mechanical.
pub fn toy_system(omega: &[f64], k1: DMatrix<f64>, n_mech: usize, rate_shift: f64) -> ReducedSystem {
    let n = omega.len();
    let k0 = DMatrix::from_diagonal(&DVector::from_iterator(n, omega.iter().map(|w| w * w)));
    let mask = |mech: bool, m: &DMatrix<f64>| {
        DMatrix::from_fn(n, n, |i, j| if (i < n_mech) == mech && (j < n_mech) == mech { m[(i, j)] } else { 0.0 })
    };
    let eye = DMatrix::identity(n, n);
    ReducedSystem {
        mech_mass: mask(true, &eye),
        mech_stiffness: mask(true, &k0),
        elec_mass: mask(false, &eye),
        elec_stiffness: mask(false, &k0),
        cross_mass: DMatrix::zeros(n, n),
        cross_stiffness: DMatrix::zeros(n, n),
        k2: eye.clone(),
        k1,
        k0,
        f: DVector::zeros(n),
        basis: eye,
        omega: omega.to_vec(),
        class: (0..n).map(|i| if i < n_mech { ModeClass::Mechanical } else { ModeClass::Electric }).collect(),
        rate_shift,
        descriptor_scale: 1.0,
    }
}

/// Asymptotic damping ratio of mode `omega`: the slowest decay rate among
/// the eigenvalues of the first-order system, divided by `omega`.
pub fn eigen_zeta(rs: &ReducedSystem, omega: f64) -> f64 {
    let n = rs.dim();
    let lu = rs.k2.clone().lu();
    let a = lu.solve(&rs.k1).unwrap();
    let b = lu.solve(&rs.k0).unwrap();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    m.view_mut((n, 0), (n, n)).copy_from(&(-b));
    m.view_mut((n, n), (n, n)).copy_from(&(-a));
    let slowest = m.complex_eigenvalues().iter().map(|l| -l.re).fold(f64::INFINITY, f64::min);
    slowest / omega
}

/// Brute-force sweep of the eigenvalue damping ratio on a log grid with
/// ratio `1 + step`; returns `(R, zeta)` at the best grid point.
pub fn brute_force(s: &AffineSurrogate, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let omega = s.base.omega[0];
    let mut best = (lo, f64::NEG_INFINITY);
    let mut r = lo;
    while r <= hi {
        let z = eigen_zeta(&s.at(r), omega);
        if z > best.1 {
            best = (r, z);
        }
        r *= 1.0 + step;
    }
    best
}

pub fn max_abs(v: &DMatrix<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&(a - b)) / scale
    }
}

pub fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

/// Local extrema indices of a sampled trace (strict on one side).
pub fn extrema(v: &DVector<f64>) -> (Vec<usize>, Vec<usize>) {
    let mut mins = Vec::new();
    let mut maxs = Vec::new();
    for i in 1..v.len() - 1 {
        if v[i] < v[i - 1] && v[i] <= v[i + 1] {
            mins.push(i);
        }
        if v[i] > v[i - 1] && v[i] >= v[i + 1] {
            maxs.push(i);
        }
    }
    (mins, maxs)
}

fn min_angle(v: &[[f64; 2]; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            let (u, w) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
            let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
            cos.clamp(-1.0, 1.0).acos().to_degrees()
        })
        .fold(180.0, f64::min)
}

pub fn random_triangles(seed: u64, count: usize) -> Vec<[[f64; 2]; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let mut v = [[0.0f64; 2]; 3];
        for p in v.iter_mut() {
            *p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        }
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        if det < 0.0 {
            v.swap(1, 2);
        }
        if det.abs() > 0.2 && min_angle(&v) > 15.0 {
            out.push(v);
        }
    }
    out
}

/// Largest relative block error of the decoupled element matrices against
/// the exact-integration oracle on `count` random triangles.
pub fn oracle_error(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let quad = triangle_quadrature(8).unwrap();
    let mut worst: f64 = 0.0;
    for (t, v) in random_triangles(seed, count).into_iter().enumerate() {
        let plate = PlateParams {
            half_thickness: rng.gen_range(0.005..0.05),
            density: rng.gen_range(1.0..100.0),
            rotary_inertia: t % 2 == 1,
            bending_stiffness: isotropic_rigidity(rng.gen_range(0.5..2.0), rng.gen_range(0.1..0.45)),
            piezo_stiffness: isotropic_rigidity(rng.gen_range(0.0..0.5), 0.3),
            coupling: [0.0; 3],
            g_ee: rng.gen_range(0.0..0.5),
        };
        let net = NetworkParams { inductance: rng.gen_range(0.1..2.0), resistance: 0.0, capacitance: rng.gen_range(0.5..2.0), conductance: 0.0 };
        let mat = build_material(&plate, &net).unwrap();
        let local = local_matrices(&TriangleGeometry::new(v[0], v[1], v[2]), &mat, &quad).unwrap();
        let prm = OracleParams {
            areal_mass: plate.areal_mass(),
            rotary_mass: plate.rotary_mass(),
            rigidity: plate.bending_stiffness + plate.piezo_stiffness,
            electric_mass: (net.capacitance + plate.g_ee) * net.inductance,
        };
        let (k2, k0) = oracle::element_matrices(v, &prm);
        let to_dyn = |m: &nalgebra::SMatrix<f64, 12, 12>| DMatrix::from_fn(12, 12, |i, j| m[(i, j)]);
        let (l2, l0) = (to_dyn(&local.k2), to_dyn(&local.k0));
        // compare each field block on its own scale
        let mech: Vec<usize> = (0..12).filter(|d| d % 4 != 3).collect();
        let elec: Vec<usize> = (0..12).filter(|d| d % 4 == 3).collect();
        for (ours, exact) in [(&l2, &k2), (&l0, &k0)] {
            for idx in [&mech, &elec] {
                let a = ours.select_rows(idx.iter()).select_columns(idx.iter());
                let b = exact.select_rows(idx.iter()).select_columns(idx.iter());
                worst = worst.max(rel_diff(&a, &b));
            }
            let cross = ours.select_rows(mech.iter()).select_columns(elec.iter());
            assert_eq!(max_abs(&cross), 0.0, "decoupled fields must not interact");
        }
    }
    worst
}
