//! Element matrices of the decoupled fields built with exact polynomial
//! arithmetic in area coordinates.
//!
//! The bending interpolation is obtained from the nine expansion
//! polynomials alone: the shape functions are the combinations of
//! `P1..P9` whose nodal values and slopes are unit vectors, found by
//! inverting the 9×9 matrix of nodal functionals. Integrals use
//! `∫ L1^a L2^b L3^c dA = 2A a! b! c! / (a+b+c+2)!`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix3, SMatrix};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly(pub BTreeMap<[u32; 3], f64>);

impl Poly {
    pub fn term(coef: f64, e: [u32; 3]) -> Poly {
        let mut p = Poly::default();
        p.0.insert(e, coef);
        p
    }

    pub fn l(i: usize) -> Poly {
        let mut e = [0; 3];
        e[i] = 1;
        Poly::term(1.0, e)
    }

    pub fn axpy(&mut self, a: f64, x: &Poly) {
        for (e, c) in &x.0 {
            *self.0.entry(*e).or_insert(0.0) += a * c;
        }
    }

    pub fn scaled(&self, a: f64) -> Poly {
        let mut p = Poly::default();
        p.axpy(a, self);
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Poly::default();
        for (e1, c1) in &self.0 {
            for (e2, c2) in &other.0 {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]];
                *p.0.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        p
    }

    /// Partial derivative with the three coordinates taken as independent.
    pub fn diff(&self, i: usize) -> Poly {
        let mut p = Poly::default();
        for (e, c) in &self.0 {
            if e[i] > 0 {
                let mut d = *e;
                d[i] -= 1;
                *p.0.entry(d).or_insert(0.0) += c * e[i] as f64;
            }
        }
        p
    }

    /// Cartesian derivative given `dL_i/dx` (or `dL_i/dy`).
    pub fn cartesian(&self, grad: &[f64; 3]) -> Poly {
        let mut p = Poly::default();
        for (i, g) in grad.iter().enumerate() {
            p.axpy(*g, &self.diff(i));
        }
        p
    }

    pub fn eval(&self, l: [f64; 3]) -> f64 {
        self.0.iter().map(|(e, c)| c * l[0].powi(e[0] as i32) * l[1].powi(e[1] as i32) * l[2].powi(e[2] as i32)).sum()
    }

    pub fn integrate(&self, area: f64) -> f64 {
        let fact = |n: u32| (1..=n).fold(1.0, |f, k| f * k as f64);
        self.0.iter().map(|(e, c)| c * 2.0 * area * fact(e[0]) * fact(e[1]) * fact(e[2]) / fact(e[0] + e[1] + e[2] + 2)).sum()
    }
}

/// Geometry computed from scratch: `dL/dx`, `dL/dy`, area and `mu`.
pub struct Geometry {
    pub area: f64,
    pub gx: [f64; 3],
    pub gy: [f64; 3],
    pub mu: [f64; 3],
}

pub fn geometry(v: [[f64; 2]; 3]) -> Geometry {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let mut gx = [0.0; 3];
    let mut gy = [0.0; 3];
    let mut l2 = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        gx[i] = (v[j][1] - v[k][1]) / det;
        gy[i] = (v[k][0] - v[j][0]) / det;
        l2[i] = (v[j][0] - v[k][0]).powi(2) + (v[j][1] - v[k][1]).powi(2);
    }
    let mu = [(l2[2] - l2[1]) / l2[0], (l2[0] - l2[2]) / l2[1], (l2[1] - l2[0]) / l2[2]];
    Geometry { area: 0.5 * det, gx, gy, mu }
}

/// `P1..P9` with the bubble of `P7` using `mu3`, `P8` using `mu1` and
/// `P9` using `mu2`.
pub fn expansion(g: &Geometry) -> Vec<Poly> {
    let l = [Poly::l(0), Poly::l(1), Poly::l(2)];
    let l123 = l[0].mul(&l[1]).mul(&l[2]);
    let mut p: Vec<Poly> = l.to_vec();
    p.push(l[0].mul(&l[1]));
    p.push(l[1].mul(&l[2]));
    p.push(l[2].mul(&l[0]));
    for (a, b, c, mu) in [(0, 1, 2, g.mu[2]), (1, 2, 0, g.mu[0]), (2, 0, 1, g.mu[1])] {
        let mut bracket = l[a].scaled(3.0 * (1.0 - mu));
        bracket.axpy(-(1.0 + 3.0 * mu), &l[b]);
        bracket.axpy(1.0 + 3.0 * mu, &l[c]);
        let mut q = l[a].mul(&l[a]).mul(&l[b]);
        q.axpy(0.5, &l123.mul(&bracket));
        p.push(q);
    }
    p
}

/// Bending shape functions ordered `(w, dw/dx, dw/dy)` per vertex.
pub fn bending_shapes(g: &Geometry) -> Vec<Poly> {
    let p = expansion(g);
    let vertex = |i: usize| {
        let mut l = [0.0; 3];
        l[i] = 1.0;
        l
    };
    let mut d = SMatrix::<f64, 9, 9>::zeros();
    for (k, pk) in p.iter().enumerate() {
        let (px, py) = (pk.cartesian(&g.gx), pk.cartesian(&g.gy));
        for i in 0..3 {
            d[(3 * i, k)] = pk.eval(vertex(i));
            d[(3 * i + 1, k)] = px.eval(vertex(i));
            d[(3 * i + 2, k)] = py.eval(vertex(i));
        }
    }
    let coef = d.try_inverse().expect("nodal functionals are unisolvent");
    (0..9)
        .map(|dof| {
            let mut n = Poly::default();
            for (k, pk) in p.iter().enumerate() {
                n.axpy(coef[(k, dof)], pk);
            }
            n
        })
        .collect()
}

pub struct OracleParams {
    pub areal_mass: f64,
    pub rotary_mass: f64,
    pub rigidity: Matrix3<f64>,
    /// `C_N L_N`
    pub electric_mass: f64,
}

/// `(K2, K0)` in the 12-DOF element ordering `(w, θx, θy, α)` per vertex,
/// with a unit-coefficient gradient form on `α`.
pub fn element_matrices(v: [[f64; 2]; 3], prm: &OracleParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = geometry(v);
    let n = bending_shapes(&g);
    let nx: Vec<Poly> = n.iter().map(|p| p.cartesian(&g.gx)).collect();
    let ny: Vec<Poly> = n.iter().map(|p| p.cartesian(&g.gy)).collect();
    // (-w_xx, -w_yy, -2 w_xy)
    let kappa: Vec<[Poly; 3]> = (0..9)
        .map(|d| [nx[d].cartesian(&g.gx).scaled(-1.0), ny[d].cartesian(&g.gy).scaled(-1.0), nx[d].cartesian(&g.gy).scaled(-2.0)])
        .collect();
    let col = |d: usize| 4 * (d / 3) + d % 3;
    let mut k2 = DMatrix::zeros(12, 12);
    let mut k0 = DMatrix::zeros(12, 12);
    for a in 0..9 {
        for b in 0..9 {
            let mut mass = n[a].mul(&n[b]).scaled(prm.areal_mass);
            mass.axpy(prm.rotary_mass, &nx[a].mul(&nx[b]));
            mass.axpy(prm.rotary_mass, &ny[a].mul(&ny[b]));
            k2[(col(a), col(b))] = mass.integrate(g.area);
            let mut energy = Poly::default();
            for r in 0..3 {
                for s in 0..3 {
                    energy.axpy(prm.rigidity[(r, s)], &kappa[a][r].mul(&kappa[b][s]));
                }
            }
            k0[(col(a), col(b))] = energy.integrate(g.area);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let (ei, ej) = (4 * i + 3, 4 * j + 3);
            k2[(ei, ej)] = Poly::l(i).mul(&Poly::l(j)).integrate(g.area) * prm.electric_mass;
            k0[(ei, ej)] = (g.gx[i] * g.gx[j] + g.gy[i] * g.gy[j]) * g.area;
        }
    }
    (k2, k0)
}
