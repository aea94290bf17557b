//! Specht's 9-DOF non-conforming plate triangle.
//!
//! The transverse displacement is expanded on the nine area-coordinate
//! polynomials `P = [L1, L2, L3, L1 L2, L2 L3, L3 L1, q1, q2, q3]` where the
//! `q` are cubic terms enriched by a quartic bubble whose coefficients depend
//! on the side-length ratios `mu`. Those bubble coefficients are what make the
//! element pass the patch test on arbitrary triangles.
//!
//! Nodal DOFs are `(w, dw/dx, dw/dy)` at each corner.

use super::{AreaCoords, TriangleGeometry};

/// Selects the bubble coefficients. Only [`BendingVariant::Specht`] is a
/// convergent element; the others exist to exercise the patch test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BendingVariant {
    #[default]
    Specht,
    /// Specht with the sign of every `mu` flipped.
    ReversedMu,
    /// `mu = 0`: the original Bazeley–Cheung–Irons–Zienkiewicz cubic bubble.
    Bciz,
}

impl BendingVariant {
    fn mu_scale(self) -> f64 {
        match self {
            BendingVariant::Specht => 1.0,
            BendingVariant::ReversedMu => -1.0,
            BendingVariant::Bciz => 0.0,
        }
    }
}

/// Shape functions of the 9 bending DOFs `(w_i, θx_i, θy_i)` and their
/// Cartesian derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpechtEval {
    pub n: [f64; 9],
    pub dx: [f64; 9],
    pub dy: [f64; 9],
    pub dxx: [f64; 9],
    pub dyy: [f64; 9],
    pub dxy: [f64; 9],
}

#[derive(Clone, Copy)]
struct Term {
    coef: f64,
    exp: [i32; 3],
}

/// A polynomial in area coordinates with its first and second partials
/// (L1, L2, L3 treated as independent variables).
#[derive(Clone, Copy, Default)]
struct Jet {
    v: f64,
    g: [f64; 3],
    h: [[f64; 3]; 3],
}

impl Jet {
    fn from_terms(terms: &[Term], l: &[f64; 3]) -> Jet {
        let mut out = Jet::default();
        let pw = |x: f64, e: i32| if e <= 0 { 1.0 } else { x.powi(e) };
        for t in terms {
            let e = t.exp;
            out.v += t.coef * pw(l[0], e[0]) * pw(l[1], e[1]) * pw(l[2], e[2]);
            for m in 0..3 {
                if e[m] == 0 {
                    continue;
                }
                let mut d = t.coef * e[m] as f64;
                for r in 0..3 {
                    d *= pw(l[r], if r == m { e[r] - 1 } else { e[r] });
                }
                out.g[m] += d;
            }
            for m in 0..3 {
                for n in 0..3 {
                    let mut de = e;
                    let mut c = t.coef;
                    c *= de[m] as f64;
                    de[m] -= 1;
                    c *= de[n] as f64;
                    de[n] -= 1;
                    if c == 0.0 {
                        continue;
                    }
                    out.h[m][n] += c * pw(l[0], de[0]) * pw(l[1], de[1]) * pw(l[2], de[2]);
                }
            }
        }
        out
    }

    fn axpy(&mut self, a: f64, x: &Jet) {
        self.v += a * x.v;
        for m in 0..3 {
            self.g[m] += a * x.g[m];
            for n in 0..3 {
                self.h[m][n] += a * x.h[m][n];
            }
        }
    }
}

fn unit(i: usize) -> [i32; 3] {
    let mut e = [0; 3];
    e[i] = 1;
    e
}

fn p_jets(geom: &TriangleGeometry, l: &AreaCoords, variant: BendingVariant) -> [Jet; 9] {
    let mut p = [Jet::default(); 9];
    let s = variant.mu_scale();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        p[a] = Jet::from_terms(&[Term { coef: 1.0, exp: unit(a) }], &l.0);
        let mut ab = unit(a);
        ab[b] += 1;
        p[a + 3] = Jet::from_terms(&[Term { coef: 1.0, exp: ab }], &l.0);

        // La^2 Lb + 1/2 La Lb Lc (3(1-mu) La - (1+3mu) Lb + (1+3mu) Lc), mu = mu_c
        let mu = s * geom.mu[c];
        let bump = |k: usize| {
            let mut e = [1; 3];
            e[k] += 1;
            e
        };
        let mut aab = [0; 3];
        aab[a] = 2;
        aab[b] = 1;
        let terms = [
            Term { coef: 1.0, exp: aab },
            Term { coef: 1.5 * (1.0 - mu), exp: bump(a) },
            Term { coef: -0.5 * (1.0 + 3.0 * mu), exp: bump(b) },
            Term { coef: 0.5 * (1.0 + 3.0 * mu), exp: bump(c) },
        ];
        p[a + 6] = Jet::from_terms(&terms, &l.0);
    }
    p
}

/// The nine expansion polynomials at `l`.
pub fn specht_p_vector(geom: &TriangleGeometry, l: &AreaCoords) -> [f64; 9] {
    let jets = p_jets(geom, l, BendingVariant::Specht);
    let mut out = [0.0; 9];
    for (o, j) in out.iter_mut().zip(jets.iter()) {
        *o = j.v;
    }
    out
}

/// Shape-function jets per DOF in area coordinates, ordered (w, θx, θy) per node.
fn shape_jets(geom: &TriangleGeometry, l: &AreaCoords, variant: BendingVariant) -> [Jet; 9] {
    let p = p_jets(geom, l, variant);
    let mut out = [Jet::default(); 9];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // value: P_i - P_{i+3} + P_{k+3} + 2 (P_{i+6} - P_{k+6})
        let w = &mut out[3 * i];
        w.axpy(1.0, &p[i]);
        w.axpy(-1.0, &p[i + 3]);
        w.axpy(1.0, &p[k + 3]);
        w.axpy(2.0, &p[i + 6]);
        w.axpy(-2.0, &p[k + 6]);
        // The b-row interpolates dw/dy and the c-row -dw/dx; they are
        // reordered into x then y slopes here.
        let mut c_row = Jet::default();
        c_row.axpy(-geom.c[j], &p[k + 6]);
        c_row.axpy(geom.c[j], &p[k + 3]);
        c_row.axpy(-geom.c[k], &p[i + 6]);
        let mut b_row = Jet::default();
        b_row.axpy(-geom.b[j], &p[k + 6]);
        b_row.axpy(geom.b[j], &p[k + 3]);
        b_row.axpy(-geom.b[k], &p[i + 6]);
        out[3 * i + 1].axpy(-1.0, &c_row);
        out[3 * i + 2] = b_row;
    }
    out
}

fn cartesian(geom: &TriangleGeometry, jets: &[Jet; 9]) -> SpechtEval {
    let (gx, gy) = geom.gradients();
    let mut e = SpechtEval { n: [0.0; 9], dx: [0.0; 9], dy: [0.0; 9], dxx: [0.0; 9], dyy: [0.0; 9], dxy: [0.0; 9] };
    for (d, j) in jets.iter().enumerate() {
        e.n[d] = j.v;
        for m in 0..3 {
            e.dx[d] += j.g[m] * gx[m];
            e.dy[d] += j.g[m] * gy[m];
            for n in 0..3 {
                e.dxx[d] += j.h[m][n] * gx[m] * gx[n];
                e.dyy[d] += j.h[m][n] * gy[m] * gy[n];
                e.dxy[d] += j.h[m][n] * gx[m] * gy[n];
            }
        }
    }
    e
}

/// Full evaluation (values, slopes, curvatures) of the bending shape functions.
pub fn specht_shape_functions(geom: &TriangleGeometry, l: &AreaCoords) -> SpechtEval {
    evaluate(geom, l, BendingVariant::Specht)
}

/// Second Cartesian derivatives `(d2N/dx2, d2N/dy2, d2N/dxdy)` per DOF.
pub fn specht_second_derivatives(geom: &TriangleGeometry, l: &AreaCoords) -> ([f64; 9], [f64; 9], [f64; 9]) {
    let e = specht_shape_functions(geom, l);
    (e.dxx, e.dyy, e.dxy)
}

pub(crate) fn evaluate(geom: &TriangleGeometry, l: &AreaCoords, variant: BendingVariant) -> SpechtEval {
    cartesian(geom, &shape_jets(geom, l, variant))
}
