//! Element-level kinematics: triangle geometry in area coordinates, the
//! 9-DOF non-conforming bending triangle, the 3-node linear triangle and
//! symmetric quadrature rules.

mod linear;
mod quadrature;
mod specht;

pub use linear::{linear_shape_functions, LinearEval};
pub use quadrature::{triangle_quadrature, QuadRule};
pub(crate) use specht::evaluate;
pub use specht::{
    specht_p_vector, specht_second_derivatives, specht_shape_functions, BendingVariant, SpechtEval,
};

/// Barycentric weights `(L1, L2, L3)` of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaCoords(pub [f64; 3]);

impl AreaCoords {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        AreaCoords([l1, l2, l3])
    }

    /// Completes `(L1, L2)` with `L3 = 1 - L1 - L2`.
    pub fn from_two(l1: f64, l2: f64) -> Self {
        AreaCoords([l1, l2, 1.0 - l1 - l2])
    }

    pub const CENTROID: AreaCoords = AreaCoords([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);

    pub fn vertex(i: usize) -> Self {
        let mut l = [0.0; 3];
        l[i] = 1.0;
        AreaCoords(l)
    }
}

/// Straight-edged triangle with the cyclic quantities used by the shape
/// functions. Vertex `i` is opposite side `l[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub vertices: [[f64; 2]; 3],
    pub side_lengths: [f64; 3],
    /// Signed area, positive for counterclockwise vertices.
    pub area: f64,
    /// `b[i] = y[j] - y[k]`
    pub b: [f64; 3],
    /// `c[i] = x[k] - x[j]`
    pub c: [f64; 3],
    pub mu: [f64; 3],
}

impl TriangleGeometry {
    pub fn new(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> Self {
        let v = [p1, p2, p3];
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        let mut l2 = [0.0; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            b[i] = v[j][1] - v[k][1];
            c[i] = v[k][0] - v[j][0];
            l2[i] = b[i] * b[i] + c[i] * c[i];
        }
        let area = 0.5 * (b[0] * c[1] - b[1] * c[0]);
        let mu = [
            (l2[2] - l2[1]) / l2[0],
            (l2[0] - l2[2]) / l2[1],
            (l2[1] - l2[0]) / l2[2],
        ];
        TriangleGeometry {
            vertices: v,
            side_lengths: [l2[0].sqrt(), l2[1].sqrt(), l2[2].sqrt()],
            area,
            b,
            c,
            mu,
        }
    }

    /// Constant Cartesian gradients of the area coordinates:
    /// `dL_i/dx = b_i / 2A`, `dL_i/dy = c_i / 2A`.
    pub fn gradients(&self) -> ([f64; 3], [f64; 3]) {
        let inv = 0.5 / self.area;
        (
            [self.b[0] * inv, self.b[1] * inv, self.b[2] * inv],
            [self.c[0] * inv, self.c[1] * inv, self.c[2] * inv],
        )
    }

    pub fn area_coords(&self, x: f64, y: f64) -> AreaCoords {
        let v = &self.vertices;
        let mut l = [0.0; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let a = v[j][0] * v[k][1] - v[k][0] * v[j][1];
            l[i] = (a + self.b[i] * x + self.c[i] * y) / (2.0 * self.area);
        }
        AreaCoords(l)
    }

    pub fn point(&self, l: &AreaCoords) -> (f64, f64) {
        let v = &self.vertices;
        (
            l.0[0] * v[0][0] + l.0[1] * v[1][0] + l.0[2] * v[2][0],
            l.0[0] * v[0][1] + l.0[1] * v[1][1] + l.0[2] * v[2][1],
        )
    }

    pub fn diameter(&self) -> f64 {
        self.side_lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// Same triangle with vertices relabelled `(2, 3, 1)`.
    pub fn rotated(&self) -> Self {
        TriangleGeometry::new(self.vertices[1], self.vertices[2], self.vertices[0])
    }
}
