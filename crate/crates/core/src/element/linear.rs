use super::{AreaCoords, TriangleGeometry};

/// Values and (constant) gradients of the 3-node linear triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEval {
    pub n: [f64; 3],
    pub dx: [f64; 3],
    pub dy: [f64; 3],
}

pub fn linear_shape_functions(geom: &TriangleGeometry, l: &AreaCoords) -> LinearEval {
    let (dx, dy) = geom.gradients();
    LinearEval { n: l.0, dx, dy }
}
