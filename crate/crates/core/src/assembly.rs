//! Element matrices, global assembly and Dirichlet elimination.
//!
//! Local DOF order is node-major `(w, θx, θy, α)` for the three vertices.
//! The global system is written `K2 q'' + K1 q' + K0 q = F` with `K2`
//! positive definite. The electric unknown stored in `q` is
//! `a = sqrt(L_N) α` (see [`MaterialModel::descriptor_scale`]).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::element::{
    evaluate, linear_shape_functions, triangle_quadrature, AreaCoords, BendingVariant, QuadRule,
    TriangleGeometry,
};
use crate::error::{Error, Result};
use crate::material::{build_material, MaterialModel, NetworkParams, PlateParams};
use crate::mesh::{Mesh, Symmetry};

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Vec12 = SVector<f64, 12>;
type Mat2x12 = SMatrix<f64, 2, 12>;
type Mat5x12 = SMatrix<f64, 5, 12>;

pub const DOFS_PER_NODE: usize = 4;

/// Nodal DOF families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dof {
    W = 0,
    ThetaX = 1,
    ThetaY = 2,
    Alpha = 3,
}

impl Dof {
    pub const ALL: [Dof; 4] = [Dof::W, Dof::ThetaX, Dof::ThetaY, Dof::Alpha];

    pub fn is_mechanical(self) -> bool {
        self != Dof::Alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// `w = 0`
    SimplySupported,
    /// `w = θx = θy = 0`
    Clamped,
    /// `α = 0`
    Grounded,
    /// Explicitly unconstrained.
    Free,
}

impl BcKind {
    pub fn dofs(self) -> &'static [Dof] {
        match self {
            BcKind::SimplySupported => &[Dof::W],
            BcKind::Clamped => &[Dof::W, Dof::ThetaX, Dof::ThetaY],
            BcKind::Grounded => &[Dof::Alpha],
            BcKind::Free => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BcKind::SimplySupported => "simply_supported",
            BcKind::Clamped => "clamped",
            BcKind::Grounded => "grounded",
            BcKind::Free => "free",
        }
    }
}

impl std::str::FromStr for BcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "simply_supported" | "ss" => Ok(BcKind::SimplySupported),
            "clamped" => Ok(BcKind::Clamped),
            "grounded" => Ok(BcKind::Grounded),
            "free" => Ok(BcKind::Free),
            other => Err(Error::invalid(format!("unknown boundary condition kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryCondition {
    pub group: String,
    pub kind: BcKind,
}

impl BoundaryCondition {
    pub fn new(group: impl Into<String>, kind: BcKind) -> Self {
        BoundaryCondition { group: group.into(), kind }
    }

    /// Expands `"clamped+grounded"` into one condition per kind.
    pub fn parse_list(group: &str, kinds: &str) -> Result<Vec<BoundaryCondition>> {
        kinds.split('+').map(|k| Ok(BoundaryCondition::new(group, k.parse()?))).collect()
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.kind.name())
    }
}

/// Correspondence between nodal DOFs and free equation numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// `None` for constrained DOFs.
    pub node_dofs: Vec<[Option<usize>; 4]>,
    pub n_free: usize,
    pub constrained: Vec<(usize, Dof)>,
    /// Free equation numbers of `(w, θx, θy)` DOFs, ascending.
    pub mechanical: Vec<usize>,
    /// Free equation numbers of `α` DOFs, ascending.
    pub electric: Vec<usize>,
    /// Node and DOF family of each free equation.
    pub owner: Vec<(usize, Dof)>,
}

impl DofMap {
    pub fn build(mesh: &Mesh, bcs: &[BoundaryCondition]) -> Result<Self> {
        let n = mesh.n_nodes();
        let mut fixed: BTreeMap<(usize, Dof), ()> = BTreeMap::new();
        let mut free_decl: BTreeMap<usize, &BoundaryCondition> = BTreeMap::new();
        for bc in bcs {
            let group = mesh.group(&bc.group).ok_or_else(|| Error::UnknownGroup(bc.group.clone()))?;
            for &node in &group.nodes {
                if bc.kind == BcKind::Free {
                    free_decl.insert(node, bc);
                }
                for &d in bc.kind.dofs() {
                    fixed.insert((node, d), ());
                }
            }
        }
        for (&node, bc) in &free_decl {
            if let Some(((_, d), _)) = fixed.range((node, Dof::W)..=(node, Dof::Alpha)).next() {
                return Err(Error::ConflictingConstraint {
                    node,
                    message: format!("declared free by '{}' but {:?} is constrained", bc.group, d),
                });
            }
        }
        let mut node_dofs = vec![[None; 4]; n];
        let mut owner = Vec::new();
        let (mut mechanical, mut electric) = (Vec::new(), Vec::new());
        for (node, slots) in node_dofs.iter_mut().enumerate() {
            for d in Dof::ALL {
                if !fixed.contains_key(&(node, d)) {
                    let k = owner.len();
                    slots[d as usize] = Some(k);
                    owner.push((node, d));
                    if d.is_mechanical() {
                        mechanical.push(k);
                    } else {
                        electric.push(k);
                    }
                }
            }
        }
        Ok(DofMap {
            node_dofs,
            n_free: owner.len(),
            constrained: fixed.into_keys().collect(),
            mechanical,
            electric,
            owner,
        })
    }

    pub fn index(&self, node: usize, dof: Dof) -> Option<usize> {
        self.node_dofs[node][dof as usize]
    }

    /// Free equation numbers of the 12 local DOFs of a triangle.
    pub fn element_dofs(&self, nodes: [usize; 3]) -> [Option<usize>; 12] {
        let mut out = [None; 12];
        for (a, &node) in nodes.iter().enumerate() {
            for d in 0..4 {
                out[4 * a + d] = self.node_dofs[node][d];
            }
        }
        out
    }

    /// Nodal `(w, θx, θy, a)` values from a free-DOF vector; constrained
    /// entries are zero.
    pub fn expand(&self, q: &DVector<f64>) -> Vec<[f64; 4]> {
        self.node_dofs
            .iter()
            .map(|slots| {
                let mut v = [0.0; 4];
                for d in 0..4 {
                    if let Some(k) = slots[d] {
                        v[d] = q[k];
                    }
                }
                v
            })
            .collect()
    }
}

/// Signed permutation of free DOFs induced by a mesh symmetry:
/// `(S q)[k] = sign[k] * q[source[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofSymmetry {
    pub kind: Symmetry,
    pub source: Vec<usize>,
    pub sign: Vec<f64>,
}

impl DofSymmetry {
    /// Lifts a node map to DOFs: slopes follow the chain rule of the
    /// isometry. `None` if a free DOF maps onto a constrained one.
    pub fn from_node_map(kind: Symmetry, map: &[usize], dofs: &DofMap) -> Option<Self> {
        let mut source = Vec::with_capacity(dofs.n_free);
        let mut sign = Vec::with_capacity(dofs.n_free);
        for &(node, d) in &dofs.owner {
            let (sd, sg) = match (kind, d) {
                (Symmetry::MirrorX, Dof::ThetaX) | (Symmetry::MirrorY, Dof::ThetaY) => (d, -1.0),
                (Symmetry::Transpose, Dof::ThetaX) => (Dof::ThetaY, 1.0),
                (Symmetry::Transpose, Dof::ThetaY) => (Dof::ThetaX, 1.0),
                _ => (d, 1.0),
            };
            source.push(dofs.index(map[node], sd)?);
            sign.push(sg);
        }
        Some(DofSymmetry { kind, source, sign })
    }

    pub fn apply(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.source.len(), |k, _| self.sign[k] * q[self.source[k]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrices {
    pub k2: Mat12,
    pub k1: Mat12,
    pub k0: Mat12,
    pub f: Vec12,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    pub quadrature_degree: usize,
    pub variant: BendingVariant,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { quadrature_degree: 8, variant: BendingVariant::Specht }
    }
}

/// Shape-function rows at one point: `N` (2×12), its first derivatives and
/// the generalized strain operator `N_ε` (5×12).
struct PointRows {
    n: Mat2x12,
    n1: Mat2x12,
    n2: Mat2x12,
    neps: Mat5x12,
}

fn point_rows(geom: &TriangleGeometry, l: &AreaCoords, mat: &MaterialModel, variant: BendingVariant) -> PointRows {
    let s = evaluate(geom, l, variant);
    let lin = linear_shape_functions(geom, l);
    let mut n = Mat2x12::zeros();
    let mut n1 = Mat2x12::zeros();
    let mut n2 = Mat2x12::zeros();
    let mut n11 = Mat2x12::zeros();
    let mut n22 = Mat2x12::zeros();
    let mut n12 = Mat2x12::zeros();
    for a in 0..3 {
        for d in 0..3 {
            let (col, k) = (4 * a + d, 3 * a + d);
            n[(0, col)] = s.n[k];
            n1[(0, col)] = s.dx[k];
            n2[(0, col)] = s.dy[k];
            n11[(0, col)] = s.dxx[k];
            n22[(0, col)] = s.dyy[k];
            n12[(0, col)] = s.dxy[k];
        }
        let col = 4 * a + 3;
        n[(1, col)] = lin.n[a];
        n1[(1, col)] = lin.dx[a];
        n2[(1, col)] = lin.dy[a];
    }
    let h = &mat.h;
    let neps = h[0] * n + h[1] * n1 + h[2] * n2 + h[3] * n11 + h[4] * n22 + h[5] * n12;
    PointRows { n, n1, n2, neps }
}

pub fn local_matrices(geom: &TriangleGeometry, mat: &MaterialModel, quad: &QuadRule) -> Result<LocalMatrices> {
    local_matrices_with(geom, mat, quad, BendingVariant::Specht)
}

/// Element matrices in standard form (row = test DOF):
///
/// ```text
/// K2 = -<G N, N> - <GB1 N,1, N,1> - <GB2 N,2, N,2>
/// K1 = -<S N, N> - <V N_ε, N> + <C N, N_ε>
/// K0 = -<T N, N> + <E N_ε, N_ε> + <R N, N_ε>
/// ```
///
/// followed by the change of electric unknown `a = sqrt(L_N) α`.
pub fn local_matrices_with(
    geom: &TriangleGeometry,
    mat: &MaterialModel,
    quad: &QuadRule,
    variant: BendingVariant,
) -> Result<LocalMatrices> {
    if !(geom.area > 0.0) {
        return Err(Error::InvalidElement { element: usize::MAX, message: format!("area {} is not positive", geom.area) });
    }
    let mut k2 = Mat12::zeros();
    let mut k1 = Mat12::zeros();
    let mut k0 = Mat12::zeros();
    for (l, w) in quad.iter() {
        let p = point_rows(geom, l, mat, variant);
        let wa = w * geom.area;
        k2 -= (p.n.transpose() * mat.g * p.n + p.n1.transpose() * mat.gb1 * p.n1 + p.n2.transpose() * mat.gb2 * p.n2) * wa;
        k1 += (-p.n.transpose() * mat.s * p.n - p.n.transpose() * mat.v * p.neps + p.neps.transpose() * mat.c * p.n) * wa;
        k0 += (-p.n.transpose() * mat.t * p.n + p.neps.transpose() * mat.e * p.neps + p.neps.transpose() * mat.r * p.n) * wa;
    }
    let s = mat.descriptor_scale();
    for k in [&mut k2, &mut k1, &mut k0] {
        for a in 0..3 {
            let e = 4 * a + 3;
            for j in 0..12 {
                k[(e, j)] *= s;
                k[(j, e)] /= s;
            }
        }
    }
    Ok(LocalMatrices { k2, k1, k0, f: Vec12::zeros() })
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k2: CsrMatrix<f64>,
    pub k1: CsrMatrix<f64>,
    pub k0: CsrMatrix<f64>,
    pub f: DVector<f64>,
    pub dof_map: DofMap,
    /// Block-diagonal stiffness used for the energy partition: bending
    /// stiffness on mechanical DOFs, the electric gradient form on `a`.
    pub energy_stiffness: CsrMatrix<f64>,
    /// `R_N / L_N`: the electric rate entering the stored electric energy is
    /// `a' + (R_N / L_N) a`.
    pub rate_shift: f64,
    pub descriptor_scale: f64,
    /// Mesh symmetries compatible with the boundary conditions.
    pub symmetries: Vec<DofSymmetry>,
}

impl AssembledSystem {
    pub fn n_free(&self) -> usize {
        self.dof_map.n_free
    }

    pub fn dense(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        use crate::linalg::csr_to_dense;
        (csr_to_dense(&self.k2), csr_to_dense(&self.k1), csr_to_dense(&self.k0))
    }

    /// Adds a transverse point force at `(x, y)` to `F`.
    pub fn add_point_force(&mut self, mesh: &Mesh, x: f64, y: f64, magnitude: f64) -> Result<()> {
        let p = point_load_vector(mesh, &self.dof_map, x, y, magnitude)?;
        self.f += p;
        Ok(())
    }
}

/// Consistent nodal vector of a transverse point force: the `w`
/// interpolation row of the containing element times `magnitude`.
pub fn point_load_vector(mesh: &Mesh, dofs: &DofMap, x: f64, y: f64, magnitude: f64) -> Result<DVector<f64>> {
    let (e, l) = mesh
        .locate(x, y)
        .ok_or_else(|| Error::invalid(format!("point ({x}, {y}) lies outside the mesh")))?;
    let tri = mesh.triangles[e].node_ids;
    let s = evaluate(&mesh.geometry(e), &l, BendingVariant::Specht);
    let mut p = DVector::zeros(dofs.n_free);
    for (a, &node) in tri.iter().enumerate() {
        for (d, dof) in [Dof::W, Dof::ThetaX, Dof::ThetaY].into_iter().enumerate() {
            if let Some(k) = dofs.index(node, dof) {
                p[k] += magnitude * s.n[3 * a + d];
            }
        }
    }
    Ok(p)
}

pub fn assemble(mesh: &Mesh, mat: &MaterialModel, bcs: &[BoundaryCondition]) -> Result<AssembledSystem> {
    assemble_with(mesh, mat, bcs, &AssemblyOptions::default())
}

pub fn assemble_with(
    mesh: &Mesh,
    mat: &MaterialModel,
    bcs: &[BoundaryCondition],
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    if opts.quadrature_degree < 8 {
        return Err(Error::invalid(format!(
            "quadrature degree {} is below the exact degree 8",
            opts.quadrature_degree
        )));
    }
    let quad = triangle_quadrature(opts.quadrature_degree)?;
    let dof_map = DofMap::build(mesh, bcs)?;
    let locals: Vec<LocalMatrices> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| {
            local_matrices_with(&mesh.geometry(e), mat, &quad, opts.variant).map_err(|err| match err {
                Error::InvalidElement { message, .. } => Error::InvalidElement { element: e, message },
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let n = dof_map.n_free;
    let mut coo = [CooMatrix::new(n, n), CooMatrix::new(n, n), CooMatrix::new(n, n), CooMatrix::new(n, n)];
    let mut f = DVector::zeros(n);
    let s = mat.descriptor_scale();
    // electric energy stiffness: K0 electric block without the G_N R_N mass term
    let t_shift = -mat.t[(1, 1)];
    let mass_e = mat.total_capacitance * mat.network.inductance;
    let rate_shift = mat.network.resistance / mat.network.inductance;
    for (e, loc) in locals.iter().enumerate() {
        let dofs = dof_map.element_dofs(mesh.triangles[e].node_ids);
        for i in 0..12 {
            let Some(gi) = dofs[i] else { continue };
            f[gi] += loc.f[i];
            for j in 0..12 {
                let Some(gj) = dofs[j] else { continue };
                coo[0].push(gi, gj, loc.k2[(i, j)]);
                coo[1].push(gi, gj, loc.k1[(i, j)]);
                coo[2].push(gi, gj, loc.k0[(i, j)]);
                // the resistive parts of K0 (G_N R_N mass, R_N coupling) carry
                // no stored energy; what remains must be block diagonal
                let mut v = loc.k0[(i, j)];
                match (i % 4 == 3, j % 4 == 3) {
                    (true, true) => v -= t_shift / mass_e * loc.k2[(i, j)],
                    (false, true) => v -= rate_shift * loc.k1[(i, j)],
                    _ => {}
                }
                coo[3].push(gi, gj, v);
            }
        }
    }
    let [k2, k1, k0, ke] = coo.map(|c| CsrMatrix::from(&c));
    let symmetries = [Symmetry::MirrorX, Symmetry::MirrorY, Symmetry::Transpose]
        .into_iter()
        .filter_map(|kind| DofSymmetry::from_node_map(kind, &mesh.symmetry_map(kind)?, &dof_map))
        .collect();
    Ok(AssembledSystem {
        k2,
        k1,
        k0,
        f,
        dof_map,
        energy_stiffness: ke,
        rate_shift,
        descriptor_scale: s,
        symmetries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchReport {
    pub passed: bool,
    /// Largest error over the constant-curvature states.
    pub max_error: f64,
    /// Largest error over the rigid states.
    pub rigid_error: f64,
    pub states: Vec<(String, f64)>,
}

pub const PATCH_TOLERANCE: f64 = 1e-9;
pub const RIGID_TOLERANCE: f64 = 1e-12;

/// Irregular five-triangle patch around one interior node.
pub fn canonical_patch() -> Mesh {
    let coords = vec![[0.43, 0.38], [0.0, 0.0], [1.1, 0.1], [1.25, 0.9], [0.45, 1.2], [-0.15, 0.7]];
    let tris = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1]];
    let groups = vec![crate::mesh::EdgeGroup { name: "boundary".into(), nodes: vec![1, 2, 3, 4, 5] }];
    Mesh::new(coords, tris, groups).expect("canonical patch is valid")
}

pub fn patch_test(mat: &MaterialModel) -> Result<PatchReport> {
    patch_test_with(mat, BendingVariant::Specht)
}

/// Imposes exact nodal data of rigid and constant-curvature states on the
/// boundary of [`canonical_patch`], solves the bending equations for the
/// interior node and compares with the exact values.
pub fn patch_test_with(mat: &MaterialModel, variant: BendingVariant) -> Result<PatchReport> {
    if mat.is_coupled() {
        return Err(Error::invalid("the patch test needs a pure-bending material (g_me = 0)"));
    }
    let mesh = canonical_patch();
    let opts = AssemblyOptions { variant, ..AssemblyOptions::default() };
    let sys = assemble_with(&mesh, mat, &[], &opts)?;
    let k0 = crate::linalg::csr_to_dense(&sys.k0);
    let interior = 0;
    let idx = |node: usize, d: Dof| sys.dof_map.index(node, d).unwrap();
    let mech = [Dof::W, Dof::ThetaX, Dof::ThetaY];

    type Field = fn(f64, f64) -> [f64; 3];
    let states: [(&str, Field, bool); 6] = [
        ("constant", |_, _| [1.0, 0.0, 0.0], true),
        ("rigid 0.3 + 0.7x - 0.4y", |x, y| [0.3 + 0.7 * x - 0.4 * y, 0.7, -0.4], true),
        ("x^2/2", |x, _| [0.5 * x * x, x, 0.0], false),
        ("y^2/2", |_, y| [0.5 * y * y, 0.0, y], false),
        ("xy", |x, y| [x * y, y, x], false),
        ("mixed quadratic", |x, y| {
            [1.0 + x - 2.0 * y + 0.5 * x * x - 0.8 * x * y + 1.5 * y * y, 1.0 + x - 0.8 * y, -2.0 - 0.8 * x + 3.0 * y]
        }, false),
    ];

    let inner: Vec<usize> = mech.iter().map(|&d| idx(interior, d)).collect();
    let outer: Vec<usize> = (1..mesh.n_nodes()).flat_map(|n| mech.iter().map(move |&d| (n, d))).map(|(n, d)| idx(n, d)).collect();
    let kii = DMatrix::from_fn(3, 3, |i, j| k0[(inner[i], inner[j])]);
    let kib = DMatrix::from_fn(3, outer.len(), |i, j| k0[(inner[i], outer[j])]);
    let lu = kii.clone().lu();

    let mut report = PatchReport { passed: true, max_error: 0.0, rigid_error: 0.0, states: Vec::new() };
    for (name, field, rigid) in states {
        let mut ub = DVector::zeros(outer.len());
        let mut scale: f64 = 0.0;
        for n in 0..mesh.n_nodes() {
            let [x, y] = mesh.coords(n);
            let v = field(x, y);
            scale = v.iter().fold(scale, |m, c| m.max(c.abs()));
            if n > 0 {
                for d in 0..3 {
                    ub[3 * (n - 1) + d] = v[d];
                }
            }
        }
        let rhs = -(&kib * ub);
        let ui = lu.solve(&rhs).ok_or_else(|| Error::numerical("singular interior patch matrix"))?;
        let [x, y] = mesh.coords(interior);
        let exact = field(x, y);
        let err = (0..3).map(|d| (ui[d] - exact[d]).abs()).fold(0.0, f64::max) / scale;
        if rigid {
            report.rigid_error = report.rigid_error.max(err);
        } else {
            report.max_error = report.max_error.max(err);
        }
        report.states.push((name.to_string(), err));
    }
    report.passed = report.max_error <= PATCH_TOLERANCE && report.rigid_error <= RIGID_TOLERANCE;
    Ok(report)
}

/// Pure-bending benchmark material, used by the patch test front-end.
pub fn pure_bending_material() -> MaterialModel {
    build_material(&PlateParams::benchmark().with_coupling([0.0; 3]), &NetworkParams::benchmark())
        .expect("benchmark parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{build_material, NetworkParams, PlateParams};
    use crate::mesh::{generate_structured_square, SquarePattern};

    fn quad() -> QuadRule {
        triangle_quadrature(8).unwrap()
    }

    fn mat(coupling: [f64; 3], net: NetworkParams) -> MaterialModel {
        build_material(&PlateParams::benchmark().with_coupling(coupling), &net).unwrap()
    }

    fn electric_block(k: &Mat12) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| k[(4 * i + 3, 4 * j + 3)])
    }

    #[test]
    fn right_triangle_electric_blocks() {
        let g = TriangleGeometry::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let m = mat([0.0; 3], NetworkParams::benchmark());
        let loc = local_matrices(&g, &m, &quad()).unwrap();
        let lap = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]) * 0.5;
        assert!((electric_block(&loc.k0) - lap).amax() < 1e-14);
        let mass = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]) * (0.5 / 12.0);
        assert!((electric_block(&loc.k2) - mass).amax() < 1e-15);
        for i in 0..12 {
            for j in 0..12 {
                if (i % 4 == 3) != (j % 4 == 3) {
                    assert_eq!(loc.k0[(i, j)], 0.0);
                    assert_eq!(loc.k2[(i, j)], 0.0);
                }
            }
        }
        assert_eq!(loc.k1, Mat12::zeros());
    }

    #[test]
    fn electric_stiffness_independent_of_inductance() {
        let g = TriangleGeometry::new([0.1, 0.0], [0.9, 0.2], [0.3, 0.7]);
        let a = local_matrices(&g, &mat([0.1, 0.1, 0.0], NetworkParams::benchmark()), &quad()).unwrap();
        let b = local_matrices(&g, &mat([0.1, 0.1, 0.0], NetworkParams::benchmark().with_inductance(4.0)), &quad()).unwrap();
        assert!((electric_block(&a.k0) - electric_block(&b.k0)).amax() < 1e-14);
        assert!((electric_block(&b.k2) - electric_block(&a.k2) * 4.0).amax() < 1e-14);
    }

    #[test]
    fn cyclic_relabelling_is_a_permutation() {
        let g = TriangleGeometry::new([0.1, -0.2], [1.3, 0.4], [0.2, 0.9]);
        let net = NetworkParams { inductance: 0.7, resistance: 0.3, capacitance: 1.2, conductance: 0.1 };
        let m = mat([0.1, 0.05, 0.02], net);
        let a = local_matrices(&g, &m, &quad()).unwrap();
        let b = local_matrices(&g.rotated(), &m, &quad()).unwrap();
        // local node a of the rotated triangle is node a+1 of the original
        let p = |i: usize| 4 * ((i / 4 + 1) % 3) + i % 4;
        for (x, y) in [(&a.k0, &b.k0), (&a.k1, &b.k1), (&a.k2, &b.k2)] {
            let scale = x.amax();
            for i in 0..12 {
                for j in 0..12 {
                    assert!((y[(i, j)] - x[(p(i), p(j))]).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn conservative_coupling_is_skew() {
        let g = TriangleGeometry::new([0.0, 0.0], [0.8, 0.1], [0.3, 0.6]);
        let m = mat([0.1, 0.07, 0.03], NetworkParams::benchmark().with_inductance(0.3));
        let loc = local_matrices(&g, &m, &quad()).unwrap();
        assert!((loc.k1 + loc.k1.transpose()).amax() < 1e-14 * loc.k1.amax());
        assert!(loc.k1.amax() > 0.0);
        assert!((loc.k0 - loc.k0.transpose()).amax() < 1e-13 * loc.k0.amax());
    }

    #[test]
    fn degenerate_element_rejected() {
        let g = TriangleGeometry::new([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]);
        let m = mat([0.0; 3], NetworkParams::benchmark());
        assert!(matches!(local_matrices(&g, &m, &quad()), Err(Error::InvalidElement { .. })));
    }

    #[test]
    fn single_triangle_global_equals_local() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.2, 0.8]], vec![[0, 1, 2]], vec![]).unwrap();
        let m = mat([0.1, 0.1, 0.0], NetworkParams::benchmark().with_resistance(0.2));
        let sys = assemble(&mesh, &m, &[]).unwrap();
        let loc = local_matrices(&mesh.geometry(0), &m, &quad()).unwrap();
        let (k2, k1, k0) = sys.dense();
        assert_eq!(k2, DMatrix::from_column_slice(12, 12, loc.k2.as_slice()));
        assert_eq!(k1, DMatrix::from_column_slice(12, 12, loc.k1.as_slice()));
        assert_eq!(k0, DMatrix::from_column_slice(12, 12, loc.k0.as_slice()));
    }

    #[test]
    fn clamped_grounded_dof_count() {
        let mesh = generate_structured_square(2, 1.0, SquarePattern::Crossed).unwrap();
        let bcs = BoundaryCondition::parse_list("boundary", "clamped+grounded").unwrap();
        let sys = assemble(&mesh, &mat([0.1, 0.1, 0.0], NetworkParams::benchmark()), &bcs).unwrap();
        let boundary = mesh.group("boundary").unwrap().nodes.len();
        assert_eq!(sys.n_free(), 4 * (mesh.n_nodes() - boundary));
        assert_eq!(sys.dof_map.constrained.len(), 4 * boundary);
    }

    #[test]
    fn unknown_group_and_conflicts() {
        let mesh = generate_structured_square(2, 1.0, SquarePattern::Crossed).unwrap();
        let m = mat([0.0; 3], NetworkParams::benchmark());
        let bad = [BoundaryCondition::new("edges", BcKind::Clamped)];
        assert!(matches!(assemble(&mesh, &m, &bad), Err(Error::UnknownGroup(_))));
        let conflict = [
            BoundaryCondition::new("boundary", BcKind::Clamped),
            BoundaryCondition::new("boundary", BcKind::Free),
        ];
        assert!(matches!(assemble(&mesh, &m, &conflict), Err(Error::ConflictingConstraint { .. })));
        assert!("hinged".parse::<BcKind>().is_err());
    }

    #[test]
    fn assembled_mass_is_symmetric_and_positive() {
        let mesh = generate_structured_square(3, 1.0, SquarePattern::Crossed).unwrap();
        let m = mat([0.1, 0.1, 0.0], NetworkParams::benchmark());
        let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded").unwrap();
        let sys = assemble(&mesh, &m, &bcs).unwrap();
        let (k2, k1, k0) = sys.dense();
        assert!((&k2 - k2.transpose()).amax() <= 1e-12 * k2.amax());
        assert!((&k0 - k0.transpose()).amax() <= 1e-12 * k0.amax());
        assert!((&k1 + k1.transpose()).amax() <= 1e-12 * k1.amax());
        assert!(k2.clone().cholesky().is_some());
        assert!(k0.clone().cholesky().is_some());
        // the electric block of the total mass equals the domain area times C_N L_N
        let ones: f64 = sys.dof_map.electric.iter().flat_map(|&i| sys.dof_map.electric.iter().map(move |&j| (i, j))).map(|(i, j)| k2[(i, j)]).sum();
        assert!(ones > 0.0 && ones < 1.0);
    }

    #[test]
    fn assembly_is_thread_count_invariant() {
        let mesh = generate_structured_square(4, 1.0, SquarePattern::Crossed).unwrap();
        let m = mat([0.1, 0.1, 0.0], NetworkParams::benchmark());
        let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded").unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = pool.install(|| assemble(&mesh, &m, &bcs).unwrap());
        let b = assemble(&mesh, &m, &bcs).unwrap();
        assert_eq!(a.k0, b.k0);
        assert_eq!(a.k1, b.k1);
        assert_eq!(a.k2, b.k2);
    }

    #[test]
    fn square_symmetries_commute_with_the_system() {
        let mesh = generate_structured_square(3, 1.0, SquarePattern::Crossed).unwrap();
        let m = mat([0.1, 0.1, 0.0], NetworkParams::benchmark());
        let bcs = BoundaryCondition::parse_list("boundary", "simply_supported+grounded").unwrap();
        let sys = assemble(&mesh, &m, &bcs).unwrap();
        assert_eq!(sys.symmetries.len(), 3);
        let (k2, _, k0) = sys.dense();
        for sym in &sys.symmetries {
            let p = DMatrix::from_fn(sys.n_free(), sys.n_free(), |i, j| if sym.source[i] == j { sym.sign[i] } else { 0.0 });
            let k2s = p.transpose() * &k2 * &p;
            let k0s = p.transpose() * &k0 * &p;
            assert!((k2s - &k2).amax() < 1e-12 * k2.amax(), "{:?}", sym.kind);
            assert!((k0s - &k0).amax() < 1e-11 * k0.amax(), "{:?}", sym.kind);
        }
        let cross = sys.dof_map.mechanical.iter().flat_map(|&i| sys.dof_map.electric.iter().map(move |&j| (i, j)));
        let ke = crate::linalg::csr_to_dense(&sys.energy_stiffness);
        assert!(cross.map(|(i, j)| ke[(i, j)].abs().max(ke[(j, i)].abs())).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn point_load_at_node_hits_only_its_w_dof() {
        let mesh = generate_structured_square(2, 1.0, SquarePattern::Crossed).unwrap();
        let dofs = DofMap::build(&mesh, &[]).unwrap();
        let node = 4; // grid point (0.5, 0.5)
        let p = point_load_vector(&mesh, &dofs, 0.5, 0.5, 2.0).unwrap();
        for k in 0..dofs.n_free {
            let expect = if dofs.owner[k] == (node, Dof::W) { 2.0 } else { 0.0 };
            assert!((p[k] - expect).abs() < 1e-12, "dof {k}: {}", p[k]);
        }
        assert!(point_load_vector(&mesh, &dofs, 2.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn patch_test_passes_and_negative_controls_fail() {
        let m = pure_bending_material();
        let r = patch_test(&m).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_error <= 1e-9 && r.rigid_error <= 1e-12);
        for variant in [BendingVariant::ReversedMu, BendingVariant::Bciz] {
            let bad = patch_test_with(&m, variant).unwrap();
            assert!(!bad.passed, "{variant:?} should fail: {bad:?}");
        }
    }
}
