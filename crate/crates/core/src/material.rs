//! Reduced constitutive model of the piezo-electro-mechanical plate.
//!
//! The plate carries two fields on every node: the transverse displacement
//! `w` (fourth order, three DOFs per node) and the electric descriptor `α`
//! (second order, one DOF per node). `α` is the network current potential,
//! related to the flux linkage `ψ` by `L_N α' + R_N α = -ψ'`.
//!
//! All weak-form coefficient matrices are stored on the field vector
//! `u = (w, α)` and the generalized strain `ε = (χ1, χ2, χ12, α,1, α,2)`:
//!
//! ```text
//! b     = G u'' + S u' + T u + V ε'      (inertia, ground admittance, piezo current)
//! B_1,2 = G_B u,1'' / G_B u,2''          (rotary inertia)
//! σ     = E ε + C u' + R u               (moments and network currents)
//! ε     = H0 u + H1 u,1 + H2 u,2 + H3 u,11 + H4 u,22 + H5 u,12
//! ```

use nalgebra::{Matrix2, Matrix3, SMatrix};

use crate::error::{Error, Result};

pub type Matrix2x5 = SMatrix<f64, 2, 5>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Matrix5x2 = SMatrix<f64, 5, 2>;

/// Number of fields of each differential order and the derived DOF counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldLayout {
    pub fourth_order: usize,
    pub second_order: usize,
}

impl FieldLayout {
    pub const PEM_PLATE: FieldLayout = FieldLayout { fourth_order: 1, second_order: 1 };

    pub fn dofs_per_node(&self) -> usize {
        3 * self.fourth_order + self.second_order
    }

    pub fn dofs_per_element(&self) -> usize {
        3 * self.dofs_per_node()
    }

    pub fn strain_dim(&self) -> usize {
        3 * self.fourth_order + 2 * self.second_order
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateParams {
    /// Half thickness `h`.
    pub half_thickness: f64,
    pub density: f64,
    /// Include the `2h³ρ/3` rotary inertia of the Kirchhoff section.
    pub rotary_inertia: bool,
    /// Host bending stiffness `(2h³/3) E1` in Voigt form (χ1, χ2, χ12).
    pub bending_stiffness: Matrix3<f64>,
    /// Bending stiffness added by the piezo patches.
    pub piezo_stiffness: Matrix3<f64>,
    /// Electromechanical coupling row `(g_me1, g_me2, g_me12)`.
    pub coupling: [f64; 3],
    /// Piezo self capacitance per unit area.
    pub g_ee: f64,
}

impl PlateParams {
    /// Unit-rigidity benchmark: `2hρ = 1`, `D = 1`, `ν = 0.3`,
    /// `g_me = (0.1, 0.1, 0)`, no rotary inertia.
    pub fn benchmark() -> Self {
        PlateParams {
            half_thickness: 0.01,
            density: 50.0,
            rotary_inertia: false,
            bending_stiffness: isotropic_rigidity(1.0, 0.3),
            piezo_stiffness: Matrix3::zeros(),
            coupling: [0.1, 0.1, 0.0],
            g_ee: 0.0,
        }
    }

    pub fn areal_mass(&self) -> f64 {
        2.0 * self.half_thickness * self.density
    }

    pub fn rotary_mass(&self) -> f64 {
        if self.rotary_inertia {
            2.0 * self.half_thickness.powi(3) * self.density / 3.0
        } else {
            0.0
        }
    }

    pub fn with_coupling(mut self, coupling: [f64; 3]) -> Self {
        self.coupling = coupling;
        self
    }
}

/// `D [[1, ν, 0], [ν, 1, 0], [0, 0, (1-ν)/2]]`
pub fn isotropic_rigidity(d: f64, nu: f64) -> Matrix3<f64> {
    Matrix3::new(d, d * nu, 0.0, d * nu, d, 0.0, 0.0, 0.0, d * 0.5 * (1.0 - nu))
}

/// Bending stiffness `(2h³/3) E1` of a section of half thickness `h`.
pub fn section_stiffness(e1: &Matrix3<f64>, half_thickness: f64) -> Matrix3<f64> {
    e1 * (2.0 * half_thickness.powi(3) / 3.0)
}

/// Lumped parameters of the interconnecting network per unit area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub inductance: f64,
    pub resistance: f64,
    /// Capacitance to ground `K_c` (the piezo `g_ee` is added on top).
    pub capacitance: f64,
    pub conductance: f64,
}

impl NetworkParams {
    pub fn benchmark() -> Self {
        NetworkParams { inductance: 1.0, resistance: 0.0, capacitance: 1.0, conductance: 0.0 }
    }

    pub fn with_inductance(mut self, inductance: f64) -> Self {
        self.inductance = inductance;
        self
    }

    pub fn with_resistance(mut self, resistance: f64) -> Self {
        self.resistance = resistance;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub plate: PlateParams,
    pub network: NetworkParams,
    /// Total capacitance `C_N = K_c + g_ee`.
    pub total_capacitance: f64,
    pub g: Matrix2<f64>,
    pub s: Matrix2<f64>,
    pub t: Matrix2<f64>,
    pub v: Matrix2x5,
    pub e: Matrix5,
    pub c: Matrix5x2,
    pub r: Matrix5x2,
    pub gb1: Matrix2<f64>,
    pub gb2: Matrix2<f64>,
    /// Compatibility selectors `H0..H5`.
    pub h: [Matrix5x2; 6],
}

pub fn build_material(plate: &PlateParams, net: &NetworkParams) -> Result<MaterialModel> {
    let bad = |what: &str, v: f64| Error::invalid(format!("{what} must be positive, got {v}"));
    if !(plate.half_thickness > 0.0) {
        return Err(bad("half thickness", plate.half_thickness));
    }
    if !(plate.density > 0.0) {
        return Err(bad("density", plate.density));
    }
    if !(net.inductance > 0.0) {
        return Err(bad("net inductance", net.inductance));
    }
    if !(net.resistance >= 0.0) || !(net.conductance >= 0.0) {
        return Err(Error::invalid("net resistance and conductance must be non-negative"));
    }
    let cn = net.capacitance + plate.g_ee;
    if !(cn > 0.0) {
        return Err(bad("total capacitance", cn));
    }
    let stiff = plate.bending_stiffness + plate.piezo_stiffness;
    if (stiff - stiff.transpose()).abs().max() > 1e-12 * stiff.abs().max() || stiff.cholesky().is_none() {
        return Err(Error::invalid("bending stiffness must be symmetric positive definite"));
    }
    if plate.coupling.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("coupling coefficients must be finite"));
    }

    let (l, r, gn) = (net.inductance, net.resistance, net.conductance);
    let g = Matrix2::new(-plate.areal_mass(), 0.0, 0.0, -cn * l);
    let s = Matrix2::new(0.0, 0.0, 0.0, -cn * r - gn * l);
    let t = Matrix2::new(0.0, 0.0, 0.0, -gn * r);
    let rot = -plate.rotary_mass();
    let gb = Matrix2::new(rot, 0.0, 0.0, 0.0);

    // Piezo current E_c χ' enters the electric charge balance; the moments
    // see E_cᵀ (L_N α' + R_N α).
    let mut v = Matrix2x5::zeros();
    let mut c = Matrix5x2::zeros();
    let mut rm = Matrix5x2::zeros();
    for k in 0..3 {
        v[(1, k)] = plate.coupling[k];
        c[(k, 1)] = l * plate.coupling[k];
        rm[(k, 1)] = r * plate.coupling[k];
    }

    let mut e = Matrix5::zeros();
    e.fixed_view_mut::<3, 3>(0, 0).copy_from(&stiff);
    e[(3, 3)] = 1.0;
    e[(4, 4)] = 1.0;

    let mut h = [Matrix5x2::zeros(); 6];
    h[1][(3, 1)] = 1.0;
    h[2][(4, 1)] = 1.0;
    h[3][(0, 0)] = -1.0;
    h[4][(1, 0)] = -1.0;
    h[5][(2, 0)] = -2.0;

    Ok(MaterialModel {
        plate: plate.clone(),
        network: *net,
        total_capacitance: cn,
        g,
        s,
        t,
        v,
        e,
        c,
        r: rm,
        gb1: gb,
        gb2: gb,
        h,
    })
}

pub fn retune_inductance(m: &MaterialModel, factor: f64) -> Result<MaterialModel> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!("inductance factor must be positive, got {factor}")));
    }
    let net = m.network.with_inductance(m.network.inductance * factor);
    build_material(&m.plate, &net)
}

impl MaterialModel {
    /// Scale between the stored electric unknown and `α`: the assembled
    /// system uses `a = sqrt(L_N) α`, which keeps the electric mass at
    /// `C_N L_N`, the electric stiffness independent of `L_N`, and the
    /// gyroscopic coupling skew-symmetric.
    pub fn descriptor_scale(&self) -> f64 {
        self.network.inductance.sqrt()
    }

    pub fn is_coupled(&self) -> bool {
        self.plate.coupling.iter().any(|&g| g != 0.0)
    }
}
