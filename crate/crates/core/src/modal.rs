//! Undamped modes, modal truncation, coupling tables and inductance tuning.
//!
//! Modes are computed per field: with `K1` neglected, the mass matrix and the
//! conservative stiffness are block diagonal between the mechanical and the
//! electric DOFs, so every eigenvector lives in one field.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{AssembledSystem, DofSymmetry};
use crate::error::{Error, Result};
use crate::linalg::{csr_submatrix, csr_to_dense, dense_generalized_eigen, subspace_eigen, SubspaceOptions};
use crate::material::NetworkParams;

/// Relative eigenvalue gap below which modes form a degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-6;
pub const DEFAULT_CLASSIFICATION_THRESHOLD: f64 = 0.9;
/// Field dimension up to which the dense eigensolver is used.
const DENSE_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Mechanical,
    Electric,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Mechanical => "mechanical",
            Field::Electric => "electric",
        }
    }

    fn dofs(self, sys: &AssembledSystem) -> &[usize] {
        match self {
            Field::Mechanical => &sys.dof_map.mechanical,
            Field::Electric => &sys.dof_map.electric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Mechanical,
    Electric,
    Mixed,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            ModeClass::Mechanical => "mechanical",
            ModeClass::Electric => "electric",
            ModeClass::Mixed => "mixed",
        }
    }

    pub fn from_fraction(mech_fraction: f64, threshold: f64) -> Self {
        if mech_fraction >= threshold {
            ModeClass::Mechanical
        } else if 1.0 - mech_fraction >= threshold {
            ModeClass::Electric
        } else {
            ModeClass::Mixed
        }
    }
}

/// Eigenpairs of `K0 a = ω² K2 a`, ascending, `K2`-orthonormal, stored as
/// columns over the free DOFs of the system they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub omega: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Share of each mode's `K2`-energy on mechanical DOFs.
    pub mech_fraction: Vec<f64>,
    pub class: Vec<ModeClass>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn n_dofs(&self) -> usize {
        self.vectors.nrows()
    }

    /// `ω_k / ω_1`
    pub fn normalized(&self) -> Vec<f64> {
        let w1 = self.omega.first().copied().unwrap_or(1.0);
        self.omega.iter().map(|w| w / w1).collect()
    }

    pub fn mode(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn select(&self, idx: &[usize]) -> ModeSet {
        ModeSet {
            omega: idx.iter().map(|&i| self.omega[i]).collect(),
            vectors: self.vectors.select_columns(idx),
            mech_fraction: idx.iter().map(|&i| self.mech_fraction[i]).collect(),
            class: idx.iter().map(|&i| self.class[i]).collect(),
        }
    }

    /// Merges two sets by ascending frequency, `self` first on ties.
    pub fn merge(&self, other: &ModeSet) -> Result<ModeSet> {
        if self.n_dofs() != other.n_dofs() {
            return Err(Error::DimensionMismatch { expected: self.n_dofs(), found: other.n_dofs(), what: "mode length" });
        }
        let mut order: Vec<(f64, usize, usize)> = self.omega.iter().enumerate().map(|(i, &w)| (w, 0, i)).collect();
        order.extend(other.omega.iter().enumerate().map(|(i, &w)| (w, 1, i)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let n = order.len();
        let mut out = ModeSet {
            omega: Vec::with_capacity(n),
            vectors: DMatrix::zeros(self.n_dofs(), n),
            mech_fraction: Vec::with_capacity(n),
            class: Vec::with_capacity(n),
        };
        for (c, &(_, src, i)) in order.iter().enumerate() {
            let s = if src == 0 { self } else { other };
            out.omega.push(s.omega[i]);
            out.vectors.set_column(c, &s.vectors.column(i));
            out.mech_fraction.push(s.mech_fraction[i]);
            out.class.push(s.class[i]);
        }
        Ok(out)
    }

    pub fn reclassify(&mut self, threshold: f64) {
        self.class = self.mech_fraction.iter().map(|&f| ModeClass::from_fraction(f, threshold)).collect();
    }

    /// Largest `‖K0 a − ω² K2 a‖ / ‖K0 a‖` over the set.
    pub fn max_residual(&self, sys: &AssembledSystem) -> f64 {
        let k0 = crate::linalg::csr_mul_dense(&sys.k0, &self.vectors);
        let k2 = crate::linalg::csr_mul_dense(&sys.k2, &self.vectors);
        (0..self.len())
            .map(|j| {
                let r = k0.column(j) - k2.column(j) * self.omega[j].powi(2);
                r.norm() / k0.column(j).norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// The `n` lowest modes of one field, embedded in the full free-DOF space.
pub fn solve_field_modes(sys: &AssembledSystem, field: Field, n: usize) -> Result<ModeSet> {
    let idx = field.dofs(sys);
    let m = idx.len();
    if n == 0 || n > m {
        return Err(Error::invalid(format!("requested {n} {} modes but the field has {m} free DOFs", field.name())));
    }
    let k2 = csr_submatrix(&sys.k2, idx, idx);
    // symmetric part; the resistive G_N R_N term is symmetric as well
    let k0 = csr_submatrix(&sys.k0, idx, idx);
    let extra = (n + 4).min(m);
    let (lam, x) = if m <= DENSE_LIMIT || 3 * extra >= m {
        let d0 = csr_to_dense(&k0);
        let d0 = (&d0 + d0.transpose()) * 0.5;
        let (lam, x) = dense_generalized_eigen(&d0, &csr_to_dense(&k2))?;
        (lam[..extra].to_vec(), x.columns(0, extra).into_owned())
    } else {
        subspace_eigen(&k0, &k2, extra, &SubspaceOptions::default())?
    };
    if let Some(bad) = lam.iter().find(|&&l| l < -1e-10 * lam.last().unwrap().abs()) {
        return Err(Error::numerical(format!("negative eigenvalue {bad:.3e}: stiffness is indefinite")));
    }
    let mut full = DMatrix::zeros(sys.n_free(), extra);
    for (r, &g) in idx.iter().enumerate() {
        for c in 0..extra {
            full[(g, c)] = x[(r, c)];
        }
    }
    let mut omega: Vec<f64> = lam.iter().map(|l| l.max(0.0).sqrt()).collect();
    orient_clusters(sys, &mut omega, &mut full);
    full = full.columns(0, n).into_owned();
    omega.truncate(n);
    let frac = match field {
        Field::Mechanical => 1.0,
        Field::Electric => 0.0,
    };
    let mut set = ModeSet { omega, vectors: full, mech_fraction: vec![frac; n], class: Vec::new() };
    set.reclassify(DEFAULT_CLASSIFICATION_THRESHOLD);
    Ok(set)
}

/// The `n` lowest modes of the undamped, uncoupled problem over both fields.
pub fn solve_modes(sys: &AssembledSystem, n: usize) -> Result<ModeSet> {
    if n == 0 || n > sys.n_free() {
        return Err(Error::invalid(format!("requested {n} modes of a system with {} free DOFs", sys.n_free())));
    }
    let nm = n.min(sys.dof_map.mechanical.len());
    let ne = n.min(sys.dof_map.electric.len());
    let mut sets = Vec::new();
    if nm > 0 {
        sets.push(solve_field_modes(sys, Field::Mechanical, nm)?);
    }
    if ne > 0 {
        sets.push(solve_field_modes(sys, Field::Electric, ne)?);
    }
    let merged = if sets.len() == 2 { sets[0].merge(&sets[1])? } else { sets.pop().unwrap() };
    Ok(merged.select(&(0..n).collect::<Vec<_>>()))
}

/// Mechanical and electric mode sets solved separately.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModes {
    pub mechanical: ModeSet,
    pub electric: ModeSet,
}

impl FieldModes {
    pub fn solve(sys: &AssembledSystem, n_mech: usize, n_elec: usize) -> Result<Self> {
        Ok(FieldModes {
            mechanical: solve_field_modes(sys, Field::Mechanical, n_mech)?,
            electric: solve_field_modes(sys, Field::Electric, n_elec)?,
        })
    }

    /// Retained basis: mechanical modes first, then electric.
    pub fn basis(&self) -> ModeSet {
        let mut b = self.mechanical.clone();
        let n0 = b.len();
        let total = n0 + self.electric.len();
        let mut v = DMatrix::zeros(b.n_dofs(), total);
        v.columns_mut(0, n0).copy_from(&b.vectors);
        v.columns_mut(n0, self.electric.len()).copy_from(&self.electric.vectors);
        b.vectors = v;
        b.omega.extend(&self.electric.omega);
        b.mech_fraction.extend(&self.electric.mech_fraction);
        b.class.extend(&self.electric.class);
        b
    }
}

fn clusters(omega: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=omega.len() {
        let split = i == omega.len() || {
            let (a, b) = (omega[i - 1].powi(2), omega[i].powi(2));
            (b - a).abs() > CLUSTER_GAP * b.abs().max(f64::MIN_POSITIVE)
        };
        if split {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Rotates every degenerate cluster onto eigenvectors of the mesh
/// symmetries (symmetric before antisymmetric), then fixes signs so the
/// first significant component is positive.
fn orient_clusters(sys: &AssembledSystem, omega: &mut [f64], x: &mut DMatrix<f64>) {
    for (a, b) in clusters(omega) {
        if b - a > 1 {
            let mut groups = vec![(a, b)];
            for sym in &sys.symmetries {
                let mut next = Vec::new();
                for &(s, e) in &groups {
                    if e - s > 1 {
                        next.extend(split_by_symmetry(sys, sym, x, s, e));
                    } else {
                        next.push((s, e));
                    }
                }
                groups = next;
            }
            let mean = omega[a..b].iter().sum::<f64>() / (b - a) as f64;
            omega[a..b].iter_mut().for_each(|w| *w = mean);
        }
    }
    for c in 0..x.ncols() {
        let amax = x.column(c).amax();
        if let Some(first) = x.column(c).iter().find(|v| v.abs() > 1e-6 * amax) {
            if *first < 0.0 {
                x.column_mut(c).neg_mut();
            }
        }
    }
}

fn split_by_symmetry(
    sys: &AssembledSystem,
    sym: &DofSymmetry,
    x: &mut DMatrix<f64>,
    s: usize,
    e: usize,
) -> Vec<(usize, usize)> {
    let v = x.columns(s, e - s).into_owned();
    let sv = DMatrix::from_columns(&(0..e - s).map(|c| sym.apply(&v.column(c).into_owned())).collect::<Vec<_>>());
    let k2sv = crate::linalg::csr_mul_dense(&sys.k2, &sv);
    let a = v.transpose() * k2sv;
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let mut idx: Vec<usize> = (0..e - s).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    let q = eig.eigenvectors.select_columns(&idx);
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    x.columns_mut(s, e - s).copy_from(&(v * q));
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || (vals[i - 1] - vals[i]).abs() > 1e-3 {
            out.push((s + start, s + i));
            start = i;
        }
    }
    out
}

/// Galerkin projection of the assembled system on a mode basis `Φ`
/// (`T = Φᵀ` maps nodal to modal coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub k2: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    pub k0: DMatrix<f64>,
    pub f: DVector<f64>,
    /// `Φ`, one retained mode per column.
    pub basis: DMatrix<f64>,
    pub omega: Vec<f64>,
    pub class: Vec<ModeClass>,
    /// Projected energy forms of each field.
    pub mech_mass: DMatrix<f64>,
    pub mech_stiffness: DMatrix<f64>,
    pub elec_mass: DMatrix<f64>,
    pub elec_stiffness: DMatrix<f64>,
    /// Projected mass and stiffness couplings between the field partitions;
    /// zero for this formulation and kept to check it.
    pub cross_mass: DMatrix<f64>,
    pub cross_stiffness: DMatrix<f64>,
    pub rate_shift: f64,
    pub descriptor_scale: f64,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.k2.nrows()
    }

    /// `T = Φᵀ`
    pub fn projection(&self) -> DMatrix<f64> {
        self.basis.transpose()
    }

    /// Nodal free-DOF vector `q = Φ z`.
    pub fn expand(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.basis * z
    }

    /// Smallest modal period `2π / ω` over the retained modes.
    pub fn min_period(&self) -> f64 {
        let wmax = self.omega.iter().cloned().fold(0.0, f64::max);
        2.0 * std::f64::consts::PI / wmax
    }
}

pub fn reduce(sys: &AssembledSystem, modes: &ModeSet) -> Result<ReducedSystem> {
    if modes.n_dofs() != sys.n_free() {
        return Err(Error::DimensionMismatch { expected: sys.n_free(), found: modes.n_dofs(), what: "mode length" });
    }
    let phi = &modes.vectors;
    let project = |k: &nalgebra_sparse::CsrMatrix<f64>| phi.transpose() * crate::linalg::csr_mul_dense(k, phi);
    let part = |rows: &[usize], cols: &[usize], k: &nalgebra_sparse::CsrMatrix<f64>| {
        let sub = csr_submatrix(k, rows, cols);
        let pr = phi.select_rows(rows);
        let pc = phi.select_rows(cols);
        pr.transpose() * crate::linalg::csr_mul_dense(&sub, &pc)
    };
    let (m, e) = (&sys.dof_map.mechanical, &sys.dof_map.electric);
    Ok(ReducedSystem {
        k2: project(&sys.k2),
        k1: project(&sys.k1),
        k0: project(&sys.k0),
        f: phi.transpose() * &sys.f,
        basis: phi.clone(),
        omega: modes.omega.clone(),
        class: modes.class.clone(),
        mech_mass: part(m, m, &sys.k2),
        mech_stiffness: part(m, m, &sys.energy_stiffness),
        elec_mass: part(e, e, &sys.k2),
        elec_stiffness: part(e, e, &sys.energy_stiffness),
        cross_mass: part(m, e, &sys.k2) + part(e, m, &sys.k2).transpose(),
        cross_stiffness: part(m, e, &sys.energy_stiffness) + part(e, m, &sys.energy_stiffness).transpose(),
        rate_shift: sys.rate_shift,
        descriptor_scale: sys.descriptor_scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    /// `|φ_e,iᵀ B φ_m,j|`, rows electric modes, columns mechanical modes.
    pub raw: DMatrix<f64>,
    /// `raw / max(raw)`, or all zeros when there is no coupling.
    pub normalized: DMatrix<f64>,
}

/// Inner products of electric and mechanical mode shapes through the
/// mechanical-to-electric block of `K1`.
pub fn coupling_table(mech: &ModeSet, elec: &ModeSet, sys: &AssembledSystem) -> Result<CouplingTable> {
    let (m, e) = (&sys.dof_map.mechanical, &sys.dof_map.electric);
    for set in [mech, elec] {
        if set.n_dofs() != sys.n_free() {
            return Err(Error::DimensionMismatch { expected: sys.n_free(), found: set.n_dofs(), what: "mode length" });
        }
    }
    let b = csr_submatrix(&sys.k1, e, m);
    let pm = mech.vectors.select_rows(m);
    let pe = elec.vectors.select_rows(e);
    let raw = (pe.transpose() * crate::linalg::csr_mul_dense(&b, &pm)).abs();
    let max = raw.max();
    let normalized = if max > 0.0 { &raw / max } else { DMatrix::zeros(raw.nrows(), raw.ncols()) };
    Ok(CouplingTable { raw, normalized })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub network: NetworkParams,
    /// `L_N' / L_N`
    pub factor: f64,
    pub omega_mech: f64,
    pub omega_elec_before: f64,
}

/// Rescales `L_N` so electric mode `elec_mode` matches mechanical mode
/// `mech_mode` (zero based). `build` assembles the system for given network
/// parameters; the electric frequencies scale as `1/sqrt(L_N)`.
pub fn tune_inductance<B>(net: &NetworkParams, build: B, mech_mode: usize, elec_mode: usize) -> Result<Tuning>
where
    B: Fn(&NetworkParams) -> Result<AssembledSystem>,
{
    let sys = build(net)?;
    let (nm, ne) = (sys.dof_map.mechanical.len(), sys.dof_map.electric.len());
    if mech_mode >= nm || elec_mode >= ne {
        return Err(Error::invalid(format!(
            "tuning targets (mechanical {mech_mode}, electric {elec_mode}) out of range ({nm}, {ne})"
        )));
    }
    let wm = solve_field_modes(&sys, Field::Mechanical, mech_mode + 1)?.omega[mech_mode];
    let we = solve_field_modes(&sys, Field::Electric, elec_mode + 1)?.omega[elec_mode];
    if !(wm > 0.0 && we > 0.0) {
        return Err(Error::numerical("cannot tune against a zero frequency"));
    }
    let factor = (we / wm).powi(2);
    Ok(Tuning { network: net.with_inductance(net.inductance * factor), factor, omega_mech: wm, omega_elec_before: we })
}

/// Largest relative eigenvalue error of the reduced problem against a
/// reference spectrum.
pub fn relative_errors(computed: &[f64], reference: &[f64]) -> Vec<f64> {
    computed.iter().zip(reference).map(|(c, r)| ((c - r) / r).abs()).collect()
}
