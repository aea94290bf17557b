//! Time integration of the reduced system, energy partition, damping
//! estimation and the net-resistance search.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{point_load_vector, AssembledSystem};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::modal::ReducedSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excitation {
    Displacement,
    Velocity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `amplitude · e_mode` on `z(0)` or `z'(0)`.
    Unimodal { mode: usize, amplitude: f64, on: Excitation },
    /// Explicit modal state.
    State { z: DVector<f64>, zdot: DVector<f64> },
}

impl InitialCondition {
    pub fn unimodal(mode: usize, amplitude: f64) -> Self {
        InitialCondition::Unimodal { mode, amplitude, on: Excitation::Displacement }
    }

    pub fn zero(n: usize) -> Self {
        InitialCondition::State { z: DVector::zeros(n), zdot: DVector::zeros(n) }
    }

    pub fn realize(&self, n: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        match self {
            InitialCondition::Unimodal { mode, amplitude, on } => {
                if *mode >= n {
                    return Err(Error::invalid(format!("initial mode {mode} outside the {n} retained modes")));
                }
                let mut e = DVector::zeros(n);
                e[*mode] = *amplitude;
                Ok(match on {
                    Excitation::Displacement => (e, DVector::zeros(n)),
                    Excitation::Velocity => (DVector::zeros(n), e),
                })
            }
            InitialCondition::State { z, zdot } => {
                if z.len() != n || zdot.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: z.len(), what: "initial state" });
                }
                Ok((z.clone(), zdot.clone()))
            }
        }
    }

    /// Multiplies the initial state by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            InitialCondition::Unimodal { mode, amplitude, on } => {
                InitialCondition::Unimodal { mode: *mode, amplitude: amplitude * s, on: *on }
            }
            InitialCondition::State { z, zdot } => InitialCondition::State { z: z * s, zdot: zdot * s },
        }
    }
}

/// Velocity jump produced by a transverse impulse at `(x, y)`: the nodal
/// impulse `p` is the `w` interpolation row of the containing element and
/// `z'(0) = Φᵀ p` by `K2`-orthonormality.
pub fn impulse_ic(
    mesh: &Mesh,
    sys: &AssembledSystem,
    rs: &ReducedSystem,
    point: (f64, f64),
    magnitude: f64,
) -> Result<InitialCondition> {
    if rs.basis.nrows() != sys.n_free() {
        return Err(Error::DimensionMismatch { expected: sys.n_free(), found: rs.basis.nrows(), what: "mode length" });
    }
    let p = point_load_vector(mesh, &sys.dof_map, point.0, point.1, magnitude)?;
    let n = rs.dim();
    Ok(InitialCondition::State { z: DVector::zeros(n), zdot: rs.basis.transpose() * p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Energies {
    pub mech: Vec<f64>,
    pub elec: Vec<f64>,
    pub cross: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub z: Vec<DVector<f64>>,
    pub zdot: Vec<DVector<f64>>,
    pub energies: Energies,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() > 1 {
            self.t[1] - self.t[0]
        } else {
            0.0
        }
    }

    /// Largest `|E(t) − E(0)| / E(0)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies.total[0];
        self.energies.total.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0
    }
}

/// Energy of one state: `(mech, elec, cross)`. The stored electric energy
/// uses the rate `z' + (R_N/L_N) z`, which makes the total non-increasing
/// whenever the network is dissipative.
pub fn state_energy(rs: &ReducedSystem, z: &DVector<f64>, v: &DVector<f64>) -> (f64, f64, f64) {
    let q = |m: &DMatrix<f64>, x: &DVector<f64>| 0.5 * x.dot(&(m * x));
    let u = v + z * rs.rate_shift;
    let em = q(&rs.mech_mass, v) + q(&rs.mech_stiffness, z);
    let ee = q(&rs.elec_mass, &u) + q(&rs.elec_stiffness, z);
    let ec = q(&rs.cross_mass, v) + q(&rs.cross_stiffness, z);
    (em, ee, ec)
}

pub fn energies(rs: &ReducedSystem, traj: &Trajectory) -> Energies {
    let mut e = Energies { mech: Vec::new(), elec: Vec::new(), cross: Vec::new(), total: Vec::new() };
    for (z, v) in traj.z.iter().zip(&traj.zdot) {
        let (m, el, c) = state_energy(rs, z, v);
        e.mech.push(m);
        e.elec.push(el);
        e.cross.push(c);
        e.total.push(m + el + c);
    }
    e
}

/// First-order form `z'' = g − A z' − B z` with `A = K2⁻¹K1`, `B = K2⁻¹K0`.
struct Rhs {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    g: DVector<f64>,
}

impl Rhs {
    fn new(rs: &ReducedSystem) -> Result<Self> {
        let lu = rs.k2.clone().lu();
        let solve = |m: &DMatrix<f64>| lu.solve(m).ok_or_else(|| Error::numerical("reduced mass matrix is singular"));
        Ok(Rhs {
            a: solve(&rs.k1)?,
            b: solve(&rs.k0)?,
            g: lu.solve(&rs.f).ok_or_else(|| Error::numerical("reduced mass matrix is singular"))?,
        })
    }

    fn acc(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.g - &self.a * v - &self.b * z
    }

    fn step(&self, z: &DVector<f64>, v: &DVector<f64>, h: f64) -> (DVector<f64>, DVector<f64>) {
        let a1 = self.acc(z, v);
        let (z2, v2) = (z + v * (0.5 * h), v + &a1 * (0.5 * h));
        let a2 = self.acc(&z2, &v2);
        let (z3, v3) = (z + &v2 * (0.5 * h), v + &a2 * (0.5 * h));
        let a3 = self.acc(&z3, &v3);
        let (z4, v4) = (z + &v3 * h, v + &a3 * h);
        let a4 = self.acc(&z4, &v4);
        let zn = z + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
        let vn = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        (zn, vn)
    }
}

fn check_step(t_f: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_f >= 0.0 && t_f.is_finite()) {
        return Err(Error::invalid(format!("need dt > 0 and t_f >= 0 (dt = {dt}, t_f = {t_f})")));
    }
    Ok((t_f / dt).round() as usize)
}

/// Classic fixed-step fourth-order Runge-Kutta on `(z, z')`, storing every
/// step. The grid is `t_k = k dt` for `k = 0..=round(t_f / dt)`.
pub fn integrate(rs: &ReducedSystem, ic: &InitialCondition, t_f: f64, dt: f64) -> Result<Trajectory> {
    let steps = check_step(t_f, dt)?;
    let rhs = Rhs::new(rs)?;
    let (mut z, mut v) = ic.realize(rs.dim())?;
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        z: Vec::with_capacity(steps + 1),
        zdot: Vec::with_capacity(steps + 1),
        energies: Energies { mech: vec![], elec: vec![], cross: vec![], total: vec![] },
    };
    traj.t.push(0.0);
    traj.z.push(z.clone());
    traj.zdot.push(v.clone());
    for k in 1..=steps {
        (z, v) = rhs.step(&z, &v, dt);
        if !(z.iter().chain(v.iter()).all(|x| x.is_finite())) {
            return Err(Error::IntegrationFailure { step: k, time: k as f64 * dt });
        }
        traj.t.push(k as f64 * dt);
        traj.z.push(z.clone());
        traj.zdot.push(v.clone());
    }
    traj.energies = energies(rs, &traj);
    Ok(traj)
}

/// Same scheme as [`integrate`] keeping only the energy traces.
pub fn integrate_energies(rs: &ReducedSystem, ic: &InitialCondition, t_f: f64, dt: f64) -> Result<(Vec<f64>, Energies)> {
    integrate_energies_until(rs, ic, t_f, dt, 0.0)
}

/// [`integrate_energies`] that stops early once the total energy drops to
/// `stop_fraction · E(0)`.
fn integrate_energies_until(
    rs: &ReducedSystem,
    ic: &InitialCondition,
    t_f: f64,
    dt: f64,
    stop_fraction: f64,
) -> Result<(Vec<f64>, Energies)> {
    let steps = check_step(t_f, dt)?;
    let rhs = Rhs::new(rs)?;
    let (mut z, mut v) = ic.realize(rs.dim())?;
    let mut t = Vec::new();
    let mut e = Energies { mech: vec![], elec: vec![], cross: vec![], total: vec![] };
    let mut push = |k: usize, z: &DVector<f64>, v: &DVector<f64>| {
        let (m, el, c) = state_energy(rs, z, v);
        t.push(k as f64 * dt);
        e.mech.push(m);
        e.elec.push(el);
        e.cross.push(c);
        e.total.push(m + el + c);
        m + el + c
    };
    let stop = stop_fraction * push(0, &z, &v);
    for k in 1..=steps {
        (z, v) = rhs.step(&z, &v, dt);
        if !(z.iter().chain(v.iter()).all(|x| x.is_finite())) {
            return Err(Error::IntegrationFailure { step: k, time: k as f64 * dt });
        }
        if push(k, &z, &v) < stop {
            break;
        }
    }
    Ok((t, e))
}

/// Nodal fields at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub time: f64,
    pub step: usize,
    /// `t` was not on the grid and the nearest step was used.
    pub off_grid: bool,
    /// Per node `(w, θx, θy, α)`; constrained DOFs are zero.
    pub nodal: Vec<[f64; 4]>,
}

/// `q(t) = Φ z(t)` mapped back to nodes, with the electric unknown returned
/// as the descriptor `α`.
pub fn recover_field(sys: &AssembledSystem, rs: &ReducedSystem, traj: &Trajectory, t: f64) -> Result<FieldSnapshot> {
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let dt = traj.dt();
    let step = if dt > 0.0 { ((t / dt).round().max(0.0) as usize).min(traj.len() - 1) } else { 0 };
    let off_grid = (traj.t[step] - t).abs() > 1e-9 * dt.max(1e-300);
    let q = rs.expand(&traj.z[step]);
    let mut nodal = sys.dof_map.expand(&q);
    for v in &mut nodal {
        v[3] /= rs.descriptor_scale;
    }
    Ok(FieldSnapshot { time: traj.t[step], step, off_grid, nodal })
}

/// Upper envelope `env(t_i) = max_{j ≥ i} E(t_j)`.
pub fn future_max_envelope(e: &[f64]) -> Vec<f64> {
    let mut env = e.to_vec();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    env
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingFit {
    pub zeta: f64,
    /// First time after which `E_m` stays below 5% of `E_m(0)`.
    pub settling_time: Option<f64>,
    /// Envelope peaks used by the fit.
    pub n_peaks: usize,
    /// The envelope crossed the whole tail window, so `zeta` measures the
    /// asymptotic decay.
    pub tail_reached: bool,
}

pub const SETTLING_FRACTION: f64 = 0.05;
/// Fit window on `E_m / E_m(0)`: the tail of the decay, where the least
/// damped motion dominates.
pub const FIT_WINDOW: (f64, f64) = (1e-12, 1e-2);
/// Lower limit of the whole-run fallback fit.
pub const FIT_FLOOR: f64 = 1e-6;

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Damping ratio from a least-squares line through `log E_m` at the record
/// peaks of the upper envelope, `E_m ∝ exp(−2 ζ ω t)`. Peaks inside
/// [`FIT_WINDOW`] are used when there are at least `min_peaks` of them and
/// the envelope has left the window; otherwise every peak above
/// [`FIT_FLOOR`] is used. A trace without interior peaks is fitted sample
/// by sample.
pub fn fit_damping(t: &[f64], e_mech: &[f64], omega: f64, min_peaks: usize) -> DampingFit {
    let e0 = e_mech[0];
    let env = future_max_envelope(e_mech);
    let mut peaks = Vec::new();
    for i in 0..e_mech.len() {
        let peak = (i == 0 || e_mech[i] >= e_mech[i - 1]) && (i + 1 == e_mech.len() || e_mech[i] >= e_mech[i + 1]);
        let record = i + 1 == e_mech.len() || env[i] > env[i + 1];
        if peak && record && e_mech[i] == env[i] && env[i] > 0.0 {
            peaks.push((t[i], env[i] / e0));
        }
    }
    if peaks.len() < 2 {
        // monotone decay: the trace is its own envelope
        peaks = (0..env.len()).filter(|&i| env[i] > 0.0).map(|i| (t[i], env[i] / e0)).collect();
    }
    let settling_time = (0..env.len()).find(|&i| env[i] <= SETTLING_FRACTION * e0).map(|i| t[i]);
    let tail_reached = env.last().is_some_and(|&e| e < FIT_WINDOW.0 * e0);
    let window: Vec<(f64, f64)> =
        peaks.iter().filter(|p| p.1 >= FIT_WINDOW.0 && p.1 <= FIT_WINDOW.1).map(|p| (p.0, p.1.ln())).collect();
    let use_tail = tail_reached && window.len() >= min_peaks;
    let pts: Vec<(f64, f64)> =
        if use_tail { window } else { peaks.iter().filter(|p| p.1 >= FIT_FLOOR).map(|p| (p.0, p.1.ln())).collect() };
    let zeta = slope(&pts).map_or(0.0, |s| (-s / (2.0 * omega)).max(0.0));
    DampingFit { zeta, settling_time, n_peaks: pts.len(), tail_reached: use_tail }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingSample {
    pub resistance: f64,
    pub zeta: f64,
    pub settling_time: Option<f64>,
    pub t_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Base horizon. Dissipative runs continue to `t_f · 2^max_doublings`
    /// or until the energy has decayed past the fit window.
    pub t_f: f64,
    /// Step; `None` uses `T_min / 40` of the retained modes.
    pub dt: Option<f64>,
    pub max_doublings: usize,
    pub min_peaks: usize,
    pub grid_points: usize,
    pub fallback_points: usize,
    /// Stop when `log(R_hi / R_lo)` falls below this.
    pub rel_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { t_f: 20.0, dt: None, max_doublings: 7, min_peaks: 4, grid_points: 9, fallback_points: 41, rel_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingReport {
    /// Every evaluation, sorted by resistance.
    pub samples: Vec<DampingSample>,
    pub best_resistance: f64,
    pub best_zeta: f64,
    pub unimodal: bool,
    /// Samples at `R*/10`, `R*`, `10 R*`.
    pub regimes: [DampingSample; 3],
}

/// Evaluates `ζ(R)` for the mechanical mode `mode` of the reduced system
/// produced by `build`, excited by a unit modal displacement.
pub fn damping_at<B>(build: &B, resistance: f64, mode: usize, opts: &SearchOptions) -> Result<DampingSample>
where
    B: Fn(f64) -> Result<ReducedSystem> + Sync,
{
    let rs = build(resistance)?;
    let omega = *rs.omega.get(mode).ok_or_else(|| Error::invalid(format!("mode {mode} is not retained")))?;
    let dt = opts.dt.unwrap_or(rs.min_period() / 40.0);
    let ic = InitialCondition::unimodal(mode, 1.0);
    // E_m <= E_total, so once the total is a decade below the window the
    // mechanical envelope has crossed all of it
    let horizon = if resistance == 0.0 { opts.t_f } else { opts.t_f * 2f64.powi(opts.max_doublings as i32) };
    let (t, e) = integrate_energies_until(&rs, &ic, horizon, dt, 0.1 * FIT_WINDOW.0)?;
    let fit = fit_damping(&t, &e.mech, omega, opts.min_peaks);
    Ok(DampingSample { resistance, zeta: fit.zeta, settling_time: fit.settling_time, t_f: t[t.len() - 1] })
}

fn is_unimodal(z: &[f64]) -> bool {
    let peak = z.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * peak;
    let top = z.iter().position(|&v| v == peak).unwrap_or(0);
    z[..=top].windows(2).all(|w| w[1] >= w[0] - tol) && z[top..].windows(2).all(|w| w[1] <= w[0] + tol)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Maximizes the mechanical damping ratio over `R_N ∈ [lo, hi]`: a coarse
/// logarithmic grid (evaluated in parallel), then golden-section search on
/// `log R` around the best grid point. A non-unimodal grid logs a warning
/// and falls back to a finer grid scan.
pub fn optimize_resistance<B>(build: B, mode: usize, bracket: (f64, f64), opts: &SearchOptions) -> Result<DampingReport>
where
    B: Fn(f64) -> Result<ReducedSystem> + Sync,
{
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("resistance bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    if opts.grid_points < 3 {
        return Err(Error::invalid("resistance search needs at least 3 grid points"));
    }
    let eval_all = |rs: &[f64]| -> Result<Vec<DampingSample>> {
        rs.par_iter().map(|&r| damping_at(&build, r, mode, opts)).collect()
    };
    let grid = log_grid(lo, hi, opts.grid_points);
    let mut samples = eval_all(&grid)?;
    let zetas: Vec<f64> = samples.iter().map(|s| s.zeta).collect();
    let unimodal = is_unimodal(&zetas);

    let argmax = |s: &[DampingSample]| {
        (0..s.len()).fold(0, |b, i| if s[i].zeta > s[b].zeta { i } else { b })
    };
    let best = if unimodal {
        let i = argmax(&samples);
        let (mut a, mut b) = (grid[i.saturating_sub(1)].ln(), grid[(i + 1).min(grid.len() - 1)].ln());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = damping_at(&build, c.exp(), mode, opts)?;
        let mut fd = damping_at(&build, d.exp(), mode, opts)?;
        while b - a > opts.rel_tol {
            if fc.zeta >= fd.zeta {
                b = d;
                d = c;
                samples.push(fd);
                fd = fc;
                c = b - g * (b - a);
                fc = damping_at(&build, c.exp(), mode, opts)?;
            } else {
                a = c;
                c = d;
                samples.push(fc);
                fc = fd;
                d = a + g * (b - a);
                fd = damping_at(&build, d.exp(), mode, opts)?;
            }
        }
        samples.push(fc);
        samples.push(fd);
        let i = argmax(&samples);
        samples[i].clone()
    } else {
        log::warn!("damping ratio is not single-peaked on the coarse grid; falling back to a grid scan");
        samples.extend(eval_all(&log_grid(lo, hi, opts.fallback_points))?);
        let i = argmax(&samples);
        samples[i].clone()
    };
    samples.sort_by(|a, b| a.resistance.total_cmp(&b.resistance));
    samples.dedup_by(|a, b| a.resistance == b.resistance);

    let r = best.resistance;
    let sub_super: Vec<DampingSample> = [r / 10.0, r * 10.0].par_iter().map(|&x| damping_at(&build, x, mode, opts)).collect::<Result<_>>()?;
    Ok(DampingReport {
        samples,
        best_resistance: r,
        best_zeta: best.zeta,
        unimodal,
        regimes: [sub_super[0].clone(), best, sub_super[1].clone()],
    })
}
