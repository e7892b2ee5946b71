//! Guiding-centre dynamics (first and zeroth order), the full Lorentz orbit,
//! conserved quantities, orbit classification and the electrostatic and
//! relativistic drift variants.

use alloc::vec::Vec;

use crate::diffgeo::{curl, unit_jet};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::linalg::Vec3;
use crate::ode::{Dopri5, OdeOptions};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const DEUTERON_MASS: f64 = 3.343_583_772e-27;
pub const PROTON_MASS: f64 = 1.672_621_924e-27;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default relative floor on |B̃∥|/|B|.
pub const DEFAULT_BPAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub m: f64,
    pub e: f64,
    pub mu: f64,
}

impl Particle {
    pub fn new(m: f64, e: f64, mu: f64) -> Result<Self> {
        if !(m > 0.0) || e == 0.0 || !e.is_finite() || !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidInput("particle needs m > 0, e != 0, mu >= 0".into()));
        }
        Ok(Particle { m, e, mu })
    }

    pub fn deuteron(mu: f64) -> Self {
        Particle { m: DEUTERON_MASS, e: ELEMENTARY_CHARGE, mu }
    }
}

/// Guiding-centre phase point. In relativistic mode `v_par` holds p∥.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GcState {
    pub x: Vec3,
    pub v_par: f64,
}

/// Local field quantities needed by the drift equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    pub b_vec: Vec3,
    pub modb: f64,
    pub b: Vec3,
    pub grad_modb: Vec3,
    /// c = curl b
    pub curl_b: Vec3,
}

pub fn local_field<F: VectorField + ?Sized>(field: &F, x: Vec3) -> Result<LocalField> {
    let j = field.jet1(x)?;
    let (unit, modb) = unit_jet(&j)?;
    Ok(LocalField { b_vec: j.value, modb: modb.value, b: unit.value, grad_modb: modb.grad, curl_b: curl(&unit) })
}

/// B̃ = B + (m/e) v∥ curl b and B̃∥ = B̃·b.
pub fn btilde<F: VectorField + ?Sized>(x: Vec3, v_par: f64, p: &Particle, field: &F) -> Result<(Vec3, f64)> {
    let lf = local_field(field, x)?;
    Ok(btilde_local(&lf, p.m / p.e * v_par))
}

fn btilde_local(lf: &LocalField, coef: f64) -> (Vec3, f64) {
    let bt = lf.b_vec + lf.curl_b * coef;
    (bt, bt.dot(lf.b))
}

fn check_floor(bpar: f64, modb: f64, floor: f64) -> Result<()> {
    let lim = floor * modb;
    if bpar.abs() < lim || bpar == 0.0 {
        return Err(Error::DegenerateBpar { bpar, floor: lim });
    }
    Ok(())
}

/// First-order guiding-centre equations of motion.
///
/// `floor` is the relative threshold on |B̃∥|/|B| below which evaluation fails.
pub fn fgcm_rhs<F: VectorField + ?Sized>(s: &GcState, p: &Particle, field: &F, floor: f64) -> Result<(Vec3, f64)> {
    let lf = local_field(field, s.x)?;
    let (bt, bpar) = btilde_local(&lf, p.m / p.e * s.v_par);
    check_floor(bpar, lf.modb, floor)?;
    let xdot = (bt * s.v_par + lf.b.cross(lf.grad_modb) * (p.mu / p.e)) / bpar;
    let vdot = -(p.mu / p.m) * bt.dot(lf.grad_modb) / bpar;
    Ok((xdot, vdot))
}

/// Zeroth-order guiding-centre motion: streaming along b with the mirror force.
pub fn zgcm_rhs<F: VectorField + ?Sized>(s: &GcState, p: &Particle, field: &F) -> Result<(Vec3, f64)> {
    let lf = local_field(field, s.x)?;
    Ok((lf.b * s.v_par, -(p.mu / p.m) * lf.b.dot(lf.grad_modb)))
}

/// Full Lorentz motion q̇ = v, v̇ = (e/m) v×B.
pub fn lorentz_rhs<F: VectorField + ?Sized>(q: Vec3, v: Vec3, p: &Particle, field: &F) -> Result<(Vec3, Vec3)> {
    let b = field.value(q)?;
    Ok((v, v.cross(b) * (p.e / p.m)))
}

/// FGCM with an electrostatic potential Φ added to the Hamiltonian.
pub fn electrostatic_rhs<F, P>(s: &GcState, p: &Particle, field: &F, phi: &P, floor: f64) -> Result<(Vec3, f64)>
where
    F: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let lf = local_field(field, s.x)?;
    let gphi = phi.jet1(s.x)?.grad;
    let (bt, bpar) = btilde_local(&lf, p.m / p.e * s.v_par);
    check_floor(bpar, lf.modb, floor)?;
    let xdot = (bt * s.v_par + lf.b.cross(lf.grad_modb) * (p.mu / p.e) + lf.b.cross(gphi)) / bpar;
    let vdot = -(p.mu / p.m) * bt.dot(lf.grad_modb) / bpar - (p.e / p.m) * bt.dot(gphi) / bpar;
    Ok((xdot, vdot))
}

/// Relativistic energy c √(m²c² + p∥² + 2mμ|B|), rest energy included.
pub fn relativistic_energy(p_par: f64, modb: f64, p: &Particle) -> f64 {
    let c = SPEED_OF_LIGHT;
    c * libm::sqrt(p.m * p.m * c * c + p_par * p_par + 2.0 * p.m * p.mu * modb)
}

/// [`relativistic_energy`] minus mc², without the cancellation of subtracting it.
pub fn relativistic_kinetic_energy(p_par: f64, modb: f64, p: &Particle) -> f64 {
    let c = SPEED_OF_LIGHT;
    let q = p_par * p_par + 2.0 * p.m * p.mu * modb;
    c * c * q / (relativistic_energy(p_par, modb, p) + p.m * c * c)
}

/// Relativistic drift equations in Hamiltonian form; the state carries p∥.
pub fn relativistic_rhs<F: VectorField + ?Sized>(s: &GcState, p: &Particle, field: &F, floor: f64) -> Result<(Vec3, f64)> {
    let lf = local_field(field, s.x)?;
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    let h = relativistic_energy(s.v_par, lf.modb, p);
    let dh_dp = c2 * s.v_par / h;
    let grad_h = lf.grad_modb * (c2 * p.m * p.mu / h);
    let (bt, bpar) = btilde_local(&lf, s.v_par / p.e);
    check_floor(bpar, lf.modb, floor)?;
    let xdot = (bt * dh_dp + lf.b.cross(grad_h) / p.e) / bpar;
    let pdot = -bt.dot(grad_h) / bpar;
    Ok((xdot, pdot))
}

/// Energy and Noether invariant at a phase point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Invariants {
    /// H = ½mv∥² + μ|B|
    pub h: f64,
    /// K = −eψ + m v∥ u·b, with ψ oriented by B×u = ∇ψ
    pub k: f64,
    pub psi: f64,
    pub modb: f64,
}

pub fn invariants<F, U, P>(s: &GcState, p: &Particle, field: &F, u: &U, psi: &P) -> Result<Invariants>
where
    F: VectorField + ?Sized,
    U: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let b = field.value(s.x)?;
    let modb = b.norm();
    if modb == 0.0 {
        return Err(Error::ZeroField);
    }
    let ub = u.value(s.x)?.dot(b) / modb;
    let ps = psi.value(s.x)?;
    Ok(Invariants {
        h: 0.5 * p.m * s.v_par * s.v_par + p.mu * modb,
        k: -p.e * ps + p.m * s.v_par * ub,
        psi: ps,
        modb,
    })
}

/// Guiding-centre decomposition of a particle state (q, v).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcDecomposition {
    pub x: Vec3,
    pub rho: Vec3,
    pub v_par: f64,
    pub mu: f64,
}

/// Solve q = X + ρ(X), ρ = (m/e) B×v⊥/|B|², by fixed-point iteration from X = q.
///
/// This is the sense in which a charge gyrates under `lorentz_rhs`.
pub fn gc_decompose<F: VectorField + ?Sized>(q: Vec3, v: Vec3, p: &Particle, field: &F) -> Result<GcDecomposition> {
    let rho_at = |x: Vec3| -> Result<(Vec3, f64, Vec3)> {
        let b = field.value(x)?;
        let b2 = b.norm_sq();
        if b2 == 0.0 {
            return Err(Error::ZeroField);
        }
        let bhat = b / libm::sqrt(b2);
        let vpar = v.dot(bhat);
        let vperp = v - bhat * vpar;
        Ok((b.cross(vperp) * (p.m / p.e / b2), vpar, vperp))
    };
    let mut x = q;
    let mut last = 0.0;
    for _ in 0..50 {
        let (rho, _, _) = rho_at(x)?;
        let xn = q - rho;
        let dx = (xn - x).norm();
        x = xn;
        last = dx;
        if dx <= 1e-12 * rho.norm() {
            let (rho, vpar, vperp) = rho_at(x)?;
            let modb = field.value(x)?.norm();
            return Ok(GcDecomposition { x, rho, v_par: vpar, mu: p.m * vperp.norm_sq() / (2.0 * modb) });
        }
    }
    Err(Error::NoConvergence { iterations: 50, residual: last })
}

/// Sampled guiding-centre orbit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<GcState>,
    /// Accepted integrator steps.
    pub n_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Integrate a guiding-centre right-hand side from `s0` over `[0, t_end]`, sampling `n_samples`
/// evenly spaced states (including both ends). `v_ref` scales the velocity component so a
/// single absolute tolerance fits both position and velocity.
pub fn integrate_gc<R>(rhs: R, s0: GcState, t_end: f64, n_samples: usize, v_ref: f64, opts: OdeOptions) -> Result<Trajectory>
where
    R: FnMut(&GcState) -> Result<(Vec3, f64)>,
{
    let (traj, status) = integrate_gc_partial(rhs, s0, t_end, n_samples, v_ref, opts);
    status.map(|_| traj)
}

/// As [`integrate_gc`], but returns the samples reached before a failure alongside it.
pub fn integrate_gc_partial<R>(mut rhs: R, s0: GcState, t_end: f64, n_samples: usize, v_ref: f64, opts: OdeOptions) -> (Trajectory, Result<()>)
where
    R: FnMut(&GcState) -> Result<(Vec3, f64)>,
{
    let vs = if v_ref > 0.0 { v_ref } else { 1.0 };
    let mut sys = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = GcState { x: Vec3::new(y[0], y[1], y[2]), v_par: y[3] * vs };
        let (xd, vd) = rhs(&s)?;
        Ok([xd.x, xd.y, xd.z, vd / vs])
    };
    let y0 = [s0.x.x, s0.x.y, s0.x.z, s0.v_par / vs];
    let times = crate::ode::linspace(0.0, t_end, n_samples.max(2));
    let (sol, status) = crate::ode::integrate_partial(&mut sys, 0.0, y0, t_end, &times, opts);
    let traj = Trajectory {
        t: sol.t,
        states: sol.y.iter().map(|y| GcState { x: Vec3::new(y[0], y[1], y[2]), v_par: y[3] * vs }).collect(),
        n_steps: sol.n_steps,
    };
    (traj, status)
}

/// Integrate the Lorentz equations, returning `(t, q, v)` samples.
pub fn integrate_lorentz<F: VectorField + ?Sized>(
    q0: Vec3,
    v0: Vec3,
    p: &Particle,
    field: &F,
    times: &[f64],
    opts: OdeOptions,
) -> Result<Vec<(f64, Vec3, Vec3)>> {
    let vs = v0.norm().max(f64::MIN_POSITIVE);
    let mut sys = |_t: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        let q = Vec3::new(y[0], y[1], y[2]);
        let v = Vec3::new(y[3], y[4], y[5]) * vs;
        let (qd, vd) = lorentz_rhs(q, v, p, field)?;
        Ok([qd.x, qd.y, qd.z, vd.x / vs, vd.y / vs, vd.z / vs])
    };
    let t_end = *times.last().ok_or_else(|| Error::InvalidInput("no sample times".into()))?;
    let y0 = [q0.x, q0.y, q0.z, v0.x / vs, v0.y / vs, v0.z / vs];
    let sol = crate::ode::integrate(&mut sys, 0.0, y0, t_end, times, opts)?;
    Ok(sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(t, y)| (*t, Vec3::new(y[0], y[1], y[2]), Vec3::new(y[3], y[4], y[5]) * vs))
        .collect())
}

/// Guiding-centre initial data matched to a Lorentz orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroAverage {
    pub state: GcState,
    pub mu: f64,
    /// Lorentz time at which `state` applies (middle of the averaging window).
    pub t_mid: f64,
}

/// Average `gc_decompose` over the first gyration of the Lorentz orbit from (q, v).
///
/// The pointwise decomposition carries an O(ρ) gyrophase-dependent offset in X and v∥;
/// starting a guiding-centre run from it leaves an O(ρ) error that grows along the field.
/// Averaging over one gyroperiod removes the oscillating part.
pub fn gyro_averaged_gc<F: VectorField + ?Sized>(q: Vec3, v: Vec3, p: &Particle, field: &F, samples: usize) -> Result<GyroAverage> {
    if samples < 8 {
        return Err(Error::InvalidInput("gyro average needs at least 8 samples".into()));
    }
    let modb = field.value(q)?.norm();
    if modb == 0.0 {
        return Err(Error::ZeroField);
    }
    let tg = 2.0 * core::f64::consts::PI * p.m / (p.e.abs() * modb);
    let n = samples as f64;
    let times: Vec<f64> = (0..samples).map(|i| tg * i as f64 / n).collect();
    let orbit = integrate_lorentz(q, v, p, field, &times, OdeOptions::with_tol(1e-12, 1e-14))?;
    let (mut x, mut v_par, mut mu) = (Vec3::ZERO, 0.0, 0.0);
    for (_, qi, vi) in &orbit {
        let d = gc_decompose(*qi, *vi, p, field)?;
        x = x + d.x;
        v_par += d.v_par;
        mu += d.mu;
    }
    Ok(GyroAverage { state: GcState { x: x / n, v_par: v_par / n }, mu: mu / n, t_mid: tg * (n - 1.0) / (2.0 * n) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    Circulating,
    Bouncing,
    Undetermined,
}

/// Classify an orbit from its v∥ history.
///
/// Two or more sign reversals of v∥ mean bouncing; no reversal together with at
/// least one full toroidal transit (or μ = 0) means circulating.
pub fn classify(traj: &Trajectory, mu: f64) -> OrbitClass {
    if traj.len() < 2 {
        return OrbitClass::Undetermined;
    }
    let mut reversals = 0;
    let mut prev = 0.0f64;
    for s in &traj.states {
        if s.v_par != 0.0 {
            if prev != 0.0 && prev.signum() != s.v_par.signum() {
                reversals += 1;
            }
            prev = s.v_par;
        }
    }
    if reversals >= 2 {
        return OrbitClass::Bouncing;
    }
    if reversals == 1 {
        return OrbitClass::Undetermined;
    }
    if mu == 0.0 {
        return OrbitClass::Circulating;
    }
    let mut turned = 0.0;
    for w in traj.states.windows(2) {
        let mut d = w[1].x.cyl_phi() - w[0].x.cyl_phi();
        if d > core::f64::consts::PI {
            d -= 2.0 * core::f64::consts::PI;
        } else if d < -core::f64::consts::PI {
            d += 2.0 * core::f64::consts::PI;
        }
        turned += d;
    }
    if turned.abs() >= 2.0 * core::f64::consts::PI {
        OrbitClass::Circulating
    } else {
        OrbitClass::Undetermined
    }
}

/// The two flux values compatible with (K, E, μ) at `x`, and the v∥ each implies.
///
/// ψ± = −K/e ± (u·b)/e √(2m(E − μ|B|)); v∥ = (eψ + K)/(m u·b) for the K of [`invariants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusBranches {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub v_plus: f64,
    pub v_minus: f64,
}

pub fn torus_project<F, U>(k: f64, energy: f64, p: &Particle, field: &F, u: &U, x: Vec3) -> Result<TorusBranches>
where
    F: VectorField + ?Sized,
    U: VectorField + ?Sized,
{
    let b = field.value(x)?;
    let modb = b.norm();
    if modb == 0.0 {
        return Err(Error::ZeroField);
    }
    let ub = u.value(x)?.dot(b) / modb;
    if ub == 0.0 {
        return Err(Error::DegenerateUb);
    }
    let kin = energy - p.mu * modb;
    if kin < 0.0 {
        return Err(Error::NoReal);
    }
    let root = libm::sqrt(2.0 * p.m * kin);
    let psi_plus = -k / p.e + ub / p.e * root;
    let psi_minus = -k / p.e - ub / p.e * root;
    let vpl = |psi: f64| (p.e * psi + k) / (p.m * ub);
    Ok(TorusBranches { psi_plus, psi_minus, v_plus: vpl(psi_plus), v_minus: vpl(psi_minus) })
}

/// Step an FGCM orbit until v∥ changes sign; returns the turning time and state.
pub fn next_turning_point<F: VectorField + ?Sized>(
    s0: GcState,
    p: &Particle,
    field: &F,
    t_max: f64,
    v_ref: f64,
    opts: OdeOptions,
) -> Result<(f64, GcState)> {
    let vs = if v_ref > 0.0 { v_ref } else { 1.0 };
    let mut sys = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = GcState { x: Vec3::new(y[0], y[1], y[2]), v_par: y[3] * vs };
        let (xd, vd) = fgcm_rhs(&s, p, field, DEFAULT_BPAR_FLOOR)?;
        Ok([xd.x, xd.y, xd.z, vd / vs])
    };
    let y0 = [s0.x.x, s0.x.y, s0.x.z, s0.v_par / vs];
    let mut st = Dopri5::new(&mut sys, 0.0, y0, 1.0, opts)?;
    while st.t < t_max {
        st.step(&mut sys, t_max)?;
        if let Some((t, y)) = st.locate(|_, y| y[3], 1e-14 * t_max.max(1e-300)) {
            return Ok((t, GcState { x: Vec3::new(y[0], y[1], y[2]), v_par: y[3] * vs }));
        }
    }
    Err(Error::NotClosed)
}
