//! Flux-surface diagnostics: flux values, field-line tracing, surface loops, winding ratios,
//! closed u-lines, angle charts built from two commuting flows, and the arc-length check.
//!
//! Surfaces are never meshed. A surface is the level set of a flux function through a point,
//! and loops on it are found by root-finding along rays in a meridional half-plane.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::linalg::{inverse2, Vec3};
use crate::ode::{integrate, linspace, Dopri5, OdeOptions};
use crate::quad;

fn v3(y: &[f64; 3]) -> Vec3 {
    Vec3::from_array(*y)
}

fn singular(e: Error) -> Error {
    match e {
        Error::OutOfDomain | Error::NonFinite | Error::ZeroField | Error::ZeroU => Error::PathThroughSingularity,
        other => other,
    }
}

/// ∫ (B×u)·dl along the polyline `path`, adaptive Gauss–Legendre on each segment.
///
/// Equals ψ(end) − ψ(start) wherever B×u is a gradient.
pub fn flux_value<B, U>(b: &B, u: &U, path: &[Vec3], tol: f64) -> Result<f64>
where
    B: VectorField + ?Sized,
    U: VectorField + ?Sized,
{
    if path.len() < 2 {
        return Ok(0.0);
    }
    let seg_tol = tol / (path.len() - 1) as f64;
    let mut total = 0.0;
    for w in path.windows(2) {
        let (a, d) = (w[0], w[1] - w[0]);
        if d.norm() == 0.0 {
            continue;
        }
        let f = |s: f64| {
            let x = a + d * s;
            let bv = b.value(x).map_err(singular)?;
            let uv = u.value(x).map_err(singular)?;
            Ok(bv.cross(uv).dot(d))
        };
        total += quad::adaptive(f, 0.0, 1.0, seg_tol, 30)?;
    }
    Ok(total)
}

/// Position after following `field` for parameter time `t` (either sign).
pub fn flow<X: VectorField + ?Sized>(field: &X, x0: Vec3, t: f64, opts: OdeOptions) -> Result<Vec3> {
    let mut rhs = |_t: f64, y: &[f64; 3]| field.value(v3(y)).map(Vec3::to_array);
    let sol = integrate(&mut rhs, 0.0, x0.to_array(), t, &[], opts)?;
    Ok(v3(&sol.y[0]))
}

fn unit_rhs<F: VectorField + ?Sized>(field: &F) -> impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3]> + '_ {
    move |_t, y| {
        let v = field.value(v3(y))?;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::ZeroField);
        }
        Ok((v / n).to_array())
    }
}

/// Unit-speed field line from `x0`, sampled at `n` equally spaced arclengths in `[0, length]`.
pub fn trace_fieldline<F: VectorField + ?Sized>(
    field: &F,
    x0: Vec3,
    length: f64,
    n: usize,
    opts: OdeOptions,
) -> Result<Vec<Vec3>> {
    let mut rhs = unit_rhs(field);
    let sol = integrate(&mut rhs, 0.0, x0.to_array(), length, &linspace(0.0, length, n), opts)?;
    Ok(sol.y.iter().map(v3).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    Poloidal,
    Toroidal,
}

/// Closed loop sampled at equally spaced parameter values over one turn (θ ∈ [0, 2π)),
/// carrying the tangents dx/dθ.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLoop {
    pub kind: LoopKind,
    pub points: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
}

impl SurfaceLoop {
    /// ∮ g(x, dx/dθ) dθ by the periodic trapezoid rule (spectrally accurate for smooth loops).
    pub fn integrate<G: FnMut(Vec3, Vec3) -> Result<f64>>(&self, mut g: G) -> Result<f64> {
        let h = TAU / self.points.len() as f64;
        let mut s = 0.0;
        for (p, t) in self.points.iter().zip(&self.tangents) {
            s += g(*p, *t)?;
        }
        Ok(s * h)
    }

    pub fn length(&self) -> f64 {
        self.integrate(|_, t| Ok(t.norm())).unwrap_or(f64::NAN)
    }

    /// Largest |ψ − level| over the samples.
    pub fn level_deviation<P: ScalarField + ?Sized>(&self, psi: &P, level: f64) -> Result<f64> {
        let mut dev: f64 = 0.0;
        for p in &self.points {
            dev = dev.max((psi.value(*p)? - level).abs());
        }
        Ok(dev)
    }
}

/// Circle of constant (r, z) through `x`, oriented along +φ.
pub fn toroidal_loop(x: Vec3, n: usize) -> SurfaceLoop {
    let (r, phi0, z) = (x.cyl_r(), x.cyl_phi(), x.z);
    let mut points = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let phi = phi0 + TAU * i as f64 / n as f64;
        let (s, c) = libm::sincos(phi);
        points.push(Vec3::from_cylindrical(r, phi, z));
        tangents.push(Vec3::new(-r * s, r * c, 0.0));
    }
    SurfaceLoop { kind: LoopKind::Toroidal, points, tangents }
}

/// Level curve of ψ through `x` in its meridional half-plane, parametrised by the polar angle
/// about `axis = (r_c, z_c)` and oriented counter-clockwise in (r, z).
///
/// Each sample is a ray root; the curve must be star-shaped about the axis.
pub fn poloidal_loop<P: ScalarField + ?Sized>(psi: &P, x: Vec3, axis: (f64, f64), n: usize) -> Result<SurfaceLoop> {
    let level = psi.value(x)?;
    let phi0 = x.cyl_phi();
    let (sp, cp) = libm::sincos(phi0);
    let rhat = Vec3::new(cp, sp, 0.0);
    let at = |rho: f64, th: f64| {
        let (s, c) = libm::sincos(th);
        Vec3::from_cylindrical(axis.0 + rho * c, phi0, axis.1 + rho * s)
    };
    let inside = psi.value(at(0.0, 0.0))? - level;
    if inside == 0.0 {
        return Err(Error::DegenerateGradPsi);
    }
    let (dr, dz) = (x.cyl_r() - axis.0, x.z - axis.1);
    let th0 = libm::atan2(dz, dr);
    let mut rho = libm::hypot(dr, dz);
    if rho == 0.0 {
        return Err(Error::InvalidInput("point lies on the axis".to_string()));
    }
    let mut points = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let th = th0 + TAU * i as f64 / n as f64;
        let g = |r: f64| -> Result<f64> { Ok(psi.value(at(r, th))? - level) };
        rho = ray_root(g, rho, inside.signum())?;
        let p = at(rho, th);
        let grad = psi.jet1(p)?.grad;
        let (s, c) = libm::sincos(th);
        let e_rho = rhat * c + Vec3::Z * s;
        let e_th = rhat * (-s) + Vec3::Z * c;
        let gr = grad.dot(e_rho);
        if gr == 0.0 {
            return Err(Error::DegenerateGradPsi);
        }
        let drho = -rho * grad.dot(e_th) / gr;
        points.push(p);
        tangents.push(e_rho * drho + e_th * rho);
    }
    Ok(SurfaceLoop { kind: LoopKind::Poloidal, points, tangents })
}

/// Root of `g` along a ray, bracketed outward or inward from `guess`. `inside` is the sign of
/// `g` near the ray origin.
fn ray_root<G: Fn(f64) -> Result<f64>>(g: G, guess: f64, inside: f64) -> Result<f64> {
    let (mut lo, mut hi);
    if g(guess)?.signum() == inside {
        lo = guess;
        hi = guess * 1.25;
        let mut k = 0;
        while g(hi)?.signum() == inside {
            lo = hi;
            hi *= 1.25;
            k += 1;
            if k > 80 {
                return Err(Error::NoConvergence { iterations: k, residual: f64::NAN });
            }
        }
    } else {
        hi = guess;
        lo = guess * 0.8;
        let mut k = 0;
        while g(lo)?.signum() != inside {
            hi = lo;
            lo *= 0.8;
            k += 1;
            if k > 160 {
                return Err(Error::NoConvergence { iterations: k, residual: f64::NAN });
            }
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == inside {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Poloidal and toroidal loops through `x` on its ψ level set.
pub fn surface_loops<P: ScalarField + ?Sized>(
    psi: &P,
    x: Vec3,
    axis: (f64, f64),
    n: usize,
) -> Result<(SurfaceLoop, SurfaceLoop)> {
    Ok((poloidal_loop(psi, x, axis, n)?, toroidal_loop(x, n)))
}

fn projective(num: f64, den: f64) -> f64 {
    if den.abs() <= 1e-13 * num.abs() {
        f64::INFINITY
    } else {
        num / den + 0.0
    }
}

/// Loop-integral winding ratio and the two integrals it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingFormula {
    /// Poloidal turns per toroidal turn; `INFINITY` for the vertical class.
    pub iota: f64,
    pub poloidal_integral: f64,
    pub toroidal_integral: f64,
}

/// Winding ratio of `x_field` from the conserved area form n·(ξ×η), n = ∇ψ/|∇ψ|².
///
/// With I_j the loop integral of n·(X×t) over the loop turning once in θʲ, the ratio of θ¹ to
/// θ² revolutions is −I₂/I₁ (θ¹ poloidal, θ² toroidal).
pub fn winding_ratio_formula<X, P>(x_field: &X, psi: &P, poloidal: &SurfaceLoop, toroidal: &SurfaceLoop) -> Result<WindingFormula>
where
    X: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let integrand = |p: Vec3, t: Vec3| -> Result<f64> {
        let g = psi.jet1(p)?.grad;
        let g2 = g.norm_sq();
        if g2 == 0.0 {
            return Err(Error::DegenerateGradPsi);
        }
        Ok(g.dot(x_field.value(p)?.cross(t)) / g2)
    };
    let i1 = poloidal.integrate(integrand)?;
    let i2 = toroidal.integrate(integrand)?;
    Ok(WindingFormula { iota: projective(-i2, i1), poloidal_integral: i1, toroidal_integral: i2 })
}

fn unwrap(raw: f64, reference: f64) -> f64 {
    raw + TAU * libm::round((reference - raw) / TAU)
}

fn angles(y: &[f64; 3], axis: (f64, f64)) -> (f64, f64) {
    let r = libm::hypot(y[0], y[1]);
    (libm::atan2(y[2] - axis.1, r - axis.0), libm::atan2(y[1], y[0]))
}

/// Trajectory winding ratio with per-turn increments.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingTraj {
    pub iota: f64,
    /// Angle that completed the counted turns.
    pub dominant: LoopKind,
    /// Increment of the other angle over each counted turn.
    pub per_turn: Vec<f64>,
}

/// Winding ratio from a trajectory of `x_field` starting at `x0`.
///
/// Counts `n_turns` full turns of whichever angle (poloidal about `axis`, or toroidal) advances
/// faster, records the other angle at each completed turn, and takes a smooth-weighted
/// (Birkhoff) average of the increments, which converges faster than the plain ratio.
pub fn winding_ratio_traj<X: VectorField + ?Sized>(
    x_field: &X,
    x0: Vec3,
    axis: (f64, f64),
    n_turns: usize,
    opts: OdeOptions,
) -> Result<WindingTraj> {
    if n_turns == 0 {
        return Err(Error::InvalidInput("n_turns must be positive".to_string()));
    }
    let mut rhs = |_t: f64, y: &[f64; 3]| x_field.value(v3(y)).map(Vec3::to_array);
    let y0 = x0.to_array();
    let (p0, t0) = angles(&y0, axis);

    // Probe: which angle completes a turn first, and in which sense.
    let (dominant, sense) = {
        let mut st = Dopri5::new(&mut rhs, 0.0, y0, 1.0, opts)?;
        let (mut a1, mut a2) = (p0, t0);
        loop {
            st.step(&mut rhs, f64::INFINITY)?;
            let (r1, r2) = angles(&st.y, axis);
            let (n1, n2) = (unwrap(r1, a1), unwrap(r2, a2));
            check_angle_step(n1 - a1, n2 - a2, st.t)?;
            a1 = n1;
            a2 = n2;
            if (a1 - p0).abs() >= TAU {
                break (LoopKind::Poloidal, (a1 - p0).signum());
            }
            if (a2 - t0).abs() >= TAU {
                break (LoopKind::Toroidal, (a2 - t0).signum());
            }
        }
    };
    let pick = |a: (f64, f64)| if dominant == LoopKind::Poloidal { a } else { (a.1, a.0) };
    let (d0, o0) = pick((p0, t0));

    let mut st = Dopri5::new(&mut rhs, 0.0, y0, 1.0, opts)?;
    let (mut dom, mut oth) = (d0, o0);
    let mut marks = Vec::with_capacity(n_turns + 1);
    marks.push(o0);
    while marks.len() <= n_turns {
        st.step(&mut rhs, f64::INFINITY)?;
        let (nd, no) = {
            let raw = pick(angles(&st.y, axis));
            (unwrap(raw.0, dom), unwrap(raw.1, oth))
        };
        check_angle_step(nd - dom, no - oth, st.t)?;
        let target = d0 + sense * TAU * marks.len() as f64;
        if (nd - target) * sense >= 0.0 {
            let (dref, oref) = (dom, oth);
            let g = |_t: f64, y: &[f64; 3]| unwrap(pick(angles(y, axis)).0, dref) - target;
            let (_, yc) = st.locate(g, 1e-13 * st.t.abs().max(1.0)).unwrap_or((st.t, st.y));
            marks.push(unwrap(pick(angles(&yc, axis)).1, oref));
        }
        dom = nd;
        oth = no;
    }
    let per_turn: Vec<f64> = marks.windows(2).map(|w| w[1] - w[0]).collect();
    let n = per_turn.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, inc) in per_turn.iter().enumerate() {
        let s = (k as f64 + 0.5) / n;
        let w = libm::exp(-1.0 / (s * (1.0 - s)));
        num += w * inc;
        den += w;
    }
    let avg = num / den;
    let iota = match dominant {
        LoopKind::Toroidal => avg / (sense * TAU) + 0.0,
        LoopKind::Poloidal => projective(sense * TAU, avg),
    };
    Ok(WindingTraj { iota, dominant, per_turn })
}

fn check_angle_step(d1: f64, d2: f64, t: f64) -> Result<()> {
    if d1.abs() > 0.5 * PI || d2.abs() > 0.5 * PI {
        return Err(Error::StepFailure { t, reason: "angle advanced too far in one step; lower max_step".to_string() });
    }
    Ok(())
}

/// Parameter time of the first return of the `u`-flow to `x0`.
///
/// Returns are detected on the plane through `x0` normal to u(x0), crossed in the direction of
/// u, and accepted when the crossing lies within `tol` of `x0`.
pub fn u_line_period<U: VectorField + ?Sized>(u: &U, x0: Vec3, t_max: f64, tol: f64, opts: OdeOptions) -> Result<f64> {
    let u0 = u.value(x0)?;
    if u0.norm() == 0.0 {
        return Err(Error::ZeroU);
    }
    let mut rhs = |_t: f64, y: &[f64; 3]| u.value(v3(y)).map(Vec3::to_array);
    let mut st = Dopri5::new(&mut rhs, 0.0, x0.to_array(), 1.0, opts)?;
    let g = |_t: f64, y: &[f64; 3]| (v3(y) - x0).dot(u0);
    while st.t < t_max {
        st.step(&mut rhs, t_max)?;
        let (ga, gb) = (g(0.0, &st.y_prev), g(0.0, &st.y));
        if ga < 0.0 && gb >= 0.0 {
            if let Some((tc, yc)) = st.locate(g, 1e-15 * st.t.abs().max(1.0)) {
                if (v3(&yc) - x0).norm() <= tol {
                    return Ok(tc);
                }
            }
        }
    }
    Err(Error::NotClosed)
}

/// Angle chart on a torus carrying two commuting flows.
///
/// The period lattice {(t₁, t₂) : Φᵘ_{t₁}∘Φᴮ_{t₂}(base) = base} is generated by `t1` and `t2`;
/// angles θ map to times A θ/2π with A = [t1 t2] (columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ALChart {
    pub base: Vec3,
    pub t1: [f64; 2],
    pub t2: [f64; 2],
}

impl ALChart {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.t1[0], self.t2[0]], [self.t1[1], self.t2[1]]]
    }

    /// Constant chart components of the two flows: columns of 2πA⁻¹.
    pub fn frequencies(&self) -> Result<([f64; 2], [f64; 2])> {
        let inv = inverse2(self.matrix()).ok_or(Error::NoLattice)?;
        Ok(([TAU * inv[0][0], TAU * inv[1][0]], [TAU * inv[0][1], TAU * inv[1][1]]))
    }

    pub fn point<U, B>(&self, u: &U, b: &B, theta: [f64; 2], opts: OdeOptions) -> Result<Vec3>
    where
        U: VectorField + ?Sized,
        B: VectorField + ?Sized,
    {
        let a = self.matrix();
        let tu = (a[0][0] * theta[0] + a[0][1] * theta[1]) / TAU;
        let tb = (a[1][0] * theta[0] + a[1][1] * theta[1]) / TAU;
        flow(u, flow(b, self.base, tb, opts)?, tu, opts)
    }

    /// Chart components of `x_field` at θ: least squares against central differences of the
    /// chart map with step `h`.
    pub fn pushforward<X, U, B>(&self, x_field: &X, u: &U, b: &B, theta: [f64; 2], h: f64, opts: OdeOptions) -> Result<[f64; 2]>
    where
        X: VectorField + ?Sized,
        U: VectorField + ?Sized,
        B: VectorField + ?Sized,
    {
        let p = |d0: f64, d1: f64| self.point(u, b, [theta[0] + d0, theta[1] + d1], opts);
        let e0 = (p(h, 0.0)? - p(-h, 0.0)?) / (2.0 * h);
        let e1 = (p(0.0, h)? - p(0.0, -h)?) / (2.0 * h);
        let xv = x_field.value(p(0.0, 0.0)?)?;
        let g = [[e0.dot(e0), e0.dot(e1)], [e1.dot(e0), e1.dot(e1)]];
        let gi = inverse2(g).ok_or(Error::DegenerateBasis)?;
        let rhs = [e0.dot(xv), e1.dot(xv)];
        Ok([gi[0][0] * rhs[0] + gi[0][1] * rhs[1], gi[1][0] * rhs[0] + gi[1][1] * rhs[1]])
    }
}

/// Build the chart of the commuting pair (u, B) through `base`.
///
/// t1 is the u-period. t2 is the first return of the B-line to the u-orbit of `base`, found by
/// projecting B-line points along u onto the plane through `base` normal to u and locating
/// the crossing of `base` there, then polished by Gauss–Newton on the return map.
pub fn al_chart<U, B>(u: &U, b: &B, base: Vec3, t_max: f64, tol: f64, opts: OdeOptions) -> Result<ALChart>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
{
    let tau = u_line_period(u, base, t_max, tol, opts).map_err(|e| match e {
        Error::NotClosed => Error::NoLattice,
        other => other,
    })?;
    let u0 = u.value(base)?;
    let b0 = b.value(base)?;
    let uhat = u0 / u0.norm();
    let e = b0 - uhat * b0.dot(uhat);
    if e.norm() <= 1e-12 * b0.norm() {
        return Err(Error::DegenerateBasis);
    }
    let e = e / e.norm();

    // u-flow time from y to its crossing of the section, and the crossing point.
    let project = |y: Vec3| -> Result<(f64, Vec3)> {
        let mut rhs = |_t: f64, z: &[f64; 3]| u.value(v3(z)).map(Vec3::to_array);
        let mut st = Dopri5::new(&mut rhs, 0.0, y.to_array(), 1.0, opts)?;
        let g = |_t: f64, z: &[f64; 3]| (v3(z) - base).dot(uhat);
        if g(0.0, &st.y) == 0.0 {
            return Ok((0.0, y));
        }
        let t_end = 1.5 * tau;
        while st.t < t_end {
            st.step(&mut rhs, t_end)?;
            if g(0.0, &st.y_prev) < 0.0 && g(0.0, &st.y) >= 0.0 {
                if let Some((tc, zc)) = st.locate(g, 1e-14 * tau) {
                    return Ok((tc, v3(&zc)));
                }
            }
        }
        Err(Error::NoLattice)
    };

    let mut rhs_b = |_t: f64, z: &[f64; 3]| b.value(v3(z)).map(Vec3::to_array);
    let mut st = Dopri5::new(&mut rhs_b, 0.0, base.to_array(), 1.0, opts)?;
    let mut sigma_prev = 0.0;
    let mut dmax: f64 = 0.0;
    let mut found = None;
    while st.t < t_max {
        st.step(&mut rhs_b, t_max)?;
        let (_, p) = project(v3(&st.y))?;
        let sigma = (p - base).dot(e);
        let d = (p - base).norm();
        dmax = dmax.max(d);
        if sigma_prev < 0.0 && sigma >= 0.0 && d < 0.25 * dmax {
            found = Some((st.t_prev, st.t));
            break;
        }
        sigma_prev = sigma;
    }
    let (mut lo, mut hi) = found.ok_or(Error::NoLattice)?;
    for _ in 0..80 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let m = 0.5 * (lo + hi);
        let (_, p) = project(v3(&st.dense(m)))?;
        if (p - base).dot(e) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mut t2 = 0.5 * (lo + hi);
    let (s, _) = project(v3(&st.dense(t2)))?;
    let mut t1 = s - tau * libm::round(s / tau);

    // Gauss–Newton on Φᵘ_{t1}Φᴮ_{t2}(base) = base, Jacobian columns u and B at the base.
    let scale = base.norm().max(1.0);
    let gram = [[u0.dot(u0), u0.dot(b0)], [b0.dot(u0), b0.dot(b0)]];
    let gi = inverse2(gram).ok_or(Error::DegenerateBasis)?;
    let mut resid = f64::INFINITY;
    for _ in 0..8 {
        let f = flow(u, flow(b, base, t2, opts)?, t1, opts)? - base;
        resid = f.norm();
        if resid <= 1e-13 * scale {
            break;
        }
        let r = [u0.dot(f), b0.dot(f)];
        t1 -= gi[0][0] * r[0] + gi[0][1] * r[1];
        t2 -= gi[1][0] * r[0] + gi[1][1] * r[1];
    }
    if !(resid <= tol) {
        return Err(Error::NoLattice);
    }
    Ok(ALChart { base, t1: [tau, 0.0], t2: [t1, t2] })
}

/// Mean and standard deviation of chart components over a sample of angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartCheck {
    pub u_mean: [f64; 2],
    pub u_std: [f64; 2],
    pub b_mean: [f64; 2],
    pub b_std: [f64; 2],
}

pub fn check_chart<U, B>(chart: &ALChart, u: &U, b: &B, samples: &[[f64; 2]], h: f64, opts: OdeOptions) -> Result<ChartCheck>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
{
    let mut us = Vec::with_capacity(samples.len());
    let mut bs = Vec::with_capacity(samples.len());
    for th in samples {
        us.push(chart.pushforward(u, u, b, *th, h, opts)?);
        bs.push(chart.pushforward(b, u, b, *th, h, opts)?);
    }
    let (u_mean, u_std) = mean_std(&us);
    let (b_mean, b_std) = mean_std(&bs);
    Ok(ChartCheck { u_mean, u_std, b_mean, b_std })
}

fn mean_std(v: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let n = v.len().max(1) as f64;
    let mut m = [0.0; 2];
    for a in v {
        m[0] += a[0] / n;
        m[1] += a[1] / n;
    }
    let mut s = [0.0; 2];
    for a in v {
        s[0] += (a[0] - m[0]) * (a[0] - m[0]) / n;
        s[1] += (a[1] - m[1]) * (a[1] - m[1]) / n;
    }
    (m, [libm::sqrt(s[0]), libm::sqrt(s[1])])
}

/// Field-line segment lengths between |B| = k0 and |B| = k1 along a family flowed by u.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLengthReport {
    pub base_length: f64,
    /// (λ, length) per requested flow parameter.
    pub lengths: Vec<(f64, f64)>,
    pub max_deviation: f64,
}

struct Crossing {
    s: f64,
    x: Vec3,
    /// +1 when |B| increases with arclength along +b.
    orientation: f64,
}

/// First crossing of |B| = k along the unit-speed line from `x`, travelling in `dir`.
fn level_crossing<B: VectorField + ?Sized>(
    b: &B,
    x: Vec3,
    k: f64,
    dir: f64,
    orientation: Option<f64>,
    s_max: f64,
    opts: OdeOptions,
) -> Result<Option<Crossing>> {
    let g = |_t: f64, y: &[f64; 3]| b.value(v3(y)).map(|v| v.norm() - k).unwrap_or(f64::NAN);
    if g(0.0, &x.to_array()) == 0.0 {
        let gj = b.jet1(x)?;
        let bn = gj.value.norm();
        let grad_mod = gj.jac.apply_t(gj.value / bn);
        let o = (gj.value / bn).dot(grad_mod).signum();
        if orientation.is_none_or(|w| w == o) {
            return Ok(Some(Crossing { s: 0.0, x, orientation: o }));
        }
    }
    let mut rhs = unit_rhs(b);
    let mut st = Dopri5::new(&mut rhs, 0.0, x.to_array(), dir, opts)?;
    let t_end = dir * s_max;
    while (t_end - st.t) * dir > 0.0 {
        st.step(&mut rhs, t_end)?;
        let (ga, gb) = (g(0.0, &st.y_prev), g(0.0, &st.y));
        if ga * gb <= 0.0 && ga != 0.0 {
            let o = (gb - ga).signum() * dir;
            if orientation.is_none_or(|w| w == o) {
                if let Some((tc, yc)) = st.locate(g, 1e-14 * s_max.max(1.0)) {
                    return Ok(Some(Crossing { s: tc.abs(), x: v3(&yc), orientation: o }));
                }
            }
        }
    }
    Ok(None)
}

/// Flow the field-line segment between the first |B| = k0 and following |B| = k1 crossings
/// from `x_start` by u for each λ, and re-measure the segment on the flowed line.
///
/// For each λ the flowed start point is snapped to the nearest k0 crossing with the same
/// orientation, then the line is followed to the next k1 crossing. `s_max` bounds every
/// search along a line.
pub fn arc_length_invariance<B, U>(
    b: &B,
    u: &U,
    x_start: Vec3,
    k0: f64,
    k1: f64,
    lambdas: &[f64],
    s_max: f64,
    opts: OdeOptions,
) -> Result<ArcLengthReport>
where
    B: VectorField + ?Sized,
    U: VectorField + ?Sized,
{
    let c0 = level_crossing(b, x_start, k0, 1.0, None, s_max, opts)?.ok_or(Error::LevelsNotCrossed)?;
    let c1 = level_crossing(b, c0.x, k1, 1.0, None, s_max, opts)?.ok_or(Error::LevelsNotCrossed)?;
    let base_length = c1.s;
    let mut lengths = Vec::with_capacity(lambdas.len());
    let mut max_deviation: f64 = 0.0;
    for &lam in lambdas {
        let len = if lam == 0.0 {
            base_length
        } else {
            let x = flow(u, c0.x, lam, opts)?;
            let fwd = level_crossing(b, x, k0, 1.0, Some(c0.orientation), s_max, opts)?;
            let bwd = level_crossing(b, x, k0, -1.0, Some(c0.orientation), s_max, opts)?;
            let start = match (fwd, bwd) {
                (Some(f), Some(bk)) => {
                    if f.s <= bk.s {
                        f
                    } else {
                        bk
                    }
                }
                (Some(f), None) => f,
                (None, Some(bk)) => bk,
                (None, None) => return Err(Error::LevelsNotCrossed),
            };
            level_crossing(b, start.x, k1, 1.0, None, s_max, opts)?.ok_or(Error::LevelsNotCrossed)?.s
        };
        max_deviation = max_deviation.max((len - base_length).abs());
        lengths.push((lam, len));
    }
    Ok(ArcLengthReport { base_length, lengths, max_deviation })
}
