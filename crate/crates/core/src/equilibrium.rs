//! Magnetohydrostatic relations: force balance, the reconstructions linking (B, u, ψ, C, p),
//! the F coefficient and the Boozer commutator.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::diffgeo::{curl_jet, lie_bracket};
use crate::error::{Error, Result};
use crate::fields::{Jet1, ScalarField, VectorField};
use crate::fluxsurf::poloidal_loop;
use crate::linalg::{Mat3, Vec3};

/// Natural cubic spline through tabulated points, extended linearly outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput("spline needs at least two (x, y) pairs of equal length".to_string()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline abscissae must increase strictly".to_string()));
        }
        // Tridiagonal solve for second derivatives, m₀ = m_{n−1} = 0.
        let mut m = alloc::vec![0.0; n];
        if n > 2 {
            let mut c = alloc::vec![0.0; n];
            let mut d = alloc::vec![0.0; n];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (r - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Ok(CubicSpline { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value and first derivative.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (x, y, m) = (&self.x, &self.y, &self.m);
        let n = x.len();
        if t < x[0] || t > x[n - 1] {
            let (i, j) = if t < x[0] { (0, 1) } else { (n - 2, n - 1) };
            let h = x[j] - x[i];
            let slope = (y[j] - y[i]) / h;
            let (edge, d) = if t < x[0] {
                (0, slope - h * (2.0 * m[i] + m[j]) / 6.0)
            } else {
                (n - 1, slope + h * (m[i] + 2.0 * m[j]) / 6.0)
            };
            return (y[edge] + d * (t - x[edge]), d);
        }
        let i = self.segment(t);
        let h = x[i + 1] - x[i];
        let (a, b) = ((x[i + 1] - t) / h, (t - x[i]) / h);
        let v = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
        let dv = (y[i + 1] - y[i]) / h + ((1.0 - 3.0 * a * a) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
        (v, dv)
    }
}

/// A function of ψ.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Σ cₖ ψᵏ.
    Poly(Vec<f64>),
    Spline(CubicSpline),
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Profile::Poly(alloc::vec![c])
    }

    pub fn value(&self, psi: f64) -> f64 {
        self.eval(psi).0
    }

    pub fn deriv(&self, psi: f64) -> f64 {
        self.eval(psi).1
    }

    pub fn eval(&self, psi: f64) -> (f64, f64) {
        match self {
            Profile::Poly(c) => {
                let (mut v, mut d) = (0.0, 0.0);
                for &ck in c.iter().rev() {
                    d = d * psi + v;
                    v = v * psi + ck;
                }
                (v, d)
            }
            Profile::Spline(s) => s.eval(psi),
        }
    }

    /// ∫ₐᵇ f(ψ) dψ, exact for both representations.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Poly(c) => {
                let prim = |t: f64| c.iter().enumerate().rev().fold(0.0, |acc, (k, &ck)| acc * t + ck / (k + 1) as f64) * t;
                prim(b) - prim(a)
            }
            Profile::Spline(s) => {
                // two-point Gauss is exact on each cubic piece and on the linear tails
                let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                let mut cuts: Vec<f64> = s.x.iter().copied().filter(|&k| k > lo && k < hi).collect();
                cuts.insert(0, lo);
                cuts.push(hi);
                let g = 0.5 / libm::sqrt(3.0);
                let total: f64 = cuts
                    .windows(2)
                    .map(|w| {
                        let (m, h) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
                        0.5 * h * (s.eval(m - g * h).0 + s.eval(m + g * h).0)
                    })
                    .sum();
                sign * total
            }
        }
    }
}

/// Pressure p(ψ) and covariant toroidal function C(ψ).
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub p: Profile,
    pub c: Profile,
}

impl Profiles {
    /// p = p₀ − p₁ψ and C = C₀, the profiles of the Solov'ev fixture.
    pub fn solovev(p0: f64, p1: f64, c0: f64) -> Self {
        Profiles { p: Profile::Poly(alloc::vec![p0, -p1]), c: Profile::constant(c0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhsReport {
    /// J×B − ∇p.
    pub force: Vec3,
    /// B·∇p.
    pub p_surface: f64,
}

pub fn mhs_residual<B, P>(b: &B, psi: &P, profiles: &Profiles, x: Vec3) -> Result<MhsReport>
where
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let bj = b.jet2(x)?;
    let j = curl_jet(&bj).value;
    let pj = psi.jet1(x)?;
    let grad_p = pj.grad * profiles.p.deriv(pj.value);
    Ok(MhsReport { force: j.cross(bj.value) - grad_p, p_surface: bj.value.dot(grad_p) })
}

/// B = (C(ψ)u + u×∇ψ)/|u|².
pub fn reconstruct_b<U, P>(u: &U, psi: &P, c: &Profile, x: Vec3) -> Result<Vec3>
where
    U: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let uv = u.value(x)?;
    let u2 = uv.norm_sq();
    if u2 == 0.0 {
        return Err(Error::ZeroU);
    }
    let pj = psi.jet1(x)?;
    Ok((uv * c.value(pj.value) + uv.cross(pj.grad)) / u2)
}

/// J = −p′(ψ)u − C′(ψ)B.
pub fn reconstruct_j<U, B, P>(u: &U, b: &B, psi: &P, profiles: &Profiles, x: Vec3) -> Result<Vec3>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let s = psi.value(x)?;
    Ok(u.value(x)? * (-profiles.p.deriv(s)) - b.value(x)? * profiles.c.deriv(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UMethod {
    /// u = (C(ψ)B − B×∇ψ)/|B|², valid for MHS fields.
    Mhs,
    /// u = ∇ψ×∇|B| / (B·∇|B|), needs only quasi-symmetry.
    NoMhs,
}

/// B, ∇|B| and B·∇|B| at `x`, failing where B·∇|B| vanishes.
fn grad_modb<B: VectorField + ?Sized>(b: &B, x: Vec3) -> Result<(Vec3, Vec3, f64)> {
    let bj = b.jet1(x)?;
    let n = bj.value.norm();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    let g = bj.jac.apply_t(bj.value / n);
    let bg = bj.value.dot(g);
    if bg.abs() <= 1e-14 * n * g.norm().max(n) {
        return Err(Error::DegenerateGradB);
    }
    Ok((bj.value, g, bg))
}

pub fn reconstruct_u<B, P>(b: &B, psi: &P, c: &Profile, x: Vec3, method: UMethod) -> Result<Vec3>
where
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let pj = psi.jet1(x)?;
    match method {
        UMethod::Mhs => {
            let bv = b.value(x)?;
            let b2 = bv.norm_sq();
            if b2 == 0.0 {
                return Err(Error::ZeroField);
            }
            Ok((bv * c.value(pj.value) - bv.cross(pj.grad)) / b2)
        }
        UMethod::NoMhs => {
            let (_, g, bg) = grad_modb(b, x)?;
            Ok(pj.grad.cross(g) / bg)
        }
    }
}

/// Coefficients of B×∇ψ = E ∇ψ×∇|B| + F B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FReport {
    pub e_coef: f64,
    pub f: f64,
    pub he1_residual: Vec3,
}

pub fn f_profile<B, P>(b: &B, psi: &P, x: Vec3) -> Result<FReport>
where
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let (bv, g, bg) = grad_modb(b, x)?;
    let gp = psi.jet1(x)?.grad;
    let e_coef = -bv.norm_sq() / bg;
    let f = bv.cross(gp).dot(g) / bg;
    let he1_residual = bv.cross(gp) - gp.cross(g) * e_coef - bv * f;
    Ok(FReport { e_coef, f, he1_residual })
}

/// [h, ∇ψ×h] with h = B/|B|².
pub fn boozer_comm_residual<B, P>(b: &B, psi: &P, x: Vec3) -> Result<Vec3>
where
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let bj = b.jet1(x)?;
    let pj = psi.jet2(x)?;
    if pj.grad.norm() == 0.0 {
        return Err(Error::DegenerateGradPsi);
    }
    let h = inverse_square_jet(&bj)?;
    // ∂ⱼk = (∂ⱼ∇ψ)×h + ∇ψ×∂ⱼh
    let mut cols = [Vec3::ZERO; 3];
    for (jdx, col) in cols.iter_mut().enumerate() {
        *col = pj.hess.col(jdx).cross(h.value) + pj.grad.cross(h.jac.col(jdx));
    }
    let k = Jet1 { value: pj.grad.cross(h.value), jac: Mat3::from_cols(cols[0], cols[1], cols[2]) };
    Ok(lie_bracket(&h, &k))
}

/// Jet of B/|B|² from the jet of B.
pub fn inverse_square_jet(bj: &Jet1) -> Result<Jet1> {
    let s = bj.value.norm_sq();
    if s == 0.0 {
        return Err(Error::ZeroField);
    }
    let ds = bj.jac.apply_t(bj.value) * 2.0;
    let mut cols = [Vec3::ZERO; 3];
    for (j, col) in cols.iter_mut().enumerate() {
        *col = bj.jac.col(j) / s - bj.value * (ds[j] / (s * s));
    }
    Ok(Jet1 { value: bj.value / s, jac: Mat3::from_cols(cols[0], cols[1], cols[2]) })
}

/// [J, B] with J = curl B.
pub fn jb_bracket<B: VectorField + ?Sized>(b: &B, x: Vec3) -> Result<Vec3> {
    let bj = b.jet2(x)?;
    Ok(lie_bracket(&curl_jet(&bj), &bj.first()))
}

/// [u, B/|B|²].
pub fn u_h_bracket<U, B>(u: &U, b: &B, x: Vec3) -> Result<Vec3>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
{
    Ok(lie_bracket(&u.jet1(x)?, &inverse_square_jet(&b.jet1(x)?)?))
}

/// B·∇(u·B).
pub fn b_grad_ub<U, B>(u: &U, b: &B, x: Vec3) -> Result<f64>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
{
    let (uj, bj) = (u.jet1(x)?, b.jet1(x)?);
    let grad = uj.jac.apply_t(bj.value) + bj.jac.apply_t(uj.value);
    Ok(bj.value.dot(grad))
}

/// Sample points covering the flux surface through `x`: `n_pol` points of its poloidal loop
/// about `axis`, each rotated to `n_tor` toroidal angles.
pub fn surface_points<P: ScalarField + ?Sized>(
    psi: &P,
    x: Vec3,
    axis: (f64, f64),
    n_pol: usize,
    n_tor: usize,
) -> Result<Vec<Vec3>> {
    let lp = poloidal_loop(psi, x, axis, n_pol)?;
    let mut out = Vec::with_capacity(n_pol * n_tor);
    for k in 0..n_tor {
        let dphi = core::f64::consts::TAU * k as f64 / n_tor as f64;
        for p in &lp.points {
            out.push(Vec3::from_cylindrical(p.cyl_r(), p.cyl_phi() + dphi, p.z));
        }
    }
    Ok(out)
}

/// Statistics of a quantity sampled on one flux surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceStats {
    pub psi_level: f64,
    pub mean: f64,
    pub stddev: f64,
    /// Largest |value − mean|.
    pub max_dev: f64,
    pub n_samples: usize,
}

pub fn surface_stats<Q: FnMut(Vec3) -> Result<f64>>(psi_level: f64, points: &[Vec3], mut q: Q) -> Result<SurfaceStats> {
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        vals.push(q(*p)?);
    }
    let n = vals.len().max(1) as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let max_dev = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(SurfaceStats { psi_level, mean, stddev: libm::sqrt(var), max_dev, n_samples: vals.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldKind, Model, PsiKind, ScalarModel, SymmetryKind};

    #[test]
    fn spline_reproduces_cubic_free_data() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        for t in [-0.5, 0.1, 0.8, 1.99, 2.7] {
            let (v, d) = s.eval(t);
            assert!((v - (3.0 - 2.0 * t)).abs() < 1e-14 && (d + 2.0).abs() < 1e-13);
        }
        assert!(CubicSpline::new(alloc::vec![0.0, 0.0], alloc::vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn spline_derivative_is_continuous() {
        let xs = alloc::vec![0.0, 0.3, 0.7, 1.0, 1.6];
        let ys = alloc::vec![0.0, 0.5, -0.2, 0.4, 1.0];
        let s = CubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x).0 - y).abs() < 1e-14);
            let (l, r) = (s.eval(x - 1e-9).1, s.eval(x + 1e-9).1);
            assert!((l - r).abs() < 1e-6);
        }
    }

    #[test]
    fn polynomial_profile() {
        let p = Profile::Poly(alloc::vec![1.0, -2.0, 0.5]);
        assert_eq!(p.eval(2.0), (-1.0, 0.0));
    }

    #[test]
    fn profile_integrals_are_exact() {
        let p = Profile::Poly(alloc::vec![1.0, -2.0, 0.5]);
        let exact = |t: f64| t - t * t + t * t * t / 6.0;
        assert!((p.integral(-0.3, 1.7) - (exact(1.7) - exact(-0.3))).abs() < 1e-14);
        // the spline through a line is the line, tails included
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.2).collect();
        let s = Profile::Spline(CubicSpline::new(xs.clone(), xs.iter().map(|x| 3.0 * x - 1.0).collect()).unwrap());
        let line = |t: f64| 1.5 * t * t - t;
        assert!((s.integral(-0.5, 1.4) - (line(1.4) - line(-0.5))).abs() < 1e-13);
        assert!((s.integral(0.9, 0.1) + s.integral(0.1, 0.9)).abs() < 1e-15);
    }

    #[test]
    fn uniform_field_constant_pressure_balances() {
        let b = Model::new(FieldKind::Uniform { b0: Vec3::Z });
        let psi = ScalarModel::new(PsiKind::Linear { grad: Vec3::X, offset: 0.0 });
        let prof = Profiles { p: Profile::constant(3.0), c: Profile::constant(0.0) };
        let r = mhs_residual(&b, &psi, &prof, Vec3::new(0.2, 0.1, 0.0)).unwrap();
        assert_eq!(r.force, Vec3::ZERO);
        assert_eq!(r.p_surface, 0.0);
    }

    #[test]
    fn flat_flux_gives_b_along_u() {
        let u = Model::new(SymmetryKind::Constant(Vec3::Z));
        let psi = ScalarModel::new(PsiKind::Constant(1.0));
        let b = reconstruct_b(&u, &psi, &Profile::constant(2.5), Vec3::new(0.3, 0.0, 1.0)).unwrap();
        assert_eq!(b, Vec3::new(0.0, 0.0, 2.5));
    }

    #[test]
    fn flat_profiles_give_zero_current() {
        let u = Model::new(SymmetryKind::Axisym);
        let b = Model::new(FieldKind::solovev(1.0, 1.0, 2.0));
        let psi = ScalarModel::new(PsiKind::Solovev { r0: 1.0, p1: 2.0 });
        let prof = Profiles { p: Profile::constant(1.0), c: Profile::constant(1.0) };
        assert_eq!(reconstruct_j(&u, &b, &psi, &prof, Vec3::new(1.1, 0.0, 0.2)).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn mirror_midplane_axis_is_degenerate() {
        let b = Model::new(FieldKind::Mirror { b0: 1.0, length: 1.0 });
        let psi = ScalarModel::new(PsiKind::Mirror { b0: 1.0, length: 1.0 });
        let r = reconstruct_u(&b, &psi, &Profile::constant(0.0), Vec3::ZERO, UMethod::NoMhs);
        assert_eq!(r, Err(Error::DegenerateGradB));
        assert_eq!(f_profile(&b, &psi, Vec3::ZERO), Err(Error::DegenerateGradB));
    }

    #[test]
    fn bracket_of_h_with_itself_vanishes() {
        let b = Model::new(FieldKind::perturbed(FieldKind::solovev(1.0, 1.0, 2.0), 0.1, 2));
        let h = inverse_square_jet(&b.jet1(Vec3::new(1.2, 0.1, 0.1)).unwrap()).unwrap();
        assert_eq!(lie_bracket(&h, &h), Vec3::ZERO);
    }
}
