//! Analytic magnetic-field and symmetry-candidate models with derivative jets.
//!
//! All public interfaces use Cartesian components. Cylindrical built-ins
//! convert internally and reject points on (or too close to) the z axis.

use alloc::boxed::Box;

use crate::dual::{Real, D1, D2};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{Mat3, Tensor3, Vec3};

/// Value and first derivatives of a vector field, `jac[i][j] = ∂_j f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub value: Vec3,
    pub jac: Mat3,
}

/// [`Jet1`] plus second derivatives, `hess[i][j][k] = ∂_k ∂_j f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: Vec3,
    pub jac: Mat3,
    pub hess: Tensor3,
}

impl Jet2 {
    pub fn first(&self) -> Jet1 {
        Jet1 { value: self.value, jac: self.jac }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarJet1 {
    pub value: f64,
    pub grad: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarJet2 {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

impl ScalarJet2 {
    pub fn first(&self) -> ScalarJet1 {
        ScalarJet1 { value: self.value, grad: self.grad }
    }

    /// The gradient viewed as a vector field jet.
    pub fn grad_jet(&self) -> Jet1 {
        Jet1 { value: self.grad, jac: self.hess }
    }

    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }
}

impl Jet1 {
    /// Lift to dual numbers so derived quantities pick up their own gradients.
    pub fn to_dual(&self) -> [D1; 3] {
        core::array::from_fn(|i| D1 { v: self.value[i], g: self.jac.0[i] })
    }

    pub fn from_dual(d: &[D1; 3]) -> Jet1 {
        Jet1 { value: Vec3::new(d[0].v, d[1].v, d[2].v), jac: Mat3([d[0].g, d[1].g, d[2].g]) }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.jac.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl ScalarJet1 {
    pub fn to_dual(&self) -> D1 {
        D1 { v: self.value, g: self.grad.to_array() }
    }

    pub fn from_dual(d: D1) -> ScalarJet1 {
        ScalarJet1 { value: d.v, grad: Vec3::from_array(d.g) }
    }
}

/// How derivative jets are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Exact derivatives of the closed-form expressions.
    Analytic,
    /// Central differences with step `h`.
    FiniteDifference { h: f64 },
}

/// Default FD step for a problem of characteristic length `scale`.
pub fn default_fd_step(scale: f64) -> f64 {
    1e-5 * scale
}

/// Vector field evaluated pointwise with derivative jets.
pub trait VectorField: Sync {
    fn value(&self, x: Vec3) -> Result<Vec3>;
    fn jet1(&self, x: Vec3) -> Result<Jet1>;
    fn jet2(&self, x: Vec3) -> Result<Jet2>;
}

/// Scalar field evaluated pointwise with derivative jets.
pub trait ScalarField: Sync {
    fn value(&self, x: Vec3) -> Result<f64>;
    fn jet1(&self, x: Vec3) -> Result<ScalarJet1>;
    fn jet2(&self, x: Vec3) -> Result<ScalarJet2>;
}

/// Axis-aligned box plus a minimum cylindrical radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub min: Vec3,
    pub max: Vec3,
    pub min_r: f64,
}

impl Domain {
    pub const UNBOUNDED: Domain = Domain {
        min: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        max: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        min_r: 0.0,
    };

    pub fn contains(&self, x: Vec3) -> bool {
        let inside = (0..3).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i]);
        let r = x.cyl_r();
        inside && (self.min_r <= 0.0 || r > self.min_r)
    }
}

/// Closed-form vector expression that can be evaluated on any [`Real`].
pub trait ClosedForm: Sync {
    fn eval<R: Real>(&self, p: [R; 3]) -> [R; 3];
    /// Whether the formula is singular on the z axis.
    fn needs_positive_r(&self) -> bool;
}

/// Closed-form scalar expression.
pub trait ClosedFormScalar: Sync {
    fn eval<R: Real>(&self, p: [R; 3]) -> R;
    fn needs_positive_r(&self) -> bool;
}

const AXIS_EPS: f64 = 1e-12;

fn check_point(x: Vec3, domain: &Domain, cyl: bool) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if cyl && x.cyl_r() <= AXIS_EPS {
        return Err(Error::OutOfDomain);
    }
    if !domain.contains(x) {
        return Err(Error::OutOfDomain);
    }
    Ok(())
}

fn vars_d1(x: Vec3) -> [D1; 3] {
    [D1::var(x.x, 0), D1::var(x.y, 1), D1::var(x.z, 2)]
}

fn vars_d2(x: Vec3) -> [D2; 3] {
    [D2::var(x.x, 0), D2::var(x.y, 1), D2::var(x.z, 2)]
}

fn finite_or_err(j: Jet2) -> Result<Jet2> {
    let ok = j.value.is_finite()
        && j.jac.0.iter().flatten().all(|v| v.is_finite())
        && j.hess.iter().flatten().flatten().all(|v| v.is_finite());
    if ok {
        Ok(j)
    } else {
        Err(Error::NonFinite)
    }
}

/// Central-difference jet of any vector field: the independent oracle for analytic jets.
///
/// The jacobian uses step `h`; the hessian is the central difference of that
/// jacobian (so `x ± 2h` must lie in the domain), symmetrised in its last two indices.
pub fn fd_jet<F: VectorField + ?Sized>(field: &F, x: Vec3, h: f64) -> Result<Jet2> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let value = field.value(x)?;
    let jac = fd_jacobian(|p| field.value(p), x, h)?;
    let mut hess: Tensor3 = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        let mut e = Vec3::ZERO;
        e[k] = h;
        let jp = fd_jacobian(|p| field.value(p), x + e, h)?;
        let jm = fd_jacobian(|p| field.value(p), x - e, h)?;
        for i in 0..3 {
            for j in 0..3 {
                hess[i][j][k] = (jp.0[i][j] - jm.0[i][j]) / (2.0 * h);
            }
        }
    }
    for plane in hess.iter_mut() {
        for j in 0..3 {
            for k in (j + 1)..3 {
                let avg = 0.5 * (plane[j][k] + plane[k][j]);
                plane[j][k] = avg;
                plane[k][j] = avg;
            }
        }
    }
    finite_or_err(Jet2 { value, jac, hess })
}

/// Central-difference jet of a scalar field.
pub fn fd_scalar_jet<F: ScalarField + ?Sized>(field: &F, x: Vec3, h: f64) -> Result<ScalarJet2> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let value = field.value(x)?;
    let grad_at = |p: Vec3| -> Result<Vec3> {
        let mut g = Vec3::ZERO;
        for k in 0..3 {
            let mut e = Vec3::ZERO;
            e[k] = h;
            g[k] = (field.value(p + e)? - field.value(p - e)?) / (2.0 * h);
        }
        Ok(g)
    };
    let grad = grad_at(x)?;
    let mut hess = Mat3::ZERO;
    for k in 0..3 {
        let mut e = Vec3::ZERO;
        e[k] = h;
        let d = (grad_at(x + e)? - grad_at(x - e)?) / (2.0 * h);
        for j in 0..3 {
            hess.0[j][k] = d[j];
        }
    }
    let hess = (hess + hess.transpose()).scale(0.5);
    Ok(ScalarJet2 { value, grad, hess })
}

fn fd_jacobian<G: Fn(Vec3) -> Result<Vec3>>(f: G, x: Vec3, h: f64) -> Result<Mat3> {
    let mut jac = Mat3::ZERO;
    for j in 0..3 {
        let mut e = Vec3::ZERO;
        e[j] = h;
        let d = (f(x + e)? - f(x - e)?) / (2.0 * h);
        for i in 0..3 {
            jac.0[i][j] = d[i];
        }
    }
    Ok(jac)
}

/// A closed-form vector model with a domain and a derivative mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<K> {
    pub kind: K,
    pub mode: DerivativeMode,
    pub domain: Domain,
}

impl<K: ClosedForm> Model<K> {
    pub fn new(kind: K) -> Self {
        Model { kind, mode: DerivativeMode::Analytic, domain: Domain::UNBOUNDED }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    fn check(&self, x: Vec3) -> Result<()> {
        check_point(x, &self.domain, self.kind.needs_positive_r())
    }

    /// Jet of the requested order (1 or 2); order 1 leaves the hessian zero.
    pub fn eval_jet(&self, x: Vec3, order: u8) -> Result<Jet2> {
        match order {
            1 => self.jet1(x).map(|j| Jet2 { value: j.value, jac: j.jac, hess: [[[0.0; 3]; 3]; 3] }),
            2 => self.jet2(x),
            _ => Err(Error::InvalidInput("jet order must be 1 or 2".into())),
        }
    }
}

impl<K: ClosedForm> VectorField for Model<K> {
    fn value(&self, x: Vec3) -> Result<Vec3> {
        self.check(x)?;
        let v = self.kind.eval([x.x, x.y, x.z]);
        let v = Vec3::from_array(v);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    fn jet1(&self, x: Vec3) -> Result<Jet1> {
        match self.mode {
            DerivativeMode::Analytic => {
                self.check(x)?;
                let j = Jet1::from_dual(&self.kind.eval(vars_d1(x)));
                if j.is_finite() {
                    Ok(j)
                } else {
                    Err(Error::NonFinite)
                }
            }
            DerivativeMode::FiniteDifference { h } => {
                let value = self.value(x)?;
                let jac = fd_jacobian(|p| self.value(p), x, h)?;
                Ok(Jet1 { value, jac })
            }
        }
    }

    fn jet2(&self, x: Vec3) -> Result<Jet2> {
        match self.mode {
            DerivativeMode::Analytic => {
                self.check(x)?;
                let d = self.kind.eval(vars_d2(x));
                let value = Vec3::new(d[0].v, d[1].v, d[2].v);
                let jac = Mat3([d[0].g, d[1].g, d[2].g]);
                let hess = [d[0].h, d[1].h, d[2].h];
                finite_or_err(Jet2 { value, jac, hess })
            }
            DerivativeMode::FiniteDifference { h } => fd_jet(self, x, h),
        }
    }
}

/// A closed-form scalar model with a domain and a derivative mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarModel<K> {
    pub kind: K,
    pub mode: DerivativeMode,
    pub domain: Domain,
}

impl<K: ClosedFormScalar> ScalarModel<K> {
    pub fn new(kind: K) -> Self {
        ScalarModel { kind, mode: DerivativeMode::Analytic, domain: Domain::UNBOUNDED }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    fn check(&self, x: Vec3) -> Result<()> {
        check_point(x, &self.domain, self.kind.needs_positive_r())
    }
}

impl<K: ClosedFormScalar> ScalarField for ScalarModel<K> {
    fn value(&self, x: Vec3) -> Result<f64> {
        self.check(x)?;
        let v = self.kind.eval([x.x, x.y, x.z]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    fn jet1(&self, x: Vec3) -> Result<ScalarJet1> {
        match self.mode {
            DerivativeMode::Analytic => {
                self.check(x)?;
                Ok(ScalarJet1::from_dual(self.kind.eval(vars_d1(x))))
            }
            DerivativeMode::FiniteDifference { h } => fd_scalar_jet(self, x, h).map(|j| j.first()),
        }
    }

    fn jet2(&self, x: Vec3) -> Result<ScalarJet2> {
        match self.mode {
            DerivativeMode::Analytic => {
                self.check(x)?;
                let d = self.kind.eval(vars_d2(x));
                Ok(ScalarJet2 { value: d.v, grad: Vec3::from_array(d.g), hess: Mat3(d.h) })
            }
            DerivativeMode::FiniteDifference { h } => fd_scalar_jet(self, x, h),
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in fields

/// Built-in magnetic field formulas.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// Axisymmetric Solov'ev equilibrium with constant C and linear pressure.
    ///
    /// ψ = (p₁/2)[(r² − r₀²)²/8 + r²z²/2], B = (C₀u + u×∇ψ)/|u|² with u = r φ̂.
    /// At p₁ = 2 this is ψ = (r² − r₀²)²/8 + r²z²/2 and Δ*ψ = p₁r².
    Solovev { r0: f64, c0: f64, p1: f64 },
    /// Helically symmetric field built from u = r φ̂ + l ẑ and
    /// ψ = a r²/2 + δ r cos(φ − z/l), B = (C₀u + u×∇ψ)/|u|².
    Helical { l: f64, c0: f64, a: f64, delta: f64 },
    /// Paraxial mirror: B_z = B₀(1 + (z/L)²), B_r = −(r/2)∂_z B_z.
    Mirror { b0: f64, length: f64 },
    /// Base field plus ε curl(A ẑ), A = Re((x+iy)^N) exp(−((r−r_c)² + z²)/w²).
    Perturbed { base: Box<FieldKind>, eps: f64, n: u32, r_c: f64, width: f64 },
    Uniform { b0: Vec3 },
    Custom { components: Box<[Expr; 3]> },
}

impl FieldKind {
    pub fn solovev(r0: f64, c0: f64, p1: f64) -> Self {
        FieldKind::Solovev { r0, c0, p1 }
    }

    /// Perturbation of `base` centred on r = 1, z = 0 with width 0.5.
    pub fn perturbed(base: FieldKind, eps: f64, n: u32) -> Self {
        let r_c = match &base {
            FieldKind::Solovev { r0, .. } => *r0,
            _ => 1.0,
        };
        FieldKind::Perturbed { base: Box::new(base), eps, n, r_c, width: 0.5 }
    }

    /// Flux function associated with the built-in (the base one for perturbed fields).
    ///
    /// Sign convention: B × u = ∇ψ for the matching symmetry candidate.
    pub fn flux_function(&self) -> Option<PsiKind> {
        match self {
            FieldKind::Solovev { r0, p1, .. } => Some(PsiKind::Solovev { r0: *r0, p1: *p1 }),
            FieldKind::Helical { l, a, delta, .. } => Some(PsiKind::Helical { l: *l, a: *a, delta: *delta }),
            FieldKind::Mirror { b0, length } => Some(PsiKind::Mirror { b0: *b0, length: *length }),
            FieldKind::Perturbed { base, .. } => base.flux_function(),
            _ => None,
        }
    }
}

fn solovev_psi<R: Real>(p: &[R; 3], r0: f64, p1: f64) -> R {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let s = r2 - r0 * r0;
    (s * s / 8.0 + r2 * p[2] * p[2] / 2.0) * (0.5 * p1)
}

fn solovev_grad_psi<R: Real>(p: &[R; 3], r0: f64, p1: f64) -> [R; 3] {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let s = r2 - r0 * r0;
    let z = p[2];
    let dr2 = (s / 4.0 + z * z / 2.0) * (0.5 * p1);
    [p[0] * dr2 * 2.0, p[1] * dr2 * 2.0, r2 * z * (0.5 * p1)]
}

fn helical_psi<R: Real>(p: &[R; 3], l: f64, a: f64, delta: f64) -> R {
    let k = p[2] / l;
    (p[0] * p[0] + p[1] * p[1]) * (0.5 * a) + (p[0] * k.cos() + p[1] * k.sin()) * delta
}

fn helical_grad_psi<R: Real>(p: &[R; 3], l: f64, a: f64, delta: f64) -> [R; 3] {
    let k = p[2] / l;
    let (c, s) = (k.cos(), k.sin());
    [
        p[0] * a + c * delta,
        p[1] * a + s * delta,
        (-p[0] * s + p[1] * c) * (delta / l),
    ]
}

fn cross<R: Real>(a: [R; 3], b: [R; 3]) -> [R; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// B = (C u + u × ∇ψ)/|u|².
fn field_from_flux<R: Real>(u: [R; 3], c: f64, grad_psi: [R; 3]) -> [R; 3] {
    let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let ux = cross(u, grad_psi);
    core::array::from_fn(|i| (u[i] * c + ux[i]) / uu)
}

impl ClosedForm for FieldKind {
    fn eval<R: Real>(&self, p: [R; 3]) -> [R; 3] {
        match self {
            FieldKind::Solovev { r0, c0, p1 } => {
                let u = [-p[1], p[0], R::cst(0.0)];
                field_from_flux(u, *c0, solovev_grad_psi(&p, *r0, *p1))
            }
            FieldKind::Helical { l, c0, a, delta } => {
                let u = [-p[1], p[0], R::cst(*l)];
                field_from_flux(u, *c0, helical_grad_psi(&p, *l, *a, *delta))
            }
            FieldKind::Mirror { b0, length } => {
                let l2 = length * length;
                let z = p[2];
                [-(p[0] * z) * (b0 / l2), -(p[1] * z) * (b0 / l2), (z * z / l2 + 1.0) * *b0]
            }
            FieldKind::Perturbed { base, eps, n, r_c, width } => {
                let b = base.eval(p);
                let (x, y, z) = (p[0], p[1], p[2]);
                // (re, im) of (x + iy)^(N-1) and (x + iy)^N
                let mut re_m = R::cst(1.0);
                let mut im_m = R::cst(0.0);
                for _ in 1..*n {
                    let nr = re_m * x - im_m * y;
                    im_m = re_m * y + im_m * x;
                    re_m = nr;
                }
                let (re_n, nf) = if *n == 0 {
                    (R::cst(1.0), 0.0)
                } else {
                    (re_m * x - im_m * y, *n as f64)
                };
                let dpx = re_m * nf;
                let dpy = -im_m * nf;
                let r = (x * x + y * y).sqrt();
                let dr = r - *r_c;
                let w2 = width * width;
                let g = (-(dr * dr + z * z) / w2).exp();
                let fac = g * (-2.0 / w2);
                let gx = fac * dr * x / r;
                let gy = fac * dr * y / r;
                let ax = g * dpx + re_n * gx;
                let ay = g * dpy + re_n * gy;
                [b[0] + ay * *eps, b[1] - ax * *eps, b[2]]
            }
            FieldKind::Uniform { b0 } => [R::cst(b0.x), R::cst(b0.y), R::cst(b0.z)],
            FieldKind::Custom { components } => core::array::from_fn(|i| components[i].eval(&p)),
        }
    }

    fn needs_positive_r(&self) -> bool {
        match self {
            FieldKind::Solovev { .. } | FieldKind::Perturbed { .. } => true,
            FieldKind::Custom { components } => components.iter().any(Expr::uses_cylindrical),
            _ => false,
        }
    }
}

/// Built-in flux functions and other scalar fields.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiKind {
    Solovev { r0: f64, p1: f64 },
    Helical { l: f64, a: f64, delta: f64 },
    /// ψ = −(r²/2) B₀(1 + (z/L)²), matching B × (r φ̂) = ∇ψ.
    Mirror { b0: f64, length: f64 },
    Constant(f64),
    /// ψ = offset + g·x.
    Linear { grad: Vec3, offset: f64 },
    Custom(Box<Expr>),
}

impl PsiKind {
    pub fn custom(text: &str) -> Result<Self> {
        Ok(PsiKind::Custom(Box::new(Expr::parse(text)?)))
    }
}

impl ClosedFormScalar for PsiKind {
    fn eval<R: Real>(&self, p: [R; 3]) -> R {
        match self {
            PsiKind::Solovev { r0, p1 } => solovev_psi(&p, *r0, *p1),
            PsiKind::Helical { l, a, delta } => helical_psi(&p, *l, *a, *delta),
            PsiKind::Mirror { b0, length } => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let bz = (p[2] * p[2] / (length * length) + 1.0) * *b0;
                -(r2 * bz) * 0.5
            }
            PsiKind::Constant(c) => R::cst(*c),
            PsiKind::Linear { grad, offset } => p[0] * grad.x + p[1] * grad.y + p[2] * grad.z + *offset,
            PsiKind::Custom(e) => e.eval(&p),
        }
    }

    fn needs_positive_r(&self) -> bool {
        match self {
            PsiKind::Custom(e) => e.uses_cylindrical(),
            _ => false,
        }
    }
}

/// Built-in symmetry candidates u.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetryKind {
    /// u = r φ̂ = (−y, x, 0).
    Axisym,
    /// u = r φ̂ + l ẑ.
    Helical { l: f64 },
    /// Constant vector (translations, the zero field).
    Constant(Vec3),
    Custom(Box<[Expr; 3]>),
}

impl SymmetryKind {
    /// Parse a custom candidate from three component expressions.
    pub fn custom(x: &str, y: &str, z: &str) -> Result<Self> {
        Ok(SymmetryKind::Custom(Box::new([Expr::parse(x)?, Expr::parse(y)?, Expr::parse(z)?])))
    }
}

impl FieldKind {
    pub fn custom(x: &str, y: &str, z: &str) -> Result<Self> {
        Ok(FieldKind::Custom { components: Box::new([Expr::parse(x)?, Expr::parse(y)?, Expr::parse(z)?]) })
    }
}

impl ClosedForm for SymmetryKind {
    fn eval<R: Real>(&self, p: [R; 3]) -> [R; 3] {
        match self {
            SymmetryKind::Axisym => [-p[1], p[0], R::cst(0.0)],
            SymmetryKind::Helical { l } => [-p[1], p[0], R::cst(*l)],
            SymmetryKind::Constant(c) => [R::cst(c.x), R::cst(c.y), R::cst(c.z)],
            SymmetryKind::Custom(c) => core::array::from_fn(|i| c[i].eval(&p)),
        }
    }

    fn needs_positive_r(&self) -> bool {
        match self {
            SymmetryKind::Custom(c) => c.iter().any(Expr::uses_cylindrical),
            _ => false,
        }
    }
}

pub type FieldModel = Model<FieldKind>;
pub type SymmetryCandidate = Model<SymmetryKind>;
pub type FluxFunction = ScalarModel<PsiKind>;

#[cfg(test)]
mod tests {
    use super::*;

    fn solovev() -> FieldModel {
        Model::new(FieldKind::solovev(1.0, 1.0, 2.0))
    }

    #[test]
    fn uniform_jet_is_constant() {
        let m = Model::new(FieldKind::Uniform { b0: Vec3::Z });
        let j = m.jet2(Vec3::new(0.3, -2.0, 5.0)).unwrap();
        assert_eq!(j.value, Vec3::Z);
        assert_eq!(j.jac, Mat3::ZERO);
        let fd = fd_jet(&m, Vec3::new(0.3, -2.0, 5.0), 1e-3).unwrap();
        assert_eq!(fd.jac.max_abs(), 0.0);
    }

    #[test]
    fn axisym_curl_is_two_z() {
        let u = Model::new(SymmetryKind::Axisym);
        let j = u.jet1(Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(j.value, Vec3::new(0.0, 1.0, 0.0));
        let m = j.jac.0;
        let curl = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]);
        assert_eq!(curl, Vec3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn solovev_on_axis_circle_is_toroidal() {
        let b = solovev().value(Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((b - Vec3::new(0.0, 1.0, 0.0)).max_abs() < 1e-15);
        let psi = ScalarModel::new(PsiKind::Solovev { r0: 1.0, p1: 2.0 });
        let g = psi.jet1(Vec3::new(1.0, 0.0, 0.0)).unwrap().grad;
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn axis_is_out_of_domain() {
        assert_eq!(solovev().value(Vec3::new(0.0, 0.0, 0.3)), Err(Error::OutOfDomain));
        let mirror = Model::new(FieldKind::Mirror { b0: 1.0, length: 1.0 });
        assert!(mirror.value(Vec3::new(0.0, 0.0, 0.3)).is_ok());
    }

    #[test]
    fn box_domain_rejects_outside_points() {
        let d = Domain { min: Vec3::new(-1.0, -1.0, -1.0), max: Vec3::new(1.0, 1.0, 1.0), min_r: 0.0 };
        let m = Model::new(FieldKind::Uniform { b0: Vec3::Z }).with_domain(d);
        assert_eq!(m.value(Vec3::new(2.0, 0.0, 0.0)), Err(Error::OutOfDomain));
        assert_eq!(m.value(Vec3::new(f64::NAN, 0.0, 0.0)), Err(Error::NonFinite));
    }

    #[test]
    fn custom_field_matches_builtin() {
        let custom = Model::new(FieldKind::custom("-z*x", "-z*y", "1 + z^2").unwrap());
        let mirror = Model::new(FieldKind::Mirror { b0: 1.0, length: 1.0 });
        let x = Vec3::new(0.2, -0.3, 0.4);
        let a = custom.jet2(x).unwrap();
        let b = mirror.jet2(x).unwrap();
        assert!((a.value - b.value).max_abs() < 1e-15);
        assert!((a.jac - b.jac).max_abs() < 1e-15);
    }

    #[test]
    fn solovev_grad_shafranov_operator() {
        // Δ*ψ = ∇²ψ − (2/r)∂_rψ, evaluated on y = 0 where ∂_r = ∂_x
        let p1 = 3.0;
        let psi = ScalarModel::new(PsiKind::Solovev { r0: 1.0, p1 });
        for &(r, z) in &[(1.2, 0.1), (0.7, -0.4), (1.5, 0.6)] {
            let j = psi.jet2(Vec3::new(r, 0.0, z)).unwrap();
            let gs = j.laplacian() - 2.0 / r * j.grad.x;
            assert!((gs - p1 * r * r).abs() < 1e-12, "{gs} vs {}", p1 * r * r);
        }
    }

    #[test]
    fn solovev_is_divergence_free() {
        let m = solovev();
        for &x in &[Vec3::new(1.2, 0.3, 0.1), Vec3::new(-0.6, 0.5, -0.4)] {
            let j = m.jet1(x).unwrap();
            assert!(j.jac.trace().abs() < 1e-13);
        }
    }

    #[test]
    fn order_selects_jet() {
        let m = solovev();
        let x = Vec3::new(1.1, 0.2, 0.1);
        assert_eq!(m.eval_jet(x, 1).unwrap().hess, [[[0.0; 3]; 3]; 3]);
        assert!(m.eval_jet(x, 3).is_err());
    }
}
