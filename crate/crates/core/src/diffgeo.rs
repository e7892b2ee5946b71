//! Vector calculus, Lie derivatives and quasi-symmetry residuals built from jets.

use crate::dual::{Real, D1};
use crate::error::{Error, Result};
use crate::fields::{Jet1, Jet2, ScalarField, ScalarJet1, VectorField};
use crate::linalg::{Mat3, Vec3};

pub fn dot<R: Real>(a: &[R; 3], b: &[R; 3]) -> R {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<R: Real>(a: &[R; 3], b: &[R; 3]) -> [R; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn scale<R: Real>(a: &[R; 3], s: R) -> [R; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn grad(f: &ScalarJet1) -> Vec3 {
    f.grad
}

pub fn div(x: &Jet1) -> f64 {
    x.jac.trace()
}

pub fn curl(x: &Jet1) -> Vec3 {
    let m = &x.jac.0;
    Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1])
}

/// Jet of curl X from a second-order jet of X.
pub fn curl_jet(x: &Jet2) -> Jet1 {
    let h = &x.hess;
    let mut jac = Mat3::ZERO;
    for k in 0..3 {
        jac.0[0][k] = h[2][1][k] - h[1][2][k];
        jac.0[1][k] = h[0][2][k] - h[2][0][k];
        jac.0[2][k] = h[1][0][k] - h[0][1][k];
    }
    Jet1 { value: curl(&x.first()), jac }
}

/// Directional derivative `v·∇X`.
pub fn directional(x: &Jet1, v: Vec3) -> Vec3 {
    x.jac.apply(v)
}

/// `[u, X] = u·∇X − X·∇u`.
pub fn lie_bracket(u: &Jet1, x: &Jet1) -> Vec3 {
    x.jac.apply(u.value) - u.jac.apply(x.value)
}

/// Lie derivative of a covector: `u^i ∂_i a_j + a_i ∂_j u^i`.
pub fn lie_oneform(u: &Jet1, a: &Jet1) -> Vec3 {
    a.jac.apply(u.value) + u.jac.apply_t(a.value)
}

/// Unit direction b = B/|B| with its jacobian, and |B| with its gradient.
pub fn unit_jet(b: &Jet1) -> Result<(Jet1, ScalarJet1)> {
    let d = b.to_dual();
    let m = dot(&d, &d).sqrt();
    if m.v == 0.0 {
        return Err(Error::ZeroField);
    }
    let unit = [d[0] / m, d[1] / m, d[2] / m];
    Ok((Jet1::from_dual(&unit), ScalarJet1::from_dual(m)))
}

fn cross_jet(a: &Jet1, b: &Jet1) -> Jet1 {
    Jet1::from_dual(&cross(&a.to_dual(), &b.to_dual()))
}

fn dot_jet(a: &Jet1, b: &Jet1) -> ScalarJet1 {
    ScalarJet1::from_dual(dot(&a.to_dual(), &b.to_dual()))
}

/// Residuals of the three defining quasi-symmetry conditions at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QsResiduals {
    /// u·∇|B|
    pub s1: f64,
    /// curl(B×u)
    pub s2: Vec3,
    /// L_u b♭
    pub s3: Vec3,
}

impl QsResiduals {
    pub fn max_abs(&self) -> f64 {
        self.s1.abs().max(self.s2.max_abs()).max(self.s3.max_abs())
    }
}

/// Residuals of the quasi-symmetry conditions for field `b` and candidate `u` at `x`.
pub fn qs_residuals<B: VectorField + ?Sized, U: VectorField + ?Sized>(b: &B, u: &U, x: Vec3) -> Result<QsResiduals> {
    let bj = b.jet1(x)?;
    let uj = u.jet1(x)?;
    qs_residuals_from_jets(&bj, &uj)
}

pub fn qs_residuals_from_jets(bj: &Jet1, uj: &Jet1) -> Result<QsResiduals> {
    let (unit, modb) = unit_jet(bj)?;
    Ok(QsResiduals {
        s1: uj.value.dot(modb.grad),
        s2: curl(&cross_jet(bj, uj)),
        s3: lie_oneform(uj, &unit),
    })
}

/// Consequences of quasi-symmetry, each of which vanishes for a quasi-symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConsequenceResiduals {
    pub div_u: f64,
    /// [u, B]
    pub bracket_ub: Vec3,
    /// u×J − ∇(u·B)
    pub lub_flat: Vec3,
    /// L_u(u·B)
    pub lu_ub: f64,
    /// [u, J]
    pub bracket_uj: Vec3,
    /// L_u(J·B)
    pub lu_jb: f64,
}

impl ConsequenceResiduals {
    pub fn max_abs(&self) -> f64 {
        [
            self.div_u.abs(),
            self.bracket_ub.max_abs(),
            self.lub_flat.max_abs(),
            self.lu_ub.abs(),
            self.bracket_uj.max_abs(),
            self.lu_jb.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn consequence_residuals<B: VectorField + ?Sized, U: VectorField + ?Sized>(
    b: &B,
    u: &U,
    x: Vec3,
) -> Result<ConsequenceResiduals> {
    let bj2 = b.jet2(x)?;
    let uj = u.jet1(x)?;
    Ok(consequence_residuals_from_jets(&bj2, &uj))
}

pub fn consequence_residuals_from_jets(bj2: &Jet2, uj: &Jet1) -> ConsequenceResiduals {
    let bj = bj2.first();
    let jj = curl_jet(bj2);
    let ub = dot_jet(uj, &bj);
    let jb = dot_jet(&jj, &bj);
    ConsequenceResiduals {
        div_u: div(uj),
        bracket_ub: lie_bracket(uj, &bj),
        lub_flat: uj.value.cross(jj.value) - ub.grad,
        lu_ub: uj.value.dot(ub.grad),
        bracket_uj: lie_bracket(uj, &jj),
        lu_jb: uj.value.dot(jb.grad),
    }
}

/// Maximum residual of each alternative condition set:
/// `{L_u|B|, L_uβ, L_uB♭}`, `{div u, L_uβ, L_uB♭}`, `{div u, [u,B], L_uB♭}`.
pub fn condition_set_residuals(bj: &Jet1, uj: &Jet1) -> Result<[f64; 3]> {
    let (_, modb) = unit_jet(bj)?;
    let lu_modb = uj.value.dot(modb.grad).abs();
    let lu_beta = curl(&cross_jet(bj, uj)).max_abs();
    let lu_bflat = lie_oneform(uj, bj).max_abs();
    let div_u = div(uj).abs();
    let bracket = lie_bracket(uj, bj).max_abs();
    Ok([
        lu_modb.max(lu_beta).max(lu_bflat),
        div_u.max(lu_beta).max(lu_bflat),
        div_u.max(bracket).max(lu_bflat),
    ])
}

/// Killing defect w = v×u + ∇|u|², where v = curl u. Equals the covector L_u u♭.
pub fn killing_defect(uj: &Jet1) -> Vec3 {
    let v = curl(uj);
    v.cross(uj.value) + uj.jac.apply_t(uj.value) * 2.0
}

/// Jet of the Killing defect from a second-order jet of u.
pub fn killing_defect_jet(uj: &Jet2) -> Jet1 {
    let d: [D1; 3] = uj.first().to_dual();
    let vj = curl_jet(uj);
    let v = vj.to_dual();
    let vxu = cross(&v, &d);
    // ∂_j |u|² = 2 u_i ∂_j u_i, so its gradient needs the hessian of u.
    let mut g = [D1::default(); 3];
    for (j, gj) in g.iter_mut().enumerate() {
        let mut acc = D1::default();
        for (i, di) in d.iter().enumerate() {
            let dj = D1 { v: uj.jac.0[i][j], g: uj.hess[i][j] };
            acc = acc + *di * dj * 2.0;
        }
        *gj = acc;
    }
    Jet1::from_dual(&[vxu[0] + g[0], vxu[1] + g[1], vxu[2] + g[2]])
}

/// Metric-effect diagnostics of a candidate u.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KillingReport {
    pub w: Vec3,
    /// ∇u + (∇u)ᵀ
    pub sym: Mat3,
    /// Components of L_u g in the basis (B, u, n), n = ∇ψ/|∇ψ|². Present when the basis exists.
    pub lug: Option<Mat3>,
    /// L_u|u|² = u·w
    pub lu_u2: f64,
    /// i_n L_u u♭ = n·w
    pub n_dot_w: f64,
    /// u·[n,u]
    pub u_dot_nu: f64,
    /// L_u|∇ψ|⁻²
    pub lu_inv_grad_psi2: f64,
    /// L_u|∇ψ|⁻² + (|B|²/|∇ψ|⁴) L_u|u|²
    pub diag_relation: f64,
}

/// Killing-defect report for u; basis-dependent entries need B and ψ.
pub fn killing_report<U, B, P>(u: &U, b: &B, psi: &P, x: Vec3) -> Result<KillingReport>
where
    U: VectorField + ?Sized,
    B: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let uj = u.jet1(x)?;
    let w = killing_defect(&uj);
    let sym = uj.jac + uj.jac.transpose();
    let bv = b.value(x)?;
    let pj = psi.jet2(x)?;
    let gp = pj.grad;
    let gp2 = gp.norm_sq();
    let basis_det = Mat3::from_cols(bv, uj.value, gp).det();
    let size = bv.norm() * uj.value.norm() * gp.norm();
    if gp2 == 0.0 || size == 0.0 || basis_det.abs() <= 1e-12 * size {
        return Err(Error::DegenerateBasis);
    }
    let n = gp / gp2;
    let basis = [bv, uj.value, n];
    let mut lug = Mat3::ZERO;
    for a in 0..3 {
        for c in 0..3 {
            lug.0[a][c] = basis[a].dot(sym.apply(basis[c]));
        }
    }
    // n and |∇ψ|⁻² as jets
    let gd: [D1; 3] = core::array::from_fn(|i| D1 { v: gp[i], g: pj.hess.0[i] });
    let inv2 = D1::cst(1.0) / dot(&gd, &gd);
    let nj = Jet1::from_dual(&scale(&gd, inv2));
    let lu_u2 = uj.value.dot(w);
    let lu_inv = uj.value.dot(Vec3::from_array(inv2.g));
    Ok(KillingReport {
        w,
        sym,
        lug: Some(lug),
        lu_u2,
        n_dot_w: n.dot(w),
        u_dot_nu: uj.value.dot(lie_bracket(&nj, &uj)),
        lu_inv_grad_psi2: lu_inv,
        diag_relation: lu_inv + bv.norm_sq() / (gp2 * gp2) * lu_u2,
    })
}

/// Killing defect and symmetric gradient alone (no basis required).
pub fn killing_basic<U: VectorField + ?Sized>(u: &U, x: Vec3) -> Result<(Vec3, Mat3)> {
    let uj = u.jet1(x)?;
    Ok((killing_defect(&uj), uj.jac + uj.jac.transpose()))
}
