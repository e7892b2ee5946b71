//! Grad-Shafranov type equations for a symmetry candidate u.
//!
//! Pointwise residuals of the pre-GS and quasi-symmetric GS equations and of the
//! supplementary conditions, and a finite-difference solver for the two reduced
//! cases u = r φ̂ (ψ(r, z)) and u = r φ̂ + l ẑ (ψ(r, η), η = φ − z/l).
//!
//! For a Killing u the quasi-symmetric GS operator divided by |u|² is
//! div(|u|⁻²∇ψ) + sources, so the reduced operator is discretised in flux form.
//! The resulting matrix is symmetric, the discrete functional below has it as
//! its exact gradient, and one banded Cholesky factor serves every Picard step.
//! A classical central-difference stencil is available as an alternative.

use alloc::vec::Vec;

use crate::diffgeo::{curl, curl_jet, killing_defect};
use crate::equilibrium::{Profile, Profiles};
use crate::error::{Error, Result};
use crate::fields::{ClosedForm, Jet1, Model, ScalarField, ScalarJet2, SymmetryKind, VectorField};
use crate::linalg::{BandCholesky, BandLu, Vec3};
use crate::dual::Real;

const TAU: f64 = 2.0 * core::f64::consts::PI;

/// Both forms of the pre-GS residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreGs {
    /// Δψ − (u×v/|u|²)·∇ψ + (u·v/|u|²) u·B − u·J.
    pub full: f64,
    /// Δψ − u·J + B·v.
    pub alt: f64,
}

pub fn pre_gs_residual<B, U, P>(b: &B, u: &U, psi: &P, x: Vec3) -> Result<PreGs>
where
    B: VectorField + ?Sized,
    U: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let bj = b.jet2(x)?;
    let uj = u.jet1(x)?;
    let pj = psi.jet2(x)?;
    let (bv, uv) = (bj.value, uj.value);
    let u2 = uv.norm_sq();
    if u2 == 0.0 {
        return Err(Error::ZeroU);
    }
    let v = curl(&uj);
    let j = curl_jet(&bj).value;
    let lap = pj.laplacian();
    let full = lap - uv.cross(v).dot(pj.grad) / u2 + uv.dot(v) * uv.dot(bv) / u2 - uv.dot(j);
    let alt = lap - uv.dot(j) + bv.dot(v);
    Ok(PreGs { full, alt })
}

/// Δψ − (u×v/|u|²)·∇ψ + (u·v/|u|²)C + CC′ + |u|²p′.
pub fn qsgs_residual(psi: &ScalarJet2, u: &Jet1, profiles: &Profiles) -> Result<f64> {
    let uv = u.value;
    let u2 = uv.norm_sq();
    if u2 == 0.0 {
        return Err(Error::ZeroU);
    }
    let v = curl(u);
    let (c, dc) = profiles.c.eval(psi.value);
    let dp = profiles.p.deriv(psi.value);
    Ok(psi.laplacian() - uv.cross(v).dot(psi.grad) / u2 + uv.dot(v) * c / u2 + c * dc + u2 * dp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplementaryResiduals {
    /// u·∇ψ.
    pub r0: f64,
    /// (u×w)·∇ψ − (u·w)C.
    pub r1: f64,
    /// V₁·∇ψ.
    pub r2: f64,
    /// [(u·v)w + 2((u×w)·∇)u]·∇ψ + |w|²C.
    pub r3: f64,
    /// v×w − 2(w·∇)u.
    pub v1: Vec3,
    /// |w|² u×w + (u·w)[(u·v)w + 2((u×w)·∇)u], free of C.
    pub v2: Vec3,
    /// u×V₁·V₂.
    pub degeneracy: f64,
}

/// The four side conditions with w = v×u + ∇|u|² the Killing defect.
pub fn supplementary_residuals<U, P>(u: &U, psi: &P, c: &Profile, x: Vec3) -> Result<SupplementaryResiduals>
where
    U: VectorField + ?Sized,
    P: ScalarField + ?Sized,
{
    let uj = u.jet1(x)?;
    let pj = psi.jet1(x)?;
    let (uv, g) = (uj.value, pj.grad);
    let cv = c.value(pj.value);
    let v = curl(&uj);
    let w = killing_defect(&uj);
    let uxw = uv.cross(w);
    let t3 = w * uv.dot(v) + uj.jac.apply(uxw) * 2.0;
    let v1 = v.cross(w) - uj.jac.apply(w) * 2.0;
    let v2 = uxw * w.norm_sq() + t3 * uv.dot(w);
    Ok(SupplementaryResiduals {
        r0: uv.dot(g),
        r1: uxw.dot(g) - uv.dot(w) * cv,
        r2: v1.dot(g),
        r3: t3.dot(g) + w.norm_sq() * cv,
        v1,
        v2,
        degeneracy: uv.cross(v1).dot(v2),
    })
}

/// Symmetry of a reduced problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GsSymmetry {
    /// u = r φ̂, ψ(r, z).
    Axisym,
    /// u = r φ̂ + l ẑ, ψ(r, η) with η = φ − z/l.
    Helical { l: f64 },
}

/// Radial coefficients of the reduced operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoeffs {
    pub u2: f64,
    pub u_dot_v: f64,
    /// |∇ζ|².
    pub grad_zeta2: f64,
}

impl GsSymmetry {
    pub fn candidate(&self) -> SymmetryKind {
        match *self {
            GsSymmetry::Axisym => SymmetryKind::Axisym,
            GsSymmetry::Helical { l } => SymmetryKind::Helical { l },
        }
    }

    pub fn coeffs(&self, r: f64) -> ReducedCoeffs {
        match *self {
            GsSymmetry::Axisym => ReducedCoeffs { u2: r * r, u_dot_v: 0.0, grad_zeta2: 1.0 },
            GsSymmetry::Helical { l } => {
                ReducedCoeffs { u2: r * r + l * l, u_dot_v: 2.0 * l, grad_zeta2: 1.0 / (r * r) + 1.0 / (l * l) }
            }
        }
    }

    /// A 3D point with reduced coordinates (r, ζ).
    pub fn point(&self, r: f64, zeta: f64) -> Vec3 {
        match self {
            GsSymmetry::Axisym => Vec3::new(r, 0.0, zeta),
            GsSymmetry::Helical { .. } => Vec3::from_cylindrical(r, zeta, 0.0),
        }
    }

    /// ∇ζ at a 3D point.
    pub fn grad_zeta(&self, x: Vec3) -> Vec3 {
        match *self {
            GsSymmetry::Axisym => Vec3::Z,
            GsSymmetry::Helical { l } => {
                let r2 = x.x * x.x + x.y * x.y;
                Vec3::new(-x.y / r2, x.x / r2, -1.0 / l)
            }
        }
    }

    /// Source S(r, ψ) = (u·v)C/|u|⁴ + CC′/|u|² + p′ of the divided equation.
    fn source(&self, r: f64, psi: f64, profiles: &Profiles) -> f64 {
        let k = self.coeffs(r);
        let (c, dc) = profiles.c.eval(psi);
        k.u_dot_v * c / (k.u2 * k.u2) + c * dc / k.u2 + profiles.p.deriv(psi)
    }

    /// The reduced quasi-symmetric GS operator at one point, from derivatives of ψ(r, ζ).
    ///
    /// Equals `qsgs_residual` of the lifted ψ.
    pub fn reduced_residual(&self, r: f64, psi: [f64; 4], profiles: &Profiles) -> f64 {
        let [v, pr, prr, pzz] = psi;
        let k = self.coeffs(r);
        let (c, dc) = profiles.c.eval(v);
        // Δψ = ψ_rr + ψ_r/r + |∇ζ|²ψ_ζζ and u×v = 2r r̂ in both cases
        prr + pr / r + k.grad_zeta2 * pzz - 2.0 * r * pr / k.u2 + k.u_dot_v * c / k.u2 + c * dc + k.u2 * profiles.p.deriv(v)
    }
}

/// Y = −l/(r²(r² + l²)) (x, y, 0), with div Y = u·v/|u|⁴ for u = r φ̂ + l ẑ. Zero when l = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YField {
    pub l: f64,
}

impl ClosedForm for YField {
    fn eval<R: Real>(&self, p: [R; 3]) -> [R; 3] {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let l = R::cst(self.l);
        let s = -l / (r2 * (r2 + l * l));
        [p[0] * s, p[1] * s, R::cst(0.0)]
    }

    fn needs_positive_r(&self) -> bool {
        self.l != 0.0
    }
}

/// div Y − u·v/|u|⁴ at `x`.
pub fn y_divergence_defect<Y, U>(y: &Y, u: &U, x: Vec3) -> Result<f64>
where
    Y: VectorField + ?Sized,
    U: VectorField + ?Sized,
{
    let yj = y.jet1(x)?;
    let uj = u.jet1(x)?;
    let u2 = uj.value.norm_sq();
    if u2 == 0.0 {
        return Err(Error::ZeroU);
    }
    Ok(yj.jac.trace() - uj.value.dot(curl(&uj)) / (u2 * u2))
}

/// The closed-form Y for the axisymmetric and helical candidates.
pub fn make_y(symmetry: &SymmetryKind) -> Result<Model<YField>> {
    let l = match symmetry {
        SymmetryKind::Axisym => 0.0,
        SymmetryKind::Helical { l } => *l,
        _ => return Err(Error::UnsupportedSymmetry),
    };
    let y = Model::new(YField { l });
    let u = Model::new(symmetry.clone());
    for (r, phi, z) in [(0.5, 0.3, -0.2), (1.0, 2.0, 0.7), (2.5, -1.1, 3.0)] {
        let d = y_divergence_defect(&y, &u, Vec3::from_cylindrical(r, phi, z))?;
        if !(d.abs() < 1e-10) {
            return Err(Error::NoConvergence { iterations: 0, residual: d });
        }
    }
    Ok(y)
}

/// Uniform node grid on [r_min, r_max] × [ζ_min, ζ_max], nodes stored with r fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub r_min: f64,
    pub r_max: f64,
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub nr: usize,
    pub nz: usize,
}

impl Grid2D {
    pub fn new(r: (f64, f64), zeta: (f64, f64), nr: usize, nz: usize) -> Result<Self> {
        if !(r.0 > 0.0 && r.1 > r.0 && zeta.1 > zeta.0) {
            return Err(Error::InvalidInput("grid needs 0 < r_min < r_max and ζ_min < ζ_max".into()));
        }
        if nr < 3 || nz < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 nodes per direction".into()));
        }
        Ok(Grid2D { r_min: r.0, r_max: r.1, zeta_min: zeta.0, zeta_max: zeta.1, nr, nz })
    }

    pub fn hr(&self) -> f64 {
        (self.r_max - self.r_min) / (self.nr - 1) as f64
    }

    pub fn hz(&self) -> f64 {
        (self.zeta_max - self.zeta_min) / (self.nz - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.hr()
    }

    pub fn zeta(&self, j: usize) -> f64 {
        self.zeta_min + j as f64 * self.hz()
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nr + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nr - 1 || j == self.nz - 1
    }

    /// Node values of a function of (r, ζ).
    pub fn sample<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.nz {
            for i in 0..self.nr {
                out.push(f(self.r(i), self.zeta(j)));
            }
        }
        out
    }

    /// Volume weight 2π r h_r h_ζ of a node, halved on edges and quartered at corners.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let fi = if i == 0 || i == self.nr - 1 { 0.5 } else { 1.0 };
        let fj = if j == 0 || j == self.nz - 1 { 0.5 } else { 1.0 };
        TAU * self.r(i) * self.hr() * self.hz() * fi * fj
    }

    fn check(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.len() {
            return Err(Error::InvalidInput("ψ grid size does not match the grid".into()));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Five-point stencil of the reduced operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    /// Face-centred flux form of div(|u|⁻²∇ψ): symmetric, and the exact gradient of
    /// [`functional_eval`]. Exact on functions quadratic in r² and in ζ.
    #[default]
    FluxForm,
    /// Central differences of |u|⁻²(ψ_rr + ψ_r/r) + (|u|⁻²)′ψ_r + |u|⁻²|∇ζ|²ψ_ζζ.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub discretization: Discretization,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions { damping: 0.8, tol: 1e-11, max_iter: 500, discretization: Discretization::FluxForm }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsProblem {
    pub grid: Grid2D,
    pub symmetry: GsSymmetry,
    pub profiles: Profiles,
    pub options: GsOptions,
    /// Boundary nodes carry the Dirichlet data, interior nodes the initial guess.
    pub psi0: Vec<f64>,
}

impl GsProblem {
    /// Boundary data from `f`, zero initial guess inside.
    pub fn with_boundary<F: FnMut(f64, f64) -> f64>(
        grid: Grid2D,
        symmetry: GsSymmetry,
        profiles: Profiles,
        mut f: F,
    ) -> Self {
        let mut psi0 = alloc::vec![0.0; grid.len()];
        for j in 0..grid.nz {
            for i in 0..grid.nr {
                if grid.is_boundary(i, j) {
                    psi0[grid.index(i, j)] = f(grid.r(i), grid.zeta(j));
                }
            }
        }
        GsProblem { grid, symmetry, profiles, options: GsOptions::default(), psi0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardStep {
    /// Max-norm of the applied update.
    pub update: f64,
    /// Max-norm of the discrete residual after the update.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsSolution {
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub history: Vec<PicardStep>,
}

/// Neighbour weights of r·div(a∇ψ) per column, a = 1/|u|², b = |∇ζ|²/|u|².
/// Flux form puts r a on the faces i ± ½; both forms use r b for ζ.
struct Stencil {
    west: Vec<f64>,
    east: Vec<f64>,
    zeta: Vec<f64>,
}

impl Stencil {
    fn new(grid: &Grid2D, sym: GsSymmetry, disc: Discretization) -> Self {
        let (hr, hz) = (grid.hr(), grid.hz());
        let face = |r: f64| r / sym.coeffs(r).u2 / (hr * hr);
        let mut st = Stencil { west: Vec::new(), east: Vec::new(), zeta: Vec::new() };
        for i in 0..grid.nr {
            let r = grid.r(i);
            let k = sym.coeffs(r);
            let a = 1.0 / k.u2;
            match disc {
                Discretization::FluxForm => {
                    st.west.push(face(r - 0.5 * hr));
                    st.east.push(face(r + 0.5 * hr));
                }
                Discretization::Central => {
                    // |u|² = r² + const in both cases, so a′ = −2r a²
                    let drift = a / r - 2.0 * r * a * a;
                    st.west.push(r * (a / (hr * hr) - drift / (2.0 * hr)));
                    st.east.push(r * (a / (hr * hr) + drift / (2.0 * hr)));
                }
            }
            st.zeta.push(r * k.grad_zeta2 * a / (hz * hz));
        }
        st
    }

    /// r·div(a∇ψ) at an interior node.
    fn apply(&self, grid: &Grid2D, psi: &[f64], i: usize, j: usize) -> f64 {
        let c = grid.index(i, j);
        let p = psi[c];
        self.east[i] * (psi[c + 1] - p) - self.west[i] * (p - psi[c - 1])
            + self.zeta[i] * (psi[c + grid.nr] - 2.0 * p + psi[c - grid.nr])
    }
}

/// div(|u|⁻²∇ψ) at every node (zero on the boundary), second order.
pub fn discrete_operator(grid: &Grid2D, sym: GsSymmetry, disc: Discretization, psi: &[f64]) -> Result<Vec<f64>> {
    grid.check(psi)?;
    let st = Stencil::new(grid, sym, disc);
    let mut out = alloc::vec![0.0; grid.len()];
    for j in 1..grid.nz - 1 {
        for i in 1..grid.nr - 1 {
            out[grid.index(i, j)] = st.apply(grid, psi, i, j) / grid.r(i);
        }
    }
    Ok(out)
}

/// Damped Picard iteration on the reduced quasi-symmetric GS equation.
pub fn solve_gs(problem: &GsProblem) -> Result<GsSolution> {
    solve_gs_observed(problem, |_, _| {})
}

/// [`solve_gs`], calling `observe(iteration, ψ)` after every Picard step.
pub fn solve_gs_observed<O: FnMut(usize, &[f64])>(problem: &GsProblem, mut observe: O) -> Result<GsSolution> {
    let GsProblem { grid, symmetry, profiles, options, psi0 } = problem;
    grid.check(psi0)?;
    if grid.nr < 8 || grid.nz < 8 {
        return Err(Error::InvalidInput("solve_gs needs at least 8×8 nodes".into()));
    }
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::InvalidInput("Picard damping must lie in (0, 1]".into()));
    }
    let st = Stencil::new(grid, *symmetry, options.discretization);
    let (mi, mj) = (grid.nr - 2, grid.nz - 2);
    // order unknowns along the shorter side to keep the band narrow
    let r_fast = mi <= mj;
    let unknown = |i: usize, j: usize| if r_fast { (j - 1) * mi + (i - 1) } else { (i - 1) * mj + (j - 1) };
    let node = |k: usize| if r_fast { (k % mi + 1, k / mi + 1) } else { (k / mj + 1, k % mj + 1) };
    let bw = if r_fast { mi } else { mj };
    let n = mi * mj;
    // M = −A restricted to interior unknowns
    let entry = |row: usize, col: usize| {
        let (i, j) = node(row);
        let (i2, j2) = node(col);
        match (i2 as isize - i as isize, j2 as isize - j as isize) {
            (0, 0) => st.east[i] + st.west[i] + 2.0 * st.zeta[i],
            (1, 0) => -st.east[i],
            (-1, 0) => -st.west[i],
            (0, 1) | (0, -1) => -st.zeta[i],
            _ => 0.0,
        }
    };
    let factor = match options.discretization {
        Discretization::FluxForm => BandCholesky::factor(n, bw, |k, d| entry(k, k - d)).map(Factor::Chol),
        Discretization::Central => BandLu::factor(n, bw, entry).map(Factor::Lu),
    }
    .ok_or(Error::SingularOperator)?;

    // boundary contribution to M ψ = r S + b
    let mut bterm = alloc::vec![0.0; n];
    for j in 1..=mj {
        for i in 1..=mi {
            let mut s = 0.0;
            if i == 1 {
                s += st.west[i] * psi0[grid.index(0, j)];
            }
            if i == mi {
                s += st.east[i] * psi0[grid.index(mi + 1, j)];
            }
            if j == 1 {
                s += st.zeta[i] * psi0[grid.index(i, 0)];
            }
            if j == mj {
                s += st.zeta[i] * psi0[grid.index(i, mj + 1)];
            }
            bterm[unknown(i, j)] = s;
        }
    }

    let mut psi = psi0.clone();
    let mut history = Vec::new();
    let mut rhs = alloc::vec![0.0; n];
    for it in 1..=options.max_iter {
        for j in 1..=mj {
            for i in 1..=mi {
                let r = grid.r(i);
                let k = unknown(i, j);
                rhs[k] = r * symmetry.source(r, psi[grid.index(i, j)], profiles) + bterm[k];
            }
        }
        factor.solve(&mut rhs);
        let mut update = 0.0f64;
        for j in 1..=mj {
            for i in 1..=mi {
                let c = grid.index(i, j);
                let d = options.damping * (rhs[unknown(i, j)] - psi[c]);
                psi[c] += d;
                update = update.max(d.abs());
            }
        }
        if !update.is_finite() {
            return Err(Error::NonFinite);
        }
        let residual = residual_max(grid, *symmetry, &st, profiles, &psi);
        history.push(PicardStep { update, residual });
        observe(it, &psi);
        if update < options.tol {
            return Ok(GsSolution { psi, iterations: it, history });
        }
    }
    let residual = history.last().map_or(f64::INFINITY, |s| s.residual);
    Err(Error::NoConvergence { iterations: options.max_iter, residual })
}

enum Factor {
    Chol(BandCholesky),
    Lu(BandLu),
}

impl Factor {
    fn solve(&self, rhs: &mut [f64]) {
        match self {
            Factor::Chol(f) => f.solve(rhs),
            Factor::Lu(f) => f.solve(rhs),
        }
    }
}

fn residual_max(grid: &Grid2D, sym: GsSymmetry, st: &Stencil, profiles: &Profiles, psi: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for j in 1..grid.nz - 1 {
        for i in 1..grid.nr - 1 {
            let r = grid.r(i);
            let v = st.apply(grid, psi, i, j) / r + sym.source(r, psi[grid.index(i, j)], profiles);
            m = m.max(v.abs());
        }
    }
    m
}

/// Max-norm of the discrete residual div(|u|⁻²∇ψ) + S over interior nodes.
pub fn discrete_residual(grid: &Grid2D, sym: GsSymmetry, disc: Discretization, profiles: &Profiles, psi: &[f64]) -> Result<f64> {
    grid.check(psi)?;
    Ok(residual_max(grid, sym, &Stencil::new(grid, sym, disc), profiles, psi))
}

/// Radial component r Y·r̂ of Y at radius r.
fn r_times_yr<Y: VectorField + ?Sized>(y: &Y, sym: GsSymmetry, r: f64) -> Result<f64> {
    let x = sym.point(r, 0.0);
    let rhat = Vec3::new(x.x, x.y, 0.0) / r;
    Ok(r * y.value(x)?.dot(rhat))
}

/// Discrete ∫ (|∇ψ|² − C²)/(2|u|²) + C Y·∇ψ − p dV over the grid.
///
/// Gradient terms sit on edges (face-centred differences), the others on nodes with
/// the [`Grid2D::weight`] measure. C Y·∇ψ uses the exact increment of ∫C dψ along
/// each r-edge; Y is assumed radial, as for both closed forms.
pub fn functional_eval<Y>(grid: &Grid2D, sym: GsSymmetry, profiles: &Profiles, y: &Y, psi: &[f64]) -> Result<f64>
where
    Y: VectorField + ?Sized,
{
    grid.check(psi)?;
    let st = Stencil::new(grid, sym, Discretization::FluxForm);
    let (hr, hz) = (grid.hr(), grid.hz());
    let cell = TAU * hr * hz;
    let ry: Vec<f64> = (0..grid.nr - 1).map(|i| r_times_yr(y, sym, grid.r(i) + 0.5 * hr)).collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut add = |v: f64| {
        // Kahan summation keeps the sum usable for difference quotients
        let y = v - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    };
    for j in 0..grid.nz {
        let fj = if j == 0 || j == grid.nz - 1 { 0.5 } else { 1.0 };
        for i in 0..grid.nr - 1 {
            let (a, b) = (psi[grid.index(i, j)], psi[grid.index(i + 1, j)]);
            let e = 0.5 * st.east[i] * (b - a) * (b - a) + ry[i] * profiles.c.integral(a, b) / hr;
            add(cell * fj * e);
        }
    }
    for i in 0..grid.nr {
        let fi = if i == 0 || i == grid.nr - 1 { 0.5 } else { 1.0 };
        for j in 0..grid.nz - 1 {
            let d = psi[grid.index(i, j + 1)] - psi[grid.index(i, j)];
            add(cell * fi * 0.5 * st.zeta[i] * d * d);
        }
    }
    for j in 0..grid.nz {
        for i in 0..grid.nr {
            let s = psi[grid.index(i, j)];
            let c = profiles.c.value(s);
            add(-grid.weight(i, j) * (c * c / (2.0 * sym.coeffs(grid.r(i)).u2) + profiles.p.value(s)));
        }
    }
    Ok(total)
}

/// Discrete Euler-Lagrange operator E_h[ψ] at interior nodes (zero on the boundary).
///
/// Same as the solver residual except that u·v/|u|⁴ is replaced by the discrete
/// divergence of Y, so that the gradient of [`functional_eval`] is exactly −E_h·weight.
pub fn discrete_euler_lagrange<Y>(grid: &Grid2D, sym: GsSymmetry, profiles: &Profiles, y: &Y, psi: &[f64]) -> Result<Vec<f64>>
where
    Y: VectorField + ?Sized,
{
    grid.check(psi)?;
    let st = Stencil::new(grid, sym, Discretization::FluxForm);
    let hr = grid.hr();
    let mut out = alloc::vec![0.0; grid.len()];
    for i in 1..grid.nr - 1 {
        let r = grid.r(i);
        let div_y = (r_times_yr(y, sym, r + 0.5 * hr)? - r_times_yr(y, sym, r - 0.5 * hr)?) / (r * hr);
        let u2 = sym.coeffs(r).u2;
        for j in 1..grid.nz - 1 {
            let s = psi[grid.index(i, j)];
            let (c, dc) = profiles.c.eval(s);
            out[grid.index(i, j)] = st.apply(grid, psi, i, j) / r + c * dc / u2 + profiles.p.deriv(s) + c * div_y;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// max |∂L/∂ψ_k + w_k E_h[ψ]_k| over interior nodes.
    pub max_deviation: f64,
    /// max |∂L/∂ψ_k|, for scale.
    pub max_gradient: f64,
    /// max |div_h Y − u·v/|u|⁴| over interior radii.
    pub div_y_error: f64,
}

/// Central differences of [`functional_eval`] against −E_h·weight at every interior node.
pub fn gradient_check<Y>(grid: &Grid2D, sym: GsSymmetry, profiles: &Profiles, y: &Y, psi: &[f64], step: f64) -> Result<GradientCheck>
where
    Y: VectorField + ?Sized,
{
    let e = discrete_euler_lagrange(grid, sym, profiles, y, psi)?;
    let mut work = psi.to_vec();
    let (mut dev, mut gmax) = (0.0f64, 0.0f64);
    for j in 1..grid.nz - 1 {
        for i in 1..grid.nr - 1 {
            let c = grid.index(i, j);
            work[c] = psi[c] + step;
            let lp = functional_eval(grid, sym, profiles, y, &work)?;
            work[c] = psi[c] - step;
            let lm = functional_eval(grid, sym, profiles, y, &work)?;
            work[c] = psi[c];
            let g = (lp - lm) / (2.0 * step);
            gmax = gmax.max(g.abs());
            dev = dev.max((g + grid.weight(i, j) * e[c]).abs());
        }
    }
    let hr = grid.hr();
    let mut div_y_error = 0.0f64;
    for i in 1..grid.nr - 1 {
        let r = grid.r(i);
        let k = sym.coeffs(r);
        let div_y = (r_times_yr(y, sym, r + 0.5 * hr)? - r_times_yr(y, sym, r - 0.5 * hr)?) / (r * hr);
        div_y_error = div_y_error.max((div_y - k.u_dot_v / (k.u2 * k.u2)).abs());
    }
    Ok(GradientCheck { max_deviation: dev, max_gradient: gmax, div_y_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzReport {
    /// G = w/|u|⁴ at every node.
    pub g: Vec<Vec3>,
    pub g_max: f64,
    /// max |w_k D_km − w_m D_mk| / max |w_k D_km| over interior node pairs.
    pub asymmetry: f64,
}

/// Self-adjointness of DE = |u|⁻²Δ − F·∇ under the volume-weighted inner product.
///
/// Uses DE = div(|u|⁻²∇ψ) + G·∇ψ, an identity for any u: the first part is
/// assembled in flux form and is symmetric, so any asymmetry comes from G.
/// Test functions are nodal indicators on the reduced grid of `sym`.
pub fn helmholtz_check<U>(u: &U, grid: &Grid2D, sym: GsSymmetry) -> Result<HelmholtzReport>
where
    U: VectorField + ?Sized,
{
    let (hr, hz) = (grid.hr(), grid.hz());
    let inv_u2 = |r: f64, z: f64| -> Result<f64> {
        let n = u.value(sym.point(r, z))?.norm_sq();
        if n == 0.0 { Err(Error::ZeroU) } else { Ok(1.0 / n) }
    };
    let mut g = Vec::with_capacity(grid.len());
    for j in 0..grid.nz {
        for i in 0..grid.nr {
            let x = sym.point(grid.r(i), grid.zeta(j));
            let uj = u.jet1(x)?;
            let u2 = uj.value.norm_sq();
            if u2 == 0.0 {
                return Err(Error::ZeroU);
            }
            g.push(killing_defect(&uj) / (u2 * u2));
        }
    }
    let g_max = g.iter().map(|v| v.norm()).fold(0.0, f64::max);

    // weighted off-diagonal entries W·D for the four neighbours of each interior node
    let interior = |i: usize, j: usize| i >= 1 && j >= 1 && i + 1 < grid.nr && j + 1 < grid.nz;
    let entry = |i: usize, j: usize, di: isize, dj: isize| -> Result<f64> {
        let r = grid.r(i);
        let z = grid.zeta(j);
        let x = sym.point(r, z);
        let gk = g[grid.index(i, j)];
        let w = grid.weight(i, j) / (hr * hz);
        let v = if dj == 0 {
            let rf = r + 0.5 * di as f64 * hr;
            let rhat = Vec3::new(x.x, x.y, 0.0) / r;
            rf * inv_u2(rf, z)? / (r * hr * hr) + di as f64 * gk.dot(rhat) / (2.0 * hr)
        } else {
            let zf = z + 0.5 * dj as f64 * hz;
            let gz = sym.grad_zeta(x);
            inv_u2(r, zf)? * gz.norm_sq() / (hz * hz) + dj as f64 * gk.dot(gz) / (2.0 * hz)
        };
        Ok(w * v)
    };
    let (mut asym, mut scale) = (0.0f64, 0.0f64);
    for j in 1..grid.nz - 1 {
        for i in 1..grid.nr - 1 {
            for (di, dj) in [(1isize, 0isize), (0, 1)] {
                let (i2, j2) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                if !interior(i2, j2) {
                    continue;
                }
                let a = entry(i, j, di, dj)?;
                let b = entry(i2, j2, -di, -dj)?;
                asym = asym.max((a - b).abs());
                scale = scale.max(a.abs()).max(b.abs());
            }
        }
    }
    let asymmetry = if scale > 0.0 { asym / scale } else { 0.0 };
    Ok(HelmholtzReport { g, g_max, asymmetry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldKind, PsiKind, ScalarModel};

    fn solovev_psi() -> ScalarModel<PsiKind> {
        ScalarModel::new(PsiKind::Solovev { r0: 1.0, p1: 2.0 })
    }

    #[test]
    fn pre_gs_trivial_uniform_case() {
        let b = Model::new(FieldKind::Uniform { b0: Vec3::new(0.0, 0.0, 2.0) });
        let u = Model::new(SymmetryKind::Constant(Vec3::X));
        // B×u = (0, 2, 0) = ∇ψ
        let psi = ScalarModel::new(PsiKind::Linear { grad: Vec3::new(0.0, 2.0, 0.0), offset: 0.0 });
        let r = pre_gs_residual(&b, &u, &psi, Vec3::new(0.3, 0.1, -0.4)).unwrap();
        assert_eq!(r.full, 0.0);
        assert_eq!(r.alt, 0.0);
    }

    #[test]
    fn qsgs_cancels_for_r_squared() {
        let psi = ScalarModel::new(PsiKind::custom("r^2").unwrap());
        let u = Model::new(SymmetryKind::Axisym);
        let prof = Profiles { p: Profile::constant(0.3), c: Profile::constant(1.7) };
        for x in [Vec3::new(0.7, 0.2, 0.1), Vec3::new(-1.1, 0.4, 2.0)] {
            let r = qsgs_residual(&psi.jet2(x).unwrap(), &u.jet1(x).unwrap(), &prof).unwrap();
            assert!(r.abs() < 1e-13, "{r}");
        }
    }

    #[test]
    fn qsgs_vanishes_for_solovev() {
        let (psi, u) = (solovev_psi(), Model::new(SymmetryKind::Axisym));
        let prof = Profiles::solovev(1.0, 2.0, 1.0);
        for x in [Vec3::new(0.8, 0.3, 0.2), Vec3::new(1.2, -0.5, -0.3), Vec3::new(0.2, 1.1, 0.05)] {
            let r = qsgs_residual(&psi.jet2(x).unwrap(), &u.jet1(x).unwrap(), &prof).unwrap();
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn killing_candidates_have_no_side_conditions() {
        let psi = ScalarModel::new(PsiKind::custom("sin(x) * exp(0.3 * z) + y^3").unwrap());
        let c = Profile::Poly(alloc::vec![0.5, 2.0, -1.0]);
        for sym in [SymmetryKind::Axisym, SymmetryKind::Helical { l: 0.7 }] {
            let u = Model::new(sym);
            let s = supplementary_residuals(&u, &psi, &c, Vec3::new(0.9, -0.4, 0.3)).unwrap();
            assert_eq!((s.r1, s.r2, s.r3, s.degeneracy), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn make_y_cases() {
        let y = make_y(&SymmetryKind::Axisym).unwrap();
        assert_eq!(y.value(Vec3::new(1.0, 2.0, 3.0)).unwrap(), Vec3::ZERO);
        let l = 0.7;
        let y = make_y(&SymmetryKind::Helical { l }).unwrap();
        let x = Vec3::from_cylindrical(1.3, 0.4, -2.0);
        let r = 1.3;
        let yr = y.value(x).unwrap().dot(Vec3::new(x.x, x.y, 0.0) / r);
        assert!((yr + l / (r * (r * r + l * l))).abs() < 1e-15);
        let small = Model::new(YField { l: 1e-9 }).value(x).unwrap();
        assert!(small.norm() < 1e-8);
        assert_eq!(make_y(&SymmetryKind::Constant(Vec3::Z)), Err(Error::UnsupportedSymmetry));
    }

    #[test]
    fn r_squared_is_reproduced_exactly() {
        let grid = Grid2D::new((0.5, 1.5), (-0.5, 0.5), 17, 13).unwrap();
        let prof = Profiles { p: Profile::constant(0.0), c: Profile::constant(1.0) };
        let mut pb = GsProblem::with_boundary(grid, GsSymmetry::Axisym, prof, |r, _| r * r);
        // undamped: the problem is linear, so one step lands on the discrete solution
        pb.options.damping = 1.0;
        let sol = solve_gs(&pb).unwrap();
        assert_eq!(sol.iterations, 2);
        let exact = grid.sample(|r, _| r * r);
        let err = sol.psi.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn solver_reports_no_convergence() {
        let grid = Grid2D::new((0.5, 1.5), (-0.5, 0.5), 9, 9).unwrap();
        let mut pb = GsProblem::with_boundary(grid, GsSymmetry::Axisym, Profiles::solovev(1.0, 2.0, 1.0), |_, _| 0.0);
        pb.options.max_iter = 2;
        assert!(matches!(solve_gs(&pb), Err(Error::NoConvergence { iterations: 2, .. })));
    }

    #[test]
    fn constant_psi_gradient_check() {
        let grid = Grid2D::new((0.6, 1.4), (-0.4, 0.4), 9, 9).unwrap();
        let sym = GsSymmetry::Helical { l: 0.7 };
        let y = make_y(&sym.candidate()).unwrap();
        let prof = Profiles { p: Profile::Poly(alloc::vec![0.0, 1.0, 0.5]), c: Profile::Poly(alloc::vec![1.0, 0.5]) };
        let psi = alloc::vec![0.3; grid.len()];
        let chk = gradient_check(&grid, sym, &prof, &y, &psi, 1e-6).unwrap();
        assert!(chk.max_deviation < 1e-8, "{chk:?}");
    }

    #[test]
    fn constant_candidate_is_self_adjoint() {
        let grid = Grid2D::new((0.6, 1.4), (-0.4, 0.4), 9, 9).unwrap();
        let u = Model::new(SymmetryKind::Constant(Vec3::new(0.0, 0.0, 2.0)));
        let rep = helmholtz_check(&u, &grid, GsSymmetry::Axisym).unwrap();
        assert_eq!(rep.g_max, 0.0);
        assert!(rep.asymmetry < 1e-12);
    }
}
