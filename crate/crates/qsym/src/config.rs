//! Run configuration: a sectioned TOML document, validated before any computation.

use std::fmt;

use serde::{Deserialize, Serialize};

use qsym_core::equilibrium::{Profile, Profiles};
use qsym_core::expr::Expr;
use qsym_core::fields::{DerivativeMode, FieldKind, Model, PsiKind, ScalarModel, SymmetryKind};
use qsym_core::gs::{Discretization, GsSymmetry};
use qsym_core::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldSpec,
    #[serde(default)]
    pub derivatives: Derivatives,
    pub symmetry: Option<SymmetrySpec>,
    /// Flux function; defaults to the field's own when it has one.
    pub psi: Option<PsiSpec>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub orbit: Option<OrbitSpec>,
    pub flux: Option<FluxSpec>,
    pub gs: Option<GsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Solovev {
        #[serde(default = "one")]
        r0: f64,
        #[serde(default = "one")]
        c0: f64,
        #[serde(default = "two")]
        p1: f64,
    },
    Helical { l: f64, c0: f64, a: f64, delta: f64 },
    Mirror { b0: f64, length: f64 },
    Perturbed { base: Box<FieldSpec>, eps: f64, n: u32 },
    Uniform { b0: [f64; 3] },
    Custom { components: [String; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    Analytic,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Derivatives {
    pub mode: DerivativeKind,
    pub step: f64,
}

impl Default for Derivatives {
    fn default() -> Self {
        Derivatives { mode: DerivativeKind::Analytic, step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetrySpec {
    Axisym,
    Helical { l: f64 },
    Constant { vector: [f64; 3] },
    Custom { components: [String; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    Solovev {
        #[serde(default = "one")]
        r0: f64,
        #[serde(default = "two")]
        p1: f64,
    },
    Helical { l: f64, a: f64, delta: f64 },
    Mirror { b0: f64, length: f64 },
    Custom { expr: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub points: usize,
    /// Cylindrical radius range.
    pub r: [f64; 2],
    pub z: [f64; 2],
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { points: 1000, r: [0.75, 1.35], z: [-0.35, 0.35], seed: 1 }
    }
}

/// Pass thresholds, one per family of checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub qs: f64,
    pub consequences: f64,
    pub condition_sets: f64,
    pub killing: f64,
    pub energy: f64,
    pub noether: f64,
    pub winding: f64,
    pub winding_u: f64,
    pub period: f64,
    pub arc_length: f64,
    pub gs_residual: f64,
    pub gs_error: f64,
    pub supplementary: f64,
    pub gradient: f64,
    pub helmholtz: f64,
    pub y_divergence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            qs: 1e-8,
            consequences: 1e-7,
            condition_sets: 1e-7,
            killing: 1e-8,
            energy: 1e-8,
            noether: 1e-8,
            winding: 1e-3,
            winding_u: 1e-9,
            period: 1e-6,
            arc_length: 1e-6,
            gs_residual: 1e-8,
            gs_error: 1e-3,
            supplementary: 1e-12,
            gradient: 1e-6,
            helmholtz: 1e-10,
            y_divergence: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitModel {
    Fgcm,
    Zgcm,
    Relativistic,
    Electrostatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Deuteron,
    Proton,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSpec {
    pub model: OrbitModel,
    pub species: Species,
    /// Mass in kg and charge in C, for `species = "custom"` only.
    pub mass: Option<f64>,
    pub charge: Option<f64>,
    pub energy_ev: f64,
    /// v∥/|v| at the start.
    pub pitch: f64,
    pub x0: [f64; 3],
    /// Run length in units of 2π/|v| (the time to travel 2π metres).
    pub transits: f64,
    pub samples: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Relative floor on |B̃∥|/|B|.
    pub bpar_floor: f64,
    /// Electrostatic potential Φ(x, y, z) in volts, for `model = "electrostatic"`.
    pub potential: Option<String>,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        OrbitSpec {
            model: OrbitModel::Fgcm,
            species: Species::Deuteron,
            mass: None,
            charge: None,
            energy_ev: 1e3,
            pitch: 0.8,
            x0: [1.2, 0.0, 0.0],
            transits: 100.0,
            samples: 1001,
            rtol: 1e-10,
            atol: 1e-10,
            bpar_floor: qsym_core::gcmotion::DEFAULT_BPAR_FLOOR,
            potential: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxSpec {
    /// Magnetic axis (r, z) used as the poloidal angle origin.
    pub axis: [f64; 2],
    /// Midplane radii of the surfaces to examine.
    pub surfaces: Vec<f64>,
    pub loop_points: usize,
    pub turns_b: usize,
    pub turns_u: usize,
    /// Points per surface for the u-line period.
    pub period_points: usize,
    pub period_t_max: f64,
    pub arc_lambdas: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FluxSpec {
    fn default() -> Self {
        FluxSpec {
            axis: [1.0, 0.0],
            surfaces: vec![1.1, 1.2, 1.3],
            loop_points: 128,
            turns_b: 200,
            turns_u: 5,
            period_points: 5,
            period_t_max: 20.0,
            arc_lambdas: vec![0.5, 1.0, 2.0],
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizationSpec {
    FluxForm,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsSpec {
    pub r: [f64; 2],
    pub zeta: [f64; 2],
    pub nr: usize,
    pub nz: usize,
    pub discretization: DiscretizationSpec,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Polynomial coefficients of p(ψ) and C(ψ), constant term first.
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    /// Compare the solution with the `[psi]` model, which also supplies the boundary data.
    pub compare: bool,
    /// Grid for the functional gradient check (cost grows with the square of its size).
    pub check_nr: usize,
    pub check_nz: usize,
    pub gradient_step: f64,
}

impl Default for GsSpec {
    fn default() -> Self {
        GsSpec {
            r: [0.6, 1.4],
            zeta: [-0.4, 0.4],
            nr: 65,
            nz: 65,
            discretization: DiscretizationSpec::FluxForm,
            damping: 0.8,
            tol: 1e-13,
            max_iter: 500,
            p: vec![1.0, -2.0],
            c: vec![1.0],
            compare: true,
            check_nr: 15,
            check_nz: 13,
            gradient_step: 1e-6,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// One problem found in a config, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Parse(Issue),
    Validation(Vec<Issue>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(i) => write!(f, "parse error: {i}"),
            ConfigError::Validation(list) => {
                f.write_str("invalid config:")?;
                for i in list {
                    write!(f, "\n  {i}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of `key = ...` inside `[section]` (or a dotted sub-table of it).
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(head) = line.strip_prefix('[') {
            current = head.trim_end_matches(']').trim().to_string();
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if in_section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

/// Tagged tables report errors against the whole table; point unknown keys at their own line.
fn refine_line(text: &str, line: Option<usize>, message: &str) -> Option<usize> {
    let key = message.strip_prefix("unknown field `").and_then(|r| r.split('`').next());
    let (Some(key), Some(l)) = (key, line) else { return line };
    let header = text.lines().nth(l - 1).unwrap_or("").trim();
    let section = header.strip_prefix('[').map(|h| h.trim_end_matches(']').trim()).unwrap_or("");
    key_line(text, section, key).filter(|_| !section.is_empty()).or(line)
}

fn section_line(text: &str, section: &str) -> Option<usize> {
    text.lines().position(|l| l.trim() == format!("[{section}]")).map(|n| n + 1)
}

struct Checker<'a> {
    text: &'a str,
    issues: Vec<Issue>,
}

impl Checker<'_> {
    fn push(&mut self, section: &str, key: &str, message: String) {
        let line = key_line(self.text, section, key).or_else(|| section_line(self.text, section));
        self.issues.push(Issue { line, message: format!("{section}.{key}: {message}") });
    }

    fn positive(&mut self, section: &str, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(section, key, format!("must be positive and finite, got {v}"));
        }
    }

    fn finite(&mut self, section: &str, key: &str, v: &[f64]) {
        if v.iter().any(|x| !x.is_finite()) {
            self.push(section, key, "must be finite".into());
        }
    }

    fn range(&mut self, section: &str, key: &str, v: [f64; 2]) {
        if !(v[0] < v[1]) || !v[0].is_finite() || !v[1].is_finite() {
            self.push(section, key, format!("needs lo < hi, got [{}, {}]", v[0], v[1]));
        }
    }

    fn expr(&mut self, section: &str, key: &str, text: &str) {
        if let Err(e) = Expr::parse(text) {
            self.push(section, key, format!("bad expression {text:?}: {e}"));
        }
    }

    fn field(&mut self, f: &FieldSpec) {
        match f {
            FieldSpec::Solovev { r0, c0, p1 } => {
                self.positive("field", "r0", *r0);
                self.finite("field", "c0", &[*c0]);
                self.finite("field", "p1", &[*p1]);
            }
            FieldSpec::Helical { l, c0, a, delta } => {
                if *l == 0.0 || !l.is_finite() {
                    self.push("field", "l", "must be non-zero".into());
                }
                self.finite("field", "c0", &[*c0, *a, *delta]);
            }
            FieldSpec::Mirror { b0, length } => {
                self.finite("field", "b0", &[*b0]);
                self.positive("field", "length", *length);
            }
            FieldSpec::Perturbed { base, eps, .. } => {
                self.finite("field", "eps", &[*eps]);
                if matches!(**base, FieldSpec::Perturbed { .. }) {
                    self.push("field", "base", "cannot itself be perturbed".into());
                }
                self.field(base);
            }
            FieldSpec::Uniform { b0 } => self.finite("field", "b0", b0),
            FieldSpec::Custom { components } => {
                for c in components {
                    self.expr("field", "components", c);
                }
            }
        }
    }
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let line = e.span().map(|s| line_of(text, s.start));
        ConfigError::Parse(Issue { line: refine_line(text, line, &message), message })
    })?;
    let mut ck = Checker { text, issues: Vec::new() };
    ck.field(&cfg.field);
    if cfg.derivatives.mode == DerivativeKind::Fd {
        ck.positive("derivatives", "step", cfg.derivatives.step);
    }
    match &cfg.symmetry {
        Some(SymmetrySpec::Helical { l }) if *l == 0.0 || !l.is_finite() => ck.push("symmetry", "l", "must be non-zero".into()),
        Some(SymmetrySpec::Constant { vector }) => ck.finite("symmetry", "vector", vector),
        Some(SymmetrySpec::Custom { components }) => {
            for c in components {
                ck.expr("symmetry", "components", c);
            }
        }
        _ => {}
    }
    if let Some(PsiSpec::Custom { expr }) = &cfg.psi {
        ck.expr("psi", "expr", expr);
    }
    let s = &cfg.sampling;
    if s.points == 0 {
        ck.push("sampling", "points", "must be at least 1".into());
    }
    ck.range("sampling", "r", s.r);
    if s.r[0] < 0.0 {
        ck.push("sampling", "r", "radii must be non-negative".into());
    }
    ck.range("sampling", "z", s.z);
    let t = &cfg.thresholds;
    for (k, v) in [
        ("qs", t.qs),
        ("consequences", t.consequences),
        ("condition_sets", t.condition_sets),
        ("killing", t.killing),
        ("energy", t.energy),
        ("noether", t.noether),
        ("winding", t.winding),
        ("winding_u", t.winding_u),
        ("period", t.period),
        ("arc_length", t.arc_length),
        ("gs_residual", t.gs_residual),
        ("gs_error", t.gs_error),
        ("supplementary", t.supplementary),
        ("gradient", t.gradient),
        ("helmholtz", t.helmholtz),
        ("y_divergence", t.y_divergence),
    ] {
        ck.positive("thresholds", k, v);
    }
    if let Some(o) = &cfg.orbit {
        ck.positive("orbit", "energy_ev", o.energy_ev);
        if !(o.pitch.abs() <= 1.0) {
            ck.push("orbit", "pitch", format!("must lie in [-1, 1], got {}", o.pitch));
        }
        ck.finite("orbit", "x0", &o.x0);
        ck.positive("orbit", "transits", o.transits);
        if o.samples < 2 {
            ck.push("orbit", "samples", "must be at least 2".into());
        }
        ck.positive("orbit", "rtol", o.rtol);
        ck.positive("orbit", "atol", o.atol);
        ck.positive("orbit", "bpar_floor", o.bpar_floor);
        match (o.species, o.mass, o.charge) {
            (Species::Custom, Some(m), Some(e)) => {
                ck.positive("orbit", "mass", m);
                if e == 0.0 || !e.is_finite() {
                    ck.push("orbit", "charge", "must be non-zero".into());
                }
            }
            (Species::Custom, _, _) => ck.push("orbit", "species", "custom species needs mass and charge".into()),
            (_, None, None) => {}
            _ => ck.push("orbit", "mass", "mass and charge apply only to species = \"custom\"".into()),
        }
        match (&o.model, &o.potential) {
            (OrbitModel::Electrostatic, Some(p)) => ck.expr("orbit", "potential", p),
            (OrbitModel::Electrostatic, None) => ck.push("orbit", "potential", "required for the electrostatic model".into()),
            (_, Some(_)) => ck.push("orbit", "potential", "only used by the electrostatic model".into()),
            _ => {}
        }
    }
    if let Some(fl) = &cfg.flux {
        if fl.surfaces.is_empty() {
            ck.push("flux", "surfaces", "needs at least one surface".into());
        }
        ck.finite("flux", "surfaces", &fl.surfaces);
        if fl.loop_points < 8 {
            ck.push("flux", "loop_points", "must be at least 8".into());
        }
        if fl.turns_b == 0 || fl.turns_u == 0 {
            ck.push("flux", "turns_b", "turn counts must be positive".into());
        }
        if fl.period_points == 0 {
            ck.push("flux", "period_points", "must be at least 1".into());
        }
        ck.positive("flux", "period_t_max", fl.period_t_max);
        ck.finite("flux", "arc_lambdas", &fl.arc_lambdas);
        ck.positive("flux", "rtol", fl.rtol);
        ck.positive("flux", "atol", fl.atol);
    }
    if let Some(g) = &cfg.gs {
        ck.range("gs", "r", g.r);
        if g.r[0] <= 0.0 {
            ck.push("gs", "r", "radii must be positive".into());
        }
        ck.range("gs", "zeta", g.zeta);
        if g.nr < 8 || g.nz < 8 {
            ck.push("gs", "nr", "grid needs at least 8 nodes per direction".into());
        }
        if g.check_nr < 3 || g.check_nz < 3 {
            ck.push("gs", "check_nr", "check grid needs at least 3 nodes per direction".into());
        }
        if !(g.damping > 0.0 && g.damping <= 1.0) {
            ck.push("gs", "damping", format!("must lie in (0, 1], got {}", g.damping));
        }
        ck.positive("gs", "tol", g.tol);
        ck.positive("gs", "gradient_step", g.gradient_step);
        if g.max_iter == 0 {
            ck.push("gs", "max_iter", "must be positive".into());
        }
        if g.p.is_empty() || g.c.is_empty() {
            ck.push("gs", "p", "profiles need at least one coefficient".into());
        }
        ck.finite("gs", "p", &g.p);
        ck.finite("gs", "c", &g.c);
        if !matches!(cfg.symmetry, Some(SymmetrySpec::Axisym) | Some(SymmetrySpec::Helical { .. })) {
            ck.push("symmetry", "kind", "the GS solver needs an axisym or helical symmetry".into());
        }
        if g.compare && cfg.psi.is_none() && cfg.field_flux().is_none() {
            ck.push("gs", "compare", "needs a [psi] model for boundary data".into());
        }
    }
    if ck.issues.is_empty() {
        Ok(cfg)
    } else {
        // Document order; issues without a line go last.
        ck.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(ConfigError::Validation(ck.issues))
    }
}

impl FieldSpec {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldSpec::Solovev { r0, c0, p1 } => FieldKind::solovev(*r0, *c0, *p1),
            FieldSpec::Helical { l, c0, a, delta } => FieldKind::Helical { l: *l, c0: *c0, a: *a, delta: *delta },
            FieldSpec::Mirror { b0, length } => FieldKind::Mirror { b0: *b0, length: *length },
            FieldSpec::Perturbed { base, eps, n } => FieldKind::perturbed(base.kind(), *eps, *n),
            FieldSpec::Uniform { b0 } => FieldKind::Uniform { b0: Vec3::new(b0[0], b0[1], b0[2]) },
            FieldSpec::Custom { components } => {
                FieldKind::custom(&components[0], &components[1], &components[2]).expect("validated")
            }
        }
    }
}

impl SymmetrySpec {
    pub fn kind(&self) -> SymmetryKind {
        match self {
            SymmetrySpec::Axisym => SymmetryKind::Axisym,
            SymmetrySpec::Helical { l } => SymmetryKind::Helical { l: *l },
            SymmetrySpec::Constant { vector } => SymmetryKind::Constant(Vec3::new(vector[0], vector[1], vector[2])),
            SymmetrySpec::Custom { components } => {
                SymmetryKind::custom(&components[0], &components[1], &components[2]).expect("validated")
            }
        }
    }
}

impl PsiSpec {
    pub fn kind(&self) -> PsiKind {
        match self {
            PsiSpec::Solovev { r0, p1 } => PsiKind::Solovev { r0: *r0, p1: *p1 },
            PsiSpec::Helical { l, a, delta } => PsiKind::Helical { l: *l, a: *a, delta: *delta },
            PsiSpec::Mirror { b0, length } => PsiKind::Mirror { b0: *b0, length: *length },
            PsiSpec::Custom { expr } => PsiKind::custom(expr).expect("validated"),
        }
    }
}

impl RunConfig {
    pub fn derivative_mode(&self) -> DerivativeMode {
        match self.derivatives.mode {
            DerivativeKind::Analytic => DerivativeMode::Analytic,
            DerivativeKind::Fd => DerivativeMode::FiniteDifference { h: self.derivatives.step },
        }
    }

    pub fn field_model(&self) -> Model<FieldKind> {
        Model::new(self.field.kind()).with_mode(self.derivative_mode())
    }

    pub fn symmetry_model(&self) -> Option<Model<SymmetryKind>> {
        self.symmetry.as_ref().map(|s| Model::new(s.kind()).with_mode(self.derivative_mode()))
    }

    fn field_flux(&self) -> Option<PsiKind> {
        self.field.kind().flux_function()
    }

    /// The `[psi]` model, or the field's built-in flux function.
    pub fn psi_model(&self) -> Option<ScalarModel<PsiKind>> {
        let kind = self.psi.as_ref().map(PsiSpec::kind).or_else(|| self.field_flux())?;
        Some(ScalarModel::new(kind).with_mode(self.derivative_mode()))
    }

    pub fn gs_symmetry(&self) -> Option<GsSymmetry> {
        match self.symmetry {
            Some(SymmetrySpec::Axisym) => Some(GsSymmetry::Axisym),
            Some(SymmetrySpec::Helical { l }) => Some(GsSymmetry::Helical { l }),
            _ => None,
        }
    }
}

impl GsSpec {
    pub fn profiles(&self) -> Profiles {
        Profiles { p: Profile::Poly(self.p.clone()), c: Profile::Poly(self.c.clone()) }
    }

    pub fn discretization(&self) -> Discretization {
        match self.discretization {
            DiscretizationSpec::FluxForm => Discretization::FluxForm,
            DiscretizationSpec::Central => Discretization::Central,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_uniform_config() {
        let cfg = parse_config("[field]\nkind = \"uniform\"\nb0 = [0.0, 0.0, 1.0]\n").unwrap();
        assert_eq!(cfg.field, FieldSpec::Uniform { b0: [0.0, 0.0, 1.0] });
        assert_eq!(cfg.sampling, Sampling::default());
        assert_eq!(cfg.thresholds, Thresholds::default());
        assert!(cfg.symmetry.is_none() && cfg.orbit.is_none());
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let err = parse_config("[field]\nkind = \"uniform\"\nb0 = [0.0, 0.0, 1.0]\n\nfied = 3\n").unwrap_err();
        match err {
            ConfigError::Parse(i) => {
                assert_eq!(i.line, Some(5), "{i}");
                assert!(i.message.contains("fied"), "{i}");
            }
            other => panic!("{other:?}"),
        }
        let err = parse_config("fied = 1\n[field]\nkind = \"uniform\"\nb0 = [0.0, 0.0, 1.0]\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Parse(i) if i.line == Some(1) && i.message.contains("fied")), "{err}");
    }

    #[test]
    fn unknown_field_kind() {
        let err = parse_config("[field]\nkind = \"tokamak\"\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Parse(i) if i.message.contains("tokamak")), "{err}");
    }

    #[test]
    fn validation_collects_every_issue() {
        let text = "[field]\nkind = \"solovev\"\n\n[thresholds]\nqs = -1e-8\n\n[sampling]\npoints = 0\n";
        match parse_config(text).unwrap_err() {
            ConfigError::Validation(list) => {
                assert_eq!(list.len(), 2, "{list:?}");
                assert_eq!(list[0].line, Some(5));
                assert!(list[0].message.contains("thresholds.qs"));
                assert_eq!(list[1].line, Some(8));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_required_key() {
        let err = parse_config("[field]\nkind = \"mirror\"\nb0 = 1.0\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Parse(i) if i.message.contains("length")), "{err}");
    }

    #[test]
    fn bad_expression_is_a_validation_error() {
        let text = "[field]\nkind = \"custom\"\ncomponents = [\"x\", \"y +\", \"1\"]\n";
        assert!(matches!(parse_config(text).unwrap_err(), ConfigError::Validation(l) if l[0].line == Some(3)));
    }

    #[test]
    fn nested_perturbed_field() {
        let text = "[field]\nkind = \"perturbed\"\neps = 0.1\nn = 2\n\n[field.base]\nkind = \"solovev\"\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.field.kind(), FieldKind::perturbed(FieldKind::solovev(1.0, 1.0, 2.0), 0.1, 2));
        assert_eq!(cfg.psi_model().unwrap().kind, PsiKind::Solovev { r0: 1.0, p1: 2.0 });
    }
}
