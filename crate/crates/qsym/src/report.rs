//! Machine-readable run reports.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// The mathematical relation a report row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// u·∇|B| = 0
    QsModB,
    /// curl(B×u) = 0
    QsFlux,
    /// L_u b♭ = 0
    QsBFlat,
    /// div u = 0
    DivU,
    /// [u, B] = 0
    BracketUB,
    /// u×J − ∇(u·B) = 0
    LieBFlat,
    /// L_u(u·B) = 0
    LieUB,
    /// [u, J] = 0
    BracketUJ,
    /// L_u(J·B) = 0
    LieJB,
    /// The three alternative condition sets agree pointwise.
    ConditionSets,
    /// w = v×u + ∇|u|² = 0
    KillingDefect,
    /// H = ½mv∥² + μ|B| (+ eΦ) conserved
    Energy,
    /// K = −eψ + m v∥ u·b conserved
    NoetherInvariant,
    /// Loop-integral winding ratio equals the trajectory estimate.
    WindingRatio,
    /// u winds purely toroidally.
    WindingU,
    /// u-lines close with a common period.
    CirclePeriod,
    /// Field-line length between two |B| levels is invariant under the u flow.
    ArcLength,
    /// Discrete quasi-symmetric GS residual.
    GsResidual,
    /// Solution error against a reference ψ.
    GsError,
    /// Supplementary conditions for a non-Killing u.
    Supplementary,
    /// Gradient of the discrete functional equals the weighted GS operator.
    VariationalGradient,
    /// Self-adjointness of the GS operator.
    Helmholtz,
    /// div Y = u·v/|u|⁴
    YDivergence,
}

impl Relation {
    pub const ALL: [Relation; 23] = [
        Relation::QsModB,
        Relation::QsFlux,
        Relation::QsBFlat,
        Relation::DivU,
        Relation::BracketUB,
        Relation::LieBFlat,
        Relation::LieUB,
        Relation::BracketUJ,
        Relation::LieJB,
        Relation::ConditionSets,
        Relation::KillingDefect,
        Relation::Energy,
        Relation::NoetherInvariant,
        Relation::WindingRatio,
        Relation::WindingU,
        Relation::CirclePeriod,
        Relation::ArcLength,
        Relation::GsResidual,
        Relation::GsError,
        Relation::Supplementary,
        Relation::VariationalGradient,
        Relation::Helmholtz,
        Relation::YDivergence,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    /// `null` when the residual could not be computed.
    pub max_residual: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, relation: Relation, max_residual: f64, threshold: f64) -> Self {
        let finite = max_residual.is_finite();
        Check {
            name: name.to_string(),
            relation,
            max_residual: finite.then_some(max_residual),
            threshold,
            pass: finite && max_residual <= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    /// SHA-256 of the config text.
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub metadata: Metadata,
    pub status: Status,
    pub error: Option<String>,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    /// Command-specific scalars, keyed in sorted order.
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, config_text: &str, seed: u64) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            metadata: Metadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                seed,
            },
            status: Status::Complete,
            error: None,
            all_pass: true,
            checks: Vec::new(),
            details: Map::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.all_pass &= check.pass;
        self.checks.push(check);
    }

    pub fn detail<V: Into<Value>>(&mut self, key: &str, value: V) {
        self.details.insert(key.to_string(), value.into());
    }

    pub fn fail(&mut self, error: String) {
        self.status = Status::Failed;
        self.all_pass = false;
        self.error = Some(error);
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_residual_fails() {
        let c = Check::new("x", Relation::DivU, f64::NAN, 1.0);
        assert!(!c.pass && c.max_residual.is_none());
        assert!(Check::new("x", Relation::DivU, 0.5, 1.0).pass);
    }

    #[test]
    fn tags_are_unique_kebab_case() {
        let tags: Vec<String> = Relation::ALL.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        let mut sorted = tags.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), tags.len());
        assert!(tags.iter().all(|t| t.chars().all(|c| c == '"' || c == '-' || c.is_ascii_lowercase() || c.is_ascii_digit())));
    }

    #[test]
    fn report_round_trips() {
        let mut r = Report::new("verify", "a = 1\n", 7);
        r.push(Check::new("div_u", Relation::DivU, 1e-12, 1e-7));
        r.detail("points", 3);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.metadata.config_sha256.len(), 64);
    }
}
