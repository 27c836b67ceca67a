//! Run configuration: a JSON document with every key optional, unknown keys
//! rejected, and a SHA-256 hash of its canonical form stamped on artifacts.

use std::path::{Path, PathBuf};

use peaklab::geometry::DomainSpec;
use peaklab::pohozaev::Side;
use peaklab::solver::{BoundaryCondition, SolverParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Defaults and layout, printed by `--help`.
pub const CONFIG_HELP: &str = r#"Config file (JSON, every key optional, unknown keys rejected):
  domain        {"type":"disk","center":[0,0],"radius":1}   default: the field's natural
                {"type":"rectangle","lo":[..],"hi":[..]}     domain, else the unit disk
                {"type":"polygon","vertices":[[..],..]}
  field         {"source":"catalog:coscos","params":{"k":1}} or {"source":"csv:u.csv"}
                default: none (the problem is solved)
  nonlinearity  {"family":"power","m":2,"a":1,"c":1}; families: power, linear, constant,
                example1_printed, tabulated, recovered (from a radial field)
  boundary      "dirichlet" | "neumann"                      default "dirichlet"
  grid          {"n":128}                                    nodes along the longer side
  solver        {"method":"grid","center_guess":1.0,"params":{"tol_residual":null,
                 "max_newton":50,"damping":0.5,"max_halvings":20,"continuation_steps":0,
                 "max_shooting":100,"radial_nodes":2048}}    methods: grid, radial
  analysis      {"tau_g":null,"deltas":null,"ring_samples":64,"levels":[],"level_count":10,
                 "hypothesis_interval":null,
                 "ledger":{"points":[],"deltas":[],"side":"whole","path":null,"n":256,
                           "arc_vertices":4096,"random_points":0,"refine":true}}
                null tau_g/deltas pick resolution-based defaults; empty levels pick
                level_count evenly spaced values; empty ledger points use the bbox centre,
                empty ledger deltas use diam/4; random_points are drawn from --seed
  output        {"dir":null,"formats":["json","csv","svg"]}"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub domain: Option<DomainSpec>,
    pub field: Option<FieldSpec>,
    pub nonlinearity: Option<Value>,
    pub boundary: BoundaryCondition,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            domain: None,
            field: None,
            nonlinearity: None,
            boundary: BoundaryCondition::Dirichlet,
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// `catalog:<name>` or `csv:<path>`.
    pub source: String,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: String,
    pub center_guess: f64,
    pub params: SolverParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: "grid".into(),
            center_guess: 1.0,
            params: SolverParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub tau_g: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub ring_samples: usize,
    pub levels: Vec<f64>,
    pub level_count: usize,
    pub hypothesis_interval: Option<[f64; 2]>,
    pub ledger: LedgerConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tau_g: None,
            deltas: None,
            ring_samples: 64,
            levels: Vec::new(),
            level_count: 10,
            hypothesis_interval: None,
            ledger: LedgerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerConfig {
    pub points: Vec<[f64; 2]>,
    pub deltas: Vec<f64>,
    pub side: Side,
    pub path: Option<String>,
    pub n: usize,
    pub arc_vertices: usize,
    pub random_points: usize,
    pub refine: bool,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            points: Vec::new(),
            deltas: Vec::new(),
            side: Side::Whole,
            path: None,
            n: 256,
            arc_vertices: 4096,
            random_points: 0,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: vec![Format::Json, Format::Csv, Format::Svg],
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.grid.n < 8 {
            return bad(format!("grid.n must be at least 8, got {}", self.grid.n));
        }
        if self.analysis.ring_samples < 8 {
            return bad("analysis.ring_samples must be at least 8".into());
        }
        if self.analysis.level_count == 0 {
            return bad("analysis.level_count must be positive".into());
        }
        if let Some(t) = self.analysis.tau_g {
            if !(t > 0.0 && t.is_finite()) {
                return bad("analysis.tau_g must be positive".into());
            }
        }
        if let Some(d) = &self.analysis.deltas {
            if d.is_empty() || d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("analysis.deltas must be positive".into());
            }
        }
        if self.analysis.ledger.deltas.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("analysis.ledger.deltas must be positive".into());
        }
        if let Some([lo, hi]) = self.analysis.hypothesis_interval {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return bad("analysis.hypothesis_interval must satisfy lo < hi".into());
            }
        }
        if let Some(f) = &self.field {
            if !(f.source.starts_with("catalog:") || f.source.starts_with("csv:")) {
                return bad(format!("field.source must start with 'catalog:' or 'csv:', got '{}'", f.source));
            }
        }
        if let Some(nl) = &self.nonlinearity {
            if nl.get("family").and_then(Value::as_str).is_none() {
                return bad("nonlinearity needs a 'family' string".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON, with the output directory left out so
    /// the hash depends only on what is computed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::parse("{}").unwrap(), Config::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(Config::parse(r#"{"grdi":{"n":64}}"#), Err(CliError::Config(_))));
        assert!(matches!(Config::parse(r#"{"grid":{"n":64,"m":1}}"#), Err(CliError::Config(_))));
        assert!(matches!(
            Config::parse(r#"{"domain":{"type":"disk","center":[0,0],"radius":1,"r":2}}"#),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = Config::parse(r#"{"output":{"dir":"a"}}"#).unwrap();
        let b = Config::parse(r#"{"output":{"dir":"b"}}"#).unwrap();
        let c = Config::parse(r#"{"grid":{"n":64}}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::parse(r#"{"grid":{"n":2}}"#).is_err());
        assert!(Config::parse(r#"{"field":{"source":"coscos"}}"#).is_err());
        assert!(Config::parse(r#"{"nonlinearity":{"m":2}}"#).is_err());
    }
}
