//! Run configuration: a TOML file with `[family]`, `[experiment]` and
//! `[output]` sections, overridden by `--set key=value`.

use std::path::Path;

use homoclinic_core::family::{build_family, tune_to, FamilyHandle, GlobalRecipe, LocalMapParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// `x' = x_plus + P(eta)`, `y' = mu + x / P'(eta) + Q(eta)`.
    GeneralizedHenon,
    /// Swap between unit-Jacobian shears.
    ShearSandwich,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub recipe: Recipe,
    pub lambda: f64,
    /// Moser coefficients `beta_1, beta_2, ...`.
    pub beta: Vec<f64>,
    pub b: f64,
    pub d: f64,
    pub q3: f64,
    /// Generalized Hénon: `P(eta) = b eta + p2 eta^2 + p3 eta^3`.
    pub p2: f64,
    pub p3: f64,
    /// Shear sandwich: inner shear `h1 x + h2 x^2`.
    pub h1: f64,
    pub h2: f64,
    pub x_plus: f64,
    pub y_minus: f64,
    pub n0: u32,
    pub mu: f64,
    /// Retune the knobs to hit these invariants.
    pub alpha: Option<f64>,
    pub s0: Option<f64>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            recipe: Recipe::GeneralizedHenon,
            lambda: 0.5,
            beta: vec![1.0],
            b: 1.0,
            d: 1.0,
            q3: 0.0,
            p2: 0.3,
            p3: 0.0,
            h1: 0.1,
            h2: 0.0,
            x_plus: 0.9,
            y_minus: 1.0,
            n0: 1,
            mu: 0.0,
            alpha: None,
            s0: None,
        }
    }
}

impl FamilyConfig {
    pub fn recipe(&self) -> GlobalRecipe {
        let r = match self.recipe {
            Recipe::GeneralizedHenon => GlobalRecipe::generalized_henon(self.b, self.p2, self.p3, self.d, self.q3),
            Recipe::ShearSandwich => GlobalRecipe::shear_sandwich(self.b, self.h1, self.h2, self.d, self.q3),
        };
        r.with_homoclinic_points(self.x_plus, self.y_minus).with_n0(self.n0)
    }

    /// Builds the family and applies the `alpha` / `s0` targets if any.
    pub fn build(&self) -> homoclinic_core::Result<FamilyHandle> {
        let local = LocalMapParams::new(self.lambda, self.beta.clone())?;
        let fam = build_family(local, &self.recipe(), self.mu)?;
        if self.alpha.is_none() && self.s0.is_none() {
            return Ok(fam);
        }
        tune_to(&fam, self.alpha.unwrap_or(fam.alpha), self.s0.unwrap_or(fam.s0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    /// Rescaled (limit-map) parameter.
    #[serde(rename = "M", alias = "m")]
    pub m: Option<f64>,
    pub m_min: f64,
    pub m_max: f64,
    pub m_points: usize,
    pub horseshoe_m: Vec<f64>,
    pub eps: f64,
    pub n_alpha: usize,
    pub samples: usize,
    /// `classify`: run the built-in sign table instead of the configured family.
    pub table: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_min: None,
            k_max: None,
            m: None,
            m_min: 0.02,
            m_max: 0.98,
            m_points: 49,
            horseshoe_m: vec![-1.0, 0.5, 2.0, 9.5, 10.0, 12.0],
            eps: 0.05,
            n_alpha: 41,
            samples: 200,
            table: false,
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
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec![Format::Json, Format::Csv, Format::Svg] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: FamilyConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

const FAMILY_KEYS: &[&str] = &[
    "recipe", "lambda", "beta", "b", "d", "q3", "p2", "p3", "h1", "h2", "x_plus", "y_minus", "n0", "mu", "alpha", "s0",
];
const EXPERIMENT_KEYS: &[&str] =
    &["k_min", "k_max", "M", "m", "m_min", "m_max", "m_points", "horseshoe_m", "eps", "n_alpha", "samples", "table"];
const OUTPUT_KEYS: &[&str] = &["dir", "formats"];

fn section_of(key: &str) -> Option<&'static str> {
    if FAMILY_KEYS.contains(&key) {
        Some("family")
    } else if EXPERIMENT_KEYS.contains(&key) {
        Some("experiment")
    } else if OUTPUT_KEYS.contains(&key) {
        Some("output")
    } else {
        None
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

/// Applies one `key=value` override; `key` is `section.name` or a bare
/// name that belongs to exactly one section.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let (section, name) = match key.split_once('.') {
        Some((s, n)) => (s, n),
        None => (section_of(key).ok_or_else(|| CliError::Validation(format!("unknown config key `{key}`")))?, key),
    };
    if !matches!(section, "family" | "experiment" | "output") {
        return Err(CliError::Validation(format!("unknown config section `{section}`")));
    }
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let sub = entry
        .as_table_mut()
        .ok_or_else(|| CliError::Validation(format!("config section `{section}` is not a table")))?;
    sub.insert(name.to_string(), parse_value(value.trim()));
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| CliError::Validation(format!("invalid config: {e}")))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Validation(format!("invalid config: {e}")))?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        let e = &self.experiment;
        let bad = |m: &str| Err(CliError::Validation(m.into()));
        if let (Some(a), Some(b)) = (e.k_min, e.k_max) {
            if a > b {
                return bad("k_min must not exceed k_max");
            }
        }
        if e.m_points < 2 || !(e.m_min < e.m_max) {
            return bad("M scan needs m_min < m_max and m_points >= 2");
        }
        if e.n_alpha < 2 || !(e.eps > 0.0) {
            return bad("atlas needs eps > 0 and n_alpha >= 2");
        }
        if e.samples < 3 {
            return bad("samples must be at least 3");
        }
        if self.output.dir.is_empty() {
            return bad("output.dir must not be empty");
        }
        Ok(())
    }

    pub fn k_range(&self, default: (u32, u32)) -> (u32, u32) {
        (self.experiment.k_min.unwrap_or(default.0), self.experiment.k_max.unwrap_or(default.1))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_keys_find_their_section() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "M=0.625").unwrap();
        apply_override(&mut t, "s0=-0.4").unwrap();
        apply_override(&mut t, "output.dir=\"x\"").unwrap();
        let cfg: RunConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.experiment.m, Some(0.625));
        assert_eq!(cfg.family.s0, Some(-0.4));
        assert_eq!(cfg.output.dir, "x");
    }

    #[test]
    fn unquoted_strings_fall_back() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "recipe=shear-sandwich").unwrap();
        let cfg: RunConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.family.recipe, Recipe::ShearSandwich);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "nonsense=1").is_err());
        assert!(apply_override(&mut t, "family.nonsense=1").is_ok());
        let r: Result<RunConfig, _> = toml::Value::Table(t).try_into();
        assert!(r.is_err());
    }
}
