//! Experiment configuration: flat TOML sections, overridable from the
//! command line with `--set section.key=value`.

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub weights: WeightsSection,
    pub gamma: GammaSection,
    pub rhoc: RhocSection,
    pub phase: PhaseSection,
    pub cycles: CyclesSection,
    pub verify: VerifySection,
    pub deconvolve: DeconvolveSection,
    pub green: GreenSection,
    pub un: UnSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    /// Kept out of the resolved config so outputs do not depend on it; the
    /// sidecar records it.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub steps_per_leg: usize,
    /// `step-ball` or `smooth-bump`.
    pub potential: String,
    pub strength: f64,
    pub range: f64,
    /// `trapezoid` or `simpson`.
    pub quadrature: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            dim: 3,
            alpha: 0.0,
            beta: 1.0,
            steps_per_leg: 32,
            potential: "step-ball".into(),
            strength: 1.0,
            range: 1.0,
            quadrature: "trapezoid".into(),
        }
    }
}

/// Either a number or the name of a bracket end (`lower`, `point`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaChoice {
    Value(f64),
    Named(String),
}

/// Where cycle weights `Γ_k` come from: the `free-gas` preset or a table
/// file written by `estimate-gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub preset: Option<String>,
    pub table: Option<String>,
    pub dim: Option<usize>,
    pub beta: Option<f64>,
    /// Number of free-gas weights.
    pub k_max: usize,
    pub lambda: Option<LambdaChoice>,
}

impl Default for WeightsSection {
    fn default() -> Self {
        WeightsSection {
            preset: None,
            table: None,
            dim: None,
            beta: None,
            k_max: 400,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSection {
    pub k_max: usize,
    pub samples: usize,
}

impl Default for GammaSection {
    fn default() -> Self {
        GammaSection {
            k_max: 20,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhocSection {
    pub k_max: Option<usize>,
    pub fit_k_min: usize,
    pub log_term: bool,
    pub scaling_k_lo: usize,
    pub scaling_k_hi: Option<usize>,
}

impl Default for RhocSection {
    fn default() -> Self {
        RhocSection {
            k_max: None,
            fit_k_min: 2,
            log_term: true,
            scaling_k_lo: 10,
            scaling_k_hi: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    /// Absolute densities.
    pub rho: Vec<f64>,
    /// Densities as multiples of the (truncated) critical density.
    pub relative: Vec<f64>,
    pub tol: f64,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            rho: Vec::new(),
            relative: Vec::new(),
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclesSection {
    pub n: usize,
    pub samples: usize,
    pub volume: Option<f64>,
    /// Sets the volume to `n / rho` when `volume` is absent.
    pub rho: Option<f64>,
    pub k_stats: usize,
    pub stats_output: Option<String>,
    /// Compare Dirichlet-box and free weights for `k <= dirichlet_k` in a box
    /// of the sampling volume; 0 skips the comparison.
    pub dirichlet_k: usize,
    pub dirichlet_samples: usize,
}

impl Default for CyclesSection {
    fn default() -> Self {
        CyclesSection {
            n: 100,
            samples: 1000,
            volume: None,
            rho: None,
            k_stats: 10,
            stats_output: None,
            dirichlet_k: 3,
            dirichlet_samples: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub n_max: usize,
    pub matrices: usize,
    /// `none` or `flip-compatible`.
    pub mutation: String,
    /// Coupling used by the Monte Carlo renewal check.
    pub mc_alpha: f64,
    pub mc_n_max: usize,
    pub mc_samples: usize,
    pub grid_half_width: f64,
    pub grid_spacing: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            n_max: 6,
            matrices: 1000,
            mutation: "none".into(),
            mc_alpha: 0.5,
            mc_n_max: 5,
            mc_samples: 20_000,
            grid_half_width: 12.0,
            grid_spacing: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeconvolveSection {
    /// Grid-function file holding `G^Π`; when absent a synthetic input is
    /// built from `preset`.
    pub input: Option<String>,
    /// `geometric` (`G^Π = λφ`) or `synthetic` (`Γ_N = q^{N-1} φ_N`).
    pub preset: String,
    pub lambda: f64,
    pub q: f64,
    pub terms: usize,
    pub dim: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub tol: f64,
}

impl Default for DeconvolveSection {
    fn default() -> Self {
        DeconvolveSection {
            input: None,
            preset: "geometric".into(),
            lambda: 0.5,
            q: 0.5,
            terms: 25,
            dim: 1,
            half_width: 12.0,
            spacing: 0.01,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSection {
    pub dim: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub tol: f64,
}

impl Default for GreenSection {
    fn default() -> Self {
        GreenSection {
            dim: 5,
            r_min: 5.0,
            r_max: 20.0,
            points: 16,
            tol: 1e-16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnSection {
    pub separations: Vec<f64>,
    pub samples: usize,
}

impl Default for UnSection {
    fn default() -> Self {
        UnSection {
            separations: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            samples: 20_000,
        }
    }
}

/// Parse an override value as a TOML value, falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

pub fn set_path(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects section.key=value, got {assignment:?}")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| CliError::Config(format!("--set key must be section.key, got {key:?}")))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(CliError::Config(format!("{section} is not a section")));
    };
    sec.insert(field.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Read the file (if any), apply overrides and fill defaults.
pub fn load(text: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut table: toml::Table = match text {
        Some(t) => t.parse().map_err(|e| CliError::Config(format!("config file: {e}")))?,
        None => toml::Table::new(),
    };
    for o in overrides {
        set_path(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
}

impl ExperimentConfig {
    /// The fully resolved configuration as TOML.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.run
            .seed
            .ok_or_else(|| CliError::Config("run.seed is required (set it in the config or pass --seed)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_precedence() {
        let cfg = load(Some("[gamma]\nk_max = 5\n"), &["gamma.k_max=9".into(), "model.potential=smooth-bump".into()])
            .unwrap();
        assert_eq!(cfg.gamma.k_max, 9);
        assert_eq!(cfg.model.potential, "smooth-bump");
        assert_eq!(cfg.gamma.samples, GammaSection::default().samples);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load(Some("[gamma]\nkmax = 5\n"), &[]).is_err());
        assert!(load(None, &["nosection=1".into()]).is_err());
    }

    #[test]
    fn lambda_accepts_numbers_and_names() {
        let cfg = load(None, &["weights.lambda=1.25".into()]).unwrap();
        assert_eq!(cfg.weights.lambda, Some(LambdaChoice::Value(1.25)));
        let cfg = load(None, &["weights.lambda=lower".into()]).unwrap();
        assert_eq!(cfg.weights.lambda, Some(LambdaChoice::Named("lower".into())));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = load(None, &["run.seed=3".into(), "phase.relative=[0.5, 2.0]".into()]).unwrap();
        let again = load(Some(&cfg.resolved()), &[]).unwrap();
        assert_eq!(again.resolved(), cfg.resolved());
    }
}
