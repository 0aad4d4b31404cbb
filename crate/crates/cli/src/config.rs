//! Analysis configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use distreg::bootstrap::{FirstStageResampling, DEFAULT_MAX_FAILURE_RATE, DEFAULT_OUTLIER_SHARE, DEFAULT_REPLICATES};
use distreg::effects::{EndogenousSpec, ProfileValue, TsriOptions, DEFAULT_NO_IDENTIFICATION_EPS};
use distreg::fit::LambdaMode;
use distreg::{ColumnKind, Family, FitControl, FormulaSet, FunctionalKind, Link, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::ingest::Filter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    pub effects: Option<EffectsConfig>,
    pub bootstrap: Option<BootstrapConfig>,
    pub iv: Option<IvConfig>,
    pub rdd: Option<RddConfig>,
    pub panel: Option<PanelConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("distreg-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, relative to the config file.
    pub path: PathBuf,
    #[serde(default)]
    pub filters: Vec<String>,
    pub schema: BTreeMap<String, ColumnKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    pub response: String,
    /// Parameter symbol → formula; missing parameters are intercept-only.
    #[serde(default)]
    pub formulas: BTreeMap<String, String>,
    #[serde(default)]
    pub links: BTreeMap<String, String>,
    /// When set, every smoothing weight is chosen from this grid by GAIC.
    #[serde(default)]
    pub smoothing_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub control: FitControl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Column for the cluster heterogeneity check of the residuals.
    pub cluster: Option<String>,
}

/// A number, or a share of the median outcome of the control group or of
/// the whole analysis sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovertyLine {
    Value(f64),
    ControlMedianShare { control_median_share: f64 },
    SampleMedianShare { sample_median_share: f64 },
}

impl Default for PovertyLine {
    fn default() -> Self {
        PovertyLine::ControlMedianShare { control_median_share: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectsConfig {
    pub treatment: String,
    /// `mean`, `variance`, `quantile:<p>`, `gini`, `atkinson:<e>`, `theil`,
    /// `vulnerability` (at the poverty line) or `vulnerability:<z>`.
    #[serde(default = "default_functionals")]
    pub functionals: Vec<String>,
    #[serde(default)]
    pub poverty_line: PovertyLine,
    /// Covariate values overriding the means/modes of the profile.
    #[serde(default)]
    pub profile: BTreeMap<String, ProfileValue>,
    /// Also average the effect over the sample rows.
    #[serde(default)]
    pub average: bool,
    #[serde(default = "default_density_points")]
    pub density_points: usize,
}

fn default_functionals() -> Vec<String> {
    ["mean", "gini", "atkinson:1", "theil", "vulnerability"].map(String::from).to_vec()
}

fn default_density_points() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootMethod {
    Parametric,
    PairsCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub method: BootMethod,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub cluster: Option<String>,
    #[serde(default = "default_max_failure_rate")]
    pub max_failure_rate: f64,
    #[serde(default = "default_outlier_share")]
    pub outlier_share: f64,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_alpha() -> f64 {
    0.05
}
fn default_max_failure_rate() -> f64 {
    DEFAULT_MAX_FAILURE_RATE
}
fn default_outlier_share() -> f64 {
    DEFAULT_OUTLIER_SHARE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvConfig {
    pub endogenous: Vec<EndogenousSpec>,
    #[serde(default)]
    pub options: TsriOptions,
    #[serde(default = "default_first_stage")]
    pub first_stage_resampling: FirstStageResampling,
    /// Outer (first-stage) draws; the inner count is replicates / this.
    #[serde(default = "default_first_stage_draws")]
    pub first_stage_draws: usize,
}

fn default_first_stage() -> FirstStageResampling {
    FirstStageResampling::Parametric
}
fn default_first_stage_draws() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RddConfig {
    pub forcing: String,
    pub cutoff: f64,
    /// One analysis per half-width; empty uses all rows.
    #[serde(default)]
    pub bandwidths: Vec<f64>,
    #[serde(default)]
    pub fuzzy: bool,
    pub treatment: Option<String>,
    pub treatment_formula: Option<String>,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
}

fn default_eps() -> f64 {
    DEFAULT_NO_IDENTIFICATION_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub unit: String,
    #[serde(default)]
    pub mundlak: Vec<String>,
    #[serde(default = "default_re_params")]
    pub random_effect_params: Vec<String>,
    #[serde(default = "default_re_lambda")]
    pub random_effect_lambda: f64,
}

fn default_re_params() -> Vec<String> {
    vec!["mu".into()]
}
fn default_re_lambda() -> f64 {
    1.0
}

/// A parsed config plus the raw text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: AnalysisConfig,
    pub text: String,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&text, base)
    }

    pub fn from_text(text: &str, base: PathBuf) -> CliResult<Self> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        config.validate()?;
        Ok(LoadedConfig { config, text: text.to_string(), base })
    }

    pub fn data_path(&self) -> PathBuf {
        self.base.join(&self.config.data.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base.join(&self.config.output)
    }
}

impl AnalysisConfig {
    pub fn family(&self) -> CliResult<Family> {
        Family::from_name(&self.model.family).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn filters(&self) -> CliResult<Vec<Filter>> {
        self.data.filters.iter().map(|f| Filter::parse(f)).collect()
    }

    pub fn model_spec(&self) -> CliResult<ModelSpec> {
        let family = self.family()?;
        let pairs: Vec<(&str, &str)> = self.model.formulas.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let formulas = FormulaSet::parse(family, &pairs).map_err(|e| CliError::config(e.to_string()))?;
        let mut links = family.default_links();
        for (sym, name) in &self.model.links {
            let k = family
                .param_index(sym)
                .ok_or_else(|| CliError::config(format!("link given for unknown parameter `{sym}` of {}", family.name())))?;
            links[k] = Link::from_name(name).map_err(|e| CliError::config(e.to_string()))?;
        }
        let mut control = self.model.control.clone();
        if let Some(grid) = &self.model.smoothing_grid {
            control.lambda_mode = LambdaMode::GaicGrid { grid: grid.clone() };
        }
        let spec = ModelSpec::new(family, &self.model.response, formulas).with_links(links).with_control(control);
        spec.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(spec)
    }

    pub fn functionals(&self) -> Vec<String> {
        self.effects.as_ref().map(|e| e.functionals.clone()).unwrap_or_else(|| vec!["mean".into()])
    }

    /// Checks every column the config refers to against the schema.
    pub fn validate(&self) -> CliResult<()> {
        let spec = self.model_spec()?;
        let check = |name: &str, role: &str| -> CliResult<()> {
            if self.data.schema.contains_key(name) {
                Ok(())
            } else {
                Err(CliError::config(format!("{role} `{name}` is not declared in [data.schema]")))
            }
        };
        for v in spec.variables() {
            check(&v, "model variable")?;
        }
        for f in self.filters()? {
            check(f.column(), "filter column")?;
        }
        if let Some(c) = &self.diagnostics.cluster {
            check(c, "diagnostics cluster")?;
        }
        if let Some(e) = &self.effects {
            check(&e.treatment, "treatment")?;
            for f in &e.functionals {
                if f.trim() != "vulnerability" {
                    FunctionalKind::parse(f).map_err(|e| CliError::config(e.to_string()))?;
                }
            }
            for name in e.profile.keys() {
                check(name, "profile override")?;
            }
        }
        if let Some(b) = &self.bootstrap {
            if !(b.alpha > 0.0 && b.alpha < 1.0) {
                return Err(CliError::config("bootstrap alpha must lie in (0, 1)"));
            }
            if b.replicates == 0 {
                return Err(CliError::config("bootstrap replicates must be >= 1"));
            }
            match (&b.method, &b.cluster) {
                (BootMethod::PairsCluster, Some(c)) => check(c, "bootstrap cluster")?,
                (BootMethod::PairsCluster, None) if self.panel.is_none() => {
                    return Err(CliError::config("pairs-cluster bootstrap needs a `cluster` column"))
                }
                _ => {}
            }
        }
        if let Some(iv) = &self.iv {
            if iv.endogenous.is_empty() {
                return Err(CliError::config("[iv] lists no endogenous variables"));
            }
            for e in &iv.endogenous {
                check(&e.variable, "endogenous variable")?;
                for z in &e.instruments {
                    check(z, "instrument")?;
                }
                let stage1 = distreg::Formula::parse("mu", &e.formula).map_err(|e| CliError::config(e.to_string()))?;
                for v in stage1.variables() {
                    check(&v, "first-stage variable")?;
                }
            }
            if iv.first_stage_draws == 0 {
                return Err(CliError::config("first_stage_draws must be >= 1"));
            }
        }
        if let Some(r) = &self.rdd {
            check(&r.forcing, "forcing variable")?;
            if r.fuzzy {
                let t = r.treatment.as_deref().ok_or_else(|| CliError::config("fuzzy RDD needs a `treatment` column"))?;
                check(t, "RDD treatment")?;
            }
            if r.bandwidths.iter().any(|h| !(*h > 0.0)) {
                return Err(CliError::config("RDD bandwidths must be > 0"));
            }
        }
        if let Some(p) = &self.panel {
            check(&p.unit, "panel unit")?;
            for v in &p.mundlak {
                check(v, "Mundlak variable")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 7
[data]
path = "d.csv"
filters = ["y > 0"]
[data.schema]
y = "numeric"
T = "numeric"
g = "categorical"
[model]
family = "lognormal"
response = "y"
[model.formulas]
mu = "T + g"
sigma = "T"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = LoadedConfig::from_text(BASE, PathBuf::from("/tmp/x")).unwrap();
        assert_eq!(c.config.seed, 7);
        assert_eq!(c.data_path(), PathBuf::from("/tmp/x/d.csv"));
        let spec = c.config.model_spec().unwrap();
        assert_eq!(spec.family, Family::LogNormal);
        assert_eq!(spec.variables(), vec!["y", "T", "g"]);
    }

    #[test]
    fn undeclared_columns_are_config_errors() {
        let text = BASE.replace("mu = \"T + g\"", "mu = \"T + age\"");
        let e = LoadedConfig::from_text(&text, PathBuf::new()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message.contains("age"));
        let text = format!("{BASE}\n[effects]\ntreatment = \"D\"\n");
        assert!(LoadedConfig::from_text(&text, PathBuf::new()).is_err());
    }

    #[test]
    fn unknown_keys_and_families_are_rejected() {
        assert!(LoadedConfig::from_text(&format!("bogus = 1\n{BASE}"), PathBuf::new()).is_err());
        assert!(LoadedConfig::from_text(&BASE.replace("lognormal", "weibull"), PathBuf::new()).is_err());
    }

    #[test]
    fn poverty_line_forms() {
        let text = format!("{BASE}\n[effects]\ntreatment = \"T\"\npoverty_line = 120.5\n");
        let c = LoadedConfig::from_text(&text, PathBuf::new()).unwrap();
        assert_eq!(c.config.effects.unwrap().poverty_line, PovertyLine::Value(120.5));
        let text = format!("{BASE}\n[effects]\ntreatment = \"T\"\npoverty_line = {{ control_median_share = 0.5 }}\n");
        let c = LoadedConfig::from_text(&text, PathBuf::new()).unwrap();
        assert_eq!(c.config.effects.unwrap().poverty_line, PovertyLine::ControlMedianShare { control_median_share: 0.5 });
    }

    #[test]
    fn pairs_cluster_requires_a_cluster() {
        let text = format!("{BASE}\n[bootstrap]\nmethod = \"pairs-cluster\"\n");
        assert!(LoadedConfig::from_text(&text, PathBuf::new()).is_err());
        let text = format!("{BASE}\n[bootstrap]\nmethod = \"pairs-cluster\"\ncluster = \"g\"\n");
        assert!(LoadedConfig::from_text(&text, PathBuf::new()).is_ok());
    }
}
