//! Panel wrapper: unit means of time-varying covariates (Mundlak) plus a
//! ridge-penalized unit effect.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::design::{build_mundlak_means, TermSpec};
use crate::error::{Error, Result};
use crate::fit::{fit, FittedModel, ModelSpec};

fn default_re_params() -> Vec<String> {
    vec!["mu".into()]
}

fn default_re_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub model: ModelSpec,
    pub unit: String,
    /// Time-varying covariates whose unit means are added.
    pub mundlak: Vec<String>,
    /// Parameters that receive `re(unit)`.
    #[serde(default = "default_re_params")]
    pub random_effect_params: Vec<String>,
    #[serde(default = "default_re_lambda")]
    pub random_effect_lambda: f64,
}

impl PanelSpec {
    pub fn new(model: ModelSpec, unit: &str, mundlak: &[&str]) -> Self {
        PanelSpec {
            model,
            unit: unit.to_string(),
            mundlak: mundlak.iter().map(|s| s.to_string()).collect(),
            random_effect_params: default_re_params(),
            random_effect_lambda: default_re_lambda(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelFit {
    pub model: FittedModel,
    /// `(variable, mean column)` pairs.
    pub mean_columns: Vec<(String, String)>,
    #[serde(skip)]
    pub data: Dataset,
}

/// The mean of each Mundlak variable enters every parameter whose formula
/// uses the variable.
pub fn panel_fit(data: &Dataset, spec: &PanelSpec) -> Result<PanelFit> {
    if spec.mundlak.is_empty() && spec.random_effect_params.is_empty() {
        return Err(Error::invalid("panel specification adds neither unit means nor unit effects"));
    }
    for p in &spec.random_effect_params {
        if spec.model.family.param_index(p).is_none() {
            return Err(Error::Unknown { what: "distribution parameter", name: p.clone() });
        }
    }
    let (augmented, names) = build_mundlak_means(data, &spec.mundlak, &spec.unit)?;
    let mut model = spec.model.clone();
    for f in model.formulas.formulas.iter_mut() {
        let uses: Vec<String> = f.variables();
        for (var, mean) in spec.mundlak.iter().zip(&names) {
            if uses.contains(var) {
                *f = f.clone().with_term(TermSpec::Linear { var: mean.clone() });
            }
        }
        if spec.random_effect_params.contains(&f.param) {
            *f = f.clone().with_term(TermSpec::RandomEffect { var: spec.unit.clone(), lambda: spec.random_effect_lambda });
        }
    }
    let fitted = fit(&model, &augmented)?;
    Ok(PanelFit {
        model: fitted,
        mean_columns: spec.mundlak.iter().cloned().zip(names).collect(),
        data: augmented,
    })
}
