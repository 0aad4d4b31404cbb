//! Two-stage residual inclusion (2SRI) for an endogenous regressor.
//!
//! Stage 1 fits a Gaussian mean model of each endogenous variable on the
//! exogenous covariates and its instruments. Stage 2 appends the stage-1
//! residuals to the predictor of every distribution parameter.

use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::design::{Formula, FormulaSet, TermSpec};
use crate::error::{Error, Result};
use crate::families::{Family, Link};
use crate::fit::{fit, predict_parameters, FitControl, FittedModel, ModelSpec};

pub const DEFAULT_WEAK_INSTRUMENT_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndogenousSpec {
    pub variable: String,
    pub instruments: Vec<String>,
    /// Stage-1 mean formula; must contain every instrument.
    pub formula: String,
    /// Identity or log.
    pub link: Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsriOptions {
    /// Rescale residuals to unit sample variance.
    pub standardize: bool,
    /// Enter residuals as P-splines instead of linear terms.
    pub nonlinear: bool,
    /// Partial R² of the instruments below this logs a weak-instrument warning.
    pub weak_instrument_floor: f64,
    /// Off gives the naive fit on the same rows (the nesting case).
    pub include_residuals: bool,
}

impl Default for TsriOptions {
    fn default() -> Self {
        TsriOptions { standardize: false, nonlinear: false, weak_instrument_floor: DEFAULT_WEAK_INSTRUMENT_FLOOR, include_residuals: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsriSpec {
    pub second_stage: ModelSpec,
    pub endogenous: Vec<EndogenousSpec>,
    #[serde(default)]
    pub options: TsriOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstStage {
    pub variable: String,
    pub residual_column: String,
    pub model: FittedModel,
    /// Share of the restricted model's residual sum of squares explained by
    /// the instruments.
    pub partial_r_squared: f64,
    /// Scale applied to the raw residuals (1 unless standardizing).
    pub residual_scale: f64,
    pub weak: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsriFit {
    pub model: FittedModel,
    pub first_stages: Vec<FirstStage>,
    /// Input data plus the residual columns.
    #[serde(skip)]
    pub data: Dataset,
    pub warnings: Vec<String>,
}

pub fn residual_column(var: &str) -> String {
    format!("xi_{var}")
}

impl TsriSpec {
    pub fn validate(&self) -> Result<()> {
        if self.endogenous.is_empty() {
            return Err(Error::invalid("2SRI needs at least one endogenous variable"));
        }
        let stage2 = self.second_stage.formulas.variables();
        for e in &self.endogenous {
            if e.instruments.is_empty() {
                return Err(Error::invalid(format!("endogenous `{}` has no instrument", e.variable)));
            }
            if !matches!(e.link, Link::Identity | Link::Log) {
                return Err(Error::invalid(format!("stage-1 link for `{}` must be identity or log", e.variable)));
            }
            let f = Formula::parse("mu", &e.formula)?;
            let vars = f.variables();
            for z in &e.instruments {
                if !vars.contains(z) {
                    return Err(Error::invalid(format!("instrument `{z}` is missing from the stage-1 formula of `{}`", e.variable)));
                }
                if stage2.contains(z) {
                    return Err(Error::invalid(format!("instrument `{z}` also enters the outcome model")));
                }
            }
            if vars.contains(&e.variable) {
                return Err(Error::invalid(format!("`{}` appears on both sides of its stage-1 formula", e.variable)));
            }
        }
        Ok(())
    }

    /// Outcome specification with the residual terms appended.
    pub fn stage2_spec(&self) -> ModelSpec {
        let mut spec = self.second_stage.clone();
        if !self.options.include_residuals {
            return spec;
        }
        let mut fs: FormulaSet = spec.formulas.clone();
        for e in &self.endogenous {
            let name = residual_column(&e.variable);
            let term = if self.options.nonlinear {
                TermSpec::Pspline { var: name, knots: 10, degree: 3, diff_order: 2, lambda: 10.0, center: true }
            } else {
                TermSpec::Linear { var: name }
            };
            fs = fs.with_term_everywhere(&term);
        }
        spec.formulas = fs;
        spec
    }
}

fn stage1_spec(e: &EndogenousSpec, formula: Formula, control: &FitControl) -> ModelSpec {
    let fs = FormulaSet { formulas: vec![formula, Formula::intercept_only("sigma")] };
    ModelSpec::new(Family::Normal, &e.variable, fs)
        .with_links(vec![e.link, Link::Log])
        .with_control(control.clone())
}

fn rss(model: &FittedModel, data: &Dataset, var: &str) -> Result<(f64, Vec<f64>)> {
    let x = data.numeric(var)?;
    let th = predict_parameters(model, data)?;
    let r: Vec<f64> = x.iter().zip(&th).map(|(x, t)| x - t.get(0)).collect();
    Ok((r.iter().map(|v| v * v).sum(), r))
}

/// Fits stage 1 for one endogenous variable on `data`.
pub fn fit_first_stage(e: &EndogenousSpec, data: &Dataset, options: &TsriOptions, control: &FitControl) -> Result<FirstStage> {
    let full = Formula::parse("mu", &e.formula)?;
    let model = fit(&stage1_spec(e, full.clone(), control), data)?;
    let (rss_u, resid) = rss(&model, data, &e.variable)?;
    let restricted = Formula {
        param: "mu".into(),
        source: format!("{} without instruments", e.formula),
        terms: full.terms.iter().filter(|t| !t.variables().iter().any(|v| e.instruments.contains(v))).cloned().collect(),
    };
    let rss_r = rss(&fit(&stage1_spec(e, restricted, control), data)?, data, &e.variable)?.0;
    let partial = if rss_r > 0.0 { ((rss_r - rss_u) / rss_r).max(0.0) } else { 0.0 };
    let weak = partial < options.weak_instrument_floor;
    if weak {
        log::warn!("weak instruments for `{}`: partial R² {partial:.4}", e.variable);
    }
    let scale = if options.standardize {
        let n = resid.len() as f64;
        let m = resid.iter().sum::<f64>() / n;
        let sd = (resid.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1.0)).sqrt();
        if !(sd > 0.0) {
            return Err(Error::invalid(format!("stage-1 residuals of `{}` have zero variance", e.variable)));
        }
        1.0 / sd
    } else {
        1.0
    };
    Ok(FirstStage { variable: e.variable.clone(), residual_column: residual_column(&e.variable), model, partial_r_squared: partial, residual_scale: scale, weak })
}

/// `data` with residual columns computed from the given stage-1 models.
pub fn with_residuals(data: &Dataset, stages: &[FirstStage]) -> Result<Dataset> {
    let mut out = data.clone();
    for s in stages {
        let (_, r) = rss(&s.model, data, &s.variable)?;
        out.insert(s.residual_column.clone(), Column::Numeric(r.into_iter().map(|v| v * s.residual_scale).collect()))?;
    }
    Ok(out)
}

/// Runs both stages on `data`.
pub fn tsri_fit(data: &Dataset, spec: &TsriSpec) -> Result<TsriFit> {
    spec.validate()?;
    let stages = spec
        .endogenous
        .iter()
        .map(|e| fit_first_stage(e, data, &spec.options, &spec.second_stage.control))
        .collect::<Result<Vec<_>>>()?;
    let warnings = stages
        .iter()
        .filter(|s| s.weak)
        .map(|s| format!("weak instruments for `{}` (partial R² {:.4} < {})", s.variable, s.partial_r_squared, spec.options.weak_instrument_floor))
        .collect();
    let augmented = with_residuals(data, &stages)?;
    let model = fit(&spec.stage2_spec(), &augmented)?;
    Ok(TsriFit { model, first_stages: stages, data: augmented, warnings })
}
