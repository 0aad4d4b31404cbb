//! Counterfactual prediction and treatment effects: covariate profiles,
//! marginal effects, density curves, 2SRI, regression discontinuity and the
//! panel wrapper.

mod iv;
mod panel;
mod rdd;

pub use iv::{
    fit_first_stage, residual_column, tsri_fit, with_residuals, EndogenousSpec, FirstStage, TsriFit, TsriOptions, TsriSpec,
    DEFAULT_WEAK_INSTRUMENT_FLOOR,
};
pub use panel::{panel_fit, PanelFit, PanelSpec};
pub use rdd::{
    frd_fit, rdd_fit, rdd_fit_sides, rdd_fit_split, rdd_profile, rdd_window, srd_fit, RddEstimate, RddFit, RddSpec, TreatmentModel,
    DEFAULT_NO_IDENTIFICATION_EPS,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Factor};
use crate::error::{Error, Result};
use crate::families::ParamVector;
use crate::fit::{predict_parameters, FittedModel};
use crate::functionals::{DistSpec, FunctionalKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileValue {
    Numeric(f64),
    Level(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Mean,
    Mode,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub name: String,
    pub value: ProfileValue,
    pub source: ProfileSource,
}

/// A single synthetic observation at which distributions are predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateProfile {
    pub entries: Vec<ProfileEntry>,
}

impl CovariateProfile {
    pub fn get(&self, name: &str) -> Option<&ProfileValue> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.value)
    }

    /// Copy with `name` set to `value` (added when absent).
    pub fn with(&self, name: &str, value: ProfileValue) -> Self {
        let mut out = self.clone();
        match out.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                e.value = value;
                e.source = ProfileSource::User;
            }
            None => out.entries.push(ProfileEntry { name: name.to_string(), value, source: ProfileSource::User }),
        }
        out
    }

    /// One-row dataset holding the profile.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut d = Dataset::new();
        for e in &self.entries {
            let col = match &e.value {
                ProfileValue::Numeric(v) => Column::Numeric(vec![*v]),
                ProfileValue::Level(l) => Column::Categorical(Factor::from_labels(&[Some(l.as_str())])),
            };
            d.insert(e.name.clone(), col)?;
        }
        Ok(d)
    }
}

/// Means of numeric columns and modes of categorical ones (ties go to the
/// lexicographically first level), then `overrides`.
pub fn covariate_profile(data: &Dataset, vars: &[String], overrides: &[(String, ProfileValue)]) -> Result<CovariateProfile> {
    if data.n_rows() == 0 {
        return Err(Error::TooFewObservations("profile of an empty dataset".into()));
    }
    let mut entries = Vec::new();
    for v in vars {
        let entry = match data.column(v)? {
            Column::Categorical(f) => {
                let mut counts = vec![0usize; f.levels().len()];
                for c in f.codes().iter().flatten() {
                    counts[*c as usize] += 1;
                }
                // levels are sorted, so the first maximum is the lexicographic tie-break
                let best = counts.iter().enumerate().fold(0, |b, (i, &c)| if c > counts[b] { i } else { b });
                let level = f.levels().get(best).cloned().ok_or_else(|| Error::invalid(format!("`{v}` has no levels")))?;
                ProfileEntry { name: v.clone(), value: ProfileValue::Level(level), source: ProfileSource::Mode }
            }
            c => {
                let x = c.numeric().unwrap();
                let finite: Vec<f64> = x.iter().copied().filter(|v| v.is_finite()).collect();
                if finite.is_empty() {
                    return Err(Error::invalid(format!("`{v}` has no finite values")));
                }
                let m = finite.iter().sum::<f64>() / finite.len() as f64;
                ProfileEntry { name: v.clone(), value: ProfileValue::Numeric(m), source: ProfileSource::Mean }
            }
        };
        entries.push(entry);
    }
    let mut p = CovariateProfile { entries };
    for (name, value) in overrides {
        p = p.with(name, value.clone());
    }
    Ok(p)
}

/// Covariates of a fitted model (its schema without the response).
pub fn model_covariates(model: &FittedModel) -> Vec<String> {
    model.schema.iter().filter(|e| e.name != model.response).map(|e| e.name.clone()).collect()
}

/// Profile over a model's covariates.
pub fn model_profile(model: &FittedModel, data: &Dataset, overrides: &[(String, ProfileValue)]) -> Result<CovariateProfile> {
    covariate_profile(data, &model_covariates(model), overrides)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub functional: String,
    pub treated: f64,
    pub control: f64,
    /// treated − control.
    pub difference: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl EffectEstimate {
    pub fn new(functional: &FunctionalKind, treated: f64, control: f64) -> Self {
        EffectEstimate {
            functional: functional.label(),
            treated,
            control,
            difference: treated - control,
            lower: None,
            upper: None,
        }
    }
}

/// Predicted parameters at a profile.
pub fn predict_at(model: &FittedModel, profile: &CovariateProfile) -> Result<ParamVector> {
    let row = profile.to_dataset()?;
    Ok(predict_parameters(model, &row)?[0])
}

fn evaluate_arm(model: &FittedModel, profile: &CovariateProfile, f: &FunctionalKind, arm: &str) -> Result<f64> {
    let wrap = |e: Error| Error::Arm { arm: arm.to_string(), source: Box::new(e) };
    let theta = predict_at(model, profile).map_err(wrap)?;
    f.evaluate(&DistSpec { family: model.family, theta }).map_err(wrap)
}

fn check_treatment(model: &FittedModel, treatment: &str) -> Result<()> {
    match model.schema.iter().find(|e| e.name == treatment) {
        Some(e) if e.kind != crate::data::ColumnKind::Categorical => Ok(()),
        Some(_) => Err(Error::invalid(format!("treatment `{treatment}` must be a numeric 0/1 column"))),
        // Both arms then predict the same distribution and every effect is zero.
        None => {
            log::warn!("treatment `{treatment}` does not enter the model; its effects are zero");
            Ok(())
        }
    }
}

/// Effect of moving the treatment from `from` to `to` at a profile:
/// f(θ(to)) − f(θ(from)).
pub fn mte_between(
    model: &FittedModel,
    profile: &CovariateProfile,
    functional: &FunctionalKind,
    treatment: &str,
    from: f64,
    to: f64,
) -> Result<EffectEstimate> {
    check_treatment(model, treatment)?;
    let treated = evaluate_arm(model, &profile.with(treatment, ProfileValue::Numeric(to)), functional, &format!("{treatment}={to}"))?;
    let control = evaluate_arm(model, &profile.with(treatment, ProfileValue::Numeric(from)), functional, &format!("{treatment}={from}"))?;
    Ok(EffectEstimate::new(functional, treated, control))
}

/// Marginal treatment effect at a profile: f(θ(T=1)) − f(θ(T=0)).
pub fn mte(model: &FittedModel, profile: &CovariateProfile, functional: &FunctionalKind, treatment: &str) -> Result<EffectEstimate> {
    mte_between(model, profile, functional, treatment, 0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmeSummary {
    pub functional: String,
    /// Per-row effect; `None` where the functional failed on either arm.
    pub effects: Vec<Option<f64>>,
    pub mean: f64,
    /// (probability, quantile) pairs of the per-row effects.
    pub quantiles: Vec<(f64, f64)>,
    pub failures: usize,
}

fn with_constant(data: &Dataset, var: &str, v: f64) -> Result<Dataset> {
    let mut d = data.clone();
    d.insert(var, Column::Numeric(vec![v; data.n_rows()]))?;
    Ok(d)
}

/// Type-7 sample quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-row marginal effects over the observed covariate rows.
pub fn average_marginal_effects(model: &FittedModel, data: &Dataset, functional: &FunctionalKind, treatment: &str) -> Result<AmeSummary> {
    if data.n_rows() == 0 {
        return Err(Error::TooFewObservations("no rows for average marginal effects".into()));
    }
    check_treatment(model, treatment)?;
    let t0 = predict_parameters(model, &with_constant(data, treatment, 0.0)?)?;
    let t1 = predict_parameters(model, &with_constant(data, treatment, 1.0)?)?;
    let fam = model.family;
    let effects: Vec<Option<f64>> = t0
        .par_iter()
        .zip(t1.par_iter())
        .map(|(a, b)| {
            let f0 = functional.evaluate(&DistSpec { family: fam, theta: *a }).ok()?;
            let f1 = functional.evaluate(&DistSpec { family: fam, theta: *b }).ok()?;
            Some(f1 - f0)
        })
        .collect();
    let mut ok: Vec<f64> = effects.iter().flatten().copied().collect();
    let failures = effects.len() - ok.len();
    if ok.is_empty() {
        return Err(Error::invalid("functional failed on every row"));
    }
    if failures > 0 {
        log::warn!("{failures} rows failed to evaluate {}", functional.label());
    }
    ok.sort_by(f64::total_cmp);
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&p| (p, quantile_sorted(&ok, p))).collect();
    Ok(AmeSummary { functional: functional.label(), effects, mean, quantiles, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub label: String,
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
}

/// Density (or probability mass) of each profile's predicted distribution
/// on `grid`.
pub fn conditional_density_curves(model: &FittedModel, profiles: &[(String, CovariateProfile)], grid: &[f64]) -> Result<Vec<DensityCurve>> {
    profiles
        .iter()
        .map(|(label, p)| {
            let theta = predict_at(model, p)?;
            let density = grid
                .iter()
                .map(|&y| if model.family.in_support(y) { model.family.log_pdf(y, &theta).exp() } else { 0.0 })
                .collect();
            Ok(DensityCurve { label: label.clone(), theta: theta.as_slice().to_vec(), y: grid.to_vec(), density })
        })
        .collect()
}

/// Evenly spaced grid covering the [p, 1 − p] quantile range of every
/// profile's distribution (integers for count families).
pub fn density_grid(model: &FittedModel, profiles: &[(String, CovariateProfile)], points: usize, p: f64) -> Result<Vec<f64>> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, pr) in profiles {
        let th = predict_at(model, pr)?;
        lo = lo.min(model.family.quantile(p, &th)?);
        hi = hi.max(model.family.quantile(1.0 - p, &th)?);
    }
    if model.family.kind() == crate::families::Kind::Discrete {
        return Ok((lo as i64..=hi as i64).map(|k| k as f64).collect());
    }
    if matches!(model.family.support(), crate::families::Support::PositiveReal | crate::families::Support::NonNegativeWithZeroMass) {
        lo = 0.0;
    }
    let n = points.max(2);
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}
