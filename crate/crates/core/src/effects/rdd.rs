//! Sharp and fuzzy regression discontinuity with one distributional model
//! per side of the cutoff.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{covariate_profile, CovariateProfile, ProfileValue};
use crate::data::Dataset;
use crate::design::{assemble_design, rebuild_design, Formula, FormulaSet};
use crate::error::{Error, Result};
use crate::families::Link;
use crate::fit::{fit, predict_parameters, FittedModel, ModelSpec};
use crate::functionals::{DistSpec, FunctionalKind};
use crate::linalg::logistic_regression;

pub const DEFAULT_NO_IDENTIFICATION_EPS: f64 = 0.05;

fn default_eps() -> f64 {
    DEFAULT_NO_IDENTIFICATION_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddSpec {
    pub forcing: String,
    pub cutoff: f64,
    /// Half-width of the window around the cutoff; `None` uses all rows.
    pub bandwidth: Option<f64>,
    /// Outcome model fitted separately on each side.
    pub model: ModelSpec,
    #[serde(default)]
    pub fuzzy: bool,
    /// 0/1 treatment column (fuzzy designs).
    pub treatment: Option<String>,
    /// Treatment-probability formula; defaults to the forcing variable.
    pub treatment_formula: Option<String>,
    /// Smallest |jump in treatment probability| accepted as identified.
    #[serde(default = "default_eps")]
    pub epsilon: f64,
}

impl RddSpec {
    pub fn sharp(forcing: &str, cutoff: f64, model: ModelSpec) -> Self {
        RddSpec {
            forcing: forcing.to_string(),
            cutoff,
            bandwidth: None,
            model,
            fuzzy: false,
            treatment: None,
            treatment_formula: None,
            epsilon: DEFAULT_NO_IDENTIFICATION_EPS,
        }
    }

    pub fn fuzzy(forcing: &str, cutoff: f64, model: ModelSpec, treatment: &str) -> Self {
        RddSpec { fuzzy: true, treatment: Some(treatment.to_string()), ..Self::sharp(forcing, cutoff, model) }
    }

    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.bandwidth = Some(h);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cutoff.is_finite() {
            return Err(Error::invalid("cutoff must be finite"));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("bandwidth must be positive and finite"));
            }
        }
        if self.fuzzy {
            let t = self.treatment.as_deref().ok_or_else(|| Error::invalid("fuzzy design needs a treatment column"))?;
            if self.model.formulas.variables().iter().any(|v| v == t) {
                return Err(Error::invalid(format!("treatment `{t}` must not enter the outcome model of a fuzzy design")));
            }
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be >= 0"));
        }
        self.model.validate()
    }

    fn treatment_formula(&self) -> Result<Formula> {
        Formula::parse("mu", self.treatment_formula.as_deref().unwrap_or(&self.forcing))
    }

    /// Covariates whose window means or modes form the evaluation profile.
    fn profile_vars(&self) -> Result<Vec<String>> {
        let mut v = self.model.formulas.variables();
        if self.fuzzy {
            v.extend(self.treatment_formula()?.variables());
        }
        v.sort();
        v.dedup();
        v.retain(|x| *x != self.model.response && Some(x) != self.treatment.as_ref());
        Ok(v)
    }
}

/// Row indices left (x < c) and right (x ≥ c) of the cutoff inside the window.
pub fn rdd_window(data: &Dataset, spec: &RddSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let x = data.numeric(&spec.forcing)?;
    let h = spec.bandwidth.unwrap_or(f64::INFINITY);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        if !v.is_finite() || (v - spec.cutoff).abs() > h {
            continue;
        }
        if v < spec.cutoff {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    for (side, rows) in [("left", &left), ("right", &right)] {
        if rows.is_empty() {
            return Err(Error::Arm {
                arm: side.into(),
                source: Box::new(Error::TooFewObservations("no observations in the window".into())),
            });
        }
    }
    Ok((left, right))
}

/// Treatment-probability model for one side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreatmentModel {
    /// Every row on the side has the same treatment value.
    Constant(f64),
    Logistic { recipes: Vec<crate::design::BlockRecipe>, coefficients: Vec<f64> },
}

impl TreatmentModel {
    fn fit(side: &Dataset, formula: &Formula, treatment: &str) -> Result<Self> {
        let t = side.numeric(treatment)?;
        if t.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid(format!("treatment `{treatment}` must be 0/1")));
        }
        let first = t[0];
        if t.iter().all(|&v| v == first) {
            return Ok(TreatmentModel::Constant(first));
        }
        let design = assemble_design(&FormulaSet { formulas: vec![formula.clone()] }, side)?;
        let x = design.params[0].matrix();
        let beta = logistic_regression(&x, t)?;
        Ok(TreatmentModel::Logistic { recipes: design.recipes().remove(0), coefficients: beta.as_slice().to_vec() })
    }

    fn probability(&self, row: &Dataset) -> Result<f64> {
        match self {
            TreatmentModel::Constant(p) => Ok(*p),
            TreatmentModel::Logistic { recipes, coefficients } => {
                let lambdas = vec![vec![0.0; recipes.len()]];
                let d = rebuild_design(&[recipes.clone()], &lambdas, &["mu".to_string()], row)?;
                let eta = (d.params[0].matrix() * DVector::from_column_slice(coefficients))[(0, 0)];
                Ok(Link::Logit.invert(eta))
            }
        }
    }
}

/// Both side fits plus the evaluation profile; effects for any functional
/// follow from it without refitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RddFit {
    pub left: FittedModel,
    pub right: FittedModel,
    pub profile: CovariateProfile,
    pub treatment_left: Option<TreatmentModel>,
    pub treatment_right: Option<TreatmentModel>,
    pub n_left: usize,
    pub n_right: usize,
    pub bandwidth: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddEstimate {
    pub functional: String,
    /// Right-limit minus left-limit of the functional.
    pub numerator: f64,
    pub left_value: f64,
    pub right_value: f64,
    /// Jump in treatment probability; 1 for sharp designs.
    pub denominator: f64,
    pub p_left: Option<f64>,
    pub p_right: Option<f64>,
    pub estimate: f64,
    pub n_left: usize,
    pub n_right: usize,
    pub bandwidth: Option<f64>,
}

fn side_err(side: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Arm { arm: side.to_string(), source: Box::new(e) }
}

fn fit_side(spec: &RddSpec, side: &Dataset, name: &str) -> Result<FittedModel> {
    let k: usize = {
        // coefficient count from the design the fit would build
        let d = assemble_design(&spec.model.formulas, side).map_err(side_err(name))?;
        d.total_coefficients()
    };
    if side.n_rows() <= k {
        return Err(side_err(name)(Error::TooFewObservations(format!("{} rows for {k} coefficients", side.n_rows()))));
    }
    fit(&spec.model, side).map_err(side_err(name))
}

/// Fits the two sides given their data and the evaluation profile.
pub fn rdd_fit_sides(spec: &RddSpec, left: &Dataset, right: &Dataset, profile: CovariateProfile) -> Result<RddFit> {
    rdd_fit_split(spec, (left, right), (left, right), profile)
}

/// Like [`rdd_fit_sides`] with separate rows for the treatment-probability
/// models (the bootstrap resamples those as pairs).
pub fn rdd_fit_split(
    spec: &RddSpec,
    outcome: (&Dataset, &Dataset),
    treatment: (&Dataset, &Dataset),
    profile: CovariateProfile,
) -> Result<RddFit> {
    let lm = fit_side(spec, outcome.0, "left")?;
    let rm = fit_side(spec, outcome.1, "right")?;
    let (tl, tr) = if spec.fuzzy {
        let t = spec.treatment.as_deref().unwrap_or_default();
        let f = spec.treatment_formula()?;
        (
            Some(TreatmentModel::fit(treatment.0, &f, t).map_err(side_err("left"))?),
            Some(TreatmentModel::fit(treatment.1, &f, t).map_err(side_err("right"))?),
        )
    } else {
        (None, None)
    };
    Ok(RddFit {
        left: lm,
        right: rm,
        profile,
        treatment_left: tl,
        treatment_right: tr,
        n_left: outcome.0.n_rows(),
        n_right: outcome.1.n_rows(),
        bandwidth: spec.bandwidth,
        epsilon: spec.epsilon,
    })
}

/// Window means/modes of the covariates with the forcing variable at the cutoff.
pub fn rdd_profile(data: &Dataset, spec: &RddSpec, rows: &[usize]) -> Result<CovariateProfile> {
    let window = data.take(rows);
    let vars = spec.profile_vars()?;
    covariate_profile(&window, &vars, &[(spec.forcing.clone(), ProfileValue::Numeric(spec.cutoff))])
}

/// Splits the window, fits both sides and fixes the profile.
pub fn rdd_fit(data: &Dataset, spec: &RddSpec) -> Result<RddFit> {
    spec.validate()?;
    let (l, r) = rdd_window(data, spec)?;
    let all: Vec<usize> = l.iter().chain(&r).copied().collect();
    let profile = rdd_profile(data, spec, &all)?;
    rdd_fit_sides(spec, &data.take(&l), &data.take(&r), profile)
}

impl RddFit {
    pub fn estimate(&self, functional: &FunctionalKind) -> Result<RddEstimate> {
        let row = self.profile.to_dataset()?;
        let value = |m: &FittedModel, side: &str| -> Result<f64> {
            let th = predict_parameters(m, &row).map_err(side_err(side))?[0];
            functional.evaluate(&DistSpec { family: m.family, theta: th }).map_err(side_err(side))
        };
        let lv = value(&self.left, "left")?;
        let rv = value(&self.right, "right")?;
        let numerator = rv - lv;
        let (p_left, p_right, den) = match (&self.treatment_left, &self.treatment_right) {
            (Some(tl), Some(tr)) => {
                let pl = tl.probability(&row).map_err(side_err("left"))?;
                let pr = tr.probability(&row).map_err(side_err("right"))?;
                let den = pr - pl;
                if !(den.abs() >= self.epsilon) {
                    return Err(Error::NotIdentified(format!(
                        "treatment probability jumps by {den:.4} at the cutoff (|jump| < {})",
                        self.epsilon
                    )));
                }
                (Some(pl), Some(pr), den)
            }
            _ => (None, None, 1.0),
        };
        Ok(RddEstimate {
            functional: functional.label(),
            numerator,
            left_value: lv,
            right_value: rv,
            denominator: den,
            p_left,
            p_right,
            estimate: numerator / den,
            n_left: self.n_left,
            n_right: self.n_right,
            bandwidth: self.bandwidth,
        })
    }
}

/// Sharp design: right-limit minus left-limit of the functional at the cutoff.
pub fn srd_fit(data: &Dataset, spec: &RddSpec, functional: &FunctionalKind) -> Result<RddEstimate> {
    if spec.fuzzy {
        return Err(Error::invalid("srd_fit called with a fuzzy specification"));
    }
    rdd_fit(data, spec)?.estimate(functional)
}

/// Fuzzy design: the sharp difference divided by the jump in treatment
/// probability at the cutoff.
pub fn frd_fit(data: &Dataset, spec: &RddSpec, functional: &FunctionalKind) -> Result<RddEstimate> {
    if !spec.fuzzy {
        return Err(Error::invalid("frd_fit needs a fuzzy specification"));
    }
    rdd_fit(data, spec)?.estimate(functional)
}
