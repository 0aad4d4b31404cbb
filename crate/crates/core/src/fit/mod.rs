//! Penalized maximum likelihood for every distribution parameter at once.
//!
//! Parameters are updated in declaration order. Each update is one penalized
//! Newton step on that parameter's coefficients with the others held fixed,
//! solved jointly over all of the parameter's blocks, followed by step
//! halving on the penalized deviance −2ℓ + Σ λ cᵀSc.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset};
use crate::design::{assemble_design, rebuild_design, BlockRecipe, Design, FormulaSet};
use crate::error::{Error, Result};
use crate::families::{Family, Link, ParamVector, WEIGHT_FLOOR};
use crate::linalg::xtwx;

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Bound on the implied working response |η + u/w|.
const WORKING_RESPONSE_CLAMP: f64 = 1e6;

/// Slack allowed when accepting a step, absorbing rounding in the deviance sum.
const ACCEPT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LambdaMode {
    Fixed,
    GaicGrid { grid: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitControl {
    pub max_cycles: usize,
    pub inner_iterations: usize,
    /// Relative change in penalized deviance that ends the outer loop.
    pub tolerance: f64,
    pub max_halvings: usize,
    pub lambda_mode: LambdaMode,
}

impl Default for FitControl {
    fn default() -> Self {
        FitControl { max_cycles: 200, inner_iterations: 1, tolerance: 1e-6, max_halvings: 10, lambda_mode: LambdaMode::Fixed }
    }
}

impl FitControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("fit tolerance must be > 0"));
        }
        if self.max_cycles == 0 || self.inner_iterations == 0 {
            return Err(Error::invalid("cycle and inner iteration limits must be >= 1"));
        }
        if let LambdaMode::GaicGrid { grid } = &self.lambda_mode {
            if grid.is_empty() {
                return Err(Error::invalid("smoothing grid is empty"));
            }
            if grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                return Err(Error::invalid("smoothing grid values must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Family, response, per-parameter formulas and links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub response: String,
    pub formulas: FormulaSet,
    pub links: Vec<Link>,
    pub control: FitControl,
}

impl ModelSpec {
    pub fn new(family: Family, response: &str, formulas: FormulaSet) -> Self {
        ModelSpec {
            family,
            response: response.to_string(),
            formulas,
            links: family.default_links(),
            control: FitControl::default(),
        }
    }

    pub fn with_control(mut self, control: FitControl) -> Self {
        self.control = control;
        self
    }

    pub fn with_links(mut self, links: Vec<Link>) -> Self {
        self.links = links;
        self
    }

    /// Response plus every covariate the formulas read.
    pub fn variables(&self) -> Vec<String> {
        let mut v = self.formulas.variables();
        if !v.contains(&self.response) {
            v.insert(0, self.response.clone());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.family.params();
        if self.formulas.formulas.len() != params.len() || self.links.len() != params.len() {
            return Err(Error::invalid(format!(
                "{} has {} parameters; got {} formulas and {} links",
                self.family.name(),
                params.len(),
                self.formulas.formulas.len(),
                self.links.len()
            )));
        }
        for (f, d) in self.formulas.formulas.iter().zip(params) {
            if f.param != d.symbol {
                return Err(Error::invalid(format!("formula for `{}` found where `{}` was expected", f.param, d.symbol)));
            }
        }
        self.control.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFit {
    pub label: String,
    pub recipe: BlockRecipe,
    pub column_labels: Vec<String>,
    pub lambda: f64,
    pub penalized: bool,
    pub edf: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamFit {
    pub param: String,
    pub link: Link,
    pub blocks: Vec<BlockFit>,
}

impl ParamFit {
    pub fn coefficients(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.coefficients.iter().copied()).collect()
    }

    /// Coefficient of a named column, e.g. `"T"` or `"(Intercept)"`.
    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.blocks.iter().find_map(|b| {
            b.column_labels.iter().position(|l| l == column).map(|j| b.coefficients[j])
        })
    }

    pub fn edf(&self) -> f64 {
        self.blocks.iter().map(|b| b.edf).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub cycle: usize,
    pub penalized_deviance: f64,
    pub loglik: f64,
    /// Parameter updates in this cycle that exhausted step halving.
    pub rejected_updates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub version: u32,
    pub family: Family,
    pub response: String,
    pub formulas: FormulaSet,
    pub params: Vec<ParamFit>,
    pub loglik: f64,
    /// −2ℓ.
    pub global_deviance: f64,
    pub penalized_deviance: f64,
    pub converged: bool,
    pub cycles: usize,
    pub trace: Vec<TraceEntry>,
    pub n_obs: usize,
    pub schema: Vec<SchemaEntry>,
    pub schema_fingerprint: u64,
    pub warnings: Vec<String>,
    /// In-sample linear predictors; not serialized.
    #[serde(skip)]
    pub fitted_eta: Vec<Vec<f64>>,
}

impl FittedModel {
    pub fn links(&self) -> Vec<Link> {
        self.params.iter().map(|p| p.link).collect()
    }

    pub fn param(&self, symbol: &str) -> Option<&ParamFit> {
        self.params.iter().find(|p| p.param == symbol)
    }

    /// Coefficient of `column` in the predictor for `param`.
    pub fn coefficient(&self, param: &str, column: &str) -> Option<f64> {
        self.param(param)?.coefficient(column)
    }

    pub fn total_edf(&self) -> f64 {
        self.params.iter().map(|p| p.edf()).sum()
    }

    pub fn total_coefficients(&self) -> usize {
        self.params.iter().map(|p| p.coefficients().len()).sum()
    }

    /// In-sample θ̂ per row (empty for a deserialized model).
    pub fn fitted_params(&self) -> Vec<ParamVector> {
        let links = self.links();
        let n = self.fitted_eta.first().map_or(0, |e| e.len());
        (0..n)
            .map(|i| {
                let th: Vec<f64> = self.fitted_eta.iter().zip(&links).map(|(e, l)| l.invert(e[i])).collect();
                ParamVector::new_unchecked(&th)
            })
            .collect()
    }
}

/// Coefficients, edf and trace from one run of the cycling algorithm.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub coefficients: Vec<DVector<f64>>,
    /// Effective degrees of freedom per parameter per block.
    pub edf: Vec<Vec<f64>>,
    pub etas: Vec<Vec<f64>>,
    pub loglik: f64,
    pub penalized_deviance: f64,
    pub converged: bool,
    pub cycles: usize,
    pub trace: Vec<TraceEntry>,
    pub flagged: usize,
}

struct Engine<'a> {
    family: Family,
    y: &'a [f64],
    links: &'a [Link],
    x: Vec<DMatrix<f64>>,
    penalty: Vec<DMatrix<f64>>,
    design: &'a Design,
}

impl Engine<'_> {
    fn loglik(&self, etas: &[Vec<f64>]) -> f64 {
        let k = etas.len();
        let mut th = [0.0; 4];
        let mut ll = 0.0;
        for (i, &y) in self.y.iter().enumerate() {
            for j in 0..k {
                th[j] = self.links[j].invert(etas[j][i]);
            }
            let Ok(p) = self.family.param_vector(&th[..k]) else {
                return f64::NEG_INFINITY;
            };
            ll += self.family.log_pdf(y, &p);
        }
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    fn penalty_of(&self, k: usize, c: &DVector<f64>) -> f64 {
        if self.penalty[k].iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        c.dot(&(&self.penalty[k] * c))
    }

    /// Score and floored information for parameter `k` at the current predictors.
    fn working(&self, k: usize, etas: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, usize) {
        let n = self.y.len();
        let kk = etas.len();
        let mut u = vec![0.0; n];
        let mut w = vec![WEIGHT_FLOOR; n];
        let mut flagged = 0;
        let mut th = [0.0; 4];
        for i in 0..n {
            for j in 0..kk {
                th[j] = self.links[j].invert(etas[j][i]);
            }
            let p = ParamVector::new_unchecked(&th[..kk]);
            let (ui, wi) = self.family.eta_derivs(k, self.y[i], &p, self.links[k]);
            if !ui.is_finite() || !wi.is_finite() {
                flagged += 1;
                continue;
            }
            let wi = wi.max(WEIGHT_FLOOR);
            let eta = etas[k][i];
            let z = eta + ui / wi;
            u[i] = if z.abs() > WORKING_RESPONSE_CLAMP { wi * (z.clamp(-WORKING_RESPONSE_CLAMP, WORKING_RESPONSE_CLAMP) - eta) } else { ui };
            w[i] = wi;
        }
        (u, w, flagged)
    }

    fn singular(&self, k: usize, a: &DMatrix<f64>) -> Error {
        let pd = &self.design.params[k];
        let ranges = pd.block_ranges();
        let mut culprit = pd.blocks.last().map(|b| b.label.clone()).unwrap_or_default();
        for (b, r) in pd.blocks.iter().zip(&ranges) {
            let sub = a.view((0, 0), (r.end, r.end)).into_owned();
            if sub.cholesky().is_none() {
                culprit = b.label.clone();
                break;
            }
        }
        Error::Singular { param: pd.param.clone(), block: culprit }
    }
}

fn initial_coefficients(family: Family, design: &Design, y: &[f64], links: &[Link]) -> Result<Vec<DVector<f64>>> {
    let theta0 = family.initial_params(y)?;
    design
        .params
        .iter()
        .enumerate()
        .map(|(k, pd)| {
            let mut c = DVector::zeros(pd.ncols());
            if let Some(j) = pd.blocks.iter().position(|b| matches!(b.recipe, BlockRecipe::Intercept)) {
                let off: usize = pd.blocks[..j].iter().map(|b| b.ncols()).sum();
                c[off] = links[k].apply(theta0[k])?;
            }
            Ok(c)
        })
        .collect()
}

/// Runs the cycling algorithm on an assembled design.
pub fn fit_design(
    family: Family,
    design: &Design,
    y: &[f64],
    links: &[Link],
    control: &FitControl,
    start: Option<&[Vec<f64>]>,
) -> Result<FitOutcome> {
    control.validate()?;
    let n = y.len();
    let kk = family.n_params();
    if design.params.len() != kk || links.len() != kk {
        return Err(Error::invalid("design/link count does not match the family"));
    }
    let bad: Vec<usize> = (0..n).filter(|&i| !y[i].is_finite() || !family.in_support(y[i])).collect();
    if !bad.is_empty() {
        return Err(Error::invalid(format!(
            "{} response values outside the {} support (first rows {:?})",
            bad.len(),
            family.name(),
            &bad[..bad.len().min(10)]
        )));
    }
    let p_total = design.total_coefficients();
    if n <= p_total {
        return Err(Error::TooFewObservations(format!("{n} rows for {p_total} coefficients")));
    }

    let engine = Engine {
        family,
        y,
        links,
        x: design.params.iter().map(|p| p.matrix()).collect(),
        penalty: design.params.iter().map(|p| p.penalty()).collect(),
        design,
    };

    let mut coefs = match start {
        Some(s) if s.len() == kk && s.iter().zip(&design.params).all(|(c, p)| c.len() == p.ncols()) => {
            s.iter().map(|c| DVector::from_column_slice(c)).collect()
        }
        _ => initial_coefficients(family, design, y, links)?,
    };
    let mut etas: Vec<Vec<f64>> = (0..kk).map(|k| (&engine.x[k] * &coefs[k]).as_slice().to_vec()).collect();
    let mut ll = engine.loglik(&etas);
    if !ll.is_finite() && start.is_some() {
        coefs = initial_coefficients(family, design, y, links)?;
        etas = (0..kk).map(|k| (&engine.x[k] * &coefs[k]).as_slice().to_vec()).collect();
        ll = engine.loglik(&etas);
    }
    if !ll.is_finite() {
        return Err(Error::invalid("starting values give a non-finite likelihood"));
    }
    let mut pens: Vec<f64> = (0..kk).map(|k| engine.penalty_of(k, &coefs[k])).collect();
    let mut pd = -2.0 * ll + pens.iter().sum::<f64>();
    let mut trace = vec![TraceEntry { cycle: 0, penalized_deviance: pd, loglik: ll, rejected_updates: 0 }];
    let mut converged = false;
    let mut cycles = 0;
    let mut flagged_total = 0;

    for cycle in 1..=control.max_cycles {
        cycles = cycle;
        let pd_start = pd;
        let mut rejected = 0;
        for k in 0..kk {
            for _ in 0..control.inner_iterations {
                let (u, w, flagged) = engine.working(k, &etas);
                flagged_total += flagged;
                let x = &engine.x[k];
                let a = xtwx(x, &w) + &engine.penalty[k];
                let rhs_v: Vec<f64> = (0..n).map(|i| w[i] * etas[k][i] + u[i]).collect();
                let rhs = x.tr_mul(&DVector::from_vec(rhs_v));
                let Some(ch) = a.clone().cholesky() else {
                    return Err(engine.singular(k, &a));
                };
                let target = ch.solve(&rhs);
                let dir = &target - &coefs[k];
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..=control.max_halvings {
                    let cand = &coefs[k] + &dir * alpha;
                    let eta_c = (x * &cand).as_slice().to_vec();
                    let old = std::mem::replace(&mut etas[k], eta_c);
                    let ll_c = engine.loglik(&etas);
                    let pen_c = engine.penalty_of(k, &cand);
                    let pd_c = -2.0 * ll_c + pen_c + pens.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v).sum::<f64>();
                    if pd_c.is_finite() && pd_c <= pd + ACCEPT_SLACK {
                        coefs[k] = cand;
                        pens[k] = pen_c;
                        ll = ll_c;
                        pd = pd_c;
                        accepted = true;
                        break;
                    }
                    etas[k] = old;
                    alpha *= 0.5;
                }
                if !accepted {
                    rejected += 1;
                }
            }
        }
        trace.push(TraceEntry { cycle, penalized_deviance: pd, loglik: ll, rejected_updates: rejected });
        let rel = (pd_start - pd).abs() / pd.abs().max(1.0);
        if rel < control.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("fit did not converge in {} cycles", control.max_cycles);
    }
    if flagged_total > 0 {
        log::debug!("{flagged_total} observation updates had non-finite derivatives");
    }

    let edf = (0..kk)
        .map(|k| {
            let (_, w, _) = engine.working(k, &etas);
            let h = xtwx(&engine.x[k], &w);
            let a = &h + &engine.penalty[k];
            let m = match a.cholesky() {
                Some(ch) => ch.solve(&h),
                None => return Err(Error::Singular { param: design.params[k].param.clone(), block: "(final)".into() }),
            };
            Ok(design.params[k]
                .block_ranges()
                .into_iter()
                .map(|r| r.map(|j| m[(j, j)]).sum())
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    Ok(FitOutcome {
        coefficients: coefs,
        edf,
        etas,
        loglik: ll,
        penalized_deviance: pd,
        converged,
        cycles,
        trace,
        flagged: flagged_total,
    })
}

fn response<'a>(spec: &ModelSpec, data: &'a Dataset) -> Result<&'a [f64]> {
    match data.column(&spec.response)? {
        Column::Categorical(_) => Err(Error::invalid(format!("response `{}` is categorical", spec.response))),
        c => Ok(c.numeric().unwrap()),
    }
}

fn model_from(spec: &ModelSpec, design: &Design, data: &Dataset, out: FitOutcome) -> FittedModel {
    let vars = spec.variables();
    let schema = vars
        .iter()
        .filter_map(|v| data.column(v).ok().map(|c| SchemaEntry { name: v.clone(), kind: c.kind() }))
        .collect();
    let warnings = design.params.iter().flat_map(|p| p.blocks.iter().flat_map(|b| b.warnings.clone())).collect();
    let params = design
        .params
        .iter()
        .enumerate()
        .map(|(k, pd)| {
            let ranges = pd.block_ranges();
            ParamFit {
                param: pd.param.clone(),
                link: spec.links[k],
                blocks: pd
                    .blocks
                    .iter()
                    .zip(ranges)
                    .enumerate()
                    .map(|(b, (blk, r))| BlockFit {
                        label: blk.label.clone(),
                        recipe: blk.recipe.clone(),
                        column_labels: blk.column_labels.clone(),
                        lambda: blk.lambda,
                        penalized: blk.is_penalized(),
                        edf: out.edf[k][b],
                        coefficients: out.coefficients[k].as_slice()[r].to_vec(),
                    })
                    .collect(),
            }
        })
        .collect();
    FittedModel {
        version: MODEL_FORMAT_VERSION,
        family: spec.family,
        response: spec.response.clone(),
        formulas: spec.formulas.clone(),
        params,
        loglik: out.loglik,
        global_deviance: -2.0 * out.loglik,
        penalized_deviance: out.penalized_deviance,
        converged: out.converged,
        cycles: out.cycles,
        trace: out.trace,
        n_obs: data.n_rows(),
        schema,
        schema_fingerprint: data.schema_fingerprint(&vars),
        warnings,
        fitted_eta: out.etas,
    }
}

fn set_lambdas(design: &mut Design, lambdas: &[Vec<f64>]) {
    for (pd, ls) in design.params.iter_mut().zip(lambdas) {
        for (b, &l) in pd.blocks.iter_mut().zip(ls) {
            b.lambda = l;
        }
    }
}

fn lambdas_of(design: &Design) -> Vec<Vec<f64>> {
    design.params.iter().map(|p| p.blocks.iter().map(|b| b.lambda).collect()).collect()
}

/// Fits `spec` to `data`. Rows must already be free of missing values in the
/// model variables.
pub fn fit(spec: &ModelSpec, data: &Dataset) -> Result<FittedModel> {
    fit_impl(spec, data, None)
}

/// Like [`fit`], starting from another model's coefficients when the shapes agree.
pub fn fit_from(spec: &ModelSpec, data: &Dataset, start: &FittedModel) -> Result<FittedModel> {
    let s: Vec<Vec<f64>> = start.params.iter().map(|p| p.coefficients()).collect();
    fit_impl(spec, data, Some(&s))
}

fn fit_impl(spec: &ModelSpec, data: &Dataset, start: Option<&[Vec<f64>]>) -> Result<FittedModel> {
    spec.validate()?;
    let y = response(spec, data)?;
    let mut design = assemble_design(&spec.formulas, data)?;
    if let LambdaMode::GaicGrid { grid } = &spec.control.lambda_mode {
        let chosen = select_lambdas(spec, &mut design, y, grid)?;
        set_lambdas(&mut design, &chosen);
    }
    let out = fit_design(spec.family, &design, y, &spec.links, &spec.control, start)?;
    Ok(model_from(spec, &design, data, out))
}

/// Generalized AIC: −2ℓ + k·(total edf).
pub fn gaic(model: &FittedModel, penalty_k: f64) -> f64 {
    -2.0 * model.loglik + penalty_k * model.total_edf()
}

fn select_lambdas(spec: &ModelSpec, design: &mut Design, y: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if grid.is_empty() {
        return Err(Error::invalid("smoothing grid is empty"));
    }
    let control = FitControl { lambda_mode: LambdaMode::Fixed, ..spec.control.clone() };
    let penalized: Vec<(usize, usize)> = design
        .params
        .iter()
        .enumerate()
        .flat_map(|(k, p)| p.blocks.iter().enumerate().filter(|(_, b)| b.is_penalized()).map(move |(b, _)| (k, b)))
        .collect();
    let score = |design: &Design| -> Result<f64> {
        let out = fit_design(spec.family, design, y, &spec.links, &control, None)?;
        Ok(-2.0 * out.loglik + 2.0 * out.edf.iter().flatten().sum::<f64>())
    };
    for _sweep in 0..3 {
        let mut changed = false;
        for &(k, b) in &penalized {
            let current = design.params[k].blocks[b].lambda;
            let mut best: Option<(f64, f64)> = None;
            for &l in grid {
                design.params[k].blocks[b].lambda = l;
                let s = score(design)?;
                best = match best {
                    None => Some((l, s)),
                    Some((bl, bs)) => {
                        let tie = (s - bs).abs() <= 1e-9 * bs.abs().max(1.0);
                        if (s < bs && !tie) || (tie && l > bl) {
                            Some((l, s))
                        } else {
                            Some((bl, bs))
                        }
                    }
                };
            }
            let chosen = best.map(|b| b.0).unwrap_or(current);
            design.params[k].blocks[b].lambda = chosen;
            changed |= chosen != current;
        }
        if !changed {
            break;
        }
    }
    Ok(lambdas_of(design))
}

/// Coordinate-wise grid search over every penalized block's λ minimizing
/// GAIC(2); ties go to the larger λ. Returns λ per parameter per block
/// (0 for unpenalized blocks).
pub fn select_smoothing(spec: &ModelSpec, data: &Dataset, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let y = response(spec, data)?;
    let mut design = assemble_design(&spec.formulas, data)?;
    let top = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for p in design.params.iter_mut() {
        for b in p.blocks.iter_mut().filter(|b| b.is_penalized()) {
            b.lambda = top;
        }
    }
    select_lambdas(spec, &mut design, y, grid)
}

fn check_schema(model: &FittedModel, data: &Dataset) -> Result<()> {
    for e in model.schema.iter().filter(|e| e.name != model.response) {
        let c = data.column(&e.name)?;
        let compatible = match (e.kind, c.kind()) {
            (ColumnKind::Categorical, ColumnKind::Categorical) => true,
            (ColumnKind::Categorical, _) | (_, ColumnKind::Categorical) => false,
            _ => true,
        };
        if !compatible {
            return Err(Error::invalid(format!(
                "column `{}` is {:?} in new data but was {:?} when fitting",
                e.name,
                c.kind(),
                e.kind
            )));
        }
    }
    Ok(())
}

/// Linear predictors η_k per parameter for every row of `data`.
pub fn predict_eta(model: &FittedModel, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    check_schema(model, data)?;
    let recipes: Vec<Vec<BlockRecipe>> =
        model.params.iter().map(|p| p.blocks.iter().map(|b| b.recipe.clone()).collect()).collect();
    let lambdas: Vec<Vec<f64>> = model.params.iter().map(|p| p.blocks.iter().map(|b| b.lambda).collect()).collect();
    let names: Vec<String> = model.params.iter().map(|p| p.param.clone()).collect();
    let design = rebuild_design(&recipes, &lambdas, &names, data)?;
    Ok(design
        .params
        .iter()
        .zip(&model.params)
        .map(|(pd, pf)| {
            let c = DVector::from_vec(pf.coefficients());
            (pd.matrix() * c).as_slice().to_vec()
        })
        .collect())
}

/// Link-inverted parameter values per row of `data`.
pub fn predict_parameters(model: &FittedModel, data: &Dataset) -> Result<Vec<ParamVector>> {
    let etas = predict_eta(model, data)?;
    let links = model.links();
    (0..data.n_rows())
        .map(|i| {
            let th: Vec<f64> = etas.iter().zip(&links).map(|(e, l)| l.invert(e[i])).collect();
            model.family.param_vector(&th)
        })
        .collect()
}
