//! Compiles per-parameter formulas into design blocks: a basis matrix plus a
//! quadratic penalty for every term.

pub mod bspline;
mod formula;

pub use formula::{Formula, FormulaSet, TermSpec, DEFAULT_DEGREE, DEFAULT_DIFF_ORDER, DEFAULT_KNOTS, DEFAULT_LAMBDA};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::error::{Error, Result};
use bspline::{difference_penalty, null_space_of, KnotLayout};

/// Everything needed to rebuild a block's basis on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockRecipe {
    Intercept,
    Numeric { var: String },
    /// Indicator columns for `levels` (the reference level is left out).
    Indicators { var: String, levels: Vec<String> },
    Interaction { parts: Vec<BlockRecipe> },
    Pspline {
        var: String,
        lo: f64,
        hi: f64,
        segments: usize,
        degree: usize,
        diff_order: usize,
        /// Row-major m × (m−1) sum-to-zero constraint basis, when centered.
        constraint: Option<Vec<f64>>,
    },
    RandomEffect { var: String, levels: Vec<String> },
    MundlakMean { var: String, unit: String },
}

impl BlockRecipe {
    pub fn dim(&self) -> usize {
        match self {
            BlockRecipe::Intercept | BlockRecipe::Numeric { .. } | BlockRecipe::MundlakMean { .. } => 1,
            BlockRecipe::Indicators { levels, .. } | BlockRecipe::RandomEffect { levels, .. } => levels.len(),
            BlockRecipe::Interaction { parts } => parts.iter().map(|p| p.dim()).product(),
            BlockRecipe::Pspline { segments, degree, constraint, .. } => {
                segments + degree - usize::from(constraint.is_some())
            }
        }
    }

    /// Builds the basis for `data`. Spline inputs outside the training range
    /// are clamped to it, with a logged warning beyond 1% of the range.
    pub fn build(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        let n = data.n_rows();
        Ok(match self {
            BlockRecipe::Intercept => DMatrix::from_element(n, 1, 1.0),
            BlockRecipe::Numeric { var } => {
                let x = finite_numeric(data, var)?;
                DMatrix::from_column_slice(n, 1, x)
            }
            BlockRecipe::Indicators { var, levels } | BlockRecipe::RandomEffect { var, levels } => {
                let labels = data.group_labels(var)?;
                let mut b = DMatrix::zeros(n, levels.len());
                for (i, l) in labels.iter().enumerate() {
                    if let Some(j) = levels.iter().position(|v| v == l) {
                        b[(i, j)] = 1.0;
                    }
                }
                b
            }
            BlockRecipe::Interaction { parts } => {
                let mats: Vec<DMatrix<f64>> = parts.iter().map(|p| p.build(data)).collect::<Result<_>>()?;
                let mut out = DMatrix::from_element(n, 1, 1.0);
                for m in mats {
                    let mut next = DMatrix::zeros(n, out.ncols() * m.ncols());
                    for a in 0..out.ncols() {
                        for b in 0..m.ncols() {
                            let col = a * m.ncols() + b;
                            for i in 0..n {
                                next[(i, col)] = out[(i, a)] * m[(i, b)];
                            }
                        }
                    }
                    out = next;
                }
                out
            }
            BlockRecipe::Pspline { var, lo, hi, segments, degree, constraint, .. } => {
                let x = finite_numeric(data, var)?;
                // Evaluating right at a boundary (an RDD cutoff) is routine; only
                // real extrapolation is worth a warning.
                let slack = 0.01 * (hi - lo);
                let outside = x.iter().filter(|&&v| v < lo - slack || v > hi + slack).count();
                if outside > 0 {
                    log::warn!("s({var}): {outside} values outside the training range clamped");
                }
                let layout = KnotLayout { lo: *lo, hi: *hi, segments: *segments, degree: *degree };
                let b = layout.basis(x);
                match constraint {
                    Some(z) => {
                        let m = layout.dim();
                        b * DMatrix::from_row_slice(m, m - 1, z)
                    }
                    None => b,
                }
            }
            BlockRecipe::MundlakMean { var, unit } => {
                let means = unit_means(data, var, unit)?;
                DMatrix::from_column_slice(n, 1, &means)
            }
        })
    }

    fn penalty(&self) -> Option<DMatrix<f64>> {
        match self {
            BlockRecipe::Pspline { segments, degree, diff_order, constraint, .. } => {
                let m = segments + degree;
                let s = difference_penalty(m, *diff_order);
                Some(match constraint {
                    Some(z) => {
                        let z = DMatrix::from_row_slice(m, m - 1, z);
                        z.transpose() * s * z
                    }
                    None => s,
                })
            }
            BlockRecipe::RandomEffect { levels, .. } => Some(DMatrix::identity(levels.len(), levels.len())),
            _ => None,
        }
    }

    fn column_labels(&self, term: &str) -> Vec<String> {
        match self {
            BlockRecipe::Intercept => vec!["(Intercept)".into()],
            BlockRecipe::Numeric { var } => vec![var.clone()],
            BlockRecipe::MundlakMean { var, .. } => vec![format!("mean({var})")],
            BlockRecipe::Indicators { var, levels } | BlockRecipe::RandomEffect { var, levels } => {
                levels.iter().map(|l| format!("{var}[{l}]")).collect()
            }
            BlockRecipe::Interaction { parts } => {
                let mut labels = vec![String::new()];
                for p in parts {
                    let pl = p.column_labels("");
                    labels = labels
                        .iter()
                        .flat_map(|a| {
                            pl.iter().map(move |b| if a.is_empty() { b.clone() } else { format!("{a}:{b}") })
                        })
                        .collect();
                }
                labels
            }
            BlockRecipe::Pspline { .. } => (1..=self.dim()).map(|j| format!("{term}.{j}")).collect(),
        }
    }
}

/// Basis matrix and quadratic penalty for one term.
#[derive(Debug, Clone)]
pub struct DesignBlock {
    pub label: String,
    pub recipe: BlockRecipe,
    pub basis: DMatrix<f64>,
    /// `None` for unpenalized blocks (S = 0).
    pub penalty: Option<DMatrix<f64>>,
    pub lambda: f64,
    pub column_labels: Vec<String>,
    pub warnings: Vec<String>,
}

impl DesignBlock {
    fn from_recipe(label: String, recipe: BlockRecipe, data: &Dataset, lambda: f64) -> Result<Self> {
        let basis = recipe.build(data)?;
        let penalty = recipe.penalty();
        let column_labels = recipe.column_labels(&label);
        let mut warnings = Vec::new();
        if penalty.is_none() && !matches!(recipe, BlockRecipe::Intercept) {
            for (j, col) in basis.column_iter().enumerate() {
                let first = col[0];
                if col.iter().all(|&v| v == first) {
                    let w = format!("column `{}` is constant and collinear with the intercept", column_labels[j]);
                    log::warn!("{w}");
                    warnings.push(w);
                }
            }
        }
        Ok(DesignBlock { label, recipe, basis, penalty, lambda, column_labels, warnings })
    }

    pub fn ncols(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_penalized(&self) -> bool {
        self.penalty.is_some()
    }

    /// λ·S, or a zero matrix for unpenalized blocks.
    pub fn scaled_penalty(&self) -> DMatrix<f64> {
        match &self.penalty {
            Some(s) => s * self.lambda,
            None => DMatrix::zeros(self.ncols(), self.ncols()),
        }
    }
}

/// Design for one distribution parameter.
#[derive(Debug, Clone)]
pub struct ParamDesign {
    pub param: String,
    pub blocks: Vec<DesignBlock>,
}

impl ParamDesign {
    pub fn ncols(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }

    /// All blocks side by side.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.blocks.first().map_or(0, |b| b.basis.nrows());
        let mut x = DMatrix::zeros(n, self.ncols());
        let mut off = 0;
        for b in &self.blocks {
            x.view_mut((0, off), (n, b.ncols())).copy_from(&b.basis);
            off += b.ncols();
        }
        x
    }

    /// Block-diagonal λ-scaled penalty.
    pub fn penalty(&self) -> DMatrix<f64> {
        let p = self.ncols();
        let mut s = DMatrix::zeros(p, p);
        let mut off = 0;
        for b in &self.blocks {
            let m = b.ncols();
            if b.is_penalized() {
                s.view_mut((off, off), (m, m)).copy_from(&b.scaled_penalty());
            }
            off += m;
        }
        s
    }

    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = off..off + b.ncols();
                off += b.ncols();
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub params: Vec<ParamDesign>,
    pub n_rows: usize,
}

impl Design {
    pub fn total_coefficients(&self) -> usize {
        self.params.iter().map(|p| p.ncols()).sum()
    }

    /// Recipes per parameter per block, for prediction.
    pub fn recipes(&self) -> Vec<Vec<BlockRecipe>> {
        self.params
            .iter()
            .map(|p| p.blocks.iter().map(|b| b.recipe.clone()).collect())
            .collect()
    }
}

fn finite_numeric<'a>(data: &'a Dataset, var: &str) -> Result<&'a [f64]> {
    let x = data.numeric(var)?;
    let bad: Vec<usize> = x.iter().enumerate().filter(|(_, v)| !v.is_finite()).map(|(i, _)| i).collect();
    if !bad.is_empty() {
        return Err(Error::NonFinite { variable: var.to_string(), rows: bad });
    }
    Ok(x)
}

/// Unpenalized block for a numeric column (passed through unchanged) or a
/// categorical column (indicators for every level but the reference).
pub fn build_linear_block(data: &Dataset, var: &str) -> Result<DesignBlock> {
    build_linear_block_with_reference(data, var, None)
}

fn build_linear_block_with_reference(data: &Dataset, var: &str, reference: Option<&str>) -> Result<DesignBlock> {
    let recipe = match data.column(var)? {
        Column::Categorical(f) => {
            let reference = match reference {
                Some(r) => {
                    if !f.levels().iter().any(|l| l == r) {
                        return Err(Error::invalid(format!("reference level `{r}` not present in `{var}`")));
                    }
                    r.to_string()
                }
                None => f
                    .levels()
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("`{var}` has no levels")))?,
            };
            let levels = f.levels().iter().filter(|l| **l != reference).cloned().collect();
            BlockRecipe::Indicators { var: var.to_string(), levels }
        }
        _ => {
            if reference.is_some() {
                return Err(Error::invalid(format!("c({var}) requires a categorical column")));
            }
            BlockRecipe::Numeric { var: var.to_string() }
        }
    };
    DesignBlock::from_recipe(var.to_string(), recipe, data, 0.0)
}

/// P-spline block: B-spline basis on `knots` equal segments over the observed
/// range with a `diff_order` difference penalty, centered by absorbing the
/// sum-to-zero constraint when `center` is set.
pub fn build_pspline_block(
    data: &Dataset,
    var: &str,
    knots: usize,
    degree: usize,
    diff_order: usize,
    lambda: f64,
    center: bool,
) -> Result<DesignBlock> {
    let x = finite_numeric(data, var)?;
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 2 {
        return Err(Error::invalid(format!(
            "s({var}) needs at least {} distinct values, found {}",
            degree + 2,
            distinct.len()
        )));
    }
    let (lo, hi) = (distinct[0], *distinct.last().unwrap());
    let layout = KnotLayout { lo, hi, segments: knots, degree };
    let constraint = if center {
        let b = layout.basis(x);
        let sums: Vec<f64> = b.column_iter().map(|c| c.sum()).collect();
        let z = null_space_of(&sums);
        Some(z.transpose().as_slice().to_vec())
    } else {
        None
    };
    let recipe = BlockRecipe::Pspline { var: var.to_string(), lo, hi, segments: knots, degree, diff_order, constraint };
    DesignBlock::from_recipe(format!("s({var})"), recipe, data, lambda)
}

/// Group-indicator block with an identity (ridge) penalty.
pub fn build_random_effect_block(data: &Dataset, var: &str, lambda: f64) -> Result<DesignBlock> {
    let labels = data.group_labels(var)?;
    let mut levels = labels.clone();
    levels.sort();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::invalid(format!("re({var}) needs at least two groups")));
    }
    let mut block = DesignBlock::from_recipe(
        format!("re({var})"),
        BlockRecipe::RandomEffect { var: var.to_string(), levels: levels.clone() },
        data,
        lambda,
    )?;
    let singletons = levels.len() == labels.len();
    if singletons {
        let w = format!("re({var}): every group has one observation; effects are not identified from residual scale");
        log::warn!("{w}");
        block.warnings.push(w);
    }
    Ok(block)
}

fn unit_means(data: &Dataset, var: &str, unit: &str) -> Result<Vec<f64>> {
    let x = finite_numeric(data, var)?;
    let (idx, g) = data.group_index(unit)?;
    let mut sum = vec![0.0; g];
    let mut cnt = vec![0usize; g];
    for (i, &gi) in idx.iter().enumerate() {
        sum[gi] += x[i];
        cnt[gi] += 1;
    }
    Ok(idx.iter().map(|&gi| sum[gi] / cnt[gi] as f64).collect())
}

/// Appends `<var>_mean` columns holding the per-unit mean of each variable.
/// A variable that never varies within a unit is rejected (its mean is
/// collinear with it).
pub fn build_mundlak_means(data: &Dataset, vars: &[String], unit: &str) -> Result<(Dataset, Vec<String>)> {
    let mut out = data.clone();
    let mut names = Vec::new();
    for var in vars {
        let x = finite_numeric(data, var)?;
        let means = unit_means(data, var, unit)?;
        let varies = x.iter().zip(&means).any(|(a, m)| (a - m).abs() > 1e-12 * (1.0 + m.abs()));
        if !varies {
            return Err(Error::invalid(format!(
                "`{var}` does not vary within units of `{unit}`; its unit mean equals the variable"
            )));
        }
        let name = format!("{var}_mean");
        out.insert(name.clone(), Column::Numeric(means))?;
        names.push(name);
    }
    Ok((out, names))
}

fn build_term(data: &Dataset, term: &TermSpec) -> Result<DesignBlock> {
    match term {
        TermSpec::Intercept => DesignBlock::from_recipe("(Intercept)".into(), BlockRecipe::Intercept, data, 0.0),
        TermSpec::Linear { var } => build_linear_block(data, var),
        TermSpec::Categorical { var, reference } => build_linear_block_with_reference(data, var, reference.as_deref()),
        TermSpec::Interaction { vars } => {
            let parts = vars
                .iter()
                .map(|v| build_linear_block(data, v).map(|b| b.recipe))
                .collect::<Result<Vec<_>>>()?;
            DesignBlock::from_recipe(vars.join(":"), BlockRecipe::Interaction { parts }, data, 0.0)
        }
        TermSpec::Pspline { var, knots, degree, diff_order, lambda, center } => {
            build_pspline_block(data, var, *knots, *degree, *diff_order, *lambda, *center)
        }
        TermSpec::RandomEffect { var, lambda } => build_random_effect_block(data, var, *lambda),
        TermSpec::MundlakMean { var, unit } => DesignBlock::from_recipe(
            format!("mundlak({var})"),
            BlockRecipe::MundlakMean { var: var.clone(), unit: unit.clone() },
            data,
            0.0,
        ),
    }
}

/// Builds every parameter's blocks, in formula order.
pub fn assemble_design(formulas: &FormulaSet, data: &Dataset) -> Result<Design> {
    for v in formulas.variables() {
        data.column(&v)?;
    }
    let params = formulas
        .formulas
        .iter()
        .map(|f| {
            let blocks = f.terms.iter().map(|t| build_term(data, t)).collect::<Result<Vec<_>>>()?;
            Ok(ParamDesign { param: f.param.clone(), blocks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Design { params, n_rows: data.n_rows() })
}

/// Rebuilds a design from stored recipes (prediction path).
pub fn rebuild_design(recipes: &[Vec<BlockRecipe>], lambdas: &[Vec<f64>], params: &[String], data: &Dataset) -> Result<Design> {
    let params = recipes
        .iter()
        .zip(lambdas)
        .zip(params)
        .map(|((rs, ls), name)| {
            let blocks = rs
                .iter()
                .zip(ls)
                .map(|(r, &l)| {
                    let basis = r.build(data)?;
                    Ok(DesignBlock {
                        label: String::new(),
                        recipe: r.clone(),
                        basis,
                        penalty: r.penalty(),
                        lambda: l,
                        column_labels: vec![],
                        warnings: vec![],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ParamDesign { param: name.clone(), blocks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Design { params, n_rows: data.n_rows() })
}
