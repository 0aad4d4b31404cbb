//! Resampling inference: parametric, pairs-cluster, nested IV and RDD
//! bootstraps, with variance, t-tests, percentile intervals and diagnostics.
//!
//! Replicate `b` draws only from its own stream derived from `(seed, b)` and
//! results are collected by index, so serial and parallel runs agree bit for
//! bit.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::effects::{
    fit_first_stage, mte, rdd_fit_split, rdd_window, with_residuals, CovariateProfile, FirstStage, RddFit, RddSpec,
    TsriFit, TsriSpec,
};
use crate::error::{Error, Result};
use crate::families::ParamVector;
use crate::fit::{fit_from, predict_parameters, FittedModel, ModelSpec};
use crate::functionals::FunctionalKind;
use crate::numeric::norm_cdf;
use crate::rng::{stream, tags, Stream};

pub const DEFAULT_REPLICATES: usize = 499;
pub const DEFAULT_MAX_FAILURE_RATE: f64 = 0.05;
pub const DEFAULT_OUTLIER_SHARE: f64 = 0.05;

/// A statistic of a refitted model; may return several values at once.
pub type Statistic<'a> = dyn Fn(&FittedModel) -> Result<Vec<f64>> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Parametric,
    PairsCluster,
    Iv,
    Rdd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedReplicate {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub values: Option<Vec<f64>>,
    pub reason: Option<String>,
}

/// All replicates of one bootstrap run, for every statistic it computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    pub method: Method,
    pub seed: u64,
    pub labels: Vec<String>,
    /// Multiplier on the bootstrap variance (the cluster correction, else 1).
    pub variance_factor: f64,
    pub outcomes: Vec<ReplicateOutcome>,
}

impl BootstrapRun {
    pub fn failures(&self) -> Vec<FailedReplicate> {
        self.outcomes
            .iter()
            .filter(|o| o.values.is_none())
            .map(|o| FailedReplicate { index: o.index, reason: o.reason.clone().unwrap_or_default() })
            .collect()
    }

    /// Result for the `j`-th statistic.
    pub fn result(&self, j: usize) -> BootstrapResult {
        BootstrapResult {
            method: self.method,
            statistic: self.labels.get(j).cloned().unwrap_or_default(),
            seed: self.seed,
            requested: self.outcomes.len(),
            variance_factor: self.variance_factor,
            replicates: self.outcomes.iter().filter_map(|o| o.values.as_ref().map(|v| v[j])).collect(),
            failures: self.failures(),
        }
    }

    pub fn results(&self) -> Vec<BootstrapResult> {
        (0..self.labels.len()).map(|j| self.result(j)).collect()
    }
}

/// Replicates of one statistic. `replicates.len() + failures.len() == requested`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub method: Method,
    pub statistic: String,
    pub seed: u64,
    pub requested: usize,
    pub variance_factor: f64,
    /// Successful replicate values in index order.
    pub replicates: Vec<f64>,
    pub failures: Vec<FailedReplicate>,
}

impl BootstrapResult {
    pub fn failure_rate(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.requested as f64
        }
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Type-7 quantile of sorted values.
pub fn quantile7(sorted: &[f64], p: f64) -> f64 {
    crate::effects::quantile_sorted(sorted, p)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// 1/(B−1) Σ (θ̂_b − θ̄)², times the variance factor.
pub fn boot_variance(r: &BootstrapResult) -> Result<f64> {
    let b = r.replicates.len();
    if b < 2 {
        return Err(Error::InferenceBlocked(format!("{b} successful replicates; variance needs at least 2")));
    }
    let m = mean(&r.replicates);
    let v = r.replicates.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1) as f64;
    Ok(v * r.variance_factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// `None` when the bootstrap variance is zero.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// t = point / √V̂ with a two-sided standard normal p-value.
pub fn boot_t_test(r: &BootstrapResult, point: f64) -> Result<TTest> {
    let v = boot_variance(r)?;
    if v <= 0.0 {
        return Ok(TTest { statistic: None, p_value: None });
    }
    let t = point / v.sqrt();
    Ok(TTest { statistic: Some(t), p_value: Some(2.0 * norm_cdf(-t.abs())) })
}

/// Type-7 quantiles at α/2 and 1 − α/2.
pub fn percentile_ci(r: &BootstrapResult, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1]"));
    }
    if r.replicates.is_empty() {
        return Err(Error::InferenceBlocked("no successful replicates".into()));
    }
    if (r.replicates.len() as f64) < 2.0 / alpha {
        log::warn!("{} replicates is below 2/alpha = {:.0} for a percentile interval", r.replicates.len(), 2.0 / alpha);
    }
    let s = sorted(&r.replicates);
    Ok((quantile7(&s, alpha / 2.0), quantile7(&s, 1.0 - alpha / 2.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub statistic: String,
    /// Estimate on the original sample.
    pub estimate: f64,
    pub replicate_mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub successes: usize,
    pub failures: usize,
}

/// Full summary; refuses when the failure rate exceeds `max_failure_rate`.
pub fn summarize(r: &BootstrapResult, point: f64, alpha: f64, max_failure_rate: f64) -> Result<InferenceSummary> {
    if r.failure_rate() > max_failure_rate {
        let mut reasons: Vec<&str> = r.failures.iter().map(|f| f.reason.as_str()).collect();
        reasons.sort();
        reasons.dedup();
        return Err(Error::InferenceBlocked(format!(
            "{} of {} replicates failed ({:.1}% > {:.1}%): {}",
            r.failures.len(),
            r.requested,
            100.0 * r.failure_rate(),
            100.0 * max_failure_rate,
            reasons.into_iter().take(3).collect::<Vec<_>>().join("; ")
        )));
    }
    let variance = boot_variance(r)?;
    let t = boot_t_test(r, point)?;
    let (lower, upper) = percentile_ci(r, alpha)?;
    Ok(InferenceSummary {
        statistic: r.statistic.clone(),
        estimate: point,
        replicate_mean: mean(&r.replicates),
        variance,
        std_error: variance.sqrt(),
        t: t.statistic,
        p_value: t.p_value,
        alpha,
        lower,
        upper,
        successes: r.replicates.len(),
        failures: r.failures.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub replicates: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub points: Vec<TracePoint>,
    /// Bounds over the last 20% of prefixes stay within 5% of the final width.
    pub stable: bool,
}

/// Percentile bounds recomputed on every prefix of the replicate vector.
pub fn convergence_trace(r: &BootstrapResult, alpha: f64) -> Result<ConvergenceTrace> {
    if r.replicates.len() < 2 {
        return Err(Error::InferenceBlocked("trace needs at least 2 replicates".into()));
    }
    let mut points = Vec::with_capacity(r.replicates.len() - 1);
    let mut prefix: Vec<f64> = vec![r.replicates[0]];
    for (k, &v) in r.replicates.iter().enumerate().skip(1) {
        let at = prefix.partition_point(|&x| x.total_cmp(&v).is_lt());
        prefix.insert(at, v);
        points.push(TracePoint {
            replicates: k + 1,
            lower: quantile7(&prefix, alpha / 2.0),
            upper: quantile7(&prefix, 1.0 - alpha / 2.0),
        });
    }
    let last = points.last().unwrap().clone();
    let width = last.upper - last.lower;
    let tail_from = points.len() - (points.len() / 5).max(1);
    let drift = points[tail_from..]
        .iter()
        .map(|p| (p.lower - last.lower).abs().max((p.upper - last.upper).abs()))
        .fold(0.0, f64::max);
    Ok(ConvergenceTrace { points, stable: drift <= 0.05 * width })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootDiagnostics {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub outliers: Vec<f64>,
    pub skewness: f64,
    pub min: f64,
    pub max: f64,
    pub warning: Option<String>,
}

/// Boxplot statistics with 1.5·IQR fences and the sample skewness.
pub fn diagnose_boot(r: &BootstrapResult, outlier_share: f64) -> Result<BootDiagnostics> {
    if r.replicates.is_empty() {
        return Err(Error::InferenceBlocked("no successful replicates".into()));
    }
    let s = sorted(&r.replicates);
    let (q1, median, q3) = (quantile7(&s, 0.25), quantile7(&s, 0.5), quantile7(&s, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let outliers: Vec<f64> = s.iter().copied().filter(|&v| v < lo || v > hi).collect();
    let m = mean(&s);
    let m2 = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / s.len() as f64;
    let m3 = s.iter().map(|x| (x - m).powi(3)).sum::<f64>() / s.len() as f64;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let share = outliers.len() as f64 / s.len() as f64;
    let warning = (share > outlier_share)
        .then(|| format!("{} outliers ({:.1}% of replicates) beyond the 1.5·IQR fences", outliers.len(), 100.0 * share));
    Ok(BootDiagnostics {
        q1,
        median,
        q3,
        lower_fence: lo,
        upper_fence: hi,
        outliers,
        skewness,
        min: s[0],
        max: *s.last().unwrap(),
        warning,
    })
}

/// G/(G−1) · (N−1)/(N−K).
pub fn cluster_factor(g: usize, n: usize, k: usize) -> Result<f64> {
    if g < 2 || n <= k || n < 2 {
        return Err(Error::invalid(format!("cluster factor undefined for G={g}, N={n}, K={k}")));
    }
    Ok(g as f64 / (g - 1) as f64 * (n - 1) as f64 / (n - k) as f64)
}

/// Statistic computing MTEs of several functionals at a fixed profile.
pub fn mte_statistic<'a>(
    profile: &'a CovariateProfile,
    functionals: &'a [FunctionalKind],
    treatment: &'a str,
) -> impl Fn(&FittedModel) -> Result<Vec<f64>> + Sync + 'a {
    move |m: &FittedModel| functionals.iter().map(|f| mte(m, profile, f, treatment).map(|e| e.difference)).collect()
}

fn run<F>(b: usize, f: F) -> Vec<ReplicateOutcome>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    (0..b)
        .into_par_iter()
        .map(|i| match f(i) {
            Ok(v) if v.iter().all(|x| x.is_finite()) => ReplicateOutcome { index: i, values: Some(v), reason: None },
            Ok(_) => ReplicateOutcome { index: i, values: None, reason: Some("non-finite statistic".into()) },
            Err(e) => ReplicateOutcome { index: i, values: None, reason: Some(e.to_string()) },
        })
        .collect()
}

fn labels_of(n: usize, labels: &[String]) -> Vec<String> {
    if labels.len() == n {
        labels.to_vec()
    } else {
        (0..n).map(|j| format!("statistic{j}")).collect()
    }
}

/// Replaces `response` with one draw per row from the given distributions.
fn redraw(data: &Dataset, response: &str, model: &FittedModel, theta: &[ParamVector], rng: &mut Stream) -> Result<Dataset> {
    let y: Vec<f64> = theta.iter().map(|t| model.family.sample(t, rng)).collect();
    let mut d = data.clone();
    let col = match data.column(response)? {
        Column::Count(_) => Column::Count(y),
        _ => Column::Numeric(y),
    };
    d.insert(response, col)?;
    Ok(d)
}

fn refit(spec: &ModelSpec, data: &Dataset, start: &FittedModel) -> Result<FittedModel> {
    let m = fit_from(spec, data, start)?;
    if !m.converged {
        return Err(Error::invalid(format!("refit did not converge in {} cycles", m.cycles)));
    }
    Ok(m)
}

/// Draws y* from the fitted conditional distribution of every row, refits
/// `spec` and evaluates `statistic`. `data` is the fitting sample.
pub fn parametric_bootstrap(
    spec: &ModelSpec,
    model: &FittedModel,
    data: &Dataset,
    statistic: &Statistic,
    labels: &[String],
    b: usize,
    seed: u64,
) -> Result<BootstrapRun> {
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let theta = predict_parameters(model, data)?;
    let width = statistic(model)?.len();
    let outcomes = run(b, |i| {
        let mut rng = stream(seed, &[i as u64]);
        let d = redraw(data, &spec.response, model, &theta, &mut rng)?;
        statistic(&refit(spec, &d, model)?)
    });
    Ok(BootstrapRun { method: Method::Parametric, seed, labels: labels_of(width, labels), variance_factor: 1.0, outcomes })
}

/// Resamples whole clusters with replacement, refits and evaluates.
#[allow(clippy::too_many_arguments)]
pub fn pairs_cluster_bootstrap(
    data: &Dataset,
    cluster: &str,
    spec: &ModelSpec,
    model: &FittedModel,
    statistic: &Statistic,
    labels: &[String],
    b: usize,
    seed: u64,
) -> Result<BootstrapRun> {
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let (idx, g) = data.group_index(cluster)?;
    if g < 2 {
        return Err(Error::invalid(format!("pairs-cluster bootstrap needs >= 2 clusters of `{cluster}`, found {g}")));
    }
    let mut members = vec![Vec::new(); g];
    for (row, &c) in idx.iter().enumerate() {
        members[c].push(row);
    }
    let c = cluster_factor(g, data.n_rows(), model.total_coefficients())?;
    let width = statistic(model)?.len();
    let outcomes = run(b, |i| {
        let mut rng = stream(seed, &[i as u64]);
        let draw: Vec<usize> = (0..g).map(|_| rng.random_range(0..g)).collect();
        let first = draw[0];
        if draw.iter().all(|&d| d == first) {
            return Err(Error::invalid("replicate drew a single unique cluster"));
        }
        let rows: Vec<usize> = draw.iter().flat_map(|&d| members[d].iter().copied()).collect();
        statistic(&refit(spec, &data.take(&rows), model)?)
    });
    Ok(BootstrapRun { method: Method::PairsCluster, seed, labels: labels_of(width, labels), variance_factor: c, outcomes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstStageResampling {
    /// Redraw x_e from the stage-1 Gaussian fit.
    Parametric,
    /// Resample rows of (x_e, instruments, covariates).
    Pairs,
    /// Keep the original stage-1 fit (stage-2 uncertainty only).
    Frozen,
}

fn first_stage_replicate(
    data: &Dataset,
    tsri: &TsriSpec,
    original: &[FirstStage],
    mode: FirstStageResampling,
    rng: &mut Stream,
) -> Result<Vec<FirstStage>> {
    let control = &tsri.second_stage.control;
    original
        .iter()
        .zip(&tsri.endogenous)
        .map(|(s, e)| {
            let sample = match mode {
                FirstStageResampling::Frozen => return Ok(s.clone()),
                FirstStageResampling::Pairs => {
                    let n = data.n_rows();
                    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    data.take(&rows)
                }
                FirstStageResampling::Parametric => {
                    let th = predict_parameters(&s.model, data)?;
                    redraw(data, &e.variable, &s.model, &th, rng)?
                }
            };
            let mut fs = fit_first_stage(e, &sample, &tsri.options, control)?;
            fs.weak = false;
            Ok(fs)
        })
        .collect()
}

/// Nested bootstrap for 2SRI: `n_b` first-stage replicates, each followed by
/// `n_d` parametric stage-2 replicates with the recomputed residuals.
/// Replicate `(k, d)` has index `k·n_d + d`; its stage-2 draws come from
/// `(seed, k·n_d + d)` and its first stage from `(seed, FIRST_STAGE, k)`.
#[allow(clippy::too_many_arguments)]
pub fn iv_bootstrap(
    data: &Dataset,
    tsri: &TsriSpec,
    original: &TsriFit,
    statistic: &Statistic,
    labels: &[String],
    n_b: usize,
    n_d: usize,
    mode: FirstStageResampling,
    seed: u64,
) -> Result<BootstrapRun> {
    if n_b == 0 || n_d == 0 {
        return Err(Error::invalid("nested bootstrap needs n_b >= 1 and n_d >= 1"));
    }
    let spec2 = tsri.stage2_spec();
    let width = statistic(&original.model)?.len();
    let outer: Vec<Result<(Dataset, Vec<ParamVector>)>> = (0..n_b)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, &[tags::FIRST_STAGE, k as u64]);
            let stages = first_stage_replicate(data, tsri, &original.first_stages, mode, &mut rng)?;
            let dk = with_residuals(data, &stages)?;
            let th = predict_parameters(&original.model, &dk)?;
            Ok((dk, th))
        })
        .collect();
    let outcomes = run(n_b * n_d, |i| {
        let (k, _d) = (i / n_d, i % n_d);
        let (dk, th) = outer[k].as_ref().map_err(|e| Error::invalid(format!("first stage k={k}: {e}")))?;
        let mut rng = stream(seed, &[i as u64]);
        let ystar = redraw(dk, &spec2.response, &original.model, th, &mut rng)?;
        statistic(&refit(&spec2, &ystar, &original.model)?)
    });
    Ok(BootstrapRun { method: Method::Iv, seed, labels: labels_of(width, labels), variance_factor: 1.0, outcomes })
}

/// RDD bootstrap: parametric redraws of the outcome on each side; in fuzzy
/// designs the treatment rows of each side are resampled as pairs and the
/// treatment-probability models refitted.
pub fn rdd_bootstrap(
    data: &Dataset,
    spec: &RddSpec,
    original: &RddFit,
    functionals: &[FunctionalKind],
    b: usize,
    seed: u64,
) -> Result<BootstrapRun> {
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let (l, r) = rdd_window(data, spec)?;
    let (left, right) = (data.take(&l), data.take(&r));
    let th_l = predict_parameters(&original.left, &left)?;
    let th_r = predict_parameters(&original.right, &right)?;
    let resp = &spec.model.response;
    let outcomes = run(b, |i| {
        let mut rng = stream(seed, &[i as u64, tags::NUMERATOR]);
        let ls = redraw(&left, resp, &original.left, &th_l, &mut rng)?;
        let rs = redraw(&right, resp, &original.right, &th_r, &mut rng)?;
        let (lt, rt) = if spec.fuzzy {
            let mut rng = stream(seed, &[i as u64, tags::DENOMINATOR]);
            let mut pairs = |d: &Dataset| {
                let n = d.n_rows();
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                d.take(&rows)
            };
            (pairs(&left), pairs(&right))
        } else {
            (left.clone(), right.clone())
        };
        let f = rdd_fit_split(spec, (&ls, &rs), (&lt, &rt), original.profile.clone())?;
        functionals.iter().map(|k| f.estimate(k).map(|e| e.estimate)).collect()
    });
    Ok(BootstrapRun {
        method: Method::Rdd,
        seed,
        labels: functionals.iter().map(|f| f.label()).collect(),
        variance_factor: 1.0,
        outcomes,
    })
}
