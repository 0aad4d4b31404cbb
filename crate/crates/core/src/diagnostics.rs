//! Normalized quantile residuals and adequacy checks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{Family, Kind, ParamVector};
use crate::fit::{predict_parameters, FittedModel};
use crate::numeric::norm_quantile;

/// Probabilities are clamped into `[PIT_CLAMP, 1 − PIT_CLAMP]` before Φ⁻¹.
pub const PIT_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileResiduals {
    pub values: Vec<f64>,
    /// Observations whose probability integral transform hit 0 or 1.
    pub clamped: usize,
}

/// Residuals for given per-row parameters. Rows with an atom at `y` (count
/// families, the zero of mixed families) get a uniform draw on
/// (F(y⁻), F(y)] from `rng`; other rows are deterministic.
pub fn quantile_residuals_from<R: Rng + ?Sized>(
    family: Family,
    y: &[f64],
    theta: &[ParamVector],
    rng: &mut R,
) -> Result<QuantileResiduals> {
    if y.len() != theta.len() {
        return Err(Error::invalid("response and parameter rows differ in length"));
    }
    let mut clamped = 0;
    let values = y
        .iter()
        .zip(theta)
        .map(|(&yi, th)| {
            let hi = family.cdf(yi, th);
            let lo = if family.kind() == Kind::Continuous { hi } else { family.cdf_left(yi, th) };
            let (p, upper_tail) = if hi > lo {
                let u: f64 = rng.random();
                (lo + u * (hi - lo), false)
            } else if hi > 0.5 {
                // upper tail through the survival function keeps precision
                (family.survival(yi, th), true)
            } else {
                (hi, false)
            };
            let pc = p.clamp(PIT_CLAMP, 1.0 - PIT_CLAMP);
            if pc != p {
                clamped += 1;
            }
            if upper_tail {
                -norm_quantile(pc)
            } else {
                norm_quantile(pc)
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} quantile residuals clamped at probability 0 or 1");
    }
    Ok(QuantileResiduals { values, clamped })
}

/// Quantile residuals of `model` on `data`.
pub fn quantile_residuals<R: Rng + ?Sized>(model: &FittedModel, data: &Dataset, rng: &mut R) -> Result<QuantileResiduals> {
    let theta = predict_parameters(model, data)?;
    let y = data.numeric(&model.response)?;
    quantile_residuals_from(model.family, y, &theta, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub filliben: f64,
}

/// Blom plotting position for order statistic `i` (1-based) of `n`.
pub fn plotting_position(i: usize, n: usize) -> f64 {
    (i as f64 - 0.375) / (n as f64 + 0.25)
}

/// Mean, variance (n − 1 divisor), moment skewness m₃/m₂^{3/2} and kurtosis
/// m₄/m₂², and the Filliben probability-plot correlation.
pub fn residual_summary(r: &[f64]) -> Result<ResidualSummary> {
    let n = r.len();
    if n < 8 {
        return Err(Error::TooFewObservations(format!("residual summary needs at least 8 values, got {n}")));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("residuals contain non-finite values"));
    }
    let nf = n as f64;
    let mean = r.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in r {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if m2 <= 0.0 {
        return Err(Error::invalid("residuals have zero variance"));
    }
    let variance = m2 / (nf - 1.0);
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    Ok(ResidualSummary {
        n,
        mean,
        variance,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        filliben: filliben(r),
    })
}

/// Correlation between the sorted values and normal quantiles at Blom positions.
pub fn filliben(r: &[f64]) -> f64 {
    let pairs = qq_data(r);
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// (theoretical, sample) quantile pairs for a normal q-q plot.
pub fn qq_data(r: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (norm_quantile(plotting_position(i + 1, n)), v))
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `r`
/// and N(0, 1).
pub fn ks_distance_normal(r: &[f64]) -> f64 {
    let mut s = r.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = crate::numeric::norm_cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityCheck {
    pub clusters: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub p_value: f64,
}

/// Regresses residuals on cluster indicators (one-way ANOVA) and reports the
/// adjusted R² and the overall F-test p-value.
pub fn cluster_heterogeneity_check(r: &[f64], clusters: &[usize]) -> Result<HeterogeneityCheck> {
    if r.len() != clusters.len() {
        return Err(Error::invalid("residuals and cluster ids differ in length"));
    }
    let n = r.len();
    let g = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; g];
    let mut cnt = vec![0usize; g];
    for (&v, &c) in r.iter().zip(clusters) {
        sum[c] += v;
        cnt[c] += 1;
    }
    let used = cnt.iter().filter(|&&c| c > 0).count();
    if used < 2 {
        return Err(Error::invalid("heterogeneity check needs at least two clusters"));
    }
    if n <= used {
        return Err(Error::invalid("one observation per cluster: the cluster regression is saturated"));
    }
    let mean = r.iter().sum::<f64>() / n as f64;
    let sst: f64 = r.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ssw: f64 = r
        .iter()
        .zip(clusters)
        .map(|(v, &c)| {
            let m = sum[c] / cnt[c] as f64;
            (v - m) * (v - m)
        })
        .sum();
    let ssb = (sst - ssw).max(0.0);
    let df1 = (used - 1) as f64;
    let df2 = (n - used) as f64;
    let r2 = if sst > 0.0 { ssb / sst } else { 0.0 };
    let adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df2;
    let (f, p) = if ssw <= 1e-300 * sst.max(1.0) {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ssb / df1) / (ssw / df2);
        let dist = FisherSnedecor::new(df1, df2).map_err(|e| Error::invalid(e.to_string()))?;
        (f, dist.sf(f))
    };
    Ok(HeterogeneityCheck { clusters: used, r_squared: r2, adj_r_squared: adj, f_statistic: f, p_value: p })
}
