//! Scalar summaries of one conditional distribution: moments, quantiles,
//! inequality indices and vulnerability, plus the three-step FGLS baseline.
//!
//! Inequality indices use quadrature over the positive part of the support.
//! The range up to the 1 − 1e-15 quantile is split at fixed quantiles; the
//! remaining tail is mapped to (0, 1] by y = y_hi / u so heavy tails are
//! integrated rather than truncated.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{Family, Kind, ParamVector};
use crate::linalg::wls;
use crate::numeric::{integrate, ln_gamma, norm_cdf};

const QUAD_REL_TOL: f64 = 1e-10;
// Tail breakpoints keep narrow distributions from hiding mass inside a wide
// first or last interval.
const BREAK_PROBS: [f64; 15] = [
    1e-15, 1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999, 1.0 - 1e-6, 1.0 - 1e-9, 1.0 - 1e-12, 1.0 - 1e-15,
];

/// Smallest variance the FGLS baseline will use.
pub const FGLS_VARIANCE_FLOOR: f64 = 1e-6;

/// One conditional distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistSpec {
    pub family: Family,
    pub theta: ParamVector,
}

impl DistSpec {
    pub fn new(family: Family, theta: &[f64]) -> Result<Self> {
        Ok(DistSpec { family, theta: family.param_vector(theta)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum FunctionalKind {
    Mean,
    Variance,
    Quantile(f64),
    Gini,
    Atkinson(f64),
    Theil,
    /// Probability of falling below the poverty line z.
    Vulnerability(f64),
}

impl FunctionalKind {
    /// Parses `mean`, `variance`, `quantile:<p>`, `gini`, `atkinson:<e>`,
    /// `theil`, `vulnerability:<z>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let num = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| Error::invalid(format!("`{name}` needs an argument, e.g. `{name}:{what}`")))?;
            a.parse::<f64>().map_err(|_| Error::invalid(format!("bad argument `{a}` for `{name}`")))
        };
        let k = match name.to_ascii_lowercase().as_str() {
            "mean" => FunctionalKind::Mean,
            "variance" | "var" => FunctionalKind::Variance,
            "quantile" => FunctionalKind::Quantile(num("0.5")?),
            "gini" => FunctionalKind::Gini,
            "atkinson" => FunctionalKind::Atkinson(num("1")?),
            "theil" => FunctionalKind::Theil,
            "vulnerability" => FunctionalKind::Vulnerability(num("100")?),
            _ => return Err(Error::Unknown { what: "functional", name: s.to_string() }),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionalKind::Quantile(p) if !(p > 0.0 && p < 1.0) => Err(Error::invalid("quantile p must lie in (0,1)")),
            FunctionalKind::Atkinson(e) if !(e > 0.0 && e.is_finite()) => Err(Error::invalid("Atkinson e must be > 0")),
            FunctionalKind::Vulnerability(z) if !(z > 0.0 && z.is_finite()) => {
                Err(Error::invalid("poverty line must be > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Stable text label, the inverse of [`FunctionalKind::parse`].
    pub fn label(&self) -> String {
        match self {
            FunctionalKind::Mean => "mean".into(),
            FunctionalKind::Variance => "variance".into(),
            FunctionalKind::Quantile(p) => format!("quantile:{p}"),
            FunctionalKind::Gini => "gini".into(),
            FunctionalKind::Atkinson(e) => format!("atkinson:{e}"),
            FunctionalKind::Theil => "theil".into(),
            FunctionalKind::Vulnerability(z) => format!("vulnerability:{z}"),
        }
    }

    pub fn evaluate(&self, d: &DistSpec) -> Result<f64> {
        match *self {
            FunctionalKind::Mean => dist_mean(d),
            FunctionalKind::Variance => dist_variance(d),
            FunctionalKind::Quantile(p) => d.family.quantile(p, &d.theta),
            FunctionalKind::Gini => gini(d),
            FunctionalKind::Atkinson(e) => atkinson(d, e),
            FunctionalKind::Theil => theil(d),
            FunctionalKind::Vulnerability(z) => vulnerability(d, z),
        }
    }
}

fn no_moment(functional: &str, reason: impl Into<String>) -> Error {
    Error::MomentDoesNotExist { functional: functional.to_string(), reason: reason.into() }
}

/// E[Y^s] for Singh-Maddala exists iff −a < s < aq.
fn sm_moment(s: f64, b: f64, a: f64, q: f64, what: &str) -> Result<f64> {
    if !(s > -a && s < a * q) {
        return Err(no_moment(what, format!("E[Y^{s}] needs -a < {s} < a*q (a = {a}, q = {q})")));
    }
    Ok((s * b.ln() + ln_gamma(1.0 + s / a) + ln_gamma(q - s / a) - ln_gamma(q)).exp())
}

pub fn dist_mean(d: &DistSpec) -> Result<f64> {
    let t = d.theta.as_slice();
    Ok(match d.family {
        Family::Normal | Family::Gamma | Family::Poisson => t[0],
        Family::LogNormal => (t[0] + 0.5 * t[1] * t[1]).exp(),
        Family::SinghMaddala => sm_moment(1.0, t[0], t[1], t[2], "mean")?,
        Family::ZeroAdjustedGamma => (1.0 - t[2]) * t[0],
        Family::ZeroInflatedPoisson => (1.0 - t[1]) * t[0],
    })
}

pub fn dist_variance(d: &DistSpec) -> Result<f64> {
    let t = d.theta.as_slice();
    Ok(match d.family {
        Family::Normal => t[1] * t[1],
        Family::LogNormal => (t[1] * t[1]).exp_m1() * (2.0 * t[0] + t[1] * t[1]).exp(),
        Family::Gamma => (t[0] * t[1]).powi(2),
        Family::SinghMaddala => {
            let m1 = sm_moment(1.0, t[0], t[1], t[2], "variance")?;
            let m2 = sm_moment(2.0, t[0], t[1], t[2], "variance")?;
            (m2 - m1 * m1).max(0.0)
        }
        Family::ZeroAdjustedGamma => {
            let (mu, s, nu) = (t[0], t[1], t[2]);
            let second = (1.0 - nu) * mu * mu * (1.0 + s * s);
            second - ((1.0 - nu) * mu).powi(2)
        }
        Family::Poisson => t[0],
        Family::ZeroInflatedPoisson => {
            let (mu, pi) = (t[0], t[1]);
            (1.0 - pi) * mu * (1.0 + pi * mu)
        }
    })
}

/// Positive continuous component of `d`: the family and parameters whose
/// density is integrated, and the mass it carries.
fn continuous_part(d: &DistSpec, what: &str) -> Result<(Family, ParamVector, f64)> {
    let t = d.theta.as_slice();
    match d.family {
        Family::Normal => {
            if d.family.cdf(0.0, &d.theta) > 1e-10 {
                return Err(Error::invalid(format!(
                    "{what} needs a nonnegative outcome; this normal distribution puts mass below zero"
                )));
            }
            Ok((Family::Normal, d.theta, 1.0))
        }
        Family::LogNormal | Family::Gamma | Family::SinghMaddala => Ok((d.family, d.theta, 1.0)),
        Family::ZeroAdjustedGamma => Ok((Family::Gamma, ParamVector::new_unchecked(&t[..2]), 1.0 - t[2])),
        Family::Poisson | Family::ZeroInflatedPoisson => unreachable!("discrete families are summed"),
    }
}

/// ∫ f(y) dy over (0, ∞) for the continuous component `fam(theta)`, with
/// quantile breakpoints and a mapped upper tail.
fn integrate_positive<F: Fn(f64) -> f64>(fam: Family, theta: &ParamVector, f: F, scale: f64, what: &str) -> Result<f64> {
    let mut breaks = vec![0.0];
    for &p in &BREAK_PROBS {
        let q = fam.quantile_unchecked(p, theta);
        if q > *breaks.last().unwrap() && q.is_finite() {
            breaks.push(q);
        }
    }
    let hi = *breaks.last().unwrap();
    if !(hi > 0.0) {
        return Err(Error::Quadrature(format!("{what}: degenerate support")));
    }
    let body = integrate(&f, &breaks, 1e-12 * scale, QUAD_REL_TOL);
    let tail = integrate(
        |u: f64| {
            let y = hi / u;
            let v = f(y) * hi / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        &[0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0],
        1e-12 * scale,
        QUAD_REL_TOL,
    );
    let value = body.value + tail.value;
    let err = body.error + tail.error;
    if !value.is_finite() || err > 1e-7 * scale.max(value.abs()) {
        return Err(Error::Quadrature(format!("{what}: estimated error {err:.2e} on value {value:.6e}")));
    }
    Ok(value)
}

/// E[g(Y)] for a count family, summing far enough into the tail.
fn sum_discrete<G: Fn(f64) -> f64>(d: &DistSpec, g: G) -> f64 {
    let top = d.family.quantile_unchecked(1.0 - 1e-15, &d.theta) + 20.0;
    let mut acc = 0.0;
    let mut k = 0.0;
    while k <= top {
        let p = d.family.log_pdf(k, &d.theta).exp();
        if p > 0.0 {
            acc += p * g(k);
        }
        k += 1.0;
    }
    acc
}

fn positive_mean(d: &DistSpec, what: &str) -> Result<f64> {
    let mu = dist_mean(d).map_err(|e| match e {
        Error::MomentDoesNotExist { reason, .. } => no_moment(what, reason),
        other => other,
    })?;
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("{what} needs a positive mean, got {mu}")));
    }
    Ok(mu)
}

/// G = 1 − (1/μ) ∫₀^∞ (1 − F(y))² dy.
pub fn gini(d: &DistSpec) -> Result<f64> {
    let mu = positive_mean(d, "gini")?;
    let integral = if d.family.kind() == Kind::Discrete {
        // S is constant on [k, k+1)
        let top = d.family.quantile_unchecked(1.0 - 1e-15, &d.theta) + 20.0;
        let mut acc = 0.0;
        let mut k = 0.0;
        while k <= top {
            let s = d.family.survival(k, &d.theta);
            acc += s * s;
            k += 1.0;
        }
        acc
    } else {
        continuous_part(d, "gini")?;
        let (fam, th) = (d.family, d.theta);
        integrate_positive(
            fam,
            &th,
            |y| {
                let s = fam.survival(y, &th);
                s * s
            },
            mu,
            "gini",
        )?
    };
    Ok((1.0 - integral / mu).clamp(0.0, 1.0))
}

/// A(e) = 1 − (E[Y^{1−e}])^{1/(1−e)} / μ, and 1 − exp(E[ln Y]) / μ at e = 1.
pub fn atkinson(d: &DistSpec, e: f64) -> Result<f64> {
    FunctionalKind::Atkinson(e).validate()?;
    let mu = positive_mean(d, "atkinson")?;
    let s = 1.0 - e;
    let zero_mass = match d.family {
        Family::ZeroAdjustedGamma => d.theta[2],
        Family::Poisson | Family::ZeroInflatedPoisson => d.family.cdf(0.0, &d.theta),
        _ => 0.0,
    };
    if zero_mass > 0.0 && e >= 1.0 {
        // a zero outcome sends the equally distributed equivalent to zero
        return Ok(1.0);
    }
    let t = d.theta.as_slice();
    match d.family {
        Family::SinghMaddala if e != 1.0 => {
            sm_moment(s, t[0], t[1], t[2], "atkinson")?;
        }
        Family::Gamma | Family::ZeroAdjustedGamma if s <= -1.0 / (t[1] * t[1]) => {
            return Err(no_moment("atkinson", format!("E[Y^{s}] diverges for gamma shape {}", 1.0 / (t[1] * t[1]))));
        }
        _ => {}
    }
    let ede = if d.family.kind() == Kind::Discrete {
        if e == 1.0 {
            sum_discrete(d, |k| k.ln()).exp()
        } else {
            sum_discrete(d, |k| k.powf(s)).powf(1.0 / s)
        }
    } else {
        let (fam, th, w) = continuous_part(d, "atkinson")?;
        if e == 1.0 {
            let el = integrate_positive(fam, &th, |y| if y > 0.0 { y.ln() * fam.log_pdf(y, &th).exp() } else { 0.0 }, 1.0, "atkinson")?;
            el.exp()
        } else {
            let m = integrate_positive(
                fam,
                &th,
                |y| if y > 0.0 { (s * y.ln() + fam.log_pdf(y, &th)).exp() } else { 0.0 },
                mu.powf(s),
                "atkinson",
            )?;
            (w * m).powf(1.0 / s)
        }
    };
    Ok((1.0 - ede / mu).clamp(0.0, 1.0))
}

/// T = E[(Y/μ) ln(Y/μ)].
pub fn theil(d: &DistSpec) -> Result<f64> {
    let mu = positive_mean(d, "theil")?;
    let g = |y: f64| if y > 0.0 { (y / mu) * (y / mu).ln() } else { 0.0 };
    let v = if d.family.kind() == Kind::Discrete {
        sum_discrete(d, g)
    } else {
        let (fam, th, w) = continuous_part(d, "theil")?;
        w * integrate_positive(fam, &th, |y| g(y) * fam.log_pdf(y, &th).exp(), 1.0, "theil")?
    };
    Ok(v.max(0.0))
}

/// P(Y ≤ z).
pub fn vulnerability(d: &DistSpec, z: f64) -> Result<f64> {
    FunctionalKind::Vulnerability(z).validate()?;
    Ok(d.family.cdf(z, &d.theta).clamp(0.0, 1.0))
}

/// Vulnerable iff the probability of falling below the line is at least 0.5.
pub fn is_vulnerable(probability: f64) -> bool {
    probability >= 0.5
}

/// Discrete-sample Gini, Σᵢ Σⱼ |yᵢ − yⱼ| / (2 n² ȳ), in O(n log n).
pub fn sample_gini(y: &[f64]) -> Result<f64> {
    let n = y.len();
    if n == 0 {
        return Err(Error::TooFewObservations("empty sample".into()));
    }
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let total: f64 = s.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("sample Gini needs a positive mean"));
    }
    let nf = n as f64;
    // Σ (2i − n − 1) y_(i) with 1-based i
    let num: f64 = s.iter().enumerate().map(|(i, v)| (2.0 * (i as f64 + 1.0) - nf - 1.0) * v).sum();
    Ok(num / (nf * total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FglsResult {
    pub columns: Vec<String>,
    /// Mean equation for ln y (FGLS).
    pub beta: Vec<f64>,
    /// Variance equation σ²(x) (FGLS).
    pub beta_sigma: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub floored_variances: usize,
}

fn fgls_matrix(data: &Dataset, covariates: &[String]) -> Result<(DMatrix<f64>, Vec<String>)> {
    let n = data.n_rows();
    let mut cols = vec![vec![1.0; n]];
    let mut names = vec!["(Intercept)".to_string()];
    for c in covariates {
        cols.push(data.numeric(c)?.to_vec());
        names.push(c.clone());
    }
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    Ok((x, names))
}

/// Three-step FGLS vulnerability: OLS of ln y on x; OLS of the squared
/// residuals on x, re-estimated by WLS with weights 1/σ̂⁴; WLS of ln y with
/// weights 1/σ̂²; then Φ((ln z − x'β̂) / √(x'β̂^σ)) per row.
pub fn fgls_vulnerability(data: &Dataset, response: &str, covariates: &[String], z: f64) -> Result<FglsResult> {
    if !(z > 0.0) {
        return Err(Error::invalid("poverty line must be > 0"));
    }
    let y = data.numeric(response)?;
    if let Some(i) = y.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::invalid(format!("FGLS needs positive outcomes; row {i} has {}", y[i])));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (x, names) = fgls_matrix(data, covariates)?;
    let n = ly.len();
    if n <= 2 * x.ncols() {
        return Err(Error::TooFewObservations(format!("{n} rows for FGLS with {} columns", x.ncols())));
    }
    let ones = vec![1.0; n];
    let b0 = wls(&x, &ly, &ones)?;
    let e2: Vec<f64> = (0..n).map(|i| (ly[i] - (x.row(i) * &b0)[(0, 0)]).powi(2)).collect();
    let g0 = wls(&x, &e2, &ones)?;
    let mut floored = 0;
    let mut floor = |v: f64| {
        if v < FGLS_VARIANCE_FLOOR {
            floored += 1;
            FGLS_VARIANCE_FLOOR
        } else {
            v
        }
    };
    let s0: Vec<f64> = (0..n).map(|i| floor((x.row(i) * &g0)[(0, 0)])).collect();
    let w4: Vec<f64> = s0.iter().map(|s| 1.0 / (s * s)).collect();
    let g = wls(&x, &e2, &w4)?;
    let s2: Vec<f64> = (0..n).map(|i| floor((x.row(i) * &g)[(0, 0)])).collect();
    let w2: Vec<f64> = s2.iter().map(|s| 1.0 / s).collect();
    let b = wls(&x, &ly, &w2)?;
    if floored > 0 {
        log::warn!("FGLS: {floored} fitted variances floored at {FGLS_VARIANCE_FLOOR}");
    }
    let lz = z.ln();
    let probabilities = (0..n).map(|i| norm_cdf((lz - (x.row(i) * &b)[(0, 0)]) / s2[i].sqrt())).collect();
    Ok(FglsResult {
        columns: names,
        beta: b.as_slice().to_vec(),
        beta_sigma: g.as_slice().to_vec(),
        probabilities,
        floored_variances: floored,
    })
}

#[cfg(test)]
mod tests;
