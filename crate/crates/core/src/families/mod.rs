//! Response distributions, their parameter spaces, and the score / observed
//! information the fitter consumes.
//!
//! | Family | Parameters (default link) | Support |
//! |---|---|---|
//! | `normal` | μ (identity), σ (log) | ℝ |
//! | `lognormal` | μ (identity), σ (log) | (0, ∞) |
//! | `gamma` | μ mean (log), σ coefficient of variation (log) | (0, ∞) |
//! | `singh-maddala` | μ scale b (log), σ shape a (log), τ shape q (log) | (0, ∞) |
//! | `zero-adjusted-gamma` | μ, σ as gamma; ν = P(Y = 0) (logit) | [0, ∞) |
//! | `poisson` | μ (log) | ℕ |
//! | `zero-inflated-poisson` | μ (log), σ = extra zero mass (logit) | ℕ |
//!
//! Singh-Maddala uses F(y) = 1 − [1 + (y/b)^a]^(−q).

mod link;

pub use link::Link;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    digamma, gamma_p, gamma_q, ln_gamma, norm_cdf, norm_quantile, solve_increasing, trigamma,
};

pub const MAX_PARAMS: usize = 4;

/// Floor applied to the observed information in η-scale.
pub const WEIGHT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Normal,
    #[serde(rename = "lognormal")]
    LogNormal,
    Gamma,
    SinghMaddala,
    ZeroAdjustedGamma,
    Poisson,
    ZeroInflatedPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Real,
    Positive,
    UnitInterval,
}

impl Domain {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Domain::Real => v.is_finite(),
            Domain::Positive => v > 0.0 && v.is_finite(),
            Domain::UnitInterval => v > 0.0 && v < 1.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Domain::Real => "real line",
            Domain::Positive => "(0, inf)",
            Domain::UnitInterval => "(0, 1)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Real,
    PositiveReal,
    NonNegativeWithZeroMass,
    Count,
    UnitInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Continuous,
    Discrete,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamDescriptor {
    pub symbol: &'static str,
    pub domain: Domain,
    pub default_link: Link,
}

const fn param(symbol: &'static str, domain: Domain, default_link: Link) -> ParamDescriptor {
    ParamDescriptor { symbol, domain, default_link }
}

const NORMAL: [ParamDescriptor; 2] = [
    param("mu", Domain::Real, Link::Identity),
    param("sigma", Domain::Positive, Link::Log),
];
const GAMMA: [ParamDescriptor; 2] = [
    param("mu", Domain::Positive, Link::Log),
    param("sigma", Domain::Positive, Link::Log),
];
const SINGH_MADDALA: [ParamDescriptor; 3] = [
    param("mu", Domain::Positive, Link::Log),
    param("sigma", Domain::Positive, Link::Log),
    param("tau", Domain::Positive, Link::Log),
];
const ZAGA: [ParamDescriptor; 3] = [
    param("mu", Domain::Positive, Link::Log),
    param("sigma", Domain::Positive, Link::Log),
    param("nu", Domain::UnitInterval, Link::Logit),
];
const POISSON: [ParamDescriptor; 1] = [param("mu", Domain::Positive, Link::Log)];
const ZIP: [ParamDescriptor; 2] = [
    param("mu", Domain::Positive, Link::Log),
    param("sigma", Domain::UnitInterval, Link::Logit),
];

/// Parameter values of one conditional distribution, validated against the
/// family's parameter domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    values: [f64; MAX_PARAMS],
    len: usize,
}

impl ParamVector {
    pub(crate) fn new_unchecked(values: &[f64]) -> Self {
        let mut v = [0.0; MAX_PARAMS];
        v[..values.len()].copy_from_slice(values);
        ParamVector { values: v, len: values.len() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.as_slice()[k]
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.as_slice()[k]
    }
}

/// Score and clamped observed information in η-scale for every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikDerivs {
    pub u: [f64; MAX_PARAMS],
    pub w: [f64; MAX_PARAMS],
    /// Set when a derivative was non-finite; `u` is then zeroed and `w` floored.
    pub flagged: bool,
}

const ALL: [Family; 7] = [
    Family::Normal,
    Family::LogNormal,
    Family::Gamma,
    Family::SinghMaddala,
    Family::ZeroAdjustedGamma,
    Family::Poisson,
    Family::ZeroInflatedPoisson,
];

impl Family {
    pub fn all() -> &'static [Family] {
        &ALL
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
            Family::SinghMaddala => "singh-maddala",
            Family::ZeroAdjustedGamma => "zero-adjusted-gamma",
            Family::Poisson => "poisson",
            Family::ZeroInflatedPoisson => "zero-inflated-poisson",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase();
        let found = match key.as_str() {
            "burr" | "burr12" | "sm" => Some(Family::SinghMaddala),
            "zaga" => Some(Family::ZeroAdjustedGamma),
            "zip" => Some(Family::ZeroInflatedPoisson),
            "log-normal" | "logno" => Some(Family::LogNormal),
            _ => ALL.iter().copied().find(|f| f.name() == key),
        };
        found.ok_or(Error::Unknown { what: "family", name: name.to_string() })
    }

    pub fn params(self) -> &'static [ParamDescriptor] {
        match self {
            Family::Normal | Family::LogNormal => &NORMAL,
            Family::Gamma => &GAMMA,
            Family::SinghMaddala => &SINGH_MADDALA,
            Family::ZeroAdjustedGamma => &ZAGA,
            Family::Poisson => &POISSON,
            Family::ZeroInflatedPoisson => &ZIP,
        }
    }

    pub fn n_params(self) -> usize {
        self.params().len()
    }

    pub fn default_links(self) -> Vec<Link> {
        self.params().iter().map(|p| p.default_link).collect()
    }

    pub fn param_index(self, symbol: &str) -> Option<usize> {
        self.params().iter().position(|p| p.symbol == symbol)
    }

    pub fn support(self) -> Support {
        match self {
            Family::Normal => Support::Real,
            Family::LogNormal | Family::Gamma | Family::SinghMaddala => Support::PositiveReal,
            Family::ZeroAdjustedGamma => Support::NonNegativeWithZeroMass,
            Family::Poisson | Family::ZeroInflatedPoisson => Support::Count,
        }
    }

    pub fn kind(self) -> Kind {
        match self.support() {
            Support::Count => Kind::Discrete,
            Support::NonNegativeWithZeroMass => Kind::Mixed,
            _ => Kind::Continuous,
        }
    }

    /// Validates parameter values against their domains.
    pub fn param_vector(self, values: &[f64]) -> Result<ParamVector> {
        if values.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "{} expects {} parameters, got {}",
                self.name(),
                self.n_params(),
                values.len()
            )));
        }
        for (d, &v) in self.params().iter().zip(values) {
            if !d.domain.contains(v) {
                return Err(Error::Domain { param: d.symbol.to_string(), value: v, domain: d.domain.label() });
            }
        }
        Ok(ParamVector::new_unchecked(values))
    }

    /// Whether `y` is a value the response can take.
    pub fn in_support(self, y: f64) -> bool {
        match self.support() {
            Support::Real => y.is_finite(),
            Support::PositiveReal => y > 0.0 && y.is_finite(),
            Support::NonNegativeWithZeroMass => y >= 0.0 && y.is_finite(),
            Support::Count => y >= 0.0 && y.is_finite() && y.fract() == 0.0,
            Support::UnitInterval => y > 0.0 && y < 1.0,
        }
    }

    /// Log density (continuous), log mass (discrete), or log of the mixed
    /// density-with-atom value. Returns −∞ outside the support.
    pub fn log_pdf(self, y: f64, theta: &ParamVector) -> f64 {
        let t = theta.as_slice();
        if !self.in_support(y) {
            return f64::NEG_INFINITY;
        }
        match self {
            Family::Normal => {
                let (mu, sigma) = (t[0], t[1]);
                let z = (y - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
            }
            Family::LogNormal => {
                let (mu, sigma) = (t[0], t[1]);
                let ly = y.ln();
                let z = (ly - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI - ly
            }
            Family::Gamma => gamma_log_pdf(y, t[0], t[1]),
            Family::SinghMaddala => {
                let (b, a, q) = (t[0], t[1], t[2]);
                let lt = a * (y / b).ln();
                a.ln() + q.ln() + (a - 1.0) * y.ln() - a * b.ln() - (q + 1.0) * ln1p_exp(lt)
            }
            Family::ZeroAdjustedGamma => {
                let nu = t[2];
                if y == 0.0 {
                    nu.ln()
                } else {
                    (-nu).ln_1p() + gamma_log_pdf(y, t[0], t[1])
                }
            }
            Family::Poisson => poisson_log_pmf(y, t[0]),
            Family::ZeroInflatedPoisson => {
                let (mu, pi) = (t[0], t[1]);
                if y == 0.0 {
                    (pi + (1.0 - pi) * (-mu).exp()).ln()
                } else {
                    (-pi).ln_1p() + poisson_log_pmf(y, mu)
                }
            }
        }
    }

    /// Density / mass / mixed value at `y`. Non-integer `y` for a count family
    /// is a type error; other values outside the support have density zero.
    pub fn pdf(self, y: f64, theta: &ParamVector) -> Result<f64> {
        if self.kind() == Kind::Discrete && y.is_finite() && y.fract() != 0.0 {
            return Err(Error::invalid(format!("{} requires integer outcomes, got {y}", self.name())));
        }
        if y.is_nan() {
            return Err(Error::invalid("outcome is NaN"));
        }
        Ok(self.log_pdf(y, theta).exp())
    }

    /// F(y) = P(Y ≤ y). Mixed families place the zero atom first, F(0) = ν.
    pub fn cdf(self, y: f64, theta: &ParamVector) -> f64 {
        let t = theta.as_slice();
        match self {
            Family::Normal => norm_cdf((y - t[0]) / t[1]),
            Family::LogNormal => {
                if y <= 0.0 {
                    0.0
                } else {
                    norm_cdf((y.ln() - t[0]) / t[1])
                }
            }
            Family::Gamma => gamma_cdf(y, t[0], t[1]),
            Family::SinghMaddala => 1.0 - sm_survival(y, t[0], t[1], t[2]),
            Family::ZeroAdjustedGamma => {
                if y < 0.0 {
                    0.0
                } else {
                    t[2] + (1.0 - t[2]) * gamma_cdf(y, t[0], t[1])
                }
            }
            Family::Poisson => poisson_cdf(y, t[0]),
            Family::ZeroInflatedPoisson => {
                if y < 0.0 {
                    0.0
                } else {
                    t[1] + (1.0 - t[1]) * poisson_cdf(y, t[0])
                }
            }
        }
    }

    /// 1 − F(y) = P(Y > y), computed without cancellation where the family allows it.
    pub fn survival(self, y: f64, theta: &ParamVector) -> f64 {
        let t = theta.as_slice();
        match self {
            Family::Normal => norm_cdf(-(y - t[0]) / t[1]),
            Family::LogNormal if y > 0.0 => norm_cdf(-(y.ln() - t[0]) / t[1]),
            Family::Gamma if y > 0.0 => gamma_q(1.0 / (t[1] * t[1]), y / (t[0] * t[1] * t[1])),
            Family::SinghMaddala => sm_survival(y, t[0], t[1], t[2]),
            Family::ZeroAdjustedGamma if y >= 0.0 => {
                (1.0 - t[2]) * gamma_q(1.0 / (t[1] * t[1]), y / (t[0] * t[1] * t[1]))
            }
            _ => 1.0 - self.cdf(y, theta),
        }
    }

    /// Left limit F(y⁻) = P(Y < y); differs from `cdf` only at atoms.
    pub fn cdf_left(self, y: f64, theta: &ParamVector) -> f64 {
        match self.kind() {
            Kind::Continuous => self.cdf(y, theta),
            Kind::Discrete => {
                if y <= 0.0 {
                    0.0
                } else {
                    self.cdf(y.ceil() - 1.0, theta)
                }
            }
            Kind::Mixed => {
                if y <= 0.0 {
                    0.0
                } else {
                    self.cdf(y, theta)
                }
            }
        }
    }

    /// Quantile function. Continuous families satisfy |F(Q(p)) − p| ≤ 1e-8;
    /// discrete and mixed families return the generalized inverse
    /// min{y : F(y) ≥ p}.
    pub fn quantile(self, p: f64, theta: &ParamVector) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("quantile probability must lie in (0,1), got {p}")));
        }
        Ok(self.quantile_unchecked(p, theta))
    }

    pub(crate) fn quantile_unchecked(self, p: f64, theta: &ParamVector) -> f64 {
        let t = theta.as_slice();
        match self {
            Family::Normal => t[0] + t[1] * norm_quantile(p),
            Family::LogNormal => (t[0] + t[1] * norm_quantile(p)).exp(),
            Family::Gamma => gamma_quantile(p, t[0], t[1]),
            Family::SinghMaddala => {
                let (b, a, q) = (t[0], t[1], t[2]);
                // b · [(1 − p)^(−1/q) − 1]^(1/a)
                let inner = (-(-p).ln_1p() / q).exp_m1();
                b * inner.powf(1.0 / a)
            }
            Family::ZeroAdjustedGamma => {
                let nu = t[2];
                if p <= nu {
                    0.0
                } else {
                    gamma_quantile(((p - nu) / (1.0 - nu)).min(1.0 - 1e-16), t[0], t[1])
                }
            }
            Family::Poisson | Family::ZeroInflatedPoisson => {
                let mut k = 0.0;
                while self.cdf(k, theta) < p {
                    k += 1.0;
                    if k > 1e7 {
                        break;
                    }
                }
                k
            }
        }
    }

    /// One draw by inversion of the quantile function.
    pub fn sample<R: Rng + ?Sized>(self, theta: &ParamVector, rng: &mut R) -> f64 {
        let u = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        self.quantile_unchecked(u, theta)
    }

    /// First and second derivatives of log p with respect to θ_k itself.
    pub fn theta_derivs(self, k: usize, y: f64, theta: &ParamVector) -> (f64, f64) {
        let t = theta.as_slice();
        match self {
            Family::Normal | Family::LogNormal => {
                let obs = if self == Family::LogNormal { y.ln() } else { y };
                let (mu, sigma) = (t[0], t[1]);
                let r = obs - mu;
                let s2 = sigma * sigma;
                match k {
                    0 => (r / s2, -1.0 / s2),
                    _ => (-1.0 / sigma + r * r / (s2 * sigma), 1.0 / s2 - 3.0 * r * r / (s2 * s2)),
                }
            }
            Family::Gamma => gamma_theta_derivs(k, y, t[0], t[1]),
            Family::SinghMaddala => {
                let (b, a, q) = (t[0], t[1], t[2]);
                let l = (y / b).ln();
                let s = logistic(a * l);
                match k {
                    0 => {
                        let d1 = (a / b) * ((q + 1.0) * s - 1.0);
                        let d2 = -(a / (b * b)) * ((q + 1.0) * s - 1.0)
                            - (a * a / (b * b)) * (q + 1.0) * s * (1.0 - s);
                        (d1, d2)
                    }
                    1 => {
                        let d1 = 1.0 / a + l - (q + 1.0) * s * l;
                        let d2 = -1.0 / (a * a) - (q + 1.0) * s * (1.0 - s) * l * l;
                        (d1, d2)
                    }
                    _ => (1.0 / q - ln1p_exp(a * l), -1.0 / (q * q)),
                }
            }
            Family::ZeroAdjustedGamma => {
                let nu = t[2];
                match (k, y == 0.0) {
                    (2, true) => (1.0 / nu, -1.0 / (nu * nu)),
                    (2, false) => (-1.0 / (1.0 - nu), -1.0 / ((1.0 - nu) * (1.0 - nu))),
                    (_, true) => (0.0, 0.0),
                    (_, false) => gamma_theta_derivs(k, y, t[0], t[1]),
                }
            }
            Family::Poisson => (y / t[0] - 1.0, -y / (t[0] * t[0])),
            Family::ZeroInflatedPoisson => {
                let (mu, pi) = (t[0], t[1]);
                if y == 0.0 {
                    let e = (-mu).exp();
                    let p0 = pi + (1.0 - pi) * e;
                    match k {
                        0 => {
                            let a = (1.0 - pi) * e;
                            (-a / p0, a / p0 - a * a / (p0 * p0))
                        }
                        _ => {
                            let d = 1.0 - e;
                            (d / p0, -d * d / (p0 * p0))
                        }
                    }
                } else {
                    match k {
                        0 => (y / mu - 1.0, -y / (mu * mu)),
                        _ => (-1.0 / (1.0 - pi), -1.0 / ((1.0 - pi) * (1.0 - pi))),
                    }
                }
            }
        }
    }

    /// Score u = ∂log p/∂η_k and observed information −∂²log p/∂η_k² for
    /// parameter `k` under `link`, before any clamping.
    pub fn eta_derivs(self, k: usize, y: f64, theta: &ParamVector, link: Link) -> (f64, f64) {
        let (d1, d2) = self.theta_derivs(k, y, theta);
        let th = theta[k];
        let g1 = link.dtheta_deta(th);
        let g2 = link.d2theta_deta2(th);
        (d1 * g1, -(d2 * g1 * g1 + d1 * g2))
    }

    /// Score and observed information for every parameter, chained through
    /// `links`, with the information clamped below at [`WEIGHT_FLOOR`].
    pub fn loglik_derivs(self, y: f64, theta: &ParamVector, links: &[Link]) -> LoglikDerivs {
        let mut out = LoglikDerivs { u: [0.0; MAX_PARAMS], w: [WEIGHT_FLOOR; MAX_PARAMS], flagged: false };
        for (k, &link) in links.iter().enumerate().take(self.n_params()) {
            let (u, w) = self.eta_derivs(k, y, theta, link);
            if u.is_finite() && w.is_finite() {
                out.u[k] = u;
                out.w[k] = w.max(WEIGHT_FLOOR);
            } else {
                out.flagged = true;
            }
        }
        out
    }

    /// Method-of-moments starting values broadcast to every observation.
    pub fn initial_params(self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::TooFewObservations("empty response".into()));
        }
        let (m, sd) = mean_sd(y.iter().copied());
        let theta = match self {
            Family::Normal => vec![m, sd.max(1e-8 * (1.0 + m.abs()))],
            Family::LogNormal => {
                let (lm, lsd) = mean_sd(y.iter().map(|v| v.ln()));
                vec![lm, lsd.max(1e-6)]
            }
            Family::Gamma => vec![m, (sd / m).clamp(1e-3, 1e3)],
            Family::SinghMaddala => {
                let mut logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
                logs.sort_by(f64::total_cmp);
                let median = logs[logs.len() / 2].exp();
                let (_, lsd) = mean_sd(logs.iter().copied());
                // q = 1 makes log Y logistic with scale 1/a
                let a = std::f64::consts::PI / (3f64.sqrt() * lsd.max(1e-3));
                vec![median, a.clamp(0.2, 50.0), 1.0]
            }
            Family::ZeroAdjustedGamma => {
                let zeros = y.iter().filter(|&&v| v == 0.0).count() as f64;
                let nu = (zeros / y.len() as f64).clamp(0.01, 0.99);
                let (pm, psd) = mean_sd(y.iter().copied().filter(|&v| v > 0.0));
                let pm = if pm.is_finite() && pm > 0.0 { pm } else { 1.0 };
                let cv = if psd.is_finite() && psd > 0.0 { psd / pm } else { 1.0 };
                vec![pm, cv.clamp(1e-3, 1e3), nu]
            }
            Family::Poisson => vec![m.max(1e-3)],
            Family::ZeroInflatedPoisson => {
                let zeros = y.iter().filter(|&&v| v == 0.0).count() as f64 / y.len() as f64;
                let base = (-m.max(1e-3)).exp();
                let pi = ((zeros - base) / (1.0 - base)).clamp(0.01, 0.9);
                vec![(m / (1.0 - pi)).max(1e-3), pi]
            }
        };
        self.param_vector(&theta).map(|_| theta)
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn mean_sd(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = it.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// ln(1 + e^x) without overflow.
fn ln1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    Link::Logit.invert(x)
}

fn sm_survival(y: f64, b: f64, a: f64, q: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    (-q * ln1p_exp(a * (y / b).ln())).exp()
}

fn gamma_log_pdf(y: f64, mu: f64, sigma: f64) -> f64 {
    let alpha = 1.0 / (sigma * sigma);
    alpha * alpha.ln() - alpha * mu.ln() + (alpha - 1.0) * y.ln() - alpha * y / mu - ln_gamma(alpha)
}

fn gamma_cdf(y: f64, mu: f64, sigma: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let alpha = 1.0 / (sigma * sigma);
    gamma_p(alpha, y * alpha / mu)
}

fn gamma_quantile(p: f64, mu: f64, sigma: f64) -> f64 {
    let alpha = 1.0 / (sigma * sigma);
    let scale = mu / alpha;
    // solve on log scale; the CDF is increasing in log x
    let f = |lx: f64| {
        let x = lx.exp();
        if p > 0.5 {
            (1.0 - p) - gamma_q(alpha, x)
        } else {
            gamma_p(alpha, x) - p
        }
    };
    let lx = solve_increasing(f, -800.0_f64.max(alpha.ln() - 60.0), alpha.ln().max(0.0) + 2.0, 1e-15);
    lx.exp() * scale
}

fn gamma_theta_derivs(k: usize, y: f64, mu: f64, sigma: f64) -> (f64, f64) {
    let alpha = 1.0 / (sigma * sigma);
    if k == 0 {
        let d1 = -alpha / mu + alpha * y / (mu * mu);
        let d2 = alpha / (mu * mu) - 2.0 * alpha * y / (mu * mu * mu);
        (d1, d2)
    } else {
        let g = alpha.ln() + 1.0 - mu.ln() + y.ln() - y / mu - digamma(alpha);
        let dg = 1.0 / alpha - trigamma(alpha);
        let s3 = sigma * sigma * sigma;
        let da = -2.0 / s3;
        let d2a = 6.0 / (s3 * sigma);
        (g * da, dg * da * da + g * d2a)
    }
}

fn poisson_log_pmf(y: f64, mu: f64) -> f64 {
    y * mu.ln() - mu - ln_gamma(y + 1.0)
}

fn poisson_cdf(y: f64, mu: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    gamma_q(y.floor() + 1.0, mu)
}

#[cfg(test)]
mod tests;
