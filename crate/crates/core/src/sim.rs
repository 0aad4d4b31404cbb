//! Data-generating processes for simulation studies: covariate generators,
//! true coefficients per parameter, optional clusters, endogeneity and a
//! regression discontinuity.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Factor};
use crate::error::{Error, Result};
use crate::families::{Family, Link, Support};
use crate::numeric::norm_quantile;
use crate::rng::{stream, tags, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    /// Levels drawn with the given probabilities (uniform when empty).
    Categorical { levels: Vec<String>, #[serde(default)] probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateGen {
    pub name: String,
    #[serde(flatten)]
    pub generator: Generator,
}

/// Cluster ids plus a Gaussian random intercept on one parameter's predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGen {
    #[serde(default = "default_cluster_name")]
    pub name: String,
    pub count: usize,
    /// SD of the cluster intercept on the η scale.
    #[serde(default)]
    pub effect_sd: Option<f64>,
    /// Intra-cluster correlation; Normal family with intercept-only σ only.
    #[serde(default)]
    pub icc: Option<f64>,
    #[serde(default = "default_param")]
    pub param: String,
    /// Cluster-level covariates (constant within a cluster).
    #[serde(default)]
    pub cluster_level: Vec<String>,
}

fn default_cluster_name() -> String {
    "cluster".into()
}

fn default_param() -> String {
    "mu".into()
}

/// `variable = strength·instrument + u + v`; `confounding·u` enters the
/// predictor of `param`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndogeneityGen {
    pub variable: String,
    pub instrument: String,
    #[serde(default = "one")]
    pub strength: f64,
    pub confounding: f64,
    #[serde(default = "default_param")]
    pub param: String,
}

fn one() -> f64 {
    1.0
}

/// Forcing variable ~ U(lo, hi); treatment jumps at `cutoff`. Jumps are added
/// to η of the named parameters for treated rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddGen {
    pub forcing: String,
    pub cutoff: f64,
    #[serde(default = "neg_one")]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
    #[serde(default = "default_treatment")]
    pub treatment: String,
    pub jumps: BTreeMap<String, f64>,
    /// Treatment probabilities left and right of the cutoff (sharp: 0 and 1).
    #[serde(default)]
    pub p_left: Option<f64>,
    #[serde(default)]
    pub p_right: Option<f64>,
}

fn neg_one() -> f64 {
    -1.0
}

fn default_treatment() -> String {
    "T".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub family: String,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default)]
    pub covariates: Vec<CovariateGen>,
    /// Per parameter: column label → true coefficient on the η scale.
    /// Labels: `(Intercept)`, a numeric column, `var[level]`, or `a:b`.
    pub coefficients: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub links: BTreeMap<String, String>,
    #[serde(default)]
    pub clusters: Option<ClusterGen>,
    #[serde(default)]
    pub endogeneity: Option<EndogeneityGen>,
    #[serde(default)]
    pub rdd: Option<RddGen>,
}

fn default_response() -> String {
    "y".into()
}

/// Ground truth written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub family: Family,
    pub links: Vec<Link>,
    pub n: usize,
    pub seed: u64,
    pub coefficients: BTreeMap<String, BTreeMap<String, f64>>,
    pub cluster_effect_sd: Option<f64>,
    pub config: DgpConfig,
}

impl DgpConfig {
    pub fn family(&self) -> Result<Family> {
        Family::from_name(&self.family)
    }

    pub fn links(&self) -> Result<Vec<Link>> {
        let fam = self.family()?;
        for k in self.links.keys() {
            if fam.param_index(k).is_none() {
                return Err(Error::Unknown { what: "distribution parameter", name: k.clone() });
            }
        }
        fam.params()
            .iter()
            .map(|p| self.links.get(p.symbol).map_or(Ok(p.default_link), |l| Link::from_name(l)))
            .collect()
    }

    fn column_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.covariates.iter().map(|c| c.name.clone()).collect();
        if let Some(c) = &self.clusters {
            v.push(c.name.clone());
        }
        if let Some(e) = &self.endogeneity {
            v.push(e.variable.clone());
            v.push(e.instrument.clone());
        }
        if let Some(r) = &self.rdd {
            v.push(r.forcing.clone());
            v.push(r.treatment.clone());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family()?;
        self.links()?;
        let names = self.column_names();
        let mut seen = std::collections::BTreeSet::new();
        for n in names.iter().chain(std::iter::once(&self.response)) {
            if !seen.insert(n.clone()) {
                return Err(Error::invalid(format!("column `{n}` is generated twice")));
            }
        }
        for (p, coefs) in &self.coefficients {
            if fam.param_index(p).is_none() {
                return Err(Error::Unknown { what: "distribution parameter", name: p.clone() });
            }
            for (label, v) in coefs {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("coefficient {p}/{label} is not finite")));
                }
                if label != "(Intercept)" {
                    for part in label.split(':') {
                        let base = part.split('[').next().unwrap_or(part);
                        if !names.iter().any(|n| n == base) {
                            return Err(Error::invalid(format!("coefficient {p}/{label} names an ungenerated column")));
                        }
                    }
                }
            }
        }
        for c in &self.covariates {
            match &c.generator {
                Generator::Uniform { lo, hi } if !(lo < hi) => {
                    return Err(Error::invalid(format!("`{}`: uniform needs lo < hi", c.name)))
                }
                Generator::Normal { sd, .. } if !(*sd >= 0.0) => return Err(Error::invalid(format!("`{}`: sd must be >= 0", c.name))),
                Generator::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                    return Err(Error::invalid(format!("`{}`: p must lie in [0, 1]", c.name)))
                }
                Generator::Categorical { levels, probs } => {
                    if levels.is_empty() || (!probs.is_empty() && probs.len() != levels.len()) {
                        return Err(Error::invalid(format!("`{}`: levels and probs disagree", c.name)));
                    }
                    if probs.iter().any(|p| !(*p >= 0.0)) || (!probs.is_empty() && !(probs.iter().sum::<f64>() > 0.0)) {
                        return Err(Error::invalid(format!("`{}`: invalid probabilities", c.name)));
                    }
                }
                _ => {}
            }
        }
        if let Some(c) = &self.clusters {
            if c.count < 1 {
                return Err(Error::invalid("cluster count must be >= 1"));
            }
            if fam.param_index(&c.param).is_none() {
                return Err(Error::Unknown { what: "distribution parameter", name: c.param.clone() });
            }
            match (c.effect_sd, c.icc) {
                (Some(_), Some(_)) => return Err(Error::invalid("give either effect_sd or icc, not both")),
                (Some(s), None) if !(s >= 0.0) => return Err(Error::invalid("effect_sd must be >= 0")),
                (None, Some(icc)) => {
                    if !(0.0..1.0).contains(&icc) {
                        return Err(Error::invalid("icc must lie in [0, 1)"));
                    }
                    let sig = self.coefficients.get("sigma");
                    if fam != Family::Normal || c.param != "mu" || sig.is_some_and(|m| m.keys().any(|k| k != "(Intercept)")) {
                        return Err(Error::invalid("icc is defined for Normal μ with intercept-only σ; use effect_sd"));
                    }
                }
                _ => {}
            }
            for v in &c.cluster_level {
                if !self.covariates.iter().any(|g| &g.name == v) {
                    return Err(Error::invalid(format!("cluster-level `{v}` is not a generated covariate")));
                }
            }
        }
        if let Some(e) = &self.endogeneity {
            if fam.param_index(&e.param).is_none() {
                return Err(Error::Unknown { what: "distribution parameter", name: e.param.clone() });
            }
        }
        if let Some(r) = &self.rdd {
            if !(r.lo < r.cutoff && r.cutoff < r.hi) {
                return Err(Error::invalid("rdd cutoff must lie strictly inside (lo, hi)"));
            }
            for p in [r.p_left, r.p_right].into_iter().flatten() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid("treatment probabilities must lie in [0, 1]"));
                }
            }
            for k in r.jumps.keys() {
                if fam.param_index(k).is_none() {
                    return Err(Error::Unknown { what: "distribution parameter", name: k.clone() });
                }
            }
        }
        Ok(())
    }

    fn cluster_sd(&self) -> Option<f64> {
        let c = self.clusters.as_ref()?;
        match (c.effect_sd, c.icc) {
            (Some(s), _) => Some(s),
            (None, Some(icc)) => {
                let ls = self.coefficients.get("sigma").and_then(|m| m.get("(Intercept)")).copied().unwrap_or(0.0);
                let links = self.links().ok()?;
                let sigma = links[1].invert(ls);
                Some(sigma * (icc / (1.0 - icc)).sqrt())
            }
            _ => Some(0.0),
        }
    }
}

fn gauss(rng: &mut Stream) -> f64 {
    norm_quantile(rng.random::<f64>().max(f64::MIN_POSITIVE))
}

fn draw(g: &Generator, rng: &mut Stream) -> (Option<f64>, Option<String>) {
    match g {
        Generator::Uniform { lo, hi } => (Some(lo + (hi - lo) * rng.random::<f64>()), None),
        Generator::Normal { mean, sd } => (Some(mean + sd * gauss(rng)), None),
        Generator::Bernoulli { p } => (Some(if rng.random::<f64>() < *p { 1.0 } else { 0.0 }), None),
        Generator::Categorical { levels, probs } => {
            let u: f64 = rng.random();
            let total: f64 = if probs.is_empty() { levels.len() as f64 } else { probs.iter().sum() };
            let mut acc = 0.0;
            for (i, l) in levels.iter().enumerate() {
                acc += if probs.is_empty() { 1.0 } else { probs[i] } / total;
                if u < acc {
                    return (None, Some(l.clone()));
                }
            }
            (None, levels.last().cloned())
        }
    }
}

enum Col {
    Num(Vec<f64>),
    Cat(Vec<String>),
}

fn term_value(cols: &BTreeMap<String, Col>, label: &str, i: usize) -> Result<f64> {
    let mut v = 1.0;
    for part in label.split(':') {
        let (base, level) = match part.find('[') {
            Some(at) => (&part[..at], Some(part[at + 1..].trim_end_matches(']'))),
            None => (part, None),
        };
        v *= match (cols.get(base), level) {
            (Some(Col::Num(x)), None) => x[i],
            (Some(Col::Cat(x)), Some(l)) => (x[i] == l) as u8 as f64,
            (Some(Col::Cat(_)), None) => return Err(Error::invalid(format!("categorical `{base}` needs a level: `{base}[level]`"))),
            (Some(Col::Num(_)), Some(_)) => return Err(Error::invalid(format!("`{base}` is numeric; drop the level"))),
            (None, _) => return Err(Error::MissingVariable(base.to_string())),
        };
    }
    Ok(v)
}

/// Simulates `n` rows. The dataset and truth depend only on (config, n, seed).
pub fn simulate(config: &DgpConfig, n: usize, seed: u64) -> Result<(Dataset, SimTruth)> {
    config.validate()?;
    let family = config.family()?;
    let links = config.links()?;
    let mut rng = stream(seed, &[tags::SIMULATION]);
    let mut cols: BTreeMap<String, Col> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let cluster_level: Vec<String> = config.clusters.as_ref().map(|c| c.cluster_level.clone()).unwrap_or_default();

    let cluster_of: Vec<usize> = match &config.clusters {
        Some(c) => (0..n).map(|i| i * c.count / n.max(1)).collect(),
        None => vec![0; n],
    };
    let n_clusters = config.clusters.as_ref().map_or(1, |c| c.count);

    for c in &config.covariates {
        let per_cluster = cluster_level.contains(&c.name);
        let draws: Vec<(Option<f64>, Option<String>)> = if per_cluster {
            let g: Vec<_> = (0..n_clusters).map(|_| draw(&c.generator, &mut rng)).collect();
            cluster_of.iter().map(|&k| g[k].clone()).collect()
        } else {
            (0..n).map(|_| draw(&c.generator, &mut rng)).collect()
        };
        let col = match c.generator {
            Generator::Categorical { .. } => Col::Cat(draws.into_iter().map(|d| d.1.unwrap()).collect()),
            _ => Col::Num(draws.into_iter().map(|d| d.0.unwrap()).collect()),
        };
        cols.insert(c.name.clone(), col);
        order.push(c.name.clone());
    }

    let k = family.n_params();
    let mut extra = vec![vec![0.0; n]; k];

    let cluster_sd = config.cluster_sd();
    if let Some(c) = &config.clusters {
        let sd = cluster_sd.unwrap_or(0.0);
        let effects: Vec<f64> = (0..c.count).map(|_| sd * gauss(&mut rng)).collect();
        let p = family.param_index(&c.param).unwrap();
        let width = format!("{}", c.count.saturating_sub(1)).len();
        for i in 0..n {
            extra[p][i] += effects[cluster_of[i]];
        }
        cols.insert(c.name.clone(), Col::Cat(cluster_of.iter().map(|g| format!("g{g:0width$}")).collect()));
        order.push(c.name.clone());
    }

    if let Some(e) = &config.endogeneity {
        let p = family.param_index(&e.param).unwrap();
        let mut z = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let zi = gauss(&mut rng);
            let u = gauss(&mut rng);
            let v = gauss(&mut rng);
            z.push(zi);
            x.push(e.strength * zi + u + v);
            extra[p][i] += e.confounding * u;
        }
        cols.insert(e.variable.clone(), Col::Num(x));
        cols.insert(e.instrument.clone(), Col::Num(z));
        order.push(e.variable.clone());
        order.push(e.instrument.clone());
    }

    if let Some(r) = &config.rdd {
        let (pl, pr) = (r.p_left.unwrap_or(0.0), r.p_right.unwrap_or(1.0));
        let mut x = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        for _ in 0..n {
            let xi = r.lo + (r.hi - r.lo) * rng.random::<f64>();
            let p = if xi >= r.cutoff { pr } else { pl };
            let ti = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
            x.push(xi);
            t.push(ti);
        }
        for (param, jump) in &r.jumps {
            let p = family.param_index(param).unwrap();
            for i in 0..n {
                extra[p][i] += jump * t[i];
            }
        }
        cols.insert(r.forcing.clone(), Col::Num(x));
        cols.insert(r.treatment.clone(), Col::Num(t));
        order.push(r.forcing.clone());
        order.push(r.treatment.clone());
    }

    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut th = Vec::with_capacity(k);
        for (j, d) in family.params().iter().enumerate() {
            let mut eta = extra[j][i];
            if let Some(c) = config.coefficients.get(d.symbol) {
                for (label, b) in c {
                    eta += b * if label == "(Intercept)" { 1.0 } else { term_value(&cols, label, i)? };
                }
            }
            th.push(links[j].invert(eta));
        }
        let theta = family.param_vector(&th).map_err(|e| Error::invalid(format!("row {i}: {e}")))?;
        y.push(family.sample(&theta, &mut rng));
    }

    let mut data = Dataset::new();
    for name in &order {
        let col = match cols.remove(name).unwrap() {
            Col::Num(v) => Column::Numeric(v),
            Col::Cat(v) => Column::Categorical(Factor::from_labels(&v.iter().map(|s| Some(s.as_str())).collect::<Vec<_>>())),
        };
        data.insert(name.clone(), col)?;
    }
    let ycol = if family.support() == Support::Count { Column::Count(y) } else { Column::Numeric(y) };
    data.insert(config.response.clone(), ycol)?;
    let truth = SimTruth {
        family,
        links,
        n,
        seed,
        coefficients: config.coefficients.clone(),
        cluster_effect_sd: config.clusters.as_ref().and(cluster_sd),
        config: config.clone(),
    };
    Ok((data, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lognormal() -> DgpConfig {
        let mut coefficients = BTreeMap::new();
        coefficients.insert("mu".to_string(), BTreeMap::from([("(Intercept)".to_string(), 1.5), ("x".to_string(), 0.0)]));
        coefficients.insert("sigma".to_string(), BTreeMap::from([("(Intercept)".to_string(), (0.8f64).ln())]));
        DgpConfig {
            family: "lognormal".into(),
            response: "y".into(),
            covariates: vec![CovariateGen { name: "x".into(), generator: Generator::Uniform { lo: 0.0, hi: 1.0 } }],
            coefficients,
            links: BTreeMap::new(),
            clusters: None,
            endogeneity: None,
            rdd: None,
        }
    }

    #[test]
    fn lognormal_log_mean_matches_configuration() {
        let (d, truth) = simulate(&lognormal(), 10_000, 3).unwrap();
        let ly: Vec<f64> = d.numeric("y").unwrap().iter().map(|v| v.ln()).collect();
        let m = ly.iter().sum::<f64>() / 1e4;
        assert!((m - 1.5).abs() < 3.0 * 0.8 / 100.0, "{m}");
        assert_eq!(truth.n, 10_000);
    }

    #[test]
    fn deterministic_and_empty() {
        let a = simulate(&lognormal(), 50, 9).unwrap().0;
        let b = simulate(&lognormal(), 50, 9).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a, simulate(&lognormal(), 50, 10).unwrap().0);
        let e = simulate(&lognormal(), 0, 9).unwrap().0;
        assert_eq!(e.n_rows(), 0);
        assert_eq!(e.names(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let mut c = lognormal();
        c.family = "weibull".into();
        assert!(simulate(&c, 10, 1).is_err());
        let mut c = lognormal();
        c.coefficients.get_mut("mu").unwrap().insert("q".into(), 1.0);
        assert!(simulate(&c, 10, 1).is_err());
        let mut c = lognormal();
        c.coefficients.insert("tau".into(), BTreeMap::new());
        assert!(simulate(&c, 10, 1).is_err());
        let mut c = lognormal();
        c.family = "zip".into();
        c.coefficients.get_mut("sigma").unwrap().insert("(Intercept)".into(), f64::NAN);
        assert!(simulate(&c, 10, 1).is_err());
    }

    #[test]
    fn icc_translates_to_cluster_sd() {
        let mut coefficients = BTreeMap::new();
        coefficients.insert("mu".to_string(), BTreeMap::from([("(Intercept)".to_string(), 0.0)]));
        coefficients.insert("sigma".to_string(), BTreeMap::from([("(Intercept)".to_string(), 0.0)]));
        let cfg = DgpConfig {
            family: "normal".into(),
            response: "y".into(),
            covariates: vec![],
            coefficients,
            links: BTreeMap::new(),
            clusters: Some(ClusterGen {
                name: "g".into(),
                count: 400,
                effect_sd: None,
                icc: Some(0.5),
                param: "mu".into(),
                cluster_level: vec![],
            }),
            endogeneity: None,
            rdd: None,
        };
        let (d, truth) = simulate(&cfg, 4000, 2).unwrap();
        assert_eq!(truth.cluster_effect_sd, Some(1.0));
        // between-cluster variance of cluster means ≈ 1 + 1/10
        let (g, ng) = d.group_index("g").unwrap();
        assert_eq!(ng, 400);
        let y = d.numeric("y").unwrap();
        let mut s = vec![0.0; ng];
        for (i, &k) in g.iter().enumerate() {
            s[k] += y[i] / 10.0;
        }
        let m = s.iter().sum::<f64>() / ng as f64;
        let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (ng - 1) as f64;
        assert!((v - 1.1).abs() < 0.25, "{v}");
    }

    #[test]
    fn categorical_and_count_columns() {
        let mut coefficients = BTreeMap::new();
        coefficients.insert("mu".to_string(), BTreeMap::from([("(Intercept)".to_string(), 0.5), ("r[b]".to_string(), 1.0)]));
        let cfg = DgpConfig {
            family: "poisson".into(),
            response: "k".into(),
            covariates: vec![CovariateGen {
                name: "r".into(),
                generator: Generator::Categorical { levels: vec!["a".into(), "b".into()], probs: vec![] },
            }],
            coefficients,
            links: BTreeMap::new(),
            clusters: None,
            endogeneity: None,
            rdd: None,
        };
        let (d, _) = simulate(&cfg, 200, 4).unwrap();
        assert!(matches!(d.column("k").unwrap(), Column::Count(_)));
        assert_eq!(d.factor("r").unwrap().levels(), &["a".to_string(), "b".to_string()]);
    }
}
