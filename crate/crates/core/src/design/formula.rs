//! Formula grammar for one parameter's additive predictor.
//!
//! ```text
//! formula  := term ("+" term)*
//! term     := "1" | var | var (":" var)+ | call
//! call     := "s(" var ("," opt)* ")"          P-spline
//!           | "re(" var ("," opt)* ")"         random effect (ridge)
//!           | "c(" var ("," "ref=" level)? ")" categorical with reference level
//!           | "mundlak(" var "," unit ")"      per-unit mean of var
//! opt      := key "=" value    (s: k, degree, diff, lambda, center; re: lambda)
//! ```
//!
//! Every parameter has exactly one intercept; it is added when omitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Family;

pub const DEFAULT_KNOTS: usize = 20;
pub const DEFAULT_DEGREE: usize = 3;
pub const DEFAULT_DIFF_ORDER: usize = 2;
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermSpec {
    Intercept,
    /// Numeric pass-through, or reference-coded indicators for a categorical column.
    Linear { var: String },
    Categorical { var: String, reference: Option<String> },
    Interaction { vars: Vec<String> },
    Pspline {
        var: String,
        knots: usize,
        degree: usize,
        diff_order: usize,
        lambda: f64,
        center: bool,
    },
    RandomEffect { var: String, lambda: f64 },
    MundlakMean { var: String, unit: String },
}

impl TermSpec {
    pub fn pspline(var: &str) -> Self {
        TermSpec::Pspline {
            var: var.to_string(),
            knots: DEFAULT_KNOTS,
            degree: DEFAULT_DEGREE,
            diff_order: DEFAULT_DIFF_ORDER,
            lambda: DEFAULT_LAMBDA,
            center: true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TermSpec::Intercept => "(Intercept)".into(),
            TermSpec::Linear { var } => var.clone(),
            TermSpec::Categorical { var, .. } => format!("c({var})"),
            TermSpec::Interaction { vars } => vars.join(":"),
            TermSpec::Pspline { var, .. } => format!("s({var})"),
            TermSpec::RandomEffect { var, .. } => format!("re({var})"),
            TermSpec::MundlakMean { var, unit } => format!("mundlak({var},{unit})"),
        }
    }

    /// Data columns the term reads.
    pub fn variables(&self) -> Vec<String> {
        match self {
            TermSpec::Intercept => vec![],
            TermSpec::Linear { var }
            | TermSpec::Categorical { var, .. }
            | TermSpec::Pspline { var, .. }
            | TermSpec::RandomEffect { var, .. } => vec![var.clone()],
            TermSpec::Interaction { vars } => vars.clone(),
            TermSpec::MundlakMean { var, unit } => vec![var.clone(), unit.clone()],
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            TermSpec::Pspline { degree, diff_order, knots, lambda, .. } => {
                if *degree < 1 {
                    return Err("spline degree must be >= 1".into());
                }
                if *diff_order < 1 {
                    return Err("difference order must be >= 1".into());
                }
                if *knots < 1 {
                    return Err("need at least one interior segment".into());
                }
                if *diff_order >= knots + degree {
                    return Err("difference order must be below the basis dimension".into());
                }
                if !(*lambda >= 0.0) {
                    return Err("lambda must be >= 0".into());
                }
            }
            TermSpec::RandomEffect { lambda, .. } if !(*lambda >= 0.0) => {
                return Err("lambda must be >= 0".into());
            }
            TermSpec::Interaction { vars } if vars.len() < 2 => {
                return Err("interaction needs at least two variables".into());
            }
            _ => {}
        }
        Ok(())
    }
}

/// Ordered term list for one distribution parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formula {
    pub param: String,
    pub source: String,
    pub terms: Vec<TermSpec>,
}

impl Formula {
    pub fn intercept_only(param: &str) -> Self {
        Formula { param: param.to_string(), source: "1".into(), terms: vec![TermSpec::Intercept] }
    }

    pub fn parse(param: &str, source: &str) -> Result<Self> {
        let err = |reason: String| Error::Formula { formula: source.to_string(), reason };
        let mut terms = Vec::new();
        let mut intercepts = 0;
        let body = source.trim();
        let body = body.strip_prefix('~').unwrap_or(body);
        for raw in split_top_level(body, '+').map_err(err)? {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let term = parse_term(raw).map_err(err)?;
            term.validate().map_err(err)?;
            if term == TermSpec::Intercept {
                intercepts += 1;
                if intercepts > 1 {
                    return Err(err("more than one intercept".into()));
                }
                continue;
            }
            if terms.contains(&term) {
                return Err(err(format!("duplicate term `{raw}`")));
            }
            terms.push(term);
        }
        terms.insert(0, TermSpec::Intercept);
        Ok(Formula { param: param.to_string(), source: source.to_string(), terms })
    }

    pub fn with_term(mut self, term: TermSpec) -> Self {
        self.source = format!("{} + {}", self.source, term.label());
        self.terms.push(term);
        self
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self.terms.iter().flat_map(|t| t.variables()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// One formula per distribution parameter, in the family's parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaSet {
    pub formulas: Vec<Formula>,
}

impl FormulaSet {
    /// Parses `(parameter symbol, formula)` pairs; parameters not listed get an
    /// intercept-only predictor.
    pub fn parse(family: Family, specs: &[(&str, &str)]) -> Result<Self> {
        for (sym, _) in specs {
            if family.param_index(sym).is_none() {
                return Err(Error::Unknown { what: "distribution parameter", name: sym.to_string() });
            }
        }
        let formulas = family
            .params()
            .iter()
            .map(|d| match specs.iter().find(|(s, _)| *s == d.symbol) {
                Some((_, f)) => Formula::parse(d.symbol, f),
                None => Ok(Formula::intercept_only(d.symbol)),
            })
            .collect::<Result<_>>()?;
        Ok(FormulaSet { formulas })
    }

    /// Intercept-only predictors for every parameter.
    pub fn intercepts(family: Family) -> Self {
        FormulaSet {
            formulas: family.params().iter().map(|d| Formula::intercept_only(d.symbol)).collect(),
        }
    }

    /// The same term list for every parameter.
    pub fn uniform(family: Family, formula: &str) -> Result<Self> {
        let specs: Vec<(&str, &str)> = family.params().iter().map(|d| (d.symbol, formula)).collect();
        Self::parse(family, &specs)
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self.formulas.iter().flat_map(|f| f.variables()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Appends `term` to the predictor of every parameter.
    pub fn with_term_everywhere(mut self, term: &TermSpec) -> Self {
        self.formulas = self.formulas.into_iter().map(|f| f.with_term(term.clone())).collect();
        self
    }
}

fn split_top_level(s: &str, sep: char) -> std::result::Result<Vec<&str>, String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses".into());
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    parts.push(&s[start..]);
    Ok(parts)
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
        && !s.chars().next().unwrap().is_ascii_digit()
}

fn parse_term(raw: &str) -> std::result::Result<TermSpec, String> {
    if raw == "1" {
        return Ok(TermSpec::Intercept);
    }
    if raw == "0" || raw == "-1" {
        return Err("every parameter requires an intercept".into());
    }
    if let Some(open) = raw.find('(') {
        if !raw.ends_with(')') {
            return Err(format!("malformed term `{raw}`"));
        }
        let name = raw[..open].trim();
        let args: Vec<&str> = split_top_level(&raw[open + 1..raw.len() - 1], ',')?
            .into_iter()
            .map(str::trim)
            .collect();
        let var = args.first().copied().unwrap_or("");
        if !is_identifier(var) {
            return Err(format!("`{name}(...)` needs a variable name first"));
        }
        let mut positional = Vec::new();
        let mut named = Vec::new();
        for a in &args[1..] {
            match a.split_once('=') {
                Some((k, v)) => named.push((k.trim(), v.trim())),
                None => positional.push(*a),
            }
        }
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`"));
        let int = |v: &str| v.parse::<usize>().map_err(|_| format!("expected an integer, got `{v}`"));
        return match name {
            "s" => {
                let mut t = TermSpec::pspline(var);
                if let TermSpec::Pspline { knots, degree, diff_order, lambda, center, .. } = &mut t {
                    for (k, v) in named {
                        match k {
                            "k" | "knots" => *knots = int(v)?,
                            "degree" | "d" => *degree = int(v)?,
                            "diff" | "m" | "order" => *diff_order = int(v)?,
                            "lambda" => *lambda = num(v)?,
                            "center" => *center = v == "true" || v == "1",
                            other => return Err(format!("unknown s() option `{other}`")),
                        }
                    }
                }
                if !positional.is_empty() {
                    return Err("s() options must be named".into());
                }
                Ok(t)
            }
            "re" => {
                let mut lambda = DEFAULT_LAMBDA;
                for (k, v) in named {
                    match k {
                        "lambda" => lambda = num(v)?,
                        other => return Err(format!("unknown re() option `{other}`")),
                    }
                }
                Ok(TermSpec::RandomEffect { var: var.to_string(), lambda })
            }
            "c" => {
                let mut reference = None;
                for (k, v) in named {
                    match k {
                        "ref" | "reference" => reference = Some(v.trim_matches('"').to_string()),
                        other => return Err(format!("unknown c() option `{other}`")),
                    }
                }
                Ok(TermSpec::Categorical { var: var.to_string(), reference })
            }
            "mundlak" => {
                let unit = positional
                    .first()
                    .copied()
                    .or_else(|| named.iter().find(|(k, _)| *k == "by" || *k == "unit").map(|(_, v)| *v))
                    .ok_or("mundlak() needs a unit id")?;
                Ok(TermSpec::MundlakMean { var: var.to_string(), unit: unit.to_string() })
            }
            other => Err(format!("unknown function `{other}`")),
        };
    }
    if raw.contains(':') {
        let vars: Vec<String> = raw.split(':').map(|v| v.trim().to_string()).collect();
        if let Some(bad) = vars.iter().find(|v| !is_identifier(v)) {
            return Err(format!("bad variable `{bad}` in interaction"));
        }
        return Ok(TermSpec::Interaction { vars });
    }
    if !is_identifier(raw) {
        return Err(format!("cannot parse term `{raw}`"));
    }
    Ok(TermSpec::Linear { var: raw.to_string() })
}
