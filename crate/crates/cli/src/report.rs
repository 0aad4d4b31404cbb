//! The versioned JSON report and its pieces.

use distreg::bootstrap::{BootDiagnostics, InferenceSummary};
use distreg::diagnostics::{HeterogeneityCheck, ResidualSummary};
use distreg::effects::{AmeSummary, CovariateProfile, RddEstimate};
use distreg::fit::gaic;
use distreg::{FittedModel, Link};
use serde::{Deserialize, Serialize};

use crate::ingest::IngestReport;

/// Bumped on any breaking change to the report layout.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    /// The config file verbatim, so the run can be repeated from the report.
    pub config: String,
    pub seed: u64,
    pub data: IngestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub term: String,
    pub lambda: Option<f64>,
    pub edf: f64,
    pub coefficients: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub param: String,
    pub link: Link,
    pub formula: String,
    pub edf: f64,
    pub terms: Vec<TermSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub family: String,
    pub response: String,
    pub n: usize,
    pub loglik: f64,
    pub global_deviance: f64,
    pub edf: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub cycles: usize,
    pub params: Vec<ParamSummary>,
    pub warnings: Vec<String>,
}

impl FitSummary {
    pub fn of(m: &FittedModel) -> Self {
        let params = m
            .params
            .iter()
            .zip(&m.formulas.formulas)
            .map(|(p, f)| ParamSummary {
                param: p.param.clone(),
                link: p.link,
                formula: f.source.clone(),
                edf: p.edf(),
                terms: p
                    .blocks
                    .iter()
                    .map(|b| TermSummary {
                        term: b.label.clone(),
                        lambda: b.penalized.then_some(b.lambda),
                        edf: b.edf,
                        coefficients: b
                            .column_labels
                            .iter()
                            .zip(&b.coefficients)
                            .map(|(n, v)| Coefficient { name: n.clone(), value: *v })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        FitSummary {
            family: m.family.name().to_string(),
            response: m.response.clone(),
            n: m.n_obs,
            loglik: m.loglik,
            global_deviance: m.global_deviance,
            edf: m.total_edf(),
            aic: gaic(m, 2.0),
            bic: gaic(m, (m.n_obs as f64).ln()),
            converged: m.converged,
            cycles: m.cycles,
            params,
            warnings: m.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub summary: ResidualSummary,
    pub clamped: usize,
    pub heterogeneity: Option<HeterogeneityCheck>,
    pub heterogeneity_cluster: Option<String>,
}

/// One row of an effect table: the estimate on the original sample, the
/// bootstrap mean and the percentile bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub functional: String,
    pub treated: Option<f64>,
    pub control: Option<f64>,
    pub estimate: Option<f64>,
    pub bootstrap_mean: Option<f64>,
    pub std_error: Option<f64>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub n: usize,
    /// Successful bootstrap replicates.
    pub b: Option<usize>,
    pub error: Option<String>,
}

impl EffectRow {
    pub fn point(functional: &str, treated: f64, control: f64, n: usize) -> Self {
        EffectRow {
            functional: functional.to_string(),
            treated: Some(treated),
            control: Some(control),
            estimate: Some(treated - control),
            bootstrap_mean: None,
            std_error: None,
            t: None,
            p_value: None,
            lower: None,
            upper: None,
            n,
            b: None,
            error: None,
        }
    }

    pub fn failed(functional: &str, n: usize, error: String) -> Self {
        EffectRow {
            functional: functional.to_string(),
            treated: None,
            control: None,
            estimate: None,
            bootstrap_mean: None,
            std_error: None,
            t: None,
            p_value: None,
            lower: None,
            upper: None,
            n,
            b: None,
            error: Some(error),
        }
    }

    pub fn attach(&mut self, s: &InferenceSummary) {
        self.bootstrap_mean = Some(s.replicate_mean);
        self.std_error = Some(s.std_error);
        self.t = s.t;
        self.p_value = s.p_value;
        self.lower = Some(s.lower);
        self.upper = Some(s.upper);
        self.b = Some(s.successes);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsReport {
    pub treatment: String,
    pub poverty_line: Option<f64>,
    pub profile: CovariateProfile,
    pub table: Vec<EffectRow>,
    pub average_effects: Vec<AmeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticDiagnostics {
    pub statistic: String,
    pub trace_stable: Option<bool>,
    pub boxplot: Option<BootDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub method: String,
    pub seed: u64,
    pub requested: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub max_failure_rate: f64,
    pub variance_factor: f64,
    pub alpha: f64,
    pub blocked: Option<String>,
    pub diagnostics: Vec<StatisticDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageReport {
    pub variable: String,
    pub residual_column: String,
    pub partial_r_squared: f64,
    pub weak: bool,
    pub residual_scale: f64,
    pub fit: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvReport {
    pub first_stages: Vec<FirstStageReport>,
    pub resampling: Option<String>,
    pub first_stage_draws: Option<usize>,
    pub second_stage_draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddRow {
    pub estimate: Option<RddEstimate>,
    pub row: EffectRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddBandwidthReport {
    pub bandwidth: Option<f64>,
    pub n_left: Option<usize>,
    pub n_right: Option<usize>,
    pub fuzzy: bool,
    pub left: Option<FitSummary>,
    pub right: Option<FitSummary>,
    pub rows: Vec<RddRow>,
    pub bootstrap: Option<BootstrapReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub unit: String,
    pub units: usize,
    pub mean_columns: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub report_version: u32,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effects: Option<EffectsReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap: Option<BootstrapReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iv: Option<IvReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rdd: Option<Vec<RddBandwidthReport>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub panel: Option<PanelReport>,
    pub warnings: Vec<String>,
    /// Files written next to the report.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(provenance: Provenance) -> Self {
        Report {
            report_version: REPORT_VERSION,
            provenance,
            fit: None,
            residuals: None,
            effects: None,
            bootstrap: None,
            iv: None,
            rdd: None,
            panel: None,
            warnings: vec![],
            artifacts: vec![],
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Plain-text effect table.
pub fn format_table(rows: &[EffectRow]) -> String {
    let header = ["Functional", "Estimate", "Boot. mean", "Lower Bound", "Upper Bound", "n", "B"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.functional.clone(),
                cell(r.estimate),
                cell(r.bootstrap_mean),
                cell(r.lower),
                cell(r.upper),
                r.n.to_string(),
                r.b.map_or_else(|| "-".into(), |b| b.to_string()),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row));
        out.push('\n');
    }
    for r in rows.iter().filter(|r| r.error.is_some()) {
        out.push_str(&format!("{}: {}\n", r.functional, r.error.as_deref().unwrap_or_default()));
    }
    out
}
