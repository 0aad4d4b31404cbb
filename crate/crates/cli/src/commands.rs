//! Subcommand pipelines. Every analysis command writes `report.json` (plus
//! plots) into the output directory, also when inference is blocked.

use std::path::{Path, PathBuf};

use distreg::bootstrap::{
    convergence_trace, diagnose_boot, iv_bootstrap, mte_statistic, pairs_cluster_bootstrap, parametric_bootstrap,
    rdd_bootstrap, summarize, BootstrapRun,
};
use distreg::diagnostics::{cluster_heterogeneity_check, qq_data, quantile_residuals, residual_summary};
use distreg::effects::{
    average_marginal_effects, conditional_density_curves, density_grid, model_profile, mte, panel_fit, quantile_sorted,
    rdd_fit, tsri_fit, PanelSpec, ProfileValue, RddSpec, TsriSpec,
};
use distreg::rng::{stream, tags};
use distreg::sim::{simulate, DgpConfig};
use distreg::{fit, CovariateProfile, Dataset, Error, ErrorClass, FittedModel, FunctionalKind, ModelSpec};

use crate::config::{AnalysisConfig, BootMethod, BootstrapConfig, LoadedConfig, PovertyLine};
use crate::error::{CliError, CliResult};
use crate::ingest::{apply_filters, drop_missing, read_csv, sha256_hex, to_csv};
use crate::report::*;
use crate::svg::{box_histogram, line_plot, qq_plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Diagnose,
    Effects,
    Bootstrap,
    Iv,
    Rdd,
    Panel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Diagnose => "diagnose",
            Command::Effects => "effects",
            Command::Bootstrap => "bootstrap",
            Command::Iv => "iv",
            Command::Rdd => "rdd",
            Command::Panel => "panel",
        }
    }
}

/// Where a run writes and which seed it uses.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

struct Ctx<'a> {
    cfg: &'a AnalysisConfig,
    seed: u64,
    out: PathBuf,
    data: Dataset,
    report: Report,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(self.out.join(name), bytes)?;
        if !self.report.artifacts.iter().any(|a| a == name) {
            self.report.artifacts.push(name.to_string());
        }
        Ok(())
    }

    fn finish(mut self) -> CliResult<Report> {
        self.report.artifacts.sort();
        let mut json = serde_json::to_string_pretty(&self.report).map_err(|e| CliError::data(format!("report: {e}")))?;
        json.push('\n');
        std::fs::write(self.out.join("report.json"), json)?;
        Ok(self.report)
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Columns a command needs complete.
fn needed_columns(cfg: &AnalysisConfig, cmd: Command) -> CliResult<Vec<String>> {
    let mut v = cfg.model_spec()?.variables();
    let mut add = |s: &str| {
        if !v.iter().any(|x| x == s) {
            v.push(s.to_string());
        }
    };
    if let Some(c) = &cfg.diagnostics.cluster {
        if cmd == Command::Diagnose || cmd == Command::Fit {
            add(c);
        }
    }
    if let Some(e) = &cfg.effects {
        if !matches!(cmd, Command::Fit | Command::Diagnose | Command::Rdd) {
            add(&e.treatment);
        }
    }
    if let (Some(b), true) = (&cfg.bootstrap, matches!(cmd, Command::Bootstrap | Command::Panel)) {
        if let Some(c) = &b.cluster {
            add(c);
        }
    }
    if let (Some(iv), Command::Iv) = (&cfg.iv, cmd) {
        for e in &iv.endogenous {
            add(&e.variable);
            for x in distreg::Formula::parse("mu", &e.formula)?.variables() {
                add(&x);
            }
        }
    }
    if let (Some(r), Command::Rdd) = (&cfg.rdd, cmd) {
        add(&r.forcing);
        if let Some(t) = &r.treatment {
            add(t);
        }
    }
    if let (Some(p), Command::Panel) = (&cfg.panel, cmd) {
        add(&p.unit);
    }
    Ok(v)
}

fn prepare<'a>(loaded: &'a LoadedConfig, cmd: Command, opts: &RunOptions) -> CliResult<Ctx<'a>> {
    let cfg = &loaded.config;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let out = opts.output.clone().unwrap_or_else(|| loaded.output_dir());
    std::fs::create_dir_all(&out).map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
    let (raw, mut ingest) = read_csv(&loaded.data_path(), &cfg.data.schema)?;
    // the report records the path as configured, not as resolved
    ingest.path = cfg.data.path.display().to_string();
    let filtered = apply_filters(&raw, &cfg.filters()?, &mut ingest)?;
    let data = drop_missing(&filtered, &needed_columns(cfg, cmd)?, &mut ingest)?;
    if data.n_rows() == 0 {
        return Err(CliError::data("no rows left after filters and missing-value removal"));
    }
    let provenance = Provenance {
        tool: "distreg".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        config_sha256: sha256_hex(loaded.text.as_bytes()),
        config: loaded.text.clone(),
        seed,
        data: ingest,
    };
    Ok(Ctx { cfg, seed, out, data, report: Report::new(provenance) })
}

pub fn run(loaded: &LoadedConfig, cmd: Command, opts: &RunOptions) -> CliResult<Report> {
    let mut ctx = prepare(loaded, cmd, opts)?;
    let outcome = match cmd {
        Command::Fit => cmd_fit(&mut ctx, false),
        Command::Diagnose => cmd_fit(&mut ctx, true),
        Command::Effects => cmd_effects(&mut ctx, false),
        Command::Bootstrap => cmd_effects(&mut ctx, true),
        Command::Iv => cmd_iv(&mut ctx),
        Command::Rdd => cmd_rdd(&mut ctx),
        Command::Panel => cmd_panel(&mut ctx),
    };
    match outcome {
        Ok(()) => ctx.finish(),
        // keep what was computed when only the inference step refused
        Err(e) if e.class == ErrorClass::Inference => {
            ctx.report.warnings.push(e.message.clone());
            ctx.finish()?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn residual_report(ctx: &mut Ctx, model: &FittedModel, cluster: Option<&str>, plots: bool) -> CliResult<()> {
    let mut rng = stream(ctx.seed, &[tags::RESIDUALS]);
    let r = quantile_residuals(model, &ctx.data, &mut rng)?;
    let summary = residual_summary(&r.values)?;
    let heterogeneity = match cluster {
        Some(c) => {
            let (idx, _) = ctx.data.group_index(c)?;
            Some(cluster_heterogeneity_check(&r.values, &idx)?)
        }
        None => None,
    };
    ctx.write("qq.svg", qq_plot("Normal q-q plot of quantile residuals", &qq_data(&r.values)).as_bytes())?;
    if plots {
        ctx.write("residuals.svg", box_histogram("Quantile residuals", "residual", &r.values, None, 40).as_bytes())?;
    }
    ctx.report.residuals = Some(ResidualReport {
        summary,
        clamped: r.clamped,
        heterogeneity,
        heterogeneity_cluster: cluster.map(String::from),
    });
    Ok(())
}

fn cmd_fit(ctx: &mut Ctx, diagnose: bool) -> CliResult<()> {
    let spec = ctx.cfg.model_spec()?;
    let model = fit(&spec, &ctx.data)?;
    ctx.report.fit = Some(FitSummary::of(&model));
    let json = serde_json::to_string_pretty(&model).map_err(|e| CliError::data(format!("model: {e}")))?;
    ctx.write("model.json", json.as_bytes())?;
    let cluster = ctx.cfg.diagnostics.cluster.clone();
    residual_report(ctx, &model, cluster.as_deref(), diagnose)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

/// Functionals with the bare `vulnerability` bound to the poverty line.
fn resolve_functionals(
    names: &[String],
    line: PovertyLine,
    control_outcomes: impl FnOnce() -> Vec<f64>,
    all_outcomes: &[f64],
) -> CliResult<(Vec<FunctionalKind>, Option<f64>)> {
    let mut z = None;
    if names.iter().any(|n| n.trim() == "vulnerability") {
        z = Some(match line {
            PovertyLine::Value(v) => v,
            PovertyLine::ControlMedianShare { control_median_share } => {
                let m = median(control_outcomes()).ok_or_else(|| CliError::data("no control rows to set the poverty line"))?;
                control_median_share * m
            }
            PovertyLine::SampleMedianShare { sample_median_share } => {
                sample_median_share * median(all_outcomes.to_vec()).ok_or_else(|| CliError::data("empty sample"))?
            }
        });
    }
    let kinds = names
        .iter()
        .map(|n| match (n.trim(), z) {
            ("vulnerability", Some(z)) => Ok(FunctionalKind::Vulnerability(z)),
            (s, _) => FunctionalKind::parse(s).map_err(|e| CliError::config(e.to_string())),
        })
        .collect::<CliResult<_>>()?;
    Ok((kinds, z))
}

fn control_outcomes(data: &Dataset, response: &str, treatment: &str) -> Vec<f64> {
    match (data.numeric(response), data.numeric(treatment)) {
        (Ok(y), Ok(t)) => y.iter().zip(t).filter(|(_, &t)| t == 0.0).map(|(&y, _)| y).collect(),
        _ => vec![],
    }
}

/// MTE at the profile for each functional; a functional that fails gets an
/// error row instead of stopping the table.
fn effect_rows(model: &FittedModel, profile: &CovariateProfile, kinds: &[FunctionalKind], treatment: &str, n: usize) -> CliResult<Vec<EffectRow>> {
    let mut rows = Vec::new();
    for f in kinds {
        match mte(model, profile, f, treatment) {
            Ok(e) => rows.push(EffectRow::point(&e.functional, e.treated, e.control, n)),
            Err(e @ (Error::Arm { .. } | Error::MomentDoesNotExist { .. } | Error::Quadrature(_))) => {
                rows.push(EffectRow::failed(&f.label(), n, e.to_string()))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(rows)
}

fn density_plot(ctx: &mut Ctx, model: &FittedModel, profile: &CovariateProfile, treatment: &str, points: usize) -> CliResult<()> {
    let profiles = vec![
        (format!("{treatment}=0"), profile.with(treatment, ProfileValue::Numeric(0.0))),
        (format!("{treatment}=1"), profile.with(treatment, ProfileValue::Numeric(1.0))),
    ];
    let grid = density_grid(model, &profiles, points, 0.005)?;
    let curves = conditional_density_curves(model, &profiles, &grid)?;
    let series: Vec<Series> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| Series {
            label: c.label.clone(),
            points: c.y.iter().copied().zip(c.density.iter().copied()).collect(),
            dashed: i == 0,
        })
        .collect();
    let svg = line_plot("Predicted conditional densities at the covariate profile", &model.response, "density", &series);
    ctx.write("density.svg", svg.as_bytes())
}

/// Effects block shared by `effects`, `bootstrap`, `iv` and `panel`.
/// Returns the functionals that have a point estimate and the profile.
fn effects_section(ctx: &mut Ctx, model: &FittedModel, data: &Dataset) -> CliResult<Option<(Vec<FunctionalKind>, CovariateProfile)>> {
    let Some(e) = ctx.cfg.effects.clone() else {
        return Ok(None);
    };
    let (kinds, z) = resolve_functionals(&e.functionals, e.poverty_line, || control_outcomes(data, &model.response, &e.treatment), data.numeric(&model.response)?)?;
    let overrides: Vec<(String, ProfileValue)> = e.profile.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let profile = model_profile(model, data, &overrides)?;
    let rows = effect_rows(model, &profile, &kinds, &e.treatment, data.n_rows())?;
    let mut average_effects = Vec::new();
    if e.average {
        for f in &kinds {
            average_effects.push(average_marginal_effects(model, data, f, &e.treatment)?);
        }
    }
    density_plot(ctx, model, &profile, &e.treatment, e.density_points)?;
    let ok: Vec<FunctionalKind> = kinds.iter().zip(&rows).filter(|(_, r)| r.error.is_none()).map(|(k, _)| *k).collect();
    ctx.report.effects = Some(EffectsReport { treatment: e.treatment.clone(), poverty_line: z, profile: profile.clone(), table: rows, average_effects });
    Ok(Some((ok, profile)))
}

/// Summaries, trace and boxplot/histogram per statistic. Rows are matched by
/// functional label.
fn summarize_run(ctx: &mut Ctx, run: &BootstrapRun, b: &BootstrapConfig, points: &[f64], rows: &mut [EffectRow], prefix: &str) -> BootstrapReport {
    let results = run.results();
    let failures = run.failures().len();
    let mut blocked = None;
    let mut diagnostics = Vec::new();
    for (r, &point) in results.iter().zip(points) {
        match summarize(r, point, b.alpha, b.max_failure_rate) {
            Ok(s) => {
                if let Some(row) = rows.iter_mut().find(|row| row.functional == r.statistic) {
                    row.attach(&s);
                }
            }
            Err(e) => {
                blocked.get_or_insert_with(|| e.to_string());
            }
        }
        let trace = convergence_trace(r, b.alpha).ok();
        if let Some(t) = &trace {
            let series = vec![
                Series { label: "lower".into(), points: t.points.iter().map(|p| (p.replicates as f64, p.lower)).collect(), dashed: false },
                Series { label: "upper".into(), points: t.points.iter().map(|p| (p.replicates as f64, p.upper)).collect(), dashed: false },
            ];
            let svg = line_plot(&format!("Percentile bounds by replicate count: {}", r.statistic), "replicates", "bound", &series);
            let _ = ctx.write(&format!("{prefix}trace_{}.svg", slug(&r.statistic)), svg.as_bytes());
        }
        let boxplot = diagnose_boot(r, b.outlier_share).ok();
        if let Some(d) = &boxplot {
            if let Some(w) = &d.warning {
                ctx.report.warnings.push(format!("{}: {w}", r.statistic));
            }
            let inside: Vec<f64> = r.replicates.iter().copied().filter(|v| *v >= d.lower_fence && *v <= d.upper_fence).collect();
            let wlo = inside.iter().copied().fold(d.q1, f64::min);
            let whi = inside.iter().copied().fold(d.q3, f64::max);
            let svg = box_histogram(&format!("Bootstrap replicates: {}", r.statistic), &r.statistic, &r.replicates, Some((wlo, d.q1, d.median, d.q3, whi)), 30);
            let _ = ctx.write(&format!("{prefix}boot_{}.svg", slug(&r.statistic)), svg.as_bytes());
        }
        diagnostics.push(StatisticDiagnostics { statistic: r.statistic.clone(), trace_stable: trace.map(|t| t.stable), boxplot });
    }
    BootstrapReport {
        method: serde_json::to_value(run.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        seed: run.seed,
        requested: run.outcomes.len(),
        failures,
        failure_rate: if run.outcomes.is_empty() { 0.0 } else { failures as f64 / run.outcomes.len() as f64 },
        max_failure_rate: b.max_failure_rate,
        variance_factor: run.variance_factor,
        alpha: b.alpha,
        blocked,
        diagnostics,
    }
}

fn blocked_error(report: &BootstrapReport) -> CliResult<()> {
    match &report.blocked {
        Some(m) => Err(CliError { class: ErrorClass::Inference, message: m.clone() }),
        None => Ok(()),
    }
}

fn labels_of(kinds: &[FunctionalKind]) -> Vec<String> {
    kinds.iter().map(FunctionalKind::label).collect()
}

fn point_estimates(ctx: &Ctx, kinds: &[FunctionalKind]) -> Vec<f64> {
    let rows = &ctx.report.effects.as_ref().expect("effects computed").table;
    kinds
        .iter()
        .map(|k| rows.iter().find(|r| r.functional == k.label()).and_then(|r| r.estimate).unwrap_or(f64::NAN))
        .collect()
}

fn attach_bootstrap(ctx: &mut Ctx, run: &BootstrapRun, b: &BootstrapConfig, kinds: &[FunctionalKind]) -> CliResult<()> {
    let points = point_estimates(ctx, kinds);
    let mut rows = ctx.report.effects.as_ref().unwrap().table.clone();
    let rep = summarize_run(ctx, run, b, &points, &mut rows, "");
    ctx.report.effects.as_mut().unwrap().table = rows;
    let blocked = blocked_error(&rep);
    ctx.report.bootstrap = Some(rep);
    blocked
}

fn need_effects(ctx: &Ctx, what: &str) -> CliResult<()> {
    if ctx.cfg.effects.is_none() {
        return Err(CliError::config(format!("`{what}` needs an [effects] section")));
    }
    Ok(())
}

fn cmd_effects(ctx: &mut Ctx, with_bootstrap: bool) -> CliResult<()> {
    need_effects(ctx, if with_bootstrap { "bootstrap" } else { "effects" })?;
    let spec = ctx.cfg.model_spec()?;
    let model = fit(&spec, &ctx.data)?;
    ctx.report.fit = Some(FitSummary::of(&model));
    let data = ctx.data.clone();
    let (kinds, profile) = effects_section(ctx, &model, &data)?.expect("effects configured");
    if with_bootstrap {
        let b = ctx.cfg.bootstrap.clone().ok_or_else(|| CliError::config("`bootstrap` needs a [bootstrap] section"))?;
        let treatment = ctx.cfg.effects.as_ref().unwrap().treatment.clone();
        let stat = mte_statistic(&profile, &kinds, &treatment);
        let labels = labels_of(&kinds);
        let run = match b.method {
            BootMethod::Parametric => parametric_bootstrap(&spec, &model, &data, &stat, &labels, b.replicates, ctx.seed)?,
            BootMethod::PairsCluster => {
                let c = b.cluster.as_deref().expect("validated");
                pairs_cluster_bootstrap(&data, c, &spec, &model, &stat, &labels, b.replicates, ctx.seed)?
            }
        };
        attach_bootstrap(ctx, &run, &b, &kinds)?;
    }
    Ok(())
}

fn cmd_iv(ctx: &mut Ctx) -> CliResult<()> {
    let iv = ctx.cfg.iv.clone().ok_or_else(|| CliError::config("`iv` needs an [iv] section"))?;
    let tsri = TsriSpec { second_stage: ctx.cfg.model_spec()?, endogenous: iv.endogenous.clone(), options: iv.options.clone() };
    tsri.validate()?;
    let t = tsri_fit(&ctx.data, &tsri)?;
    ctx.report.warnings.extend(t.warnings.iter().cloned());
    ctx.report.fit = Some(FitSummary::of(&t.model));
    let first_stages = t
        .first_stages
        .iter()
        .map(|s| FirstStageReport {
            variable: s.variable.clone(),
            residual_column: s.residual_column.clone(),
            partial_r_squared: s.partial_r_squared,
            weak: s.weak,
            residual_scale: s.residual_scale,
            fit: FitSummary::of(&s.model),
        })
        .collect();
    let mut ivr = IvReport { first_stages, resampling: None, first_stage_draws: None, second_stage_draws: None };
    let effects = effects_section(ctx, &t.model, &t.data)?;
    if let (Some((kinds, profile)), Some(b)) = (effects, ctx.cfg.bootstrap.clone()) {
        let treatment = ctx.cfg.effects.as_ref().unwrap().treatment.clone();
        let stat = mte_statistic(&profile, &kinds, &treatment);
        let n_b = iv.first_stage_draws;
        let n_d = (b.replicates / n_b).max(1);
        ivr.resampling = serde_json::to_value(iv.first_stage_resampling).ok().and_then(|v| v.as_str().map(String::from));
        ivr.first_stage_draws = Some(n_b);
        ivr.second_stage_draws = Some(n_d);
        ctx.report.iv = Some(ivr);
        let run = iv_bootstrap(&ctx.data, &tsri, &t, &stat, &labels_of(&kinds), n_b, n_d, iv.first_stage_resampling, ctx.seed)?;
        return attach_bootstrap(ctx, &run, &b, &kinds);
    }
    ctx.report.iv = Some(ivr);
    Ok(())
}

fn cmd_panel(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.panel.clone().ok_or_else(|| CliError::config("`panel` needs a [panel] section"))?;
    let spec = PanelSpec {
        model: ctx.cfg.model_spec()?,
        unit: p.unit.clone(),
        mundlak: p.mundlak.clone(),
        random_effect_params: p.random_effect_params.clone(),
        random_effect_lambda: p.random_effect_lambda,
    };
    let pf = panel_fit(&ctx.data, &spec)?;
    ctx.report.fit = Some(FitSummary::of(&pf.model));
    ctx.report.panel = Some(PanelReport { unit: p.unit.clone(), units: pf.data.group_index(&p.unit)?.1, mean_columns: pf.mean_columns.clone() });
    let effects = effects_section(ctx, &pf.model, &pf.data)?;
    if let (Some((kinds, profile)), Some(b)) = (effects, ctx.cfg.bootstrap.clone()) {
        let treatment = ctx.cfg.effects.as_ref().unwrap().treatment.clone();
        let stat = mte_statistic(&profile, &kinds, &treatment);
        let labels = labels_of(&kinds);
        let augmented = ModelSpec {
            family: pf.model.family,
            response: pf.model.response.clone(),
            formulas: pf.model.formulas.clone(),
            links: pf.model.links(),
            control: spec.model.control.clone(),
        };
        let run = match b.method {
            BootMethod::Parametric => parametric_bootstrap(&augmented, &pf.model, &pf.data, &stat, &labels, b.replicates, ctx.seed)?,
            BootMethod::PairsCluster => {
                // whole units are resampled, so their unit means stay valid
                let c = b.cluster.clone().unwrap_or(p.unit.clone());
                pairs_cluster_bootstrap(&pf.data, &c, &augmented, &pf.model, &stat, &labels, b.replicates, ctx.seed)?
            }
        };
        attach_bootstrap(ctx, &run, &b, &kinds)?;
    }
    Ok(())
}

fn cmd_rdd(ctx: &mut Ctx) -> CliResult<()> {
    let r = ctx.cfg.rdd.clone().ok_or_else(|| CliError::config("`rdd` needs an [rdd] section"))?;
    let model = ctx.cfg.model_spec()?;
    let names = ctx.cfg.functionals();
    let line = ctx.cfg.effects.as_ref().map(|e| e.poverty_line).unwrap_or_default();
    let response = model.response.clone();
    // control rows: untreated in fuzzy designs, below the cutoff otherwise
    let controls = || -> Vec<f64> {
        let y = ctx.data.numeric(&response).unwrap_or(&[]);
        let x = ctx.data.numeric(&r.forcing).unwrap_or(&[]);
        match r.treatment.as_deref().filter(|_| r.fuzzy).and_then(|t| ctx.data.numeric(t).ok()) {
            Some(t) => y.iter().zip(t).filter(|(_, &t)| t == 0.0).map(|(&y, _)| y).collect(),
            None => y.iter().zip(x).filter(|(_, &x)| x < r.cutoff).map(|(&y, _)| y).collect(),
        }
    };
    let (kinds, _) = resolve_functionals(&names, line, controls, ctx.data.numeric(&response)?)?;
    let bandwidths: Vec<Option<f64>> = if r.bandwidths.is_empty() { vec![None] } else { r.bandwidths.iter().map(|&h| Some(h)).collect() };
    let mut sections = Vec::new();
    let mut first_error: Option<CliError> = None;
    let mut blocked: Option<CliError> = None;
    for (i, h) in bandwidths.iter().enumerate() {
        let spec = RddSpec {
            forcing: r.forcing.clone(),
            cutoff: r.cutoff,
            bandwidth: *h,
            model: model.clone(),
            fuzzy: r.fuzzy,
            treatment: r.treatment.clone(),
            treatment_formula: r.treatment_formula.clone(),
            epsilon: r.epsilon,
        };
        let mut sec = RddBandwidthReport { bandwidth: *h, n_left: None, n_right: None, fuzzy: r.fuzzy, left: None, right: None, rows: vec![], bootstrap: None, error: None };
        let fitted = spec.validate().and_then(|_| rdd_fit(&ctx.data, &spec));
        let rf = match fitted {
            Ok(f) => f,
            Err(e) => {
                sec.error = Some(e.to_string());
                first_error.get_or_insert(e.into());
                sections.push(sec);
                continue;
            }
        };
        sec.n_left = Some(rf.n_left);
        sec.n_right = Some(rf.n_right);
        sec.left = Some(FitSummary::of(&rf.left));
        sec.right = Some(FitSummary::of(&rf.right));
        let n = rf.n_left + rf.n_right;
        let mut ok = Vec::new();
        for f in &kinds {
            match rf.estimate(f) {
                Ok(est) => {
                    let mut row = EffectRow::point(&est.functional, est.right_value, est.left_value, n);
                    row.estimate = Some(est.estimate);
                    sec.rows.push(RddRow { estimate: Some(est), row });
                    ok.push(*f);
                }
                Err(e @ distreg::Error::NotIdentified(_)) => {
                    // the treatment jump is shared by every functional
                    sec.rows.clear();
                    ok.clear();
                    sec.error = Some(e.to_string());
                    first_error.get_or_insert(e.into());
                    break;
                }
                Err(e) => {
                    if e.class() != ErrorClass::Estimation {
                        return Err(e.into());
                    }
                    sec.rows.push(RddRow { estimate: None, row: EffectRow::failed(&f.label(), n, e.to_string()) });
                }
            }
        }
        if let (Some(b), false) = (&ctx.cfg.bootstrap, ok.is_empty()) {
            let run = rdd_bootstrap(&ctx.data, &spec, &rf, &ok, b.replicates, ctx.seed)?;
            let points: Vec<f64> = ok
                .iter()
                .map(|k| sec.rows.iter().find(|x| x.row.functional == k.label()).and_then(|x| x.row.estimate).unwrap_or(f64::NAN))
                .collect();
            let mut rows: Vec<EffectRow> = sec.rows.iter().map(|x| x.row.clone()).collect();
            let rep = summarize_run(ctx, &run, b, &points, &mut rows, &format!("bw{i}_"));
            for (x, row) in sec.rows.iter_mut().zip(rows) {
                x.row = row;
            }
            if let Err(e) = blocked_error(&rep) {
                blocked.get_or_insert(e);
            }
            sec.bootstrap = Some(rep);
        }
        sections.push(sec);
    }
    let all_failed = sections.iter().all(|s| s.error.is_some());
    ctx.report.rdd = Some(sections);
    if all_failed {
        return Err(first_error.expect("at least one bandwidth"));
    }
    match blocked {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// `simulate`: CSV plus a `<stem>.truth.json` sidecar with the true values.
pub fn simulate_to(dgp_path: &Path, n: usize, seed: u64, out: &Path) -> CliResult<(PathBuf, PathBuf)> {
    let text = std::fs::read_to_string(dgp_path).map_err(|e| CliError::config(format!("cannot read {}: {e}", dgp_path.display())))?;
    let dgp: DgpConfig = toml::from_str(&text).map_err(|e| CliError::config(format!("DGP config: {e}")))?;
    let (data, truth) = simulate(&dgp, n, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, to_csv(&data)?)?;
    let sidecar = out.with_extension("truth.json");
    let mut json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::data(format!("truth: {e}")))?;
    json.push('\n');
    std::fs::write(&sidecar, json)?;
    Ok((out.to_path_buf(), sidecar))
}
