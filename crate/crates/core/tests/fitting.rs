use distreg::fit::{gaic, predict_parameters, select_smoothing};
use distreg::functionals::{fgls_vulnerability, vulnerability};
use distreg::numeric::{norm_cdf, norm_quantile};
use distreg::rng::stream;
use distreg::{fit, Dataset, DistSpec, Family, FitControl, FormulaSet, ModelSpec};
use rand::Rng;

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    norm_quantile(rng.random::<f64>().max(1e-300))
}

fn tight() -> FitControl {
    FitControl { tolerance: 1e-12, max_cycles: 1000, ..FitControl::default() }
}

#[test]
fn lognormal_location_scale_recovery() {
    // μ = 0.5 + 0.3T, log σ = −0.5 + 0.2T, n = 5000 split evenly
    let n = 5000;
    let mut rng = stream(41, &[]);
    let t: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let y: Vec<f64> = t.iter().map(|&t| (0.5 + 0.3 * t + (-0.5 + 0.2 * t as f64).exp() * gauss(&mut rng)).exp()).collect();
    let d = Dataset::new().with_numeric("T", t).unwrap().with_numeric("y", y).unwrap();
    let fs = FormulaSet::parse(Family::LogNormal, &[("mu", "T"), ("sigma", "T")]).unwrap();
    let m = fit(&ModelSpec::new(Family::LogNormal, "y", fs).with_control(tight()), &d).unwrap();
    let half = n as f64 / 2.0;
    let (s0, s1) = ((-0.5f64).exp(), (-0.3f64).exp());
    let checks = [
        ("mu", "(Intercept)", 0.5, s0 / half.sqrt()),
        ("mu", "T", 0.3, (s0 * s0 / half + s1 * s1 / half).sqrt()),
        ("sigma", "(Intercept)", -0.5, (1.0 / (2.0 * half)).sqrt()),
        ("sigma", "T", 0.2, (2.0 / (2.0 * half)).sqrt()),
    ];
    for (p, c, truth, se) in checks {
        let b = m.coefficient(p, c).unwrap();
        assert!((b - truth).abs() < 3.0 * se, "{p}/{c}: {b} vs {truth} (se {se})");
    }
}

fn smooth_data(n: usize, seed: u64, sine: bool) -> Dataset {
    let mut rng = stream(seed, &[]);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&x| if sine { (2.0 * std::f64::consts::PI * x).sin() * 2.0 } else { 1.0 + 2.0 * x } + 0.5 * gauss(&mut rng))
        .collect();
    Dataset::new().with_numeric("x", x).unwrap().with_numeric("y", y).unwrap()
}

const GRID: [f64; 6] = [0.01, 0.1, 1.0, 10.0, 100.0, 1e4];

#[test]
fn smoothing_selection_prefers_smoothest_for_linear_truth() {
    let d = smooth_data(400, 42, false);
    let fs = FormulaSet::parse(Family::Normal, &[("mu", "s(x, k=10)")]).unwrap();
    let l = select_smoothing(&ModelSpec::new(Family::Normal, "y", fs), &d, &GRID).unwrap();
    assert_eq!(l[0][1], 1e4);
}

#[test]
fn smoothing_selection_follows_a_sine() {
    let d = smooth_data(400, 43, true);
    let fs = FormulaSet::parse(Family::Normal, &[("mu", "s(x, k=10)")]).unwrap();
    let spec = ModelSpec::new(Family::Normal, "y", fs);
    let l = select_smoothing(&spec, &d, &GRID).unwrap();
    assert!(l[0][1] < 1e4);
    let control = FitControl { lambda_mode: distreg::fit::LambdaMode::GaicGrid { grid: GRID.to_vec() }, ..FitControl::default() };
    let smooth = fit(&spec.clone().with_control(control), &d).unwrap();
    let linear = fit(&ModelSpec::new(Family::Normal, "y", FormulaSet::parse(Family::Normal, &[("mu", "x")]).unwrap()), &d).unwrap();
    let truth: Vec<f64> = d.numeric("x").unwrap().iter().map(|&x| (2.0 * std::f64::consts::PI * x).sin() * 2.0).collect();
    let rmse = |m: &distreg::FittedModel| {
        let th = predict_parameters(m, &d).unwrap();
        (th.iter().zip(&truth).map(|(t, f)| (t.get(0) - f).powi(2)).sum::<f64>() / truth.len() as f64).sqrt()
    };
    assert!(rmse(&smooth) < 0.5 * rmse(&linear), "{} vs {}", rmse(&smooth), rmse(&linear));
}

#[test]
fn rescaling_a_covariate_rescales_its_coefficient() {
    let mut rng = stream(44, &[]);
    let n = 500;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
    let y: Vec<f64> = x.iter().map(|&x| (0.2 + 0.4 * x + (0.3 - 0.2 * x).exp() * gauss(&mut rng)).exp()).collect();
    let c = 37.5;
    let d = Dataset::new().with_numeric("x", x.clone()).unwrap().with_numeric("y", y.clone()).unwrap();
    let dc = Dataset::new().with_numeric("x", x.iter().map(|v| v * c).collect()).unwrap().with_numeric("y", y).unwrap();
    for fam in [Family::LogNormal, Family::Gamma] {
        let fs = FormulaSet::parse(fam, &[("mu", "x"), ("sigma", "x")]).unwrap();
        let spec = ModelSpec::new(fam, "y", fs).with_control(tight());
        let a = fit(&spec, &d).unwrap();
        let b = fit(&spec, &dc).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-8 * a.loglik.abs().max(1.0));
        for p in ["mu", "sigma"] {
            let (ba, bb) = (a.coefficient(p, "x").unwrap(), b.coefficient(p, "x").unwrap());
            assert!((ba - bb * c).abs() < 1e-8 * ba.abs().max(1.0), "{fam:?}/{p}");
        }
        let (ta, tb) = (predict_parameters(&a, &d).unwrap(), predict_parameters(&b, &dc).unwrap());
        for (u, v) in ta.iter().zip(&tb) {
            for k in 0..u.len() {
                assert!((u.get(k) - v.get(k)).abs() < 1e-8 * u.get(k).abs().max(1.0));
            }
        }
    }
}

#[test]
fn nested_models_and_gaic_agree_with_likelihood_ratio() {
    let mut rng = stream(45, &[]);
    let n = 400;
    let x: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
    let noise: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
    let y: Vec<f64> = x.iter().map(|&x| 1.0 + 0.3 * x + gauss(&mut rng)).collect();
    let d = Dataset::new()
        .with_numeric("x", x)
        .unwrap()
        .with_numeric("noise", noise)
        .unwrap()
        .with_numeric("y", y)
        .unwrap();
    let small = fit(&ModelSpec::new(Family::Normal, "y", FormulaSet::parse(Family::Normal, &[("mu", "x")]).unwrap()).with_control(tight()), &d).unwrap();
    let big = fit(
        &ModelSpec::new(Family::Normal, "y", FormulaSet::parse(Family::Normal, &[("mu", "x + noise")]).unwrap()).with_control(tight()),
        &d,
    )
    .unwrap();
    let lr = 2.0 * (big.loglik - small.loglik);
    assert!(lr >= -1e-9);
    // GAIC(k) prefers the bigger model exactly when LR > k
    for k in [0.5, 2.0, 3.84, (n as f64).ln()] {
        let prefers_big = gaic(&big, k) < gaic(&small, k);
        assert_eq!(prefers_big, lr > k, "k={k}, lr={lr}");
    }
}

#[test]
fn gamlss_and_fgls_vulnerability_agree() {
    // ln y = 2 + 0.8x + exp(−0.5 + 0.4x)·e, x ~ U(0, 1)
    let n = 5000;
    let mut rng = stream(46, &[]);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x.iter().map(|&x| (2.0 + 0.8 * x + (-0.5 + 0.4 * x).exp() * gauss(&mut rng)).exp()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let d = Dataset::new().with_numeric("x", x.clone()).unwrap().with_numeric("y", y).unwrap().with_numeric("ly", ly).unwrap();
    let z = (2.3f64).exp();
    let fg = fgls_vulnerability(&d, "y", &["x".into()], z).unwrap();
    let fs = FormulaSet::parse(Family::Normal, &[("mu", "x"), ("sigma", "x")]).unwrap();
    let m = fit(&ModelSpec::new(Family::Normal, "ly", fs).with_control(tight()), &d).unwrap();
    let th = predict_parameters(&m, &d).unwrap();
    let diff: f64 = th
        .iter()
        .zip(&fg.probabilities)
        .map(|(t, p)| (norm_cdf((z.ln() - t.get(0)) / t.get(1)) - p).abs())
        .sum::<f64>()
        / n as f64;
    assert!(diff < 0.02, "{diff}");
    // the same probabilities via the LogNormal functional
    let ln = DistSpec::new(Family::LogNormal, &[th[0].get(0), th[0].get(1)]).unwrap();
    assert!((vulnerability(&ln, z).unwrap() - norm_cdf((z.ln() - th[0].get(0)) / th[0].get(1))).abs() < 1e-15);
}
