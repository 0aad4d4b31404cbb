use super::*;
use crate::rng::stream;
use rand::Rng;
use std::f64::consts::SQRT_2;

fn ds(f: Family, t: &[f64]) -> DistSpec {
    DistSpec::new(f, t).unwrap()
}

fn sm_gini_closed(a: f64, q: f64) -> f64 {
    1.0 - (ln_gamma(q) + ln_gamma(2.0 * q - 1.0 / a) - ln_gamma(q - 1.0 / a) - ln_gamma(2.0 * q)).exp()
}

#[test]
fn closed_form_moments() {
    assert!((dist_mean(&ds(Family::LogNormal, &[0.0, 1.0])).unwrap() - 0.5f64.exp()).abs() < 1e-12);
    assert_eq!(dist_variance(&ds(Family::Normal, &[3.0, 2.0])).unwrap(), 4.0);
    assert!(matches!(dist_mean(&ds(Family::SinghMaddala, &[1.0, 2.0, 0.5])), Err(Error::MomentDoesNotExist { .. })));
    assert!(matches!(
        dist_variance(&ds(Family::SinghMaddala, &[1.0, 2.0, 0.9])),
        Err(Error::MomentDoesNotExist { .. })
    ));
    // sample moments of ZAGA and ZIP against the closed forms
    let mut rng = stream(5, &[]);
    for (f, t) in [(Family::ZeroAdjustedGamma, vec![2.0, 0.6, 0.3]), (Family::ZeroInflatedPoisson, vec![3.0, 0.2])] {
        let d = ds(f, &t);
        let x: Vec<f64> = (0..200_000).map(|_| f.sample(&d.theta, &mut rng)).collect();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
        assert!((m - dist_mean(&d).unwrap()).abs() < 0.02, "{f:?} mean");
        assert!((v / dist_variance(&d).unwrap() - 1.0).abs() < 0.03, "{f:?} variance");
    }
}

#[test]
fn gini_closed_forms() {
    for mu in [0.1, 1.0, 37.0] {
        // Gamma with CV 1 is exponential
        assert!((gini(&ds(Family::Gamma, &[mu, 1.0])).unwrap() - 0.5).abs() < 1e-8);
    }
    for s in [0.3, 1.0, 1.8] {
        let want = 2.0 * norm_cdf(s / SQRT_2) - 1.0;
        assert!((gini(&ds(Family::LogNormal, &[0.4, s])).unwrap() - want).abs() < 1e-7, "sigma={s}");
    }
    assert!((gini(&ds(Family::LogNormal, &[0.0, 1.0])).unwrap() - 0.5205).abs() < 1e-4);
    for a in [1.5, 2.5, 4.0] {
        for q in [0.8, 1.0, 2.0, 5.0] {
            if a * q <= 1.0 {
                continue;
            }
            let g = gini(&ds(Family::SinghMaddala, &[2.0, a, q])).unwrap();
            assert!((g - sm_gini_closed(a, q)).abs() < 1e-6, "a={a} q={q}: {g}");
        }
    }
}

#[test]
fn atkinson_closed_forms() {
    let ln = ds(Family::LogNormal, &[0.0, 1.0]);
    assert!((atkinson(&ln, 1.0).unwrap() - (1.0 - (-0.5f64).exp())).abs() < 1e-7);
    assert!((atkinson(&ln, 1.0).unwrap() - 0.3935).abs() < 1e-4);
    assert!((atkinson(&ln, 2.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
    assert!((atkinson(&ln, 0.5).unwrap() - (1.0 - (-0.25f64).exp())).abs() < 1e-6);
    let point = ds(Family::Normal, &[5.0, 1e-6]);
    assert!(atkinson(&point, 1.0).unwrap() < 1e-9);
    assert!(atkinson(&point, 2.0).unwrap() < 1e-9);
    // SM e = 2 needs a > 1
    assert!(atkinson(&ds(Family::SinghMaddala, &[1.0, 0.8, 3.0]), 2.0).is_err());
    assert_eq!(atkinson(&ds(Family::ZeroAdjustedGamma, &[1.0, 0.5, 0.2]), 1.0).unwrap(), 1.0);
    assert_eq!(atkinson(&ds(Family::Poisson, &[4.0]), 2.0).unwrap(), 1.0);
}

#[test]
fn theil_closed_form_and_sign() {
    for s in [0.5, 1.0, 1.5] {
        let t = theil(&ds(Family::LogNormal, &[1.0, s])).unwrap();
        assert!((t - s * s / 2.0).abs() < 1e-6, "sigma={s}: {t}");
    }
    assert!(theil(&ds(Family::Normal, &[5.0, 1e-6])).unwrap() < 1e-9);
    let mut rng = stream(11, &[]);
    for _ in 0..50 {
        let a = 1.2 + 4.0 * rng.random::<f64>();
        let q = 0.5 + 3.0 * rng.random::<f64>();
        let cv = 0.1 + 2.0 * rng.random::<f64>();
        if a * q > 1.05 {
            assert!(theil(&ds(Family::SinghMaddala, &[1.0, a, q])).unwrap() >= 0.0);
        }
        assert!(theil(&ds(Family::Gamma, &[2.0, cv])).unwrap() >= 0.0);
    }
}

#[test]
fn inequality_is_scale_invariant() {
    let fams = [
        (ds(Family::LogNormal, &[0.0, 0.7]), ds(Family::LogNormal, &[3.0, 0.7])),
        (ds(Family::SinghMaddala, &[1.0, 2.5, 1.3]), ds(Family::SinghMaddala, &[250.0, 2.5, 1.3])),
        (ds(Family::Gamma, &[1.0, 0.6]), ds(Family::Gamma, &[40.0, 0.6])),
    ];
    for (a, b) in fams {
        assert!((gini(&a).unwrap() - gini(&b).unwrap()).abs() < 1e-6);
        assert!((theil(&a).unwrap() - theil(&b).unwrap()).abs() < 1e-6);
        for e in [0.5, 1.0, 2.0] {
            assert!((atkinson(&a, e).unwrap() - atkinson(&b, e).unwrap()).abs() < 1e-6);
        }
    }
}

#[test]
fn vulnerability_examples() {
    let d = ds(Family::SinghMaddala, &[3.0, 2.0, 1.5]);
    let med = d.family.quantile(0.5, &d.theta).unwrap();
    let v = vulnerability(&d, med).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
    assert!(is_vulnerable(0.5));
    let ln = ds(Family::LogNormal, &[1.0, 0.5]);
    for z in [0.5, 2.7, 10.0] {
        assert!((vulnerability(&ln, z).unwrap() - norm_cdf((z.ln() - 1.0) / 0.5)).abs() < 1e-15);
    }
    assert!(vulnerability(&ln, 1e-12).unwrap() < 1e-12);
    assert!(vulnerability(&ln, 0.0).is_err());
    let mut last = 0.0;
    for i in 1..100 {
        let v = vulnerability(&d, i as f64 * 0.1).unwrap();
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn sample_gini_converges_to_population_gini() {
    let mut rng = stream(3, &[]);
    for d in [
        ds(Family::SinghMaddala, &[1.0, 3.0, 1.2]),
        ds(Family::ZeroAdjustedGamma, &[2.0, 0.8, 0.25]),
        ds(Family::Poisson, &[3.0]),
        ds(Family::ZeroInflatedPoisson, &[4.0, 0.3]),
    ] {
        let x: Vec<f64> = (0..100_000).map(|_| d.family.sample(&d.theta, &mut rng)).collect();
        let g = gini(&d).unwrap();
        assert!((sample_gini(&x).unwrap() - g).abs() < 0.005, "{:?}", d.family);
    }
    assert_eq!(sample_gini(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
}

#[test]
fn discrete_theil_matches_sample() {
    let d = ds(Family::Poisson, &[5.0]);
    let mut rng = stream(4, &[]);
    let x: Vec<f64> = (0..100_000).map(|_| d.family.sample(&d.theta, &mut rng)).collect();
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let t: f64 = x.iter().map(|&v| if v > 0.0 { v / m * (v / m).ln() } else { 0.0 }).sum::<f64>() / x.len() as f64;
    assert!((theil(&d).unwrap() - t).abs() < 0.005);
}

#[test]
fn normal_with_negative_mass_is_rejected_for_inequality() {
    let d = ds(Family::Normal, &[0.5, 1.0]);
    assert!(gini(&d).is_err());
    assert!(theil(&d).is_err());
}

#[test]
fn functional_labels_round_trip() {
    for s in ["mean", "variance", "quantile:0.25", "gini", "atkinson:2", "theil", "vulnerability:120.5"] {
        assert_eq!(FunctionalKind::parse(s).unwrap().label(), s);
    }
    assert!(FunctionalKind::parse("atkinson:-1").is_err());
    assert!(FunctionalKind::parse("quantile:1").is_err());
    assert!(matches!(FunctionalKind::parse("entropy"), Err(Error::Unknown { .. })));
}

fn fgls_data(n: usize, hetero: bool, seed: u64) -> Dataset {
    let mut rng = stream(seed, &[]);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&x| {
            let sd: f64 = if hetero { (-0.5 + 0.4 * x).exp() } else { 0.6 };
            (2.0 + 0.8 * x + sd * crate::numeric::norm_quantile(rng.random::<f64>())).exp()
        })
        .collect();
    Dataset::new().with_numeric("x", x).unwrap().with_numeric("y", y).unwrap()
}

#[test]
fn fgls_homoskedastic_variance_slope_is_null() {
    let d = fgls_data(4000, false, 21);
    let r = fgls_vulnerability(&d, "y", &["x".into()], 5.0).unwrap();
    // Var(e²) = 2σ⁴ under normality; slope SE for x ~ U(0,1) is √(2σ⁴·12/n)
    let se = (2.0 * 0.6f64.powi(4) * 12.0 / 4000.0).sqrt();
    assert!(r.beta_sigma[1].abs() < 3.0 * se, "{} vs {}", r.beta_sigma[1], se);
    assert!((r.beta[1] - 0.8).abs() < 0.1);
    let low = fgls_vulnerability(&d, "y", &["x".into()], 1e-3).unwrap();
    assert!(low.probabilities.iter().all(|&p| p < 1e-6));
    assert!(fgls_vulnerability(&d, "y", &["x".into()], 0.0).is_err());
}
