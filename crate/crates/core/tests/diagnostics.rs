use distreg::diagnostics::{cluster_heterogeneity_check, filliben, ks_distance_normal, qq_data, quantile_residuals_from};
use distreg::rng::{stream, tags};
use distreg::{fit, Dataset, Family, FormulaSet, ModelSpec};
use rand::seq::SliceRandom;
use rand::Rng;

fn draws(family: Family, theta: &[f64], n: usize, seed: u64) -> (Vec<f64>, Vec<distreg::ParamVector>) {
    let th = family.param_vector(theta).unwrap();
    let mut rng = stream(seed, &[tags::SIMULATION]);
    ((0..n).map(|_| family.sample(&th, &mut rng)).collect(), vec![th; n])
}

#[test]
fn residuals_at_the_true_parameters_pass_ks() {
    let crit = 1.358 / (2000f64).sqrt();
    let cases: [(Family, &[f64]); 5] = [
        (Family::Normal, &[1.0, 2.0]),
        (Family::LogNormal, &[0.5, 0.6]),
        (Family::Gamma, &[3.0, 0.7]),
        (Family::Poisson, &[2.5]),
        (Family::ZeroInflatedPoisson, &[3.0, 0.2]),
    ];
    for (fam, theta) in cases {
        let pass = (0..100)
            .filter(|&rep| {
                let (y, th) = draws(fam, theta, 2000, rep);
                let mut rng = stream(rep, &[tags::RESIDUALS]);
                let r = quantile_residuals_from(fam, &y, &th, &mut rng).unwrap();
                ks_distance_normal(&r.values) < crit
            })
            .count();
        assert!(pass >= 90, "{fam:?}: {pass}/100");
    }
}

#[test]
fn filliben_ignores_row_order() {
    let (y, th) = draws(Family::Gamma, &[2.0, 0.5], 300, 7);
    let mut r = quantile_residuals_from(Family::Gamma, &y, &th, &mut stream(1, &[])).unwrap().values;
    let a = filliben(&r);
    r.shuffle(&mut stream(2, &[]));
    assert_eq!(a, filliben(&r));
    assert!(a > 0.99);
}

#[test]
fn heavy_tails_bend_the_qq_plot_upward() {
    // Student t with 3 df fitted by a normal: the largest sample quantiles
    // sit above the identity line once standardized.
    let mut rng = stream(8, &[]);
    let n = 3000;
    let y: Vec<f64> = (0..n)
        .map(|_| {
            let z = distreg::numeric::norm_quantile(rng.random::<f64>());
            let chi: f64 = (0..3).map(|_| distreg::numeric::norm_quantile(rng.random::<f64>()).powi(2)).sum();
            z / (chi / 3.0).sqrt()
        })
        .collect();
    let d = Dataset::new().with_numeric("y", y.clone()).unwrap();
    let m = fit(&ModelSpec::new(Family::Normal, "y", FormulaSet::parse(Family::Normal, &[]).unwrap()), &d).unwrap();
    let th = distreg::fit::predict_parameters(&m, &d).unwrap();
    let r = quantile_residuals_from(Family::Normal, &y, &th, &mut stream(0, &[])).unwrap().values;
    let qq = qq_data(&r);
    let top = &qq[(n as f64 * 0.995) as usize..];
    assert!(top.iter().all(|(t, s)| s > t), "{:?}", &top[..3]);
    let bottom = &qq[..(n as f64 * 0.005) as usize];
    assert!(bottom.iter().all(|(t, s)| s < t));
}

#[test]
fn heterogeneity_p_values_are_uniform_without_cluster_effects() {
    let reps = 300;
    let mut p: Vec<f64> = (0..reps)
        .map(|rep| {
            let mut rng = stream(rep, &[9]);
            let r: Vec<f64> = (0..400).map(|_| distreg::numeric::norm_quantile(rng.random::<f64>())).collect();
            let c: Vec<usize> = (0..400).map(|i| i % 20).collect();
            cluster_heterogeneity_check(&r, &c).unwrap().p_value
        })
        .collect();
    p.sort_by(f64::total_cmp);
    let n = reps as f64;
    let d = p
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS test
    assert!(d < 1.628 / n.sqrt(), "{d}");
}

#[test]
fn cluster_effects_are_detected() {
    let mut rng = stream(10, &[]);
    let shift: Vec<f64> = (0..20).map(|_| distreg::numeric::norm_quantile(rng.random::<f64>())).collect();
    let c: Vec<usize> = (0..400).map(|i| i % 20).collect();
    let r: Vec<f64> = c.iter().map(|&g| shift[g] + distreg::numeric::norm_quantile(rng.random::<f64>())).collect();
    let h = cluster_heterogeneity_check(&r, &c).unwrap();
    assert!(h.p_value < 1e-6 && h.adj_r_squared > 0.2);
}

#[test]
fn randomized_residuals_repeat_under_the_same_seed() {
    let (y, th) = draws(Family::Poisson, &[1.5], 500, 11);
    let a = quantile_residuals_from(Family::Poisson, &y, &th, &mut stream(5, &[tags::RESIDUALS])).unwrap();
    let b = quantile_residuals_from(Family::Poisson, &y, &th, &mut stream(5, &[tags::RESIDUALS])).unwrap();
    let c = quantile_residuals_from(Family::Poisson, &y, &th, &mut stream(6, &[tags::RESIDUALS])).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, c.values);
}
