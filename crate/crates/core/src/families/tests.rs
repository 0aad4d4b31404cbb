use super::*;
use crate::numeric::integrate;
use crate::rng::stream;
use rand::Rng;

fn pv(f: Family, v: &[f64]) -> ParamVector {
    f.param_vector(v).unwrap()
}

/// Central finite differences of log p along η_k (independent of the analytic
/// derivative code: only `log_pdf` and the link inverse are used).
fn fd_eta(f: Family, k: usize, y: f64, theta: &[f64], link: Link) -> (f64, f64) {
    let eta0 = link.apply(theta[k]).unwrap();
    let lp = |eta: f64| {
        let mut t = theta.to_vec();
        t[k] = link.invert(eta);
        f.log_pdf(y, &ParamVector::new_unchecked(&t))
    };
    let h = 1e-4 * (1.0 + eta0.abs());
    let (fp, f0, fm) = (lp(eta0 + h), lp(eta0), lp(eta0 - h));
    let h2 = 2.0 * h;
    let (fpp, fmm) = (lp(eta0 + h2), lp(eta0 - h2));
    // fourth-order stencils
    let d1 = (-fpp + 8.0 * fp - 8.0 * fm + fmm) / (12.0 * h);
    let d2 = (-fpp + 16.0 * fp - 30.0 * f0 + 16.0 * fm - fmm) / (12.0 * h * h);
    (d1, -d2)
}

fn random_point<R: Rng>(f: Family, rng: &mut R) -> (f64, Vec<f64>) {
    let theta: Vec<f64> = match f {
        Family::Normal => vec![rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0)],
        Family::LogNormal => vec![rng.random_range(-1.0..3.0), rng.random_range(0.2..1.5)],
        Family::Gamma => vec![rng.random_range(0.5..20.0), rng.random_range(0.2..1.5)],
        Family::SinghMaddala => vec![
            rng.random_range(0.5..50.0),
            rng.random_range(0.8..6.0),
            rng.random_range(0.4..4.0),
        ],
        Family::ZeroAdjustedGamma => vec![
            rng.random_range(0.5..20.0),
            rng.random_range(0.2..1.5),
            rng.random_range(0.05..0.9),
        ],
        Family::Poisson => vec![rng.random_range(0.2..30.0)],
        Family::ZeroInflatedPoisson => vec![rng.random_range(0.2..15.0), rng.random_range(0.05..0.8)],
    };
    let p = pv(f, &theta);
    let y = f.sample(&p, rng);
    (y, theta)
}

#[test]
fn derivatives_match_finite_differences_on_random_grid() {
    let mut rng = stream(2024, &[1]);
    for &f in Family::all() {
        for _ in 0..100 {
            let (y, theta) = random_point(f, &mut rng);
            let p = pv(f, &theta);
            for (k, d) in f.params().iter().enumerate() {
                let (u, w) = f.eta_derivs(k, y, &p, d.default_link);
                let (fu, fw) = fd_eta(f, k, y, &theta, d.default_link);
                let scale_u = 1.0 + u.abs().max(fu.abs());
                let scale_w = 1.0 + w.abs().max(fw.abs());
                assert!((u - fu).abs() / scale_u < 1e-5, "{f:?} k={k} y={y} θ={theta:?} u={u} fd={fu}");
                assert!((w - fw).abs() / scale_w < 1e-5, "{f:?} k={k} y={y} θ={theta:?} w={w} fd={fw}");
            }
        }
    }
}

#[test]
fn gaussian_score_and_poisson_score_at_mean() {
    let f = Family::Normal;
    let d = f.loglik_derivs(1.0, &pv(f, &[0.0, 1.0]), &f.default_links());
    assert!((d.u[0] - 1.0).abs() < 1e-15);
    let f = Family::Poisson;
    let d = f.loglik_derivs(4.0, &pv(f, &[4.0]), &f.default_links());
    assert!(d.u[0].abs() < 1e-15);
}

#[test]
fn observed_information_is_floored() {
    // Normal σ-information 2r²/σ² vanishes at y = μ
    let f = Family::Normal;
    let d = f.loglik_derivs(0.0, &pv(f, &[0.0, 1.0]), &f.default_links());
    assert_eq!(d.w[1], WEIGHT_FLOOR);
    assert!(!d.flagged);
}

#[test]
fn non_log_links_chain_correctly() {
    // Normal μ through a log link and Poisson μ through identity
    let mut rng = stream(5, &[0]);
    for _ in 0..20 {
        let theta = [rng.random_range(0.5..5.0), rng.random_range(0.5..2.0)];
        let y = rng.random_range(-2.0..8.0);
        let (u, w) = Family::Normal.eta_derivs(0, y, &pv(Family::Normal, &theta), Link::Log);
        let (fu, fw) = fd_eta(Family::Normal, 0, y, &theta, Link::Log);
        assert!((u - fu).abs() < 1e-6 * (1.0 + u.abs()));
        assert!((w - fw).abs() < 1e-5 * (1.0 + w.abs()));
    }
}

#[test]
fn documented_pdf_and_cdf_values() {
    let n = pv(Family::Normal, &[0.0, 1.0]);
    assert!((Family::Normal.pdf(0.0, &n).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-14);
    assert!((Family::Normal.cdf(0.0, &n) - 0.5).abs() < 1e-15);
    let p = pv(Family::Poisson, &[2.0]);
    assert!((Family::Poisson.pdf(0.0, &p).unwrap() - (-2.0f64).exp()).abs() < 1e-14);
    let ln = pv(Family::LogNormal, &[0.0, 1.0]);
    assert!((Family::LogNormal.cdf(1.0, &ln) - 0.5).abs() < 1e-15);
    let z = pv(Family::ZeroAdjustedGamma, &[2.0, 0.7, 0.3]);
    assert!((Family::ZeroAdjustedGamma.cdf(0.0, &z) - 0.3).abs() < 1e-15);
    assert_eq!(Family::ZeroAdjustedGamma.cdf_left(0.0, &z), 0.0);
}

#[test]
fn singh_maddala_density_matches_cdf_derivative() {
    let f = Family::SinghMaddala;
    for theta in [[10.0, 3.0, 1.2], [2.0, 1.5, 0.7], [150.0, 4.5, 2.5]] {
        let p = pv(f, &theta);
        let median = f.quantile(0.5, &p).unwrap();
        for y in [median, 0.3 * median, 2.5 * median] {
            let h = 1e-5 * y;
            let fd = (f.cdf(y + h, &p) - f.cdf(y - h, &p)) / (2.0 * h);
            let d = f.pdf(y, &p).unwrap();
            assert!((d - fd).abs() < 1e-7 * d.max(1e-3), "θ={theta:?} y={y}: {d} vs {fd}");
        }
    }
}

#[test]
fn count_family_rejects_fractional_outcomes() {
    let p = pv(Family::Poisson, &[2.0]);
    assert!(Family::Poisson.pdf(2.5, &p).is_err());
    assert_eq!(Family::Poisson.pdf(-1.0, &p).unwrap(), 0.0);
    let g = pv(Family::Gamma, &[1.0, 1.0]);
    assert_eq!(Family::Gamma.pdf(-1.0, &g).unwrap(), 0.0);
}

#[test]
fn param_vector_checks_domains() {
    assert!(Family::Normal.param_vector(&[0.0, -1.0]).is_err());
    assert!(Family::ZeroAdjustedGamma.param_vector(&[1.0, 1.0, 1.0]).is_err());
    assert!(Family::SinghMaddala.param_vector(&[1.0, 1.0]).is_err());
}

#[test]
fn quantile_examples_and_errors() {
    let n = pv(Family::Normal, &[0.0, 1.0]);
    assert_eq!(Family::Normal.quantile(0.5, &n).unwrap(), 0.0);
    // bisection on the CDF as the oracle for the 97.5% point
    let q_bis = crate::numeric::solve_increasing(|x| Family::Normal.cdf(x, &n) - 0.975, -10.0, 10.0, 1e-15);
    assert!((Family::Normal.quantile(0.975, &n).unwrap() - q_bis).abs() < 1e-9);
    assert!((q_bis - 1.959_96).abs() < 1e-5);
    let p = pv(Family::Poisson, &[2.0]);
    assert_eq!(Family::Poisson.quantile(0.1353, &p).unwrap(), 0.0);
    assert_eq!(Family::Poisson.quantile(0.1354, &p).unwrap(), 1.0);
    assert!(Family::Normal.quantile(0.0, &n).is_err());
    assert!(Family::Normal.quantile(1.0, &n).is_err());
}

#[test]
fn cdf_quantile_round_trip_for_continuous_families() {
    let mut rng = stream(77, &[0]);
    for &f in Family::all().iter().filter(|f| f.kind() == Kind::Continuous) {
        for _ in 0..10 {
            let (_, theta) = random_point(f, &mut rng);
            let p = pv(f, &theta);
            for i in 1..100 {
                let pr = i as f64 / 100.0;
                let q = f.quantile(pr, &p).unwrap();
                assert!((f.cdf(q, &p) - pr).abs() <= 1e-8, "{f:?} {theta:?} p={pr}");
            }
        }
    }
}

#[test]
fn generalized_inverse_for_discrete_and_mixed() {
    let mut rng = stream(78, &[0]);
    for &f in &[Family::Poisson, Family::ZeroInflatedPoisson, Family::ZeroAdjustedGamma] {
        for _ in 0..10 {
            let (_, theta) = random_point(f, &mut rng);
            let p = pv(f, &theta);
            for i in 1..100 {
                let pr = i as f64 / 100.0;
                let q = f.quantile(pr, &p).unwrap();
                assert!(f.cdf(q, &p) >= pr - 1e-8);
                if f.kind() == Kind::Discrete && q > 0.0 {
                    assert!(f.cdf(q - 1.0, &p) < pr);
                }
            }
        }
    }
}

#[test]
fn densities_normalize() {
    let mut rng = stream(79, &[0]);
    for &f in Family::all() {
        for _ in 0..5 {
            let (_, theta) = random_point(f, &mut rng);
            let p = pv(f, &theta);
            let total = match f.kind() {
                Kind::Discrete => {
                    let hi = f.quantile(1.0 - 1e-13, &p).unwrap() as usize + 5;
                    (0..=hi).map(|k| f.pdf(k as f64, &p).unwrap()).sum::<f64>()
                }
                kind => {
                    let lo = f.quantile(1e-12, &p).unwrap();
                    let hi = f.quantile(1.0 - 1e-12, &p).unwrap();
                    let mut breaks = vec![lo];
                    for pr in [0.01, 0.1, 0.5, 0.9, 0.99] {
                        breaks.push(f.quantile(pr, &p).unwrap());
                    }
                    breaks.push(hi);
                    breaks.retain(|&b| b > 0.0 || kind != Kind::Mixed);
                    if kind == Kind::Mixed {
                        breaks.insert(0, 0.0);
                    }
                    breaks.dedup();
                    let cont = integrate(|y| f.pdf(y, &p).unwrap(), &breaks, 1e-12, 1e-12).value;
                    // the atom contributes ν in the mixed case
                    let atom = if kind == Kind::Mixed { theta[2] } else { 0.0 };
                    // continuous part of the mixed density already carries (1 − ν)
                    cont + atom
                }
            };
            assert!((total - 1.0).abs() < 1e-6, "{f:?} {theta:?}: {total}");
        }
    }
}

#[test]
fn sampling_is_deterministic_and_matches_moments() {
    let f = Family::Normal;
    let p = pv(f, &[0.0, 1.0]);
    let a = f.sample(&p, &mut stream(11, &[]));
    let b = f.sample(&p, &mut stream(11, &[]));
    assert_eq!(a, b);

    let f = Family::LogNormal;
    let p = pv(f, &[0.0, 1.0]);
    let mut rng = stream(12, &[]);
    let mean = (0..100_000).map(|_| f.sample(&p, &mut rng)).sum::<f64>() / 1e5;
    assert!((mean - 0.5f64.exp()).abs() < 0.02, "{mean}");

    let f = Family::ZeroAdjustedGamma;
    let p = pv(f, &[3.0, 0.8, 0.3]);
    let mut rng = stream(13, &[]);
    let zeros = (0..100_000).filter(|_| f.sample(&p, &mut rng) == 0.0).count() as f64 / 1e5;
    assert!((zeros - 0.30).abs() < 0.01, "{zeros}");
}

#[test]
fn score_has_zero_expectation() {
    let mut rng = stream(90, &[0]);
    for &f in Family::all() {
        let (_, theta) = random_point(f, &mut rng);
        let p = pv(f, &theta);
        let links = f.default_links();
        let n = 100_000;
        let mut sum = [0.0; MAX_PARAMS];
        let mut sq = [0.0; MAX_PARAMS];
        for _ in 0..n {
            let y = f.sample(&p, &mut rng);
            let d = f.loglik_derivs(y, &p, &links);
            for k in 0..f.n_params() {
                sum[k] += d.u[k];
                sq[k] += d.u[k] * d.u[k];
            }
        }
        for k in 0..f.n_params() {
            let m = sum[k] / n as f64;
            let se = ((sq[k] / n as f64 - m * m) / n as f64).sqrt();
            assert!(m.abs() <= 3.0 * se + 1e-12, "{f:?} k={k} θ={theta:?}: {m} vs se {se}");
        }
    }
}

#[test]
fn family_names_round_trip() {
    for &f in Family::all() {
        assert_eq!(Family::from_name(f.name()).unwrap(), f);
    }
    assert_eq!(Family::from_name("Singh-Maddala").unwrap(), Family::SinghMaddala);
    assert!(Family::from_name("dirichlet").is_err());
}

#[test]
fn default_links_map_domains_to_real_line() {
    for &f in Family::all() {
        for d in f.params() {
            let ok = matches!(
                (d.domain, d.default_link),
                (Domain::Real, Link::Identity) | (Domain::Positive, Link::Log) | (Domain::UnitInterval, Link::Logit)
            );
            assert!(ok, "{f:?} {}", d.symbol);
        }
    }
}
