//! Special functions, quadrature, and root finding shared by the families and
//! the functionals.

use std::collections::BinaryHeap;
use std::f64::consts::{PI, SQRT_2};

use statrs::function::{erf, gamma};

/// Standard normal CDF, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile. `p` must lie in [0, 1]; the endpoints map to ±∞.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    // one Newton polish step; erfc_inv alone is good to ~1e-12 relative
    let r = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
    let d = norm_pdf(x);
    if d > 0.0 && x.is_finite() {
        x - r / d
    } else {
        x
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// Trigamma ψ'(x) for x > 0: recurrence up to x ≥ 10, then the asymptotic
/// series in 1/x.
pub fn trigamma(mut x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    let series = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                + r2 * (-1.0 / 30.0
                    + r2 * (1.0 / 42.0 + r2 * (-1.0 / 30.0 + r2 * (5.0 / 66.0)))));
    acc + series
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma::gamma_ur(a, x)
}

/// `ln(1 + x)` kept explicit for readability at call sites.
#[inline]
pub fn ln1p(x: f64) -> f64 {
    x.ln_1p()
}

/// Finds `x` in `[lo, hi]` with `f(x) = 0` for an increasing `f`, expanding `hi`
/// geometrically when the bracket does not yet contain the root.
pub fn solve_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let mut expansions = 0;
    while f(hi) < 0.0 && expansions < 200 {
        lo = hi;
        hi = if hi > 0.0 { hi * 2.0 } else { hi.abs() + 1.0 };
        expansions += 1;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol * (1.0 + mid.abs()) {
            return mid;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) over the union of the intervals
/// delimited by `breaks` (ascending). The worst segment is bisected until the
/// summed error estimate is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Quadrature {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&f, w[0], w[1]);
            value += v;
            error += e;
            heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
        }
    }
    let mut iterations = 0;
    while error > abs_tol.max(rel_tol * value.abs()) && iterations < 4000 {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        value += v1 + v2 - seg.value;
        error += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        iterations += 1;
    }
    // recompute sums to shed accumulated rounding from the running updates
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Quadrature {
        value,
        error,
        converged: error <= abs_tol.max(rel_tol * value.abs()) && value.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_and_quantile_agree() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        for &p in &[1e-10, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-10] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn trigamma_matches_known_values_and_differences() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-11);
        for &x in &[0.3, 1.7, 4.2, 11.0, 80.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() < 1e-6 * trigamma(x), "x={x}");
        }
    }

    #[test]
    fn gauss_kronrod_integrates_smooth_and_peaked_functions() {
        let q = integrate(|x: f64| x.sin(), &[0.0, PI], 1e-13, 1e-13);
        assert!((q.value - 2.0).abs() < 1e-12);
        let q = integrate(|x: f64| (-x * x).exp(), &[-10.0, -1.0, 0.0, 1.0, 10.0], 1e-13, 0.0);
        assert!((q.value - PI.sqrt()).abs() < 1e-12);
        // integrable endpoint singularity
        let q = integrate(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], 1e-9, 0.0);
        assert!((q.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn bisection_finds_roots_beyond_initial_bracket() {
        let r = solve_increasing(|x| x * x * x - 1000.0, 0.0, 1.0, 1e-14);
        assert!((r - 10.0).abs() < 1e-10);
    }
}
