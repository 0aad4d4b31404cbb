//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// XᵀWX for diagonal weights `w`.
pub fn xtwx(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xw = x.clone();
    for mut col in xw.column_iter_mut() {
        for (v, &wi) in col.iter_mut().zip(w) {
            *v *= wi;
        }
    }
    x.tr_mul(&xw)
}

/// Solves the symmetric positive definite system `a c = b`.
pub fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.cholesky().map(|ch| ch.solve(b))
}

/// Weighted least squares: minimizes Σ wᵢ (yᵢ − xᵢᵀβ)².
pub fn wls(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<DVector<f64>> {
    let a = xtwx(x, w);
    let wy: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let b = x.tr_mul(&DVector::from_vec(wy));
    spd_solve(a, &b).ok_or_else(|| Error::invalid("design matrix is rank deficient"))
}

pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<DVector<f64>> {
    wls(x, y, &vec![1.0; y.len()])
}

/// Logistic regression of a 0/1 outcome by Newton–Raphson. Coefficients may
/// grow large under (quasi-)separation; iteration stops after 100 steps.
pub fn logistic_regression(x: &DMatrix<f64>, t: &[f64]) -> Result<DVector<f64>> {
    if t.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("logistic regression needs a 0/1 outcome"));
    }
    let n = t.len();
    let mut beta = DVector::zeros(x.ncols());
    for _ in 0..100 {
        let eta = x * &beta;
        let p: Vec<f64> = eta.iter().map(|&e| crate::families::Link::Logit.invert(e)).collect();
        let w: Vec<f64> = p.iter().map(|p| (p * (1.0 - p)).max(1e-10)).collect();
        let score = x.tr_mul(&DVector::from_iterator(n, (0..n).map(|i| t[i] - p[i])));
        let step = spd_solve(xtwx(x, &w), &score).ok_or_else(|| Error::invalid("logistic design is rank deficient"))?;
        beta += &step;
        if step.amax() < 1e-10 * (1.0 + beta.amax()) {
            break;
        }
    }
    Ok(beta)
}
