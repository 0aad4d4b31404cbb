//! B-spline bases on equally spaced knots and difference penalties.

use nalgebra::DMatrix;

/// Equally spaced knot layout: `segments` interior intervals on `[lo, hi]`,
/// extended by `degree` knots on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotLayout {
    pub lo: f64,
    pub hi: f64,
    pub segments: usize,
    pub degree: usize,
}

impl KnotLayout {
    pub fn dim(&self) -> usize {
        self.segments + self.degree
    }

    fn knots(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / self.segments as f64;
        (0..=self.segments + 2 * self.degree)
            .map(|j| self.lo + (j as f64 - self.degree as f64) * h)
            .collect()
    }

    /// Basis values at `x` (clamped into `[lo, hi]`), Cox–de Boor recursion.
    pub fn eval(&self, x: f64, out: &mut [f64]) {
        let d = self.degree;
        let t = self.knots();
        let x = x.clamp(self.lo, self.hi);
        let h = (self.hi - self.lo) / self.segments as f64;
        // interval index among interior segments; x == hi belongs to the last one
        let seg = (((x - self.lo) / h).floor() as usize).min(self.segments - 1);
        let mu = seg + d; // t[mu] <= x < t[mu+1]
        let mut n = vec![0.0; d + 1];
        n[0] = 1.0;
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        for j in 1..=d {
            left[j] = x - t[mu + 1 - j];
            right[j] = t[mu + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = n[r] / denom;
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, &v) in n.iter().enumerate() {
            out[mu - d + r] = v;
        }
    }

    pub fn basis(&self, xs: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let mut b = DMatrix::zeros(xs.len(), m);
        let mut row = vec![0.0; m];
        for (i, &x) in xs.iter().enumerate() {
            self.eval(x, &mut row);
            for j in 0..m {
                b[(i, j)] = row[j];
            }
        }
        b
    }
}

/// `order`-th difference matrix with `m` columns.
pub fn difference_matrix(m: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(m, m);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        let mut next = DMatrix::zeros(rows, m);
        for i in 0..rows {
            for j in 0..m {
                next[(i, j)] = d[(i + 1, j)] - d[(i, j)];
            }
        }
        d = next;
    }
    d
}

/// S = DᵀD for the `order`-th difference matrix.
pub fn difference_penalty(m: usize, order: usize) -> DMatrix<f64> {
    let d = difference_matrix(m, order);
    d.transpose() * d
}

/// Orthonormal basis (m × (m−1)) of the complement of `c`, via one Householder
/// reflection: columns 2..m of H where H·e₁ ∝ c.
pub fn null_space_of(c: &[f64]) -> DMatrix<f64> {
    let m = c.len();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v: Vec<f64> = c.iter().map(|x| x / norm).collect();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut z = DMatrix::zeros(m, m - 1);
    for i in 0..m {
        for j in 1..m {
            let h = if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vv;
            z[(i, j - 1)] = h;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook recursive Cox–de Boor definition, used as an oracle.
    fn cox_de_boor(t: &[f64], i: usize, k: usize, x: f64) -> f64 {
        if k == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        if t[i + k] > t[i] {
            v += (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(t, i, k - 1, x);
        }
        if t[i + k + 1] > t[i + 1] {
            v += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(t, i + 1, k - 1, x);
        }
        v
    }

    #[test]
    fn matches_recursive_definition_and_dimension() {
        let layout = KnotLayout { lo: -1.0, hi: 3.0, segments: 7, degree: 3 };
        let t = layout.knots();
        // number of basis functions of degree d on len(t) knots is len(t) − d − 1
        assert_eq!(t.len() - layout.degree - 1, layout.dim());
        assert_eq!(layout.dim(), 7 + 3);
        let mut row = vec![0.0; layout.dim()];
        for i in 0..50 {
            let x = -1.0 + 4.0 * (i as f64 + 0.37) / 50.0;
            layout.eval(x, &mut row);
            for (j, &v) in row.iter().enumerate() {
                assert!((v - cox_de_boor(&t, j, 3, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_and_linear_coefficients_have_zero_penalty() {
        let s2 = difference_penalty(12, 2);
        let c = nalgebra::DVector::from_element(12, 3.5);
        assert!((c.transpose() * &s2 * &c)[(0, 0)].abs() < 1e-10);
        let lin = nalgebra::DVector::from_fn(12, |i, _| 2.0 * i as f64 - 1.0);
        assert!((lin.transpose() * &s2 * &lin)[(0, 0)].abs() < 1e-9);
        let s1 = difference_penalty(12, 1);
        assert!((c.transpose() * &s1 * &c)[(0, 0)].abs() < 1e-10);
        // rank(S) = m − order
        let eig = s2.symmetric_eigenvalues();
        assert_eq!(eig.iter().filter(|&&e| e.abs() < 1e-9).count(), 2);
        assert!(eig.iter().all(|&e| e > -1e-9));
    }

    #[test]
    fn null_space_is_orthonormal_complement() {
        let c = [0.3, 1.2, 0.8, 0.1, 2.0];
        let z = null_space_of(&c);
        let ztz = z.transpose() * &z;
        assert!((ztz - DMatrix::identity(4, 4)).abs().max() < 1e-12);
        let cz = nalgebra::RowDVector::from_row_slice(&c) * &z;
        assert!(cz.abs().max() < 1e-12);
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in -5.0f64..5.0, segs in 1usize..30, degree in 1usize..5) {
            let layout = KnotLayout { lo: -5.0, hi: 5.0, segments: segs, degree };
            let mut row = vec![0.0; layout.dim()];
            layout.eval(x, &mut row);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= -1e-15));
        }

        #[test]
        fn polynomial_null_space(order in 1usize..4, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..1.0) {
            let m = 15;
            let s = difference_penalty(m, order);
            let coef = nalgebra::DVector::from_fn(m, |i, _| {
                let x = i as f64;
                let terms = [a, b * x, c * x * x];
                terms[..order].iter().sum::<f64>()
            });
            let pen = (coef.transpose() * &s * &coef)[(0, 0)];
            prop_assert!(pen.abs() < 1e-8 * (1.0 + coef.norm_squared()));
        }
    }
}
