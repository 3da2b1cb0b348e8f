//! Small dense linear-algebra and quadrature helpers.

use nalgebra::{DMatrix, DVector};

use crate::{CMatrix, Error, Result, C64};

pub type CVector = DVector<C64>;

/// Solve `(A^H A + reg I) x = A^H b` with a Cholesky factorisation.
pub fn regularized_ls(a: &CMatrix, b: &CVector, reg: f64) -> Result<CVector> {
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("non-finite observation".into()));
    }
    let mut gram = a.ad_mul(a);
    for i in 0..gram.nrows() {
        gram[(i, i)] += C64::new(reg, 0.0);
    }
    let rhs = a.ad_mul(b);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("Gram matrix is not positive definite".into()))?;
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("linear solve produced non-finite values".into()));
    }
    Ok(x)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with relative tolerance `rel_tol * sigma_max`.
pub fn rank_from_singular(s: &[f64], rel_tol: f64) -> usize {
    let max = s.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * max).count()
}

/// Non-zero eigenvalues of `M^H M` (squared singular values above tolerance).
pub fn gram_eigenvalues(m: &CMatrix, rel_tol: f64) -> Vec<f64> {
    let s = singular_values(m);
    let r = rank_from_singular(&s, rel_tol);
    s[..r].iter().map(|v| v * v).collect()
}

/// Gauss-Legendre nodes and weights on `[a, b]`, Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wi;
        w[n - 1 - i] = half * wi;
    }
    (x, w)
}

/// Dense unitary DFT matrix, `F[m, n] = exp(-j 2 pi m n / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, c| {
        let k = ((r * c) % n) as f64;
        C64::from_polar(scale, -2.0 * std::f64::consts::PI * k / n as f64)
    })
}

/// Stable `ln(sum(exp(v)))`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
