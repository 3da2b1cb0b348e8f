use std::f64::consts::PI;

use crate::waveform::{AfdmParams, Daft};
use crate::{CMatrix, Error, Result, C64};

/// Time-domain matrix of one unit-gain path after CPP removal,
/// `Gamma Delta_k Pi^l`. Row `n` has its single entry in column
/// `(n - l) mod N`.
pub fn td_channel_matrix(delay: usize, doppler: f64, n: usize, c1: f64) -> Result<CMatrix> {
    if delay >= n {
        return Err(Error::Input(format!("delay {delay} must be below N = {n}")));
    }
    let mut h = CMatrix::zeros(n, n);
    for (row, v) in td_row_values(delay, doppler, n, c1).into_iter().enumerate() {
        h[(row, (row + n - delay) % n)] = v;
    }
    Ok(h)
}

/// Non-zero of row `n`: `rho_n exp(-j 2 pi k n / N)`, with
/// `rho_n = exp(-j 2 pi c1 (N^2 - 2N(l - n)))` for `n < l`, else 1.
pub fn td_row_values(delay: usize, doppler: f64, n: usize, c1: f64) -> Vec<C64> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let mut phase = -2.0 * PI * doppler * i as f64 / nf;
            if i < delay {
                phase -= 2.0 * PI * (c1 * (nf * nf - 2.0 * nf * (delay - i) as f64)).fract();
            }
            C64::from_polar(1.0, phase)
        })
        .collect()
}

/// Apply one unit-gain path to a time-domain block without forming the matrix.
pub fn apply_td_path(s: &[C64], delay: usize, doppler: f64, c1: f64, out: &mut [C64], gain: C64) {
    let n = s.len();
    let vals = td_row_values(delay, doppler, n, c1);
    for (i, v) in vals.into_iter().enumerate() {
        out[i] += gain * v * s[(i + n - delay) % n];
    }
}

/// `H_p = A (Gamma Delta Pi^l) A^H` by operator composition.
pub fn daft_channel_operator(delay: usize, doppler: f64, params: &AfdmParams) -> Result<CMatrix> {
    let daft = params.transform();
    daft_channel_operator_with(delay, doppler, params, &daft)
}

pub fn daft_channel_operator_with(
    delay: usize,
    doppler: f64,
    params: &AfdmParams,
    daft: &Daft,
) -> Result<CMatrix> {
    let td = td_channel_matrix(delay, doppler, params.n, params.c1)?;
    Ok(daft.conjugate(&td))
}

/// Closed-form entry `(1/N) eta(l, a, b) zeta(l, k, a, b)` with
/// `eta = exp(j 2 pi / N (N c1 l^2 - b l + N c2 (b^2 - a^2)))` and
/// `zeta = sum_n exp(-j 2 pi n (a - b + Ind) / N)`, `Ind = k + 2 N c1 l`.
pub fn closed_form_entry(delay: usize, doppler: f64, params: &AfdmParams, a: usize, b: usize) -> C64 {
    let n = params.n as f64;
    let l = delay as f64;
    let (af, bf) = (a as f64, b as f64);
    let eta_phase = 2.0 * PI / n
        * (n * params.c1 * l * l - bf * l + n * params.c2 * (bf * bf - af * af));
    let ind = doppler + params.delay_shift() * l;
    let zeta = dirichlet(af - bf + ind, params.n);
    C64::from_polar(1.0, eta_phase) * zeta / n
}

/// `sum_{n<N} exp(-j 2 pi n x / N)`; returns `N` when `x` is a multiple of `N`.
pub fn dirichlet(x: f64, n: usize) -> C64 {
    let nf = n as f64;
    let r = x.rem_euclid(nf);
    if r.abs() < 1e-12 || (nf - r).abs() < 1e-12 {
        return C64::new(nf, 0.0);
    }
    // geometric sum (1 - w^N) / (1 - w), w = exp(-j 2 pi x / N)
    let w = C64::from_polar(1.0, -2.0 * PI * x / nf);
    let wn = C64::from_polar(1.0, -2.0 * PI * x);
    (C64::new(1.0, 0.0) - wn) / (C64::new(1.0, 0.0) - w)
}

/// Row-wise sparse representation: `rows[a]` holds `(b, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub n: usize,
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (a, row) in self.rows.iter().enumerate() {
            for &(b, v) in row {
                m[(a, b)] += v;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Closed-form `H_p` truncated to `b` within `k_nu` of the peak column
/// `round(a + Ind) mod N`. Entries below `1e-12` are dropped.
pub fn daft_channel_sparse(delay: usize, doppler: f64, params: &AfdmParams) -> SparseRows {
    let n = params.n;
    let ind = doppler + params.delay_shift() * delay as f64;
    let width = (2 * params.k_nu + 1).min(n);
    let rows = (0..n)
        .map(|a| {
            let peak = (a as f64 + ind).round().rem_euclid(n as f64) as usize;
            let mut row = Vec::with_capacity(width);
            for off in 0..width {
                let b = (peak + n + off - params.k_nu.min(n)) % n;
                let v = closed_form_entry(delay, doppler, params, a, b);
                if v.norm() >= 1e-12 {
                    row.push((b, v));
                }
            }
            row.sort_by_key(|&(b, _)| b);
            row
        })
        .collect();
    SparseRows { n, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::AfdmParams;

    #[test]
    fn trivial_td_matrices() {
        assert_eq!(td_channel_matrix(0, 0.0, 5, 0.3).unwrap(), CMatrix::identity(5, 5));
        let pi = td_channel_matrix(1, 0.0, 4, 0.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect = if c == (r + 3) % 4 { 1.0 } else { 0.0 };
                assert_eq!(pi[(r, c)], C64::new(expect, 0.0));
            }
        }
        assert!(td_channel_matrix(4, 0.0, 4, 0.0).is_err());
    }

    #[test]
    fn td_matrix_is_phase_permutation() {
        let h = td_channel_matrix(3, 0.37, 11, 5.0 / 22.0).unwrap();
        for r in 0..11 {
            for c in 0..11 {
                let mag = h[(r, c)].norm();
                if c == (r + 11 - 3) % 11 {
                    assert!((mag - 1.0).abs() < 1e-14);
                } else {
                    assert_eq!(mag, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_path_is_identity_in_daft_domain() {
        let p = AfdmParams::full_diversity(16, 1, 0, 2).unwrap();
        let h = daft_channel_operator(0, 0.0, &p).unwrap();
        assert!((h - CMatrix::identity(16, 16)).norm() < 1e-12);
    }

    #[test]
    fn closed_form_matches_operator_everywhere() {
        let p = AfdmParams::full_diversity(16, 1, 1, 2).unwrap();
        for (l, k) in [(0usize, 0.2), (1, 0.3), (2, 1.4), (2, -1.0), (1, -0.5)] {
            let h = daft_channel_operator(l, k, &p).unwrap();
            for a in 0..16 {
                for b in 0..16 {
                    let cf = closed_form_entry(l, k, &p, a, b);
                    assert!((h[(a, b)] - cf).norm() < 1e-10, "l={l} k={k} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn dirichlet_singular_limit() {
        assert_eq!(dirichlet(0.0, 8), C64::new(8.0, 0.0));
        assert_eq!(dirichlet(16.0, 8), C64::new(8.0, 0.0));
        assert!(dirichlet(3.0, 8).norm() < 1e-12);
        let near = dirichlet(1e-7, 8);
        assert!((near.norm() - 8.0).abs() < 1e-5);
    }

    #[test]
    fn energy_is_conserved() {
        let p = AfdmParams::full_diversity(16, 1, 1, 2).unwrap();
        let h = daft_channel_operator(2, 0.7, &p).unwrap();
        let u = h.adjoint() * &h;
        assert!((u - CMatrix::identity(16, 16)).norm() < 1e-10);
    }
}
