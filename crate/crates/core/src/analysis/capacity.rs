use rand::Rng;

use crate::channel::add_noise;
use crate::linalg::{log_sum_exp, CVector};
use crate::mapper::GsmSystem;
use crate::{CMatrix, Error, Result, C64};

/// Largest frame (in bits) enumerated exactly by the capacity estimator.
pub const EXACT_CAPACITY_BITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Bits per subcarrier.
    pub value: f64,
    pub stderr: f64,
    pub exact_inner: bool,
    pub channel_samples: usize,
    /// Candidates used for the inner sum (`2^L` when exact).
    pub inner_candidates: usize,
}

/// All frame vectors (group-major), indexed by the frame bit word with the
/// first bit most significant.
pub fn frame_codewords(sys: &GsmSystem) -> Vec<Vec<C64>> {
    let groups: Vec<Vec<C64>> = sys
        .group_codewords()
        .into_iter()
        .map(|(_, v)| v.values)
        .collect();
    let n = sys.config.subcarriers;
    let lb = sys.config.bits_per_group();
    let total = 1usize << (n * lb);
    (0..total)
        .map(|word| {
            (0..n)
                .flat_map(|g| {
                    let idx = (word >> ((n - 1 - g) * lb)) & ((1 << lb) - 1);
                    groups[idx].iter().copied()
                })
                .collect()
        })
        .collect()
}

/// DCMC capacity
/// `L/N - (1/(N 2^L)) sum_i E[log2 sum_j exp(Theta_ij)]` with
/// `Theta_ij = (-||G (f_i - f_j) + w||^2 + ||w||^2) / N0`, `w ~ CN(0, N0 I)`.
///
/// Exact inner sum for `L <= 12`, otherwise `inner` random candidates plus
/// the transmitted one, rescaled (biased, noted by `exact_inner = false`).
/// Every channel sample uses one noise draw per transmitted codeword; when
/// `outer` is `Some(m)` only `m` random transmitted codewords are used.
pub fn dcmc_capacity<R, F>(
    sys: &GsmSystem,
    n0: f64,
    channel_samples: usize,
    inner: usize,
    outer: Option<usize>,
    mut sample_g: F,
    rng: &mut R,
) -> Result<CapacityResult>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<CMatrix>,
{
    if !(n0 > 0.0) {
        return Err(Error::Numeric(format!("N0 must be positive, got {n0}")));
    }
    let cfg = &sys.config;
    let l = cfg.bits_per_frame();
    let n = cfg.subcarriers as f64;
    let exact_inner = l <= EXACT_CAPACITY_BITS;
    if !exact_inner && l > 62 {
        return Err(Error::Capability(format!("frame of {l} bits is too large")));
    }
    let words = if exact_inner { frame_codewords(sys) } else { Vec::new() };
    let random_word = |rng: &mut R| -> Result<Vec<C64>> {
        let bits: Vec<bool> = (0..l).map(|_| rng.random()).collect();
        let f = crate::mapper::build_frame(&bits, cfg, &sys.codebook, &sys.constellation)?;
        Ok(f.as_slice().to_vec())
    };
    let total = 2f64.powi(l as i32);
    let mut per_sample = Vec::with_capacity(channel_samples);
    for _ in 0..channel_samples.max(1) {
        let g = sample_g(rng)?;
        let mut acc = 0.0;
        let mut count = 0usize;
        if exact_inner {
            let images: Vec<CVector> = words
                .iter()
                .map(|f| &g * CVector::from_column_slice(f))
                .collect();
            let picks: Vec<usize> = match outer {
                Some(m) => (0..m).map(|_| rng.random_range(0..words.len())).collect(),
                None => (0..words.len()).collect(),
            };
            let mut theta = vec![0.0; words.len()];
            for &i in &picks {
                let mut w = vec![C64::default(); g.nrows()];
                add_noise(&mut w, n0, rng);
                let wn: f64 = w.iter().map(|v| v.norm_sqr()).sum();
                for (j, t) in theta.iter_mut().enumerate() {
                    let d: f64 = images[i]
                        .iter()
                        .zip(images[j].iter())
                        .zip(&w)
                        .map(|((a, b), w)| (a - b + w).norm_sqr())
                        .sum();
                    *t = (wn - d) / n0;
                }
                acc += log_sum_exp(&theta) / std::f64::consts::LN_2;
                count += 1;
            }
        } else {
            let m = outer.unwrap_or(64);
            for _ in 0..m {
                let fi = CVector::from_vec(random_word(rng)?);
                let gi = &g * &fi;
                let mut w = vec![C64::default(); g.nrows()];
                add_noise(&mut w, n0, rng);
                let wn: f64 = w.iter().map(|v| v.norm_sqr()).sum();
                let mut theta = Vec::with_capacity(inner + 1);
                theta.push(0.0);
                let scale = ((total - 1.0) / inner as f64).ln();
                for _ in 0..inner {
                    let gj = &g * CVector::from_vec(random_word(rng)?);
                    let d: f64 = gi
                        .iter()
                        .zip(gj.iter())
                        .zip(&w)
                        .map(|((a, b), w)| (a - b + w).norm_sqr())
                        .sum();
                    theta.push((wn - d) / n0 + scale);
                }
                acc += log_sum_exp(&theta) / std::f64::consts::LN_2;
                count += 1;
            }
        }
        per_sample.push(l as f64 / n - acc / (count as f64 * n));
    }
    let ns = per_sample.len() as f64;
    let mean = per_sample.iter().sum::<f64>() / ns;
    let var = if ns > 1.0 {
        per_sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ns - 1.0)
    } else {
        0.0
    };
    Ok(CapacityResult {
        value: mean,
        stderr: (var / ns).sqrt(),
        exact_inner,
        channel_samples: per_sample.len(),
        inner_candidates: if exact_inner { words.len() } else { inner },
    })
}
