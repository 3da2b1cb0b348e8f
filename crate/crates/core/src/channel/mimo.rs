use rand::Rng;

use super::daft_domain::daft_channel_operator_with;
use super::paths::{complex_gaussian, PathSet};
use crate::linalg::CVector;
use crate::waveform::AfdmParams;
use crate::{CMatrix, Error, Result, C64};

/// Group-major `x` (N groups of `M_t`) to antenna-major `z` (`M_t` blocks of
/// N): `z[m_t N + n] = x[n M_t + m_t]`.
pub fn shuffle(x: &[C64], n: usize, tx: usize) -> Vec<C64> {
    let mut z = vec![C64::default(); n * tx];
    for g in 0..n {
        for mt in 0..tx {
            z[mt * n + g] = x[g * tx + mt];
        }
    }
    z
}

/// Inverse of [`shuffle`].
pub fn unshuffle(z: &[C64], n: usize, tx: usize) -> Vec<C64> {
    let mut x = vec![C64::default(); n * tx];
    for g in 0..n {
        for mt in 0..tx {
            x[g * tx + mt] = z[mt * n + g];
        }
    }
    x
}

/// Position in `z` of element `j` of `x`.
pub fn shuffle_index(j: usize, n: usize, tx: usize) -> usize {
    (j % tx) * n + j / tx
}

/// Per-path DAFT-domain operators of unit gain.
pub fn path_operators(paths: &PathSet, params: &AfdmParams) -> Result<Vec<CMatrix>> {
    let daft = params.transform();
    paths
        .delays
        .iter()
        .zip(&paths.dopplers)
        .map(|(&l, &k)| daft_channel_operator_with(l, k, params, &daft))
        .collect()
}

/// DAFT-domain MIMO channel of one realization.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub n: usize,
    pub rx_antennas: usize,
    pub tx_antennas: usize,
    /// Unit-gain per-path operators `H_p`.
    pub per_path: Vec<CMatrix>,
    /// Stacked `(N M_r) x (N M_t)` matrix, block `(m_r, m_t)` is
    /// `sum_p h_{p, m_r, m_t} H_p`.
    pub h: CMatrix,
    /// `G = H P`, acting on the group-major frame vector.
    pub g: CMatrix,
}

impl EffectiveChannel {
    pub fn assemble(paths: &PathSet, params: &AfdmParams) -> Result<Self> {
        let per_path = path_operators(paths, params)?;
        Self::from_operators(per_path, &paths.gains, paths.rx_antennas, paths.tx_antennas)
    }

    /// Combine precomputed `H_p` with a gain vector laid out as in [`PathSet`].
    pub fn from_operators(
        per_path: Vec<CMatrix>,
        gains: &[C64],
        rx: usize,
        tx: usize,
    ) -> Result<Self> {
        let p = per_path.len();
        if p == 0 || gains.len() != p * rx * tx {
            return Err(Error::Input("gain count does not match paths and links".into()));
        }
        let n = per_path[0].nrows();
        let mut h = CMatrix::zeros(n * rx, n * tx);
        for mr in 0..rx {
            for mt in 0..tx {
                let mut block = h.view_mut((mr * n, mt * n), (n, n));
                for (pi, hp) in per_path.iter().enumerate() {
                    let gain = gains[(pi * rx + mr) * tx + mt];
                    block.zip_apply(hp, |acc, v| *acc += gain * v);
                }
            }
        }
        let g = CMatrix::from_fn(n * rx, n * tx, |r, c| h[(r, shuffle_index(c, n, tx))]);
        Ok(Self {
            n,
            rx_antennas: rx,
            tx_antennas: tx,
            per_path,
            h,
            g,
        })
    }

    pub fn link(&self, mr: usize, mt: usize) -> CMatrix {
        self.h
            .view((mr * self.n, mt * self.n), (self.n, self.n))
            .into_owned()
    }
}

/// Per-complex-dimension noise variance `N0 = K / (gamma_s M_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub gamma_s: f64,
    pub n0: f64,
}

impl NoiseModel {
    pub fn new(gamma_s: f64, active: usize, tx: usize) -> Result<Self> {
        if !(gamma_s > 0.0) {
            return Err(Error::Config(format!("SNR must be positive, got {gamma_s}")));
        }
        Ok(Self {
            gamma_s,
            n0: active as f64 / (gamma_s * tx as f64),
        })
    }

    pub fn from_db(snr_db: f64, active: usize, tx: usize) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), active, tx)
    }
}

/// Add i.i.d. `CN(0, N0)` samples.
pub fn add_noise<R: Rng + ?Sized>(y: &mut [C64], n0: f64, rng: &mut R) {
    if n0 == 0.0 {
        return;
    }
    for v in y.iter_mut() {
        *v += complex_gaussian(rng, n0);
    }
}

pub fn add_noise_vec<R: Rng + ?Sized>(y: &mut CVector, n0: f64, rng: &mut R) {
    add_noise(y.as_mut_slice(), n0, rng);
}
