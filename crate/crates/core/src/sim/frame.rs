use std::f64::consts::PI;

use rand::Rng;

use crate::channel::{add_noise, corrupt_csi, generate_paths, EffectiveChannel, PathProfile, PathSet};
use crate::linalg::CVector;
use crate::mapper::{build_frame, GsmSystem};
use crate::waveform::{add_cpp, remove_cpp, AfdmParams, Daft};
use crate::{CMatrix, Error, Result, C64};

/// Fixed parts of the link shared by every frame.
#[derive(Debug, Clone)]
pub struct Link {
    pub sys: GsmSystem,
    pub params: AfdmParams,
    pub profile: PathProfile,
    pub kappa_h: f64,
    daft: Daft,
}

/// One transmitted frame as seen by the receiver.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub bits: Vec<bool>,
    /// Group-major transmit vector.
    pub x: Vec<C64>,
    /// Stacked DAFT-domain observation, `y[mr N + a]`.
    pub y: CVector,
    /// Channel handed to the detector (corrupted when `kappa_h > 0`).
    pub g: CMatrix,
    pub paths: PathSet,
}

impl Link {
    pub fn new(sys: GsmSystem, params: AfdmParams, profile: PathProfile, kappa_h: f64) -> Result<Self> {
        if params.n != sys.config.subcarriers {
            return Err(Error::Config("waveform length differs from N".into()));
        }
        if profile.l_max > params.cpp_len {
            return Err(Error::Config(format!(
                "prefix of {} samples is shorter than l_max = {}",
                params.cpp_len, profile.l_max
            )));
        }
        let daft = params.transform();
        Ok(Self {
            sys,
            params,
            profile,
            kappa_h,
            daft,
        })
    }

    /// Modulate the group-major frame `x`: one IDAFT plus prefix per antenna.
    pub fn transmit(&self, x: &[C64]) -> Result<Vec<Vec<C64>>> {
        let mt = self.sys.config.tx_antennas;
        (0..mt)
            .map(|a| {
                let z: Vec<C64> = x.iter().skip(a).step_by(mt).copied().collect();
                add_cpp(&self.daft.idaft(&z), self.params.c1, self.params.cpp_len)
            })
            .collect()
    }

    /// Pass prefixed antenna signals through the paths sample by sample,
    /// `r(n) = sum_p h_p exp(-j 2 pi k_p n / N) s(n - l_p)`, and drop the
    /// prefix. Returns one block of `N` samples per receive antenna.
    pub fn propagate(&self, tx: &[Vec<C64>], paths: &PathSet) -> Result<Vec<Vec<C64>>> {
        let n = self.params.n;
        let lp = self.params.cpp_len;
        if paths.max_delay() > lp {
            return Err(Error::Input("path delay exceeds the prefix".into()));
        }
        let nf = n as f64;
        (0..paths.rx_antennas)
            .map(|mr| {
                let mut r = vec![C64::default(); n + lp];
                for (mt, s) in tx.iter().enumerate() {
                    for p in 0..paths.paths() {
                        let h = paths.gain(p, mr, mt);
                        let (l, k) = (paths.delays[p], paths.dopplers[p]);
                        for (i, out) in r.iter_mut().enumerate().skip(lp) {
                            let t = (i - lp) as f64;
                            let phase = -2.0 * PI * (k * t / nf).fract();
                            *out += h * C64::from_polar(1.0, phase) * s[i - l];
                        }
                    }
                }
                remove_cpp(&r, lp)
            })
            .collect()
    }

    /// DAFT of each receive block, stacked.
    pub fn demodulate(&self, rx: &[Vec<C64>]) -> CVector {
        let mut y = Vec::with_capacity(rx.len() * self.params.n);
        for r in rx {
            y.extend(self.daft.daft(r));
        }
        CVector::from_vec(y)
    }

    /// Draw bits, channel, CSI error and noise from `rng`, in that order, and
    /// run the full chain. The draw order does not depend on the waveform,
    /// so AFDM and OFDM runs with equal seeds share bits and channels.
    pub fn frame<R: Rng + ?Sized>(&self, n0: f64, rng: &mut R) -> Result<FrameSample> {
        let cfg = &self.sys.config;
        let bits: Vec<bool> = (0..cfg.bits_per_frame()).map(|_| rng.random()).collect();
        let x = build_frame(&bits, cfg, &self.sys.codebook, &self.sys.constellation)?;
        let x = x.as_slice().to_vec();
        let paths = generate_paths(&self.profile, cfg.rx_antennas, cfg.tx_antennas, rng)?;
        let mut known = paths.clone();
        known.gains = corrupt_csi(&paths.gains, self.kappa_h, rng)?;
        let tx = self.transmit(&x)?;
        let mut rx = self.propagate(&tx, &paths)?;
        for r in rx.iter_mut() {
            add_noise(r, n0, rng);
        }
        let y = self.demodulate(&rx);
        let g = EffectiveChannel::assemble(&known, &self.params)?.g;
        Ok(FrameSample {
            bits,
            x,
            y,
            g,
            paths,
        })
    }
}
