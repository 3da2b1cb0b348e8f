use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// One multipath realization: `P` paths with delay tap `l_p` and Doppler
/// index `k_p` shared by all links, and a complex gain per (path, rx, tx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub rx_antennas: usize,
    pub tx_antennas: usize,
    pub delays: Vec<usize>,
    pub dopplers: Vec<f64>,
    /// Flattened `[p][m_r][m_t]`.
    pub gains: Vec<C64>,
}

impl PathSet {
    pub fn new(
        rx_antennas: usize,
        tx_antennas: usize,
        delays: Vec<usize>,
        dopplers: Vec<f64>,
        gains: Vec<C64>,
    ) -> Result<Self> {
        let p = delays.len();
        if p == 0 || dopplers.len() != p || gains.len() != p * rx_antennas * tx_antennas {
            return Err(Error::Input(format!(
                "path set shape mismatch: {} delays, {} dopplers, {} gains for {}x{} links",
                p,
                dopplers.len(),
                gains.len(),
                rx_antennas,
                tx_antennas
            )));
        }
        Ok(Self {
            rx_antennas,
            tx_antennas,
            delays,
            dopplers,
            gains,
        })
    }

    pub fn paths(&self) -> usize {
        self.delays.len()
    }

    pub fn links(&self) -> usize {
        self.rx_antennas * self.tx_antennas
    }

    pub fn gain(&self, p: usize, mr: usize, mt: usize) -> C64 {
        self.gains[(p * self.rx_antennas + mr) * self.tx_antennas + mt]
    }

    pub fn gain_mut(&mut self, p: usize, mr: usize, mt: usize) -> &mut C64 {
        &mut self.gains[(p * self.rx_antennas + mr) * self.tx_antennas + mt]
    }

    pub fn max_delay(&self) -> usize {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    /// CSV record: header, then one row per path with `l`, `k` and the
    /// gains of every link as `re,im` pairs in `[m_r][m_t]` order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["path".to_string(), "delay".into(), "doppler".into()];
        for mr in 0..self.rx_antennas {
            for mt in 0..self.tx_antennas {
                header.push(format!("re_{mr}_{mt}"));
                header.push(format!("im_{mr}_{mt}"));
            }
        }
        wr.write_record(&header)?;
        for p in 0..self.paths() {
            let mut row = vec![
                p.to_string(),
                self.delays[p].to_string(),
                format!("{:e}", self.dopplers[p]),
            ];
            for mr in 0..self.rx_antennas {
                for mt in 0..self.tx_antennas {
                    let g = self.gain(p, mr, mt);
                    row.push(format!("{:e}", g.re));
                    row.push(format!("{:e}", g.im));
                }
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, rx_antennas: usize, tx_antennas: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut delays = Vec::new();
        let mut dopplers = Vec::new();
        let mut gains = Vec::new();
        let links = rx_antennas * tx_antennas;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad number {s:?}: {e}")))
        };
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 3 + 2 * links {
                return Err(Error::Input(format!(
                    "path row has {} fields, expected {}",
                    rec.len(),
                    3 + 2 * links
                )));
            }
            delays.push(
                rec[1]
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Input(format!("bad delay {:?}: {e}", &rec[1])))?,
            );
            dopplers.push(parse(&rec[2])?);
            for i in 0..links {
                gains.push(C64::new(parse(&rec[3 + 2 * i])?, parse(&rec[4 + 2 * i])?));
            }
        }
        Self::new(rx_antennas, tx_antennas, delays, dopplers, gains)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        Self::new(p.rx_antennas, p.tx_antennas, p.delays, p.dopplers, p.gains)
    }
}

/// Sampling recipe for [`generate_paths`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProfile {
    pub paths: usize,
    pub l_max: usize,
    pub k_max: f64,
    pub integer_doppler: bool,
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Draw a realization: gains i.i.d. `CN(0, 1/P)` per link, `l_1 = 0` and
/// `l_p` uniform on `[1, l_max]` otherwise, `k_p = k_max cos(phi)` with
/// `phi ~ U[-pi, pi]`, rounded in integer-Doppler mode.
pub fn generate_paths<R: Rng + ?Sized>(
    profile: &PathProfile,
    rx_antennas: usize,
    tx_antennas: usize,
    rng: &mut R,
) -> Result<PathSet> {
    if profile.paths == 0 {
        return Err(Error::Config("path count P must be at least 1".into()));
    }
    if profile.l_max == 0 && profile.paths > 1 {
        log::warn!("l_max = 0 with P = {}: all paths share delay 0", profile.paths);
    }
    let p = profile.paths;
    let mut delays = Vec::with_capacity(p);
    let mut dopplers = Vec::with_capacity(p);
    for i in 0..p {
        let l = if i == 0 || profile.l_max == 0 {
            0
        } else {
            rng.random_range(1..=profile.l_max)
        };
        delays.push(l);
        let phi = rng.random_range(-PI..PI);
        let mut k = profile.k_max * phi.cos();
        if profile.integer_doppler {
            k = k.round();
        }
        dopplers.push(k);
    }
    let var = 1.0 / p as f64;
    let gains = (0..p * rx_antennas * tx_antennas)
        .map(|_| complex_gaussian(rng, var))
        .collect();
    PathSet::new(rx_antennas, tx_antennas, delays, dopplers, gains)
}

/// Imperfect CSI: `h_hat = h (1 + kappa sigma)` with `sigma` uniform on the
/// complex unit circle, i.i.d. per gain.
pub fn corrupt_csi<R: Rng + ?Sized>(gains: &[C64], kappa: f64, rng: &mut R) -> Result<Vec<C64>> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Config(format!("kappa_h = {kappa} must lie in [0, 1)")));
    }
    if kappa == 0.0 {
        return Ok(gains.to_vec());
    }
    Ok(gains
        .iter()
        .map(|h| {
            let theta = rng.random_range(-PI..PI);
            h * (1.0 + kappa * C64::from_polar(1.0, theta))
        })
        .collect())
}
