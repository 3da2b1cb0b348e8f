use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::channel::PathProfile;
use crate::detect::DetectorKind;
use crate::mapper::{GsmConfig, GsmSystem};
use crate::waveform::{AfdmParams, DEFAULT_DELTA_F};
use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Everything that determines a simulation run. Parsed from flat
/// `key = value` text; every key is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub subcarriers: usize,
    pub active: usize,
    pub order: usize,

    /// `None`: derived from `k_max` by rounding half down.
    pub alpha_max: Option<usize>,
    pub k_nu: usize,
    /// `None`: `P - 1`.
    pub l_max: Option<usize>,
    pub delta_f: f64,
    pub c2: Option<f64>,
    pub ofdm: bool,

    pub paths: usize,
    /// Explicit maximum normalized Doppler; wins over the velocity.
    pub k_max: Option<f64>,
    pub velocity_kmh: f64,
    pub carrier_hz: f64,
    pub integer_doppler: bool,
    pub kappa_h: f64,

    pub detectors: Vec<String>,
    pub t1: usize,
    pub t2: usize,
    pub eps_th: Option<f64>,

    pub snr_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_frames: u64,
    /// Frames per scheduling batch; the stopping rule is checked between
    /// batches, so this value is part of the result.
    pub batch_frames: u64,
    pub seed: u64,

    /// Pair samples of the Monte-Carlo union bound.
    pub bound_samples: usize,
    /// Geometry draws for the exact bound under fractional Doppler.
    pub geometry_samples: usize,
    pub capacity_channels: usize,
    pub capacity_inner: usize,
    /// Transmitted codewords per channel draw; `None` uses all of them when
    /// the inner sum is exact.
    pub capacity_outer: Option<usize>,
    pub complexity_frames: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tx_antennas: 4,
            rx_antennas: 4,
            subcarriers: 16,
            active: 2,
            order: 4,
            alpha_max: None,
            k_nu: 0,
            l_max: None,
            delta_f: DEFAULT_DELTA_F,
            c2: None,
            ofdm: false,
            paths: 4,
            k_max: None,
            velocity_kmh: 540.0,
            carrier_hz: 4e9,
            integer_doppler: false,
            kappa_h: 0.0,
            detectors: vec!["lmmse-mld".into()],
            t1: 1,
            t2: 1,
            eps_th: None,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            min_bit_errors: 200,
            max_frames: 100_000,
            batch_frames: 64,
            seed: 1,
            bound_samples: 20_000,
            geometry_samples: 64,
            capacity_channels: 50,
            capacity_inner: 256,
            capacity_outer: None,
            complexity_frames: 1000,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
    }
}

fn parse_opt<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.eq_ignore_ascii_case("auto") || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

/// `"10,12,14"` or an inclusive range `"start:step:stop"`.
pub fn parse_snr_list(v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    let out = if v.contains(':') {
        let p: Vec<f64> = v
            .split(':')
            .map(|s| parse_num::<f64>("snr_db", s.trim()))
            .collect::<Result<_>>()?;
        let [start, step, stop] = p[..] else {
            return Err(Error::Config(format!("snr range {v:?} is not start:step:stop")));
        };
        if !(step > 0.0) || stop < start {
            return Err(Error::Config(format!("empty or endless snr range {v:?}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_num::<f64>("snr_db", s.trim()))
            .collect::<Result<Vec<_>>>()?
    };
    if out.is_empty() {
        return Err(Error::Config("snr_db list is empty".into()));
    }
    Ok(out)
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

/// `x` rounded to the nearest integer, halves going down.
fn round_half_down(x: f64) -> usize {
    (x - 0.5).ceil().max(0.0) as usize
}

impl SimConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Apply a `key=value` override.
    pub fn set_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "mt" | "tx_antennas" => self.tx_antennas = parse_num(key, v)?,
            "mr" | "rx_antennas" => self.rx_antennas = parse_num(key, v)?,
            "n" | "subcarriers" => self.subcarriers = parse_num(key, v)?,
            "k" | "active" => self.active = parse_num(key, v)?,
            "q" | "order" => self.order = parse_num(key, v)?,
            "system" => {
                let p: Vec<usize> = v
                    .trim_matches(|c| c == '(' || c == ')')
                    .split(',')
                    .map(|s| parse_num(key, s.trim()))
                    .collect::<Result<_>>()?;
                let [mt, mr, n, k, q] = p[..] else {
                    return Err(Error::Config(format!("system {v:?} needs 5 entries")));
                };
                (self.tx_antennas, self.rx_antennas, self.subcarriers) = (mt, mr, n);
                (self.active, self.order) = (k, q);
            }
            "alpha_max" => self.alpha_max = parse_opt(key, v)?,
            "k_nu" => self.k_nu = parse_num(key, v)?,
            "l_max" => self.l_max = parse_opt(key, v)?,
            "delta_f" => self.delta_f = parse_num(key, v)?,
            "c2" => self.c2 = parse_opt(key, v)?,
            "ofdm" => self.ofdm = parse_bool(key, v)?,
            "paths" | "p" => self.paths = parse_num(key, v)?,
            "k_max" => self.k_max = parse_opt(key, v)?,
            "velocity_kmh" => self.velocity_kmh = parse_num(key, v)?,
            "carrier_hz" => self.carrier_hz = parse_num(key, v)?,
            "integer_doppler" => self.integer_doppler = parse_bool(key, v)?,
            "kappa_h" => self.kappa_h = parse_num(key, v)?,
            "detectors" | "detector" => {
                self.detectors = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "t1" => self.t1 = parse_num(key, v)?,
            "t2" => self.t2 = parse_num(key, v)?,
            "eps_th" => self.eps_th = parse_opt(key, v)?,
            "snr_db" | "snr" => self.snr_db = parse_snr_list(v)?,
            "min_bit_errors" => self.min_bit_errors = parse_num(key, v)?,
            "max_frames" => self.max_frames = parse_num(key, v)?,
            "batch_frames" => self.batch_frames = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "bound_samples" => self.bound_samples = parse_num(key, v)?,
            "geometry_samples" => self.geometry_samples = parse_num(key, v)?,
            "capacity_channels" => self.capacity_channels = parse_num(key, v)?,
            "capacity_inner" => self.capacity_inner = parse_num(key, v)?,
            "capacity_outer" => self.capacity_outer = parse_opt(key, v)?,
            "complexity_frames" => self.complexity_frames = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Maximum normalized Doppler `k_max = v f_c / (c delta_f)` unless set
    /// explicitly.
    pub fn k_max(&self) -> f64 {
        self.k_max
            .unwrap_or(self.velocity_kmh / 3.6 * self.carrier_hz / SPEED_OF_LIGHT / self.delta_f)
    }

    pub fn alpha_max(&self) -> usize {
        self.alpha_max.unwrap_or_else(|| round_half_down(self.k_max()))
    }

    pub fn l_max(&self) -> usize {
        self.l_max.unwrap_or(self.paths.saturating_sub(1))
    }

    pub fn gsm(&self) -> Result<GsmConfig> {
        GsmConfig::new(
            self.tx_antennas,
            self.rx_antennas,
            self.subcarriers,
            self.active,
            self.order,
        )
    }

    pub fn system(&self) -> Result<GsmSystem> {
        GsmSystem::new(self.gsm()?)
    }

    pub fn afdm(&self) -> Result<AfdmParams> {
        let (n, a, kn, l) = (self.subcarriers, self.alpha_max(), self.k_nu, self.l_max());
        let mut p = if self.ofdm {
            AfdmParams::ofdm(n, a, kn, l)?
        } else {
            AfdmParams::full_diversity(n, a, kn, l)?
        };
        p.delta_f = self.delta_f;
        if let Some(c2) = self.c2 {
            p = p.with_c2(c2);
        }
        Ok(p)
    }

    pub fn profile(&self) -> PathProfile {
        PathProfile {
            paths: self.paths,
            l_max: self.l_max(),
            k_max: self.k_max(),
            integer_doppler: self.integer_doppler,
        }
    }

    /// Resolve detector names; bare `grcd`/`rscd` take `t1`, `eps_th`, `t2`.
    pub fn detector_kinds(&self) -> Result<Vec<DetectorKind>> {
        if self.detectors.is_empty() {
            return Err(Error::Config("no detector selected".into()));
        }
        self.detectors
            .iter()
            .map(|s| {
                let kind: DetectorKind = s.parse()?;
                Ok(match kind {
                    DetectorKind::Grcd { .. } if !s.contains(':') => DetectorKind::Grcd {
                        t1: self.t1,
                        eps_th: self.eps_th,
                    },
                    DetectorKind::Rscd { .. } if !s.contains(':') => {
                        DetectorKind::Rscd { t2: self.t2 }
                    }
                    k => k,
                })
            })
            .collect()
    }

    /// Check everything a run needs.
    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.afdm()?;
        self.detector_kinds()?;
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        if self.l_max() >= self.subcarriers {
            return Err(Error::Config("l_max must be below N".into()));
        }
        if !(0.0..1.0).contains(&self.kappa_h) {
            return Err(Error::Config(format!("kappa_h = {} must lie in [0, 1)", self.kappa_h)));
        }
        if !(self.k_max() >= 0.0) || !self.k_max().is_finite() {
            return Err(Error::Config("k_max must be finite and non-negative".into()));
        }
        if self.t1 == 0 || self.t2 == 0 {
            return Err(Error::Config("t1 and t2 must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db must be a non-empty list of numbers".into()));
        }
        if self.max_frames == 0 || self.batch_frames == 0 {
            return Err(Error::Config("max_frames and batch_frames must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` rendering with every derived value resolved;
    /// parsing it back gives an equivalent configuration.
    pub fn canonical_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mt", self.tx_antennas.to_string());
        kv("mr", self.rx_antennas.to_string());
        kv("n", self.subcarriers.to_string());
        kv("k", self.active.to_string());
        kv("q", self.order.to_string());
        kv("alpha_max", self.alpha_max().to_string());
        kv("k_nu", self.k_nu.to_string());
        kv("l_max", self.l_max().to_string());
        kv("delta_f", self.delta_f.to_string());
        kv("c2", fmt_opt(&self.c2));
        kv("ofdm", self.ofdm.to_string());
        kv("paths", self.paths.to_string());
        kv("k_max", self.k_max().to_string());
        kv("integer_doppler", self.integer_doppler.to_string());
        kv("kappa_h", self.kappa_h.to_string());
        kv("detectors", self.detectors.join(","));
        kv("t1", self.t1.to_string());
        kv("t2", self.t2.to_string());
        kv("eps_th", fmt_opt(&self.eps_th));
        kv("snr_db", list(&self.snr_db));
        kv("min_bit_errors", self.min_bit_errors.to_string());
        kv("max_frames", self.max_frames.to_string());
        kv("batch_frames", self.batch_frames.to_string());
        kv("seed", self.seed.to_string());
        kv("bound_samples", self.bound_samples.to_string());
        kv("geometry_samples", self.geometry_samples.to_string());
        kv("capacity_channels", self.capacity_channels.to_string());
        kv("capacity_inner", self.capacity_inner.to_string());
        kv("capacity_outer", fmt_opt(&self.capacity_outer));
        kv("complexity_frames", self.complexity_frames.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_text`].
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
