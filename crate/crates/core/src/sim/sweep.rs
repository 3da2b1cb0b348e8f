use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::SimConfig;
use super::frame::Link;
use crate::analysis::{
    dcmc_capacity, geometry_states, union_bound_exact, union_bound_sampled, EXACT_BOUND_BITS,
};
use crate::channel::{generate_paths, EffectiveChannel, NoiseModel};
use crate::detect::{detect, DetectorKind, OpCounters};
use crate::{Error, Result};

/// Stream id reserved for the analysis drivers; frame streams count up from 0.
const ANALYSIS_STREAM: u64 = u64::MAX;

/// One SNR point of a simulated BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Standard error of the BER from the per-frame error counts.
    pub stderr: f64,
    pub frames: u64,
    pub wall_time_s: f64,
    pub ops: OpCounters,
    /// Fewer than `min_bit_errors` errors were seen.
    pub low_confidence: bool,
}

impl BerPoint {
    /// Copy with the wall time zeroed, for comparisons between runs.
    pub fn untimed(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub detector: String,
    pub points: Vec<BerPoint>,
}

/// Value of an analytic curve at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPoint {
    pub snr_db: f64,
    pub value: f64,
    pub stderr: f64,
    /// `;`-separated markers such as `exact`, `sampled`, `vacuous`.
    pub flags: String,
}

/// The RNG of frame `index`: the master seed selects the key, the frame
/// index the stream, so results do not depend on scheduling. Every SNR
/// point reuses the same frame streams.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn analysis_rng(seed: u64) -> ChaCha8Rng {
    frame_rng(seed, ANALYSIS_STREAM)
}

pub fn link_from_config(cfg: &SimConfig) -> Result<Link> {
    cfg.validate()?;
    Link::new(cfg.system()?, cfg.afdm()?, cfg.profile(), cfg.kappa_h)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

#[derive(Default, Clone)]
struct Tally {
    errors: u64,
    errors_sq: u128,
    ops: OpCounters,
}

/// Run `kinds` on shared frames at every SNR of `cfg`. A point stops once
/// every detector has `min_errors` bit errors (checked between batches) or
/// after `max_frames` frames. `workers = 0` uses all cores.
fn simulate(
    cfg: &SimConfig,
    kinds: &[DetectorKind],
    min_errors: u64,
    max_frames: u64,
    workers: usize,
) -> Result<Vec<BerCurve>> {
    let link = link_from_config(cfg)?;
    let cfg_sys = &link.sys.config;
    let bits_per_frame = cfg_sys.bits_per_frame() as u64;
    let pool = thread_pool(workers)?;
    let mut curves: Vec<BerCurve> = kinds
        .iter()
        .map(|k| BerCurve {
            detector: k.to_string(),
            points: Vec::new(),
        })
        .collect();
    for &snr_db in &cfg.snr_db {
        let noise = NoiseModel::from_db(snr_db, cfg_sys.active, cfg_sys.tx_antennas)?;
        let start = Instant::now();
        let mut tallies = vec![Tally::default(); kinds.len()];
        let mut frames = 0u64;
        while frames < max_frames && tallies.iter().any(|t| t.errors < min_errors) {
            let end = (frames + cfg.batch_frames).min(max_frames);
            let batch: Vec<Vec<(u64, OpCounters)>> = pool.install(|| {
                (frames..end)
                    .into_par_iter()
                    .map(|f| {
                        let mut rng = frame_rng(cfg.seed, f);
                        let s = link.frame(noise.n0, &mut rng)?;
                        kinds
                            .iter()
                            .map(|&k| {
                                let d = detect(k, &s.y, &s.g, noise.gamma_s, noise.n0, &link.sys)?;
                                let e = d.bits.iter().zip(&s.bits).filter(|(a, b)| a != b).count();
                                Ok((e as u64, d.ops))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for per_frame in batch {
                for (t, (e, ops)) in tallies.iter_mut().zip(per_frame) {
                    t.errors += e;
                    t.errors_sq += (e as u128) * (e as u128);
                    t.ops += ops;
                }
            }
            frames = end;
        }
        let wall = start.elapsed().as_secs_f64();
        for (curve, t) in curves.iter_mut().zip(tallies) {
            let bits = frames * bits_per_frame;
            let fr = frames as f64;
            let mean = t.errors as f64 / fr;
            let var = if frames > 1 {
                ((t.errors_sq as f64 - fr * mean * mean) / (fr - 1.0)).max(0.0)
            } else {
                0.0
            };
            log::info!(
                "{} at {snr_db} dB: {} errors in {bits} bits ({frames} frames, {wall:.1} s)",
                curve.detector,
                t.errors
            );
            curve.points.push(BerPoint {
                snr_db,
                bits,
                errors: t.errors,
                ber: t.errors as f64 / bits as f64,
                stderr: (var / fr).sqrt() / bits_per_frame as f64,
                frames,
                wall_time_s: wall,
                ops: t.ops,
                low_confidence: t.errors < min_errors,
            });
        }
    }
    Ok(curves)
}

/// Monte-Carlo BER of every configured detector over shared frames.
pub fn run_ber_sweep(cfg: &SimConfig, workers: usize) -> Result<Vec<BerCurve>> {
    simulate(
        cfg,
        &cfg.detector_kinds()?,
        cfg.min_bit_errors,
        cfg.max_frames,
        workers,
    )
}

/// Operation counters of every configured detector over exactly
/// `complexity_frames` shared frames per SNR.
pub fn run_complexity(cfg: &SimConfig, workers: usize) -> Result<Vec<BerCurve>> {
    simulate(
        cfg,
        &cfg.detector_kinds()?,
        u64::MAX,
        cfg.complexity_frames,
        workers,
    )
}

/// Union bound on the MLD BER at each SNR. Exact enumeration of codeword
/// pairs when the frame has at most 14 bits (geometries enumerated for
/// integer Doppler, sampled otherwise), else a Monte-Carlo pair sample.
/// The UPEP is evaluated at `1 / N0`.
pub fn run_bound_sweep(cfg: &SimConfig) -> Result<Vec<AnalysisPoint>> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let params = cfg.afdm()?;
    let profile = cfg.profile();
    let gammas: Vec<f64> = cfg
        .snr_db
        .iter()
        .map(|&s| NoiseModel::from_db(s, cfg.active, cfg.tx_antennas).map(|m| 1.0 / m.n0))
        .collect::<Result<_>>()?;
    let mut rng = analysis_rng(cfg.seed);
    let res = if sys.config.bits_per_frame() <= EXACT_BOUND_BITS {
        let geos = geometry_states(&profile, cfg.geometry_samples, &mut rng)?;
        union_bound_exact(&sys, &params, &geos, &gammas)?
    } else {
        union_bound_sampled(&sys, &params, &profile, &gammas, cfg.bound_samples, &mut rng)?
    };
    Ok(cfg
        .snr_db
        .iter()
        .zip(res.ber.iter().zip(&res.stderr))
        .map(|(&snr_db, (&value, &stderr))| {
            let mut flags = vec![if res.exact { "exact" } else { "sampled" }];
            if value > 1.0 {
                flags.push("vacuous");
            }
            AnalysisPoint {
                snr_db,
                value,
                stderr,
                flags: flags.join(";"),
            }
        })
        .collect())
}

/// DCMC capacity in bits per subcarrier. Every SNR point reuses the same
/// channel and noise draws, so the curve is smooth in SNR.
pub fn run_capacity_sweep(cfg: &SimConfig) -> Result<Vec<AnalysisPoint>> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let params = cfg.afdm()?;
    let profile = cfg.profile();
    cfg.snr_db
        .iter()
        .map(|&snr_db| {
            let noise = NoiseModel::from_db(snr_db, cfg.active, cfg.tx_antennas)?;
            let mut rng = analysis_rng(cfg.seed);
            let sample = |rng: &mut ChaCha8Rng| {
                let ps = generate_paths(&profile, cfg.rx_antennas, cfg.tx_antennas, rng)?;
                Ok(EffectiveChannel::assemble(&ps, &params)?.g)
            };
            let c = dcmc_capacity(
                &sys,
                noise.n0,
                cfg.capacity_channels,
                cfg.capacity_inner,
                cfg.capacity_outer,
                sample,
                &mut rng,
            )?;
            Ok(AnalysisPoint {
                snr_db,
                value: c.value,
                stderr: c.stderr,
                flags: if c.exact_inner { "exact" } else { "sampled" }.into(),
            })
        })
        .collect()
}
