use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{path_operators, shuffle, PathProfile, PathSet};
use crate::linalg::{gauss_legendre, rank_from_singular, singular_values};
use crate::mapper::GsmSystem;
use crate::waveform::AfdmParams;
use crate::{CMatrix, Error, Result, C64};

/// Relative singular-value tolerance used for ranks.
pub const RANK_TOL: f64 = 1e-9;

/// Largest frame (in bits) enumerated exactly by the union bound.
pub const EXACT_BOUND_BITS: usize = 14;

/// `Xi(z)`: column `m_t P + p` is `H_p z_{m_t}` for the antenna-major
/// frame `z` (blocks of N per antenna).
pub fn build_xi(z: &[C64], per_path: &[CMatrix]) -> CMatrix {
    let p = per_path.len();
    let n = per_path[0].nrows();
    let mt = z.len() / n;
    let mut xi = CMatrix::zeros(n, p * mt);
    for m in 0..mt {
        let zm = &z[m * n..(m + 1) * n];
        for (pi, hp) in per_path.iter().enumerate() {
            let mut col = xi.column_mut(m * p + pi);
            for r in 0..n {
                let mut acc = C64::default();
                for (c, v) in zm.iter().enumerate() {
                    acc += hp[(r, c)] * v;
                }
                col[r] = acc;
            }
        }
    }
    xi
}

/// Gains stacked so that `y_{m_r} = Xi(z) h_{m_r}`: entry
/// `m_r (M_t P) + m_t P + p` is `h_{p, m_r, m_t}`.
pub fn stacked_gains(paths: &PathSet) -> Vec<C64> {
    let (p, mr, mt) = (paths.paths(), paths.rx_antennas, paths.tx_antennas);
    let mut out = Vec::with_capacity(p * mr * mt);
    for r in 0..mr {
        for t in 0..mt {
            for pi in 0..p {
                out.push(paths.gain(pi, r, t));
            }
        }
    }
    out
}

/// Non-zero eigenvalues of `Xi^H Xi`.
pub fn event_eigenvalues(xi: &CMatrix) -> Vec<f64> {
    let s = singular_values(xi);
    let r = rank_from_singular(&s, RANK_TOL);
    s[..r].iter().map(|v| v * v).collect()
}

/// Fixed 64-node Gauss-Legendre rule on `[0, pi/2]`.
pub struct UpepQuadrature {
    sin2: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for UpepQuadrature {
    fn default() -> Self {
        Self::new(64)
    }
}

impl UpepQuadrature {
    pub fn new(nodes: usize) -> Self {
        let (x, w) = gauss_legendre(nodes, 0.0, FRAC_PI_2);
        Self {
            sin2: x.iter().map(|t| t.sin().powi(2)).collect(),
            weights: w.iter().map(|w| w / PI).collect(),
        }
    }

    /// `(1/pi) int_0^{pi/2} prod_i (1 + lambda_i gamma / (4 P sin^2))^{-M_r}`.
    pub fn upep(&self, eigs: &[f64], gamma: f64, paths: usize, rx: usize) -> f64 {
        let c = gamma / (4.0 * paths as f64);
        self.sin2
            .iter()
            .zip(&self.weights)
            .map(|(s2, w)| {
                let log: f64 = eigs.iter().map(|l| (1.0 + l * c / s2).ln()).sum();
                w * (-(rx as f64) * log).exp()
            })
            .sum()
    }
}

/// Unconditional PEP of one error event with eigenvalues `eigs`.
pub fn upep(eigs: &[f64], gamma: f64, paths: usize, rx: usize) -> Result<f64> {
    if eigs.is_empty() {
        return Err(Error::Input("error event has rank 0".into()));
    }
    Ok(UpepQuadrature::default().upep(eigs, gamma, paths, rx))
}

/// High-SNR bound `(1/2) prod_i (lambda_i gamma / (4P))^{-M_r}`.
pub fn upep_high_snr(eigs: &[f64], gamma: f64, paths: usize, rx: usize) -> f64 {
    let c = gamma / (4.0 * paths as f64);
    let log: f64 = eigs.iter().map(|l| (l * c).ln()).sum();
    0.5 * (-(rx as f64) * log).exp()
}

/// A delay/Doppler geometry with its probability weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryState {
    pub delays: Vec<usize>,
    pub dopplers: Vec<f64>,
    pub weight: f64,
}

/// `P(round(k_max cos phi) = k)` for `phi ~ U[-pi, pi]`.
pub fn integer_doppler_pmf(k_max: f64) -> Vec<(i64, f64)> {
    if k_max == 0.0 {
        return vec![(0, 1.0)];
    }
    let cdf = |c: f64| 1.0 - c.clamp(-1.0, 1.0).acos() / PI;
    let top = k_max.abs().round() as i64 + 1;
    (-top..=top)
        .map(|k| {
            let hi = (k as f64 + 0.5) / k_max.abs();
            let lo = (k as f64 - 0.5) / k_max.abs();
            (k, cdf(hi) - cdf(lo))
        })
        .filter(|&(_, p)| p > 1e-15)
        .collect()
}

/// Geometry distribution of a path profile: exact enumeration for integer
/// Doppler, otherwise `samples` equally weighted draws.
pub fn geometry_states<R: Rng + ?Sized>(
    profile: &PathProfile,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<GeometryState>> {
    let p = profile.paths;
    if !profile.integer_doppler {
        return (0..samples.max(1))
            .map(|_| {
                let ps = crate::channel::generate_paths(profile, 1, 1, rng)?;
                Ok(GeometryState {
                    delays: ps.delays,
                    dopplers: ps.dopplers,
                    weight: 1.0 / samples.max(1) as f64,
                })
            })
            .collect();
    }
    let pmf = integer_doppler_pmf(profile.k_max);
    let delay_opts: Vec<usize> = if profile.l_max == 0 {
        vec![0]
    } else {
        (1..=profile.l_max).collect()
    };
    let mut states = vec![GeometryState {
        delays: vec![],
        dopplers: vec![],
        weight: 1.0,
    }];
    for i in 0..p {
        let delays: Vec<usize> = if i == 0 { vec![0] } else { delay_opts.clone() };
        let dw = 1.0 / delays.len() as f64;
        let mut next = Vec::new();
        for s in &states {
            for &l in &delays {
                for &(k, pk) in &pmf {
                    let mut t = s.clone();
                    t.delays.push(l);
                    t.dopplers.push(k as f64);
                    t.weight *= dw * pk;
                    next.push(t);
                }
            }
        }
        states = next;
    }
    Ok(states)
}

/// Distinct per-group difference vectors with the number of ordered
/// codeword pairs producing each and the summed bit Hamming distance.
pub fn group_difference_table(sys: &GsmSystem) -> Vec<(Vec<C64>, u64, u64)> {
    let words = sys.group_codewords();
    let key = |v: &[C64]| -> Vec<i64> {
        v.iter()
            .flat_map(|c| [(c.re * 1e9).round() as i64, (c.im * 1e9).round() as i64])
            .collect()
    };
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut table: Vec<(Vec<C64>, u64, u64)> = Vec::new();
    for (i, (_, a)) in words.iter().enumerate() {
        for (j, (_, b)) in words.iter().enumerate() {
            let d: Vec<C64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            let ham = (i ^ j).count_ones() as u64;
            let k = key(&d);
            let slot = *index.entry(k).or_insert_with(|| {
                table.push((d, 0, 0));
                table.len() - 1
            });
            table[slot].1 += 1;
            table[slot].2 += ham;
        }
    }
    // zero difference first so that index 0 always means "no error here"
    table.sort_by_key(|(d, _, _)| d.iter().any(|v| v.norm() > 1e-12));
    table
}

/// Union-bound output per SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub gamma: Vec<f64>,
    pub ber: Vec<f64>,
    pub stderr: Vec<f64>,
    pub exact: bool,
    pub samples: usize,
}

fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Exact union bound `(1/(2^L L)) sum_{ordered pairs} d_H UPEP`, averaged
/// over the geometry states. `gammas` are the SNR values inserted in UPEP.
pub fn union_bound_exact(
    sys: &GsmSystem,
    params: &AfdmParams,
    geometries: &[GeometryState],
    gammas: &[f64],
) -> Result<BoundResult> {
    let cfg = &sys.config;
    let l = cfg.bits_per_frame();
    if l > EXACT_BOUND_BITS {
        return Err(Error::Capability(format!(
            "exact union bound limited to 2^{EXACT_BOUND_BITS} codewords, frame has 2^{l}"
        )));
    }
    let table = group_difference_table(sys);
    let n = cfg.subcarriers;
    let mt = cfg.tx_antennas;
    let quad = UpepQuadrature::default();
    let mut totals = vec![0.0; gammas.len()];
    for geo in geometries {
        let ps = PathSet::new(
            1,
            1,
            geo.delays.clone(),
            geo.dopplers.clone(),
            vec![C64::new(1.0, 0.0); geo.delays.len()],
        )?;
        let ops = path_operators(&ps, params)?;
        let p = ops.len();
        // split the outer group across workers, ordered reduction
        let partial: Vec<Vec<f64>> = (0..table.len())
            .into_par_iter()
            .map(|first| {
                let mut acc = vec![0.0; gammas.len()];
                let mut digits = vec![0usize; n];
                digits[0] = first;
                let mut x = vec![C64::default(); n * mt];
                loop {
                    if digits.iter().any(|&d| d != 0) {
                        let mut weight = 0.0;
                        for g in 0..n {
                            let (ref d, _, ham) = table[digits[g]];
                            x[g * mt..(g + 1) * mt].copy_from_slice(d);
                            let mut w = ham as f64;
                            for (h, &dh) in digits.iter().enumerate() {
                                if h != g {
                                    w *= table[dh].1 as f64;
                                }
                            }
                            weight += w;
                        }
                        let xi = build_xi(&shuffle(&x, n, mt), &ops);
                        let eigs = event_eigenvalues(&xi);
                        for (a, &gm) in acc.iter_mut().zip(gammas) {
                            *a += weight * quad.upep(&eigs, gm, p, cfg.rx_antennas);
                        }
                    }
                    if !odometer(&mut digits[1..], table.len()) {
                        break;
                    }
                }
                acc
            })
            .collect();
        for part in partial {
            for (t, v) in totals.iter_mut().zip(part) {
                *t += geo.weight * v;
            }
        }
    }
    let norm = (1u64 << l) as f64 * l as f64;
    Ok(BoundResult {
        gamma: gammas.to_vec(),
        ber: totals.into_iter().map(|t| t / norm).collect(),
        stderr: vec![0.0; gammas.len()],
        exact: true,
        samples: 0,
    })
}

/// Monte-Carlo union bound: `samples` uniformly drawn ordered pairs with
/// `b_c != b_e`, each under an independently drawn geometry.
pub fn union_bound_sampled<R: Rng + ?Sized>(
    sys: &GsmSystem,
    params: &AfdmParams,
    profile: &PathProfile,
    gammas: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<BoundResult> {
    let cfg = &sys.config;
    let l = cfg.bits_per_frame();
    let (n, mt) = (cfg.subcarriers, cfg.tx_antennas);
    let quad = UpepQuadrature::default();
    let mut sum = vec![0.0; gammas.len()];
    let mut sum2 = vec![0.0; gammas.len()];
    let samples = samples.max(2);
    for _ in 0..samples {
        let bc: Vec<bool> = (0..l).map(|_| rng.random()).collect();
        let mut be = bc.clone();
        while be == bc {
            be = (0..l).map(|_| rng.random()).collect();
        }
        let ham = bc.iter().zip(&be).filter(|(a, b)| a != b).count() as f64;
        let xc = crate::mapper::build_frame(&bc, cfg, &sys.codebook, &sys.constellation)?;
        let xe = crate::mapper::build_frame(&be, cfg, &sys.codebook, &sys.constellation)?;
        let e: Vec<C64> = (xc - xe).as_slice().to_vec();
        let ps = crate::channel::generate_paths(profile, 1, 1, rng)?;
        let ops = path_operators(&ps, params)?;
        let eigs = event_eigenvalues(&build_xi(&shuffle(&e, n, mt), &ops));
        for (i, &g) in gammas.iter().enumerate() {
            let v = if eigs.is_empty() {
                0.5 * ham
            } else {
                ham * quad.upep(&eigs, g, ops.len(), cfg.rx_antennas)
            };
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    // (1/(2^L L)) * 2^L (2^L - 1) * E[d_H UPEP]
    let scale = ((l as f64) * std::f64::consts::LN_2).exp_m1() / l as f64;
    let ns = samples as f64;
    let mut ber = Vec::new();
    let mut se = Vec::new();
    for (s, s2) in sum.iter().zip(&sum2) {
        let mean = s / ns;
        let var = (s2 / ns - mean * mean).max(0.0) * ns / (ns - 1.0);
        ber.push(scale * mean);
        se.push(scale * (var / ns).sqrt());
    }
    Ok(BoundResult {
        gamma: gammas.to_vec(),
        ber,
        stderr: se,
        exact: false,
        samples,
    })
}

/// Minimum rank, diversity order `V_D = r_min M_r` and coding gain
/// `V_C = min_e (prod lambda_i)^{1/r}` over all non-zero error events of one
/// geometry (exhaustive over the group difference table).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityResult {
    pub min_rank: usize,
    pub diversity_order: usize,
    pub coding_gain: f64,
    pub events: u64,
}

pub fn diversity_and_coding_gain(
    sys: &GsmSystem,
    per_path: &[CMatrix],
) -> Result<DiversityResult> {
    let cfg = &sys.config;
    let table = group_difference_table(sys);
    let (n, mt) = (cfg.subcarriers, cfg.tx_antennas);
    let events = (table.len() as f64).powi(n as i32);
    if events > 5e7 {
        return Err(Error::Capability(format!(
            "{events:.0} error events are too many for exhaustive enumeration"
        )));
    }
    let parts: Vec<(usize, f64, u64)> = (0..table.len())
        .into_par_iter()
        .map(|first| {
            let mut digits = vec![0usize; n];
            digits[0] = first;
            let mut x = vec![C64::default(); n * mt];
            let mut best = (usize::MAX, f64::INFINITY, 0u64);
            loop {
                if digits.iter().any(|&d| d != 0) {
                    for g in 0..n {
                        x[g * mt..(g + 1) * mt].copy_from_slice(&table[digits[g]].0);
                    }
                    let eigs = event_eigenvalues(&build_xi(&shuffle(&x, n, mt), per_path));
                    let r = eigs.len();
                    best.0 = best.0.min(r);
                    if r > 0 {
                        let gm = (eigs.iter().map(|l| l.ln()).sum::<f64>() / r as f64).exp();
                        best.1 = best.1.min(gm);
                    }
                    best.2 += 1;
                }
                if !odometer(&mut digits[1..], table.len()) {
                    break;
                }
            }
            best
        })
        .collect();
    let min_rank = parts.iter().map(|p| p.0).min().unwrap_or(0);
    let coding_gain = parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(DiversityResult {
        min_rank,
        diversity_order: min_rank * cfg.rx_antennas,
        coding_gain,
        events: parts.iter().map(|p| p.2).sum(),
    })
}
