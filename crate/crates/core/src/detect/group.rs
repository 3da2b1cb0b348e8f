//! Per-group detectors operating on one `M_t`-length soft estimate.
//!
//! Operation units: every complex distance or magnitude, every `exp`/`ln`
//! and every comparison (sorting comparisons included) counts as one.

use std::cmp::Ordering;

use super::{GroupDecision, OpCounters};
use crate::mapper::{Constellation, TapCodebook};
use crate::{Error, Result, C64};

/// Nearest constellation point per entry, lowest index on ties.
pub fn symbolwise_ml(values: &[C64], constellation: &Constellation, ops: &mut OpCounters) -> Vec<usize> {
    let q = constellation.order() as u64;
    ops.symbol_metrics += q * values.len() as u64;
    ops.units += (2 * q - 1) * values.len() as u64;
    values.iter().map(|&v| constellation.nearest(v).0).collect()
}

/// `||x - Upsilon a||^2` for symbols `symbols` placed on `active`.
pub fn residual(x: &[C64], active: &[usize], symbols: &[usize], constellation: &Constellation) -> f64 {
    let mut acc = 0.0;
    let mut k = 0;
    for (m, v) in x.iter().enumerate() {
        if k < active.len() && active[k] == m {
            acc += (v - constellation.point(symbols[k])).norm_sqr();
            k += 1;
        } else {
            acc += v.norm_sqr();
        }
    }
    acc
}

/// LS projection onto one TAP (entry selection), symbol-wise ML and the
/// resulting residual.
pub fn check_tap(
    x: &[C64],
    tap: &[usize],
    constellation: &Constellation,
    ops: &mut OpCounters,
) -> (Vec<usize>, f64) {
    let picked: Vec<C64> = tap.iter().map(|&a| x[a]).collect();
    let symbols = symbolwise_ml(&picked, constellation, ops);
    ops.tap_checks += 1;
    ops.units += x.len() as u64;
    let eps = residual(x, tap, &symbols, constellation);
    (symbols, eps)
}

/// Per-antenna activity LLRs
/// `ln K - ln(M_t - K) + |x|^2/N0 + ln sum_q exp(-|x - a_q|^2 / N0)`.
pub fn llr_per_antenna(
    x: &[C64],
    n0: f64,
    active: usize,
    constellation: &Constellation,
    ops: &mut OpCounters,
) -> Result<Vec<f64>> {
    let mt = x.len();
    if active >= mt {
        return Err(Error::Capability(format!(
            "LLR detection needs K < M_t (K = {active}, M_t = {mt})"
        )));
    }
    if !(n0 > 0.0) {
        return Err(Error::Numeric(format!("noise variance must be positive, got {n0}")));
    }
    let prior = (active as f64).ln() - ((mt - active) as f64).ln();
    let q = constellation.order() as u64;
    let mut metrics = vec![0.0; constellation.order()];
    let out = x
        .iter()
        .map(|&v| {
            for (m, p) in metrics.iter_mut().zip(constellation.points()) {
                *m = -(v - p).norm_sqr() / n0;
            }
            prior + v.norm_sqr() / n0 + crate::linalg::log_sum_exp(&metrics)
        })
        .collect();
    // magnitude + Q distances + (Q-1) max comparisons + Q exp + ln
    ops.units += mt as u64 * (3 * q + 1);
    Ok(out)
}

/// Indices sorted by `key` descending, stable (lower index first on ties),
/// counting comparator calls.
fn sorted_desc(key: &[f64], ops: &mut OpCounters) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    let mut cmps = 0u64;
    idx.sort_by(|&a, &b| {
        cmps += 1;
        key[b].partial_cmp(&key[a]).unwrap_or(Ordering::Equal)
    });
    ops.units += cmps;
    idx
}

fn sorted_asc(key: &[f64], ops: &mut OpCounters) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    let mut cmps = 0u64;
    idx.sort_by(|&a, &b| {
        cmps += 1;
        key[a].partial_cmp(&key[b]).unwrap_or(Ordering::Equal)
    });
    ops.units += cmps;
    idx
}

fn mask_of(set: &[usize]) -> u64 {
    set.iter().fold(0, |m, &a| m | (1 << a))
}

/// The `k` antennas with the largest LLRs (lower index first on ties),
/// returned in ascending antenna order.
pub fn top_k_antennas(llr: &[f64], k: usize, ops: &mut OpCounters) -> Vec<usize> {
    let order = sorted_desc(llr, ops);
    let mut g = order[..k].to_vec();
    g.sort_unstable();
    g
}

/// Plain LLR detector: the `K` largest LLRs form the activation set even
/// when it is not a legal TAP. The reported TAP index is then the nearest
/// legal TAP (Hamming distance, lowest index), so bits remain decodable.
pub fn llrd_group(
    x: &[C64],
    n0: f64,
    codebook: &TapCodebook,
    constellation: &Constellation,
    ops: &mut OpCounters,
) -> Result<GroupDecision> {
    let llr = llr_per_antenna(x, n0, codebook.active(), constellation, ops)?;
    let g = top_k_antennas(&llr, codebook.active(), ops);
    let picked: Vec<C64> = g.iter().map(|&a| x[a]).collect();
    let symbols = symbolwise_ml(&picked, constellation, ops);
    let tap = codebook.nearest(mask_of(&g)).0;
    let eps = residual(x, &g, &symbols, constellation);
    Ok(GroupDecision {
        tap,
        active: g,
        symbols,
        residual: eps,
    })
}

/// TAP-checking LLR detector. An illegal preliminary set is replaced by the
/// legal TAP at minimum Hamming distance; among several, the one maximising
/// `||z_u . lambda||^2` wins (lowest index on ties).
pub fn tc_llrd_group(
    x: &[C64],
    n0: f64,
    codebook: &TapCodebook,
    constellation: &Constellation,
    ops: &mut OpCounters,
) -> Result<GroupDecision> {
    let llr = llr_per_antenna(x, n0, codebook.active(), constellation, ops)?;
    let g = top_k_antennas(&llr, codebook.active(), ops);
    let tap = tc_select(&llr, &g, codebook, ops);
    let active = codebook.tap(tap).to_vec();
    let picked: Vec<C64> = active.iter().map(|&a| x[a]).collect();
    let symbols = symbolwise_ml(&picked, constellation, ops);
    let eps = residual(x, &active, &symbols, constellation);
    Ok(GroupDecision {
        tap,
        active,
        symbols,
        residual: eps,
    })
}

/// TAP-checking step alone: map a preliminary set `g` to a legal TAP index.
pub fn tc_select(llr: &[f64], g: &[usize], codebook: &TapCodebook, ops: &mut OpCounters) -> usize {
    let gm = mask_of(g);
    let c = codebook.len() as u64;
    let dists: Vec<u32> = (0..codebook.len())
        .map(|i| (codebook.mask(i) ^ gm).count_ones())
        .collect();
    // C distances, C-1 comparisons for the minimum
    ops.units += 2 * c - 1;
    let d_min = *dists.iter().min().expect("codebook is non-empty");
    let cands: Vec<usize> = (0..codebook.len()).filter(|&i| dists[i] == d_min).collect();
    if d_min == 0 {
        return cands[0];
    }
    // membership test per legal TAP
    ops.units += c;
    if cands.len() == 1 {
        return cands[0];
    }
    let mut best = (cands[0], f64::NEG_INFINITY);
    for &u in &cands {
        let score: f64 = codebook.tap(u).iter().map(|&a| llr[a] * llr[a]).sum();
        if score > best.1 {
            best = (u, score);
        }
    }
    // K products per candidate, U-1 comparisons
    ops.units += cands.len() as u64 * codebook.active() as u64 + cands.len() as u64 - 1;
    best.0
}

/// Greedy residual check detector.
///
/// Antennas are visited by descending `|x|`. Each iteration checks the
/// not-yet-checked legal TAPs containing the current antenna and keeps the
/// one of minimum residual; checked TAPs leave the pool. Stops when the
/// residual falls below `eps_th`, after `t1` iterations, or when the pool
/// for the next antenna is empty.
pub fn grcd_group(
    x: &[C64],
    codebook: &TapCodebook,
    constellation: &Constellation,
    t1: usize,
    eps_th: f64,
    ops: &mut OpCounters,
) -> GroupDecision {
    grcd_group_traced(x, codebook, constellation, t1, eps_th, ops).0
}

/// As [`grcd_group`], also returning the TAP indices checked per iteration.
pub fn grcd_group_traced(
    x: &[C64],
    codebook: &TapCodebook,
    constellation: &Constellation,
    t1: usize,
    eps_th: f64,
    ops: &mut OpCounters,
) -> (GroupDecision, Vec<Vec<usize>>) {
    let mags: Vec<f64> = x.iter().map(|v| v.norm_sqr()).collect();
    ops.units += x.len() as u64;
    let order = sorted_desc(&mags, ops);
    let mut unchecked = vec![true; codebook.len()];
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    for &lt in &order {
        if iterations >= t1 {
            break;
        }
        let pool: Vec<usize> = (0..codebook.len())
            .filter(|&i| unchecked[i] && codebook.mask(i) & (1 << lt) != 0)
            .collect();
        ops.units += codebook.len() as u64;
        if pool.is_empty() {
            if best.is_some() {
                break;
            }
            continue;
        }
        iterations += 1;
        let mut it_best: Option<(usize, Vec<usize>, f64)> = None;
        for &c in &pool {
            let (symbols, eps) = check_tap(x, codebook.tap(c), constellation, ops);
            if it_best.as_ref().is_none_or(|b| eps < b.2) {
                it_best = Some((c, symbols, eps));
            }
        }
        ops.units += pool.len() as u64 - 1;
        for &c in &pool {
            unchecked[c] = false;
        }
        trace.push(pool);
        let it_best = it_best.expect("pool is non-empty");
        ops.units += 1;
        if it_best.2 < eps_th {
            best = Some(it_best);
            break;
        }
        ops.units += 1;
        if best.as_ref().is_none_or(|b| it_best.2 < b.2) {
            best = Some(it_best);
        }
    }
    let (tap, symbols, eps) = best.unwrap_or_else(|| {
        // only reachable with a custom codebook that leaves some antennas unused
        let (s, e) = check_tap(x, codebook.tap(0), constellation, ops);
        (0, s, e)
    });
    (
        GroupDecision {
            tap,
            active: codebook.tap(tap).to_vec(),
            symbols,
            residual: eps,
        },
        trace,
    )
}

/// Reduced-space check detector: rank all legal TAPs by
/// `alpha_c = sum_k |x_hat - x|^2` over their positions (ascending, lower
/// index first on ties), check the first `t2`, keep the minimum residual.
pub fn rscd_group(
    x: &[C64],
    codebook: &TapCodebook,
    constellation: &Constellation,
    t2: usize,
    ops: &mut OpCounters,
) -> GroupDecision {
    let hard = symbolwise_ml(x, constellation, ops);
    let dev: Vec<f64> = x
        .iter()
        .zip(&hard)
        .map(|(v, &h)| (v - constellation.point(h)).norm_sqr())
        .collect();
    ops.units += x.len() as u64;
    let alpha: Vec<f64> = codebook
        .taps()
        .iter()
        .map(|tap| tap.iter().map(|&a| dev[a]).sum())
        .collect();
    let order = sorted_asc(&alpha, ops);
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for &c in order.iter().take(t2.max(1)) {
        let (symbols, eps) = check_tap(x, codebook.tap(c), constellation, ops);
        if best.as_ref().is_none_or(|b| eps < b.2) {
            best = Some((c, symbols, eps));
        }
    }
    ops.units += t2.clamp(1, codebook.len()) as u64 - 1;
    let (tap, symbols, eps) = best.expect("at least one TAP checked");
    GroupDecision {
        tap,
        active: codebook.tap(tap).to_vec(),
        symbols,
        residual: eps,
    }
}

/// Exhaustive per-group search over the given codewords; lowest index on ties.
pub fn group_mld(x: &[C64], codewords: &[Vec<C64>], ops: &mut OpCounters) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, d) in codewords.iter().enumerate() {
        let m: f64 = x.iter().zip(d).map(|(a, b)| (a - b).norm_sqr()).sum();
        if m < best.1 {
            best = (i, m);
        }
    }
    ops.codeword_metrics += codewords.len() as u64;
    ops.units += (codewords.len() * x.len() + codewords.len() - 1) as u64;
    best
}
