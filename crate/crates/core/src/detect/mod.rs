//! Joint maximum-likelihood detection and the LMMSE-based per-group
//! detectors (LMMSE-MLD, LLRD, TAP-checking LLRD, GRCD, RSCD).

mod group;

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

pub use group::{
    check_tap, grcd_group, grcd_group_traced, group_mld, llr_per_antenna, llrd_group, residual,
    rscd_group, symbolwise_ml, tc_llrd_group, tc_select, top_k_antennas,
};

use crate::linalg::{regularized_ls, CVector};
use crate::mapper::{GroupSymbols, GsmSystem};
use crate::{CMatrix, Error, Result, C64};

/// Largest frame size accepted by [`mld_joint`], in bits.
pub const MAX_JOINT_BITS: usize = 24;

/// Operation counters accumulated by the detectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// TAP candidates evaluated with LS + symbol-wise ML.
    pub tap_checks: u64,
    /// Scalar symbol distance evaluations inside symbol-wise ML.
    pub symbol_metrics: u64,
    /// Whole group or frame codeword metrics.
    pub codeword_metrics: u64,
    pub equalizer_solves: u64,
    /// Unified cost units of the per-group detection stage.
    pub units: u64,
    /// Groups processed.
    pub groups: u64,
    /// Largest per-group unit count seen.
    pub max_group_units: u64,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: Self) {
        self.tap_checks += o.tap_checks;
        self.symbol_metrics += o.symbol_metrics;
        self.codeword_metrics += o.codeword_metrics;
        self.equalizer_solves += o.equalizer_solves;
        self.units += o.units;
        self.groups += o.groups;
        self.max_group_units = self.max_group_units.max(o.max_group_units);
    }
}

impl OpCounters {
    pub fn mean_group_units(&self) -> f64 {
        if self.groups == 0 {
            0.0
        } else {
            self.units as f64 / self.groups as f64
        }
    }
}

/// One group's decision. `active` holds the antennas whose symbols were
/// detected; it differs from `codebook.tap(tap)` only for plain LLRD with an
/// illegal activation set.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDecision {
    pub tap: usize,
    pub active: Vec<usize>,
    pub symbols: Vec<usize>,
    pub residual: f64,
}

impl GroupDecision {
    pub fn symbols(&self) -> GroupSymbols {
        GroupSymbols {
            tap: self.tap,
            symbols: self.symbols.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub bits: Vec<bool>,
    pub groups: Vec<GroupDecision>,
    pub ops: OpCounters,
}

/// Detector selection with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorKind {
    Mld,
    LmmseMld,
    Llrd,
    TcLlrd,
    /// `t1` iterations; `eps_th = None` means `K N0`.
    Grcd { t1: usize, eps_th: Option<f64> },
    Rscd { t2: usize },
}

impl DetectorKind {
    pub fn needs_equalizer(&self) -> bool {
        !matches!(self, Self::Mld)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mld => write!(f, "mld"),
            Self::LmmseMld => write!(f, "lmmse-mld"),
            Self::Llrd => write!(f, "llrd"),
            Self::TcLlrd => write!(f, "tc-llrd"),
            Self::Grcd { t1, eps_th: None } => write!(f, "grcd:{t1}"),
            Self::Grcd {
                t1,
                eps_th: Some(e),
            } => write!(f, "grcd:{t1}:{e}"),
            Self::Rscd { t2 } => write!(f, "rscd:{t2}"),
        }
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    /// `mld`, `lmmse-mld`, `llrd`, `tc-llrd`, `grcd[:T1[:eps]]`, `rscd[:T2]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize, default: usize| -> Result<usize> {
            match parts.get(i) {
                None => Ok(default),
                Some(v) => v
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::Config(format!("bad detector parameter {v:?} in {s:?}"))),
            }
        };
        let kind = match parts[0].to_ascii_lowercase().as_str() {
            "mld" => Self::Mld,
            "lmmse-mld" => Self::LmmseMld,
            "llrd" | "lmmse-llrd" => Self::Llrd,
            "tc-llrd" | "lmmse-tc-llrd" => Self::TcLlrd,
            "grcd" => {
                let eps_th = match parts.get(2) {
                    None => None,
                    Some(v) => Some(
                        v.parse::<f64>()
                            .ok()
                            .filter(|e| *e >= 0.0)
                            .ok_or_else(|| Error::Config(format!("bad threshold {v:?}")))?,
                    ),
                };
                return Ok(Self::Grcd {
                    t1: num(1, 1)?,
                    eps_th,
                });
            }
            "rscd" => return Ok(Self::Rscd { t2: num(1, 1)? }),
            other => return Err(Error::Config(format!("unknown detector {other:?}"))),
        };
        if parts.len() > 1 {
            return Err(Error::Config(format!("detector {s:?} takes no parameters")));
        }
        Ok(kind)
    }
}

/// `(G^H G + I / gamma_s)^{-1} G^H y` via a Cholesky solve.
pub fn lmmse_equalize(y: &CVector, g: &CMatrix, gamma_s: f64) -> Result<CVector> {
    if !(gamma_s > 0.0) {
        return Err(Error::Numeric(format!("SNR must be positive, got {gamma_s}")));
    }
    if g.nrows() != y.len() {
        return Err(Error::Input(format!(
            "observation length {} does not match G with {} rows",
            y.len(),
            g.nrows()
        )));
    }
    regularized_ls(g, y, 1.0 / gamma_s)
}

fn group_codewords(sys: &GsmSystem) -> (Vec<GroupSymbols>, Vec<Vec<C64>>) {
    sys.group_codewords()
        .into_iter()
        .map(|(g, v)| (g, v.values))
        .unzip()
}

fn finish(sys: &GsmSystem, groups: Vec<GroupDecision>, ops: OpCounters) -> DetectionResult {
    let mut bits = Vec::with_capacity(sys.config.bits_per_frame());
    for g in &groups {
        bits.extend(sys.group_bits(&g.symbols()));
    }
    DetectionResult { bits, groups, ops }
}

/// Exhaustive frame-level ML search, lowest candidate index on ties.
///
/// Candidates are enumerated group by group, group 0 most significant, so
/// the first minimum found is the lowest frame index.
pub fn mld_joint(y: &CVector, g: &CMatrix, sys: &GsmSystem) -> Result<DetectionResult> {
    let cfg = &sys.config;
    let total = cfg.bits_per_frame();
    if total > MAX_JOINT_BITS {
        return Err(Error::Capability(format!(
            "joint ML over 2^{total} candidates exceeds the 2^{MAX_JOINT_BITS} limit; \
             use a per-group detector"
        )));
    }
    let (n, mt) = (cfg.subcarriers, cfg.tx_antennas);
    if g.ncols() != n * mt || g.nrows() != y.len() {
        return Err(Error::Input("G dimensions do not match the configuration".into()));
    }
    let (syms, words) = group_codewords(sys);
    // contribution of codeword i in group k: G[:, k Mt .. (k+1) Mt] d_i
    let contrib: Vec<Vec<CVector>> = (0..n)
        .map(|k| {
            let block = g.columns(k * mt, mt);
            words
                .iter()
                .map(|d| block * CVector::from_column_slice(d))
                .collect()
        })
        .collect();

    struct Search<'a> {
        contrib: &'a [Vec<CVector>],
        // residual after fixing groups 0..d lives in stack[d]
        stack: Vec<Vec<C64>>,
        best: f64,
        best_path: Vec<usize>,
        path: Vec<usize>,
        evals: u64,
    }
    fn dfs(s: &mut Search, depth: usize) {
        if depth == s.contrib.len() {
            s.evals += 1;
            let m: f64 = s.stack[depth].iter().map(|v| v.norm_sqr()).sum();
            if m < s.best {
                s.best = m;
                s.best_path.clone_from(&s.path);
            }
            return;
        }
        for i in 0..s.contrib[depth].len() {
            let (head, tail) = s.stack.split_at_mut(depth + 1);
            for ((dst, src), c) in tail[0].iter_mut().zip(&head[depth]).zip(s.contrib[depth][i].iter()) {
                *dst = src - c;
            }
            s.path.push(i);
            dfs(s, depth + 1);
            s.path.pop();
        }
    }
    let mut stack = vec![vec![C64::default(); y.len()]; n + 1];
    stack[0].copy_from_slice(y.as_slice());
    let mut search = Search {
        contrib: &contrib,
        stack,
        best: f64::INFINITY,
        best_path: vec![0; n],
        path: Vec::with_capacity(n),
        evals: 0,
    };
    dfs(&mut search, 0);
    let ops = OpCounters {
        codeword_metrics: search.evals,
        units: 2 * search.evals - 1,
        groups: n as u64,
        ..Default::default()
    };
    let groups = search
        .best_path
        .iter()
        .map(|&i| GroupDecision {
            tap: syms[i].tap,
            active: sys.codebook.tap(syms[i].tap).to_vec(),
            symbols: syms[i].symbols.clone(),
            residual: search.best,
        })
        .collect();
    Ok(finish(sys, groups, ops))
}

/// Frame-level ML by depth-first branch and bound on the QR factor of `G`.
/// Returns the same decision as [`mld_joint`] (lowest frame index among
/// equal metrics) while visiting far fewer candidates at moderate SNR.
/// Falls back to [`mld_joint`] when `G` has fewer rows than columns.
///
/// Counters: `codeword_metrics` counts complete frames reached and `units`
/// counts partial-metric evaluations.
pub fn mld_pruned(y: &CVector, g: &CMatrix, sys: &GsmSystem) -> Result<DetectionResult> {
    let cfg = &sys.config;
    let total = cfg.bits_per_frame();
    let (n, mt) = (cfg.subcarriers, cfg.tx_antennas);
    if total > MAX_JOINT_BITS {
        return mld_joint(y, g, sys);
    }
    if g.ncols() != n * mt || g.nrows() != y.len() {
        return Err(Error::Input("G dimensions do not match the configuration".into()));
    }
    if g.nrows() < g.ncols() {
        return mld_joint(y, g, sys);
    }
    let qr = g.clone().qr();
    let r = qr.r();
    let yt = qr.q().adjoint() * y;
    let (syms, words) = group_codewords(sys);
    // contrib[k][i] = R[:, block k] d_i, rows 0..(k+1) Mt
    let contrib: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|k| {
            let block = r.view((0, k * mt), ((k + 1) * mt, mt));
            words
                .iter()
                .map(|d| (block * CVector::from_column_slice(d)).as_slice().to_vec())
                .collect()
        })
        .collect();

    struct Search<'a> {
        contrib: &'a [Vec<Vec<C64>>],
        mt: usize,
        // residual u = yt - R x over the fixed groups, per depth
        stack: Vec<Vec<C64>>,
        best: f64,
        best_path: Vec<usize>,
        // path[k] is the word of group k; groups are fixed from n-1 down
        path: Vec<usize>,
        leaves: u64,
        evals: u64,
        order: Vec<Vec<(f64, usize)>>,
    }
    fn better(m: f64, path: &[usize], best: f64, best_path: &[usize]) -> bool {
        m < best || (m == best && path < best_path)
    }
    fn dfs(s: &mut Search, k: usize, partial: f64) {
        let rows = k * s.mt..(k + 1) * s.mt;
        let depth = s.contrib.len() - 1 - k;
        let mut order = std::mem::take(&mut s.order[k]);
        order.clear();
        for (i, c) in s.contrib[k].iter().enumerate() {
            let inc: f64 = rows
                .clone()
                .map(|row| (s.stack[depth][row] - c[row]).norm_sqr())
                .sum();
            order.push((partial + inc, i));
        }
        s.evals += order.len() as u64;
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(m, i) in &order {
            if m > s.best {
                break;
            }
            s.path[k] = i;
            if k == 0 {
                s.leaves += 1;
                if better(m, &s.path, s.best, &s.best_path) {
                    s.best = m;
                    s.best_path.clone_from(&s.path);
                }
                continue;
            }
            let (head, tail) = s.stack.split_at_mut(depth + 1);
            let c = &s.contrib[k][i];
            for (row, dst) in tail[0].iter_mut().enumerate().take(k * s.mt) {
                *dst = head[depth][row] - c[row];
            }
            dfs(s, k - 1, m);
        }
        s.order[k] = order;
    }
    let mut stack = vec![vec![C64::default(); n * mt]; n];
    stack[0].copy_from_slice(yt.as_slice());
    let mut search = Search {
        contrib: &contrib,
        mt,
        stack,
        best: f64::INFINITY,
        best_path: vec![usize::MAX; n],
        path: vec![0; n],
        leaves: 0,
        evals: 0,
        order: vec![Vec::with_capacity(words.len()); n],
    };
    dfs(&mut search, n - 1, 0.0);
    let ops = OpCounters {
        codeword_metrics: search.leaves,
        units: search.evals,
        groups: n as u64,
        ..Default::default()
    };
    let resid: f64 = y.norm_squared() - yt.norm_squared();
    let groups = search
        .best_path
        .iter()
        .map(|&i| GroupDecision {
            tap: syms[i].tap,
            active: sys.codebook.tap(syms[i].tap).to_vec(),
            symbols: syms[i].symbols.clone(),
            residual: search.best + resid.max(0.0),
        })
        .collect();
    Ok(finish(sys, groups, ops))
}

/// Run a per-group detector over an already equalized frame estimate.
pub fn detect_from_soft(
    kind: DetectorKind,
    x_soft: &[C64],
    n0: f64,
    sys: &GsmSystem,
) -> Result<DetectionResult> {
    let cfg = &sys.config;
    let mt = cfg.tx_antennas;
    if x_soft.len() != cfg.subcarriers * mt {
        return Err(Error::Input("soft estimate length does not match N M_t".into()));
    }
    let cb = &sys.codebook;
    let cons = &sys.constellation;
    let mut total = OpCounters::default();
    let mut groups = Vec::with_capacity(cfg.subcarriers);
    let words = match kind {
        DetectorKind::LmmseMld => Some(group_codewords(sys)),
        _ => None,
    };
    for x in x_soft.chunks(mt) {
        let mut ops = OpCounters::default();
        let d = match kind {
            DetectorKind::Mld => {
                return Err(Error::Input("joint MLD needs y and G, not a soft estimate".into()))
            }
            DetectorKind::LmmseMld => {
                let (syms, cw) = words.as_ref().expect("built above");
                let (i, m) = group_mld(x, cw, &mut ops);
                GroupDecision {
                    tap: syms[i].tap,
                    active: cb.tap(syms[i].tap).to_vec(),
                    symbols: syms[i].symbols.clone(),
                    residual: m,
                }
            }
            DetectorKind::Llrd => llrd_group(x, n0, cb, cons, &mut ops)?,
            DetectorKind::TcLlrd => tc_llrd_group(x, n0, cb, cons, &mut ops)?,
            DetectorKind::Grcd { t1, eps_th } => {
                let th = eps_th.unwrap_or(cb.active() as f64 * n0);
                grcd_group(x, cb, cons, t1, th, &mut ops)
            }
            DetectorKind::Rscd { t2 } => rscd_group(x, cb, cons, t2, &mut ops),
        };
        ops.groups = 1;
        ops.max_group_units = ops.units;
        total += ops;
        groups.push(d);
    }
    Ok(finish(sys, groups, total))
}

/// Full detection from the observation: joint MLD, or LMMSE followed by the
/// selected per-group detector.
pub fn detect(
    kind: DetectorKind,
    y: &CVector,
    g: &CMatrix,
    gamma_s: f64,
    n0: f64,
    sys: &GsmSystem,
) -> Result<DetectionResult> {
    if kind == DetectorKind::Mld {
        return mld_pruned(y, g, sys);
    }
    let x = lmmse_equalize(y, g, gamma_s)?;
    let mut res = detect_from_soft(kind, x.as_slice(), n0, sys)?;
    res.ops.equalizer_solves += 1;
    Ok(res)
}

/// LMMSE-MLD: equalize, then exhaustive search within each group.
pub fn lmmse_mld(y: &CVector, g: &CMatrix, gamma_s: f64, sys: &GsmSystem) -> Result<DetectionResult> {
    detect(DetectorKind::LmmseMld, y, g, gamma_s, 0.0, sys)
}

#[cfg(test)]
mod tests;
