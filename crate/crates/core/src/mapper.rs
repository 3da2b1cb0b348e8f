//! GSM bit mapping: transmit-antenna activation pattern (TAP) codebooks,
//! APM constellations, and the group/frame mappers with their inverses.
//!
//! Each group of `L_b = L1 + L2` bits is split into `L1` TAP bits, which pick
//! one of `C = 2^L1` legal activation patterns, and `L2 = K log2 Q` symbol
//! bits, which pick `K` constellation points. The points are placed on the
//! active antennas in ascending antenna order.
//!
//! Bit conventions:
//! - TAP index: the `L1` TAP bits are read least-significant bit first.
//! - Symbol index: each `log2 Q` chunk is read most-significant bit first and
//!   equals the constellation point index.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{CMatrix, Error, Result, C64};

/// `binom(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn floor_log2(v: u64) -> usize {
    debug_assert!(v > 0);
    63 - v.leading_zeros() as usize
}

/// System dimensions `(M_t, M_r, N, K, Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GsmConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub subcarriers: usize,
    pub active: usize,
    pub order: usize,
}

impl GsmConfig {
    pub fn new(
        tx_antennas: usize,
        rx_antennas: usize,
        subcarriers: usize,
        active: usize,
        order: usize,
    ) -> Result<Self> {
        let cfg = Self {
            tx_antennas,
            rx_antennas,
            subcarriers,
            active,
            order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.active == 0 || self.active > self.tx_antennas {
            return Err(Error::Config(format!(
                "active antennas K={} must satisfy 1 <= K <= M_t={}",
                self.active, self.tx_antennas
            )));
        }
        if self.tx_antennas > 64 {
            return Err(Error::Config("at most 64 transmit antennas".into()));
        }
        if self.rx_antennas == 0 || self.subcarriers == 0 {
            return Err(Error::Config("M_r and N must be positive".into()));
        }
        if self.order < 2 || !self.order.is_power_of_two() {
            return Err(Error::Config(format!(
                "constellation order Q={} must be a power of two >= 2",
                self.order
            )));
        }
        Ok(())
    }

    /// `L1 = floor(log2(binom(M_t, K)))`.
    pub fn tap_bits(&self) -> usize {
        floor_log2(binomial(self.tx_antennas, self.active))
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// `L2 = K log2 Q`.
    pub fn symbol_bits(&self) -> usize {
        self.active * self.bits_per_symbol()
    }

    /// `L_b = L1 + L2`, the rate in bits per subcarrier.
    pub fn bits_per_group(&self) -> usize {
        self.tap_bits() + self.symbol_bits()
    }

    /// `L = N L_b`.
    pub fn bits_per_frame(&self) -> usize {
        self.subcarriers * self.bits_per_group()
    }

    /// Number of legal TAPs, `C = 2^L1`.
    pub fn tap_count(&self) -> usize {
        1 << self.tap_bits()
    }
}

/// The `2^L1` legal activation patterns.
///
/// Built as the lexicographically first subset of `K`-combinations whose
/// per-antenna usage counts differ by at most one, stored in lexicographic
/// order. For `(M_t, K) = (4, 2)` this is `{0,1}, {0,2}, {1,3}, {2,3}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapCodebook {
    tx_antennas: usize,
    active: usize,
    taps: Vec<Vec<usize>>,
    masks: Vec<u64>,
}

impl TapCodebook {
    pub fn build(tx_antennas: usize, active: usize) -> Result<Self> {
        if active == 0 || active > tx_antennas {
            return Err(Error::Config(format!(
                "cannot build TAP codebook for M_t={tx_antennas}, K={active}"
            )));
        }
        if tx_antennas > 64 {
            return Err(Error::Config("at most 64 transmit antennas".into()));
        }
        let total = binomial(tx_antennas, active);
        let size = 1usize << floor_log2(total);
        let combos = combinations(tx_antennas, active);
        let chosen = balanced_selection(&combos, tx_antennas, active, size).ok_or_else(|| {
            Error::Config(format!(
                "no balanced TAP selection for M_t={tx_antennas}, K={active}"
            ))
        })?;
        let taps: Vec<Vec<usize>> = chosen.into_iter().map(|i| combos[i].clone()).collect();
        Self::from_taps(tx_antennas, taps)
    }

    /// Custom codebook; length must be a power of two and patterns distinct.
    pub fn from_taps(tx_antennas: usize, taps: Vec<Vec<usize>>) -> Result<Self> {
        if taps.is_empty() || !taps.len().is_power_of_two() {
            return Err(Error::Config("codebook size must be a power of two".into()));
        }
        let active = taps[0].len();
        let mut masks = Vec::with_capacity(taps.len());
        for tap in &taps {
            if tap.len() != active || active == 0 {
                return Err(Error::Config("all TAPs must have K entries".into()));
            }
            if tap.windows(2).any(|w| w[0] >= w[1]) || tap[active - 1] >= tx_antennas {
                return Err(Error::Config(format!(
                    "TAP {tap:?} must be strictly ascending indices below {tx_antennas}"
                )));
            }
            let mask = tap.iter().fold(0u64, |m, &a| m | (1 << a));
            if masks.contains(&mask) {
                return Err(Error::Config(format!("duplicate TAP {tap:?}")));
            }
            masks.push(mask);
        }
        Ok(Self {
            tx_antennas,
            active,
            taps,
            masks,
        })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn tap_bits(&self) -> usize {
        self.taps.len().trailing_zeros() as usize
    }

    pub fn taps(&self) -> &[Vec<usize>] {
        &self.taps
    }

    pub fn tap(&self, index: usize) -> &[usize] {
        &self.taps[index]
    }

    /// Activation bit-mask of a TAP: bit `m` set when antenna `m` is active.
    pub fn mask(&self, index: usize) -> u64 {
        self.masks[index]
    }

    pub fn index_of_mask(&self, mask: u64) -> Option<usize> {
        self.masks.iter().position(|&m| m == mask)
    }

    pub fn index_of(&self, tap: &[usize]) -> Option<usize> {
        let mask = tap.iter().fold(0u64, |m, &a| m | (1 << a));
        if tap.len() != self.active {
            return None;
        }
        self.index_of_mask(mask)
    }

    /// TAP index encoded by `bits` (least-significant bit first).
    pub fn index_from_bits(&self, bits: &[bool]) -> usize {
        bits.iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    pub fn bits_of_index(&self, index: usize, out: &mut Vec<bool>) {
        for i in 0..self.tap_bits() {
            out.push((index >> i) & 1 == 1);
        }
    }

    /// Index of the legal TAP with minimum activation-mask Hamming distance
    /// to `mask`, lowest index on ties, together with that distance.
    pub fn nearest(&self, mask: u64) -> (usize, u32) {
        let mut best = (0, u32::MAX);
        for (i, &m) in self.masks.iter().enumerate() {
            let d = (m ^ mask).count_ones();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Depth-first search, include-before-exclude, over combinations in
/// lexicographic order. Usage of every antenna must end in `[lo, hi]`.
fn balanced_selection(
    combos: &[Vec<usize>],
    antennas: usize,
    active: usize,
    size: usize,
) -> Option<Vec<usize>> {
    let total = size * active;
    let lo = total / antennas;
    let hi = total.div_ceil(antennas);
    // remaining[i][a]: occurrences of antenna a in combos[i..]
    let mut remaining = vec![vec![0usize; antennas]; combos.len() + 1];
    for i in (0..combos.len()).rev() {
        remaining[i] = remaining[i + 1].clone();
        for &a in &combos[i] {
            remaining[i][a] += 1;
        }
    }
    let mut counts = vec![0usize; antennas];
    let mut chosen = Vec::with_capacity(size);

    fn dfs(
        i: usize,
        combos: &[Vec<usize>],
        remaining: &[Vec<usize>],
        counts: &mut [usize],
        chosen: &mut Vec<usize>,
        size: usize,
        lo: usize,
        hi: usize,
    ) -> bool {
        if chosen.len() == size {
            return counts.iter().all(|&c| c >= lo && c <= hi);
        }
        if combos.len() - i < size - chosen.len() {
            return false;
        }
        // every antenna must still be able to reach `lo`
        if counts
            .iter()
            .zip(&remaining[i])
            .any(|(&c, &r)| c + r < lo)
        {
            return false;
        }
        if combos[i].iter().all(|&a| counts[a] < hi) {
            for &a in &combos[i] {
                counts[a] += 1;
            }
            chosen.push(i);
            if dfs(i + 1, combos, remaining, counts, chosen, size, lo, hi) {
                return true;
            }
            chosen.pop();
            for &a in &combos[i] {
                counts[a] -= 1;
            }
        }
        dfs(i + 1, combos, remaining, counts, chosen, size, lo, hi)
    }

    dfs(
        0,
        combos,
        &remaining,
        &mut counts,
        &mut chosen,
        size,
        lo,
        hi,
    )
    .then_some(chosen)
}

/// Unit-average-energy constellation; point `i` carries the bit label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<C64>,
    bits_per_symbol: usize,
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    /// BPSK for `Q = 2`, Gray square QAM for even `log2 Q`, Gray PSK otherwise.
    ///
    /// The square-QAM labelling puts the first half of the label bits on the
    /// in-phase axis (`0` on the negative side) and the second half on the
    /// quadrature axis (`0` on the positive side), so QPSK labels `00, 01,
    /// 10, 11` map to `(-1+j), (-1-j), (1+j), (1-j)` over `sqrt(2)`.
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Config(format!(
                "constellation order {order} must be a power of two >= 2"
            )));
        }
        let m = order.trailing_zeros() as usize;
        let points = if order == 2 {
            vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]
        } else if m.is_multiple_of(2) {
            let side = 1usize << (m / 2);
            let half = m / 2;
            let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
            (0..order)
                .map(|label| {
                    let re_idx = gray_to_binary(label >> half);
                    let im_idx = gray_to_binary(label & (side - 1));
                    let re = 2.0 * re_idx as f64 - (side as f64 - 1.0);
                    let im = (side as f64 - 1.0) - 2.0 * im_idx as f64;
                    C64::new(re, im) * scale
                })
                .collect()
        } else {
            (0..order)
                .map(|label| {
                    let k = gray_to_binary(label) as f64;
                    C64::from_polar(1.0, 2.0 * PI * k / order as f64)
                })
                .collect()
        };
        Ok(Self {
            points,
            bits_per_symbol: m,
        })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    pub fn index_from_bits(&self, bits: &[bool]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits_of_index(&self, index: usize, out: &mut Vec<bool>) {
        for i in (0..self.bits_per_symbol).rev() {
            out.push((index >> i) & 1 == 1);
        }
    }

    /// Nearest point and its squared distance; ties go to the lowest index.
    pub fn nearest(&self, z: C64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Exact point lookup used by the demapper.
    pub fn index_of(&self, z: C64) -> Option<usize> {
        let (i, d) = self.nearest(z);
        (d < 1e-18).then_some(i)
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// QPSK amplitude used in the frame example, `sqrt(2)/2`.
pub const QPSK_AMPLITUDE: f64 = FRAC_1_SQRT_2;

/// One group's `M_t`-length transmit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupVector {
    pub values: Vec<C64>,
}

impl GroupVector {
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Decoded form of a group: TAP index plus one constellation index per
/// active antenna (ascending antenna order).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupSymbols {
    pub tap: usize,
    pub symbols: Vec<usize>,
}

fn check_group_layout(codebook: &TapCodebook, constellation: &Constellation) -> usize {
    codebook.tap_bits() + codebook.active() * constellation.bits_per_symbol()
}

/// Split `L_b` bits into a TAP index and symbol indices.
pub fn bits_to_symbols(
    bits: &[bool],
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<GroupSymbols> {
    let lb = check_group_layout(codebook, constellation);
    if bits.len() != lb {
        return Err(Error::Input(format!(
            "group needs {lb} bits, got {}",
            bits.len()
        )));
    }
    let l1 = codebook.tap_bits();
    let m = constellation.bits_per_symbol();
    let tap = codebook.index_from_bits(&bits[..l1]);
    let symbols = bits[l1..]
        .chunks(m)
        .map(|c| constellation.index_from_bits(c))
        .collect();
    Ok(GroupSymbols { tap, symbols })
}

/// Inverse of [`bits_to_symbols`]; appends `L_b` bits to `out`.
pub fn symbols_to_bits(
    group: &GroupSymbols,
    codebook: &TapCodebook,
    constellation: &Constellation,
    out: &mut Vec<bool>,
) {
    codebook.bits_of_index(group.tap, out);
    for &s in &group.symbols {
        constellation.bits_of_index(s, out);
    }
}

/// Place the symbols of `group` on their TAP.
pub fn group_vector(
    group: &GroupSymbols,
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> GroupVector {
    let mut values = vec![C64::new(0.0, 0.0); codebook.tx_antennas()];
    for (&ant, &s) in codebook.tap(group.tap).iter().zip(&group.symbols) {
        values[ant] = constellation.point(s);
    }
    GroupVector { values }
}

/// Map `L_b` bits to a `K`-sparse group vector.
pub fn map_group(
    bits: &[bool],
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<GroupVector> {
    let g = bits_to_symbols(bits, codebook, constellation)?;
    Ok(group_vector(&g, codebook, constellation))
}

/// Recover the decoded group from a transmit vector.
pub fn demap_symbols(
    v: &GroupVector,
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<GroupSymbols> {
    let support = v.support();
    let tap = codebook
        .index_of(&support)
        .ok_or_else(|| Error::Demap(format!("support {support:?} is not a legal TAP")))?;
    let symbols = support
        .iter()
        .map(|&a| {
            constellation.index_of(v.values[a]).ok_or_else(|| {
                Error::Demap(format!("value {} is not a constellation point", v.values[a]))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupSymbols { tap, symbols })
}

/// Exact inverse of [`map_group`].
pub fn demap_group(
    v: &GroupVector,
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<Vec<bool>> {
    let g = demap_symbols(v, codebook, constellation)?;
    let mut out = Vec::with_capacity(check_group_layout(codebook, constellation));
    symbols_to_bits(&g, codebook, constellation, &mut out);
    Ok(out)
}

/// `M_t x N` frame whose column `n` is the group vector of bits
/// `[n L_b, (n+1) L_b)`.
pub fn build_frame(
    bits: &[bool],
    config: &GsmConfig,
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<CMatrix> {
    let lb = config.bits_per_group();
    if bits.len() != config.bits_per_frame() {
        return Err(Error::Input(format!(
            "frame needs {} bits, got {}",
            config.bits_per_frame(),
            bits.len()
        )));
    }
    let mut frame = CMatrix::zeros(config.tx_antennas, config.subcarriers);
    for (n, chunk) in bits.chunks(lb).enumerate() {
        let g = map_group(chunk, codebook, constellation)?;
        frame.column_mut(n).copy_from_slice(&g.values);
    }
    Ok(frame)
}

/// Column-wise demap of a frame.
pub fn demap_frame(
    frame: &CMatrix,
    codebook: &TapCodebook,
    constellation: &Constellation,
) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for col in frame.column_iter() {
        let v = GroupVector {
            values: col.iter().copied().collect(),
        };
        out.extend(demap_group(&v, codebook, constellation)?);
    }
    Ok(out)
}

/// `M_t x K` selection matrix whose column `k` is the unit vector at `tap[k]`.
pub fn mapping_matrix(tap: &[usize], tx_antennas: usize) -> CMatrix {
    let mut m = CMatrix::zeros(tx_antennas, tap.len());
    for (k, &a) in tap.iter().enumerate() {
        m[(a, k)] = C64::new(1.0, 0.0);
    }
    m
}

/// Dimensions, codebook and constellation bundled for the transceiver chain.
#[derive(Debug, Clone)]
pub struct GsmSystem {
    pub config: GsmConfig,
    pub codebook: TapCodebook,
    pub constellation: Constellation,
}

impl GsmSystem {
    pub fn new(config: GsmConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            codebook: TapCodebook::build(config.tx_antennas, config.active)?,
            constellation: Constellation::new(config.order)?,
            config,
        })
    }

    /// All `2^L_b` group codewords, indexed by their bit word read in the
    /// same order as the group mapper (first bit most significant).
    pub fn group_codewords(&self) -> Vec<(GroupSymbols, GroupVector)> {
        let lb = self.config.bits_per_group();
        (0..1usize << lb)
            .map(|word| {
                let bits: Vec<bool> = (0..lb).map(|i| (word >> (lb - 1 - i)) & 1 == 1).collect();
                let g = bits_to_symbols(&bits, &self.codebook, &self.constellation)
                    .expect("word length matches L_b");
                let v = group_vector(&g, &self.codebook, &self.constellation);
                (g, v)
            })
            .collect()
    }

    pub fn group_bits(&self, group: &GroupSymbols) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.config.bits_per_group());
        symbols_to_bits(group, &self.codebook, &self.constellation, &mut out);
        out
    }
}
