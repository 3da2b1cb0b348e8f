//! Discrete affine Fourier transform (DAFT), chirp parameter rules and the
//! chirp-periodic prefix (CPP).
//!
//! The DAFT matrix is `A = L(c2) F L(c1)` with `L(c) = diag(exp(-j 2 pi c n^2))`
//! and `F` the unitary DFT, so both directions cost one FFT plus two
//! diagonal multiplies.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{CMatrix, Error, Result, C64};

/// Default subcarrier spacing in Hz.
pub const DEFAULT_DELTA_F: f64 = 2.0e3;

/// `exp(-j 2 pi c n^2)` for `n = 0..N`.
pub fn chirp(c: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let i = i as f64;
            C64::from_polar(1.0, -2.0 * PI * (c * i * i).fract())
        })
        .collect()
}

/// FFT-based DAFT/IDAFT of a fixed size.
#[derive(Clone)]
pub struct Daft {
    n: usize,
    c1: f64,
    c2: f64,
    chirp1: Vec<C64>,
    chirp2: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Daft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Daft")
            .field("n", &self.n)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl Daft {
    pub fn new(n: usize, c1: f64, c2: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            c1,
            c2,
            chirp1: chirp(c1, n),
            chirp2: chirp(c2, n),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `z = L(c2) F L(c1) s`, in place.
    pub fn forward_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n, "DAFT length mismatch");
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v *= c;
        }
        self.fwd.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v *= c * self.scale;
        }
    }

    /// `s = L(c1)^H F^H L(c2)^H z`, in place.
    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n, "IDAFT length mismatch");
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v *= c.conj();
        }
        self.inv.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v *= c.conj() * self.scale;
        }
    }

    pub fn daft(&self, s: &[C64]) -> Vec<C64> {
        let mut out = s.to_vec();
        self.forward_in_place(&mut out);
        out
    }

    pub fn idaft(&self, z: &[C64]) -> Vec<C64> {
        let mut out = z.to_vec();
        self.inverse_in_place(&mut out);
        out
    }

    /// Dense DAFT matrix from its definition. Test oracle only.
    pub fn dense_matrix(&self) -> CMatrix {
        let f = crate::linalg::dft_matrix(self.n);
        CMatrix::from_fn(self.n, self.n, |r, c| self.chirp2[r] * f[(r, c)] * self.chirp1[c])
    }

    /// `A M A^H`, applied column-wise then row-wise with the fast transforms.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = m.clone();
        let mut buf = vec![C64::default(); n];
        // A^H on the right: (M A^H) = (A M^H)^H
        for r in 0..n {
            for c in 0..n {
                buf[c] = out[(r, c)].conj();
            }
            self.forward_in_place(&mut buf);
            for c in 0..n {
                out[(r, c)] = buf[c].conj();
            }
        }
        for c in 0..n {
            buf.copy_from_slice(out.column(c).as_slice());
            self.forward_in_place(&mut buf);
            out.column_mut(c).copy_from_slice(&buf);
        }
        out
    }
}

/// One-shot DAFT.
pub fn daft(s: &[C64], c1: f64, c2: f64) -> Vec<C64> {
    Daft::new(s.len(), c1, c2).daft(s)
}

/// One-shot IDAFT.
pub fn idaft(z: &[C64], c1: f64, c2: f64) -> Vec<C64> {
    Daft::new(z.len(), c1, c2).idaft(z)
}

/// `c1 = (2(alpha_max + k_nu) + 1) / (2N)`.
pub fn choose_c1(alpha_max: usize, k_nu: usize, n: usize) -> f64 {
    (2 * (alpha_max + k_nu) + 1) as f64 / (2 * n) as f64
}

/// Require `2(alpha_max + k_nu)(l_max + 1) + l_max < N`.
pub fn validate_dimensions(alpha_max: usize, k_nu: usize, l_max: usize, n: usize) -> Result<()> {
    let lhs = 2 * (alpha_max + k_nu) * (l_max + 1) + l_max;
    if lhs >= n {
        return Err(Error::Config(format!(
            "full-diversity condition 2(alpha_max+k_nu)(l_max+1)+l_max < N violated: \
             2({alpha_max}+{k_nu})({l_max}+1)+{l_max} = {lhs} is not < {n}"
        )));
    }
    Ok(())
}

/// Default second chirp parameter `1/(4N^2)`.
pub fn choose_c2(n: usize) -> f64 {
    1.0 / (4.0 * (n * n) as f64)
}

/// Warning text when `c2` is not well below `1/(2N)` in full-diversity mode.
pub fn check_c2(c2: f64, n: usize, full_diversity: bool) -> Option<String> {
    let limit = 1.0 / (2 * n) as f64;
    (full_diversity && c2 >= limit)
        .then(|| format!("c2 = {c2} is not smaller than 1/(2N) = {limit}"))
}

/// Waveform parameters for one AFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfdmParams {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub delta_f: f64,
    pub cpp_len: usize,
    pub alpha_max: usize,
    pub k_nu: usize,
    pub l_max: usize,
    pub full_diversity: bool,
}

impl AfdmParams {
    /// Chirp parameters satisfying the full-diversity rule; `L_P = l_max`.
    pub fn full_diversity(n: usize, alpha_max: usize, k_nu: usize, l_max: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        validate_dimensions(alpha_max, k_nu, l_max, n)?;
        Ok(Self {
            n,
            c1: choose_c1(alpha_max, k_nu, n),
            c2: choose_c2(n),
            delta_f: DEFAULT_DELTA_F,
            cpp_len: l_max,
            alpha_max,
            k_nu,
            l_max,
            full_diversity: true,
        })
    }

    /// `c1 = c2 = 0`: plain OFDM with a cyclic prefix.
    pub fn ofdm(n: usize, alpha_max: usize, k_nu: usize, l_max: usize) -> Result<Self> {
        if n == 0 || l_max >= n {
            return Err(Error::Config(format!("need l_max < N, got {l_max} >= {n}")));
        }
        Ok(Self {
            n,
            c1: 0.0,
            c2: 0.0,
            delta_f: DEFAULT_DELTA_F,
            cpp_len: l_max,
            alpha_max,
            k_nu,
            l_max,
            full_diversity: false,
        })
    }

    /// Override `c2`, logging a warning when it breaks the full-diversity rule.
    pub fn with_c2(mut self, c2: f64) -> Self {
        if let Some(w) = check_c2(c2, self.n, self.full_diversity) {
            log::warn!("{w}");
        }
        self.c2 = c2;
        self
    }

    pub fn is_ofdm(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0
    }

    pub fn transform(&self) -> Daft {
        Daft::new(self.n, self.c1, self.c2)
    }

    /// `2 N c1`, the per-delay-tap shift of the DAFT-domain peak.
    pub fn delay_shift(&self) -> f64 {
        2.0 * self.n as f64 * self.c1
    }
}

/// Prepend `L_P` prefix samples `s(N+n) exp(-j 2 pi c1 (N^2 + 2 N n))`,
/// `n = -L_P..-1`.
pub fn add_cpp(s: &[C64], c1: f64, cpp_len: usize) -> Result<Vec<C64>> {
    let n = s.len();
    if cpp_len > n {
        return Err(Error::Input(format!("CPP length {cpp_len} exceeds N = {n}")));
    }
    let nf = n as f64;
    let mut out = Vec::with_capacity(n + cpp_len);
    for i in (1..=cpp_len).rev() {
        let k = -(i as f64);
        let phase = -2.0 * PI * (c1 * (nf * nf + 2.0 * nf * k)).fract();
        out.push(s[n - i] * C64::from_polar(1.0, phase));
    }
    out.extend_from_slice(s);
    Ok(out)
}

/// Drop the first `L_P` samples.
pub fn remove_cpp(r: &[C64], cpp_len: usize) -> Result<Vec<C64>> {
    if cpp_len > r.len() {
        return Err(Error::Input(format!(
            "CPP length {cpp_len} exceeds block length {}",
            r.len()
        )));
    }
    Ok(r[cpp_len..].to_vec())
}
