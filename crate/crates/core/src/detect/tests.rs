use super::*;
use crate::linalg::CVector;
use crate::mapper::{Constellation, GsmConfig, GsmSystem, TapCodebook};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(mt: usize, mr: usize, n: usize, k: usize, q: usize) -> GsmSystem {
    GsmSystem::new(GsmConfig::new(mt, mr, n, k, q).unwrap()).unwrap()
}

fn cn(rng: &mut ChaCha8Rng, s: f64) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * s
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

fn frame_vector(sys: &GsmSystem, bits: &[bool]) -> Vec<C64> {
    let f = crate::mapper::build_frame(bits, &sys.config, &sys.codebook, &sys.constellation).unwrap();
    // column-major storage is exactly the group-major stacking
    f.as_slice().to_vec()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| cn(rng, 1.0))
}

#[test]
fn symbolwise_basics() {
    let c = Constellation::new(4).unwrap();
    let mut ops = OpCounters::default();
    let pts: Vec<C64> = c.points().to_vec();
    assert_eq!(symbolwise_ml(&pts, &c, &mut ops), vec![0, 1, 2, 3]);
    assert_eq!(symbolwise_ml(&[C64::default()], &c, &mut ops), vec![0]);
    let half = c.min_distance() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let i = rng.random_range(0..4);
        let r = rng.random::<f64>() * half * 0.999;
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let v = c.point(i) + C64::from_polar(r, th);
        assert_eq!(symbolwise_ml(&[v], &c, &mut ops), vec![i]);
    }
}

#[test]
fn llr_prior_and_hand_value() {
    let bpsk = Constellation::new(2).unwrap();
    let mut ops = OpCounters::default();
    let l = llr_per_antenna(&[C64::default(); 4], 1.0, 2, &bpsk, &mut ops).unwrap();
    // ln 2 - ln 2 + 0 + ln(2 e^{-1})
    let expect = 2f64.ln() - 1.0;
    assert!(l.iter().all(|v| (v - expect).abs() < 1e-14));
    assert!(llr_per_antenna(&[C64::default(); 2], 1.0, 2, &bpsk, &mut ops).is_err());
}

#[test]
fn llr_increases_with_magnitude_on_psk() {
    let qpsk = Constellation::new(4).unwrap();
    let mut ops = OpCounters::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let base: Vec<C64> = (0..4).map(|_| cn(&mut rng, 2.0)).collect();
        let mut prev = llr_per_antenna(&base, 0.3, 2, &qpsk, &mut ops).unwrap();
        for s in [1.1, 1.5, 2.0, 3.0] {
            let x: Vec<C64> = base.iter().map(|v| v * s).collect();
            let cur = llr_per_antenna(&x, 0.3, 2, &qpsk, &mut ops).unwrap();
            for (a, b) in prev.iter().zip(&cur) {
                assert!(b > a);
            }
            prev = cur;
        }
    }
}

#[test]
fn top_k_order_and_ties() {
    let mut ops = OpCounters::default();
    assert_eq!(top_k_antennas(&[3.0, 2.0, 1.0, 0.0], 2, &mut ops), vec![0, 1]);
    assert_eq!(top_k_antennas(&[1.0, 1.0, 1.0, 1.0], 2, &mut ops), vec![0, 1]);
    assert_eq!(top_k_antennas(&[0.0, 2.0, 1.0, 2.0], 2, &mut ops), vec![1, 3]);
}

#[test]
fn tap_check_hand_example() {
    let cb = TapCodebook::build(4, 2).unwrap();
    let llr = [5.0, 1.0, 0.5, 4.0];
    let g = [0usize, 3];
    assert!(cb.index_of(&g).is_none());
    // hand enumeration: every legal TAP sits at Hamming distance 2 from {0,3}
    let mut scores = Vec::new();
    for (i, tap) in cb.taps().iter().enumerate() {
        let gm = (1u64 << 0) | (1 << 3);
        assert_eq!((cb.mask(i) ^ gm).count_ones(), 2);
        scores.push(tap.iter().map(|&a| llr[a] * llr[a]).sum::<f64>());
    }
    assert_eq!(scores, vec![26.0, 25.25, 17.0, 16.25]);
    let mut ops = OpCounters::default();
    assert_eq!(tc_select(&llr, &g, &cb, &mut ops), 0);
    // legal preliminary set is kept
    assert_eq!(tc_select(&llr, &[1, 3], &cb, &mut ops), 2);
}

#[test]
fn tc_equals_llrd_without_unused_taps() {
    let sys = system(4, 4, 1, 1, 16);
    assert_eq!(sys.codebook.len(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let x: Vec<C64> = (0..4).map(|_| cn(&mut rng, 2.0)).collect();
        let mut o = OpCounters::default();
        let a = llrd_group(&x, 0.2, &sys.codebook, &sys.constellation, &mut o).unwrap();
        let b = tc_llrd_group(&x, 0.2, &sys.codebook, &sys.constellation, &mut o).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn llrd_finds_true_tap_when_noiseless() {
    let sys = system(4, 4, 1, 2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let bits = random_bits(&mut rng, 6);
        let v = crate::mapper::map_group(&bits, &sys.codebook, &sys.constellation).unwrap();
        let truth = crate::mapper::bits_to_symbols(&bits, &sys.codebook, &sys.constellation).unwrap();
        let mut o = OpCounters::default();
        let d = llrd_group(&v.values, 1e-4, &sys.codebook, &sys.constellation, &mut o).unwrap();
        assert_eq!(d.symbols(), truth);
        let d = tc_llrd_group(&v.values, 1e-4, &sys.codebook, &sys.constellation, &mut o).unwrap();
        assert_eq!(d.symbols(), truth);
    }
}

#[test]
fn grcd_noiseless_single_iteration() {
    let sys = system(4, 4, 1, 2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let bits = random_bits(&mut rng, 6);
        let v = crate::mapper::map_group(&bits, &sys.codebook, &sys.constellation).unwrap();
        let mut o = OpCounters::default();
        let (d, trace) =
            grcd_group_traced(&v.values, &sys.codebook, &sys.constellation, 3, 1e-9, &mut o);
        assert_eq!(trace.len(), 1);
        assert_eq!(d.residual, 0.0);
        let truth = crate::mapper::bits_to_symbols(&bits, &sys.codebook, &sys.constellation).unwrap();
        assert_eq!(d.symbols(), truth);
    }
}

#[test]
fn grcd_pool_for_first_antenna() {
    let cb = TapCodebook::build(4, 2).unwrap();
    let c = Constellation::new(4).unwrap();
    // antenna 0 most reliable
    let x = [C64::new(3.0, 0.0), C64::new(0.1, 0.0), C64::new(0.2, 0.0), C64::new(0.0, 0.3)];
    let expect: Vec<usize> = [[0usize, 1], [0, 2], [0, 3]]
        .iter()
        .filter_map(|t| cb.index_of(t))
        .collect();
    let mut o = OpCounters::default();
    let (_, trace) = grcd_group_traced(&x, &cb, &c, 1, 0.0, &mut o);
    assert_eq!(trace, vec![expect.clone()]);
    assert_eq!(o.tap_checks, expect.len() as u64);
}

#[test]
fn grcd_never_rechecks() {
    let cb = TapCodebook::build(4, 2).unwrap();
    let c = Constellation::new(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let x: Vec<C64> = (0..4).map(|_| cn(&mut rng, 3.0)).collect();
        let mut o = OpCounters::default();
        let (d, trace) = grcd_group_traced(&x, &cb, &c, 4, 0.0, &mut o);
        let mut all: Vec<usize> = trace.concat();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
        assert_eq!(o.tap_checks, n as u64);
        // best-so-far is the minimum over every checked TAP
        let best = all
            .iter()
            .map(|&t| check_tap(&x, cb.tap(t), &c, &mut OpCounters::default()).1)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(d.residual, best);
    }
}

/// Brute-force oracle: every legal TAP with per-entry quantization.
fn oracle_tap_search(x: &[C64], cb: &TapCodebook, c: &Constellation) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, tap) in cb.taps().iter().enumerate() {
        let mut r = 0.0;
        for (m, v) in x.iter().enumerate() {
            if tap.contains(&m) {
                let d = c
                    .points()
                    .iter()
                    .map(|p| (v - p).norm_sqr())
                    .fold(f64::INFINITY, f64::min);
                r += d;
            } else {
                r += v.norm_sqr();
            }
        }
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

#[test]
fn rscd_full_space_matches_oracle() {
    let sys = system(5, 4, 1, 2, 4);
    let cb = &sys.codebook;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let x: Vec<C64> = (0..5).map(|_| cn(&mut rng, 2.0)).collect();
        let mut o = OpCounters::default();
        let full = rscd_group(&x, cb, &sys.constellation, cb.len(), &mut o);
        let (ti, r) = oracle_tap_search(&x, cb, &sys.constellation);
        assert_eq!(full.tap, ti);
        assert!((full.residual - r).abs() < 1e-12);
        for t in 1..cb.len() {
            let part = rscd_group(&x, cb, &sys.constellation, t, &mut o);
            assert!(full.residual <= part.residual);
        }
    }
}

#[test]
fn rscd_noiseless_first_check() {
    let sys = system(4, 4, 1, 2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let bits = random_bits(&mut rng, 6);
        let v = crate::mapper::map_group(&bits, &sys.codebook, &sys.constellation).unwrap();
        let mut o = OpCounters::default();
        let d = rscd_group(&v.values, &sys.codebook, &sys.constellation, 1, &mut o);
        assert_eq!(d.residual, 0.0);
        assert_eq!(o.tap_checks, 1);
    }
}

/// Naive Gaussian elimination with partial pivoting.
fn naive_solve(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Vec<C64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![C64::default(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

#[test]
fn lmmse_closed_forms() {
    let g = CMatrix::identity(1, 1);
    let y = CVector::from_vec(vec![C64::new(0.4, -1.2)]);
    let x = lmmse_equalize(&y, &g, 4.0).unwrap();
    assert!((x[0] - y[0] * 4.0 / 5.0).norm() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = random_matrix(&mut rng, 8, 8) + CMatrix::identity(8, 8) * C64::new(3.0, 0.0);
    let y = CVector::from_fn(8, |_, _| cn(&mut rng, 1.0));
    let x = lmmse_equalize(&y, &g, 1e9).unwrap();
    let inv = g.clone().try_inverse().unwrap() * &y;
    assert!((x - &inv).norm() / inv.norm() < 1e-6);

    let g = random_matrix(&mut rng, 8, 8);
    let gamma = 5.0;
    let x = lmmse_equalize(&y, &g, gamma).unwrap();
    let gram = g.adjoint() * &g;
    let a: Vec<Vec<C64>> = (0..8)
        .map(|r| {
            (0..8)
                .map(|c| gram[(r, c)] + if r == c { C64::new(1.0 / gamma, 0.0) } else { C64::default() })
                .collect()
        })
        .collect();
    let b: Vec<C64> = (g.adjoint() * &y).iter().copied().collect();
    let oracle = naive_solve(a, b);
    for i in 0..8 {
        assert!((x[i] - oracle[i]).norm() < 1e-10);
    }
}

#[test]
fn joint_mld_noiseless_recovery() {
    let sys = system(2, 2, 6, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let g = random_matrix(&mut rng, 12, 12);
        let bits = random_bits(&mut rng, sys.config.bits_per_frame());
        let x = CVector::from_vec(frame_vector(&sys, &bits));
        let y = &g * x;
        let d = mld_joint(&y, &g, &sys).unwrap();
        assert_eq!(d.bits, bits);
        assert_eq!(d.ops.codeword_metrics, 1 << 12);
    }
}

#[test]
fn joint_mld_matches_exhaustive_oracle() {
    let sys = system(2, 2, 4, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let g = random_matrix(&mut rng, 8, 8);
        let bits = random_bits(&mut rng, 8);
        let mut y = &g * CVector::from_vec(frame_vector(&sys, &bits));
        for v in y.iter_mut() {
            *v += cn(&mut rng, 1.5);
        }
        let mut best = (0usize, f64::INFINITY);
        for word in 0..256usize {
            let b: Vec<bool> = (0..8).map(|i| (word >> (7 - i)) & 1 == 1).collect();
            let x = frame_vector(&sys, &b);
            let mut m = 0.0;
            for r in 0..8 {
                let mut acc = y[r];
                for c in 0..8 {
                    acc -= g[(r, c)] * x[c];
                }
                m += acc.norm_sqr();
            }
            if m < best.1 {
                best = (word, m);
            }
        }
        let expect: Vec<bool> = (0..8).map(|i| (best.0 >> (7 - i)) & 1 == 1).collect();
        let d = mld_joint(&y, &g, &sys).unwrap();
        assert_eq!(d.bits, expect);
    }
}

#[test]
fn joint_mld_two_candidates() {
    let sys = system(1, 1, 1, 1, 2);
    let g = CMatrix::identity(1, 1);
    for (y, bit) in [(-0.3, false), (0.2, true)] {
        let d = mld_joint(&CVector::from_vec(vec![C64::new(y, 0.0)]), &g, &sys).unwrap();
        assert_eq!(d.bits, vec![bit]);
        assert_eq!(d.ops.codeword_metrics, 2);
    }
}

#[test]
fn joint_mld_size_guard() {
    let sys = system(4, 4, 8, 2, 4);
    let g = CMatrix::identity(32, 32);
    let y = CVector::zeros(32);
    assert!(matches!(mld_joint(&y, &g, &sys), Err(Error::Capability(_))));
}

#[test]
fn lmmse_mld_counts_and_identity_case() {
    let sys = system(2, 2, 1, 1, 4);
    let g = CMatrix::identity(2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let bits = random_bits(&mut rng, 3);
        let mut y = CVector::from_vec(frame_vector(&sys, &bits));
        for v in y.iter_mut() {
            *v += cn(&mut rng, 1.2);
        }
        let a = lmmse_mld(&y, &g, 1e12, &sys).unwrap();
        let b = mld_joint(&y, &g, &sys).unwrap();
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.ops.codeword_metrics, 8);
    }
    let sys = system(4, 4, 4, 2, 4);
    let g = CMatrix::identity(16, 16);
    let bits = random_bits(&mut rng, 24);
    let y = CVector::from_vec(frame_vector(&sys, &bits));
    let d = lmmse_mld(&y, &g, 1e6, &sys).unwrap();
    assert_eq!(d.bits, bits);
    assert_eq!(d.ops.codeword_metrics, 4 * 64);
}

#[test]
fn all_detectors_noiseless_identity_channel() {
    let sys = system(4, 4, 4, 2, 4);
    let g = CMatrix::identity(16, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let kinds = [
        DetectorKind::LmmseMld,
        DetectorKind::Llrd,
        DetectorKind::TcLlrd,
        DetectorKind::Grcd { t1: 1, eps_th: None },
        DetectorKind::Grcd { t1: 3, eps_th: None },
        DetectorKind::Rscd { t2: 1 },
        DetectorKind::Rscd { t2: 3 },
    ];
    for _ in 0..100 {
        let bits = random_bits(&mut rng, 24);
        let y = CVector::from_vec(frame_vector(&sys, &bits));
        for k in kinds {
            let d = detect(k, &y, &g, 1e8, 1e-8, &sys).unwrap();
            assert_eq!(d.bits, bits, "{k}");
            assert!(d.groups.iter().all(|g| g.tap < sys.codebook.len()));
        }
    }
}

#[test]
fn unit_counts_at_reference_size() {
    // (4,4,16,2,4): per-group cost ordering on a clean group
    let sys = system(4, 4, 1, 2, 4);
    let bits = [false, false, false, false, true, false];
    let x = crate::mapper::map_group(&bits, &sys.codebook, &sys.constellation)
        .unwrap()
        .values;
    let cost = |k: DetectorKind| detect_from_soft(k, &x, 0.05, &sys).unwrap().ops.units;
    let grcd = cost(DetectorKind::Grcd { t1: 1, eps_th: None });
    let rscd = cost(DetectorKind::Rscd { t2: 1 });
    let llrd = cost(DetectorKind::Llrd);
    let mld = cost(DetectorKind::LmmseMld);
    assert!(grcd < rscd && grcd < llrd);
    assert_eq!(mld, 64 * 4 + 63);
}

#[test]
fn detector_names_round_trip() {
    for s in ["mld", "lmmse-mld", "llrd", "tc-llrd", "grcd:1", "grcd:3:0.5", "rscd:3"] {
        let k: DetectorKind = s.parse().unwrap();
        assert_eq!(k.to_string(), s);
    }
    assert_eq!("grcd".parse::<DetectorKind>().unwrap(), DetectorKind::Grcd { t1: 1, eps_th: None });
    assert!("grcd:0".parse::<DetectorKind>().is_err());
    assert!("mld:2".parse::<DetectorKind>().is_err());
    assert!("sphere".parse::<DetectorKind>().is_err());
}

#[test]
fn pruned_mld_agrees_with_exhaustive_search() {
    let sys = system(2, 2, 6, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for (trial, var) in [0.01, 0.3, 1.0, 4.0].iter().cycle().take(200).enumerate() {
        let g = random_matrix(&mut rng, 12, 12);
        let bits = random_bits(&mut rng, 12);
        let mut y = &g * CVector::from_vec(frame_vector(&sys, &bits));
        for v in y.iter_mut() {
            *v += cn(&mut rng, *var);
        }
        let a = mld_joint(&y, &g, &sys).unwrap();
        let b = mld_pruned(&y, &g, &sys).unwrap();
        assert_eq!(a.bits, b.bits, "trial {trial}");
        assert!((a.groups[0].residual - b.groups[0].residual).abs() < 1e-8);
        assert!(b.ops.codeword_metrics <= 1 << 12);
    }
    // wide G falls back to the exhaustive scan
    let sys = system(2, 1, 3, 1, 2);
    let g = random_matrix(&mut rng, 3, 6);
    let y = CVector::from_vec((0..3).map(|_| cn(&mut rng, 1.0)).collect());
    let b = mld_pruned(&y, &g, &sys).unwrap();
    assert_eq!(b.bits, mld_joint(&y, &g, &sys).unwrap().bits);
    assert_eq!(b.ops.codeword_metrics, 1 << 6);
}

#[test]
fn pruned_mld_breaks_ties_towards_lowest_index() {
    // y = 0 with G = I: BPSK words -1 and +1 are equidistant
    let sys = system(1, 1, 3, 1, 2);
    let g = CMatrix::identity(3, 3);
    let y = CVector::zeros(3);
    let a = mld_joint(&y, &g, &sys).unwrap();
    let b = mld_pruned(&y, &g, &sys).unwrap();
    assert_eq!(a.bits, vec![false; 3]);
    assert_eq!(b.bits, a.bits);
}
