use super::*;
use crate::channel::{generate_paths, path_operators, shuffle, EffectiveChannel, PathProfile, PathSet};
use crate::linalg::CVector;
use crate::mapper::{build_frame, GsmConfig, GsmSystem};
use crate::waveform::AfdmParams;
use crate::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(mt: usize, mr: usize, n: usize, k: usize, q: usize) -> GsmSystem {
    GsmSystem::new(GsmConfig::new(mt, mr, n, k, q).unwrap()).unwrap()
}

fn unit_paths(delays: Vec<usize>, dopplers: Vec<f64>) -> PathSet {
    let p = delays.len();
    PathSet::new(1, 1, delays, dopplers, vec![C64::new(1.0, 0.0); p]).unwrap()
}

#[test]
fn xi_single_column_and_zero() {
    let params = AfdmParams::full_diversity(8, 1, 0, 1).unwrap();
    let ops = path_operators(&unit_paths(vec![1], vec![1.0]), &params).unwrap();
    let z: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0)).collect();
    let xi = build_xi(&z, &ops);
    assert_eq!(xi.ncols(), 1);
    let expect = &ops[0] * CVector::from_vec(z.clone());
    assert!((xi.column(0) - expect).norm() < 1e-12);
    let zero = build_xi(&vec![C64::default(); 16], &ops);
    assert_eq!(zero, CMatrix::zeros(8, 2));
}

#[test]
fn xi_times_gains_reproduces_effective_channel() {
    let sys = system(2, 2, 8, 1, 4);
    let params = AfdmParams::full_diversity(8, 1, 0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let prof = PathProfile {
        paths: 2,
        l_max: 1,
        k_max: 1.0,
        integer_doppler: false,
    };
    for _ in 0..20 {
        let ps = generate_paths(&prof, 2, 2, &mut rng).unwrap();
        let ch = EffectiveChannel::assemble(&ps, &params).unwrap();
        let bits: Vec<bool> = (0..sys.config.bits_per_frame()).map(|_| rng.random()).collect();
        let x = build_frame(&bits, &sys.config, &sys.codebook, &sys.constellation).unwrap();
        let xv = x.as_slice().to_vec();
        let y = &ch.g * CVector::from_vec(xv.clone());
        let xi = build_xi(&shuffle(&xv, 8, 2), &ch.per_path);
        let h = stacked_gains(&ps);
        let per = 2 * ps.paths();
        for mr in 0..2 {
            let hm = CVector::from_column_slice(&h[mr * per..(mr + 1) * per]);
            let ym = &xi * hm;
            let err = (ym - y.rows(mr * 8, 8)).norm();
            assert!(err < 1e-10, "err {err}");
        }
    }
}

#[test]
fn upep_single_eigenvalue_closed_form() {
    for &lam in &[0.1f64, 1.0, 4.0, 37.0] {
        for &g in &[0.5f64, 3.0, 100.0, 1e4] {
            let c = lam * g / 4.0;
            let closed = 0.5 * (1.0 - (c / (1.0 + c)).sqrt());
            let v = upep(&[lam], g, 1, 1).unwrap();
            assert!((v - closed).abs() < 1e-10, "lam={lam} g={g}: {v} vs {closed}");
        }
    }
}

#[test]
fn upep_limits_and_monotonicity() {
    let eigs = [0.7, 2.0, 5.5];
    // deviation from 1/2 scales like sqrt(gamma)
    assert!((upep(&eigs, 1e-12, 3, 2).unwrap() - 0.5).abs() < 1e-5);
    let mut prev = 0.5;
    for db in (0..40).step_by(2) {
        let v = upep(&eigs, 10f64.powf(db as f64 / 10.0), 3, 2).unwrap();
        assert!(v < prev);
        prev = v;
    }
    let smaller = upep(&[0.5, 2.0, 5.5], 10.0, 3, 2).unwrap();
    assert!(smaller > upep(&eigs, 10.0, 3, 2).unwrap());
    assert!(upep(&[], 10.0, 1, 1).is_err());
}

#[test]
fn high_snr_bound_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let r = rng.random_range(1..5);
        let eigs: Vec<f64> = (0..r).map(|_| rng.random::<f64>() * 5.0 + 0.01).collect();
        for g in [10.0, 100.0, 1e4] {
            let exact = upep(&eigs, g, 2, 2).unwrap();
            assert!(upep_high_snr(&eigs, g, 2, 2) >= exact);
        }
    }
}

#[test]
fn two_codeword_union_bound() {
    let sys = system(1, 1, 1, 1, 2);
    assert_eq!(sys.config.bits_per_frame(), 1);
    let params = AfdmParams::ofdm(1, 0, 0, 0).unwrap();
    let geo = vec![GeometryState {
        delays: vec![0],
        dopplers: vec![0.0],
        weight: 1.0,
    }];
    let b = union_bound_exact(&sys, &params, &geo, &[5.0]).unwrap();
    // (1/(2 * 1)) * (1 * UPEP + 1 * UPEP), both events with |e|^2 = 4
    let u = upep(&[4.0], 5.0, 1, 1).unwrap();
    assert!((b.ber[0] - u).abs() < 1e-14);
}

#[test]
fn doppler_pmf_and_geometries() {
    let pmf = integer_doppler_pmf(1.0);
    assert_eq!(pmf.len(), 3);
    for (_, p) in &pmf {
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
    let pmf = integer_doppler_pmf(2.3);
    assert!((pmf.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    let prof = PathProfile {
        paths: 3,
        l_max: 2,
        k_max: 1.0,
        integer_doppler: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let states = geometry_states(&prof, 0, &mut rng).unwrap();
    assert_eq!(states.len(), 3 * 6 * 6);
    assert!((states.iter().map(|s| s.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(states.iter().all(|s| s.delays[0] == 0));
}

#[test]
fn difference_table_accounts_for_all_pairs() {
    let sys = system(2, 2, 1, 1, 2);
    let t = group_difference_table(&sys);
    assert_eq!(t.len(), 9);
    assert!(t[0].0.iter().all(|v| v.norm() == 0.0));
    assert_eq!(t.iter().map(|e| e.1).sum::<u64>(), 16);
    // sum of Hamming distances over all ordered pairs of 2-bit words
    assert_eq!(t.iter().map(|e| e.2).sum::<u64>(), 16);
}

#[test]
fn single_path_diversity_is_rx_count() {
    let sys = system(2, 3, 3, 1, 2);
    let params = AfdmParams::full_diversity(3, 0, 0, 1).unwrap();
    let ops = path_operators(&unit_paths(vec![0], vec![0.0]), &params).unwrap();
    let d = diversity_and_coding_gain(&sys, &ops).unwrap();
    assert_eq!(d.min_rank, 1);
    assert_eq!(d.diversity_order, 3);
    assert_eq!(d.events, 9u64.pow(3) - 1);
}

#[test]
fn sampled_bound_agrees_with_exact() {
    let sys = system(2, 1, 3, 1, 2);
    let params = AfdmParams::full_diversity(3, 0, 0, 1).unwrap();
    let prof = PathProfile {
        paths: 2,
        l_max: 1,
        k_max: 0.0,
        integer_doppler: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let geos = geometry_states(&prof, 0, &mut rng).unwrap();
    let gammas = [3.0, 30.0];
    let exact = union_bound_exact(&sys, &params, &geos, &gammas).unwrap();
    let sampled = union_bound_sampled(&sys, &params, &prof, &gammas, 20_000, &mut rng).unwrap();
    for i in 0..2 {
        let diff = (exact.ber[i] - sampled.ber[i]).abs();
        assert!(diff < 4.0 * sampled.stderr[i], "{} vs {} +- {}", exact.ber[i], sampled.ber[i], sampled.stderr[i]);
    }
}

#[test]
fn codeword_enumeration_matches_frame_builder() {
    let sys = system(2, 1, 2, 1, 4);
    let words = frame_codewords(&sys);
    let l = sys.config.bits_per_frame();
    assert_eq!(words.len(), 1 << l);
    for (w, f) in words.iter().enumerate() {
        let bits: Vec<bool> = (0..l).map(|i| (w >> (l - 1 - i)) & 1 == 1).collect();
        let x = build_frame(&bits, &sys.config, &sys.codebook, &sys.constellation).unwrap();
        assert_eq!(x.as_slice(), f.as_slice());
    }
}

#[test]
fn capacity_limits() {
    let sys = system(2, 2, 2, 1, 2);
    let params = AfdmParams::full_diversity(2, 0, 0, 0).unwrap();
    let prof = PathProfile {
        paths: 1,
        l_max: 0,
        k_max: 0.0,
        integer_doppler: true,
    };
    let sample = |rng: &mut ChaCha8Rng| {
        let ps = generate_paths(&prof, 2, 2, rng)?;
        Ok(EffectiveChannel::assemble(&ps, &params)?.g)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let full = sys.config.bits_per_frame() as f64 / 2.0;
    let hi = dcmc_capacity(&sys, 1e-5, 50, 0, None, sample, &mut rng).unwrap();
    assert!((hi.value - full).abs() < 0.01 * full, "{hi:?}");
    let lo = dcmc_capacity(&sys, 100.0, 50, 0, None, sample, &mut rng).unwrap();
    assert!(lo.value < 0.05, "{lo:?}");
    assert!(lo.value > -0.05);
}
