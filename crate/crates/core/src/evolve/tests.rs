use super::*;
use crate::model::{build_hamiltonian, GainLossAxis, Geometry, ModelSpec};
use crate::similarity::build_similarity;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hn(right: f64, left: f64, sites: usize) -> HamiltonianMatrix {
    build_hamiltonian(&ModelSpec::DiscreteHn {
        hop_right: right,
        hop_left: left,
        sites,
    })
    .unwrap()
}

fn random_state(n: usize, seed: u64) -> WaveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..n)
        .map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    WaveState::from_amplitudes(amps, 0.0).unwrap()
}

fn random_matrix(n: usize, seed: u64) -> Mat<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(n, n, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn wrap(m: Mat<c64>) -> HamiltonianMatrix {
    let n = m.nrows();
    HamiltonianMatrix::new(m, Geometry::chain(n, 1.0)).unwrap()
}

/// Largest entrywise gap between two states after aligning global phase,
/// plus the gap between their log norms.
fn state_gap(a: &WaveState, b: &WaveState) -> (f64, f64) {
    let overlap: c64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c64::new(1.0, 0.0)
    };
    let amp = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max);
    (amp, (a.log_norm_sq() - b.log_norm_sq()).abs())
}

/// Direct amplitudes gap without phase alignment.
fn amp_gap(a: &WaveState, b: &WaveState) -> f64 {
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn diagonal_matrix_decomposes_to_identity_columns() {
    let mut m = Mat::<c64>::zeros(2, 2);
    m[(0, 0)] = c64::new(1.0, 0.0);
    m[(1, 1)] = c64::new(0.0, 2.0);
    let dec = decompose_matrix(&m).unwrap();
    let mut values = dec.eigenvalues.clone();
    values.sort_by(|a, b| a.im.total_cmp(&b.im));
    assert!((values[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
    assert!((values[1] - c64::new(0.0, 2.0)).norm() < 1e-14);
    for k in 0..2 {
        let site = if dec.eigenvalues[k].im.abs() < 1e-9 {
            0
        } else {
            1
        };
        assert!((dec.right[(site, k)].norm() - 1.0).abs() < 1e-14);
        assert!(dec.right[(1 - site, k)].norm() < 1e-14);
        assert!((dec.left[(site, k)].norm() - 1.0).abs() < 1e-14);
    }
    assert!(dec.biorthogonality_residual() < 1e-14);
}

#[test]
fn hatano_nelson_biorthogonality() {
    let h = hn(1.0, 2.0, 50);
    let dec = decompose(&h).unwrap();
    assert!(dec.biorthogonality_residual() < 1e-8);
    assert!(dec.reconstruction_residual(&h.matrix) < 1e-8);
}

#[test]
fn similarity_preserves_spectrum() {
    let spec = ModelSpec::DiscreteHn {
        hop_right: 1.0,
        hop_left: 2.0,
        sites: 50,
    };
    let h = build_hamiltonian(&spec).unwrap();
    let s = build_similarity(&spec, h.dim()).unwrap();
    let hbar = crate::similarity::hermitian_counterpart(&h, &s).unwrap();
    let mut a = decompose(&h).unwrap().eigenvalues;
    let mut b = decompose(&hbar).unwrap().eigenvalues;
    for v in [&mut a, &mut b] {
        v.sort_by(|x, y| x.re.total_cmp(&y.re));
    }
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn strong_skin_chain_is_balanced_before_decomposing() {
    let spec = ModelSpec::DiscreteHn {
        hop_right: 1.0,
        hop_left: 2.0,
        sites: 100,
    };
    let h = build_hamiltonian(&spec).unwrap();
    let s = build_similarity(&spec, h.dim()).unwrap();
    for dec in [
        decompose(&h).unwrap(),
        decompose_with_similarity(&h, &s).unwrap(),
    ] {
        assert!(dec.matrix_condition < 1e3);
        assert!(dec.biorthogonality_residual() < 1e-8);
        // entries far below the diagonal carry round-off times r^(i-j)
        let rec = dec.reconstruct();
        for i in 0..100_usize {
            for j in 0..100_usize {
                let allowed = 1e-13 * 2f64.powf(0.5 * (i as f64 - j as f64)).max(1.0);
                assert!((rec[(i, j)] - h.matrix[(i, j)]).norm() < allowed + 1e-12);
            }
        }
    }
}

#[test]
fn jordan_block_is_defective() {
    let mut m = Mat::<c64>::zeros(2, 2);
    m[(0, 0)] = c64::new(1.0, 0.0);
    m[(1, 1)] = c64::new(1.0, 0.0);
    m[(0, 1)] = c64::new(1.0, 0.0);
    assert!(matches!(
        decompose_matrix(&m),
        Err(Error::DefectiveMatrix { .. })
    ));
}

#[test]
fn auto_falls_back_to_expm() {
    let mut m = Mat::<c64>::zeros(2, 2);
    m[(0, 1)] = c64::new(1.0, 0.0);
    let h = wrap(m);
    let psi =
        WaveState::from_amplitudes(vec![c64::new(0.0, 0.0), c64::new(1.0, 0.0)], 0.0).unwrap();
    let res = evolve_series(&h, &psi, &[0.0, 1.0], Method::Auto, None).unwrap();
    assert_eq!(res.method, Method::Expm);
    // e^{-iN}(0,1) = (-i, 1)
    let raw = res.states[1].raw_amplitudes();
    assert!((raw[0] - c64::new(0.0, -1.0)).norm() < 1e-14);
    assert!((raw[1] - c64::new(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn zero_time_leaves_state_unchanged() {
    let h = hn(1.0, 2.0, 30);
    let dec = decompose(&h).unwrap();
    let psi = random_state(30, 1);
    let out = propagate_spectral(&dec, &psi, 0.0).unwrap();
    assert!(amp_gap(&out, &psi) < 1e-12);
    assert!((out.log_norm_sq() - psi.log_norm_sq()).abs() < 1e-12);
    let out = propagate_expm(&h, &psi, 0.0).unwrap();
    assert_eq!(out, psi);
}

#[test]
fn hermitian_evolution_is_unitary() {
    let h = hn(1.0, 1.0, 60);
    let dec = decompose(&h).unwrap();
    let psi = random_state(60, 2);
    let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.75).collect();
    let res = spectral_series(&dec, &psi, &times).unwrap();
    for k in 0..res.len() {
        assert!((res.log_norm(k) - psi.log_norm_sq()).abs() < 1e-10);
    }
}

#[test]
fn spectral_matches_expm_on_random_matrices() {
    for seed in 0..3 {
        let m = random_matrix(50, 10 + seed);
        let h = wrap(m);
        let dec = decompose(&h).unwrap();
        let psi = random_state(50, 20 + seed);
        for t in [0.3, 1.0, 2.5] {
            let a = propagate_spectral(&dec, &psi, t).unwrap();
            let b = propagate_expm(&h, &psi, t).unwrap();
            assert!(
                amp_gap(&a, &b) < 1e-8,
                "seed {seed} t {t}: {}",
                amp_gap(&a, &b)
            );
            let rel = (a.log_norm_sq() - b.log_norm_sq()).abs();
            assert!(rel < 1e-8, "seed {seed} t {t}: log norm gap {rel}");
        }
    }
}

#[test]
fn expm_nilpotent_exact() {
    let mut m = Mat::<c64>::zeros(2, 2);
    m[(0, 1)] = c64::new(1.0, 0.0);
    let u = propagator(&m, 1.0).unwrap();
    let scale = u.log_scale.exp();
    let expect = [
        [c64::new(1.0, 0.0), c64::new(0.0, -1.0)],
        [c64::new(0.0, 0.0), c64::new(1.0, 0.0)],
    ];
    for i in 0..2 {
        for j in 0..2 {
            assert!((u.matrix[(i, j)] * scale - expect[i][j]).norm() < 1e-15);
        }
    }
}

#[test]
fn series_methods_agree_on_hatano_nelson() {
    let spec = ModelSpec::DiscreteHn {
        hop_right: 1.0,
        hop_left: 2.0,
        sites: 100,
    };
    let h = build_hamiltonian(&spec).unwrap();
    let s = build_similarity(&spec, h.dim()).unwrap();
    // Spectral round-off is spread uniformly over the balanced frame and then
    // scaled by up to r^(distance to the right wall), so the packet starts
    // right of centre where that factor stays below 1e7.
    let mut amps = vec![c64::new(0.0, 0.0); 100];
    for (i, a) in amps.iter_mut().enumerate() {
        let x = i as f64 - 55.0;
        *a = c64::new((-x * x / 50.0).exp(), 0.0);
    }
    let psi = WaveState::from_amplitudes(amps, 0.0).unwrap();
    let times: Vec<f64> = (0..21).map(|k| k as f64 * 2.0).collect();
    let a = evolve_series(&h, &psi, &times, Method::Spectral, Some(&s)).unwrap();
    let b = evolve_series(&h, &psi, &times, Method::Expm, None).unwrap();
    for k in 0..times.len() {
        let da = a.site_density(k);
        let db = b.site_density(k);
        let ma = da.iter().cloned().fold(0.0, f64::max);
        let mb = db.iter().cloned().fold(0.0, f64::max);
        let gap = da
            .iter()
            .zip(&db)
            .map(|(x, y)| (x / ma - y / mb).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-7, "frame {k}: {gap}");
        assert!((a.log_norm(k) - b.log_norm(k)).abs() < 1e-7 * a.log_norm(k).abs().max(1.0));
    }
}

#[test]
fn single_zero_time_returns_initial_density() {
    let h = hn(1.0, 2.0, 20);
    let psi = random_state(20, 3);
    for method in [Method::Spectral, Method::Expm, Method::Auto] {
        let res = evolve_series(&h, &psi, &[0.0], method, None).unwrap();
        let dens = res.site_density(0);
        for (d, a) in dens.iter().zip(&psi.amplitudes) {
            assert!((d - a.norm_sqr()).abs() < 1e-12);
        }
    }
}

#[test]
fn descending_times_rejected_with_frame_context() {
    let h = hn(1.0, 2.0, 10);
    let psi = random_state(10, 4);
    let err = evolve_series(&h, &psi, &[0.0, 2.0, 1.0], Method::Expm, None).unwrap_err();
    assert!(matches!(err, Error::Frame { index: 2, .. }));
    let err = evolve_series(&h, &psi, &[0.0, f64::NAN], Method::Expm, None).unwrap_err();
    assert!(matches!(err, Error::Frame { index: 1, .. }));
}

#[test]
fn dimension_mismatch_rejected() {
    let h = hn(1.0, 2.0, 10);
    let psi = random_state(9, 5);
    assert!(matches!(
        evolve_series(&h, &psi, &[0.0], Method::Spectral, None),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn large_growth_stays_finite() {
    let mut m = Mat::<c64>::zeros(3, 3);
    for k in 0..3 {
        m[(k, k)] = c64::new(k as f64, 5.0 + k as f64);
    }
    m[(0, 1)] = c64::new(0.5, 0.0);
    let h = wrap(m);
    let psi = random_state(3, 6);
    let dec = decompose(&h).unwrap();
    let t = 500.0;
    let a = propagate_spectral(&dec, &psi, t).unwrap();
    let b = propagate_expm(&h, &psi, t).unwrap();
    assert!(a.log_norm_offset > 3000.0);
    assert!(a
        .amplitudes
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite()));
    let (gap, lgap) = state_gap(&a, &b);
    assert!(gap < 1e-8 && lgap < 1e-8 * a.log_norm_sq().abs());
}

#[test]
fn similarity_dynamics_identity() {
    // <x|e^{-iHt}|ψ> = S_x <x|e^{-iH̄t}|S⁻¹ψ>
    let specs = [
        ModelSpec::DiscreteHn {
            hop_right: 1.0,
            hop_left: 1.5,
            sites: 60,
        },
        ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.6,
            cells: 40,
            gainloss_axis: GainLossAxis::Y,
        },
        ModelSpec::continuous_hn(1.0, 1.0, 2.0, 0.01),
    ];
    for spec in specs {
        let h = build_hamiltonian(&spec).unwrap();
        let s = build_similarity(&spec, h.dim()).unwrap();
        let hbar = crate::similarity::hermitian_counterpart(&h, &s).unwrap();
        let psi = random_state(h.dim(), 7);
        let t = 0.7;
        let direct = propagate_expm(&h, &psi, t).unwrap();
        let inner =
            WaveState::from_amplitudes(s.apply_inverse(&psi.raw_amplitudes()), 0.0).unwrap();
        let bar = propagate_expm(&hbar, &inner, t).unwrap();
        let mut mapped = WaveState {
            amplitudes: s.apply(&bar.amplitudes),
            log_norm_offset: bar.log_norm_offset,
            time: t,
        };
        mapped.renormalize().unwrap();
        let (gap, lgap) = state_gap(&direct, &mapped);
        assert!(gap < 1e-8, "{spec:?}: {gap}");
        assert!(
            lgap < 1e-8 * direct.log_norm_sq().abs().max(1.0),
            "{spec:?}: {lgap}"
        );
    }
}

#[test]
fn counterpart_conserves_norm() {
    let spec = ModelSpec::NonHermitianSsh {
        intracell: 2.0,
        intercell: 1.0,
        gain_loss: -0.2,
        cells: 60,
        gainloss_axis: GainLossAxis::Y,
    };
    let h = build_hamiltonian(&spec).unwrap();
    let s = build_similarity(&spec, h.dim()).unwrap();
    let hbar = crate::similarity::hermitian_counterpart(&h, &s).unwrap();
    let psi = random_state(h.dim(), 8);
    let times: Vec<f64> = (0..50).map(|k| k as f64 * 4.0).collect();
    let res = evolve_series(&hbar, &psi, &times, Method::Spectral, None).unwrap();
    for k in 0..res.len() {
        assert!((res.log_norm(k) - psi.log_norm_sq()).abs() < 1e-9);
    }
}

#[test]
fn real_energy_shift_only_changes_phase() {
    let h = hn(1.0, 1.7, 40);
    let mut shifted = h.matrix.clone();
    for i in 0..40 {
        shifted[(i, i)] += c64::new(3.25, 0.0);
    }
    let shifted = wrap(shifted);
    let psi = random_state(40, 9);
    let times = [0.0, 0.5, 1.5, 4.0];
    let a = evolve_series(&h, &psi, &times, Method::Spectral, None).unwrap();
    let b = evolve_series(&shifted, &psi, &times, Method::Spectral, None).unwrap();
    for k in 0..times.len() {
        let gap = a
            .site_density(k)
            .iter()
            .zip(b.site_density(k))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-12, "frame {k}: {gap}");
    }
}

#[test]
fn method_parses() {
    assert_eq!("auto".parse::<Method>().unwrap(), Method::Auto);
    assert_eq!("expm".parse::<Method>().unwrap(), Method::Expm);
    assert!("rk4".parse::<Method>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagation_composes(
        seed in 0u64..1000,
        t1 in 0.0f64..3.0,
        t2 in 0.0f64..3.0,
        left in 0.5f64..2.0,
    ) {
        let h = hn(1.0, left, 24);
        let dec = decompose(&h).unwrap();
        let psi = random_state(24, seed);
        let once = propagate_spectral(&dec, &psi, t1 + t2).unwrap();
        let mid = propagate_spectral(&dec, &psi, t1).unwrap();
        let twice = propagate_spectral(&dec, &mid, t2).unwrap();
        let (gap, lgap) = state_gap(&once, &twice);
        prop_assert!(gap < 1e-9, "amplitude gap {}", gap);
        prop_assert!(lgap < 1e-9 * once.log_norm_sq().abs().max(1.0), "log gap {}", lgap);
    }

    #[test]
    fn frames_are_normalized_and_finite(seed in 0u64..1000, t in 0.0f64..20.0) {
        let h = hn(0.6, 1.4, 30);
        let dec = decompose(&h).unwrap();
        let psi = random_state(30, seed);
        let out = propagate_spectral(&dec, &psi, t).unwrap();
        let norm: f64 = out.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((1e-6..=1e6).contains(&norm));
        prop_assert!(out.log_norm_offset.is_finite());
    }
}
