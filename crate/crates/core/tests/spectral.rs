use cbf_core::harness::{random_spectrum, taylor_green};
use cbf_core::spectral::{
    derivative, gradient_norm_sq, inner, l2_norm_sq, leray_project, lp_norm_pow, truncate_modes, Resolution,
    SpectralField,
};
use cbf_core::CbfError;
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn random_field(k: usize, seed: u64, slope: f64) -> SpectralField {
    random_spectrum(Resolution::new(k, 2 * k + 2).unwrap(), seed, slope, 1.0)
}

/// Arbitrary real field, not divergence-free.
fn raw_field(k: usize, seed: u64) -> SpectralField {
    let res = Resolution::new(k, 2 * k + 2).unwrap();
    let mut u = SpectralField::zeros(res);
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for idx in 0..res.n_modes() {
        let mirror = res.mirror(idx);
        if mirror < idx {
            continue;
        }
        for c in 0..3 {
            let v = if mirror == idx {
                Complex64::new(next(), 0.0)
            } else {
                Complex64::new(next(), next())
            };
            u.component_mut(c)[idx] = v;
            u.component_mut(c)[mirror] = v.conj();
        }
    }
    u
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_on_every_alias_free_grid(k in 1usize..5, seed in any::<u64>(), extra in 0usize..4) {
        let u = raw_field(k, seed);
        let m = 2 * k + 2 + extra;
        let grid = lp_norm_pow(&u.to_physical_on(m), 2.0);
        prop_assert!(close(grid, l2_norm_sq(&u), 1e-12));
    }

    #[test]
    fn physical_round_trip(k in 1usize..5, seed in any::<u64>()) {
        let u = raw_field(k, seed);
        let back = SpectralField::from_physical(&u.to_physical(), u.resolution()).unwrap();
        prop_assert!(l2_norm_sq(&back.sub(&u)) <= 1e-26 * l2_norm_sq(&u));
    }

    #[test]
    fn leray_projection_is_an_orthogonal_projection(k in 1usize..5, seed in any::<u64>()) {
        let u = raw_field(k, seed);
        let pu = leray_project(&u);
        prop_assert!(pu.divergence_defect() < 1e-13);
        prop_assert!(l2_norm_sq(&leray_project(&pu).sub(&pu)) <= 1e-28 * l2_norm_sq(&u));
        prop_assert!(l2_norm_sq(&pu) <= l2_norm_sq(&u) * (1.0 + 1e-14));
        prop_assert!(inner(&u.sub(&pu), &pu).abs() <= 1e-12 * l2_norm_sq(&u));
    }

    #[test]
    fn truncation_shrinks_norms_and_commutes(k in 2usize..5, n in 0usize..5, seed in any::<u64>()) {
        let u = raw_field(k, seed);
        let n = n.min(k);
        let s = truncate_modes(&u, n).unwrap();
        prop_assert!(l2_norm_sq(&s) <= l2_norm_sq(&u) * (1.0 + 1e-14));
        prop_assert!(gradient_norm_sq(&s) <= gradient_norm_sq(&u) * (1.0 + 1e-14));
        prop_assert_eq!(truncate_modes(&s, n).unwrap(), s.clone());
        let a = truncate_modes(&leray_project(&u), n).unwrap();
        let b = leray_project(&s);
        prop_assert!(l2_norm_sq(&a.sub(&b)) <= 1e-28 * l2_norm_sq(&u).max(1.0));
    }

    #[test]
    fn random_spectrum_is_admissible(k in 1usize..5, seed in any::<u64>(), slope in -4.0f64..0.0) {
        let u = random_field(k, seed, slope);
        prop_assert!(u.divergence_defect() < 1e-12);
        prop_assert_eq!(u.hermitian_defect(), 0.0);
        prop_assert!(close(l2_norm_sq(&u), (2.0 * std::f64::consts::PI).powi(3), 1e-12));
    }
}

#[test]
fn resolution_requires_enough_points() {
    assert!(Resolution::new(4, 10).is_ok());
    assert!(matches!(Resolution::new(4, 9), Err(CbfError::Resolution(_))));
    let res = Resolution::new(4, 10).unwrap();
    assert_eq!(res.quadratic_grid(), 15);
    assert_eq!(res.absorption_grid(), 20);
}

#[test]
fn spectral_derivative_matches_taylor_green() {
    let res = Resolution::new(3, 10).unwrap();
    let u = taylor_green(res);
    let du0_dx = derivative(&u, 0).to_physical();
    let m = res.grid();
    let h = std::f64::consts::TAU / m as f64;
    let mut worst: f64 = 0.0;
    for ix in 0..m {
        for iy in 0..m {
            for iz in 0..m {
                let (x, y, z) = (ix as f64 * h, iy as f64 * h, iz as f64 * h);
                let exact = x.cos() * y.cos() * z.cos();
                worst = worst.max((du0_dx.component(0)[du0_dx.index(ix, iy, iz)] - exact).abs());
            }
        }
    }
    assert!(worst < 1e-13, "{worst}");
}

#[test]
fn resampling_preserves_shared_modes() {
    let u = random_field(3, 11, -2.0);
    let up = u.resample(Resolution::new(5, 12).unwrap());
    assert!(close(l2_norm_sq(&up), l2_norm_sq(&u), 1e-14));
    assert_eq!(up.resample(u.resolution()), u);
}
