//! Initial conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::config::{IcKind, IcSpec};
use crate::spectral::{l2_norm_sq, leray_project_in_place, PhysicalField, Resolution, SpectralField, TORUS_VOLUME};

fn from_samples(res: Resolution, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> SpectralField {
    SpectralField::from_physical(&PhysicalField::from_fn(res.grid(), f), res).expect("grid matches resolution")
}

/// `(sin x cos y cos z, -cos x sin y cos z, 0)`.
pub fn taylor_green(res: Resolution) -> SpectralField {
    from_samples(res, |x, y, z| {
        [x.sin() * y.cos() * z.cos(), -x.cos() * y.sin() * z.cos(), 0.0]
    })
}

/// `(sin y, 0, 0)`.
pub fn shear(res: Resolution) -> SpectralField {
    from_samples(res, |_, y, _| [y.sin(), 0.0, 0.0])
}

/// ABC flow `(sin z + cos y, sin x + cos z, sin y + cos x)`, with `curl u = u`.
pub fn beltrami(res: Resolution) -> SpectralField {
    from_samples(res, |x, y, z| [z.sin() + y.cos(), x.sin() + z.cos(), y.sin() + x.cos()])
}

/// Random phases with mode amplitude `|k|^slope` over the whole cube,
/// Leray-projected and scaled to RMS velocity `amplitude`, i.e.
/// `||u||^2 = amplitude^2 (2pi)^3`.
pub fn random_spectrum(res: Resolution, seed: u64, slope: f64, amplitude: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::zeros(res);
    for idx in 0..res.n_modes() {
        let mirror = res.mirror(idx);
        if mirror <= idx {
            continue;
        }
        let k = res.wavevector(idx);
        let mag = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt().powf(slope);
        for comp in 0..3 {
            let c = Complex64::from_polar(mag, rng.gen_range(0.0..std::f64::consts::TAU));
            u.component_mut(comp)[idx] = c;
            u.component_mut(comp)[mirror] = c.conj();
        }
    }
    leray_project_in_place(&mut u);
    let e = l2_norm_sq(&u);
    if e > 0.0 {
        u.scale(amplitude * (TORUS_VOLUME / e).sqrt());
    }
    u
}

pub fn initial_condition(spec: &IcSpec, res: Resolution) -> SpectralField {
    match spec.kind {
        IcKind::TaylorGreen => taylor_green(res),
        IcKind::Shear => shear(res),
        IcKind::Beltrami => beltrami(res),
        IcKind::RandomSpectrum => random_spectrum(res, spec.seed, spec.slope, spec.amplitude),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gradient_norm_sq;
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_norms() {
        let u = taylor_green(Resolution::new(2, 8).unwrap());
        assert!(u.divergence_defect() < 1e-14);
        assert!((l2_norm_sq(&u) - 2.0 * PI.powi(3)).abs() < 1e-12 * PI.powi(3));
        assert!((gradient_norm_sq(&u) - 6.0 * PI.powi(3)).abs() < 1e-12 * PI.powi(3));
    }

    #[test]
    fn random_spectrum_is_deterministic_and_linear_in_amplitude() {
        let res = Resolution::new(3, 8).unwrap();
        let a = random_spectrum(res, 7, -2.0, 1.0);
        assert_eq!(a, random_spectrum(res, 7, -2.0, 1.0));
        assert_ne!(a, random_spectrum(res, 8, -2.0, 1.0));
        assert!(a.divergence_defect() < 1e-12);
        assert!(a.hermitian_defect() == 0.0);
        assert_eq!(a.mean(), [Complex64::new(0.0, 0.0); 3]);
        let b = random_spectrum(res, 7, -2.0, 2.0);
        assert!((l2_norm_sq(&b).sqrt() - 2.0 * l2_norm_sq(&a).sqrt()).abs() < 1e-12 * l2_norm_sq(&b).sqrt());
    }
}
