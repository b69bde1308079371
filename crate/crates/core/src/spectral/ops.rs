//! Per-mode linear operators: derivatives, Leray projection, cube truncation.

use rustfft::num_complex::Complex64;

use super::field::{SpectralField, TORUS_VOLUME};
use crate::error::{CbfError, Result};

#[inline]
pub(crate) fn k_sq(k: [i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

/// Orthogonal projection onto zero-mean divergence-free fields:
/// `c(k) <- c(k) - k (k . c(k)) / |k|^2`, `c(0) <- 0`.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(f: &mut SpectralField) {
    let res = f.resolution();
    for idx in 0..res.n_modes() {
        let k = res.wavevector(idx);
        let kk = k_sq(k);
        if kk == 0.0 {
            for comp in 0..3 {
                f.component_mut(comp)[idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for comp in 0..3 {
            dot += f.component(comp)[idx] * k[comp] as f64;
        }
        let s = dot / kk;
        for comp in 0..3 {
            f.component_mut(comp)[idx] -= s * k[comp] as f64;
        }
    }
}

/// Galerkin truncation onto the cube `[-n, n]^3`.
pub fn truncate_modes(f: &SpectralField, n: usize) -> Result<SpectralField> {
    if n > f.k_max() {
        return Err(CbfError::Resolution(format!(
            "truncation order {n} exceeds field resolution K = {}",
            f.k_max()
        )));
    }
    let mut out = f.clone();
    let n = n as i64;
    out.map_modes(|k| {
        if k.iter().all(|c| c.abs() <= n) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(out)
}

/// `d/dx_axis`, i.e. multiplication by `i k_axis`.
pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let mut out = f.clone();
    out.map_modes(|k| Complex64::new(0.0, k[axis] as f64));
    out
}

/// Vector Laplacian, multiplication by `-|k|^2`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    out.map_modes(|k| Complex64::new(-k_sq(k), 0.0));
    out
}

/// `||u||^2 = (2pi)^3 sum_k |c(k)|^2`.
pub fn l2_norm_sq(f: &SpectralField) -> f64 {
    weighted_sum(f, |_| 1.0)
}

/// `||grad u||^2 = (2pi)^3 sum_k |k|^2 |c(k)|^2`.
pub fn gradient_norm_sq(f: &SpectralField) -> f64 {
    weighted_sum(f, k_sq)
}

/// `||Lap u||^2 = (2pi)^3 sum_k |k|^4 |c(k)|^2`.
pub fn laplacian_norm_sq(f: &SpectralField) -> f64 {
    weighted_sum(f, |k| k_sq(k) * k_sq(k))
}

fn weighted_sum(f: &SpectralField, w: impl Fn([i64; 3]) -> f64) -> f64 {
    let res = f.resolution();
    let mut s = 0.0;
    for idx in 0..res.n_modes() {
        let amp: f64 = (0..3).map(|c| f.component(c)[idx].norm_sqr()).sum();
        if amp != 0.0 {
            s += w(res.wavevector(idx)) * amp;
        }
    }
    s * TORUS_VOLUME
}

/// L^2 inner product `(2pi)^3 sum_k Re(c_f(k) . conj(c_g(k)))`.
pub fn inner(f: &SpectralField, g: &SpectralField) -> f64 {
    assert_eq!(f.resolution(), g.resolution(), "resolution mismatch");
    let mut s = 0.0;
    for comp in 0..3 {
        for (a, b) in f.component(comp).iter().zip(g.component(comp)) {
            s += a.re * b.re + a.im * b.im;
        }
    }
    s * TORUS_VOLUME
}

/// `<grad f, grad g> = (2pi)^3 sum_k |k|^2 Re(c_f . conj c_g)`.
pub fn gradient_inner(f: &SpectralField, g: &SpectralField) -> f64 {
    assert_eq!(f.resolution(), g.resolution(), "resolution mismatch");
    let res = f.resolution();
    let mut s = 0.0;
    for idx in 0..res.n_modes() {
        let mut d = 0.0;
        for comp in 0..3 {
            let (a, b) = (f.component(comp)[idx], g.component(comp)[idx]);
            d += a.re * b.re + a.im * b.im;
        }
        if d != 0.0 {
            s += k_sq(res.wavevector(idx)) * d;
        }
    }
    s * TORUS_VOLUME
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::Resolution;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shear(res: Resolution) -> SpectralField {
        let mut f = SpectralField::zeros(res);
        f.add_real_mode([0, 1, 0], [c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        f
    }

    #[test]
    fn gradient_of_scalar_is_annihilated() {
        let res = Resolution::new(3, 8).unwrap();
        // phi = cos(x + 2y) + sin(3z - y): grad phi = i k phi_k per mode
        let mut g = SpectralField::zeros(res);
        for (k, phik) in [([1i64, 2, 0], c(0.5, 0.0)), ([0, -1, 3], c(0.0, -0.5))] {
            let v = [0, 1, 2].map(|a| phik * c(0.0, k[a] as f64));
            g.add_real_mode(k, v).unwrap();
        }
        let p = leray_project(&g);
        assert!(l2_norm_sq(&p) < 1e-28);
    }

    #[test]
    fn projection_removes_potential_part() {
        // (sin y, 0, 0) + grad(cos x) = (sin y - sin x, 0, 0)
        let res = Resolution::new(2, 6).unwrap();
        let mut f = shear(res);
        f.add_real_mode([1, 0, 0], [c(0.0, 0.5), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let p = leray_project(&f);
        let expect = shear(res);
        assert!(l2_norm_sq(&p.sub(&expect)) < 1e-28);
    }

    #[test]
    fn shear_gradient_norm() {
        let res = Resolution::new(2, 6).unwrap();
        let f = shear(res);
        assert!((gradient_norm_sq(&f) - 4.0 * PI.powi(3)).abs() < 1e-12);
        assert!((l2_norm_sq(&f) - 4.0 * PI.powi(3)).abs() < 1e-12);
        assert_eq!(gradient_norm_sq(&SpectralField::zeros(res)), 0.0);
    }

    #[test]
    fn truncation_beyond_resolution_fails() {
        let res = Resolution::new(2, 6).unwrap();
        assert!(matches!(truncate_modes(&shear(res), 3), Err(CbfError::Resolution(_))));
    }

    #[test]
    fn truncation_drops_outside_cube() {
        let res = Resolution::new(3, 8).unwrap();
        let mut f = SpectralField::zeros(res);
        f.add_real_mode([0, 3, 0], [c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(truncate_modes(&f, 2).unwrap().is_zero());
        assert_eq!(truncate_modes(&f, 3).unwrap(), f);
    }
}
