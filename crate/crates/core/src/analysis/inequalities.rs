//! Quadrature checks of the weighted gradient inequalities, the `L^{3(r+1)}`
//! ratio, the Nikol'skii seminorm and cube truncation error.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::norms::pow_half;
use crate::spectral::{
    laplacian, lp_norm, synthesize_real, truncate_modes, GradientSamples, PhysicalField, SpectralField,
};

/// `(I_r, M, r I_r)` with `M = int (-Lap u) . |u|^{r-1} u`, and for `r >= 3`
/// the right side of `M = I_r + (r-1)/4 int |u|^{r-3} |grad |u|^2|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub r: f64,
    pub i_r: f64,
    pub m: f64,
    pub r_i_r: f64,
    pub identity_rhs: Option<f64>,
}

impl SandwichReport {
    fn scale(&self) -> f64 {
        self.m.abs().max(self.r_i_r.abs()).max(f64::MIN_POSITIVE)
    }

    /// Smallest of `I_r`, `M - I_r` and `r I_r - M`, relative to `max(M, r I_r)`.
    pub fn min_slack(&self) -> f64 {
        let s = self.scale();
        (self.i_r / s)
            .min((self.m - self.i_r) / s)
            .min((self.r_i_r - self.m) / s)
    }

    pub fn identity_defect(&self) -> Option<f64> {
        self.identity_rhs.map(|rhs| (self.m - rhs).abs() / self.scale())
    }
}

fn is_odd_integer(r: f64) -> bool {
    r.fract() == 0.0 && (r as i64) % 2 == 1
}

/// Smallest integer `>= n` with no prime factor above 5.
fn fft_friendly(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut x = m;
            for p in [2, 3, 5] {
                while x % p == 0 {
                    x /= p;
                }
            }
            x == 1
        })
        .expect("5-smooth numbers are unbounded")
}

/// Quadrature grid for the sandwich integrals. For odd integer `r` the
/// integrands are trigonometric polynomials of degree `(r+1)K` and the grid
/// integrates them exactly. Otherwise `|u|^{r-1} u` is not smooth at zeros of
/// `u` and the grid has about `40K` points for `r >= 3`, where the identity is
/// checked, and `16K` below.
pub fn sandwich_grid(u: &SpectralField, r: f64) -> usize {
    let res = u.resolution();
    let k = res.k_max();
    let need = if is_odd_integer(r) {
        (r as usize + 1) * k + 2
    } else if r >= 3.0 {
        fft_friendly(40 * k)
    } else {
        fft_friendly(16 * k + 2)
    };
    need.max(res.absorption_grid())
}

pub fn lemma21_sandwich(u: &SpectralField, r: f64) -> SandwichReport {
    lemma21_sandwich_on(u, r, sandwich_grid(u, r))
}

pub fn lemma21_sandwich_on(u: &SpectralField, r: f64, m: usize) -> SandwichReport {
    let s = GradientSamples::new(u, m);
    let lap = laplacian(u);
    let lap_grid = synthesize_real(m, u.k_max(), &[lap.component(0), lap.component(1), lap.component(2)]);
    let [u0, u1, u2] = s.velocity.components();
    let (mut i_r, mut mm, mut extra) = (0.0, 0.0, 0.0);
    for idx in 0..u0.len() {
        let v = [u0[idx], u1[idx], u2[idx]];
        let m2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let w = pow_half(m2, r - 1.0);
        i_r += s.grad_sq_at(idx) * w;
        mm -= w * (0..3).map(|i| lap_grid[i][idx] * v[i]).sum::<f64>();
        if r >= 3.0 {
            let mut gg = 0.0;
            for j in 0..3 {
                let d: f64 = 2.0 * (0..3).map(|i| v[i] * s.grad[i][j][idx]).sum::<f64>();
                gg += d * d;
            }
            extra += pow_half(m2, r - 3.0) * gg;
        }
    }
    let cell = s.velocity.cell_volume();
    let (i_r, mm) = (i_r * cell, mm * cell);
    SandwichReport {
        r,
        i_r,
        m: mm,
        r_i_r: r * i_r,
        identity_rhs: (r >= 3.0).then_some(i_r + 0.25 * (r - 1.0) * extra * cell),
    }
}

/// `||u||_{L^{3(r+1)}}^{r+1} / I_r(u)` on the absorption grid; `None` when
/// `I_r(u) = 0`.
pub fn lemma22_ratio(u: &SpectralField, r: f64) -> Option<f64> {
    lemma22_ratio_on(u, r, u.resolution().absorption_grid())
}

pub fn lemma22_ratio_on(u: &SpectralField, r: f64, m: usize) -> Option<f64> {
    let s = GradientSamples::new(u, m);
    let i_r = s.weighted_gradient_integral(r);
    if i_r <= 0.0 {
        return None;
    }
    Some(lp_norm(&s.velocity, 3.0 * (r + 1.0)).powf(r + 1.0) / i_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NikolskiiReport {
    /// `sup_h int |u(x+h) - u(x)|^p / |h|^{sp}` over grid shifts.
    pub value: f64,
    /// Maximizing shift in grid units.
    pub shift: [i64; 3],
}

/// Discrete Nikol'skii quotient over all grid shifts `0 < |h| < delta`.
pub fn nikolskii_seminorm(u: &PhysicalField, s: f64, p: f64, delta: f64) -> NikolskiiReport {
    let m = u.grid();
    let spacing = std::f64::consts::TAU / m as f64;
    let reach = ((delta / spacing).ceil() as i64).min(m as i64 / 2);
    let [c0, c1, c2] = u.components();
    let mut best = NikolskiiReport {
        value: 0.0,
        shift: [0, 0, 0],
    };
    let mi = m as i64;
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                // h and -h give the same integral
                if [a, b, c] <= [0, 0, 0] {
                    continue;
                }
                let norm = spacing * ((a * a + b * b + c * c) as f64).sqrt();
                if norm >= delta {
                    continue;
                }
                let mut sum = 0.0;
                for iz in 0..m {
                    let jz = (iz as i64 + c).rem_euclid(mi) as usize;
                    for iy in 0..m {
                        let jy = (iy as i64 + b).rem_euclid(mi) as usize;
                        let row = (iz * m + iy) * m;
                        let srow = (jz * m + jy) * m;
                        for ix in 0..m {
                            let jx = (ix as i64 + a).rem_euclid(mi) as usize;
                            let (i, j) = (row + ix, srow + jx);
                            let d0 = c0[j] - c0[i];
                            let d1 = c1[j] - c1[i];
                            let d2 = c2[j] - c2[i];
                            sum += pow_half(d0 * d0 + d1 * d1 + d2 * d2, p);
                        }
                    }
                }
                let q = sum * u.cell_volume() / norm.powf(s * p);
                if q > best.value {
                    best = NikolskiiReport {
                        value: q,
                        shift: [a, b, c],
                    };
                }
            }
        }
    }
    best
}

/// `(seminorm^p, I_r)` with `s = 2/(r+1)`, `p = r+1`, both on grid `m`.
pub fn nikolskii_pair(u: &SpectralField, r: f64, delta: f64, m: usize) -> (f64, f64) {
    let samples = GradientSamples::new(u, m);
    let n = nikolskii_seminorm(&samples.velocity, 2.0 / (r + 1.0), r + 1.0, delta);
    (n.value, samples.weighted_gradient_integral(r))
}

/// `||S_n f - f||_{L^q}` for each `n`, by quadrature on grid `m`.
pub fn truncation_errors(f: &SpectralField, ns: &[usize], q: f64, m: usize) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| Ok(lp_norm(&f.sub(&truncate_modes(f, n)?).to_physical_on(m), q)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Resolution;
    use std::f64::consts::PI;

    fn shear(res: Resolution) -> SpectralField {
        SpectralField::from_physical(&PhysicalField::from_fn(res.grid(), |_, y, _| [y.sin(), 0.0, 0.0]), res).unwrap()
    }

    #[test]
    fn shear_attains_upper_bound() {
        let u = shear(Resolution::new(2, 6).unwrap());
        let rep = lemma21_sandwich(&u, 3.0);
        let pi3 = PI.powi(3);
        assert!((rep.i_r - pi3).abs() < 1e-10 * pi3);
        assert!((rep.m - 3.0 * pi3).abs() < 1e-10 * pi3);
        assert!((rep.r_i_r - rep.m).abs() < 1e-10 * pi3);
        assert!(rep.identity_defect().unwrap() < 1e-12);
    }

    #[test]
    fn grid_sizes_are_fft_friendly() {
        assert_eq!(fft_friendly(120), 120);
        assert_eq!(fft_friendly(121), 125);
        assert_eq!(fft_friendly(50), 50);
        assert_eq!(fft_friendly(7), 8);
    }

    #[test]
    fn zero_field_gives_zero_and_no_ratio() {
        let u = SpectralField::zeros(Resolution::new(2, 6).unwrap());
        let rep = lemma21_sandwich(&u, 3.0);
        assert_eq!((rep.i_r, rep.m, rep.r_i_r), (0.0, 0.0, 0.0));
        assert_eq!(lemma22_ratio(&u, 3.0), None);
    }

    #[test]
    fn lemma22_shear_ratio() {
        let u = shear(Resolution::new(2, 6).unwrap());
        // int sin^12 over the torus = (2pi)^2 * 2pi * C(12,6) / 2^12
        let l12 = 8.0 * PI.powi(3) * 924.0 / 4096.0;
        let expected = l12.powf(1.0 / 3.0) / PI.powi(3);
        let got = lemma22_ratio_on(&u, 3.0, 32).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn nikolskii_is_p_homogeneous() {
        let f = PhysicalField::from_fn(8, |x, y, z| [y.sin(), z.cos(), (x + y).sin()]);
        let a = nikolskii_seminorm(&f, 0.5, 4.0, PI).value;
        let mut g = f.clone();
        g.scale(-3.0);
        let b = nikolskii_seminorm(&g, 0.5, 4.0, PI).value;
        assert!((b - 81.0 * a).abs() < 1e-10 * b);
    }
}
