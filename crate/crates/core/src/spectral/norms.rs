use serde::{Deserialize, Serialize};

use super::field::{synthesize_real, PhysicalField, SpectralField};
use super::ops::{derivative, gradient_norm_sq, l2_norm_sq};

/// Uniform-grid quadrature of `|u|^q` over the torus, raised to `1/q`.
pub fn lp_norm(f: &PhysicalField, q: f64) -> f64 {
    lp_norm_pow(f, q).powf(1.0 / q)
}

/// `int |u|^q` by uniform-grid quadrature.
pub fn lp_norm_pow(f: &PhysicalField, q: f64) -> f64 {
    assert!(q.is_finite() && q >= 1.0, "q must be finite and >= 1");
    let [a, b, c] = f.components();
    let mut s = 0.0;
    for i in 0..f.len() {
        let m2 = a[i] * a[i] + b[i] * b[i] + c[i] * c[i];
        s += if q == 2.0 { m2 } else { m2.powf(0.5 * q) };
    }
    s * f.cell_volume()
}

/// Velocity and velocity gradient sampled on a common grid.
#[derive(Debug, Clone)]
pub struct GradientSamples {
    pub velocity: PhysicalField,
    /// `grad[i][j]` holds `d u_i / d x_j`.
    pub grad: [[Vec<f64>; 3]; 3],
}

impl GradientSamples {
    pub fn new(u: &SpectralField, m: usize) -> Self {
        let d: Vec<SpectralField> = (0..3).map(|j| derivative(u, j)).collect();
        let mut cubes: Vec<&[_]> = vec![u.component(0), u.component(1), u.component(2)];
        for i in 0..3 {
            for dj in &d {
                cubes.push(dj.component(i));
            }
        }
        let mut grids = synthesize_real(m, u.k_max(), &cubes).into_iter();
        let velocity =
            PhysicalField::from_components(m, [grids.next().unwrap(), grids.next().unwrap(), grids.next().unwrap()])
                .expect("grid sizes agree");
        let mut next = || grids.next().unwrap();
        let grad = [
            [next(), next(), next()],
            [next(), next(), next()],
            [next(), next(), next()],
        ];
        Self { velocity, grad }
    }

    pub fn grid(&self) -> usize {
        self.velocity.grid()
    }

    /// `|grad u|^2` at grid point `idx`.
    #[inline]
    pub fn grad_sq_at(&self, idx: usize) -> f64 {
        let mut s = 0.0;
        for row in &self.grad {
            for g in row {
                s += g[idx] * g[idx];
            }
        }
        s
    }

    /// `I_r(u) = int |grad u|^2 |u|^{r-1}`.
    pub fn weighted_gradient_integral(&self, r: f64) -> f64 {
        let mut s = 0.0;
        for idx in 0..self.velocity.len() {
            let [a, b, c] = self.velocity.at(idx);
            let m2 = a * a + b * b + c * c;
            s += self.grad_sq_at(idx) * pow_half(m2, r - 1.0);
        }
        s * self.velocity.cell_volume()
    }
}

/// `(m2)^{e/2}` with `0^0 = 1`.
#[inline]
pub(crate) fn pow_half(m2: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 2.0 {
        m2
    } else {
        m2.powf(0.5 * e)
    }
}

/// Norms of a field: `||u||^2`, `||grad u||^2`, requested `L^q` norms and `I_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2_sq: f64,
    pub grad_l2_sq: f64,
    pub lp: Vec<(f64, f64)>,
    pub i_r: f64,
}

impl NormReport {
    /// Evaluates all norms; quadratures run on the absorption (2N) grid.
    pub fn compute(u: &SpectralField, r: f64, qs: &[f64]) -> Self {
        let samples = GradientSamples::new(u, u.resolution().absorption_grid());
        Self {
            l2_sq: l2_norm_sq(u),
            grad_l2_sq: gradient_norm_sq(u),
            lp: qs.iter().map(|&q| (q, lp_norm(&samples.velocity, q))).collect(),
            i_r: samples.weighted_gradient_integral(r),
        }
    }
}
