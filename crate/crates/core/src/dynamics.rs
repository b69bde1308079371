//! Right-hand side of the convective Brinkman-Forchheimer system in
//! Leray-projected form, and the parabolic rescaling.
//!
//! Products are formed on padded grids: `ceil(3N/2)` points per axis for the
//! quadratic convective term, `2N` for the absorption term. With `N >= 2K+2`
//! both are alias-free for `r = 3`; for non-polynomial `|u|^{r-1} u` the
//! remainder is quadrature error.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CbfError, Result};
use crate::spectral::norms::pow_half;
use crate::spectral::{
    analyze_real, leray_project_in_place, synthesize_real, GradientSamples, Resolution, SpectralField,
};

/// Coefficients of the momentum equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Viscosity (Brinkman coefficient), `> 0`.
    pub mu: f64,
    /// Darcy coefficient, `>= 0`.
    pub alpha: f64,
    /// Forchheimer coefficient, `>= 0`.
    pub beta: f64,
    /// Absorption exponent, `>= 1`.
    pub r: f64,
}

impl ModelParams {
    pub fn new(mu: f64, alpha: f64, beta: f64, r: f64) -> Result<Self> {
        let p = Self { mu, alpha, beta, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(CbfError::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(CbfError::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(CbfError::InvalidParameter(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(CbfError::InvalidParameter(format!("r must be >= 1, got {}", self.r)));
        }
        Ok(())
    }

    /// Linear decay rate of mode `k`: `mu |k|^2 + alpha`.
    #[inline]
    pub fn linear_rate(&self, k_sq: f64) -> f64 {
        self.mu * k_sq + self.alpha
    }

    /// Whether the monotonicity argument for `||grad u||^2` applies.
    pub fn critical_threshold_met(&self) -> bool {
        self.r == 3.0 && 4.0 * self.mu * self.beta >= 1.0
    }
}

/// Leray-projected `(u.grad)u`, gradient form `u_j d_j u_i`.
pub fn convective_term(u: &SpectralField) -> SpectralField {
    let res = u.resolution();
    let s = GradientSamples::new(u, res.quadratic_grid());
    let products = advection_products(&s);
    let mut out = grid_to_field(res, s.grid(), &products);
    leray_project_in_place(&mut out);
    out
}

fn advection_products(s: &GradientSamples) -> [Vec<f64>; 3] {
    let [u0, u1, u2] = s.velocity.components();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; u0.len()]);
    for (i, o) in out.iter_mut().enumerate() {
        let [g0, g1, g2] = &s.grad[i];
        for idx in 0..u0.len() {
            o[idx] = u0[idx] * g0[idx] + u1[idx] * g1[idx] + u2[idx] * g2[idx];
        }
    }
    out
}

fn grid_to_field(res: Resolution, m: usize, grids: &[Vec<f64>; 3]) -> SpectralField {
    let cubes = analyze_real(m, res.k_max(), &[&grids[0], &grids[1], &grids[2]]);
    let mut it = cubes.into_iter();
    SpectralField::from_components(res, [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
        .expect("cube sizes agree")
}

/// Pointwise `|u|^{r-1} u` on the grid; also returns `int |u|^{r+1}`.
fn absorption_products(vel: &[Vec<f64>], m: usize, r: f64) -> ([Vec<f64>; 3], f64) {
    let n = vel[0].len();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    let mut lp = 0.0;
    for idx in 0..n {
        let (a, b, c) = (vel[0][idx], vel[1][idx], vel[2][idx]);
        let m2 = a * a + b * b + c * c;
        let w = pow_half(m2, r - 1.0);
        out[0][idx] = w * a;
        out[1][idx] = w * b;
        out[2][idx] = w * c;
        lp += w * m2;
    }
    let cell = crate::spectral::TORUS_VOLUME / (m * m * m) as f64;
    (out, lp * cell)
}

/// Leray-projected `-beta |u|^{r-1} u`.
pub fn absorption_term(u: &SpectralField, beta: f64, r: f64) -> SpectralField {
    absorption_with_norm(u, beta, r).0
}

/// Absorption term together with `||u||_{L^{r+1}}^{r+1}` from the same grid.
pub fn absorption_with_norm(u: &SpectralField, beta: f64, r: f64) -> (SpectralField, f64) {
    let res = u.resolution();
    let m = res.absorption_grid();
    let vel = synthesize_real(m, res.k_max(), &[u.component(0), u.component(1), u.component(2)]);
    let (prod, lp) = absorption_products(&vel, m, r);
    let mut out = grid_to_field(res, m, &prod);
    leray_project_in_place(&mut out);
    out.scale(-beta);
    (out, lp)
}

/// The four terms of `du/dt`, each divergence-free with zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBreakdown {
    /// `-P[(u.grad)u]`
    pub convective: SpectralField,
    /// `-beta P[|u|^{r-1} u]`
    pub absorption: SpectralField,
    /// `-alpha u`
    pub darcy: SpectralField,
    /// `mu Lap u`
    pub viscous: SpectralField,
}

impl RhsBreakdown {
    pub fn total(&self) -> SpectralField {
        let mut t = self.convective.clone();
        t.axpy(1.0, &self.absorption);
        t.axpy(1.0, &self.darcy);
        t.axpy(1.0, &self.viscous);
        t
    }
}

pub fn rhs(u: &SpectralField, p: &ModelParams) -> Result<RhsBreakdown> {
    p.validate()?;
    let mut convective = convective_term(u);
    convective.scale(-1.0);
    let absorption = absorption_term(u, p.beta, p.r);
    let darcy = u.scaled(-p.alpha);
    let mut viscous = u.clone();
    viscous.map_modes(|k| Complex64::new(-p.mu * crate::spectral::ops::k_sq(k), 0.0));
    Ok(RhsBreakdown {
        convective,
        absorption,
        darcy,
        viscous,
    })
}

/// Nonlinear part `-P[(u.grad)u + beta |u|^{r-1} u]` used by the stepper,
/// plus `||u||_{L^{r+1}}^{r+1}` as a by-product.
#[derive(Debug, Clone)]
pub struct NonlinearEval {
    pub field: SpectralField,
    pub lp_pow: f64,
}

pub fn nonlinear(u: &SpectralField, p: &ModelParams, convection: bool) -> NonlinearEval {
    let (mut field, lp_pow) = absorption_with_norm(u, p.beta, p.r);
    if convection {
        field.axpy(-1.0, &convective_term(u));
    }
    NonlinearEval { field, lp_pow }
}

/// `u_lambda(x) = lambda u(lambda x)`: mode `k` moves to `lambda k` with its
/// amplitude multiplied by `lambda`. The snapshot of `u` at time `t` becomes
/// the snapshot of `u_lambda` at `t / lambda^2`, which is returned alongside.
pub fn parabolic_rescale(u: &SpectralField, lambda: usize, t: f64, target: Resolution) -> Result<(SpectralField, f64)> {
    if lambda == 0 {
        return Err(CbfError::InvalidParameter("lambda must be a positive integer".into()));
    }
    let needed = lambda * u.k_max();
    if needed > target.k_max() {
        return Err(CbfError::Resolution(format!(
            "rescaled field needs K >= {needed}, target holds K = {}",
            target.k_max()
        )));
    }
    let src = u.resolution();
    let lam = lambda as i64;
    let mut out = SpectralField::zeros(target);
    for idx in 0..src.n_modes() {
        let k = src.wavevector(idx);
        let j = target
            .index([lam * k[0], lam * k[1], lam * k[2]])
            .expect("checked above");
        for comp in 0..3 {
            out.component_mut(comp)[j] = u.component(comp)[idx] * lambda as f64;
        }
    }
    let l = lambda as f64;
    Ok((out, t / (l * l)))
}

/// Spatial dilation `f(x) -> f(lambda x)` without amplitude change.
pub fn dilate(u: &SpectralField, lambda: usize, target: Resolution) -> Result<SpectralField> {
    let (mut f, _) = parabolic_rescale(u, lambda, 0.0, target)?;
    f.scale(1.0 / lambda as f64);
    Ok(f)
}
