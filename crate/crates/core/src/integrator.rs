//! Integrating-factor RK4 for the cube-truncated Galerkin system.
//!
//! The linear part `-(mu |k|^2 + alpha)` is integrated exactly; the nonlinear
//! terms go through classical RK4. The FSAL evaluation at the new state gives
//! an embedded third-order solution whose difference from the RK4 solution is
//! `h/6 (N_4 - N_5)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{nonlinear, ModelParams, NonlinearEval};
use crate::error::{CbfError, Result};
use crate::spectral::ops::k_sq;
use crate::spectral::{gradient_norm_sq, l2_norm_sq, SpectralField};

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    /// Constant step, never rejected.
    Fixed { dt: f64 },
    /// Embedded 4(3) control within `[dt_min, dt_max]`.
    Adaptive { dt_min: f64, dt_max: f64, tol: f64 },
}

impl StepControl {
    fn initial_dt(&self) -> f64 {
        match *self {
            StepControl::Fixed { dt } => dt,
            StepControl::Adaptive { dt_min, dt_max, .. } => (dt_max * 0.1).max(dt_min),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepControl::Fixed { dt } => dt > 0.0 && dt.is_finite(),
            StepControl::Adaptive { dt_min, dt_max, tol } => {
                dt_min > 0.0 && dt_max >= dt_min && dt_max.is_finite() && tol > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CbfError::InvalidParameter(format!("invalid step control {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub control: StepControl,
    /// Step-size safety factor.
    pub safety: f64,
    /// Largest growth of dt per accepted step.
    pub grow: f64,
    /// Largest shrink of dt per rejected step.
    pub shrink: f64,
    /// Blow-up guard as a multiple of the initial `||grad u||^2`.
    pub blowup_factor: f64,
    /// Allowed relative growth of `||u||^2` over one accepted step.
    pub energy_tol: f64,
    /// Advective ceiling constant: `dt <= cfl / (K max|u|)`.
    pub cfl: f64,
    /// Absorption ceiling constant: `dt <= absorption_cfl / (beta max|u|^{r-1} + alpha)`.
    pub absorption_cfl: f64,
    /// Turns the convective term off (single-mode tests).
    pub convection: bool,
}

impl StepperConfig {
    pub fn new(control: StepControl) -> Self {
        let energy_tol = match control {
            StepControl::Adaptive { tol, .. } => tol,
            StepControl::Fixed { .. } => 1e-8,
        };
        Self {
            control,
            safety: 0.9,
            grow: 2.0,
            shrink: 0.2,
            blowup_factor: 1e6,
            energy_tol,
            cfl: 1.0,
            absorption_cfl: 0.5,
            convection: true,
        }
    }

    pub fn fixed(dt: f64) -> Self {
        Self::new(StepControl::Fixed { dt })
    }

    pub fn adaptive(dt_min: f64, dt_max: f64, tol: f64) -> Self {
        Self::new(StepControl::Adaptive { dt_min, dt_max, tol })
    }

    pub fn without_convection(mut self) -> Self {
        self.convection = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub field: SpectralField,
    pub time: f64,
    pub dt: f64,
    pub step_count: u64,
    pub params: ModelParams,
}

impl StepperState {
    pub fn new(field: SpectralField, params: ModelParams) -> Self {
        Self {
            field,
            time: 0.0,
            dt: 0.0,
            step_count: 0,
            params,
        }
    }
}

/// Immutable view handed to observers after an accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub state: &'a StepperState,
    /// `||u||_{L^{r+1}}^{r+1}` of the current field.
    pub lp_pow: f64,
}

pub trait Observer {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&Snapshot<'_>) -> Result<()>,
{
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self(snap)
    }
}

/// `min(cfl / (K max|u|), absorption_cfl / (beta max|u|^{r-1} + alpha))`,
/// infinite when both denominators vanish. `max|u|` is taken on the field's
/// collocation grid.
pub fn stability_bound(u: &SpectralField, p: &ModelParams, cfl: f64, absorption_cfl: f64) -> f64 {
    let umax = u.to_physical().max_magnitude();
    stability_bound_from_max(umax, u.k_max(), p, cfl, absorption_cfl)
}

pub fn stability_bound_from_max(umax: f64, k_max: usize, p: &ModelParams, cfl: f64, absorption_cfl: f64) -> f64 {
    let adv = if umax > 0.0 && k_max > 0 {
        cfl / (k_max as f64 * umax)
    } else {
        f64::INFINITY
    };
    let rate = p.beta * umax.powf(p.r - 1.0) + p.alpha;
    let abs = if rate > 0.0 {
        absorption_cfl / rate
    } else {
        f64::INFINITY
    };
    adv.min(abs)
}

/// Per-mode factors `exp(-(mu |k|^2 + alpha) tau)`.
fn decay_factors(u: &SpectralField, p: &ModelParams, tau: f64) -> Vec<f64> {
    let res = u.resolution();
    (0..res.n_modes())
        .map(|i| (-p.linear_rate(k_sq(res.wavevector(i))) * tau).exp())
        .collect()
}

fn apply_factors(f: &mut SpectralField, e: &[f64]) {
    for comp in 0..3 {
        for (v, &w) in f.component_mut(comp).iter_mut().zip(e) {
            *v *= w;
        }
    }
}

fn decayed(f: &SpectralField, e: &[f64]) -> SpectralField {
    let mut out = f.clone();
    apply_factors(&mut out, e);
    out
}

struct StepResult {
    field: SpectralField,
    /// `N` at the last RK stage, kept for the embedded estimate.
    stage4: SpectralField,
}

fn rk4_if(u: &SpectralField, k1: &SpectralField, h: f64, p: &ModelParams, convection: bool) -> StepResult {
    let e_half = decay_factors(u, p, 0.5 * h);
    let e_full = decay_factors(u, p, h);
    let eu_half = decayed(u, &e_half);

    let mut s2 = u.clone();
    s2.axpy(0.5 * h, k1);
    apply_factors(&mut s2, &e_half);
    let k2 = nonlinear(&s2, p, convection).field;

    let mut s3 = eu_half.clone();
    s3.axpy(0.5 * h, &k2);
    let k3 = nonlinear(&s3, p, convection).field;

    let mut s4 = decayed(u, &e_full);
    s4.axpy(h, &decayed(&k3, &e_half));
    let k4 = nonlinear(&s4, p, convection).field;

    // E(h) u + h/6 (E(h) k1 + 2 E(h/2)(k2 + k3) + k4)
    let mut mid = k2;
    mid.axpy(1.0, &k3);
    apply_factors(&mut mid, &e_half);
    let mut out = u.clone();
    out.axpy(h / 6.0, k1);
    apply_factors(&mut out, &e_full);
    out.axpy(h / 3.0, &mid);
    out.axpy(h / 6.0, &k4);
    StepResult { field: out, stage4: k4 }
}

/// Drives one trajectory. Holds the FSAL evaluation of the current state.
#[derive(Debug)]
pub struct Stepper {
    config: StepperConfig,
    state: StepperState,
    fsal: Option<NonlinearEval>,
    guard: f64,
}

impl Stepper {
    pub fn new(mut state: StepperState, config: StepperConfig) -> Result<Self> {
        config.control.validate()?;
        state.params.validate()?;
        if !(state.dt > 0.0) {
            state.dt = config.control.initial_dt();
        }
        if let StepControl::Fixed { dt } = config.control {
            state.dt = dt;
        }
        let g0 = gradient_norm_sq(&state.field);
        let guard = if g0 > 0.0 {
            config.blowup_factor * g0
        } else {
            f64::INFINITY
        };
        Ok(Self {
            config,
            state,
            fsal: None,
            guard,
        })
    }

    /// Overrides the blow-up guard (absolute bound on `||grad u||^2`).
    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn state(&self) -> &StepperState {
        &self.state
    }

    pub fn into_state(self) -> StepperState {
        self.state
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    fn current_eval(&mut self) -> &NonlinearEval {
        if self.fsal.is_none() {
            self.fsal = Some(nonlinear(&self.state.field, &self.state.params, self.config.convection));
        }
        self.fsal.as_ref().unwrap()
    }

    /// `||u||_{L^{r+1}}^{r+1}` of the current field.
    pub fn current_lp_pow(&mut self) -> f64 {
        self.current_eval().lp_pow
    }

    pub fn snapshot(&mut self) -> Snapshot<'_> {
        let lp_pow = self.current_lp_pow();
        Snapshot {
            state: &self.state,
            lp_pow,
        }
    }

    /// Attempts one step of at most `limit` (used to land on an end time).
    ///
    /// A rejected step leaves the field untouched, shrinks `dt` and returns
    /// [`CbfError::StepRejected`].
    pub fn step_limited(&mut self, limit: f64) -> Result<()> {
        let params = self.state.params;
        let convection = self.config.convection;
        let (h, lands) = match self.config.control {
            StepControl::Fixed { dt } => {
                if limit < dt * (1.0 - 1e-9) {
                    (limit, true)
                } else {
                    (dt, false)
                }
            }
            StepControl::Adaptive { dt_max, .. } => {
                let ceiling = stability_bound(&self.state.field, &params, self.config.cfl, self.config.absorption_cfl);
                let h = self.state.dt.min(dt_max).min(ceiling);
                if limit <= h * (1.0 + 1e-12) {
                    (limit, true)
                } else {
                    (h, false)
                }
            }
        };

        let k1 = self.current_eval().field.clone();
        let step = rk4_if(&self.state.field, &k1, h, &params, convection);
        let next_eval = nonlinear(&step.field, &params, convection);

        if let StepControl::Adaptive { dt_min, dt_max, tol } = self.config.control {
            let mut err = step.stage4.clone();
            err.axpy(-1.0, &next_eval.field);
            let err_norm = (h / 6.0) * l2_norm_sq(&err).sqrt();
            let scale = l2_norm_sq(&self.state.field).sqrt().max(l2_norm_sq(&step.field).sqrt());
            let ratio = if err_norm == 0.0 {
                0.0
            } else {
                err_norm / (tol * scale.max(f64::MIN_POSITIVE))
            };
            let factor = if ratio == 0.0 {
                self.config.grow
            } else {
                (self.config.safety * ratio.powf(-0.25)).clamp(self.config.shrink, self.config.grow)
            };
            if ratio > 1.0 {
                let next = h * factor;
                self.state.dt = next;
                if next < dt_min {
                    return Err(CbfError::StepUnderflow { dt: next, dt_min });
                }
                return Err(CbfError::StepRejected { estimate: ratio, dt: h });
            }
            if !lands {
                self.state.dt = (h * factor).clamp(dt_min, dt_max);
            }
        }

        let e_old = l2_norm_sq(&self.state.field);
        let e_new = l2_norm_sq(&step.field);
        if e_new > e_old * (1.0 + self.config.energy_tol) && e_new - e_old > f64::MIN_POSITIVE {
            return Err(CbfError::EnergyIncrease {
                before: e_old,
                after: e_new,
            });
        }

        self.state.field = step.field;
        self.fsal = Some(next_eval);
        self.state.time = match self.config.control {
            StepControl::Fixed { dt } if !lands => {
                let n = self.state.step_count as f64;
                if (self.state.time - n * dt).abs() <= 1e-12 * self.state.time.abs().max(1.0) {
                    (n + 1.0) * dt
                } else {
                    self.state.time + dt
                }
            }
            _ if lands => self.state.time + limit,
            _ => self.state.time + h,
        };
        self.state.step_count += 1;

        let g = gradient_norm_sq(&self.state.field);
        if g > self.guard || !g.is_finite() {
            return Err(CbfError::BlowUp {
                time: self.state.time,
                grad_sq: g,
                guard: self.guard,
            });
        }
        Ok(())
    }

    /// One step of the configured size.
    pub fn step(&mut self) -> Result<()> {
        self.step_limited(f64::INFINITY)
    }

    /// Steps until `t_end`, calling every observer after each `cadence`-th
    /// accepted step and after the final one. Observers see the blow-up
    /// state before the error is returned.
    pub fn integrate(&mut self, t_end: f64, cadence: usize, observers: &mut [&mut dyn Observer]) -> Result<()> {
        let cadence = cadence.max(1) as u64;
        let tiny = match self.config.control {
            StepControl::Fixed { dt } => 1e-9 * dt,
            StepControl::Adaptive { dt_min, .. } => 1e-9 * dt_min,
        };
        while t_end - self.state.time > tiny {
            let remaining = t_end - self.state.time;
            let outcome = self.step_limited(remaining);
            match outcome {
                Err(CbfError::StepRejected { .. }) => continue,
                Err(CbfError::BlowUp { .. }) => {
                    let snap = self.snapshot();
                    for obs in observers.iter_mut() {
                        obs.observe(&snap)?;
                    }
                    return outcome;
                }
                Err(e) => return Err(e),
                Ok(()) => {}
            }
            let done = t_end - self.state.time <= tiny;
            if done || self.state.step_count.is_multiple_of(cadence) {
                let snap = self.snapshot();
                for obs in observers.iter_mut() {
                    obs.observe(&snap)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{PhysicalField, Resolution};

    fn shear(res: Resolution) -> SpectralField {
        SpectralField::from_physical(&PhysicalField::from_fn(res.grid(), |_, y, _| [y.sin(), 0.0, 0.0]), res).unwrap()
    }

    #[test]
    fn single_mode_heat_decay_is_exact() {
        let res = Resolution::new(2, 6).unwrap();
        let p = ModelParams::new(1.0, 0.0, 0.0, 3.0).unwrap();
        let u0 = shear(res);
        let mut s = Stepper::new(StepperState::new(u0.clone(), p), StepperConfig::fixed(0.05)).unwrap();
        s.integrate(1.0, 1, &mut []).unwrap();
        let exact = u0.scaled((-s.state().time).exp());
        let rel = (l2_norm_sq(&s.state().field.sub(&exact)) / l2_norm_sq(&exact)).sqrt();
        assert!(rel < 1e-12, "rel {rel}");
        assert!((s.state().time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_state_stays_zero() {
        let res = Resolution::new(2, 6).unwrap();
        let p = ModelParams::new(1.0, 0.5, 1.0, 3.0).unwrap();
        let mut s = Stepper::new(
            StepperState::new(SpectralField::zeros(res), p),
            StepperConfig::adaptive(1e-6, 0.1, 1e-8),
        )
        .unwrap();
        s.integrate(0.5, 1, &mut []).unwrap();
        assert!(s.state().field.is_zero());
        assert_eq!(s.state().time, 0.5);
    }

    #[test]
    fn stability_bound_for_zero_field_is_unbounded() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 3.0).unwrap();
        assert_eq!(stability_bound_from_max(0.0, 10, &p, 1.0, 0.5), f64::INFINITY);
        let b1 = stability_bound_from_max(2.0, 10, &ModelParams { beta: 1.0, ..p }, 1e9, 0.5);
        let b2 = stability_bound_from_max(2.0, 10, &ModelParams { beta: 2.0, ..p }, 1e9, 0.5);
        assert!(b2 >= 0.5 * b1 - 1e-15 && b2 < b1);
    }

    #[test]
    fn integrate_to_current_time_is_identity() {
        let res = Resolution::new(2, 6).unwrap();
        let p = ModelParams::new(1.0, 0.0, 1.0, 3.0).unwrap();
        let mut s = Stepper::new(StepperState::new(shear(res), p), StepperConfig::fixed(0.01)).unwrap();
        let before = s.state().clone();
        s.integrate(0.0, 1, &mut []).unwrap();
        assert_eq!(&before, s.state());
    }
}
