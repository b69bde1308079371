//! Sampled trajectories: time mollification, space-time norms, the weak
//! formulation residual and the truncation-mollification density experiment.

use serde::{Deserialize, Serialize};

use super::mollifier::Mollifier;
use crate::dynamics::{absorption_term, convective_term, ModelParams};
use crate::error::{CbfError, Result};
use crate::integrator::{Observer, Snapshot};
use crate::quadrature::integrate_samples;
use crate::spectral::{
    gradient_inner, gradient_norm_sq, inner, lp_norm_pow, truncate_modes, Resolution, SpectralField,
};

/// Fields sampled on a uniform, strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySamples {
    times: Vec<f64>,
    fields: Vec<SpectralField>,
}

impl TrajectorySamples {
    pub fn new(times: Vec<f64>, fields: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(CbfError::GridMismatch(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CbfError::NonMonotoneTime { last: w[0], next: w[1] });
            }
        }
        if times.len() > 2 {
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
                return Err(CbfError::GridMismatch("time samples are not uniformly spaced".into()));
            }
        }
        let res = fields[0].resolution();
        if fields.iter().any(|f| f.resolution() != res) {
            return Err(CbfError::GridMismatch("fields have different resolutions".into()));
        }
        Ok(Self { times, fields })
    }

    /// Samples `f(t)` at `t_i = t0 + i dt`, `i = 0..n`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, mut f: impl FnMut(f64) -> SpectralField) -> Result<Self> {
        let times: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
        let fields = times.iter().map(|&t| f(t)).collect();
        Self::new(times, fields)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn resolution(&self) -> Resolution {
        self.fields[0].resolution()
    }

    /// Uniform sample spacing, zero for a single sample.
    pub fn spacing(&self) -> f64 {
        let n = self.times.len();
        if n < 2 {
            0.0
        } else {
            (self.times[n - 1] - self.times[0]) / (n - 1) as f64
        }
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    fn with_fields(&self, fields: Vec<SpectralField>) -> Self {
        Self {
            times: self.times.clone(),
            fields,
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.times != other.times {
            return Err(CbfError::GridMismatch("time samples differ".into()));
        }
        if self.resolution() != other.resolution() {
            return Err(CbfError::GridMismatch("spatial resolutions differ".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.with_fields(self.fields.iter().zip(&other.fields).map(|(a, b)| a.sub(b)).collect()))
    }

    /// `S_n` applied at every sample.
    pub fn truncate_modes(&self, n: usize) -> Result<Self> {
        Ok(self.with_fields(
            self.fields
                .iter()
                .map(|f| truncate_modes(f, n))
                .collect::<Result<_>>()?,
        ))
    }

    /// `v chi_{[t_0, t1]}`: samples after `t1` are zeroed.
    pub fn cutoff(&self, t1: f64) -> Self {
        let fields = self
            .times
            .iter()
            .zip(&self.fields)
            .map(|(&t, f)| {
                if t > t1 {
                    SpectralField::zeros(f.resolution())
                } else {
                    f.clone()
                }
            })
            .collect();
        self.with_fields(fields)
    }

    /// `int ||v(t)||_{L^q}^q dt` in time, `L^q` on the absorption grid.
    pub fn lq_lq_pow(&self, q: f64) -> f64 {
        let m = self.resolution().absorption_grid();
        let vals: Vec<f64> = self
            .fields
            .iter()
            .map(|f| lp_norm_pow(&f.to_physical_on(m), q))
            .collect();
        integrate_samples(&self.times, &vals)
    }

    /// `(int ||v||_{L^q}^q dt)^{1/q}`.
    pub fn lq_lq_norm(&self, q: f64) -> f64 {
        self.lq_lq_pow(q).max(0.0).powf(1.0 / q)
    }

    /// `(int ||grad v||^2 dt)^{1/2}`.
    pub fn l2_h1_norm(&self) -> f64 {
        let vals: Vec<f64> = self.fields.iter().map(gradient_norm_sq).collect();
        integrate_samples(&self.times, &vals).max(0.0).sqrt()
    }
}

/// Observer collecting every snapshot it sees into a trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecorder {
    times: Vec<f64>,
    fields: Vec<SpectralField>,
}

impl TrajectoryRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, u: SpectralField) {
        self.times.push(t);
        self.fields.push(u);
    }

    pub fn into_samples(self) -> Result<TrajectorySamples> {
        TrajectorySamples::new(self.times, self.fields)
    }
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self.push(snap.state.time, snap.state.field.clone());
        Ok(())
    }
}

/// `v^h = v * eta_h` by quadrature on the sample grid. The trajectory is
/// continued past both ends by even reflection and the discrete kernel is
/// normalized to unit mass, so constants are reproduced exactly and linear
/// trajectories away from the ends.
pub fn mollify_trajectory(v: &TrajectorySamples, m: &Mollifier) -> Result<TrajectorySamples> {
    let dt = v.spacing();
    let h = m.width();
    if v.len() < 2 || h < 2.0 * dt {
        return Err(CbfError::UnderResolvedMollifier { h, spacing: dt });
    }
    if h >= v.duration() {
        return Err(CbfError::InvalidParameter(format!(
            "mollifier width {h} must be below the trajectory length {}",
            v.duration()
        )));
    }
    let reach = (h / dt).ceil() as i64;
    let mut kernel: Vec<f64> = (-reach..=reach).map(|d| m.eval(d as f64 * dt)).collect();
    let mass: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= mass);

    let last = v.len() as i64 - 1;
    let reflect = |j: i64| -> usize {
        let j = if j < 0 { -j } else { j };
        (if j > last { 2 * last - j } else { j }) as usize
    };
    let res = v.resolution();
    let fields = (0..=last)
        .map(|i| {
            let mut acc = SpectralField::zeros(res);
            for (d, &w) in (-reach..=reach).zip(&kernel) {
                if w != 0.0 {
                    acc.axpy(w, &v.fields[reflect(i - d)]);
                }
            }
            acc
        })
        .collect();
    Ok(v.with_fields(fields))
}

/// Fourth-order finite-difference time derivative at every sample.
fn time_derivative(v: &TrajectorySamples) -> Result<Vec<SpectralField>> {
    let n = v.len();
    if n < 5 {
        return Err(CbfError::GridMismatch(format!(
            "time derivative needs 5 samples, have {n}"
        )));
    }
    let dt = v.spacing();
    let f = &v.fields;
    let combo = |idx: [usize; 5], c: [f64; 5]| {
        let mut out = SpectralField::zeros(v.resolution());
        for (i, w) in idx.iter().zip(c) {
            out.axpy(w / (12.0 * dt), &f[*i]);
        }
        out
    };
    Ok((0..n)
        .map(|i| match i {
            0 => combo([0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0]),
            1 => combo([0, 1, 2, 3, 4], [-3.0, -10.0, 18.0, -6.0, 1.0]),
            _ if i == n - 2 => combo([n - 5, n - 4, n - 3, n - 2, n - 1], [-1.0, 6.0, -18.0, 10.0, 3.0]),
            _ if i == n - 1 => combo([n - 5, n - 4, n - 3, n - 2, n - 1], [3.0, -16.0, 36.0, -48.0, 25.0]),
            _ => combo([i - 2, i - 1, i, i + 1, i + 2], [1.0, -8.0, 0.0, 8.0, -1.0]),
        })
        .collect())
}

fn sample_index(v: &TrajectorySamples, t: f64) -> Result<usize> {
    let tol = 1e-9 * v.spacing().max(f64::MIN_POSITIVE);
    v.times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| CbfError::GridMismatch(format!("t = {t} is not a sample time")))
}

/// The integrals of the weak formulation over `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakFormReport {
    /// `-int <u, d_t phi>`
    pub time_term: f64,
    /// `mu int <grad u, grad phi>`
    pub viscous_term: f64,
    /// `int <(u.grad)u, phi>`
    pub convective_term: f64,
    /// `alpha int <u, phi>`
    pub darcy_term: f64,
    /// `beta int <|u|^{r-1} u, phi>`
    pub absorption_term: f64,
    /// `-<u(t1), phi(t1)> + <u(t0), phi(t0)>`
    pub boundary: f64,
    /// `|sum of terms - boundary| / ||u(t0)||^2` (unnormalized when `u(t0) = 0`).
    pub residual: f64,
}

pub fn weak_form_terms(
    v: &TrajectorySamples,
    phi: &TrajectorySamples,
    p: &ModelParams,
    t0: f64,
    t1: f64,
) -> Result<WeakFormReport> {
    v.check_same_grid(phi)?;
    let (i0, i1) = (sample_index(v, t0)?, sample_index(v, t1)?);
    if i1 <= i0 {
        return Err(CbfError::InvalidParameter(format!("need t0 < t1, got {t0} and {t1}")));
    }
    let dphi = time_derivative(phi)?;
    let times = &v.times[i0..=i1];
    let mut rows = [const { Vec::new() }; 5];
    for i in i0..=i1 {
        let (u, f) = (&v.fields[i], &phi.fields[i]);
        rows[0].push(-inner(u, &dphi[i]));
        rows[1].push(p.mu * gradient_inner(u, f));
        rows[2].push(inner(&convective_term(u), f));
        rows[3].push(p.alpha * inner(u, f));
        rows[4].push(if p.beta == 0.0 {
            0.0
        } else {
            -inner(&absorption_term(u, p.beta, p.r), f)
        });
    }
    let t: Vec<f64> = rows.iter().map(|r| integrate_samples(times, r)).collect();
    let boundary = -inner(&v.fields[i1], &phi.fields[i1]) + inner(&v.fields[i0], &phi.fields[i0]);
    let e0 = inner(&v.fields[i0], &v.fields[i0]);
    let raw = (t.iter().sum::<f64>() - boundary).abs();
    Ok(WeakFormReport {
        time_term: t[0],
        viscous_term: t[1],
        convective_term: t[2],
        darcy_term: t[3],
        absorption_term: t[4],
        boundary,
        residual: if e0 > 0.0 { raw / e0 } else { raw },
    })
}

/// `|LHS - RHS| / ||u(t0)||^2` of the weak formulation with test function `phi`.
pub fn weak_form_residual(
    v: &TrajectorySamples,
    phi: &TrajectorySamples,
    p: &ModelParams,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    Ok(weak_form_terms(v, phi, p, t0, t1)?.residual)
}

/// `phi_n^h = (S_n (v chi_{[0, t1]}))^h`.
pub fn truncated_mollified(v: &TrajectorySamples, n: usize, t1: f64, m: &Mollifier) -> Result<TrajectorySamples> {
    mollify_trajectory(&v.cutoff(t1).truncate_modes(n)?, m)
}

/// One step of the density experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub n: usize,
    pub h: f64,
    /// `||(S_n w)^h - w||_{L^4(L^4)}`
    pub l4_error: f64,
    /// `||(S_n w)^h - w||_{L^2(V)}`
    pub h1_error: f64,
}

impl DensityPoint {
    pub fn combined(&self) -> f64 {
        self.l4_error + self.h1_error
    }
}

/// Errors of `(S_n w)^h` against `w` along a schedule of `(n, h)`.
pub fn density_errors(w: &TrajectorySamples, schedule: &[(usize, f64)]) -> Result<Vec<DensityPoint>> {
    schedule
        .iter()
        .map(|&(n, h)| {
            let approx = mollify_trajectory(&w.truncate_modes(n)?, &Mollifier::new(h)?)?;
            let diff = approx.sub(w)?;
            Ok(DensityPoint {
                n,
                h,
                l4_error: diff.lq_lq_norm(4.0),
                h1_error: diff.l2_h1_norm(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PhysicalField;

    fn shear(res: Resolution) -> SpectralField {
        SpectralField::from_physical(&PhysicalField::from_fn(res.grid(), |_, y, _| [y.sin(), 0.0, 0.0]), res).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let u = shear(Resolution::new(1, 4).unwrap());
        let v = TrajectorySamples::from_fn(0.0, 0.01, 101, |_| u.clone()).unwrap();
        let vh = mollify_trajectory(&v, &Mollifier::new(0.1).unwrap()).unwrap();
        for f in vh.fields() {
            assert!(l2(&f.sub(&u)) < 1e-13);
        }
    }

    fn l2(f: &SpectralField) -> f64 {
        inner(f, f).sqrt()
    }

    #[test]
    fn linear_trajectories_are_reproduced_in_the_interior() {
        let u = shear(Resolution::new(1, 4).unwrap());
        let v = TrajectorySamples::from_fn(0.0, 0.01, 101, |t| u.scaled(t)).unwrap();
        let h = 0.1;
        let vh = mollify_trajectory(&v, &Mollifier::new(h).unwrap()).unwrap();
        for (t, (a, b)) in v.times().iter().zip(vh.fields().iter().zip(v.fields())) {
            if *t >= h && *t <= 1.0 - h {
                assert!(l2(&a.sub(b)) < 1e-13 * l2(&u));
            }
        }
    }

    #[test]
    fn under_resolved_width_is_rejected() {
        let u = shear(Resolution::new(1, 4).unwrap());
        let v = TrajectorySamples::from_fn(0.0, 0.01, 11, |_| u.clone()).unwrap();
        let err = mollify_trajectory(&v, &Mollifier::new(0.015).unwrap());
        assert!(matches!(err, Err(CbfError::UnderResolvedMollifier { .. })));
    }

    #[test]
    fn heat_solution_satisfies_weak_form() {
        let res = Resolution::new(2, 6).unwrap();
        let p = ModelParams::new(0.7, 0.0, 0.0, 3.0).unwrap();
        let u = shear(res);
        let mut phi0 = SpectralField::zeros(res);
        phi0.add_real_mode(
            [0, 1, 1],
            [rustfft::num_complex::Complex64::new(0.0, 0.5), 0.0.into(), 0.0.into()],
        )
        .unwrap();
        phi0.axpy(2.0, &u);
        let v = TrajectorySamples::from_fn(0.0, 1e-3, 1001, |t| u.scaled((-p.mu * t).exp())).unwrap();
        let phi = TrajectorySamples::from_fn(0.0, 1e-3, 1001, |_| phi0.clone()).unwrap();
        let r = weak_form_residual(&v, &phi, &p, 0.0, 1.0).unwrap();
        assert!(r < 1e-8, "{r}");
        let zero = TrajectorySamples::from_fn(0.0, 1e-3, 11, |_| SpectralField::zeros(res)).unwrap();
        assert_eq!(weak_form_residual(&zero, &zero, &p, 0.0, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let res = Resolution::new(1, 4).unwrap();
        let a = TrajectorySamples::from_fn(0.0, 0.1, 6, |_| SpectralField::zeros(res)).unwrap();
        let b = TrajectorySamples::from_fn(0.0, 0.2, 6, |_| SpectralField::zeros(res)).unwrap();
        let p = ModelParams::new(1.0, 0.0, 0.0, 3.0).unwrap();
        assert!(matches!(
            weak_form_residual(&a, &b, &p, 0.0, 0.2),
            Err(CbfError::GridMismatch(_))
        ));
    }
}
