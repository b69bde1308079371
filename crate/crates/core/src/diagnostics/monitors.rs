//! Regularity monitors over a recorded ledger.

use serde::{Deserialize, Serialize};

use super::ledger::LedgerRow;
use crate::dynamics::ModelParams;
use crate::error::{CbfError, Result};
use crate::integrator::{Observer, Snapshot};
use crate::spectral::{laplacian_norm_sq, GradientSamples, SpectralField};

/// Relative tolerance on single-step growth of `||grad u||^2`.
pub const MONOTONICITY_TOL: f64 = 1e-8;
/// Relative slack on the exponential bound.
pub const GRONWALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// True when `r = 3` and `4 mu beta >= 1`, i.e. nonincrease is asserted.
    pub asserted: bool,
    pub max_increase: f64,
    pub max_grad_sq: f64,
    pub violations: usize,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        !self.asserted || self.violations == 0
    }
}

/// Scans consecutive rows for growth of `||grad u||^2`. Growth beyond
/// `1e-8 max ||grad u||^2` counts as a violation; it only fails the report
/// when the coefficient threshold holds.
pub fn monotonicity_monitor(rows: &[LedgerRow], p: &ModelParams) -> MonotonicityReport {
    let max_grad_sq = rows.iter().map(|r| r.grad_sq).fold(0.0, f64::max);
    let tol = MONOTONICITY_TOL * max_grad_sq;
    let mut max_increase: f64 = 0.0;
    let mut violations = 0;
    for w in rows.windows(2) {
        let inc = w[1].grad_sq - w[0].grad_sq;
        max_increase = max_increase.max(inc);
        if inc > tol {
            violations += 1;
        }
    }
    MonotonicityReport {
        asserted: p.critical_threshold_met(),
        max_increase,
        max_grad_sq,
        violations,
    }
}

/// `c(beta, mu, r) = (2 / (beta mu (r-1)))^{2/(r-3)} (r-3)/(r-1)` for `r > 3`.
pub fn gronwall_constant(p: &ModelParams) -> Result<f64> {
    if !(p.r > 3.0) {
        return Err(CbfError::InvalidParameter(format!(
            "growth constant needs r > 3, got {}",
            p.r
        )));
    }
    let r = p.r;
    Ok((2.0 / (p.beta * p.mu * (r - 1.0))).powf(2.0 / (r - 3.0)) * (r - 3.0) / (r - 1.0))
}

/// `||Lap u||^2` and `I_r(u)` at one recorded instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityProbe {
    pub t: f64,
    pub lap_sq: f64,
    pub i_r: f64,
}

impl RegularityProbe {
    pub fn measure(u: &SpectralField, t: f64, r: f64) -> Self {
        let s = GradientSamples::new(u, u.resolution().absorption_grid());
        Self {
            t,
            lap_sq: laplacian_norm_sq(u),
            i_r: s.weighted_gradient_integral(r),
        }
    }
}

/// Observer collecting [`RegularityProbe`]s alongside a ledger.
#[derive(Debug, Clone, Default)]
pub struct RegularityRecorder {
    pub probes: Vec<RegularityProbe>,
}

impl Observer for RegularityRecorder {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let s = snap.state;
        self.probes.push(RegularityProbe::measure(&s.field, s.time, s.params.r));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub constant: f64,
    /// `max_t ||grad u(t)||^2 / (||grad u(0)||^2 exp(c t / mu))`.
    pub max_bound_ratio: f64,
    pub bound_violations: usize,
    /// Largest `(dG/dt + mu ||Lap u||^2 + beta I_r - (c/mu) G) / scale` over
    /// probed instants, `None` when no probes were given.
    pub max_differential_excess: Option<f64>,
    pub differential_violations: usize,
}

impl GronwallReport {
    pub fn passed(&self) -> bool {
        self.bound_violations == 0 && self.differential_violations == 0
    }
}

/// Three-point derivative of `G` at row `i` (one-sided at the ends).
fn row_derivative(rows: &[LedgerRow], i: usize) -> f64 {
    let n = rows.len();
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let (t0, t1, t2) = (rows[a].t, rows[b].t, rows[c].t);
    let (f0, f1, f2) = (rows[a].grad_sq, rows[b].grad_sq, rows[c].grad_sq);
    let t = rows[i].t;
    // derivative of the interpolating quadratic at t
    f0 * ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2))
        + f1 * ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2))
        + f2 * ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1))
}

/// Checks `G(t) <= G(0) exp(c t / mu) (1 + 1e-6)` on every row and, at the
/// probed instants, `dG/dt + mu ||Lap u||^2 + beta I_r <= (c/mu) G` with
/// `dG/dt` taken from the recorded rows.
pub fn gronwall_monitor(rows: &[LedgerRow], p: &ModelParams, probes: &[RegularityProbe]) -> Result<GronwallReport> {
    let c = gronwall_constant(p)?;
    let mut report = GronwallReport {
        constant: c,
        max_bound_ratio: 0.0,
        bound_violations: 0,
        max_differential_excess: None,
        differential_violations: 0,
    };
    let Some(first) = rows.first() else {
        return Ok(report);
    };
    let (t0, g0) = (first.t, first.grad_sq);
    for row in rows {
        let bound = g0 * (c * (row.t - t0) / p.mu).exp();
        if row.grad_sq > bound * (1.0 + GRONWALL_TOL) {
            report.bound_violations += 1;
        }
        if bound > 0.0 {
            report.max_bound_ratio = report.max_bound_ratio.max(row.grad_sq / bound);
        }
    }
    if rows.len() >= 3 {
        for probe in probes {
            let Some(i) = rows.iter().position(|r| r.t == probe.t) else {
                continue;
            };
            let g = rows[i].grad_sq;
            let dg = row_derivative(rows, i);
            let lhs = dg + p.mu * probe.lap_sq + p.beta * probe.i_r;
            let rhs = c / p.mu * g;
            let scale = dg.abs().max(p.mu * probe.lap_sq).max(p.beta * probe.i_r).max(rhs);
            let excess = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
            report.max_differential_excess =
                Some(report.max_differential_excess.map_or(excess, |m: f64| m.max(excess)));
            if excess > GRONWALL_TOL {
                report.differential_violations += 1;
            }
        }
    }
    Ok(report)
}
