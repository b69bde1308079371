//! Energy accounting: kinetic energy, cumulative linear dissipation and
//! cumulative absorption, and the balance residual
//! `|E(t) + D(t) + A(t) - E(0)|`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{CbfError, Result};
use crate::integrator::{Observer, Snapshot};
use crate::quadrature::{last_interval_weights, simpson_pair_weights};
use crate::spectral::{gradient_norm_sq, l2_norm_sq, lp_norm_pow, SpectralField};

/// One ledger row. Serialized with the short keys `t, E, D, A, G, R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    /// `||u(t)||^2`
    #[serde(rename = "E")]
    pub kinetic: f64,
    /// `int_0^t 2 mu ||grad u||^2 + 2 alpha ||u||^2`; the Darcy part vanishes for `alpha = 0`.
    #[serde(rename = "D")]
    pub dissipation_cum: f64,
    /// `2 beta int_0^t ||u||_{L^{r+1}}^{r+1}`
    #[serde(rename = "A")]
    pub absorption_cum: f64,
    /// `||grad u(t)||^2`
    #[serde(rename = "G")]
    pub grad_sq: f64,
    #[serde(rename = "R")]
    pub balance_residual: f64,
}

/// Time series of energy terms. Cumulative integrals are composite Simpson
/// over the recorded samples; a row closing an odd number of intervals adds
/// the last interval from the quadratic through the last three samples.
/// Row 1 holds a trapezoid value until row 2 arrives, then is revised to the
/// quadratic through the first three samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    rows: Vec<LedgerRow>,
    /// Integrands `(2 mu G + 2 alpha E, 2 beta L)` at each row.
    integrands: Vec<(f64, f64)>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// Appends a row for `u` at time `t`, computing `||u||_{L^{r+1}}^{r+1}`
    /// on the absorption grid.
    pub fn record(&mut self, u: &SpectralField, t: f64, p: &ModelParams) -> Result<&LedgerRow> {
        let lp = lp_norm_pow(&u.to_physical_on(u.resolution().absorption_grid()), p.r + 1.0);
        self.record_with_lp(u, t, p, lp)
    }

    /// Appends a row using a precomputed `||u||_{L^{r+1}}^{r+1}`.
    pub fn record_with_lp(&mut self, u: &SpectralField, t: f64, p: &ModelParams, lp_pow: f64) -> Result<&LedgerRow> {
        self.push(t, l2_norm_sq(u), gradient_norm_sq(u), lp_pow, p)
    }

    /// Appends a row from the raw scalars.
    pub fn push(&mut self, t: f64, kinetic: f64, grad_sq: f64, lp_pow: f64, p: &ModelParams) -> Result<&LedgerRow> {
        if let Some(last) = self.rows.last() {
            if !(t > last.t) {
                return Err(CbfError::NonMonotoneTime { last: last.t, next: t });
            }
        }
        let f = (2.0 * p.mu * grad_sq + 2.0 * p.alpha * kinetic, 2.0 * p.beta * lp_pow);
        self.integrands.push(f);
        let j = self.rows.len();
        let (d, a) = match j {
            0 => (0.0, 0.0),
            1 => {
                let h = t - self.rows[0].t;
                let f0 = self.integrands[0];
                (0.5 * h * (f0.0 + f.0), 0.5 * h * (f0.1 + f.1))
            }
            _ => {
                let t0 = self.rows[j - 2].t;
                let t1 = self.rows[j - 1].t;
                let (h1, h2) = (t1 - t0, t - t1);
                let g = [self.integrands[j - 2], self.integrands[j - 1], f];
                let (base, w) = if j.is_multiple_of(2) {
                    (self.rows[j - 2], simpson_pair_weights(h1, h2))
                } else {
                    (self.rows[j - 1], last_interval_weights(h1, h2))
                };
                let dd: f64 = (0..3).map(|i| w[i] * g[i].0).sum();
                let da: f64 = (0..3).map(|i| w[i] * g[i].1).sum();
                (base.dissipation_cum + dd, base.absorption_cum + da)
            }
        };
        let e0 = self.rows.first().map_or(kinetic, |r| r.kinetic);
        if j == 2 {
            // the quadratic through the first three samples replaces the
            // provisional trapezoid on the first interval
            let (h1, h2) = (self.rows[1].t - self.rows[0].t, t - self.rows[1].t);
            let w = last_interval_weights(h2, h1);
            let g = [f, self.integrands[1], self.integrands[0]];
            let row = &mut self.rows[1];
            row.dissipation_cum = (0..3).map(|i| w[i] * g[i].0).sum();
            row.absorption_cum = (0..3).map(|i| w[i] * g[i].1).sum();
            row.balance_residual = (row.kinetic + row.dissipation_cum + row.absorption_cum - e0).abs();
        }
        self.rows.push(LedgerRow {
            t,
            kinetic,
            dissipation_cum: d,
            absorption_cum: a,
            grad_sq,
            balance_residual: (kinetic + d + a - e0).abs(),
        });
        Ok(self.rows.last().unwrap())
    }

    /// Largest `R(t) / E(0)` over all rows; zero when `E(0) = 0` and all
    /// residuals vanish.
    pub fn max_relative_residual(&self) -> f64 {
        let e0 = self.rows.first().map_or(0.0, |r| r.kinetic);
        let worst = self.rows.iter().map(|r| r.balance_residual).fold(0.0, f64::max);
        if e0 > 0.0 {
            worst / e0
        } else {
            worst
        }
    }

    pub fn write_ndjson(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_rows<W: Write>(&self, w: &mut W) -> Result<()> {
        for row in &self.rows {
            serde_json::to_writer(&mut *w, row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Reads rows written by [`EnergyLedger::write_ndjson`]. Blank lines are skipped.
pub fn read_ndjson(path: &Path) -> Result<Vec<LedgerRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line)?);
    }
    Ok(rows)
}

impl Observer for EnergyLedger {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let s = snap.state;
        self.record_with_lp(&s.field, s.time, &s.params, snap.lp_pow)?;
        Ok(())
    }
}

/// Outcome of checking the energy inequality over every recorded pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub pairs: usize,
    /// `min over t0 < t1 of [E(t0) - E(t1) - (D(t1)-D(t0)) - (A(t1)-A(t0))] / E(0)`.
    pub min_relative_slack: f64,
    pub worst_pair: (f64, f64),
}

/// Checks `E(t1) + D(t0,t1) + A(t0,t1) <= E(t0)` over all row pairs.
pub fn energy_inequality(rows: &[LedgerRow]) -> InequalityReport {
    let e0 = rows.first().map_or(0.0, |r| r.kinetic);
    let norm = if e0 > 0.0 { e0 } else { 1.0 };
    let mut report = InequalityReport {
        pairs: 0,
        min_relative_slack: f64::INFINITY,
        worst_pair: (0.0, 0.0),
    };
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let lhs = b.kinetic + (b.dissipation_cum - a.dissipation_cum) + (b.absorption_cum - a.absorption_cum);
            let slack = (a.kinetic - lhs) / norm;
            report.pairs += 1;
            if slack < report.min_relative_slack {
                report.min_relative_slack = slack;
                report.worst_pair = (a.t, b.t);
            }
        }
    }
    report
}
