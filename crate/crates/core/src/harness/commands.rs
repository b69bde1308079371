//! Subcommand implementations. Each returns a serializable report; the
//! binary maps reports and errors to exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::ic::{initial_condition, random_spectrum};
use crate::analysis::{lemma21_sandwich, lemma22_ratio, nikolskii_pair, Mollifier};
use crate::diagnostics::{
    energy_inequality, load_checkpoint, monotonicity_monitor, read_ndjson, save_checkpoint, EnergyLedger,
    MonotonicityReport,
};
use crate::dynamics::{dilate, rhs, ModelParams, RhsBreakdown};
use crate::error::{CbfError, Result};
use crate::integrator::{Observer, Snapshot, Stepper, StepperState};
use crate::spectral::{gradient_norm_sq, l2_norm_sq, Resolution, SpectralField};

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "CBF_WORKERS";

/// Writes a checkpoint on every `every`-th observation (never when 0).
#[derive(Debug)]
pub struct CheckpointWriter {
    dir: PathBuf,
    every: usize,
    seen: usize,
    pub written: Vec<PathBuf>,
}

impl CheckpointWriter {
    pub fn new(dir: impl Into<PathBuf>, every: usize) -> Self {
        Self {
            dir: dir.into(),
            every,
            seen: 0,
            written: Vec::new(),
        }
    }

    pub fn path_for(&self, state: &StepperState) -> PathBuf {
        self.dir.join(format!("ckpt_{:010}.bin", state.step_count))
    }

    pub fn write(&mut self, state: &StepperState) -> Result<()> {
        let path = self.path_for(state);
        save_checkpoint(state, &path)?;
        if !self.written.contains(&path) {
            self.written.push(path);
        }
        Ok(())
    }
}

impl Observer for CheckpointWriter {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self.seen += 1;
        if self.every > 0 && self.seen.is_multiple_of(self.every) {
            self.write(snap.state)?;
        }
        Ok(())
    }
}

/// Stepper at `t = 0` for the configured initial condition.
pub fn initial_stepper(cfg: &RunConfig) -> Result<Stepper> {
    let res = cfg.resolution()?;
    let u0 = initial_condition(&cfg.ic, res);
    Stepper::new(StepperState::new(u0, cfg.params), cfg.stepper_config())
}

/// Records the current state in every observer.
pub fn observe_now(stepper: &mut Stepper, observers: &mut [&mut dyn Observer]) -> Result<()> {
    let snap = stepper.snapshot();
    for obs in observers.iter_mut() {
        obs.observe(&snap)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub t_final: f64,
    pub steps: u64,
    pub rows: usize,
    pub max_relative_residual: f64,
    pub min_inequality_slack: f64,
    pub monotonicity: MonotonicityReport,
    pub blowup: bool,
    pub checkpoints: Vec<PathBuf>,
    pub wall_seconds: f64,
}

/// One trajectory: ledger rows at the configured cadence, checkpoints at
/// the start, every `checkpoint_every` observations and the end. The ledger
/// is written even when the run fails; blow-up is reported in the summary.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    let ckpt_dir = out.join(&cfg.checkpoints);
    fs::create_dir_all(&ckpt_dir)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let mut stepper = initial_stepper(cfg)?;
    let mut ledger = EnergyLedger::new();
    let mut writer = CheckpointWriter::new(&ckpt_dir, cfg.checkpoint_every);
    observe_now(&mut stepper, &mut [&mut ledger])?;
    writer.write(stepper.state())?;

    let outcome = if cfg.t_end > stepper.state().time {
        stepper.integrate(cfg.t_end, cfg.cadence, &mut [&mut ledger, &mut writer])
    } else {
        Ok(())
    };
    ledger.write_ndjson(&out.join(&cfg.ledger))?;
    let blowup = match outcome {
        Ok(()) => false,
        Err(CbfError::BlowUp { .. }) => true,
        Err(e) => return Err(e),
    };
    writer.write(stepper.state())?;

    let summary = RunSummary {
        t_final: stepper.state().time,
        steps: stepper.state().step_count,
        rows: ledger.len(),
        max_relative_residual: ledger.max_relative_residual(),
        min_inequality_slack: energy_inequality(ledger.rows()).min_relative_slack,
        monotonicity: monotonicity_monitor(ledger.rows(), &cfg.params),
        blowup,
        checkpoints: writer.written.clone(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

pub const SWEEP_HEADER: &str =
    "mu,beta,r,final_time,final_residual,max_grad_increase,max_grad_sq,violations,asserted,blowup,wall_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub beta: f64,
    pub r: f64,
    pub final_time: f64,
    /// `R(t_final) / E(0)`
    pub final_residual: f64,
    pub max_grad_increase: f64,
    pub max_grad_sq: f64,
    pub violations: usize,
    /// Whether nonincrease of `||grad u||^2` is asserted for this cell.
    pub asserted: bool,
    pub blowup: bool,
    pub wall_seconds: f64,
}

impl SweepRow {
    pub fn passed(&self) -> bool {
        !self.asserted || (self.violations == 0 && !self.blowup)
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{:.3}",
            self.mu,
            self.beta,
            self.r,
            self.final_time,
            self.final_residual,
            self.max_grad_increase,
            self.max_grad_sq,
            self.violations,
            self.asserted,
            self.blowup,
            self.wall_seconds
        )
    }
}

/// Runs one `(mu, beta, r)` cell in memory.
pub fn run_cell(cfg: &RunConfig, mu: f64, beta: f64, r: f64) -> Result<SweepRow> {
    let started = Instant::now();
    let mut cell = cfg.clone();
    cell.params = ModelParams::new(mu, cfg.params.alpha, beta, r)?;
    let mut stepper = initial_stepper(&cell)?;
    let mut ledger = EnergyLedger::new();
    observe_now(&mut stepper, &mut [&mut ledger])?;
    let blowup = match stepper.integrate(cell.t_end, cell.cadence, &mut [&mut ledger]) {
        Ok(()) => false,
        Err(CbfError::BlowUp { .. }) => true,
        Err(e) => return Err(e),
    };
    let mono = monotonicity_monitor(ledger.rows(), &cell.params);
    let e0 = ledger.rows()[0].kinetic;
    let last = ledger.last().expect("initial row recorded");
    Ok(SweepRow {
        mu,
        beta,
        r,
        final_time: last.t,
        final_residual: if e0 > 0.0 {
            last.balance_residual / e0
        } else {
            last.balance_residual
        },
        max_grad_increase: mono.max_increase,
        max_grad_sq: mono.max_grad_sq,
        violations: mono.violations,
        asserted: mono.asserted,
        blowup,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// All `(mu, beta)` cells at exponent `r`, in row-major order of
/// `mus` x `betas`, evaluated by up to `workers` threads.
pub fn cmd_sweep(cfg: &RunConfig, mus: &[f64], betas: &[f64], r: f64, workers: usize) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = mus.iter().flat_map(|&m| betas.iter().map(move |&b| (m, b))).collect();
    let results: Mutex<Vec<Option<Result<SweepRow>>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, cells.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(mu, beta)) = cells.get(i) else {
                    break;
                };
                let row = run_cell(cfg, mu, beta, r);
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every cell evaluated"))
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(f, "{}", row.csv_line())?;
    }
    Ok(())
}

/// Sandwich, identity and ratio checks over random fields.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub fields: usize,
    pub exponents: Vec<f64>,
    pub min_sandwich_slack: f64,
    /// Largest relative defect of the `r >= 3` identity for `M`.
    pub max_identity_defect: f64,
    /// Range of `||u||_{L^{3(r+1)}}^{r+1} / I_r`.
    pub lemma22_range: (f64, f64),
    /// Range of `seminorm^p / I_r` over the fields checked.
    pub nikolskii_range: (f64, f64),
    pub mollifier_defect: f64,
    pub violations: Vec<String>,
}

impl InequalityCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const SANDWICH_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-8;
pub const MOLLIFIER_TOL: f64 = 1e-10;
const CHECK_K: usize = 3;
const NIKOLSKII_FIELDS: usize = 3;

/// Random field number `i` of an inequality check seeded with `seed`.
pub fn check_field(seed: u64, i: usize) -> SpectralField {
    let res = Resolution::new(CHECK_K, 2 * CHECK_K + 2).expect("valid resolution");
    let slope = -1.0 - (i % 3) as f64;
    random_spectrum(res, seed.wrapping_add(i as u64), slope, 1.0)
}

pub fn cmd_check_inequalities(seed: u64, rs: &[f64], fields: usize) -> Result<InequalityCheck> {
    for &r in rs {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(CbfError::InvalidParameter(format!("exponent r must be >= 1, got {r}")));
        }
    }
    let mut report = InequalityCheck {
        fields,
        exponents: rs.to_vec(),
        min_sandwich_slack: f64::INFINITY,
        max_identity_defect: 0.0,
        lemma22_range: (f64::INFINITY, 0.0),
        nikolskii_range: (f64::INFINITY, 0.0),
        mollifier_defect: 0.0,
        violations: Vec::new(),
    };
    for h in [0.5, 0.1, 0.01] {
        let a = Mollifier::new(h)?.axioms();
        report.mollifier_defect = report
            .mollifier_defect
            .max(a.even_defect)
            .max(a.mass_defect)
            .max(a.half_mass_defect);
        if !a.holds(MOLLIFIER_TOL) {
            report
                .violations
                .push(format!("mollifier axioms fail at h = {h}: {a:?}"));
        }
    }
    for i in 0..fields {
        let u = check_field(seed, i);
        for &r in rs {
            let s = lemma21_sandwich(&u, r);
            let slack = s.min_slack();
            report.min_sandwich_slack = report.min_sandwich_slack.min(slack);
            if slack < -SANDWICH_TOL {
                report
                    .violations
                    .push(format!("field {i}, r = {r}: sandwich slack {slack:e}"));
            }
            if let Some(d) = s.identity_defect() {
                report.max_identity_defect = report.max_identity_defect.max(d);
                if d > IDENTITY_TOL {
                    report
                        .violations
                        .push(format!("field {i}, r = {r}: identity defect {d:e}"));
                }
            }
            match lemma22_ratio(&u, r) {
                Some(q) if q.is_finite() => {
                    report.lemma22_range = (report.lemma22_range.0.min(q), report.lemma22_range.1.max(q));
                }
                other => report.violations.push(format!("field {i}, r = {r}: ratio {other:?}")),
            }
            if i < NIKOLSKII_FIELDS {
                let (sp, ir) = nikolskii_pair(&u, r, std::f64::consts::PI, u.resolution().grid());
                let c = sp / ir;
                if c.is_finite() {
                    report.nikolskii_range = (report.nikolskii_range.0.min(c), report.nikolskii_range.1.max(c));
                } else {
                    report
                        .violations
                        .push(format!("field {i}, r = {r}: Nikol'skii ratio {c}"));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    pub lambda: usize,
    pub r: f64,
    pub alpha: f64,
    /// Relative error of each rhs component, then of the full residual.
    pub convective: f64,
    pub absorption: f64,
    pub darcy: f64,
    pub viscous: f64,
    pub residual: f64,
    pub max_relative_error: f64,
}

pub const RESCALE_TOL: f64 = 1e-10;

impl RescaleReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= RESCALE_TOL
    }
}

fn relative_error(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = l2_norm_sq(&a.sub(b)).sqrt();
    let n = l2_norm_sq(b).sqrt();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Checks `rhs(u_lambda; mu, lambda^2 alpha, lambda^{3-r} beta) =
/// lambda^3 [rhs(u; mu, alpha, beta)](lambda x)` term by term, and the same
/// identity for the residual `w - rhs(u)` with `w_lambda = lambda^3 w(lambda x)`.
pub fn cmd_rescale_test(lambda: usize, r: f64, alpha: f64, seed: u64) -> Result<RescaleReport> {
    let res = Resolution::new(4, 10)?;
    let p = ModelParams::new(0.7, alpha, 0.9, r)?;
    if lambda == 0 {
        return Err(CbfError::InvalidParameter("lambda must be a positive integer".into()));
    }
    let l = lambda as f64;
    let p_l = ModelParams::new(p.mu, l * l * alpha, l.powf(3.0 - r) * p.beta, r)?;
    let target = Resolution::new(lambda * res.k_max(), lambda * res.grid())?;

    let u = random_spectrum(res, seed, -1.5, 1.0);
    let w = random_spectrum(res, seed.wrapping_add(1), -1.0, 2.0);
    let scale3 = |f: &SpectralField| -> Result<SpectralField> { Ok(dilate(f, lambda, target)?.scaled(l * l * l)) };

    let base: RhsBreakdown = rhs(&u, &p)?;
    let (u_l, _) = crate::dynamics::parabolic_rescale(&u, lambda, 0.0, target)?;
    let scaled: RhsBreakdown = rhs(&u_l, &p_l)?;

    let convective = relative_error(&scaled.convective, &scale3(&base.convective)?);
    let absorption = relative_error(&scaled.absorption, &scale3(&base.absorption)?);
    let darcy = relative_error(&scaled.darcy, &scale3(&base.darcy)?);
    let viscous = relative_error(&scaled.viscous, &scale3(&base.viscous)?);
    let res_base = w.sub(&base.total());
    let res_scaled = scale3(&w)?.sub(&scaled.total());
    let residual = relative_error(&res_scaled, &scale3(&res_base)?);
    let max_relative_error = [convective, absorption, darcy, viscous, residual]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(RescaleReport {
        lambda,
        r,
        alpha,
        convective,
        absorption,
        darcy,
        viscous,
        residual,
        max_relative_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checkpoints: usize,
    /// Checkpoints whose time matches a ledger row.
    pub matched: usize,
    /// Largest relative mismatch of `E` and `G` between checkpoints and ledger.
    pub max_kinetic_mismatch: f64,
    pub max_grad_mismatch: f64,
    /// `R / E(0)` recomputed from the checkpoints alone.
    pub checkpoint_residual: f64,
    /// Largest `R / E(0)` recorded in the ledger.
    pub ledger_residual: f64,
    /// Relative differences of the final cumulative columns, checkpoint
    /// quadrature against ledger quadrature.
    pub dissipation_mismatch: f64,
    pub absorption_mismatch: f64,
}

pub const AUDIT_TOL: f64 = 1e-12;

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checkpoints > 0
            && self.matched == self.checkpoints
            && self.max_kinetic_mismatch <= AUDIT_TOL
            && self.max_grad_mismatch <= AUDIT_TOL
    }
}

fn find_ledger(dir: &Path) -> Result<PathBuf> {
    let candidates = [
        Some(dir.join("ledger.ndjson")),
        dir.parent().map(|p| p.join("ledger.ndjson")),
    ];
    candidates.into_iter().flatten().find(|p| p.is_file()).ok_or_else(|| {
        CbfError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no ledger.ndjson in {} or its parent", dir.display()),
        ))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s > 0.0 {
        (a - b).abs() / s
    } else {
        0.0
    }
}

/// Recomputes ledger columns from the checkpoints in `dir` and compares
/// them with `ledger.ndjson` from `dir` or its parent.
pub fn cmd_energy_audit(dir: &Path) -> Result<AuditReport> {
    let rows = read_ndjson(&find_ledger(dir)?)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    paths.sort();
    let mut states: Vec<StepperState> = paths.iter().map(|p| load_checkpoint(p)).collect::<Result<_>>()?;
    states.sort_by(|a, b| a.time.total_cmp(&b.time));
    states.dedup_by(|a, b| a.time == b.time);

    let mut report = AuditReport {
        checkpoints: states.len(),
        matched: 0,
        max_kinetic_mismatch: 0.0,
        max_grad_mismatch: 0.0,
        checkpoint_residual: 0.0,
        ledger_residual: 0.0,
        dissipation_mismatch: 0.0,
        absorption_mismatch: 0.0,
    };
    let e0 = rows.first().map_or(0.0, |r| r.kinetic);
    report.ledger_residual =
        rows.iter().map(|r| r.balance_residual).fold(0.0, f64::max) / if e0 > 0.0 { e0 } else { 1.0 };

    let mut recomputed = EnergyLedger::new();
    for s in &states {
        let e = l2_norm_sq(&s.field);
        let g = gradient_norm_sq(&s.field);
        if let Some(row) = rows.iter().find(|r| r.t == s.time) {
            report.matched += 1;
            report.max_kinetic_mismatch = report.max_kinetic_mismatch.max(rel(e, row.kinetic));
            report.max_grad_mismatch = report.max_grad_mismatch.max(rel(g, row.grad_sq));
        }
        recomputed.record(&s.field, s.time, &s.params)?;
    }
    report.checkpoint_residual = recomputed.max_relative_residual();
    if let (Some(last), Some(ck)) = (states.last(), recomputed.last()) {
        if let Some(row) = rows.iter().find(|r| r.t == last.time) {
            report.dissipation_mismatch = rel(ck.dissipation_cum, row.dissipation_cum);
            report.absorption_mismatch = rel(ck.absorption_cum, row.absorption_cum);
        }
    }
    Ok(report)
}
