//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cbf_core::analysis::{
    density_errors, lemma21_sandwich, truncated_mollified, truncation_errors, weak_form_terms, Mollifier,
    TrajectoryRecorder, TrajectorySamples,
};
use cbf_core::diagnostics::{
    energy_inequality, gronwall_monitor, load_checkpoint, save_checkpoint, EnergyLedger, RegularityRecorder,
};
use cbf_core::dynamics::ModelParams;
use cbf_core::harness::{
    cmd_check_inequalities, cmd_rescale_test, cmd_sweep, initial_stepper, observe_now, shear, taylor_green,
    worker_count, IcKind, RunConfig,
};
use cbf_core::integrator::{Stepper, StepperConfig, StepperState};
use cbf_core::spectral::{PhysicalField, Resolution, SpectralField};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

type Check = cbf_core::Result<Outcome>;

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fixed_ledger(cfg: &RunConfig) -> cbf_core::Result<EnergyLedger> {
    let mut stepper = initial_stepper(cfg)?;
    let mut ledger = EnergyLedger::new();
    observe_now(&mut stepper, &mut [&mut ledger])?;
    stepper.integrate(cfg.t_end, cfg.cadence, &mut [&mut ledger])?;
    Ok(ledger)
}

fn with_dt(dt: f64) -> RunConfig {
    RunConfig {
        dt_min: dt,
        dt_max: dt,
        ..RunConfig::default()
    }
}

/// Criteria 1 and 2 share the Taylor-Green runs.
fn energy_balance() -> cbf_core::Result<(Outcome, Outcome)> {
    let mut residuals = Vec::new();
    let mut finest = None;
    let mut finest_seconds = 0.0;
    for dt in [4e-3, 2e-3, 1e-3] {
        let started = Instant::now();
        let ledger = fixed_ledger(&with_dt(dt))?;
        finest_seconds = started.elapsed().as_secs_f64();
        residuals.push(ledger.max_relative_residual());
        finest = Some(ledger);
    }
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let res = residuals[2];
    let ok = res <= 1e-6 && orders.iter().all(|o| (o - 4.0).abs() <= 0.5) && finest_seconds < 120.0;
    let c1 = Outcome::new(
        ok,
        format!(
            "residuals {} orders {orders:.3?} runtime at dt=1e-3 {finest_seconds:.1}s",
            sci(&residuals)
        ),
    );

    let ledger = finest.expect("three runs");
    let ineq = energy_inequality(ledger.rows());
    let c2 = Outcome::new(
        ineq.min_relative_slack >= -1e-8,
        format!("{} pairs, min slack/E(0) {:.3e}", ineq.pairs, ineq.min_relative_slack),
    );
    Ok((c1, c2))
}

fn criterion3() -> Check {
    let started = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.ic.kind = IcKind::RandomSpectrum;
    cfg.ic.seed = 7;
    cfg.ic.amplitude = 1.0;
    cfg.t_end = 1.0;
    cfg.dt_min = 1e-5;
    cfg.dt_max = 2e-2;
    cfg.tol = 1e-8;
    let grid = [0.25, 0.5, 1.0];
    let rows = cmd_sweep(&cfg, &grid, &grid, 3.0, worker_count())?;
    let seconds = started.elapsed().as_secs_f64();
    let asserted = rows.iter().filter(|r| r.asserted).count();
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("(mu {}, beta {})", r.mu, r.beta))
        .collect();
    let worst = rows
        .iter()
        .filter(|r| r.asserted && r.max_grad_sq > 0.0)
        .map(|r| r.max_grad_increase / r.max_grad_sq)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome::new(
        failed.is_empty() && seconds < 600.0,
        format!(
            "{asserted}/{} cells asserted, worst increase/max {worst:.3e}, failed {failed:?}, runtime {seconds:.1}s",
            rows.len()
        ),
    ))
}

fn criterion4() -> Check {
    let res = Resolution::new(10, 32)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for r in [4.0, 5.0] {
        let p = ModelParams::new(1.0, 0.0, 1.0, r)?;
        let mut stepper = Stepper::new(StepperState::new(taylor_green(res), p), StepperConfig::fixed(5e-3))?;
        let mut ledger = EnergyLedger::new();
        let mut probes = RegularityRecorder::default();
        observe_now(&mut stepper, &mut [&mut ledger, &mut probes])?;
        stepper.integrate(1.0, 1, &mut [&mut ledger, &mut probes])?;
        let report = gronwall_monitor(ledger.rows(), &p, &probes.probes)?;
        ok &= report.passed();
        parts.push(format!(
            "r={r}: c {:.6}, max G/bound {:.6}, max differential excess {:.3e}",
            report.constant,
            report.max_bound_ratio,
            report.max_differential_excess.unwrap_or(f64::NAN)
        ));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn criterion5() -> Check {
    let started = Instant::now();
    let rep = lemma21_sandwich(&shear(Resolution::new(2, 6)?), 3.0);
    let pi3 = std::f64::consts::PI.powi(3);
    let analytic = (rep.i_r - pi3).abs() <= 1e-10 * pi3
        && (rep.m - 3.0 * pi3).abs() <= 1e-10 * pi3
        && (rep.m - rep.r_i_r).abs() <= 1e-10 * rep.m.abs();
    let check = cmd_check_inequalities(7, &[2.0, 3.0, 4.0, 7.0], 100)?;
    let seconds = started.elapsed().as_secs_f64();
    Ok(Outcome::new(
        analytic
            && check.min_sandwich_slack >= -1e-8
            && check.max_identity_defect <= 1e-8
            && check.violations.is_empty()
            && seconds < 60.0,
        format!(
            "shear (I3, M, 3 I3) = ({:.10}, {:.10}, {:.10}); {} fields, min slack {:.3e}, identity defect {:.3e}, runtime {seconds:.1}s",
            rep.i_r, rep.m, rep.r_i_r, check.fields, check.min_sandwich_slack, check.max_identity_defect
        ),
    ))
}

/// `sum_j 2^-j (sin(j y + a), cos(j z + 2a), sin(j x))`, divergence-free.
fn harmonics(res: Resolution, phase: f64) -> cbf_core::Result<SpectralField> {
    let kmax = res.k_max();
    SpectralField::from_physical(
        &PhysicalField::from_fn(res.grid(), |x, y, z| {
            let mut u = [0.0; 3];
            for j in 1..=kmax {
                let a = 0.5f64.powi(j as i32);
                let jf = j as f64;
                u[0] += a * (jf * y + phase).sin();
                u[1] += a * (jf * z + 2.0 * phase).cos();
                u[2] += a * (jf * x).sin();
            }
            u
        }),
        res,
    )
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion6() -> Check {
    let mut worst_axiom: f64 = 0.0;
    let mut axioms = true;
    for h in [1.0, 0.5, 0.1, 1e-3, 1e-6] {
        let a = Mollifier::new(h)?.axioms();
        axioms &= a.holds(1e-10);
        worst_axiom = worst_axiom
            .max(a.mass_defect)
            .max(a.half_mass_defect)
            .max(a.even_defect);
    }

    let f = harmonics(Resolution::new(12, 26)?, 0.3)?;
    let trunc = truncation_errors(&f, &[2, 4, 8], 4.0, 50)?;

    let res = Resolution::new(16, 34)?;
    let (a, b) = (harmonics(res, 0.3)?, harmonics(res, 1.1)?);
    let w = TrajectorySamples::from_fn(0.0, 1.0 / 64.0, 65, |t| {
        a.scaled(t.cos()).add(&b.scaled((2.0 * t).sin()))
    })?;
    let schedule: Vec<(usize, f64)> = (1..=4).map(|j| (1usize << j, 0.5f64.powi(j))).collect();
    let density: Vec<f64> = density_errors(&w, &schedule)?.iter().map(|d| d.combined()).collect();

    Ok(Outcome::new(
        axioms && strictly_decreasing(&trunc) && strictly_decreasing(&density),
        format!(
            "worst axiom defect {worst_axiom:.3e}; L4 truncation {}; density {}",
            sci(&trunc),
            sci(&density)
        ),
    ))
}

fn criterion7() -> Check {
    let a = cmd_rescale_test(2, 3.0, 0.0, 7)?;
    let b = cmd_rescale_test(2, 2.0, 0.0, 7)?;
    Ok(Outcome::new(
        a.max_relative_error <= 1e-10 && b.max_relative_error <= 1e-10,
        format!(
            "r=3 max relative error {:.3e}; r=2 {:.3e}",
            a.max_relative_error, b.max_relative_error
        ),
    ))
}

fn criterion8() -> Check {
    let res = Resolution::new(6, 14)?;
    let p = ModelParams::new(0.1, 0.0, 0.3, 3.0)?;
    let (t1, n) = (0.5, 4);
    let mut residuals = Vec::new();
    for (dt, h) in [(1e-2, 0.2), (2.5e-3, 0.1), (6.25e-4, 0.05)] {
        let mut stepper = Stepper::new(StepperState::new(taylor_green(res), p), StepperConfig::fixed(dt))?;
        let mut rec = TrajectoryRecorder::new();
        observe_now(&mut stepper, &mut [&mut rec])?;
        stepper.integrate(t1 + 1.5 * h, 1, &mut [&mut rec])?;
        let v = rec.into_samples()?;
        let phi = truncated_mollified(&v, n, t1, &Mollifier::new(h)?)?;
        residuals.push(weak_form_terms(&v, &phi, &p, 0.0, t1)?.residual);
    }
    let finest = *residuals.last().expect("three levels");
    Ok(Outcome::new(
        strictly_decreasing(&residuals) && finest <= 1e-4,
        format!(
            "(dt, h) from (1e-2, 0.2), dt/4 and h/2 per level: residuals {}",
            sci(&residuals)
        ),
    ))
}

fn criterion9() -> Check {
    let cfg = RunConfig {
        k_max: 6,
        grid: 14,
        t_end: 0.2,
        ..RunConfig::default()
    };
    let full = fixed_ledger(&cfg)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("half.bin");
    let mut stepper = initial_stepper(&cfg)?;
    let mut ledger = EnergyLedger::new();
    observe_now(&mut stepper, &mut [&mut ledger])?;
    stepper.integrate(cfg.t_end / 2.0, cfg.cadence, &mut [&mut ledger])?;
    let saved = stepper.into_state();
    save_checkpoint(&saved, &path)?;
    let loaded = load_checkpoint(&path)?;
    let round_trip = loaded == saved
        && loaded
            .field
            .components()
            .iter()
            .zip(saved.field.components())
            .all(|(a, b)| {
                a.iter()
                    .zip(b)
                    .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
            });

    let mut resumed = Stepper::new(loaded, cfg.stepper_config())?;
    resumed.integrate(cfg.t_end, cfg.cadence, &mut [&mut ledger])?;
    let mut full_text = Vec::new();
    let mut resumed_text = Vec::new();
    full.write_rows(&mut full_text)?;
    ledger.write_rows(&mut resumed_text)?;
    let identical = full.rows() == ledger.rows() && full_text == resumed_text;
    Ok(Outcome::new(
        identical && round_trip,
        format!(
            "{} rows, ledgers identical {identical}, checkpoint round trip bit-exact {round_trip}",
            full.len()
        ),
    ))
}

fn report(n: usize, outcome: cbf_core::Result<Outcome>, failures: &mut usize) {
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !passed {
        *failures += 1;
    }
    println!("criterion {n}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn main() -> ExitCode {
    let mut failures = 0;
    match energy_balance() {
        Ok((c1, c2)) => {
            report(1, Ok(c1), &mut failures);
            report(2, Ok(c2), &mut failures);
        }
        Err(e) => {
            report(1, Err(e), &mut failures);
            failures += 1;
            println!("criterion 2: FAIL shares the runs of criterion 1");
        }
    }
    report(3, criterion3(), &mut failures);
    report(4, criterion4(), &mut failures);
    report(5, criterion5(), &mut failures);
    report(6, criterion6(), &mut failures);
    report(7, criterion7(), &mut failures);
    report(8, criterion8(), &mut failures);
    report(9, criterion9(), &mut failures);
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
