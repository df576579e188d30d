//! Subcommand drivers. Simulation atoms run in parallel across seeds; rows
//! are written in (point, θ, seed) order.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use wmpa_core::optics::{figure1_input, pointer_from_middle_rail};
use wmpa_core::{
    build_figure1_train, compare_protocols, estimate_phase, fidelity, figure1_stages, magnification,
    postselect_middle_rail, run_protocol, sigma_x_expectation, simulate_counts_with, simulate_train, ArmSummary,
    Budget, BudgetMode, CalibrationResult, CountData, CountRecord, OpticalTrain, PhaseEstimate, ProtocolConfig,
    UnnormalizedState2,
};

use crate::config::{CalibrationMode, Geometry, RunConfig};
use crate::error::{config, usage, Categorize, Category, CliResult, Failure};
use crate::output::{emit, Outputs};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const UNITS_PHASE: &str = "theta, kappa and their errors in radians; delta in degrees; rate in photons/s; \
duration in s; counts in photons";

/// Calibration used to invert `κ̂`, with the zero-signal run behind it.
struct Calibration {
    result: CalibrationResult,
    counts: Option<CountData>,
}

fn calibrate_geometry(geom: &Geometry, cfg: &RunConfig) -> CliResult<Calibration> {
    match cfg.calibration.mode()? {
        CalibrationMode::Exact => {
            let r = geom.at(0.0)?.ratio()?;
            Ok(Calibration { result: CalibrationResult::from_ratio(r)?, counts: None })
        }
        CalibrationMode::Simulated => {
            let counts = zero_signal_run(geom, cfg)?;
            let result = CalibrationResult::from_counts(counts.n_postselected, counts.n_input)?;
            Ok(Calibration { result, counts: Some(counts) })
        }
    }
}

fn zero_signal_run(geom: &Geometry, cfg: &RunConfig) -> CliResult<CountData> {
    if !geom.balanced() {
        return Err(config(
            "calibration.mode = \"simulated\" assumes alpha = beta; use mode = \"exact\" for this geometry",
        ));
    }
    Ok(simulate_counts_with(
        &geom.at(0.0)?,
        &cfg.noise.model(),
        cfg.calibration_rate(),
        cfg.calibration_duration(),
        cfg.calibration.seed,
        cfg.run.statistics,
    )?)
}

fn warn_shared_calibration_seed(cfg: &RunConfig) {
    if cfg.calibration.mode().ok() == Some(CalibrationMode::Simulated) && cfg.run.seeds().contains(&cfg.calibration.seed)
    {
        eprintln!(
            "warning: calibration.seed = {} is also a run seed; the two runs share their photon-number draw",
            cfg.calibration.seed
        );
    }
}

struct Atom {
    theta: f64,
    seed: u64,
    success_prob: f64,
    kappa_theory: f64,
    counts: CountData,
    est: PhaseEstimate,
}

fn simulate_atoms(geom: &Geometry, cfg: &RunConfig, cal: &CalibrationResult, seeds: &[u64]) -> CliResult<Vec<Atom>> {
    let noise = cfg.noise.model();
    let pairs: Vec<(f64, u64)> =
        cfg.signal.thetas.iter().flat_map(|&t| seeds.iter().map(move |&s| (t, s))).collect();
    pairs
        .par_iter()
        .map(|&(theta, seed)| {
            let pc = geom.at(theta)?;
            let outcome = run_protocol(&pc)?;
            let counts =
                simulate_counts_with(&pc, &noise, cfg.source.rate, cfg.source.duration, seed, cfg.run.statistics)?;
            let est = estimate_phase(&counts, cal, &noise)?;
            Ok(Atom { theta, seed, success_prob: outcome.success_prob, kappa_theory: outcome.kappa_exact, counts, est })
        })
        .collect()
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Aggregates over the seeds of one (point, θ).
#[derive(Debug, Clone, Serialize)]
struct PointSummary {
    theta: f64,
    kappa_theory: f64,
    success_prob: f64,
    runs: usize,
    mean_kappa_hat: f64,
    std_kappa_hat: f64,
    mean_kappa_err: f64,
    /// Runs with `|κ̂ − κ| ≤ 3 σ_κ`.
    within_3se: usize,
    mean_theta_hat: f64,
    std_theta_hat: f64,
    mean_analytic_sensitivity: f64,
    mean_n_detected: f64,
    clamped_runs: usize,
}

fn summarize_points(atoms: &[Atom], seeds_per_point: usize) -> Vec<PointSummary> {
    atoms
        .chunks(seeds_per_point)
        .map(|a| {
            let first = &a[0];
            let (mean_kappa_hat, std_kappa_hat) = mean_std(a.iter().map(|x| x.est.kappa_hat));
            let (mean_theta_hat, std_theta_hat) = mean_std(a.iter().map(|x| x.est.theta_hat));
            let n = a.len() as f64;
            PointSummary {
                theta: first.theta,
                kappa_theory: first.kappa_theory,
                success_prob: first.success_prob,
                runs: a.len(),
                mean_kappa_hat,
                std_kappa_hat,
                mean_kappa_err: a.iter().map(|x| x.est.std_error_kappa).sum::<f64>() / n,
                within_3se: a
                    .iter()
                    .filter(|x| (x.est.kappa_hat - x.kappa_theory).abs() <= 3.0 * x.est.std_error_kappa)
                    .count(),
                mean_theta_hat,
                std_theta_hat,
                mean_analytic_sensitivity: a.iter().map(|x| x.est.analytic_sensitivity).sum::<f64>() / n,
                mean_n_detected: a.iter().map(|x| x.counts.n_detected() as f64).sum::<f64>() / n,
                clamped_runs: a.iter().filter(|x| x.est.clamped).count(),
            }
        })
        .collect()
}

fn true_ratio(geom: &Geometry) -> CliResult<(f64, f64)> {
    let r = geom.at(0.0)?.ratio()?;
    Ok((r, magnification(r)?))
}

fn print_points(points: &[PointSummary]) {
    for p in points {
        say!(
            "  theta = {:<8} kappa = {:.6}  mean kappa_hat = {:.6} (sd {:.2e})  mean theta_hat = {:.6} (sd {:.2e})  {}/{} within 3 SE",
            p.theta, p.kappa_theory, p.mean_kappa_hat, p.std_kappa_hat, p.mean_theta_hat, p.std_theta_hat,
            p.within_3se, p.runs
        );
    }
}

// ---------------------------------------------------------------- calibrate

#[derive(Serialize)]
struct CalibrateRow {
    seed: u64,
    rate: f64,
    duration: f64,
    n_input: u64,
    n_postselected: u64,
    p_hat: f64,
    std_error_p: f64,
    r_hat: f64,
    delta_hat_deg: f64,
    h_hat: f64,
    p_true: f64,
    r_true: f64,
    h_true: f64,
}

#[derive(Serialize)]
struct CalibrateSummary {
    calibration: CalibrationResult,
    counts: CountRecord,
    p_true: f64,
    r_true: f64,
    h_true: f64,
    warnings: Vec<String>,
}

pub fn calibrate(cfg: &RunConfig) -> CliResult<()> {
    let geom = cfg.protocol.geometry()?;
    let mut warnings = Vec::new();
    if let Geometry::Delta(d) = geom {
        if !(d > 0.0 && d < 22.5) {
            warnings.push(format!("delta_deg = {d} lies outside the (0, 22.5) degree tilt range of the setup"));
        }
    }
    let counts = zero_signal_run(&geom, cfg)?;
    let cal = CalibrationResult::from_counts(counts.n_postselected, counts.n_input)?;
    let p_true = run_protocol(&geom.at(0.0)?)?.success_prob;
    let (r_true, h_true) = true_ratio(&geom)?;
    if cal.p_hat + 3.0 * cal.std_error_p >= 0.5 {
        warnings.push(format!(
            "p_hat = {:.4} is at the edge of the calibration range (sin(2 delta)^2 -> 1/2): r_hat = {:.4}, \
             h_hat = {:.3}, no amplification",
            cal.p_hat, cal.r_hat, cal.h_hat
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    say!(
        "p_hat = {:.6e} +- {:.2e}  r_hat = {:.6}  h_hat = {:.4}  delta_hat = {:.4} deg  ({} of {} photons survived)",
        cal.p_hat, cal.std_error_p, cal.r_hat, cal.h_hat, cal.delta_hat, counts.n_postselected, counts.n_input
    );
    let row = CalibrateRow {
        seed: counts.seed,
        rate: counts.rate,
        duration: counts.duration,
        n_input: counts.n_input,
        n_postselected: counts.n_postselected,
        p_hat: cal.p_hat,
        std_error_p: cal.std_error_p,
        r_hat: cal.r_hat,
        delta_hat_deg: cal.delta_hat,
        h_hat: cal.h_hat,
        p_true,
        r_true,
        h_true,
    };
    let summary = CalibrateSummary { calibration: cal, counts: counts.record(), p_true, r_true, h_true, warnings };
    emit(
        &Outputs::resolve(cfg, "calibrate"),
        "calibrate",
        "p dimensionless; delta in degrees; rate in photons/s; duration in s",
        cfg,
        &[row],
        &summary,
    )
}

// ---------------------------------------------------------------------- run

#[derive(Serialize)]
struct EstimateCols {
    sigma_x_hat: f64,
    sigma_x_err: f64,
    kappa_theory: f64,
    kappa_hat: f64,
    kappa_err: f64,
    theta_hat: f64,
    theta_err: f64,
    analytic_sensitivity: f64,
    clamped: bool,
}

impl EstimateCols {
    fn of(a: &Atom) -> Self {
        let e = &a.est;
        Self {
            sigma_x_hat: e.sigma_x_hat,
            sigma_x_err: e.std_error_sigma_x,
            kappa_theory: a.kappa_theory,
            kappa_hat: e.kappa_hat,
            kappa_err: e.std_error_kappa,
            theta_hat: e.theta_hat,
            theta_err: e.std_error_theta,
            analytic_sensitivity: e.analytic_sensitivity,
            clamped: e.clamped,
        }
    }
}

#[derive(Serialize)]
struct RunSummary {
    r_true: f64,
    h_true: f64,
    calibration: CalibrationResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_counts: Option<CountRecord>,
    points: Vec<PointSummary>,
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let geom = cfg.protocol.geometry()?;
    warn_shared_calibration_seed(cfg);
    let cal = calibrate_geometry(&geom, cfg)?;
    let seeds = cfg.run.seeds();
    let atoms = simulate_atoms(&geom, cfg, &cal.result, &seeds)?;
    let rows: Vec<(CountRecord, EstimateCols)> = atoms.iter().map(|a| (a.counts.record(), EstimateCols::of(a))).collect();
    let (r_true, h_true) = true_ratio(&geom)?;
    let points = summarize_points(&atoms, seeds.len());
    say!("r = {r_true:.6}, h = {h_true:.4}; calibrated r_hat = {:.6}, h_hat = {:.4}", cal.result.r_hat, cal.result.h_hat);
    print_points(&points);
    let summary = RunSummary {
        r_true,
        h_true,
        calibration: cal.result,
        calibration_counts: cal.counts.map(|c| c.record()),
        points,
    };
    emit(&Outputs::resolve(cfg, "run"), "run", UNITS_PHASE, cfg, &rows, &summary)
}

// -------------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRow {
    delta_deg: f64,
    r: f64,
    h: f64,
    p_s: f64,
    theta_true: f64,
    seed: u64,
    n_input: u64,
    n_detected: u64,
    kappa_theory: f64,
    kappa_hat: f64,
    kappa_err: f64,
    theta_hat: f64,
    theta_err: f64,
    analytic_sensitivity: f64,
}

#[derive(Serialize)]
struct SweepPoint {
    delta_deg: f64,
    r: f64,
    h: f64,
    calibration: CalibrationResult,
    points: Vec<PointSummary>,
}

/// Tilt of the table-top post-selection plate for ratio `r`.
fn delta_for(geom: &Geometry, r: f64) -> f64 {
    match *geom {
        Geometry::Delta(d) => d,
        _ => 0.5 * (45.0 + r.atan().to_degrees()),
    }
}

pub fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let geoms = cfg.sweep.points()?;
    warn_shared_calibration_seed(cfg);
    let seeds = cfg.run.seeds();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for geom in &geoms {
        let (r, h) = true_ratio(geom)?;
        let delta_deg = delta_for(geom, r);
        let cal = calibrate_geometry(geom, cfg)?;
        let atoms = simulate_atoms(geom, cfg, &cal.result, &seeds)?;
        rows.extend(atoms.iter().map(|a| SweepRow {
            delta_deg,
            r,
            h,
            p_s: a.success_prob,
            theta_true: a.theta,
            seed: a.seed,
            n_input: a.counts.n_input,
            n_detected: a.counts.n_detected(),
            kappa_theory: a.kappa_theory,
            kappa_hat: a.est.kappa_hat,
            kappa_err: a.est.std_error_kappa,
            theta_hat: a.est.theta_hat,
            theta_err: a.est.std_error_theta,
            analytic_sensitivity: a.est.analytic_sensitivity,
        }));
        let points = summarize_points(&atoms, seeds.len());
        say!("delta = {delta_deg:.4} deg, r = {r:.6}, h = {h:.4}:");
        print_points(&points);
        summary.push(SweepPoint { delta_deg, r, h, calibration: cal.result, points });
    }
    emit(&Outputs::resolve(cfg, "sweep"), "sweep", UNITS_PHASE, cfg, &rows, &summary)
}

// ----------------------------------------------------------- reproduce-fig2

#[derive(Serialize)]
struct Fig2Row {
    h: f64,
    r: f64,
    theta_true: f64,
    kappa_theory: f64,
    kappa_hat: f64,
    kappa_err: f64,
    theta_hat: f64,
    theta_err: f64,
    seed: u64,
}

#[derive(Serialize)]
struct Fig2Curve {
    h: f64,
    r: f64,
    calibration: CalibrationResult,
    points: Vec<PointSummary>,
}

#[derive(Serialize)]
struct Fig2Summary {
    curves: Vec<Fig2Curve>,
    runs: usize,
    within_3se: usize,
}

pub fn reproduce_fig2(cfg: &RunConfig) -> CliResult<()> {
    warn_shared_calibration_seed(cfg);
    let seeds = cfg.run.seeds();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &h in &cfg.fig2.magnifications {
        let r = 1.0 / h - 1.0;
        let geom = Geometry::Ratio(r);
        let cal = calibrate_geometry(&geom, cfg)?;
        let atoms = simulate_atoms(&geom, cfg, &cal.result, &seeds)?;
        rows.extend(atoms.iter().map(|a| Fig2Row {
            h,
            r,
            theta_true: a.theta,
            kappa_theory: a.kappa_theory,
            kappa_hat: a.est.kappa_hat,
            kappa_err: a.est.std_error_kappa,
            theta_hat: a.est.theta_hat,
            theta_err: a.est.std_error_theta,
            seed: a.seed,
        }));
        let points = summarize_points(&atoms, seeds.len());
        say!("h = {h}, r = {r:.6}:");
        print_points(&points);
        curves.push(Fig2Curve { h, r, calibration: cal.result, points });
    }
    let summary = Fig2Summary {
        runs: rows.len(),
        within_3se: curves.iter().flat_map(|c| &c.points).map(|p| p.within_3se).sum(),
        curves,
    };
    say!("{}/{} runs within 3 SE of the exact amplified phase", summary.within_3se, summary.runs);
    emit(&Outputs::resolve(cfg, "reproduce-fig2"), "reproduce-fig2", UNITS_PHASE, cfg, &rows, &summary)
}

// ------------------------------------------------------------------ compare

#[derive(Serialize)]
struct CompareRow {
    theta_true: f64,
    seed: u64,
    n_input: u64,
    amp_n_detected: u64,
    amp_kappa_hat: f64,
    amp_theta_hat: f64,
    amp_theta_err: f64,
    amp_clamped: bool,
    conv_n_detected: u64,
    conv_kappa_hat: f64,
    conv_theta_hat: f64,
    conv_theta_err: f64,
    conv_clamped: bool,
}

#[derive(Serialize)]
struct CompareSummary {
    theta: f64,
    r: f64,
    h: f64,
    amplified: ArmSummary,
    conventional: ArmSummary,
    std_ratio: f64,
    floor_ratio: f64,
}

#[derive(Serialize)]
struct CompareDoc {
    mode: BudgetMode,
    calibration: CalibrationResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_counts: Option<CountRecord>,
    comparisons: Vec<CompareSummary>,
}

pub fn compare(cfg: &RunConfig) -> CliResult<()> {
    let mode: BudgetMode = cfg.compare.mode.parse().map_err(|e| usage(format!("compare.mode: {e}")))?;
    let geom = cfg.protocol.geometry()?;
    let seeds = cfg.run.seeds();
    if seeds.len() < 2 {
        return Err(usage("compare needs at least two seeds"));
    }
    warn_shared_calibration_seed(cfg);
    let cal = calibrate_geometry(&geom, cfg)?;
    let budget = Budget { rate: cfg.source.rate, duration: cfg.source.duration, mode };
    let noise = cfg.noise.model();
    let mut rows = Vec::new();
    let mut comparisons = Vec::new();
    for &theta in &cfg.signal.thetas {
        let rep = compare_protocols(theta, &cal.result, &budget, &noise, &seeds)?;
        rows.extend(rep.rows.iter().map(|row| CompareRow {
            theta_true: theta,
            seed: row.seed,
            n_input: row.n_input,
            amp_n_detected: row.amplified.n_detected,
            amp_kappa_hat: row.amplified.kappa_hat,
            amp_theta_hat: row.amplified.theta_hat,
            amp_theta_err: row.amplified.std_error_theta,
            amp_clamped: row.amplified.clamped,
            conv_n_detected: row.conventional.n_detected,
            conv_kappa_hat: row.conventional.kappa_hat,
            conv_theta_hat: row.conventional.theta_hat,
            conv_theta_err: row.conventional.std_error_theta,
            conv_clamped: row.conventional.clamped,
        }));
        say!(
            "theta = {theta:<8} h = {:.4}  sd(theta_hat): amplified {:.3e}, conventional {:.3e}, ratio {:.3}  floors {:.3e} / {:.3e}",
            rep.h,
            rep.amplified.std_theta_hat,
            rep.conventional.std_theta_hat,
            rep.std_ratio,
            rep.amplified.precision_floor,
            rep.conventional.precision_floor
        );
        comparisons.push(CompareSummary {
            theta,
            r: rep.r,
            h: rep.h,
            amplified: rep.amplified,
            conventional: rep.conventional,
            std_ratio: rep.std_ratio,
            floor_ratio: rep.floor_ratio,
        });
    }
    let doc = CompareDoc { mode, calibration: cal.result, calibration_counts: cal.counts.map(|c| c.record()), comparisons };
    emit(&Outputs::resolve(cfg, "compare"), "compare", UNITS_PHASE, cfg, &rows, &doc)
}

// -------------------------------------------------------------- train-check

#[derive(Serialize)]
struct TrainRow {
    train: &'static str,
    delta_deg: Option<f64>,
    theta: f64,
    p_train: f64,
    p_protocol: f64,
    abs_dp: f64,
    /// Detector contrast `(P_H − P_V)/P_s` behind the analyser.
    sigma_x_train: f64,
    sigma_x_protocol: f64,
    abs_dsigma_x: f64,
    /// Pointer infidelity before the analyser; reference grid only.
    infidelity: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct TrainSummary {
    points: usize,
    tolerance: f64,
    max_abs_dp: f64,
    max_abs_dsigma_x: f64,
    max_infidelity: f64,
    failures: usize,
    pass: bool,
}

/// Compares a complete train (through the analyser) with the protocol.
/// `before_analysis`, when given, is checked state by state as well.
fn audit_row(
    train: &'static str,
    delta_deg: Option<f64>,
    full: &OpticalTrain,
    before_analysis: Option<&OpticalTrain>,
    pc: &ProtocolConfig,
    tol: f64,
) -> CliResult<TrainRow> {
    let proto = run_protocol(pc)?;
    let (p_train, detected) = postselect_middle_rail(&simulate_train(full, &figure1_input())?)?;
    let sigma_x_train = (detected.a0.norm_sqr() - detected.a1.norm_sqr()) / p_train;
    let sigma_x_protocol = sigma_x_expectation(&proto.pointer)?;
    let infidelity = match before_analysis {
        Some(t) => {
            let (_, pol) = postselect_middle_rail(&simulate_train(t, &figure1_input())?)?;
            let pointer: UnnormalizedState2 = pointer_from_middle_rail(&pol);
            Some(1.0 - fidelity(&pointer, &proto.pointer)?)
        }
        None => None,
    };
    let abs_dp = (p_train - proto.success_prob).abs();
    let abs_dsigma_x = (sigma_x_train - sigma_x_protocol).abs();
    Ok(TrainRow {
        train,
        delta_deg,
        theta: pc.theta,
        p_train,
        p_protocol: proto.success_prob,
        abs_dp,
        sigma_x_train,
        sigma_x_protocol,
        abs_dsigma_x,
        infidelity,
        pass: abs_dp <= tol && abs_dsigma_x <= tol && infidelity.is_none_or(|f| f <= tol),
    })
}

fn load_train(path: &Path) -> CliResult<OpticalTrain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))
        .category(Category::Io)?;
    let train: OpticalTrain = toml::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
    train.validate().map_err(|e| config(format!("{}: {e}", path.display())))?;
    Ok(train)
}

/// Writes the reference train for the configured tilt as a TOML document.
pub fn emit_train(cfg: &RunConfig, path: &Path) -> CliResult<()> {
    let Geometry::Delta(delta) = cfg.protocol.geometry()? else {
        return Err(usage("--emit-train needs protocol.delta_deg"));
    };
    let theta = cfg.train_check.theta.unwrap_or(0.0);
    let doc = toml::to_string(&build_figure1_train(delta, theta)?).category(Category::Compute)?;
    std::fs::write(path, doc)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
        .category(Category::Io)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn train_check(cfg: &RunConfig) -> CliResult<()> {
    let tc = &cfg.train_check;
    let mut rows = tc
        .grid()
        .par_iter()
        .map(|&(d, theta)| {
            let stages = figure1_stages(d, theta)?;
            let pc = ProtocolConfig::from_delta(d, theta)?;
            audit_row("figure1", Some(d), &stages.full(), Some(&stages.until_postselection()), &pc, tc.tolerance)
        })
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(path) = &tc.train {
        let theta = tc.theta.ok_or_else(|| config("train_check.theta is required with train_check.train"))?;
        let geom = cfg.protocol.geometry()?;
        let delta = match geom {
            Geometry::Delta(d) => Some(d),
            _ => None,
        };
        rows.push(audit_row("custom", delta, &load_train(path)?, None, &geom.at(theta)?, tc.tolerance)?);
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    let summary = TrainSummary {
        points: rows.len(),
        tolerance: tc.tolerance,
        max_abs_dp: rows.iter().map(|r| r.abs_dp).fold(0.0, f64::max),
        max_abs_dsigma_x: rows.iter().map(|r| r.abs_dsigma_x).fold(0.0, f64::max),
        max_infidelity: rows.iter().filter_map(|r| r.infidelity).fold(0.0, f64::max),
        failures,
        pass: failures == 0,
    };
    say!(
        "{} points: max |dP| = {:.3e}, max |d<sigma_x>| = {:.3e}, max 1-F = {:.3e}, {} outside tolerance {:.0e}",
        summary.points, summary.max_abs_dp, summary.max_abs_dsigma_x, summary.max_infidelity, failures, tc.tolerance
    );
    emit(
        &Outputs::resolve(cfg, "train-check"),
        "train-check",
        "delta in degrees; theta in radians; probabilities and fidelities dimensionless",
        cfg,
        &rows,
        &summary,
    )?;
    if failures > 0 {
        return Err(Failure::new(Category::Audit, format!("{failures} points outside tolerance")));
    }
    Ok(())
}
