use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::fgraph::{optimize, SolveReport};
use crate::manifold::Pose3;
use crate::simkit::{
    arc_distance, generate_truth, synthesize_measurements, unit_circle_fixture, UnitCircleVariant,
};
use crate::tracking::{
    baselines, build_graph, metrics, smooth, ErrorReport, ErrorStats, KeyframeType, Mode,
    TrajectoryEstimate,
};

use super::{io, CliError, RunConfig};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn input(explicit: &Option<PathBuf>, out: &Path, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.join(default))
}

fn not_converged(report: &SolveReport) -> Result<(), CliError> {
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged {
            iterations: report.iterations,
            final_cost: report.final_cost,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub truth_path: PathBuf,
    pub measurements_path: PathBuf,
    pub truth_rows: usize,
    pub counts: BTreeMap<&'static str, usize>,
}

impl SimulateOutput {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "truth: {} samples -> {}\n",
            self.truth_rows,
            self.truth_path.display()
        );
        let total: usize = self.counts.values().sum();
        let _ = writeln!(
            s,
            "measurements: {total} records -> {}",
            self.measurements_path.display()
        );
        for (k, n) in &self.counts {
            let _ = writeln!(s, "  {k:<8} {n}");
        }
        s
    }
}

/// Writes `truth.csv` and `measurements.csv` into the output directory.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput, CliError> {
    let scenario = config.scenario();
    let truth = generate_truth(&scenario)?;
    let records = synthesize_measurements(&scenario, config.seed)?;
    ensure_dir(&config.out)?;
    let truth_path = config.out.join("truth.csv");
    let measurements_path = config.out.join("measurements.csv");
    io::write_truth(&truth_path, &truth.samples)?;
    io::write_measurements(&measurements_path, &records)?;
    let mut counts = BTreeMap::new();
    for r in &records {
        *counts.entry(r.kind.label()).or_insert(0) += 1;
    }
    Ok(SimulateOutput {
        truth_path,
        measurements_path,
        truth_rows: truth.samples.len(),
        counts,
    })
}

#[derive(Debug, Clone)]
pub struct SmoothOutput {
    pub estimate: TrajectoryEstimate,
    pub solve: SolveReport,
    pub estimate_path: PathBuf,
    pub report_path: PathBuf,
    /// Text written to the report file.
    pub report: String,
}

impl SmoothOutput {
    pub fn check_converged(&self) -> Result<(), CliError> {
        not_converged(&self.solve)
    }
}

/// Smooths the measurement stream and writes `estimate.csv` and
/// `report.txt`. Outputs are written even when the solver does not converge.
pub fn cmd_smooth(config: &RunConfig) -> Result<SmoothOutput, CliError> {
    let path = input(&config.measurements, &config.out, "measurements.csv");
    let records = io::read_measurements(&path)?;
    let start = Instant::now();
    let problem = build_graph(&records, &config.tracking())?;
    let (estimate, _, solve) = smooth(&problem, &config.solver, config.covariances)?;
    let elapsed = start.elapsed();

    let count = |k: KeyframeType| problem.keyframes.iter().filter(|f| f.kind == k).count();
    let mut report = String::new();
    let mode = match config.mode {
        Mode::A => "A",
        Mode::B => "B",
    };
    let _ = writeln!(report, "mode: {mode}");
    let _ = writeln!(report, "measurements: {}", records.len());
    let _ = writeln!(
        report,
        "keyframes: {} (optical {}, usbl {}, gate {})",
        problem.keyframes.len(),
        count(KeyframeType::Optical),
        count(KeyframeType::Usbl),
        count(KeyframeType::Gate)
    );
    let _ = writeln!(report, "transitions: {}", problem.transitions.len());
    let _ = writeln!(report, "variables: {}", problem.graph.num_variables());
    let _ = writeln!(report, "factors: {}", problem.graph.factors().len());
    let gauges: Vec<String> = problem.gauge_priors.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(report, "gauge_priors: {}", gauges.join(" "));
    let _ = writeln!(report, "iterations: {}", solve.iterations);
    let _ = writeln!(report, "initial_cost: {:.9e}", solve.initial_cost);
    let _ = writeln!(report, "final_cost: {:.9e}", solve.final_cost);
    let _ = writeln!(report, "converged: {}", solve.converged);
    let _ = writeln!(report, "elapsed_s: {:.3}", elapsed.as_secs_f64());

    ensure_dir(&config.out)?;
    let estimate_path = config.out.join("estimate.csv");
    let report_path = config.out.join("report.txt");
    io::write_estimate(&estimate_path, &estimate)?;
    std::fs::write(&report_path, &report)
        .map_err(|e| CliError::Io(format!("{}: {e}", report_path.display())))?;
    Ok(SmoothOutput {
        estimate,
        solve,
        estimate_path,
        report_path,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct MetricsOutput {
    pub report: ErrorReport,
    /// `(group, stats)` rows as written to `metrics.csv`.
    pub rows: Vec<(String, ErrorStats)>,
    pub table: String,
    pub metrics_path: PathBuf,
    pub errors_path: PathBuf,
}

/// Scores an estimate against ground truth. Raw-measurement baseline rows
/// are added when a measurement file is given or present in the output
/// directory.
pub fn cmd_metrics(config: &RunConfig) -> Result<MetricsOutput, CliError> {
    let estimate = io::read_estimate(&input(&config.estimate, &config.out, "estimate.csv"))?;
    let truth = io::read_truth(&input(&config.truth, &config.out, "truth.csv"))?;
    let report = metrics(&estimate, &truth)?;
    let measurements = input(&config.measurements, &config.out, "measurements.csv");
    let raw = if config.measurements.is_some() || measurements.exists() {
        Some(baselines(&io::read_measurements(&measurements)?, &truth)?)
    } else {
        None
    };
    let rows = io::metrics_rows(&report, raw.as_ref().map(|b| (&b.usbl, &b.optical)));
    ensure_dir(&config.out)?;
    let metrics_path = config.out.join("metrics.csv");
    let errors_path = config.out.join("errors.csv");
    io::write_metrics(&metrics_path, &rows)?;
    io::write_errors(&errors_path, &report)?;
    Ok(MetricsOutput {
        table: io::format_table(&rows),
        report,
        rows,
        metrics_path,
        errors_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitCircleRow {
    pub index: usize,
    pub anchored: bool,
    pub initial: Pose3,
    pub optimized: Pose3,
    pub initial_arc_distance: f64,
    pub arc_distance: f64,
}

#[derive(Debug, Clone)]
pub struct UnitCircleOutput {
    pub variant: UnitCircleVariant,
    pub rows: Vec<UnitCircleRow>,
    pub solve: SolveReport,
    pub path: PathBuf,
}

impl UnitCircleOutput {
    /// Largest arc distance over the free poses after optimization.
    pub fn max_free_arc_distance(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.anchored)
            .map(|r| r.arc_distance)
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} poses, {} iterations, converged: {}\n",
            self.variant.label(),
            self.rows.len(),
            self.solve.iterations,
            self.solve.converged
        );
        let _ = writeln!(
            s,
            "{:>5} {:>8} {:>14} {:>14}",
            "pose", "anchor", "arc_init", "arc_final"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>5} {:>8} {:>14.3e} {:>14.3e}",
                r.index, r.anchored, r.initial_arc_distance, r.arc_distance
            );
        }
        let _ = writeln!(
            s,
            "max free arc distance: {:.3e}",
            self.max_free_arc_distance()
        );
        s
    }

    pub fn check_converged(&self) -> Result<(), CliError> {
        not_converged(&self.solve)
    }
}

/// Runs the unit-circle fixture and writes `unit_circle.csv` with the
/// initial and optimized poses of every key.
pub fn cmd_unitcircle(config: &RunConfig) -> Result<UnitCircleOutput, CliError> {
    let fixture = unit_circle_fixture(config.variant, config.unit_sigma, config.seed)?;
    let (values, solve) = optimize(&fixture.graph, &fixture.initial, &config.solver)?;
    let pose = |v: &crate::fgraph::Values, i: usize| -> Result<Pose3, CliError> {
        Ok(v.get(&fixture.keys[i])?
            .as_pose()
            .cloned()
            .expect("unit-circle keys are SE(3)"))
    };
    let rows = (0..fixture.keys.len())
        .map(|i| {
            let initial = pose(&fixture.initial, i)?;
            let optimized = pose(&values, i)?;
            Ok(UnitCircleRow {
                index: i,
                anchored: fixture.anchored.contains(&i),
                initial_arc_distance: arc_distance(&initial.translation),
                arc_distance: arc_distance(&optimized.translation),
                initial,
                optimized,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ensure_dir(&config.out)?;
    let path = config.out.join("unit_circle.csv");
    io::write_unit_circle(&path, &rows)?;
    Ok(UnitCircleOutput {
        variant: config.variant,
        rows,
        solve,
        path,
    })
}
