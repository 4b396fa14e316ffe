//! The four subcommands.

use std::path::Path;
use std::time::Instant;

use cvforge::diagnostics::{self, heatmap_from_columns, wavefunction1d, wavefunction2d, wigner, Heatmap};
use cvforge::fock::{CutoffConfig, FockVector};
use cvforge::network::{apply_network, network_columns_for, NetworkParams};
use cvforge::objective::{CutoffReport, FidelityReport, ObjectiveSpec, TaskMode};
use cvforge::optimizer::{depth_sweep, multi_run, sweep_csv, RunRecord, SweepRow};
use cvforge::targets::equal_superposition;
use cvforge::C64;
use log::{info, warn};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{ExperimentConfig, Task};
use crate::CliError;

pub const VERSION: &str = concat!("cvforge ", env!("CARGO_PKG_VERSION"));
pub const PARAMS_FILE: &str = "params.json";
pub const REPORT_FILE: &str = "report.json";

/// Everything needed to interpret and reproduce a result.
#[derive(Debug, Serialize)]
struct Report<'a> {
    version: &'static str,
    command: Task,
    config: &'a ExperimentConfig,
    relations: usize,
    seed: u64,
    metrics: FidelityReport,
    training: Option<Training>,
    leakage: CutoffReport,
    allow_leaky: bool,
    /// Retained norm minus the required bound; negative when leaking.
    leakage_margin: f64,
    runs: Vec<RunSummary>,
    wall_time: f64,
}

#[derive(Debug, Serialize)]
struct Training {
    steps: usize,
    initial_cost: f64,
    best_cost: f64,
    best_step: usize,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    initial_cost: f64,
    best_cost: f64,
    best_step: usize,
    fidelity: f64,
    wall_time: f64,
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    version: &'static str,
    command: Task,
    config: &'a ExperimentConfig,
    relations: usize,
    leakage: CutoffReport,
    allow_leaky: bool,
    rows: Vec<SweepRow>,
    wall_time: f64,
}

fn objective(cfg: &ExperimentConfig, dim: usize, allow_leaky: bool) -> Result<ObjectiveSpec, CliError> {
    let relations = cfg.resolved_relations()?;
    let mut obj = ObjectiveSpec::new(cfg.target.clone(), dim, relations, cfg.penalty_weight)?
        .with_monte_carlo(cfg.monte_carlo.samples, cfg.monte_carlo.seed);
    let leak = *obj.leakage();
    if !leak.passes {
        if allow_leaky {
            warn!(
                "cutoff {dim} retains {:.8} of the target norm, below {:.8}; continuing as requested",
                leak.retained, leak.required
            );
            obj = obj.allow_leaky();
        } else {
            obj.require_cutoff()?;
        }
    }
    Ok(obj)
}

fn margin(leak: &CutoffReport) -> f64 {
    leak.retained - leak.required
}

pub fn train(cfg: &ExperimentConfig, task: Task, allow_leaky: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let obj = objective(cfg, cfg.network.cutoff, allow_leaky)?;
    let threads = cfg.threads()?;
    info!(
        "{} `{}`: {} layer(s), cutoff {}, {} step(s) x {} restart(s) on {threads} thread(s)",
        if task == Task::Prepare { "preparing" } else { "synthesizing" },
        cfg.target.name(),
        cfg.network.layers,
        cfg.network.cutoff,
        cfg.optimizer.steps,
        cfg.restarts
    );
    let multi = multi_run(&obj, &cfg.network, &cfg.optimizer, cfg.restarts, threads)?;
    let best = multi.best_run();

    let mut out = Artifacts::create(&cfg.output_dir)?;
    for r in &multi.runs {
        out.write_json(&format!("run_{}.json", r.seed), r)?;
        out.write(&format!("trace_{}.csv", r.seed), &r.trace_csv())?;
    }
    out.write(PARAMS_FILE, &best.final_params.to_json()?)?;
    if cfg.diagnostics.enabled {
        write_diagnostics(&mut out, cfg, &obj, &best.final_params)?;
    }
    let report = Report {
        version: VERSION,
        command: task,
        config: cfg,
        relations: obj.relations(),
        seed: best.seed,
        metrics: best.report,
        training: Some(Training {
            steps: cfg.optimizer.steps,
            initial_cost: best.initial_cost,
            best_cost: best.best_cost,
            best_step: best.best_step,
        }),
        leakage: *obj.leakage(),
        allow_leaky,
        leakage_margin: margin(obj.leakage()),
        runs: multi.runs.iter().map(summary).collect(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    out.write_json(REPORT_FILE, &report)?;
    println!(
        "{}: fidelity {:.6} ({}), best cost {:.3e} at step {} of seed {}; {} file(s) in {}",
        cfg.target.name(),
        best.report.fidelity,
        kind_name(&best.report),
        best.best_cost,
        best.best_step,
        best.seed,
        out.count(),
        out.dir().display()
    );
    Ok(())
}

fn summary(r: &RunRecord) -> RunSummary {
    RunSummary {
        seed: r.seed,
        initial_cost: r.initial_cost,
        best_cost: r.best_cost,
        best_step: r.best_step,
        fidelity: r.report.fidelity,
        wall_time: r.wall_time,
    }
}

fn kind_name(r: &FidelityReport) -> String {
    serde_json::to_value(r.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn sweep(cfg: &ExperimentConfig, allow_leaky: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("field `sweep`: required for task `sweep`".into()))?;
    let obj = objective(cfg, cfg.network.cutoff, allow_leaky)?;
    let threads = cfg.threads()?;
    info!(
        "sweeping `{}` over depths {:?}, {} run(s) each",
        cfg.target.name(),
        sweep.depths,
        sweep.runs_per_depth
    );
    let rows = depth_sweep(
        &obj,
        &cfg.network,
        &sweep.depths,
        &cfg.optimizer,
        sweep.runs_per_depth,
        threads,
    )?;
    let mut out = Artifacts::create(&cfg.output_dir)?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    for r in &rows {
        println!("depth {:>3}: mean best cost {:.4e}, min {:.4e}", r.depth, r.mean_best_cost, r.min_best_cost);
    }
    let report = SweepReport {
        version: VERSION,
        command: Task::Sweep,
        config: cfg,
        relations: obj.relations(),
        leakage: *obj.leakage(),
        allow_leaky,
        rows,
        wall_time: start.elapsed().as_secs_f64(),
    };
    out.write_json(REPORT_FILE, &report)?;
    Ok(())
}

/// Re-evaluates saved parameters at the config's cutoff, which may differ
/// from the one they were trained at.
pub fn analyze(cfg: &ExperimentConfig, params_file: &Path, allow_leaky: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(params_file)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", params_file.display())))?;
    let saved = NetworkParams::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", params_file.display())))?;
    if saved.modes != cfg.network.modes || saved.layers.len() != cfg.network.layers {
        return Err(CliError::Config(format!(
            "{}: shape mismatch, file has {} layer(s) on {} mode(s), config declares {} on {}",
            params_file.display(),
            saved.layers.len(),
            saved.modes,
            cfg.network.layers,
            cfg.network.modes
        )));
    }
    let params = NetworkParams {
        cutoff: cfg.network.cutoff,
        ..saved
    };
    params.validate()?;
    let obj = objective(cfg, cfg.network.cutoff, allow_leaky)?;
    let metrics = obj.report(&params)?;
    if !metrics.cost.is_finite() || !metrics.fidelity.is_finite() {
        return Err(CliError::Numerical("re-evaluated cost or fidelity is not finite".into()));
    }
    let mut out = Artifacts::create(&cfg.output_dir)?;
    if cfg.diagnostics.enabled {
        write_diagnostics(&mut out, cfg, &obj, &params)?;
    }
    let report = Report {
        version: VERSION,
        command: Task::Analyze,
        config: cfg,
        relations: obj.relations(),
        seed: cfg.optimizer.seed,
        metrics,
        training: None,
        leakage: *obj.leakage(),
        allow_leaky,
        leakage_margin: margin(obj.leakage()),
        runs: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    out.write_json(REPORT_FILE, &report)?;
    println!(
        "{}: fidelity {:.6} ({}), cost {:.3e} at cutoff {}",
        cfg.target.name(),
        metrics.fidelity,
        kind_name(&metrics),
        metrics.cost,
        cfg.network.cutoff
    );
    Ok(())
}

/// Phase-space and wavefunction grids of the target and learned outputs;
/// for gates also the real and imaginary heatmaps of both blocks, with both
/// gates applied to the equal superposition of the inputs.
fn write_diagnostics(
    out: &mut Artifacts,
    cfg: &ExperimentConfig,
    obj: &ObjectiveSpec,
    params: &NetworkParams,
) -> Result<(), CliError> {
    let cutoff = obj.cutoff();
    let targets = obj.target_columns();
    let (input, target_out) = match obj.mode() {
        TaskMode::StatePrep => (FockVector::vacuum(cutoff), column_state(targets, cutoff, 1.0)?),
        TaskMode::GateSynth => {
            let d = obj.relations();
            let input = equal_superposition(d, cutoff)?;
            let learned_cols = network_columns_for(params, obj.inputs())?;
            let rows = cfg.diagnostics.heatmap_rows.unwrap_or(if cfg.target.is_block_preserving() {
                d
            } else {
                cutoff.total_dim()
            });
            write_heatmap(out, "target", &heatmap_from_columns(targets, cutoff, rows)?)?;
            write_heatmap(out, "learned", &heatmap_from_columns(&learned_cols, cutoff, rows)?)?;
            write_state(out, cfg, "input", &input)?;
            (input, column_state(targets, cutoff, 1.0 / (d as f64).sqrt())?)
        }
    };
    let learned = apply_network(params, &input)?;
    write_state(out, cfg, "target", &target_out)?;
    write_state(out, cfg, "learned", &learned)
}

/// Sum of the columns of `cols`, scaled.
fn column_state(cols: &DMatrix<C64>, cutoff: CutoffConfig, scale: f64) -> Result<FockVector, CliError> {
    let amps: Vec<C64> = cols.row_iter().map(|r| r.sum() * scale).collect();
    Ok(FockVector::from_slice(&amps, cutoff)?)
}

fn write_heatmap(out: &mut Artifacts, tag: &str, h: &Heatmap) -> Result<(), CliError> {
    out.write(&format!("heatmap_{tag}_re.csv"), &diagnostics::matrix_csv(&h.re))?;
    out.write(&format!("heatmap_{tag}_im.csv"), &diagnostics::matrix_csv(&h.im))?;
    out.write(&format!("heatmap_{tag}_labels.csv"), &h.labels_csv())
}

fn write_state(out: &mut Artifacts, cfg: &ExperimentConfig, tag: &str, psi: &FockVector) -> Result<(), CliError> {
    let e = cfg.grid_extent();
    let n = cfg.diagnostics.points;
    let axis = (-e, e, n);
    if psi.cutoff().modes() == 1 {
        out.write(&format!("wigner_{tag}.csv"), &wigner(psi, axis, axis)?.to_csv())?;
        let xs = diagnostics::linspace(-e, e, n);
        let wf = wavefunction1d(psi, &xs)?;
        let mut text = String::from("x,re,im\n");
        for (x, z) in xs.iter().zip(&wf) {
            text.push_str(&format!("{x:.16e},{:.16e},{:.16e}\n", z.re, z.im));
        }
        out.write(&format!("wavefunction_{tag}.csv"), &text)
    } else {
        let grid = wavefunction2d(psi, axis, axis)?;
        out.write(&format!("wavefunction_{tag}_re.csv"), &grid.map(|z| z.re).to_csv())?;
        out.write(&format!("wavefunction_{tag}_im.csv"), &grid.map(|z| z.im).to_csv())
    }
}
