//! Adam descent over network parameters, restarts and depth sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{init_params, NetworkParams, Simulator, DEFAULT_ACTIVE_STD, DEFAULT_PHASE_RANGE};
use crate::objective::{CutoffReport, FidelityReport, ObjectiveSpec};
use crate::targets::TargetSpec;

/// Adam hyperparameters and the run budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps_hat")]
    pub eps_hat: f64,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_learning_rate() -> f64 {
    0.025
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps_hat() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps_hat: default_eps_hat(),
            steps: 0,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn with_steps(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps_hat > 0.0
            && self.eps_hat.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid Adam settings: {self:?}")))
        }
    }
}

/// Network layout and initialisation widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetShape {
    pub layers: usize,
    pub modes: usize,
    pub cutoff: usize,
    #[serde(default = "default_active_std")]
    pub active_std: f64,
    #[serde(default = "default_phase_range")]
    pub phase_range: f64,
}

fn default_active_std() -> f64 {
    DEFAULT_ACTIVE_STD
}
fn default_phase_range() -> f64 {
    DEFAULT_PHASE_RANGE
}

impl NetShape {
    pub fn new(layers: usize, modes: usize, cutoff: usize) -> Self {
        Self {
            layers,
            modes,
            cutoff,
            active_std: DEFAULT_ACTIVE_STD,
            phase_range: DEFAULT_PHASE_RANGE,
        }
    }

    fn check(&self, objective: &ObjectiveSpec) -> Result<()> {
        let c = objective.cutoff();
        if self.modes != c.modes() || self.cutoff != c.dim() {
            return Err(Error::InvalidParameter(format!(
                "network is {} mode(s) at cutoff {}, target needs {} mode(s) at cutoff {}",
                self.modes,
                self.cutoff,
                c.modes(),
                c.dim()
            )));
        }
        Ok(())
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam descent step; `step` counts from 1.
pub fn adam_step(
    params: &[f64],
    grads: &[f64],
    moments: &AdamMoments,
    config: &AdamConfig,
    step: usize,
) -> Result<(Vec<f64>, AdamMoments)> {
    let n = params.len();
    if grads.len() != n || moments.m.len() != n || moments.v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: grads.len(),
        });
    }
    if step == 0 {
        return Err(Error::InvalidParameter("Adam steps count from 1".into()));
    }
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(step as i32);
    let c2 = 1.0 - b2.powi(step as i32);
    let mut next = AdamMoments::zeros(n);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let g = grads[k];
        next.m[k] = b1 * moments.m[k] + (1.0 - b1) * g;
        next.v[k] = b2 * moments.v[k] + (1.0 - b2) * g * g;
        let m_hat = next.m[k] / c1;
        let v_hat = next.v[k] / c2;
        out.push(params[k] - config.learning_rate * m_hat / (v_hat.sqrt() + config.eps_hat));
    }
    Ok((out, next))
}

/// One optimisation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub target: TargetSpec,
    pub relations: usize,
    pub penalty_weight: f64,
    pub shape: NetShape,
    pub config: AdamConfig,
    pub seed: u64,
    pub initial_cost: f64,
    pub best_cost: f64,
    pub best_step: usize,
    /// Training cost before each update; kept out of the JSON record.
    #[serde(skip, default)]
    pub cost_trace: Vec<f64>,
    pub final_params: NetworkParams,
    pub report: FidelityReport,
    pub leakage: CutoffReport,
    pub wall_time: f64,
}

impl RunRecord {
    /// `step,cost` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,cost\n");
        for (s, c) in self.cost_trace.iter().enumerate() {
            out.push_str(&format!("{s},{c:.16e}\n"));
        }
        out
    }
}

/// Trains from `init_params(shape, config.seed)` for `config.steps` Adam steps
/// and keeps the best parameters seen.
pub fn run(objective: &ObjectiveSpec, shape: &NetShape, config: &AdamConfig) -> Result<RunRecord> {
    config.validate()?;
    shape.check(objective)?;
    objective.require_cutoff()?;
    let start = Instant::now();
    let init = init_params(
        shape.layers,
        shape.modes,
        shape.cutoff,
        config.seed,
        shape.active_std,
        shape.phase_range,
    )?;
    let sim = Simulator::new(init.cutoff_config()?)?;
    let mut theta = init.to_flat();
    let mut moments = AdamMoments::zeros(theta.len());
    let mut trace = Vec::with_capacity(config.steps);
    let mut best = (f64::INFINITY, 0usize, theta.clone());
    for step in 0..config.steps {
        let (cost, grad) = objective.cost_and_gradient(&sim, &theta)?;
        if !cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("cost or gradient at step {step}")));
        }
        trace.push(cost);
        if cost < best.0 {
            best = (cost, step, theta.clone());
        }
        if step % 500 == 0 {
            log::debug!("seed {} step {step}: cost {cost:.6e}", config.seed);
        }
        let (next, m) = adam_step(&theta, &grad, &moments, config, step + 1)?;
        theta = next;
        moments = m;
    }
    let initial_cost = match trace.first() {
        Some(&c) => c,
        None => {
            let c = objective.cost(&sim, &best.2)?;
            if !c.is_finite() {
                return Err(Error::NonFinite("initial cost".into()));
            }
            best.0 = c;
            c
        }
    };
    let final_params = NetworkParams::from_flat(shape.modes, shape.cutoff, &best.2)?;
    let report = objective.report(&final_params)?;
    Ok(RunRecord {
        target: objective.target().clone(),
        relations: objective.relations(),
        penalty_weight: objective.penalty_weight(),
        shape: shape.clone(),
        config: config.clone(),
        seed: config.seed,
        initial_cost,
        best_cost: best.0,
        best_step: best.1,
        cost_trace: trace,
        final_params,
        report,
        leakage: *objective.leakage(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Restarts with seeds `seed, seed + 1, ...` and the index of the best one.
#[derive(Debug, Clone)]
pub struct MultiRun {
    pub best: usize,
    pub runs: Vec<RunRecord>,
}

impl MultiRun {
    pub fn best_run(&self) -> &RunRecord {
        &self.runs[self.best]
    }
}

/// Runs `restarts` independent seeds on up to `parallelism` threads.
/// The result does not depend on the thread count.
pub fn multi_run(
    objective: &ObjectiveSpec,
    shape: &NetShape,
    config: &AdamConfig,
    restarts: usize,
    parallelism: usize,
) -> Result<MultiRun> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    objective.require_cutoff()?;
    let seeds: Vec<u64> = (0..restarts as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let runs = in_pool(parallelism, || {
        seeds
            .par_iter()
            .map(|&seed| {
                run(
                    objective,
                    shape,
                    &AdamConfig {
                        seed,
                        ..config.clone()
                    },
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let best = best_index(&runs);
    Ok(MultiRun { best, runs })
}

fn best_index(runs: &[RunRecord]) -> usize {
    runs.iter()
        .enumerate()
        .min_by(|a, b| a.1.best_cost.total_cmp(&b.1.best_cost).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn in_pool<T: Send>(parallelism: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// One row of a depth sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub mean_best_cost: f64,
    pub min_best_cost: f64,
    pub runs: usize,
}

/// Mean best cost per depth over `runs_per_depth` seeds each.
pub fn depth_sweep(
    objective: &ObjectiveSpec,
    shape: &NetShape,
    depths: &[usize],
    config: &AdamConfig,
    runs_per_depth: usize,
    parallelism: usize,
) -> Result<Vec<SweepRow>> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("depth list is empty".into()));
    }
    depths
        .iter()
        .map(|&depth| {
            let multi = multi_run(
                objective,
                &NetShape {
                    layers: depth,
                    ..shape.clone()
                },
                config,
                runs_per_depth,
                parallelism,
            )?;
            let costs: Vec<f64> = multi.runs.iter().map(|r| r.best_cost).collect();
            Ok(SweepRow {
                depth,
                mean_best_cost: costs.iter().sum::<f64>() / costs.len() as f64,
                min_best_cost: costs.iter().copied().fold(f64::INFINITY, f64::min),
                runs: costs.len(),
            })
        })
        .collect()
}

/// `depth,mean_best_cost,min_best_cost,runs` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("depth,mean_best_cost,min_best_cost,runs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            r.depth, r.mean_best_cost, r.min_best_cost, r.runs
        ));
    }
    out
}
