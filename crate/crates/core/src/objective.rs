//! Training costs and reported fidelities.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{overlap, CutoffConfig, FockOperator, FockVector};
use crate::network::{self, layer_roles, params_per_layer, GateMagnitudes, NetworkParams, Simulator};
use crate::random;
use crate::targets::TargetSpec;
use crate::C64;

/// Allowed norm leakage out of the simulated space.
pub const CUTOFF_EPSILON: f64 = 1e-4;
/// Extra levels per mode used when measuring leakage.
pub const REFERENCE_PADDING: usize = 20;
/// Haar samples for the Monte-Carlo average fidelity.
pub const MC_SAMPLES: usize = 10_000;
const MAX_REFERENCE_DIM: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    StatePrep,
    GateSynth,
}

/// Which fidelity a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    /// `|<target|out>|^2`.
    State,
    /// Average gate fidelity from the process fidelity.
    AverageFromProcess,
    /// Average gate fidelity sampled over Haar inputs.
    MonteCarloAverage,
}

/// Result of a leakage check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub dim: usize,
    pub reference_dim: usize,
    /// `||P_D psi||`, the worst over columns for gates.
    pub retained: f64,
    pub required: f64,
    pub passes: bool,
    /// Smallest cutoff meeting the bound within the reference space.
    pub smallest: Option<usize>,
}

/// Leakage of a reference-cutoff state out of the first `dim` levels per mode.
pub fn cutoff_check(reference: &FockVector, dim: usize, epsilon: f64) -> Result<CutoffReport> {
    check_columns(&[reference], dim, epsilon)
}

fn check_columns(columns: &[&FockVector], dim: usize, epsilon: f64) -> Result<CutoffReport> {
    let reference = columns
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to check".into()))?
        .cutoff();
    if reference.dim() <= dim {
        return Err(Error::InvalidParameter(format!(
            "reference cutoff {} must exceed the checked cutoff {dim}",
            reference.dim()
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let required = 1.0 - epsilon;
    // Mass by the largest occupation of each basis state.
    let mut by_level = vec![vec![0.0; reference.dim()]; columns.len()];
    for (col, mass) in columns.iter().zip(by_level.iter_mut()) {
        for (k, a) in col.amplitudes().iter().enumerate() {
            let top = reference.occupations(k).into_iter().max().unwrap_or(0);
            mass[top] += a.norm_sqr();
        }
    }
    let retained_at = |d: usize| {
        by_level
            .iter()
            .map(|mass| mass[..d].iter().sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    };
    let retained = retained_at(dim);
    let smallest = (1..=reference.dim()).find(|&d| retained_at(d) >= required);
    Ok(CutoffReport {
        dim,
        reference_dim: reference.dim(),
        retained,
        required,
        passes: retained >= required,
        smallest,
    })
}

/// `|<target|out> - 1|`.
pub fn state_prep_cost(out: &FockVector, target: &FockVector) -> Result<f64> {
    Ok((overlap(target, out)? - 1.0).norm())
}

/// `|<target|psi>|^2`.
pub fn state_fidelity(psi: &FockVector, target: &FockVector) -> Result<f64> {
    Ok(overlap(target, psi)?.norm_sqr())
}

/// Keeps the rows of `cols` (indexed in `from`) whose occupations fit in `to`.
pub fn project_rows(cols: &DMatrix<C64>, from: CutoffConfig, to: CutoffConfig) -> Result<DMatrix<C64>> {
    if from.modes() != to.modes() || cols.nrows() != from.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: from.total_dim(),
            found: cols.nrows(),
        });
    }
    let mut out = DMatrix::zeros(to.total_dim(), cols.ncols());
    for k in 0..from.total_dim() {
        if let Some(j) = to.index_of(&from.occupations(k)) {
            out.row_mut(j).copy_from(&cols.row(k));
        }
    }
    Ok(out)
}

/// Columns `V|in_i>` for the first `d` relation inputs, restricted to `to`.
pub fn target_columns(v: &FockOperator, d: usize, to: CutoffConfig) -> Result<DMatrix<C64>> {
    let from = v.cutoff();
    if from.modes() != to.modes() || from.dim() < to.dim() {
        return Err(Error::InvalidParameter(format!(
            "target cutoff {} must be at least the network cutoff {}",
            from.dim(),
            to.dim()
        )));
    }
    let inputs = network::relation_inputs(from, d)?;
    let full = DMatrix::from_fn(from.total_dim(), d, |r, c| v.matrix()[(r, inputs[c])]);
    project_rows(&full, from, to)
}

fn relation_cost(columns: &DMatrix<C64>, targets: &DMatrix<C64>) -> Result<f64> {
    if columns.shape() != targets.shape() || columns.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: targets.ncols(),
            found: columns.ncols(),
        });
    }
    let d = columns.ncols() as f64;
    Ok((0..columns.ncols())
        .map(|c| (targets.column(c).dotc(&columns.column(c)) - 1.0).norm())
        .sum::<f64>()
        / d)
}

/// `(1/d) sum_i |<in_i|V^dagger U|in_i> - 1|` for network columns `U|in_i>`.
pub fn gate_synth_cost(columns: &DMatrix<C64>, v: &FockOperator, d: usize, cutoff: CutoffConfig) -> Result<f64> {
    if columns.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: columns.ncols(),
        });
    }
    relation_cost(columns, &target_columns(v, d, cutoff)?)
}

/// `|(1/d) sum_i <v_i|u_i>|^2` over matching columns.
pub fn process_fidelity_columns(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64> {
    if u.shape() != v.shape() || u.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: v.ncols(),
            found: u.ncols(),
        });
    }
    let d = u.ncols() as f64;
    let tr: C64 = (0..u.ncols()).map(|c| v.column(c).dotc(&u.column(c))).sum();
    Ok((tr / d).norm_sqr())
}

/// Process fidelity of `U` against `V` on the first `d` relation inputs.
pub fn process_fidelity(u: &FockOperator, v: &FockOperator, d: usize) -> Result<f64> {
    let cutoff = u.cutoff();
    process_fidelity_columns(&target_columns(u, d, cutoff)?, &target_columns(v, d, cutoff)?)
}

/// `(F d + 1) / (d + 1)`.
pub fn average_fidelity(process: f64, d: usize) -> f64 {
    let d = d as f64;
    (process * d + 1.0) / (d + 1.0)
}

/// Monte-Carlo average fidelity `(1/N) sum |<w_i|V^dagger U|w_i>|^2` over Haar
/// random `w_i` in the span of the relation inputs; returns the mean and its
/// standard error. Sample `i` uses stream `i` of `seed`, so the result does
/// not depend on thread scheduling.
pub fn mc_average_fidelity_columns(
    u: &DMatrix<C64>,
    v: &DMatrix<C64>,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if u.shape() != v.shape() || u.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: v.ncols(),
            found: u.ncols(),
        });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let d = u.ncols();
    let m = v.adjoint() * u;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = nalgebra::DVector::from_vec(random::haar_vector(d, &mut random::seeded_stream(seed, i)));
            w.dotc(&(&m * &w)).norm_sqr()
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if samples > 1 {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Operator form of [`mc_average_fidelity_columns`].
pub fn mc_average_fidelity(u: &FockOperator, v: &FockOperator, d: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let cutoff = u.cutoff();
    mc_average_fidelity_columns(&target_columns(u, d, cutoff)?, &target_columns(v, d, cutoff)?, samples, seed)
}

/// `weight * sum(active^2)` over squeezing, displacement and Kerr parameters.
pub fn parameter_penalty(params: &NetworkParams, weight: f64) -> f64 {
    penalty_terms(&params.to_flat(), params.modes, weight, None)
}

fn penalty_terms(flat: &[f64], modes: usize, weight: f64, grad: Option<&mut [f64]>) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let roles = layer_roles(modes);
    let per = params_per_layer(modes);
    let mut total = 0.0;
    let mut grad = grad;
    for (k, x) in flat.iter().enumerate() {
        if roles[k % per].is_active() {
            total += x * x;
            if let Some(g) = grad.as_deref_mut() {
                g[k] += 2.0 * weight * x;
            }
        }
    }
    weight * total
}

/// Fidelity figures for a trained circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Training cost including any penalty.
    pub cost: f64,
    pub fidelity: f64,
    pub kind: FidelityKind,
    /// Standard error of a sampled fidelity.
    pub std_error: Option<f64>,
    pub process_fidelity: Option<f64>,
    pub magnitudes: GateMagnitudes,
}

/// A target resolved at a network cutoff, ready for training.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    target: TargetSpec,
    mode: TaskMode,
    cutoff: CutoffConfig,
    relations: usize,
    penalty_weight: f64,
    inputs: Vec<usize>,
    targets: DMatrix<C64>,
    leakage: CutoffReport,
    allow_leaky: bool,
    mc_samples: usize,
    mc_seed: u64,
}

impl ObjectiveSpec {
    /// Resolves `target` at `dim` levels per mode with `relations`
    /// input-output relations (1 for states). Leakage is measured against a
    /// reference built [`REFERENCE_PADDING`] levels higher.
    pub fn new(target: TargetSpec, dim: usize, relations: usize, penalty_weight: f64) -> Result<Self> {
        target.validate()?;
        if !(penalty_weight >= 0.0 && penalty_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("penalty weight {penalty_weight} must be >= 0")));
        }
        let cutoff = CutoffConfig::new(dim, target.modes())?;
        let mode = if target.is_gate() {
            TaskMode::GateSynth
        } else {
            TaskMode::StatePrep
        };
        if mode == TaskMode::StatePrep && relations != 1 {
            return Err(Error::InvalidParameter(format!(
                "state preparation has one relation, got {relations}"
            )));
        }
        let inputs = network::relation_inputs(cutoff, relations)?;
        let (targets, leakage) = match mode {
            TaskMode::StatePrep => {
                let state = target.state(dim)?;
                let leakage = cutoff_check(&target.state(dim + REFERENCE_PADDING)?, dim, CUTOFF_EPSILON)?;
                (DMatrix::from_column_slice(cutoff.total_dim(), 1, state.amplitudes().as_slice()), leakage)
            }
            TaskMode::GateSynth => {
                let v = target.gate(dim + REFERENCE_PADDING)?;
                let leakage = gate_leakage_at(&v, relations, dim)?;
                (target_columns(&v, relations, cutoff)?, leakage)
            }
        };
        Ok(Self {
            target,
            mode,
            cutoff,
            relations,
            penalty_weight,
            inputs,
            targets,
            leakage,
            allow_leaky: false,
            mc_samples: MC_SAMPLES,
            mc_seed: 0,
        })
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn mode(&self) -> TaskMode {
        self.mode
    }

    pub fn cutoff(&self) -> CutoffConfig {
        self.cutoff
    }

    pub fn relations(&self) -> usize {
        self.relations
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    /// Basis inputs of the relations.
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    /// Target output per relation, one column each, at the network cutoff.
    pub fn target_columns(&self) -> &DMatrix<C64> {
        &self.targets
    }

    pub fn leakage(&self) -> &CutoffReport {
        &self.leakage
    }

    /// Smallest cutoff meeting the leakage bound, widening the reference
    /// space until one is found.
    pub fn smallest_passing_cutoff(&self) -> Result<usize> {
        if let Some(d) = self.leakage.smallest {
            return Ok(d);
        }
        let mut reference = self.leakage.reference_dim;
        while reference < MAX_REFERENCE_DIM {
            reference = (reference * 2).min(MAX_REFERENCE_DIM);
            let report = match self.mode {
                TaskMode::StatePrep => cutoff_check(&self.target.state(reference)?, self.cutoff.dim(), CUTOFF_EPSILON)?,
                TaskMode::GateSynth => gate_leakage_at(&self.target.gate(reference)?, self.relations, self.cutoff.dim())?,
            };
            if let Some(d) = report.smallest {
                return Ok(d);
            }
        }
        Err(Error::InsufficientCutoff {
            dim: MAX_REFERENCE_DIM,
            what: format!("{} within the leakage bound", self.target.name()),
        })
    }

    /// Lets training proceed even when the cutoff leaks; the leakage report
    /// still records the margin.
    pub fn allow_leaky(mut self) -> Self {
        self.allow_leaky = true;
        self
    }

    /// Sample count and seed of the Monte-Carlo fidelity estimate.
    pub fn with_monte_carlo(mut self, samples: usize, seed: u64) -> Self {
        self.mc_samples = samples;
        self.mc_seed = seed;
        self
    }

    pub fn is_leaky_allowed(&self) -> bool {
        self.allow_leaky
    }

    /// Fails with the smallest passing cutoff when the network cutoff leaks,
    /// unless leaking was explicitly allowed.
    pub fn require_cutoff(&self) -> Result<()> {
        if self.leakage.passes || self.allow_leaky {
            return Ok(());
        }
        Err(Error::LeakyCutoff {
            dim: self.cutoff.dim(),
            retained: self.leakage.retained,
            required: self.leakage.required,
            smallest: self.smallest_passing_cutoff()?,
        })
    }

    fn check_sim(&self, sim: &Simulator) -> Result<()> {
        if sim.cutoff() != self.cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff.total_dim(),
                found: sim.cutoff().total_dim(),
            });
        }
        Ok(())
    }

    /// Training cost (relation cost plus penalty) and its gradient.
    pub fn cost_and_gradient(&self, sim: &Simulator, flat: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_sim(sim)?;
        let (cost, mut grad) = sim.cost_and_gradient(flat, &self.inputs, &self.targets)?;
        let penalty = penalty_terms(flat, self.cutoff.modes(), self.penalty_weight, Some(&mut grad));
        Ok((cost + penalty, grad))
    }

    /// Training cost without the gradient.
    pub fn cost(&self, sim: &Simulator, flat: &[f64]) -> Result<f64> {
        self.check_sim(sim)?;
        let cols = network::columns_with(sim, flat, &self.inputs)?;
        Ok(relation_cost(&cols, &self.targets)? + penalty_terms(flat, self.cutoff.modes(), self.penalty_weight, None))
    }

    /// Cost and headline fidelity of `params`. Gates that leave the span of
    /// their inputs are scored by sampling Haar inputs.
    pub fn report(&self, params: &NetworkParams) -> Result<FidelityReport> {
        params.validate()?;
        let sim = Simulator::new(params.cutoff_config()?)?;
        self.check_sim(&sim)?;
        let flat = params.to_flat();
        let cols = network::columns_with(&sim, &flat, &self.inputs)?;
        let cost = relation_cost(&cols, &self.targets)? + penalty_terms(&flat, self.cutoff.modes(), self.penalty_weight, None);
        let magnitudes = params.magnitudes();
        let report = match self.mode {
            TaskMode::StatePrep => {
                let z = self.targets.column(0).dotc(&cols.column(0));
                FidelityReport {
                    cost,
                    fidelity: z.norm_sqr(),
                    kind: FidelityKind::State,
                    std_error: None,
                    process_fidelity: None,
                    magnitudes,
                }
            }
            TaskMode::GateSynth => {
                let process = process_fidelity_columns(&cols, &self.targets)?;
                if self.target.is_block_preserving() {
                    FidelityReport {
                        cost,
                        fidelity: average_fidelity(process, self.relations),
                        kind: FidelityKind::AverageFromProcess,
                        std_error: None,
                        process_fidelity: Some(process),
                        magnitudes,
                    }
                } else {
                    let (mean, se) = mc_average_fidelity_columns(&cols, &self.targets, self.mc_samples, self.mc_seed)?;
                    FidelityReport {
                        cost,
                        fidelity: mean,
                        kind: FidelityKind::MonteCarloAverage,
                        std_error: Some(se),
                        process_fidelity: Some(process),
                        magnitudes,
                    }
                }
            }
        };
        Ok(report)
    }
}

fn gate_leakage_at(v: &FockOperator, d: usize, dim: usize) -> Result<CutoffReport> {
    let reference = v.cutoff();
    let cols = network::relation_inputs(reference, d)?
        .into_iter()
        .map(|i| v.column(i))
        .collect::<Result<Vec<_>>>()?;
    check_columns(&cols.iter().collect::<Vec<_>>(), dim, CUTOFF_EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::network::{init_params, DEFAULT_PHASE_RANGE};
    use crate::targets;

    fn single(dim: usize) -> CutoffConfig {
        CutoffConfig::single(dim).unwrap()
    }

    #[test]
    fn state_costs() {
        let t = targets::coherent(C64::new(0.4, 0.1), 10).unwrap();
        assert!(state_prep_cost(&t, &t).unwrap() < 1e-15);
        let zero = FockVector::vacuum(single(4));
        let one = FockVector::basis(1, single(4)).unwrap();
        assert!((state_prep_cost(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        let rotated = FockVector::new(t.amplitudes() * C64::new(0.0, 1.0), t.cutoff()).unwrap();
        assert!((state_prep_cost(&rotated, &t).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((state_fidelity(&rotated, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!(state_fidelity(&zero, &one).unwrap() == 0.0);
        let c = targets::coherent(C64::new(0.3, 0.0), 30).unwrap();
        let vac = FockVector::vacuum(single(30));
        assert!((state_fidelity(&c, &vac).unwrap() - (-0.09f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gate_costs() {
        let dim = 6;
        let v = targets::haar_gate(4, 3, dim).unwrap();
        let cols = target_columns(&v, 4, single(dim)).unwrap();
        assert!(gate_synth_cost(&cols, &v, 4, single(dim)).unwrap() < 1e-14);
        let phi = 0.7;
        let mut diag = vec![C64::new(1.0, 0.0); dim];
        diag[1] = C64::from_polar(1.0, phi);
        let p = FockOperator::from_diagonal(&diag, single(dim), true).unwrap();
        let u = v.compose(&p).unwrap();
        let ucols = target_columns(&u, 4, single(dim)).unwrap();
        let cost = gate_synth_cost(&ucols, &v, 4, single(dim)).unwrap();
        assert!((cost - (C64::from_polar(1.0, phi) - 1.0).norm() / 4.0).abs() < 1e-12);
        // d = 1 reduces to the state cost against V|0>.
        let col0 = FockVector::from_slice(ucols.column(0).as_slice(), single(dim)).unwrap();
        let t0 = v.column(0).unwrap();
        let c1 = gate_synth_cost(&ucols.columns(0, 1).into_owned(), &v, 1, single(dim)).unwrap();
        assert!((c1 - state_prep_cost(&col0, &t0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn process_fidelity_values() {
        let dim = 5;
        let v = targets::haar_gate(3, 8, dim).unwrap();
        assert!((process_fidelity(&v, &v, 3).unwrap() - 1.0).abs() < 1e-12);
        let phased = FockOperator::new(v.matrix() * C64::from_polar(1.0, 1.1), v.cutoff()).unwrap();
        assert!((process_fidelity(&phased, &v, 3).unwrap() - 1.0).abs() < 1e-12);
        let mut diag = vec![C64::new(1.0, 0.0); dim];
        diag[1] = C64::new(-1.0, 0.0);
        let z = FockOperator::from_diagonal(&diag, single(dim), true).unwrap();
        assert!(process_fidelity(&z, &FockOperator::identity(single(dim)), 2).unwrap() < 1e-30);
        assert_eq!(average_fidelity(1.0, 7), 1.0);
        assert_eq!(average_fidelity(0.0, 1), 0.5);
        let mut last = 0.0;
        for k in 0..=10 {
            let f = average_fidelity(k as f64 / 10.0, 25);
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn mc_agrees_with_process_relation() {
        let dim = 7;
        let d = 5;
        let v = targets::haar_gate(d, 1, dim).unwrap();
        let u = targets::haar_gate(d, 1, dim)
            .unwrap()
            .compose(&gates::rotation(0.3, dim).unwrap())
            .unwrap();
        let exact = average_fidelity(process_fidelity(&u, &v, d).unwrap(), d);
        let (mean, se) = mc_average_fidelity(&u, &v, d, 10_000, 5).unwrap();
        assert!((mean - exact).abs() < 3.0 * se, "mc {mean} +- {se} vs {exact}");
        let again = mc_average_fidelity(&u, &v, d, 10_000, 5).unwrap();
        assert_eq!((mean, se), again);
        let (same, zero) = mc_average_fidelity(&v, &v, d, 200, 1).unwrap();
        assert!((same - 1.0).abs() < 1e-12 && zero < 1e-12);
    }

    #[test]
    fn mc_error_scales_as_inverse_sqrt() {
        let dim = 6;
        let d = 4;
        let v = targets::haar_gate(d, 2, dim).unwrap();
        let u = targets::haar_gate(d, 3, dim).unwrap();
        let pts: Vec<(f64, f64)> = [100usize, 1000, 10_000]
            .iter()
            .map(|&n| {
                let (_, se) = mc_average_fidelity(&u, &v, d, n, 9).unwrap();
                ((n as f64).ln(), se.ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn cutoff_checks() {
        let f3 = targets::fock(3, 26).unwrap();
        let r = cutoff_check(&f3, 6, CUTOFF_EPSILON).unwrap();
        assert!(r.passes && r.retained == 1.0 && r.smallest == Some(4));
        let c = targets::coherent(C64::new(3.0, 0.0), 24).unwrap();
        assert!(!cutoff_check(&c, 4, CUTOFF_EPSILON).unwrap().passes);
        assert!(cutoff_check(&c, 24, CUTOFF_EPSILON).is_err());
        let noon = targets::noon(3, 10).unwrap();
        let r = cutoff_check(&noon, 4, CUTOFF_EPSILON).unwrap();
        assert!(r.passes && r.smallest == Some(4));
        assert!(!cutoff_check(&noon, 3, CUTOFF_EPSILON).unwrap().passes);
    }

    #[test]
    fn penalty_values() {
        let mut p = NetworkParams::zeros(2, 1, 4).unwrap();
        assert_eq!(parameter_penalty(&p, 3.0), 0.0);
        p.layers[1].r[0] = 0.5;
        assert!((parameter_penalty(&p, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(parameter_penalty(&p, 0.0), 0.0);
        p.layers[0].u1.final_rotations[0] = 3.0;
        assert!((parameter_penalty(&p, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_bad_shapes() {
        assert!(ObjectiveSpec::new(TargetSpec::SinglePhoton, 6, 2, 0.0).is_err());
        assert!(ObjectiveSpec::new(TargetSpec::SinglePhoton, 6, 1, -1.0).is_err());
        assert!(ObjectiveSpec::new(TargetSpec::CrossKerrGate { kappa: 0.1 }, 6, 3, 0.0).is_err());
        let leaky = ObjectiveSpec::new(TargetSpec::Coherent { alpha_re: 3.0, alpha_im: 0.0 }, 6, 1, 0.0).unwrap();
        assert!(!leaky.leakage().passes);
        match leaky.require_cutoff() {
            Err(Error::LeakyCutoff { smallest, .. }) => assert!(smallest > 6),
            other => panic!("expected leak error, got {other:?}"),
        }
    }

    /// Central differences of the training cost, compared against the adjoint
    /// gradient entry by entry.
    fn check_gradient(obj: &ObjectiveSpec, params: &NetworkParams) {
        let sim = Simulator::new(params.cutoff_config().unwrap()).unwrap();
        let flat = params.to_flat();
        let (cost, grad) = obj.cost_and_gradient(&sim, &flat).unwrap();
        assert!((cost - obj.cost(&sim, &flat).unwrap()).abs() < 1e-12);
        let h = 1e-5;
        let scale = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            plus[k] += h;
            let mut minus = flat.clone();
            minus[k] -= h;
            let fd = (obj.cost(&sim, &plus).unwrap() - obj.cost(&sim, &minus).unwrap()) / (2.0 * h);
            let err = (fd - grad[k]).abs() / scale.max(1e-12);
            assert!(err < 1e-4, "param {k} ({:?}): adjoint {} vs fd {fd}", params.roles()[k], grad[k]);
        }
    }

    #[test]
    fn adjoint_gradient_state_single_mode() {
        let obj = ObjectiveSpec::new(
            TargetSpec::OnState {
                a_re: 0.6,
                a_im: -0.3,
                n: 3,
            },
            8,
            1,
            0.0,
        )
        .unwrap();
        let params = init_params(3, 1, 8, 7, 0.3, DEFAULT_PHASE_RANGE).unwrap();
        check_gradient(&obj, &params);
    }

    #[test]
    fn adjoint_gradient_state_two_mode_with_penalty() {
        let obj = ObjectiveSpec::new(TargetSpec::Noon { n: 2 }, 4, 1, 0.3).unwrap();
        let params = init_params(2, 2, 4, 11, 0.3, DEFAULT_PHASE_RANGE).unwrap();
        check_gradient(&obj, &params);
    }

    #[test]
    fn adjoint_gradient_gate_single_mode() {
        let obj = ObjectiveSpec::new(TargetSpec::CubicPhaseGate { gamma: 0.05 }, 9, 4, 0.0).unwrap();
        let params = init_params(2, 1, 9, 3, 0.25, DEFAULT_PHASE_RANGE).unwrap();
        check_gradient(&obj, &params);
    }

    #[test]
    fn adjoint_gradient_gate_two_mode() {
        let obj = ObjectiveSpec::new(TargetSpec::CrossKerrGate { kappa: 0.3 }, 4, 4, 0.1).unwrap();
        let params = init_params(2, 2, 4, 5, 0.25, DEFAULT_PHASE_RANGE).unwrap();
        check_gradient(&obj, &params);
    }

    #[test]
    fn report_routes_fidelity_kind() {
        let p = init_params(1, 1, 8, 0, 0.001, DEFAULT_PHASE_RANGE).unwrap();
        let cubic = ObjectiveSpec::new(TargetSpec::CubicPhaseGate { gamma: 0.01 }, 8, 3, 0.0).unwrap();
        let r = cubic.with_monte_carlo(500, 1).report(&p).unwrap();
        assert_eq!(r.kind, FidelityKind::MonteCarloAverage);
        assert!(r.std_error.is_some());
        let qft = ObjectiveSpec::new(TargetSpec::QftGate { d: 3 }, 8, 3, 0.0).unwrap();
        assert_eq!(qft.report(&p).unwrap().kind, FidelityKind::AverageFromProcess);
        let st = ObjectiveSpec::new(TargetSpec::SinglePhoton, 8, 1, 0.0).unwrap();
        let r = st.report(&p).unwrap();
        assert_eq!(r.kind, FidelityKind::State);
        assert!(r.fidelity < 0.01 && r.fidelity >= 0.0);
        assert!((r.cost - st.cost(&Simulator::new(single(8)).unwrap(), &p.to_flat()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn self_target_has_unit_fidelity() {
        // A network whose target is its own unitary.
        let p = init_params(2, 1, 6, 4, 0.2, DEFAULT_PHASE_RANGE).unwrap();
        let cols = network::network_columns(&p, 6).unwrap();
        let u = FockOperator::new_unitary(cols, single(6)).unwrap();
        assert!((process_fidelity(&u, &u, 4).unwrap() - 1.0).abs() < 1e-12);
        let k = gates::cross_kerr(0.4, 5).unwrap();
        assert!((average_fidelity(process_fidelity(&k, &k, 9).unwrap(), 9) - 1.0).abs() < 1e-12);
    }
}
