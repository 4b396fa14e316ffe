#![allow(dead_code)]

use cvforge::network::{init_params, Simulator, DEFAULT_PHASE_RANGE};
use cvforge::objective::ObjectiveSpec;
use cvforge::targets::TargetSpec;

pub const FD_STEP: f64 = 1e-5;

/// Adjoint gradient against central differences, as
/// `max|g - fd| / max|fd|`.
pub fn gradient_error(obj: &ObjectiveSpec, flat: &[f64]) -> f64 {
    let sim = Simulator::new(obj.cutoff()).unwrap();
    let (_, grad) = obj.cost_and_gradient(&sim, flat).unwrap();
    let mut x = flat.to_vec();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..x.len() {
        let x0 = x[k];
        x[k] = x0 + FD_STEP;
        let up = obj.cost(&sim, &x).unwrap();
        x[k] = x0 - FD_STEP;
        let down = obj.cost(&sim, &x).unwrap();
        x[k] = x0;
        let fd = (up - down) / (2.0 * FD_STEP);
        worst = worst.max((grad[k] - fd).abs());
        scale = scale.max(fd.abs());
    }
    assert!(scale > 1e-6, "degenerate gradient");
    worst / scale
}

/// The i-th of a family of small random problems: even `i` are state
/// preparation, odd `i` gate synthesis, alternating one and two modes.
pub fn random_problem(i: u64) -> (ObjectiveSpec, Vec<f64>, String) {
    let modes = 1 + ((i / 2) % 2) as usize;
    let gate = i % 2 == 1;
    let (target, dim, relations) = match (modes, gate) {
        (1, false) => (TargetSpec::RandomState { d: 4, seed: i }, 8, 1),
        (1, true) => (TargetSpec::HaarGate { d: 3, seed: i }, 8, 3),
        (2, false) => (TargetSpec::Noon { n: 2 }, 4, 1),
        _ => (TargetSpec::CrossKerrGate { kappa: 0.3 }, 4, 4),
    };
    let layers = 1 + (i % 3) as usize;
    let penalty = if i % 5 == 0 { 0.01 } else { 0.0 };
    let label = format!("{} N={modes} D={dim} L={layers}", target.name());
    let obj = ObjectiveSpec::new(target, dim, relations, penalty).unwrap();
    let params = init_params(layers, modes, dim, 1000 + i, 0.3, DEFAULT_PHASE_RANGE).unwrap();
    (obj, params.to_flat(), label)
}
