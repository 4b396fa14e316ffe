//! The layered continuous-variable network `Kerr . D . U2 . S . U1`.

mod params;
mod sim;

pub use params::{
    beamsplitter_count, init_params, layer_roles, params_per_layer, GateMagnitudes, Interferometer,
    LayerParams, NetworkParams, ParamRole, DEFAULT_ACTIVE_STD, DEFAULT_PHASE_RANGE,
};
pub use sim::{Simulator, KINK_TOL};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{CutoffConfig, FockVector};
use crate::objective::ObjectiveSpec;
use crate::C64;

/// Applies one layer to `state`.
pub fn apply_layer(state: &FockVector, layer: &LayerParams) -> Result<FockVector> {
    let cutoff = state.cutoff();
    let params = NetworkParams {
        modes: cutoff.modes(),
        cutoff: cutoff.dim(),
        layers: vec![layer.clone()],
    };
    apply_network(&params, state)
}

/// Applies the full network to `state`.
pub fn apply_network(params: &NetworkParams, state: &FockVector) -> Result<FockVector> {
    params.validate()?;
    let cutoff = params.cutoff_config()?;
    if cutoff != state.cutoff() {
        return Err(Error::DimensionMismatch {
            expected: cutoff.total_dim(),
            found: state.cutoff().total_dim(),
        });
    }
    let sim = Simulator::new(cutoff)?;
    let out = sim.propagate(&params.to_flat(), state.amplitudes().iter().copied().collect())?;
    FockVector::from_slice(&out, cutoff)
}

/// Flat input indices of `d` input-output relations.
///
/// One mode: `|0>, ..., |d-1>`. Two modes: `d` must be a square `k^2`, and the
/// inputs are `|i, j>` for `i, j < k` in lexicographic order.
pub fn relation_inputs(cutoff: CutoffConfig, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::InvalidParameter("need at least one relation".into()));
    }
    match cutoff.modes() {
        1 => {
            if d > cutoff.dim() {
                return Err(Error::InsufficientCutoff {
                    dim: cutoff.dim(),
                    what: format!("{d} relations"),
                });
            }
            Ok((0..d).collect())
        }
        _ => {
            let k = (d as f64).sqrt().round() as usize;
            if k * k != d {
                return Err(Error::InvalidParameter(format!(
                    "two-mode relation count {d} is not a square"
                )));
            }
            if k > cutoff.dim() {
                return Err(Error::InsufficientCutoff {
                    dim: cutoff.dim(),
                    what: format!("{k} relations per mode"),
                });
            }
            Ok((0..k)
                .flat_map(|i| (0..k).map(move |j| i * cutoff.dim() + j))
                .collect())
        }
    }
}

/// Network applied to each of the first `d` relation inputs; one column per input.
pub fn network_columns(params: &NetworkParams, d: usize) -> Result<DMatrix<C64>> {
    let cutoff = params.cutoff_config()?;
    network_columns_for(params, &relation_inputs(cutoff, d)?)
}

/// Network applied to the given basis inputs.
pub fn network_columns_for(params: &NetworkParams, inputs: &[usize]) -> Result<DMatrix<C64>> {
    params.validate()?;
    let sim = Simulator::new(params.cutoff_config()?)?;
    columns_with(&sim, &params.to_flat(), inputs)
}

pub(crate) fn columns_with(sim: &Simulator, flat: &[f64], inputs: &[usize]) -> Result<DMatrix<C64>> {
    let total = sim.cutoff().total_dim();
    let out = sim.propagate(flat, sim.basis_columns(inputs)?)?;
    Ok(DMatrix::from_column_slice(total, inputs.len(), &out))
}

/// Training cost and its gradient with respect to every flat parameter.
pub fn cost_and_gradient(params: &NetworkParams, objective: &ObjectiveSpec) -> Result<(f64, Vec<f64>)> {
    params.validate()?;
    let sim = Simulator::new(params.cutoff_config()?)?;
    objective.cost_and_gradient(&sim, &params.to_flat())
}
