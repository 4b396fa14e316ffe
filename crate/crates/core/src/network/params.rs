use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::CutoffConfig;

/// Default standard deviation of the photon-number-changing parameters at init.
pub const DEFAULT_ACTIVE_STD: f64 = 0.001;
/// Default width of the uniform distribution used for phases and beamsplitter angles.
pub const DEFAULT_PHASE_RANGE: f64 = std::f64::consts::TAU;

/// A Clements-style interferometer: one `(theta, phi)` pair per beamsplitter,
/// then one output rotation per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interferometer {
    pub bs_thetas: Vec<f64>,
    pub bs_phis: Vec<f64>,
    pub final_rotations: Vec<f64>,
}

impl Interferometer {
    fn zeros(modes: usize) -> Self {
        let n_bs = beamsplitter_count(modes);
        Self {
            bs_thetas: vec![0.0; n_bs],
            bs_phis: vec![0.0; n_bs],
            final_rotations: vec![0.0; modes],
        }
    }
}

/// Parameters of one layer `Kerr . D . U2 . S . U1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub u1: Interferometer,
    pub r: Vec<f64>,
    pub u2: Interferometer,
    pub alpha_re: Vec<f64>,
    pub alpha_im: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(modes: usize) -> Self {
        Self {
            u1: Interferometer::zeros(modes),
            r: vec![0.0; modes],
            u2: Interferometer::zeros(modes),
            alpha_re: vec![0.0; modes],
            alpha_im: vec![0.0; modes],
            kappa: vec![0.0; modes],
        }
    }

    fn blocks(&self) -> [&Vec<f64>; 10] {
        [
            &self.u1.bs_thetas,
            &self.u1.bs_phis,
            &self.u1.final_rotations,
            &self.r,
            &self.u2.bs_thetas,
            &self.u2.bs_phis,
            &self.u2.final_rotations,
            &self.alpha_re,
            &self.alpha_im,
            &self.kappa,
        ]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.u1.bs_thetas,
            &mut self.u1.bs_phis,
            &mut self.u1.final_rotations,
            &mut self.r,
            &mut self.u2.bs_thetas,
            &mut self.u2.bs_phis,
            &mut self.u2.final_rotations,
            &mut self.alpha_re,
            &mut self.alpha_im,
            &mut self.kappa,
        ]
    }

    fn check_shape(&self, modes: usize) -> Result<()> {
        let n_bs = beamsplitter_count(modes);
        let expected = [n_bs, n_bs, modes, modes, n_bs, n_bs, modes, modes, modes, modes];
        for (block, want) in self.blocks().iter().zip(expected) {
            if block.len() != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    found: block.len(),
                });
            }
        }
        Ok(())
    }
}

/// What a flat parameter controls; decides how it is initialised and penalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    BeamsplitterAngle,
    Phase,
    Squeezing,
    DisplacementRe,
    DisplacementIm,
    Kerr,
}

impl ParamRole {
    /// Photon-number-changing parameters (squeezing, displacement, Kerr).
    pub fn is_active(self) -> bool {
        matches!(
            self,
            ParamRole::Squeezing | ParamRole::DisplacementRe | ParamRole::DisplacementIm | ParamRole::Kerr
        )
    }
}

pub fn beamsplitter_count(modes: usize) -> usize {
    modes * (modes.saturating_sub(1)) / 2
}

/// Real parameters per layer: `2N^2 + 4N`.
pub fn params_per_layer(modes: usize) -> usize {
    2 * modes * modes + 4 * modes
}

/// Roles of one layer's flat parameters, in flat order.
pub fn layer_roles(modes: usize) -> Vec<ParamRole> {
    let n_bs = beamsplitter_count(modes);
    let mut roles = Vec::with_capacity(params_per_layer(modes));
    for (role, count) in [
        (ParamRole::BeamsplitterAngle, n_bs),
        (ParamRole::Phase, n_bs),
        (ParamRole::Phase, modes),
        (ParamRole::Squeezing, modes),
        (ParamRole::BeamsplitterAngle, n_bs),
        (ParamRole::Phase, n_bs),
        (ParamRole::Phase, modes),
        (ParamRole::DisplacementRe, modes),
        (ParamRole::DisplacementIm, modes),
        (ParamRole::Kerr, modes),
    ] {
        roles.extend(std::iter::repeat_n(role, count));
    }
    roles
}

/// The full parameter set of an `L`-layer network.
///
/// The flat view is layer-major; inside a layer the order is
/// `u1.bs_thetas, u1.bs_phis, u1.final_rotations, r, u2.bs_thetas, u2.bs_phis,
/// u2.final_rotations, alpha_re, alpha_im, kappa`, each block indexed by mode
/// (or by beamsplitter in mesh order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub modes: usize,
    pub cutoff: usize,
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    pub fn zeros(layers: usize, modes: usize, cutoff: usize) -> Result<Self> {
        CutoffConfig::new(cutoff, modes)?;
        Ok(Self {
            modes,
            cutoff,
            layers: vec![LayerParams::zeros(modes); layers],
        })
    }

    pub fn cutoff_config(&self) -> Result<CutoffConfig> {
        CutoffConfig::new(self.cutoff, self.modes)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers.len() * params_per_layer(self.modes)
    }

    pub fn validate(&self) -> Result<()> {
        self.cutoff_config()?;
        self.layers.iter().try_for_each(|l| l.check_shape(self.modes))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.blocks().into_iter().flatten().copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn from_flat(modes: usize, cutoff: usize, flat: &[f64]) -> Result<Self> {
        CutoffConfig::new(cutoff, modes)?;
        let per = params_per_layer(modes);
        if flat.len() % per != 0 {
            return Err(Error::DimensionMismatch {
                expected: per * (flat.len() / per + 1),
                found: flat.len(),
            });
        }
        let layers = flat
            .chunks(per)
            .map(|chunk| {
                let mut layer = LayerParams::zeros(modes);
                let mut values = chunk.iter().copied();
                for block in layer.blocks_mut() {
                    for v in block.iter_mut() {
                        *v = values.next().expect("chunk has per-layer length");
                    }
                }
                layer
            })
            .collect();
        Ok(Self {
            modes,
            cutoff,
            layers,
        })
    }

    /// Roles of every flat parameter.
    pub fn roles(&self) -> Vec<ParamRole> {
        let one = layer_roles(self.modes);
        (0..self.layers.len()).flat_map(|_| one.iter().copied()).collect()
    }

    /// Largest `|alpha|`, `|r|` and `|kappa|` in the circuit.
    pub fn magnitudes(&self) -> GateMagnitudes {
        let mut m = GateMagnitudes::default();
        for layer in &self.layers {
            for (re, im) in layer.alpha_re.iter().zip(&layer.alpha_im) {
                m.displacement = m.displacement.max(re.hypot(*im));
            }
            for r in &layer.r {
                m.squeezing = m.squeezing.max(r.abs());
            }
            for k in &layer.kappa {
                m.kerr = m.kerr.max(k.abs());
            }
        }
        m
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GateMagnitudes {
    pub displacement: f64,
    pub squeezing: f64,
    pub kerr: f64,
}

/// Random initial parameters.
///
/// Active parameters are drawn from `Normal(0, active_std^2)`; beamsplitter
/// angles and phases from `Uniform[0, phase_range)`. Draws consume a
/// ChaCha20 stream seeded with `seed`, one value per flat parameter in flat order.
pub fn init_params(
    layers: usize,
    modes: usize,
    cutoff: usize,
    seed: u64,
    active_std: f64,
    phase_range: f64,
) -> Result<NetworkParams> {
    if layers == 0 {
        return Err(Error::InvalidParameter("network needs at least one layer".into()));
    }
    if !(active_std >= 0.0 && active_std.is_finite()) || !(phase_range >= 0.0 && phase_range.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bad init widths: active_std {active_std}, phase_range {phase_range}"
        )));
    }
    CutoffConfig::new(cutoff, modes)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, active_std).expect("validated std");
    let roles = layer_roles(modes);
    let flat: Vec<f64> = (0..layers)
        .flat_map(|_| roles.iter().copied())
        .map(|role| {
            if role.is_active() {
                normal.sample(&mut rng)
            } else {
                rng.random::<f64>() * phase_range
            }
        })
        .collect();
    NetworkParams::from_flat(modes, cutoff, &flat)
}
