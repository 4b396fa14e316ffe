//! Target states and target gates.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CutoffConfig, FockOperator, FockVector};
use crate::gates;
use crate::random;
use crate::C64;

/// Declarative target, as it appears in a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    SinglePhoton,
    #[serde(rename = "fock_n")]
    Fock {
        n: usize,
    },
    Coherent {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    OnState {
        a_re: f64,
        #[serde(default)]
        a_im: f64,
        n: usize,
    },
    HexGkp {
        mu: usize,
        d_code: usize,
        delta: f64,
    },
    RandomState {
        d: usize,
        seed: u64,
    },
    Noon {
        n: usize,
    },
    CubicPhaseGate {
        gamma: f64,
    },
    QftGate {
        d: usize,
    },
    HaarGate {
        d: usize,
        seed: u64,
    },
    CrossKerrGate {
        kappa: f64,
    },
}

impl TargetSpec {
    pub fn is_gate(&self) -> bool {
        matches!(
            self,
            TargetSpec::CubicPhaseGate { .. }
                | TargetSpec::QftGate { .. }
                | TargetSpec::HaarGate { .. }
                | TargetSpec::CrossKerrGate { .. }
        )
    }

    /// Number of modes the target lives on.
    pub fn modes(&self) -> usize {
        match self {
            TargetSpec::Noon { .. } | TargetSpec::CrossKerrGate { .. } => 2,
            _ => 1,
        }
    }

    /// Whether a gate target maps the span of its relation inputs onto itself,
    /// so that the process-fidelity relation applies.
    pub fn is_block_preserving(&self) -> bool {
        !matches!(self, TargetSpec::CubicPhaseGate { .. })
    }

    /// Checks parameter ranges that do not depend on the cutoff.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            TargetSpec::Coherent { alpha_re, alpha_im } if !(alpha_re.is_finite() && alpha_im.is_finite()) => {
                bad("coherent amplitude must be finite".into())
            }
            TargetSpec::OnState { a_re, a_im, n } => {
                if !(a_re.is_finite() && a_im.is_finite()) {
                    bad("ON-state coefficient must be finite".into())
                } else if n == 0 {
                    bad("ON-state photon number must be >= 1".into())
                } else {
                    Ok(())
                }
            }
            TargetSpec::HexGkp { mu, d_code, delta } => {
                if d_code == 0 || mu >= d_code {
                    bad(format!("GKP needs 0 <= mu < d_code, got mu={mu}, d_code={d_code}"))
                } else if !(delta > 0.0 && delta.is_finite()) {
                    bad(format!("GKP envelope delta must be positive, got {delta}"))
                } else {
                    Ok(())
                }
            }
            TargetSpec::RandomState { d: 0, .. } | TargetSpec::QftGate { d: 0 } | TargetSpec::HaarGate { d: 0, .. } => {
                bad("subspace dimension must be >= 1".into())
            }
            TargetSpec::Noon { n: 0 } => bad("NOON photon number must be >= 1".into()),
            TargetSpec::CubicPhaseGate { gamma } if !gamma.is_finite() => bad("gamma must be finite".into()),
            TargetSpec::CrossKerrGate { kappa } if !kappa.is_finite() => bad("kappa must be finite".into()),
            _ => Ok(()),
        }
    }

    /// The target state at cutoff `dim` (per mode).
    pub fn state(&self, dim: usize) -> Result<FockVector> {
        self.validate()?;
        match *self {
            TargetSpec::SinglePhoton => single_photon(dim),
            TargetSpec::Fock { n } => fock(n, dim),
            TargetSpec::Coherent { alpha_re, alpha_im } => coherent(C64::new(alpha_re, alpha_im), dim),
            TargetSpec::OnState { a_re, a_im, n } => on_state(C64::new(a_re, a_im), n, dim),
            TargetSpec::HexGkp { mu, d_code, delta } => hex_gkp(mu, d_code, delta, dim).map(|(s, _)| s),
            TargetSpec::RandomState { d, seed } => random_state(d, seed, dim),
            TargetSpec::Noon { n } => noon(n, dim),
            _ => Err(Error::InvalidParameter(format!("{} is a gate, not a state", self.name()))),
        }
    }

    /// The target unitary at cutoff `dim` (per mode).
    pub fn gate(&self, dim: usize) -> Result<FockOperator> {
        self.validate()?;
        match *self {
            TargetSpec::CubicPhaseGate { gamma } => cubic_phase_gate(gamma, dim),
            TargetSpec::QftGate { d } => qft_gate(d, dim),
            TargetSpec::HaarGate { d, seed } => haar_gate(d, seed, dim),
            TargetSpec::CrossKerrGate { kappa } => cross_kerr_gate(kappa, dim),
            _ => Err(Error::InvalidParameter(format!("{} is a state, not a gate", self.name()))),
        }
    }

    /// The configuration `kind` string.
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::SinglePhoton => "single_photon",
            TargetSpec::Fock { .. } => "fock_n",
            TargetSpec::Coherent { .. } => "coherent",
            TargetSpec::OnState { .. } => "on_state",
            TargetSpec::HexGkp { .. } => "hex_gkp",
            TargetSpec::RandomState { .. } => "random_state",
            TargetSpec::Noon { .. } => "noon",
            TargetSpec::CubicPhaseGate { .. } => "cubic_phase_gate",
            TargetSpec::QftGate { .. } => "qft_gate",
            TargetSpec::HaarGate { .. } => "haar_gate",
            TargetSpec::CrossKerrGate { .. } => "cross_kerr_gate",
        }
    }
}

fn need(dim: usize, required: usize, what: impl FnOnce() -> String) -> Result<()> {
    if dim < required {
        Err(Error::InsufficientCutoff { dim, what: what() })
    } else {
        Ok(())
    }
}

/// Fock state `|n>`.
pub fn fock(n: usize, dim: usize) -> Result<FockVector> {
    let cutoff = CutoffConfig::single(dim)?;
    need(dim, n + 1, || format!("Fock state |{n}>"))?;
    FockVector::basis(n, cutoff)
}

/// `|1>`.
pub fn single_photon(dim: usize) -> Result<FockVector> {
    fock(1, dim)
}

/// `(|0> + a|N>) / sqrt(1 + |a|^2)`.
pub fn on_state(a: C64, n: usize, dim: usize) -> Result<FockVector> {
    let cutoff = CutoffConfig::single(dim)?;
    if n == 0 {
        return Err(Error::InvalidParameter("ON-state photon number must be >= 1".into()));
    }
    need(dim, n + 1, || format!("ON state with N={n}"))?;
    let mut amps = vec![C64::default(); dim];
    let norm = (1.0 + a.norm_sqr()).sqrt();
    amps[0] = C64::new(1.0 / norm, 0.0);
    amps[n] = a / norm;
    FockVector::from_slice(&amps, cutoff)
}

/// `(|N,0> + |0,N>) / sqrt(2)` on two modes.
pub fn noon(n: usize, dim: usize) -> Result<FockVector> {
    let cutoff = CutoffConfig::new(dim, 2)?;
    if n == 0 {
        return Err(Error::InvalidParameter("NOON photon number must be >= 1".into()));
    }
    need(dim, n + 1, || format!("NOON state with N={n}"))?;
    let mut amps = vec![C64::default(); cutoff.total_dim()];
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[n * dim] = h;
    amps[n] = h;
    FockVector::from_slice(&amps, cutoff)
}

/// Amplitudes `<n|gamma>` for `n < dim`, each multiplied by `damping^n`.
///
/// Evaluated in log space so that large `|gamma|` underflows cleanly to zero.
fn coherent_amplitudes(gamma: C64, damping: f64, dim: usize) -> Vec<C64> {
    let mut amps = vec![C64::default(); dim];
    let r2 = gamma.norm_sqr();
    if r2 == 0.0 {
        amps[0] = C64::new(1.0, 0.0);
        return amps;
    }
    let log_r = gamma.norm().ln() + damping.ln();
    let arg = gamma.arg();
    let mut log_fact = 0.0;
    for (n, amp) in amps.iter_mut().enumerate() {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let log_mag = -0.5 * r2 + n as f64 * log_r - 0.5 * log_fact;
        *amp = C64::from_polar(log_mag.exp(), n as f64 * arg);
    }
    amps
}

/// Coherent state `|alpha>` truncated to `dim` and renormalised.
pub fn coherent(alpha: C64, dim: usize) -> Result<FockVector> {
    let cutoff = CutoffConfig::single(dim)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("coherent amplitude".into()));
    }
    FockVector::from_slice(&coherent_amplitudes(alpha, 1.0, dim), cutoff)?.normalized()
}

/// How the GKP lattice sum was truncated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpCertificate {
    /// Lattice radius `L`: both indices range over `[-L, L]`.
    pub radius: usize,
    /// Norm of the ring at radius `L + 1` relative to the norm of the sum.
    pub tail: f64,
}

/// Relative size of the next lattice ring below which the sum is accepted.
pub const GKP_TAIL_TOL: f64 = 1e-10;
const GKP_MAX_RADIUS: usize = 400;

/// Hexagonal GKP code state `mu` of a `d_code`-dimensional code with
/// envelope `exp(-delta^2 n)`, together with its truncation certificate.
///
/// Each lattice term is `D(beta1) D(beta2)|0>` with
/// `beta1 = -i c (d n1 + mu) e^{i pi/3}`, `beta2 = i c n2` and
/// `c = sqrt(4 pi / (sqrt(3) d))`, merged into one coherent state with phase
/// `exp(i Im(beta1 conj(beta2)))`.
pub fn hex_gkp(mu: usize, d_code: usize, delta: f64, dim: usize) -> Result<(FockVector, GkpCertificate)> {
    TargetSpec::HexGkp { mu, d_code, delta }.validate()?;
    let cutoff = CutoffConfig::single(dim)?;
    let mut sum = vec![C64::default(); dim];
    let add_ring = |radius: usize, into: &mut Vec<C64>| -> f64 {
        let mut ring = vec![C64::default(); dim];
        for (n1, n2) in ring_points(radius as i64) {
            add_gkp_term(mu, d_code, delta, n1, n2, &mut ring);
        }
        let norm = ring.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (s, r) in into.iter_mut().zip(&ring) {
            *s += r;
        }
        norm
    };
    add_ring(0, &mut sum);
    let mut radius = 0;
    loop {
        radius += 1;
        add_ring(radius, &mut sum);
        let mut next = vec![C64::default(); dim];
        let ring = add_ring(radius + 1, &mut next);
        let total = sum.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = ring / total;
        if tail < GKP_TAIL_TOL {
            let state = FockVector::from_slice(&sum, cutoff)?.normalized()?;
            return Ok((state, GkpCertificate { radius, tail }));
        }
        if radius >= GKP_MAX_RADIUS {
            return Err(Error::NonConvergent { radius, tail });
        }
    }
}

/// GKP lattice sum at a fixed radius, without the convergence test.
pub fn hex_gkp_at_radius(mu: usize, d_code: usize, delta: f64, dim: usize, radius: usize) -> Result<FockVector> {
    TargetSpec::HexGkp { mu, d_code, delta }.validate()?;
    let cutoff = CutoffConfig::single(dim)?;
    let mut sum = vec![C64::default(); dim];
    let r = radius as i64;
    for n1 in -r..=r {
        for n2 in -r..=r {
            add_gkp_term(mu, d_code, delta, n1, n2, &mut sum);
        }
    }
    FockVector::from_slice(&sum, cutoff)?.normalized()
}

fn ring_points(radius: i64) -> Vec<(i64, i64)> {
    if radius == 0 {
        return vec![(0, 0)];
    }
    let mut pts = Vec::with_capacity(8 * radius as usize);
    for k in -radius..=radius {
        pts.push((k, radius));
        pts.push((k, -radius));
    }
    for k in -radius + 1..radius {
        pts.push((radius, k));
        pts.push((-radius, k));
    }
    pts
}

fn add_gkp_term(mu: usize, d_code: usize, delta: f64, n1: i64, n2: i64, out: &mut [C64]) {
    let d = d_code as f64;
    let c = (4.0 * PI / (3f64.sqrt() * d)).sqrt();
    let t1 = c * (d * n1 as f64 + mu as f64);
    let beta1 = C64::new(0.0, -t1) * C64::from_polar(1.0, PI / 3.0);
    let beta2 = C64::new(0.0, c * n2 as f64);
    let phase = C64::from_polar(1.0, (beta1 * beta2.conj()).im);
    let amps = coherent_amplitudes(beta1 + beta2, (-delta * delta).exp(), out.len());
    for (o, a) in out.iter_mut().zip(amps) {
        *o += phase * a;
    }
}

/// `sum_{n<d} (a_n + i b_n)|n>` normalised, with `a_0, b_0, a_1, b_1, ...`
/// drawn from a standard normal stream seeded by `seed`.
pub fn random_state(d: usize, seed: u64, dim: usize) -> Result<FockVector> {
    let cutoff = CutoffConfig::single(dim)?;
    if d == 0 {
        return Err(Error::InvalidParameter("random state needs d >= 1".into()));
    }
    need(dim, d, || format!("random state on {d} levels"))?;
    let mut rng = random::seeded(seed);
    let mut amps = vec![C64::default(); dim];
    for amp in amps.iter_mut().take(d) {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        *amp = C64::new(a, b);
    }
    FockVector::from_slice(&amps, cutoff)?.normalized()
}

/// Equal superposition of the first `d` relation inputs: `sum_i |i> / sqrt(d)`
/// on one mode, `sum_ij |i, j> / sqrt(d)` on two.
pub fn equal_superposition(d: usize, cutoff: CutoffConfig) -> Result<FockVector> {
    let mut amps = vec![C64::default(); cutoff.total_dim()];
    for i in crate::network::relation_inputs(cutoff, d)? {
        amps[i] = C64::new(1.0, 0.0);
    }
    FockVector::from_slice(&amps, cutoff)?.normalized()
}

fn embed_block(block: &DMatrix<C64>, dim: usize) -> Result<FockOperator> {
    let cutoff = CutoffConfig::single(dim)?;
    let d = block.nrows();
    need(dim, d, || format!("a {d}-dimensional gate block"))?;
    let mut m = DMatrix::identity(dim, dim);
    m.view_mut((0, 0), (d, d)).copy_from(block);
    FockOperator::new_unitary(m, cutoff)
}

/// Discrete Fourier transform `e^{2 pi i m n / d} / sqrt(d)` on `|0>..|d-1>`,
/// identity above.
pub fn qft_gate(d: usize, dim: usize) -> Result<FockOperator> {
    if d == 0 {
        return Err(Error::InvalidParameter("QFT needs d >= 1".into()));
    }
    let s = 1.0 / (d as f64).sqrt();
    let block = DMatrix::from_fn(d, d, |m, n| C64::from_polar(s, TAU * (m * n % d) as f64 / d as f64));
    embed_block(&block, dim)
}

/// Haar-random unitary on `|0>..|d-1>`, identity above.
pub fn haar_gate(d: usize, seed: u64, dim: usize) -> Result<FockOperator> {
    if d == 0 {
        return Err(Error::InvalidParameter("Haar gate needs d >= 1".into()));
    }
    need(dim, d, || format!("a {d}-dimensional gate block"))?;
    embed_block(&random::haar_unitary(d, &mut random::seeded(seed)), dim)
}

/// `exp(-i gamma x^3)`.
pub fn cubic_phase_gate(gamma: f64, dim: usize) -> Result<FockOperator> {
    gates::cubic_phase(gamma, dim)
}

/// `exp(-i kappa n1 n2)`.
pub fn cross_kerr_gate(kappa: f64, dim: usize) -> Result<FockOperator> {
    gates::cross_kerr(kappa, dim)
}
