//! Elementary gates as dense Fock-space operators.
//!
//! Exponential gates use truncated generators, see [`crate::fock`]. The
//! network simulator has its own spectral fast path; the constructors here are
//! the reference definitions it is tested against.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation_matrix, expm_antihermitian, expm_frechet, quadratures, CutoffConfig, FockOperator,
};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Rotation { phi: f64 },
    Displacement { re: f64, im: f64 },
    Squeezing { r: f64 },
    Beamsplitter { theta: f64, phi: f64 },
    Kerr { kappa: f64 },
    CrossKerr { kappa: f64 },
}

impl Gate {
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::Rotation { phi } => vec![phi],
            Gate::Displacement { re, im } => vec![re, im],
            Gate::Squeezing { r } => vec![r],
            Gate::Beamsplitter { theta, phi } => vec![theta, phi],
            Gate::Kerr { kappa } | Gate::CrossKerr { kappa } => vec![kappa],
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Gate::Beamsplitter { .. } | Gate::CrossKerr { .. } => 2,
            _ => 1,
        }
    }

    /// Same gate with parameter `which` replaced.
    pub fn with_param(&self, which: usize, value: f64) -> Result<Gate> {
        let mut p = self.params();
        if which >= p.len() {
            return Err(unknown_param(self, which));
        }
        p[which] = value;
        Ok(match self {
            Gate::Rotation { .. } => Gate::Rotation { phi: p[0] },
            Gate::Displacement { .. } => Gate::Displacement { re: p[0], im: p[1] },
            Gate::Squeezing { .. } => Gate::Squeezing { r: p[0] },
            Gate::Beamsplitter { .. } => Gate::Beamsplitter {
                theta: p[0],
                phi: p[1],
            },
            Gate::Kerr { .. } => Gate::Kerr { kappa: p[0] },
            Gate::CrossKerr { .. } => Gate::CrossKerr { kappa: p[0] },
        })
    }

    pub fn operator(&self, dim: usize) -> Result<FockOperator> {
        check_finite(&self.params())?;
        match *self {
            Gate::Rotation { phi } => rotation(phi, dim),
            Gate::Displacement { re, im } => displacement(re, im, dim),
            Gate::Squeezing { r } => squeezing(r, dim),
            Gate::Beamsplitter { theta, phi } => beamsplitter(theta, phi, dim),
            Gate::Kerr { kappa } => kerr(kappa, dim),
            Gate::CrossKerr { kappa } => cross_kerr(kappa, dim),
        }
    }
}

fn unknown_param(gate: &Gate, which: usize) -> Error {
    Error::InvalidParameter(format!("{gate:?} has no parameter index {which}"))
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("gate parameter {v} is not finite")));
    }
    Ok(())
}

fn diagonal_gate(dim: usize, modes: usize, phase: impl Fn(&[usize]) -> f64) -> Result<FockOperator> {
    let cutoff = CutoffConfig::new(dim, modes)?;
    let diag: Vec<C64> = (0..cutoff.total_dim())
        .map(|k| C64::from_polar(1.0, phase(&cutoff.occupations(k))))
        .collect();
    FockOperator::from_diagonal(&diag, cutoff, true)
}

/// `R(phi) = exp(i phi n)`.
pub fn rotation(phi: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[phi])?;
    diagonal_gate(dim, 1, |n| phi * n[0] as f64)
}

/// `K(kappa) = exp(i kappa n^2)`.
pub fn kerr(kappa: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[kappa])?;
    diagonal_gate(dim, 1, |n| kappa * (n[0] * n[0]) as f64)
}

/// `V_CK(kappa) = exp(-i kappa n1 n2)` on two modes.
pub fn cross_kerr(kappa: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[kappa])?;
    diagonal_gate(dim, 2, |n| -kappa * (n[0] * n[1]) as f64)
}

/// `alpha a^dagger - alpha^* a` with `alpha = re + i im`.
pub(crate) fn displacement_generator(re: f64, im: f64, dim: usize) -> DMatrix<C64> {
    let a = annihilation_matrix(dim);
    let alpha = C64::new(re, im);
    a.adjoint() * alpha - a * alpha.conj()
}

/// `(a^2 - a^dagger^2) / 2`; the squeezing generator is `r` times this.
pub(crate) fn squeezing_direction(dim: usize) -> DMatrix<C64> {
    let a = annihilation_matrix(dim);
    let a2 = &a * &a;
    (&a2 - a2.adjoint()) * C64::new(0.5, 0.0)
}

/// `a1^dagger a2` on the two-mode space.
pub(crate) fn hopping(dim: usize) -> DMatrix<C64> {
    let a = annihilation_matrix(dim);
    a.adjoint().kronecker(&a)
}

fn beamsplitter_generator(theta: f64, phi: f64, dim: usize) -> DMatrix<C64> {
    let hop = hopping(dim);
    let e = C64::from_polar(1.0, phi);
    (&hop * e - hop.adjoint() * e.conj()) * C64::new(theta, 0.0)
}

/// `D(alpha) = exp(alpha a^dagger - alpha^* a)` with truncated ladder operators.
pub fn displacement(re: f64, im: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[re, im])?;
    let cutoff = CutoffConfig::single(dim)?;
    expm_antihermitian(&FockOperator::new(displacement_generator(re, im, dim), cutoff)?)
}

/// `S(r) = exp(r/2 (a^2 - a^dagger^2))`.
pub fn squeezing(r: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[r])?;
    let cutoff = CutoffConfig::single(dim)?;
    let m = squeezing_direction(dim) * C64::new(r, 0.0);
    expm_antihermitian(&FockOperator::new(m, cutoff)?)
}

/// `BS(theta, phi) = exp(theta (e^{i phi} a1^dagger a2 - e^{-i phi} a1 a2^dagger))`.
pub fn beamsplitter(theta: f64, phi: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[theta, phi])?;
    let cutoff = CutoffConfig::new(dim, 2)?;
    expm_antihermitian(&FockOperator::new(beamsplitter_generator(theta, phi, dim), cutoff)?)
}

/// `V_CPG(gamma) = exp(-i gamma x^3)` with the truncated position operator.
pub fn cubic_phase(gamma: f64, dim: usize) -> Result<FockOperator> {
    check_finite(&[gamma])?;
    let (x, _) = quadratures(dim)?;
    let x3 = x.matrix() * x.matrix() * x.matrix();
    let cutoff = x.cutoff();
    expm_antihermitian(&FockOperator::new(x3 * C64::new(0.0, -gamma), cutoff)?)
}

/// `dG/d(param which)` as a dense operator.
///
/// Diagonal gates are differentiated analytically; exponential gates use the
/// Fréchet derivative of `exp` at the generator in the direction of the
/// generator's parameter derivative.
pub fn gate_derivative(gate: &Gate, which: usize, dim: usize) -> Result<FockOperator> {
    let params = gate.params();
    if which >= params.len() {
        return Err(unknown_param(gate, which));
    }
    check_finite(&params)?;
    let g = gate.operator(dim)?;
    let cutoff = g.cutoff();
    let diag_derivative = |weight: &dyn Fn(&[usize]) -> f64| {
        let diag: Vec<C64> = (0..cutoff.total_dim())
            .map(|k| I * weight(&cutoff.occupations(k)) * g.matrix()[(k, k)])
            .collect();
        FockOperator::from_diagonal(&diag, cutoff, false)
    };
    match *gate {
        Gate::Rotation { .. } => diag_derivative(&|n| n[0] as f64),
        Gate::Kerr { .. } => diag_derivative(&|n| (n[0] * n[0]) as f64),
        Gate::CrossKerr { .. } => diag_derivative(&|n| -((n[0] * n[1]) as f64)),
        Gate::Displacement { re, im } => {
            let a = annihilation_matrix(dim);
            let direction = if which == 0 {
                a.adjoint() - &a
            } else {
                (a.adjoint() + &a) * I
            };
            frechet(displacement_generator(re, im, dim), direction, cutoff)
        }
        Gate::Squeezing { r } => {
            let dir = squeezing_direction(dim);
            frechet(&dir * C64::new(r, 0.0), dir, cutoff)
        }
        Gate::Beamsplitter { theta, phi } => {
            let hop = hopping(dim);
            let e = C64::from_polar(1.0, phi);
            let direction = if which == 0 {
                &hop * e - hop.adjoint() * e.conj()
            } else {
                (&hop * e + hop.adjoint() * e.conj()) * (I * theta)
            };
            frechet(beamsplitter_generator(theta, phi, dim), direction, cutoff)
        }
    }
}

fn frechet(m: DMatrix<C64>, e: DMatrix<C64>, cutoff: CutoffConfig) -> Result<FockOperator> {
    expm_frechet(&FockOperator::new(m, cutoff)?, &FockOperator::new(e, cutoff)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{max_abs, FockVector, UNITARY_TOL};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn is_identity(op: &FockOperator) -> bool {
        let n = op.matrix().nrows();
        max_abs(&(op.matrix() - DMatrix::identity(n, n))) < 1e-14
    }

    #[test]
    fn zero_parameters_give_identity() {
        assert!(is_identity(&rotation(0.0, 5).unwrap()));
        assert!(is_identity(&displacement(0.0, 0.0, 5).unwrap()));
        assert!(is_identity(&squeezing(0.0, 5).unwrap()));
        assert!(is_identity(&beamsplitter(0.0, 0.3, 4).unwrap()));
        assert!(is_identity(&kerr(0.0, 5).unwrap()));
        assert!(is_identity(&cross_kerr(0.0, 4).unwrap()));
        assert!(is_identity(&cubic_phase(0.0, 6).unwrap()));
    }

    #[test]
    fn rotation_values() {
        let r = rotation(PI, 3).unwrap();
        for (k, s) in [1.0, -1.0, 1.0].iter().enumerate() {
            assert!((r.matrix()[(k, k)] - c(*s, 0.0)).norm() < 1e-15);
        }
        let (p1, p2) = (0.37, -1.21);
        let lhs = rotation(p1, 6).unwrap().compose(&rotation(p2, 6).unwrap()).unwrap();
        assert!(max_abs(&(lhs.matrix() - rotation(p1 + p2, 6).unwrap().matrix())) < 1e-14);
    }

    #[test]
    fn kerr_values() {
        let k = kerr(PI, 4).unwrap();
        for (n, s) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert!((k.matrix()[(n, n)] - c(*s, 0.0)).norm() < 1e-14);
        }
        let cut = CutoffConfig::single(4).unwrap();
        let psi = FockVector::from_slice(&[c(0.1, 0.2), c(-0.5, 0.0), c(0.0, 0.7), c(0.3, 0.3)], cut)
            .unwrap();
        let out = psi.apply(&kerr(0.77, 4).unwrap()).unwrap();
        for k in 0..4 {
            assert!((out.amplitudes()[k].norm() - psi.amplitudes()[k].norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_kerr_values() {
        let dim = 5;
        let ck = cross_kerr(0.1, dim).unwrap();
        let cut = ck.cutoff();
        for n in 0..dim {
            for idx in [cut.index_of(&[n, 0]).unwrap(), cut.index_of(&[0, n]).unwrap()] {
                assert!((ck.matrix()[(idx, idx)] - c(1.0, 0.0)).norm() < 1e-15);
            }
        }
        let k11 = cut.index_of(&[1, 1]).unwrap();
        assert!((ck.matrix()[(k11, k11)] - C64::from_polar(1.0, -0.1)).norm() < 1e-15);
        assert!(ck.matrix().diagonal().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn displacement_vacuum_amplitude() {
        let d = displacement(0.3, 0.0, 12).unwrap();
        let amp = d.matrix()[(0, 0)].norm();
        assert!((amp - (-0.09f64 / 2.0).exp()).abs() < 1e-6, "{amp}");
        let inv = d.compose(&displacement(-0.3, 0.0, 12).unwrap()).unwrap();
        assert!(is_identity_tol(&inv, 1e-13));
    }

    fn is_identity_tol(op: &FockOperator, tol: f64) -> bool {
        let n = op.matrix().nrows();
        max_abs(&(op.matrix() - DMatrix::identity(n, n))) < tol
    }

    #[test]
    fn squeezed_vacuum_amplitude_and_parity() {
        let r = 0.2;
        let s = squeezing(r, 24).unwrap();
        let amp = s.matrix()[(0, 0)].norm();
        assert!((amp - 1.0 / r.cosh().sqrt()).abs() < 1e-5, "{amp}");
        for n in (1..24).step_by(2) {
            assert!(s.matrix()[(n, 0)].norm() < 1e-15);
        }
    }

    #[test]
    fn beamsplitter_conserves_photon_number() {
        let dim = 5;
        let bs = beamsplitter(0.7, 1.3, dim).unwrap();
        let cut = bs.cutoff();
        for i in 0..cut.total_dim() {
            for j in 0..cut.total_dim() {
                let ni: usize = cut.occupations(i).iter().sum();
                let nj: usize = cut.occupations(j).iter().sum();
                if ni != nj {
                    assert!(bs.matrix()[(i, j)].norm() < 1e-12);
                }
            }
        }
        let one_zero = FockVector::basis(cut.index_of(&[1, 0]).unwrap(), cut).unwrap();
        let out = one_zero.apply(&beamsplitter(FRAC_PI_4, 0.0, dim).unwrap()).unwrap();
        assert!((out.mean_photon_number() - 1.0).abs() < 1e-12);
        let swapped = one_zero.apply(&beamsplitter(FRAC_PI_2, 0.0, dim).unwrap()).unwrap();
        let k01 = cut.index_of(&[0, 1]).unwrap();
        assert!((swapped.amplitudes()[k01].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gates_are_unitary_and_invert_by_negation() {
        let dim = 6;
        let pairs = [
            (displacement(0.4, -0.2, dim).unwrap(), displacement(-0.4, 0.2, dim).unwrap()),
            (squeezing(0.3, dim).unwrap(), squeezing(-0.3, dim).unwrap()),
            (
                beamsplitter(0.9, 0.4, dim).unwrap(),
                beamsplitter(-0.9, 0.4, dim).unwrap(),
            ),
        ];
        for (g, g_inv) in pairs {
            assert!(g.unitarity_deviation() < UNITARY_TOL);
            assert!(max_abs(&(g.dagger().matrix() - g_inv.matrix())) < 1e-13);
        }
        let cp = cubic_phase(0.01, 20).unwrap();
        assert!(cp.unitarity_deviation() < UNITARY_TOL);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(rotation(f64::NAN, 3).is_err());
        assert!(displacement(f64::INFINITY, 0.0, 3).is_err());
        assert!(gate_derivative(&Gate::Kerr { kappa: 0.1 }, 1, 3).is_err());
    }

    #[test]
    fn rotation_derivative_at_zero() {
        let d = gate_derivative(&Gate::Rotation { phi: 0.0 }, 0, 5).unwrap();
        for k in 0..5 {
            assert!((d.matrix()[(k, k)] - c(0.0, k as f64)).norm() < 1e-15);
        }
    }

    fn central_difference(gate: &Gate, which: usize, dim: usize, h: f64) -> DMatrix<C64> {
        let p = gate.params()[which];
        let plus = gate.with_param(which, p + h).unwrap().operator(dim).unwrap();
        let minus = gate.with_param(which, p - h).unwrap().operator(dim).unwrap();
        (plus.matrix() - minus.matrix()) / c(2.0 * h, 0.0)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            (Gate::Displacement { re: 0.2, im: 0.1 }, 8),
            (Gate::Squeezing { r: 0.15 }, 12),
            (Gate::Beamsplitter { theta: 0.8, phi: -0.6 }, 4),
            (Gate::Rotation { phi: 0.9 }, 6),
            (Gate::Kerr { kappa: -0.7 }, 6),
            (Gate::CrossKerr { kappa: 0.4 }, 4),
            (Gate::Displacement { re: -1.0, im: 0.9 }, 10),
            (Gate::Squeezing { r: -1.0 }, 10),
        ];
        for (gate, dim) in cases {
            for which in 0..gate.params().len() {
                let analytic = gate_derivative(&gate, which, dim).unwrap();
                let fd = central_difference(&gate, which, dim, 1e-5);
                let rel = max_abs(&(analytic.matrix() - &fd)) / max_abs(&fd);
                assert!(rel < 1e-6, "{gate:?} param {which}: rel {rel}");
            }
        }
    }
}
