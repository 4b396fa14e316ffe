//! Truncated Fock-space linear algebra.
//!
//! Single-mode states live in `span{|0>, ..., |D-1>}`. Two-mode states use the
//! lexicographic product basis `|0,0>, ..., |0,D-1>, |1,0>, ...`, so the flat
//! index of `|n1, n2>` is `n1 * D + n2`.
//!
//! Gates are built as exponentials of truncated generators. A truncated
//! anti-Hermitian generator exponentiates to an exactly unitary matrix, so norm
//! preservation holds on the simulated space to machine precision.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance for the anti-Hermitian precondition of [`expm_antihermitian`].
pub const ANTI_HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for the unitarity invariant of operators flagged unitary.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutoffConfig {
    dim: usize,
    modes: usize,
}

impl CutoffConfig {
    pub fn new(dim: usize, modes: usize) -> Result<Self> {
        if dim < 2 || !(1..=2).contains(&modes) {
            return Err(Error::InvalidCutoff { dim, modes });
        }
        Ok(Self { dim, modes })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(dim, 1)
    }

    /// Per-mode cutoff `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `D^modes`.
    pub fn total_dim(&self) -> usize {
        self.dim.pow(self.modes as u32)
    }

    /// Flat index of an occupation tuple; `None` if any occupation is `>= D`.
    pub fn index_of(&self, occupations: &[usize]) -> Option<usize> {
        if occupations.len() != self.modes || occupations.iter().any(|&n| n >= self.dim) {
            return None;
        }
        Some(occupations.iter().fold(0, |acc, &n| acc * self.dim + n))
    }

    /// Occupation numbers of a flat index (mode 0 first).
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes];
        let mut rest = index;
        for slot in occ.iter_mut().rev() {
            *slot = rest % self.dim;
            rest /= self.dim;
        }
        occ
    }

    fn check_same(&self, other: &CutoffConfig) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: other.total_dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: DVector<C64>,
    cutoff: CutoffConfig,
}

impl FockVector {
    pub fn new(amplitudes: DVector<C64>, cutoff: CutoffConfig) -> Result<Self> {
        if amplitudes.len() != cutoff.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: cutoff.total_dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, cutoff })
    }

    pub fn from_slice(amplitudes: &[C64], cutoff: CutoffConfig) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes), cutoff)
    }

    /// Basis state with the given flat index.
    pub fn basis(index: usize, cutoff: CutoffConfig) -> Result<Self> {
        let n = cutoff.total_dim();
        if index >= n {
            return Err(Error::InsufficientCutoff {
                dim: cutoff.dim(),
                what: format!("basis index {index}"),
            });
        }
        let mut amplitudes = DVector::zeros(n);
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, cutoff })
    }

    pub fn vacuum(cutoff: CutoffConfig) -> Self {
        Self::basis(0, cutoff).expect("vacuum always fits")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn cutoff(&self) -> CutoffConfig {
        self.cutoff
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonFinite(format!("cannot normalize vector of norm {norm}")));
        }
        self.amplitudes.unscale_mut(norm);
        Ok(self)
    }

    pub fn apply(&self, op: &FockOperator) -> Result<Self> {
        op.cutoff.check_same(&self.cutoff)?;
        Ok(Self {
            amplitudes: &op.matrix * &self.amplitudes,
            cutoff: self.cutoff,
        })
    }

    /// Mean total photon number.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let n: usize = self.cutoff.occupations(k).iter().sum();
                n as f64 * a.norm_sqr()
            })
            .sum()
    }

    /// Keeps the components whose occupations all fit in `cutoff`.
    pub fn project_to(&self, cutoff: CutoffConfig) -> Result<Self> {
        if cutoff.modes() != self.cutoff.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff.modes(),
                found: cutoff.modes(),
            });
        }
        let mut out = DVector::zeros(cutoff.total_dim());
        for (k, a) in self.amplitudes.iter().enumerate() {
            if let Some(j) = cutoff.index_of(&self.cutoff.occupations(k)) {
                out[j] = *a;
            }
        }
        Ok(Self { amplitudes: out, cutoff })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<C64>,
    cutoff: CutoffConfig,
    unitary: bool,
}

impl FockOperator {
    /// Wraps a matrix without asserting unitarity.
    pub fn new(matrix: DMatrix<C64>, cutoff: CutoffConfig) -> Result<Self> {
        let n = cutoff.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self {
            matrix,
            cutoff,
            unitary: false,
        })
    }

    /// Wraps a matrix and checks `max|O^dagger O - I| <= 1e-10`.
    pub fn new_unitary(matrix: DMatrix<C64>, cutoff: CutoffConfig) -> Result<Self> {
        let mut op = Self::new(matrix, cutoff)?;
        let dev = op.unitarity_deviation();
        if !(dev <= UNITARY_TOL) {
            return Err(Error::InvalidParameter(format!(
                "matrix flagged unitary deviates by {dev:e}"
            )));
        }
        op.unitary = true;
        Ok(op)
    }

    pub(crate) fn from_parts(matrix: DMatrix<C64>, cutoff: CutoffConfig, unitary: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), cutoff.total_dim());
        Self {
            matrix,
            cutoff,
            unitary,
        }
    }

    pub fn identity(cutoff: CutoffConfig) -> Self {
        let n = cutoff.total_dim();
        Self::from_parts(DMatrix::identity(n, n), cutoff, true)
    }

    pub fn from_diagonal(diag: &[C64], cutoff: CutoffConfig, unitary: bool) -> Result<Self> {
        if diag.len() != cutoff.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: cutoff.total_dim(),
                found: diag.len(),
            });
        }
        Ok(Self::from_parts(
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            cutoff,
            unitary,
        ))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn cutoff(&self) -> CutoffConfig {
        self.cutoff
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.matrix.adjoint(), self.cutoff, self.unitary)
    }

    pub fn compose(&self, rhs: &FockOperator) -> Result<Self> {
        self.cutoff.check_same(&rhs.cutoff)?;
        Ok(Self::from_parts(
            &self.matrix * &rhs.matrix,
            self.cutoff,
            self.unitary && rhs.unitary,
        ))
    }

    /// `max|O^dagger O - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        let gram = self.matrix.adjoint() * &self.matrix;
        max_abs(&(gram - DMatrix::<C64>::identity(n, n)))
    }

    /// Column `index` as a state.
    pub fn column(&self, index: usize) -> Result<FockVector> {
        if index >= self.matrix.ncols() {
            return Err(Error::InsufficientCutoff {
                dim: self.cutoff.dim(),
                what: format!("column {index}"),
            });
        }
        FockVector::new(self.matrix.column(index).into_owned(), self.cutoff)
    }
}

/// Entry-wise maximum modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Truncated annihilation, creation and number operators.
pub fn ladder(dim: usize) -> Result<(FockOperator, FockOperator, FockOperator)> {
    let cutoff = CutoffConfig::single(dim)?;
    let a = annihilation_matrix(dim);
    let a_dag = a.adjoint();
    let n = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok((
        FockOperator::from_parts(a, cutoff, false),
        FockOperator::from_parts(a_dag, cutoff, false),
        FockOperator::from_parts(n, cutoff, false),
    ))
}

/// Position and momentum with `hbar = 2`: `x = a + a^dagger`, `p = -i(a - a^dagger)`.
pub fn quadratures(dim: usize) -> Result<(FockOperator, FockOperator)> {
    let cutoff = CutoffConfig::single(dim)?;
    let a = annihilation_matrix(dim);
    let a_dag = a.adjoint();
    let x = &a + &a_dag;
    let p = (&a - &a_dag) * C64::new(0.0, -1.0);
    Ok((
        FockOperator::from_parts(x, cutoff, false),
        FockOperator::from_parts(p, cutoff, false),
    ))
}

pub(crate) fn annihilation_matrix(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `exp(M)` for anti-Hermitian `M = iH`, via the eigendecomposition of `H`.
pub fn expm_antihermitian(m: &FockOperator) -> Result<FockOperator> {
    let spectrum = Spectrum::of_antihermitian(&m.matrix)?;
    Ok(FockOperator::from_parts(spectrum.exp(), m.cutoff, true))
}

/// Fréchet derivative of the matrix exponential at `M` in direction `E`,
/// read off the upper-right block of `exp([[M, E], [0, M]])`.
pub fn expm_frechet(m: &FockOperator, e: &FockOperator) -> Result<FockOperator> {
    m.cutoff.check_same(&e.cutoff)?;
    Ok(FockOperator::from_parts(
        frechet_block(&m.matrix, &e.matrix)?,
        m.cutoff,
        false,
    ))
}

pub(crate) fn frechet_block(m: &DMatrix<C64>, e: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = m.nrows();
    if m.ncols() != n || e.nrows() != n || e.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: e.nrows(),
        });
    }
    let mut big = DMatrix::<C64>::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    big.view_mut((n, n), (n, n)).copy_from(m);
    big.view_mut((0, n), (n, n)).copy_from(e);
    let exp = big.exp();
    Ok(exp.view((0, n), (n, n)).into_owned())
}

/// Kronecker product in lexicographic ordering.
pub fn tensor(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    if a.cutoff.modes() != 1 || b.cutoff.modes() != 1 || a.cutoff.dim() != b.cutoff.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.cutoff.total_dim(),
            found: b.cutoff.total_dim(),
        });
    }
    let cutoff = CutoffConfig::new(a.cutoff.dim(), 2)?;
    Ok(FockOperator::from_parts(
        a.matrix.kronecker(&b.matrix),
        cutoff,
        a.unitary && b.unitary,
    ))
}

/// Lifts a single-mode operator onto `mode` of a `modes`-mode space.
pub fn embed_single(a: &FockOperator, mode: usize, modes: usize) -> Result<FockOperator> {
    if a.cutoff.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: a.cutoff.dim(),
            found: a.cutoff.total_dim(),
        });
    }
    if mode >= modes {
        return Err(Error::InvalidParameter(format!(
            "mode {mode} out of range for {modes} mode(s)"
        )));
    }
    match modes {
        1 => Ok(a.clone()),
        2 => {
            let id = FockOperator::identity(a.cutoff);
            if mode == 0 {
                tensor(a, &id)
            } else {
                tensor(&id, a)
            }
        }
        _ => Err(Error::InvalidCutoff {
            dim: a.cutoff.dim(),
            modes,
        }),
    }
}

/// `<u|v>`.
pub fn overlap(u: &FockVector, v: &FockVector) -> Result<C64> {
    u.cutoff.check_same(&v.cutoff)?;
    Ok(u.amplitudes.dotc(&v.amplitudes))
}

/// Eigendecomposition `M = V diag(i lambda) V^dagger` of an anti-Hermitian matrix.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    pub vectors: DMatrix<C64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn of_antihermitian(m: &DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.ncols(),
            });
        }
        let scale = max_abs(m).max(1.0);
        let deviation = max_abs(&(m + m.adjoint()));
        if !(deviation <= ANTI_HERMITIAN_TOL * scale) {
            return Err(Error::NotAntiHermitian { deviation });
        }
        let h = m * C64::new(0.0, -1.0);
        Ok(Self::of_hermitian(&h))
    }

    /// Decomposes `H` (assumed Hermitian) so that `iH = V diag(i lambda) V^dagger`.
    pub fn of_hermitian(h: &DMatrix<C64>) -> Self {
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn exp(&self) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, lam) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, *lam);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Fréchet derivative of `exp` in direction `e`, using the divided-difference kernel.
    #[cfg(test)]
    pub fn frechet(&self, e: &DMatrix<C64>) -> DMatrix<C64> {
        let w = self.vectors.adjoint() * e * &self.vectors;
        let kernel = exp_kernel(&self.values);
        let y = w.component_mul(&kernel);
        &self.vectors * y * self.vectors.adjoint()
    }
}

/// `sin(x) / x`, continuous at zero.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Divided differences of `t -> e^{it}` on the eigenvalues, divided by `i`:
/// `K_jk = (e^{i l_j} - e^{i l_k}) / (i l_j - i l_k)`, `K_jj = e^{i l_j}`.
pub(crate) fn exp_kernel(values: &[f64]) -> DMatrix<C64> {
    let n = values.len();
    DMatrix::from_fn(n, n, |j, k| {
        let (lj, lk) = (values[j], values[k]);
        C64::from_polar(sinc(0.5 * (lj - lk)), 0.5 * (lj + lk))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_antihermitian(n: usize, scale: f64, rng: &mut ChaCha20Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&g - g.adjoint()) * c(0.5 * scale, 0.0)
    }

    #[test]
    fn cutoff_rejects_small_dims() {
        assert!(CutoffConfig::new(1, 1).is_err());
        assert!(CutoffConfig::new(4, 3).is_err());
        assert!(ladder(1).is_err());
        let cut = CutoffConfig::new(4, 2).unwrap();
        assert_eq!(cut.total_dim(), 16);
        assert_eq!(cut.index_of(&[1, 0]), Some(4));
        assert_eq!(cut.occupations(7), vec![1, 3]);
        assert_eq!(cut.index_of(&[4, 0]), None);
    }

    #[test]
    fn ladder_smallest_cutoff() {
        let (a, a_dag, n) = ladder(2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert_eq!(a.matrix(), &expected);
        assert_eq!(a_dag.matrix(), &expected.adjoint());
        assert_eq!(n.matrix(), &(a_dag.matrix() * a.matrix()));
    }

    #[test]
    fn truncated_commutator_is_exact() {
        for dim in [2, 3, 7, 12] {
            let (a, a_dag, n) = ladder(dim).unwrap();
            let comm = a.matrix() * a_dag.matrix() - a_dag.matrix() * a.matrix();
            let mut expected = DMatrix::<C64>::identity(dim, dim);
            expected[(dim - 1, dim - 1)] -= c(dim as f64, 0.0);
            assert!(max_abs(&(comm - expected)) < 1e-13, "dim {dim}");
            assert!(max_abs(&(n.matrix() - a_dag.matrix() * a.matrix())) < 1e-14);
        }
    }

    #[test]
    fn quadrature_conventions() {
        let (x, _) = quadratures(3).unwrap();
        assert!((x.matrix()[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x.matrix()[(1, 2)] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(x.matrix(), &x.matrix().adjoint());
        for dim in [2, 5, 9] {
            let (x, p) = quadratures(dim).unwrap();
            let x2 = x.matrix() * x.matrix();
            assert!((x2[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
            let comm = x.matrix() * p.matrix() - p.matrix() * x.matrix();
            let mut expected = DMatrix::<C64>::identity(dim, dim);
            expected[(dim - 1, dim - 1)] -= c(dim as f64, 0.0);
            assert!(max_abs(&(comm - expected * c(0.0, 2.0))) < 1e-13);
        }
    }

    #[test]
    fn expm_of_zero_and_diagonal() {
        let cut = CutoffConfig::single(5).unwrap();
        let zero = FockOperator::new(DMatrix::zeros(5, 5), cut).unwrap();
        let id = expm_antihermitian(&zero).unwrap();
        assert!(max_abs(&(id.matrix() - DMatrix::identity(5, 5))) < 1e-15);

        let diag: Vec<C64> = (0..5).map(|k| c(0.0, std::f64::consts::PI * k as f64)).collect();
        let m = FockOperator::from_diagonal(&diag, cut, false).unwrap();
        let u = expm_antihermitian(&m).unwrap();
        for k in 0..5 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((u.matrix()[(k, k)] - c(sign, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_inverse_and_unitarity() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let cut = CutoffConfig::single(8).unwrap();
        for _ in 0..10 {
            let m = random_antihermitian(8, 3.0, &mut rng);
            let plus = expm_antihermitian(&FockOperator::new(m.clone(), cut).unwrap()).unwrap();
            let minus = expm_antihermitian(&FockOperator::new(-m, cut).unwrap()).unwrap();
            let prod = plus.matrix() * minus.matrix();
            assert!(max_abs(&(prod - DMatrix::identity(8, 8))) < 1e-12);
            assert!(plus.unitarity_deviation() < UNITARY_TOL);
        }
    }

    #[test]
    fn expm_rejects_non_antihermitian() {
        let cut = CutoffConfig::single(3).unwrap();
        let m = FockOperator::new(DMatrix::identity(3, 3), cut).unwrap();
        assert!(matches!(
            expm_antihermitian(&m),
            Err(Error::NotAntiHermitian { .. })
        ));
    }

    #[test]
    fn frechet_trivial_directions() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let cut = CutoffConfig::single(4).unwrap();
        let m = FockOperator::new(random_antihermitian(4, 1.0, &mut rng), cut).unwrap();
        let zero = FockOperator::new(DMatrix::zeros(4, 4), cut).unwrap();
        assert!(max_abs(expm_frechet(&m, &zero).unwrap().matrix()) < 1e-15);
        let e = FockOperator::new(random_antihermitian(4, 1.0, &mut rng), cut).unwrap();
        let at_zero = expm_frechet(&zero, &e).unwrap();
        assert!(max_abs(&(at_zero.matrix() - e.matrix())) < 1e-14);
    }

    #[test]
    fn frechet_matches_central_difference() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..5 {
            // general (non-normal) directions are fine for the block route
            let m = random_antihermitian(6, 2.0, &mut rng);
            let e = DMatrix::from_fn(6, 6, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let l = frechet_block(&m, &e).unwrap();
            let fd = ((&m + &e * c(h, 0.0)).exp() - (&m - &e * c(h, 0.0)).exp()) / c(2.0 * h, 0.0);
            let rel = max_abs(&(&l - &fd)) / max_abs(&fd);
            assert!(rel < 1e-6, "rel {rel}");
        }
    }

    #[test]
    fn spectral_frechet_agrees_with_block_route() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..5 {
            let m = random_antihermitian(7, 4.0, &mut rng);
            let e = random_antihermitian(7, 1.0, &mut rng);
            let spec = Spectrum::of_antihermitian(&m).unwrap();
            let a = spec.frechet(&e);
            let b = frechet_block(&m, &e).unwrap();
            assert!(max_abs(&(a - b)) < 1e-11);
            assert!(max_abs(&(spec.exp() - m.exp())) < 1e-11);
        }
    }

    #[test]
    fn spectral_frechet_handles_degenerate_spectrum() {
        // M = 0 has a fully degenerate spectrum; L(0, E) = E
        let m = DMatrix::<C64>::zeros(4, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let e = random_antihermitian(4, 1.0, &mut rng);
        let spec = Spectrum::of_antihermitian(&m).unwrap();
        assert!(max_abs(&(spec.frechet(&e) - &e)) < 1e-14);
    }

    #[test]
    fn tensor_and_embedding() {
        let cut = CutoffConfig::single(3).unwrap();
        let id = FockOperator::identity(cut);
        let id2 = tensor(&id, &id).unwrap();
        assert_eq!(id2.matrix(), &DMatrix::identity(9, 9));

        let (_, _, n) = ladder(3).unwrap();
        let n0 = embed_single(&n, 0, 2).unwrap();
        let cut2 = CutoffConfig::new(3, 2).unwrap();
        let one_zero = FockVector::basis(cut2.index_of(&[1, 0]).unwrap(), cut2).unwrap();
        let zero_one = FockVector::basis(cut2.index_of(&[0, 1]).unwrap(), cut2).unwrap();
        assert_eq!(one_zero.apply(&n0).unwrap(), one_zero);
        assert!(one_zero.apply(&n0).is_ok());
        assert!(zero_one.apply(&n0).unwrap().norm() < 1e-15);
    }

    #[test]
    fn tensor_mixed_product() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let dim = 4;
        let cut = CutoffConfig::single(dim).unwrap();
        let rand_mat = |rng: &mut ChaCha20Rng| {
            DMatrix::from_fn(dim, dim, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        };
        let a = FockOperator::new(rand_mat(&mut rng), cut).unwrap();
        let b = FockOperator::new(rand_mat(&mut rng), cut).unwrap();
        let u = DVector::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), 0.3));
        let v = DVector::from_fn(dim, |_, _| c(0.1, rng.random_range(-1.0..1.0)));
        let lhs = tensor(&a, &b).unwrap().matrix() * u.kronecker(&v);
        let rhs = (a.matrix() * &u).kronecker(&(b.matrix() * &v));
        assert!((lhs - rhs).camax() < 1e-13);

        let ab = embed_single(&a, 0, 2).unwrap().compose(&embed_single(&b, 1, 2).unwrap()).unwrap();
        assert!(max_abs(&(ab.matrix() - tensor(&a, &b).unwrap().matrix())) < 1e-13);
    }

    #[test]
    fn overlaps() {
        let cut = CutoffConfig::single(4).unwrap();
        let v0 = FockVector::vacuum(cut);
        let v1 = FockVector::basis(1, cut).unwrap();
        assert_eq!(overlap(&v0, &v1).unwrap(), c(0.0, 0.0));
        let psi = FockVector::from_slice(&[c(0.5, 0.5), c(0.0, 0.5), c(0.5, 0.0), c(0.0, 0.0)], cut)
            .unwrap();
        assert!((overlap(&psi, &psi).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let other = FockVector::vacuum(CutoffConfig::single(5).unwrap());
        assert!(overlap(&v0, &other).is_err());
    }
}
