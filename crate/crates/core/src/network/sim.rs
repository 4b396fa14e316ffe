//! Forward simulation and adjoint gradients of the layered network.
//!
//! Every exponential gate in the ansatz is a rotated, rescaled copy of a fixed
//! base generator:
//!
//! * displacement `alpha a^+ - alpha^* a = R(arg alpha) |alpha| (a^+ - a) R^+`,
//! * squeezing `r (a^2 - a^+2) / 2`,
//! * beamsplitter `theta (e^{i phi} A - e^{-i phi} A^+) = R1(phi) theta (A - A^+) R1^+`
//!   with `A = a1^+ a2`, block-diagonal in `n1 + n2`,
//!
//! where `R` are diagonal phase rotations. The base generators are diagonalised
//! once per cutoff, so a gate update costs only phase and eigenvalue rescaling,
//! and parameter derivatives come from the divided-difference kernel in the
//! same eigenbasis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{annihilation_matrix, exp_kernel, CutoffConfig, Spectrum};
use crate::gates::{hopping, squeezing_direction};
use crate::C64;

use super::params::{beamsplitter_count, params_per_layer};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Below this `|z - 1|` the cost is treated as non-differentiable and the zero
/// subgradient is used.
pub const KINK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Family {
    n: usize,
    /// `V0`, row-major.
    v0: Vec<C64>,
    /// `V0^+`, row-major.
    v0h: Vec<C64>,
    /// Base generator is `V0 diag(i lambda) V0^+`.
    lambda: Vec<f64>,
    /// Occupation number driving the frame rotation, per block coordinate.
    frame: Vec<f64>,
    /// Extra operator expressed in the eigenbasis, row-major (see module docs).
    coupling: Vec<C64>,
}

impl Family {
    fn new(base: &DMatrix<C64>, frame: Vec<f64>, coupling: Option<&DMatrix<C64>>) -> Result<Self> {
        let spec = Spectrum::of_antihermitian(base)?;
        let n = base.nrows();
        let v = &spec.vectors;
        let vh = v.adjoint();
        let coupling = coupling
            .map(|op| row_major(&(&vh * op * v)))
            .unwrap_or_default();
        Ok(Self {
            n,
            v0: row_major(v),
            v0h: row_major(&vh),
            lambda: spec.values,
            frame,
            coupling,
        })
    }

    fn prepare(&self, scale: f64, angle: f64) -> BlockState {
        BlockState {
            frame: self.frame.iter().map(|n| C64::from_polar(1.0, angle * n)).collect(),
            eig: self.lambda.iter().map(|l| C64::from_polar(1.0, scale * l)).collect(),
            scale,
            angle,
        }
    }
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[inline]
fn matvec(m: &[C64], x: &[C64], y: &mut [C64]) {
    let n = x.len();
    for (row, out) in m.chunks_exact(n).zip(y.iter_mut()) {
        let mut acc = ZERO;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *out = acc;
    }
}

#[derive(Debug, Clone)]
struct BlockState {
    frame: Vec<C64>,
    eig: Vec<C64>,
    scale: f64,
    angle: f64,
}

#[derive(Debug, Clone)]
struct Spectral {
    family: Family,
    groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Rotation { mode: usize, p: usize },
    Kerr { mode: usize, p: usize },
    Squeeze { mode: usize, p: usize },
    Displace { mode: usize, re: usize, im: usize },
    Beamsplitter { theta: usize, phi: usize },
}

enum Prepared {
    Diagonal(Vec<C64>),
    Spectral(Vec<BlockState>),
}

/// Simulator for one `(modes, cutoff)` pair; reusable across parameter updates.
#[derive(Debug, Clone)]
pub struct Simulator {
    cutoff: CutoffConfig,
    occ: Vec<[usize; 2]>,
    displacement: Vec<Spectral>,
    squeezing: Vec<Spectral>,
    beamsplitter: Vec<Spectral>,
}

impl Simulator {
    pub fn new(cutoff: CutoffConfig) -> Result<Self> {
        let dim = cutoff.dim();
        let modes = cutoff.modes();
        let occ = (0..cutoff.total_dim())
            .map(|k| {
                let o = cutoff.occupations(k);
                [o[0], o.get(1).copied().unwrap_or(0)]
            })
            .collect();

        let a = annihilation_matrix(dim);
        let number: Vec<f64> = (0..dim).map(|n| n as f64).collect();
        let disp = Family::new(&(a.adjoint() - &a), number.clone(), Some(&a))?;
        let sq = Family::new(&squeezing_direction(dim), number, None)?;

        let mut displacement = Vec::new();
        let mut squeezing = Vec::new();
        for mode in 0..modes {
            let groups = mode_groups(cutoff, mode);
            displacement.push(Spectral {
                family: disp.clone(),
                groups: groups.clone(),
            });
            squeezing.push(Spectral {
                family: sq.clone(),
                groups,
            });
        }

        let mut beamsplitter = Vec::new();
        if modes == 2 {
            let hop = hopping(dim);
            for total in 0..=2 * (dim - 1) {
                let indices: Vec<usize> = (0..dim)
                    .filter(|&n1| total >= n1 && total - n1 < dim)
                    .map(|n1| n1 * dim + (total - n1))
                    .collect();
                let k = indices.len();
                let block = DMatrix::from_fn(k, k, |i, j| hop[(indices[i], indices[j])]);
                let base = &block - block.adjoint();
                let sym = &block + block.adjoint();
                let frame = indices.iter().map(|&idx| (idx / dim) as f64).collect();
                beamsplitter.push(Spectral {
                    family: Family::new(&base, frame, Some(&sym))?,
                    groups: vec![indices],
                });
            }
        }

        Ok(Self {
            cutoff,
            occ,
            displacement,
            squeezing,
            beamsplitter,
        })
    }

    pub fn cutoff(&self) -> CutoffConfig {
        self.cutoff
    }

    fn layers_of(&self, flat: &[f64]) -> Result<usize> {
        let per = params_per_layer(self.cutoff.modes());
        if flat.is_empty() || flat.len() % per != 0 {
            return Err(Error::DimensionMismatch {
                expected: per * (flat.len() / per).max(1),
                found: flat.len(),
            });
        }
        if let Some(v) = flat.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("network parameter {v}")));
        }
        Ok(flat.len() / per)
    }

    fn ops(&self, layers: usize) -> Vec<Op> {
        let modes = self.cutoff.modes();
        let n_bs = beamsplitter_count(modes);
        let mut ops = Vec::new();
        for l in 0..layers {
            let mut p = l * params_per_layer(modes);
            let interferometer = |p: &mut usize, ops: &mut Vec<Op>| {
                for b in 0..n_bs {
                    ops.push(Op::Beamsplitter {
                        theta: *p + b,
                        phi: *p + n_bs + b,
                    });
                }
                *p += 2 * n_bs;
                for mode in 0..modes {
                    ops.push(Op::Rotation { mode, p: *p + mode });
                }
                *p += modes;
            };
            interferometer(&mut p, &mut ops);
            for mode in 0..modes {
                ops.push(Op::Squeeze { mode, p: p + mode });
            }
            p += modes;
            interferometer(&mut p, &mut ops);
            for mode in 0..modes {
                ops.push(Op::Displace {
                    mode,
                    re: p + mode,
                    im: p + modes + mode,
                });
            }
            p += 2 * modes;
            for mode in 0..modes {
                ops.push(Op::Kerr { mode, p: p + mode });
            }
        }
        ops
    }

    fn prepare(&self, op: &Op, flat: &[f64]) -> Prepared {
        match *op {
            Op::Rotation { mode, p } => {
                let phi = flat[p];
                Prepared::Diagonal(
                    self.occ
                        .iter()
                        .map(|o| C64::from_polar(1.0, phi * o[mode] as f64))
                        .collect(),
                )
            }
            Op::Kerr { mode, p } => {
                let kappa = flat[p];
                Prepared::Diagonal(
                    self.occ
                        .iter()
                        .map(|o| C64::from_polar(1.0, kappa * (o[mode] * o[mode]) as f64))
                        .collect(),
                )
            }
            Op::Squeeze { mode, p } => {
                Prepared::Spectral(vec![self.squeezing[mode].family.prepare(flat[p], 0.0)])
            }
            Op::Displace { mode, re, im } => {
                let (x, y) = (flat[re], flat[im]);
                Prepared::Spectral(vec![self.displacement[mode]
                    .family
                    .prepare(x.hypot(y), y.atan2(x))])
            }
            Op::Beamsplitter { theta, phi } => Prepared::Spectral(
                self.beamsplitter
                    .iter()
                    .map(|s| s.family.prepare(flat[theta], flat[phi]))
                    .collect(),
            ),
        }
    }

    fn spectral_of(&self, op: &Op) -> &[Spectral] {
        match *op {
            Op::Squeeze { mode, .. } => std::slice::from_ref(&self.squeezing[mode]),
            Op::Displace { mode, .. } => std::slice::from_ref(&self.displacement[mode]),
            Op::Beamsplitter { .. } => &self.beamsplitter,
            _ => &[],
        }
    }

    fn apply(&self, op: &Op, prep: &Prepared, state: &mut [C64], scratch: &mut Scratch) {
        let total = self.cutoff.total_dim();
        match prep {
            Prepared::Diagonal(phases) => {
                for col in state.chunks_exact_mut(total) {
                    for (z, ph) in col.iter_mut().zip(phases) {
                        *z *= ph;
                    }
                }
            }
            Prepared::Spectral(blocks) => {
                for (spec, bs) in self.spectral_of(op).iter().zip(blocks) {
                    let fam = &spec.family;
                    let (x, u) = scratch.pair(fam.n);
                    for col in state.chunks_exact_mut(total) {
                        for g in &spec.groups {
                            for (j, &idx) in g.iter().enumerate() {
                                x[j] = col[idx] * bs.frame[j].conj();
                            }
                            matvec(&fam.v0h, x, u);
                            for (uj, e) in u.iter_mut().zip(&bs.eig) {
                                *uj *= e;
                            }
                            matvec(&fam.v0, u, x);
                            for (j, &idx) in g.iter().enumerate() {
                                col[idx] = x[j] * bs.frame[j];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Runs the network on the given input columns (each of length `D^N`,
    /// concatenated).
    pub fn propagate(&self, flat: &[f64], mut state: Vec<C64>) -> Result<Vec<C64>> {
        let layers = self.layers_of(flat)?;
        if state.len() % self.cutoff.total_dim() != 0 {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff.total_dim(),
                found: state.len(),
            });
        }
        let mut scratch = Scratch::default();
        for op in self.ops(layers) {
            let prep = self.prepare(&op, flat);
            self.apply(&op, &prep, &mut state, &mut scratch);
        }
        Ok(state)
    }

    /// Basis-state inputs as concatenated columns.
    pub fn basis_columns(&self, inputs: &[usize]) -> Result<Vec<C64>> {
        let total = self.cutoff.total_dim();
        let mut state = vec![ZERO; total * inputs.len()];
        for (c, &idx) in inputs.iter().enumerate() {
            if idx >= total {
                return Err(Error::InsufficientCutoff {
                    dim: self.cutoff.dim(),
                    what: format!("input basis index {idx}"),
                });
            }
            state[c * total + idx] = C64::new(1.0, 0.0);
        }
        Ok(state)
    }

    /// `(1/d) sum_c |<t_c|U|in_c> - 1|` and its gradient by reverse-mode
    /// propagation. `targets` holds one column per input.
    pub fn cost_and_gradient(
        &self,
        flat: &[f64],
        inputs: &[usize],
        targets: &DMatrix<C64>,
    ) -> Result<(f64, Vec<f64>)> {
        let layers = self.layers_of(flat)?;
        let total = self.cutoff.total_dim();
        if targets.nrows() != total || targets.ncols() != inputs.len() || inputs.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                found: targets.ncols(),
            });
        }
        let ops = self.ops(layers);
        let preps: Vec<Prepared> = ops.iter().map(|op| self.prepare(op, flat)).collect();
        let mut scratch = Scratch::default();

        let mut states = Vec::with_capacity(ops.len() + 1);
        states.push(self.basis_columns(inputs)?);
        for (op, prep) in ops.iter().zip(&preps) {
            let mut next = states.last().expect("seeded").clone();
            self.apply(op, prep, &mut next, &mut scratch);
            states.push(next);
        }

        let out = states.last().expect("seeded");
        let d = inputs.len() as f64;
        let mut cost = 0.0;
        let mut costate = vec![ZERO; out.len()];
        for (c, (col, mu)) in out
            .chunks_exact(total)
            .zip(costate.chunks_exact_mut(total))
            .enumerate()
        {
            let target = targets.column(c);
            let z: C64 = target.iter().zip(col).map(|(t, x)| t.conj() * x).sum();
            let dist = (z - 1.0).norm();
            if !dist.is_finite() {
                return Err(Error::NonFinite("cost".into()));
            }
            cost += dist / d;
            if dist > KINK_TOL {
                let w = (z - 1.0) / (dist * d);
                for (m, t) in mu.iter_mut().zip(target.iter()) {
                    *m = t * w;
                }
            }
        }

        let mut grad = vec![0.0; flat.len()];
        for (k, (op, prep)) in ops.iter().zip(&preps).enumerate().rev() {
            match prep {
                Prepared::Diagonal(phases) => {
                    let (mode, p, square) = match *op {
                        Op::Rotation { mode, p } => (mode, p, false),
                        Op::Kerr { mode, p } => (mode, p, true),
                        _ => unreachable!("only phase gates are diagonal"),
                    };
                    let output = &states[k + 1];
                    let mut g = 0.0;
                    for (mu_col, out_col) in costate.chunks_exact_mut(total).zip(output.chunks_exact(total)) {
                        for b in 0..total {
                            let n = self.occ[b][mode] as f64;
                            let weight = if square { n * n } else { n };
                            // Re(conj(mu) * i * w * out)
                            g += weight * (mu_col[b].conj() * out_col[b]).im * -1.0;
                            mu_col[b] *= phases[b].conj();
                        }
                    }
                    grad[p] += g;
                }
                Prepared::Spectral(blocks) => {
                    let input = &states[k];
                    for (spec, bs) in self.spectral_of(op).iter().zip(blocks) {
                        let x = self.accumulate(spec, bs, input, &mut costate, &mut scratch);
                        self.spectral_gradient(op, spec, bs, &x, flat, &mut grad);
                    }
                }
            }
        }
        Ok((cost, grad))
    }

    /// Back-propagates the co-state through one spectral block and returns the
    /// eigenbasis outer-product sum `X_jk = sum conj(mu~_j) psi~_k`.
    fn accumulate(
        &self,
        spec: &Spectral,
        bs: &BlockState,
        input: &[C64],
        costate: &mut [C64],
        scratch: &mut Scratch,
    ) -> Vec<C64> {
        let total = self.cutoff.total_dim();
        let fam = &spec.family;
        let n = fam.n;
        let mut x = vec![ZERO; n * n];
        let (buf, psi_t, mu_t) = scratch.triple(n);
        for (in_col, mu_col) in input.chunks_exact(total).zip(costate.chunks_exact_mut(total)) {
            for g in &spec.groups {
                for (j, &idx) in g.iter().enumerate() {
                    buf[j] = in_col[idx] * bs.frame[j].conj();
                }
                matvec(&fam.v0h, buf, psi_t);
                for (j, &idx) in g.iter().enumerate() {
                    buf[j] = mu_col[idx] * bs.frame[j].conj();
                }
                matvec(&fam.v0h, buf, mu_t);
                for (row, m) in x.chunks_exact_mut(n).zip(mu_t.iter()) {
                    let mc = m.conj();
                    for (xjk, p) in row.iter_mut().zip(psi_t.iter()) {
                        *xjk += mc * p;
                    }
                }
                for (m, e) in mu_t.iter_mut().zip(&bs.eig) {
                    *m *= e.conj();
                }
                matvec(&fam.v0, mu_t, buf);
                for (j, &idx) in g.iter().enumerate() {
                    mu_col[idx] = buf[j] * bs.frame[j];
                }
            }
        }
        x
    }

    fn spectral_gradient(
        &self,
        op: &Op,
        spec: &Spectral,
        bs: &BlockState,
        x: &[C64],
        flat: &[f64],
        grad: &mut [f64],
    ) {
        let fam = &spec.family;
        let n = fam.n;
        let scaled: Vec<f64> = fam.lambda.iter().map(|l| bs.scale * l).collect();
        let kernel = exp_kernel(&scaled);
        // Y = K o X, row-major
        let y: Vec<C64> = (0..n * n).map(|idx| kernel[(idx / n, idx % n)] * x[idx]).collect();
        // Re sum_j Y_jj * i lambda_j: derivative along the base generator
        let along_base = || -> f64 {
            (0..n)
                .map(|j| (y[j * n + j] * I * fam.lambda[j]).re)
                .sum()
        };
        match *op {
            Op::Squeeze { p, .. } => grad[p] += along_base(),
            Op::Beamsplitter { theta, phi } => {
                grad[theta] += along_base();
                let t = flat[theta];
                let mut g = ZERO;
                for (yv, b) in y.iter().zip(&fam.coupling) {
                    g += yv * b;
                }
                grad[phi] += (g * I * t).re;
            }
            Op::Displace { re, im, .. } => {
                // coupling holds P = V0^+ a V0; P^+ entries are conjugate-transposed
                let e = C64::from_polar(1.0, bs.angle);
                let (mut g_re, mut g_im) = (ZERO, ZERO);
                for j in 0..n {
                    for k in 0..n {
                        let p = fam.coupling[j * n + k];
                        let p_dag = fam.coupling[k * n + j].conj();
                        let yv = y[j * n + k];
                        g_re += yv * (e.conj() * p_dag - e * p);
                        g_im += yv * (e * p + e.conj() * p_dag);
                    }
                }
                grad[re] += g_re.re;
                grad[im] += (g_im * I).re;
            }
            _ => unreachable!("diagonal gates handled separately"),
        }
    }
}

/// Index groups along `mode`: each group lists the flat indices obtained by
/// varying that mode's occupation with the other modes fixed.
fn mode_groups(cutoff: CutoffConfig, mode: usize) -> Vec<Vec<usize>> {
    let dim = cutoff.dim();
    match (cutoff.modes(), mode) {
        (1, _) => vec![(0..dim).collect()],
        (_, 0) => (0..dim).map(|o| (0..dim).map(|j| j * dim + o).collect()).collect(),
        _ => (0..dim).map(|o| (0..dim).map(|j| o * dim + j).collect()).collect(),
    }
}

#[derive(Default)]
struct Scratch {
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
}

impl Scratch {
    fn pair(&mut self, n: usize) -> (&mut [C64], &mut [C64]) {
        self.a.resize(n, ZERO);
        self.b.resize(n, ZERO);
        (&mut self.a[..n], &mut self.b[..n])
    }

    fn triple(&mut self, n: usize) -> (&mut [C64], &mut [C64], &mut [C64]) {
        self.a.resize(n, ZERO);
        self.b.resize(n, ZERO);
        self.c.resize(n, ZERO);
        (&mut self.a[..n], &mut self.b[..n], &mut self.c[..n])
    }
}
