//! Wigner functions, position wavefunctions and matrix heatmaps as plain data.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{CutoffConfig, FockOperator, FockVector};
use crate::network::relation_inputs;
use crate::objective::target_columns;
use crate::C64;

/// Half-width of the default phase-space window.
pub const DEFAULT_EXTENT: f64 = 6.0;
/// Half-width used for GKP states.
pub const GKP_EXTENT: f64 = 8.0;
pub const DEFAULT_POINTS: usize = 200;

/// Values on a regular grid; `values[i * ny + j]` sits at `(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D<T = f64> {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub ny: usize,
    pub values: Vec<T>,
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn check_axis(min: f64, max: f64, n: usize) -> Result<()> {
    if n == 0 || !(min.is_finite() && max.is_finite()) || (n > 1 && min >= max) {
        return Err(Error::InvalidParameter(format!("bad grid axis [{min}, {max}] with {n} points")));
    }
    Ok(())
}

impl<T: Copy + Send + Sync> Grid2D<T> {
    fn build(x: (f64, f64, usize), p: (f64, f64, usize), f: impl Fn(f64, &[f64]) -> Vec<T> + Sync) -> Result<Self> {
        check_axis(x.0, x.1, x.2)?;
        check_axis(p.0, p.1, p.2)?;
        let xs = linspace(x.0, x.1, x.2);
        let ps = linspace(p.0, p.1, p.2);
        let rows: Vec<Vec<T>> = xs.par_iter().map(|&xi| f(xi, &ps)).collect();
        Ok(Self {
            x_min: x.0,
            x_max: x.1,
            nx: x.2,
            p_min: p.0,
            p_max: p.1,
            ny: p.2,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.ny)
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.ny + j]
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Grid2D<U> {
        Grid2D {
            x_min: self.x_min,
            x_max: self.x_max,
            nx: self.nx,
            p_min: self.p_min,
            p_max: self.p_max,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Grid2D<f64> {
    /// Axis header line, then one line of `ny` values per x.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {:.16e} {:.16e} {} {:.16e} {:.16e} {}\n",
            self.x_min, self.x_max, self.nx, self.p_min, self.p_max, self.ny
        );
        for row in self.values.chunks(self.ny) {
            write_row(&mut out, row);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|h| h.strip_prefix('#'))
            .ok_or_else(|| Error::InvalidParameter("grid CSV lacks its axis header".into()))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::InvalidParameter("grid header needs six fields".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidParameter(format!("{s}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::InvalidParameter(format!("{s}: {e}")));
        let values = parse_rows(lines)?.into_iter().flatten().collect::<Vec<f64>>();
        let grid = Self {
            x_min: num(f[0])?,
            x_max: num(f[1])?,
            nx: int(f[2])?,
            p_min: num(f[3])?,
            p_max: num(f[4])?,
            ny: int(f[5])?,
            values,
        };
        if grid.values.len() != grid.nx * grid.ny {
            return Err(Error::DimensionMismatch {
                expected: grid.nx * grid.ny,
                found: grid.values.len(),
            });
        }
        Ok(grid)
    }

    /// Riemann sum over the grid points.
    pub fn integral(&self) -> f64 {
        let dx = if self.nx > 1 { (self.x_max - self.x_min) / (self.nx - 1) as f64 } else { 1.0 };
        let dp = if self.ny > 1 { (self.p_max - self.p_min) / (self.ny - 1) as f64 } else { 1.0 };
        self.values.iter().sum::<f64>() * dx * dp
    }
}

fn write_row(out: &mut String, row: &[f64]) {
    for (k, v) in row.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn parse_rows<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Vec<Vec<f64>>> {
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("bad number {s:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

fn single_mode(psi: &FockVector, what: &str) -> Result<usize> {
    let c = psi.cutoff();
    if c.modes() != 1 {
        return Err(Error::InvalidParameter(format!("{what} needs a single-mode state")));
    }
    Ok(c.dim())
}

/// Wigner function of a pure single-mode state with `x = a + a^dagger`
/// (normalised so that it integrates to 1).
///
/// Uses the ladder recurrence over `|m><n|` Wigner kernels; cost is
/// `O(D^2)` per grid point.
pub fn wigner(psi: &FockVector, x: (f64, f64, usize), p: (f64, f64, usize)) -> Result<Grid2D> {
    let dim = single_mode(psi, "the Wigner function")?;
    let c: Vec<C64> = psi.amplitudes().iter().copied().collect();
    let sq: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();
    Grid2D::build(x, p, |xi, ps| {
        let mut w = vec![C64::default(); dim];
        ps.iter()
            .map(|&pj| wigner_point(&c, &sq, C64::new(xi, pj) * 0.5, &mut w))
            .collect()
    })
}

fn wigner_point(c: &[C64], sq: &[f64], a: C64, w: &mut [C64]) -> f64 {
    let dim = c.len();
    // rho_mn = c_m conj(c_n)
    let rho = |m: usize, n: usize| c[m] * c[n].conj();
    w[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut total = rho(0, 0).re * w[0].re;
    for n in 1..dim {
        w[n] = a * 2.0 * w[n - 1] / sq[n];
        total += 2.0 * (rho(0, n) * w[n]).re;
    }
    for m in 1..dim {
        let mut temp = w[m];
        w[m] = (a.conj() * 2.0 * temp - w[m - 1] * sq[m]) / sq[m];
        total += (rho(m, m) * w[m]).re;
        for n in m + 1..dim {
            let next = (a * 2.0 * w[n - 1] - temp * sq[m]) / sq[n];
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho(m, n) * w[n]).re;
        }
    }
    total / 2.0
}

/// Harmonic-oscillator eigenfunctions `phi_0(x) .. phi_{dim-1}(x)` for
/// `x = a + a^dagger`, with `phi_0 = (2 pi)^{-1/4} exp(-x^2/4)`.
pub fn hermite_functions(x: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    if dim == 0 {
        return out;
    }
    let u = x / std::f64::consts::SQRT_2;
    out[0] = (2.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 4.0).exp();
    if dim > 1 {
        out[1] = std::f64::consts::SQRT_2 * u * out[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * u * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// `<x|psi>` at each point of `xs`.
pub fn wavefunction1d(psi: &FockVector, xs: &[f64]) -> Result<Vec<C64>> {
    let dim = single_mode(psi, "a one-dimensional wavefunction")?;
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    Ok(xs
        .iter()
        .map(|&x| {
            hermite_functions(x, dim)
                .iter()
                .zip(psi.amplitudes().iter())
                .map(|(phi, c)| c * *phi)
                .sum()
        })
        .collect())
}

/// `<x, y|psi>` for a two-mode state.
pub fn wavefunction2d(psi: &FockVector, x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Grid2D<C64>> {
    let cutoff = psi.cutoff();
    if cutoff.modes() != 2 {
        return Err(Error::InvalidParameter("a two-dimensional wavefunction needs two modes".into()));
    }
    let dim = cutoff.dim();
    let amps = psi.amplitudes();
    let ys = linspace(y.0, y.1, y.2);
    let phi_y: Vec<Vec<f64>> = ys.iter().map(|&yj| hermite_functions(yj, dim)).collect();
    Grid2D::build(x, y, |xi, _| {
        let phi_x = hermite_functions(xi, dim);
        // partial[n2] = sum_n1 c[n1, n2] phi_n1(x)
        let partial: Vec<C64> = (0..dim)
            .map(|n2| (0..dim).map(|n1| amps[n1 * dim + n2] * phi_x[n1]).sum())
            .collect();
        phi_y
            .iter()
            .map(|py| partial.iter().zip(py).map(|(a, b)| a * *b).sum())
            .collect()
    })
}

/// Real and imaginary parts of a block of a transformation, with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

fn labels(cutoff: CutoffConfig, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| {
            let occ: Vec<String> = cutoff.occupations(i).iter().map(|n| n.to_string()).collect();
            format!("|{}>", occ.join(","))
        })
        .collect()
}

/// The `d_out x d_in` block of `v`; two-mode blocks run over `|i, j>` with
/// `i, j < sqrt(d)` in lexicographic order.
pub fn matrix_heatmap(v: &FockOperator, d_in: usize, d_out: usize) -> Result<Heatmap> {
    let cutoff = v.cutoff();
    heatmap_from_columns(&target_columns(v, d_in, cutoff)?, cutoff, d_out)
}

/// Heatmap of columns already restricted to the relation inputs.
pub fn heatmap_from_columns(cols: &DMatrix<C64>, cutoff: CutoffConfig, d_out: usize) -> Result<Heatmap> {
    if cols.nrows() != cutoff.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: cutoff.total_dim(),
            found: cols.nrows(),
        });
    }
    let d_in = cols.ncols();
    let rows = relation_inputs(cutoff, d_out)?;
    let inputs = relation_inputs(cutoff, d_in)?;
    let block = DMatrix::from_fn(d_out, d_in, |r, c| cols[(rows[r], c)]);
    Ok(Heatmap {
        re: block.map(|z| z.re),
        im: block.map(|z| z.im),
        row_labels: labels(cutoff, &rows),
        col_labels: labels(cutoff, &inputs),
    })
}

/// Plain numeric CSV, one matrix row per line.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        write_row(&mut out, &row);
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows = parse_rows(text.lines())?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter("ragged matrix CSV".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

impl Heatmap {
    /// Companion label file: `rows,...` then `cols,...`.
    pub fn labels_csv(&self) -> String {
        format!("rows,{}\ncols,{}\n", self.row_labels.join(","), self.col_labels.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::random;
    use crate::targets;
    use std::f64::consts::PI;

    fn one(dim: usize) -> CutoffConfig {
        CutoffConfig::single(dim).unwrap()
    }

    #[test]
    fn wigner_values_at_origin() {
        let vac = FockVector::vacuum(one(5));
        let w = wigner(&vac, (0.0, 0.0, 1), (0.0, 0.0, 1)).unwrap();
        assert!((w.values[0] - 1.0 / (2.0 * PI)).abs() < 1e-14);
        let photon = targets::single_photon(5).unwrap();
        let w = wigner(&photon, (0.0, 0.0, 1), (0.0, 0.0, 1)).unwrap();
        assert!((w.values[0] + 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn wigner_matches_gaussian_closed_form() {
        // Coherent state: W = exp(-((x - x0)^2 + (p - p0)^2) / 2) / (2 pi), x0 = 2 Re alpha.
        let alpha = C64::new(0.7, -0.4);
        let psi = targets::coherent(alpha, 40).unwrap();
        let w = wigner(&psi, (-3.0, 3.0, 13), (-3.0, 3.0, 11)).unwrap();
        for (i, x) in w.xs().into_iter().enumerate() {
            for (j, p) in w.ps().into_iter().enumerate() {
                let r2 = (x - 2.0 * alpha.re).powi(2) + (p - 2.0 * alpha.im).powi(2);
                assert!((w.at(i, j) - (-r2 / 2.0).exp() / (2.0 * PI)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wigner_integrates_to_one() {
        let vac = FockVector::vacuum(one(4));
        let w = wigner(&vac, (-6.0, 6.0, 200), (-6.0, 6.0, 200)).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3);
        assert!(wigner(&targets::noon(1, 3).unwrap(), (0.0, 1.0, 2), (0.0, 1.0, 2)).is_err());
    }

    #[test]
    fn wigner_marginal_is_position_density() {
        for seed in 0..3 {
            let psi = targets::random_state(5, seed, 8).unwrap();
            let n = 200;
            let w = wigner(&psi, (-6.0, 6.0, n), (-9.0, 9.0, 400)).unwrap();
            let xs = w.xs();
            let wf = wavefunction1d(&psi, &xs).unwrap();
            let dp = 18.0 / 399.0;
            for i in 0..n {
                let marginal: f64 = (0..400).map(|j| w.at(i, j)).sum::<f64>() * dp;
                assert!((marginal - wf[i].norm_sqr()).abs() < 1e-3, "x = {}", xs[i]);
            }
        }
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let xs = linspace(-14.0, 14.0, 2801);
        let dx = xs[1] - xs[0];
        let table: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(x, 12)).collect();
        for m in 0..12 {
            for n in 0..12 {
                let s: f64 = table.iter().map(|t| t[m] * t[n]).sum::<f64>() * dx;
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-9, "({m}, {n}) -> {s}");
            }
        }
    }

    #[test]
    fn wavefunction_properties() {
        let vac = FockVector::vacuum(one(6));
        let xs = linspace(-8.0, 8.0, 400);
        let dx = xs[1] - xs[0];
        let norm: f64 = wavefunction1d(&vac, &xs).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        assert!((norm - 1.0).abs() < 1e-6);
        let photon = targets::single_photon(6).unwrap();
        let wf = wavefunction1d(&photon, &[0.0, 1.3, -1.3]).unwrap();
        assert!(wf[0].norm() < 1e-15);
        assert!((wf[1] + wf[2]).norm() < 1e-15);
        assert!(wavefunction1d(&vac, &[]).is_err());

        let a = targets::random_state(4, 1, 6).unwrap();
        let b = targets::random_state(4, 2, 6).unwrap();
        let (ca, cb) = (C64::new(0.3, -1.0), C64::new(-0.5, 0.2));
        let mix = FockVector::new(a.amplitudes() * ca + b.amplitudes() * cb, a.cutoff()).unwrap();
        let (wa, wb, wm) = (
            wavefunction1d(&a, &xs).unwrap(),
            wavefunction1d(&b, &xs).unwrap(),
            wavefunction1d(&mix, &xs).unwrap(),
        );
        for k in 0..xs.len() {
            assert!((wm[k] - (wa[k] * ca + wb[k] * cb)).norm() < 1e-12);
        }
    }

    #[test]
    fn noon_wavefunction_is_swap_symmetric() {
        let psi = targets::noon(5, 10).unwrap();
        let g = wavefunction2d(&psi, (-5.0, 5.0, 41), (-5.0, 5.0, 41)).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                assert!((g.at(i, j) - g.at(j, i)).norm() < 1e-12);
            }
        }
        // Product state check: |1,0> gives phi_1(x) phi_0(y).
        let s = FockVector::basis(3, CutoffConfig::new(3, 2).unwrap()).unwrap();
        let g = wavefunction2d(&s, (0.5, 0.5, 1), (-1.0, -1.0, 1)).unwrap();
        let expect = hermite_functions(0.5, 2)[1] * hermite_functions(-1.0, 1)[0];
        assert!((g.values[0].re - expect).abs() < 1e-15);
        assert!(wavefunction2d(&FockVector::vacuum(one(3)), (0.0, 1.0, 2), (0.0, 1.0, 2)).is_err());
    }

    #[test]
    fn heatmaps() {
        let id = FockOperator::identity(one(6));
        let h = matrix_heatmap(&id, 4, 5).unwrap();
        assert_eq!(h.re, DMatrix::identity(5, 4));
        assert_eq!(h.im, DMatrix::zeros(5, 4));
        let k = gates::kerr(0.37, 6).unwrap();
        let h = matrix_heatmap(&k, 5, 5).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let z = C64::new(h.re[(r, c)], h.im[(r, c)]);
                if r == c {
                    assert!((z.norm() - 1.0).abs() < 1e-14);
                } else {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
        let ck = gates::cross_kerr(0.1, 7).unwrap();
        let h = matrix_heatmap(&ck, 25, 25).unwrap();
        assert_eq!(h.row_labels[0], "|0,0>");
        assert_eq!(h.row_labels[1], "|0,1>");
        assert_eq!(h.row_labels[5], "|1,0>");
        assert_eq!(h.col_labels[24], "|4,4>");
        // |2,3> picks up exp(-i 0.1 * 6).
        let z = C64::new(h.re[(13, 13)], h.im[(13, 13)]);
        assert!((z - C64::from_polar(1.0, -0.6)).norm() < 1e-14);
        assert!(matrix_heatmap(&ck, 24, 25).is_err());
        assert!(h.labels_csv().starts_with("rows,|0,0>,|0,1>"));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let u = random::haar_unitary(6, &mut random::seeded(2));
        let re = u.map(|z| z.re);
        assert_eq!(parse_matrix_csv(&matrix_csv(&re)).unwrap(), re);
        let psi = targets::random_state(4, 3, 6).unwrap();
        let w = wigner(&psi, (-2.0, 2.0, 7), (-1.0, 3.0, 5)).unwrap();
        let back = Grid2D::from_csv(&w.to_csv()).unwrap();
        assert_eq!(back, w);
        assert!(w.to_csv().starts_with("# "));
        assert!(Grid2D::from_csv("1,2\n").is_err());
    }
}
