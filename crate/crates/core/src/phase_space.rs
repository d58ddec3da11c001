//! Uniform meshes and the tensor-product nodal DG field `f(x, v)`.

use crate::error::{Error, Result};
use crate::quad_basis::NodalBasis;

/// Uniform partition of `[lower, upper]` into `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lower: f64,
    upper: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Config(format!(
                "invalid grid [{lower}, {upper}] with {cells} cells"
            )));
        }
        Ok(Self { lower, upper, cells })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.lower + (j as f64 + 0.5) * self.width()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.midpoint(j)).collect()
    }

    /// Physical coordinate of reference point `xi` in cell `j`.
    pub fn point(&self, j: usize, xi: f64) -> f64 {
        self.midpoint(j) + 0.5 * xi * self.width()
    }

    /// Largest absolute coordinate, `max(|lower|, |upper|)`.
    pub fn max_abs(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }
}

/// One-dimensional DG field stored as `u[j * (k+1) + q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceField {
    pub grid: Grid1D,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl SliceField {
    pub fn zeros(grid: Grid1D, degree: usize) -> Self {
        Self {
            grid,
            degree,
            values: vec![0.0; grid.cells() * (degree + 1)],
        }
    }

    /// Collocates `f` at the Gauss points of every cell.
    pub fn sample(grid: Grid1D, basis: &NodalBasis, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.cells())
            .flat_map(|j| basis.nodes().iter().map(move |&xi| grid.point(j, xi)))
            .map(f)
            .collect();
        Self {
            grid,
            degree: basis.degree(),
            values,
        }
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.degree + 1
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.nodes_per_cell();
        &self.values[j * n..(j + 1) * n]
    }
}

/// Nodal values `F[j][i][q][p] = f_h(x_{j,q}, v_{i,p})`, row-major in `(j, i, q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub x: Grid1D,
    pub v: Grid1D,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn zeros(x: Grid1D, v: Grid1D, degree: usize) -> Self {
        let n = degree + 1;
        Self {
            x,
            v,
            degree,
            values: vec![0.0; x.cells() * v.cells() * n * n],
        }
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.degree + 1
    }

    /// Storage length of one `(j, i)` cell block, `(k+1)^2`.
    pub fn cell_len(&self) -> usize {
        let n = self.nodes_per_cell();
        n * n
    }

    /// Storage length of one x-cell column `j` (all velocities), `Nv (k+1)^2`.
    pub fn column_len(&self) -> usize {
        self.v.cells() * self.cell_len()
    }

    #[inline]
    pub fn index(&self, j: usize, i: usize, q: usize, p: usize) -> usize {
        let n = self.nodes_per_cell();
        ((j * self.v.cells() + i) * n + q) * n + p
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize, q: usize, p: usize) -> f64 {
        self.values[self.index(j, i, q, p)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copies out the x-slice at velocity node `(i, p)`.
    pub fn x_slice(&self, i: usize, p: usize) -> SliceField {
        let n = self.nodes_per_cell();
        let mut out = SliceField::zeros(self.x, self.degree);
        for j in 0..self.x.cells() {
            for q in 0..n {
                out.values[j * n + q] = self.get(j, i, q, p);
            }
        }
        out
    }

    /// Copies out the v-slice at space node `(j, q)`.
    pub fn v_slice(&self, j: usize, q: usize) -> SliceField {
        let n = self.nodes_per_cell();
        let mut out = SliceField::zeros(self.v, self.degree);
        for i in 0..self.v.cells() {
            for p in 0..n {
                out.values[i * n + p] = self.get(j, i, q, p);
            }
        }
        out
    }

    /// Tensor quadrature weight `w_q w_p Δx Δv / 4` for node `(q, p)`.
    pub fn tensor_weights(&self, basis: &NodalBasis) -> Vec<f64> {
        let w = basis.weights();
        let scale = self.x.width() * self.v.width() / 4.0;
        w.iter()
            .flat_map(|&wq| w.iter().map(move |&wp| wq * wp * scale))
            .collect()
    }
}

/// Collocates the initial condition at every tensor Gauss point.
pub fn sample_ic(
    f0: impl Fn(f64, f64) -> f64,
    x: Grid1D,
    v: Grid1D,
    basis: &NodalBasis,
) -> Result<PhaseField> {
    let mut field = PhaseField::zeros(x, v, basis.degree());
    let nodes = basis.nodes();
    let n = nodes.len();
    for j in 0..x.cells() {
        for i in 0..v.cells() {
            for q in 0..n {
                let xq = x.point(j, nodes[q]);
                for p in 0..n {
                    let vp = v.point(i, nodes[p]);
                    let val = f0(xq, vp);
                    if !val.is_finite() {
                        return Err(Error::Input(format!(
                            "initial condition is {val} at (x={xq}, v={vp})"
                        )));
                    }
                    let idx = field.index(j, i, q, p);
                    field.values[idx] = val;
                }
            }
        }
    }
    Ok(field)
}

/// Returns `G(x, v) = F(x, -v)` by permuting `(i, p) -> (Nv-1-i, k-p)`.
pub fn reflect_v(field: &PhaseField) -> Result<PhaseField> {
    let (lo, hi) = (field.v.lower(), field.v.upper());
    if (lo + hi).abs() > 1e-12 * hi.abs().max(1.0) {
        return Err(Error::Config(format!(
            "velocity domain [{lo}, {hi}] is not symmetric about 0"
        )));
    }
    let n = field.nodes_per_cell();
    let nv = field.v.cells();
    let mut out = field.clone();
    for j in 0..field.x.cells() {
        for i in 0..nv {
            for q in 0..n {
                for p in 0..n {
                    let dst = out.index(j, i, q, p);
                    out.values[dst] = field.get(j, nv - 1 - i, q, n - 1 - p);
                }
            }
        }
    }
    Ok(out)
}

/// Discrete `L^p` norm with tensor Gauss weights.
pub fn lp_norm(field: &PhaseField, basis: &NodalBasis, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1");
    let tw = field.tensor_weights(basis);
    let cell = field.cell_len();
    let sum: f64 = field
        .values
        .chunks(cell)
        .map(|c| c.iter().zip(&tw).map(|(f, w)| w * f.abs().powf(p)).sum::<f64>())
        .sum();
    sum.powf(1.0 / p)
}

pub fn l2_norm(field: &PhaseField, basis: &NodalBasis) -> f64 {
    let tw = field.tensor_weights(basis);
    let cell = field.cell_len();
    field
        .values
        .chunks(cell)
        .map(|c| c.iter().zip(&tw).map(|(f, w)| w * f * f).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// `∫∫ f` by tensor Gauss quadrature.
pub fn mass(field: &PhaseField, basis: &NodalBasis) -> f64 {
    let tw = field.tensor_weights(basis);
    let cell = field.cell_len();
    field
        .values
        .chunks(cell)
        .map(|c| c.iter().zip(&tw).map(|(f, w)| w * f).sum::<f64>())
        .sum()
}
