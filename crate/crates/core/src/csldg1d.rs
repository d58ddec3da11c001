//! Conservative semi-Lagrangian DG update for `u_t + (a u)_x = 0` with constant `a`
//! on a uniform periodic mesh.
//!
//! For a displacement `s = aΔt = (m + ξ)Δ` the upstream image of cell `j` covers
//! the right `ξΔ` of cell `j-m-1` and the left `(1-ξ)Δ` of cell `j-m`. Testing
//! against the nodal basis and dividing by the diagonal mass matrix gives
//!
//! ```text
//! u_new[j] = L · u[j-m-1] + R · u[j-m]
//! ```
//!
//! with two `(k+1)×(k+1)` matrices that depend only on `ξ`. Both sub-interval
//! integrals use the `k+1`-point Gauss rule, exact for the degree-`2k` integrand.

use crate::phase_space::SliceField;
use crate::quad_basis::NodalBasis;

/// `s = (m + ξ)Δ` with integer `m` and `ξ ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDecomposition {
    pub cells: i64,
    pub frac: f64,
}

impl ShiftDecomposition {
    /// Splits a displacement measured in cell widths.
    pub fn new(shift_in_cells: f64) -> Self {
        debug_assert!(shift_in_cells.is_finite());
        let m = shift_in_cells.floor();
        let mut frac = shift_in_cells - m;
        let mut cells = m as i64;
        if frac >= 1.0 {
            // tiny negative shifts round up to ξ = 1
            frac = 0.0;
            cells += 1;
        }
        Self { cells, frac }
    }

    pub fn displacement(&self, width: f64) -> f64 {
        (self.cells as f64 + self.frac) * width
    }
}

/// Precomputed update for one displacement.
#[derive(Debug, Clone)]
pub struct ShiftStencil {
    n: usize,
    shift: ShiftDecomposition,
    /// Row-major `n×n`, weights on the cell `j-m-1` values. Empty when `ξ = 0`.
    left: Vec<f64>,
    /// Row-major `n×n`, weights on the cell `j-m` values. Empty when `ξ = 0`.
    right: Vec<f64>,
}

impl ShiftStencil {
    /// Stencil for displacement `shift_in_cells = s/Δ`.
    pub fn new(basis: &NodalBasis, shift_in_cells: f64) -> Self {
        let shift = ShiftDecomposition::new(shift_in_cells);
        let n = basis.len();
        if shift.frac == 0.0 {
            return Self {
                n,
                shift,
                left: Vec::new(),
                right: Vec::new(),
            };
        }
        let xi = shift.frac;
        let nodes = basis.nodes();
        let w = basis.weights();
        let mut left = vec![0.0; n * n];
        let mut right = vec![0.0; n * n];
        let mut lu = vec![0.0; n];
        let mut lpsi = vec![0.0; n];

        // Sub-interval in the upstream-left cell: η ∈ [1-2ξ, 1], ζ = η - 2 + 2ξ.
        // Sub-interval in the upstream-right cell: η ∈ [-1, 1-2ξ], ζ = η + 2ξ.
        let pieces: [(f64, f64, f64, &mut Vec<f64>); 2] = [
            (1.0 - 2.0 * xi, 1.0, 2.0 * xi - 2.0, &mut left),
            (-1.0, 1.0 - 2.0 * xi, 2.0 * xi, &mut right),
        ];
        for (lo, hi, offset, mat) in pieces {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for r in 0..n {
                let eta = mid + half * nodes[r];
                let zeta = eta + offset;
                basis.cardinals(eta, &mut lu);
                basis.cardinals(zeta, &mut lpsi);
                let wr = w[r] * half;
                for q in 0..n {
                    let scale = wr * lpsi[q] / w[q];
                    for p in 0..n {
                        mat[q * n + p] += scale * lu[p];
                    }
                }
            }
        }
        Self {
            n,
            shift,
            left,
            right,
        }
    }

    pub fn decomposition(&self) -> ShiftDecomposition {
        self.shift
    }

    /// Weight matrices `(L, R)`, or `None` for an integer-cell shift.
    pub fn matrices(&self) -> Option<(&[f64], &[f64])> {
        if self.left.is_empty() {
            None
        } else {
            Some((&self.left, &self.right))
        }
    }

    /// Periodic source cells `(j-m-1, j-m)` for destination cell `j` of `cells`.
    #[inline]
    pub fn sources(&self, j: usize, cells: usize) -> (usize, usize) {
        let nc = cells as i64;
        let right = (j as i64 - self.shift.cells).rem_euclid(nc) as usize;
        let left = if right == 0 { cells - 1 } else { right - 1 };
        (left, right)
    }

    /// Computes the new nodal values of one cell from its two source cells.
    ///
    /// `get(c, p)` reads node `p` of source cell `c`; `out[q]` receives node `q`.
    #[inline]
    pub fn apply_cell(
        &self,
        j: usize,
        cells: usize,
        get: impl Fn(usize, usize) -> f64,
        out: &mut [f64],
    ) {
        let n = self.n;
        let (cl, cr) = self.sources(j, cells);
        match self.matrices() {
            None => {
                for (q, o) in out.iter_mut().enumerate().take(n) {
                    *o = get(cr, q);
                }
            }
            Some((l, r)) => {
                for q in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        acc += l[q * n + p] * get(cl, p) + r[q * n + p] * get(cr, p);
                    }
                    out[q] = acc;
                }
            }
        }
    }
}

/// Advects a periodic slice by displacement `s`.
pub fn advect_const(u: &SliceField, basis: &NodalBasis, s: f64) -> SliceField {
    let n = u.nodes_per_cell();
    let cells = u.grid.cells();
    let stencil = ShiftStencil::new(basis, s / u.grid.width());
    let mut out = SliceField::zeros(u.grid, u.degree);
    for (j, chunk) in out.values.chunks_mut(n).enumerate() {
        stencil.apply_cell(j, cells, |c, p| u.values[c * n + p], chunk);
    }
    out
}

/// `Σ_j Σ_q w_q (Δ/2) u[j][q]`.
pub fn mass(u: &SliceField, basis: &NodalBasis) -> f64 {
    let n = u.nodes_per_cell();
    let w = basis.weights();
    let half = 0.5 * u.grid.width();
    u.values
        .chunks(n)
        .map(|c| c.iter().zip(w).map(|(v, w)| v * w).sum::<f64>())
        .sum::<f64>()
        * half
}

/// Discrete `L^2` norm of a slice.
pub fn l2_norm(u: &SliceField, basis: &NodalBasis) -> f64 {
    let n = u.nodes_per_cell();
    let w = basis.weights();
    let half = 0.5 * u.grid.width();
    (u.values
        .chunks(n)
        .map(|c| c.iter().zip(w).map(|(v, w)| v * v * w).sum::<f64>())
        .sum::<f64>()
        * half)
        .sqrt()
}
