//! Spectral-collocation elliptic solvers on the x midpoints.
//!
//! All equations are written with the spectral first-derivative operator `D`
//! (Nyquist mode removed for even `Nx`). The variable-coefficient problems all
//! have the form `-D[c ⊙ Dφ] = r` and are solved with the gauge `mean(φ) = 0`
//! and, for even `Nx`, a vanishing alternating (Nyquist) component, the two
//! directions in the kernel of `D`.
//!
//! Two direct methods are provided for that form:
//!
//! * [`EllipticMethod::Factored`]: `c ⊙ Dφ = -D⁺r + a·1 + b·(-1)^j`, with the two
//!   kernel coefficients fixed by requiring `Dφ ∈ range(D)`; `O(N log N)`.
//! * [`EllipticMethod::Dense`]: assemble `-D diag(c) D` as an `N×N` matrix and LU
//!   solve the system bordered by the kernel constraints; `O(N³)`.
//!
//! Both solve the same discrete equation and agree to rounding.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::phase_space::Grid1D;
use crate::quad_basis::{cardinals_at, NodalBasis};

/// How variable-coefficient elliptic problems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EllipticMethod {
    #[default]
    Factored,
    Dense,
}

/// `φ` and `E = ∂xφ` at midpoints plus `E` at the Gauss abscissae `[j*(k+1)+q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub phi: Vec<f64>,
    pub e: Vec<f64>,
    pub e_gauss: Vec<f64>,
}

impl PotentialField {
    pub fn zero(cells: usize, nodes_per_cell: usize) -> Self {
        Self {
            phi: vec![0.0; cells],
            e: vec![0.0; cells],
            e_gauss: vec![0.0; cells * nodes_per_cell],
        }
    }

    pub fn max_abs_e(&self) -> f64 {
        self.e.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// FFT plans, wavenumbers and Gauss-point reconstruction weights for one x-grid.
pub struct SpectralWorkspace {
    grid: Grid1D,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    nodes_per_cell: usize,
    /// First stencil midpoint of each Gauss node, relative to its cell.
    stencil_starts: Vec<isize>,
    /// `[q * (k+1) + t]`: weight of stencil midpoint `t` at Gauss node `q`.
    recon_weights: Vec<f64>,
    method: EllipticMethod,
}

impl std::fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("grid", &self.grid)
            .field("nodes_per_cell", &self.nodes_per_cell)
            .field("method", &self.method)
            .finish()
    }
}

impl SpectralWorkspace {
    pub fn new(grid: Grid1D, basis: &NodalBasis) -> Self {
        let n = grid.cells();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let two_pi_over_l = 2.0 * std::f64::consts::PI / grid.length();
        let wavenumbers = (0..n)
            .map(|m| {
                if n % 2 == 0 && m == n / 2 {
                    0.0
                } else if m <= n / 2 {
                    two_pi_over_l * m as f64
                } else {
                    two_pi_over_l * (m as f64 - n as f64)
                }
            })
            .collect();

        let k = basis.degree();
        let np = basis.len();
        // odd k: each node takes the stencil whose centre lies on its side of x_j
        let stencil_starts: Vec<isize> = basis
            .nodes()
            .iter()
            .map(|&xi| {
                if k % 2 == 0 {
                    -((k / 2) as isize)
                } else if xi < 0.0 {
                    -(k.div_ceil(2) as isize)
                } else {
                    -((k / 2) as isize)
                }
            })
            .collect();
        let mut recon_weights = vec![0.0; np * np];
        for (q, &xi) in basis.nodes().iter().enumerate() {
            let abscissae: Vec<f64> = (0..np).map(|t| 2.0 * (stencil_starts[q] + t as isize) as f64).collect();
            cardinals_at(&abscissae, xi, &mut recon_weights[q * np..(q + 1) * np]);
        }
        Self {
            grid,
            wavenumbers,
            forward,
            inverse,
            nodes_per_cell: np,
            stencil_starts,
            recon_weights,
            method: EllipticMethod::default(),
        }
    }

    pub fn with_method(mut self, method: EllipticMethod) -> Self {
        self.method = method;
        self
    }

    pub fn method(&self) -> EllipticMethod {
        self.method
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    fn has_nyquist(&self) -> bool {
        self.cells() % 2 == 0
    }

    fn to_spectrum(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn from_spectrum(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.cells() as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral first derivative `D u`.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut spec = self.to_spectrum(u);
        for (c, &kappa) in spec.iter_mut().zip(&self.wavenumbers) {
            *c *= Complex64::new(0.0, kappa);
        }
        self.from_spectrum(spec)
    }

    /// Pseudo-inverse of `D`: zero-mean, Nyquist-free antiderivative of the
    /// range part of `u`.
    pub fn antiderivative(&self, u: &[f64]) -> Vec<f64> {
        let mut spec = self.to_spectrum(u);
        for (c, &kappa) in spec.iter_mut().zip(&self.wavenumbers) {
            if kappa == 0.0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, kappa);
            }
        }
        self.from_spectrum(spec)
    }

    /// Dense matrix of `D`, column `l` = `D e_l`.
    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let n = self.cells();
        let mut d = DMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for l in 0..n {
            unit[l] = 1.0;
            let col = self.derivative(&unit);
            d.set_column(l, &DVector::from_vec(col));
            unit[l] = 0.0;
        }
        d
    }

    /// Removes the components of `r` in the kernel of `D` (mean and, for even N, Nyquist).
    fn project_range(&self, r: &mut [f64]) {
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        r.iter_mut().for_each(|v| *v -= mean);
        if self.has_nyquist() {
            let alt = r
                .iter()
                .enumerate()
                .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
                .sum::<f64>()
                / n;
            r.iter_mut()
                .enumerate()
                .for_each(|(j, v)| *v -= if j % 2 == 0 { alt } else { -alt });
        }
    }

    /// Solves `-D[c ⊙ Dφ] = r` in the gauge described in the module docs.
    ///
    /// `c` must not vanish anywhere; callers check sign conditions beforehand.
    pub fn solve_divergence_form(&self, coeff: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.cells();
        if coeff.len() != n || rhs.len() != n {
            return Err(Error::Input(format!(
                "elliptic solve expects {n} samples, got coefficient {} / rhs {}",
                coeff.len(),
                rhs.len()
            )));
        }
        if let Some((j, c)) = coeff.iter().enumerate().find(|(_, c)| !c.is_finite() || **c == 0.0) {
            return Err(Error::Solver(format!("coefficient is {c} at midpoint {j}")));
        }
        let mut r = rhs.to_vec();
        self.project_range(&mut r);
        let phi = match self.method {
            EllipticMethod::Factored => self.solve_factored(coeff, &r)?,
            EllipticMethod::Dense => self.solve_dense(coeff, &r)?,
        };
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite potential".into()));
        }
        Ok(phi)
    }

    fn solve_factored(&self, coeff: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        // c ⊙ g = -D⁺ r + a + b·alt, with g = Dφ ⟂ {1, alt}.
        let base: Vec<f64> = self.antiderivative(r).into_iter().map(|v| -v).collect();
        let inv: Vec<f64> = coeff.iter().map(|c| 1.0 / c).collect();
        let alt = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
        let g = if self.has_nyquist() {
            let (mut m11, mut m12, mut m22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..coeff.len() {
                let s = alt(j);
                m11 += inv[j];
                m12 += inv[j] * s;
                m22 += inv[j];
                b1 -= inv[j] * base[j];
                b2 -= inv[j] * base[j] * s;
            }
            let det = m11 * m22 - m12 * m12;
            if det.abs() <= 1e-14 * (m11.abs() * m22.abs()).max(f64::MIN_POSITIVE) {
                return Err(Error::Solver("kernel constraint system is singular".into()));
            }
            let a = (b1 * m22 - b2 * m12) / det;
            let b = (m11 * b2 - m12 * b1) / det;
            (0..coeff.len()).map(|j| inv[j] * (base[j] + a + b * alt(j))).collect::<Vec<_>>()
        } else {
            let m11: f64 = inv.iter().sum();
            let b1: f64 = -inv.iter().zip(&base).map(|(i, v)| i * v).sum::<f64>();
            if m11.abs() <= f64::MIN_POSITIVE {
                return Err(Error::Solver("mean constraint is singular".into()));
            }
            let a = b1 / m11;
            (0..coeff.len()).map(|j| inv[j] * (base[j] + a)).collect::<Vec<_>>()
        };
        Ok(self.antiderivative(&g))
    }

    fn solve_dense(&self, coeff: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let n = self.cells();
        let d = self.derivative_matrix();
        let mut dc = d.clone();
        for (l, c) in coeff.iter().enumerate() {
            dc.column_mut(l).scale_mut(*c);
        }
        let op = -(dc * &d);
        let extra = if self.has_nyquist() { 2 } else { 1 };
        let size = n + extra;
        let mut sys = DMatrix::zeros(size, size);
        sys.view_mut((0, 0), (n, n)).copy_from(&op);
        for j in 0..n {
            sys[(n, j)] = 1.0;
            sys[(j, n)] = 1.0;
            if extra == 2 {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                sys[(n + 1, j)] = s;
                sys[(j, n + 1)] = s;
            }
        }
        let mut b = DVector::zeros(size);
        b.rows_mut(0, n).copy_from_slice(r);
        let sol = sys
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Solver("dense elliptic operator is singular".into()))?;
        Ok(sol.rows(0, n).iter().copied().collect())
    }

    /// Residual `‖-D[c ⊙ Dφ] - P r‖∞ / ‖P r‖∞` where `P` projects onto range(D).
    pub fn residual(&self, coeff: &[f64], rhs: &[f64], phi: &[f64]) -> f64 {
        let dphi = self.derivative(phi);
        let flux: Vec<f64> = dphi.iter().zip(coeff).map(|(g, c)| g * c).collect();
        let lhs: Vec<f64> = self.derivative(&flux).into_iter().map(|v| -v).collect();
        let mut r = rhs.to_vec();
        self.project_range(&mut r);
        let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = lhs.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if scale == 0.0 {
            err
        } else {
            err / scale
        }
    }

    /// Interpolates midpoint samples of `E` to the Gauss abscissae of every cell.
    ///
    /// Even `k` uses the `k+1` midpoints centred on `x_j`; for odd `k` nodes left of
    /// `x_j` start at `j - ⌈k/2⌉` and the others at `j - ⌊k/2⌋`. Indices wrap periodically.
    pub fn reconstruct_at_gauss(&self, e: &[f64]) -> Vec<f64> {
        let n = self.cells() as isize;
        let np = self.nodes_per_cell;
        let mut out = vec![0.0; e.len() * np];
        for j in 0..e.len() {
            for q in 0..np {
                let w = &self.recon_weights[q * np..(q + 1) * np];
                let mut acc = 0.0;
                for (t, wt) in w.iter().enumerate() {
                    let src = (j as isize + self.stencil_starts[q] + t as isize).rem_euclid(n) as usize;
                    acc += wt * e[src];
                }
                out[j * np + q] = acc;
            }
        }
        out
    }

    /// Builds `E = Dφ` and its Gauss-point reconstruction from a midpoint potential.
    pub fn potential_from_phi(&self, phi: Vec<f64>) -> PotentialField {
        self.finish(phi)
    }

    fn finish(&self, mut phi: Vec<f64>) -> PotentialField {
        let mean = phi.iter().sum::<f64>() / phi.len() as f64;
        phi.iter_mut().for_each(|v| *v -= mean);
        let e = self.derivative(&phi);
        let e_gauss = self.reconstruct_at_gauss(&e);
        PotentialField { phi, e, e_gauss }
    }

    /// `λ² ∂xxφ = ρ - 1` by direct Fourier division.
    pub fn solve_poisson(&self, rho: &[f64], debye: f64) -> Result<PotentialField> {
        if !(debye > 0.0) {
            return Err(Error::Config(format!(
                "Poisson solve needs a positive Debye length, got {debye}; use the reformulated or quasi-neutral solver"
            )));
        }
        self.check_len(rho)?;
        let lam2 = debye * debye;
        let mut spec = self.to_spectrum(&rho.iter().map(|r| r - 1.0).collect::<Vec<_>>());
        let two_pi_over_l = 2.0 * std::f64::consts::PI / self.grid.length();
        let n = self.cells();
        for (m, c) in spec.iter_mut().enumerate() {
            let kappa = if m <= n / 2 {
                two_pi_over_l * m as f64
            } else {
                two_pi_over_l * (m as f64 - n as f64)
            };
            if m == 0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= -lam2 * kappa * kappa;
            }
        }
        Ok(self.finish(self.from_spectrum(spec)))
    }

    /// First-order reformulated equation
    /// `-D[(λ² + ρΔt²) Dφ] = -Δt² D²S + Δt DJ - ρ + 1`.
    pub fn solve_rpe1(
        &self,
        rho: &[f64],
        current: &[f64],
        stress: &[f64],
        debye: f64,
        dt: f64,
    ) -> Result<PotentialField> {
        self.check_len(rho)?;
        self.check_len(current)?;
        self.check_len(stress)?;
        let lam2 = debye * debye;
        let dt2 = dt * dt;
        let coeff: Vec<f64> = rho.iter().map(|r| lam2 + r * dt2).collect();
        if let Some((j, c)) = coeff.iter().enumerate().find(|(_, c)| !(**c > 0.0)) {
            return Err(Error::Solver(format!(
                "reformulated Poisson coefficient λ²+ρΔt² = {c} is not positive at midpoint {j}"
            )));
        }
        let ds = self.derivative(stress);
        let dds = self.derivative(&ds);
        let dj = self.derivative(current);
        let rhs: Vec<f64> = (0..rho.len())
            .map(|j| -dt2 * dds[j] + dt * dj[j] - rho[j] + 1.0)
            .collect();
        let phi = self.solve_divergence_form(&coeff, &rhs)?;
        Ok(self.finish(phi))
    }

    /// Second-order reformulated equation
    /// `-D[(λ² - Δt²ρ_h/24) Dφ] = Δt²/24 D²S_h + Δt/3 DJ_h + Δt/6 DJⁿ - ρⁿ + 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_rpe2(
        &self,
        rho_half: &[f64],
        current_half: &[f64],
        stress_half: &[f64],
        rho_n: &[f64],
        current_n: &[f64],
        debye: f64,
        dt: f64,
    ) -> Result<PotentialField> {
        for a in [rho_half, current_half, stress_half, rho_n, current_n] {
            self.check_len(a)?;
        }
        let lam2 = debye * debye;
        let c24 = dt * dt / 24.0;
        let coeff: Vec<f64> = rho_half.iter().map(|r| lam2 - c24 * r).collect();
        let (cmin, cmax) = coeff
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(*c), hi.max(*c)));
        if !(cmin > 0.0 || cmax < 0.0) {
            return Err(Error::Solver(format!(
                "second-order coefficient λ²-Δt²ρ/24 changes sign (range [{cmin}, {cmax}]); λ={debye}, Δt={dt} is outside the scheme's validity"
            )));
        }
        let ds = self.derivative(stress_half);
        let dds = self.derivative(&ds);
        let djh = self.derivative(current_half);
        let djn = self.derivative(current_n);
        let rhs: Vec<f64> = (0..rho_n.len())
            .map(|j| c24 * dds[j] + dt / 3.0 * djh[j] + dt / 6.0 * djn[j] - rho_n[j] + 1.0)
            .collect();
        let phi = self.solve_divergence_form(&coeff, &rhs)?;
        Ok(self.finish(phi))
    }

    /// Quasi-neutral limit `D[ρ Dφ] = D²S`.
    pub fn solve_quasineutral(&self, rho: &[f64], stress: &[f64]) -> Result<PotentialField> {
        self.check_len(rho)?;
        self.check_len(stress)?;
        if let Some((j, r)) = rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::Solver(format!(
                "quasi-neutral solve needs positive density, got {r} at midpoint {j}"
            )));
        }
        let ds = self.derivative(stress);
        let rhs: Vec<f64> = self.derivative(&ds).into_iter().map(|v| -v).collect();
        let phi = self.solve_divergence_form(rho, &rhs)?;
        Ok(self.finish(phi))
    }

    fn check_len(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.cells() {
            return Err(Error::Input(format!(
                "expected {} midpoint samples, got {}",
                self.cells(),
                a.len()
            )));
        }
        Ok(())
    }
}

/// Gauss-point reconstruction of midpoint `E` on `grid` for degree `basis.degree()`.
pub fn reconstruct_e_at_gauss(e: &[f64], grid: Grid1D, basis: &NodalBasis) -> Vec<f64> {
    SpectralWorkspace::new(grid, basis).reconstruct_at_gauss(e)
}

/// Time stencil for `∂tt ρ` at the half step from `ρ^{n+1/2}`, `ρⁿ` and their time
/// derivatives; second-order accurate.
pub fn half_step_second_derivative(
    rho_half: f64,
    rho_n: f64,
    drho_half: f64,
    drho_n: f64,
    dt: f64,
) -> f64 {
    (-24.0 * rho_half + 24.0 * rho_n + 8.0 * dt * drho_half + 4.0 * dt * drho_n) / (dt * dt)
}
