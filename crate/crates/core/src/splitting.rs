//! Dimension-split time stepping: x-advection `H_f`, frozen-field v-advection `H_E`,
//! the Lie and Strang compositions, and the adaptive time step.

use std::fmt;
use std::time::{Duration, Instant};

use crate::csldg1d::ShiftStencil;
use crate::diagnostics::edge_mass_fraction;
use crate::error::{Error, Result};
use crate::field_solver::{EllipticMethod, PotentialField, SpectralWorkspace};
use crate::limiter::{LimiterParams, LimiterStats, TensorLimiter};
use crate::moments::compute_moments;
use crate::par::{map_chunks_mut, Parallelism};
use crate::phase_space::{l2_norm, Grid1D, PhaseField};
use crate::quad_basis::NodalBasis;

/// `max|E|` beyond which a run is declared blown up.
pub const BLOW_UP_FIELD: f64 = 1e6;

/// Share of the mass in the outermost velocity cells beyond which the distribution
/// is taken to have left the truncated velocity domain.
pub const EDGE_MASS_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Lie splitting with the first-order reformulated Poisson equation.
    #[default]
    ApCsldg1,
    /// Strang splitting with the second-order reformulated Poisson equation.
    ApCsldg2,
    /// Lie splitting with the classical Poisson equation.
    ReferenceCsldg,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ap_csldg_1" | "ap_csldg1" | "lie" => Ok(Scheme::ApCsldg1),
            "ap_csldg_2" | "ap_csldg2" | "strang" => Ok(Scheme::ApCsldg2),
            "reference_csldg" | "reference" | "csldg" => Ok(Scheme::ReferenceCsldg),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ApCsldg1 => "ap_csldg_1",
            Scheme::ApCsldg2 => "ap_csldg_2",
            Scheme::ReferenceCsldg => "reference_csldg",
        })
    }
}

/// Where the Lie step takes the moments for its field solve.
///
/// `HeInput` takes every moment from `f*`, the field entering the v-advection.
/// `PreAdvection` takes every moment from `fⁿ`. `PostAdvection` takes the
/// coefficient density from `f*` and the rest from `fⁿ`; at `λ = 0` it solves
/// `∂x(ρ*∂xφ) = ∂xx Sⁿ` without the relaxation terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentsSource {
    #[default]
    HeInput,
    PreAdvection,
    PostAdvection,
}

impl std::str::FromStr for MomentsSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "he_input" => Ok(MomentsSource::HeInput),
            "pre_advection" | "pre" => Ok(MomentsSource::PreAdvection),
            "post_advection" | "post" => Ok(MomentsSource::PostAdvection),
            other => Err(Error::Config(format!("unknown moments_source '{other}'"))),
        }
    }
}

impl fmt::Display for MomentsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentsSource::HeInput => "he_input",
            MomentsSource::PreAdvection => "pre_advection",
            MomentsSource::PostAdvection => "post_advection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub degree: usize,
    pub debye: f64,
    pub cfl: f64,
    pub final_time: f64,
    pub fixed_dt: Option<f64>,
    pub moments_source: MomentsSource,
    /// `None` disables the positivity limiter.
    pub limiter: Option<LimiterParams>,
    /// Record L² norm and minimum after every sub-step.
    pub monitor: bool,
    pub parallelism: Parallelism,
    pub elliptic: EllipticMethod,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ApCsldg1,
            degree: 2,
            debye: 1.0,
            cfl: 1.0,
            final_time: 1.0,
            fixed_dt: None,
            moments_source: MomentsSource::default(),
            limiter: Some(LimiterParams::default()),
            monitor: false,
            parallelism: Parallelism::default(),
            elliptic: EllipticMethod::default(),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree > crate::quad_basis::MAX_DEGREE {
            return Err(Error::Config(format!("degree {} is not supported (0..=3)", self.degree)));
        }
        if !(self.debye >= 0.0) || !self.debye.is_finite() {
            return Err(Error::Config(format!("Debye length must be >= 0, got {}", self.debye)));
        }
        if self.scheme == Scheme::ReferenceCsldg && self.debye == 0.0 {
            return Err(Error::Config("reference_csldg solves the Poisson equation and needs λ > 0".into()));
        }
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return Err(Error::Config(format!("CFL must be positive, got {}", self.cfl)));
        }
        if !(self.final_time >= 0.0) || !self.final_time.is_finite() {
            return Err(Error::Config(format!("final time must be >= 0, got {}", self.final_time)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
        }
        if let Some(l) = self.limiter {
            if !(l.floor > 0.0) {
                return Err(Error::Config(format!("limiter floor must be positive, got {}", l.floor)));
            }
        }
        Ok(())
    }
}

/// L² norm and minimum around one sub-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstepCheck {
    pub label: &'static str,
    pub l2_before: f64,
    pub l2_after: f64,
    pub min_after: f64,
}

impl SubstepCheck {
    /// Relative L² growth, `(after - before) / before`.
    pub fn l2_growth(&self) -> f64 {
        if self.l2_before == 0.0 {
            self.l2_after
        } else {
            (self.l2_after - self.l2_before) / self.l2_before
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub max_e: f64,
    pub limiter: LimiterStats,
    pub wall_time: Duration,
    pub checks: Vec<SubstepCheck>,
}

/// `Δt = CFL / (vmax/Δx + max|E|/Δv)`.
pub fn choose_dt(vmax: f64, dx: f64, max_e: f64, dv: f64, cfl: f64) -> Result<f64> {
    let denom = vmax / dx + max_e / dv;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Config(format!(
            "time step denominator vmax/Δx + max|E|/Δv = {denom} is not positive"
        )));
    }
    Ok(cfl / denom)
}

/// Everything needed to advance one phase-space grid.
pub struct Stepper {
    config: SchemeConfig,
    basis: NodalBasis,
    workspace: SpectralWorkspace,
    x: Grid1D,
    v: Grid1D,
    limiter: TensorLimiter,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("config", &self.config)
            .field("x", &self.x)
            .field("v", &self.v)
            .finish()
    }
}

impl Stepper {
    pub fn new(config: SchemeConfig, x: Grid1D, v: Grid1D) -> Result<Self> {
        config.validate()?;
        let basis = NodalBasis::new(config.degree)?;
        let workspace = SpectralWorkspace::new(x, &basis).with_method(config.elliptic);
        let tensor_weights = PhaseField::zeros(x, v, config.degree).tensor_weights(&basis);
        let limiter = TensorLimiter::new(&basis, &tensor_weights);
        Ok(Self {
            config,
            basis,
            workspace,
            x,
            v,
            limiter,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn basis(&self) -> &NodalBasis {
        &self.basis
    }

    pub fn workspace(&self) -> &SpectralWorkspace {
        &self.workspace
    }

    pub fn x_grid(&self) -> Grid1D {
        self.x
    }

    pub fn v_grid(&self) -> Grid1D {
        self.v
    }

    fn check_shape(&self, f: &PhaseField) -> Result<()> {
        if f.x != self.x || f.v != self.v || f.degree != self.config.degree {
            return Err(Error::Input("phase field does not match the stepper's grid".into()));
        }
        Ok(())
    }

    /// Potential at the initial time: Poisson for `λ > 0`, quasi-neutral for `λ = 0`.
    pub fn initial_potential(&self, f: &PhaseField) -> Result<PotentialField> {
        self.check_shape(f)?;
        let m = compute_moments(f, &self.basis);
        if self.config.debye > 0.0 {
            self.workspace.solve_poisson(&m.rho, self.config.debye)
        } else {
            self.workspace.solve_quasineutral(&m.rho, &m.stress)
        }
    }

    /// Step size from the CFL rule, or the fixed override.
    pub fn dt_for(&self, max_e: f64) -> Result<f64> {
        match self.config.fixed_dt {
            Some(dt) => Ok(dt),
            None => choose_dt(self.v.max_abs(), self.x.width(), max_e, self.v.width(), self.config.cfl),
        }
    }

    fn limit_column(&self, column: &mut [f64], cell_len: usize) -> LimiterStats {
        let mut stats = LimiterStats::default();
        if let Some(params) = self.config.limiter {
            for cell in column.chunks_mut(cell_len) {
                stats.add(self.limiter.limit(cell, params));
            }
        }
        stats
    }

    /// x-advection of every velocity slice by `v_{i,p} τ`, then the limiter.
    pub fn step_hf(&self, f: &PhaseField, tau: f64) -> (PhaseField, LimiterStats) {
        let n = f.nodes_per_cell();
        let nx = f.x.cells();
        let nv = f.v.cells();
        let nodes = self.basis.nodes();
        let dx = f.x.width();
        let stencils: Vec<ShiftStencil> = (0..nv)
            .flat_map(|i| (0..n).map(move |p| (i, p)))
            .map(|(i, p)| ShiftStencil::new(&self.basis, f.v.point(i, nodes[p]) * tau / dx))
            .collect();
        let mut out = PhaseField::zeros(f.x, f.v, f.degree);
        let column_len = f.column_len();
        let cell_len = f.cell_len();
        let stats = map_chunks_mut(self.config.parallelism, &mut out.values, column_len, |j, column| {
            let mut tmp = [0.0; crate::quad_basis::MAX_DEGREE + 1];
            for i in 0..nv {
                for p in 0..n {
                    let st = &stencils[i * n + p];
                    st.apply_cell(j, nx, |c, q| f.values[((c * nv + i) * n + q) * n + p], &mut tmp[..n]);
                    for q in 0..n {
                        column[(i * n + q) * n + p] = tmp[q];
                    }
                }
            }
            self.limit_column(column, cell_len)
        });
        (out, stats.into_iter().fold(LimiterStats::default(), LimiterStats::merge))
    }

    /// v-advection of every space slice by `E(x_{j,q}) τ`, then the limiter.
    pub fn step_he(&self, f: &PhaseField, e_gauss: &[f64], tau: f64) -> (PhaseField, LimiterStats) {
        let n = f.nodes_per_cell();
        let nv = f.v.cells();
        let dv = f.v.width();
        assert_eq!(e_gauss.len(), f.x.cells() * n, "E must be given at every x Gauss point");
        let mut out = PhaseField::zeros(f.x, f.v, f.degree);
        let column_len = f.column_len();
        let cell_len = f.cell_len();
        let stats = map_chunks_mut(self.config.parallelism, &mut out.values, column_len, |j, column| {
            let src = &f.values[j * column_len..(j + 1) * column_len];
            let mut tmp = [0.0; crate::quad_basis::MAX_DEGREE + 1];
            for q in 0..n {
                let st = ShiftStencil::new(&self.basis, e_gauss[j * n + q] * tau / dv);
                for i in 0..nv {
                    st.apply_cell(i, nv, |c, p| src[(c * n + q) * n + p], &mut tmp[..n]);
                    column[(i * n + q) * n..(i * n + q) * n + n].copy_from_slice(&tmp[..n]);
                }
            }
            self.limit_column(column, cell_len)
        });
        (out, stats.into_iter().fold(LimiterStats::default(), LimiterStats::merge))
    }

    fn check(&self, label: &'static str, after: &PhaseField, l2_before: f64) -> SubstepCheck {
        SubstepCheck {
            label,
            l2_before,
            l2_after: l2_norm(after, &self.basis),
            min_after: after.min_value(),
        }
    }

    fn monitored_hf(&self, f: &PhaseField, tau: f64, label: &'static str, checks: &mut Vec<SubstepCheck>) -> (PhaseField, LimiterStats) {
        let l2 = self.config.monitor.then(|| l2_norm(f, &self.basis));
        let (g, stats) = self.step_hf(f, tau);
        if let Some(l2) = l2 {
            checks.push(self.check(label, &g, l2));
        }
        (g, stats)
    }

    fn monitored_he(&self, f: &PhaseField, e: &[f64], tau: f64, checks: &mut Vec<SubstepCheck>) -> (PhaseField, LimiterStats) {
        let l2 = self.config.monitor.then(|| l2_norm(f, &self.basis));
        let (g, stats) = self.step_he(f, e, tau);
        if let Some(l2) = l2 {
            checks.push(self.check("H_E", &g, l2));
        }
        (g, stats)
    }

    /// One Lie step (`H_f(Δt)` then `H_E(Δt)`) with the field from the first-order
    /// reformulated equation, or from the Poisson equation for the reference scheme.
    pub fn advance_lie(&self, f: &PhaseField, dt: f64) -> Result<(PhaseField, PotentialField, StepReport)> {
        self.check_shape(f)?;
        let start = Instant::now();
        let mut checks = Vec::new();
        let mn = compute_moments(f, &self.basis);
        let (fstar, s1) = self.monitored_hf(f, dt, "H_f", &mut checks);
        let potential = match self.config.scheme {
            Scheme::ReferenceCsldg => {
                // the Poisson field at t^{n+1} needs the density after transport
                let ms = compute_moments(&fstar, &self.basis);
                self.workspace.solve_poisson(&ms.rho, self.config.debye)?
            }
            _ => {
                match self.config.moments_source {
                    MomentsSource::HeInput => {
                        let ms = compute_moments(&fstar, &self.basis);
                        self.workspace.solve_rpe1(&ms.rho, &ms.current, &ms.stress, self.config.debye, dt)?
                    }
                    MomentsSource::PreAdvection => {
                        self.workspace.solve_rpe1(&mn.rho, &mn.current, &mn.stress, self.config.debye, dt)?
                    }
                    MomentsSource::PostAdvection => {
                        let rho_star = compute_moments(&fstar, &self.basis).rho;
                        if self.config.debye == 0.0 {
                            self.workspace.solve_quasineutral(&rho_star, &mn.stress)?
                        } else {
                            self.solve_rpe1_mixed(&rho_star, &mn.rho, &mn.current, &mn.stress, dt)?
                        }
                    }
                }
            }
        };
        let (fnew, s2) = self.monitored_he(&fstar, &potential.e_gauss, dt, &mut checks);
        let report = StepReport {
            dt,
            max_e: potential.max_abs_e(),
            limiter: s1.merge(s2),
            wall_time: start.elapsed(),
            checks,
        };
        Ok((fnew, potential, report))
    }

    fn solve_rpe1_mixed(
        &self,
        coeff_rho: &[f64],
        rho: &[f64],
        current: &[f64],
        stress: &[f64],
        dt: f64,
    ) -> Result<PotentialField> {
        let lam2 = self.config.debye * self.config.debye;
        let dt2 = dt * dt;
        let coeff: Vec<f64> = coeff_rho.iter().map(|r| lam2 + r * dt2).collect();
        if let Some((j, c)) = coeff.iter().enumerate().find(|(_, c)| !(**c > 0.0)) {
            return Err(Error::Solver(format!(
                "reformulated Poisson coefficient λ²+ρ*Δt² = {c} is not positive at midpoint {j}"
            )));
        }
        let ws = &self.workspace;
        let dds = ws.derivative(&ws.derivative(stress));
        let dj = ws.derivative(current);
        let rhs: Vec<f64> = (0..rho.len())
            .map(|j| -dt2 * dds[j] + dt * dj[j] - rho[j] + 1.0)
            .collect();
        let phi = ws.solve_divergence_form(&coeff, &rhs)?;
        Ok(ws.potential_from_phi(phi))
    }

    /// One Strang step: `H_f(Δt/2)`, `H_E(Δt)` with the second-order reformulated
    /// field at the half step, `H_f(Δt/2)`.
    pub fn advance_strang(&self, f: &PhaseField, dt: f64) -> Result<(PhaseField, PotentialField, StepReport)> {
        self.check_shape(f)?;
        let start = Instant::now();
        let mut checks = Vec::new();
        let mn = compute_moments(f, &self.basis);
        let (fstar, s1) = self.monitored_hf(f, 0.5 * dt, "H_f/2", &mut checks);
        let mh = compute_moments(&fstar, &self.basis);
        let potential = self.workspace.solve_rpe2(
            &mh.rho,
            &mh.current,
            &mh.stress,
            &mn.rho,
            &mn.current,
            self.config.debye,
            dt,
        )?;
        let (fss, s2) = self.monitored_he(&fstar, &potential.e_gauss, dt, &mut checks);
        let (fnew, s3) = self.monitored_hf(&fss, 0.5 * dt, "H_f/2", &mut checks);
        let report = StepReport {
            dt,
            max_e: potential.max_abs_e(),
            limiter: s1.merge(s2).merge(s3),
            wall_time: start.elapsed(),
            checks,
        };
        Ok((fnew, potential, report))
    }

    /// One step of the configured scheme.
    pub fn advance(&self, f: &PhaseField, dt: f64) -> Result<(PhaseField, PotentialField, StepReport)> {
        match self.config.scheme {
            Scheme::ApCsldg1 | Scheme::ReferenceCsldg => self.advance_lie(f, dt),
            Scheme::ApCsldg2 => self.advance_strang(f, dt),
        }
    }
}

/// State carried between steps.
#[derive(Debug, Clone)]
pub struct RunState {
    pub f: PhaseField,
    pub potential: PotentialField,
    pub t: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    Finished,
    /// `max|E|` exceeded [`BLOW_UP_FIELD`], the field became non-finite, or more than
    /// [`EDGE_MASS_LIMIT`] of the mass reached the velocity boundary cells.
    BlowUp { t: f64, max_e: f64, edge_fraction: f64 },
}

pub fn is_blow_up(f: &PhaseField, max_e: f64, edge_fraction: f64) -> bool {
    !(max_e <= BLOW_UP_FIELD) || !f.all_finite() || !(edge_fraction <= EDGE_MASS_LIMIT)
}

pub fn integrate(
    stepper: &Stepper,
    state: &mut RunState,
    t_end: f64,
    stops: &[f64],
    mut on_step: impl FnMut(&RunState, &StepReport),
) -> Result<StopReason> {
    let mut targets: Vec<f64> = stops.iter().copied().filter(|s| *s > state.t && *s < t_end).collect();
    targets.push(t_end);
    targets.sort_by(f64::total_cmp);
    let mut target_idx = 0;
    while state.t < t_end && target_idx < targets.len() {
        let target = targets[target_idx];
        let mut dt = stepper.dt_for(state.potential.max_abs_e())?;
        let remaining = target - state.t;
        let mut hit = false;
        // absorb rounding drift in t into the last step; a sliver step would put
        // 1/Δt² into the reformulated equation
        if remaining <= dt * (1.0 + 1e-6) {
            dt = remaining;
            hit = true;
        }
        let (f, potential, report) = stepper.advance(&state.f, dt)?;
        let edge_fraction = edge_mass_fraction(&f, &stepper.basis);
        let blown = is_blow_up(&f, report.max_e, edge_fraction);
        state.f = f;
        state.potential = potential;
        state.t = if hit { target } else { state.t + dt };
        state.steps += 1;
        on_step(state, &report);
        if blown {
            return Ok(StopReason::BlowUp {
                t: state.t,
                max_e: report.max_e,
                edge_fraction,
            });
        }
        if hit {
            target_idx += 1;
        }
    }
    Ok(StopReason::Finished)
}
