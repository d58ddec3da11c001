//! Initial-condition families and well-preparedness checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::diagnostics::quasineutral_deviation;
use crate::error::{Error, Result};
use crate::field_solver::SpectralWorkspace;
use crate::moments::compute_moments;
use crate::phase_space::{sample_ic, Grid1D, PhaseField};
use crate::quad_basis::NodalBasis;

pub type InitialCondition = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Mesh, degree and run length a scenario is normally run with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunDefaults {
    pub nx: usize,
    pub nv: usize,
    pub degree: usize,
    pub cfl: f64,
    pub final_time: f64,
    pub debye: f64,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub x_bounds: (f64, f64),
    pub v_bounds: (f64, f64),
    pub f0: InitialCondition,
    pub params: BTreeMap<String, f64>,
    /// Desk-scale defaults.
    pub defaults: RunDefaults,
    /// Large mesh and long final time for full-length runs.
    pub full_defaults: RunDefaults,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("x_bounds", &self.x_bounds)
            .field("v_bounds", &self.v_bounds)
            .field("params", &self.params)
            .field("defaults", &self.defaults)
            .finish()
    }
}

pub const SCENARIO_NAMES: [&str; 5] = ["landau", "two_stream_1", "two_stream_2", "near_equilibrium", "bump_on_tail"];

fn maxwellian(v: f64) -> f64 {
    (-v * v / 2.0).exp() / (2.0 * PI).sqrt()
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_wave(k_wave: f64) -> Result<()> {
    if !(k_wave > 0.0) || !k_wave.is_finite() {
        return Err(Error::Config(format!("wavenumber must be positive, got {k_wave}")));
    }
    Ok(())
}

impl Scenario {
    pub fn x_grid(&self, cells: usize) -> Result<Grid1D> {
        Grid1D::new(self.x_bounds.0, self.x_bounds.1, cells)
    }

    pub fn v_grid(&self, cells: usize) -> Result<Grid1D> {
        Grid1D::new(self.v_bounds.0, self.v_bounds.1, cells)
    }

    pub fn eval(&self, x: f64, v: f64) -> f64 {
        (self.f0)(x, v)
    }

    /// Collocates `f₀` on an `nx × nv` mesh; rejects negative samples.
    pub fn sample(&self, nx: usize, nv: usize, basis: &NodalBasis) -> Result<PhaseField> {
        let f = sample_ic(|x, v| self.eval(x, v), self.x_grid(nx)?, self.v_grid(nv)?, basis)?;
        let min = f.min_value();
        if min < 0.0 {
            return Err(Error::Input(format!("{}: initial condition has negative value {min}", self.name)));
        }
        Ok(f)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// Builds a scenario by name with optional parameter overrides
    /// (`alpha`, `k_wave`, `lambda`, `vmin`, `vmax`).
    pub fn from_name(name: &str, overrides: &BTreeMap<String, f64>) -> Result<Scenario> {
        let get = |k: &str| overrides.get(k).copied();
        let known = ["alpha", "k_wave", "lambda", "vmin", "vmax"];
        if let Some(bad) = overrides.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown scenario parameter '{bad}'")));
        }
        let mut sc = match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "landau" => landau(get("alpha").unwrap_or(0.5), get("k_wave").unwrap_or(0.5))?,
            "two_stream_1" => {
                two_stream_1_with(get("alpha").unwrap_or(0.01), get("k_wave").unwrap_or(0.5))?
            }
            "two_stream_2" => {
                two_stream_2_with(get("alpha").unwrap_or(0.05), get("k_wave").unwrap_or(2.0 / 13.0))?
            }
            "near_equilibrium" => near_equilibrium(get("alpha").unwrap_or(1e-16))?,
            "bump_on_tail" => bump_on_tail(get("lambda").unwrap_or(1.0))?,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario '{other}' (expected one of {})",
                    SCENARIO_NAMES.join(", ")
                )))
            }
        };
        if let Some(lo) = get("vmin") {
            sc.v_bounds.0 = lo;
        }
        if let Some(hi) = get("vmax") {
            sc.v_bounds.1 = hi;
        }
        if !(sc.v_bounds.1 > sc.v_bounds.0) {
            return Err(Error::Config(format!("empty velocity domain {:?}", sc.v_bounds)));
        }
        Ok(sc)
    }
}

/// `(1 + α cos(kx)) e^{-v²/2}/√(2π)` on `[0, 2π/k] × [-5, 5]`.
pub fn landau(alpha: f64, k_wave: f64) -> Result<Scenario> {
    check_wave(k_wave)?;
    if !(alpha.abs() < 1.0) {
        return Err(Error::Config(format!("Landau amplitude |α| must be < 1, got {alpha}")));
    }
    let defaults = RunDefaults { nx: 64, nv: 64, degree: 2, cfl: 1.0, final_time: 10.0, debye: 1.0 };
    Ok(Scenario {
        name: "landau".into(),
        x_bounds: (0.0, 2.0 * PI / k_wave),
        v_bounds: (-5.0, 5.0),
        f0: Arc::new(move |x, v| (1.0 + alpha * (k_wave * x).cos()) * maxwellian(v)),
        params: params(&[("alpha", alpha), ("k_wave", k_wave)]),
        defaults,
        full_defaults: RunDefaults { nx: 128, nv: 128, final_time: 50.0, ..defaults },
    })
}

pub fn two_stream_1() -> Scenario {
    two_stream_1_with(0.01, 0.5).expect("default parameters are valid")
}

pub fn two_stream_1_with(alpha: f64, k_wave: f64) -> Result<Scenario> {
    check_wave(k_wave)?;
    if !(alpha.abs() * (1.0 + 2.0 / 1.2) < 1.0) {
        return Err(Error::Config(format!("two-stream amplitude {alpha} makes f₀ negative")));
    }
    let c = 2.0 / (7.0 * (2.0 * PI).sqrt());
    let defaults = RunDefaults { nx: 128, nv: 128, degree: 2, cfl: 1.0, final_time: 10.0, debye: 1.0 };
    Ok(Scenario {
        name: "two_stream_1".into(),
        x_bounds: (0.0, 2.0 * PI / k_wave),
        v_bounds: (-10.0, 10.0),
        f0: Arc::new(move |x, v| {
            let pert = 1.0 + alpha * (((2.0 * k_wave * x).cos() + (3.0 * k_wave * x).cos()) / 1.2 + (k_wave * x).cos());
            c * (1.0 + 5.0 * v * v) * pert * (-v * v / 2.0).exp()
        }),
        params: params(&[("alpha", alpha), ("k_wave", k_wave)]),
        defaults,
        full_defaults: RunDefaults { nx: 256, nv: 256, final_time: 80.0, ..defaults },
    })
}

pub fn two_stream_2() -> Scenario {
    two_stream_2_with(0.05, 2.0 / 13.0).expect("default parameters are valid")
}

pub fn two_stream_2_with(alpha: f64, k_wave: f64) -> Result<Scenario> {
    check_wave(k_wave)?;
    if !(alpha.abs() < 1.0) {
        return Err(Error::Config(format!("two-stream amplitude |α| must be < 1, got {alpha}")));
    }
    let (u, vth) = (0.99, 0.3);
    let c = 1.0 / (2.0 * vth * (2.0 * PI).sqrt());
    let defaults = RunDefaults { nx: 128, nv: 128, degree: 2, cfl: 3.0, final_time: 10.0, debye: 1.0 };
    Ok(Scenario {
        name: "two_stream_2".into(),
        x_bounds: (0.0, 2.0 * PI / k_wave),
        v_bounds: (-5.0, 5.0),
        f0: Arc::new(move |x, v| {
            let g = |w: f64| (-(w * w) / (2.0 * vth * vth)).exp();
            c * (g(v - u) + g(v + u)) * (1.0 + alpha * (k_wave * x).cos())
        }),
        params: params(&[("alpha", alpha), ("k_wave", k_wave), ("u", u), ("vth", vth)]),
        defaults,
        full_defaults: RunDefaults { nx: 256, nv: 256, final_time: 80.0, ..defaults },
    })
}

/// Landau profile with a tiny amplitude on the wide velocity domain, run at `λ = 0`.
pub fn near_equilibrium(alpha: f64) -> Result<Scenario> {
    let mut sc = landau(alpha, 0.5)?;
    sc.name = "near_equilibrium".into();
    sc.v_bounds = (-12.0, 12.0);
    sc.defaults = RunDefaults { nx: 128, nv: 128, degree: 1, cfl: 1.0, final_time: 5.0, debye: 0.0 };
    sc.full_defaults = RunDefaults { final_time: 80.0, ..sc.defaults };
    Ok(sc)
}

/// `f_p(v)(1 + α cos(0.3x))` with a drifting bump; `α` and the v-domain depend on `λ`.
pub fn bump_on_tail(debye: f64) -> Result<Scenario> {
    if !(debye >= 0.0) {
        return Err(Error::Config(format!("Debye length must be >= 0, got {debye}")));
    }
    let k_wave = 0.3;
    let alpha = 0.04 * (0.01 + 0.99 * debye);
    let s2p = (2.0 * PI).sqrt();
    let (np, nb, u, rt) = (9.0 / (10.0 * s2p), 2.0 / (10.0 * s2p), 4.5, 0.25);
    let v_bounds = if debye > 1e-3 { (-6.0, 9.0) } else { (-12.0, 12.0) };
    let defaults = RunDefaults { nx: 128, nv: 128, degree: 2, cfl: 1.0, final_time: 5.0, debye };
    Ok(Scenario {
        name: "bump_on_tail".into(),
        x_bounds: (0.0, 2.0 * PI / k_wave),
        v_bounds,
        f0: Arc::new(move |x, v| {
            let fp = np * (-v * v / 2.0).exp() + nb * (-(v - u) * (v - u) / (2.0 * rt)).exp();
            fp * (1.0 + alpha * (k_wave * x).cos())
        }),
        params: params(&[
            ("alpha", alpha),
            ("k_wave", k_wave),
            ("lambda", debye),
            ("n_p", np),
            ("n_b", nb),
            ("u", u),
            ("RT", rt),
        ]),
        defaults,
        full_defaults: RunDefaults { nx: 256, nv: 256, final_time: 40.0, ..defaults },
    })
}

/// Residuals of the compatibility conditions at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WellPreparedReport {
    pub passed: bool,
    pub tolerance: f64,
    pub residuals: Vec<(&'static str, f64)>,
}

impl fmt::Display for WellPreparedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.passed { "well-prepared" } else { "NOT well-prepared" })?;
        for (name, r) in &self.residuals {
            write!(f, " {name}={r:.3e}")?;
        }
        write!(f, " (tol {:.1e})", self.tolerance)
    }
}

/// For `λ = 0` checks `‖ρ-1‖₂` and `‖DJ‖₂`. For `λ > 0` checks
/// `‖λ²D²φ - (ρ-ρ̄)‖₂`, `‖λ²D²ψ + DJ‖₂` with `ψ = ∂tφ` from a second Poisson solve,
/// and the net charge `|ρ̄ - 1| √L` that no periodic potential can balance.
pub fn validate_well_prepared(
    f: &PhaseField,
    basis: &NodalBasis,
    ws: &SpectralWorkspace,
    debye: f64,
    tol: f64,
) -> Result<WellPreparedReport> {
    let residuals = if debye == 0.0 {
        let (rho_dev, div_j) = quasineutral_deviation(f, basis, ws);
        vec![("rho_minus_1", rho_dev), ("div_J", div_j)]
    } else {
        let m = compute_moments(f, basis);
        let dx = f.x.width();
        let norm = |a: &[f64]| (a.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
        let lam2 = debye * debye;
        let phi = ws.solve_poisson(&m.rho, debye)?.phi;
        let d2phi = ws.derivative(&ws.derivative(&phi));
        let mean = m.rho.iter().sum::<f64>() / m.rho.len() as f64;
        let r1: Vec<f64> = (0..m.rho.len()).map(|j| lam2 * d2phi[j] - (m.rho[j] - mean)).collect();
        let dj = ws.derivative(&m.current);
        let shifted: Vec<f64> = dj.iter().map(|d| 1.0 - d).collect();
        let psi = ws.solve_poisson(&shifted, debye)?.phi;
        let d2psi = ws.derivative(&ws.derivative(&psi));
        let r2: Vec<f64> = (0..dj.len()).map(|j| lam2 * d2psi[j] + dj[j]).collect();
        let net_charge = (mean - 1.0).abs() * (f.x.length()).sqrt();
        vec![("poisson", norm(&r1)), ("poisson_dt", norm(&r2)), ("net_charge", net_charge)]
    };
    let passed = residuals.iter().all(|(_, r)| *r <= tol);
    Ok(WellPreparedReport { passed, tolerance: tol, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::mass;

    #[test]
    fn landau_values() {
        let sc = landau(0.5, 0.5).unwrap();
        assert!((sc.eval(0.0, 0.0) - 0.598413).abs() < 1e-6);
        assert_eq!(sc.x_bounds, (0.0, 4.0 * PI));
        assert!(landau(1.0, 0.5).is_err());
        let b = NodalBasis::new(2).unwrap();
        for alpha in [0.0, 0.5] {
            let s = landau(alpha, 0.5).unwrap();
            let f = s.sample(32, 64, &b).unwrap();
            // truncation of the Gaussian tail outside [-5, 5]
            assert!((mass(&f, &b) / (4.0 * PI) - 1.0).abs() < 1e-6);
        }
        let flat = landau(0.0, 0.5).unwrap().sample(8, 64, &b).unwrap();
        let rho = compute_moments(&flat, &b).rho;
        let erf5 = 1.0 - 5.733031437583878e-7;
        assert!(rho.iter().all(|r| (r - erf5).abs() < 1e-9));
    }

    #[test]
    fn two_stream_values() {
        let ts1 = two_stream_1_with(0.0, 0.5).unwrap();
        assert!((ts1.eval(1.3, 0.0) - 2.0 / (7.0 * (2.0 * PI).sqrt())).abs() < 1e-15);
        assert!((ts1.eval(0.0, 0.0) - 0.11398351).abs() < 1e-8);
        let b = NodalBasis::new(2).unwrap();
        let f = ts1.sample(8, 128, &b).unwrap();
        let rho = compute_moments(&f, &b).rho;
        assert!(rho.iter().all(|r| (r - 12.0 / 7.0).abs() < 1e-9));
        assert!(two_stream_1().sample(16, 64, &b).unwrap().min_value() >= 0.0);

        let ts2 = two_stream_2();
        let x0 = PI / 2.0 / (2.0 / 13.0);
        let want = (1.0 + (-2.0 * 0.99f64.powi(2) / 0.09).exp()) / (2.0 * 0.3 * (2.0 * PI).sqrt());
        assert!((ts2.eval(x0, 0.99) - want).abs() < 1e-12);
        assert!((want - 0.664904).abs() < 1e-6);
        assert_eq!(ts2.eval(3.0, 0.7), ts2.eval(3.0, -0.7));
        let f = ts2.sample(32, 128, &b).unwrap();
        assert!((mass(&f, &b) / (13.0 * PI) - 1.0).abs() < 1e-6);
        assert_eq!(ts2.defaults.cfl, 3.0);
    }

    #[test]
    fn bump_values() {
        assert!((bump_on_tail(1.0).unwrap().param("alpha").unwrap() - 0.04).abs() < 1e-15);
        assert!((bump_on_tail(0.0).unwrap().param("alpha").unwrap() - 0.0004).abs() < 1e-15);
        assert_eq!(bump_on_tail(0.1).unwrap().v_bounds, (-6.0, 9.0));
        assert_eq!(bump_on_tail(1e-6).unwrap().v_bounds, (-12.0, 12.0));
        let sc = bump_on_tail(1e-6).unwrap();
        let np = sc.param("n_p").unwrap();
        let nb = sc.param("n_b").unwrap();
        assert!((np * (2.0 * PI).sqrt() + nb * (2.0 * PI * 0.25).sqrt() - 1.0).abs() < 1e-15);
        let b = NodalBasis::new(2).unwrap();
        let f = sc.sample(16, 128, &b).unwrap();
        let len = sc.x_bounds.1;
        assert!((mass(&f, &b) / len - 1.0).abs() < 1e-6);
        // the narrower domain truncates the core Maxwellian at -6
        let g = bump_on_tail(0.1).unwrap().sample(16, 128, &b).unwrap();
        assert!((mass(&g, &b) / len - 1.0).abs() < 1e-6);
    }

    #[test]
    fn well_preparedness() {
        let b = NodalBasis::new(1).unwrap();
        let ne = near_equilibrium(1e-16).unwrap();
        let f = ne.sample(32, 128, &b).unwrap();
        let ws = SpectralWorkspace::new(ne.x_grid(32).unwrap(), &b);
        let rho = compute_moments(&f, &b).rho;
        assert!(rho.iter().all(|r| (r - 1.0).abs() < 1e-15));
        assert!(compute_moments(&f, &b).current.iter().all(|j| j.abs() < 1e-16));
        assert!(validate_well_prepared(&f, &b, &ws, 0.0, 1e-12).unwrap().passed);
        let l = landau(0.5, 0.5).unwrap();
        let g = l.sample(32, 64, &b).unwrap();
        let rep = validate_well_prepared(&g, &b, &ws, 0.0, 1e-12).unwrap();
        assert!(!rep.passed);
        assert!(rep.to_string().starts_with("NOT"));
        let rep = validate_well_prepared(&g, &b, &ws, 1.0, 1e-10).unwrap();
        assert!(rep.residuals[0].1 <= 1e-10, "{rep}");
        // the Gaussian tail outside [-5, 5] leaves a net charge of 5.7e-7
        assert!((rep.residuals[2].1 - 5.733031437583878e-7 * (4.0 * PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn by_name() {
        for name in SCENARIO_NAMES {
            let sc = Scenario::from_name(name, &BTreeMap::new()).unwrap();
            assert_eq!(sc.name, name);
        }
        let mut ov = BTreeMap::new();
        ov.insert("alpha".to_string(), 0.1);
        assert_eq!(Scenario::from_name("landau", &ov).unwrap().param("alpha"), Some(0.1));
        ov.insert("bogus".to_string(), 1.0);
        assert!(Scenario::from_name("landau", &ov).is_err());
        assert!(Scenario::from_name("nope", &BTreeMap::new()).is_err());
    }

    #[test]
    fn all_scenarios_nonnegative_at_gauss_points() {
        let b = NodalBasis::new(3).unwrap();
        for name in SCENARIO_NAMES {
            let sc = Scenario::from_name(name, &BTreeMap::new()).unwrap();
            assert!(sc.sample(16, 32, &b).unwrap().min_value() >= 0.0, "{name}");
        }
    }
}
