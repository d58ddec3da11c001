//! Run orchestration: configuration files, diagnostics output, the time-reversal
//! convergence harness, parameter sweeps and the von Neumann sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ini::Ini;

use crate::diagnostics::{record, DiagRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::field_solver::EllipticMethod;
use crate::limiter::LimiterParams;
use crate::par::{map_collect, Parallelism};
use crate::phase_space::{l2_norm, reflect_v, Grid1D, PhaseField};
use crate::scenarios::{validate_well_prepared, Scenario, WellPreparedReport};
use crate::splitting::{integrate, is_blow_up, RunState, Scheme, SchemeConfig, Stepper, StopReason};
use crate::vn_stability;

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub scenario_overrides: BTreeMap<String, f64>,
    pub nx: usize,
    pub nv: usize,
    pub scheme: SchemeConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    /// Where CSV, snapshots and summary go; `None` keeps everything in memory.
    pub dir: Option<PathBuf>,
    /// Record every `n` steps.
    pub every_steps: Option<usize>,
    /// Record every `τ` of simulated time (steps are clipped to land on it).
    pub every_time: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key} = '{raw}' is not a valid number")))
}

fn parse_bool(section: &str, key: &str, raw: &str) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("[{section}] {key} = '{raw}' is not a boolean"))),
    }
}

fn parse_list(section: &str, key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(section, key, s))
        .collect()
}

impl RunConfig {
    /// Default configuration of a named scenario.
    pub fn for_scenario(name: &str) -> Result<Self> {
        let sc = Scenario::from_name(name, &BTreeMap::new())?;
        let d = sc.defaults;
        Ok(Self {
            scenario: sc.name.clone(),
            scenario_overrides: BTreeMap::new(),
            nx: d.nx,
            nv: d.nv,
            scheme: SchemeConfig {
                degree: d.degree,
                debye: d.debye,
                cfl: d.cfl,
                final_time: d.final_time,
                ..SchemeConfig::default()
            },
            output: OutputConfig::default(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_ini_str(&text)
    }

    /// Parses `[scenario]`, `[scheme]` and `[output]` sections.
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        for (sec, _) in ini.iter() {
            match sec {
                None | Some("scenario") | Some("scheme") | Some("output") => {}
                Some(other) => return Err(Error::Config(format!("unknown section [{other}]"))),
            }
        }
        let sc_sec = ini
            .section(Some("scenario"))
            .ok_or_else(|| Error::Config("missing [scenario] section".into()))?;
        let name = sc_sec
            .get("name")
            .ok_or_else(|| Error::Config("[scenario] needs name".into()))?;
        let mut cfg = Self::for_scenario(name)?;
        for (key, val) in sc_sec.iter() {
            match key {
                "name" => {}
                "nx" => cfg.nx = parse_num("scenario", key, val)?,
                "nv" => cfg.nv = parse_num("scenario", key, val)?,
                "alpha" | "k_wave" | "lambda" | "vmin" | "vmax" => {
                    cfg.scenario_overrides.insert(key.to_string(), parse_num("scenario", key, val)?);
                }
                other => return Err(Error::Config(format!("unknown [scenario] key '{other}'"))),
            }
        }
        if let Some(sec) = ini.section(Some("scheme")) {
            let s = &mut cfg.scheme;
            for (key, val) in sec.iter() {
                match key {
                    "scheme" => s.scheme = val.parse()?,
                    "degree" | "k" => s.degree = parse_num("scheme", key, val)?,
                    "lambda" | "debye" => s.debye = parse_num("scheme", key, val)?,
                    "cfl" => s.cfl = parse_num("scheme", key, val)?,
                    "T" | "final_time" => s.final_time = parse_num("scheme", key, val)?,
                    "dt" => s.fixed_dt = Some(parse_num("scheme", key, val)?),
                    "moments_source" => s.moments_source = val.parse()?,
                    "limiter" => {
                        let on = parse_bool("scheme", key, val)?;
                        s.limiter = on.then(|| s.limiter.unwrap_or_default());
                    }
                    "limiter_floor" => {
                        let floor = parse_num("scheme", key, val)?;
                        s.limiter = Some(LimiterParams { floor });
                    }
                    "monitor" => s.monitor = parse_bool("scheme", key, val)?,
                    "parallel" => {
                        s.parallelism = if parse_bool("scheme", key, val)? {
                            Parallelism::Parallel
                        } else {
                            Parallelism::Serial
                        }
                    }
                    "elliptic" => {
                        s.elliptic = match val.trim() {
                            "factored" => EllipticMethod::Factored,
                            "dense" => EllipticMethod::Dense,
                            other => return Err(Error::Config(format!("unknown elliptic method '{other}'"))),
                        }
                    }
                    other => return Err(Error::Config(format!("unknown [scheme] key '{other}'"))),
                }
            }
        }
        if let Some(sec) = ini.section(Some("output")) {
            let o = &mut cfg.output;
            for (key, val) in sec.iter() {
                match key {
                    "dir" => o.dir = Some(PathBuf::from(val.trim())),
                    "every" | "every_steps" => o.every_steps = Some(parse_num("output", key, val)?),
                    "every_time" => o.every_time = Some(parse_num("output", key, val)?),
                    "snapshots" => o.snapshot_times = parse_list("output", key, val)?,
                    other => return Err(Error::Config(format!("unknown [output] key '{other}'"))),
                }
            }
        }
        // the bump-on-tail profile follows the run's Debye length unless pinned
        if cfg.scenario == "bump_on_tail" && !cfg.scenario_overrides.contains_key("lambda") {
            cfg.scenario_overrides.insert("lambda".into(), cfg.scheme.debye);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nv == 0 {
            return Err(Error::Config(format!("mesh must be non-empty, got {}x{}", self.nx, self.nv)));
        }
        self.scheme.validate()?;
        if self.output.every_steps == Some(0) {
            return Err(Error::Config("[output] every must be >= 1".into()));
        }
        if let Some(t) = self.output.every_time {
            if !(t > 0.0) {
                return Err(Error::Config(format!("[output] every_time must be positive, got {t}")));
            }
        }
        self.build_scenario().map(|_| ())
    }

    /// Switches mesh and final time to the full-length settings.
    pub fn full_scale(mut self) -> Result<Self> {
        let sc = self.build_scenario()?;
        let p = sc.full_defaults;
        self.nx = p.nx;
        self.nv = p.nv;
        self.scheme.final_time = p.final_time;
        Ok(self)
    }

    pub fn build_scenario(&self) -> Result<Scenario> {
        Scenario::from_name(&self.scenario, &self.scenario_overrides)
    }

    /// Round-trips into the INI format read by [`RunConfig::from_ini_str`].
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]\nname = {}\nnx = {}\nnv = {}", self.scenario, self.nx, self.nv);
        for (k, v) in &self.scenario_overrides {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        let c = &self.scheme;
        let _ = writeln!(
            s,
            "\n[scheme]\nscheme = {}\ndegree = {}\nlambda = {:e}\ncfl = {:e}\nT = {:e}",
            c.scheme, c.degree, c.debye, c.cfl, c.final_time
        );
        if let Some(dt) = c.fixed_dt {
            let _ = writeln!(s, "dt = {dt:e}");
        }
        let _ = writeln!(s, "moments_source = {}", c.moments_source);
        match c.limiter {
            Some(l) => {
                let _ = writeln!(s, "limiter_floor = {:e}", l.floor);
            }
            None => {
                let _ = writeln!(s, "limiter = off");
            }
        }
        let _ = writeln!(s, "monitor = {}", c.monitor);
        let _ = writeln!(s, "parallel = {}", c.parallelism == Parallelism::Parallel);
        let el = match c.elliptic {
            EllipticMethod::Factored => "factored",
            EllipticMethod::Dense => "dense",
        };
        let _ = writeln!(s, "elliptic = {el}");
        let o = &self.output;
        s.push_str("\n[output]\n");
        if let Some(d) = &o.dir {
            let _ = writeln!(s, "dir = {}", d.display());
        }
        if let Some(n) = o.every_steps {
            let _ = writeln!(s, "every = {n}");
        }
        if let Some(t) = o.every_time {
            let _ = writeln!(s, "every_time = {t:e}");
        }
        if !o.snapshot_times.is_empty() {
            let list: Vec<String> = o.snapshot_times.iter().map(|t| format!("{t:e}")).collect();
            let _ = writeln!(s, "snapshots = {}", list.join(","));
        }
        s
    }
}

/// Outcome of one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub scenario: String,
    pub scheme: Scheme,
    pub records: Vec<DiagRecord>,
    /// Reason the run was cut short, if it was.
    pub blow_up: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub wall_time: Duration,
    pub limiter_activations: usize,
    pub mean_violations: usize,
    /// Largest per-sub-step relative L² growth (only with `monitor`).
    pub max_l2_growth: f64,
    /// Smallest nodal value seen after any sub-step (only with `monitor`), else at records.
    pub min_value: f64,
    pub well_prepared: Option<WellPreparedReport>,
    pub final_field: PhaseField,
}

impl RunSummary {
    pub fn peak_eps_p(&self) -> f64 {
        self.records.iter().map(|r| r.eps_p).fold(0.0, f64::max)
    }

    pub fn max_mass_deviation(&self) -> f64 {
        let m0 = self.records.first().map(|r| r.mass).unwrap_or(0.0);
        self.records
            .iter()
            .map(|r| ((r.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "blow_up = {}", self.blow_up.is_some());
        if let Some(why) = &self.blow_up {
            let _ = writeln!(s, "blow_up_reason = {why}");
        }
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "final_time = {:.17e}", self.final_time);
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time.as_secs_f64());
        let _ = writeln!(s, "records = {}", self.records.len());
        let _ = writeln!(s, "peak_eps_p = {:.17e}", self.peak_eps_p());
        let _ = writeln!(s, "max_mass_deviation = {:.17e}", self.max_mass_deviation());
        let _ = writeln!(s, "limiter_activations = {}", self.limiter_activations);
        let _ = writeln!(s, "mean_violations = {}", self.mean_violations);
        let _ = writeln!(s, "max_l2_growth = {:.17e}", self.max_l2_growth);
        let _ = writeln!(s, "min_value = {:.17e}", self.min_value);
        if let Some(w) = &self.well_prepared {
            let _ = writeln!(s, "well_prepared = {w}");
        }
        s
    }
}

/// Writes a field snapshot: a header line then one value per line in `(j,i,q,p)` order.
pub fn write_snapshot(path: &Path, f: &PhaseField, t: f64) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "# Nx={} Nv={} k={} x=[{:.17e},{:.17e}] v=[{:.17e},{:.17e}] t={:.17e}",
        f.x.cells(),
        f.v.cells(),
        f.degree,
        f.x.lower(),
        f.x.upper(),
        f.v.lower(),
        f.v.upper(),
        t
    )?;
    for v in &f.values {
        writeln!(out, "{v:.17e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(PhaseField, f64)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("empty snapshot".into()))?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k, v);
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Input(format!("snapshot header lacks {k}")));
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Input(format!("bad number '{s}' in snapshot")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Input(format!("bad integer '{s}' in snapshot")));
    let bounds = |s: &str| -> Result<(f64, f64)> {
        let inner = s.trim_start_matches('[').trim_end_matches(']');
        let (a, b) = inner.split_once(',').ok_or_else(|| Error::Input(format!("bad bounds '{s}'")))?;
        Ok((num(a)?, num(b)?))
    };
    let (xl, xu) = bounds(get("x")?)?;
    let (vl, vu) = bounds(get("v")?)?;
    let x = Grid1D::new(xl, xu, int(get("Nx")?)?)?;
    let v = Grid1D::new(vl, vu, int(get("Nv")?)?)?;
    let mut f = PhaseField::zeros(x, v, int(get("k")?)?);
    let t = num(get("t")?)?;
    let mut count = 0;
    for (slot, line) in f.values.iter_mut().zip(lines.by_ref()) {
        *slot = num(line.trim())?;
        count += 1;
    }
    if count != f.values.len() || lines.next().is_some_and(|l| !l.trim().is_empty()) {
        return Err(Error::Input(format!("snapshot has wrong number of values (expected {})", f.values.len())));
    }
    Ok((f, t))
}

/// Runs one configuration to completion, writing files if an output directory is set.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let sc = cfg.build_scenario()?;
    let stepper = Stepper::new(cfg.scheme.clone(), sc.x_grid(cfg.nx)?, sc.v_grid(cfg.nv)?)?;
    let f0 = sc.sample(cfg.nx, cfg.nv, stepper.basis())?;
    let well_prepared = validate_well_prepared(&f0, stepper.basis(), stepper.workspace(), cfg.scheme.debye, 1e-10).ok();
    let potential = stepper.initial_potential(&f0)?;
    let debye = cfg.scheme.debye;
    let dt0 = stepper.dt_for(potential.max_abs_e())?;

    let mut csv = match &cfg.output.dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut w = std::io::BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?);
            writeln!(w, "{CSV_HEADER}")?;
            Some(w)
        }
        None => None,
    };

    let mut records = Vec::new();
    let first = record(&f0, &potential, stepper.basis(), stepper.workspace(), debye, 0.0, dt0);
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{}", first.csv_row())?;
    }
    records.push(first);

    let t_end = cfg.scheme.final_time;
    let mut stops: Vec<f64> = cfg.output.snapshot_times.iter().copied().filter(|t| *t <= t_end).collect();
    if let Some(tau) = cfg.output.every_time {
        let n = (t_end / tau).floor() as usize;
        stops.extend((1..=n).map(|m| m as f64 * tau));
    }
    let snapshot_at = |t: f64| cfg.output.snapshot_times.iter().any(|s| (s - t).abs() <= 1e-12 * s.abs().max(1.0));
    if let Some(dir) = &cfg.output.dir {
        if snapshot_at(0.0) {
            write_snapshot(&dir.join(snapshot_name(0.0)), &f0, 0.0)?;
        }
    }

    let mut state = RunState {
        f: f0,
        potential,
        t: 0.0,
        steps: 0,
    };
    let mut limiter_activations = 0;
    let mut mean_violations = 0;
    let mut max_l2_growth = f64::NEG_INFINITY;
    let mut min_value = state.f.min_value();
    let mut io_error: Option<Error> = None;
    let every_steps = cfg.output.every_steps;
    let every_time = cfg.output.every_time;

    let outcome = integrate(&stepper, &mut state, t_end, &stops, |s, rep| {
        limiter_activations += rep.limiter.scaled;
        mean_violations += rep.limiter.mean_violations;
        for c in &rep.checks {
            max_l2_growth = max_l2_growth.max(c.l2_growth());
            min_value = min_value.min(c.min_after);
        }
        let on_cadence = match (every_steps, every_time) {
            (Some(n), _) => s.steps % n == 0,
            (None, Some(tau)) => {
                let m = (s.t / tau).round();
                m >= 1.0 && (s.t - m * tau).abs() <= 1e-9 * tau
            }
            (None, None) => true,
        };
        let at_end = s.t >= t_end
            || is_blow_up(&s.f, rep.max_e, crate::diagnostics::edge_mass_fraction(&s.f, stepper.basis()));
        if on_cadence || at_end {
            let r = record(&s.f, &s.potential, stepper.basis(), stepper.workspace(), debye, s.t, rep.dt);
            min_value = min_value.min(s.f.min_value());
            if let Some(w) = csv.as_mut() {
                if let Err(e) = writeln!(w, "{}", r.csv_row()) {
                    io_error.get_or_insert(e.into());
                }
            }
            records.push(r);
        }
        if let Some(dir) = &cfg.output.dir {
            if snapshot_at(s.t) {
                if let Err(e) = write_snapshot(&dir.join(snapshot_name(s.t)), &s.f, s.t) {
                    io_error.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let blow_up = match outcome {
        Ok(StopReason::Finished) => None,
        Ok(StopReason::BlowUp { t, max_e, edge_fraction }) => Some(format!(
            "at t = {t}: max|E| = {max_e:e}, velocity-boundary mass fraction = {edge_fraction:e}"
        )),
        // a solver failure after the first step is a numerical breakdown of the run
        Err(Error::Solver(msg)) if state.steps > 0 => Some(format!("solver failure at t = {}: {msg}", state.t)),
        Err(e) => return Err(e),
    };
    if let Some(w) = csv.as_mut() {
        w.flush()?;
    }
    let summary = RunSummary {
        scenario: cfg.scenario.clone(),
        scheme: cfg.scheme.scheme,
        records,
        blow_up,
        steps: state.steps,
        final_time: state.t,
        wall_time: start.elapsed(),
        limiter_activations,
        mean_violations,
        max_l2_growth,
        min_value,
        well_prepared,
        final_field: state.f,
    };
    if mean_violations > 0 {
        log::warn!("{mean_violations} cell means fell below the positivity floor and were flattened");
    }
    if let Some(dir) = &cfg.output.dir {
        fs::write(dir.join("summary.txt"), summary.to_text())?;
    }
    Ok(summary)
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t:.6}.txt")
}

/// One row of the reversal convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub error: f64,
    pub order: Option<f64>,
    pub min_value: f64,
    pub max_l2_growth: f64,
}

/// Options of [`convergence_reversal`] beyond scenario, degree, meshes and `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversalOptions {
    pub scheme: SchemeConfig,
    /// `Δt = dt_factor · min(Δx, Δv)^{k+1}`, rounded down to divide `T`.
    pub dt_factor: f64,
}

impl Default for ReversalOptions {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig {
                monitor: true,
                ..SchemeConfig::default()
            },
            dt_factor: 0.1,
        }
    }
}

/// Advances to `T`, flips `v → -v`, advances another `T`, flips back and
/// compares with the initial field in the discrete L² norm.
pub fn convergence_reversal(
    scenario: &Scenario,
    degree: usize,
    meshes: &[usize],
    final_time: f64,
    opts: &ReversalOptions,
) -> Result<Vec<ConvergenceRow>> {
    if !(final_time >= 0.0) {
        return Err(Error::Config(format!("reversal time must be >= 0, got {final_time}")));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for &cells in meshes {
        let cfg = SchemeConfig {
            degree,
            final_time,
            ..opts.scheme.clone()
        };
        let x = scenario.x_grid(cells)?;
        let v = scenario.v_grid(cells)?;
        let stepper = Stepper::new(cfg, x, v)?;
        let f0 = scenario.sample(cells, cells, stepper.basis())?;
        // fail early on an asymmetric velocity domain
        reflect_v(&f0)?;
        let h = x.width().min(v.width());
        let dt_target = opts.dt_factor * h.powi(degree as i32 + 1);
        let steps = if final_time == 0.0 { 0 } else { (final_time / dt_target).ceil() as usize };
        let dt = if steps == 0 { 0.0 } else { final_time / steps as f64 };
        let mut f = f0.clone();
        let mut min_value = f.min_value();
        let mut growth = f64::NEG_INFINITY;
        for _ in 0..2 {
            for _ in 0..steps {
                let (g, _, rep) = stepper.advance(&f, dt)?;
                for c in &rep.checks {
                    growth = growth.max(c.l2_growth());
                    min_value = min_value.min(c.min_after);
                }
                f = g;
            }
            f = reflect_v(&f)?;
        }
        let diff = PhaseField {
            values: f.values.iter().zip(&f0.values).map(|(a, b)| a - b).collect(),
            ..f0.clone()
        };
        let error = l2_norm(&diff, stepper.basis());
        let order = rows
            .last()
            .filter(|prev| prev.error > 0.0 && error > 0.0)
            .map(|prev| (prev.error / error).log2() / (cells as f64 / prev.cells as f64).log2());
        rows.push(ConvergenceRow {
            cells,
            dt,
            steps,
            error,
            order,
            min_value,
            max_l2_growth: growth,
        });
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("mesh,dt,steps,l2_error,order\n");
    for r in rows {
        let order = r.order.map(|o| format!("{o:.17e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{:.17e},{},{:.17e},{}", r.cells, r.dt, r.steps, r.error, order);
    }
    s
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Cfl(Vec<f64>),
    Debye(Vec<f64>),
    /// Square meshes `N × N`.
    Mesh(Vec<usize>),
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    /// `cfl=1,3,5`, `lambda=1e-3,1e-6,0` or `mesh=32,64`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, list) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep axis '{s}' must look like name=v1,v2,...")))?;
        let nums = parse_list("sweep", name, list)?;
        match name.trim() {
            "cfl" => Ok(SweepAxis::Cfl(nums)),
            "lambda" | "debye" => Ok(SweepAxis::Debye(nums)),
            "mesh" => nums
                .iter()
                .map(|v| {
                    if *v >= 1.0 && v.fract() == 0.0 {
                        Ok(*v as usize)
                    } else {
                        Err(Error::Config(format!("mesh size {v} is not a positive integer")))
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(SweepAxis::Mesh),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl SweepAxis {
    fn labels_and_configs(&self, base: &RunConfig) -> Vec<(String, RunConfig)> {
        match self {
            SweepAxis::Cfl(vals) => vals
                .iter()
                .map(|&c| {
                    let mut cfg = base.clone();
                    cfg.scheme.cfl = c;
                    (format!("cfl={c}"), cfg)
                })
                .collect(),
            SweepAxis::Debye(vals) => vals
                .iter()
                .map(|&l| {
                    let mut cfg = base.clone();
                    cfg.scheme.debye = l;
                    if cfg.scenario == "bump_on_tail" {
                        cfg.scenario_overrides.insert("lambda".into(), l);
                    }
                    (format!("lambda={l}"), cfg)
                })
                .collect(),
            SweepAxis::Mesh(vals) => vals
                .iter()
                .map(|&n| {
                    let mut cfg = base.clone();
                    cfg.nx = n;
                    cfg.nv = n;
                    (format!("mesh={n}"), cfg)
                })
                .collect(),
        }
    }
}

/// Runs the template once per axis value; each run writes into its own
/// sub-directory of the template's output directory. Returns `(label, summary)`.
pub fn sweep(template: &RunConfig, axis: &SweepAxis) -> Result<Vec<(String, RunSummary)>> {
    let runs = axis.labels_and_configs(template);
    let mut out = Vec::with_capacity(runs.len());
    for (label, mut cfg) in runs {
        if let Some(dir) = &template.output.dir {
            cfg.output.dir = Some(dir.join(label.replace(['=', '/'], "_")));
        }
        out.push((label, run(&cfg)?));
    }
    if let Some(dir) = &template.output.dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), sweep_csv(&out))?;
    }
    Ok(out)
}

/// Combined CSV: the run label followed by every diagnostics column.
pub fn sweep_csv(runs: &[(String, RunSummary)]) -> String {
    let mut s = format!("run,{CSV_HEADER}\n");
    for (label, summary) in runs {
        for r in &summary.records {
            let _ = writeln!(s, "{label},{}", r.csv_row());
        }
    }
    s
}

/// One row of the von Neumann sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VnRow {
    pub debye: f64,
    pub dt: f64,
    pub wavenumber: f64,
    pub max_modulus: f64,
    pub mu3_modulus: f64,
    pub closed_form_error: f64,
}

/// `n` evenly spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Eigen-analysis over a `(λ, Δt, κ)` grid.
pub fn vn_check(debyes: &[f64], dts: &[f64], wavenumbers: &[f64], mode: Parallelism) -> Result<Vec<VnRow>> {
    let cases: Vec<(f64, f64, f64)> = debyes
        .iter()
        .flat_map(|&l| dts.iter().flat_map(move |&d| wavenumbers.iter().map(move |&k| (l, d, k))))
        .collect();
    map_collect(mode, cases.len(), |idx| {
        let (l, d, k) = cases[idx];
        let vals = vn_stability::eigenvalues(l, d, k)?;
        Ok(VnRow {
            debye: l,
            dt: d,
            wavenumber: k,
            max_modulus: vals[0].norm(),
            mu3_modulus: vals[2].norm(),
            closed_form_error: vn_stability::closed_form_mismatch(&vals, l, d)?,
        })
    })
    .into_iter()
    .collect()
}

pub fn vn_csv(rows: &[VnRow]) -> String {
    let mut s = String::from("lambda,dt,kappa,max_modulus,mu3_modulus,closed_form_error\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.debye, r.dt, r.wavenumber, r.max_modulus, r.mu3_modulus, r.closed_form_error
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::MomentsSource;

    const CONFIG: &str = "
[scenario]
name = landau
nx = 16
nv = 32
alpha = 0.3

[scheme]
scheme = ap_csldg_2
degree = 1
lambda = 0.5
cfl = 2
T = 0.5
moments_source = post_advection
monitor = on

[output]
every = 2
snapshots = 0.25
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_ini_str(CONFIG).unwrap();
        assert_eq!(cfg.nx, 16);
        assert_eq!(cfg.scheme.scheme, Scheme::ApCsldg2);
        assert_eq!(cfg.scheme.moments_source, MomentsSource::PostAdvection);
        assert_eq!(cfg.scenario_overrides["alpha"], 0.3);
        assert_eq!(cfg.output.snapshot_times, vec![0.25]);
        let again = RunConfig::from_ini_str(&cfg.to_ini_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "[scheme]\ncfl = 1",
            "[scenario]\nname = nowhere",
            "[scenario]\nname = landau\n[scheme]\ncfl = -1",
            "[scenario]\nname = landau\n[scheme]\ncfl = abc",
            "[scenario]\nname = landau\n[scheme]\nscheme = reference_csldg\nlambda = 0",
            "[scenario]\nname = landau\nfoo = 1",
            "[scenario]\nname = landau\n[extra]\na = 1",
        ] {
            assert!(matches!(RunConfig::from_ini_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn in_memory_run() {
        let mut cfg = RunConfig::from_ini_str(CONFIG).unwrap();
        cfg.output.every_steps = None;
        let s = run(&cfg).unwrap();
        assert!(s.blow_up.is_none());
        assert_eq!(s.final_time, 0.5);
        assert_eq!(s.records.len(), s.steps + 1);
        assert!(s.max_mass_deviation() < 1e-12);
        assert!(s.max_l2_growth <= 1e-12);
        assert!(s.min_value >= 0.0);
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sc = crate::scenarios::landau(0.5, 0.5).unwrap();
        let b = crate::quad_basis::NodalBasis::new(2).unwrap();
        let f = sc.sample(4, 6, &b).unwrap();
        let p = dir.path().join("s.txt");
        write_snapshot(&p, &f, 1.25).unwrap();
        let (g, t) = read_snapshot(&p).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(g, f);
    }

    #[test]
    fn reversal_degenerate_and_asymmetric() {
        let sc = crate::scenarios::landau(0.5, 0.5).unwrap();
        let rows = convergence_reversal(&sc, 1, &[8, 16], 0.0, &ReversalOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.error == 0.0 && r.order.is_none()));
        let bump = crate::scenarios::bump_on_tail(1.0).unwrap();
        assert!(matches!(
            convergence_reversal(&bump, 1, &[8], 0.1, &ReversalOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!("cfl=1,3,5".parse::<SweepAxis>().unwrap(), SweepAxis::Cfl(vec![1.0, 3.0, 5.0]));
        assert_eq!("mesh=16,32".parse::<SweepAxis>().unwrap(), SweepAxis::Mesh(vec![16, 32]));
        assert_eq!("lambda=".parse::<SweepAxis>().unwrap(), SweepAxis::Debye(vec![]));
        assert!("mesh=1.5".parse::<SweepAxis>().is_err());
        assert!("speed=1".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn empty_sweep_is_noop() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::for_scenario("landau").unwrap();
        cfg.output.dir = Some(dir.path().join("sw"));
        let out = sweep(&cfg, &SweepAxis::Cfl(vec![])).unwrap();
        assert!(out.is_empty());
        let csv = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
        assert_eq!(csv.trim(), format!("run,{CSV_HEADER}"));
    }

    #[test]
    fn vn_rows() {
        let rows = vn_check(&[0.0, 1.0], &[0.5, 1.0], &[1.0], Parallelism::Serial).unwrap();
        assert_eq!(rows.len(), 4);
        let r = rows.iter().find(|r| r.debye == 1.0 && r.dt == 1.0).unwrap();
        assert!((r.mu3_modulus - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(vn_csv(&rows).lines().count() == 5);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
