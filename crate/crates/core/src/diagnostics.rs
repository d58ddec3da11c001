//! Conserved quantities and quasi-neutral deviation recorded along a run.

use crate::field_solver::{PotentialField, SpectralWorkspace};
use crate::limiter::DEFAULT_FLOOR;
use crate::moments::compute_moments;
use crate::phase_space::PhaseField;
use crate::quad_basis::NodalBasis;

/// Bit-exact CSV header for [`DiagRecord::csv_row`].
pub const CSV_HEADER: &str = "t,mass,l1,l2,entropy,energy,eps_p,log10_eps_p,rho_dev_l2,divJ_l2,dt,maxE";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub entropy: f64,
    pub energy: f64,
    pub eps_p: f64,
    pub log10_eps_p: f64,
    pub rho_dev_l2: f64,
    pub div_j_l2: f64,
    pub dt: f64,
    pub max_e: f64,
}

fn g17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl DiagRecord {
    /// One CSV row matching [`CSV_HEADER`], 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.mass,
            self.l1,
            self.l2,
            self.entropy,
            self.energy,
            self.eps_p,
            self.log10_eps_p,
            self.rho_dev_l2,
            self.div_j_l2,
            self.dt,
            self.max_e,
        ]
        .iter()
        .map(|v| g17(*v))
        .collect::<Vec<_>>()
        .join(",")
    }

    /// Deviations of mass, L¹, L², entropy and energy from `initial`.
    pub fn deviations_from(&self, initial: &DiagRecord) -> [f64; 5] {
        [
            relative_deviation(self.mass, initial.mass),
            relative_deviation(self.l1, initial.l1),
            relative_deviation(self.l2, initial.l2),
            relative_deviation(self.entropy, initial.entropy),
            relative_deviation(self.energy, initial.energy),
        ]
    }
}

/// `(value - initial)/|initial|` when `|initial| > 1e-12`, plain difference otherwise.
pub fn relative_deviation(value: f64, initial: f64) -> f64 {
    if initial.abs() > 1e-12 {
        (value - initial) / initial.abs()
    } else {
        value - initial
    }
}

/// `‖ρ - 1‖₂` and `‖D J‖₂` by midpoint collocation.
pub fn quasineutral_deviation(f: &PhaseField, basis: &NodalBasis, ws: &SpectralWorkspace) -> (f64, f64) {
    let m = compute_moments(f, basis);
    let dx = f.x.width();
    let rho_dev = (m.rho.iter().map(|r| (r - 1.0).powi(2)).sum::<f64>() * dx).sqrt();
    let dj = ws.derivative(&m.current);
    let div_j = (dj.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    (rho_dev, div_j)
}

/// Share of the absolute mass held by the first and last velocity cells.
pub fn edge_mass_fraction(f: &PhaseField, basis: &NodalBasis) -> f64 {
    let tw = f.tensor_weights(basis);
    let nv = f.v.cells();
    let (mut edge, mut total) = (0.0, 0.0);
    for (c, cell) in f.values.chunks(f.cell_len()).enumerate() {
        let m: f64 = cell.iter().zip(&tw).map(|(v, w)| v.abs() * w).sum();
        total += m;
        let i = c % nv;
        if i == 0 || i + 1 == nv {
            edge += m;
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// `(λ²/2) Σ_j E_j² Δx`.
pub fn electrostatic_energy(e: &[f64], dx: f64, debye: f64) -> f64 {
    0.5 * debye * debye * e.iter().map(|v| v * v).sum::<f64>() * dx
}

#[allow(clippy::too_many_arguments)]
pub fn record(
    f: &PhaseField,
    potential: &PotentialField,
    basis: &NodalBasis,
    ws: &SpectralWorkspace,
    debye: f64,
    t: f64,
    dt: f64,
) -> DiagRecord {
    record_with_floor(f, potential, basis, ws, debye, t, dt, DEFAULT_FLOOR)
}

/// As [`record`] with an explicit entropy floor `max(f, floor)`.
#[allow(clippy::too_many_arguments)]
pub fn record_with_floor(
    f: &PhaseField,
    potential: &PotentialField,
    basis: &NodalBasis,
    ws: &SpectralWorkspace,
    debye: f64,
    t: f64,
    dt: f64,
    floor: f64,
) -> DiagRecord {
    let tw = f.tensor_weights(basis);
    let n = f.nodes_per_cell();
    let nodes = basis.nodes();
    let nv = f.v.cells();
    let (mut mass, mut l1, mut l2sq, mut entropy, mut kinetic) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (c, cell) in f.values.chunks(f.cell_len()).enumerate() {
        let i = c % nv;
        for q in 0..n {
            for p in 0..n {
                let w = tw[q * n + p];
                let val = cell[q * n + p];
                let v = f.v.point(i, nodes[p]);
                let fl = val.max(floor);
                mass += w * val;
                l1 += w * val.abs();
                l2sq += w * val * val;
                entropy += w * fl * fl.ln();
                kinetic += w * val * v * v;
            }
        }
    }
    let eps_p = electrostatic_energy(&potential.e, f.x.width(), debye);
    let (rho_dev_l2, div_j_l2) = quasineutral_deviation(f, basis, ws);
    DiagRecord {
        t,
        mass,
        l1,
        l2: l2sq.sqrt(),
        entropy,
        energy: 0.5 * kinetic + eps_p,
        eps_p,
        log10_eps_p: eps_p.log10(),
        rho_dev_l2,
        div_j_l2,
        dt,
        max_e: potential.max_abs_e(),
    }
}
