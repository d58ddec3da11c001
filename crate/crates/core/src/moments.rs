//! Velocity moments of the DG distribution at the x-cell midpoints.

use crate::phase_space::PhaseField;
use crate::quad_basis::NodalBasis;

/// `ρ`, `J = ρu`, `S = ∫v² f dv` and `W = S/2` at the midpoints `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub rho: Vec<f64>,
    pub current: Vec<f64>,
    pub stress: Vec<f64>,
    pub kinetic: Vec<f64>,
}

/// Moments at every x Gauss point, `[j * (k+1) + q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalMoments {
    pub rho: Vec<f64>,
    pub current: Vec<f64>,
    pub stress: Vec<f64>,
}

/// Integrates `f`, `v f`, `v² f` over velocity at each x Gauss point.
///
/// `velocity_shift` is added to every velocity node before forming the weights.
pub fn nodal_moments_shifted(field: &PhaseField, basis: &NodalBasis, velocity_shift: f64) -> NodalMoments {
    let n = field.nodes_per_cell();
    let nx = field.x.cells();
    let nv = field.v.cells();
    let half_dv = 0.5 * field.v.width();
    let w = basis.weights();
    let nodes = basis.nodes();
    let mut out = NodalMoments {
        rho: vec![0.0; nx * n],
        current: vec![0.0; nx * n],
        stress: vec![0.0; nx * n],
    };
    for j in 0..nx {
        for q in 0..n {
            let (mut r, mut c, mut s) = (0.0, 0.0, 0.0);
            for i in 0..nv {
                for p in 0..n {
                    let v = field.v.point(i, nodes[p]) + velocity_shift;
                    let fw = w[p] * half_dv * field.get(j, i, q, p);
                    r += fw;
                    c += fw * v;
                    s += fw * v * v;
                }
            }
            out.rho[j * n + q] = r;
            out.current[j * n + q] = c;
            out.stress[j * n + q] = s;
        }
    }
    out
}

pub fn nodal_moments(field: &PhaseField, basis: &NodalBasis) -> NodalMoments {
    nodal_moments_shifted(field, basis, 0.0)
}

/// Evaluates each cell's degree-k x-polynomial of the moments at its midpoint.
pub fn compute_moments(field: &PhaseField, basis: &NodalBasis) -> MomentSet {
    let nm = nodal_moments(field, basis);
    let n = field.nodes_per_cell();
    let at_mid = |vals: &[f64]| -> Vec<f64> { vals.chunks(n).map(|c| basis.eval(c, 0.0)).collect() };
    let rho = at_mid(&nm.rho);
    let current = at_mid(&nm.current);
    let stress = at_mid(&nm.stress);
    let kinetic = stress.iter().map(|s| 0.5 * s).collect();
    MomentSet {
        rho,
        current,
        stress,
        kinetic,
    }
}
