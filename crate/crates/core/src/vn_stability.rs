//! Linearized von Neumann amplification of the first-order scheme about the
//! steady state `ρ = 1, J = 0, ∂xφ = 0`, with state `(ρ̂, Ĵ, φ̂, ψ̂)`.

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The pair `B, A` with `B Xⁿ⁺¹ = A Xⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationSystem {
    pub debye: f64,
    pub dt: f64,
    pub wavenumber: f64,
    pub b: Matrix4<Complex64>,
    pub a: Matrix4<Complex64>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl AmplificationSystem {
    pub fn new(debye: f64, dt: f64, wavenumber: f64) -> Result<Self> {
        if !(debye >= 0.0) || !(dt > 0.0) || !debye.is_finite() || !dt.is_finite() {
            return Err(Error::Config(format!("need λ >= 0 and Δt > 0, got λ={debye}, Δt={dt}")));
        }
        let l2 = debye * debye;
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        #[rustfmt::skip]
        let b = Matrix4::new(
            one, z,   z,                       z,
            z,   one, c(0.0, -wavenumber * dt), z,
            z,   z,   one,                     c(-dt, 0.0),
            z,   z,   c(dt, 0.0),              c(l2, 0.0),
        );
        #[rustfmt::skip]
        let a = Matrix4::new(
            one,        z,   z,   z,
            z,          one, z,   z,
            z,          z,   one, z,
            c(dt, 0.0), z,   z,   c(l2, 0.0),
        );
        Ok(Self { debye, dt, wavenumber, b, a })
    }

    /// `B⁻¹A`.
    pub fn amplification_matrix(&self) -> Result<Matrix4<Complex64>> {
        let binv = self
            .b
            .try_inverse()
            .ok_or_else(|| Error::Config(format!("B is singular for λ={}, Δt={}", self.debye, self.dt)))?;
        Ok(binv * self.a)
    }

    /// Spectrum of `B⁻¹A`, sorted by modulus descending.
    pub fn eigenvalues(&self) -> Result<[Complex64; 4]> {
        let m = self.amplification_matrix()?;
        let mut vals = isolated_eigenvalues(&m);
        vals.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(y.im.total_cmp(&x.im)));
        Ok([vals[0], vals[1], vals[2], vals[3]])
    }
}

/// Peels off rows / columns whose off-diagonal part is zero within the active
/// index set (their diagonal entry is an exact eigenvalue), then takes the Schur
/// form of the remaining block.
fn isolated_eigenvalues(m: &Matrix4<Complex64>) -> Vec<Complex64> {
    let tol = 1e-15 * m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut active: Vec<usize> = (0..4).collect();
    let mut out = Vec::with_capacity(4);
    loop {
        let found = active.iter().copied().find(|&r| {
            active.iter().all(|&k| k == r || m[(r, k)].norm() <= tol)
                || active.iter().all(|&k| k == r || m[(k, r)].norm() <= tol)
        });
        match found {
            Some(r) => {
                out.push(m[(r, r)]);
                active.retain(|&k| k != r);
            }
            None => break,
        }
    }
    if !active.is_empty() {
        let n = active.len();
        let core = nalgebra::DMatrix::from_fn(n, n, |r, k| m[(active[r], active[k])]);
        let (_, t) = Schur::new(core).unpack();
        out.extend((0..n).map(|i| t[(i, i)]));
    }
    out
}

pub fn eigenvalues(debye: f64, dt: f64, wavenumber: f64) -> Result<[Complex64; 4]> {
    AmplificationSystem::new(debye, dt, wavenumber)?.eigenvalues()
}

/// `(λ² ± iλΔt) / (λ² + Δt²)`.
pub fn closed_form_mu34(debye: f64, dt: f64) -> Result<(Complex64, Complex64)> {
    let den = debye * debye + dt * dt;
    if !(den > 0.0) {
        return Err(Error::Config("λ² + Δt² must be positive".into()));
    }
    let re = debye * debye / den;
    let im = debye * dt / den;
    Ok((c(re, im), c(re, -im)))
}

/// Largest distance between the numerical pair `μ₃, μ₄` and the closed form,
/// matching the pair in whichever order is closer.
pub fn closed_form_mismatch(vals: &[Complex64; 4], debye: f64, dt: f64) -> Result<f64> {
    let (p, q) = closed_form_mu34(debye, dt)?;
    let (x, y) = (vals[2], vals[3]);
    let direct = (x - p).norm().max((y - q).norm());
    let swapped = (x - q).norm().max((y - p).norm());
    Ok(direct.min(swapped))
}
