//! Gauss–Legendre rules and the nodal Lagrange basis collocated at their nodes.
//!
//! Every DG field in the crate stores values at the Gauss nodes of each cell, so
//! the element mass matrix is diagonal: `M_pq = δ_pq · w_p · Δ/2`.

use crate::error::{Error, Result};

/// Highest polynomial degree the solver supports.
pub const MAX_DEGREE: usize = 3;

/// `k+1`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = nf * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Builds the `k+1`-point Gauss–Legendre rule by Newton iteration on `P_{k+1}`.
pub fn gauss_rule(k: usize) -> Result<QuadRule> {
    if k > MAX_DEGREE {
        return Err(Error::Config(format!(
            "polynomial degree {k} unsupported (0..={MAX_DEGREE})"
        )));
    }
    let n = k + 1;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if n == 1 {
        weights[0] = 2.0;
        return Ok(QuadRule { degree: k, nodes, weights });
    }
    // Roots come out in decreasing order from the cosine guess; compute the
    // positive half and mirror it so the rule is exactly symmetric.
    for i in 0..n / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    Ok(QuadRule { degree: k, nodes, weights })
}

/// Writes the Lagrange cardinal functions through `abscissae`, evaluated at `x`, into `out`.
///
/// The product form is used so that at a node the result is exactly `δ_pq`.
pub fn cardinals_at(abscissae: &[f64], x: f64, out: &mut [f64]) {
    debug_assert_eq!(abscissae.len(), out.len());
    for (p, slot) in out.iter_mut().enumerate() {
        let xp = abscissae[p];
        let mut v = 1.0;
        for (m, &xm) in abscissae.iter().enumerate() {
            if m != p {
                v *= (x - xm) / (xp - xm);
            }
        }
        *slot = v;
    }
}

fn lagrange_eval(abscissae: &[f64], values: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for (p, (&xp, &vp)) in abscissae.iter().zip(values).enumerate() {
        let mut l = 1.0;
        for (m, &xm) in abscissae.iter().enumerate() {
            if m != p {
                l *= (x - xm) / (xp - xm);
            }
        }
        total += vp * l;
    }
    total
}

/// Nodal basis of `P^k` through the Gauss nodes, together with its rule.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    rule: QuadRule,
}

impl NodalBasis {
    pub fn new(k: usize) -> Result<Self> {
        Ok(Self { rule: gauss_rule(k)? })
    }

    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    /// Number of nodes per cell, `k+1`.
    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    /// Values of all cardinal functions at reference coordinate `xi`.
    pub fn cardinals(&self, xi: f64, out: &mut [f64]) {
        cardinals_at(self.rule.nodes(), xi, out);
    }

    /// Evaluates the interpolant with nodal values `coeffs` at `xi`.
    pub fn eval(&self, coeffs: &[f64], xi: f64) -> f64 {
        eval_nodal(self.rule.nodes(), coeffs, xi)
    }
}

/// Value at `xi` of the degree-k interpolant through `(nodes[p], coeffs[p])`.
pub fn eval_nodal(nodes: &[f64], coeffs: &[f64], xi: f64) -> f64 {
    debug_assert!(xi.abs() <= 1.0 + 1e-12 || nodes.len() == 1);
    lagrange_eval(nodes, coeffs, xi)
}

/// Interpolating polynomial in Lagrange form.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    abscissae: Vec<f64>,
    values: Vec<f64>,
}

impl Interpolant {
    pub fn degree(&self) -> usize {
        self.abscissae.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        lagrange_eval(&self.abscissae, &self.values, x)
    }
}

/// Fits the unique polynomial of degree `len-1` through the given points.
pub fn fit_through_points(abscissae: &[f64], values: &[f64]) -> Result<Interpolant> {
    if abscissae.len() != values.len() || abscissae.is_empty() {
        return Err(Error::Input(format!(
            "fit needs matching non-empty inputs, got {} abscissae and {} values",
            abscissae.len(),
            values.len()
        )));
    }
    for i in 0..abscissae.len() {
        for j in i + 1..abscissae.len() {
            if abscissae[i] == abscissae[j] {
                return Err(Error::SingularFit(i, j));
            }
        }
    }
    Ok(Interpolant {
        abscissae: abscissae.to_vec(),
        values: values.to_vec(),
    })
}
