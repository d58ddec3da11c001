//! Positivity-preserving scaling limiter on the stored Gauss-point values of a cell.

use nalgebra::DMatrix;

use crate::quad_basis::NodalBasis;

/// Default positivity floor.
pub const DEFAULT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterParams {
    pub floor: f64,
}

impl Default for LimiterParams {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR }
    }
}

/// What the limiter did to one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitOutcome {
    /// All values were already at or above the floor.
    Untouched,
    /// Values were scaled towards the mean by `theta < 1`.
    Scaled { theta: f64 },
    /// The weighted mean itself was below the floor; values were flattened to `max(mean, 0)`.
    MeanBelowFloor { mean: f64 },
}

impl LimitOutcome {
    pub fn is_active(&self) -> bool {
        !matches!(self, LimitOutcome::Untouched)
    }
}

/// `Σ w v / Σ w`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let (num, den) = values
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(n, d), (v, w)| (n + v * w, d + w));
    num / den
}

/// Limits one cell in place: `f ← θ(f - f̄) + f̄` with
/// `θ = min(|(m₀ - f̄)/(m' - f̄)|, 1)`, `m'` the smallest stored value.
///
/// A mean below the floor is reported and the cell flattened to `max(mean, 0)`.
pub fn pp_limit(values: &mut [f64], weights: &[f64], params: LimiterParams) -> LimitOutcome {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    pp_limit_with_min(values, weights, min, params)
}

/// As [`pp_limit`] with a caller-supplied cell minimum `m'`.
pub fn pp_limit_with_min(values: &mut [f64], weights: &[f64], min: f64, params: LimiterParams) -> LimitOutcome {
    debug_assert_eq!(values.len(), weights.len());
    let m0 = params.floor;
    if min >= m0 {
        return LimitOutcome::Untouched;
    }
    let mean = weighted_mean(values, weights);
    if mean < m0 {
        // a negative mean can only come from rounding here; keep the stored values nonnegative
        let flat = mean.max(0.0);
        values.iter_mut().for_each(|v| *v = flat);
        return LimitOutcome::MeanBelowFloor { mean };
    }
    let theta = ((m0 - mean) / (min - mean)).abs().min(1.0);
    values.iter_mut().for_each(|v| *v = theta * (*v - mean) + mean);
    LimitOutcome::Scaled { theta }
}

/// Limiter for tensor-product cells that bounds every x-line through a v-node and
/// every v-line through an x-node on the whole cell, not only at the nodes.
///
/// The transport sweeps integrate exactly these line restrictions over partial
/// cells, so keeping them nonnegative keeps the next cell means nonnegative.
#[derive(Debug, Clone)]
pub struct TensorLimiter {
    n: usize,
    /// Row-major `n × n` map from nodal values to monomial coefficients.
    to_monomial: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorLimiter {
    /// `tensor_weights` are the `(q, p)` quadrature weights of one cell.
    pub fn new(basis: &NodalBasis, tensor_weights: &[f64]) -> Self {
        let n = basis.len();
        let vander = DMatrix::from_fn(n, n, |r, c| basis.nodes()[r].powi(c as i32));
        let inv = vander.try_inverse().expect("Gauss nodes are distinct");
        let to_monomial = (0..n * n).map(|idx| inv[(idx / n, idx % n)]).collect();
        Self { n, to_monomial, weights: tensor_weights.to_vec() }
    }

    /// Minimum over `[-1, 1]` of the polynomial through `line` at the Gauss nodes.
    pub fn line_minimum(&self, line: &[f64]) -> f64 {
        let n = self.n;
        let mut c = [0.0; crate::quad_basis::MAX_DEGREE + 1];
        for (r, cr) in c.iter_mut().enumerate().take(n) {
            *cr = (0..n).map(|t| self.to_monomial[r * n + t] * line[t]).sum();
        }
        let eval = |x: f64| c[..n].iter().rev().fold(0.0, |acc, ci| acc * x + ci);
        let mut min = eval(-1.0).min(eval(1.0));
        min = line.iter().copied().fold(min, f64::min);
        let mut probe = |x: f64| {
            if x.is_finite() && x.abs() < 1.0 {
                min = min.min(eval(x));
            }
        };
        match n {
            3 if c[2] != 0.0 => probe(-c[1] / (2.0 * c[2])),
            4 => {
                // roots of c1 + 2 c2 x + 3 c3 x²
                let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
                if a == 0.0 {
                    if b != 0.0 {
                        probe(-cc / b);
                    }
                } else {
                    let disc = b * b - 4.0 * a * cc;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        let qq = -0.5 * (b + b.signum() * sq);
                        if qq != 0.0 {
                            probe(qq / a);
                            probe(cc / qq);
                        } else {
                            probe(0.0);
                        }
                    }
                }
            }
            _ => {}
        }
        min
    }

    /// Smallest value over all node lines of a `(q, p)`-ordered cell.
    pub fn cell_minimum(&self, cell: &[f64]) -> f64 {
        let n = self.n;
        let mut line = [0.0; crate::quad_basis::MAX_DEGREE + 1];
        let mut min = f64::INFINITY;
        for p in 0..n {
            for q in 0..n {
                line[q] = cell[q * n + p];
            }
            min = min.min(self.line_minimum(&line[..n]));
        }
        for q in 0..n {
            min = min.min(self.line_minimum(&cell[q * n..q * n + n]));
        }
        min
    }

    pub fn limit(&self, cell: &mut [f64], params: LimiterParams) -> LimitOutcome {
        let min = self.cell_minimum(cell);
        pp_limit_with_min(cell, &self.weights, min, params)
    }
}

/// Per-cell activation counts accumulated over a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LimiterStats {
    pub scaled: usize,
    pub mean_violations: usize,
}

impl LimiterStats {
    pub fn add(&mut self, outcome: LimitOutcome) {
        match outcome {
            LimitOutcome::Untouched => {}
            LimitOutcome::Scaled { .. } => self.scaled += 1,
            LimitOutcome::MeanBelowFloor { .. } => self.mean_violations += 1,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            scaled: self.scaled + other.scaled,
            mean_violations: self.mean_violations + other.mean_violations,
        }
    }

    pub fn activations(&self) -> usize {
        self.scaled + self.mean_violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_node_example() {
        let mut v = [-0.5, 2.5];
        let out = pp_limit(&mut v, &[1.0, 1.0], LimiterParams::default());
        let LimitOutcome::Scaled { theta } = out else { panic!("{out:?}") };
        assert!((theta - (1.0 - 1e-15) / 1.5).abs() < 1e-15);
        assert!((theta - 0.6667).abs() < 1e-4);
        assert!(v[0] >= 1e-15 - 1e-16 && v[0] < 1.3e-15, "{}", v[0]);
        assert!((v[1] - 2.0).abs() < 1e-14);
        assert!((v[0] + v[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn untouched_cells() {
        let mut v = [0.3, 1e-15, 2.0];
        assert_eq!(pp_limit(&mut v, &[1.0, 2.0, 1.0], LimiterParams::default()), LimitOutcome::Untouched);
        assert_eq!(v, [0.3, 1e-15, 2.0]);
        let mut c = [0.7, 0.7];
        assert_eq!(pp_limit(&mut c, &[1.0, 1.0], LimiterParams::default()), LimitOutcome::Untouched);
        assert_eq!(c, [0.7, 0.7]);
    }

    #[test]
    fn negative_mean_is_reported() {
        let mut v = [-1.0, 0.5];
        let out = pp_limit(&mut v, &[1.0, 1.0], LimiterParams::default());
        assert_eq!(out, LimitOutcome::MeanBelowFloor { mean: -0.25 });
        assert_eq!(v, [0.0, 0.0]);
        let mut s = LimiterStats::default();
        s.add(out);
        s.add(LimitOutcome::Scaled { theta: 0.5 });
        s.add(LimitOutcome::Untouched);
        assert_eq!(s.activations(), 2);
    }

    #[test]
    fn maxwellian_is_untouched_on_fine_meshes() {
        use crate::phase_space::{sample_ic, Grid1D};
        use crate::quad_basis::NodalBasis;
        for k in 0..=3 {
            let b = NodalBasis::new(k).unwrap();
            let x = Grid1D::new(0.0, 4.0 * std::f64::consts::PI, 32).unwrap();
            let v = Grid1D::new(-5.0, 5.0, 32).unwrap();
            let f = sample_ic(|_, v| (-v * v / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt(), x, v, &b).unwrap();
            let w = f.tensor_weights(&b);
            let mut values = f.values.clone();
            for cell in values.chunks_mut(f.cell_len()) {
                assert_eq!(pp_limit(cell, &w, LimiterParams::default()), LimitOutcome::Untouched);
            }
        }
    }

    fn dense_minimum(basis: &crate::quad_basis::NodalBasis, line: &[f64]) -> f64 {
        (0..=4000).map(|i| basis.eval(line, -1.0 + i as f64 / 2000.0)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn line_minimum_finds_interior_dips() {
        use crate::quad_basis::NodalBasis;
        let b = NodalBasis::new(2).unwrap();
        let tl = TensorLimiter::new(&b, &[1.0; 9]);
        // x² - 0.1 sampled at the nodes: all nodal values but the middle are positive
        let line: Vec<f64> = b.nodes().iter().map(|x| x * x - 0.1).collect();
        assert!((tl.line_minimum(&line) + 0.1).abs() < 1e-14);
        // linear profile that only goes negative past the last node
        let b = NodalBasis::new(1).unwrap();
        let tl = TensorLimiter::new(&b, &[1.0; 4]);
        let line: Vec<f64> = b.nodes().iter().map(|x| 0.6 - x).collect();
        assert!(line.iter().all(|v| *v > 0.0));
        assert!((tl.line_minimum(&line) + 0.4).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn conserves_mean_and_enforces_floor(
            vals in proptest::collection::vec(-1.0f64..3.0, 16),
            ws in proptest::collection::vec(0.1f64..1.0, 16),
            floor in prop_oneof![Just(1e-15), Just(1e-14), Just(1e-3)],
        ) {
            let params = LimiterParams { floor };
            let mut v = vals.clone();
            let before = weighted_mean(&vals, &ws);
            let input_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let out = pp_limit(&mut v, &ws, params);
            let after = weighted_mean(&v, &ws);
            prop_assert!((before - after).abs() <= 4.0 * f64::EPSILON * before.abs().max(1.0));
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            if before >= floor {
                prop_assert!(min >= floor - 1e-16 * before.abs().max(1.0) * 4.0);
                let violated = matches!(out, LimitOutcome::MeanBelowFloor { .. });
                prop_assert!(!violated);
            } else {
                prop_assert!(min >= input_min);
            }
            if input_min >= floor {
                prop_assert_eq!(&v, &vals);
            }
        }

        #[test]
        fn line_minimum_matches_dense_sampling(k in 0usize..=3, vals in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let b = crate::quad_basis::NodalBasis::new(k).unwrap();
            let n = k + 1;
            let tl = TensorLimiter::new(&b, &vec![1.0; n * n]);
            let exact = tl.line_minimum(&vals[..n]);
            let sampled = dense_minimum(&b, &vals[..n]);
            prop_assert!(exact <= sampled + 1e-12);
            prop_assert!(sampled - exact <= 1e-5);
        }

        #[test]
        fn limited_cells_are_nonnegative_on_every_node_line(k in 1usize..=3, vals in proptest::collection::vec(-0.2f64..1.0, 16)) {
            use crate::quad_basis::NodalBasis;
            let b = NodalBasis::new(k).unwrap();
            let n = k + 1;
            let w: Vec<f64> = (0..n * n).map(|i| b.weights()[i / n] * b.weights()[i % n]).collect();
            let tl = TensorLimiter::new(&b, &w);
            let mut cell = vals[..n * n].to_vec();
            let mean = weighted_mean(&cell, &w);
            let params = LimiterParams { floor: 0.0 };
            tl.limit(&mut cell, params);
            prop_assert!((weighted_mean(&cell, &w) - mean).abs() <= 1e-14 || mean < 0.0);
            if mean >= 0.0 {
                prop_assert!(tl.cell_minimum(&cell) >= -1e-13);
            } else {
                prop_assert!(cell.iter().all(|v| *v == 0.0));
            }
        }
    }
}
