//! A learned univariate function: B-spline plus a weighted smooth base
//! nonlinearity. One activation per selected input feature is the whole
//! interpretable unit of the model.

use serde::{Deserialize, Serialize};

use super::basis::{
    basis_count, basis_extended, basis_with_derivative, extend_knots, validate_grid, BasisEval,
    MAX_DEGREE,
};
use crate::error::{Result, TskanError};
use crate::stats::quantile;

/// The fixed reference nonlinearity `x * sigmoid(x)`.
pub fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

/// Derivative of [`silu`].
pub fn silu_derivative(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

/// Serialized form of an activation; the in-memory type carries a cached
/// extended knot vector on top of this.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ActivationData {
    pub name: String,
    pub grid: Vec<f64>,
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub base_weight: f64,
    pub curve_range: (f64, f64),
}

/// One univariate activation `psi(x) = sum_i c_i B_i(x) + w_b * silu(x)`,
/// continued linearly beyond the grid boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineActivation {
    input_name: String,
    grid: Vec<f64>,
    degree: usize,
    coefficients: Vec<f64>,
    base_weight: f64,
    /// Data percentile span recorded at fit time, used for plot ranges.
    curve_range: (f64, f64),
    extended: Vec<f64>,
}

/// Evaluation pieces needed by forward passes and gradients alike:
/// effective per-coefficient weights, effective base value, and the total.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ActivationTerms {
    pub basis: BasisEval,
    pub sigma: f64,
    pub value: f64,
}

impl SplineActivation {
    pub fn new(
        input_name: impl Into<String>,
        grid: Vec<f64>,
        degree: usize,
        coefficients: Vec<f64>,
        base_weight: f64,
        curve_range: (f64, f64),
    ) -> Result<Self> {
        validate_grid(&grid, degree)?;
        let extended = extend_knots(&grid, degree);
        let expected = basis_count(&extended, degree);
        if coefficients.len() != expected {
            return Err(TskanError::InvalidActivation(format!(
                "expected {expected} coefficients for {} intervals at degree {degree}, got {}",
                grid.len() - 1,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) || !base_weight.is_finite() {
            return Err(TskanError::InvalidActivation(
                "parameters must be finite".to_string(),
            ));
        }
        Ok(SplineActivation {
            input_name: input_name.into(),
            grid,
            degree,
            coefficients,
            base_weight,
            curve_range,
            extended,
        })
    }

    pub fn input_name(&self) -> &str {
        &self.input_name
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn base_weight(&self) -> f64 {
        self.base_weight
    }

    pub fn grid_range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn curve_range(&self) -> (f64, f64) {
        self.curve_range
    }

    /// Coefficients plus the base weight.
    pub fn parameter_count(&self) -> usize {
        self.coefficients.len() + 1
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub(crate) fn base_weight_mut(&mut self) -> &mut f64 {
        &mut self.base_weight
    }

    /// Effective basis weights and base value at `x`.
    ///
    /// Inside the grid these are the raw B-spline weights and `silu(x)`;
    /// outside, both are linearized at the nearer boundary so the whole
    /// activation extrapolates linearly and gradients stay consistent with
    /// forward evaluation.
    pub(crate) fn terms(&self, x: f64) -> ActivationTerms {
        let (lo, hi) = self.grid_range();
        let (basis, sigma) = if x >= lo && x <= hi {
            (basis_extended(x, &self.extended, self.degree), silu(x))
        } else {
            let boundary = if x < lo { lo } else { hi };
            let dx = x - boundary;
            let (values, derivatives) = basis_with_derivative(boundary, &self.extended, self.degree);
            let mut weights = [0.0; MAX_DEGREE + 1];
            for r in 0..values.count {
                weights[r] = values.weights[r] + derivatives.weights[r] * dx;
            }
            (
                BasisEval {
                    first: values.first,
                    count: values.count,
                    weights,
                },
                silu(boundary) + silu_derivative(boundary) * dx,
            )
        };
        let mut spline = 0.0;
        for (i, w) in basis.iter() {
            spline += self.coefficients[i] * w;
        }
        ActivationTerms {
            basis,
            sigma,
            value: spline + self.base_weight * sigma,
        }
    }

    /// `psi(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.terms(x).value
    }

    pub(crate) fn to_data(&self) -> ActivationData {
        ActivationData {
            name: self.input_name.clone(),
            grid: self.grid.clone(),
            degree: self.degree,
            coefficients: self.coefficients.clone(),
            base_weight: self.base_weight,
            curve_range: self.curve_range,
        }
    }

    pub(crate) fn from_data(data: ActivationData) -> Result<Self> {
        SplineActivation::new(
            data.name,
            data.grid,
            data.degree,
            data.coefficients,
            data.base_weight,
            data.curve_range,
        )
    }
}

/// Build a uniform grid covering the given values' quantile span plus a
/// margin. Returns the interior knots and the raw quantile span.
pub fn grid_from_values(
    values: &[f64],
    grid_size: usize,
    quantile_range: (f64, f64),
    margin_fraction: f64,
) -> Result<(Vec<f64>, (f64, f64))> {
    if values.is_empty() {
        return Err(TskanError::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    if grid_size == 0 {
        return Err(TskanError::InvalidGrid(
            "grid size must be at least 1".to_string(),
        ));
    }
    let (q_lo, q_hi) = quantile_range;
    if !(0.0..=1.0).contains(&q_lo) || !(0.0..=1.0).contains(&q_hi) || q_lo >= q_hi {
        return Err(TskanError::InvalidConfig(format!(
            "quantile range must satisfy 0 <= lo < hi <= 1, got ({q_lo}, {q_hi})"
        )));
    }
    let mut lo = quantile(values, q_lo);
    let mut hi = quantile(values, q_hi);
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let margin = margin_fraction * (hi - lo);
    let knots = super::basis::uniform_grid(lo - margin, hi + margin, grid_size);
    Ok((knots, (lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kan::basis::uniform_grid;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_activation(rng: &mut ChaCha8Rng, intervals: usize, degree: usize) -> SplineActivation {
        let lo = rng.gen_range(-3.0..0.0);
        let hi = lo + rng.gen_range(1.0..5.0);
        let grid = uniform_grid(lo, hi, intervals);
        let coefficients = (0..intervals + degree)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        SplineActivation::new(
            "x",
            grid,
            degree,
            coefficients,
            rng.gen_range(-1.0..1.0),
            (lo, hi),
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let grid = uniform_grid(-1.0, 1.0, 8);
        let act = SplineActivation::new("x", grid, 3, vec![0.0; 11], 0.0, (-1.0, 1.0)).unwrap();
        for x in [-2.0, -1.0, 0.0, 0.3, 1.0, 5.0] {
            assert_eq!(act.eval(x), 0.0);
        }
    }

    #[test]
    fn silu_reference_points() {
        assert_eq!(silu(0.0), 0.0);
        assert!((silu(1.0) - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!(silu(-800.0).abs() < 1e-300); // saturates without NaN
        assert!((silu_derivative(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn base_term_only_matches_silu() {
        let grid = uniform_grid(-2.0, 2.0, 4);
        let act = SplineActivation::new("x", grid, 2, vec![0.0; 6], 1.0, (-2.0, 2.0)).unwrap();
        assert_eq!(act.eval(0.0), 0.0);
        assert!((act.eval(1.5) - silu(1.5)).abs() < 1e-15);
    }

    #[test]
    fn matches_basis_expansion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let degree = rng.gen_range(1..=3);
            let act = random_activation(&mut rng, rng.gen_range(4..=10), degree);
            let (lo, hi) = act.grid_range();
            let x = rng.gen_range(lo..hi);
            let eval = crate::kan::basis::bspline_basis(x, act.grid(), degree).unwrap();
            let mut expected = act.base_weight() * silu(x);
            for (i, w) in eval.iter() {
                expected += act.coefficients()[i] * w;
            }
            assert!((act.eval(x) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn finite_and_piecewise_linear_outside_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let act = random_activation(&mut rng, 8, 3);
            let (lo, hi) = act.grid_range();
            for step in 1..=20 {
                let far = hi + step as f64 * 0.7;
                assert!(act.eval(far).is_finite());
                assert!(act.eval(lo - step as f64 * 0.7).is_finite());
            }
            // Second difference of the extrapolation vanishes.
            let h = 0.31;
            for side in [-1.0, 1.0] {
                let base = if side < 0.0 { lo - 1.0 } else { hi + 1.0 };
                let second = act.eval(base) - 2.0 * act.eval(base + side * h)
                    + act.eval(base + 2.0 * side * h);
                assert!(second.abs() < 1e-8, "second diff {second}");
            }
        }
    }

    #[test]
    fn continuous_across_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let act = random_activation(&mut rng, 6, 3);
        let (lo, hi) = act.grid_range();
        for b in [lo, hi] {
            let inner = act.eval(b);
            let outer = act.eval(b + if b == lo { -1e-9 } else { 1e-9 });
            assert!((inner - outer).abs() < 1e-7);
        }
    }

    #[test]
    fn coefficient_count_is_enforced() {
        let grid = uniform_grid(0.0, 1.0, 8);
        assert!(SplineActivation::new("x", grid, 3, vec![0.0; 10], 0.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn grid_from_values_covers_quantile_span() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let (knots, (lo, hi)) = grid_from_values(&values, 8, (0.01, 0.99), 0.1).unwrap();
        assert_eq!(knots.len(), 9);
        assert!((lo - 0.01).abs() < 1e-2);
        assert!((hi - 0.99).abs() < 1e-2);
        assert!(knots[0] < lo && knots[8] > hi);
    }

    #[test]
    fn grid_from_constant_values_still_valid() {
        let values = vec![3.0; 50];
        let (knots, _) = grid_from_values(&values, 4, (0.01, 0.99), 0.1).unwrap();
        assert!(knots.windows(2).all(|w| w[1] > w[0]));
        assert!(knots[0] < 3.0 && knots[4] > 3.0);
    }
}
