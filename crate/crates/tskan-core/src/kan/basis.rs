//! B-spline basis evaluation (Cox–de Boor) over a uniform-extension knot
//! vector, with linear extrapolation beyond the boundary knots.
//!
//! A grid of `G` intervals with spline degree `d` carries `G + d` basis
//! functions. The interior knots are extended by `d` extra knots on each
//! side at the boundary spacing. Outside the grid the basis is continued
//! linearly: `B_i(x) = B_i(b) + B_i'(b) * (x - b)` at the nearer boundary
//! `b`, which keeps every downstream evaluation finite and piecewise linear
//! out there.

use crate::error::{Result, TskanError};

/// Highest supported spline degree.
pub const MAX_DEGREE: usize = 7;

/// Non-zero basis weights at a point: `weights[r]` belongs to basis
/// function `first + r`, for `r < count`. `count` is always `degree + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    pub first: usize,
    pub count: usize,
    pub weights: [f64; MAX_DEGREE + 1],
}

impl BasisEval {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.count).map(move |r| (self.first + r, self.weights[r]))
    }
}

pub(crate) fn validate_grid(grid: &[f64], degree: usize) -> Result<()> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(TskanError::InvalidGrid(format!(
            "degree must be in 1..={MAX_DEGREE}, got {degree}"
        )));
    }
    if grid.len() < 2 {
        return Err(TskanError::InvalidGrid(format!(
            "grid needs at least 2 knots, got {}",
            grid.len()
        )));
    }
    for pair in grid.windows(2) {
        if !pair[0].is_finite() || !pair[1].is_finite() || pair[1] <= pair[0] {
            return Err(TskanError::InvalidGrid(
                "knots must be finite and strictly increasing".to_string(),
            ));
        }
    }
    Ok(())
}

/// Extend interior knots by `degree` knots on each side at boundary spacing.
pub(crate) fn extend_knots(grid: &[f64], degree: usize) -> Vec<f64> {
    let step_lo = grid[1] - grid[0];
    let step_hi = grid[grid.len() - 1] - grid[grid.len() - 2];
    let mut extended = Vec::with_capacity(grid.len() + 2 * degree);
    for i in (1..=degree).rev() {
        extended.push(grid[0] - i as f64 * step_lo);
    }
    extended.extend_from_slice(grid);
    for i in 1..=degree {
        extended.push(grid[grid.len() - 1] + i as f64 * step_hi);
    }
    extended
}

/// Number of basis functions carried by an extended knot vector.
pub(crate) fn basis_count(extended: &[f64], degree: usize) -> usize {
    extended.len() - degree - 1
}

fn interior_bounds(extended: &[f64], degree: usize) -> (f64, f64) {
    (extended[degree], extended[extended.len() - 1 - degree])
}

/// Knot span index `m` with `t[m] <= x < t[m+1]`, clamped to the interior.
fn find_span(x: f64, extended: &[f64], degree: usize) -> usize {
    let hi_span = extended.len() - 2 - degree;
    let mut m = extended.partition_point(|&k| k <= x);
    m = m.saturating_sub(1);
    m.clamp(degree, hi_span)
}

/// Triangular Cox–de Boor scheme. Returns the degree-`degree` row and, for
/// derivative assembly, the degree-`degree - 1` row.
fn basis_rows(
    x: f64,
    extended: &[f64],
    m: usize,
    degree: usize,
) -> ([f64; MAX_DEGREE + 1], [f64; MAX_DEGREE + 1]) {
    let mut n = [0.0; MAX_DEGREE + 1];
    let mut lower = [0.0; MAX_DEGREE + 1];
    let mut left = [0.0; MAX_DEGREE + 2];
    let mut right = [0.0; MAX_DEGREE + 2];
    n[0] = 1.0;
    for j in 1..=degree {
        if j == degree {
            lower[..j].copy_from_slice(&n[..j]);
        }
        left[j] = x - extended[m + 1 - j];
        right[j] = extended[m + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = n[r] / denom;
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    (n, lower)
}

/// Basis values at a point inside the grid.
fn basis_inside(x: f64, extended: &[f64], degree: usize) -> BasisEval {
    let m = find_span(x, extended, degree);
    let (n, _) = basis_rows(x, extended, m, degree);
    BasisEval {
        first: m - degree,
        count: degree + 1,
        weights: n,
    }
}

/// Basis values and first derivatives at a point inside the grid.
pub(crate) fn basis_with_derivative(
    x: f64,
    extended: &[f64],
    degree: usize,
) -> (BasisEval, BasisEval) {
    let m = find_span(x, extended, degree);
    let (n, lower) = basis_rows(x, extended, m, degree);
    let mut deriv = [0.0; MAX_DEGREE + 1];
    let d = degree as f64;
    for r in 0..=degree {
        let i = m - degree + r;
        // Row `lower` holds degree-1 values for basis indices m-degree+1..=m.
        let a = if r >= 1 { lower[r - 1] } else { 0.0 };
        let b = if r <= degree - 1 { lower[r] } else { 0.0 };
        let left_term = if a != 0.0 {
            a / (extended[i + degree] - extended[i])
        } else {
            0.0
        };
        let right_term = if b != 0.0 {
            b / (extended[i + degree + 1] - extended[i + 1])
        } else {
            0.0
        };
        deriv[r] = d * (left_term - right_term);
    }
    (
        BasisEval {
            first: m - degree,
            count: degree + 1,
            weights: n,
        },
        BasisEval {
            first: m - degree,
            count: degree + 1,
            weights: deriv,
        },
    )
}

/// Basis weights at any finite `x`, linearized beyond the grid boundary.
pub(crate) fn basis_extended(x: f64, extended: &[f64], degree: usize) -> BasisEval {
    let (lo, hi) = interior_bounds(extended, degree);
    if x >= lo && x <= hi {
        return basis_inside(x, extended, degree);
    }
    let boundary = if x < lo { lo } else { hi };
    let (values, derivatives) = basis_with_derivative(boundary, extended, degree);
    let dx = x - boundary;
    let mut weights = [0.0; MAX_DEGREE + 1];
    for r in 0..values.count {
        weights[r] = values.weights[r] + derivatives.weights[r] * dx;
    }
    BasisEval {
        first: values.first,
        count: values.count,
        weights,
    }
}

/// Non-zero B-spline basis weights at `x` over `grid` (interior knots).
///
/// Validates the grid, extends it, and evaluates; see [`basis_extended`]
/// for the extrapolation rule.
pub fn bspline_basis(x: f64, grid: &[f64], degree: usize) -> Result<BasisEval> {
    validate_grid(grid, degree)?;
    if !x.is_finite() {
        return Err(TskanError::InvalidActivation(format!(
            "basis input must be finite, got {x}"
        )));
    }
    let extended = extend_knots(grid, degree);
    Ok(basis_extended(x, &extended, degree))
}

/// Equally spaced knots from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let step = (hi - lo) / intervals as f64;
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
