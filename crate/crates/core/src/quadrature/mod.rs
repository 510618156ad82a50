//! Symmetric quadrature rules on the reference triangle, exact up to
//! polynomial degree 19.
//!
//! Points are stored in barycentric coordinates; weights refer to the unit
//! reference triangle (0,0)-(1,0)-(0,1) and sum to 1/2. Physical integration
//! maps the rule affinely, so the Jacobian is twice the element area.

mod tables_data;

use thiserror::Error;

/// Quadrature degree used for assembling data-dependent load vectors.
pub const DEFAULT_LOAD_DEGREE: usize = 6;
/// Quadrature degree used for error norms and data oscillation.
pub const ERROR_DEGREE: usize = 19;

const MAX_DEGREE: usize = 19;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("no quadrature rule for degree {0}; supported range is 1..=19")]
    UnsupportedDegree(usize),
}

/// A quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
    /// Barycentric coordinates of the quadrature points.
    pub points: Vec<[f64; 3]>,
    /// Reference-triangle weights; they sum to 1/2.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn table_for(degree: usize) -> &'static [[f64; 4]] {
    use tables_data::*;
    // smallest embedded rule with at least the requested exactness
    match degree {
        0..=1 => &DEGREE_01,
        2 => &DEGREE_02,
        3..=4 => &DEGREE_04,
        5..=6 => &DEGREE_06,
        7..=8 => &DEGREE_08,
        9..=12 => &DEGREE_12,
        _ => &DEGREE_19,
    }
}

/// Returns a rule exact for all polynomials of total degree `degree`.
///
/// The returned rule may be exact for a higher degree than requested, since
/// only a subset of degrees is tabulated.
pub fn rule(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    if degree < 1 || degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let table = table_for(degree);
    Ok(QuadratureRule {
        degree,
        points: table.iter().map(|r| [r[0], r[1], r[2]]).collect(),
        weights: table.iter().map(|r| r[3]).collect(),
    })
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Integrates `f` over the physical triangle with the given rule.
pub fn integrate_with(
    f: impl Fn([f64; 2]) -> f64,
    tri: &[[f64; 2]; 3],
    rule: &QuadratureRule,
) -> f64 {
    let jac = 2.0 * signed_area(tri[0], tri[1], tri[2]).abs();
    let mut acc = 0.0;
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let x = [
            bary[0] * tri[0][0] + bary[1] * tri[1][0] + bary[2] * tri[2][0],
            bary[0] * tri[0][1] + bary[1] * tri[1][1] + bary[2] * tri[2][1],
        ];
        acc += w * f(x);
    }
    acc * jac
}

/// Integrates `f` over the physical triangle with a rule of the given degree.
pub fn integrate(
    f: impl Fn([f64; 2]) -> f64,
    tri: &[[f64; 2]; 3],
    degree: usize,
) -> Result<f64, QuadratureError> {
    Ok(integrate_with(f, tri, &rule(degree)?))
}
