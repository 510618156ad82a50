//! Residual a posteriori error indicators.
//!
//! Two contributions are computed per element T:
//!
//! - a state indicator tailored to Dirac sources, `h_T^3` times the squared
//!   L2 norm of the gradient jumps over the interior edges of T (an L2-type
//!   estimator, summed globally);
//! - an adjoint indicator valid for unbounded forcing,
//!   `h_T^{2-d/2} ||y - y_d||_{L2(T)} + h_T max |gradient jump|`
//!   (a max-norm estimator, maximized globally).
//!
//! For P1 fields the gradient jump is constant along each edge, so the edge
//! norms are computed exactly without edge quadrature: the squared L2 norm is
//! `jump^2 |S|` and the Linf norm is `|jump|`.

use thiserror::Error;

use crate::fem::FeFunction;
use crate::linalg::dense_solve_spd;
use crate::mesh::Mesh;
use crate::quadrature::{self, signed_area};

/// Spatial dimension; the indicator exponents are written in terms of it.
const DIM: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("edge {0} is not an interior edge")]
    NotInteriorEdge(usize),
    #[error("indicator field has kind {found:?}, expected {expected:?}")]
    KindMismatch {
        expected: IndicatorKind,
        found: IndicatorKind,
    },
    #[error("indicator fields have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("indicator field is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    /// Squared state indicators (summed into the global estimator).
    StateSquared,
    /// Adjoint indicators (maximized into the global estimator).
    Adjoint,
    /// Squared total indicators used for marking.
    TotalSquared,
}

/// Per-element nonnegative indicator values.
#[derive(Debug, Clone)]
pub struct IndicatorField {
    pub kind: IndicatorKind,
    pub values: Vec<f64>,
}

impl IndicatorField {
    pub fn new(kind: IndicatorKind, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|&v| v >= 0.0));
        Self { kind, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Signed gradient jump `[[grad v . nu]]` across interior edge `edge`.
///
/// With `nu_plus` the unit normal pointing towards one adjacent element and
/// `nu_minus = -nu_plus` towards the other, the value
/// `nu_plus . grad v|_plus + nu_minus . grad v|_minus` does not depend on
/// which element is labeled plus.
pub fn jump_gradient(mesh: &Mesh, v: &FeFunction, edge: usize) -> Result<f64, EstimatorError> {
    let e = mesh
        .interior_edges()
        .get(edge)
        .copied()
        .ok_or(EstimatorError::NotInteriorEdge(edge))?;
    let [a, b] = e.vertices;
    let pa = mesh.vertex(a);
    let pb = mesh.vertex(b);
    let tangent = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = tangent[0].hypot(tangent[1]);
    let normal = [-tangent[1] / len, tangent[0] / len];

    let [t_plus, t_minus] = e.triangles;
    // orient the normal towards t_plus
    let c = mesh.triangle_coords(t_plus);
    let centroid = [
        (c[0][0] + c[1][0] + c[2][0]) / 3.0,
        (c[0][1] + c[1][1] + c[2][1]) / 3.0,
    ];
    let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
    let towards_plus = (centroid[0] - mid[0]) * normal[0] + (centroid[1] - mid[1]) * normal[1];
    let nu_plus = if towards_plus >= 0.0 {
        normal
    } else {
        [-normal[0], -normal[1]]
    };

    let g_plus = v.gradient_on(t_plus);
    let g_minus = v.gradient_on(t_minus);
    Ok(nu_plus[0] * (g_plus[0] - g_minus[0]) + nu_plus[1] * (g_plus[1] - g_minus[1]))
}

fn edge_length(mesh: &Mesh, edge: usize) -> f64 {
    let [a, b] = mesh.interior_edges()[edge].vertices;
    let pa = mesh.vertex(a);
    let pb = mesh.vertex(b);
    (pa[0] - pb[0]).hypot(pa[1] - pb[1])
}

/// Squared state indicator of element `t`:
/// `h_T^3 sum_{S in interior edges of T} jump_S^2 |S|`.
pub fn indicator_state(mesh: &Mesh, y: &FeFunction, t: usize) -> f64 {
    let h = mesh.element_size(t);
    let mut jumps_sq = 0.0;
    for e in mesh.interior_edges_of(t) {
        let jump = jump_gradient(mesh, y, e).expect("edge ids from the mesh are interior");
        jumps_sq += jump * jump * edge_length(mesh, e);
    }
    h.powi(3) * jumps_sq
}

/// Squared state indicators for all elements.
pub fn indicator_state_field(mesh: &Mesh, y: &FeFunction) -> IndicatorField {
    let values = (0..mesh.num_triangles())
        .map(|t| indicator_state(mesh, y, t))
        .collect();
    IndicatorField::new(IndicatorKind::StateSquared, values)
}

/// Global state estimator: the square root of the indicator sum.
pub fn estimator_state_global(field: &IndicatorField) -> Result<f64, EstimatorError> {
    if field.kind != IndicatorKind::StateSquared {
        return Err(EstimatorError::KindMismatch {
            expected: IndicatorKind::StateSquared,
            found: field.kind,
        });
    }
    Ok(field.values.iter().sum::<f64>().sqrt())
}

/// Adjoint indicator of element `t`:
/// `h_T^{2-d/2} ||y - y_d||_{L2(T)} + h_T max_S |jump_S(grad p)|`.
pub fn indicator_adjoint(
    mesh: &Mesh,
    p: &FeFunction,
    y: &FeFunction,
    desired_state: impl Fn([f64; 2]) -> f64,
    t: usize,
    degree: usize,
) -> f64 {
    let h = mesh.element_size(t);
    let tri = mesh.triangle(t);
    let c = mesh.triangle_coords(t);
    let rule = quadrature::rule(degree).expect("valid degree");
    let jac = 2.0 * signed_area(c[0], c[1], c[2]);
    let mut residual_sq = 0.0;
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let x = [
            bary[0] * c[0][0] + bary[1] * c[1][0] + bary[2] * c[2][0],
            bary[0] * c[0][1] + bary[1] * c[1][1] + bary[2] * c[2][1],
        ];
        let yh: f64 = (0..3).map(|i| bary[i] * y.value(tri[i])).sum();
        let diff = yh - desired_state(x);
        residual_sq += w * jac * diff * diff;
    }
    let mut max_jump = 0.0f64;
    for e in mesh.interior_edges_of(t) {
        let jump = jump_gradient(mesh, p, e).expect("edge ids from the mesh are interior");
        max_jump = max_jump.max(jump.abs());
    }
    h.powf(2.0 - DIM / 2.0) * residual_sq.sqrt() + h * max_jump
}

/// Adjoint indicators for all elements.
pub fn indicator_adjoint_field(
    mesh: &Mesh,
    p: &FeFunction,
    y: &FeFunction,
    desired_state: impl Fn([f64; 2]) -> f64,
    degree: usize,
) -> IndicatorField {
    let values = (0..mesh.num_triangles())
        .map(|t| indicator_adjoint(mesh, p, y, &desired_state, t, degree))
        .collect();
    IndicatorField::new(IndicatorKind::Adjoint, values)
}

/// Global adjoint estimator: the maximum over all elements.
pub fn estimator_adjoint_global(field: &IndicatorField) -> Result<f64, EstimatorError> {
    if field.kind != IndicatorKind::Adjoint {
        return Err(EstimatorError::KindMismatch {
            expected: IndicatorKind::Adjoint,
            found: field.kind,
        });
    }
    if field.is_empty() {
        return Err(EstimatorError::Empty);
    }
    Ok(field.values.iter().fold(0.0f64, |m, &v| m.max(v)))
}

/// Per-element squared total indicator: state squared plus adjoint squared.
pub fn indicator_total(
    state_sq: &IndicatorField,
    adjoint: &IndicatorField,
) -> Result<IndicatorField, EstimatorError> {
    if state_sq.kind != IndicatorKind::StateSquared {
        return Err(EstimatorError::KindMismatch {
            expected: IndicatorKind::StateSquared,
            found: state_sq.kind,
        });
    }
    if adjoint.kind != IndicatorKind::Adjoint {
        return Err(EstimatorError::KindMismatch {
            expected: IndicatorKind::Adjoint,
            found: adjoint.kind,
        });
    }
    if state_sq.len() != adjoint.len() {
        return Err(EstimatorError::LengthMismatch(
            state_sq.len(),
            adjoint.len(),
        ));
    }
    let values = state_sq
        .values
        .iter()
        .zip(&adjoint.values)
        .map(|(s, a)| s + a * a)
        .collect();
    Ok(IndicatorField::new(IndicatorKind::TotalSquared, values))
}

/// Data oscillation of `g` over the element set:
/// `(sum_T h_T^{2(2-d/2)} ||g - Pi_T g||^2_{L2(T)})^{1/2}`, with `Pi_T` the
/// elementwise L2 projection onto linears.
pub fn oscillation(
    mesh: &Mesh,
    g: impl Fn([f64; 2]) -> f64,
    elements: &[usize],
    degree: usize,
) -> f64 {
    let rule = quadrature::rule(degree).expect("valid degree");
    let mut total = 0.0;
    for &t in elements {
        let tri_coords = mesh.triangle_coords(t);
        let jac = 2.0 * signed_area(tri_coords[0], tri_coords[1], tri_coords[2]);
        // local projection: solve the 3x3 mass system M c = (g, phi_i)
        let mut rhs = [0.0; 3];
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * tri_coords[0][0]
                    + bary[1] * tri_coords[1][0]
                    + bary[2] * tri_coords[2][0],
                bary[0] * tri_coords[0][1]
                    + bary[1] * tri_coords[1][1]
                    + bary[2] * tri_coords[2][1],
            ];
            let gx = g(x);
            for i in 0..3 {
                rhs[i] += w * jac * gx * bary[i];
            }
        }
        let m = crate::fem::local_mass(&tri_coords);
        let mut m_dense = vec![m[0].to_vec(), m[1].to_vec(), m[2].to_vec()];
        let c = dense_solve_spd(&mut m_dense, &rhs).expect("local mass matrix is SPD");
        // integrate the pointwise projection residual directly (no
        // Pythagoras shortcut, which cancels catastrophically when g is
        // close to linear)
        let mut residual_sq = 0.0;
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * tri_coords[0][0]
                    + bary[1] * tri_coords[1][0]
                    + bary[2] * tri_coords[2][0],
                bary[0] * tri_coords[0][1]
                    + bary[1] * tri_coords[1][1]
                    + bary[2] * tri_coords[2][1],
            ];
            let proj: f64 = (0..3).map(|i| c[i] * bary[i]).sum();
            let diff = g(x) - proj;
            residual_sq += w * jac * diff * diff;
        }
        let h = mesh.element_size(t);
        total += h.powf(2.0 * (2.0 - DIM / 2.0)) * residual_sq;
    }
    total.sqrt()
}

/// Logarithmic factor `| log ( max_T 1/h_T ) |` entering the max-norm
/// reliability bound.
pub fn log_factor(mesh: &Mesh) -> f64 {
    (1.0 / mesh.h_min()).ln().abs()
}
