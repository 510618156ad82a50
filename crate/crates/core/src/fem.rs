//! P1 finite elements on a [`Mesh`]: stiffness, mass, load vectors, Dirac
//! loads, point evaluation and error norms.
//!
//! Homogeneous Dirichlet conditions are imposed by restricting rows and
//! columns to interior nodes, which keeps the stiffness matrix SPD. A Dirac
//! measure placed at interior nodes pairs with the nodal basis through the
//! Kronecker property, so its load vector is just its coefficient vector.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;
use crate::quadrature::{self, signed_area, QuadratureError, QuadratureRule, ERROR_DEGREE};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("triangle {0} is degenerate (area <= 0)")]
    DegenerateTriangle(usize),
    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideMesh(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// A continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_vertices());
        Self { mesh, values }
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_vertices();
        Self::new(mesh, vec![0.0; n])
    }

    /// Builds a zero-trace function from interior-node coefficients.
    pub fn from_interior(mesh: Arc<Mesh>, interior: &[f64]) -> Self {
        assert_eq!(interior.len(), mesh.num_interior_nodes());
        let mut values = vec![0.0; mesh.num_vertices()];
        for (&vertex, &v) in mesh.interior_nodes().iter().zip(interior) {
            values[vertex] = v;
        }
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> f64 {
        self.values[vertex]
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mesh
            .interior_nodes()
            .iter()
            .map(|&v| self.values[v])
            .collect()
    }

    /// The (constant) gradient on element `t`.
    pub fn gradient_on(&self, t: usize) -> [f64; 2] {
        let tri = self.mesh.triangle(t);
        let c = self.mesh.triangle_coords(t);
        let area2 = 2.0 * signed_area(c[0], c[1], c[2]);
        let mut g = [0.0, 0.0];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            // gradient of the hat function of local vertex i
            let gx = (c[j][1] - c[k][1]) / area2;
            let gy = (c[k][0] - c[j][0]) / area2;
            g[0] += self.values[tri[i]] * gx;
            g[1] += self.values[tri[i]] * gy;
        }
        g
    }

    /// Value at `x` inside element `t` by barycentric interpolation.
    pub fn eval_in_triangle(&self, t: usize, x: [f64; 2]) -> f64 {
        let tri = self.mesh.triangle(t);
        let bary = barycentric(&self.mesh.triangle_coords(t), x);
        (0..3).map(|i| bary[i] * self.values[tri[i]]).sum()
    }

    /// Evaluates at an arbitrary point, locating the containing triangle by
    /// walking across edges, with a brute-force fallback.
    pub fn evaluate(&self, x: [f64; 2]) -> Result<f64, FemError> {
        const TOL: f64 = 1e-12;
        let mesh = &self.mesh;
        let mut t = 0usize;
        for _ in 0..2 * mesh.num_triangles() + 8 {
            let bary = barycentric(&mesh.triangle_coords(t), x);
            let (worst, worst_val) = bary
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, &v)| (i, v))
                .unwrap();
            if worst_val >= -TOL {
                return Ok(self.eval_in_triangle(t, x));
            }
            // cross the edge opposite the most negative coordinate
            match neighbor_across_local_edge(mesh, t, worst) {
                Some(next) => t = next,
                None => break,
            }
        }
        // brute force over all elements
        for t in 0..mesh.num_triangles() {
            let bary = barycentric(&mesh.triangle_coords(t), x);
            if bary.iter().all(|&l| l >= -TOL) {
                return Ok(self.eval_in_triangle(t, x));
            }
        }
        Err(FemError::PointOutsideMesh(x[0], x[1]))
    }
}

/// Interior-edge neighbor of `t` across its local edge opposite vertex `k`.
fn neighbor_across_local_edge(mesh: &Mesh, t: usize, k: usize) -> Option<usize> {
    let tri = mesh.triangle(t);
    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
    for e in mesh.interior_edges_of(t) {
        let edge = mesh.interior_edges()[e];
        let mut vs = edge.vertices;
        vs.sort_unstable();
        let mut key = [a, b];
        key.sort_unstable();
        if vs == key {
            return edge.triangles.iter().copied().find(|&s| s != t);
        }
    }
    None
}

fn barycentric(c: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let total = signed_area(c[0], c[1], c[2]);
    [
        signed_area(x, c[1], c[2]) / total,
        signed_area(c[0], x, c[2]) / total,
        signed_area(c[0], c[1], x) / total,
    ]
}

/// A measure `sum_i u_i delta_{x_i}` over the interior nodes of a mesh.
#[derive(Debug, Clone)]
pub struct ControlMeasure {
    mesh: Arc<Mesh>,
    coefficients: Vec<f64>,
}

impl ControlMeasure {
    pub fn new(mesh: Arc<Mesh>, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), mesh.num_interior_nodes());
        assert!(coefficients.iter().all(|c| c.is_finite()));
        Self { mesh, coefficients }
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_interior_nodes();
        Self::new(mesh, vec![0.0; n])
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Total variation norm: the nodes are distinct, so it is `sum |u_i|`.
    pub fn measure_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    /// Interior-node indices carrying a coefficient above `tol` in modulus.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Local P1 stiffness matrix of a triangle with the given coordinates.
pub fn local_stiffness(c: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(c[0], c[1], c[2]);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i] = [
            (c[j][1] - c[k][1]) / (2.0 * area),
            (c[k][0] - c[j][0]) / (2.0 * area),
        ];
    }
    let mut local = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            local[i][j] = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
        }
    }
    local
}

/// Local P1 mass matrix: `area/12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn local_mass(c: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(c[0], c[1], c[2]);
    let mut local = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            local[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    local
}

fn assemble(
    mesh: &Mesh,
    local: impl Fn(&[[f64; 2]; 3]) -> [[f64; 3]; 3],
    restrict: bool,
) -> Result<SparseMatrix, FemError> {
    let mut triplets = Vec::new();
    for t in 0..mesh.num_triangles() {
        let coords = mesh.triangle_coords(t);
        if signed_area(coords[0], coords[1], coords[2]) <= 0.0 {
            return Err(FemError::DegenerateTriangle(t));
        }
        let tri = mesh.triangle(t);
        let loc = local(&coords);
        for i in 0..3 {
            for j in 0..3 {
                if restrict {
                    if let (Some(di), Some(dj)) =
                        (mesh.dof_of_vertex(tri[i]), mesh.dof_of_vertex(tri[j]))
                    {
                        triplets.push((di, dj, loc[i][j]));
                    }
                } else {
                    triplets.push((tri[i], tri[j], loc[i][j]));
                }
            }
        }
    }
    let n = if restrict {
        mesh.num_interior_nodes()
    } else {
        mesh.num_vertices()
    };
    Ok(SparseMatrix::from_triplets(n, &triplets)?)
}

/// Stiffness matrix restricted to interior nodes; SPD.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix, FemError> {
    assemble(mesh, local_stiffness, true)
}

/// Stiffness matrix over all vertices (singular: constants in the kernel).
pub fn assemble_stiffness_full(mesh: &Mesh) -> Result<SparseMatrix, FemError> {
    assemble(mesh, local_stiffness, false)
}

/// Mass matrix restricted to interior nodes; SPD.
pub fn assemble_mass(mesh: &Mesh) -> Result<SparseMatrix, FemError> {
    assemble(mesh, local_mass, true)
}

/// Mass matrix over all vertices.
pub fn assemble_mass_full(mesh: &Mesh) -> Result<SparseMatrix, FemError> {
    assemble(mesh, local_mass, false)
}

fn load_l2(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64, rule: &QuadratureRule) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let c = mesh.triangle_coords(t);
        let jac = 2.0 * signed_area(c[0], c[1], c[2]);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * c[0][0] + bary[1] * c[1][0] + bary[2] * c[2][0],
                bary[0] * c[0][1] + bary[1] * c[1][1] + bary[2] * c[2][1],
            ];
            let fw = f(x) * w * jac;
            for i in 0..3 {
                load[tri[i]] += fw * bary[i];
            }
        }
    }
    load
}

/// Load vector `b_j = (f, phi_j)` over all vertices.
pub fn assemble_load_l2_full(
    mesh: &Mesh,
    f: impl Fn([f64; 2]) -> f64,
    degree: usize,
) -> Result<Vec<f64>, FemError> {
    let rule = quadrature::rule(degree)?;
    Ok(load_l2(mesh, f, &rule))
}

/// Load vector `b_j = (f, phi_j)` restricted to interior nodes.
pub fn assemble_load_l2(
    mesh: &Mesh,
    f: impl Fn([f64; 2]) -> f64,
    degree: usize,
) -> Result<Vec<f64>, FemError> {
    let full = assemble_load_l2_full(mesh, f, degree)?;
    Ok(mesh.interior_nodes().iter().map(|&v| full[v]).collect())
}

/// Load vector of a Dirac-combination control: `<u, phi_i> = u_i` since the
/// nodal basis satisfies `phi_i(x_j) = delta_ij`.
pub fn dirac_load(u: &ControlMeasure) -> Vec<f64> {
    u.coefficients().to_vec()
}

/// `L2(Omega)` distance between a P1 function and an exact field.
pub fn error_l2(v: &FeFunction, exact: impl Fn([f64; 2]) -> f64, degree: usize) -> f64 {
    let rule = quadrature::rule(degree).expect("valid degree");
    let mesh = v.mesh();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let c = mesh.triangle_coords(t);
        let jac = 2.0 * signed_area(c[0], c[1], c[2]);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * c[0][0] + bary[1] * c[1][0] + bary[2] * c[2][0],
                bary[0] * c[0][1] + bary[1] * c[1][1] + bary[2] * c[2][1],
            ];
            let vh: f64 = (0..3).map(|i| bary[i] * v.value(tri[i])).sum();
            let diff = vh - exact(x);
            total += w * jac * diff * diff;
        }
    }
    total.sqrt()
}

/// `L^inf(Omega)` distance, sampled at all degree-19 quadrature points and
/// all vertices of every element.
pub fn error_linf(v: &FeFunction, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let rule = quadrature::rule(ERROR_DEGREE).expect("valid degree");
    let mesh = v.mesh();
    let mut max = 0.0f64;
    for (vertex, &x) in mesh.vertices().iter().enumerate() {
        max = max.max((v.value(vertex) - exact(x)).abs());
    }
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let c = mesh.triangle_coords(t);
        for bary in &rule.points {
            let x = [
                bary[0] * c[0][0] + bary[1] * c[1][0] + bary[2] * c[2][0],
                bary[0] * c[0][1] + bary[1] * c[1][1] + bary[2] * c[2][1],
            ];
            let vh: f64 = (0..3).map(|i| bary[i] * v.value(tri[i])).sum();
            max = max.max((vh - exact(x)).abs());
        }
    }
    max
}
