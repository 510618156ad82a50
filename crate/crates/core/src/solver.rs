//! Solver for the discrete optimality system: state equation, adjoint
//! equation and the measure-space variational inequality.
//!
//! Pairing a Dirac combination with the nodal basis reduces the discrete
//! problem to coefficients: the measure norm becomes the l1 norm of the
//! coefficient vector and the problem becomes l1-regularized quadratic
//! minimization of
//!
//! `f(u) = 1/2 u^T H u - g^T u + alpha ||u||_1`,
//! `H = K^{-1} M K^{-1}`, `g = K^{-1} b_d`,
//!
//! whose gradient `H u - g` equals the discrete adjoint `p(u)` at the
//! interior nodes. A semismooth Newton method on the fixed-point equation
//! `u = S_{c alpha}(u - c p(u))` (c = 1) solves it: each step zeroes the
//! active set and solves a small dense SPD system on the inactive set,
//! assembled from cached Hessian columns. An accelerated proximal-gradient
//! method with backtracking serves as an independent cross-check.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::fem::{self, ControlMeasure, FeFunction, FemError};
use crate::linalg::{dense_solve_spd, LinalgError, SolverKind, SparseMatrix, SpdSolver};
use crate::mesh::Mesh;
use crate::quadrature;
use crate::ScalarField;

/// Default fixed-point residual tolerance of the semismooth Newton method.
pub const SSN_TOL: f64 = 1e-10;
/// Default iteration cap of the semismooth Newton method.
pub const SSN_MAX_ITER: usize = 100;
/// Default fixed-point residual tolerance of the proximal-gradient oracle.
pub const FISTA_TOL: f64 = 1e-12;
/// Default iteration cap of the proximal-gradient oracle.
pub const FISTA_MAX_ITER: usize = 1_000_000;

const STALL_LIMIT: usize = 5;
/// Residual reduction a proximal rescue must achieve before Newton resumes.
const RESCUE_TARGET_FACTOR: f64 = 0.25;
const RESCUE_STEP_CAP: usize = 200_000;
const RESCUE_CHECK_EVERY: usize = 5;
/// Largest support solved densely from cached Hessian columns; larger
/// supports use preconditioned conjugate gradients on the reduced Hessian.
const DENSE_SUPPORT_CAP: usize = 400;
const SUPPORT_CG_TOL: f64 = 1e-12;
const SUPPORT_CG_TOL_LOOSE: f64 = 1e-8;
const SUPPORT_CG_MAX_ITER: usize = 50_000;

#[derive(Debug, Error)]
pub enum OcpError {
    #[error("mesh has no interior nodes; the discrete control space is empty")]
    NoInteriorNodes,
    #[error(
        "semismooth Newton did not converge in {iterations} iterations (residual {residual:.3e})"
    )]
    MaxIterations {
        iterations: usize,
        residual: f64,
        /// The last iterate, so callers can retry or inspect it.
        last: Box<OcpSolution>,
    },
    #[error("proximal gradient hit the iteration cap {iterations} (residual {residual:.3e})")]
    FistaIterationCap { iterations: usize, residual: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The sparse optimal control problem on a fixed mesh.
#[derive(Clone)]
pub struct OcpProblem {
    pub mesh: Arc<Mesh>,
    /// Sparsity parameter; must be positive.
    pub alpha: f64,
    /// Desired state, evaluable over the domain.
    pub desired_state: ScalarField,
    /// Quadrature degree for the desired-state load and cost terms.
    pub quad_degree: usize,
}

impl OcpProblem {
    pub fn new(
        mesh: Arc<Mesh>,
        alpha: f64,
        desired_state: ScalarField,
        quad_degree: usize,
    ) -> Self {
        assert!(alpha > 0.0, "sparsity parameter must be positive");
        Self {
            mesh,
            alpha,
            desired_state,
            quad_degree,
        }
    }
}

/// A solution of the discrete optimality system.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub state: FeFunction,
    pub adjoint: FeFunction,
    pub control: ControlMeasure,
    /// Fixed-point residual `||u - S_alpha(u - p(u))||_inf` at the returned
    /// iterate.
    pub kkt_residual: f64,
    pub newton_iterations: usize,
    /// Cost `1/2 ||y - y_d||^2 + alpha ||u||_M`.
    pub cost: f64,
}

/// The coefficient-space reduction of an [`OcpProblem`]: interior-restricted
/// stiffness and mass, the desired-state load, and a cached factorization of
/// the stiffness.
pub struct ReducedSystem {
    mesh: Arc<Mesh>,
    stiffness: SparseMatrix,
    mass: SparseMatrix,
    desired_load: Vec<f64>,
    /// `int y_d^2`, by the same quadrature as the load; fixes the cost
    /// constant.
    desired_sq: f64,
    solver: SpdSolver,
    hessian_columns: RefCell<HashMap<usize, Arc<Vec<f64>>>>,
    mass_solver: RefCell<Option<Arc<SpdSolver>>>,
}

/// Assembles the reduced system of a problem. Fails on meshes without
/// interior nodes.
pub fn reduce(problem: &OcpProblem) -> Result<ReducedSystem, OcpError> {
    let mesh = &problem.mesh;
    if mesh.num_interior_nodes() == 0 {
        return Err(OcpError::NoInteriorNodes);
    }
    let stiffness = fem::assemble_stiffness(mesh)?;
    let mass = fem::assemble_mass(mesh)?;
    let desired_load =
        fem::assemble_load_l2(mesh, |x| (problem.desired_state)(x), problem.quad_degree)?;
    let mut desired_sq = 0.0;
    for t in 0..mesh.num_triangles() {
        desired_sq += quadrature::integrate(
            |x| {
                let v = (problem.desired_state)(x);
                v * v
            },
            &mesh.triangle_coords(t),
            problem.quad_degree,
        )
        .map_err(FemError::from)?;
    }
    let solver = SpdSolver::new(&stiffness, SolverKind::Cholesky)?;
    Ok(ReducedSystem {
        mesh: mesh.clone(),
        stiffness,
        mass,
        desired_load,
        desired_sq,
        solver,
        hessian_columns: RefCell::new(HashMap::new()),
        mass_solver: RefCell::new(None),
    })
}

impl ReducedSystem {
    pub fn n(&self) -> usize {
        self.solver.n()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn desired_load(&self) -> &[f64] {
        &self.desired_load
    }

    /// `y(u) = K^{-1} u` as interior coefficients.
    fn state_coeffs(&self, u: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.solver.solve(u)
    }

    /// `p(y) = K^{-1}(M y - b_d)` as interior coefficients.
    fn adjoint_coeffs(&self, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut rhs = self.mass.matvec(y);
        for (r, b) in rhs.iter_mut().zip(&self.desired_load) {
            *r -= b;
        }
        self.solver.solve(&rhs)
    }

    /// Reduced gradient `p(u) = H u - g`, via two sparse solves.
    fn gradient(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        let y = self.state_coeffs(u)?;
        let p = self.adjoint_coeffs(&y)?;
        Ok((p, y))
    }

    /// Factorization of the mass matrix, built on first use.
    fn mass_solver(&self) -> Result<Arc<SpdSolver>, LinalgError> {
        if let Some(s) = self.mass_solver.borrow().as_ref() {
            return Ok(s.clone());
        }
        let solver = Arc::new(SpdSolver::new(&self.mass, SolverKind::Cholesky)?);
        *self.mass_solver.borrow_mut() = Some(solver.clone());
        Ok(solver)
    }

    /// `H v` for a full-length vector, via two stiffness solves.
    fn apply_hessian(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let y = self.solver.solve(v)?;
        let my = self.mass.matvec(&y);
        self.solver.solve(&my)
    }

    /// `H^{-1} r = K M^{-1} K r` for a full-length vector.
    fn apply_hessian_inverse(&self, r: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let kr = self.stiffness.matvec(r);
        let m_inv = self.mass_solver()?.solve(&kr)?;
        Ok(self.stiffness.matvec(&m_inv))
    }

    /// Column `j` of `H = K^{-1} M K^{-1}`, cached per mesh.
    fn hessian_column(&self, j: usize) -> Result<Arc<Vec<f64>>, LinalgError> {
        if let Some(col) = self.hessian_columns.borrow().get(&j) {
            return Ok(col.clone());
        }
        let mut e = vec![0.0; self.n()];
        e[j] = 1.0;
        let v = self.solver.solve(&e)?;
        let mv = self.mass.matvec(&v);
        let col = Arc::new(self.solver.solve(&mv)?);
        self.hessian_columns.borrow_mut().insert(j, col.clone());
        Ok(col)
    }

    /// Smooth part of the reduced cost at `u`, given `y = K^{-1} u`:
    /// `1/2 ||y_h - y_d||^2 = 1/2 (y^T M y - 2 b_d^T y + int y_d^2)`.
    fn tracking_cost(&self, y: &[f64]) -> f64 {
        let my = self.mass.matvec(y);
        let yty = crate::linalg::dot(y, &my);
        let bty = crate::linalg::dot(&self.desired_load, y);
        0.5 * (yty - 2.0 * bty + self.desired_sq)
    }
}

/// Solves the discrete state equation for a Dirac-combination control.
pub fn solve_state(rs: &ReducedSystem, u: &ControlMeasure) -> Result<FeFunction, OcpError> {
    let y = rs.state_coeffs(&fem::dirac_load(u))?;
    Ok(FeFunction::from_interior(rs.mesh.clone(), &y))
}

/// Solves the discrete adjoint equation for a given state.
pub fn solve_adjoint(rs: &ReducedSystem, y: &FeFunction) -> Result<FeFunction, OcpError> {
    let p = rs.adjoint_coeffs(&y.interior_values())?;
    Ok(FeFunction::from_interior(rs.mesh.clone(), &p))
}

/// Componentwise soft threshold `sign(v) max(|v| - tau, 0)`.
pub fn soft_threshold(v: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    v.iter().map(|&x| soft_threshold_scalar(x, tau)).collect()
}

pub fn soft_threshold_scalar(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Residual of the fixed-point optimality form with unit step:
/// `||u - S_alpha(u - p(u))||_inf`.
pub fn optimality_residual(rs: &ReducedSystem, u: &[f64], alpha: f64) -> Result<f64, OcpError> {
    let (p, _) = rs.gradient(u)?;
    Ok(fixed_point_residual(u, &p, alpha))
}

fn fixed_point_residual(u: &[f64], p: &[f64], alpha: f64) -> f64 {
    let mut res = 0.0f64;
    for i in 0..u.len() {
        let s = soft_threshold_scalar(u[i] - p[i], alpha);
        res = res.max((u[i] - s).abs());
    }
    res
}

/// Options for [`semismooth_newton`].
#[derive(Debug, Clone, Copy)]
pub struct SsnOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SsnOptions {
    fn default() -> Self {
        Self {
            tol: SSN_TOL,
            max_iter: SSN_MAX_ITER,
        }
    }
}

/// Semismooth Newton method for the reduced l1-regularized problem.
///
/// Each iteration splits the nodes by the fixed-point map into an active set
/// (coefficients set to zero) and an inactive set, on which the exact Newton
/// step solves `H_II u_I = g_I - alpha s_I`. If the residual stalls for
/// several consecutive steps, monotone proximal-gradient steps run
/// until it drops below a geometrically shrinking target, then Newton
/// resumes.
pub fn semismooth_newton(
    problem: &OcpProblem,
    warm_start: Option<&ControlMeasure>,
    options: &SsnOptions,
) -> Result<OcpSolution, OcpError> {
    let rs = reduce(problem)?;
    semismooth_newton_reduced(&rs, problem, warm_start, options)
}

/// Same as [`semismooth_newton`] but reusing an existing reduction.
pub fn semismooth_newton_reduced(
    rs: &ReducedSystem,
    problem: &OcpProblem,
    warm_start: Option<&ControlMeasure>,
    options: &SsnOptions,
) -> Result<OcpSolution, OcpError> {
    let n = rs.n();
    let alpha = problem.alpha;
    let g = rs.solver.solve(&rs.desired_load)?;

    let mut u = match warm_start {
        Some(w) => {
            assert_eq!(
                w.coefficients().len(),
                n,
                "warm start must live on the problem mesh"
            );
            w.coefficients().to_vec()
        }
        None => vec![0.0; n],
    };

    let mut best_residual = f64::INFINITY;
    let mut stall = 0usize;
    let mut fista_state: Option<FistaState> = None;
    let mut rescue_anchor: Option<f64> = None;
    let mut rescue_level = 0u32;
    let mut last_pattern: Option<(Vec<usize>, Vec<f64>)> = None;

    for iteration in 0..=options.max_iter {
        let (p, y) = rs.gradient(&u)?;
        let residual = fixed_point_residual(&u, &p, alpha);
        if residual <= options.tol {
            return Ok(build_solution(rs, problem, u, y, p, residual, iteration));
        }
        if iteration == options.max_iter {
            let sol = build_solution(rs, problem, u, y, p, residual, iteration);
            return Err(OcpError::MaxIterations {
                iterations: iteration,
                residual,
                last: Box::new(sol),
            });
        }

        if residual < best_residual * (1.0 - 1e-12) {
            best_residual = residual;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= STALL_LIMIT {
            // Globalization: the active-set step can cycle between two sign
            // patterns (a known failure mode when most nodes carry mass).
            // Monotone proximal steps are run until the fixed-point residual
            // actually improves, then Newton resumes from that iterate.
            let state = match &mut fista_state {
                Some(s) => s,
                None => {
                    fista_state = Some(FistaState::new(rs, alpha)?);
                    fista_state.as_mut().unwrap()
                }
            };
            state.reset(u.clone(), rs)?;
            // rescue targets shrink geometrically from the first stall, so
            // each rescue stays short while the sequence still converges
            let anchor = *rescue_anchor.get_or_insert(residual);
            rescue_level += 1;
            let target =
                (anchor * RESCUE_TARGET_FACTOR.powi(rescue_level as i32)).max(0.5 * options.tol);
            let mut rescued = f64::INFINITY;
            let trace = std::env::var_os("OCP_AFEM_TRACE").is_some();
            let t0 = std::time::Instant::now();
            let mut steps_taken = 0;
            for step in 1..=RESCUE_STEP_CAP {
                state.step(rs)?;
                steps_taken = step;
                if step % RESCUE_CHECK_EVERY == 0 {
                    rescued = optimality_residual(rs, &state.x, alpha)?;
                    if rescued <= target {
                        break;
                    }
                }
            }
            if trace {
                eprintln!(
                    "  [trace] rescue at iter {iteration}: {steps_taken} prox steps, residual {residual:.2e} -> {rescued:.2e}, {:?}",
                    t0.elapsed()
                );
            }
            u = state.x.clone();
            best_residual = rescued.min(best_residual);
            stall = 0;
            continue;
        }

        // active set step: w = u - p, inactive where |w| > alpha
        let mut inactive = Vec::new();
        for i in 0..n {
            if (u[i] - p[i]).abs() > alpha {
                inactive.push(i);
            }
        }
        let signs: Vec<f64> = inactive.iter().map(|&i| (u[i] - p[i]).signum()).collect();
        if last_pattern
            .as_ref()
            .is_some_and(|(li, ls)| *li == inactive && *ls == signs)
        {
            // same classification as the step that produced u: the solve
            // would reproduce u, so only the residual can decide, and it is
            // above tolerance; treat as a stalled step
            stall = STALL_LIMIT.max(stall);
            continue;
        }
        last_pattern = Some((inactive.clone(), signs.clone()));
        // inexact early steps: the classification only needs w to alpha
        // accuracy until the pattern settles; the last steps are exact
        let cg_tol = if residual > 1e-5 {
            SUPPORT_CG_TOL_LOOSE
        } else {
            SUPPORT_CG_TOL
        };
        u = solve_on_support(rs, &g, alpha, inactive, signs, &u, cg_tol)?;
    }
    unreachable!("loop returns on convergence or on the final iteration");
}

/// Solves `H_II u_I = g_I - alpha s_I` on the candidate support, then
/// enforces sign consistency: nodes whose solved coefficient contradicts the
/// sign that classified them are removed and the system is re-solved. The
/// result is the orthant-constrained optimum over the surviving support.
/// Without the repair, two nearly collinear Hessian columns (adjacent nodes)
/// produce large wrong-signed pairs and the outer iteration cycles.
///
/// Small supports are solved densely from cached Hessian columns; large
/// ones (common for small `alpha`, where most nodes carry mass) by
/// conjugate gradients with matrix-free `H` products, preconditioned by the
/// restriction of the exact full-space inverse `H^{-1} = K M^{-1} K`.
fn solve_on_support(
    rs: &ReducedSystem,
    g: &[f64],
    alpha: f64,
    mut support: Vec<usize>,
    mut signs: Vec<f64>,
    current: &[f64],
    cg_tol: f64,
) -> Result<Vec<f64>, OcpError> {
    let n = rs.n();
    let mut warm = current.to_vec();
    loop {
        if support.is_empty() {
            return Ok(vec![0.0; n]);
        }
        let m = support.len();
        let rhs: Vec<f64> = support
            .iter()
            .zip(&signs)
            .map(|(&i, &s)| g[i] - alpha * s)
            .collect();
        let z = if m <= DENSE_SUPPORT_CAP {
            let mut h = vec![vec![0.0; m]; m];
            for (cj, &j) in support.iter().enumerate() {
                let col = rs.hessian_column(j)?;
                for (ri, &i) in support.iter().enumerate() {
                    h[ri][cj] = col[i];
                }
            }
            dense_solve_spd(&mut h, &rhs)?
        } else {
            let initial: Vec<f64> = support.iter().map(|&i| warm[i]).collect();
            support_cg(rs, &support, &rhs, initial, cg_tol)?
        };
        let keep: Vec<bool> = z.iter().zip(&signs).map(|(&zi, &s)| zi * s > 0.0).collect();
        if keep.iter().all(|&k| k) {
            let mut u = vec![0.0; n];
            for (&i, &zi) in support.iter().zip(&z) {
                u[i] = zi;
            }
            return Ok(u);
        }
        // repair: drop sign-inconsistent nodes, re-solve from this iterate
        warm = vec![0.0; n];
        let mut kept_support = Vec::with_capacity(m);
        let mut kept_signs = Vec::with_capacity(m);
        for k in 0..m {
            if keep[k] {
                warm[support[k]] = z[k];
                kept_support.push(support[k]);
                kept_signs.push(signs[k]);
            }
        }
        support = kept_support;
        signs = kept_signs;
    }
}

/// Preconditioned conjugate gradients for `H_II z = rhs` with matrix-free
/// products (two stiffness solves per product).
fn support_cg(
    rs: &ReducedSystem,
    support: &[usize],
    rhs: &[f64],
    initial: Vec<f64>,
    cg_tol: f64,
) -> Result<Vec<f64>, OcpError> {
    let n = rs.n();
    let m = support.len();
    let extend = |v: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (&i, &vi) in support.iter().zip(v) {
            full[i] = vi;
        }
        full
    };
    let restrict = |full: &[f64]| -> Vec<f64> { support.iter().map(|&i| full[i]).collect() };
    let apply = |v: &[f64]| -> Result<Vec<f64>, LinalgError> {
        Ok(restrict(&rs.apply_hessian(&extend(v))?))
    };
    let precondition = |r: &[f64]| -> Result<Vec<f64>, LinalgError> {
        Ok(restrict(&rs.apply_hessian_inverse(&extend(r))?))
    };

    let rhs_norm = crate::linalg::norm(rhs).max(f64::MIN_POSITIVE);
    let trace = std::env::var_os("OCP_AFEM_TRACE").is_some();
    let t0 = std::time::Instant::now();
    let mut z = initial;
    let mut r: Vec<f64> = {
        let az = apply(&z)?;
        rhs.iter().zip(&az).map(|(b, a)| b - a).collect()
    };
    if crate::linalg::norm(&r) <= cg_tol * rhs_norm {
        return Ok(z);
    }
    let mut s = precondition(&r)?;
    let mut p = s.clone();
    let mut rs_dot = crate::linalg::dot(&r, &s);
    for iter in 0..SUPPORT_CG_MAX_ITER {
        let ap = apply(&p)?;
        let pap = crate::linalg::dot(&p, &ap);
        if pap <= 0.0 {
            return Err(OcpError::Linalg(LinalgError::NotSpd));
        }
        let step = rs_dot / pap;
        for k in 0..m {
            z[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        if crate::linalg::norm(&r) <= cg_tol * rhs_norm {
            if trace {
                eprintln!(
                    "  [trace] support cg: m = {m}, {} iters, {:?}",
                    iter + 1,
                    t0.elapsed()
                );
            }
            return Ok(z);
        }
        s = precondition(&r)?;
        let rs_new = crate::linalg::dot(&r, &s);
        let beta = rs_new / rs_dot;
        rs_dot = rs_new;
        for k in 0..m {
            p[k] = s[k] + beta * p[k];
        }
    }
    Err(OcpError::Linalg(LinalgError::NoConvergence(
        SUPPORT_CG_MAX_ITER,
    )))
}

fn build_solution(
    rs: &ReducedSystem,
    problem: &OcpProblem,
    u: Vec<f64>,
    y: Vec<f64>,
    p: Vec<f64>,
    residual: f64,
    newton_iterations: usize,
) -> OcpSolution {
    let cost = rs.tracking_cost(&y) + problem.alpha * u.iter().map(|c| c.abs()).sum::<f64>();
    OcpSolution {
        state: FeFunction::from_interior(rs.mesh.clone(), &y),
        adjoint: FeFunction::from_interior(rs.mesh.clone(), &p),
        control: ControlMeasure::new(rs.mesh.clone(), u),
        kkt_residual: residual,
        newton_iterations,
        cost,
    }
}

/// Options for [`fista_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct FistaOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            tol: FISTA_TOL,
            max_iter: FISTA_MAX_ITER,
        }
    }
}

/// Result of the proximal-gradient oracle.
pub struct FistaResult {
    pub control: ControlMeasure,
    pub iterations: usize,
    pub residual: f64,
    /// Total cost `f(x) + alpha ||x||_1` after every iteration; nonincreasing.
    pub cost_trace: Vec<f64>,
}

/// Monotone accelerated proximal-gradient state.
struct FistaState {
    alpha: f64,
    lipschitz: f64,
    x: Vec<f64>,
    z: Vec<f64>,
    theta: f64,
    cost_x: f64,
}

impl FistaState {
    fn new(rs: &ReducedSystem, alpha: f64) -> Result<Self, OcpError> {
        let lipschitz = estimate_lipschitz(rs)?;
        let n = rs.n();
        let mut state = Self {
            alpha,
            lipschitz,
            x: vec![0.0; n],
            z: vec![0.0; n],
            theta: 1.0,
            cost_x: 0.0,
        };
        state.reset(vec![0.0; n], rs)?;
        Ok(state)
    }

    fn reset(&mut self, x: Vec<f64>, rs: &ReducedSystem) -> Result<(), OcpError> {
        self.cost_x = self.total_cost(rs, &x)?;
        self.z = x.clone();
        self.x = x;
        self.theta = 1.0;
        Ok(())
    }

    fn total_cost(&self, rs: &ReducedSystem, u: &[f64]) -> Result<f64, OcpError> {
        let y = rs.state_coeffs(u)?;
        Ok(rs.tracking_cost(&y) + self.alpha * u.iter().map(|c| c.abs()).sum::<f64>())
    }

    /// Curvature along `d`: `d^T H d = (K^{-1} d)^T M (K^{-1} d)`.
    fn curvature(&self, rs: &ReducedSystem, d: &[f64]) -> Result<f64, OcpError> {
        let v = rs.state_coeffs(d)?;
        let mv = rs.mass.matvec(&v);
        Ok(crate::linalg::dot(&v, &mv))
    }

    /// Backtracked proximal step from `base` along its gradient; returns the
    /// candidate. Doubles the Lipschitz estimate until the local quadratic
    /// model majorizes the curvature along the step.
    fn prox_step(
        &mut self,
        rs: &ReducedSystem,
        base: &[f64],
        grad: &[f64],
    ) -> Result<Vec<f64>, OcpError> {
        loop {
            let t = 1.0 / self.lipschitz;
            let trial: Vec<f64> = base
                .iter()
                .zip(grad)
                .map(|(&b, &g)| soft_threshold_scalar(b - t * g, self.alpha * t))
                .collect();
            let d: Vec<f64> = trial.iter().zip(base).map(|(a, b)| a - b).collect();
            let dd = crate::linalg::dot(&d, &d);
            if dd == 0.0 || self.curvature(rs, &d)? <= self.lipschitz * dd * (1.0 + 1e-12) {
                return Ok(trial);
            }
            self.lipschitz *= 2.0;
        }
    }

    /// One monotone accelerated iteration; returns the new total cost.
    fn step(&mut self, rs: &ReducedSystem) -> Result<f64, OcpError> {
        let (grad_z, _) = rs.gradient(&self.z)?;
        let candidate = self.prox_step(rs, &self.z.clone(), &grad_z)?;
        let cost_candidate = self.total_cost(rs, &candidate)?;
        let (next, cost_next) = if cost_candidate <= self.cost_x {
            (candidate, cost_candidate)
        } else {
            // monotone fallback: plain descent step from x, momentum restart
            let (grad_x, _) = rs.gradient(&self.x)?;
            let fallback = self.prox_step(rs, &self.x.clone(), &grad_x)?;
            let cost_fallback = self.total_cost(rs, &fallback)?;
            self.theta = 1.0;
            (fallback, cost_fallback)
        };
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * self.theta * self.theta).sqrt());
        let beta = (self.theta - 1.0) / theta_next;
        self.z = next
            .iter()
            .zip(&self.x)
            .map(|(&xn, &xo)| xn + beta * (xn - xo))
            .collect();
        self.x = next;
        self.theta = theta_next;
        self.cost_x = cost_next;
        Ok(cost_next)
    }
}

/// Largest eigenvalue of `H` by power iteration, with a safety factor.
fn estimate_lipschitz(rs: &ReducedSystem) -> Result<f64, OcpError> {
    let n = rs.n();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0f64;
    for _ in 0..60 {
        let (hv, _) = {
            // H v = K^{-1} M K^{-1} v is the gradient of the homogeneous
            // problem; reuse the gradient path with b_d subtracted back out
            let y = rs.state_coeffs(&v)?;
            let my = rs.mass.matvec(&y);
            (rs.solver.solve(&my)?, y)
        };
        let norm = crate::linalg::norm(&hv);
        if norm == 0.0 {
            break;
        }
        let lambda_new = crate::linalg::dot(&v, &hv);
        let rel = (lambda_new - lambda).abs() / lambda_new.max(f64::MIN_POSITIVE);
        lambda = lambda_new;
        for (vi, hvi) in v.iter_mut().zip(&hv) {
            *vi = hvi / norm;
        }
        if rel < 1e-6 {
            break;
        }
    }
    Ok((lambda * 1.2).max(f64::MIN_POSITIVE))
}

/// Accelerated proximal-gradient solver, used as an independent check of the
/// semismooth Newton method.
pub fn fista_oracle(problem: &OcpProblem, options: &FistaOptions) -> Result<FistaResult, OcpError> {
    let rs = reduce(problem)?;
    fista_oracle_reduced(&rs, problem, options)
}

/// Same as [`fista_oracle`] but reusing an existing reduction.
pub fn fista_oracle_reduced(
    rs: &ReducedSystem,
    problem: &OcpProblem,
    options: &FistaOptions,
) -> Result<FistaResult, OcpError> {
    let alpha = problem.alpha;
    let mut state = FistaState::new(rs, alpha)?;
    let mut cost_trace = Vec::new();
    let mut residual = optimality_residual(rs, &state.x, alpha)?;
    if residual <= options.tol {
        return Ok(FistaResult {
            control: ControlMeasure::new(rs.mesh.clone(), state.x),
            iterations: 0,
            residual,
            cost_trace,
        });
    }
    for iteration in 1..=options.max_iter {
        let cost = state.step(rs)?;
        cost_trace.push(cost);
        residual = optimality_residual(rs, &state.x, alpha)?;
        if residual <= options.tol {
            return Ok(FistaResult {
                control: ControlMeasure::new(rs.mesh.clone(), state.x),
                iterations: iteration,
                residual,
                cost_trace,
            });
        }
    }
    Err(OcpError::FistaIterationCap {
        iterations: options.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainSpec};
    use approx::assert_relative_eq;

    fn constant_field(c: f64) -> ScalarField {
        Arc::new(move |_| c)
    }

    fn single_dof_problem(alpha: f64, yd: f64) -> OcpProblem {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()));
        OcpProblem::new(mesh, alpha, constant_field(yd), 6)
    }

    #[test]
    fn reduce_on_initial_square_gives_hand_assembled_system() {
        let problem = single_dof_problem(1e-2, 0.0);
        let rs = reduce(&problem).unwrap();
        assert_eq!(rs.n(), 1);
        // four criss-cross triangles contribute 1 each to the center
        // stiffness entry and area/6 each to the mass entry
        assert_relative_eq!(rs.stiffness().get(0, 0), 4.0, epsilon = 1e-13);
        assert_relative_eq!(rs.mass().get(0, 0), 4.0 / 6.0, epsilon = 1e-13);
        // y_d = 0 gives a zero load
        assert_eq!(rs.desired_load(), &[0.0]);
    }

    #[test]
    fn reduce_fails_without_interior_nodes() {
        let mesh = Arc::new(
            crate::mesh::Mesh::from_parts(
                DomainSpec::square(),
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
            )
            .unwrap(),
        );
        let problem = OcpProblem::new(mesh, 1.0, constant_field(0.0), 6);
        assert!(matches!(reduce(&problem), Err(OcpError::NoInteriorNodes)));
    }

    #[test]
    fn stiffness_matches_dense_reassembly() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::lshape()).uniform_refine());
        let problem = OcpProblem::new(mesh.clone(), 1e-2, constant_field(0.0), 6);
        let rs = reduce(&problem).unwrap();
        // dense oracle: accumulate local matrices into a dense array
        let n = mesh.num_interior_nodes();
        let mut dense = vec![vec![0.0; n]; n];
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle(t);
            let loc = crate::fem::local_stiffness(&mesh.triangle_coords(t));
            for i in 0..3 {
                for j in 0..3 {
                    if let (Some(di), Some(dj)) =
                        (mesh.dof_of_vertex(tri[i]), mesh.dof_of_vertex(tri[j]))
                    {
                        dense[di][dj] += loc[i][j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(rs.stiffness().get(i, j), dense[i][j], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn state_solve_examples() {
        let problem = single_dof_problem(1e-2, 0.0);
        let rs = reduce(&problem).unwrap();
        let zero = ControlMeasure::zero(problem.mesh.clone());
        let y = solve_state(&rs, &zero).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));

        let u = ControlMeasure::new(problem.mesh.clone(), vec![1.0]);
        let y = solve_state(&rs, &u).unwrap();
        let center = problem.mesh.interior_nodes()[0];
        assert_relative_eq!(y.value(center), 1.0 / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn state_solve_is_linear() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::disk()).uniform_refine());
        let problem = OcpProblem::new(mesh.clone(), 1e-2, constant_field(0.0), 6);
        let rs = reduce(&problem).unwrap();
        let n = mesh.num_interior_nodes();
        let u1 = ControlMeasure::new(
            mesh.clone(),
            (0..n).map(|i| (i as f64 * 0.3).sin()).collect(),
        );
        let u2 = ControlMeasure::new(
            mesh.clone(),
            (0..n).map(|i| (i as f64 * 0.7).cos()).collect(),
        );
        let both = ControlMeasure::new(
            mesh.clone(),
            u1.coefficients()
                .iter()
                .zip(u2.coefficients())
                .map(|(a, b)| a + b)
                .collect(),
        );
        let y1 = solve_state(&rs, &u1).unwrap();
        let y2 = solve_state(&rs, &u2).unwrap();
        let y12 = solve_state(&rs, &both).unwrap();
        for v in 0..mesh.num_vertices() {
            assert_relative_eq!(y12.value(v), y1.value(v) + y2.value(v), epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_vanishes_when_state_interpolates_desired_state() {
        // y_d is itself a zero-trace P1 function, so M y - b_d = 0 when y
        // interpolates it (quadrature of degree >= 2 integrates y_d phi_j
        // exactly)
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let mut values = vec![0.0; mesh.num_vertices()];
        for (k, &v) in mesh.interior_nodes().iter().enumerate() {
            values[v] = 1.0 + k as f64;
        }
        let yd_field = FeFunction::new(mesh.clone(), values.clone());
        let yd: ScalarField = {
            let f = yd_field.clone();
            Arc::new(move |x| f.evaluate(x).unwrap())
        };
        let problem = OcpProblem::new(mesh.clone(), 1e-2, yd, 6);
        let rs = reduce(&problem).unwrap();
        let y = FeFunction::new(mesh.clone(), values);
        let p = solve_adjoint(&rs, &y).unwrap();
        for v in p.values() {
            assert!(v.abs() < 1e-11, "adjoint should vanish, got {v}");
        }
    }

    #[test]
    fn adjoint_of_zero_data_is_zero() {
        let problem = single_dof_problem(1e-2, 0.0);
        let rs = reduce(&problem).unwrap();
        let p = solve_adjoint(&rs, &FeFunction::zero(problem.mesh.clone())).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_matches_dense_oracle() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let problem = OcpProblem::new(mesh.clone(), 1e-2, constant_field(0.3), 6);
        let rs = reduce(&problem).unwrap();
        let n = mesh.num_interior_nodes();
        let y_int: Vec<f64> = (0..n).map(|i| (i as f64 * 1.1).sin()).collect();
        let y = FeFunction::from_interior(mesh.clone(), &y_int);
        let p = solve_adjoint(&rs, &y).unwrap();

        // dense oracle
        let k_dense = rs.stiffness().to_dense();
        let rhs: Vec<f64> = {
            let my = rs.mass().matvec(&y_int);
            my.iter()
                .zip(rs.desired_load())
                .map(|(a, b)| a - b)
                .collect()
        };
        let expected = dense_gauss(k_dense, rhs);
        for (i, &v) in mesh.interior_nodes().iter().enumerate() {
            assert_relative_eq!(
                p.value(v),
                expected[i],
                epsilon = 1e-10,
                max_relative = 1e-9
            );
        }
    }

    fn dense_gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc -= a[row][k] * x[k];
            }
            x[row] = acc / a[row][row];
        }
        x
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold_scalar(2.0, 1.0), 1.0);
        assert_eq!(soft_threshold_scalar(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(&[1.5, -2.0, 0.2], 0.0), vec![1.5, -2.0, 0.2]);
        assert_eq!(soft_threshold(&[1.5, -2.0, 0.2], 1.0), vec![0.5, -1.0, 0.0]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn soft_threshold_shrinks_towards_zero(x in -1e6f64..1e6, tau in 0.0f64..1e3) {
                let s = soft_threshold_scalar(x, tau);
                prop_assert!(s.abs() <= x.abs());
                prop_assert!(s == 0.0 || s.signum() == x.signum());
                if x.abs() > tau {
                    prop_assert!((s.abs() - (x.abs() - tau)).abs() <= 1e-9 * x.abs().max(1.0));
                } else {
                    prop_assert_eq!(s, 0.0);
                }
            }
        }
    }

    #[test]
    fn fista_returns_zero_when_alpha_dominates() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let problem = OcpProblem::new(mesh, 1e3, constant_field(1.0), 6);
        let fista = fista_oracle(&problem, &FistaOptions::default()).unwrap();
        assert!(fista.control.coefficients().iter().all(|&c| c == 0.0));
        assert_eq!(fista.iterations, 0);
    }

    #[test]
    fn large_alpha_gives_zero_control() {
        // alpha dominating the zero-control gradient forces u = 0, y = 0 and
        // ||p||_inf <= alpha
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let problem = OcpProblem::new(mesh.clone(), 1e3, constant_field(1.0), 6);
        let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
        assert!(sol.control.coefficients().iter().all(|&c| c == 0.0));
        assert!(sol.state.values().iter().all(|&v| v == 0.0));
        let p_max = sol
            .adjoint
            .values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(p_max <= problem.alpha + 1e-10);
        assert_eq!(sol.newton_iterations, 0);
    }

    #[test]
    fn scalar_problem_matches_closed_form() {
        // one interior node: minimize 1/2 H u^2 - g u + alpha |u| with
        // H = m / k^2, g = b / k; the minimizer is sign(g) max(|g|-alpha,0)/H
        for (alpha, yd) in [(1e-3, 1.0), (0.05, 1.0), (0.2, -2.0), (0.5, 0.4)] {
            let problem = single_dof_problem(alpha, yd);
            let rs = reduce(&problem).unwrap();
            let k = rs.stiffness().get(0, 0);
            let m = rs.mass().get(0, 0);
            let b = rs.desired_load()[0];
            let h = m / (k * k);
            let g = b / k;
            let expected = g.signum() * (g.abs() - alpha).max(0.0) / h;
            let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
            assert_relative_eq!(
                sol.control.coefficients()[0],
                expected,
                epsilon = 1e-12,
                max_relative = 1e-12
            );
            assert!(sol.kkt_residual <= SSN_TOL);

            let fista = fista_oracle(&problem, &FistaOptions::default()).unwrap();
            assert_relative_eq!(
                fista.control.coefficients()[0],
                expected,
                epsilon = 1e-10,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn optimality_residual_examples() {
        let problem = single_dof_problem(0.05, 1.0);
        let rs = reduce(&problem).unwrap();
        let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
        let res = optimality_residual(&rs, sol.control.coefficients(), problem.alpha).unwrap();
        assert!(res <= 1e-12);

        // u = 0 with huge alpha
        let res0 = optimality_residual(&rs, &[0.0], 1e6).unwrap();
        assert_eq!(res0, 0.0);

        // perturbing the solution makes the residual positive
        let mut u = sol.control.coefficients().to_vec();
        u[0] += 0.1;
        let res_pert = optimality_residual(&rs, &u, problem.alpha).unwrap();
        assert!(res_pert > 1e-3);
    }

    #[test]
    fn ssn_and_fista_agree_on_coarse_disk_problem() {
        // a loose, solver-level version of the cross-validation gate
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::disk()).uniform_refine());
        let yd: ScalarField = Arc::new(|x: [f64; 2]| {
            let r = x[0].hypot(x[1]).max(1e-300);
            -0.06 * (3.0 * r - 2.0) - (r.ln()) / (2.0 * std::f64::consts::PI)
        });
        let problem = OcpProblem::new(mesh, 1e-2, yd, 19);
        let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
        let fista = fista_oracle(
            &problem,
            &FistaOptions {
                tol: 1e-12,
                max_iter: 200_000,
            },
        )
        .unwrap();
        for (a, b) in sol
            .control
            .coefficients()
            .iter()
            .zip(fista.control.coefficients())
        {
            assert!((a - b).abs() <= 1e-8, "SSN {a} vs FISTA {b}");
        }
    }

    #[test]
    fn fista_cost_trace_is_monotone() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let yd: ScalarField = Arc::new(|x: [f64; 2]| x[0] + 0.4 * x[1] * x[1]);
        let problem = OcpProblem::new(mesh, 1e-3, yd, 6);
        let fista = fista_oracle(
            &problem,
            &FistaOptions {
                tol: 1e-11,
                max_iter: 500_000,
            },
        )
        .unwrap();
        for pair in fista.cost_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12),
                "cost increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn converged_solution_has_subdifferential_sign_structure() {
        let mesh = Arc::new(
            build_initial_mesh(&DomainSpec::square())
                .uniform_refine()
                .uniform_refine(),
        );
        let yd: ScalarField = Arc::new(|x: [f64; 2]| {
            10.0 * ((-50.0 * ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2))).exp()
                - (-50.0 * ((x[0] + 0.1).powi(2) + (x[1] - 0.2).powi(2))).exp())
        });
        let problem = OcpProblem::new(mesh.clone(), 1e-3, yd, 6);
        let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
        assert!(sol.kkt_residual <= SSN_TOL);
        let alpha = problem.alpha;
        let tol = 10.0 * SSN_TOL;
        for (&v, &ui) in mesh.interior_nodes().iter().zip(sol.control.coefficients()) {
            let pi = sol.adjoint.value(v);
            if ui != 0.0 {
                assert!(
                    (pi + alpha * ui.signum()).abs() <= tol,
                    "active node: p = {pi}, u = {ui}"
                );
            } else {
                assert!(pi.abs() <= alpha + tol, "inactive node: |p| = {}", pi.abs());
            }
        }
        // cost consistency against an independent recomputation
        let tracking = fem::error_l2(
            &sol.state,
            |x| (problem.desired_state)(x),
            problem.quad_degree,
        );
        let recomputed = 0.5 * tracking * tracking + alpha * sol.control.measure_norm();
        assert_relative_eq!(sol.cost, recomputed, max_relative = 1e-10);
    }

    #[test]
    fn control_mass_is_monotone_in_alpha() {
        let mesh = Arc::new(
            build_initial_mesh(&DomainSpec::square())
                .uniform_refine()
                .uniform_refine(),
        );
        let yd: ScalarField = Arc::new(|x: [f64; 2]| {
            10.0 * ((-50.0 * ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2))).exp()
                - (-50.0 * ((x[0] + 0.1).powi(2) + (x[1] - 0.2).powi(2))).exp())
        });
        let mut masses = Vec::new();
        for alpha in [1e-1, 1e-2, 1e-3, 1e-4] {
            let problem = OcpProblem::new(mesh.clone(), alpha, yd.clone(), 6);
            let sol = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
            masses.push(sol.control.measure_norm());
        }
        for pair in masses.windows(2) {
            assert!(
                pair[1] >= pair[0] * (1.0 - 1e-10),
                "mass decreased as alpha shrank: {masses:?}"
            );
        }
    }

    #[test]
    fn warm_start_preserves_convergence() {
        let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()).uniform_refine());
        let yd: ScalarField = Arc::new(|x: [f64; 2]| x[0] * x[1] + 1.0);
        let problem = OcpProblem::new(mesh.clone(), 1e-3, yd, 6);
        let cold = semismooth_newton(&problem, None, &SsnOptions::default()).unwrap();
        let warm =
            semismooth_newton(&problem, Some(&cold.control), &SsnOptions::default()).unwrap();
        assert!(warm.newton_iterations <= 1);
        for (a, b) in warm
            .control
            .coefficients()
            .iter()
            .zip(cold.control.coefficients())
        {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}
