//! The adaptive loop: SOLVE (semismooth Newton), ESTIMATE (total squared
//! indicators), MARK (maximum strategy), REFINE (longest-edge bisection).

use std::sync::Arc;

use thiserror::Error;

use crate::bench::ExactSolution;
use crate::estimators::{
    estimator_adjoint_global, estimator_state_global, indicator_adjoint_field,
    indicator_state_field, indicator_total, log_factor, EstimatorError, IndicatorField,
    IndicatorKind,
};
use crate::fem::{self, ControlMeasure};
use crate::mesh::{Mesh, MeshError};
use crate::quadrature::ERROR_DEGREE;
use crate::solver::{
    reduce, semismooth_newton_reduced, OcpError, OcpProblem, OcpSolution, SsnOptions,
};

#[derive(Debug, Error)]
pub enum AfemError {
    #[error("solver failed at AFEM iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        source: OcpError,
        /// Records of the iterations completed before the failure.
        records: Vec<ConvergenceRecord>,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("all indicators are zero; the iterate is converged or degenerate")]
    AllIndicatorsZero,
    #[error("marking requires a nonempty total_sq indicator field")]
    BadIndicatorField,
    #[error("rate fit needs at least {needed} records with positive values, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("rate fit encountered a nonpositive value")]
    NonPositiveValue,
}

/// Scalars recorded after the SOLVE/ESTIMATE stages of each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    /// `2 dim V + dim U = 3 x` (number of interior nodes).
    pub ndof: usize,
    pub num_triangles: usize,
    pub h_max: f64,
    /// Global state estimator (root of the indicator sum).
    pub est_state: f64,
    /// Global adjoint estimator (maximum indicator).
    pub est_adjoint: f64,
    /// Combined estimator: `sqrt(est_state^2 + est_adjoint^2)`.
    pub est_total: f64,
    pub log_factor: f64,
    pub err_state_l2: Option<f64>,
    pub err_adjoint_linf: Option<f64>,
    pub err_combined: Option<f64>,
    pub kkt_residual: f64,
    pub newton_iterations: usize,
    /// Measure norm of the control, `sum |u_i|`.
    pub control_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementMode {
    Adaptive,
    Uniform,
}

/// Configuration of [`afem_loop`].
#[derive(Clone)]
pub struct AfemConfig {
    /// Marking fraction: refine `T` when its squared indicator reaches
    /// `theta` times the maximum. Marking uses `>=` so the degenerate
    /// all-equal case still marks every element.
    pub theta: f64,
    pub max_iterations: usize,
    pub max_ndof: usize,
    pub mode: RefinementMode,
    pub ssn: SsnOptions,
    /// Quadrature degree of the estimator and error terms.
    pub error_degree: usize,
}

impl Default for AfemConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_iterations: 40,
            max_ndof: 100_000,
            mode: RefinementMode::Adaptive,
            ssn: SsnOptions::default(),
            error_degree: ERROR_DEGREE,
        }
    }
}

/// Everything the loop produced: one record per iteration plus the final
/// mesh and solution.
pub struct AfemOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub final_mesh: Arc<Mesh>,
    pub final_solution: OcpSolution,
    /// Squared total indicators on the final mesh.
    pub final_indicators: IndicatorField,
}

/// Maximum-strategy marking: elements whose squared indicator reaches
/// `theta` times the largest one.
pub fn mark(indicators: &IndicatorField, theta: f64) -> Result<Vec<usize>, AfemError> {
    assert!(
        theta > 0.0 && theta <= 1.0,
        "marking fraction must lie in (0, 1]"
    );
    if indicators.kind != IndicatorKind::TotalSquared || indicators.is_empty() {
        return Err(AfemError::BadIndicatorField);
    }
    let max = indicators.values.iter().fold(0.0f64, |m, &v| m.max(v));
    if max <= 0.0 {
        return Err(AfemError::AllIndicatorsZero);
    }
    let threshold = theta * max;
    Ok(indicators
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(t, _)| t)
        .collect())
}

/// Carries a control over to a refined mesh: surviving nodes keep their
/// coefficients, new nodes start at zero.
fn carry_over(control: &ControlMeasure, fine: &Arc<Mesh>) -> ControlMeasure {
    let coarse = control.mesh();
    let mut coeffs = vec![0.0; fine.num_interior_nodes()];
    for (dof, &vertex) in fine.interior_nodes().iter().enumerate() {
        if vertex < coarse.num_vertices() {
            if let Some(old_dof) = coarse.dof_of_vertex(vertex) {
                coeffs[dof] = control.coefficients()[old_dof];
            }
        }
    }
    ControlMeasure::new(fine.clone(), coeffs)
}

/// Runs the adaptive (or uniform) refinement loop on a problem.
///
/// Iterates SOLVE -> ESTIMATE -> MARK -> REFINE until the iteration or
/// degree-of-freedom budget is reached or the estimator vanishes, recording
/// one [`ConvergenceRecord`] per iteration. Exact-solution errors are
/// recorded when `exact` is supplied.
pub fn afem_loop(
    problem: &OcpProblem,
    config: &AfemConfig,
    exact: Option<&ExactSolution>,
) -> Result<AfemOutcome, AfemError> {
    afem_loop_with(problem, config, exact, |_, _, _| {})
}

/// [`afem_loop`] with a per-iteration observer, called after SOLVE and
/// ESTIMATE with the current mesh, solution and record.
pub fn afem_loop_with(
    problem: &OcpProblem,
    config: &AfemConfig,
    exact: Option<&ExactSolution>,
    mut observer: impl FnMut(&Arc<Mesh>, &OcpSolution, &ConvergenceRecord),
) -> Result<AfemOutcome, AfemError> {
    assert!(config.max_iterations >= 1);
    let mut mesh = problem.mesh.clone();
    let mut warm: Option<ControlMeasure> = None;
    let mut records: Vec<ConvergenceRecord> = Vec::new();

    loop {
        let iteration = records.len();
        let current = OcpProblem {
            mesh: mesh.clone(),
            alpha: problem.alpha,
            desired_state: problem.desired_state.clone(),
            quad_degree: problem.quad_degree,
        };

        // SOLVE
        let solution = (|| -> Result<OcpSolution, OcpError> {
            let rs = reduce(&current)?;
            let warm_ref = warm.as_ref().map(|c| carry_over(c, &mesh));
            semismooth_newton_reduced(&rs, &current, warm_ref.as_ref(), &config.ssn)
        })()
        .map_err(|source| AfemError::Solver {
            iteration,
            source,
            records: records.clone(),
        })?;

        // ESTIMATE
        let state_sq = indicator_state_field(&mesh, &solution.state);
        let adjoint = indicator_adjoint_field(
            &mesh,
            &solution.adjoint,
            &solution.state,
            |x| (current.desired_state)(x),
            config.error_degree,
        );
        let total = indicator_total(&state_sq, &adjoint)?;
        let est_state = estimator_state_global(&state_sq)?;
        let est_adjoint = estimator_adjoint_global(&adjoint)?;
        let est_total = est_state.hypot(est_adjoint);

        let (err_state_l2, err_adjoint_linf, err_combined) = match exact {
            Some(exact) => {
                let ey = fem::error_l2(&solution.state, |x| (exact.state)(x), config.error_degree);
                let ep = fem::error_linf(&solution.adjoint, |x| (exact.adjoint)(x));
                (
                    Some(ey),
                    Some(ep),
                    Some(crate::bench::combined_error(ey, ep)),
                )
            }
            None => (None, None, None),
        };

        let record = ConvergenceRecord {
            iteration,
            ndof: 3 * mesh.num_interior_nodes(),
            num_triangles: mesh.num_triangles(),
            h_max: mesh.h_max(),
            est_state,
            est_adjoint,
            est_total,
            log_factor: log_factor(&mesh),
            err_state_l2,
            err_adjoint_linf,
            err_combined,
            kkt_residual: solution.kkt_residual,
            newton_iterations: solution.newton_iterations,
            control_mass: solution.control.measure_norm(),
        };
        observer(&mesh, &solution, &record);
        records.push(record);

        // stop criteria
        if records.len() >= config.max_iterations
            || 3 * mesh.num_interior_nodes() >= config.max_ndof
        {
            return Ok(AfemOutcome {
                records,
                final_mesh: mesh,
                final_solution: solution,
                final_indicators: total,
            });
        }

        // MARK + REFINE
        let refined = match config.mode {
            RefinementMode::Uniform => mesh.uniform_refine(),
            RefinementMode::Adaptive => {
                let marked = match mark(&total, config.theta) {
                    Ok(marked) => marked,
                    Err(AfemError::AllIndicatorsZero) => {
                        // estimator vanished: converged, stop early
                        return Ok(AfemOutcome {
                            records,
                            final_mesh: mesh,
                            final_solution: solution,
                            final_indicators: total,
                        });
                    }
                    Err(e) => return Err(e),
                };
                let mut next = mesh.refine(&marked)?;
                // bisecting only boundary edges adds no interior node; force
                // progress with full sweeps (degenerate coarse-mesh case)
                while next.num_interior_nodes() <= mesh.num_interior_nodes() {
                    let all: Vec<usize> = (0..next.num_triangles()).collect();
                    next = next.refine(&all)?;
                }
                next
            }
        };
        warm = Some(solution.control);
        mesh = Arc::new(refined);
    }
}

/// Least-squares slope of `log(quantity)` against `log(ndof)` over the last
/// `window` records.
pub fn fit_rate(
    records: &[ConvergenceRecord],
    quantity: impl Fn(&ConvergenceRecord) -> Option<f64>,
    window: usize,
) -> Result<f64, AfemError> {
    let start = records.len().saturating_sub(window);
    let mut pts = Vec::new();
    for rec in &records[start..] {
        match quantity(rec) {
            Some(q) if q > 0.0 => pts.push(((rec.ndof as f64).ln(), q.ln())),
            Some(_) => return Err(AfemError::NonPositiveValue),
            None => return Err(AfemError::NonPositiveValue),
        }
    }
    if pts.len() < 3 {
        return Err(AfemError::TooFewRecords {
            needed: 3,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}
