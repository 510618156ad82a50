//! The benchmark problems, their exact solutions where available, and the
//! CSV/VTK output formats of the command-line harness.

use std::io::{BufRead, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::afem::ConvergenceRecord;
use crate::fem::FeFunction;
use crate::mesh::{build_initial_mesh, DomainSpec, Mesh};
use crate::quadrature::ERROR_DEGREE;
use crate::solver::{OcpProblem, OcpSolution};
use crate::ScalarField;

/// The sparsity parameters studied on the square domain.
pub const SQUARE_ALPHAS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Default sparsity parameter per example domain.
pub fn default_alpha(kind: crate::mesh::DomainKind) -> f64 {
    match kind {
        crate::mesh::DomainKind::Disk => 1e-2,
        crate::mesh::DomainKind::Square => 1e-4,
        crate::mesh::DomainKind::LShape => 5e-3,
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("sparsity parameter must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("records file is malformed: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exact optimal triple of a benchmark, for error reporting.
pub struct ExactSolution {
    /// Exact optimal state.
    pub state: ScalarField,
    /// Exact optimal adjoint.
    pub adjoint: ScalarField,
    /// Location and mass of each Dirac in the exact optimal control.
    pub control: Vec<([f64; 2], f64)>,
}

/// Disk benchmark: unit ball, `alpha = 1e-2`, control `delta_0` with unit
/// mass. The state is the Green's function of the Laplacian with pole at the
/// origin, the adjoint a radial cubic, and the desired state is manufactured
/// from them.
pub fn example_disk(snap_boundary: bool) -> (OcpProblem, ExactSolution) {
    let alpha = 1e-2;
    let spec = DomainSpec::disk().with_snap(snap_boundary);
    let mesh = Arc::new(build_initial_mesh(&spec));
    let desired_state: ScalarField = Arc::new(move |x: [f64; 2]| {
        let r = x[0].hypot(x[1]);
        // -6 alpha (3r - 2) - ln(r) / 2 pi; the log blows up at the origin,
        // which quadrature points never hit
        -alpha * 6.0 * (3.0 * r - 2.0) - r.ln() / (2.0 * std::f64::consts::PI)
    });
    let problem = OcpProblem::new(mesh, alpha, desired_state, ERROR_DEGREE);
    let exact = ExactSolution {
        state: Arc::new(|x: [f64; 2]| {
            let r = x[0].hypot(x[1]);
            -r.ln() / (2.0 * std::f64::consts::PI)
        }),
        adjoint: Arc::new(|x: [f64; 2]| {
            let r = x[0].hypot(x[1]);
            -0.02 * r.powi(3) + 0.03 * r.powi(2) - 0.01
        }),
        control: vec![([0.0, 0.0], 1.0)],
    };
    (problem, exact)
}

/// Square benchmark: `(-1,1)^2` with a two-bump desired state; no exact
/// solution is known. Any positive `alpha` is accepted; values outside the
/// studied sweep produce a warning on stderr.
pub fn example_square(alpha: f64) -> Result<OcpProblem, BenchError> {
    if alpha <= 0.0 {
        return Err(BenchError::NonPositiveAlpha(alpha));
    }
    if !SQUARE_ALPHAS
        .iter()
        .any(|&a| (a - alpha).abs() <= 1e-12 * a)
    {
        eprintln!("warning: alpha = {alpha:e} is outside the studied sweep {SQUARE_ALPHAS:?}");
    }
    let mesh = Arc::new(build_initial_mesh(&DomainSpec::square()));
    let desired_state: ScalarField = Arc::new(|x: [f64; 2]| {
        10.0 * ((-50.0 * ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2))).exp()
            - (-50.0 * ((x[0] + 0.1).powi(2) + (x[1] - 0.2).powi(2))).exp())
    });
    Ok(OcpProblem::new(mesh, alpha, desired_state, ERROR_DEGREE))
}

/// L-shape benchmark: nonconvex domain, `alpha = 5e-3`, desired state with a
/// log singularity at (0.2, -0.2), which lies in the removed quadrant.
pub fn example_lshape() -> OcpProblem {
    let mesh = Arc::new(build_initial_mesh(&DomainSpec::lshape()));
    let desired_state: ScalarField =
        Arc::new(|x: [f64; 2]| -(((x[0] - 0.2).powi(2) + (x[1] + 0.2).powi(2)).sqrt()).ln());
    OcpProblem::new(mesh, 5e-3, desired_state, ERROR_DEGREE)
}

/// Combined error norm `(e_y^2 + e_p^2)^{1/2}`.
pub fn combined_error(err_state_l2: f64, err_adjoint_linf: f64) -> f64 {
    err_state_l2.hypot(err_adjoint_linf)
}

pub const CSV_HEADER: &str = "iter,ndof,ntri,hmax,est_y,est_p,est_total,ell,err_y_l2,err_p_linf,err_combined,kkt_res,newton_iters,control_mass";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes convergence records as CSV (one row per AFEM iteration). Floats
/// use the shortest round-trip representation, so parsing the file
/// reproduces the records exactly.
pub fn write_records_csv<W: Write>(records: &[ConvergenceRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.ndof,
            r.num_triangles,
            r.h_max,
            r.est_state,
            r.est_adjoint,
            r.est_total,
            r.log_factor,
            fmt_opt(r.err_state_l2),
            fmt_opt(r.err_adjoint_linf),
            fmt_opt(r.err_combined),
            r.kkt_residual,
            r.newton_iterations,
            r.control_mass,
        )?;
    }
    Ok(())
}

/// Parses records back from the CSV format.
pub fn read_records_csv<R: BufRead>(r: R) -> Result<Vec<ConvergenceRecord>, BenchError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| BenchError::Parse("empty file".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(BenchError::Parse(format!("unexpected header `{header}`")));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(BenchError::Parse(format!(
                "expected 14 fields, got {} in `{line}`",
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64, BenchError> {
            fields[i]
                .parse()
                .map_err(|_| BenchError::Parse(format!("bad number `{}`", fields[i])))
        };
        let int = |i: usize| -> Result<usize, BenchError> {
            fields[i]
                .parse()
                .map_err(|_| BenchError::Parse(format!("bad integer `{}`", fields[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>, BenchError> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        records.push(ConvergenceRecord {
            iteration: int(0)?,
            ndof: int(1)?,
            num_triangles: int(2)?,
            h_max: num(3)?,
            est_state: num(4)?,
            est_adjoint: num(5)?,
            est_total: num(6)?,
            log_factor: num(7)?,
            err_state_l2: opt(8)?,
            err_adjoint_linf: opt(9)?,
            err_combined: opt(10)?,
            kkt_residual: num(11)?,
            newton_iterations: int(12)?,
            control_mass: num(13)?,
        });
    }
    Ok(records)
}

/// Writes a legacy ASCII VTK unstructured grid with point data `y`, `p` and
/// the control written as a point field (zero except at control nodes).
pub fn write_vtk<W: Write>(mesh: &Mesh, solution: &OcpSolution, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "sparse optimal control solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_vertices())?;
    for &[x, y] in mesh.vertices() {
        writeln!(w, "{x} {y} 0")?;
    }
    let ntri = mesh.num_triangles();
    writeln!(w, "CELLS {} {}", ntri, 4 * ntri)?;
    for tri in mesh.triangles() {
        writeln!(w, "3 {} {} {}", tri[0], tri[1], tri[2])?;
    }
    writeln!(w, "CELL_TYPES {ntri}")?;
    for _ in 0..ntri {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.num_vertices())?;
    for (name, field) in [("y", &solution.state), ("p", &solution.adjoint)] {
        write_vtk_scalars(&mut w, name, field.values())?;
    }
    let mut u_field = vec![0.0; mesh.num_vertices()];
    for (dof, &vertex) in mesh.interior_nodes().iter().enumerate() {
        u_field[vertex] = solution.control.coefficients()[dof];
    }
    write_vtk_scalars(&mut w, "u", &u_field)
}

fn write_vtk_scalars<W: Write>(w: &mut W, name: &str, values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Per-vertex dump of the final solution: `x y boundary_flag y p u`.
pub fn write_solution_text<W: Write>(
    mesh: &Mesh,
    solution: &OcpSolution,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "# x y boundary_flag y p u")?;
    let y = &solution.state;
    let p = &solution.adjoint;
    for v in 0..mesh.num_vertices() {
        let [x, yy] = mesh.vertex(v);
        let flag = u8::from(mesh.is_boundary_vertex(v));
        let u = mesh
            .dof_of_vertex(v)
            .map(|d| solution.control.coefficients()[d])
            .unwrap_or(0.0);
        writeln!(w, "{x} {yy} {flag} {} {} {u}", y.value(v), p.value(v))?;
    }
    Ok(())
}

/// Evaluates an exact solution's state on a mesh, for diagnostics.
pub fn interpolate(mesh: &Arc<Mesh>, field: &ScalarField) -> FeFunction {
    let values = mesh.vertices().iter().map(|&p| field(p)).collect();
    FeFunction::new(mesh.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_adjoint_boundary_and_center_values() {
        let (problem, exact) = example_disk(true);
        // p(|x| = 1) = -0.02 + 0.03 - 0.01 = 0
        assert_relative_eq!((exact.adjoint)([1.0, 0.0]), 0.0, epsilon = 1e-16);
        assert_relative_eq!((exact.adjoint)([0.0, -1.0]), 0.0, epsilon = 1e-16);
        // |p(0)| equals the sparsity parameter, consistent with an active
        // control at the origin
        assert_relative_eq!(
            (exact.adjoint)([0.0, 0.0]).abs(),
            problem.alpha,
            epsilon = 1e-16
        );
    }

    #[test]
    fn disk_desired_state_is_laplacian_of_adjoint_plus_state() {
        // y_d = lap p + y with lap(r^3) = 9r and lap(r^2) = 4 in 2D, checked
        // at a thousand sample points
        let (problem, exact) = example_disk(true);
        let mut seed = 123u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let r = 1e-3 + 0.999 * next();
            let angle = 2.0 * std::f64::consts::PI * next();
            let x = [r * angle.cos(), r * angle.sin()];
            let lap_p = -0.02 * 9.0 * r + 0.03 * 4.0;
            let expected = lap_p + (exact.state)(x);
            assert_relative_eq!(
                (problem.desired_state)(x),
                expected,
                epsilon = 1e-12,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn square_desired_state_values() {
        let problem = example_square(1e-4).unwrap();
        let yd = &problem.desired_state;
        // value at the first bump center
        let expected = 10.0 * (1.0 - (-50.0 * 0.18f64).exp());
        assert_relative_eq!(yd([0.2, -0.1]), expected, epsilon = 1e-12);
        // swapping the coordinates exchanges the two bump centers
        // (0.2, -0.1) <-> (-0.1, 0.2) and flips the sign
        let mut seed = 5u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            2.0 * ((seed >> 11) as f64 / (1u64 << 53) as f64) - 1.0
        };
        for _ in 0..50 {
            let x = [next(), next()];
            let swapped = [x[1], x[0]];
            assert_relative_eq!(yd(x), -yd(swapped), epsilon = 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn square_rejects_nonpositive_alpha() {
        assert!(matches!(
            example_square(0.0),
            Err(BenchError::NonPositiveAlpha(_))
        ));
        assert!(matches!(
            example_square(-1.0),
            Err(BenchError::NonPositiveAlpha(_))
        ));
    }

    #[test]
    fn lshape_setup() {
        let problem = example_lshape();
        assert_relative_eq!(problem.alpha, 5e-3);
        let yd = &problem.desired_state;
        // y_d(1, 1) = -log(sqrt(0.64 + 1.44))
        assert_relative_eq!(yd([1.0, 1.0]), -(2.08f64.sqrt().ln()), epsilon = 1e-14);
        // the removed quadrant is not part of the mesh
        let mesh = &problem.mesh;
        for t in 0..mesh.num_triangles() {
            let c = mesh.triangle_coords(t);
            let centroid = [
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            ];
            let inside_removed = centroid[0] > 0.0 && centroid[1] < 0.0;
            assert!(!inside_removed);
            // in particular no element contains (0.5, -0.5)
            let p = [0.5, -0.5];
            let inside = {
                let s0 = crate::quadrature::signed_area(p, c[1], c[2]);
                let s1 = crate::quadrature::signed_area(c[0], p, c[2]);
                let s2 = crate::quadrature::signed_area(c[0], c[1], p);
                s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0
            };
            assert!(!inside);
        }
    }

    #[test]
    fn combined_error_examples() {
        assert_eq!(combined_error(0.0, 0.0), 0.0);
        assert_relative_eq!(combined_error(3.0, 4.0), 5.0);
        assert_eq!(combined_error(3.0, 4.0), combined_error(4.0, 3.0));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let records = vec![
            ConvergenceRecord {
                iteration: 0,
                ndof: 3,
                num_triangles: 8,
                h_max: 1.0,
                est_state: 0.123456789123456789,
                est_adjoint: 1e-17,
                est_total: 2.5e300,
                log_factor: std::f64::consts::PI,
                err_state_l2: Some(1.0 / 3.0),
                err_adjoint_linf: None,
                err_combined: None,
                kkt_residual: 4.9e-324,
                newton_iterations: 7,
                control_mass: 0.1 + 0.2,
            },
            ConvergenceRecord {
                iteration: 1,
                ndof: 15,
                num_triangles: 32,
                h_max: 0.5,
                est_state: 0.0,
                est_adjoint: f64::MIN_POSITIVE,
                est_total: 1.0,
                log_factor: 0.0,
                err_state_l2: None,
                err_adjoint_linf: Some(2.0f64.sqrt()),
                err_combined: Some(7.25),
                kkt_residual: 1e-11,
                newton_iterations: 0,
                control_mass: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf).unwrap();
        let parsed = read_records_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(read_records_csv(std::io::Cursor::new(b"not,a,header\n")).is_err());
        let text = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(read_records_csv(std::io::Cursor::new(text.as_bytes())).is_err());
    }
}
