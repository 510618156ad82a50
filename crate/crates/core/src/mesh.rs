//! Conforming 2D triangulations with longest-edge bisection refinement.
//!
//! Meshes are immutable: refinement returns a new mesh. Vertices are never
//! removed and parent coordinates are preserved bit-exactly, so nodal data
//! can be carried across refinements by vertex id. The interior-edge table
//! is rebuilt from scratch after each refinement and sorted by the
//! lexicographic order of its endpoint pair, which also fixes the global
//! edge index used to break longest-edge ties.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::quadrature::signed_area;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement called with an empty marked set")]
    EmptyMarkedSet,
    #[error("element index {index} out of range ({count} elements)")]
    ElementOutOfRange { index: usize, count: usize },
    #[error("triangle {0} has nonpositive signed area")]
    NonPositiveArea(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonConforming(usize, usize),
    #[error("triangle {0} references a vertex that does not exist")]
    BadVertexIndex(usize),
    #[error("stored boundary flag of vertex {0} contradicts the edge structure")]
    InconsistentBoundaryFlag(usize),
    #[error("mesh file is malformed: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The computational domains of the benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// Unit disk `B_0(1)`, meshed as an inscribed polygon.
    Disk,
    /// Square `(-1, 1)^2`.
    Square,
    /// L-shaped domain `(-1, 1)^2` minus `[0, 1) x (-1, 0]`.
    LShape,
}

/// Domain selection plus the boundary policy applied during refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// For the disk: project new boundary vertices onto the unit circle.
    pub snap_boundary: bool,
    /// Number of boundary vertices of the initial disk polygon.
    pub disk_segments: usize,
}

impl DomainSpec {
    pub fn disk() -> Self {
        Self {
            kind: DomainKind::Disk,
            snap_boundary: true,
            disk_segments: 8,
        }
    }

    pub fn square() -> Self {
        Self {
            kind: DomainKind::Square,
            snap_boundary: true,
            disk_segments: 8,
        }
    }

    pub fn lshape() -> Self {
        Self {
            kind: DomainKind::LShape,
            snap_boundary: true,
            disk_segments: 8,
        }
    }

    pub fn with_snap(mut self, snap: bool) -> Self {
        self.snap_boundary = snap;
        self
    }
}

/// An interior edge together with the two elements sharing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorEdge {
    /// Endpoint vertex ids, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// The two adjacent triangle ids.
    pub triangles: [usize; 2],
}

/// A conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: DomainSpec,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    generation: Vec<u32>,
    edges: Vec<InteriorEdge>,
    /// Per triangle: interior-edge ids for the local edges `(v1,v2)`,
    /// `(v2,v0)`, `(v0,v1)`; `None` for boundary edges.
    tri_interior_edges: Vec<[Option<usize>; 3]>,
    interior_nodes: Vec<usize>,
    /// Vertex id -> interior degree-of-freedom index.
    vertex_dof: Vec<Option<usize>>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Assembles a mesh from raw vertex and triangle lists, deriving the
    /// boundary flags and edge structure and validating conformity.
    pub fn from_parts(
        domain: DomainSpec,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let generation = vec![0; triangles.len()];
        Self::finish(domain, vertices, triangles, generation)
    }

    fn finish(
        domain: DomainSpec,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        generation: Vec<u32>,
    ) -> Result<Self, MeshError> {
        debug_assert_eq!(triangles.len(), generation.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::BadVertexIndex(t));
            }
            if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0 {
                return Err(MeshError::NonPositiveArea(t));
            }
        }

        let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                incident.entry(key).or_default().push(t);
            }
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        let mut interior: Vec<((usize, usize), [usize; 2])> = Vec::new();
        for (&(a, b), tris) in &incident {
            match tris.len() {
                1 => {
                    boundary_vertex[a] = true;
                    boundary_vertex[b] = true;
                }
                2 => interior.push(((a, b), [tris[0].min(tris[1]), tris[0].max(tris[1])])),
                _ => return Err(MeshError::NonConforming(a, b)),
            }
        }
        interior.sort_by_key(|&(key, _)| key);
        let edges: Vec<InteriorEdge> = interior
            .iter()
            .map(|&((a, b), tris)| InteriorEdge {
                vertices: [a, b],
                triangles: tris,
            })
            .collect();

        let edge_index: HashMap<(usize, usize), usize> = interior
            .iter()
            .enumerate()
            .map(|(i, &(key, _))| (key, i))
            .collect();
        let tri_interior_edges: Vec<[Option<usize>; 3]> = triangles
            .iter()
            .map(|tri| {
                [
                    edge_index.get(&edge_key(tri[1], tri[2])).copied(),
                    edge_index.get(&edge_key(tri[2], tri[0])).copied(),
                    edge_index.get(&edge_key(tri[0], tri[1])).copied(),
                ]
            })
            .collect();

        let mut interior_nodes = Vec::new();
        let mut vertex_dof = vec![None; vertices.len()];
        for (v, flagged) in boundary_vertex.iter().enumerate() {
            if !flagged {
                vertex_dof[v] = Some(interior_nodes.len());
                interior_nodes.push(v);
            }
        }

        Ok(Self {
            domain,
            vertices,
            triangles,
            boundary_vertex,
            generation,
            edges,
            tri_interior_edges,
            interior_nodes,
            vertex_dof,
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.edges
    }

    /// Interior-edge ids bounding triangle `t`.
    pub fn interior_edges_of(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.tri_interior_edges[t].iter().flatten().copied()
    }

    /// Vertex ids of the interior (non-boundary) nodes, in ascending order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn num_interior_nodes(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Interior degree-of-freedom index of a vertex, if it is interior.
    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let c = self.triangle_coords(t);
        signed_area(c[0], c[1], c[2])
    }

    /// Element size `h_T`: the diameter of `t`, i.e. its longest edge.
    pub fn element_size(&self, t: usize) -> f64 {
        let c = self.triangle_coords(t);
        (0..3)
            .map(|k| dist(c[k], c[(k + 1) % 3]))
            .fold(0.0f64, f64::max)
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.element_size(t))
            .fold(0.0f64, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.element_size(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let c = self.triangle_coords(t);
            for k in 0..3 {
                let u = [c[(k + 1) % 3][0] - c[k][0], c[(k + 1) % 3][1] - c[k][1]];
                let v = [c[(k + 2) % 3][0] - c[k][0], c[(k + 2) % 3][1] - c[k][1]];
                let cosang = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cosang.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// The patches `N_T` (all elements sharing at least a vertex with `t`)
    /// and `N*_T` (elements sharing an interior edge with `t`, plus `t`).
    pub fn patches(&self, t: usize) -> (Vec<usize>, Vec<usize>) {
        let tri = self.triangles[t];
        let mut vertex_patch: Vec<usize> = (0..self.num_triangles())
            .filter(|&s| self.triangles[s].iter().any(|v| tri.contains(v)))
            .collect();
        vertex_patch.sort_unstable();

        let mut edge_patch = vec![t];
        for e in self.interior_edges_of(t) {
            for &s in &self.edges[e].triangles {
                if s != t {
                    edge_patch.push(s);
                }
            }
        }
        edge_patch.sort_unstable();
        edge_patch.dedup();
        (vertex_patch, edge_patch)
    }

    /// Checks every structural invariant; used liberally in tests.
    pub fn validate(&self) -> Result<(), MeshError> {
        let rebuilt = Self::finish(
            self.domain,
            self.vertices.clone(),
            self.triangles.clone(),
            self.generation.clone(),
        )?;
        for v in 0..self.num_vertices() {
            if rebuilt.boundary_vertex[v] != self.boundary_vertex[v] {
                return Err(MeshError::InconsistentBoundaryFlag(v));
            }
        }
        debug_assert_eq!(rebuilt.edges, self.edges);
        Ok(())
    }

    /// Bisects every marked element at least once by its longest edge and
    /// recursively restores conformity, returning the refined mesh.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh, MeshError> {
        if marked.is_empty() {
            return Err(MeshError::EmptyMarkedSet);
        }
        for &t in marked {
            if t >= self.num_triangles() {
                return Err(MeshError::ElementOutOfRange {
                    index: t,
                    count: self.num_triangles(),
                });
            }
        }
        let mut state = RefineState::new(self);
        let mut order: Vec<usize> = marked.to_vec();
        order.sort_unstable();
        order.dedup();
        for t in order {
            state.refine_element(t);
        }
        state.into_mesh(self.domain)
    }

    /// Two full bisection sweeps: every element of `self` ends up split into
    /// four children and conformity holds throughout.
    pub fn uniform_refine(&self) -> Mesh {
        let all: Vec<usize> = (0..self.num_triangles()).collect();
        let once = self.refine(&all).expect("marked set is nonempty");
        let all2: Vec<usize> = (0..once.num_triangles()).collect();
        once.refine(&all2).expect("marked set is nonempty")
    }

    /// Plain-text dump: header `ntri nvert`, vertex lines `x y flag`,
    /// triangle lines `i j k`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.num_triangles(), self.num_vertices());
        for (v, &[x, y]) in self.vertices.iter().enumerate() {
            let flag = if self.boundary_vertex[v] { 1 } else { 0 };
            let _ = writeln!(out, "{x} {y} {flag}");
        }
        for tri in &self.triangles {
            let _ = writeln!(out, "{} {} {}", tri[0], tri[1], tri[2]);
        }
        w.write_all(out.as_bytes())
    }

    /// Reads a mesh back from the plain-text dump format.
    pub fn read_text<R: BufRead>(r: R, domain: DomainSpec) -> Result<Mesh, MeshError> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String, MeshError> {
            loop {
                match lines.next() {
                    Some(Ok(line)) => {
                        if !line.trim().is_empty() {
                            return Ok(line);
                        }
                    }
                    Some(Err(e)) => return Err(MeshError::Io(e)),
                    None => return Err(MeshError::Parse("unexpected end of file".into())),
                }
            }
        };
        let header = next_line()?;
        let mut it = header.split_whitespace();
        let ntri: usize = parse_field(it.next(), "ntri")?;
        let nvert: usize = parse_field(it.next(), "nvert")?;
        let mut vertices = Vec::with_capacity(nvert);
        let mut flags = Vec::with_capacity(nvert);
        for _ in 0..nvert {
            let line = next_line()?;
            let mut it = line.split_whitespace();
            let x: f64 = parse_field(it.next(), "x")?;
            let y: f64 = parse_field(it.next(), "y")?;
            let flag: u8 = parse_field(it.next(), "boundary_flag")?;
            vertices.push([x, y]);
            flags.push(flag != 0);
        }
        let mut triangles = Vec::with_capacity(ntri);
        for _ in 0..ntri {
            let line = next_line()?;
            let mut it = line.split_whitespace();
            let i: usize = parse_field(it.next(), "i")?;
            let j: usize = parse_field(it.next(), "j")?;
            let k: usize = parse_field(it.next(), "k")?;
            triangles.push([i, j, k]);
        }
        let mesh = Mesh::from_parts(domain, vertices, triangles)?;
        for (v, &flag) in flags.iter().enumerate() {
            if mesh.boundary_vertex[v] != flag {
                return Err(MeshError::InconsistentBoundaryFlag(v));
            }
        }
        Ok(mesh)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T, MeshError> {
    field
        .ok_or_else(|| MeshError::Parse(format!("missing field `{name}`")))?
        .parse()
        .map_err(|_| MeshError::Parse(format!("invalid value for `{name}`")))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Builds the initial mesh of the requested domain.
///
/// - square: four congruent triangles from the two diagonals of `(-1,1)^2`;
/// - disk: a regular inscribed polygon fanned from the center;
/// - L-shape: each of the three unit sub-squares split into four triangles
///   around its center, so the control space is already nonempty on the
///   initial mesh.
pub fn build_initial_mesh(spec: &DomainSpec) -> Mesh {
    let (vertices, triangles) = match spec.kind {
        DomainKind::Square => {
            let vertices = vec![
                [-1.0, -1.0],
                [1.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0],
                [0.0, 0.0],
            ];
            let triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
            (vertices, triangles)
        }
        DomainKind::Disk => {
            let n = spec.disk_segments.max(3);
            let mut vertices = vec![[0.0, 0.0]];
            for k in 0..n {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vertices.push([angle.cos(), angle.sin()]);
            }
            let triangles = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
            (vertices, triangles)
        }
        DomainKind::LShape => {
            let mut vertices = Vec::new();
            let mut triangles = Vec::new();
            let mut index: HashMap<(i64, i64), usize> = HashMap::new();
            let mut vertex_at = |x: f64, y: f64, vertices: &mut Vec<[f64; 2]>| -> usize {
                let key = ((x * 2.0) as i64, (y * 2.0) as i64);
                *index.entry(key).or_insert_with(|| {
                    vertices.push([x, y]);
                    vertices.len() - 1
                })
            };
            // the three unit sub-squares of the L, by lower-left corner
            for (x0, y0) in [(-1.0, -1.0), (-1.0, 0.0), (0.0, 0.0)] {
                let a = vertex_at(x0, y0, &mut vertices);
                let b = vertex_at(x0 + 1.0, y0, &mut vertices);
                let c = vertex_at(x0 + 1.0, y0 + 1.0, &mut vertices);
                let d = vertex_at(x0, y0 + 1.0, &mut vertices);
                let m = vertex_at(x0 + 0.5, y0 + 0.5, &mut vertices);
                triangles.extend_from_slice(&[[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
            }
            (vertices, triangles)
        }
    };
    let mesh = Mesh::from_parts(*spec, vertices, triangles)
        .expect("initial meshes are conforming by construction");
    assert!(
        mesh.num_interior_nodes() >= 1,
        "initial mesh must carry at least one interior node"
    );
    mesh
}

/// Mutable scratch state for one refinement pass.
struct RefineState<'m> {
    parent: &'m Mesh,
    vertices: Vec<[f64; 2]>,
    boundary_vertex: Vec<bool>,
    triangles: Vec<[usize; 3]>,
    generation: Vec<u32>,
    alive: Vec<bool>,
    /// Undirected edge -> alive incident triangles (one or two).
    incident: HashMap<(usize, usize), Vec<usize>>,
    /// Midpoint vertex created on an edge of the original or refined mesh.
    midpoint: HashMap<(usize, usize), usize>,
}

impl<'m> RefineState<'m> {
    fn new(parent: &'m Mesh) -> Self {
        let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in parent.triangles.iter().enumerate() {
            for k in 0..3 {
                incident
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        Self {
            parent,
            vertices: parent.vertices.clone(),
            boundary_vertex: parent.boundary_vertex.clone(),
            triangles: parent.triangles.clone(),
            generation: parent.generation.clone(),
            alive: vec![true; parent.triangles.len()],
            incident,
            midpoint: HashMap::new(),
        }
    }

    /// Longest edge of `t` as an ordered local pair `(v[k], v[k+1])`; ties go
    /// to the lexicographically smallest endpoint pair, matching the global
    /// edge index order.
    fn longest_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        let mut best: Option<((usize, usize), f64)> = None;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let len = dist(self.vertices[a], self.vertices[b]);
            let replace = match &best {
                None => true,
                Some((prev, prev_len)) => {
                    len > prev_len + 1e-14 * prev_len.max(1.0)
                        || ((len - prev_len).abs() <= 1e-14 * prev_len.max(1.0)
                            && edge_key(a, b) < edge_key(prev.0, prev.1))
                }
            };
            if replace {
                best = Some(((a, b), len));
            }
        }
        best.expect("triangle has three edges").0
    }

    fn neighbor_across(&self, t: usize, edge: (usize, usize)) -> Option<usize> {
        self.incident
            .get(&edge_key(edge.0, edge.1))
            .and_then(|tris| tris.iter().copied().find(|&s| s != t))
    }

    fn refine_element(&mut self, t0: usize) {
        if !self.alive[t0] {
            // already bisected (across its longest edge) by an earlier chain
            return;
        }
        let mut stack = vec![t0];
        let mut guard = 0usize;
        while let Some(&t) = stack.last() {
            guard += 1;
            assert!(
                guard < 100 * self.triangles.len() + 1000,
                "longest-edge closure did not terminate"
            );
            if !self.alive[t] {
                stack.pop();
                continue;
            }
            let edge = self.longest_edge(t);
            match self.neighbor_across(t, edge) {
                None => {
                    // boundary edge: a single bisection keeps conformity
                    self.bisect(t, edge);
                    stack.pop();
                }
                Some(other) => {
                    let other_edge = self.longest_edge(other);
                    if edge_key(other_edge.0, other_edge.1) == edge_key(edge.0, edge.1) {
                        self.bisect(t, edge);
                        self.bisect(other, other_edge);
                        stack.pop();
                    } else {
                        stack.push(other);
                    }
                }
            }
        }
    }

    /// Splits `t` across the ordered edge `(a, b)`, reusing the midpoint
    /// vertex if the opposite triangle already created it.
    fn bisect(&mut self, t: usize, (a, b): (usize, usize)) {
        let key = edge_key(a, b);
        let is_boundary_edge = self.incident.get(&key).map_or(0, Vec::len) == 1;
        let m = match self.midpoint.get(&key) {
            Some(&m) => m,
            None => {
                let pa = self.vertices[a];
                let pb = self.vertices[b];
                let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                let on_boundary = is_boundary_edge;
                if on_boundary
                    && self.parent.domain.kind == DomainKind::Disk
                    && self.parent.domain.snap_boundary
                {
                    let r = p[0].hypot(p[1]);
                    if r > 0.0 {
                        p = [p[0] / r, p[1] / r];
                    }
                }
                self.vertices.push(p);
                self.boundary_vertex.push(on_boundary);
                self.midpoint.insert(key, self.vertices.len() - 1);
                self.vertices.len() - 1
            }
        };

        let tri = self.triangles[t];
        let k = (0..3)
            .find(|&k| tri[k] == a && tri[(k + 1) % 3] == b)
            .expect("edge must be an ordered edge of the triangle");
        let opposite = tri[(k + 2) % 3];
        let gen = self.generation[t] + 1;

        self.remove_triangle(t);
        self.add_triangle([a, m, opposite], gen);
        self.add_triangle([m, b, opposite], gen);
    }

    fn remove_triangle(&mut self, t: usize) {
        self.alive[t] = false;
        let tri = self.triangles[t];
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            if let Some(list) = self.incident.get_mut(&key) {
                list.retain(|&s| s != t);
                if list.is_empty() {
                    self.incident.remove(&key);
                }
            }
        }
    }

    fn add_triangle(&mut self, tri: [usize; 3], gen: u32) {
        let t = self.triangles.len();
        self.triangles.push(tri);
        self.generation.push(gen);
        self.alive.push(true);
        for k in 0..3 {
            self.incident
                .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                .or_default()
                .push(t);
        }
    }

    fn into_mesh(self, domain: DomainSpec) -> Result<Mesh, MeshError> {
        let RefineState {
            vertices,
            boundary_vertex,
            triangles,
            generation,
            alive,
            ..
        } = self;
        let mut kept_triangles = Vec::new();
        let mut kept_generation = Vec::new();
        for (t, tri) in triangles.into_iter().enumerate() {
            if alive[t] {
                kept_triangles.push(tri);
                kept_generation.push(generation[t]);
            }
        }
        let mesh = Mesh::finish(domain, vertices, kept_triangles, kept_generation)?;
        // flags tracked during bisection must agree with the ones derived
        // from edge adjacency
        debug_assert_eq!(mesh.boundary_vertex, boundary_vertex);
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_triangle_square() -> Mesh {
        // unit square split by the diagonal (0,0)-(1,1)
        Mesh::from_parts(
            DomainSpec::square(),
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn single_triangle() -> Mesh {
        Mesh::from_parts(
            DomainSpec::square(),
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn initial_square_mesh_matches_construction() {
        let mesh = build_initial_mesh(&DomainSpec::square());
        assert_eq!(mesh.num_triangles(), 4);
        assert_eq!(mesh.num_vertices(), 5);
        assert_eq!(mesh.interior_nodes(), &[4]);
        assert_eq!(mesh.vertex(4), [0.0, 0.0]);
        mesh.validate().unwrap();
        for t in 0..4 {
            assert_relative_eq!(mesh.triangle_area(t), 1.0);
        }
    }

    #[test]
    fn initial_disk_mesh_lies_on_unit_circle() {
        let mesh = build_initial_mesh(&DomainSpec::disk());
        assert_eq!(mesh.num_triangles(), 8);
        assert_eq!(mesh.interior_nodes(), &[0]);
        mesh.validate().unwrap();
        for v in 1..mesh.num_vertices() {
            let [x, y] = mesh.vertex(v);
            assert!(mesh.is_boundary_vertex(v));
            assert_relative_eq!(x.hypot(y), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn initial_lshape_mesh_has_reentrant_corner_on_boundary() {
        let mesh = build_initial_mesh(&DomainSpec::lshape());
        mesh.validate().unwrap();
        assert!(mesh.num_interior_nodes() >= 1);
        let corner = (0..mesh.num_vertices())
            .find(|&v| mesh.vertex(v) == [0.0, 0.0])
            .expect("origin is a mesh vertex");
        assert!(mesh.is_boundary_vertex(corner));
        // total area of the L is 3
        let area: f64 = (0..mesh.num_triangles())
            .map(|t| mesh.triangle_area(t))
            .sum();
        assert_relative_eq!(area, 3.0, epsilon = 1e-14);
        // no triangle reaches into the removed quadrant
        for t in 0..mesh.num_triangles() {
            let c = mesh.triangle_coords(t);
            let centroid = [
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            ];
            assert!(!(centroid[0] > 0.0 && centroid[1] < 0.0));
        }
    }

    #[test]
    fn single_marked_triangle_splits_into_halves() {
        let mesh = single_triangle();
        let refined = mesh.refine(&[0]).unwrap();
        assert_eq!(refined.num_triangles(), 2);
        refined.validate().unwrap();
        let parent_area = mesh.triangle_area(0);
        for t in 0..2 {
            assert_relative_eq!(refined.triangle_area(t), 0.5 * parent_area, epsilon = 1e-15);
            assert_eq!(refined.generation(t), 1);
            assert!(refined.element_size(t) <= mesh.element_size(0));
        }
    }

    #[test]
    fn closure_bisects_neighbor_across_shared_diagonal() {
        let mesh = two_triangle_square();
        let refined = mesh.refine(&[0]).unwrap();
        // both triangles share the diagonal as longest edge, so marking one
        // splits both
        assert_eq!(refined.num_triangles(), 4);
        refined.validate().unwrap();
    }

    #[test]
    fn empty_marked_set_is_an_error() {
        let mesh = two_triangle_square();
        assert!(matches!(mesh.refine(&[]), Err(MeshError::EmptyMarkedSet)));
    }

    #[test]
    fn out_of_range_mark_is_an_error() {
        let mesh = two_triangle_square();
        assert!(matches!(
            mesh.refine(&[7]),
            Err(MeshError::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn uniform_refine_quadruples_elements_and_halves_diameters() {
        let mesh = build_initial_mesh(&DomainSpec::square());
        let refined = mesh.uniform_refine();
        assert_eq!(refined.num_triangles(), 16);
        assert_relative_eq!(refined.h_max(), 0.5 * mesh.h_max(), epsilon = 1e-15);
        refined.validate().unwrap();
        assert_eq!(refined.num_interior_nodes(), 5);

        let twice = refined.uniform_refine();
        assert_eq!(twice.num_triangles(), 64);
        assert_relative_eq!(twice.h_max(), 0.25 * mesh.h_max(), epsilon = 1e-15);
    }

    #[test]
    fn disk_refinement_snaps_new_boundary_vertices() {
        let mesh = build_initial_mesh(&DomainSpec::disk());
        let refined = mesh.uniform_refine();
        refined.validate().unwrap();
        for v in 0..refined.num_vertices() {
            if refined.is_boundary_vertex(v) {
                let [x, y] = refined.vertex(v);
                assert_relative_eq!(x.hypot(y), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn disk_refinement_without_snap_keeps_polygon() {
        let mesh = build_initial_mesh(&DomainSpec::disk().with_snap(false));
        let refined = mesh.uniform_refine();
        refined.validate().unwrap();
        let off_circle = (0..refined.num_vertices())
            .filter(|&v| refined.is_boundary_vertex(v))
            .filter(|&v| {
                let [x, y] = refined.vertex(v);
                (x.hypot(y) - 1.0).abs() > 1e-12
            })
            .count();
        assert!(off_circle > 0);
    }

    #[test]
    fn refine_preserves_parent_vertices_bit_exactly() {
        let mesh = build_initial_mesh(&DomainSpec::disk());
        let refined = mesh.refine(&[0, 3]).unwrap();
        assert!(refined.num_vertices() > mesh.num_vertices());
        for v in 0..mesh.num_vertices() {
            assert_eq!(mesh.vertex(v), refined.vertex(v));
        }
    }

    #[test]
    fn patches_on_reference_configurations() {
        let single = single_triangle();
        assert_eq!(single.patches(0), (vec![0], vec![0]));

        let two = two_triangle_square();
        let (n, nstar) = two.patches(0);
        assert_eq!(n, vec![0, 1]);
        assert_eq!(nstar, vec![0, 1]);

        let fan = build_initial_mesh(&DomainSpec::square());
        let (n, nstar) = fan.patches(0);
        assert_eq!(n, vec![0, 1, 2, 3]);
        assert_eq!(nstar, vec![0, 1, 3]);
    }

    #[test]
    fn edge_patch_symmetry() {
        let mesh = build_initial_mesh(&DomainSpec::lshape()).uniform_refine();
        for t in 0..mesh.num_triangles() {
            let (_, nstar) = mesh.patches(t);
            for &s in &nstar {
                let (_, nstar_s) = mesh.patches(s);
                assert!(nstar_s.contains(&t));
            }
        }
    }

    #[test]
    fn element_size_examples() {
        let right = single_triangle();
        assert_relative_eq!(right.element_size(0), 2.0f64.sqrt());

        let equilateral = Mesh::from_parts(
            DomainSpec::square(),
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3.0f64.sqrt() / 2.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_relative_eq!(equilateral.element_size(0), 1.0, epsilon = 1e-15);

        let mesh = build_initial_mesh(&DomainSpec::lshape());
        let brute = (0..mesh.num_triangles())
            .map(|t| {
                let c = mesh.triangle_coords(t);
                (0..3)
                    .map(|k| dist(c[k], c[(k + 1) % 3]))
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        assert_eq!(mesh.h_max(), brute);
    }

    #[test]
    fn interior_node_examples() {
        assert_eq!(
            build_initial_mesh(&DomainSpec::square()).num_interior_nodes(),
            1
        );
        assert_eq!(
            build_initial_mesh(&DomainSpec::square())
                .uniform_refine()
                .num_interior_nodes(),
            5
        );
        assert!(single_triangle().interior_nodes().is_empty());
    }

    #[test]
    fn repeated_bisection_keeps_min_angle_bounded() {
        for spec in [
            DomainSpec::disk(),
            DomainSpec::square(),
            DomainSpec::lshape(),
        ] {
            let initial = build_initial_mesh(&spec);
            let bound = 0.5 * initial.min_angle();
            let mut mesh = initial;
            for sweep in 0..10 {
                // alternate between full sweeps and a fixed local pattern to
                // exercise closure chains
                let marked: Vec<usize> = if sweep % 2 == 0 {
                    (0..mesh.num_triangles()).collect()
                } else {
                    (0..mesh.num_triangles().min(5)).collect()
                };
                mesh = mesh.refine(&marked).unwrap();
                mesh.validate().unwrap();
                assert!(
                    mesh.min_angle() >= bound - 1e-12,
                    "{:?}: min angle {} fell below {}",
                    spec.kind,
                    mesh.min_angle(),
                    bound
                );
            }
        }
    }

    #[test]
    fn marked_triangles_are_always_split() {
        let mesh = build_initial_mesh(&DomainSpec::lshape());
        let marked = vec![0, 2, 7];
        let refined = mesh.refine(&marked).unwrap();
        // all parents of the marked set are gone: every child has a strictly
        // smaller area than its marked parent would allow
        assert!(refined.num_triangles() >= mesh.num_triangles() + marked.len());
        refined.validate().unwrap();
    }

    #[test]
    fn text_dump_round_trips() {
        let mesh = build_initial_mesh(&DomainSpec::disk()).uniform_refine();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let parsed = Mesh::read_text(std::io::Cursor::new(&buf), DomainSpec::disk()).unwrap();
        assert_eq!(parsed.num_vertices(), mesh.num_vertices());
        assert_eq!(parsed.triangles(), mesh.triangles());
        assert_eq!(parsed.vertices(), mesh.vertices());
        for v in 0..mesh.num_vertices() {
            assert_eq!(parsed.is_boundary_vertex(v), mesh.is_boundary_vertex(v));
        }
    }

    #[test]
    fn deterministic_refinement() {
        let mesh = build_initial_mesh(&DomainSpec::disk());
        let a = mesh.refine(&[1, 4, 6]).unwrap();
        let b = mesh.refine(&[1, 4, 6]).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.triangles(), b.triangles());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn total_area(mesh: &Mesh) -> f64 {
            (0..mesh.num_triangles()).map(|t| mesh.triangle_area(t)).sum()
        }

        proptest! {
            // refinement with arbitrary marked sets keeps the mesh
            // conforming, preserves the total area (snapping off so the
            // domain itself is fixed) and never loses vertices
            #[test]
            fn random_marks_keep_conformity_and_area(
                domain in 0usize..3,
                rounds in proptest::collection::vec(
                    proptest::collection::vec(0usize..64, 1..8), 1..4),
            ) {
                let spec = match domain {
                    0 => DomainSpec::disk().with_snap(false),
                    1 => DomainSpec::square(),
                    _ => DomainSpec::lshape(),
                };
                let mut mesh = build_initial_mesh(&spec);
                let area = total_area(&mesh);
                for marks in rounds {
                    let marked: Vec<usize> =
                        marks.iter().map(|m| m % mesh.num_triangles()).collect();
                    let refined = mesh.refine(&marked).unwrap();
                    refined.validate().unwrap();
                    prop_assert!(refined.num_vertices() > mesh.num_vertices());
                    prop_assert!((total_area(&refined) - area).abs() <= 1e-12 * area);
                    for v in 0..mesh.num_vertices() {
                        prop_assert_eq!(mesh.vertex(v), refined.vertex(v));
                    }
                    mesh = refined;
                }
            }
        }
    }
}
