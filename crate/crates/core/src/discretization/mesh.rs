//! Conforming simplicial meshes in one and two dimensions.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Axis-aligned layout of a structured mesh, used for constant-time point location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
}

/// Affine geometry of one cell.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    /// Columns are `x_i - x_0` for the local vertices `i >= 1`.
    pub jacobian: [[f64; 2]; 2],
    pub volume: f64,
    /// Gradients of the barycentric coordinates, one per local vertex.
    pub grad_bary: Vec<[f64; 2]>,
    pub diameter: f64,
    /// Diameter of the largest inscribed ball.
    pub inscribed: f64,
}

/// A vertex patch: the cells sharing one vertex.
#[derive(Debug, Clone)]
pub struct VertexPatch {
    pub vertex: usize,
    pub cells: Vec<usize>,
    pub on_boundary: bool,
    pub diameter: f64,
}

/// Conforming simplicial mesh of an interval or a polygon.
///
/// Cell vertex lists are stored in ascending global order, so local face `i`
/// (opposite local vertex `i`) also has ascending vertices.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
    pub faces: Vec<Vec<usize>>,
    pub face_cells: Vec<Vec<usize>>,
    pub cell_faces: Vec<Vec<usize>>,
    pub vertex_cells: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_face: Vec<bool>,
    pub geometry: Vec<CellGeometry>,
    pub grid: Option<Grid>,
}

impl SimplicialMesh {
    /// Build a mesh from raw vertex coordinates and cell connectivity.
    pub fn from_cells(dim: usize, vertices: Vec<[f64; 2]>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not supported")));
        }
        if cells.is_empty() {
            return Err(Error::InvalidArgument("mesh has no cells".into()));
        }
        let mut sorted_cells = Vec::with_capacity(cells.len());
        for c in cells {
            if c.len() != dim + 1 {
                return Err(Error::InvalidArgument(format!(
                    "cell with {} vertices in dimension {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument("cell references missing vertex".into()));
            }
            let mut c = c;
            c.sort_unstable();
            sorted_cells.push(c);
        }
        let cells = sorted_cells;

        let mut geometry = Vec::with_capacity(cells.len());
        for (k, c) in cells.iter().enumerate() {
            let g = cell_geometry(dim, c.iter().map(|&v| vertices[v]).collect());
            if g.volume <= 1e-14 * g.diameter.powi(dim as i32) {
                return Err(Error::InvalidArgument(format!("cell {k} is degenerate")));
            }
            geometry.push(g);
        }

        let mut face_index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut faces = Vec::new();
        let mut face_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_faces = Vec::with_capacity(cells.len());
        for (k, c) in cells.iter().enumerate() {
            let mut cf = Vec::with_capacity(dim + 1);
            for i in 0..=dim {
                let f: Vec<usize> = c
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &v)| v)
                    .collect();
                let id = *face_index.entry(f.clone()).or_insert_with(|| {
                    faces.push(f);
                    face_cells.push(Vec::new());
                    faces.len() - 1
                });
                face_cells[id].push(k);
                cf.push(id);
            }
            cell_faces.push(cf);
        }
        if let Some(f) = face_cells.iter().position(|fc| fc.len() > 2) {
            return Err(Error::InvalidArgument(format!("face {f} shared by more than two cells")));
        }
        let boundary_face: Vec<bool> = face_cells.iter().map(|fc| fc.len() == 1).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (f, verts) in faces.iter().enumerate() {
            if boundary_face[f] {
                for &v in verts {
                    boundary_vertex[v] = true;
                }
            }
        }
        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (k, c) in cells.iter().enumerate() {
            for &v in c {
                vertex_cells[v].push(k);
            }
        }
        Ok(SimplicialMesh {
            dim,
            vertices,
            cells,
            faces,
            face_cells,
            cell_faces,
            vertex_cells,
            boundary_vertex,
            boundary_face,
            geometry,
            grid: None,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    /// Shape-regularity parameter `max_K h_K / rho_K`.
    pub fn shape_regularity(&self) -> f64 {
        self.geometry
            .iter()
            .map(|g| g.diameter / g.inscribed)
            .fold(0.0, f64::max)
    }

    /// Physical point for reference coordinates `xi` on cell `k`.
    pub fn map_to_physical(&self, k: usize, xi: [f64; 2]) -> [f64; 2] {
        let x0 = self.vertices[self.cells[k][0]];
        let j = &self.geometry[k].jacobian;
        [
            x0[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            x0[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    /// Barycentric coordinates of `x` with respect to cell `k`.
    pub fn barycentric(&self, k: usize, x: [f64; 2]) -> Vec<f64> {
        let c = &self.cells[k];
        let g = &self.geometry[k];
        let mut lam = Vec::with_capacity(self.dim + 1);
        let x0 = self.vertices[c[0]];
        let mut rest = 0.0;
        for i in 1..=self.dim {
            let gi = g.grad_bary[i];
            let li = gi[0] * (x[0] - x0[0]) + gi[1] * (x[1] - x0[1]);
            lam.push(li);
            rest += li;
        }
        lam.insert(0, 1.0 - rest);
        lam
    }

    /// Some cell containing `x` together with its barycentric coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, Vec<f64>)> {
        const TOL: f64 = 1e-10;
        let inside = |k: usize| -> Option<Vec<f64>> {
            let lam = self.barycentric(k, x);
            if lam.iter().all(|&l| l >= -TOL) {
                Some(lam)
            } else {
                None
            }
        };
        if let Some(grid) = self.grid {
            let [x0, x1, y0, y1] = grid.bounds;
            let fi = ((x[0] - x0) / (x1 - x0) * grid.nx as f64).floor();
            let i = (fi.max(0.0) as usize).min(grid.nx - 1);
            let candidates: Vec<usize> = if self.dim == 1 {
                let mut v = vec![i];
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < grid.nx {
                    v.push(i + 1);
                }
                v
            } else {
                let fj = ((x[1] - y0) / (y1 - y0) * grid.ny as f64).floor();
                let j = (fj.max(0.0) as usize).min(grid.ny - 1);
                let mut v = Vec::new();
                for dj in [0i64, -1, 1] {
                    for di in [0i64, -1, 1] {
                        let (ii, jj) = (i as i64 + di, j as i64 + dj);
                        if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                            continue;
                        }
                        let q = jj as usize * grid.nx + ii as usize;
                        v.push(2 * q);
                        v.push(2 * q + 1);
                    }
                }
                v
            };
            for k in candidates {
                if let Some(lam) = inside(k) {
                    return Some((k, lam));
                }
            }
        }
        (0..self.n_cells()).find_map(|k| inside(k).map(|lam| (k, lam)))
    }

    /// Cells sharing vertex `a`, with the patch diameter.
    pub fn vertex_patch(&self, a: usize) -> VertexPatch {
        let cells = self.vertex_cells[a].clone();
        let mut verts: Vec<usize> = cells.iter().flat_map(|&k| self.cells[k].iter().copied()).collect();
        verts.sort_unstable();
        verts.dedup();
        let mut diameter: f64 = 0.0;
        for (i, &p) in verts.iter().enumerate() {
            for &q in &verts[i + 1..] {
                diameter = diameter.max(dist(self.vertices[p], self.vertices[q]));
            }
        }
        VertexPatch {
            vertex: a,
            cells,
            on_boundary: self.boundary_vertex[a],
            diameter,
        }
    }

    /// Uniform refinement of a structured mesh by an integer factor per direction.
    ///
    /// Interval meshes without grid information are refined by splitting each cell.
    pub fn refine(&self, factor: usize) -> Result<SimplicialMesh> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be positive".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        match (self.dim, self.grid) {
            (1, Some(g)) => interval_mesh(g.nx * factor, g.bounds[0], g.bounds[1]),
            (2, Some(g)) => structured_triangle_mesh(g.nx * factor, g.ny * factor, g.bounds),
            (1, None) => {
                let mut nodes: Vec<f64> = self.vertices.iter().map(|v| v[0]).collect();
                nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut fine = Vec::with_capacity((nodes.len() - 1) * factor + 1);
                for w in nodes.windows(2) {
                    for s in 0..factor {
                        fine.push(w[0] + (w[1] - w[0]) * s as f64 / factor as f64);
                    }
                }
                fine.push(*nodes.last().unwrap());
                interval_mesh_from_nodes(&fine)
            }
            _ => Err(Error::InvalidArgument(
                "refinement requires a structured or one-dimensional mesh".into(),
            )),
        }
    }

    /// Whether every cell of `fine` lies inside a single cell of `self`.
    pub fn is_refined_by(&self, fine: &SimplicialMesh) -> bool {
        if fine.dim != self.dim {
            return false;
        }
        fine.cells.iter().enumerate().all(|(k, _)| self.parent_of(fine, k).is_some())
    }

    /// The cell of `self` that contains fine cell `k` of `fine`, if any.
    pub fn parent_of(&self, fine: &SimplicialMesh, k: usize) -> Option<usize> {
        let c = centroid(fine, k);
        let (parent, _) = self.locate(c)?;
        let ok = fine.cells[k].iter().all(|&v| {
            self.barycentric(parent, fine.vertices[v])
                .iter()
                .all(|&l| l >= -1e-10)
        });
        ok.then_some(parent)
    }
}

/// Centroid of cell `k`.
pub fn centroid(mesh: &SimplicialMesh, k: usize) -> [f64; 2] {
    let n = mesh.cells[k].len() as f64;
    let mut c = [0.0; 2];
    for &v in &mesh.cells[k] {
        c[0] += mesh.vertices[v][0] / n;
        c[1] += mesh.vertices[v][1] / n;
    }
    c
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn cell_geometry(dim: usize, x: Vec<[f64; 2]>) -> CellGeometry {
    if dim == 1 {
        let h = x[1][0] - x[0][0];
        return CellGeometry {
            jacobian: [[h, 0.0], [0.0, 1.0]],
            volume: h.abs(),
            grad_bary: vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]],
            diameter: h.abs(),
            inscribed: h.abs(),
        };
    }
    let j = [
        [x[1][0] - x[0][0], x[2][0] - x[0][0]],
        [x[1][1] - x[0][1], x[2][1] - x[0][1]],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // Rows of J^{-1} are the gradients of lambda_1 and lambda_2.
    let g1 = [j[1][1] / det, -j[0][1] / det];
    let g2 = [-j[1][0] / det, j[0][0] / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    let e = [dist(x[0], x[1]), dist(x[1], x[2]), dist(x[0], x[2])];
    let area = 0.5 * det.abs();
    let perimeter = e[0] + e[1] + e[2];
    CellGeometry {
        jacobian: j,
        volume: area,
        grad_bary: vec![g0, g1, g2],
        diameter: e[0].max(e[1]).max(e[2]),
        inscribed: 4.0 * area / perimeter,
    }
}

/// Uniform mesh of `[a, b]` with `n` cells.
pub fn interval_mesh(n: usize, a: f64, b: f64) -> Result<SimplicialMesh> {
    if n == 0 || b <= a {
        return Err(Error::InvalidArgument(format!("interval mesh with n={n} on [{a}, {b}]")));
    }
    let nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let mut mesh = interval_mesh_from_nodes(&nodes)?;
    mesh.grid = Some(Grid {
        nx: n,
        ny: 1,
        bounds: [a, b, 0.0, 0.0],
    });
    Ok(mesh)
}

/// Interval mesh with the given strictly increasing nodes.
pub fn interval_mesh_from_nodes(nodes: &[f64]) -> Result<SimplicialMesh> {
    if nodes.len() < 2 || nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("interval nodes must be strictly increasing".into()));
    }
    let vertices = nodes.iter().map(|&x| [x, 0.0]).collect();
    let cells = (0..nodes.len() - 1).map(|i| vec![i, i + 1]).collect();
    SimplicialMesh::from_cells(1, vertices, cells)
}

/// Triangulation of a rectangle into `nx * ny` squares, each cut along the same diagonal.
///
/// Cells `2q` and `2q + 1` belong to square `q = j * nx + i`.
pub fn structured_triangle_mesh(nx: usize, ny: usize, bounds: [f64; 4]) -> Result<SimplicialMesh> {
    let [x0, x1, y0, y1] = bounds;
    if nx == 0 || ny == 0 || x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidArgument(format!(
            "structured mesh with nx={nx}, ny={ny} on {bounds:?}"
        )));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut mesh = SimplicialMesh::from_cells(2, vertices, cells)?;
    mesh.grid = Some(Grid { nx, ny, bounds });
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_has_one_interior_vertex_with_six_cells() {
        let m = structured_triangle_mesh(2, 2, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let interior: Vec<usize> = (0..m.n_vertices()).filter(|&v| !m.boundary_vertex[v]).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(m.vertex_patch(interior[0]).cells.len(), 6);
    }

    #[test]
    fn shape_regularity_independent_of_resolution() {
        let a = structured_triangle_mesh(1, 1, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let b = structured_triangle_mesh(4, 4, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((a.shape_regularity() - b.shape_regularity()).abs() < 1e-12);
    }

    #[test]
    fn interval_counts() {
        let m = interval_mesh(4, 0.0, 1.0).unwrap();
        assert_eq!(m.n_vertices(), 5);
        assert_eq!(m.n_cells(), 4);
        assert_eq!(m.boundary_vertex.iter().filter(|b| **b).count(), 2);
    }

    #[test]
    fn locate_finds_containing_cell() {
        let m = structured_triangle_mesh(3, 5, [0.0, 2.0, -1.0, 1.0]).unwrap();
        for &x in &[[0.3, 0.2], [1.999, -0.999], [0.0, 1.0], [1.0, 0.0]] {
            let (k, lam) = m.locate(x).unwrap();
            assert!(lam.iter().all(|&l| l >= -1e-10), "{k}");
        }
        assert!(m.locate([3.0, 0.0]).is_none());
    }

    #[test]
    fn refinement_is_nested() {
        let m = structured_triangle_mesh(2, 3, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let f = m.refine(2).unwrap();
        assert!(m.is_refined_by(&f));
        let skew = structured_triangle_mesh(3, 3, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(!m.is_refined_by(&skew));
    }
}
