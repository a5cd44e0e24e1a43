//! Continuous Lagrange spaces with homogeneous Dirichlet conditions.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::lagrange::{bary_from_reference, LagrangeBasis};
use super::mesh::SimplicialMesh;
use super::quadrature::QuadratureRule;
use super::sparse::SymmetricOperator;
use crate::error::{Error, Result};

/// Which bilinear form to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Mass,
    Stiffness,
}

/// Continuous piecewise polynomials of degree `degree` vanishing on the boundary.
///
/// Coefficient vectors range over the unconstrained dofs only. Vertex dofs use the
/// vertex index as their global dof number.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    pub mesh: Arc<SimplicialMesh>,
    pub degree: usize,
    pub basis: LagrangeBasis,
    pub cell_dofs: Vec<Vec<usize>>,
    pub n_dofs: usize,
    pub dof_points: Vec<[f64; 2]>,
    pub free_index: Vec<Option<usize>>,
    pub free_dofs: Vec<usize>,
    pub quadrature: QuadratureRule,
}

impl ScalarSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Self> {
        if !(1..=4).contains(&degree) {
            return Err(Error::InvalidArgument(format!("polynomial degree {degree} not in 1..=4")));
        }
        let basis = LagrangeBasis::new(mesh.dim, degree);
        let mut keys: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        let mut dof_points: Vec<[f64; 2]> = mesh.vertices.clone();
        let mut support: Vec<Vec<usize>> = (0..mesh.n_vertices()).map(|v| vec![v]).collect();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
        for cell in &mesh.cells {
            let mut dofs = Vec::with_capacity(basis.len());
            for (i, alpha) in basis.nodes.iter().enumerate() {
                let key: Vec<(usize, usize)> = cell
                    .iter()
                    .zip(alpha)
                    .filter(|(_, &a)| a > 0)
                    .map(|(&v, &a)| (v, a))
                    .collect();
                if key.len() == 1 {
                    dofs.push(key[0].0);
                    continue;
                }
                let id = *keys.entry(key.clone()).or_insert_with(|| {
                    let lam = basis.node_bary(i);
                    let mut x = [0.0; 2];
                    for (l, &v) in lam.iter().zip(cell) {
                        x[0] += l * mesh.vertices[v][0];
                        x[1] += l * mesh.vertices[v][1];
                    }
                    dof_points.push(x);
                    support.push(key.iter().map(|(v, _)| *v).collect());
                    dof_points.len() - 1
                });
                dofs.push(id);
            }
            cell_dofs.push(dofs);
        }
        let n_dofs = dof_points.len();

        // A dof is constrained when its support vertices all lie on one boundary face.
        let mut boundary_faces: Vec<&Vec<usize>> = Vec::new();
        for (f, verts) in mesh.faces.iter().enumerate() {
            if mesh.boundary_face[f] {
                boundary_faces.push(verts);
            }
        }
        let mut free_index = vec![None; n_dofs];
        let mut free_dofs = Vec::new();
        for d in 0..n_dofs {
            let s = &support[d];
            let on_boundary = if s.len() == 1 {
                mesh.boundary_vertex[s[0]]
            } else {
                boundary_faces.iter().any(|f| s.iter().all(|v| f.contains(v)))
            };
            if !on_boundary {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        let quadrature = QuadratureRule::simplex(mesh.dim, 2 * degree + 2);
        Ok(ScalarSpace {
            mesh,
            degree,
            basis,
            cell_dofs,
            n_dofs,
            dof_points,
            free_index,
            free_dofs,
            quadrature,
        })
    }

    /// Number of unconstrained dofs.
    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }

    /// Whether `other` is the same space (same mesh and degree).
    pub fn same_as(&self, other: &ScalarSpace) -> bool {
        self.degree == other.degree
            && (Arc::ptr_eq(&self.mesh, &other.mesh)
                || (self.mesh.vertices == other.mesh.vertices && self.mesh.cells == other.mesh.cells))
    }

    fn local_matrix(&self, k: usize, kind: FormKind) -> DMatrix<f64> {
        let g = &self.mesh.geometry[k];
        let nb = self.basis.len();
        let mut m = DMatrix::zeros(nb, nb);
        let scale = g.volume / if self.mesh.dim == 1 { 1.0 } else { 0.5 };
        for (p, w) in self.quadrature.points.iter().zip(&self.quadrature.weights) {
            let lam = bary_from_reference(self.mesh.dim, *p);
            match kind {
                FormKind::Mass => {
                    let v = self.basis.values(&lam);
                    for i in 0..nb {
                        for j in 0..nb {
                            m[(i, j)] += w * scale * v[i] * v[j];
                        }
                    }
                }
                FormKind::Stiffness => {
                    let gr = self.basis.gradients(&lam, &g.grad_bary);
                    for i in 0..nb {
                        for j in 0..nb {
                            m[(i, j)] += w * scale * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1]);
                        }
                    }
                }
            }
        }
        m
    }

    /// Matrix over the unconstrained dofs; boundary rows and columns are removed.
    pub fn assemble(&self, kind: FormKind) -> SymmetricOperator {
        let mut t = Vec::new();
        for k in 0..self.mesh.n_cells() {
            let m = self.local_matrix(k, kind);
            let dofs = &self.cell_dofs[k];
            for (i, &di) in dofs.iter().enumerate() {
                let Some(fi) = self.free_index[di] else { continue };
                for (j, &dj) in dofs.iter().enumerate() {
                    if let Some(fj) = self.free_index[dj] {
                        t.push((fi, fj, m[(i, j)]));
                    }
                }
            }
        }
        SymmetricOperator::from_triplets(self.dim(), t)
    }

    /// Matrix over all dofs, before boundary elimination.
    pub fn assemble_full(&self, kind: FormKind) -> SymmetricOperator {
        let mut t = Vec::new();
        for k in 0..self.mesh.n_cells() {
            let m = self.local_matrix(k, kind);
            let dofs = &self.cell_dofs[k];
            for (i, &di) in dofs.iter().enumerate() {
                for (j, &dj) in dofs.iter().enumerate() {
                    t.push((di, dj, m[(i, j)]));
                }
            }
        }
        SymmetricOperator::from_triplets(self.n_dofs, t)
    }

    /// Quadrature rule on cell `k`: physical points, barycentric coordinates, weights.
    pub fn cell_quadrature(&self, k: usize, rule: &QuadratureRule) -> Vec<([f64; 2], Vec<f64>, f64)> {
        let g = &self.mesh.geometry[k];
        let scale = g.volume / if self.mesh.dim == 1 { 1.0 } else { 0.5 };
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| {
                (
                    self.mesh.map_to_physical(k, *p),
                    bary_from_reference(self.mesh.dim, *p),
                    w * scale,
                )
            })
            .collect()
    }

    /// Load vector `(f, phi_i)` over the unconstrained dofs.
    pub fn load_vector(&self, f: &dyn Fn([f64; 2]) -> f64, quad_degree: usize) -> DVector<f64> {
        self.load_vector_cellwise(&|_, x| f(x), quad_degree)
    }

    /// Like [`ScalarSpace::load_vector`] with `f` also receiving the cell index.
    pub fn load_vector_cellwise(&self, f: &dyn Fn(usize, [f64; 2]) -> f64, quad_degree: usize) -> DVector<f64> {
        let rule = QuadratureRule::simplex(self.mesh.dim, quad_degree);
        let mut b = DVector::zeros(self.dim());
        for k in 0..self.mesh.n_cells() {
            for (x, lam, w) in self.cell_quadrature(k, &rule) {
                let fx = f(k, x);
                if fx == 0.0 {
                    continue;
                }
                let v = self.basis.values(&lam);
                for (i, &d) in self.cell_dofs[k].iter().enumerate() {
                    if let Some(fi) = self.free_index[d] {
                        b[fi] += w * fx * v[i];
                    }
                }
            }
        }
        b
    }

    /// Local coefficients on cell `k`, zero for constrained dofs.
    pub fn local_coefficients(&self, coeffs: &DVector<f64>, k: usize) -> Vec<f64> {
        self.cell_dofs[k]
            .iter()
            .map(|&d| self.free_index[d].map_or(0.0, |f| coeffs[f]))
            .collect()
    }

    pub fn eval_in_cell(&self, coeffs: &DVector<f64>, k: usize, lam: &[f64]) -> f64 {
        let v = self.basis.values(lam);
        self.local_coefficients(coeffs, k)
            .iter()
            .zip(&v)
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn gradient_in_cell(&self, coeffs: &DVector<f64>, k: usize, lam: &[f64]) -> [f64; 2] {
        let g = self.basis.gradients(lam, &self.mesh.geometry[k].grad_bary);
        let mut out = [0.0; 2];
        for (c, gi) in self.local_coefficients(coeffs, k).iter().zip(&g) {
            out[0] += c * gi[0];
            out[1] += c * gi[1];
        }
        out
    }

    /// Point evaluation; zero outside the mesh.
    pub fn eval(&self, coeffs: &DVector<f64>, x: [f64; 2]) -> f64 {
        match self.mesh.locate(x) {
            Some((k, lam)) => self.eval_in_cell(coeffs, k, &lam),
            None => 0.0,
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: &dyn Fn([f64; 2]) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.free_dofs.iter().map(|&d| f(self.dof_points[d])))
    }

    /// L2 projection of `f` onto the space.
    pub fn l2_project(&self, f: &dyn Fn([f64; 2]) -> f64, quad_degree: usize) -> Result<DVector<f64>> {
        let m = self.assemble(FormKind::Mass);
        super::sparse::solve_spd(&m, &self.load_vector(f, quad_degree))
    }

    /// `lambda_a` on cell `k` for vertex `a` of that cell, or zero if `a` is not a vertex of `k`.
    pub fn hat(&self, a: usize, k: usize, lam: &[f64]) -> f64 {
        self.mesh.cells[k].iter().position(|&v| v == a).map_or(0.0, |i| lam[i])
    }

    /// Gradient of the hat function of vertex `a` on cell `k`.
    pub fn hat_gradient(&self, a: usize, k: usize) -> [f64; 2] {
        self.mesh.cells[k]
            .iter()
            .position(|&v| v == a)
            .map_or([0.0; 2], |i| self.mesh.geometry[k].grad_bary[i])
    }
}

/// Exact injection of a coarse space into a nested finer one.
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub coarse_dim: usize,
    pub fine_dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    identity: bool,
}

impl Prolongation {
    /// Nodal injection; requires the fine mesh to refine the coarse one and the fine
    /// degree to be at least the coarse degree.
    pub fn new(coarse: &ScalarSpace, fine: &ScalarSpace) -> Result<Self> {
        if coarse.same_as(fine) {
            return Ok(Prolongation {
                coarse_dim: coarse.dim(),
                fine_dim: fine.dim(),
                rows: Vec::new(),
                identity: true,
            });
        }
        if fine.degree < coarse.degree || !coarse.mesh.is_refined_by(&fine.mesh) {
            return Err(Error::InvalidArgument(
                "fine space does not contain the coarse space".into(),
            ));
        }
        let mut rows = Vec::with_capacity(fine.dim());
        for &d in &fine.free_dofs {
            let x = fine.dof_points[d];
            let (k, lam) = coarse
                .mesh
                .locate(x)
                .ok_or_else(|| Error::InvalidArgument("fine node outside the coarse mesh".into()))?;
            let v = coarse.basis.values(&lam);
            let mut row = Vec::new();
            for (i, &cd) in coarse.cell_dofs[k].iter().enumerate() {
                if let Some(ci) = coarse.free_index[cd] {
                    if v[i].abs() > 1e-14 {
                        row.push((ci, v[i]));
                    }
                }
            }
            rows.push(row);
        }
        Ok(Prolongation {
            coarse_dim: coarse.dim(),
            fine_dim: fine.dim(),
            rows,
            identity: false,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn apply(&self, c: &DVector<f64>) -> DVector<f64> {
        if self.identity {
            return c.clone();
        }
        DVector::from_iterator(
            self.fine_dim,
            self.rows.iter().map(|r| r.iter().map(|(j, w)| w * c[*j]).sum()),
        )
    }

    pub fn apply_transpose(&self, f: &DVector<f64>) -> DVector<f64> {
        if self.identity {
            return f.clone();
        }
        let mut c = DVector::zeros(self.coarse_dim);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, w) in r {
                c[*j] += w * f[i];
            }
        }
        c
    }
}

/// Discontinuous piecewise polynomial data, stored by local Lagrange coefficients.
#[derive(Debug, Clone)]
pub struct CellField {
    pub mesh: Arc<SimplicialMesh>,
    pub basis: LagrangeBasis,
    pub coefficients: Vec<Vec<f64>>,
}

impl CellField {
    pub fn zeros(mesh: Arc<SimplicialMesh>, degree: usize) -> Self {
        let basis = LagrangeBasis::new(mesh.dim, degree);
        let coefficients = vec![vec![0.0; basis.len()]; mesh.n_cells()];
        CellField {
            mesh,
            basis,
            coefficients,
        }
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Elementwise L2 projection of `f` onto polynomials of degree `degree`.
    ///
    /// `f` receives the cell index and the physical point.
    pub fn project(
        mesh: Arc<SimplicialMesh>,
        degree: usize,
        quad_degree: usize,
        f: &dyn Fn(usize, [f64; 2]) -> f64,
    ) -> Self {
        let basis = LagrangeBasis::new(mesh.dim, degree);
        let rule = QuadratureRule::simplex(mesh.dim, quad_degree.max(2 * degree));
        let nb = basis.len();
        let mut coefficients = Vec::with_capacity(mesh.n_cells());
        // The reference mass matrix is shared by all cells up to the volume factor.
        let mut mref = DMatrix::zeros(nb, nb);
        let vals: Vec<Vec<f64>> = rule
            .points
            .iter()
            .map(|p| basis.values(&bary_from_reference(mesh.dim, *p)))
            .collect();
        for (v, w) in vals.iter().zip(&rule.weights) {
            for i in 0..nb {
                for j in 0..nb {
                    mref[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let chol = mref.cholesky().expect("reference mass matrix is positive definite");
        for k in 0..mesh.n_cells() {
            let mut rhs = DVector::zeros(nb);
            for ((p, w), v) in rule.points.iter().zip(&rule.weights).zip(&vals) {
                let fx = f(k, mesh.map_to_physical(k, *p));
                for i in 0..nb {
                    rhs[i] += w * fx * v[i];
                }
            }
            coefficients.push(chol.solve(&rhs).iter().copied().collect());
        }
        CellField {
            mesh,
            basis,
            coefficients,
        }
    }

    pub fn eval_in_cell(&self, k: usize, lam: &[f64]) -> f64 {
        self.basis
            .values(lam)
            .iter()
            .zip(&self.coefficients[k])
            .map(|(v, c)| v * c)
            .sum()
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self.mesh.locate(x) {
            Some((k, lam)) => self.eval_in_cell(k, &lam),
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::mesh::{interval_mesh, structured_triangle_mesh};

    fn unit_square(n: usize) -> Arc<SimplicialMesh> {
        Arc::new(structured_triangle_mesh(n, n, [0.0, 1.0, 0.0, 1.0]).unwrap())
    }

    #[test]
    fn dof_counts() {
        let s = ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap();
        assert_eq!(s.dim(), 3);
        let s = ScalarSpace::new(unit_square(2), 1).unwrap();
        assert_eq!(s.dim(), 1);
        let s = ScalarSpace::new(unit_square(1), 2).unwrap();
        // The diagonal midpoint is the only interior node.
        assert_eq!(s.dim(), 1);
        let s = ScalarSpace::new(unit_square(3), 3).unwrap();
        assert_eq!(s.n_dofs, 100);
        assert_eq!(s.dim(), 64);
    }

    #[test]
    fn partition_of_unity_checks() {
        for p in 1..=3 {
            let s = ScalarSpace::new(unit_square(3), p).unwrap();
            let m = s.assemble_full(FormKind::Mass);
            let total: f64 = m.values.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let a = s.assemble_full(FormKind::Stiffness);
            let ones = DVector::from_element(s.n_dofs, 1.0);
            assert!(a.mul_vec(&ones).amax() < 1e-11);
            assert!(s.assemble(FormKind::Stiffness).symmetry_defect() < 1e-14);
        }
    }

    #[test]
    fn projection_reproduces_space_members() {
        let s = ScalarSpace::new(Arc::new(interval_mesh(3, 0.0, 1.0).unwrap()), 2).unwrap();
        let g = |x: [f64; 2]| x[0] * (1.0 - x[0]);
        let c = s.l2_project(&g, 8).unwrap();
        assert!((c - s.interpolate(&g)).amax() < 1e-12);
    }

    #[test]
    fn prolongation_is_exact() {
        let coarse = ScalarSpace::new(unit_square(2), 1).unwrap();
        let fine = ScalarSpace::new(Arc::new(coarse.mesh.refine(2).unwrap()), 2).unwrap();
        let p = Prolongation::new(&coarse, &fine).unwrap();
        let c = DVector::from_fn(coarse.dim(), |i, _| 1.0 + i as f64);
        let f = p.apply(&c);
        for x in [[0.3, 0.4], [0.71, 0.2], [0.5, 0.5]] {
            assert!((coarse.eval(&c, x) - fine.eval(&f, x)).abs() < 1e-13);
        }
        let other = ScalarSpace::new(unit_square(3), 1).unwrap();
        assert!(Prolongation::new(&coarse, &other).is_err());
    }
}
