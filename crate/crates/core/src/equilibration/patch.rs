//! Patch-local mixed problems for the equilibrated flux.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::rtn::{monomial_value, monomials, LocalFrame, RtnSpace};
use crate::discretization::{QuadratureRule, ScalarSpace, SimplicialMesh};
use crate::error::{Error, Result};
use crate::timestepping::TimeSlabSolution;

/// Per-cell matrices shared by all patches containing the cell.
#[derive(Debug, Clone)]
struct CellMatrices {
    /// `(phi_i, phi_j)_K` for the local flux basis.
    mass: DMatrix<f64>,
    /// `(q_l, div phi_j)_K` for the local pressure basis.
    divergence: DMatrix<f64>,
    /// `(q_l, q_m)_K`.
    pressure_mass: DMatrix<f64>,
    /// `int_K q_l`.
    pressure_mean: DVector<f64>,
    points: Vec<([f64; 2], Vec<f64>, f64)>,
    flux_values: Vec<Vec<[f64; 2]>>,
    flux_divergence: Vec<Vec<f64>>,
    pressure_values: Vec<Vec<f64>>,
}

/// A per-cell polynomial on a vertex patch, in the scaled monomial basis of each cell.
#[derive(Debug, Clone)]
pub struct PatchSource {
    pub vertex: usize,
    pub cells: Vec<usize>,
    pub coefficients: Vec<DVector<f64>>,
    frames: Vec<LocalFrame>,
    exponents: Vec<[usize; 2]>,
}

impl PatchSource {
    pub fn eval(&self, local_cell: usize, x: [f64; 2]) -> f64 {
        let xi = self.frames[local_cell].xi(x);
        self.exponents
            .iter()
            .zip(self.coefficients[local_cell].iter())
            .map(|(e, c)| c * monomial_value(*e, xi))
            .sum()
    }
}

/// Local flux on one patch for a set of right-hand sides.
#[derive(Debug, Clone)]
pub struct PatchSolution {
    pub vertex: usize,
    /// Global RTN dofs of the unconstrained patch unknowns.
    pub dofs: Vec<usize>,
    /// One coefficient vector over `dofs` per right-hand side.
    pub coefficients: Vec<DVector<f64>>,
    /// `|sigma + target|^2_{omega_a}` per right-hand side.
    pub objective: Vec<f64>,
    /// Largest relative KKT residual over the right-hand sides.
    pub kkt_residual: f64,
    /// Largest `|div sigma - g|_{omega_a} / (1 + |g|_{omega_a})`.
    pub constraint_residual: f64,
}

/// Factored saddle-point system of one patch.
#[derive(Debug, Clone)]
struct PatchSystem {
    cells: Vec<usize>,
    dofs: Vec<usize>,
    /// Per patch cell: local flux dof to patch unknown.
    local_map: Vec<Vec<Option<usize>>>,
    mean_constraint: bool,
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Builds and solves the patch problems for a given flux degree.
#[derive(Debug, Clone)]
pub struct Equilibrator {
    pub rtn: Arc<RtnSpace>,
    cells: Vec<CellMatrices>,
    exponents: Vec<[usize; 2]>,
}

impl Equilibrator {
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("flux degree must be at least 1".into()));
        }
        let rtn = Arc::new(RtnSpace::new(mesh.clone(), degree)?);
        let exponents = monomials(mesh.dim, degree);
        let rule = QuadratureRule::simplex(mesh.dim, 2 * degree + 2);
        let ref_scale = if mesh.dim == 1 { 1.0 } else { 0.5 };
        let nl = rtn.n_local();
        let nq = exponents.len();
        let mut cells = Vec::with_capacity(mesh.n_cells());
        for k in 0..mesh.n_cells() {
            let frame = rtn.frame(k);
            let scale = mesh.geometry[k].volume / ref_scale;
            let mut cm = CellMatrices {
                mass: DMatrix::zeros(nl, nl),
                divergence: DMatrix::zeros(nq, nl),
                pressure_mass: DMatrix::zeros(nq, nq),
                pressure_mean: DVector::zeros(nq),
                points: Vec::with_capacity(rule.len()),
                flux_values: Vec::with_capacity(rule.len()),
                flux_divergence: Vec::with_capacity(rule.len()),
                pressure_values: Vec::with_capacity(rule.len()),
            };
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.map_to_physical(k, *p);
                let lam = crate::discretization::lagrange::bary_from_reference(mesh.dim, *p);
                let w = w * scale;
                let (v, d) = rtn.basis_at(k, x);
                let xi = frame.xi(x);
                let q: Vec<f64> = exponents.iter().map(|e| monomial_value(*e, xi)).collect();
                for i in 0..nl {
                    for j in 0..nl {
                        cm.mass[(i, j)] += w * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                    }
                }
                for l in 0..nq {
                    for j in 0..nl {
                        cm.divergence[(l, j)] += w * q[l] * d[j];
                    }
                    for m in 0..nq {
                        cm.pressure_mass[(l, m)] += w * q[l] * q[m];
                    }
                    cm.pressure_mean[l] += w * q[l];
                }
                cm.points.push((x, lam, w));
                cm.flux_values.push(v);
                cm.flux_divergence.push(d);
                cm.pressure_values.push(q);
            }
            cells.push(cm);
        }
        Ok(Equilibrator {
            rtn,
            cells,
            exponents,
        })
    }

    pub fn degree(&self) -> usize {
        self.rtn.degree
    }

    fn mesh(&self) -> &SimplicialMesh {
        &self.rtn.mesh
    }

    /// Unconstrained patch unknowns: faces opposite the vertex are fixed to zero,
    /// except those on the domain boundary when the vertex is a boundary vertex.
    fn build_system(&self, a: usize) -> Result<PatchSystem> {
        let mesh = self.mesh();
        let cells = mesh.vertex_cells[a].clone();
        let boundary_vertex = mesh.boundary_vertex[a];
        let mut constrained = std::collections::HashSet::new();
        for &k in &cells {
            for &f in &mesh.cell_faces[k] {
                let opposite = !mesh.faces[f].contains(&a);
                if opposite && !(boundary_vertex && mesh.boundary_face[f]) {
                    for d in self.rtn.face_dof_range(f) {
                        constrained.insert(d);
                    }
                }
            }
        }
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut dofs = Vec::new();
        let mut local_map = Vec::with_capacity(cells.len());
        for &k in &cells {
            let mut map = Vec::with_capacity(self.rtn.n_local());
            for &g in self.rtn.local_to_global(k) {
                if constrained.contains(&g) {
                    map.push(None);
                } else {
                    let id = *index.entry(g).or_insert_with(|| {
                        dofs.push(g);
                        dofs.len() - 1
                    });
                    map.push(Some(id));
                }
            }
            local_map.push(map);
        }
        let nf = dofs.len();
        let nq = self.exponents.len();
        let np = nq * cells.len();
        let mean_constraint = !boundary_vertex;
        let n = nf + np + usize::from(mean_constraint);
        let mut m = DMatrix::zeros(n, n);
        for (c, &k) in cells.iter().enumerate() {
            let cm = &self.cells[k];
            for (i, gi) in local_map[c].iter().enumerate() {
                let Some(gi) = *gi else { continue };
                for (j, gj) in local_map[c].iter().enumerate() {
                    if let Some(gj) = *gj {
                        m[(gi, gj)] += cm.mass[(i, j)];
                    }
                }
                for l in 0..nq {
                    let row = nf + c * nq + l;
                    m[(row, gi)] += cm.divergence[(l, i)];
                    m[(gi, row)] += cm.divergence[(l, i)];
                }
            }
            if mean_constraint {
                for l in 0..nq {
                    let row = nf + c * nq + l;
                    m[(row, n - 1)] = cm.pressure_mean[l];
                    m[(n - 1, row)] = cm.pressure_mean[l];
                }
            }
        }
        let lu = m.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Assembly(format!("singular patch system at vertex {a}")));
        }
        Ok(PatchSystem {
            cells,
            dofs,
            local_map,
            mean_constraint,
            matrix: m,
            lu,
        })
    }

    /// Source term `g` of patch `a` on interval `n`:
    /// `psi_a f_n - psi_a (u_n - u_{n-1}) / tau_n - grad psi_a . grad u_n`.
    pub fn patch_source(&self, sol: &TimeSlabSolution, a: usize, n: usize) -> Result<PatchSource> {
        let data = sol
            .data
            .as_ref()
            .ok_or_else(|| Error::UnsupportedData("solution carries no cellwise data".into()))?;
        let space = &sol.space;
        let tau = sol.partition.tau(n);
        let du = &sol.values[n + 1] - &sol.values[n];
        self.project_source(a, &|k, _, lam| {
            let psi = space.hat(a, k, lam);
            let gpsi = space.hat_gradient(a, k);
            let gu = space.gradient_in_cell(&sol.values[n + 1], k, lam);
            let f = data[n].eval_in_cell(k, lam);
            psi * f - psi * space.eval_in_cell(&du, k, lam) / tau - (gpsi[0] * gu[0] + gpsi[1] * gu[1])
        })
    }

    /// Cellwise projection of `g(k, x, lambda)` onto the pressure basis of patch `a`.
    pub fn project_source(&self, a: usize, g: &dyn Fn(usize, [f64; 2], &[f64]) -> f64) -> Result<PatchSource> {
        let cells = self.mesh().vertex_cells[a].clone();
        let mut coefficients = Vec::with_capacity(cells.len());
        let mut frames = Vec::with_capacity(cells.len());
        for &k in &cells {
            let cm = &self.cells[k];
            let mut rhs = DVector::zeros(self.exponents.len());
            for ((x, lam, w), q) in cm.points.iter().zip(&cm.pressure_values) {
                let gx = g(k, *x, lam);
                for l in 0..q.len() {
                    rhs[l] += w * gx * q[l];
                }
            }
            let c = cm
                .pressure_mass
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Assembly("pressure mass matrix not positive definite".into()))?
                .solve(&rhs);
            coefficients.push(c);
            frames.push(self.rtn.frame(k));
        }
        Ok(PatchSource {
            vertex: a,
            cells,
            coefficients,
            frames,
            exponents: self.exponents.clone(),
        })
    }

    /// Minimize `|v + target|_{omega_a}` subject to `div v = g`, for several
    /// right-hand sides sharing one factorization.
    ///
    /// `target(r, k, x, lambda)` evaluates the target field of right-hand side `r`.
    pub fn solve_patch(
        &self,
        a: usize,
        sources: &[PatchSource],
        target: &dyn Fn(usize, usize, [f64; 2], &[f64]) -> [f64; 2],
    ) -> Result<PatchSolution> {
        let sys = self.build_system(a)?;
        self.solve_with(&sys, a, sources, target)
    }

    fn solve_with(
        &self,
        sys: &PatchSystem,
        a: usize,
        sources: &[PatchSource],
        target: &dyn Fn(usize, usize, [f64; 2], &[f64]) -> [f64; 2],
    ) -> Result<PatchSolution> {
        let nf = sys.dofs.len();
        let nq = self.exponents.len();
        let n = sys.matrix.nrows();
        let nr = sources.len();
        let mut rhs = DMatrix::zeros(n, nr);
        let mut g_norms = vec![0.0; nr];
        for (r, src) in sources.iter().enumerate() {
            if src.vertex != a || src.cells != sys.cells {
                return Err(Error::InvalidArgument("source belongs to a different patch".into()));
            }
            let mut mean = 0.0;
            let mut l1 = 0.0;
            for (c, &k) in sys.cells.iter().enumerate() {
                let cm = &self.cells[k];
                let gq = &cm.pressure_mass * &src.coefficients[c];
                for l in 0..nq {
                    rhs[(nf + c * nq + l, r)] = gq[l];
                }
                for (qi, (x, lam, w)) in cm.points.iter().enumerate() {
                    let gx = src.eval(c, *x);
                    mean += w * gx;
                    l1 += w * gx.abs();
                    g_norms[r] += w * gx * gx;
                    let t = target(r, k, *x, lam);
                    for (i, gi) in sys.local_map[c].iter().enumerate() {
                        if let Some(gi) = gi {
                            let v = cm.flux_values[qi][i];
                            rhs[(*gi, r)] -= w * (t[0] * v[0] + t[1] * v[1]);
                        }
                    }
                }
            }
            if sys.mean_constraint && mean.abs() > 1e-11 * l1.max(f64::MIN_POSITIVE) {
                return Err(Error::Compatibility {
                    vertex: a,
                    interval: r,
                    mean,
                });
            }
        }
        let x = sys.lu.solve(&rhs).ok_or_else(|| Error::Assembly(format!("patch solve failed at vertex {a}")))?;
        let res = &sys.matrix * &x - &rhs;
        let mut kkt: f64 = 0.0;
        for r in 0..nr {
            let scale = rhs.column(r).amax().max(f64::MIN_POSITIVE);
            kkt = kkt.max(res.column(r).amax() / scale);
        }
        let mut coefficients = Vec::with_capacity(nr);
        let mut objective = Vec::with_capacity(nr);
        let mut constraint: f64 = 0.0;
        for r in 0..nr {
            let v = DVector::from_iterator(nf, x.column(r).iter().take(nf).copied());
            let mut obj = 0.0;
            let mut div_err = 0.0;
            for (c, &k) in sys.cells.iter().enumerate() {
                let cm = &self.cells[k];
                for (qi, (xq, lam, w)) in cm.points.iter().enumerate() {
                    let mut s = [0.0; 2];
                    let mut d = 0.0;
                    for (i, gi) in sys.local_map[c].iter().enumerate() {
                        if let Some(gi) = gi {
                            s[0] += v[*gi] * cm.flux_values[qi][i][0];
                            s[1] += v[*gi] * cm.flux_values[qi][i][1];
                            d += v[*gi] * cm.flux_divergence[qi][i];
                        }
                    }
                    let t = target(r, k, *xq, lam);
                    obj += w * ((s[0] + t[0]).powi(2) + (s[1] + t[1]).powi(2));
                    div_err += w * (d - sources[r].eval(c, *xq)).powi(2);
                }
            }
            constraint = constraint.max(div_err.sqrt() / (1.0 + g_norms[r].sqrt()));
            objective.push(obj);
            coefficients.push(v);
        }
        if constraint > 1e-10 {
            return Err(Error::Assembly(format!(
                "divergence constraint residual {constraint:e} at vertex {a}"
            )));
        }
        Ok(PatchSolution {
            vertex: a,
            dofs: sys.dofs.clone(),
            coefficients,
            objective,
            kkt_residual: kkt,
            constraint_residual: constraint,
        })
    }

    /// Patch fluxes of all intervals of `sol` for vertex `a`.
    pub fn solve_vertex(&self, sol: &TimeSlabSolution, a: usize) -> Result<PatchSolution> {
        let space: &ScalarSpace = &sol.space;
        if space.mesh.cells != self.mesh().cells {
            return Err(Error::InvalidArgument("solution and flux space use different meshes".into()));
        }
        let nsteps = sol.partition.n_intervals();
        let sources = (0..nsteps)
            .map(|n| self.patch_source(sol, a, n))
            .collect::<Result<Vec<_>>>()?;
        let sys = self.build_system(a)?;
        self.solve_with(&sys, a, &sources, &|r, k, _, lam| {
            let psi = space.hat(a, k, lam);
            let g = space.gradient_in_cell(&sol.values[r + 1], k, lam);
            [psi * g[0], psi * g[1]]
        })
    }
}
