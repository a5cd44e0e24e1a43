//! Raviart-Thomas-Nedelec elements `P_k(K)^d + x P_k(K)` built from dual bases.
//!
//! In one dimension the space is `P_{k+1}`, whose `H(div) = H^1` conforming
//! version is the continuous piecewise `P_{k+1}` space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::discretization::quadrature::{gauss_on_interval, legendre, QuadratureRule};
use crate::discretization::SimplicialMesh;
use crate::error::{Error, Result};

/// Scaled monomial exponents of total degree at most `k`.
pub fn monomials(dim: usize, k: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for total in 0..=k {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for b in 0..=total {
                out.push([total - b, b]);
            }
        }
    }
    out
}

fn powi(x: f64, e: usize) -> f64 {
    x.powi(e as i32)
}

/// Value of the scaled monomial `xi^e`.
pub fn monomial_value(e: [usize; 2], xi: [f64; 2]) -> f64 {
    powi(xi[0], e[0]) * powi(xi[1], e[1])
}

/// Gradient of `xi^e` with respect to `xi`.
fn monomial_gradient(e: [usize; 2], xi: [f64; 2]) -> [f64; 2] {
    let dx = if e[0] == 0 { 0.0 } else { e[0] as f64 * powi(xi[0], e[0] - 1) * powi(xi[1], e[1]) };
    let dy = if e[1] == 0 { 0.0 } else { e[1] as f64 * powi(xi[0], e[0]) * powi(xi[1], e[1] - 1) };
    [dx, dy]
}

#[derive(Debug, Clone, Copy)]
enum Span {
    /// `xi^e` times the unit vector of the given component.
    Component(usize, [usize; 2]),
    /// `xi * xi^e` for homogeneous `e` of the top degree.
    Radial([usize; 2]),
}

/// Local frame of a cell: scaled coordinates `xi = (x - center) / scale`.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub center: [f64; 2],
    pub scale: f64,
}

impl LocalFrame {
    pub fn of_cell(mesh: &SimplicialMesh, k: usize) -> Self {
        LocalFrame {
            center: crate::discretization::mesh::centroid(mesh, k),
            scale: mesh.geometry[k].diameter,
        }
    }

    pub fn xi(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale]
    }
}

/// Global RTN space of degree `k` on a mesh, with dofs given by normal moments on
/// faces (oriented by ascending vertex index) and interior moments.
#[derive(Debug, Clone)]
pub struct RtnSpace {
    pub mesh: Arc<SimplicialMesh>,
    pub degree: usize,
    pub face_dofs: usize,
    pub interior_dofs: usize,
    pub n_dofs: usize,
    pub face_normals: Vec<[f64; 2]>,
    spans: Vec<Span>,
    frames: Vec<LocalFrame>,
    /// Span coefficients of the local basis, one column per local dof.
    coefficients: Vec<DMatrix<f64>>,
    local_to_global: Vec<Vec<usize>>,
}

impl RtnSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Self> {
        if degree > 6 {
            return Err(Error::InvalidArgument(format!("flux degree {degree} too large")));
        }
        let dim = mesh.dim;
        let k = degree;
        let spans: Vec<Span> = if dim == 1 {
            (0..=k + 1).map(|j| Span::Component(0, [j, 0])).collect()
        } else {
            let mut s = Vec::new();
            for e in monomials(2, k) {
                s.push(Span::Component(0, e));
                s.push(Span::Component(1, e));
            }
            for b in 0..=k {
                s.push(Span::Radial([k - b, b]));
            }
            s
        };
        let face_dofs = if dim == 1 { 1 } else { k + 1 };
        let interior_moments = if k == 0 { Vec::new() } else { monomials(dim, k - 1) };
        let interior_dofs = dim * interior_moments.len();
        let n_local = (dim + 1) * face_dofs + interior_dofs;
        if n_local != spans.len() {
            return Err(Error::Assembly(format!(
                "RTN dimension mismatch: {n_local} dofs for {} spanning functions",
                spans.len()
            )));
        }
        let face_normals: Vec<[f64; 2]> = mesh
            .faces
            .iter()
            .map(|f| {
                if dim == 1 {
                    [1.0, 0.0]
                } else {
                    let a = mesh.vertices[f[0]];
                    let b = mesh.vertices[f[1]];
                    let t = [b[0] - a[0], b[1] - a[1]];
                    let l = (t[0] * t[0] + t[1] * t[1]).sqrt();
                    [t[1] / l, -t[0] / l]
                }
            })
            .collect();
        let n_faces = mesh.n_faces();
        let n_dofs = n_faces * face_dofs + mesh.n_cells() * interior_dofs;
        let cell_rule = QuadratureRule::simplex(dim, 2 * k + 2);
        let mut frames = Vec::with_capacity(mesh.n_cells());
        let mut coefficients = Vec::with_capacity(mesh.n_cells());
        let mut local_to_global = Vec::with_capacity(mesh.n_cells());
        let mut space = RtnSpace {
            mesh: mesh.clone(),
            degree,
            face_dofs,
            interior_dofs,
            n_dofs,
            face_normals,
            spans,
            frames: Vec::new(),
            coefficients: Vec::new(),
            local_to_global: Vec::new(),
        };
        for kc in 0..mesh.n_cells() {
            let frame = LocalFrame::of_cell(&mesh, kc);
            let mut d = DMatrix::zeros(n_local, n_local);
            let mut row = 0;
            let mut l2g = Vec::with_capacity(n_local);
            for &f in &mesh.cell_faces[kc] {
                let nf = space.face_normals[f];
                for j in 0..face_dofs {
                    for (c, sp) in space.spans.iter().enumerate() {
                        d[(row, c)] = space.face_moment(&frame, *sp, f, nf, j);
                    }
                    l2g.push(f * face_dofs + j);
                    row += 1;
                }
            }
            let g = &mesh.geometry[kc];
            let scale = g.volume / if dim == 1 { 1.0 } else { 0.5 };
            for comp in 0..dim {
                for (mi, m) in interior_moments.iter().enumerate() {
                    for (c, sp) in space.spans.iter().enumerate() {
                        let mut s = 0.0;
                        for (p, w) in cell_rule.points.iter().zip(&cell_rule.weights) {
                            let x = mesh.map_to_physical(kc, *p);
                            let xi = frame.xi(x);
                            s += w * scale * span_value(*sp, xi)[comp] * monomial_value(*m, xi);
                        }
                        d[(row, c)] = s / g.volume;
                    }
                    l2g.push(n_faces * face_dofs + kc * interior_dofs + comp * interior_moments.len() + mi);
                    row += 1;
                }
            }
            let inv = d
                .try_inverse()
                .ok_or_else(|| Error::Assembly(format!("RTN dof matrix singular on cell {kc}")))?;
            frames.push(frame);
            coefficients.push(inv);
            local_to_global.push(l2g);
        }
        space.frames = frames;
        space.coefficients = coefficients;
        space.local_to_global = local_to_global;
        Ok(space)
    }

    fn face_moment(&self, frame: &LocalFrame, sp: Span, f: usize, nf: [f64; 2], j: usize) -> f64 {
        let mesh = &self.mesh;
        let verts = &mesh.faces[f];
        if mesh.dim == 1 {
            let v = span_value(sp, frame.xi(mesh.vertices[verts[0]]));
            return v[0] * nf[0];
        }
        let a = mesh.vertices[verts[0]];
        let b = mesh.vertices[verts[1]];
        let mut s = 0.0;
        for (t, w) in gauss_on_interval(self.degree + 3, 0.0, 1.0) {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let v = span_value(sp, frame.xi(x));
            s += w * (v[0] * nf[0] + v[1] * nf[1]) * legendre(j, 2.0 * t - 1.0);
        }
        s
    }

    pub fn n_local(&self) -> usize {
        self.spans.len()
    }

    pub fn local_to_global(&self, k: usize) -> &[usize] {
        &self.local_to_global[k]
    }

    pub fn frame(&self, k: usize) -> LocalFrame {
        self.frames[k]
    }

    /// Global dofs on face `f`.
    pub fn face_dof_range(&self, f: usize) -> std::ops::Range<usize> {
        f * self.face_dofs..(f + 1) * self.face_dofs
    }

    /// Values and divergences of all local basis functions of cell `k` at `x`.
    pub fn basis_at(&self, k: usize, x: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let frame = &self.frames[k];
        let xi = frame.xi(x);
        let sv: Vec<[f64; 2]> = self.spans.iter().map(|s| span_value(*s, xi)).collect();
        let sd: Vec<f64> = self.spans.iter().map(|s| span_divergence(*s, xi) / frame.scale).collect();
        let c = &self.coefficients[k];
        let n = self.n_local();
        let mut vals = vec![[0.0; 2]; n];
        let mut divs = vec![0.0; n];
        for m in 0..n {
            for j in 0..n {
                let cj = c[(j, m)];
                if cj != 0.0 {
                    vals[m][0] += cj * sv[j][0];
                    vals[m][1] += cj * sv[j][1];
                    divs[m] += cj * sd[j];
                }
            }
        }
        (vals, divs)
    }

    /// Value and divergence of a global coefficient vector on cell `k` at `x`.
    pub fn eval(&self, coeffs: &DVector<f64>, k: usize, x: [f64; 2]) -> ([f64; 2], f64) {
        let (vals, divs) = self.basis_at(k, x);
        let mut v = [0.0; 2];
        let mut d = 0.0;
        for (m, &g) in self.local_to_global[k].iter().enumerate() {
            let c = coeffs[g];
            v[0] += c * vals[m][0];
            v[1] += c * vals[m][1];
            d += c * divs[m];
        }
        (v, d)
    }

    /// Largest jump of the normal component across interior faces, at face
    /// quadrature points.
    pub fn max_normal_jump(&self, coeffs: &DVector<f64>) -> f64 {
        let mesh = &self.mesh;
        let mut worst: f64 = 0.0;
        for (f, cells) in mesh.face_cells.iter().enumerate() {
            if cells.len() != 2 {
                continue;
            }
            let nf = self.face_normals[f];
            for x in self.face_points(f) {
                let (a, _) = self.eval(coeffs, cells[0], x);
                let (b, _) = self.eval(coeffs, cells[1], x);
                let jump = (a[0] - b[0]) * nf[0] + (a[1] - b[1]) * nf[1];
                worst = worst.max(jump.abs());
            }
        }
        worst
    }

    /// Quadrature points on face `f`.
    pub fn face_points(&self, f: usize) -> Vec<[f64; 2]> {
        let verts = &self.mesh.faces[f];
        if self.mesh.dim == 1 {
            return vec![self.mesh.vertices[verts[0]]];
        }
        let a = self.mesh.vertices[verts[0]];
        let b = self.mesh.vertices[verts[1]];
        gauss_on_interval(self.degree + 2, 0.0, 1.0)
            .into_iter()
            .map(|(t, _)| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
            .collect()
    }
}

fn span_value(sp: Span, xi: [f64; 2]) -> [f64; 2] {
    match sp {
        Span::Component(c, e) => {
            let mut v = [0.0; 2];
            v[c] = monomial_value(e, xi);
            v
        }
        Span::Radial(e) => {
            let m = monomial_value(e, xi);
            [xi[0] * m, xi[1] * m]
        }
    }
}

/// Divergence with respect to `xi`.
fn span_divergence(sp: Span, xi: [f64; 2]) -> f64 {
    match sp {
        Span::Component(c, e) => monomial_gradient(e, xi)[c],
        Span::Radial(e) => (2 + e[0] + e[1]) as f64 * monomial_value(e, xi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{interval_mesh, structured_triangle_mesh};

    #[test]
    fn dual_basis_is_unisolvent_and_conforming() {
        for k in 1..=3 {
            let mesh = Arc::new(structured_triangle_mesh(2, 2, [0.0, 1.0, 0.0, 1.0]).unwrap());
            let rtn = RtnSpace::new(mesh, k).unwrap();
            assert_eq!(rtn.n_local(), (k + 1) * (k + 3));
            let c = DVector::from_fn(rtn.n_dofs, |i, _| ((i * 37 % 11) as f64) - 5.0);
            assert!(rtn.max_normal_jump(&c) < 1e-10, "k={k}");
        }
        let mesh = Arc::new(interval_mesh(3, 0.0, 1.0).unwrap());
        let rtn = RtnSpace::new(mesh, 2).unwrap();
        assert_eq!(rtn.n_local(), 4);
        let c = DVector::from_fn(rtn.n_dofs, |i, _| i as f64);
        assert!(rtn.max_normal_jump(&c) < 1e-12);
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let mesh = Arc::new(structured_triangle_mesh(1, 1, [0.0, 1.0, 0.0, 1.0]).unwrap());
        let rtn = RtnSpace::new(mesh, 2).unwrap();
        let x = [0.6, 0.2];
        let h = 1e-6;
        let (_, d) = rtn.basis_at(0, x);
        let (px, _) = rtn.basis_at(0, [x[0] + h, x[1]]);
        let (mx, _) = rtn.basis_at(0, [x[0] - h, x[1]]);
        let (py, _) = rtn.basis_at(0, [x[0], x[1] + h]);
        let (my, _) = rtn.basis_at(0, [x[0], x[1] - h]);
        for m in 0..rtn.n_local() {
            let fd = (px[m][0] - mx[m][0] + py[m][1] - my[m][1]) / (2.0 * h);
            assert!((fd - d[m]).abs() < 1e-5 * (1.0 + d[m].abs()));
        }
    }
}
