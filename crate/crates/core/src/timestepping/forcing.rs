//! Source terms and their space-time discretization.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::partition::TimePartition;
use crate::discretization::quadrature::{gauss_on_interval, QuadratureRule};
use crate::discretization::{CellField, ScalarSpace, SimplicialMesh};
use crate::error::{Error, Result};

/// Points per interval used for temporal means of general data.
pub const TIME_MEAN_POINTS: usize = 16;

pub type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// A source term `f(x, t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Analytic(ScalarFn),
    /// Piecewise constant in time with discontinuous piecewise polynomial values.
    PiecewiseConstant {
        partition: TimePartition,
        fields: Arc<Vec<CellField>>,
    },
    /// `amplitude(t)` times a Dirac mass; an `H^{-1}` functional in one dimension.
    PointSource {
        point: [f64; 2],
        amplitude: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Linear combination of sources.
    Sum(Vec<(f64, Forcing)>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Analytic(_) => write!(f, "Analytic"),
            Forcing::PiecewiseConstant { partition, .. } => {
                write!(f, "PiecewiseConstant({} intervals)", partition.n_intervals())
            }
            Forcing::PointSource { point, .. } => write!(f, "PointSource({point:?})"),
            Forcing::Sum(terms) => f.debug_list().entries(terms.iter().map(|(c, t)| (c, t))).finish(),
        }
    }
}

impl Forcing {
    pub fn analytic(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Analytic(Arc::new(f))
    }

    /// `self - other`; exactly zero when both hold the same piecewise data.
    pub fn minus(&self, other: &Forcing) -> Forcing {
        if self.same_piecewise_data(other) {
            return Forcing::Zero;
        }
        Forcing::Sum(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    fn same_piecewise_data(&self, other: &Forcing) -> bool {
        match (self, other) {
            (
                Forcing::PiecewiseConstant { partition: p, fields: f },
                Forcing::PiecewiseConstant { partition: q, fields: g },
            ) => {
                p.nodes() == q.nodes()
                    && f.len() == g.len()
                    && f.iter().zip(g.iter()).all(|(a, b)| {
                        (Arc::ptr_eq(&a.mesh, &b.mesh) || a.mesh.vertices == b.mesh.vertices && a.mesh.cells == b.mesh.cells)
                            && a.basis.degree == b.basis.degree
                            && a.coefficients == b.coefficients
                    })
            }
            (Forcing::Zero, Forcing::Zero) => true,
            _ => false,
        }
    }

    /// Whether the source is a square-integrable function.
    pub fn is_l2(&self) -> bool {
        match self {
            Forcing::PointSource { .. } => false,
            Forcing::Sum(terms) => terms.iter().all(|(_, t)| t.is_l2()),
            _ => true,
        }
    }

    /// Whether the source is constant in time on `(a, b)`.
    pub fn constant_on(&self, a: f64, b: f64) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::PiecewiseConstant { partition, .. } => {
                partition.find_interval(0.5 * (a + b)) == partition.find_interval(b)
                    && partition.nodes()[partition.find_interval(b)] <= a + 1e-14 * b.abs().max(1.0)
            }
            Forcing::Sum(terms) => terms.iter().all(|(_, t)| t.constant_on(a, b)),
            _ => false,
        }
    }

    /// Point value; fails for sources that are not functions.
    pub fn eval(&self, x: [f64; 2], t: f64) -> Result<f64> {
        match self {
            Forcing::Zero => Ok(0.0),
            Forcing::Analytic(f) => Ok(f(x, t)),
            Forcing::PiecewiseConstant { partition, fields } => {
                Ok(fields[partition.find_interval(t)].eval(x))
            }
            Forcing::PointSource { .. } => Err(Error::UnsupportedData(
                "point source has no point values".into(),
            )),
            Forcing::Sum(terms) => {
                let mut s = 0.0;
                for (c, f) in terms {
                    s += c * f.eval(x, t)?;
                }
                Ok(s)
            }
        }
    }

    /// Load vector `<f(t), phi_i>` over the unconstrained dofs of `space`.
    pub fn load(&self, space: &ScalarSpace, t: f64, quad_degree: usize) -> DVector<f64> {
        match self {
            Forcing::Zero => DVector::zeros(space.dim()),
            Forcing::PointSource { point, amplitude } => {
                let mut b = DVector::zeros(space.dim());
                if let Some((k, lam)) = space.mesh.locate(*point) {
                    let v = space.basis.values(&lam);
                    for (i, &d) in space.cell_dofs[k].iter().enumerate() {
                        if let Some(fi) = space.free_index[d] {
                            b[fi] += amplitude(t) * v[i];
                        }
                    }
                }
                b
            }
            Forcing::Sum(terms) if !self.is_l2() => {
                let mut b = DVector::zeros(space.dim());
                for (c, f) in terms {
                    b += *c * f.load(space, t, quad_degree);
                }
                b
            }
            _ => {
                let ev = CellEval::new(self, &space.mesh);
                space.load_vector_cellwise(&|k, x| ev.value(k, x, t), quad_degree)
            }
        }
    }

    /// Load vector of the temporal mean over `(a, b)`.
    pub fn mean_load(&self, space: &ScalarSpace, a: f64, b: f64, quad_degree: usize) -> DVector<f64> {
        if self.constant_on(a, b) {
            return self.load(space, 0.5 * (a + b), quad_degree);
        }
        if self.is_l2() {
            let ev = CellEval::new(self, &space.mesh);
            return space.load_vector_cellwise(&|k, x| ev.mean(k, x, a, b), quad_degree);
        }
        let mut acc = DVector::zeros(space.dim());
        for (t, w) in gauss_on_interval(TIME_MEAN_POINTS, a, b) {
            acc += (w / (b - a)) * self.load(space, t, quad_degree);
        }
        acc
    }

    /// Temporal mean of the point value over `(a, b)`.
    pub fn mean_value(&self, x: [f64; 2], a: f64, b: f64) -> Result<f64> {
        if self.constant_on(a, b) {
            return self.eval(x, 0.5 * (a + b));
        }
        if let Forcing::Sum(terms) = self {
            let mut s = 0.0;
            for (c, f) in terms {
                s += c * f.mean_value(x, a, b)?;
            }
            return Ok(s);
        }
        let mut s = 0.0;
        for (t, w) in gauss_on_interval(TIME_MEAN_POINTS, a, b) {
            s += w * self.eval(x, t)?;
        }
        Ok(s / (b - a))
    }
}

/// Square-integrable source with piecewise data located once per cell of a target mesh.
enum CellEval<'a> {
    Zero,
    Analytic(&'a ScalarFn),
    Piecewise {
        partition: &'a TimePartition,
        fields: &'a [CellField],
        /// Cell of the data mesh containing each target cell, if nested.
        parents: Vec<Option<usize>>,
    },
    Sum(Vec<(f64, CellEval<'a>)>),
}

impl<'a> CellEval<'a> {
    fn new(forcing: &'a Forcing, mesh: &SimplicialMesh) -> Self {
        match forcing {
            Forcing::Zero | Forcing::PointSource { .. } => CellEval::Zero,
            Forcing::Analytic(f) => CellEval::Analytic(f),
            Forcing::PiecewiseConstant { partition, fields } => {
                let shared = fields.iter().all(|f| Arc::ptr_eq(&f.mesh, &fields[0].mesh));
                let parents = if shared && !fields.is_empty() {
                    (0..mesh.n_cells()).map(|k| fields[0].mesh.parent_of(mesh, k)).collect()
                } else {
                    vec![None; mesh.n_cells()]
                };
                CellEval::Piecewise {
                    partition,
                    fields,
                    parents,
                }
            }
            Forcing::Sum(terms) => CellEval::Sum(terms.iter().map(|(c, f)| (*c, CellEval::new(f, mesh))).collect()),
        }
    }

    fn value(&self, k: usize, x: [f64; 2], t: f64) -> f64 {
        match self {
            CellEval::Zero => 0.0,
            CellEval::Analytic(f) => f(x, t),
            CellEval::Piecewise {
                partition,
                fields,
                parents,
            } => {
                let field = &fields[partition.find_interval(t)];
                match parents[k] {
                    Some(p) => field.eval_in_cell(p, &field.mesh.barycentric(p, x)),
                    None => field.eval(x),
                }
            }
            CellEval::Sum(terms) => terms.iter().map(|(c, e)| c * e.value(k, x, t)).sum(),
        }
    }

    fn mean(&self, k: usize, x: [f64; 2], a: f64, b: f64) -> f64 {
        match self {
            CellEval::Zero => 0.0,
            CellEval::Piecewise { partition, .. }
                if partition.find_interval(0.5 * (a + b)) == partition.find_interval(b)
                    && partition.nodes()[partition.find_interval(b)] <= a + 1e-14 * b.abs().max(1.0) =>
            {
                self.value(k, x, 0.5 * (a + b))
            }
            CellEval::Sum(terms) => terms.iter().map(|(c, e)| c * e.mean(k, x, a, b)).sum(),
            _ => {
                let s: f64 = gauss_on_interval(TIME_MEAN_POINTS, a, b)
                    .into_iter()
                    .map(|(t, w)| w * self.value(k, x, t))
                    .sum();
                s / (b - a)
            }
        }
    }
}

/// Quadrature degree used for loads of general data on a space of degree `p`.
pub fn data_quadrature_degree(p: usize) -> usize {
    2 * p + 6
}

/// Temporal means of `f`, projected cellwise onto polynomials of degree `degree`.
pub fn time_mean_data(
    space: &ScalarSpace,
    partition: &TimePartition,
    forcing: &Forcing,
    degree: usize,
) -> Result<Vec<CellField>> {
    if !forcing.is_l2() {
        return Err(Error::UnsupportedData(
            "cellwise projection needs square-integrable data".into(),
        ));
    }
    let qd = data_quadrature_degree(degree);
    let ev = CellEval::new(forcing, &space.mesh);
    (0..partition.n_intervals())
        .map(|n| {
            let (a, b) = partition.interval(n);
            if matches!(forcing, Forcing::Zero) {
                return Ok(CellField::zeros(space.mesh.clone(), degree));
            }
            Ok(CellField::project(space.mesh.clone(), degree, qd, &|k, x| ev.mean(k, x, a, b)))
        })
        .collect()
}

/// Load vectors `(f_n, phi_i)` of cellwise fields.
pub fn loads_from_fields(space: &ScalarSpace, fields: &[CellField]) -> Vec<DVector<f64>> {
    fields
        .iter()
        .map(|field| {
            let rule = QuadratureRule::simplex(space.mesh.dim, space.degree + field.degree());
            let mut b = DVector::zeros(space.dim());
            let same_mesh = Arc::ptr_eq(&field.mesh, &space.mesh) || field.mesh.cells == space.mesh.cells;
            for k in 0..space.mesh.n_cells() {
                for (x, lam, w) in space.cell_quadrature(k, &rule) {
                    let fx = if same_mesh {
                        field.eval_in_cell(k, &lam)
                    } else {
                        field.eval(x)
                    };
                    let v = space.basis.values(&lam);
                    for (i, &d) in space.cell_dofs[k].iter().enumerate() {
                        if let Some(fi) = space.free_index[d] {
                            b[fi] += w * fx * v[i];
                        }
                    }
                }
            }
            b
        })
        .collect()
}

/// Right-hand sides `b_n = (f_{h,tau,n}, phi_i)` of the implicit Euler scheme, with
/// `f_{h,tau,n}` the temporal mean of `f` projected cellwise onto degree `space.degree`.
pub fn time_mean_rhs(
    space: &ScalarSpace,
    partition: &TimePartition,
    forcing: &Forcing,
) -> Result<(Vec<DVector<f64>>, Vec<CellField>)> {
    let fields = time_mean_data(space, partition, forcing, space.degree)?;
    Ok((loads_from_fields(space, &fields), fields))
}

/// Unprojected temporal-mean loads; valid for any `H^{-1}` source.
pub fn time_mean_loads(space: &ScalarSpace, partition: &TimePartition, forcing: &Forcing) -> Vec<DVector<f64>> {
    let qd = data_quadrature_degree(space.degree);
    (0..partition.n_intervals())
        .map(|n| {
            let (a, b) = partition.interval(n);
            forcing.mean_load(space, a, b, qd)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::interval_mesh;

    #[test]
    fn temporal_means() {
        let f = Forcing::analytic(|_, t| t);
        assert!((f.mean_value([0.5, 0.0], 0.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        let g = Forcing::analytic(|_, t| t.sin());
        let m = g.mean_value([0.0, 0.0], 0.0, std::f64::consts::PI).unwrap();
        assert!((m - 2.0 / std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn projected_data_is_exact_for_polynomials() {
        let space = ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 2).unwrap();
        let p = TimePartition::uniform(1.0, 2).unwrap();
        let f = Forcing::analytic(|x, t| x[0] * x[0] + 2.0 * t);
        let fields = time_mean_data(&space, &p, &f, 2).unwrap();
        let x = [0.3, 0.0];
        assert!((fields[1].eval(x) - (0.09 + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn point_source_is_not_l2() {
        let f = Forcing::PointSource {
            point: [0.5, 0.0],
            amplitude: Arc::new(|_| 1.0),
        };
        let space = ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap();
        let p = TimePartition::uniform(1.0, 2).unwrap();
        assert!(time_mean_data(&space, &p, &f, 1).is_err());
        let loads = time_mean_loads(&space, &p, &f);
        assert!((loads[0].sum() - 1.0).abs() < 1e-14);
    }
}
