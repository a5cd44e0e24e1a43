//! Lagrange shape functions of arbitrary degree written in barycentric coordinates.

/// Lagrange basis of degree `degree` on a simplex of dimension `dim`.
///
/// Node `alpha` sits at barycentric position `alpha / degree`; the shape function is
/// `prod_i prod_{j < alpha_i} (p lambda_i - j) / (j + 1)`.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub dim: usize,
    pub degree: usize,
    pub nodes: Vec<Vec<usize>>,
}

impl LagrangeBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut nodes = Vec::new();
        if dim == 1 {
            for a in (0..=degree).rev() {
                nodes.push(vec![a, degree - a]);
            }
        } else {
            for a in (0..=degree).rev() {
                for b in (0..=(degree - a)).rev() {
                    nodes.push(vec![a, b, degree - a - b]);
                }
            }
        }
        LagrangeBasis { dim, degree, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric position of node `i`.
    pub fn node_bary(&self, i: usize) -> Vec<f64> {
        if self.degree == 0 {
            return vec![1.0 / (self.dim + 1) as f64; self.dim + 1];
        }
        self.nodes[i]
            .iter()
            .map(|&a| a as f64 / self.degree as f64)
            .collect()
    }

    fn factor(&self, a: usize, l: f64) -> f64 {
        let p = self.degree as f64;
        (0..a).map(|j| (p * l - j as f64) / (j as f64 + 1.0)).product()
    }

    fn factor_derivative(&self, a: usize, l: f64) -> f64 {
        let p = self.degree as f64;
        let mut d = 0.0;
        for skip in 0..a {
            let mut term = p / (skip as f64 + 1.0);
            for j in 0..a {
                if j != skip {
                    term *= (p * l - j as f64) / (j as f64 + 1.0);
                }
            }
            d += term;
        }
        d
    }

    /// Shape function values at barycentric point `lam`.
    pub fn values(&self, lam: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .zip(lam)
                    .map(|(&a, &l)| self.factor(a, l))
                    .product()
            })
            .collect()
    }

    /// Physical gradients given the barycentric gradients of the cell.
    pub fn gradients(&self, lam: &[f64], grad_bary: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.nodes
            .iter()
            .map(|alpha| {
                let f: Vec<f64> = alpha.iter().zip(lam).map(|(&a, &l)| self.factor(a, l)).collect();
                let mut g = [0.0; 2];
                for i in 0..alpha.len() {
                    let mut d = self.factor_derivative(alpha[i], lam[i]);
                    if d == 0.0 {
                        continue;
                    }
                    for (j, fj) in f.iter().enumerate() {
                        if j != i {
                            d *= fj;
                        }
                    }
                    g[0] += d * grad_bary[i][0];
                    g[1] += d * grad_bary[i][1];
                }
                g
            })
            .collect()
    }
}

/// Barycentric coordinates for reference coordinates `xi`.
pub fn bary_from_reference(dim: usize, xi: [f64; 2]) -> Vec<f64> {
    if dim == 1 {
        vec![1.0 - xi[0], xi[0]]
    } else {
        vec![1.0 - xi[0] - xi[1], xi[0], xi[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_property_and_partition_of_unity() {
        for dim in 1..=2 {
            for p in 1..=4 {
                let b = LagrangeBasis::new(dim, p);
                let expected = if dim == 1 { p + 1 } else { (p + 1) * (p + 2) / 2 };
                assert_eq!(b.len(), expected);
                for i in 0..b.len() {
                    let v = b.values(&b.node_bary(i));
                    for (j, vj) in v.iter().enumerate() {
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((vj - e).abs() < 1e-12);
                    }
                }
                let lam = bary_from_reference(dim, [0.21, if dim == 2 { 0.37 } else { 0.0 }]);
                let s: f64 = b.values(&lam).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let gb = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let b = LagrangeBasis::new(2, 3);
        let x = [0.2, 0.3];
        let g = b.gradients(&bary_from_reference(2, x), &gb);
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let vp = b.values(&bary_from_reference(2, xp));
            let vm = b.values(&bary_from_reference(2, xm));
            for i in 0..b.len() {
                assert!(((vp[i] - vm[i]) / (2.0 * h) - g[i][c]).abs() < 1e-7);
            }
        }
    }
}
