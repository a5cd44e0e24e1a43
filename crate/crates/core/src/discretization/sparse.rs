//! Sparse symmetric matrices and a profile Cholesky factorization.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Symmetric matrix stored in compressed rows, both triangles present.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymmetricOperator {
    /// Assemble from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricOperator {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    /// `x^T A y`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(y))
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &SymmetricOperator, beta: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Self::from_triplets(self.n, t)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d = d.max((v - self.get(j, i)).abs());
            }
        }
        d
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Profile Cholesky factorization after reverse Cuthill-McKee reordering.
    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph.
pub fn reverse_cuthill_mckee(a: &SymmetricOperator) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |start: usize, visited: &[bool]| -> usize {
        let mut seen = visited.to_vec();
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for (w, _) in a.row(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        last
    };
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = bfs_last(bfs_last(seed, &visited), &visited);
        let mut queue = std::collections::VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(w, _)| w).filter(|&w| !visited[w]).collect();
            nbrs.sort_unstable_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `P A P^T = L L^T` stored row-wise over the envelope.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymmetricOperator) -> Result<Self> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                first[new] = first[new].min(inv[j]);
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + jn - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                let ri = &data[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &data[start[j] + k0 - fj..start[j] + j - fj];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                data[start[i] + j - fi] = s / data[start[j] + j - fj];
            }
            let row = &data[start[i]..start[i] + i - fi];
            let d = data[start[i] + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularOperator(format!(
                    "non-positive pivot {d:e} at row {i} of {n}"
                )));
            }
            data[start[i] + i - fi] = d.sqrt();
        }
        Ok(Cholesky {
            n,
            perm,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Envelope size, the number of stored factor entries.
    pub fn envelope(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / self.data[self.start[i] + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            y[i] /= self.data[self.start[i] + i - fi];
            let yi = y[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = DVector::zeros(n);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Normwise backward error `|b - A x|_inf / (|A|_inf |x|_inf + |b|_inf)`.
pub fn relative_residual(a: &SymmetricOperator, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ax = a.mul_vec(x);
    let norm_a = (0..a.n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let scale = norm_a * x.amax() + b.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (b - ax).amax() / scale
}

/// Solve `A x = b` for symmetric positive definite `A` with one step of iterative
/// refinement; fails if the backward error exceeds `1e-12`.
pub fn solve_spd(a: &SymmetricOperator, b: &DVector<f64>) -> Result<DVector<f64>> {
    let f = a.cholesky()?;
    solve_with(a, &f, b)
}

/// Like [`solve_spd`] with a precomputed factorization.
pub fn solve_with(a: &SymmetricOperator, f: &Cholesky, b: &DVector<f64>) -> Result<DVector<f64>> {
    let mut x = f.solve(b);
    let mut res = relative_residual(a, &x, b);
    let mut steps = 0;
    while res > 1e-13 && steps < 3 {
        let r = b - a.mul_vec(&x);
        x += f.solve(&r);
        res = relative_residual(a, &x, b);
        steps += 1;
    }
    if res > 1e-12 {
        return Err(Error::SingularOperator(format!("relative residual {res:e} after solve")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymmetricOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymmetricOperator::from_triplets(n, t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50);
        let b = DVector::from_fn(50, |i, _| (i as f64).sin());
        let x = solve_spd(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-13);
        assert!(a.cholesky().unwrap().envelope() <= 2 * 50);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymmetricOperator::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(a.cholesky(), Err(Error::SingularOperator(_))));
    }

    #[test]
    fn matches_dense_factorization() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 10.0 + i as f64));
            let j = (i * 7 + 3) % n;
            if j != i {
                t.push((i, j, 1.0));
                t.push((j, i, 1.0));
            }
        }
        let a = SymmetricOperator::from_triplets(n, t);
        let b = DVector::from_fn(n, |i, _| 1.0 + i as f64);
        let x = solve_spd(&a, &b).unwrap();
        let xd = a.to_dense().cholesky().unwrap().solve(&b);
        assert!((x - xd).amax() < 1e-12);
    }
}
