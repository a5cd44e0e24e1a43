//! Gauss rules on the unit interval and on the reference triangle.

/// Quadrature rule on a reference simplex.
///
/// Points are reference coordinates; for the interval only the first entry is
/// used. Weights sum to the reference volume (1 for `[0,1]`, 1/2 for the triangle).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Legendre polynomial `P_n(z)` and its derivative.
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_n(z)`.
pub fn legendre(n: usize, z: f64) -> f64 {
    legendre_with_derivative(n, z).0
}

/// `n`-point Gauss rule on `[a, b]`.
pub fn gauss_on_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
        .collect()
}

/// Composite Gauss rule on `[a, b]` with pieces shrinking geometrically towards `a`.
///
/// Resolves integrands with a boundary layer at `a` of any width down to
/// `(b - a) 2^{-levels}`.
pub fn graded_gauss_on_interval(a: f64, b: f64, levels: usize, points: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((levels + 1) * points);
    let len = b - a;
    let mut hi = 1.0;
    for _ in 0..levels {
        let lo = hi * 0.5;
        out.extend(gauss_on_interval(points, a + lo * len, a + hi * len));
        hi = lo;
    }
    out.extend(gauss_on_interval(points, a, a + hi * len));
    out
}

impl QuadratureRule {
    /// Rule on the reference simplex of dimension `dim` exact for polynomials of
    /// total degree `degree`.
    pub fn simplex(dim: usize, degree: usize) -> Self {
        match dim {
            1 => {
                let n = degree / 2 + 1;
                let pts = gauss_on_interval(n, 0.0, 1.0);
                QuadratureRule {
                    dim,
                    degree,
                    points: pts.iter().map(|(x, _)| [*x, 0.0]).collect(),
                    weights: pts.iter().map(|(_, w)| *w).collect(),
                }
            }
            2 => {
                // Collapsed product rule: x = s(1 - r), y = r, Jacobian (1 - r).
                let ns = degree / 2 + 1;
                let nr = (degree + 1) / 2 + 1;
                let gs = gauss_on_interval(ns, 0.0, 1.0);
                let gr = gauss_on_interval(nr, 0.0, 1.0);
                let mut points = Vec::with_capacity(ns * nr);
                let mut weights = Vec::with_capacity(ns * nr);
                for (r, wr) in &gr {
                    for (s, ws) in &gs {
                        points.push([s * (1.0 - r), *r]);
                        weights.push(ws * wr * (1.0 - r));
                    }
                }
                QuadratureRule {
                    dim,
                    degree,
                    points,
                    weights,
                }
            }
            _ => panic!("unsupported dimension {dim}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rule_is_exact() {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for deg in 0..12 {
            let rule = QuadratureRule::simplex(2, deg);
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((q - exact).abs() < 1e-14, "deg={deg} a={a} b={b}");
                }
            }
        }
    }
}
