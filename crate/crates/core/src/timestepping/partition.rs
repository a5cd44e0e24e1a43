//! Partitions of the time interval `[0, T]`.

use crate::error::{Error, Result};

/// Strictly increasing time nodes `0 = t_0 < t_1 < ... < t_N = T`.
///
/// Interval `n` (zero based) is `(t_n, t_{n+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

impl TimePartition {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("time partition needs at least one interval".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidArgument("time partition must start at 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time nodes must be strictly increasing".into()));
        }
        Ok(TimePartition { nodes })
    }

    pub fn uniform(final_time: f64, steps: usize) -> Result<Self> {
        Self::graded(final_time, steps, 1.0)
    }

    /// Nodes `t_n = T (n / N)^grading`.
    pub fn graded(final_time: f64, steps: usize, grading: f64) -> Result<Self> {
        if steps == 0 || !(final_time > 0.0) || !(grading >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "time partition with T={final_time}, N={steps}, grading={grading}"
            )));
        }
        let nodes = (0..=steps)
            .map(|n| {
                if n == steps {
                    final_time
                } else {
                    final_time * (n as f64 / steps as f64).powf(grading)
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn tau_max(&self) -> f64 {
        (0..self.n_intervals()).map(|n| self.tau(n)).fold(0.0, f64::max)
    }

    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.nodes[n], self.nodes[n + 1])
    }

    /// Index of the interval `(t_n, t_{n+1}]` containing `t`; `t = 0` maps to interval 0.
    pub fn find_interval(&self, t: f64) -> usize {
        let n = self.n_intervals();
        match self.nodes[1..].binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(n - 1),
        }
    }

    /// Split every interval into `factor` equal pieces.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be positive".into()));
        }
        let mut nodes = Vec::with_capacity(self.n_intervals() * factor + 1);
        for w in self.nodes.windows(2) {
            for s in 0..factor {
                nodes.push(w[0] + (w[1] - w[0]) * s as f64 / factor as f64);
            }
        }
        nodes.push(self.final_time());
        Self::from_nodes(nodes)
    }

    /// Whether every node of `self` is a node of `fine`.
    pub fn is_refined_by(&self, fine: &TimePartition) -> bool {
        let tol = 1e-12 * self.final_time();
        (fine.final_time() - self.final_time()).abs() <= tol
            && self
                .nodes
                .iter()
                .all(|t| fine.nodes.iter().any(|s| (s - t).abs() <= tol))
    }

    /// For each fine interval, the coarse interval containing it.
    pub fn parents_of(&self, fine: &TimePartition) -> Result<Vec<usize>> {
        if !self.is_refined_by(fine) {
            return Err(Error::InvalidArgument("time partitions are not nested".into()));
        }
        Ok((0..fine.n_intervals())
            .map(|m| {
                let (a, b) = fine.interval(m);
                self.find_interval(0.5 * (a + b))
            })
            .collect())
    }

    /// Partition of `[0, T]` under `t -> T - t`.
    pub fn reversed(&self) -> Self {
        let t = self.final_time();
        let mut nodes: Vec<f64> = self.nodes.iter().rev().map(|s| t - s).collect();
        nodes[0] = 0.0;
        *nodes.last_mut().unwrap() = t;
        TimePartition { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_interval_is_left_continuous() {
        let p = TimePartition::uniform(1.0, 4).unwrap();
        assert_eq!(p.find_interval(0.0), 0);
        assert_eq!(p.find_interval(0.25), 0);
        assert_eq!(p.find_interval(0.2500001), 1);
        assert_eq!(p.find_interval(1.0), 3);
    }

    #[test]
    fn refine_and_reverse() {
        let p = TimePartition::graded(2.0, 3, 2.0).unwrap();
        let f = p.refine(3).unwrap();
        assert_eq!(f.n_intervals(), 9);
        assert!(p.is_refined_by(&f));
        assert!(!f.is_refined_by(&p));
        let r = p.reversed();
        assert!((r.tau(0) - p.tau(2)).abs() < 1e-15);
        assert_eq!(p.parents_of(&f).unwrap(), vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimePartition::uniform(1.0, 0).is_err());
        assert!(TimePartition::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
    }
}
