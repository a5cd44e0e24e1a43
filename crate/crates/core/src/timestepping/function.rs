//! Time reconstructions of the discrete solution.

use nalgebra::DVector;

use super::partition::TimePartition;
use super::solver::TimeSlabSolution;
use crate::discretization::Prolongation;
use crate::error::{Error, Result};

/// Time behaviour of a [`SpaceTimeFunction`] between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    /// `v(t) = v_n` on `(t_{n-1}, t_n]`, `v(0) = v_0`.
    ConstantLeftContinuous,
    /// Continuous and affine on each interval with `v(t_n) = v_n`.
    ContinuousAffine,
    /// Mean of the two profiles above.
    Average,
}

/// Function of time with values in a finite element space, given by node vectors.
#[derive(Debug, Clone)]
pub struct SpaceTimeFunction {
    pub profile: TimeProfile,
    pub partition: TimePartition,
    pub nodes: Vec<DVector<f64>>,
}

impl SpaceTimeFunction {
    pub fn new(profile: TimeProfile, partition: TimePartition, nodes: Vec<DVector<f64>>) -> Result<Self> {
        if nodes.len() != partition.n_intervals() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} node vectors for {} intervals",
                nodes.len(),
                partition.n_intervals()
            )));
        }
        Ok(SpaceTimeFunction {
            profile,
            partition,
            nodes,
        })
    }

    /// Value at `t`, taking the left limit at interior nodes.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let n = self.partition.find_interval(t);
        if t <= 0.0 {
            return self.nodes[0].clone();
        }
        let (a, b) = self.partition.interval(n);
        let affine = || {
            let th = (t - a) / (b - a);
            &self.nodes[n] * (1.0 - th) + &self.nodes[n + 1] * th
        };
        match self.profile {
            TimeProfile::ConstantLeftContinuous => self.nodes[n + 1].clone(),
            TimeProfile::ContinuousAffine => affine(),
            TimeProfile::Average => (affine() + &self.nodes[n + 1]) * 0.5,
        }
    }

    /// Time derivative on the interior of interval `n`.
    pub fn time_derivative(&self, n: usize) -> DVector<f64> {
        let d = (&self.nodes[n + 1] - &self.nodes[n]) / self.partition.tau(n);
        match self.profile {
            TimeProfile::ConstantLeftContinuous => d * 0.0,
            TimeProfile::ContinuousAffine => d,
            TimeProfile::Average => d * 0.5,
        }
    }

    /// Representation by start and end values on every interval.
    pub fn to_slab(&self) -> SlabFunction {
        let n = self.partition.n_intervals();
        let mut start = Vec::with_capacity(n);
        let mut end = Vec::with_capacity(n);
        for i in 0..n {
            let (s, e) = match self.profile {
                TimeProfile::ConstantLeftContinuous => (self.nodes[i + 1].clone(), self.nodes[i + 1].clone()),
                TimeProfile::ContinuousAffine => (self.nodes[i].clone(), self.nodes[i + 1].clone()),
                TimeProfile::Average => ((&self.nodes[i] + &self.nodes[i + 1]) * 0.5, self.nodes[i + 1].clone()),
            };
            start.push(s);
            end.push(e);
        }
        SlabFunction {
            partition: self.partition.clone(),
            initial: self.nodes[0].clone(),
            start,
            end,
        }
    }
}

/// Build `u_tau`, `U_tau` or their mean from the implicit Euler node values.
pub fn reconstruct(solution: &TimeSlabSolution, profile: TimeProfile) -> SpaceTimeFunction {
    SpaceTimeFunction {
        profile,
        partition: solution.partition.clone(),
        nodes: solution.values.clone(),
    }
}

/// Temporal interpolant `I v`.
///
/// For the supported profiles `v` is affine on every interval, so `I v` is the
/// continuous affine function through the left limits `v(t_n)`.
pub fn temporal_interpolant(v: &SpaceTimeFunction) -> Result<SpaceTimeFunction> {
    SpaceTimeFunction::new(TimeProfile::ContinuousAffine, v.partition.clone(), v.nodes.clone())
}

/// Function that is affine in time on each interval, possibly discontinuous at nodes.
///
/// On interval `n` it runs from `start[n]` (right limit at `t_n`) to `end[n]`
/// (value at `t_{n+1}`); `initial` is the value at `t = 0`.
#[derive(Debug, Clone)]
pub struct SlabFunction {
    pub partition: TimePartition,
    pub initial: DVector<f64>,
    pub start: Vec<DVector<f64>>,
    pub end: Vec<DVector<f64>>,
}

impl SlabFunction {
    pub fn value(&self, n: usize, theta: f64) -> DVector<f64> {
        &self.start[n] * (1.0 - theta) + &self.end[n] * theta
    }

    pub fn final_value(&self) -> &DVector<f64> {
        self.end.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// Largest jump across nodes, including `t = 0`.
    pub fn max_jump(&self) -> f64 {
        let mut j = (&self.start[0] - &self.initial).amax();
        for n in 1..self.start.len() {
            j = j.max((&self.start[n] - &self.end[n - 1]).amax());
        }
        j
    }

    pub fn is_continuous(&self) -> bool {
        let scale = self.end.iter().map(|v| v.amax()).fold(self.initial.amax(), f64::max);
        self.max_jump() <= 1e-12 * scale.max(1e-300)
    }

    /// Same function on a finer nested partition.
    pub fn refine_to(&self, fine: &TimePartition) -> Result<SlabFunction> {
        let parents = self.partition.parents_of(fine)?;
        let mut start = Vec::with_capacity(parents.len());
        let mut end = Vec::with_capacity(parents.len());
        for (m, &n) in parents.iter().enumerate() {
            let (a, b) = self.partition.interval(n);
            let (s, e) = fine.interval(m);
            start.push(self.value(n, (s - a) / (b - a)));
            end.push(self.value(n, (e - a) / (b - a)));
        }
        Ok(SlabFunction {
            partition: fine.clone(),
            initial: self.initial.clone(),
            start,
            end,
        })
    }

    /// Apply a spatial injection to all stored values.
    pub fn prolongate(&self, p: &Prolongation) -> SlabFunction {
        SlabFunction {
            partition: self.partition.clone(),
            initial: p.apply(&self.initial),
            start: self.start.iter().map(|v| p.apply(v)).collect(),
            end: self.end.iter().map(|v| p.apply(v)).collect(),
        }
    }

    /// Apply a linear map to all stored values.
    pub fn map(&self, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> SlabFunction {
        SlabFunction {
            partition: self.partition.clone(),
            initial: f(&self.initial),
            start: self.start.iter().map(&f).collect(),
            end: self.end.iter().map(&f).collect(),
        }
    }

    /// `alpha * self + beta * other` on the same partition.
    pub fn combine(&self, alpha: f64, other: &SlabFunction, beta: f64) -> Result<SlabFunction> {
        if self.partition != other.partition || self.dim() != other.dim() {
            return Err(Error::InvalidArgument("slab functions live on different grids".into()));
        }
        let lin = |a: &DVector<f64>, b: &DVector<f64>| a * alpha + b * beta;
        Ok(SlabFunction {
            partition: self.partition.clone(),
            initial: lin(&self.initial, &other.initial),
            start: self.start.iter().zip(&other.start).map(|(a, b)| lin(a, b)).collect(),
            end: self.end.iter().zip(&other.end).map(|(a, b)| lin(a, b)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceTimeFunction {
        let p = TimePartition::uniform(1.0, 2).unwrap();
        let nodes = vec![
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![3.0]),
        ];
        SpaceTimeFunction::new(TimeProfile::ContinuousAffine, p, nodes).unwrap()
    }

    #[test]
    fn profiles_evaluate() {
        let mut f = sample();
        assert!((f.eval(0.25)[0] - 0.5).abs() < 1e-15);
        f.profile = TimeProfile::ConstantLeftContinuous;
        assert_eq!(f.eval(0.5)[0], 1.0);
        assert_eq!(f.eval(0.5000001)[0], 3.0);
        assert_eq!(f.eval(0.0)[0], 0.0);
        f.profile = TimeProfile::Average;
        assert!((f.eval(0.25)[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn interpolant_fixes_affine_and_maps_constant_to_affine() {
        let f = sample();
        let i = temporal_interpolant(&f).unwrap();
        assert_eq!(i.nodes, f.nodes);
        let mut c = sample();
        c.profile = TimeProfile::ConstantLeftContinuous;
        let ic = temporal_interpolant(&c).unwrap();
        assert_eq!(ic.profile, TimeProfile::ContinuousAffine);
        assert!((ic.eval(0.75)[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn difference_of_reconstructions() {
        // u_tau - U_tau = (t_n - t) / tau_n (u_n - u_{n-1}) on each interval.
        let a = sample();
        let mut c = sample();
        c.profile = TimeProfile::ConstantLeftContinuous;
        for &t in &[0.1, 0.3, 0.6, 0.9] {
            let n = a.partition.find_interval(t);
            let (_, b) = a.partition.interval(n);
            let tau = a.partition.tau(n);
            let expect = (b - t) / tau * (&a.nodes[n + 1] - &a.nodes[n]);
            assert!((c.eval(t) - a.eval(t) - expect).amax() < 1e-14);
        }
        let d = c.to_slab().combine(1.0, &a.to_slab(), -1.0).unwrap();
        assert!(!d.is_continuous());
        assert!(a.to_slab().is_continuous());
    }
}
