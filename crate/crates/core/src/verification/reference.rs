//! Fine-grid reference solutions.

use std::sync::Arc;

use nalgebra::DVector;

use super::manufactured::ManufacturedProblem;
use crate::discretization::ScalarSpace;
use crate::error::{Error, Result};
use crate::norms::RieszLiftContext;
use crate::timestepping::{
    Forcing, HeatDiscretization, InitialApproximation, SlabFunction, SpaceTimeFunction, TimePartition,
    TimeProfile, TimeSlabSolution,
};

/// Default limit on the number of unknowns of a reference space.
pub const DEFAULT_DOF_CAP: usize = 250_000;

/// Problem a reference solution approximates.
#[derive(Clone)]
pub enum ReferenceSource<'a> {
    Manufactured(&'a ManufacturedProblem),
    /// Given data with the initial value as a coarse-space vector.
    Discrete { forcing: Forcing, initial: &'a DVector<f64> },
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    pub dof_cap: usize,
    /// Combine runs with `r` and `r / 2` steps per coarse interval as `2 U_r - U_{r/2}`.
    pub richardson: bool,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            dof_cap: DEFAULT_DOF_CAP,
            richardson: false,
        }
    }
}

/// Implicit Euler solution on a nested refined space and partition.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub solution: TimeSlabSolution,
    /// Continuous piecewise affine approximation of `u` on the reference grid; the
    /// extrapolated nodes when Richardson extrapolation is on.
    pub function: SlabFunction,
    pub forcing: Forcing,
    /// Reference space as a lift space over the coarse trial space.
    pub context: RieszLiftContext,
    pub coarse_partition: TimePartition,
    pub space_refinement: usize,
    pub time_refinement: usize,
    pub richardson: bool,
}

pub fn reference_solve(
    source: &ReferenceSource,
    coarse_space: &Arc<ScalarSpace>,
    coarse_partition: &TimePartition,
    space_refine: usize,
    time_refine: usize,
    options: ReferenceOptions,
) -> Result<ReferenceSolution> {
    if space_refine < 2 || time_refine < 2 {
        return Err(Error::InvalidArgument(format!(
            "refinement factors ({space_refine}, {time_refine}) must be at least 2"
        )));
    }
    if options.richardson && time_refine % 2 != 0 {
        return Err(Error::InvalidArgument("Richardson extrapolation needs an even time refinement".into()));
    }
    let mesh = &coarse_space.mesh;
    let ncells = mesh.n_cells() * space_refine.pow(mesh.dim as u32);
    let estimate = ncells * coarse_space.dim().max(1) / mesh.n_cells().max(1);
    if estimate > options.dof_cap {
        return Err(Error::Refinement(format!(
            "about {estimate} unknowns exceed the cap of {}",
            options.dof_cap
        )));
    }
    let context = RieszLiftContext::refined(coarse_space.clone(), space_refine, 0)?;
    if context.space.dim() > options.dof_cap {
        return Err(Error::Refinement(format!(
            "{} unknowns exceed the cap of {}",
            context.space.dim(),
            options.dof_cap
        )));
    }
    let disc = HeatDiscretization {
        space: context.space.clone(),
        mass: context.mass.clone(),
        stiffness: context.stiffness.clone(),
    };
    let (forcing, u0) = match source {
        ReferenceSource::Manufactured(p) => (
            p.forcing(),
            disc.initial_value(&|x| p.u0(x), InitialApproximation::L2Projection)?,
        ),
        ReferenceSource::Discrete { forcing, initial } => {
            if initial.len() != coarse_space.dim() {
                return Err(Error::InvalidArgument("initial value does not live on the coarse space".into()));
            }
            (forcing.clone(), context.prolongate(initial))
        }
    };
    let partition = coarse_partition.refine(time_refine)?;
    let solution = disc.run_with_forcing(&partition, &forcing, u0.clone())?;
    let mut function = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, partition.clone(), solution.values.clone())?
        .to_slab();
    if options.richardson {
        let half = coarse_partition.refine(time_refine / 2)?;
        let coarse_run = disc.run_with_forcing(&half, &forcing, u0)?;
        let coarse_fn = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, half, coarse_run.values)?
            .to_slab()
            .refine_to(&partition)?;
        function = function.combine(2.0, &coarse_fn, -1.0)?;
    }
    Ok(ReferenceSolution {
        solution,
        function,
        forcing,
        context,
        coarse_partition: coarse_partition.clone(),
        space_refinement: space_refine,
        time_refinement: time_refine,
        richardson: options.richardson,
    })
}

impl ReferenceSolution {
    pub fn partition(&self) -> &TimePartition {
        &self.solution.partition
    }

    pub fn space(&self) -> &Arc<ScalarSpace> {
        &self.context.space
    }

    /// A coarse slab function on the reference grid.
    pub fn embed(&self, v: &SlabFunction) -> Result<SlabFunction> {
        if v.dim() != self.context.trial.dim() {
            return Err(Error::InvalidArgument("function does not live on the coarse space".into()));
        }
        Ok(v.refine_to(self.partition())?.map(|x| self.context.prolongate(x)))
    }

    /// `u - v` on the reference grid for a coarse function `v`.
    pub fn error_of(&self, v: &SpaceTimeFunction) -> Result<SlabFunction> {
        let e = self.embed(&v.to_slab())?;
        self.function.combine(1.0, &e, -1.0)
    }

    /// Whether this reference is at least `factor` times finer than the given run in
    /// both space and time, with nested grids.
    pub fn is_finer_than(&self, space: &ScalarSpace, partition: &TimePartition, factor: usize) -> bool {
        self.space_refinement >= factor
            && self.time_refinement >= factor
            && self.context.trial.same_as(space)
            && partition.is_refined_by(self.partition())
            && partition.n_intervals() * factor <= self.partition().n_intervals()
    }
}
