//! Space-time norms, Riesz lifts and residual dual norms.

pub mod lift;
pub mod residual;
pub mod spacetime;

pub use lift::{PatchLifts, RieszLiftContext};
pub use residual::{backward_representer, residual_dual_norm_sq, residual_dual_norm_y};
pub use spacetime::{affine_quadratic, infsup_identity_residual, slab_norm_sq, spacetime_norm, ys_identity_residual, NormKind};
