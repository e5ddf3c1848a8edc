//! Transformation functions, surrogate losses, score sets, the maximum
//! selector and the suboptimality index sets.

mod loss;
mod score_set;
mod selector;
mod transform;

pub use loss::{Adjustment, Family, LossSpec, Outer, Psi, RrkaSum, Surrogate};
pub use score_set::{ScoreSet, ScoreSetKind};
pub use selector::{
    in_argmax_set, index_sets, max_selector, permute, worst_index, Distribution, IndexSets,
    GAP_TOL, TIE_TOL,
};
pub use transform::{effective_transform, PhiKind, Transform};
