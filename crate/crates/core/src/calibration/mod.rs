//! Binary calibration functions, the maximum calibration function δ_max,
//! calibration curves and their generalized inverse.

mod binary;
mod curve;
mod delta_max;

pub use binary::{delta_binary_closed, delta_binary_definition, delta_binary_numeric, NumericDelta};
pub use curve::{
    calibration_curve, default_eps_grid, generalized_inverse, CalibrationCurve, CurveMethod, CurvePoint,
    CurveSource, Inverse,
};
pub use delta_max::{
    class_profile, delta_max_global, delta_max_global_curve, delta_max_pointwise, injected_candidates,
    ClassProfile, DeltaMax,
};
