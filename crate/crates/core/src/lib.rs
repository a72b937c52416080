//! Set-valued calculus for almost-everywhere continuous functions.
//!
//! Functions are sampled on uniform grids with a finite declared jump set.
//! A class of such functions is represented by its lower and upper
//! quasicontinuous representatives ([`ClassPair`]), point values are
//! intervals or convex sets, and the module tree builds Lipschitz envelopes,
//! graph metrics, set-valued gradients and an abstract completion on top.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

// `!(a < b)` is deliberate throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod class;
pub mod completion;
pub mod envelope;
pub mod error;
pub mod gradient;
pub mod grid;
pub mod io;
pub mod metric;
pub mod plane;
pub mod random;
pub mod sampled;
pub mod scalar;
pub mod tolerance;
pub mod value;

pub use class::{
    canonical_pair, class_add, class_map, class_max, class_min, class_mul, class_scale, class_sub, class_zip,
    is_quasicontinuous, lsc_hull, usc_hull, value_at, value_at_vec, ClassPair, VectorClass,
};
pub use completion::{
    cauchy_limit, density_approx, embed, rho_tilde, verify_tower, DiscreteMetricTower, LatticeTower, LipschitzTower,
    RhoTilde, TowerElement, TowerReport, TowerSamples,
};
pub use envelope::{
    default_ks, envelope_family, envelope_oracle, lip_envelope, lip_lower_envelope, lip_upper_envelope, EnvelopeFamily,
    Side,
};
pub use error::{Error, Result};
pub use gradient::{
    classical_gradient, clarke_gradient, closure_gradient, detect_kinks, differentiability_at_continuity, field_node_distance, grad_add,
    grad_chain, grad_chain_with, grad_minmax, grad_product, grad_scale, gradient_tolerance, limit_exchange, stationarity_check,
    mollify, ClosureDiagnostic, GradientField, SmoothFn, SmoothingKind, SmoothingSchedule, Which,
};
pub use grid::Grid1D;
pub use metric::{
    check_graph_limit, check_graph_to_metric, class_metric, class_metric_vec, default_directions, delta_metric,
    graph_hausdorff, polyline_hausdorff, r_metric, r_metric_vec, s_metric, s_metric_vec, tail_converges, KTerm,
    MetricKind, MetricReport, Polyline,
};
pub use sampled::SampledFn;
pub use scalar::Scalar;
pub use tolerance::{noise_floor, tol_grad, tol_rep, Tolerances};
pub use value::{ConvexValue, IntervalValue};

pub type Grid = Grid1D<f64>;
pub type Sampled = SampledFn<f64>;
pub type Class = ClassPair<f64>;
pub type VecClass = VectorClass<f64>;
pub type Interval = IntervalValue<f64>;
pub type Convex = ConvexValue<f64>;
pub type Family = EnvelopeFamily<f64>;
pub type Report = MetricReport<f64>;
pub type Gradient = GradientField<f64>;
pub type LipElement = TowerElement<SampledFn<f64>, f64>;
