//! The Riemann sphere, its charts, Mobius maps and orientation-reversing self-maps.

pub mod diffeo;
pub mod flow;
pub mod gauge;
pub mod kahler;
pub mod mobius;
pub mod point;

pub use diffeo::{active_chart, diffeo_eval, diffeo_inverse, diffeo_jacobian, ChartDerivative, SphereDiffeo};
pub use flow::{flow_map, Harmonic, HarmonicKind};
pub use gauge::{diffeo_gauge_distance, gauge_distance_samples, three_point_map, GaugeFit};
pub use kahler::{conformal_factor, lagrangian_residual, pullback_area_data, KahlerData};
pub use mobius::{mobius_apply, MobiusMap};
pub use point::{antipodal, round_density, Chart, SpherePoint};
