//! Holomorphic disks welded across the boundary by a sphere diffeomorphism.

pub mod area;
pub mod constraints;
pub mod disk;
pub mod family;
pub mod moduli;
pub mod residual;
pub mod solver;
pub(crate) mod spectral;

pub use area::{double_degree, first_area, omega_area};
pub use constraints::{FamilyKind, WeldConstraints};
pub use disk::HolomorphicDisk;
pub use family::{
    desitter_seed, geodesic_family, null_family_endpoints, round_trip, round_trip_contacts, seed_disk, GeodesicFamily,
    NullEndpoints, RoundTrip, RoundTripSample,
};
pub use moduli::{classify_tangent, linearized_tangent_basis, moduli_conformal_form, ModuliTangent, TangentSpace};
pub use residual::{boundary_residual, induced_second_factor};
pub use solver::{
    continue_family, continue_psi, family_parameter, solve_disk, ContinuationOptions, FamilyPath, FamilyPoint,
    SolveReport, SolverOptions,
};
