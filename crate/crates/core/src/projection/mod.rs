//! Detection-side physics: fiber-coupled rates, OAM projections and
//! two-photon density matrices.

mod fiber;
mod oam;
mod state;

pub use fiber::{
    coincidence_rate, fiber_mode, fiber_rates, heralded_amplitude, heralding_efficiency, singles_rate,
    AmplitudeFn, ArmCenters, FiberKind, FiberRates, FiberSpec, HeraldedAmplitude, MomentumQuadrature,
    TwoPhotonAmplitude,
};
pub use oam::{
    oam_overlap_amplitude, oam_overlap_cartesian, oam_spectrum, schmidt_number, CartesianQuadrature,
    OamSpectrum, ProjectionFamily, ProjectionSpec, RadialQuadrature,
};
pub use state::{bell_density_matrix, bell_target, fidelity, DensityMatrix};
