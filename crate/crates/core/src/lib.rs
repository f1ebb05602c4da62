//! Simulation of structured-light pumps, their down-converted photon pairs,
//! and the resulting orbital-angular-momentum correlations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fieldgrid;
pub mod modes;
pub mod projection;
pub mod quadrature;
pub mod spdc;
pub mod specialfn;
pub mod validate;

pub use error::{Error, Result};
pub use fieldgrid::{GridSpec, Plane, RadialProfile, SampledField};
pub use modes::{ModeFamily, ModeParams, ModeSpec, PovOptics};
pub use projection::{
    DensityMatrix, FiberSpec, MomentumQuadrature, OamSpectrum, ProjectionFamily, ProjectionSpec, RadialQuadrature,
    TwoPhotonAmplitude,
};
pub use spdc::{
    AngularSpectrum, BiphotonKernel, CrystalSpec, IdlerQuadrature, KPerp, MismatchModel, WavelengthTriple,
};
