//! Emitter-emitter coupling through plasmonic sphere clusters.
//!
//! The crate solves multiple scattering by spheres in a vector spherical
//! wave basis, builds the emitter decay matrix from the dyadic Green
//! tensor, fits the collective resonance and propagates the single
//! excitation amplitude to obtain entanglement traces. [`scene`] ties the
//! pieces to JSON scene files and CSV output.
//!
//! Numerical types are generic over the real scalar; the aliases below fix
//! it to `f64`.

pub mod coupling;
pub mod dynamics;
pub mod em;
pub mod entanglement;
pub mod numerics;
pub mod scene;

pub type Vec3 = numerics::Vec3<f64>;
pub type CMatrix = numerics::CMatrix<f64>;
pub type ResonanceParams = dynamics::ResonanceParams<f64>;
pub type DynamicsConfig = dynamics::DynamicsConfig<f64>;
pub type CollectiveMode = dynamics::CollectiveMode<f64>;
pub type KernelTrace = dynamics::KernelTrace<f64>;
pub type QubitDensity = entanglement::QubitDensity<f64>;
pub type CollectiveBasis = entanglement::CollectiveBasis<f64>;
pub type EntanglementTrace = entanglement::EntanglementTrace<f64>;
pub type DecayMatrix = coupling::DecayMatrix<f64>;
pub type NormalizedRates = coupling::NormalizedRates<f64>;
pub type GreenTensorValue = em::GreenTensorValue<f64>;
pub type MieSeries = em::MieSeries<f64>;
