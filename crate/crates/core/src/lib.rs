//! Event-driven simulation of superconducting optoelectronic loop-neuron networks.
//!
//! Neurons integrate photon-detection events in leaky superconducting loops,
//! fire when the somatic loop crosses threshold, and fan out photons to
//! downstream synapses over light-speed delays. Synapses hold one of many
//! discrete efficacy levels and evolve under spike-timing-dependent
//! plasticity with cascade metaplasticity.
//!
//! Numerical state is generic over [`Scalar`] (`f32` or `f64`); the physical
//! scaling calculators in [`scaling`] additionally accept exact rationals.
//! The aliases below fix the common concrete choices.

pub mod analysis;
pub mod engine;
pub mod model;
pub mod num;
pub mod plasticity;
pub mod rng;
pub mod scaling;
pub mod spikes;
pub mod topology;

pub use model::{
    effective_weight, validate_network, DendriteNode, EdgeSpec, LoopConfig, LoopMode, LoopState,
    NetworkSpec, NeuronSpec, Sign, SimTime, SynapseState, Violation,
};
pub use num::Scalar;
pub use rng::RngStream;
pub use spikes::{ExternalInput, SpikeLog, SpikeRecord};

/// Version of the on-disk file formats (network JSON, stimulus JSON, spike CSV).
pub const FORMAT_SCHEMA_VERSION: u32 = 1;

/// Double-precision network description.
pub type Network = model::NetworkSpec<f64>;
/// Single-precision network description.
pub type NetworkF32 = model::NetworkSpec<f32>;
pub type Synapse = model::SynapseState<f64>;
pub type Neuron = model::NeuronSpec<f64>;
/// Double-precision simulator.
pub type Simulator = engine::Simulator<f64>;
/// Single-precision simulator.
pub type SimulatorF32 = engine::Simulator<f32>;
pub type Stimulus = Vec<spikes::ExternalInput<f64>>;
/// Exact rational type accepted by the scaling calculators.
pub type Exact = num_rational::BigRational;
