//! Numerical model of the energetics of quantum measurement: measurement
//! schemes, pointer objectification, work and heat, the classical/quantum
//! split of the heat variance, and information transfer to an observer.
//!
//! Joint spaces are ordered system ⊗ apparatus, and memory ⊗ (system ⊗
//! apparatus) for the Daimon construction. Energies are in units with ħ = 1,
//! entropies in nats.

pub mod error;
pub mod info;
pub mod instruments;
pub mod matrix;
pub mod objects;
pub mod sample;
pub mod schemes;
pub mod thermo;

pub use error::{Error, Result};
pub use instruments::{
    conditional_state, depolarising_objectification, induced_observable, is_repeatable, luders_instrument,
    sequential_sharp_instrument, ConditionalState, Instrument, KrausOperation,
};
pub use matrix::{ComplexMatrix, Keep, C64};
pub use objects::{born_probabilities, Hamiltonian, Povm, State, ValidationReport};
pub use schemes::{
    check_yanase, implementation_independence_check, induced_instrument, normal_scheme_for_luders, objectify,
    premeasure, stability_probability, MeasurementScheme, ObjectificationEnsemble,
};
pub use thermo::{
    conditional_energetics, fixed_point_check, heat_variance, measurement_energetics, premeasurement_work,
    variance_decomposition, EnergeticsReport, VarianceReport,
};
pub use info::{
    block_skew_identity_check, daimon_report, holevo_information, shannon_entropy, von_neumann_entropy, DaimonScenario,
    InfoReport,
};
