//! Spin-dimer thermodynamics and entanglement witnessing.

pub mod constants;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod scalar;
pub mod spin;
pub mod thermo;
pub mod witness;

pub use dataset::{fmt12, synthesize, ChiUnits, DataPoint, DataSet};
pub use error::{Error, Result};
pub use fit::{
    analyze, curie_asymptote, fit, Bound, FitBounds, FitConfig, FitObjective, FitResult,
    FreeParams, Report, StdErrors,
};
pub use scalar::Real;
pub use spin::{
    diagonalize, dimer_hamiltonian, multiplet_spectrum, spin_matrices, DimerSpectrum, Multiplet,
    OperatorTriple, SpinValue,
};
pub use thermo::{
    chi_dimer, chi_fluctuation, chi_fluctuation_curve, chi_model, chi_t_curve, curie_constant,
    linear_grid, log_grid, ChiCurve, ChiPoint, ModelParams,
};
pub use witness::{
    entanglement_temperature, separability_floor, te_empirical, witness_curve, witness_value,
    TeResult, WitnessPoint,
};

// Double-precision specializations; most applications want these.
pub type Multiplet64 = Multiplet<f64>;
pub type DimerSpectrum64 = DimerSpectrum<f64>;
pub type OperatorTriple64 = OperatorTriple<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type ChiPoint64 = ChiPoint<f64>;
pub type ChiCurve64 = ChiCurve<f64>;
pub type WitnessPoint64 = WitnessPoint<f64>;
pub type TeResult64 = TeResult<f64>;
pub type DataPoint64 = DataPoint<f64>;
pub type DataSet64 = DataSet<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type FitResult64 = FitResult<f64>;
pub type Report64 = Report<f64>;
