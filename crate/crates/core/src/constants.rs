//! Physical constants (CGS-flavoured) used by the susceptibility model.
//!
//! The working unit system keeps temperatures and exchange couplings in
//! kelvin, magnetic fields in oersted, and magnetic moments in Bohr
//! magnetons, so susceptibilities come out in μB/Oe per dimer. The only
//! dimensional inputs the model needs are the two ratios derived below.

use crate::scalar::{lift, Real};

/// Bohr magneton, erg/G (CODATA 2018).
pub const BOHR_MAGNETON_ERG_PER_G: f64 = 9.274_010_078_3e-21;

/// Boltzmann constant, erg/K (exact since the 2019 SI redefinition).
pub const BOLTZMANN_ERG_PER_K: f64 = 1.380_649e-16;

/// Avogadro constant, 1/mol (exact).
pub const AVOGADRO_PER_MOL: f64 = 6.022_140_76e23;

/// μB/kB in K/Oe: converts `g·B` (in Oe) into a Zeeman energy in kelvin,
/// and anchors the Curie constant. Numerically ≈ 6.7171e-5 K/Oe.
#[inline]
pub fn c_mu<R: Real>() -> R {
    lift(BOHR_MAGNETON_ERG_PER_G / BOLTZMANN_ERG_PER_K)
}

/// N_A·μB in emu/mol per (μB/Oe): one molar susceptibility in emu/mol equals
/// this many μB/Oe per formula unit. Numerically ≈ 5.585e3.
#[inline]
pub fn emu_per_mol_per_mu_b_oe<R: Real>() -> R {
    lift(AVOGADRO_PER_MOL * BOHR_MAGNETON_ERG_PER_G)
}

/// Bundle of the derived constants, for callers that prefer a value to a
/// function (e.g. threading a whole constant set through a fit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants<R: Real> {
    /// μB/kB in K/Oe.
    pub c_mu: R,
}

impl<R: Real> PhysicalConstants<R> {
    /// CODATA values.
    pub fn standard() -> Self {
        PhysicalConstants { c_mu: c_mu() }
    }
}

impl<R: Real> Default for PhysicalConstants<R> {
    fn default() -> Self {
        Self::standard()
    }
}
