//! Susceptibility-based entanglement witness for an N-spin cluster.
//!
//! A separable state of N spins S obeys `chi ≥ g² (μB/kB) N S / (3T)`; the
//! witness is the normalized margin against that floor,
//!
//! `W = 3 T chi / (g² (μB/kB) N S) - 1`,
//!
//! negative exactly where the measured susceptibility certifies
//! entanglement. `chi` is the single-direction (isotropic powder)
//! susceptibility of the cluster in μB/Oe, the same normalization the
//! sample model produces for the dimer (N = 2).

use crate::constants::c_mu;
use crate::error::{Error, Result};
use crate::scalar::{lift, lower, Real};
use crate::spin::SpinValue;
use crate::thermo::{chi_model, validate_grid, ModelParams};

/// One temperature sample of the witness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessPoint<R: Real> {
    pub t_k: R,
    pub w: R,
}

/// Result of the entanglement-temperature search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeResult<R: Real> {
    /// Temperature where the witness crosses zero, in kelvin.
    pub te_k: R,
    /// Final bisection bracket containing `te_k`.
    pub bracket: (R, R),
    /// Number of bisection steps taken after bracketing.
    pub iterations: u32,
    /// Witness value at `te_k` (tiny by construction).
    pub residual_w: R,
}

fn check_witness_inputs<R: Real>(t_k: R, chi_iso: R, g: R, n_spins: u32) -> Result<()> {
    if !(t_k.is_finite() && t_k > R::zero()) {
        return Err(Error::NonPositiveTemperature(lower(t_k)));
    }
    if !(chi_iso.is_finite() && chi_iso >= R::zero()) {
        return Err(Error::InvalidParams(format!(
            "chi_iso must be finite and non-negative, got {}",
            lower(chi_iso)
        )));
    }
    if !(g.is_finite() && g > R::zero()) {
        return Err(Error::InvalidParams(format!(
            "g must be positive, got {}",
            lower(g)
        )));
    }
    if n_spins == 0 {
        return Err(Error::InvalidParams(
            "n_spins must be at least 1".to_string(),
        ));
    }
    Ok(())
}

/// Witness value `W = 3 T chi / (g² (μB/kB) N S) - 1`.
///
/// `W < 0` certifies entanglement; `W = 0` at the separability floor; with
/// `chi ≥ 0` the value never drops below -1.
pub fn witness_value<R: Real>(t_k: R, chi_iso: R, g: R, n_spins: u32, s: SpinValue) -> Result<R> {
    check_witness_inputs(t_k, chi_iso, g, n_spins)?;
    let denom = g * g * c_mu::<R>() * lift::<R>(n_spins as f64) * s.value::<R>();
    Ok(lift::<R>(3.0) * t_k * chi_iso / denom - R::one())
}

/// The separable bound `chi = g² (μB/kB) N S / (3T)`: susceptibilities at or
/// above this value are compatible with a fully separable state.
pub fn separability_floor<R: Real>(t_k: R, g: R, n_spins: u32, s: SpinValue) -> Result<R> {
    check_witness_inputs(t_k, R::zero(), g, n_spins)?;
    Ok(g * g * c_mu::<R>() * lift::<R>(n_spins as f64) * s.value::<R>() / (lift::<R>(3.0) * t_k))
}

fn witness_of_model<R: Real>(t_k: R, p: &ModelParams<R>) -> Result<R> {
    witness_value(t_k, chi_model(t_k, p)?, p.g, 2, p.s_bar)
}

/// Witness of the sample model over a strictly increasing positive grid.
pub fn witness_curve<R: Real>(p: &ModelParams<R>, grid: &[R]) -> Result<Vec<WitnessPoint<R>>> {
    validate_grid(grid)?;
    grid.iter()
        .map(|&t| {
            Ok(WitnessPoint {
                t_k: t,
                w: witness_of_model(t, p)?,
            })
        })
        .collect()
}

/// Empirical entanglement-temperature estimate for an antiferromagnetic
/// dimer, `Te ≈ -(9/20)(2 S̄ + 1) J`. Meaningful only for `j_k < 0`; the
/// sign convention makes the estimate negative for ferromagnetic couplings.
pub fn te_empirical<R: Real>(j_k: R, s_bar: SpinValue) -> R {
    let multiplicity: R = lift(s_bar.multiplicity() as f64);
    lift::<R>(9.0) * multiplicity * (-j_k) / lift::<R>(20.0)
}

/// Temperature at which the witness of the sample model crosses zero.
///
/// Starting from the bracket [1 K, 1e6 K], the lower edge is pushed down
/// decade by decade while the witness there is non-negative (couplings of
/// order 1 K entangle only below 1 K); bisection then narrows the crossing
/// to a relative width of 1e-12. Errors with
/// [`Error::NoEntanglementTemperature`] when the witness never changes sign
/// on the probed range, e.g. for ferromagnetic coupling or a fully
/// paramagnetic sample.
pub fn entanglement_temperature<R: Real>(p: &ModelParams<R>) -> Result<TeResult<R>> {
    let ten: R = lift(10.0);
    let mut lo: R = R::one();
    let mut hi: R = lift(1e6);

    if witness_of_model(hi, p)? <= R::zero() {
        // Never separable below the search ceiling.
        return Err(Error::NoEntanglementTemperature);
    }
    if witness_of_model(lo, p)? >= R::zero() {
        // Crossing (if any) sits below 1 K: walk the bracket down.
        let floor: R = lift(1e-12);
        loop {
            let next = lo / ten;
            if next < floor {
                return Err(Error::NoEntanglementTemperature);
            }
            if witness_of_model(next, p)? < R::zero() {
                hi = lo;
                lo = next;
                break;
            }
            lo = next;
        }
    }

    // Invariant: W(lo) < 0 <= W(hi). Bisect to relative width 1e-12.
    let tol: R = lift(1e-12);
    let half: R = lift(0.5);
    let mut iterations = 0u32;
    while hi - lo > tol * half * (hi + lo) {
        let mid = half * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket narrower than one ulp; cannot improve
        }
        if witness_of_model(mid, p)? < R::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let te_k = half * (lo + hi);
    Ok(TeResult {
        te_k,
        bracket: (lo, hi),
        iterations,
        residual_w: witness_of_model(te_k, p)?,
    })
}
