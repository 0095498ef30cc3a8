//! Equilibrium susceptibility of the exchange-coupled dimer.
//!
//! Susceptibilities are per dimer (two ions) in μB/Oe; temperatures and
//! exchange couplings are in kelvin. Two independent evaluation routes are
//! provided: a closed form over the total-spin multiplets ([`chi_dimer`])
//! and the longitudinal fluctuation-dissipation formula over the exact
//! zero-field spectrum ([`chi_fluctuation`]). They must agree to numerical
//! precision, which the test suites exploit heavily.

use crate::constants::c_mu;
use crate::error::{Error, Result};
use crate::scalar::{lift, lower, Real};
use crate::spin::{diagonalize, dimer_hamiltonian, multiplet_spectrum, SpinValue};

/// Parameters of the measured-sample susceptibility model: a Heisenberg
/// dimer of two spins `s_bar` plus a paramagnetic impurity fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<R: Real> {
    /// Dimer g-factor.
    pub g: R,
    /// Exchange coupling in kelvin (negative = antiferromagnetic).
    pub j_k: R,
    /// Impurity fraction in [0, 1].
    pub rho: R,
    /// Spin of each dimer ion.
    pub s_bar: SpinValue,
    /// g-factor of the free-ion impurity term (2.0 unless overridden).
    pub impurity_g: R,
}

impl<R: Real> ModelParams<R> {
    /// Validated constructor; `s_bar` defaults belong to the caller, the
    /// impurity g-factor defaults to 2.0.
    pub fn new(g: R, j_k: R, rho: R, s_bar: SpinValue) -> Result<Self> {
        if !(g.is_finite() && g > R::zero()) {
            return Err(Error::InvalidParams(format!(
                "g must be positive, got {}",
                lower(g)
            )));
        }
        if !j_k.is_finite() {
            return Err(Error::InvalidParams("j_K must be finite".to_string()));
        }
        if !(rho.is_finite() && rho >= R::zero() && rho <= R::one()) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in [0, 1], got {}",
                lower(rho)
            )));
        }
        Ok(ModelParams {
            g,
            j_k,
            rho,
            s_bar,
            impurity_g: lift(2.0),
        })
    }

    /// Replace the impurity g-factor (must be positive and finite).
    pub fn with_impurity_g(mut self, impurity_g: R) -> Result<Self> {
        if !(impurity_g.is_finite() && impurity_g > R::zero()) {
            return Err(Error::InvalidParams(format!(
                "impurity_g must be positive, got {}",
                lower(impurity_g)
            )));
        }
        self.impurity_g = impurity_g;
        Ok(self)
    }
}

/// One temperature sample of a susceptibility-like quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiPoint<R: Real> {
    pub t_k: R,
    pub chi: R,
}

/// An ordered set of `(temperature, value)` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiCurve<R: Real> {
    pub points: Vec<ChiPoint<R>>,
}

/// Curie constant per ion, `C = g² S(S+1) (μB/kB) / 3`, in μB·K/Oe.
pub fn curie_constant<R: Real>(g: R, s: SpinValue) -> R {
    g * g * s.casimir::<R>() * c_mu::<R>() / lift(3.0)
}

fn check_temperature<R: Real>(t_k: R) -> Result<()> {
    if !(t_k.is_finite() && t_k > R::zero()) {
        return Err(Error::NonPositiveTemperature(lower(t_k)));
    }
    Ok(())
}

/// Zero-field molar-free susceptibility of one dimer of two spins `s_bar`:
///
/// `chi = (2 g² (μB/kB) / T) · N / Z`
///
/// where `N = Σ_S S(S+1)(2S+1)/6 · exp(-E_S/T)` and
/// `Z = Σ_S (2S+1) · exp(-E_S/T)` run over total spins 0..2·s_bar of the
/// exchange spectrum. Boltzmann factors are taken relative to the lowest
/// level so ferromagnetic couplings (J > 0) cannot overflow.
pub fn chi_dimer<R: Real>(t_k: R, g: R, j_k: R, s_bar: SpinValue) -> Result<R> {
    check_temperature(t_k)?;
    let spectrum = multiplet_spectrum::<R>(s_bar, s_bar, j_k);
    let e_min = spectrum
        .multiplets
        .iter()
        .map(|m| m.energy_k)
        .fold(R::zero(), |a, b| a.min(b));
    let mut num = R::zero();
    let mut den = R::zero();
    for m in &spectrum.multiplets {
        let t2 = m.twice_total_spin as f64;
        // S(S+1)(2S+1)/6 as the exact rational 2S(2S+2)(2S+1)/24.
        let weight: R = lift(t2 * (t2 + 2.0) * (t2 + 1.0) / 24.0);
        let boltz = (-(m.energy_k - e_min) / t_k).exp();
        num += weight * boltz;
        den += lift::<R>(m.degeneracy as f64) * boltz;
    }
    Ok(lift::<R>(2.0) * g * g * c_mu::<R>() / t_k * (num / den))
}

/// Longitudinal fluctuation-formula susceptibility over the exact B = 0
/// spectrum of the (possibly unequal) pair:
///
/// `chi_z = (g² (μB/kB) / T) · (⟨Mz²⟩ - ⟨Mz⟩²)`
///
/// with `Mz = S1z + S2z` and thermal averages from the eigendecomposition
/// of the product-space Hamiltonian. This is the independent cross-check
/// for [`chi_dimer`]; it never touches the multiplet closed form.
pub fn chi_fluctuation<R: Real>(t_k: R, s1: SpinValue, s2: SpinValue, j_k: R, g: R) -> Result<R> {
    check_temperature(t_k)?;
    let moments = fluctuation_moments(s1, s2, j_k)?;
    Ok(fluctuation_reduce(t_k, &moments, g))
}

/// [`chi_fluctuation`] over a whole grid, diagonalizing the Hamiltonian
/// once instead of per temperature.
pub fn chi_fluctuation_curve<R: Real>(
    s1: SpinValue,
    s2: SpinValue,
    j_k: R,
    g: R,
    grid: &[R],
) -> Result<Vec<R>> {
    validate_grid(grid)?;
    let moments = fluctuation_moments(s1, s2, j_k)?;
    Ok(grid
        .iter()
        .map(|&t| fluctuation_reduce(t, &moments, g))
        .collect())
}

/// Per-eigenstate energy and first two Mz moments of the B = 0 dimer;
/// everything temperature-dependent is cheap once these are known.
struct FluctuationMoments<R: Real> {
    /// Eigenenergies shifted so the minimum is zero.
    energies: Vec<R>,
    m1: Vec<R>,
    m2: Vec<R>,
}

fn fluctuation_moments<R: Real>(
    s1: SpinValue,
    s2: SpinValue,
    j_k: R,
) -> Result<FluctuationMoments<R>> {
    let h = dimer_hamiltonian::<R>(s1, s2, j_k, R::zero(), lift(2.0))?;

    // Mz = S1z + S2z is diagonal in the product basis and commutes with
    // the exchange term, so the Hamiltonian is block diagonal over the
    // total-magnetization sectors. Diagonalizing sector by sector keeps
    // every eigenstate's magnetization an exact half-integer; a whole-matrix
    // decomposition would leak O(eps) amplitude between sectors, which is
    // enough to swamp Boltzmann weights in the deeply gapped regime.
    let n2 = s2.multiplicity();
    let dim = h.nrows();
    let twice_mz: Vec<i64> = (0..dim)
        .map(|k| {
            let i1 = (k / n2) as i64;
            let i2 = (k % n2) as i64;
            s1.twice() as i64 - 2 * i1 + s2.twice() as i64 - 2 * i2
        })
        .collect();

    let mut energies = Vec::with_capacity(dim);
    let mut m1 = Vec::with_capacity(dim);
    let mut m2 = Vec::with_capacity(dim);
    let twice_min = -(s1.twice() as i64 + s2.twice() as i64);
    for twice_m in (twice_min..=-twice_min).step_by(2) {
        let sector: Vec<usize> = (0..dim).filter(|&k| twice_mz[k] == twice_m).collect();
        if sector.is_empty() {
            continue;
        }
        let block = nalgebra::DMatrix::from_fn(sector.len(), sector.len(), |r, c| {
            h[(sector[r], sector[c])]
        });
        let (vals, _) = diagonalize(&block)?;
        let m: R = lift(twice_m as f64 / 2.0);
        for &v in vals.iter() {
            energies.push(v);
            m1.push(m);
            m2.push(m * m);
        }
    }

    let e_min = energies.iter().fold(energies[0], |a, &b| a.min(b));
    for e in &mut energies {
        *e -= e_min;
    }
    Ok(FluctuationMoments { energies, m1, m2 })
}

fn fluctuation_reduce<R: Real>(t_k: R, moments: &FluctuationMoments<R>, g: R) -> R {
    let mut z = R::zero();
    let mut first = R::zero();
    let mut second = R::zero();
    for n in 0..moments.energies.len() {
        let w = (-moments.energies[n] / t_k).exp();
        z += w;
        first += w * moments.m1[n];
        second += w * moments.m2[n];
    }
    let mean = first / z;
    let variance = second / z - mean * mean;
    g * g * c_mu::<R>() / t_k * variance
}

/// Sample susceptibility: dimer contribution diluted by an impurity
/// fraction of free spin-5/2 ions following a Curie law,
///
/// `chi = (1 - rho) · chi_dimer + rho · 2 C(impurity_g, 5/2) / T`.
pub fn chi_model<R: Real>(t_k: R, p: &ModelParams<R>) -> Result<R> {
    check_temperature(t_k)?;
    let dimer = chi_dimer(t_k, p.g, p.j_k, p.s_bar)?;
    let s52 = SpinValue::from_twice(5).expect("5/2 is a valid spin");
    let impurity = lift::<R>(2.0) * curie_constant(p.impurity_g, s52) / t_k;
    Ok((R::one() - p.rho) * dimer + p.rho * impurity)
}

pub(crate) fn validate_grid<R: Real>(grid: &[R]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid);
    }
    let mut prev = R::zero();
    for &t in grid {
        if !(t.is_finite() && t > prev) {
            return Err(Error::InvalidGrid);
        }
        prev = t;
    }
    Ok(())
}

fn check_grid_spec<R: Real>(t_min: R, t_max: R, n: usize) -> Result<()> {
    if n < 2 || !t_min.is_finite() || !t_max.is_finite() || t_min <= R::zero() || t_max <= t_min {
        return Err(Error::InvalidGrid);
    }
    Ok(())
}

/// `n` temperatures spaced evenly between `t_min` and `t_max`, both
/// included exactly.
pub fn linear_grid<R: Real>(t_min: R, t_max: R, n: usize) -> Result<Vec<R>> {
    check_grid_spec(t_min, t_max, n)?;
    let step = (t_max - t_min) / lift::<R>((n - 1) as f64);
    let mut grid: Vec<R> = (0..n).map(|i| t_min + step * lift::<R>(i as f64)).collect();
    grid[n - 1] = t_max;
    Ok(grid)
}

/// `n` temperatures spaced evenly in log T between `t_min` and `t_max`,
/// both included exactly.
pub fn log_grid<R: Real>(t_min: R, t_max: R, n: usize) -> Result<Vec<R>> {
    check_grid_spec(t_min, t_max, n)?;
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let step = (hi - lo) / lift::<R>((n - 1) as f64);
    let mut grid: Vec<R> = (0..n)
        .map(|i| (lo + step * lift::<R>(i as f64)).exp())
        .collect();
    grid[0] = t_min;
    grid[n - 1] = t_max;
    Ok(grid)
}

/// χ·T of the sample model over a strictly increasing positive grid.
/// Each point's `chi` field holds `chi_model(t)·t` in μB·K/Oe.
pub fn chi_t_curve<R: Real>(p: &ModelParams<R>, grid: &[R]) -> Result<ChiCurve<R>> {
    validate_grid(grid)?;
    let points = grid
        .iter()
        .map(|&t| {
            Ok(ChiPoint {
                t_k: t,
                chi: chi_model(t, p)? * t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::c_mu;
    use approx::assert_relative_eq;

    fn s(text: &str) -> SpinValue {
        text.parse().unwrap()
    }

    fn params(g: f64, j: f64, rho: f64) -> ModelParams<f64> {
        ModelParams::new(g, j, rho, s("5/2")).unwrap()
    }

    #[test]
    fn curie_constants_match_the_quoted_values() {
        // 7.84e-4 μB·K/Oe for (g = 2, S = 5/2) within 0.5 percent.
        let c52: f64 = curie_constant(2.0, s("5/2"));
        assert!((c52 - 7.84e-4).abs() / 7.84e-4 < 5e-3, "C(2,5/2) = {c52}");
        // 0.67e-4 μB·K/Oe for (g = 2, S = 1/2) within 1 percent.
        let c12: f64 = curie_constant(2.0, s("1/2"));
        assert!((c12 - 0.67e-4).abs() / 0.67e-4 < 1e-2, "C(2,1/2) = {c12}");
    }

    #[test]
    fn curie_constant_is_positive_for_reasonable_inputs() {
        for g in [1.5, 1.8, 2.0, 2.5] {
            for spin in ["1/2", "1", "3/2", "2", "5/2"] {
                let c: f64 = curie_constant(g, s(spin));
                assert!(c.is_finite() && c > 0.0);
            }
        }
    }

    #[test]
    fn dimer_chi_matches_the_explicit_five_half_expression() {
        // The six-level expression written out term by term, with the
        // numerator coefficients {1, 5, 14, 30, 55} and degeneracies
        // {1, 3, 5, 7, 9, 11} over energies {0, -J, -3J, -6J, -10J, -15J}.
        let cmu = c_mu::<f64>();
        for (t, g, j) in [
            (300.0f64, 1.8, -282.0),
            (50.0, 2.0, -282.0),
            (700.0, 1.8, -100.0),
        ] {
            let e = [0.0, -j, -3.0 * j, -6.0 * j, -10.0 * j, -15.0 * j];
            let coeffs = [1.0, 5.0, 14.0, 30.0, 55.0];
            let degs = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0];
            let mut n = 0.0;
            let mut z = 0.0;
            for i in 0..6 {
                let boltz = (-e[i] / t).exp();
                if i > 0 {
                    n += coeffs[i - 1] * boltz;
                }
                z += degs[i] * boltz;
            }
            let expected = 2.0 * g * g * cmu / t * n / z;
            let got: f64 = chi_dimer(t, g, j, s("5/2")).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn spin_half_dimer_reduces_to_the_two_level_form() {
        // Independent singlet-triplet expression
        // chi = (2 g² c_mu / T) e^{J/T} / (1 + 3 e^{J/T}).
        let cmu = c_mu::<f64>();
        for (t, j) in [(100.0f64, -100.0), (37.0, -150.0), (500.0, -75.0)] {
            let y = (j / t).exp();
            let expected = 2.0 * 4.0 * cmu / t * y / (1.0 + 3.0 * y);
            let got = chi_dimer(t, 2.0, j, s("1/2")).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn fluctuation_route_matches_a_hand_evaluated_two_level_value() {
        // (2 g² c_mu / T) e^{-1} / (1 + 3 e^{-1}) at J = -100 K, T = 100 K.
        let expected =
            2.0 * 4.0 * c_mu::<f64>() / 100.0 * (-1.0f64).exp() / (1.0 + 3.0 * (-1.0f64).exp());
        let got = chi_fluctuation(100.0, s("1/2"), s("1/2"), -100.0, 2.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn fluctuation_route_matches_a_mixed_spin_closed_form() {
        // For (S1, S2) = (1, 1/2): doublet at 0 with Σm² = 1/2, quartet at
        // -(3/2)J with Σm² = 5; chi = (g²c/T)(1/2 + 5y)/(2 + 4y).
        let (t, j, g) = (80.0f64, -120.0, 1.9);
        let y = (1.5 * j / t).exp();
        let expected = g * g * c_mu::<f64>() / t * (0.5 + 5.0 * y) / (2.0 + 4.0 * y);
        let got = chi_fluctuation(t, s("1"), s("1/2"), j, g).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_and_fluctuation_routes_agree_on_a_small_grid() {
        for spin in ["1/2", "3/2", "5/2"] {
            for j in [-282.0, -1.0, 50.0] {
                for t in [0.7, 13.0, 290.0, 4.1e3] {
                    let a = chi_dimer(t, 2.0, j, s(spin)).unwrap();
                    let b = chi_fluctuation(t, s(spin), s(spin), j, 2.0).unwrap();
                    assert_relative_eq!(a, b, max_relative = 1e-11, epsilon = 1e-22);
                }
            }
        }
    }

    #[test]
    fn chi_scales_as_g_squared() {
        let base = chi_dimer(250.0, 1.4, -282.0, s("5/2")).unwrap();
        let doubled = chi_dimer(250.0, 2.8, -282.0, s("5/2")).unwrap();
        assert_relative_eq!(doubled / base, 4.0, max_relative = 1e-13);
    }

    #[test]
    fn high_temperature_limit_is_two_free_ions() {
        let g = 1.8;
        let j: f64 = -282.0;
        let t = 1e7 * j.abs();
        let chi_t = chi_dimer(t, g, j, s("5/2")).unwrap() * t;
        let curie = 2.0 * curie_constant(g, s("5/2"));
        assert_relative_eq!(chi_t, curie, max_relative = 1e-3);
    }

    #[test]
    fn deep_antiferromagnetic_freeze_out_underflows_to_zero() {
        let chi = chi_dimer(1e-3, 2.0, -282.0, s("5/2")).unwrap();
        assert_eq!(chi, 0.0);
        // Ferromagnetic coupling at very low T must not overflow: the
        // ground multiplet saturates the Curie response of total spin 5.
        let chi_ferro: f64 = chi_dimer(0.1, 2.0, 50.0, s("5/2")).unwrap();
        assert!(chi_ferro.is_finite() && chi_ferro > 0.0);
        let expected = 4.0 * c_mu::<f64>() / 0.1 * (5.0 * 6.0 / 3.0);
        assert_relative_eq!(chi_ferro, expected, max_relative = 1e-12);
    }

    #[test]
    fn non_positive_temperatures_are_rejected() {
        for t in [0.0, -5.0, f64::NAN] {
            assert!(matches!(
                chi_dimer(t, 2.0, -282.0, s("5/2")),
                Err(Error::NonPositiveTemperature(_))
            ));
            assert!(matches!(
                chi_model(t, &params(1.8, -282.0, 0.01)),
                Err(Error::NonPositiveTemperature(_))
            ));
        }
    }

    #[test]
    fn chi_is_nonnegative_and_finite_across_regimes() {
        let grid: Vec<f64> = (0..60)
            .map(|i| 0.1 * (1e6f64 / 0.1).powf(i as f64 / 59.0))
            .collect();
        for j in [-500.0, -1.0, 0.0, 50.0] {
            for &t in &grid {
                let chi = chi_dimer(t, 2.0, j, s("5/2")).unwrap();
                assert!(chi.is_finite() && chi >= 0.0, "chi({t}, J={j}) = {chi}");
            }
        }
    }

    #[test]
    fn model_params_validation_rejects_out_of_range_values() {
        assert!(ModelParams::new(-1.0, -282.0, 0.01, s("5/2")).is_err());
        assert!(ModelParams::new(1.8, f64::INFINITY, 0.01, s("5/2")).is_err());
        assert!(ModelParams::new(1.8, -282.0, 1.5, s("5/2")).is_err());
        assert!(ModelParams::new(1.8, -282.0, -0.1, s("5/2")).is_err());
        assert!(params(1.8, -282.0, 0.01).with_impurity_g(0.0).is_err());
        assert_eq!(params(1.8, -282.0, 0.01).impurity_g, 2.0);
    }

    #[test]
    fn pure_impurity_model_is_a_curie_law() {
        let p = params(1.8, -282.0, 1.0);
        let curie = 2.0 * curie_constant(2.0, s("5/2"));
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let chi_t = chi_model(t, &p).unwrap() * t;
            assert_relative_eq!(chi_t, curie, max_relative = 1e-12);
        }
    }

    #[test]
    fn rho_zero_model_is_exactly_the_dimer() {
        let p = params(1.8, -282.0, 0.0);
        for t in [2.0, 77.0, 300.0] {
            assert_eq!(
                chi_model(t, &p).unwrap(),
                chi_dimer(t, 1.8, -282.0, s("5/2")).unwrap()
            );
        }
    }

    #[test]
    fn fitted_parameter_high_t_product_approaches_the_mixed_curie_value() {
        // chi·T at T = 1e7 K for (g, J, rho) = (1.8, -282, 0.01) must sit
        // within 1e-3 of 1.273e-3 μB·K/Oe.
        let p = params(1.8, -282.0, 0.01);
        let t = 1e7;
        let chi_t = chi_model(t, &p).unwrap() * t;
        assert_relative_eq!(chi_t, 1.273e-3, max_relative = 1e-3);
        let combined =
            0.99 * 2.0 * curie_constant(1.8, s("5/2")) + 0.01 * 2.0 * curie_constant(2.0, s("5/2"));
        assert_relative_eq!(chi_t, combined, max_relative = 1e-4);
    }

    #[test]
    fn low_temperature_plateau_is_the_impurity_curie_term() {
        let p = params(1.8, -282.0, 0.01);
        let plateau = 0.01 * 2.0 * curie_constant(2.0, s("5/2"));
        let chi_t = chi_model(0.5, &p).unwrap() * 0.5;
        assert_relative_eq!(chi_t, plateau, max_relative = 1e-9);
    }

    #[test]
    fn chi_t_curve_validates_its_grid() {
        let p = params(1.8, -282.0, 0.01);
        assert!(matches!(chi_t_curve(&p, &[]), Err(Error::InvalidGrid)));
        assert!(matches!(
            chi_t_curve(&p, &[2.0, 2.0]),
            Err(Error::InvalidGrid)
        ));
        assert!(matches!(
            chi_t_curve(&p, &[5.0, 2.0]),
            Err(Error::InvalidGrid)
        ));
        assert!(matches!(
            chi_t_curve(&p, &[-1.0, 2.0]),
            Err(Error::InvalidGrid)
        ));

        let single = chi_t_curve(&p, &[300.0]).unwrap();
        assert_eq!(single.points.len(), 1);
        assert_eq!(single.points[0].t_k, 300.0);
        assert_eq!(single.points[0].chi, chi_model(300.0, &p).unwrap() * 300.0);
    }

    #[test]
    fn linear_grid_has_exact_endpoints_and_even_spacing() {
        let g: Vec<f64> = linear_grid(2.0, 300.0, 150).unwrap();
        assert_eq!(g.len(), 150);
        assert_eq!(g[0], 2.0);
        assert_eq!(g[149], 300.0);
        for pair in g.windows(2) {
            assert_relative_eq!(pair[1] - pair[0], 2.0, max_relative = 1e-12);
        }
        assert!(validate_grid(&g).is_ok());
    }

    #[test]
    fn log_grid_has_exact_endpoints_and_constant_ratio() {
        let g: Vec<f64> = log_grid(1.0, 1e4, 500).unwrap();
        assert_eq!(g.len(), 500);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[499], 1e4);
        let ratio = g[1] / g[0];
        for pair in g.windows(2) {
            assert_relative_eq!(pair[1] / pair[0], ratio, max_relative = 1e-10);
        }
        assert!(validate_grid(&g).is_ok());
    }

    #[test]
    fn grid_builders_reject_bad_specifications() {
        for bad in [
            linear_grid(2.0f64, 300.0, 1),
            linear_grid(0.0, 300.0, 10),
            linear_grid(300.0, 2.0, 10),
            log_grid(-1.0, 10.0, 10),
            log_grid(10.0, 10.0, 10),
        ] {
            assert!(matches!(bad, Err(Error::InvalidGrid)));
        }
    }
}
