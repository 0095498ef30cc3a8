//! The whole stack is generic over the scalar; exercise it at f32 (with
//! tolerances matched to single precision) and spot-check that the f64
//! aliases are the same types.

use nalgebra::ComplexField;
use spindimer::fit::{fit, FitConfig};
use spindimer::spin::{diagonalize, dimer_hamiltonian, multiplet_spectrum, SpinValue};
use spindimer::thermo::{chi_dimer, linear_grid, ModelParams};
use spindimer::witness::{entanglement_temperature, witness_value};
use spindimer::{synthesize, ModelParams64};

fn spin(text: &str) -> SpinValue {
    text.parse().unwrap()
}

#[test]
fn single_precision_spectrum_is_still_exact() {
    let spec = multiplet_spectrum::<f32>(spin("5/2"), spin("5/2"), -282.0f32);
    let energies: Vec<f32> = spec.multiplets.iter().map(|m| m.energy_k).collect();
    assert_eq!(energies, vec![0.0, 282.0, 846.0, 1692.0, 2820.0, 4230.0]);
}

#[test]
fn single_precision_diagonalization_reproduces_the_hamiltonian() {
    let h = dimer_hamiltonian::<f32>(spin("3/2"), spin("3/2"), -100.0, 5e3, 1.9).unwrap();
    let (vals, vecs) = diagonalize(&h).unwrap();
    let rebuilt = &vecs
        * nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_iterator(vals.len(), vals.iter().copied())
                .map(|v| nalgebra::Complex::new(v, 0.0f32)),
        )
        * vecs.adjoint();
    let dev = (&h - rebuilt).map(|c| c.modulus()).max();
    assert!(dev < 1e-3, "reconstruction deviation {dev}");
}

#[test]
fn susceptibility_agrees_across_precisions() {
    for t in [2.0, 50.0, 300.0, 5000.0] {
        let wide = chi_dimer(t, 1.8f64, -282.0, spin("5/2")).unwrap();
        let narrow = chi_dimer(t as f32, 1.8f32, -282.0, spin("5/2")).unwrap();
        if wide < 1e-37 {
            // Below the f32 floor the narrow route underflows to zero.
            assert!(narrow.abs() < 1e-37);
            continue;
        }
        assert!(
            ((narrow as f64 - wide) / wide).abs() < 1e-4,
            "chi differs at T={t}: {narrow} vs {wide}"
        );
    }
}

#[test]
fn witness_and_entanglement_temperature_work_at_f32() {
    let p = ModelParams::<f32>::new(1.8, -282.0, 0.01, spin("5/2")).unwrap();
    let w = witness_value(300.0f32, 1e-6, 1.8, 2, spin("5/2")).unwrap();
    assert!(w.is_finite());
    let te = entanglement_temperature(&p).unwrap();
    assert!((te.te_k / 732.0 - 1.0).abs() < 0.05, "te = {}", te.te_k);
}

#[test]
fn a_fit_runs_to_completion_at_f32() {
    let truth = ModelParams::<f32>::new(1.8, -282.0, 0.0, spin("5/2")).unwrap();
    let grid: Vec<f32> = linear_grid(2.0f32, 300.0, 75).unwrap();
    let data = synthesize(&truth, &grid, 0.0, 0).unwrap();
    let start = ModelParams::<f32>::new(2.0, -200.0, 0.0, spin("5/2")).unwrap();
    let mut config = FitConfig::new(start);
    config.free.rho = false;
    // Single precision cannot meet the double-precision defaults.
    config.sse_tol = 1e-5;
    config.step_tol = 1e-5;
    let result = fit(&data, &config).unwrap();
    assert!(
        (result.params.j_k + 282.0).abs() / 282.0 < 0.01,
        "J = {}",
        result.params.j_k
    );
    assert!(
        (result.params.g - 1.8).abs() / 1.8 < 0.01,
        "g = {}",
        result.params.g
    );
}

#[test]
fn f64_aliases_are_the_generic_types() {
    let p: ModelParams64 = ModelParams::new(1.8, -282.0, 0.01, spin("5/2")).unwrap();
    let q: ModelParams<f64> = p;
    assert_eq!(q.g, 1.8);
}
