//! Measured or synthetic susceptibility datasets.
//!
//! The on-disk format is a small CSV dialect: a mandatory header line
//! `temperature_K,chi` or `temperature_K,chi,sigma`, one sample per row,
//! `#`-prefixed comment lines and blank lines ignored anywhere. The chi
//! column is the per-dimer susceptibility in μB/Oe unless the caller asks
//! for molar emu units, which are divided by N_A·μB on load. Rows are
//! sorted by temperature at ingestion; duplicate temperatures are rejected.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::emu_per_mol_per_mu_b_oe;
use crate::error::{Error, Result};
use crate::scalar::{lift, lower, Real};
use crate::thermo::{chi_model, validate_grid, ModelParams};

/// Units of the chi column of an input file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChiUnits {
    /// Susceptibility per dimer in μB/Oe (the native unit of the model).
    #[default]
    MuBPerOe,
    /// Molar susceptibility in emu/mol; converted on load.
    EmuPerMol,
}

/// One susceptibility sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataPoint<R: Real> {
    pub t_k: R,
    pub chi: R,
    /// One-sigma uncertainty of `chi`, if the file carried one.
    pub sigma: Option<R>,
}

/// A susceptibility dataset with strictly increasing temperatures.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet<R: Real> {
    pub points: Vec<DataPoint<R>>,
}

/// Formats a number with 12 significant digits, the fixed precision of
/// every file this crate emits; output is stable across runs and platforms.
pub fn fmt12(value: f64) -> String {
    format!("{:.11e}", value)
}

const HEADER_PLAIN: &str = "temperature_K,chi";
const HEADER_SIGMA: &str = "temperature_K,chi,sigma";

fn parse_field(path: &str, line: usize, name: &str, text: &str) -> Result<f64> {
    let value: f64 = text.trim().parse().map_err(|_| Error::MalformedRow {
        path: path.to_string(),
        line,
        reason: format!("cannot parse {name} value {text:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            path: path.to_string(),
            line,
            reason: format!("{name} must be finite, got {value}"),
        });
    }
    Ok(value)
}

impl<R: Real> DataSet<R> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses CSV text; `path` is used only to label errors.
    pub fn from_csv_str(text: &str, units: ChiUnits, path: &str) -> Result<Self> {
        let mut rows: Vec<(usize, DataPoint<R>)> = Vec::new();
        let mut with_sigma: Option<bool> = None;
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw.trim_end(); // tolerate CRLF line endings
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some(sigma_header) = with_sigma else {
                with_sigma = match trimmed {
                    HEADER_PLAIN => Some(false),
                    HEADER_SIGMA => Some(true),
                    _ => {
                        return Err(Error::MalformedRow {
                            path: path.to_string(),
                            line,
                            reason: format!(
                            "expected header {HEADER_PLAIN:?} or {HEADER_SIGMA:?}, got {trimmed:?}"
                        ),
                        })
                    }
                };
                continue;
            };
            let fields: Vec<&str> = trimmed.split(',').collect();
            let expected = if sigma_header { 3 } else { 2 };
            if fields.len() != expected {
                return Err(Error::MalformedRow {
                    path: path.to_string(),
                    line,
                    reason: format!("expected {expected} fields, got {}", fields.len()),
                });
            }
            let t_k = parse_field(path, line, "temperature", fields[0])?;
            if t_k <= 0.0 {
                return Err(Error::NonPositiveTemperatureRow {
                    path: path.to_string(),
                    line,
                    t_k,
                });
            }
            let mut chi = parse_field(path, line, "chi", fields[1])?;
            if chi < 0.0 {
                return Err(Error::MalformedRow {
                    path: path.to_string(),
                    line,
                    reason: format!("chi must be non-negative, got {chi}"),
                });
            }
            let mut sigma = if sigma_header {
                let s = parse_field(path, line, "sigma", fields[2])?;
                if s <= 0.0 {
                    return Err(Error::MalformedRow {
                        path: path.to_string(),
                        line,
                        reason: format!("sigma must be positive, got {s}"),
                    });
                }
                Some(s)
            } else {
                None
            };
            if units == ChiUnits::EmuPerMol {
                let scale = emu_per_mol_per_mu_b_oe::<f64>();
                chi /= scale;
                sigma = sigma.map(|s| s / scale);
            }
            rows.push((
                line,
                DataPoint {
                    t_k: lift(t_k),
                    chi: lift(chi),
                    sigma: sigma.map(lift),
                },
            ));
        }
        if with_sigma.is_none() || rows.is_empty() {
            return Err(Error::EmptyDataset {
                path: path.to_string(),
            });
        }
        rows.sort_by(|a, b| a.1.t_k.partial_cmp(&b.1.t_k).unwrap());
        for pair in rows.windows(2) {
            if pair[0].1.t_k == pair[1].1.t_k {
                return Err(Error::DuplicateTemperature {
                    path: path.to_string(),
                    line: pair[0].0.max(pair[1].0),
                    t_k: lower(pair[1].1.t_k),
                });
            }
        }
        Ok(DataSet {
            points: rows.into_iter().map(|(_, p)| p).collect(),
        })
    }

    /// Loads a CSV file from disk.
    pub fn load_csv(path: &Path, units: ChiUnits) -> Result<Self> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: label.clone(),
            source,
        })?;
        Self::from_csv_str(&text, units, &label)
    }

    /// Renders the dataset in the same CSV dialect `load_csv` reads, chi in
    /// μB/Oe, 12 significant digits per value.
    pub fn to_csv_string(&self) -> String {
        let with_sigma = self.points.iter().any(|p| p.sigma.is_some());
        let mut out = String::new();
        out.push_str(if with_sigma {
            HEADER_SIGMA
        } else {
            HEADER_PLAIN
        });
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{},{}", fmt12(lower(p.t_k)), fmt12(lower(p.chi)));
            if with_sigma {
                let _ = write!(out, ",{}", fmt12(lower(p.sigma.unwrap_or(R::zero()))));
            }
            out.push('\n');
        }
        out
    }
}

/// Uniform draw on (0, 1] with 53 random bits.
fn uniform_open_closed(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    1.0 - u // avoid 0 so the Box-Muller logarithm stays finite
}

/// One standard normal draw via the Box-Muller transform.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform_open_closed(rng);
    let u2 = uniform_open_closed(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Evaluates the sample model on `grid` and perturbs each point with
/// multiplicative Gaussian noise of relative width `noise_rel`. The draw is
/// fully determined by `seed`. With noise the per-point sigma column is set
/// to `noise_rel` times the noiseless model; with `noise_rel = 0` the data
/// are exact and carry no sigma.
pub fn synthesize<R: Real>(
    p: &ModelParams<R>,
    grid: &[R],
    noise_rel: f64,
    seed: u64,
) -> Result<DataSet<R>> {
    validate_grid(grid)?;
    if !(noise_rel.is_finite() && noise_rel >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "noise_rel must be finite and non-negative, got {noise_rel}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        let model = chi_model(t, p)?;
        let (chi, sigma) = if noise_rel > 0.0 {
            let z = standard_normal(&mut rng);
            let noisy = lower(model) * (1.0 + noise_rel * z);
            (lift(noisy), Some(lift::<R>(noise_rel) * model))
        } else {
            (model, None)
        };
        points.push(DataPoint { t_k: t, chi, sigma });
    }
    Ok(DataSet { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinValue;
    use approx::assert_relative_eq;

    fn paper_params() -> ModelParams<f64> {
        ModelParams::new(1.8, -282.0, 0.01, "5/2".parse::<SpinValue>().unwrap()).unwrap()
    }

    #[test]
    fn parses_a_plain_two_column_file() {
        let text = "temperature_K,chi\n10.0,1.5e-6\n20.0,2.5e-6\n";
        let d: DataSet<f64> = DataSet::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.points[0].t_k, 10.0);
        assert_eq!(d.points[1].chi, 2.5e-6);
        assert!(d.points.iter().all(|p| p.sigma.is_none()));
    }

    #[test]
    fn parses_sigma_column_comments_blanks_and_crlf() {
        let text = "# synthetic sweep\r\n\r\ntemperature_K,chi,sigma\r\n30, 3e-6, 1e-8\r\n# midway note\n10,1e-6,2e-8\r\n";
        let d: DataSet<f64> = DataSet::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv").unwrap();
        assert_eq!(d.len(), 2);
        // Rows come back sorted by temperature.
        assert_eq!(d.points[0].t_k, 10.0);
        assert_eq!(d.points[0].sigma, Some(2e-8));
        assert_eq!(d.points[1].t_k, 30.0);
    }

    #[test]
    fn molar_units_are_rescaled_on_load() {
        let text = "temperature_K,chi,sigma\n100.0,5584.9394,55.849394\n";
        let d: DataSet<f64> = DataSet::from_csv_str(text, ChiUnits::EmuPerMol, "x.csv").unwrap();
        let scale = emu_per_mol_per_mu_b_oe::<f64>();
        assert_relative_eq!(d.points[0].chi, 5584.9394 / scale, max_relative = 1e-14);
        assert_relative_eq!(
            d.points[0].sigma.unwrap(),
            55.849394 / scale,
            max_relative = 1e-14
        );
        // The constant itself is about 5585 emu/mol per μB/Oe, so this row
        // is close to one Bohr magneton per oersted.
        assert_relative_eq!(d.points[0].chi, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn header_is_mandatory_and_exact() {
        let missing: Result<DataSet<f64>> =
            DataSet::from_csv_str("10.0,1e-6\n", ChiUnits::MuBPerOe, "x.csv");
        assert!(matches!(missing, Err(Error::MalformedRow { line: 1, .. })));
        let wrong: Result<DataSet<f64>> =
            DataSet::from_csv_str("T,chi\n10.0,1e-6\n", ChiUnits::MuBPerOe, "x.csv");
        assert!(matches!(wrong, Err(Error::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn malformed_rows_carry_path_and_line() {
        let text = "temperature_K,chi\n10.0,1e-6\nnot-a-number,2e-6\n";
        let err =
            DataSet::<f64>::from_csv_str(text, ChiUnits::MuBPerOe, "data/run.csv").unwrap_err();
        match &err {
            Error::MalformedRow { path, line, .. } => {
                assert_eq!(path, "data/run.csv");
                assert_eq!(*line, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().contains("data/run.csv"));
        assert!(err.to_string().contains('3'));
    }

    #[test]
    fn field_arity_must_match_the_header() {
        let text = "temperature_K,chi\n10.0,1e-6,3e-8\n";
        assert!(matches!(
            DataSet::<f64>::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn non_positive_temperatures_and_sigmas_are_rejected() {
        let t0 = "temperature_K,chi\n0.0,1e-6\n";
        assert!(matches!(
            DataSet::<f64>::from_csv_str(t0, ChiUnits::MuBPerOe, "x.csv"),
            Err(Error::NonPositiveTemperatureRow { line: 2, .. })
        ));
        let s0 = "temperature_K,chi,sigma\n10.0,1e-6,0.0\n";
        assert!(matches!(
            DataSet::<f64>::from_csv_str(s0, ChiUnits::MuBPerOe, "x.csv"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn negative_chi_is_rejected() {
        let text = "temperature_K,chi\n10.0,-1e-6\n";
        assert!(matches!(
            DataSet::<f64>::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_temperatures_are_rejected_with_the_later_line() {
        let text = "temperature_K,chi\n20.0,2e-6\n10.0,1e-6\n20.0,3e-6\n";
        assert!(matches!(
            DataSet::<f64>::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv"),
            Err(Error::DuplicateTemperature { line: 4, .. })
        ));
    }

    #[test]
    fn files_with_no_data_rows_are_empty() {
        for text in ["", "# only a comment\n", "temperature_K,chi\n# no rows\n"] {
            assert!(matches!(
                DataSet::<f64>::from_csv_str(text, ChiUnits::MuBPerOe, "x.csv"),
                Err(Error::EmptyDataset { .. })
            ));
        }
    }

    #[test]
    fn missing_files_report_the_path() {
        let err = DataSet::<f64>::load_csv(Path::new("/no/such/file.csv"), ChiUnits::MuBPerOe)
            .unwrap_err();
        match &err {
            Error::Io { path, .. } => assert_eq!(path, "/no/such/file.csv"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn synthesis_is_deterministic_in_the_seed() {
        let grid: Vec<f64> = (1..=150).map(|i| 2.0 * i as f64).collect();
        let a = synthesize(&paper_params(), &grid, 0.01, 42).unwrap();
        let b = synthesize(&paper_params(), &grid, 0.01, 42).unwrap();
        let c = synthesize(&paper_params(), &grid, 0.01, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().zip(&c.points).any(|(x, y)| x.chi != y.chi));
    }

    #[test]
    fn zero_noise_synthesis_is_the_exact_model_without_sigma() {
        let grid = [2.0, 150.0, 300.0];
        let d = synthesize(&paper_params(), &grid, 0.0, 7).unwrap();
        for p in &d.points {
            assert_eq!(p.chi, chi_model(p.t_k, &paper_params()).unwrap());
            assert_eq!(p.sigma, None);
        }
    }

    #[test]
    fn noisy_synthesis_has_the_advertised_spread_and_sigma() {
        let grid: Vec<f64> = (1..=400).map(|i| 1.0 + i as f64).collect();
        let noise = 0.01;
        let d = synthesize(&paper_params(), &grid, noise, 2024).unwrap();
        let p = paper_params();
        let z: Vec<f64> = d
            .points
            .iter()
            .map(|pt| {
                let model = chi_model(pt.t_k, &p).unwrap();
                assert_relative_eq!(pt.sigma.unwrap(), noise * model, max_relative = 1e-14);
                (pt.chi / model - 1.0) / noise
            })
            .collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
        assert!(mean.abs() < 0.25, "standardized mean {mean}");
        assert!(
            (0.7..1.3).contains(&var.sqrt()),
            "standardized width {}",
            var.sqrt()
        );
    }

    #[test]
    fn csv_round_trip_preserves_values_to_emitted_precision() {
        let grid: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        let d = synthesize(&paper_params(), &grid, 0.02, 5).unwrap();
        let text = d.to_csv_string();
        assert!(text.starts_with("temperature_K,chi,sigma\n"));
        let back: DataSet<f64> = DataSet::from_csv_str(&text, ChiUnits::MuBPerOe, "mem").unwrap();
        assert_eq!(back.len(), d.len());
        for (x, y) in d.points.iter().zip(&back.points) {
            assert_relative_eq!(x.t_k, y.t_k, max_relative = 1e-11);
            assert_relative_eq!(x.chi, y.chi, max_relative = 1e-11);
            assert_relative_eq!(x.sigma.unwrap(), y.sigma.unwrap(), max_relative = 1e-11);
        }
    }

    #[test]
    fn fmt12_is_fixed_width_scientific() {
        assert_eq!(fmt12(1.272518e-3), "1.27251800000e-3");
        assert_eq!(fmt12(-761.4), "-7.61400000000e2");
        assert_eq!(fmt12(0.0), "0.00000000000e0");
    }
}
