//! Bounded Levenberg-Marquardt fits of the sample model to susceptibility
//! data, and the derived entanglement report.
//!
//! Free parameters are optimized in an internal logistic coordinate that
//! maps the real line onto each parameter's bounding box, so the solver is
//! unconstrained while the model only ever sees in-range values. The
//! Jacobian is taken by central finite differences in those coordinates;
//! damping follows the classic Marquardt schedule (scale the normal-matrix
//! diagonal, grow tenfold on rejection, shrink tenfold on acceptance).

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dataset::{fmt12, DataSet};
use crate::error::{Error, Result};
use crate::scalar::{lift, lower, Real};
use crate::spin::SpinValue;
use crate::thermo::{chi_model, curie_constant, log_grid, ModelParams};
use crate::witness::{entanglement_temperature, te_empirical, witness_curve, WitnessPoint};

/// Quantity the residuals are formed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitObjective {
    /// Fit χ(T) directly.
    Chi,
    /// Fit χ(T)·T, which weights the high-temperature tail where the
    /// witness lives; the default.
    #[default]
    ChiTimesT,
}

/// Which model parameters the fit may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreeParams {
    pub g: bool,
    pub j_k: bool,
    pub rho: bool,
}

impl Default for FreeParams {
    fn default() -> Self {
        FreeParams {
            g: true,
            j_k: true,
            rho: true,
        }
    }
}

/// Closed interval a parameter is confined to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound<R: Real> {
    pub lo: R,
    pub hi: R,
}

/// Per-parameter boxes; the defaults cover every physically plausible
/// dimer in this family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitBounds<R: Real> {
    pub g: Bound<R>,
    pub j_k: Bound<R>,
    pub rho: Bound<R>,
}

impl<R: Real> Default for FitBounds<R> {
    fn default() -> Self {
        FitBounds {
            g: Bound {
                lo: lift(1.0),
                hi: lift(3.0),
            },
            j_k: Bound {
                lo: lift(-5000.0),
                hi: lift(5000.0),
            },
            rho: Bound {
                lo: lift(0.0),
                hi: lift(0.2),
            },
        }
    }
}

/// Everything a fit needs besides the data.
#[derive(Clone, Copy, Debug)]
pub struct FitConfig<R: Real> {
    /// Starting point; also supplies the spin and the fixed parameters.
    pub initial: ModelParams<R>,
    pub free: FreeParams,
    pub objective: FitObjective,
    pub bounds: FitBounds<R>,
    /// Stop when an accepted step improves the weighted SSE by less than
    /// this fraction.
    pub sse_tol: R,
    /// Stop when the internal-coordinate step shrinks below
    /// `step_tol * (1 + |theta|)`.
    pub step_tol: R,
    pub max_iter: usize,
}

impl<R: Real> FitConfig<R> {
    pub fn new(initial: ModelParams<R>) -> Self {
        FitConfig {
            initial,
            free: FreeParams::default(),
            objective: FitObjective::default(),
            bounds: FitBounds::default(),
            sse_tol: lift(1e-10),
            step_tol: lift(1e-13),
            max_iter: 200,
        }
    }
}

/// One-sigma uncertainties of the fitted parameters, from the linearized
/// covariance at the optimum; `None` for parameters that were held fixed
/// (or when the covariance is unavailable).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdErrors<R: Real> {
    pub g: Option<R>,
    pub j_k: Option<R>,
    pub rho: Option<R>,
}

impl<R: Real> Default for StdErrors<R> {
    fn default() -> Self {
        StdErrors {
            g: None,
            j_k: None,
            rho: None,
        }
    }
}

/// Outcome of a fit. `converged = false` with `iterations = max_iter`
/// means the schedule ran out, not that the numbers are garbage; the
/// caller decides how harshly to treat it.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<R: Real> {
    pub params: ModelParams<R>,
    /// Weighted sum of squared residuals at the optimum.
    pub sse: R,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted residuals (model minus data) at the optimum, in data order.
    pub residuals: Vec<R>,
    pub std_errors: StdErrors<R>,
    /// Weighted SSE after each accepted step, starting from the initial
    /// guess; never increasing.
    pub sse_trace: Vec<R>,
}

const PARAM_G: usize = 0;
const PARAM_J: usize = 1;
const PARAM_RHO: usize = 2;

fn get_param<R: Real>(p: &ModelParams<R>, which: usize) -> R {
    match which {
        PARAM_G => p.g,
        PARAM_J => p.j_k,
        _ => p.rho,
    }
}

fn set_param<R: Real>(p: &mut ModelParams<R>, which: usize, value: R) {
    match which {
        PARAM_G => p.g = value,
        PARAM_J => p.j_k = value,
        _ => p.rho = value,
    }
}

/// Largest internal coordinate the solver may visit. At 20 the logistic
/// sits within 2e-9 of its rail — indistinguishable from the bound for the
/// model — while its slope is still far from underflow, so no Jacobian
/// column ever collapses to exact zero and saturated parameters can come
/// back.
const THETA_SATURATION: f64 = 20.0;

fn logistic<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

fn to_external<R: Real>(theta: R, b: Bound<R>) -> R {
    b.lo + (b.hi - b.lo) * logistic(theta)
}

/// Inverse of `to_external`; values at or beyond a bound are pulled a
/// relative 1e-4 of the box width inside so the logarithm stays finite.
fn to_internal<R: Real>(value: R, b: Bound<R>) -> R {
    let margin = lift::<R>(1e-4) * (b.hi - b.lo);
    let v = value.max(b.lo + margin).min(b.hi - margin);
    ((v - b.lo) / (b.hi - v)).ln()
}

fn external_slope<R: Real>(theta: R, b: Bound<R>) -> R {
    let s = logistic(theta);
    (b.hi - b.lo) * s * (R::one() - s)
}

struct Problem<'a, R: Real> {
    data: &'a DataSet<R>,
    base: ModelParams<R>,
    slots: Vec<(usize, Bound<R>)>,
    objective: FitObjective,
    /// Observed values in objective space.
    targets: Vec<R>,
    /// 1/sigma in objective space (all ones for unweighted data).
    weights: Vec<R>,
}

impl<'a, R: Real> Problem<'a, R> {
    fn params_from(&self, theta: &DVector<R>) -> ModelParams<R> {
        let mut p = self.base;
        for (k, &(which, bound)) in self.slots.iter().enumerate() {
            set_param(&mut p, which, to_external(theta[k], bound));
        }
        p
    }

    fn residuals(&self, theta: &DVector<R>) -> Result<(DVector<R>, R)> {
        let p = self.params_from(theta);
        let mut r = DVector::zeros(self.data.len());
        for (i, point) in self.data.points.iter().enumerate() {
            let mut model = chi_model(point.t_k, &p)?;
            if self.objective == FitObjective::ChiTimesT {
                model *= point.t_k;
            }
            r[i] = (model - self.targets[i]) * self.weights[i];
        }
        let sse = r.norm_squared();
        Ok((r, sse))
    }

    fn jacobian(&self, theta: &DVector<R>) -> Result<DMatrix<R>> {
        let mut jac = DMatrix::zeros(self.data.len(), self.slots.len());
        for k in 0..self.slots.len() {
            let h = lift::<R>(1e-6) * theta[k].abs().max(R::one());
            let mut plus = theta.clone();
            plus[k] += h;
            let mut minus = theta.clone();
            minus[k] -= h;
            let (rp, _) = self.residuals(&plus)?;
            let (rm, _) = self.residuals(&minus)?;
            let two_h = h + h;
            jac.set_column(k, &((rp - rm) / two_h));
        }
        Ok(jac)
    }
}

/// Rejects normal matrices that cannot support a meaningful step: a
/// parameter whose full-range swing moves the weighted model by less than
/// about 1e-8 of its own size (below central-difference noise, e.g.
/// fitting `rho` when the dimer and impurity terms are the same Curie
/// law), or a parameter pair correlated beyond condition number 1e13.
/// `model_scale_sq` is the squared norm of the weighted data/model values.
fn reject_singular<R: Real>(a: &DMatrix<R>, model_scale_sq: R) -> Result<()> {
    let p = a.nrows();
    let floor = model_scale_sq.max(lift(1e-300)) * lift::<R>(1e-16);
    let mut scale = DVector::zeros(p);
    for k in 0..p {
        let akk = a[(k, k)];
        if !akk.is_finite() || akk <= floor {
            return Err(Error::SingularNormalMatrix);
        }
        scale[k] = R::one() / akk.sqrt();
    }
    let mut b = a.clone();
    for i in 0..p {
        for j in 0..p {
            b[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eigen = b.symmetric_eigen().eigenvalues;
    let mut min = R::max_value().unwrap();
    let mut max = R::zero();
    for k in 0..p {
        let e = eigen[k].abs();
        min = min.min(e);
        max = max.max(e);
    }
    if max.partial_cmp(&R::zero()) != Some(std::cmp::Ordering::Greater) || min / max < lift(1e-13) {
        return Err(Error::SingularNormalMatrix);
    }
    Ok(())
}

fn build_problem<'a, R: Real>(
    data: &'a DataSet<R>,
    config: &FitConfig<R>,
) -> Result<Problem<'a, R>> {
    let mut slots = Vec::new();
    if config.free.g {
        slots.push((PARAM_G, config.bounds.g));
    }
    if config.free.j_k {
        slots.push((PARAM_J, config.bounds.j_k));
    }
    if config.free.rho {
        slots.push((PARAM_RHO, config.bounds.rho));
    }
    if slots.is_empty() {
        return Err(Error::InvalidParams(
            "at least one of g, J, rho must be free".to_string(),
        ));
    }
    for &(_, b) in &slots {
        if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
            return Err(Error::InvalidParams(format!(
                "bound [{}, {}] is not a finite non-empty interval",
                lower(b.lo),
                lower(b.hi)
            )));
        }
    }
    if config.free.g && config.bounds.g.lo <= R::zero() {
        return Err(Error::InvalidParams(
            "g bounds must be positive".to_string(),
        ));
    }
    if config.free.rho && (config.bounds.rho.lo < R::zero() || config.bounds.rho.hi > R::one()) {
        return Err(Error::InvalidParams(
            "rho bounds must lie within [0, 1]".to_string(),
        ));
    }
    for &(which, b) in &slots {
        let v = get_param(&config.initial, which);
        if v < b.lo || v > b.hi {
            return Err(Error::InvalidParams(format!(
                "initial value {} lies outside its bounds [{}, {}]",
                lower(v),
                lower(b.lo),
                lower(b.hi)
            )));
        }
    }
    if data.len() < 4 || data.len() <= slots.len() {
        return Err(Error::InsufficientData {
            points: data.len(),
            free: slots.len(),
        });
    }
    let mut targets = Vec::with_capacity(data.len());
    let mut weights = Vec::with_capacity(data.len());
    for point in &data.points {
        let (y, s) = match config.objective {
            FitObjective::Chi => (point.chi, point.sigma),
            FitObjective::ChiTimesT => (point.chi * point.t_k, point.sigma.map(|s| s * point.t_k)),
        };
        targets.push(y);
        weights.push(s.map_or(R::one(), |s| R::one() / s));
    }
    Ok(Problem {
        data,
        base: config.initial,
        slots,
        objective: config.objective,
        targets,
        weights,
    })
}

fn covariance_errors<R: Real>(
    problem: &Problem<'_, R>,
    theta: &DVector<R>,
    sse: R,
) -> StdErrors<R> {
    let mut out = StdErrors::default();
    let n = problem.data.len();
    let p = problem.slots.len();
    if n <= p {
        return out;
    }
    let Ok(jac) = problem.jacobian(theta) else {
        return out;
    };
    let normal = jac.transpose() * &jac;
    let Some(inverse) = Cholesky::new(normal).map(|c| c.inverse()) else {
        return out;
    };
    let s2 = sse / lift::<R>((n - p) as f64);
    for (k, &(which, bound)) in problem.slots.iter().enumerate() {
        let var = inverse[(k, k)] * s2;
        if var >= R::zero() && var.is_finite() {
            let sigma = var.sqrt() * external_slope(theta[k], bound);
            match which {
                PARAM_G => out.g = Some(sigma),
                PARAM_J => out.j_k = Some(sigma),
                _ => out.rho = Some(sigma),
            }
        }
    }
    out
}

/// Weighted least-squares fit of the sample model to `data`.
///
/// Errors early on structurally hopeless problems (no free parameters, an
/// initial guess outside its bounds, fewer than four points or no surplus
/// of points over parameters, a singular normal matrix at the starting
/// point); otherwise returns the best point found, with `converged`
/// signalling whether a stopping criterion fired before `max_iter`.
pub fn fit<R: Real>(data: &DataSet<R>, config: &FitConfig<R>) -> Result<FitResult<R>> {
    let problem = build_problem(data, config)?;
    let mut theta = DVector::zeros(problem.slots.len());
    for (k, &(which, bound)) in problem.slots.iter().enumerate() {
        theta[k] = to_internal(get_param(&config.initial, which), bound);
    }

    let (mut residuals, mut sse) = problem.residuals(&theta)?;
    let mut trace = vec![sse];
    let mut lambda: R = lift(1e-3);
    let lambda_min: R = lift(1e-12);
    let lambda_max: R = lift(1e12);
    let tiny: R = lift(1e-300);
    let mut converged = sse == R::zero();
    let mut iterations = 0;

    while !converged && iterations < config.max_iter {
        iterations += 1;
        let jac = problem.jacobian(&theta)?;
        let normal = jac.transpose() * &jac;
        let gradient = jac.transpose() * &residuals;
        if iterations == 1 {
            // Weighted model values at the start, reconstructed from the
            // residuals; they set the scale a Jacobian column must clear.
            let mut model_scale_sq = R::zero();
            for i in 0..problem.data.len() {
                let wy = problem.targets[i] * problem.weights[i];
                let wm = residuals[i] + wy;
                let m = wy.abs().max(wm.abs());
                model_scale_sq += m * m;
            }
            reject_singular(&normal, model_scale_sq)?;
        }

        // Floor for the damping term so a direction whose curvature has
        // gone numerically flat still yields a positive-definite system.
        let diag_floor =
            normal.trace() * lift::<R>(1e-14) / lift::<R>(problem.slots.len() as f64) + tiny;

        let mut accepted = false;
        while lambda <= lambda_max {
            let mut damped = normal.clone();
            for k in 0..problem.slots.len() {
                damped[(k, k)] = normal[(k, k)] * (R::one() + lambda) + lambda * diag_floor;
            }
            let step = Cholesky::new(damped).map(|c| c.solve(&(-&gradient)));
            let Some(step) = step else {
                lambda *= lift::<R>(10.0);
                continue;
            };
            let mut trial = &theta + &step;
            for k in 0..trial.len() {
                trial[k] = trial[k]
                    .max(lift(-THETA_SATURATION))
                    .min(lift(THETA_SATURATION));
            }
            let taken = &trial - &theta;
            let (trial_residuals, trial_sse) = problem.residuals(&trial)?;
            if trial_sse.is_finite() && trial_sse <= sse {
                let improvement = sse - trial_sse;
                theta = trial;
                residuals = trial_residuals;
                sse = trial_sse;
                trace.push(sse);
                lambda = (lambda / lift::<R>(10.0)).max(lambda_min);
                accepted = true;
                if sse == R::zero()
                    || improvement <= config.sse_tol * sse.max(tiny)
                    || taken.norm() <= config.step_tol * (R::one() + theta.norm())
                {
                    converged = true;
                }
                break;
            }
            lambda *= lift::<R>(10.0);
        }
        if !accepted {
            break; // no downhill step even under maximal damping
        }
    }

    let std_errors = covariance_errors(&problem, &theta, sse);
    Ok(FitResult {
        params: problem.params_from(&theta),
        sse,
        iterations,
        converged,
        residuals: residuals.iter().copied().collect(),
        std_errors,
        sse_trace: trace,
    })
}

/// High-temperature asymptote of χ·T for the fitted model,
/// `(1-rho)·2C(g, S̄) + rho·2C(g_i, 5/2)` in μB·K/Oe.
pub fn curie_asymptote<R: Real>(p: &ModelParams<R>) -> R {
    let two: R = lift(2.0);
    let impurity = SpinValue::from_twice(5).expect("5/2 is a valid spin");
    (R::one() - p.rho) * two * curie_constant(p.g, p.s_bar)
        + p.rho * two * curie_constant(p.impurity_g, impurity)
}

/// Fit plus the physics read off the fitted model.
#[derive(Clone, Debug)]
pub struct Report<R: Real> {
    pub fit: FitResult<R>,
    /// Zero crossing of the witness, if one exists below the search
    /// ceiling.
    pub te_numeric_k: Option<R>,
    /// The 0.45(2S̄+1)|J| rule of thumb evaluated at the fitted J.
    pub te_empirical_k: R,
    pub curie_asymptote: R,
    /// Witness on a 200-point log grid spanning the data range, stretched
    /// past the entanglement temperature when one exists.
    pub witness_curve: Vec<WitnessPoint<R>>,
    pub notes: Vec<String>,
}

/// Fits `data` and derives the witness curve, entanglement temperature,
/// and Curie asymptote from the fitted parameters.
pub fn analyze<R: Real>(data: &DataSet<R>, config: &FitConfig<R>) -> Result<Report<R>> {
    let fit_result = fit(data, config)?;
    let params = fit_result.params;
    let te = match entanglement_temperature(&params) {
        Ok(result) => Some(result),
        Err(Error::NoEntanglementTemperature) => None,
        Err(other) => return Err(other),
    };
    let te_emp = te_empirical(params.j_k, params.s_bar);

    let t_lo = data.points[0].t_k;
    let mut t_hi = data.points[data.len() - 1].t_k;
    let landmark = te.map(|r| r.te_k).unwrap_or_else(|| te_emp.abs());
    if landmark > R::zero() {
        t_hi = t_hi.max(lift::<R>(1.5) * landmark);
    }
    if t_hi <= t_lo {
        t_hi = t_lo * lift::<R>(10.0);
    }
    let grid = log_grid(t_lo, t_hi, 200)?;
    let curve = witness_curve(&params, &grid)?;

    let mut notes = Vec::new();
    if lower(params.rho) > 1e-3 {
        notes.push(format!(
            "low-temperature chi*T plateau consistent with an uncoupled impurity fraction rho = {:.3e}",
            lower(params.rho)
        ));
    } else {
        notes.push("no appreciable low-temperature chi*T plateau (rho <= 1e-3)".to_string());
    }
    match &te {
        Some(result) => notes.push(format!(
            "witness crosses zero at {} K",
            fmt12(lower(result.te_k))
        )),
        None => notes.push(
            "witness never goes negative below 1e6 K; no entanglement temperature".to_string(),
        ),
    }
    if !fit_result.converged {
        notes.push("fit stopped at the iteration cap without meeting tolerances".to_string());
    }

    Ok(Report {
        fit: fit_result,
        te_numeric_k: te.map(|r| r.te_k),
        te_empirical_k: te_emp,
        curie_asymptote: curie_asymptote(&params),
        witness_curve: curve,
        notes,
    })
}

fn json_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

impl<R: Real> Report<R> {
    /// Renders the report as JSON with a fixed key order and 12
    /// significant digits, so identical inputs yield byte-identical files.
    pub fn to_json(&self) -> String {
        let num = |x: R| fmt12(lower(x));
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(
            out,
            "  \"params\": {{\"g\": {}, \"j_K\": {}, \"rho\": {}}},",
            num(self.fit.params.g),
            num(self.fit.params.j_k),
            num(self.fit.params.rho)
        );
        let _ = writeln!(out, "  \"sse\": {},", num(self.fit.sse));
        let _ = writeln!(out, "  \"converged\": {},", self.fit.converged);
        let _ = writeln!(out, "  \"iterations\": {},", self.fit.iterations);
        match self.te_numeric_k {
            Some(te) => {
                let _ = writeln!(out, "  \"te_numeric_K\": {},", num(te));
            }
            None => out.push_str("  \"te_numeric_K\": null,\n"),
        }
        let _ = writeln!(out, "  \"te_empirical_K\": {},", num(self.te_empirical_k));
        let _ = writeln!(out, "  \"curie_asymptote\": {},", num(self.curie_asymptote));
        out.push_str("  \"witness_curve\": [\n");
        for (i, point) in self.witness_curve.iter().enumerate() {
            let comma = if i + 1 < self.witness_curve.len() {
                ","
            } else {
                ""
            };
            let _ = writeln!(out, "    [{}, {}]{}", num(point.t_k), num(point.w), comma);
        }
        out.push_str("  ],\n");
        out.push_str("  \"notes\": [\n");
        for (i, note) in self.notes.iter().enumerate() {
            let comma = if i + 1 < self.notes.len() { "," } else { "" };
            let _ = writeln!(out, "    \"{}\"{}", json_escape(note), comma);
        }
        out.push_str("  ]\n}\n");
        out
    }
}
