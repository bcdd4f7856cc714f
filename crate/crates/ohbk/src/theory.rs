//! Convergence-rate machinery for the momentum iteration.
//!
//! The analysis runs through the second-moment matrix of normalized
//! measurement directions,
//!
//! ```text
//! W = E[ phi phi^T / |phi|^2 ],
//! ```
//!
//! a unit-trace PSD matrix whose extreme eigenvalues sigma_min and
//! sigma_max control how fast the iteration contracts. A momentum value
//! beta is admissible when
//!
//! ```text
//! 4 beta + 4 beta^2 - (1 + beta) sigma_min + beta sigma_max < 0,
//! ```
//!
//! in which case the expected squared error is bounded by
//! q^t (1 + delta) |x_0 - x*|^2 with q and delta built from the
//! coefficients of the two-term error recurrence below. For isotropic
//! directions (sphere or standard Gaussian) W = I/n exactly and the
//! condition reduces to beta + beta^2 < 1/(4n).

use thiserror::Error;

use crate::linalg::{LinalgError, SymMatrix};
use crate::solver::DEGENERATE_PHI_NORM_SQ;
use crate::sources::{MeasurementSource, StreamRng};

/// Eigenvalues of an estimated W may stray this far outside [0, 1]
/// before the estimate is rejected instead of clamped.
const SPECTRUM_SLACK: f64 = 1e-10;

/// Estimated W must have unit trace to this tolerance.
const TRACE_TOL: f64 = 1e-12;

/// Slack applied to the recurrence bound check, in log space, so that a
/// mathematically tight bound is not flagged over rounding.
const BOUND_LOG_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("momentum parameter {0} must be finite and non-negative")]
    InvalidBeta(f64),
    #[error("spectrum bounds ({sigma_min}, {sigma_max}) must satisfy 0 <= min <= max <= 1")]
    InvalidSpectrum { sigma_min: f64, sigma_max: f64 },
    #[error("estimated W has eigenvalue {value} outside [0, 1]")]
    SpectrumOutOfBand { value: f64 },
    #[error("estimated W has trace {trace}, expected 1")]
    TraceNotUnit { trace: f64 },
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("collected only {collected} of {requested} usable samples before the stream ended")]
    NotEnoughSamples { requested: usize, collected: usize },
    #[error("recurrence coefficients ({a1}, {a2}) must be finite and non-negative")]
    InvalidCoefficients { a1: f64, a2: f64 },
    #[error("initial value {0} must be finite and non-negative")]
    InvalidInitialValue(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How a [`WEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WSamples {
    /// Exact isotropic form I/n.
    ClosedForm,
    /// Monte Carlo average over this many draws.
    MonteCarlo(usize),
}

/// A validated estimate of W with its extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct WEstimate {
    matrix: SymMatrix,
    samples: WSamples,
    sigma_min: f64,
    sigma_max: f64,
}

impl WEstimate {
    /// Validates `matrix` as a W estimate: eigenvalues within [0, 1] up
    /// to rounding slack and unit trace. Eigenvalues are clamped into
    /// [0, 1] after the check so callers can rely on the bounds exactly.
    pub fn from_matrix(matrix: SymMatrix, samples: WSamples) -> Result<Self, TheoryError> {
        let eigenvalues = matrix.sym_eigenvalues()?;
        let lo = eigenvalues[0];
        let hi = *eigenvalues.last().expect("order is at least 1");
        if lo < -SPECTRUM_SLACK {
            return Err(TheoryError::SpectrumOutOfBand { value: lo });
        }
        if hi > 1.0 + SPECTRUM_SLACK {
            return Err(TheoryError::SpectrumOutOfBand { value: hi });
        }
        let trace = matrix.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(TheoryError::TraceNotUnit { trace });
        }
        Ok(Self {
            matrix,
            samples,
            sigma_min: lo.clamp(0.0, 1.0),
            sigma_max: hi.clamp(0.0, 1.0),
        })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn samples(&self) -> WSamples {
        self.samples
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }
}

/// The exact W for isotropic directions: I/n.
pub fn closed_form_w_isotropic(dim: usize) -> WEstimate {
    assert!(dim > 0, "zero-dimension W");
    let matrix = SymMatrix::identity_scaled(dim, 1.0 / dim as f64);
    WEstimate::from_matrix(matrix, WSamples::ClosedForm).expect("I/n is a valid W")
}

/// Monte Carlo estimate of W from `samples` fresh draws.
///
/// Degenerate draws (|phi|^2 below the solver threshold) are discarded
/// without counting; the attempt budget prevents a pathological source
/// from spinning forever. Each term has unit trace analytically, so the
/// accumulated matrix is rescaled by its own trace at the end to shed
/// rounding drift.
pub fn estimate_w(
    source: &mut MeasurementSource,
    rng: &mut StreamRng,
    samples: usize,
) -> Result<WEstimate, TheoryError> {
    if samples == 0 {
        return Err(TheoryError::ZeroSamples);
    }
    let mut matrix = SymMatrix::zeros(source.dim());
    let weight = 1.0 / samples as f64;
    let mut collected = 0usize;
    let mut attempts = 0usize;
    let budget = samples.saturating_mul(10).saturating_add(1000);
    while collected < samples {
        if attempts >= budget {
            return Err(TheoryError::NotEnoughSamples { requested: samples, collected });
        }
        attempts += 1;
        let Some(phi) = source.next_phi(rng) else {
            return Err(TheoryError::NotEnoughSamples { requested: samples, collected });
        };
        let norm_sq = phi.norm_sq();
        if norm_sq < DEGENERATE_PHI_NORM_SQ {
            continue;
        }
        matrix
            .rank1_accumulate(&phi, weight / norm_sq)
            .expect("weights are finite and dimensions match the source");
        collected += 1;
    }
    let trace = matrix.trace();
    matrix.scale_in_place(1.0 / trace);
    WEstimate::from_matrix(matrix, WSamples::MonteCarlo(samples))
}

/// Left-hand side of the admissibility condition; negative means
/// admissible. Callers are expected to pass validated inputs.
pub fn condition_value(beta: f64, sigma_min: f64, sigma_max: f64) -> f64 {
    4.0 * beta + 4.0 * beta * beta - (1.0 + beta) * sigma_min + beta * sigma_max
}

/// Whether `beta` satisfies the admissibility condition for `w`.
pub fn check_condition(beta: f64, w: &WEstimate) -> Result<bool, TheoryError> {
    Ok(rate_constants(beta, w.sigma_min(), w.sigma_max())?.admissible)
}

/// Contraction factor and overshoot for the error recurrence
/// F_{t+1} <= a1 F_t + a2 F_{t-1}:
///
/// ```text
/// q = (a1 + sqrt(a1^2 + 4 a2)) / 2,   delta = q - a1.
/// ```
///
/// q is the positive root of q^2 = a1 q + a2, and a1 + a2 <= q whenever
/// q <= 1, so q < 1 is exactly the regime where the recurrence contracts.
pub fn rate_from_coefficients(a1: f64, a2: f64) -> (f64, f64) {
    let q = (a1 + (a1 * a1 + 4.0 * a2).sqrt()) / 2.0;
    (q, q - a1)
}

/// All rate quantities for one (beta, spectrum) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub beta: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Coefficient of F_t in the error recurrence.
    pub a1: f64,
    /// Coefficient of F_{t-1} in the error recurrence.
    pub a2: f64,
    pub q: f64,
    pub delta: f64,
    pub condition_value: f64,
    pub admissible: bool,
}

/// Builds the recurrence coefficients and contraction rate for `beta`
/// against a spectrum band.
pub fn rate_constants(beta: f64, sigma_min: f64, sigma_max: f64) -> Result<RateReport, TheoryError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(TheoryError::InvalidBeta(beta));
    }
    if !sigma_min.is_finite()
        || !sigma_max.is_finite()
        || sigma_min < 0.0
        || sigma_min > sigma_max
        || sigma_max > 1.0
    {
        return Err(TheoryError::InvalidSpectrum { sigma_min, sigma_max });
    }
    let a1 = 1.0 + 2.0 * beta * beta + 3.0 * beta - (1.0 + beta) * sigma_min;
    let a2 = 2.0 * beta * beta + beta + beta * sigma_max;
    let (q, delta) = rate_from_coefficients(a1, a2);
    let condition = condition_value(beta, sigma_min, sigma_max);
    Ok(RateReport {
        beta,
        sigma_min,
        sigma_max,
        a1,
        a2,
        q,
        delta,
        condition_value: condition,
        admissible: condition < 0.0,
    })
}

/// Largest admissible beta for an isotropic W = I/n, the positive root
/// of beta^2 + beta = 1/(4n). Written in rationalized form to avoid the
/// cancellation in (-1 + sqrt(1 + 1/n)) / 2 at large n.
pub fn max_beta_isotropic(dim: usize) -> f64 {
    assert!(dim > 0, "zero-dimension W");
    let c = 1.0 / (4.0 * dim as f64);
    2.0 * c / (1.0 + (1.0 + 4.0 * c).sqrt())
}

/// Largest admissible beta for a general spectrum band: the positive
/// root of 4 b^2 + (4 - sigma_min + sigma_max) b - sigma_min = 0.
pub fn max_beta_for_spectrum(sigma_min: f64, sigma_max: f64) -> Result<f64, TheoryError> {
    if !sigma_min.is_finite()
        || !sigma_max.is_finite()
        || sigma_min < 0.0
        || sigma_min > sigma_max
        || sigma_max > 1.0
    {
        return Err(TheoryError::InvalidSpectrum { sigma_min, sigma_max });
    }
    let b = 4.0 - sigma_min + sigma_max;
    Ok(2.0 * sigma_min / (b + (b * b + 16.0 * sigma_min).sqrt()))
}

/// The guaranteed envelope q^t (1 + delta) |x_0 - x*|^2.
pub fn error_bound(t: usize, q: f64, delta: f64, initial_error_sq: f64) -> f64 {
    q.powi(t.min(i32::MAX as usize) as i32) * (1.0 + delta) * initial_error_sq
}

/// The recurrence run forward with its own guaranteed envelope checked
/// at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub q: f64,
    pub delta: f64,
    /// F_1 through F_horizon (F_1 equals F_0 by construction).
    pub values: Vec<f64>,
    /// Steps t in 1..=horizon where F_{t+1} exceeded q^t (1 + delta) F_0.
    pub violations: Vec<usize>,
}

/// Runs F_{t+1} = a1 F_t + a2 F_{t-1} from F_0 = F_1 = `f0` and checks
/// F_{t+1} <= q^t (1 + delta) F_0 for every t up to `horizon`.
///
/// The check is done in log space so that long horizons, where both
/// sides underflow geometrically, still compare meaningfully.
pub fn recurrence_oracle(
    a1: f64,
    a2: f64,
    f0: f64,
    horizon: usize,
) -> Result<RecurrenceReport, TheoryError> {
    if !a1.is_finite() || !a2.is_finite() || a1 < 0.0 || a2 < 0.0 {
        return Err(TheoryError::InvalidCoefficients { a1, a2 });
    }
    if !f0.is_finite() || f0 < 0.0 {
        return Err(TheoryError::InvalidInitialValue(f0));
    }
    if horizon == 0 {
        return Err(TheoryError::ZeroHorizon);
    }
    let (q, delta) = rate_from_coefficients(a1, a2);

    let mut values = Vec::with_capacity(horizon + 1);
    values.push(f0); // F_1 = F_0
    let mut older = f0; // F_{t-1}
    let mut current = f0; // F_t
    for _ in 1..=horizon {
        let next = a1 * current + a2 * older;
        values.push(next);
        older = current;
        current = next;
    }
    // values now holds F_1 ..= F_{horizon + 1}; the extra element lets
    // the bound at t = horizon be checked before it is trimmed off.
    let violations = bound_violations(&values, q, delta, f0);
    values.truncate(horizon);
    Ok(RecurrenceReport { q, delta, values, violations })
}

/// `values` holds F_1 ..= F_{T+1}; returns every t in 1..=T where
/// F_{t+1} > q^t (1 + delta) F_0.
fn bound_violations(values: &[f64], q: f64, delta: f64, f0: f64) -> Vec<usize> {
    let log_envelope = (1.0 + delta).ln() + f0.ln();
    let log_q = q.ln();
    let mut violations = Vec::new();
    for (t, f_next) in values.iter().enumerate().skip(1) {
        if f_next.ln() > t as f64 * log_q + log_envelope + BOUND_LOG_SLACK {
            violations.push(t);
        }
    }
    violations
}
