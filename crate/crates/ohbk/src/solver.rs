//! The online heavy-ball Kaczmarz iteration.
//!
//! Each step projects the current iterate onto the hyperplane of one
//! measurement and adds a momentum pull along the previous displacement:
//!
//! ```text
//! x_{t+1} = x_t - (<phi_t, x_t> - y_t) / |phi_t|^2 * phi_t + beta (x_t - x_{t-1})
//! ```
//!
//! With beta = 0 this is plain online Kaczmarz. The update never looks at
//! the ground truth; evaluation against x* happens only in the runners,
//! which record the error trajectory.

use thiserror::Error;

use crate::linalg::Vector;
use crate::sources::{
    make_rng, synthesize_ground_truth, GroundTruth, Measurement, MeasurementSource, SourceError,
    SourceSpec, StreamRng,
};

/// Measurements with |phi|^2 below this are skipped: the projection
/// direction is numerically meaningless and the hyperplane constraint is
/// vacuous at working precision.
pub const DEGENERATE_PHI_NORM_SQ: f64 = 1e-24;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("momentum parameter {0} is outside [0, 1)")]
    InvalidBeta(f64),
    #[error("measurement has dimension {measurement}, state has dimension {state}")]
    DimensionMismatch { measurement: usize, state: usize },
    #[error("measurement response is not finite: {0}")]
    NonFiniteResponse(f64),
    #[error("iterate diverged to non-finite values after {updates} updates")]
    NonFiniteIterate { updates: usize },
    #[error("initial iterate has dimension {x0}, the stream produces dimension {stream}")]
    InitialIterateMismatch { x0: usize, stream: usize },
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// What a single step did with its measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Updated,
    /// |phi|^2 fell below [`DEGENERATE_PHI_NORM_SQ`]; the iterate is
    /// unchanged.
    SkippedDegenerate,
}

/// Iterate pair (x_t, x_{t-1}) plus counters. Construction sets both to
/// x_0, so the first step carries no momentum, matching a zero initial
/// displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    x_curr: Vector,
    x_prev: Vector,
    beta: f64,
    updates: usize,
    skipped: usize,
}

impl SolverState {
    pub fn init(x0: Vector, beta: f64) -> Result<Self, SolverError> {
        if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
            return Err(SolverError::InvalidBeta(beta));
        }
        Ok(Self {
            x_prev: x0.clone(),
            x_curr: x0,
            beta,
            updates: 0,
            skipped: 0,
        })
    }

    pub fn x_curr(&self) -> &Vector {
        &self.x_curr
    }

    pub fn x_prev(&self) -> &Vector {
        &self.x_prev
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Updates applied (degenerate skips not included).
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Measurements skipped as degenerate.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Applies one measurement in place.
    ///
    /// The projected point and the momentum term are computed exactly as
    /// written in the update rule, so a beta = 0 step reproduces plain
    /// Kaczmarz bit for bit and the momentum contribution is literally
    /// beta * (x_t - x_{t-1}) added on top.
    ///
    /// On error the state is poisoned and should be discarded.
    pub fn step(&mut self, m: &Measurement) -> Result<StepOutcome, SolverError> {
        let n = self.x_curr.len();
        if m.phi.len() != n {
            return Err(SolverError::DimensionMismatch {
                measurement: m.phi.len(),
                state: n,
            });
        }
        if !m.y.is_finite() {
            return Err(SolverError::NonFiniteResponse(m.y));
        }
        let norm_sq = m.phi.norm_sq();
        if norm_sq < DEGENERATE_PHI_NORM_SQ {
            self.skipped += 1;
            return Ok(StepOutcome::SkippedDegenerate);
        }
        let residual = m.phi.dot(&self.x_curr).expect("dimensions checked") - m.y;
        let coeff = residual / norm_sq;
        if !coeff.is_finite() {
            return Err(SolverError::NonFiniteIterate { updates: self.updates });
        }

        // x_{t+1} is written into the x_{t-1} buffer, then the roles swap.
        let beta = self.beta;
        let phi = m.phi.as_slice();
        let curr = self.x_curr.as_slice();
        let next = self.x_prev.as_mut_slice();
        let mut finite = true;
        for i in 0..n {
            let projected = curr[i] - coeff * phi[i];
            let value = projected + beta * (curr[i] - next[i]);
            finite &= value.is_finite();
            next[i] = value;
        }
        if !finite {
            return Err(SolverError::NonFiniteIterate { updates: self.updates + 1 });
        }
        std::mem::swap(&mut self.x_curr, &mut self.x_prev);
        self.updates += 1;
        Ok(StepOutcome::Updated)
    }
}

/// Error trajectory |x_t - x*| of one run, recorded every `record_every`
/// consumed measurements (plus the initial point and the final iterate).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub beta: f64,
    pub seed: u64,
    pub source: String,
    pub record_every: usize,
    /// Measurements consumed, including degenerate skips.
    pub consumed: usize,
    pub skipped: usize,
    pub errors: Vec<f64>,
}

impl Trajectory {
    pub fn initial_error(&self) -> f64 {
        self.errors[0]
    }

    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("trajectory records at least t=0")
    }

    /// Error after `t` consumed measurements, if it was recorded.
    pub fn error_at_step(&self, t: usize) -> Option<f64> {
        if t > self.consumed {
            return None;
        }
        if t == self.consumed {
            return Some(self.final_error());
        }
        if t.is_multiple_of(self.record_every) {
            return self.errors.get(t / self.record_every).copied();
        }
        None
    }

    /// Consumed-measurement count for each recorded error, parallel to
    /// `errors`.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..self.errors.len()).map(|i| i * self.record_every).collect();
        if let Some(last) = steps.last_mut() {
            *last = (*last).min(self.consumed);
            if !self.consumed.is_multiple_of(self.record_every) {
                *last = self.consumed;
            }
        }
        steps
    }
}

/// Drives the solver over an explicit stream. `rng` feeds the source, and
/// `truth` supplies responses and the error metric; `seed` is recorded in
/// the trajectory as a label only.
#[allow(clippy::too_many_arguments)]
pub fn run_stream(
    source: &mut MeasurementSource,
    rng: &mut StreamRng,
    truth: &GroundTruth,
    x0: &Vector,
    beta: f64,
    iters: usize,
    record_every: usize,
    seed: u64,
) -> Result<Trajectory, SolverError> {
    assert!(record_every > 0, "record_every must be positive");
    if x0.len() != source.dim() {
        return Err(SolverError::InitialIterateMismatch {
            x0: x0.len(),
            stream: source.dim(),
        });
    }
    let mut state = SolverState::init(x0.clone(), beta)?;
    let mut errors = Vec::with_capacity(iters / record_every + 2);
    errors.push(x0.distance(truth.x_star()).expect("dimensions checked"));

    let mut consumed = 0usize;
    while consumed < iters {
        let Some(m) = source.next_measurement(rng, truth)? else {
            break;
        };
        state.step(&m)?;
        consumed += 1;
        if consumed.is_multiple_of(record_every) {
            errors.push(state.x_curr().distance(truth.x_star()).expect("dimensions checked"));
        }
    }
    if !consumed.is_multiple_of(record_every) {
        errors.push(state.x_curr().distance(truth.x_star()).expect("dimensions checked"));
    }

    Ok(Trajectory {
        beta,
        seed,
        source: source.describe(),
        record_every,
        consumed,
        skipped: state.skipped(),
        errors,
    })
}

/// The standard protocol: one generator seeded from the spec produces the
/// ground truth first and the measurement stream after it, and the solver
/// starts from zero. Reusing a seed replays the exact same truth and
/// stream.
pub fn run_seeded(
    spec: &SourceSpec,
    beta: f64,
    iters: usize,
    record_every: usize,
) -> Result<Trajectory, SolverError> {
    let mut rng = make_rng(spec.seed());
    let truth = synthesize_ground_truth(&mut rng, spec.dim());
    let x0 = Vector::zeros(spec.dim());
    let mut source = MeasurementSource::new(spec);
    run_stream(&mut source, &mut rng, &truth, &x0, beta, iters, record_every, spec.seed())
}

/// Runs against a caller-supplied ground truth and starting point, with
/// the stream seeded from the spec. The spec seed should be unrelated to
/// however `truth` was produced, or the first draws of the stream will
/// replay the draws that formed x*.
pub fn run_with_truth(
    spec: &SourceSpec,
    x0: &Vector,
    beta: f64,
    iters: usize,
    record_every: usize,
    truth: &GroundTruth,
) -> Result<Trajectory, SolverError> {
    let mut rng = make_rng(spec.seed());
    let mut source = MeasurementSource::new(spec);
    run_stream(&mut source, &mut rng, truth, x0, beta, iters, record_every, spec.seed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::SourceKind;
    use std::sync::Arc;

    fn measurement(phi: Vec<f64>, y: f64) -> Measurement {
        Measurement {
            phi: Vector::from_vec(phi).unwrap(),
            y,
        }
    }

    #[test]
    fn worked_step_example() {
        // x = (1, 0), previous (0, 0), phi = e2, y = 3, beta = 1/2:
        // projection gives (1, 3), momentum adds (1/2, 0).
        let mut state = SolverState::init(Vector::from_vec(vec![1.0, 0.0]).unwrap(), 0.5).unwrap();
        // Seed a displacement so the momentum term is visible.
        state.x_prev = Vector::zeros(2);
        let outcome = state.step(&measurement(vec![0.0, 1.0], 3.0)).unwrap();
        assert_eq!(outcome, StepOutcome::Updated);
        assert_eq!(state.x_curr().as_slice(), &[1.5, 3.0]);
        assert_eq!(state.x_prev().as_slice(), &[1.0, 0.0]);
        assert_eq!(state.updates(), 1);
    }

    #[test]
    fn projection_step_lands_on_hyperplane() {
        let mut state =
            SolverState::init(Vector::from_vec(vec![2.0, -1.0, 0.5]).unwrap(), 0.0).unwrap();
        let m = measurement(vec![1.0, 2.0, 2.0], 4.0);
        state.step(&m).unwrap();
        let after = m.phi.dot(state.x_curr()).unwrap();
        assert!((after - m.y).abs() <= 1e-12);
    }

    #[test]
    fn init_duplicates_x0_so_first_step_has_no_momentum() {
        let x0 = Vector::from_vec(vec![3.0, 4.0]).unwrap();
        let mut with_momentum = SolverState::init(x0.clone(), 0.9).unwrap();
        let mut without = SolverState::init(x0, 0.0).unwrap();
        let m = measurement(vec![1.0, 1.0], 1.0);
        with_momentum.step(&m).unwrap();
        without.step(&m).unwrap();
        assert_eq!(with_momentum.x_curr(), without.x_curr());
    }

    #[test]
    fn degenerate_measurement_is_skipped() {
        let mut state = SolverState::init(Vector::from_vec(vec![1.0, 2.0]).unwrap(), 0.3).unwrap();
        let before = state.clone();
        let outcome = state.step(&measurement(vec![1e-13, 0.0], 5.0)).unwrap();
        assert_eq!(outcome, StepOutcome::SkippedDegenerate);
        assert_eq!(state.x_curr(), before.x_curr());
        assert_eq!(state.x_prev(), before.x_prev());
        assert_eq!(state.updates(), 0);
        assert_eq!(state.skipped(), 1);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let x0 = Vector::zeros(2);
        assert!(matches!(
            SolverState::init(x0.clone(), -0.1),
            Err(SolverError::InvalidBeta(_))
        ));
        assert!(matches!(
            SolverState::init(x0.clone(), 1.0),
            Err(SolverError::InvalidBeta(_))
        ));
        assert!(matches!(
            SolverState::init(x0.clone(), f64::NAN),
            Err(SolverError::InvalidBeta(_))
        ));

        let mut state = SolverState::init(x0, 0.0).unwrap();
        assert!(matches!(
            state.step(&measurement(vec![1.0], 0.0)),
            Err(SolverError::DimensionMismatch { measurement: 1, state: 2 })
        ));
        assert!(matches!(
            state.step(&measurement(vec![1.0, 0.0], f64::NAN)),
            Err(SolverError::NonFiniteResponse(_))
        ));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let spec = SourceSpec::new(SourceKind::Uniform { lo: 0.0, hi: 1.0 }, 12, 99).unwrap();
        let a = run_seeded(&spec, 0.2, 300, 1).unwrap();
        let b = run_seeded(&spec, 0.2, 300, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.consumed, 300);
        assert_eq!(a.errors.len(), 301);
    }

    #[test]
    fn solver_converges_on_easy_problem() {
        let spec = SourceSpec::new(SourceKind::Uniform { lo: 0.0, hi: 1.0 }, 5, 3).unwrap();
        let traj = run_seeded(&spec, 0.0, 1000, 1).unwrap();
        assert!(
            traj.final_error() < 1e-2 * traj.initial_error(),
            "final {} vs initial {}",
            traj.final_error(),
            traj.initial_error()
        );
        // Error decays overall; it need not be monotone step to step.
        assert!(traj.errors[500] < traj.errors[0]);
    }

    #[test]
    fn record_every_keeps_multiples_and_final() {
        let spec = SourceSpec::new(SourceKind::Gaussian, 6, 1).unwrap();
        let traj = run_seeded(&spec, 0.1, 25, 10).unwrap();
        assert_eq!(traj.errors.len(), 4); // t = 0, 10, 20, 25
        assert_eq!(traj.recorded_steps(), vec![0, 10, 20, 25]);
        assert_eq!(traj.error_at_step(0), Some(traj.errors[0]));
        assert_eq!(traj.error_at_step(10), Some(traj.errors[1]));
        assert_eq!(traj.error_at_step(25), Some(traj.errors[3]));
        assert_eq!(traj.error_at_step(15), None);
        assert_eq!(traj.error_at_step(26), None);

        let exact = run_seeded(&spec, 0.1, 30, 10).unwrap();
        assert_eq!(exact.errors.len(), 4); // t = 0, 10, 20, 30
        assert_eq!(exact.recorded_steps(), vec![0, 10, 20, 30]);
        assert_eq!(exact.error_at_step(30), Some(exact.final_error()));
    }

    #[test]
    fn stream_once_stops_at_dataset_end() {
        let data = Arc::new(
            crate::sources::dataset::Dataset::from_rows(vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ])
            .unwrap(),
        );
        let spec = SourceSpec::new(
            SourceKind::Dataset { data, order: crate::sources::RowOrder::StreamOnce },
            2,
            4,
        )
        .unwrap();
        let traj = run_seeded(&spec, 0.1, 100, 1).unwrap();
        assert_eq!(traj.consumed, 3);
        assert_eq!(traj.errors.len(), 4);
    }

    #[test]
    fn run_with_truth_reaches_fixed_point_at_solution() {
        let spec = SourceSpec::new(SourceKind::Gaussian, 8, 21).unwrap();
        let mut rng = make_rng(777);
        let truth = synthesize_ground_truth(&mut rng, 8);
        let traj = run_with_truth(&spec, truth.x_star(), 0.4, 50, 1, &truth).unwrap();
        for e in &traj.errors {
            assert!(*e <= 1e-12, "error should stay at zero, got {e}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn finite_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-100.0..100.0f64, n)
        }

        proptest! {
            // After a beta = 0 step, the iterate satisfies the measurement.
            #[test]
            fn projection_satisfies_measurement(
                x in finite_vec(6),
                phi in finite_vec(6),
                y in -100.0..100.0f64,
            ) {
                let phi_v = Vector::from_vec(phi).unwrap();
                prop_assume!(phi_v.norm_sq() >= 1e-6);
                let mut state = SolverState::init(Vector::from_vec(x).unwrap(), 0.0).unwrap();
                state.step(&Measurement { phi: phi_v.clone(), y }).unwrap();
                let after = phi_v.dot(state.x_curr()).unwrap();
                let scale = 1.0 + phi_v.norm() * state.x_curr().norm();
                prop_assert!((after - y).abs() <= 1e-10 * scale);
            }

            // The momentum step equals the plain step plus
            // beta * (x_t - x_{t-1}), exactly as computed.
            #[test]
            fn momentum_decomposes_into_projection_plus_pull(
                x in finite_vec(5),
                x_prev in finite_vec(5),
                phi in finite_vec(5),
                y in -100.0..100.0f64,
                beta in 0.0..0.999f64,
            ) {
                let phi_v = Vector::from_vec(phi).unwrap();
                prop_assume!(phi_v.norm_sq() >= 1e-6);
                let x = Vector::from_vec(x).unwrap();
                let x_prev = Vector::from_vec(x_prev).unwrap();
                let m = Measurement { phi: phi_v, y };

                let mut with = SolverState::init(x.clone(), beta).unwrap();
                with.x_prev = x_prev.clone();
                with.step(&m).unwrap();

                let mut plain = SolverState::init(x.clone(), 0.0).unwrap();
                plain.x_prev = x_prev.clone();
                plain.step(&m).unwrap();

                for i in 0..5 {
                    let expected = plain.x_curr()[i] + beta * (x[i] - x_prev[i]);
                    let diff = (with.x_curr()[i] - expected).abs();
                    prop_assert!(diff <= 1e-14 * (1.0 + x.norm()));
                }
            }
        }
    }
}
