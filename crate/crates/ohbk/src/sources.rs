//! Seeded measurement streams.
//!
//! A stream hands out measurement vectors phi (drawn from a synthetic
//! distribution or read from a dataset) together with responses
//! y = <phi, x*> against a ground-truth signal. All randomness flows
//! through [`make_rng`], so a seed pins the entire stream on every
//! platform.

pub mod dataset;

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use thiserror::Error;

use crate::linalg::Vector;
use dataset::Dataset;

/// The project-wide generator. ChaCha8 is deterministic across platforms
/// and cheap enough that per-trial instances cost nothing.
pub type StreamRng = rand_chacha::ChaCha8Rng;

/// Builds the generator every randomized component uses. Identical seeds
/// give identical streams.
pub fn make_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("signal dimension must be at least 1")]
    ZeroDimension,
    #[error("uniform range [{lo}, {hi}) is invalid: bounds must be finite with lo < hi")]
    InvalidUniformRange { lo: f64, hi: f64 },
    #[error("dataset rows have {ncols} columns but the source dimension is {dim}")]
    DatasetDimensionMismatch { ncols: usize, dim: usize },
    #[error("ground truth has dimension {truth} but the source produces dimension {dim}")]
    GroundTruthDimensionMismatch { truth: usize, dim: usize },
}

/// One stream element: a measurement vector and its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub phi: Vector,
    pub y: f64,
}

/// The signal x* that responses are generated from. Kept behind an
/// accessor so solver code takes it only where evaluation genuinely
/// needs it (error reporting), never inside the update itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    x_star: Vector,
}

impl GroundTruth {
    pub fn new(x_star: Vector) -> Self {
        Self { x_star }
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }
}

/// Standard-Gaussian ground truth drawn from `rng`.
pub fn synthesize_ground_truth(rng: &mut StreamRng, dim: usize) -> GroundTruth {
    GroundTruth {
        x_star: sample_gaussian_vector(rng, dim),
    }
}

/// Vector of i.i.d. standard Gaussians via the polar (rejection) form of
/// the Box-Muller transform, built on the uniform sampler so the whole
/// stream reduces to one uniform source.
pub fn sample_gaussian_vector(rng: &mut StreamRng, dim: usize) -> Vector {
    assert!(dim > 0, "zero-dimension sample");
    let mut entries = Vec::with_capacity(dim);
    let mut spare: Option<f64> = None;
    for _ in 0..dim {
        match spare.take() {
            Some(z) => entries.push(z),
            None => {
                let (z0, z1) = gaussian_pair(rng);
                entries.push(z0);
                spare = Some(z1);
            }
        }
    }
    Vector::from_vec(entries).expect("gaussian samples are finite")
}

fn gaussian_pair(rng: &mut StreamRng) -> (f64, f64) {
    loop {
        let u: f64 = rng.random_range(-1.0..1.0);
        let v: f64 = rng.random_range(-1.0..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let factor = (-2.0 * s.ln() / s).sqrt();
            return (u * factor, v * factor);
        }
    }
}

/// Vector of i.i.d. U[lo, hi) entries.
pub fn sample_uniform_vector(
    rng: &mut StreamRng,
    dim: usize,
    lo: f64,
    hi: f64,
) -> Result<Vector, SourceError> {
    assert!(dim > 0, "zero-dimension sample");
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(SourceError::InvalidUniformRange { lo, hi });
    }
    let entries = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
    Ok(Vector::from_vec(entries).expect("uniform samples are finite"))
}

/// Uniform draw from the unit sphere: a Gaussian vector scaled to unit
/// norm. The Gaussian tail makes a near-zero norm practically impossible,
/// but it is rejected anyway rather than dividing by it.
pub fn sample_sphere_vector(rng: &mut StreamRng, dim: usize) -> Vector {
    assert!(dim > 0, "zero-dimension sample");
    loop {
        let mut v = sample_gaussian_vector(rng, dim);
        let norm = v.norm();
        if norm > 1e-150 {
            v.scale_in_place(1.0 / norm);
            return v;
        }
    }
}

/// Row schedule for dataset-backed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrder {
    /// Rows in file order, wrapping around.
    Cyclic,
    /// Independent uniform row index each step.
    UniformRandom,
    /// Rows in file order, once; the stream then ends.
    StreamOnce,
}

/// What the measurement vectors are drawn from.
#[derive(Debug, Clone)]
pub enum SourceKind {
    /// i.i.d. standard Gaussian entries.
    Gaussian,
    /// i.i.d. U[lo, hi) entries.
    Uniform { lo: f64, hi: f64 },
    /// Uniform on the unit sphere.
    UnitSphere,
    /// Rows of a loaded dataset.
    Dataset { data: Arc<Dataset>, order: RowOrder },
}

impl SourceKind {
    /// Short human-readable tag, used in trajectory labels and manifests.
    pub fn describe(&self) -> String {
        match self {
            SourceKind::Gaussian => "gaussian".to_string(),
            SourceKind::Uniform { lo, hi } => format!("uniform[{lo},{hi})"),
            SourceKind::UnitSphere => "sphere".to_string(),
            SourceKind::Dataset { data, order } => {
                let order = match order {
                    RowOrder::Cyclic => "cyclic",
                    RowOrder::UniformRandom => "random",
                    RowOrder::StreamOnce => "once",
                };
                format!("dataset({}x{},{order})", data.nrows(), data.ncols())
            }
        }
    }
}

/// A validated stream recipe: distribution, dimension, and seed.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    kind: SourceKind,
    dim: usize,
    seed: u64,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, dim: usize, seed: u64) -> Result<Self, SourceError> {
        if dim == 0 {
            return Err(SourceError::ZeroDimension);
        }
        match &kind {
            SourceKind::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(SourceError::InvalidUniformRange { lo: *lo, hi: *hi });
                }
            }
            SourceKind::Dataset { data, .. } => {
                if data.ncols() != dim {
                    return Err(SourceError::DatasetDimensionMismatch {
                        ncols: data.ncols(),
                        dim,
                    });
                }
            }
            SourceKind::Gaussian | SourceKind::UnitSphere => {}
        }
        Ok(Self { kind, dim, seed })
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn describe(&self) -> String {
        format!("{} dim={} seed={}", self.kind.describe(), self.dim, self.seed)
    }
}

/// Stateful measurement stream. Synthetic kinds never end; a stream-once
/// dataset source ends after its last row.
#[derive(Debug, Clone)]
pub struct MeasurementSource {
    kind: SourceKind,
    dim: usize,
    cursor: usize,
}

impl MeasurementSource {
    pub fn new(spec: &SourceSpec) -> Self {
        Self {
            kind: spec.kind.clone(),
            dim: spec.dim,
            cursor: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn describe(&self) -> String {
        self.kind.describe()
    }

    /// Next measurement vector, or `None` once a finite stream is
    /// exhausted.
    pub fn next_phi(&mut self, rng: &mut StreamRng) -> Option<Vector> {
        match &self.kind {
            SourceKind::Gaussian => Some(sample_gaussian_vector(rng, self.dim)),
            SourceKind::Uniform { lo, hi } => Some(
                sample_uniform_vector(rng, self.dim, *lo, *hi)
                    .expect("range validated at spec construction"),
            ),
            SourceKind::UnitSphere => Some(sample_sphere_vector(rng, self.dim)),
            SourceKind::Dataset { data, order } => {
                let nrows = data.nrows();
                let row = match order {
                    RowOrder::Cyclic => {
                        let row = self.cursor % nrows;
                        self.cursor += 1;
                        row
                    }
                    RowOrder::UniformRandom => rng.random_range(0..nrows),
                    RowOrder::StreamOnce => {
                        if self.cursor >= nrows {
                            return None;
                        }
                        let row = self.cursor;
                        self.cursor += 1;
                        row
                    }
                };
                Some(data.row_vector(row))
            }
        }
    }

    /// Next (phi, y) pair with y = <phi, x*>.
    pub fn next_measurement(
        &mut self,
        rng: &mut StreamRng,
        truth: &GroundTruth,
    ) -> Result<Option<Measurement>, SourceError> {
        if truth.dim() != self.dim {
            return Err(SourceError::GroundTruthDimensionMismatch {
                truth: truth.dim(),
                dim: self.dim,
            });
        }
        match self.next_phi(rng) {
            None => Ok(None),
            Some(phi) => {
                let y = phi.dot(truth.x_star()).expect("dimensions checked above");
                Ok(Some(Measurement { phi, y }))
            }
        }
    }
}
