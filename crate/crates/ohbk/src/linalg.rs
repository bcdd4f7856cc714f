//! Dense real vectors, symmetric matrices, and a cyclic Jacobi eigensolver.
//!
//! Everything is plain `f64`, sized for signal dimensions in the hundreds to
//! low thousands. Symmetric matrices store the full square array with
//! mirrored writes, so symmetry holds exactly by construction instead of up
//! to rounding; the eigensolver relies on that.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector must have at least one entry")]
    Empty,
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("matrix rows do not form a square symmetric matrix")]
    NotSymmetric,
    #[error("eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {off_diagonal:.3e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
}

/// Dense real vector. Always non-empty with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    /// Takes ownership of `entries`, rejecting empty input and non-finite
    /// values so downstream arithmetic never has to re-check.
    pub fn from_vec(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.is_empty() {
            return Err(LinalgError::Empty);
        }
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(LinalgError::NonFinite { index, value });
            }
        }
        Ok(Self { entries })
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "zero-length vector");
        Self {
            entries: vec![0.0; len],
        }
    }

    /// Standard basis vector e_i.
    pub fn basis(len: usize, i: usize) -> Self {
        assert!(i < len, "basis index out of range");
        let mut v = Self::zeros(len);
        v.entries[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean distance to `other`, without allocating the difference.
    pub fn distance(&self, other: &Vector) -> Result<f64, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let sum: f64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum.sqrt())
    }

    pub(crate) fn scale_in_place(&mut self, factor: f64) {
        for e in &mut self.entries {
            *e *= factor;
        }
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// alpha * x + y as a new vector.
pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector, LinalgError> {
    if x.len() != y.len() {
        return Err(LinalgError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let entries = x
        .entries
        .iter()
        .zip(&y.entries)
        .map(|(a, b)| alpha * a + b)
        .collect();
    Ok(Vector { entries })
}

/// Symmetric matrix stored as a full row-major square. Every write goes to
/// both (i, j) and (j, i), so the two halves are bitwise identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        assert!(order > 0, "zero-order matrix");
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    /// value * I.
    pub fn identity_scaled(order: usize, value: f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = value;
        }
        m
    }

    /// Builds from explicit rows; the input must be square and exactly
    /// symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let order = rows.len();
        if order == 0 {
            return Err(LinalgError::Empty);
        }
        if rows.iter().any(|r| r.len() != order) {
            return Err(LinalgError::NotSymmetric);
        }
        let mut m = Self::zeros(order);
        for (i, row) in rows.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if !value.is_finite() {
                    return Err(LinalgError::NonFinite {
                        index: i * order + j,
                        value,
                    });
                }
                if rows[j][i] != value {
                    return Err(LinalgError::NotSymmetric);
                }
                m.data[i * order + j] = value;
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.order && j < self.order, "index out of range");
        self.data[i * self.order + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.order && j < self.order, "index out of range");
        self.data[i * self.order + j] = value;
        self.data[j * self.order + i] = value;
    }

    /// Adds weight * v v^T. The same product is written to both mirrored
    /// slots, so symmetry stays exact.
    pub fn rank1_accumulate(&mut self, v: &Vector, weight: f64) -> Result<(), LinalgError> {
        if v.len() != self.order {
            return Err(LinalgError::DimensionMismatch {
                left: self.order,
                right: v.len(),
            });
        }
        if !weight.is_finite() {
            return Err(LinalgError::NonFinite {
                index: 0,
                value: weight,
            });
        }
        let n = self.order;
        for i in 0..n {
            for j in i..n {
                let term = weight * v[i] * v[j];
                self.data[i * n + j] += term;
                if i != j {
                    self.data[j * n + i] = self.data[i * n + j];
                }
            }
        }
        Ok(())
    }

    pub(crate) fn scale_in_place(&mut self, factor: f64) {
        for e in &mut self.data {
            *e *= factor;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.data[i * self.order + i]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn fro_distance(&self, other: &SymMatrix) -> Result<f64, LinalgError> {
        if self.order != other.order {
            return Err(LinalgError::DimensionMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum.sqrt())
    }

    /// Eigenvalues in ascending order, via cyclic Jacobi rotations.
    ///
    /// Sweeps run until the off-diagonal Frobenius norm falls below
    /// 1e-12 relative to the matrix scale. Jacobi converges quadratically,
    /// so the sweep cap is generous; hitting it means the input was broken
    /// and is reported as an error rather than returning garbage.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        const MAX_SWEEPS: usize = 50;
        const OFF_TOL: f64 = 1e-12;

        let n = self.order;
        let mut a = self.data.clone();
        let tol = OFF_TOL * self.fro_norm().max(1.0);

        let off_norm = |a: &[f64]| -> f64 {
            let mut sum = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    sum += 2.0 * a[i * n + j] * a[i * n + j];
                }
            }
            sum.sqrt()
        };

        let mut sweeps = 0;
        while off_norm(&a) > tol {
            if sweeps == MAX_SWEEPS {
                return Err(LinalgError::NoConvergence {
                    sweeps,
                    off_diagonal: off_norm(&a),
                });
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    // Smaller root of t^2 + 2 t theta - 1 = 0 keeps the
                    // rotation angle below pi/4; the fallback avoids
                    // overflow in theta^2.
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    a[p * n + p] = app - h;
                    a[q * n + q] = aqq + h;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for i in 0..n {
                        if i == p || i == q {
                            continue;
                        }
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        let new_ip = aip - s * (aiq + tau * aip);
                        let new_iq = aiq + s * (aip - tau * aiq);
                        a[i * n + p] = new_ip;
                        a[p * n + i] = new_ip;
                        a[i * n + q] = new_iq;
                        a[q * n + i] = new_iq;
                    }
                }
            }
            sweeps += 1;
        }

        let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(eigenvalues)
    }
}
