//! Linear SINR quantization and the SINR-to-rate edge weights.
//!
//! Vehicles report SINR in dB quantized on `b` bits over `[lo, hi]`; the
//! eNodeB reconstructs each report at its bin midpoint. Assignments are
//! decided on rates from the reconstructions and judged on rates from the
//! unquantized values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scenario::SinrMatrix;

pub const MAX_BITS: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    bits: u8,
    lo_db: f64,
    hi_db: f64,
}

impl QuantizerSpec {
    pub fn new(bits: u8, lo_db: f64, hi_db: f64) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidParameter(format!(
                "quantizer bits must be in 1..={MAX_BITS}, got {bits}"
            )));
        }
        if !(lo_db.is_finite() && hi_db.is_finite() && lo_db < hi_db) {
            return Err(Error::InvalidParameter(format!(
                "quantizer range [{lo_db}, {hi_db}] is empty or non-finite"
            )));
        }
        Ok(QuantizerSpec { bits, lo_db, hi_db })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn lo_db(&self) -> f64 {
        self.lo_db
    }

    pub fn hi_db(&self) -> f64 {
        self.hi_db
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi_db - self.lo_db) / self.levels() as f64
    }

    /// Reconstruction value of bin `index`.
    pub fn level(&self, index: usize) -> f64 {
        self.lo_db + (index as f64 + 0.5) * self.bin_width()
    }

    /// Returns `(index, reconstruction_db)`. Inputs outside the range are clamped.
    pub fn quantize(&self, sinr_db: f64) -> (usize, f64) {
        let clamped = sinr_db.clamp(self.lo_db, self.hi_db);
        let raw = ((clamped - self.lo_db) / self.bin_width()).floor();
        let index = (raw.max(0.0) as usize).min(self.levels() - 1);
        (index, self.level(index))
    }
}

/// Shannon rate `B log2(1 + SINR)` in bits/s for an SINR given in dB.
pub fn rate_from_sinr(b_hz: f64, sinr_db: f64) -> f64 {
    b_hz * (1.0 + db_to_linear(sinr_db)).log2()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Achievable rates (bits/s) per (vehicle, subchannel).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    cluster_id: usize,
    values: Matrix<f64>,
}

impl RateMatrix {
    pub fn new(cluster_id: usize, values: Matrix<f64>) -> Result<Self> {
        if let Some(v) = values
            .as_slice()
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NonFinite(format!(
                "rate entry {v} is not a finite non-negative value"
            )));
        }
        Ok(RateMatrix { cluster_id, values })
    }

    pub fn from_rows(cluster_id: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(cluster_id, Matrix::from_rows(rows)?)
    }

    pub fn cluster_id(&self) -> usize {
        self.cluster_id
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn n_vehicles(&self) -> usize {
        self.values.rows()
    }

    pub fn get(&self, vehicle: usize, subchannel: usize) -> f64 {
        self.values[(vehicle, subchannel)]
    }

    /// Flattened vehicle-major cost vector.
    pub fn as_cost_vector(&self) -> &[f64] {
        self.values.as_slice()
    }
}

/// Builds `(decision, truth)` rate matrices. Without a quantizer both are equal.
pub fn build_rate_matrices(
    sinr: &SinrMatrix,
    quantizer: Option<&QuantizerSpec>,
    b_hz: f64,
) -> Result<(RateMatrix, RateMatrix)> {
    if !(b_hz > 0.0 && b_hz.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {b_hz}"
        )));
    }
    let truth = RateMatrix::new(
        sinr.cluster_id(),
        sinr.values().map(|&s| rate_from_sinr(b_hz, s)),
    )?;
    let decision = match quantizer {
        None => truth.clone(),
        Some(q) => RateMatrix::new(
            sinr.cluster_id(),
            sinr.values()
                .map(|&s| rate_from_sinr(b_hz, q.quantize(s).1)),
        )?,
    };
    Ok((decision, truth))
}
