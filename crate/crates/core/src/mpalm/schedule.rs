use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant penalty schedule: iteration `k` uses
/// `sigmas[k / segment_length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    sigmas: Vec<f64>,
    segment_length: usize,
    total_iters: usize,
    step_size: f64,
}

pub const DEFAULT_STEP_SIZE: f64 = 1.618;

impl PenaltySchedule {
    /// Validates and builds a schedule.
    ///
    /// With `total_iters ≥ 1` the number of penalties must be exactly
    /// `⌈K / K₀⌉`. A schedule with `total_iters = 0` never reads a penalty
    /// and accepts any count.
    pub fn new(
        sigmas: Vec<f64>,
        segment_length: usize,
        total_iters: usize,
        step_size: f64,
    ) -> Result<Self> {
        if segment_length == 0 {
            return Err(Error::invalid("segment length K0 must be at least 1"));
        }
        if total_iters > 0 && segment_length > total_iters {
            return Err(Error::invalid(format!(
                "segment length K0 = {segment_length} exceeds K = {total_iters}"
            )));
        }
        if !(step_size > 0.0 && step_size < 2.0) {
            return Err(Error::invalid(format!(
                "step size tau = {step_size} must lie strictly inside (0, 2)"
            )));
        }
        if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("penalty {bad} is not a positive finite number")));
        }
        let expected = total_iters.div_ceil(segment_length);
        if total_iters > 0 && sigmas.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} penalties for K = {total_iters}, K0 = {segment_length}, got {}",
                sigmas.len()
            )));
        }
        Ok(Self {
            sigmas,
            segment_length,
            total_iters,
            step_size,
        })
    }

    /// A single penalty used for all `total_iters` iterations.
    pub fn constant(sigma: f64, total_iters: usize, step_size: f64) -> Result<Self> {
        let k0 = total_iters.max(1);
        let count = total_iters.div_ceil(k0).max(1);
        Self::new(vec![sigma; count], k0, total_iters, step_size)
    }

    /// `J` penalties spread evenly over `total_iters` iterations, with
    /// `K₀ = ⌈K / J⌉`.
    pub fn with_restarts(sigmas: Vec<f64>, total_iters: usize, step_size: f64) -> Result<Self> {
        let restarts = sigmas.len();
        if restarts == 0 {
            return Err(Error::invalid("at least one penalty is required"));
        }
        if total_iters == 0 {
            return Self::new(sigmas, 1, 0, step_size);
        }
        let k0 = total_iters.div_ceil(restarts);
        if total_iters.div_ceil(k0) != restarts {
            return Err(Error::invalid(format!(
                "K = {total_iters} cannot be split into {restarts} segments"
            )));
        }
        Self::new(sigmas, k0, total_iters, step_size)
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn segment_length(&self) -> usize {
        self.segment_length
    }

    pub fn total_iters(&self) -> usize {
        self.total_iters
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn num_segments(&self) -> usize {
        self.sigmas.len()
    }

    /// Segment index `⌊k / K₀⌋` of iteration `k`.
    #[inline]
    pub fn segment_of(&self, k: usize) -> usize {
        k / self.segment_length
    }

    /// The penalty used at iteration `k < K`.
    #[inline]
    pub fn sigma_at(&self, k: usize) -> f64 {
        self.sigmas[self.segment_of(k)]
    }

    /// Same schedule with a different horizon; the penalty list is cut or
    /// padded with its last value so that `⌈K / K₀⌉` entries remain.
    pub fn truncated(&self, total_iters: usize) -> Result<Self> {
        let k0 = self.segment_length.min(total_iters.max(1));
        let need = total_iters.div_ceil(k0);
        let mut sigmas: Vec<f64> = self.sigmas.iter().copied().take(need).collect();
        let last = *self.sigmas.last().unwrap_or(&1.0);
        sigmas.resize(need, last);
        Self::new(sigmas, k0, total_iters, self.step_size)
    }
}
