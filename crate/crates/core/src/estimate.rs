//! Monte Carlo summaries that pool exactly across blocks.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::rng::StreamTag;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Running sums of a scalar score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Tally {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&self, other: &Tally) -> Tally {
        Tally {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Unbiased sample variance; zero below two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.mean()) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Paired sums of (classical, modified) scores from common random numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairTally {
    pub classical: Tally,
    pub modified: Tally,
    pub cross: f64,
}

impl PairTally {
    #[inline]
    pub fn push(&mut self, classical: f64, modified: f64) {
        self.classical.push(classical);
        self.modified.push(modified);
        self.cross += classical * modified;
    }

    pub fn merge(&self, other: &PairTally) -> PairTally {
        PairTally {
            classical: self.classical.merge(&other.classical),
            modified: self.modified.merge(&other.modified),
            cross: self.cross + other.cross,
        }
    }

    /// Ratio of means and its delta-method standard error.
    pub fn ratio(&self) -> (f64, f64) {
        let n = self.classical.n as f64;
        let mc = self.classical.mean();
        if self.classical.n < 2 || mc == 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let r = self.modified.mean() / mc;
        let ss = self.modified.sum_sq - 2.0 * r * self.cross + r * r * self.classical.sum_sq;
        let var = (ss / (n - 1.0)).max(0.0);
        (r, (var / n).sqrt() / mc)
    }
}

/// Monte Carlo mean with its standard error, replication count and stream provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub streams: Vec<StreamTag>,
    #[serde(skip)]
    tally: Option<Tally>,
}

impl Estimate {
    pub fn from_tally(tally: Tally, streams: Vec<StreamTag>) -> Self {
        Estimate {
            mean: tally.mean(),
            std_error: tally.std_error(),
            n: tally.n,
            streams,
            tally: Some(tally),
        }
    }

    /// An estimate assembled from a weighted combination (e.g. strata); such
    /// estimates cannot be merged.
    pub fn from_parts(mean: f64, std_error: f64, n: u64, streams: Vec<StreamTag>) -> Self {
        Estimate {
            mean,
            std_error,
            n,
            streams,
            tally: None,
        }
    }

    pub fn tally(&self) -> Option<&Tally> {
        self.tally.as_ref()
    }

    /// Pool two estimates of the same quantity from disjoint replications.
    pub fn merge(&self, other: &Estimate) -> Result<Estimate> {
        match (self.tally, other.tally) {
            (Some(a), Some(b)) => {
                let mut streams = self.streams.clone();
                streams.extend_from_slice(&other.streams);
                Ok(Estimate::from_tally(a.merge(&b), streams))
            }
            _ => Err(domain("only tally-backed estimates can be merged")),
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.mean.abs()
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.std_error, self.mean + Z95 * self.std_error)
    }
}
