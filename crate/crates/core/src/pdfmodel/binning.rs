use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores within this distance (in bin-width units) below a bin edge are
/// treated as lying on the edge, so decimal inputs such as 0.3 land in the
/// bin that starts at 0.3 despite binary rounding.
const EDGE_SNAP: f64 = 1e-9;

/// Equal-width partition of `[lo, hi]` into `n_bins` score intervals.
///
/// Each bin includes its lower edge; the last bin also includes `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBinning", into = "RawBinning")]
pub struct BinningScheme {
    lo: f64,
    hi: f64,
    n_bins: usize,
}

#[derive(Serialize, Deserialize)]
struct RawBinning {
    lo: f64,
    hi: f64,
    n_bins: usize,
}

impl TryFrom<RawBinning> for BinningScheme {
    type Error = Error;

    fn try_from(r: RawBinning) -> Result<Self> {
        BinningScheme::new(r.lo, r.hi, r.n_bins)
    }
}

impl From<BinningScheme> for RawBinning {
    fn from(b: BinningScheme) -> Self {
        RawBinning {
            lo: b.lo,
            hi: b.hi,
            n_bins: b.n_bins,
        }
    }
}

impl Default for BinningScheme {
    /// Eight bins over `[0.1, 0.9]`; labels 0.15, 0.25, ..., 0.85.
    fn default() -> Self {
        Self {
            lo: 0.1,
            hi: 0.9,
            n_bins: 8,
        }
    }
}

impl BinningScheme {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("binning requires lo < hi, got [{lo}, {hi}]")));
        }
        if n_bins < 2 {
            return Err(Error::invalid(format!("binning requires at least 2 bins, got {n_bins}")));
        }
        Ok(Self { lo, hi, n_bins })
    }

    /// Ten bins over `[0, 1]`, used for score distribution reports.
    pub fn deciles() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            n_bins: 10,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    /// Midpoint of bin `k`.
    pub fn label(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    pub fn labels(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.label(k)).collect()
    }

    /// Bin edges `[lower, upper]` of bin `k`.
    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + k as f64 * w, self.lo + (k + 1) as f64 * w)
    }

    /// Index of the bin containing `score`, or `None` outside `[lo, hi]`.
    pub fn bin_index(&self, score: f64) -> Option<usize> {
        if !(score >= self.lo && score <= self.hi) {
            return None;
        }
        let pos = (score - self.lo) / (self.hi - self.lo) * self.n_bins as f64;
        let k = (pos + EDGE_SNAP).floor() as usize;
        Some(k.min(self.n_bins - 1))
    }

    pub fn contains(&self, score: f64) -> bool {
        self.bin_index(score).is_some()
    }
}
