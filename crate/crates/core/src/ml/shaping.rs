use crate::error::{Error, Result};
use crate::ml::Dataset;
use crate::pdfmodel::BinningScheme;

/// Default share used by [`select_features_by_frequency`].
pub const DEFAULT_FEATURE_FRACTION: f64 = 0.10;

/// Default share used by [`filter_datapoints_by_coverage`].
pub const DEFAULT_COVERAGE_FRACTION: f64 = 0.055;

/// Drops every feature whose column sum is below `threshold`.
pub fn select_features_by_min_total(ds: &Dataset, threshold: f64) -> Result<Dataset> {
    let keep: Vec<usize> = ds
        .column_sums()
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s >= threshold)
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid(format!("every feature falls below the frequency threshold {threshold}")));
    }
    Ok(ds.select_columns(&keep))
}

/// Threshold `fraction × (grand total ÷ n_features)` used by
/// [`select_features_by_frequency`]: a feature survives when its total is at
/// least `fraction` of the average feature total.
pub fn frequency_threshold(ds: &Dataset, fraction: f64) -> f64 {
    let sums = ds.column_sums();
    if sums.is_empty() {
        return 0.0;
    }
    fraction * sums.iter().sum::<f64>() / sums.len() as f64
}

/// Removes rare count features. Returns the reduced dataset and the
/// resolved threshold; reapplying that threshold through
/// [`select_features_by_min_total`] is a no-op.
pub fn select_features_by_frequency(ds: &Dataset, fraction: f64) -> Result<(Dataset, f64)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    if ds.x().iter().flatten().any(|&v| v < 0.0) {
        return Err(Error::invalid("frequency selection needs non-negative count features"));
    }
    let threshold = frequency_threshold(ds, fraction);
    Ok((select_features_by_min_total(ds, threshold)?, threshold))
}

/// Drops rows whose number of nonzero features is below `fraction × n_cols`.
pub fn filter_datapoints_by_coverage(ds: &Dataset, fraction: f64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    let need = fraction * ds.n_cols() as f64;
    let keep: Vec<usize> = (0..ds.n_rows())
        .filter(|&i| ds.row(i).iter().filter(|&&v| v != 0.0).count() as f64 >= need)
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("every data point falls below the coverage threshold"));
    }
    Ok(ds.select_rows(&keep))
}

/// Bin index of every score under `binning`'s boundary rule.
pub fn bin_labels(scores: &[f64], binning: &BinningScheme) -> Result<Vec<usize>> {
    scores
        .iter()
        .enumerate()
        .map(|(row, &s)| {
            binning.bin_index(s).ok_or_else(|| {
                Error::invalid(format!(
                    "row {row}: score {s} outside [{}, {}]",
                    binning.lo(),
                    binning.hi()
                ))
            })
        })
        .collect()
}
