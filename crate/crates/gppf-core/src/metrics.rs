//! Convergence metrics over a trial's RMSE and distance traces: the 2%
//! settling band, the error at convergence, and the sample- and
//! distance-scaled summaries used to compare query policies.

use crate::explorer::TrialRecord;
use crate::surface::SurfaceGrid;

/// Per-surface scaling constants for the normalized metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationConstants {
    /// Spread of the noiseless target, the NRMSE denominator.
    pub target_range: f64,
    /// Largest sample count a trial may take; scales the convergence index.
    pub i_max: usize,
    /// Planar extent of one grid axis; scales traveled distance.
    pub domain_length: f64,
}

impl NormalizationConstants {
    pub fn new(target_range: f64, i_max: usize, domain_length: f64) -> Self {
        assert!(target_range > 0.0, "target range must be positive");
        assert!(i_max > 0, "i_max must be positive");
        assert!(domain_length > 0.0, "domain length must be positive");
        Self { target_range, i_max, domain_length }
    }

    /// Constants measured from the surface itself.
    pub fn for_grid(grid: &SurfaceGrid, i_max: usize) -> Self {
        Self::new(grid.target_range(), i_max, grid.domain_length())
    }
}

/// Half-width of the 2% settling band around the final error:
/// `0.02 * (e0 - ef)`.
pub fn settling_band(e0: f64, ef: f64) -> f64 {
    0.02 * (e0 - ef)
}

/// Error at convergence: the upper edge of the settling band,
/// `ef + 0.02 * (e0 - ef)`.
pub fn convergence_error(trace: &[f64]) -> f64 {
    assert!(!trace.is_empty(), "empty RMSE trace");
    let e0 = trace[0];
    let ef = trace[trace.len() - 1];
    ef + settling_band(e0, ef)
}

/// The 1-based index of the trace entry closest to `e_c` (first on ties)
/// and that count scaled by `i_max`.
pub fn samples_until_convergence(trace: &[f64], e_c: f64, i_max: usize) -> (usize, f64) {
    assert!(!trace.is_empty(), "empty RMSE trace");
    assert!(i_max > 0, "i_max must be positive");
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, &e) in trace.iter().enumerate() {
        let gap = (e - e_c).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    let index = best + 1;
    (index, index as f64 / i_max as f64)
}

/// Distance traveled through the convergence sample, scaled by the domain
/// length. `convergence_index` is 1-based, as returned by
/// [`samples_until_convergence`].
pub fn distance_until_convergence(
    record: &TrialRecord,
    convergence_index: usize,
    domain_length: f64,
) -> f64 {
    scaled_distance(&record.cum_distance_trace, convergence_index, domain_length)
}

fn scaled_distance(cum_distance: &[f64], convergence_index: usize, domain_length: f64) -> f64 {
    assert!(
        convergence_index >= 1 && convergence_index <= cum_distance.len(),
        "convergence index {convergence_index} outside the record"
    );
    cum_distance[convergence_index - 1] / domain_length
}

/// Everything the campaign aggregates per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// First recorded RMSE (from the post-initialization fit).
    pub e0: f64,
    /// Final recorded RMSE.
    pub ef: f64,
    /// `0.02 * (e0 - ef)`.
    pub settling_band: f64,
    /// RMSE at convergence, in target units.
    pub e_c: f64,
    /// `e_c / target_range`.
    pub e_n: f64,
    /// Convergence sample count over `i_max`, in `[0, 1]`.
    pub i_c: f64,
    /// Distance through convergence over `domain_length`.
    pub d_c: f64,
    /// `e_n * d_c`.
    pub e_dc: f64,
    /// `e_n * i_c`.
    pub e_ic: f64,
    /// 1-based sample index where convergence occurred.
    pub convergence_index: usize,
}

/// Metrics from bare traces; this is all the information a report needs,
/// so reports can be rebuilt from persisted trace files alone.
pub fn report_from_traces(
    rmse_trace: &[f64],
    cum_distance_trace: &[f64],
    norms: &NormalizationConstants,
) -> ConvergenceReport {
    assert_eq!(
        rmse_trace.len(),
        cum_distance_trace.len(),
        "trace lengths differ"
    );
    let e0 = rmse_trace[0];
    let ef = rmse_trace[rmse_trace.len() - 1];
    let e_c = convergence_error(rmse_trace);
    let (convergence_index, i_c) = samples_until_convergence(rmse_trace, e_c, norms.i_max);
    let d_c = scaled_distance(cum_distance_trace, convergence_index, norms.domain_length);
    let e_n = e_c / norms.target_range;
    ConvergenceReport {
        e0,
        ef,
        settling_band: settling_band(e0, ef),
        e_c,
        e_n,
        i_c,
        d_c,
        e_dc: e_n * d_c,
        e_ic: e_n * i_c,
        convergence_index,
    }
}

/// Full per-trial metrics under the given normalization.
pub fn full_report(record: &TrialRecord, norms: &NormalizationConstants) -> ConvergenceReport {
    report_from_traces(&record.rmse_trace, &record.cum_distance_trace, norms)
}
