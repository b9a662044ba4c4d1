//! Plot-ready aggregation: per-step mean cumulative distance and mean ±
//! standard deviation of the normalized RMSE across a policy's trials.

use crate::campaign::MeanStd;

pub const CURVE_HEADER: &str = "step,mean_cum_distance,mean_nrmse,std_nrmse";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_cum_distance: f64,
    pub mean_nrmse: f64,
    pub std_nrmse: f64,
}

/// Aggregates aligned traces (one pair per successful trial) into one curve
/// point per step.
pub fn policy_curve(
    rmse_traces: &[&[f64]],
    cum_traces: &[&[f64]],
    target_range: f64,
) -> Vec<CurvePoint> {
    assert!(!rmse_traces.is_empty(), "no traces to aggregate");
    assert_eq!(rmse_traces.len(), cum_traces.len());
    let n_steps = rmse_traces[0].len();
    for (r, c) in rmse_traces.iter().zip(cum_traces) {
        assert_eq!(r.len(), n_steps, "trials of unequal length");
        assert_eq!(c.len(), n_steps, "trials of unequal length");
    }
    (0..n_steps)
        .map(|k| {
            let nrmse: Vec<f64> = rmse_traces.iter().map(|r| r[k] / target_range).collect();
            let stats = MeanStd::of(&nrmse);
            let mean_cum =
                cum_traces.iter().map(|c| c[k]).sum::<f64>() / cum_traces.len() as f64;
            CurvePoint {
                step: k + 1,
                mean_cum_distance: mean_cum,
                mean_nrmse: stats.mean,
                std_nrmse: stats.std,
            }
        })
        .collect()
}

pub fn render_curve(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.step, p.mean_cum_distance, p.mean_nrmse, p.std_nrmse
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_by_hand() {
        let rmse_a = [1.0, 0.5];
        let rmse_b = [3.0, 0.7];
        let cum_a = [1.0, 2.0];
        let cum_b = [2.0, 3.0];
        let curve = policy_curve(
            &[&rmse_a, &rmse_b],
            &[&cum_a, &cum_b],
            2.0,
        );
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].step, 1);
        assert_eq!(curve[0].mean_cum_distance, 1.5);
        // NRMSE samples 0.5 and 1.5: mean 1, sample std sqrt(0.5).
        assert_eq!(curve[0].mean_nrmse, 1.0);
        assert!((curve[0].std_nrmse - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(curve[1].mean_cum_distance, 2.5);
    }

    #[test]
    fn single_trial_has_zero_std() {
        let rmse = [0.4, 0.2, 0.1];
        let cum = [1.0, 2.0, 3.0];
        let curve = policy_curve(&[&rmse], &[&cum], 1.0);
        assert!(curve.iter().all(|p| p.std_nrmse == 0.0));
        assert_eq!(curve[2].mean_nrmse, 0.1);
    }

    #[test]
    fn renders_with_header_and_one_row_per_step() {
        let rmse = [0.4, 0.2];
        let cum = [1.0, 2.0];
        let text = render_curve(&policy_curve(&[&rmse], &[&cum], 1.0));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CURVE_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
    }
}
