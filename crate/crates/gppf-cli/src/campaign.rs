//! The experimental design: n trials × k policies on one surface, with
//! per-policy aggregation of the convergence metrics.

use anyhow::{bail, Result};
use gppf_core::explorer::{run_trial, TrialConfig, TrialRecord, SALT_UNSHARED_START};
use gppf_core::metrics::{full_report, ConvergenceReport, NormalizationConstants};
use gppf_core::policy::Policy;
use gppf_core::stream::mix;
use gppf_core::surface::SurfaceGrid;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub policies: Vec<Policy>,
    pub n_trials: usize,
    pub base_seed: u64,
    /// All policies within a trial share one start position and one
    /// initialization walk (they diverge from sample 11 on).
    pub shared_start: bool,
    pub n_samples: usize,
    pub warm_start: bool,
    pub norms: NormalizationConstants,
}

/// Seed for trial `t`; every policy in the trial derives from it.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    mix(base_seed, trial as u64)
}

fn trial_config(cfg: &CampaignConfig, policy_index: usize, trial: usize) -> TrialConfig {
    let seed_t = trial_seed(cfg.base_seed, trial);
    let (seed, stream_index) = if cfg.shared_start {
        // One seed per trial: identical init streams across policies, with
        // the policy's position decorrelating only its measurement noise.
        (seed_t, policy_index as u32)
    } else {
        (mix(mix(seed_t, SALT_UNSHARED_START), policy_index as u64), 0)
    };
    let mut tc = TrialConfig::new(cfg.policies[policy_index], cfg.n_samples, seed);
    tc.policy_stream_index = stream_index;
    tc.warm_start = cfg.warm_start;
    tc
}

/// A completed (policy, trial) cell.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub record: TrialRecord,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub policy_index: usize,
    pub trial: usize,
    /// A failure carries its rendered error; the campaign keeps going.
    pub result: std::result::Result<TrialRun, String>,
}

/// Mean and sample standard deviation (zero below two samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, std: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Self { mean, std: var.sqrt() }
    }
}

/// Per-policy aggregate over a campaign's trials. The `e_c` aggregate is in
/// normalized units (the report's `e_n`), matching how summary tables are
/// conventionally printed; the raw per-trial reports carry both forms.
#[derive(Debug, Clone)]
pub struct PolicySummary {
    pub label: String,
    /// One slot per trial; `None` marks a failed trial.
    pub reports: Vec<Option<ConvergenceReport>>,
    pub e_c: MeanStd,
    pub i_c: MeanStd,
    pub d_c: MeanStd,
    pub e_dc: MeanStd,
    pub e_ic: MeanStd,
    pub n_trials_ok: usize,
}

impl PolicySummary {
    pub fn from_reports(label: String, reports: Vec<Option<ConvergenceReport>>) -> Self {
        let ok: Vec<&ConvergenceReport> = reports.iter().flatten().collect();
        let col = |f: fn(&ConvergenceReport) -> f64| -> MeanStd {
            MeanStd::of(&ok.iter().map(|r| f(r)).collect::<Vec<f64>>())
        };
        Self {
            e_c: col(|r| r.e_n),
            i_c: col(|r| r.i_c),
            d_c: col(|r| r.d_c),
            e_dc: col(|r| r.e_dc),
            e_ic: col(|r| r.e_ic),
            n_trials_ok: ok.len(),
            label,
            reports,
        }
    }

    pub fn metric_mean(&self, metric: &str) -> Option<f64> {
        let m = match metric {
            "e_c" => self.e_c,
            "i_c" => self.i_c,
            "d_c" => self.d_c,
            "e_dc" => self.e_dc,
            "e_ic" => self.e_ic,
            _ => return None,
        };
        Some(m.mean)
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    /// Every (policy, trial) cell in policy-major order.
    pub outcomes: Vec<TrialOutcome>,
    /// One summary per policy, in config order.
    pub summaries: Vec<PolicySummary>,
}

/// Runs the whole design. Cells execute in parallel on the current rayon
/// pool; outputs are assembled in deterministic policy-major order, so the
/// result is independent of scheduling.
pub fn run_campaign(grid: &SurfaceGrid, cfg: &CampaignConfig) -> CampaignResult {
    assert!(!cfg.policies.is_empty(), "campaign needs at least one policy");
    assert!(cfg.n_trials >= 1, "campaign needs at least one trial");

    let cells: Vec<(usize, usize)> = (0..cfg.policies.len())
        .flat_map(|j| (0..cfg.n_trials).map(move |t| (j, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = cells
        .into_par_iter()
        .map(|(j, t)| {
            let tc = trial_config(cfg, j, t);
            let result = run_trial(grid, &tc)
                .map(|record| {
                    let report = full_report(&record, &cfg.norms);
                    TrialRun { record, report }
                })
                .map_err(|e| e.to_string());
            TrialOutcome { policy_index: j, trial: t, result }
        })
        .collect();

    let summaries = (0..cfg.policies.len())
        .map(|j| {
            let reports = (0..cfg.n_trials)
                .map(|t| {
                    let cell = &outcomes[j * cfg.n_trials + t];
                    debug_assert_eq!((cell.policy_index, cell.trial), (j, t));
                    cell.result.as_ref().ok().map(|run| run.report)
                })
                .collect();
            PolicySummary::from_reports(cfg.policies[j].label(), reports)
        })
        .collect();

    CampaignResult { outcomes, summaries }
}

/// Labels of the policies with the smallest and largest mean for a metric
/// (lower is better for all five); earliest policy wins ties. Policies with
/// no successful trials are skipped.
pub fn best_worst(summaries: &[PolicySummary], metric: &str) -> Result<(String, String)> {
    let mut best: Option<(f64, &str)> = None;
    let mut worst: Option<(f64, &str)> = None;
    for s in summaries {
        if s.n_trials_ok == 0 {
            continue;
        }
        let Some(mean) = s.metric_mean(metric) else {
            bail!("unknown metric {metric:?}; expected one of e_c, i_c, d_c, e_dc, e_ic");
        };
        if best.map_or(true, |(b, _)| mean < b) {
            best = Some((mean, &s.label));
        }
        if worst.map_or(true, |(w, _)| mean > w) {
            worst = Some((mean, &s.label));
        }
    }
    match (best, worst) {
        (Some((_, b)), Some((_, w))) => Ok((b.to_string(), w.to_string())),
        _ => bail!("no successful trials to rank"),
    }
}
