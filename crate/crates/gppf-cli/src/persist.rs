//! On-disk campaign artifacts: per-trial trace CSVs, the policy summary
//! table, the reproducibility manifest, and plot-ready curve files. All
//! writes go through a write-then-rename so no reader ever sees a partial
//! file, and floats render in shortest round-trip form so reloading loses
//! nothing.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gppf_core::explorer::TrialRecord;
use gppf_core::surface::SurfaceGrid;
use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignResult, PolicySummary};
use crate::curves::{policy_curve, render_curve};

pub const TRACE_HEADER: &str = "step,x1,x2,elevation,measured_y,rmse,cum_distance,fallback_move";
pub const SUMMARY_HEADER: &str =
    "policy,e_c_mean,e_c_std,i_c_mean,i_c_std,d_c_mean,d_c_std,e_dc_mean,e_dc_std,e_ic_mean,e_ic_std,n_trials_ok";

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn trace_file_name(policy_label: &str, trial: usize) -> String {
    format!("trace_{policy_label}_trial{trial:02}.csv")
}

pub fn curve_file_name(policy_label: &str) -> String {
    format!("curve_{policy_label}.csv")
}

/// Writes through a sibling temp file and renames into place.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .with_context(|| format!("no file name in {}", path.display()))?
        .to_owned();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

pub fn render_trace(grid: &SurfaceGrid, record: &TrialRecord) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (k, &w) in record.waypoints.iter().enumerate() {
        let p = grid.position(w);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            k + 1,
            p.x1,
            p.x2,
            grid.elevation()[w],
            record.observations[k],
            record.rmse_trace[k],
            record.cum_distance_trace[k],
            u8::from(record.fallback_flags[k]),
        ));
    }
    out
}

/// A trace file's contents; enough to rebuild every convergence metric.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceData {
    pub positions: Vec<(f64, f64)>,
    pub measured: Vec<f64>,
    pub rmse: Vec<f64>,
    pub cum_distance: Vec<f64>,
    pub fallback: Vec<bool>,
}

pub fn parse_trace(text: &str) -> Result<TraceData> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == TRACE_HEADER => {}
        other => bail!("bad trace header: {other:?}"),
    }
    let mut data = TraceData {
        positions: Vec::new(),
        measured: Vec::new(),
        rmse: Vec::new(),
        cum_distance: Vec::new(),
        fallback: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("line {row}: expected 8 fields, found {}", fields.len());
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse()
                .with_context(|| format!("line {row}: bad number {:?}", fields[j]))
        };
        let step: usize = fields[0]
            .parse()
            .with_context(|| format!("line {row}: bad step {:?}", fields[0]))?;
        if step != data.rmse.len() + 1 {
            bail!("line {row}: step {step} out of sequence");
        }
        data.positions.push((num(1)?, num(2)?));
        let _elevation = num(3)?;
        data.measured.push(num(4)?);
        data.rmse.push(num(5)?);
        data.cum_distance.push(num(6)?);
        data.fallback.push(match fields[7] {
            "0" => false,
            "1" => true,
            other => bail!("line {row}: bad fallback flag {other:?}"),
        });
    }
    if data.rmse.is_empty() {
        bail!("trace has no rows");
    }
    Ok(data)
}

pub fn render_summary(summaries: &[PolicySummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.label,
            s.e_c.mean,
            s.e_c.std,
            s.i_c.mean,
            s.i_c.std,
            s.d_c.mean,
            s.d_c.std,
            s.e_dc.mean,
            s.e_dc.std,
            s.e_ic.mean,
            s.e_ic.std,
            s.n_trials_ok,
        ));
    }
    out
}

/// Everything needed to reproduce a campaign byte for byte. Parallelism and
/// the output directory are deliberately absent: they must not change
/// results.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool_version: String,
    pub surface: String,
    pub noise_std: f64,
    pub policies: Vec<String>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub shared_start: bool,
    pub n_samples: usize,
    pub warm_start: bool,
    pub stopping_mode: String,
    pub norm_mode: String,
    pub normalization: ManifestNorms,
    pub trial_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestNorms {
    pub target_range: f64,
    pub i_max: usize,
    pub domain_length: f64,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).context("serializing manifest")?;
    text.push('\n');
    atomic_write(&dir.join(MANIFEST_FILE), &text)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes the full artifact set for a campaign: one trace per successful
/// (policy, trial) cell, the summary table, the manifest, and one curve
/// file per policy with data. Returns the paths written.
pub fn write_campaign(
    dir: &Path,
    grid: &SurfaceGrid,
    manifest: &Manifest,
    result: &CampaignResult,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();

    for outcome in &result.outcomes {
        if let Ok(run) = &outcome.result {
            let label = &result.summaries[outcome.policy_index].label;
            let path = dir.join(trace_file_name(label, outcome.trial));
            atomic_write(&path, &render_trace(grid, &run.record))?;
            written.push(path);
        }
    }

    let summary_path = dir.join(SUMMARY_FILE);
    atomic_write(&summary_path, &render_summary(&result.summaries))?;
    written.push(summary_path);

    write_manifest(dir, manifest)?;
    written.push(dir.join(MANIFEST_FILE));

    let n_trials = manifest.n_trials;
    for (j, summary) in result.summaries.iter().enumerate() {
        let mut rmse_traces: Vec<&[f64]> = Vec::new();
        let mut cum_traces: Vec<&[f64]> = Vec::new();
        for t in 0..n_trials {
            if let Ok(run) = &result.outcomes[j * n_trials + t].result {
                rmse_traces.push(&run.record.rmse_trace);
                cum_traces.push(&run.record.cum_distance_trace);
            }
        }
        if rmse_traces.is_empty() {
            continue;
        }
        let curve = policy_curve(&rmse_traces, &cum_traces, manifest.normalization.target_range);
        let path = dir.join(curve_file_name(&summary.label));
        atomic_write(&path, &render_curve(&curve))?;
        written.push(path);
    }

    Ok(written)
}
