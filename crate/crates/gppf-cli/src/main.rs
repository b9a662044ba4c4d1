use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gppf_cli::campaign::{run_campaign, CampaignConfig};
use gppf_cli::config::{
    default_policies, parse_policy, resolve_surface, NormMode, ResolvedSurface, StoppingMode,
    SurfaceChoice,
};
use gppf_cli::curves::{policy_curve, render_curve};
use gppf_cli::persist::{
    atomic_write, curve_file_name, parse_trace, read_manifest, render_trace, trace_file_name,
    write_campaign, Manifest, ManifestNorms,
};
use gppf_core::explorer::{run_trial, TrialConfig};
use gppf_core::metrics::full_report;

#[derive(Parser)]
#[command(
    name = "gppf",
    version,
    about = "Cost-aware Gaussian-process exploration of gridded surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one exploration trial and write its trace file.
    Trial(TrialArgs),
    /// Run the multi-policy campaign and write traces, summary, manifest,
    /// and curves.
    Campaign(CampaignArgs),
    /// Print a surface's grid facts.
    SurfaceInfo(SurfaceInfoArgs),
    /// Rebuild plot curves from a written campaign directory.
    ExportCurves(ExportCurvesArgs),
}

#[derive(Args)]
struct SurfaceFlags {
    /// Surface to explore.
    #[arg(long, value_enum)]
    surface: SurfaceChoice,
    /// DEM file for the lunar surface.
    #[arg(long)]
    dem: Option<PathBuf>,
    /// Use the squared-cosine Townsend variant.
    #[arg(long)]
    townsend_classic: bool,
    /// Measurement noise standard deviation (default: 1% of the target range).
    #[arg(long)]
    noise_std: Option<f64>,
    /// Sample-budget rule.
    #[arg(long, value_enum, default_value = "paper")]
    stopping: StoppingMode,
    /// Source of the metric normalization constants.
    #[arg(long, value_enum, default_value = "computed")]
    norm: NormMode,
}

impl SurfaceFlags {
    fn resolve(&self) -> Result<ResolvedSurface> {
        let resolved = resolve_surface(
            self.surface,
            self.dem.as_deref(),
            self.townsend_classic,
            self.noise_std,
            self.stopping,
            self.norm,
        )?;
        if resolved.crater_fallback {
            eprintln!("warning: no --dem given; using the synthetic crater surface");
        }
        Ok(resolved)
    }
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    surface: SurfaceFlags,
    /// Query policy: conventional, normalized, or constrained:<m>.
    #[arg(long, default_value = "conventional")]
    policy: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Retrain from the default hyperparameters every step instead of
    /// warm-starting from the previous step's.
    #[arg(long)]
    cold_start: bool,
    /// Output directory.
    #[arg(long, env = "GPPF_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    surface: SurfaceFlags,
    /// Query policy, repeatable; defaults to the eight-strategy set.
    #[arg(long)]
    policy: Vec<String>,
    /// Trials per policy.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Give every policy its own start and init walk instead of sharing
    /// them within a trial.
    #[arg(long)]
    no_shared_start: bool,
    /// Retrain from the default hyperparameters every step.
    #[arg(long)]
    cold_start: bool,
    /// Worker threads for trial execution (0 = all cores). Results do not
    /// depend on this.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, env = "GPPF_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct SurfaceInfoArgs {
    #[command(flatten)]
    surface: SurfaceFlags,
}

#[derive(Args)]
struct ExportCurvesArgs {
    /// Campaign directory holding manifest.json and trace files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Curve family to export.
    #[arg(long, default_value = "nrmse-vs-distance")]
    metric: String,
    /// Destination directory (default: the input directory).
    #[arg(long, env = "GPPF_OUT")]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Trial(args) => cmd_trial(args),
        Command::Campaign(args) => cmd_campaign(args),
        Command::SurfaceInfo(args) => cmd_surface_info(args),
        Command::ExportCurves(args) => cmd_export_curves(args),
    }
}

fn cmd_trial(args: TrialArgs) -> Result<()> {
    let resolved = args.surface.resolve()?;
    let policy = parse_policy(&args.policy)?;
    let mut tc = TrialConfig::new(policy, resolved.n_samples, args.seed);
    tc.warm_start = !args.cold_start;
    let record = run_trial(&resolved.grid, &tc)
        .map_err(|e| anyhow::anyhow!("trial failed: {e}"))?;
    let report = full_report(&record, &resolved.norms);

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join(trace_file_name(&policy.label(), 0));
    atomic_write(&path, &render_trace(&resolved.grid, &record))?;

    println!(
        "{}: e_c={:.5} i_c={:.5} d_c={:.5} e_dc={:.5} e_ic={:.5} (converged at sample {})",
        policy.label(),
        report.e_n,
        report.i_c,
        report.d_c,
        report.e_dc,
        report.e_ic,
        report.convergence_index,
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_campaign(args: CampaignArgs) -> Result<()> {
    let resolved = args.surface.resolve()?;
    let policies = if args.policy.is_empty() {
        default_policies()
    } else {
        args.policy
            .iter()
            .map(|s| parse_policy(s))
            .collect::<Result<Vec<_>>>()?
    };
    let labels: Vec<String> = policies.iter().map(|p| p.label()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            bail!("duplicate policy {l}");
        }
    }
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }

    let cfg = CampaignConfig {
        policies,
        n_trials: args.trials,
        base_seed: args.seed,
        shared_start: !args.no_shared_start,
        n_samples: resolved.n_samples,
        warm_start: !args.cold_start,
        norms: resolved.norms,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("building the worker pool")?;
    let result = pool.install(|| run_campaign(&resolved.grid, &cfg));

    for outcome in &result.outcomes {
        if let Err(e) = &outcome.result {
            eprintln!(
                "warning: {} trial {} failed: {e}",
                cfg.policies[outcome.policy_index].label(),
                outcome.trial
            );
        }
    }

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        surface: resolved.label.clone(),
        noise_std: resolved.grid.noise_std(),
        policies: labels,
        n_trials: cfg.n_trials,
        base_seed: cfg.base_seed,
        shared_start: cfg.shared_start,
        n_samples: cfg.n_samples,
        warm_start: cfg.warm_start,
        stopping_mode: mode_name(args.surface.stopping),
        norm_mode: norm_name(args.surface.norm),
        normalization: ManifestNorms {
            target_range: cfg.norms.target_range,
            i_max: cfg.norms.i_max,
            domain_length: cfg.norms.domain_length,
        },
        trial_seeds: (0..cfg.n_trials)
            .map(|t| gppf_cli::campaign::trial_seed(cfg.base_seed, t))
            .collect(),
    };
    write_campaign(&args.out, &resolved.grid, &manifest, &result)?;

    for s in &result.summaries {
        println!(
            "{}: e_c={:.5}±{:.5} i_c={:.5}±{:.5} d_c={:.5}±{:.5} e_dc={:.5}±{:.5} e_ic={:.5}±{:.5} (ok {}/{})",
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
            cfg.n_trials,
        );
    }
    println!("wrote campaign artifacts to {}", args.out.display());
    Ok(())
}

fn mode_name(mode: StoppingMode) -> String {
    match mode {
        StoppingMode::Paper => "paper".to_string(),
        StoppingMode::Computed => "computed".to_string(),
    }
}

fn norm_name(mode: NormMode) -> String {
    match mode {
        NormMode::Computed => "computed".to_string(),
        NormMode::Paper => "paper".to_string(),
    }
}

fn cmd_surface_info(args: SurfaceInfoArgs) -> Result<()> {
    let resolved = args.surface.resolve()?;
    let grid = &resolved.grid;
    let (minima, maxima) = grid.count_local_extrema();
    println!("surface: {}", resolved.label);
    println!(
        "grid points: {} ({} x {})",
        grid.len(),
        grid.n1(),
        grid.n2()
    );
    println!("grid step: {}", grid.step());
    println!("domain length: {}", grid.domain_length());
    println!("target range: {:.2}", grid.target_range());
    println!("extrema (minima, maxima): ({minima}, {maxima})");
    println!("sample budget: {}", resolved.n_samples);
    println!("noise std: {}", grid.noise_std());
    Ok(())
}

fn cmd_export_curves(args: ExportCurvesArgs) -> Result<()> {
    if args.metric != "nrmse-vs-distance" {
        bail!(
            "unknown metric {:?}; available: nrmse-vs-distance",
            args.metric
        );
    }
    let manifest = read_manifest(&args.input)?;
    let out = args.out.unwrap_or_else(|| args.input.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut written = 0;
    for label in &manifest.policies {
        let mut rmse = Vec::new();
        let mut cum = Vec::new();
        for t in 0..manifest.n_trials {
            let path = args.input.join(trace_file_name(label, t));
            if !path.exists() {
                continue; // failed trial: no trace was written
            }
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let data = parse_trace(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            rmse.push(data.rmse);
            cum.push(data.cum_distance);
        }
        if rmse.is_empty() {
            continue;
        }
        let rmse_refs: Vec<&[f64]> = rmse.iter().map(Vec::as_slice).collect();
        let cum_refs: Vec<&[f64]> = cum.iter().map(Vec::as_slice).collect();
        let curve = policy_curve(&rmse_refs, &cum_refs, manifest.normalization.target_range);
        atomic_write(&out.join(curve_file_name(label)), &render_curve(&curve))?;
        written += 1;
    }
    println!("wrote {written} curve files to {}", out.display());
    Ok(())
}
