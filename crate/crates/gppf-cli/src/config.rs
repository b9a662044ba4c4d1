//! Flag-level configuration: turning surface/policy/stopping choices into a
//! concrete grid, sample budget, and normalization constants.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gppf_core::explorer::computed_sample_budget;
use gppf_core::metrics::NormalizationConstants;
use gppf_core::policy::Policy;
use gppf_core::surface::{
    build_parabola, build_synthetic_crater, build_townsend, build_townsend_classic, parse_dem,
    SurfaceGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SurfaceChoice {
    Parabola,
    Townsend,
    /// Lunar terrain from a DEM file (synthetic crater if none given).
    Lunar,
}

/// How the per-trial sample budget is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StoppingMode {
    /// The published counts: 109 for the analytic surfaces, 155 for lunar.
    Paper,
    /// A quarter of the grid points.
    Computed,
}

/// Where the normalization constants for the scaled metrics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NormMode {
    /// Measured from the constructed surface and the actual budget.
    Computed,
    /// The published per-surface constants, for table comparability.
    Paper,
}

const PAPER_STOP_ANALYTIC: usize = 109;
const PAPER_STOP_LUNAR: usize = 155;

/// A surface ready to explore, with its budget and metric scaling resolved.
#[derive(Debug, Clone)]
pub struct ResolvedSurface {
    pub grid: SurfaceGrid,
    pub n_samples: usize,
    pub norms: NormalizationConstants,
    /// Human-readable surface identity for manifests and logs.
    pub label: String,
    /// True when `lunar` was requested without a DEM and the synthetic
    /// crater stood in.
    pub crater_fallback: bool,
}

pub fn resolve_surface(
    choice: SurfaceChoice,
    dem: Option<&Path>,
    townsend_classic: bool,
    noise_std: Option<f64>,
    stopping: StoppingMode,
    norm: NormMode,
) -> Result<ResolvedSurface> {
    if townsend_classic && choice != SurfaceChoice::Townsend {
        bail!("--townsend-classic only applies to --surface townsend");
    }
    if dem.is_some() && choice != SurfaceChoice::Lunar {
        bail!("--dem only applies to --surface lunar");
    }

    let (mut grid, label, crater_fallback) = match choice {
        SurfaceChoice::Parabola => (build_parabola(0.0), String::from("parabola"), false),
        SurfaceChoice::Townsend if townsend_classic => (
            build_townsend_classic(0.0),
            String::from("townsend-classic"),
            false,
        ),
        SurfaceChoice::Townsend => (build_townsend(0.0), String::from("townsend"), false),
        SurfaceChoice::Lunar => match dem {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading DEM {}", path.display()))?;
                let grid = parse_dem(&text)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                (grid, format!("lunar-dem:{}", path.display()), false)
            }
            None => (
                build_synthetic_crater(0.0),
                String::from("synthetic-crater"),
                true,
            ),
        },
    };

    // Default measurement noise is 1% of the target spread.
    let noise = match noise_std {
        Some(v) => v,
        None => 0.01 * grid.target_range(),
    };
    grid.set_noise_std(noise)
        .map_err(|e| anyhow::anyhow!("invalid noise: {e}"))?;

    let n_samples = match stopping {
        StoppingMode::Paper => match choice {
            SurfaceChoice::Parabola | SurfaceChoice::Townsend => PAPER_STOP_ANALYTIC,
            SurfaceChoice::Lunar => PAPER_STOP_LUNAR.min(grid.len()),
        },
        StoppingMode::Computed => computed_sample_budget(&grid),
    };

    let norms = match norm {
        NormMode::Computed => NormalizationConstants::for_grid(&grid, n_samples),
        NormMode::Paper => match choice {
            SurfaceChoice::Parabola => NormalizationConstants::new(2.00, PAPER_STOP_ANALYTIC, 2.0),
            SurfaceChoice::Townsend => NormalizationConstants::new(5.59, PAPER_STOP_ANALYTIC, 5.0),
            SurfaceChoice::Lunar => NormalizationConstants::new(0.50, PAPER_STOP_LUNAR, 6.0),
        },
    };

    Ok(ResolvedSurface {
        grid,
        n_samples,
        norms,
        label,
        crater_fallback,
    })
}

/// Parses the policy grammar: `conventional`, `normalized`, or
/// `constrained:<m>` with a positive horizon multiplier.
pub fn parse_policy(spec: &str) -> Result<Policy> {
    match spec {
        "conventional" => Ok(Policy::Conventional),
        "normalized" => Ok(Policy::DistanceNormalized),
        _ => {
            let Some(m) = spec.strip_prefix("constrained:") else {
                bail!(
                    "unknown policy {spec:?}; expected conventional, normalized, \
                     or constrained:<m>"
                );
            };
            let horizon: u32 = m
                .parse()
                .with_context(|| format!("bad horizon multiplier {m:?}"))?;
            if horizon == 0 {
                bail!("horizon multiplier must be at least 1");
            }
            Ok(Policy::DistanceConstrained { horizon_multiplier: horizon })
        }
    }
}

/// The default campaign policy set: six constrained horizons, then
/// distance-normalized, then conventional.
pub fn default_policies() -> Vec<Policy> {
    let mut policies: Vec<Policy> = [1, 2, 3, 5, 7, 10]
        .into_iter()
        .map(|m| Policy::DistanceConstrained { horizon_multiplier: m })
        .collect();
    policies.push(Policy::DistanceNormalized);
    policies.push(Policy::Conventional);
    policies
}
