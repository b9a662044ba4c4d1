//! Acquisition policies: how the next sampling location is chosen from the
//! posterior variance field and the cost of getting there.
//!
//! All three policies maximize a score over the unsampled points `D_U`:
//! plain variance (conventional), variance divided by planar distance from
//! the current position (distance-normalized), or variance restricted to a
//! movement horizon of `m` grid steps (distance-constrained). Distances here
//! are planar; the elevation term only enters traveled-distance accounting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::point::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Global variance argmax.
    Conventional,
    /// Variance per unit of planar travel.
    DistanceNormalized,
    /// Variance argmax within `horizon_multiplier` grid steps of the
    /// current position.
    DistanceConstrained { horizon_multiplier: u32 },
}

impl Policy {
    /// Stable label used in file names, summary rows, and reports.
    pub fn label(&self) -> String {
        match self {
            Policy::Conventional => String::from("conventional"),
            Policy::DistanceNormalized => String::from("normalized"),
            Policy::DistanceConstrained { horizon_multiplier } => {
                format!("constrained-{horizon_multiplier}")
            }
        }
    }
}

/// Everything a policy is allowed to look at when selecting: the per-point
/// posterior variances, the grid geometry, the agent's position, and the
/// unsampled mask defining `D_U`.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub variances: &'a [f64],
    pub positions: &'a [Point2],
    /// Flattened index of the agent's position; must be sampled already.
    pub current: usize,
    /// `true` marks membership in `D_U`.
    pub unsampled: &'a [bool],
    /// Grid spacing, the unit the movement horizon is expressed in.
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyError {
    /// `D_U` is empty; the caller must stop before exhausting the grid.
    NoUnsampledPoints,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::NoUnsampledPoints => write!(f, "no unsampled grid points remain"),
        }
    }
}

impl core::error::Error for PolicyError {}

/// Slack added to the horizon radius so grid points lying exactly at
/// `m * step` (axis neighbors at m = 1, for instance) survive floating-point
/// representation of the coordinates.
pub fn geometric_epsilon(step: f64) -> f64 {
    1e-9 * step
}

/// The chosen index plus whether it came from the empty-horizon fallback
/// rather than the policy's own candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    pub fallback: bool,
}

/// The feasible set a policy maximizes over. `fallback` marks the
/// nearest-unsampled singleton used when a constrained horizon is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub indices: Vec<usize>,
    pub fallback: bool,
}

fn validate(ctx: &SelectionContext<'_>) {
    let n = ctx.variances.len();
    assert_eq!(n, ctx.positions.len(), "variances and positions disagree");
    assert_eq!(n, ctx.unsampled.len(), "variances and mask disagree");
    assert!(ctx.current < n, "current index out of range");
    assert!(
        !ctx.unsampled[ctx.current],
        "current position must be sampled; normalized scores would divide by zero"
    );
}

fn nearest_unsampled(ctx: &SelectionContext<'_>) -> usize {
    let here = ctx.positions[ctx.current];
    let mut best = usize::MAX;
    let mut best_sq = f64::INFINITY;
    for i in 0..ctx.unsampled.len() {
        if ctx.unsampled[i] {
            let sq = here.sq_distance(ctx.positions[i]);
            if sq < best_sq {
                best_sq = sq;
                best = i;
            }
        }
    }
    best
}

/// The indices `select_next` maximizes over, fallback already applied.
pub fn candidate_set(
    policy: &Policy,
    ctx: &SelectionContext<'_>,
) -> Result<CandidateSet, PolicyError> {
    validate(ctx);
    if !ctx.unsampled.iter().any(|u| *u) {
        return Err(PolicyError::NoUnsampledPoints);
    }
    let all_unsampled = || (0..ctx.unsampled.len()).filter(|i| ctx.unsampled[*i]);
    match policy {
        Policy::Conventional | Policy::DistanceNormalized => Ok(CandidateSet {
            indices: all_unsampled().collect(),
            fallback: false,
        }),
        Policy::DistanceConstrained { horizon_multiplier } => {
            let r = *horizon_multiplier as f64 * ctx.step + geometric_epsilon(ctx.step);
            let r_sq = r * r;
            let here = ctx.positions[ctx.current];
            let within: Vec<usize> = all_unsampled()
                .filter(|i| here.sq_distance(ctx.positions[*i]) <= r_sq)
                .collect();
            if within.is_empty() {
                Ok(CandidateSet {
                    indices: alloc::vec![nearest_unsampled(ctx)],
                    fallback: true,
                })
            } else {
                Ok(CandidateSet { indices: within, fallback: false })
            }
        }
    }
}

/// Applies the policy: argmax of its score over the candidate set, ties
/// broken by the smallest flattened index.
pub fn select(policy: &Policy, ctx: &SelectionContext<'_>) -> Result<Selection, PolicyError> {
    let candidates = candidate_set(policy, ctx)?;
    let here = ctx.positions[ctx.current];
    let score = |i: usize| -> f64 {
        match policy {
            Policy::Conventional | Policy::DistanceConstrained { .. } => ctx.variances[i],
            Policy::DistanceNormalized => {
                let d = here.planar_distance(ctx.positions[i]);
                debug_assert!(d > 0.0);
                ctx.variances[i] / d
            }
        }
    };
    let mut best = candidates.indices[0];
    let mut best_score = score(best);
    for &i in &candidates.indices[1..] {
        let s = score(i);
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    Ok(Selection { index: best, fallback: candidates.fallback })
}

/// [`select`] reduced to the index alone.
pub fn select_next(policy: &Policy, ctx: &SelectionContext<'_>) -> Result<usize, PolicyError> {
    select(policy, ctx).map(|s| s.index)
}
