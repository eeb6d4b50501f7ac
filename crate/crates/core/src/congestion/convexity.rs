use serde::Serialize;

use crate::error::Result;
use crate::profile::{Category, StrategyProfile};
use crate::sampling::stream_rng;

use super::CongestionModel;

/// Slack allowed on midpoint convexity.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvexityVerdict {
    /// Costs claim the required regularity and no sample contradicts convexity.
    Passed,
    /// A sampled segment violates midpoint convexity.
    Disproof,
    /// No violation found, but the cost regularity is not established.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    pub verdict: ConvexityVerdict,
    /// Whether every arc used by a splittable participant claims a C1,
    /// nondecreasing, convex cost.
    pub precondition: bool,
    pub segments: usize,
    /// Largest `u(mid) - (u(a) + u(b)) / 2` observed.
    pub worst_excess: f64,
    /// Participant id of the worst segment.
    pub worst_participant: Option<String>,
}

/// Samples segments in each splittable participant's own simplex, other
/// participants fixed at a random profile, and tests midpoint convexity of
/// the expected cost.
pub fn check_splittable_convexity(model: &CongestionModel, samples: usize, seed: u64) -> Result<ConvexityReport> {
    let sizes = model.sizes();
    let precondition = model.splittable_costs_convex();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_participant = None;
    let mut segments = 0;
    for (i, d) in model.demands().iter().enumerate() {
        if d.category != Category::AtomicSplittable {
            continue;
        }
        for k in 0..samples {
            let mut rng = stream_rng(seed, (i * samples + k) as u64);
            let base = StrategyProfile::dirichlet(&sizes, &mut rng).into_blocks();
            let own = [sizes[i]];
            let a = StrategyProfile::dirichlet(&own, &mut rng).into_blocks().remove(0);
            let b = StrategyProfile::dirichlet(&own, &mut rng).into_blocks().remove(0);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            let cost = |block: Vec<f64>| {
                let mut x = base.clone();
                x[i] = block;
                model.expected_cost(&x, i)
            };
            let excess = cost(mid) - 0.5 * (cost(a) + cost(b));
            segments += 1;
            if excess > worst {
                worst = excess;
                worst_participant = Some(d.id.clone());
            }
        }
    }
    let violated = worst > CONVEXITY_TOL;
    let verdict = if violated {
        ConvexityVerdict::Disproof
    } else if precondition {
        ConvexityVerdict::Passed
    } else {
        ConvexityVerdict::Inconclusive
    };
    Ok(ConvexityReport {
        verdict,
        precondition,
        segments,
        worst_excess: if segments == 0 { 0.0 } else { worst },
        worst_participant,
    })
}
