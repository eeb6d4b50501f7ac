//! Lyapunov candidates for the six dynamics and the potential, with
//! monotonicity checks along integrated trajectories.

use std::fmt;

use serde::Serialize;

use crate::dynamics::{excess, DynamicsKind, Trajectory};
use crate::equilibrium::{vi_residual_from, TOL_VERIFY};
use crate::error::{Error, Result};
use crate::game::{Blocks, GameSpec};
use crate::profile::StrategyProfile;
use crate::simplex::project_simplex_raw;

/// Absolute part of the monotonicity tolerance; scaled by `1 + |H(x_0)|`.
pub const LYAP_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LyapunovKind {
    /// The game's potential `W`; increases along the dynamics.
    Potential,
    RelativeEntropy { anchor: StrategyProfile },
    BnnExcess,
    SmithPairwise,
    HalfSquaredDistance { anchor: StrategyProfile },
    GpRegularizedGap,
    BrGap,
}

impl LyapunovKind {
    /// Entropy relative to an equilibrium anchor.
    pub fn relative_entropy(game: &GameSpec, anchor: StrategyProfile) -> Result<Self> {
        validate_anchor(game, &anchor)?;
        Ok(LyapunovKind::RelativeEntropy { anchor })
    }

    /// Half squared distance to an equilibrium anchor.
    pub fn half_squared_distance(game: &GameSpec, anchor: StrategyProfile) -> Result<Self> {
        validate_anchor(game, &anchor)?;
        Ok(LyapunovKind::HalfSquaredDistance { anchor })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LyapunovKind::Potential => "potential",
            LyapunovKind::RelativeEntropy { .. } => "relative-entropy",
            LyapunovKind::BnnExcess => "bnn-excess",
            LyapunovKind::SmithPairwise => "smith-pairwise",
            LyapunovKind::HalfSquaredDistance { .. } => "half-squared-distance",
            LyapunovKind::GpRegularizedGap => "gp-regularized-gap",
            LyapunovKind::BrGap => "br-gap",
        }
    }

    /// The potential increases; every other kind decreases.
    pub fn increasing(&self) -> bool {
        matches!(self, LyapunovKind::Potential)
    }

    pub fn anchor(&self) -> Option<&StrategyProfile> {
        match self {
            LyapunovKind::RelativeEntropy { anchor } | LyapunovKind::HalfSquaredDistance { anchor } => {
                Some(anchor)
            }
            _ => None,
        }
    }

    /// The dynamics this function is certified for. The potential works with all six.
    pub fn certified_for(&self, dynamics: DynamicsKind) -> bool {
        matches!(
            (self, dynamics),
            (LyapunovKind::Potential, _)
                | (LyapunovKind::RelativeEntropy { .. }, DynamicsKind::Rd)
                | (LyapunovKind::BnnExcess, DynamicsKind::Bnn)
                | (LyapunovKind::SmithPairwise, DynamicsKind::Smith)
                | (LyapunovKind::HalfSquaredDistance { .. }, DynamicsKind::Lp)
                | (LyapunovKind::GpRegularizedGap, DynamicsKind::Gp)
                | (LyapunovKind::BrGap, DynamicsKind::Br)
        )
    }

    /// The paired function for a dynamics; anchored kinds need an equilibrium.
    pub fn paired_with(
        dynamics: DynamicsKind,
        game: &GameSpec,
        anchor: Option<StrategyProfile>,
    ) -> Result<Self> {
        let need = |a: Option<StrategyProfile>| {
            a.ok_or_else(|| Error::Config(format!("{dynamics} pairing needs an equilibrium anchor")))
        };
        match dynamics {
            DynamicsKind::Rd => LyapunovKind::relative_entropy(game, need(anchor)?),
            DynamicsKind::Bnn => Ok(LyapunovKind::BnnExcess),
            DynamicsKind::Smith => Ok(LyapunovKind::SmithPairwise),
            DynamicsKind::Lp => LyapunovKind::half_squared_distance(game, need(anchor)?),
            DynamicsKind::Gp => Ok(LyapunovKind::GpRegularizedGap),
            DynamicsKind::Br => Ok(LyapunovKind::BrGap),
        }
    }
}

impl fmt::Display for LyapunovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn validate_anchor(game: &GameSpec, anchor: &StrategyProfile) -> Result<()> {
    let phi = game.evaluate(anchor)?;
    let residual = vi_residual_from(anchor.blocks(), &phi);
    if residual > TOL_VERIFY {
        return Err(Error::InvalidAnchor { residual });
    }
    Ok(())
}

fn smith_block(x: &[f64], phi: &[f64]) -> f64 {
    let mut s = 0.0;
    for (p, xp) in x.iter().enumerate() {
        for q in 0..x.len() {
            let d = (phi[q] - phi[p]).max(0.0);
            s += xp * d * d;
        }
    }
    s
}

fn gp_gap_block(x: &[f64], phi: &[f64]) -> f64 {
    let shifted: Vec<f64> = x.iter().zip(phi).map(|(a, b)| a + b).collect();
    let projected = project_simplex_raw(&shifted);
    let dist2: f64 = projected
        .iter()
        .zip(&shifted)
        .map(|(p, s)| (p - s).powi(2))
        .sum();
    0.5 * phi.iter().map(|v| v * v).sum::<f64>() - 0.5 * dist2
}

/// `H(x)` given the evaluation at `x`.
pub(crate) fn lyapunov_value_from(
    kind: &LyapunovKind,
    game: &GameSpec,
    x: &[Vec<f64>],
    phi: &Blocks,
) -> Result<f64> {
    Ok(match kind {
        LyapunovKind::Potential => game
            .potential()
            .ok_or_else(|| Error::Config("game has no potential".into()))?
            .value(x),
        LyapunovKind::RelativeEntropy { anchor } => {
            let mut h = 0.0;
            for (i, (a, b)) in anchor.blocks().iter().zip(x).enumerate() {
                for (p, (&ap, &bp)) in a.iter().zip(b).enumerate() {
                    if ap > 0.0 {
                        if bp <= 0.0 {
                            let participant = &game.participants()[i];
                            return Err(Error::LyapunovDomain {
                                participant: participant.id.clone(),
                                choice: participant.choices[p].clone(),
                            });
                        }
                        h += ap * (ap / bp).ln();
                    }
                }
            }
            h
        }
        LyapunovKind::BnnExcess => {
            0.5 * x
                .iter()
                .zip(phi)
                .map(|(a, b)| excess(a, b).iter().map(|h| h * h).sum::<f64>())
                .sum::<f64>()
        }
        LyapunovKind::SmithPairwise => x.iter().zip(phi).map(|(a, b)| smith_block(a, b)).sum(),
        LyapunovKind::HalfSquaredDistance { anchor } => {
            0.5 * anchor
                .blocks()
                .iter()
                .flatten()
                .zip(x.iter().flatten())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        }
        LyapunovKind::GpRegularizedGap => x.iter().zip(phi).map(|(a, b)| gp_gap_block(a, b)).sum(),
        LyapunovKind::BrGap => vi_residual_from(x, phi),
    })
}

/// `H(x)` for the given kind.
pub fn lyapunov_value(kind: &LyapunovKind, game: &GameSpec, x: &StrategyProfile) -> Result<f64> {
    let phi = game.evaluate(x)?;
    lyapunov_value_from(kind, game, x.blocks(), &phi)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub kind: String,
    pub dynamics: DynamicsKind,
    /// Whether `(kind, dynamics)` is one of the certified pairings.
    pub certified: bool,
    pub initial_value: Option<f64>,
    pub final_value: Option<f64>,
    /// Largest step against the expected direction (positive means adverse).
    pub max_adverse_step: f64,
    pub adverse_step_index: Option<usize>,
    pub tolerance: f64,
    /// Grid points where the function is undefined (entropy support condition).
    pub out_of_domain: Vec<usize>,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Per-step monotonicity of `H` along a trajectory. Steps touching a point
/// outside the domain are skipped and listed.
pub fn monotonicity_report(
    kind: &LyapunovKind,
    game: &GameSpec,
    trajectory: &Trajectory,
) -> Result<MonotonicityReport> {
    let mut values = Vec::with_capacity(trajectory.len());
    for x in &trajectory.profiles {
        match lyapunov_value(kind, game, x) {
            Ok(v) => values.push(Some(v)),
            Err(Error::LyapunovDomain { .. }) => values.push(None),
            Err(e) => return Err(e),
        }
    }
    let sign = if kind.increasing() { -1.0 } else { 1.0 };
    let out_of_domain: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| k)
        .collect();
    let mut max_adverse = f64::NEG_INFINITY;
    let mut at = None;
    for (k, w) in values.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            let adverse = sign * (b - a);
            if adverse > max_adverse {
                max_adverse = adverse;
                at = Some(k);
            }
        }
    }
    if at.is_none() {
        max_adverse = 0.0;
    }
    let initial = values.first().copied().flatten();
    let tolerance = LYAP_TOL * (1.0 + initial.unwrap_or(0.0).abs());
    let certified = kind.certified_for(trajectory.kind);
    let mut notes = Vec::new();
    if !certified {
        notes.push(format!(
            "{} is not a certified pairing for {}",
            kind.name(),
            trajectory.kind
        ));
    }
    if matches!(kind, LyapunovKind::GpRegularizedGap | LyapunovKind::BrGap) {
        notes.push("assumes a continuously differentiable evaluation function".into());
    }
    if !out_of_domain.is_empty() {
        notes.push(format!("{} grid points outside the domain", out_of_domain.len()));
    }
    Ok(MonotonicityReport {
        kind: kind.name().to_string(),
        dynamics: trajectory.kind,
        certified,
        initial_value: initial,
        final_value: values.last().copied().flatten(),
        max_adverse_step: max_adverse,
        adverse_step_index: at,
        tolerance,
        passed: max_adverse <= tolerance,
        out_of_domain,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_pairwise_two_choices() {
        assert_eq!(smith_block(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(smith_block(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn gp_gap_nonnegative_and_zero_at_rest() {
        assert!(gp_gap_block(&[0.2, 0.8], &[0.3, -1.0]) >= 0.0);
        // Vertex best reply: Pi(x + Phi) = x.
        assert!(gp_gap_block(&[1.0, 0.0], &[0.0, -1.0]).abs() < 1e-15);
    }

    #[test]
    fn certified_pairings() {
        assert!(LyapunovKind::Potential.certified_for(DynamicsKind::Smith));
        assert!(LyapunovKind::BnnExcess.certified_for(DynamicsKind::Bnn));
        assert!(!LyapunovKind::BnnExcess.certified_for(DynamicsKind::Smith));
        assert!(LyapunovKind::BrGap.certified_for(DynamicsKind::Br));
    }
}
