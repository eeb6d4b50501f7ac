//! Participants, joint strategy profiles and tangent vectors.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{project_simplex_raw, SimplexPoint, EPS_SIMPLEX};

/// Tolerance on the block sums of a tangent vector.
pub const EPS_TANGENT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Nonatomic population; the evaluation is the payoff vector itself.
    Population,
    /// Atomic player dividing its weight; the evaluation is the gradient of its gain.
    AtomicSplittable,
    /// Atomic player choosing one option at random; the evaluation is the vector payoff.
    AtomicNonSplittable,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::Population => "population",
            Category::AtomicSplittable => "atomic-splittable",
            Category::AtomicNonSplittable => "atomic-non-splittable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub category: Category,
    pub choices: Vec<String>,
    pub weight: f64,
}

impl Participant {
    pub fn new(
        id: impl Into<String>,
        category: Category,
        choices: Vec<String>,
        weight: f64,
    ) -> Result<Self> {
        let p = Participant {
            id: id.into(),
            category,
            choices,
            weight,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Shape {
            participant: self.id.clone(),
            reason,
        };
        if self.choices.is_empty() {
            return Err(fail("choice set is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.choices {
            if !seen.insert(c.as_str()) {
                return Err(fail(format!("duplicate choice label `{c}`")));
            }
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(fail(format!("weight must be positive, got {}", self.weight)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

/// A joint profile: one simplex point per participant, in game order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    blocks: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Validates every block against the simplex invariants.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let blocks = blocks
            .into_iter()
            .map(|b| SimplexPoint::new(b).map(SimplexPoint::into_inner))
            .collect::<Result<Vec<_>>>()?;
        Ok(StrategyProfile { blocks })
    }

    pub fn from_points(points: Vec<SimplexPoint>) -> Self {
        StrategyProfile {
            blocks: points.into_iter().map(SimplexPoint::into_inner).collect(),
        }
    }

    /// Validates against a game's participant shape, naming the offending participant.
    pub fn for_participants(participants: &[Participant], blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != participants.len() {
            return Err(Error::InvalidGame(format!(
                "profile has {} blocks, game has {} participants",
                blocks.len(),
                participants.len()
            )));
        }
        let mut out = Vec::with_capacity(blocks.len());
        for (p, b) in participants.iter().zip(blocks) {
            if b.len() != p.len() {
                return Err(Error::Shape {
                    participant: p.id.clone(),
                    reason: format!("expected {} shares, got {}", p.len(), b.len()),
                });
            }
            let point = SimplexPoint::new(b).map_err(|e| Error::Shape {
                participant: p.id.clone(),
                reason: e.to_string(),
            })?;
            out.push(point.into_inner());
        }
        Ok(StrategyProfile { blocks: out })
    }

    /// Per-block Euclidean projection of arbitrary finite blocks onto the simplex.
    pub fn projected(blocks: &[Vec<f64>]) -> Result<Self> {
        for b in blocks {
            if let Some(index) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { index });
            }
        }
        Ok(StrategyProfile {
            blocks: blocks.iter().map(|b| project_simplex_raw(b)).collect(),
        })
    }

    pub fn uniform(sizes: &[usize]) -> Self {
        StrategyProfile {
            blocks: sizes.iter().map(|&n| vec![1.0 / n as f64; n]).collect(),
        }
    }

    /// The pure profile selecting `choices[i]` for participant `i`.
    pub fn pure(sizes: &[usize], choices: &[usize]) -> Self {
        StrategyProfile {
            blocks: sizes
                .iter()
                .zip(choices)
                .map(|(&n, &c)| SimplexPoint::vertex(n, c).into_inner())
                .collect(),
        }
    }

    /// Independent Dirichlet(1) draw for every block.
    pub fn dirichlet<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let blocks = sizes
            .iter()
            .map(|&n| {
                let mut b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let s: f64 = b.iter().sum();
                for v in &mut b {
                    *v /= s;
                }
                b
            })
            .collect();
        StrategyProfile { blocks }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }

    /// Smallest coordinate over all blocks.
    pub fn min_component(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `(1 - t) * self + t * other`, blockwise.
    pub fn interpolate(&self, other: &StrategyProfile, t: f64) -> StrategyProfile {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let mut v: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (1.0 - t) * x + t * y)
                    .collect();
                for c in &mut v {
                    *c = c.max(0.0);
                }
                v
            })
            .collect();
        StrategyProfile { blocks }
    }
}

/// A per-participant vector whose blocks each sum to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    blocks: Vec<Vec<f64>>,
}

impl TangentVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if let Some(index) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { index });
            }
            let s: f64 = b.iter().sum();
            if s.abs() > EPS_TANGENT {
                return Err(Error::InvalidGame(format!(
                    "tangent block {i} sums to {s:e}"
                )));
            }
        }
        Ok(TangentVector { blocks })
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        TangentVector {
            blocks: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn block_norm(&self, i: usize) -> f64 {
        self.blocks[i].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Iterates over pure profiles in row-major order (last index fastest).
#[derive(Clone, Debug)]
pub struct PureProfiles {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl PureProfiles {
    pub fn new(sizes: &[usize]) -> Self {
        let next = if sizes.iter().all(|&n| n > 0) {
            Some(vec![0; sizes.len()])
        } else {
            None
        };
        PureProfiles {
            sizes: sizes.to_vec(),
            next,
        }
    }
}

impl Iterator for PureProfiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut s = current.clone();
        for k in (0..s.len()).rev() {
            s[k] += 1;
            if s[k] < self.sizes[k] {
                self.next = Some(s);
                return Some(current);
            }
            s[k] = 0;
        }
        Some(current)
    }
}

/// `x + t * v` blockwise, projected back onto the simplex. Returns the raw
/// blocks; the projection is the identity for points already feasible.
pub(crate) fn step_and_project(x: &[Vec<f64>], v: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    x.iter()
        .zip(v)
        .map(|(xb, vb)| {
            let moved: Vec<f64> = xb.iter().zip(vb).map(|(a, b)| a + t * b).collect();
            if moved.iter().all(|c| *c >= 0.0)
                && (moved.iter().sum::<f64>() - 1.0).abs() <= EPS_SIMPLEX
            {
                moved
            } else {
                project_simplex_raw(&moved)
            }
        })
        .collect()
}

/// Inner product over matching blocks.
pub fn block_dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("c{k}")).collect()
    }

    #[test]
    fn participant_validation() {
        assert!(Participant::new("a", Category::Population, labels(2), 1.0).is_ok());
        assert!(Participant::new("a", Category::Population, vec![], 1.0).is_err());
        assert!(Participant::new("a", Category::Population, labels(2), 0.0).is_err());
        let dup = vec!["x".to_string(), "x".to_string()];
        let err = Participant::new("dup", Category::Population, dup, 1.0).unwrap_err();
        assert!(err.to_string().contains("dup"));
    }

    #[test]
    fn shape_errors_name_the_participant() {
        let ps = vec![
            Participant::new("left", Category::Population, labels(2), 1.0).unwrap(),
            Participant::new("right", Category::Population, labels(3), 1.0).unwrap(),
        ];
        let err = StrategyProfile::for_participants(&ps, vec![vec![0.5, 0.5], vec![1.0, 0.0]])
            .unwrap_err();
        assert!(err.to_string().contains("right"), "{err}");
        let err = StrategyProfile::for_participants(&ps, vec![vec![0.7, 0.5], vec![1.0, 0.0, 0.0]])
            .unwrap_err();
        assert!(err.to_string().contains("left"), "{err}");
    }

    #[test]
    fn dirichlet_draws_are_valid_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let x = StrategyProfile::dirichlet(&[2, 3, 4], &mut a);
        let y = StrategyProfile::dirichlet(&[2, 3, 4], &mut b);
        assert_eq!(x, y);
        assert!(StrategyProfile::new(x.into_blocks()).is_ok());
    }

    #[test]
    fn pure_profiles_enumerate_row_major() {
        let all: Vec<_> = PureProfiles::new(&[2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
        assert_eq!(PureProfiles::new(&[]).count(), 1);
    }

    #[test]
    fn tangent_vector_rejects_nonzero_sum() {
        assert!(TangentVector::new(vec![vec![0.5, -0.5]]).is_ok());
        assert!(TangentVector::new(vec![vec![0.5, -0.4]]).is_err());
    }
}
