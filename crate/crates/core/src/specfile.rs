//! Loader for `cg-spec v1` game files (JSON).
//!
//! ```json
//! {
//!   "schema": "cg-spec v1",
//!   "name": "matching-pennies",
//!   "participants": [
//!     {"id": "row", "category": "atomic-non-splittable", "choices": ["h", "t"], "weight": 1},
//!     {"id": "col", "category": "atomic-non-splittable", "choices": ["h", "t"], "weight": 1}
//!   ],
//!   "evaluation": {"kind": "table", "payoffs": [[1, -1, -1, 1], [-1, 1, 1, -1]]}
//! }
//! ```
//!
//! Unknown fields are rejected everywhere.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::builtin;
use crate::congestion::{self, CongestionModel, CostFunction, Link, Network, RoutingDemand};
use crate::error::{Error, Result};
use crate::game::{EvaluationFunction, GameSpec, LinearPayoff, PayoffTable, Potential};
use crate::profile::{Category, Participant};

pub const SCHEMA: &str = "cg-spec v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    schema: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    participants: Vec<ParticipantEntry>,
    evaluation: EvaluationEntry,
    #[serde(default)]
    potential: Option<PotentialEntry>,
    /// Declares every splittable gain concave in the participant's own strategy.
    #[serde(default)]
    splittable_concave: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticipantEntry {
    id: String,
    category: Category,
    /// Optional for congestion games, where choices are the admissible paths.
    #[serde(default)]
    choices: Option<Vec<String>>,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum EvaluationEntry {
    /// `payoffs[i][k]`: payoff of participant `i` at the `k`-th pure profile,
    /// row-major with the last participant's choice varying fastest.
    Table { payoffs: Vec<Vec<f64>> },
    /// `F(x) = matrix * x + offset` on the flattened profile.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    Congestion {
        nodes: Vec<String>,
        arcs: Vec<ArcEntry>,
        demands: Vec<DemandEntry>,
    },
    Builtin { name: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcEntry {
    id: String,
    tail: String,
    head: String,
    cost: CostFunction,
    #[serde(default)]
    convex: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandEntry {
    participant: String,
    origin: String,
    destination: String,
    /// Path whitelist, each path a list of arc ids.
    #[serde(default)]
    paths: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum PotentialEntry {
    /// `W(x) = x' Q x / 2 + c' x + k` on the flattened profile.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
        /// One positive scale per participant; all ones when absent.
        #[serde(default)]
        scales: Option<Vec<f64>>,
    },
    /// The closed-form potential of an affine parallel-link congestion game.
    AffineParallel,
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::SpecFile(msg.into())
}

/// A parsed spec together with its network model, when it has one.
pub struct LoadedSpec {
    pub game: GameSpec,
    pub congestion: Option<Arc<CongestionModel>>,
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<GameSpec> {
    parse_document(text).map(|doc| doc.game)
}

pub fn parse_document(text: &str) -> Result<LoadedSpec> {
    let doc: SpecDocument = serde_json::from_str(text).map_err(|e| spec_err(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(spec_err(format!("unsupported schema `{}`, expected `{SCHEMA}`", doc.schema)));
    }
    build(doc)
}

/// Reads a spec file, or a builtin when the path has the form `builtin:<name>`.
pub fn load_spec(path: impl AsRef<Path>) -> Result<GameSpec> {
    load_document(path).map(|doc| doc.game)
}

pub fn load_document(path: impl AsRef<Path>) -> Result<LoadedSpec> {
    let path = path.as_ref();
    if let Some(name) = path.to_str().and_then(|s| s.strip_prefix("builtin:")) {
        return builtin::load_document(name);
    }
    parse_document(&std::fs::read_to_string(path)?)
}

fn weight_of(p: &ParticipantEntry) -> Result<f64> {
    p.weight
        .ok_or_else(|| spec_err(format!("participant `{}`: missing field `weight`", p.id)))
}

fn explicit_participants(entries: &[ParticipantEntry]) -> Result<Vec<Participant>> {
    entries
        .iter()
        .map(|p| {
            let weight = weight_of(p)?;
            let choices = p
                .choices
                .clone()
                .ok_or_else(|| spec_err(format!("participant `{}`: missing field `choices`", p.id)))?;
            Participant::new(p.id.clone(), p.category, choices, weight)
        })
        .collect()
}

fn dense(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(spec_err(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn build(doc: SpecDocument) -> Result<LoadedSpec> {
    if doc.participants.is_empty() {
        return Err(spec_err("no participants"));
    }
    let mut congestion_model = None;
    let mut game = match &doc.evaluation {
        EvaluationEntry::Table { payoffs } => {
            let participants = explicit_participants(&doc.participants)?;
            let sizes = participants.iter().map(Participant::len).collect();
            let table = PayoffTable::new(sizes, payoffs.clone())?;
            GameSpec::new(participants, EvaluationFunction::new(table))?
        }
        EvaluationEntry::Linear { matrix, offset } => {
            let participants = explicit_participants(&doc.participants)?;
            let sizes: Vec<usize> = participants.iter().map(Participant::len).collect();
            let n = sizes.iter().sum();
            let a = dense(matrix, n, "linear matrix")?;
            let b = offset.clone().unwrap_or_else(|| vec![0.0; n]);
            GameSpec::new(participants, EvaluationFunction::new(LinearPayoff::new(a, b, sizes)?))?
        }
        EvaluationEntry::Congestion { nodes, arcs, demands } => {
            let model = Arc::new(congestion_model_from(&doc.participants, nodes, arcs, demands)?);
            let game = congestion::game_from_model(model.clone())?;
            congestion_model = Some(model);
            game
        }
        EvaluationEntry::Builtin { name } => {
            let loaded = builtin::load_document(name)?;
            check_matches_builtin(&doc.participants, &loaded.game, name)?;
            congestion_model = loaded.congestion;
            loaded.game
        }
    };
    if !doc.name.is_empty() || !doc.description.is_empty() {
        game = game.with_name(doc.name, doc.description);
    }
    if let Some(flag) = doc.splittable_concave {
        game = game.with_splittable_concave(flag);
    }
    match doc.potential {
        None => {}
        Some(PotentialEntry::AffineParallel) => {
            let ok = congestion_model.as_ref().is_some_and(|m| m.is_affine_parallel());
            if !ok {
                return Err(spec_err(
                    "affine-parallel potential needs a parallel-link congestion evaluation with affine costs",
                ));
            }
        }
        Some(PotentialEntry::Quadratic {
            matrix,
            linear,
            constant,
            scales,
        }) => {
            let n = game.dimension();
            let q = dense(&matrix, n, "potential matrix")?;
            let c = linear.unwrap_or_else(|| vec![0.0; n]);
            if c.len() != n {
                return Err(spec_err(format!("potential linear term needs {n} entries")));
            }
            let scales = scales.unwrap_or_else(|| vec![1.0; game.participants().len()]);
            let value = move |x: &[Vec<f64>]| {
                let flat: Vec<f64> = x.iter().flatten().copied().collect();
                let v = nalgebra::DVector::from_vec(flat);
                0.5 * v.dot(&(&q * &v)) + c.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() + constant
            };
            game = game.with_potential(Potential::with_constant_scales(value, scales))?;
        }
    }
    Ok(LoadedSpec {
        game,
        congestion: congestion_model,
    })
}

fn congestion_model_from(
    participants: &[ParticipantEntry],
    nodes: &[String],
    arcs: &[ArcEntry],
    demands: &[DemandEntry],
) -> Result<CongestionModel> {
    let node = |name: &str| {
        nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| spec_err(format!("unknown node `{name}`")))
    };
    let mut links = Vec::with_capacity(arcs.len());
    for a in arcs {
        let mut link = Link::new(a.id.clone(), node(&a.tail)?, node(&a.head)?, a.cost.clone());
        link.convex = a.convex;
        links.push(link);
    }
    let network = Network::new(nodes.to_vec(), links)?;
    let mut routing = Vec::with_capacity(participants.len());
    for p in participants {
        let weight = weight_of(p)?;
        let mut matching = demands.iter().filter(|d| d.participant == p.id);
        let d = matching
            .next()
            .ok_or_else(|| spec_err(format!("participant `{}`: no demand entry", p.id)))?;
        if matching.next().is_some() {
            return Err(spec_err(format!("participant `{}`: more than one demand entry", p.id)));
        }
        let mut demand = RoutingDemand::new(p.id.clone(), node(&d.origin)?, node(&d.destination)?, weight, p.category);
        if let Some(paths) = &d.paths {
            let resolved = paths
                .iter()
                .map(|path| {
                    path.iter()
                        .map(|id| {
                            network
                                .link_index(id)
                                .ok_or_else(|| spec_err(format!("participant `{}`: unknown arc `{id}`", p.id)))
                        })
                        .collect::<Result<Vec<usize>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            demand = demand.with_paths(resolved);
        }
        routing.push(demand);
    }
    if let Some(d) = demands.iter().find(|d| !participants.iter().any(|p| p.id == d.participant)) {
        return Err(spec_err(format!("demand for unknown participant `{}`", d.participant)));
    }
    let model = CongestionModel::new(network, routing)?;
    for (i, p) in participants.iter().enumerate() {
        if let Some(choices) = &p.choices {
            let derived: Vec<String> = model.paths(i).iter().map(|path| model.path_label(path)).collect();
            if *choices != derived {
                return Err(spec_err(format!(
                    "participant `{}`: choices {:?} do not match the admissible paths {:?}",
                    p.id, choices, derived
                )));
            }
        }
    }
    Ok(model)
}

fn check_matches_builtin(entries: &[ParticipantEntry], game: &GameSpec, name: &str) -> Result<()> {
    if entries.len() != game.participants().len() {
        return Err(spec_err(format!(
            "builtin `{name}` has {} participants, spec lists {}",
            game.participants().len(),
            entries.len()
        )));
    }
    for (e, p) in entries.iter().zip(game.participants()) {
        let weight = weight_of(e)?;
        let choices_ok = e.choices.as_ref().is_none_or(|c| *c == p.choices);
        if e.id != p.id || e.category != p.category || weight != p.weight || !choices_ok {
            return Err(spec_err(format!(
                "participant `{}` does not match builtin `{name}` participant `{}`",
                e.id, p.id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENNIES: &str = r#"{
        "schema": "cg-spec v1",
        "participants": [
            {"id": "row", "category": "atomic-non-splittable", "choices": ["h", "t"], "weight": 1},
            {"id": "col", "category": "atomic-non-splittable", "choices": ["h", "t"], "weight": 1}
        ],
        "evaluation": {"kind": "table", "payoffs": [[1, -1, -1, 1], [-1, 1, 1, -1]]}
    }"#;

    #[test]
    fn parses_table_game() {
        let game = parse_spec(PENNIES).unwrap();
        assert_eq!(game.sizes(), &[2, 2]);
        let phi = game.evaluate(&game.uniform()).unwrap();
        assert_eq!(phi, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn missing_weight_names_participant() {
        let text = PENNIES.replace(r#""choices": ["h", "t"], "weight": 1}
        ]"#, r#""choices": ["h", "t"]}
        ]"#);
        let err = parse_spec(&text).unwrap_err().to_string();
        assert!(err.contains("`col`") && err.contains("weight"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_and_schema() {
        let text = PENNIES.replace(r#""schema": "cg-spec v1","#, r#""schema": "cg-spec v1", "colour": 3,"#);
        assert!(parse_spec(&text).unwrap_err().to_string().contains("colour"));
        let text = PENNIES.replace("cg-spec v1", "cg-spec v2");
        assert!(parse_spec(&text).is_err());
        let text = PENNIES.replace(r#""kind": "table","#, r#""kind": "table", "scale": 2,"#);
        assert!(parse_spec(&text).is_err());
    }
}
