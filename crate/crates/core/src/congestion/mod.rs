//! Routing games on directed networks with nonatomic, atomic splittable and
//! atomic non-splittable participants.
//!
//! Costs stay costs throughout this module; they are negated into payoffs in
//! exactly one place, [`CongestionModel::evaluate_blocks`].

mod convexity;
mod network;
mod potential;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use convexity::{check_splittable_convexity, ConvexityReport, ConvexityVerdict};
pub use network::{enumerate_paths, CostFunction, Link, Network};
pub use potential::affine_parallel_potential;

use crate::error::{Error, Result};
use crate::game::{Blocks, EvaluationFunction, GameSpec, PayoffModel, Potential};
use crate::profile::{Category, Participant, PureProfiles};

/// Upper bound on the number of pure profiles of the non-splittable
/// participants over which expectations are taken.
pub const PURE_PROFILE_CAP: u128 = 1_000_000;
/// Slack on the `[0, M]` flow range.
pub const FLOW_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingDemand {
    pub id: String,
    pub origin: usize,
    pub destination: usize,
    pub weight: f64,
    pub category: Category,
    /// Admissible paths as arc index lists; all simple paths when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<usize>>>,
}

impl RoutingDemand {
    pub fn new(id: impl Into<String>, origin: usize, destination: usize, weight: f64, category: Category) -> Self {
        RoutingDemand {
            id: id.into(),
            origin,
            destination,
            weight,
            category,
            paths: None,
        }
    }

    pub fn with_paths(mut self, paths: Vec<Vec<usize>>) -> Self {
        self.paths = Some(paths);
        self
    }
}

/// Network, demands and resolved path sets.
#[derive(Clone, Debug)]
pub struct CongestionModel {
    network: Network,
    demands: Vec<RoutingDemand>,
    /// Per participant, its admissible paths.
    paths: Vec<Vec<Vec<usize>>>,
    /// Union of all admissible paths, in first-seen order.
    all_paths: Vec<Vec<usize>>,
    /// Per participant and path, the index into `all_paths`.
    path_index: Vec<Vec<usize>>,
    nonsplittable: Vec<usize>,
    total_weight: f64,
}

impl CongestionModel {
    pub fn new(network: Network, demands: Vec<RoutingDemand>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::Network("no demands".into()));
        }
        let mut paths = Vec::with_capacity(demands.len());
        for d in &demands {
            if !(d.weight.is_finite() && d.weight >= 0.0) {
                return Err(Error::Network(format!("demand `{}` has invalid weight {}", d.id, d.weight)));
            }
            let set = match &d.paths {
                Some(list) => {
                    for p in list {
                        if !network.is_simple_path(p, d.origin, d.destination) {
                            return Err(Error::Network(format!(
                                "demand `{}`: {:?} is not a simple path from origin to destination",
                                d.id, p
                            )));
                        }
                    }
                    if has_duplicates(list) {
                        return Err(Error::Network(format!("demand `{}` lists a path twice", d.id)));
                    }
                    list.clone()
                }
                None => enumerate_paths(&network, d.origin, d.destination)?,
            };
            if set.is_empty() {
                return Err(Error::Network(format!("demand `{}` has no admissible path", d.id)));
            }
            paths.push(set);
        }
        let total_weight: f64 = demands.iter().map(|d| d.weight).sum();
        for l in network.links() {
            l.cost
                .validate(total_weight)
                .map_err(|e| Error::Network(format!("arc `{}`: {e}", l.id)))?;
        }
        let mut all_paths: Vec<Vec<usize>> = Vec::new();
        let path_index = paths
            .iter()
            .map(|set| {
                set.iter()
                    .map(|p| match all_paths.iter().position(|q| q == p) {
                        Some(k) => k,
                        None => {
                            all_paths.push(p.clone());
                            all_paths.len() - 1
                        }
                    })
                    .collect()
            })
            .collect();
        let nonsplittable: Vec<usize> = demands
            .iter()
            .enumerate()
            .filter(|(_, d)| d.category == Category::AtomicNonSplittable)
            .map(|(i, _)| i)
            .collect();
        let count = nonsplittable
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(paths[k].len() as u128));
        if count > PURE_PROFILE_CAP {
            return Err(Error::CombinatorialCap {
                count,
                cap: PURE_PROFILE_CAP,
            });
        }
        Ok(CongestionModel {
            network,
            demands,
            paths,
            all_paths,
            path_index,
            nonsplittable,
            total_weight,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn demands(&self) -> &[RoutingDemand] {
        &self.demands
    }

    /// Admissible paths of participant `i`.
    pub fn paths(&self, i: usize) -> &[Vec<usize>] {
        &self.paths[i]
    }

    /// The union `P` of all admissible paths.
    pub fn all_paths(&self) -> &[Vec<usize>] {
        &self.all_paths
    }

    /// Index into [`all_paths`](Self::all_paths) of path `p` of participant `i`.
    pub fn path_position(&self, i: usize, p: usize) -> usize {
        self.path_index[i][p]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.paths.iter().map(Vec::len).collect()
    }

    pub fn path_label(&self, path: &[usize]) -> String {
        path.iter()
            .map(|a| self.network.links()[*a].id.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Game participants: one per demand, choices labelled by their arcs.
    pub fn participants(&self) -> Result<Vec<Participant>> {
        self.demands
            .iter()
            .zip(&self.paths)
            .map(|(d, set)| {
                let labels = set.iter().map(|p| self.path_label(p)).collect();
                Participant::new(d.id.clone(), d.category, labels, d.weight)
            })
            .collect()
    }

    fn arc_costs(&self, flows: &[f64]) -> Vec<f64> {
        self.network
            .links()
            .iter()
            .zip(flows)
            .map(|(l, f)| l.cost.value(*f))
            .collect()
    }

    fn path_cost(path: &[usize], arc_costs: &[f64]) -> f64 {
        path.iter().map(|a| arc_costs[*a]).sum()
    }

    /// Arc flows induced by a configuration over `all_paths`.
    pub fn arc_flows(&self, z: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.network.links().len()];
        for (p, zp) in self.all_paths.iter().zip(z) {
            for a in p {
                f[*a] += zp;
            }
        }
        f
    }

    /// Cost of every path in `all_paths` under configuration `z`.
    pub fn path_costs(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.all_paths.len() {
            return Err(Error::Network(format!(
                "configuration has {} entries for {} paths",
                z.len(),
                self.all_paths.len()
            )));
        }
        if let Some(k) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: k });
        }
        let flows = self.arc_flows(z);
        for (l, f) in self.network.links().iter().zip(&flows) {
            if *f < -FLOW_TOL || *f > self.total_weight + FLOW_TOL {
                return Err(Error::FlowOutOfRange {
                    arc: l.id.clone(),
                    flow: *f,
                    total: self.total_weight,
                });
            }
        }
        let costs = self.arc_costs(&flows);
        Ok(self.all_paths.iter().map(|p| Self::path_cost(p, &costs)).collect())
    }

    /// Arc flows of the continuum participants (everyone but the
    /// non-splittable ones), plus per-participant arc flows.
    fn continuous_flows(&self, x: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let arcs = self.network.links().len();
        let mut total = vec![0.0; arcs];
        let mut own = vec![Vec::new(); x.len()];
        for (i, d) in self.demands.iter().enumerate() {
            if d.category == Category::AtomicNonSplittable {
                continue;
            }
            let mut f = vec![0.0; arcs];
            for (p, share) in self.paths[i].iter().zip(&x[i]) {
                for a in p {
                    f[*a] += d.weight * share;
                }
            }
            for (t, v) in total.iter_mut().zip(&f) {
                *t += v;
            }
            own[i] = f;
        }
        (total, own)
    }

    /// Calls `visit(choices, flows, arc_costs)` for every pure profile of the
    /// non-splittable participants, in row-major order.
    fn for_each_pure<F>(&self, x: &[Vec<f64>], mut visit: F)
    where
        F: FnMut(&[usize], &[f64]),
    {
        let (base, _) = self.continuous_flows(x);
        let sizes: Vec<usize> = self.nonsplittable.iter().map(|k| self.paths[*k].len()).collect();
        for s in PureProfiles::new(&sizes) {
            let mut flows = base.clone();
            for (slot, &k) in self.nonsplittable.iter().enumerate() {
                for a in &self.paths[k][s[slot]] {
                    flows[*a] += self.demands[k].weight;
                }
            }
            visit(&s, &flows);
        }
    }

    /// Probability of the non-splittable choices `s`, optionally leaving one slot out.
    fn profile_weight(&self, x: &[Vec<f64>], s: &[usize], skip: Option<usize>) -> f64 {
        self.nonsplittable
            .iter()
            .enumerate()
            .filter(|(slot, _)| Some(*slot) != skip)
            .map(|(slot, &k)| x[k][s[slot]])
            .product()
    }

    /// Expected cost `u^i(x) = E_s <x^i, c^i(z_s)>` of a continuum participant,
    /// or `E[c_{s^i}]` for a non-splittable one.
    pub fn expected_cost(&self, x: &[Vec<f64>], i: usize) -> f64 {
        let mut u = 0.0;
        let slot = self.nonsplittable.iter().position(|k| *k == i);
        self.for_each_pure(x, |s, flows| {
            let w = self.profile_weight(x, s, None);
            if w == 0.0 {
                return;
            }
            let costs = self.arc_costs(flows);
            u += w * match slot {
                Some(slot) => Self::path_cost(&self.paths[i][s[slot]], &costs),
                None => self.paths[i]
                    .iter()
                    .zip(&x[i])
                    .map(|(p, share)| share * Self::path_cost(p, &costs))
                    .sum::<f64>(),
            };
        });
        u
    }

    /// The evaluation function: negated expected path costs for populations,
    /// negated expected-cost gradients for splittable participants, and
    /// negated expected own-path costs for non-splittable participants.
    pub fn evaluate_blocks(&self, x: &[Vec<f64>]) -> Blocks {
        self.expected_blocks(x, true)
    }

    /// Like [`evaluate_blocks`](Self::evaluate_blocks) but splittable blocks
    /// hold negated expected path costs (the payoff vectors `F^i`).
    pub fn payoff_blocks(&self, x: &[Vec<f64>]) -> Blocks {
        self.expected_blocks(x, false)
    }

    fn expected_blocks(&self, x: &[Vec<f64>], gradient: bool) -> Blocks {
        let mut cost: Blocks = self.paths.iter().map(|set| vec![0.0; set.len()]).collect();
        let (_, own) = self.continuous_flows(x);
        self.for_each_pure(x, |s, flows| {
            let costs = self.arc_costs(flows);
            let w = self.profile_weight(x, s, None);
            let slopes: Option<Vec<f64>> = (gradient && w != 0.0).then(|| {
                self.network
                    .links()
                    .iter()
                    .zip(flows)
                    .map(|(l, f)| l.cost.derivative(*f))
                    .collect()
            });
            for (i, d) in self.demands.iter().enumerate() {
                match d.category {
                    Category::AtomicNonSplittable => {
                        let slot = self.nonsplittable.iter().position(|k| *k == i).unwrap();
                        let w_others = self.profile_weight(x, s, Some(slot));
                        if w_others != 0.0 {
                            let r = s[slot];
                            cost[i][r] += w_others * Self::path_cost(&self.paths[i][r], &costs);
                        }
                    }
                    Category::Population => {
                        if w != 0.0 {
                            for (c, p) in cost[i].iter_mut().zip(&self.paths[i]) {
                                *c += w * Self::path_cost(p, &costs);
                            }
                        }
                    }
                    Category::AtomicSplittable => {
                        if w == 0.0 {
                            continue;
                        }
                        for (c, p) in cost[i].iter_mut().zip(&self.paths[i]) {
                            let mut v = Self::path_cost(p, &costs);
                            if let Some(slopes) = &slopes {
                                v += p.iter().map(|a| slopes[*a] * own[i][*a]).sum::<f64>();
                            }
                            *c += w * v;
                        }
                    }
                }
            }
        });
        for b in &mut cost {
            for v in b.iter_mut() {
                *v = -*v;
            }
        }
        cost
    }

    /// Whether every arc used by a splittable participant claims a C1,
    /// nondecreasing, convex cost.
    pub fn splittable_costs_convex(&self) -> bool {
        self.demands
            .iter()
            .zip(&self.paths)
            .filter(|(d, _)| d.category == Category::AtomicSplittable)
            .flat_map(|(_, set)| set.iter().flatten())
            .all(|a| self.network.links()[*a].convex_claim())
    }

    /// The parallel-link structure required by the affine potential:
    /// every arc affine with nonnegative slope and intercept, every arc and
    /// every demand joining the same two nodes.
    pub fn is_affine_parallel(&self) -> bool {
        let Some((o, d)) = self.network.is_parallel() else {
            return false;
        };
        self.network.links().iter().all(|l| {
            matches!(l.cost, CostFunction::Affine { slope, intercept } if slope >= 0.0 && intercept >= 0.0)
        }) && self
            .demands
            .iter()
            .all(|dm| dm.origin == o && dm.destination == d)
    }
}

fn has_duplicates(list: &[Vec<usize>]) -> bool {
    list.iter()
        .enumerate()
        .any(|(k, p)| list[..k].contains(p))
}

/// Per-participant and aggregate flows of a profile in which every
/// participant routes `m^i x^i_p` along path `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowState {
    /// `f^i_a`.
    pub participant_flows: Vec<Vec<f64>>,
    /// `f_a = sum_i f^i_a`.
    pub aggregate: Vec<f64>,
    /// `z_p = sum_i m^i x^i_p` over the union of paths.
    pub configuration: Vec<f64>,
}

impl FlowState {
    pub fn new(model: &CongestionModel, x: &[Vec<f64>]) -> Result<Self> {
        if x.len() != model.demands.len() {
            return Err(Error::Network(format!(
                "profile has {} blocks for {} demands",
                x.len(),
                model.demands.len()
            )));
        }
        let arcs = model.network.links().len();
        let mut participant_flows = Vec::with_capacity(x.len());
        let mut aggregate = vec![0.0; arcs];
        let mut configuration = vec![0.0; model.all_paths.len()];
        for (i, d) in model.demands.iter().enumerate() {
            if x[i].len() != model.paths[i].len() {
                return Err(Error::Shape {
                    participant: d.id.clone(),
                    reason: format!("{} shares for {} paths", x[i].len(), model.paths[i].len()),
                });
            }
            let mut f = vec![0.0; arcs];
            for (p, (path, share)) in model.paths[i].iter().zip(&x[i]).enumerate() {
                let amount = d.weight * share;
                configuration[model.path_index[i][p]] += amount;
                for a in path {
                    f[*a] += amount;
                }
            }
            for (t, v) in aggregate.iter_mut().zip(&f) {
                *t += v;
            }
            participant_flows.push(f);
        }
        Ok(FlowState {
            participant_flows,
            aggregate,
            configuration,
        })
    }
}

struct CongestionPayoff {
    model: Arc<CongestionModel>,
}

impl PayoffModel for CongestionPayoff {
    fn payoffs(&self, x: &[Vec<f64>]) -> Blocks {
        self.model.payoff_blocks(x)
    }

    fn evaluation(&self, x: &[Vec<f64>], _categories: &[Category]) -> Option<Blocks> {
        Some(self.model.evaluate_blocks(x))
    }

    fn kind(&self) -> &'static str {
        "congestion"
    }
}

/// Assembles the composite routing game. Parallel-link affine instances get
/// the closed-form potential with scales equal to the participant weights.
pub fn build_composite_congestion_game(network: Network, demands: Vec<RoutingDemand>) -> Result<GameSpec> {
    let model = Arc::new(CongestionModel::new(network, demands)?);
    game_from_model(model)
}

pub fn game_from_model(model: Arc<CongestionModel>) -> Result<GameSpec> {
    let participants = model.participants()?;
    let concave = model.splittable_costs_convex();
    let mut game = GameSpec::new(
        participants,
        EvaluationFunction::new(CongestionPayoff { model: model.clone() }),
    )?
    .with_splittable_concave(concave);
    if model.is_affine_parallel() {
        let scales = model.demands().iter().map(|d| d.weight).collect();
        let m = model.clone();
        game = game.with_potential(Potential::with_constant_scales(
            move |x| affine_parallel_potential(&m, x).unwrap_or(f64::NAN),
            scales,
        ))?;
    }
    Ok(game)
}
