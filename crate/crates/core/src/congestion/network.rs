use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-arc latency as a function of the aggregate arc flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostFunction {
    /// `slope * m + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `sum_k coefficients[k] * m^k`.
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise linear through `(flow, cost)` points sorted by flow,
    /// extended linearly beyond the end points.
    Tabulated { points: Vec<(f64, f64)> },
}

impl CostFunction {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        CostFunction::Affine { slope, intercept }
    }

    pub fn value(&self, m: f64) -> f64 {
        match self {
            CostFunction::Affine { slope, intercept } => slope * m + intercept,
            CostFunction::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * m + c)
            }
            CostFunction::Tabulated { points } => {
                let k = segment(points, m);
                let (m0, c0) = points[k];
                let (m1, c1) = points[k + 1];
                c0 + (c1 - c0) * (m - m0) / (m1 - m0)
            }
        }
    }

    pub fn derivative(&self, m: f64) -> f64 {
        match self {
            CostFunction::Affine { slope, .. } => *slope,
            CostFunction::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * m + k as f64 * c),
            CostFunction::Tabulated { points } => {
                let k = segment(points, m);
                let (m0, c0) = points[k];
                let (m1, c1) = points[k + 1];
                (c1 - c0) / (m1 - m0)
            }
        }
    }

    /// Whether the function is nondecreasing and convex on `[0, inf)`,
    /// judged from its parameters. Polynomials qualify when every
    /// coefficient past the constant is nonnegative.
    pub fn nondecreasing_convex(&self) -> bool {
        match self {
            CostFunction::Affine { slope, .. } => *slope >= 0.0,
            CostFunction::Polynomial { coefficients } => coefficients.iter().skip(1).all(|c| *c >= 0.0),
            CostFunction::Tabulated { points } => {
                let slopes: Vec<f64> = points
                    .windows(2)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .collect();
                slopes.first().is_some_and(|s| *s >= 0.0) && slopes.windows(2).all(|w| w[1] >= w[0])
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, CostFunction::Affine { .. })
    }

    /// Checks finiteness of parameters and, on a grid over `[0, max_flow]`
    /// plus any breakpoints, that the cost is finite and nonnegative.
    pub fn validate(&self, max_flow: f64) -> std::result::Result<(), String> {
        match self {
            CostFunction::Affine { slope, intercept } => {
                if !slope.is_finite() || !intercept.is_finite() {
                    return Err("non-finite affine parameters".into());
                }
            }
            CostFunction::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err("polynomial needs finite coefficients".into());
                }
            }
            CostFunction::Tabulated { points } => {
                if points.len() < 2 {
                    return Err("tabulated cost needs at least two points".into());
                }
                if points.iter().any(|(m, c)| !m.is_finite() || !c.is_finite()) {
                    return Err("non-finite tabulated point".into());
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err("tabulated flows must be strictly increasing".into());
                }
            }
        }
        let mut probes: Vec<f64> = (0..=100).map(|k| max_flow * k as f64 / 100.0).collect();
        if let CostFunction::Tabulated { points } = self {
            probes.extend(points.iter().map(|p| p.0).filter(|m| (0.0..=max_flow).contains(m)));
        }
        for m in probes {
            let c = self.value(m);
            if !c.is_finite() || c < 0.0 {
                return Err(format!("cost {c} at flow {m} is not finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Index of the linear piece used at `m`.
fn segment(points: &[(f64, f64)], m: f64) -> usize {
    points[1..points.len() - 1]
        .iter()
        .position(|p| m < p.0)
        .unwrap_or(points.len() - 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub cost: CostFunction,
    /// Overrides the convexity judgement derived from the cost parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex: Option<bool>,
}

impl Link {
    pub fn new(id: impl Into<String>, tail: usize, head: usize, cost: CostFunction) -> Self {
        Link {
            id: id.into(),
            tail,
            head,
            cost,
            convex: None,
        }
    }

    /// Whether the cost is taken to be C1, nondecreasing and convex.
    pub fn convex_claim(&self) -> bool {
        self.convex.unwrap_or_else(|| self.cost.nondecreasing_convex())
    }
}

/// A finite directed graph with a latency per arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    nodes: Vec<String>,
    links: Vec<Link>,
}

impl Network {
    pub fn new(nodes: Vec<String>, links: Vec<Link>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Network("no nodes".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &nodes {
            if !seen.insert(n.as_str()) {
                return Err(Error::Network(format!("duplicate node `{n}`")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for l in &links {
            if !seen.insert(l.id.as_str()) {
                return Err(Error::Network(format!("duplicate arc `{}`", l.id)));
            }
            if l.tail >= nodes.len() || l.head >= nodes.len() {
                return Err(Error::Network(format!("arc `{}` references a missing node", l.id)));
            }
        }
        Ok(Network { nodes, links })
    }

    /// Two nodes joined by the given parallel arcs, all directed `o -> d`.
    pub fn parallel(costs: Vec<CostFunction>) -> Result<Self> {
        let links = costs
            .into_iter()
            .enumerate()
            .map(|(k, c)| Link::new(format!("a{}", k + 1), 0, 1, c))
            .collect();
        Network::new(vec!["o".into(), "d".into()], links)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    /// Whether every arc runs between the same ordered pair of nodes.
    pub fn is_parallel(&self) -> Option<(usize, usize)> {
        let first = self.links.first()?;
        self.links
            .iter()
            .all(|l| l.tail == first.tail && l.head == first.head)
            .then_some((first.tail, first.head))
    }

    /// Whether `path` is a simple directed path from `origin` to `destination`.
    pub fn is_simple_path(&self, path: &[usize], origin: usize, destination: usize) -> bool {
        if path.is_empty() || path.iter().any(|a| *a >= self.links.len()) {
            return false;
        }
        let mut at = origin;
        let mut visited = vec![origin];
        for &a in path {
            let l = &self.links[a];
            if l.tail != at || visited.contains(&l.head) {
                return false;
            }
            at = l.head;
            visited.push(at);
        }
        at == destination
    }
}

/// All simple directed paths from `origin` to `destination`, as arc index
/// lists in lexicographic order. Returns an empty list when none exists.
pub fn enumerate_paths(network: &Network, origin: usize, destination: usize) -> Result<Vec<Vec<usize>>> {
    let n = network.nodes().len();
    if origin >= n || destination >= n {
        return Err(Error::Network("origin or destination is not a node".into()));
    }
    if origin == destination {
        return Err(Error::Network("origin and destination coincide".into()));
    }
    let mut out_links = vec![Vec::new(); n];
    for (k, l) in network.links().iter().enumerate() {
        out_links[l.tail].push(k);
    }
    let mut paths = Vec::new();
    let mut on_path = vec![false; n];
    let mut current = Vec::new();
    on_path[origin] = true;
    dfs(network, &out_links, origin, destination, &mut on_path, &mut current, &mut paths);
    Ok(paths)
}

fn dfs(
    network: &Network,
    out_links: &[Vec<usize>],
    at: usize,
    destination: usize,
    on_path: &mut [bool],
    current: &mut Vec<usize>,
    paths: &mut Vec<Vec<usize>>,
) {
    for &a in &out_links[at] {
        let next = network.links()[a].head;
        if on_path[next] {
            continue;
        }
        current.push(a);
        if next == destination {
            paths.push(current.clone());
        } else {
            on_path[next] = true;
            dfs(network, out_links, next, destination, on_path, current, paths);
            on_path[next] = false;
        }
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn unit() -> CostFunction {
        CostFunction::affine(1.0, 0.0)
    }

    #[test]
    fn parallel_and_diamond() {
        let par = Network::parallel(vec![unit(), unit()]).unwrap();
        assert_eq!(enumerate_paths(&par, 0, 1).unwrap(), vec![vec![0], vec![1]]);
        let diamond = Network::new(
            nodes(&["o", "a", "b", "d"]),
            vec![
                Link::new("oa", 0, 1, unit()),
                Link::new("ad", 1, 3, unit()),
                Link::new("ob", 0, 2, unit()),
                Link::new("bd", 2, 3, unit()),
            ],
        )
        .unwrap();
        assert_eq!(enumerate_paths(&diamond, 0, 3).unwrap(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn unreachable_gives_empty() {
        let net = Network::parallel(vec![unit()]).unwrap();
        assert!(enumerate_paths(&net, 1, 0).unwrap().is_empty());
        assert!(enumerate_paths(&net, 0, 0).is_err());
    }

    #[test]
    fn cost_kinds() {
        let p = CostFunction::Polynomial { coefficients: vec![1.0, 0.0, 0.0, 2.0] };
        assert_eq!(p.value(2.0), 17.0);
        assert_eq!(p.derivative(2.0), 24.0);
        assert!(p.nondecreasing_convex());
        let t = CostFunction::Tabulated { points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)] };
        assert_eq!(t.value(0.5), 1.5);
        assert_eq!(t.value(1.5), 3.5);
        assert_eq!(t.value(3.0), 8.0);
        assert_eq!(t.derivative(1.5), 3.0);
        assert!(t.nondecreasing_convex());
        let concave = CostFunction::Tabulated { points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)] };
        assert!(!concave.nondecreasing_convex());
        assert!(CostFunction::affine(-1.0, 0.5).validate(1.0).is_err());
    }
}
