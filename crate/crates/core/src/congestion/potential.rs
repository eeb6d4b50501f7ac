use crate::error::{Error, Result};
use crate::profile::{Category, PureProfiles};

use super::{CongestionModel, CostFunction};

/// Closed-form potential of an affine parallel-link instance:
///
/// `W(x) = -E_s[ 1/2 sum_a b_a (f_a^2 + sum_{splittable j} (f^j_a)^2
///          + sum_{non-splittable k} m_k^2 [s^k = a]) + sum_a d_a f_a ]`
///
/// where `s` ranges over the non-splittable participants' pure choices and
/// `f` is the aggregate flow under `s`. The matching scales are the weights.
pub fn affine_parallel_potential(model: &CongestionModel, x: &[Vec<f64>]) -> Result<f64> {
    if !model.is_affine_parallel() {
        return Err(Error::Network(
            "the closed-form potential needs a parallel-link network with affine costs".into(),
        ));
    }
    let links = model.network().links();
    let (slope, intercept): (Vec<f64>, Vec<f64>) = links
        .iter()
        .map(|l| match l.cost {
            CostFunction::Affine { slope, intercept } => (slope, intercept),
            _ => unreachable!("checked affine"),
        })
        .unzip();
    let arc_of = |i: usize, p: usize| model.paths(i)[p][0];

    let mut base = vec![0.0; links.len()];
    let mut splittable_sq = 0.0;
    let mut nonsplittable = Vec::new();
    for (i, d) in model.demands().iter().enumerate() {
        match d.category {
            Category::AtomicNonSplittable => nonsplittable.push(i),
            category => {
                for (p, share) in x[i].iter().enumerate() {
                    let a = arc_of(i, p);
                    let flow = d.weight * share;
                    base[a] += flow;
                    if category == Category::AtomicSplittable {
                        splittable_sq += 0.5 * slope[a] * flow * flow;
                    }
                }
            }
        }
    }

    let sizes: Vec<usize> = nonsplittable.iter().map(|k| model.paths(*k).len()).collect();
    let mut total = 0.0;
    for s in PureProfiles::new(&sizes) {
        let w: f64 = nonsplittable
            .iter()
            .zip(&s)
            .map(|(k, c)| x[*k][*c])
            .product();
        if w == 0.0 {
            continue;
        }
        let mut flows = base.clone();
        let mut atom_sq = 0.0;
        for (k, c) in nonsplittable.iter().zip(&s) {
            let a = arc_of(*k, *c);
            let m = model.demands()[*k].weight;
            flows[a] += m;
            atom_sq += 0.5 * slope[a] * m * m;
        }
        let quadratic: f64 = flows.iter().zip(&slope).map(|(f, b)| 0.5 * b * f * f).sum();
        let linear: f64 = flows.iter().zip(&intercept).map(|(f, d)| d * f).sum();
        total += w * (quadratic + splittable_sq + atom_sq + linear);
    }
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congestion::{Network, RoutingDemand};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_population_closed_form() {
        let net = Network::parallel(vec![CostFunction::affine(1.0, 0.0), CostFunction::affine(0.0, 1.0)]).unwrap();
        let model = CongestionModel::new(net, vec![RoutingDemand::new("pop", 0, 1, 1.0, Category::Population)]).unwrap();
        for x1 in [0.0, 0.25, 0.6, 1.0] {
            let w = affine_parallel_potential(&model, &[vec![x1, 1.0 - x1]]).unwrap();
            assert_abs_diff_eq!(w, -(0.5 * x1 * x1 + (1.0 - x1)), epsilon = 1e-15);
        }
    }

    #[test]
    fn refuses_non_parallel() {
        let net = Network::new(
            vec!["o".into(), "a".into(), "d".into()],
            vec![
                crate::congestion::Link::new("oa", 0, 1, CostFunction::affine(1.0, 0.0)),
                crate::congestion::Link::new("ad", 1, 2, CostFunction::affine(1.0, 0.0)),
            ],
        )
        .unwrap();
        let model = CongestionModel::new(net, vec![RoutingDemand::new("p", 0, 2, 1.0, Category::Population)]).unwrap();
        assert!(affine_parallel_potential(&model, &[vec![1.0]]).is_err());
    }
}
