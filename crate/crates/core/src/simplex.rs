//! Geometry of a single probability simplex: validated points, Euclidean
//! projection, and projection onto the tangent cone at a point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance for simplex membership.
pub const EPS_SIMPLEX: f64 = 1e-9;
/// A coordinate at or below this value marks an active face of the simplex.
pub const EPS_ACTIVE: f64 = 1e-9;

const BISECTION_TOL: f64 = 1e-12;

/// A point of the simplex on a finite choice set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `weights` against the simplex and clamps tiny negatives to zero.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplex {
                reason: "empty choice set".into(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        if let Some((index, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| **w < -EPS_SIMPLEX)
        {
            return Err(Error::InvalidSimplex {
                reason: format!("component {index} is {w:e}"),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > EPS_SIMPLEX {
            return Err(Error::InvalidSimplex {
                reason: format!("components sum to {sum}"),
            });
        }
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        Ok(SimplexPoint(weights))
    }

    pub fn uniform(n: usize) -> Self {
        SimplexPoint(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, index: usize) -> Self {
        let mut w = vec![0.0; n];
        w[index] = 1.0;
        SimplexPoint(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices of coordinates lying on an active face.
    pub fn active_set(&self) -> Vec<usize> {
        active_indices(&self.0)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(value)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn active_indices(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v <= EPS_ACTIVE)
        .map(|(i, _)| i)
        .collect()
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Uses the sort-and-threshold solution of the KKT system. Inputs already on
/// the simplex (to within a few ulps of the sum) are returned unchanged, which
/// makes the projection bitwise idempotent.
pub fn project_simplex(v: &[f64]) -> Result<SimplexPoint> {
    check_finite(v)?;
    if v.is_empty() {
        return Err(Error::InvalidSimplex {
            reason: "empty choice set".into(),
        });
    }
    Ok(SimplexPoint(project_simplex_raw(v)))
}

pub(crate) fn project_simplex_raw(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let sum: f64 = v.iter().sum();
    if v.iter().all(|x| *x >= 0.0) && (sum - 1.0).abs() <= 4.0 * n as f64 * f64::EPSILON {
        return v.to_vec();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection of `v` onto the tangent cone of the simplex at `x`.
///
/// The cone is `{z : sum z = 0, z_p >= 0 where x_p <= EPS_ACTIVE}`. The
/// multiplier of the sum constraint is located by bisection on the monotone
/// map `mu -> sum_p z_p(mu)`, after which it is recomputed in closed form on
/// the identified support so that the sum is zero to rounding.
pub fn project_tangent_cone(x: &SimplexPoint, v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v)?;
    if x.len() != v.len() {
        return Err(Error::InvalidSimplex {
            reason: format!("dimension mismatch: point {} vs vector {}", x.len(), v.len()),
        });
    }
    Ok(project_tangent_cone_raw(x.as_slice(), v))
}

pub(crate) fn project_tangent_cone_raw(x: &[f64], v: &[f64]) -> Vec<f64> {
    let active: Vec<bool> = x.iter().map(|xp| *xp <= EPS_ACTIVE).collect();
    let z_at = |mu: f64, p: usize| {
        if active[p] {
            (v[p] - mu).max(0.0)
        } else {
            v[p] - mu
        }
    };
    let total = |mu: f64| (0..v.len()).map(|p| z_at(mu, p)).sum::<f64>();

    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = 1.0 + vmax.abs().max(vmin.abs());
    let mut lo = vmin - 1.0;
    let mut hi = vmax + 1.0;
    while hi - lo > BISECTION_TOL * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu_approx = 0.5 * (lo + hi);

    // Support of the solution: free coordinates plus active ones still positive.
    let support: Vec<usize> = (0..v.len())
        .filter(|&p| !active[p] || v[p] > mu_approx)
        .collect();
    let mu = if support.is_empty() {
        mu_approx
    } else {
        support.iter().map(|&p| v[p]).sum::<f64>() / support.len() as f64
    };
    let mut z = vec![0.0; v.len()];
    for &p in &support {
        z[p] = v[p] - mu;
    }
    for p in 0..v.len() {
        if active[p] && z[p] < 0.0 {
            z[p] = 0.0;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn construction_clamps_tiny_negatives() {
        let p = SimplexPoint::new(vec![1.0 + 5e-10, -5e-10]).unwrap();
        assert_eq!(p.as_slice()[1], 0.0);
        assert!(SimplexPoint::new(vec![1.1, -0.1]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.4]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
    }

    /// Tries every support set: equal shift on the support, zero elsewhere;
    /// keeps the closest feasible candidate.
    fn brute_force_projection(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let shift = (support.iter().map(|k| v[*k]).sum::<f64>() - 1.0) / support.len() as f64;
            let cand: Vec<f64> = (0..n)
                .map(|k| if support.contains(&k) { v[k] - shift } else { 0.0 })
                .collect();
            if cand.iter().any(|c| *c < 0.0) {
                continue;
            }
            let d: f64 = cand.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.3, 0.7]).unwrap().as_slice(), &[0.3, 0.7]);
        assert_eq!(project_simplex(&[1.0, 1.0]).unwrap().as_slice(), &[0.5, 0.5]);
        let v = [0.8, -0.2, 0.1];
        let p = project_simplex(&v).unwrap();
        let oracle = brute_force_projection(&v);
        assert_abs_diff_eq!(oracle[0], 0.85, epsilon = 1e-15);
        assert_eq!(oracle[1], 0.0);
        assert_abs_diff_eq!(oracle[2], 0.15, epsilon = 1e-15);
        for (a, b) in p.as_slice().iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        assert!(project_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn tangent_cone_examples() {
        let interior = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let z = project_tangent_cone(&interior, &[1.0, 2.0, 6.0]).unwrap();
        for (zi, expected) in z.iter().zip([-2.0, -1.0, 3.0]) {
            assert_abs_diff_eq!(*zi, expected, epsilon = 1e-12);
        }

        let corner = SimplexPoint::vertex(2, 0);
        let z = project_tangent_cone(&corner, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(z[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 0.5, epsilon = 1e-12);

        let z = project_tangent_cone(&corner, &[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(z[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tangent_cone_rejects_mismatch() {
        let p = SimplexPoint::uniform(3);
        assert!(project_tangent_cone(&p, &[1.0, 2.0]).is_err());
        assert!(project_tangent_cone(&p, &[1.0, f64::NAN, 0.0]).is_err());
    }
}
