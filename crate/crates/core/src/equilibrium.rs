//! Equilibria as solutions of the variational inequality
//! `<Phi(x), x - y> >= 0` for all feasible `y`, its equivalent
//! representations, and the potential / dissipative game checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Blocks, GameSpec};
use crate::linalg::max_tangent_eigenvalue;
use crate::profile::{block_dot, PureProfiles, StrategyProfile};
use crate::sampling::{map_indexed, stream_rng};
use crate::simplex::{project_simplex_raw, project_tangent_cone_raw};

/// Default tolerance on the VI residual.
pub const TOL_EQUILIBRIUM: f64 = 1e-8;
/// Tolerance for equilibria produced by iterative solvers.
pub const TOL_VERIFY: f64 = 1e-6;
/// Residuals within this factor of the tolerance are inconclusive.
pub const INCONCLUSIVE_FACTOR: f64 = 10.0;
/// Vertices are enumerated exhaustively up to this many pure profiles.
pub const VERTEX_ENUMERATION_CAP: u128 = 10_000;

const SEGMENT_STEPS: [f64; 3] = [1e-3, 1e-2, 1e-1];
/// Tolerance on the potential orthogonality defect.
pub const TOL_POTENTIAL: f64 = 1e-5;

/// Per-participant gain from the best unilateral deviation:
/// `max_p Phi^i_p - <x^i, Phi^i>`.
pub fn best_reply_gaps(x: &[Vec<f64>], phi: &[Vec<f64>]) -> Vec<f64> {
    x.iter()
        .zip(phi)
        .map(|(xb, pb)| {
            let best = pb.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let avg: f64 = xb.iter().zip(pb).map(|(a, b)| a * b).sum();
            (best - avg).max(0.0)
        })
        .collect()
}

/// `max_{y in X} <Phi(x), y - x>` given the evaluation at `x`.
pub fn vi_residual_from(x: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    best_reply_gaps(x, phi).iter().sum()
}

/// `‖Pi_{T_X(x)} Phi(x)‖`.
pub fn tangent_residual_from(x: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    x.iter()
        .zip(phi)
        .map(|(xb, pb)| {
            project_tangent_cone_raw(xb, pb)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖Pi_X[x + Phi(x)] - x‖`.
pub fn fixedpoint_residual_from(x: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    x.iter()
        .zip(phi)
        .map(|(xb, pb)| {
            let shifted: Vec<f64> = xb.iter().zip(pb).map(|(a, b)| a + b).collect();
            project_simplex_raw(&shifted)
                .iter()
                .zip(xb)
                .map(|(p, a)| (p - a).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn vi_residual(game: &GameSpec, x: &StrategyProfile) -> Result<f64> {
    let phi = game.evaluate(x)?;
    Ok(vi_residual_from(x.blocks(), &phi))
}

pub fn is_near_threshold(residual: f64, tol: f64) -> bool {
    residual >= tol / INCONCLUSIVE_FACTOR && residual <= tol * INCONCLUSIVE_FACTOR
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Equilibrium,
    /// VI solution in a game whose splittable gains are not known to be concave.
    FirstOrderPoint,
    NotEquilibrium,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport {
    pub vi_residual: f64,
    pub fixedpoint_residual: f64,
    pub tangent_residual: f64,
    pub best_reply_gaps: Vec<f64>,
    pub tol: f64,
    /// `vi_residual <= tol`.
    pub verdict: bool,
    pub classification: Classification,
    /// Whether the three residuals give the same verdict at `tol`.
    pub representations_agree: bool,
}

/// Computes the VI residual together with the tangent-cone and
/// projection fixed-point representations of the same condition.
pub fn equilibrium_representations(
    game: &GameSpec,
    x: &StrategyProfile,
    tol: f64,
) -> Result<EquilibriumReport> {
    let phi = game.evaluate(x)?;
    Ok(report_from(game, x.blocks(), &phi, tol))
}

pub(crate) fn report_from(game: &GameSpec, x: &[Vec<f64>], phi: &Blocks, tol: f64) -> EquilibriumReport {
    let gaps = best_reply_gaps(x, phi);
    let vi: f64 = gaps.iter().sum();
    let tangent = tangent_residual_from(x, phi);
    let fixed = fixedpoint_residual_from(x, phi);
    let verdict = vi <= tol;
    let classification = if is_near_threshold(vi, tol) {
        Classification::Inconclusive
    } else if !verdict {
        Classification::NotEquilibrium
    } else if game.has_splittable() && !game.splittable_concave {
        Classification::FirstOrderPoint
    } else {
        Classification::Equilibrium
    };
    EquilibriumReport {
        vi_residual: vi,
        fixedpoint_residual: fixed,
        tangent_residual: tangent,
        best_reply_gaps: gaps,
        tol,
        verdict,
        classification,
        representations_agree: (tangent <= tol) == verdict && (fixed <= tol) == verdict,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SneReport {
    pub passed: bool,
    /// Minimum of `<Phi(y), x - y>` over the tested `y`.
    pub worst: f64,
    pub worst_at: StrategyProfile,
    pub vertices_checked: usize,
    pub samples_checked: usize,
    pub tol: f64,
}

/// Tests the dual inequality `<Phi(y), x - y> >= -tol` at all pure profiles
/// (when there are at most 10^4), at points on the segments from `x` toward
/// them, and at `samples` Dirichlet draws of `y`.
pub fn sne_check(
    game: &GameSpec,
    x: &StrategyProfile,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SneReport> {
    game.check_shape(x)?;
    let mut candidates = Vec::new();
    let vertices = if game.pure_profile_count() <= VERTEX_ENUMERATION_CAP {
        let sizes = game.sizes();
        let pure: Vec<StrategyProfile> = PureProfiles::new(sizes).map(|s| StrategyProfile::pure(sizes, &s)).collect();
        // Points near x toward each vertex catch violations that are only
        // visible close to x.
        for v in &pure {
            for t in SEGMENT_STEPS {
                candidates.push(x.interpolate(v, t));
            }
        }
        let count = pure.len();
        candidates.extend(pure);
        count
    } else {
        0
    };
    for n in 0..samples {
        let mut rng = stream_rng(seed, n as u64);
        candidates.push(StrategyProfile::dirichlet(game.sizes(), &mut rng));
    }
    let mut worst = f64::INFINITY;
    let mut worst_at = x.clone();
    for y in candidates {
        let phi = game.evaluate(&y)?;
        let diff: Blocks = x
            .blocks()
            .iter()
            .zip(y.blocks())
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect())
            .collect();
        let value = block_dot(&phi, &diff);
        if value < worst {
            worst = value;
            worst_at = y;
        }
    }
    Ok(SneReport {
        passed: worst >= -tol,
        worst,
        worst_at,
        vertices_checked: vertices,
        samples_checked: samples,
        tol,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DissipativeOptions {
    pub pairs: usize,
    pub jacobian_points: usize,
    pub seed: u64,
    /// Slack for the non-strict verdict.
    pub tol: f64,
    /// Margin required by the strict and strong verdicts.
    pub margin: f64,
    pub jobs: usize,
}

impl Default for DissipativeOptions {
    fn default() -> Self {
        DissipativeOptions {
            pairs: 1000,
            jacobian_points: 100,
            seed: 0,
            tol: 1e-7,
            margin: 1e-6,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipativeReport {
    pub pairs: usize,
    /// `max <Phi(x) - Phi(y), x - y>` over sampled pairs.
    pub worst_monotonicity: f64,
    /// `max <Phi(x) - Phi(y), x - y> / ‖x - y‖^2` over sampled pairs.
    pub worst_normalized: f64,
    pub jacobian_points: usize,
    /// Largest eigenvalue of the tangent-restricted symmetric Jacobian.
    pub max_tangent_eigenvalue: f64,
    pub dissipative: bool,
    pub strictly_dissipative: bool,
    pub strongly_dissipative: bool,
    pub tol: f64,
    pub margin: f64,
}

/// Sampling test of dissipativity. A failing sample disproves it; passing
/// samples are evidence only.
pub fn check_dissipative(game: &GameSpec, opts: &DissipativeOptions) -> Result<DissipativeReport> {
    let sizes = game.sizes().to_vec();
    let pair_values = map_indexed(opts.pairs, opts.jobs, |n| -> Result<(f64, f64)> {
        let mut rng = stream_rng(opts.seed, 2 * n as u64);
        let x = StrategyProfile::dirichlet(&sizes, &mut rng);
        let y = StrategyProfile::dirichlet(&sizes, &mut rng);
        let fx = game.evaluate(&x)?;
        let fy = game.evaluate(&y)?;
        let mut value = 0.0;
        let mut dist2 = 0.0;
        for (i, (xb, yb)) in x.blocks().iter().zip(y.blocks()).enumerate() {
            for p in 0..xb.len() {
                let d = xb[p] - yb[p];
                value += (fx[i][p] - fy[i][p]) * d;
                dist2 += d * d;
            }
        }
        Ok((value, if dist2 > 0.0 { value / dist2 } else { f64::NEG_INFINITY }))
    });
    let mut worst = f64::NEG_INFINITY;
    let mut worst_norm = f64::NEG_INFINITY;
    for v in pair_values {
        let (a, b) = v?;
        worst = worst.max(a);
        worst_norm = worst_norm.max(b);
    }

    let eigen_values = map_indexed(opts.jacobian_points, opts.jobs, |n| -> Result<f64> {
        let mut rng = stream_rng(opts.seed, 2 * n as u64 + 1);
        let x = StrategyProfile::dirichlet(&sizes, &mut rng);
        let j = game.jacobian(&x)?;
        Ok(max_tangent_eigenvalue(&j, &sizes).unwrap_or(f64::NEG_INFINITY))
    });
    let mut max_eig = f64::NEG_INFINITY;
    for e in eigen_values {
        max_eig = max_eig.max(e?);
    }

    let dissipative = worst <= opts.tol && max_eig <= opts.tol;
    Ok(DissipativeReport {
        pairs: opts.pairs,
        worst_monotonicity: worst,
        worst_normalized: worst_norm,
        jacobian_points: opts.jacobian_points,
        max_tangent_eigenvalue: max_eig,
        dissipative,
        strictly_dissipative: dissipative && worst_norm < -opts.margin,
        strongly_dissipative: dissipative && max_eig < -opts.margin,
        tol: opts.tol,
        margin: opts.margin,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub samples: usize,
    /// Largest spread `max_p g_p - min_p g_p` of `g = grad^i W - mu^i Phi^i`.
    pub worst_defect: f64,
    pub worst_participant: Option<String>,
    pub passed: bool,
    pub tol: f64,
}

/// Checks that `grad^i W(x) - mu^i(x) Phi^i(x)` is orthogonal to the tangent
/// space of each simplex, i.e. has equal components, at every sample.
pub fn check_potential(
    game: &GameSpec,
    samples: &[StrategyProfile],
    tol: f64,
) -> Result<PotentialReport> {
    let potential = game
        .potential()
        .ok_or_else(|| Error::Config(format!("game `{}` has no potential block", game.name)))?;
    let mut worst = 0.0_f64;
    let mut worst_participant = None;
    for x in samples {
        let phi = game.evaluate(x)?;
        let grad = potential.gradient(x.blocks());
        let mu = potential.scales(x.blocks());
        for (i, p) in game.participants().iter().enumerate() {
            if mu[i].is_nan() || mu[i] <= 0.0 {
                return Err(Error::Shape {
                    participant: p.id.clone(),
                    reason: format!("potential scale {} is not positive", mu[i]),
                });
            }
            let g: Vec<f64> = grad[i]
                .iter()
                .zip(&phi[i])
                .map(|(a, b)| a - mu[i] * b)
                .collect();
            let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
            if hi - lo > worst {
                worst = hi - lo;
                worst_participant = Some(p.id.clone());
            }
        }
    }
    Ok(PotentialReport {
        samples: samples.len(),
        worst_defect: worst,
        worst_participant,
        passed: worst <= tol,
        tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub segments: usize,
    /// Largest `(W(a) + W(b)) / 2 - W((a + b) / 2)` over sampled segments.
    pub worst_violation: f64,
    pub passed: bool,
    pub tol: f64,
}

/// Midpoint concavity of the potential along random segments of `X`.
pub fn check_potential_concavity(
    game: &GameSpec,
    segments: usize,
    seed: u64,
    tol: f64,
) -> Result<ConcavityReport> {
    let potential = game
        .potential()
        .ok_or_else(|| Error::Config(format!("game `{}` has no potential block", game.name)))?;
    let mut worst = f64::NEG_INFINITY;
    for n in 0..segments {
        let mut rng = stream_rng(seed, n as u64);
        let a = StrategyProfile::dirichlet(game.sizes(), &mut rng);
        let b = StrategyProfile::dirichlet(game.sizes(), &mut rng);
        let mid = a.interpolate(&b, 0.5);
        let gap = 0.5 * (potential.value(a.blocks()) + potential.value(b.blocks()))
            - potential.value(mid.blocks());
        worst = worst.max(gap);
    }
    Ok(ConcavityReport {
        segments,
        worst_violation: worst,
        passed: worst <= tol,
        tol,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct MaximizeOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub slope: f64,
    pub grad_tol: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            restarts: 10,
            max_iters: 10_000,
            initial_step: 1.0,
            shrink: 0.5,
            slope: 1e-4,
            grad_tol: 1e-8,
            seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialMaximum {
    pub profile: StrategyProfile,
    pub value: f64,
    pub converged: bool,
    /// The potential is constant on the sampled starts; any point maximizes it.
    pub degenerate: bool,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    /// VI residual of the result; skipped for degenerate potentials.
    pub vi_residual: Option<f64>,
}

fn projected_gradient_norm(x: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    fixedpoint_residual_from(x, g)
}

struct AscentRun {
    profile: StrategyProfile,
    value: f64,
    converged: bool,
    iterations: usize,
    pg_norm: f64,
    start_pg_norm: f64,
    start_value: f64,
}

fn ascend(game: &GameSpec, start: StrategyProfile, opts: &MaximizeOptions) -> AscentRun {
    let potential = game.potential().expect("checked by caller");
    let mut x = start.into_blocks();
    let mut w = potential.value(&x);
    let start_value = w;
    let mut g = potential.gradient(&x);
    let mut pg = projected_gradient_norm(&x, &g);
    let start_pg_norm = pg;
    let mut iterations = 0;
    let mut converged = pg <= opts.grad_tol;
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let mut t = opts.initial_step;
        let mut accepted = None;
        while t > 1e-20 {
            let cand: Blocks = x
                .iter()
                .zip(&g)
                .map(|(xb, gb)| {
                    let moved: Vec<f64> = xb.iter().zip(gb).map(|(a, b)| a + t * b).collect();
                    project_simplex_raw(&moved)
                })
                .collect();
            let wc = potential.value(&cand);
            let dir: Blocks = cand
                .iter()
                .zip(&x)
                .map(|(c, a)| c.iter().zip(a).map(|(p, q)| p - q).collect())
                .collect();
            if wc >= w + opts.slope * block_dot(&g, &dir) {
                accepted = Some((cand, wc));
                break;
            }
            t *= opts.shrink;
        }
        let Some((cand, wc)) = accepted else {
            break;
        };
        x = cand;
        w = wc;
        g = potential.gradient(&x);
        pg = projected_gradient_norm(&x, &g);
        converged = pg <= opts.grad_tol;
    }
    AscentRun {
        profile: StrategyProfile::projected(&x).expect("finite iterate"),
        value: w,
        converged,
        iterations,
        pg_norm: pg,
        start_pg_norm,
        start_value,
    }
}

/// Projected gradient ascent on the potential with Armijo backtracking,
/// from the barycenter and `restarts - 1` Dirichlet starts.
pub fn maximize_potential(game: &GameSpec, opts: &MaximizeOptions) -> Result<PotentialMaximum> {
    if game.potential().is_none() {
        return Err(Error::Config(format!(
            "game `{}` has no potential block",
            game.name
        )));
    }
    let sizes = game.sizes().to_vec();
    let restarts = opts.restarts.max(1);
    let runs = map_indexed(restarts, opts.jobs, |n| {
        let start = if n == 0 {
            StrategyProfile::uniform(&sizes)
        } else {
            StrategyProfile::dirichlet(&sizes, &mut stream_rng(opts.seed, n as u64))
        };
        ascend(game, start, opts)
    });

    let values: Vec<f64> = runs.iter().map(|r| r.start_value).collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let degenerate = hi - lo <= 1e-12 * (1.0 + hi.abs())
        && runs.iter().all(|r| r.start_pg_norm <= opts.grad_tol);

    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    let vi = if degenerate {
        None
    } else {
        Some(vi_residual(game, &best.profile)?)
    };
    Ok(PotentialMaximum {
        profile: best.profile,
        value: best.value,
        converged: best.converged,
        degenerate,
        iterations: best.iterations,
        projected_gradient_norm: best.pg_norm,
        vi_residual: vi,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ExtragradientOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub initial_step: f64,
}

impl Default for ExtragradientOptions {
    fn default() -> Self {
        ExtragradientOptions {
            max_iters: 100_000,
            tol: 1e-12,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalSolution {
    pub profile: StrategyProfile,
    pub vi_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Extragradient projection method for the VI of a dissipative game, with
/// the step reduced until `t ‖Phi(y) - Phi(x)‖ <= 0.9 ‖y - x‖`.
pub fn solve_extragradient(
    game: &GameSpec,
    start: &StrategyProfile,
    opts: &ExtragradientOptions,
) -> Result<VariationalSolution> {
    game.check_shape(start)?;
    let shift = |x: &[Vec<f64>], d: &[Vec<f64>], t: f64| -> Blocks {
        x.iter()
            .zip(d)
            .map(|(a, b)| {
                let moved: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * q).collect();
                project_simplex_raw(&moved)
            })
            .collect()
    };
    let dist = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut x = start.blocks().to_vec();
    let mut t = opts.initial_step;
    let mut phi = game.evaluate_raw(&x);
    let mut residual = vi_residual_from(&x, &phi);
    let mut iterations = 0;
    while residual > opts.tol && iterations < opts.max_iters {
        iterations += 1;
        let phi_y = loop {
            let y = shift(&x, &phi, t);
            let phi_y = game.evaluate_raw(&y);
            if t * dist(&phi_y, &phi) <= 0.9 * dist(&y, &x) || t < 1e-12 {
                break phi_y;
            }
            t *= 0.5;
        };
        x = shift(&x, &phi_y, t);
        phi = game.evaluate_raw(&x);
        residual = vi_residual_from(&x, &phi);
        if !residual.is_finite() {
            break;
        }
    }
    Ok(VariationalSolution {
        profile: StrategyProfile::projected(&x)?,
        vi_residual: residual,
        iterations,
        converged: residual <= opts.tol,
    })
}
