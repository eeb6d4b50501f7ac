//! Evolutionary dynamics `x' = B_Phi(x)` on the product of simplices.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{best_reply_gaps, vi_residual_from};
use crate::error::{Error, Result};
use crate::game::{Blocks, GameSpec};
use crate::lyapunov::{lyapunov_value_from, LyapunovKind};
use crate::profile::{step_and_project, StrategyProfile, TangentVector};
use crate::simplex::{project_simplex_raw, project_tangent_cone_raw};

/// Ties in the best-reply selection are resolved within this band.
pub const BR_TIE_BAND: f64 = 1e-9;
/// Integration stops once `‖B(x)‖_inf` falls to this level.
pub const REST_TOL: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 1e-2;
/// Inner products below `-PC_TOL` violate positive correlation.
pub const PC_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    /// Replicator.
    Rd,
    /// Brown-von Neumann-Nash.
    Bnn,
    /// Smith pairwise comparison.
    Smith,
    /// Local (direct) projection.
    Lp,
    /// Global (target) projection.
    Gp,
    /// Best reply.
    Br,
}

impl DynamicsKind {
    pub const ALL: [DynamicsKind; 6] = [
        DynamicsKind::Rd,
        DynamicsKind::Bnn,
        DynamicsKind::Smith,
        DynamicsKind::Lp,
        DynamicsKind::Gp,
        DynamicsKind::Br,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DynamicsKind::Rd => "rd",
            DynamicsKind::Bnn => "bnn",
            DynamicsKind::Smith => "smith",
            DynamicsKind::Lp => "lp",
            DynamicsKind::Gp => "gp",
            DynamicsKind::Br => "br",
        }
    }
}

impl fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DynamicsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DynamicsKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown dynamics `{s}`")))
    }
}

fn positive(t: f64) -> f64 {
    t.max(0.0)
}

/// Excess evaluations `[Phi_p - <x, Phi>]^+`.
pub(crate) fn excess(x: &[f64], phi: &[f64]) -> Vec<f64> {
    let avg: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
    phi.iter().map(|v| positive(v - avg)).collect()
}

/// Index of the best reply vertex: the lowest index within the tie band of the maximum.
pub fn best_reply_index(phi: &[f64]) -> usize {
    let best = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    phi.iter()
        .position(|v| *v >= best - BR_TIE_BAND)
        .unwrap_or(0)
}

/// Field block for one participant.
pub fn field_block(kind: DynamicsKind, x: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = x.len();
    match kind {
        DynamicsKind::Rd => {
            let avg: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
            x.iter().zip(phi).map(|(a, b)| a * (b - avg)).collect()
        }
        DynamicsKind::Bnn => {
            let hat = excess(x, phi);
            let total: f64 = hat.iter().sum();
            hat.iter().zip(x).map(|(h, a)| h - a * total).collect()
        }
        DynamicsKind::Smith => (0..n)
            .map(|p| {
                let inflow: f64 = (0..n).map(|q| x[q] * positive(phi[p] - phi[q])).sum();
                let outflow: f64 = (0..n).map(|q| positive(phi[q] - phi[p])).sum();
                inflow - x[p] * outflow
            })
            .collect(),
        DynamicsKind::Lp => project_tangent_cone_raw(x, phi),
        DynamicsKind::Gp => {
            let shifted: Vec<f64> = x.iter().zip(phi).map(|(a, b)| a + b).collect();
            project_simplex_raw(&shifted)
                .iter()
                .zip(x)
                .map(|(p, a)| p - a)
                .collect()
        }
        DynamicsKind::Br => {
            // x itself is a best reply when its gap is within the tie band;
            // otherwise move toward the selected vertex.
            let gap = best_reply_gaps(&[x.to_vec()], &[phi.to_vec()])[0];
            if gap <= BR_TIE_BAND {
                vec![0.0; n]
            } else {
                let target = best_reply_index(phi);
                (0..n)
                    .map(|p| if p == target { 1.0 } else { 0.0 } - x[p])
                    .collect()
            }
        }
    }
}

pub(crate) fn field_from(kind: DynamicsKind, x: &[Vec<f64>], phi: &[Vec<f64>]) -> Blocks {
    x.iter()
        .zip(phi)
        .map(|(xb, pb)| field_block(kind, xb, pb))
        .collect()
}

/// The vector field `B_Phi(x)` of the given dynamics.
pub fn field(kind: DynamicsKind, game: &GameSpec, x: &StrategyProfile) -> Result<TangentVector> {
    let phi = game.evaluate(x)?;
    TangentVector::new(field_from(kind, x.blocks(), &phi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub vi_residual: f64,
    pub field_norm: f64,
    /// `<B^i(x), Phi^i(x)>` per participant.
    pub pc_inner: Vec<f64>,
    /// `None` when no Lyapunov function was requested or `x` is outside its domain.
    pub lyapunov: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    /// `‖B‖_inf <= REST_TOL`: a rest point, not necessarily an equilibrium.
    RestPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub kind: DynamicsKind,
    pub dt: f64,
    pub times: Vec<f64>,
    pub profiles: Vec<StrategyProfile>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub termination: Termination,
    pub lyapunov: Option<LyapunovKind>,
}

impl Trajectory {
    pub fn last(&self) -> &StrategyProfile {
        self.profiles.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Writes one CSV row per grid point: time, every share in participant
    /// and choice order, then the VI residual, field norm and Lyapunov value.
    pub fn write_csv<W: Write>(&self, game: &GameSpec, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for p in game.participants() {
            for c in &p.choices {
                header.push(format!("{}.{}", p.id, c));
            }
        }
        header.extend(["vi_residual", "field_norm", "lyapunov"].map(String::from));
        w.write_record(&header)?;
        for ((t, x), d) in self.times.iter().zip(&self.profiles).zip(&self.diagnostics) {
            let mut row = vec![t.to_string()];
            row.extend(x.blocks().iter().flatten().map(|v| v.to_string()));
            row.push(d.vi_residual.to_string());
            row.push(d.field_norm.to_string());
            row.push(d.lyapunov.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    pub lyapunov: Option<LyapunovKind>,
    /// Stop at rest points.
    pub stop_at_rest: bool,
}

impl IntegrateOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegrateOptions {
            dt,
            t_end,
            lyapunov: None,
            stop_at_rest: true,
        }
    }

    pub fn with_lyapunov(mut self, kind: LyapunovKind) -> Self {
        self.lyapunov = Some(kind);
        self
    }
}

fn diagnostics(
    game: &GameSpec,
    x: &[Vec<f64>],
    phi: &Blocks,
    b: &Blocks,
    lyapunov: Option<&LyapunovKind>,
) -> StepDiagnostics {
    let pc_inner = b
        .iter()
        .zip(phi)
        .map(|(u, v)| u.iter().zip(v).map(|(p, q)| p * q).sum())
        .collect();
    StepDiagnostics {
        vi_residual: vi_residual_from(x, phi),
        field_norm: b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
        pc_inner,
        lyapunov: lyapunov.and_then(|l| lyapunov_value_from(l, game, x, phi).ok()),
    }
}

fn all_finite(x: &[Vec<f64>]) -> bool {
    x.iter().flatten().all(|v| v.is_finite())
}

/// Classical fixed-step RK4. Every stage point and every new state is
/// projected back onto the product of simplices (a no-op for feasible points).
pub fn integrate(
    kind: DynamicsKind,
    game: &GameSpec,
    x0: &StrategyProfile,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {}", opts.dt)));
    }
    if opts.t_end.is_nan() || opts.t_end < opts.dt {
        return Err(Error::Config(format!(
            "t_end ({}) must be at least dt ({})",
            opts.t_end, opts.dt
        )));
    }
    game.check_shape(x0)?;
    let steps = (opts.t_end / opts.dt).round() as usize;
    let dt = opts.dt;
    let b_at = |x: &[Vec<f64>]| -> (Blocks, Blocks) {
        let phi = game.evaluate_raw(x);
        let b = field_from(kind, x, &phi);
        (phi, b)
    };

    let mut x = x0.blocks().to_vec();
    let (mut phi, mut b) = b_at(&x);
    let mut traj = Trajectory {
        kind,
        dt,
        times: vec![0.0],
        profiles: vec![x0.clone()],
        diagnostics: vec![diagnostics(game, &x, &phi, &b, opts.lyapunov.as_ref())],
        termination: Termination::Horizon,
        lyapunov: opts.lyapunov.clone(),
    };

    for step in 1..=steps {
        let rest = b.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if opts.stop_at_rest && rest <= REST_TOL {
            traj.termination = Termination::RestPoint;
            break;
        }
        let k1 = b.clone();
        let x2 = step_and_project(&x, &k1, 0.5 * dt);
        let (_, k2) = b_at(&x2);
        let x3 = step_and_project(&x, &k2, 0.5 * dt);
        let (_, k3) = b_at(&x3);
        let x4 = step_and_project(&x, &k3, dt);
        let (_, k4) = b_at(&x4);
        let increment: Blocks = (0..x.len())
            .map(|i| {
                (0..x[i].len())
                    .map(|p| (k1[i][p] + 2.0 * k2[i][p] + 2.0 * k3[i][p] + k4[i][p]) / 6.0)
                    .collect()
            })
            .collect();
        let next = step_and_project(&x, &increment, dt);
        let t = step as f64 * dt;
        if !all_finite(&next) || !all_finite(&increment) {
            let last_valid = Box::new(traj.last().clone());
            return Err(Error::NumericalAbort {
                time: t,
                last_valid,
                partial: Box::new(traj),
            });
        }
        x = next;
        (phi, b) = b_at(&x);
        if !all_finite(&phi) {
            let last_valid = Box::new(traj.last().clone());
            return Err(Error::NumericalAbort {
                time: t,
                last_valid,
                partial: Box::new(traj),
            });
        }
        traj.times.push(t);
        traj.profiles.push(StrategyProfile::new(x.clone())?);
        traj.diagnostics
            .push(diagnostics(game, &x, &phi, &b, opts.lyapunov.as_ref()));
    }
    Ok(traj)
}

#[derive(Clone, Debug, Serialize)]
pub struct PcReport {
    pub inner: Vec<f64>,
    pub block_norms: Vec<f64>,
    /// The closed form each inner product should equal (GP: a lower bound).
    pub closed_form: Vec<f64>,
    pub holds: bool,
}

/// Closed-form value of `<B^i, Phi^i>` for one block. For GP this is the
/// lower bound `‖Pi(x + Phi) - x‖^2`; for the others it is an identity.
pub fn pc_closed_form(kind: DynamicsKind, x: &[f64], phi: &[f64]) -> f64 {
    let n = x.len();
    match kind {
        DynamicsKind::Rd => {
            let avg: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
            x.iter().zip(phi).map(|(a, b)| a * (b - avg).powi(2)).sum()
        }
        DynamicsKind::Bnn => excess(x, phi).iter().map(|h| h * h).sum(),
        DynamicsKind::Smith => {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += x[q] * positive(phi[p] - phi[q]).powi(2);
                }
            }
            s
        }
        DynamicsKind::Lp => project_tangent_cone_raw(x, phi).iter().map(|v| v * v).sum(),
        DynamicsKind::Gp => field_block(DynamicsKind::Gp, x, phi)
            .iter()
            .map(|v| v * v)
            .sum(),
        DynamicsKind::Br => {
            let b = field_block(DynamicsKind::Br, x, phi);
            if b.iter().all(|v| *v == 0.0) {
                0.0
            } else {
                best_reply_gaps(&[x.to_vec()], &[phi.to_vec()])[0]
            }
        }
    }
}

/// Positive correlation: `<B^i, Phi^i> > 0` whenever `B^i != 0`.
pub fn check_pc(kind: DynamicsKind, game: &GameSpec, x: &StrategyProfile) -> Result<PcReport> {
    let phi = game.evaluate(x)?;
    let b = field_from(kind, x.blocks(), &phi);
    let mut inner = Vec::with_capacity(b.len());
    let mut norms = Vec::with_capacity(b.len());
    let mut closed = Vec::with_capacity(b.len());
    let mut holds = true;
    for (i, (bb, pb)) in b.iter().zip(&phi).enumerate() {
        let ip: f64 = bb.iter().zip(pb).map(|(u, v)| u * v).sum();
        let norm = bb.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ip < -PC_TOL || (norm > 1e-6 && ip <= 0.0) {
            holds = false;
        }
        inner.push(ip);
        norms.push(norm);
        closed.push(pc_closed_form(kind, x.block(i), pb));
    }
    Ok(PcReport {
        inner,
        block_norms: norms,
        closed_form: closed,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityViolation {
    pub sample: usize,
    pub field_norm: f64,
    pub vi_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NashStationarityReport {
    pub kind: DynamicsKind,
    pub checked: usize,
    /// RD samples on the boundary, where rest points need not be equilibria.
    pub skipped_boundary: usize,
    pub violations: Vec<StationarityViolation>,
    pub passed: bool,
}

/// Minimum share for an RD sample to count as interior.
pub const RD_INTERIOR_FLOOR: f64 = 1e-3;

/// Checks `‖B(x)‖ <= tol <=> vi_residual(x) <= tol` at every sample; for RD
/// only at samples whose smallest share is at least `RD_INTERIOR_FLOOR`.
pub fn check_nash_stationarity(
    kind: DynamicsKind,
    game: &GameSpec,
    samples: &[StrategyProfile],
    tol: f64,
) -> Result<NashStationarityReport> {
    let mut checked = 0;
    let mut skipped = 0;
    let mut violations = Vec::new();
    for (n, x) in samples.iter().enumerate() {
        if kind == DynamicsKind::Rd && x.min_component() < RD_INTERIOR_FLOOR {
            skipped += 1;
            continue;
        }
        let phi = game.evaluate(x)?;
        let b = field_from(kind, x.blocks(), &phi);
        let norm = b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let residual = vi_residual_from(x.blocks(), &phi);
        checked += 1;
        if (norm <= tol) != (residual <= tol) {
            violations.push(StationarityViolation {
                sample: n,
                field_norm: norm,
                vi_residual: residual,
            });
        }
    }
    Ok(NashStationarityReport {
        kind,
        checked,
        skipped_boundary: skipped,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rd_vertex_is_zero() {
        assert_eq!(field_block(DynamicsKind::Rd, &[0.0, 1.0, 0.0], &[3.0, -1.0, 2.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn rd_half_half() {
        // Direct formula: x_p (Phi_p - mean) with mean 0.5.
        let b = field_block(DynamicsKind::Rd, &[0.5, 0.5], &[1.0, 0.0]);
        assert_eq!(b, vec![0.25, -0.25]);
        assert_eq!(pc_closed_form(DynamicsKind::Rd, &[0.5, 0.5], &[1.0, 0.0]), 0.25);
    }

    #[test]
    fn smith_vertex_example() {
        let b = field_block(DynamicsKind::Smith, &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(b, vec![-1.0, 1.0]);
    }

    #[test]
    fn br_selection_and_rest() {
        let b = field_block(DynamicsKind::Br, &[0.5, 0.5, 0.0], &[1.0, 0.0, 1.0]);
        assert_eq!(b, vec![0.5, -0.5, 0.0]);
        // Mixed best reply on a tie stays put.
        let b = field_block(DynamicsKind::Br, &[0.5, 0.0, 0.5], &[1.0, 0.0, 1.0]);
        assert_eq!(b, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn gp_interior_is_centered_evaluation() {
        let x = [0.3, 0.3, 0.4];
        let phi = [0.01, -0.02, 0.005];
        let b = field_block(DynamicsKind::Gp, &x, &phi);
        let mean = phi.iter().sum::<f64>() / 3.0;
        for (v, p) in b.iter().zip(phi) {
            assert_abs_diff_eq!(*v, p - mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn parses_kind_names() {
        for k in DynamicsKind::ALL {
            assert_eq!(k.name().parse::<DynamicsKind>().unwrap(), k);
        }
        assert!("euler".parse::<DynamicsKind>().is_err());
    }
}
