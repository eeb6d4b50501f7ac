use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use cgame_core::congestion::CongestionModel;
use cgame_core::dynamics::{field, integrate, DynamicsKind, IntegrateOptions, Termination, Trajectory};
use cgame_core::equilibrium::{
    check_dissipative, check_potential, check_potential_concavity, equilibrium_representations, maximize_potential,
    solve_extragradient, vi_residual, DissipativeOptions, ExtragradientOptions, MaximizeOptions, TOL_EQUILIBRIUM,
    TOL_POTENTIAL, TOL_VERIFY,
};
use cgame_core::lyapunov::{monotonicity_report, LyapunovKind, LYAP_TOL};
use cgame_core::sampling::stream_rng;
use cgame_core::{builtin, specfile, GameSpec, StrategyProfile};
use serde::Serialize;
use serde_json::json;

use crate::report::{emit, Report, SpecInfo, Verdict};
use crate::{Common, Flow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cgame_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use cgame_core::Error as E;
        match self {
            CliError::Core(E::NumericalAbort { .. } | E::NonFiniteEvaluation { .. } | E::InvalidAnchor { .. }) => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Loaded {
    game: GameSpec,
    congestion: Option<Arc<CongestionModel>>,
    info: SpecInfo,
}

fn load(source: &str) -> CliResult<Loaded> {
    let (doc, bytes) = if let Some(name) = source.strip_prefix("builtin:") {
        let doc = builtin::load_document(name)?;
        (doc, builtin::source(name).unwrap_or_default().as_bytes().to_vec())
    } else {
        let bytes = std::fs::read(source).map_err(|e| CliError::Io {
            path: source.to_string(),
            source: e,
        })?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Core(cgame_core::Error::SpecFile("file is not UTF-8".into())))?;
        (specfile::parse_document(&text)?, bytes)
    };
    let info = SpecInfo::new(source, &doc.game.name, &bytes);
    Ok(Loaded {
        game: doc.game,
        congestion: doc.congestion,
        info,
    })
}

/// Parses `--init`.
pub fn initial_profile(game: &GameSpec, init: &str, seed: u64) -> CliResult<StrategyProfile> {
    let sizes = game.sizes();
    let bad = |msg: String| CliError::Usage(format!("--init {init}: {msg}"));
    if init == "uniform" {
        return Ok(game.uniform());
    }
    if init == "dirichlet" {
        return Ok(StrategyProfile::dirichlet(sizes, &mut stream_rng(seed, 0)));
    }
    if let Some(rest) = init.strip_prefix("vertex:") {
        let choices: Vec<usize> = if rest.contains(',') {
            rest.split(',')
                .map(|c| c.trim().parse().map_err(|_| bad(format!("`{c}` is not an index"))))
                .collect::<CliResult<_>>()?
        } else {
            // Row-major index over pure profiles, last participant fastest.
            let mut k: u128 = rest.parse().map_err(|_| bad(format!("`{rest}` is not an index")))?;
            if k >= game.pure_profile_count() {
                return Err(bad(format!("there are {} pure profiles", game.pure_profile_count())));
            }
            let mut out = vec![0; sizes.len()];
            for (i, n) in sizes.iter().enumerate().rev() {
                out[i] = (k % *n as u128) as usize;
                k /= *n as u128;
            }
            out
        };
        if choices.len() != sizes.len() || choices.iter().zip(sizes).any(|(c, n)| c >= n) {
            return Err(bad(format!("needs one choice index per participant, sizes {sizes:?}")));
        }
        return Ok(StrategyProfile::pure(sizes, &choices));
    }
    if let Some(rest) = init.strip_prefix("explicit:") {
        let blocks: Vec<Vec<f64>> = serde_json::from_str(rest).map_err(|e| bad(e.to_string()))?;
        return game.profile(blocks).map_err(|e| bad(e.to_string()));
    }
    Err(bad("expected uniform, dirichlet, vertex:<idx> or explicit:<json>".into()))
}

fn parse_dynamics(name: &str) -> CliResult<DynamicsKind> {
    DynamicsKind::from_str(name).map_err(|_| CliError::Usage(format!("unknown dynamics `{name}` (rd, bnn, smith, lp, gp, br)")))
}

/// An equilibrium for anchored Lyapunov functions: the potential maximizer
/// when there is a potential, extragradient from the barycenter otherwise.
fn find_equilibrium(game: &GameSpec, common: &Common) -> CliResult<(StrategyProfile, &'static str, usize)> {
    if game.potential().is_some() {
        let max = maximize_potential(
            game,
            &MaximizeOptions {
                seed: common.seed,
                jobs: common.jobs,
                ..Default::default()
            },
        )?;
        if !max.degenerate && vi_residual(game, &max.profile)? <= TOL_EQUILIBRIUM {
            return Ok((max.profile, "potential-ascent", max.iterations));
        }
    }
    let sol = solve_extragradient(game, &game.uniform(), &ExtragradientOptions::default())?;
    Ok((sol.profile, "extragradient", sol.iterations))
}

fn resolve_lyapunov(game: &GameSpec, common: &Common, dynamics: DynamicsKind, name: &str) -> CliResult<LyapunovKind> {
    let anchor = || find_equilibrium(game, common).map(|(x, _, _)| x);
    Ok(match name {
        "paired" => {
            let needs_anchor = matches!(dynamics, DynamicsKind::Rd | DynamicsKind::Lp);
            LyapunovKind::paired_with(dynamics, game, if needs_anchor { Some(anchor()?) } else { None })?
        }
        "potential" => LyapunovKind::Potential,
        "bnn-excess" => LyapunovKind::BnnExcess,
        "smith-pairwise" => LyapunovKind::SmithPairwise,
        "gp-regularized-gap" => LyapunovKind::GpRegularizedGap,
        "br-gap" => LyapunovKind::BrGap,
        "relative-entropy" => LyapunovKind::relative_entropy(game, anchor()?)?,
        "half-squared-distance" => LyapunovKind::half_squared_distance(game, anchor()?)?,
        other => return Err(CliError::Usage(format!("unknown lyapunov kind `{other}`"))),
    })
}

fn integrate_options(flow: &Flow) -> CliResult<IntegrateOptions> {
    if flow.dt.is_nan() || flow.dt <= 0.0 || flow.t_end.is_nan() || flow.t_end < flow.dt {
        return Err(CliError::Usage(format!(
            "need dt > 0 and t-end >= dt, got dt = {} and t-end = {}",
            flow.dt, flow.t_end
        )));
    }
    Ok(IntegrateOptions::new(flow.dt, flow.t_end))
}

fn write_report<T: Serialize>(path: Option<&Path>, report: &Report<T>) -> CliResult<()> {
    let text = report.to_json()?;
    emit(path, text.as_bytes()).map_err(|e| CliError::Io {
        path: path.map_or("stdout".into(), |p| p.display().to_string()),
        source: e,
    })
}

fn write_csv(path: Option<&Path>, game: &GameSpec, traj: &Trajectory) -> CliResult<()> {
    let mut buf = Vec::new();
    traj.write_csv(game, &mut buf)?;
    emit(path, &buf).map_err(|e| CliError::Io {
        path: path.map_or("stdout".into(), |p| p.display().to_string()),
        source: e,
    })
}

/// Where the simulate report goes: next to the CSV, or stderr with CSV on stdout.
fn sidecar(out: Option<&PathBuf>) -> Option<PathBuf> {
    out.map(|p| {
        let mut s = p.clone().into_os_string();
        s.push(".report.json");
        PathBuf::from(s)
    })
}

fn finish<T: Serialize>(common: &Common, report: Report<T>, pass: bool) -> CliResult<bool> {
    write_report(common.out.as_deref(), &report)?;
    Ok(pass)
}

#[derive(Serialize)]
struct SimulationSummary {
    dynamics: DynamicsKind,
    dt: f64,
    t_end: f64,
    init: String,
    lyapunov: Option<String>,
    rows: usize,
    termination: Option<Termination>,
    final_time: f64,
    final_profile: StrategyProfile,
    final_vi_residual: f64,
    final_field_norm: f64,
    csv: Option<String>,
    message: Option<String>,
}

pub fn simulate(common: &Common, flow: &Flow, lyapunov: Option<&str>) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let game = &loaded.game;
    let kind = parse_dynamics(&flow.dynamics)?;
    let x0 = initial_profile(game, &flow.init, common.seed)?;
    let mut opts = integrate_options(flow)?;
    if let Some(name) = lyapunov {
        opts = opts.with_lyapunov(resolve_lyapunov(game, common, kind, name)?);
    }
    let lyap_name = opts.lyapunov.as_ref().map(|k| k.name().to_string());
    let tolerances = json!({ "rest": cgame_core::dynamics::REST_TOL });
    let report_path = sidecar(common.out.as_ref());
    let csv = common.out.as_ref().map(|p| p.display().to_string());
    let summary = |traj: &Trajectory, termination, message| -> CliResult<SimulationSummary> {
        let last = traj.last().clone();
        Ok(SimulationSummary {
            dynamics: kind,
            dt: flow.dt,
            t_end: flow.t_end,
            init: flow.init.clone(),
            lyapunov: lyap_name.clone(),
            rows: traj.len(),
            termination,
            final_time: traj.final_time(),
            final_vi_residual: vi_residual(game, &last)?,
            final_field_norm: field(kind, game, &last)?.norm(),
            final_profile: last,
            csv: csv.clone(),
            message,
        })
    };
    match integrate(kind, game, &x0, &opts) {
        Ok(traj) => {
            write_csv(common.out.as_deref(), game, &traj)?;
            let result = summary(&traj, Some(traj.termination), None)?;
            let report = Report::new("simulate", loaded.info, common.seed, tolerances, Verdict::Pass, result);
            match &report_path {
                Some(p) => write_report(Some(p), &report)?,
                None => eprint!("{}", report.to_json()?),
            }
            Ok(true)
        }
        Err(cgame_core::Error::NumericalAbort { time, last_valid, partial }) => {
            write_csv(common.out.as_deref(), game, &partial)?;
            let message = format!("non-finite state at t = {time}; last valid state at t = {}", partial.final_time());
            eprintln!("error: {message}");
            eprintln!("last valid state: {}", serde_json::to_string(last_valid.blocks())?);
            let result = summary(&partial, None, Some(message))?;
            let report = Report::new("simulate", loaded.info, common.seed, tolerances, Verdict::Abort, result);
            match &report_path {
                Some(p) => write_report(Some(p), &report)?,
                None => eprint!("{}", report.to_json()?),
            }
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn equilibrium(common: &Common, init: &str, evaluate_only: bool) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let game = &loaded.game;
    let tol = common.tol.unwrap_or(TOL_EQUILIBRIUM);
    let x0 = initial_profile(game, init, common.seed)?;
    let (profile, solver, iterations) = if evaluate_only {
        (x0, "none", 0)
    } else if game.potential().is_some() {
        find_equilibrium(game, common)?
    } else {
        let sol = solve_extragradient(game, &x0, &ExtragradientOptions::default())?;
        (sol.profile, "extragradient", sol.iterations)
    };
    let report = equilibrium_representations(game, &profile, tol)?;
    let pass = report.verdict;
    let result = json!({
        "solver": solver,
        "iterations": iterations,
        "init": init,
        "profile": profile,
        "evaluation": game.evaluate(&profile)?,
        "residuals": report,
    });
    let tolerances = json!({ "equilibrium": tol, "inconclusive_factor": cgame_core::equilibrium::INCONCLUSIVE_FACTOR });
    let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    finish(common, Report::new("equilibrium", loaded.info, common.seed, tolerances, verdict, result), pass)
}

pub fn verify_potential(common: &Common, samples: usize) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let game = &loaded.game;
    let tol = common.tol.unwrap_or(TOL_POTENTIAL);
    let points: Vec<StrategyProfile> = (0..samples)
        .map(|n| StrategyProfile::dirichlet(game.sizes(), &mut stream_rng(common.seed, n as u64)))
        .collect();
    let potential = check_potential(game, &points, tol)?;
    let concavity = check_potential_concavity(game, 200, common.seed, 1e-9)?;
    let max = maximize_potential(
        game,
        &MaximizeOptions {
            seed: common.seed,
            jobs: common.jobs,
            ..Default::default()
        },
    )?;
    let max_vi = match max.vi_residual {
        Some(v) => v,
        None => vi_residual(game, &max.profile)?,
    };
    let pass = potential.passed;
    let result = json!({
        "potential": potential,
        "concavity": concavity,
        "maximizer": max,
        "maximizer_vi_residual": max_vi,
        "maximizer_is_equilibrium": max_vi <= TOL_VERIFY,
    });
    let tolerances = json!({ "potential_defect": tol, "concavity": 1e-9, "verify": TOL_VERIFY });
    let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    finish(common, Report::new("verify-potential", loaded.info, common.seed, tolerances, verdict, result), pass)
}

pub fn verify_dissipative(common: &Common, pairs: usize, jacobian_points: usize) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let defaults = DissipativeOptions::default();
    let opts = DissipativeOptions {
        pairs,
        jacobian_points,
        seed: common.seed,
        tol: common.tol.unwrap_or(defaults.tol),
        margin: defaults.margin,
        jobs: common.jobs,
    };
    let report = check_dissipative(&loaded.game, &opts)?;
    let pass = report.dissipative;
    let tolerances = json!({ "monotonicity": opts.tol, "strict_margin": opts.margin });
    let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    finish(common, Report::new("verify-dissipative", loaded.info, common.seed, tolerances, verdict, report), pass)
}

pub fn lyapunov(common: &Common, flow: &Flow, kind: Option<&str>) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let game = &loaded.game;
    let dynamics = parse_dynamics(&flow.dynamics)?;
    let lyap = resolve_lyapunov(game, common, dynamics, kind.unwrap_or("paired"))?;
    let x0 = initial_profile(game, &flow.init, common.seed)?;
    let opts = integrate_options(flow)?.with_lyapunov(lyap.clone());
    let traj = integrate(dynamics, game, &x0, &opts)?;
    let report = monotonicity_report(&lyap, game, &traj)?;
    let pass = report.passed;
    let result = json!({
        "dynamics": dynamics,
        "dt": flow.dt,
        "t_end": flow.t_end,
        "init": flow.init,
        "lyapunov": lyap,
        "termination": traj.termination,
        "monotonicity": report,
    });
    let tolerances = json!({ "adverse_step": LYAP_TOL, "scaled_by": "1 + |H(x0)|" });
    let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    finish(common, Report::new("lyapunov", loaded.info, common.seed, tolerances, verdict, result), pass)
}

pub fn paths(common: &Common) -> CliResult<bool> {
    let loaded = load(&common.spec)?;
    let model = loaded
        .congestion
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("spec `{}` has no network evaluation", common.spec)))?;
    let nodes = model.network().nodes();
    let participants: Vec<_> = model
        .demands()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            json!({
                "id": d.id,
                "category": d.category,
                "weight": d.weight,
                "origin": nodes[d.origin],
                "destination": nodes[d.destination],
                "paths": model.paths(i).iter().map(|p| model.path_label(p)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let result = json!({ "participants": participants });
    finish(common, Report::new("paths", loaded.info, common.seed, json!({}), Verdict::Pass, result), true)
}
