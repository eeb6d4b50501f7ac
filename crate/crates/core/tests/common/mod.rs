#![allow(dead_code)]

use cgame_core::congestion::{build_composite_congestion_game, CostFunction, Network, RoutingDemand};
use cgame_core::game::{EvaluationFunction, LinearPayoff, PayoffTable};
use cgame_core::sampling::stream_rng;
use cgame_core::{Category, GameSpec, Participant, StrategyProfile};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("c{k}")).collect()
}

pub fn participants(sizes: &[usize], category: Category) -> Vec<Participant> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, n)| Participant::new(format!("p{i}"), category, labels(*n), 1.0).unwrap())
        .collect()
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = vec![0; sizes.len()];
    for k in 1..sizes.len() {
        o[k] = o[k - 1] + sizes[k - 1];
    }
    o
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// `F(x) = A (x - anchor)` with `A = -(M'M + eps I) + (K - K')`: strictly
/// dissipative when `eps > 0`, with `anchor` an interior equilibrium.
pub struct DissipativeGame {
    pub game: GameSpec,
    pub anchor: StrategyProfile,
    pub matrix: DMatrix<f64>,
}

pub fn dissipative_game(sizes: &[usize], eps: f64, seed: u64, category: Category) -> DissipativeGame {
    let mut rng = stream_rng(seed, 0);
    let n: usize = sizes.iter().sum();
    let m = random_matrix(n, &mut rng);
    let k = random_matrix(n, &mut rng);
    let a = -(m.transpose() * &m) * 0.5 - DMatrix::identity(n, n) * eps + (&k - k.transpose()) * 0.5;
    // Interior anchor, away from the boundary.
    let anchor_blocks: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&s| {
            let raw: Vec<f64> = (0..s).map(|_| rng.random_range(0.5..1.5)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    let anchor = StrategyProfile::new(anchor_blocks).unwrap();
    let xs = DVector::from_vec(anchor.flatten());
    let offset = -(&a * xs);
    let game = GameSpec::new(
        participants(sizes, category),
        EvaluationFunction::new(LinearPayoff::new(a.clone(), offset.iter().copied().collect(), sizes.to_vec()).unwrap()),
    )
    .unwrap();
    DissipativeGame {
        game,
        anchor,
        matrix: a,
    }
}

/// Random linear game `F(x) = A x + b` with mixed categories.
pub fn random_linear_game(seed: u64) -> GameSpec {
    let mut rng = stream_rng(seed, 1);
    let count = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..count).map(|_| rng.random_range(2..=4)).collect();
    let n: usize = sizes.iter().sum();
    let a = random_matrix(n, &mut rng) * 2.0;
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cats = [Category::Population, Category::AtomicSplittable, Category::AtomicNonSplittable];
    let ps = sizes
        .iter()
        .enumerate()
        .map(|(i, s)| Participant::new(format!("p{i}"), cats[rng.random_range(0..3)], labels(*s), 1.0).unwrap())
        .collect();
    GameSpec::new(ps, EvaluationFunction::new(LinearPayoff::new(a, b, sizes).unwrap())).unwrap()
}

/// Random payoff table game with non-splittable participants.
pub fn random_table_game(seed: u64) -> GameSpec {
    let mut rng = stream_rng(seed, 2);
    let count = rng.random_range(2..=3);
    let sizes: Vec<usize> = (0..count).map(|_| rng.random_range(2..=3)).collect();
    let total: usize = sizes.iter().product();
    let values = (0..count)
        .map(|_| (0..total).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    GameSpec::new(
        participants(&sizes, Category::AtomicNonSplittable),
        EvaluationFunction::new(PayoffTable::new(sizes, values).unwrap()),
    )
    .unwrap()
}

/// Random parallel-link affine instance with `counts[k]` participants of category `k`.
pub fn random_parallel_affine(seed: u64, arcs: usize, counts: [usize; 3]) -> GameSpec {
    let mut rng = stream_rng(seed, 3);
    let costs = (0..arcs)
        .map(|_| CostFunction::affine(rng.random_range(0.2..2.0), rng.random_range(0.0..1.0)))
        .collect();
    let net = Network::parallel(costs).unwrap();
    let cats = [Category::Population, Category::AtomicSplittable, Category::AtomicNonSplittable];
    let mut demands = Vec::new();
    for (c, &k) in cats.iter().zip(&counts) {
        for j in 0..k {
            demands.push(RoutingDemand::new(
                format!("{}{j}", c.label()),
                0,
                1,
                rng.random_range(0.1..0.6),
                *c,
            ));
        }
    }
    build_composite_congestion_game(net, demands).unwrap()
}

/// Random composite congestion game on a small grid-like network.
pub fn random_network_game(seed: u64) -> GameSpec {
    let mut rng = stream_rng(seed, 4);
    let cost = |rng: &mut ChaCha8Rng| match rng.random_range(0..3) {
        0 => CostFunction::affine(rng.random_range(0.1..2.0), rng.random_range(0.0..1.0)),
        1 => CostFunction::Polynomial {
            coefficients: vec![rng.random_range(0.1..1.0), 0.0, rng.random_range(0.1..1.0)],
        },
        _ => CostFunction::Tabulated {
            points: vec![(0.0, 0.2), (0.5, 0.5), (1.0, 1.2), (2.0, 3.0)],
        },
    };
    let links = vec![
        cgame_core::congestion::Link::new("oa", 0, 1, cost(&mut rng)),
        cgame_core::congestion::Link::new("od", 0, 2, cost(&mut rng)),
        cgame_core::congestion::Link::new("ad", 1, 2, cost(&mut rng)),
        cgame_core::congestion::Link::new("oa2", 0, 1, cost(&mut rng)),
    ];
    let net = Network::new(vec!["o".into(), "a".into(), "d".into()], links).unwrap();
    let cats = [Category::Population, Category::AtomicSplittable, Category::AtomicNonSplittable];
    let demands = cats
        .iter()
        .enumerate()
        .map(|(k, c)| RoutingDemand::new(format!("d{k}"), 0, 2, rng.random_range(0.1..0.5), *c))
        .collect();
    build_composite_congestion_game(net, demands).unwrap()
}

/// A profile sampler mixing Dirichlet interior points, faces and vertices.
pub fn sample_profile(sizes: &[usize], rng: &mut ChaCha8Rng) -> StrategyProfile {
    let mut x = StrategyProfile::dirichlet(sizes, rng).into_blocks();
    match rng.random_range(0..4) {
        0 => {
            // Zero out one component per block and renormalize.
            for b in &mut x {
                if b.len() > 1 {
                    let k = rng.random_range(0..b.len());
                    b[k] = 0.0;
                    let t: f64 = b.iter().sum();
                    b.iter_mut().for_each(|v| *v /= t);
                }
            }
        }
        1 => {
            let i = rng.random_range(0..x.len());
            let k = rng.random_range(0..x[i].len());
            x[i] = (0..x[i].len()).map(|j| if j == k { 1.0 } else { 0.0 }).collect();
        }
        _ => {}
    }
    StrategyProfile::new(x).unwrap()
}

/// The game zoo used by property suites: every framework plus composites.
pub fn zoo(seed: u64) -> GameSpec {
    match seed % 6 {
        0 => random_linear_game(seed),
        1 => random_table_game(seed),
        2 => random_network_game(seed),
        3 => random_parallel_affine(seed, 2 + (seed as usize / 6) % 3, [1, 1, 1]),
        4 => dissipative_game(&[2, 3], 0.1, seed, Category::Population).game,
        _ => cgame_core::builtin::load(
            ["two-arc-population", "two-arc-splittable", "two-arc-nonsplittable", "three-category", "parallel-affine"]
                [(seed as usize / 6) % 5],
        )
        .unwrap(),
    }
}

/// Independent RK4 for reference trajectories (no projection).
pub fn reference_rk4<F>(x0: &[f64], dt: f64, steps: usize, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let add = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, dt / 2.0));
        let k3 = f(&add(&x, &k2, dt / 2.0));
        let k4 = f(&add(&x, &k3, dt));
        x = (0..x.len())
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
    }
    x
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 99)
}

pub fn report(name: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

pub fn offsets_of(sizes: &[usize]) -> Vec<usize> {
    offsets(sizes)
}
