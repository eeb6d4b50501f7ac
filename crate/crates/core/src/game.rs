//! Games: participants plus an evaluation function, with an optional potential.
//!
//! A game is built from a [`PayoffModel`] giving the raw payoff vectors
//! `F^i(x)`. The evaluation `Phi^i` then depends on the participant's
//! category:
//!
//! * population: `Phi^i = F^i`;
//! * atomic splittable: `Phi^i = grad_{x^i} H^i` with `H^i = <x^i, F^i>`;
//! * atomic non-splittable: `Phi^i = F^i`, the vector payoff against the
//!   other participants' mixed strategies.
//!
//! Models may supply `Phi` (and its Jacobian) in closed form; otherwise the
//! splittable gradients and the Jacobian fall back to finite differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numdiff;
use crate::profile::{Category, Participant, StrategyProfile};

/// Per-participant vectors, in participant order.
pub type Blocks = Vec<Vec<f64>>;

/// Source of the raw payoff vectors `F^i(x)`.
///
/// `payoffs` must be defined on a neighborhood of the product of simplices:
/// finite-difference routines evaluate it at points whose blocks do not sum
/// to one.
pub trait PayoffModel: Send + Sync {
    fn payoffs(&self, x: &[Vec<f64>]) -> Blocks;

    /// Closed-form evaluation function, when the model knows it.
    fn evaluation(&self, _x: &[Vec<f64>], _categories: &[Category]) -> Option<Blocks> {
        None
    }

    /// Closed-form Jacobian of the evaluation function (flattened rows and columns).
    fn evaluation_jacobian(
        &self,
        _x: &[Vec<f64>],
        _categories: &[Category],
    ) -> Option<DMatrix<f64>> {
        None
    }

    fn kind(&self) -> &'static str {
        "custom"
    }
}

/// Payoffs given by a closure.
pub struct ClosurePayoff<F>(pub F);

impl<F> PayoffModel for ClosurePayoff<F>
where
    F: Fn(&[Vec<f64>]) -> Blocks + Send + Sync,
{
    fn payoffs(&self, x: &[Vec<f64>]) -> Blocks {
        (self.0)(x)
    }
}

fn split_flat(flat: &[f64], sizes: &[usize]) -> Blocks {
    let mut out = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &n in sizes {
        out.push(flat[offset..offset + n].to_vec());
        offset += n;
    }
    out
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|n| {
            let o = acc;
            acc += n;
            o
        })
        .collect()
}

/// Affine payoffs `F(x) = A x + b` on the flattened profile.
#[derive(Clone, Debug)]
pub struct LinearPayoff {
    matrix: DMatrix<f64>,
    offset: Vec<f64>,
    sizes: Vec<usize>,
}

impl LinearPayoff {
    pub fn new(matrix: DMatrix<f64>, offset: Vec<f64>, sizes: Vec<usize>) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        if matrix.nrows() != n || matrix.ncols() != n || offset.len() != n {
            return Err(Error::InvalidGame(format!(
                "linear payoff needs a {n}x{n} matrix and {n} offsets, got {}x{} and {}",
                matrix.nrows(),
                matrix.ncols(),
                offset.len()
            )));
        }
        if matrix.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("linear payoff has non-finite entries".into()));
        }
        Ok(LinearPayoff {
            matrix,
            offset,
            sizes,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl PayoffModel for LinearPayoff {
    fn payoffs(&self, x: &[Vec<f64>]) -> Blocks {
        let flat: Vec<f64> = x.iter().flatten().copied().collect();
        let v = &self.matrix * nalgebra::DVector::from_vec(flat);
        let values: Vec<f64> = v.iter().zip(&self.offset).map(|(a, b)| a + b).collect();
        split_flat(&values, &self.sizes)
    }

    fn evaluation(&self, x: &[Vec<f64>], categories: &[Category]) -> Option<Blocks> {
        let mut phi = self.payoffs(x);
        let offs = offsets(&self.sizes);
        for (i, cat) in categories.iter().enumerate() {
            if *cat != Category::AtomicSplittable {
                continue;
            }
            let o = offs[i];
            for (p, slot) in phi[i].iter_mut().enumerate() {
                let own: f64 = (0..self.sizes[i])
                    .map(|q| x[i][q] * self.matrix[(o + q, o + p)])
                    .sum();
                *slot += own;
            }
        }
        Some(phi)
    }

    fn evaluation_jacobian(&self, _x: &[Vec<f64>], categories: &[Category]) -> Option<DMatrix<f64>> {
        let mut jac = self.matrix.clone();
        let offs = offsets(&self.sizes);
        for (i, cat) in categories.iter().enumerate() {
            if *cat != Category::AtomicSplittable {
                continue;
            }
            let o = offs[i];
            for p in 0..self.sizes[i] {
                for r in 0..self.sizes[i] {
                    jac[(o + p, o + r)] += self.matrix[(o + r, o + p)];
                }
            }
        }
        Some(jac)
    }

    fn kind(&self) -> &'static str {
        "linear"
    }
}

/// Dense payoff table `G^i(s)` over pure profiles, extended multilinearly.
///
/// Pure profiles are indexed row-major in participant order (the last
/// participant's choice varies fastest).
#[derive(Clone, Debug)]
pub struct PayoffTable {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    /// `values[i][index(s)]` is participant `i`'s payoff at pure profile `s`.
    values: Vec<Vec<f64>>,
}

impl PayoffTable {
    pub fn new(sizes: Vec<usize>, values: Vec<Vec<f64>>) -> Result<Self> {
        let total = sizes
            .iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(*n))
            .ok_or_else(|| Error::InvalidGame("payoff table too large".into()))?;
        if values.len() != sizes.len() {
            return Err(Error::InvalidGame(format!(
                "payoff table has {} participant rows, expected {}",
                values.len(),
                sizes.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != total {
                return Err(Error::InvalidGame(format!(
                    "payoff row {i} has {} entries, expected {total}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("payoff row {i} is not finite")));
            }
        }
        let mut strides = vec![1; sizes.len()];
        for k in (0..sizes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * sizes[k + 1];
        }
        Ok(PayoffTable {
            sizes,
            strides,
            values,
        })
    }

    pub fn profile_count(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn pure_payoff(&self, i: usize, s: &[usize]) -> f64 {
        let idx: usize = s.iter().zip(&self.strides).map(|(a, b)| a * b).sum();
        self.values[i][idx]
    }

    /// Calls `visit(s, weight)` for every pure profile, where `weight` is
    /// the product of the shares of all participants except those in `skip`.
    fn for_each_profile(&self, x: &[Vec<f64>], skip: &[usize], mut visit: impl FnMut(&[usize], f64)) {
        let n = self.sizes.len();
        let mut s = vec![0usize; n];
        for _ in 0..self.profile_count() {
            let mut w = 1.0;
            for k in 0..n {
                if !skip.contains(&k) {
                    w *= x[k][s[k]];
                }
            }
            visit(&s, w);
            for k in (0..n).rev() {
                s[k] += 1;
                if s[k] < self.sizes[k] {
                    break;
                }
                s[k] = 0;
            }
        }
    }
}

impl PayoffModel for PayoffTable {
    fn payoffs(&self, x: &[Vec<f64>]) -> Blocks {
        let mut out: Blocks = self.sizes.iter().map(|&n| vec![0.0; n]).collect();
        for i in 0..self.sizes.len() {
            let row = &self.values[i];
            let strides = &self.strides;
            self.for_each_profile(x, &[i], |s, w| {
                if w != 0.0 {
                    let idx: usize = s.iter().zip(strides).map(|(a, b)| a * b).sum();
                    out[i][s[i]] += w * row[idx];
                }
            });
        }
        out
    }

    fn evaluation(&self, x: &[Vec<f64>], _categories: &[Category]) -> Option<Blocks> {
        // VG^i does not depend on x^i, so grad H^i = F^i for every category.
        Some(self.payoffs(x))
    }

    fn evaluation_jacobian(&self, x: &[Vec<f64>], _categories: &[Category]) -> Option<DMatrix<f64>> {
        let offs = offsets(&self.sizes);
        let n: usize = self.sizes.iter().sum();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..self.sizes.len() {
            for j in 0..self.sizes.len() {
                if i == j {
                    continue;
                }
                let row = &self.values[i];
                let strides = &self.strides;
                self.for_each_profile(x, &[i, j], |s, w| {
                    let idx: usize = s.iter().zip(strides).map(|(a, b)| a * b).sum();
                    jac[(offs[i] + s[i], offs[j] + s[j])] += w * row[idx];
                });
            }
        }
        Some(jac)
    }

    fn kind(&self) -> &'static str {
        "table"
    }
}

type ScalarFn = dyn Fn(&[Vec<f64>]) -> f64 + Send + Sync;
type ScalesFn = dyn Fn(&[Vec<f64>]) -> Vec<f64> + Send + Sync;

/// A potential `W` together with the positive scales `mu^i(x)`.
#[derive(Clone)]
pub struct Potential {
    value: Arc<ScalarFn>,
    scales: Arc<ScalesFn>,
}

impl Potential {
    pub fn new<W, M>(value: W, scales: M) -> Self
    where
        W: Fn(&[Vec<f64>]) -> f64 + Send + Sync + 'static,
        M: Fn(&[Vec<f64>]) -> Vec<f64> + Send + Sync + 'static,
    {
        Potential {
            value: Arc::new(value),
            scales: Arc::new(scales),
        }
    }

    /// Potential with constant scales.
    pub fn with_constant_scales<W>(value: W, scales: Vec<f64>) -> Self
    where
        W: Fn(&[Vec<f64>]) -> f64 + Send + Sync + 'static,
    {
        Potential::new(value, move |_| scales.clone())
    }

    pub fn value(&self, x: &[Vec<f64>]) -> f64 {
        (self.value)(x)
    }

    pub fn scales(&self, x: &[Vec<f64>]) -> Vec<f64> {
        (self.scales)(x)
    }

    pub fn gradient(&self, x: &[Vec<f64>]) -> Blocks {
        numdiff::gradient(|y| self.value(y), x)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").finish_non_exhaustive()
    }
}

/// Which of the classical frameworks a game belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    Population,
    Splittable,
    NonSplittable,
    Composite,
}

/// The evaluation function of a game, assembled from a payoff model and the
/// participants' categories.
#[derive(Clone)]
pub struct EvaluationFunction {
    model: Arc<dyn PayoffModel>,
}

impl EvaluationFunction {
    pub fn new(model: impl PayoffModel + 'static) -> Self {
        EvaluationFunction {
            model: Arc::new(model),
        }
    }

    pub fn from_arc(model: Arc<dyn PayoffModel>) -> Self {
        EvaluationFunction { model }
    }

    pub fn model(&self) -> &dyn PayoffModel {
        self.model.as_ref()
    }
}

impl fmt::Debug for EvaluationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvaluationFunction")
            .field("kind", &self.model.kind())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct GameSpec {
    pub name: String,
    pub description: String,
    participants: Vec<Participant>,
    categories: Vec<Category>,
    sizes: Vec<usize>,
    evaluation: EvaluationFunction,
    potential: Option<Potential>,
    /// Whether every splittable participant's gain is known to be concave in
    /// its own strategy. Without it, VI solutions are only first-order points.
    pub splittable_concave: bool,
}

impl GameSpec {
    pub fn new(participants: Vec<Participant>, evaluation: EvaluationFunction) -> Result<Self> {
        if participants.is_empty() {
            return Err(Error::InvalidGame("no participants".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for p in &participants {
            p.validate()?;
            if !ids.insert(p.id.as_str()) {
                return Err(Error::InvalidGame(format!("duplicate participant id `{}`", p.id)));
            }
        }
        let categories = participants.iter().map(|p| p.category).collect();
        let sizes = participants.iter().map(Participant::len).collect();
        let game = GameSpec {
            name: String::new(),
            description: String::new(),
            participants,
            categories,
            sizes,
            evaluation,
            potential: None,
            splittable_concave: false,
        };
        // Shape check at the barycenter.
        game.evaluate(&game.uniform())?;
        Ok(game)
    }

    pub fn with_name(mut self, name: impl Into<String>, description: impl Into<String>) -> Self {
        self.name = name.into();
        self.description = description.into();
        self
    }

    pub fn with_potential(mut self, potential: Potential) -> Result<Self> {
        let x = self.uniform();
        let mu = potential.scales(x.blocks());
        if mu.len() != self.participants.len() {
            return Err(Error::InvalidGame(format!(
                "potential supplies {} scales for {} participants",
                mu.len(),
                self.participants.len()
            )));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Shape {
                participant: self.participants[i].id.clone(),
                reason: format!("potential scale must be positive, got {}", mu[i]),
            });
        }
        self.potential = Some(potential);
        Ok(self)
    }

    pub fn with_splittable_concave(mut self, concave: bool) -> Self {
        self.splittable_concave = concave;
        self
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dimension(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn evaluation(&self) -> &EvaluationFunction {
        &self.evaluation
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    pub fn framework(&self) -> Framework {
        let first = self.categories[0];
        if self.categories.iter().any(|c| *c != first) {
            return Framework::Composite;
        }
        match first {
            Category::Population => Framework::Population,
            Category::AtomicSplittable => Framework::Splittable,
            Category::AtomicNonSplittable => Framework::NonSplittable,
        }
    }

    pub fn has_splittable(&self) -> bool {
        self.categories.contains(&Category::AtomicSplittable)
    }

    pub fn uniform(&self) -> StrategyProfile {
        StrategyProfile::uniform(&self.sizes)
    }

    /// Validates raw blocks against this game's shape.
    pub fn profile(&self, blocks: Vec<Vec<f64>>) -> Result<StrategyProfile> {
        StrategyProfile::for_participants(&self.participants, blocks)
    }

    /// Number of pure profiles, saturating.
    pub fn pure_profile_count(&self) -> u128 {
        self.sizes
            .iter()
            .fold(1u128, |acc, n| acc.saturating_mul(*n as u128))
    }

    pub fn check_shape(&self, x: &StrategyProfile) -> Result<()> {
        if x.len() != self.participants.len() {
            return Err(Error::InvalidGame(format!(
                "profile has {} blocks, game has {} participants",
                x.len(),
                self.participants.len()
            )));
        }
        for (p, b) in self.participants.iter().zip(x.blocks()) {
            if b.len() != p.len() {
                return Err(Error::Shape {
                    participant: p.id.clone(),
                    reason: format!("expected {} shares, got {}", p.len(), b.len()),
                });
            }
        }
        Ok(())
    }

    /// Raw payoff vectors `F^i(x)`.
    pub fn payoffs(&self, x: &StrategyProfile) -> Result<Blocks> {
        self.check_shape(x)?;
        let f = self.evaluation.model.payoffs(x.blocks());
        self.check_output(&f)?;
        Ok(f)
    }

    /// The evaluation function `Phi(x)`.
    pub fn evaluate(&self, x: &StrategyProfile) -> Result<Blocks> {
        self.check_shape(x)?;
        let phi = self.evaluate_raw(x.blocks());
        self.check_output(&phi)?;
        Ok(phi)
    }

    /// Evaluation at a point that need not lie on the product of simplices.
    pub(crate) fn evaluate_raw(&self, x: &[Vec<f64>]) -> Blocks {
        let model = self.evaluation.model.as_ref();
        if let Some(phi) = model.evaluation(x, &self.categories) {
            return phi;
        }
        let mut phi = model.payoffs(x);
        for (i, cat) in self.categories.iter().enumerate() {
            if *cat == Category::AtomicSplittable {
                phi[i] = gain_gradient_fd(model, x, i);
            }
        }
        phi
    }

    fn check_output(&self, phi: &Blocks) -> Result<()> {
        if phi.len() != self.participants.len() {
            return Err(Error::InvalidGame(format!(
                "evaluation returned {} blocks for {} participants",
                phi.len(),
                self.participants.len()
            )));
        }
        for (p, b) in self.participants.iter().zip(phi) {
            if b.len() != p.len() {
                return Err(Error::Shape {
                    participant: p.id.clone(),
                    reason: format!("evaluation returned {} values for {} choices", b.len(), p.len()),
                });
            }
            if let Some(k) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEvaluation {
                    participant: p.id.clone(),
                    choice: p.choices[k].clone(),
                });
            }
        }
        Ok(())
    }

    /// Jacobian of `Phi` at `x`: closed form when the model provides one,
    /// finite differences otherwise.
    pub fn jacobian(&self, x: &StrategyProfile) -> Result<DMatrix<f64>> {
        self.check_shape(x)?;
        let model = self.evaluation.model.as_ref();
        if let Some(j) = model.evaluation_jacobian(x.blocks(), &self.categories) {
            return Ok(j);
        }
        Ok(self.jacobian_fd(x))
    }

    /// Finite-difference Jacobian, ignoring any closed form.
    pub fn jacobian_fd(&self, x: &StrategyProfile) -> DMatrix<f64> {
        numdiff::jacobian(
            |y| self.evaluate_raw(y).into_iter().flatten().collect(),
            x.blocks(),
        )
    }

    /// `grad_{x^i} H^i` by central differences of `H^i = <x^i, F^i>`.
    pub fn gain_gradient_fd(&self, x: &StrategyProfile, i: usize) -> Vec<f64> {
        gain_gradient_fd(self.evaluation.model.as_ref(), x.blocks(), i)
    }
}

fn gain_gradient_fd(model: &dyn PayoffModel, x: &[Vec<f64>], i: usize) -> Vec<f64> {
    numdiff::block_gradient(
        |y| {
            let f = model.payoffs(y);
            y[i].iter().zip(&f[i]).map(|(a, b)| a * b).sum()
        },
        x,
        i,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("c{k}")).collect()
    }

    fn identity_table_game() -> GameSpec {
        let ps = vec![
            Participant::new("row", Category::AtomicNonSplittable, labels(2), 1.0).unwrap(),
            Participant::new("col", Category::AtomicNonSplittable, labels(2), 1.0).unwrap(),
        ];
        let g = vec![1.0, 0.0, 0.0, 1.0];
        let table = PayoffTable::new(vec![2, 2], vec![g.clone(), g]).unwrap();
        GameSpec::new(ps, EvaluationFunction::new(table)).unwrap()
    }

    #[test]
    fn table_multilinear_extension_at_uniform() {
        let game = identity_table_game();
        let phi = game.evaluate(&game.uniform()).unwrap();
        assert_eq!(phi, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn table_jacobian_matches_finite_differences() {
        let game = identity_table_game();
        let x = game.profile(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let analytic = game.jacobian(&x).unwrap();
        let fd = game.jacobian_fd(&x);
        assert!((analytic - fd).amax() < 1e-8);
    }

    #[test]
    fn constant_evaluation_has_zero_jacobian() {
        let ps = vec![Participant::new("a", Category::Population, labels(3), 1.0).unwrap()];
        let game = GameSpec::new(
            ps,
            EvaluationFunction::new(ClosurePayoff(|_: &[Vec<f64>]| vec![vec![1.0, 2.0, 3.0]])),
        )
        .unwrap();
        let j = game.jacobian(&game.uniform()).unwrap();
        assert!(j.amax() == 0.0);
    }

    #[test]
    fn linear_jacobian_recovers_matrix() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, 0.5, 0.2, 0.0, //
                0.0, -2.0, 0.1, 0.3, //
                0.4, 0.0, -1.5, 0.2, //
                0.0, 0.7, 0.0, -1.0,
            ],
        );
        let ps = vec![
            Participant::new("a", Category::Population, labels(2), 1.0).unwrap(),
            Participant::new("b", Category::Population, labels(2), 1.0).unwrap(),
        ];
        let closure_a = a.clone();
        let game = GameSpec::new(
            ps,
            EvaluationFunction::new(ClosurePayoff(move |x: &[Vec<f64>]| {
                let flat: Vec<f64> = x.iter().flatten().copied().collect();
                let v = &closure_a * nalgebra::DVector::from_vec(flat);
                vec![vec![v[0], v[1]], vec![v[2], v[3]]]
            })),
        )
        .unwrap();
        let x = game.profile(vec![vec![0.2, 0.8], vec![1.0, 0.0]]).unwrap();
        let j = game.jacobian(&x).unwrap();
        assert!((j - &a).amax() < 1e-6);
    }

    #[test]
    fn linear_splittable_gradient_matches_fd() {
        let sizes = vec![3];
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.2, 0.0, 0.3, -2.0, 0.1, 0.0, 0.5, -1.0]);
        let model = LinearPayoff::new(a, vec![0.1, 0.0, -0.2], sizes).unwrap();
        let ps = vec![Participant::new("s", Category::AtomicSplittable, labels(3), 1.0).unwrap()];
        let game = GameSpec::new(ps, EvaluationFunction::new(model)).unwrap();
        let x = game.profile(vec![vec![0.2, 0.5, 0.3]]).unwrap();
        let phi = game.evaluate(&x).unwrap();
        let fd = game.gain_gradient_fd(&x, 0);
        for (a, b) in phi[0].iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        let j = game.jacobian(&x).unwrap();
        assert!((j - game.jacobian_fd(&x)).amax() < 1e-5);
    }

    #[test]
    fn non_finite_payoff_names_participant_and_choice() {
        let ps = vec![Participant::new("bad", Category::Population, labels(2), 1.0).unwrap()];
        let err = GameSpec::new(
            ps,
            EvaluationFunction::new(ClosurePayoff(|_: &[Vec<f64>]| vec![vec![0.0, f64::NAN]])),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad") && msg.contains("c1"), "{msg}");
    }

    #[test]
    fn wrong_output_shape_is_rejected() {
        let ps = vec![Participant::new("short", Category::Population, labels(3), 1.0).unwrap()];
        let err = GameSpec::new(
            ps,
            EvaluationFunction::new(ClosurePayoff(|_: &[Vec<f64>]| vec![vec![0.0, 1.0]])),
        )
        .unwrap_err();
        assert!(err.to_string().contains("short"));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let game = identity_table_game();
        let x = game.profile(vec![vec![0.31, 0.69], vec![0.17, 0.83]]).unwrap();
        let a = game.evaluate(&x).unwrap();
        let b = game.evaluate(&x).unwrap();
        for (u, v) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
