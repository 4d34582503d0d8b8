//! Markov transition matrix over memorized states, stationary distributions, the
//! expected future payoff and payoff gradients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::game::{normalize, GameSpec, Player, StateIndex, Strategy};

/// Strategies with an entry below this floor are clamped and renormalized before the
/// transition matrix is built; the chain is only ergodic for interior strategies.
pub const INTERIOR_FLOOR: f64 = 1e-12;

/// Column-stochastic transition matrix `M_{i'i}`, stored column by column. Column `i`
/// holds the `m^2` successors of state `i` and their probabilities `x^{a|s_i} y^{b|s_i}`.
///
/// The successors within one column are always distinct because the joint action
/// becomes the most significant digit of the successor index.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    dim: usize,
    fanout: usize,
    succ: Vec<usize>,
    prob: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(game: &GameSpec, x: &Strategy, y: &Strategy) -> Result<Self> {
        x.check_game(game)?;
        y.check_game(game)?;
        let m = game.m();
        let dim = game.num_states();
        let fanout = m * m;
        let mut succ = Vec::with_capacity(dim * fanout);
        let mut prob = Vec::with_capacity(dim * fanout);
        for i in 0..dim {
            for a in 0..m {
                let xa = x.get(i, a);
                for b in 0..m {
                    succ.push(game.successor(i, a, b));
                    prob.push(xa * y.get(i, b));
                }
            }
        }
        Ok(Self {
            dim,
            fanout,
            succ,
            prob,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(successor, probability)` entries of column `i`.
    pub fn column(&self, i: StateIndex) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = i * self.fanout..(i + 1) * self.fanout;
        self.succ[range.clone()]
            .iter()
            .copied()
            .zip(self.prob[range].iter().copied())
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.prob.chunks(self.fanout).map(|c| c.iter().sum()).collect()
    }

    /// `out = M p`.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            let base = i * self.fanout;
            for k in base..base + self.fanout {
                out[self.succ[k]] += self.prob[k] * pi;
            }
        }
    }

    /// `out = M^T w`.
    pub fn apply_transpose(&self, w: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let base = i * self.fanout;
            *o = (base..base + self.fanout)
                .map(|k| self.prob[k] * w[self.succ[k]])
                .sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, w) in self.column(i) {
                dense[(j, i)] += w;
            }
        }
        dense
    }
}

/// Stationary distribution with its convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub p: Vec<f64>,
    /// `||p - M p||_1` of the returned vector.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Stop when the L1 distance between successive iterates is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 10_000_000,
        }
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn residual(matrix: &TransitionMatrix, p: &[f64]) -> f64 {
    let mut mp = vec![0.0; p.len()];
    matrix.apply(p, &mut mp);
    l1_distance(p, &mp)
}

/// Power iteration `p <- M p` from the uniform vector.
pub fn stationary_power(
    matrix: &TransitionMatrix,
    opts: PowerIteration,
) -> Result<StationaryDistribution> {
    let dim = matrix.dim();
    let mut p = vec![1.0 / dim as f64; dim];
    let mut next = vec![0.0; dim];
    let mut diff = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        matrix.apply(&p, &mut next);
        diff = l1_distance(&p, &next);
        std::mem::swap(&mut p, &mut next);
        if diff <= opts.tol {
            let sum: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= sum);
            let residual = residual(matrix, &p);
            return Ok(StationaryDistribution {
                p,
                residual,
                iterations: iteration,
            });
        }
        if !diff.is_finite() {
            break;
        }
    }
    Err(Error::NotConverged {
        what: "power iteration",
        iterations: opts.max_iter,
        residual: diff,
    })
}

/// Solves `(M - I) p = 0` with `sum(p) = 1` by dense LU factorization.
pub fn stationary_direct(matrix: &TransitionMatrix) -> Result<StationaryDistribution> {
    let dim = matrix.dim();
    let mut a = matrix.to_dense();
    for i in 0..dim {
        a[(i, i)] -= 1.0;
    }
    for j in 0..dim {
        a[(dim - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(dim);
    rhs[dim - 1] = 1.0;
    let solution = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("stationary linear system"))?;
    let mut p: Vec<f64> = solution.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = p.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::NonFinite("stationary linear system"));
    }
    p.iter_mut().for_each(|v| *v /= sum);
    let residual = residual(matrix, &p);
    Ok(StationaryDistribution {
        p,
        residual,
        iterations: 1,
    })
}

/// Unnormalized analytic stationary weights of the one-memory two-action chain, with
/// `x_i = x^{a1|s_i}` and `y_i = y^{b1|s_i}`.
pub fn closed_form_weights_2x1<T: Scalar>(x: [T; 4], y: [T; 4]) -> [T; 4] {
    let one = T::from(1.0);
    let [x1, x2, x3, x4] = x;
    let [y1, y2, y3, y4] = y;
    let (xt1, xt2) = (one - x1, one - x2);
    let (yt1, yt3) = (one - y1, one - y3);
    [
        (x4 + (x3 - x4) * y3) * (y4 + (y2 - y4) * x2) - x3 * y2 * (x2 - x4) * (y3 - y4),
        (x4 + (x3 - x4) * y4) * (yt3 - (y1 - y3) * x1) - x4 * yt1 * (x1 - x3) * (y3 - y4),
        (xt2 - (x1 - x2) * y1) * (y4 + (y2 - y4) * x4) - xt1 * y4 * (x2 - x4) * (y1 - y2),
        (xt2 - (x1 - x2) * y2) * (yt3 - (y1 - y3) * x3) - xt2 * yt3 * (x1 - x3) * (y1 - y2),
    ]
}

/// Analytic stationary distribution of the one-memory two-action chain.
pub fn stationary_closed_form_2x1(x: [f64; 4], y: [f64; 4]) -> Result<StationaryDistribution> {
    let w = closed_form_weights_2x1(x, y);
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total.abs() < 1e-300 {
        return Err(Error::VanishingNormalizer);
    }
    let k = 1.0 / total;
    let p: Vec<f64> = w.iter().map(|v| v * k).collect();
    let game = GameSpec::matching_pennies(1)?;
    let matrix = TransitionMatrix::new(
        &game,
        &Strategy::from_first_action(&x)?,
        &Strategy::from_first_action(&y)?,
    )?;
    let residual = residual(&matrix, &p);
    Ok(StationaryDistribution {
        p,
        residual,
        iterations: 0,
    })
}

pub fn stationary_payoff(p: &StationaryDistribution, u: &[f64]) -> f64 {
    dot(&p.p, u)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stopping rule for the expected-future-payoff series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

/// `pi(p0) = sum_t M^t (p0 - p_st) . u`, accumulated until `||M^t (p0 - p_st)||_1 <= tol`.
pub fn expected_future_payoff(
    matrix: &TransitionMatrix,
    stationary: &[f64],
    u: &[f64],
    p0: &[f64],
    opts: SeriesOptions,
) -> Result<f64> {
    let mut dev: Vec<f64> = p0.iter().zip(stationary).map(|(a, b)| a - b).collect();
    let mut next = vec![0.0; dev.len()];
    let mut total = 0.0;
    for _ in 0..opts.max_terms {
        total += dot(&dev, u);
        let norm: f64 = dev.iter().map(|v| v.abs()).sum();
        if norm <= opts.tol {
            return Ok(total);
        }
        matrix.apply(&dev, &mut next);
        std::mem::swap(&mut dev, &mut next);
    }
    Err(Error::NotConverged {
        what: "expected future payoff series",
        iterations: opts.max_terms,
        residual: dev.iter().map(|v| v.abs()).sum(),
    })
}

/// Expected future payoff as a linear functional: `pi(p) = (p - p_st) . weights`,
/// with `weights = sum_t (M^T)^t (u - u_st 1)`.
#[derive(Debug, Clone)]
pub struct FuturePayoff {
    weights: Vec<f64>,
    offset: f64,
}

impl FuturePayoff {
    pub fn new(
        matrix: &TransitionMatrix,
        stationary: &[f64],
        u: &[f64],
        opts: SeriesOptions,
    ) -> Result<Self> {
        let u_st = dot(stationary, u);
        let mut w: Vec<f64> = u.iter().map(|v| v - u_st).collect();
        let mut next = vec![0.0; w.len()];
        let mut weights = vec![0.0; w.len()];
        for _ in 0..opts.max_terms {
            weights.iter_mut().zip(&w).for_each(|(h, v)| *h += v);
            // |(p - q) . w| <= span(w) ||p - q||_1 / 2 for probability vectors p, q
            let (lo, hi) = w
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                });
            if hi - lo <= opts.tol {
                let offset = dot(stationary, &weights);
                return Ok(Self { weights, offset });
            }
            matrix.apply_transpose(&w, &mut next);
            std::mem::swap(&mut w, &mut next);
        }
        Err(Error::NotConverged {
            what: "future payoff weights",
            iterations: opts.max_terms,
            residual: f64::NAN,
        })
    }

    /// `pi(p)` for a probability vector `p`.
    pub fn pi(&self, p: &[f64]) -> f64 {
        dot(p, &self.weights) - self.offset
    }

    /// `pi(e_j)`.
    #[inline]
    pub fn pi_state(&self, j: StateIndex) -> f64 {
        self.weights[j] - self.offset
    }
}

/// `p^{a|s}` for player X (mass `y^{b|s}` on `succ(s, a, b)`), or the mirrored
/// `q^{b|s}` for player Y (mass `x^{a|s}` on `succ(s, a, b)`).
pub fn action_conditioned_distribution(
    game: &GameSpec,
    player: Player,
    action: usize,
    state: StateIndex,
    opponent: &Strategy,
) -> Vec<f64> {
    let mut p = vec![0.0; game.num_states()];
    for other in 0..game.m() {
        let (a, b) = joint(player, action, other);
        p[game.successor(state, a, b)] += opponent.get(state, other);
    }
    p
}

#[inline]
fn joint(player: Player, own: usize, other: usize) -> (usize, usize) {
    match player {
        Player::X => (own, other),
        Player::Y => (other, own),
    }
}

/// Per-(state, action) values for one player, state-major and action-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    m: usize,
    values: Vec<f64>,
}

impl GradientField {
    pub fn new(m: usize, values: Vec<f64>) -> Self {
        Self { m, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, state: StateIndex, action: usize) -> f64 {
        self.values[state * self.m + action]
    }

    pub fn max_abs_diff(&self, other: &GradientField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationaryMethod {
    Power(PowerIteration),
    Direct,
}

/// Everything derived from one joint profile: the clamped strategies actually used,
/// the transition matrix and its stationary distribution.
#[derive(Debug, Clone)]
pub struct MarkovState {
    pub x: Strategy,
    pub y: Strategy,
    pub matrix: TransitionMatrix,
    pub stationary: StationaryDistribution,
}

/// Numerical settings shared by every stationary and future-payoff computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub stationary: StationaryMethod,
    pub series: SeriesOptions,
    pub interior_floor: f64,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            stationary: StationaryMethod::Power(PowerIteration::default()),
            series: SeriesOptions::default(),
            interior_floor: INTERIOR_FLOOR,
        }
    }
}

impl Solver {
    pub fn direct() -> Self {
        Self {
            stationary: StationaryMethod::Direct,
            ..Self::default()
        }
    }

    pub fn stationary_of(&self, matrix: &TransitionMatrix) -> Result<StationaryDistribution> {
        match self.stationary {
            StationaryMethod::Power(opts) => stationary_power(matrix, opts),
            StationaryMethod::Direct => stationary_direct(matrix),
        }
    }

    fn interior(&self, s: &Strategy, who: Player) -> Strategy {
        let mut s = s.clone();
        if s.min_prob() < self.interior_floor {
            let touched = s.clamp_interior(self.interior_floor);
            log::debug!("clamped {who:?} strategy to interior at states {touched:?}");
        }
        s
    }

    pub fn analyze(&self, game: &GameSpec, x: &Strategy, y: &Strategy) -> Result<MarkovState> {
        let x = self.interior(x, Player::X);
        let y = self.interior(y, Player::Y);
        let matrix = TransitionMatrix::new(game, &x, &y)?;
        let stationary = self.stationary_of(&matrix)?;
        Ok(MarkovState {
            x,
            y,
            matrix,
            stationary,
        })
    }

    /// `u_st` (player X) or `v_st` (player Y).
    pub fn stationary_payoff(
        &self,
        game: &GameSpec,
        x: &Strategy,
        y: &Strategy,
        player: Player,
    ) -> Result<f64> {
        let state = self.analyze(game, x, y)?;
        Ok(stationary_payoff(
            &state.stationary,
            &game.payoff_vector(player),
        ))
    }

    pub fn future_payoff(
        &self,
        game: &GameSpec,
        state: &MarkovState,
        player: Player,
    ) -> Result<FuturePayoff> {
        FuturePayoff::new(
            &state.matrix,
            &state.stationary.p,
            &game.payoff_vector(player),
            self.series,
        )
    }

    /// `pi(p0)` for player X by direct accumulation of the deviation series.
    pub fn expected_future_payoff(
        &self,
        game: &GameSpec,
        x: &Strategy,
        y: &Strategy,
        p0: &[f64],
    ) -> Result<f64> {
        if p0.len() != game.num_states() {
            return Err(Error::DimensionMismatch {
                expected: game.num_states(),
                found: p0.len(),
            });
        }
        let state = self.analyze(game, x, y)?;
        expected_future_payoff(
            &state.matrix,
            &state.stationary.p,
            &game.payoff_vector(Player::X),
            p0,
            self.series,
        )
    }

    /// `d u_st(Norm(x), y) / d x^{a|s_i} = p_i (pi(p^{a|s_i}) - sum_a' x^{a'|s_i} pi(p^{a'|s_i}))`
    /// for `player`, differentiating with respect to its own raw strategy entries.
    pub fn payoff_gradient_exact(
        &self,
        game: &GameSpec,
        x: &Strategy,
        y: &Strategy,
        player: Player,
    ) -> Result<GradientField> {
        let state = self.analyze(game, x, y)?;
        let future = self.future_payoff(game, &state, player)?;
        Ok(gradient_from_future_payoff(game, &state, &future, player))
    }

    /// Forward difference of the stationary payoff under `Norm(own + gamma e^{a|s})`.
    pub fn payoff_gradient_fd(
        &self,
        game: &GameSpec,
        x: &Strategy,
        y: &Strategy,
        player: Player,
        gamma: f64,
    ) -> Result<GradientField> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidStrategy(format!(
                "finite-difference step {gamma} must be positive"
            )));
        }
        let u = game.payoff_vector(player);
        let base = stationary_payoff(&self.analyze(game, x, y)?.stationary, &u);
        let own = match player {
            Player::X => x,
            Player::Y => y,
        };
        let m = game.m();
        let entries: Vec<(usize, usize)> = (0..game.num_states())
            .flat_map(|s| (0..m).map(move |a| (s, a)))
            .collect();
        let eval = |&(s, a): &(usize, usize)| -> Result<f64> {
            let shifted = perturb_entry(own, s, a, gamma)?;
            let (xs, ys) = match player {
                Player::X => (&shifted, y),
                Player::Y => (x, &shifted),
            };
            let value = stationary_payoff(&self.analyze(game, xs, ys)?.stationary, &u);
            Ok((value - base) / gamma)
        };
        let values: Result<Vec<f64>> = if entries.len() >= 64 {
            entries.par_iter().map(eval).collect()
        } else {
            entries.iter().map(eval).collect()
        };
        Ok(GradientField::new(m, values?))
    }
}

/// `Norm(own + step e^{a|s})`: only row `s` changes.
pub fn perturb_entry(own: &Strategy, state: StateIndex, action: usize, step: f64) -> Result<Strategy> {
    let m = own.m();
    let mut raw = own.row(state).to_vec();
    raw[action] += step;
    let row = normalize(m, &raw)?;
    let mut probs = own.probs().to_vec();
    probs[state * m..(state + 1) * m].copy_from_slice(row.probs());
    Ok(Strategy::from_probs_unchecked(m, probs))
}

pub(crate) fn gradient_from_future_payoff(
    game: &GameSpec,
    state: &MarkovState,
    future: &FuturePayoff,
    player: Player,
) -> GradientField {
    let m = game.m();
    let (own, opponent) = match player {
        Player::X => (&state.x, &state.y),
        Player::Y => (&state.y, &state.x),
    };
    let mut values = vec![0.0; game.num_states() * m];
    let mut pis = vec![0.0; m];
    for s in 0..game.num_states() {
        for (c, pi) in pis.iter_mut().enumerate() {
            *pi = (0..m)
                .map(|d| {
                    let (a, b) = joint(player, c, d);
                    opponent.get(s, d) * future.pi_state(game.successor(s, a, b))
                })
                .sum();
        }
        let mean: f64 = (0..m).map(|c| own.get(s, c) * pis[c]).sum();
        let weight = state.stationary.p[s];
        for c in 0..m {
            values[s * m + c] = weight * (pis[c] - mean);
        }
    }
    GradientField::new(m, values)
}
