//! Discrete learning algorithms (MMRD and MMGA) and their continuous-time vector fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{GameSpec, Player, StateIndex, Strategy};
use crate::markov::{
    action_conditioned_distribution, expected_future_payoff, GradientField, Solver,
    INTERIOR_FLOOR,
};

/// Joint strategies plus the sampled-play state used by discretized MMRD.
#[derive(Debug, Clone)]
pub struct JointState {
    pub x: Strategy,
    pub y: Strategy,
    pub current_state: StateIndex,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl JointState {
    /// The initial memorized state is drawn uniformly with the run's seed.
    pub fn new(game: &GameSpec, x: Strategy, y: Strategy, seed: u64) -> Result<Self> {
        x.check_game(game)?;
        y.check_game(game)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current_state = rng.random_range(0..game.num_states());
        log::debug!("initial memorized state {current_state} drawn with seed {seed}");
        Ok(Self {
            x,
            y,
            current_state,
            seed,
            rng,
        })
    }

    pub fn with_state(
        game: &GameSpec,
        x: Strategy,
        y: Strategy,
        current_state: StateIndex,
        seed: u64,
    ) -> Result<Self> {
        let mut js = Self::new(game, x, y, seed)?;
        if current_state >= game.num_states() {
            return Err(Error::StateOutOfRange {
                state: current_state,
                states: game.num_states(),
            });
        }
        js.current_state = current_state;
        Ok(js)
    }
}

fn sample_action(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in row.iter().enumerate() {
        acc += p;
        if r < acc {
            return a;
        }
    }
    row.len() - 1
}

/// Outcome of one sampled MMRD round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round {
    pub a: usize,
    pub b: usize,
    pub from: StateIndex,
    pub to: StateIndex,
}

/// One round of discretized MMRD: sample `(a, b)` at the current state, move to the
/// successor `s_i'`, reinforce `x^{a|s_i}` by `eta * pi(e_i')` (and `y^{b|s_i}` with Y's
/// payoff), renormalize the touched rows.
pub fn mmrd_step(js: &mut JointState, game: &GameSpec, eta: f64, solver: &Solver) -> Result<Round> {
    let s = js.current_state;
    let a = sample_action(&mut js.rng, js.x.row(s));
    let b = sample_action(&mut js.rng, js.y.row(s));
    mmrd_apply(js, game, eta, a, b, solver)
}

/// MMRD update for a given joint action at the current state.
pub fn mmrd_apply(
    js: &mut JointState,
    game: &GameSpec,
    eta: f64,
    a: usize,
    b: usize,
    solver: &Solver,
) -> Result<Round> {
    if !(eta >= 0.0) {
        return Err(Error::InvalidStrategy(format!("learning rate {eta} must be non-negative")));
    }
    let m = game.m();
    for action in [a, b] {
        if action >= m {
            return Err(Error::ActionOutOfRange { action, m });
        }
    }
    let s = js.current_state;
    let to = game.successor(s, a, b);
    if eta > 0.0 {
        let state = solver.analyze(game, &js.x, &js.y)?;
        let pi_x = solver.future_payoff(game, &state, Player::X)?.pi_state(to);
        let pi_y = solver.future_payoff(game, &state, Player::Y)?.pi_state(to);
        js.x = reinforce(&js.x, s, a, eta * pi_x)?;
        js.y = reinforce(&js.y, s, b, eta * pi_y)?;
    }
    js.current_state = to;
    Ok(Round { a, b, from: s, to })
}

fn reinforce(strategy: &Strategy, state: StateIndex, action: usize, amount: f64) -> Result<Strategy> {
    let m = strategy.m();
    let mut probs = strategy.probs().to_vec();
    let row = &mut probs[state * m..(state + 1) * m];
    row[action] += amount;
    if row[action] < INTERIOR_FLOOR {
        log::debug!("MMRD update clamped state {state}, action {action}");
        row[action] = INTERIOR_FLOOR;
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
    Strategy::from_probs(m, probs)
}

/// One simultaneous step of discretized MMGA for both players: finite-difference
/// gradients `Delta^{a|s}` against the pre-step profiles, then
/// `x^{a|s} <- x^{a|s} (1 + eta Delta^{a|s})` and renormalization.
pub fn mmga_step(
    x: &Strategy,
    y: &Strategy,
    game: &GameSpec,
    eta: f64,
    gamma: f64,
    solver: &Solver,
) -> Result<(Strategy, Strategy)> {
    let (dx, dy) = rayon::join(
        || solver.payoff_gradient_fd(game, x, y, Player::X, gamma),
        || solver.payoff_gradient_fd(game, x, y, Player::Y, gamma),
    );
    Ok((multiplicative_update(x, &dx?, eta)?, multiplicative_update(y, &dy?, eta)?))
}

fn multiplicative_update(s: &Strategy, delta: &GradientField, eta: f64) -> Result<Strategy> {
    let m = s.m();
    let mut raw = s.probs().to_vec();
    for (k, (p, d)) in raw.iter_mut().zip(delta.values()).enumerate() {
        let multiplier = 1.0 + eta * d;
        if multiplier < 0.0 {
            return Err(Error::StepTooLarge {
                multiplier,
                state: k / m,
                action: k % m,
            });
        }
        *p *= multiplier;
    }
    crate::game::normalize(m, &raw)
}

/// Result of the two-action MMGA step.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoActionUpdate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Coordinates pulled back into `[floor, 1 - floor]`, as `(player, state)`.
    pub clamped: Vec<(Player, StateIndex)>,
}

/// Discretized MMGA in the two-action parametrization `x_i = x^{a1|s_i}`:
/// `Delta_i = (1 - x_i)(u_st(x + gamma e_i, y) - u_st(x, y)) / gamma`,
/// `x_i <- x_i (1 + eta Delta_i)`. Both players update simultaneously.
pub fn mmga_two_action_step(
    x: &[f64],
    y: &[f64],
    game: &GameSpec,
    eta: f64,
    gamma: f64,
    solver: &Solver,
) -> Result<TwoActionUpdate> {
    if game.m() != 2 {
        return Err(Error::InvalidGame(format!(
            "two-action step needs m = 2, got m = {}",
            game.m()
        )));
    }
    let xs = Strategy::from_first_action(x)?;
    let ys = Strategy::from_first_action(y)?;
    let floor = solver.interior_floor;
    let deltas = |player: Player| -> Result<Vec<f64>> {
        let own = match player {
            Player::X => x,
            Player::Y => y,
        };
        let base = solver.stationary_payoff(game, &xs, &ys, player)?;
        (0..own.len())
            .map(|i| {
                let mut shifted = own.to_vec();
                shifted[i] = (shifted[i] + gamma).min(1.0 - floor);
                let step = shifted[i] - own[i];
                let sh = Strategy::from_first_action(&shifted)?;
                let value = match player {
                    Player::X => solver.stationary_payoff(game, &sh, &ys, player)?,
                    Player::Y => solver.stationary_payoff(game, &xs, &sh, player)?,
                };
                Ok((1.0 - own[i]) * (value - base) / step)
            })
            .collect()
    };
    let dx = deltas(Player::X)?;
    let dy = deltas(Player::Y)?;
    let mut clamped = Vec::new();
    let mut update = |own: &[f64], delta: &[f64], player: Player| -> Vec<f64> {
        own.iter()
            .zip(delta)
            .enumerate()
            .map(|(i, (v, d))| {
                let next = v * (1.0 + eta * d);
                if next < floor || next > 1.0 - floor {
                    log::warn!("two-action MMGA: {player:?} coordinate {i} left (0, 1): {next}");
                    clamped.push((player, i));
                    next.clamp(floor, 1.0 - floor)
                } else {
                    next
                }
            })
            .collect()
    };
    let x_new = update(x, &dx, Player::X);
    let y_new = update(y, &dy, Player::Y);
    Ok(TwoActionUpdate {
        x: x_new,
        y: y_new,
        clamped,
    })
}

/// Time derivatives of both players' strategies, state-major and action-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEvaluation {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FieldEvaluation {
    pub fn max_abs_diff(&self, other: &FieldEvaluation) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .zip(other.dx.iter().chain(&other.dy))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// How the MMGA field obtains `d u_st(Norm(x), y) / d x^{a|s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    Exact,
    FiniteDifference { gamma: f64 },
}

/// Continualized MMRD:
/// `dx^{a|s_i}/dt = p_i x^{a|s_i} (pi(p^{a|s_i}) - sum_a' x^{a'|s_i} pi(p^{a'|s_i}))`,
/// with each `pi(p^{a|s_i})` accumulated from its own deviation series.
pub fn mmrd_field(
    game: &GameSpec,
    x: &Strategy,
    y: &Strategy,
    solver: &Solver,
) -> Result<FieldEvaluation> {
    let state = solver.analyze(game, x, y)?;
    let m = game.m();
    let per_player = |player: Player| -> Result<Vec<f64>> {
        let (own, opponent) = match player {
            Player::X => (&state.x, &state.y),
            Player::Y => (&state.y, &state.x),
        };
        let u = game.payoff_vector(player);
        let row = |s: usize| -> Result<Vec<f64>> {
            let pis = (0..m)
                .map(|c| {
                    let p = action_conditioned_distribution(game, player, c, s, opponent);
                    expected_future_payoff(&state.matrix, &state.stationary.p, &u, &p, solver.series)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean: f64 = (0..m).map(|c| own.get(s, c) * pis[c]).sum();
            let weight = state.stationary.p[s];
            Ok((0..m).map(|c| weight * own.get(s, c) * (pis[c] - mean)).collect())
        };
        let rows: Result<Vec<Vec<f64>>> = if game.num_states() * m >= 64 {
            (0..game.num_states()).into_par_iter().map(row).collect()
        } else {
            (0..game.num_states()).map(row).collect()
        };
        Ok(rows?.concat())
    };
    Ok(FieldEvaluation {
        dx: per_player(Player::X)?,
        dy: per_player(Player::Y)?,
    })
}

/// Continualized MMGA: `dx^{a|s}/dt = x^{a|s} d u_st(Norm(x), y) / d x^{a|s}`.
pub fn mmga_field(
    game: &GameSpec,
    x: &Strategy,
    y: &Strategy,
    solver: &Solver,
    mode: GradientMode,
) -> Result<FieldEvaluation> {
    let (gx, gy) = match mode {
        GradientMode::Exact => {
            let state = solver.analyze(game, x, y)?;
            let fx = solver.future_payoff(game, &state, Player::X)?;
            let fy = solver.future_payoff(game, &state, Player::Y)?;
            (
                crate::markov::gradient_from_future_payoff(game, &state, &fx, Player::X),
                crate::markov::gradient_from_future_payoff(game, &state, &fy, Player::Y),
            )
        }
        GradientMode::FiniteDifference { gamma } => (
            solver.payoff_gradient_fd(game, x, y, Player::X, gamma)?,
            solver.payoff_gradient_fd(game, x, y, Player::Y, gamma)?,
        ),
    };
    let weight = |s: &Strategy, g: &GradientField| -> Vec<f64> {
        s.probs().iter().zip(g.values()).map(|(p, d)| p * d).collect()
    };
    Ok(FieldEvaluation {
        dx: weight(x, &gx),
        dy: weight(y, &gy),
    })
}

/// Which continuous-time field drives a strategy-space trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Mmrd,
    Mmga(GradientMode),
}

/// Evaluates `kind` on the concatenated coordinates `z = [x, y]`, writing `[dx, dy]`.
///
/// Intermediate RK4 stages may leave the simplex slightly; they are evaluated as given
/// (the Markov engine clamps below the interior floor).
pub fn strategy_field(
    game: &GameSpec,
    solver: &Solver,
    kind: FieldKind,
    z: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let half = game.num_states() * game.m();
    if z.len() != 2 * half || out.len() != 2 * half {
        return Err(Error::DimensionMismatch {
            expected: 2 * half,
            found: z.len(),
        });
    }
    let x = Strategy::from_probs_unchecked(game.m(), z[..half].to_vec());
    let y = Strategy::from_probs_unchecked(game.m(), z[half..].to_vec());
    let eval = match kind {
        FieldKind::Mmrd => mmrd_field(game, &x, &y, solver)?,
        FieldKind::Mmga(mode) => mmga_field(game, &x, &y, solver, mode)?,
    };
    out[..half].copy_from_slice(&eval.dx);
    out[half..].copy_from_slice(&eval.dy);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::normalize;

    fn mp() -> GameSpec {
        GameSpec::matching_pennies(1).unwrap()
    }

    #[test]
    fn mmrd_zero_rate_only_advances_state() {
        let g = mp();
        let x = Strategy::from_first_action(&[0.7, 0.35, 0.6, 0.2]).unwrap();
        let y = Strategy::from_first_action(&[0.3, 0.55, 0.8, 0.45]).unwrap();
        let mut js = JointState::with_state(&g, x.clone(), y.clone(), 2, 7).unwrap();
        let round = mmrd_step(&mut js, &g, 0.0, &Solver::default()).unwrap();
        assert_eq!(js.x, x);
        assert_eq!(js.y, y);
        assert_eq!(round.from, 2);
        assert_eq!(js.current_state, g.successor(2, round.a, round.b));
    }

    #[test]
    fn mmrd_expected_drift_vanishes_at_nash() {
        // at uniform play pi(e_i) = u_i, and the four outcomes are equally likely
        let g = mp();
        let solver = Solver::default();
        let eta = 0.01;
        let mut mean_x = 0.0;
        let mut mean_y = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let uni = Strategy::uniform(2, 4);
                let mut js = JointState::with_state(&g, uni.clone(), uni, 0, 1).unwrap();
                mmrd_apply(&mut js, &g, eta, a, b, &solver).unwrap();
                let u = g.payoff(Player::X, a, b);
                let expected_row = if a == 0 {
                    (0.5 + eta * u) / (1.0 + eta * u)
                } else {
                    0.5 / (1.0 + eta * u)
                };
                assert!((js.x.get(0, 0) - expected_row).abs() < 1e-12);
                mean_x += js.x.get(0, 0) / 4.0;
                mean_y += js.y.get(0, 0) / 4.0;
            }
        }
        assert!((mean_x - 0.5).abs() < 1e-12);
        assert!((mean_y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mmrd_is_deterministic_per_seed() {
        let g = GameSpec::rock_paper_scissors(1).unwrap();
        let run = |seed| {
            let mut js = JointState::new(
                &g,
                Strategy::uniform(3, 9),
                normalize(3, &(0..27).map(|k| 1.0 + (k % 4) as f64).collect::<Vec<_>>()).unwrap(),
                seed,
            )
            .unwrap();
            let rounds: Vec<Round> = (0..50)
                .map(|_| mmrd_step(&mut js, &g, 0.05, &Solver::default()).unwrap())
                .collect();
            (rounds, js.x, js.y)
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11).0, run(12).0);
    }

    #[test]
    fn mmga_step_at_nash_is_stationary() {
        let g = mp();
        let uni = Strategy::uniform(2, 4);
        let (x, y) = mmga_step(&uni, &uni, &g, 0.01, 1e-6, &Solver::default()).unwrap();
        for (a, b) in x.probs().iter().chain(y.probs()).zip(uni.probs().iter().cycle()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn mmga_step_follows_exact_gradient_sign() {
        let g = mp();
        let solver = Solver::direct();
        let start = Strategy::from_first_action(&[0.8; 4]).unwrap();
        let (x, _) = mmga_step(&start, &start, &g, 1e-3, 1e-6, &solver).unwrap();
        let field = mmga_field(&g, &start, &start, &solver, GradientMode::Exact).unwrap();
        for s in 0..4 {
            let moved = x.get(s, 0) - 0.8;
            let rate = field.dx[s * 2];
            assert!(rate.abs() > 1e-6);
            assert_eq!(moved.signum(), rate.signum(), "state {s}");
        }
    }

    #[test]
    fn mmga_step_rejects_large_rate() {
        let g = mp();
        let x = Strategy::from_first_action(&[0.9, 0.1, 0.8, 0.3]).unwrap();
        let y = Strategy::from_first_action(&[0.2, 0.7, 0.6, 0.9]).unwrap();
        let err = mmga_step(&x, &y, &g, 1e6, 1e-6, &Solver::direct()).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn two_action_step_matches_general_step() {
        let g = mp();
        let solver = Solver::direct();
        let xs = [0.7, 0.35, 0.6, 0.2];
        let ys = [0.3, 0.55, 0.8, 0.45];
        let (eta, gamma) = (1e-2, 1e-6);
        let simple = mmga_two_action_step(&xs, &ys, &g, eta, gamma, &solver).unwrap();
        assert!(simple.clamped.is_empty());
        let x = Strategy::from_first_action(&xs).unwrap();
        let y = Strategy::from_first_action(&ys).unwrap();
        let (gx, gy) = mmga_step(&x, &y, &g, eta, gamma, &solver).unwrap();
        for i in 0..4 {
            assert!((simple.x[i] - gx.get(i, 0)).abs() < 1e-7);
            assert!((simple.y[i] - gy.get(i, 0)).abs() < 1e-7);
        }
    }

    #[test]
    fn two_action_step_trivial_cases() {
        let g = mp();
        let solver = Solver::direct();
        let nash = mmga_two_action_step(&[0.5; 4], &[0.5; 4], &g, 0.01, 1e-6, &solver).unwrap();
        assert!(nash.x.iter().chain(&nash.y).all(|v| (v - 0.5).abs() < 1e-8));
        let xs = [0.7, 0.35, 0.6, 0.2];
        let ys = [0.3, 0.55, 0.8, 0.45];
        let same = mmga_two_action_step(&xs, &ys, &g, 0.0, 1e-6, &solver).unwrap();
        assert_eq!(same.x, xs.to_vec());
        assert_eq!(same.y, ys.to_vec());
    }

    #[test]
    fn fields_vanish_at_nash_and_are_tangent() {
        let g = mp();
        let solver = Solver::default();
        let uni = Strategy::uniform(2, 4);
        let rd = mmrd_field(&g, &uni, &uni, &solver).unwrap();
        let ga = mmga_field(&g, &uni, &uni, &solver, GradientMode::Exact).unwrap();
        assert!(rd.dx.iter().chain(&rd.dy).all(|v| v.abs() < 1e-15));
        assert!(ga.dx.iter().chain(&ga.dy).all(|v| v.abs() < 1e-15));

        let g3 = GameSpec::rock_paper_scissors(1).unwrap();
        let x = normalize(3, &(0..27).map(|k| 0.5 + ((k * 7) % 11) as f64).collect::<Vec<_>>()).unwrap();
        let y = normalize(3, &(0..27).map(|k| 0.5 + ((k * 5) % 13) as f64).collect::<Vec<_>>()).unwrap();
        for f in [
            mmrd_field(&g3, &x, &y, &solver).unwrap(),
            mmga_field(&g3, &x, &y, &solver, GradientMode::Exact).unwrap(),
        ] {
            for s in 0..9 {
                assert!(f.dx[s * 3..s * 3 + 3].iter().sum::<f64>().abs() < 1e-10);
                assert!(f.dy[s * 3..s * 3 + 3].iter().sum::<f64>().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_and_fd_modes_agree() {
        let g = GameSpec::matching_pennies(2).unwrap();
        let solver = Solver::direct();
        let x = normalize(2, &(0..32).map(|k| 0.5 + ((k * 7) % 11) as f64).collect::<Vec<_>>()).unwrap();
        let y = normalize(2, &(0..32).map(|k| 0.5 + ((k * 5) % 13) as f64).collect::<Vec<_>>()).unwrap();
        let exact = mmga_field(&g, &x, &y, &solver, GradientMode::Exact).unwrap();
        let fd = mmga_field(&g, &x, &y, &solver, GradientMode::FiniteDifference { gamma: 1e-6 })
            .unwrap();
        assert!(exact.max_abs_diff(&fd) < 1e-4);
    }
}
