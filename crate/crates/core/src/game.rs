//! Games, the memorized-state index space, payoff vectors and strategy profiles.
//!
//! A memorized state is the sequence of the last `n` joint action pairs. States are
//! indexed from 0 with the newest pair as the most significant digit in base `m`:
//!
//! ```text
//! index = sum_{k=1..n} (a_k * m + b_k) * m^(2(n-k))      (k = 1 is the newest round)
//! ```
//!
//! This ordering makes the payoff vector constant on consecutive blocks of
//! `m^(2n-2)` states, and it is the canonical order of every state-indexed vector in
//! this crate.

use crate::error::{Error, Result};

/// Largest supported number of memorized states.
pub const MAX_STATES: usize = 1 << 20;

/// Index of a memorized state, in `[0, m^(2n))`.
pub type StateIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    X,
    Y,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::X => Player::Y,
            Player::Y => Player::X,
        }
    }
}

/// A two-player `m`-action game repeated with `n` rounds of memory.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    m: usize,
    n: usize,
    num_states: usize,
    payoff_x: Vec<f64>,
    payoff_y: Vec<f64>,
    zero_sum: bool,
}

impl GameSpec {
    /// Zero-sum game: Y's payoff is the entrywise negation of `payoff_x` (row-major `m x m`).
    pub fn zero_sum(m: usize, n: usize, payoff_x: Vec<f64>) -> Result<Self> {
        let payoff_y = payoff_x.iter().map(|u| -u).collect();
        Self::build(m, n, payoff_x, payoff_y, true)
    }

    /// General-sum game with explicit payoffs for both players.
    pub fn general(m: usize, n: usize, payoff_x: Vec<f64>, payoff_y: Vec<f64>) -> Result<Self> {
        let zero_sum = payoff_x.iter().zip(&payoff_y).all(|(u, v)| *u == -*v);
        Self::build(m, n, payoff_x, payoff_y, zero_sum)
    }

    fn build(
        m: usize,
        n: usize,
        payoff_x: Vec<f64>,
        payoff_y: Vec<f64>,
        zero_sum: bool,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGame(format!("action count m = {m} must be at least 2")));
        }
        if n < 1 {
            return Err(Error::InvalidGame(format!("memory depth n = {n} must be at least 1")));
        }
        let num_states = state_count(m, n).ok_or_else(|| {
            Error::InvalidGame(format!(
                "m^(2n) for m = {m}, n = {n} exceeds the cap of {MAX_STATES} states"
            ))
        })?;
        for (name, p) in [("payoff_x", &payoff_x), ("payoff_y", &payoff_y)] {
            if p.len() != m * m {
                return Err(Error::InvalidGame(format!(
                    "{name} has {} entries, expected {}",
                    p.len(),
                    m * m
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("{name} has a non-finite entry")));
            }
        }
        Ok(Self {
            m,
            n,
            num_states,
            payoff_x,
            payoff_y,
            zero_sum,
        })
    }

    /// Matching pennies: U(a1,b1) = U(a2,b2) = 1, U(a1,b2) = U(a2,b1) = -1.
    pub fn matching_pennies(n: usize) -> Result<Self> {
        Self::zero_sum(2, n, vec![1.0, -1.0, -1.0, 1.0])
    }

    /// Rock-paper-scissors with win +1, loss -1, tie 0.
    pub fn rock_paper_scissors(n: usize) -> Result<Self> {
        Self::zero_sum(
            3,
            n,
            vec![
                0.0, -1.0, 1.0, //
                1.0, 0.0, -1.0, //
                -1.0, 1.0, 0.0,
            ],
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    /// Payoff matrix of `player`, row-major with X's action as the row.
    pub fn payoff_matrix(&self, player: Player) -> &[f64] {
        match player {
            Player::X => &self.payoff_x,
            Player::Y => &self.payoff_y,
        }
    }

    pub fn payoff(&self, player: Player, a: usize, b: usize) -> f64 {
        self.payoff_matrix(player)[a * self.m + b]
    }

    /// Encodes `pairs` (newest first) as a state index.
    pub fn state_index(&self, pairs: &[(usize, usize)]) -> Result<StateIndex> {
        if pairs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: pairs.len(),
            });
        }
        let mut index = 0;
        for &(a, b) in pairs {
            for action in [a, b] {
                if action >= self.m {
                    return Err(Error::ActionOutOfRange { action, m: self.m });
                }
            }
            index = index * self.m * self.m + a * self.m + b;
        }
        Ok(index)
    }

    /// Decodes a state index into its `n` action pairs, newest first.
    pub fn state_pairs(&self, state: StateIndex) -> Vec<(usize, usize)> {
        let base = self.m * self.m;
        let mut digits = Vec::with_capacity(self.n);
        let mut rest = state;
        for _ in 0..self.n {
            let pair = rest % base;
            digits.push((pair / self.m, pair % self.m));
            rest /= base;
        }
        digits.reverse();
        digits
    }

    /// State reached from `state` when X plays `a` and Y plays `b`: the new pair becomes
    /// the newest and the oldest pair is dropped.
    #[inline]
    pub fn successor(&self, state: StateIndex, a: usize, b: usize) -> StateIndex {
        let base = self.m * self.m;
        (a * self.m + b) * (self.num_states / base) + state / base
    }

    /// `u_i` (or `v_i`): the payoff of the newest pair of each state.
    pub fn payoff_vector(&self, player: Player) -> Vec<f64> {
        let block = self.num_states / (self.m * self.m);
        let matrix = self.payoff_matrix(player);
        (0..self.num_states).map(|i| matrix[i / block]).collect()
    }
}

fn state_count(m: usize, n: usize) -> Option<usize> {
    let mut count: usize = 1;
    for _ in 0..2 * n {
        count = count.checked_mul(m)?;
        if count > MAX_STATES {
            return None;
        }
    }
    Some(count)
}

/// Tolerance on per-state row sums of a valid strategy.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// One player's memory-conditioned mixed strategy, stored state-major and action-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    m: usize,
    probs: Vec<f64>,
}

impl Strategy {
    /// Validates an already-normalized table of `num_states * m` probabilities.
    pub fn from_probs(m: usize, probs: Vec<f64>) -> Result<Self> {
        if m < 2 || !probs.len().is_multiple_of(m) || probs.is_empty() {
            return Err(Error::InvalidStrategy(format!(
                "{} entries cannot be split into rows of {m} actions",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(m).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidStrategy(format!(
                    "state {s} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidStrategy(format!(
                    "state {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { m, probs })
    }

    pub(crate) fn from_probs_unchecked(m: usize, probs: Vec<f64>) -> Self {
        Self { m, probs }
    }

    pub fn uniform(m: usize, num_states: usize) -> Self {
        Self {
            m,
            probs: vec![1.0 / m as f64; m * num_states],
        }
    }

    /// The same mixed action `row` at every state.
    pub fn constant(row: &[f64], num_states: usize) -> Result<Self> {
        let probs = row
            .iter()
            .copied()
            .cycle()
            .take(row.len() * num_states)
            .collect();
        Self::from_probs(row.len(), probs)
    }

    /// Two-action strategy from the first-action probabilities `x_i = x^{a1|s_i}`.
    pub fn from_first_action(x: &[f64]) -> Result<Self> {
        let probs = x.iter().flat_map(|&p| [p, 1.0 - p]).collect();
        Self::from_probs(2, probs)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    #[inline]
    pub fn get(&self, state: StateIndex, action: usize) -> f64 {
        self.probs[state * self.m + action]
    }

    pub fn row(&self, state: StateIndex) -> &[f64] {
        &self.probs[state * self.m..(state + 1) * self.m]
    }

    /// `x^{a1|s}` for every state.
    pub fn first_action(&self) -> Vec<f64> {
        self.probs.chunks(self.m).map(|row| row[0]).collect()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_game(&self, game: &GameSpec) -> Result<()> {
        if self.m != game.m() {
            return Err(Error::DimensionMismatch {
                expected: game.m(),
                found: self.m,
            });
        }
        if self.num_states() != game.num_states() {
            return Err(Error::DimensionMismatch {
                expected: game.num_states(),
                found: self.num_states(),
            });
        }
        Ok(())
    }

    /// Raises every entry below `floor` to `floor` and renormalizes the affected rows.
    /// Returns the states that were touched.
    pub fn clamp_interior(&mut self, floor: f64) -> Vec<StateIndex> {
        let m = self.m;
        let mut touched = Vec::new();
        for (s, row) in self.probs.chunks_mut(m).enumerate() {
            if row.iter().any(|p| *p < floor) {
                row.iter_mut().for_each(|p| *p = p.max(floor));
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
                touched.push(s);
            }
        }
        touched
    }
}

/// Divides every per-state row of `raw` (state-major, `m` entries per state) by its sum.
pub fn normalize(m: usize, raw: &[f64]) -> Result<Strategy> {
    if m < 2 || !raw.len().is_multiple_of(m) || raw.is_empty() {
        return Err(Error::InvalidStrategy(format!(
            "{} entries cannot be split into rows of {m} actions",
            raw.len()
        )));
    }
    let mut probs = raw.to_vec();
    for (s, row) in probs.chunks_mut(m).enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidStrategy(format!(
                "state {s} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateRow { state: s });
        }
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(Strategy { m, probs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_index_examples() {
        let g21 = GameSpec::matching_pennies(1).unwrap();
        let g22 = GameSpec::matching_pennies(2).unwrap();
        assert_eq!(g21.state_index(&[(0, 0)]).unwrap(), 0);
        assert_eq!(g22.state_index(&[(0, 1), (1, 0)]).unwrap(), 6);
        assert_eq!(g22.state_index(&[(1, 1), (1, 1)]).unwrap(), 15);
        assert_eq!(
            g21.state_index(&[(2, 0)]),
            Err(Error::ActionOutOfRange { action: 2, m: 2 })
        );
        assert!(g22.state_index(&[(0, 0)]).is_err());
    }

    #[test]
    fn state_pairs_examples() {
        let g21 = GameSpec::matching_pennies(1).unwrap();
        let g22 = GameSpec::matching_pennies(2).unwrap();
        let g31 = GameSpec::rock_paper_scissors(1).unwrap();
        assert_eq!(g21.state_pairs(2), vec![(1, 0)]);
        assert_eq!(g22.state_pairs(6), vec![(0, 1), (1, 0)]);
        assert_eq!(g31.state_pairs(5), vec![(1, 2)]);
    }

    #[test]
    fn successor_examples() {
        let g21 = GameSpec::matching_pennies(1).unwrap();
        let g22 = GameSpec::matching_pennies(2).unwrap();
        assert_eq!(g21.successor(3, 1, 0), 2);
        assert_eq!(g22.successor(6, 0, 0), 1);
        assert_eq!(g22.successor(15, 0, 1), 7);
    }

    #[test]
    fn successor_matches_brute_force_table() {
        // enumerate by decoded pairs: prepend the new pair, drop the oldest
        for (m, n) in [(2, 1), (2, 2), (3, 1), (3, 2), (2, 3)] {
            let g = GameSpec::zero_sum(m, n, vec![0.0; m * m]).unwrap();
            for i in 0..g.num_states() {
                let old = g.state_pairs(i);
                for a in 0..m {
                    for b in 0..m {
                        let mut pairs = vec![(a, b)];
                        pairs.extend_from_slice(&old[..n - 1]);
                        assert_eq!(g.successor(i, a, b), g.state_index(&pairs).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_is_exhaustive() {
        for (m, n) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1), (4, 2), (8, 2)] {
            let g = GameSpec::zero_sum(m, n, vec![0.0; m * m]).unwrap();
            assert!(g.num_states() <= 4096);
            for i in 0..g.num_states() {
                assert_eq!(g.state_index(&g.state_pairs(i)).unwrap(), i);
            }
        }
    }

    #[test]
    fn state_cap_is_enforced() {
        assert!(GameSpec::zero_sum(2, 10, vec![0.0; 4]).is_ok());
        assert!(matches!(
            GameSpec::zero_sum(2, 11, vec![0.0; 4]),
            Err(Error::InvalidGame(_))
        ));
        assert!(GameSpec::zero_sum(1, 1, vec![0.0]).is_err());
        assert!(GameSpec::zero_sum(2, 0, vec![0.0; 4]).is_err());
        assert!(GameSpec::zero_sum(2, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn payoff_vector_examples() {
        let g = GameSpec::matching_pennies(1).unwrap();
        assert_eq!(g.payoff_vector(Player::X), vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(g.payoff_vector(Player::Y), vec![-1.0, 1.0, 1.0, -1.0]);

        let g2 = GameSpec::matching_pennies(2).unwrap();
        let u = g2.payoff_vector(Player::X);
        assert_eq!(u.len(), 16);
        for (i, ui) in u.iter().enumerate() {
            let expected = [1.0, -1.0, -1.0, 1.0][i / 4];
            assert_eq!(*ui, expected);
            let (a, b) = g2.state_pairs(i)[0];
            assert_eq!(*ui, g2.payoff(Player::X, a, b));
        }
    }

    #[test]
    fn general_game_detects_zero_sum() {
        let g = GameSpec::general(2, 1, vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, -2.0, -3.0, -4.0])
            .unwrap();
        assert!(g.is_zero_sum());
        let g = GameSpec::general(2, 1, vec![3.0, 0.0, 5.0, 1.0], vec![3.0, 5.0, 0.0, 1.0])
            .unwrap();
        assert!(!g.is_zero_sum());
    }

    #[test]
    fn normalize_examples() {
        let s = normalize(2, &[2.0, 2.0]).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.5]);
        let s = normalize(3, &[0.5, 0.5, 1.0]).unwrap();
        assert_eq!(s.probs(), &[0.25, 0.25, 0.5]);
        let again = normalize(3, s.probs()).unwrap();
        assert_eq!(again, s);
        assert_eq!(
            normalize(2, &[0.3, 0.7, 0.0, 0.0]),
            Err(Error::DegenerateRow { state: 1 })
        );
    }

    #[test]
    fn strategy_validation() {
        assert!(Strategy::from_probs(2, vec![0.5, 0.5, 0.2, 0.8]).is_ok());
        assert!(Strategy::from_probs(2, vec![0.5, 0.6]).is_err());
        assert!(Strategy::from_probs(2, vec![1.2, -0.2]).is_err());
        assert!(Strategy::from_probs(2, vec![0.5, 0.5, 0.5]).is_err());
        let s = Strategy::from_first_action(&[0.8, 0.6]).unwrap();
        assert_eq!(s.first_action(), vec![0.8, 0.6]);
        assert_eq!(s.get(1, 1), 1.0 - 0.6);
    }

    #[test]
    fn clamp_interior_renormalizes_touched_rows() {
        let mut s = Strategy::from_probs(2, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        let touched = s.clamp_interior(1e-6);
        assert_eq!(touched, vec![0]);
        assert!(s.min_prob() >= 1e-6 / (1.0 + 1e-6));
        assert!((s.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(s.row(1), &[0.5, 0.5]);
    }
}
