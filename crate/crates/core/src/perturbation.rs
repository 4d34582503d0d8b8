//! Perturbative analysis of one-memory two-action zero-sum games around their Nash point.
//!
//! Coordinates follow the two-action parametrization `x_i = x^{a1|s_i}`, `y_i = y^{b1|s_i}`,
//! with states ordered `(a1 b1, a1 b2, a2 b1, a2 b2)`.

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Strategy};
use crate::markov::closed_form_weights_2x1;

type V4 = [f64; 4];

/// True iff neither player has a dominant pure action: `u1, u4` both above or both
/// below `u2, u3`.
pub fn assumption1_check(u: V4) -> bool {
    let [u1, u2, u3, u4] = u;
    u1.min(u4) > u2.max(u3) || u1.max(u4) < u2.min(u3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashPoint2x1 {
    pub x_star: f64,
    pub y_star: f64,
    pub u_star: f64,
}

pub fn nash_2x1(u: V4) -> Result<NashPoint2x1> {
    if !assumption1_check(u) {
        return Err(Error::Assumption1Violation(u));
    }
    let [u1, u2, u3, u4] = u;
    let d = u1 - u2 - u3 + u4;
    Ok(NashPoint2x1 {
        x_star: (u4 - u3) / d,
        y_star: (u4 - u2) / d,
        u_star: (u1 * u4 - u2 * u3) / d,
    })
}

impl NashPoint2x1 {
    /// The equilibrium as memory-independent strategies (same mixed action in every state).
    pub fn profiles(&self) -> (Strategy, Strategy) {
        let x = Strategy::constant(&[self.x_star, 1.0 - self.x_star], 4).expect("x* in (0, 1)");
        let y = Strategy::constant(&[self.y_star, 1.0 - self.y_star], 4).expect("y* in (0, 1)");
        (x, y)
    }
}

/// The four payoffs `(u1, u2, u3, u4)` of a one-memory two-action zero-sum game.
pub fn payoffs_2x1(game: &GameSpec) -> Result<V4> {
    if game.m() != 2 || game.n() != 1 || !game.is_zero_sum() {
        return Err(Error::InvalidGame(format!(
            "perturbation analysis needs a zero-sum game with m = 2, n = 1 (got m = {}, n = {})",
            game.m(),
            game.n()
        )));
    }
    let u = game.payoff_matrix(crate::game::Player::X);
    Ok([u[0], u[1], u[2], u[3]])
}

/// Offsets `delta = x - x* 1`, `epsilon = y - y* 1`. Also used for their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviationState {
    pub delta: V4,
    pub epsilon: V4,
}

impl DeviationState {
    pub fn new(delta: V4, epsilon: V4) -> Self {
        Self { delta, epsilon }
    }

    pub fn from_strategies(x: V4, y: V4, nash: &NashPoint2x1) -> Self {
        Self {
            delta: x.map(|v| v - nash.x_star),
            epsilon: y.map(|v| v - nash.y_star),
        }
    }

    pub fn to_strategies(&self, nash: &NashPoint2x1) -> (V4, V4) {
        (
            self.delta.map(|d| nash.x_star + d),
            self.epsilon.map(|e| nash.y_star + e),
        )
    }

    /// `[delta, epsilon]` as one 8-vector.
    pub fn to_vec(&self) -> Vec<f64> {
        self.delta.iter().chain(&self.epsilon).copied().collect()
    }

    pub fn from_slice(z: &[f64]) -> Result<Self> {
        if z.len() != 8 {
            return Err(Error::DimensionMismatch {
                expected: 8,
                found: z.len(),
            });
        }
        let mut d = Self::default();
        d.delta.copy_from_slice(&z[..4]);
        d.epsilon.copy_from_slice(&z[4..]);
        Ok(d)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            delta: self.delta.map(|v| v * k),
            epsilon: self.epsilon.map(|v| v * k),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.delta
            .iter()
            .chain(&self.epsilon)
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn sub(&self, other: &Self) -> Self {
        Self {
            delta: sub(self.delta, other.delta),
            epsilon: sub(self.epsilon, other.epsilon),
        }
    }

    fn add(&self, other: &Self) -> Self {
        Self {
            delta: add(self.delta, other.delta),
            epsilon: add(self.epsilon, other.epsilon),
        }
    }

    fn check_inside(&self, nash: &NashPoint2x1) -> Result<()> {
        let (x, y) = self.to_strategies(nash);
        for (index, &value) in x.iter().chain(&y).enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::OutOfSimplex { index, value });
            }
        }
        Ok(())
    }
}

/// `(1/4) sum_i sqrt((delta_i - delta'_i)^2 + (epsilon_i - epsilon'_i)^2)`.
pub fn approx_error(a: &DeviationState, b: &DeviationState) -> f64 {
    (0..4)
        .map(|i| (a.delta[i] - b.delta[i]).hypot(a.epsilon[i] - b.epsilon[i]))
        .sum::<f64>()
        / 4.0
}

fn add(a: V4, b: V4) -> V4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn sub(a: V4, b: V4) -> V4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn had(a: V4, b: V4) -> V4 {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2], a[3] * b[3]]
}

fn dot(a: V4, b: V4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn scale(k: f64, a: V4) -> V4 {
    a.map(|v| k * v)
}

fn sum(terms: &[V4]) -> V4 {
    terms.iter().fold([0.0; 4], |acc, t| add(acc, *t))
}

/// Constants of the expansion around the Nash point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConstants {
    pub nash: NashPoint2x1,
    pub x_star_vec: V4,
    pub y_star_vec: V4,
    pub p_star: V4,
    pub one_x: V4,
    pub one_y: V4,
    pub one_z: V4,
    /// `u . 1_z = u1 - u2 - u3 + u4`
    pub c: f64,
}

impl ExpansionConstants {
    pub fn new(u: V4) -> Result<Self> {
        let nash = nash_2x1(u)?;
        let (x, y) = (nash.x_star, nash.y_star);
        let x_star_vec = [x, x, 1.0 - x, 1.0 - x];
        let y_star_vec = [y, 1.0 - y, y, 1.0 - y];
        let one_x = [1.0, 1.0, -1.0, -1.0];
        let one_y = [1.0, -1.0, 1.0, -1.0];
        let one_z = had(one_x, one_y);
        Ok(Self {
            nash,
            x_star_vec,
            y_star_vec,
            p_star: had(x_star_vec, y_star_vec),
            one_x,
            one_y,
            one_z,
            c: dot(u, one_z),
        })
    }

    /// Order-`k` part of `(d u_st / d delta, d u_st / d epsilon)`, a homogeneous polynomial
    /// of degree `k - 1` in the deviations. Zero for `k <= 1` (the payoff is flat at Nash).
    pub fn payoff_gradient(&self, d: &DeviationState, k: usize) -> (V4, V4) {
        let (de, ep) = (d.delta, d.epsilon);
        let (xs, ys, ps) = (self.x_star_vec, self.y_star_vec, self.p_star);
        let ys_x = had(ys, self.one_x);
        let xs_y = had(xs, self.one_y);
        let c = self.c;
        match k {
            2 => (scale(c, had(ep, ps)), scale(c, had(de, ps))),
            3 => {
                let pd = dot(de, ps);
                let pe = dot(ep, ps);
                let de_ep = had(de, ep);
                let wy = dot(had(de_ep, ys), self.one_x);
                let wx = dot(had(de_ep, xs), self.one_y);
                let gd = sum(&[
                    scale(pd, had(ep, ys_x)),
                    scale(pe, had(ep, xs_y)),
                    scale(wy, ps),
                ]);
                let ge = sum(&[
                    scale(pd, had(de, ys_x)),
                    scale(pe, had(de, xs_y)),
                    scale(wx, ps),
                ]);
                (scale(c, gd), scale(c, ge))
            }
            4 => {
                let pd = dot(de, ps);
                let pe = dot(ep, ps);
                let de_ep = had(de, ep);
                let s = dot(de_ep, ps);
                let z = dot(de_ep, self.one_z);
                let dy = dot(had(de, ys), self.one_x);
                let dx = dot(had(de, xs), self.one_y);
                let ey = dot(had(ep, ys), self.one_x);
                let ex = dot(had(ep, xs), self.one_y);
                let wy = dot(had(de_ep, ys), self.one_x);
                let wx = dot(had(de_ep, xs), self.one_y);
                let a = pd * dy + pe * dx;
                let b = pd * ey + pe * ex;
                let base = add(scale(pd, ys_x), scale(pe, xs_y));
                let gd = sum(&[
                    scale(z, had(ep, ps)),
                    scale(s, had(ep, self.one_z)),
                    scale(a, had(ep, ys_x)),
                    scale(wy, add(base, scale(dy, ps))),
                    scale(b, had(ep, xs_y)),
                    scale(wx * ey, ps),
                ]);
                let ge = sum(&[
                    scale(z, had(de, ps)),
                    scale(s, had(de, self.one_z)),
                    scale(a, had(de, ys_x)),
                    scale(wy * dx, ps),
                    scale(b, had(de, xs_y)),
                    scale(wx, add(base, scale(ex, ps))),
                ]);
                (scale(c, gd), scale(c, ge))
            }
            _ => ([0.0; 4], [0.0; 4]),
        }
    }

    /// The order-`k` term `(delta_dot^(k), epsilon_dot^(k))` of the MMGA field.
    pub fn expansion_term(&self, d: &DeviationState, k: usize) -> DeviationState {
        let (x, y) = (self.nash.x_star, self.nash.y_star);
        let (xt, yt) = (1.0 - x, 1.0 - y);
        let (gd_next, ge_next) = self.payoff_gradient(d, k + 1);
        let (gd, ge) = self.payoff_gradient(d, k);
        let (gd_prev, ge_prev) = self.payoff_gradient(d, k.saturating_sub(1));
        let dd = had(d.delta, d.delta);
        let ee = had(d.epsilon, d.epsilon);
        DeviationState {
            delta: sum(&[
                scale(x * xt, gd_next),
                scale(-(x - xt), had(d.delta, gd)),
                scale(-1.0, had(dd, gd_prev)),
            ]),
            epsilon: sum(&[
                scale(-y * yt, ge_next),
                scale(y - yt, had(d.epsilon, ge)),
                had(ee, ge_prev),
            ]),
        }
    }

    /// Sum of expansion terms of orders `1..=order`.
    pub fn approx_field(&self, d: &DeviationState, order: usize) -> Result<DeviationState> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidGame(format!(
                "approximation order must be 1, 2 or 3, got {order}"
            )));
        }
        d.check_inside(&self.nash)?;
        Ok((1..=order).fold(DeviationState::default(), |acc, k| {
            acc.add(&self.expansion_term(d, k))
        }))
    }

    /// The exact MMGA field in deviation coordinates.
    pub fn full_field(&self, u: V4, d: &DeviationState) -> Result<DeviationState> {
        full_field_2x1(u, &self.nash, d)
    }
}

fn stationary_payoff_generic<T: Scalar>(u: V4, x: [T; 4], y: [T; 4]) -> T {
    let w = closed_form_weights_2x1(x, y);
    let total = w[0] + w[1] + w[2] + w[3];
    let weighted = w[0] * T::from(u[0])
        + w[1] * T::from(u[1])
        + w[2] * T::from(u[2])
        + w[3] * T::from(u[3]);
    weighted / total
}

/// `(d u_st / d x_i, d u_st / d y_i)` from the analytic stationary distribution, exact
/// to rounding through forward-mode differentiation.
pub fn payoff_partials_2x1(u: V4, x: V4, y: V4) -> (V4, V4) {
    let lift = |v: V4, seed: Option<usize>| -> [Dual; 4] {
        std::array::from_fn(|i| {
            if Some(i) == seed {
                Dual::variable(v[i])
            } else {
                Dual::constant(v[i])
            }
        })
    };
    let gx = std::array::from_fn(|i| stationary_payoff_generic(u, lift(x, Some(i)), lift(y, None)).deriv);
    let gy = std::array::from_fn(|i| stationary_payoff_generic(u, lift(x, None), lift(y, Some(i))).deriv);
    (gx, gy)
}

/// `delta_dot = x(1-x) du/dx`, `epsilon_dot = -y(1-y) du/dy` at `x* 1 + delta`, `y* 1 + epsilon`.
pub fn full_field_2x1(u: V4, nash: &NashPoint2x1, d: &DeviationState) -> Result<DeviationState> {
    d.check_inside(nash)?;
    let (x, y) = d.to_strategies(nash);
    let (gx, gy) = payoff_partials_2x1(u, x, y);
    Ok(DeviationState {
        delta: std::array::from_fn(|i| x[i] * (1.0 - x[i]) * gx[i]),
        epsilon: std::array::from_fn(|i| -y[i] * (1.0 - y[i]) * gy[i]),
    })
}

/// Cross-partial sums `d delta_dot_i^(k) / d epsilon_i' + d epsilon_dot_i'^(k) / d delta_i`
/// of the isolated order-`k` term, by central differences with step `h`.
/// A Hamiltonian field makes every entry vanish.
pub fn hamiltonian_defect(
    c: &ExpansionConstants,
    d: &DeviationState,
    order: usize,
    h: f64,
) -> [[f64; 4]; 4] {
    let term = |s: &DeviationState| c.expansion_term(s, order);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut ep = *d;
            let mut em = *d;
            ep.epsilon[j] += h;
            em.epsilon[j] -= h;
            let d_delta = (term(&ep).delta[i] - term(&em).delta[i]) / (2.0 * h);
            let mut dp = *d;
            let mut dm = *d;
            dp.delta[i] += h;
            dm.delta[i] -= h;
            let d_eps = (term(&dp).epsilon[j] - term(&dm).epsilon[j]) / (2.0 * h);
            out[i][j] = d_delta + d_eps;
        }
    }
    out
}

/// `d delta_dot_i^(k) / d delta_i' + d epsilon_dot_i'^(k) / d epsilon_i` of the isolated
/// order-`k` term. With `delta_dot = dH/d epsilon`, `epsilon_dot = -dH/d delta` both
/// summands are the mixed second derivative of `H`, so a Hamiltonian field makes every
/// entry vanish.
pub fn symplectic_defect(
    c: &ExpansionConstants,
    d: &DeviationState,
    order: usize,
    h: f64,
) -> [[f64; 4]; 4] {
    let term = |s: &DeviationState| c.expansion_term(s, order);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut dp = *d;
            let mut dm = *d;
            dp.delta[j] += h;
            dm.delta[j] -= h;
            let d_delta = (term(&dp).delta[i] - term(&dm).delta[i]) / (2.0 * h);
            let mut ep = *d;
            let mut em = *d;
            ep.epsilon[i] += h;
            em.epsilon[i] -= h;
            let d_eps = (term(&ep).epsilon[j] - term(&em).epsilon[j]) / (2.0 * h);
            out[i][j] = d_delta + d_eps;
        }
    }
    out
}

/// Max-norm distance between the full field and the order-`k` approximation.
pub fn approx_residual(c: &ExpansionConstants, u: V4, d: &DeviationState, order: usize) -> Result<f64> {
    let full = c.full_field(u, d)?;
    let approx = c.approx_field(d, order)?;
    Ok(full.sub(&approx).max_abs())
}
