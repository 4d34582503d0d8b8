//! Trajectory diagnostics: logit distance, KL divergence from equilibrium and the
//! leading Jacobian eigenvalue of the MMGA field.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{strategy_field, FieldKind, GradientMode};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Player, Strategy};
use crate::markov::Solver;

/// Largest Jacobian dimension handed to the dense eigensolver.
pub const EIGEN_DIM_CAP: usize = 512;

pub fn logit(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::BoundaryInput(x));
    }
    Ok(x.ln() - (1.0 - x).ln())
}

/// Mean absolute logit difference over all coordinates.
pub fn strategy_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (x1, x2) in a.iter().zip(b) {
        total += (logit(*x1)? - logit(*x2)?).abs();
    }
    Ok(total / a.len() as f64)
}

/// `(1/|S|) sum_s sum_a x*^{a|s} ln(x*^{a|s} / x^{a|s})`.
pub fn kl_from_nash(x: &Strategy, nash: &Strategy) -> Result<f64> {
    if x.probs().len() != nash.probs().len() || x.m() != nash.m() {
        return Err(Error::DimensionMismatch {
            expected: nash.probs().len(),
            found: x.probs().len(),
        });
    }
    let mut total = 0.0;
    for (&q, &p) in x.probs().iter().zip(nash.probs()) {
        if !(q > 0.0) {
            return Err(Error::BoundaryInput(q));
        }
        if p > 0.0 {
            total += p * (p / q).ln();
        }
    }
    Ok(total / x.num_states() as f64)
}

/// Fully mixed equilibrium action of `player` in the stage game: the mixture that makes
/// every opponent action equally good for the opponent.
pub fn zero_memory_nash(game: &GameSpec, player: Player) -> Result<Vec<f64>> {
    let m = game.m();
    let opponent = player.opponent();
    // rows: opponent's actions; columns: own actions, then the common value
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut rhs = DVector::<f64>::zeros(m + 1);
    for other in 0..m {
        for own in 0..m {
            let (ax, by) = match player {
                Player::X => (own, other),
                Player::Y => (other, own),
            };
            a[(other, own)] = game.payoff(opponent, ax, by);
        }
        a[(other, m)] = -1.0;
    }
    for own in 0..m {
        a[(m, own)] = 1.0;
    }
    rhs[m] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("stage-game equilibrium system"))?;
    let mix: Vec<f64> = sol.iter().take(m).copied().collect();
    if mix.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidGame(format!(
            "stage game has no fully mixed equilibrium for {player:?} (solution {mix:?})"
        )));
    }
    Ok(mix)
}

/// Which scalar summarizes the Jacobian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenQuantity {
    #[default]
    MaxRealPart,
    MaxModulus,
}

/// Central-difference Jacobian of `field` at `z`, columns evaluated in parallel.
pub fn jacobian<F>(field: F, z: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    let n = z.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut plus = z.to_vec();
            let mut minus = z.to_vec();
            plus[j] += step;
            minus[j] -= step;
            let mut fp = vec![0.0; n];
            let mut fm = vec![0.0; n];
            field(&plus, &mut fp)?;
            field(&minus, &mut fm)?;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| columns[j][i]))
}

pub fn spectrum_summary(jac: DMatrix<f64>, quantity: EigenQuantity) -> Result<f64> {
    if jac.nrows() == 0 {
        return Ok(0.0);
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Jacobian"));
    }
    let eig = jac.complex_eigenvalues();
    Ok(eig
        .iter()
        .map(|c| match quantity {
            EigenQuantity::MaxRealPart => c.re,
            EigenQuantity::MaxModulus => c.norm(),
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Leading eigenvalue of the Jacobian of an arbitrary field.
pub fn max_eigenvalue<F>(field: F, z: &[f64], step: f64, quantity: EigenQuantity) -> Result<f64>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    if z.len() > EIGEN_DIM_CAP {
        return Err(Error::DimensionCap {
            dimension: z.len(),
            cap: EIGEN_DIM_CAP,
        });
    }
    spectrum_summary(jacobian(field, z, step)?, quantity)
}

/// Leading eigenvalue of the continuous MMGA field's Jacobian in free coordinates: per
/// state and player the first `m - 1` probabilities, the last one being implied.
pub fn max_jacobian_eigenvalue(
    game: &GameSpec,
    x: &Strategy,
    y: &Strategy,
    solver: &Solver,
    step: f64,
    quantity: EigenQuantity,
) -> Result<f64> {
    let m = game.m();
    let states = game.num_states();
    let dim = 2 * (m - 1) * states;
    if dim > EIGEN_DIM_CAP {
        return Err(Error::DimensionCap {
            dimension: dim,
            cap: EIGEN_DIM_CAP,
        });
    }
    let half = states * m;
    let free = |full: &[f64]| -> Vec<f64> {
        full.chunks(m).flat_map(|row| row[..m - 1].to_vec()).collect()
    };
    let expand = |theta: &[f64]| -> Vec<f64> {
        theta
            .chunks(m - 1)
            .flat_map(|head| {
                let mut row = head.to_vec();
                row.push(1.0 - head.iter().sum::<f64>());
                row
            })
            .collect()
    };
    let mut z0 = x.probs().to_vec();
    z0.extend_from_slice(y.probs());
    let theta0 = free(&z0);
    let field = |theta: &[f64], out: &mut [f64]| -> Result<()> {
        let z = expand(theta);
        let mut dz = vec![0.0; 2 * half];
        strategy_field(game, solver, FieldKind::Mmga(GradientMode::Exact), &z, &mut dz)?;
        out.copy_from_slice(&free(&dz));
        Ok(())
    };
    spectrum_summary(jacobian(field, &theta0, step)?, quantity)
}

/// Diagnostics recorded alongside each trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    pub u_st: f64,
    pub v_st: f64,
    pub kl_x: Option<f64>,
    pub kl_y: Option<f64>,
    pub min_prob: f64,
    pub distance: Option<f64>,
    pub max_eig: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_examples() {
        assert_eq!(logit(0.5).unwrap(), 0.0);
        assert!((logit(0.8).unwrap() - 4f64.ln()).abs() < 1e-15);
        let l = logit(0.8).unwrap();
        assert!((1.0 / (1.0 + (-l).exp()) - 0.8).abs() < 1e-15);
        assert!((logit(0.3).unwrap() + logit(0.7).unwrap()).abs() < 1e-15);
        assert_eq!(logit(0.0), Err(Error::BoundaryInput(0.0)));
        assert_eq!(logit(1.0), Err(Error::BoundaryInput(1.0)));
    }

    #[test]
    fn distance_examples() {
        let a = [0.801, 0.8, 0.8, 0.8];
        let b = [0.8; 4];
        assert_eq!(strategy_distance(&b, &b).unwrap(), 0.0);
        let expected = ((0.801f64 / 0.199).ln() - 4f64.ln()) / 4.0;
        let d = strategy_distance(&a, &b).unwrap();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 1.566e-3).abs() < 1e-6);
    }

    #[test]
    fn kl_examples() {
        let nash = Strategy::uniform(2, 4);
        assert_eq!(kl_from_nash(&nash, &nash).unwrap(), 0.0);
        let x = Strategy::constant(&[0.8, 0.2], 4).unwrap();
        let expected = 0.5 * (0.5f64 / 0.8).ln() + 0.5 * (0.5f64 / 0.2).ln();
        assert!((kl_from_nash(&x, &nash).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.2231).abs() < 1e-4);
    }

    #[test]
    fn stage_equilibria() {
        let rps = GameSpec::rock_paper_scissors(1).unwrap();
        for p in [Player::X, Player::Y] {
            let mix = zero_memory_nash(&rps, p).unwrap();
            assert!(mix.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));
        }
        let g = GameSpec::zero_sum(2, 1, vec![3.0, -1.0, -1.0, 1.0]).unwrap();
        let x = zero_memory_nash(&g, Player::X).unwrap();
        let y = zero_memory_nash(&g, Player::Y).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((y[0] - 1.0 / 3.0).abs() < 1e-14);
        let dominated = GameSpec::zero_sum(2, 1, vec![2.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(zero_memory_nash(&dominated, Player::Y).is_err());
    }

    #[test]
    fn linear_field_spectra() {
        let zero = |_: &[f64], out: &mut [f64]| -> Result<()> {
            out.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        };
        assert_eq!(max_eigenvalue(zero, &[0.1; 6], 1e-6, EigenQuantity::MaxRealPart).unwrap(), 0.0);
        // rotation blocks delta' = eps / 4, eps' = -delta / 4
        let rot = |z: &[f64], out: &mut [f64]| -> Result<()> {
            for i in 0..4 {
                out[i] = z[i + 4] / 4.0;
                out[i + 4] = -z[i] / 4.0;
            }
            Ok(())
        };
        let z = [0.01; 8];
        assert!(max_eigenvalue(rot, &z, 1e-6, EigenQuantity::MaxRealPart).unwrap().abs() < 1e-6);
        assert!((max_eigenvalue(rot, &z, 1e-6, EigenQuantity::MaxModulus).unwrap() - 0.25).abs() < 1e-6);
        let diag = |z: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = -2.0 * z[0] + z[1];
            out[1] = 0.5 * z[1];
            Ok(())
        };
        assert!((max_eigenvalue(diag, &[0.0, 0.0], 1e-6, EigenQuantity::MaxRealPart).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mmga_jacobian_at_matching_pennies_nash() {
        let g = GameSpec::matching_pennies(1).unwrap();
        let uni = Strategy::uniform(2, 4);
        let solver = Solver::direct();
        let re = max_jacobian_eigenvalue(&g, &uni, &uni, &solver, 1e-6, EigenQuantity::MaxRealPart).unwrap();
        let modulus = max_jacobian_eigenvalue(&g, &uni, &uni, &solver, 1e-6, EigenQuantity::MaxModulus).unwrap();
        assert!(re.abs() < 1e-6, "{re}");
        assert!((modulus - 0.25).abs() < 1e-6, "{modulus}");
    }
}
