//! Learning dynamics in two-player multi-memory repeated games.
//!
//! Players condition their mixed actions on the last `n` rounds of joint play. The
//! repeated game is a Markov chain over memorized states, and learning follows either
//! multi-memory replicator dynamics (MMRD) or multi-memory gradient ascent (MMGA) on the
//! stationary payoff. The crate provides:
//!
//! - [`game`]: games, state encoding, payoff vectors and strategies;
//! - [`markov`]: the transition matrix, stationary distributions, the expected future
//!   payoff and payoff gradients;
//! - [`dynamics`] and [`integrator`]: discrete learning steps, continuous vector fields
//!   and a fixed-step RK4 integrator;
//! - [`perturbation`]: the Nash equilibrium of one-memory two-action zero-sum games and
//!   the low-order expansion of the dynamics around it;
//! - [`metrics`]: logit distance, KL divergence from Nash and Jacobian spectra;
//! - [`experiment`]: config-driven experiment runs, presets, CSV output and verification
//!   suites.

pub mod dual;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod integrator;
pub mod markov;
pub mod metrics;
pub mod perturbation;

pub use error::{Error, Result};
pub use game::{normalize, GameSpec, Player, StateIndex, Strategy};
pub use markov::{Solver, StationaryMethod, TransitionMatrix};
