//! Runs one configured experiment and records its trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, ExperimentConfig, InitSpec, ReferenceSpec};
use crate::dynamics::{mmga_step, mmrd_step, strategy_field, FieldKind, GradientMode, JointState};
use crate::error::{Error, Result};
use crate::game::{normalize, GameSpec, Player, Strategy};
use crate::integrator::{step_count, Rk4};
use crate::markov::Solver;
use crate::metrics::{kl_from_nash, max_jacobian_eigenvalue, strategy_distance, zero_memory_nash, MetricSample};
use crate::perturbation::{nash_2x1, payoffs_2x1, DeviationState, ExpansionConstants};

const INIT_STREAM: u64 = 1;

/// Strategies at one recorded time, state-major and action-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub reference: Option<(Vec<f64>, Vec<f64>)>,
    pub metrics: MetricSample,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.metrics.t
    }
}

/// Strategies pulled back to the interior floor after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampEvent {
    pub step: usize,
    pub t: f64,
    pub reference: bool,
    pub player: Player,
    pub states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Complete,
    Partial { steps_taken: usize, error: Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub m: usize,
    pub num_states: usize,
    pub has_kl: bool,
    pub has_reference: bool,
    pub has_eigen: bool,
    pub samples: Vec<Sample>,
    pub clamp_events: Vec<ClampEvent>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::t).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        let coords = |prefix: &str, action: char| -> Vec<String> {
            (0..self.num_states)
                .flat_map(|s| (0..self.m).map(move |a| format!("{prefix}_s{s}_{action}{a}")))
                .collect()
        };
        h.extend(coords("x", 'a'));
        h.extend(coords("y", 'b'));
        if self.has_reference {
            h.extend(coords("ref_x", 'a'));
            h.extend(coords("ref_y", 'b'));
        }
        h.extend(["u_st".to_string(), "v_st".to_string()]);
        if self.has_kl {
            h.extend(["kl_x".to_string(), "kl_y".to_string()]);
        }
        h.push("min_prob".to_string());
        if self.has_reference {
            h.push("distance".to_string());
        }
        if self.has_eigen {
            h.push("max_eig".to_string());
        }
        h
    }

    /// One numeric row per sample, in header order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                let mut row = vec![s.metrics.t];
                row.extend(&s.x);
                row.extend(&s.y);
                if let Some((rx, ry)) = &s.reference {
                    row.extend(rx);
                    row.extend(ry);
                }
                row.extend([s.metrics.u_st, s.metrics.v_st]);
                if self.has_kl {
                    row.push(s.metrics.kl_x.unwrap_or(f64::NAN));
                    row.push(s.metrics.kl_y.unwrap_or(f64::NAN));
                }
                row.push(s.metrics.min_prob);
                if self.has_reference {
                    row.push(s.metrics.distance.unwrap_or(f64::NAN));
                }
                if self.has_eigen {
                    row.push(s.metrics.max_eig.unwrap_or(f64::NAN));
                }
                row
            })
            .collect()
    }

    /// Sidecar log: clamp events, then the final status line.
    pub fn log_text(&self) -> String {
        let mut out = String::new();
        for e in &self.clamp_events {
            out.push_str(&format!(
                "clamp step={} t={} run={} player={:?} states={:?}\n",
                e.step,
                e.t,
                if e.reference { "reference" } else { "main" },
                e.player,
                e.states
            ));
        }
        match &self.status {
            RunStatus::Complete => out.push_str(&format!("status complete samples={}\n", self.samples.len())),
            RunStatus::Partial { steps_taken, error } => out.push_str(&format!(
                "status partial steps={steps_taken} samples={} error={error}\n",
                self.samples.len()
            )),
        }
        out
    }
}

/// One advancing trajectory.
enum Engine {
    Mmga {
        x: Strategy,
        y: Strategy,
        eta: f64,
        gamma: f64,
    },
    Mmrd {
        js: JointState,
        eta: f64,
    },
    Flow {
        z: Vec<f64>,
        rk: Rk4,
        kind: FieldKind,
        h: f64,
    },
    Approx {
        z: Vec<f64>,
        rk: Rk4,
        consts: ExpansionConstants,
        order: usize,
        h: f64,
    },
}

impl Engine {
    fn new(cfg: &ExperimentConfig, x: Strategy, y: Strategy) -> Result<Self> {
        let game = &cfg.game;
        Ok(match cfg.algorithm {
            Algorithm::Mmga => Engine::Mmga {
                x,
                y,
                eta: cfg.eta.expect("validated"),
                gamma: cfg.gamma.expect("validated"),
            },
            Algorithm::Mmrd => Engine::Mmrd {
                js: JointState::new(game, x, y, cfg.seed)?,
                eta: cfg.eta.expect("validated"),
            },
            Algorithm::ContinuousMmga | Algorithm::ContinuousMmrd => {
                let kind = match cfg.algorithm {
                    Algorithm::ContinuousMmrd => FieldKind::Mmrd,
                    _ if cfg.fd_gradient => FieldKind::Mmga(GradientMode::FiniteDifference {
                        gamma: cfg.gamma.expect("validated"),
                    }),
                    _ => FieldKind::Mmga(GradientMode::Exact),
                };
                let mut z = x.into_probs();
                z.extend(y.into_probs());
                Engine::Flow {
                    rk: Rk4::new(z.len()),
                    z,
                    kind,
                    h: cfg.step_size,
                }
            }
            Algorithm::Approx(order) => {
                let consts = ExpansionConstants::new(payoffs_2x1(game)?)?;
                let d = DeviationState::from_strategies(
                    first_four(&x),
                    first_four(&y),
                    &consts.nash,
                );
                Engine::Approx {
                    z: d.to_vec(),
                    rk: Rk4::new(8),
                    consts,
                    order,
                    h: cfg.step_size,
                }
            }
        })
    }

    /// Advances one step; returns the players whose strategies had to be clamped.
    fn advance(&mut self, game: &GameSpec, solver: &Solver) -> Result<Vec<(Player, Vec<usize>)>> {
        let floor = solver.interior_floor;
        let mut events = Vec::new();
        match self {
            Engine::Mmga { x, y, eta, gamma } => {
                let (mut nx, mut ny) = mmga_step(x, y, game, *eta, *gamma, solver)?;
                clamp_both(&mut nx, &mut ny, floor, &mut events);
                *x = nx;
                *y = ny;
            }
            Engine::Mmrd { js, eta } => {
                mmrd_step(js, game, *eta, solver)?;
                clamp_both(&mut js.x, &mut js.y, floor, &mut events);
            }
            Engine::Flow { z, rk, kind, h } => {
                let kind = *kind;
                let mut field = |z: &[f64], out: &mut [f64]| strategy_field(game, solver, kind, z, out);
                rk.step(&mut field, z, *h)?;
                let half = z.len() / 2;
                let m = game.m();
                for (player, part) in [(Player::X, 0..half), (Player::Y, half..2 * half)] {
                    let mut s = Strategy::from_probs_unchecked(m, z[part.clone()].to_vec());
                    let touched = s.clamp_interior(floor);
                    if !touched.is_empty() {
                        z[part].copy_from_slice(s.probs());
                        events.push((player, touched));
                    }
                }
            }
            Engine::Approx {
                z,
                rk,
                consts,
                order,
                h,
            } => {
                let (c, k) = (*consts, *order);
                let mut field = |z: &[f64], out: &mut [f64]| -> Result<()> {
                    let f = c.approx_field(&DeviationState::from_slice(z)?, k)?;
                    out.copy_from_slice(&f.to_vec());
                    Ok(())
                };
                rk.step(&mut field, z, *h)?;
                let centers = [c.nash.x_star, c.nash.y_star];
                for (p, player) in [Player::X, Player::Y].into_iter().enumerate() {
                    let mut touched = Vec::new();
                    for i in 0..4 {
                        let v = centers[p] + z[4 * p + i];
                        if v < floor || v > 1.0 - floor {
                            z[4 * p + i] = v.clamp(floor, 1.0 - floor) - centers[p];
                            touched.push(i);
                        }
                    }
                    if !touched.is_empty() {
                        events.push((player, touched));
                    }
                }
            }
        }
        Ok(events)
    }

    fn strategies(&self, game: &GameSpec) -> (Strategy, Strategy) {
        match self {
            Engine::Mmga { x, y, .. } => (x.clone(), y.clone()),
            Engine::Mmrd { js, .. } => (js.x.clone(), js.y.clone()),
            Engine::Flow { z, .. } => {
                let half = z.len() / 2;
                (
                    Strategy::from_probs_unchecked(game.m(), z[..half].to_vec()),
                    Strategy::from_probs_unchecked(game.m(), z[half..].to_vec()),
                )
            }
            Engine::Approx { z, consts, .. } => {
                let d = DeviationState::from_slice(z).expect("8 coordinates");
                let (x, y) = d.to_strategies(&consts.nash);
                let two = |v: [f64; 4]| {
                    Strategy::from_probs_unchecked(2, v.iter().flat_map(|&p| [p, 1.0 - p]).collect())
                };
                (two(x), two(y))
            }
        }
    }
}

fn clamp_both(x: &mut Strategy, y: &mut Strategy, floor: f64, events: &mut Vec<(Player, Vec<usize>)>) {
    for (player, s) in [(Player::X, x), (Player::Y, y)] {
        if s.min_prob() < floor {
            events.push((player, s.clamp_interior(floor)));
        }
    }
}

fn first_four(s: &Strategy) -> [f64; 4] {
    let v = s.first_action();
    [v[0], v[1], v[2], v[3]]
}

/// Initial strategies of the main run.
pub fn initial_strategies(cfg: &ExperimentConfig) -> Result<(Strategy, Strategy)> {
    let game = &cfg.game;
    let n = game.num_states();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(INIT_STREAM);
    match &cfg.init {
        InitSpec::Constant { x, y } => Ok((Strategy::constant(x, n)?, Strategy::constant(y, n)?)),
        InitSpec::Explicit { x, y } => Ok((normalize(game.m(), x)?, normalize(game.m(), y)?)),
        InitSpec::Random => {
            let len = game.m() * n;
            let mut draw = || -> Vec<f64> { (0..len).map(|_| rng.random_range(0.25..1.0)).collect() };
            let x = draw();
            let y = draw();
            Ok((normalize(game.m(), &x)?, normalize(game.m(), &y)?))
        }
        InitSpec::NashPlusDelta {
            delta,
            epsilon,
            range,
            norm,
        } => {
            let nash = nash_2x1(payoffs_2x1(game)?)?;
            let delta = delta.unwrap_or_else(|| std::array::from_fn(|_| rng.random_range(-range..=*range)));
            let epsilon = epsilon.unwrap_or(delta);
            let mut d = DeviationState::new(delta, epsilon);
            if let Some(target) = norm {
                let current = d.delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if current > 0.0 {
                    d = d.scaled(target / current);
                }
            }
            log::info!("initial deviation delta={:?} epsilon={:?}", d.delta, d.epsilon);
            let (x, y) = d.to_strategies(&nash);
            Ok((Strategy::from_first_action(&x)?, Strategy::from_first_action(&y)?))
        }
    }
}

/// Replaces one entry of the main initial condition, rescaling the rest of its row.
pub fn apply_reference(spec: &ReferenceSpec, x: &Strategy, y: &Strategy) -> Result<(Strategy, Strategy)> {
    let perturb = |s: &Strategy| -> Result<Strategy> {
        let m = s.m();
        let mut probs = s.probs().to_vec();
        let row = &mut probs[spec.state * m..(spec.state + 1) * m];
        let rest = 1.0 - row[spec.action];
        for (a, p) in row.iter_mut().enumerate() {
            *p = if a == spec.action {
                spec.value
            } else if rest > 0.0 {
                *p * (1.0 - spec.value) / rest
            } else {
                (1.0 - spec.value) / (m - 1) as f64
            };
        }
        Strategy::from_probs(m, probs)
    };
    Ok(match spec.player {
        Player::X => (perturb(x)?, y.clone()),
        Player::Y => (x.clone(), perturb(y)?),
    })
}

/// Equilibrium profiles used for the KL columns, if the game has one.
pub fn nash_profiles(cfg: &ExperimentConfig) -> Option<(Strategy, Strategy)> {
    let n = cfg.game.num_states();
    let rows = match &cfg.nash {
        Some((x, y)) => Some((x.clone(), y.clone())),
        None => match (
            zero_memory_nash(&cfg.game, Player::X),
            zero_memory_nash(&cfg.game, Player::Y),
        ) {
            (Ok(x), Ok(y)) => Some((x, y)),
            (Err(e), _) | (_, Err(e)) => {
                log::info!("no KL columns: {e}");
                None
            }
        },
    }?;
    Some((Strategy::constant(&rows.0, n).ok()?, Strategy::constant(&rows.1, n).ok()?))
}

pub fn solver_for(cfg: &ExperimentConfig) -> Solver {
    Solver {
        stationary: cfg.stationary,
        ..Solver::default()
    }
}

struct Recorder<'a> {
    cfg: &'a ExperimentConfig,
    solver: Solver,
    nash: Option<(Strategy, Strategy)>,
}

impl Recorder<'_> {
    fn sample(&self, t: f64, main: &Engine, reference: Option<&Engine>) -> Result<Sample> {
        let game = &self.cfg.game;
        let (x, y) = main.strategies(game);
        let state = self.solver.analyze(game, &x, &y)?;
        let dot = |u: Vec<f64>| state.stationary.p.iter().zip(u).map(|(p, u)| p * u).sum::<f64>();
        let u_st = dot(game.payoff_vector(Player::X));
        let v_st = dot(game.payoff_vector(Player::Y));
        let (kl_x, kl_y) = match &self.nash {
            Some((nx, ny)) => (Some(kl_from_nash(&x, nx)?), Some(kl_from_nash(&y, ny)?)),
            None => (None, None),
        };
        let reference = reference.map(|r| r.strategies(game));
        let distance = match &reference {
            Some((rx, _)) => Some(strategy_distance(x.probs(), rx.probs())?),
            None => None,
        };
        let max_eig = match self.cfg.eigen {
            Some(q) => Some(max_jacobian_eigenvalue(game, &x, &y, &self.solver, self.cfg.eigen_step, q)?),
            None => None,
        };
        Ok(Sample {
            metrics: MetricSample {
                t,
                u_st,
                v_st,
                kl_x,
                kl_y,
                min_prob: x.min_prob(),
                distance,
                max_eig,
            },
            x: x.into_probs(),
            y: y.into_probs(),
            reference: reference.map(|(rx, ry)| (rx.into_probs(), ry.into_probs())),
        })
    }
}

/// Runs `cfg` to `t_max`. Setup problems are errors; a numerical failure mid-run yields a
/// partial trajectory with `status` set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let game = &cfg.game;
    let solver = solver_for(cfg);
    let (x0, y0) = initial_strategies(cfg)?;
    let reference_init = cfg
        .reference
        .as_ref()
        .map(|r| apply_reference(r, &x0, &y0))
        .transpose()?;
    let mut main = Engine::new(cfg, x0, y0)?;
    let mut reference = reference_init
        .map(|(x, y)| Engine::new(cfg, x, y))
        .transpose()?;
    let recorder = Recorder {
        cfg,
        solver,
        nash: nash_profiles(cfg),
    };
    let mut traj = Trajectory {
        m: game.m(),
        num_states: game.num_states(),
        has_kl: recorder.nash.is_some(),
        has_reference: reference.is_some(),
        has_eigen: cfg.eigen.is_some(),
        samples: Vec::new(),
        clamp_events: Vec::new(),
        status: RunStatus::Complete,
    };
    let dt = cfg.time_step();
    let steps = step_count(cfg.t_max, dt);
    log::info!(
        "running {} for {steps} steps of {dt} (m={}, n={}, seed={})",
        cfg.algorithm.name(),
        game.m(),
        game.n(),
        cfg.seed
    );
    match recorder.sample(0.0, &main, reference.as_ref()) {
        Ok(s) => traj.samples.push(s),
        Err(error) => {
            traj.status = RunStatus::Partial { steps_taken: 0, error };
            return Ok(traj);
        }
    }
    for k in 1..=steps {
        let t = k as f64 * dt;
        let mut step = || -> Result<()> {
            for (player, states) in main.advance(game, &solver)? {
                traj.clamp_events.push(ClampEvent { step: k, t, reference: false, player, states });
            }
            if let Some(r) = reference.as_mut() {
                for (player, states) in r.advance(game, &solver)? {
                    traj.clamp_events.push(ClampEvent { step: k, t, reference: true, player, states });
                }
            }
            Ok(())
        };
        let result = step().and_then(|_| {
            if k % cfg.record_every == 0 || k == steps {
                traj.samples.push(recorder.sample(t, &main, reference.as_ref())?);
            }
            Ok(())
        });
        if let Err(error) = result {
            log::warn!("run stopped at step {k}: {error}");
            traj.status = RunStatus::Partial {
                steps_taken: k - 1,
                error,
            };
            break;
        }
    }
    Ok(traj)
}
