//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # one-memory matching pennies, discretized MMGA
//! game.m = 2
//! game.n = 1
//! game.payoff_x = 1 -1 -1 1
//! run.algorithm = mmga
//! run.eta = 1e-3
//! run.gamma = 1e-6
//! run.t_max = 420
//! init.kind = constant
//! init.x = 0.8
//! init.y = 0.8
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::game::{GameSpec, Player};
use crate::markov::{PowerIteration, StationaryMethod};
use crate::metrics::EigenQuantity;
use crate::perturbation::{assumption1_check, payoffs_2x1};

/// A configuration problem tied to one key (or to the file as a whole).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Mmrd,
    Mmga,
    ContinuousMmga,
    ContinuousMmrd,
    Approx(usize),
}

impl Algorithm {
    pub fn name(&self) -> String {
        match self {
            Algorithm::Mmrd => "mmrd".into(),
            Algorithm::Mmga => "mmga".into(),
            Algorithm::ContinuousMmga => "continuous-mmga".into(),
            Algorithm::ContinuousMmrd => "continuous-mmrd".into(),
            Algorithm::Approx(k) => format!("approx-{k}"),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Algorithm::Mmrd | Algorithm::Mmga)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mmrd" => Ok(Algorithm::Mmrd),
            "mmga" => Ok(Algorithm::Mmga),
            "continuous-mmga" => Ok(Algorithm::ContinuousMmga),
            "continuous-mmrd" => Ok(Algorithm::ContinuousMmrd),
            "approx-1" => Ok(Algorithm::Approx(1)),
            "approx-2" => Ok(Algorithm::Approx(2)),
            "approx-3" => Ok(Algorithm::Approx(3)),
            other => Err(format!(
                "unknown algorithm `{other}` (expected mmrd, mmga, continuous-mmga, \
                 continuous-mmrd, approx-1, approx-2 or approx-3)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// One mixed action per player, repeated at every state.
    Constant { x: Vec<f64>, y: Vec<f64> },
    /// Full state-major tables.
    Explicit { x: Vec<f64>, y: Vec<f64> },
    /// Nash point plus deviations; unspecified deviations are drawn with `delta_i = epsilon_i`
    /// uniform in `[-range, range]`, optionally rescaled to max-norm `norm`.
    NashPlusDelta {
        delta: Option<[f64; 4]>,
        epsilon: Option<[f64; 4]>,
        range: f64,
        norm: Option<f64>,
    },
    /// Entries uniform in `[0.25, 1)`, then row-normalized.
    Random,
}

/// The reference run starts from the main initial condition with one entry replaced.
/// The rest of that row is rescaled to keep it normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSpec {
    pub player: Player,
    pub state: usize,
    pub action: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub algorithm: Algorithm,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    /// Continuous MMGA differentiates by finite differences with `gamma` when set.
    pub fd_gradient: bool,
    pub step_size: f64,
    pub t_max: f64,
    pub record_every: usize,
    pub seed: u64,
    pub stationary: StationaryMethod,
    pub eigen: Option<EigenQuantity>,
    pub eigen_step: f64,
    pub nash: Option<(Vec<f64>, Vec<f64>)>,
    pub init: InitSpec,
    pub reference: Option<ReferenceSpec>,
    pub output: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "game.m",
    "game.n",
    "game.payoff_x",
    "game.payoff_y",
    "game.zero_sum",
    "game.nash_x",
    "game.nash_y",
    "run.algorithm",
    "run.eta",
    "run.gamma",
    "run.gradient",
    "run.step_size",
    "run.t_max",
    "run.record_every",
    "run.seed",
    "run.stationary",
    "run.eigen",
    "run.eigen_step",
    "init.kind",
    "init.x",
    "init.y",
    "init.delta",
    "init.epsilon",
    "init.delta_range",
    "init.delta_norm",
    "reference.kind",
    "reference.player",
    "reference.state",
    "reference.action",
    "reference.value",
    "output.path",
];

struct Entries {
    values: BTreeMap<String, String>,
}

impl Entries {
    fn read(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, found `{line}`"),
                ));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::new(key, "unknown key"));
            }
            if values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::new(key, "given more than once"));
            }
        }
        Ok(Self { values })
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.str(key)
            .ok_or_else(|| ConfigError::new(key, "required but missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError::new(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.str(key)
            .map(|v| {
                v.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| ConfigError::new(key, format!("cannot parse `{t}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parse::<f64>(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(ConfigError::new(key, format!("must be positive, got {v}")))
            }
            other => Ok(other),
        }
    }

    fn forbid(&self, key: &str, why: &str) -> Result<(), ConfigError> {
        if self.has(key) {
            return Err(ConfigError::new(key, format!("not used {why}")));
        }
        Ok(())
    }
}

fn four(key: &str, v: Vec<f64>) -> Result<[f64; 4], ConfigError> {
    v.try_into()
        .map_err(|v: Vec<f64>| ConfigError::new(key, format!("expected 4 values, got {}", v.len())))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let e = Entries::read(text)?;
        let game = parse_game(&e)?;
        let algorithm: Algorithm = e.parse("run.algorithm")?.ok_or_else(|| {
            ConfigError::new("run.algorithm", "required but missing")
        })?;
        let alg_name = algorithm.name();
        let for_alg = format!("by algorithm {alg_name}");

        let eta = e.positive("run.eta")?;
        let gamma = e.positive("run.gamma")?;
        let mut fd_gradient = false;
        let mut step_size = 1e-2;
        if algorithm.is_discrete() {
            if eta.is_none() {
                return Err(ConfigError::new("run.eta", format!("required by algorithm {alg_name}")));
            }
            e.forbid("run.step_size", &for_alg)?;
            e.forbid("run.gradient", &for_alg)?;
            match algorithm {
                Algorithm::Mmga if gamma.is_none() => {
                    return Err(ConfigError::new("run.gamma", "required by algorithm mmga"));
                }
                Algorithm::Mmrd => e.forbid("run.gamma", &for_alg)?,
                _ => {}
            }
        } else {
            e.forbid("run.eta", &for_alg)?;
            if let Some(h) = e.positive("run.step_size")? {
                step_size = h;
            }
            if algorithm == Algorithm::ContinuousMmga {
                match e.str("run.gradient").unwrap_or("exact") {
                    "exact" => e.forbid("run.gamma", "with run.gradient = exact")?,
                    "fd" => {
                        if gamma.is_none() {
                            return Err(ConfigError::new("run.gamma", "required by run.gradient = fd"));
                        }
                        fd_gradient = true;
                    }
                    other => {
                        return Err(ConfigError::new(
                            "run.gradient",
                            format!("expected exact or fd, got `{other}`"),
                        ))
                    }
                }
            } else {
                e.forbid("run.gradient", &for_alg)?;
                e.forbid("run.gamma", &for_alg)?;
            }
        }
        if let Algorithm::Approx(_) = algorithm {
            approx_game(&game, "run.algorithm")?;
        }

        let t_max: f64 = e
            .parse("run.t_max")?
            .ok_or_else(|| ConfigError::new("run.t_max", "required but missing"))?;
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(ConfigError::new("run.t_max", format!("must be >= 0, got {t_max}")));
        }
        let record_every: usize = e.parse("run.record_every")?.unwrap_or(1);
        if record_every == 0 {
            return Err(ConfigError::new("run.record_every", "must be at least 1"));
        }
        let seed: u64 = e.parse("run.seed")?.unwrap_or(0);
        let stationary = match e.str("run.stationary").unwrap_or("power") {
            "power" => StationaryMethod::Power(PowerIteration::default()),
            "direct" => StationaryMethod::Direct,
            other => {
                return Err(ConfigError::new(
                    "run.stationary",
                    format!("expected power or direct, got `{other}`"),
                ))
            }
        };
        let eigen = match e.str("run.eigen").unwrap_or("none") {
            "none" => None,
            "max-real" => Some(EigenQuantity::MaxRealPart),
            "modulus" => Some(EigenQuantity::MaxModulus),
            other => {
                return Err(ConfigError::new(
                    "run.eigen",
                    format!("expected none, max-real or modulus, got `{other}`"),
                ))
            }
        };
        if eigen.is_some() {
            let dim = 2 * (game.m() - 1) * game.num_states();
            if dim > crate::metrics::EIGEN_DIM_CAP {
                return Err(ConfigError::new(
                    "run.eigen",
                    format!(
                        "Jacobian dimension {dim} exceeds the cap of {}",
                        crate::metrics::EIGEN_DIM_CAP
                    ),
                ));
            }
        }
        let eigen_step = e.positive("run.eigen_step")?.unwrap_or(1e-6);

        let nash = match (e.list("game.nash_x")?, e.list("game.nash_y")?) {
            (None, None) => None,
            (Some(x), Some(y)) => {
                for (key, row) in [("game.nash_x", &x), ("game.nash_y", &y)] {
                    check_row(key, row, game.m())?;
                }
                Some((x, y))
            }
            (Some(_), None) => return Err(ConfigError::new("game.nash_y", "required with game.nash_x")),
            (None, Some(_)) => return Err(ConfigError::new("game.nash_x", "required with game.nash_y")),
        };

        let init = parse_init(&e, &game)?;
        let reference = parse_reference(&e, &game)?;
        let output = e.str("output.path").map(PathBuf::from);

        Ok(Self {
            game,
            algorithm,
            eta,
            gamma,
            fd_gradient,
            step_size,
            t_max,
            record_every,
            seed,
            stationary,
            eigen,
            eigen_step,
            nash,
            init,
            reference,
            output,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new(&path.display().to_string(), format!("cannot read: {e}"))
        })?;
        Self::parse(&text)
    }

    /// Time advanced by one step of the configured algorithm.
    pub fn time_step(&self) -> f64 {
        if self.algorithm.is_discrete() {
            self.eta.expect("validated")
        } else {
            self.step_size
        }
    }
}

fn parse_game(e: &Entries) -> Result<GameSpec, ConfigError> {
    let m: usize = e
        .parse("game.m")?
        .ok_or_else(|| ConfigError::new("game.m", "required but missing"))?;
    if m < 2 {
        return Err(ConfigError::new("game.m", format!("must be at least 2, got {m}")));
    }
    let n: usize = e.parse("game.n")?.unwrap_or(1);
    if n < 1 {
        return Err(ConfigError::new("game.n", "must be at least 1"));
    }
    let px = e
        .list("game.payoff_x")?
        .ok_or_else(|| ConfigError::new("game.payoff_x", "required but missing"))?;
    if px.len() != m * m {
        return Err(ConfigError::new(
            "game.payoff_x",
            format!("expected {} values (row-major {m}x{m}), got {}", m * m, px.len()),
        ));
    }
    let zero_sum: Option<bool> = e.parse("game.zero_sum")?;
    let game = match e.list("game.payoff_y")? {
        None => {
            if zero_sum == Some(false) {
                return Err(ConfigError::new(
                    "game.payoff_y",
                    "required when game.zero_sum = false",
                ));
            }
            GameSpec::zero_sum(m, n, px)
        }
        Some(py) => {
            if py.len() != m * m {
                return Err(ConfigError::new(
                    "game.payoff_y",
                    format!("expected {} values, got {}", m * m, py.len()),
                ));
            }
            let g = GameSpec::general(m, n, px, py);
            if let Ok(g) = &g {
                if zero_sum == Some(true) && !g.is_zero_sum() {
                    return Err(ConfigError::new(
                        "game.zero_sum",
                        "payoff_y is not the negation of payoff_x",
                    ));
                }
            }
            g
        }
    };
    game.map_err(|err| ConfigError::new("game", err.to_string()))
}

fn approx_game(game: &GameSpec, key: &str) -> Result<[f64; 4], ConfigError> {
    let u = payoffs_2x1(game).map_err(|e| ConfigError::new(key, e.to_string()))?;
    if !assumption1_check(u) {
        return Err(ConfigError::new(
            key,
            format!("payoffs {u:?} have a dominant pure action; the Nash expansion needs u1, u4 both above or both below u2, u3"),
        ));
    }
    Ok(u)
}

fn check_row(key: &str, row: &[f64], m: usize) -> Result<(), ConfigError> {
    if row.len() != m {
        return Err(ConfigError::new(key, format!("expected {m} values, got {}", row.len())));
    }
    if row.iter().any(|p| !(*p > 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(ConfigError::new(key, "must be positive and sum to 1"));
    }
    Ok(())
}

/// A constant row: `m` probabilities, or for two actions a single first-action probability.
fn constant_row(e: &Entries, key: &str, m: usize) -> Result<Vec<f64>, ConfigError> {
    let v = e
        .list(key)?
        .ok_or_else(|| ConfigError::new(key, "required by init.kind = constant"))?;
    let row = if m == 2 && v.len() == 1 { vec![v[0], 1.0 - v[0]] } else { v };
    check_row(key, &row, m)?;
    Ok(row)
}

fn explicit_table(e: &Entries, key: &str, game: &GameSpec) -> Result<Vec<f64>, ConfigError> {
    let (m, states) = (game.m(), game.num_states());
    let v = e
        .list(key)?
        .ok_or_else(|| ConfigError::new(key, "required by init.kind = explicit"))?;
    let table = if m == 2 && v.len() == states {
        v.iter().flat_map(|&p| [p, 1.0 - p]).collect()
    } else if v.len() == m * states {
        v
    } else {
        return Err(ConfigError::new(
            key,
            format!("expected {} values (or {states} first-action values for m = 2), got {}", m * states, v.len()),
        ));
    };
    for (s, row) in table.chunks(m).enumerate() {
        check_row(key, row, m).map_err(|err| ConfigError::new(key, format!("state {s}: {}", err.message)))?;
    }
    Ok(table)
}

fn parse_init(e: &Entries, game: &GameSpec) -> Result<InitSpec, ConfigError> {
    let kind = e.required("init.kind")?;
    let only = |keys: &[&str]| -> Result<(), ConfigError> {
        for key in [
            "init.x",
            "init.y",
            "init.delta",
            "init.epsilon",
            "init.delta_range",
            "init.delta_norm",
        ] {
            if !keys.contains(&key) {
                e.forbid(key, &format!("with init.kind = {kind}"))?;
            }
        }
        Ok(())
    };
    match kind {
        "constant" => {
            only(&["init.x", "init.y"])?;
            Ok(InitSpec::Constant {
                x: constant_row(e, "init.x", game.m())?,
                y: constant_row(e, "init.y", game.m())?,
            })
        }
        "explicit" => {
            only(&["init.x", "init.y"])?;
            Ok(InitSpec::Explicit {
                x: explicit_table(e, "init.x", game)?,
                y: explicit_table(e, "init.y", game)?,
            })
        }
        "nash-plus-delta" => {
            only(&["init.delta", "init.epsilon", "init.delta_range", "init.delta_norm"])?;
            approx_game(game, "init.kind")?;
            let delta = e.list("init.delta")?.map(|v| four("init.delta", v)).transpose()?;
            let epsilon = e.list("init.epsilon")?.map(|v| four("init.epsilon", v)).transpose()?;
            let range = e.positive("init.delta_range")?.unwrap_or(0.05);
            let norm = e.positive("init.delta_norm")?;
            Ok(InitSpec::NashPlusDelta {
                delta,
                epsilon,
                range,
                norm,
            })
        }
        "random" => {
            only(&[])?;
            Ok(InitSpec::Random)
        }
        other => Err(ConfigError::new(
            "init.kind",
            format!("expected constant, explicit, nash-plus-delta or random, got `{other}`"),
        )),
    }
}

fn parse_reference(e: &Entries, game: &GameSpec) -> Result<Option<ReferenceSpec>, ConfigError> {
    let keys = ["reference.player", "reference.state", "reference.action", "reference.value"];
    match e.str("reference.kind").unwrap_or("none") {
        "none" => {
            for key in keys {
                e.forbid(key, "without reference.kind = perturb-entry")?;
            }
            Ok(None)
        }
        "perturb-entry" => {
            let player = match e.str("reference.player").unwrap_or("x") {
                "x" => Player::X,
                "y" => Player::Y,
                other => {
                    return Err(ConfigError::new(
                        "reference.player",
                        format!("expected x or y, got `{other}`"),
                    ))
                }
            };
            let state: usize = e
                .parse("reference.state")?
                .ok_or_else(|| ConfigError::new("reference.state", "required but missing"))?;
            if state >= game.num_states() {
                return Err(ConfigError::new(
                    "reference.state",
                    format!("must be below {}", game.num_states()),
                ));
            }
            let action: usize = e.parse("reference.action")?.unwrap_or(0);
            if action >= game.m() {
                return Err(ConfigError::new("reference.action", format!("must be below {}", game.m())));
            }
            let value: f64 = e
                .parse("reference.value")?
                .ok_or_else(|| ConfigError::new("reference.value", "required but missing"))?;
            if !(value > 0.0 && value < 1.0) {
                return Err(ConfigError::new("reference.value", "must lie in (0, 1)"));
            }
            Ok(Some(ReferenceSpec {
                player,
                state,
                action,
                value,
            }))
        }
        other => Err(ConfigError::new(
            "reference.kind",
            format!("expected none or perturb-entry, got `{other}`"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
game.m = 2
game.payoff_x = 1 -1 -1 1
run.algorithm = mmga
run.eta = 1e-3
run.gamma = 1e-6
run.t_max = 1
init.kind = constant
init.x = 0.8
init.y = 0.8  # trailing comment
";

    fn with(extra: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(&format!("{BASE}{extra}"))
    }

    fn without(key: &str) -> Result<ExperimentConfig, ConfigError> {
        let text: String = BASE
            .lines()
            .filter(|l| !l.starts_with(key))
            .map(|l| format!("{l}\n"))
            .collect();
        ExperimentConfig::parse(&text)
    }

    #[test]
    fn parses_base() {
        let c = with("").unwrap();
        assert_eq!(c.algorithm, Algorithm::Mmga);
        assert_eq!(c.eta, Some(1e-3));
        assert!(c.game.is_zero_sum());
        assert_eq!(
            c.init,
            InitSpec::Constant {
                x: vec![0.8, 0.19999999999999996],
                y: vec![0.8, 0.19999999999999996]
            }
        );
        assert_eq!(c.record_every, 1);
        assert_eq!(c.time_step(), 1e-3);
    }

    #[test]
    fn field_level_errors() {
        assert_eq!(with("run.bogus = 1").unwrap_err().key, "run.bogus");
        assert_eq!(with("run.eta = 2").unwrap_err().key, "run.eta");
        assert_eq!(without("run.gamma").unwrap_err().key, "run.gamma");
        assert_eq!(without("run.eta").unwrap_err().key, "run.eta");
        assert_eq!(without("run.t_max").unwrap_err().key, "run.t_max");
        assert_eq!(with("run.step_size = 0.1").unwrap_err().key, "run.step_size");
        assert_eq!(with("run.stationary = lu").unwrap_err().key, "run.stationary");
        assert_eq!(with("reference.state = 1").unwrap_err().key, "reference.state");
        assert_eq!(with("run.record_every = 0").unwrap_err().key, "run.record_every");
        assert_eq!(with("game.nash_x = 0.5 0.5").unwrap_err().key, "game.nash_y");
        let err = ExperimentConfig::parse(&BASE.replace("init.x = 0.8", "init.x = 0.8 0.8")).unwrap_err();
        assert_eq!(err.key, "init.x");
        let err = ExperimentConfig::parse(&BASE.replace("run.eta", "run.eta = 1\nrun.eta")).unwrap_err();
        assert_eq!(err.key, "run.eta");
        let err = ExperimentConfig::parse("game.m 2").unwrap_err();
        assert_eq!(err.key, "line 1");
        assert!(err.to_string().starts_with("line 1: "));
    }

    #[test]
    fn approx_needs_assumption1_game() {
        let text = "
game.m = 2
game.payoff_x = 2 1 -1 0
run.algorithm = approx-1
run.t_max = 1
init.kind = nash-plus-delta
";
        assert_eq!(ExperimentConfig::parse(text).unwrap_err().key, "run.algorithm");
        let ok = text.replace("2 1 -1 0", "1 -1 -1 1");
        let c = ExperimentConfig::parse(&ok).unwrap();
        assert_eq!(c.algorithm, Algorithm::Approx(1));
        assert_eq!(c.step_size, 1e-2);
        let bad = ok.replace("game.m = 2", "game.m = 3").replace("1 -1 -1 1", "0 -1 1 1 0 -1 -1 1 0");
        assert_eq!(ExperimentConfig::parse(&bad).unwrap_err().key, "run.algorithm");
    }

    #[test]
    fn continuous_gradient_modes() {
        let text = "
game.m = 3
game.payoff_x = 0 -1 1 1 0 -1 -1 1 0
run.algorithm = continuous-mmga
run.t_max = 1
init.kind = random
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert!(!c.fd_gradient);
        assert_eq!(
            ExperimentConfig::parse(&format!("{text}run.gamma = 1e-6\n")).unwrap_err().key,
            "run.gamma"
        );
        let c = ExperimentConfig::parse(&format!("{text}run.gradient = fd\nrun.gamma = 1e-6\n")).unwrap();
        assert!(c.fd_gradient);
        assert_eq!(
            ExperimentConfig::parse(&format!("{text}run.gradient = fd\n")).unwrap_err().key,
            "run.gamma"
        );
    }

    #[test]
    fn general_sum_and_reference() {
        let c = with("game.payoff_y = 1 2 3 4\nreference.kind = perturb-entry\nreference.state = 0\nreference.value = 0.801\n")
            .unwrap();
        assert!(!c.game.is_zero_sum());
        assert_eq!(
            c.reference,
            Some(ReferenceSpec {
                player: Player::X,
                state: 0,
                action: 0,
                value: 0.801
            })
        );
        assert_eq!(
            with("game.payoff_y = 1 2 3 4\ngame.zero_sum = true").unwrap_err().key,
            "game.zero_sum"
        );
    }
}
