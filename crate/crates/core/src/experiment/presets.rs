//! Shipped experiment presets and their summaries.

use rayon::prelude::*;

use super::config::{ConfigError, ExperimentConfig};
use super::runner::{run_experiment, Trajectory};
use crate::error::Result;
use crate::perturbation::{approx_error, nash_2x1, payoffs_2x1, DeviationState, NashPoint2x1};

pub const PRESET_NAMES: &[&str] = &["fig2", "fig3", "fig4", "figA1"];

const FIG2: &[(&str, &str)] = &[
    ("full", include_str!("../../presets/fig2_full.conf")),
    ("approx-1", include_str!("../../presets/fig2_approx1.conf")),
    ("approx-2", include_str!("../../presets/fig2_approx2.conf")),
    ("approx-3", include_str!("../../presets/fig2_approx3.conf")),
];
const FIG3: &[(&str, &str)] = &[("main", include_str!("../../presets/fig3.conf"))];
const FIG4: &[(&str, &str)] = &[
    ("m2n1", include_str!("../../presets/fig4_m2n1.conf")),
    ("m2n2", include_str!("../../presets/fig4_m2n2.conf")),
    ("m3n1", include_str!("../../presets/fig4_m3n1.conf")),
    ("m4n1", include_str!("../../presets/fig4_m4n1.conf")),
];
const FIGA1: &[(&str, &str)] = &[
    ("full", include_str!("../../presets/figA1_full.conf")),
    ("approx-1", include_str!("../../presets/figA1_approx1.conf")),
];

/// Command-line overrides applied to every run of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
    }
}

/// The named run configurations making up a preset.
pub fn preset_configs(name: &str, overrides: &Overrides) -> std::result::Result<Vec<(String, ExperimentConfig)>, ConfigError> {
    let table = match name {
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig4" => FIG4,
        "figA1" => FIGA1,
        other => {
            return Err(ConfigError {
                key: "preset".into(),
                message: format!("unknown preset `{other}` (expected one of {})", PRESET_NAMES.join(", ")),
            })
        }
    };
    table
        .iter()
        .map(|(run, text)| {
            let mut cfg = ExperimentConfig::parse(text)?;
            overrides.apply(&mut cfg);
            Ok((format!("{name}_{run}"), cfg))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PresetRun {
    pub name: String,
    pub config: ExperimentConfig,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub runs: Vec<PresetRun>,
    pub summary: Vec<String>,
}

/// Runs every configuration of a preset (independent runs in parallel) and summarizes.
pub fn run_preset(name: &str, configs: Vec<(String, ExperimentConfig)>) -> Result<PresetOutcome> {
    let runs = configs
        .into_par_iter()
        .map(|(run, config)| {
            let trajectory = run_experiment(&config)?;
            Ok(PresetRun {
                name: run,
                config,
                trajectory,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = match name {
        "fig2" => summarize_fig2(&runs)?,
        "fig3" => summarize_fig3(&runs),
        "fig4" => summarize_fig4(&runs),
        "figA1" => summarize_fig_a1(&runs)?,
        _ => Vec::new(),
    };
    Ok(PresetOutcome { runs, summary })
}

/// Deviation coordinates of each sample of a two-action one-memory trajectory.
pub fn deviations(traj: &Trajectory, nash: &NashPoint2x1) -> Vec<DeviationState> {
    traj.samples
        .iter()
        .map(|s| {
            let x = [s.x[0], s.x[2], s.x[4], s.x[6]];
            let y = [s.y[0], s.y[2], s.y[4], s.y[6]];
            DeviationState::from_strategies(x, y, nash)
        })
        .collect()
}

/// Time average of the deviation-space error between two trajectories sampled alike.
pub fn mean_approx_error(full: &Trajectory, approx: &Trajectory, nash: &NashPoint2x1) -> f64 {
    let a = deviations(full, nash);
    let b = deviations(approx, nash);
    let n = a.len().min(b.len());
    if n == 0 {
        return f64::NAN;
    }
    a.iter().zip(&b).map(|(p, q)| approx_error(p, q)).sum::<f64>() / n as f64
}

/// Least-squares slope of `values` against `times`.
pub fn ls_slope(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let mv = values.iter().sum::<f64>() / n;
    let cov: f64 = times.iter().zip(values).map(|(t, v)| (t - mt) * (v - mv)).sum();
    let var: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    cov / var
}

fn status(run: &PresetRun) -> String {
    if run.trajectory.is_complete() {
        String::new()
    } else {
        " (partial)".into()
    }
}

fn summarize_fig2(runs: &[PresetRun]) -> Result<Vec<String>> {
    let full = &runs[0];
    let nash = nash_2x1(payoffs_2x1(&full.config.game)?)?;
    Ok(runs[1..]
        .iter()
        .map(|r| {
            format!(
                "{}: time-averaged deviation error vs full = {:.6e}{}",
                r.name,
                mean_approx_error(&full.trajectory, &r.trajectory, &nash),
                status(r)
            )
        })
        .collect())
}

fn summarize_fig3(runs: &[PresetRun]) -> Vec<String> {
    let t = &runs[0].trajectory;
    let d: Vec<f64> = t.samples.iter().filter_map(|s| s.metrics.distance).collect();
    let d0 = d.first().copied().unwrap_or(f64::NAN);
    let dmax = d.iter().copied().fold(f64::NAN, f64::max);
    vec![
        format!("{}: D(0) = {d0:.6e}, max D = {dmax:.6e}, ratio = {:.3e}{}", runs[0].name, dmax / d0, status(&runs[0])),
    ]
}

fn summarize_fig4(runs: &[PresetRun]) -> Vec<String> {
    runs.iter()
        .map(|r| {
            let t = &r.trajectory;
            let times = t.times();
            let min_prob = t.samples.iter().map(|s| s.metrics.min_prob).fold(f64::INFINITY, f64::min);
            let kl: Vec<f64> = t.samples.iter().filter_map(|s| s.metrics.kl_x).collect();
            let slope = if kl.len() == times.len() && kl.len() > 1 {
                ls_slope(&times, &kl)
            } else {
                f64::NAN
            };
            format!("{}: KL slope = {slope:.6e}, min x = {min_prob:.6e}{}", r.name, status(r))
        })
        .collect()
}

fn summarize_fig_a1(runs: &[PresetRun]) -> Result<Vec<String>> {
    let nash = nash_2x1(payoffs_2x1(&runs[0].config.game)?)?;
    let mut out = Vec::new();
    for r in runs {
        let t = &r.trajectory;
        let devs = deviations(t, &nash);
        let radius = |d: &DeviationState, i: usize| d.delta[i].powi(2) + d.epsilon[i].powi(2);
        let drift = devs
            .iter()
            .flat_map(|d| (0..4).map(|i| (radius(d, i) - radius(&devs[0], i)).abs()))
            .fold(0.0, f64::max);
        let kl0 = t.samples.first().and_then(|s| s.metrics.kl_x).unwrap_or(f64::NAN);
        let kl1 = t.samples.last().and_then(|s| s.metrics.kl_x).unwrap_or(f64::NAN);
        out.push(format!(
            "{}: max per-state radius drift = {drift:.6e}, KL(0) = {kl0:.6e}, KL(end) = {kl1:.6e}{}",
            r.name,
            status(r)
        ));
    }
    Ok(out)
}
