//! Classical fixed-step fourth-order Runge-Kutta integration.

use crate::error::{Error, Result};

/// Scratch buffers for one RK4 step of a given dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `z` by one step of size `h` under `dz/dt = field(z)`.
    pub fn step<F>(&mut self, field: &mut F, z: &mut [f64], h: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let n = z.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        field(z, &mut self.k1)?;
        for i in 0..n {
            self.stage[i] = z[i] + 0.5 * h * self.k1[i];
        }
        field(&self.stage, &mut self.k2)?;
        for i in 0..n {
            self.stage[i] = z[i] + 0.5 * h * self.k2[i];
        }
        field(&self.stage, &mut self.k3)?;
        for i in 0..n {
            self.stage[i] = z[i] + h * self.k3[i];
        }
        field(&self.stage, &mut self.k4)?;
        for i in 0..n {
            z[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("RK4 step"));
        }
        Ok(())
    }
}

/// Number of fixed steps of size `h` covering `[0, t_max]`.
pub fn step_count(t_max: f64, h: f64) -> usize {
    (t_max / h).round().max(0.0) as usize
}

/// How an integration ended. `error` is set when the field failed mid-trajectory;
/// everything observed up to that point is still valid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOutcome {
    pub steps_taken: usize,
    pub error: Option<Error>,
}

/// Integrates from `z0` over `[0, t_max]` with step `h`.
///
/// `project` runs after every step (it may clamp the state back into its domain) and
/// `observe` is called at `t = 0`, every `record_every` steps and at the final step. Times
/// are computed as `k * h` so that they are exactly reproducible.
pub fn rk4_integrate<F, P, O>(
    mut field: F,
    z0: &[f64],
    h: f64,
    t_max: f64,
    record_every: usize,
    mut project: P,
    mut observe: O,
) -> IntegrationOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    P: FnMut(usize, f64, &mut [f64]),
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    let record_every = record_every.max(1);
    let steps = step_count(t_max, h);
    let mut z = z0.to_vec();
    let mut rk = Rk4::new(z.len());
    if let Err(e) = observe(0.0, &z) {
        return IntegrationOutcome {
            steps_taken: 0,
            error: Some(e),
        };
    }
    for k in 1..=steps {
        if let Err(e) = rk.step(&mut field, &mut z, h) {
            return IntegrationOutcome {
                steps_taken: k - 1,
                error: Some(e),
            };
        }
        let t = k as f64 * h;
        project(k, t, &mut z);
        if k % record_every == 0 || k == steps {
            if let Err(e) = observe(t, &z) {
                return IntegrationOutcome {
                    steps_taken: k,
                    error: Some(e),
                };
            }
        }
    }
    IntegrationOutcome {
        steps_taken: steps,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_growth_factor() {
        let h = 0.1;
        let mut z = [1.0];
        let mut f = |z: &[f64], out: &mut [f64]| {
            out[0] = z[0];
            Ok(())
        };
        Rk4::new(1).step(&mut f, &mut z, h).unwrap();
        let expected = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((z[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_field_is_constant() {
        let z0 = [0.3, -1.0, 2.5];
        let mut samples = Vec::new();
        let out = rk4_integrate(
            |_, out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                Ok(())
            },
            &z0,
            0.01,
            1.0,
            10,
            |_, _, _| {},
            |t, z| {
                samples.push((t, z.to_vec()));
                Ok(())
            },
        );
        assert_eq!(out.error, None);
        assert_eq!(out.steps_taken, 100);
        assert_eq!(samples.len(), 11);
        assert!(samples.iter().all(|(_, z)| z == &z0));
        assert!(samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn fourth_order_convergence() {
        // z' = -z z, z(0) = 1 has z(t) = 1 / (1 + t)
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let mut last = 0.0;
                rk4_integrate(
                    |z: &[f64], out: &mut [f64]| {
                        out[0] = -z[0] * z[0];
                        Ok(())
                    },
                    &[1.0],
                    h,
                    2.0,
                    1,
                    |_, _, _| {},
                    |_, z| {
                        last = z[0];
                        Ok(())
                    },
                );
                (last - 1.0 / 3.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 3.8 && rate < 4.3, "rate {rate}");
        }
    }

    #[test]
    fn failure_returns_partial_progress() {
        let mut calls = 0;
        let mut seen = 0;
        let out = rk4_integrate(
            |_, out: &mut [f64]| {
                calls += 1;
                if calls > 8 {
                    return Err(Error::NonFinite("test field"));
                }
                out[0] = 1.0;
                Ok(())
            },
            &[0.0],
            0.5,
            10.0,
            1,
            |_, _, _| {},
            |_, _| {
                seen += 1;
                Ok(())
            },
        );
        assert_eq!(out.steps_taken, 2);
        assert_eq!(out.error, Some(Error::NonFinite("test field")));
        assert_eq!(seen, 3);
    }

    #[test]
    fn zero_horizon_observes_once() {
        let mut seen = Vec::new();
        let out = rk4_integrate(
            |_, out: &mut [f64]| {
                out[0] = 1.0;
                Ok(())
            },
            &[4.0],
            0.01,
            0.0,
            1,
            |_, _, _| {},
            |t, z| {
                seen.push((t, z[0]));
                Ok(())
            },
        );
        assert_eq!(out.steps_taken, 0);
        assert_eq!(seen, vec![(0.0, 4.0)]);
    }
}
