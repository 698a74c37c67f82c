//! Modal discretization of the 1-D heat equation on (0, L) with homogeneous
//! Dirichlet walls and a single interior point sensor.
//!
//! The state holds the coefficients of the first `modes` sine modes
//! `sin(k pi x / L)`; each decays independently at rate `(k pi / L)^2`, so
//! the flow map is closed-form and time stepping is exact.

use ndarray::Array2;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{EstimationSpace, ModelSpec, Propagator, SampledFn};
use crate::output::Weighting;

#[derive(Clone, Debug)]
pub struct HeatConfig {
    /// Domain length L.
    pub length: f64,
    /// Final time T.
    pub final_time: f64,
    /// Sensor location x0 in (0, L).
    pub sensor_x: f64,
    /// Number of sine modes carried in the state.
    pub modes: usize,
    /// Number of sample intervals; records are kept at k T / samples.
    pub samples: usize,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            final_time: 10.0,
            sensor_x: 0.5,
            modes: 8,
            samples: 2000,
        }
    }
}

impl HeatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.final_time > 0.0) {
            return Err(Error::Config(
                "heat model needs positive length and final time".to_string(),
            ));
        }
        if !(self.sensor_x > 0.0 && self.sensor_x < self.length) {
            return Err(Error::Config(format!(
                "heat sensor at {} lies outside (0, {})",
                self.sensor_x, self.length
            )));
        }
        if self.modes == 0 || self.samples == 0 {
            return Err(Error::Config(
                "heat model needs at least one mode and one sample".to_string(),
            ));
        }
        Ok(())
    }

    /// Decay rate of mode k (1-based).
    pub fn rate(&self, k: usize) -> f64 {
        let w = k as f64 * PI / self.length;
        w * w
    }
}

fn mode_at(cfg: &HeatConfig, k: usize, x: f64) -> f64 {
    (k as f64 * PI * x / cfg.length).sin()
}

/// Build the runnable model for this configuration.
pub fn heat_model(cfg: &HeatConfig) -> Result<ModelSpec> {
    cfg.validate()?;
    let c = cfg.clone();
    let flow = {
        let c = c.clone();
        move |t: f64, u0: &[f64]| -> Vec<f64> {
            u0.iter()
                .enumerate()
                .map(|(i, &a)| a * (-c.rate(i + 1) * t).exp())
                .collect()
        }
    };
    let observe = {
        let c = c.clone();
        move |_t: f64, u: &[f64]| -> Vec<f64> {
            let y = u
                .iter()
                .enumerate()
                .map(|(i, &a)| a * mode_at(&c, i + 1, c.sensor_x))
                .sum();
            vec![y]
        }
    };
    let lift = {
        let c = c.clone();
        move |u: &[f64]| -> SampledFn {
            let coeffs = u.to_vec();
            let c = c.clone();
            Box::new(move |x: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| a * mode_at(&c, i + 1, x))
                    .sum()
            })
        }
    };
    let restrict = {
        let c = c.clone();
        move |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            // Discrete sine transform on a uniform grid fine enough to make
            // the first `modes` coefficients exact for band-limited inputs.
            let m = 4 * (c.modes + 1);
            let mut coeffs = vec![0.0; c.modes];
            for j in 1..m {
                let x = j as f64 * c.length / m as f64;
                let fx = f(x);
                for (k, ck) in coeffs.iter_mut().enumerate() {
                    *ck += 2.0 / m as f64 * fx * ((k + 1) as f64 * PI * j as f64 / m as f64).sin();
                }
            }
            coeffs
        }
    };
    let dt = cfg.final_time / cfg.samples as f64;
    let sample_times = (0..=cfg.samples).map(|k| k as f64 * dt).collect();
    Ok(ModelSpec {
        id: "heat".to_string(),
        dim: cfg.modes,
        sample_times,
        weighting: Weighting::DtWeightedL2,
        propagator: Propagator::ClosedForm(Box::new(flow)),
        rhs: None,
        accel: None,
        observe: Box::new(observe),
        num_channels: 1,
        state_norm: Box::new(|u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt()),
        post_step: None,
        check: None,
        lift: Some(Box::new(lift)),
        restrict: Some(Box::new(restrict)),
        domain: Some((0.0, cfg.length)),
        grid_size: cfg.modes + 1,
    })
}

/// Scale factor that makes the continuum L^2 norm match the coefficient
/// norm: the sine modes have squared L^2 mass L/2, so the comparison uses
/// sqrt((2/L) int u^2).
pub fn continuum_scale(cfg: &HeatConfig) -> f64 {
    2.0 / cfg.length
}

/// Sensor map reading the temperature at an alternative location; used to
/// compare candidate sensor placements on cached trajectories.
pub fn make_observe(cfg: &HeatConfig, sensor_x: f64) -> Result<crate::model::ObserveFn> {
    cfg.validate()?;
    if !(sensor_x > 0.0 && sensor_x < cfg.length) {
        return Err(Error::Config(format!(
            "heat sensor at {} lies outside (0, {})",
            sensor_x, cfg.length
        )));
    }
    let c = cfg.clone();
    Ok(Box::new(move |_t: f64, u: &[f64]| -> Vec<f64> {
        let y = u
            .iter()
            .enumerate()
            .map(|(i, &a)| a * mode_at(&c, i + 1, sensor_x))
            .sum();
        vec![y]
    }))
}

/// Estimation space spanned by the first `s` mode coefficients. The basis is
/// orthonormal in the coefficient inner product, so the metric is the
/// identity.
pub fn heat_estimation_space(cfg: &HeatConfig, s: usize) -> Result<EstimationSpace> {
    cfg.validate()?;
    if s == 0 || s > cfg.modes {
        return Err(Error::Config(format!(
            "estimation space needs 1..={} directions, got {}",
            cfg.modes, s
        )));
    }
    let mut basis = Vec::with_capacity(s);
    let mut labels = Vec::with_capacity(s);
    for k in 0..s {
        let mut e = vec![0.0; cfg.modes];
        e[k] = 1.0;
        basis.push(e);
        labels.push(format!("mode_{}", k + 1));
    }
    Ok(EstimationSpace {
        label: format!("first_{}_modes", s),
        basis,
        direction_labels: labels,
        inner: Box::new(|u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum()),
    })
}

/// Exact observability Gramian of the first `s` modes for the point sensor:
/// `G_ij = sin(i theta) sin(j theta) (1 - e^{-(r_i + r_j) T}) / (r_i + r_j)`
/// with `theta = pi x0 / L` and decay rates `r_k`.
pub fn closed_form_gramian(cfg: &HeatConfig, s: usize) -> Result<Array2<f64>> {
    cfg.validate()?;
    if s == 0 || s > cfg.modes {
        return Err(Error::Config(format!(
            "closed-form Gramian needs 1..={} modes, got {}",
            cfg.modes, s
        )));
    }
    let mut g = Array2::<f64>::zeros((s, s));
    for i in 1..=s {
        for j in 1..=s {
            let r = cfg.rate(i) + cfg.rate(j);
            g[[i - 1, j - 1]] = mode_at(cfg, i, cfg.sensor_x)
                * mode_at(cfg, j, cfg.sensor_x)
                * (1.0 - (-r * cfg.final_time).exp())
                / r;
        }
    }
    Ok(g)
}
