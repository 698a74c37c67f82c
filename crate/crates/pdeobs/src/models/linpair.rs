//! A two-state linear model with one weakly coupled direction: the canonical
//! small example where one initial condition is nearly invisible to the
//! sensor.
//!
//! Dynamics: `z1' = -z1 - c z2`, `z2' = -z2`, observed through
//! `y = sqrt(2) z1`. The flow map is closed-form. As the coupling `c`
//! shrinks, the smallest Gramian eigenvalue scales like `(c/2)^2`, so the
//! index grows like `2/c` and hits +infinity at `c = 0`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{EstimationSpace, ModelSpec, Propagator};
use crate::output::Weighting;

#[derive(Clone, Debug)]
pub struct LinearPairConfig {
    /// Coupling strength c of the hidden state into the observed one.
    pub coupling: f64,
    /// Final time T.
    pub final_time: f64,
    /// Number of sample intervals; records are kept at k T / samples.
    pub samples: usize,
}

impl Default for LinearPairConfig {
    fn default() -> Self {
        Self {
            coupling: 0.1,
            final_time: 10.0,
            samples: 4000,
        }
    }
}

impl LinearPairConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0) {
            return Err(Error::Config(
                "linear pair needs a positive final time".to_string(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::Config(
                "linear pair needs at least one sample".to_string(),
            ));
        }
        if !self.coupling.is_finite() {
            return Err(Error::Config("coupling must be finite".to_string()));
        }
        Ok(())
    }
}

/// Build the runnable model for this configuration.
pub fn linear_pair_model(cfg: &LinearPairConfig) -> Result<ModelSpec> {
    cfg.validate()?;
    let c = cfg.coupling;
    let flow = move |t: f64, z0: &[f64]| -> Vec<f64> {
        let decay = (-t).exp();
        vec![decay * (z0[0] - c * t * z0[1]), decay * z0[1]]
    };
    let dt = cfg.final_time / cfg.samples as f64;
    let sample_times = (0..=cfg.samples).map(|k| k as f64 * dt).collect();
    Ok(ModelSpec {
        id: "linpair".to_string(),
        dim: 2,
        sample_times,
        weighting: Weighting::DtWeightedL2,
        propagator: Propagator::ClosedForm(Box::new(flow)),
        rhs: None,
        accel: None,
        observe: Box::new(|_t, z: &[f64]| vec![std::f64::consts::SQRT_2 * z[0]]),
        num_channels: 1,
        state_norm: Box::new(|z: &[f64]| (z[0] * z[0] + z[1] * z[1]).sqrt()),
        post_step: None,
        check: None,
        lift: None,
        restrict: None,
        domain: None,
        grid_size: 2,
    })
}

/// Both coordinate directions with the Euclidean metric.
pub fn linear_pair_estimation_space() -> EstimationSpace {
    EstimationSpace {
        label: "both_states".to_string(),
        basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        direction_labels: vec!["z1".to_string(), "z2".to_string()],
        inner: Box::new(|u: &[f64], v: &[f64]| u[0] * v[0] + u[1] * v[1]),
    }
}

/// Exact observability Gramian of the pair: with `a = 1 - e^{-2T}`,
/// `b = (T + 1/2) e^{-2T} - 1/2` and `d = 1/2 - (T^2 + T + 1/2) e^{-2T}`,
/// `G = [[a, b c], [b c, d c^2]]`.
pub fn closed_form_gramian(cfg: &LinearPairConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let t = cfg.final_time;
    let c = cfg.coupling;
    let e = (-2.0 * t).exp();
    let a = 1.0 - e;
    let b = (t + 0.5) * e - 0.5;
    let d = 0.5 - (t * t + t + 0.5) * e;
    let mut g = Array2::<f64>::zeros((2, 2));
    g[[0, 0]] = a;
    g[[0, 1]] = b * c;
    g[[1, 0]] = b * c;
    g[[1, 1]] = d * c * c;
    Ok(g)
}

/// Exact smallest singular value `sqrt(lambda_min(G))`; for small coupling
/// this behaves like `c / 2`.
pub fn closed_form_sigma(cfg: &LinearPairConfig) -> Result<f64> {
    let g = closed_form_gramian(cfg)?;
    let tr = g[[0, 0]] + g[[1, 1]];
    let det = g[[0, 0]] * g[[1, 1]] - g[[0, 1]] * g[[1, 0]];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    Ok((0.5 * (tr - disc)).max(0.0).sqrt())
}
