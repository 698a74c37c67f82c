//! Finite-difference wave equation on (0, L) with fixed ends and a boundary
//! flux sensor, marched by the energy-friendly leapfrog scheme.
//!
//! The state stacks the interior displacements and velocities `[q; v]` on a
//! uniform grid with spacing `h = L / (n + 1)`. The sensor records the
//! one-sided gradient at the right wall, `q_n / h`, whose squared time sum
//! measures how much of the initial energy the boundary observation
//! captures.

use crate::error::{Error, Result};
use crate::integrate::{EnergySeries, Trajectory};
use crate::model::{ModelSpec, Propagator};
use crate::output::Weighting;

#[derive(Clone, Debug)]
pub struct WaveConfig {
    /// Domain length L.
    pub length: f64,
    /// Final time T.
    pub final_time: f64,
    /// Number of interior grid points n.
    pub interior_points: usize,
    /// Time step as a fraction of the grid spacing: dt ~= cfl * h.
    pub cfl: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            final_time: 4.0,
            interior_points: 50,
            cfl: 0.1,
        }
    }
}

impl WaveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.final_time > 0.0) {
            return Err(Error::Config(
                "wave model needs positive length and final time".to_string(),
            ));
        }
        if self.interior_points < 2 {
            return Err(Error::Config(
                "wave model needs at least two interior points".to_string(),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "wave time step fraction must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        Ok(())
    }

    /// Grid spacing h = L / (n + 1).
    pub fn spacing(&self) -> f64 {
        self.length / (self.interior_points + 1) as f64
    }

    /// Number of leapfrog steps covering [0, T] at dt ~= cfl * h.
    pub fn steps(&self) -> usize {
        (self.final_time / (self.cfl * self.spacing()) - 1e-9)
            .ceil()
            .max(1.0) as usize
    }

    /// Actual time step T / steps.
    pub fn dt(&self) -> f64 {
        self.final_time / self.steps() as f64
    }
}

/// Build the runnable model for this configuration. The model records one
/// sample per leapfrog step, so trajectories expose the full discrete
/// history and the propagator needs exactly one internal step per sample.
pub fn wave_model(cfg: &WaveConfig) -> Result<ModelSpec> {
    cfg.validate()?;
    let n = cfg.interior_points;
    let h = cfg.spacing();
    let h2 = h * h;
    let accel = move |q: &[f64]| -> Vec<f64> {
        let mut a = vec![0.0; q.len()];
        for j in 0..q.len() {
            let left = if j == 0 { 0.0 } else { q[j - 1] };
            let right = if j + 1 == q.len() { 0.0 } else { q[j + 1] };
            a[j] = (left - 2.0 * q[j] + right) / h2;
        }
        a
    };
    let steps = cfg.steps();
    let dt = cfg.dt();
    let sample_times = (0..=steps).map(|k| k as f64 * dt).collect();
    let cfg_norm = cfg.clone();
    Ok(ModelSpec {
        id: "wave".to_string(),
        dim: 2 * n,
        sample_times,
        weighting: Weighting::DtWeightedL2,
        propagator: Propagator::Leapfrog { substeps: 1 },
        rhs: None,
        accel: Some(Box::new(accel)),
        observe: Box::new(move |_t, u: &[f64]| vec![u[n - 1] / h]),
        num_channels: 1,
        state_norm: Box::new(move |u: &[f64]| {
            total_energy(&cfg_norm, &u[..n], &u[n..]).max(0.0).sqrt()
        }),
        post_step: None,
        check: None,
        lift: None,
        restrict: None,
        domain: Some((0.0, cfg.length)),
        grid_size: n + 1,
    })
}

/// Discrete wave energy: `h/2 sum v_j^2 + h/2 sum ((q_{j+1} - q_j)/h)^2`
/// with ghost zeros at both walls.
pub fn total_energy(cfg: &WaveConfig, q: &[f64], v: &[f64]) -> f64 {
    let h = cfg.spacing();
    let mut kinetic = 0.0;
    for &vj in v {
        kinetic += vj * vj;
    }
    let mut potential = 0.0;
    let mut prev = 0.0;
    for &qj in q {
        let d = (qj - prev) / h;
        potential += d * d;
        prev = qj;
    }
    let d = (0.0 - prev) / h;
    potential += d * d;
    0.5 * h * (kinetic + potential)
}

/// Squared boundary flux `(q_n / h)^2` read off a state vector.
pub fn boundary_integrand(cfg: &WaveConfig, state: &[f64]) -> f64 {
    let n = cfg.interior_points;
    let g = state[n - 1] / cfg.spacing();
    g * g
}

/// Energy diagnostics along a wave trajectory: total discrete energy and the
/// squared boundary flux at every recorded instant.
pub fn energy_series(cfg: &WaveConfig, traj: &Trajectory) -> EnergySeries {
    let n = cfg.interior_points;
    let total = traj
        .states
        .iter()
        .map(|s| total_energy(cfg, &s[..n], &s[n..]))
        .collect();
    let boundary = traj
        .states
        .iter()
        .map(|s| boundary_integrand(cfg, s))
        .collect();
    EnergySeries {
        times: traj.times.clone(),
        total,
        boundary,
    }
}

/// Total boundary observation `dt * sum_k (q_n(t_k)/h)^2` over all recorded
/// instants.
pub fn boundary_total(cfg: &WaveConfig, traj: &Trajectory) -> f64 {
    let dt = cfg.dt();
    traj.states
        .iter()
        .map(|s| boundary_integrand(cfg, s))
        .sum::<f64>()
        * dt
}

/// Interior samples of the k-th standing mode `sin(k pi x / L)`, the natural
/// initial-displacement family for resolution studies.
pub fn eigenmode(cfg: &WaveConfig, k: usize) -> Vec<f64> {
    let n = cfg.interior_points;
    let h = cfg.spacing();
    (1..=n)
        .map(|j| (k as f64 * std::f64::consts::PI * j as f64 * h / cfg.length).sin())
        .collect()
}

/// Initial state [q; 0] from a displacement profile.
pub fn at_rest(q: Vec<f64>) -> Vec<f64> {
    let n = q.len();
    let mut u = q;
    u.extend(std::iter::repeat(0.0).take(n));
    u
}
