use ndarray::Array2;

use crate::error::{Error, Result};
use crate::integrate::{self, Trajectory};
use crate::output::{OutputSeries, Weighting};

pub type RhsFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type FlowFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type AccelFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ObserveFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type StateNormFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PostStepFn = Box<dyn Fn(f64, &mut [f64]) + Send + Sync>;
pub type CheckFn = Box<dyn Fn(f64, &[f64]) -> Result<()> + Send + Sync>;
/// A function of the spatial coordinate, produced by lifting a discrete state.
pub type SampledFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
pub type LiftFn = Box<dyn Fn(&[f64]) -> SampledFn + Send + Sync>;
pub type RestrictFn = Box<dyn Fn(&dyn Fn(f64) -> f64) -> Vec<f64> + Send + Sync>;
pub type InnerFn = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// How a model advances its state in time.
pub enum Propagator {
    /// Exact flow map `(t, u0) -> u(t)`; no numerical marching.
    ClosedForm(FlowFn),
    /// Classical Runge-Kutta with this many equal steps per sample interval.
    Rk4 { substeps: usize },
    /// Velocity-form leapfrog for `[q; v]` states with this many steps per
    /// sample interval; requires `accel`.
    Leapfrog { substeps: usize },
}

/// A complete, runnable model: dynamics, sensors, norms, and the sampling
/// grid on which sensor records are kept.
pub struct ModelSpec {
    pub id: String,
    /// State dimension.
    pub dim: usize,
    /// Strictly increasing sensor sample instants; the last one is the final
    /// time T. Most models sample from t = 0, some record only t > 0.
    pub sample_times: Vec<f64>,
    /// How sampled sensor records are turned into the output norm.
    pub weighting: Weighting,
    pub propagator: Propagator,
    /// First-order right-hand side, required by the Rk4 propagator.
    pub rhs: Option<RhsFn>,
    /// Acceleration of the position block, required by Leapfrog.
    pub accel: Option<AccelFn>,
    /// Sensor map: state (at a given time) to recorded channel values.
    pub observe: ObserveFn,
    pub num_channels: usize,
    /// Discrete state norm used for sizing perturbations.
    pub state_norm: StateNormFn,
    /// Applied after every internal time step (stabilizing filters etc.).
    pub post_step: Option<PostStepFn>,
    /// Validity check run on every internal step (e.g. positivity).
    pub check: Option<CheckFn>,
    /// Embed a discrete state back into a function of x, when the model has
    /// a continuum interpretation.
    pub lift: Option<LiftFn>,
    /// Sample a function of x down to a discrete state (or state block).
    pub restrict: Option<RestrictFn>,
    /// Spatial interval of the continuum interpretation.
    pub domain: Option<(f64, f64)>,
    /// Spatial resolution of the discretization; reference quadratures for
    /// consistency checks run at 8x this resolution.
    pub grid_size: usize,
}

impl ModelSpec {
    /// Check structural invariants; called by `simulate`.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("model state dimension is zero".to_string()));
        }
        if self.sample_times.is_empty() {
            return Err(Error::Config("model has no sample times".to_string()));
        }
        if self.sample_times[0] < 0.0 {
            return Err(Error::Config(
                "sample times must be nonnegative".to_string(),
            ));
        }
        for w in self.sample_times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(
                    "sample times must be strictly increasing".to_string(),
                ));
            }
        }
        match self.propagator {
            Propagator::Rk4 { substeps } => {
                if self.rhs.is_none() {
                    return Err(Error::Config(
                        "Rk4 propagator requires a right-hand side".to_string(),
                    ));
                }
                if substeps == 0 {
                    return Err(Error::Config("substeps must be at least 1".to_string()));
                }
            }
            Propagator::Leapfrog { substeps } => {
                if self.accel.is_none() {
                    return Err(Error::Config(
                        "leapfrog propagator requires an acceleration map".to_string(),
                    ));
                }
                if self.dim % 2 != 0 {
                    return Err(Error::Config(
                        "leapfrog state must stack positions and velocities".to_string(),
                    ));
                }
                if substeps == 0 {
                    return Err(Error::Config("substeps must be at least 1".to_string()));
                }
            }
            Propagator::ClosedForm(_) => {}
        }
        Ok(())
    }

    /// Run the model from `u0`, recording the state at t = 0 and at every
    /// sample instant.
    pub fn simulate(&self, u0: &[f64]) -> Result<Trajectory> {
        self.validate()?;
        if u0.len() != self.dim {
            return Err(Error::Shape(format!(
                "initial state has dimension {}, model expects {}",
                u0.len(),
                self.dim
            )));
        }
        match &self.propagator {
            Propagator::ClosedForm(flow) => {
                let starts_at_zero = self.sample_times[0].abs() < 1e-12;
                let mut times = Vec::new();
                let mut states = Vec::new();
                if !starts_at_zero {
                    times.push(0.0);
                    states.push(u0.to_vec());
                }
                for &t in &self.sample_times {
                    let u = flow(t, u0);
                    for &x in &u {
                        if !x.is_finite() || x.abs() > integrate::BLOW_UP_LIMIT {
                            return Err(Error::BlowUp {
                                t,
                                limit: integrate::BLOW_UP_LIMIT,
                            });
                        }
                    }
                    times.push(t);
                    states.push(u);
                }
                Ok(Trajectory {
                    times,
                    states,
                    substeps: 0,
                    sample_offset: if starts_at_zero { 0 } else { 1 },
                })
            }
            Propagator::Rk4 { substeps } => integrate::integrate_rk4(
                self.rhs.as_deref().expect("validated above"),
                u0,
                &self.sample_times,
                *substeps,
                self.post_step
                    .as_deref()
                    .map(|f| f as &dyn Fn(f64, &mut [f64])),
                self.check
                    .as_deref()
                    .map(|f| f as &dyn Fn(f64, &[f64]) -> Result<()>),
            ),
            Propagator::Leapfrog { substeps } => integrate::integrate_leapfrog(
                self.accel.as_deref().expect("validated above"),
                u0,
                &self.sample_times,
                *substeps,
                self.check
                    .as_deref()
                    .map(|f| f as &dyn Fn(f64, &[f64]) -> Result<()>),
            ),
        }
    }

    /// Apply the sensor map along a trajectory produced by this model.
    pub fn observe_trajectory(&self, traj: &Trajectory) -> Result<OutputSeries> {
        let sampled = traj.sampled_states();
        if sampled.len() != self.sample_times.len() {
            return Err(Error::Shape(format!(
                "trajectory has {} sampled states, model expects {}",
                sampled.len(),
                self.sample_times.len()
            )));
        }
        let mut values = Array2::<f64>::zeros((self.sample_times.len(), self.num_channels));
        for (k, (t, u)) in self.sample_times.iter().zip(sampled).enumerate() {
            let y = (self.observe)(*t, u);
            if y.len() != self.num_channels {
                return Err(Error::Shape(format!(
                    "sensor map returned {} channels, model declares {}",
                    y.len(),
                    self.num_channels
                )));
            }
            for (c, &yc) in y.iter().enumerate() {
                values[[k, c]] = yc;
            }
        }
        OutputSeries::new(self.sample_times.clone(), values, self.weighting)
    }

    /// Simulate from `u0` and return the sensor records.
    pub fn outputs(&self, u0: &[f64]) -> Result<OutputSeries> {
        let traj = self.simulate(u0)?;
        self.observe_trajectory(&traj)
    }

    /// Continuum L^2 norm of a lifted function over the model domain,
    /// computed with composite Simpson quadrature at 8x the model's spatial
    /// resolution. The squared integrand is optionally rescaled so that the
    /// continuum norm is directly comparable with the discrete state norm.
    pub fn continuum_norm(&self, f: &dyn Fn(f64) -> f64, scale: f64) -> Result<f64> {
        let (a, b) = self.domain.ok_or_else(|| {
            Error::Unsupported(format!(
                "model '{}' has no continuum interpretation",
                self.id
            ))
        })?;
        let panels = 8 * self.grid_size.max(2);
        let sq = |x: f64| {
            let v = f(x);
            v * v
        };
        Ok((scale * simpson(&sq, a, b, panels)).max(0.0).sqrt())
    }
}

/// Composite Simpson quadrature of `f` over `[a, b]` with `n` panels
/// (rounded up to the next even count).
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Relative defect between the continuum norm of each lifted state and its
/// discrete norm: `|  ||lift(u)||_X - ||u||_N | / ||u||_N`. Flags whether the
/// discretization's quadrature is consistent with the continuum it claims to
/// approximate. `scale` rescales the continuum squared integrand (models
/// whose discrete norm is a normalized quadrature pass the matching factor).
pub fn norm_consistency_check(
    model: &ModelSpec,
    states: &[Vec<f64>],
    scale: f64,
) -> Result<Vec<f64>> {
    let lift = model.lift.as_ref().ok_or_else(|| {
        Error::Unsupported(format!(
            "model '{}' has no continuum interpretation",
            model.id
        ))
    })?;
    let mut defects = Vec::with_capacity(states.len());
    for u in states {
        if u.len() != model.dim {
            return Err(Error::Shape(format!(
                "state has dimension {}, model expects {}",
                u.len(),
                model.dim
            )));
        }
        let discrete = (model.state_norm)(u);
        if discrete == 0.0 {
            return Err(Error::ZeroData(
                "norm consistency check on a zero state".to_string(),
            ));
        }
        let f = lift(u);
        let continuum = model.continuum_norm(&*f, scale)?;
        defects.push((continuum - discrete).abs() / discrete);
    }
    Ok(defects)
}

/// The low-dimensional subspace in which initial-data uncertainty lives:
/// `s` basis directions in state space plus the inner product that measures
/// them.
pub struct EstimationSpace {
    pub label: String,
    /// Basis directions as full state vectors.
    pub basis: Vec<Vec<f64>>,
    /// Human-readable name per direction (column labels in reports).
    pub direction_labels: Vec<String>,
    /// Inner product on state space restricted to this analysis.
    pub inner: InnerFn,
}

impl EstimationSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Check the basis is well-formed for the given model.
    pub fn validate(&self, model_dim: usize) -> Result<()> {
        if self.basis.is_empty() {
            return Err(Error::Config(
                "estimation space has no directions".to_string(),
            ));
        }
        if self.direction_labels.len() != self.basis.len() {
            return Err(Error::Config(
                "estimation space has mismatched direction labels".to_string(),
            ));
        }
        for (j, e) in self.basis.iter().enumerate() {
            if e.len() != model_dim {
                return Err(Error::Shape(format!(
                    "basis direction {} has dimension {}, model expects {}",
                    j,
                    e.len(),
                    model_dim
                )));
            }
        }
        Ok(())
    }

    /// Gram matrix `S_ij = <e_i, e_j>` of the basis in this inner product.
    pub fn gram_matrix(&self) -> Array2<f64> {
        let s = self.dim();
        let mut m = Array2::<f64>::zeros((s, s));
        for i in 0..s {
            for j in i..s {
                let v = (self.inner)(&self.basis[i], &self.basis[j]);
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        m
    }

    /// Linear combination of basis directions with coefficients `c`.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let dim = self.basis.first().map_or(0, |e| e.len());
        let mut out = vec![0.0; dim];
        for (ck, ek) in c.iter().zip(&self.basis) {
            for (o, &e) in out.iter_mut().zip(ek) {
                *o += ck * e;
            }
        }
        out
    }
}
