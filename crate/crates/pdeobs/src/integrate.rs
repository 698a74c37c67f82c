use crate::error::{Error, Result};

/// Hard guard on state magnitude during time integration. A state entry
/// whose absolute value exceeds this (or becomes non-finite) aborts the run.
pub const BLOW_UP_LIMIT: f64 = 1e12;

/// States recorded along one simulation.
///
/// `times` contains t = 0 followed by (or coinciding with) the model's sample
/// instants; `states[k]` is the full state vector at `times[k]`.
/// `sample_offset` is the index within `times` where the model's sample grid
/// begins (0 when the sample grid itself starts at t = 0, else 1).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub substeps: usize,
    pub sample_offset: usize,
}

impl Trajectory {
    /// States restricted to the model's sample instants.
    pub fn sampled_states(&self) -> &[Vec<f64>] {
        &self.states[self.sample_offset..]
    }

    pub fn sampled_times(&self) -> &[f64] {
        &self.times[self.sample_offset..]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }
}

/// Scalar energy diagnostics along a trajectory: a total (interior) energy
/// and a boundary dissipation integrand, both per recorded instant.
#[derive(Clone, Debug)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub boundary: Vec<f64>,
}

fn guard(t: f64, u: &[f64], check: Option<&dyn Fn(f64, &[f64]) -> Result<()>>) -> Result<()> {
    for &x in u {
        if !x.is_finite() || x.abs() > BLOW_UP_LIMIT {
            return Err(Error::BlowUp {
                t,
                limit: BLOW_UP_LIMIT,
            });
        }
    }
    if let Some(c) = check {
        c(t, u)?;
    }
    Ok(())
}

/// One classical Runge-Kutta step of size `h` for `u' = rhs(t, u)`.
pub fn rk4_step(rhs: &dyn Fn(f64, &[f64]) -> Vec<f64>, t: f64, u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let k1 = rhs(t, u);
    let mut tmp = vec![0.0; n];
    for i in 0..n {
        tmp[i] = u[i] + 0.5 * h * k1[i];
    }
    let k2 = rhs(t + 0.5 * h, &tmp);
    for i in 0..n {
        tmp[i] = u[i] + 0.5 * h * k2[i];
    }
    let k3 = rhs(t + 0.5 * h, &tmp);
    for i in 0..n {
        tmp[i] = u[i] + h * k3[i];
    }
    let k4 = rhs(t + h, &tmp);
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// March `u' = rhs(t, u)` from `u0` at t = 0, recording the state at t = 0
/// and at every entry of `record_times` (strictly increasing, first entry
/// >= 0). Each recording interval is covered by `substeps` equal RK4 steps.
/// `post_step` (if any) is applied after every internal step; `check` (if
/// any) can reject invalid states, and the magnitude guard aborts blown-up
/// runs.
#[allow(clippy::too_many_arguments)]
pub fn integrate_rk4(
    rhs: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    u0: &[f64],
    record_times: &[f64],
    substeps: usize,
    post_step: Option<&dyn Fn(f64, &mut [f64])>,
    check: Option<&dyn Fn(f64, &[f64]) -> Result<()>>,
) -> Result<Trajectory> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".to_string()));
    }
    let mut u = u0.to_vec();
    guard(0.0, &u, check)?;
    let starts_at_zero = record_times.first().map_or(true, |&t0| t0.abs() < 1e-12);
    let mut times = Vec::with_capacity(record_times.len() + 1);
    let mut states = Vec::with_capacity(record_times.len() + 1);
    times.push(0.0);
    states.push(u.clone());
    let mut t = 0.0;
    for &target in record_times.iter().skip(if starts_at_zero { 1 } else { 0 }) {
        let h = (target - t) / substeps as f64;
        if h <= 0.0 {
            return Err(Error::Config(
                "record times must be strictly increasing".to_string(),
            ));
        }
        for step in 0..substeps {
            let t_next = if step + 1 == substeps { target } else { t + h };
            let mut next = rk4_step(rhs, t, &u, t_next - t);
            if let Some(p) = post_step {
                p(t_next, &mut next);
            }
            guard(t_next, &next, check)?;
            u = next;
            t = t_next;
        }
        times.push(t);
        states.push(u.clone());
    }
    Ok(Trajectory {
        times,
        states,
        substeps,
        sample_offset: if starts_at_zero { 0 } else { 1 },
    })
}

/// March the second-order system `q'' = accel(q)` with the velocity form of
/// the leapfrog scheme (kick-drift-kick). The state layout is `[q; v]` with
/// equal halves. Recording semantics match [`integrate_rk4`].
pub fn integrate_leapfrog(
    accel: &dyn Fn(&[f64]) -> Vec<f64>,
    u0: &[f64],
    record_times: &[f64],
    substeps: usize,
    check: Option<&dyn Fn(f64, &[f64]) -> Result<()>>,
) -> Result<Trajectory> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".to_string()));
    }
    if u0.len() % 2 != 0 {
        return Err(Error::Config(
            "leapfrog state must stack positions and velocities".to_string(),
        ));
    }
    let n = u0.len() / 2;
    let mut q = u0[..n].to_vec();
    let mut v = u0[n..].to_vec();
    guard(0.0, u0, check)?;
    let starts_at_zero = record_times.first().map_or(true, |&t0| t0.abs() < 1e-12);
    let mut times = Vec::with_capacity(record_times.len() + 1);
    let mut states = Vec::with_capacity(record_times.len() + 1);
    let pack = |q: &[f64], v: &[f64]| {
        let mut s = Vec::with_capacity(2 * n);
        s.extend_from_slice(q);
        s.extend_from_slice(v);
        s
    };
    times.push(0.0);
    states.push(pack(&q, &v));
    let mut t = 0.0;
    let mut a = accel(&q);
    for &target in record_times.iter().skip(if starts_at_zero { 1 } else { 0 }) {
        let h = (target - t) / substeps as f64;
        if h <= 0.0 {
            return Err(Error::Config(
                "record times must be strictly increasing".to_string(),
            ));
        }
        for step in 0..substeps {
            let t_next = if step + 1 == substeps { target } else { t + h };
            let hh = t_next - t;
            for i in 0..n {
                v[i] += 0.5 * hh * a[i];
                q[i] += hh * v[i];
            }
            a = accel(&q);
            for i in 0..n {
                v[i] += 0.5 * hh * a[i];
            }
            let s = pack(&q, &v);
            guard(t_next, &s, check)?;
            t = t_next;
        }
        times.push(t);
        states.push(pack(&q, &v));
    }
    Ok(Trajectory {
        times,
        states,
        substeps,
        sample_offset: if starts_at_zero { 0 } else { 1 },
    })
}
