//! Discretization-consistency studies: how the reported index behaves as the
//! spatial resolution, the data family, or the sensor placement changes.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exec::{map_ordered, ExecMode};
use crate::gramian::{
    assemble_gramian, gramian_index, index_from_gramian, run_perturbation_trajectories,
    PerturbationRunSet,
};
use crate::integrate::Trajectory;
use crate::model::{EstimationSpace, ModelSpec, ObserveFn};
use crate::models::wave::{
    at_rest, boundary_total, eigenmode, energy_series, wave_model, WaveConfig,
};
use crate::output::{OutputSeries, Weighting};

/// Relative change below which two consecutive index values count as flat.
pub const STABILIZATION_TOL: f64 = 0.01;

/// Index values across a family of resolutions, plus where (if anywhere)
/// they stabilize: the first resolution followed by two consecutive relative
/// changes under 1%.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub resolutions: Vec<usize>,
    pub indices: Vec<f64>,
    pub sigma_mins: Vec<f64>,
    /// First resolution of the detected plateau.
    pub stabilized_at: Option<usize>,
    /// The index at the finest resolution once a plateau exists.
    pub stabilized_value: Option<f64>,
    /// Set when a resolution failed; earlier results are preserved.
    pub aborted: Option<SweepAbort>,
}

#[derive(Clone, Debug)]
pub struct SweepAbort {
    pub resolution: usize,
    pub message: String,
}

/// Find the plateau start: the first position i such that the relative
/// changes i -> i+1 and i+1 -> i+2 are both below the tolerance. Returns
/// (plateau start resolution, final value).
fn detect_stabilization(resolutions: &[usize], indices: &[f64]) -> (Option<usize>, Option<f64>) {
    let n = indices.len();
    if n < 3 {
        return (None, None);
    }
    let rel = |a: f64, b: f64| -> f64 {
        if a == 0.0 {
            f64::INFINITY
        } else {
            (b - a).abs() / a.abs()
        }
    };
    for i in 0..n - 2 {
        if rel(indices[i], indices[i + 1]) < STABILIZATION_TOL
            && rel(indices[i + 1], indices[i + 2]) < STABILIZATION_TOL
        {
            return (Some(resolutions[i]), Some(indices[n - 1]));
        }
    }
    (None, None)
}

/// Compute the index at every resolution in order, via a builder that turns
/// a resolution into a ready-to-run (model, initial state, space, rho)
/// quadruple. Resolutions fan out over the thread pool; a failing resolution
/// aborts the sweep but keeps every result before it.
pub fn index_sweep<F>(resolutions: &[usize], mode: ExecMode, build: F) -> SweepResult
where
    F: Fn(usize) -> Result<(ModelSpec, Vec<f64>, EstimationSpace, f64)> + Send + Sync,
{
    let jobs: Vec<usize> = resolutions.to_vec();
    let results = map_ordered(mode, jobs, |n| -> Result<(f64, f64)> {
        let (model, u0, space, rho) = build(n)?;
        let (_, report) = gramian_index(&model, &u0, &space, rho, ExecMode::Sequential)?;
        Ok((report.index, report.sigma_min))
    });
    let mut out = SweepResult {
        resolutions: Vec::new(),
        indices: Vec::new(),
        sigma_mins: Vec::new(),
        stabilized_at: None,
        stabilized_value: None,
        aborted: None,
    };
    for (&n, res) in resolutions.iter().zip(results) {
        match res {
            Ok((index, sigma_min)) => {
                out.resolutions.push(n);
                out.indices.push(index);
                out.sigma_mins.push(sigma_min);
            }
            Err(e) => {
                out.aborted = Some(SweepAbort {
                    resolution: n,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let (at, value) = detect_stabilization(&out.resolutions, &out.indices);
    out.stabilized_at = at;
    out.stabilized_value = value;
    out
}

/// Initial-data families for the wave boundary-observation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveData {
    /// The smoothest standing mode, resolved at every resolution.
    LowestMode,
    /// The most oscillatory mode the grid can carry; its energy hides from
    /// the boundary observation ever better as the grid refines.
    HighestMode,
}

/// Energy-vs-boundary-observation ratios across wave resolutions: for each
/// grid, the initial energy divided by the total squared boundary flux
/// `dt * sum_k (q_n(t_k)/h)^2`.
#[derive(Clone, Debug)]
pub struct RatioStudy {
    pub resolutions: Vec<usize>,
    pub ratios: Vec<f64>,
    pub initial_energies: Vec<f64>,
    pub boundary_totals: Vec<f64>,
}

/// Initial energy and total boundary observation of one wave run, with
/// zero-data guards: both the energy and the boundary record must be
/// strictly positive for the ratio to mean anything.
pub fn wave_energy_ratio(cfg: &WaveConfig, u0: &[f64]) -> Result<(f64, f64)> {
    let model = wave_model(cfg)?;
    let traj = model.simulate(u0)?;
    let es = energy_series(cfg, &traj);
    let e0 = es.total[0];
    if e0 <= 0.0 {
        return Err(Error::ZeroData("initial wave energy is zero".to_string()));
    }
    let b = boundary_total(cfg, &traj);
    if b <= 0.0 {
        return Err(Error::ZeroData(
            "boundary observation is identically zero".to_string(),
        ));
    }
    Ok((e0, b))
}

pub fn wave_ratio_study(
    base: &WaveConfig,
    resolutions: &[usize],
    family: WaveData,
    mode: ExecMode,
) -> Result<RatioStudy> {
    let jobs: Vec<usize> = resolutions.to_vec();
    let results = map_ordered(mode, jobs, |n| -> Result<(f64, f64)> {
        let cfg = WaveConfig {
            interior_points: n,
            ..base.clone()
        };
        let k = match family {
            WaveData::LowestMode => 1,
            WaveData::HighestMode => n,
        };
        let u0 = at_rest(eigenmode(&cfg, k));
        wave_energy_ratio(&cfg, &u0)
    });
    let mut study = RatioStudy {
        resolutions: resolutions.to_vec(),
        ratios: Vec::new(),
        initial_energies: Vec::new(),
        boundary_totals: Vec::new(),
    };
    for res in results {
        let (e0, b) = res?;
        study.initial_energies.push(e0);
        study.boundary_totals.push(b);
        study.ratios.push(e0 / b);
    }
    Ok(study)
}

/// One candidate sensor layout for a placement comparison.
pub struct SensorCandidate {
    pub label: String,
    pub observe: ObserveFn,
    pub num_channels: usize,
}

/// Index per candidate layout, ranked best (lowest index) first. Failed
/// candidates are recorded, not fatal.
#[derive(Debug)]
pub struct SensorSweepResult {
    pub labels: Vec<String>,
    pub indices: Vec<f64>,
    pub sigma_mins: Vec<f64>,
    /// Positions into `labels`, sorted by ascending index.
    pub ranking: Vec<usize>,
    pub failures: Vec<(String, String)>,
}

fn observe_states(
    traj: &Trajectory,
    times: &[f64],
    weighting: Weighting,
    observe: &ObserveFn,
    channels: usize,
) -> Result<OutputSeries> {
    let sampled = traj.sampled_states();
    if sampled.len() != times.len() {
        return Err(Error::Shape(format!(
            "trajectory has {} sampled states, expected {}",
            sampled.len(),
            times.len()
        )));
    }
    let mut values = Array2::<f64>::zeros((times.len(), channels));
    for (k, (t, u)) in times.iter().zip(sampled).enumerate() {
        let y = observe(*t, u);
        if y.len() != channels {
            return Err(Error::Shape(format!(
                "candidate sensor returned {} channels, declared {}",
                y.len(),
                channels
            )));
        }
        for (c, &yc) in y.iter().enumerate() {
            values[[k, c]] = yc;
        }
    }
    OutputSeries::new(times.to_vec(), values, weighting)
}

/// Compare sensor layouts on one set of cached perturbation trajectories:
/// the dynamics run once, each candidate re-reads the states through its own
/// sensor map and gets its own Gramian and index.
pub fn sensor_sweep(
    model: &ModelSpec,
    space: &EstimationSpace,
    u0: &[f64],
    rho: f64,
    candidates: Vec<SensorCandidate>,
    mode: ExecMode,
) -> Result<SensorSweepResult> {
    let trajs = run_perturbation_trajectories(model, u0, space, rho, mode)?;
    let s = space.gram_matrix();
    let times = &model.sample_times;
    let mut result = SensorSweepResult {
        labels: Vec::new(),
        indices: Vec::new(),
        sigma_mins: Vec::new(),
        ranking: Vec::new(),
        failures: Vec::new(),
    };
    for cand in candidates {
        let run = || -> Result<(f64, f64)> {
            let nominal = observe_states(
                &trajs.nominal,
                times,
                model.weighting,
                &cand.observe,
                cand.num_channels,
            )?;
            let mut plus = Vec::with_capacity(trajs.plus.len());
            let mut minus = Vec::with_capacity(trajs.minus.len());
            for t in &trajs.plus {
                plus.push(observe_states(
                    t,
                    times,
                    model.weighting,
                    &cand.observe,
                    cand.num_channels,
                )?);
            }
            for t in &trajs.minus {
                minus.push(observe_states(
                    t,
                    times,
                    model.weighting,
                    &cand.observe,
                    cand.num_channels,
                )?);
            }
            let runs = PerturbationRunSet {
                rho: trajs.rho,
                direction_labels: trajs.direction_labels.clone(),
                nominal,
                plus,
                minus,
            };
            let gram = assemble_gramian(&runs, &s)?;
            let report = index_from_gramian(&gram, &model.id, &space.label);
            Ok((report.index, report.sigma_min))
        };
        match run() {
            Ok((index, sigma_min)) => {
                result.labels.push(cand.label);
                result.indices.push(index);
                result.sigma_mins.push(sigma_min);
            }
            Err(e) => result.failures.push((cand.label, e.to_string())),
        }
    }
    let mut order: Vec<usize> = (0..result.indices.len()).collect();
    order.sort_by(|&a, &b| {
        result.indices[a]
            .partial_cmp(&result.indices[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    result.ranking = order;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heat::{heat_estimation_space, heat_model, HeatConfig};

    #[test]
    fn flat_sequences_stabilize_at_the_first_resolution() {
        let (at, value) = detect_stabilization(&[10, 20, 30, 40], &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(at, Some(10));
        assert_eq!(value, Some(2.0));
    }

    #[test]
    fn plateau_start_skips_the_transient() {
        let (at, value) = detect_stabilization(&[10, 20, 30, 40, 50], &[1.0, 2.0, 3.0, 3.01, 3.02]);
        assert_eq!(at, Some(30));
        assert_eq!(value, Some(3.02));
    }

    #[test]
    fn drifting_sequences_do_not_stabilize() {
        let (at, value) = detect_stabilization(&[10, 20, 30, 40], &[1.0, 1.2, 1.44, 1.73]);
        assert_eq!(at, None);
        assert_eq!(value, None);
    }

    #[test]
    fn modal_heat_sweep_is_resolution_independent() {
        // The modal model computes the same index at every resolution, so
        // the sweep stabilizes immediately.
        let resolutions = [3usize, 4, 5, 6];
        let sweep = index_sweep(&resolutions, ExecMode::Sequential, |n| {
            let cfg = HeatConfig {
                modes: n,
                samples: 400,
                ..HeatConfig::default()
            };
            let model = heat_model(&cfg)?;
            let space = heat_estimation_space(&cfg, 3)?;
            Ok((model, vec![0.0; n], space, 1e-3))
        });
        assert!(sweep.aborted.is_none());
        assert_eq!(sweep.stabilized_at, Some(3));
        let v = sweep.stabilized_value.unwrap();
        for &idx in &sweep.indices {
            assert!((idx - v).abs() / v < 1e-10);
        }
    }

    #[test]
    fn failing_resolution_preserves_partial_results() {
        let resolutions = [3usize, 4, 0, 6];
        let sweep = index_sweep(&resolutions, ExecMode::Sequential, |n| {
            let cfg = HeatConfig {
                modes: n,
                samples: 50,
                ..HeatConfig::default()
            };
            let model = heat_model(&cfg)?;
            let space = heat_estimation_space(&cfg, 2)?;
            Ok((model, vec![0.0; n], space, 1e-3))
        });
        assert_eq!(sweep.indices.len(), 2);
        let abort = sweep.aborted.unwrap();
        assert_eq!(abort.resolution, 0);
    }

    #[test]
    fn zero_wave_data_is_rejected() {
        let cfg = WaveConfig {
            interior_points: 10,
            ..WaveConfig::default()
        };
        let err = wave_energy_ratio(&cfg, &vec![0.0; 20]).unwrap_err();
        assert!(matches!(err, Error::ZeroData(_)));
    }

    #[test]
    fn eigenmode_families_produce_valid_ratios() {
        let base = WaveConfig::default();
        let study =
            wave_ratio_study(&base, &[10, 20], WaveData::LowestMode, ExecMode::Sequential).unwrap();
        assert_eq!(study.ratios.len(), 2);
        for &r in &study.ratios {
            assert!(r.is_finite() && r > 0.0);
        }
    }
}
