use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exec::{map_ordered, ExecMode};
use crate::integrate::Trajectory;
use crate::linalg::generalized_sym_eig;
use crate::model::{EstimationSpace, ModelSpec};
use crate::output::OutputSeries;

/// Relative eigenvalue floor: when the smallest Gramian eigenvalue does not
/// exceed this fraction of the largest, the configuration is reported as
/// practically unobservable and the index is +infinity.
pub const UNOBSERVABLE_FLOOR: f64 = 1e-14;

/// Where a reported index came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// Eigenvalue analysis of the empirical Gramian.
    Gramian,
    /// Direct minimization of the output norm over the perturbation sphere.
    DirectOptimization,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Gramian => write!(f, "gramian"),
            Source::DirectOptimization => write!(f, "direct"),
        }
    }
}

/// Sensor records of the 2s+1 simulations needed for one empirical Gramian:
/// the nominal run plus a +rho and a -rho run along every basis direction.
#[derive(Debug)]
pub struct PerturbationRunSet {
    pub rho: f64,
    pub direction_labels: Vec<String>,
    pub nominal: OutputSeries,
    pub plus: Vec<OutputSeries>,
    pub minus: Vec<OutputSeries>,
}

/// Same fan-out as [`run_perturbations`] but keeping the full trajectories,
/// so alternative sensor maps can be evaluated without re-simulating.
pub struct PerturbationTrajectories {
    pub rho: f64,
    pub direction_labels: Vec<String>,
    pub nominal: Trajectory,
    pub plus: Vec<Trajectory>,
    pub minus: Vec<Trajectory>,
}

fn perturbed_states(
    u0: &[f64],
    space: &EstimationSpace,
    rho: f64,
) -> Result<Vec<(String, Vec<f64>)>> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Config(format!(
            "perturbation size must be positive and finite, got {}",
            rho
        )));
    }
    let mut jobs = Vec::with_capacity(2 * space.dim() + 1);
    jobs.push(("nominal".to_string(), u0.to_vec()));
    for (e, label) in space.basis.iter().zip(&space.direction_labels) {
        for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
            let mut u = u0.to_vec();
            for (ui, &ei) in u.iter_mut().zip(e) {
                *ui += sign * rho * ei;
            }
            jobs.push((format!("{}{}", tag, label), u));
        }
    }
    Ok(jobs)
}

/// Run the 2s+1 simulations for an empirical Gramian: the nominal initial
/// state and `u0 +- rho e_j` for every direction of the estimation space.
/// Runs fan out over the thread pool in `Parallel` mode; results are
/// identical in both modes. A failing run reports the direction it belonged
/// to.
pub fn run_perturbations(
    model: &ModelSpec,
    u0: &[f64],
    space: &EstimationSpace,
    rho: f64,
    mode: ExecMode,
) -> Result<PerturbationRunSet> {
    space.validate(model.dim)?;
    let jobs = perturbed_states(u0, space, rho)?;
    let results = map_ordered(mode, jobs, |(label, u)| {
        model.outputs(&u).map_err(|e| Error::Perturbation {
            label: label.clone(),
            source: Box::new(e),
        })
    });
    let mut series = results.into_iter().collect::<Result<Vec<_>>>()?;
    let nominal = series.remove(0);
    let mut plus = Vec::with_capacity(space.dim());
    let mut minus = Vec::with_capacity(space.dim());
    for pair in series.chunks_exact(2) {
        plus.push(pair[0].clone());
        minus.push(pair[1].clone());
    }
    Ok(PerturbationRunSet {
        rho,
        direction_labels: space.direction_labels.clone(),
        nominal,
        plus,
        minus,
    })
}

/// Trajectory-retaining variant of [`run_perturbations`].
pub fn run_perturbation_trajectories(
    model: &ModelSpec,
    u0: &[f64],
    space: &EstimationSpace,
    rho: f64,
    mode: ExecMode,
) -> Result<PerturbationTrajectories> {
    space.validate(model.dim)?;
    let jobs = perturbed_states(u0, space, rho)?;
    let results = map_ordered(mode, jobs, |(label, u)| {
        model.simulate(&u).map_err(|e| Error::Perturbation {
            label: label.clone(),
            source: Box::new(e),
        })
    });
    let mut trajs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let nominal = trajs.remove(0);
    let mut plus = Vec::with_capacity(space.dim());
    let mut minus = Vec::with_capacity(space.dim());
    let mut it = trajs.into_iter();
    while let (Some(p), Some(m)) = (it.next(), it.next()) {
        plus.push(p);
        minus.push(m);
    }
    Ok(PerturbationTrajectories {
        rho,
        direction_labels: space.direction_labels.clone(),
        nominal,
        plus,
        minus,
    })
}

/// An assembled empirical Gramian together with the basis metric and the
/// generalized eigen-decomposition `G xi = sigma S xi`.
pub struct EmpiricalGramian {
    pub g: Array2<f64>,
    pub s: Array2<f64>,
    pub rho: f64,
    pub direction_labels: Vec<String>,
    /// Ascending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Matching S-normalized eigenvectors as columns.
    pub eigenvectors: Array2<f64>,
}

/// Assemble `G_ij = <dy_i, dy_j>_Y / (4 rho^2)` from the central differences
/// `dy_j = y(+rho e_j) - y(-rho e_j)` and solve the generalized eigenproblem
/// against the basis Gram matrix `s`.
pub fn assemble_gramian(runs: &PerturbationRunSet, s: &Array2<f64>) -> Result<EmpiricalGramian> {
    let dim = runs.plus.len();
    if runs.minus.len() != dim || dim == 0 {
        return Err(Error::Shape(
            "perturbation run set is incomplete".to_string(),
        ));
    }
    if s.nrows() != dim || s.ncols() != dim {
        return Err(Error::Shape(format!(
            "metric matrix is {:?} but there are {} directions",
            s.dim(),
            dim
        )));
    }
    let mut deltas = Vec::with_capacity(dim);
    for (p, m) in runs.plus.iter().zip(&runs.minus) {
        deltas.push(p.sub(m)?);
    }
    let mut g = Array2::<f64>::zeros((dim, dim));
    let scale = 1.0 / (4.0 * runs.rho * runs.rho);
    for i in 0..dim {
        for j in i..dim {
            let v = scale * deltas[i].inner(&deltas[j])?;
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    let (eigenvalues, eigenvectors) = generalized_sym_eig(&g, s)?;
    Ok(EmpiricalGramian {
        g,
        s: s.clone(),
        rho: runs.rho,
        direction_labels: runs.direction_labels.clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// The headline result of one observability analysis.
#[derive(Clone, Debug)]
pub struct ObservabilityReport {
    pub model_id: String,
    pub space_label: String,
    pub rho: f64,
    /// Smallest generalized eigenvalue of (G, S).
    pub sigma_min: f64,
    /// Largest generalized eigenvalue of (G, S).
    pub sigma_max: f64,
    /// Smallest output deviation reachable from the rho-sphere: rho*sqrt(sigma_min).
    pub epsilon: f64,
    /// Unobservability index rho/epsilon = 1/sqrt(sigma_min); +inf when the
    /// configuration is practically unobservable.
    pub index: f64,
    /// Set when sigma_min <= 1e-14 * sigma_max.
    pub practically_unobservable: bool,
    /// Coefficients (in the estimation basis) of the worst-case direction.
    pub worst_direction: Vec<f64>,
    pub source: Source,
}

impl ObservabilityReport {
    /// Worst-case initial-data error implied by a sensor-noise level:
    /// a measurement mismatch of `sensor_err` in the output norm may hide an
    /// initial-state error of up to `sensor_err / sqrt(sigma_min)`.
    pub fn worst_error_bound(&self, sensor_err: f64) -> f64 {
        if self.practically_unobservable {
            f64::INFINITY
        } else {
            sensor_err / self.sigma_min.sqrt()
        }
    }
}

/// Extract sigma_min, epsilon and the index from an assembled Gramian.
pub fn index_from_gramian(
    gram: &EmpiricalGramian,
    model_id: &str,
    space_label: &str,
) -> ObservabilityReport {
    let n = gram.eigenvalues.len();
    let sigma_min = gram.eigenvalues[0];
    let sigma_max = gram.eigenvalues[n - 1];
    let practically_unobservable = sigma_min <= UNOBSERVABLE_FLOOR * sigma_max.max(0.0);
    let (index, epsilon) = if practically_unobservable {
        (f64::INFINITY, gram.rho * sigma_min.max(0.0).sqrt())
    } else {
        (1.0 / sigma_min.sqrt(), gram.rho * sigma_min.sqrt())
    };
    let worst_direction = (0..n).map(|i| gram.eigenvectors[[i, 0]]).collect();
    ObservabilityReport {
        model_id: model_id.to_string(),
        space_label: space_label.to_string(),
        rho: gram.rho,
        sigma_min,
        sigma_max,
        epsilon,
        index,
        practically_unobservable,
        worst_direction,
        source: Source::Gramian,
    }
}

/// End-to-end pipeline: perturbation runs, Gramian assembly, eigenvalue
/// analysis, report.
pub fn gramian_index(
    model: &ModelSpec,
    u0: &[f64],
    space: &EstimationSpace,
    rho: f64,
    mode: ExecMode,
) -> Result<(EmpiricalGramian, ObservabilityReport)> {
    let runs = run_perturbations(model, u0, space, rho, mode)?;
    let s = space.gram_matrix();
    let gram = assemble_gramian(&runs, &s)?;
    let report = index_from_gramian(&gram, &model.id, &space.label);
    Ok((gram, report))
}

/// Default perturbation size: a fixed fraction of the nominal state's norm,
/// floored so that zero or tiny nominal states still get a usable size.
pub fn default_rho(model: &ModelSpec, u0: &[f64]) -> f64 {
    1e-3 * (model.state_norm)(u0).max(1.0)
}
