//! Shallow-water equations on [-1, 1] over a linear beach, discretized with
//! continuous spectral elements on LGL nodes.
//!
//! State layout: `[h; m]` where `h` is the water depth and `m = h u` the
//! momentum, both on the global mesh nodes. The walls are reflective
//! (momentum pinned to zero), fluxes are conservative, the bed slope enters
//! as a momentum source, and a mild modal filter damps the highest Legendre
//! mode of every element each step to keep the collocation stable. Three
//! depth gauges record the water height.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{EstimationSpace, ModelSpec, Propagator, SampledFn};
use crate::models::lgl::{lgl_rule, top_mode_damping};
use crate::output::Weighting;

#[derive(Clone, Debug)]
pub struct SweConfig {
    /// Final time T.
    pub final_time: f64,
    /// Number of spectral elements.
    pub elements: usize,
    /// Polynomial order within each element.
    pub poly_order: usize,
    /// Gravitational acceleration.
    pub gravity: f64,
    /// Internal time step of the integrator.
    pub dt: f64,
    /// Number of sample intervals; records are kept at k T / samples.
    pub samples: usize,
    /// Depth gauge locations in (-1, 1).
    pub sensors: Vec<f64>,
    /// Number of cos/sin pairs in the uncertainty basis (plus the constant).
    pub basis_pairs: usize,
    /// Include the bed-slope momentum source (false integrates the flat-bed
    /// equations literally).
    pub topography_source: bool,
    /// Interpret the initial profile as the free surface instead of the
    /// water depth (the depth is then profile minus bed, which dries out at
    /// the shallow wall).
    pub surface_initial_data: bool,
    /// Apply the per-element modal filter each step.
    pub filter: bool,
}

impl Default for SweConfig {
    fn default() -> Self {
        Self {
            final_time: 1.0,
            elements: 54,
            poly_order: 4,
            gravity: 9.81,
            dt: 1.25e-3,
            samples: 800,
            sensors: vec![0.2, 0.5, 0.8],
            basis_pairs: 6,
            topography_source: true,
            surface_initial_data: false,
            filter: true,
        }
    }
}

impl SweConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0 && self.dt > 0.0) {
            return Err(Error::Config(
                "shallow-water model needs positive final time and dt".to_string(),
            ));
        }
        if self.elements < 2 || self.poly_order < 2 {
            return Err(Error::Config(
                "shallow-water model needs at least 2 elements of order 2".to_string(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::Config(
                "shallow-water model needs at least one sample".to_string(),
            ));
        }
        for &x in &self.sensors {
            if !(x > -1.0 && x < 1.0) {
                return Err(Error::Config(format!(
                    "depth gauge at {} lies outside (-1, 1)",
                    x
                )));
            }
        }
        if self.basis_pairs == 0 {
            return Err(Error::Config(
                "shallow-water model needs at least one basis pair".to_string(),
            ));
        }
        Ok(())
    }

    /// Runge-Kutta steps per sample interval implied by `dt`.
    pub fn substeps(&self) -> usize {
        let per_sample = self.final_time / self.samples as f64;
        (per_sample / self.dt).round().max(1.0) as usize
    }
}

/// Linear beach: the bed rises toward the left wall.
pub fn bathymetry(x: f64) -> f64 {
    0.1 * (1.0 - x)
}

/// Reference initial depth: a Gaussian hump over a constant offshore depth.
pub fn initial_profile(x: f64) -> f64 {
    0.1 * (-8.0 * (x - 0.5) * (x - 0.5)).exp() + 0.2
}

/// Continuous spectral-element mesh: global node coordinates, summed
/// quadrature weights, and the number of elements sharing each node.
pub struct SweMesh {
    pub elements: usize,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub share_counts: Vec<f64>,
    /// Reference-element differentiation matrix.
    pub diff: Array2<f64>,
    /// Reference-to-physical derivative scale 2 / element width.
    pub scale: f64,
}

impl SweMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn global_index(&self, element: usize, local: usize) -> usize {
        element * self.order + local
    }
}

pub fn build_mesh(cfg: &SweConfig) -> Result<SweMesh> {
    cfg.validate()?;
    let rule = lgl_rule(cfg.poly_order)?;
    let n_e = cfg.elements;
    let p = cfg.poly_order;
    let width = 2.0 / n_e as f64;
    let n_nodes = n_e * p + 1;
    let mut nodes = vec![0.0; n_nodes];
    let mut weights = vec![0.0; n_nodes];
    let mut share_counts = vec![0.0; n_nodes];
    for e in 0..n_e {
        let left = -1.0 + e as f64 * width;
        for i in 0..=p {
            let g = e * p + i;
            nodes[g] = left + 0.5 * (rule.nodes[i] + 1.0) * width;
            weights[g] += rule.weights[i] * 0.5 * width;
            share_counts[g] += 1.0;
        }
    }
    Ok(SweMesh {
        elements: n_e,
        order: p,
        nodes,
        weights,
        share_counts,
        diff: rule.diff,
        scale: 2.0 / width,
    })
}

/// Initial state [h; 0] from the reference profile, interpreted as depth or
/// free surface per the configuration.
pub fn default_initial_state(cfg: &SweConfig, mesh: &SweMesh) -> Vec<f64> {
    let n = mesh.num_nodes();
    let mut u = vec![0.0; 2 * n];
    for (g, &x) in mesh.nodes.iter().enumerate() {
        u[g] = if cfg.surface_initial_data {
            initial_profile(x) - bathymetry(x)
        } else {
            initial_profile(x)
        };
    }
    u
}

fn interface_averaged_apply(mesh: &SweMesh, matrix: &Array2<f64>, field: &[f64], out: &mut [f64]) {
    // Apply a per-element nodal matrix and average the two contributions at
    // shared interface nodes.
    let p = mesh.order;
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for e in 0..mesh.elements {
        for i in 0..=p {
            let mut acc = 0.0;
            for j in 0..=p {
                acc += matrix[[i, j]] * field[mesh.global_index(e, j)];
            }
            out[mesh.global_index(e, i)] += acc;
        }
    }
    for (o, &c) in out.iter_mut().zip(&mesh.share_counts) {
        *o /= c;
    }
}

/// Build the runnable model for this configuration.
pub fn swe_model(cfg: &SweConfig) -> Result<ModelSpec> {
    cfg.validate()?;
    let mesh = Arc::new(build_mesh(cfg)?);
    let rule = lgl_rule(cfg.poly_order)?;
    let damping = top_mode_damping(&rule)?;
    let n = mesh.num_nodes();
    let g = cfg.gravity;
    let with_source = cfg.topography_source;

    let rhs = {
        let mesh = Arc::clone(&mesh);
        move |_t: f64, u: &[f64]| -> Vec<f64> {
            let (h, m) = u.split_at(n);
            let p = mesh.order;
            let mut du = vec![0.0; 2 * n];
            {
                let (dh, dm) = du.split_at_mut(n);
                for e in 0..mesh.elements {
                    for i in 0..=p {
                        let gi = mesh.global_index(e, i);
                        let mut dfh = 0.0;
                        let mut dfm = 0.0;
                        for j in 0..=p {
                            let gj = mesh.global_index(e, j);
                            let flux_h = m[gj];
                            let flux_m = m[gj] * m[gj] / h[gj] + 0.5 * g * h[gj] * h[gj];
                            dfh += mesh.diff[[i, j]] * flux_h;
                            dfm += mesh.diff[[i, j]] * flux_m;
                        }
                        dh[gi] -= mesh.scale * dfh;
                        dm[gi] -= mesh.scale * dfm;
                        if with_source {
                            // Bed slope d(bed)/dx = -0.1 enters as
                            // -g h d(bed)/dx = +0.1 g h.
                            dm[gi] += 0.1 * g * h[gi];
                        }
                    }
                }
                for gi in 0..n {
                    dh[gi] /= mesh.share_counts[gi];
                    dm[gi] /= mesh.share_counts[gi];
                }
                // Reflective walls: the momentum stays zero there.
                dm[0] = 0.0;
                dm[n - 1] = 0.0;
            }
            du
        }
    };

    let post_step: Option<Box<dyn Fn(f64, &mut [f64]) + Send + Sync>> = if cfg.filter {
        let mesh = Arc::clone(&mesh);
        Some(Box::new(move |_t: f64, u: &mut [f64]| {
            let mut tmp = vec![0.0; n];
            for block in 0..2 {
                let field: Vec<f64> = u[block * n..(block + 1) * n].to_vec();
                interface_averaged_apply(&mesh, &damping, &field, &mut tmp);
                u[block * n..(block + 1) * n].copy_from_slice(&tmp);
            }
            // Re-pin the reflective walls after filtering.
            u[n] = 0.0;
            u[2 * n - 1] = 0.0;
        }))
    } else {
        None
    };

    let check = {
        move |t: f64, u: &[f64]| -> Result<()> {
            for &hx in &u[..n] {
                if hx <= 0.0 {
                    return Err(Error::InvalidState {
                        t,
                        message: format!("dry state (water depth {:.3e})", hx),
                    });
                }
            }
            Ok(())
        }
    };

    let observe = {
        let mesh = Arc::clone(&mesh);
        let sensors = cfg.sensors.clone();
        move |_t: f64, u: &[f64]| -> Vec<f64> {
            sensors
                .iter()
                .map(|&x| interp_linear(&mesh.nodes, &u[..n], x))
                .collect()
        }
    };

    let state_norm = {
        let mesh = Arc::clone(&mesh);
        move |u: &[f64]| -> f64 {
            let (h, m) = u.split_at(n);
            let mut acc = 0.0;
            for ((&w, &hh), &mm) in mesh.weights.iter().zip(h).zip(m) {
                acc += w * (hh * hh + mm * mm);
            }
            acc.sqrt()
        }
    };

    let lift = {
        let mesh = Arc::clone(&mesh);
        move |u: &[f64]| -> SampledFn {
            let nodes = mesh.nodes.clone();
            let h = u[..n].to_vec();
            Box::new(move |x: f64| interp_linear(&nodes, &h, x))
        }
    };
    let restrict = {
        let mesh = Arc::clone(&mesh);
        move |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            let mut u = vec![0.0; 2 * n];
            for (g, &x) in mesh.nodes.iter().enumerate() {
                u[g] = f(x);
            }
            u
        }
    };

    let dt_sample = cfg.final_time / cfg.samples as f64;
    let sample_times = (0..=cfg.samples).map(|k| k as f64 * dt_sample).collect();
    Ok(ModelSpec {
        id: "swe".to_string(),
        dim: 2 * n,
        sample_times,
        weighting: Weighting::DtWeightedL2,
        propagator: Propagator::Rk4 {
            substeps: cfg.substeps(),
        },
        rhs: Some(Box::new(rhs)),
        accel: None,
        observe: Box::new(observe),
        num_channels: cfg.sensors.len(),
        state_norm: Box::new(state_norm),
        post_step,
        check: Some(Box::new(check)),
        lift: Some(Box::new(lift)),
        restrict: Some(Box::new(restrict)),
        domain: Some((-1.0, 1.0)),
        grid_size: n,
    })
}

/// Depth-gauge map reading the water column at an alternative set of
/// locations; used to compare candidate gauge layouts on cached
/// trajectories.
pub fn make_observe(cfg: &SweConfig, sensors: Vec<f64>) -> Result<crate::model::ObserveFn> {
    cfg.validate()?;
    if sensors.is_empty() {
        return Err(Error::Config("gauge candidate list is empty".into()));
    }
    for &x in &sensors {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::Config(format!(
                "gauge at {} lies outside [-1, 1]",
                x
            )));
        }
    }
    let mesh = build_mesh(cfg)?;
    let n = mesh.num_nodes();
    Ok(Box::new(move |_t: f64, u: &[f64]| -> Vec<f64> {
        sensors
            .iter()
            .map(|&x| interp_linear(&mesh.nodes, &u[..n], x))
            .collect()
    }))
}

fn interp_linear(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0];
    }
    if x >= nodes[n - 1] {
        return values[n - 1];
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if nodes[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
    values[lo] * (1.0 - w) + values[hi] * w
}

/// Uncertainty directions for the initial depth: the constant 1/2 plus
/// `cos(k pi x)` and `sin(k pi x)` for k = 1..=pairs, all sampled on the
/// mesh nodes into the depth block (zero momentum). Under the mesh
/// quadrature the metric is essentially `diag(1/2, 1, ..., 1)`.
pub fn swe_estimation_space(cfg: &SweConfig, mesh: &SweMesh) -> Result<EstimationSpace> {
    cfg.validate()?;
    let n = mesh.num_nodes();
    let mut basis = Vec::with_capacity(1 + 2 * cfg.basis_pairs);
    let mut labels = Vec::with_capacity(1 + 2 * cfg.basis_pairs);
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mut e = vec![0.0; 2 * n];
        for (g, &x) in mesh.nodes.iter().enumerate() {
            e[g] = f(x);
        }
        e
    };
    basis.push(sample(&|_x| 0.5));
    labels.push("mean".to_string());
    for k in 1..=cfg.basis_pairs {
        let kf = k as f64 * std::f64::consts::PI;
        basis.push(sample(&move |x| (kf * x).cos()));
        labels.push(format!("cos_{}", k));
        basis.push(sample(&move |x| (kf * x).sin()));
        labels.push(format!("sin_{}", k));
    }
    let weights = mesh.weights.clone();
    Ok(EstimationSpace {
        label: format!("depth_trig_{}", cfg.basis_pairs),
        basis,
        direction_labels: labels,
        inner: Box::new(move |u: &[f64], v: &[f64]| {
            let n = weights.len();
            let mut acc = 0.0;
            for (i, &w) in weights.iter().enumerate() {
                acc += w * (u[i] * v[i] + u[n + i] * v[n + i]);
            }
            acc
        }),
    })
}

/// Total water volume `sum W h`, conserved by the discretization up to
/// round-off.
pub fn total_mass(mesh: &SweMesh, state: &[f64]) -> f64 {
    let n = mesh.num_nodes();
    mesh.weights
        .iter()
        .zip(&state[..n])
        .map(|(&w, &h)| w * h)
        .sum()
}
