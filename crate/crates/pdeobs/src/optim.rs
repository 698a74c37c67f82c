use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{map_ordered, ExecMode};
use crate::gramian::{gramian_index, ObservabilityReport, Source, UNOBSERVABLE_FLOOR};
use crate::model::{EstimationSpace, ModelSpec};

/// Tuning knobs for the direct minimization.
#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    /// Seed for the random starting points; fixed seed => identical results.
    pub seed: u64,
    /// Number of random starts added to the two eigenvector starts.
    pub random_starts: usize,
    /// Hard cap on simplex iterations per start.
    pub max_iters: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_starts: 8,
            max_iters: 2000,
        }
    }
}

/// Result of the direct search plus per-start diagnostics.
pub struct DirectOutcome {
    pub report: ObservabilityReport,
    /// Best output deviation found by each start (infinite when every
    /// evaluation of that start failed).
    pub start_values: Vec<f64>,
    /// Total number of objective evaluations across all starts.
    pub evaluations: usize,
}

/// Rescale `c` onto the sphere `c^T S c = rho^2`. Returns false when the
/// point has no usable S-norm to scale.
fn project_to_sphere(s: &Array2<f64>, c: &mut [f64], rho: f64) -> bool {
    let n = c.len();
    let mut q = 0.0;
    for i in 0..n {
        let mut si = 0.0;
        for j in 0..n {
            si += s[[i, j]] * c[j];
        }
        q += c[i] * si;
    }
    if !(q.is_finite() && q > 0.0) {
        return false;
    }
    let scale = rho / q.sqrt();
    for x in c.iter_mut() {
        *x *= scale;
    }
    true
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            let mut acc = 0.0;
            for (a, b) in simplex[i].iter().zip(&simplex[j]) {
                acc += (a - b) * (a - b);
            }
            d = d.max(acc.sqrt());
        }
    }
    d
}

/// Nelder-Mead restricted to the sphere `c^T S c = rho^2`: every candidate
/// vertex (reflection, expansion, contraction, shrink) is projected back to
/// the sphere before evaluation. Stops when the simplex diameter falls below
/// `1e-8 * rho` or after `max_iters` iterations. Returns the best vertex,
/// its value, and the number of objective evaluations.
fn nelder_mead_on_sphere(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    s: &Array2<f64>,
    start: &[f64],
    rho: f64,
    max_iters: usize,
) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |c: &[f64]| {
        evals += 1;
        objective(c)
    };

    // Initial simplex: the start plus one vertex per tangential direction.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for j in 0..n {
        let mut d = vec![0.0; n];
        d[j] = 1.0;
        // Remove the radial component so the step moves along the sphere.
        let mut sd = 0.0;
        for i in 0..n {
            let mut si = 0.0;
            for k in 0..n {
                si += s[[i, k]] * start[k];
            }
            sd += d[i] * si;
        }
        let mut v = start.to_vec();
        for i in 0..n {
            v[i] += 0.1 * rho * (d[i] - sd * start[i] / (rho * rho));
        }
        if !project_to_sphere(s, &mut v, rho)
            || diameter(&[start.to_vec(), v.clone()]) < 1e-14 * rho
        {
            // Degenerate tangent (start parallel to the axis): take the raw
            // axis step instead.
            v = start.to_vec();
            v[j] += 0.1 * rho;
            project_to_sphere(s, &mut v, rho);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    for _iter in 0..max_iters {
        // Order ascending by objective value.
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_sorted;
        values = values_sorted;

        if diameter(&simplex) < 1e-8 * rho {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let f_best = values[0];
        let f_second_worst = values[n - 1];
        let f_worst = values[n];

        let make = |alpha: f64| -> Option<Vec<f64>> {
            let mut c = vec![0.0; n];
            for i in 0..n {
                c[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
            }
            if project_to_sphere(s, &mut c, rho) {
                Some(c)
            } else {
                None
            }
        };

        let reflected = make(1.0);
        let f_reflected = reflected.as_ref().map_or(f64::INFINITY, |c| eval(c));

        if f_reflected < f_best {
            // Try to expand further in the same direction.
            let expanded = make(2.0);
            let f_expanded = expanded.as_ref().map_or(f64::INFINITY, |c| eval(c));
            if f_expanded < f_reflected {
                simplex[n] = expanded.unwrap();
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected.unwrap();
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < f_second_worst {
            simplex[n] = reflected.unwrap();
            values[n] = f_reflected;
            continue;
        }
        // Contract toward the centroid, outside or inside.
        let contracted = if f_reflected < f_worst {
            make(0.5)
        } else {
            make(-0.5)
        };
        let f_contracted = contracted.as_ref().map_or(f64::INFINITY, |c| eval(c));
        if f_contracted < f_worst.min(f_reflected) {
            simplex[n] = contracted.unwrap();
            values[n] = f_contracted;
            continue;
        }
        // Shrink everything toward the best vertex.
        let best = simplex[0].clone();
        for k in 1..=n {
            let mut v = vec![0.0; n];
            for i in 0..n {
                v[i] = best[i] + 0.5 * (simplex[k][i] - best[i]);
            }
            if !project_to_sphere(s, &mut v, rho) {
                v = best.clone();
            }
            values[k] = eval(&v);
            simplex[k] = v;
        }
    }

    let mut best_idx = 0;
    for k in 1..simplex.len() {
        if values[k] < values[best_idx] {
            best_idx = k;
        }
    }
    (simplex[best_idx].clone(), values[best_idx], evals)
}

/// Direct estimate of the smallest reachable output deviation: minimize
/// `||y(u0 + sum_j c_j e_j) - y(u0)||_Y` over the sphere `c^T S c = rho^2`.
///
/// Starts from both signs of the Gramian's worst eigenvector plus
/// `random_starts` seeded random points on the sphere; simulation failures
/// inside a start are treated as infinitely bad candidates, and the call
/// fails only when every start is stuck at an infinite value.
pub fn direct_epsilon(
    model: &ModelSpec,
    u0: &[f64],
    space: &EstimationSpace,
    rho: f64,
    opts: DirectOptions,
    mode: ExecMode,
) -> Result<DirectOutcome> {
    space.validate(model.dim)?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Config(format!(
            "perturbation size must be positive and finite, got {}",
            rho
        )));
    }
    let n = space.dim();
    let s = space.gram_matrix();

    // Seed the search with the Gramian's own worst direction.
    let (_, gram_report) = gramian_index(model, u0, space, rho, mode)?;
    let nominal = model.outputs(u0)?;

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for sign in [1.0, -1.0] {
        let mut c: Vec<f64> = gram_report
            .worst_direction
            .iter()
            .map(|&x| sign * rho * x)
            .collect();
        if project_to_sphere(&s, &mut c, rho) {
            starts.push(c);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < 2 + opts.random_starts {
        let mut c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if project_to_sphere(&s, &mut c, rho) {
            starts.push(c);
        }
    }

    let objective = |c: &[f64]| -> f64 {
        let u = {
            let mut u = u0.to_vec();
            let d = space.combine(c);
            for (ui, di) in u.iter_mut().zip(&d) {
                *ui += di;
            }
            u
        };
        match model.outputs(&u) {
            Ok(y) => match y.sub(&nominal).and_then(|d| d.norm()) {
                Ok(v) if v.is_finite() => v,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };

    let results = map_ordered(mode, starts, |start| {
        nelder_mead_on_sphere(&objective, &s, &start, rho, opts.max_iters)
    });

    let evaluations: usize = results.iter().map(|r| r.2).sum();
    let start_values: Vec<f64> = results.iter().map(|r| r.1).collect();
    let best = results
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::Optim("no starting points produced".to_string()))?;
    let (mut c_best, epsilon, _) = best;
    if !epsilon.is_finite() {
        return Err(Error::Optim(
            "every start failed to produce a finite output deviation".to_string(),
        ));
    }

    // Express the worst direction with the same normalization as the
    // eigenvector report: coefficients of a unit-S-norm state.
    for x in c_best.iter_mut() {
        *x /= rho;
    }
    let sigma_min = (epsilon / rho) * (epsilon / rho);
    let practically_unobservable = sigma_min <= UNOBSERVABLE_FLOOR * gram_report.sigma_max.max(0.0);
    let index = if practically_unobservable {
        f64::INFINITY
    } else {
        rho / epsilon
    };
    let report = ObservabilityReport {
        model_id: model.id.clone(),
        space_label: space.label.clone(),
        rho,
        sigma_min,
        sigma_max: gram_report.sigma_max,
        epsilon,
        index,
        practically_unobservable,
        worst_direction: c_best,
        source: Source::DirectOptimization,
    };
    Ok(DirectOutcome {
        report,
        start_values,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Propagator;
    use crate::output::Weighting;

    fn static_model(gains: [f64; 2]) -> ModelSpec {
        ModelSpec {
            id: "static".to_string(),
            dim: 2,
            sample_times: vec![1.0],
            weighting: Weighting::UnweightedL2,
            propagator: Propagator::ClosedForm(Box::new(|_t, u0: &[f64]| u0.to_vec())),
            rhs: None,
            accel: None,
            observe: Box::new(move |_t, u: &[f64]| vec![gains[0] * u[0], gains[1] * u[1]]),
            num_channels: 2,
            state_norm: Box::new(|u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt()),
            post_step: None,
            check: None,
            lift: None,
            restrict: None,
            domain: None,
            grid_size: 1,
        }
    }

    fn euclidean_space() -> EstimationSpace {
        EstimationSpace {
            label: "coords".to_string(),
            basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            direction_labels: vec!["x1".to_string(), "x2".to_string()],
            inner: Box::new(|u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum()),
        }
    }

    #[test]
    fn direct_search_matches_gramian_on_linear_model() {
        let model = static_model([1.0, 0.1]);
        let space = euclidean_space();
        let rho = 1e-2;
        let out = direct_epsilon(
            &model,
            &[0.3, -0.4],
            &space,
            rho,
            DirectOptions::default(),
            ExecMode::Sequential,
        )
        .unwrap();
        // Linear readout: the exact minimum is rho * weakest gain.
        assert!(
            (out.report.epsilon - 0.1 * rho).abs() < 1e-6 * rho,
            "epsilon = {}",
            out.report.epsilon
        );
        assert!((out.report.index - 10.0).abs() < 1e-3);
        assert_eq!(out.report.source, Source::DirectOptimization);
        assert!(out.evaluations > 0);
    }

    #[test]
    fn direct_search_respects_nontrivial_metric() {
        // Identity readout but ellipse constraint c1^2 + 4 c2^2 = rho^2:
        // the smallest Euclidean output deviation on that ellipse is rho/2.
        let model = static_model([1.0, 1.0]);
        let space = EstimationSpace {
            label: "weighted".to_string(),
            basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            direction_labels: vec!["x1".to_string(), "x2".to_string()],
            inner: Box::new(|u: &[f64], v: &[f64]| u[0] * v[0] + 4.0 * u[1] * v[1]),
        };
        let rho = 1e-2;
        let out = direct_epsilon(
            &model,
            &[0.0, 0.0],
            &space,
            rho,
            DirectOptions::default(),
            ExecMode::Sequential,
        )
        .unwrap();
        assert!(
            (out.report.epsilon - 0.5 * rho).abs() < 1e-6 * rho,
            "epsilon = {}",
            out.report.epsilon
        );
        assert!((out.report.index - 2.0).abs() < 1e-4);
    }

    #[test]
    fn all_failing_starts_is_an_error() {
        let mut model = static_model([1.0, 1.0]);
        // Fail every perturbed run but keep the nominal one alive so the
        // failure happens inside the minimization, not in the Gramian stage.
        model.propagator = Propagator::ClosedForm(Box::new(|_t, u0: &[f64]| u0.to_vec()));
        model.observe = Box::new(|_t, u: &[f64]| {
            if u[0].abs() + u[1].abs() > 1e-9 {
                vec![f64::NAN, f64::NAN]
            } else {
                vec![0.0, 0.0]
            }
        });
        let space = euclidean_space();
        // The Gramian stage itself errors on non-finite outputs, which is
        // also an acceptable failure; the direct stage must not return Ok.
        let res = direct_epsilon(
            &model,
            &[0.0, 0.0],
            &space,
            1e-2,
            DirectOptions::default(),
            ExecMode::Sequential,
        );
        assert!(res.is_err());
    }

    #[test]
    fn fixed_seed_gives_identical_results() {
        let model = static_model([1.0, 0.3]);
        let space = euclidean_space();
        let run = || {
            direct_epsilon(
                &model,
                &[0.1, 0.2],
                &space,
                1e-3,
                DirectOptions {
                    seed: 42,
                    ..DirectOptions::default()
                },
                ExecMode::Parallel,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.report.epsilon.to_bits(), b.report.epsilon.to_bits());
        assert_eq!(a.start_values.len(), b.start_values.len());
        for (x, y) in a.start_values.iter().zip(&b.start_values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
