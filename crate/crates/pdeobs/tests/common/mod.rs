//! Shared generators for the integration-test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdeobs::{EstimationSpace, ModelSpec, Propagator, Weighting};

/// Random stable diagonal linear model with a random channel matrix; flow
/// and outputs are closed form, so each case costs microseconds.
pub struct RandomLinear {
    pub rates: Vec<f64>,
    pub channels: Vec<Vec<f64>>,
}

impl RandomLinear {
    pub fn sample(rng: &mut ChaCha8Rng, dim: usize, channels: usize) -> Self {
        let rates = (0..dim).map(|_| rng.gen_range(0.1..2.0)).collect();
        let channels = (0..channels)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Self { rates, channels }
    }

    pub fn from_seed(seed: u64, dim: usize, channels: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample(&mut rng, dim, channels)
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn model(&self) -> ModelSpec {
        let rates = self.rates.clone();
        let gains = self.channels.clone();
        let dim = rates.len();
        let flow = move |t: f64, u0: &[f64]| -> Vec<f64> {
            u0.iter()
                .zip(&rates)
                .map(|(&u, &r)| u * (-r * t).exp())
                .collect()
        };
        let samples = 40;
        let final_time = 2.0;
        ModelSpec {
            id: "random_linear".to_string(),
            dim,
            sample_times: (0..=samples)
                .map(|k| k as f64 * final_time / samples as f64)
                .collect(),
            weighting: Weighting::DtWeightedL2,
            propagator: Propagator::ClosedForm(Box::new(flow)),
            rhs: None,
            accel: None,
            observe: Box::new(move |_t, u: &[f64]| {
                gains
                    .iter()
                    .map(|row| row.iter().zip(u).map(|(&g, &x)| g * x).sum())
                    .collect()
            }),
            num_channels: self.channels.len(),
            state_norm: Box::new(|u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt()),
            post_step: None,
            check: None,
            lift: None,
            restrict: None,
            domain: None,
            grid_size: dim,
        }
    }

    /// Coordinate directions under the Euclidean metric.
    pub fn space(&self) -> EstimationSpace {
        coordinate_space(self.dim())
    }
}

pub fn coordinate_space(dim: usize) -> EstimationSpace {
    let mut basis = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        basis.push(e);
    }
    EstimationSpace {
        label: "coords".to_string(),
        basis,
        direction_labels: (0..dim).map(|i| format!("x{}", i + 1)).collect(),
        inner: Box::new(|u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum()),
    }
}
