use ndarray::Array2;

use crate::error::{Error, Result};

/// How sampled output records are combined into a scalar norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Plain Euclidean norm of all recorded samples: sqrt(sum_k |y_k|^2).
    UnweightedL2,
    /// Time-quadrature approximation of the continuous L^2(0,T) norm:
    /// sqrt(sum_k w_k |y_k|^2) with weights w_k determined by the sample grid.
    ///
    /// When the series starts at t = 0 the weights form the composite
    /// trapezoid rule on the recorded instants. When the first sample sits at
    /// t > 0 the grid is treated as the right endpoints of panels that start
    /// at t = 0, so w_k = t_k - t_{k-1} with an implicit t_{-1} = 0; for a
    /// uniform grid this is the classic dt-weighted sum of squares.
    DtWeightedL2,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weighting::UnweightedL2 => write!(f, "unweighted_l2"),
            Weighting::DtWeightedL2 => write!(f, "dt_weighted_l2"),
        }
    }
}

/// Sensor records of one simulation: `values[[k, c]]` is channel `c` sampled
/// at `times[k]`. The sample instants always match the owning model's
/// `sample_times` exactly.
#[derive(Clone, Debug)]
pub struct OutputSeries {
    pub times: Vec<f64>,
    pub values: Array2<f64>,
    pub weighting: Weighting,
}

impl OutputSeries {
    pub fn new(times: Vec<f64>, values: Array2<f64>, weighting: Weighting) -> Result<Self> {
        if times.len() != values.nrows() {
            return Err(Error::Shape(format!(
                "output series has {} sample times but {} value rows",
                times.len(),
                values.nrows()
            )));
        }
        Ok(Self {
            times,
            values,
            weighting,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.times.len()
    }

    pub fn num_channels(&self) -> usize {
        self.values.ncols()
    }

    /// Quadrature weights matching `self.weighting` (see [`Weighting`]).
    fn quad_weights(&self) -> Vec<f64> {
        let n = self.times.len();
        match self.weighting {
            Weighting::UnweightedL2 => vec![1.0; n],
            Weighting::DtWeightedL2 => {
                let t = &self.times;
                if n == 1 {
                    // Single right-endpoint panel starting at t = 0.
                    return vec![t[0].max(0.0)];
                }
                let mut w = vec![0.0; n];
                if t[0].abs() < 1e-12 {
                    // Composite trapezoid on the recorded instants.
                    w[0] = 0.5 * (t[1] - t[0]);
                    for k in 1..n - 1 {
                        w[k] = 0.5 * (t[k + 1] - t[k - 1]);
                    }
                    w[n - 1] = 0.5 * (t[n - 1] - t[n - 2]);
                } else {
                    // Right-endpoint panels with an implicit panel start at 0.
                    w[0] = t[0];
                    for k in 1..n {
                        w[k] = t[k] - t[k - 1];
                    }
                }
                w
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::Shape(format!(
                "output series shapes differ: {:?} vs {:?}",
                self.values.dim(),
                other.values.dim()
            )));
        }
        if self.weighting != other.weighting {
            return Err(Error::Shape(
                "output series use different weightings".to_string(),
            ));
        }
        if self
            .times
            .iter()
            .zip(&other.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
        {
            return Err(Error::Shape(
                "output series sample times differ".to_string(),
            ));
        }
        Ok(())
    }

    /// Weighted inner product of two series over all samples and channels.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        if self.num_samples() == 0 {
            return Err(Error::EmptyOutput(
                "inner product of series with no samples".to_string(),
            ));
        }
        let w = self.quad_weights();
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let mut row = 0.0;
            for c in 0..self.num_channels() {
                row += self.values[[k, c]] * other.values[[k, c]];
            }
            acc += wk * row;
        }
        Ok(acc)
    }

    /// Weighted norm; the output-space norm used throughout the library.
    pub fn norm(&self) -> Result<f64> {
        if self.num_samples() == 0 {
            return Err(Error::EmptyOutput(
                "norm of series with no samples".to_string(),
            ));
        }
        // Clamp tiny negative round-off before the square root.
        Ok(self.inner(self)?.max(0.0).sqrt())
    }

    /// Element-wise difference (same sample grid required).
    pub fn sub(&self, other: &Self) -> Result<OutputSeries> {
        self.check_compatible(other)?;
        Ok(OutputSeries {
            times: self.times.clone(),
            values: &self.values - &other.values,
            weighting: self.weighting,
        })
    }

    /// Scalar multiple of the series.
    pub fn scale(&self, c: f64) -> OutputSeries {
        OutputSeries {
            times: self.times.clone(),
            values: &self.values * c,
            weighting: self.weighting,
        }
    }
}
