use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};

/// A time series sampled at strictly increasing times, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Trace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(HemError::InvalidParameter(format!(
                "trace needs matching nonempty time/value columns (got {} and {})",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(HemError::InvalidParameter(format!(
                "trace timestamps must be strictly increasing (row {})",
                w + 1
            )));
        }
        Ok(Self { times, values })
    }

    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        Self {
            times: vec![start, end],
            values: vec![value, value],
        }
    }

    /// Resamples onto a uniform grid `start, start + dt, ...` with `n` points.
    pub fn uniform(start: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| start + dt * i as f64).collect();
        Self::new(times, values)
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(HemError::TraceDomain { t, start, end });
        }
        if self.times.len() == 1 {
            return Ok(self.values[0]);
        }
        let p = self.times.partition_point(|&x| x <= t);
        if p >= self.times.len() {
            return Ok(self.values[self.values.len() - 1]);
        }
        let i = p - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_samples() {
        let tr = Trace::new(vec![0.0, 3600.0], vec![10.0, 20.0]).unwrap();
        assert_eq!(tr.at(0.0).unwrap(), 10.0);
        assert_eq!(tr.at(1800.0).unwrap(), 15.0);
        assert_eq!(tr.at(3600.0).unwrap(), 20.0);
        assert!(matches!(tr.at(3601.0), Err(HemError::TraceDomain { .. })));
    }

    #[test]
    fn rejects_misordered_timestamps() {
        assert!(Trace::new(vec![0.0, 10.0, 5.0], vec![1.0; 3]).is_err());
    }
}
