//! Piecewise-linear lookup tables used for the cell, HVAC and PV maps.

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};

/// Tolerance applied at the edges of a table so that values produced by
/// floating point arithmetic right at a breakpoint are not rejected.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1D {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Table1D {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let t = Self { x, y };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() < 2 || self.x.len() != self.y.len() {
            return Err(HemError::InvalidParameter(format!(
                "1-D table needs >= 2 breakpoints and matching lengths (got {} and {})",
                self.x.len(),
                self.y.len()
            )));
        }
        check_increasing(&self.x, "x")
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (i, w) = locate(&self.x, x).ok_or_else(|| HemError::MapDomain {
            map: "1-D table".into(),
            x,
            y: f64::NAN,
        })?;
        Ok(self.y[i] * (1.0 - w) + self.y[i + 1] * w)
    }

    /// Evaluates with the argument clamped into the table domain.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        self.eval(x.clamp(lo, hi)).expect("clamped argument is in domain")
    }
}

/// Bilinear table on a rectangular grid. `z[i][j]` is the value at `(x[i], y[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2D {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

impl Table2D {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self> {
        let t = Self { x, y, z };
        t.validate()?;
        Ok(t)
    }

    pub fn constant(x: (f64, f64), y: (f64, f64), value: f64) -> Self {
        Self {
            x: vec![x.0, x.1],
            y: vec![y.0, y.1],
            z: vec![vec![value; 2]; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() < 2 || self.y.len() < 2 {
            return Err(HemError::InvalidParameter("2-D table needs >= 2 breakpoints per axis".into()));
        }
        if self.z.len() != self.x.len() || self.z.iter().any(|row| row.len() != self.y.len()) {
            return Err(HemError::InvalidParameter(format!(
                "2-D table values must be {}x{}",
                self.x.len(),
                self.y.len()
            )));
        }
        check_increasing(&self.x, "x")?;
        check_increasing(&self.y, "y")
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let domain_err = || HemError::MapDomain {
            map: "2-D table".into(),
            x,
            y,
        };
        let (i, wx) = locate(&self.x, x).ok_or_else(domain_err)?;
        let (j, wy) = locate(&self.y, y).ok_or_else(domain_err)?;
        let z0 = self.z[i][j] * (1.0 - wy) + self.z[i][j + 1] * wy;
        let z1 = self.z[i + 1][j] * (1.0 - wy) + self.z[i + 1][j + 1] * wy;
        Ok(z0 * (1.0 - wx) + z1 * wx)
    }

    pub fn eval_named(&self, name: &str, x: f64, y: f64) -> Result<f64> {
        self.eval(x, y).map_err(|_| HemError::MapDomain {
            map: name.to_string(),
            x,
            y,
        })
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.z.iter().flatten().copied()
    }
}

fn check_increasing(v: &[f64], axis: &str) -> Result<()> {
    if v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(HemError::InvalidParameter(format!(
            "table axis {axis} must be finite and strictly increasing"
        )))
    }
}

/// Returns the segment index and interpolation weight for `x`.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    let (lo, hi) = (axis[0], axis[n - 1]);
    if !(x >= lo - EDGE_EPS && x <= hi + EDGE_EPS) {
        return None;
    }
    let x = x.clamp(lo, hi);
    let i = match axis.partition_point(|&a| a <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let w = (x - axis[i]) / (axis[i + 1] - axis[i]);
    Some((i, w))
}
