use serde::{Deserialize, Serialize};

use crate::data::{DataKind, DataParams};
use crate::error::{Error, Result};
use crate::field::TimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    /// Time-reversed Euler: convection and pressure terms change sign.
    Reversed,
}

/// Knobs of the Picard scheme on `[s, T]`.
///
/// `s` is both the start time and the heat diffusivity of the kernel the
/// scheme convolves with. The force viscosity `nu` defaults to `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub s: f64,
    pub nu: Option<f64>,
    /// End time `T`.
    pub end: f64,
    /// Time nodes `M` on `[s, T]`.
    pub nodes: usize,
    pub k_max: usize,
    pub tol: f64,
    pub direction: Direction,
    pub data: DataParams,
    /// Leading time window excluded from trajectory sup norms; `None`
    /// resolves to one time step for singular data and 0 otherwise.
    pub exclusion_window: Option<f64>,
    /// Smallest horizon `T - s` the admissible-horizon search will try.
    pub min_horizon: f64,
}

/// Ratio bound the contraction measurement is held to.
pub const CONTRACTION_LIMIT: f64 = 0.5;

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            s: 0.05,
            nu: None,
            end: 0.1,
            nodes: 17,
            k_max: 40,
            tol: 1e-8,
            direction: Direction::Forward,
            data: DataParams::default(),
            exclusion_window: None,
            min_horizon: 1e-3,
        }
    }
}

impl SchemeParams {
    pub fn new(s: f64, end: f64, nodes: usize, data: DataParams) -> Result<Self> {
        let sp = Self {
            s,
            end,
            nodes,
            data,
            ..Self::default()
        };
        sp.validate()?;
        Ok(sp)
    }

    /// Every violated constraint, collected.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.s > 0.0 && self.s.is_finite()) {
            out.push(format!("s must be positive, got {}", self.s));
        }
        if !(self.end > self.s && self.end.is_finite()) {
            out.push(format!("T must exceed s, got s = {}, T = {}", self.s, self.end));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu.is_finite()) {
                out.push(format!("nu must be positive, got {nu}"));
            }
        }
        if self.nodes < 3 {
            out.push(format!("M must be >= 3, got {}", self.nodes));
        }
        if self.k_max < 1 {
            out.push("k_max must be >= 1".to_string());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            out.push(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(w) = self.exclusion_window {
            if !(w >= 0.0 && w.is_finite()) {
                out.push(format!("exclusion window must be >= 0, got {w}"));
            }
        }
        if !(self.min_horizon > 0.0) {
            out.push(format!("minimum horizon must be positive, got {}", self.min_horizon));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(self.s)
    }

    pub fn horizon(&self) -> f64 {
        self.end - self.s
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.s, self.end, self.nodes)
    }

    pub fn with_end(mut self, end: f64) -> Self {
        self.end = end;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn window(&self) -> f64 {
        self.exclusion_window.unwrap_or(match self.data.kind() {
            DataKind::Singular => self.horizon() / (self.nodes - 1) as f64,
            _ => 0.0,
        })
    }

    /// Whether node `m` enters trajectory sup norms.
    pub fn node_counts(&self, m: usize) -> bool {
        let w = self.window();
        if w == 0.0 {
            return true;
        }
        let dt = self.horizon() / (self.nodes - 1) as f64;
        m as f64 * dt > w * (1.0 + 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let sp = SchemeParams::default();
        assert!(sp.validate().is_ok());
        assert_eq!(sp.nu(), sp.s);
        let bad = SchemeParams {
            s: 0.2,
            nodes: 2,
            tol: 0.0,
            ..SchemeParams::default()
        };
        match bad.validate() {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_data_skips_the_first_interior_node() {
        let sp = SchemeParams::default();
        assert!(!sp.node_counts(0));
        assert!(!sp.node_counts(1));
        assert!(sp.node_counts(2));
        let smooth = SchemeParams {
            data: DataParams::smooth(),
            ..sp
        };
        assert!(smooth.node_counts(0));
    }
}
