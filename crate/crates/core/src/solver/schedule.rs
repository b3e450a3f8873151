use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cooling {
    /// `σ_{s+1} = factor · σ_s` after every sweep.
    Geometric { factor: f64 },
    /// Constant temperature.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialTemperature {
    Fixed { sigma: f64 },
    /// `scale` times the largest spread of local objectives over any node's
    /// candidate set at the starting profile.
    Calibrated { scale: f64 },
}

/// Temperature schedule and stopping rule shared by both samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub initial: InitialTemperature,
    pub cooling: Cooling,
    /// Floor as a fraction of the initial temperature.
    pub floor_ratio: f64,
    pub max_sweeps: usize,
    /// Stop once the objective moved by less than `tolerance` (relative)
    /// across the last `window` sweeps.
    pub window: usize,
    pub tolerance: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial: InitialTemperature::Calibrated { scale: 1.0 },
            cooling: Cooling::Geometric { factor: 0.95 },
            floor_ratio: 1e-3,
            max_sweeps: 300,
            window: 5,
            tolerance: 1e-4,
        }
    }
}

impl AnnealSchedule {
    pub fn fixed(sigma: f64, sweeps: usize) -> Self {
        AnnealSchedule {
            initial: InitialTemperature::Fixed { sigma },
            cooling: Cooling::Fixed,
            max_sweeps: sweeps,
            tolerance: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        match self.initial {
            InitialTemperature::Fixed { sigma } if !(sigma > 0.0) => {
                errs.push(format!("initial.sigma must be positive, got {sigma}"))
            }
            InitialTemperature::Calibrated { scale } if !(scale > 0.0 && scale.is_finite()) => {
                errs.push(format!("initial.scale must be positive, got {scale}"))
            }
            _ => {}
        }
        if let Cooling::Geometric { factor } = self.cooling {
            if !(factor > 0.0 && factor < 1.0) {
                errs.push(format!("cooling.factor must be in (0, 1), got {factor}"));
            }
        }
        if !(self.floor_ratio > 0.0 && self.floor_ratio <= 1.0) {
            errs.push(format!("floor_ratio must be in (0, 1], got {}", self.floor_ratio));
        }
        if self.max_sweeps == 0 {
            errs.push("max_sweeps must be at least 1".into());
        }
        if self.window == 0 {
            errs.push("window must be at least 1".into());
        }
        if !(self.tolerance >= 0.0) {
            errs.push(format!("tolerance must be non-negative, got {}", self.tolerance));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Starting temperature given the calibration spread.
    pub fn initial_temperature(&self, spread: f64) -> f64 {
        match self.initial {
            InitialTemperature::Fixed { sigma } => sigma,
            InitialTemperature::Calibrated { scale } => {
                if spread > 0.0 && spread.is_finite() {
                    scale * spread
                } else {
                    scale
                }
            }
        }
    }

    /// Temperature used during sweep `sweep` (0-based).
    pub fn temperature(&self, initial: f64, sweep: usize) -> f64 {
        match self.cooling {
            Cooling::Fixed => initial,
            Cooling::Geometric { factor } => {
                let floor = initial * self.floor_ratio;
                (initial * factor.powi(sweep.min(i32::MAX as usize) as i32)).max(floor)
            }
        }
    }

    /// Whether the per-sweep objective history has settled.
    pub fn converged(&self, history: &[f64]) -> bool {
        if history.len() <= self.window {
            return false;
        }
        let tail = &history[history.len() - self.window - 1..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let last = *tail.last().unwrap();
        hi - lo <= self.tolerance * last.abs()
    }
}
