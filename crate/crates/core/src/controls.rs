//! Numeric controls for every analysis, with defaults. Radii are stored as
//! multiples of sigma so one configuration serves every field.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flow::StabilityControls;
use crate::flux::{IndexControls, QuadratureControls};
use crate::ode::FlowControls;
use crate::portrait::PortraitControls;
use crate::spectral::SampleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridControls {
    pub r_in_factor: f64,
    pub r_out_factor: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridControls {
    fn default() -> Self {
        Self { r_in_factor: 1.1, r_out_factor: 50.0, n_r: 32, n_theta: 64 }
    }
}

impl GridControls {
    pub fn grid(&self, sigma: f64) -> SampleGrid {
        SampleGrid::new(self.r_in_factor * sigma, self.r_out_factor * sigma, self.n_r, self.n_theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub quadrature: QuadratureControls,
    pub index: IndexControls,
    pub stability: StabilityControls,
    pub flow: FlowControls,
    /// Jacobian sampling for per-mu spectral summaries and audits.
    pub spectral: GridControls,
    /// Dense speed sampling for the singularity-free annulus.
    pub singularity: GridControls,
    /// Winding-number radii as multiples of sigma.
    pub winding_factors: Vec<f64>,
    pub speed_tail_window: usize,
    /// Interior mu samples for determinant-on-interval checks.
    pub interval_samples: usize,
    pub locate_max_iter: usize,
    pub portrait: PortraitControls,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            quadrature: QuadratureControls::default(),
            index: IndexControls::default(),
            stability: StabilityControls::default(),
            flow: FlowControls::default(),
            spectral: GridControls::default(),
            singularity: GridControls { r_in_factor: 2.0, r_out_factor: 4096.0, n_r: 64, n_theta: 256 },
            winding_factors: vec![5.0, 20.0],
            speed_tail_window: 4,
            interval_samples: 8,
            locate_max_iter: 200,
            portrait: PortraitControls::default(),
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        if self.winding_factors.iter().any(|f| !(*f > 1.0)) {
            return Err(invalid("winding radii must exceed sigma"));
        }
        if self.locate_max_iter == 0 {
            return Err(invalid("locate_max_iter must be positive"));
        }
        Ok(())
    }
}
