use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parameter `{0}` must be strictly positive")]
    NotPositive(&'static str),
    #[error("epsilon grid is empty or not ascending")]
    BadEpsGrid,
}

/// Numeric parameters shared by every pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub embed_dims: usize,
    pub pca_dims: usize,
    pub top_k_descriptors: usize,
    pub dbscan_min_pts: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_step: f64,
    pub english_threshold: f64,
    pub fuzzy_max_edits: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            embed_dims: 300,
            pca_dims: 100,
            top_k_descriptors: 2,
            dbscan_min_pts: 3,
            eps_min: 0.01,
            eps_max: 0.50,
            eps_step: 0.01,
            english_threshold: 0.15,
            fuzzy_max_edits: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive_ints = [
            ("embed_dims", self.embed_dims),
            ("pca_dims", self.pca_dims),
            ("top_k_descriptors", self.top_k_descriptors),
            ("dbscan_min_pts", self.dbscan_min_pts),
            ("fuzzy_max_edits", self.fuzzy_max_edits),
        ];
        for (name, value) in positive_ints {
            if value == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let positive_reals = [
            ("eps_min", self.eps_min),
            ("eps_max", self.eps_max),
            ("eps_step", self.eps_step),
            ("english_threshold", self.english_threshold),
        ];
        for (name, value) in positive_reals {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.eps_max < self.eps_min {
            return Err(ConfigError::BadEpsGrid);
        }
        Ok(())
    }

    /// The epsilon search grid, `eps_min..=eps_max` in `eps_step` increments.
    ///
    /// Each value is computed as `eps_min + i * eps_step` and rounded to 12
    /// decimals so the grid does not accumulate drift.
    pub fn eps_grid(&self) -> Vec<f64> {
        eps_grid(self.eps_min, self.eps_max, self.eps_step)
    }
}

pub fn eps_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || max < min {
        return Vec::new();
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let value = ((min + f64::from(i) * step) * 1e12).round() / 1e12;
        if value > max + 1e-12 {
            break;
        }
        grid.push(value);
        i += 1;
    }
    grid
}
