use serde::{Deserialize, Serialize};

/// Every tolerance used by the toolkit, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Geometric tolerance, relative to the diameter of the body being tested.
    pub geom: f64,
    /// Absolute tolerance on density values (level-set membership, equalities of levels).
    pub level: f64,
    /// Edge-length threshold of the sampled strict-convexity proxy.
    pub edge_threshold: f64,
    /// Minimum exterior turn angle (radians) for a polygon vertex to count as exposed.
    pub exposure_angle: f64,
    /// Verdicts whose deciding quantity lies within `margin_factor` times the
    /// relevant tolerance are reported as `Unknown`.
    pub margin_factor: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            geom: 1e-9,
            level: 1e-7,
            edge_threshold: 0.1,
            exposure_angle: 1e-9,
            margin_factor: 10.0,
        }
    }
}

impl ToleranceConfig {
    pub fn with_geom(mut self, geom: f64) -> Self {
        self.geom = geom;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }
}
