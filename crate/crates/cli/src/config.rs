//! Run configuration, stored as TOML.
//!
//! The document carries `version = 1`. Every field except the inclusion
//! list and the algorithm selector has a default, so the shipped example
//! configs spell out the experiment-specific values only.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use subdiff_core::forward::{Inclusion, InclusionSet, Point};
use subdiff_core::locate_multi::{ScanRegion, SourceSet, Truncation};
use subdiff_core::locate_one::ProbeSegment;
use subdiff_core::{FracOrder, TimeGrid};

use crate::failure::Failure;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub inclusions: Vec<InclusionConfig>,
    #[serde(default)]
    pub one: Option<OneConfig>,
    #[serde(default)]
    pub multi: Option<MultiConfig>,
    #[serde(default)]
    pub oracle_check: OracleCheckConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    One,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub alpha: f64,
    pub t_final: f64,
    pub gamma0: f64,
    pub time_steps: usize,
    /// Number of series terms `N` in the approximate fundamental solution.
    pub n_terms: usize,
    /// Minimum inclusion separation `c`, also enforced against the boundary.
    pub separation: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { alpha: 0.5, t_final: 1.0, gamma0: 1.0, time_steps: 128, n_terms: 3, separation: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub h_far: f64,
    /// Mesh size inside and around the inclusions; when absent it is the
    /// smallest inclusion size divided by `near_divisions`.
    pub h_near: Option<f64>,
    pub near_divisions: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h_far: 0.1, h_near: None, near_divisions: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    pub center: [f64; 2],
    pub size: f64,
    pub gamma: f64,
    /// Aspect ratio `ϱ`; absent for a disk.
    #[serde(default)]
    pub aspect: Option<f64>,
}

impl InclusionConfig {
    pub fn to_inclusion(&self) -> Inclusion {
        let c = Point::new(self.center[0], self.center[1]);
        match self.aspect {
            Some(a) => Inclusion::ellipse(c, self.size, a, self.gamma),
            None => Inclusion::disk(c, self.size, self.gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub center: [f64; 2],
    pub direction: [f64; 2],
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneConfig {
    pub segments: Vec<SegmentConfig>,
    /// Bracket length at which bisection stops.
    pub tol: f64,
    /// Number of samples of `I_Φ` written along each segment.
    pub profile_samples: usize,
}

impl Default for OneConfig {
    fn default() -> Self {
        Self {
            segments: vec![
                SegmentConfig { center: [0.0, 2.0], direction: [1.0, 0.0], half_length: 1.0 },
                SegmentConfig { center: [2.0, 0.0], direction: [0.0, 1.0], half_length: 1.0 },
            ],
            tol: 1e-6,
            profile_samples: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub count: usize,
    pub radius: f64,
    /// Angle of the arc midpoint, in radians.
    pub center_angle: f64,
    /// Arc length in radians; `2π` places the sources on the full circle.
    pub aperture: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { count: 10, radius: 2.0, center_angle: PI / 2.0, aperture: 2.0 * PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "rule", content = "value", rename_all = "lowercase")]
pub enum TruncationConfig {
    Fixed(usize),
    Ratio(f64),
    Gap(f64),
}

impl From<TruncationConfig> for Truncation {
    fn from(t: TruncationConfig) -> Self {
        match t {
            TruncationConfig::Fixed(k) => Truncation::Fixed(k),
            TruncationConfig::Ratio(r) => Truncation::Ratio(r),
            TruncationConfig::Gap(g) => Truncation::Gap(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub half_width: f64,
    pub resolution: usize,
    pub mask_radius: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let r = ScanRegion::default();
        Self { half_width: r.half_width, resolution: r.resolution, mask_radius: r.mask_radius }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiConfig {
    pub sources: SourceConfig,
    pub truncation: TruncationConfig,
    pub scan: ScanConfig,
    /// Start offset of the background fundamental solution, as a fraction of `T`.
    pub t_init_fraction: f64,
    pub peak_separation: f64,
}

impl Default for MultiConfig {
    fn default() -> Self {
        Self {
            sources: SourceConfig::default(),
            truncation: TruncationConfig::Gap(1e-12),
            scan: ScanConfig::default(),
            t_init_fraction: 1.0 / 128.0,
            peak_separation: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleCheckConfig {
    /// Source points of the exact test functions `Φ`.
    pub test_sources: Vec<[f64; 2]>,
    /// Tabulation range and size of the exact radial profile.
    pub r_min: f64,
    pub r_max: f64,
    pub table_points: usize,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self { test_sources: vec![[-0.5, 2.0], [2.0, -0.5]], r_min: 0.05, r_max: 80.0, table_points: 600 }
    }
}

/// Parameter lists for `sweep`. Each run rescales every inclusion to size
/// `ε`, sets the aspect ratio `ϱ` (`1` meaning a disk) and the noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sizes: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub aspects: Vec<f64>,
    /// Noise realisations per noisy point, seeded `seed, seed + 1, ...`.
    pub repeats: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { sizes: Vec::new(), sigmas: vec![0.0], aspects: Vec::new(), repeats: 1 }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::config(msg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Fills in the selector section from defaults so the manifest records
    /// every value the run used.
    pub fn resolved(mut self) -> Self {
        match self.algorithm {
            Algorithm::One => {
                self.one.get_or_insert_with(OneConfig::default);
            }
            Algorithm::Multi => {
                self.multi.get_or_insert_with(MultiConfig::default);
            }
        }
        if self.mesh.h_near.is_none() {
            self.mesh.h_near = self.default_h_near();
        }
        self
    }

    fn default_h_near(&self) -> Option<f64> {
        self.inclusions
            .iter()
            .map(|i| i.size)
            .reduce(f64::min)
            .map(|s| s / self.mesh.near_divisions)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.version != CONFIG_VERSION {
            return Err(config_err(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let m = &self.model;
        positive("model.t_final", m.t_final)?;
        positive("model.gamma0", m.gamma0)?;
        positive("mesh.h_far", self.mesh.h_far)?;
        positive("mesh.near_divisions", self.mesh.near_divisions)?;
        if let Some(h) = self.mesh.h_near {
            positive("mesh.h_near", h)?;
        }
        FracOrder::new(m.alpha).map_err(|e| config_err(format!("model.alpha: {e}")))?;
        if m.time_steps == 0 || m.n_terms == 0 {
            return Err(config_err("model.time_steps and model.n_terms must be at least 1"));
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(config_err("noise.sigma must be nonnegative"));
        }
        for (i, inc) in self.inclusions.iter().enumerate() {
            positive(&format!("inclusions[{i}].size"), inc.size)?;
            positive(&format!("inclusions[{i}].gamma"), inc.gamma)?;
            if let Some(a) = inc.aspect {
                positive(&format!("inclusions[{i}].aspect"), a)?;
            }
        }
        self.inclusion_set()?;
        if let Some(size) = self.inclusions.iter().map(|i| i.size).reduce(f64::min) {
            if self.h_near() > size / 4.0 {
                return Err(config_err(format!(
                    "mesh.h_near = {} does not resolve an inclusion of size {size} (need at most size/4)",
                    self.h_near()
                )));
            }
        }
        match self.algorithm {
            Algorithm::One => {
                let one = self.one.clone().unwrap_or_default();
                if one.segments.len() != 2 {
                    return Err(config_err("one.segments must list exactly two segments"));
                }
                positive("one.tol", one.tol)?;
                self.segments()?;
            }
            Algorithm::Multi => {
                let multi = self.multi.clone().unwrap_or_default();
                positive("multi.t_init_fraction", multi.t_init_fraction)?;
                self.sources()?;
                if multi.scan.resolution < 2 {
                    return Err(config_err("multi.scan.resolution must be at least 2"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            for v in s.sizes.iter().chain(&s.aspects) {
                positive("sweep entry", *v)?;
            }
            if s.sigmas.iter().any(|v| !(*v >= 0.0)) {
                return Err(config_err("sweep.sigmas must be nonnegative"));
            }
            if s.repeats == 0 {
                return Err(config_err("sweep.repeats must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> FracOrder {
        FracOrder::new(self.model.alpha).expect("validated")
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.model.t_final, self.model.time_steps).expect("validated")
    }

    pub fn h_near(&self) -> f64 {
        self.mesh.h_near.or_else(|| self.default_h_near()).unwrap_or(self.mesh.h_far)
    }

    pub fn inclusion_set(&self) -> Result<InclusionSet, Failure> {
        let items = self.inclusions.iter().map(InclusionConfig::to_inclusion).collect();
        InclusionSet::new(items, self.model.gamma0, self.model.separation)
            .map_err(|e| config_err(format!("inclusions: {e}")))
    }

    pub fn segments(&self) -> Result<[ProbeSegment<2>; 2], Failure> {
        let one = self.one.clone().unwrap_or_default();
        let seg = |i: usize| {
            let s = &one.segments[i];
            ProbeSegment::centered(
                i,
                Point::new(s.center[0], s.center[1]),
                Point::new(s.direction[0], s.direction[1]),
                s.half_length,
            )
            .map_err(|e| config_err(format!("one.segments[{i}]: {e}")))
        };
        Ok([seg(0)?, seg(1)?])
    }

    pub fn sources(&self) -> Result<SourceSet, Failure> {
        let s = self.multi.clone().unwrap_or_default().sources;
        SourceSet::arc(s.count, s.radius, s.center_angle, s.aperture)
            .map_err(|e| config_err(format!("multi.sources: {e}")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}
