//! Hysteresis thresholds and traversal options.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How far the forward traversal reaches after the trigger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ForwardMode {
    /// Probe at Fibonacci offsets until a frame falls below `c_min`.
    UntilBelowMin,
    /// Take a fixed reach of `k` Fibonacci gaps without scoring.
    FixedExtent { k: u32 },
}

/// What to do when no frame reaches `c_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Fallback {
    /// Rescan, use the observed maximum as `c_max` and `c_max - delta` as `c_min`.
    TwoPassMaxRule { delta: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("c_min ({c_min}) must be below c_max ({c_max})")]
    ThresholdOrder { c_min: f64, c_max: f64 },
    #[error("scan rate must be positive, got {0}")]
    ScanRate(f64),
    #[error("fallback delta must be positive, got {0}")]
    FallbackDelta(f64),
    #[error("fixed forward extent needs at least one gap")]
    ZeroExtent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisConfig {
    c_max: f64,
    c_min: f64,
    scan_rate_fps: f64,
    forward_mode: ForwardMode,
    fallback: Fallback,
    rng_seed: u64,
}

impl Default for HysteresisConfig {
    /// Thresholds 0.4 / 0.3, 4 fps, forward until below `c_min`, two-pass fallback with delta 0.1.
    fn default() -> Self {
        Self {
            c_max: 0.4,
            c_min: 0.3,
            scan_rate_fps: 4.0,
            forward_mode: ForwardMode::UntilBelowMin,
            fallback: Fallback::TwoPassMaxRule { delta: 0.1 },
            rng_seed: 0,
        }
    }
}

impl HysteresisConfig {
    pub fn new(
        c_max: f64,
        c_min: f64,
        scan_rate_fps: f64,
        forward_mode: ForwardMode,
        fallback: Fallback,
        rng_seed: u64,
    ) -> Result<Self, ConfigError> {
        // Written with negations so NaN fails every check.
        if !(c_min < c_max) {
            return Err(ConfigError::ThresholdOrder { c_min, c_max });
        }
        if !(scan_rate_fps > 0.0) || !scan_rate_fps.is_finite() {
            return Err(ConfigError::ScanRate(scan_rate_fps));
        }
        if let Fallback::TwoPassMaxRule { delta } = fallback {
            if !(delta > 0.0) {
                return Err(ConfigError::FallbackDelta(delta));
            }
        }
        if forward_mode == (ForwardMode::FixedExtent { k: 0 }) {
            return Err(ConfigError::ZeroExtent);
        }
        Ok(Self {
            c_max,
            c_min,
            scan_rate_fps,
            forward_mode,
            fallback,
            rng_seed,
        })
    }

    /// Copy with new thresholds, keeping everything else.
    pub fn with_thresholds(&self, c_max: f64, c_min: f64) -> Result<Self, ConfigError> {
        Self::new(
            c_max,
            c_min,
            self.scan_rate_fps,
            self.forward_mode,
            self.fallback,
            self.rng_seed,
        )
    }

    pub fn with_fallback(&self, fallback: Fallback) -> Result<Self, ConfigError> {
        Self::new(
            self.c_max,
            self.c_min,
            self.scan_rate_fps,
            self.forward_mode,
            fallback,
            self.rng_seed,
        )
    }

    pub fn with_forward_mode(&self, forward_mode: ForwardMode) -> Result<Self, ConfigError> {
        Self::new(
            self.c_max,
            self.c_min,
            self.scan_rate_fps,
            forward_mode,
            self.fallback,
            self.rng_seed,
        )
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn scan_rate_fps(&self) -> f64 {
        self.scan_rate_fps
    }

    pub fn forward_mode(&self) -> ForwardMode {
        self.forward_mode
    }

    pub fn fallback(&self) -> Fallback {
        self.fallback
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
}
