//! `key = value` configuration file, overridable by global flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use mbs_core::classify::POOLED_K;
use mbs_core::detectors::{FallConfig, MotionConfig, TiltConfig};
use mbs_core::signal::{
    SmoothingKind, SmoothingSpec, DEFAULT_BASELINE_MS, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_SMOOTHING_WINDOW,
};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub k: usize,
    pub window: usize,
    pub baseline_ms: f64,
    pub sample_rate_hz: f64,
    pub epoch_ms: i64,
    pub body_model: Option<PathBuf>,
    pub body_map: Option<PathBuf>,
    pub pooled: Option<PathBuf>,
    pub user: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub tilt: TiltConfig,
    pub motion: MotionConfig,
    pub fall: FallConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 2024,
            k: POOLED_K,
            window: DEFAULT_SMOOTHING_WINDOW,
            baseline_ms: DEFAULT_BASELINE_MS,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            epoch_ms: 0,
            body_model: None,
            body_map: None,
            pooled: None,
            user: None,
            calibration: None,
            tilt: TiltConfig::default(),
            motion: MotionConfig::default(),
            fall: FallConfig::default(),
        }
    }
}

fn usage(msg: String) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| usage(format!("config key `{key}`: cannot parse `{value}`")))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(key, value)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(usage(format!("config key `{key}` must be positive, got {value}")));
    }
    Ok(v)
}

impl Config {
    /// Parses a config file. Relative paths resolve against the file's directory.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!("config line {}: expected `key = value`", i + 1)));
            };
            cfg.set(key.trim(), value.trim(), base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::parse(&text, base)?;
        cfg.check_files()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        match key {
            "seed" => self.seed = number(key, value)?,
            "k" => self.k = number(key, value)?,
            "window" => self.window = number(key, value)?,
            "baseline_ms" => self.baseline_ms = positive(key, value)?,
            "sample_rate_hz" => self.sample_rate_hz = positive(key, value)?,
            "epoch_ms" => self.epoch_ms = number(key, value)?,
            "body_model" => self.body_model = path(),
            "body_map" => self.body_map = path(),
            "pooled" => self.pooled = path(),
            "user" => self.user = path(),
            "calibration" => self.calibration = path(),
            "tilt_threshold_deg" => self.tilt.threshold_deg = positive(key, value)?,
            "hold_threshold" => self.motion.hold_threshold = positive(key, value)?,
            "walk_threshold" => self.motion.walk_threshold = positive(key, value)?,
            "run_threshold" => self.motion.run_threshold = positive(key, value)?,
            "motion_window_ms" => self.motion.window_ms = positive(key, value)?,
            "fall_spike" => self.fall.spike = positive(key, value)?,
            "fall_angle_deg" => self.fall.angle_deg = positive(key, value)?,
            _ => return Err(usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn check_files(&self) -> Result<()> {
        let files = [&self.body_model, &self.body_map, &self.pooled, &self.user, &self.calibration];
        for path in files.into_iter().flatten() {
            if !path.is_file() {
                bail!("configured file {} does not exist", path.display());
            }
        }
        Ok(())
    }

    /// Applies the global flag overrides and validates the result.
    pub fn with_overrides(mut self, seed: Option<u64>, k: Option<usize>, window: Option<usize>) -> Result<Self> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(k) = k {
            self.k = k;
        }
        if let Some(window) = window {
            self.window = window;
        }
        if self.k == 0 {
            return Err(usage("k must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(usage("window must be at least 1".into()));
        }
        let m = &self.motion;
        if !(m.hold_threshold < m.walk_threshold && m.walk_threshold < m.run_threshold) {
            return Err(usage("motion thresholds must increase: hold < walk < run".into()));
        }
        self.tilt.smoothing = self.smoothing();
        self.tilt.baseline_ms = self.baseline_ms;
        Ok(self)
    }

    pub fn smoothing(&self) -> SmoothingSpec {
        SmoothingSpec::rounded(SmoothingKind::Hanning, self.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_resolves_paths() {
        let cfg = Config::parse(
            "# comment\nseed = 7\nk=5\nbody_map = maps/m.txt\nhold_threshold = 0.2\n",
            Path::new("/etc/mbs"),
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.body_map, Some(PathBuf::from("/etc/mbs/maps/m.txt")));
        assert_eq!(cfg.motion.hold_threshold, 0.2);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["nonsense\n", "bogus = 1\n", "k = x\n", "hold_threshold = -1\n"] {
            let err = Config::parse(text, Path::new(".")).unwrap_err();
            assert!(err.is::<UsageError>(), "{text}");
        }
        assert!(Config::default().with_overrides(None, Some(0), None).is_err());
        let cfg = Config::default().with_overrides(Some(3), Some(9), Some(20)).unwrap();
        assert_eq!((cfg.seed, cfg.k, cfg.tilt.smoothing.window()), (3, 9, 21));
    }
}
