//! No-reference calibration files.

use serde::{Deserialize, Serialize};

use renderproof_core::iqa::{NrCalibration, NrFeatures};

/// Calibration computed from the bundled experiment's reference renders
/// (`renderproof calibrate`).
pub const DEFAULT_CALIBRATION: &str = include_str!("../assets/calibration.json");

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stat {
    mean: f64,
    stddev: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    sharpness: Stat,
    contrast: Stat,
    colorfulness: Stat,
}

pub fn parse_calibration(text: &str) -> Result<NrCalibration, String> {
    let d: CalibrationDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let pair = |s: Stat| (s.mean, s.stddev);
    let cal = NrCalibration {
        sharpness: pair(d.sharpness),
        contrast: pair(d.contrast),
        colorfulness: pair(d.colorfulness),
    };
    cal.check().map_err(|e| e.to_string())?;
    Ok(cal)
}

pub fn default_calibration() -> NrCalibration {
    parse_calibration(DEFAULT_CALIBRATION).expect("bundled calibration is valid")
}

pub fn serialize_calibration(cal: &NrCalibration) -> String {
    let stat = |(mean, stddev): (f64, f64)| Stat { mean, stddev };
    let doc = CalibrationDoc {
        sharpness: stat(cal.sharpness),
        contrast: stat(cal.contrast),
        colorfulness: stat(cal.colorfulness),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("calibration serializes");
    s.push('\n');
    s
}

/// Calibration over a corpus of feature vectors.
pub fn calibrate(features: &[NrFeatures]) -> Result<NrCalibration, String> {
    NrCalibration::from_features(features).map_err(|e| e.to_string())
}
