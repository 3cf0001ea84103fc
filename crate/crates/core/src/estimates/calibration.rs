//! Flat-coefficient reference constants, computed with exact Fourier propagators and
//! stored in a versioned file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::canonical::{GaussianProblem, PacketProblem, SourceProblem};
use super::{flat_inhomogeneous, flat_quotient, Estimate};
use crate::error::{Error, Result};
use crate::norms::LittlewoodPaleyBank;

pub const CALIBRATION_VERSION: u32 = 1;

const EMBEDDED: &str = include_str!("../../calibration/flat_reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub key: String,
    pub value: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatCalibration {
    pub version: u32,
    pub entries: Vec<CalibrationEntry>,
}

pub fn smoothing_key(s: f64) -> String {
    format!("smoothing:s={s}")
}

pub fn maximal_key(s: f64) -> String {
    format!("maximal:s={s}")
}

pub const STRICHARTZ_KEY: &str = "strichartz:p=8,q=4";
pub const INHOMOGENEOUS_KEY: &str = "inhomogeneous:separable";

/// Regularities calibrated for the packet problem.
pub const SMOOTHING_S: [f64; 2] = [0.0, 0.25];
pub const MAXIMAL_S: [f64; 2] = [0.0, 0.25];

impl FlatCalibration {
    pub fn embedded() -> Result<Self> {
        let c: Self = serde_json::from_str(EMBEDDED)?;
        c.check_version()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        c.check_version()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    fn check_version(&self) -> Result<()> {
        if self.version != CALIBRATION_VERSION {
            return Err(Error::Config(format!(
                "calibration version {} (expected {CALIBRATION_VERSION})",
                self.version
            )));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value)
            .ok_or_else(|| Error::Config(format!("calibration has no entry {key}")))
    }

    /// Recompute every entry on the canonical problems.
    pub fn compute() -> Result<Self> {
        let bank = LittlewoodPaleyBank::default();
        let packet = PacketProblem::default();
        let u0 = packet.datum(&bank)?;
        let w = packet.window()?;
        let mut entries = vec![];
        let mult = "flat multiplier on the canonical packet".to_string();
        for s in SMOOTHING_S {
            let r = flat_quotient(&u0, &w, &Estimate::Smoothing { s }, &bank)?;
            entries.push(CalibrationEntry { key: smoothing_key(s), value: r.quotient, method: mult.clone() });
        }
        for s in MAXIMAL_S {
            let r = flat_quotient(&u0, &w, &Estimate::Maximal { s }, &bank)?;
            entries.push(CalibrationEntry { key: maximal_key(s), value: r.quotient, method: mult.clone() });
        }
        let g = GaussianProblem::default();
        entries.push(CalibrationEntry {
            key: STRICHARTZ_KEY.into(),
            value: g.flat_strichartz_84(),
            method: "closed form for the Gaussian over [0, T]".into(),
        });
        let f = SourceProblem::default().field()?;
        entries.push(CalibrationEntry {
            key: INHOMOGENEOUS_KEY.into(),
            value: flat_inhomogeneous(&f)?.quotient,
            method: "flat multiplier Duhamel on the canonical source".into(),
        });
        Ok(Self { version: CALIBRATION_VERSION, entries })
    }
}
