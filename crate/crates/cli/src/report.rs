//! `summary.json` and `manifest.json`.

use ldplab_core::io::CsvTable;
use ldplab_core::stats::SlopeFit;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Acceptance window a value was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Window {
    AtLeast {
        min: f64,
    },
    AtMost {
        max: f64,
    },
    Range {
        min: f64,
        max: f64,
    },
    /// `|value - target| <= tol * |target|`.
    Relative {
        target: f64,
        tol: f64,
    },
    /// `|value - target| <= tol`.
    Absolute {
        target: f64,
        tol: f64,
    },
}

impl Window {
    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match *self {
            Window::AtLeast { min } => v >= min,
            Window::AtMost { max } => v <= max,
            Window::Range { min, max } => (min..=max).contains(&v),
            Window::Relative { target, tol } => (v - target).abs() <= tol * target.abs(),
            Window::Absolute { target, tol } => (v - target).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub window: Window,
    pub pass: bool,
    /// How `value` is recomputed from the CSVs.
    pub source: String,
}

impl Check {
    pub fn new(name: &str, value: f64, window: Window, source: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            value,
            window,
            pass: window.contains(value),
            source: source.into(),
        }
    }
}

/// What an experiment produced, before anything is written.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<(String, CsvTable)>,
    pub checks: Vec<Check>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub estimates: BTreeMap<String, f64>,
}

impl Report {
    pub fn table(&mut self, name: &str, t: CsvTable) {
        self.tables.push((name.to_string(), t));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn fit(&mut self, name: &str, f: SlopeFit) {
        self.fits.insert(name.to_string(), f);
    }

    pub fn estimate(&mut self, name: &str, v: f64) {
        self.estimates.insert(name.to_string(), v);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub estimates: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub timestamp: String,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub error: Option<String>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn utc_timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".to_string())
}
