//! Plain-text emission: fixed-format CSV and schema-versioned JSON profiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{EnergyBreakdown, LatticeError, Profile, Setting};

/// Current profile-document schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Errors from reading emitted documents back.
#[derive(Debug, Error)]
pub enum IoError {
    /// The text is not the JSON this crate writes.
    #[error("malformed profile document: {0}")]
    Json(#[from] serde_json::Error),
    /// Schema version mismatch.
    #[error("unsupported schema_version {found} (supported: {SCHEMA_VERSION})")]
    SchemaVersion {
        /// Version found in the document.
        found: u32,
    },
    /// Declared length disagrees with the stored values.
    #[error("declared n = {n} but {len} values present")]
    LengthMismatch {
        /// Declared half-width.
        n: usize,
        /// Actual number of values.
        len: usize,
    },
    /// A numeric field is out of range.
    #[error("invalid field: {0}")]
    InvalidField(String),
    /// The stored values are not an admissible profile.
    #[error(transparent)]
    Profile(#[from] LatticeError),
}

/// Scientific notation with 17 significant digits; parses back to the exact
/// same f64.
pub fn format_sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// On-disk form of a solved profile with enough context to reuse it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    /// Document format version; always [`SCHEMA_VERSION`] when written.
    pub schema_version: u32,
    /// Site placement.
    pub setting: Setting,
    /// Stored half-width.
    pub n: usize,
    /// Coupling the profile was solved with.
    pub beta: f64,
    /// Energy breakdown of the stored values.
    pub energy: EnergyBreakdown,
    /// Sup-norm residual of the stored values.
    pub residual: f64,
    /// Stored values (non-negative half only).
    pub values: Vec<f64>,
}

impl ProfileDocument {
    /// Document for a solved profile.
    pub fn new(profile: &Profile, beta: f64, energy: EnergyBreakdown, residual: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            setting: profile.setting(),
            n: profile.n(),
            beta,
            energy,
            residual,
            values: profile.values().to_vec(),
        }
    }

    /// Pretty JSON with a trailing newline. Numbers use the shortest
    /// representation that parses back to the identical f64.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    /// Parses and validates a document (version, length, coupling).
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(IoError::SchemaVersion {
                found: doc.schema_version,
            });
        }
        if doc.n != doc.values.len() {
            return Err(IoError::LengthMismatch {
                n: doc.n,
                len: doc.values.len(),
            });
        }
        if !(doc.beta > 0.0 && doc.beta.is_finite()) {
            return Err(IoError::InvalidField(format!(
                "beta must be positive and finite, got {}",
                doc.beta
            )));
        }
        if !doc.residual.is_finite() {
            return Err(IoError::InvalidField("residual must be finite".into()));
        }
        Ok(doc)
    }

    /// Rebuilds the profile, re-running admissibility validation.
    pub fn to_profile(&self) -> Result<Profile, IoError> {
        Ok(Profile::new(self.setting, self.values.clone())?)
    }
}

/// CSV of the odd-reflected profile with `margin` saturated tail sites per
/// side: `position,u` rows in fixed scientific notation.
pub fn profile_csv(p: &Profile, margin: usize) -> String {
    let mut out = String::from("position,u\n");
    for (pos, u) in p.reflected(margin) {
        out.push_str(&format_sci(pos));
        out.push(',');
        out.push_str(&format_sci(u));
        out.push('\n');
    }
    out
}
