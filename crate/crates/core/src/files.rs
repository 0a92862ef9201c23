//! JSON file formats for sponges, potentials, and measures.
//!
//! Digits may come in any order in the files; everything is canonicalized
//! to the lexicographic digit order on load.

use crate::measures::ProbVector;
use crate::potential::Potential;
use crate::sponge::{Digit, SpongeInput, SpongeSpec};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid sponge in {path}: {source}")]
    Sponge {
        path: String,
        source: crate::sponge::SpongeError,
    },
    #[error("invalid potential in {path}: {source}")]
    Potential {
        path: String,
        source: crate::potential::PotentialError,
    },
    #[error("invalid measure in {path}: {source}")]
    Measure {
        path: String,
        source: crate::measures::MeasureError,
    },
    #[error("{path}: digit list does not match the sponge digit set")]
    DigitMismatch { path: String },
    #[error("{path}: measure file must declare \"vssc\": true for local-dimension analysis")]
    VsscMissing { path: String },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// `{"bases":[3,2],"digits":[[0,0],[1,1],[2,0]]}`
pub fn load_sponge(path: &Path) -> Result<SpongeSpec, FileError> {
    let raw: SpongeInput = read_json(path)?;
    SpongeSpec::validate(&raw).map_err(|source| FileError::Sponge {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValueEntry {
    Vector(Vec<f64>),
    Scalar(f64),
}

#[derive(Deserialize)]
struct PotentialFile {
    digits: Vec<Vec<u32>>,
    values: Vec<ValueEntry>,
}

/// `{"digits":[[0,0],[1,1],[2,0]],"values":[[0],[1],[0]]}` — values are
/// length-N arrays aligned with the digits (bare numbers read as N = 1).
pub fn load_potential(path: &Path, spec: &SpongeSpec) -> Result<Potential, FileError> {
    let raw: PotentialFile = read_json(path)?;
    if raw.digits.len() != raw.values.len() {
        return Err(FileError::DigitMismatch {
            path: path.display().to_string(),
        });
    }
    let pairs: Vec<(Digit, Vec<f64>)> = raw
        .digits
        .into_iter()
        .zip(raw.values)
        .map(|(d, v)| {
            let v = match v {
                ValueEntry::Vector(v) => v,
                ValueEntry::Scalar(x) => vec![x],
            };
            (Digit(d), v)
        })
        .collect();
    Potential::new(spec, pairs).map_err(|source| match source {
        crate::potential::PotentialError::AlphabetMismatch => FileError::DigitMismatch {
            path: path.display().to_string(),
        },
        source => FileError::Potential {
            path: path.display().to_string(),
            source,
        },
    })
}

#[derive(Deserialize)]
struct MeasureFile {
    digits: Vec<Vec<u32>>,
    probs: Vec<f64>,
    #[serde(default)]
    vssc: bool,
}

/// Loaded Bernoulli measure plus its separation declaration.
pub struct Measure {
    pub probs: ProbVector,
    pub vssc: bool,
}

/// `{"digits":[...],"probs":[...],"vssc":true}` — the digit list must match
/// the sponge's. The vssc flag is the user's declaration of the very strong
/// separation condition; it is never verified geometrically.
pub fn load_measure(path: &Path, spec: &SpongeSpec) -> Result<Measure, FileError> {
    let raw: MeasureFile = read_json(path)?;
    if raw.digits.len() != raw.probs.len() {
        return Err(FileError::DigitMismatch {
            path: path.display().to_string(),
        });
    }
    let pairs: Vec<(Digit, f64)> = raw
        .digits
        .into_iter()
        .map(Digit)
        .zip(raw.probs)
        .collect();
    let probs = ProbVector::new(spec.digits().to_vec(), pairs).map_err(|source| match source {
        crate::measures::MeasureError::AlphabetMismatch => FileError::DigitMismatch {
            path: path.display().to_string(),
        },
        source => FileError::Measure {
            path: path.display().to_string(),
            source,
        },
    })?;
    Ok(Measure {
        probs,
        vssc: raw.vssc,
    })
}

/// Requires the vssc declaration (local-dimension commands).
pub fn require_vssc(path: &Path, measure: &Measure) -> Result<(), FileError> {
    if measure.vssc {
        Ok(())
    } else {
        Err(FileError::VsscMissing {
            path: path.display().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sponge_round_trip() {
        let f = write_tmp(r#"{"bases":[3,2],"digits":[[2,0],[0,0],[1,1]]}"#);
        let spec = load_sponge(f.path()).unwrap();
        assert_eq!(spec.digit_count(), 3);
        // canonicalized order
        assert_eq!(spec.digits()[0].coords(), &[0, 0]);
    }

    #[test]
    fn potential_scalar_and_vector_forms() {
        let f = write_tmp(r#"{"bases":[3,2],"digits":[[0,0],[1,1],[2,0]]}"#);
        let spec = load_sponge(f.path()).unwrap();
        let p1 = write_tmp(r#"{"digits":[[0,0],[1,1],[2,0]],"values":[[0],[1],[0]]}"#);
        let phi = load_potential(p1.path(), &spec).unwrap();
        assert_eq!(phi.component(0), vec![0.0, 1.0, 0.0]);
        let p2 = write_tmp(r#"{"digits":[[2,0],[0,0],[1,1]],"values":[3.5,0,1]}"#);
        let phi = load_potential(p2.path(), &spec).unwrap();
        assert_eq!(phi.component(0), vec![0.0, 1.0, 3.5]);
        let bad = write_tmp(r#"{"digits":[[0,0],[1,1]],"values":[[0],[1]]}"#);
        assert!(load_potential(bad.path(), &spec).is_err());
    }

    #[test]
    fn measure_vssc_flag() {
        let f = write_tmp(r#"{"bases":[4,3],"digits":[[0,0],[2,2],[3,0]]}"#);
        let spec = load_sponge(f.path()).unwrap();
        let m = write_tmp(
            r#"{"digits":[[0,0],[2,2],[3,0]],"probs":[0.25,0.5,0.25],"vssc":true}"#,
        );
        let measure = load_measure(m.path(), &spec).unwrap();
        assert!(measure.vssc);
        assert_eq!(measure.probs.probs(), &[0.25, 0.5, 0.25]);
        let m2 = write_tmp(r#"{"digits":[[0,0],[2,2],[3,0]],"probs":[0.25,0.5,0.25]}"#);
        let measure = load_measure(m2.path(), &spec).unwrap();
        assert!(require_vssc(m2.path(), &measure).is_err());
    }
}
