//! Instance and certificate files: JSON schemas, validated loading with
//! field-level diagnostics, canonical digests binding certificates to
//! instances, and atomic writes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cover::{CoverCertificate, MergeStep};
use crate::separability::{SeparabilityStatus, SeparabilityVerdict, SignPattern};
use crate::sphere::{Cap, GeomError, Instance, Point, Zone};
use crate::EPS_UNIT;

pub const INSTANCE_FORMAT_VERSION: u32 = 1;
pub const CERTIFICATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field {field}: {message}")]
    Validation {
        path: String,
        field: String,
        message: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapRecord {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: u32,
    pub dim: usize,
    pub caps: Vec<CapRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeStepRecord {
    pub indices: Vec<usize>,
    pub normal: Vec<f64>,
    pub half_width: f64,
    pub w_norm_slack: f64,
    pub member_slacks: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparabilityRecord {
    pub status: SeparabilityStatus,
    pub witness_normal: Option<Vec<f64>>,
    pub witness_pattern: Option<Vec<i8>>,
    pub best_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub instance_digest: String,
    pub cover: CapRecord,
    pub slacks: Vec<f64>,
    pub merge_trace: Vec<MergeStepRecord>,
    pub final_w: Vec<f64>,
    pub heuristic_signing: bool,
    pub separability: Option<SeparabilityRecord>,
    pub valid: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over the canonical serialization of the loaded instance; binds a
/// certificate to the numeric content it covers.
pub fn instance_digest(inst: &Instance) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        dim: usize,
        caps: Vec<(&'a [f64], f64)>,
    }
    let canonical = Canonical {
        dim: inst.dim,
        caps: inst
            .caps
            .iter()
            .map(|c| (c.center.coords(), c.radius))
            .collect(),
    };
    let bytes = serde_json::to_vec(&canonical).expect("canonical form serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes via a temp file in the target directory and renames into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let wrap = |source: std::io::Error| IoError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(wrap)?;
    use std::io::Write;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn validation(path: &Path, field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Validation {
        path: path.display().to_string(),
        field: field.into(),
        message: message.into(),
    }
}

fn cap_from_record(
    path: &Path,
    field: &str,
    rec: &CapRecord,
    expected_len: usize,
) -> Result<Cap, IoError> {
    if rec.center.len() != expected_len {
        return Err(validation(
            path,
            format!("{field}.center"),
            format!("expected {expected_len} coordinates, got {}", rec.center.len()),
        ));
    }
    let norm = crate::vecmath::norm(&rec.center);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(validation(
            path,
            format!("{field}.center"),
            format!("norm {norm} deviates from 1 by more than 1e-6"),
        ));
    }
    // keep already-normalized coordinates bit-exact
    let center = if (norm - 1.0).abs() <= EPS_UNIT {
        Point::new(rec.center.clone())
    } else {
        Point::normalized(rec.center.clone())
    }
    .map_err(|e: GeomError| validation(path, format!("{field}.center"), e.to_string()))?;
    Cap::new(center, rec.radius)
        .map_err(|e| validation(path, format!("{field}.radius"), e.to_string()))
}

pub fn load_instance(path: &Path) -> Result<Instance, IoError> {
    let text = read_text(path)?;
    let file: InstanceFile = parse_json(path, &text)?;
    if file.format_version != INSTANCE_FORMAT_VERSION {
        return Err(validation(
            path,
            "format_version",
            format!("unsupported version {}", file.format_version),
        ));
    }
    if file.dim < 1 {
        return Err(validation(path, "dim", "must be at least 1"));
    }
    if file.caps.is_empty() {
        return Err(validation(path, "caps", "must be nonempty"));
    }
    let mut caps = Vec::with_capacity(file.caps.len());
    for (i, rec) in file.caps.iter().enumerate() {
        caps.push(cap_from_record(path, &format!("caps[{i}]"), rec, file.dim + 1)?);
    }
    Instance::new(file.dim, caps).map_err(|e| validation(path, "caps", e.to_string()))
}

pub fn instance_to_file(inst: &Instance) -> InstanceFile {
    InstanceFile {
        format_version: INSTANCE_FORMAT_VERSION,
        dim: inst.dim,
        caps: inst
            .caps
            .iter()
            .map(|c| CapRecord {
                center: c.center.coords().to_vec(),
                radius: c.radius,
            })
            .collect(),
    }
}

pub fn save_instance(path: &Path, inst: &Instance) -> Result<(), IoError> {
    let file = instance_to_file(inst);
    let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn certificate_to_file(cert: &CoverCertificate, seed: u64) -> CertificateFile {
    let inst = Instance {
        dim: cert.dim,
        caps: cert.input_caps.clone(),
    };
    CertificateFile {
        format_version: CERTIFICATE_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        instance_digest: instance_digest(&inst),
        cover: CapRecord {
            center: cert.cover_cap.center.coords().to_vec(),
            radius: cert.cover_cap.radius,
        },
        slacks: cert.containment_slacks.clone(),
        merge_trace: cert
            .merge_trace
            .iter()
            .map(|s| MergeStepRecord {
                indices: s.merged_indices.clone(),
                normal: s.new_zone.normal.coords().to_vec(),
                half_width: s.new_zone.half_width,
                w_norm_slack: s.w_norm_slack,
                member_slacks: s.member_slacks.clone(),
            })
            .collect(),
        final_w: cert.final_w.clone(),
        heuristic_signing: cert.heuristic_signing,
        separability: cert.separability.as_ref().map(|v| SeparabilityRecord {
            status: v.status,
            witness_normal: v.witness_normal.as_ref().map(|p| p.coords().to_vec()),
            witness_pattern: v.witness_pattern.as_ref().map(|p| p.signs().to_vec()),
            best_margin: v.best_margin,
        }),
        valid: cert.is_valid(),
    }
}

pub fn save_certificate(
    path: &Path,
    cert: &CoverCertificate,
    seed: u64,
) -> Result<(), IoError> {
    let file = certificate_to_file(cert, seed);
    let mut text = serde_json::to_string_pretty(&file).expect("certificate serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_certificate(path: &Path) -> Result<CertificateFile, IoError> {
    let text = read_text(path)?;
    let file: CertificateFile = parse_json(path, &text)?;
    if file.format_version != CERTIFICATE_FORMAT_VERSION {
        return Err(validation(
            path,
            "format_version",
            format!("unsupported version {}", file.format_version),
        ));
    }
    Ok(file)
}

/// Rebuilds the domain certificate from a stored file plus the instance it
/// is bound to. The digest must already have been checked by the caller.
pub fn certificate_from_file(
    path: &Path,
    file: &CertificateFile,
    inst: &Instance,
) -> Result<CoverCertificate, IoError> {
    let cover_cap = cap_from_record(path, "cover", &file.cover, inst.dim + 1)?;
    let mut merge_trace = Vec::with_capacity(file.merge_trace.len());
    for (i, rec) in file.merge_trace.iter().enumerate() {
        let field = format!("merge_trace[{i}]");
        let normal = Point::new(rec.normal.clone())
            .or_else(|_| Point::normalized(rec.normal.clone()))
            .map_err(|e| validation(path, format!("{field}.normal"), e.to_string()))?;
        let new_zone = Zone::new(normal, rec.half_width)
            .map_err(|e| validation(path, format!("{field}.half_width"), e.to_string()))?;
        merge_trace.push(MergeStep {
            merged_indices: rec.indices.clone(),
            new_zone,
            w_norm_slack: rec.w_norm_slack,
            member_slacks: rec.member_slacks.clone(),
        });
    }
    let separability = match &file.separability {
        None => None,
        Some(rec) => {
            let witness_normal = rec
                .witness_normal
                .as_ref()
                .map(|v| {
                    Point::new(v.clone()).or_else(|_| Point::normalized(v.clone())).map_err(
                        |e| validation(path, "separability.witness_normal", e.to_string()),
                    )
                })
                .transpose()?;
            let witness_pattern = rec
                .witness_pattern
                .as_ref()
                .map(|signs| {
                    SignPattern::new(signs.clone()).map_err(|e| {
                        validation(path, "separability.witness_pattern", e.to_string())
                    })
                })
                .transpose()?;
            Some(SeparabilityVerdict {
                status: rec.status,
                witness_normal,
                witness_pattern,
                best_margin: rec.best_margin,
            })
        }
    };
    Ok(CoverCertificate {
        dim: inst.dim,
        cover_cap,
        input_caps: inst.caps.clone(),
        containment_slacks: file.slacks.clone(),
        merge_trace,
        final_w: file.final_w.clone(),
        heuristic_signing: file.heuristic_signing,
        separability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{cover_caps, CoverOptions};
    use crate::gen;

    #[test]
    fn instance_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        for seed in 0..20 {
            let inst = gen::random_chain(2, 4, seed).unwrap();
            save_instance(&path, &inst).unwrap();
            let first = fs::read(&path).unwrap();
            let loaded = load_instance(&path).unwrap();
            assert_eq!(loaded, inst);
            save_instance(&path, &loaded).unwrap();
            let second = fs::read(&path).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn certificate_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let inst = gen::random_chain(2, 4, 3).unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        let path = dir.path().join("cert.json");
        save_certificate(&path, &cert, 42).unwrap();
        let first = fs::read(&path).unwrap();
        let file = load_certificate(&path).unwrap();
        assert_eq!(file.seed, 42);
        assert_eq!(file.instance_digest, instance_digest(&inst));
        let rebuilt = certificate_from_file(&path, &file, &inst).unwrap();
        assert_eq!(rebuilt, cert);
        save_certificate(&path, &rebuilt, 42).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn digest_tracks_numeric_content() {
        let a = gen::random_chain(2, 3, 1).unwrap();
        let b = gen::random_chain(2, 3, 2).unwrap();
        assert_ne!(instance_digest(&a), instance_digest(&b));
        assert_eq!(instance_digest(&a), instance_digest(&a.clone()));
    }

    #[test]
    fn malformed_files_give_field_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");

        fs::write(&path, "{ not json").unwrap();
        match load_instance(&path) {
            Err(IoError::Json { line, .. }) => assert!(line >= 1),
            other => panic!("expected json error, got {other:?}"),
        }

        fs::write(
            &path,
            r#"{"format_version":1,"dim":2,"caps":[{"center":[1.0,0.0,0.0],"radius":2.0}]}"#,
        )
        .unwrap();
        match load_instance(&path) {
            Err(IoError::Validation { field, .. }) => assert_eq!(field, "caps[0].radius"),
            other => panic!("expected validation error, got {other:?}"),
        }

        fs::write(
            &path,
            r#"{"format_version":1,"dim":2,"caps":[{"center":[2.0,0.0,0.0],"radius":0.3}]}"#,
        )
        .unwrap();
        match load_instance(&path) {
            Err(IoError::Validation { field, .. }) => assert_eq!(field, "caps[0].center"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn near_unit_centers_are_normalized_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("near.json");
        fs::write(
            &path,
            r#"{"format_version":1,"dim":2,"caps":[{"center":[1.0000004,0.0,0.0],"radius":0.3}]}"#,
        )
        .unwrap();
        let inst = load_instance(&path).unwrap();
        let n = crate::vecmath::norm(inst.caps[0].center.coords());
        assert!((n - 1.0).abs() <= EPS_UNIT);
    }
}
