//! JSON-lines training report.
//!
//! One JSON object per line: a `header` record echoing the fully-resolved
//! run configuration and input paths, one `epoch` record per training epoch,
//! and a `final` record carrying the learned coefficients. Wall-clock time
//! is deliberately not serialized so identical runs produce identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::wgan::{EpochRecord, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub config: RunConfig,
    pub undamaged_path: String,
    pub damaged_path: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truth_path: Option<String>,
    pub normalization_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFinal {
    /// Masked-cell coefficients, in mask order.
    pub final_coefficients: Vec<f64>,
    /// Baseline coefficients for unmasked cells, in row-major index order.
    pub border_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReportLine {
    Header(Box<ReportHeader>),
    Epoch(EpochRecord),
    Final(ReportFinal),
}

pub fn write_report(path: &Path, header: &ReportHeader, report: &TrainReport) -> Result<()> {
    atomic_write(path, |w| {
        let emit = |w: &mut dyn std::io::Write, line: &ReportLine| -> Result<()> {
            let json = serde_json::to_string(line)
                .map_err(|e| Error::Format(format!("report serialization: {e}")))?;
            writeln!(w, "{json}")?;
            Ok(())
        };
        emit(w, &ReportLine::Header(Box::new(header.clone())))?;
        for rec in &report.epochs {
            emit(w, &ReportLine::Epoch(rec.clone()))?;
        }
        emit(
            w,
            &ReportLine::Final(ReportFinal {
                final_coefficients: report.final_coefficients.clone(),
                border_coefficients: report.border_coefficients.clone(),
            }),
        )
    })
}

pub fn read_report(path: &Path) -> Result<(ReportHeader, Vec<EpochRecord>, ReportFinal)> {
    let text = std::fs::read_to_string(path)?;
    let mut header = None;
    let mut epochs = Vec::new();
    let mut fin = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ReportLine = serde_json::from_str(line).map_err(|e| {
            Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        match parsed {
            ReportLine::Header(h) => {
                if header.replace(*h).is_some() {
                    return Err(Error::Format(format!(
                        "{}: more than one header record",
                        path.display()
                    )));
                }
            }
            ReportLine::Epoch(r) => epochs.push(r),
            ReportLine::Final(f) => {
                if fin.replace(f).is_some() {
                    return Err(Error::Format(format!(
                        "{}: more than one final record",
                        path.display()
                    )));
                }
            }
        }
    }
    match (header, fin) {
        (Some(h), Some(f)) => Ok((h, epochs, f)),
        (None, _) => Err(Error::Format(format!(
            "{}: missing header record",
            path.display()
        ))),
        (_, None) => Err(Error::Format(format!(
            "{}: missing final record",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> TrainReport {
        TrainReport {
            epochs: vec![
                EpochRecord {
                    epoch: 1,
                    critic_loss: -0.5,
                    generator_loss: 0.2,
                    wasserstein_estimate: 0.5,
                    mae_vs_truth: Some(0.018),
                    r2_vs_truth: Some(0.4),
                },
                EpochRecord {
                    epoch: 2,
                    critic_loss: -0.3,
                    generator_loss: 0.1,
                    wasserstein_estimate: 0.3,
                    mae_vs_truth: None,
                    r2_vs_truth: None,
                },
            ],
            final_coefficients: vec![0.9, 0.8],
            border_coefficients: vec![1.0],
            normalization_scale: 2.25,
            wall_seconds: 12.5,
        }
    }

    fn sample_header() -> ReportHeader {
        ReportHeader {
            config: RunConfig::default(),
            undamaged_path: "u.calo".into(),
            damaged_path: "d.calo".into(),
            truth_path: None,
            normalization_scale: 2.25,
        }
    }

    #[test]
    fn roundtrip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.jsonl");
        let report = sample_report();
        write_report(&path, &sample_header(), &report).unwrap();
        let (h, epochs, fin) = read_report(&path).unwrap();
        assert_eq!(h, sample_header());
        assert_eq!(epochs, report.epochs);
        assert_eq!(fin.final_coefficients, report.final_coefficients);
        assert_eq!(fin.border_coefficients, report.border_coefficients);
    }

    #[test]
    fn wall_clock_is_not_serialized() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let mut r1 = sample_report();
        let mut r2 = sample_report();
        r1.wall_seconds = 1.0;
        r2.wall_seconds = 99.0;
        write_report(&a, &sample_header(), &r1).unwrap();
        write_report(&b, &sample_header(), &r2).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn line_structure_is_one_json_object_per_epoch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.jsonl");
        write_report(&path, &sample_header(), &sample_report()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4); // header + 2 epochs + final
        assert!(lines[0].contains("\"type\":\"header\""));
        assert!(lines[1].contains("\"type\":\"epoch\""));
        assert!(lines[3].contains("\"type\":\"final\""));
        // Optional metrics are omitted when absent.
        assert!(lines[1].contains("mae_vs_truth"));
        assert!(!lines[2].contains("mae_vs_truth"));
    }

    #[test]
    fn missing_records_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.jsonl");
        std::fs::write(&path, "{\"type\":\"epoch\",\"epoch\":1,\"critic_loss\":0.0,\"generator_loss\":0.0,\"wasserstein_estimate\":0.0}\n").unwrap();
        assert!(matches!(read_report(&path), Err(Error::Format(_))));
    }
}
