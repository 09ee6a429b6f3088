use std::collections::BTreeMap;
use std::path::Path;

use birdcall::enhance::Method;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Scores of one clip under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRow {
    pub file_id: String,
    pub method: String,
    pub snr_improvement_db: f64,
    pub isd: f64,
    pub runtime_ms: f64,
}

/// Per-method means and sample standard deviations over [`FileRow`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub label: String,
    pub n: usize,
    pub snr_improvement_mean: f64,
    pub snr_improvement_std: f64,
    pub isd_mean: f64,
    pub isd_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub corpus_fingerprint: String,
    pub seed: u64,
    pub per_file: Vec<FileRow>,
    pub aggregate: Vec<AggregateRow>,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

/// SHA-256 over the sorted file names, one per line.
pub fn corpus_fingerprint<S: AsRef<str>>(names: &[S]) -> String {
    let mut sorted: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    let mut h = Sha256::new();
    for n in sorted {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn method_order(id: &str) -> (usize, String) {
    let rank = id
        .parse::<Method>()
        .ok()
        .and_then(|m| Method::ALL.iter().position(|x| *x == m))
        .unwrap_or(Method::ALL.len());
    (rank, id.to_string())
}

/// One aggregate row per method present in `rows`, in table order
/// (baselines first, MABE last).
pub fn aggregate(rows: &[FileRow]) -> Vec<AggregateRow> {
    let mut by_method: BTreeMap<(usize, String), Vec<&FileRow>> = BTreeMap::new();
    for r in rows {
        by_method.entry(method_order(&r.method)).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|((_, method), rs)| {
            let snr: Vec<f64> = rs.iter().map(|r| r.snr_improvement_db).collect();
            let isd: Vec<f64> = rs.iter().map(|r| r.isd).collect();
            let (snr_improvement_mean, snr_improvement_std) = mean_std(&snr);
            let (isd_mean, isd_std) = mean_std(&isd);
            let label = method
                .parse::<Method>()
                .map(|m| m.label().to_string())
                .unwrap_or_else(|_| method.clone());
            AggregateRow {
                method,
                label,
                n: rs.len(),
                snr_improvement_mean,
                snr_improvement_std,
                isd_mean,
                isd_std,
            }
        })
        .collect()
}

impl Report {
    pub fn new(corpus_fingerprint: String, seed: u64, per_file: Vec<FileRow>, failures: Vec<Failure>) -> Self {
        let aggregate = aggregate(&per_file);
        Report {
            corpus_fingerprint,
            seed,
            per_file,
            aggregate,
            failures,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serialises");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Merges reports of the same corpus. Rows for a (file, method) pair
    /// seen earlier are replaced by later ones.
    pub fn merge(reports: &[Report]) -> Result<Report> {
        let first = reports.first().ok_or_else(|| Error::usage("no reports to merge"))?;
        let mut rows: BTreeMap<(String, String), FileRow> = BTreeMap::new();
        let mut failures = Vec::new();
        for r in reports {
            if r.corpus_fingerprint != first.corpus_fingerprint {
                return Err(Error::FingerprintMismatch {
                    first: first.corpus_fingerprint.clone(),
                    second: r.corpus_fingerprint.clone(),
                });
            }
            for row in &r.per_file {
                rows.insert((row.file_id.clone(), row.method.clone()), row.clone());
            }
            failures.extend(r.failures.iter().cloned());
        }
        Ok(Report::new(
            first.corpus_fingerprint.clone(),
            first.seed,
            rows.into_values().collect(),
            failures,
        ))
    }

    pub fn markdown_table(&self) -> String {
        let mut s = String::from("| Method | SNR Improvement (dB) | ISD |\n|---|---:|---:|\n");
        for a in &self.aggregate {
            s.push_str(&format!("| {} | {:+.2} | {:.2} |\n", a.label, a.snr_improvement_mean, a.isd_mean));
        }
        s
    }

    pub fn write_csv_table(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["method", "snr_improvement_db", "isd"]).map_err(csv_err)?;
        for a in &self.aggregate {
            w.write_record([a.label.clone(), format!("{:.4}", a.snr_improvement_mean), format!("{:.4}", a.isd_mean)])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(file: &str, method: &str, snr: f64, isd: f64) -> FileRow {
        FileRow {
            file_id: file.into(),
            method: method.into(),
            snr_improvement_db: snr,
            isd,
            runtime_ms: 1.0,
        }
    }

    #[test]
    fn fingerprint_ignores_order() {
        assert_eq!(corpus_fingerprint(&["b.wav", "a.wav"]), corpus_fingerprint(&["a.wav", "b.wav"]));
        assert_ne!(corpus_fingerprint(&["a.wav"]), corpus_fingerprint(&["c.wav"]));
    }

    #[test]
    fn aggregate_means_and_order() {
        let rows = vec![
            row("a", "mabe", 10.0, 1.0),
            row("b", "mabe", 12.0, 3.0),
            row("a", "specsub", 4.0, 2.0),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg[0].method, "specsub");
        assert_eq!(agg[1].label, "MABE");
        assert!((agg[1].snr_improvement_mean - 11.0).abs() < 1e-12);
        assert!((agg[1].isd_std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(agg[0].isd_std, 0.0);
    }

    #[test]
    fn merge_guards_fingerprint() {
        let a = Report::new("aaa".into(), 0, vec![row("x", "mabe", 1.0, 1.0)], vec![]);
        let b = Report::new("aaa".into(), 0, vec![row("x", "mmse-lsa", 2.0, 2.0)], vec![]);
        let m = Report::merge(&[a.clone(), b]).unwrap();
        assert_eq!(m.aggregate.len(), 2);
        assert!(m.markdown_table().contains("| MMSE-LSA | +2.00 | 2.00 |"));
        let c = Report::new("ccc".into(), 0, vec![], vec![]);
        let err = Report::merge(&[a, c]).unwrap_err().to_string();
        assert!(err.contains("aaa") && err.contains("ccc"));
    }
}
