//! Report files: `<subcommand>-<timestamp>.txt` (human readable, carries the
//! timestamp) and `<subcommand>-<timestamp>.csv` (deterministic).

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use crate::error::Result;

pub trait Report {
    fn subcommand(&self) -> &'static str;
    /// Human-readable body, a pure function of the inputs.
    fn text(&self) -> String;
    fn csv(&self) -> String;
    /// `None` when the report carries no acceptance decision.
    fn passed(&self) -> Option<bool>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub txt: PathBuf,
    pub csv: PathBuf,
}

/// Writes both files into `dir`, creating it if needed.
pub fn write_report(report: &dyn Report, dir: &Path, timestamp: DateTime<Utc>) -> Result<ReportPaths> {
    std::fs::create_dir_all(dir)?;
    let stamp = timestamp.format("%Y%m%dT%H%M%S%3fZ");
    let base = format!("{}-{stamp}", report.subcommand());
    let txt = dir.join(format!("{base}.txt"));
    let csv = dir.join(format!("{base}.csv"));
    let verdict = match report.passed() {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "n/a",
    };
    let body = format!("timestamp: {}\nverdict: {verdict}\n{}", timestamp.to_rfc3339(), report.text());
    std::fs::write(&txt, body)?;
    std::fs::write(&csv, report.csv())?;
    Ok(ReportPaths { txt, csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    struct Dummy;

    impl Report for Dummy {
        fn subcommand(&self) -> &'static str {
            "dummy"
        }
        fn text(&self) -> String {
            "body\n".into()
        }
        fn csv(&self) -> String {
            "a,b\n1,2\n".into()
        }
        fn passed(&self) -> Option<bool> {
            Some(true)
        }
    }

    #[test]
    fn file_names_and_contents() {
        let dir = tempfile::tempdir().unwrap();
        let t = Utc.with_ymd_and_hms(2024, 5, 6, 7, 8, 9).unwrap();
        let p = write_report(&Dummy, &dir.path().join("out"), t).unwrap();
        assert_eq!(p.txt.file_name().unwrap(), "dummy-20240506T070809000Z.txt");
        assert_eq!(std::fs::read_to_string(&p.csv).unwrap(), "a,b\n1,2\n");
        let txt = std::fs::read_to_string(&p.txt).unwrap();
        assert!(txt.starts_with("timestamp: 2024-05-06T07:08:09+00:00\nverdict: PASS\nbody"));
    }
}
