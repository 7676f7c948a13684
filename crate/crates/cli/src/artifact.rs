//! Report artifacts. Every file carries the artifact version, the scene
//! hash, and a generation timestamp; the timestamp is the only
//! non-deterministic content, and it occupies its own line in both formats
//! so reruns diff in exactly one line per artifact.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::scene::TableFormat;

#[derive(Debug, Clone)]
pub struct ArtifactMeta {
    pub scene_hash: String,
    pub seed: Option<u64>,
    pub generated: String,
}

impl ArtifactMeta {
    pub fn new(scene_hash: String, seed: Option<u64>) -> ArtifactMeta {
        let generated = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        ArtifactMeta { scene_hash, seed, generated }
    }

    fn seed_text(&self) -> String {
        match self.seed {
            Some(s) => s.to_string(),
            None => "-".into(),
        }
    }
}

/// JSON value for a float that may be non-finite; mirrors the core's
/// serialization of infinite thresholds.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("infinite")
    } else {
        json!("-infinite")
    }
}

pub struct Writer {
    dir: PathBuf,
    meta: ArtifactMeta,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, meta: ArtifactMeta) -> Result<Writer> {
        fs::create_dir_all(dir).with_context(|| format!("creating output dir {}", dir.display()))?;
        Ok(Writer { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn artifact_count(&self) -> usize {
        self.written.len()
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Table artifact in the selected format. `rows` are preformatted cells
    /// aligned with `columns`.
    pub fn table(
        &mut self,
        stem: &str,
        format: TableFormat,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> Result<()> {
        match format {
            TableFormat::Csv => {
                let mut text = format!(
                    "# qlm v{} scene={} seed={}\n# generated {}\n",
                    qlm_core::VERSION,
                    self.meta.scene_hash,
                    self.meta.seed_text(),
                    self.meta.generated
                );
                text.push_str(&columns.join(","));
                text.push('\n');
                for row in rows {
                    text.push_str(&row.join(","));
                    text.push('\n');
                }
                self.put(&format!("{stem}.csv"), &text)
            }
            TableFormat::Json => {
                let data: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (c, cell) in columns.iter().zip(row) {
                            // cells are numbers, booleans, or names
                            let v = cell
                                .parse::<f64>()
                                .ok()
                                .map(num)
                                .or_else(|| cell.parse::<bool>().ok().map(Value::Bool))
                                .unwrap_or_else(|| Value::String(cell.clone()));
                            obj.insert((*c).into(), v);
                        }
                        Value::Object(obj)
                    })
                    .collect();
                self.report(stem, json!(data))
            }
        }
    }

    /// Nested report, always JSON.
    pub fn report(&mut self, stem: &str, report: Value) -> Result<()> {
        let doc = json!({
            "artifact": format!("qlm v{}", qlm_core::VERSION),
            "scene_hash": self.meta.scene_hash,
            "seed": self.meta.seed,
            "generated": self.meta.generated,
            "report": report,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.put(&format!("{stem}.json"), &text)
    }

    /// Raw text artifact (e.g. a boundary-data record); fully deterministic,
    /// no header.
    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        self.put(name, contents)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonfinite_numbers_serialize_as_strings() {
        assert_eq!(num(2.0), json!(2.0));
        assert_eq!(num(f64::INFINITY), json!("infinite"));
        assert_eq!(num(f64::NEG_INFINITY), json!("-infinite"));
        assert_eq!(num(f64::NAN), json!("nan"));
    }

    #[test]
    fn csv_table_has_version_and_timestamp_lines() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ArtifactMeta::new("deadbeef00000000".into(), Some(7));
        let mut w = Writer::new(dir.path(), meta).unwrap();
        w.table(
            "01_masses_S1",
            TableFormat::Csv,
            &["surface", "m_by"],
            &[vec!["S1".into(), "0.5".into()]],
        )
        .unwrap();
        let text = fs::read_to_string(dir.path().join("01_masses_S1.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].contains(qlm_core::VERSION) && lines[0].contains("deadbeef"));
        assert!(lines[1].starts_with("# generated "));
        assert_eq!(lines[2], "surface,m_by");
        assert_eq!(lines[3], "S1,0.5");
    }

    #[test]
    fn json_report_puts_the_timestamp_on_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ArtifactMeta::new("deadbeef00000000".into(), None);
        let mut w = Writer::new(dir.path(), meta).unwrap();
        w.report("02_flow", json!({"energy": 0.375})).unwrap();
        let text = fs::read_to_string(dir.path().join("02_flow.json")).unwrap();
        let stamped: Vec<&str> = text.lines().filter(|l| l.contains("\"generated\"")).collect();
        assert_eq!(stamped.len(), 1);
        assert!(text.contains("\"energy\": 0.375"));
    }
}
