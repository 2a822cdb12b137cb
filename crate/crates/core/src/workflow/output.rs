use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::domain::{DesignData, InputSpace, Provenance, SensitivityReport, StoppingTrace};
use crate::stopping::IndexFamily;
use crate::{Error, Result};

pub const DESIGN_FILE: &str = "design.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const FOLDS_FILE: &str = "folds.csv";
pub const REPORT_FILE: &str = "report.json";

/// Criterion columns of the trace, in order.
pub const CRITERION_COLUMNS: [&str; 5] = ["mean", "max", "max_undivided", "rrse", "beeq"];

/// Files of one run directory. Each write replaces the whole file through a
/// temporary file and a rename, so a crash never leaves a torn file.
#[derive(Debug, Clone)]
pub struct OutputFiles {
    dir: PathBuf,
}

fn fmt(v: f64) -> String {
    format!("{:?}", v)
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::InvalidData(format!("csv: {}", e));
    w.write_record(&header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidData(format!("csv: {}", e)))
}

pub fn write_design_csv(path: &Path, data: &DesignData) -> Result<()> {
    let mut header = vec!["provenance".to_string()];
    header.extend(data.space().names().map(String::from));
    header.push("y".into());
    let rows = (0..data.len())
        .map(|i| {
            let mut r = vec![data.provenance()[i].to_string()];
            r.extend(data.points()[i].iter().map(|v| fmt(*v)));
            r.push(fmt(data.responses()[i]));
            r
        })
        .collect();
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Reads a design table. The columns must be the dimension names of `space`
/// followed by `y`, optionally preceded by `provenance`.
pub fn read_design_csv(path: &Path, space: &InputSpace) -> Result<DesignData> {
    let bad = |m: String| Error::InvalidData(format!("{}: {}", path.display(), m));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(|s| s.trim().to_string()).collect();
    let has_prov = header.first().map(String::as_str) == Some("provenance");
    let mut expected: Vec<String> = space.names().map(String::from).collect();
    expected.push("y".into());
    let cols = &header[usize::from(has_prov)..];
    if cols != expected.as_slice() {
        return Err(bad(format!("expected columns {:?}, found {:?}", expected, cols)));
    }
    let d = space.dim();
    let (mut points, mut y, mut prov) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut it = rec.iter().map(str::trim);
        let p = if has_prov {
            it.next().unwrap_or("").parse::<Provenance>()?
        } else {
            Provenance::Initial
        };
        let vals = it
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("row {}: invalid number {:?}", line + 2, s))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != d + 1 {
            return Err(bad(format!("row {}: expected {} values, got {}", line + 2, d + 1, vals.len())));
        }
        points.push(vals[..d].to_vec());
        y.push(vals[d]);
        prov.push(p);
    }
    DesignData::new(space.clone(), points, y, prov)
}

pub(crate) fn trace_csv(trace: &StoppingTrace, space: &InputSpace) -> Result<Vec<u8>> {
    let d = space.dim();
    let mut header = vec!["iteration".to_string(), "N".to_string()];
    for prefix in ["S", "ST", "nu"] {
        header.extend((1..=d).map(|i| format!("{}_{}", prefix, i)));
    }
    header.extend(CRITERION_COLUMNS.iter().map(|s| s.to_string()));
    let rows = trace
        .records()
        .iter()
        .map(|rec| {
            let mut r = vec![rec.iteration.to_string(), rec.sample_count.to_string()];
            for v in rec.report.main.iter().chain(&rec.report.total).chain(&rec.report.dgsm) {
                r.push(fmt(*v));
            }
            for c in CRITERION_COLUMNS {
                r.push(fmt(rec.criteria.get(c).copied().unwrap_or(f64::NAN)));
            }
            r
        })
        .collect();
    csv_bytes(header, rows)
}

pub(crate) fn folds_csv(trace: &StoppingTrace, space: &InputSpace) -> Result<Vec<u8>> {
    let mut header = vec!["iteration".to_string(), "family".to_string(), "fold".to_string()];
    header.extend(space.names().map(String::from));
    let mut rows = Vec::new();
    for rec in trace.records() {
        for family in IndexFamily::ALL {
            let Some(folds) = rec.fold_indices.get(&family) else { continue };
            for (f, v) in folds.iter().enumerate() {
                let mut r = vec![rec.iteration.to_string(), family.as_str().to_string(), f.to_string()];
                r.extend(v.iter().map(|x| fmt(*x)));
                rows.push(r);
            }
        }
    }
    csv_bytes(header, rows)
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub(crate) struct ReportDocument<'a> {
    pub dimensions: Vec<String>,
    pub sample_count: usize,
    pub iterations: usize,
    pub stop_reason: String,
    pub lengthscales: &'a [f64],
    pub criteria: &'a std::collections::BTreeMap<String, f64>,
    pub report: &'a SensitivityReport,
}

impl OutputFiles {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputFiles { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn design_path(&self) -> PathBuf {
        self.dir.join(DESIGN_FILE)
    }

    pub fn trace_path(&self) -> PathBuf {
        self.dir.join(TRACE_FILE)
    }

    pub fn folds_path(&self) -> PathBuf {
        self.dir.join(FOLDS_FILE)
    }

    pub fn report_path(&self) -> PathBuf {
        self.dir.join(REPORT_FILE)
    }

    pub fn write_design(&self, data: &DesignData) -> Result<()> {
        write_design_csv(&self.design_path(), data)
    }

    pub fn write_trace(&self, trace: &StoppingTrace, space: &InputSpace) -> Result<()> {
        write_atomic(&self.trace_path(), &trace_csv(trace, space)?)?;
        write_atomic(&self.folds_path(), &folds_csv(trace, space)?)
    }

    pub(crate) fn write_report(&self, doc: &ReportDocument<'_>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::InvalidData(format!("report: {}", e)))?;
        text.push('\n');
        write_atomic(&self.report_path(), text.as_bytes())
    }
}
