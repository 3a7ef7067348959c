//! Serialization of grid results: the cells table as CSV and JSON, and
//! the optional per-repetition audit stream. Floats are written with 17
//! significant digits so a parse-and-rewrite cycle is byte-identical.

use std::io::Write;
use std::path::Path;

use super::{CellResult, CurveCell, ExperimentError, Strategy};
use crate::math::{fmt_g17, KahanSum};
use crate::model::ModelKind;

pub const SCHEMA_VERSION: u32 = 1;

const CELLS_HEADER: &str = "schema_version,dataset,method,classifier,n_labeled,n_unlabeled,n_reps,mean_error,sd_error,se_error,mean_joint_ll,sd_joint_ll,se_joint_ll,mean_marginal_ll,sd_marginal_ll,se_marginal_ll,degenerate_draws";

const AUDIT_HEADER: &str = "dataset,method,classifier,n_labeled,n_unlabeled,rep,error,joint_ll,marginal_ll,variance_clamped,ridge_applied,psd_repaired,fallback,labeled_redraws,replacement_salt";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_owned(), source }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> ExperimentError {
    ExperimentError::MalformedCsv { path: path.to_owned(), line, message: message.into() }
}

/// Writes the aggregated cells table.
pub fn write_cells_csv(cells: &[CurveCell], path: &Path) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{CELLS_HEADER}").map_err(io_err(path))?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            c.dataset,
            c.method,
            c.classifier,
            c.n_labeled,
            c.n_unlabeled,
            c.n_reps,
            fmt_g17(c.mean_error),
            fmt_g17(c.sd_error),
            fmt_g17(c.se_error),
            fmt_g17(c.mean_joint_ll),
            fmt_g17(c.sd_joint_ll),
            fmt_g17(c.se_joint_ll),
            fmt_g17(c.mean_marginal_ll),
            fmt_g17(c.sd_marginal_ll),
            fmt_g17(c.se_marginal_ll),
            c.degenerate_draws,
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn field<T: std::str::FromStr>(
    parts: &[&str],
    idx: usize,
    path: &Path,
    line: usize,
) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    parts[idx]
        .parse::<T>()
        .map_err(|e| malformed(path, line, format!("column {}: {e}", idx + 1)))
}

/// Reads a cells table back, insisting on the exact header and schema
/// version this crate writes.
pub fn read_cells_csv(path: &Path) -> Result<Vec<CurveCell>, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(path, 1, "empty file"))?;
    if header != CELLS_HEADER {
        return Err(malformed(path, 1, "unexpected header"));
    }
    let mut cells = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != 17 {
            return Err(malformed(path, line, format!("expected 17 columns, found {}", parts.len())));
        }
        let version: u32 = field(&parts, 0, path, line)?;
        if version != SCHEMA_VERSION {
            return Err(malformed(path, line, format!("unsupported schema version {version}")));
        }
        let method: Strategy = parts[2]
            .parse()
            .map_err(|e: String| malformed(path, line, e))?;
        let classifier: ModelKind = parts[3]
            .parse()
            .map_err(|e: String| malformed(path, line, e))?;
        cells.push(CurveCell {
            dataset: parts[1].to_string(),
            method,
            classifier,
            n_labeled: field(&parts, 4, path, line)?,
            n_unlabeled: field(&parts, 5, path, line)?,
            n_reps: field(&parts, 6, path, line)?,
            mean_error: field(&parts, 7, path, line)?,
            sd_error: field(&parts, 8, path, line)?,
            se_error: field(&parts, 9, path, line)?,
            mean_joint_ll: field(&parts, 10, path, line)?,
            sd_joint_ll: field(&parts, 11, path, line)?,
            se_joint_ll: field(&parts, 12, path, line)?,
            mean_marginal_ll: field(&parts, 13, path, line)?,
            sd_marginal_ll: field(&parts, 14, path, line)?,
            se_marginal_ll: field(&parts, 15, path, line)?,
            degenerate_draws: field(&parts, 16, path, line)?,
        });
    }
    if cells.is_empty() {
        return Err(malformed(path, 1, "no data rows"));
    }
    Ok(cells)
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Writes the cells table as JSON, one object per cell, with the same
/// 17-digit float text as the CSV.
pub fn write_cells_json(cells: &[CurveCell], path: &Path) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{{\n  \"schema_version\": {SCHEMA_VERSION},\n  \"cells\": [")
        .map_err(io_err(path))?;
    for (i, c) in cells.iter().enumerate() {
        let sep = if i + 1 == cells.len() { "" } else { "," };
        writeln!(
            out,
            "    {{\"dataset\":{},\"method\":\"{}\",\"classifier\":\"{}\",\"n_labeled\":{},\"n_unlabeled\":{},\"n_reps\":{},\"mean_error\":{},\"sd_error\":{},\"se_error\":{},\"mean_joint_ll\":{},\"sd_joint_ll\":{},\"se_joint_ll\":{},\"mean_marginal_ll\":{},\"sd_marginal_ll\":{},\"se_marginal_ll\":{},\"degenerate_draws\":{}}}{sep}",
            json_string(&c.dataset),
            c.method,
            c.classifier,
            c.n_labeled,
            c.n_unlabeled,
            c.n_reps,
            fmt_g17(c.mean_error),
            fmt_g17(c.sd_error),
            fmt_g17(c.se_error),
            fmt_g17(c.mean_joint_ll),
            fmt_g17(c.sd_joint_ll),
            fmt_g17(c.se_joint_ll),
            fmt_g17(c.mean_marginal_ll),
            fmt_g17(c.sd_marginal_ll),
            fmt_g17(c.se_marginal_ll),
            c.degenerate_draws,
        )
        .map_err(io_err(path))?;
    }
    writeln!(out, "  ]\n}}").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// One row of the per-repetition audit stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub dataset: String,
    pub method: Strategy,
    pub classifier: ModelKind,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub rep: usize,
    pub error: f64,
    pub joint_ll: f64,
    pub marginal_ll: f64,
    pub variance_clamped: bool,
    pub ridge_applied: bool,
    pub psd_repaired: bool,
    pub fallback: bool,
    pub labeled_redraws: usize,
    pub replacement_salt: u64,
}

/// Writes every retained repetition record, one row each, in grid order.
pub fn write_audit_csv(results: &[CellResult], path: &Path) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{AUDIT_HEADER}").map_err(io_err(path))?;
    for result in results {
        let c = &result.cell;
        for r in &result.reps {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.dataset,
                c.method,
                c.classifier,
                c.n_labeled,
                c.n_unlabeled,
                r.rep,
                fmt_g17(r.error),
                fmt_g17(r.joint_ll),
                fmt_g17(r.marginal_ll),
                r.flags.variance_clamped as u8,
                r.flags.ridge_applied as u8,
                r.flags.psd_repaired as u8,
                r.flags.fallback as u8,
                r.flags.labeled_redraws,
                r.flags.replacement_salt,
            )
            .map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

fn parse_flag(parts: &[&str], idx: usize, path: &Path, line: usize) -> Result<bool, ExperimentError> {
    match parts[idx] {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(malformed(path, line, format!("column {}: expected 0 or 1, found `{other}`", idx + 1))),
    }
}

/// Reads an audit stream back.
pub fn read_audit_csv(path: &Path) -> Result<Vec<AuditRow>, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(path, 1, "empty file"))?;
    if header != AUDIT_HEADER {
        return Err(malformed(path, 1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != 15 {
            return Err(malformed(path, line, format!("expected 15 columns, found {}", parts.len())));
        }
        rows.push(AuditRow {
            dataset: parts[0].to_string(),
            method: parts[1].parse().map_err(|e: String| malformed(path, line, e))?,
            classifier: parts[2].parse().map_err(|e: String| malformed(path, line, e))?,
            n_labeled: field(&parts, 3, path, line)?,
            n_unlabeled: field(&parts, 4, path, line)?,
            rep: field(&parts, 5, path, line)?,
            error: field(&parts, 6, path, line)?,
            joint_ll: field(&parts, 7, path, line)?,
            marginal_ll: field(&parts, 8, path, line)?,
            variance_clamped: parse_flag(&parts, 9, path, line)?,
            ridge_applied: parse_flag(&parts, 10, path, line)?,
            psd_repaired: parse_flag(&parts, 11, path, line)?,
            fallback: parse_flag(&parts, 12, path, line)?,
            labeled_redraws: field(&parts, 13, path, line)?,
            replacement_salt: field(&parts, 14, path, line)?,
        });
    }
    Ok(rows)
}

/// Mean of one metric over a slice of audit rows, in row order.
pub fn audit_mean(rows: &[AuditRow], metric: impl Fn(&AuditRow) -> f64) -> f64 {
    let mut sum = KahanSum::new();
    for r in rows {
        sum.add(metric(r));
    }
    sum.value() / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cells() -> Vec<CurveCell> {
        vec![
            CurveCell {
                dataset: "haberman".into(),
                method: Strategy::Supervised,
                classifier: ModelKind::Nmc,
                n_labeled: 4,
                n_unlabeled: 2,
                n_reps: 1000,
                mean_error: 0.31247819,
                sd_error: 0.0712,
                se_error: 0.0712 / 1000f64.sqrt(),
                mean_joint_ll: -11.25,
                sd_joint_ll: 1.5,
                se_joint_ll: 1.5 / 1000f64.sqrt(),
                mean_marginal_ll: -10.5,
                sd_marginal_ll: 1.25,
                se_marginal_ll: 1.25 / 1000f64.sqrt(),
                degenerate_draws: 3,
            },
            CurveCell {
                dataset: "wdbc".into(),
                method: Strategy::EmSoft,
                classifier: ModelKind::Lda,
                n_labeled: 100,
                n_unlabeled: 2048,
                n_reps: 10,
                mean_error: 0.05,
                sd_error: 0.01,
                se_error: 0.01 / 10f64.sqrt(),
                mean_joint_ll: -42.0,
                sd_joint_ll: 0.125,
                se_joint_ll: 0.125 / 10f64.sqrt(),
                mean_marginal_ll: -41.0,
                sd_marginal_ll: 0.25,
                se_marginal_ll: 0.25 / 10f64.sqrt(),
                degenerate_draws: 0,
            },
        ]
    }

    #[test]
    fn csv_header_is_the_published_contract() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");
        write_cells_csv(&sample_cells(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "schema_version,dataset,method,classifier,n_labeled,n_unlabeled,n_reps,\
             mean_error,sd_error,se_error,mean_joint_ll,sd_joint_ll,se_joint_ll,\
             mean_marginal_ll,sd_marginal_ll,se_marginal_ll,degenerate_draws"
        );
        assert!(text.lines().nth(1).unwrap().starts_with("1,haberman,supervised,nmc,4,2,1000,"));
    }

    #[test]
    fn csv_round_trip_is_exact_and_rewrite_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");
        let cells = sample_cells();
        write_cells_csv(&cells, &path).unwrap();
        let reread = read_cells_csv(&path).unwrap();
        assert_eq!(reread, cells);
        let original = std::fs::read(&path).unwrap();
        let path2 = dir.path().join("cells2.csv");
        write_cells_csv(&reread, &path2).unwrap();
        assert_eq!(std::fs::read(&path2).unwrap(), original);
    }

    #[test]
    fn reader_rejects_malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");

        std::fs::write(&path, "nonsense header\n").unwrap();
        assert!(matches!(
            read_cells_csv(&path).unwrap_err(),
            ExperimentError::MalformedCsv { line: 1, .. }
        ));

        std::fs::write(&path, format!("{CELLS_HEADER}\n")).unwrap();
        assert!(matches!(
            read_cells_csv(&path).unwrap_err(),
            ExperimentError::MalformedCsv { message, .. } if message.contains("no data rows")
        ));

        std::fs::write(&path, format!("{CELLS_HEADER}\n1,haberman,supervised,nmc,4\n")).unwrap();
        assert!(matches!(
            read_cells_csv(&path).unwrap_err(),
            ExperimentError::MalformedCsv { line: 2, message, .. } if message.contains("17 columns")
        ));

        write_cells_csv(&sample_cells(), &path).unwrap();
        let bumped = std::fs::read_to_string(&path)
            .unwrap()
            .replace("1,haberman", "9,haberman");
        std::fs::write(&path, bumped).unwrap();
        assert!(matches!(
            read_cells_csv(&path).unwrap_err(),
            ExperimentError::MalformedCsv { message, .. } if message.contains("schema version")
        ));

        assert!(matches!(
            read_cells_csv(&dir.path().join("missing.csv")).unwrap_err(),
            ExperimentError::Io { .. }
        ));
    }

    #[test]
    fn json_is_valid_and_carries_exact_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.json");
        let cells = sample_cells();
        write_cells_json(&cells, &path).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(value["schema_version"], 1);
        let arr = value["cells"].as_array().unwrap();
        assert_eq!(arr.len(), 2);
        assert_eq!(arr[0]["dataset"], "haberman");
        assert_eq!(arr[0]["method"], "supervised");
        assert_eq!(arr[1]["classifier"], "lda");
        assert_eq!(arr[0]["mean_error"].as_f64().unwrap(), cells[0].mean_error);
        assert_eq!(arr[1]["mean_joint_ll"].as_f64().unwrap(), -42.0);
        assert_eq!(arr[1]["degenerate_draws"], 0);
    }

    #[test]
    fn audit_round_trip() {
        use super::super::{RepFlags, RepRecord};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.csv");
        let cell = sample_cells().remove(0);
        let reps = vec![
            RepRecord {
                rep: 0,
                error: 0.25,
                joint_ll: -10.0,
                marginal_ll: -9.5,
                flags: RepFlags::default(),
            },
            RepRecord {
                rep: 1,
                error: 0.5,
                joint_ll: -12.0,
                marginal_ll: -11.5,
                flags: RepFlags {
                    variance_clamped: true,
                    fallback: true,
                    labeled_redraws: 2,
                    replacement_salt: 1,
                    ..RepFlags::default()
                },
            },
        ];
        write_audit_csv(&[CellResult { cell: cell.clone(), reps: reps.clone() }], &path).unwrap();
        let rows = read_audit_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].dataset, "haberman");
        assert_eq!(rows[0].rep, 0);
        assert_eq!(rows[1].error, 0.5);
        assert!(rows[1].variance_clamped && rows[1].fallback);
        assert_eq!(rows[1].labeled_redraws, 2);
        assert_eq!(rows[1].replacement_salt, 1);
        assert_eq!(audit_mean(&rows, |r| r.error), 0.375);
    }

    #[test]
    fn json_escapes_control_and_quote_characters() {
        assert_eq!(json_string("plain"), "\"plain\"");
        assert_eq!(json_string("a\"b\\c"), "\"a\\\"b\\\\c\"");
        assert_eq!(json_string("x\ny"), "\"x\\u000ay\"");
    }
}
