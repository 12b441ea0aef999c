//! Scan CSV: `# key = value` config echo, a fixed header, then one row per
//! scan position. Floats carry 9 significant digits; lines end in LF.

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::scan::ScanRow;

pub const HEADER: [&str; 6] = [
    "delta_l_mm",
    "tau_ps",
    "p_model",
    "expected_signal",
    "expected_accidentals",
    "counts",
];

fn float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Render `rows` under a header echoing `cfg`.
pub fn write_scan_csv(cfg: &ExperimentConfig, rows: &[ScanRow]) -> String {
    let mut out = String::new();
    for (k, v) in cfg.entries() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| e.to_string();
    let body = (|| -> std::result::Result<Vec<u8>, String> {
        w.write_record(HEADER).map_err(io)?;
        for r in rows {
            w.write_record([
                float(r.delta_l_mm),
                float(r.tau_ps),
                float(r.p_model),
                float(r.expected_signal),
                float(r.expected_accidentals),
                r.counts.to_string(),
            ])
            .map_err(io)?;
        }
        w.into_inner().map_err(|e| e.to_string())
    })()
    .expect("writing to memory cannot fail");
    out.push_str(std::str::from_utf8(&body).expect("ascii"));
    out
}

/// Parse a scan CSV. Errors name the offending line of `path`.
pub fn read_scan_csv(path: &Path, text: &str) -> Result<(ExperimentConfig, Vec<ScanRow>)> {
    let schema = |line: u64, message: String| SimError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut cfg = ExperimentConfig::default();
    let mut offset = 0;
    let mut body = text;
    for (index, line) in text.lines().enumerate() {
        let Some(comment) = line.strip_prefix('#') else {
            break;
        };
        offset = index as u64 + 1;
        body = &body[body.find('\n').map_or(body.len(), |i| i + 1)..];
        let comment = comment.trim();
        if comment.is_empty() {
            continue;
        }
        let (k, v) = comment
            .split_once('=')
            .ok_or_else(|| schema(index as u64 + 1, "expected `# key = value`".into()))?;
        cfg.set(k.trim(), v.trim())
            .map_err(|e| schema(index as u64 + 1, e.to_string()))?;
    }

    // Line numbers below are relative to `body`.
    let schema = |line: u64, message: String| schema(line + offset, message);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(schema(line_of(&e), e.to_string())),
        None => return Err(schema(1, "missing header row".into())),
    };
    let header_line = header.position().map_or(0, |p| p.line());
    if header.iter().ne(HEADER) {
        return Err(schema(
            header_line,
            format!("expected header `{}`", HEADER.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| schema(line_of(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(schema(
                line,
                format!("expected {} fields, found {}", HEADER.len(), record.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            match record[i].trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(schema(line, format!("{}: `{}` is not a finite number", HEADER[i], &record[i]))),
            }
        };
        let counts = record[5]
            .trim()
            .parse::<u64>()
            .map_err(|_| schema(line, format!("counts: `{}` is not a count", &record[5])))?;
        rows.push(ScanRow {
            delta_l_mm: num(0)?,
            tau_ps: num(1)?,
            p_model: num(2)?,
            expected_signal: num(3)?,
            expected_accidentals: num(4)?,
            counts,
        });
    }
    Ok((cfg, rows))
}

fn line_of(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}
