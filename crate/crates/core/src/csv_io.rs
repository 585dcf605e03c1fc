//! The path CSV format.
//!
//! One row per grid index with header
//! `index,time,value,left_limit,cont_increment,jump,cont_qv_increment,in_interval`.
//! Row 0 has time 0, the initial value in both value columns and zero
//! channels. Floats are written with 17 significant digits, so a write/read
//! cycle reproduces every stored bit. Lines starting with `#` are comments
//! and are skipped on reading.

use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::CsvError;
use crate::path_model::{CadlagPath, IntervalEnd, Mode};

pub const HEADER: [&str; 8] =
    ["index", "time", "value", "left_limit", "cont_increment", "jump", "cont_qv_increment", "in_interval"];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path<W: Write>(path: &CadlagPath, out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    let values = path.all_values();
    let lefts = path.all_left_limits();
    for k in 0..=path.steps() {
        let (c, j, q) = if k == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (path.cont_increments()[k - 1], path.jumps()[k - 1], path.cont_qv_increments()[k - 1])
        };
        w.write_record([
            k.to_string(),
            fmt(path.time_at(k)),
            fmt(values[k]),
            fmt(lefts[k]),
            fmt(c),
            fmt(j),
            fmt(q),
            u8::from(path.in_interval(k)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn path_to_string(path: &CadlagPath) -> String {
    let mut buf = Vec::new();
    write_path(path, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

#[derive(Debug, Deserialize)]
struct Row {
    index: usize,
    time: f64,
    value: f64,
    left_limit: f64,
    cont_increment: f64,
    jump: f64,
    cont_qv_increment: f64,
    in_interval: u8,
}

/// Reads a path back. The mode is inferred: a file without any continuous
/// increment or continuous QV is read as an exact pure-jump path.
pub fn read_path<R: Read>(input: R) -> Result<CadlagPath, CsvError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CsvError::Format(format!("expected header {}", HEADER.join(","))));
    }
    let rows: Vec<Row> = r.deserialize().collect::<Result<_, _>>()?;
    let Some(first) = rows.first() else {
        return Err(CsvError::Format("no index 0 row".into()));
    };
    if first.time != 0.0 || first.in_interval != 1 {
        return Err(CsvError::Format("row 0 must have time 0 and be in the interval".into()));
    }
    let mut end = IntervalEnd::Unbounded;
    for (k, row) in rows.iter().enumerate() {
        if row.index != k {
            return Err(CsvError::Format(format!("row {k} has index {}", row.index)));
        }
        match (row.in_interval, end) {
            (1, IntervalEnd::Unbounded) => {}
            (0, IntervalEnd::Unbounded) => end = IntervalEnd::AtIndex(k),
            (0, IntervalEnd::AtIndex(_)) => {}
            _ => return Err(CsvError::Format(format!("in_interval flag out of order at row {k}"))),
        }
    }
    let body = &rows[1..];
    let c: Vec<f64> = body.iter().map(|r| r.cont_increment).collect();
    let q: Vec<f64> = body.iter().map(|r| r.cont_qv_increment).collect();
    let mode = if c.iter().chain(&q).all(|&x| x == 0.0) { Mode::PureJumpExact } else { Mode::GridApprox };
    Ok(CadlagPath::with_values(
        first.value,
        body.iter().map(|r| r.time).collect(),
        c,
        body.iter().map(|r| r.jump).collect(),
        q,
        rows.iter().map(|r| r.value).collect(),
        rows.iter().map(|r| r.left_limit).collect(),
        end,
        mode,
    )?)
}
