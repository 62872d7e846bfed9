//! Trace and calibration CSV files.
//!
//! Trace: a `# unit=counts` or `# unit=ms2` comment, header `t_ms,ax,ay,az`,
//! one sample per row. Calibration: header `axis,offset,gain`, rows x, y, z.

use std::fmt::Write as _;

use super::{Calibration, Sample, Trace, DEFAULT_SAMPLE_RATE_HZ};
use crate::format::{check_header, comment_value, csv_reader, parse_f64, FormatError};

const TRACE_HEADER: [&str; 4] = ["t_ms", "ax", "ay", "az"];
const CALIBRATION_HEADER: [&str; 3] = ["axis", "offset", "gain"];

/// Parses a trace file. The sample rate is inferred from the median interval.
pub fn read_trace(text: &str) -> Result<Trace, FormatError> {
    let calibrated = match comment_value(text, "unit") {
        Some("counts") => false,
        Some("ms2") => true,
        Some(other) => return Err(FormatError::Invalid(format!("unknown unit `{other}`"))),
        None => return Err(FormatError::Invalid("missing `# unit=counts|ms2` line".into())),
    };
    let mut reader = csv_reader(text);
    check_header(&mut reader, &TRACE_HEADER)?;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(FormatError::parse(line, "expected 4 fields"));
        }
        samples.push(Sample::new(
            parse_f64(&record[0], line, "t_ms")?,
            parse_f64(&record[1], line, "ax")?,
            parse_f64(&record[2], line, "ay")?,
            parse_f64(&record[3], line, "az")?,
        ));
    }
    let rate = infer_rate(&samples);
    Trace::new(samples, rate, calibrated).map_err(|e| FormatError::Invalid(e.to_string()))
}

fn infer_rate(samples: &[Sample]) -> f64 {
    let mut deltas: Vec<f64> = samples.windows(2).map(|w| w[1].t_ms - w[0].t_ms).collect();
    if deltas.is_empty() {
        return DEFAULT_SAMPLE_RATE_HZ;
    }
    deltas.sort_by(f64::total_cmp);
    let median = deltas[deltas.len() / 2];
    if median > 0.0 {
        1000.0 / median
    } else {
        DEFAULT_SAMPLE_RATE_HZ
    }
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    let unit = if trace.is_calibrated() { "ms2" } else { "counts" };
    writeln!(out, "# unit={unit}").unwrap();
    writeln!(out, "{}", TRACE_HEADER.join(",")).unwrap();
    for s in trace.samples() {
        writeln!(out, "{},{},{},{}", s.t_ms, s.ax, s.ay, s.az).unwrap();
    }
    out
}

pub fn read_calibration(text: &str) -> Result<Calibration, FormatError> {
    let mut reader = csv_reader(text);
    check_header(&mut reader, &CALIBRATION_HEADER)?;
    let mut offset = [f64::NAN; 3];
    let mut gain = [f64::NAN; 3];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let axis = match &record[0] {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            other => return Err(FormatError::parse(line, format!("unknown axis `{other}`"))),
        };
        offset[axis] = parse_f64(&record[1], line, "offset")?;
        gain[axis] = parse_f64(&record[2], line, "gain")?;
    }
    if offset.iter().chain(&gain).any(|v| v.is_nan()) {
        return Err(FormatError::Invalid("calibration needs rows for x, y and z".into()));
    }
    Calibration::new(offset, gain).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn write_calibration(cal: &Calibration) -> String {
    let mut out = String::from("axis,offset,gain\n");
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        writeln!(out, "{name},{},{}", cal.offset[axis], cal.gain[axis]).unwrap();
    }
    out
}
