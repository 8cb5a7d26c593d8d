//! CSV formats: rover fix logs, side-distance series and key/value reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use hmas_core::analysis::{DistanceSeries, Report, Side};
use hmas_core::{FixQuality, GeodeticCoord, RtkFix};
use serde::{Deserialize, Serialize};

pub const FIX_HEADER: [&str; 6] = ["stamp_s", "rover_id", "lat_deg", "lon_deg", "alt_m", "quality"];
pub const DISTANCE_HEADER: &str = "stamp_s,d_top,d_right,d_bottom,d_left";

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct FixRow {
    stamp_s: f64,
    rover_id: String,
    lat_deg: f64,
    lon_deg: f64,
    alt_m: f64,
    quality: String,
}

/// Accepts `single`/`float`/`fixed` and the numeric solution codes used by
/// RTKLIB-style logs (1 fixed, 2 float, 5 single).
pub fn parse_quality(s: &str) -> Option<FixQuality> {
    match s.trim() {
        "1" => Some(FixQuality::Fixed),
        "2" => Some(FixQuality::Float),
        "5" => Some(FixQuality::Single),
        other => other.to_ascii_lowercase().parse().ok(),
    }
}

pub fn write_fixes<W: Write>(out: W, fixes: &[RtkFix]) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(FIX_HEADER)?;
    for f in fixes {
        w.serialize(FixRow {
            stamp_s: f.stamp,
            rover_id: f.rover_id.clone(),
            lat_deg: f.position.lat,
            lon_deg: f.position.lon,
            alt_m: f.position.alt,
            quality: f.quality.as_str().to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a fix log, grouping fixes per rover in file order.
pub fn read_fixes<R: Read>(input: R) -> Result<BTreeMap<String, Vec<RtkFix>>, CsvError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let mut out: BTreeMap<String, Vec<RtkFix>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, csv::Position::line);
        let row: FixRow = rec.deserialize(Some(&headers))?;
        let bad = |reason: String| CsvError::Row { line, reason };
        let position =
            GeodeticCoord::new(row.lat_deg, row.lon_deg, row.alt_m).map_err(|e| bad(e.to_string()))?;
        let quality =
            parse_quality(&row.quality).ok_or_else(|| bad(format!("unknown quality `{}`", row.quality)))?;
        if !(row.stamp_s.is_finite() && row.stamp_s >= 0.0) {
            return Err(bad(format!("invalid stamp {}", row.stamp_s)));
        }
        out.entry(row.rover_id.clone()).or_default().push(RtkFix {
            rover_id: row.rover_id,
            position,
            quality,
            stamp: row.stamp_s,
        });
    }
    Ok(out)
}

/// One row per distinct stamp; sides without a sample at that stamp are left empty.
pub fn write_distances<W: Write>(mut out: W, d: &DistanceSeries) -> Result<(), CsvError> {
    let mut cursors = [0usize; 4];
    writeln!(out, "{DISTANCE_HEADER}")?;
    for t in d.stamps() {
        write!(out, "{t:.6}")?;
        for side in Side::ALL {
            let s = d.side(side);
            let c = &mut cursors[side as usize];
            match s.get(*c) {
                Some(&(ts, v)) if ts == t => {
                    write!(out, ",{v:.6}")?;
                    *c += 1;
                }
                _ => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(out: W, report: &Report) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in report.rows() {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}
