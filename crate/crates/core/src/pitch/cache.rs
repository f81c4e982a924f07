//! Contour cache CSV: `frame,t_s,f0_hz,voiced,confidence`, optionally followed
//! by `stable,cents_calibrated`. `f0_hz` (and `cents_calibrated`) are empty on
//! unvoiced frames.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

use super::{PitchContour, HOP};
use crate::ingest::ANALYSIS_RATE;

/// Extra per-frame columns written alongside a contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourCsvRow {
    pub stable: bool,
    pub cents_calibrated: Option<f64>,
}

pub fn write_contour_csv(path: impl AsRef<Path>, contour: &PitchContour, extra: Option<&[ContourCsvRow]>) -> Result<()> {
    let path = path.as_ref();
    if let Some(x) = extra {
        if x.len() != contour.len() {
            return Err(Error::InvalidParam("extra columns must match the contour length".into()));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["frame", "t_s", "f0_hz", "voiced", "confidence"];
    if extra.is_some() {
        header.extend(["stable", "cents_calibrated"]);
    }
    w.write_record(&header)?;
    for i in 0..contour.len() {
        let mut rec = vec![
            i.to_string(),
            contour.time_of(i).to_string(),
            if contour.voiced[i] { contour.f0_hz[i].to_string() } else { String::new() },
            (contour.voiced[i] as u8).to_string(),
            contour.confidence[i].to_string(),
        ];
        if let Some(x) = extra {
            rec.push((x[i].stable as u8).to_string());
            rec.push(x[i].cents_calibrated.map(|c| c.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, row: usize) -> Result<&'a str> {
    rec.get(i)
        .ok_or_else(|| Error::Cache(format!("contour row {row}: missing column {i}")))
}

fn num(s: &str, row: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Cache(format!("contour row {row}: bad number {s:?}")))
}

/// Read a contour CSV written by [`write_contour_csv`]. Extra columns, when
/// present, are returned alongside.
pub fn read_contour_csv(path: impl AsRef<Path>) -> Result<(PitchContour, Option<Vec<ContourCsvRow>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let has_extra = r.headers()?.len() >= 7;
    let mut c = PitchContour {
        f0_hz: Vec::new(),
        voiced: Vec::new(),
        confidence: Vec::new(),
        hop_s: HOP as f64 / ANALYSIS_RATE as f64,
        t0_s: 0.0,
    };
    let mut extra = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if row == 0 {
            c.t0_s = num(field(&rec, 1, row)?, row)?;
        }
        let voiced = field(&rec, 3, row)? == "1";
        c.voiced.push(voiced);
        c.f0_hz.push(if voiced { num(field(&rec, 2, row)?, row)? } else { 0.0 });
        c.confidence.push(num(field(&rec, 4, row)?, row)?);
        if has_extra {
            let cal = field(&rec, 6, row)?;
            extra.push(ContourCsvRow {
                stable: field(&rec, 5, row)? == "1",
                cents_calibrated: if cal.is_empty() { None } else { Some(num(cal, row)?) },
            });
        }
    }
    Ok((c, has_extra.then_some(extra)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let c = PitchContour {
            f0_hz: vec![0.0, 164.81234567, 170.0],
            voiced: vec![false, true, true],
            confidence: vec![0.01, 0.97, 0.5],
            hop_s: HOP as f64 / 22_050.0,
            t0_s: 1024.0 / 22_050.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_contour_csv(&p, &c, None).unwrap();
        let (back, extra) = read_contour_csv(&p).unwrap();
        assert!(extra.is_none());
        assert_eq!(back, c);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("frame,t_s,f0_hz,voiced,confidence\n0,"));
        assert!(text.lines().nth(1).unwrap().contains(",,0,"));

        let x = vec![
            ContourCsvRow { stable: false, cents_calibrated: None },
            ContourCsvRow { stable: true, cents_calibrated: Some(1200.5) },
            ContourCsvRow { stable: false, cents_calibrated: Some(1250.0) },
        ];
        write_contour_csv(&p, &c, Some(&x)).unwrap();
        let (back, extra) = read_contour_csv(&p).unwrap();
        assert_eq!(back, c);
        assert_eq!(extra.unwrap(), x);
    }
}
