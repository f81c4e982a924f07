use std::path::Path;

use super::eval::{EvalReport, Protocol};
use crate::features::FeatureKind;
use crate::ingest::InputDuration;
use crate::{Error, Result};

pub const PROTOCOLS: [Protocol; 2] = [Protocol::Within, Protocol::Cross];

/// Accuracy table: rows are the nine feature settings, columns are
/// protocol × duration. Missing cells are written empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsGrid {
    cells: [[Option<f64>; 8]; 9],
}

fn column(protocol: Protocol, duration: InputDuration) -> Option<usize> {
    let p = PROTOCOLS.iter().position(|&x| x == protocol)?;
    let d = InputDuration::GRID.iter().position(|&x| x == duration)?;
    Some(p * InputDuration::GRID.len() + d)
}

impl ResultsGrid {
    pub fn set(&mut self, kind: FeatureKind, protocol: Protocol, duration: InputDuration, accuracy: f64) -> Result<()> {
        let row = FeatureKind::GRID.iter().position(|&k| k == kind).expect("grid kind");
        let col = column(protocol, duration)
            .ok_or_else(|| Error::InvalidParam(format!("duration {} is not a grid column", duration.label())))?;
        self.cells[row][col] = Some(accuracy);
        Ok(())
    }

    pub fn insert(&mut self, report: &EvalReport) -> Result<()> {
        let s = &report.setting;
        self.set(s.feature, s.protocol, s.duration, report.accuracy)
    }

    pub fn get(&self, kind: FeatureKind, protocol: Protocol, duration: InputDuration) -> Option<f64> {
        let row = FeatureKind::GRID.iter().position(|&k| k == kind)?;
        self.cells[row][column(protocol, duration)?]
    }

    pub fn header() -> Vec<String> {
        let mut h = vec!["feature".to_string()];
        for p in PROTOCOLS {
            let p = match p {
                Protocol::Within => "within",
                Protocol::Cross => "cross",
            };
            for d in InputDuration::GRID {
                h.push(format!("{p}_{}", d.label()));
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut s = Self::header().join(",");
        s.push('\n');
        for (kind, row) in FeatureKind::GRID.iter().zip(&self.cells) {
            s.push_str(&kind.id());
            for c in row {
                s.push(',');
                if let Some(v) = c {
                    s.push_str(&format!("{v:.2}"));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_nine_by_eight() {
        let mut g = ResultsGrid::default();
        g.set(FeatureKind::Mel128, Protocol::Cross, InputDuration::Seconds(5.0), 41.5).unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 10);
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
        assert_eq!(lines[0], "feature,within_full,within_20s,within_10s,within_5s,cross_full,cross_20s,cross_10s,cross_5s");
        assert_eq!(lines[8], "mel128,,,,,,,,41.50");
        assert!(g.set(FeatureKind::Mel128, Protocol::Cross, InputDuration::Seconds(7.0), 1.0).is_err());
    }
}
