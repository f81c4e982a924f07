//! Binary feature cache: a sequence of records, each
//! `kind tag (u8) | length (u32 LE) | length × f64 LE`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

pub fn write_feature_file(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for r in records {
        w.write_all(&[r.kind.tag()]).map_err(io)?;
        w.write_all(&(r.values.len() as u32).to_le_bytes()).map_err(io)?;
        for v in &r.values {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut pos = 0;
    let truncated = || Error::Cache(format!("{}: truncated record", path.display()));
    while pos < bytes.len() {
        let tag = bytes[pos];
        let kind = FeatureKind::from_tag(tag).ok_or_else(|| Error::Cache(format!("{}: unknown kind tag {tag}", path.display())))?;
        let len_bytes: [u8; 4] = bytes.get(pos + 1..pos + 5).ok_or_else(truncated)?.try_into().unwrap();
        let len = u32::from_le_bytes(len_bytes) as usize;
        pos += 5;
        let body = bytes.get(pos..pos + 8 * len).ok_or_else(truncated)?;
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        pos += 8 * len;
        out.push(FeatureRecord { kind, values });
    }
    Ok(out)
}

/// Long-format CSV `segment,kind,index,value` for inspection. Records are
/// assigned to segments in order, a new segment starting whenever a kind
/// repeats.
pub fn write_feature_csv(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["segment", "kind", "index", "value"])?;
    let mut segment = 0usize;
    let mut seen = std::collections::HashSet::new();
    for r in records {
        if !seen.insert(r.kind) {
            segment += 1;
            seen.clear();
            seen.insert(r.kind);
        }
        for (i, v) in r.values.iter().enumerate() {
            w.write_record([segment.to_string(), r.kind.id(), i.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::StabilityMethod;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(vals in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 0..40), 1..6)) {
            let recs: Vec<FeatureRecord> = vals.into_iter().enumerate().map(|(i, values)| FeatureRecord {
                kind: FeatureKind::GRID[i % 9],
                values,
            }).collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.bin");
            write_feature_file(&p, &recs).unwrap();
            prop_assert_eq!(read_feature_file(&p).unwrap(), recs);
        }
    }

    #[test]
    fn layout_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let rec = FeatureRecord {
            kind: FeatureKind::pitch(StabilityMethod::Masking, true),
            values: vec![1.0, -0.5],
        };
        write_feature_file(&p, &[rec]).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let mut expected = vec![5u8, 2, 0, 0, 0];
        expected.extend(1.0f64.to_le_bytes());
        expected.extend((-0.5f64).to_le_bytes());
        assert_eq!(bytes, expected);
        std::fs::write(&p, &bytes[..9]).unwrap();
        assert!(matches!(read_feature_file(&p), Err(Error::Cache(_))));
    }
}
