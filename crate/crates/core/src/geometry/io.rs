//! Point files: a `dim=d` line followed by one comma-separated point per
//! line, each coordinate written with 17 significant digits.  Lines
//! starting with `#` are skipped on reading.

use std::io::{Read, Write};

use super::PointSet;
use crate::error::{Error, Result};

pub fn write_points<W: Write>(phi: &PointSet, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record([format!("dim={}", phi.dim())])?;
    for p in phi.iter() {
        w.write_record(p.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(input: R) -> Result<PointSet> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut records = r.records();
    let head = records.next().ok_or(Error::Parse { line: 1, reason: "empty input".into() })??;
    let d: usize = head
        .get(0)
        .and_then(|h| h.strip_prefix("dim="))
        .and_then(|v| v.parse().ok())
        .ok_or(Error::Parse { line: 1, reason: "expected `dim=<d>` header".into() })?;
    let mut flat = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != d {
            return Err(Error::Parse { line, reason: format!("expected {d} coordinates, got {}", rec.len()) });
        }
        for f in rec.iter() {
            let x: f64 = f.parse().map_err(|_| Error::Parse { line, reason: format!("bad number `{f}`") })?;
            flat.push(x);
        }
    }
    PointSet::from_flat(d, flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let s = PointSet::from_flat(2, vec![0.1, 1.0 / 3.0, 0.999_999_999_999_9, 1e-300]).unwrap();
        let mut buf = Vec::new();
        write_points(&s, &mut buf).unwrap();
        assert!(buf.starts_with(b"dim=2\n"));
        assert_eq!(read_points(&buf[..]).unwrap(), s);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = read_points(&b"dim=2\n0.1,0.2\n0.3\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
