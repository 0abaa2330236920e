//! CSV export of records and plain-text operator dumps.

use std::io::Write;

use cntsim_core::sparse::SparseOperator;

use crate::error::Result;
use crate::record::{Record, SCALAR_FIELDS};

/// Reads JSON lines, skipping malformed ones. Returns the records and the skip count.
pub fn read_records_lenient(text: &str) -> (Vec<Record>, usize) {
    let mut skipped = 0;
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| match serde_json::from_str(l) {
            Ok(r) => Some(r),
            Err(_) => {
                skipped += 1;
                None
            }
        })
        .collect();
    (records, skipped)
}

/// Scalar columns with a header row, RFC 4180 quoting.
pub fn write_csv<W: Write>(records: &[Record], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(SCALAR_FIELDS)?;
    for r in records {
        w.write_record(r.scalar_row())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `row col value` per stored entry, rows then columns ascending.
pub fn write_operator<W: Write>(op: &SparseOperator, mut out: W) -> std::io::Result<()> {
    for (r, c, v) in op.triplets() {
        writeln!(out, "{r} {c} {v:?}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cntsim_core::basis::Statistics;
    use cntsim_core::sparse::symmetric_from_entries;

    #[test]
    fn csv_quotes_and_blanks() {
        let r = Record::failed(0.1, 0.01, 0.02, 8, Statistics::Charge, "bad, \"odd\" input");
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.split("\r\n");
        assert_eq!(lines.next().unwrap(), SCALAR_FIELDS.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.1,0.01,0.02,8,charge,,"), "{row}");
        assert!(row.ends_with("\"failed: bad, \"\"odd\"\" input\""), "{row}");
    }

    #[test]
    fn lenient_reader_counts_garbage() {
        let r = Record::failed(0.1, 0.01, 0.02, 8, Statistics::Charge, "x");
        let text = r.to_json_line() + "{not json}\n\n" + &r.to_json_line();
        let (recs, skipped) = read_records_lenient(&text);
        assert_eq!((recs.len(), skipped), (2, 1));
    }

    #[test]
    fn operator_dump_is_sorted_coordinates() {
        let op = symmetric_from_entries(3, &[(0, 0, 1.0), (0, 2, -0.5), (1, 1, 2.0)]).unwrap();
        let mut buf = Vec::new();
        write_operator(&op, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 0 1.0\n0 2 -0.5\n1 1 2.0\n2 0 -0.5\n");
    }
}
