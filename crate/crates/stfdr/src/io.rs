//! P-value input files and CSV projections of reports.
//!
//! Two input layouts are accepted:
//!
//! * plain text, one decimal p-value per line; blank lines and lines
//!   starting with `#` are skipped;
//! * single-column CSV whose header is `p`.

use std::path::Path;

use sha2::{Digest, Sha256};
use stfdr_core::{PValueSample, StepTrace};

use crate::error::{Error, Result};
use crate::simulate::ReplicateRecord;

/// Reads and validates a p-value file. Errors carry 1-based line numbers.
pub fn read_pvalues(path: &Path) -> Result<PValueSample> {
    let bytes = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    parse_pvalues(&text)
}

/// SHA-256 of a file, hex encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn is_skipped(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

pub fn parse_pvalues(text: &str) -> Result<PValueSample> {
    let header = text.lines().find(|l| !is_skipped(l)).map(str::trim);
    let (values, lines) = if header == Some("p") {
        parse_csv(text)?
    } else {
        parse_plain(text)?
    };
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    PValueSample::new(values).map_err(|e| match e {
        stfdr_core::Error::OutOfRange { index, value } => Error::Parse {
            line: lines[index],
            message: format!("p-value {value} is outside [0, 1]"),
        },
        other => other.into(),
    })
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {:?} as a p-value", field.trim()),
    })
}

fn parse_plain(text: &str) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if is_skipped(line) {
            continue;
        }
        values.push(parse_number(line, k + 1)?);
        lines.push(k + 1);
    }
    Ok((values, lines))
}

fn parse_csv(text: &str) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected one column, found {}", record.len()),
            });
        }
        values.push(parse_number(&record[0], line)?);
        lines.push(line);
    }
    Ok((values, lines))
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `index,p_value,rejected` for every hypothesis.
pub fn decisions_csv(sample: &PValueSample, rejected: &[usize]) -> Result<String> {
    let mut flags = vec![false; sample.m()];
    for &i in rejected {
        flags[i] = true;
    }
    csv_string(|w| {
        w.write_record(["index", "p_value", "rejected"])?;
        for (i, (&p, &r)) in sample.values().iter().zip(&flags).enumerate() {
            w.write_record([i.to_string(), p.to_string(), r.to_string()])?;
        }
        Ok(())
    })
}

/// `t,value` rows of a trace.
pub fn trace_csv(trace: &StepTrace) -> Result<String> {
    csv_string(|w| {
        w.write_record(["t", "value"])?;
        for (t, v) in trace.breakpoints.iter().zip(&trace.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        Ok(())
    })
}

/// `replicate,threshold,R,V,fdr_estimate` per Monte Carlo replicate.
pub fn replicates_csv(records: &[ReplicateRecord]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["replicate", "threshold", "R", "V", "fdr_estimate"])?;
        for r in records {
            w.write_record([
                r.replicate.to_string(),
                r.threshold.to_string(),
                r.rejections.to_string(),
                r.false_rejections.to_string(),
                r.fdr_estimate.to_string(),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_text_with_comments() {
        let s = parse_pvalues("# header\n0.01\n\n0.02\n  0.02 \n#x\n0.9\n").unwrap();
        assert_eq!(s.values(), &[0.01, 0.02, 0.02, 0.9]);
    }

    #[test]
    fn single_column_csv() {
        let s = parse_pvalues("p\n0.5\n1\n0\n").unwrap();
        assert_eq!(s.values(), &[0.5, 1.0, 0.0]);
        let s = parse_pvalues("# comment\np\n0.25\n").unwrap();
        assert_eq!(s.values(), &[0.25]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse_pvalues("0.1\nabc\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_pvalues("# c\n0.1\n1.5\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_pvalues("p\n0.1\n0.2,0.3\n") {
            Err(Error::Csv(_)) | Err(Error::Parse { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse_pvalues(""), Err(Error::EmptyInput)));
        assert!(matches!(
            parse_pvalues("# only\n\n"),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(parse_pvalues("p\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn decisions_projection() {
        let s = PValueSample::from_slice(&[0.01, 0.9]).unwrap();
        let csv = decisions_csv(&s, &[0]).unwrap();
        assert_eq!(csv, "index,p_value,rejected\n0,0.01,true\n1,0.9,false\n");
    }
}
