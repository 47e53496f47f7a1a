//! Trace CSV persistence.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::IterationRecord;

pub const TRACE_HEADER: &str = "r,alpha,beta,gamma,f,F_beta,stationarity_sq,feasibility,slackness,lambda_norm";

pub fn write_trace_to<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER.split(','))?;
    for rec in trace {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trace_to(std::io::BufWriter::new(file), trace)
}

pub fn read_trace_from<R: Read>(input: R, path: &Path) -> Result<Vec<IterationRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRACE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected trace header {:?}", header.join(",")),
        });
    }
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let file = std::fs::File::open(path)?;
    read_trace_from(std::io::BufReader::new(file), path)
}
