//! CSV tables written by the experiments. Floats use Rust's shortest
//! round-trip formatting, so identical results give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::experiment::ExperimentSummary;
use super::manymeans::{ManyMeansRecord, ManyMeansSummary};

pub const PVALUES_FILE: &str = "pvalues.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANYMEANS_FILE: &str = "manymeans.csv";

pub const PVALUES_HEADER: [&str; 6] = ["family", "rep", "step", "method", "statistic", "pvalue"];
pub const INTERVALS_HEADER: [&str; 10] = [
    "family",
    "rep",
    "step",
    "method",
    "statistic",
    "lo",
    "hi",
    "target",
    "covered",
    "excl_zero",
];
pub const SUMMARY_HEADER: [&str; 10] = [
    "family",
    "step",
    "method",
    "statistic",
    "coverage",
    "power",
    "width",
    "ks",
    "escalations",
    "empty",
];
pub const MANYMEANS_HEADER: [&str; 5] = ["rep", "w1", "w2", "pivot", "log_pivot"];

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_pvalues<W: Write>(w: W, summary: &ExperimentSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PVALUES_HEADER)?;
    for r in &summary.records {
        out.write_record([
            r.family.to_string(),
            r.rep.to_string(),
            r.step.to_string(),
            r.method.to_string(),
            r.statistic.to_string(),
            num(r.pvalue),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_intervals<W: Write>(w: W, summary: &ExperimentSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(INTERVALS_HEADER)?;
    for r in &summary.records {
        out.write_record([
            r.family.to_string(),
            r.rep.to_string(),
            r.step.to_string(),
            r.method.to_string(),
            r.statistic.to_string(),
            num(r.lo),
            num(r.hi),
            num(r.target),
            r.covered.to_string(),
            r.excl_zero.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(w: W, summary: &ExperimentSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for c in &summary.cells {
        out.write_record([
            c.family.to_string(),
            c.step.to_string(),
            c.method.to_string(),
            c.statistic.to_string(),
            num(c.coverage),
            num(c.power),
            num(c.width),
            num(c.ks),
            c.escalations.to_string(),
            c.empty.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_manymeans<W: Write>(w: W, records: &[ManyMeansRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MANYMEANS_HEADER)?;
    for r in records {
        out.write_record([r.rep.to_string(), num(r.w1), num(r.w2), num(r.pivot), num(r.log_pivot)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_manymeans<R: Read>(r: R) -> Result<Vec<ManyMeansRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(MANYMEANS_HEADER) {
        return Err(Error::InvalidDataset(format!("unexpected many-means header {header:?}")));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::InvalidDataset(format!("bad number {:?} in column {}", &row[i], MANYMEANS_HEADER[i])))
        };
        records.push(ManyMeansRecord {
            rep: row[0]
                .parse()
                .map_err(|_| Error::InvalidDataset(format!("bad repetition index {:?}", &row[0])))?,
            w1: field(1)?,
            w2: field(2)?,
            pivot: field(3)?,
            log_pivot: field(4)?,
        });
    }
    Ok(records)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the p-value, interval and summary tables into `dir`.
pub fn write_experiment_files(dir: &Path, summary: &ExperimentSummary) -> Result<Vec<PathBuf>> {
    write_pvalues(create(dir, PVALUES_FILE)?, summary)?;
    write_intervals(create(dir, INTERVALS_FILE)?, summary)?;
    write_summary(create(dir, SUMMARY_FILE)?, summary)?;
    Ok([PVALUES_FILE, INTERVALS_FILE, SUMMARY_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect())
}

pub fn write_manymeans_files(dir: &Path, summary: &ManyMeansSummary) -> Result<Vec<PathBuf>> {
    write_manymeans(create(dir, MANYMEANS_FILE)?, &summary.records)?;
    Ok(vec![dir.join(MANYMEANS_FILE)])
}
