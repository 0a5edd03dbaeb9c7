//! CSV rows and human-readable summaries of sweep results.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SimConfig;
use super::sweep::PointResult;

/// One CSV row; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub ebn0_db: f64,
    pub detector: String,
    pub chip_mapping: String,
    pub nt: usize,
    pub nr: usize,
    pub users: usize,
    pub lc: usize,
    pub modulation: String,
    pub coding: String,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub master_seed: u64,
}

pub const CSV_HEADER: &str = "ebn0_db,detector,chip_mapping,nt,nr,users,lc,modulation,coding,bits,bit_errors,ber,frames,frame_errors,fer,master_seed";

pub fn rows(cfg: &SimConfig, points: &[PointResult]) -> Vec<ResultRow> {
    points
        .iter()
        .map(|p| ResultRow {
            ebn0_db: p.ebn0_db,
            detector: cfg.detector.to_string(),
            chip_mapping: cfg.chip_mapping.to_string(),
            nt: cfg.nt,
            nr: cfg.nr,
            users: cfg.users,
            lc: cfg.lc,
            modulation: cfg.modulation.to_string(),
            coding: cfg.coding.to_string(),
            bits: p.stats.bits,
            bit_errors: p.stats.bit_errors,
            ber: p.stats.ber(),
            frames: p.stats.frames,
            frame_errors: p.stats.frame_errors,
            fer: p.stats.fer(),
            master_seed: cfg.master_seed,
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Table of BER/FER per point followed by per-user frame error rates.
pub fn summary(cfg: &SimConfig, points: &[PointResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}x{} {} Lc={} users={} {} {} channel={}",
        cfg.detector,
        cfg.nt,
        cfg.nr,
        cfg.chip_mapping,
        cfg.lc,
        cfg.users,
        cfg.modulation,
        cfg.coding,
        cfg.channel_model
    );
    let _ = writeln!(
        out,
        "{:>8} {:>12} {:>10} {:>12} {:>8} {:>10}",
        "Eb/N0", "bits", "errors", "BER", "frames", "FER"
    );
    for p in points {
        let s = &p.stats;
        let _ = writeln!(
            out,
            "{:>8.2} {:>12} {:>10} {:>12.4e} {:>8} {:>10.4e}",
            p.ebn0_db,
            s.bits,
            s.bit_errors,
            s.ber(),
            s.frames,
            s.fer()
        );
    }
    for p in points {
        let fers: Vec<String> = (0..p.stats.user_frame_errors.len())
            .map(|u| format!("{:.3e}", p.stats.user_fer(u)))
            .collect();
        let _ = writeln!(out, "per-user FER at {} dB: {}", p.ebn0_db, fers.join(" "));
    }
    out
}
