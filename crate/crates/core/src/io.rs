//! File formats: frame CSV and raw binary, mask text, trace and sweep CSVs,
//! and JSON helpers.
//!
//! Frames serialize either as decimal text (one sample per line, 17
//! significant digits) or as raw little-endian f64 preceded by an 8-byte
//! little-endian length header. Masks use a two-line text format: `L m`
//! followed by the `m` sampled indices in ascending order.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{Aggregate, MinRateResult, TrialRow};
use crate::frames::Frame;
use crate::recovery::RecoveryTrace;
use crate::sampling::Mask;

fn parse_err(what: &str, reason: impl std::fmt::Display) -> Error {
    Error::Parse {
        what: what.to_string(),
        reason: reason.to_string(),
    }
}

// ── Frames ──────────────────────────────────────────────────────────────

pub fn write_frame_csv<W: Write>(writer: W, frame: &Frame) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for x in frame.samples() {
        writeln!(w, "{x:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frame_csv<R: Read>(reader: R) -> Result<Frame> {
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|e| parse_err("frame csv", format!("line {}: {e}", i + 1)))?;
        samples.push(value);
    }
    Frame::new(samples)
}

pub fn write_frame_f64<W: Write>(writer: W, frame: &Frame) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(&(frame.len() as u64).to_le_bytes())?;
    for x in frame.samples() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frame_f64<R: Read>(mut reader: R) -> Result<Frame> {
    let mut header = [0u8; 8];
    reader.read_exact(&mut header)?;
    let len = u64::from_le_bytes(header) as usize;
    let mut bytes = vec![0u8; len * 8];
    reader.read_exact(&mut bytes)?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(parse_err("frame binary", "trailing bytes after payload"));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Frame::new(samples)
}

// ── Masks ───────────────────────────────────────────────────────────────

pub fn write_mask_text<W: Write>(writer: W, mask: &Mask) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", mask.len(), mask.ones())?;
    let indices: Vec<String> = mask.indices().map(|n| n.to_string()).collect();
    writeln!(w, "{}", indices.join(" "))?;
    w.flush()?;
    Ok(())
}

pub fn read_mask_text<R: Read>(reader: R) -> Result<Mask> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("mask", "missing header line"))??;
    let mut parts = header.split_whitespace();
    let l: usize = parts
        .next()
        .ok_or_else(|| parse_err("mask", "header missing L"))?
        .parse()
        .map_err(|e| parse_err("mask", format!("bad L: {e}")))?;
    let m: usize = parts
        .next()
        .ok_or_else(|| parse_err("mask", "header missing m"))?
        .parse()
        .map_err(|e| parse_err("mask", format!("bad m: {e}")))?;
    let body = lines.next().transpose()?.unwrap_or_default();
    let mut indicator = vec![false; l];
    let mut count = 0usize;
    for token in body.split_whitespace() {
        let n: usize = token
            .parse()
            .map_err(|e| parse_err("mask", format!("bad index `{token}`: {e}")))?;
        if n >= l {
            return Err(parse_err("mask", format!("index {n} out of range for L={l}")));
        }
        if indicator[n] {
            return Err(parse_err("mask", format!("duplicate index {n}")));
        }
        indicator[n] = true;
        count += 1;
    }
    if count != m {
        return Err(parse_err(
            "mask",
            format!("header claims {m} indices, found {count}"),
        ));
    }
    Ok(Mask::from_indicator(indicator))
}

// ── CSV reports ─────────────────────────────────────────────────────────

pub fn write_trace_csv<W: Write>(writer: W, trace: &RecoveryTrace) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "iter,threshold,residual_power,support_size,snr_db")?;
    for rec in &trace.records {
        let snr = rec.snr_db.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            rec.iter, rec.threshold, rec.residual_power, rec.support_size, snr
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[TrialRow]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "landau_fraction,rate,trial,seed,snr_db,iterations_used,perfect")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.landau_fraction, r.rate, r.trial, r.seed, r.snr_db, r.iterations_used, r.perfect
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(writer: W, aggregates: &[Aggregate]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "landau_fraction,rate,success_rate,mean_snr_db")?;
    for a in aggregates {
        writeln!(
            w,
            "{},{},{},{}",
            a.landau_fraction, a.rate, a.success_rate, a.mean_snr_db
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_minrate_csv<W: Write>(writer: W, results: &[MinRateResult]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "landau_fraction,min_rate,ratio")?;
    for r in results {
        writeln!(w, "{},{},{}", r.landau_fraction, r.min_rate, r.ratio)?;
    }
    w.flush()?;
    Ok(())
}

/// One evaluation as a CSV row: `snr_db,perfect,precision,recall,residual_power`.
pub fn eval_report_csv(report: &crate::metrics::EvalReport) -> String {
    format!(
        "{},{},{},{},{}",
        report.snr_db,
        report.perfect,
        report.support_precision,
        report.support_recall,
        report.residual_power
    )
}

// ── JSON and path helpers ───────────────────────────────────────────────

pub fn write_json<T: Serialize, W: Write>(writer: W, value: &T) -> Result<()> {
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned, R: Read>(reader: R) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(reader))?)
}

pub fn save_frame(path: &Path, frame: &Frame) -> Result<()> {
    let file = std::fs::File::create(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        write_frame_csv(file, frame)
    } else {
        write_frame_f64(file, frame)
    }
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        read_frame_csv(file)
    } else {
        read_frame_f64(file)
    }
}

pub fn save_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_mask_text(std::fs::File::create(path)?, mask)
}

pub fn load_mask(path: &Path) -> Result<Mask> {
    read_mask_text(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::TraceRecord;
    use crate::sampling::gen_mask;
    use crate::siggen::{gen_multiband, random_band_plan};
    use proptest::prelude::*;

    fn sample_frame(seed: u64) -> Frame {
        let plan = random_band_plan(256, 0.1, 2, seed).unwrap();
        gen_multiband(256, &plan, seed).unwrap().0
    }

    #[test]
    fn frame_binary_round_trip_is_exact() {
        let frame = sample_frame(1);
        let mut buf = Vec::new();
        write_frame_f64(&mut buf, &frame).unwrap();
        assert_eq!(buf.len(), 8 + 8 * frame.len());
        let back = read_frame_f64(buf.as_slice()).unwrap();
        assert_eq!(frame, back);
    }

    #[test]
    fn frame_csv_round_trip_is_exact() {
        // 17 significant digits round-trip f64 exactly.
        let frame = sample_frame(2);
        let mut buf = Vec::new();
        write_frame_csv(&mut buf, &frame).unwrap();
        let back = read_frame_csv(buf.as_slice()).unwrap();
        assert_eq!(frame, back);
    }

    #[test]
    fn frame_binary_rejects_truncation_and_trailing() {
        let frame = sample_frame(3);
        let mut buf = Vec::new();
        write_frame_f64(&mut buf, &frame).unwrap();
        assert!(read_frame_f64(&buf[..buf.len() - 4]).is_err());
        buf.push(0);
        assert!(read_frame_f64(buf.as_slice()).is_err());
    }

    #[test]
    fn mask_text_round_trip() {
        let mask = gen_mask(64, 17, 5).unwrap();
        let mut buf = Vec::new();
        write_mask_text(&mut buf, &mask).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("64 17\n"));
        let back = read_mask_text(buf.as_slice()).unwrap();
        assert_eq!(mask, back);

        let empty = gen_mask(8, 0, 0).unwrap();
        let mut buf = Vec::new();
        write_mask_text(&mut buf, &empty).unwrap();
        assert_eq!(read_mask_text(buf.as_slice()).unwrap(), empty);
    }

    #[test]
    fn mask_text_rejects_corruption() {
        assert!(read_mask_text("8\n1 2\n".as_bytes()).is_err());
        assert!(read_mask_text("8 2\n1 9\n".as_bytes()).is_err());
        assert!(read_mask_text("8 2\n1 1\n".as_bytes()).is_err());
        assert!(read_mask_text("8 3\n1 2\n".as_bytes()).is_err());
    }

    #[test]
    fn trace_csv_header_and_optional_snr() {
        let trace = RecoveryTrace {
            records: vec![
                TraceRecord {
                    iter: 1,
                    threshold: 2.5,
                    residual_power: 0.5,
                    support_size: 4,
                    snr_db: None,
                },
                TraceRecord {
                    iter: 2,
                    threshold: 1.25,
                    residual_power: 0.25,
                    support_size: 6,
                    snr_db: Some(42.0),
                },
            ],
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,threshold,residual_power,support_size,snr_db");
        assert_eq!(lines[1], "1,2.5,0.5,4,");
        assert_eq!(lines[2], "2,1.25,0.25,6,42");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn frame_formats_round_trip(seed in 0u64..1000) {
            let frame = sample_frame(seed);
            let mut bin = Vec::new();
            write_frame_f64(&mut bin, &frame).unwrap();
            prop_assert_eq!(&read_frame_f64(bin.as_slice()).unwrap(), &frame);
            let mut csv = Vec::new();
            write_frame_csv(&mut csv, &frame).unwrap();
            prop_assert_eq!(&read_frame_csv(csv.as_slice()).unwrap(), &frame);
        }
    }
}
