//! On-disk formats: a compact little-endian binary container for each
//! dataset kind, plus CSV import/export for interoperability.
//!
//! Binary layout: 8-byte magic `AGRISK01`, a kind byte, a u16 format
//! version, then kind-specific payload. All integers little-endian, all
//! floats IEEE-754 f64 bit patterns — round trips are bit-exact.

use crate::engine::{TrialLoss, YearLossTable};
use crate::model::{
    EventOccurrence, Layer, LayerTerms, Portfolio, Program, Trial, XeltRecord, XeltTerms,
    YearEventTable,
};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"AGRISK01";
pub const FORMAT_VERSION: u16 = 1;

/// Kind byte identifying the payload of a binary file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Yet = 1,
    Xelt = 2,
    Portfolio = 3,
    Ylt = 4,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic at offset 0: expected AGRISK01")]
    BadMagic,
    #[error("unknown kind byte {kind} at offset 8")]
    BadKind { kind: u8 },
    #[error("expected kind {expected:?}, file holds kind {actual:?}")]
    WrongKind { expected: Kind, actual: Kind },
    #[error("unsupported format version {version} at offset 9")]
    BadVersion { version: u16 },
    #[error("truncated file: needed {needed} bytes at offset {offset}")]
    Truncated { offset: u64, needed: usize },
    #[error("malformed value at offset {offset}: {what}")]
    Malformed { offset: u64, what: String },
    #[error("csv line {line}: {what}")]
    Csv { line: usize, what: String },
}

/// Tracks the byte offset so decode errors can point at the failure.
struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn new(inner: R) -> Self {
        Cursor { inner, offset: 0 }
    }

    fn take(&mut self, buf: &mut [u8]) -> Result<(), IoError> {
        let at = self.offset;
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                IoError::Truncated { offset: at, needed: buf.len() }
            } else {
                IoError::Io(e)
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u8(&mut self) -> Result<u8, IoError> {
        let mut b = [0u8; 1];
        self.take(&mut b)?;
        Ok(b[0])
    }

    fn u16(&mut self) -> Result<u16, IoError> {
        let mut b = [0u8; 2];
        self.take(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        let mut b = [0u8; 4];
        self.take(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        let mut b = [0u8; 8];
        self.take(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn len(&mut self) -> Result<usize, IoError> {
        let at = self.offset;
        let n = self.u64()?;
        usize::try_from(n)
            .map_err(|_| IoError::Malformed { offset: at, what: format!("count {n} too large") })
    }
}

fn write_header<W: Write>(w: &mut W, kind: Kind) -> Result<(), IoError> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind as u8])?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(c: &mut Cursor<R>, expected: Kind) -> Result<(), IoError> {
    let mut magic = [0u8; 8];
    c.take(&mut magic)?;
    if &magic != MAGIC {
        return Err(IoError::BadMagic);
    }
    let kind = c.u8()?;
    let actual = match kind {
        1 => Kind::Yet,
        2 => Kind::Xelt,
        3 => Kind::Portfolio,
        4 => Kind::Ylt,
        _ => return Err(IoError::BadKind { kind }),
    };
    if actual != expected {
        return Err(IoError::WrongKind { expected, actual });
    }
    let version = c.u16()?;
    if version != FORMAT_VERSION {
        return Err(IoError::BadVersion { version });
    }
    Ok(())
}

// ---------------------------------------------------------------- YET

pub fn write_yet<W: Write>(w: &mut W, yet: &YearEventTable) -> Result<(), IoError> {
    write_header(w, Kind::Yet)?;
    w.write_all(&yet.catalogue_size.to_le_bytes())?;
    w.write_all(&(yet.trials.len() as u64).to_le_bytes())?;
    for trial in &yet.trials {
        w.write_all(&(trial.occurrences.len() as u64).to_le_bytes())?;
        for occ in &trial.occurrences {
            w.write_all(&occ.event_id.to_le_bytes())?;
            w.write_all(&occ.timestamp.to_bits().to_le_bytes())?;
            w.write_all(&occ.z_prog_e.to_bits().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_yet<R: Read>(r: R) -> Result<YearEventTable, IoError> {
    let mut c = Cursor::new(r);
    read_header(&mut c, Kind::Yet)?;
    let catalogue_size = c.u32()?;
    let num_trials = c.len()?;
    let mut trials = Vec::with_capacity(num_trials.min(1 << 20));
    for _ in 0..num_trials {
        let n = c.len()?;
        let mut occurrences = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            occurrences.push(EventOccurrence {
                event_id: c.u32()?,
                timestamp: c.f64()?,
                z_prog_e: c.f64()?,
            });
        }
        trials.push(Trial { occurrences });
    }
    Ok(YearEventTable { trials, catalogue_size })
}

// --------------------------------------------------------------- XELT

pub fn write_xelts<W: Write>(w: &mut W, xelts: &[Vec<XeltRecord>]) -> Result<(), IoError> {
    write_header(w, Kind::Xelt)?;
    w.write_all(&(xelts.len() as u64).to_le_bytes())?;
    for records in xelts {
        w.write_all(&(records.len() as u64).to_le_bytes())?;
        for rec in records {
            w.write_all(&rec.event_id.to_le_bytes())?;
            for v in [rec.mean_loss, rec.z_e, rec.sigma_i, rec.sigma_c, rec.max_loss] {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_xelts<R: Read>(r: R) -> Result<Vec<Vec<XeltRecord>>, IoError> {
    let mut c = Cursor::new(r);
    read_header(&mut c, Kind::Xelt)?;
    let num_xelts = c.len()?;
    let mut xelts = Vec::with_capacity(num_xelts.min(1 << 20));
    for _ in 0..num_xelts {
        let n = c.len()?;
        let mut records = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            records.push(XeltRecord {
                event_id: c.u32()?,
                mean_loss: c.f64()?,
                z_e: c.f64()?,
                sigma_i: c.f64()?,
                sigma_c: c.f64()?,
                max_loss: c.f64()?,
            });
        }
        xelts.push(records);
    }
    Ok(xelts)
}

// ---------------------------------------------------------- portfolio

pub fn write_portfolio<W: Write>(w: &mut W, pf: &Portfolio) -> Result<(), IoError> {
    write_header(w, Kind::Portfolio)?;
    w.write_all(&(pf.programs.len() as u64).to_le_bytes())?;
    for program in &pf.programs {
        w.write_all(&(program.layers.len() as u64).to_le_bytes())?;
        for layer in &program.layers {
            w.write_all(&(layer.xelt_ids.len() as u64).to_le_bytes())?;
            for (&id, terms) in layer.xelt_ids.iter().zip(&layer.xelt_terms) {
                w.write_all(&(id as u64).to_le_bytes())?;
                for v in [terms.retention, terms.limit, terms.share] {
                    w.write_all(&v.to_bits().to_le_bytes())?;
                }
            }
            let t = &layer.terms;
            for v in [t.occ_retention, t.occ_limit, t.agg_retention, t.agg_limit] {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_portfolio<R: Read>(r: R) -> Result<Portfolio, IoError> {
    let mut c = Cursor::new(r);
    read_header(&mut c, Kind::Portfolio)?;
    let num_programs = c.len()?;
    let mut programs = Vec::with_capacity(num_programs.min(1 << 20));
    for _ in 0..num_programs {
        let num_layers = c.len()?;
        let mut layers = Vec::with_capacity(num_layers.min(1 << 20));
        for _ in 0..num_layers {
            let n = c.len()?;
            let mut xelt_ids = Vec::with_capacity(n.min(1 << 20));
            let mut xelt_terms = Vec::with_capacity(n.min(1 << 20));
            for _ in 0..n {
                let at = c.offset;
                let id = c.u64()?;
                xelt_ids.push(usize::try_from(id).map_err(|_| IoError::Malformed {
                    offset: at,
                    what: format!("xelt id {id} too large"),
                })?);
                xelt_terms.push(XeltTerms {
                    retention: c.f64()?,
                    limit: c.f64()?,
                    share: c.f64()?,
                });
            }
            let terms = LayerTerms {
                occ_retention: c.f64()?,
                occ_limit: c.f64()?,
                agg_retention: c.f64()?,
                agg_limit: c.f64()?,
            };
            layers.push(Layer { xelt_ids, xelt_terms, terms });
        }
        programs.push(Program { layers });
    }
    Ok(Portfolio { programs })
}

// ---------------------------------------------------------------- YLT

pub fn write_ylt<W: Write>(w: &mut W, ylt: &YearLossTable) -> Result<(), IoError> {
    write_header(w, Kind::Ylt)?;
    w.write_all(&(ylt.losses.len() as u64).to_le_bytes())?;
    for t in &ylt.losses {
        w.write_all(&t.trial_id.to_le_bytes())?;
        w.write_all(&t.loss.to_bits().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_ylt<R: Read>(r: R) -> Result<YearLossTable, IoError> {
    let mut c = Cursor::new(r);
    read_header(&mut c, Kind::Ylt)?;
    let n = c.len()?;
    let mut losses = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        losses.push(TrialLoss { trial_id: c.u64()?, loss: c.f64()? });
    }
    Ok(YearLossTable { losses })
}

// ------------------------------------------------------ file helpers

pub fn save_yet(path: &Path, yet: &YearEventTable) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_yet(&mut w, yet)?;
    w.flush()?;
    Ok(())
}

pub fn load_yet(path: &Path) -> Result<YearEventTable, IoError> {
    read_yet(BufReader::new(std::fs::File::open(path)?))
}

pub fn save_xelts(path: &Path, xelts: &[Vec<XeltRecord>]) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_xelts(&mut w, xelts)?;
    w.flush()?;
    Ok(())
}

pub fn load_xelts(path: &Path) -> Result<Vec<Vec<XeltRecord>>, IoError> {
    read_xelts(BufReader::new(std::fs::File::open(path)?))
}

pub fn save_portfolio(path: &Path, pf: &Portfolio) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_portfolio(&mut w, pf)?;
    w.flush()?;
    Ok(())
}

pub fn load_portfolio(path: &Path) -> Result<Portfolio, IoError> {
    read_portfolio(BufReader::new(std::fs::File::open(path)?))
}

pub fn save_ylt(path: &Path, ylt: &YearLossTable) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_ylt(&mut w, ylt)?;
    w.flush()?;
    Ok(())
}

pub fn load_ylt(path: &Path) -> Result<YearLossTable, IoError> {
    read_ylt(BufReader::new(std::fs::File::open(path)?))
}

// ------------------------------------------------------------- CSV

/// Shortest decimal rendering that round-trips an f64 exactly.
fn fmt_f64(v: f64) -> String {
    // Rust's Display for f64 already emits the shortest round-trip form
    format!("{v}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64, IoError> {
    s.trim()
        .parse()
        .map_err(|_| IoError::Csv { line, what: format!("bad float {s:?}") })
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, IoError> {
    s.trim()
        .parse()
        .map_err(|_| IoError::Csv { line, what: format!("bad integer {s:?}") })
}

fn split_fields(line: &str, want: usize, line_no: usize) -> Result<Vec<&str>, IoError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != want {
        return Err(IoError::Csv {
            line: line_no,
            what: format!("expected {want} fields, got {}", fields.len()),
        });
    }
    Ok(fields)
}

/// YET as `trial_id,event_id,timestamp,z_prog_e` rows under a header.
pub fn write_yet_csv<W: Write>(w: &mut W, yet: &YearEventTable) -> Result<(), IoError> {
    writeln!(w, "trial_id,event_id,timestamp,z_prog_e")?;
    for (trial_id, trial) in yet.trials.iter().enumerate() {
        for occ in &trial.occurrences {
            writeln!(
                w,
                "{trial_id},{},{},{}",
                occ.event_id,
                fmt_f64(occ.timestamp),
                fmt_f64(occ.z_prog_e)
            )?;
        }
    }
    Ok(())
}

/// Parse the CSV form of a YET. Trial ids must be contiguous from 0;
/// the catalogue size is supplied because the CSV does not carry it.
pub fn read_yet_csv<R: Read>(r: R, catalogue_size: u32) -> Result<YearEventTable, IoError> {
    let reader = BufReader::new(r);
    let mut trials: Vec<Trial> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let f = split_fields(&line, 4, idx + 1)?;
        let trial_id: usize = parse_int(f[0], idx + 1)?;
        if trial_id > trials.len() {
            return Err(IoError::Csv {
                line: idx + 1,
                what: format!("trial id {trial_id} out of order"),
            });
        }
        if trial_id == trials.len() {
            trials.push(Trial { occurrences: Vec::new() });
        }
        trials[trial_id].occurrences.push(EventOccurrence {
            event_id: parse_int(f[1], idx + 1)?,
            timestamp: parse_f64(f[2], idx + 1)?,
            z_prog_e: parse_f64(f[3], idx + 1)?,
        });
    }
    Ok(YearEventTable { trials, catalogue_size })
}

/// XELTs as `xelt_id,event_id,mean_loss,z_e,sigma_i,sigma_c,max_loss`.
pub fn write_xelts_csv<W: Write>(w: &mut W, xelts: &[Vec<XeltRecord>]) -> Result<(), IoError> {
    writeln!(w, "xelt_id,event_id,mean_loss,z_e,sigma_i,sigma_c,max_loss")?;
    for (xelt_id, records) in xelts.iter().enumerate() {
        for rec in records {
            writeln!(
                w,
                "{xelt_id},{},{},{},{},{},{}",
                rec.event_id,
                fmt_f64(rec.mean_loss),
                fmt_f64(rec.z_e),
                fmt_f64(rec.sigma_i),
                fmt_f64(rec.sigma_c),
                fmt_f64(rec.max_loss)
            )?;
        }
    }
    Ok(())
}

pub fn read_xelts_csv<R: Read>(r: R) -> Result<Vec<Vec<XeltRecord>>, IoError> {
    let reader = BufReader::new(r);
    let mut xelts: Vec<Vec<XeltRecord>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let f = split_fields(&line, 7, idx + 1)?;
        let xelt_id: usize = parse_int(f[0], idx + 1)?;
        if xelt_id > xelts.len() {
            return Err(IoError::Csv {
                line: idx + 1,
                what: format!("xelt id {xelt_id} out of order"),
            });
        }
        if xelt_id == xelts.len() {
            xelts.push(Vec::new());
        }
        xelts[xelt_id].push(XeltRecord {
            event_id: parse_int(f[1], idx + 1)?,
            mean_loss: parse_f64(f[2], idx + 1)?,
            z_e: parse_f64(f[3], idx + 1)?,
            sigma_i: parse_f64(f[4], idx + 1)?,
            sigma_c: parse_f64(f[5], idx + 1)?,
            max_loss: parse_f64(f[6], idx + 1)?,
        });
    }
    Ok(xelts)
}

/// YLT as `trial_id,loss` rows under a header.
pub fn write_ylt_csv<W: Write>(w: &mut W, ylt: &YearLossTable) -> Result<(), IoError> {
    writeln!(w, "trial_id,loss")?;
    for t in &ylt.losses {
        writeln!(w, "{},{}", t.trial_id, fmt_f64(t.loss))?;
    }
    Ok(())
}

pub fn read_ylt_csv<R: Read>(r: R) -> Result<YearLossTable, IoError> {
    let reader = BufReader::new(r);
    let mut losses = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let f = split_fields(&line, 2, idx + 1)?;
        losses.push(TrialLoss {
            trial_id: parse_int(f[0], idx + 1)?,
            loss: parse_f64(f[1], idx + 1)?,
        });
    }
    Ok(YearLossTable { losses })
}
