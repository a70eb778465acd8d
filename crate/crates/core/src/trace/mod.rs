//! Trace file formats and the synthetic pattern generator.
//!
//! Text: one `I|L|S,<hex vaddr>,<hex pc>` record per line.
//! Binary: a 16-byte header (`TRRP`, u32 LE version, u64 LE record count)
//! followed by 17-byte records (kind byte, u64 LE vaddr, u64 LE pc).

mod generate;

pub use generate::{generate, Pattern, PatternSpec, Region};

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TraceError};
use crate::model::{AccessKind, MemoryAccess};

pub const MAGIC: [u8; 4] = *b"TRRP";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 16;
pub const RECORD_BYTES: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Text,
    Binary,
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(TraceFormat::Text),
            "binary" => Ok(TraceFormat::Binary),
            other => Err(format!("unknown trace format {other:?} (expected text or binary)")),
        }
    }
}

impl TraceFormat {
    /// Binary files start with the magic; anything else is read as text.
    pub fn sniff(prefix: &[u8]) -> Self {
        if prefix.starts_with(&MAGIC) {
            TraceFormat::Binary
        } else {
            TraceFormat::Text
        }
    }
}

fn kind_letter(kind: AccessKind) -> char {
    match kind {
        AccessKind::InstrFetch => 'I',
        AccessKind::DataLoad => 'L',
        AccessKind::DataStore => 'S',
    }
}

pub fn write_trace<W: Write>(mut w: W, trace: &[MemoryAccess], format: TraceFormat) -> io::Result<()> {
    match format {
        TraceFormat::Text => {
            for a in trace {
                writeln!(w, "{},{:#x},{:#x}", kind_letter(a.kind), a.vaddr, a.pc)?;
            }
        }
        TraceFormat::Binary => {
            w.write_all(&MAGIC)?;
            w.write_all(&VERSION.to_le_bytes())?;
            w.write_all(&(trace.len() as u64).to_le_bytes())?;
            for a in trace {
                let mut rec = [0u8; RECORD_BYTES];
                rec[0] = a.kind.code();
                rec[1..9].copy_from_slice(&a.vaddr.to_le_bytes());
                rec[9..17].copy_from_slice(&a.pc.to_le_bytes());
                w.write_all(&rec)?;
            }
        }
    }
    w.flush()
}

pub fn encode(trace: &[MemoryAccess], format: TraceFormat) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&mut out, trace, format).expect("writing to a Vec cannot fail");
    out
}

pub fn read_trace<R: Read>(r: R, format: TraceFormat) -> Result<Vec<MemoryAccess>, TraceError> {
    match format {
        TraceFormat::Text => read_text(BufReader::new(r)),
        TraceFormat::Binary => {
            let mut bytes = Vec::new();
            BufReader::new(r).read_to_end(&mut bytes)?;
            decode_binary(&bytes)
        }
    }
}

fn parse_hex(field: &str) -> Option<u64> {
    let digits = field
        .strip_prefix("0x")
        .or_else(|| field.strip_prefix("0X"))
        .unwrap_or(field);
    u64::from_str_radix(digits, 16).ok()
}

fn read_text<R: BufRead>(r: R) -> Result<Vec<MemoryAccess>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = |message: String| TraceError::Text { line: i + 1, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let [kind, vaddr, pc] = fields[..] else {
            return Err(bad(format!("expected 3 comma-separated fields, found {}", fields.len())));
        };
        let kind = match kind {
            "I" => AccessKind::InstrFetch,
            "L" => AccessKind::DataLoad,
            "S" => AccessKind::DataStore,
            other => return Err(bad(format!("unknown access kind {other:?}"))),
        };
        let vaddr = parse_hex(vaddr).ok_or_else(|| bad(format!("bad address {vaddr:?}")))?;
        let pc = parse_hex(pc).ok_or_else(|| bad(format!("bad pc {pc:?}")))?;
        out.push(MemoryAccess { kind, vaddr, pc });
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<Vec<MemoryAccess>, TraceError> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(TraceError::BadMagic { offset: 0 });
    }
    if bytes.len() < HEADER_BYTES {
        let offset = if bytes.len() < 8 { 4 } else { 8 };
        return Err(TraceError::Truncated { offset });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(TraceError::BadVersion { offset: 4, found: version });
    }
    let declared = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_BYTES..];
    let whole = (body.len() / RECORD_BYTES) as u64;
    let mut out = Vec::with_capacity(whole.min(declared) as usize);
    for (i, rec) in body.chunks(RECORD_BYTES).enumerate() {
        let offset = (HEADER_BYTES + i * RECORD_BYTES) as u64;
        if i as u64 >= declared {
            return Err(TraceError::TrailingData { offset, declared });
        }
        if rec.len() < RECORD_BYTES {
            return Err(TraceError::Truncated { offset });
        }
        let kind = AccessKind::from_code(rec[0]).ok_or(TraceError::BadKind { offset, byte: rec[0] })?;
        out.push(MemoryAccess {
            kind,
            vaddr: u64::from_le_bytes(rec[1..9].try_into().unwrap()),
            pc: u64::from_le_bytes(rec[9..17].try_into().unwrap()),
        });
    }
    if (out.len() as u64) < declared {
        return Err(TraceError::Truncated { offset: bytes.len() as u64 });
    }
    Ok(out)
}

/// Read a trace file, detecting the format from its first bytes unless one
/// is given.
pub fn read_trace_file(path: &Path, format: Option<TraceFormat>) -> Result<Vec<MemoryAccess>> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading trace {}", path.display()), e))?;
    let format = format.unwrap_or_else(|| TraceFormat::sniff(&bytes));
    Ok(read_trace(&bytes[..], format)?)
}

pub fn write_trace_file(path: &Path, trace: &[MemoryAccess], format: TraceFormat) -> Result<()> {
    let ctx = || format!("writing trace {}", path.display());
    let file = fs::File::create(path).map_err(|e| Error::io(ctx(), e))?;
    write_trace(BufWriter::new(file), trace, format).map_err(|e| Error::io(ctx(), e))
}
