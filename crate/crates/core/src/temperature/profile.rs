use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{ProfiledBlock, SectionLayout};
use crate::error::{Error, Result};
use crate::model::{line_of, MemoryAccess};

/// Parse `block_id,size_bytes,count` records. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_profile<R: BufRead>(reader: R) -> Result<Vec<ProfiledBlock>> {
    let mut blocks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(format!("profile line {line_no}"), e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Profile {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [id, size, count] = fields[..] else {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        };
        if id.is_empty() {
            return Err(bad("empty block id".into()));
        }
        let size: u64 = size
            .parse()
            .map_err(|_| bad(format!("invalid size {size:?}")))?;
        if size == 0 {
            return Err(bad("block size must be positive".into()));
        }
        let count: u64 = count
            .parse()
            .map_err(|_| bad(format!("invalid count {count:?}")))?;
        blocks.push(ProfiledBlock::new(id, size, count));
    }
    Ok(blocks)
}

pub fn write_profile<W: Write>(mut writer: W, blocks: &[ProfiledBlock]) -> std::io::Result<()> {
    for b in blocks {
        writeln!(writer, "{},{},{}", b.id, b.size_bytes, b.count)?;
    }
    Ok(())
}

/// A profiled program: blocks plus where each block lived in the original
/// (pre-layout) binary. Traces recorded against the original addresses can be
/// relocated onto any later layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub blocks: Vec<ProfiledBlock>,
    pub origins: Vec<u64>,
}

impl Program {
    /// Blocks laid end to end from `base` in profile order.
    pub fn contiguous(blocks: Vec<ProfiledBlock>, base: u64) -> Self {
        let mut at = base;
        let origins = blocks
            .iter()
            .map(|b| {
                let o = at;
                at += b.size_bytes;
                o
            })
            .collect();
        Program { blocks, origins }
    }

    /// Treat every fetched instruction line as one block whose count is its
    /// fetch count. Block ids are the line's start address in hex.
    pub fn from_trace(trace: &[MemoryAccess], line_size: u64) -> Self {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for a in trace.iter().filter(|a| a.is_fetch()) {
            *counts.entry(line_of(a.vaddr, line_size)).or_default() += 1;
        }
        let (blocks, origins) = counts
            .into_iter()
            .map(|(line, count)| {
                let addr = line * line_size;
                (ProfiledBlock::new(format!("{addr:#x}"), line_size, count), addr)
            })
            .unzip();
        Program { blocks, origins }
    }

    pub fn relocation(&self, layout: &SectionLayout) -> Relocation {
        let new_start: BTreeMap<&str, u64> = layout
            .block_starts()
            .map(|b| (b.id.as_str(), b.start_vaddr))
            .collect();
        let mut ranges: Vec<(u64, u64, u64)> = self
            .blocks
            .iter()
            .zip(&self.origins)
            .filter_map(|(b, &origin)| {
                new_start
                    .get(b.id.as_str())
                    .map(|&to| (origin, origin + b.size_bytes, to))
            })
            .collect();
        ranges.sort_unstable();
        Relocation { ranges }
    }
}

/// Maps original code addresses to their laid-out addresses. Addresses outside
/// any profiled block (data, external code) are left unchanged.
#[derive(Clone, Debug, Default)]
pub struct Relocation {
    ranges: Vec<(u64, u64, u64)>,
}

impl Relocation {
    pub fn address(&self, vaddr: u64) -> u64 {
        let idx = self.ranges.partition_point(|&(start, _, _)| start <= vaddr);
        if idx == 0 {
            return vaddr;
        }
        let (start, end, to) = self.ranges[idx - 1];
        if vaddr < end {
            to + (vaddr - start)
        } else {
            vaddr
        }
    }

    pub fn access(&self, a: &MemoryAccess) -> MemoryAccess {
        MemoryAccess {
            kind: a.kind,
            vaddr: self.address(a.vaddr),
            pc: self.address(a.pc),
        }
    }

    pub fn trace(&self, trace: &[MemoryAccess]) -> Vec<MemoryAccess> {
        trace.iter().map(|a| self.access(a)).collect()
    }
}
