//! Domain types shared across the simulator: accesses, temperatures, cache
//! geometry and hit/miss counters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LINE_SIZE: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    InstrFetch,
    DataLoad,
    DataStore,
}

impl AccessKind {
    pub fn class(self) -> LineClass {
        match self {
            AccessKind::InstrFetch => LineClass::Instruction,
            AccessKind::DataLoad | AccessKind::DataStore => LineClass::Data,
        }
    }

    /// Binary trace encoding.
    pub fn code(self) -> u8 {
        match self {
            AccessKind::InstrFetch => 0,
            AccessKind::DataLoad => 1,
            AccessKind::DataStore => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(AccessKind::InstrFetch),
            1 => Some(AccessKind::DataLoad),
            2 => Some(AccessKind::DataStore),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineClass {
    Instruction,
    #[default]
    Data,
}

/// Execution-frequency class of code, carried per page.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Temperature {
    #[default]
    None,
    Hot,
    Warm,
    Cold,
}

impl Temperature {
    pub const ALL: [Temperature; 4] = [
        Temperature::None,
        Temperature::Hot,
        Temperature::Warm,
        Temperature::Cold,
    ];

    /// 2-bit wire encoding used by the binary map format.
    pub fn code(self) -> u8 {
        match self {
            Temperature::None => 0,
            Temperature::Hot => 1,
            Temperature::Warm => 2,
            Temperature::Cold => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Temperature::None),
            1 => Some(Temperature::Hot),
            2 => Some(Temperature::Warm),
            3 => Some(Temperature::Cold),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Temperature::None => "none",
            Temperature::Hot => "hot",
            Temperature::Warm => "warm",
            Temperature::Cold => "cold",
        }
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One trace record. `pc` equals `vaddr` for instruction fetches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemoryAccess {
    pub kind: AccessKind,
    pub vaddr: u64,
    pub pc: u64,
}

impl MemoryAccess {
    pub fn fetch(vaddr: u64) -> Self {
        MemoryAccess {
            kind: AccessKind::InstrFetch,
            vaddr,
            pc: vaddr,
        }
    }

    pub fn load(vaddr: u64, pc: u64) -> Self {
        MemoryAccess {
            kind: AccessKind::DataLoad,
            vaddr,
            pc,
        }
    }

    pub fn store(vaddr: u64, pc: u64) -> Self {
        MemoryAccess {
            kind: AccessKind::DataStore,
            vaddr,
            pc,
        }
    }

    pub fn class(&self) -> LineClass {
        self.kind.class()
    }

    pub fn is_fetch(&self) -> bool {
        self.kind == AccessKind::InstrFetch
    }
}

#[inline]
pub fn line_of(vaddr: u64, line_size: u64) -> u64 {
    debug_assert!(line_size.is_power_of_two());
    vaddr >> line_size.trailing_zeros()
}

#[inline]
pub fn set_index(line: u64, set_count: usize) -> usize {
    debug_assert!(set_count.is_power_of_two());
    (line & (set_count as u64 - 1)) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheGeometry {
    pub capacity_bytes: u64,
    pub associativity: u32,
    #[serde(default = "default_line_size")]
    pub line_size_bytes: u64,
}

fn default_line_size() -> u64 {
    DEFAULT_LINE_SIZE
}

impl CacheGeometry {
    pub fn new(capacity_bytes: u64, associativity: u32, line_size_bytes: u64) -> Result<Self> {
        let g = CacheGeometry {
            capacity_bytes,
            associativity,
            line_size_bytes,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry with `sets` sets of `ways` ways and 64-byte lines.
    pub fn with_sets(sets: u64, ways: u32) -> Result<Self> {
        Self::new(sets * ways as u64 * DEFAULT_LINE_SIZE, ways, DEFAULT_LINE_SIZE)
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity_bytes == 0 || self.associativity == 0 {
            return Err(Error::InvalidGeometry(
                "capacity and associativity must be positive".into(),
            ));
        }
        if !self.line_size_bytes.is_power_of_two() {
            return Err(Error::InvalidGeometry(format!(
                "line size {} is not a power of two",
                self.line_size_bytes
            )));
        }
        let way_bytes = self.associativity as u64 * self.line_size_bytes;
        if self.capacity_bytes % way_bytes != 0 {
            return Err(Error::InvalidGeometry(format!(
                "capacity {} not divisible by associativity x line size ({})",
                self.capacity_bytes, way_bytes
            )));
        }
        let sets = self.capacity_bytes / way_bytes;
        if !sets.is_power_of_two() {
            return Err(Error::InvalidGeometry(format!(
                "set count {sets} is not a power of two"
            )));
        }
        Ok(())
    }

    pub fn set_count(&self) -> usize {
        (self.capacity_bytes / (self.associativity as u64 * self.line_size_bytes)) as usize
    }

    pub fn ways(&self) -> usize {
        self.associativity as usize
    }

    pub fn line_of(&self, vaddr: u64) -> u64 {
        line_of(vaddr, self.line_size_bytes)
    }

    pub fn set_of_line(&self, line: u64) -> usize {
        set_index(line, self.set_count())
    }
}

/// The identity of a line as delivered with a request: line number, the
/// class of the filling access, and the temperature carried with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LineId {
    pub line: u64,
    pub class: LineClass,
    pub temperature: Temperature,
}

impl LineId {
    /// Data lines never carry a temperature; a hint on a data line is dropped.
    pub fn new(line: u64, class: LineClass, temperature: Temperature) -> Self {
        let temperature = match class {
            LineClass::Instruction => temperature,
            LineClass::Data => Temperature::None,
        };
        LineId {
            line,
            class,
            temperature,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

impl Counts {
    pub fn record(&mut self, hit: bool) {
        self.accesses += 1;
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounters {
    pub instruction: Counts,
    pub data: Counts,
    pub retired_instructions: u64,
}

impl ClassCounters {
    pub fn get(&self, class: LineClass) -> &Counts {
        match class {
            LineClass::Instruction => &self.instruction,
            LineClass::Data => &self.data,
        }
    }

    pub fn record(&mut self, class: LineClass, hit: bool) {
        match class {
            LineClass::Instruction => self.instruction.record(hit),
            LineClass::Data => self.data.record(hit),
        }
    }

    pub fn mpki(&self, class: LineClass) -> Result<f64> {
        mpki(self.get(class).misses, self.retired_instructions)
    }
}

/// Misses per kilo-instruction, at full precision.
pub fn mpki(misses: u64, retired: u64) -> Result<f64> {
    if retired == 0 {
        return Err(Error::UndefinedMetric("MPKI with zero retired instructions"));
    }
    Ok(misses as f64 * 1000.0 / retired as f64)
}
