use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::layout::{align_up, SectionLayout};
use crate::error::{Error, Result};
use crate::model::Temperature;

pub const DEFAULT_PAGE_SIZE: u64 = 4096;

/// Page-granularity temperature tags, the logical stand-in for the
/// implementation-defined PTE bits. Pages absent from the map carry no
/// temperature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemperatureMap {
    pub page_size: u64,
    pub pages: BTreeMap<u64, Temperature>,
}

impl Default for TemperatureMap {
    fn default() -> Self {
        TemperatureMap::empty(DEFAULT_PAGE_SIZE)
    }
}

impl TemperatureMap {
    pub fn empty(page_size: u64) -> Self {
        assert!(page_size.is_power_of_two(), "page size must be a power of two");
        TemperatureMap {
            page_size,
            pages: BTreeMap::new(),
        }
    }

    pub fn page_of(&self, vaddr: u64) -> u64 {
        vaddr >> self.page_size.trailing_zeros()
    }

    pub fn lookup(&self, vaddr: u64) -> Temperature {
        self.pages
            .get(&self.page_of(vaddr))
            .copied()
            .unwrap_or(Temperature::None)
    }

    /// Tag every page overlapping `[start, end)`.
    pub fn mark_range(&mut self, start: u64, end: u64, temperature: Temperature) {
        if end <= start || temperature == Temperature::None {
            return;
        }
        for page in self.page_of(start)..=self.page_of(end - 1) {
            self.pages.insert(page, temperature);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn count(&self, temperature: Temperature) -> usize {
        self.pages.values().filter(|&&t| t == temperature).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: TemperatureMap =
            serde_json::from_str(text).map_err(|e| Error::MapFormat(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    /// Binary form: little-endian u64 page size, then (u64 page number, u8
    /// temperature code) per tagged page in ascending page order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 9 * self.pages.len());
        out.extend_from_slice(&self.page_size.to_le_bytes());
        for (&page, &t) in &self.pages {
            out.extend_from_slice(&page.to_le_bytes());
            out.push(t.code());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || (bytes.len() - 8) % 9 != 0 {
            return Err(Error::MapFormat(format!(
                "binary map of {} bytes is not 8 + 9n",
                bytes.len()
            )));
        }
        let page_size = u64::from_le_bytes(bytes[..8].try_into().unwrap());
        let mut pages = BTreeMap::new();
        for (i, rec) in bytes[8..].chunks_exact(9).enumerate() {
            let page = u64::from_le_bytes(rec[..8].try_into().unwrap());
            let temperature = match Temperature::from_code(rec[8]) {
                Some(t) if t != Temperature::None => t,
                _ => {
                    return Err(Error::MapFormat(format!(
                        "invalid temperature code {} at byte {}",
                        rec[8],
                        8 + i * 9 + 8
                    )))
                }
            };
            pages.insert(page, temperature);
        }
        let map = TemperatureMap { page_size, pages };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        if !self.page_size.is_power_of_two() {
            return Err(Error::MapFormat(format!(
                "page size {} is not a power of two",
                self.page_size
            )));
        }
        if self.pages.values().any(|&t| t == Temperature::None) {
            return Err(Error::MapFormat("pages cannot be tagged \"none\"".into()));
        }
        Ok(())
    }
}

/// How pages straddling two differently-tagged sections are handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// Pad section starts to page boundaries so no page is shared.
    #[default]
    Pad,
    /// Leave shared pages untagged.
    Unmark,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PageMapOutcome {
    pub map: TemperatureMap,
    /// The layout actually mapped; differs from the input only in pad mode.
    pub layout: SectionLayout,
}

pub fn build_page_map(layout: &SectionLayout, page_size: u64, mode: OverlapMode) -> PageMapOutcome {
    let layout = match mode {
        OverlapMode::Pad => pad_layout(layout, page_size),
        OverlapMode::Unmark => layout.clone(),
    };
    let mut map = TemperatureMap::empty(page_size);
    let mut conflicted = Vec::new();
    for section in layout.sections.iter().filter(|s| s.size_bytes > 0) {
        let first = map.page_of(section.start_vaddr);
        let last = map.page_of(section.end_vaddr() - 1);
        for page in first..=last {
            match map.pages.entry(page) {
                Entry::Vacant(v) => {
                    v.insert(section.temperature);
                }
                Entry::Occupied(o) => {
                    if *o.get() != section.temperature {
                        conflicted.push(page);
                    }
                }
            }
        }
    }
    for page in conflicted {
        map.pages.remove(&page);
    }
    PageMapOutcome { map, layout }
}

/// Shift each section (and its blocks) up to the next page boundary past the
/// previous section's end.
fn pad_layout(layout: &SectionLayout, page_size: u64) -> SectionLayout {
    let mut out = layout.clone();
    let mut cursor = 0u64;
    for (i, section) in out.sections.iter_mut().enumerate() {
        let start = if i == 0 {
            section.start_vaddr
        } else {
            align_up(section.start_vaddr.max(cursor), page_size)
        };
        let delta = start - section.start_vaddr;
        section.start_vaddr = start;
        for b in &mut section.blocks {
            b.start_vaddr += delta;
        }
        cursor = section.end_vaddr();
    }
    out
}
