use serde::{Deserialize, Serialize};

use super::ProfiledBlock;
use crate::model::Temperature;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedBlock {
    pub id: String,
    pub start_vaddr: u64,
    pub size_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub temperature: Temperature,
    pub start_vaddr: u64,
    pub size_bytes: u64,
    pub blocks: Vec<PlacedBlock>,
}

impl Section {
    pub fn end_vaddr(&self) -> u64 {
        self.start_vaddr + self.size_bytes
    }
}

/// Per-temperature code sections in address order: hot, then warm, then cold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionLayout {
    pub base_vaddr: u64,
    pub sections: Vec<Section>,
}

impl SectionLayout {
    pub fn section(&self, temperature: Temperature) -> Option<&Section> {
        self.sections.iter().find(|s| s.temperature == temperature)
    }

    pub fn section_size(&self, temperature: Temperature) -> u64 {
        self.section(temperature).map_or(0, |s| s.size_bytes)
    }

    pub fn total_bytes(&self) -> u64 {
        self.sections.iter().map(|s| s.size_bytes).sum()
    }

    pub fn block_starts(&self) -> impl Iterator<Item = &PlacedBlock> {
        self.sections.iter().flat_map(|s| s.blocks.iter())
    }
}

pub(crate) fn align_up(addr: u64, alignment: u64) -> u64 {
    if alignment <= 1 {
        return addr;
    }
    addr.div_ceil(alignment) * alignment
}

/// Pack classified blocks into hot, warm and cold sections starting at
/// `base_vaddr`. Each section starts on an `alignment` boundary; blocks inside
/// a section are ordered by descending count, ties by profile order. Empty
/// sections are omitted.
pub fn layout_sections(
    blocks: &[ProfiledBlock],
    temps: &[Temperature],
    base_vaddr: u64,
    alignment: u64,
) -> SectionLayout {
    assert_eq!(blocks.len(), temps.len(), "one temperature per block");
    let mut cursor = base_vaddr;
    let mut sections = Vec::new();
    for temperature in [Temperature::Hot, Temperature::Warm, Temperature::Cold] {
        let mut members: Vec<&ProfiledBlock> = blocks
            .iter()
            .zip(temps)
            .filter(|(_, &t)| t == temperature)
            .map(|(b, _)| b)
            .collect();
        if members.is_empty() {
            continue;
        }
        members.sort_by(|a, b| b.count.cmp(&a.count));
        let start = align_up(cursor, alignment);
        let mut at = start;
        let placed = members
            .into_iter()
            .map(|b| {
                let p = PlacedBlock {
                    id: b.id.clone(),
                    start_vaddr: at,
                    size_bytes: b.size_bytes,
                };
                at += b.size_bytes;
                p
            })
            .collect();
        sections.push(Section {
            temperature,
            start_vaddr: start,
            size_bytes: at - start,
            blocks: placed,
        });
        cursor = at;
    }
    SectionLayout {
        base_vaddr,
        sections,
    }
}

/// Pages occupied by the hot and warm sections, each rounded up to whole pages.
pub fn page_utilization(layout: &SectionLayout, page_size: u64) -> (u64, u64) {
    let pages = |t| layout.section_size(t).div_ceil(page_size);
    (pages(Temperature::Hot), pages(Temperature::Warm))
}
