//! Profile-driven temperature classification and the code layout / page map
//! derived from it.
//!
//! The flow mirrors what a PGO toolchain and loader do: execution counts are
//! turned into hot/warm/cold labels, blocks are packed into per-temperature
//! sections, and pages covering those sections are tagged so that every
//! instruction fetch can carry its page's temperature to the caches.

mod layout;
mod map;
mod profile;

pub use layout::{layout_sections, page_utilization, PlacedBlock, Section, SectionLayout};
pub use map::{build_page_map, OverlapMode, PageMapOutcome, TemperatureMap, DEFAULT_PAGE_SIZE};
pub use profile::{read_profile, write_profile, Program, Relocation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Temperature;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfiledBlock {
    pub id: String,
    pub size_bytes: u64,
    pub count: u64,
}

impl ProfiledBlock {
    pub fn new(id: impl Into<String>, size_bytes: u64, count: u64) -> Self {
        ProfiledBlock {
            id: id.into(),
            size_bytes,
            count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub percentile_hot: f64,
    pub percentile_cold: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            percentile_hot: 0.99,
            percentile_cold: 0.9999,
        }
    }
}

impl ThresholdParams {
    pub fn validate(&self) -> Result<()> {
        check_percentile(self.percentile_hot)?;
        check_percentile(self.percentile_cold)?;
        if self.percentile_cold < self.percentile_hot {
            return Err(Error::Config(format!(
                "percentile_cold {} below percentile_hot {}",
                self.percentile_cold, self.percentile_hot
            )));
        }
        Ok(())
    }
}

fn check_percentile(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPercentile(p))
    }
}

/// `ceil(total * percentile)`, snapping products that are integral up to
/// floating-point noise (0.07 * 100 must give 7, not 8). Never below 1.
fn count_threshold(total: u64, percentile: f64) -> u64 {
    let exact = total as f64 * percentile;
    let nearest = exact.round();
    let t = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    (t as u64).max(1)
}

/// The count `C_n` separating the blocks that cover `percentile` of the
/// profile mass: counts are sorted descending and accumulated until the sum
/// first reaches `ceil(total * percentile)`; the last count added is `C_n`.
/// A block is inside the mass iff its count is at least `C_n`.
pub fn hot_count_threshold(blocks: &[ProfiledBlock], percentile: f64) -> Result<u64> {
    check_percentile(percentile)?;
    let mut counts: Vec<u64> = blocks.iter().map(|b| b.count).filter(|&c| c > 0).collect();
    if counts.is_empty() {
        return Err(Error::DegenerateProfile);
    }
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let total: u64 = counts.iter().sum();
    let threshold = count_threshold(total, percentile);
    let mut sum = 0u64;
    for &c in &counts {
        sum += c;
        if sum >= threshold {
            return Ok(c);
        }
    }
    // threshold <= total, so the loop always returns
    unreachable!("prefix sums reach the total")
}

/// Label every block. Hot blocks sit inside the `percentile_hot` mass; cold
/// blocks fall outside the `percentile_cold` mass or never executed; the rest
/// are warm. Hot wins when both rules match.
pub fn classify(blocks: &[ProfiledBlock], params: &ThresholdParams) -> Result<Vec<Temperature>> {
    params.validate()?;
    let hot_cn = hot_count_threshold(blocks, params.percentile_hot)?;
    let cold_cn = hot_count_threshold(blocks, params.percentile_cold)?;
    Ok(blocks
        .iter()
        .map(|b| {
            if b.count > 0 && b.count >= hot_cn {
                Temperature::Hot
            } else if b.count == 0 || b.count < cold_cn {
                Temperature::Cold
            } else {
                Temperature::Warm
            }
        })
        .collect())
}

/// Fraction of code bytes classified hot.
pub fn hot_fraction(blocks: &[ProfiledBlock], temps: &[Temperature]) -> f64 {
    let total: u64 = blocks.iter().map(|b| b.size_bytes).sum();
    if total == 0 {
        return 0.0;
    }
    let hot: u64 = blocks
        .iter()
        .zip(temps)
        .filter(|(_, &t)| t == Temperature::Hot)
        .map(|(b, _)| b.size_bytes)
        .sum();
    hot as f64 / total as f64
}
