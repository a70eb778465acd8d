//! Synthetic access patterns with controlled per-set reuse and temperature.
//!
//! Line `k` of a region in set `s` lives at `base + (k * set_count + s) * line_size`,
//! so every pattern is replicated across `set_count` consecutive sets of the
//! target cache.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MemoryAccess, Temperature, DEFAULT_LINE_SIZE};
use crate::temperature::{TemperatureMap, DEFAULT_PAGE_SIZE};

/// Disjoint 256 MiB address regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Hot,
    Warm,
    Cold,
    /// Code with no temperature tag.
    Untagged,
    Data,
}

impl Region {
    pub fn base(self) -> u64 {
        match self {
            Region::Hot => 0x1000_0000,
            Region::Warm => 0x2000_0000,
            Region::Cold => 0x3000_0000,
            Region::Untagged => 0x4000_0000,
            Region::Data => 0x8000_0000,
        }
    }

    pub fn temperature(self) -> Temperature {
        match self {
            Region::Hot => Temperature::Hot,
            Region::Warm => Temperature::Warm,
            Region::Cold => Temperature::Cold,
            Region::Untagged | Region::Data => Temperature::None,
        }
    }
}

fn default_weight() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "kebab-case")]
pub enum Pattern {
    /// Cyclic loop over hot lines.
    HotLoop { hot_lines: u64 },
    /// Each round: `resident_passes` passes over a resident loop, then
    /// `scan_burst` never-repeated lines.
    Scan {
        resident_lines: u64,
        resident_passes: u64,
        scan_burst: u64,
    },
    /// Cyclic sweep over a working set.
    Thrash { working_set: u64 },
    /// Every hot line is re-touched at exactly `target_reuse_distance`
    /// distinct lines; the gaps are filled from a pool of warm, cold and data
    /// lines taken round-robin.
    MixedTemperature {
        hot_lines: u64,
        #[serde(default)]
        warm_lines: u64,
        #[serde(default)]
        cold_lines: u64,
        #[serde(default)]
        data_lines: u64,
        #[serde(default = "default_weight")]
        warm_weight: u32,
        #[serde(default = "default_weight")]
        cold_weight: u32,
        #[serde(default = "default_weight")]
        data_weight: u32,
        target_reuse_distance: u64,
    },
}

fn default_line_size() -> u64 {
    DEFAULT_LINE_SIZE
}

fn default_page_size() -> u64 {
    DEFAULT_PAGE_SIZE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    #[serde(flatten)]
    pub pattern: Pattern,
    pub iterations: u64,
    /// Number of cache sets the pattern is replicated over.
    pub set_count: u64,
    #[serde(default = "default_line_size")]
    pub line_size: u64,
    #[serde(default = "default_page_size")]
    pub page_size: u64,
    #[serde(default)]
    pub seed: u64,
}

impl PatternSpec {
    pub fn new(pattern: Pattern, iterations: u64, set_count: u64, seed: u64) -> Self {
        PatternSpec {
            pattern,
            iterations,
            set_count,
            line_size: DEFAULT_LINE_SIZE,
            page_size: DEFAULT_PAGE_SIZE,
            seed,
        }
    }

    /// 8 hot lines per set re-touched at distance 11 among cold and data
    /// lines, over the 1024 sets of a 512 KiB 8-way L2.
    pub fn canonical_mixed(seed: u64) -> Self {
        PatternSpec::new(
            Pattern::MixedTemperature {
                hot_lines: 8,
                warm_lines: 0,
                cold_lines: 4,
                data_lines: 4,
                warm_weight: 1,
                cold_weight: 1,
                data_weight: 1,
                target_reuse_distance: 11,
            },
            50,
            1024,
            seed,
        )
    }

    /// A 3-line resident loop per set broken by bursts of 3 streaming lines,
    /// sized for a 4-way cache.
    pub fn canonical_scan(seed: u64) -> Self {
        PatternSpec::new(
            Pattern::Scan {
                resident_lines: 3,
                resident_passes: 2,
                scan_burst: 3,
            },
            100,
            4096,
            seed,
        )
    }

    /// 12 lines per set swept cyclically, sized to thrash an 8-way cache.
    pub fn canonical_thrash(seed: u64) -> Self {
        PatternSpec::new(Pattern::Thrash { working_set: 12 }, 100, 4096, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if self.set_count == 0 || !self.set_count.is_power_of_two() {
            return bad(format!("set_count {} must be a power of two", self.set_count));
        }
        if !self.line_size.is_power_of_two() || !self.page_size.is_power_of_two() {
            return bad("line and page sizes must be powers of two".into());
        }
        let empty = match self.pattern {
            Pattern::HotLoop { hot_lines } => hot_lines == 0,
            Pattern::Scan {
                resident_lines,
                resident_passes,
                scan_burst,
            } => resident_lines * resident_passes + scan_burst == 0,
            Pattern::Thrash { working_set } => working_set == 0,
            Pattern::MixedTemperature { .. } => {
                self.mixed_filler().map(|_| false)?;
                false
            }
        };
        if empty {
            return bad("pattern touches no lines".into());
        }
        // region size check: every region must fit in its 256 MiB window
        let lines_per_region = self.max_region_lines();
        if lines_per_region.saturating_mul(self.set_count).saturating_mul(self.line_size) > 0x1000_0000 {
            return bad("pattern does not fit its address region".into());
        }
        Ok(())
    }

    fn max_region_lines(&self) -> u64 {
        match self.pattern {
            Pattern::HotLoop { hot_lines } => hot_lines,
            Pattern::Scan {
                resident_lines,
                scan_burst,
                ..
            } => resident_lines.max(scan_burst * self.iterations),
            Pattern::Thrash { working_set } => working_set,
            Pattern::MixedTemperature {
                hot_lines,
                warm_lines,
                cold_lines,
                data_lines,
                ..
            } => hot_lines.max(warm_lines).max(cold_lines).max(data_lines),
        }
    }

    /// Filler lines needed per period of the mixed pattern.
    fn mixed_filler(&self) -> Result<u64> {
        let Pattern::MixedTemperature {
            hot_lines,
            warm_lines,
            cold_lines,
            data_lines,
            warm_weight,
            cold_weight,
            data_weight,
            target_reuse_distance,
        } = self.pattern
        else {
            unreachable!()
        };
        let err = |m: String| Err(Error::InfeasibleSpec(m));
        if hot_lines == 0 {
            return err("mixed pattern needs at least one hot line".into());
        }
        if target_reuse_distance + 1 < hot_lines {
            return err(format!(
                "reuse distance {target_reuse_distance} is below the {} other hot lines",
                hot_lines - 1
            ));
        }
        let filler = target_reuse_distance + 1 - hot_lines;
        let weighted = |n: u64, w: u32| if w == 0 { 0 } else { n };
        let pool = weighted(warm_lines, warm_weight) + weighted(cold_lines, cold_weight) + weighted(data_lines, data_weight);
        if filler > pool {
            return err(format!(
                "reuse distance {target_reuse_distance} needs {filler} distinct filler lines per set, only {pool} available"
            ));
        }
        Ok(filler)
    }
}

/// One per-set access: a region and a line index within it.
type Slot = (Region, u64);

/// Smooth weighted round-robin over the filler classes; each class
/// contributes each of its lines exactly once.
fn filler_pool(classes: &[(Region, u64, u32)]) -> Vec<Slot> {
    let live: Vec<_> = classes.iter().filter(|c| c.1 > 0 && c.2 > 0).collect();
    let total: u64 = live.iter().map(|c| c.1).sum();
    let mut next = vec![0u64; live.len()];
    let mut credit = vec![0i64; live.len()];
    let mut pool = Vec::with_capacity(total as usize);
    while (pool.len() as u64) < total {
        let active: Vec<usize> = (0..live.len()).filter(|&i| next[i] < live[i].1).collect();
        let weight_sum: i64 = active.iter().map(|&i| live[i].2 as i64).sum();
        for &i in &active {
            credit[i] += live[i].2 as i64;
        }
        let pick = *active.iter().max_by_key(|&&i| (credit[i], std::cmp::Reverse(i))).unwrap();
        credit[pick] -= weight_sum;
        pool.push((live[pick].0, next[pick]));
        next[pick] += 1;
    }
    pool
}

/// Per-set access sequence for one iteration of the pattern.
fn period(spec: &PatternSpec, iteration: u64, pool_cursor: &mut usize, pool: &[Slot]) -> Vec<Slot> {
    match spec.pattern {
        Pattern::HotLoop { hot_lines } => (0..hot_lines).map(|k| (Region::Hot, k)).collect(),
        Pattern::Thrash { working_set } => (0..working_set).map(|k| (Region::Untagged, k)).collect(),
        Pattern::Scan {
            resident_lines,
            resident_passes,
            scan_burst,
        } => {
            let mut out = Vec::new();
            for _ in 0..resident_passes {
                out.extend((0..resident_lines).map(|k| (Region::Hot, k)));
            }
            out.extend((0..scan_burst).map(|j| (Region::Cold, iteration * scan_burst + j)));
            out
        }
        Pattern::MixedTemperature { hot_lines, .. } => {
            let filler = spec.mixed_filler().expect("validated") as usize;
            let mut out = Vec::with_capacity(hot_lines as usize + filler);
            let hot = hot_lines as usize;
            for i in 0..hot {
                out.push((Region::Hot, i as u64));
                // spread the fillers evenly behind the hot lines
                let n = (i + 1) * filler / hot - i * filler / hot;
                for _ in 0..n {
                    out.push(pool[*pool_cursor % pool.len()]);
                    *pool_cursor += 1;
                }
            }
            out
        }
    }
}

/// Generate a trace and the temperature map tagging its code regions.
pub fn generate(spec: &PatternSpec) -> Result<(Vec<MemoryAccess>, TemperatureMap)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool = match spec.pattern {
        Pattern::MixedTemperature {
            warm_lines,
            cold_lines,
            data_lines,
            warm_weight,
            cold_weight,
            data_weight,
            ..
        } => filler_pool(&[
            (Region::Warm, warm_lines, warm_weight),
            (Region::Cold, cold_lines, cold_weight),
            (Region::Data, data_lines, data_weight),
        ]),
        _ => Vec::new(),
    };

    let sets = spec.set_count;
    let addr = |(region, k): Slot, set: u64| region.base() + (k * sets + set) * spec.line_size;
    let mut order: Vec<u64> = (0..sets).collect();
    let mut trace = Vec::new();
    let mut lines_used = [0u64; 5];
    let mut cursor = 0usize;
    for it in 0..spec.iterations {
        let seq = period(spec, it, &mut cursor, &pool);
        for &(region, k) in &seq {
            let idx = region as usize;
            lines_used[idx] = lines_used[idx].max(k + 1);
        }
        order.shuffle(&mut rng);
        for &slot in &seq {
            for &set in &order {
                let vaddr = addr(slot, set);
                let access = if slot.0 == Region::Data {
                    // attribute data accesses to the set's first hot line
                    let pc = addr((Region::Hot, 0), set);
                    if rng.gen_bool(0.5) {
                        MemoryAccess::load(vaddr, pc)
                    } else {
                        MemoryAccess::store(vaddr, pc)
                    }
                } else {
                    MemoryAccess::fetch(vaddr)
                };
                trace.push(access);
            }
        }
    }

    let mut map = TemperatureMap::empty(spec.page_size);
    for region in [Region::Hot, Region::Warm, Region::Cold] {
        let n = lines_used[region as usize];
        if n > 0 {
            let base = region.base();
            map.mark_range(base, base + n * sets * spec.line_size, region.temperature());
        }
    }
    Ok((trace, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{encode, TraceFormat};

    #[test]
    fn weighted_pool_covers_each_line_once() {
        let pool = filler_pool(&[(Region::Cold, 2, 1), (Region::Data, 4, 2)]);
        assert_eq!(pool.len(), 6);
        let data = pool.iter().filter(|s| s.0 == Region::Data).count();
        assert_eq!(data, 4);
        assert_eq!(pool[0].0, Region::Data);
        let mut sorted = pool.clone();
        sorted.sort_by_key(|s| (s.0 as u8, s.1));
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
    }

    #[test]
    fn infeasible_specs_rejected() {
        let mixed = |hot, cold, rd| {
            PatternSpec::new(
                Pattern::MixedTemperature {
                    hot_lines: hot,
                    warm_lines: 0,
                    cold_lines: cold,
                    data_lines: 0,
                    warm_weight: 1,
                    cold_weight: 1,
                    data_weight: 1,
                    target_reuse_distance: rd,
                },
                4,
                1,
                0,
            )
        };
        assert!(generate(&mixed(8, 4, 11)).is_ok());
        assert!(matches!(generate(&mixed(8, 3, 11)), Err(Error::InfeasibleSpec(_))));
        assert!(matches!(generate(&mixed(8, 4, 6)), Err(Error::InfeasibleSpec(_))));
        assert!(matches!(generate(&mixed(0, 4, 6)), Err(Error::InfeasibleSpec(_))));
        let mut spec = mixed(8, 4, 11);
        spec.set_count = 3;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate(&PatternSpec::canonical_mixed(7)).unwrap();
        let b = generate(&PatternSpec::canonical_mixed(7)).unwrap();
        let c = generate(&PatternSpec::canonical_mixed(8)).unwrap();
        assert_eq!(encode(&a.0, TraceFormat::Binary), encode(&b.0, TraceFormat::Binary));
        assert_eq!(a.1, b.1);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn map_matches_generator_regions() {
        for spec in [
            PatternSpec::canonical_mixed(1),
            PatternSpec::canonical_scan(1),
            PatternSpec::canonical_thrash(1),
        ] {
            let (trace, map) = generate(&spec).unwrap();
            for a in trace.iter().filter(|a| a.is_fetch()) {
                let expected = match a.vaddr >> 28 {
                    1 => Temperature::Hot,
                    2 => Temperature::Warm,
                    3 => Temperature::Cold,
                    _ => Temperature::None,
                };
                assert_eq!(map.lookup(a.vaddr), expected, "{:#x}", a.vaddr);
            }
        }
    }

    #[test]
    fn json_spec() {
        let text = r#"{"pattern":"thrash","working_set":12,"iterations":3,"set_count":2}"#;
        let spec: PatternSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.pattern, Pattern::Thrash { working_set: 12 });
        assert_eq!(spec.line_size, 64);
        let back: PatternSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let (trace, _) = generate(&spec).unwrap();
        assert_eq!(trace.len(), 12 * 3 * 2);
    }
}
