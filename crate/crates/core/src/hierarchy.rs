//! Multi-level cache model: split L1-I/L1-D, a unified L2 and an optional
//! unified system-level cache, replayed functionally (no timing).

use serde::{Deserialize, Serialize};

use crate::cache::{Cache, Victim};
use crate::error::{Error, Result};
use crate::model::{
    line_of, CacheGeometry, ClassCounters, LineClass, LineId, MemoryAccess, Temperature,
};
use crate::policy::{PolicyConfig, Request};
use crate::temperature::TemperatureMap;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inclusion {
    /// Evictions back-invalidate the levels above.
    Inclusive,
    /// Victim cache of the level above; demand hits move lines up.
    Exclusive,
    #[default]
    NonInclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub geometry: CacheGeometry,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub inclusion: Inclusion,
    /// Next-line prefetch degree on demand misses; 0 disables it.
    #[serde(default)]
    pub prefetch_degree: u32,
}

impl LevelConfig {
    pub fn new(geometry: CacheGeometry, policy: PolicyConfig, inclusion: Inclusion) -> Self {
        LevelConfig {
            geometry,
            policy,
            inclusion,
            prefetch_degree: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub l1i: LevelConfig,
    pub l1d: LevelConfig,
    pub l2: LevelConfig,
    pub slc: Option<LevelConfig>,
}

impl Default for HierarchyConfig {
    /// 64 KiB 4-way LRU L1s, 512 KiB 8-way inclusive L2 under SRRIP, and a
    /// 1 MiB 16-way exclusive LRU SLC.
    fn default() -> Self {
        let kib = 1024;
        let geom = |cap, ways| CacheGeometry::new(cap, ways, 64).expect("static geometry");
        HierarchyConfig {
            l1i: LevelConfig::new(geom(64 * kib, 4), PolicyConfig::Lru, Inclusion::NonInclusive),
            l1d: LevelConfig::new(geom(64 * kib, 4), PolicyConfig::Lru, Inclusion::NonInclusive),
            l2: LevelConfig::new(geom(512 * kib, 8), PolicyConfig::Srrip, Inclusion::Inclusive),
            slc: Some(LevelConfig::new(
                geom(1024 * kib, 16),
                PolicyConfig::Lru,
                Inclusion::Exclusive,
            )),
        }
    }
}

impl HierarchyConfig {
    pub fn with_l2_policy(mut self, policy: PolicyConfig) -> Self {
        self.l2.policy = policy;
        self
    }

    pub fn line_size(&self) -> u64 {
        self.l2.geometry.line_size_bytes
    }

    pub fn validate(&self) -> Result<()> {
        let levels = [Some(&self.l1i), Some(&self.l1d), Some(&self.l2), self.slc.as_ref()];
        for level in levels.into_iter().flatten() {
            level.geometry.validate()?;
            if level.geometry.line_size_bytes != self.line_size() {
                return Err(Error::Config("all levels must share one line size".into()));
            }
        }
        if self.l2.inclusion == Inclusion::Exclusive {
            return Err(Error::Config("an exclusive L2 is not supported".into()));
        }
        Ok(())
    }
}

/// Which level satisfied an L1 miss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceLevel {
    L2,
    Slc,
    Memory,
}

/// One demand instruction miss at L2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissRecord {
    pub vaddr: u64,
    pub served_by: ServiceLevel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemperatureCounts {
    pub hot: u64,
    pub warm: u64,
    pub cold: u64,
    pub none: u64,
}

impl TemperatureCounts {
    pub fn add(&mut self, t: Temperature) {
        match t {
            Temperature::Hot => self.hot += 1,
            Temperature::Warm => self.warm += 1,
            Temperature::Cold => self.cold += 1,
            Temperature::None => self.none += 1,
        }
    }

    pub fn get(&self, t: Temperature) -> u64 {
        match t {
            Temperature::Hot => self.hot,
            Temperature::Warm => self.warm,
            Temperature::Cold => self.cold,
            Temperature::None => self.none,
        }
    }

    pub fn total(&self) -> u64 {
        self.hot + self.warm + self.cold + self.none
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub name: String,
    pub policy: String,
    /// Demand traffic only.
    pub counters: ClassCounters,
    pub instruction_misses_by_temperature: TemperatureCounts,
    pub evictions: TemperatureCounts,
    pub invalidations: u64,
    pub prefetch_fills: u64,
}

impl LevelStats {
    fn record(&mut self, class: LineClass, hit: bool, temperature: Temperature) {
        self.counters.record(class, hit);
        if !hit && class == LineClass::Instruction {
            self.instruction_misses_by_temperature.add(temperature);
        }
    }

    pub fn mpki(&self, class: LineClass) -> Result<f64> {
        self.counters.mpki(class)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceHistogram {
    pub l2: u64,
    pub slc: u64,
    pub memory: u64,
}

impl ServiceHistogram {
    fn add(&mut self, level: ServiceLevel) {
        match level {
            ServiceLevel::L2 => self.l2 += 1,
            ServiceLevel::Slc => self.slc += 1,
            ServiceLevel::Memory => self.memory += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.l2 + self.slc + self.memory
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimResult {
    pub retired_instructions: u64,
    pub l1i: LevelStats,
    pub l1d: LevelStats,
    pub l2: LevelStats,
    pub slc: Option<LevelStats>,
    pub service: ServiceHistogram,
    #[serde(skip)]
    pub miss_log: Vec<MissRecord>,
    #[serde(skip)]
    pub l2_stream: Vec<MemoryAccess>,
}

impl SimResult {
    pub fn levels(&self) -> impl Iterator<Item = &LevelStats> {
        [&self.l1i, &self.l1d, &self.l2].into_iter().chain(self.slc.as_ref())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Keep a record of every demand instruction miss at L2.
    pub log_misses: bool,
    /// Keep the demand access stream seen by L2.
    pub record_l2_stream: bool,
}

struct Level {
    cache: Cache,
    config: LevelConfig,
    stats: LevelStats,
}

impl Level {
    fn new(name: &str, config: &LevelConfig, seed: u64) -> Self {
        let set_count = config.geometry.set_count();
        let cache = Cache::new(config.geometry, config.policy.build(set_count, seed));
        Level {
            stats: LevelStats {
                name: name.to_string(),
                policy: config.policy.name().to_string(),
                ..LevelStats::default()
            },
            cache,
            config: config.clone(),
        }
    }
}

fn level_seed(seed: u64, index: u64) -> u64 {
    seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub struct Hierarchy {
    l1i: Level,
    l1d: Level,
    l2: Level,
    slc: Option<Level>,
    line_size: u64,
    retired: u64,
    service: ServiceHistogram,
    options: SimOptions,
    miss_log: Vec<MissRecord>,
    l2_stream: Vec<MemoryAccess>,
}

impl Hierarchy {
    pub fn new(config: &HierarchyConfig, seed: u64, options: SimOptions) -> Result<Self> {
        config.validate()?;
        Ok(Hierarchy {
            l1i: Level::new("L1-I", &config.l1i, level_seed(seed, 0)),
            l1d: Level::new("L1-D", &config.l1d, level_seed(seed, 1)),
            l2: Level::new("L2", &config.l2, level_seed(seed, 2)),
            slc: config
                .slc
                .as_ref()
                .map(|c| Level::new("SLC", c, level_seed(seed, 3))),
            line_size: config.line_size(),
            retired: 0,
            service: ServiceHistogram::default(),
            options,
            miss_log: Vec::new(),
            l2_stream: Vec::new(),
        })
    }

    pub fn l1(&self, class: LineClass) -> &Cache {
        match class {
            LineClass::Instruction => &self.l1i.cache,
            LineClass::Data => &self.l1d.cache,
        }
    }

    pub fn l2(&self) -> &Cache {
        &self.l2.cache
    }

    pub fn slc(&self) -> Option<&Cache> {
        self.slc.as_ref().map(|l| &l.cache)
    }

    fn l1_mut(&mut self, class: LineClass) -> &mut Level {
        match class {
            LineClass::Instruction => &mut self.l1i,
            LineClass::Data => &mut self.l1d,
        }
    }

    fn temperature_of(&self, map: &TemperatureMap, victim: &Victim) -> Temperature {
        match victim.class {
            LineClass::Instruction => map.lookup(victim.line * self.line_size),
            LineClass::Data => Temperature::None,
        }
    }

    pub fn access(&mut self, access: &MemoryAccess, map: &TemperatureMap) {
        let class = access.class();
        let line = line_of(access.vaddr, self.line_size);
        let temperature = if access.is_fetch() {
            self.retired += 1;
            map.lookup(access.vaddr)
        } else {
            Temperature::None
        };
        let req = Request::demand(LineId::new(line, class, temperature), access.pc);

        let l1 = self.l1_mut(class);
        let hit = l1.cache.lookup(&req);
        l1.stats.record(class, hit, temperature);
        if hit {
            return;
        }

        if self.options.record_l2_stream {
            self.l2_stream.push(*access);
        }
        let l2_req = Request {
            costly: class == LineClass::Instruction,
            ..req
        };
        let l2_hit = self.l2.cache.lookup(&l2_req);
        self.l2.stats.record(class, l2_hit, temperature);
        let served = if l2_hit {
            ServiceLevel::L2
        } else {
            let served = self.fetch_below_l2(&l2_req);
            if self.options.log_misses && class == LineClass::Instruction {
                self.miss_log.push(MissRecord {
                    vaddr: line * self.line_size,
                    served_by: served,
                });
            }
            self.fill_l2(&l2_req, map);
            served
        };
        self.service.add(served);
        self.fill_l1(class, &req, map);

        for k in 1..=self.l1_mut(class).config.prefetch_degree as u64 {
            self.prefetch_into_l1(class, line + k, access.pc, map);
        }
        if !l2_hit {
            for k in 1..=self.l2.config.prefetch_degree as u64 {
                self.prefetch_into_l2(class, line + k, access.pc, map);
            }
        }
    }

    fn prefetch_request(&self, class: LineClass, line: u64, pc: u64, map: &TemperatureMap) -> Request {
        let addr = line * self.line_size;
        let (temperature, pc) = match class {
            LineClass::Instruction => (map.lookup(addr), addr),
            LineClass::Data => (Temperature::None, pc),
        };
        Request {
            line: LineId::new(line, class, temperature),
            pc,
            demand: false,
            costly: false,
        }
    }

    fn prefetch_into_l1(&mut self, class: LineClass, line: u64, pc: u64, map: &TemperatureMap) {
        if self.l1_mut(class).cache.contains(line) {
            return;
        }
        let req = self.prefetch_request(class, line, pc, map);
        if !self.l2.cache.contains(line) {
            self.fetch_below_l2(&req);
            self.fill_l2(&req, map);
        }
        self.fill_l1(class, &req, map);
        self.l1_mut(class).stats.prefetch_fills += 1;
    }

    fn prefetch_into_l2(&mut self, class: LineClass, line: u64, pc: u64, map: &TemperatureMap) {
        if self.l2.cache.contains(line) {
            return;
        }
        let req = self.prefetch_request(class, line, pc, map);
        self.fetch_below_l2(&req);
        self.fill_l2(&req, map);
    }

    /// Find the line below L2. Exclusive SLC hits hand the line up and drop
    /// it; other SLC modes allocate on a miss.
    fn fetch_below_l2(&mut self, req: &Request) -> ServiceLevel {
        let Some(slc) = self.slc.as_mut() else {
            return ServiceLevel::Memory;
        };
        let line = req.line.line;
        let hit = if req.demand {
            let hit = slc.cache.lookup(req);
            slc.stats.record(req.class(), hit, req.temperature());
            hit
        } else {
            slc.cache.contains(line)
        };
        if hit {
            if slc.config.inclusion == Inclusion::Exclusive {
                slc.cache.invalidate(line);
            }
            return ServiceLevel::Slc;
        }
        if slc.config.inclusion != Inclusion::Exclusive {
            let slc_req = Request {
                costly: false,
                ..*req
            };
            if let Some(victim) = slc.cache.fill(&slc_req) {
                let inclusive = slc.config.inclusion == Inclusion::Inclusive;
                self.note_slc_eviction(victim, inclusive);
            }
        }
        ServiceLevel::Memory
    }

    fn note_slc_eviction(&mut self, victim: Victim, inclusive: bool) {
        if let Some(slc) = self.slc.as_mut() {
            // SLC victims are tallied without a map lookup: no request carries them
            slc.stats.evictions.add(Temperature::None);
        }
        if inclusive {
            if self.l2.cache.invalidate(victim.line) {
                self.l2.stats.invalidations += 1;
            }
            self.back_invalidate_l1(victim.line);
        }
    }

    fn back_invalidate_l1(&mut self, line: u64) {
        for l1 in [&mut self.l1i, &mut self.l1d] {
            if l1.cache.invalidate(line) {
                l1.stats.invalidations += 1;
            }
        }
    }

    fn fill_l2(&mut self, req: &Request, map: &TemperatureMap) {
        if !req.demand {
            self.l2.stats.prefetch_fills += 1;
        }
        let Some(victim) = self.l2.cache.fill(req) else {
            return;
        };
        let t = self.temperature_of(map, &victim);
        self.l2.stats.evictions.add(t);
        if self.l2.config.inclusion == Inclusion::Inclusive {
            self.back_invalidate_l1(victim.line);
        }
        let Some(slc) = self.slc.as_mut() else {
            return;
        };
        if slc.config.inclusion == Inclusion::Exclusive && !slc.cache.contains(victim.line) {
            let victim_req = Request {
                line: LineId::new(victim.line, victim.class, Temperature::None),
                pc: victim.line * self.line_size,
                demand: false,
                costly: false,
            };
            if let Some(out) = slc.cache.fill(&victim_req) {
                let t = match out.class {
                    LineClass::Instruction => map.lookup(out.line * self.line_size),
                    LineClass::Data => Temperature::None,
                };
                slc.stats.evictions.add(t);
            }
        }
    }

    fn fill_l1(&mut self, class: LineClass, req: &Request, map: &TemperatureMap) {
        if let Some(victim) = self.l1_mut(class).cache.fill(req) {
            let t = self.temperature_of(map, &victim);
            self.l1_mut(class).stats.evictions.add(t);
        }
    }

    /// Every valid L1 line is also valid in L2 (when L2 is inclusive).
    pub fn check_inclusion(&self) -> std::result::Result<(), String> {
        if self.l2.config.inclusion != Inclusion::Inclusive {
            return Ok(());
        }
        for l1 in [&self.l1i, &self.l1d] {
            if let Some(line) = l1.cache.valid_lines().find(|&l| !self.l2.cache.contains(l)) {
                return Err(format!("{} holds line {line:#x} absent from L2", l1.stats.name));
            }
        }
        Ok(())
    }

    /// No line is valid in both L2 and an exclusive SLC.
    pub fn check_exclusion(&self) -> std::result::Result<(), String> {
        match &self.slc {
            Some(slc) if slc.config.inclusion == Inclusion::Exclusive => {
                match self.l2.cache.valid_lines().find(|&l| slc.cache.contains(l)) {
                    Some(line) => Err(format!("line {line:#x} valid in both L2 and SLC")),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn finish(self) -> SimResult {
        let retired = self.retired;
        let stamp = |mut level: Level| {
            level.stats.counters.retired_instructions = retired;
            level.stats
        };
        SimResult {
            retired_instructions: retired,
            l1i: stamp(self.l1i),
            l1d: stamp(self.l1d),
            l2: stamp(self.l2),
            slc: self.slc.map(stamp),
            service: self.service,
            miss_log: self.miss_log,
            l2_stream: self.l2_stream,
        }
    }
}

/// Replay a trace through the hierarchy.
pub fn simulate(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    config: &HierarchyConfig,
    seed: u64,
    options: SimOptions,
) -> Result<SimResult> {
    if trace.is_empty() {
        return Err(Error::Config("cannot simulate an empty trace".into()));
    }
    let mut h = Hierarchy::new(config, seed, options)?;
    for a in trace {
        h.access(a, map);
    }
    Ok(h.finish())
}

/// The demand stream that reaches L2 after L1 filtering.
pub fn l2_access_stream(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    config: &HierarchyConfig,
    seed: u64,
) -> Result<Vec<MemoryAccess>> {
    let options = SimOptions {
        record_l2_stream: true,
        ..SimOptions::default()
    };
    Ok(simulate(trace, map, config, seed, options)?.l2_stream)
}

/// Outcome of replaying a trace through one cache level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRun {
    pub hits: Vec<bool>,
    pub counters: ClassCounters,
}

impl LevelRun {
    pub fn misses(&self) -> u64 {
        self.counters.instruction.misses + self.counters.data.misses
    }
}

/// Replay a trace through a single cache with no levels above or below.
/// Every access is a demand access; instruction misses count as costly.
pub fn simulate_level(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    geometry: &CacheGeometry,
    policy: &PolicyConfig,
    seed: u64,
) -> LevelRun {
    let mut cache = Cache::new(*geometry, policy.build(geometry.set_count(), seed));
    let mut run = LevelRun {
        hits: Vec::with_capacity(trace.len()),
        counters: ClassCounters::default(),
    };
    for a in trace {
        let class = a.class();
        let temperature = if a.is_fetch() {
            run.counters.retired_instructions += 1;
            map.lookup(a.vaddr)
        } else {
            Temperature::None
        };
        let req = Request {
            line: LineId::new(geometry.line_of(a.vaddr), class, temperature),
            pc: a.pc,
            demand: true,
            costly: class == LineClass::Instruction,
        };
        let (hit, _) = cache.access(&req);
        run.counters.record(class, hit);
        run.hits.push(hit);
    }
    run
}
