//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here reuses the simulator's policy code: sets are plain
//! vectors, recency is an explicit MRU-first list and RRIP aging is a loop.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trrip_core::policy::ship_signature;
use trrip_core::{AccessKind, LineClass, MemoryAccess, PolicyConfig, ProfiledBlock, Temperature, TemperatureMap};

const DISTANT: u8 = 3;

#[derive(Clone, Copy, Debug)]
struct Entry {
    line: u64,
    class: LineClass,
    rrpv: u8,
    priority: bool,
    signature: u32,
    reused: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Lru,
    Srrip,
    Brrip,
    Drrip,
    ClipA,
    ClipB,
    ClipDuel,
    Ship,
    Emissary { quota: usize, probability: f64 },
    Trrip { two: bool },
}

/// Straightforward model of one cache level under one policy.
pub struct RefCache {
    kind: Kind,
    sets: usize,
    ways: usize,
    line_bytes: u64,
    slots: Vec<Vec<Option<Entry>>>,
    /// Way indices, most recent first.
    order: Vec<Vec<usize>>,
    psel: i32,
    rng: ChaCha8Rng,
    shct: Vec<u8>,
}

impl RefCache {
    pub fn new(policy: &PolicyConfig, sets: usize, ways: usize, seed: u64) -> Self {
        let kind = match *policy {
            PolicyConfig::Lru => Kind::Lru,
            PolicyConfig::Srrip => Kind::Srrip,
            PolicyConfig::Brrip => Kind::Brrip,
            PolicyConfig::Drrip => Kind::Drrip,
            PolicyConfig::Clip => Kind::ClipDuel,
            PolicyConfig::ClipA => Kind::ClipA,
            PolicyConfig::ClipB => Kind::ClipB,
            PolicyConfig::Ship => Kind::Ship,
            PolicyConfig::Emissary {
                priority_ways,
                probability,
            } => Kind::Emissary {
                quota: priority_ways as usize,
                probability,
            },
            PolicyConfig::Trrip1 => Kind::Trrip { two: false },
            PolicyConfig::Trrip2 => Kind::Trrip { two: true },
        };
        RefCache {
            kind,
            sets,
            ways,
            line_bytes: 64,
            slots: vec![vec![None; ways]; sets],
            order: vec![Vec::new(); sets],
            psel: 511,
            rng: ChaCha8Rng::seed_from_u64(seed),
            shct: if kind == Kind::Ship { vec![1; 1 << 18] } else { Vec::new() },
        }
    }

    /// 0 leads for the first policy, 1 for the second, 2 follows.
    fn role(&self, set: usize) -> u8 {
        let stride = std::cmp::max(2, self.sets / 32);
        match set % stride {
            0 => 0,
            1 => 1,
            _ => 2,
        }
    }

    fn second_policy(&self, set: usize) -> bool {
        match self.role(set) {
            0 => false,
            1 => true,
            _ => self.psel >= 512,
        }
    }

    fn touch(&mut self, set: usize, way: usize) {
        self.order[set].retain(|&w| w != way);
        self.order[set].insert(0, way);
    }

    fn bimodal(&mut self) -> u8 {
        if self.rng.gen_ratio(1, 32) {
            2
        } else {
            3
        }
    }

    /// Replay one access; returns whether it hit.
    pub fn access(&mut self, a: &MemoryAccess, map: &TemperatureMap) -> bool {
        let line = a.vaddr / self.line_bytes;
        let set = (line % self.sets as u64) as usize;
        let class = if a.kind == AccessKind::InstrFetch {
            LineClass::Instruction
        } else {
            LineClass::Data
        };
        let temp = if class == LineClass::Instruction {
            map.lookup(a.vaddr)
        } else {
            Temperature::None
        };
        let found = (0..self.ways).find(|&w| matches!(self.slots[set][w], Some(e) if e.line == line));
        if let Some(way) = found {
            self.on_hit(set, way, class, temp);
            return true;
        }
        if matches!(self.kind, Kind::Drrip | Kind::ClipDuel) {
            match self.role(set) {
                0 => self.psel = (self.psel + 1).min(1023),
                1 => self.psel = (self.psel - 1).max(0),
                _ => {}
            }
        }
        let way = match (0..self.ways).find(|&w| self.slots[set][w].is_none()) {
            Some(w) => w,
            None => {
                let w = self.victim(set);
                let old = self.slots[set][w].unwrap();
                if self.kind == Kind::Ship && old.class == LineClass::Instruction && !old.reused {
                    let c = &mut self.shct[old.signature as usize];
                    *c = c.saturating_sub(1);
                }
                w
            }
        };
        self.fill(set, way, line, class, temp, a.pc);
        false
    }

    fn on_hit(&mut self, set: usize, way: usize, class: LineClass, temp: Temperature) {
        let kind = self.kind;
        let second = self.second_policy(set);
        let e = self.slots[set][way].as_mut().unwrap();
        match kind {
            Kind::Lru | Kind::Emissary { .. } => {
                self.touch(set, way);
            }
            Kind::Srrip | Kind::Brrip | Kind::Drrip => e.rrpv = 0,
            Kind::ClipA => e.rrpv = 0,
            Kind::ClipB | Kind::ClipDuel => {
                let b = kind == Kind::ClipB || second;
                e.rrpv = if class == LineClass::Data && b {
                    std::cmp::max(e.rrpv.saturating_sub(1), 1)
                } else {
                    0
                };
            }
            Kind::Ship => {
                e.rrpv = 0;
                if e.class == LineClass::Instruction {
                    e.reused = true;
                    let c = &mut self.shct[e.signature as usize];
                    *c = (*c + 1).min(3);
                }
            }
            Kind::Trrip { two } => {
                e.rrpv = match temp {
                    Temperature::Hot => 0,
                    Temperature::Warm | Temperature::Cold if two => e.rrpv.saturating_sub(1),
                    _ => 0,
                };
            }
        }
    }

    fn victim(&mut self, set: usize) -> usize {
        match self.kind {
            Kind::Lru => *self.order[set].last().unwrap(),
            Kind::Emissary { .. } => {
                let slots = &self.slots[set];
                let plain = self.order[set].iter().rev().find(|&&w| !slots[w].unwrap().priority);
                *plain.unwrap_or_else(|| self.order[set].last().unwrap())
            }
            _ => loop {
                if let Some(w) = (0..self.ways).find(|&w| self.slots[set][w].unwrap().rrpv == DISTANT) {
                    return w;
                }
                for e in self.slots[set].iter_mut().flatten() {
                    e.rrpv = (e.rrpv + 1).min(DISTANT);
                }
            },
        }
    }

    fn fill(&mut self, set: usize, way: usize, line: u64, class: LineClass, temp: Temperature, pc: u64) {
        let mut e = Entry {
            line,
            class,
            rrpv: 2,
            priority: false,
            signature: 0,
            reused: false,
        };
        let inst = class == LineClass::Instruction;
        match self.kind {
            Kind::Lru => {}
            Kind::Srrip => {}
            Kind::Brrip => e.rrpv = self.bimodal(),
            Kind::Drrip => {
                if self.second_policy(set) {
                    e.rrpv = self.bimodal();
                }
            }
            Kind::ClipA | Kind::ClipB | Kind::ClipDuel => e.rrpv = if inst { 0 } else { 2 },
            Kind::Ship => {
                if inst {
                    e.signature = ship_signature(pc);
                    if self.shct[e.signature as usize] == 0 {
                        e.rrpv = 3;
                    }
                }
            }
            Kind::Emissary { quota, probability } => {
                let held = (0..self.ways)
                    .filter(|&w| w != way)
                    .filter(|&w| matches!(self.slots[set][w], Some(o) if o.priority))
                    .count();
                e.priority = inst && held < quota && (probability >= 1.0 || self.rng.gen_bool(probability));
            }
            Kind::Trrip { two } => {
                e.rrpv = match temp {
                    Temperature::Hot => 0,
                    Temperature::Warm if two => 1,
                    _ => 2,
                };
            }
        }
        self.slots[set][way] = Some(e);
        if matches!(self.kind, Kind::Lru | Kind::Emissary { .. }) {
            self.touch(set, way);
        }
    }
}

pub fn reference_hits(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    policy: &PolicyConfig,
    sets: usize,
    ways: usize,
    seed: u64,
) -> Vec<bool> {
    let mut c = RefCache::new(policy, sets, ways, seed);
    trace.iter().map(|a| c.access(a, map)).collect()
}

/// Every policy configuration worth checking, including a probabilistic
/// Emissary so its random stream is exercised.
pub fn policies_under_test() -> Vec<PolicyConfig> {
    let mut all = PolicyConfig::all();
    all.push(PolicyConfig::Emissary {
        priority_ways: 2,
        probability: 0.5,
    });
    all
}

/// Random accesses over `pool` lines. Pages are one line wide in the maps
/// built by [`random_line_map`], so temperatures vary line by line.
pub fn random_trace(rng: &mut impl Rng, len: usize, pool: u64) -> Vec<MemoryAccess> {
    (0..len)
        .map(|_| {
            let vaddr = rng.gen_range(0..pool) * 64 + rng.gen_range(0..64);
            match rng.gen_range(0..10) {
                0..=5 => MemoryAccess::fetch(vaddr),
                6..=8 => MemoryAccess::load(vaddr, rng.gen_range(0..pool) * 64),
                _ => MemoryAccess::store(vaddr, rng.gen_range(0..pool) * 64),
            }
        })
        .collect()
}

pub fn random_line_map(rng: &mut impl Rng, pool: u64) -> TemperatureMap {
    let mut map = TemperatureMap::empty(64);
    for page in 0..pool {
        let t = Temperature::ALL[rng.gen_range(0..4)];
        if t != Temperature::None {
            map.pages.insert(page, t);
        }
    }
    map
}

/// Map with every page touched by an instruction fetch marked hot.
pub fn all_code_hot(trace: &[MemoryAccess], page_size: u64) -> TemperatureMap {
    let mut map = TemperatureMap::empty(page_size);
    for a in trace.iter().filter(|a| a.is_fetch()) {
        map.pages.insert(a.vaddr / page_size, Temperature::Hot);
    }
    map
}

/// Reuse distances by definition: for each hot fetch, scan back through its
/// set to the previous touch of the same line and count the distinct lines in
/// between. In hot-only mode a line counts when its latest touch before the
/// reuse was a hot fetch.
pub fn brute_force_reuse(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    sets: u64,
    hot_only: bool,
) -> Vec<(usize, u64)> {
    let line = |a: &MemoryAccess| a.vaddr / 64;
    let set = |a: &MemoryAccess| line(a) % sets;
    let hot = |a: &MemoryAccess| a.is_fetch() && map.lookup(a.vaddr) == Temperature::Hot;
    let mut out = Vec::new();
    for (i, a) in trace.iter().enumerate() {
        if !hot(a) {
            continue;
        }
        let mut seen: Vec<u64> = Vec::new();
        let mut distinct = 0;
        let mut found = false;
        for b in trace[..i].iter().rev().filter(|b| set(b) == set(a)) {
            if line(b) == line(a) {
                found = true;
                break;
            }
            if seen.contains(&line(b)) {
                continue;
            }
            // `b` is the latest touch of its line before `i`
            seen.push(line(b));
            if !hot_only || hot(b) {
                distinct += 1;
            }
        }
        if found {
            out.push((i, distinct));
        }
    }
    out
}

/// Threshold count by its defining property: the largest executed count `c`
/// such that blocks with count at least `c` carry at least
/// `ceil(total * num / den)` of the profile mass.
pub fn threshold_oracle(counts: &[u64], num: u64, den: u64) -> Option<u64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let needed = std::cmp::max(1, (total * num).div_ceil(den));
    counts
        .iter()
        .copied()
        .filter(|&c| c > 0)
        .filter(|&c| counts.iter().filter(|&&d| d >= c).sum::<u64>() >= needed)
        .max()
}

pub fn classify_oracle(counts: &[u64], hot: (u64, u64), cold: (u64, u64)) -> Option<Vec<Temperature>> {
    let h = threshold_oracle(counts, hot.0, hot.1)?;
    let c = threshold_oracle(counts, cold.0, cold.1)?;
    Some(
        counts
            .iter()
            .map(|&n| {
                if n == 0 {
                    Temperature::Cold
                } else if n >= h {
                    Temperature::Hot
                } else if n >= c {
                    Temperature::Warm
                } else {
                    Temperature::Cold
                }
            })
            .collect(),
    )
}

pub fn blocks_of(counts: &[u64]) -> Vec<ProfiledBlock> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| ProfiledBlock::new(format!("b{i}"), 16 * (i as u64 + 1), c))
        .collect()
}

/// Call `f` on every non-increasing sequence of 1..=`max_len` values drawn
/// from `0..=max_count`: one representative per multiset of counts.
pub fn for_each_count_multiset(max_len: usize, max_count: u64, mut f: impl FnMut(&[u64])) {
    fn rec(buf: &mut Vec<u64>, max_len: usize, ceiling: u64, f: &mut dyn FnMut(&[u64])) {
        if !buf.is_empty() {
            f(buf);
        }
        if buf.len() == max_len {
            return;
        }
        for v in (0..=ceiling).rev() {
            buf.push(v);
            rec(buf, max_len, v, f);
            buf.pop();
        }
    }
    rec(&mut Vec::new(), max_len, max_count, &mut f);
}
