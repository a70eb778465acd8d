//! Replacement policies.
//!
//! Every policy implements [`ReplacementPolicy`], a set of hooks the cache
//! calls on hits, misses, victim selection, evictions, fills and explicit
//! invalidations. Per-way metadata lives in [`WayMeta`] and is owned by the
//! cache; policies keep only global state (PSEL, SHCT, RNG streams).
//!
//! Temperature is never stored per line. It arrives with each [`Request`] and
//! only influences the RRPV the request leaves behind.

mod belady;
mod dueling;
mod emissary;
mod lru;
mod rrip;
mod ship;

pub use belady::{belady_victim, simulate_belady};
pub use dueling::{DuelRole, SetDueling, PSEL_MAX, PSEL_THRESHOLD};
pub use emissary::Emissary;
pub use lru::Lru;
pub use rrip::{rrip_victim, Bimodal, Brrip, Clip, ClipMode, Drrip, Srrip, Trrip, TrripVariant, BIMODAL_DENOMINATOR};
pub use ship::{ship_signature, Ship, SHCT_ENTRIES, SHCT_INDEX_BITS};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{LineClass, LineId, Temperature};

/// Re-reference prediction value, 2 bits wide.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rrpv(u8);

impl Rrpv {
    pub const IMMEDIATE: Rrpv = Rrpv(0);
    pub const NEAR: Rrpv = Rrpv(1);
    pub const INTERMEDIATE: Rrpv = Rrpv(2);
    pub const DISTANT: Rrpv = Rrpv(3);
    pub const BITS: u32 = 2;

    pub fn new(value: u8) -> Self {
        assert!(value <= Self::DISTANT.0, "rrpv {value} exceeds {}", Self::DISTANT.0);
        Rrpv(value)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// One step closer to eviction, saturating at Distant.
    pub fn aged(self) -> Self {
        Rrpv((self.0 + 1).min(Self::DISTANT.0))
    }

    /// One step closer to Immediate, never below `floor`.
    pub fn decremented(self, floor: Rrpv) -> Self {
        Rrpv(self.0.saturating_sub(1).max(floor.0))
    }
}

pub const INVALID_RANK: u16 = u16::MAX;

/// Per-way replacement metadata. Deliberately has no temperature field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WayMeta {
    pub valid: bool,
    pub line: u64,
    pub class: LineClass,
    pub rrpv: Rrpv,
    /// 0 is most recent. Invalid ways hold [`INVALID_RANK`].
    pub recency: u16,
    pub priority: bool,
    pub signature: u32,
    pub reused: bool,
}

impl Default for WayMeta {
    fn default() -> Self {
        WayMeta {
            valid: false,
            line: 0,
            class: LineClass::Data,
            rrpv: Rrpv::DISTANT,
            recency: INVALID_RANK,
            priority: false,
            signature: 0,
            reused: false,
        }
    }
}

/// What a cache level sees of a memory request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub line: LineId,
    pub pc: u64,
    /// False for prefetches and victim fills.
    pub demand: bool,
    /// Emissary's starvation proxy.
    pub costly: bool,
}

impl Request {
    pub fn demand(line: LineId, pc: u64) -> Self {
        Request {
            line,
            pc,
            demand: true,
            costly: false,
        }
    }

    pub fn class(&self) -> LineClass {
        self.line.class
    }

    pub fn temperature(&self) -> Temperature {
        self.line.temperature
    }
}

pub trait ReplacementPolicy: Send {
    fn name(&self) -> &'static str;

    fn on_hit(&mut self, set: usize, ways: &mut [WayMeta], way: usize, req: &Request);

    /// Called once per lookup miss, before any victim is chosen.
    fn on_miss(&mut self, _set: usize, _req: &Request) {}

    /// Pick a victim among the (all valid) ways of `set`. RRIP-family
    /// policies age the set while searching.
    fn choose_victim(&mut self, set: usize, ways: &mut [WayMeta]) -> usize;

    /// Called with the victim still in place.
    fn on_evict(&mut self, _set: usize, _ways: &[WayMeta], _way: usize) {}

    /// Called after the cache has written line, class and valid bit.
    fn on_fill(&mut self, set: usize, ways: &mut [WayMeta], way: usize, req: &Request);

    /// Called before the cache clears the way.
    fn on_invalidate(&mut self, _set: usize, _ways: &mut [WayMeta], _way: usize) {}
}

/// Policy selector plus parameters, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum PolicyConfig {
    #[serde(rename = "lru")]
    Lru,
    #[serde(rename = "srrip")]
    Srrip,
    #[serde(rename = "brrip")]
    Brrip,
    #[serde(rename = "drrip")]
    Drrip,
    /// CLIP with set dueling between its two variants.
    #[serde(rename = "clip")]
    Clip,
    #[serde(rename = "clip-a")]
    ClipA,
    #[serde(rename = "clip-b")]
    ClipB,
    #[serde(rename = "ship")]
    Ship,
    #[serde(rename = "emissary")]
    Emissary {
        #[serde(default = "default_priority_ways")]
        priority_ways: u32,
        #[serde(default = "default_priority_probability")]
        probability: f64,
    },
    #[serde(rename = "trrip-1")]
    Trrip1,
    #[serde(rename = "trrip-2")]
    Trrip2,
}

fn default_priority_ways() -> u32 {
    4
}

fn default_priority_probability() -> f64 {
    1.0
}

impl PolicyConfig {
    pub const NAMES: [&'static str; 11] = [
        "lru", "srrip", "brrip", "drrip", "clip", "clip-a", "clip-b", "ship", "emissary", "trrip-1",
        "trrip-2",
    ];

    pub fn emissary() -> Self {
        PolicyConfig::Emissary {
            priority_ways: default_priority_ways(),
            probability: default_priority_probability(),
        }
    }

    pub fn all() -> Vec<PolicyConfig> {
        Self::NAMES.iter().map(|n| n.parse().unwrap()).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::Lru => "lru",
            PolicyConfig::Srrip => "srrip",
            PolicyConfig::Brrip => "brrip",
            PolicyConfig::Drrip => "drrip",
            PolicyConfig::Clip => "clip",
            PolicyConfig::ClipA => "clip-a",
            PolicyConfig::ClipB => "clip-b",
            PolicyConfig::Ship => "ship",
            PolicyConfig::Emissary { .. } => "emissary",
            PolicyConfig::Trrip1 => "trrip-1",
            PolicyConfig::Trrip2 => "trrip-2",
        }
    }

    pub fn is_rrip_family(&self) -> bool {
        !matches!(self, PolicyConfig::Lru | PolicyConfig::Emissary { .. })
    }

    /// Instantiate for a cache with `set_count` sets. `seed` feeds any
    /// pseudo-random stream the policy draws from.
    pub fn build(&self, set_count: usize, seed: u64) -> Box<dyn ReplacementPolicy> {
        match *self {
            PolicyConfig::Lru => Box::new(Lru),
            PolicyConfig::Srrip => Box::new(Srrip),
            PolicyConfig::Brrip => Box::new(Brrip::new(seed)),
            PolicyConfig::Drrip => Box::new(Drrip::new(set_count, seed)),
            PolicyConfig::Clip => Box::new(Clip::new(ClipMode::Dueling, set_count)),
            PolicyConfig::ClipA => Box::new(Clip::new(ClipMode::A, set_count)),
            PolicyConfig::ClipB => Box::new(Clip::new(ClipMode::B, set_count)),
            PolicyConfig::Ship => Box::new(Ship::new()),
            PolicyConfig::Emissary {
                priority_ways,
                probability,
            } => Box::new(Emissary::new(priority_ways as usize, probability, seed)),
            PolicyConfig::Trrip1 => Box::new(Trrip::new(TrripVariant::One)),
            PolicyConfig::Trrip2 => Box::new(Trrip::new(TrripVariant::Two)),
        }
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownPolicy(pub String);

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown policy {:?}; valid policies: {}",
            self.0,
            PolicyConfig::NAMES.join(", ")
        )
    }
}

impl std::error::Error for UnknownPolicy {}

impl FromStr for PolicyConfig {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "lru" => PolicyConfig::Lru,
            "srrip" => PolicyConfig::Srrip,
            "brrip" => PolicyConfig::Brrip,
            "drrip" => PolicyConfig::Drrip,
            "clip" => PolicyConfig::Clip,
            "clip-a" => PolicyConfig::ClipA,
            "clip-b" => PolicyConfig::ClipB,
            "ship" => PolicyConfig::Ship,
            "emissary" => PolicyConfig::emissary(),
            "trrip-1" | "trrip1" => PolicyConfig::Trrip1,
            "trrip-2" | "trrip2" => PolicyConfig::Trrip2,
            _ => return Err(UnknownPolicy(s.to_string())),
        })
    }
}
