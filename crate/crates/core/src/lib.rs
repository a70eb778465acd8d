//! Trace-driven cache hierarchy simulator with temperature-guided RRIP
//! replacement, baseline policies, trace tooling and offline analyses.

pub mod analysis;
pub mod cache;
pub mod error;
pub mod experiment;
pub mod hierarchy;
pub mod model;
pub mod policy;
pub mod temperature;
pub mod trace;

pub use cache::{Cache, Victim};
pub use error::{Error, Result, TraceError};
pub use hierarchy::{
    simulate, simulate_level, HierarchyConfig, Inclusion, LevelConfig, ServiceLevel, SimOptions,
    SimResult,
};
pub use model::{
    AccessKind, CacheGeometry, ClassCounters, Counts, LineClass, LineId, MemoryAccess, Temperature,
};
pub use policy::{PolicyConfig, ReplacementPolicy, Request};
pub use temperature::{classify, OverlapMode, ProfiledBlock, TemperatureMap, ThresholdParams};
