use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lru::{least_recent, promote, remove_rank};
use super::{ReplacementPolicy, Request, WayMeta};

/// LRU with way-locking for lines flagged costly.
///
/// The original design marks lines that caused decode starvation; without a
/// core model, the cache's request carries a `costly` flag (set for demand
/// instruction misses by the hierarchy) and a fill takes a priority bit when
/// flagged and the set is under its quota. `probability` < 1 gates the bit
/// through a seeded coin flip, drawn only when a bit could be granted.
pub struct Emissary {
    priority_ways: usize,
    probability: f64,
    rng: ChaCha8Rng,
}

impl Emissary {
    pub fn new(priority_ways: usize, probability: f64, seed: u64) -> Self {
        Emissary {
            priority_ways,
            probability: probability.clamp(0.0, 1.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ReplacementPolicy for Emissary {
    fn name(&self) -> &'static str {
        "emissary"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        promote(ways, way);
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        least_recent(ways, |m| !m.priority)
            .or_else(|| least_recent(ways, |_| true))
            .expect("victim search on a set with no valid ways")
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        promote(ways, way);
        let held = ways
            .iter()
            .enumerate()
            .filter(|&(i, m)| i != way && m.valid && m.priority)
            .count();
        let granted = req.costly
            && held < self.priority_ways
            && (self.probability >= 1.0 || self.rng.gen_bool(self.probability));
        ways[way].priority = granted;
    }

    fn on_invalidate(&mut self, _set: usize, ways: &mut [WayMeta], way: usize) {
        remove_rank(ways, way);
        ways[way].priority = false;
    }
}
