//! A single set-associative cache level driven by a pluggable policy.

use crate::model::{CacheGeometry, LineClass};
use crate::policy::{ReplacementPolicy, Request, WayMeta};

/// A line pushed out of the cache by a fill.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Victim {
    pub line: u64,
    pub class: LineClass,
}

pub struct Cache {
    geometry: CacheGeometry,
    set_count: usize,
    ways: usize,
    meta: Vec<WayMeta>,
    policy: Box<dyn ReplacementPolicy>,
}

impl Cache {
    pub fn new(geometry: CacheGeometry, policy: Box<dyn ReplacementPolicy>) -> Self {
        let set_count = geometry.set_count();
        let ways = geometry.ways();
        Cache {
            geometry,
            set_count,
            ways,
            meta: vec![WayMeta::default(); set_count * ways],
            policy,
        }
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geometry
    }

    pub fn policy_name(&self) -> &'static str {
        self.policy.name()
    }

    pub fn set_of(&self, line: u64) -> usize {
        (line & (self.set_count as u64 - 1)) as usize
    }

    pub fn set(&self, set: usize) -> &[WayMeta] {
        &self.meta[set * self.ways..(set + 1) * self.ways]
    }

    pub fn sets(&self) -> impl Iterator<Item = &[WayMeta]> {
        self.meta.chunks_exact(self.ways)
    }

    fn split(&mut self, set: usize) -> (&mut dyn ReplacementPolicy, &mut [WayMeta]) {
        let ways = &mut self.meta[set * self.ways..(set + 1) * self.ways];
        (self.policy.as_mut(), ways)
    }

    pub fn find(&self, line: u64) -> Option<usize> {
        self.set(self.set_of(line))
            .iter()
            .position(|m| m.valid && m.line == line)
    }

    pub fn contains(&self, line: u64) -> bool {
        self.find(line).is_some()
    }

    /// Tag check. A hit updates replacement state; a miss notifies the
    /// policy but allocates nothing.
    pub fn lookup(&mut self, req: &Request) -> bool {
        let set = self.set_of(req.line.line);
        let found = self.find(req.line.line);
        let (policy, ways) = self.split(set);
        match found {
            Some(way) => {
                policy.on_hit(set, ways, way, req);
                true
            }
            None => {
                policy.on_miss(set, req);
                false
            }
        }
    }

    /// Allocate `req`'s line, which must be absent. Invalid ways are used
    /// first (lowest index); otherwise the policy picks a victim.
    pub fn fill(&mut self, req: &Request) -> Option<Victim> {
        let line = req.line.line;
        debug_assert!(!self.contains(line), "fill of resident line {line:#x}");
        let set = self.set_of(line);
        let (policy, ways) = self.split(set);
        let mut evicted = None;
        let way = match ways.iter().position(|m| !m.valid) {
            Some(w) => w,
            None => {
                let w = policy.choose_victim(set, ways);
                policy.on_evict(set, ways, w);
                evicted = Some(Victim {
                    line: ways[w].line,
                    class: ways[w].class,
                });
                w
            }
        };
        let m = &mut ways[way];
        m.valid = true;
        m.line = line;
        m.class = req.line.class;
        m.priority = false;
        policy.on_fill(set, ways, way, req);
        evicted
    }

    /// Lookup, allocating on a miss.
    pub fn access(&mut self, req: &Request) -> (bool, Option<Victim>) {
        if self.lookup(req) {
            (true, None)
        } else {
            (false, self.fill(req))
        }
    }

    /// Drop `line` if present. Returns whether it was.
    pub fn invalidate(&mut self, line: u64) -> bool {
        let Some(way) = self.find(line) else {
            return false;
        };
        let set = self.set_of(line);
        let (policy, ways) = self.split(set);
        policy.on_invalidate(set, ways, way);
        ways[way] = WayMeta::default();
        true
    }

    pub fn valid_lines(&self) -> impl Iterator<Item = u64> + '_ {
        self.meta.iter().filter(|m| m.valid).map(|m| m.line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LineId, Temperature};
    use crate::policy::PolicyConfig;

    fn req(line: u64) -> Request {
        Request::demand(LineId::new(line, LineClass::Data, Temperature::None), 0)
    }

    #[test]
    fn fills_invalid_ways_first() {
        let g = CacheGeometry::with_sets(1, 4).unwrap();
        let mut c = Cache::new(g, PolicyConfig::Lru.build(1, 0));
        for l in 0..4 {
            assert_eq!(c.access(&req(l)), (false, None));
        }
        assert_eq!(c.access(&req(2)), (true, None));
        let (hit, victim) = c.access(&req(9));
        assert!(!hit);
        assert_eq!(victim.unwrap().line, 0);
    }

    #[test]
    fn invalidate_then_refill_reuses_the_hole() {
        let g = CacheGeometry::with_sets(1, 4).unwrap();
        let mut c = Cache::new(g, PolicyConfig::Lru.build(1, 0));
        for l in 0..4 {
            c.access(&req(l));
        }
        assert!(c.invalidate(1));
        assert!(!c.invalidate(1));
        assert_eq!(c.access(&req(7)), (false, None));
        assert_eq!(c.set(0)[1].line, 7);
        let mut ranks: Vec<u16> = c.set(0).iter().map(|m| m.recency).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lines_map_to_sets() {
        let g = CacheGeometry::with_sets(4, 2).unwrap();
        let mut c = Cache::new(g, PolicyConfig::Srrip.build(4, 0));
        c.access(&req(5));
        assert_eq!(c.set_of(5), 1);
        assert!(c.set(1).iter().any(|m| m.valid && m.line == 5));
        assert!(c.contains(5));
        assert_eq!(c.valid_lines().collect::<Vec<_>>(), vec![5]);
    }
}
