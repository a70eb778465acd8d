use super::{ReplacementPolicy, Request, WayMeta, INVALID_RANK};

/// Move `way` to the most-recent position. Valid ways that were more recent
/// than it slide back by one, so ranks stay a permutation of the valid ways.
pub(crate) fn promote(ways: &mut [WayMeta], way: usize) {
    let old = ways[way].recency;
    for (i, m) in ways.iter_mut().enumerate() {
        if i != way && m.valid && m.recency < old {
            m.recency += 1;
        }
    }
    ways[way].recency = 0;
}

/// Close the gap left by removing `way` from the recency order.
pub(crate) fn remove_rank(ways: &mut [WayMeta], way: usize) {
    let old = ways[way].recency;
    for (i, m) in ways.iter_mut().enumerate() {
        if i != way && m.valid && m.recency > old && m.recency != INVALID_RANK {
            m.recency -= 1;
        }
    }
    ways[way].recency = INVALID_RANK;
}

/// Least-recent way among those accepted by `eligible`.
pub(crate) fn least_recent(ways: &[WayMeta], eligible: impl Fn(&WayMeta) -> bool) -> Option<usize> {
    ways.iter()
        .enumerate()
        .filter(|(_, m)| m.valid && eligible(m))
        .max_by_key(|(i, m)| (m.recency, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Lru;

impl ReplacementPolicy for Lru {
    fn name(&self) -> &'static str {
        "lru"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        promote(ways, way);
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        least_recent(ways, |_| true).expect("victim search on a set with no valid ways")
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        promote(ways, way);
    }

    fn on_invalidate(&mut self, _set: usize, ways: &mut [WayMeta], way: usize) {
        remove_rank(ways, way);
    }
}
