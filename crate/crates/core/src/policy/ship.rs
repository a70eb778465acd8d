use super::rrip::rrip_victim;
use super::{ReplacementPolicy, Request, Rrpv, WayMeta};
use crate::model::{line_of, LineClass, DEFAULT_LINE_SIZE};

pub const SHCT_INDEX_BITS: u32 = 18;
/// 2^18 two-bit counters: 64 KiB of predictor state.
pub const SHCT_ENTRIES: usize = 1 << SHCT_INDEX_BITS;
const SHCT_MAX: u8 = 3;
/// Counters start weakly reused so cold signatures insert at Intermediate.
const SHCT_INIT: u8 = 1;

/// Low 18 bits of a multiplicative mix of the PC's line address.
pub fn ship_signature(pc: u64) -> u32 {
    let line = line_of(pc, DEFAULT_LINE_SIZE);
    let h = (line ^ (line >> 29)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ((h ^ (h >> 32)) & (SHCT_ENTRIES as u64 - 1)) as u32
}

/// Signature-based hit predictor over SRRIP, applied to instruction lines
/// only; data lines behave exactly as under SRRIP.
pub struct Ship {
    shct: Vec<u8>,
}

impl Default for Ship {
    fn default() -> Self {
        Self::new()
    }
}

impl Ship {
    pub fn new() -> Self {
        Ship {
            shct: vec![SHCT_INIT; SHCT_ENTRIES],
        }
    }

    pub fn counter(&self, signature: u32) -> u8 {
        self.shct[signature as usize]
    }

    pub fn set_counter(&mut self, signature: u32, value: u8) {
        self.shct[signature as usize] = value.min(SHCT_MAX);
    }

    /// Training on eviction: an unreused line weakens its signature.
    pub fn train_on_evict(&mut self, signature: u32, reused: bool) {
        if !reused {
            let c = &mut self.shct[signature as usize];
            *c = c.saturating_sub(1);
        }
    }

    fn train_on_hit(&mut self, signature: u32) {
        let c = &mut self.shct[signature as usize];
        *c = (*c + 1).min(SHCT_MAX);
    }
}

impl ReplacementPolicy for Ship {
    fn name(&self) -> &'static str {
        "ship"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        let m = &mut ways[way];
        m.rrpv = Rrpv::IMMEDIATE;
        if m.class == LineClass::Instruction {
            m.reused = true;
            let sig = m.signature;
            self.train_on_hit(sig);
        }
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_evict(&mut self, _set: usize, ways: &[WayMeta], way: usize) {
        let m = &ways[way];
        if m.class == LineClass::Instruction {
            self.train_on_evict(m.signature, m.reused);
        }
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        let m = &mut ways[way];
        m.reused = false;
        match req.class() {
            LineClass::Instruction => {
                m.signature = ship_signature(req.pc);
                m.rrpv = if self.shct[m.signature as usize] == 0 {
                    Rrpv::DISTANT
                } else {
                    Rrpv::INTERMEDIATE
                };
            }
            LineClass::Data => {
                m.signature = 0;
                m.rrpv = Rrpv::INTERMEDIATE;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LineId, Temperature};

    fn fetch(addr: u64) -> Request {
        Request::demand(
            LineId::new(line_of(addr, 64), LineClass::Instruction, Temperature::None),
            addr,
        )
    }

    #[test]
    fn table_is_64_kib() {
        assert_eq!(SHCT_ENTRIES * 2 / 8, 64 * 1024);
        assert!((0..10_000u64).all(|pc| (ship_signature(pc * 64) as usize) < SHCT_ENTRIES));
    }

    #[test]
    fn signature_is_per_line() {
        assert_eq!(ship_signature(0x4000), ship_signature(0x403f));
        assert_ne!(ship_signature(0x4000), ship_signature(0x4040));
    }

    #[test]
    fn eviction_training() {
        let mut s = Ship::new();
        s.set_counter(5, 2);
        s.train_on_evict(5, false);
        assert_eq!(s.counter(5), 1);
        s.set_counter(5, 0);
        s.train_on_evict(5, false);
        assert_eq!(s.counter(5), 0);
    }

    #[test]
    fn hit_then_evict() {
        let mut s = Ship::new();
        let req = fetch(0x8000);
        let sig = ship_signature(0x8000);
        s.set_counter(sig, 1);
        let mut ways = vec![WayMeta {
            valid: true,
            class: LineClass::Instruction,
            ..WayMeta::default()
        }];
        s.on_fill(0, &mut ways, 0, &req);
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        s.on_hit(0, &mut ways, 0, &req);
        s.on_evict(0, &ways, 0);
        assert_eq!(s.counter(sig), 2);
    }

    #[test]
    fn dead_signature_inserts_distant() {
        let mut s = Ship::new();
        let req = fetch(0x8000);
        s.set_counter(ship_signature(0x8000), 0);
        let mut ways = vec![WayMeta {
            valid: true,
            class: LineClass::Instruction,
            ..WayMeta::default()
        }];
        s.on_fill(0, &mut ways, 0, &req);
        assert_eq!(ways[0].rrpv, Rrpv::DISTANT);
    }
}
