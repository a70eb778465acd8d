use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dueling::SetDueling;
use super::{ReplacementPolicy, Request, Rrpv, WayMeta};
use crate::model::{LineClass, Temperature};

/// BRRIP inserts at Intermediate once every this many fills on average.
pub const BIMODAL_DENOMINATOR: u32 = 32;

/// Lowest-index way at Distant; if none, age every way by one and retry.
/// Terminates within `DISTANT` rounds.
pub fn rrip_victim(ways: &mut [WayMeta]) -> usize {
    loop {
        if let Some(w) = ways.iter().position(|m| m.rrpv == Rrpv::DISTANT) {
            return w;
        }
        for m in ways.iter_mut() {
            m.rrpv = m.rrpv.aged();
        }
    }
}

/// Seeded source for bimodal insertion: one draw per bimodal fill.
#[derive(Clone, Debug)]
pub struct Bimodal {
    rng: ChaCha8Rng,
}

impl Bimodal {
    pub fn new(seed: u64) -> Self {
        Bimodal {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn insertion(&mut self) -> Rrpv {
        if self.rng.gen_ratio(1, BIMODAL_DENOMINATOR) {
            Rrpv::INTERMEDIATE
        } else {
            Rrpv::DISTANT
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Srrip;

impl ReplacementPolicy for Srrip {
    fn name(&self) -> &'static str {
        "srrip"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = Rrpv::IMMEDIATE;
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = Rrpv::INTERMEDIATE;
    }
}

pub struct Brrip {
    bimodal: Bimodal,
}

impl Brrip {
    pub fn new(seed: u64) -> Self {
        Brrip {
            bimodal: Bimodal::new(seed),
        }
    }
}

impl ReplacementPolicy for Brrip {
    fn name(&self) -> &'static str {
        "brrip"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = Rrpv::IMMEDIATE;
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = self.bimodal.insertion();
    }
}

/// SRRIP (policy A) against BRRIP (policy B).
pub struct Drrip {
    dueling: SetDueling,
    bimodal: Bimodal,
}

impl Drrip {
    pub fn new(set_count: usize, seed: u64) -> Self {
        Drrip {
            dueling: SetDueling::new(set_count),
            bimodal: Bimodal::new(seed),
        }
    }

    pub fn dueling(&self) -> &SetDueling {
        &self.dueling
    }
}

impl ReplacementPolicy for Drrip {
    fn name(&self) -> &'static str {
        "drrip"
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = Rrpv::IMMEDIATE;
    }

    fn on_miss(&mut self, set: usize, req: &Request) {
        if req.demand {
            self.dueling.record_miss(set);
        }
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_fill(&mut self, set: usize, ways: &mut [WayMeta], way: usize, _req: &Request) {
        ways[way].rrpv = if self.dueling.uses_b(set) {
            self.bimodal.insertion()
        } else {
            Rrpv::INTERMEDIATE
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClipMode {
    /// Instruction lines inserted at Immediate; all hits promote to Immediate.
    A,
    /// As A, but data hits only step down to Near.
    B,
    /// A and B dueling over leader sets.
    Dueling,
}

/// Code line preservation: instruction fills go straight to Immediate, data
/// fills follow SRRIP.
pub struct Clip {
    mode: ClipMode,
    dueling: SetDueling,
}

impl Clip {
    pub fn new(mode: ClipMode, set_count: usize) -> Self {
        Clip {
            mode,
            dueling: SetDueling::new(set_count),
        }
    }

    fn variant_b(&self, set: usize) -> bool {
        match self.mode {
            ClipMode::A => false,
            ClipMode::B => true,
            ClipMode::Dueling => self.dueling.uses_b(set),
        }
    }
}

impl ReplacementPolicy for Clip {
    fn name(&self) -> &'static str {
        match self.mode {
            ClipMode::A => "clip-a",
            ClipMode::B => "clip-b",
            ClipMode::Dueling => "clip",
        }
    }

    fn on_hit(&mut self, set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        let m = &mut ways[way];
        m.rrpv = if req.class() == LineClass::Data && self.variant_b(set) {
            m.rrpv.decremented(Rrpv::NEAR)
        } else {
            Rrpv::IMMEDIATE
        };
    }

    fn on_miss(&mut self, set: usize, req: &Request) {
        if self.mode == ClipMode::Dueling && req.demand {
            self.dueling.record_miss(set);
        }
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        ways[way].rrpv = match req.class() {
            LineClass::Instruction => Rrpv::IMMEDIATE,
            LineClass::Data => Rrpv::INTERMEDIATE,
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrripVariant {
    /// Only hot lines get special treatment.
    One,
    /// Hot, warm and cold lines all do.
    Two,
}

/// Temperature-guided RRIP. Eviction is plain RRIP; only insertion and hit
/// promotion read the temperature delivered with the request.
pub struct Trrip {
    variant: TrripVariant,
}

impl Trrip {
    pub fn new(variant: TrripVariant) -> Self {
        Trrip { variant }
    }

    pub fn hit_rrpv(&self, current: Rrpv, temperature: Temperature) -> Rrpv {
        match (temperature, self.variant) {
            (Temperature::Hot, _) => Rrpv::IMMEDIATE,
            (Temperature::Warm | Temperature::Cold, TrripVariant::Two) => {
                current.decremented(Rrpv::IMMEDIATE)
            }
            _ => Rrpv::IMMEDIATE,
        }
    }

    pub fn fill_rrpv(&self, temperature: Temperature) -> Rrpv {
        match (temperature, self.variant) {
            (Temperature::Hot, _) => Rrpv::IMMEDIATE,
            (Temperature::Warm, TrripVariant::Two) => Rrpv::NEAR,
            _ => Rrpv::INTERMEDIATE,
        }
    }
}

impl ReplacementPolicy for Trrip {
    fn name(&self) -> &'static str {
        match self.variant {
            TrripVariant::One => "trrip-1",
            TrripVariant::Two => "trrip-2",
        }
    }

    fn on_hit(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        let m = &mut ways[way];
        m.rrpv = self.hit_rrpv(m.rrpv, req.temperature());
    }

    fn choose_victim(&mut self, _set: usize, ways: &mut [WayMeta]) -> usize {
        rrip_victim(ways)
    }

    fn on_fill(&mut self, _set: usize, ways: &mut [WayMeta], way: usize, req: &Request) {
        ways[way].rrpv = self.fill_rrpv(req.temperature());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LineId;
    use Temperature::*;

    fn set_with(rrpvs: &[u8]) -> Vec<WayMeta> {
        rrpvs
            .iter()
            .map(|&r| WayMeta {
                valid: true,
                rrpv: Rrpv::new(r),
                ..WayMeta::default()
            })
            .collect()
    }

    fn rrpvs(ways: &[WayMeta]) -> Vec<u8> {
        ways.iter().map(|m| m.rrpv.value()).collect()
    }

    fn instr(temp: Temperature) -> Request {
        Request::demand(LineId::new(0, LineClass::Instruction, temp), 0)
    }

    fn data() -> Request {
        Request::demand(LineId::new(0, LineClass::Data, None), 0)
    }

    #[test]
    fn victim_with_distant_present() {
        let mut ways = set_with(&[2, 1, 3, 0]);
        assert_eq!(rrip_victim(&mut ways), 2);
        assert_eq!(rrpvs(&ways), vec![2, 1, 3, 0]);
    }

    #[test]
    fn victim_after_aging() {
        let mut ways = set_with(&[0, 1, 2, 2]);
        assert_eq!(rrip_victim(&mut ways), 2);
        assert_eq!(rrpvs(&ways), vec![1, 2, 3, 3]);
    }

    #[test]
    fn trrip2_hits() {
        let mut t = Trrip::new(TrripVariant::Two);
        let mut ways = set_with(&[2]);
        t.on_hit(0, &mut ways, 0, &instr(Warm));
        assert_eq!(ways[0].rrpv, Rrpv::NEAR);
        let mut ways = set_with(&[0]);
        t.on_hit(0, &mut ways, 0, &instr(Warm));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
        let mut ways = set_with(&[3]);
        t.on_hit(0, &mut ways, 0, &instr(Cold));
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        let mut ways = set_with(&[3]);
        t.on_hit(0, &mut ways, 0, &instr(None));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
    }

    #[test]
    fn trrip1_hits_and_fills() {
        let mut t = Trrip::new(TrripVariant::One);
        let mut ways = set_with(&[3]);
        t.on_hit(0, &mut ways, 0, &instr(Hot));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
        let mut ways = set_with(&[3]);
        t.on_hit(0, &mut ways, 0, &instr(Warm));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
        t.on_fill(0, &mut ways, 0, &instr(Warm));
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        t.on_fill(0, &mut ways, 0, &instr(Hot));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
    }

    #[test]
    fn trrip2_fills() {
        let t = Trrip::new(TrripVariant::Two);
        assert_eq!(t.fill_rrpv(Hot), Rrpv::IMMEDIATE);
        assert_eq!(t.fill_rrpv(Warm), Rrpv::NEAR);
        assert_eq!(t.fill_rrpv(Cold), Rrpv::INTERMEDIATE);
        assert_eq!(t.fill_rrpv(None), Rrpv::INTERMEDIATE);
    }

    #[test]
    fn srrip_inserts_intermediate() {
        let mut ways = set_with(&[0]);
        Srrip.on_fill(0, &mut ways, 0, &instr(Hot));
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        Srrip.on_fill(0, &mut ways, 0, &data());
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
    }

    #[test]
    fn brrip_is_mostly_distant() {
        let mut b = Bimodal::new(7);
        let near = (0..32_000).filter(|_| b.insertion() == Rrpv::INTERMEDIATE).count();
        assert!((800..1200).contains(&near), "{near}");
    }

    #[test]
    fn clip_variants() {
        let mut a = Clip::new(ClipMode::A, 4);
        let mut b = Clip::new(ClipMode::B, 4);
        let mut ways = set_with(&[3]);
        a.on_fill(0, &mut ways, 0, &instr(None));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
        a.on_fill(0, &mut ways, 0, &data());
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        a.on_hit(0, &mut ways, 0, &data());
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);

        let mut ways = set_with(&[3]);
        b.on_hit(0, &mut ways, 0, &data());
        assert_eq!(ways[0].rrpv, Rrpv::INTERMEDIATE);
        b.on_hit(0, &mut ways, 0, &data());
        b.on_hit(0, &mut ways, 0, &data());
        assert_eq!(ways[0].rrpv, Rrpv::NEAR);
        b.on_hit(0, &mut ways, 0, &instr(None));
        assert_eq!(ways[0].rrpv, Rrpv::IMMEDIATE);
    }

    #[test]
    fn drrip_followers_track_psel() {
        let mut d = Drrip::new(1024, 1);
        assert!(!d.dueling().followers_use_b());
        d.on_miss(0, &data());
        assert!(d.dueling().followers_use_b());
        // prefetch misses do not vote
        d.on_miss(1, &Request { demand: false, ..data() });
        assert!(d.dueling().followers_use_b());
    }

    #[test]
    fn victim_terminates_within_three_rounds() {
        for start in 0..=3u8 {
            let mut ways = set_with(&[start; 8]);
            rrip_victim(&mut ways);
            assert!(ways.iter().all(|m| m.rrpv == Rrpv::DISTANT));
        }
    }
}
