/// 10-bit PSEL.
pub const PSEL_MAX: u16 = 1023;
/// Followers use policy B once PSEL reaches this value.
pub const PSEL_THRESHOLD: u16 = 512;
pub const LEADERS_PER_POLICY: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuelRole {
    LeaderA,
    LeaderB,
    Follower,
}

/// Set dueling between two insertion policies.
///
/// With `n` sets the leader stride is `max(2, n / 32)`: set `s` leads for A
/// when `s % stride == 0` and for B when `s % stride == 1`. That yields 32
/// leaders per policy whenever `n >= 64`; smaller caches have no followers.
/// A demand miss in an A leader increments PSEL, one in a B leader
/// decrements it.
#[derive(Clone, Debug)]
pub struct SetDueling {
    psel: u16,
    stride: usize,
}

impl SetDueling {
    pub fn new(set_count: usize) -> Self {
        SetDueling {
            // one below the switch point: followers start on policy A
            psel: PSEL_THRESHOLD - 1,
            stride: (set_count / LEADERS_PER_POLICY).max(2),
        }
    }

    pub fn with_psel(set_count: usize, psel: u16) -> Self {
        SetDueling {
            psel: psel.min(PSEL_MAX),
            ..Self::new(set_count)
        }
    }

    pub fn psel(&self) -> u16 {
        self.psel
    }

    pub fn role(&self, set: usize) -> DuelRole {
        match set % self.stride {
            0 => DuelRole::LeaderA,
            1 => DuelRole::LeaderB,
            _ => DuelRole::Follower,
        }
    }

    pub fn record_miss(&mut self, set: usize) {
        match self.role(set) {
            DuelRole::LeaderA => self.psel = (self.psel + 1).min(PSEL_MAX),
            DuelRole::LeaderB => self.psel = self.psel.saturating_sub(1),
            DuelRole::Follower => {}
        }
    }

    pub fn followers_use_b(&self) -> bool {
        self.psel >= PSEL_THRESHOLD
    }

    /// Whether `set` currently applies policy B.
    pub fn uses_b(&self, set: usize) -> bool {
        match self.role(set) {
            DuelRole::LeaderA => false,
            DuelRole::LeaderB => true,
            DuelRole::Follower => self.followers_use_b(),
        }
    }
}
