//! MOESI states stored as a tag state plus the DBI dirty bit.
//!
//! M and E differ only in the dirty bit, as do O and S, so the tag store
//! keeps three states and the DBI supplies the rest.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Moesi {
    Modified,
    Owned,
    Exclusive,
    Shared,
    Invalid,
}

impl Moesi {
    pub const ALL: [Moesi; 5] = [
        Moesi::Modified,
        Moesi::Owned,
        Moesi::Exclusive,
        Moesi::Shared,
        Moesi::Invalid,
    ];
}

/// Coherence state kept in the tag store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagState {
    Invalid,
    /// Sole copy: M or E.
    Exclusive,
    /// Possibly shared: O or S.
    Shared,
}

/// Splits a state into its tag part and DBI bit.
pub fn split(s: Moesi) -> (TagState, bool) {
    match s {
        Moesi::Modified => (TagState::Exclusive, true),
        Moesi::Exclusive => (TagState::Exclusive, false),
        Moesi::Owned => (TagState::Shared, true),
        Moesi::Shared => (TagState::Shared, false),
        Moesi::Invalid => (TagState::Invalid, false),
    }
}

/// Rebuilds the state; an invalid line with a dirty bit is not a state.
pub fn join(tag: TagState, dirty: bool) -> Option<Moesi> {
    Some(match (tag, dirty) {
        (TagState::Exclusive, true) => Moesi::Modified,
        (TagState::Exclusive, false) => Moesi::Exclusive,
        (TagState::Shared, true) => Moesi::Owned,
        (TagState::Shared, false) => Moesi::Shared,
        (TagState::Invalid, false) => Moesi::Invalid,
        (TagState::Invalid, true) => return None,
    })
}
