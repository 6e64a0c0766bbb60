//! Temporal knowledge bases: statements with a validity scope, the yearly
//! time axis, vocabularies, and the filter indices shared by training and
//! evaluation.

mod filter;
mod kb;
mod parse;
mod synthetic;

pub use filter::{FilterIndex, Split, SplitMask};
pub use kb::{DatasetStats, ScopeCounts, TemporalKB, TimeAxis, Vocab};
pub use parse::{parse_line, read_statements, ParseOptions, RawStatement};
pub use synthetic::{ManifestRow, PlantedFact, SyntheticConfig, SyntheticDataset};

use std::ops::RangeInclusive;

pub type EntityId = usize;
pub type RelationId = usize;
/// Offset of a year from the time axis origin.
pub type TimeIndex = usize;

/// Validity scope of a statement. `T` is a calendar year while parsing and a
/// [`TimeIndex`] once the statement is placed on a [`TimeAxis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeScope<T = TimeIndex> {
    NoTime,
    Instant(T),
    /// Start known, end unknown.
    RightOpen(T),
    /// End known, start unknown.
    LeftOpen(T),
    Closed(T, T),
}

impl<T: Copy> TimeScope<T> {
    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> TimeScope<U> {
        match self {
            TimeScope::NoTime => TimeScope::NoTime,
            TimeScope::Instant(t) => TimeScope::Instant(f(t)),
            TimeScope::RightOpen(t) => TimeScope::RightOpen(f(t)),
            TimeScope::LeftOpen(t) => TimeScope::LeftOpen(f(t)),
            TimeScope::Closed(a, b) => {
                let a = f(a);
                TimeScope::Closed(a, f(b))
            }
        }
    }

    pub fn kind(&self) -> ScopeKind {
        match self {
            TimeScope::NoTime => ScopeKind::NoTime,
            TimeScope::Instant(_) => ScopeKind::Instant,
            TimeScope::RightOpen(_) => ScopeKind::RightOpen,
            TimeScope::LeftOpen(_) => ScopeKind::LeftOpen,
            TimeScope::Closed(..) => ScopeKind::Closed,
        }
    }

    pub fn is_temporal(&self) -> bool {
        !matches!(self, TimeScope::NoTime)
    }

    /// Every endpoint carried by the scope.
    pub fn endpoints(&self) -> impl Iterator<Item = T> {
        let (a, b) = match *self {
            TimeScope::NoTime => (None, None),
            TimeScope::Instant(t) | TimeScope::RightOpen(t) | TimeScope::LeftOpen(t) => {
                (Some(t), None)
            }
            TimeScope::Closed(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }
}

impl TimeScope<TimeIndex> {
    /// Timestamps a query over this scope is evaluated at: the single point
    /// for instants, the known endpoint for half-open intervals, and every
    /// year of a closed interval. `None` for atemporal statements.
    pub fn discretize(&self) -> Option<RangeInclusive<TimeIndex>> {
        match *self {
            TimeScope::NoTime => None,
            TimeScope::Instant(t) | TimeScope::RightOpen(t) | TimeScope::LeftOpen(t) => {
                Some(t..=t)
            }
            TimeScope::Closed(a, b) => Some(a..=b),
        }
    }
}

/// The five statement kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScopeKind {
    NoTime,
    Instant,
    RightOpen,
    LeftOpen,
    Closed,
}

impl ScopeKind {
    pub const ALL: [ScopeKind; 5] = [
        ScopeKind::Instant,
        ScopeKind::RightOpen,
        ScopeKind::LeftOpen,
        ScopeKind::Closed,
        ScopeKind::NoTime,
    ];

    pub fn validity(self) -> ValidityType {
        match self {
            ScopeKind::NoTime => ValidityType::NoTime,
            ScopeKind::Instant => ValidityType::Instant,
            ScopeKind::RightOpen | ScopeKind::LeftOpen => ValidityType::OpenInterval,
            ScopeKind::Closed => ValidityType::ClosedInterval,
        }
    }
}

/// Grouping used by link-prediction breakdowns: half-open intervals share a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValidityType {
    OpenInterval,
    ClosedInterval,
    Instant,
    NoTime,
}

impl ValidityType {
    pub const ALL: [ValidityType; 4] = [
        ValidityType::OpenInterval,
        ValidityType::ClosedInterval,
        ValidityType::Instant,
        ValidityType::NoTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValidityType::OpenInterval => "open_interval",
            ValidityType::ClosedInterval => "closed_interval",
            ValidityType::Instant => "instant",
            ValidityType::NoTime => "no_time",
        }
    }
}

/// An indexed statement `(s, r, o, scope)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Statement {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub scope: TimeScope,
}
