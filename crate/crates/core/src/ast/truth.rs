//! The three-element truth lattice: false, indeterminate, true.

use std::fmt;

/// A truth value in the three-valued logic, ordered `Bot < Ind < Top`.
///
/// `Top` is definite truth, `Bot` definite falsehood, and `Ind` the
/// indeterminate value that arises from undefined terms and crashed
/// programs. Negation swaps `Top` and `Bot` and fixes `Ind`;
/// conjunction is minimum, disjunction maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthValue {
    /// Definitely false.
    Bot,
    /// Indeterminate.
    Ind,
    /// Definitely true.
    Top,
}

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [TruthValue::Bot, TruthValue::Ind, TruthValue::Top];

    pub fn neg(self) -> TruthValue {
        match self {
            TruthValue::Top => TruthValue::Bot,
            TruthValue::Ind => TruthValue::Ind,
            TruthValue::Bot => TruthValue::Top,
        }
    }

    pub fn and(self, other: TruthValue) -> TruthValue {
        self.min(other)
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        self.max(other)
    }

    /// Supremum of a non-empty collection; `None` when the collection is empty.
    pub fn sup<I: IntoIterator<Item = TruthValue>>(values: I) -> Option<TruthValue> {
        values.into_iter().max()
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TruthValue::Top => "TOP",
            TruthValue::Ind => "IND",
            TruthValue::Bot => "BOT",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::TruthValue::{self, Bot, Ind, Top};

    #[test]
    fn negation_swaps_extremes_and_fixes_ind() {
        assert_eq!(Top.neg(), Bot);
        assert_eq!(Bot.neg(), Top);
        assert_eq!(Ind.neg(), Ind);
    }

    #[test]
    fn double_negation_is_identity() {
        for v in TruthValue::ALL {
            assert_eq!(v.neg().neg(), v);
        }
    }

    #[test]
    fn and_is_min_or_is_max() {
        assert_eq!(Top.and(Ind), Ind);
        assert_eq!(Bot.and(Top), Bot);
        assert_eq!(Ind.or(Bot), Ind);
        assert_eq!(Top.or(Bot), Top);
    }

    #[test]
    fn sup_is_max_and_rejects_empty() {
        assert_eq!(TruthValue::sup([Bot, Ind]), Some(Ind));
        assert_eq!(TruthValue::sup([Bot, Ind, Top]), Some(Top));
        assert_eq!(TruthValue::sup([]), None);
    }

    #[test]
    fn de_morgan_all_pairs() {
        for a in TruthValue::ALL {
            for b in TruthValue::ALL {
                assert_eq!(a.and(b).neg(), a.neg().or(b.neg()));
                assert_eq!(a.or(b).neg(), a.neg().and(b.neg()));
            }
        }
    }

    #[test]
    fn lattice_laws() {
        for a in TruthValue::ALL {
            assert_eq!(a.and(a), a);
            assert_eq!(a.or(a), a);
            for b in TruthValue::ALL {
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.or(b), b.or(a));
                for c in TruthValue::ALL {
                    assert_eq!(a.and(b).and(c), a.and(b.and(c)));
                    assert_eq!(a.or(b).or(c), a.or(b.or(c)));
                }
            }
        }
    }
}
