//! Runtime values: reals extended with an undefined element, valuations,
//! and truth outcomes.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use crate::ast::{TruthValue, Var};

/// A real number or the undefined value. Undefined absorbs through
/// addition and multiplication, and non-finite float results collapse to
/// undefined so that every arithmetic value is a genuine real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealBot {
    Real(f64),
    Bot,
}

impl RealBot {
    pub fn new(v: f64) -> RealBot {
        if v.is_finite() {
            RealBot::Real(v)
        } else {
            RealBot::Bot
        }
    }

    pub fn real(self) -> Option<f64> {
        match self {
            RealBot::Real(v) => Some(v),
            RealBot::Bot => None,
        }
    }

    pub fn is_bot(self) -> bool {
        matches!(self, RealBot::Bot)
    }

    /// The three-way comparison table for `a >= b`: indeterminate whenever
    /// the difference is undefined.
    pub fn geq(self, other: RealBot) -> TruthValue {
        match (self, other) {
            (RealBot::Real(a), RealBot::Real(b)) => {
                if a >= b {
                    TruthValue::Top
                } else {
                    TruthValue::Bot
                }
            }
            _ => TruthValue::Ind,
        }
    }
}

impl Add for RealBot {
    type Output = RealBot;
    fn add(self, rhs: RealBot) -> RealBot {
        match (self, rhs) {
            (RealBot::Real(a), RealBot::Real(b)) => RealBot::new(a + b),
            _ => RealBot::Bot,
        }
    }
}

impl Mul for RealBot {
    type Output = RealBot;
    fn mul(self, rhs: RealBot) -> RealBot {
        match (self, rhs) {
            (RealBot::Real(a), RealBot::Real(b)) => RealBot::new(a * b),
            _ => RealBot::Bot,
        }
    }
}

impl fmt::Display for RealBot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealBot::Real(v) => write!(f, "{}", v),
            RealBot::Bot => f.write_str("BOT_R (undefined)"),
        }
    }
}

/// A program state: a finite-support assignment of reals to variables
/// (absent means undefined), or the crash state, or the out-of-bounds
/// state reached by leaving an evolution domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Valuation {
    Map(BTreeMap<Var, f64>),
    Crash,
    Out,
}

impl Valuation {
    pub fn empty() -> Valuation {
        Valuation::Map(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, f64)>>(pairs: I) -> Valuation {
        Valuation::Map(pairs.into_iter().collect())
    }

    pub fn get(&self, v: &Var) -> RealBot {
        match self {
            Valuation::Map(m) => m.get(v).copied().map_or(RealBot::Bot, RealBot::new),
            _ => RealBot::Bot,
        }
    }

    /// Returns an updated copy; storing `Bot` removes the variable.
    pub fn set(&self, v: Var, value: RealBot) -> Valuation {
        match self {
            Valuation::Map(m) => {
                let mut m = m.clone();
                match value {
                    RealBot::Real(x) => {
                        m.insert(v, x);
                    }
                    RealBot::Bot => {
                        m.remove(&v);
                    }
                }
                Valuation::Map(m)
            }
            other => other.clone(),
        }
    }

    pub fn is_map(&self) -> bool {
        matches!(self, Valuation::Map(_))
    }

    pub fn support(&self) -> Vec<Var> {
        match self {
            Valuation::Map(m) => m.keys().cloned().collect(),
            _ => vec![],
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Crash => f.write_str("CRASH"),
            Valuation::Out => f.write_str("OUT"),
            Valuation::Map(m) => {
                f.write_str("{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}={}", k, v)?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A truth value together with a flag recording that some run demanded
/// choice bits past the enumeration bound. When the flag is clear the
/// value equals the exact supremum over all sequences supported below the
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub value: TruthValue,
    pub truncated: bool,
}

impl Outcome {
    pub fn exact(value: TruthValue) -> Outcome {
        Outcome { value, truncated: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bot_absorbs() {
        let b = RealBot::Bot;
        let r = RealBot::Real(2.0);
        assert_eq!(b + r, RealBot::Bot);
        assert_eq!(r * b, RealBot::Bot);
        assert_eq!(r + r, RealBot::Real(4.0));
    }

    #[test]
    fn overflow_collapses_to_bot() {
        let big = RealBot::Real(f64::MAX);
        assert_eq!(big * big, RealBot::Bot);
    }

    #[test]
    fn geq_table() {
        assert_eq!(RealBot::Real(1.0).geq(RealBot::Real(1.0)), TruthValue::Top);
        assert_eq!(RealBot::Real(0.0).geq(RealBot::Real(1.0)), TruthValue::Bot);
        assert_eq!(RealBot::Bot.geq(RealBot::Real(1.0)), TruthValue::Ind);
        assert_eq!(RealBot::Real(1.0).geq(RealBot::Bot), TruthValue::Ind);
    }

    #[test]
    fn valuation_bot_means_absent() {
        let v = Valuation::empty().set(Var::named("x"), RealBot::Real(1.0));
        assert_eq!(v.get(&Var::named("x")), RealBot::Real(1.0));
        assert_eq!(v.get(&Var::named("y")), RealBot::Bot);
        let v2 = v.set(Var::named("x"), RealBot::Bot);
        assert_eq!(v2.get(&Var::named("x")), RealBot::Bot);
    }
}
