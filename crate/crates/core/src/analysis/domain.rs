//! Abstract values: integer intervals over the extended integers, finite
//! string sets, boolean sets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::interp::Value;

/// Extended integer. Finite values are kept within `i64`; arithmetic that
/// leaves that range saturates to the matching infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Bound {
    fn rank(self) -> (i8, i64) {
        match self {
            Bound::NegInf => (-1, 0),
            Bound::Finite(v) => (0, v),
            Bound::PosInf => (1, 0),
        }
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    fn from_i128(v: i128) -> Bound {
        if v < i64::MIN as i128 {
            Bound::NegInf
        } else if v > i64::MAX as i128 {
            Bound::PosInf
        } else {
            Bound::Finite(v as i64)
        }
    }

    fn add(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::from_i128(a as i128 + b as i128),
            (Bound::NegInf, Bound::PosInf) | (Bound::PosInf, Bound::NegInf) => {
                unreachable!("adding opposite infinities")
            }
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            _ => Bound::PosInf,
        }
    }

    fn neg(self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(v) => Bound::from_i128(-(v as i128)),
        }
    }

    fn mul(self, other: Bound) -> Bound {
        let sign = |b: Bound| match b {
            Bound::NegInf => -1,
            Bound::PosInf => 1,
            Bound::Finite(v) => v.signum(),
        };
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::from_i128(a as i128 * b as i128),
            _ => match sign(self) * sign(other) {
                0 => Bound::Finite(0),
                s if s > 0 => Bound::PosInf,
                _ => Bound::NegInf,
            },
        }
    }

    pub fn offset(self, by: i64) -> Bound {
        self.add(Bound::Finite(by))
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("+inf"),
            Bound::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// Closed interval `[lo, hi]`, never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const TOP: Interval = Interval { lo: Bound::NegInf, hi: Bound::PosInf };

    pub fn new(lo: Bound, hi: Bound) -> Option<Interval> {
        (lo <= hi && lo != Bound::PosInf && hi != Bound::NegInf).then_some(Interval { lo, hi })
    }

    pub fn exact(v: i64) -> Interval {
        Interval { lo: Bound::Finite(v), hi: Bound::Finite(v) }
    }

    pub fn range(lo: i64, hi: i64) -> Interval {
        assert!(lo <= hi);
        Interval { lo: Bound::Finite(lo), hi: Bound::Finite(hi) }
    }

    pub fn singleton(&self) -> Option<i64> {
        match (self.lo, self.hi) {
            (Bound::Finite(a), Bound::Finite(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= Bound::Finite(v) && Bound::Finite(v) <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn join(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn meet(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.add(o.lo), hi: self.hi.add(o.hi) }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [self.lo.mul(o.lo), self.lo.mul(o.hi), self.hi.mul(o.lo), self.hi.mul(o.hi)];
        Interval { lo: *c.iter().min().unwrap(), hi: *c.iter().max().unwrap() }
    }

    /// Floor division; precise only for a constant non-zero divisor.
    pub fn floor_div(&self, o: &Interval) -> Interval {
        match o.singleton() {
            Some(d) if d != 0 => {
                let f = |b: Bound| match b {
                    Bound::Finite(v) => match crate::interp::floor_div(v, d) {
                        Some(q) => Bound::Finite(q),
                        None => Bound::PosInf,
                    },
                    inf if d > 0 => inf,
                    inf => inf.neg(),
                };
                let (a, b) = (f(self.lo), f(self.hi));
                Interval { lo: a.min(b), hi: a.max(b) }
            }
            _ => Interval::TOP,
        }
    }

    /// Floor modulo; the result takes the sign of the divisor.
    pub fn floor_mod(&self, o: &Interval) -> Interval {
        match o.singleton() {
            Some(d) if d > 0 => {
                if let (Some(a), Some(b)) = (self.lo.finite(), self.hi.finite()) {
                    if a >= 0 && b < d {
                        return *self;
                    }
                }
                Interval::range(0, d - 1)
            }
            Some(d) if d < 0 => Interval::range(d + 1, 0),
            _ => Interval::TOP,
        }
    }

    /// Move every bound that grew relative to `old` to infinity.
    pub fn widen(&self, old: &Interval) -> Interval {
        Interval {
            lo: if self.lo < old.lo { Bound::NegInf } else { self.lo },
            hi: if self.hi > old.hi { Bound::PosInf } else { self.hi },
        }
    }
}

/// String sets above this size collapse to "any string".
pub const MAX_STR_SET: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum AbstractValue {
    IntRange(Interval),
    /// `None` means any string (TopStr).
    StrSet(Option<BTreeSet<String>>),
    BoolSet(BTreeSet<bool>),
    FloatTop,
    Top,
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractValue::IntRange(i) => write!(f, "int in {i}"),
            AbstractValue::StrSet(None) => f.write_str("any string"),
            AbstractValue::StrSet(Some(s)) => {
                let items: Vec<String> = s.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "one of {{{}}}", items.join(", "))
            }
            AbstractValue::BoolSet(b) => {
                let items: Vec<&str> = b.iter().map(|x| if *x { "True" } else { "False" }).collect();
                write!(f, "one of {{{}}}", items.join(", "))
            }
            AbstractValue::FloatTop => f.write_str("any float"),
            AbstractValue::Top => f.write_str("unknown"),
        }
    }
}

/// Three-valued truthiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl AbstractValue {
    pub fn of_value(v: &Value) -> AbstractValue {
        match v {
            Value::Int(i) => AbstractValue::IntRange(Interval::exact(*i)),
            Value::Float(_) => AbstractValue::FloatTop,
            Value::Str(s) => AbstractValue::str_exact(s),
            Value::Bool(b) => AbstractValue::BoolSet([*b].into()),
        }
    }

    pub fn str_exact(s: &str) -> AbstractValue {
        AbstractValue::StrSet(Some([s.to_string()].into()))
    }

    pub fn any_str() -> AbstractValue {
        AbstractValue::StrSet(None)
    }

    pub fn any_int() -> AbstractValue {
        AbstractValue::IntRange(Interval::TOP)
    }

    pub fn any_bool() -> AbstractValue {
        AbstractValue::BoolSet([false, true].into())
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (AbstractValue::Top, _) => true,
            (AbstractValue::IntRange(i), Value::Int(x)) => i.contains(*x),
            (AbstractValue::StrSet(None), Value::Str(_)) => true,
            (AbstractValue::StrSet(Some(set)), Value::Str(s)) => set.contains(s),
            (AbstractValue::BoolSet(set), Value::Bool(b)) => set.contains(b),
            (AbstractValue::FloatTop, Value::Float(_)) => true,
            _ => false,
        }
    }

    pub fn join(&self, other: &AbstractValue) -> AbstractValue {
        use AbstractValue::*;
        match (self, other) {
            (IntRange(a), IntRange(b)) => IntRange(a.join(b)),
            (StrSet(None), StrSet(_)) | (StrSet(_), StrSet(None)) => StrSet(None),
            (StrSet(Some(a)), StrSet(Some(b))) => {
                let u: BTreeSet<String> = a.union(b).cloned().collect();
                if u.len() > MAX_STR_SET {
                    StrSet(None)
                } else {
                    StrSet(Some(u))
                }
            }
            (BoolSet(a), BoolSet(b)) => BoolSet(a.union(b).copied().collect()),
            (FloatTop, FloatTop) => FloatTop,
            _ => Top,
        }
    }

    /// Whether `self` describes at least every value `other` does.
    pub fn covers(&self, other: &AbstractValue) -> bool {
        use AbstractValue::*;
        match (self, other) {
            (Top, _) => true,
            (IntRange(a), IntRange(b)) => a.contains_interval(b),
            (StrSet(None), StrSet(_)) => true,
            (StrSet(Some(a)), StrSet(Some(b))) => b.is_subset(a),
            (BoolSet(a), BoolSet(b)) => b.is_subset(a),
            (FloatTop, FloatTop) => true,
            _ => false,
        }
    }

    pub fn truthiness(&self) -> Truth {
        match self {
            AbstractValue::IntRange(i) => {
                if i.singleton() == Some(0) {
                    Truth::False
                } else if !i.contains(0) {
                    Truth::True
                } else {
                    Truth::Unknown
                }
            }
            AbstractValue::BoolSet(b) => match (b.contains(&true), b.contains(&false)) {
                (true, false) => Truth::True,
                (false, true) => Truth::False,
                _ => Truth::Unknown,
            },
            AbstractValue::StrSet(Some(s)) => {
                if s.iter().all(|x| x.is_empty()) {
                    Truth::False
                } else if s.iter().all(|x| !x.is_empty()) {
                    Truth::True
                } else {
                    Truth::Unknown
                }
            }
            _ => Truth::Unknown,
        }
    }

    pub fn as_interval(&self) -> Option<Interval> {
        match self {
            AbstractValue::IntRange(i) => Some(*i),
            _ => None,
        }
    }
}

/// Variables known at a program point. A missing name has not been
/// assigned on any path reaching the point.
pub type AbstractEnv = BTreeMap<String, AbstractValue>;

pub fn join_env(a: &AbstractEnv, b: &AbstractEnv) -> AbstractEnv {
    let mut out = a.clone();
    for (k, v) in b {
        let joined = match out.get(k) {
            Some(old) => old.join(v),
            None => v.clone(),
        };
        out.insert(k.clone(), joined);
    }
    out
}

pub fn join_state(a: &Option<AbstractEnv>, b: &Option<AbstractEnv>) -> Option<AbstractEnv> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(a), Some(b)) => Some(join_env(a, b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interval_arithmetic() {
        let a = Interval::range(-2, 3);
        let b = Interval::range(4, 5);
        assert_eq!(a.add(&b), Interval::range(2, 8));
        assert_eq!(a.sub(&b), Interval::range(-7, -1));
        assert_eq!(a.mul(&b), Interval::range(-10, 15));
        assert_eq!(Interval::range(-7, 7).floor_div(&Interval::exact(2)), Interval::range(-4, 3));
        assert_eq!(Interval::range(-7, 7).floor_mod(&Interval::exact(3)), Interval::range(0, 2));
        let half = Interval { lo: Bound::Finite(0), hi: Bound::PosInf };
        assert_eq!(half.mul(&Interval::exact(-1)), Interval { lo: Bound::NegInf, hi: Bound::Finite(0) });
        assert_eq!(Interval::exact(i64::MAX).add(&Interval::exact(1)).hi, Bound::PosInf);
    }

    #[test]
    fn widening_moves_grown_bounds() {
        let old = Interval::range(0, 2);
        assert_eq!(Interval::range(0, 4).widen(&old), Interval { lo: Bound::Finite(0), hi: Bound::PosInf });
        assert_eq!(Interval::range(0, 2).widen(&old), old);
    }

    #[test]
    fn joins_of_different_kinds_are_top() {
        let s = AbstractValue::str_exact("a");
        assert_eq!(s.join(&AbstractValue::any_int()), AbstractValue::Top);
        let many = (0..20).fold(AbstractValue::str_exact("x"), |acc, i| acc.join(&AbstractValue::str_exact(&i.to_string())));
        assert_eq!(many, AbstractValue::any_str());
    }

    proptest! {
        #[test]
        fn interval_ops_contain_concrete_results(a in -50i64..50, b in -50i64..50, w1 in 0i64..10, w2 in 0i64..10, x in 0i64..10, y in 0i64..10) {
            let i = Interval::range(a, a + w1);
            let j = Interval::range(b, b + w2);
            let (cx, cy) = (a + x.min(w1), b + y.min(w2));
            prop_assert!(i.add(&j).contains(cx + cy));
            prop_assert!(i.sub(&j).contains(cx - cy));
            prop_assert!(i.mul(&j).contains(cx * cy));
            if b != 0 {
                let d = Interval::exact(b);
                prop_assert!(i.floor_div(&d).contains(crate::interp::floor_div(cx, b).unwrap()));
                prop_assert!(i.floor_mod(&d).contains(crate::interp::floor_mod(cx, b)));
            }
            prop_assert!(i.join(&j).contains(cx) && i.join(&j).contains(cy));
        }
    }
}
