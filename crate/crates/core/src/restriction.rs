//! Value restrictions: inequality ranges on numbers and length limits on
//! strings, with membership, emptiness and containment tests.
//!
//! Restrictions are stored as written. Whether `value > 3` and `value >= 4`
//! describe the same set depends on the element's kind, so every query takes
//! the [`BaseKind`] it is evaluated under. For `Int`, strict bounds are first
//! normalized to inclusive ones; `Real` bounds keep their open/closed flags
//! and are compared exactly.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{format_real, BaseKind, Literal};

/// A numeric bound literal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Real(f64),
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Real(r) => r,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Real(r) => f.write_str(&format_real(*r)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: Number,
    pub inclusive: bool,
}

impl Bound {
    pub fn inclusive(value: Number) -> Self {
        Bound {
            value,
            inclusive: true,
        }
    }

    pub fn exclusive(value: Number) -> Self {
        Bound {
            value,
            inclusive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Restriction {
    Unrestricted,
    NumericRange {
        lower: Option<Bound>,
        upper: Option<Bound>,
    },
    StringLength {
        min: u64,
        max: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RestrictionError {
    #[error("restriction `{restriction}` cannot apply to {kind} values")]
    KindMismatch { restriction: String, kind: String },
    #[error("{value_kind} value checked against a {kind} restriction")]
    ValueKindMismatch {
        value_kind: BaseKind,
        kind: BaseKind,
    },
}

/// Inclusive integer interval; `None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct IntSet {
    lo: Option<i128>,
    hi: Option<i128>,
}

impl IntSet {
    fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(lo), Some(hi)) if lo > hi)
    }

    fn contains(&self, inner: &IntSet) -> bool {
        if inner.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let lo_ok = match (self.lo, inner.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b >= a,
        };
        let hi_ok = match (self.hi, inner.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
        };
        lo_ok && hi_ok
    }

    fn admits(&self, v: i128) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }
}

/// Real interval with open/closed flags; `None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
struct RealSet {
    lo: Option<(f64, bool)>,
    hi: Option<(f64, bool)>,
}

impl RealSet {
    fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Some((lo, li)), Some((hi, hinc))) => lo > hi || (lo == hi && !(li && hinc)),
            _ => false,
        }
    }

    fn admits(&self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        let lo_ok = match self.lo {
            None => true,
            Some((b, true)) => v >= b,
            Some((b, false)) => v > b,
        };
        let hi_ok = match self.hi {
            None => true,
            Some((b, true)) => v <= b,
            Some((b, false)) => v < b,
        };
        lo_ok && hi_ok
    }

    fn contains(&self, inner: &RealSet) -> bool {
        if inner.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let lo_ok = match (self.lo, inner.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, ai)), Some((b, bi))) => match b.partial_cmp(&a) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => ai || !bi,
                _ => false,
            },
        };
        let hi_ok = match (self.hi, inner.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, ai)), Some((b, bi))) => match b.partial_cmp(&a) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => ai || !bi,
                _ => false,
            },
        };
        lo_ok && hi_ok
    }
}

/// Inclusive length interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LenSet {
    min: u64,
    max: Option<u64>,
}

impl LenSet {
    fn is_empty(&self) -> bool {
        self.max.is_some_and(|max| self.min > max)
    }

    fn admits(&self, len: u64) -> bool {
        len >= self.min && self.max.is_none_or(|max| len <= max)
    }

    fn contains(&self, inner: &LenSet) -> bool {
        if inner.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let max_ok = match (self.max, inner.max) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
        };
        inner.min >= self.min && max_ok
    }
}

enum Set {
    Int(IntSet),
    Real(RealSet),
    Len(LenSet),
}

impl Restriction {
    pub fn range(lower: Option<Bound>, upper: Option<Bound>) -> Self {
        Restriction::NumericRange { lower, upper }
    }

    /// The single-point range `[v, v]`.
    pub fn point(v: Number) -> Self {
        Restriction::range(Some(Bound::inclusive(v)), Some(Bound::inclusive(v)))
    }

    pub fn is_unrestricted(&self) -> bool {
        matches!(self, Restriction::Unrestricted)
    }

    fn mismatch(&self, kind: BaseKind) -> RestrictionError {
        RestrictionError::KindMismatch {
            restriction: self.to_string(),
            kind: kind.to_string(),
        }
    }

    /// Checks that the restriction's form (and bound literals) fit `kind`.
    pub fn check_kind(&self, kind: BaseKind) -> Result<(), RestrictionError> {
        self.as_set(kind).map(|_| ())
    }

    fn as_set(&self, kind: BaseKind) -> Result<Set, RestrictionError> {
        match (self, kind) {
            (Restriction::Unrestricted, BaseKind::Int) => {
                Ok(Set::Int(IntSet { lo: None, hi: None }))
            }
            (Restriction::Unrestricted, BaseKind::Real) => {
                Ok(Set::Real(RealSet { lo: None, hi: None }))
            }
            (Restriction::Unrestricted, BaseKind::String) => {
                Ok(Set::Len(LenSet { min: 0, max: None }))
            }
            (Restriction::NumericRange { lower, upper }, BaseKind::Int) => {
                let int_of = |b: &Bound| match b.value {
                    Number::Int(i) => Ok(i as i128),
                    Number::Real(_) => Err(self.mismatch(kind)),
                };
                let lo = match lower {
                    None => None,
                    Some(b) => Some(int_of(b)? + if b.inclusive { 0 } else { 1 }),
                };
                let hi = match upper {
                    None => None,
                    Some(b) => Some(int_of(b)? - if b.inclusive { 0 } else { 1 }),
                };
                Ok(Set::Int(IntSet { lo, hi }))
            }
            (Restriction::NumericRange { lower, upper }, BaseKind::Real) => {
                Ok(Set::Real(RealSet {
                    lo: lower.map(|b| (b.value.as_f64(), b.inclusive)),
                    hi: upper.map(|b| (b.value.as_f64(), b.inclusive)),
                }))
            }
            (Restriction::StringLength { min, max }, BaseKind::String) => Ok(Set::Len(LenSet {
                min: *min,
                max: *max,
            })),
            _ => Err(self.mismatch(kind)),
        }
    }

    /// Whether the restriction admits no value of `kind`.
    pub fn is_empty(&self, kind: BaseKind) -> Result<bool, RestrictionError> {
        Ok(match self.as_set(kind)? {
            Set::Int(s) => s.is_empty(),
            Set::Real(s) => s.is_empty(),
            Set::Len(s) => s.is_empty(),
        })
    }

    /// Membership test. `v` must already be of `kind` (see [`Literal::coerce`]).
    pub fn admits(&self, kind: BaseKind, v: &Literal) -> Result<bool, RestrictionError> {
        if v.kind() != kind {
            return Err(RestrictionError::ValueKindMismatch {
                value_kind: v.kind(),
                kind,
            });
        }
        Ok(match (self.as_set(kind)?, v) {
            (Set::Int(s), Literal::Int(i)) => s.admits(*i as i128),
            (Set::Real(s), Literal::Real(r)) => s.admits(*r),
            (Set::Len(s), Literal::Str(st)) => s.admits(st.chars().count() as u64),
            _ => unreachable!("value kind verified above"),
        })
    }

    /// Set containment: every value of `kind` admitted by `inner` is
    /// admitted by `self`.
    pub fn contains(&self, inner: &Restriction, kind: BaseKind) -> Result<bool, RestrictionError> {
        Ok(match (self.as_set(kind)?, inner.as_set(kind)?) {
            (Set::Int(a), Set::Int(b)) => a.contains(&b),
            (Set::Real(a), Set::Real(b)) => a.contains(&b),
            (Set::Len(a), Set::Len(b)) => a.contains(&b),
            _ => unreachable!("both sets built for the same kind"),
        })
    }

    /// Rewrites an `Int` restriction with inclusive bounds only. The admitted
    /// set is unchanged. Empty ranges that cannot be expressed in `i64`
    /// become the canonical empty range `1 <= value <= 0`.
    pub fn normalize_int(&self) -> Result<Restriction, RestrictionError> {
        let Set::Int(set) = self.as_set(BaseKind::Int)? else {
            unreachable!()
        };
        if let Restriction::Unrestricted = self {
            return Ok(Restriction::Unrestricted);
        }
        let to_bound = |v: i128| {
            i64::try_from(v)
                .ok()
                .map(|v| Bound::inclusive(Number::Int(v)))
        };
        let lo = set.lo.map(to_bound);
        let hi = set.hi.map(to_bound);
        if set.is_empty() || matches!(lo, Some(None)) || matches!(hi, Some(None)) {
            return Ok(Restriction::range(
                Some(Bound::inclusive(Number::Int(1))),
                Some(Bound::inclusive(Number::Int(0))),
            ));
        }
        Ok(Restriction::range(lo.flatten(), hi.flatten()))
    }
}

fn lower_op(b: &Bound) -> &'static str {
    if b.inclusive {
        "<="
    } else {
        "<"
    }
}

fn upper_op(b: &Bound) -> &'static str {
    if b.inclusive {
        "<="
    } else {
        "<"
    }
}

/// Human-readable form, e.g. `value >= 0.0`, `0 <= value <= 10`, `length <= 8`.
impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restriction::Unrestricted => f.write_str("unrestricted"),
            Restriction::NumericRange { lower, upper } => match (lower, upper) {
                (Some(l), Some(u)) => {
                    write!(
                        f,
                        "{} {} value {} {}",
                        l.value,
                        lower_op(l),
                        upper_op(u),
                        u.value
                    )
                }
                (Some(l), None) => {
                    write!(
                        f,
                        "value {} {}",
                        if l.inclusive { ">=" } else { ">" },
                        l.value
                    )
                }
                (None, Some(u)) => write!(f, "value {} {}", upper_op(u), u.value),
                (None, None) => f.write_str("any value"),
            },
            Restriction::StringLength { min, max } => match (min, max) {
                (0, None) => f.write_str("any length"),
                (0, Some(max)) => write!(f, "length <= {max}"),
                (min, None) => write!(f, "length >= {min}"),
                (min, Some(max)) => write!(f, "{min} <= length <= {max}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(v: Number) -> Option<Bound> {
        Some(Bound::inclusive(v))
    }

    fn gt(v: Number) -> Option<Bound> {
        Some(Bound::exclusive(v))
    }

    #[test]
    fn admits_examples() {
        let r = Restriction::range(ge(Number::Int(0)), ge(Number::Int(10)));
        assert!(r.admits(BaseKind::Int, &Literal::Int(10)).unwrap());
        let positive = Restriction::range(gt(Number::Int(0)), None);
        assert!(!positive.admits(BaseKind::Int, &Literal::Int(0)).unwrap());
        let len = Restriction::StringLength {
            min: 0,
            max: Some(8),
        };
        assert!(len
            .admits(BaseKind::String, &Literal::Str("station1".into()))
            .unwrap());
        assert!(!len
            .admits(BaseKind::String, &Literal::Str("station12".into()))
            .unwrap());
    }

    #[test]
    fn admits_reports_kind_mismatch_instead_of_false() {
        let r = Restriction::range(ge(Number::Int(0)), None);
        assert!(r.admits(BaseKind::Int, &Literal::Str("x".into())).is_err());
        assert!(r
            .admits(BaseKind::String, &Literal::Str("x".into()))
            .is_err());
        let len = Restriction::StringLength { min: 1, max: None };
        assert!(len.admits(BaseKind::Int, &Literal::Int(1)).is_err());
        let real_bound = Restriction::range(ge(Number::Real(0.5)), None);
        assert!(real_bound.admits(BaseKind::Int, &Literal::Int(1)).is_err());
    }

    #[test]
    fn contains_examples() {
        let outer = Restriction::range(ge(Number::Int(0)), ge(Number::Int(10)));
        let inner = Restriction::range(ge(Number::Int(2)), ge(Number::Int(5)));
        assert!(outer.contains(&inner, BaseKind::Int).unwrap());

        let positive = Restriction::range(gt(Number::Int(0)), None);
        let non_negative = Restriction::range(ge(Number::Int(0)), None);
        assert!(!positive.contains(&non_negative, BaseKind::Int).unwrap());
        assert!(!positive.contains(&non_negative, BaseKind::Real).unwrap());

        let ge4 = Restriction::range(ge(Number::Int(4)), None);
        let gt3 = Restriction::range(gt(Number::Int(3)), None);
        assert!(ge4.contains(&gt3, BaseKind::Int).unwrap());
        assert!(gt3.contains(&ge4, BaseKind::Int).unwrap());
        // 3.5 separates them over the reals.
        assert!(!ge4.contains(&gt3, BaseKind::Real).unwrap());
    }

    #[test]
    fn unrestricted_is_top() {
        let r = Restriction::range(ge(Number::Real(0.0)), None);
        assert!(Restriction::Unrestricted
            .contains(&r, BaseKind::Real)
            .unwrap());
        assert!(!r
            .contains(&Restriction::Unrestricted, BaseKind::Real)
            .unwrap());
        let full = Restriction::range(None, None);
        assert!(full
            .contains(&Restriction::Unrestricted, BaseKind::Real)
            .unwrap());
        let any_len = Restriction::StringLength { min: 0, max: None };
        assert!(any_len
            .contains(&Restriction::Unrestricted, BaseKind::String)
            .unwrap());
    }

    #[test]
    fn emptiness() {
        let r = Restriction::range(ge(Number::Int(5)), ge(Number::Int(4)));
        assert!(r.is_empty(BaseKind::Int).unwrap());
        let open = Restriction::range(gt(Number::Int(3)), gt(Number::Int(4)));
        assert!(open.is_empty(BaseKind::Int).unwrap());
        assert!(!open.is_empty(BaseKind::Real).unwrap());
        let point_open = Restriction::range(gt(Number::Real(1.0)), ge(Number::Real(1.0)));
        assert!(point_open.is_empty(BaseKind::Real).unwrap());
        let len = Restriction::StringLength {
            min: 3,
            max: Some(2),
        };
        assert!(len.is_empty(BaseKind::String).unwrap());
    }

    #[test]
    fn normalization_removes_strict_bounds() {
        let r = Restriction::range(gt(Number::Int(3)), gt(Number::Int(9)));
        assert_eq!(
            r.normalize_int().unwrap(),
            Restriction::range(ge(Number::Int(4)), ge(Number::Int(8)))
        );
        let overflow = Restriction::range(gt(Number::Int(i64::MAX)), None);
        assert!(overflow
            .normalize_int()
            .unwrap()
            .is_empty(BaseKind::Int)
            .unwrap());
    }

    #[test]
    fn display_forms() {
        assert_eq!(
            Restriction::range(ge(Number::Real(0.0)), None).to_string(),
            "value >= 0.0"
        );
        assert_eq!(
            Restriction::range(ge(Number::Int(1)), ge(Number::Int(16))).to_string(),
            "1 <= value <= 16"
        );
        assert_eq!(
            Restriction::range(None, gt(Number::Int(3))).to_string(),
            "value < 3"
        );
        assert_eq!(
            Restriction::StringLength {
                min: 0,
                max: Some(8)
            }
            .to_string(),
            "length <= 8"
        );
    }
}
