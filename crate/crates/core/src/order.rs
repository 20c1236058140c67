//! Alternatives, alternative sets and weak orders.
//!
//! A weak order over `m` alternatives is stored as an ordered partition:
//! `classes[0]` is the most preferred indifference class. Its text form joins
//! classes with `>` and lists members of a class in ascending order separated
//! by commas, e.g. `0,1>2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest problem size a [`WeakOrder`] can represent.
pub const MAX_ALTS: usize = 32;

/// An alternative, identified by its index in `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alt(pub usize);

impl fmt::Display for Alt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of alternatives as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AltSet(u32);

impl AltSet {
    pub const EMPTY: AltSet = AltSet(0);

    pub fn from_bits(bits: u32) -> Self {
        AltSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// `{0, …, m-1}`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_ALTS);
        if m == MAX_ALTS {
            AltSet(u32::MAX)
        } else {
            AltSet((1u32 << m) - 1)
        }
    }

    pub fn singleton(a: Alt) -> Self {
        AltSet(1 << a.0)
    }

    pub fn contains(self, a: Alt) -> bool {
        a.0 < MAX_ALTS && self.0 & (1 << a.0) != 0
    }

    pub fn insert(&mut self, a: Alt) {
        self.0 |= 1 << a.0;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: AltSet) -> AltSet {
        AltSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AltSet) -> AltSet {
        AltSet(self.0 & other.0)
    }

    pub fn difference(self, other: AltSet) -> AltSet {
        AltSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AltSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: AltSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest member.
    pub fn min(self) -> Option<Alt> {
        (self.0 != 0).then(|| Alt(self.0.trailing_zeros() as usize))
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = Alt> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let a = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(Alt(a))
        })
    }

    /// Non-empty subsets in ascending bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = AltSet> {
        // Enumerate sub-masks in increasing numeric order by counting through
        // the compressed index space and scattering into the mask.
        let members: Vec<u32> = self.iter().map(|a| 1u32 << a.0).collect();
        let count = 1u64 << members.len();
        (1..count).map(move |i| {
            let mut bits = 0;
            for (j, bit) in members.iter().enumerate() {
                if i & (1 << j) != 0 {
                    bits |= bit;
                }
            }
            AltSet(bits)
        })
    }
}

impl FromIterator<Alt> for AltSet {
    fn from_iter<I: IntoIterator<Item = Alt>>(iter: I) -> Self {
        let mut s = AltSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl fmt::Debug for AltSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}

impl Serialize for AltSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for AltSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(deserializer)?;
        let mut set = AltSet::EMPTY;
        for a in items {
            if a >= MAX_ALTS {
                return Err(serde::de::Error::custom(format!("alternative {a} out of range")));
            }
            set.insert(Alt(a));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrderError {
    #[error("problem size must be at least 1")]
    EmptyProblem,
    #[error("problem size {0} exceeds the supported maximum of {max}", max = MAX_ALTS)]
    TooLarge(usize),
    #[error("empty indifference class")]
    EmptyClass,
    #[error("alternative {0} appears in more than one class")]
    Overlap(usize),
    #[error("alternative {alt} is out of range for m = {m}")]
    OutOfRange { alt: usize, m: usize },
    #[error("classes do not cover alternative {0}")]
    Uncovered(usize),
    #[error("malformed weak order {0:?}")]
    Malformed(String),
    #[error("order {order:?} has {found} alternatives, expected {expected}")]
    SizeMismatch {
        order: String,
        expected: usize,
        found: usize,
    },
}

/// A weak order: an ordered partition of `{0, …, m-1}` into non-empty classes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WeakOrder {
    m: usize,
    classes: Vec<AltSet>,
}

impl WeakOrder {
    /// Validates that `classes` partition `{0, …, m-1}`.
    pub fn new(m: usize, classes: Vec<AltSet>) -> Result<Self, OrderError> {
        if m == 0 {
            return Err(OrderError::EmptyProblem);
        }
        if m > MAX_ALTS {
            return Err(OrderError::TooLarge(m));
        }
        let full = AltSet::full(m);
        let mut seen = AltSet::EMPTY;
        for class in &classes {
            if class.is_empty() {
                return Err(OrderError::EmptyClass);
            }
            if let Some(a) = class.difference(full).min() {
                return Err(OrderError::OutOfRange { alt: a.0, m });
            }
            if let Some(a) = class.intersection(seen).min() {
                return Err(OrderError::Overlap(a.0));
            }
            seen = seen.union(*class);
        }
        if let Some(a) = full.difference(seen).min() {
            return Err(OrderError::Uncovered(a.0));
        }
        Ok(WeakOrder { m, classes })
    }

    pub(crate) fn from_parts_unchecked(m: usize, classes: Vec<AltSet>) -> Self {
        debug_assert!(WeakOrder::new(m, classes.clone()).is_ok());
        WeakOrder { m, classes }
    }

    /// Complete indifference.
    pub fn indifferent(m: usize) -> Result<Self, OrderError> {
        WeakOrder::new(m, vec![AltSet::full(m)])
    }

    /// Parses the text form, requiring exactly `m` alternatives.
    pub fn parse_with_m(s: &str, m: usize) -> Result<Self, OrderError> {
        let order: WeakOrder = s.parse()?;
        if order.m != m {
            return Err(OrderError::SizeMismatch {
                order: s.to_string(),
                expected: m,
                found: order.m,
            });
        }
        Ok(order)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn classes(&self) -> &[AltSet] {
        &self.classes
    }

    /// Number of classes `K`.
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Zero-based index of the class holding `a`.
    pub fn class_of(&self, a: Alt) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(a))
            .unwrap_or_else(|| panic!("alternative {a} not in order {self}"))
    }

    /// `{ j : j R a }`: the union of all classes up to and including `a`'s.
    pub fn upper_contour(&self, a: Alt) -> AltSet {
        let k = self.class_of(a);
        self.classes[..=k]
            .iter()
            .fold(AltSet::EMPTY, |acc, c| acc.union(*c))
    }

    /// Upper contour sets, one per class, from the top class downwards.
    pub fn upper_contours(&self) -> impl Iterator<Item = AltSet> + '_ {
        self.classes.iter().scan(AltSet::EMPTY, |acc, c| {
            *acc = acc.union(*c);
            Some(*acc)
        })
    }

    /// True iff `a R b`.
    pub fn weakly_prefers(&self, a: Alt, b: Alt) -> bool {
        self.class_of(a) <= self.class_of(b)
    }

    /// True iff every class is a singleton.
    pub fn is_strict(&self) -> bool {
        self.classes.len() == self.m
    }

    /// The order with class `k` replaced by `parts`, in the given order.
    pub fn refine_class(&self, k: usize, parts: &[AltSet]) -> WeakOrder {
        let mut classes = Vec::with_capacity(self.classes.len() + parts.len() - 1);
        classes.extend_from_slice(&self.classes[..k]);
        classes.extend_from_slice(parts);
        classes.extend_from_slice(&self.classes[k + 1..]);
        WeakOrder::from_parts_unchecked(self.m, classes)
    }
}

impl fmt::Display for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, class) in self.classes.iter().enumerate() {
            if k > 0 {
                f.write_str(">")?;
            }
            for (i, a) in class.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeakOrder({self})")
    }
}

/// Parses the canonical text form. Members of a class must be listed in
/// strictly ascending order and `m` is inferred from the number of members.
impl FromStr for WeakOrder {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || OrderError::Malformed(s.to_string());
        let mut classes = Vec::new();
        let mut count = 0usize;
        for class_text in s.split('>') {
            let mut class = AltSet::EMPTY;
            let mut prev: Option<usize> = None;
            for member in class_text.split(',') {
                if member.is_empty()
                    || !member.bytes().all(|b| b.is_ascii_digit())
                    || (member.len() > 1 && member.starts_with('0'))
                {
                    return Err(malformed());
                }
                let a: usize = member.parse().map_err(|_| malformed())?;
                if a >= MAX_ALTS {
                    return Err(OrderError::TooLarge(a + 1));
                }
                if prev.is_some_and(|p| p >= a) {
                    return Err(malformed());
                }
                prev = Some(a);
                class.insert(Alt(a));
                count += 1;
            }
            classes.push(class);
        }
        WeakOrder::new(count, classes)
    }
}

impl Serialize for WeakOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeakOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every ordered partition of `set` into non-empty blocks.
///
/// The first block ranges over the non-empty subsets of `set` in ascending
/// bitmask order; the remaining blocks are produced recursively in the same
/// order. An empty `set` has exactly one ordered partition, the empty one.
pub fn ordered_partitions(set: AltSet) -> Vec<Vec<AltSet>> {
    fn go(rest: AltSet, prefix: &mut Vec<AltSet>, out: &mut Vec<Vec<AltSet>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for first in rest.nonempty_subsets() {
            prefix.push(first);
            go(rest.difference(first), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(set, &mut Vec::new(), &mut out);
    out
}

/// All weak orders over `m` alternatives in canonical order.
pub fn enumerate_weak_orders(m: usize) -> Result<Vec<WeakOrder>, OrderError> {
    if m == 0 {
        return Err(OrderError::EmptyProblem);
    }
    if m > MAX_ALTS {
        return Err(OrderError::TooLarge(m));
    }
    Ok(ordered_partitions(AltSet::full(m))
        .into_iter()
        .map(|classes| WeakOrder::from_parts_unchecked(m, classes))
        .collect())
}
