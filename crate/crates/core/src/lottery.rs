//! Lotteries, utility functions and first-order stochastic dominance.

use serde::{Deserialize, Serialize};

use crate::order::{Alt, AltSet, WeakOrder};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LotteryError {
    #[error("lottery has {found} entries, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("negative probability {value} for alternative {alt}")]
    Negative { alt: usize, value: Rat },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(Rat),
    #[error("negative utility {value} for alternative {alt}")]
    NegativeUtility { alt: usize, value: Rat },
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("alternative {alt} out of range for m = {m}")]
    OutOfRange { alt: usize, m: usize },
}

/// A probability distribution over `m` alternatives with exact entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Lottery(Vec<Rat>);

impl Lottery {
    pub fn new(probs: Vec<Rat>) -> Result<Self, LotteryError> {
        if probs.is_empty() {
            return Err(LotteryError::Length { expected: 1, found: 0 });
        }
        if let Some((alt, value)) = probs.iter().enumerate().find(|(_, p)| p.is_negative()) {
            return Err(LotteryError::Negative { alt, value: value.clone() });
        }
        let total: Rat = probs.iter().sum();
        if !total.is_one() {
            return Err(LotteryError::NotNormalized(total));
        }
        Ok(Lottery(probs))
    }

    /// Like [`Lottery::new`], additionally checking the length.
    pub fn with_len(probs: Vec<Rat>, m: usize) -> Result<Self, LotteryError> {
        if probs.len() != m {
            return Err(LotteryError::Length { expected: m, found: probs.len() });
        }
        Lottery::new(probs)
    }

    /// Uniform over the members of `support`.
    pub fn uniform_over(m: usize, support: AltSet) -> Self {
        let n = support.len() as i64;
        assert!(n > 0, "empty support");
        let p = Rat::new(1, n);
        Lottery(
            (0..m)
                .map(|a| if support.contains(Alt(a)) { p.clone() } else { Rat::zero() })
                .collect(),
        )
    }

    pub fn point(m: usize, a: Alt) -> Self {
        Lottery::uniform_over(m, AltSet::singleton(a))
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[Rat]) -> Result<Self, LotteryError> {
        let total: Rat = weights.iter().sum();
        if let Some((alt, value)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(LotteryError::Negative { alt, value: value.clone() });
        }
        if !total.is_positive() {
            return Err(LotteryError::NotNormalized(total));
        }
        Lottery::new(weights.iter().map(|w| w / &total).collect())
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[Rat] {
        &self.0
    }

    pub fn prob(&self, a: Alt) -> &Rat {
        &self.0[a.0]
    }

    /// The unit-vector alternative, if this lottery is deterministic.
    pub fn as_point(&self) -> Option<Alt> {
        let mut hit = None;
        for (a, p) in self.0.iter().enumerate() {
            if p.is_one() {
                hit = Some(Alt(a));
            } else if !p.is_zero() {
                return None;
            }
        }
        hit
    }

    /// `x_A`: the probability of selecting a member of `set`.
    pub fn subset_prob(&self, set: AltSet) -> Rat {
        set.iter().map(|a| &self.0[a.0]).sum()
    }

    /// Checked variant of [`Lottery::subset_prob`] for externally supplied sets.
    pub fn try_subset_prob(&self, alts: &[Alt]) -> Result<Rat, LotteryError> {
        let m = self.m();
        if let Some(a) = alts.iter().find(|a| a.0 >= m) {
            return Err(LotteryError::OutOfRange { alt: a.0, m });
        }
        let set: AltSet = alts.iter().copied().collect();
        Ok(self.subset_prob(set))
    }

    /// Probability of each class of `order`, top class first.
    pub fn class_probs(&self, order: &WeakOrder) -> Vec<Rat> {
        order.classes().iter().map(|c| self.subset_prob(*c)).collect()
    }

    /// Cumulative probability of each upper contour set of `order`.
    pub fn cumulative(&self, order: &WeakOrder) -> Vec<Rat> {
        let mut acc = Rat::zero();
        order
            .classes()
            .iter()
            .map(|c| {
                acc += self.subset_prob(*c);
                acc.clone()
            })
            .collect()
    }
}

impl<'de> Deserialize<'de> for Lottery {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let probs = Vec::<Rat>::deserialize(deserializer)?;
        Lottery::new(probs).map_err(serde::de::Error::custom)
    }
}

/// A non-negative valuation of the alternatives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct UtilityFn(Vec<Rat>);

impl UtilityFn {
    pub fn new(values: Vec<Rat>) -> Result<Self, LotteryError> {
        if let Some((alt, value)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(LotteryError::NegativeUtility { alt, value: value.clone() });
        }
        Ok(UtilityFn(values))
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[Rat] {
        &self.0
    }

    pub fn value(&self, a: Alt) -> &Rat {
        &self.0[a.0]
    }

    /// `Σ_j u(j)·d_j` for an arbitrary vector `d`.
    pub fn dot(&self, d: &[Rat]) -> Rat {
        assert_eq!(self.0.len(), d.len());
        self.0.iter().zip(d).map(|(u, x)| u * x).sum()
    }

    /// Indicator of `set`.
    pub fn indicator(m: usize, set: AltSet) -> Self {
        UtilityFn(
            (0..m)
                .map(|a| if set.contains(Alt(a)) { Rat::one() } else { Rat::zero() })
                .collect(),
        )
    }

    /// `(1 - alpha)·self + alpha·other`, for `alpha` in `[0, 1]`.
    pub fn interpolate(&self, other: &UtilityFn, alpha: &Rat) -> UtilityFn {
        assert_eq!(self.m(), other.m());
        let beta = Rat::one() - alpha;
        UtilityFn(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(u, v)| &beta * u + alpha * v)
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for UtilityFn {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<Rat>::deserialize(deserializer)?;
        UtilityFn::new(values).map_err(serde::de::Error::custom)
    }
}

fn check_sizes(x: &Lottery, y: &Lottery, order: &WeakOrder) -> Result<(), LotteryError> {
    if x.m() != y.m() {
        return Err(LotteryError::SizeMismatch(x.m(), y.m()));
    }
    if x.m() != order.m() {
        return Err(LotteryError::SizeMismatch(x.m(), order.m()));
    }
    Ok(())
}

/// Whether `x` first-order stochastically dominates `y` at `order`.
///
/// Upper contour sets are constant within a class, so one comparison per
/// class suffices.
pub fn fosd(x: &Lottery, y: &Lottery, order: &WeakOrder) -> Result<bool, LotteryError> {
    check_sizes(x, y, order)?;
    Ok(first_fosd_failure(x, y, order).is_none())
}

/// The first class index (top-down) at which `x` fails to dominate `y`,
/// together with the two cumulative probabilities.
pub(crate) fn first_fosd_failure(
    x: &Lottery,
    y: &Lottery,
    order: &WeakOrder,
) -> Option<(usize, Rat, Rat)> {
    let mut cx = Rat::zero();
    let mut cy = Rat::zero();
    for (k, class) in order.classes().iter().enumerate() {
        for a in class.iter() {
            cx += x.prob(a);
            cy += y.prob(a);
        }
        if cx < cy {
            return Some((k, cx, cy));
        }
    }
    None
}

/// Dominance via the generating family of consistent utilities: the
/// indicator functions of the upper contour sets of `order`. Independent of
/// [`fosd`]; it forms the difference vector and takes inner products.
pub fn fosd_oracle_utilities(
    x: &Lottery,
    y: &Lottery,
    order: &WeakOrder,
) -> Result<bool, LotteryError> {
    check_sizes(x, y, order)?;
    let diff: Vec<Rat> = x.probs().iter().zip(y.probs()).map(|(a, b)| a - b).collect();
    let m = order.m();
    Ok(order
        .classes()
        .iter()
        .filter_map(|c| AltSet::min(*c))
        .map(|rep| UtilityFn::indicator(m, order.upper_contour(rep)))
        .all(|u| !u.dot(&diff).is_negative()))
}

/// `u(a) >= u(b)` whenever `a R b`: constant within classes and weakly
/// decreasing from one class to the next.
pub fn consistent(u: &UtilityFn, order: &WeakOrder) -> bool {
    if u.m() != order.m() {
        return false;
    }
    let mut prev: Option<&Rat> = None;
    for class in order.classes() {
        let mut members = class.iter();
        let first = u.value(members.next().expect("classes are non-empty"));
        if members.any(|a| u.value(a) != first) {
            return false;
        }
        if prev.is_some_and(|p| p < first) {
            return false;
        }
        prev = Some(first);
    }
    true
}

/// `u(a) = K - k(a) + 1` with `k(a)` the 1-based class index of `a`.
pub fn canonical_utility(order: &WeakOrder) -> UtilityFn {
    let num_classes = order.num_classes() as i64;
    let mut values = vec![Rat::zero(); order.m()];
    for (k, class) in order.classes().iter().enumerate() {
        for a in class.iter() {
            values[a.0] = Rat::from_int(num_classes - k as i64);
        }
    }
    UtilityFn(values)
}

/// The weak order whose classes are the level sets of `u`, in strictly
/// decreasing order of value.
pub fn order_from_utility(u: &UtilityFn) -> WeakOrder {
    let mut alts: Vec<Alt> = (0..u.m()).map(Alt).collect();
    alts.sort_by(|a, b| u.value(*b).cmp(u.value(*a)).then(a.cmp(b)));
    let mut classes: Vec<AltSet> = Vec::new();
    let mut last: Option<&Rat> = None;
    for a in alts {
        let v = u.value(a);
        match (last, classes.last_mut()) {
            (Some(l), Some(class)) if l == v => class.insert(a),
            _ => classes.push(AltSet::singleton(a)),
        }
        last = Some(v);
    }
    WeakOrder::from_parts_unchecked(u.m(), classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::enumerate_weak_orders;

    fn wo(s: &str) -> WeakOrder {
        s.parse().unwrap()
    }

    fn lot(items: &[&str]) -> Lottery {
        Lottery::new(items.iter().map(|s| s.parse().unwrap()).collect()).unwrap()
    }

    fn util(items: &[i64]) -> UtilityFn {
        UtilityFn::new(items.iter().map(|&v| Rat::from_int(v)).collect()).unwrap()
    }

    #[test]
    fn lottery_validation() {
        assert!(matches!(
            Lottery::new(vec![Rat::new(1, 2), Rat::new(2, 3)]),
            Err(LotteryError::NotNormalized(_))
        ));
        assert!(matches!(
            Lottery::new(vec![Rat::new(3, 2), Rat::new(-1, 2)]),
            Err(LotteryError::Negative { alt: 1, .. })
        ));
        assert!(matches!(
            Lottery::with_len(vec![Rat::one()], 2),
            Err(LotteryError::Length { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn subset_prob_examples() {
        let x = lot(&["1/2", "1/3", "1/6"]);
        assert_eq!(x.subset_prob(AltSet::EMPTY), Rat::zero());
        assert_eq!(x.subset_prob(AltSet::full(3)), Rat::one());
        assert_eq!(x.try_subset_prob(&[Alt(0), Alt(2)]).unwrap(), Rat::new(2, 3));
        assert_eq!(
            x.try_subset_prob(&[Alt(3)]),
            Err(LotteryError::OutOfRange { alt: 3, m: 3 })
        );
    }

    #[test]
    fn fosd_examples() {
        let r = wo("0>1>2");
        let x = lot(&["1/2", "1/2", "0"]);
        let y = lot(&["1/2", "0", "1/2"]);
        assert!(fosd(&x, &x, &r).unwrap());
        assert!(fosd(&x, &y, &r).unwrap());
        assert!(!fosd(&y, &x, &r).unwrap());
        assert!(fosd(&x, &y, &wo("0>1")).is_err());
    }

    #[test]
    fn oracle_examples() {
        let r = wo("0>1");
        let a = lot(&["1", "0"]);
        let b = lot(&["0", "1"]);
        assert!(fosd_oracle_utilities(&a, &a, &r).unwrap());
        assert!(fosd_oracle_utilities(&a, &b, &r).unwrap());
        assert!(!fosd_oracle_utilities(&b, &a, &r).unwrap());
    }

    #[test]
    fn consistency_examples() {
        assert!(consistent(&util(&[2, 1]), &wo("0>1")));
        assert!(!consistent(&util(&[1, 2]), &wo("0>1")));
        for c in 0..3 {
            assert!(consistent(&util(&[c, c, c]), &wo("0,1,2")));
        }
        assert!(!consistent(&util(&[1, 2, 1]), &wo("0,1,2")));
        // Flat across strict classes is weakly consistent.
        assert!(consistent(&util(&[1, 1]), &wo("0>1")));
    }

    #[test]
    fn canonical_utility_examples() {
        assert_eq!(canonical_utility(&wo("0>1>2")), util(&[3, 2, 1]));
        assert_eq!(canonical_utility(&wo("0,1,2")), util(&[1, 1, 1]));
        assert_eq!(canonical_utility(&wo("1>0,2")), util(&[1, 2, 1]));
    }

    #[test]
    fn order_from_utility_examples() {
        assert_eq!(order_from_utility(&util(&[3, 2, 1])), wo("0>1>2"));
        assert_eq!(order_from_utility(&util(&[1, 1, 1])), wo("0,1,2"));
        assert_eq!(order_from_utility(&util(&[1, 2, 1])), wo("1>0,2"));
    }

    #[test]
    fn canonical_utility_inverts() {
        for m in 1..=5 {
            for r in enumerate_weak_orders(m).unwrap() {
                let u = canonical_utility(&r);
                assert!(consistent(&u, &r));
                assert_eq!(order_from_utility(&u), r);
            }
        }
    }

    #[test]
    fn point_detection() {
        assert_eq!(Lottery::point(3, Alt(1)).as_point(), Some(Alt(1)));
        assert_eq!(lot(&["1/2", "1/2"]).as_point(), None);
    }
}
