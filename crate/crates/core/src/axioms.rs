//! Separations and the separation axioms.
//!
//! A separation `(R, R')` splits one indifference class `M_κ` of `R` into an
//! upper part `M¹` and a lower part `M²`, ranked `M¹` above `M²` in `R'`, and
//! leaves every other class untouched. Each checker walks all separations of
//! a mechanism's domain and reports the first violation in canonical order
//! (coarse order index, split class, bitmask of `M¹`).
//!
//! Class indices are zero-based in the API and one-based in JSON output.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::domain::SepIndex;
use crate::lottery::Lottery;
use crate::mechanism::MechanismTable;
use crate::order::{AltSet, WeakOrder};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("orders have different sizes: {0} vs {1}")]
pub struct SizeMismatch(pub usize, pub usize);

/// Outcome of a check: pass, or a witness of failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Pass,
    Fail(W),
}

impl<W> Verdict<W> {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(w) => Some(w),
        }
    }

    pub fn into_witness(self) -> Option<W> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(w) => Some(w),
        }
    }
}

impl<W> From<Option<W>> for Verdict<W> {
    fn from(w: Option<W>) -> Self {
        w.map_or(Verdict::Pass, Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Separation {
    pub coarse: WeakOrder,
    pub fine: WeakOrder,
    /// Zero-based index of the split class in `coarse`.
    pub class: usize,
    /// `M¹`, ranked first in `fine`.
    pub upper: AltSet,
    /// `M²`.
    pub lower: AltSet,
}

/// Returns the witness if `(coarse, fine)` is a separation.
pub fn as_separation(
    coarse: &WeakOrder,
    fine: &WeakOrder,
) -> Result<Option<Separation>, SizeMismatch> {
    if coarse.m() != fine.m() {
        return Err(SizeMismatch(coarse.m(), fine.m()));
    }
    let (rc, fc) = (coarse.classes(), fine.classes());
    if fc.len() != rc.len() + 1 {
        return Ok(None);
    }
    let Some(k) = rc.iter().zip(fc).position(|(a, b)| a != b) else {
        return Ok(None);
    };
    let (upper, lower) = (fc[k], fc[k + 1]);
    if upper.union(lower) != rc[k] || rc[k + 1..] != fc[k + 2..] {
        return Ok(None);
    }
    Ok(Some(Separation {
        coarse: coarse.clone(),
        fine: fine.clone(),
        class: k,
        upper,
        lower,
    }))
}

/// Every separation with coarse side `order`, by split class and then by the
/// bitmask of the upper part.
pub fn enumerate_separations(order: &WeakOrder) -> Vec<Separation> {
    let mut out = Vec::new();
    for (k, &class) in order.classes().iter().enumerate() {
        if class.len() < 2 {
            continue;
        }
        for upper in class.nonempty_subsets().filter(|s| *s != class) {
            let lower = class.difference(upper);
            out.push(Separation {
                coarse: order.clone(),
                fine: order.refine_class(k, &[upper, lower]),
                class: k,
                upper,
                lower,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Responsive,
    Direct,
    UpperInvariant,
    LowerInvariant,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::Responsive => "responsive",
            Axiom::Direct => "direct",
            Axiom::UpperInvariant => "upper_invariant",
            Axiom::LowerInvariant => "lower_invariant",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Axiom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Which part of a split class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Upper,
    Lower,
}

impl Part {
    fn set(self, sep: &Separation) -> AltSet {
        match self {
            Part::Upper => sep.upper,
            Part::Lower => sep.lower,
        }
    }

    fn number(self) -> usize {
        match self {
            Part::Upper => 1,
            Part::Lower => 2,
        }
    }
}

/// What a certificate's two values measure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Witness {
    /// Probability of `M¹` or `M²` moved the wrong way.
    Part(Part),
    /// Probability of coarse class `k` changed.
    Class(usize),
    /// Class `class` changed but the probability of `unchanged` did not;
    /// `unchanged_value` is that probability on both sides.
    Direct {
        class: usize,
        unchanged: Part,
        unchanged_value: Rat,
    },
}

/// A counterexample to one axiom.
///
/// `coarse_value` and `fine_value` are the probabilities of the witnessed set
/// under the coarse and fine report respectively.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub axiom: Axiom,
    pub separation: Separation,
    pub witness: Witness,
    pub coarse_value: Rat,
    pub fine_value: Rat,
}

impl Certificate {
    fn witnessed_set(&self) -> AltSet {
        match &self.witness {
            Witness::Part(p) => p.set(&self.separation),
            Witness::Class(k) | Witness::Direct { class: k, .. } => {
                self.separation.coarse.classes()[*k]
            }
        }
    }

    /// Recomputes the stated values from `mech` and confirms the violation.
    pub fn verify(&self, mech: &MechanismTable) -> bool {
        let sep = &self.separation;
        if as_separation(&sep.coarse, &sep.fine).ok().flatten().as_ref() != Some(sep) {
            return false;
        }
        let (Some(x), Some(y)) = (mech.outcome(&sep.coarse), mech.outcome(&sep.fine)) else {
            return false;
        };
        let set = self.witnessed_set();
        let (cv, fv) = (x.subset_prob(set), y.subset_prob(set));
        if cv != self.coarse_value || fv != self.fine_value {
            return false;
        }
        match (&self.axiom, &self.witness) {
            (Axiom::Responsive, Witness::Part(Part::Upper)) => fv < cv,
            (Axiom::Responsive, Witness::Part(Part::Lower)) => fv > cv,
            (Axiom::UpperInvariant, Witness::Class(k)) => *k < sep.class && cv != fv,
            (Axiom::LowerInvariant, Witness::Class(k)) => *k > sep.class && cv != fv,
            (
                Axiom::Direct,
                Witness::Direct {
                    unchanged,
                    unchanged_value,
                    ..
                },
            ) => {
                let part = unchanged.set(sep);
                cv != fv
                    && x.subset_prob(part) == *unchanged_value
                    && y.subset_prob(part) == *unchanged_value
            }
            _ => false,
        }
    }
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Flat<'a> {
            axiom: Axiom,
            coarse: &'a WeakOrder,
            fine: &'a WeakOrder,
            kappa: usize,
            #[serde(rename = "M1")]
            m1: AltSet,
            #[serde(rename = "M2")]
            m2: AltSet,
            k: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            part: Option<usize>,
            lhs: &'a Rat,
            rhs: &'a Rat,
            #[serde(skip_serializing_if = "Option::is_none")]
            unchanged_value: Option<&'a Rat>,
        }
        let sep = &self.separation;
        let (k, part, unchanged_value) = match &self.witness {
            Witness::Part(p) => (sep.class, Some(p.number()), None),
            Witness::Class(k) => (*k, None, None),
            Witness::Direct {
                class,
                unchanged,
                unchanged_value,
            } => (*class, Some(unchanged.number()), Some(unchanged_value)),
        };
        Flat {
            axiom: self.axiom,
            coarse: &sep.coarse,
            fine: &sep.fine,
            kappa: sep.class + 1,
            m1: sep.upper,
            m2: sep.lower,
            k: k + 1,
            part,
            lhs: &self.coarse_value,
            rhs: &self.fine_value,
            unchanged_value,
        }
        .serialize(serializer)
    }
}

struct SepView<'a> {
    idx: &'a SepIndex,
    coarse_order: &'a WeakOrder,
    coarse: &'a Lottery,
    fine: &'a Lottery,
}

impl<'a> SepView<'a> {
    fn new(mech: &'a MechanismTable, idx: &'a SepIndex) -> Self {
        SepView {
            idx,
            coarse_order: mech.domain().order(idx.coarse),
            coarse: mech.at(idx.coarse),
            fine: mech.at(idx.fine),
        }
    }

    fn values(&self, set: AltSet) -> (Rat, Rat) {
        (self.coarse.subset_prob(set), self.fine.subset_prob(set))
    }

    fn part_set(&self, part: Part) -> AltSet {
        match part {
            Part::Upper => self.idx.upper,
            Part::Lower => self.idx.lower,
        }
    }

    fn certificate(&self, mech: &MechanismTable, axiom: Axiom, witness: Witness, values: (Rat, Rat)) -> Certificate {
        Certificate {
            axiom,
            separation: mech.domain().separation(self.idx),
            witness,
            coarse_value: values.0,
            fine_value: values.1,
        }
    }

    fn responsive(&self, mech: &MechanismTable) -> Option<Certificate> {
        let (c1, f1) = self.values(self.idx.upper);
        if f1 < c1 {
            return Some(self.certificate(mech, Axiom::Responsive, Witness::Part(Part::Upper), (c1, f1)));
        }
        let (c2, f2) = self.values(self.idx.lower);
        if f2 > c2 {
            return Some(self.certificate(mech, Axiom::Responsive, Witness::Part(Part::Lower), (c2, f2)));
        }
        None
    }

    fn direct(&self, mech: &MechanismTable) -> Option<Certificate> {
        let (class, values) = self
            .coarse_order
            .classes()
            .iter()
            .enumerate()
            .map(|(k, set)| (k, self.values(*set)))
            .find(|(_, (c, f))| c != f)?;
        for part in [Part::Upper, Part::Lower] {
            let (c, f) = self.values(self.part_set(part));
            if c == f {
                return Some(self.certificate(
                    mech,
                    Axiom::Direct,
                    Witness::Direct {
                        class,
                        unchanged: part,
                        unchanged_value: c,
                    },
                    values,
                ));
            }
        }
        None
    }

    fn invariant(&self, mech: &MechanismTable, axiom: Axiom) -> Option<Certificate> {
        let classes = self.coarse_order.classes();
        let range = match axiom {
            Axiom::UpperInvariant => 0..self.idx.class,
            _ => self.idx.class + 1..classes.len(),
        };
        range
            .map(|k| (k, self.values(classes[k])))
            .find(|(_, (c, f))| c != f)
            .map(|(k, values)| self.certificate(mech, axiom, Witness::Class(k), values))
    }

    fn check(&self, mech: &MechanismTable, axiom: Axiom) -> Option<Certificate> {
        match axiom {
            Axiom::Responsive => self.responsive(mech),
            Axiom::Direct => self.direct(mech),
            Axiom::UpperInvariant | Axiom::LowerInvariant => self.invariant(mech, axiom),
        }
    }
}

/// First separation (in canonical order) violating any of `axioms`; at one
/// separation the axioms are tried in the order given.
pub fn first_violation(mech: &MechanismTable, axioms: &[Axiom]) -> Verdict<Certificate> {
    mech.domain()
        .separations()
        .par_iter()
        .find_map_first(|idx| {
            let view = SepView::new(mech, idx);
            axioms.iter().find_map(|&a| view.check(mech, a))
        })
        .into()
}

/// Every violating separation for `axiom`, in canonical order.
pub fn all_violations(mech: &MechanismTable, axiom: Axiom) -> Vec<Certificate> {
    mech.domain()
        .separations()
        .par_iter()
        .filter_map(|idx| SepView::new(mech, idx).check(mech, axiom))
        .collect()
}

pub fn check_separation_responsive(mech: &MechanismTable) -> Verdict<Certificate> {
    first_violation(mech, &[Axiom::Responsive])
}

pub fn check_separation_direct(mech: &MechanismTable) -> Verdict<Certificate> {
    first_violation(mech, &[Axiom::Direct])
}

/// Responsive and direct.
pub fn check_separation_monotonic(mech: &MechanismTable) -> Verdict<Certificate> {
    first_violation(mech, &[Axiom::Responsive, Axiom::Direct])
}

pub fn check_upper_invariant(mech: &MechanismTable) -> Verdict<Certificate> {
    first_violation(mech, &[Axiom::UpperInvariant])
}

pub fn check_lower_invariant(mech: &MechanismTable) -> Verdict<Certificate> {
    first_violation(mech, &[Axiom::LowerInvariant])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::mechanism::*;
    use crate::order::{enumerate_weak_orders, Alt};
    use std::collections::HashSet;

    fn wo(s: &str) -> WeakOrder {
        s.parse().unwrap()
    }

    fn set(items: &[usize]) -> AltSet {
        items.iter().map(|&a| Alt(a)).collect()
    }

    #[test]
    fn as_separation_examples() {
        let s = as_separation(&wo("0,1>2"), &wo("0>1>2")).unwrap().unwrap();
        assert_eq!((s.class, s.upper, s.lower), (0, set(&[0]), set(&[1])));
        assert_eq!(as_separation(&wo("0>1>2"), &wo("0>1>2")).unwrap(), None);
        let s = as_separation(&wo("0,1,2"), &wo("2>0,1")).unwrap().unwrap();
        assert_eq!((s.class, s.upper, s.lower), (0, set(&[2]), set(&[0, 1])));
        assert_eq!(as_separation(&wo("0>1"), &wo("0>1>2")), Err(SizeMismatch(2, 3)));
        // Reordering other classes is not a separation.
        assert_eq!(as_separation(&wo("0,1>2"), &wo("2>0>1")).unwrap(), None);
        assert_eq!(as_separation(&wo("0,1>2,3"), &wo("0>1>3>2")).unwrap(), None);
    }

    #[test]
    fn enumerate_separation_examples() {
        assert_eq!(enumerate_separations(&wo("0,1,2")).len(), 6);
        assert!(enumerate_separations(&wo("2>0>1")).is_empty());
        assert_eq!(enumerate_separations(&wo("0,1>2")).len(), 2);
    }

    #[test]
    fn enumeration_matches_pair_filter() {
        for m in 1..=5 {
            let orders = enumerate_weak_orders(m).unwrap();
            let mut from_filter = HashSet::new();
            if m <= 4 {
                for r in &orders {
                    for rp in &orders {
                        if let Some(s) = as_separation(r, rp).unwrap() {
                            assert_eq!(rp.num_classes(), r.num_classes() + 1);
                            from_filter.insert(s);
                        }
                    }
                }
            }
            let mut enumerated = HashSet::new();
            for r in &orders {
                let seps = enumerate_separations(r);
                let expected: usize = r.classes().iter().map(|c| (1 << c.len()) - 2).sum();
                assert_eq!(seps.len(), expected);
                for s in seps {
                    assert_eq!(as_separation(&s.coarse, &s.fine).unwrap().as_ref(), Some(&s));
                    assert!(enumerated.insert(s), "duplicate separation");
                }
            }
            if m <= 4 {
                assert_eq!(enumerated, from_filter);
            }
        }
    }

    #[test]
    fn zoo_axiom_verdicts_m3() {
        let d = Domain::new(3).unwrap();
        let uniform = uniform_lottery(&d);
        let top = top_class_uniform(&d);
        let dict = min_top_dictator(&d);
        let constant = constant_point(&d, Alt(0));
        for mech in [&uniform, &top, &dict, &constant] {
            assert!(check_separation_responsive(mech).is_pass());
            assert!(check_separation_direct(mech).is_pass());
            assert!(check_separation_monotonic(mech).is_pass());
            assert!(check_upper_invariant(mech).is_pass());
            assert!(check_lower_invariant(mech).is_pass());
        }

        // Class sums of rank scores do not depend on how a class is split.
        let rank = rank_score(&d);
        assert!(check_separation_monotonic(&rank).is_pass());
        assert!(check_upper_invariant(&rank).is_pass());
        assert!(check_lower_invariant(&rank).is_pass());

        let bottom = bottom_class_uniform(&d);
        let cert = check_separation_responsive(&bottom).into_witness().unwrap();
        assert_eq!(cert.witness, Witness::Part(Part::Upper));
        assert!(cert.verify(&bottom));

        let boost = k_sensitive_boost(&d);
        let cert = check_upper_invariant(&boost).into_witness().unwrap();
        assert!(cert.separation.class >= 1);
        assert_eq!(cert.witness, Witness::Class(0));
        assert!(cert.verify(&boost));
        let cert = check_lower_invariant(&boost).into_witness().unwrap();
        assert!(cert.verify(&boost));
    }

    #[test]
    fn boost_certificate_for_named_separation() {
        let d = Domain::new(3).unwrap();
        let boost = k_sensitive_boost(&d);
        let certs = all_violations(&boost, Axiom::UpperInvariant);
        let hit = certs
            .iter()
            .find(|c| c.separation.coarse == wo("0>1,2") && c.separation.fine == wo("0>1>2"))
            .expect("0>1,2 -> 0>1>2 violates upper invariance");
        assert_eq!(hit.separation.class, 1);
        assert_eq!(hit.coarse_value, Rat::new(2, 3));
        assert_eq!(hit.fine_value, Rat::new(3, 4));
    }

    #[test]
    fn certificate_json_shape() {
        let d = Domain::new(3).unwrap();
        let boost = k_sensitive_boost(&d);
        let cert = check_upper_invariant(&boost).into_witness().unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        for key in ["axiom", "coarse", "fine", "kappa", "M1", "M2", "k", "lhs", "rhs"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["axiom"], "upper_invariant");
        assert_eq!(json["k"], 1);
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let d = Domain::new(3).unwrap();
        let boost = k_sensitive_boost(&d);
        let mut cert = check_lower_invariant(&boost).into_witness().unwrap();
        assert!(cert.verify(&boost));
        cert.fine_value = cert.coarse_value.clone();
        assert!(!cert.verify(&boost));
        assert!(!check_lower_invariant(&boost).into_witness().unwrap().verify(&uniform_lottery(&d)));
    }

    #[test]
    fn collected_violations_start_with_first() {
        let d = Domain::new(4).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let mech = random_mechanism(&d, &mut rng, 12);
        for axiom in [Axiom::Responsive, Axiom::Direct, Axiom::UpperInvariant, Axiom::LowerInvariant] {
            let all = all_violations(&mech, axiom);
            let first = first_violation(&mech, &[axiom]).into_witness();
            assert!(!all.is_empty());
            assert_eq!(all.first(), first.as_ref());
            assert!(all.iter().all(|c| c.verify(&mech)));
        }
    }
}
