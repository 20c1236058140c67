//! Refinement relations between weak orders and the utility-segment path.
//!
//! An L-separation splits one class of `R` into `L ≥ 2` ordered parts; a
//! multi-separation refines every class in place (a class may stay whole).
//! Sufficiency of the axioms goes through these: an L-separation is a chain
//! of `L - 1` separations, and the segment between two consistent utility
//! functions crosses a sequence of orders in which neighbours are related by
//! a multi-separation.

use rayon::prelude::*;
use serde::Serialize;

use crate::axioms::{as_separation, Separation, SizeMismatch, Verdict};
use crate::domain::Domain;
use crate::lottery::{consistent, first_fosd_failure, UtilityFn};
use crate::mechanism::MechanismTable;
use crate::order::{ordered_partitions, AltSet, WeakOrder};
use crate::rat::Rat;
use crate::verify::SpViolation;

pub use crate::lottery::order_from_utility;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error(transparent)]
    Size(#[from] SizeMismatch),
    #[error("utility {which} is not strictly consistent with {order}")]
    Inconsistent { which: &'static str, order: String },
    #[error("not a valid L-separation witness")]
    BadWitness,
    #[error("orders {0} and {1} on the segment are not related by a multi-separation")]
    NotAdjacent(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LSeparation {
    pub coarse: WeakOrder,
    pub fine: WeakOrder,
    /// Zero-based index of the refined class in `coarse`.
    pub class: usize,
    pub parts: Vec<AltSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiSeparation {
    pub coarse: WeakOrder,
    pub fine: WeakOrder,
    /// For each class of `coarse`, its ordered parts in `fine`.
    pub refinements: Vec<Vec<AltSet>>,
}

impl MultiSeparation {
    /// `L_k` for every class.
    pub fn part_counts(&self) -> Vec<usize> {
        self.refinements.iter().map(Vec::len).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.refinements.iter().all(|r| r.len() == 1)
    }
}

/// Splits the classes of `fine` into consecutive groups, one per class of
/// `coarse`, each group partitioning its class.
pub fn as_multi_separation(
    coarse: &WeakOrder,
    fine: &WeakOrder,
) -> Result<Option<MultiSeparation>, SizeMismatch> {
    if coarse.m() != fine.m() {
        return Err(SizeMismatch(coarse.m(), fine.m()));
    }
    let mut fine_classes = fine.classes().iter().copied();
    let mut refinements = Vec::with_capacity(coarse.num_classes());
    for &class in coarse.classes() {
        let mut parts = Vec::new();
        let mut covered = AltSet::EMPTY;
        while covered != class {
            match fine_classes.next() {
                Some(part) if part.is_subset(class) => {
                    covered = covered.union(part);
                    parts.push(part);
                }
                _ => return Ok(None),
            }
        }
        refinements.push(parts);
    }
    Ok(Some(MultiSeparation {
        coarse: coarse.clone(),
        fine: fine.clone(),
        refinements,
    }))
}

/// A multi-separation refining exactly one class, into at least two parts.
pub fn as_l_separation(
    coarse: &WeakOrder,
    fine: &WeakOrder,
) -> Result<Option<LSeparation>, SizeMismatch> {
    let Some(multi) = as_multi_separation(coarse, fine)? else {
        return Ok(None);
    };
    let mut refined = multi.refinements.iter().enumerate().filter(|(_, r)| r.len() >= 2);
    match (refined.next(), refined.next()) {
        (Some((class, parts)), None) => Ok(Some(LSeparation {
            coarse: coarse.clone(),
            fine: fine.clone(),
            class,
            parts: parts.clone(),
        })),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStyle {
    /// Peel off one part at a time from the front.
    TopFirst,
    /// Split `M¹ ∪ M²` from the rest, peel the remaining parts off the
    /// bottom block, and separate `M¹` from `M²` last.
    BottomMerge,
}

fn union(parts: &[AltSet]) -> AltSet {
    parts.iter().fold(AltSet::EMPTY, |acc, p| acc.union(*p))
}

/// Writes an L-separation as a chain of `L - 1` separations from its coarse
/// to its fine order.
pub fn decompose_l_separation(
    ls: &LSeparation,
    style: ChainStyle,
) -> Result<Vec<Separation>, PathError> {
    if as_l_separation(&ls.coarse, &ls.fine)?.as_ref() != Some(ls) {
        return Err(PathError::BadWitness);
    }
    let parts = &ls.parts;
    let count = parts.len();
    let mut chain = vec![ls.coarse.clone()];
    match style {
        ChainStyle::TopFirst => {
            for split in 1..count {
                let mut blocks = parts[..split].to_vec();
                blocks.push(union(&parts[split..]));
                chain.push(ls.coarse.refine_class(ls.class, &blocks));
            }
        }
        ChainStyle::BottomMerge => {
            if count > 2 {
                let head = parts[0].union(parts[1]);
                for peeled in 0..count - 2 {
                    let mut blocks = vec![head];
                    blocks.extend_from_slice(&parts[2..2 + peeled]);
                    blocks.push(union(&parts[2 + peeled..]));
                    chain.push(ls.coarse.refine_class(ls.class, &blocks));
                }
            }
            chain.push(ls.fine.clone());
        }
    }
    chain
        .windows(2)
        .map(|w| as_separation(&w[0], &w[1])?.ok_or(PathError::BadWitness))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementKind {
    Separation,
    LSeparation,
    MultiSeparation,
}

/// Every non-identity refinement of `order` of the given kind, as the fine
/// orders in enumeration order.
pub fn refinements(order: &WeakOrder, kind: RefinementKind) -> Vec<WeakOrder> {
    let classes = order.classes();
    match kind {
        RefinementKind::Separation => crate::axioms::enumerate_separations(order)
            .into_iter()
            .map(|s| s.fine)
            .collect(),
        RefinementKind::LSeparation => classes
            .iter()
            .enumerate()
            .flat_map(|(k, &class)| {
                ordered_partitions(class)
                    .into_iter()
                    .filter(|p| p.len() >= 2)
                    .map(move |p| order.refine_class(k, &p))
            })
            .collect(),
        RefinementKind::MultiSeparation => {
            let options: Vec<Vec<Vec<AltSet>>> =
                classes.iter().map(|c| ordered_partitions(*c)).collect();
            let mut out = Vec::new();
            let mut choice = vec![0usize; options.len()];
            loop {
                if choice.iter().zip(&options).any(|(&c, opts)| opts[c].len() > 1) {
                    let blocks: Vec<AltSet> = choice
                        .iter()
                        .zip(&options)
                        .flat_map(|(&c, opts)| opts[c].iter().copied())
                        .collect();
                    out.push(WeakOrder::from_parts_unchecked(order.m(), blocks));
                }
                // Odometer over the per-class choices, last class fastest.
                let mut pos = options.len();
                loop {
                    if pos == 0 {
                        return out;
                    }
                    pos -= 1;
                    choice[pos] += 1;
                    if choice[pos] < options[pos].len() {
                        break;
                    }
                    choice[pos] = 0;
                }
            }
        }
    }
}

/// Which report's dominance failed for a refinement pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `φ(R)` does not dominate `φ(R')` at the coarse `R`.
    Coarse,
    /// `φ(R')` does not dominate `φ(R)` at the fine `R'`.
    Fine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinementViolation {
    pub kind: RefinementKind,
    pub side: Side,
    pub violation: SpViolation,
}

fn dominance_failure(
    mech: &MechanismTable,
    truth: usize,
    misreport: usize,
) -> Option<SpViolation> {
    let domain = mech.domain();
    let order = domain.order(truth);
    first_fosd_failure(mech.at(truth), mech.at(misreport), order).map(|(class, tx, ty)| {
        SpViolation {
            truth: order.clone(),
            misreport: domain.order(misreport).clone(),
            class,
            representative: order.classes()[class].min().expect("non-empty class"),
            truthful: tx,
            misreported: ty,
        }
    })
}

/// Pairs `(coarse, fine)` of canonical indices for every refinement of the
/// given kind, ordered by coarse index.
pub fn refinement_pairs(domain: &Domain, kind: RefinementKind) -> Vec<(usize, usize)> {
    domain
        .orders()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, order)| {
            refinements(order, kind)
                .into_iter()
                .map(move |fine| (i, fine))
        })
        .map(|(i, fine)| (i, domain.index_of(&fine).expect("refinement lies in the domain")))
        .collect()
}

/// For every refinement `(R, R')` of the given kind: `φ(R)` dominates
/// `φ(R')` at `R`, and `φ(R')` dominates `φ(R)` at `R'`. Identity
/// multi-separations hold trivially and are skipped.
pub fn check_refinement_sp(
    mech: &MechanismTable,
    kind: RefinementKind,
) -> Verdict<RefinementViolation> {
    let domain = mech.domain();
    (0..domain.len())
        .into_par_iter()
        .find_map_first(|i| {
            refinements(domain.order(i), kind).into_iter().find_map(|fine| {
                let j = domain.index_of(&fine).expect("refinement lies in the domain");
                dominance_failure(mech, i, j)
                    .map(|v| (Side::Coarse, v))
                    .or_else(|| dominance_failure(mech, j, i).map(|v| (Side::Fine, v)))
                    .map(|(side, violation)| RefinementViolation { kind, side, violation })
            })
        })
        .into()
}

pub fn check_multi_separation_sp(mech: &MechanismTable) -> Verdict<RefinementViolation> {
    check_refinement_sp(mech, RefinementKind::MultiSeparation)
}

/// The segment `u_α = (1 - α)·u + α·u'` for `α ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UtilitySegment {
    pub u: UtilityFn,
    pub up: UtilityFn,
    /// Sorted, distinct `α ∈ (0, 1)` at which two components that differ
    /// nearby become equal.
    pub breakpoints: Vec<Rat>,
}

impl UtilitySegment {
    pub fn new(u: UtilityFn, up: UtilityFn) -> Result<Self, SizeMismatch> {
        if u.m() != up.m() {
            return Err(SizeMismatch(u.m(), up.m()));
        }
        let (zero, one) = (Rat::zero(), Rat::one());
        let m = u.m();
        let mut breakpoints = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                let start = &u.values()[a] - &u.values()[b];
                let end = &up.values()[a] - &up.values()[b];
                // The gap is affine in α; it has an interior root only if it
                // changes sign strictly.
                if (start.is_positive() && end.is_negative())
                    || (start.is_negative() && end.is_positive())
                {
                    let alpha = &start / &(&start - &end);
                    debug_assert!(alpha > zero && alpha < one);
                    breakpoints.push(alpha);
                }
            }
        }
        breakpoints.sort();
        breakpoints.dedup();
        Ok(UtilitySegment { u, up, breakpoints })
    }

    pub fn at(&self, alpha: &Rat) -> UtilityFn {
        self.u.interpolate(&self.up, alpha)
    }

    /// Evaluation points: both endpoints, every breakpoint, and the midpoint
    /// of every open interval between consecutive points.
    pub fn sample_points(&self) -> Vec<Rat> {
        let two = Rat::from_int(2);
        let mut fences = vec![Rat::zero()];
        fences.extend(self.breakpoints.iter().cloned());
        fences.push(Rat::one());
        let mut points = vec![Rat::zero()];
        for w in fences.windows(2) {
            points.push(&(&w[0] + &w[1]) / &two);
            points.push(w[1].clone());
        }
        points
    }
}

/// Direction of one step along a segment path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathStep {
    /// True if the earlier order is the coarse side.
    pub forward: bool,
    pub witness: MultiSeparation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentPath {
    pub orders: Vec<WeakOrder>,
    /// For each order, the first sampled `α` realizing it.
    pub alphas: Vec<Rat>,
    pub breakpoints: Vec<Rat>,
    pub steps: Vec<PathStep>,
}

/// The orders crossed by the segment from `u` to `up`, with a
/// multi-separation witness for every consecutive pair.
///
/// Requires `u` and `up` to induce exactly `coarse` and `fine`; weakly
/// consistent utilities that are flat across strictly ranked classes are
/// rejected.
pub fn multi_separation_path(
    from: &WeakOrder,
    to: &WeakOrder,
    u: &UtilityFn,
    up: &UtilityFn,
) -> Result<SegmentPath, PathError> {
    if from.m() != to.m() {
        return Err(SizeMismatch(from.m(), to.m()).into());
    }
    for (which, util, order) in [("u", u, from), ("u'", up, to)] {
        if util.m() != order.m() {
            return Err(SizeMismatch(util.m(), order.m()).into());
        }
        if !consistent(util, order) || order_from_utility(util) != *order {
            return Err(PathError::Inconsistent {
                which,
                order: order.to_string(),
            });
        }
    }
    let segment = UtilitySegment::new(u.clone(), up.clone())?;
    let mut orders: Vec<WeakOrder> = Vec::new();
    let mut alphas = Vec::new();
    for alpha in segment.sample_points() {
        let order = order_from_utility(&segment.at(&alpha));
        if orders.last() != Some(&order) {
            orders.push(order);
            alphas.push(alpha);
        }
    }
    let steps = orders
        .windows(2)
        .map(|w| {
            let forward = as_multi_separation(&w[0], &w[1])?.filter(|ms| !ms.is_identity());
            if let Some(witness) = forward {
                return Ok(PathStep { forward: true, witness });
            }
            let backward = as_multi_separation(&w[1], &w[0])?.filter(|ms| !ms.is_identity());
            backward
                .map(|witness| PathStep { forward: false, witness })
                .ok_or_else(|| PathError::NotAdjacent(w[0].to_string(), w[1].to_string()))
        })
        .collect::<Result<Vec<_>, PathError>>()?;
    Ok(SegmentPath {
        orders,
        alphas,
        breakpoints: segment.breakpoints,
        steps,
    })
}
