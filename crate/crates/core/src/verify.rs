//! Brute-force strategyproofness and the axiomatic characterizations.
//!
//! [`check_sp_bruteforce`] compares truthful reporting against every
//! misreport. The `check_*` report builders pair that verdict with the axiom
//! checkers; a disagreement means one side is wrong and is surfaced through
//! [`EquivalenceReport::agreement`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::axioms::{self, Axiom, Certificate, Verdict};
use crate::lottery::first_fosd_failure;
use crate::mechanism::{MechanismError, MechanismTable};
use crate::order::{Alt, WeakOrder};
use crate::rat::Rat;

/// Truthful reporting fails to dominate a misreport.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpViolation {
    pub truth: WeakOrder,
    pub misreport: WeakOrder,
    /// Zero-based class of `truth` at which dominance fails.
    #[serde(skip)]
    pub class: usize,
    /// Smallest alternative of that class.
    pub representative: Alt,
    /// Probability of the upper contour set under the truthful report.
    pub truthful: Rat,
    /// The same under the misreport; strictly larger.
    pub misreported: Rat,
}

impl SpViolation {
    pub fn verify(&self, mech: &MechanismTable) -> bool {
        let (Some(x), Some(y)) = (mech.outcome(&self.truth), mech.outcome(&self.misreport)) else {
            return false;
        };
        let contour = self.truth.upper_contour(self.representative);
        let (tx, ty) = (x.subset_prob(contour), y.subset_prob(contour));
        tx == self.truthful && ty == self.misreported && tx < ty
    }
}

/// Checks dominance of `φ(R)` over `φ(R')` at `R` for every ordered pair of
/// distinct orders. The reported violation is the first in
/// `(index of R, index of R')` order regardless of scheduling.
pub fn check_sp_bruteforce(mech: &MechanismTable) -> Verdict<SpViolation> {
    let domain = mech.domain();
    let n = domain.len();
    (0..n)
        .into_par_iter()
        .find_map_first(|i| {
            let truth = domain.order(i);
            let x = mech.at(i);
            (0..n).filter(|&j| j != i).find_map(|j| {
                first_fosd_failure(x, mech.at(j), truth).map(|(class, tx, ty)| SpViolation {
                    truth: truth.clone(),
                    misreport: domain.order(j).clone(),
                    class,
                    representative: truth.classes()[class].min().expect("non-empty class"),
                    truthful: tx,
                    misreported: ty,
                })
            })
        })
        .into()
}

/// Which characterization a report compares against brute-force SP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Characterization {
    /// Monotonic, upper invariant and lower invariant.
    Theorem1,
    /// Responsive, upper invariant and lower invariant.
    Remark2,
    /// Monotonic alone, for deterministic mechanisms.
    Corollary1,
}

impl Characterization {
    fn axioms(self) -> &'static [&'static str] {
        match self {
            Characterization::Theorem1 => &["monotonic", "upper_invariant", "lower_invariant"],
            Characterization::Remark2 => &["responsive", "upper_invariant", "lower_invariant"],
            Characterization::Corollary1 => &["monotonic"],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub mechanism: String,
    pub characterization: Characterization,
    pub sp_verdict: bool,
    pub axiom_verdicts: BTreeMap<String, bool>,
    /// Conjunction of the axioms named by the characterization.
    pub axioms_verdict: bool,
    pub agreement: bool,
    /// First violation of each failing axiom.
    pub certificates: Vec<Certificate>,
    pub violation: Option<SpViolation>,
}

fn report(mech: &MechanismTable, id: &str, kind: Characterization) -> EquivalenceReport {
    let checks = [
        Axiom::Responsive,
        Axiom::Direct,
        Axiom::UpperInvariant,
        Axiom::LowerInvariant,
    ]
    .map(|a| (a, axioms::first_violation(mech, &[a])));

    let mut axiom_verdicts = BTreeMap::new();
    for (axiom, verdict) in &checks {
        axiom_verdicts.insert(axiom.name().to_string(), verdict.is_pass());
    }
    let monotonic = axiom_verdicts["responsive"] && axiom_verdicts["direct"];
    axiom_verdicts.insert("monotonic".to_string(), monotonic);

    let axioms_verdict = kind.axioms().iter().all(|name| axiom_verdicts[*name]);
    let violation = check_sp_bruteforce(mech).into_witness();
    let sp_verdict = violation.is_none();
    EquivalenceReport {
        mechanism: id.to_string(),
        characterization: kind,
        sp_verdict,
        axiom_verdicts,
        axioms_verdict,
        agreement: axioms_verdict == sp_verdict,
        certificates: checks.into_iter().filter_map(|(_, v)| v.into_witness()).collect(),
        violation,
    }
}

/// Strategyproof iff separation monotonic, upper invariant and lower invariant.
pub fn check_theorem1(mech: &MechanismTable, id: &str) -> EquivalenceReport {
    report(mech, id, Characterization::Theorem1)
}

/// The full characterization with monotonicity relaxed to responsiveness.
pub fn check_remark2(mech: &MechanismTable, id: &str) -> EquivalenceReport {
    report(mech, id, Characterization::Remark2)
}

/// For deterministic mechanisms: strategyproof iff separation monotonic.
pub fn check_corollary1(
    mech: &MechanismTable,
    id: &str,
) -> Result<EquivalenceReport, MechanismError> {
    mech.ensure_deterministic()?;
    Ok(report(mech, id, Characterization::Corollary1))
}

/// Largest `m` accepted by [`count_constraints`]; beyond it the number of
/// ordered pairs overflows `u128`.
pub const MAX_COUNT_M: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstraintCounts {
    pub m: usize,
    /// Number of weak orders.
    pub fubini: u128,
    /// Ordered pairs of distinct orders: the misreports brute force checks.
    pub ordered_pairs: u128,
    /// Separations summed over all coarse orders.
    pub separations_total: u128,
    /// Separations of the completely indifferent order, `2^m - 2`.
    pub separations_max_per_order: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error("problem size must be at least 1")]
    Empty,
    #[error("problem size {0} exceeds {max}", max = MAX_COUNT_M)]
    TooLarge(usize),
}

/// Closed-form counts, without enumerating orders.
///
/// With `F(n, j) = j!·S(n, j)` ordered partitions of `n` items into `j`
/// blocks, the number of (order, class) pairs whose class has size `s` is
/// `C(m, s) · Σ_j (j + 1)·F(m - s, j)`: choose the class, order the rest, and
/// insert the class into one of the `j + 1` gaps. Each such class admits
/// `2^s - 2` separations.
pub fn count_constraints(m: usize) -> Result<ConstraintCounts, CountError> {
    if m == 0 {
        return Err(CountError::Empty);
    }
    if m > MAX_COUNT_M {
        return Err(CountError::TooLarge(m));
    }
    let mut binom = vec![vec![0u128; m + 1]; m + 1];
    for n in 0..=m {
        binom[n][0] = 1;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0 };
        }
    }
    // ordered[n][j] = j!·S(n, j) via F(n, j) = j·(F(n-1, j-1) + F(n-1, j)).
    let mut ordered = vec![vec![0u128; m + 1]; m + 1];
    ordered[0][0] = 1;
    for n in 1..=m {
        for j in 1..=n {
            ordered[n][j] = j as u128 * (ordered[n - 1][j - 1] + ordered[n - 1][j]);
        }
    }
    let fubini: u128 = ordered[m].iter().sum();
    let separations_total = (2..=m)
        .map(|s| {
            let rest = m - s;
            let placements: u128 = (0..=rest).map(|j| (j as u128 + 1) * ordered[rest][j]).sum();
            ((1u128 << s) - 2) * binom[m][s] * placements
        })
        .sum();
    Ok(ConstraintCounts {
        m,
        fubini,
        ordered_pairs: fubini * (fubini - 1),
        separations_total,
        separations_max_per_order: (1u128 << m) - 2,
    })
}
