//! Automated mechanism design: the separation axioms as a linear program.
//!
//! Variables are `x[R;a]`, the probability of alternative `a` at order `R`,
//! stored at index `R·m + a` in canonical order. Each separation contributes
//! invariance equalities for every untouched class and one responsiveness
//! inequality for its upper part. Directness is disjunctive and is left out;
//! responsiveness plus invariance already characterize strategyproofness.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, SepIndex};
use crate::lottery::{Lottery, LotteryError};
use crate::lp::{Constraint, LinearProgram, LpSolution, LpStatus, Relation};
use crate::mechanism::MechanismTable;
use crate::order::{AltSet, OrderError, WeakOrder};
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum AmdError {
    #[error("invalid problem size: {0}")]
    Domain(#[from] OrderError),
    #[error("solution status is {0:?}, not optimal")]
    NotOptimal(LpStatus),
    #[error("assignment has {found} values, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("order {order:?}: {source}")]
    Lottery { order: String, source: LotteryError },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid objective JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("objective is for m={found}, expected m={expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("objective entry {entry}: invalid order {order:?}: {source}")]
    BadOrder { entry: usize, order: String, source: OrderError },
    #[error("objective entry {entry} (order {order:?}): duplicate order")]
    Duplicate { entry: usize, order: String },
    #[error("objective entry {entry} (order {order:?}): malformed rational {text:?}")]
    BadRational { entry: usize, order: String, text: String },
    #[error("objective entry {entry} (order {order:?}): {found} values, expected {expected}")]
    Arity { entry: usize, order: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerateOptions {
    /// Also emit the lower-part responsiveness inequality. It is implied by
    /// the invariance equalities and normalization.
    pub lower_responsiveness: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparationRows {
    pub coarse: WeakOrder,
    pub fine: WeakOrder,
    /// One-based index of the split class.
    pub kappa: usize,
    pub equalities: usize,
    pub inequalities: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSummary {
    pub m: usize,
    pub variables: usize,
    pub nonnegativity: usize,
    pub normalizations: usize,
    pub separations: usize,
    pub invariance_equalities: usize,
    pub responsiveness_inequalities: usize,
    /// Rows beyond bounds and normalization.
    pub rows: usize,
    /// Most classes on the coarse side of any separation.
    pub k_max: usize,
    /// `separations · (k_max + 1)`.
    pub economy_bound: usize,
    /// Rows of a direct dominance encoding over all ordered pairs:
    /// `fubini · (fubini − 1) · m`.
    pub naive_rows: u128,
    pub per_separation: Vec<SeparationRows>,
}

pub fn variable_index(m: usize, order_idx: usize, alt: usize) -> usize {
    order_idx * m + alt
}

pub fn variable_names(domain: &Domain) -> Vec<String> {
    let m = domain.m();
    domain
        .orders()
        .iter()
        .flat_map(|o| (0..m).map(move |a| format!("x[{o};{a}]")))
        .collect()
}

/// `Σ_{a∈set} x[fine;a] − Σ_{a∈set} x[coarse;a]`.
fn difference(m: usize, coarse: usize, fine: usize, set: AltSet) -> Vec<(usize, Rat)> {
    let mut terms: Vec<(usize, Rat)> =
        set.iter().map(|a| (variable_index(m, fine, a.0), Rat::one())).collect();
    terms.extend(set.iter().map(|a| (variable_index(m, coarse, a.0), -Rat::one())));
    terms
}

fn separation_rows(domain: &Domain, s: &SepIndex, opts: GenerateOptions) -> Vec<Constraint> {
    let m = domain.m();
    let coarse = domain.order(s.coarse);
    let fine = domain.order(s.fine);
    let tag = format!("{coarse}->{fine}");
    let mut rows = Vec::new();
    for (k, class) in coarse.classes().iter().enumerate() {
        if k == s.class {
            continue;
        }
        let kind = if k < s.class { "upper" } else { "lower" };
        rows.push(Constraint::new(
            format!("{kind}[{tag};k={}]", k + 1),
            difference(m, s.coarse, s.fine, *class),
            Relation::Eq,
            Rat::zero(),
        ));
    }
    rows.push(Constraint::new(
        format!("resp1[{tag}]"),
        difference(m, s.coarse, s.fine, s.upper),
        Relation::Ge,
        Rat::zero(),
    ));
    if opts.lower_responsiveness {
        rows.push(Constraint::new(
            format!("resp2[{tag}]"),
            difference(m, s.coarse, s.fine, s.lower),
            Relation::Le,
            Rat::zero(),
        ));
    }
    rows
}

/// The separation constraint system over `domain`, with no objective.
pub fn sp_program(domain: &Arc<Domain>, opts: GenerateOptions) -> (LinearProgram, ConstraintSummary) {
    let m = domain.m();
    let mut lp = LinearProgram::new(variable_names(domain));
    for (r, order) in domain.orders().iter().enumerate() {
        lp.push(Constraint::new(
            format!("norm[{order}]"),
            (0..m).map(|a| (variable_index(m, r, a), Rat::one())).collect(),
            Relation::Eq,
            Rat::one(),
        ));
    }
    let seps = domain.separations();
    let blocks: Vec<Vec<Constraint>> = seps.par_iter().map(|s| separation_rows(domain, s, opts)).collect();

    let mut per_separation = Vec::with_capacity(seps.len());
    let (mut equalities, mut inequalities, mut k_max) = (0, 0, 0);
    for (s, block) in seps.iter().zip(blocks) {
        let eq = block.iter().filter(|c| c.relation == Relation::Eq).count();
        let ineq = block.len() - eq;
        equalities += eq;
        inequalities += ineq;
        k_max = k_max.max(domain.order(s.coarse).num_classes());
        per_separation.push(SeparationRows {
            coarse: domain.order(s.coarse).clone(),
            fine: domain.order(s.fine).clone(),
            kappa: s.class + 1,
            equalities: eq,
            inequalities: ineq,
        });
        lp.constraints.extend(block);
    }
    let fubini = domain.len() as u128;
    let summary = ConstraintSummary {
        m,
        variables: lp.num_vars(),
        nonnegativity: lp.num_vars(),
        normalizations: domain.len(),
        separations: seps.len(),
        invariance_equalities: equalities,
        responsiveness_inequalities: inequalities,
        rows: equalities + inequalities,
        k_max,
        economy_bound: seps.len() * (k_max + 1),
        naive_rows: fubini * (fubini - 1) * m as u128,
        per_separation,
    };
    (lp, summary)
}

pub fn generate_sp_constraints(
    m: usize,
    opts: GenerateOptions,
) -> Result<(LinearProgram, ConstraintSummary), AmdError> {
    let domain = Domain::new(m)?;
    Ok(sp_program(&domain, opts))
}

/// Weight one on every alternative in each order's top class.
pub fn top_class_objective(domain: &Domain) -> Vec<(usize, Rat)> {
    let m = domain.m();
    domain
        .orders()
        .iter()
        .enumerate()
        .flat_map(|(r, o)| o.classes()[0].iter().map(move |a| (variable_index(m, r, a.0), Rat::one())))
        .collect()
}

/// The mechanism's probabilities in variable order.
pub fn mechanism_assignment(mech: &MechanismTable) -> Vec<Rat> {
    mech.lotteries().iter().flat_map(|l| l.probs().iter().cloned()).collect()
}

pub fn solution_to_mechanism(sol: &LpSolution, domain: &Arc<Domain>) -> Result<MechanismTable, AmdError> {
    if sol.status != LpStatus::Optimal {
        return Err(AmdError::NotOptimal(sol.status));
    }
    assignment_to_mechanism(&sol.assignment, domain)
}

pub fn assignment_to_mechanism(x: &[Rat], domain: &Arc<Domain>) -> Result<MechanismTable, AmdError> {
    let m = domain.m();
    let expected = m * domain.len();
    if x.len() != expected {
        return Err(AmdError::Length { expected, found: x.len() });
    }
    let lotteries = x
        .chunks(m)
        .zip(domain.orders())
        .map(|(chunk, order)| {
            Lottery::new(chunk.to_vec()).map_err(|source| AmdError::Lottery {
                order: order.to_string(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MechanismTable::new(domain.clone(), lotteries).expect("one lottery per order"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjectiveEntry {
    order: String,
    values: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    m: usize,
    coefficients: Vec<RawObjectiveEntry>,
}

/// Parses an objective file:
///
/// ```json
/// { "m": 2, "coefficients": [ { "order": "0>1", "values": ["1", "0"] } ] }
/// ```
///
/// Orders that are not listed get zero coefficients.
pub fn parse_objective(text: &str, domain: &Domain) -> Result<Vec<(usize, Rat)>, AmdError> {
    let raw: RawObjective = serde_json::from_str(text)?;
    let m = domain.m();
    if raw.m != m {
        return Err(AmdError::SizeMismatch { expected: m, found: raw.m });
    }
    let mut seen = vec![false; domain.len()];
    let mut terms = Vec::new();
    for (entry, item) in raw.coefficients.into_iter().enumerate() {
        let order = WeakOrder::parse_with_m(&item.order, m).map_err(|source| AmdError::BadOrder {
            entry,
            order: item.order.clone(),
            source,
        })?;
        let r = domain.index_of(&order).expect("parsed order lies in its domain");
        if std::mem::replace(&mut seen[r], true) {
            return Err(AmdError::Duplicate { entry, order: item.order });
        }
        if item.values.len() != m {
            return Err(AmdError::Arity {
                entry,
                order: item.order,
                expected: m,
                found: item.values.len(),
            });
        }
        for (a, text) in item.values.iter().enumerate() {
            let c: Rat = text.parse().map_err(|_| AmdError::BadRational {
                entry,
                order: item.order.clone(),
                text: text.clone(),
            })?;
            if !c.is_zero() {
                terms.push((variable_index(m, r, a), c));
            }
        }
    }
    Ok(terms)
}

pub fn load_objective(path: impl AsRef<Path>, domain: &Domain) -> Result<Vec<(usize, Rat)>, AmdError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AmdError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_objective(&text, domain)
}

#[derive(Serialize)]
struct NamedValue<'a> {
    var: &'a str,
    value: &'a Rat,
}

/// JSON form of a solution with variables named as in `lp`.
pub fn solution_json(lp: &LinearProgram, sol: &LpSolution) -> serde_json::Value {
    let assignment: Vec<NamedValue> = lp
        .variables
        .iter()
        .zip(&sol.assignment)
        .map(|(var, value)| NamedValue { var, value })
        .collect();
    serde_json::json!({
        "status": sol.status,
        "objective": sol.objective,
        "assignment": assignment,
    })
}
