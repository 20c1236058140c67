//! Exact linear programming.
//!
//! Programs are `maximize c·x` subject to linear rows and `x ≥ 0`. The solver
//! is a dense two-phase simplex over [`Rat`] with Bland's rule, so it
//! terminates without tolerances and optimal points satisfy every row
//! exactly.

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    fn flipped(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub var: usize,
    pub coef: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<Term>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(label: impl Into<String>, terms: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) -> Self {
        Constraint {
            label: label.into(),
            terms: terms.into_iter().map(|(var, coef)| Term { var, coef }).collect(),
            relation,
            rhs,
        }
    }

    pub fn lhs(&self, x: &[Rat]) -> Rat {
        self.terms.iter().map(|t| &t.coef * &x[t.var]).sum()
    }

    pub fn satisfied_by(&self, x: &[Rat]) -> bool {
        self.relation.holds(&self.lhs(x), &self.rhs)
    }
}

/// `maximize objective·x` subject to `constraints` and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    pub objective: Vec<Term>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("constraint {label:?} references variable {var} of {count}")]
    UnknownVariable { label: String, var: usize, count: usize },
}

impl LinearProgram {
    pub fn new(variables: Vec<String>) -> Self {
        LinearProgram {
            variables,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, Rat)>) {
        self.objective = terms.into_iter().map(|(var, coef)| Term { var, coef }).collect();
    }

    pub fn push(&mut self, constraint: Constraint) {
        self.constraints.push(constraint);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let count = self.num_vars();
        let rows = self
            .constraints
            .iter()
            .map(|c| (c.label.as_str(), &c.terms))
            .chain(std::iter::once(("objective", &self.objective)));
        for (label, terms) in rows {
            if let Some(t) = terms.iter().find(|t| t.var >= count) {
                return Err(LpError::UnknownVariable {
                    label: label.to_string(),
                    var: t.var,
                    count,
                });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        self.objective.iter().map(|t| &t.coef * &x[t.var]).sum()
    }

    /// Label of the first violated row, if any. Negative entries count as
    /// violating the implicit bounds.
    pub fn first_violated(&self, x: &[Rat]) -> Option<String> {
        if let Some(i) = x.iter().position(Rat::is_negative) {
            return Some(format!("{} >= 0", self.variables[i]));
        }
        self.constraints
            .iter()
            .find(|c| !c.satisfied_by(x))
            .map(|c| c.label.clone())
    }

    fn write_terms(&self, out: &mut String, terms: &[Term]) {
        if terms.is_empty() {
            out.push_str(" 0");
        }
        for t in terms {
            let sign = if t.coef.is_negative() { '-' } else { '+' };
            let _ = write!(out, " {sign}{} {}", t.coef.abs(), self.variables[t.var]);
        }
    }

    /// Plain-text form: a header, the objective, the bound line, then one
    /// `label: terms relation rhs` line per constraint.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sepax linear program");
        let _ = writeln!(out, "variables: {}", self.num_vars());
        out.push_str("maximize:");
        self.write_terms(&mut out, &self.objective);
        out.push('\n');
        let _ = writeln!(out, "bounds: all variables >= 0");
        for c in &self.constraints {
            let _ = write!(out, "{}:", c.label);
            self.write_terms(&mut out, &c.terms);
            let _ = writeln!(out, " {} {}", c.relation, c.rhs);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the original variables; empty unless optimal.
    pub assignment: Vec<Rat>,
    /// Zero unless optimal.
    pub objective: Rat,
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    /// Reduced costs `c_j - z_j`; the last entry is minus the objective.
    costs: Vec<Rat>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    active: Vec<bool>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.costs.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        if !pivot.is_one() {
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &pivot;
                }
            }
        }
        let pivot_row = self.rows[row].clone();
        let eliminate = |target: &mut Vec<Rat>| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *t -= &factor * p;
                }
            }
        };
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                eliminate(r);
            }
        }
        eliminate(&mut self.costs);
        self.basis[row] = col;
    }

    /// Loads `c` as the objective, expressed in terms of the current basis.
    fn set_costs(&mut self, c: &[Rat]) {
        let width = self.width();
        let mut costs: Vec<Rat> = c.to_vec();
        costs.resize(width + 1, Rat::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = c.get(b).cloned().unwrap_or_default();
            if cb.is_zero() {
                continue;
            }
            for (k, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    costs[k] -= &cb * v;
                }
            }
        }
        self.costs = costs;
    }

    /// Bland's rule: lowest-index improving column enters, and among
    /// minimum-ratio rows the one with the lowest basic index leaves.
    fn run(&mut self) -> Phase {
        let width = self.width();
        loop {
            let Some(col) = (0..width).find(|&j| self.active[j] && self.costs[j].is_positive()) else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, Rat)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[width] / &row[col];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Phase::Unbounded,
            }
        }
    }
}

/// Terms, relation and right-hand side of one normalized row.
type Row = (Vec<(usize, Rat)>, Relation, Rat);

/// Builds the phase-one tableau. Returns it with the artificial column range.
fn phase_one(lp: &LinearProgram) -> (Tableau, std::ops::Range<usize>) {
    let n = lp.num_vars();
    let rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| {
            let terms: Vec<(usize, Rat)> = c.terms.iter().map(|t| (t.var, t.coef.clone())).collect();
            if c.rhs.is_negative() {
                (
                    terms.into_iter().map(|(v, k)| (v, -k)).collect(),
                    c.relation.flipped(),
                    -&c.rhs,
                )
            } else {
                (terms, c.relation, c.rhs.clone())
            }
        })
        .collect();
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slacks + artificials;
    let art_start = n + slacks;

    let mut table = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let (mut next_slack, mut next_art) = (n, art_start);
    for (terms, relation, rhs) in rows {
        let mut row = vec![Rat::zero(); width + 1];
        for (v, k) in terms {
            row[v] += k;
        }
        row[width] = rhs;
        match relation {
            Relation::Le => {
                row[next_slack] = Rat::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rat::one();
                next_slack += 1;
                row[next_art] = Rat::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rat::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        table.push(row);
    }
    let tableau = Tableau {
        rows: table,
        costs: vec![Rat::zero(); width + 1],
        basis,
        active: vec![true; width],
    };
    (tableau, art_start..width)
}

/// Runs phase one and removes artificial variables. `None` if infeasible.
fn feasible_tableau(lp: &LinearProgram) -> Option<Tableau> {
    let (mut t, arts) = phase_one(lp);
    let mut c = vec![Rat::zero(); t.width()];
    for j in arts.clone() {
        c[j] = -Rat::one();
    }
    t.set_costs(&c);
    // Phase one is bounded above by zero.
    let _ = t.run();
    let width = t.width();
    let residual: Rat = t
        .rows
        .iter()
        .zip(&t.basis)
        .filter(|(_, b)| arts.contains(b))
        .map(|(r, _)| r[width].clone())
        .sum();
    if residual.is_positive() {
        return None;
    }
    // Pivot zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and dropped.
    let mut i = 0;
    while i < t.rows.len() {
        if arts.contains(&t.basis[i]) {
            match (0..arts.start).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for j in arts {
        t.active[j] = false;
    }
    Some(t)
}

fn extract(t: &Tableau, n: usize) -> Vec<Rat> {
    let width = t.width();
    let mut x = vec![Rat::zero(); n];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < n {
            x[b] = row[width].clone();
        }
    }
    x
}

/// A basic feasible point from phase one, without optimizing.
pub fn feasible_point(lp: &LinearProgram) -> Option<Vec<Rat>> {
    feasible_tableau(lp).map(|t| extract(&t, lp.num_vars()))
}

pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    let Some(mut t) = feasible_tableau(lp) else {
        return LpSolution {
            status: LpStatus::Infeasible,
            assignment: Vec::new(),
            objective: Rat::zero(),
        };
    };
    let mut c = vec![Rat::zero(); t.width()];
    for term in &lp.objective {
        c[term.var] += &term.coef;
    }
    t.set_costs(&c);
    match t.run() {
        Phase::Unbounded => LpSolution {
            status: LpStatus::Unbounded,
            assignment: Vec::new(),
            objective: Rat::zero(),
        },
        Phase::Optimal => {
            let x = extract(&t, n);
            LpSolution {
                status: LpStatus::Optimal,
                objective: lp.objective_value(&x),
                assignment: x,
            }
        }
    }
}
