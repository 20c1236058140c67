mod common;

use rand::Rng;
use sepax::lp::{solve_lp, Constraint, LinearProgram, LpStatus, Relation};
use sepax::Rat;

/// A hyperplane `a·x = b` candidate for an active constraint.
type Plane = (Vec<Rat>, Rat);

fn solve_square(planes: &[&Plane], n: usize) -> Option<Vec<Rat>> {
    let mut a: Vec<Vec<Rat>> = planes
        .iter()
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (t, q) in a[r].iter_mut().zip(&pivot_row) {
                    *t -= &f * q;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Maximum of `c·x` over the vertices of `{x : feasible(x)}` built from
/// `planes`; `None` if there is no vertex.
fn best_vertex(planes: &[Plane], n: usize, c: &[Rat], feasible: impl Fn(&[Rat]) -> bool) -> Option<Rat> {
    let mut best: Option<Rat> = None;
    for idx in subsets(planes.len(), n) {
        let chosen: Vec<&Plane> = idx.iter().map(|&i| &planes[i]).collect();
        if let Some(x) = solve_square(&chosen, n) {
            if feasible(&x) {
                let v: Rat = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

fn dense(lp: &LinearProgram, row: &Constraint) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); lp.num_vars()];
    for t in &row.terms {
        v[t.var] += &t.coef;
    }
    v
}

fn unit(n: usize, i: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[i] = Rat::one();
    v
}

fn oracle(lp: &LinearProgram) -> (LpStatus, Option<Rat>) {
    let n = lp.num_vars();
    let mut c = vec![Rat::zero(); n];
    for t in &lp.objective {
        c[t.var] += &t.coef;
    }
    let rows: Vec<(Vec<Rat>, Relation, Rat)> =
        lp.constraints.iter().map(|r| (dense(lp, r), r.relation, r.rhs.clone())).collect();

    let mut planes: Vec<Plane> = rows.iter().map(|(a, _, b)| (a.clone(), b.clone())).collect();
    planes.extend((0..n).map(|i| (unit(n, i), Rat::zero())));
    let vertex = best_vertex(&planes, n, &c, |x| lp.first_violated(x).is_none());
    let Some(value) = vertex else {
        return (LpStatus::Infeasible, None);
    };

    // Recession cone cut by the unit box.
    let mut cone: Vec<Plane> = rows.iter().map(|(a, _, _)| (a.clone(), Rat::zero())).collect();
    cone.extend((0..n).map(|i| (unit(n, i), Rat::zero())));
    cone.extend((0..n).map(|i| (unit(n, i), Rat::one())));
    let in_cone = |d: &[Rat]| {
        d.iter().all(|v| !v.is_negative() && *v <= Rat::one())
            && rows.iter().all(|(a, rel, _)| {
                let lhs: Rat = a.iter().zip(d).map(|(p, q)| p * q).sum();
                rel.holds(&lhs, &Rat::zero())
            })
    };
    let ray = best_vertex(&cone, n, &c, in_cone).expect("origin is in the cone");
    if ray.is_positive() {
        (LpStatus::Unbounded, None)
    } else {
        (LpStatus::Optimal, Some(value))
    }
}

fn random_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let n = rng.gen_range(1..=5);
    let rows = rng.gen_range(1..=8);
    let mut lp = LinearProgram::new((0..n).map(|i| format!("x{i}")).collect());
    let coef = |rng: &mut R| Rat::from_int(rng.gen_range(-3..=3));
    let obj: Vec<(usize, Rat)> = (0..n).map(|i| (i, coef(rng))).collect();
    lp.set_objective(obj);
    for r in 0..rows {
        let terms: Vec<(usize, Rat)> = (0..n).map(|i| (i, coef(rng))).collect();
        let relation = match rng.gen_range(0..6) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = Rat::new(rng.gen_range(-2..=8), rng.gen_range(1..=2));
        lp.push(Constraint::new(format!("r{r}"), terms, relation, rhs));
    }
    lp
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = common::rng(21);
    let mut seen = [0usize; 3];
    for case in 0..100 {
        let lp = random_lp(&mut rng);
        let sol = solve_lp(&lp);
        let (status, value) = oracle(&lp);
        assert_eq!(sol.status, status, "case {case}: {}", lp.to_text());
        seen[status as usize] += 1;
        if status == LpStatus::Optimal {
            assert_eq!(lp.first_violated(&sol.assignment), None, "case {case}");
            assert_eq!(Some(sol.objective), value, "case {case}");
        }
    }
    assert!(seen.iter().all(|&s| s > 0), "{seen:?}");
}
