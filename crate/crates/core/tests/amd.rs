mod common;

use rand::Rng;
use sepax::amd::{
    mechanism_assignment, solution_to_mechanism, sp_program, top_class_objective, variable_index,
    GenerateOptions,
};
use sepax::lp::{solve_lp, LpStatus};
use sepax::mechanism::{zoo, ZOO};
use sepax::verify::check_sp_bruteforce;
use sepax::{Domain, Rat};

#[test]
fn random_objectives_give_sp_mechanisms() {
    let mut rng = common::rng(31);
    for m in [2, 3] {
        let domain = Domain::new(m).unwrap();
        let (base, _) = sp_program(&domain, GenerateOptions::default());
        for round in 0..20 {
            let mut lp = base.clone();
            let objective = (0..domain.len())
                .flat_map(|r| (0..m).map(move |a| variable_index(m, r, a)))
                .map(|v| (v, Rat::new(rng.gen_range(-6..=6), rng.gen_range(1..=3))))
                .collect();
            lp.set_objective(objective);
            let sol = solve_lp(&lp);
            // The feasible set is a non-empty polytope.
            assert_eq!(sol.status, LpStatus::Optimal, "m={m} round {round}");
            assert_eq!(lp.first_violated(&sol.assignment), None);
            let mech = solution_to_mechanism(&sol, &domain).unwrap();
            assert!(check_sp_bruteforce(&mech).is_pass(), "m={m} round {round}\n{}", mech.to_json());
        }
    }
}

#[test]
fn top_class_welfare() {
    for (m, best) in [(2, 3), (3, 13)] {
        let domain = Domain::new(m).unwrap();
        let (mut lp, _) = sp_program(&domain, GenerateOptions::default());
        lp.set_objective(top_class_objective(&domain));
        let sol = solve_lp(&lp);
        assert_eq!(sol.objective, Rat::from_int(best));
        let mech = solution_to_mechanism(&sol, &domain).unwrap();
        assert!(check_sp_bruteforce(&mech).is_pass());
    }
}

#[test]
fn sp_zoo_members_satisfy_every_row() {
    for m in 2..=4 {
        let domain = Domain::new(m).unwrap();
        let (lp, summary) = sp_program(&domain, GenerateOptions { lower_responsiveness: true });
        assert!(summary.rows <= summary.economy_bound);
        for name in ZOO {
            let mech = zoo(name, &domain).unwrap();
            let violated = lp.first_violated(&mechanism_assignment(&mech));
            if check_sp_bruteforce(&mech).is_pass() {
                assert_eq!(violated, None, "{name} m={m}");
            } else {
                assert!(violated.is_some(), "{name} m={m}");
            }
        }
    }
}
