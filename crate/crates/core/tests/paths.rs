mod common;

use rand::Rng;
use sepax::lottery::{canonical_utility, consistent};
use sepax::paths::{
    as_l_separation, as_multi_separation, decompose_l_separation, multi_separation_path, refinements,
    ChainStyle, RefinementKind,
};
use sepax::{Domain, MechanismTable, Rat, UtilityFn, WeakOrder};

use common::{random_sp_mixture, rng, sp_basis};

/// Canonical utility shifted by an independent `δ_k ∈ [-5, 5] / 12` per
/// class. Shifts stay below half the unit gap, so the order is preserved.
fn jittered<R: Rng>(order: &WeakOrder, rng: &mut R) -> UtilityFn {
    let base = canonical_utility(order);
    let shifts: Vec<Rat> = (0..order.num_classes()).map(|_| Rat::new(rng.gen_range(-5..=5), 12)).collect();
    let values = (0..order.m())
        .map(|a| &base.values()[a] + &shifts[order.class_of(sepax::Alt(a))])
        .collect();
    UtilityFn::new(values).unwrap()
}

fn expected(u: &UtilityFn, mech: &MechanismTable, order: &WeakOrder) -> Rat {
    u.dot(mech.outcome(order).unwrap().probs())
}

#[test]
fn segment_paths_m5() {
    let domain = Domain::new(5).unwrap();
    let mut rng = rng(7);
    for case in 0..1000 {
        let from = domain.order(rng.gen_range(0..domain.len())).clone();
        let to = domain.order(rng.gen_range(0..domain.len())).clone();
        let u = jittered(&from, &mut rng);
        let up = jittered(&to, &mut rng);
        let path = multi_separation_path(&from, &to, &u, &up).unwrap();
        assert_eq!(path.orders.first(), Some(&from), "case {case}");
        assert_eq!(path.orders.last(), Some(&to), "case {case}");
        assert_eq!(path.steps.len() + 1, path.orders.len());
        for (w, step) in path.orders.windows(2).zip(&path.steps) {
            assert_ne!(w[0], w[1], "case {case}");
            let (coarse, fine) = if step.forward { (&w[0], &w[1]) } else { (&w[1], &w[0]) };
            let ms = as_multi_separation(coarse, fine).unwrap().unwrap();
            assert!(!ms.is_identity());
            assert_eq!(ms, step.witness);
        }
        let mut sorted = path.alphas.clone();
        sorted.sort();
        assert_eq!(sorted, path.alphas, "case {case}");
    }
}

#[test]
fn identical_endpoints_give_single_order() {
    let o: WeakOrder = "0>1,2>3".parse().unwrap();
    let u = canonical_utility(&o);
    let path = multi_separation_path(&o, &o, &u, &u).unwrap();
    assert_eq!(path.orders, vec![o]);
    assert!(path.steps.is_empty());
}

/// The local-to-global argument: each realized utility is consistent with
/// its order, and for a strategyproof mechanism the per-step inequalities
/// `⟨u, φ(R^s) − φ(R^{s+1})⟩ ≥ 0` hold and telescope.
#[test]
fn telescoping_along_paths() {
    let domain = Domain::new(4).unwrap();
    let basis = sp_basis(&domain);
    let mut rng = rng(8);
    for case in 0..300 {
        let mech = random_sp_mixture(&basis, &mut rng);
        let from = domain.order(rng.gen_range(0..domain.len())).clone();
        let to = domain.order(rng.gen_range(0..domain.len())).clone();
        let u = jittered(&from, &mut rng);
        let up = jittered(&to, &mut rng);
        let path = multi_separation_path(&from, &to, &u, &up).unwrap();
        let mut total = Rat::zero();
        for (s, w) in path.orders.windows(2).enumerate() {
            let (a0, a1) = (&path.alphas[s], &path.alphas[s + 1]);
            let (u0, u1) = (u.interpolate(&up, a0), u.interpolate(&up, a1));
            assert!(consistent(&u0, &w[0]) && consistent(&u1, &w[1]), "case {case}");
            let lhs = &(a1 * &u0.dot(&diff(&mech, &w[0], &w[1]))) + &(a0 * &u1.dot(&diff(&mech, &w[1], &w[0])));
            let step = u.dot(&diff(&mech, &w[0], &w[1]));
            // α_{s+1}·u_{α_s} − α_s·u_{α_{s+1}} = (α_{s+1} − α_s)·u
            assert_eq!(lhs, &(a1 - a0) * &step, "case {case}");
            assert!(!step.is_negative(), "case {case}");
            total += step;
        }
        assert_eq!(total, &expected(&u, &mech, &from) - &expected(&u, &mech, &to));
        assert!(!total.is_negative());
    }
}

fn diff(mech: &MechanismTable, a: &WeakOrder, b: &WeakOrder) -> Vec<Rat> {
    let (x, y) = (mech.outcome(a).unwrap(), mech.outcome(b).unwrap());
    x.probs().iter().zip(y.probs()).map(|(p, q)| p - q).collect()
}

#[test]
fn l_separation_chains_m_up_to_5() {
    let mut total = 0;
    for m in 1..=5 {
        let domain = Domain::new(m).unwrap();
        for coarse in domain.orders() {
            for fine in refinements(coarse, RefinementKind::LSeparation) {
                let ls = as_l_separation(coarse, &fine).unwrap().unwrap();
                for style in [ChainStyle::TopFirst, ChainStyle::BottomMerge] {
                    let chain = decompose_l_separation(&ls, style).unwrap();
                    assert_eq!(chain.len(), ls.parts.len() - 1, "{coarse} {fine}");
                    assert_eq!(&chain[0].coarse, coarse);
                    assert_eq!(&chain.last().unwrap().fine, &fine);
                    for w in chain.windows(2) {
                        assert_eq!(w[0].fine, w[1].coarse);
                    }
                    for sep in &chain {
                        let again = sepax::axioms::as_separation(&sep.coarse, &sep.fine).unwrap();
                        assert_eq!(again.as_ref(), Some(sep));
                    }
                }
                total += 1;
            }
        }
    }
    assert!(total > 0);
}
