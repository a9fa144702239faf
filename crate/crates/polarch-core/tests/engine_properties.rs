use polarch_core::arch::{parse_architecture, Architecture};
use polarch_core::atom::{unify_facts, Fact, Pred};
use polarch_core::engine::{Derivation, Engine, EngineInputs, LeafSource};
use polarch_core::policy::Policy;
use polarch_core::term::{Subst, Term};
use proptest::prelude::*;

fn payload() -> impl Strategy<Value = String> {
    let leaf = prop::sample::select(&["name", "address", "disease", "k1", "k2"][..]).prop_map(String::from);
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=3).prop_map(|a| format!("Rec({})", a.join(","))),
            (inner.clone(), prop::sample::select(&["k1", "k2"][..])).prop_map(|(b, k)| format!("Senc({},{})", b, k)),
            inner.clone().prop_map(|b| format!("Rec({},Meta(ip))", b)),
            inner.prop_map(|b| format!("Hash({})", b)),
        ]
    })
}

fn action() -> impl Strategy<Value = String> {
    (prop::sample::select(&["sp", "client"][..]), payload(), 0usize..3).prop_map(|(e, d, form)| match form {
        0 => format!("RECEIVE({},{})", e, d),
        1 => format!("RECEIVEAT({},{},client,Time(t))", e, d),
        _ => format!("OWN({},{})", e, d),
    })
}

fn arch() -> impl Strategy<Value = Architecture> {
    prop::collection::vec(action(), 1..5)
        .prop_map(|v| parse_architecture(&v.join("\n")).expect("generated architecture parses").architecture)
}

fn goal() -> impl Strategy<Value = Fact> {
    let who = prop::sample::select(&["sp", "client"][..]).prop_map(Term::entity);
    let data = prop::sample::select(&["name", "address", "disease", "k1", "ip"][..]).prop_map(Term::simple);
    prop_oneof![
        (who.clone(), data.clone()).prop_map(|(w, d)| Fact::new(Pred::Has, vec![w, d])),
        (who.clone(), data.clone(), data.clone()).prop_map(|(w, a, b)| Fact::new(Pred::Link, vec![w, a, b])),
        (who, data.clone(), data).prop_map(|(w, a, b)| Fact::new(Pred::LinkUnique, vec![w, a, b])),
    ]
}

/// Every rule node's head, under its recorded unifier, matches the node's
/// goal, and every leaf is an input fact matching its goal.
fn check_tree(d: &Derivation, inputs: &EngineInputs) -> Result<(), String> {
    match d {
        Derivation::Leaf { goal, fact, source } => {
            let pool: Vec<&Fact> = match source {
                LeafSource::Architecture => inputs.actions.iter().collect(),
                LeafSource::Trivial => inputs.trivial.iter().collect(),
                LeafSource::Unique => inputs.unique.iter().collect(),
                LeafSource::Purpose => vec![],
            };
            if *source != LeafSource::Purpose && !pool.contains(&fact) {
                return Err(format!("leaf {} is not an input fact", fact));
            }
            let swapped = Fact::new(fact.pred, vec![fact.args[0].clone(), fact.args.get(2).cloned().unwrap_or(Term::Ds), fact.args[1].clone()]);
            let matches = !unify_facts(goal, fact).is_empty()
                || (matches!(fact.pred, Pred::Link | Pred::LinkUnique) && !unify_facts(goal, &swapped).is_empty());
            if !matches {
                return Err(format!("leaf {} does not match goal {}", fact, goal));
            }
            Ok(())
        }
        Derivation::Rule { rule, goal, unifier, children } => {
            if let Some(r) = inputs.rules.get(rule) {
                let s = Subst::from_pairs(unifier.iter().cloned());
                let head = r.head.apply(&s);
                if unify_facts(&head, goal).is_empty() {
                    return Err(format!("{} head {} does not match {}", rule, head, goal));
                }
            }
            children.iter().try_for_each(|c| check_tree(c, inputs))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn proofs_are_sound_and_bounded(a in arch(), goals in prop::collection::vec(goal(), 1..6), n in 0usize..4) {
        let inputs = EngineInputs::new(&a, &Policy::default(), n);
        let mut engine = Engine::new(&inputs);
        for g in &goals {
            let r = engine.prove(g);
            prop_assert!(r.steps <= inputs.step_ceiling(), "{} took {} steps", g, r.steps);
            prop_assert_eq!(r.proved, r.derivation.is_some());
            if let Some(d) = &r.derivation {
                prop_assert_eq!(d.goal(), g);
                check_tree(d, &inputs).map_err(TestCaseError::fail)?;
            }
        }
    }

    #[test]
    fn proofs_do_not_depend_on_memo_state(a in arch(), goals in prop::collection::vec(goal(), 2..6)) {
        let inputs = EngineInputs::new(&a, &Policy::default(), 2);
        let mut shared = Engine::new(&inputs);
        for g in &goals {
            let warm = shared.prove(g).proved;
            let cold = Engine::new(&inputs).prove(g).proved;
            prop_assert_eq!(warm, cold, "{}", g);
        }
    }

    #[test]
    fn deeper_bounds_prove_more(a in arch(), g in goal()) {
        let mut prev = false;
        for n in 0..4 {
            let inputs = EngineInputs::new(&a, &Policy::default(), n);
            let now = Engine::new(&inputs).prove(&g).proved;
            prop_assert!(!prev || now, "{} proved at depth {} but not {}", g, n - 1, n);
            prev = now;
        }
    }
}
