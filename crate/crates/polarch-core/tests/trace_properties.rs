use polarch_core::policy::{parse_policy, Policy, SERVICE_PROVIDER};
use polarch_core::trace::{
    apply_policy_event, check_trace_compliance, parse_trace, render_trace, run_trace, EventKind, PolicyEvent,
    ServiceState, Slot, Timestamp,
};
use proptest::prelude::*;

const POLICY: &str = r#"
ENTITY client "data subject app"
ENTITY auth "authority"
ENTITY insurer "insurance company"
DATAGROUP disease UNIQUE=N { }
DATAGROUP personalinfo UNIQUE=Y { name address }
POLICY disease {
  COLLECTION { consent=Y ; purposes = createat:Report }
  USAGE { consent=Y ; purposes = calculateat:Bill }
  STORAGE { consent=Y ; where = mainstorage }
  DELETION { fromwhere = mainstorage ; delay = 1w }
  TRANSFER { consent=Y ; to = auth ; purposes = createat:Report }
  HAS { sp }
}
POLICY personalinfo {
  STORAGE { consent=N ; where = mainstorage, backupstorage }
  DELETION { fromwhere = mainstorage, backupstorage ; delay = tt }
}
"#;

fn policy() -> Policy {
    parse_policy(POLICY).unwrap()
}

fn event() -> impl Strategy<Value = PolicyEvent> {
    let from = prop::sample::select(&["client", "appoftom"][..]);
    let ty = prop::sample::select(&["disease", "name", "personalinfo"][..]);
    let value = prop::sample::select(&["coronavirus", "influenza", "12345"][..]);
    let place = prop::sample::select(&["mainstorage", "backupstorage", "archive"][..]);
    let to = prop::sample::select(&["auth", "insurer"][..]);
    let derived = prop::sample::select(&["Report", "Bill"][..]);
    let kind = prop::sample::select(EventKind::ALL.to_vec());
    (kind, 0u64..20_000, from, ty, value, place, to, derived).prop_map(|(k, t, from, ty, v, pl, to, d)| {
        let t = Timestamp(30_000_000 + t);
        match k {
            EventKind::CollectAt => PolicyEvent::collect(t, from, ty, v),
            EventKind::CreateAt | EventKind::CalculateAt => PolicyEvent::use_event(k, t, from, d, ty, v),
            EventKind::StoreAt | EventKind::DeleteAt => PolicyEvent::at_place(k, t, from, ty, v, pl),
            EventKind::FwConsentAt => PolicyEvent::fw_consent(t, to, from, ty),
            EventKind::ForwardAt => PolicyEvent::forward(t, to, from, ty, v),
            _ => PolicyEvent::consent(k, t, from, ty),
        }
    })
}

fn trace() -> impl Strategy<Value = Vec<PolicyEvent>> {
    prop::collection::vec(event(), 0..14).prop_map(|mut v| {
        v.sort_by_key(|e| e.time);
        v
    })
}

/// Entities an event may write to.
fn touched(e: &PolicyEvent) -> Vec<String> {
    match e.kind {
        EventKind::StoreAt | EventKind::DeleteAt => vec![e.place.clone().unwrap()],
        EventKind::ForwardAt => vec![e.to.clone().unwrap()],
        _ => vec![SERVICE_PROVIDER.to_string()],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn run_is_a_left_fold(t in trace(), split in 0usize..14) {
        let mut s = ServiceState::new();
        for e in &t {
            s = apply_policy_event(e, &s);
        }
        prop_assert_eq!(&run_trace(&t, &ServiceState::new()), &s);
        let k = split.min(t.len());
        let mid = run_trace(&t[..k], &ServiceState::new());
        prop_assert_eq!(run_trace(&t[k..], &mid), s);
    }

    #[test]
    fn events_only_touch_their_target(t in trace(), e in event()) {
        let before = run_trace(&t, &ServiceState::new());
        let after = apply_policy_event(&e, &before);
        let allowed = touched(&e);
        let names: std::collections::BTreeSet<&String> = before.states.keys().chain(after.states.keys()).collect();
        for n in names {
            if !allowed.contains(n) {
                prop_assert_eq!(before.states.get(n), after.states.get(n));
            }
        }
        prop_assert_eq!(after.time, Some(e.time));
    }

    #[test]
    fn trace_text_round_trips(t in trace()) {
        prop_assert_eq!(parse_trace(&render_trace(&t)).unwrap(), t);
    }

    #[test]
    fn dropping_a_sub_policy_never_adds_violations(t in trace(), which in 0usize..5, bundle in 0usize..2) {
        let full = policy();
        let mut reduced = full.clone();
        let b = &mut reduced.bundles[bundle];
        match which {
            0 => b.collection = None,
            1 => b.usage = None,
            2 => b.storage = None,
            3 => b.deletion = None,
            _ => b.transfer = None,
        }
        let all = check_trace_compliance(&t, &full);
        for v in check_trace_compliance(&t, &reduced) {
            prop_assert!(all.contains(&v), "{} appeared after removing a sub-policy", v);
        }
    }
}

#[test]
fn data_state_narrative() {
    let t = |s: &str| Timestamp::parse(s).unwrap();
    let disease = Slot::Data("disease".into());
    let id = Slot::Data("id".into());
    let sp = SERVICE_PROVIDER;
    let events = [
        PolicyEvent::collect(t("2020.03.01.09:00"), "appoftom", "disease", "coronavirus"),
        PolicyEvent::collect(t("2020.03.01.09:05"), "appoftom", "id", "12345"),
        PolicyEvent::collect(t("2020.04.01.10:00"), "appoftom", "disease", "influenza"),
    ];
    let init = ServiceState::new();
    assert_eq!(init.get(sp, &disease, "appoftom"), None);
    assert_eq!(init.get(sp, &id, "appoftom"), None);
    let s1 = apply_policy_event(&events[0], &init);
    assert_eq!((s1.get(sp, &disease, "appoftom"), s1.get(sp, &id, "appoftom")), (Some("coronavirus"), None));
    let s2 = apply_policy_event(&events[1], &s1);
    assert_eq!((s2.get(sp, &disease, "appoftom"), s2.get(sp, &id, "appoftom")), (Some("coronavirus"), Some("12345")));
    let s3 = apply_policy_event(&events[2], &s2);
    assert_eq!((s3.get(sp, &disease, "appoftom"), s3.get(sp, &id, "appoftom")), (Some("influenza"), Some("12345")));
    assert_eq!(run_trace(&events, &init), s3);
}
