//! Verification goals derived from a policy.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::atom::{ActionKind, Fact, Pred};
use crate::facts::{type_name, PurposeFacts};
use crate::policy::{Bundle, Delay, Policy, Purpose, SERVICE_PROVIDER};
use crate::term::{SpecialKind, Term};

/// Variable names used in generated goals.
pub const FROM_VAR: &str = "EVfrom";
pub const TO_VAR: &str = "EVto";
pub const TIME_VAR: &str = "TT";
pub const DELAY_VAR: &str = "DD";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SubPolicy {
    Collection,
    Usage,
    Storage,
    Deletion,
    Transfer,
    Possession,
    Connection,
}

impl SubPolicy {
    pub const ALL: [SubPolicy; 7] = [
        SubPolicy::Collection,
        SubPolicy::Usage,
        SubPolicy::Storage,
        SubPolicy::Deletion,
        SubPolicy::Transfer,
        SubPolicy::Possession,
        SubPolicy::Connection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubPolicy::Collection => "collection",
            SubPolicy::Usage => "usage",
            SubPolicy::Storage => "storage",
            SubPolicy::Deletion => "deletion",
            SubPolicy::Transfer => "transfer",
            SubPolicy::Possession => "possession",
            SubPolicy::Connection => "connection",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        SubPolicy::ALL.iter().copied().find(|p| p.name() == s)
    }

    /// Whether the bundle states this sub-policy.
    pub fn present_in(self, b: &Bundle) -> bool {
        match self {
            SubPolicy::Collection => b.collection.is_some(),
            SubPolicy::Usage => b.usage.is_some(),
            SubPolicy::Storage => b.storage.is_some(),
            SubPolicy::Deletion => b.deletion.is_some(),
            SubPolicy::Transfer => b.transfer.is_some(),
            SubPolicy::Possession => b.has.is_some(),
            SubPolicy::Connection => b.link_permit.is_some() || b.link_forbid.is_some(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    ExpectProvable,
    ExpectUnprovable,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::ExpectProvable => "expected-provable",
            Polarity::ExpectUnprovable => "expected-unprovable",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "expected-provable" => Some(Polarity::ExpectProvable),
            "expected-unprovable" => Some(Polarity::ExpectUnprovable),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoalKind {
    /// A required consent is collected before the data action.
    Consent,
    /// Consent is not required; receiving one anyway is flagged.
    ConsentReception,
    /// A purpose listed in the policy.
    Purpose,
    /// A purpose found in the architecture but not listed in the policy.
    PurposeAudit,
    /// Storage at a place. Permitted places come in an untimed and a timed form.
    Place { place: String, timed: bool },
    KeepPeriod,
    DeleteWithin,
    /// Forwarding to an entity, untimed and timed.
    Recipient { entity: String, timed: bool },
    Has,
    Link,
    LinkUnique,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub fact: Fact,
    pub data_type: String,
    pub sub_policy: SubPolicy,
    pub polarity: Polarity,
    pub kind: GoalKind,
    /// Policy deletion delay, for keep-period and deletion goals.
    pub delay: Option<Delay>,
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.polarity {
            Polarity::ExpectProvable => '+',
            Polarity::ExpectUnprovable => '-',
        };
        write!(f, "{} {} [{}]", sign, self.fact, self.sub_policy.name())
    }
}

/// A sub-policy that was left out, so its goals were not generated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Note {
    pub data_type: String,
    pub sub_policy: SubPolicy,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoalSet {
    pub goals: Vec<Goal>,
    pub notes: Vec<Note>,
}

impl GoalSet {
    pub fn for_type<'a>(&'a self, data_type: &'a str) -> impl Iterator<Item = &'a Goal> + 'a {
        self.goals.iter().filter(move |g| g.data_type == data_type)
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }
}

fn sp() -> Term {
    Term::entity(SERVICE_PROVIDER)
}
fn from() -> Term {
    Term::entity_var(FROM_VAR)
}
fn any_time() -> Term {
    Term::time(Term::time_var(TIME_VAR))
}

struct Builder<'a> {
    data_type: &'a str,
    out: &'a mut Vec<Goal>,
}

impl Builder<'_> {
    fn push(&mut self, fact: Fact, sub_policy: SubPolicy, polarity: Polarity, kind: GoalKind) {
        let goal = Goal { fact, data_type: self.data_type.into(), sub_policy, polarity, kind, delay: None };
        if !self.out.contains(&goal) {
            self.out.push(goal);
        }
    }

    fn push_delay(&mut self, fact: Fact, kind: GoalKind, delay: &Delay) {
        self.out.push(Goal {
            fact,
            data_type: self.data_type.into(),
            sub_policy: SubPolicy::Deletion,
            polarity: Polarity::ExpectProvable,
            kind,
            delay: Some(delay.clone()),
        });
    }

    /// Goals for receiving an unrequired consent token.
    fn reception(&mut self, token: Term, sub_policy: SubPolicy) {
        let timed = Fact::action(ActionKind::ReceiveAt, vec![sp(), token.clone(), from(), any_time()]);
        let untimed = Fact::action(ActionKind::Receive, vec![sp(), token, from()]);
        self.push(timed, sub_policy, Polarity::ExpectUnprovable, GoalKind::ConsentReception);
        self.push(untimed, sub_policy, Polarity::ExpectUnprovable, GoalKind::ConsentReception);
    }

    fn purposes(&mut self, pred: Pred, purposes: &[Purpose], sub_policy: SubPolicy) {
        for p in purposes {
            let fact = Fact::new(pred, vec![Term::simple(&p.result_type), Term::simple(&p.action)]);
            self.push(fact, sub_policy, Polarity::ExpectProvable, GoalKind::Purpose);
        }
    }
}

fn note(data_type: &str, sub_policy: SubPolicy) -> Note {
    Note {
        data_type: data_type.into(),
        sub_policy,
        message: format!("no {} sub-policy for {}; its requirements were not checked", sub_policy.name(), data_type),
    }
}

/// Every data type that can take part in a link goal: declared groups, then
/// bundle types that are not groups.
fn link_partners(p: &Policy) -> Vec<String> {
    let mut out: Vec<String> = p.groups.iter().map(|g| g.name.clone()).collect();
    for b in &p.bundles {
        if !out.contains(&b.data_type) {
            out.push(b.data_type.clone());
        }
    }
    out
}

fn link_entry<'a>(entries: &'a Option<Vec<crate::policy::LinkEntry>>, e: &str, other: &str) -> Option<&'a crate::policy::LinkEntry> {
    entries.as_ref()?.iter().find(|l| l.entity == e && l.other == other)
}

/// Goals for each policy bundle. `entities` are the declared entities the
/// possession and connection goals range over.
pub fn generate_goals(p: &Policy, entities: &[String]) -> GoalSet {
    let mut set = GoalSet::default();
    let partners = link_partners(p);
    for b in &p.bundles {
        let th = b.data_type.as_str();
        let data = Term::simple(th);
        let mut g = Builder { data_type: th, out: &mut set.goals };

        match &b.collection {
            Some(c) => {
                if c.consent_required {
                    let f = Fact::new(Pred::CConsentCollected, vec![sp(), data.clone()]);
                    g.push(f, SubPolicy::Collection, Polarity::ExpectProvable, GoalKind::Consent);
                } else {
                    g.reception(Term::special(SpecialKind::Cconsent, vec![data.clone()]), SubPolicy::Collection);
                }
                g.purposes(Pred::CPurpose, &c.purposes, SubPolicy::Collection);
            }
            None => set.notes.push(note(th, SubPolicy::Collection)),
        }

        match &b.usage {
            Some(u) => {
                if u.consent_required {
                    let f = Fact::new(Pred::UConsentCollected, vec![sp(), data.clone()]);
                    g.push(f, SubPolicy::Usage, Polarity::ExpectProvable, GoalKind::Consent);
                } else {
                    g.reception(Term::special(SpecialKind::Uconsent, vec![data.clone()]), SubPolicy::Usage);
                }
                g.purposes(Pred::UPurpose, &u.purposes, SubPolicy::Usage);
            }
            None => set.notes.push(note(th, SubPolicy::Usage)),
        }

        match &b.storage {
            Some(st) => {
                if st.consent_required {
                    let f = Fact::new(Pred::StrConsentCollected, vec![sp(), data.clone()]);
                    g.push(f, SubPolicy::Storage, Polarity::ExpectProvable, GoalKind::Consent);
                } else {
                    g.reception(Term::special(SpecialKind::Sconsent, vec![data.clone()]), SubPolicy::Storage);
                }
                let mut candidates = p.entity_names();
                for place in p.known_places() {
                    if !candidates.contains(&place) {
                        candidates.push(place);
                    }
                }
                for place in &st.places {
                    if !candidates.contains(place) {
                        candidates.push(place.clone());
                    }
                }
                for place in candidates {
                    let polarity = if st.places.contains(&place) {
                        Polarity::ExpectProvable
                    } else {
                        Polarity::ExpectUnprovable
                    };
                    let pl = Term::entity(&place);
                    let untimed = Fact::action(ActionKind::Store, vec![pl.clone(), data.clone(), from()]);
                    let timed = Fact::action(ActionKind::StoreAt, vec![pl, data.clone(), from(), any_time()]);
                    g.push(untimed, SubPolicy::Storage, polarity, GoalKind::Place { place: place.clone(), timed: false });
                    g.push(timed, SubPolicy::Storage, polarity, GoalKind::Place { place, timed: true });
                }
            }
            None => set.notes.push(note(th, SubPolicy::Storage)),
        }

        match &b.deletion {
            Some(del) => {
                for place in &del.places {
                    let pl = Term::entity(place);
                    let dd = Term::time(Term::delay_var(DELAY_VAR));
                    let keep = Fact::new(Pred::HasUpTo, vec![pl.clone(), data.clone(), dd.clone()]);
                    let within = Fact::action(ActionKind::DeleteWithin, vec![pl, data.clone(), from(), dd]);
                    g.push_delay(keep, GoalKind::KeepPeriod, &del.delay);
                    g.push_delay(within, GoalKind::DeleteWithin, &del.delay);
                }
            }
            None => set.notes.push(note(th, SubPolicy::Deletion)),
        }

        match &b.transfer {
            Some(tr) => {
                for e in entities.iter().filter(|e| *e != SERVICE_PROVIDER) {
                    let polarity =
                        if tr.to.contains(e) { Polarity::ExpectProvable } else { Polarity::ExpectUnprovable };
                    let to = Term::entity(e);
                    let untimed = Fact::action(ActionKind::Receive, vec![to.clone(), data.clone(), from()]);
                    let timed = Fact::action(ActionKind::ReceiveAt, vec![to, data.clone(), from(), any_time()]);
                    g.push(untimed, SubPolicy::Transfer, polarity, GoalKind::Recipient { entity: e.clone(), timed: false });
                    g.push(timed, SubPolicy::Transfer, polarity, GoalKind::Recipient { entity: e.clone(), timed: true });
                }
                for e in tr.to.iter().filter(|e| !entities.contains(e)) {
                    let to = Term::entity(e);
                    let untimed = Fact::action(ActionKind::Receive, vec![to.clone(), data.clone(), from()]);
                    let timed = Fact::action(ActionKind::ReceiveAt, vec![to, data.clone(), from(), any_time()]);
                    let p = Polarity::ExpectProvable;
                    g.push(untimed, SubPolicy::Transfer, p, GoalKind::Recipient { entity: e.clone(), timed: false });
                    g.push(timed, SubPolicy::Transfer, p, GoalKind::Recipient { entity: e.clone(), timed: true });
                }
                if tr.consent_required {
                    for e in &tr.to {
                        let f = Fact::new(Pred::FwConsentCollected, vec![sp(), data.clone(), Term::entity(e)]);
                        g.push(f, SubPolicy::Transfer, Polarity::ExpectProvable, GoalKind::Consent);
                    }
                } else {
                    let token = Term::special(SpecialKind::Fwconsent, vec![data.clone(), Term::entity_var(TO_VAR)]);
                    g.reception(token, SubPolicy::Transfer);
                }
                g.purposes(Pred::FwPurpose, &tr.purposes, SubPolicy::Transfer);
            }
            None => set.notes.push(note(th, SubPolicy::Transfer)),
        }

        for e in entities {
            let polarity = if b.may_have(e) { Polarity::ExpectProvable } else { Polarity::ExpectUnprovable };
            let f = Fact::new(Pred::Has, vec![Term::entity(e), data.clone()]);
            g.push(f, SubPolicy::Possession, polarity, GoalKind::Has);
        }

        for e in entities {
            for other in partners.iter().filter(|o| o.as_str() != th) {
                let permit = link_entry(&b.link_permit, e, other);
                let forbid = link_entry(&b.link_forbid, e, other);
                let link_ok = permit.is_some() || forbid.is_some_and(|f| f.unique);
                let unique_ok = permit.is_some_and(|p| p.unique);
                let pol = |ok: bool| if ok { Polarity::ExpectProvable } else { Polarity::ExpectUnprovable };
                let args = vec![Term::entity(e), data.clone(), Term::simple(other)];
                g.push(Fact::new(Pred::Link, args.clone()), SubPolicy::Connection, pol(link_ok), GoalKind::Link);
                g.push(Fact::new(Pred::LinkUnique, args), SubPolicy::Connection, pol(unique_ok), GoalKind::LinkUnique);
            }
        }
    }
    set
}

fn mentions_type(t: &Term, name: &str) -> bool {
    let own = match t {
        Term::SimpleType(n) | Term::Compound(n, _) => n.eq_ignore_ascii_case(name),
        _ => false,
    };
    own || t.children().iter().any(|c| mentions_type(c, name))
}

/// Purposes the architecture pursues for a policy data type without the
/// policy listing them. One goal per unlisted `act:Type`; it is expected
/// to be unprovable.
pub fn purpose_audit_goals(p: &Policy, purposes: &PurposeFacts) -> Vec<Goal> {
    let mut out: Vec<Goal> = Vec::new();
    let sources = [
        (Pred::CPurpose, SubPolicy::Collection),
        (Pred::UPurpose, SubPolicy::Usage),
        (Pred::FwPurpose, SubPolicy::Transfer),
    ];
    for (pred, sub) in sources {
        for f in purposes.for_pred(pred) {
            let (Some(ty), Term::SimpleType(act)) = (type_name(&f.args[0]), &f.args[1]) else { continue };
            for b in &p.bundles {
                let listed = match sub {
                    SubPolicy::Collection => b.collection.as_ref().map(|c| &c.purposes),
                    SubPolicy::Usage => b.usage.as_ref().map(|u| &u.purposes),
                    _ => b.transfer.as_ref().map(|t| &t.purposes),
                };
                let Some(listed) = listed else { continue };
                let mut names = vec![b.data_type.clone()];
                if let Some(g) = p.group(&b.data_type) {
                    names.extend(g.members.iter().cloned());
                }
                if !names.iter().any(|n| mentions_type(&f.args[0], n)) {
                    continue;
                }
                let known = listed
                    .iter()
                    .any(|l| l.action.eq_ignore_ascii_case(act) && l.result_type.eq_ignore_ascii_case(ty));
                if known {
                    continue;
                }
                let goal = Goal {
                    fact: Fact::new(pred, vec![Term::simple(ty), Term::simple(act)]),
                    data_type: b.data_type.clone(),
                    sub_policy: sub,
                    polarity: Polarity::ExpectUnprovable,
                    kind: GoalKind::PurposeAudit,
                    delay: None,
                };
                if !out.contains(&goal) {
                    out.push(goal);
                }
            }
        }
    }
    out
}

/// One goal per line.
pub fn render_goals(set: &GoalSet) -> String {
    let mut out = String::new();
    for g in &set.goals {
        out.push_str(&g.to_string());
        out.push('\n');
    }
    for n in &set.notes {
        out.push_str("# ");
        out.push_str(&n.message);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    const RETENTION: &str = "DATAGROUP personalinfo UNIQUE=N { name address }
POLICY personalinfo {
  STORAGE { consent=Y ; where = mainstorage }
  DELETION { fromwhere = mainstorage ; delay = 8y }
  HAS { }
}";

    fn facts(set: &GoalSet) -> Vec<String> {
        set.goals.iter().map(|g| g.fact.to_string()).collect()
    }

    #[test]
    fn retention_policy_goals() {
        let p = parse_policy(RETENTION).unwrap();
        let set = generate_goals(&p, &p.entity_names());
        let f = facts(&set);
        assert!(f.contains(&"STRCONSENTCOLLECTED(sp,personalinfo)".to_string()));
        assert!(f.contains(&"HASUPTO(mainstorage,personalinfo,Time(DD))".to_string()));
        assert!(f.contains(&"DELETEWITHIN(mainstorage,personalinfo,EVfrom,Time(DD))".to_string()));
        assert!(f.contains(&"STOREAT(mainstorage,personalinfo,EVfrom,Time(TT))".to_string()));
        let has: Vec<&Goal> = set.goals.iter().filter(|g| g.kind == GoalKind::Has).collect();
        assert_eq!(has.len(), 1);
        assert_eq!(has[0].polarity, Polarity::ExpectUnprovable);
        let backup = set
            .goals
            .iter()
            .find(|g| g.fact.to_string() == "STORE(backupstorage,personalinfo,EVfrom)")
            .unwrap();
        assert_eq!(backup.polarity, Polarity::ExpectUnprovable);
        let notes: Vec<SubPolicy> = set.notes.iter().map(|n| n.sub_policy).collect();
        assert_eq!(notes, vec![SubPolicy::Collection, SubPolicy::Usage, SubPolicy::Transfer]);
    }

    #[test]
    fn empty_bundle_gives_only_possession_and_connection() {
        let p = parse_policy("ENTITY auth \"tax\"\nDATAGROUP a UNIQUE=N { }\nDATAGROUP b UNIQUE=N { }\nPOLICY a { }").unwrap();
        let set = generate_goals(&p, &p.entity_names());
        assert!(set.goals.iter().all(|g| matches!(g.kind, GoalKind::Has | GoalKind::Link | GoalKind::LinkUnique)));
        assert_eq!(set.goals.iter().filter(|g| g.kind == GoalKind::Has).count(), 2);
        assert_eq!(set.goals.iter().filter(|g| g.kind == GoalKind::Link).count(), 2);
    }

    #[test]
    fn transfer_goals() {
        let p = parse_policy(
            "ENTITY auth \"tax\"\nDATAGROUP bill UNIQUE=N { }\nPOLICY bill { TRANSFER { consent=Y ; to = auth ; purposes = calculateat:Tax } }",
        )
        .unwrap();
        let set = generate_goals(&p, &p.entity_names());
        let f = facts(&set);
        for expected in [
            "RECEIVE(auth,bill,EVfrom)",
            "RECEIVEAT(auth,bill,EVfrom,Time(TT))",
            "FWCONSENTCOLLECTED(sp,bill,auth)",
            "FWPURPOSE(Tax,calculateat)",
        ] {
            assert!(f.contains(&expected.to_string()), "{}", expected);
        }
    }

    #[test]
    fn link_polarity_follows_permit_and_forbid() {
        let p = parse_policy(
            "DATAGROUP nhsnumber UNIQUE=N { }\nDATAGROUP photo UNIQUE=N { }\nDATAGROUP name UNIQUE=N { }
POLICY nhsnumber { LINKPERMIT { sp : name UNIQUE=N } LINKFORBID { sp : photo UNIQUE=Y } }",
        )
        .unwrap();
        let set = generate_goals(&p, &p.entity_names());
        let polarity = |s: &str| set.goals.iter().find(|g| g.fact.to_string() == s).unwrap().polarity;
        assert_eq!(polarity("LINK(sp,nhsnumber,name)"), Polarity::ExpectProvable);
        assert_eq!(polarity("LINKUNIQUE(sp,nhsnumber,name)"), Polarity::ExpectUnprovable);
        assert_eq!(polarity("LINK(sp,nhsnumber,photo)"), Polarity::ExpectProvable);
        assert_eq!(polarity("LINKUNIQUE(sp,nhsnumber,photo)"), Polarity::ExpectUnprovable);
    }
}
