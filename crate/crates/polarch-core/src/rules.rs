//! The fixed rule catalog.
//!
//! Rules are written over action facts in the layout used by [`crate::arch`]:
//! the origin of received, stored or deleted data is its own argument rather
//! than part of a `(type, origin)` pair.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::atom::{ActionKind, Fact, Pred};
use crate::term::{CryptoKind, SpecialKind, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RuleSet {
    Dpr,
    HasUpTo,
    Has,
    CryptHas,
    Link,
    LinkUnique,
}

impl RuleSet {
    pub fn name(self) -> &'static str {
        match self {
            RuleSet::Dpr => "DPRRules",
            RuleSet::HasUpTo => "HasUpToRules",
            RuleSet::Has => "HasRules",
            RuleSet::CryptHas => "CryptHasRules",
            RuleSet::Link => "LinkRules",
            RuleSet::LinkUnique => "LinkUniqueRules",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceRule {
    pub name: String,
    pub set: RuleSet,
    pub head: Fact,
    pub tail: Vec<Fact>,
    /// Sub-goals must stay within the crypto depth bound.
    pub depth_guarded: bool,
}

impl fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {} :-", self.name, self.head)?;
        for (i, t) in self.tail.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{}", t)?;
        }
        Ok(())
    }
}

impl InferenceRule {
    fn new(name: &str, set: RuleSet, head: Fact, tail: Vec<Fact>) -> Self {
        InferenceRule { name: name.into(), set, head, tail, depth_guarded: false }
    }

    fn guarded(mut self) -> Self {
        self.depth_guarded = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSets {
    pub dpr: Vec<InferenceRule>,
    pub has_up_to: Vec<InferenceRule>,
    pub has: Vec<InferenceRule>,
    pub crypt_has: Vec<InferenceRule>,
    pub link: Vec<InferenceRule>,
    pub link_unique: Vec<InferenceRule>,
}

impl RuleSets {
    /// All rules in catalog order.
    pub fn all(&self) -> impl Iterator<Item = &InferenceRule> {
        self.dpr
            .iter()
            .chain(&self.has_up_to)
            .chain(&self.has)
            .chain(&self.crypt_has)
            .chain(&self.link)
            .chain(&self.link_unique)
    }

    /// Rules whose head has the given predicate, in catalog order.
    pub fn for_pred(&self, pred: Pred) -> Vec<&InferenceRule> {
        self.all().filter(|r| r.head.pred == pred).collect()
    }

    pub fn get(&self, name: &str) -> Option<&InferenceRule> {
        self.all().find(|r| r.name == name)
    }

    pub fn len(&self) -> usize {
        self.all().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rule variable names.
pub mod vars {
    pub const EV: &str = "EV";
    pub const EV_FROM: &str = "EVfrom";
    pub const EV_TO: &str = "EVto";
    pub const EV_PLACE: &str = "EVplace";
    pub const THETA: &str = "θV";
    pub const THETA1: &str = "θV1";
    pub const THETA2: &str = "θV2";
    pub const THETA3: &str = "θV3";
    pub const TV: &str = "TV";
    pub const DD: &str = "DD";
    pub const K: &str = "K";
    pub const PK: &str = "PK";
    pub const F: &str = "F";
}

fn ev() -> Term {
    Term::entity_var(vars::EV)
}
fn ev_from() -> Term {
    Term::entity_var(vars::EV_FROM)
}
fn ev_to() -> Term {
    Term::entity_var(vars::EV_TO)
}
fn th() -> Term {
    Term::data_var(vars::THETA)
}
fn th_n(i: u8) -> Term {
    Term::data_var(match i {
        1 => vars::THETA1,
        2 => vars::THETA2,
        _ => vars::THETA3,
    })
}
fn time_tv() -> Term {
    Term::time(Term::time_var(vars::TV))
}
fn time_dd() -> Term {
    Term::time(Term::delay_var(vars::DD))
}
fn act(kind: ActionKind, args: Vec<Term>) -> Fact {
    Fact::action(kind, args)
}
fn has(e: Term, d: Term) -> Fact {
    Fact::new(Pred::Has, vec![e, d])
}
fn consent(kind: SpecialKind, args: Vec<Term>) -> Term {
    Term::special(kind, args)
}

fn dpr_rules() -> Vec<InferenceRule> {
    use ActionKind::*;
    let d = RuleSet::Dpr;
    let recv_at = |e: Term, data: Term| act(ReceiveAt, vec![e, data, ev_from(), time_tv()]);
    vec![
        InferenceRule::new(
            "D1",
            d,
            Fact::new(Pred::FwConsentCollected, vec![ev(), th(), ev_to()]),
            vec![recv_at(ev(), consent(SpecialKind::Fwconsent, vec![th(), ev_to()])), recv_at(ev_to(), th())],
        ),
        InferenceRule::new(
            "D2",
            d,
            Fact::new(Pred::CConsentCollected, vec![ev(), th()]),
            vec![recv_at(ev(), consent(SpecialKind::Cconsent, vec![th()])), recv_at(ev(), th())],
        ),
        InferenceRule::new(
            "D3",
            d,
            Fact::new(Pred::UConsentCollected, vec![ev(), th()]),
            vec![
                recv_at(ev(), consent(SpecialKind::Uconsent, vec![th()])),
                act(CreateAt, vec![ev(), Term::contains(th(), false), time_tv()]),
            ],
        ),
        InferenceRule::new(
            "D4",
            d,
            Fact::new(Pred::UConsentCollected, vec![ev(), th()]),
            vec![
                recv_at(ev(), consent(SpecialKind::Uconsent, vec![th()])),
                act(CalculateAt, vec![ev(), Term::contains(th(), false), time_tv()]),
            ],
        ),
        InferenceRule::new(
            "D5",
            d,
            Fact::new(Pred::StrConsentCollected, vec![ev(), th()]),
            vec![
                recv_at(ev(), consent(SpecialKind::Sconsent, vec![th()])),
                act(StoreAt, vec![Term::entity_var(vars::EV_PLACE), th(), ev_from(), time_tv()]),
            ],
        ),
        InferenceRule::new(
            "D6",
            d,
            Fact::new(Pred::FwConsentCollected, vec![ev(), th(), ev_to()]),
            vec![
                recv_at(ev(), consent(SpecialKind::Fwconsent, vec![th(), ev_to()])),
                recv_at(ev_to(), Term::contains(th(), true)),
            ],
        ),
        InferenceRule::new(
            "D7",
            d,
            Fact::new(Pred::CConsentCollected, vec![ev(), th()]),
            vec![
                recv_at(ev(), consent(SpecialKind::Cconsent, vec![th()])),
                recv_at(ev(), Term::contains(th(), true)),
            ],
        ),
    ]
}

fn pseudonym_rule(name: &str, head_args: [Term; 2], tail_args: [Term; 2]) -> InferenceRule {
    let trusted = Term::entity("trusted");
    let f = || alloc::boxed::Box::new(Term::data_var(vars::F));
    let [h1, h2] = head_args;
    let [t1, t2] = tail_args;
    let set = if name == "P2" { RuleSet::HasUpTo } else { RuleSet::Has };
    InferenceRule::new(
        name,
        set,
        has(trusted.clone(), Term::CtorApp(f(), vec![h1, h2])),
        vec![has(trusted, Term::CtorApp(f(), vec![t1, t2]))],
    )
}

fn pseudo_ds() -> Term {
    Term::special(SpecialKind::P, vec![Term::Ds])
}

fn has_rules() -> (Vec<InferenceRule>, Vec<InferenceRule>) {
    use ActionKind::*;
    let h = RuleSet::Has;
    let head = || has(ev(), th());
    let p1 = InferenceRule::new(
        "P1",
        RuleSet::HasUpTo,
        Fact::new(Pred::HasUpTo, vec![ev(), th(), time_dd()]),
        vec![
            act(StoreAt, vec![ev(), th(), ev_from(), time_tv()]),
            act(DeleteWithin, vec![ev(), th(), ev_from(), time_dd()]),
        ],
    );
    let p2 = pseudonym_rule("P2", [Term::Ds, th()], [th(), pseudo_ds()]);
    let crypt = |name: &str, set: RuleSet, pred: Pred, kind: CryptoKind| {
        let key = if kind == CryptoKind::Aenc { Term::key_var(vars::PK) } else { Term::key_var(vars::K) };
        let key_goal = if kind == CryptoKind::Aenc { Term::Crypto(CryptoKind::Sk, vec![key.clone()]) } else { key.clone() };
        InferenceRule::new(
            name,
            set,
            Fact::new(pred, vec![ev(), th()]),
            vec![has(ev(), Term::Crypto(kind, vec![th(), key])), has(ev(), key_goal)],
        )
        .guarded()
    };
    let has_set = vec![
        InferenceRule::new("P3", h, head(), vec![act(Own, vec![ev(), th()])]),
        InferenceRule::new("P4", h, head(), vec![act(ReceiveAt, vec![ev(), th(), ev_from(), time_tv()])]),
        InferenceRule::new("P5", h, head(), vec![act(StoreAt, vec![ev(), th(), ev_from(), time_tv()])]),
        InferenceRule::new("P6", h, head(), vec![act(CreateAt, vec![ev(), th(), time_tv()])]),
        InferenceRule::new("P7", h, head(), vec![act(CalculateAt, vec![ev(), th(), time_tv()])]),
        crypt("P8", h, Pred::Has, CryptoKind::Senc),
        crypt("P9", h, Pred::Has, CryptoKind::Mac),
        crypt("P10", h, Pred::Has, CryptoKind::Aenc),
        InferenceRule::new(
            "P11",
            h,
            Fact::new(Pred::HasUpTo, vec![ev(), th(), time_dd()]),
            vec![
                act(Store, vec![ev(), th(), ev_from()]),
                act(DeleteWithin, vec![ev(), th(), ev_from(), time_dd()]),
            ],
        ),
        pseudonym_rule("P12", [Term::Ds, th()], [pseudo_ds(), th()]),
        pseudonym_rule("P13", [th(), Term::Ds], [th(), pseudo_ds()]),
        pseudonym_rule("P14", [th(), Term::Ds], [pseudo_ds(), th()]),
        InferenceRule::new("P15", h, head(), vec![act(Receive, vec![ev(), th(), ev_from()])]),
        InferenceRule::new("P16", h, head(), vec![act(Store, vec![ev(), th(), ev_from()])]),
        InferenceRule::new("P17", h, head(), vec![act(Create, vec![ev(), th()])]),
        InferenceRule::new("P18", h, head(), vec![act(Calculate, vec![ev(), th()])]),
    ];
    let crypt_set = vec![
        crypt("C1", RuleSet::CryptHas, Pred::CryptHas, CryptoKind::Senc),
        crypt("C2", RuleSet::CryptHas, Pred::CryptHas, CryptoKind::Mac),
        crypt("C3", RuleSet::CryptHas, Pred::CryptHas, CryptoKind::Aenc),
    ];
    let mut all_has = has_set;
    all_has.extend(crypt_set);
    (vec![p1, p2], all_has)
}

/// Base schemas 1..4: the head orientation and the slot order of the second
/// record.
fn link_schema(i: u8) -> (bool, [u8; 2]) {
    match i {
        1 => (false, [2, 3]),
        2 => (false, [3, 2]),
        3 => (true, [2, 3]),
        _ => (true, [3, 2]),
    }
}

fn link_family(pred: Pred, set: RuleSet, prefix: &str, unique: bool) -> Vec<InferenceRule> {
    let mut out = Vec::new();
    for n in 1..=8u8 {
        let (swap_head, second) = link_schema(if n > 4 { n - 4 } else { n });
        let first = if n > 4 { [3, 1] } else { [1, 3] };
        for variant in ["", "/b", "/c", "/d"] {
            let wrap_first = matches!(variant, "/c" | "/d");
            let wrap_third = matches!(variant, "/b" | "/d");
            let slot = |v: u8, wrap: bool| if wrap { Term::contains(th_n(v), true) } else { th_n(v) };
            let rec1 = Term::AnyCompound(vec![th_n(first[0]), th_n(first[1])]);
            let rec2 = Term::AnyCompound(vec![slot(second[0], wrap_first), slot(second[1], wrap_third)]);
            let mut tail = vec![has(ev(), rec1), has(ev(), rec2)];
            if wrap_first {
                tail.push(Fact::new(Pred::CryptHas, vec![ev(), th_n(second[0])]));
            }
            if wrap_third {
                tail.push(Fact::new(Pred::CryptHas, vec![ev(), th_n(second[1])]));
            }
            if unique {
                tail.push(Fact::new(Pred::Unique, vec![th_n(3)]));
            }
            let head_args = if swap_head { vec![ev(), th_n(2), th_n(1)] } else { vec![ev(), th_n(1), th_n(2)] };
            out.push(InferenceRule::new(
                &format!("{}{}{}", prefix, n, variant),
                set,
                Fact::new(pred, head_args),
                tail,
            ));
        }
    }
    out
}

fn link_rules() -> Vec<InferenceRule> {
    let meta = || Term::special(SpecialKind::Meta, vec![th_n(3)]);
    let mut out = vec![InferenceRule::new(
        "L0",
        RuleSet::Link,
        Fact::new(Pred::Link, vec![ev(), th_n(1), th_n(2)]),
        vec![
            has(ev(), Term::AnyCompound(vec![th_n(1), meta()])),
            has(ev(), Term::AnyCompound(vec![th_n(2), meta()])),
        ],
    )];
    out.extend(link_family(Pred::Link, RuleSet::Link, "L", false));
    out
}

/// The complete catalog: D1-D7, P1-P18, C1-C3, L0-L8 and U1-U8 with their
/// /b, /c and /d variants.
pub fn build_rulesets() -> RuleSets {
    let (has_up_to, mut has) = has_rules();
    let crypt_has: Vec<InferenceRule> = has.iter().filter(|r| r.set == RuleSet::CryptHas).cloned().collect();
    has.retain(|r| r.set == RuleSet::Has);
    RuleSets {
        dpr: dpr_rules(),
        has_up_to,
        has,
        crypt_has,
        link: link_rules(),
        link_unique: link_family(Pred::LinkUnique, RuleSet::LinkUnique, "U", true),
    }
}

/// Renames every variable of the rule with the suffix `#n`, taking `n` from the counter.
pub fn freshen_rule(r: &InferenceRule, counter: &mut u64) -> InferenceRule {
    *counter += 1;
    let n = *counter;
    let mut rename = |v: &str| format!("{}#{}", v, n);
    InferenceRule {
        name: r.name.clone(),
        set: r.set,
        head: r.head.rename_vars(&mut rename),
        tail: r.tail.iter().map(|t| t.rename_vars(&mut rename)).collect(),
        depth_guarded: r.depth_guarded,
    }
}

/// The rule variable a freshened name came from.
pub fn base_var_name(name: &str) -> &str {
    name.split('#').next().unwrap_or(name)
}

/// One line per rule, for auditing.
pub fn render_rules(r: &RuleSets) -> String {
    let mut out = String::new();
    let mut last = None;
    for rule in r.all() {
        if last != Some(rule.set) {
            out.push_str(&format!("# {}\n", rule.set.name()));
            last = Some(rule.set);
        }
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}
