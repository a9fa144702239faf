//! Forward-generated facts: trivial possession and linking, purposes, and
//! unique data types.

use alloc::vec::Vec;

use crate::arch::Architecture;
use crate::atom::{ActionKind, Fact, Pred};
use crate::policy::Policy;
use crate::term::{record_paths, SpecialKind, Term};

fn push_unique(out: &mut Vec<Fact>, f: Fact) {
    if !out.contains(&f) {
        out.push(f);
    }
}

/// HAS, LINK and LINKUNIQUE facts read directly off compound payloads.
///
/// For each OWN, RECEIVE*, CREATE* and CALCULATE* action with a record
/// payload, the subject has every component of the record at any depth, and
/// links every pair of components where neither sits inside the other. Crypto
/// and special constructors are not opened.
pub fn generate_trivial_facts(a: &Architecture) -> Vec<Fact> {
    let mut out = Vec::new();
    for f in &a.actions {
        let Some(kind) = f.action_kind() else { continue };
        if !matches!(
            kind,
            ActionKind::Own
                | ActionKind::Receive
                | ActionKind::ReceiveAt
                | ActionKind::Create
                | ActionKind::CreateAt
                | ActionKind::Calculate
                | ActionKind::CalculateAt
        ) {
            continue;
        }
        let (Some(subject), Some(payload @ Term::Compound(..))) = (f.subject(), f.payload()) else {
            continue;
        };
        let mut paths = record_paths(payload);
        // Outer components first.
        paths.sort_by_key(|(p, _)| p.len());
        for (_, t) in &paths {
            push_unique(&mut out, Fact::new(Pred::Has, alloc::vec![subject.clone(), (*t).clone()]));
        }
        let mut preorder = record_paths(payload);
        preorder.sort_by(|x, y| x.0.cmp(&y.0));
        let mut pairs = Vec::new();
        for (i, (pi, ti)) in preorder.iter().enumerate() {
            for (pj, tj) in preorder.iter().skip(i + 1) {
                if pj.starts_with(pi) {
                    continue;
                }
                pairs.push(((*ti).clone(), (*tj).clone()));
            }
        }
        for pred in [Pred::Link, Pred::LinkUnique] {
            for (x, y) in &pairs {
                push_unique(&mut out, Fact::new(pred, alloc::vec![subject.clone(), x.clone(), y.clone()]));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PurposeFacts {
    pub cpurp: Vec<Fact>,
    pub upurp: Vec<Fact>,
    pub fwpurp: Vec<Fact>,
}

impl PurposeFacts {
    pub fn for_pred(&self, pred: Pred) -> &[Fact] {
        match pred {
            Pred::CPurpose => &self.cpurp,
            Pred::UPurpose => &self.upurp,
            Pred::FwPurpose => &self.fwpurp,
            _ => &[],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cpurp.is_empty() && self.upurp.is_empty() && self.fwpurp.is_empty()
    }
}

fn purpose_fact(pred: Pred, data: &Term, act: &str) -> Fact {
    Fact::new(pred, alloc::vec![data.clone(), Term::simple(act)])
}

/// CREATEAT gives a collection purpose, CALCULATEAT a usage purpose, and a
/// forwarding consent followed by the recipient creating or calculating the
/// same data gives a forwarding purpose.
pub fn generate_purpose_facts(a: &Architecture) -> PurposeFacts {
    let mut out = PurposeFacts::default();
    for f in &a.actions {
        let Some(data) = f.payload() else { continue };
        match f.action_kind() {
            Some(ActionKind::CreateAt) => push_unique(&mut out.cpurp, purpose_fact(Pred::CPurpose, data, "createat")),
            Some(ActionKind::CalculateAt) => {
                push_unique(&mut out.upurp, purpose_fact(Pred::UPurpose, data, "calculateat"))
            }
            _ => {}
        }
    }
    for f in &a.actions {
        if f.action_kind() != Some(ActionKind::ReceiveAt) {
            continue;
        }
        let Some(Term::Special(SpecialKind::Fwconsent, fw)) = f.payload() else { continue };
        let (x, to) = (&fw[0], &fw[1]);
        for g in &a.actions {
            if g.subject() != Some(to) || g.payload() != Some(x) {
                continue;
            }
            match g.action_kind() {
                Some(ActionKind::CreateAt) => push_unique(&mut out.fwpurp, purpose_fact(Pred::FwPurpose, x, "createat")),
                Some(ActionKind::CalculateAt) => {
                    push_unique(&mut out.fwpurp, purpose_fact(Pred::FwPurpose, x, "calculateat"))
                }
                _ => {}
            }
        }
    }
    out
}

/// Name of the data type a purpose fact talks about: the constructor of a
/// record, or the simple type itself.
pub fn type_name(t: &Term) -> Option<&str> {
    match t {
        Term::Compound(n, _) | Term::SimpleType(n) => Some(n),
        _ => None,
    }
}

/// Whether a purpose goal such as `CPURPOSE(Account,createat)` is met by a
/// purpose fact such as `CPURPOSE(Account(name,address),createat)`. Type names
/// compare case-insensitively.
pub fn purpose_matches(goal: &Fact, fact: &Fact) -> bool {
    if goal.pred != fact.pred || goal.args.len() != 2 || fact.args.len() != 2 {
        return false;
    }
    if goal.args[1] != fact.args[1] {
        return false;
    }
    if goal.args[0] == fact.args[0] {
        return true;
    }
    match (type_name(&goal.args[0]), type_name(&fact.args[0])) {
        (Some(g), Some(f)) => g.eq_ignore_ascii_case(f),
        _ => false,
    }
}

/// One UNIQUE fact per data group marked unique.
pub fn generate_unique_facts(p: &Policy) -> Vec<Fact> {
    p.groups
        .iter()
        .filter(|g| g.unique)
        .map(|g| Fact::new(Pred::Unique, alloc::vec![Term::simple(&g.name)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::parse_architecture;
    use crate::policy::parse_policy;
    use alloc::string::{String, ToString};

    fn arch(src: &str) -> Architecture {
        parse_architecture(src).unwrap().architecture
    }

    fn strings(fs: &[Fact]) -> Vec<String> {
        let mut v: Vec<String> = fs.iter().map(|f| f.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn sickness_record_facts() {
        let facts = generate_trivial_facts(&arch("RECEIVE(sp,Sicknessrec(Personalinfo(name,address),disease))"));
        let has_link: Vec<Fact> = facts.iter().filter(|f| f.pred != Pred::LinkUnique).cloned().collect();
        let mut expected = alloc::vec![
            "HAS(sp,Personalinfo(name,address))",
            "HAS(sp,disease)",
            "HAS(sp,name)",
            "HAS(sp,address)",
            "LINK(sp,Personalinfo(name,address),disease)",
            "LINK(sp,name,address)",
            "LINK(sp,name,disease)",
            "LINK(sp,address,disease)",
        ];
        expected.sort();
        assert_eq!(strings(&has_link), expected);
        assert_eq!(facts.iter().filter(|f| f.pred == Pred::LinkUnique).count(), 4);
    }

    #[test]
    fn no_trivial_facts_for_simple_or_encrypted_payloads() {
        assert!(generate_trivial_facts(&arch("OWN(sp,key)")).is_empty());
        assert!(generate_trivial_facts(&arch("RECEIVE(sp,Senc(Account(name,address),key))")).is_empty());
        assert!(generate_trivial_facts(&arch("STORE(sp,Account(name,address))")).is_empty());
    }

    #[test]
    fn purposes() {
        let p = generate_purpose_facts(&arch("CREATEAT(sp,Account(name,address),Time(t))"));
        assert_eq!(strings(&p.cpurp), alloc::vec!["CPURPOSE(Account(name,address),createat)"]);
        assert!(generate_purpose_facts(&arch("CREATE(sp,x)")).is_empty());
        let p = generate_purpose_facts(&arch("RECEIVEAT(sp,Fwconsent(bill,auth),Time(t))\nCALCULATEAT(auth,bill,Time(t))"));
        assert_eq!(strings(&p.fwpurp), alloc::vec!["FWPURPOSE(bill,calculateat)"]);
        let goal = Fact::new(Pred::CPurpose, alloc::vec![Term::simple("account"), Term::simple("createat")]);
        let fact = Fact::new(
            Pred::CPurpose,
            alloc::vec![Term::compound("Account", alloc::vec![Term::simple("x")]), Term::simple("createat")],
        );
        assert!(purpose_matches(&goal, &fact));
    }

    #[test]
    fn unique_facts() {
        let p = parse_policy("DATAGROUP personalinfo UNIQUE=Y { }\nDATAGROUP energy UNIQUE=N { }").unwrap();
        assert_eq!(strings(&generate_unique_facts(&p)), alloc::vec!["UNIQUE(personalinfo)"]);
        assert!(generate_unique_facts(&parse_policy("").unwrap()).is_empty());
    }
}
