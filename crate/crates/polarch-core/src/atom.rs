//! Logic atoms: a predicate applied to terms.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::term::{unify_lists, Subst, Term, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Own,
    Receive,
    ReceiveAt,
    Create,
    CreateAt,
    Calculate,
    CalculateAt,
    Store,
    StoreAt,
    Delete,
    DeleteWithin,
}

impl ActionKind {
    pub const ALL: [ActionKind; 11] = [
        ActionKind::Own,
        ActionKind::Receive,
        ActionKind::ReceiveAt,
        ActionKind::Create,
        ActionKind::CreateAt,
        ActionKind::Calculate,
        ActionKind::CalculateAt,
        ActionKind::Store,
        ActionKind::StoreAt,
        ActionKind::Delete,
        ActionKind::DeleteWithin,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ActionKind::Own => "OWN",
            ActionKind::Receive => "RECEIVE",
            ActionKind::ReceiveAt => "RECEIVEAT",
            ActionKind::Create => "CREATE",
            ActionKind::CreateAt => "CREATEAT",
            ActionKind::Calculate => "CALCULATE",
            ActionKind::CalculateAt => "CALCULATEAT",
            ActionKind::Store => "STORE",
            ActionKind::StoreAt => "STOREAT",
            ActionKind::Delete => "DELETE",
            ActionKind::DeleteWithin => "DELETEWITHIN",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        ActionKind::ALL.iter().copied().find(|k| k.keyword() == s)
    }

    /// Carries an origin entity (RECEIVE*, STORE*, DELETE*).
    pub fn has_origin(self) -> bool {
        matches!(
            self,
            ActionKind::Receive
                | ActionKind::ReceiveAt
                | ActionKind::Store
                | ActionKind::StoreAt
                | ActionKind::Delete
                | ActionKind::DeleteWithin
        )
    }

    /// Carries a `Time(..)` argument.
    pub fn has_time(self) -> bool {
        matches!(
            self,
            ActionKind::ReceiveAt
                | ActionKind::CreateAt
                | ActionKind::CalculateAt
                | ActionKind::StoreAt
                | ActionKind::DeleteWithin
        )
    }

    pub fn arity(self) -> usize {
        2 + usize::from(self.has_origin()) + usize::from(self.has_time())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    Has,
    HasUpTo,
    Link,
    LinkUnique,
    CryptHas,
    Unique,
    CPurpose,
    UPurpose,
    FwPurpose,
    CConsentCollected,
    UConsentCollected,
    StrConsentCollected,
    FwConsentCollected,
    Action(ActionKind),
}

impl Pred {
    pub fn name(self) -> &'static str {
        match self {
            Pred::Has => "HAS",
            Pred::HasUpTo => "HASUPTO",
            Pred::Link => "LINK",
            Pred::LinkUnique => "LINKUNIQUE",
            Pred::CryptHas => "CRYPTHAS",
            Pred::Unique => "UNIQUE",
            Pred::CPurpose => "CPURPOSE",
            Pred::UPurpose => "UPURPOSE",
            Pred::FwPurpose => "FWPURPOSE",
            Pred::CConsentCollected => "CCONSENTCOLLECTED",
            Pred::UConsentCollected => "UCONSENTCOLLECTED",
            Pred::StrConsentCollected => "STRCONSENTCOLLECTED",
            Pred::FwConsentCollected => "FWCONSENTCOLLECTED",
            Pred::Action(k) => k.keyword(),
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        const PLAIN: [Pred; 13] = [
            Pred::Has,
            Pred::HasUpTo,
            Pred::Link,
            Pred::LinkUnique,
            Pred::CryptHas,
            Pred::Unique,
            Pred::CPurpose,
            Pred::UPurpose,
            Pred::FwPurpose,
            Pred::CConsentCollected,
            Pred::UConsentCollected,
            Pred::StrConsentCollected,
            Pred::FwConsentCollected,
        ];
        PLAIN
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .or_else(|| ActionKind::from_keyword(s).map(Pred::Action))
    }

    pub fn arity(self) -> usize {
        match self {
            Pred::Has | Pred::CryptHas => 2,
            Pred::HasUpTo | Pred::Link | Pred::LinkUnique => 3,
            Pred::Unique => 1,
            Pred::CPurpose | Pred::UPurpose | Pred::FwPurpose => 2,
            Pred::CConsentCollected | Pred::UConsentCollected | Pred::StrConsentCollected => 2,
            Pred::FwConsentCollected => 3,
            Pred::Action(k) => k.arity(),
        }
    }

    pub fn is_consent(self) -> bool {
        matches!(
            self,
            Pred::CConsentCollected | Pred::UConsentCollected | Pred::StrConsentCollected | Pred::FwConsentCollected
        )
    }

    pub fn is_purpose(self) -> bool {
        matches!(self, Pred::CPurpose | Pred::UPurpose | Pred::FwPurpose)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: Pred,
    pub args: Vec<Term>,
}

impl Fact {
    pub fn new(pred: Pred, args: Vec<Term>) -> Self {
        Fact { pred, args }
    }

    pub fn action(kind: ActionKind, args: Vec<Term>) -> Self {
        Fact { pred: Pred::Action(kind), args }
    }

    pub fn action_kind(&self) -> Option<ActionKind> {
        match self.pred {
            Pred::Action(k) => Some(k),
            _ => None,
        }
    }

    /// Data argument of an action or of a HAS-like atom.
    pub fn payload(&self) -> Option<&Term> {
        self.args.get(1)
    }

    pub fn subject(&self) -> Option<&Term> {
        self.args.first()
    }

    pub fn apply(&self, s: &Subst) -> Fact {
        Fact { pred: self.pred, args: self.args.iter().map(|a| s.apply(a)).collect() }
    }

    pub fn vars(&self) -> Vec<(VarKind, String)> {
        let mut out = Vec::new();
        for a in &self.args {
            a.collect_vars(&mut out);
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn rename_vars(&self, f: &mut dyn FnMut(&str) -> String) -> Fact {
        Fact { pred: self.pred, args: self.args.iter().map(|a| a.rename_vars(f)).collect() }
    }

    /// Renames variables to `_0`, `_1`, ... in order of first occurrence and
    /// returns the original names in that order.
    pub fn canonical(&self) -> (Fact, Vec<String>) {
        let names: Vec<String> = self.vars().into_iter().map(|(_, n)| n).collect();
        let renamed = self.rename_vars(&mut |n| {
            let i = names.iter().position(|m| m == n).unwrap_or(0);
            alloc::format!("_{}", i)
        });
        (renamed, names)
    }

    pub fn crypto_depth(&self) -> usize {
        self.args.iter().map(crate::term::crypto_depth).max().unwrap_or(0)
    }
}

/// Every unifier of two atoms.
pub fn unify_facts(a: &Fact, b: &Fact) -> Vec<Subst> {
    unify_facts_under(a, b, &Subst::new())
}

pub fn unify_facts_under(a: &Fact, b: &Fact, s: &Subst) -> Vec<Subst> {
    if a.pred != b.pred {
        return Vec::new();
    }
    unify_lists(&a.args, &b.args, s)
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pred.name())?;
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn canonical_forms_agree_up_to_renaming() {
        let a = Fact::new(Pred::Has, vec![Term::entity_var("X"), Term::data_var("Y")]);
        let b = Fact::new(Pred::Has, vec![Term::entity_var("P"), Term::data_var("Q")]);
        assert_eq!(a.canonical().0, b.canonical().0);
        assert_eq!(a.canonical().1, vec!["X".to_string(), "Y".to_string()]);
    }

    #[test]
    fn predicate_names_round_trip() {
        for k in ActionKind::ALL {
            assert_eq!(Pred::from_name(k.keyword()), Some(Pred::Action(k)));
        }
        assert_eq!(Pred::from_name("LINKUNIQUE"), Some(Pred::LinkUnique));
        assert_eq!(ActionKind::ReceiveAt.arity(), 4);
        assert_eq!(ActionKind::Own.arity(), 2);
    }

    #[test]
    fn identical_facts_unify_with_empty_substitution() {
        let f = Fact::new(Pred::Has, vec![Term::entity("sp"), Term::simple("name")]);
        let u = unify_facts(&f, &f);
        assert_eq!(u.len(), 1);
        assert!(u[0].is_empty());
    }
}
