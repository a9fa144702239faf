//! Architecture model: a set of actions plus the `HASACCESSTO` map.
//!
//! Actions are stored as facts whose arguments follow one fixed layout:
//! subject, payload, origin (RECEIVE*, STORE*, DELETE*), `Time(..)` (*AT and
//! DELETEWITHIN). A missing origin is the anonymous entity `_`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::atom::{ActionKind, Fact, Pred};
use crate::policy::{BACKUP_STORAGE, MAIN_STORAGE};
use crate::term::{
    as_entity, compound_nesting, unify_all, SpecialKind, Term, TermParseError, TermParser,
};

/// Origin used when an action does not name one.
pub const ANONYMOUS: &str = "_";
pub const DEFAULT_NESTING_BOUND: usize = 3;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Architecture {
    pub actions: Vec<Fact>,
    pub has_access_to: BTreeMap<String, Vec<String>>,
}

impl Architecture {
    pub fn from_actions(actions: Vec<Fact>) -> Self {
        let mut a = Architecture::default();
        for f in actions {
            a.push(f);
        }
        a
    }

    /// Adds an action unless an equal one is already present.
    pub fn push(&mut self, f: Fact) {
        if !self.actions.contains(&f) {
            self.actions.push(f);
        }
    }

    pub fn access_of(&self, entity: &str) -> &[String] {
        self.has_access_to.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ArchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ArchWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedArchitecture {
    pub architecture: Architecture,
    pub warnings: Vec<ArchWarning>,
}

pub fn parse_architecture(src: &str) -> Result<ParsedArchitecture, ArchError> {
    parse_architecture_with(src, DEFAULT_NESTING_BOUND)
}

/// Parses one statement per line. Compounds nested deeper than
/// `nesting_bound` produce a warning.
pub fn parse_architecture_with(src: &str, nesting_bound: usize) -> Result<ParsedArchitecture, ArchError> {
    let mut arch = Architecture::default();
    let mut warnings = Vec::new();
    for (li, raw) in src.lines().enumerate() {
        let line_no = li + 1;
        let code = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let lead = code.len() - code.trim_start().len();
        let stmt = code.trim();
        if stmt.is_empty() {
            continue;
        }
        let at = |column: usize, message: String| ArchError { line: line_no, column: lead + column, message };
        if let Some(i) = stmt.find(char::is_whitespace) {
            return Err(at(i + 1, "no space character is allowed inside an action".into()));
        }
        if let Some(rest) = stmt.strip_prefix("HASACCESSTO(") {
            let (who, members) = parse_access(rest).map_err(|(c, m)| at(c + 12, m))?;
            let entry = arch.has_access_to.entry(who).or_default();
            for m in members {
                if !entry.contains(&m) {
                    entry.push(m);
                }
            }
            continue;
        }
        let action = parse_action(stmt).map_err(|e| at(e.column, e.message))?;
        if let Some(d) = action.payload() {
            let depth = compound_nesting(d);
            if depth > nesting_bound {
                warnings.push(ArchWarning {
                    line: line_no,
                    message: format!("{} nests {} compound layers, more than {}", d, depth, nesting_bound),
                });
            }
        }
        arch.push(action);
    }
    Ok(ParsedArchitecture { architecture: arch, warnings })
}

fn parse_access(rest: &str) -> Result<(String, Vec<String>), (usize, String)> {
    let bad = |c: usize| (c, String::from("expected HASACCESSTO(entity,{e1,e2,...})"));
    let comma = rest.find(',').ok_or_else(|| bad(1))?;
    let who = &rest[..comma];
    let body = rest[comma + 1..].strip_prefix('{').ok_or_else(|| bad(comma + 2))?;
    let body = body.strip_suffix("})").ok_or_else(|| bad(rest.len()))?;
    if !is_name(who) {
        return Err(bad(1));
    }
    let mut members = Vec::new();
    for m in body.split(',').filter(|m| !m.is_empty()) {
        if !is_name(m) {
            return Err(bad(comma + 3));
        }
        members.push(m.to_string());
    }
    Ok((who.to_string(), members))
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a single action such as `RECEIVEAT(sp,Cconsent(personalinfo),Time(t))`.
pub fn parse_action(src: &str) -> Result<Fact, TermParseError> {
    let open = src.find('(').ok_or(TermParseError { column: 1, message: "expected ACTION(...)".into() })?;
    let kw = &src[..open];
    let kind = ActionKind::from_keyword(kw)
        .ok_or_else(|| TermParseError { column: 1, message: format!("unknown action keyword `{}`", kw) })?;
    let mut p = TermParser { src: src.as_bytes(), pos: open + 1 };
    let args = p.args()?;
    if p.pos != src.len() {
        return Err(p.error("trailing input after action"));
    }
    let col = open + 2;
    build_action(kind, args).map_err(|m| TermParseError { column: col, message: m })
}

fn entity_arg(t: &Term, what: &str) -> Result<Term, String> {
    as_entity(t).ok_or_else(|| format!("the {} must be an entity name, found {}", what, t))
}

fn is_storage_place(t: &Term) -> bool {
    matches!(t, Term::SimpleType(n) if n == MAIN_STORAGE || n == BACKUP_STORAGE)
}

fn build_action(kind: ActionKind, mut args: Vec<Term>) -> Result<Fact, String> {
    let kw = kind.keyword();
    let time = if kind.has_time() {
        let t = args.pop().ok_or_else(|| format!("{} needs a Time(..) argument", kw))?;
        let inner = match t {
            Term::Special(SpecialKind::Time, mut a) => a.remove(0),
            other => return Err(format!("{} needs Time(..) as its last argument, found {}", kw, other)),
        };
        match (kind, &inner) {
            (ActionKind::DeleteWithin, Term::TimeValue(_)) => {}
            (ActionKind::DeleteWithin, _) => return Err("DELETEWITHIN needs a concrete delay such as Time(10y)".into()),
            (_, Term::NonSpecificTime) => {}
            _ => return Err(format!("{} must use the non-specific time Time(t)", kw)),
        }
        Some(Term::time(inner))
    } else {
        None
    };
    if args.iter().any(|a| matches!(a, Term::Special(SpecialKind::Time, _))) {
        return Err(format!("malformed Time(..) position in {}", kw));
    }
    // STORE(owner,mainstorage,data): the place is what stores the data.
    if matches!(kind, ActionKind::Store | ActionKind::StoreAt) && args.len() == 3 && is_storage_place(&args[1]) {
        args.remove(0);
    }
    let (subject, payload, origin) = match (kind.has_origin(), args.len()) {
        (_, 2) => (&args[0], &args[1], None),
        (true, 3) => (&args[0], &args[1], Some(&args[2])),
        _ => return Err(format!("wrong number of arguments for {}", kw)),
    };
    let mut out = vec![entity_arg(subject, "subject")?, payload.clone()];
    if kind.has_origin() {
        out.push(match origin {
            Some(o) => entity_arg(o, "origin")?,
            None => Term::entity(ANONYMOUS),
        });
    }
    if let Some(t) = time {
        out.push(t);
    }
    Ok(Fact::action(kind, out))
}

/// Canonical text form of one action.
pub fn render_action(f: &Fact) -> String {
    let mut parts: Vec<String> = Vec::new();
    let kind = f.action_kind();
    for (i, a) in f.args.iter().enumerate() {
        let is_origin = i == 2 && kind.is_some_and(ActionKind::has_origin);
        if is_origin && *a == Term::entity(ANONYMOUS) {
            continue;
        }
        parts.push(a.to_string());
    }
    format!("{}({})", f.pred.name(), parts.join(","))
}

/// Canonical text form: actions in order, then the access map.
pub fn render_architecture(a: &Architecture) -> String {
    let mut out = String::new();
    for f in &a.actions {
        out.push_str(&render_action(f));
        out.push('\n');
    }
    for (who, members) in &a.has_access_to {
        out.push_str(&format!("HASACCESSTO({},{{{}}})\n", who, members.join(",")));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchViolation {
    pub action: Fact,
    pub message: String,
}

impl fmt::Display for ArchViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", render_action(&self.action), self.message)
    }
}

fn is_consent(t: &Term) -> bool {
    matches!(t, Term::Special(k, _) if k.is_consent())
}

fn holds_inside(container: &Term, d: &Term, include_crypto: bool) -> bool {
    !unify_all(&Term::contains(d.clone(), include_crypto), container).is_empty()
}

/// Stored data needs a source and timed deletions need a matching store.
pub fn check_well_formed_arch(a: &Architecture) -> Vec<ArchViolation> {
    let mut out = Vec::new();
    for f in &a.actions {
        let Some(kind) = f.action_kind() else { continue };
        let Some(d) = f.payload() else { continue };
        match kind {
            ActionKind::Store | ActionKind::StoreAt => {
                let sourced = a.actions.iter().any(|g| {
                    let Some(gk) = g.action_kind() else { return false };
                    let Some(src) = g.payload() else { return false };
                    if is_consent(src) {
                        return false;
                    }
                    match gk {
                        ActionKind::Own
                        | ActionKind::Create
                        | ActionKind::CreateAt
                        | ActionKind::Calculate
                        | ActionKind::CalculateAt => holds_inside(src, d, true),
                        ActionKind::Receive | ActionKind::ReceiveAt => holds_inside(src, d, false),
                        _ => false,
                    }
                });
                if !sourced {
                    out.push(ArchViolation {
                        action: f.clone(),
                        message: format!("{} is stored but nothing owns, receives, creates or calculates it", d),
                    });
                }
            }
            ActionKind::DeleteWithin => {
                let stored = a.actions.iter().any(|g| {
                    matches!(g.action_kind(), Some(ActionKind::Store | ActionKind::StoreAt)) && g.payload() == Some(d)
                });
                if !stored {
                    out.push(ArchViolation {
                        action: f.clone(),
                        message: format!("{} is deleted within a delay but never stored", d),
                    });
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArchPartition {
    pub time: Vec<Fact>,
    pub pseudo: Vec<Fact>,
    pub meta: Vec<Fact>,
    pub plain: Vec<Fact>,
}

fn fact_mentions(f: &Fact, kind: SpecialKind) -> bool {
    f.args.iter().any(|a| a.mentions_special(kind))
}

/// Splits actions by the Time, P and Meta constructs they use. An action can
/// sit in several of the first three lists; `plain` holds the rest.
pub fn partition_architecture(a: &Architecture) -> ArchPartition {
    let mut p = ArchPartition::default();
    for f in &a.actions {
        let t = fact_mentions(f, SpecialKind::Time);
        let ps = fact_mentions(f, SpecialKind::P);
        let m = fact_mentions(f, SpecialKind::Meta);
        if t {
            p.time.push(f.clone());
        }
        if ps {
            p.pseudo.push(f.clone());
        }
        if m {
            p.meta.push(f.clone());
        }
        if !(t || ps || m) {
            p.plain.push(f.clone());
        }
    }
    p
}

/// Whether some action of the given predicate exists.
pub fn has_action(a: &Architecture, pred: Pred) -> bool {
    a.actions.iter().any(|f| f.pred == pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sample_actions() {
        let a = parse_action("RECEIVEAT(sp,Cconsent(personalinfo),Time(t))").unwrap();
        assert_eq!(a.args[1], Term::special(SpecialKind::Cconsent, vec![Term::simple("personalinfo")]));
        assert_eq!(a.args[2], Term::entity(ANONYMOUS));
        let d = parse_action("DELETEWITHIN(mainstorage,personalinfo,Time(10y))").unwrap();
        assert_eq!(d.args[0], Term::entity("mainstorage"));
        assert_eq!(render_action(&d), "DELETEWITHIN(mainstorage,personalinfo,Time(10y))");
        let r = parse_action("RECEIVE(sp,Senc(Sicknessrecord(nhsnumber,name,Meta(ip)),spkey1))").unwrap();
        assert_eq!(r.args.len(), 3);
        let o = parse_action("RECEIVEAT(sp,name,client,Time(t))").unwrap();
        assert_eq!(o.args[2], Term::entity("client"));
        let s = parse_action("STORE(sp,mainstorage,name)").unwrap();
        assert_eq!(s.args[0], Term::entity("mainstorage"));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_architecture("RECEIVE(sp, name)").is_err());
        assert!(parse_architecture("FETCH(sp,name)").is_err());
        assert!(parse_architecture("RECEIVEAT(sp,name,Time(later))").is_err());
        assert!(parse_architecture("RECEIVEAT(sp,name,Time(1y))").is_err());
        assert!(parse_architecture("DELETEWITHIN(sp,name,Time(t))").is_err());
        assert!(parse_architecture("RECEIVE(sp,Rec(Meta(ip),x))").is_err());
        let e = parse_architecture("# ok\nOWN(sp,x)\nOWN(sp x)").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn nesting_bound_is_a_warning() {
        let p = parse_architecture("RECEIVE(sp,A(B(C(D(x)))))").unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert!(parse_architecture("RECEIVE(sp,A(B(C(x))))").unwrap().warnings.is_empty());
    }

    #[test]
    fn access_map_and_round_trip() {
        let src = "OWN(sp,spkey1)\nRECEIVEAT(sp,name,client,Time(t))\nHASACCESSTO(sp,{mainstorage,backupstorage})\n";
        let p = parse_architecture(src).unwrap();
        assert_eq!(p.architecture.access_of("sp").len(), 2);
        assert_eq!(render_architecture(&p.architecture), src);
    }

    #[test]
    fn well_formedness() {
        let lone = parse_architecture("STOREAT(mainstorage,x,Time(t))").unwrap().architecture;
        assert_eq!(check_well_formed_arch(&lone).len(), 1);
        let ok = parse_architecture("RECEIVEAT(mainstorage,x,Time(t))\nSTOREAT(mainstorage,x,Time(t))")
            .unwrap()
            .architecture;
        assert!(check_well_formed_arch(&ok).is_empty());
        let del = parse_architecture("DELETEWITHIN(mainstorage,x,Time(1y))").unwrap().architecture;
        assert_eq!(check_well_formed_arch(&del).len(), 1);
    }

    #[test]
    fn partition() {
        let a = parse_architecture(
            "RECEIVEAT(sp,name,client,Time(t))\nRECEIVE(sp,Sicknessrec(P(name),disease))\nRECEIVEAT(sp,Sicknessrec(name,Meta(ip)),Time(t))\nOWN(sp,k)",
        )
        .unwrap()
        .architecture;
        let p = partition_architecture(&a);
        assert_eq!(p.time.len(), 2);
        assert_eq!(p.pseudo.len(), 1);
        assert_eq!(p.meta.len(), 1);
        assert_eq!(p.plain.len(), 1);
    }
}
