//! Policy model, its text format, and the well-formedness check.
//!
//! ```text
//! ENTITY auth "tax authority"
//! DATAGROUP personalinfo UNIQUE=Y { name address }
//! POLICY personalinfo {
//!   STORAGE { consent=Y ; where = mainstorage }
//!   DELETION { fromwhere = mainstorage ; delay = 8y }
//!   HAS { }
//! }
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::term::TimeValue;

/// The service provider, always declared.
pub const SERVICE_PROVIDER: &str = "sp";
pub const MAIN_STORAGE: &str = "mainstorage";
pub const BACKUP_STORAGE: &str = "backupstorage";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityDecl {
    pub name: String,
    pub description: String,
}

/// A storage place beyond the two built-in ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceDecl {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataGroupDecl {
    pub name: String,
    pub members: Vec<String>,
    pub unique: bool,
}

/// `act:Type`, e.g. `createat:Account`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Purpose {
    pub action: String,
    pub result_type: String,
}

impl Purpose {
    pub fn new(action: &str, result_type: &str) -> Self {
        Purpose { action: action.into(), result_type: result_type.into() }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.action, self.result_type)
    }
}

/// Collection or usage sub-policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsentPurposes {
    pub consent_required: bool,
    pub purposes: Vec<Purpose>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Storage {
    pub consent_required: bool,
    pub places: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Delay {
    Value(TimeValue),
    /// `tt`: no particular bound.
    NonSpecific,
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Value(v) => write!(f, "{}", v),
            Delay::NonSpecific => f.write_str("tt"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deletion {
    pub places: Vec<String>,
    pub delay: Delay,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub consent_required: bool,
    pub to: Vec<String>,
    pub purposes: Vec<Purpose>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkEntry {
    pub entity: String,
    pub other: String,
    /// In a permit entry: unique linking is allowed too. In a forbid entry:
    /// only unique linking is forbidden.
    pub unique: bool,
}

/// All sub-policies for one data group. Absent sub-policies are `None`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bundle {
    pub data_type: String,
    pub collection: Option<ConsentPurposes>,
    pub usage: Option<ConsentPurposes>,
    pub storage: Option<Storage>,
    pub deletion: Option<Deletion>,
    pub transfer: Option<Transfer>,
    pub has: Option<Vec<String>>,
    pub link_permit: Option<Vec<LinkEntry>>,
    pub link_forbid: Option<Vec<LinkEntry>>,
}

impl Bundle {
    pub fn new(data_type: &str) -> Self {
        Bundle { data_type: data_type.into(), ..Bundle::default() }
    }

    /// Entities listed as allowed to have the data. Everyone else is not.
    pub fn may_have(&self, entity: &str) -> bool {
        self.has.as_ref().is_some_and(|h| h.iter().any(|e| e == entity))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    /// Declared entities, the service provider first.
    pub entities: Vec<EntityDecl>,
    pub places: Vec<PlaceDecl>,
    pub groups: Vec<DataGroupDecl>,
    pub bundles: Vec<Bundle>,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            entities: vec![EntityDecl { name: SERVICE_PROVIDER.into(), description: "service provider".into() }],
            places: Vec::new(),
            groups: Vec::new(),
            bundles: Vec::new(),
        }
    }
}

impl Policy {
    pub fn entity_names(&self) -> Vec<String> {
        self.entities.iter().map(|e| e.name.clone()).collect()
    }

    pub fn is_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|e| e.name == name)
    }

    pub fn is_place(&self, name: &str) -> bool {
        name == MAIN_STORAGE || name == BACKUP_STORAGE || self.is_entity(name) || self.places.iter().any(|p| p.name == name)
    }

    pub fn group(&self, name: &str) -> Option<&DataGroupDecl> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn bundle(&self, data_type: &str) -> Option<&Bundle> {
        self.bundles.iter().find(|b| b.data_type == data_type)
    }

    /// The bundle governing a data type, looked up by group name or member type.
    pub fn bundle_for(&self, data_type: &str) -> Option<&Bundle> {
        self.bundle(data_type).or_else(|| {
            let g = self.groups.iter().find(|g| g.members.iter().any(|m| m == data_type))?;
            self.bundle(&g.name)
        })
    }

    /// Built-in and user-declared storage places.
    pub fn known_places(&self) -> Vec<String> {
        let mut out = vec![String::from(MAIN_STORAGE), String::from(BACKUP_STORAGE)];
        out.extend(self.places.iter().map(|p| p.name.clone()));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyErrorKind {
    Syntax,
    Undeclared,
    Duplicate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyError {
    pub kind: PolicyErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, PolicyError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let at = |tok| Spanned { tok, line: li + 1, column };
            if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == '"' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(PolicyError {
                        kind: PolicyErrorKind::Syntax,
                        line: li + 1,
                        column,
                        message: "unterminated string".into(),
                    });
                }
                out.push(at(Tok::Str(chars[start..j].iter().collect())));
                i = j + 1;
            } else if "{};:,=".contains(c) {
                out.push(at(Tok::Sym(c)));
                i += 1;
            } else if c.is_alphanumeric() || c == '_' || c == '+' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '+') {
                    i += 1;
                }
                out.push(at(Tok::Word(chars[start..i].iter().collect())));
            } else {
                return Err(PolicyError {
                    kind: PolicyErrorKind::Syntax,
                    line: li + 1,
                    column,
                    message: format!("unexpected character `{}`", c),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn err_at(&self, kind: PolicyErrorKind, idx: usize, message: String) -> PolicyError {
        let (line, column) = self.toks.get(idx).map(|t| (t.line, t.column)).unwrap_or((self.end_line, 1));
        PolicyError { kind, line, column, message }
    }

    fn err(&self, message: String) -> PolicyError {
        self.err_at(PolicyErrorKind::Syntax, self.pos, message)
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            Some(Tok::Word(w)) => format!("`{}`", w),
            Some(Tok::Str(s)) => format!("\"{}\"", s),
            Some(Tok::Sym(c)) => format!("`{}`", c),
            None => "end of input".into(),
        }
    }

    fn word(&mut self) -> Result<String, PolicyError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err(format!("expected a name, found {}", self.describe_next()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), PolicyError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected `{}`, found {}", kw, self.describe_next()))),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), PolicyError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`, found {}", c, self.describe_next())))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn yes_no(&mut self) -> Result<bool, PolicyError> {
        let idx = self.pos;
        match self.word()?.as_str() {
            "Y" => Ok(true),
            "N" => Ok(false),
            other => Err(self.err_at(PolicyErrorKind::Syntax, idx, format!("expected Y or N, found `{}`", other))),
        }
    }

    fn at_list_end(&self) -> bool {
        matches!(self.peek(), Some(Tok::Sym(';')) | Some(Tok::Sym('}')))
    }

    /// Comma-separated names, possibly empty. Returns each name with its token index.
    fn name_list(&mut self) -> Result<Vec<(String, usize)>, PolicyError> {
        let mut out = Vec::new();
        if self.at_list_end() {
            return Ok(out);
        }
        loop {
            let idx = self.pos;
            out.push((self.word()?, idx));
            if !self.eat(',') {
                return Ok(out);
            }
        }
    }

    fn purpose_list(&mut self) -> Result<Vec<Purpose>, PolicyError> {
        let mut out = Vec::new();
        if self.at_list_end() {
            return Ok(out);
        }
        loop {
            let action = self.word()?;
            self.sym(':')?;
            let result_type = self.word()?;
            out.push(Purpose { action, result_type });
            if !self.eat(',') {
                return Ok(out);
            }
        }
    }
}

struct Refs {
    entities: Vec<(String, usize)>,
    places: Vec<(String, usize)>,
    groups: Vec<(String, usize)>,
}

/// Parses the policy text format.
pub fn parse_policy(src: &str) -> Result<Policy, PolicyError> {
    let toks = tokenize(src)?;
    let end_line = src.lines().count().max(1);
    let mut p = Parser { toks, pos: 0, end_line };
    let mut policy = Policy::default();
    let mut refs = Refs { entities: Vec::new(), places: Vec::new(), groups: Vec::new() };
    let mut bundle_idx = Vec::new();

    while p.peek().is_some() {
        let idx = p.pos;
        let kw = p.word()?;
        match kw.as_str() {
            "ENTITY" | "PLACE" => {
                let name_idx = p.pos;
                let name = p.word()?;
                let description = match p.peek() {
                    Some(Tok::Str(s)) => {
                        let s = s.clone();
                        p.pos += 1;
                        s
                    }
                    _ => String::new(),
                };
                check_lower(&p, name_idx, &name)?;
                let taken = policy.is_entity(&name)
                    || policy.places.iter().any(|d| d.name == name)
                    || name == MAIN_STORAGE
                    || name == BACKUP_STORAGE;
                if taken {
                    return Err(p.err_at(PolicyErrorKind::Duplicate, name_idx, format!("`{}` is already declared", name)));
                }
                if kw == "ENTITY" {
                    policy.entities.push(EntityDecl { name, description });
                } else {
                    policy.places.push(PlaceDecl { name, description });
                }
            }
            "DATAGROUP" => {
                let name_idx = p.pos;
                let name = p.word()?;
                check_lower(&p, name_idx, &name)?;
                p.keyword("UNIQUE")?;
                p.sym('=')?;
                let unique = p.yes_no()?;
                p.sym('{')?;
                let mut members = Vec::new();
                while !p.eat('}') {
                    members.push(p.word()?);
                }
                if policy.group(&name).is_some() {
                    return Err(p.err_at(PolicyErrorKind::Duplicate, name_idx, format!("data group `{}` declared twice", name)));
                }
                policy.groups.push(DataGroupDecl { name, members, unique });
            }
            "POLICY" => {
                let name_idx = p.pos;
                let name = p.word()?;
                if policy.bundle(&name).is_some() {
                    return Err(p.err_at(PolicyErrorKind::Duplicate, name_idx, format!("a policy for `{}` is already given", name)));
                }
                refs.groups.push((name.clone(), name_idx));
                let bundle = parse_bundle(&mut p, &name, &mut refs)?;
                policy.bundles.push(bundle);
                bundle_idx.push(name_idx);
            }
            other => {
                return Err(p.err_at(
                    PolicyErrorKind::Syntax,
                    idx,
                    format!("expected ENTITY, PLACE, DATAGROUP or POLICY, found `{}`", other),
                ))
            }
        }
    }

    for (e, idx) in &refs.entities {
        if !policy.is_entity(e) {
            return Err(p.err_at(PolicyErrorKind::Undeclared, *idx, format!("undeclared entity `{}`", e)));
        }
    }
    for (pl, idx) in &refs.places {
        if !policy.is_place(pl) {
            return Err(p.err_at(PolicyErrorKind::Undeclared, *idx, format!("undeclared place `{}`", pl)));
        }
    }
    for (g, idx) in &refs.groups {
        if policy.group(g).is_none() {
            return Err(p.err_at(PolicyErrorKind::Undeclared, *idx, format!("undeclared data group `{}`", g)));
        }
    }
    Ok(policy)
}

fn check_lower(p: &Parser, idx: usize, name: &str) -> Result<(), PolicyError> {
    if name.starts_with(|c: char| c.is_lowercase() || c.is_ascii_digit()) {
        Ok(())
    } else {
        Err(p.err_at(PolicyErrorKind::Syntax, idx, format!("`{}` must start with a lowercase letter", name)))
    }
}

fn parse_bundle(p: &mut Parser, name: &str, refs: &mut Refs) -> Result<Bundle, PolicyError> {
    let mut b = Bundle::new(name);
    p.sym('{')?;
    while !p.eat('}') {
        let idx = p.pos;
        let section = p.word()?;
        let dup = |p: &Parser| p.err_at(PolicyErrorKind::Duplicate, idx, format!("section {} given twice", section));
        p.sym('{')?;
        match section.as_str() {
            "COLLECTION" | "USAGE" => {
                let mut consent = false;
                let mut purposes = Vec::new();
                fields(p, |p, key| match key {
                    "consent" => {
                        consent = p.yes_no()?;
                        Ok(true)
                    }
                    "purposes" => {
                        purposes = p.purpose_list()?;
                        Ok(true)
                    }
                    _ => Ok(false),
                })?;
                let sp = ConsentPurposes { consent_required: consent, purposes };
                let slot = if section == "COLLECTION" { &mut b.collection } else { &mut b.usage };
                if slot.replace(sp).is_some() {
                    return Err(dup(p));
                }
            }
            "STORAGE" => {
                let mut consent = false;
                let mut places = Vec::new();
                fields(p, |p, key| match key {
                    "consent" => {
                        consent = p.yes_no()?;
                        Ok(true)
                    }
                    "where" => {
                        places = p.name_list()?;
                        Ok(true)
                    }
                    _ => Ok(false),
                })?;
                refs.places.extend(places.iter().cloned());
                let st = Storage { consent_required: consent, places: places.into_iter().map(|x| x.0).collect() };
                if b.storage.replace(st).is_some() {
                    return Err(dup(p));
                }
            }
            "DELETION" => {
                let mut places = Vec::new();
                let mut delay = None;
                fields(p, |p, key| match key {
                    "fromwhere" => {
                        places = p.name_list()?;
                        Ok(true)
                    }
                    "delay" => {
                        let didx = p.pos;
                        let w = p.word()?;
                        delay = Some(if w == "tt" {
                            Delay::NonSpecific
                        } else {
                            Delay::Value(TimeValue::parse(&w).map_err(|e| p.err_at(PolicyErrorKind::Syntax, didx, e.to_string()))?)
                        });
                        Ok(true)
                    }
                    _ => Ok(false),
                })?;
                let Some(delay) = delay else {
                    return Err(p.err_at(PolicyErrorKind::Syntax, idx, "DELETION needs a delay".into()));
                };
                refs.places.extend(places.iter().cloned());
                let d = Deletion { places: places.into_iter().map(|x| x.0).collect(), delay };
                if b.deletion.replace(d).is_some() {
                    return Err(dup(p));
                }
            }
            "TRANSFER" => {
                let mut consent = false;
                let mut to = Vec::new();
                let mut purposes = Vec::new();
                fields(p, |p, key| match key {
                    "consent" => {
                        consent = p.yes_no()?;
                        Ok(true)
                    }
                    "to" => {
                        to = p.name_list()?;
                        Ok(true)
                    }
                    "purposes" => {
                        purposes = p.purpose_list()?;
                        Ok(true)
                    }
                    _ => Ok(false),
                })?;
                refs.entities.extend(to.iter().cloned());
                let t = Transfer { consent_required: consent, to: to.into_iter().map(|x| x.0).collect(), purposes };
                if b.transfer.replace(t).is_some() {
                    return Err(dup(p));
                }
            }
            "HAS" => {
                let mut list = Vec::new();
                while !p.eat('}') {
                    let eidx = p.pos;
                    let e = p.word()?;
                    refs.entities.push((e.clone(), eidx));
                    list.push(e);
                }
                if b.has.replace(list).is_some() {
                    return Err(dup(p));
                }
                continue;
            }
            "LINKPERMIT" | "LINKFORBID" => {
                let mut entries = Vec::new();
                while !p.eat('}') {
                    if p.eat(';') {
                        continue;
                    }
                    let eidx = p.pos;
                    let entity = p.word()?;
                    p.sym(':')?;
                    let gidx = p.pos;
                    let other = p.word()?;
                    p.keyword("UNIQUE")?;
                    p.sym('=')?;
                    let unique = p.yes_no()?;
                    refs.entities.push((entity.clone(), eidx));
                    refs.groups.push((other.clone(), gidx));
                    entries.push(LinkEntry { entity, other, unique });
                }
                let slot = if section == "LINKPERMIT" { &mut b.link_permit } else { &mut b.link_forbid };
                if slot.replace(entries).is_some() {
                    return Err(dup(p));
                }
                continue;
            }
            other => {
                return Err(p.err_at(PolicyErrorKind::Syntax, idx, format!("unknown section `{}`", other)));
            }
        }
    }
    Ok(b)
}

/// Reads `key = value ; key = value` up to the closing brace.
fn fields(
    p: &mut Parser,
    mut on_field: impl FnMut(&mut Parser, &str) -> Result<bool, PolicyError>,
) -> Result<(), PolicyError> {
    loop {
        if p.eat('}') {
            return Ok(());
        }
        if p.eat(';') {
            continue;
        }
        let idx = p.pos;
        let key = p.word()?;
        p.sym('=')?;
        if !on_field(p, &key)? {
            return Err(p.err_at(PolicyErrorKind::Syntax, idx, format!("unknown field `{}`", key)));
        }
        if !p.eat(';') && p.peek() != Some(&Tok::Sym('}')) {
            return Err(p.err(format!("expected `;` or `}}`, found {}", p.describe_next())));
        }
    }
}

fn yn(b: bool) -> &'static str {
    if b {
        "Y"
    } else {
        "N"
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    let mut out = String::new();
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        out.push_str(&x.to_string());
    }
    out
}

/// Canonical text form; parsing it gives back an equal policy.
pub fn render_policy(p: &Policy) -> String {
    let mut out = String::new();
    for e in p.entities.iter().filter(|e| e.name != SERVICE_PROVIDER) {
        out.push_str(&format!("ENTITY {} \"{}\"\n", e.name, e.description));
    }
    for pl in &p.places {
        out.push_str(&format!("PLACE {} \"{}\"\n", pl.name, pl.description));
    }
    for g in &p.groups {
        out.push_str(&format!("DATAGROUP {} UNIQUE={} {{", g.name, yn(g.unique)));
        for m in &g.members {
            out.push(' ');
            out.push_str(m);
        }
        out.push_str(" }\n");
    }
    for b in &p.bundles {
        out.push_str(&format!("POLICY {} {{\n", b.data_type));
        if let Some(c) = &b.collection {
            out.push_str(&format!("  COLLECTION {{ consent={} ; purposes = {} }}\n", yn(c.consent_required), join(&c.purposes, ", ")));
        }
        if let Some(c) = &b.usage {
            out.push_str(&format!("  USAGE {{ consent={} ; purposes = {} }}\n", yn(c.consent_required), join(&c.purposes, ", ")));
        }
        if let Some(s) = &b.storage {
            out.push_str(&format!("  STORAGE {{ consent={} ; where = {} }}\n", yn(s.consent_required), join(&s.places, ", ")));
        }
        if let Some(d) = &b.deletion {
            out.push_str(&format!("  DELETION {{ fromwhere = {} ; delay = {} }}\n", join(&d.places, ", "), d.delay));
        }
        if let Some(t) = &b.transfer {
            out.push_str(&format!(
                "  TRANSFER {{ consent={} ; to = {} ; purposes = {} }}\n",
                yn(t.consent_required),
                join(&t.to, ", "),
                join(&t.purposes, ", ")
            ));
        }
        if let Some(h) = &b.has {
            out.push_str("  HAS {");
            for e in h {
                out.push(' ');
                out.push_str(e);
            }
            out.push_str(" }\n");
        }
        for (label, entries) in [("LINKPERMIT", &b.link_permit), ("LINKFORBID", &b.link_forbid)] {
            if let Some(list) = entries {
                let items: Vec<String> =
                    list.iter().map(|l| format!("{} : {} UNIQUE={}", l.entity, l.other, yn(l.unique))).collect();
                out.push_str(&format!("  {} {{ {} }}\n", label, join(&items, " ; ")));
            }
        }
        out.push_str("}\n");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    /// Collection implies the service provider has the data.
    CollectionHas,
    /// Storing at a place implies its owner has the data.
    StorageHas,
    /// Transfer to an entity implies it has the data.
    TransferHas,
    /// The same link is both permitted and forbidden.
    LinkPermitForbid,
    /// Deletion from a place where the data is never stored.
    DeletionStorage,
}

impl ConflictKind {
    pub fn label(self) -> &'static str {
        match self {
            ConflictKind::CollectionHas => "collection/has",
            ConflictKind::StorageHas => "storage/has",
            ConflictKind::TransferHas => "transfer/has",
            ConflictKind::LinkPermitForbid => "link-permit/link-forbid",
            ConflictKind::DeletionStorage => "deletion/storage",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub data_type: String,
    pub kind: ConflictKind,
    pub message: String,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.kind.label(), self.data_type, self.message)
    }
}

/// Pairs of sub-policies that contradict each other. Only pairs where both
/// sides are present are compared.
pub fn check_well_formed_policy(p: &Policy) -> Vec<Conflict> {
    let mut out = Vec::new();
    for b in &p.bundles {
        let th = &b.data_type;
        if let (Some(_), Some(_)) = (&b.collection, &b.has) {
            if !b.may_have(SERVICE_PROVIDER) {
                out.push(Conflict {
                    data_type: th.clone(),
                    kind: ConflictKind::CollectionHas,
                    message: format!("sp collects {} but is not allowed to have it", th),
                });
            }
        }
        if let (Some(st), Some(_)) = (&b.storage, &b.has) {
            for place in &st.places {
                let owner = if p.is_entity(place) { place.as_str() } else { SERVICE_PROVIDER };
                if !b.may_have(owner) && !b.may_have(place) {
                    out.push(Conflict {
                        data_type: th.clone(),
                        kind: ConflictKind::StorageHas,
                        message: format!("{} is stored at {} but {} is not allowed to have it", th, place, owner),
                    });
                }
            }
        }
        if let (Some(tr), Some(_)) = (&b.transfer, &b.has) {
            for e in &tr.to {
                if !b.may_have(e) {
                    out.push(Conflict {
                        data_type: th.clone(),
                        kind: ConflictKind::TransferHas,
                        message: format!("{} is forwarded to {} but {} is not allowed to have it", th, e, e),
                    });
                }
            }
        }
        if let (Some(del), Some(st)) = (&b.deletion, &b.storage) {
            for place in &del.places {
                if !st.places.contains(place) {
                    out.push(Conflict {
                        data_type: th.clone(),
                        kind: ConflictKind::DeletionStorage,
                        message: format!("{} must be deleted from {} where it is never stored", th, place),
                    });
                }
            }
        }
    }
    // Link permits against forbids, within a bundle and across the two
    // bundles of a type pair.
    for b in &p.bundles {
        let Some(permits) = &b.link_permit else { continue };
        for pe in permits {
            let mut forbids: Vec<&LinkEntry> = Vec::new();
            if let Some(f) = &b.link_forbid {
                forbids.extend(f.iter().filter(|fe| fe.entity == pe.entity && fe.other == pe.other));
            }
            if pe.other != b.data_type {
                if let Some(f) = p.bundle(&pe.other).and_then(|o| o.link_forbid.as_ref()) {
                    forbids.extend(f.iter().filter(|fe| fe.entity == pe.entity && fe.other == b.data_type));
                }
            }
            for fe in forbids {
                if !fe.unique || pe.unique {
                    let what = if fe.unique { "uniquely link" } else { "link" };
                    out.push(Conflict {
                        data_type: b.data_type.clone(),
                        kind: ConflictKind::LinkPermitForbid,
                        message: format!(
                            "{} is both permitted and forbidden to {} {} with {}",
                            pe.entity, what, b.data_type, pe.other
                        ),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
# personal data
ENTITY auth "tax authority"
DATAGROUP personalinfo UNIQUE=Y { name address dateofbirth phonenumber }
DATAGROUP energy UNIQUE=N { consumption }
POLICY personalinfo {
  COLLECTION { consent=Y ; purposes = createat:Account, calculateat:Bill }
  STORAGE { consent=Y ; where = mainstorage }
  DELETION { fromwhere = mainstorage ; delay = 8y }
  TRANSFER { consent=N ; to = auth ; purposes = }
  HAS { sp auth }
  LINKPERMIT { sp : energy UNIQUE=N ; auth : energy UNIQUE=Y }
}
POLICY energy { }
"#;

    #[test]
    fn parses_groups_and_bundles() {
        let p = parse_policy(EXAMPLE).unwrap();
        let g = p.group("personalinfo").unwrap();
        assert_eq!(g.members.len(), 4);
        assert!(g.unique);
        let b = p.bundle("personalinfo").unwrap();
        assert_eq!(b.deletion.as_ref().unwrap().delay, Delay::Value(TimeValue::parse("8y").unwrap()));
        assert_eq!(b.collection.as_ref().unwrap().purposes[1], Purpose::new("calculateat", "Bill"));
        assert!(b.usage.is_none());
        let e = p.bundle("energy").unwrap();
        assert_eq!(e, &Bundle::new("energy"));
        assert_eq!(p.bundle_for("address").unwrap().data_type, "personalinfo");
    }

    #[test]
    fn render_round_trips() {
        let p = parse_policy(EXAMPLE).unwrap();
        assert_eq!(parse_policy(&render_policy(&p)).unwrap(), p);
    }

    #[test]
    fn reports_errors_with_positions() {
        let e = parse_policy("DATAGROUP x UNIQUE=Y { a }\nPOLICY x { HAS { bob } }").unwrap_err();
        assert_eq!(e.kind, PolicyErrorKind::Undeclared);
        assert_eq!((e.line, e.column), (2, 18));
        let e = parse_policy("DATAGROUP x UNIQUE=Y { a }\nPOLICY x { }\nPOLICY x { }").unwrap_err();
        assert_eq!(e.kind, PolicyErrorKind::Duplicate);
        let e = parse_policy("DATAGROUP x UNIQUE=Maybe { }").unwrap_err();
        assert_eq!(e.kind, PolicyErrorKind::Syntax);
        assert!(parse_policy("POLICY nothing { }").is_err());
        assert!(parse_policy("DATAGROUP x UNIQUE=N { }\nPOLICY x { STORAGE { where = attic } }").is_err());
        assert!(parse_policy("DATAGROUP x UNIQUE=N { }\nPOLICY x { DELETION { fromwhere = mainstorage } }").is_err());
    }

    #[test]
    fn well_formedness() {
        assert!(check_well_formed_policy(&parse_policy("").unwrap()).is_empty());
        let p = parse_policy(
            "DATAGROUP personalinfo UNIQUE=Y { }\nPOLICY personalinfo { STORAGE { consent=Y ; where = mainstorage } HAS { } }",
        )
        .unwrap();
        let c = check_well_formed_policy(&p);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, ConflictKind::StorageHas);
        let p = parse_policy(
            "DATAGROUP a UNIQUE=N { }\nDATAGROUP energy UNIQUE=N { }\nPOLICY a { LINKPERMIT { sp : energy UNIQUE=N } LINKFORBID { sp : energy UNIQUE=N } }",
        )
        .unwrap();
        assert_eq!(check_well_formed_policy(&p)[0].kind, ConflictKind::LinkPermitForbid);
        let p = parse_policy(
            "DATAGROUP a UNIQUE=N { }\nDATAGROUP energy UNIQUE=N { }\nPOLICY a { LINKPERMIT { sp : energy UNIQUE=N } LINKFORBID { sp : energy UNIQUE=Y } }",
        )
        .unwrap();
        assert!(check_well_formed_policy(&p).is_empty());
    }
}
