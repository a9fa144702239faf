//! Symbolic terms, substitutions and unification.
//!
//! Besides ordinary first-order terms this module knows four pattern forms used
//! by the rule catalog: `AnyCompound` (a record of any constructor holding the
//! listed slots among its arguments), `Contains` (a term found somewhere inside
//! another), `Cooccur` (two terms found side by side in one record) and
//! `CtorApp` (a constructor variable applied to a fixed argument list).
//! Patterns only ever match concrete structure.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Data,
    Entity,
    Time,
    Delay,
    Key,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CryptoKind {
    Senc,
    Aenc,
    Mac,
    Hash,
    Sk,
}

impl CryptoKind {
    pub fn name(self) -> &'static str {
        match self {
            CryptoKind::Senc => "Senc",
            CryptoKind::Aenc => "Aenc",
            CryptoKind::Mac => "Mac",
            CryptoKind::Hash => "Hash",
            CryptoKind::Sk => "Sk",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            CryptoKind::Senc | CryptoKind::Aenc | CryptoKind::Mac => 2,
            CryptoKind::Hash | CryptoKind::Sk => 1,
        }
    }

    /// Whether the constructor adds a layer to the crypto depth. `Sk` only
    /// names a private key and does not.
    pub fn is_layer(self) -> bool {
        !matches!(self, CryptoKind::Sk)
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "Senc" => CryptoKind::Senc,
            "Aenc" => CryptoKind::Aenc,
            "Mac" => CryptoKind::Mac,
            "Hash" => CryptoKind::Hash,
            "Sk" => CryptoKind::Sk,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecialKind {
    Time,
    P,
    Meta,
    Cconsent,
    Uconsent,
    Sconsent,
    Fwconsent,
}

impl SpecialKind {
    pub fn name(self) -> &'static str {
        match self {
            SpecialKind::Time => "Time",
            SpecialKind::P => "P",
            SpecialKind::Meta => "Meta",
            SpecialKind::Cconsent => "Cconsent",
            SpecialKind::Uconsent => "Uconsent",
            SpecialKind::Sconsent => "Sconsent",
            SpecialKind::Fwconsent => "Fwconsent",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            SpecialKind::Fwconsent => 2,
            _ => 1,
        }
    }

    pub fn is_consent(self) -> bool {
        matches!(
            self,
            SpecialKind::Cconsent | SpecialKind::Uconsent | SpecialKind::Sconsent | SpecialKind::Fwconsent
        )
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "Time" => SpecialKind::Time,
            "P" => SpecialKind::P,
            "Meta" => SpecialKind::Meta,
            "Cconsent" => SpecialKind::Cconsent,
            "Uconsent" => SpecialKind::Uconsent,
            "Sconsent" => SpecialKind::Sconsent,
            "Fwconsent" => SpecialKind::Fwconsent,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Y,
    Mo,
    W,
    D,
    H,
    M,
}

impl Unit {
    pub fn minutes(self) -> u64 {
        match self {
            Unit::Y => 525_600,
            Unit::Mo => 43_200,
            Unit::W => 10_080,
            Unit::D => 1_440,
            Unit::H => 60,
            Unit::M => 1,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Y => "y",
            Unit::Mo => "mo",
            Unit::W => "w",
            Unit::D => "d",
            Unit::H => "h",
            Unit::M => "m",
        }
    }

    pub const ALL: [Unit; 6] = [Unit::Y, Unit::Mo, Unit::W, Unit::D, Unit::H, Unit::M];
}

/// A concrete duration such as `10y` or `1y+6mo`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeValue {
    parts: Vec<(u64, Unit)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeValueError(pub String);

impl fmt::Display for TimeValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid time value `{}`", self.0)
    }
}

impl TimeValue {
    pub fn new(parts: Vec<(u64, Unit)>) -> Result<Self, TimeValueError> {
        if parts.is_empty() || parts.iter().any(|(n, _)| *n == 0) {
            return Err(TimeValueError(format_parts(&parts)));
        }
        Ok(TimeValue { parts })
    }

    pub fn single(count: u64, unit: Unit) -> Self {
        TimeValue { parts: vec![(count.max(1), unit)] }
    }

    pub fn parts(&self) -> &[(u64, Unit)] {
        &self.parts
    }

    /// Total length in minutes, with 365-day years and 30-day months.
    pub fn minutes(&self) -> u64 {
        self.parts
            .iter()
            .fold(0u64, |acc, (n, u)| acc.saturating_add(n.saturating_mul(u.minutes())))
    }

    /// Parses `8y`, `1y+6mo`, or a bare unit such as `y` (one of that unit).
    pub fn parse(s: &str) -> Result<Self, TimeValueError> {
        let err = || TimeValueError(s.to_string());
        let mut parts = Vec::new();
        for piece in s.split('+') {
            let digits_end = piece.find(|c: char| !c.is_ascii_digit()).ok_or_else(err)?;
            let (num, unit) = piece.split_at(digits_end);
            let count = if num.is_empty() { 1 } else { num.parse::<u64>().map_err(|_| err())? };
            let unit = match unit {
                "y" => Unit::Y,
                "mo" => Unit::Mo,
                "w" => Unit::W,
                "d" => Unit::D,
                "h" => Unit::H,
                "m" => Unit::M,
                _ => return Err(err()),
            };
            if count == 0 {
                return Err(err());
            }
            parts.push((count, unit));
        }
        TimeValue::new(parts).map_err(|_| err())
    }
}

fn format_parts(parts: &[(u64, Unit)]) -> String {
    let mut out = String::new();
    for (i, (n, u)) in parts.iter().enumerate() {
        if i > 0 {
            out.push('+');
        }
        out.push_str(&n.to_string());
        out.push_str(u.suffix());
    }
    out
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_parts(&self.parts))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarKind, String),
    SimpleType(String),
    EntityConst(String),
    Ds,
    Compound(String, Vec<Term>),
    Crypto(CryptoKind, Vec<Term>),
    Special(SpecialKind, Vec<Term>),
    TimeValue(TimeValue),
    NonSpecificTime,
    /// Any user constructor with the listed slots among its arguments.
    AnyCompound(Vec<Term>),
    /// A term that holds `slot` at some position. `strict` excludes the root;
    /// `include_crypto` lets the search enter crypto constructors.
    Contains {
        slot: Box<Term>,
        include_crypto: bool,
        strict: bool,
    },
    /// Two terms sitting at distinct, non-nested positions of one record.
    Cooccur(Box<Term>, Box<Term>),
    /// Constructor variable applied to arguments, exact arity.
    CtorApp(Box<Term>, Vec<Term>),
}

impl Term {
    pub fn data_var(name: &str) -> Term {
        Term::Var(VarKind::Data, name.into())
    }
    pub fn entity_var(name: &str) -> Term {
        Term::Var(VarKind::Entity, name.into())
    }
    pub fn time_var(name: &str) -> Term {
        Term::Var(VarKind::Time, name.into())
    }
    pub fn delay_var(name: &str) -> Term {
        Term::Var(VarKind::Delay, name.into())
    }
    pub fn key_var(name: &str) -> Term {
        Term::Var(VarKind::Key, name.into())
    }
    pub fn simple(name: &str) -> Term {
        Term::SimpleType(name.into())
    }
    pub fn entity(name: &str) -> Term {
        Term::EntityConst(name.into())
    }
    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::Compound(name.into(), args)
    }
    pub fn senc(body: Term, key: Term) -> Term {
        Term::Crypto(CryptoKind::Senc, vec![body, key])
    }
    pub fn time(t: Term) -> Term {
        Term::Special(SpecialKind::Time, vec![t])
    }
    pub fn special(kind: SpecialKind, args: Vec<Term>) -> Term {
        Term::Special(kind, args)
    }
    pub fn contains(slot: Term, include_crypto: bool) -> Term {
        Term::Contains { slot: Box::new(slot), include_crypto, strict: false }
    }
    pub fn within(slot: Term) -> Term {
        Term::Contains { slot: Box::new(slot), include_crypto: false, strict: true }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(..))
    }

    pub fn is_pattern(&self) -> bool {
        matches!(
            self,
            Term::AnyCompound(_) | Term::Contains { .. } | Term::Cooccur(..) | Term::CtorApp(..)
        )
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(..) => false,
            _ => self.children().iter().all(|c| c.is_ground()),
        }
    }

    /// Direct subterms, in order. For patterns these are the slots.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Compound(_, a) | Term::Crypto(_, a) | Term::Special(_, a) | Term::AnyCompound(a) => {
                a.iter().collect()
            }
            Term::Contains { slot, .. } => vec![&**slot],
            Term::Cooccur(a, b) => vec![&**a, &**b],
            Term::CtorApp(f, a) => {
                let mut v = vec![&**f];
                v.extend(a.iter());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Whether the term (or anything inside it) uses the given special constructor.
    pub fn mentions_special(&self, kind: SpecialKind) -> bool {
        if let Term::Special(k, _) = self {
            if *k == kind {
                return true;
            }
        }
        self.children().iter().any(|c| c.mentions_special(kind))
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<(VarKind, String)> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<(VarKind, String)>) {
        if let Term::Var(k, n) = self {
            if !out.iter().any(|(_, m)| m == n) {
                out.push((*k, n.clone()));
            }
            return;
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn occurs(&self, name: &str) -> bool {
        match self {
            Term::Var(_, n) => n == name,
            _ => self.children().iter().any(|c| c.occurs(name)),
        }
    }

    /// Renames every variable through `f`, keeping its kind.
    pub fn rename_vars(&self, f: &mut dyn FnMut(&str) -> String) -> Term {
        self.map_vars(&mut |k, n| Term::Var(k, f(n)))
    }

    fn map_vars(&self, f: &mut dyn FnMut(VarKind, &str) -> Term) -> Term {
        match self {
            Term::Var(k, n) => f(*k, n),
            Term::Compound(c, a) => Term::Compound(c.clone(), a.iter().map(|t| t.map_vars(f)).collect()),
            Term::Crypto(c, a) => Term::Crypto(*c, a.iter().map(|t| t.map_vars(f)).collect()),
            Term::Special(c, a) => Term::Special(*c, a.iter().map(|t| t.map_vars(f)).collect()),
            Term::AnyCompound(a) => Term::AnyCompound(a.iter().map(|t| t.map_vars(f)).collect()),
            Term::Contains { slot, include_crypto, strict } => Term::Contains {
                slot: Box::new(slot.map_vars(f)),
                include_crypto: *include_crypto,
                strict: *strict,
            },
            Term::Cooccur(a, b) => Term::Cooccur(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Term::CtorApp(g, a) => {
                let g = g.map_vars(f);
                let a: Vec<Term> = a.iter().map(|t| t.map_vars(f)).collect();
                ctor_app(g, a)
            }
            other => other.clone(),
        }
    }

    fn is_entity_term(&self) -> bool {
        matches!(self, Term::EntityConst(_) | Term::Var(VarKind::Entity, _))
    }

    fn is_time_term(&self) -> bool {
        matches!(
            self,
            Term::NonSpecificTime
                | Term::TimeValue(_)
                | Term::Var(VarKind::Time, _)
                | Term::Var(VarKind::Delay, _)
                | Term::Special(SpecialKind::Time, _)
        )
    }
}

/// Rebuilds a constructor application once its functor is known.
fn ctor_app(f: Term, args: Vec<Term>) -> Term {
    match f {
        Term::Compound(name, ref inner) if inner.is_empty() => Term::Compound(name, args),
        other => Term::CtorApp(Box::new(other), args),
    }
}

/// Whether a variable of `kind` may be bound to `t`.
pub fn kind_accepts(kind: VarKind, t: &Term) -> bool {
    match kind {
        VarKind::Entity => t.is_entity_term(),
        VarKind::Time => matches!(
            t,
            Term::NonSpecificTime | Term::TimeValue(_) | Term::Var(VarKind::Time, _) | Term::Var(VarKind::Delay, _)
        ),
        VarKind::Delay => matches!(t, Term::TimeValue(_) | Term::Var(VarKind::Delay, _)),
        VarKind::Key => matches!(t, Term::SimpleType(_) | Term::Var(VarKind::Key, _)),
        VarKind::Data => {
            if t.is_entity_term() || t.is_time_term() {
                return false;
            }
            match t {
                Term::Ds | Term::CtorApp(..) => false,
                Term::Special(SpecialKind::P, a) => !matches!(a.as_slice(), [Term::Ds]),
                _ => true,
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subst {
    map: BTreeMap<String, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, Term)>>(pairs: I) -> Self {
        let mut s = Subst::new();
        for (k, v) in pairs {
            s.map.insert(k, v);
        }
        s.normalize();
        s
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.map.get(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.map.iter()
    }

    pub fn remove(&mut self, name: &str) -> Option<Term> {
        self.map.remove(name)
    }

    fn bind(&mut self, name: &str, t: Term) {
        self.map.insert(name.into(), t);
    }

    /// Adds a binding without normalizing.
    pub fn insert(&mut self, name: &str, t: Term) {
        self.map.insert(name.into(), t);
    }

    /// Replaces each bound variable by its binding once, without following
    /// chains. Suitable for simultaneous renamings.
    pub fn apply_once(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |k, n| match self.map.get(n) {
            Some(v) => v.clone(),
            None => Term::Var(k, n.into()),
        })
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(_, n) = t {
            match self.map.get(n) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs_resolved(&self, name: &str, t: &Term) -> bool {
        let t = self.walk(t);
        match t {
            Term::Var(_, n) => n == name,
            _ => t.children().iter().any(|c| self.occurs_resolved(name, c)),
        }
    }

    /// Replaces bound variables, following chains of bindings.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |k, n| match self.map.get(n) {
            Some(v) => self.apply(v),
            None => Term::Var(k, n.into()),
        })
    }

    /// Makes every binding fully applied so that applying twice equals once.
    pub fn normalize(&mut self) {
        let keys: Vec<String> = self.map.keys().cloned().collect();
        let snapshot = self.clone();
        for k in keys {
            let v = snapshot.apply(&snapshot.map[&k]);
            self.map.insert(k, v);
        }
    }

    /// Adds the bindings of `other`, which must not rebind names bound here.
    pub fn extend(&mut self, other: &Subst) {
        for (k, v) in other.iter() {
            self.map.insert(k.clone(), v.clone());
        }
        self.normalize();
    }

    /// Keeps only the bindings for the given names.
    pub fn restrict(&self, names: &[String]) -> Subst {
        let mut s = Subst::new();
        for n in names {
            if let Some(v) = self.map.get(n) {
                s.map.insert(n.clone(), v.clone());
            }
        }
        s
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} -> {}", k, v)?;
        }
        f.write_str("}")
    }
}

/// Every unifier of `a` and `b`. Ordinary terms have at most one; patterns can
/// match several positions and yield one unifier per match. Results are
/// normalized and deduplicated.
pub fn unify_all(a: &Term, b: &Term) -> Vec<Subst> {
    unify_all_under(a, b, &Subst::new())
}

/// Like [`unify_all`], extending an existing substitution.
pub fn unify_all_under(a: &Term, b: &Term, s: &Subst) -> Vec<Subst> {
    let mut out = Vec::new();
    unify_into(a, b, s.clone(), &mut out);
    finish(out)
}

/// Unifies two argument lists pointwise.
pub fn unify_lists(a: &[Term], b: &[Term], s: &Subst) -> Vec<Subst> {
    if a.len() != b.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    unify_seq(a, b, s.clone(), &mut out);
    finish(out)
}

fn finish(mut out: Vec<Subst>) -> Vec<Subst> {
    for s in out.iter_mut() {
        s.normalize();
    }
    let mut seen: Vec<Subst> = Vec::with_capacity(out.len());
    for s in out {
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

/// The most general unifier, when one exists. For pattern terms this is the
/// first unifier in match order.
pub fn unify(a: &Term, b: &Term) -> Option<Subst> {
    unify_all(a, b).into_iter().next()
}

fn unify_seq(a: &[Term], b: &[Term], s: Subst, out: &mut Vec<Subst>) {
    match (a.split_first(), b.split_first()) {
        (None, None) => out.push(s),
        (Some((x, xs)), Some((y, ys))) => {
            let mut firsts = Vec::new();
            unify_into(x, y, s, &mut firsts);
            for s1 in firsts {
                unify_seq(xs, ys, s1, out);
            }
        }
        _ => {}
    }
}

fn unify_into(a: &Term, b: &Term, s: Subst, out: &mut Vec<Subst>) {
    let a = s.walk(a).clone();
    let b = s.walk(b).clone();
    if a == b {
        out.push(s);
        return;
    }
    match (&a, &b) {
        (Term::Var(ka, na), Term::Var(kb, nb)) => {
            if kind_accepts(*ka, &b) {
                let mut s = s;
                s.bind(na, b.clone());
                out.push(s);
            } else if kind_accepts(*kb, &a) {
                let mut s = s;
                s.bind(nb, a.clone());
                out.push(s);
            }
        }
        (Term::Var(k, n), t) | (t, Term::Var(k, n)) => {
            if kind_accepts(*k, t) && !s.occurs_resolved(n, t) {
                let mut s = s;
                s.bind(n, t.clone());
                out.push(s);
            }
        }
        (p, q) if p.is_pattern() && q.is_pattern() => {}
        (p, t) | (t, p) if p.is_pattern() => match_pattern(p, t, s, out),
        (Term::Compound(n1, a1), Term::Compound(n2, a2)) => {
            if n1 == n2 && a1.len() == a2.len() {
                unify_seq(a1, a2, s, out);
            }
        }
        (Term::Crypto(k1, a1), Term::Crypto(k2, a2)) if k1 == k2 && a1.len() == a2.len() => unify_seq(a1, a2, s, out),
        (Term::Special(k1, a1), Term::Special(k2, a2)) if k1 == k2 && a1.len() == a2.len() => unify_seq(a1, a2, s, out),
        _ => {}
    }
}

fn match_pattern(p: &Term, t: &Term, s: Subst, out: &mut Vec<Subst>) {
    match p {
        Term::AnyCompound(slots) => {
            if let Term::Compound(_, args) = t {
                if args.len() >= slots.len() {
                    let mut used = vec![false; args.len()];
                    match_slots(slots, args, &mut used, s, out);
                }
            }
        }
        Term::Contains { slot, include_crypto, strict } => {
            for sub in positions(t, *include_crypto, *strict) {
                unify_into(slot, sub, s.clone(), out);
            }
        }
        Term::Cooccur(x, y) => {
            let paths = record_paths(t);
            for (i, (pi, ti)) in paths.iter().enumerate() {
                for (j, (pj, tj)) in paths.iter().enumerate() {
                    if i == j || is_prefix(pi, pj) || is_prefix(pj, pi) {
                        continue;
                    }
                    let mut firsts = Vec::new();
                    unify_into(x, ti, s.clone(), &mut firsts);
                    for s1 in firsts {
                        unify_into(y, tj, s1, out);
                    }
                }
            }
        }
        Term::CtorApp(f, args) => {
            if let Term::Compound(name, cargs) = t {
                if cargs.len() == args.len() {
                    let mut heads = Vec::new();
                    unify_into(f, &Term::Compound(name.clone(), Vec::new()), s, &mut heads);
                    for s1 in heads {
                        unify_seq(args, cargs, s1, out);
                    }
                }
            }
        }
        _ => {}
    }
}

fn match_slots(slots: &[Term], args: &[Term], used: &mut [bool], s: Subst, out: &mut Vec<Subst>) {
    let Some((first, rest)) = slots.split_first() else {
        out.push(s);
        return;
    };
    for j in 0..args.len() {
        if used[j] {
            continue;
        }
        let mut here = Vec::new();
        unify_into(first, &args[j], s.clone(), &mut here);
        if here.is_empty() {
            continue;
        }
        used[j] = true;
        for s1 in here {
            match_slots(rest, args, used, s1, out);
        }
        used[j] = false;
    }
}

fn is_prefix(a: &[usize], b: &[usize]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

/// Subterm positions in preorder. The root is included unless `strict`.
/// Descent goes through user compounds, and through crypto constructors only
/// when `include_crypto` is set; special constructors are opaque.
pub fn positions(t: &Term, include_crypto: bool, strict: bool) -> Vec<&Term> {
    let mut out = Vec::new();
    if !strict {
        out.push(t);
    }
    push_descendants(t, include_crypto, &mut out);
    out
}

fn push_descendants<'a>(t: &'a Term, include_crypto: bool, out: &mut Vec<&'a Term>) {
    let args = match t {
        Term::Compound(_, a) => a,
        Term::Crypto(_, a) if include_crypto => a,
        _ => return,
    };
    for a in args {
        out.push(a);
        push_descendants(a, include_crypto, out);
    }
}

/// Strict positions of a record reached through user compounds only, with
/// their paths from the root.
pub fn record_paths(t: &Term) -> Vec<(Vec<usize>, &Term)> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk_record(t, &mut path, &mut out);
    out
}

fn walk_record<'a>(t: &'a Term, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Term)>) {
    if let Term::Compound(_, args) = t {
        for (i, a) in args.iter().enumerate() {
            path.push(i);
            out.push((path.clone(), a));
            walk_record(a, path, out);
            path.pop();
        }
    }
}

/// One unifier per position of `candidate` holding a term that unifies with `slot`.
pub fn match_contains(slot: &Term, candidate: &Term, include_crypto: bool) -> Vec<Subst> {
    unify_all(&Term::contains(slot.clone(), include_crypto), candidate)
}

/// Largest number of nested encryption, MAC or hash layers on any path.
pub fn crypto_depth(t: &Term) -> usize {
    let own = match t {
        Term::Crypto(k, _) if k.is_layer() => 1,
        _ => 0,
    };
    own + t.children().iter().map(|c| crypto_depth(c)).max().unwrap_or(0)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(_, n) | Term::SimpleType(n) | Term::EntityConst(n) => f.write_str(n),
            Term::Ds => f.write_str("ds"),
            Term::Compound(n, a) => write_app(f, n, a),
            Term::Crypto(k, a) => write_app(f, k.name(), a),
            Term::Special(k, a) => write_app(f, k.name(), a),
            Term::TimeValue(v) => write!(f, "{}", v),
            Term::NonSpecificTime => f.write_str("t"),
            Term::AnyCompound(a) => {
                write_list(f, "Anytype(", a, "")?;
                f.write_str(if a.is_empty() { "..)" } else { ",..)" })
            }
            Term::Contains { slot, include_crypto, strict } => {
                let head = match (strict, include_crypto) {
                    (true, _) => "Within",
                    (false, true) => "Anytypeinccrypto",
                    (false, false) => "Anytype",
                };
                write!(f, "{}[{}]", head, slot)
            }
            Term::Cooccur(a, b) => write!(f, "Cooccur[{},{}]", a, b),
            Term::CtorApp(g, a) => {
                write!(f, "?{}", g)?;
                write_list(f, "(", a, ")")
            }
        }
    }
}

fn write_app(f: &mut fmt::Formatter<'_>, name: &str, args: &[Term]) -> fmt::Result {
    f.write_str(name)?;
    write_list(f, "(", args, ")")
}

fn write_list(f: &mut fmt::Formatter<'_>, open: &str, args: &[Term], close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{}", a)?;
    }
    f.write_str(close)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermParseError {
    pub column: usize,
    pub message: String,
}

impl fmt::Display for TermParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

/// Parses a data term in the architecture notation, e.g.
/// `Senc(Account(name,Meta(ip)),key)`. Lowercase leaves are simple types,
/// `ds` is the data-subject identity, and inside `Time(..)` the token `t`
/// (or `TT`) is the non-specific time while anything else must be a duration.
/// Whitespace is rejected.
pub fn parse_term(src: &str) -> Result<Term, TermParseError> {
    let mut p = TermParser { src: src.as_bytes(), pos: 0 };
    let t = p.term()?;
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(t)
}

pub(crate) struct TermParser<'a> {
    pub(crate) src: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> TermParser<'a> {
    pub(crate) fn error(&self, msg: &str) -> TermParseError {
        TermParseError { column: self.pos + 1, message: msg.into() }
    }

    fn ident(&mut self) -> Result<&'a str, TermParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => "whitespace is not allowed inside a term",
                Some(_) => "expected an identifier",
                None => "unexpected end of input",
            }));
        }
        Ok(core::str::from_utf8(&self.src[start..self.pos]).unwrap_or(""))
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn args(&mut self) -> Result<Vec<Term>, TermParseError> {
        let mut args = Vec::new();
        if self.eat(b')') {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(b',') {
                continue;
            }
            if self.eat(b')') {
                return Ok(args);
            }
            return Err(self.error("expected `,` or `)`"));
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term, TermParseError> {
        let start = self.pos;
        let name = self.ident()?;
        if !self.eat(b'(') {
            return leaf(name).map_err(|m| TermParseError { column: start + 1, message: m });
        }
        if name == "Time" {
            let inner_start = self.pos;
            let inner = self.ident_with_plus()?;
            if !self.eat(b')') {
                return Err(self.error("malformed Time(..)"));
            }
            let t = match inner {
                "t" | "TT" => Term::NonSpecificTime,
                other => Term::TimeValue(TimeValue::parse(other).map_err(|e| TermParseError {
                    column: inner_start + 1,
                    message: alloc::format!("malformed Time(..): {}", e),
                })?),
            };
            return Ok(Term::time(t));
        }
        let args_col = self.pos;
        let args = self.args()?;
        let bad_arity = |expected: usize| TermParseError {
            column: args_col,
            message: alloc::format!("{} takes {} argument(s)", name, expected),
        };
        let t = if let Some(k) = CryptoKind::from_name(name) {
            if args.len() != k.arity() {
                return Err(bad_arity(k.arity()));
            }
            Term::Crypto(k, args)
        } else if let Some(k) = SpecialKind::from_name(name) {
            if args.len() != k.arity() {
                return Err(bad_arity(k.arity()));
            }
            let args = if k == SpecialKind::Fwconsent {
                let mut a = args;
                a[1] = as_entity(&a[1]).ok_or_else(|| TermParseError {
                    column: args_col,
                    message: "Fwconsent needs a recipient entity as its second argument".into(),
                })?;
                a
            } else {
                args
            };
            Term::Special(k, args)
        } else if name.starts_with(|c: char| c.is_ascii_uppercase()) {
            if args.is_empty() {
                return Err(TermParseError { column: start + 1, message: "a constructor needs arguments".into() });
            }
            Term::Compound(name.into(), args)
        } else {
            return Err(TermParseError {
                column: start + 1,
                message: alloc::format!("constructor `{}` must start with an uppercase letter", name),
            });
        };
        check_meta_last(&t).map_err(|m| TermParseError { column: start + 1, message: m })?;
        Ok(t)
    }

    fn ident_with_plus(&mut self) -> Result<&'a str, TermParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'+' || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("malformed Time(..)"));
        }
        Ok(core::str::from_utf8(&self.src[start..self.pos]).unwrap_or(""))
    }
}

fn leaf(name: &str) -> Result<Term, String> {
    if name == "ds" {
        return Ok(Term::Ds);
    }
    if name.starts_with(|c: char| c.is_ascii_lowercase() || c.is_ascii_digit()) {
        return Ok(Term::SimpleType(name.into()));
    }
    Err(alloc::format!("`{}` is not a data type (types are lowercase)", name))
}

/// Reads a leaf as an entity constant.
pub fn as_entity(t: &Term) -> Option<Term> {
    match t {
        Term::SimpleType(n) | Term::EntityConst(n) => Some(Term::EntityConst(n.clone())),
        _ => None,
    }
}

fn check_meta_last(t: &Term) -> Result<(), String> {
    if let Term::Compound(_, args) | Term::Crypto(_, args) = t {
        if let Some(i) = args.iter().position(|a| matches!(a, Term::Special(SpecialKind::Meta, _))) {
            if i + 1 != args.len() {
                return Err("Meta(..) must be the last argument".into());
            }
        }
    }
    Ok(())
}

/// Depth of user-compound nesting (a simple type is 0, `A(x)` is 1).
pub fn compound_nesting(t: &Term) -> usize {
    let own = usize::from(matches!(t, Term::Compound(..)));
    own + t.children().iter().map(|c| compound_nesting(c)).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn unify_binds_variables() {
        let s = unify(
            &Term::compound("H", vec![Term::entity_var("EV"), Term::data_var("V")]),
            &Term::compound("H", vec![Term::entity("sp"), Term::simple("name")]),
        )
        .unwrap();
        assert_eq!(s.get("EV"), Some(&Term::entity("sp")));
        assert_eq!(s.get("V"), Some(&Term::simple("name")));
    }

    #[test]
    fn ds_never_unifies_with_its_pseudonym() {
        assert!(unify(&Term::Ds, &p("P(ds)")).is_none());
        assert!(unify(&Term::data_var("V"), &Term::Ds).is_none());
        assert!(unify(&Term::data_var("V"), &p("P(ds)")).is_none());
        assert!(unify(&Term::data_var("V"), &p("P(name)")).is_some());
    }

    #[test]
    fn kinds_are_enforced() {
        assert!(unify(&Term::entity_var("E"), &Term::simple("name")).is_none());
        assert!(unify(&Term::delay_var("D"), &Term::NonSpecificTime).is_none());
        assert!(unify(&Term::time_var("T"), &Term::NonSpecificTime).is_some());
        assert!(unify(&Term::key_var("K"), &p("A(x)")).is_none());
        let s = unify(&Term::key_var("K"), &Term::data_var("V")).unwrap();
        assert_eq!(s.get("V"), Some(&Term::key_var("K")));
    }

    #[test]
    fn occurs_check() {
        let v = Term::data_var("V");
        assert!(unify(&v, &Term::compound("A", vec![v.clone()])).is_none());
    }

    #[test]
    fn contains_matches_positions() {
        let rec = p("Sicknessrec(name,disease)");
        assert_eq!(match_contains(&Term::data_var("V"), &rec, false).len(), 3);
        let enc = p("Senc(name,key)");
        let plain = match_contains(&Term::data_var("V"), &enc, false);
        assert_eq!(plain.len(), 1);
        assert_eq!(plain[0].get("V"), Some(&enc));
        assert_eq!(match_contains(&Term::data_var("V"), &enc, true).len(), 3);
    }

    #[test]
    fn any_compound_is_order_and_arity_insensitive() {
        let pat = Term::AnyCompound(vec![Term::simple("photo"), p("Meta(ip)")]);
        assert!(unify(&pat, &p("Socprofile(photo,address,Meta(ip))")).is_some());
        assert!(unify(&pat, &p("Socprofile(address,photo)")).is_none());
        assert!(unify(&pat, &p("Senc(photo,Meta(ip))")).is_none());
    }

    #[test]
    fn cooccur_skips_nested_pairs() {
        let pat = Term::Cooccur(Box::new(Term::data_var("A")), Box::new(Term::data_var("B")));
        let rec = p("Sicknessrec(Personalinfo(name,address),disease)");
        // 4 non-nested unordered pairs, each in both orders
        assert_eq!(unify_all(&pat, &rec).len(), 8);
    }

    #[test]
    fn ctor_app_rebuilds_compound() {
        let pat = Term::CtorApp(Box::new(Term::data_var("F")), vec![Term::Ds, Term::data_var("V")]);
        let s = unify(&pat, &p("Rec(ds,x)")).unwrap();
        let other = Term::CtorApp(Box::new(Term::data_var("F")), vec![Term::data_var("V"), p("P(ds)")]);
        assert_eq!(s.apply(&other), p("Rec(x,P(ds))"));
    }

    #[test]
    fn depth_counts_layers() {
        assert_eq!(crypto_depth(&p("name")), 0);
        assert_eq!(crypto_depth(&p("Senc(name,key)")), 1);
        assert_eq!(crypto_depth(&p("Senc(Account(Senc(name,key),address),key)")), 2);
        assert_eq!(crypto_depth(&p("Aenc(x,Sk(k))")), 1);
    }

    #[test]
    fn time_values() {
        assert_eq!(TimeValue::parse("8y").unwrap().minutes(), 8 * 525_600);
        assert_eq!(TimeValue::parse("1y+6mo").unwrap().to_string(), "1y+6mo");
        assert_eq!(TimeValue::parse("w").unwrap().minutes(), 10_080);
        assert!(TimeValue::parse("0d").is_err());
        assert!(TimeValue::parse("5x").is_err());
        assert_eq!(p("Time(t)"), Term::time(Term::NonSpecificTime));
        assert_eq!(p("Time(TT)"), Term::time(Term::NonSpecificTime));
    }

    #[test]
    fn parser_rejects_bad_input() {
        assert!(parse_term("A(b, c)").is_err());
        assert!(parse_term("A(Meta(ip),x)").is_err());
        assert!(parse_term("Senc(x)").is_err());
        assert!(parse_term("Time(soon)").is_err());
        assert_eq!(p("Fwconsent(bill,auth)").to_string(), "Fwconsent(bill,auth)");
    }

    #[test]
    fn display_round_trips() {
        for s in ["Senc(Sicknessrecord(nhsnumber,name,Meta(ip)),spkey1)", "Aenc(x,pk)", "Hash(P(ds))", "Time(10y+6mo)"] {
            assert_eq!(p(s).to_string(), s);
        }
    }
}
