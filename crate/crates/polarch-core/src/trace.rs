//! Concrete event traces: state semantics and compliance auditing.
//!
//! Policy events describe what the service provider does with personal
//! data at given times. Folding them over a [`ServiceState`] gives the data
//! state of every entity; [`check_trace_compliance`] audits a trace against
//! the policy's per-type requirements. Architecture events have their own
//! state model in [`GlobalState`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use crate::policy::{Bundle, Delay, Policy, Purpose, SERVICE_PROVIDER};
use crate::term::{SpecialKind, Term, TimeValue};

/// A point in time, in minutes since 0000-03-01.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe
}

fn civil_from_days(z: i64) -> (i64, i64, i64) {
    let era = z.div_euclid(146097);
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

fn days_in_month(y: i64, m: i64) -> i64 {
    match m {
        2 if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

impl Timestamp {
    /// Parses `yyyy.mm.dd.hh:mm`.
    pub fn parse(s: &str) -> Result<Timestamp, String> {
        let bad = || format!("bad timestamp `{}`, expected yyyy.mm.dd.hh:mm", s);
        let parts: Vec<&str> = s.split(['.', ':']).collect();
        let [y, mo, d, h, mi] = parts.as_slice() else { return Err(bad()) };
        let num = |p: &str, len: usize| -> Result<i64, String> {
            if p.len() != len || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            p.parse::<i64>().map_err(|_| bad())
        };
        let (y, mo, d, h, mi) = (num(y, 4)?, num(mo, 2)?, num(d, 2)?, num(h, 2)?, num(mi, 2)?);
        if !(1..=12).contains(&mo) || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 {
            return Err(bad());
        }
        let days = days_from_civil(y, mo, d) - days_from_civil(0, 3, 1);
        Ok(Timestamp((days * 1440 + h * 60 + mi) as u64))
    }

    pub fn plus(self, minutes: u64) -> Timestamp {
        Timestamp(self.0.saturating_add(minutes))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let days = (self.0 / 1440) as i64 + days_from_civil(0, 3, 1);
        let (y, m, d) = civil_from_days(days);
        let rem = self.0 % 1440;
        write!(f, "{:04}.{:02}.{:02}.{:02}:{:02}", y, m, d, rem / 60, rem % 60)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    CConsentAt,
    CollectAt,
    UConsentAt,
    CreateAt,
    CalculateAt,
    SConsentAt,
    StoreAt,
    DeleteAt,
    FwConsentAt,
    ForwardAt,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::CConsentAt,
        EventKind::CollectAt,
        EventKind::UConsentAt,
        EventKind::CreateAt,
        EventKind::CalculateAt,
        EventKind::SConsentAt,
        EventKind::StoreAt,
        EventKind::DeleteAt,
        EventKind::FwConsentAt,
        EventKind::ForwardAt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::CConsentAt => "cconsentat",
            EventKind::CollectAt => "collectat",
            EventKind::UConsentAt => "uconsentat",
            EventKind::CreateAt => "createat",
            EventKind::CalculateAt => "calculateat",
            EventKind::SConsentAt => "sconsentat",
            EventKind::StoreAt => "storeat",
            EventKind::DeleteAt => "deleteat",
            EventKind::FwConsentAt => "fwconsentat",
            EventKind::ForwardAt => "forwardat",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        EventKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// createat and calculateat derive one data type from another.
    pub fn is_use(self) -> bool {
        matches!(self, EventKind::CreateAt | EventKind::CalculateAt)
    }

    fn field_names(self) -> &'static [&'static str] {
        match self {
            EventKind::CConsentAt | EventKind::UConsentAt | EventKind::SConsentAt => &["from", "type"],
            EventKind::CollectAt => &["from", "type", "value"],
            EventKind::CreateAt | EventKind::CalculateAt => &["from", "derived", "type", "value"],
            EventKind::StoreAt | EventKind::DeleteAt => &["from", "type", "value", "place"],
            EventKind::FwConsentAt => &["to", "from", "type"],
            EventKind::ForwardAt => &["to", "from", "type", "value"],
        }
    }
}

/// One policy event. Fields not used by the kind are `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyEvent {
    pub kind: EventKind,
    pub time: Timestamp,
    pub from: String,
    pub data_type: String,
    pub value: Option<String>,
    pub derived: Option<String>,
    pub to: Option<String>,
    pub place: Option<String>,
}

impl PolicyEvent {
    fn bare(kind: EventKind, time: Timestamp, from: &str, data_type: &str) -> Self {
        PolicyEvent {
            kind,
            time,
            from: from.into(),
            data_type: data_type.into(),
            value: None,
            derived: None,
            to: None,
            place: None,
        }
    }

    pub fn consent(kind: EventKind, time: Timestamp, from: &str, data_type: &str) -> Self {
        PolicyEvent::bare(kind, time, from, data_type)
    }

    pub fn collect(time: Timestamp, from: &str, data_type: &str, value: &str) -> Self {
        PolicyEvent { value: Some(value.into()), ..PolicyEvent::bare(EventKind::CollectAt, time, from, data_type) }
    }

    pub fn use_event(kind: EventKind, time: Timestamp, from: &str, derived: &str, data_type: &str, value: &str) -> Self {
        PolicyEvent {
            value: Some(value.into()),
            derived: Some(derived.into()),
            ..PolicyEvent::bare(kind, time, from, data_type)
        }
    }

    pub fn at_place(kind: EventKind, time: Timestamp, from: &str, data_type: &str, value: &str, place: &str) -> Self {
        PolicyEvent {
            value: Some(value.into()),
            place: Some(place.into()),
            ..PolicyEvent::bare(kind, time, from, data_type)
        }
    }

    pub fn fw_consent(time: Timestamp, to: &str, from: &str, data_type: &str) -> Self {
        PolicyEvent { to: Some(to.into()), ..PolicyEvent::bare(EventKind::FwConsentAt, time, from, data_type) }
    }

    pub fn forward(time: Timestamp, to: &str, from: &str, data_type: &str, value: &str) -> Self {
        PolicyEvent {
            to: Some(to.into()),
            value: Some(value.into()),
            ..PolicyEvent::bare(EventKind::ForwardAt, time, from, data_type)
        }
    }

    fn same_datum(&self, other: &PolicyEvent) -> bool {
        self.from == other.from && self.data_type == other.data_type && self.value == other.value
    }
}

impl fmt::Display for PolicyEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.kind.name(), self.time)?;
        for name in self.kind.field_names() {
            let v = match *name {
                "from" => Some(&self.from),
                "type" => Some(&self.data_type),
                "value" => self.value.as_ref(),
                "derived" => self.derived.as_ref(),
                "to" => self.to.as_ref(),
                _ => self.place.as_ref(),
            };
            write!(f, ",{}", v.map(String::as_str).unwrap_or(""))?;
        }
        f.write_str(")")
    }
}

/// Parses one event per line, `kind(timestamp,args...)`. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_trace(src: &str) -> Result<Vec<PolicyEvent>, TraceError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| TraceError { line: i + 1, message: m };
        let (name, rest) = line.split_once('(').ok_or_else(|| err("expected kind(timestamp,...)".into()))?;
        let inner = rest.strip_suffix(')').ok_or_else(|| err("missing closing parenthesis".into()))?;
        let kind = EventKind::from_name(name.trim()).ok_or_else(|| err(format!("unknown event `{}`", name.trim())))?;
        let args: Vec<&str> = inner.split(',').map(str::trim).collect();
        let names = kind.field_names();
        if args.len() != names.len() + 1 {
            return Err(err(format!("{} takes {} arguments, got {}", kind.name(), names.len() + 1, args.len())));
        }
        if args.iter().any(|a| a.is_empty()) {
            return Err(err("empty argument".into()));
        }
        let time = Timestamp::parse(args[0]).map_err(err)?;
        let mut ev = PolicyEvent::bare(kind, time, "", "");
        for (n, v) in names.iter().zip(&args[1..]) {
            let v = (*v).to_string();
            match *n {
                "from" => ev.from = v,
                "type" => ev.data_type = v,
                "value" => ev.value = Some(v),
                "derived" => ev.derived = Some(v),
                "to" => ev.to = Some(v),
                _ => ev.place = Some(v),
            }
        }
        out.push(ev);
    }
    Ok(out)
}

pub fn render_trace(events: &[PolicyEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConsentKind {
    Collection,
    Usage,
    Storage,
    Forwarding,
}

impl ConsentKind {
    pub const ALL: [ConsentKind; 4] =
        [ConsentKind::Collection, ConsentKind::Usage, ConsentKind::Storage, ConsentKind::Forwarding];
}

/// A data-state slot, always paired with the originating entity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Data(String),
    Consent(ConsentKind),
}

pub type DataState = BTreeMap<(Slot, String), String>;

/// Per-entity data states plus the time of the last event. Entities with
/// no defined slot are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ServiceState {
    pub states: BTreeMap<String, DataState>,
    pub time: Option<Timestamp>,
}

impl ServiceState {
    pub fn new() -> Self {
        ServiceState::default()
    }

    pub fn get(&self, entity: &str, slot: &Slot, from: &str) -> Option<&str> {
        self.states.get(entity)?.get(&(slot.clone(), from.to_string())).map(String::as_str)
    }

    fn set(&mut self, entity: &str, slot: Slot, from: &str, value: Option<String>) {
        let state = self.states.entry(entity.to_string()).or_default();
        let key = (slot, from.to_string());
        match value {
            Some(v) => {
                state.insert(key, v);
            }
            None => {
                state.remove(&key);
            }
        }
        if state.is_empty() {
            self.states.remove(entity);
        }
    }
}

/// The state after one event.
pub fn apply_policy_event(e: &PolicyEvent, s: &ServiceState) -> ServiceState {
    let mut s = s.clone();
    let sp = SERVICE_PROVIDER;
    let th = e.data_type.clone();
    match e.kind {
        EventKind::CConsentAt => s.set(sp, Slot::Consent(ConsentKind::Collection), &e.from, Some(th)),
        EventKind::UConsentAt => s.set(sp, Slot::Consent(ConsentKind::Usage), &e.from, Some(th)),
        EventKind::SConsentAt => s.set(sp, Slot::Consent(ConsentKind::Storage), &e.from, Some(th)),
        EventKind::FwConsentAt => s.set(sp, Slot::Consent(ConsentKind::Forwarding), &e.from, Some(th)),
        EventKind::CollectAt => s.set(sp, Slot::Data(th), &e.from, e.value.clone()),
        EventKind::CreateAt | EventKind::CalculateAt => {
            let derived = e.derived.clone().unwrap_or_default();
            s.set(sp, Slot::Data(derived), &e.from, e.value.clone())
        }
        EventKind::StoreAt => {
            let place = e.place.clone().unwrap_or_default();
            s.set(&place, Slot::Data(th), &e.from, e.value.clone())
        }
        EventKind::DeleteAt => {
            let place = e.place.clone().unwrap_or_default();
            s.set(&place, Slot::Data(th), &e.from, None);
            for k in ConsentKind::ALL {
                s.set(&place, Slot::Consent(k), &e.from, None);
            }
        }
        EventKind::ForwardAt => {
            let to = e.to.clone().unwrap_or_default();
            s.set(&to, Slot::Data(th), &e.from, e.value.clone())
        }
    }
    s.time = Some(e.time);
    s
}

/// Left fold of [`apply_policy_event`].
pub fn run_trace(events: &[PolicyEvent], init: &ServiceState) -> ServiceState {
    events.iter().fold(init.clone(), |s, e| apply_policy_event(e, &s))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplianceViolation {
    /// Rule number, 1 to 11.
    pub rule: u8,
    pub data_type: String,
    /// Index of the offending event in the trace.
    pub event: usize,
    pub message: String,
}

impl fmt::Display for ComplianceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{} [{}] event {}: {}", self.rule, self.data_type, self.event + 1, self.message)
    }
}

fn purpose_listed(list: &[Purpose], act: EventKind, derived: &str) -> bool {
    list.iter()
        .any(|p| p.action.eq_ignore_ascii_case(act.name()) && p.result_type.eq_ignore_ascii_case(derived))
}

struct Auditor<'a> {
    trace: &'a [PolicyEvent],
    out: Vec<ComplianceViolation>,
}

impl Auditor<'_> {
    fn flag(&mut self, rule: u8, i: usize, message: String) {
        let v = ComplianceViolation { rule, data_type: self.trace[i].data_type.clone(), event: i, message };
        if !self.out.contains(&v) {
            self.out.push(v);
        }
    }

    /// Whether a matching consent precedes event `i` without a deletion of
    /// the same data in between.
    fn consent_before(&self, i: usize, kind: EventKind, to: Option<&str>) -> bool {
        let e = &self.trace[i];
        let mut valid = false;
        for c in &self.trace[..i] {
            if c.kind == kind && c.from == e.from && c.data_type == e.data_type && c.time <= e.time {
                if to.is_none() || c.to.as_deref() == to {
                    valid = true;
                }
            } else if c.kind == EventKind::DeleteAt && c.from == e.from && c.data_type == e.data_type {
                valid = false;
            }
        }
        valid
    }

    /// Use events on the same datum at or after event `i` whose purpose is not listed.
    fn unlisted_uses(&self, i: usize, list: &[Purpose]) -> Vec<usize> {
        let e = &self.trace[i];
        self.trace
            .iter()
            .enumerate()
            .filter(|(_, u)| {
                u.kind.is_use()
                    && u.same_datum(e)
                    && u.time >= e.time
                    && !purpose_listed(list, u.kind, u.derived.as_deref().unwrap_or(""))
            })
            .map(|(j, _)| j)
            .collect()
    }

    fn event(&mut self, i: usize, b: &Bundle) {
        let e = &self.trace[i];
        match e.kind {
            EventKind::CollectAt => {
                if let Some(c) = &b.collection {
                    if c.consent_required && !self.consent_before(i, EventKind::CConsentAt, None) {
                        self.flag(1, i, format!("{} collected from {} without prior collection consent", e.data_type, e.from));
                    }
                    for j in self.unlisted_uses(i, &c.purposes) {
                        let u = &self.trace[j];
                        let msg = format!(
                            "{}:{} is not a collection purpose of {}",
                            u.kind.name(),
                            u.derived.as_deref().unwrap_or(""),
                            e.data_type
                        );
                        self.flag(2, j, msg);
                    }
                }
            }
            EventKind::CreateAt | EventKind::CalculateAt => {
                if let Some(u) = &b.usage {
                    let derived = e.derived.as_deref().unwrap_or("");
                    if u.consent_required && !self.consent_before(i, EventKind::UConsentAt, None) {
                        self.flag(3, i, format!("{} used without prior usage consent from {}", e.data_type, e.from));
                    }
                    if !purpose_listed(&u.purposes, e.kind, derived) {
                        self.flag(4, i, format!("{}:{} is not a usage purpose of {}", e.kind.name(), derived, e.data_type));
                    }
                }
            }
            EventKind::StoreAt => {
                if let Some(st) = &b.storage {
                    let place = e.place.as_deref().unwrap_or("");
                    if st.consent_required && !self.consent_before(i, EventKind::SConsentAt, None) {
                        self.flag(5, i, format!("{} stored without prior storage consent from {}", e.data_type, e.from));
                    }
                    if !st.places.iter().any(|p| p == place) {
                        self.flag(6, i, format!("{} stored at {}, which is not a permitted place", e.data_type, place));
                    }
                }
            }
            EventKind::DeleteAt => {
                if let Some(del) = &b.deletion {
                    if let Delay::Value(d) = &del.delay {
                        self.deletion_delay(i, d);
                    }
                }
            }
            EventKind::ForwardAt => {
                if let Some(tr) = &b.transfer {
                    let to = e.to.as_deref().unwrap_or("");
                    if tr.consent_required && !self.consent_before(i, EventKind::FwConsentAt, Some(to)) {
                        self.flag(9, i, format!("{} forwarded to {} without prior forwarding consent", e.data_type, to));
                    }
                    if !tr.to.iter().any(|t| t == to) {
                        self.flag(10, i, format!("{} forwarded to {}, which is not a permitted recipient", e.data_type, to));
                    }
                    for j in self.unlisted_uses(i, &tr.purposes) {
                        let u = &self.trace[j];
                        let msg = format!(
                            "{}:{} is not a forwarding purpose of {}",
                            u.kind.name(),
                            u.derived.as_deref().unwrap_or(""),
                            e.data_type
                        );
                        self.flag(11, j, msg);
                    }
                }
            }
            _ => {}
        }
    }

    fn deletion_delay(&mut self, i: usize, delay: &TimeValue) {
        let e = &self.trace[i];
        let collected = self.trace[..i]
            .iter()
            .rev()
            .find(|c| c.kind == EventKind::CollectAt && c.same_datum(e));
        let Some(c) = collected else { return };
        if e.time < c.time || e.time > c.time.plus(delay.minutes()) {
            let msg = format!("{} deleted at {}, outside {} from its collection at {}", e.data_type, e.time, delay, c.time);
            self.flag(8, i, msg);
        }
    }

    /// Each deleted datum must be deleted from exactly the listed places.
    fn deletion_places(&mut self, p: &Policy) {
        let mut groups: BTreeMap<DeletedDatum, (Vec<String>, usize)> = BTreeMap::new();
        for (i, e) in self.trace.iter().enumerate() {
            if e.kind != EventKind::DeleteAt {
                continue;
            }
            let entry = groups.entry((e.from.clone(), e.data_type.clone(), e.value.clone())).or_default();
            let place = e.place.clone().unwrap_or_default();
            if !entry.0.contains(&place) {
                entry.0.push(place);
            }
            entry.1 = i;
        }
        for ((_, th, _), (mut places, last)) in groups {
            let Some(del) = p.bundle_for(&th).and_then(|b| b.deletion.as_ref()) else { continue };
            let mut expected = del.places.clone();
            expected.sort();
            expected.dedup();
            places.sort();
            if places != expected {
                let msg = format!("{} deleted from {{{}}} but must be deleted from {{{}}}", th, places.join(","), expected.join(","));
                self.flag(7, last, msg);
            }
        }
    }
}

/// (from, type, value) of a deletion.
type DeletedDatum = (String, String, Option<String>);

/// All breaches of the per-type requirements in a trace. Rules whose
/// sub-policy is absent are not checked.
pub fn check_trace_compliance(trace: &[PolicyEvent], p: &Policy) -> Vec<ComplianceViolation> {
    let mut a = Auditor { trace, out: Vec::new() };
    for (i, e) in trace.iter().enumerate() {
        if let Some(b) = p.bundle_for(&e.data_type) {
            a.event(i, b);
        }
    }
    a.deletion_places(p);
    a.out.sort_by_key(|x| (x.event, x.rule));
    a.out
}

/// Architecture-level events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArchEvent {
    /// Holds for the whole run, so the clock is not moved.
    Own { entity: String, var: String, value: String },
    CalculateAt { entity: String, var: String, term: Term, time: Timestamp },
    CreateAt { entity: String, var: String, term: Term, time: Timestamp },
    ReceiveAt { entity: String, var: String, from: String, value: String, time: Timestamp },
    ReceiveConsentAt { entity: String, kind: SpecialKind, var: String, from: String, value: String, time: Timestamp },
    StoreAt { entity: String, var: String, from: String, value: String, time: Timestamp },
    DeleteWithin { entity: String, var: String, from: String, delay: TimeValue, time: Timestamp },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArchSlot {
    /// The variable of a data type.
    Var(String),
    /// Received data: type and origin.
    Data(String, String),
    /// A received consent token on some data.
    Consent(SpecialKind, String, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalState {
    pub locals: BTreeMap<String, BTreeMap<ArchSlot, String>>,
    pub time: Option<Timestamp>,
}

impl GlobalState {
    pub fn new() -> Self {
        GlobalState::default()
    }

    pub fn get(&self, entity: &str, slot: &ArchSlot) -> Option<&str> {
        self.locals.get(entity)?.get(slot).map(String::as_str)
    }

    fn set(&mut self, entity: &str, slot: ArchSlot, value: Option<String>) {
        let local = self.locals.entry(entity.to_string()).or_default();
        match value {
            Some(v) => {
                local.insert(slot, v);
            }
            None => {
                local.remove(&slot);
            }
        }
        if local.is_empty() {
            self.locals.remove(entity);
        }
    }
}

/// Value of a term under an entity's local state, undefined if any variable
/// it mentions is. A data type name reads its variable, or else the first
/// received datum of that type.
pub fn eval(t: &Term, local: Option<&BTreeMap<ArchSlot, String>>) -> Option<String> {
    let local = local?;
    match t {
        Term::SimpleType(n) => local.get(&ArchSlot::Var(n.clone())).cloned().or_else(|| {
            local
                .iter()
                .find(|(k, _)| matches!(k, ArchSlot::Data(ty, _) if ty == n))
                .map(|(_, v)| v.clone())
        }),
        Term::Compound(_, args) | Term::Crypto(_, args) => {
            let name = match t {
                Term::Compound(n, _) => n.as_str(),
                Term::Crypto(k, _) => k.name(),
                _ => unreachable!(),
            };
            let vals: Option<Vec<String>> = args.iter().map(|a| eval(a, Some(local))).collect();
            vals.map(|v| format!("{}({})", name, v.join(",")))
        }
        _ => None,
    }
}

pub fn apply_arch_event(e: &ArchEvent, g: &GlobalState) -> GlobalState {
    let mut g = g.clone();
    match e {
        ArchEvent::Own { entity, var, value } => g.set(entity, ArchSlot::Var(var.clone()), Some(value.clone())),
        ArchEvent::CalculateAt { entity, var, term, time } | ArchEvent::CreateAt { entity, var, term, time } => {
            let v = eval(term, g.locals.get(entity));
            g.set(entity, ArchSlot::Var(var.clone()), v);
            g.time = Some(*time);
        }
        ArchEvent::ReceiveAt { entity, var, from, value, time } => {
            g.set(entity, ArchSlot::Data(var.clone(), from.clone()), Some(value.clone()));
            g.time = Some(*time);
        }
        ArchEvent::ReceiveConsentAt { entity, kind, var, from, value, time } => {
            g.set(entity, ArchSlot::Consent(*kind, var.clone(), from.clone()), Some(value.clone()));
            g.time = Some(*time);
        }
        ArchEvent::StoreAt { entity, var, value, time, .. } => {
            g.set(entity, ArchSlot::Var(var.clone()), Some(value.clone()));
            g.time = Some(*time);
        }
        ArchEvent::DeleteWithin { entity, var, from, time, .. } => {
            g.set(entity, ArchSlot::Var(var.clone()), None);
            g.set(entity, ArchSlot::Data(var.clone(), from.clone()), None);
            for k in [SpecialKind::Cconsent, SpecialKind::Uconsent, SpecialKind::Sconsent, SpecialKind::Fwconsent] {
                g.set(entity, ArchSlot::Consent(k, var.clone(), from.clone()), None);
            }
            g.time = Some(*time);
        }
    }
    g
}

pub fn run_arch_trace(events: &[ArchEvent], init: &GlobalState) -> GlobalState {
    events.iter().fold(init.clone(), |g, e| apply_arch_event(e, &g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;
    use alloc::vec;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn timestamps_round_trip_and_order() {
        for s in ["2020.01.21.11:18", "2000.02.29.00:00", "1999.12.31.23:59"] {
            assert_eq!(ts(s).to_string(), s);
        }
        assert!(ts("2020.01.21.11:18") < ts("2020.01.21.11:20"));
        assert_eq!(ts("2020.01.02.00:00").0 - ts("2020.01.01.00:00").0, 1440);
        assert!(Timestamp::parse("2021.02.29.00:00").is_err());
        assert!(Timestamp::parse("2020.1.21.11:18").is_err());
    }

    #[test]
    fn collect_then_delete() {
        let s = run_trace(
            &[
                PolicyEvent::collect(ts("2020.01.21.11:20"), "client", "disease", "coronavirus"),
                PolicyEvent::at_place(EventKind::StoreAt, ts("2020.01.21.11:21"), "client", "disease", "coronavirus", "mainstorage"),
                PolicyEvent::consent(EventKind::SConsentAt, ts("2020.01.21.11:22"), "client", "disease"),
                PolicyEvent::at_place(EventKind::DeleteAt, ts("2020.01.21.11:23"), "client", "disease", "coronavirus", "mainstorage"),
            ],
            &ServiceState::new(),
        );
        let data = Slot::Data("disease".into());
        assert_eq!(s.get(SERVICE_PROVIDER, &data, "client"), Some("coronavirus"));
        assert_eq!(s.get("mainstorage", &data, "client"), None);
        assert_eq!(s.time, Some(ts("2020.01.21.11:23")));
    }

    #[test]
    fn parse_and_render() {
        let src = "# comment\ncollectat(2020.01.21.11:20,client,personalinfo,Peter)\nfwconsentat(2020.01.21.11:18,insurancecompany,client,personalinfo)\n";
        let t = parse_trace(src).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].to.as_deref(), Some("insurancecompany"));
        assert_eq!(parse_trace(&render_trace(&t)).unwrap(), t);
        assert!(parse_trace("collectat(2020.01.21.11:20,client)").is_err());
        assert!(parse_trace("grab(2020.01.21.11:20,client,x,y)").is_err());
    }

    #[test]
    fn consent_before_collection() {
        let p = parse_policy("DATAGROUP personalinfo UNIQUE=N { }\nPOLICY personalinfo { COLLECTION { consent=Y ; purposes = } }").unwrap();
        let ok = [
            PolicyEvent::consent(EventKind::CConsentAt, ts("2020.01.21.11:18"), "client", "personalinfo"),
            PolicyEvent::collect(ts("2020.01.21.11:20"), "client", "personalinfo", "Peter"),
        ];
        assert!(check_trace_compliance(&ok, &p).is_empty());
        let bad = [PolicyEvent::collect(ts("2020.01.21.11:20"), "client", "personalinfo", "Peter")];
        let v = check_trace_compliance(&bad, &p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, 1);
    }

    #[test]
    fn arch_events() {
        let g = apply_arch_event(
            &ArchEvent::Own { entity: "client".into(), var: "name".into(), value: "Peter".into() },
            &GlobalState::new(),
        );
        assert_eq!(g.get("client", &ArchSlot::Var("name".into())), Some("Peter"));
        assert!(g.get("sp", &ArchSlot::Var("name".into())).is_none());
        let t = ts("2020.01.30.15:45");
        let g = apply_arch_event(
            &ArchEvent::CreateAt {
                entity: "client".into(),
                var: "account".into(),
                term: Term::compound("Account", vec![Term::simple("name"), Term::simple("address")]),
                time: t,
            },
            &g,
        );
        assert!(g.get("client", &ArchSlot::Var("account".into())).is_none());
        let g = apply_arch_event(
            &ArchEvent::CreateAt {
                entity: "client".into(),
                var: "hash".into(),
                term: Term::compound("H", vec![Term::simple("name")]),
                time: t,
            },
            &g,
        );
        assert_eq!(g.get("client", &ArchSlot::Var("hash".into())), Some("H(Peter)"));
    }
}
