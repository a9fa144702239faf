//! Turning proof outcomes into conformance verdicts.

use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use crate::arch::Architecture;
use crate::atom::{ActionKind, Fact};
use crate::engine::{Derivation, ProofResult};
use crate::goals::{Goal, GoalKind, Note, Polarity, SubPolicy, DELAY_VAR};
use crate::policy::{Delay, Policy};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Classification {
    FunctionalConform,
    FunctionalViolation,
    PrivacyConform,
    PrivacyViolation,
    DprConform,
    DprViolation,
}

impl Classification {
    pub const ALL: [Classification; 6] = [
        Classification::FunctionalConform,
        Classification::FunctionalViolation,
        Classification::PrivacyConform,
        Classification::PrivacyViolation,
        Classification::DprConform,
        Classification::DprViolation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Classification::FunctionalConform => "functional-conform",
            Classification::FunctionalViolation => "functional-violation",
            Classification::PrivacyConform => "privacy-conform",
            Classification::PrivacyViolation => "privacy-violation",
            Classification::DprConform => "dpr-conform",
            Classification::DprViolation => "dpr-violation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Classification::ALL.iter().copied().find(|c| c.name() == s)
    }

    pub fn is_violation(self) -> bool {
        matches!(
            self,
            Classification::FunctionalViolation | Classification::PrivacyViolation | Classification::DprViolation
        )
    }

    pub fn family(self) -> Family {
        match self {
            Classification::FunctionalConform | Classification::FunctionalViolation => Family::Functional,
            Classification::PrivacyConform | Classification::PrivacyViolation => Family::Privacy,
            Classification::DprConform | Classification::DprViolation => Family::Dpr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    Privacy,
    Dpr,
    Functional,
}

impl Family {
    pub fn title(self) -> &'static str {
        match self {
            Family::Privacy => "Privacy conformance",
            Family::Dpr => "DPR conformance",
            Family::Functional => "Functional conformance",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub goal: Fact,
    pub data_type: String,
    pub sub_policy: SubPolicy,
    pub polarity: Polarity,
    pub proved: bool,
    pub classification: Classification,
    pub detail: String,
    pub derivation: Option<Rc<Derivation>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub functional_violations: usize,
    pub privacy_violations: usize,
    pub dpr_violations: usize,
}

impl Summary {
    pub fn total(&self) -> usize {
        self.functional_violations + self.privacy_violations + self.dpr_violations
    }

    fn count(verdicts: &[Verdict]) -> Summary {
        let mut s = Summary::default();
        for v in verdicts {
            match v.classification {
                Classification::FunctionalViolation => s.functional_violations += 1,
                Classification::PrivacyViolation => s.privacy_violations += 1,
                Classification::DprViolation => s.dpr_violations += 1,
                _ => {}
            }
        }
        s
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violations ({} functional, {} privacy, {} DPR)",
            self.total(),
            self.functional_violations,
            self.privacy_violations,
            self.dpr_violations
        )
    }
}

#[derive(Clone, Debug)]
pub struct ConformanceReport {
    pub policy: String,
    pub architecture: String,
    pub max_crypto_depth: usize,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

impl ConformanceReport {
    pub fn violations(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.classification.is_violation())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportError(pub String);

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Delays bound to the `DD` variable across all answers, in minutes.
fn bound_delays(r: &ProofResult) -> Vec<(u64, String)> {
    let mut out = Vec::new();
    for a in &r.answers {
        if let Some(Term::TimeValue(v)) = a.get(DELAY_VAR) {
            out.push((v.minutes(), v.to_string()));
        }
    }
    out
}

/// The largest delay exceeding the policy bound, if any.
fn exceeding(r: &ProofResult, bound: &Delay) -> Option<String> {
    let Delay::Value(limit) = bound else { return None };
    bound_delays(r)
        .into_iter()
        .filter(|(m, _)| *m > limit.minutes())
        .max_by_key(|(m, _)| *m)
        .map(|(_, s)| s)
}

fn max_delay(r: &ProofResult) -> Option<String> {
    bound_delays(r).into_iter().max_by_key(|(m, _)| *m).map(|(_, s)| s)
}

fn subject(f: &Fact) -> String {
    f.subject().map(|t| t.to_string()).unwrap_or_default()
}

fn through(r: &ProofResult) -> String {
    match &r.via_access {
        Some(m) => format!(" through {}", m),
        None => String::new(),
    }
}

struct Ctx<'a> {
    policy: &'a Policy,
    arch: &'a Architecture,
    goals: &'a [Goal],
    results: &'a [ProofResult],
}

impl Ctx<'_> {
    /// Whether the untimed or timed twin of a place or recipient goal was proved.
    fn either_form_proved(&self, goal: &Goal) -> bool {
        self.goals.iter().zip(self.results).any(|(g, r)| {
            r.proved
                && g.data_type == goal.data_type
                && g.polarity == goal.polarity
                && match (&g.kind, &goal.kind) {
                    (GoalKind::Place { place: a, .. }, GoalKind::Place { place: b, .. }) => a == b,
                    (GoalKind::Recipient { entity: a, .. }, GoalKind::Recipient { entity: b, .. }) => a == b,
                    _ => false,
                }
        })
    }

    fn delete_action_exists(&self, goal: &Fact) -> bool {
        self.arch.actions.iter().any(|a| {
            a.action_kind() == Some(ActionKind::Delete) && a.subject() == goal.subject() && a.payload() == goal.payload()
        })
    }

    fn classify(&self, g: &Goal, r: &ProofResult) -> (Classification, String) {
        use Classification::*;
        let f = &g.fact;
        let who = subject(f);
        let th = &g.data_type;
        let expected = g.polarity == Polarity::ExpectProvable;
        match &g.kind {
            GoalKind::Has | GoalKind::Link | GoalKind::LinkUnique => {
                let what = match g.kind {
                    GoalKind::Has => format!("have {}", th),
                    GoalKind::Link => format!("link {} with {}", f.args[1], f.args[2]),
                    _ => format!("uniquely link {} with {}", f.args[1], f.args[2]),
                };
                match (expected, r.proved) {
                    (true, true) => (FunctionalConform, format!("{} can {}{}", who, what, through(r))),
                    (true, false) => (FunctionalViolation, format!("{} may {} but cannot", who, what)),
                    (false, true) => (PrivacyViolation, format!("{} can {}{}, which is not allowed", who, what, through(r))),
                    (false, false) => (PrivacyConform, format!("{} cannot {}", who, what)),
                }
            }
            GoalKind::KeepPeriod => {
                let bound = g.delay.clone().unwrap_or(Delay::NonSpecific);
                if r.proved {
                    match exceeding(r, &bound) {
                        Some(d) => (
                            PrivacyViolation,
                            format!("{} can have {} for {}{}, longer than the allowed {}", who, th, d, through(r), bound),
                        ),
                        None => (
                            FunctionalConform,
                            format!("{} keeps {} for at most {}", who, th, max_delay(r).unwrap_or_else(|| bound.to_string())),
                        ),
                    }
                } else {
                    let allowed = self.policy.bundle(th).is_some_and(|b| b.may_have(&who));
                    if allowed {
                        (FunctionalViolation, format!("{} may keep {} for up to {} but cannot", who, th, bound))
                    } else {
                        (PrivacyConform, format!("{} cannot keep {} for any bounded time", who, th))
                    }
                }
            }
            GoalKind::DeleteWithin => {
                let bound = g.delay.clone().unwrap_or(Delay::NonSpecific);
                if r.proved {
                    match exceeding(r, &bound) {
                        Some(d) => (DprViolation, format!("{} deletes {} within {}, beyond the allowed {}", who, th, d, bound)),
                        None => (FunctionalConform, format!("{} deletes {} within {}", who, th, bound)),
                    }
                } else if self.delete_action_exists(f) {
                    (FunctionalConform, format!("{} deletes {} without a stated delay", who, th))
                } else {
                    (FunctionalViolation, format!("{} never deletes {}", who, th))
                }
            }
            GoalKind::Consent => {
                let what = consent_phrase(g.sub_policy);
                if r.proved {
                    (DprConform, format!("sp collects {} consent before the data is {}", what.0, what.1))
                } else {
                    (DprViolation, format!("sp does not collect {} consent before the data is {}", what.0, what.1))
                }
            }
            GoalKind::ConsentReception => {
                if r.proved {
                    (FunctionalViolation, format!("sp receives a {} consent for {} that is not required", consent_phrase(g.sub_policy).0, th))
                } else {
                    (FunctionalConform, format!("sp does not ask for {} consent for {}", consent_phrase(g.sub_policy).0, th))
                }
            }
            GoalKind::Purpose => {
                if r.proved {
                    (FunctionalConform, format!("{} is pursued", purpose_of(f)))
                } else {
                    (FunctionalViolation, format!("{} is allowed but never pursued", purpose_of(f)))
                }
            }
            GoalKind::PurposeAudit => {
                if r.proved {
                    (DprViolation, format!("{} is pursued but not listed for {}", purpose_of(f), th))
                } else {
                    (DprConform, format!("{} is not pursued", purpose_of(f)))
                }
            }
            GoalKind::Place { place, .. } => {
                let proved = if expected { self.either_form_proved(g) } else { r.proved };
                match (expected, proved) {
                    (true, true) => (FunctionalConform, format!("{} is stored at {}", th, place)),
                    (true, false) => (FunctionalViolation, format!("{} is never stored at {}", th, place)),
                    (false, true) => (DprViolation, format!("{} is stored at {}, which is not a permitted place", th, place)),
                    (false, false) => (DprConform, format!("{} is not stored at {}", th, place)),
                }
            }
            GoalKind::Recipient { entity, .. } => {
                let proved = if expected { self.either_form_proved(g) } else { r.proved };
                match (expected, proved) {
                    (true, true) => (FunctionalConform, format!("{} is forwarded to {}", th, entity)),
                    (true, false) => (FunctionalViolation, format!("{} is never forwarded to {}", th, entity)),
                    (false, true) => (DprViolation, format!("{} reaches {}, which is not a permitted recipient", th, entity)),
                    (false, false) => (DprConform, format!("{} does not reach {}", th, entity)),
                }
            }
        }
    }
}

fn consent_phrase(sub: SubPolicy) -> (&'static str, &'static str) {
    match sub {
        SubPolicy::Collection => ("collection", "collected"),
        SubPolicy::Usage => ("usage", "used"),
        SubPolicy::Storage => ("storage", "stored"),
        _ => ("forwarding", "forwarded"),
    }
}

fn purpose_of(f: &Fact) -> String {
    format!("purpose {}:{}", f.args[1], f.args[0])
}

/// Classifies each goal by its outcome. `results[i]` belongs to `goals[i]`.
pub fn classify_results(
    goals: &[Goal],
    results: &[ProofResult],
    policy: &Policy,
    arch: &Architecture,
) -> Result<Vec<Verdict>, ReportError> {
    if goals.len() != results.len() {
        return Err(ReportError(format!("{} goals but {} results", goals.len(), results.len())));
    }
    let ctx = Ctx { policy, arch, goals, results };
    let mut out = Vec::with_capacity(goals.len());
    for (g, r) in goals.iter().zip(results) {
        if g.fact != r.goal {
            return Err(ReportError(format!("no result for goal {}", g.fact)));
        }
        let (classification, mut detail) = ctx.classify(g, r);
        if r.exhausted {
            detail.push_str(" (search limit reached)");
        }
        out.push(Verdict {
            goal: g.fact.clone(),
            data_type: g.data_type.clone(),
            sub_policy: g.sub_policy,
            polarity: g.polarity,
            proved: r.proved,
            classification,
            detail,
            derivation: r.derivation.clone(),
        });
    }
    Ok(out)
}

/// Assembles a report from classified verdicts and the notes for skipped
/// sub-policies.
pub fn build_report(
    policy: &str,
    architecture: &str,
    max_crypto_depth: usize,
    verdicts: Vec<Verdict>,
    notes: &[Note],
) -> ConformanceReport {
    ConformanceReport {
        policy: policy.into(),
        architecture: architecture.into(),
        max_crypto_depth,
        summary: Summary::count(&verdicts),
        verdicts,
        notes: notes.iter().map(|n| n.message.clone()).collect(),
    }
}

/// Rule names of a derivation, e.g. `P8(P4, P3)`.
pub fn derivation_summary(d: &Derivation) -> String {
    match d {
        Derivation::Leaf { source, .. } => source.name().to_string(),
        Derivation::Rule { rule, children, .. } => {
            let kids: Vec<String> =
                children.iter().filter(|c| c.rule_name().is_some()).map(|c| derivation_summary(c)).collect();
            if kids.is_empty() {
                rule.clone()
            } else {
                format!("{}({})", rule, kids.join(", "))
            }
        }
    }
}

pub fn render_text(r: &ConformanceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("Policy: {}\nArchitecture: {}\n", r.policy, r.architecture));
    out.push_str(&format!(
        "Crypto depth: {} (goals reported as not provable are so only up to {} nested cryptographic layers)\n",
        r.max_crypto_depth, r.max_crypto_depth
    ));
    for family in [Family::Privacy, Family::Dpr, Family::Functional] {
        let vs: Vec<&Verdict> = r.verdicts.iter().filter(|v| v.classification.family() == family).collect();
        if vs.is_empty() {
            continue;
        }
        out.push_str(&format!("\n{}\n", family.title()));
        for v in vs {
            let tag = if v.classification.is_violation() { "VIOLATION" } else { "ok" };
            out.push_str(&format!("  {:<9} {}: {}", tag, v.goal, v.detail));
            if let Some(d) = &v.derivation {
                if d.rule_name().is_some() {
                    out.push_str(&format!(" [{}]", derivation_summary(d)));
                }
            }
            out.push('\n');
        }
    }
    if !r.notes.is_empty() {
        out.push_str("\nNotes\n");
        for n in &r.notes {
            out.push_str(&format!("  {}\n", n));
        }
    }
    out.push_str(&format!("\nSummary: {}\n", r.summary));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::parse_architecture;
    use crate::engine::{Engine, EngineInputs};
    use crate::goals::generate_goals;
    use crate::policy::parse_policy;

    fn run(policy: &str, arch: &str) -> ConformanceReport {
        let p = parse_policy(policy).unwrap();
        let a = parse_architecture(arch).unwrap().architecture;
        let set = generate_goals(&p, &p.entity_names());
        let inputs = EngineInputs::new(&a, &p, 3);
        let mut e = Engine::new(&inputs);
        let results: Vec<ProofResult> = set.goals.iter().map(|g| e.prove(&g.fact)).collect();
        let verdicts = classify_results(&set.goals, &results, &p, &a).unwrap();
        build_report("p", "a", 3, verdicts, &set.notes)
    }

    #[test]
    fn retention_longer_than_allowed() {
        let r = run(
            "DATAGROUP personalinfo UNIQUE=N { }
POLICY personalinfo {
  STORAGE { consent=Y ; where = mainstorage }
  DELETION { fromwhere = mainstorage ; delay = 8y }
  HAS { }
}",
            "RECEIVEAT(sp,Sconsent(personalinfo),Time(t))
RECEIVEAT(mainstorage,personalinfo,Time(t))
STOREAT(mainstorage,personalinfo,Time(t))
DELETEWITHIN(mainstorage,personalinfo,Time(10y))",
        );
        assert_eq!(r.summary.privacy_violations, 1);
        let v = r.violations().find(|v| v.classification == Classification::PrivacyViolation).unwrap();
        assert!(v.detail.contains("10y"), "{}", v.detail);
        let consent = r.verdicts.iter().find(|v| v.goal.to_string() == "STRCONSENTCOLLECTED(sp,personalinfo)").unwrap();
        assert_eq!(consent.classification, Classification::DprConform);
        let text = render_text(&r);
        assert!(text.contains("Summary: "));
    }

    #[test]
    fn retention_within_bound() {
        let r = run(
            "DATAGROUP d UNIQUE=N { }\nPOLICY d { DELETION { fromwhere = mainstorage ; delay = 8y } }",
            "STOREAT(mainstorage,d,Time(t))\nDELETEWITHIN(mainstorage,d,Time(8y))",
        );
        assert_eq!(r.summary.dpr_violations, 0);
        let keep = r.verdicts.iter().find(|v| v.goal.pred == crate::atom::Pred::HasUpTo).unwrap();
        assert_eq!(keep.classification, Classification::FunctionalConform);
    }

    #[test]
    fn summary_line() {
        let s = Summary { functional_violations: 1, privacy_violations: 2, dpr_violations: 0 };
        assert_eq!(s.to_string(), "3 violations (1 functional, 2 privacy, 0 DPR)");
        for c in Classification::ALL {
            assert_eq!(Classification::from_name(c.name()), Some(c));
        }
    }
}
