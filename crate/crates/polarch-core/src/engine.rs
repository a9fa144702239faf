//! Goal-directed proof search over the rule catalog and the architecture.
//!
//! Goals are solved depth first. Each distinct goal (up to variable renaming)
//! is solved once per [`Engine`] and the answers are kept in a memo table. A
//! goal that reappears below itself is cut; everything between the two
//! occurrences is then left out of the memo, since its answers may be missing
//! the ones that only arrive through the cut.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::arch::{partition_architecture, ArchPartition, Architecture};
use crate::atom::{unify_facts, Fact, Pred};
use crate::facts::{generate_purpose_facts, generate_trivial_facts, generate_unique_facts, purpose_matches, PurposeFacts};
use crate::policy::Policy;
use crate::rules::{base_var_name, build_rulesets, freshen_rule, InferenceRule, RuleSets};
use crate::term::{as_entity, unify, SpecialKind, Subst, Term, VarKind};

pub const DEFAULT_MAX_CRYPTO_DEPTH: usize = 3;

/// Where a leaf of a derivation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafSource {
    Architecture,
    Trivial,
    Purpose,
    Unique,
}

impl LeafSource {
    pub fn name(self) -> &'static str {
        match self {
            LeafSource::Architecture => "architecture",
            LeafSource::Trivial => "trivial",
            LeafSource::Purpose => "purpose",
            LeafSource::Unique => "unique",
        }
    }
}

/// Proof tree. Rule nodes name the rule (or one of the containment steps
/// `TH`, `TL`, `TU`) and carry the rule variables' values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    Rule {
        rule: String,
        goal: Fact,
        unifier: Vec<(String, Term)>,
        children: Vec<Rc<Derivation>>,
    },
    Leaf {
        goal: Fact,
        fact: Fact,
        source: LeafSource,
    },
}

impl Derivation {
    pub fn goal(&self) -> &Fact {
        match self {
            Derivation::Rule { goal, .. } | Derivation::Leaf { goal, .. } => goal,
        }
    }

    /// Leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Derivation::Leaf { .. } => 0,
            Derivation::Rule { children, .. } => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    pub fn rule_name(&self) -> Option<&str> {
        match self {
            Derivation::Rule { rule, .. } => Some(rule),
            Derivation::Leaf { .. } => None,
        }
    }

    pub fn leaves(&self) -> Vec<&Derivation> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Derivation>) {
        match self {
            Derivation::Leaf { .. } => out.push(self),
            Derivation::Rule { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    fn map_terms(&self, f: &dyn Fn(&Term) -> Term) -> Derivation {
        let map_fact = |g: &Fact| Fact::new(g.pred, g.args.iter().map(f).collect());
        match self {
            Derivation::Rule { rule, goal, unifier, children } => Derivation::Rule {
                rule: rule.clone(),
                goal: map_fact(goal),
                unifier: unifier.iter().map(|(n, t)| (n.clone(), f(t))).collect(),
                children: children.iter().map(|c| Rc::new(c.map_terms(f))).collect(),
            },
            Derivation::Leaf { goal, fact, source } => {
                Derivation::Leaf { goal: map_fact(goal), fact: fact.clone(), source: *source }
            }
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        for _ in 0..indent {
            f.write_str("  ")?;
        }
        match self {
            Derivation::Leaf { goal, fact, source } => {
                if goal == fact {
                    writeln!(f, "{} [{}]", goal, source.name())
                } else {
                    writeln!(f, "{} [{}: {}]", goal, source.name(), fact)
                }
            }
            Derivation::Rule { rule, goal, unifier, children } => {
                write!(f, "{} by {}", goal, rule)?;
                if !unifier.is_empty() {
                    f.write_str(" {")?;
                    for (i, (n, t)) in unifier.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{}->{}", n, t)?;
                    }
                    f.write_str("}")?;
                }
                writeln!(f)?;
                for c in children {
                    c.write_indented(f, indent + 1)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// Everything the engine reads. Built once per verification run.
#[derive(Clone, Debug)]
pub struct EngineInputs {
    pub rules: RuleSets,
    pub actions: Vec<Fact>,
    pub partition: ArchPartition,
    untimed: Vec<Fact>,
    pub trivial: Vec<Fact>,
    pub purposes: PurposeFacts,
    pub unique: Vec<Fact>,
    pub has_access_to: BTreeMap<String, Vec<String>>,
    /// Every subterm of the payloads each entity acts on.
    payload_terms: BTreeMap<String, Vec<Term>>,
    all_payload_terms: Vec<Term>,
    pub max_crypto_depth: usize,
    /// Resolution steps allowed per goal.
    pub step_limit: u64,
}

impl EngineInputs {
    pub fn new(arch: &Architecture, policy: &Policy, max_crypto_depth: usize) -> Self {
        Self::with_unique(arch, generate_unique_facts(policy), max_crypto_depth)
    }

    pub fn with_unique(arch: &Architecture, unique: Vec<Fact>, max_crypto_depth: usize) -> Self {
        let partition = partition_architecture(arch);
        let untimed = arch.actions.iter().filter(|f| !partition.time.contains(f)).cloned().collect();
        let mut payload_terms: BTreeMap<String, Vec<Term>> = BTreeMap::new();
        let mut all_payload_terms = Vec::new();
        for f in &arch.actions {
            let (Some(Term::EntityConst(e)), Some(d)) = (f.subject(), f.payload()) else { continue };
            let entry = payload_terms.entry(e.clone()).or_default();
            collect_subterms(d, entry);
            collect_subterms(d, &mut all_payload_terms);
        }
        let mut inputs = EngineInputs {
            rules: build_rulesets(),
            actions: arch.actions.clone(),
            partition,
            untimed,
            trivial: generate_trivial_facts(arch),
            purposes: generate_purpose_facts(arch),
            unique,
            has_access_to: arch.has_access_to.clone(),
            payload_terms,
            all_payload_terms,
            max_crypto_depth,
            step_limit: 0,
        };
        inputs.step_limit = inputs.step_ceiling();
        inputs
    }

    /// Upper bound on resolution steps for one goal:
    /// `2^N * |rules| * (2|A|+1) * (|T|+|A|+1)^2`, saturating.
    pub fn step_ceiling(&self) -> u64 {
        let a = self.actions.len() as u64;
        let t = self.trivial.len() as u64;
        let pow = 1u64.checked_shl(self.max_crypto_depth as u32).unwrap_or(u64::MAX);
        let facts = t.saturating_add(a).saturating_add(1);
        pow.saturating_mul(self.rules.len() as u64)
            .saturating_mul(a.saturating_mul(2).saturating_add(1))
            .saturating_mul(facts.saturating_mul(facts))
    }

    /// False when no derivation of `HAS(subject, data)` can exist: every
    /// possession rule only takes data apart, so the data must match a
    /// subterm of something the subject acts on. Pseudonymisation by a
    /// trusted party rewrites `P(ds)` and is not covered.
    fn could_have(&self, subject: &Term, data: &Term) -> bool {
        if mentions_pseudonym(data) {
            return true;
        }
        let pool: &[Term] = match subject {
            Term::EntityConst(e) => self.payload_terms.get(e).map(Vec::as_slice).unwrap_or(&[]),
            _ => &self.all_payload_terms,
        };
        pool.iter().any(|t| unify(data, t).is_some())
    }

    fn facts_for_action(&self, goal: &Fact) -> &[Fact] {
        let timed = goal.args.iter().any(|a| matches!(a, Term::Special(SpecialKind::Time, _)));
        if timed {
            &self.partition.time
        } else {
            &self.untimed
        }
    }
}

/// Outcome of checking one goal.
#[derive(Clone, Debug)]
pub struct ProofResult {
    pub goal: Fact,
    pub proved: bool,
    pub derivation: Option<Rc<Derivation>>,
    /// Bindings for the goal's variables, one entry per distinct answer.
    pub answers: Vec<Subst>,
    /// Set when the proof went through an entity the subject has access to.
    pub via_access: Option<String>,
    pub steps: u64,
    /// The step limit was hit before the search finished.
    pub exhausted: bool,
}

#[derive(Clone, Debug)]
struct Answer {
    bindings: Subst,
    tree: Rc<Derivation>,
}

struct Frame {
    goal: Fact,
    tainted: bool,
}

pub struct Engine<'a> {
    inputs: &'a EngineInputs,
    memo: BTreeMap<Fact, Rc<Vec<Answer>>>,
    stack: Vec<Frame>,
    fresh: u64,
    steps: u64,
    exhausted: bool,
}

impl<'a> Engine<'a> {
    pub fn new(inputs: &'a EngineInputs) -> Self {
        Engine { inputs, memo: BTreeMap::new(), stack: Vec::new(), fresh: 0, steps: 0, exhausted: false }
    }

    /// Proves a goal, falling back to entities the subject has access to.
    /// The memo table is kept between calls; the step count is not.
    pub fn prove(&mut self, goal: &Fact) -> ProofResult {
        self.steps = 0;
        self.exhausted = false;
        let mut result = self.prove_direct(goal);
        if !result.proved && !result.exhausted {
            if let Some(Term::EntityConst(e)) = goal.subject() {
                let members = self.inputs.has_access_to.get(e).cloned().unwrap_or_default();
                for m in members {
                    let mut g = goal.clone();
                    g.args[0] = Term::entity(&m);
                    let r = self.prove_direct(&g);
                    if r.proved {
                        result = ProofResult { goal: goal.clone(), via_access: Some(m), ..r };
                        break;
                    }
                    if r.exhausted {
                        result.exhausted = true;
                        break;
                    }
                }
            }
        }
        result.steps = self.steps;
        result
    }

    fn prove_direct(&mut self, goal: &Fact) -> ProofResult {
        let answers = self.solve(goal);
        let proved = !answers.is_empty();
        ProofResult {
            goal: goal.clone(),
            proved,
            derivation: if proved { answers.first().map(|(_, t)| t.clone()) } else { None },
            answers: if proved { answers.into_iter().map(|(s, _)| s).collect() } else { Vec::new() },
            via_access: None,
            steps: self.steps,
            exhausted: self.exhausted,
        }
    }

    /// Steps used by the last call to [`Engine::prove`].
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Resolves a goal against one rule's head and solves the instantiated
    /// tail. Returns the goal bindings and derivation for each answer.
    pub fn resolve_with_rule(&mut self, rule: &InferenceRule, goal: &Fact) -> Vec<(Subst, Rc<Derivation>)> {
        let mut out = Vec::new();
        self.resolve(rule, goal, &mut out, false);
        out.into_iter().map(|a| (a.bindings, a.tree)).collect()
    }

    fn tick(&mut self) -> bool {
        self.steps += 1;
        if self.steps > self.inputs.step_limit {
            self.exhausted = true;
        }
        !self.exhausted
    }

    /// Answers in terms of the goal's own variable names.
    fn solve(&mut self, goal: &Fact) -> Vec<(Subst, Rc<Derivation>)> {
        let vars = goal.vars();
        let (canon, _) = goal.canonical();
        let answers = self.solve_canonical(canon);
        let mut rename = Subst::new();
        for (i, (k, n)) in vars.iter().enumerate() {
            rename.insert(&format!("_{}", i), Term::Var(*k, n.clone()));
        }
        let identity = vars.iter().enumerate().all(|(i, (_, n))| *n == format!("_{}", i));
        answers
            .iter()
            .map(|a| {
                let mut s = Subst::new();
                for (i, (_, n)) in vars.iter().enumerate() {
                    if let Some(v) = a.bindings.get(&format!("_{}", i)) {
                        s.insert(n, rename.apply_once(v));
                    }
                }
                let tree = if identity {
                    a.tree.clone()
                } else {
                    Rc::new(a.tree.map_terms(&|t| rename.apply_once(t)))
                };
                (s, tree)
            })
            .collect()
    }

    fn solve_canonical(&mut self, goal: Fact) -> Rc<Vec<Answer>> {
        if let Some(a) = self.memo.get(&goal) {
            return a.clone();
        }
        if let Some(i) = self.stack.iter().position(|f| f.goal == goal) {
            for f in &mut self.stack[i + 1..] {
                f.tainted = true;
            }
            return Rc::new(Vec::new());
        }
        if self.exhausted {
            return Rc::new(Vec::new());
        }
        self.stack.push(Frame { goal: goal.clone(), tainted: false });
        let answers = Rc::new(self.expand(&goal));
        let frame = self.stack.pop().expect("frame pushed above");
        if !frame.tainted && !self.exhausted {
            self.memo.insert(goal, answers.clone());
        }
        answers
    }

    fn expand(&mut self, goal: &Fact) -> Vec<Answer> {
        let ground = goal.is_ground();
        let mut out = Vec::new();
        match goal.pred {
            Pred::Action(_) => {
                let facts = self.inputs.facts_for_action(goal);
                self.match_facts(goal, facts, LeafSource::Architecture, ground, &mut out);
            }
            Pred::Unique => {
                let facts = &self.inputs.unique;
                self.match_facts(goal, facts, LeafSource::Unique, ground, &mut out);
            }
            p if p.is_purpose() => {
                for f in self.inputs.purposes.for_pred(p) {
                    if !self.tick() {
                        break;
                    }
                    if ground {
                        if purpose_matches(goal, f) {
                            out.push(leaf(goal, f, LeafSource::Purpose, Subst::new()));
                            break;
                        }
                    } else {
                        for s in unify_facts(goal, f) {
                            out.push(leaf(goal, f, LeafSource::Purpose, s));
                        }
                    }
                }
            }
            p => {
                let hopeless = match p {
                    Pred::Has | Pred::CryptHas => !self.inputs.could_have(&goal.args[0], &goal.args[1]),
                    Pred::Link | Pred::LinkUnique => {
                        !self.inputs.could_have(&goal.args[0], &goal.args[1])
                            || !self.inputs.could_have(&goal.args[0], &goal.args[2])
                    }
                    _ => false,
                };
                if hopeless {
                    self.tick();
                    return out;
                }
                if matches!(p, Pred::Has | Pred::Link | Pred::LinkUnique) {
                    let facts = &self.inputs.trivial;
                    self.match_facts(goal, facts, LeafSource::Trivial, ground, &mut out);
                    if matches!(p, Pred::Link | Pred::LinkUnique) && !(ground && !out.is_empty()) {
                        let swapped = swap_link(goal);
                        let mut alt = Vec::new();
                        self.match_facts(&swapped, facts, LeafSource::Trivial, ground, &mut alt);
                        for a in alt {
                            out.push(Answer {
                                bindings: a.bindings.clone(),
                                tree: Rc::new(Derivation::Leaf {
                                    goal: goal.apply(&a.bindings),
                                    fact: match &*a.tree {
                                        Derivation::Leaf { fact, .. } => fact.clone(),
                                        _ => unreachable!("fact matching yields leaves"),
                                    },
                                    source: LeafSource::Trivial,
                                }),
                            });
                        }
                    }
                }
                let rules = self.inputs.rules.for_pred(p);
                for r in rules {
                    if (ground && !out.is_empty()) || self.exhausted {
                        break;
                    }
                    self.resolve(r, goal, &mut out, ground);
                }
                if !(ground && !out.is_empty()) && !self.exhausted {
                    self.containment_step(goal, &mut out);
                }
            }
        }
        dedupe(out)
    }

    fn match_facts(&mut self, goal: &Fact, facts: &[Fact], source: LeafSource, ground: bool, out: &mut Vec<Answer>) {
        for f in facts {
            if !self.tick() {
                return;
            }
            for s in unify_facts(goal, f) {
                out.push(leaf(goal, f, source, s));
                if ground {
                    return;
                }
            }
        }
    }

    /// `HAS(E,x)` from `HAS(E,Within[x])`, and `LINK(E,a,b)` or
    /// `LINKUNIQUE(E,a,b)` from `HAS(E,Cooccur[a,b])`.
    fn containment_step(&mut self, goal: &Fact, out: &mut Vec<Answer>) {
        let (name, sub) = match goal.pred {
            Pred::Has => {
                if matches!(goal.args[1], Term::Contains { .. }) {
                    return;
                }
                ("TH", Fact::new(Pred::Has, vec![goal.args[0].clone(), Term::within(goal.args[1].clone())]))
            }
            Pred::Link | Pred::LinkUnique => {
                let name = if goal.pred == Pred::Link { "TL" } else { "TU" };
                let pair = Term::Cooccur(alloc::boxed::Box::new(goal.args[1].clone()), alloc::boxed::Box::new(goal.args[2].clone()));
                (name, Fact::new(Pred::Has, vec![goal.args[0].clone(), pair]))
            }
            _ => return,
        };
        if !self.tick() {
            return;
        }
        for (s, tree) in self.solve(&sub) {
            out.push(Answer {
                bindings: s.clone(),
                tree: Rc::new(Derivation::Rule {
                    rule: name.into(),
                    goal: goal.apply(&s),
                    unifier: Vec::new(),
                    children: vec![tree],
                }),
            });
            if goal.is_ground() {
                return;
            }
        }
    }

    fn resolve(&mut self, rule: &InferenceRule, goal: &Fact, out: &mut Vec<Answer>, ground: bool) {
        if !self.tick() {
            return;
        }
        let fresh = freshen_rule(rule, &mut self.fresh);
        let n = self.inputs.max_crypto_depth;
        let goal_vars: Vec<String> = goal.vars().into_iter().map(|(_, v)| v).collect();
        for s0 in unify_facts(goal, &fresh.head) {
            if fresh.depth_guarded && fresh.tail.iter().any(|t| t.apply(&s0).crypto_depth() > n) {
                continue;
            }
            let mut states: Vec<(Subst, Vec<Rc<Derivation>>)> = vec![(s0, Vec::new())];
            for t in &fresh.tail {
                let mut next = Vec::new();
                for (s, kids) in &states {
                    let g = t.apply(s);
                    if fresh.depth_guarded && g.crypto_depth() > n {
                        continue;
                    }
                    for (a, tree) in self.solve(&g) {
                        let mut s2 = s.clone();
                        s2.extend(&a);
                        let mut k2 = kids.clone();
                        k2.push(tree);
                        next.push((s2, k2));
                    }
                    if self.exhausted {
                        return;
                    }
                }
                states = next;
                if states.is_empty() {
                    break;
                }
            }
            for (s, kids) in states {
                let bindings = s.restrict(&goal_vars);
                let unifier = rule_unifier(&fresh, &s);
                let children = kids.iter().map(|k| Rc::new(k.map_terms(&|t| s.apply(t)))).collect();
                out.push(Answer {
                    bindings,
                    tree: Rc::new(Derivation::Rule { rule: fresh.name.clone(), goal: goal.apply(&s), unifier, children }),
                });
                if ground {
                    return;
                }
            }
        }
    }
}

fn leaf(goal: &Fact, fact: &Fact, source: LeafSource, s: Subst) -> Answer {
    let goal_vars: Vec<String> = goal.vars().into_iter().map(|(_, v)| v).collect();
    Answer {
        bindings: s.restrict(&goal_vars),
        tree: Rc::new(Derivation::Leaf { goal: goal.apply(&s), fact: fact.clone(), source }),
    }
}

fn collect_subterms(t: &Term, out: &mut Vec<Term>) {
    if !out.contains(t) {
        out.push(t.clone());
    }
    for c in t.children() {
        collect_subterms(c, out);
    }
}

fn mentions_pseudonym(t: &Term) -> bool {
    matches!(t, Term::Ds | Term::CtorApp(..) | Term::Special(SpecialKind::P, _)) || t.children().iter().any(|c| mentions_pseudonym(c))
}

fn swap_link(goal: &Fact) -> Fact {
    let mut g = goal.clone();
    g.args.swap(1, 2);
    g
}

/// Rule variables in order of first occurrence, with their values.
fn rule_unifier(rule: &InferenceRule, s: &Subst) -> Vec<(String, Term)> {
    let mut seen: Vec<(VarKind, String)> = rule.head.vars();
    for t in &rule.tail {
        for v in t.vars() {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
    }
    seen.into_iter()
        .map(|(k, n)| {
            let value = s.apply(&Term::Var(k, n.clone()));
            (base_var_name(&n).into(), value)
        })
        .collect()
}

fn dedupe(answers: Vec<Answer>) -> Vec<Answer> {
    let mut out: Vec<Answer> = Vec::new();
    for a in answers {
        if !out.iter().any(|b| b.bindings == a.bindings) {
            out.push(a);
        }
    }
    out
}

/// Checks one goal with a fresh engine.
pub fn conformance_check(goal: &Fact, inputs: &EngineInputs) -> ProofResult {
    Engine::new(inputs).prove(goal)
}

/// Matches a goal directly against a set of facts.
pub fn prove_against_architecture(goal: &Fact, facts: &[Fact]) -> Vec<Subst> {
    let mut out: Vec<Subst> = Vec::new();
    for f in facts {
        for s in unify_facts(goal, f) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Entity named by the first argument of a goal, if it is a constant.
pub fn goal_subject(goal: &Fact) -> Option<String> {
    match goal.subject().and_then(as_entity) {
        Some(Term::EntityConst(e)) => Some(e),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::parse_architecture;
    use crate::atom::ActionKind;
    use alloc::string::ToString;

    fn inputs(src: &str) -> EngineInputs {
        let a = parse_architecture(src).unwrap().architecture;
        EngineInputs::with_unique(&a, Vec::new(), DEFAULT_MAX_CRYPTO_DEPTH)
    }

    fn has(e: &str, d: Term) -> Fact {
        Fact::new(Pred::Has, vec![Term::entity(e), d])
    }

    #[test]
    fn direct_reception() {
        let i = inputs("RECEIVEAT(sp,name,client,Time(t))");
        let r = conformance_check(&has("sp", Term::simple("name")), &i);
        assert!(r.proved);
        let d = r.derivation.unwrap();
        assert_eq!(d.rule_name(), Some("P4"));
        assert_eq!(d.depth(), 1);
    }

    #[test]
    fn decryption_with_owned_key() {
        let i = inputs("RECEIVEAT(sp,Senc(name,key),client,Time(t))\nOWN(sp,key)");
        let r = conformance_check(&has("sp", Term::simple("name")), &i);
        assert!(r.proved);
        let d = r.derivation.unwrap();
        assert_eq!(d.rule_name(), Some("P8"));
        let Derivation::Rule { children, .. } = &*d else { panic!() };
        let names: Vec<_> = children.iter().map(|c| c.rule_name().unwrap().to_string()).collect();
        assert_eq!(names, vec!["P4", "P3"]);
    }

    #[test]
    fn no_key_no_data() {
        let i = inputs("RECEIVEAT(sp,Senc(name,key),client,Time(t))");
        assert!(!conformance_check(&has("sp", Term::simple("name")), &i).proved);
    }

    #[test]
    fn depth_zero_blocks_decryption() {
        let a = parse_architecture("RECEIVE(sp,Senc(name,key))\nOWN(sp,key)").unwrap().architecture;
        let i = EngineInputs::with_unique(&a, Vec::new(), 0);
        assert!(!conformance_check(&has("sp", Term::simple("name")), &i).proved);
    }

    #[test]
    fn record_component_inside_encryption() {
        let i = inputs("RECEIVE(sp,Senc(Account(name,address),k))\nOWN(sp,k)");
        assert!(conformance_check(&has("sp", Term::simple("address")), &i).proved);
        let link = Fact::new(Pred::Link, vec![Term::entity("sp"), Term::simple("address"), Term::simple("name")]);
        assert!(conformance_check(&link, &i).proved);
    }

    #[test]
    fn trivial_facts_and_access_fallback() {
        let i = inputs("HASACCESSTO(sp,{mainstorage})\nRECEIVE(mainstorage,Account(name,address),sp)");
        let r = conformance_check(&has("sp", Term::simple("name")), &i);
        assert!(r.proved);
        assert_eq!(r.via_access.as_deref(), Some("mainstorage"));
    }

    #[test]
    fn keep_period_answers() {
        let i = inputs("STOREAT(mainstorage,name,client,Time(t))\nDELETEWITHIN(mainstorage,name,client,Time(10y))");
        let g = Fact::new(
            Pred::HasUpTo,
            vec![Term::entity("mainstorage"), Term::simple("name"), Term::time(Term::delay_var("DD"))],
        );
        let r = conformance_check(&g, &i);
        assert!(r.proved);
        assert_eq!(r.answers.len(), 1);
        assert_eq!(r.answers[0].get("DD").unwrap().to_string(), "10y");
    }

    #[test]
    fn actions_are_matched_directly() {
        let i = inputs("STORE(mainstorage,name,client)");
        let g = Fact::action(
            ActionKind::Store,
            vec![Term::entity("mainstorage"), Term::simple("name"), Term::entity_var("E")],
        );
        assert!(conformance_check(&g, &i).proved);
    }

    #[test]
    fn steps_stay_under_ceiling() {
        let i = inputs("RECEIVE(sp,Senc(Senc(Account(name,address),k1),k2))\nOWN(sp,k1)\nOWN(sp,k2)");
        for d in ["name", "address", "k1", "nothing"] {
            let r = conformance_check(&has("sp", Term::simple(d)), &i);
            assert!(!r.exhausted);
            assert!(r.steps <= i.step_ceiling());
        }
    }
}
