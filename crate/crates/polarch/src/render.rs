//! Structured (JSON) report output and its parser.

use polarch_core::engine::Derivation;
use polarch_core::report::{ConformanceReport, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonReport {
    pub policy: String,
    pub architecture: String,
    pub max_crypto_depth: usize,
    pub verdicts: Vec<JsonVerdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub summary: JsonSummary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonVerdict {
    pub goal: String,
    pub sub_policy: String,
    pub polarity: String,
    /// `proved` or `unproved`.
    pub outcome: String,
    pub classification: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<JsonDerivation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonDerivation {
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// Leaf origin: architecture, trivial, purpose or unique.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<JsonDerivation>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonSummary {
    pub functional_violations: usize,
    pub privacy_violations: usize,
    pub dpr_violations: usize,
}

fn derivation(d: &Derivation) -> JsonDerivation {
    match d {
        Derivation::Rule { rule, goal, children, .. } => JsonDerivation {
            goal: goal.to_string(),
            rule: Some(rule.clone()),
            source: None,
            fact: None,
            children: children.iter().map(|c| derivation(c)).collect(),
        },
        Derivation::Leaf { goal, fact, source } => JsonDerivation {
            goal: goal.to_string(),
            rule: None,
            source: Some(source.name().into()),
            fact: (fact != goal).then(|| fact.to_string()),
            children: Vec::new(),
        },
    }
}

fn verdict(v: &Verdict) -> JsonVerdict {
    JsonVerdict {
        goal: v.goal.to_string(),
        sub_policy: v.sub_policy.name().into(),
        polarity: v.polarity.name().into(),
        outcome: if v.proved { "proved" } else { "unproved" }.into(),
        classification: v.classification.name().into(),
        detail: v.detail.clone(),
        derivation: v.derivation.as_deref().map(derivation),
    }
}

pub fn to_json_report(r: &ConformanceReport) -> JsonReport {
    JsonReport {
        policy: r.policy.clone(),
        architecture: r.architecture.clone(),
        max_crypto_depth: r.max_crypto_depth,
        verdicts: r.verdicts.iter().map(verdict).collect(),
        notes: r.notes.clone(),
        summary: JsonSummary {
            functional_violations: r.summary.functional_violations,
            privacy_violations: r.summary.privacy_violations,
            dpr_violations: r.summary.dpr_violations,
        },
    }
}

pub fn render_json(r: &ConformanceReport) -> String {
    let mut s = serde_json::to_string_pretty(&to_json_report(r)).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json_report(src: &str) -> Result<JsonReport, serde_json::Error> {
    serde_json::from_str(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_field_names() {
        let r = JsonReport {
            policy: "p".into(),
            architecture: "a".into(),
            max_crypto_depth: 3,
            verdicts: vec![JsonVerdict {
                goal: "HAS(sp,name)".into(),
                sub_policy: "possession".into(),
                polarity: "expect-unprovable".into(),
                outcome: "proved".into(),
                classification: "privacy-violation".into(),
                detail: "".into(),
                derivation: None,
            }],
            notes: vec![],
            summary: JsonSummary { functional_violations: 0, privacy_violations: 1, dpr_violations: 0 },
        };
        let text = serde_json::to_string(&r).unwrap();
        for key in ["maxCryptoDepth", "subPolicy", "privacyViolations", "dprViolations", "functionalViolations"] {
            assert!(text.contains(key), "{}", key);
        }
        assert!(!text.contains("derivation"));
        assert_eq!(parse_json_report(&text).unwrap(), r);
    }
}
