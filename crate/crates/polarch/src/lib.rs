//! Command-line front end: reads policy, architecture and trace files,
//! runs the checks from `polarch_core` and renders the results.

pub mod render;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use polarch_core::arch::{check_well_formed_arch, parse_architecture, Architecture};
use polarch_core::engine::{Engine, EngineInputs, DEFAULT_MAX_CRYPTO_DEPTH};
use polarch_core::facts::{generate_purpose_facts, generate_trivial_facts, generate_unique_facts};
use polarch_core::goals::{generate_goals, purpose_audit_goals, render_goals};
use polarch_core::policy::{check_well_formed_policy, parse_policy, Policy};
use polarch_core::report::{build_report, classify_results, render_text, ConformanceReport};
use polarch_core::rules::{build_rulesets, render_rules};
use polarch_core::trace::{check_trace_compliance, parse_trace};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FINDINGS: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "polarch", version, about = "Check system architectures against data-protection policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Policy file.
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    /// Architecture file.
    #[arg(long, global = true)]
    pub arch: Option<PathBuf>,
    /// Nested cryptographic layers the prover may open.
    #[arg(long, global = true, env = "POLARCH_MAX_CRYPTO_DEPTH", default_value_t = DEFAULT_MAX_CRYPTO_DEPTH)]
    pub max_crypto_depth: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prove every policy goal against the architecture and report conformance.
    Verify(Common),
    /// Report contradictory sub-policies.
    LintPolicy(Common),
    /// Report malformed or inconsistent actions.
    LintArch(Common),
    /// Dump the facts generated from the architecture.
    Facts(Common),
    /// Dump the verification goals generated from the policy.
    Goals(Common),
    /// Dump the inference rules.
    Rules(Common),
    /// Audit an event trace against the policy.
    TraceCheck {
        #[command(flatten)]
        common: Common,
        /// Trace file, one event per line.
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError(format!("cannot read {}: {}", path.display(), e)))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError(format!("--{} is required for this command", flag)))
}

fn display_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn load_policy(path: &Path) -> Result<Policy, CliError> {
    parse_policy(&read(path)?).map_err(|e| CliError(format!("{}: {}", path.display(), e)))
}

pub fn load_arch(path: &Path, warnings: &mut Vec<String>) -> Result<Architecture, CliError> {
    let parsed = parse_architecture(&read(path)?).map_err(|e| CliError(format!("{}: {}", path.display(), e)))?;
    warnings.extend(parsed.warnings.iter().map(|w| format!("{}: {}", path.display(), w)));
    Ok(parsed.architecture)
}

/// The whole pipeline: goals, proofs, classification and report.
pub fn verify(policy: &Policy, arch: &Architecture, policy_name: &str, arch_name: &str, n: usize) -> ConformanceReport {
    let mut set = generate_goals(policy, &policy.entity_names());
    set.goals.extend(purpose_audit_goals(policy, &generate_purpose_facts(arch)));
    let inputs = EngineInputs::new(arch, policy, n);
    let mut engine = Engine::new(&inputs);
    let results: Vec<_> = set.goals.iter().map(|g| engine.prove(&g.fact)).collect();
    let verdicts = classify_results(&set.goals, &results, policy, arch).expect("one result per goal");
    build_report(policy_name, arch_name, n, verdicts, &set.notes)
}

fn lines_json(key: &str, items: &[String]) -> String {
    let mut map = serde_json::Map::new();
    map.insert(key.into(), serde_json::Value::from(items.to_vec()));
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("serializes");
    s.push('\n');
    s
}

fn listing(format: Format, key: &str, items: &[String], empty: &str) -> String {
    match format {
        Format::Json => lines_json(key, items),
        Format::Text if items.is_empty() => format!("{}\n", empty),
        Format::Text => items.iter().map(|i| format!("{}\n", i)).collect(),
    }
}

/// Output text and exit code of one command.
fn execute(cmd: &Command, warnings: &mut Vec<String>) -> Result<(String, i32), CliError> {
    match cmd {
        Command::Verify(c) => {
            let pp = need(&c.policy, "policy")?;
            let ap = need(&c.arch, "arch")?;
            let policy = load_policy(pp)?;
            let arch = load_arch(ap, warnings)?;
            warnings.extend(check_well_formed_policy(&policy).iter().map(|x| format!("policy conflict {}", x)));
            warnings.extend(check_well_formed_arch(&arch).iter().map(|x| format!("architecture: {}", x)));
            let report = verify(&policy, &arch, &display_name(pp), &display_name(ap), c.max_crypto_depth);
            let text = match c.format {
                Format::Text => render_text(&report),
                Format::Json => render::render_json(&report),
            };
            let code = if report.summary.total() == 0 { EXIT_CLEAN } else { EXIT_FINDINGS };
            Ok((text, code))
        }
        Command::LintPolicy(c) => {
            let policy = load_policy(need(&c.policy, "policy")?)?;
            let found: Vec<String> = check_well_formed_policy(&policy).iter().map(|x| x.to_string()).collect();
            let code = if found.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS };
            Ok((listing(c.format, "conflicts", &found, "no conflicts"), code))
        }
        Command::LintArch(c) => {
            let path = need(&c.arch, "arch")?;
            let parsed = parse_architecture(&read(path)?).map_err(|e| CliError(format!("{}: {}", path.display(), e)))?;
            let mut found: Vec<String> = parsed.warnings.iter().map(|w| format!("warning: {}", w)).collect();
            found.extend(check_well_formed_arch(&parsed.architecture).iter().map(|x| x.to_string()));
            let code = if found.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS };
            Ok((listing(c.format, "findings", &found, "no findings"), code))
        }
        Command::Facts(c) => {
            let arch = load_arch(need(&c.arch, "arch")?, warnings)?;
            let purposes = generate_purpose_facts(&arch);
            let mut facts: Vec<String> = generate_trivial_facts(&arch).iter().map(|f| f.to_string()).collect();
            for f in purposes.cpurp.iter().chain(&purposes.upurp).chain(&purposes.fwpurp) {
                facts.push(f.to_string());
            }
            if let Some(p) = &c.policy {
                facts.extend(generate_unique_facts(&load_policy(p)?).iter().map(|f| f.to_string()));
            }
            Ok((listing(c.format, "facts", &facts, "no facts"), EXIT_CLEAN))
        }
        Command::Goals(c) => {
            let policy = load_policy(need(&c.policy, "policy")?)?;
            let mut set = generate_goals(&policy, &policy.entity_names());
            if let Some(a) = &c.arch {
                set.goals.extend(purpose_audit_goals(&policy, &generate_purpose_facts(&load_arch(a, warnings)?)));
            }
            let text = match c.format {
                Format::Text => render_goals(&set),
                Format::Json => {
                    let goals: Vec<String> = set.goals.iter().map(|g| g.to_string()).collect();
                    lines_json("goals", &goals)
                }
            };
            Ok((text, EXIT_CLEAN))
        }
        Command::Rules(c) => {
            let rules = build_rulesets();
            let text = match c.format {
                Format::Text => render_rules(&rules),
                Format::Json => lines_json("rules", &rules.all().map(|r| r.to_string()).collect::<Vec<_>>()),
            };
            Ok((text, EXIT_CLEAN))
        }
        Command::TraceCheck { common: c, trace } => {
            let policy = load_policy(need(&c.policy, "policy")?)?;
            let events = parse_trace(&read(trace)?).map_err(|e| CliError(format!("{}: {}", trace.display(), e)))?;
            let found: Vec<String> = check_trace_compliance(&events, &policy).iter().map(|v| v.to_string()).collect();
            let code = if found.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS };
            Ok((listing(c.format, "violations", &found, "trace complies"), code))
        }
    }
}

fn out_path(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Verify(c)
        | Command::LintPolicy(c)
        | Command::LintArch(c)
        | Command::Facts(c)
        | Command::Goals(c)
        | Command::Rules(c)
        | Command::TraceCheck { common: c, .. } => c.out.as_deref(),
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, T>(argv: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutcome { exit_code: EXIT_ERROR, stdout: String::new(), stderr: text }
            } else {
                CliOutcome { exit_code: EXIT_CLEAN, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut warnings = Vec::new();
    let result = execute(&cli.command, &mut warnings);
    let mut stderr: String = warnings.iter().map(|w| format!("warning: {}\n", w)).collect();
    match result {
        Err(e) => {
            stderr.push_str(&format!("error: {}\n", e));
            CliOutcome { exit_code: EXIT_ERROR, stdout: String::new(), stderr }
        }
        Ok((text, code)) => match out_path(&cli.command) {
            None => CliOutcome { exit_code: code, stdout: text, stderr },
            Some(p) => match fs::write(p, &text) {
                Ok(()) => CliOutcome { exit_code: code, stdout: String::new(), stderr },
                Err(e) => {
                    stderr.push_str(&format!("error: cannot write {}: {}\n", p.display(), e));
                    CliOutcome { exit_code: EXIT_ERROR, stdout: String::new(), stderr }
                }
            },
        },
    }
}
