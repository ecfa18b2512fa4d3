//! `villadsen`: batch front end over the core library.
//!
//! Every command prints one report (JSON by default, indented text with
//! `--format text`) whose top-level sections are named after the library modules
//! that produced them. Exit status: 0 on success, 2 when a verdict is
//! undetermined, 1 on input errors.

mod problems;
mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use villadsen::classify::{classify_k_contractible, classify_same_shape, invariant_tuple, Verdict};
use villadsen::exact::parse_q;
use villadsen::intertwine::{build_schedule, reverify};
use villadsen::invariants::{rc_lower_witness, rc_realization};
use villadsen::supernatural::k0_of_system;
use villadsen::system::VilladsenSystem;
use villadsen::validate::validate;
use villadsen::{Ext, Rational};

#[derive(Parser, Debug)]
#[command(name = "villadsen", version, about = "Invariants, schedules and classification for Villadsen-type systems")]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Theorem {
    /// Same-shape theorem when the coordinate data agree, otherwise the K-contractible one.
    Auto,
    SameShape,
    KContractible,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural, density and tail checks for one system file.
    Validate {
        system: PathBuf,
        /// Stages to check.
        #[arg(long, default_value_t = 8)]
        stages: usize,
        /// Density is checked on cells of this side length.
        #[arg(long, default_value = "1/4", value_parser = rational)]
        resolution: Rational,
    },
    /// gamma, mean dimension, rc, K0, simplex tag and a lower rc witness.
    Invariants {
        system: PathBuf,
        #[arg(long, default_value_t = 40)]
        depth: usize,
        /// Slack for the lower rc witness.
        #[arg(long, default_value = "1/100", value_parser = rational)]
        epsilon: Rational,
        /// Stages searched for the witness.
        #[arg(long, default_value_t = 200)]
        witness_depth: usize,
    },
    /// Decide isomorphism of two systems.
    Classify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 30)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Theorem::Auto)]
        theorem: Theorem,
    },
    /// Alternating intertwining schedule between two systems, re-verified.
    Schedule {
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated budgets, strictly decreasing with sum below 1.
        #[arg(long, default_value = "1/4,1/8,1/16", value_delimiter = ',', value_parser = rational)]
        deltas: Vec<Rational>,
        /// Largest stage index searched.
        #[arg(long, default_value_t = 200)]
        bound: usize,
    },
    /// Discretize a measure against test functions (problem file).
    TraceApprox { problem: PathBuf },
    /// Perfect matching within a radius, or a Hall violator (problem file).
    Match { problem: PathBuf },
    /// Emit a system file realizing a given radius of comparison.
    Realize {
        /// A nonnegative rational such as 3/2, or `inf`.
        #[arg(long)]
        rc: String,
    },
}

/// Failure of a run, with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

impl From<villadsen::Error> for Failure {
    fn from(e: villadsen::Error) -> Self {
        input_error(e.to_string())
    }
}

fn rational(text: &str) -> Result<Rational, String> {
    parse_q(text)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<VilladsenSystem, Failure> {
    let text = read(path)?;
    let sys: VilladsenSystem =
        toml::from_str(&text).map_err(|e| input_error(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
    sys.check().map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(sys)
}

/// The report and whether it carries an undetermined verdict.
struct Report {
    body: Value,
    undetermined: bool,
}

fn report(command: &str, inputs: &[&Path], sections: Value) -> Value {
    let mut doc = json!({
        "command": command,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if let (Some(d), Value::Object(s)) = (doc.as_object_mut(), sections) {
        d.extend(s);
    }
    doc
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn run(config: &RunConfig) -> Result<Report, Failure> {
    let body = match &config.command {
        Command::Validate { system, stages, resolution } => {
            let sys = load_system(system)?;
            if *stages == 0 {
                return Err(input_error("--stages must be positive"));
            }
            let r = validate(&sys, *stages, resolution)?;
            if !r.structural_ok() {
                let mut issues: Vec<String> = r.seed_issue.iter().cloned().collect();
                for st in &r.stages {
                    issues.extend(st.issues.iter().map(|i| format!("stage {}: {i}", st.stage)));
                }
                return Err(input_error(format!("{}: {}", system.display(), issues.join("; "))));
            }
            report("validate", &[system], json!({ "validate": to_value(&r) }))
        }
        Command::Invariants { system, depth, epsilon, witness_depth } => {
            let sys = load_system(system)?;
            if *depth == 0 || *witness_depth == 0 {
                return Err(input_error("depths must be positive"));
            }
            let tuple = invariant_tuple(&sys, *depth)?;
            let k0 = k0_of_system(&sys, *depth + 1)?;
            let witness = rc_lower_witness(&sys, epsilon, *witness_depth)?;
            report(
                "invariants",
                &[system],
                json!({
                    "invariants": to_value(&tuple),
                    "supernatural": to_value(&k0),
                    "witness": to_value(&witness),
                }),
            )
        }
        Command::Classify { a, b, depth, theorem } => {
            let (x, y) = (load_system(a)?, load_system(b)?);
            let same = match theorem {
                Theorem::Auto => x.same_coordinate_shape(&y, *depth)?,
                Theorem::SameShape => true,
                Theorem::KContractible => false,
            };
            let v = if same { classify_same_shape(&x, &y, *depth)? } else { classify_k_contractible(&x, &y, *depth)? };
            let undetermined = v.verdict == Verdict::Undetermined;
            return Ok(Report { body: report("classify", &[a, b], json!({ "classify": to_value(&v) })), undetermined });
        }
        Command::Schedule { a, b, deltas, bound } => {
            let (x, y) = (load_system(a)?, load_system(b)?);
            if *bound == 0 {
                return Err(input_error("--bound must be positive"));
            }
            let sch = build_schedule(&x, &y, deltas, *bound)?;
            let issues = reverify(&x, &y, &sch)?;
            report(
                "schedule",
                &[a, b],
                json!({
                    "intertwine": to_value(&sch),
                    "reverify": { "passed": issues.is_empty(), "issues": issues },
                }),
            )
        }
        Command::TraceApprox { problem } => {
            let p = problems::DiscretizeProblem::parse(problem, &read(problem)?).map_err(input_error)?;
            report("trace-approx", &[problem], json!({ "traces": p.solve()? }))
        }
        Command::Match { problem } => {
            let p = problems::MatchProblem::parse(problem, &read(problem)?).map_err(input_error)?;
            report("match", &[problem], json!({ "matching": p.solve()? }))
        }
        Command::Realize { rc } => {
            let r: Ext = rc.parse().map_err(|e| input_error(format!("--rc: {e}")))?;
            let sys = rc_realization(&r)?;
            let text = toml::to_string(&sys).map_err(|e| input_error(e.to_string()))?;
            // a system file, not a report
            return Ok(Report { body: Value::String(text), undetermined: false });
        }
    };
    Ok(Report { body, undetermined: false })
}

fn emit(config: &RunConfig, report: &Report) -> Result<(), Failure> {
    let text = match (&report.body, config.format) {
        (Value::String(s), _) => s.clone(),
        (v, Format::Json) => serde_json::to_string_pretty(v).expect("json") + "\n",
        (v, Format::Text) => render::text(v),
    };
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let outcome = run(&config).and_then(|r| emit(&config, &r).map(|()| r.undetermined));
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use villadsen::exact::fmt_q;

    #[test]
    fn deltas_parse_as_exact_rationals() {
        let c = RunConfig::parse_from(["villadsen", "schedule", "a", "b", "--deltas", "1/4,0.125"]);
        let Command::Schedule { deltas, .. } = c.command else { panic!() };
        assert_eq!(deltas.iter().map(fmt_q).collect::<Vec<_>>(), vec!["1/4", "1/8"]);
    }
}
