use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use cryptosplit::constraint::ConstraintSet;
use cryptosplit::lp::{build_lp, solve_exact, verify_certificate, LpSolution, Verdict};
use serde_json::json;

use crate::output::Outcome;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Constraint set JSON.
    #[arg(long)]
    pub constraints: PathBuf,
    /// Claimed LP solution JSON; solved from scratch when absent.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Report the raw root value instead of dividing by the root's total mass.
    #[arg(long)]
    pub no_normalize: bool,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Everything past reading the files counts as verification: a malformed or
/// invalid set is an unverified certificate, not a usage error.
fn check(constraints: &str, solution: Option<&str>, normalize: bool) -> cryptosplit::Result<(Verdict, bool)> {
    let cs = ConstraintSet::from_json(constraints)?;
    cs.validate()?;
    let (claimed, solved) = match solution {
        Some(text) => (LpSolution::from_json(text)?, false),
        None => (solve_exact(&build_lp(&cs)?)?, true),
    };
    Ok((verify_certificate(&cs, &claimed, normalize)?, solved))
}

pub fn run(args: &VerifyArgs) -> Result<Outcome> {
    let constraints = read(&args.constraints)?;
    let solution = args.solution.as_ref().map(read).transpose()?;
    let mut report = json!({
        "command": "verify",
        "constraints": args.constraints.display().to_string(),
        "solution": args.solution.as_ref().map(|p| p.display().to_string()),
    });
    Ok(match check(&constraints, solution.as_deref(), !args.no_normalize) {
        Ok((verdict, solved)) => {
            let headline = format!("certified {} = {}", verdict.bound.exact, verdict.bound.decimal);
            report["verdict"] = json!("certified");
            report["solved_here"] = json!(solved);
            report["certificate"] = serde_json::to_value(&verdict)?;
            Outcome { headline, report, passed: true }
        }
        Err(e) => {
            report["verdict"] = json!("unverified");
            report["reason"] = json!(e.to_string());
            Outcome { headline: format!("unverified: {e}"), report, passed: false }
        }
    })
}
