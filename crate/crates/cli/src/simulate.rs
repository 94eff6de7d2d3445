use anyhow::{Context, Result};
use clap::Args;
use cryptosplit::protocol::{check_branch_probabilities, check_posteriors, simulate, ProtocolGraph, SimulationOptions};
use serde_json::json;

use crate::output::Outcome;

/// Largest accepted distance, in standard errors, between the empirical and the
/// exact success rate.
const SIGMAS: f64 = 4.0;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `twobit`, `cyclic` (alias `thm29`), or a protocol graph JSON file.
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moves after which a sample falls back to the zero-bit strategy.
    #[arg(long, default_value_t = 100)]
    pub depth_limit: u32,
    /// Random walks used to check the exact posteriors.
    #[arg(long, default_value_t = 1000)]
    pub posterior_paths: u64,
}

pub fn run(args: &SimulateArgs) -> Result<Outcome> {
    let graph = match ProtocolGraph::builtin(&args.protocol) {
        Some(g) => g,
        None => {
            let text = std::fs::read_to_string(&args.protocol)
                .with_context(|| format!("`{}` is neither a built-in protocol nor a readable file", args.protocol))?;
            ProtocolGraph::from_json(&text)?
        }
    };
    let opts = SimulationOptions { samples: args.samples, depth_limit: args.depth_limit, seed: args.seed };
    let sim = simulate(&graph, &opts)?;
    let branches = check_branch_probabilities(&graph);
    let posteriors = check_posteriors(&graph, args.posterior_paths, 30, args.seed);
    let within = sim.deviation_sigmas.abs() <= SIGMAS;
    let passed = within && branches.passed && posteriors.passed;
    let headline = format!(
        "{}: success rate {:.6} +- {:.6}, exact {} = {} ({:+.2} sigma, {})",
        sim.protocol,
        sim.success_rate,
        sim.standard_error,
        sim.expected.exact,
        sim.expected.decimal,
        sim.deviation_sigmas,
        if passed { "PASS" } else { "FAIL" }
    );
    let mut report = serde_json::to_value(&sim)?;
    report["command"] = json!("simulate");
    report["nodes"] = json!(graph.len());
    report["tolerance_sigmas"] = json!(SIGMAS);
    report["analytic_checks"] = json!([branches, posteriors]);
    report["verdict"] = json!(if passed { "pass" } else { "fail" });
    Ok(Outcome { headline, report, passed })
}
