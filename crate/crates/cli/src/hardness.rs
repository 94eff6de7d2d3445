use anyhow::Result;
use clap::Args;
use cryptosplit::hardness::{
    check_c1_sampling, check_c2prime, check_dominates_succ0, check_psd, s_upper, GridSpec, Variant,
};
use cryptosplit::lp::ExactNumber;
use cryptosplit::scalar::ratio;
use cryptosplit::Position;
use serde_json::json;

use crate::output::Outcome;

#[derive(Debug, Args)]
pub struct HardnessArgs {
    /// `adapted` (with the 8abcd term) or `brody`.
    #[arg(long, default_value = "adapted")]
    pub variant: Variant,
    /// Grid points per axis of the Hessian sweep.
    #[arg(long, default_value_t = 201)]
    pub grid: u32,
    /// The sweep uses q = 0 and q = 2^e for |e| <= this.
    #[arg(long, default_value_t = 10)]
    pub q_levels: u32,
    /// Random points for the sampled checks.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &HardnessArgs) -> Result<Outcome> {
    let quarter = ratio(1, 4);
    let uniform = Position::from_abcd([quarter.clone(), quarter.clone(), quarter.clone(), quarter]);
    let at_uniform = s_upper(&uniform, args.variant);
    let verdicts = vec![
        check_c2prime(args.variant),
        check_dominates_succ0(args.samples, args.seed, args.variant),
        check_c1_sampling(args.samples, args.seed, args.variant),
    ];
    // The closed-form Hessian belongs to the adapted function.
    let psd = (args.variant == Variant::Adapted).then(|| check_psd(&GridSpec::log_spaced(args.grid, args.q_levels)));
    let passed = verdicts.iter().all(|v| v.passed) && psd.as_ref().is_none_or(|r| r.passed);
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| v.check.as_str())
        .chain(psd.as_ref().filter(|r| !r.passed).map(|_| "hessian"))
        .collect();
    let headline = if passed {
        format!("PASS: upper bound {} at the uniform distribution", ExactNumber::of(&at_uniform).exact)
    } else {
        format!("FAIL: {}", failed.join(", "))
    };
    let report = json!({
        "command": "hardness",
        "variant": args.variant,
        "seed": args.seed,
        "upper_bound_at_uniform": ExactNumber::of(&at_uniform),
        "checks": verdicts,
        "hessian": psd,
        "verdict": if passed { "pass" } else { "fail" },
    });
    Ok(Outcome { headline, report, passed })
}
