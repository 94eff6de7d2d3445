use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use cryptosplit::constraint::ConstraintSet;
use cryptosplit::extract::{extract, sparsify};
use cryptosplit::lp::{build_lp, emit_lp, solve_exact, verify_certificate, ExactNumber};
use cryptosplit::protocol::ProtocolGraph;
use cryptosplit::search::run_search;
use cryptosplit::{builtin, lattice};
use serde_json::json;

use crate::output::Outcome;
use crate::search::{normalized, progress_printer, SearchConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Twobit,
    Cyclic,
    Thm29,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Search at resolution T and certify the root value.
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub t: Option<u32>,
    /// Certify a hand-written strategy instead of searching.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    #[command(flatten)]
    pub config: SearchConfig,
    /// Keep every extracted constraint instead of only the tight ones.
    #[arg(long)]
    pub no_sparsify: bool,
    /// Write constraints.json, certificate.lp, solution.json, verdict.json
    /// (and protocol.json after a search) here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: &PipelineArgs, progress: bool) -> Result<Outcome> {
    let mut search = serde_json::Value::Null;
    let mut protocol = None;
    let (source, extracted) = match (args.t, args.builtin) {
        (_, Some(b)) => {
            let (name, cs) = match b {
                Builtin::Twobit => ("twobit", builtin::twobit_constraints()),
                Builtin::Cyclic | Builtin::Thm29 => ("cyclic", builtin::cyclic_constraints()),
            };
            (name.to_string(), cs)
        }
        (Some(t), None) => {
            if t == 0 {
                bail!("T = 0 has nothing to certify");
            }
            let (table, report) = run_search::<f64>(t, &args.config.options(), &mut progress_printer(progress))?;
            let root = lattice(t, t, t, t);
            let value = *table.value(&root).expect("root is on the lattice");
            search = json!({
                "converged": report.converged,
                "rounds": report.rounds,
                "normalized": format!("{:.12}", normalized(&value, t)),
            });
            protocol = ProtocolGraph::from_provenance(&table, &root).ok();
            (format!("search T={t}"), extract(&table, &root, table.step())?)
        }
        (None, None) => unreachable!("clap requires --t or --builtin"),
    };

    let model = build_lp(&extracted)?;
    let solution = solve_exact(&model)?;
    let (certified_set, certified_solution): (ConstraintSet, _) = if args.no_sparsify {
        (extracted.clone(), solution.clone())
    } else {
        let sparse = sparsify(&extracted, &solution)?;
        let sparse_solution = solve_exact(&build_lp(&sparse)?)?;
        (sparse, sparse_solution)
    };
    let verdict = verify_certificate(&certified_set, &certified_solution, true);

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(dir, "constraints.json", &certified_set.to_json()?)?;
        write(dir, "certificate.lp", &emit_lp(&build_lp(&certified_set)?))?;
        write(dir, "solution.json", &certified_solution.to_json()?)?;
        let verdict_json = match &verdict {
            Ok(v) => serde_json::to_string_pretty(v)?,
            Err(e) => serde_json::to_string_pretty(&json!({ "certified": false, "reason": e.to_string() }))?,
        };
        write(dir, "verdict.json", &verdict_json)?;
        if let Some(graph) = &protocol {
            write(dir, "protocol.json", &graph.to_json()?)?;
        }
    }

    let mut report = json!({
        "command": "pipeline",
        "source": source,
        "root": extracted.root.to_string(),
        "constraints_extracted": extracted.len(),
        "constraints_certified": certified_set.len(),
        "method": certified_solution.method,
        "objective": ExactNumber::of(&solution.objective),
        "search": search,
    });
    let (headline, passed) = match verdict {
        Ok(v) => {
            let headline = format!("certified {} = {} ({})", v.bound.exact, v.bound.decimal, source);
            report["verdict"] = json!("certified");
            report["bound"] = serde_json::to_value(&v.bound)?;
            report["variables"] = json!(v.variables);
            (headline, true)
        }
        Err(e) => {
            report["verdict"] = json!("unverified");
            report["reason"] = json!(e.to_string());
            (format!("unverified: {e}"), false)
        }
    };
    Ok(Outcome { headline, report, passed })
}
