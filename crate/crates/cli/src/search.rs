use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use cryptosplit::lp::ExactNumber;
use cryptosplit::scalar::{decimal_string, parse_rational};
use cryptosplit::search::{
    run_search, save_table, PassStats, SearchOptions, SearchReport, StoredValue, Termination, UpdateOp, VisitOrder,
    DEFAULT_MEMORY_BUDGET,
};
use cryptosplit::{lattice, Rational, Scalar, ValueTable};
use serde_json::json;

use crate::output::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    F64,
    F32,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Order {
    Ascending,
    Descending,
}

/// Options shared by `search` and `pipeline`.
#[derive(Clone, Debug, Args)]
pub struct SearchConfig {
    /// Stop once a round improves no value by this much.
    #[arg(long, default_value_t = 1e-12, conflicts_with = "iterations")]
    pub epsilon: f64,
    /// Run exactly this many rounds instead of converging.
    #[arg(long)]
    pub iterations: Option<u32>,
    /// Round cap when converging.
    #[arg(long, default_value_t = 10_000)]
    pub max_rounds: u32,
    /// Try every split, even those the upper bound rules out.
    #[arg(long)]
    pub no_prune: bool,
    /// Also propagate values downwards in scaling passes.
    #[arg(long)]
    pub scale_up: bool,
    #[arg(long, value_enum, default_value = "ascending")]
    pub order: Order,
    /// Refuse tables larger than this many bytes.
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: u64,
}

impl SearchConfig {
    pub fn options(&self) -> SearchOptions {
        SearchOptions {
            termination: match self.iterations {
                Some(n) => Termination::Iterations(n),
                None => Termination::Converge { epsilon: self.epsilon },
            },
            max_rounds: self.max_rounds,
            prune: !self.no_prune,
            scale_up: self.scale_up,
            order: match self.order {
                Order::Ascending => VisitOrder::AscendingNorm,
                Order::Descending => VisitOrder::DescendingNorm,
            },
            memory_budget: self.memory_budget,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Lattice resolution T.
    #[arg(long)]
    pub t: u32,
    #[command(flatten)]
    pub config: SearchConfig,
    /// Value type of the table.
    #[arg(long, value_enum, default_value = "f64")]
    pub mode: Mode,
    /// Save the table (values and provenance) here.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
}

pub fn progress_printer(enabled: bool) -> impl FnMut(&PassStats) {
    move |p: &PassStats| {
        if enabled {
            eprintln!(
                "round {} step {} {:?}: {} improved, max gain {:.3e}",
                p.round, p.step, p.kind, p.improved, p.max_improvement
            );
        }
    }
}

/// Exact value when the table is exact, otherwise only a decimal.
fn number<V: Scalar>(v: &V, digits: usize) -> serde_json::Value {
    if V::EXACT {
        let r = parse_rational(&v.to_string()).expect("exact scalars print as fractions");
        serde_json::to_value(ExactNumber::of(&r)).expect("plain struct")
    } else {
        json!({ "decimal": format!("{:.*}", digits, v.approx()) })
    }
}

/// Normalized root value `s(T,T,T,T) / 4T`; zero at `T = 0`.
pub fn normalized<V: Scalar>(value: &V, t: u32) -> V {
    if t == 0 {
        V::zero()
    } else {
        value.clone() / V::of_u32(4 * t)
    }
}

/// Counts of the moves behind the final values, and the root's last move.
fn provenance_summary<V: Scalar>(table: &ValueTable<V>, t: u32) -> serde_json::Value {
    let (mut splits, mut relaxed, mut scales, mut scale_ups, mut leaves) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (p, _) in table.iter() {
        match table.history(&p).and_then(|h| h.last()).map(|r| &r.op) {
            None => leaves += 1,
            Some(UpdateOp::Split { floored: Some(_), .. }) => relaxed += 1,
            Some(UpdateOp::Split { .. }) => splits += 1,
            Some(UpdateOp::Scale { .. }) => scales += 1,
            Some(UpdateOp::ScaleUp { .. }) => scale_ups += 1,
        }
    }
    let root = lattice(t, t, t, t);
    let root_history = table.history(&root).unwrap_or(&[]);
    let root_move = root_history.last().map(|r| match &r.op {
        UpdateOp::Split { player, floored, .. } => {
            format!("step {}: {} by player {}", r.step, if floored.is_some() { "relaxed split" } else { "split" }, player + 1)
        }
        UpdateOp::Scale { factor } => format!("step {}: scale by {factor}", r.step),
        UpdateOp::ScaleUp { factor } => format!("step {}: scale up by {factor}", r.step),
    });
    json!({
        "records": table.record_count(),
        "final_moves": {
            "zero_bit": leaves,
            "split": splits,
            "relaxed_split": relaxed,
            "scale": scales,
            "scale_up": scale_ups,
        },
        "root_updates": root_history.len(),
        "root_last_move": root_move,
    })
}

fn search_with<V: Scalar + StoredValue>(args: &SearchArgs, progress: bool) -> Result<Outcome> {
    let t = args.t;
    let (table, report): (ValueTable<V>, SearchReport) =
        run_search(t, &args.config.options(), &mut progress_printer(progress))?;
    if let Some(path) = &args.table_out {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        save_table(&table, std::io::BufWriter::new(file))?;
    }
    let root = lattice(t, t, t, t);
    let value = table.value(&root).cloned().unwrap_or_else(V::zero);
    let norm = normalized(&value, t);
    let mode = match args.mode {
        Mode::F64 => "f64",
        Mode::F32 => "f32",
        Mode::Rational => "rational",
    };
    let norm_text = if V::EXACT {
        decimal_string(&parse_rational(&norm.to_string()).unwrap_or_else(|| Rational::from_integer(0.into())), 10)
    } else {
        format!("{}", norm.approx())
    };
    let headline = format!(
        "normalized bound {norm_text} (T={t}, {mode}, {} after {} rounds)",
        if report.converged { "converged" } else { "not converged" },
        report.rounds
    );
    let improvements: usize = report.passes.iter().map(|p| p.improved).sum();
    Ok(Outcome {
        headline,
        report: json!({
            "command": "search",
            "resolution": t,
            "mode": mode,
            "root": root.to_string(),
            "value": number(&value, 12),
            "normalized": number(&norm, 12),
            "converged": report.converged,
            "rounds": report.rounds,
            "steps": table.step(),
            "improvements": improvements,
            "passes": report.passes.iter().map(|p| json!([p.step, p.kind, p.improved])).collect::<Vec<_>>(),
            "provenance": provenance_summary(&table, t),
        }),
        passed: true,
    })
}

pub fn run(args: &SearchArgs, progress: bool) -> Result<Outcome> {
    match args.mode {
        Mode::F64 => search_with::<f64>(args, progress),
        Mode::F32 => search_with::<f32>(args, progress),
        Mode::Rational => search_with::<Rational>(args, progress),
    }
}
