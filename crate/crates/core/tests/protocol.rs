use cryptosplit::lattice;
use cryptosplit::lp::{build_lp, solve_exact};
use cryptosplit::extract::extract;
use cryptosplit::protocol::{check_branch_probabilities, check_posteriors, simulate, ProtocolGraph, SimulationOptions};
use cryptosplit::scalar::ratio;
use cryptosplit::search::{run_search, SearchOptions};

#[test]
fn cyclic_strategy_reenters_its_head() {
    let graph = ProtocolGraph::builtin("cyclic").unwrap();
    assert_eq!(graph.value().unwrap(), ratio(449, 28));
    let heads: Vec<String> = graph
        .cycle_heads()
        .iter()
        .enumerate()
        .filter(|(_, h)| **h)
        .map(|(i, _)| graph.nodes[i].position.to_string())
        .collect();
    assert_eq!(heads, ["7,7,6,4"]);
    // Unrolling more often only helps, and stays below the limit.
    let mut last = graph.truncated_value(0);
    for l in 1..6 {
        let v = graph.truncated_value(l);
        assert!(v > last && v < ratio(449, 28));
        last = v;
    }
}

#[test]
fn builtins_pass_the_analytic_checks() {
    for name in ["twobit", "cyclic"] {
        let graph = ProtocolGraph::builtin(name).unwrap();
        assert!(check_branch_probabilities(&graph).passed);
        assert!(check_posteriors(&graph, 500, 30, 1).passed);
    }
}

#[test]
fn searched_strategy_matches_its_certificate() {
    let (table, _) = run_search::<f64>(12, &SearchOptions::default(), &mut |_| {}).unwrap();
    let root = lattice(12, 12, 12, 12);
    let graph = ProtocolGraph::from_provenance(&table, &root).unwrap();
    let cs = extract(&table, &root, table.step()).unwrap();
    let lp = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    assert_eq!(graph.value().unwrap(), lp.objective);
    let back = ProtocolGraph::from_json(&graph.to_json().unwrap()).unwrap();
    assert_eq!(back.value().unwrap(), lp.objective);
    let report = simulate(&graph, &SimulationOptions { samples: 200_000, depth_limit: 200, seed: 2 }).unwrap();
    assert!(report.deviation_sigmas.abs() <= 4.0, "{report:?}");
}

#[test]
fn depth_limit_truncates_cycles() {
    let graph = ProtocolGraph::builtin("cyclic").unwrap();
    let short = simulate(&graph, &SimulationOptions { samples: 100_000, depth_limit: 3, seed: 4 }).unwrap();
    assert!(short.truncated > 0);
    let long = simulate(&graph, &SimulationOptions { samples: 100_000, depth_limit: 1000, seed: 4 }).unwrap();
    assert!(long.truncated_fraction < 1e-3);
}

#[test]
fn seeds_reproduce_and_differ() {
    let graph = ProtocolGraph::builtin("twobit").unwrap();
    let run = |seed| simulate(&graph, &SimulationOptions { samples: 100_000, depth_limit: 10, seed }).unwrap();
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).successes, run(6).successes);
}
