//! Acceptance run: one PASS/FAIL line per criterion, at the stated tolerances.
//!
//! Criteria listed in `EXPECTED_RED` are known not to be met; they still print
//! FAIL with the measured numbers but do not fail the run. Every other failure
//! does. The extended large-resolution run only happens with
//! `CRYPTOSPLIT_EXTENDED=1`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cryptosplit::builtin::cyclic_constraints;
use cryptosplit::hardness::{
    check_c1_sampling, check_c2prime, check_psd, s_upper, ub_superadditive_check, GridSpec, Variant,
};
use cryptosplit::lp::{build_lp, solve_exact, verify_certificate};
use cryptosplit::position::Symmetry;
use cryptosplit::protocol::{simulate, ProtocolGraph, SimulationOptions};
use cryptosplit::scalar::{parse_rational, ratio, rational_from_f64};
use cryptosplit::search::load_table;
use cryptosplit::split::{is_allowed_split, lift_relaxed, RelaxedVariant, Split, SplitKind};
use cryptosplit::{lattice, FloatTable, Position, Rational};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Criteria that are known to fail, with the reason.
const EXPECTED_RED: &[(u32, &str)] = &[(
    3,
    "the converged fixpoint of the split/scale move set lies strictly above the target values",
)];

const CASES: u64 = 100_000;

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Check {
    Check { passed, detail: detail.into() }
}

fn cli(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_cryptosplit"))
        .args(args)
        .args(["--format", "json"])
        .output()
        .expect("cli runs");
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), report)
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn exact_lp_reproduction() -> Check {
    let start = Instant::now();
    let cs = cyclic_constraints();
    let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    let verdict = verify_certificate(&cs, &sol, true).unwrap();
    let elapsed = start.elapsed();
    let sub_a = sol.value(&lattice(7, 7, 6, 4)).cloned();
    let sub_b = sol.value(&lattice(6, 12, 6, 12).canonical()).cloned();
    let ok = sol.objective == ratio(449, 28)
        && verdict.bound_value() == ratio(449, 1344)
        && sub_a == Some(ratio(225, 28))
        && sub_b == Some(ratio(13, 1))
        && within(elapsed, Duration::from_secs(1));
    check(
        ok,
        format!(
            "objective {} (normalized {}), s(7,7,6,4) = {}, s(6,12,6,12) = {}, {:.3}s",
            sol.objective,
            verdict.bound.exact,
            sub_a.map(|v| v.to_string()).unwrap_or_default(),
            sub_b.map(|v| v.to_string()).unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn twobit_reproduction() -> Check {
    let start = Instant::now();
    let graph = ProtocolGraph::builtin("twobit").unwrap();
    let value = graph.value().unwrap();
    let normalized = graph.normalized_value().unwrap();
    let sim = simulate(&graph, &SimulationOptions { samples: 1_000_000, depth_limit: 100, seed: 7 }).unwrap();
    let elapsed = start.elapsed();
    let ok = value == ratio(4, 1)
        && graph.root_position().norm1() == ratio(12, 1)
        && normalized == ratio(1, 3)
        && (sim.success_rate - 1.0 / 3.0).abs() <= 0.0015
        && within(elapsed, Duration::from_secs(30));
    check(
        ok,
        format!(
            "graph value {value} at mass 12 (normalized {normalized}), Monte Carlo {:.6} over 10^6 samples, {:.1}s",
            sim.success_rate,
            elapsed.as_secs_f64()
        ),
    )
}

/// Runs `search --t T` through the CLI, keeping the table for later criteria.
fn cli_search(t: u32, table: &Path) -> (f64, bool, Duration) {
    let start = Instant::now();
    let t_arg = t.to_string();
    let (code, report) = cli(&["search", "--t", &t_arg, "--table-out", table.to_str().unwrap()]);
    let elapsed = start.elapsed();
    assert_eq!(code, 0, "search --t {t} failed");
    let value: f64 = report["normalized"]["decimal"].as_str().unwrap().parse().unwrap();
    (value, report["converged"].as_bool().unwrap(), elapsed)
}

fn table_reproduction(t15: &Path, t20: &Path) -> Check {
    let targets = [(15, 0.3369432925, Duration::from_secs(600), t15), (20, 0.3376146092, Duration::from_secs(3600), t20)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (t, target, limit, path) in targets {
        let (value, converged, elapsed) = cli_search(t, path);
        let good = converged && (value - target).abs() <= 1e-6 && within(elapsed, limit);
        ok &= good;
        parts.push(format!(
            "T={t}: {value:.10} vs {target:.10} (diff {:+.2e}, {:.0}s)",
            value - target,
            elapsed.as_secs_f64()
        ));
    }
    check(ok, parts.join("; "))
}

fn certified_floor() -> Check {
    let start = Instant::now();
    let (code, report) = cli(&["pipeline", "--t", "12"]);
    let elapsed = start.elapsed();
    let bound = report["bound"]["exact"].as_str().and_then(parse_rational);
    let floor = ratio(449, 1344);
    let ok = code == 0
        && report["verdict"] == "certified"
        && bound.as_ref().is_some_and(|b| *b >= floor)
        && within(elapsed, Duration::from_secs(300));
    check(
        ok,
        format!(
            "certified {} >= 449/1344, {} constraints, {:.1}s",
            bound.map(|b| b.to_string()).unwrap_or_else(|| "nothing".into()),
            report["constraints_certified"],
            elapsed.as_secs_f64()
        ),
    )
}

fn extended_run() -> Option<Check> {
    if std::env::var("CRYPTOSPLIT_EXTENDED").as_deref() != Ok("1") {
        return None;
    }
    let (code, report) = cli(&["pipeline", "--t", "50"]);
    let value: Option<f64> = report["bound"]["decimal"].as_str().and_then(|s| s.parse().ok());
    let ok = code == 0 && value.is_some_and(|v| (v - 0.3384736461).abs() <= 1e-5);
    Some(check(ok, format!("T=50 certified {value:?} vs 0.3384736461")))
}

fn hardness() -> Check {
    let start = Instant::now();
    let quarter = ratio(1, 4);
    let uniform = Position::from_abcd([quarter.clone(), quarter.clone(), quarter.clone(), quarter]);
    let at_uniform = s_upper(&uniform, Variant::Adapted);
    let c2 = check_c2prime(Variant::Adapted);
    let psd = check_psd(&GridSpec::default());
    let elapsed = start.elapsed();
    let nonneg = |m: &Option<cryptosplit::hardness::Minimum>| {
        m.as_ref().is_some_and(|m| !parse_rational(&m.value).unwrap().lt(&Rational::zero()))
    };
    let ok = at_uniform == ratio(47, 128)
        && c2.passed
        && c2.checked == 6
        && psd.passed
        && nonneg(&psd.min_h11)
        && nonneg(&psd.min_det)
        && nonneg(&psd.min_p2)
        && nonneg(&psd.min_p3)
        && nonneg(&psd.min_p4)
        && psd.tight_t_points > 0
        && psd.t_zero_at_ends
        && within(elapsed, Duration::from_secs(120));
    let min = |m: &Option<cryptosplit::hardness::Minimum>| m.as_ref().map(|m| m.value.clone()).unwrap_or_default();
    check(
        ok,
        format!(
            "s(uniform) = {at_uniform}, C2' {}/{} points, grid {}x{}x{}: min H11 {}, min det {}, min p2/p3/p4 {}/{}/{}, {} tight points, {:.1}s",
            c2.checked - c2.violations,
            c2.checked,
            psd.grid_points,
            psd.grid_points,
            psd.q_values.len(),
            min(&psd.min_h11),
            min(&psd.min_det),
            min(&psd.min_p2),
            min(&psd.min_p3),
            min(&psd.min_p4),
            psd.tight_t_points,
            elapsed.as_secs_f64()
        ),
    )
}

fn load(path: &Path) -> FloatTable {
    load_table(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap()
}

fn sandwich(table: &FloatTable) -> Check {
    let mut violations = 0;
    let mut first = None;
    for (p, v) in table.iter() {
        let value = rational_from_f64(*v).unwrap();
        let lower = Rational::from_integer(p.succ_zero().into());
        let ub = Rational::from_integer(p.ub_min().into());
        let concave = cryptosplit::hardness::s_homogeneous(&p.to_rational(), Variant::Adapted);
        if value < lower || value > ub || value > concave {
            violations += 1;
            first.get_or_insert_with(|| format!(" (first at {p}: {v})"));
        }
    }
    check(
        violations == 0,
        format!("{} positions at T=15, {violations} violations{}", table.len(), first.unwrap_or_default()),
    )
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_101);
    let ub = ub_superadditive_check(CASES, 1);

    let mut lifting_failures = 0;
    for _ in 0..CASES {
        let d: [u32; 4] = std::array::from_fn(|_| rng.gen_range(0..=20));
        let variant = RelaxedVariant::ALL[rng.gen_range(0..4)];
        if !variant.applies(&d) {
            continue;
        }
        let parts = variant.free_coords().map(|c| rng.gen_range(0..=d[c]));
        let (left, right) = variant.children(&d, parts);
        let split = Split {
            parent: Position::from_abcd(d),
            left: Position::from_abcd(left),
            right: Position::from_abcd(right),
            player: variant.sender(),
            kind: SplitKind::Relaxed { coordinate: variant.floored as u8 },
        };
        let (l, r) = lift_relaxed(&split);
        if !is_allowed_split(&split.parent.to_rational(), &l, &r, split.player) {
            lifting_failures += 1;
        }
    }

    let mut symmetry_failures = 0;
    for _ in 0..CASES {
        let p = Position::from_abcd(std::array::from_fn(|_| rng.gen_range(0..=1000u32)));
        let v = p.succ_zero();
        if p.canonical().succ_zero() != v || Symmetry::ALL.iter().any(|&g| p.apply(g).succ_zero() != v) {
            symmetry_failures += 1;
        }
    }

    let c1 = check_c1_sampling(CASES, 2, Variant::Adapted);

    let mut sigmas = Vec::new();
    for name in ["twobit", "cyclic"] {
        let graph = ProtocolGraph::builtin(name).unwrap();
        let sim = simulate(&graph, &SimulationOptions { samples: CASES, depth_limit: 200, seed: 3 }).unwrap();
        sigmas.push((name, sim.deviation_sigmas));
    }
    let ok = ub.passed
        && lifting_failures == 0
        && symmetry_failures == 0
        && c1.passed
        && sigmas.iter().all(|(_, s)| s.abs() <= 4.0);
    check(
        ok,
        format!(
            "ub_min superadditivity {} failures, relaxed lifting {lifting_failures}, succ_zero symmetry {symmetry_failures}, concavity {} failures, Monte Carlo {}",
            ub.violations,
            c1.violations,
            sigmas.iter().map(|(n, s)| format!("{n} {s:+.2} sigma")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn closed_forms(table: &FloatTable) -> Check {
    let mut applicable = 0;
    let mut mismatches = 0;
    for (p, v) in table.iter() {
        if let Some(exact) = p.closed_form_value() {
            applicable += 1;
            if *v != exact as f64 {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0 && applicable > 0, format!("{applicable} applicable positions at T=15, {mismatches} mismatches"))
}

fn main() {
    let dir = std::env::temp_dir().join(format!("cryptosplit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (t15, t20): (PathBuf, PathBuf) = (dir.join("t15.table"), dir.join("t20.table"));

    let mut unexpected = Vec::new();
    let mut report = |n: u32, title: &str, c: Option<Check>| {
        let Some(c) = c else {
            println!("criterion {n} SKIP {title}: extended run, set CRYPTOSPLIT_EXTENDED=1");
            return;
        };
        let red = EXPECTED_RED.iter().find(|(k, _)| *k == n);
        let status = if c.passed { "PASS" } else { "FAIL" };
        match (c.passed, red) {
            (false, Some((_, why))) => println!("criterion {n} {status} {title}: {} [known: {why}]", c.detail),
            (false, None) => {
                println!("criterion {n} {status} {title}: {}", c.detail);
                unexpected.push(n);
            }
            (true, _) => println!("criterion {n} {status} {title}: {}", c.detail),
        }
    };

    report(1, "exact LP of the cyclic strategy", Some(exact_lp_reproduction()));
    report(2, "two-bit protocol", Some(twobit_reproduction()));
    report(3, "converged search at T=15 and T=20", Some(table_reproduction(&t15, &t20)));
    report(4, "certified floor at T=12", Some(certified_floor()));
    report(5, "large-resolution LP value", extended_run());
    report(6, "hardness verification", Some(hardness()));
    let table = load(&t15);
    report(7, "succ_zero <= s <= upper bounds at T=15", Some(sandwich(&table)));
    report(8, "property suites", Some(property_suites()));
    report(9, "closed forms at T=15", Some(closed_forms(&table)));

    let _ = std::fs::remove_dir_all(&dir);
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
