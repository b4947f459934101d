//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness and exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::ast_gen::system;
use common::ltl_oracle::{buchi_agreement, fixed_formulas, graph_agreement, random_formulas};
use common::manet_oracle::{from_state, universe_fixpoint, Dims, Net};
use common::{bundled_model, model_path, BUNDLED};
use med_core::explorer::ltl::{ltl_check, parse_ltl, DeadlockMode, LtlResult};
use med_core::explorer::{
    cbc_check, explore, find_invariant_violation, run_check, CheckOutcome, ExploreOptions,
};
use med_core::kernel::eval::Model;
use med_core::kernel::types::DEFAULT_MAX_INT;
use med_core::lang::parser::parse_system;
use med_core::lang::pretty::system_to_string;
use med_core::lang::{format_source, load};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

const DEADLOCK_SCOPE: [(&str, u32); 3] = [("NODE", 2), ("RANGE", 2), ("MSG", 1)];
const DEADLOCK_TIME: Duration = Duration::from_secs(60);
const DEADLOCK_STATES: usize = 500_000;
/// Smallest scope at which the fixed model reaches every event.
const COVERAGE_SCOPE: [(&str, u32); 3] = [("NODE", 3), ("RANGE", 1), ("MSG", 1)];
const FIX_TIME: Duration = Duration::from_secs(120);
const FIX_MIN: usize = 100;
const MUTANT_SCOPE: [(&str, u32); 3] = [("NODE", 2), ("RANGE", 1), ("MSG", 0)];
const RANDOM_CASES: usize = 200;
const LASSO_LEN: usize = 6;
const ROUNDTRIP_CASES: u32 = 1000;
const P1_READINGS: [&str; 2] = [
    "G (e(sndRREQ) => F e(sndRREP))",
    "G ([sndRREQ] => F [sndRREP])",
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model(name: &str, scope: &[(&str, u32)]) -> Model {
    bundled_model(name, scope, DEFAULT_MAX_INT)
}

fn scope_arg(scope: &[(&str, u32)]) -> String {
    scope
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn timed_check(m: &Model) -> (CheckOutcome, Duration) {
    let start = Instant::now();
    let out = run_check(m, &ExploreOptions::default(), usize::MAX).expect("explores");
    (out, start.elapsed())
}

/// A node with an unsent or unanswered request while no other node shares a
/// range with it.
fn partitioned(n: &Net) -> bool {
    let alone = |nd: u32| {
        !n.rang
            .iter()
            .any(|&(rg, a)| a == nd && n.rang.iter().any(|&(rg2, b)| rg2 == rg && b != nd))
    };
    n.req.iter().chain(&n.wait).any(|&(nd, _)| alone(nd))
}

fn c1() -> Outcome {
    let m = model("manet_buggy.evb", &DEADLOCK_SCOPE);
    let (out, t) = timed_check(&m);
    let g = &out.graph;
    ensure(!g.truncated, || "exploration truncated".into())?;
    ensure(g.len() < DEADLOCK_STATES, || format!("{} states", g.len()))?;
    ensure(t < DEADLOCK_TIME, || format!("took {t:?}"))?;
    let hits = out
        .deadlocks
        .iter()
        .filter(|tr| partitioned(&from_state(&m, tr.last_state())))
        .count();
    ensure(hits > 0, || {
        format!("{} deadlocks, none partitioned", out.deadlocks.len())
    })?;
    Ok(format!(
        "{} states, {} deadlocks, {hits} partitioned, {:.2}s",
        g.len(),
        out.deadlocks.len(),
        t.as_secs_f64()
    ))
}

fn c2() -> Outcome {
    let (out, t) = timed_check(&model("manet_fixed.evb", &COVERAGE_SCOPE));
    let c = &out.coverage;
    ensure(!out.graph.truncated, || "exploration truncated".into())?;
    ensure(c.states >= FIX_MIN && c.transitions >= FIX_MIN, || {
        format!("{} states, {} transitions", c.states, c.transitions)
    })?;
    ensure(c.deadlocked == 0 && c.violations == 0, || {
        format!("{} deadlocked, {} violations", c.deadlocked, c.violations)
    })?;
    ensure(t < FIX_TIME, || format!("took {t:?}"))?;
    Ok(format!(
        "{} states, {} transitions, 0 deadlocked, 0 violations, {:.2}s",
        c.states,
        c.transitions,
        t.as_secs_f64()
    ))
}

fn c3() -> Outcome {
    let m = model("manet_fixed.evb", &COVERAGE_SCOPE);
    let (out, _) = timed_check(&m);
    let missing = out.coverage.uncovered();
    ensure(missing.is_empty(), || format!("uncovered: {missing:?}"))?;
    Ok(format!(
        "{} events covered at {}",
        out.coverage.events.len(),
        scope_arg(&COVERAGE_SCOPE)
    ))
}

fn c4() -> Outcome {
    let m = model("manet_mutant_joinrange.evb", &MUTANT_SCOPE);
    let (out, _) = timed_check(&m);
    let trace = out.violation.as_ref().ok_or("mutant has no violation")?;
    let shallowest = (0..out.graph.len())
        .filter(|&i| out.graph.flags[i].violated)
        .map(|i| out.graph.depth[i] as usize)
        .min()
        .unwrap_or(usize::MAX);
    ensure(trace.len() == shallowest, || {
        format!(
            "trace of {} steps, shallowest violation at {shallowest}",
            trace.len()
        )
    })?;
    for name in ["manet_fixed.evb", "manet_buggy.evb"] {
        let (o, _) = timed_check(&model(name, &MUTANT_SCOPE));
        ensure(o.coverage.violations == 0, || {
            format!("{name} violates its invariant")
        })?;
    }
    Ok(format!(
        "{} violating states, minimal trace of {} steps",
        out.coverage.violations,
        trace.len()
    ))
}

fn c5() -> Outcome {
    let d = Dims {
        node: 1,
        range: 1,
        msg: 1,
    };
    let mut sizes = Vec::new();
    for (name, fixed) in [("manet_fixed.evb", true), ("manet_buggy.evb", false)] {
        let m = model(name, &[("NODE", 1), ("RANGE", 1), ("MSG", 1)]);
        let g = explore(&m, &ExploreOptions::default()).map_err(|e| e.to_string())?;
        let got: BTreeSet<Net> = g.states.iter().map(|s| from_state(&m, s)).collect();
        let (oracle, universe) = universe_fixpoint(d, fixed);
        ensure(got.len() == g.len(), || format!("{name}: duplicate states"))?;
        ensure(got == oracle, || {
            format!("{name}: {} explored vs {} oracle", got.len(), oracle.len())
        })?;
        sizes.push(format!("{name} {}/{universe}", oracle.len()));
    }
    Ok(sizes.join(", "))
}

fn p1_verdicts(
    scope: &[(&str, u32)],
) -> Result<Vec<(&'static str, DeadlockMode, &'static str)>, String> {
    let m = model("manet_fixed.evb", scope);
    let g = explore(&m, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for reading in P1_READINGS {
        let spec = parse_ltl(reading, &m.system).map_err(|d| d.message)?;
        for mode in [DeadlockMode::Stutter, DeadlockMode::Reject] {
            let r = ltl_check(&m, &g, &spec, mode).map_err(|e| e.to_string())?;
            if matches!(r.result, LtlResult::Inconclusive) {
                return Err(format!("{reading} inconclusive"));
            }
            out.push((reading, mode, r.result.as_str()));
        }
    }
    Ok(out)
}

fn c6() -> Outcome {
    let stats = graph_agreement(2024, RANDOM_CASES)?;
    ensure(stats.violated > 0 && stats.violated < stats.checks, || {
        format!("degenerate sample: {stats:?}")
    })?;
    let readme = std::fs::read_to_string(common::models_dir().join("../README.md"))
        .map_err(|e| e.to_string())?;
    let small = p1_verdicts(&DEADLOCK_SCOPE)?;
    let large = p1_verdicts(&COVERAGE_SCOPE)?;
    for ((reading, mode, a), (_, _, b)) in small.iter().zip(&large) {
        let row = format!("| `{reading}` | {mode} | {a} | {b} |");
        ensure(readme.contains(&row), || format!("README lacks row {row}"))?;
    }
    Ok(format!(
        "{} checks, {} lassos validated; P1 recorded: {}",
        stats.checks,
        stats.lassos_validated,
        large.iter().map(|v| v.2).collect::<Vec<_>>().join("/")
    ))
}

fn c7() -> Outcome {
    let mut words = 0;
    for (_, f) in fixed_formulas() {
        words += buchi_agreement(&f, LASSO_LEN)?;
    }
    for f in random_formulas(4242, RANDOM_CASES) {
        words += buchi_agreement(&f, LASSO_LEN)?;
    }
    Ok(format!(
        "{} formulas, {words} lasso words",
        5 + RANDOM_CASES
    ))
}

fn c8() -> Outcome {
    let m = model("manet_mutant_joinrange.evb", &MUTANT_SCOPE);
    let g = explore(&m, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    let cbc = cbc_check(&m, usize::MAX).map_err(|e| e.to_string())?;
    let reported: BTreeSet<_> = cbc
        .entries
        .iter()
        .filter(|e| e.violated.is_some())
        .map(|e| {
            (
                e.state.clone(),
                e.event.clone(),
                e.binding.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>(),
            )
        })
        .collect();
    let mut entering = 0;
    let mut reached = BTreeSet::new();
    for t in &g.transitions {
        let (src, dst) = (t.src as usize, t.dst as usize);
        if g.flags[src].violated || !g.flags[dst].violated {
            continue;
        }
        entering += 1;
        reached.insert(dst);
        let key = (
            g.states[src].clone(),
            m.system.events[t.event as usize].name.name.to_string(),
            t.binding.clone(),
        );
        ensure(reported.contains(&key), || {
            format!("cbc misses {} from state {src}", key.1)
        })?;
    }
    let violating = g.flags.iter().filter(|f| f.violated).count();
    ensure(entering > 0, || "no step enters a violating state".into())?;
    // the witness of criterion 4 ends with one of those steps
    let trace = find_invariant_violation(&m, &g).ok_or("no violation")?;
    let n = trace.steps.len();
    let last = &trace.steps[n - 1];
    let key = (
        trace.steps[n - 2].state.clone(),
        last.event.clone(),
        last.binding
            .iter()
            .map(|(_, v)| v.clone())
            .collect::<Vec<_>>(),
    );
    ensure(reported.contains(&key), || {
        "cbc misses the minimal violation step".into()
    })?;
    Ok(format!(
        "{entering} steps from valid states reach {} of {violating} violating states, all among {} cbc entries",
        reached.len(),
        cbc.entries.len()
    ))
}

fn med(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_med"))
        .args(args)
        .env_remove("MED_MAX_UNIVERSE")
        .output()
        .map_err(|e| e.to_string())?;
    match o.status.code() {
        Some(0 | 1) => Ok(o.stdout),
        c => Err(format!("{args:?} exited with {c:?}")),
    }
}

fn c9() -> Outcome {
    let runs = [
        ("manet_buggy.evb", scope_arg(&DEADLOCK_SCOPE)),
        ("manet_fixed.evb", scope_arg(&COVERAGE_SCOPE)),
        ("manet_mutant_joinrange.evb", scope_arg(&MUTANT_SCOPE)),
        ("manet_fixed.evb", scope_arg(&MUTANT_SCOPE)),
        ("manet_buggy.evb", scope_arg(&MUTANT_SCOPE)),
    ];
    let mut bytes = 0;
    for (name, scope) in &runs {
        let path = model_path(name).display().to_string();
        let base = ["check", path.as_str(), "--scope", scope.as_str(), "--json"];
        let one = med(&base)?;
        let four = med(&[&base[..], &["--workers", "4"]].concat())?;
        ensure(one == four, || {
            format!("{name} at {scope} differs with 4 workers")
        })?;
        bytes += one.len();
    }
    Ok(format!("{} reports identical, {bytes} bytes", runs.len()))
}

fn c10() -> Outcome {
    for name in BUNDLED {
        let text = common::model_text(name);
        load(&text).map_err(|d| format!("{name}: {}", d[0].message))?;
        let once = format_source(&text).map_err(|d| format!("{name}: {d:?}"))?;
        ensure(format_source(&once).ok().as_ref() == Some(&once), || {
            format!("{name} is not a formatting fixpoint")
        })?;
        ensure(once == text, || {
            format!("{name} is not in canonical layout")
        })?;
    }
    let config = Config {
        cases: ROUNDTRIP_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&system(), |sys| {
            let text = system_to_string(&sys);
            let back = parse_system(&text)
                .map_err(|d| TestCaseError::fail(format!("{}\n{text}", d.message)))?;
            if back != sys || system_to_string(&back) != text {
                return Err(TestCaseError::fail(text));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} models, {ROUNDTRIP_CASES} generated systems",
        BUNDLED.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("deadlock reproduction", c1),
        ("fix verification", c2),
        ("coverage", c3),
        ("invariant violation demo", c4),
        ("oracle equivalence", c5),
        ("ltl checker correctness", c6),
        ("buchi translation", c7),
        ("cbc soundness", c8),
        ("determinism", c9),
        ("parser round-trip", c10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name}: {detail} [{:.1}s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
