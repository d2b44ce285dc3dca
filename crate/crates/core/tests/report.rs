use std::collections::BTreeMap;
use std::fs;

use branchcrawler::concolic::Subject;
use branchcrawler::corpus::build_corpus;
use branchcrawler::lang::load;
use branchcrawler::report::{aggregate, correlation, spearman, Correlation, METRICS};
use branchcrawler::session::{run_session, write_session_dir, SessionResult, WriteOptions};
use branchcrawler::strategy::{Budgets, StrategyKind};
use proptest::prelude::*;

const P1: &str = "fun main(x: int[-4..4]) { if (x < 0) { r = 0 - x; } else { r = x; } }";

fn template() -> SessionResult {
    let s = Subject::new(load(P1, None).unwrap()).unwrap();
    run_session(&s, StrategyKind::Dfs, Budgets::default()).unwrap()
}

fn fake(
    base: &SessionResult,
    program: &str,
    kind: StrategyKind,
    hopeful: u64,
    calls: u64,
) -> SessionResult {
    let mut r = base.clone();
    r.program = program.to_string();
    r.strategy = kind;
    r.counters.hopeful_flips = hopeful;
    r.counters.solver_calls = calls;
    r
}

fn csv_row<'a>(csv: &'a str, prefix: &str) -> Vec<&'a str> {
    csv.lines()
        .find(|l| l.starts_with(prefix))
        .unwrap()
        .split(',')
        .collect()
}

fn column(csv: &str, name: &str) -> usize {
    csv.lines()
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap()
}

#[test]
fn relative_percentage_from_means() {
    let base = template();
    let results = vec![
        fake(&base, "ANU", StrategyKind::Dfs, 152, 165),
        fake(&base, "ANU", StrategyKind::Eager, 100, 130),
        fake(&base, "ANU", StrategyKind::Eager, 100, 134),
    ];
    let table = aggregate(&results, StrategyKind::Dfs).unwrap();
    let cell = table.cell("ANU", StrategyKind::Eager).unwrap();
    assert_eq!(cell.mean("solver_calls"), 132.0);
    assert_eq!(table.relative(cell, "solver_calls"), Some(80.0));
    let rel = table.to_relative_csv();
    let col = column(&rel, "solver_calls_pct");
    assert_eq!(csv_row(&rel, "ANU,eager")[col], "80.0");
    assert_eq!(csv_row(&rel, "ANU,dfs")[col], "100.0");
    let abs = table.to_csv();
    assert_eq!(
        csv_row(&abs, "ANU,eager")[column(&abs, "solver_calls_sd")],
        "2.000"
    );
}

#[test]
fn dfs_base_fixture_round_trips_through_the_tables() {
    let base = template();
    let text = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/dfs_bases.csv"
    ))
    .unwrap();
    let mut expected = BTreeMap::new();
    let mut results = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (h, c): (u64, u64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        results.push(fake(&base, f[0], f[1].parse().unwrap(), h, c));
        expected.insert(f[0].to_string(), (h, c));
    }
    let table = aggregate(&results, StrategyKind::Dfs).unwrap();
    let abs = table.to_csv();
    let rel = table.to_relative_csv();
    for (p, (h, c)) in expected {
        let row = csv_row(&abs, &format!("{p},dfs,"));
        assert_eq!(row[column(&abs, "hopeful_flips_mean")], format!("{h}.000"));
        assert_eq!(row[column(&abs, "solver_calls_mean")], format!("{c}.000"));
        assert_eq!(row[column(&abs, "solver_calls_sd")], "0.000");
        let row = csv_row(&rel, &format!("{p},dfs,"));
        assert_eq!(row[column(&rel, "hopeful_flips_pct")], "100.0");
        assert_eq!(row[column(&rel, "solver_calls_pct")], "100.0");
    }
    assert_eq!(
        table
            .cell("A", StrategyKind::Dfs)
            .unwrap()
            .mean("hopeful_flips"),
        1427.0
    );
    assert_eq!(
        table
            .cell("A", StrategyKind::Dfs)
            .unwrap()
            .mean("solver_calls"),
        1719.0
    );
}

#[test]
fn missing_reference_is_an_error() {
    let base = template();
    let results = vec![fake(&base, "X", StrategyKind::Eager, 1, 1)];
    let err = aggregate(&results, StrategyKind::Dfs).unwrap_err();
    assert_eq!(err.program, "X");
}

#[test]
fn identical_runs_aggregate_without_deviation() {
    let base = template();
    for k in [1, 2, 7] {
        let results = vec![base.clone(); k];
        let table = aggregate(&results, StrategyKind::Dfs).unwrap();
        let cell = &table.cells[0];
        assert_eq!(cell.runs, k);
        for (i, (_, get)) in METRICS.iter().enumerate() {
            assert_eq!(cell.stats[i].mean, get(&base.counters) as f64);
            assert_eq!(cell.stats[i].sd, 0.0);
        }
    }
}

#[test]
fn co_monotone_and_reversed_columns() {
    assert_eq!(
        spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 90.0]),
        Correlation::Rho(1.0)
    );
    assert_eq!(
        spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]),
        Correlation::Rho(-1.0)
    );
    assert_eq!(
        spearman(&[1.0, 1.0, 1.0], &[3.0, 2.0, 1.0]),
        Correlation::Undefined
    );
    assert_eq!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Correlation::Undefined);
}

fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_rho(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (rx, ry) = (naive_ranks(xs), naive_ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (xs.len() >= 3 && vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn agrees(c: Correlation, naive: Option<f64>) -> bool {
    match (c, naive) {
        (Correlation::Rho(a), Some(b)) => (a - b).abs() < 1e-9,
        (Correlation::Undefined, None) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn spearman_matches_naive_ranks(pairs in prop::collection::vec((0u8..6, 0u8..6), 0..12)) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        prop_assert!(agrees(spearman(&xs, &ys), naive_rho(&xs, &ys)));
    }
}

#[test]
fn corpus_correlation_matches_naive_ranks() {
    let mut results = Vec::new();
    for entry in build_corpus() {
        let s = entry.subject().unwrap();
        for kind in StrategyKind::ALL {
            for seed in 0..2 {
                results.push(
                    run_session(
                        &s,
                        kind,
                        Budgets {
                            seed,
                            ..Budgets::default()
                        },
                    )
                    .unwrap(),
                );
            }
        }
    }
    let table = aggregate(&results, StrategyKind::Dfs).unwrap();
    let rows = correlation(&table);
    assert_eq!(rows.len(), build_corpus().len());
    for (p, c) in rows {
        let cells: Vec<_> = table.cells.iter().filter(|c| c.program == p).collect();
        let h: Vec<f64> = cells.iter().map(|c| c.mean("hopeful_flips")).collect();
        let s: Vec<f64> = cells.iter().map(|c| c.mean("solver_calls")).collect();
        assert!(agrees(c, naive_rho(&h, &s)), "{p}: {c:?}");
    }
}

fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in walk(dir) {
        let rel = e.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.insert(rel, fs::read(&e).unwrap());
    }
    out
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn session_directories_are_byte_identical() {
    let entry = build_corpus()
        .into_iter()
        .find(|e| e.name == "luhn")
        .unwrap();
    let s = entry.subject().unwrap();
    let opts = WriteOptions {
        dump_cfg: true,
        quantum_log: true,
    };
    for kind in StrategyKind::ALL {
        let dirs: Vec<_> = (0..2)
            .map(|_| {
                let d = tempfile::tempdir().unwrap();
                let r = run_session(
                    &s,
                    kind,
                    Budgets {
                        seed: 3,
                        ..Budgets::default()
                    },
                )
                .unwrap();
                write_session_dir(d.path(), &s, &entry.source, None, &r, opts).unwrap();
                d
            })
            .collect();
        let a = dir_bytes(dirs[0].path());
        assert!(a.contains_key("session.json") && a.contains_key("coverage.csv"));
        assert_eq!(a, dir_bytes(dirs[1].path()), "{kind}");
    }
}
