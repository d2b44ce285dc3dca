//! Benchmark aggregation: per-cell means and deviations, DFS-relative percentages, rank
//! correlation between hopeful flips and solver calls, and strategy-ordering flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::session::SessionResult;
use crate::strategy::{Counters, StrategyKind};

pub type Metric = (&'static str, fn(&Counters) -> u64);

/// Counters carried into benchmark tables, in column order.
pub const METRICS: [Metric; 8] = [
    ("hopeful_flips", |c| c.hopeful_flips),
    ("solver_calls", |c| c.solver_calls),
    ("tests_generated", |c| c.tests_generated),
    ("flip_attempts", |c| c.flip_attempts),
    ("pruned_flips", |c| c.pruned_flips),
    ("hopeful_refuted_by_propagation", |c| {
        c.hopeful_refuted_by_propagation
    }),
    ("propagation_steps", |c| c.propagation_steps),
    ("fortuitous_coverage", |c| c.fortuitous_coverage),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat {
            mean,
            sd: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub program: String,
    pub strategy: StrategyKind,
    pub runs: usize,
    /// One entry per `METRICS` column.
    pub stats: Vec<Stat>,
}

impl BenchCell {
    pub fn mean(&self, metric: &str) -> f64 {
        self.stats[metric_index(metric)].mean
    }
}

fn metric_index(name: &str) -> usize {
    METRICS
        .iter()
        .position(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("unknown metric `{name}`"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub reference: StrategyKind,
    /// Sorted by program name, then strategy order.
    pub cells: Vec<BenchCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no {reference} results for program `{program}`")]
pub struct MissingReference {
    pub program: String,
    pub reference: StrategyKind,
}

/// Means and deviations per (program, strategy) cell.
pub fn aggregate(
    results: &[SessionResult],
    reference: StrategyKind,
) -> Result<BenchTable, MissingReference> {
    let mut groups: BTreeMap<(String, StrategyKind), Vec<&SessionResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.program.clone(), r.strategy))
            .or_default()
            .push(r);
    }
    let mut cells = Vec::new();
    for ((program, strategy), runs) in &groups {
        let stats = METRICS
            .iter()
            .map(|(_, get)| {
                Stat::of(
                    &runs
                        .iter()
                        .map(|r| get(&r.counters) as f64)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        cells.push(BenchCell {
            program: program.clone(),
            strategy: *strategy,
            runs: runs.len(),
            stats,
        });
    }
    let table = BenchTable { reference, cells };
    for p in table.programs() {
        if table.cell(&p, reference).is_none() {
            return Err(MissingReference {
                program: p,
                reference,
            });
        }
    }
    Ok(table)
}

impl BenchTable {
    pub fn programs(&self) -> Vec<String> {
        let mut out: Vec<String> = self.cells.iter().map(|c| c.program.clone()).collect();
        out.dedup();
        out
    }

    pub fn cell(&self, program: &str, strategy: StrategyKind) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.program == program && c.strategy == strategy)
    }

    /// Mean of `metric` as a percentage of the reference strategy's mean; `None` when the
    /// reference mean is zero.
    pub fn relative(&self, cell: &BenchCell, metric: &str) -> Option<f64> {
        let base = self.cell(&cell.program, self.reference)?.mean(metric);
        (base != 0.0).then(|| 100.0 * cell.mean(metric) / base)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("program,strategy,runs");
        for (name, _) in METRICS {
            let _ = write!(out, ",{name}_mean,{name}_sd");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(out, "{},{},{}", c.program, c.strategy, c.runs);
            for s in &c.stats {
                let _ = write!(out, ",{:.3},{:.3}", s.mean, s.sd);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_relative_csv(&self) -> String {
        let mut out = String::from("program,strategy");
        for (name, _) in METRICS {
            let _ = write!(out, ",{name}_pct");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(out, "{},{}", c.program, c.strategy);
            for (name, _) in METRICS {
                match self.relative(c, name) {
                    Some(p) => {
                        let _ = write!(out, ",{p:.1}");
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Ranks with ties sharing their average position (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Rho(f64),
    /// Fewer than three strategies, or a column without variation.
    Undefined,
}

/// Spearman correlation: Pearson correlation of the average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Correlation {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 3 {
        return Correlation::Undefined;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Correlation::Undefined;
    }
    Correlation::Rho(sxy / (sxx * syy).sqrt())
}

/// Per program, Spearman ρ between mean hopeful flips and mean solver calls across strategies.
pub fn correlation(table: &BenchTable) -> Vec<(String, Correlation)> {
    table
        .programs()
        .into_iter()
        .map(|p| {
            let cells: Vec<&BenchCell> = table.cells.iter().filter(|c| c.program == p).collect();
            let h: Vec<f64> = cells.iter().map(|c| c.mean("hopeful_flips")).collect();
            let s: Vec<f64> = cells.iter().map(|c| c.mean("solver_calls")).collect();
            (p, spearman(&h, &s))
        })
        .collect()
}

/// A run where a later strategy made more hopeful flips than the one it refines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingFlag {
    pub program: String,
    pub seed: u64,
    pub better: StrategyKind,
    pub worse: StrategyKind,
    pub better_hopeful: u64,
    pub worse_hopeful: u64,
}

/// Checks Lookahead ≤ Eager and Else ≤ Lookahead in hopeful flips, per program and seed.
pub fn ordering_flags(results: &[SessionResult]) -> Vec<OrderingFlag> {
    let mut by: BTreeMap<(String, u64), BTreeMap<StrategyKind, u64>> = BTreeMap::new();
    for r in results {
        by.entry((r.program.clone(), r.seed))
            .or_default()
            .insert(r.strategy, r.counters.hopeful_flips);
    }
    let pairs = [
        (StrategyKind::Lookahead, StrategyKind::Eager),
        (StrategyKind::Else, StrategyKind::Lookahead),
    ];
    let mut flags = Vec::new();
    for ((program, seed), h) in by {
        for (refined, base) in pairs {
            if let (Some(&a), Some(&b)) = (h.get(&refined), h.get(&base)) {
                if a > b {
                    flags.push(OrderingFlag {
                        program: program.clone(),
                        seed,
                        better: refined,
                        worse: base,
                        better_hopeful: a,
                        worse_hopeful: b,
                    });
                }
            }
        }
    }
    flags
}

/// Human-readable notes accompanying the benchmark CSVs.
pub fn bench_notes(table: &BenchTable, flags: &[OrderingFlag], solver_budget: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "reference strategy: {}", table.reference);
    let _ = writeln!(
        out,
        "solver budget: {solver_budget} labeling decisions per solve"
    );
    let _ = writeln!(
        out,
        "deviations: the solver is deterministic per seed, so deviations reflect variation across seeds (base seed + repetition)"
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "spearman rho (mean hopeful flips vs mean solver calls):"
    );
    for (p, c) in correlation(table) {
        match c {
            Correlation::Rho(r) => {
                let _ = writeln!(out, "  {p}: {r:.3}");
            }
            Correlation::Undefined => {
                let _ = writeln!(out, "  {p}: undefined");
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "ordering flags: {}", flags.len());
    for f in flags {
        let _ = writeln!(
            out,
            "  {} seed {}: {} made {} hopeful flips, {} made {}",
            f.program, f.seed, f.better, f.better_hopeful, f.worse, f.worse_hopeful
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_deviation() {
        let s = Stat::of(&[7.0]);
        assert_eq!((s.mean, s.sd), (7.0, 0.0));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]),
            Correlation::Rho(1.0)
        );
        assert_eq!(
            spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]),
            Correlation::Rho(-1.0)
        );
        assert_eq!(spearman(&x, &[3.0; 5]), Correlation::Undefined);
        assert_eq!(spearman(&x[..2], &x[..2]), Correlation::Undefined);
    }
}
