use branchcrawler::lang::RelOp;
use branchcrawler::solver::{
    Constraint, LinExpr, PushOutcome, SolveOutcome, SolverState, SymVar, VarId,
};
use proptest::prelude::*;

const BIG: u64 = 1_000_000;

fn var(i: u32) -> LinExpr {
    LinExpr::var(VarId(i))
}

fn k(v: i64) -> LinExpr {
    LinExpr::constant(v)
}

fn vars(domains: &[(i64, i64)]) -> Vec<SymVar> {
    domains
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| SymVar {
            name: format!("x{i}"),
            lo,
            hi,
        })
        .collect()
}

fn all_models(domains: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in domains {
        out = out
            .into_iter()
            .flat_map(|m| {
                (lo..=hi).map(move |v| {
                    let mut m = m.clone();
                    m.push(v);
                    m
                })
            })
            .collect();
    }
    out
}

const OPS: [RelOp; 6] = [
    RelOp::Lt,
    RelOp::Le,
    RelOp::Eq,
    RelOp::Ne,
    RelOp::Gt,
    RelOp::Ge,
];

#[derive(Debug, Clone)]
enum Shape {
    Lin(Vec<(u32, i64)>, i64),
    Mul(u32, u32, i64),
    Div(u32, i64, i64),
    Mod(u32, i64, i64),
}

fn build(shape: &Shape, op: RelOp) -> Constraint {
    let lhs = match shape {
        Shape::Lin(terms, _) => terms.iter().fold(k(0), |acc, &(v, c)| {
            acc.add(&var(v).scale(c).unwrap()).unwrap()
        }),
        Shape::Mul(a, b, _) => var(*a).mul(&var(*b)).unwrap(),
        Shape::Div(a, d, _) => var(*a).div(&k(*d)).unwrap().unwrap(),
        Shape::Mod(a, d, _) => var(*a).rem(&k(*d)).unwrap().unwrap(),
    };
    let rhs = match shape {
        Shape::Lin(_, r) | Shape::Mul(_, _, r) | Shape::Div(_, _, r) | Shape::Mod(_, _, r) => *r,
    };
    Constraint::cmp(lhs, op, k(rhs)).unwrap()
}

fn shape(nvars: u32) -> impl Strategy<Value = Shape> {
    let v = 0..nvars;
    prop_oneof![
        4 => (prop::collection::vec((v.clone(), -3i64..=3), 1..=3), -12i64..=12).prop_map(|(t, r)| Shape::Lin(t, r)),
        1 => (v.clone(), v.clone(), -20i64..=20).prop_map(|(a, b, r)| Shape::Mul(a, b, r)),
        1 => (v.clone(), prop_oneof![-3i64..=-1, 1i64..=3], -5i64..=5).prop_map(|(a, d, r)| Shape::Div(a, d, r)),
        1 => (v, 1i64..=4, -3i64..=3).prop_map(|(a, d, r)| Shape::Mod(a, d, r)),
    ]
}

fn constraint(nvars: u32) -> impl Strategy<Value = Constraint> {
    (shape(nvars), 0..6usize).prop_map(|(s, o)| build(&s, OPS[o]))
}

fn problem() -> impl Strategy<Value = (Vec<(i64, i64)>, Vec<Constraint>)> {
    (1u32..=3).prop_flat_map(|n| {
        (
            prop::collection::vec(
                (-8i64..=8, 0i64..=12).prop_map(|(lo, w)| (lo, lo + w)),
                n as usize,
            ),
            prop::collection::vec(constraint(n), 0..=4),
        )
    })
}

fn state_with(domains: &[(i64, i64)], live: &[Constraint]) -> Option<SolverState> {
    let mut s = SolverState::init(vars(domains), Vec::new(), 0).unwrap();
    for c in live {
        if s.push(c.clone()) == PushOutcome::Inconsistent {
            return None;
        }
    }
    Some(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn solve_agrees_with_enumeration((domains, cs) in problem()) {
        let expected: Vec<Vec<i64>> = all_models(&domains)
            .into_iter()
            .filter(|m| cs.iter().all(|c| c.holds(m)))
            .collect();
        match state_with(&domains, &cs) {
            None => prop_assert!(expected.is_empty()),
            Some(mut s) => {
                // surviving intervals keep every model
                for m in &expected {
                    for (v, &(lo, hi)) in m.iter().zip(s.intervals()) {
                        prop_assert!(lo <= *v && *v <= hi);
                    }
                }
                match s.solve(BIG) {
                    SolveOutcome::Sat(m) => {
                        prop_assert!(cs.iter().all(|c| c.holds(&m)));
                        // seed 0 labels ascending in declaration order
                        prop_assert_eq!(Some(&m), expected.first());
                    }
                    SolveOutcome::Unsat => prop_assert!(expected.is_empty()),
                    SolveOutcome::Unknown { .. } => prop_assert!(false, "budget exhausted"),
                }
            }
        }
    }

    #[test]
    fn nonzero_seed_still_finds_a_model((domains, cs) in problem(), seed in 1u64..1000) {
        let any = all_models(&domains).into_iter().any(|m| cs.iter().all(|c| c.holds(&m)));
        let Ok(mut s) = SolverState::init(vars(&domains), cs.clone(), seed) else {
            prop_assert!(!any);
            return Ok(());
        };
        match s.solve(BIG) {
            SolveOutcome::Sat(m) => prop_assert!(cs.iter().all(|c| c.holds(&m))),
            SolveOutcome::Unsat => prop_assert!(!any),
            SolveOutcome::Unknown { .. } => prop_assert!(false),
        }
    }

    #[test]
    fn push_pop_matches_rebuild(
        (domains, pool) in (1u32..=3).prop_flat_map(|n| (
            prop::collection::vec((-8i64..=8, 0i64..=12).prop_map(|(lo, w)| (lo, lo + w)), n as usize),
            prop::collection::vec(constraint(n), 1..=6),
        )),
        ops in prop::collection::vec((any::<bool>(), 0usize..6), 1..40),
    ) {
        let mut s = SolverState::init(vars(&domains), Vec::new(), 0).unwrap();
        let mut live: Vec<Constraint> = Vec::new();
        for (push, pick) in ops {
            if (push || live.is_empty()) && s.is_consistent() {
                let c = pool[pick % pool.len()].clone();
                let outcome = s.push(c.clone());
                live.push(c);
                let fresh = state_with(&domains, &live);
                prop_assert_eq!(outcome == PushOutcome::Inconsistent, fresh.is_none());
                if let Some(f) = fresh {
                    prop_assert_eq!(f.intervals(), s.intervals());
                }
            } else if !live.is_empty() {
                s.pop();
                live.pop();
                let fresh = state_with(&domains, &live).expect("a prefix of a consistent stack");
                prop_assert_eq!(fresh.intervals(), s.intervals());
                prop_assert!(s.is_consistent());
            }
            prop_assert_eq!(s.depth(), live.len());
        }
        s.pop_to(0);
        prop_assert_eq!(s.intervals().to_vec(), domains);
    }
}

#[test]
fn product_with_no_factorization_is_unsat() {
    let mut s = SolverState::init(vars(&[(2, 4), (2, 4)]), Vec::new(), 0).unwrap();
    let c = Constraint::cmp(var(0).mul(&var(1)).unwrap(), RelOp::Eq, k(5)).unwrap();
    if s.push(c) == PushOutcome::Consistent {
        assert_eq!(s.solve(BIG), SolveOutcome::Unsat);
    }
    assert!(s.solve_calls() <= 1);
}

#[test]
fn sum_over_small_domains() {
    let mut s = SolverState::init(vars(&[(0, 3), (0, 3)]), Vec::new(), 0).unwrap();
    let c = Constraint::cmp(var(0).add(&var(1)).unwrap(), RelOp::Eq, k(6)).unwrap();
    assert_eq!(s.push(c), PushOutcome::Consistent);
    assert_eq!(s.intervals(), &[(3, 3), (3, 3)]);
    assert_eq!(s.solve(BIG), SolveOutcome::Sat(vec![3, 3]));
    let before = s.propagation_steps();
    s.pop();
    let c = Constraint::cmp(var(0).add(&var(1)).unwrap(), RelOp::Eq, k(7)).unwrap();
    assert_eq!(s.push(c), PushOutcome::Inconsistent);
    assert!(s.propagation_steps() > before);
    assert_eq!(s.solve_calls(), 1);
}

#[test]
fn clones_are_independent() {
    let mut a = SolverState::init(vars(&[(0, 9), (0, 9)]), Vec::new(), 0).unwrap();
    a.push(Constraint::cmp(var(0), RelOp::Gt, k(4)).unwrap());
    let mut b = a.clone();
    assert!(a.same_store(&b));
    b.push(Constraint::cmp(var(1), RelOp::Lt, k(2)).unwrap());
    assert_eq!(a.intervals(), &[(5, 9), (0, 9)]);
    assert_eq!(b.intervals(), &[(5, 9), (0, 1)]);
    a.pop();
    assert_eq!(a.intervals(), &[(0, 9), (0, 9)]);
    assert_eq!(b.depth(), 2);
    assert_eq!(b.solve(BIG), SolveOutcome::Sat(vec![5, 0]));
    assert_eq!(a.solve_calls(), 0);
}

#[test]
fn tiny_budget_reports_unknown() {
    let domains = [(0, 50), (0, 50), (0, 50)];
    let mut s = SolverState::init(vars(&domains), Vec::new(), 0).unwrap();
    // only x0 == x1 == x2 == 50 satisfies this, and products defeat bounds reasoning
    let p = var(0).mul(&var(1)).unwrap().mul(&var(2)).unwrap();
    s.push(Constraint::cmp(p, RelOp::Eq, k(125_000)).unwrap());
    assert_eq!(s.solve(3), SolveOutcome::Unknown { budget: 3 });
    assert_eq!(s.solve(BIG), SolveOutcome::Sat(vec![50, 50, 50]));
}

#[test]
fn unsat_precondition_is_reported() {
    let pre = vec![Constraint::cmp(var(0), RelOp::Gt, k(5)).unwrap()];
    assert!(SolverState::init(vars(&[(0, 3)]), pre, 0).is_err());
}
