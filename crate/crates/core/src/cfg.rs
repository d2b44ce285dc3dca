//! Normalized control-flow graph with atomic decisions, stable branch identifiers and the
//! static reachability relation between branches.

use std::collections::VecDeque;
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coverage::CoverageMap;
use crate::lang::{
    pretty_cond, BinOp, CheckedProgram, Cond, Expr, LValue, RelOp, Slot, Span, Stmt, StmtKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecisionId(pub u32);

/// One polarity of an atomic decision: the unit of coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId {
    pub decision: DecisionId,
    pub polarity: bool,
}

impl BranchId {
    pub fn new(decision: u32, polarity: bool) -> Self {
        BranchId {
            decision: DecisionId(decision),
            polarity,
        }
    }

    pub fn opposite(self) -> BranchId {
        BranchId {
            polarity: !self.polarity,
            ..self
        }
    }

    /// Dense index: `2 * decision` for the true branch, `+1` for the false branch.
    pub fn index(self) -> usize {
        2 * self.decision.0 as usize + usize::from(!self.polarity)
    }

    pub fn from_index(i: usize) -> BranchId {
        BranchId::new((i / 2) as u32, i.is_multiple_of(2))
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d{}:{}",
            self.decision.0,
            if self.polarity { 'T' } else { 'F' }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed branch id `{0}`")]
pub struct BadBranchId(pub String);

impl FromStr for BranchId {
    type Err = BadBranchId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadBranchId(s.to_string());
        let rest = s.strip_prefix('d').ok_or_else(bad)?;
        let (num, pol) = rest.split_once(':').ok_or_else(bad)?;
        let decision = num.parse::<u32>().map_err(|_| bad())?;
        let polarity = match pol {
            "T" => true,
            "F" => false,
            _ => return Err(bad()),
        };
        Ok(BranchId::new(decision, polarity))
    }
}

impl Serialize for BranchId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BranchId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type NodeId = usize;

/// Expression with identifiers resolved to variable slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RExpr {
    Const(i64),
    Scalar(usize),
    Index(usize, Box<RExpr>),
    Neg(Box<RExpr>),
    Bin(BinOp, Box<RExpr>, Box<RExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RTarget {
    Scalar(usize),
    Index(usize, RExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Assign {
        target: RTarget,
        value: RExpr,
    },
    Decision(DecisionId),
    /// Resets the iteration counter of a loop when it is entered from outside.
    LoopEnter(usize),
    /// Start of one loop iteration; exceeding the cap aborts the run.
    LoopBody(usize),
    Join,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
    /// Decision nodes: `[true, false]`. Exit: empty. Others: one successor.
    pub succ: Vec<NodeId>,
}

/// An atomic comparison after short-circuit decomposition.
#[derive(Debug, Clone)]
pub struct Decision {
    pub id: DecisionId,
    pub node: NodeId,
    pub op: RelOp,
    pub lhs: RExpr,
    pub rhs: RExpr,
    /// Position of the atom in the source.
    pub span: Span,
    /// Position of the enclosing `if` / `while`.
    pub stmt_span: Span,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct LoopInfo {
    pub cap: u32,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    nodes: Vec<Node>,
    entry: NodeId,
    exit: NodeId,
    decisions: Vec<Decision>,
    loops: Vec<LoopInfo>,
}

impl Cfg {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn entry(&self) -> NodeId {
        self.entry
    }

    pub fn exit(&self) -> NodeId {
        self.exit
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn decision(&self, id: DecisionId) -> &Decision {
        &self.decisions[id.0 as usize]
    }

    pub fn loops(&self) -> &[LoopInfo] {
        &self.loops
    }

    pub fn branch_count(&self) -> usize {
        2 * self.decisions.len()
    }

    pub fn branches(&self) -> impl Iterator<Item = BranchId> {
        (0..self.branch_count()).map(BranchId::from_index)
    }

    /// Node a branch leads to.
    pub fn branch_target(&self, b: BranchId) -> NodeId {
        let node = &self.nodes[self.decision(b.decision).node];
        node.succ[usize::from(!b.polarity)]
    }

    /// Decision reached by a source atom, identified by its position.
    pub fn decision_at(&self, atom: Span) -> Option<DecisionId> {
        self.decisions
            .binary_search_by(|d| d.span.cmp(&atom))
            .ok()
            .map(|i| self.decisions[i].id)
    }

    /// Decisions of each source `if`/`while`, keyed by statement position.
    pub fn source_map(&self) -> Vec<(Span, Vec<DecisionId>)> {
        let mut out: Vec<(Span, Vec<DecisionId>)> = Vec::new();
        let mut sorted: Vec<&Decision> = self.decisions.iter().collect();
        sorted.sort_by_key(|d| (d.stmt_span, d.id));
        for d in sorted {
            match out.last_mut() {
                Some((s, ids)) if *s == d.stmt_span => ids.push(d.id),
                _ => out.push((d.stmt_span, vec![d.id])),
            }
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn add_edge(&mut self, from: NodeId, to: NodeId) {
        self.nodes[from].succ.push(to);
    }

    /// Graphviz rendering.
    pub fn to_dot(&self, program: &CheckedProgram) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", program.name());
        let _ = writeln!(out, "  node [shape=box, fontname=\"monospace\"];");
        for (i, n) in self.nodes.iter().enumerate() {
            let (label, shape) = match &n.kind {
                NodeKind::Entry => ("entry".to_string(), "oval"),
                NodeKind::Exit => ("exit".to_string(), "oval"),
                NodeKind::Assign { .. } => (format!("assign @{}", n.span), "box"),
                NodeKind::Decision(d) => {
                    let dec = self.decision(*d);
                    (format!("d{}: {}", d.0, dec.text), "diamond")
                }
                NodeKind::LoopEnter(l) => (format!("loop {l} enter"), "box"),
                NodeKind::LoopBody(l) => {
                    (format!("loop {l} body (cap {})", self.loops[*l].cap), "box")
                }
                NodeKind::Join => ("join".to_string(), "point"),
            };
            let _ = writeln!(
                out,
                "  n{i} [label=\"{}\", shape={shape}];",
                label.replace('"', "\\\"")
            );
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n.kind {
                NodeKind::Decision(d) => {
                    let _ = writeln!(out, "  n{i} -> n{} [label=\"d{}:T\"];", n.succ[0], d.0);
                    let _ = writeln!(out, "  n{i} -> n{} [label=\"d{}:F\"];", n.succ[1], d.0);
                }
                _ => {
                    for s in &n.succ {
                        let _ = writeln!(out, "  n{i} -> n{s};");
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Branch table as CSV: id, decision, polarity, source position, atom text.
    pub fn branch_table_csv(&self) -> String {
        let mut out = String::from("branch,decision,polarity,line,column,atom\n");
        for b in self.branches() {
            let d = self.decision(b.decision);
            let _ = writeln!(
                out,
                "{},{},{},{},{},\"{}\"",
                b,
                d.id.0,
                if b.polarity { "true" } else { "false" },
                d.span.line,
                d.span.col,
                d.text.replace('"', "\"\"")
            );
        }
        out
    }
}

/// Lowers a checked program: `&&`/`||` become chains of atomic decisions, `!` swaps targets.
pub fn build_cfg(program: &CheckedProgram) -> Cfg {
    let mut b = Builder {
        program,
        nodes: Vec::new(),
        decisions: Vec::new(),
        loops: Vec::new(),
    };
    let exit = b.node(NodeKind::Exit, program.program().span, vec![]);
    let first = b.block(&program.program().body, exit);
    let entry = b.node(NodeKind::Entry, program.program().span, vec![first]);

    // Decision ids follow source order of the atoms.
    let mut decisions = b.decisions;
    decisions.sort_by_key(|d| d.span);
    let mut nodes = b.nodes;
    for (i, d) in decisions.iter_mut().enumerate() {
        d.id = DecisionId(i as u32);
        nodes[d.node].kind = NodeKind::Decision(d.id);
    }
    Cfg {
        nodes,
        entry,
        exit,
        decisions,
        loops: b.loops,
    }
}

struct Builder<'p> {
    program: &'p CheckedProgram,
    nodes: Vec<Node>,
    decisions: Vec<Decision>,
    loops: Vec<LoopInfo>,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind, span: Span, succ: Vec<NodeId>) -> NodeId {
        self.nodes.push(Node { kind, span, succ });
        self.nodes.len() - 1
    }

    fn block(&mut self, block: &[Stmt], next: NodeId) -> NodeId {
        block.iter().rev().fold(next, |next, s| self.stmt(s, next))
    }

    fn stmt(&mut self, s: &Stmt, next: NodeId) -> NodeId {
        match &s.kind {
            StmtKind::Skip => next,
            StmtKind::Assign { target, value } => {
                let target = match target {
                    LValue::Var(n) => match self.program.slot(n) {
                        Some(Slot::Scalar(i)) => RTarget::Scalar(i),
                        other => panic!("unresolved scalar `{n}`: {other:?}"),
                    },
                    LValue::Index(n, idx) => match self.program.slot(n) {
                        Some(Slot::Array(a)) => RTarget::Index(a, self.expr(idx)),
                        other => panic!("unresolved array `{n}`: {other:?}"),
                    },
                };
                let value = self.expr(value);
                self.node(NodeKind::Assign { target, value }, s.span, vec![next])
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let t = self.block(then_block, next);
                let f = self.block(else_block, next);
                self.cond(cond, t, f, s.span)
            }
            StmtKind::While { cond, cap, body } => {
                let loop_id = self.loops.len();
                self.loops.push(LoopInfo {
                    cap: cap.expect("validated loop cap"),
                    span: s.span,
                });
                let head = self.node(NodeKind::Join, s.span, vec![]);
                let body_entry = self.block(body, head);
                let body_node = self.node(NodeKind::LoopBody(loop_id), s.span, vec![body_entry]);
                let test = self.cond(cond, body_node, next, s.span);
                self.nodes[head].succ = vec![test];
                self.node(NodeKind::LoopEnter(loop_id), s.span, vec![head])
            }
        }
    }

    fn cond(&mut self, c: &Cond, t: NodeId, f: NodeId, stmt_span: Span) -> NodeId {
        match c {
            Cond::Cmp { op, lhs, rhs, span } => {
                let node = self.node(NodeKind::Join, *span, vec![t, f]);
                let decision = Decision {
                    id: DecisionId(u32::MAX),
                    node,
                    op: *op,
                    lhs: self.expr(lhs),
                    rhs: self.expr(rhs),
                    span: *span,
                    stmt_span,
                    text: pretty_cond(c),
                };
                self.decisions.push(decision);
                node
            }
            Cond::And(a, b) => {
                let second = self.cond(b, t, f, stmt_span);
                self.cond(a, second, f, stmt_span)
            }
            Cond::Or(a, b) => {
                let second = self.cond(b, t, f, stmt_span);
                self.cond(a, t, second, stmt_span)
            }
            Cond::Not(a) => self.cond(a, f, t, stmt_span),
        }
    }

    fn expr(&self, e: &Expr) -> RExpr {
        match e {
            Expr::Int(v) => RExpr::Const(*v),
            Expr::Var(n, _) => match self.program.slot(n) {
                Some(Slot::Scalar(i)) => RExpr::Scalar(i),
                other => panic!("unresolved scalar `{n}`: {other:?}"),
            },
            Expr::Index(n, idx, _) => match self.program.slot(n) {
                Some(Slot::Array(a)) => RExpr::Index(a, Box::new(self.expr(idx))),
                other => panic!("unresolved array `{n}`: {other:?}"),
            },
            Expr::Neg(a) => RExpr::Neg(Box::new(self.expr(a))),
            Expr::Bin(op, a, b) => RExpr::Bin(*op, Box::new(self.expr(a)), Box::new(self.expr(b))),
        }
    }
}

/// For every branch, the branches statically reachable from its target node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachSet {
    branch_count: usize,
    /// Row-major `branch_count x branch_count` matrix.
    bits: Vec<bool>,
}

impl ReachSet {
    pub fn compute(cfg: &Cfg) -> ReachSet {
        let n = cfg.branch_count();
        let mut bits = vec![false; n * n];
        let mut seen = vec![false; cfg.nodes().len()];
        for b in cfg.branches() {
            seen.iter_mut().for_each(|s| *s = false);
            let mut queue = VecDeque::from([cfg.branch_target(b)]);
            while let Some(node) = queue.pop_front() {
                if std::mem::replace(&mut seen[node], true) {
                    continue;
                }
                let nd = &cfg.nodes()[node];
                if let NodeKind::Decision(d) = nd.kind {
                    bits[b.index() * n + BranchId::new(d.0, true).index()] = true;
                    bits[b.index() * n + BranchId::new(d.0, false).index()] = true;
                }
                queue.extend(nd.succ.iter().copied());
            }
        }
        ReachSet {
            branch_count: n,
            bits,
        }
    }

    pub fn reaches(&self, from: BranchId, to: BranchId) -> bool {
        self.bits[from.index() * self.branch_count + to.index()]
    }

    pub fn reached_from(&self, from: BranchId) -> impl Iterator<Item = BranchId> + '_ {
        let row =
            &self.bits[from.index() * self.branch_count..(from.index() + 1) * self.branch_count];
        row.iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| BranchId::from_index(i))
    }

    /// True iff `branch` is uncovered or statically leads to an uncovered branch.
    pub fn can_lead_to_uncovered(&self, branch: BranchId, coverage: &CoverageMap) -> bool {
        !coverage.is_covered(branch) || self.reached_from(branch).any(|b| !coverage.is_covered(b))
    }
}
