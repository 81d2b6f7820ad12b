//! Control-flow graphs over statements.
//!
//! Each top-level program and each function body gets its own graph. Loop
//! headers always start a fresh block holding only the condition check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::lang::{NodeId, Program, Stmt, StmtKind};

pub type BlockId = usize;

/// One step inside a basic block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Instr {
    /// A simple statement, executed in full.
    Stmt { stmt: NodeId },
    /// Evaluation of a branching condition: arm `arm` of an `if`, or the
    /// header check of a loop (arm 0). Always the last instruction.
    Cond { stmt: NodeId, arm: usize },
}

impl Instr {
    pub fn stmt(&self) -> NodeId {
        match self {
            Instr::Stmt { stmt } | Instr::Cond { stmt, .. } => *stmt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Fallthrough,
    TrueBranch,
    FalseBranch,
    LoopBack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Target {
    Block(BlockId),
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: Target,
    pub kind: EdgeKind,
    /// Outcome of the source block's final condition that selects this
    /// edge. Kept separately from `kind` because a loop-back edge can also
    /// be the false branch of an `if` ending the body.
    pub branch: Option<bool>,
}

/// A way out of a loop: the header's false branch or a `break`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExitPoint {
    pub from: BlockId,
    pub branch: Option<bool>,
}

fn branch_of(kind: EdgeKind) -> Option<bool> {
    match kind {
        EdgeKind::TrueBranch => Some(true),
        EdgeKind::FalseBranch => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub id: BlockId,
    pub instrs: Vec<Instr>,
    pub reachable: bool,
}

impl Block {
    pub fn node_ids(&self) -> Vec<NodeId> {
        self.instrs.iter().map(Instr::stmt).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cfg {
    /// Block 0 is the entry.
    pub blocks: Vec<Block>,
    pub edges: Vec<Edge>,
    pub loop_headers: BTreeMap<BlockId, NodeId>,
    /// Edges leaving each loop: the header's false branch and every break.
    pub loop_exits: BTreeMap<NodeId, Vec<ExitPoint>>,
    /// Parameters, for function graphs.
    pub params: Vec<String>,
    /// The function this graph belongs to, `None` for the top level.
    pub function: Option<String>,
}

impl Cfg {
    pub const ENTRY: BlockId = 0;

    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == b)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == Target::Block(b))
    }

    pub fn header_of(&self, loop_id: NodeId) -> Option<BlockId> {
        self.loop_headers.iter().find(|(_, l)| **l == loop_id).map(|(b, _)| *b)
    }

    /// The block containing an instruction for this statement.
    pub fn block_of(&self, stmt: NodeId) -> Option<BlockId> {
        self.blocks.iter().find(|b| b.instrs.iter().any(|i| i.stmt() == stmt)).map(|b| b.id)
    }

    /// Reverse postorder of the blocks reachable from the entry.
    pub fn reverse_postorder(&self) -> Vec<BlockId> {
        let mut seen = vec![false; self.blocks.len()];
        let mut order = Vec::new();
        let mut stack: Vec<(BlockId, Vec<BlockId>)> = Vec::new();
        let succs = |b: BlockId| -> Vec<BlockId> {
            self.successors(b)
                .filter_map(|e| match e.to {
                    Target::Block(t) => Some(t),
                    Target::Exit => None,
                })
                .collect()
        };
        seen[Self::ENTRY] = true;
        stack.push((Self::ENTRY, succs(Self::ENTRY)));
        while let Some((b, pending)) = stack.last_mut() {
            if let Some(next) = pending.pop() {
                if !seen[next] {
                    seen[next] = true;
                    let s = succs(next);
                    stack.push((next, s));
                }
            } else {
                order.push(*b);
                stack.pop();
            }
        }
        order.reverse();
        order
    }

    /// Dominator sets for reachable blocks; unreachable blocks get an
    /// empty set.
    pub fn dominators(&self) -> Vec<BTreeSet<BlockId>> {
        let n = self.blocks.len();
        let reachable: BTreeSet<BlockId> = self.blocks.iter().filter(|b| b.reachable).map(|b| b.id).collect();
        let mut dom: Vec<BTreeSet<BlockId>> =
            (0..n).map(|b| if reachable.contains(&b) { reachable.clone() } else { BTreeSet::new() }).collect();
        dom[Self::ENTRY] = [Self::ENTRY].into();
        let order = self.reverse_postorder();
        let mut changed = true;
        while changed {
            changed = false;
            for &b in order.iter().skip(1) {
                let mut acc: Option<BTreeSet<BlockId>> = None;
                for e in self.predecessors(b) {
                    if !reachable.contains(&e.from) {
                        continue;
                    }
                    acc = Some(match acc {
                        None => dom[e.from].clone(),
                        Some(a) => a.intersection(&dom[e.from]).copied().collect(),
                    });
                }
                let mut next = acc.unwrap_or_default();
                next.insert(b);
                if next != dom[b] {
                    dom[b] = next;
                    changed = true;
                }
            }
        }
        dom
    }

    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        self.dominators()[b].contains(&a)
    }
}

/// Graph for the top-level code. Function bodies are not included; see
/// [`build_function_cfgs`].
pub fn build_cfg(program: &Program) -> Cfg {
    build(&program.statements, Vec::new(), None)
}

/// One graph per user-defined function, keyed by name.
pub fn build_function_cfgs(program: &Program) -> BTreeMap<String, Cfg> {
    program
        .statements
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FuncDef { name, params, body, .. } => {
                Some((name.clone(), build(body, params.clone(), Some(name.clone()))))
            }
            _ => None,
        })
        .collect()
}

fn build(stmts: &[Stmt], params: Vec<String>, function: Option<String>) -> Cfg {
    let mut b = Builder { blocks: vec![Vec::new()], edges: Vec::new(), loop_headers: BTreeMap::new(), loop_exits: BTreeMap::new() };
    let mut loops = Vec::new();
    let end = b.seq(stmts, Cursor::Open(Cfg::ENTRY), &mut loops);
    for (from, kind) in b.dangling(end) {
        b.edges.push(Edge { from, to: Target::Exit, kind, branch: branch_of(kind) });
    }
    let mut cfg = Cfg {
        blocks: b
            .blocks
            .into_iter()
            .enumerate()
            .map(|(id, instrs)| Block { id, instrs, reachable: false })
            .collect(),
        edges: b.edges,
        loop_headers: b.loop_headers,
        loop_exits: b.loop_exits,
        params,
        function,
    };
    let mut queue = VecDeque::from([Cfg::ENTRY]);
    cfg.blocks[Cfg::ENTRY].reachable = true;
    while let Some(x) = queue.pop_front() {
        let next: Vec<BlockId> = cfg
            .successors(x)
            .filter_map(|e| match e.to {
                Target::Block(t) => Some(t),
                Target::Exit => None,
            })
            .collect();
        for t in next {
            if !cfg.blocks[t].reachable {
                cfg.blocks[t].reachable = true;
                queue.push_back(t);
            }
        }
    }
    cfg
}

/// Where the next instruction goes: appended to an open block, or into a
/// new block reached by the listed pending edges (none if unreachable).
enum Cursor {
    Open(BlockId),
    Pending(Vec<(BlockId, EdgeKind)>),
}

struct LoopCtx {
    id: NodeId,
    header: BlockId,
}

struct Builder {
    blocks: Vec<Vec<Instr>>,
    edges: Vec<Edge>,
    loop_headers: BTreeMap<BlockId, NodeId>,
    loop_exits: BTreeMap<NodeId, Vec<ExitPoint>>,
}

impl Builder {
    fn new_block(&mut self) -> BlockId {
        self.blocks.push(Vec::new());
        self.blocks.len() - 1
    }

    fn edge(&mut self, from: BlockId, to: BlockId, kind: EdgeKind) {
        self.edges.push(Edge { from, to: Target::Block(to), kind, branch: branch_of(kind) });
    }

    fn back_edge(&mut self, from: BlockId, header: BlockId, came_as: EdgeKind) {
        self.edges.push(Edge { from, to: Target::Block(header), kind: EdgeKind::LoopBack, branch: branch_of(came_as) });
    }

    fn dangling(&self, cur: Cursor) -> Vec<(BlockId, EdgeKind)> {
        match cur {
            Cursor::Open(b) => vec![(b, EdgeKind::Fallthrough)],
            Cursor::Pending(d) => d,
        }
    }

    fn ensure_block(&mut self, cur: Cursor) -> BlockId {
        match cur {
            Cursor::Open(b) => b,
            Cursor::Pending(preds) => {
                let b = self.new_block();
                for (from, kind) in preds {
                    self.edge(from, b, kind);
                }
                b
            }
        }
    }

    fn seq(&mut self, stmts: &[Stmt], mut cur: Cursor, loops: &mut Vec<LoopCtx>) -> Cursor {
        for s in stmts {
            cur = self.stmt(s, cur, loops);
        }
        cur
    }

    fn stmt(&mut self, s: &Stmt, cur: Cursor, loops: &mut Vec<LoopCtx>) -> Cursor {
        match &s.kind {
            StmtKind::Comment(_) => cur,
            StmtKind::If { arms, else_body } => {
                let mut cond_block = self.ensure_block(cur);
                let mut outs = Vec::new();
                for (i, arm) in arms.iter().enumerate() {
                    if i > 0 {
                        let next = self.new_block();
                        self.edge(cond_block, next, EdgeKind::FalseBranch);
                        cond_block = next;
                    }
                    self.blocks[cond_block].push(Instr::Cond { stmt: s.id, arm: i });
                    let end = self.seq(&arm.body, Cursor::Pending(vec![(cond_block, EdgeKind::TrueBranch)]), loops);
                    outs.extend(self.dangling(end));
                }
                match else_body {
                    Some(e) => {
                        let end = self.seq(&e.body, Cursor::Pending(vec![(cond_block, EdgeKind::FalseBranch)]), loops);
                        outs.extend(self.dangling(end));
                    }
                    None => outs.push((cond_block, EdgeKind::FalseBranch)),
                }
                Cursor::Pending(outs)
            }
            StmtKind::While { body, .. } | StmtKind::ForRange { body, .. } => {
                let header = match cur {
                    Cursor::Open(b) if self.blocks[b].is_empty() && b == Cfg::ENTRY => b,
                    other => {
                        let h = self.new_block();
                        for (from, kind) in self.dangling(other) {
                            self.edge(from, h, kind);
                        }
                        h
                    }
                };
                self.blocks[header].push(Instr::Cond { stmt: s.id, arm: 0 });
                self.loop_headers.insert(header, s.id);
                loops.push(LoopCtx { id: s.id, header });
                let end = self.seq(body, Cursor::Pending(vec![(header, EdgeKind::TrueBranch)]), loops);
                for (from, kind) in self.dangling(end) {
                    self.back_edge(from, header, kind);
                }
                loops.pop();
                let exits = self.loop_exits.entry(s.id).or_default();
                exits.insert(0, ExitPoint { from: header, branch: Some(false) });
                let pending: Vec<(BlockId, EdgeKind)> = exits
                    .iter()
                    .map(|e| (e.from, if e.branch == Some(false) { EdgeKind::FalseBranch } else { EdgeKind::Fallthrough }))
                    .collect();
                Cursor::Pending(pending)
            }
            StmtKind::Break => {
                let b = self.ensure_block(cur);
                self.blocks[b].push(Instr::Stmt { stmt: s.id });
                let ctx = loops.last().expect("parser rejects break outside a loop");
                self.loop_exits
                    .entry(ctx.id)
                    .or_default()
                    .push(ExitPoint { from: b, branch: None });
                Cursor::Pending(Vec::new())
            }
            StmtKind::Continue => {
                let b = self.ensure_block(cur);
                self.blocks[b].push(Instr::Stmt { stmt: s.id });
                let header = loops.last().expect("parser rejects continue outside a loop").header;
                self.back_edge(b, header, EdgeKind::Fallthrough);
                Cursor::Pending(Vec::new())
            }
            StmtKind::Return(_) => {
                let b = self.ensure_block(cur);
                self.blocks[b].push(Instr::Stmt { stmt: s.id });
                self.edges.push(Edge { from: b, to: Target::Exit, kind: EdgeKind::Fallthrough, branch: None });
                Cursor::Pending(Vec::new())
            }
            _ => {
                let b = self.ensure_block(cur);
                self.blocks[b].push(Instr::Stmt { stmt: s.id });
                Cursor::Open(b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn single_statement() {
        let cfg = build_cfg(&parse("x = 1").unwrap());
        assert_eq!(cfg.blocks.len(), 1);
        assert!(cfg.loop_headers.is_empty());
        assert_eq!(cfg.edges, vec![Edge { from: 0, to: Target::Exit, kind: EdgeKind::Fallthrough, branch: None }]);
    }

    #[test]
    fn yes_no_loop_has_three_blocks() {
        let p = parse(crate::fixtures::ORIGINAL_LOOP).unwrap();
        let cfg = build_cfg(&p);
        assert_eq!(cfg.blocks.len(), 3);
        assert_eq!(cfg.loop_headers.get(&1), Some(&p.statements[1].id));
        assert!(cfg.edges.iter().any(|e| e.from == 2 && e.to == Target::Block(1) && e.kind == EdgeKind::LoopBack));
        assert!(cfg.blocks.iter().all(|b| b.reachable));
    }

    #[test]
    fn loop_back_edges_target_headers() {
        let src = "i = 0\nwhile i < 3:\n    if i == 1:\n        i += 2\n        continue\n    i += 1\n    for j in range(2):\n        break\n";
        let cfg = build_cfg(&parse(src).unwrap());
        for e in cfg.edges.iter().filter(|e| e.kind == EdgeKind::LoopBack) {
            let Target::Block(t) = e.to else { panic!("loop-back to exit") };
            assert!(cfg.loop_headers.contains_key(&t));
        }
        assert_eq!(cfg.loop_headers.len(), 2);
    }

    #[test]
    fn code_after_break_is_unreachable() {
        let cfg = build_cfg(&parse("while True:\n    break\n    x = 1\n").unwrap());
        assert!(cfg.blocks.iter().any(|b| !b.reachable && !b.instrs.is_empty()));
    }

    #[test]
    fn functions_get_separate_graphs() {
        let p = parse("def f(a):\n    return a\nx = f(1)\n").unwrap();
        let fns = build_function_cfgs(&p);
        assert_eq!(fns["f"].params, vec!["a".to_string()]);
        assert_eq!(build_cfg(&p).blocks[0].instrs.len(), 2);
    }
}
