//! Reaching definitions.
//!
//! Definitions are assignments, augmented assignments, `for` loop headers
//! (which bind their variable) and function parameters (attributed to the
//! `def` statement). Use sites are `Name` expressions; the implicit read in
//! `x += e` is attributed to the statement itself.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::cfg::{Cfg, Instr};
use super::StmtIndex;
use crate::lang::{Expr, ExprKind, NodeId, SourceSpan, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UseSite {
    pub node: NodeId,
    pub name: String,
    pub span: SourceSpan,
    /// Statement whose evaluation performs the read.
    pub stmt: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReachingDefs {
    /// Use site → definitions that may reach it.
    pub uses: BTreeMap<NodeId, BTreeSet<NodeId>>,
    pub sites: BTreeMap<NodeId, UseSite>,
    /// Definition node → variable names it binds.
    pub defs: BTreeMap<NodeId, Vec<String>>,
}

impl ReachingDefs {
    pub fn reaching(&self, use_site: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.uses.get(&use_site)
    }

    /// Reachable uses that no definition reaches.
    pub fn unassigned_uses(&self) -> Vec<&UseSite> {
        self.uses
            .iter()
            .filter(|(_, d)| d.is_empty())
            .filter_map(|(u, _)| self.sites.get(u))
            .collect()
    }

    pub(crate) fn merge(&mut self, other: ReachingDefs) {
        self.uses.extend(other.uses);
        self.sites.extend(other.sites);
        for (k, v) in other.defs {
            self.defs.entry(k).or_default().extend(v);
        }
    }
}

type Def = (NodeId, String);

/// Names a function body treats as local: its parameters plus every name
/// it assigns.
pub fn locals_of(params: &[String], body: &[Stmt]) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = params.iter().cloned().collect();
    for s in body {
        s.walk(&mut |s| match &s.kind {
            StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } => {
                out.insert(target.clone());
            }
            StmtKind::ForRange { var, .. } => {
                out.insert(var.clone());
            }
            _ => {}
        });
    }
    out
}

fn name_uses<'a>(e: &'a Expr, out: &mut Vec<(NodeId, &'a str, SourceSpan)>) {
    e.walk(&mut |x| {
        if let ExprKind::Name(n) = &x.kind {
            out.push((x.id, n, x.span));
        }
    });
}

/// Reads performed by one instruction, in evaluation order.
fn instr_uses<'a>(instr: &Instr, index: &StmtIndex<'a>) -> Vec<(NodeId, &'a str, SourceSpan)> {
    let s = index[&instr.stmt()];
    let mut out = Vec::new();
    match (instr, &s.kind) {
        (Instr::Cond { arm, .. }, StmtKind::If { arms, .. }) => name_uses(&arms[*arm].cond, &mut out),
        (Instr::Cond { .. }, StmtKind::While { cond, .. }) => name_uses(cond, &mut out),
        (Instr::Cond { .. }, StmtKind::ForRange { start, stop, step, .. }) => {
            for e in start.iter().chain(std::iter::once(stop)).chain(step.iter()) {
                name_uses(e, &mut out);
            }
        }
        (Instr::Stmt { .. }, StmtKind::AugAssign { target, value, .. }) => {
            name_uses(value, &mut out);
            out.push((s.id, target, s.span));
        }
        (Instr::Stmt { .. }, _) => {
            for e in s.own_exprs() {
                name_uses(e, &mut out);
            }
        }
        _ => {}
    }
    out
}

/// Definition made by an instruction and whether it kills earlier ones.
fn instr_def(instr: &Instr, index: &StmtIndex<'_>) -> Option<(String, bool)> {
    let s = index[&instr.stmt()];
    match (instr, &s.kind) {
        (Instr::Stmt { .. }, StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. }) => {
            Some((target.clone(), true))
        }
        // the loop variable is bound only when an iteration starts, so the
        // header adds a definition without removing the previous ones
        (Instr::Cond { .. }, StmtKind::ForRange { var, .. }) => Some((var.clone(), false)),
        _ => None,
    }
}

fn transfer(state: &mut BTreeSet<Def>, instr: &Instr, index: &StmtIndex<'_>) {
    if let Some((name, kills)) = instr_def(instr, index) {
        if kills {
            state.retain(|(_, n)| *n != name);
        }
        state.insert((instr.stmt(), name));
    }
}

/// Forward may-analysis over one graph. `def_stmt` is the `def` statement
/// for function graphs; its parameters are definitions at entry.
pub fn reaching_definitions(cfg: &Cfg, index: &StmtIndex<'_>, def_stmt: Option<NodeId>) -> ReachingDefs {
    let locals: Option<BTreeSet<String>> = def_stmt.map(|id| match &index[&id].kind {
        StmtKind::FuncDef { params, body, .. } => locals_of(params, body),
        _ => unreachable!("def_stmt must be a function definition"),
    });
    let mut entry_state: BTreeSet<Def> = BTreeSet::new();
    let mut result = ReachingDefs::default();
    if let Some(id) = def_stmt {
        for p in &cfg.params {
            entry_state.insert((id, p.clone()));
        }
        if !cfg.params.is_empty() {
            result.defs.insert(id, cfg.params.clone());
        }
    }

    let n = cfg.blocks.len();
    let mut ins: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let mut outs: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let order = cfg.reverse_postorder();
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &order {
            let mut input = if b == Cfg::ENTRY { entry_state.clone() } else { BTreeSet::new() };
            for e in cfg.predecessors(b) {
                input.extend(outs[e.from].iter().cloned());
            }
            let mut state = input.clone();
            for instr in &cfg.blocks[b].instrs {
                transfer(&mut state, instr, index);
            }
            ins[b] = input;
            if state != outs[b] {
                outs[b] = state;
                changed = true;
            }
        }
    }

    for &b in &order {
        let mut state = ins[b].clone();
        for instr in &cfg.blocks[b].instrs {
            for (node, name, span) in instr_uses(instr, index) {
                if let Some(l) = &locals {
                    if !l.contains(name) {
                        continue;
                    }
                }
                let defs: BTreeSet<NodeId> = state.iter().filter(|(_, n)| n == name).map(|(d, _)| *d).collect();
                result.uses.insert(node, defs);
                result.sites.insert(node, UseSite { node, name: name.to_string(), span, stmt: instr.stmt() });
            }
            if let Some((name, _)) = instr_def(instr, index) {
                result.defs.entry(instr.stmt()).or_default().push(name);
            }
            transfer(&mut state, instr, index);
        }
    }
    result
}
