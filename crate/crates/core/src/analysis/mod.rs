//! Static analyses over NovLang programs: control flow, reaching
//! definitions, intervals, condition classification and loop bounds.

pub mod bounds;
pub mod cfg;
pub mod condition;
pub mod domain;
pub mod intervals;
pub mod reaching;

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

pub use bounds::{loop_bound, IterationBound, NotALoop};
pub use cfg::{build_cfg, build_function_cfgs, Cfg};
pub use condition::{classify_condition, ConditionClass};
pub use domain::{AbstractEnv, AbstractValue, Bound, Interval};
pub use intervals::{interval_analysis, IntervalFacts};
pub use reaching::{reaching_definitions, ReachingDefs};

use crate::interp::{self, ExecConfig, ExecResult};
use crate::lang::{NodeId, Program, Stmt, StmtKind};

/// Statements by id.
pub type StmtIndex<'p> = HashMap<NodeId, &'p Stmt>;

pub fn stmt_index(program: &Program) -> StmtIndex<'_> {
    let mut out = HashMap::new();
    program.walk(&mut |s| {
        out.insert(s.id, s);
    });
    out
}

/// Everything the later stages need to know about one program.
#[derive(Debug)]
pub struct Analyses {
    pub program: Program,
    pub cfg: Cfg,
    pub function_cfgs: BTreeMap<String, Cfg>,
    pub reaching: ReachingDefs,
    pub intervals: IntervalFacts,
    /// Bound for every loop in the program.
    pub bounds: BTreeMap<NodeId, IterationBound>,
    /// Class of every reachable `if`/`elif`/`while` condition, keyed by
    /// the condition expression, evaluated in the state where it is tested.
    pub conditions: BTreeMap<NodeId, ConditionClass>,
    /// Class of each `while` condition on first arrival, keyed by loop.
    pub entry_conditions: BTreeMap<NodeId, ConditionClass>,
    closed_run: OnceLock<Option<ExecResult>>,
}

impl Analyses {
    pub fn new(program: &Program) -> Analyses {
        let program = program.clone();
        let index = stmt_index(&program);
        let cfg = build_cfg(&program);
        let function_cfgs = build_function_cfgs(&program);
        let mut reaching = reaching_definitions(&cfg, &index, None);
        let mut intervals = interval_analysis(&cfg, &index);
        for s in &program.statements {
            if let StmtKind::FuncDef { name, .. } = &s.kind {
                let fcfg = &function_cfgs[name];
                reaching.merge(reaching_definitions(fcfg, &index, Some(s.id)));
                intervals.merge(interval_analysis(fcfg, &index));
            }
        }

        let mut conditions = BTreeMap::new();
        let mut entry_conditions = BTreeMap::new();
        program.walk(&mut |s| match &s.kind {
            StmtKind::If { arms, .. } => {
                for arm in arms {
                    if let Some(env) = intervals.arm_env.get(&arm.cond.id) {
                        conditions.insert(arm.cond.id, classify_condition(&arm.cond, env));
                    }
                }
            }
            StmtKind::While { cond, .. } => {
                if let Some(env) = intervals.before.get(&s.id) {
                    conditions.insert(cond.id, classify_condition(cond, env));
                }
                if let Some(env) = intervals.loop_entry.get(&s.id) {
                    entry_conditions.insert(s.id, classify_condition(cond, env));
                }
            }
            _ => {}
        });
        drop(index);

        let mut analyses = Analyses {
            program,
            cfg,
            function_cfgs,
            reaching,
            intervals,
            bounds: BTreeMap::new(),
            conditions,
            entry_conditions,
            closed_run: OnceLock::new(),
        };
        let mut loops = Vec::new();
        analyses.program.walk(&mut |s| {
            if s.is_loop() {
                loops.push(s.id);
            }
        });
        for id in loops {
            let b = loop_bound(&analyses, id).expect("walked node is a loop");
            analyses.bounds.insert(id, b);
        }
        analyses
    }

    /// Result of running the program with the default budget, if it reads
    /// no input. Computed at most once.
    pub fn closed_run(&self) -> Option<&ExecResult> {
        self.closed_run
            .get_or_init(|| (!self.program.uses_input()).then(|| interp::run(&self.program, &ExecConfig::default())))
            .as_ref()
    }

    pub fn bound(&self, loop_id: NodeId) -> Option<IterationBound> {
        self.bounds.get(&loop_id).copied()
    }

    pub fn index(&self) -> StmtIndex<'_> {
        stmt_index(&self.program)
    }
}
