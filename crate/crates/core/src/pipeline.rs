//! Source text to linked program in one call.

use std::sync::Arc;

use crate::analyzer::analyze_all;
use crate::diag::{Diagnostic, Pos};
use crate::frontend::parse_source;
use crate::lowering::{link, lower, LinkedProgram};
use crate::scheduler::{schedule, ScheduledModule};

pub struct Compiled {
    pub scheduled: Vec<ScheduledModule>,
    pub program: Arc<LinkedProgram>,
    pub warnings: Vec<Diagnostic>,
}

impl Compiled {
    pub fn module(&self, name: &str) -> Option<&ScheduledModule> {
        self.scheduled.iter().find(|m| m.name() == name)
    }
}

/// Parse, analyze and schedule every module in `source`.
pub fn front(source: &str) -> Result<Vec<ScheduledModule>, Vec<Diagnostic>> {
    let modules = parse_source(source).map_err(|e| vec![e.to_diagnostic()])?;
    let analyzed = analyze_all(&modules).map_err(|es| es.iter().map(|e| e.to_diagnostic()).collect::<Vec<_>>())?;
    Ok(analyzed.into_iter().map(schedule).collect())
}

/// Full pipeline. Errors come back as diagnostics in source order.
pub fn compile(source: &str) -> Result<Compiled, Vec<Diagnostic>> {
    let scheduled = front(source).map_err(|mut ds| {
        ds.sort_by_key(|d| d.pos);
        ds
    })?;
    let warnings = scheduled.iter().flat_map(|m| m.analyzed.warnings.iter().cloned()).collect();
    let graphs = scheduled
        .iter()
        .map(lower)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| vec![Diagnostic::error(Pos::default(), e.to_string())])?;
    let program = link(graphs).map_err(|e| vec![Diagnostic::error(Pos::default(), e.to_string())])?;
    Ok(Compiled { scheduled, program, warnings })
}
