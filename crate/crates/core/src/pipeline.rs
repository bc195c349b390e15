//! Table interpretation end to end: profile, score, select, plan.

use thiserror::Error;

use crate::graphgen::{build_plan, select_mappings, DataGraphPlan, GraphError};
use crate::matcher::{candidate_mappings, ColumnCandidates, MatchError, SiameseModel};
use crate::profiler::{profile_table, ColumnProfile, DomainProfile, ProfileWarning};
use crate::scalar::Scalar;
use crate::tabular::DataTable;

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct Interpretation<T> {
    pub columns: Vec<ColumnProfile<T>>,
    /// Columns that could not be profiled and so stay unmapped.
    pub warnings: Vec<ProfileWarning>,
    pub candidates: Vec<ColumnCandidates<T>>,
    pub plan: DataGraphPlan,
}

pub fn interpret_table<T: Scalar>(
    table: &DataTable,
    domain: &DomainProfile<T>,
    model: &SiameseModel<T>,
    threshold: T,
) -> Result<Interpretation<T>, InterpretError> {
    let (columns, warnings) = profile_table::<T>(table);
    let candidates = candidate_mappings(&columns, domain, model, threshold)?;
    let mappings = select_mappings(&candidates)?;
    let plan = build_plan(&mappings, &domain.ontology, &domain.identifying)?;
    Ok(Interpretation {
        columns,
        warnings,
        candidates,
        plan,
    })
}
