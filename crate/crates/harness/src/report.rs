//! Experiment drivers that produce comparison tables as CSV rows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use resilient_te::net::NetworkInstance;
use resilient_te::oracle::worst_case_optimal;
use resilient_te::prob::{
    benders_run, solve_cvar, solve_min_max, BendersOptions, CvarVariant, LossReport,
    ProbabilisticInstance,
};
use resilient_te::robust::{solve_robust, FailureSpec, Mode, ModelKind, Objective};

use crate::error::Result;

/// CLI spelling of a robust model.
pub fn model_name(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Ffc => "ffc",
        ModelKind::FfcPlus => "ffc-plus",
        ModelKind::Ls => "ls",
        ModelKind::Cls => "cls",
        ModelKind::LogicalFlow => "flow",
    }
}

pub fn objective_name(objective: Objective) -> &'static str {
    match objective {
        Objective::DemandScale => "demand-scale",
        Objective::Throughput => "throughput",
    }
}

/// One row of the robust comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub k: usize,
    pub objective: String,
    pub value: f64,
    /// `value` divided by the worst-case optimum for the same `k`, or 1 when
    /// that optimum is zero.
    pub normalized: f64,
}

/// Solves every model for every `k` and normalizes by the worst-case
/// optimum. An `oracle` row per `k` carries the optimum itself.
pub fn robust_report(
    inst: &NetworkInstance,
    models: &[ModelKind],
    ks: &[usize],
    objective: Objective,
    mode: Mode,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let (opt, _) = worst_case_optimal(inst, k, objective)?;
        // With a zero optimum every plan is zero too and already optimal.
        let norm = |v: f64| if opt > 0.0 { v / opt } else { 1.0 };
        for &m in models {
            let plan = solve_robust(inst, m, &FailureSpec::links(k), objective, mode)?;
            rows.push(ReportRow {
                model: model_name(m).into(),
                k,
                objective: objective_name(objective).into(),
                value: plan.objective,
                normalized: norm(plan.objective),
            });
        }
        rows.push(ReportRow {
            model: "oracle".into(),
            k,
            objective: objective_name(objective).into(),
            value: opt,
            normalized: norm(opt),
        });
    }
    Ok(rows)
}

/// Percentile-loss schemes compared by [`scheme_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Benders optimum of the percentile objective.
    Flomore,
    /// Per-scenario min-max loss.
    Smore,
    /// Scenario-level CVaR with static allocation.
    Teavar,
    CvarFlowAdaptive,
    CvarFlowStatic,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Flomore,
        Scheme::Smore,
        Scheme::Teavar,
        Scheme::CvarFlowAdaptive,
        Scheme::CvarFlowStatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Flomore => "flomore",
            Scheme::Smore => "smore",
            Scheme::Teavar => "teavar",
            Scheme::CvarFlowAdaptive => "cvar-flow-adaptive",
            Scheme::CvarFlowStatic => "cvar-flow-static",
        }
    }
}

/// Loss report of one scheme's routing.
pub fn run_scheme(pinst: &ProbabilisticInstance, scheme: Scheme) -> Result<LossReport> {
    let report = match scheme {
        Scheme::Flomore => benders_run(pinst, &BendersOptions::default())?.report,
        Scheme::Smore => solve_min_max(pinst)?.1,
        Scheme::Teavar => solve_cvar(pinst, CvarVariant::ScenStatic)?.report,
        Scheme::CvarFlowAdaptive => solve_cvar(pinst, CvarVariant::FlowAdaptive)?.report,
        Scheme::CvarFlowStatic => solve_cvar(pinst, CvarVariant::FlowStatic)?.report,
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRow {
    pub scheme: String,
    pub beta: f64,
    pub max_flow_pct_loss: f64,
    pub scen_pct_loss: f64,
    pub max_flow_cvar: f64,
}

pub fn scheme_report(pinst: &ProbabilisticInstance, schemes: &[Scheme]) -> Result<Vec<SchemeRow>> {
    schemes
        .iter()
        .map(|&s| {
            let r = run_scheme(pinst, s)?;
            Ok(SchemeRow {
                scheme: s.name().into(),
                beta: r.beta,
                max_flow_pct_loss: r.max_flow_pct_loss,
                scen_pct_loss: r.scen_pct_loss,
                max_flow_cvar: r.max_flow_cvar,
            })
        })
        .collect()
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
