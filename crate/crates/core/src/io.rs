//! JSON documents for networks, constraints, fitted joints and run reports.
//!
//! All arrays are flat and mixed-radix with the *last* axis fastest and state 0 first. A CPT
//! lists parent configurations in the order of the `parents` field, child state fastest; for a
//! binary `B` with parent `A` the array reads
//! `[P(B=0|A=0), P(B=1|A=0), P(B=0|A=1), P(B=1|A=1)]`. Tables written with state 1 first must
//! be reversed along every axis before they are entered.
//!
//! Writers are canonical: fields in fixed order, numbers in scientific notation with 17
//! significant digits (enough to round-trip every `f64`), two-space indentation, a trailing
//! newline, and nothing dependent on hash order or locale.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{FormatError, ModelError};
use crate::network::{NetworkSpec, VarId, VariableDecl};
use crate::solver::{Algorithm, RunReport, Termination};
use crate::table::JointTable;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Header {
    format_version: u64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NetworkDocument {
    #[allow(dead_code)]
    format_version: u64,
    variables: Vec<VariableEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    name: String,
    cardinality: usize,
    #[serde(default)]
    states: Option<Vec<String>>,
    #[serde(default)]
    parents: Vec<String>,
    cpt: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ConstraintDocument {
    #[allow(dead_code)]
    format_version: u64,
    constraints: Vec<TableEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    scope: Vec<String>,
    dist: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct JointDocument {
    #[allow(dead_code)]
    format_version: u64,
    scope: Vec<String>,
    dist: Vec<f64>,
}

fn check_version(text: &str) -> Result<(), FormatError> {
    let header: Header = serde_json::from_str(text)?;
    if header.format_version != FORMAT_VERSION {
        return Err(FormatError::Version(header.format_version));
    }
    Ok(())
}

pub fn parse_network(text: &str) -> Result<NetworkSpec, FormatError> {
    check_version(text)?;
    let doc: NetworkDocument = serde_json::from_str(text)?;
    let mut builder = NetworkSpec::builder();
    for v in doc.variables {
        builder.push(
            VariableDecl {
                name: v.name,
                cardinality: v.cardinality,
                states: v.states,
            },
            v.parents,
            v.cpt,
        );
    }
    Ok(builder.build()?)
}

fn resolve_scope(net: &NetworkSpec, names: &[String]) -> Result<Vec<VarId>, ModelError> {
    names
        .iter()
        .map(|n| {
            net.var_id(n)
                .ok_or_else(|| ModelError::UnknownVariable(n.clone()))
        })
        .collect()
}

/// Constraints in document order, validated against `net`.
pub fn parse_constraints(text: &str, net: &NetworkSpec) -> Result<Vec<Constraint>, FormatError> {
    check_version(text)?;
    let doc: ConstraintDocument = serde_json::from_str(text)?;
    doc.constraints
        .into_iter()
        .enumerate()
        .map(|(index, entry)| {
            resolve_scope(net, &entry.scope)
                .and_then(|scope| Constraint::new(net, scope, entry.dist))
                .map_err(|source| FormatError::Constraint { index, source })
        })
        .collect()
}

/// A joint table over variables of `net`.
pub fn parse_joint(text: &str, net: &NetworkSpec) -> Result<JointTable, FormatError> {
    check_version(text)?;
    let doc: JointDocument = serde_json::from_str(text)?;
    let scope = resolve_scope(net, &doc.scope)?;
    let cards = scope.iter().map(|&v| net.cardinality(v)).collect();
    Ok(JointTable::new(scope, cards, doc.dist)?)
}

/// Formats `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn string_list(items: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    let parts: Vec<String> = items.into_iter().map(|s| quoted(s.as_ref())).collect();
    format!("[{}]", parts.join(", "))
}

/// Writes `values` as a JSON array, `row` numbers per line.
fn number_rows(out: &mut String, values: &[f64], row: usize, indent: &str) {
    if values.is_empty() {
        out.push_str("[]");
        return;
    }
    out.push_str("[\n");
    let rows: Vec<String> = values
        .chunks(row.max(1))
        .map(|chunk| {
            let nums: Vec<String> = chunk.iter().map(|&x| format_number(x)).collect();
            format!("{indent}  {}", nums.join(", "))
        })
        .collect();
    out.push_str(&rows.join(",\n"));
    let _ = write!(out, "\n{indent}]");
}

pub fn serialize_network(net: &NetworkSpec) -> String {
    let mut out = format!("{{\n  \"formatVersion\": {FORMAT_VERSION},\n  \"variables\": [");
    for (i, v) in net.ids().enumerate() {
        let decl = net.variable(v);
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = writeln!(out, "    {{\n      \"name\": {},", quoted(&decl.name));
        let _ = writeln!(out, "      \"cardinality\": {},", decl.cardinality);
        if let Some(states) = &decl.states {
            let _ = writeln!(out, "      \"states\": {},", string_list(states));
        }
        let parents = net.parents(v).iter().map(|&p| net.name(p));
        let _ = writeln!(out, "      \"parents\": {},", string_list(parents));
        out.push_str("      \"cpt\": ");
        number_rows(&mut out, net.cpt(v).table(), decl.cardinality, "      ");
        out.push_str("\n    }");
    }
    out.push_str(if net.is_empty() {
        "]\n}\n"
    } else {
        "\n  ]\n}\n"
    });
    out
}

fn table_fields(out: &mut String, net: &NetworkSpec, table: &JointTable, indent: &str) {
    let names = table.scope().iter().map(|&v| net.name(v));
    let _ = writeln!(out, "{indent}\"scope\": {},", string_list(names));
    let _ = write!(out, "{indent}\"dist\": ");
    let row = *table.cards().last().unwrap_or(&1);
    number_rows(out, table.probs(), row, indent);
}

pub fn serialize_constraints(net: &NetworkSpec, rs: &[Constraint]) -> String {
    let mut out = format!("{{\n  \"formatVersion\": {FORMAT_VERSION},\n  \"constraints\": [");
    for (i, r) in rs.iter().enumerate() {
        out.push_str(if i == 0 { "\n    {\n" } else { ",\n    {\n" });
        table_fields(&mut out, net, r.dist(), "      ");
        out.push_str("\n    }");
    }
    out.push_str(if rs.is_empty() {
        "]\n}\n"
    } else {
        "\n  ]\n}\n"
    });
    out
}

pub fn serialize_joint(net: &NetworkSpec, table: &JointTable) -> String {
    let mut out = format!("{{\n  \"formatVersion\": {FORMAT_VERSION},\n");
    table_fields(&mut out, net, table, "  ");
    out.push_str("\n}\n");
    out
}

/// Machine-readable summary of a run, as written by `serialize_report`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportDocument {
    pub format_version: u64,
    pub algorithm: Algorithm,
    pub termination: Termination,
    pub cycles: usize,
    pub wall_time_seconds: f64,
    /// `null` when not available; see `divergence_note`.
    pub final_divergence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_note: Option<String>,
    pub log_base: &'static str,
    pub max_residual: f64,
    pub per_constraint_residuals: Vec<f64>,
    pub structural_residual: f64,
    pub delta_trace: Vec<f64>,
}

impl From<&RunReport> for ReportDocument {
    fn from(report: &RunReport) -> Self {
        let (final_divergence, divergence_note) = match report.final_divergence {
            Some(d) if d.is_finite() => (Some(d), None),
            Some(_) => (
                None,
                Some("infinite: result is not dominated by the original".into()),
            ),
            None => (None, Some("omitted".into())),
        };
        ReportDocument {
            format_version: FORMAT_VERSION,
            algorithm: report.algorithm,
            termination: report.termination,
            cycles: report.cycles,
            wall_time_seconds: report.wall_time.as_secs_f64(),
            final_divergence,
            divergence_note,
            log_base: RunReport::LOG_BASE,
            max_residual: report.max_residual(),
            per_constraint_residuals: report.per_constraint_residuals.clone(),
            structural_residual: report.structural_residual,
            delta_trace: report.delta_trace.clone(),
        }
    }
}

pub fn serialize_report(report: &RunReport) -> String {
    let mut out = serde_json::to_string_pretty(&ReportDocument::from(report))
        .expect("report fields are finite or null");
    out.push('\n');
    out
}
