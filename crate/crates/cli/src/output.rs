//! CSV and JSON rendering.

use cavity_entanglement::figures::Table;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Decimal (never exponential) notation with 12 significant digits.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // Exponent after rounding to 12 significant digits.
    let sci = format!("{v:.11e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (11 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn table_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in 0..table.n_rows() {
        let cells: Vec<String> = table.data.iter().map(|c| format_sig12(c[row])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn columns_json(table: &Table) -> Value {
    Value::Array(
        table
            .columns
            .iter()
            .zip(&table.data)
            .map(|(name, values)| json!({ "name": name, "values": values }))
            .collect(),
    )
}

/// `{"config": ..., "columns": [{"name", "values"}...], <extra>}`.
pub fn table_json(config: &RunConfig, table: &Table, extra: Option<(&str, Value)>) -> String {
    let mut doc = json!({ "config": config, "columns": columns_json(table) });
    if let Some((key, value)) = extra {
        doc[key] = value;
    }
    serde_json::to_string_pretty(&doc).expect("finite values serialize") + "\n"
}

pub fn report_json<T: Serialize>(config: &RunConfig, report: &T) -> String {
    let doc = json!({ "config": config, "report": report });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}
