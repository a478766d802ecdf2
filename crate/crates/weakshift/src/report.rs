//! CSV reports of scenario results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use weakshift_core::harness::{ConvergenceReport, ScenarioResult, SlopeFit};

use crate::{Error, Result};

pub const HEADER: [&str; 17] = [
    "scenario_id",
    "backend",
    "g",
    "a",
    "b",
    "mean_q_i",
    "mean_q_f_sim",
    "mean_q_f_pred",
    "r_q",
    "mean_p_i",
    "mean_p_f_sim",
    "mean_p_f_pred",
    "r_p",
    "var_p",
    "dvarq_dt",
    "succ_sim",
    "succ_pred",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn record(r: &ScenarioResult) -> Vec<String> {
    let floats = [
        r.g,
        r.weak.a,
        r.weak.b,
        r.initial.mean_q,
        r.simulated.mean_q,
        r.predicted.mean_q_f,
        r.r_q,
        r.initial.mean_p,
        r.simulated.mean_p,
        r.predicted.mean_p_f,
        r.r_p,
        r.initial.var_p,
        r.d_var_q_dt,
        r.succ_sim,
        r.succ_pred,
    ];
    let mut out = vec![r.scenario_id.to_string(), r.backend.name().to_string()];
    out.extend(floats.into_iter().map(fmt_float));
    out
}

/// Writes the header and one row per result, in the order given.
pub fn write_results<W: Write>(out: W, results: &[ScenarioResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in results {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_report(results: &[ScenarioResult], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    write_results(file, results)
}

/// One parsed report row; the numeric columns keep the header's order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: u64,
    pub backend: String,
    pub values: [f64; 15],
}

impl ResultRow {
    fn get(&self, column: &str) -> f64 {
        let i = HEADER.iter().position(|h| *h == column).expect("known column");
        self.values[i - 2]
    }

    pub fn g(&self) -> f64 {
        self.get("g")
    }

    pub fn weak_value(&self) -> (f64, f64) {
        (self.get("a"), self.get("b"))
    }

    pub fn delta_q(&self) -> f64 {
        self.get("mean_q_f_sim") - self.get("mean_q_i")
    }

    pub fn delta_p(&self) -> f64 {
        self.get("mean_p_f_sim") - self.get("mean_p_i")
    }

    pub fn var_p(&self) -> f64 {
        self.get("var_p")
    }

    pub fn d_var_q_dt(&self) -> f64 {
        self.get("dvarq_dt")
    }
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    if reader.headers()?.iter().ne(HEADER) {
        return Err(Error::invalid("not a scenario result table (header mismatch)"));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::invalid(format!("row {}: bad {what}", line + 1));
        let scenario_id = record[0].parse().map_err(|_| bad("scenario_id"))?;
        let mut values = [0.0; 15];
        for (v, field) in values.iter_mut().zip(record.iter().skip(2)) {
            *v = field.parse().map_err(|_| bad(field))?;
        }
        rows.push(ResultRow {
            scenario_id,
            backend: record[1].to_string(),
            values,
        });
    }
    Ok(rows)
}

fn describe(fit: &SlopeFit) -> String {
    match fit {
        SlopeFit::Fitted { slope, .. } => format!("{slope:.3}"),
        SlopeFit::Exact => "exact (residuals at floor)".to_string(),
    }
}

/// Human-readable slope lines for the three residual channels.
pub fn slope_summary(report: &ConvergenceReport) -> String {
    format!(
        "slope r_q: {}\nslope r_p: {}\nslope r_success: {}\n",
        describe(&report.position.fit),
        describe(&report.momentum.fit),
        describe(&report.success.fit)
    )
}
