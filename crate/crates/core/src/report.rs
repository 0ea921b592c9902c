//! JSON and CSV shapes of the test reports written by the CLI.

use serde::Serialize;

use crate::cbt::CbtReport;
use crate::kernel::Provenance;
use crate::ktst::{Convention, NullSummary, TestReport};

#[derive(Debug, Serialize)]
pub struct Decision {
    pub theta: f64,
    pub reject: bool,
}

#[derive(Debug, Serialize)]
pub struct TestReportJson<C: Serialize> {
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "M")]
    pub permutations: usize,
    pub seed: u64,
    pub convention: Convention,
    pub smooth: bool,
    pub provenance: Provenance,
    pub null_summary: NullSummary,
    pub decisions: Vec<Decision>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub cbt: Option<CbtExtras>,
    pub config: C,
}

#[derive(Debug, Serialize)]
pub struct CbtExtras {
    pub acc_cv_median: f64,
    pub acc_cv_all: Vec<f64>,
    pub p_values_per_repetition: Vec<f64>,
    #[serde(rename = "C_selected_histogram")]
    pub c_selected_histogram: Vec<HistogramBin>,
}

#[derive(Debug, Serialize)]
pub struct HistogramBin {
    #[serde(rename = "C")]
    pub c: f64,
    pub count: usize,
}

fn decisions(p: f64, thetas: &[f64]) -> Vec<Decision> {
    thetas.iter().map(|&theta| Decision { theta, reject: p <= theta }).collect()
}

pub fn ktst_json<C: Serialize>(r: &TestReport, thetas: &[f64], config: C) -> TestReportJson<C> {
    TestReportJson {
        test: "ktst",
        statistic: r.statistic,
        p_value: r.p_value,
        m: r.m,
        n: r.n,
        permutations: r.permutations(),
        seed: r.seed,
        convention: r.convention,
        smooth: r.smooth,
        provenance: r.provenance.clone(),
        null_summary: r.null_summary(),
        decisions: decisions(r.p_value, thetas),
        cbt: None,
        config,
    }
}

pub fn cbt_json<C: Serialize>(r: &CbtReport, thetas: &[f64], config: C) -> TestReportJson<C> {
    let mut out = ktst_json(&r.test, thetas, config);
    out.test = "cbt";
    out.cbt = Some(CbtExtras {
        acc_cv_median: r.test.statistic,
        acc_cv_all: r.acc_cv_all.clone(),
        p_values_per_repetition: r.p_values_per_repetition.clone(),
        c_selected_histogram: r
            .c_selected_histogram
            .iter()
            .map(|&(c, count)| HistogramBin { c, count })
            .collect(),
    });
    out
}

/// One null value per line, under a `null` header.
pub fn null_csv(null: &[f64]) -> String {
    let mut out = String::from("null\n");
    for v in null {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// `repetition,acc_cv,p_value` rows.
pub fn repetitions_csv(r: &CbtReport) -> String {
    let mut out = String::from("repetition,acc_cv,p_value\n");
    for (i, (a, p)) in r.acc_cv_all.iter().zip(&r.p_values_per_repetition).enumerate() {
        out.push_str(&format!("{i},{a},{p}\n"));
    }
    out
}
