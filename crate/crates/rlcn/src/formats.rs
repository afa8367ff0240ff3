//! JSON and CSV encodings of library results.
//!
//! Every JSON document carries `"format_version": 1` and a `"kind"` tag. Floats are
//! written in shortest round-trip form, so identical inputs give identical bytes.

use std::io::Write;

use serde::Serialize;

use rlcn_core::capacity::{BaSolution, CapacityReport};
use rlcn_core::channel::{Dmc, RankDefDist};
use rlcn_core::mc::{McReport, PipelineReport};

use crate::spec_file::ChannelSpecFile;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: T,
}

fn to_json<T: Serialize>(kind: &str, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope {
        format_version: FORMAT_VERSION,
        kind,
        body,
    })
    .expect("serializable");
    s.push('\n');
    s
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// `input,<output labels...>` followed by one row per input.
pub fn dmc_csv<W: Write>(dmc: &Dmc, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let a = dmc.alphabets();
    let mut header = Vec::with_capacity(a.num_outputs() + 1);
    header.push("input".to_string());
    header.extend((0..a.num_outputs()).map(|j| a.output_at(j).expect("output").label()));
    w.write_record(&header)?;
    for (i, u) in a.inputs().iter().enumerate() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(u.label());
        rec.extend(dmc.trans().row(i).iter().map(|p| p.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OutputMeta {
    label: String,
    dim: usize,
    deficiency: usize,
}

#[derive(Serialize)]
struct DmcBody<'a> {
    channel: ChannelSpecFile,
    num_inputs: usize,
    num_outputs: usize,
    inputs: Vec<String>,
    outputs: Vec<OutputMeta>,
    matrix: Vec<&'a [f64]>,
}

pub fn dmc_json(dmc: &Dmc) -> String {
    let a = dmc.alphabets();
    let h = dmc.spec().h();
    let body = DmcBody {
        channel: ChannelSpecFile::from_spec(dmc.spec()),
        num_inputs: a.num_inputs(),
        num_outputs: a.num_outputs(),
        inputs: a.inputs().iter().map(|u| u.label()).collect(),
        outputs: (0..a.num_outputs())
            .map(|j| {
                let dim = a.output_dim(j);
                OutputMeta {
                    label: a.output_at(j).expect("output").label(),
                    dim,
                    deficiency: h - dim,
                }
            })
            .collect(),
        matrix: (0..a.num_inputs()).map(|i| dmc.trans().row(i)).collect(),
    };
    to_json("dmc", body)
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub blahut_arimoto: f64,
    pub gap_bound: f64,
    pub iterations: usize,
    pub abs_difference: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Verification {
    pub fn new(closed_form: f64, ba: &BaSolution, tol: f64) -> Self {
        let abs_difference = (closed_form - ba.capacity_estimate).abs();
        Verification {
            blahut_arimoto: ba.capacity_estimate,
            gap_bound: ba.gap_bound,
            iterations: ba.iterations,
            abs_difference,
            tol,
            passed: abs_difference <= tol && ba.gap_bound <= tol,
        }
    }
}

#[derive(Serialize)]
struct ComponentOut {
    deficiency: usize,
    selection_prob: f64,
    capacity: f64,
}

#[derive(Serialize)]
struct CapacityOut {
    log_base: f64,
    units: String,
    closed_form: f64,
    components: Vec<ComponentOut>,
}

fn capacity_out(report: &CapacityReport) -> CapacityOut {
    CapacityOut {
        log_base: report.log_base,
        units: report.units_note.clone(),
        closed_form: report.closed_form,
        components: report
            .per_component
            .iter()
            .map(|c| ComponentOut {
                deficiency: c.deficiency,
                selection_prob: c.selection_prob,
                capacity: c.capacity,
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct CapacityBody<'a> {
    channel: ChannelSpecFile,
    #[serde(flatten)]
    capacity: CapacityOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<&'a Verification>,
    warnings: &'a [String],
}

pub fn capacity_json(
    channel: ChannelSpecFile,
    report: &CapacityReport,
    verification: Option<&Verification>,
    warnings: &[String],
) -> String {
    to_json(
        "capacity",
        CapacityBody {
            channel,
            capacity: capacity_out(report),
            verification,
            warnings,
        },
    )
}

pub fn capacity_text(
    report: &CapacityReport,
    verification: Option<&Verification>,
    warnings: &[String],
) -> String {
    let mut s = String::new();
    for w in warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s.push_str(&format!(
        "capacity: {:.6} {}\n",
        report.closed_form, report.units_note
    ));
    for c in &report.per_component {
        s.push_str(&format!(
            "  deficiency {}: p = {:.6}, C = {:.6}\n",
            c.deficiency, c.selection_prob, c.capacity
        ));
    }
    if let Some(v) = verification {
        s.push_str(&format!(
            "blahut-arimoto: {:.6} (gap {:.3e}, {} iterations)\n|difference|: {:.3e} (tol {:.1e}) {}\n",
            v.blahut_arimoto,
            v.gap_bound,
            v.iterations,
            v.abs_difference,
            v.tol,
            if v.passed { "ok" } else { "FAILED" }
        ));
    }
    s
}

pub fn capacity_csv<W: Write>(report: &CapacityReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["deficiency", "selection_prob", "capacity"])?;
    for c in &report.per_component {
        w.write_record([
            c.deficiency.to_string(),
            c.selection_prob.to_string(),
            c.capacity.to_string(),
        ])?;
    }
    w.write_record([
        "total".to_string(),
        "1".to_string(),
        report.closed_form.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CellOut {
    input: String,
    output: String,
    count: u64,
    expected_prob: f64,
    z: Option<f64>,
}

#[derive(Serialize)]
struct McBody {
    channel: ChannelSpecFile,
    seed: u64,
    draws_per_input: u64,
    num_inputs: usize,
    num_outputs: usize,
    max_abs_deviation: f64,
    worst_z_score: Option<f64>,
    off_support_hits: u64,
    cells: Vec<CellOut>,
}

fn cell_labels(report: &McReport, input: usize, output: usize) -> (String, String) {
    let a = &report.alphabets;
    (
        a.inputs().subspace_at(input).expect("input").label(),
        a.output_at(output).expect("output").label(),
    )
}

pub fn mc_json(report: &McReport) -> String {
    let a = &report.alphabets;
    let body = McBody {
        channel: ChannelSpecFile::from_spec(&report.spec),
        seed: report.seed,
        draws_per_input: report.draws_per_input,
        num_inputs: a.num_inputs(),
        num_outputs: a.num_outputs(),
        max_abs_deviation: report.max_abs_deviation,
        worst_z_score: finite(report.worst_z_score),
        off_support_hits: report.off_support_hits,
        cells: report
            .cells
            .iter()
            .map(|c| {
                let (input, output) = cell_labels(report, c.input, c.output);
                CellOut {
                    input,
                    output,
                    count: c.count,
                    expected_prob: c.expected_prob,
                    z: finite(c.z),
                }
            })
            .collect(),
    };
    to_json("mc_report", body)
}

/// One row per (input, output) cell; an infinite z is written as `inf`.
pub fn mc_csv<W: Write>(report: &McReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["input_label", "output_label", "count", "expected_prob", "z"])?;
    for c in &report.cells {
        let (input, output) = cell_labels(report, c.input, c.output);
        w.write_record([
            input,
            output,
            c.count.to_string(),
            c.expected_prob.to_string(),
            c.z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PipelineBody {
    channel: ChannelSpecFile,
    seed: u64,
    draws: u64,
    true_rank_def: Vec<f64>,
    deficiency_counts: Vec<u64>,
    estimated_rank_def: Vec<f64>,
    true_capacity: CapacityOut,
    estimated_capacity: CapacityOut,
    abs_difference: f64,
}

fn probs(d: &RankDefDist) -> Vec<f64> {
    d.probs().to_vec()
}

pub fn pipeline_json(channel: ChannelSpecFile, report: &PipelineReport) -> String {
    let body = PipelineBody {
        channel,
        seed: report.seed,
        draws: report.draws,
        true_rank_def: probs(&report.true_dist),
        deficiency_counts: report.deficiency_counts.clone(),
        estimated_rank_def: probs(&report.estimated_dist),
        true_capacity: capacity_out(&report.true_capacity),
        estimated_capacity: capacity_out(&report.estimated_capacity),
        abs_difference: (report.true_capacity.closed_form - report.estimated_capacity.closed_form)
            .abs(),
    };
    to_json("pipeline", body)
}

pub fn pipeline_csv<W: Write>(report: &PipelineReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["deficiency", "count", "true_prob", "estimated_prob"])?;
    for (r, &count) in report.deficiency_counts.iter().enumerate() {
        w.write_record([
            r.to_string(),
            count.to_string(),
            report.true_dist.prob(r).to_string(),
            report.estimated_dist.prob(r).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CountBody<'a> {
    quantity: &'a str,
    params: serde_json::Value,
    value: String,
}

/// Exact counts are written as decimal strings since they may exceed 64 bits.
pub fn count_json(
    quantity: &str,
    params: serde_json::Value,
    value: &num_bigint::BigUint,
) -> String {
    to_json(
        "count",
        CountBody {
            quantity,
            params,
            value: value.to_string(),
        },
    )
}
