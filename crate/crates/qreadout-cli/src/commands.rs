use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use qreadout::bench::{post_processing_study, round_sig, run_example, shot_table, ExampleOptions, Regularity, TestFunction};
use qreadout::burgers_tsr::{reference_solution, tsr_run_with_reference};
use qreadout::cfd::{
    cavity_analog, cfd_scaling, load_field, quantity, readout_grid, spline_upsample, taylor_green, FieldFormat, Quantity,
    VelocityField,
};
use qreadout::gridfn::{encode, l2ns_error, read_grid_csv, GridFunction};
use qreadout::readout_qae::{fsqae2_readout, fsqae_readout, rsqae_readout, QaeConfig};
use qreadout::readout_sampling::{readout, Engine, Method, ReadoutConfig, Reconstruction};
use qreadout::sampling::derive_seed;
use qreadout::spline::SplineOrder;
use qreadout::statevec::Backend;
use serde_json::{json, Value};

use crate::args::{
    Bench, BurgersArgs, CfdScalingArgs, EstimateArgs, ExampleArgs, FieldArgs, PostprocArgs, ReadoutArgs, VisualizeArgs,
};
use crate::config::{self, resolve, FileValues, Flags};
use crate::output::{
    render_heatmap, series_rows, summary_row, write_coefficients_csv, write_grid, write_series_csv, write_summary_csv,
    OutDir,
};
use crate::CliError;

/// What a command reports back for the manifest.
pub struct Report {
    pub config: Value,
    pub seed: Option<u64>,
    pub summary: Value,
}

fn report<C: serde::Serialize>(config: &C, seed: Option<u64>, summary: Value) -> Report {
    Report {
        config: serde_json::to_value(config).expect("configs serialize"),
        seed,
        summary,
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_spline(s: &str) -> Result<SplineOrder, CliError> {
    match s {
        "linear" => Ok(SplineOrder::Linear),
        "cubic" => Ok(SplineOrder::Cubic),
        other => Err(usage(format!("unknown spline {other:?} (linear, cubic)"))),
    }
}

fn parse_quantity(s: &str) -> Result<Quantity, CliError> {
    Quantity::parse(s).map_err(|e| usage(e.to_string()))
}

fn quantity_name(q: Quantity) -> &'static str {
    match q {
        Quantity::Ux => "ux",
        Quantity::Uy => "uy",
        Quantity::Curl => "curl",
        Quantity::Stream => "stream",
    }
}

fn parse_format(s: &str) -> Result<FieldFormat, CliError> {
    match s {
        "matrix" => Ok(FieldFormat::Matrix),
        "grid-csv" => Ok(FieldFormat::GridCsv),
        other => Err(usage(format!("unknown field format {other:?} (matrix, grid-csv)"))),
    }
}

fn parse_engine(s: &str) -> Result<Engine, CliError> {
    match s {
        "analytic" => Ok(Engine::Analytic),
        "gate-level" => Ok(Engine::Circuit(Backend::GateLevel)),
        "fast" => Ok(Engine::Circuit(Backend::Fast)),
        other => Err(usage(format!("unknown engine {other:?} (analytic, gate-level, fast)"))),
    }
}

fn print_runs(runs: &[qreadout::bench::ScalingRun]) {
    for r in runs {
        let s = summary_row(r);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:+.3}"));
        println!(
            "{:<22} slope {:>7} (stderr {}) expected {}",
            s.method,
            fmt(s.slope),
            s.stderr.map_or_else(|| "-".to_string(), |x| format!("{x:.3}")),
            fmt(s.expected_slope)
        );
    }
}

fn write_runs(out: &mut OutDir, runs: &[qreadout::bench::ScalingRun]) -> anyhow::Result<Value> {
    let rows: Vec<_> = runs.iter().flat_map(series_rows).collect();
    write_series_csv(&out.artifact("results.csv")?, &rows)?;
    let summary: Vec<_> = runs.iter().map(summary_row).collect();
    write_summary_csv(&out.artifact("summary.csv")?, &summary)?;
    print_runs(runs);
    Ok(serde_json::to_value(&summary)?)
}

pub fn bench(which: &Bench, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    match which {
        Bench::Example1(a) => example("bench example1", TestFunction::Gaussian2d, ExampleOptions::default(), a, file, out),
        Bench::Example2(a) => example("bench example2", TestFunction::Sine2d, ExampleOptions::example2(), a, file, out),
        Bench::Postproc(a) => postproc(a, file, out),
        Bench::CfdScaling(a) => cfd_scaling_cmd(a, file, out),
    }
}

fn example(
    name: &str,
    function: TestFunction,
    base: ExampleOptions,
    a: &ExampleArgs,
    file: Option<&FileValues>,
    out: &mut OutDir,
) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    flags
        .set("methods", a.methods.clone())
        .set("shots", a.shots.clone())
        .set("epsilons", a.eps.clone())
        .set("fsqae2_epsilons", a.fsqae2_eps.clone())
        .set("qubits", a.qubits)
        .set("qae_qubits", a.qae_qubits)
        .set("m_sweep", a.m_sweep.clone())
        .set("repeats", a.repeats)
        .set("seed", a.seed);
    let opts: ExampleOptions = resolve(name, base, file, flags.take())?;
    let runs = run_example(&function, &opts)?;
    let summary = write_runs(out, &runs)?;
    Ok(report(&opts, Some(opts.seed), json!({ "runs": summary })))
}

fn postproc(a: &PostprocArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    flags
        .set("function", a.function.clone())
        .set("grid_qubits", a.grid_qubits.clone())
        .set("shots", a.shots)
        .set("averages", a.averages.clone())
        .set("spline", a.spline.as_deref().map(parse_spline).transpose()?)
        .set("repeats", a.repeats)
        .set("seed", a.seed);
    let cfg: config::PostprocConfig = resolve("bench postproc", config::PostprocConfig::default(), file, flags.take())?;
    let function = TestFunction::parse(&cfg.function).map_err(|e| usage(e.to_string()))?;
    let runs = post_processing_study(&function, &cfg.grid_qubits, cfg.shots, &cfg.averages, cfg.spline, cfg.repeats, cfg.seed)?;
    let summary = write_runs(out, &runs)?;
    Ok(report(&cfg, Some(cfg.seed), json!({ "runs": summary })))
}

fn field_flags(flags: &mut Flags, f: &FieldArgs) -> Result<(), CliError> {
    flags
        .set("field", f.field.clone())
        .set("format", f.format.as_deref().map(parse_format).transpose()?)
        .set("qubits", f.qubits)
        .set_if("periodic", f.periodic, Value::Bool(true));
    Ok(())
}

fn load_velocity(cfg: &config::FieldConfig) -> anyhow::Result<VelocityField<f64>> {
    let q = cfg.qubits;
    match cfg.field.as_str() {
        "taylor-green" => Ok(taylor_green(q)?),
        "cavity-analog" => Ok(cavity_analog(q)?),
        path => {
            let raw = load_field::<f64>(Path::new(path), cfg.format).with_context(|| format!("loading field {path}"))?;
            if raw.is_power_of_two() && raw.sizes().iter().all(|&n| n == 1 << q) {
                Ok(raw.into_field()?)
            } else {
                Ok(spline_upsample(&raw, &[q, q])?)
            }
        }
    }
}

fn cfd_scaling_cmd(a: &CfdScalingArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    field_flags(&mut flags, &a.field)?;
    flags
        .set("quantity", a.quantity.as_deref().map(parse_quantity).transpose()?)
        .set("shots", a.shots.clone())
        .set("methods", a.methods.clone())
        .set("repeats", a.repeats)
        .set("seed", a.seed);
    let cfg: config::CfdScalingConfig = resolve("bench cfd-scaling", config::CfdScalingConfig::default(), file, flags.take())?;
    let field = load_velocity(&cfg.field)?;
    let runs = cfd_scaling(&field, cfg.quantity, &cfg.shots, cfg.repeats, cfg.seed, &cfg.methods)?;
    let summary = write_runs(out, &runs)?;
    Ok(report(&cfg, Some(cfg.seed), json!({ "runs": summary })))
}

pub fn visualize(a: &VisualizeArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    field_flags(&mut flags, &a.field)?;
    let quantities = a
        .quantities
        .as_ref()
        .map(|v| v.iter().map(|s| parse_quantity(s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    flags
        .set("quantities", quantities)
        .set("method", a.method)
        .set("shots", a.shots)
        .set("seed", a.seed)
        .set_if("dump_field", a.dump_field, Value::Bool(true));
    let cfg: config::VisualizeConfig = resolve("cfd visualize", config::VisualizeConfig::default(), file, flags.take())?;
    let field = load_velocity(&cfg.field)?;
    if cfg.dump_field {
        let p = out.artifact("field.csv")?;
        let mut w = std::io::BufWriter::new(File::create(&p).with_context(|| format!("cannot create {}", p.display()))?);
        field.write_csv(&mut w)?;
    }
    let mut results = Vec::new();
    for (i, &q) in cfg.quantities.iter().enumerate() {
        let name = quantity_name(q);
        let g = quantity(&field, q, cfg.field.periodic)?;
        render_heatmap(&g, &out.artifact(&format!("{name}.pgm"))?)?;
        let mut entry = json!({ "quantity": name });
        if let Some(m) = cfg.method {
            let rc = ReadoutConfig::new(cfg.shots, derive_seed(cfg.seed, &[i as u64]));
            let rec = readout_grid(&g, m, &rc)?;
            render_heatmap(&rec.function, &out.artifact(&format!("{name}_{m}.pgm"))?)?;
            let e = l2ns_error(g.values(), rec.function.values())?;
            println!("{name}: {m} L2NS error {e:.4e} with {} shots", rec.shots);
            entry["method"] = json!(m);
            entry["l2ns_error"] = json!(e);
            entry["shots"] = json!(rec.shots);
        }
        results.push(entry);
    }
    println!("wrote {} heatmaps to {}", results.len() * (1 + usize::from(cfg.method.is_some())), out.root().display());
    Ok(report(&cfg, Some(cfg.seed), json!({ "quantities": results })))
}

fn load_input(cfg: &config::ReadoutCommandConfig) -> anyhow::Result<GridFunction<f64>> {
    match &cfg.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let (spec, mut cols) = read_grid_csv::<f64, _>(BufReader::new(file))?;
            if cols.len() != 1 {
                bail!("{} holds {} value columns, readout needs one", path.display(), cols.len());
            }
            Ok(GridFunction::new(spec, cols.remove(0))?)
        }
        None => Ok(TestFunction::parse(&cfg.function)?.grid(cfg.qubits)?),
    }
}

pub fn readout_cmd(a: &ReadoutArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    flags
        .set("input", a.input.clone())
        .set_if("input", a.function.is_some(), Value::Null)
        .set("function", a.function.clone())
        .set("qubits", a.qubits)
        .set("method", a.method)
        .set("shots", a.shots)
        .set_if("shots", a.exact, Value::Null)
        .set("seed", a.seed)
        .set("truncation", a.truncation.clone())
        .set("eps", a.eps)
        .set("spline", a.spline.as_deref().map(parse_spline).transpose()?)
        .set("engine", a.engine.clone())
        .set("shift", a.shift);
    let cfg: config::ReadoutCommandConfig = resolve("readout", config::ReadoutCommandConfig::default(), file, flags.take())?;
    let engine = parse_engine(&cfg.engine)?;
    let truth = load_input(&cfg)?;
    let sizes = truth.spec().sizes();
    if let Some(m) = &cfg.truncation {
        if m.len() != sizes.len() {
            return Err(usage(format!("truncation needs {} entries, got {}", sizes.len(), m.len())));
        }
    }
    let rec: Reconstruction<f64> = match cfg.method {
        Method::Rsr | Method::Arsr | Method::Fsr | Method::ExtFsr => {
            let mut rc = match cfg.shots {
                Some(s) => ReadoutConfig::new(s, cfg.seed),
                None => ReadoutConfig::exact(),
            }
            .with_spline(cfg.spline)
            .with_engine(engine);
            if let Some(m) = &cfg.truncation {
                rc = rc.fixed(m);
            }
            if cfg.shift != 0.0 {
                rc = rc.with_shift(cfg.shift);
                let shifted = truth.values().iter().map(|v| v - cfg.shift).collect();
                readout(cfg.method, &encode(&GridFunction::new(truth.spec().clone(), shifted)?)?, &rc)?
            } else {
                readout(cfg.method, &encode(&truth)?, &rc)?
            }
        }
        m => {
            let qc = QaeConfig {
                engine,
                ..QaeConfig::new(cfg.eps, cfg.seed)
            };
            let state = encode(&truth)?;
            let block: Vec<usize> = cfg
                .truncation
                .clone()
                .unwrap_or_else(|| sizes.iter().map(|&n| n.min(8)).collect());
            match m {
                Method::Fsqae => fsqae_readout(&state, &block, &qc)?,
                Method::Fsqae2 => fsqae2_readout(&state, &block, &qc)?,
                _ => rsqae_readout(&state, None, &qc)?,
            }
        }
    };
    write_grid(&out.artifact("reconstruction.csv")?, &rec.function)?;
    if !rec.diagnostics.coefficients.is_empty() {
        write_coefficients_csv(&out.artifact("coefficients.csv")?, sizes.len(), &rec.diagnostics.coefficients)?;
    }
    let err = l2ns_error(truth.values(), rec.function.values())?;
    println!(
        "{}: L2NS error {err:.4e}, shots {}, queries {}, truncation {:?}",
        cfg.method, rec.shots, rec.queries, rec.truncation
    );
    let summary = json!({
        "l2ns_error": err,
        "shots": rec.shots,
        "queries": rec.queries,
        "truncation": rec.truncation,
        "kept": rec.diagnostics.kept,
        "sign_ties": rec.diagnostics.sign_ties,
        "uncertain_signs": rec.diagnostics.uncertain_signs,
        "max_imag": rec.diagnostics.max_imag,
        "folded_magnitude": rec.diagnostics.folded_magnitude,
    });
    Ok(report(&cfg, Some(cfg.seed), summary))
}

pub fn burgers(a: &BurgersArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let mut flags = Flags::default();
    let reference = a
        .reference
        .as_deref()
        .map(str::parse::<qreadout::burgers_tsr::ReferenceKind>)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    flags
        .set("qubits", a.qubits)
        .set("dt", a.dt)
        .set("steps", a.steps)
        .set("nu", a.nu)
        .set("method", a.method)
        .set("shots", a.shots)
        .set_if("shots", a.exact, Value::Null)
        .set("kappa", a.kappa)
        .set("seed", a.seed)
        .set("reference", reference)
        .set_if("dump_fields", a.dump_fields, Value::Bool(true));
    let cfg: config::BurgersCommandConfig = resolve("burgers run", config::BurgersCommandConfig::default(), file, flags.take())?;
    cfg.run.validate()?;
    let chain = reference_solution(&cfg.run, cfg.reference)?;
    let trace = tsr_run_with_reference(&cfg.run, &chain)?;
    let p = out.artifact("trace.csv")?;
    trace.write_csv(File::create(&p).with_context(|| format!("cannot create {}", p.display()))?)?;
    if cfg.dump_fields {
        for (k, f) in trace.fields.iter().enumerate() {
            let p = out.artifact(&format!("fields/step_{:03}.csv", k + 1))?;
            let mut w = std::io::BufWriter::new(File::create(&p).with_context(|| format!("cannot create {}", p.display()))?);
            f.write_csv(&mut w)?;
        }
    }
    println!(
        "t = {:.2}: L2NS error {:.4e}, p_k max/min {:.3}, total shots {:.3e}",
        cfg.run.final_time(),
        trace.final_error(),
        trace.uniformity(),
        trace.total_shots()
    );
    let summary = json!({
        "final_time": cfg.run.final_time(),
        "final_error": trace.final_error(),
        "uniformity": trace.uniformity(),
        "total_shots": trace.total_shots(),
        "cumulative_probability": trace.records.last().map(|r| r.cumulative),
    });
    Ok(report(&cfg, Some(cfg.run.seed), summary))
}

/// Two significant figures in compact exponent form, e.g. `4.6e5`.
fn compact(x: f64) -> String {
    format!("{:e}", round_sig(x, 2))
}

pub fn estimate(a: &EstimateArgs, file: Option<&FileValues>, out: &mut OutDir) -> Result<Report, CliError> {
    let classes = a
        .class
        .as_ref()
        .map(|v| v.iter().map(|s| Regularity::parse(s)).collect::<Result<Vec<_>, _>>())
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let mut flags = Flags::default();
    flags.set("classes", classes).set("dims", a.dim.clone()).set("eps", a.eps.clone());
    let cfg: config::EstimateConfig = resolve("estimate-shots", config::EstimateConfig::default(), file, flags.take())?;
    let p = out.artifact("shots.csv")?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&p)
        .with_context(|| format!("cannot create {}", p.display()))?;
    w.write_record(["class", "d", "eps", "method", "shots", "acceleration"])
        .map_err(anyhow::Error::from)?;
    let mut rows = Vec::new();
    for &class in &cfg.classes {
        let cells = shot_table(class, &cfg.dims, &cfg.eps)?;
        for group in cells.chunks(3) {
            let line: Vec<String> = group
                .iter()
                .map(|c| format!("{} {}", c.method.name().to_uppercase(), compact(c.shots)))
                .collect();
            println!("{:?} d={} eps={}: {}", class, group[0].d, group[0].eps, line.join(", "));
        }
        for c in cells {
            w.write_record([
                format!("{:?}", c.class),
                c.d.to_string(),
                c.eps.to_string(),
                c.method.name().into(),
                c.shots.to_string(),
                round_sig(c.acceleration, 2).to_string(),
            ])
            .map_err(anyhow::Error::from)?;
            rows.push(json!({"class": c.class, "d": c.d, "eps": c.eps, "method": c.method, "shots": c.shots, "acceleration": c.acceleration}));
        }
    }
    w.flush().map_err(anyhow::Error::from)?;
    Ok(report(&cfg, None, json!({ "cells": rows })))
}
