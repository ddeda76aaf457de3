//! Command-line front end tying together basis optimization, representation
//! mapping, metric evaluation, and behavioral simulation.
//!
//! Flag precedence is command line > `--config` JSON file > built-in
//! defaults; the resolved configuration is echoed and embedded in every
//! output file together with the tool version and seed.

mod output;
mod spec_args;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use csdac_core::mappers::{
    build_greedy_lut_capped, canonical_table, memoryless_solve, write_greedy_lut,
    write_memoryless_csv, DEFAULT_LUT_CAP,
};
use csdac_core::model::Representation;
use csdac_core::optimizer::{anneal, AnnealConfig};
use csdac_core::reps::{metric_complete, metric_monte_carlo, rep_count_stats, EvalMethod};
use csdac_core::sim::{run_experiment, EdgeModel, EdgeShape, StimulusConfig, StimulusKind};
use csdac_core::{enumerate_reps, thermometer_metric};

use output::{csv_header, run_meta, write_atomic, write_json_atomic, Catalog, CatalogEntry};
use spec_args::{
    db_cell, parse_basis, parse_codes_inline, parse_freq, parse_model, parse_sweep,
    read_codes_file, MapperKind,
};

#[derive(Parser)]
#[command(
    name = "csdac",
    version,
    about = "Design and verify glitch-optimized current-steering DAC switch weights"
)]
struct Cli {
    /// JSON object supplying defaults for flags not given on the command line
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a glitch-optimal basis with simulated annealing
    OptimizeBasis(OptimizeArgs),
    /// Evaluate glitch metrics for combinations of bases and mappers
    EvaluateMetric(EvaluateArgs),
    /// Map a codeword sequence to switch patterns
    MapSequence(MapArgs),
    /// Sweep behavioral simulations over edge-timing skews
    Simulate(SimulateArgs),
    /// Export a memoryless table (CSV) or greedy LUT (binary blob)
    ExportTable(ExportArgs),
    /// List the representations of one codeword
    Enumerate(EnumerateArgs),
}

fn main() {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => exit_with(e),
    };
    let outcome = match cli.command {
        Command::OptimizeBasis(args) => cmd_optimize(args, &config),
        Command::EvaluateMetric(args) => cmd_evaluate(args, &config),
        Command::MapSequence(args) => cmd_map_sequence(args, &config),
        Command::Simulate(args) => cmd_simulate(args, &config),
        Command::ExportTable(args) => cmd_export_table(args, &config),
        Command::Enumerate(args) => cmd_enumerate(args, &config),
    };
    if let Err(e) = outcome {
        exit_with(e);
    }
}

fn exit_with(e: anyhow::Error) -> ! {
    eprintln!("error: {e:#}");
    std::process::exit(1);
}

fn load_config(path: Option<&std::path::Path>) -> Result<Value> {
    match path {
        None => Ok(Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let value: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))?;
            if !value.is_object() {
                bail!("config file must hold a JSON object");
            }
            Ok(value)
        }
    }
}

/// Fills an unset option from the config file (command line wins).
fn fill<T: serde::de::DeserializeOwned>(
    slot: &mut Option<T>,
    config: &Value,
    key: &str,
) -> Result<()> {
    if slot.is_none() {
        if let Some(raw) = config.get(key) {
            *slot = Some(
                serde_json::from_value(raw.clone())
                    .with_context(|| format!("config key {key:?}"))?,
            );
        }
    }
    Ok(())
}

fn open_catalog(flag: Option<PathBuf>) -> Result<Catalog> {
    Catalog::open(flag.unwrap_or_else(Catalog::default_path))
}

// ---------------------------------------------------------------------------
// optimize-basis
// ---------------------------------------------------------------------------

#[derive(Args)]
struct OptimizeArgs {
    /// Codeword bit depth N
    #[arg(long)]
    n: Option<u32>,
    /// Number of switches L
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    iterations: Option<u32>,
    /// Transitions per sampled objective evaluation
    #[arg(long)]
    samples: Option<u32>,
    /// Geometric cooling factor per iteration
    #[arg(long)]
    cooling: Option<f64>,
    /// Initial temperature (calibrated from probe moves when omitted)
    #[arg(long)]
    t0: Option<f64>,
    /// Candidates re-ranked with the full objective
    #[arg(long)]
    top: Option<u32>,
    /// Transition model: uniform, joint:<file>, or sequence:<file>
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Catalog path (default: $CSDAC_CATALOG or ./csdac-catalog.json)
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_optimize(mut args: OptimizeArgs, config: &Value) -> Result<()> {
    fill(&mut args.n, config, "n")?;
    fill(&mut args.l, config, "l")?;
    fill(&mut args.restarts, config, "restarts")?;
    fill(&mut args.iterations, config, "iterations")?;
    fill(&mut args.samples, config, "samples")?;
    fill(&mut args.cooling, config, "cooling")?;
    fill(&mut args.t0, config, "t0")?;
    fill(&mut args.model, config, "model")?;
    fill(&mut args.seed, config, "seed")?;
    fill(&mut args.out, config, "out")?;
    let n = args.n.context("--n is required")?;
    let l = args.l.context("--l is required")?;
    let seed = args.seed.unwrap_or(0);
    let model_spec = args.model.unwrap_or_else(|| "uniform".into());
    let model = parse_model(&model_spec, n)?;

    let mut anneal_config = AnnealConfig::new(n, l, seed);
    if let Some(v) = args.restarts {
        anneal_config.restarts = v;
    }
    if let Some(v) = args.iterations {
        anneal_config.iterations = v;
    }
    if let Some(v) = args.samples {
        anneal_config.objective_samples = v;
    }
    if let Some(v) = args.cooling {
        anneal_config.cooling = v;
    }
    if let Some(v) = args.top {
        anneal_config.top_candidates = v;
    }
    anneal_config.initial_temperature = args.t0;

    let resolved = json!({
        "n": n, "l": l, "restarts": anneal_config.restarts,
        "iterations": anneal_config.iterations,
        "samples": anneal_config.objective_samples,
        "cooling": anneal_config.cooling,
        "t0": anneal_config.initial_temperature,
        "top": anneal_config.top_candidates,
        "model": model_spec,
    });
    let meta = run_meta("optimize-basis", seed, resolved.clone());
    println!("resolved config: {resolved}");

    let result = anneal(&anneal_config, &model)?;
    let normalized = result.best_objective / thermometer_metric(&model);
    eprintln!(
        "search took {:.1}s over {} restarts",
        result.wall_time.as_secs_f64(),
        anneal_config.restarts
    );

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("csdac-optimize-n{n}-l{l}.json")));
    write_json_atomic(
        &out,
        &json!({
            "meta": meta,
            "result": result,
            "normalized_objective": normalized,
        }),
    )?;

    let mut catalog = open_catalog(args.catalog)?;
    catalog.upsert(CatalogEntry {
        id: Catalog::entry_id(n, l, seed),
        bit_depth: n,
        basis_len: l,
        seed,
        weights: result.best.weights().to_vec(),
        objective: result.best_objective,
    });
    catalog.save()?;

    println!(
        "best basis: {:?} objective {:.3} (normalized {normalized:.4}) -> {}",
        result.best.weights(),
        result.best_objective,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate-metric
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EvaluateArgs {
    /// Basis spec (repeatable): preset, catalog:<id>, or inline weights
    #[arg(long = "basis", required = true)]
    bases: Vec<String>,
    /// Mapper (repeatable): canonical, viterbi, greedy, memoryless
    #[arg(long = "mapper", value_enum)]
    mappers: Vec<MapperKind>,
    /// Bit depth for inline weight lists
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    model: Option<String>,
    /// Monte Carlo sequence length for stateful mappers
    #[arg(long)]
    mc_length: Option<usize>,
    /// Restarts for memoryless table solving
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_evaluate(mut args: EvaluateArgs, config: &Value) -> Result<()> {
    fill(&mut args.n, config, "n")?;
    fill(&mut args.model, config, "model")?;
    fill(&mut args.mc_length, config, "mc_length")?;
    fill(&mut args.restarts, config, "restarts")?;
    fill(&mut args.seed, config, "seed")?;
    fill(&mut args.out, config, "out")?;
    let seed = args.seed.unwrap_or(0);
    let mc_length = args.mc_length.unwrap_or(100_000);
    let restarts = args.restarts.unwrap_or(8);
    let model_spec = args.model.unwrap_or_else(|| "uniform".into());
    let mappers = if args.mappers.is_empty() {
        vec![MapperKind::Canonical]
    } else {
        args.mappers.clone()
    };
    let catalog = open_catalog(args.catalog.clone())?;

    let resolved = json!({
        "bases": args.bases, "mappers": mappers.iter().map(|m| m.label()).collect::<Vec<_>>(),
        "n": args.n, "model": model_spec, "mc_length": mc_length, "restarts": restarts,
    });
    let meta = run_meta("evaluate-metric", seed, resolved.clone());
    println!("resolved config: {resolved}");

    let mut csv = csv_header(&meta);
    csv.push_str("basis_id,L,mapper,method,raw,normalized,ci_halfwidth,seed\n");
    for basis_spec in &args.bases {
        let (id, basis) = parse_basis(basis_spec, args.n, &catalog)?;
        let model = parse_model(&model_spec, basis.bit_depth())?;
        for &kind in &mappers {
            let report = match kind {
                MapperKind::Canonical => {
                    metric_complete(&basis, &canonical_table(&basis)?, &model)?
                        .with_mapper(kind.label())
                }
                MapperKind::Memoryless => {
                    let table = memoryless_solve(&basis, &model, restarts, seed)?;
                    metric_complete(&basis, &table, &model)?.with_mapper(kind.label())
                }
                MapperKind::Viterbi | MapperKind::Greedy => {
                    let mapper = kind.build(&basis, &model, restarts, seed)?;
                    metric_monte_carlo(&basis, &mapper, &model, mc_length, seed)?
                }
            };
            let method = match report.method {
                EvalMethod::Analytic => "analytic",
                EvalMethod::MonteCarlo => "monte-carlo",
            };
            writeln!(
                csv,
                "{id},{},{},{method},{:.6},{:.6},{},{seed}",
                basis.len(),
                report.mapper,
                report.raw_metric,
                report.normalized_metric,
                db_cell(report.ci_halfwidth)
            )?;
            println!(
                "{id} L={} {}: raw {:.2} normalized {:.4}",
                basis.len(),
                report.mapper,
                report.raw_metric,
                report.normalized_metric
            );
        }
    }
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from("csdac-metrics.csv"));
    write_atomic(&out, csv.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// map-sequence
// ---------------------------------------------------------------------------

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    mapper: Option<MapperKind>,
    /// Inline comma-separated codes
    #[arg(long)]
    codes: Option<String>,
    /// File with whitespace/comma-separated codes
    #[arg(long)]
    codes_file: Option<PathBuf>,
    /// Pin the first-stage representation (bit string)
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_map_sequence(mut args: MapArgs, config: &Value) -> Result<()> {
    fill(&mut args.basis, config, "basis")?;
    fill(&mut args.n, config, "n")?;
    fill(&mut args.codes, config, "codes")?;
    fill(&mut args.restarts, config, "restarts")?;
    fill(&mut args.seed, config, "seed")?;
    fill(&mut args.out, config, "out")?;
    let basis_spec = args.basis.context("--basis is required")?;
    let seed = args.seed.unwrap_or(0);
    let restarts = args.restarts.unwrap_or(8);
    let kind = args.mapper.unwrap_or(MapperKind::Viterbi);
    let catalog = open_catalog(args.catalog.clone())?;
    let (id, basis) = parse_basis(&basis_spec, args.n, &catalog)?;
    let codes = match (&args.codes, &args.codes_file) {
        (Some(inline), None) => parse_codes_inline(inline)?,
        (None, Some(path)) => read_codes_file(path)?,
        _ => bail!("give exactly one of --codes or --codes-file"),
    };
    let initial: Option<Representation> = args
        .initial
        .as_deref()
        .map(|s| s.parse())
        .transpose()
        .context("parsing --initial")?;

    let resolved = json!({
        "basis": id, "mapper": kind.label(), "codes": codes.len(),
        "restarts": restarts, "initial": args.initial,
    });
    let meta = run_meta("map-sequence", seed, resolved.clone());
    println!("resolved config: {resolved}");

    let model = csdac_core::TransitionModel::uniform(basis.bit_depth());
    let mapper = kind.build(&basis, &model, restarts, seed)?;
    let path = mapper.map_sequence(&codes, &basis, initial.as_ref())?;
    println!(
        "mapped {} codes with {}: cost {}",
        codes.len(),
        kind.label(),
        path.cost
    );

    let out = args.out.unwrap_or_else(|| PathBuf::from("csdac-path.json"));
    write_json_atomic(
        &out,
        &json!({
            "meta": meta,
            "codes": codes,
            "representations": path.reps.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "cost": path.cost,
            "stage_states": path.stage_states,
        }),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SimulateArgs {
    /// Basis spec (repeatable)
    #[arg(long = "basis", required = true)]
    bases: Vec<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    mapper: Option<MapperKind>,
    /// Stimulus kind: sine or prbs
    #[arg(long)]
    stimulus: Option<String>,
    /// Normalized sine frequency J/M
    #[arg(long)]
    freq: Option<String>,
    /// Record length in codes
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    osr: Option<usize>,
    /// Skew sweep start:step:end (fractions of the sample period)
    #[arg(long)]
    sweep_tau: Option<String>,
    /// Individual skew values (repeatable)
    #[arg(long = "tau")]
    taus: Vec<f64>,
    /// Edge convention: skewed (late turn-on) or symmetric (split skew)
    #[arg(long)]
    edge_mode: Option<String>,
    /// Linear-ramp rise time (fractions of the sample period); steps if unset
    #[arg(long)]
    rise_time: Option<f64>,
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump per-run waveform/spectrum CSVs and result JSON here
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_simulate(mut args: SimulateArgs, config: &Value) -> Result<()> {
    fill(&mut args.n, config, "n")?;
    fill(&mut args.stimulus, config, "stimulus")?;
    fill(&mut args.freq, config, "freq")?;
    fill(&mut args.samples, config, "samples")?;
    fill(&mut args.osr, config, "osr")?;
    fill(&mut args.sweep_tau, config, "sweep_tau")?;
    fill(&mut args.edge_mode, config, "edge_mode")?;
    fill(&mut args.rise_time, config, "rise_time")?;
    fill(&mut args.restarts, config, "restarts")?;
    fill(&mut args.seed, config, "seed")?;
    fill(&mut args.out, config, "out")?;
    let seed = args.seed.unwrap_or(0);
    let restarts = args.restarts.unwrap_or(8);
    let kind = args.mapper.unwrap_or(MapperKind::Canonical);
    let stimulus_kind = args.stimulus.unwrap_or_else(|| "sine".into());
    let freq = args.freq.unwrap_or_else(|| "31/1024".into());
    let samples = args.samples.unwrap_or(1024);
    let osr = args.osr.unwrap_or(64);
    let edge_mode = args.edge_mode.unwrap_or_else(|| "skewed".into());

    let mut taus = Vec::new();
    if let Some(sweep) = &args.sweep_tau {
        taus.extend(parse_sweep(sweep)?);
    }
    taus.extend(&args.taus);
    if taus.is_empty() {
        bail!("no skew values: give --sweep-tau or --tau");
    }

    let resolved = json!({
        "bases": args.bases, "mapper": kind.label(), "stimulus": stimulus_kind,
        "freq": freq, "samples": samples, "osr": osr,
        "taus": taus, "edge_mode": edge_mode, "rise_time": args.rise_time,
        "restarts": restarts,
    });
    let meta = run_meta("simulate", seed, resolved.clone());
    println!("resolved config: {resolved}");

    let stimulus = match stimulus_kind.as_str() {
        "sine" => {
            let (j, m) = parse_freq(&freq)?;
            let stim = StimulusConfig::coherent_sine(j, m, samples, osr);
            stim.validate()?;
            stim
        }
        "prbs" => StimulusConfig {
            kind: StimulusKind::PrbsCodes,
            num_samples: samples,
            osr,
        },
        other => bail!("unknown stimulus {other:?}; expected sine or prbs"),
    };

    let catalog = open_catalog(args.catalog.clone())?;
    let mut configured = Vec::new();
    for basis_spec in &args.bases {
        let (id, basis) = parse_basis(basis_spec, args.n, &catalog)?;
        let model = csdac_core::TransitionModel::uniform(basis.bit_depth());
        let mapper = kind.build(&basis, &model, restarts, seed)?;
        configured.push((id, basis, mapper));
    }
    let edges_for = |tau: f64| -> Result<EdgeModel> {
        Ok(match (edge_mode.as_str(), args.rise_time) {
            ("skewed", None) => EdgeModel::skewed_on(tau)?,
            ("symmetric", None) => EdgeModel::symmetric(tau)?,
            ("skewed", Some(rise)) => {
                EdgeModel::new(tau, 0.0, EdgeShape::LinearRamp { rise_time: rise })?
            }
            ("symmetric", Some(rise)) => EdgeModel::new(
                tau / 2.0,
                -tau / 2.0,
                EdgeShape::LinearRamp { rise_time: rise },
            )?,
            (other, _) => bail!("unknown edge mode {other:?}"),
        })
    };

    // independent jobs fan out across workers; rows merge back in order
    let jobs: Vec<(usize, f64)> = (0..configured.len())
        .flat_map(|b| taus.iter().map(move |&tau| (b, tau)))
        .collect();
    let results: Vec<csdac_core::SimResult> = jobs
        .par_iter()
        .map(|&(b, tau)| {
            let (_, basis, mapper) = &configured[b];
            Ok(run_experiment(
                basis,
                mapper,
                &stimulus,
                &edges_for(tau)?,
                seed,
            )?)
        })
        .collect::<Result<_>>()?;

    let mut csv = csv_header(&meta);
    csv.push_str("basis_id,L,mapper,tau,edge_mode,sndr_db,sfdr_db,seed\n");
    for ((b, tau), result) in jobs.iter().zip(&results) {
        let (id, basis, _) = &configured[*b];
        writeln!(
            csv,
            "{id},{},{},{tau},{edge_mode},{},{},{seed}",
            basis.len(),
            kind.label(),
            db_cell(Some(result.sndr_db)),
            db_cell(result.sfdr_db),
        )?;
        println!(
            "{id} tau={tau}: SNDR {} SFDR {}",
            db_cell(Some(result.sndr_db)),
            db_cell(result.sfdr_db)
        );
        if let Some(dir) = &args.dump_dir {
            dump_run(dir, id, *tau, result, &meta)?;
        }
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("csdac-sim.csv"));
    write_atomic(&out, csv.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Per-run artifacts: waveform CSV (time, value), spectrum CSV (bin, dB
/// relative to the strongest bin), and the full result JSON.
fn dump_run(
    dir: &Path,
    id: &str,
    tau: f64,
    result: &csdac_core::SimResult,
    meta: &Value,
) -> Result<()> {
    let stem = format!("{}-tau{tau}", id.replace(['/', ':'], "_"));
    let mut wave = csv_header(meta);
    wave.push_str("time,value\n");
    for (k, v) in result.waveform.iter().enumerate() {
        writeln!(wave, "{},{v}", k as f64 / result.osr as f64)?;
    }
    write_atomic(&dir.join(format!("{stem}-waveform.csv")), wave.as_bytes())?;

    let peak = result
        .spectrum
        .iter()
        .cloned()
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut spec = csv_header(meta);
    spec.push_str("bin,db\n");
    for (bin, mag) in result.spectrum.iter().enumerate() {
        let db = 20.0 * (mag / peak).max(1e-15).log10();
        writeln!(spec, "{bin},{db:.3}")?;
    }
    write_atomic(&dir.join(format!("{stem}-spectrum.csv")), spec.as_bytes())?;

    write_json_atomic(
        &dir.join(format!("{stem}-result.json")),
        &serde_json::json!({ "meta": meta, "result": result }),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// export-table
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    /// Table kind: memoryless (CSV) or greedy-lut (binary blob)
    #[arg(long)]
    kind: Option<String>,
    /// Memoryless source: memoryless (solved) or canonical
    #[arg(long)]
    mapper: Option<String>,
    #[arg(long)]
    restarts: Option<u32>,
    /// Entry cap for the greedy LUT
    #[arg(long)]
    lut_cap: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_export_table(mut args: ExportArgs, config: &Value) -> Result<()> {
    fill(&mut args.basis, config, "basis")?;
    fill(&mut args.n, config, "n")?;
    fill(&mut args.kind, config, "kind")?;
    fill(&mut args.mapper, config, "mapper")?;
    fill(&mut args.restarts, config, "restarts")?;
    fill(&mut args.seed, config, "seed")?;
    fill(&mut args.out, config, "out")?;
    let basis_spec = args.basis.context("--basis is required")?;
    let kind = args.kind.unwrap_or_else(|| "memoryless".into());
    let source = args.mapper.unwrap_or_else(|| "memoryless".into());
    let seed = args.seed.unwrap_or(0);
    let restarts = args.restarts.unwrap_or(8);
    let catalog = open_catalog(args.catalog.clone())?;
    let (id, basis) = parse_basis(&basis_spec, args.n, &catalog)?;

    let resolved = json!({
        "basis": id, "kind": kind, "mapper": source, "restarts": restarts,
        "lut_cap": args.lut_cap,
    });
    let meta = run_meta("export-table", seed, resolved.clone());
    println!("resolved config: {resolved}");

    match kind.as_str() {
        "memoryless" => {
            let model = csdac_core::TransitionModel::uniform(basis.bit_depth());
            let table = match source.as_str() {
                "canonical" => canonical_table(&basis)?,
                "memoryless" => memoryless_solve(&basis, &model, restarts, seed)?,
                other => bail!("unknown table source {other:?}"),
            };
            let mut bytes = csv_header(&meta).into_bytes();
            write_memoryless_csv(&table, &mut bytes)?;
            let out = args.out.unwrap_or_else(|| PathBuf::from("csdac-table.csv"));
            write_atomic(&out, &bytes)?;
            println!("wrote {} ({} rows)", out.display(), basis.num_codewords());
        }
        "greedy-lut" => {
            let table = build_greedy_lut_capped(&basis, args.lut_cap.unwrap_or(DEFAULT_LUT_CAP))?;
            let mut bytes = Vec::new();
            write_greedy_lut(&table, &mut bytes)?;
            let out = args.out.unwrap_or_else(|| PathBuf::from("csdac-table.lut"));
            write_atomic(&out, &bytes)?;
            let entries = 1u64 << (basis.bit_depth() + basis.len() as u32);
            println!("wrote {} ({entries} entries)", out.display());
        }
        other => bail!("unknown table kind {other:?}; expected memoryless or greedy-lut"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    code: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

fn cmd_enumerate(mut args: EnumerateArgs, config: &Value) -> Result<()> {
    fill(&mut args.basis, config, "basis")?;
    fill(&mut args.n, config, "n")?;
    fill(&mut args.code, config, "code")?;
    let basis_spec = args.basis.context("--basis is required")?;
    let code = args.code.context("--code is required")?;
    let catalog = open_catalog(args.catalog.clone())?;
    let (id, basis) = parse_basis(&basis_spec, args.n, &catalog)?;
    let set = enumerate_reps(code, &basis)?;
    println!(
        "basis {id} (L={}, N={}): {} representation(s) of {code}",
        basis.len(),
        basis.bit_depth(),
        set.len()
    );
    for rep in &set.reps {
        println!("{rep}");
    }
    let stats = rep_count_stats(&basis)?;
    println!(
        "redundancy: average {} min {} max {}",
        stats.average, stats.min, stats.max
    );
    Ok(())
}
