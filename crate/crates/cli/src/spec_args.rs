//! Parsing of basis, model, mapper, and sweep arguments.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use csdac_core::mappers::{memoryless_solve, Mapper};
use csdac_core::model::{Basis, Codeword, TransitionModel};
use csdac_core::presets;

use crate::output::Catalog;

/// A basis argument: a preset name (`8B`, `8T`, `4T+4B`, `opt12`), a
/// catalog reference (`catalog:<id>`), or an inline weight list
/// (`1,2,4,8`, which needs `--n`).
pub fn parse_basis(
    spec: &str,
    bit_depth: Option<u32>,
    catalog: &Catalog,
) -> Result<(String, Basis)> {
    let spec = spec.trim();
    if let Some(id) = spec.strip_prefix("catalog:") {
        let entry = catalog
            .find(id)
            .ok_or_else(|| anyhow!("catalog has no entry {id:?}"))?;
        let basis = Basis::new(entry.weights.clone(), entry.bit_depth)
            .context("catalog entry holds an invalid basis")?;
        return Ok((spec.to_string(), basis));
    }
    if spec.contains(',') {
        let weights: Vec<u32> = spec
            .split(',')
            .map(|t| t.trim().parse().context("inline weights must be integers"))
            .collect::<Result<_>>()?;
        let n = bit_depth.ok_or_else(|| anyhow!("inline weights need --n <bit depth>"))?;
        let basis = Basis::new(weights, n)?;
        return Ok((spec.to_string(), basis));
    }
    let basis = presets::parse(spec)?;
    Ok((spec.to_string(), basis))
}

/// A transition model argument: `uniform`, `joint:<json file>` (row-major
/// `2^N x 2^N` probabilities), or `sequence:<codes file>`.
pub fn parse_model(spec: &str, bit_depth: u32) -> Result<TransitionModel> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Ok(TransitionModel::uniform(bit_depth));
    }
    if let Some(path) = spec.strip_prefix("joint:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let joint: Vec<f64> =
            serde_json::from_str(&text).context("joint file must be a JSON array")?;
        return Ok(TransitionModel::from_joint(bit_depth, joint)?);
    }
    if let Some(path) = spec.strip_prefix("sequence:") {
        let codes = read_codes_file(Path::new(path))?;
        return Ok(TransitionModel::from_sequence(bit_depth, &codes)?);
    }
    bail!("unknown model {spec:?}; expected uniform, joint:<file>, or sequence:<file>")
}

/// Codes from a file: integers separated by whitespace, commas, or newlines;
/// `#` starts a comment.
pub fn read_codes_file(path: &Path) -> Result<Vec<Codeword>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut codes = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split(|c: char| c.is_whitespace() || c == ',') {
            if token.is_empty() {
                continue;
            }
            codes.push(
                token
                    .parse()
                    .with_context(|| format!("bad code {token:?}"))?,
            );
        }
    }
    if codes.is_empty() {
        bail!("{} contains no codes", path.display());
    }
    Ok(codes)
}

pub fn parse_codes_inline(spec: &str) -> Result<Vec<Codeword>> {
    spec.split(',')
        .map(|t| t.trim().parse().with_context(|| format!("bad code {t:?}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapperKind {
    /// Canonical representation per codeword (conventional decoder).
    Canonical,
    /// Globally optimal trellis search.
    Viterbi,
    /// Greedy best-next selection.
    Greedy,
    /// Coordinate-descent memoryless table.
    Memoryless,
}

impl MapperKind {
    pub fn label(self) -> &'static str {
        match self {
            MapperKind::Canonical => "canonical",
            MapperKind::Viterbi => "viterbi",
            MapperKind::Greedy => "greedy",
            MapperKind::Memoryless => "memoryless",
        }
    }

    /// Instantiates the mapper; memoryless solves its table here.
    pub fn build(
        self,
        basis: &Basis,
        model: &TransitionModel,
        restarts: u32,
        seed: u64,
    ) -> Result<Mapper> {
        Ok(match self {
            MapperKind::Canonical => Mapper::Canonical,
            MapperKind::Viterbi => Mapper::Viterbi,
            MapperKind::Greedy => Mapper::Greedy,
            MapperKind::Memoryless => {
                Mapper::Table(memoryless_solve(basis, model, restarts, seed)?)
            }
        })
    }
}

/// `start:step:end` (inclusive of the end within half a step).
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("sweep must be start:step:end, got {spec:?}");
    }
    let start: f64 = parts[0].parse().context("bad sweep start")?;
    let step: f64 = parts[1].parse().context("bad sweep step")?;
    let end: f64 = parts[2].parse().context("bad sweep end")?;
    if !step.is_finite() || step <= 0.0 {
        bail!("sweep step must be positive");
    }
    let mut values = Vec::new();
    let mut k = 0u32;
    loop {
        let v = start + f64::from(k) * step;
        if v > end + step * 0.5 {
            break;
        }
        values.push(v);
        k += 1;
    }
    if values.is_empty() {
        bail!("sweep {spec:?} produced no values");
    }
    Ok(values)
}

/// `J/M` normalized frequency.
pub fn parse_freq(spec: &str) -> Result<(u32, u32)> {
    let (num, den) = spec
        .split_once('/')
        .ok_or_else(|| anyhow!("frequency must be J/M, got {spec:?}"))?;
    Ok((
        num.trim().parse().context("bad frequency numerator")?,
        den.trim().parse().context("bad frequency denominator")?,
    ))
}

/// Formats a possibly-absent or infinite dB figure for CSV.
pub fn db_cell(value: Option<f64>) -> String {
    match value {
        None => String::new(),
        Some(v) if v.is_infinite() => "inf".to_string(),
        Some(v) => format!("{v:.4}"),
    }
}
