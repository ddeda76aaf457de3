//! Representation sets and glitch metrics.
//!
//! `enumerate_reps` materializes the set of switch patterns that decode to a
//! codeword; the metric functions evaluate expected glitch power for fixed
//! tables (complete case), representation distributions (over-complete case),
//! and stateful mappers (Monte Carlo).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mappers::{Mapper, MappingTable};
use crate::model::{Basis, Codeword, RepDistribution, Representation, TransitionModel};

/// Hard cap on how many representations of a single codeword may be
/// materialized.
pub const REP_SET_CAP: u64 = 1 << 22;

/// Longest basis for which the full `2^L` representation universe is built.
pub(crate) const MAX_UNIVERSE_L: usize = 22;

// ---------------------------------------------------------------------------
// Representation universe (internal kernel)
// ---------------------------------------------------------------------------

/// All `2^L` switch patterns of a basis, grouped by decoded value, with a
/// weighted-popcount table for O(1) glitch errors. Masks are lex-sorted
/// (canonical order) within each group.
pub(crate) struct RepUniverse {
    /// Weighted popcount of every mask.
    pub wsum: Vec<u32>,
    /// Masks per codeword, canonical order; patterns decoding above
    /// `2^N - 1` are not listed.
    pub by_code: Vec<Vec<u32>>,
}

impl RepUniverse {
    pub fn build(basis: &Basis) -> Result<Self> {
        Self::build_inner(basis, true)
    }

    /// Skips the per-group canonical sort; group order is ascending mask.
    /// Only for order-insensitive consumers (objective sampling).
    pub fn build_unsorted(basis: &Basis) -> Result<Self> {
        Self::build_inner(basis, false)
    }

    fn build_inner(basis: &Basis, sort: bool) -> Result<Self> {
        let l = basis.len();
        if l > MAX_UNIVERSE_L {
            return Err(Error::BasisTooLarge {
                len: l,
                max: MAX_UNIVERSE_L,
            });
        }
        let size = 1usize << l;
        let weights = basis.weights();
        let mut wsum = vec![0u32; size];
        for mask in 1..size {
            let lsb = mask.trailing_zeros() as usize;
            wsum[mask] = wsum[mask ^ (1 << lsb)] + weights[lsb];
        }
        let ncodes = basis.num_codewords();
        let mut by_code = vec![Vec::new(); ncodes as usize];
        for (mask, &value) in wsum.iter().enumerate() {
            if value < ncodes {
                by_code[value as usize].push(mask as u32);
            }
        }
        if sort {
            for group in &mut by_code {
                group.sort_unstable_by_key(|&m| lex_key(m, l));
            }
        }
        Ok(RepUniverse { wsum, by_code })
    }

    /// Glitch error between two packed patterns.
    #[inline]
    pub fn ge(&self, a: u32, b: u32) -> u64 {
        u64::from(self.wsum[(a ^ b) as usize])
    }

    pub fn reps(&self, code: Codeword) -> &[u32] {
        &self.by_code[code as usize]
    }
}

/// Sort key realizing lexicographic bit-string order on packed masks.
#[inline]
pub(crate) fn lex_key(mask: u32, l: usize) -> u32 {
    mask.reverse_bits() >> (32 - l)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// The set of representations of one codeword, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepSet {
    pub codeword: Codeword,
    pub reps: Vec<Representation>,
}

impl RepSet {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
}

/// Counts subsets of `weights` summing to each value in `0..=target`,
/// saturating at `u64::MAX`.
fn subset_sum_counts(weights: &[u32], target: u64) -> Vec<u64> {
    let target = target as usize;
    let mut counts = vec![0u64; target + 1];
    counts[0] = 1;
    for &w in weights {
        let w = w as usize;
        if w > target {
            continue;
        }
        for s in (w..=target).rev() {
            counts[s] = counts[s].saturating_add(counts[s - w]);
        }
    }
    counts
}

/// Enumerates every switch pattern that decodes to `x`: depth-first
/// subset-sum over the weights taken largest first, pruned by suffix sums.
/// Errors out before materializing sets larger than [`REP_SET_CAP`].
pub fn enumerate_reps(x: Codeword, basis: &Basis) -> Result<RepSet> {
    basis.check_code(x)?;
    let count = subset_sum_counts(basis.weights(), u64::from(x))[x as usize];
    if count > REP_SET_CAP {
        return Err(Error::RepSetTooLarge {
            code: x,
            count,
            cap: REP_SET_CAP,
        });
    }
    let weights = basis.weights();
    let l = weights.len();
    // prefix_sum[i] = sum of weights[0..i]: the largest value the first i
    // weights can still contribute
    let mut prefix_sum = vec![0u64; l + 1];
    for i in 0..l {
        prefix_sum[i + 1] = prefix_sum[i] + u64::from(weights[i]);
    }
    let mut reps = Vec::with_capacity(count as usize);
    let mut scratch = Representation::zeros(l);
    // walk indices from the largest weight down
    fn dfs(
        idx: usize,
        remaining: u64,
        weights: &[u32],
        prefix_sum: &[u64],
        scratch: &mut Representation,
        out: &mut Vec<Representation>,
    ) {
        if remaining == 0 {
            out.push(scratch.clone());
            return;
        }
        if idx == 0 || prefix_sum[idx] < remaining {
            return;
        }
        let i = idx - 1;
        let w = u64::from(weights[i]);
        if w <= remaining {
            scratch.set_bit(i, true);
            dfs(i, remaining - w, weights, prefix_sum, scratch, out);
            scratch.set_bit(i, false);
        }
        dfs(i, remaining, weights, prefix_sum, scratch, out);
    }
    dfs(
        l,
        u64::from(x),
        weights,
        &prefix_sum,
        &mut scratch,
        &mut reps,
    );
    debug_assert_eq!(reps.len() as u64, count);
    reps.sort_unstable();
    Ok(RepSet { codeword: x, reps })
}

/// Per-codeword representation counts over the whole code range, saturating.
pub fn rep_counts(basis: &Basis) -> Result<Vec<u64>> {
    let counts = subset_sum_counts(basis.weights(), u64::from(basis.max_code()));
    if let Some(code) = counts.iter().position(|&c| c == 0) {
        return Err(Error::CoverageGap(code as u32));
    }
    Ok(counts)
}

/// Redundancy statistics of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepStats {
    /// Mean representations per codeword; `2^(L-N)` for full-scale-exact
    /// bases.
    pub average: f64,
    pub min: u64,
    pub max: u64,
}

pub fn rep_count_stats(basis: &Basis) -> Result<RepStats> {
    let counts = rep_counts(basis)?;
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    Ok(RepStats {
        average: total / counts.len() as f64,
        min: *counts.iter().min().expect("code range is never empty"),
        max: *counts.iter().max().expect("code range is never empty"),
    })
}

// ---------------------------------------------------------------------------
// Metric reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    Analytic,
    MonteCarlo,
}

/// Expected glitch power of a configuration, with the thermometer-coded
/// metric under the same transition model as the normalization reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub raw_metric: f64,
    /// `raw_metric` divided by the thermometer-coded metric.
    pub normalized_metric: f64,
    pub basis: Basis,
    pub mapper: String,
    pub method: EvalMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<u64>,
    /// 95% confidence half-width of `raw_metric` (Monte Carlo only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_halfwidth: Option<f64>,
}

impl MetricReport {
    pub fn with_mapper(mut self, label: impl Into<String>) -> Self {
        self.mapper = label.into();
        self
    }
}

/// Expected squared code step of a thermometer-coded DAC under `model`; the
/// normalization denominator for every metric.
pub fn thermometer_metric(model: &TransitionModel) -> f64 {
    let n = model.num_codewords();
    match model {
        TransitionModel::UniformIid { .. } => {
            let nf = n as f64;
            (nf * nf - 1.0) / 6.0
        }
        TransitionModel::Empirical { .. } => {
            let mut total = 0.0;
            for x in 0..n {
                for y in 0..n {
                    let d = f64::from(x) - f64::from(y);
                    total += model.prob(x, y) * d * d;
                }
            }
            total
        }
    }
}

fn normalized(raw: f64, therm: f64) -> f64 {
    if therm > 0.0 {
        raw / therm
    } else if raw == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Pairwise glitch error over word vectors, without length re-checks.
fn ge_reps(a: &Representation, b: &Representation, weights: &[u32]) -> u64 {
    a.toggled(b).map(|i| u64::from(weights[i])).sum()
}

/// Exact expected glitch power of a fixed one-representation-per-codeword
/// table: the double sum over all `2^N x 2^N` transitions.
pub fn metric_complete(
    basis: &Basis,
    table: &MappingTable,
    model: &TransitionModel,
) -> Result<MetricReport> {
    let reps = table.memoryless_reps()?;
    check_model_depth(basis, model)?;
    let n = basis.num_codewords();
    if reps.len() != n as usize {
        return Err(Error::IncompleteTable(reps.len() as u32));
    }
    let weights = basis.weights();
    let uniform = matches!(model, TransitionModel::UniformIid { .. });
    let mut raw = 0.0;
    for x in 0..n as usize {
        for y in (x + 1)..n as usize {
            let ge = ge_reps(&reps[x], &reps[y], weights) as f64;
            let ge2 = ge * ge;
            if uniform {
                raw += 2.0 * ge2;
            } else {
                raw += (model.prob(x as u32, y as u32) + model.prob(y as u32, x as u32)) * ge2;
            }
        }
    }
    if uniform {
        raw /= n as f64 * n as f64;
    }
    let therm = thermometer_metric(model);
    Ok(MetricReport {
        raw_metric: raw,
        normalized_metric: normalized(raw, therm),
        basis: basis.clone(),
        mapper: table.mode().to_string(),
        method: EvalMethod::Analytic,
        sample_count: None,
        ci_halfwidth: None,
    })
}

/// Exact expected glitch power when each transition may pick the target
/// representation minimizing the error: averages over the source
/// distribution, minimizes over the target set.
pub fn metric_overcomplete(
    basis: &Basis,
    rep_dist: &RepDistribution,
    model: &TransitionModel,
) -> Result<MetricReport> {
    check_model_depth(basis, model)?;
    if rep_dist.num_codewords() != basis.num_codewords() as usize {
        return Err(Error::InvalidModel(format!(
            "distribution covers {} codewords, expected {}",
            rep_dist.num_codewords(),
            basis.num_codewords()
        )));
    }
    let universe = RepUniverse::build(basis)?;
    let n = basis.num_codewords();
    let uniform = matches!(model, TransitionModel::UniformIid { .. });
    let mut raw = 0.0;
    for x in 0..n {
        for (rep, p) in rep_dist.for_code(x) {
            if *p == 0.0 {
                continue;
            }
            if rep.len() != basis.len() {
                return Err(Error::DimensionMismatch {
                    rep_len: rep.len(),
                    basis_len: basis.len(),
                });
            }
            let a = rep.low_mask().expect("universe bases fit in one word") as u32;
            let mut inner = 0.0;
            for y in 0..n {
                let best = universe
                    .reps(y)
                    .iter()
                    .map(|&b| universe.ge(a, b))
                    .min()
                    .ok_or(Error::CoverageGap(y))? as f64;
                let term = best * best;
                if uniform {
                    inner += term;
                } else {
                    inner += model.prob(x, y) * term;
                }
            }
            if uniform {
                inner /= n as f64 * n as f64;
            }
            raw += p * inner;
        }
    }
    let therm = thermometer_metric(model);
    Ok(MetricReport {
        raw_metric: raw,
        normalized_metric: normalized(raw, therm),
        basis: basis.clone(),
        mapper: "best-of-set".to_string(),
        method: EvalMethod::Analytic,
        sample_count: None,
        ci_halfwidth: None,
    })
}

/// Estimates the per-transition expected squared glitch error of a stateful
/// mapper by driving it over a sequence drawn from `model`. Deterministic
/// given `(seed, length)`.
pub fn metric_monte_carlo(
    basis: &Basis,
    mapper: &Mapper,
    model: &TransitionModel,
    length: usize,
    seed: u64,
) -> Result<MetricReport> {
    check_model_depth(basis, model)?;
    if length < 2 {
        return Err(Error::InvalidConfig(
            "monte carlo evaluation needs a sequence of at least 2 codes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = model.sample_sequence(length, &mut rng);
    let path = mapper.map_sequence(&codes, basis, None)?;
    let weights = basis.weights();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let m = (length - 1) as f64;
    for pair in path.reps.windows(2) {
        let ge = ge_reps(&pair[0], &pair[1], weights) as f64;
        let ge2 = ge * ge;
        sum += ge2;
        sum_sq += ge2 * ge2;
    }
    let mean = sum / m;
    let variance = ((sum_sq - sum * sum / m) / (m - 1.0)).max(0.0);
    let halfwidth = 1.96 * (variance / m).sqrt();
    let therm = thermometer_metric(model);
    Ok(MetricReport {
        raw_metric: mean,
        normalized_metric: normalized(mean, therm),
        basis: basis.clone(),
        mapper: mapper.label().to_string(),
        method: EvalMethod::MonteCarlo,
        sample_count: Some(length as u64 - 1),
        ci_halfwidth: Some(halfwidth),
    })
}

fn check_model_depth(basis: &Basis, model: &TransitionModel) -> Result<()> {
    if basis.bit_depth() != model.bit_depth() {
        return Err(Error::InvalidModel(format!(
            "model depth {} does not match basis depth {}",
            model.bit_depth(),
            basis.bit_depth()
        )));
    }
    Ok(())
}

impl RepDistribution {
    /// Uniform distribution over every representation of each codeword.
    pub fn uniform(basis: &Basis) -> Result<Self> {
        let universe = RepUniverse::build(basis)?;
        let l = basis.len();
        let entries = universe
            .by_code
            .iter()
            .map(|group| {
                let p = 1.0 / group.len() as f64;
                group
                    .iter()
                    .map(|&m| (Representation::from_low_mask(u64::from(m), l), p))
                    .collect()
            })
            .collect();
        // groups come straight from the universe, so skip re-validation
        Ok(Self::from_validated(entries))
    }
}
