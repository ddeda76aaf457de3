//! Representation selection for codeword sequences: optimal trellis search,
//! greedy best-next (with an offline LUT form), and memoryless fixed tables
//! solved by coordinate descent.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    decode, Basis, Codeword, RepDistribution, Representation, SuffixFeasibility, TransitionModel,
};
use crate::reps::{enumerate_reps, RepUniverse};

/// Default cap on greedy LUT size (`2^(N+L)` entries).
pub const DEFAULT_LUT_CAP: u64 = 1 << 24;

/// Sequence mappers require packed one-word patterns.
const MAX_SEQ_L: usize = 64;

// ---------------------------------------------------------------------------
// Mapping table
// ---------------------------------------------------------------------------

/// Precomputed representation assignment: either one fixed representation per
/// codeword, or a greedy lookup table keyed by (previous pattern, codeword).
#[derive(Debug, Clone, PartialEq)]
pub enum MappingTable {
    Memoryless {
        basis: Basis,
        /// Representation of each codeword `0..2^N`.
        reps: Vec<Representation>,
    },
    GreedyLut {
        basis: Basis,
        /// Packed representation for key `prev_mask * 2^N + code`;
        /// `u32::MAX` marks previous patterns that decode out of range.
        entries: Vec<u32>,
    },
}

impl MappingTable {
    /// Builds a memoryless table, checking coverage and that every entry
    /// decodes to its codeword.
    pub fn memoryless(basis: Basis, reps: Vec<Representation>) -> Result<Self> {
        if reps.len() != basis.num_codewords() as usize {
            return Err(Error::IncompleteTable(reps.len() as u32));
        }
        for (code, rep) in reps.iter().enumerate() {
            let value = decode(rep, &basis)?;
            if value != code as u64 {
                return Err(Error::Inconsistent {
                    decoded: value,
                    expected: code as u64,
                });
            }
        }
        Ok(MappingTable::Memoryless { basis, reps })
    }

    pub fn basis(&self) -> &Basis {
        match self {
            MappingTable::Memoryless { basis, .. } => basis,
            MappingTable::GreedyLut { basis, .. } => basis,
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            MappingTable::Memoryless { .. } => "memoryless",
            MappingTable::GreedyLut { .. } => "greedy-lut",
        }
    }

    /// The per-codeword representations of a memoryless table.
    pub fn memoryless_reps(&self) -> Result<&[Representation]> {
        match self {
            MappingTable::Memoryless { reps, .. } => Ok(reps),
            MappingTable::GreedyLut { .. } => Err(Error::InvalidConfig(
                "operation needs a memoryless table, got a greedy LUT".into(),
            )),
        }
    }

    pub fn rep_for(&self, code: Codeword) -> Result<&Representation> {
        let reps = self.memoryless_reps()?;
        reps.get(code as usize).ok_or(Error::IncompleteTable(code))
    }

    /// Greedy LUT lookup for (previous pattern, codeword).
    pub fn lut_rep(&self, prev: &Representation, code: Codeword) -> Result<Representation> {
        match self {
            MappingTable::Memoryless { .. } => Err(Error::InvalidConfig(
                "operation needs a greedy LUT, got a memoryless table".into(),
            )),
            MappingTable::GreedyLut { basis, entries } => {
                basis.check_code(code)?;
                if prev.len() != basis.len() {
                    return Err(Error::DimensionMismatch {
                        rep_len: prev.len(),
                        basis_len: basis.len(),
                    });
                }
                let mask = prev.low_mask().expect("LUT bases fit in one word");
                let key = (mask as usize) << basis.bit_depth() | code as usize;
                let entry = entries[key];
                if entry == u32::MAX {
                    return Err(Error::Inconsistent {
                        decoded: decode(prev, basis)?,
                        expected: u64::from(basis.max_code()),
                    });
                }
                Ok(Representation::from_low_mask(u64::from(entry), basis.len()))
            }
        }
    }
}

impl RepDistribution {
    /// Degenerate distribution putting probability 1 on each table entry.
    pub fn from_table(table: &MappingTable) -> Result<Self> {
        let reps = table.memoryless_reps()?;
        Ok(Self::from_validated(
            reps.iter().map(|r| vec![(r.clone(), 1.0)]).collect(),
        ))
    }
}

/// Memoryless table assigning every codeword its canonical representation.
/// Works for any basis length (thermometer included).
pub fn canonical_table(basis: &Basis) -> Result<MappingTable> {
    let feas = SuffixFeasibility::build(basis);
    let reps = (0..=basis.max_code())
        .map(|code| feas.canonical_rep(code))
        .collect::<Result<Vec<_>>>()?;
    Ok(MappingTable::Memoryless {
        basis: basis.clone(),
        reps,
    })
}

// ---------------------------------------------------------------------------
// Trellis path
// ---------------------------------------------------------------------------

/// Result of mapping a code sequence: the chosen representation per sample
/// and the exact accumulated cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrellisPath {
    pub reps: Vec<Representation>,
    /// Sum over consecutive pairs of squared glitch errors.
    pub cost: u64,
    /// Trellis width per stage: the representation count of each codeword
    /// (1 for a constrained first stage), saturating.
    pub stage_states: Vec<u64>,
}

// ---------------------------------------------------------------------------
// Glitch-error kernel for packed patterns
// ---------------------------------------------------------------------------

enum GeKernel<'a> {
    /// Weighted popcount table over all 2^L masks.
    Table(Vec<u32>),
    /// Bit-loop fallback for longer bases.
    Direct(&'a [u32]),
}

const MAX_TABLE_L: usize = 20;

impl<'a> GeKernel<'a> {
    fn new(basis: &'a Basis) -> Self {
        let l = basis.len();
        if l <= MAX_TABLE_L {
            let weights = basis.weights();
            let mut wsum = vec![0u32; 1 << l];
            for mask in 1..1usize << l {
                let lsb = mask.trailing_zeros() as usize;
                wsum[mask] = wsum[mask ^ (1 << lsb)] + weights[lsb];
            }
            GeKernel::Table(wsum)
        } else {
            GeKernel::Direct(basis.weights())
        }
    }

    #[inline]
    fn ge(&self, a: u64, b: u64) -> u64 {
        match self {
            GeKernel::Table(wsum) => u64::from(wsum[(a ^ b) as usize]),
            GeKernel::Direct(weights) => {
                let mut x = a ^ b;
                let mut total = 0u64;
                while x != 0 {
                    total += u64::from(weights[x.trailing_zeros() as usize]);
                    x &= x - 1;
                }
                total
            }
        }
    }

    #[inline]
    fn ge_sq(&self, a: u64, b: u64) -> u64 {
        let g = self.ge(a, b);
        g * g
    }
}

// ---------------------------------------------------------------------------
// Sequence mapping
// ---------------------------------------------------------------------------

/// Packed representation masks per distinct code of a sequence, in canonical
/// order.
fn gather_code_reps(codes: &[Codeword], basis: &Basis) -> Result<HashMap<Codeword, Vec<u64>>> {
    if basis.len() > MAX_SEQ_L {
        return Err(Error::BasisTooLarge {
            len: basis.len(),
            max: MAX_SEQ_L,
        });
    }
    let mut map = HashMap::new();
    for &code in codes {
        if let std::collections::hash_map::Entry::Vacant(slot) = map.entry(code) {
            let set = enumerate_reps(code, basis)?;
            let masks: Vec<u64> = set
                .reps
                .iter()
                .map(|r| r.low_mask().expect("bounded length"))
                .collect();
            slot.insert(masks);
        }
    }
    Ok(map)
}

/// Saturating per-stage trellis widths.
fn stage_widths(codes: &[Codeword], basis: &Basis, constrained_start: bool) -> Result<Vec<u64>> {
    let counts = crate::reps::rep_counts(basis)?;
    let mut widths: Vec<u64> = codes.iter().map(|&c| counts[c as usize]).collect();
    if constrained_start {
        widths[0] = 1;
    }
    Ok(widths)
}

fn check_initial(
    initial: Option<&Representation>,
    first_code: Codeword,
    basis: &Basis,
) -> Result<Option<u64>> {
    match initial {
        None => Ok(None),
        Some(rep) => {
            let value = decode(rep, basis)?;
            if value != u64::from(first_code) {
                return Err(Error::Inconsistent {
                    decoded: value,
                    expected: u64::from(first_code),
                });
            }
            Ok(Some(rep.low_mask().ok_or(Error::BasisTooLarge {
                len: basis.len(),
                max: MAX_SEQ_L,
            })?))
        }
    }
}

fn validate_codes(codes: &[Codeword], basis: &Basis) -> Result<()> {
    if codes.is_empty() {
        return Err(Error::EmptySequence);
    }
    for &c in codes {
        basis.check_code(c)?;
    }
    Ok(())
}

/// Globally optimal representation selection: dynamic programming over the
/// per-sample representation sets, minimizing the summed squared glitch
/// error. Ties break toward the canonically smallest representation at every
/// stage. The first stage is free (zero cost for every representation of
/// `codes[0]`) unless `initial` pins it.
pub fn viterbi_map(
    codes: &[Codeword],
    basis: &Basis,
    initial: Option<&Representation>,
) -> Result<TrellisPath> {
    validate_codes(codes, basis)?;
    let reps = gather_code_reps(codes, basis)?;
    let kernel = GeKernel::new(basis);
    let initial_mask = check_initial(initial, codes[0], basis)?;

    let pinned = vec![initial_mask.unwrap_or_default()];
    let states0: &[u64] = match initial_mask {
        Some(_) => &pinned,
        None => &reps[&codes[0]],
    };

    let mut states: Vec<u64> = states0.to_vec();
    let mut costs: Vec<u64> = vec![0; states.len()];
    // back-pointers per transition stage, indices into the previous stage
    let mut backptrs: Vec<Vec<u32>> = Vec::with_capacity(codes.len().saturating_sub(1));

    for &code in &codes[1..] {
        let next = &reps[&code];
        let mut new_costs = vec![u64::MAX; next.len()];
        let mut bp = vec![0u32; next.len()];
        for (j, &b) in next.iter().enumerate() {
            let mut best = u64::MAX;
            let mut best_i = 0u32;
            for (i, &a) in states.iter().enumerate() {
                let c = costs[i] + kernel.ge_sq(a, b);
                if c < best {
                    best = c;
                    best_i = i as u32;
                }
            }
            new_costs[j] = best;
            bp[j] = best_i;
        }
        backptrs.push(bp);
        states = next.clone();
        costs = new_costs;
    }

    // canonical order within each stage, so the first minimum is the
    // canonically smallest endpoint
    let mut best_j = 0;
    for (j, &c) in costs.iter().enumerate() {
        if c < costs[best_j] {
            best_j = j;
        }
    }
    let total_cost = costs[best_j];

    let mut chosen = vec![0u64; codes.len()];
    let mut j = best_j;
    chosen[codes.len() - 1] = states[j];
    for m in (1..codes.len()).rev() {
        j = backptrs[m - 1][j] as usize;
        let stage_states: &[u64] = if m - 1 == 0 {
            match initial_mask {
                Some(_) => &pinned,
                None => &reps[&codes[0]],
            }
        } else {
            &reps[&codes[m - 1]]
        };
        chosen[m - 1] = stage_states[j];
    }

    let l = basis.len();
    Ok(TrellisPath {
        reps: chosen
            .into_iter()
            .map(|m| Representation::from_low_mask(m, l))
            .collect(),
        cost: total_cost,
        stage_states: stage_widths(codes, basis, initial_mask.is_some())?,
    })
}

/// Greedy best-next selection: each stage minimizes the squared glitch error
/// against the previously committed representation only. The first stage uses
/// `initial` or the canonical representation.
pub fn greedy_map(
    codes: &[Codeword],
    basis: &Basis,
    initial: Option<&Representation>,
) -> Result<TrellisPath> {
    validate_codes(codes, basis)?;
    let reps = gather_code_reps(codes, basis)?;
    let kernel = GeKernel::new(basis);
    let initial_mask = check_initial(initial, codes[0], basis)?;

    let mut prev = match initial_mask {
        Some(m) => m,
        None => reps[&codes[0]][0], // canonical: groups are lex-sorted
    };
    let mut chosen = Vec::with_capacity(codes.len());
    chosen.push(prev);
    let mut cost = 0u64;
    for &code in &codes[1..] {
        let mut best = u64::MAX;
        let mut best_mask = 0u64;
        for &b in &reps[&code] {
            let c = kernel.ge_sq(prev, b);
            if c < best {
                best = c;
                best_mask = b;
            }
        }
        cost += best;
        prev = best_mask;
        chosen.push(prev);
    }

    let l = basis.len();
    Ok(TrellisPath {
        reps: chosen
            .into_iter()
            .map(|m| Representation::from_low_mask(m, l))
            .collect(),
        cost,
        stage_states: stage_widths(codes, basis, initial_mask.is_some())?,
    })
}

// ---------------------------------------------------------------------------
// Greedy LUT
// ---------------------------------------------------------------------------

/// Precomputes the greedy best-next choice for every (previous pattern,
/// codeword) pair, i.e. a table of `2^(N+L)` entries. Previous patterns that
/// decode out of range are omitted.
pub fn build_greedy_lut(basis: &Basis) -> Result<MappingTable> {
    build_greedy_lut_capped(basis, DEFAULT_LUT_CAP)
}

/// As [`build_greedy_lut`], refusing to allocate more than `cap` entries.
pub fn build_greedy_lut_capped(basis: &Basis, cap: u64) -> Result<MappingTable> {
    let total: u64 = 1u64 << (basis.bit_depth() + basis.len() as u32);
    if total > cap {
        return Err(Error::LutTooLarge {
            entries: total,
            cap,
        });
    }
    let universe = RepUniverse::build(basis)?;
    let n_codes = basis.num_codewords();
    let max_code = basis.max_code();
    let mut entries = vec![u32::MAX; total as usize];
    for prev in 0..1u32 << basis.len() {
        if universe.wsum[prev as usize] > max_code {
            continue;
        }
        let row = (prev as usize) << basis.bit_depth();
        for code in 0..n_codes {
            let mut best = u64::MAX;
            let mut best_mask = 0u32;
            for &b in universe.reps(code) {
                let g = universe.ge(prev, b);
                let c = g * g;
                if c < best {
                    best = c;
                    best_mask = b;
                }
            }
            entries[row | code as usize] = best_mask;
        }
    }
    Ok(MappingTable::GreedyLut {
        basis: basis.clone(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Memoryless mapping (coordinate descent)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Ascending,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct MemorylessOptions {
    pub restarts: u32,
    pub seed: u64,
    pub sweep: SweepOrder,
}

impl MemorylessOptions {
    pub fn new(restarts: u32, seed: u64) -> Self {
        MemorylessOptions {
            restarts,
            seed,
            sweep: SweepOrder::Ascending,
        }
    }
}

/// Transition weighting for the coordinate-descent update of one codeword:
/// both directions of a pair involve its representation.
enum CostWeights {
    Uniform,
    PerPair(Vec<f64>), // c[x * 2^N + y] = P(x, y) + P(y, x)
}

impl CostWeights {
    fn build(model: &TransitionModel) -> Self {
        match model {
            TransitionModel::UniformIid { .. } => CostWeights::Uniform,
            TransitionModel::Empirical { .. } => {
                let n = model.num_codewords();
                let mut c = vec![0.0; (n as usize) * (n as usize)];
                for x in 0..n {
                    for y in 0..n {
                        c[x as usize * n as usize + y as usize] =
                            model.prob(x, y) + model.prob(y, x);
                    }
                }
                CostWeights::PerPair(c)
            }
        }
    }
}

/// Solves for one fixed representation per codeword by coordinate descent:
/// sweeps the codewords, replacing each representation with the one
/// minimizing its expected transition cost against the rest of the table,
/// until a full sweep changes nothing. Restart 0 starts from the canonical
/// table; later restarts from random representations. The best table over all
/// restarts (by the exact complete-table metric) is returned.
pub fn memoryless_solve(
    basis: &Basis,
    model: &TransitionModel,
    restarts: u32,
    seed: u64,
) -> Result<MappingTable> {
    memoryless_solve_with(basis, model, &MemorylessOptions::new(restarts, seed))
}

pub fn memoryless_solve_with(
    basis: &Basis,
    model: &TransitionModel,
    options: &MemorylessOptions,
) -> Result<MappingTable> {
    if options.restarts < 1 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    if model.bit_depth() != basis.bit_depth() {
        return Err(Error::InvalidModel(format!(
            "model depth {} does not match basis depth {}",
            model.bit_depth(),
            basis.bit_depth()
        )));
    }
    let universe = RepUniverse::build(basis)?;
    let weights = CostWeights::build(model);
    let mut best: Option<(f64, Vec<u32>)> = None;
    for restart in 0..options.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(options.seed, u64::from(restart)));
        let init: Vec<u32> = if restart == 0 {
            (0..=basis.max_code())
                .map(|c| universe.reps(c)[0])
                .collect()
        } else {
            (0..=basis.max_code())
                .map(|c| {
                    let group = universe.reps(c);
                    group[rng.gen_range(0..group.len())]
                })
                .collect()
        };
        let (table, trace) = coordinate_descent(&universe, &weights, init, options.sweep, &mut rng);
        let objective = *trace.last().expect("trace has at least the initial point");
        match &best {
            Some((obj, _)) if *obj <= objective => {}
            _ => best = Some((objective, table)),
        }
    }
    let (_, masks) = best.expect("at least one restart ran");
    let l = basis.len();
    let reps = masks
        .into_iter()
        .map(|m| Representation::from_low_mask(u64::from(m), l))
        .collect();
    Ok(MappingTable::Memoryless {
        basis: basis.clone(),
        reps,
    })
}

/// One coordinate-descent run; returns the fixed point and the exact table
/// metric after the initial point and each sweep (non-increasing).
fn coordinate_descent(
    universe: &RepUniverse,
    weights: &CostWeights,
    mut table: Vec<u32>,
    sweep: SweepOrder,
    rng: &mut ChaCha8Rng,
) -> (Vec<u32>, Vec<f64>) {
    let n = table.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = vec![table_metric(universe, weights, &table)];
    loop {
        if sweep == SweepOrder::Randomized {
            shuffle(&mut order, rng);
        }
        let mut changed = false;
        for &x in &order {
            let group = universe.reps(x as Codeword);
            if group.len() == 1 {
                continue;
            }
            match weights {
                CostWeights::Uniform => {
                    let eval = |cand: u32| -> u64 {
                        let mut total = 0u64;
                        for (y, &t) in table.iter().enumerate() {
                            if y != x {
                                let g = universe.ge(cand, t);
                                total += g * g;
                            }
                        }
                        total
                    };
                    let current = eval(table[x]);
                    let mut best = current;
                    let mut best_mask = table[x];
                    for &cand in group {
                        if cand == table[x] {
                            continue;
                        }
                        let cost = eval(cand);
                        if cost < best {
                            best = cost;
                            best_mask = cand;
                        }
                    }
                    if best_mask != table[x] {
                        table[x] = best_mask;
                        changed = true;
                    }
                }
                CostWeights::PerPair(c) => {
                    let row = x * n;
                    let eval = |cand: u32| -> f64 {
                        let mut total = 0.0;
                        for (y, &t) in table.iter().enumerate() {
                            if y != x {
                                let g = universe.ge(cand, t) as f64;
                                total += c[row + y] * g * g;
                            }
                        }
                        total
                    };
                    let current = eval(table[x]);
                    let mut best = current;
                    let mut best_mask = table[x];
                    for &cand in group {
                        if cand == table[x] {
                            continue;
                        }
                        let cost = eval(cand);
                        if cost < best {
                            best = cost;
                            best_mask = cand;
                        }
                    }
                    if best_mask != table[x] {
                        table[x] = best_mask;
                        changed = true;
                    }
                }
            }
        }
        trace.push(table_metric(universe, weights, &table));
        if !changed {
            break;
        }
    }
    (table, trace)
}

/// Exact complete-table metric of a packed table under the sweep weighting.
fn table_metric(universe: &RepUniverse, weights: &CostWeights, table: &[u32]) -> f64 {
    let n = table.len();
    let mut total = 0.0;
    match weights {
        CostWeights::Uniform => {
            let mut acc = 0u64;
            for x in 0..n {
                for y in (x + 1)..n {
                    let g = universe.ge(table[x], table[y]);
                    acc += g * g;
                }
            }
            total = 2.0 * acc as f64 / (n as f64 * n as f64);
        }
        CostWeights::PerPair(c) => {
            for x in 0..n {
                for y in (x + 1)..n {
                    let g = universe.ge(table[x], table[y]) as f64;
                    total += c[x * n + y] * g * g;
                }
            }
        }
    }
    total
}

/// Fisher-Yates with the crate's reproducible generator.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 step keeps per-stream generators decorrelated
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Mapper handle
// ---------------------------------------------------------------------------

/// A representation-selection strategy usable by the metric and simulation
/// drivers.
#[derive(Debug, Clone)]
pub enum Mapper {
    /// Canonical representation per codeword (conventional decoder).
    Canonical,
    /// Globally optimal trellis search.
    Viterbi,
    /// Greedy best-next, computed on the fly.
    Greedy,
    /// Replay of a precomputed table (memoryless or greedy LUT).
    Table(MappingTable),
}

impl Mapper {
    pub fn label(&self) -> &'static str {
        match self {
            Mapper::Canonical => "canonical",
            Mapper::Viterbi => "viterbi",
            Mapper::Greedy => "greedy",
            Mapper::Table(t) => t.mode(),
        }
    }

    /// Maps a code sequence to representations. `initial` pins the first
    /// stage for the sequential mappers and is ignored by table replay.
    pub fn map_sequence(
        &self,
        codes: &[Codeword],
        basis: &Basis,
        initial: Option<&Representation>,
    ) -> Result<TrellisPath> {
        match self {
            Mapper::Viterbi => viterbi_map(codes, basis, initial),
            Mapper::Greedy => greedy_map(codes, basis, initial),
            Mapper::Canonical => {
                validate_codes(codes, basis)?;
                let table = canonical_table(basis)?;
                replay_memoryless(codes, &table)
            }
            Mapper::Table(table) => {
                validate_codes(codes, basis)?;
                if table.basis() != basis {
                    return Err(Error::InvalidConfig(
                        "mapping table was built for a different basis".into(),
                    ));
                }
                match table {
                    MappingTable::Memoryless { .. } => replay_memoryless(codes, table),
                    MappingTable::GreedyLut { .. } => replay_lut(codes, table, initial),
                }
            }
        }
    }
}

fn replay_memoryless(codes: &[Codeword], table: &MappingTable) -> Result<TrellisPath> {
    let basis = table.basis();
    let reps = table.memoryless_reps()?;
    let weights = basis.weights();
    let mut out = Vec::with_capacity(codes.len());
    let mut cost = 0u64;
    for (m, &code) in codes.iter().enumerate() {
        let rep = &reps[code as usize];
        if m > 0 {
            let g: u64 = out
                .last()
                .map(|prev: &Representation| rep.toggled(prev).map(|i| u64::from(weights[i])).sum())
                .unwrap_or(0);
            cost += g * g;
        }
        out.push(rep.clone());
    }
    Ok(TrellisPath {
        reps: out,
        cost,
        stage_states: stage_widths(codes, basis, false)?,
    })
}

fn replay_lut(
    codes: &[Codeword],
    table: &MappingTable,
    initial: Option<&Representation>,
) -> Result<TrellisPath> {
    let basis = table.basis();
    let initial_mask = check_initial(initial, codes[0], basis)?;
    let kernel = GeKernel::new(basis);
    let first = match initial_mask {
        Some(m) => Representation::from_low_mask(m, basis.len()),
        None => basis.canonical_rep(codes[0])?,
    };
    let mut out = Vec::with_capacity(codes.len());
    let mut cost = 0u64;
    out.push(first);
    for &code in &codes[1..] {
        let prev = out.last().expect("non-empty");
        let next = table.lut_rep(prev, code)?;
        cost += kernel.ge_sq(
            prev.low_mask().expect("bounded length"),
            next.low_mask().expect("bounded length"),
        );
        out.push(next);
    }
    Ok(TrellisPath {
        reps: out,
        cost,
        stage_states: stage_widths(codes, basis, initial_mask.is_some())?,
    })
}

// ---------------------------------------------------------------------------
// Cost re-scoring
// ---------------------------------------------------------------------------

/// Recomputes the summed squared glitch error of a stored path, checking that
/// every representation decodes to its codeword. Equals `path.cost` for any
/// path produced by the mappers.
pub fn mapping_cost_path(codes: &[Codeword], path: &TrellisPath, basis: &Basis) -> Result<u64> {
    if codes.len() != path.reps.len() {
        return Err(Error::InvalidConfig(format!(
            "path has {} representations for {} codes",
            path.reps.len(),
            codes.len()
        )));
    }
    let weights = basis.weights();
    for (rep, &code) in path.reps.iter().zip(codes) {
        let value = decode(rep, basis)?;
        if value != u64::from(code) {
            return Err(Error::Inconsistent {
                decoded: value,
                expected: u64::from(code),
            });
        }
    }
    let mut cost = 0u64;
    for pair in path.reps.windows(2) {
        let g: u64 = pair[0]
            .toggled(&pair[1])
            .map(|i| u64::from(weights[i]))
            .sum();
        cost += g * g;
    }
    Ok(cost)
}

/// Replays a table over a sequence and returns the summed squared glitch
/// error.
pub fn mapping_cost_table(codes: &[Codeword], table: &MappingTable) -> Result<u64> {
    validate_codes(codes, table.basis())?;
    let path = match table {
        MappingTable::Memoryless { .. } => replay_memoryless(codes, table)?,
        MappingTable::GreedyLut { .. } => replay_lut(codes, table, None)?,
    };
    Ok(path.cost)
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

/// Writes a memoryless table as CSV: a header row of the basis weights, then
/// one row per codeword with its bits left to right from switch 0.
pub fn write_memoryless_csv<W: Write>(table: &MappingTable, out: &mut W) -> Result<()> {
    let basis = table.basis();
    let reps = table.memoryless_reps()?;
    writeln!(out, "# bit_depth={}", basis.bit_depth())?;
    let header: Vec<String> = basis.weights().iter().map(|w| w.to_string()).collect();
    writeln!(out, "code,{}", header.join(","))?;
    for (code, rep) in reps.iter().enumerate() {
        let bits: Vec<&str> = (0..rep.len())
            .map(|i| if rep.bit(i) { "1" } else { "0" })
            .collect();
        writeln!(out, "{},{}", code, bits.join(","))?;
    }
    Ok(())
}

/// Reads a table written by [`write_memoryless_csv`].
pub fn read_memoryless_csv<R: BufRead>(input: R) -> Result<MappingTable> {
    let mut bit_depth: Option<u32> = None;
    let mut weights: Option<Vec<u32>> = None;
    let mut rows: Vec<(u32, Representation)> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(value) = rest.trim().strip_prefix("bit_depth=") {
                bit_depth =
                    Some(value.trim().parse().map_err(|_| {
                        Error::InvalidConfig(format!("bad bit_depth line: {line}"))
                    })?);
            }
            continue;
        }
        if weights.is_none() {
            let mut fields = line.split(',');
            let first = fields.next().unwrap_or_default();
            if first != "code" {
                return Err(Error::InvalidConfig(format!(
                    "expected header starting with 'code', got {first:?}"
                )));
            }
            let parsed: std::result::Result<Vec<u32>, _> =
                fields.map(|f| f.trim().parse()).collect();
            weights = Some(
                parsed
                    .map_err(|_| Error::InvalidConfig("header weights must be integers".into()))?,
            );
            continue;
        }
        let mut fields = line.split(',');
        let code: u32 = fields
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad codeword in row: {line}")))?;
        let bits: std::result::Result<Vec<bool>, Error> = fields
            .map(|f| match f.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::InvalidConfig(format!("bad bit {other:?}"))),
            })
            .collect();
        rows.push((code, Representation::from_bits(&bits?)));
    }
    let bit_depth =
        bit_depth.ok_or_else(|| Error::InvalidConfig("missing bit_depth comment".into()))?;
    let weights = weights.ok_or_else(|| Error::InvalidConfig("missing header row".into()))?;
    let basis = Basis::new(weights, bit_depth)?;
    rows.sort_by_key(|(code, _)| *code);
    if rows
        .iter()
        .enumerate()
        .any(|(i, (code, _))| i as u32 != *code)
    {
        return Err(Error::InvalidConfig(
            "table rows must cover each codeword exactly once".into(),
        ));
    }
    MappingTable::memoryless(basis, rows.into_iter().map(|(_, r)| r).collect())
}

const LUT_MAGIC: &[u8; 8] = b"CSDACLUT";
const LUT_VERSION: u8 = 1;

/// Writes a greedy LUT as a little-endian binary blob: magic, version, N, L,
/// the weights, then `2^(N+L)` packed representations in key order
/// (`prev_mask * 2^N + code`). Entries use `ceil((L+1)/8)` bytes; the value
/// `1 << L` marks omitted (out-of-range previous pattern) entries.
pub fn write_greedy_lut<W: Write>(table: &MappingTable, out: &mut W) -> Result<()> {
    let (basis, entries) = match table {
        MappingTable::GreedyLut { basis, entries } => (basis, entries),
        MappingTable::Memoryless { .. } => {
            return Err(Error::InvalidConfig(
                "operation needs a greedy LUT, got a memoryless table".into(),
            ))
        }
    };
    out.write_all(LUT_MAGIC)?;
    out.write_all(&[LUT_VERSION, basis.bit_depth() as u8, basis.len() as u8, 0])?;
    for &w in basis.weights() {
        out.write_all(&w.to_le_bytes())?;
    }
    let entry_bytes = (basis.len() + 1).div_ceil(8);
    let omitted = 1u64 << basis.len();
    for &entry in entries {
        let value = if entry == u32::MAX {
            omitted
        } else {
            u64::from(entry)
        };
        out.write_all(&value.to_le_bytes()[..entry_bytes])?;
    }
    Ok(())
}

/// Reads a blob written by [`write_greedy_lut`], re-validating every entry.
pub fn read_greedy_lut<R: Read>(mut input: R) -> Result<MappingTable> {
    let mut header = [0u8; 12];
    input.read_exact(&mut header)?;
    if &header[..8] != LUT_MAGIC {
        return Err(Error::InvalidConfig("not a greedy LUT blob".into()));
    }
    if header[8] != LUT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported LUT version {}",
            header[8]
        )));
    }
    let bit_depth = u32::from(header[9]);
    let l = usize::from(header[10]);
    let mut weights = Vec::with_capacity(l);
    for _ in 0..l {
        let mut buf = [0u8; 4];
        input.read_exact(&mut buf)?;
        weights.push(u32::from_le_bytes(buf));
    }
    let basis = Basis::new(weights, bit_depth)?;
    if basis.len() != l {
        return Err(Error::InvalidConfig("weight count mismatch".into()));
    }
    let universe = RepUniverse::build(&basis)?;
    let total = 1usize << (bit_depth as usize + l);
    let entry_bytes = (l + 1).div_ceil(8);
    let omitted = 1u64 << l;
    let max_code = basis.max_code();
    let mut entries = vec![u32::MAX; total];
    for (key, slot) in entries.iter_mut().enumerate() {
        let mut buf = [0u8; 8];
        input.read_exact(&mut buf[..entry_bytes])?;
        let value = u64::from_le_bytes(buf);
        let prev = (key >> bit_depth) as u32;
        let code = (key & (basis.num_codewords() as usize - 1)) as u32;
        let prev_valid = universe.wsum[prev as usize] <= max_code;
        if value == omitted {
            if prev_valid {
                return Err(Error::IncompleteTable(code));
            }
            continue;
        }
        if !prev_valid {
            return Err(Error::InvalidConfig(format!(
                "entry stored for out-of-range previous pattern {prev:#x}"
            )));
        }
        if value >= omitted {
            return Err(Error::InvalidConfig(format!(
                "entry {value:#x} has bits beyond the basis length"
            )));
        }
        let mask = value as u32;
        if u64::from(universe.wsum[mask as usize]) != u64::from(code) {
            return Err(Error::Inconsistent {
                decoded: u64::from(universe.wsum[mask as usize]),
                expected: u64::from(code),
            });
        }
        *slot = mask;
    }
    Ok(MappingTable::GreedyLut { basis, entries })
}
