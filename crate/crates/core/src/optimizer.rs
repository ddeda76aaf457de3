//! Simulated-annealing search over switch-weight bases.
//!
//! The search space is every length-`L` weight vector with entries in
//! `[1, 2^N]`, constrained to sum to exactly `2^N - 1` with full codeword
//! coverage. The objective is the exact over-complete glitch metric with
//! representations drawn uniformly; inside the annealing loop it is replaced
//! by a low-variance sampled estimate using common random numbers per
//! restart, and the top candidates are re-ranked with the full objective at
//! the end.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mappers::mix_seed;
use crate::model::{Basis, Codeword, RepDistribution, TransitionModel};
use crate::reps::{metric_overcomplete, RepUniverse};

/// Annealing schedule and search dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct AnnealConfig {
    pub bit_depth: u32,
    pub basis_len: usize,
    /// Moves per restart.
    pub iterations: u32,
    pub restarts: u32,
    /// Starting temperature; calibrated from probe moves when absent.
    pub initial_temperature: Option<f64>,
    /// Geometric cooling factor applied every iteration.
    pub cooling: f64,
    /// Step magnitudes for the neighbor move.
    pub neighbor_steps: Vec<u32>,
    /// Transitions drawn for the sampled objective (common random numbers
    /// within a restart).
    pub objective_samples: u32,
    /// How many best-by-sampled-objective candidates get a full re-evaluation.
    pub top_candidates: u32,
    /// Iterations between best-so-far trace points.
    pub trace_stride: u32,
    pub seed: u64,
}

impl AnnealConfig {
    pub fn new(bit_depth: u32, basis_len: usize, seed: u64) -> Self {
        AnnealConfig {
            bit_depth,
            basis_len,
            iterations: 20_000,
            restarts: 100,
            initial_temperature: None,
            cooling: 0.995,
            neighbor_steps: vec![1, 2, 4],
            objective_samples: 256,
            top_candidates: 10,
            trace_stride: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.bit_depth;
        let l = self.basis_len;
        if n == 0 {
            return Err(Error::InvalidConfig(
                "optimization needs a bit depth of at least 1".into(),
            ));
        }
        if l < n as usize {
            return Err(Error::InvalidConfig(format!(
                "no {l}-switch basis can cover {} codewords (need at least {n} switches)",
                1u64 << n
            )));
        }
        if l as u64 > (1u64 << n) - 1 {
            return Err(Error::InvalidConfig(format!(
                "{l} weights of at least 1 cannot sum to {}",
                (1u64 << n) - 1
            )));
        }
        if l > crate::reps::MAX_UNIVERSE_L {
            return Err(Error::BasisTooLarge {
                len: l,
                max: crate::reps::MAX_UNIVERSE_L,
            });
        }
        if self.iterations < 1 || self.restarts < 1 {
            return Err(Error::InvalidConfig(
                "iterations and restarts must be at least 1".into(),
            ));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::InvalidConfig(
                "cooling factor must lie in (0, 1)".into(),
            ));
        }
        if self.neighbor_steps.is_empty() || self.neighbor_steps.contains(&0) {
            return Err(Error::InvalidConfig(
                "neighbor steps must be non-empty positive integers".into(),
            ));
        }
        if self.objective_samples < 1 {
            return Err(Error::InvalidConfig(
                "objective sampling needs at least 1 transition".into(),
            ));
        }
        Ok(())
    }
}

/// Best-so-far sampled objective, recorded every `trace_stride` iterations.
#[derive(Debug, Clone, Serialize)]
pub struct RestartTrace {
    pub restart: u32,
    pub objective: Vec<f64>,
}

/// Outcome of a full annealing run.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub best: Basis,
    /// Full objective of `best`, freshly re-evaluated.
    pub best_objective: f64,
    pub traces: Vec<RestartTrace>,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy)]
pub enum ObjectiveMode {
    /// Exact evaluation of the expected best-representation glitch power.
    Full,
    /// Estimate from `samples` transitions drawn with the given seed.
    Sampled { samples: u32, seed: u64 },
}

/// Expected glitch power of a basis with uniformly distributed
/// representations and per-transition best target selection.
pub fn objective(basis: &Basis, model: &TransitionModel, mode: ObjectiveMode) -> Result<f64> {
    match mode {
        ObjectiveMode::Full => {
            let dist = RepDistribution::uniform(basis)?;
            Ok(metric_overcomplete(basis, &dist, model)?.raw_metric)
        }
        ObjectiveMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let drawn = draw_samples(model, samples, &mut rng);
            let universe = RepUniverse::build_unsorted(basis)?;
            Ok(sampled_objective(&universe, &drawn))
        }
    }
}

/// One sampled transition: source code, target code, and the uniform variate
/// selecting the source representation.
type Sample = (Codeword, Codeword, f64);

fn draw_samples<R: Rng>(model: &TransitionModel, count: u32, rng: &mut R) -> Vec<Sample> {
    (0..count)
        .map(|_| {
            let (x, y) = model.sample_pair(rng);
            (x, y, rng.gen::<f64>())
        })
        .collect()
}

fn sampled_objective(universe: &RepUniverse, samples: &[Sample]) -> f64 {
    sampled_objective_stats(universe, samples).0
}

/// Returns (mean, 95% confidence half-width) of the sampled squared errors.
fn sampled_objective_stats(universe: &RepUniverse, samples: &[Sample]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &(x, y, u) in samples {
        let group = universe.reps(x);
        let pick = ((u * group.len() as f64) as usize).min(group.len() - 1);
        let a = group[pick];
        let best = universe
            .reps(y)
            .iter()
            .map(|&b| universe.ge(a, b))
            .min()
            .expect("validated bases cover every codeword");
        let sq = (best * best) as f64;
        sum += sq;
        sum_sq += sq * sq;
    }
    let n = samples.len() as f64;
    let mean = sum / n;
    let variance = ((sum_sq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
    (mean, 1.96 * (variance / n).sqrt())
}

/// Uniformly random valid basis: the binary weights split `L - N` times at
/// random points. Splitting preserves the weight sum and can only add
/// representations, so the sum constraint and coverage hold by construction.
pub fn random_valid_basis<R: Rng>(bit_depth: u32, basis_len: usize, rng: &mut R) -> Result<Basis> {
    if bit_depth == 0 || basis_len < bit_depth as usize {
        return Err(Error::InvalidConfig(format!(
            "no valid {basis_len}-switch basis exists at bit depth {bit_depth}"
        )));
    }
    if basis_len as u64 > (1u64 << bit_depth) - 1 {
        return Err(Error::InvalidConfig(format!(
            "{basis_len} weights of at least 1 cannot sum to {}",
            (1u64 << bit_depth) - 1
        )));
    }
    let mut weights: Vec<u32> = (0..bit_depth).map(|i| 1u32 << i).collect();
    while weights.len() < basis_len {
        let splittable: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 1).collect();
        let i = splittable[rng.gen_range(0..splittable.len())];
        let w = weights[i];
        let cut = rng.gen_range(1..w);
        weights[i] = cut;
        weights.push(w - cut);
    }
    Basis::new(weights, bit_depth)
}

const NEIGHBOR_RETRIES: usize = 32;

/// Annealing move: nudge one weight by a random signed step, rebalance
/// another to hold the sum at `2^N - 1`, re-sort, and keep only valid
/// (covering) results. Falls back to a fresh random basis when no retry
/// produces one.
pub fn neighbor<R: Rng>(basis: &Basis, steps: &[u32], rng: &mut R) -> Basis {
    let l = basis.len();
    let n = basis.bit_depth();
    if l < 2 {
        return basis.clone();
    }
    let max = 1i64 << n;
    for _ in 0..NEIGHBOR_RETRIES {
        let i = rng.gen_range(0..l);
        let magnitude = i64::from(steps[rng.gen_range(0..steps.len())]);
        let delta = if rng.gen::<bool>() {
            magnitude
        } else {
            -magnitude
        };
        let old = i64::from(basis.weights()[i]);
        let moved = (old + delta).clamp(1, max);
        let actual = moved - old;
        if actual == 0 {
            continue;
        }
        let j = {
            let j = rng.gen_range(0..l - 1);
            if j >= i {
                j + 1
            } else {
                j
            }
        };
        let rebalanced = i64::from(basis.weights()[j]) - actual;
        if rebalanced < 1 || rebalanced > max {
            continue;
        }
        let mut weights = basis.weights().to_vec();
        weights[i] = moved as u32;
        weights[j] = rebalanced as u32;
        if let Ok(candidate) = Basis::new(weights, n) {
            return candidate;
        }
    }
    random_valid_basis(n, l, rng).expect("dimensions were feasible for the input basis")
}

pub(crate) fn metropolis_accept<R: Rng>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (-delta / temperature).exp()
}

struct RestartOutcome {
    restart: u32,
    best_basis: Basis,
    best_sampled: f64,
    trace: Vec<f64>,
}

/// Median positive probe delta scaled so roughly half of the worsening moves
/// are accepted at the start.
fn calibrate_t0<R: Rng>(
    start: &Basis,
    start_obj: f64,
    samples: &[Sample],
    steps: &[u32],
    rng: &mut R,
) -> f64 {
    let mut worsening: Vec<f64> = Vec::new();
    for _ in 0..32 {
        let probe = neighbor(start, steps, rng);
        if let Ok(universe) = RepUniverse::build_unsorted(&probe) {
            let delta = sampled_objective(&universe, samples) - start_obj;
            if delta > 0.0 {
                worsening.push(delta);
            }
        }
    }
    if worsening.is_empty() {
        return 1.0;
    }
    worsening.sort_by(f64::total_cmp);
    let median = worsening[worsening.len() / 2];
    (median / std::f64::consts::LN_2).max(f64::MIN_POSITIVE)
}

fn run_restart(
    config: &AnnealConfig,
    model: &TransitionModel,
    restart: u32,
) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, u64::from(restart) + 1));
    let samples = draw_samples(model, config.objective_samples, &mut rng);
    let mut current = random_valid_basis(config.bit_depth, config.basis_len, &mut rng)?;
    let mut current_obj = sampled_objective(&RepUniverse::build_unsorted(&current)?, &samples);
    let temperature0 = match config.initial_temperature {
        Some(t) => t,
        None => calibrate_t0(
            &current,
            current_obj,
            &samples,
            &config.neighbor_steps,
            &mut rng,
        ),
    };

    let mut best_basis = current.clone();
    let mut best_obj = current_obj;
    let mut trace = vec![best_obj];
    let mut temperature = temperature0;
    for iteration in 0..config.iterations {
        let candidate = neighbor(&current, &config.neighbor_steps, &mut rng);
        let candidate_obj = sampled_objective(&RepUniverse::build_unsorted(&candidate)?, &samples);
        if metropolis_accept(candidate_obj - current_obj, temperature, &mut rng) {
            current = candidate;
            current_obj = candidate_obj;
            if current_obj < best_obj {
                best_obj = current_obj;
                best_basis = current.clone();
            }
        }
        temperature *= config.cooling;
        if (iteration + 1) % config.trace_stride == 0 {
            trace.push(best_obj);
        }
    }
    Ok(RestartOutcome {
        restart,
        best_basis,
        best_sampled: best_obj,
        trace,
    })
}

/// Multi-restart simulated annealing. Restarts run concurrently on
/// independent seeded streams; the reduction is deterministic (best full
/// objective, then lowest restart index), so results depend only on the
/// configuration.
pub fn anneal(config: &AnnealConfig, model: &TransitionModel) -> Result<SearchResult> {
    config.validate()?;
    if model.bit_depth() != config.bit_depth {
        return Err(Error::InvalidModel(format!(
            "model depth {} does not match configured depth {}",
            model.bit_depth(),
            config.bit_depth
        )));
    }
    let started = Instant::now();
    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(config, model, r))
        .collect::<Result<Vec<_>>>()?;

    // rank by sampled objective, then give the leaders a full evaluation
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        outcomes[a]
            .best_sampled
            .total_cmp(&outcomes[b].best_sampled)
            .then(outcomes[a].restart.cmp(&outcomes[b].restart))
    });
    let shortlist = order
        .into_iter()
        .take(config.top_candidates.max(1) as usize);
    let mut best: Option<(f64, u32, usize)> = None;
    for idx in shortlist {
        let full = objective(&outcomes[idx].best_basis, model, ObjectiveMode::Full)?;
        let key = (full, outcomes[idx].restart, idx);
        match best {
            Some((bf, br, _)) if (bf, br) <= (full, outcomes[idx].restart) => {}
            _ => best = Some(key),
        }
    }
    let (best_objective, _, best_idx) = best.expect("at least one restart ran");
    let traces = outcomes
        .iter()
        .map(|o| RestartTrace {
            restart: o.restart,
            objective: o.trace.clone(),
        })
        .collect();
    Ok(SearchResult {
        best: outcomes[best_idx].best_basis.clone(),
        best_objective,
        traces,
        wall_time: started.elapsed(),
    })
}
