//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured figures (run with `--nocapture` to see them).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csdac_core::mappers::{canonical_table, greedy_map, memoryless_solve, viterbi_map, Mapper};
use csdac_core::model::{glitch_error, Basis, Codeword, Representation, TransitionModel};
use csdac_core::optimizer::{anneal, objective, random_valid_basis, AnnealConfig, ObjectiveMode};
use csdac_core::reps::{enumerate_reps, metric_complete, metric_monte_carlo, rep_counts};
use csdac_core::sim::{
    run_experiment, synthesize, zoh_reference, EdgeModel, EdgeShape, StimulusConfig, StimulusKind,
};
use csdac_core::{presets, thermometer_metric};

fn rep(s: &str) -> Representation {
    s.parse().unwrap()
}

/// Criterion 1: the mid-scale transition costs on the published mappings are
/// exact integers — 3 on the optimized 12-switch basis, 63 on the 12-switch
/// segmented one.
#[test]
fn criterion_1_midscale_transition_costs() {
    let optimized = presets::reference_optimized(12).unwrap();
    // published memoryless rows for codes 127 and 128
    let r127 = rep("100001001110");
    let r128 = rep("010001001110");
    assert_eq!(csdac_core::model::decode(&r127, &optimized).unwrap(), 127);
    assert_eq!(csdac_core::model::decode(&r128, &optimized).unwrap(), 128);
    let optimized_cost = glitch_error(&r127, &r128, &optimized).unwrap();
    assert_eq!(optimized_cost, 3);

    // our own memoryless solve must match or beat that transition (the
    // deterministic canonical-start restart reaches cost 1)
    let model = TransitionModel::uniform(8);
    let table = memoryless_solve(&optimized, &model, 1, 0).unwrap();
    let ours = glitch_error(
        table.rep_for(127).unwrap(),
        table.rep_for(128).unwrap(),
        &optimized,
    )
    .unwrap();
    assert!(ours <= 3, "solved table costs {ours} on 127->128");

    let segmented = presets::segmented(3, 5).unwrap();
    let canon = canonical_table(&segmented).unwrap();
    let segmented_cost = glitch_error(
        canon.rep_for(127).unwrap(),
        canon.rep_for(128).unwrap(),
        &segmented,
    )
    .unwrap();
    assert_eq!(segmented_cost, 63);
    println!(
        "acceptance criterion 1: PASS (optimized 127->128 = {optimized_cost}, solved = {ours}, segmented = {segmented_cost})"
    );
}

/// Criterion 2: 100-restart annealing reproduces the reference bases within
/// 5% of their exact objective at every length 9..=13.
#[test]
fn criterion_2_annealer_matches_reference_bases() {
    let model = TransitionModel::uniform(8);
    let mut summary = Vec::new();
    for l in 9..=13usize {
        let reference = presets::reference_optimized(l).unwrap();
        let reference_objective = objective(&reference, &model, ObjectiveMode::Full).unwrap();
        let mut config = AnnealConfig::new(8, l, 7);
        config.restarts = 100;
        config.iterations = 3_000;
        config.objective_samples = 192;
        config.trace_stride = 500;
        let result = anneal(&config, &model).unwrap();
        assert!(result.best.is_full_scale_exact(), "L={l} sum constraint");
        assert_eq!(result.best.len(), l);
        // coverage is enforced by the Basis type; re-derive the counts as an
        // explicit check
        assert!(rep_counts(&result.best).unwrap().iter().all(|&c| c >= 1));
        let ratio = result.best_objective / reference_objective;
        assert!(
            ratio <= 1.05,
            "L={l}: annealed {} vs reference {} (ratio {ratio:.4})",
            result.best_objective,
            reference_objective
        );
        summary.push(format!("L={l} ratio {ratio:.4}"));
    }
    println!("acceptance criterion 2: PASS ({})", summary.join(", "));
}

/// Criterion 3: metric crossovers against the 19-switch segmented reference
/// under uniform transitions — optimal mapping wins with 10 switches, greedy
/// with 11, memoryless with 13.
#[test]
fn criterion_3_metric_crossovers() {
    let model = TransitionModel::uniform(8);
    let segmented = presets::segmented(4, 4).unwrap();
    assert_eq!(segmented.len(), 19);
    let segmented_metric =
        metric_complete(&segmented, &canonical_table(&segmented).unwrap(), &model).unwrap();

    let viterbi = metric_monte_carlo(
        &presets::reference_optimized(10).unwrap(),
        &Mapper::Viterbi,
        &model,
        100_000,
        1,
    )
    .unwrap();
    assert!(
        viterbi.raw_metric + viterbi.ci_halfwidth.unwrap() < segmented_metric.raw_metric,
        "optimal mapping at L=10: {} +- {} vs segmented {}",
        viterbi.raw_metric,
        viterbi.ci_halfwidth.unwrap(),
        segmented_metric.raw_metric
    );

    let greedy = metric_monte_carlo(
        &presets::reference_optimized(11).unwrap(),
        &Mapper::Greedy,
        &model,
        100_000,
        1,
    )
    .unwrap();
    assert!(
        greedy.raw_metric + greedy.ci_halfwidth.unwrap() < segmented_metric.raw_metric,
        "greedy at L=11: {} +- {} vs segmented {}",
        greedy.raw_metric,
        greedy.ci_halfwidth.unwrap(),
        segmented_metric.raw_metric
    );

    let basis13 = presets::reference_optimized(13).unwrap();
    let table13 = memoryless_solve(&basis13, &model, 8, 5).unwrap();
    let memoryless = metric_complete(&basis13, &table13, &model).unwrap();
    assert!(
        memoryless.raw_metric < segmented_metric.raw_metric,
        "memoryless at L=13: {} vs segmented {}",
        memoryless.raw_metric,
        segmented_metric.raw_metric
    );
    println!(
        "acceptance criterion 3: PASS (segmented {:.1}; viterbi@10 {:.1}+-{:.1}, greedy@11 {:.1}+-{:.1}, memoryless@13 {:.1})",
        segmented_metric.raw_metric,
        viterbi.raw_metric,
        viterbi.ci_halfwidth.unwrap(),
        greedy.raw_metric,
        greedy.ci_halfwidth.unwrap(),
        memoryless.raw_metric
    );
}

/// Exhaustive minimum over all representation paths, on packed masks.
fn exhaustive_min_cost(codes: &[Codeword], basis: &Basis) -> u64 {
    let l = basis.len();
    let mut wsum = vec![0u64; 1 << l];
    for mask in 1..1usize << l {
        let lsb = mask.trailing_zeros() as usize;
        wsum[mask] = wsum[mask ^ (1 << lsb)] + u64::from(basis.weights()[lsb]);
    }
    let reps_per_code: Vec<Vec<u64>> = codes
        .iter()
        .map(|&c| {
            enumerate_reps(c, basis)
                .unwrap()
                .reps
                .iter()
                .map(|r| r.low_mask().unwrap())
                .collect()
        })
        .collect();
    fn walk(
        stage: usize,
        prev: Option<u64>,
        acc: u64,
        reps: &[Vec<u64>],
        wsum: &[u64],
        best: &mut u64,
    ) {
        if acc >= *best {
            return; // cannot improve: costs only grow
        }
        if stage == reps.len() {
            *best = acc;
            return;
        }
        for &mask in &reps[stage] {
            let step = match prev {
                Some(p) => {
                    let g = wsum[(p ^ mask) as usize];
                    g * g
                }
                None => 0,
            };
            walk(stage + 1, Some(mask), acc + step, reps, wsum, best);
        }
    }
    let mut best = u64::MAX;
    walk(0, None, 0, &reps_per_code, &wsum, &mut best);
    best
}

/// Criterion 4: trellis optimality against exhaustive search on 200 random
/// instances, and exact dominance over greedy and memoryless on 100 random
/// length-1000 sequences.
#[test]
fn criterion_4_viterbi_optimality_and_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut instances = 0;
    while instances < 200 {
        let n = rng.gen_range(4..=8u32);
        let extra = rng.gen_range(1..=3usize);
        let l = (n as usize + extra).min(12);
        let basis = random_valid_basis(n, l, &mut rng).unwrap();
        let len = rng.gen_range(2..=8usize);
        let codes: Vec<Codeword> = (0..len)
            .map(|_| rng.gen_range(0..basis.num_codewords()))
            .collect();
        let paths: u128 = codes
            .iter()
            .map(|&c| rep_counts(&basis).unwrap()[c as usize] as u128)
            .product();
        if paths > 200_000 {
            continue; // resample: exhaustive oracle must stay tractable
        }
        instances += 1;
        let best = viterbi_map(&codes, &basis, None).unwrap();
        let oracle = exhaustive_min_cost(&codes, &basis);
        assert_eq!(
            best.cost,
            oracle,
            "basis {:?} codes {codes:?}",
            basis.weights()
        );
    }

    let basis = presets::reference_optimized(12).unwrap();
    let model = TransitionModel::uniform(8);
    let table = memoryless_solve(&basis, &model, 4, 9).unwrap();
    for _ in 0..100 {
        let codes: Vec<Codeword> = (0..1000).map(|_| rng.gen_range(0..256)).collect();
        let v = viterbi_map(&codes, &basis, None).unwrap().cost;
        let g = greedy_map(&codes, &basis, None).unwrap().cost;
        let m = csdac_core::mappers::mapping_cost_table(&codes, &table).unwrap();
        assert!(v <= g, "viterbi {v} > greedy {g}");
        assert!(v <= m, "viterbi {v} > memoryless {m}");
    }
    println!("acceptance criterion 4: PASS (200 exhaustive matches, 100 dominance sequences)");
}

/// Criterion 5: canonical thermometer mapping realizes glitch error |x - y|
/// on every codeword pair up to 8 bits, making its normalized metric exactly
/// one.
#[test]
fn criterion_5_thermometer_equivalence() {
    for n in 1..=8u32 {
        let basis = presets::thermometer(n).unwrap();
        let table = canonical_table(&basis).unwrap();
        let reps = table.memoryless_reps().unwrap();
        let codes = basis.num_codewords();
        for x in 0..codes as usize {
            for y in 0..codes as usize {
                let g = glitch_error(&reps[x], &reps[y], &basis).unwrap();
                assert_eq!(
                    g,
                    (x as i64 - y as i64).unsigned_abs(),
                    "n={n} pair ({x},{y})"
                );
            }
        }
        let model = TransitionModel::uniform(n);
        let report = metric_complete(&basis, &table, &model).unwrap();
        assert!(
            (report.normalized_metric - 1.0).abs() < 1e-12,
            "n={n} normalized {}",
            report.normalized_metric
        );
        assert!((report.raw_metric - thermometer_metric(&model)).abs() < 1e-9);
    }

    // unary stays the observed floor across the reference configurations
    let model = TransitionModel::uniform(8);
    let therm = thermometer_metric(&model);
    for basis in [
        presets::binary(8).unwrap(),
        presets::segmented(2, 6).unwrap(),
        presets::segmented(3, 5).unwrap(),
        presets::segmented(4, 4).unwrap(),
    ] {
        let report = metric_complete(&basis, &canonical_table(&basis).unwrap(), &model).unwrap();
        assert!(report.raw_metric >= therm - 1e-9);
    }
    println!("acceptance criterion 5: PASS (all 65,536 8-bit pairs exact, normalized metric 1)");
}

/// Criterion 6: enumeration equals a full `2^L` scan on 100 random bases,
/// and the representation counts of every full-scale-exact basis sum to
/// `2^L`.
#[test]
fn criterion_6_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let n = rng.gen_range(4..=8u32);
        let max_l = 16usize.min((1 << n) - 1);
        let l = rng.gen_range(n as usize..=max_l);
        let mut basis = random_valid_basis(n, l, &mut rng).unwrap();
        let full_scale = case % 3 != 0;
        if !full_scale {
            // bump one weight; keep it only if coverage survives
            let mut weights = basis.weights().to_vec();
            let i = rng.gen_range(0..weights.len());
            weights[i] = (weights[i] + rng.gen_range(1..=4)).min(1 << n);
            if let Ok(bumped) = Basis::new(weights, n) {
                basis = bumped;
            }
        }

        // full scan of every switch pattern
        let l = basis.len();
        let mut by_code: Vec<Vec<u64>> = vec![Vec::new(); basis.num_codewords() as usize];
        let mut wsum = vec![0u64; 1 << l];
        for mask in 1..1usize << l {
            let lsb = mask.trailing_zeros() as usize;
            wsum[mask] = wsum[mask ^ (1 << lsb)] + u64::from(basis.weights()[lsb]);
        }
        for (mask, &value) in wsum.iter().enumerate() {
            if value <= u64::from(basis.max_code()) {
                by_code[value as usize].push(mask as u64);
            }
        }
        let mut total = 0u64;
        for code in 0..=basis.max_code() {
            let set = enumerate_reps(code, &basis).unwrap();
            let mut got: Vec<u64> = set.reps.iter().map(|r| r.low_mask().unwrap()).collect();
            got.sort_unstable();
            let mut expected = by_code[code as usize].clone();
            expected.sort_unstable();
            assert_eq!(got, expected, "basis {:?} code {code}", basis.weights());
            total += set.len() as u64;
        }
        if basis.is_full_scale_exact() {
            assert_eq!(total, 1u64 << l, "basis {:?}", basis.weights());
        }
    }
    println!("acceptance criterion 6: PASS (100 bases scanned)");
}

/// Criterion 7: simulator sanity — zero skew reproduces the hold exactly,
/// error energy is linear in the skew, and SNDR/SFDR are grid-independent
/// beyond OSR 64.
#[test]
fn criterion_7_simulator_sanity() {
    // zero-skew equivalence, including equal non-zero delays
    let basis = presets::segmented(3, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let codes: Vec<Codeword> = (0..64).map(|_| rng.gen_range(0..256)).collect();
    let reps: Vec<Representation> = codes
        .iter()
        .map(|&c| basis.canonical_rep(c).unwrap())
        .collect();
    for tau in [0.0, 0.2, -0.31] {
        let edges = EdgeModel::new(tau, tau, EdgeShape::IdealStep).unwrap();
        let wave = synthesize(&codes, &reps, &basis, &edges, 64).unwrap();
        assert_eq!(wave, zoh_reference(&codes, 64), "tau {tau}");
    }

    // energy slope vs skew on log-log axes
    let binary = presets::binary(8).unwrap();
    let stim = StimulusConfig {
        kind: StimulusKind::PrbsCodes,
        num_samples: 256,
        osr: 64,
    };
    let (prbs, _) = stim.generate(8, 9).unwrap();
    let prbs_reps: Vec<Representation> = prbs
        .iter()
        .map(|&c| binary.canonical_rep(c).unwrap())
        .collect();
    let reference = zoh_reference(&prbs, 64);
    let mut points = Vec::new();
    for k in 1..=10u32 {
        let tau = f64::from(k) / 64.0;
        let edges = EdgeModel::skewed_on(tau).unwrap();
        let wave = synthesize(&prbs, &prbs_reps, &binary, &edges, 64).unwrap();
        let energy: f64 = wave
            .iter()
            .zip(&reference)
            .map(|(&w, &r)| (w - r) * (w - r))
            .sum::<f64>()
            / 64.0;
        points.push((tau.ln(), energy.ln()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope - 1.0).abs() <= 0.05, "slope {slope}");

    // grid independence at OSR >= 64
    let edges = EdgeModel::skewed_on(0.02).unwrap();
    for (basis, mapper) in [
        (presets::segmented(4, 4).unwrap(), Mapper::Canonical),
        (presets::reference_optimized(13).unwrap(), Mapper::Viterbi),
    ] {
        let coarse = run_experiment(
            &basis,
            &mapper,
            &StimulusConfig::coherent_sine(31, 1024, 1024, 64),
            &edges,
            2,
        )
        .unwrap();
        let fine = run_experiment(
            &basis,
            &mapper,
            &StimulusConfig::coherent_sine(31, 1024, 1024, 128),
            &edges,
            2,
        )
        .unwrap();
        assert!(
            (coarse.sndr_db - fine.sndr_db).abs() < 0.1,
            "SNDR {} vs {}",
            coarse.sndr_db,
            fine.sndr_db
        );
        assert!(
            (coarse.sfdr_db.unwrap() - fine.sfdr_db.unwrap()).abs() < 0.1,
            "SFDR {} vs {}",
            coarse.sfdr_db.unwrap(),
            fine.sfdr_db.unwrap()
        );
    }
    println!("acceptance criterion 7: PASS (zero-skew exact, slope {slope:.4}, grid-independent)");
}

/// Criterion 8: SFDR ordering thermometer >= segmented >= binary at every
/// swept skew, with the 13-switch memoryless design within 3 dB of the
/// segmented reference.
#[test]
fn criterion_8_sfdr_ordering() {
    let stim = StimulusConfig::coherent_sine(31, 1024, 1024, 64);
    let model = TransitionModel::uniform(8);
    let thermometer = presets::thermometer(8).unwrap();
    let segmented = presets::segmented(4, 4).unwrap();
    let binary = presets::binary(8).unwrap();
    let basis13 = presets::reference_optimized(13).unwrap();
    let table13 = memoryless_solve(&basis13, &model, 8, 5).unwrap();
    let mut lines = Vec::new();
    for tau in [0.01, 0.02, 0.05, 0.1] {
        let edges = EdgeModel::skewed_on(tau).unwrap();
        let sfdr = |basis: &Basis, mapper: &Mapper| -> f64 {
            run_experiment(basis, mapper, &stim, &edges, 2)
                .unwrap()
                .sfdr_db
                .unwrap()
        };
        let t = sfdr(&thermometer, &Mapper::Canonical);
        let s = sfdr(&segmented, &Mapper::Canonical);
        let b = sfdr(&binary, &Mapper::Canonical);
        let o = sfdr(&basis13, &Mapper::Table(table13.clone()));
        assert!(t >= s, "tau {tau}: thermometer {t} < segmented {s}");
        assert!(s >= b, "tau {tau}: segmented {s} < binary {b}");
        assert!(
            (o - s).abs() <= 3.0,
            "tau {tau}: optimized {o} vs segmented {s}"
        );
        lines.push(format!(
            "tau {tau}: 8T {t:.1} >= 4T+4B {s:.1} >= 8B {b:.1}, opt13 {o:.1}"
        ));
    }
    println!("acceptance criterion 8: PASS ({})", lines.join("; "));
}

fn rank_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0usize; values.len()];
    for (rank, &i) in idx.iter().enumerate() {
        ranks[i] = rank;
    }
    ranks
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = rank_order(a);
    let rb = rank_order(b);
    let n = a.len() as f64;
    let d2: f64 = ra
        .iter()
        .zip(&rb)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Criterion 9: simulated SNDR is consistent with the glitch metric — it is
/// non-decreasing over the reference lengths under optimal mapping, and its
/// rank order across architectures is exactly inverse to the metric's.
///
/// The skew is split across both edge directions here so that on- and
/// off-going toggles both contribute, matching what the toggled-weight
/// metric counts; the metric is conditioned on the stimulus's own transition
/// statistics (the exact per-transition mean squared glitch cost of each
/// configuration on the test sequence).
#[test]
fn criterion_9_sndr_consistency() {
    let stim = StimulusConfig::coherent_sine(31, 1024, 1024, 64);
    let edges = EdgeModel::symmetric(0.02).unwrap();

    // (a) non-decreasing SNDR over the reference lengths under optimal
    // mapping, 0.1 dB slack
    let mut previous = f64::NEG_INFINITY;
    let mut by_length = Vec::new();
    for l in 9..=13usize {
        let basis = presets::reference_optimized(l).unwrap();
        let sndr = run_experiment(&basis, &Mapper::Viterbi, &stim, &edges, 2)
            .unwrap()
            .sndr_db;
        assert!(
            sndr >= previous - 0.1,
            "L={l}: SNDR {sndr} fell below {previous}"
        );
        by_length.push(format!("L={l} {sndr:.2}"));
        previous = sndr;
    }

    // (b) exact inverse rank order between the stimulus-conditioned metric
    // and SNDR across binary / segmented / optimized / unary architectures
    let model = TransitionModel::uniform(8);
    let basis13 = presets::reference_optimized(13).unwrap();
    let table13 = memoryless_solve(&basis13, &model, 8, 5).unwrap();
    let (codes, _) = stim.generate(8, 2).unwrap();
    let configs: Vec<(&str, Basis, Mapper)> = vec![
        ("8B", presets::binary(8).unwrap(), Mapper::Canonical),
        (
            "2T+6B",
            presets::segmented(2, 6).unwrap(),
            Mapper::Canonical,
        ),
        (
            "3T+5B",
            presets::segmented(3, 5).unwrap(),
            Mapper::Canonical,
        ),
        (
            "4T+4B",
            presets::segmented(4, 4).unwrap(),
            Mapper::Canonical,
        ),
        (
            "opt10-viterbi",
            presets::reference_optimized(10).unwrap(),
            Mapper::Viterbi,
        ),
        ("opt13-viterbi", basis13.clone(), Mapper::Viterbi),
        ("opt13-memoryless", basis13.clone(), Mapper::Table(table13)),
        ("8T", presets::thermometer(8).unwrap(), Mapper::Canonical),
    ];
    let mut metrics = Vec::new();
    let mut sndrs = Vec::new();
    for (_, basis, mapper) in &configs {
        let path = mapper.map_sequence(&codes, basis, None).unwrap();
        metrics.push(path.cost as f64 / (codes.len() - 1) as f64);
        sndrs.push(
            run_experiment(basis, mapper, &stim, &edges, 2)
                .unwrap()
                .sndr_db,
        );
    }
    let rho = spearman(&metrics, &sndrs);
    assert!(
        (rho + 1.0).abs() < 1e-12,
        "Spearman {rho}; metrics {metrics:?} sndrs {sndrs:?}"
    );
    println!(
        "acceptance criterion 9: PASS ({}; Spearman {rho:.2} over {} configurations)",
        by_length.join(", "),
        configs.len()
    );
}
